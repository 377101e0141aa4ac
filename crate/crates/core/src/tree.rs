//! Boundary recursions on tree-shaped interaction graphs.

use std::collections::VecDeque;

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use serde_json::json;

use crate::error::{domain, invalid, LllError, Result};
use crate::graph::InteractionGraph;
use crate::rational::{fmt_decimal, fmt_exact, int, Rational};

/// Where to hang the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Root {
    Right(usize),
    /// A fresh right root is attached above this left vertex.
    Left(usize),
}

/// A tree interaction graph rooted at a right vertex whose leaves are all right vertices.
///
/// Left vertices without right children receive a fresh right leaf. Padded right
/// vertices are numbered after the original ones.
#[derive(Debug, Clone)]
pub struct RootedTree {
    graph: InteractionGraph,
    original_n: usize,
    root: usize,
    right_children: Vec<Vec<usize>>,
    left_children: Vec<Vec<usize>>,
    postorder: Vec<usize>,
}

impl RootedTree {
    pub fn new(g: &InteractionGraph, root: Root) -> Result<Self> {
        if g.m() == 0 {
            return invalid("tree needs at least one left vertex");
        }
        if !g.is_tree() {
            return invalid("interaction graph is not a tree");
        }
        let (m, n) = (g.m(), g.n());
        let mut edges = g.edges();
        let mut n_total = n;
        let root_right = match root {
            Root::Right(j) if j < n => j,
            Root::Right(j) => return invalid(format!("root {} is not a right vertex", j + 1)),
            Root::Left(i) if i < m => {
                edges.push((i, n_total));
                n_total += 1;
                n_total - 1
            }
            Root::Left(i) => return invalid(format!("root {} is not a left vertex", i + 1)),
        };
        // Orient from the root, then pad childless left vertices.
        let base = InteractionGraph::new(m, n_total, &edges)?;
        let mut right_children = vec![Vec::new(); n_total];
        let mut left_children = vec![Vec::new(); m];
        let mut seen_left = vec![false; m];
        let mut seen_right = vec![false; n_total];
        seen_right[root_right] = true;
        let mut queue = VecDeque::from([root_right]);
        while let Some(j) = queue.pop_front() {
            for &i in base.right_neighbors(j) {
                if seen_left[i] {
                    continue;
                }
                seen_left[i] = true;
                right_children[j].push(i);
                for &k in base.left_neighbors(i) {
                    if !seen_right[k] {
                        seen_right[k] = true;
                        left_children[i].push(k);
                        queue.push_back(k);
                    }
                }
            }
        }
        for i in 0..m {
            if left_children[i].is_empty() {
                edges.push((i, n_total));
                left_children[i].push(n_total);
                right_children.push(Vec::new());
                n_total += 1;
            }
        }
        let graph = InteractionGraph::new(m, n_total, &edges)?;
        let mut postorder = Vec::with_capacity(n_total);
        Self::visit(root_right, &right_children, &left_children, &mut postorder);
        Ok(RootedTree { graph, original_n: n, root: root_right, right_children, left_children, postorder })
    }

    fn visit(j: usize, rc: &[Vec<usize>], lc: &[Vec<usize>], out: &mut Vec<usize>) {
        for &i in &rc[j] {
            for &k in &lc[i] {
                Self::visit(k, rc, lc, out);
            }
        }
        out.push(j);
    }

    /// Padded graph.
    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Number of right vertices of the input graph; higher indices are padding.
    pub fn original_n(&self) -> usize {
        self.original_n
    }

    /// 𝒞_j for a right vertex.
    pub fn right_children(&self, j: usize) -> &[usize] {
        &self.right_children[j]
    }

    /// 𝒞_i for a left vertex.
    pub fn left_children(&self, i: usize) -> &[usize] {
        &self.left_children[i]
    }

    /// Right vertices in post-order (children before parents, smaller indices first).
    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }
}

/// Symmetric (t,k)-regular tree truncated at bipartite distance `depth` from a right root:
/// right vertices have t left neighbours and left vertices have k right neighbours.
pub fn regular_tree(t: usize, k: usize, depth: usize) -> Result<InteractionGraph> {
    if t < 1 || k < 1 {
        return invalid("regular tree needs t >= 1 and k >= 1");
    }
    let (mut m, mut n) = (0usize, 1usize);
    let mut edges = Vec::new();
    // Frontier entries: (vertex, is_right, level).
    let mut frontier = VecDeque::from([(0usize, true, 0usize)]);
    while let Some((v, is_right, level)) = frontier.pop_front() {
        if level == depth {
            continue;
        }
        if is_right {
            let fan = if level == 0 { t } else { t - 1 };
            for _ in 0..fan {
                edges.push((m, v));
                frontier.push_back((m, false, level + 1));
                m += 1;
            }
        } else {
            for _ in 0..k - 1 {
                edges.push((v, n));
                frontier.push_back((n, true, level + 1));
                n += 1;
            }
        }
    }
    InteractionGraph::new(m, n, &edges)
}

/// Outcome of a bottom-up tree recursion. `q[j]` is `None` for vertices not reached.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSolution<T> {
    pub feasible: bool,
    pub q: Vec<Option<T>>,
    /// First right vertex in post-order that violates its bound.
    pub failing: Option<usize>,
}

pub type TreeBoundSolution = TreeSolution<Rational>;
pub type TreeDimSolution = TreeSolution<BigInt>;

impl TreeSolution<Rational> {
    pub fn to_json(&self) -> serde_json::Value {
        let q: Vec<serde_json::Value> = self
            .q
            .iter()
            .map(|x| match x {
                Some(v) => json!({"exact": fmt_exact(v), "decimal": fmt_decimal(v, 12)}),
                None => serde_json::Value::Null,
            })
            .collect();
        json!({"feasible": self.feasible, "q": q, "failing": self.failing.map(|j| j + 1)})
    }
}

impl TreeSolution<BigInt> {
    pub fn to_json(&self) -> serde_json::Value {
        let q: Vec<serde_json::Value> = self
            .q
            .iter()
            .map(|x| x.as_ref().map_or(serde_json::Value::Null, |v| json!(v.to_string())))
            .collect();
        json!({"feasible": self.feasible, "q": q, "failing": self.failing.map(|j| j + 1)})
    }
}

fn check_r(tree: &RootedTree, r: &[Rational]) -> Result<()> {
    if r.len() != tree.graph.m() {
        return invalid(format!("vector has length {}, tree has {} left vertices", r.len(), tree.graph.m()));
    }
    if r.iter().any(|x| x.is_negative() || *x > Rational::one()) {
        return invalid("relative dimensions must lie in [0,1]");
    }
    Ok(())
}

/// q_j = Σ_{i∈𝒞_j} r_i ∏_{k∈𝒞_i} 1/(1−q_k), leaves 0; feasible iff every q_j < 1.
pub fn tree_fixed_point(tree: &RootedTree, r: &[Rational]) -> Result<TreeBoundSolution> {
    check_r(tree, r)?;
    let one = Rational::one();
    let mut q: Vec<Option<Rational>> = vec![None; tree.graph.n()];
    for &j in &tree.postorder {
        let mut s = Rational::zero();
        for &i in tree.right_children(j) {
            let mut term = r[i].clone();
            for &k in tree.left_children(i) {
                let qk = q[k].as_ref().expect("children first");
                term /= &one - qk;
            }
            s += term;
        }
        let bad = s >= one;
        q[j] = Some(s);
        if bad {
            return Ok(TreeSolution { feasible: false, q, failing: Some(j) });
        }
    }
    Ok(TreeSolution { feasible: true, q, failing: None })
}

/// Integer recursion q_j = Σ_{i∈𝒞_j} ⌊r_i·d_j·∏_{j'∈𝒞_i} d_{j'}/(d_{j'}−q_{j'})⌋;
/// feasible iff every q_j < d_j. `dims` covers the original right vertices; padding uses 1.
pub fn tree_dim_recursion(tree: &RootedTree, r: &[Rational], dims: &[u64]) -> Result<TreeDimSolution> {
    check_r(tree, r)?;
    let n = tree.graph.n();
    if dims.len() != tree.original_n && dims.len() != n {
        return invalid(format!("expected {} dimensions, got {}", tree.original_n, dims.len()));
    }
    if dims.contains(&0) {
        return invalid("dimensions must be positive");
    }
    let mut d: Vec<BigInt> = dims.iter().map(|&x| BigInt::from(x)).collect();
    d.extend(std::iter::repeat_n(BigInt::one(), n - d.len()));
    let mut q: Vec<Option<BigInt>> = vec![None; n];
    for &j in &tree.postorder {
        let mut s = BigInt::zero();
        for &i in tree.right_children(j) {
            let mut term = &r[i] * Rational::from_integer(d[j].clone());
            for &k in tree.left_children(i) {
                let qk = q[k].as_ref().expect("children first");
                term *= Rational::new(d[k].clone(), &d[k] - qk);
            }
            s += term.floor().to_integer();
        }
        let bad = s >= d[j];
        q[j] = Some(s);
        if bad {
            return Ok(TreeSolution { feasible: false, q, failing: Some(j) });
        }
    }
    Ok(TreeSolution { feasible: true, q, failing: None })
}

/// Boundary threshold of the infinite (t,k)-regular tree: (k−1)^{k−1} / ((t−1)·k^k).
pub fn regular_tree_threshold(t: u32, k: u32) -> Result<Rational> {
    if t < 2 || k < 1 {
        return invalid("regular_tree_threshold needs t >= 2 and k >= 1");
    }
    let km1 = BigInt::from(k - 1);
    let num = if k == 1 { BigInt::one() } else { num::pow(km1, (k - 1) as usize) };
    let den = BigInt::from(t - 1) * num::pow(BigInt::from(k), k as usize);
    Ok(Rational::new(num, den))
}

/// λ such that λ·r is on the tree boundary, to within `tol`.
pub fn tree_boundary_scale(tree: &RootedTree, r: &[Rational], tol: &Rational) -> Result<Rational> {
    check_r(tree, r)?;
    if !tol.is_positive() {
        return invalid("tolerance must be positive");
    }
    let rmax = r.iter().max().cloned().unwrap_or_else(Rational::zero);
    if !rmax.is_positive() {
        return invalid("direction vector must have a positive entry");
    }
    let feasible = |l: &Rational| -> Result<bool> {
        let v: Vec<Rational> = r.iter().map(|x| x * l).collect();
        Ok(tree_fixed_point(tree, &v)?.feasible)
    };
    let mut hi = rmax.recip();
    if feasible(&hi)? {
        return domain(format!("λ·r leaves (0,1]^m at λ = {} before reaching the boundary", fmt_exact(&hi)));
    }
    let mut lo = Rational::zero();
    let two = int(2);
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / &two;
        if feasible(&mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Convenience: builds a rooted tree, failing with a clear message when `g` is not a tree.
pub fn rooted(g: &InteractionGraph, root: Option<Root>) -> Result<RootedTree> {
    let root = match root {
        Some(r) => r,
        None if g.n() > 0 => Root::Right(0),
        None => Root::Left(0),
    };
    RootedTree::new(g, root).map_err(|e| match e {
        LllError::Invalid(msg) => LllError::Invalid(format!("tree input: {msg}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::bits;
    use crate::rational::ratio;
    use crate::shearer::{ind_poly, shearer_check};
    use proptest::prelude::*;

    fn chain() -> InteractionGraph {
        // j0 – i1 – j1 – i2 – j2
        InteractionGraph::new(2, 3, &[(0, 0), (0, 1), (1, 1), (1, 2)]).unwrap()
    }

    fn star() -> InteractionGraph {
        // Root j0 with left children i1, i2, each with a private leaf.
        InteractionGraph::new(2, 3, &[(0, 0), (1, 0), (0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn chain_fixed_point() {
        let t = rooted(&chain(), None).unwrap();
        let s = tree_fixed_point(&t, &[ratio(1, 4), ratio(1, 4)]).unwrap();
        assert!(s.feasible);
        assert_eq!(s.q[0], Some(ratio(1, 3)));
        assert_eq!(s.q[1], Some(ratio(1, 4)));
        assert_eq!(s.q[2], Some(int(0)));
    }

    #[test]
    fn star_is_infeasible_at_root() {
        let t = rooted(&star(), None).unwrap();
        let s = tree_fixed_point(&t, &[ratio(1, 2), ratio(1, 2)]).unwrap();
        assert!(!s.feasible);
        assert_eq!(s.failing, Some(0));
        assert_eq!(s.q[0], Some(int(1)));
    }

    #[test]
    fn dimension_recursion_examples() {
        let t = rooted(&star(), None).unwrap();
        let r = [ratio(1, 2), ratio(1, 2)];
        let s = tree_dim_recursion(&t, &r, &[2, 1, 1]).unwrap();
        assert!(!s.feasible);
        assert_eq!(s.q[0], Some(BigInt::from(2)));
        let s = tree_dim_recursion(&t, &r, &[3, 1, 1]).unwrap();
        assert!(s.feasible);
        assert_eq!(s.q[0], Some(BigInt::from(2)));
        assert!(tree_dim_recursion(&t, &r, &[0, 1, 1]).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(regular_tree_threshold(2, 2).unwrap(), ratio(1, 4));
        assert_eq!(regular_tree_threshold(3, 2).unwrap(), ratio(1, 8));
        assert_eq!(regular_tree_threshold(2, 3).unwrap(), ratio(4, 27));
        assert!(regular_tree_threshold(1, 2).is_err());
    }

    #[test]
    fn boundary_scale_of_star() {
        let t = rooted(&star(), None).unwrap();
        let tol = ratio(1, 1 << 40);
        assert_eq!(tree_boundary_scale(&t, &[ratio(1, 4), ratio(1, 4)], &tol).unwrap(), int(2));
    }

    #[test]
    fn rejects_non_trees_and_pads() {
        assert!(rooted(&InteractionGraph::cyclic(4), None).is_err());
        // A single left vertex with one qudit gets a padded leaf when rooted at that qudit.
        let g = InteractionGraph::new(1, 1, &[(0, 0)]).unwrap();
        let t = rooted(&g, None).unwrap();
        assert_eq!(t.graph().n(), 2);
        assert_eq!(t.left_children(0), &[1]);
        // Rooting at a left vertex adds a fresh right root.
        let t = rooted(&chain(), Some(Root::Left(0))).unwrap();
        assert_eq!(t.root(), 3);
        let s = tree_fixed_point(&t, &[ratio(1, 4), ratio(1, 4)]).unwrap();
        assert!(s.feasible);
    }

    #[test]
    fn regular_tree_sizes() {
        let g = regular_tree(3, 2, 5).unwrap();
        assert_eq!(g.m(), 21);
        assert!(g.is_tree());
        assert!(g.right_neighbors(0).len() == 3);
    }

    #[test]
    fn truncated_regular_tree_agrees_with_shearer() {
        let g = regular_tree(3, 2, 5).unwrap();
        let p = ratio(1, 8) - ratio(1, 1_000_000);
        let t = rooted(&g, None).unwrap();
        let r = vec![p.clone(); g.m()];
        assert!(tree_fixed_point(&t, &r).unwrap().feasible);
    }

    // Oracle: on a tree, feasibility coincides with Shearer membership.
    fn arb_tree() -> impl Strategy<Value = InteractionGraph> {
        (1usize..6, proptest::collection::vec(0usize..100, 12)).prop_map(|(m, picks)| {
            // Grow a random bipartite tree: alternately attach new left/right vertices.
            let mut edges = Vec::new();
            let (mut lm, mut rn) = (0usize, 1usize);
            let mut p = picks.into_iter();
            while lm < m {
                let j = p.next().unwrap_or(0) % rn;
                edges.push((lm, j));
                lm += 1;
                if p.next().unwrap_or(0) % 2 == 0 {
                    edges.push((lm - 1, rn));
                    rn += 1;
                }
            }
            InteractionGraph::new(m, rn, &edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tree_feasibility_matches_shearer(g in arb_tree(), num in proptest::collection::vec(1i64..20, 6)) {
            let r: Vec<Rational> = (0..g.m()).map(|i| ratio(num[i], 40)).collect();
            let t = rooted(&g, None).unwrap();
            let d = g.base_graph().unwrap();
            let fp = tree_fixed_point(&t, &r).unwrap();
            let sc = shearer_check(&d, &r).unwrap();
            prop_assert_eq!(fp.feasible, sc.in_bound);
            if fp.feasible {
                // The root quantity equals 1 − I(G)/I(G minus the root's children).
                let root = t.root();
                let kids: u64 = t.right_children(root).iter().fold(0, |a, &i| a | 1 << i);
                let all = d.full_mask();
                let rest: Vec<usize> = bits(all & !kids).collect();
                let ratio_val = ind_poly(&d, &r, None).unwrap() / ind_poly(&d, &r, Some(&rest)).unwrap();
                prop_assert_eq!(fp.q[root].clone().unwrap(), int(1) - ratio_val);
            }
        }

        #[test]
        fn dimension_recursion_stays_in_range(g in arb_tree(), num in proptest::collection::vec(1i64..20, 6), scale in 1u64..6) {
            let r: Vec<Rational> = (0..g.m()).map(|i| ratio(num[i], 40)).collect();
            let t = rooted(&g, None).unwrap();
            let dims = vec![scale; g.n()];
            let s = tree_dim_recursion(&t, &r, &dims).unwrap();
            for (j, v) in s.q.iter().enumerate() {
                if let Some(v) = v {
                    prop_assert!(!v.is_negative());
                    if s.feasible && j < g.n() { prop_assert!(*v < BigInt::from(scale)); }
                }
            }
        }
    }
}
