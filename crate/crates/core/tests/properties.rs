//! Cross-module invariants checked on randomly generated inputs.

use lll_core::graph::{apply_reduction, find_cyclic_subgraphs, Reduction};
use lll_core::rational::ratio;
use lll_core::shearer::{in_bound, ind_poly};
use lll_core::tree::{rooted, tree_dim_recursion, tree_fixed_point};
use lll_core::{DependencyGraph, InteractionGraph, Rational};
use num::{BigInt, One, Signed};
use proptest::prelude::*;

fn interaction_graph(max_m: usize, max_n: usize) -> impl Strategy<Value = InteractionGraph> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        proptest::collection::vec(proptest::bool::weighted(0.4), m * n).prop_map(move |bits| {
            let edges: Vec<(usize, usize)> = (0..m * n).filter(|&k| bits[k]).map(|k| (k / n, k % n)).collect();
            InteractionGraph::new(m, n, &edges).unwrap()
        })
    })
}

/// Random bipartite tree grown one vertex at a time from a right root.
fn bipartite_tree(max_steps: usize) -> impl Strategy<Value = InteractionGraph> {
    proptest::collection::vec((any::<bool>(), any::<usize>()), 1..=max_steps).prop_map(|steps| {
        let (mut m, mut n) = (0usize, 1usize);
        let mut edges = Vec::new();
        for (left, pick) in steps {
            if left || m == 0 {
                edges.push((m, pick % n));
                m += 1;
            } else {
                edges.push((pick % m, n));
                n += 1;
            }
        }
        InteractionGraph::new(m, n, &edges).unwrap()
    })
}

fn rationals(len: usize, max_den: i64) -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec((1..=max_den, 0..=max_den), len).prop_map(|v| v.into_iter().map(|(d, n)| ratio(n.min(d), d)).collect())
}

/// `g` with the listed left vertex moved to the end.
fn move_left_last(g: &InteractionGraph, i: usize) -> InteractionGraph {
    let order: Vec<usize> = (0..g.m()).filter(|&k| k != i).chain([i]).collect();
    let edges: Vec<(usize, usize)> =
        order.iter().enumerate().flat_map(|(new, &old)| g.left_neighbors(old).iter().map(move |&j| (new, j))).collect();
    InteractionGraph::new(g.m(), g.n(), &edges).unwrap()
}

fn move_right_last(g: &InteractionGraph, j: usize) -> InteractionGraph {
    let pos = |x: usize| if x == j { g.n() - 1 } else if x > j { x - 1 } else { x };
    let edges: Vec<(usize, usize)> = g.edges().into_iter().map(|(i, x)| (i, pos(x))).collect();
    InteractionGraph::new(g.m(), g.n(), &edges).unwrap()
}

fn is_cycle(d: &DependencyGraph) -> bool {
    d.m() >= 3 && (0..d.m()).all(|v| d.degree(v) == 2) && d.is_connected_set(d.full_mask())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn base_graph_commutes_with_induction(g in interaction_graph(6, 5)) {
        let d = g.base_graph().unwrap();
        for mask in 0u64..1 << g.m() {
            let s: Vec<usize> = (0..g.m()).filter(|&i| mask >> i & 1 == 1).collect();
            prop_assert_eq!(g.induced_left(&s).unwrap().base_graph().unwrap(), d.induced(&s).unwrap());
        }
    }

    #[test]
    fn base_graph_commutes_with_induction_large(g in interaction_graph(12, 8), mask in any::<u64>()) {
        let s: Vec<usize> = (0..g.m()).filter(|&i| mask >> i & 1 == 1).collect();
        prop_assert_eq!(g.induced_left(&s).unwrap().base_graph().unwrap(), g.base_graph().unwrap().induced(&s).unwrap());
    }

    #[test]
    fn inverse_reductions_undo_forward_ones(g in interaction_graph(6, 5), a in any::<usize>(), b in any::<usize>()) {
        let i = a % g.m();
        let j = b % g.n();

        let (h, _) = apply_reduction(&g, &Reduction::DuplicateLVertex { i }).unwrap();
        prop_assert_eq!(apply_reduction(&h, &Reduction::RemoveLDuplicate { i: g.m() }).unwrap().0, g.clone());

        let (h, _) = apply_reduction(&g, &Reduction::DeleteLVertex { i }).unwrap();
        let back = apply_reduction(&h, &Reduction::InsertLVertex { neighbors: g.left_neighbors(i).to_vec() }).unwrap().0;
        prop_assert_eq!(back, move_left_last(&g, i));

        if g.left_neighbors(i).len() <= 1 {
            let (h, _) = apply_reduction(&g, &Reduction::DeleteLLeaf { i }).unwrap();
            let attach = g.left_neighbors(i).first().copied();
            prop_assert_eq!(apply_reduction(&h, &Reduction::InsertLLeaf { attach }).unwrap().0, move_left_last(&g, i));
        }

        if g.right_neighbors(j).len() <= 1 {
            let (h, _) = apply_reduction(&g, &Reduction::DeleteRLeaf { j }).unwrap();
            let attach = g.right_neighbors(j).first().copied();
            prop_assert_eq!(apply_reduction(&h, &Reduction::InsertRLeaf { attach }).unwrap().0, move_right_last(&g, j));
        }

        let subset: Vec<usize> = g.right_neighbors(j).iter().copied().filter(|&x| (a >> x) & 1 == 1).collect();
        let (h, _) = apply_reduction(&g, &Reduction::DuplicateRVertex { j, subset }).unwrap();
        prop_assert_eq!(apply_reduction(&h, &Reduction::RemoveRDuplicate { j: g.n() }).unwrap().0, g.clone());

        for (x, y) in g.edges() {
            if let Ok((h, _)) = apply_reduction(&g, &Reduction::DeleteEdge { i: x, j: y }) {
                prop_assert_eq!(apply_reduction(&h, &Reduction::AddEdge { i: x, j: y }).unwrap().0, g.clone());
            }
        }
    }

    #[test]
    fn delete_edge_keeps_base_graph(g in interaction_graph(7, 5)) {
        let d = g.base_graph().unwrap();
        for (i, j) in g.edges() {
            let without: Vec<(usize, usize)> = g.edges().into_iter().filter(|&e| e != (i, j)).collect();
            let oracle = InteractionGraph::new(g.m(), g.n(), &without).unwrap().base_graph().unwrap() == d;
            match apply_reduction(&g, &Reduction::DeleteEdge { i, j }) {
                Ok((h, _)) => {
                    prop_assert!(oracle);
                    prop_assert_eq!(h.base_graph().unwrap(), d.clone());
                }
                Err(_) => prop_assert!(!oracle),
            }
        }
    }

    #[test]
    fn cyclic_subgraphs_induce_cycles(g in interaction_graph(8, 6)) {
        let d = g.base_graph().unwrap();
        for c in find_cyclic_subgraphs(&g, 16).unwrap() {
            prop_assert_eq!(c.vertices.len(), c.length);
            prop_assert!(is_cycle(&d.induced(&c.vertices).unwrap()));
            if c.length == 3 {
                prop_assert!(!(0..g.n()).any(|j| c.vertices.iter().all(|&i| g.has_edge(i, j))));
            }
        }
    }

    #[test]
    fn right_vertex_expansion(g in interaction_graph(7, 5), r in rationals(7, 6)) {
        let d = g.base_graph().unwrap();
        let r = &r[..g.m()];
        let all: Vec<usize> = (0..g.m()).collect();
        let full = ind_poly(&d, r, None).unwrap();
        for j in 0..g.n() {
            let t = g.right_neighbors(j);
            let outside = |drop: u64| -> Vec<usize> { all.iter().copied().filter(|&v| drop >> v & 1 == 0).collect() };
            let t_mask = t.iter().fold(0u64, |acc, &v| acc | 1 << v);
            let mut expected = ind_poly(&d, r, Some(&outside(t_mask))).unwrap();
            for &l in t {
                expected -= &r[l] * ind_poly(&d, r, Some(&outside(d.closed_mask(l)))).unwrap();
            }
            prop_assert_eq!(&expected, &full);
        }
    }

    #[test]
    fn tree_dims_converge_to_fixed_point(g in bipartite_tree(9), r in rationals(9, 5)) {
        let tree = rooted(&g, None).unwrap();
        let r = &r[..g.m()];
        let exact = tree_fixed_point(&tree, r).unwrap();
        let pd: BigInt = r.iter().map(|x| x.denom().clone()).product();
        let mut previous = true;
        for l in [1u64, 4, 16] {
            let base = &pd * BigInt::from(l);
            let d: u64 = base.try_into().unwrap();
            let dims = vec![d; tree.graph().n()];
            let sol = tree_dim_recursion(&tree, r, &dims).unwrap();
            // Verdicts only move from feasible to infeasible as L grows, and never below the exact one.
            prop_assert!(previous || !sol.feasible);
            prop_assert!(sol.feasible || !exact.feasible);
            if exact.feasible {
                for (qi, qr) in sol.q.iter().zip(&exact.q) {
                    let (qi, qr) = (qi.as_ref().unwrap(), qr.as_ref().unwrap());
                    prop_assert!(Rational::new(qi.clone(), BigInt::from(d)) <= *qr);
                }
            }
            previous = sol.feasible;
        }
    }

    #[test]
    fn lowering_a_coordinate_keeps_tree_feasibility(g in bipartite_tree(10), r in rationals(10, 7), k in any::<usize>(), cut in 1i64..=4) {
        let tree = rooted(&g, None).unwrap();
        let r = &r[..g.m()];
        if tree_fixed_point(&tree, r).unwrap().feasible {
            let mut lower = r.to_vec();
            let i = k % g.m();
            lower[i] = &lower[i] * ratio(cut - 1, cut);
            prop_assert!(tree_fixed_point(&tree, &lower).unwrap().feasible);
        }
    }

    #[test]
    fn tree_feasibility_matches_shearer(g in bipartite_tree(10), r in rationals(10, 4)) {
        let tree = rooted(&g, None).unwrap();
        let r = &r[..g.m()];
        prop_assume!(r.iter().all(|x| !x.is_negative() && *x <= Rational::one()));
        prop_assert_eq!(tree_fixed_point(&tree, r).unwrap().feasible, in_bound(&g.base_graph().unwrap(), r).unwrap());
    }
}
