//! Interaction bipartite graphs, dependency graphs, structural queries,
//! contained cyclic subgraphs and the reduction rules.
//!
//! Indices are 0-based in the API and 1-based in JSON.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LllError, Result};

/// Largest vertex count representable by the bitmask-based dependency graph.
pub const MAX_DEPENDENCY_VERTICES: usize = 64;

/// Default length cap for the chordless-cycle search.
pub const DEFAULT_CYCLE_CAP: usize = 16;

/// Iterates the set bits of a mask in increasing order.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

pub fn mask_of(vs: &[usize]) -> u64 {
    vs.iter().fold(0u64, |m, &v| m | (1u64 << v))
}

/// Bipartite graph between Hamiltonians/events (left) and qudits/variables (right).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    left: Vec<Vec<usize>>,
    right: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    m: usize,
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl InteractionGraph {
    /// Builds a graph from 0-based `(left, right)` edges. Duplicate edges are an error.
    pub fn new(m: usize, n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut left = vec![Vec::new(); m];
        let mut right = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= m || j >= n {
                return invalid(format!("edge ({}, {}) out of range for m={m}, n={n}", i + 1, j + 1));
            }
            if left[i].contains(&j) {
                return invalid(format!("duplicate edge ({}, {})", i + 1, j + 1));
            }
            left[i].push(j);
            right[j].push(i);
        }
        left.iter_mut().for_each(|v| v.sort_unstable());
        right.iter_mut().for_each(|v| v.sort_unstable());
        Ok(InteractionGraph { left, right })
    }

    fn from_adjacency(left: Vec<Vec<usize>>, n: usize) -> Self {
        let edges: Vec<(usize, usize)> = left
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
            .collect();
        Self::new(left.len(), n, &edges).expect("adjacency is well formed")
    }

    /// The l-cyclic graph: left i acts on right i and i+1 (mod l).
    pub fn cyclic(l: usize) -> Self {
        let edges: Vec<_> = (0..l).flat_map(|i| [(i, i), (i, (i + 1) % l)]).collect();
        let mut edges = edges;
        edges.dedup();
        Self::new(l, l, &edges).expect("cyclic graph")
    }

    pub fn m(&self) -> usize {
        self.left.len()
    }

    pub fn n(&self) -> usize {
        self.right.len()
    }

    /// Qudits acted on by left vertex `i`, sorted.
    pub fn left_neighbors(&self, i: usize) -> &[usize] {
        &self.left[i]
    }

    /// Hamiltonians acting on right vertex `j`, sorted.
    pub fn right_neighbors(&self, j: usize) -> &[usize] {
        &self.right[j]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.left
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.left.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.left[i].binary_search(&j).is_ok()
    }

    /// Derives the dependency graph: left vertices adjacent iff they share a right vertex.
    pub fn base_graph(&self) -> Result<DependencyGraph> {
        let m = self.m();
        if m > MAX_DEPENDENCY_VERTICES {
            return Err(LllError::CapExceeded(format!(
                "{m} left vertices exceed the {MAX_DEPENDENCY_VERTICES}-vertex dependency-graph limit"
            )));
        }
        let mut adj = vec![0u64; m];
        for js in &self.right {
            for &a in js {
                for &b in js {
                    if a != b {
                        adj[a] |= 1 << b;
                    }
                }
            }
        }
        Ok(DependencyGraph { adj })
    }

    /// Keeps every right vertex and only the listed left vertices, relabelled in increasing order.
    pub fn induced_left(&self, s: &[usize]) -> Result<Self> {
        let mut s = s.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&bad) = s.iter().find(|&&i| i >= self.m()) {
            return invalid(format!("left vertex {} out of range", bad + 1));
        }
        Ok(Self::from_adjacency(s.iter().map(|&i| self.left[i].clone()).collect(), self.n()))
    }

    /// Connected and acyclic.
    pub fn is_tree(&self) -> bool {
        let v = self.m() + self.n();
        v > 0 && self.edge_count() + 1 == v && self.is_connected()
    }

    pub fn is_connected(&self) -> bool {
        let (m, n) = (self.m(), self.n());
        if m + n == 0 {
            return true;
        }
        // Vertices 0..m are left, m..m+n are right.
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            let nbrs: Vec<usize> = if v < m {
                self.left[v].iter().map(|&j| m + j).collect()
            } else {
                self.right[v - m].clone()
            };
            for w in nbrs {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// Left vertices `i` and `i'` share exactly one right vertex `j`.
    /// A right vertex is solitary when this holds for every pair of its neighbours.
    pub fn is_solitary(&self, j: usize) -> bool {
        let ns = &self.right[j];
        ns.iter().enumerate().all(|(x, &a)| {
            ns[x + 1..].iter().all(|&b| {
                let shared = self.left[a].iter().filter(|q| self.left[b].binary_search(q).is_ok()).count();
                shared == 1
            })
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<[usize; 2]> = self.edges().into_iter().map(|(i, j)| [i + 1, j + 1]).collect();
        serde_json::to_value(GraphJson { m: self.m(), n: self.n(), edges }).expect("graph json")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let g: GraphJson = serde_json::from_value(v.clone()).map_err(|e| LllError::Parse(format!("graph: {e}")))?;
        let mut edges = Vec::with_capacity(g.edges.len());
        for [i, j] in g.edges {
            if i == 0 || j == 0 {
                return Err(LllError::Parse("graph edges are 1-indexed".into()));
            }
            edges.push((i - 1, j - 1));
        }
        Self::new(g.m, g.n, &edges)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| LllError::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

/// Simple undirected graph on at most 64 vertices, stored as neighbour masks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyGraph {
    adj: Vec<u64>,
}

impl DependencyGraph {
    pub fn new(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m > MAX_DEPENDENCY_VERTICES {
            return Err(LllError::CapExceeded(format!("{m} vertices exceed the {MAX_DEPENDENCY_VERTICES}-vertex limit")));
        }
        let mut adj = vec![0u64; m];
        for &(a, b) in edges {
            if a >= m || b >= m {
                return invalid(format!("edge ({}, {}) out of range", a + 1, b + 1));
            }
            if a == b {
                return invalid(format!("self-loop at {}", a + 1));
            }
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        Ok(DependencyGraph { adj })
    }

    pub fn empty(m: usize) -> Self {
        Self::new(m, &[]).expect("edgeless graph")
    }

    pub fn cycle(m: usize) -> Self {
        let edges: Vec<_> = (0..m).map(|i| (i, (i + 1) % m)).collect();
        Self::new(m, &edges).expect("cycle")
    }

    pub fn path(m: usize) -> Self {
        let edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        Self::new(m, &edges).expect("path")
    }

    pub fn complete(m: usize) -> Self {
        let edges: Vec<_> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
        Self::new(m, &edges).expect("complete graph")
    }

    pub fn m(&self) -> usize {
        self.adj.len()
    }

    pub fn full_mask(&self) -> u64 {
        if self.m() == 64 {
            u64::MAX
        } else {
            (1u64 << self.m()) - 1
        }
    }

    /// Neighbour mask (Γ_i).
    pub fn nbr_mask(&self, i: usize) -> u64 {
        self.adj[i]
    }

    /// Closed neighbourhood mask (Γ⁺_i).
    pub fn closed_mask(&self, i: usize) -> u64 {
        self.adj[i] | (1 << i)
    }

    /// Closed neighbourhood of a set.
    pub fn closed_mask_of(&self, set: u64) -> u64 {
        bits(set).fold(set, |acc, v| acc | self.adj[v])
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].count_ones() as usize
    }

    pub fn max_degree(&self) -> usize {
        (0..self.m()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.m())
            .flat_map(|a| bits(self.adj[a]).filter(move |&b| b > a).map(move |b| (a, b)))
            .collect()
    }

    pub fn is_independent(&self, set: u64) -> bool {
        bits(set).all(|v| self.adj[v] & set == 0)
    }

    /// BFS distances from `src` (None when unreachable).
    pub fn distances(&self, src: usize) -> Vec<Option<usize>> {
        self.distances_within(src, self.full_mask())
    }

    /// BFS distances from `src` using only vertices of `within`.
    pub fn distances_within(&self, src: usize, within: u64) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.m()];
        if within >> src & 1 == 0 {
            return dist;
        }
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("visited");
            for w in bits(self.adj[v] & within) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<usize> {
        self.distances(a)[b]
    }

    /// Γ⁺_i(l): vertices within distance `l` of `i`.
    pub fn ball(&self, i: usize, l: usize) -> u64 {
        self.distances(i)
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_some_and(|d| d <= l))
            .fold(0u64, |acc, (v, _)| acc | 1 << v)
    }

    /// Splits a vertex set into connected components (each as a mask), ordered by lowest vertex.
    pub fn components(&self, set: u64) -> Vec<u64> {
        let mut rest = set;
        let mut out = Vec::new();
        while rest != 0 {
            let start = rest & rest.wrapping_neg();
            let mut comp = start;
            let mut frontier = start;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let new = self.adj[v] & set & !comp;
                comp |= new;
                frontier |= new;
            }
            rest &= !comp;
            out.push(comp);
        }
        out
    }

    pub fn is_connected_set(&self, set: u64) -> bool {
        set != 0 && self.components(set).len() == 1
    }

    /// Induced subgraph on `s`, relabelled in increasing order.
    pub fn induced(&self, s: &[usize]) -> Result<Self> {
        let mut s = s.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&bad) = s.iter().find(|&&v| v >= self.m()) {
            return invalid(format!("vertex {} out of range", bad + 1));
        }
        let edges: Vec<_> = s
            .iter()
            .enumerate()
            .flat_map(|(x, &a)| s.iter().enumerate().skip(x + 1).filter(move |&(_, &b)| self.adjacent(a, b)).map(move |(y, _)| (x, y)))
            .collect();
        Self::new(s.len(), &edges)
    }

    /// All independent sets as masks, in increasing numeric order. Includes the empty set.
    pub fn independent_sets(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.extend_independent(0, 0, self.full_mask(), &mut out);
        out.sort_unstable();
        out
    }

    fn extend_independent(&self, from: usize, cur: u64, allowed: u64, out: &mut Vec<u64>) {
        out.push(cur);
        for v in from..self.m() {
            if allowed >> v & 1 == 1 {
                self.extend_independent(v + 1, cur | 1 << v, allowed & !self.closed_mask(v), out);
            }
        }
    }

    /// Chordless cycles of length in `3..=max_len`, each as its vertex list in cycle order,
    /// starting at the smallest vertex. Sorted by (length, sorted vertex set).
    pub fn chordless_cycles(&self, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for s in 0..self.m() {
            let mut path = vec![s];
            self.grow_cycle(s, &mut path, max_len, &mut out);
        }
        out.sort_by_key(|c| {
            let mut v = c.clone();
            v.sort_unstable();
            (c.len(), v)
        });
        out
    }

    fn grow_cycle(&self, s: usize, path: &mut Vec<usize>, max_len: usize, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().expect("nonempty path");
        // Interior vertices other than the last one: a new vertex may not touch them.
        let interior = if path.len() > 2 { mask_of(&path[1..path.len() - 1]) } else { 0 };
        let on_path = mask_of(path);
        for w in bits(self.adj[last]) {
            if w <= s || on_path >> w & 1 == 1 || self.adj[w] & interior != 0 {
                continue;
            }
            if path.len() >= 2 && self.adjacent(w, s) {
                // Closing edge; record each cycle once by orienting path[1] < w.
                if path[1] < w {
                    let mut c = path.clone();
                    c.push(w);
                    out.push(c);
                }
            } else if path.len() + 1 < max_len {
                path.push(w);
                self.grow_cycle(s, path, max_len, out);
                path.pop();
            }
        }
    }

    /// Checks that `set` induces a single cycle of length at least 3.
    pub fn induces_cycle(&self, set: u64) -> bool {
        set.count_ones() >= 3 && self.is_connected_set(set) && bits(set).all(|v| (self.adj[v] & set).count_ones() == 2)
    }
}

/// Vertex designator for [`graph_query`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vertex {
    Left(usize),
    Right(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    /// Bipartite neighbours of a vertex.
    Neighbors(Vertex),
    /// Γ_i in the base graph.
    Gamma(usize),
    /// Γ⁺_i in the base graph.
    GammaPlus(usize),
    MaxDegree,
    /// Shortest-path distance between left vertices in the base graph.
    Distance(usize, usize),
    IsSolitary(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Set(Vec<usize>),
    Count(usize),
    Distance(Option<usize>),
    Flag(bool),
}

pub fn graph_query(g: &InteractionGraph, q: Query) -> Result<Answer> {
    let check_left = |i: usize| {
        if i < g.m() {
            Ok(())
        } else {
            invalid(format!("left vertex {} out of range (m={})", i + 1, g.m()))
        }
    };
    let check_right = |j: usize| {
        if j < g.n() {
            Ok(())
        } else {
            invalid(format!("right vertex {} out of range (n={})", j + 1, g.n()))
        }
    };
    Ok(match q {
        Query::Neighbors(Vertex::Left(i)) => {
            check_left(i)?;
            Answer::Set(g.left_neighbors(i).to_vec())
        }
        Query::Neighbors(Vertex::Right(j)) => {
            check_right(j)?;
            Answer::Set(g.right_neighbors(j).to_vec())
        }
        Query::Gamma(i) => {
            check_left(i)?;
            Answer::Set(bits(g.base_graph()?.nbr_mask(i)).collect())
        }
        Query::GammaPlus(i) => {
            check_left(i)?;
            Answer::Set(bits(g.base_graph()?.closed_mask(i)).collect())
        }
        Query::MaxDegree => Answer::Count(g.base_graph()?.max_degree()),
        Query::Distance(a, b) => {
            check_left(a)?;
            check_left(b)?;
            Answer::Distance(g.base_graph()?.distance(a, b))
        }
        Query::IsSolitary(j) => {
            check_right(j)?;
            Answer::Flag(g.is_solitary(j))
        }
    })
}

/// A set of left vertices whose induced graph is l-cyclic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CyclicSubgraph {
    /// Left vertices (0-based, sorted).
    pub vertices: Vec<usize>,
    pub length: usize,
    pub two_discrete: bool,
}

/// Contained cyclic subgraphs with cycle length at most `max_len`.
pub fn find_cyclic_subgraphs(g: &InteractionGraph, max_len: usize) -> Result<Vec<CyclicSubgraph>> {
    let d = g.base_graph()?;
    let mut out = Vec::new();
    for cycle in d.chordless_cycles(max_len) {
        let set = mask_of(&cycle);
        debug_assert!(d.induces_cycle(set));
        if cycle.len() == 3 {
            // No qudit may be shared by all three Hamiltonians.
            let common = (0..g.n()).any(|j| cycle.iter().all(|&i| g.has_edge(i, j)));
            if common {
                continue;
            }
        }
        let two_discrete = cycle
            .iter()
            .all(|&i| g.left_neighbors(i).iter().all(|&j| g.right_neighbors(j).len() <= 2));
        let mut vertices = cycle.clone();
        vertices.sort_unstable();
        out.push(CyclicSubgraph { vertices, length: cycle.len(), two_discrete });
    }
    Ok(out)
}

/// The six reduction rules and their inverses. All indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    DeleteRLeaf { j: usize },
    DuplicateLVertex { i: usize },
    /// Adds a right vertex whose neighbourhood `subset` lies inside 𝒩(j).
    DuplicateRVertex { j: usize, subset: Vec<usize> },
    DeleteEdge { i: usize, j: usize },
    DeleteLVertex { i: usize },
    DeleteLLeaf { i: usize },
    /// Inverse of delete_r_leaf: append a right vertex attached to at most one left vertex.
    InsertRLeaf { attach: Option<usize> },
    /// Inverse of duplicate_l_vertex: remove `i` when another left vertex has the same neighbourhood.
    RemoveLDuplicate { i: usize },
    /// Inverse of duplicate_r_vertex: remove `j` when 𝒩(j) lies inside another right vertex's neighbourhood.
    RemoveRDuplicate { j: usize },
    /// Inverse of delete_edge: add an edge that leaves the base graph unchanged.
    AddEdge { i: usize, j: usize },
    /// Inverse of delete_l_vertex: append a left vertex with the given neighbourhood.
    InsertLVertex { neighbors: Vec<usize> },
    /// Inverse of delete_l_leaf: append a left vertex attached to at most one right vertex.
    InsertLLeaf { attach: Option<usize> },
}

impl Reduction {
    pub fn name(&self) -> &'static str {
        match self {
            Reduction::DeleteRLeaf { .. } => "delete_r_leaf",
            Reduction::DuplicateLVertex { .. } => "duplicate_l_vertex",
            Reduction::DuplicateRVertex { .. } => "duplicate_r_vertex",
            Reduction::DeleteEdge { .. } => "delete_edge",
            Reduction::DeleteLVertex { .. } => "delete_l_vertex",
            Reduction::DeleteLLeaf { .. } => "delete_l_leaf",
            Reduction::InsertRLeaf { .. } => "inverse_delete_r_leaf",
            Reduction::RemoveLDuplicate { .. } => "inverse_duplicate_l_vertex",
            Reduction::RemoveRDuplicate { .. } => "inverse_duplicate_r_vertex",
            Reduction::AddEdge { .. } => "inverse_delete_edge",
            Reduction::InsertLVertex { .. } => "inverse_delete_l_vertex",
            Reduction::InsertLLeaf { .. } => "inverse_delete_l_leaf",
        }
    }
}

/// Old-index to new-index maps produced by a reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Relabel {
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
}

impl Relabel {
    fn identity(m: usize, n: usize) -> Self {
        Relabel { left: (0..m).map(Some).collect(), right: (0..n).map(Some).collect() }
    }

    fn dropping(len: usize, gone: usize) -> Vec<Option<usize>> {
        (0..len)
            .map(|v| match v.cmp(&gone) {
                std::cmp::Ordering::Less => Some(v),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(v - 1),
            })
            .collect()
    }
}

pub fn apply_reduction(g: &InteractionGraph, op: &Reduction) -> Result<(InteractionGraph, Relabel)> {
    let (m, n) = (g.m(), g.n());
    let left_ok = |i: usize| if i < m { Ok(()) } else { invalid(format!("left vertex {} out of range", i + 1)) };
    let right_ok = |j: usize| if j < n { Ok(()) } else { invalid(format!("right vertex {} out of range", j + 1)) };
    let mut left: Vec<Vec<usize>> = (0..m).map(|i| g.left_neighbors(i).to_vec()).collect();

    let remove_left = |left: &mut Vec<Vec<usize>>, i: usize| {
        left.remove(i);
        Relabel { left: Relabel::dropping(m, i), right: (0..n).map(Some).collect() }
    };
    let remove_right = |left: &mut Vec<Vec<usize>>, j: usize| {
        for js in left.iter_mut() {
            js.retain(|&x| x != j);
            js.iter_mut().for_each(|x| {
                if *x > j {
                    *x -= 1
                }
            });
        }
        Relabel { left: (0..m).map(Some).collect(), right: Relabel::dropping(n, j) }
    };

    let (new_left, new_n, relabel) = match op {
        Reduction::DeleteRLeaf { j } => {
            right_ok(*j)?;
            if g.right_neighbors(*j).len() > 1 {
                return invalid(format!("right vertex {} has degree {} > 1", j + 1, g.right_neighbors(*j).len()));
            }
            let r = remove_right(&mut left, *j);
            (left, n - 1, r)
        }
        Reduction::DeleteLLeaf { i } => {
            left_ok(*i)?;
            if g.left_neighbors(*i).len() > 1 {
                return invalid(format!("left vertex {} has degree {} > 1", i + 1, g.left_neighbors(*i).len()));
            }
            let r = remove_left(&mut left, *i);
            (left, n, r)
        }
        Reduction::DeleteLVertex { i } => {
            left_ok(*i)?;
            let r = remove_left(&mut left, *i);
            (left, n, r)
        }
        Reduction::DuplicateLVertex { i } => {
            left_ok(*i)?;
            left.push(g.left_neighbors(*i).to_vec());
            (left, n, Relabel::identity(m, n))
        }
        Reduction::DuplicateRVertex { j, subset } => {
            right_ok(*j)?;
            for &i in subset {
                if i >= m || !g.has_edge(i, *j) {
                    return invalid(format!("left vertex {} is not a neighbour of right vertex {}", i + 1, j + 1));
                }
            }
            for &i in subset {
                if !left[i].contains(&n) {
                    left[i].push(n);
                }
            }
            (left, n + 1, Relabel::identity(m, n))
        }
        Reduction::DeleteEdge { i, j } => {
            left_ok(*i)?;
            right_ok(*j)?;
            if !g.has_edge(*i, *j) {
                return invalid(format!("no edge ({}, {})", i + 1, j + 1));
            }
            left[*i].retain(|x| x != j);
            let h = InteractionGraph::from_adjacency(left.clone(), n);
            if h.base_graph()? != g.base_graph()? {
                return invalid(format!("deleting edge ({}, {}) changes the base graph", i + 1, j + 1));
            }
            (left, n, Relabel::identity(m, n))
        }
        Reduction::InsertRLeaf { attach } => {
            if let Some(i) = attach {
                left_ok(*i)?;
                left[*i].push(n);
            }
            (left, n + 1, Relabel::identity(m, n))
        }
        Reduction::InsertLLeaf { attach } => {
            let mut nb = Vec::new();
            if let Some(j) = attach {
                right_ok(*j)?;
                nb.push(*j);
            }
            left.push(nb);
            (left, n, Relabel::identity(m, n))
        }
        Reduction::InsertLVertex { neighbors } => {
            for &j in neighbors {
                right_ok(j)?;
            }
            let mut nb = neighbors.clone();
            nb.sort_unstable();
            nb.dedup();
            left.push(nb);
            (left, n, Relabel::identity(m, n))
        }
        Reduction::RemoveLDuplicate { i } => {
            left_ok(*i)?;
            let twin = (0..m).any(|k| k != *i && g.left_neighbors(k) == g.left_neighbors(*i));
            if !twin {
                return invalid(format!("left vertex {} has no duplicate", i + 1));
            }
            let r = remove_left(&mut left, *i);
            (left, n, r)
        }
        Reduction::RemoveRDuplicate { j } => {
            right_ok(*j)?;
            let nj = g.right_neighbors(*j);
            let covered = (0..n).any(|k| k != *j && nj.iter().all(|i| g.right_neighbors(k).contains(i)));
            if !covered {
                return invalid(format!("right vertex {} is not dominated by another right vertex", j + 1));
            }
            let r = remove_right(&mut left, *j);
            (left, n - 1, r)
        }
        Reduction::AddEdge { i, j } => {
            left_ok(*i)?;
            right_ok(*j)?;
            if g.has_edge(*i, *j) {
                return invalid(format!("edge ({}, {}) already present", i + 1, j + 1));
            }
            left[*i].push(*j);
            let h = InteractionGraph::from_adjacency(left.clone(), n);
            if h.base_graph()? != g.base_graph()? {
                return invalid(format!("adding edge ({}, {}) changes the base graph", i + 1, j + 1));
            }
            (left, n, Relabel::identity(m, n))
        }
    };
    Ok((InteractionGraph::from_adjacency(new_left, new_n), relabel))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GapVerdict {
    Gapless,
    Gapful,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapDecision {
    pub verdict: GapVerdict,
    pub reason: String,
}

/// Applies gap-preserving reductions (leaf deletions and removal of dominated
/// duplicates) until none applies. Returns the reduced graph and the steps taken.
///
/// The last left and the last right vertex are never deleted, so a tree ends at
/// the single edge ([1], [1], {(1,1)}).
pub fn reduce_to_core(g: &InteractionGraph) -> (InteractionGraph, Vec<Reduction>) {
    let mut cur = g.clone();
    let mut steps = Vec::new();
    loop {
        let op = (0..cur.n())
            .find(|&j| cur.n() > 1 && cur.right_neighbors(j).len() <= 1)
            .map(|j| Reduction::DeleteRLeaf { j })
            .or_else(|| (0..cur.m()).find(|&i| cur.m() > 1 && cur.left_neighbors(i).len() <= 1).map(|i| Reduction::DeleteLLeaf { i }))
            .or_else(|| {
                (0..cur.m())
                    .find(|&i| (0..i).any(|k| cur.left_neighbors(k) == cur.left_neighbors(i)))
                    .map(|i| Reduction::RemoveLDuplicate { i })
            })
            .or_else(|| {
                (0..cur.n())
                    .find(|&j| {
                        let nj = cur.right_neighbors(j);
                        (0..cur.n()).any(|k| {
                            let nk = cur.right_neighbors(k);
                            k != j && nj.iter().all(|i| nk.contains(i)) && (nj.len() < nk.len() || k < j)
                        })
                    })
                    .map(|j| Reduction::RemoveRDuplicate { j })
            });
        match op {
            Some(op) => {
                cur = apply_reduction(&cur, &op).expect("applicable by construction").0;
                steps.push(op);
            }
            None => return (cur, steps),
        }
    }
}

/// Classifies gap existence from structure alone.
pub fn gap_decision(g: &InteractionGraph) -> Result<GapDecision> {
    let cycles = find_cyclic_subgraphs(g, DEFAULT_CYCLE_CAP)?;
    if let Some(c) = cycles.first() {
        let vs: Vec<String> = c.vertices.iter().map(|v| (v + 1).to_string()).collect();
        return Ok(GapDecision {
            verdict: GapVerdict::Gapful,
            reason: format!("contains a {}-cyclic subgraph on left vertices {{{}}}", c.length, vs.join(",")),
        });
    }
    let d = g.base_graph()?;
    if let Some(c) = d.chordless_cycles(g.m().max(3)).iter().find(|c| c.len() >= 4) {
        return Ok(GapDecision {
            verdict: GapVerdict::Gapful,
            reason: format!("base graph has an induced cycle of length {}", c.len()),
        });
    }
    let (core, steps) = reduce_to_core(g);
    if core.m() <= 1 {
        let why = if g.is_tree() { "interaction graph is a tree" } else { "reduces to a forest" };
        return Ok(GapDecision {
            verdict: GapVerdict::Gapless,
            reason: format!("{why}: {} gap-preserving reductions leave at most one left vertex", steps.len()),
        });
    }
    Ok(GapDecision {
        verdict: GapVerdict::Unknown,
        reason: format!(
            "base graph is chordal with no contained cyclic subgraph; irreducible core has {} left and {} right vertices",
            core.m(),
            core.n()
        ),
    })
}
