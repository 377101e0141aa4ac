//! Benchmark fixtures shared by the criterion targets.

use lll_core::qlll::{construct_spanning_instance, SubspaceInstance, DEFAULT_MAX_TOTAL_DIM};
use lll_core::rational::ratio;
use lll_core::{DependencyGraph, InteractionGraph, Rational};

/// The `w` by `h` grid graph.
pub fn grid(w: usize, h: usize) -> DependencyGraph {
    let id = |x: usize, y: usize| y * w + x;
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < h {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    DependencyGraph::new(w * h, &edges).expect("grid edges are valid")
}

/// Uniform vector `num/den` of length `m`.
pub fn uniform(m: usize, num: i64, den: i64) -> Vec<Rational> {
    vec![ratio(num, den); m]
}

/// A spanning instance on the 4-cyclic graph with r = (1/3, 1/3, 1/4, 1/4).
pub fn c4_instance() -> SubspaceInstance {
    let r = vec![ratio(1, 3), ratio(1, 3), ratio(1, 4), ratio(1, 4)];
    construct_spanning_instance(&InteractionGraph::cyclic(4), &r, 1, DEFAULT_MAX_TOTAL_DIM).expect("C4 construction").instance
}
