//! Probability transfer and lower bounds on the gap between Shearer's bound
//! and the variable-LLL threshold.

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use num::pow::Pow;
use serde_json::json;

use crate::error::{domain, invalid, LllError, Result};
use crate::graph::{bits, DependencyGraph};
use crate::rational::{fmt_decimal, fmt_exact, isqrt, Rational};

fn pow(x: &Rational, e: usize) -> Rational {
    Pow::pow(x, e as u32)
}

fn rint(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// τ(d, l, p, q) = q·A / (A + (1 − p + q)·d·(p^l − (d−1)^l (1−p)^l)) with
/// A = p^{l+1} − p^l (d−1)(1−p).
///
/// Numerator and denominator can both be negative; only their ratio matters.
pub fn tau(d: usize, l: usize, p: &Rational, q: &Rational) -> Result<Rational> {
    if d < 2 {
        return invalid("tau needs d >= 2");
    }
    let one = Rational::one();
    if !q.is_positive() || q > p || *p > one {
        return invalid("tau needs 0 < q <= p <= 1");
    }
    let dm1 = rint(d - 1);
    let a = pow(p, l + 1) - pow(p, l) * &dm1 * (&one - p);
    let b = (&one - p + q) * rint(d) * (pow(p, l) - pow(&dm1, l) * pow(&(&one - p), l));
    let den = &a + b;
    if den.is_zero() {
        return domain("tau: denominator vanishes");
    }
    Ok(q * a / den)
}

/// q1 / (1 + Σ_k (1 − p + q1)·|T_k|·(1 − p)^{k−1} / p^k), with `layers[k-1] = |T_k|`.
pub fn transfer_bound(p: &Rational, q1: &Rational, layers: &[usize]) -> Result<Rational> {
    let one = Rational::one();
    if !p.is_positive() || *p > one {
        return invalid("transfer bound needs 0 < p <= 1");
    }
    if q1.is_negative() || q1 > p {
        return invalid("transfer bound needs 0 <= q1 <= p");
    }
    let c = &one - p + q1;
    let mut sum = Rational::zero();
    let mut ratio = one.clone() / p; // (1−p)^{k−1}/p^k
    let step = (&one - p) / p;
    for &t in layers {
        sum += &c * rint(t) * &ratio;
        ratio *= &step;
    }
    Ok(q1 / (one + sum))
}

fn check_probabilities(p: &[Rational], m: usize) -> Result<()> {
    if p.len() != m {
        return invalid(format!("probability vector has length {}, graph has {m} vertices", p.len()));
    }
    if p.iter().any(|x| x.is_negative() || *x > Rational::one()) {
        return invalid("probabilities must lie in [0,1]");
    }
    Ok(())
}

fn check_open_unit(p: &[Rational]) -> Result<()> {
    if let Some(k) = p.iter().position(|x| !x.is_positive() || *x > Rational::one()) {
        return domain(format!("transferred vector leaves (0,1] at vertex {}: {}", k + 1, fmt_exact(&p[k])));
    }
    Ok(())
}

/// Moves mass q from event j to its neighbour i: p' = p − q·e_j + q·(1 − p_i)/p_j·e_i.
///
/// When p is beyond Shearer's bound so is p'.
pub fn element_transfer(g: &DependencyGraph, p: &[Rational], i: usize, j: usize, q: &Rational) -> Result<Vec<Rational>> {
    check_probabilities(p, g.m())?;
    if i >= g.m() || j >= g.m() || !g.adjacent(i, j) {
        return invalid("element transfer needs adjacent vertices i and j");
    }
    if q.is_negative() || q > &p[j] {
        return invalid("element transfer needs 0 <= q <= p_j");
    }
    if !p[j].is_positive() {
        return invalid("element transfer needs p_j > 0");
    }
    let mut out = p.to_vec();
    out[j] -= q;
    out[i] += q * (Rational::one() - &p[i]) / &p[j];
    check_open_unit(&out)?;
    Ok(out)
}

/// Lexicographically first shortest path from `from` to `to` (inclusive).
fn shortest_path(g: &DependencyGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let dist = g.distances(to);
    dist[from]?;
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        let d = dist[cur].expect("reachable");
        cur = bits(g.nbr_mask(cur)).find(|&w| dist[w] == Some(d - 1)).expect("BFS predecessor");
        path.push(cur);
    }
    Some(path)
}

/// Transfers mass q from j to i along a shortest path whose vertices other than i
/// all have probability P: p' = p − q·(e_j − ((1−P)/P)^{k−1}·(1 − p_i)/P·e_i).
///
/// Computed hop by hop from j towards i, each hop an element transfer whose rate
/// uses the original probabilities, and checked against the closed form.
pub fn path_transfer(g: &DependencyGraph, p: &[Rational], i: usize, j: usize, q: &Rational) -> Result<Vec<Rational>> {
    check_probabilities(p, g.m())?;
    if i >= g.m() || j >= g.m() || i == j {
        return invalid("path transfer needs distinct vertices i and j");
    }
    let path = shortest_path(g, i, j).ok_or_else(|| LllError::Domain("no path between i and j".into()))?;
    let common = p[j].clone();
    if !common.is_positive() {
        return invalid("path transfer needs p_j > 0");
    }
    if let Some(&v) = path[1..].iter().find(|&&v| p[v] != common) {
        return domain(format!("path vertex {} has probability {} instead of {}", v + 1, fmt_exact(&p[v]), fmt_exact(&common)));
    }
    if q.is_negative() || *q > common {
        return invalid("path transfer needs 0 <= q <= p_j");
    }
    let mut out = p.to_vec();
    let mut amount = q.clone();
    for w in path.windows(2).rev() {
        let (to, from) = (w[0], w[1]);
        out[from] -= &amount;
        amount = amount * (Rational::one() - &p[to]) / &p[from];
        out[to] += &amount;
    }
    let k = path.len() - 1;
    let one = Rational::one();
    let factor = pow(&((&one - &common) / &common), k - 1) * (&one - &p[i]) / &common;
    let mut closed = p.to_vec();
    closed[j] -= q;
    closed[i] += q * factor;
    debug_assert_eq!(out, closed);
    check_open_unit(&out)?;
    Ok(out)
}

/// |T_k| for k = 1..l, where T defaults to the ball of radius l around i.
///
/// T must be (i, l)-concentrated: every member lies within distance l of i and
/// is joined to i by a shortest path inside T.
pub fn layer_sizes(g: &DependencyGraph, i: usize, l: usize, t: Option<u64>) -> Result<Vec<usize>> {
    if i >= g.m() {
        return invalid(format!("vertex {} out of range", i + 1));
    }
    let ball = g.ball(i, l);
    let t = t.unwrap_or(ball) | 1 << i;
    let global = g.distances(i);
    let inside = g.distances_within(i, t);
    let mut sizes = vec![0usize; l];
    for v in bits(t) {
        if v == i {
            continue;
        }
        match (global[v], inside[v]) {
            (Some(a), Some(b)) if a == b && a <= l => sizes[a - 1] += 1,
            _ => return domain(format!("T is not ({}, {l})-concentrated at vertex {}", i + 1, v + 1)),
        }
    }
    Ok(sizes)
}

/// The closed-form gap bounds for graphs of maximum degree Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericVariant {
    /// P^{l+3} / (25 (1−P)^l (Δ−1)^l).
    DegreeBound,
    /// (1/50) P² (P/(1−P))^{⌊(l−1)/2⌋}.
    DegreeFree,
}

pub fn generic_gap_bound(delta: usize, l: usize, p: &Rational, variant: GenericVariant) -> Result<Rational> {
    let one = Rational::one();
    if !p.is_positive() || *p >= one {
        return invalid("generic gap bound needs 0 < P < 1");
    }
    let q = &one - p;
    match variant {
        GenericVariant::DegreeBound => {
            if delta < 2 {
                return invalid("generic gap bound needs maximum degree >= 2");
            }
            Ok(pow(p, l + 3) / (rint(25) * pow(&q, l) * pow(&rint(delta - 1), l)))
        }
        GenericVariant::DegreeFree => {
            let e = l.saturating_sub(1) / 2;
            Ok(pow(p, 2) * pow(&(p / q), e) / rint(50))
        }
    }
}

/// Mass of the event pair used to start the transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Q1Rule {
    PCubed,
    HalfPCubed,
}

impl Q1Rule {
    pub fn apply(self, p: &Rational) -> Rational {
        match self {
            Q1Rule::PCubed => pow(p, 3),
            Q1Rule::HalfPCubed => pow(p, 3) / rint(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Q1Rule::PCubed => "p^3",
            Q1Rule::HalfPCubed => "p^3/2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub lattice: &'static str,
    pub p_a: Rational,
    pub q1_rule: Q1Rule,
    pub layers: Vec<usize>,
    pub lower_bound: Rational,
}

impl GapReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "lattice": self.lattice,
            "p_a": fmt_decimal(&self.p_a, 12),
            "q1_rule": self.q1_rule.name(),
            "layers": self.layers,
            "lower_bound_on_gap": fmt_decimal(&self.lower_bound, 4),
        })
    }
}

/// Decimal literal as an exact rational.
fn dec(s: &str) -> Rational {
    crate::rational::parse_rational(s).expect("valid literal")
}

/// (5√5 − 11)/2 to 50 decimal digits.
pub fn triangular_threshold() -> Rational {
    let scale = BigInt::from(10u32).pow(50u32);
    let root125 = isqrt(&(BigInt::from(125) * &scale * &scale));
    Rational::new(root125 - BigInt::from(11) * &scale, BigInt::from(2) * scale)
}

/// Gap lower bounds for the square, hexagonal, triangular and simple cubic lattices.
///
/// Layer counts for the cubic lattice merge three planes and are taken as given.
pub fn lattice_gap_table(rule: Q1Rule) -> Vec<GapReport> {
    let rows: [(&'static str, Rational, Vec<usize>); 4] = [
        ("square", dec("0.11933888188"), vec![4, 7, 5, 4]),
        ("hexagonal", dec("0.1547"), vec![3, 6, 5, 5, 2]),
        ("triangular", triangular_threshold(), vec![6, 7, 5]),
        ("simple cubic", dec("0.0744"), vec![6, 13, 11, 8]),
    ];
    rows.into_iter()
        .map(|(lattice, p_a, layers)| {
            let q1 = rule.apply(&p_a);
            let lower_bound = transfer_bound(&p_a, &q1, &layers).expect("valid table parameters");
            GapReport { lattice, p_a, q1_rule: rule, layers, lower_bound }
        })
        .collect()
}
