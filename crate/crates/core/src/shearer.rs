//! Exact independence polynomials and Shearer-bound membership.

use std::collections::{HashMap, HashSet};

use num::{One, Signed, Zero};
use serde_json::json;

use crate::error::{domain, invalid, LllError, Result};
use crate::graph::{bits, mask_of, DependencyGraph};
use crate::rational::{fmt_decimal, fmt_exact, int, parse_rational, Rational};

/// Default vertex cap for subset enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Vertex cap for subset enumeration; `LLL_MAX_SUBSETS` overrides the default.
pub fn enumeration_cap() -> usize {
    std::env::var("LLL_MAX_SUBSETS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUMERATION_CAP)
}

fn check_cap(m: usize) -> Result<()> {
    let cap = enumeration_cap();
    if m > cap {
        return Err(LllError::CapExceeded(format!("{m} vertices exceed the enumeration cap of {cap} (set LLL_MAX_SUBSETS)")));
    }
    Ok(())
}

fn check_vector(g: &DependencyGraph, r: &[Rational]) -> Result<()> {
    if r.len() != g.m() {
        return invalid(format!("probability vector has length {}, graph has {} vertices", r.len(), g.m()));
    }
    let one = Rational::one();
    if let Some((i, x)) = r.iter().enumerate().find(|(_, x)| x.is_negative() || **x > one) {
        return invalid(format!("entry {} = {} lies outside [0,1]", i + 1, fmt_exact(x)));
    }
    Ok(())
}

/// Memoised evaluator of I(G(S), r) over subsets S given as bitmasks.
///
/// Uses I(S) = I(S∖{v}) − r_v·I(S∖Γ⁺_v) and factors over connected components,
/// so every memo key is a connected set.
pub struct IndPoly<'a> {
    g: &'a DependencyGraph,
    r: &'a [Rational],
    memo: HashMap<u64, Rational>,
}

impl<'a> IndPoly<'a> {
    pub fn new(g: &'a DependencyGraph, r: &'a [Rational]) -> Result<Self> {
        check_vector(g, r)?;
        Ok(IndPoly { g, r, memo: HashMap::new() })
    }

    pub fn eval(&mut self, mask: u64) -> Rational {
        if mask == 0 {
            return Rational::one();
        }
        let comps = self.g.components(mask);
        if comps.len() > 1 {
            return comps.into_iter().fold(Rational::one(), |acc, c| acc * self.eval_connected(c));
        }
        self.eval_connected(mask)
    }

    fn eval_connected(&mut self, mask: u64) -> Rational {
        if let Some(v) = self.memo.get(&mask) {
            return v.clone();
        }
        // Branch on the vertex of largest degree inside the set.
        let v = bits(mask)
            .max_by_key(|&v| ((self.g.nbr_mask(v) & mask).count_ones(), std::cmp::Reverse(v)))
            .expect("nonempty");
        let value = if self.r[v].is_zero() {
            self.eval(mask & !(1 << v))
        } else {
            let without = self.eval(mask & !(1 << v));
            let rest = self.eval(mask & !self.g.closed_mask(v));
            without - &self.r[v] * rest
        };
        self.memo.insert(mask, value.clone());
        value
    }
}

/// I(G(S), r). `subset = None` evaluates on the whole vertex set.
pub fn ind_poly(g: &DependencyGraph, r: &[Rational], subset: Option<&[usize]>) -> Result<Rational> {
    let mask = match subset {
        None => g.full_mask(),
        Some(s) => {
            if let Some(&v) = s.iter().find(|&&v| v >= g.m()) {
                return invalid(format!("vertex {} out of range", v + 1));
            }
            mask_of(s)
        }
    };
    Ok(IndPoly::new(g, r)?.eval(mask))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearerVerdict {
    pub in_bound: bool,
    /// Minimum-size, lexicographically least set with I ≤ 0 (0-based, sorted).
    pub witness: Option<Vec<usize>>,
    pub value_at_witness: Option<Rational>,
    pub full_value: Rational,
}

impl ShearerVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let value = self.value_at_witness.as_ref().unwrap_or(&self.full_value);
        json!({
            "in_bound": self.in_bound,
            "witness": self.witness.as_ref().map(|w| w.iter().map(|v| v + 1).collect::<Vec<_>>()),
            "value": fmt_exact(value),
            "value_decimal": fmt_decimal(value, 12),
            "full_value": fmt_exact(&self.full_value),
            "full_value_decimal": fmt_decimal(&self.full_value, 12),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || LllError::Parse("malformed verdict".into());
        let in_bound = v["in_bound"].as_bool().ok_or_else(bad)?;
        let witness = match &v["witness"] {
            serde_json::Value::Null => None,
            w => Some(
                w.as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|x| x.as_u64().filter(|&x| x > 0).map(|x| x as usize - 1).ok_or_else(bad))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let value = parse_rational(v["value"].as_str().ok_or_else(bad)?)?;
        let full_value = match v["full_value"].as_str() {
            Some(s) => parse_rational(s)?,
            None => value.clone(),
        };
        Ok(ShearerVerdict {
            in_bound,
            value_at_witness: witness.as_ref().map(|_| value),
            witness,
            full_value,
        })
    }
}

/// Connected vertex sets of one size, in lexicographic order of their sorted vertex lists.
fn sorted_level(level: &HashSet<u64>) -> Vec<u64> {
    let mut v: Vec<u64> = level.iter().copied().collect();
    // For equal sizes, lexicographic order of sorted lists equals descending order of bit-reversed masks.
    v.sort_unstable_by_key(|&m| std::cmp::Reverse(m.reverse_bits()));
    v
}

fn first_violation(g: &DependencyGraph, ip: &mut IndPoly) -> Option<(u64, Rational)> {
    let mut level: HashSet<u64> = (0..g.m()).map(|v| 1u64 << v).collect();
    while !level.is_empty() {
        for s in sorted_level(&level) {
            let value = ip.eval(s);
            if !value.is_positive() {
                return Some((s, value));
            }
        }
        let mut next = HashSet::new();
        for &s in &level {
            let frontier = bits(s).fold(0u64, |acc, v| acc | g.nbr_mask(v)) & !s;
            for w in bits(frontier) {
                next.insert(s | 1 << w);
            }
        }
        level = next;
    }
    None
}

/// Decides whether `r` is in Shearer's bound for `g`.
///
/// A set with I ≤ 0 of minimum size is connected, since I factors over components,
/// so only connected induced subgraphs are enumerated, by size then lexicographically.
pub fn shearer_check(g: &DependencyGraph, r: &[Rational]) -> Result<ShearerVerdict> {
    check_vector(g, r)?;
    check_cap(g.m())?;
    let mut ip = IndPoly::new(g, r)?;
    let full_value = ip.eval(g.full_mask());
    Ok(match first_violation(g, &mut ip) {
        Some((s, value)) => ShearerVerdict {
            in_bound: false,
            witness: Some(bits(s).collect()),
            value_at_witness: Some(value),
            full_value,
        },
        None => ShearerVerdict { in_bound: true, witness: None, value_at_witness: None, full_value },
    })
}

pub fn in_bound(g: &DependencyGraph, r: &[Rational]) -> Result<bool> {
    Ok(shearer_check(g, r)?.in_bound)
}

fn bisect(mut lo: Rational, mut hi: Rational, tol: &Rational, mut inside: impl FnMut(&Rational) -> Result<bool>) -> Result<Rational> {
    let two = int(2);
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / &two;
        if inside(&mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn check_tol(tol: &Rational) -> Result<()> {
    if !tol.is_positive() {
        return invalid("tolerance must be positive");
    }
    Ok(())
}

/// Largest p with (p,…,p) in the closure of Shearer's bound, to within `tol`.
///
/// Returns the upper end of the final bracket, so the result is never inside the bound.
pub fn symmetric_threshold(g: &DependencyGraph, tol: &Rational) -> Result<Rational> {
    check_tol(tol)?;
    if g.m() == 0 {
        return invalid("empty graph has no threshold");
    }
    check_cap(g.m())?;
    bisect(Rational::zero(), Rational::one(), tol, |p| in_bound(g, &vec![p.clone(); g.m()]))
}

/// λ such that λ·r lies on the boundary of Shearer's bound, to within `tol`.
pub fn boundary_scale(g: &DependencyGraph, r: &[Rational], tol: &Rational) -> Result<Rational> {
    check_vector(g, r)?;
    check_tol(tol)?;
    check_cap(g.m())?;
    let rmax = r.iter().max().cloned().unwrap_or_else(Rational::zero);
    if !rmax.is_positive() {
        return invalid("direction vector must have a positive entry");
    }
    let lmax = rmax.recip();
    let scaled = |l: &Rational| r.iter().map(|x| x * l).collect::<Vec<_>>();
    if in_bound(g, &scaled(&lmax))? {
        return domain(format!("λ·r leaves (0,1]^m at λ = {} before reaching the boundary", fmt_exact(&lmax)));
    }
    bisect(Rational::zero(), lmax, tol, |l| in_bound(g, &scaled(l)))
}

/// The floor function F(G, p, t) together with I(G, p, k) for k = 1..t.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorValue {
    pub value: Rational,
    pub subset_minima: Vec<Rational>,
}

/// I(G, p, k): minimum of I over all induced subgraphs with k vertices.
pub fn min_subset_value(g: &DependencyGraph, p: &[Rational], k: usize) -> Result<Rational> {
    check_cap(g.m())?;
    if k > g.m() {
        return invalid(format!("k = {k} exceeds m = {}", g.m()));
    }
    let mut ip = IndPoly::new(g, p)?;
    let mut best: Option<Rational> = None;
    for_each_k_subset(g.m(), k, &mut |s| {
        let v = ip.eval(s);
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    });
    Ok(best.unwrap_or_else(Rational::one))
}

fn for_each_k_subset(m: usize, k: usize, f: &mut impl FnMut(u64)) {
    fn rec(start: usize, m: usize, left: usize, cur: u64, f: &mut impl FnMut(u64)) {
        if left == 0 {
            f(cur);
            return;
        }
        for v in start..=m - left {
            rec(v + 1, m, left - 1, cur | 1 << v, f);
        }
    }
    rec(0, m, k, 0, f);
}

/// F(G, p, t): I(G, p) inside the bound, and p_min^t · ∏_{k=1..t} I(G,p,k)/(m−1−k) on the boundary.
pub fn shearer_floor(g: &DependencyGraph, p: &[Rational], t: usize, on_boundary: bool) -> Result<FloorValue> {
    check_vector(g, p)?;
    let m = g.m();
    if t < 1 || t + 2 > m {
        return invalid(format!("t = {t} must lie in [1, m-2] = [1, {}]", m as i64 - 2));
    }
    let subset_minima = (1..=t).map(|k| min_subset_value(g, p, k)).collect::<Result<Vec<_>>>()?;
    let value = if on_boundary {
        let pmin = p.iter().min().cloned().expect("m >= 3");
        let mut v = num::pow(pmin, t);
        for (k, ik) in subset_minima.iter().enumerate() {
            let k = k + 1;
            v = v * ik / int((m - 1 - k) as i64);
        }
        v
    } else {
        ind_poly(g, p, None)?
    };
    Ok(FloorValue { value, subset_minima })
}

/// The extremal exclusive distribution on independent sets S:
/// μ(S) = ∏_{i∈S} p_i · I(G(V∖Γ⁺(S)), p). Ordered by size, then lexicographically.
pub fn extremal_distribution(g: &DependencyGraph, p: &[Rational]) -> Result<Vec<(Vec<usize>, Rational)>> {
    check_vector(g, p)?;
    check_cap(g.m())?;
    let mut ip = IndPoly::new(g, p)?;
    let mut sets = g.independent_sets();
    sets.sort_by_key(|&s| (s.count_ones(), std::cmp::Reverse(s.reverse_bits())));
    let mut out = Vec::with_capacity(sets.len());
    let mut total = Rational::zero();
    for s in sets {
        let weight = bits(s).fold(Rational::one(), |acc, v| acc * &p[v]);
        let mass = weight * ip.eval(g.full_mask() & !g.closed_mask_of(s));
        if mass.is_negative() {
            let vs: Vec<String> = bits(s).map(|v| (v + 1).to_string()).collect();
            return domain(format!("negative mass {} on independent set {{{}}}", fmt_exact(&mass), vs.join(",")));
        }
        total += &mass;
        out.push((bits(s).collect(), mass));
    }
    if !total.is_one() {
        return Err(LllError::Verification(format!("extremal masses sum to {}", fmt_exact(&total))));
    }
    Ok(out)
}
