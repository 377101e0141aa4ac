//! Finite event systems over independent discrete variables, evaluated by
//! exhaustive enumeration of the product space.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};
use serde::Deserialize;
use serde_json::json;

use crate::error::{domain, invalid, LllError, Result};
use crate::graph::{bits, DependencyGraph, InteractionGraph};
use crate::rational::{fmt_exact, parse_rational, Rational};
use crate::shearer::{enumeration_cap, extremal_distribution};

/// Largest product space enumerated.
pub const MAX_STATES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub domain: usize,
    pub masses: Vec<Rational>,
}

impl Variable {
    pub fn uniform(domain: usize) -> Self {
        let m = Rational::new(1.into(), (domain as i64).into());
        Variable { domain, masses: vec![m; domain] }
    }
}

/// An event given by the assignments of its declared variables on which it occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Declared variables, sorted.
    pub vars: Vec<usize>,
    /// Tuples of values, one entry per declared variable.
    pub assignments: BTreeSet<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct DiscreteEventSystem {
    variables: Vec<Variable>,
    events: Vec<Event>,
    strides: Vec<usize>,
    weights: Vec<Rational>,
    indicators: Vec<Vec<bool>>,
}

impl PartialEq for DiscreteEventSystem {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.events == other.events
    }
}

/// A subset of the product space as one flag per state.
pub type StateSet = Vec<bool>;

fn union(a: &[bool], b: &[bool]) -> StateSet {
    a.iter().zip(b).map(|(x, y)| *x || *y).collect()
}

fn intersection(a: &[bool], b: &[bool]) -> StateSet {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn difference(a: &[bool], b: &[bool]) -> StateSet {
    a.iter().zip(b).map(|(x, y)| *x && !*y).collect()
}

impl DiscreteEventSystem {
    pub fn new(variables: Vec<Variable>, events: Vec<Event>) -> Result<Self> {
        let mut states: usize = 1;
        for (j, v) in variables.iter().enumerate() {
            if v.domain == 0 || v.masses.len() != v.domain {
                return invalid(format!("variable {} needs {} masses for a domain of size {}", j + 1, v.domain, v.domain));
            }
            if v.masses.iter().any(|m| m.is_negative()) {
                return invalid(format!("variable {} has a negative mass", j + 1));
            }
            let total: Rational = v.masses.iter().fold(Rational::zero(), |a, m| a + m);
            if !total.is_one() {
                return invalid(format!("masses of variable {} sum to {}", j + 1, fmt_exact(&total)));
            }
            states = states
                .checked_mul(v.domain)
                .filter(|&s| s <= MAX_STATES)
                .ok_or_else(|| LllError::CapExceeded(format!("product space exceeds {MAX_STATES} states")))?;
        }
        for (i, e) in events.iter().enumerate() {
            if e.vars.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("event {}: declared variables must be sorted and distinct", i + 1));
            }
            if let Some(&j) = e.vars.iter().find(|&&j| j >= variables.len()) {
                return invalid(format!("event {} declares unknown variable {}", i + 1, j + 1));
            }
            for t in &e.assignments {
                if t.len() != e.vars.len() || t.iter().zip(&e.vars).any(|(&x, &j)| x >= variables[j].domain) {
                    return invalid(format!("event {} has an assignment outside its variables' domains", i + 1));
                }
            }
        }
        let n = variables.len();
        let mut strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * variables[j + 1].domain;
        }
        let mut sys = DiscreteEventSystem { variables, events, strides, weights: Vec::new(), indicators: Vec::new() };
        sys.weights = (0..states)
            .map(|s| {
                let c = sys.coords(s);
                c.iter().enumerate().fold(Rational::one(), |acc, (j, &x)| acc * &sys.variables[j].masses[x])
            })
            .collect();
        sys.indicators = (0..sys.events.len()).map(|i| sys.compute_indicator(i)).collect();
        Ok(sys)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn m(&self) -> usize {
        self.events.len()
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn state_count(&self) -> usize {
        self.weights.len()
    }

    fn coords(&self, s: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.variables).map(|(st, v)| (s / st) % v.domain).collect()
    }

    fn compute_indicator(&self, i: usize) -> StateSet {
        let e = &self.events[i];
        (0..self.state_count())
            .map(|s| {
                let c = self.coords(s);
                e.assignments.contains(&e.vars.iter().map(|&j| c[j]).collect::<Vec<_>>())
            })
            .collect()
    }

    pub fn indicator(&self, i: usize) -> &[bool] {
        &self.indicators[i]
    }

    /// Union of the events in `set` (a mask over event indices).
    pub fn union_of(&self, set: u64) -> StateSet {
        let mut acc = vec![false; self.state_count()];
        for i in bits(set) {
            acc = union(&acc, &self.indicators[i]);
        }
        acc
    }

    pub fn prob(&self, set: &[bool]) -> Rational {
        set.iter().zip(&self.weights).filter(|(x, _)| **x).fold(Rational::zero(), |a, (_, w)| a + w)
    }

    /// Event over `vars` whose indicator is `set`; fails if `set` depends on other variables.
    pub fn event_from_set(&self, vars: &[usize], set: &[bool]) -> Result<Event> {
        let mut assignments = BTreeSet::new();
        for (s, &inside) in set.iter().enumerate() {
            if inside {
                let c = self.coords(s);
                assignments.insert(vars.iter().map(|&j| c[j]).collect::<Vec<_>>());
            }
        }
        for (s, &inside) in set.iter().enumerate() {
            let c = self.coords(s);
            if assignments.contains(&vars.iter().map(|&j| c[j]).collect::<Vec<_>>()) != inside {
                return invalid("set depends on variables outside the declared ones");
            }
        }
        Ok(Event { vars: vars.to_vec(), assignments })
    }

    /// Events as left vertices, variables as right vertices.
    pub fn interaction_graph(&self) -> Result<InteractionGraph> {
        let edges: Vec<(usize, usize)> =
            self.events.iter().enumerate().flat_map(|(i, e)| e.vars.iter().map(move |&j| (i, j))).collect();
        InteractionGraph::new(self.m(), self.n(), &edges)
    }

    fn var_degree(&self, j: usize) -> usize {
        self.events.iter().filter(|e| e.vars.contains(&j)).count()
    }

    /// Classifies a state set by its cross sections at the two values of binary variable `x`.
    pub fn classify(&self, set: &[bool], x: usize) -> Result<Monotonicity> {
        if x >= self.n() || self.variables[x].domain != 2 {
            return invalid(format!("variable {} is not binary", x + 1));
        }
        let stride = self.strides[x];
        let (mut up, mut down) = (true, true);
        for s in 0..self.state_count() {
            if (s / stride).is_multiple_of(2) {
                let (a, b) = (set[s], set[s + stride]);
                up &= !a || b;
                down &= !b || a;
            }
        }
        Ok(match (up, down) {
            (true, true) => Monotonicity::Both,
            (true, false) => Monotonicity::Up,
            (false, true) => Monotonicity::Down,
            (false, false) => Monotonicity::Neither,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vars: Vec<serde_json::Value> = self
            .variables
            .iter()
            .map(|v| json!({"domain": v.domain, "masses": v.masses.iter().map(fmt_exact).collect::<Vec<_>>()}))
            .collect();
        let events: Vec<serde_json::Value> = self
            .events
            .iter()
            .map(|e| json!({"vars": e.vars.iter().map(|j| j + 1).collect::<Vec<_>>(), "assignments": e.assignments}))
            .collect();
        json!({"variables": vars, "events": events})
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct VJson {
            domain: usize,
            masses: Vec<String>,
        }
        #[derive(Deserialize)]
        struct EJson {
            vars: Vec<usize>,
            assignments: Vec<Vec<usize>>,
        }
        #[derive(Deserialize)]
        struct SJson {
            variables: Vec<VJson>,
            events: Vec<EJson>,
        }
        let raw: SJson = serde_json::from_value(v.clone()).map_err(|e| LllError::Parse(format!("event system: {e}")))?;
        let variables = raw
            .variables
            .into_iter()
            .map(|v| Ok(Variable { domain: v.domain, masses: v.masses.iter().map(|s| parse_rational(s)).collect::<Result<_>>()? }))
            .collect::<Result<Vec<_>>>()?;
        let mut events = Vec::new();
        for e in raw.events {
            if e.vars.contains(&0) {
                return Err(LllError::Parse("event variables are 1-indexed".into()));
            }
            // Sort declared variables and permute tuples to match.
            let mut order: Vec<usize> = (0..e.vars.len()).collect();
            order.sort_by_key(|&t| e.vars[t]);
            let vars: Vec<usize> = order.iter().map(|&t| e.vars[t] - 1).collect();
            let mut assignments = BTreeSet::new();
            for a in e.assignments {
                if a.len() != vars.len() {
                    return invalid("assignment length differs from the number of declared variables");
                }
                assignments.insert(order.iter().map(|&t| a[t]).collect());
            }
            events.push(Event { vars, assignments });
        }
        DiscreteEventSystem::new(variables, events)
    }
}

/// Probability queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbExpr {
    Event(usize),
    Union(Vec<usize>),
    Intersection(Vec<usize>),
    Conditional(Box<ProbExpr>, Box<ProbExpr>),
}

fn expr_set(sys: &DiscreteEventSystem, e: &ProbExpr) -> Result<StateSet> {
    let check = |i: usize| {
        if i >= sys.m() {
            invalid(format!("event {} does not exist", i + 1))
        } else {
            Ok(())
        }
    };
    match e {
        ProbExpr::Event(i) => {
            check(*i)?;
            Ok(sys.indicators[*i].clone())
        }
        ProbExpr::Union(is) => {
            let mut acc = vec![false; sys.state_count()];
            for &i in is {
                check(i)?;
                acc = union(&acc, &sys.indicators[i]);
            }
            Ok(acc)
        }
        ProbExpr::Intersection(is) => {
            let mut acc = vec![true; sys.state_count()];
            for &i in is {
                check(i)?;
                acc = intersection(&acc, &sys.indicators[i]);
            }
            Ok(acc)
        }
        ProbExpr::Conditional(..) => invalid("conditionals cannot be nested"),
    }
}

pub fn event_prob(sys: &DiscreteEventSystem, expr: &ProbExpr) -> Result<Rational> {
    match expr {
        ProbExpr::Conditional(a, b) => {
            let (sa, sb) = (expr_set(sys, a)?, expr_set(sys, b)?);
            let pb = sys.prob(&sb);
            if pb.is_zero() {
                return domain("conditioning event has probability zero");
            }
            Ok(sys.prob(&intersection(&sa, &sb)) / pb)
        }
        e => Ok(sys.prob(&expr_set(sys, e)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Up,
    Down,
    Both,
    Neither,
}

impl Monotonicity {
    pub fn name(self) -> &'static str {
        match self {
            Monotonicity::Up => "up",
            Monotonicity::Down => "down",
            Monotonicity::Both => "both",
            Monotonicity::Neither => "neither",
        }
    }

    pub fn is_up(self) -> bool {
        matches!(self, Monotonicity::Up | Monotonicity::Both)
    }

    pub fn is_down(self) -> bool {
        matches!(self, Monotonicity::Down | Monotonicity::Both)
    }
}

/// Sections A^{x=0} and A^{x=1} of an event over its other declared variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSection {
    pub class: Monotonicity,
    pub rest_vars: Vec<usize>,
    pub section0: BTreeSet<Vec<usize>>,
    pub section1: BTreeSet<Vec<usize>>,
}

pub fn cross_section_monotone(sys: &DiscreteEventSystem, a: usize, x: usize) -> Result<CrossSection> {
    if a >= sys.m() {
        return invalid(format!("event {} does not exist", a + 1));
    }
    let class = sys.classify(&sys.indicators[a], x)?;
    let e = &sys.events[a];
    let rest_vars: Vec<usize> = e.vars.iter().copied().filter(|&j| j != x).collect();
    let (mut section0, mut section1) = (BTreeSet::new(), BTreeSet::new());
    match e.vars.iter().position(|&j| j == x) {
        Some(pos) => {
            for t in &e.assignments {
                let mut rest = t.clone();
                let v = rest.remove(pos);
                if v == 0 { &mut section0 } else { &mut section1 }.insert(rest);
            }
        }
        None => {
            section0 = e.assignments.clone();
            section1 = e.assignments.clone();
        }
    }
    Ok(CrossSection { class, rest_vars, section0, section1 })
}

/// Pairs (k, i): cut A_k down to A_k ∖ A_i.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CuttingPlan {
    pub cuts: Vec<(usize, usize)>,
}

/// Checks that every target is 2-discrete and adjacent to its cut event, and that
/// targets of different cuts share no variable.
pub fn validate_plan(sys: &DiscreteEventSystem, plan: &CuttingPlan) -> Result<()> {
    for &(k, i) in &plan.cuts {
        if k >= sys.m() || i >= sys.m() || k == i {
            return invalid(format!("cut ({}, {}) needs two distinct existing events", k + 1, i + 1));
        }
        let (vk, vi) = (&sys.events[k].vars, &sys.events[i].vars);
        if !vi.iter().any(|j| vk.contains(j)) {
            return invalid(format!("cut ({}, {}): events share no variable", k + 1, i + 1));
        }
        if let Some(&j) = vi.iter().find(|&&j| sys.var_degree(j) > 2) {
            return invalid(format!("cut ({}, {}): event {} is not 2-discrete (variable {})", k + 1, i + 1, i + 1, j + 1));
        }
    }
    for (a, &(k1, i1)) in plan.cuts.iter().enumerate() {
        for &(k2, i2) in &plan.cuts[a + 1..] {
            let shared = sys.events[i1].vars.iter().any(|j| sys.events[i2].vars.contains(j));
            if i1 == i2 || shared {
                return invalid(format!("cuts ({}, {}) and ({}, {}) are not compatible", k1 + 1, i1 + 1, k2 + 1, i2 + 1));
            }
        }
    }
    Ok(())
}

/// Applies the cuts in parallel; cut events also declare the variables of their targets.
pub fn cut_events(sys: &DiscreteEventSystem, plan: &CuttingPlan) -> Result<DiscreteEventSystem> {
    validate_plan(sys, plan)?;
    let mut events = sys.events.clone();
    for k in 0..sys.m() {
        let targets: Vec<usize> = plan.cuts.iter().filter(|c| c.0 == k).map(|c| c.1).collect();
        if targets.is_empty() {
            continue;
        }
        let mut set = sys.indicators[k].clone();
        let mut vars: BTreeSet<usize> = sys.events[k].vars.iter().copied().collect();
        for &i in &targets {
            set = difference(&set, &sys.indicators[i]);
            vars.extend(sys.events[i].vars.iter().copied());
        }
        events[k] = sys.event_from_set(&vars.into_iter().collect::<Vec<_>>(), &set)?;
    }
    DiscreteEventSystem::new(sys.variables.clone(), events)
}

/// Every degree-2 variable must be binary with its two events monotone in opposite directions.
pub fn check_standard(sys: &DiscreteEventSystem) -> Result<()> {
    for j in 0..sys.n() {
        let users: Vec<usize> = (0..sys.m()).filter(|&i| sys.events[i].vars.contains(&j)).collect();
        if users.len() != 2 {
            continue;
        }
        if sys.variables[j].domain != 2 {
            return domain(format!("variable {} is shared by two events but is not binary", j + 1));
        }
        let a = sys.classify(&sys.indicators[users[0]], j)?;
        let b = sys.classify(&sys.indicators[users[1]], j)?;
        if !((a.is_up() && b.is_down()) || (a.is_down() && b.is_up())) {
            return domain(format!(
                "variable {}: events {} and {} are not monotone in opposite directions ({}, {})",
                j + 1,
                users[0] + 1,
                users[1] + 1,
                a.name(),
                b.name()
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LopsidedVerdict {
    pub holds: bool,
    /// First failing (i, K) with Pr(A_i | ⋃_K A_k) < Pr(A_i).
    pub counterexample: Option<(usize, Vec<usize>)>,
}

impl LopsidedVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let ce = self.counterexample.as_ref().map(|(i, k)| json!({"i": i + 1, "K": k.iter().map(|x| x + 1).collect::<Vec<_>>()}));
        json!({"holds": self.holds, "counterexample": ce})
    }
}

/// Checks Pr(A_i ∩ U) ≥ Pr(A_i)·Pr(U) for U = ⋃_{k∈K} A_k over all nonempty K ⊆ [m]∖Γ⁺_i.
pub fn lopsidependency_check(sys: &DiscreteEventSystem, g: &DependencyGraph) -> Result<LopsidedVerdict> {
    if g.m() != sys.m() {
        return invalid(format!("graph has {} vertices, system has {} events", g.m(), sys.m()));
    }
    if sys.m() > enumeration_cap() {
        return Err(LllError::CapExceeded(format!("{} events exceed the enumeration cap {}", sys.m(), enumeration_cap())));
    }
    for i in 0..sys.m() {
        let pa = sys.prob(&sys.indicators[i]);
        let far = g.full_mask() & !g.closed_mask(i);
        let mut k = far;
        while k != 0 {
            let u = sys.union_of(k);
            let pu = sys.prob(&u);
            if !pu.is_zero() && sys.prob(&intersection(&sys.indicators[i], &u)) < &pa * &pu {
                return Ok(LopsidedVerdict { holds: false, counterexample: Some((i, bits(k).collect())) });
            }
            k = (k - 1) & far;
        }
    }
    Ok(LopsidedVerdict { holds: true, counterexample: None })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuttingReport {
    pub union_preserved: bool,
    /// Disjoint K1, K2 with variable-disjoint neighbourhoods whose unions are negatively correlated.
    pub correlation_failure: Option<(Vec<usize>, Vec<usize>)>,
    /// Lopsidependency of the original base graph for the cut system.
    pub lopsidependency: LopsidedVerdict,
    /// Cut events aligned on all shared variables but negatively correlated.
    pub aligned_pair_failure: Option<(usize, usize)>,
}

impl CuttingReport {
    pub fn passed(&self) -> bool {
        self.union_preserved && self.correlation_failure.is_none() && self.lopsidependency.holds && self.aligned_pair_failure.is_none()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let one = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
        json!({
            "passed": self.passed(),
            "union_preserved": self.union_preserved,
            "correlation_failure": self.correlation_failure.as_ref().map(|(a, b)| json!({"K1": one(a), "K2": one(b)})),
            "lopsidependency": self.lopsidependency.to_json(),
            "aligned_pair_failure": self.aligned_pair_failure.map(|(a, b)| json!([a + 1, b + 1])),
        })
    }
}

/// Cuts a standard system and checks union preservation, positive correlation of
/// unions over variable-disjoint index sets, and lopsidependency of the base graph.
pub fn verify_cutting_properties(sys: &DiscreteEventSystem, plan: &CuttingPlan) -> Result<CuttingReport> {
    check_standard(sys)?;
    let cut = cut_events(sys, plan)?;
    let all = if sys.m() == 64 { u64::MAX } else { (1u64 << sys.m()) - 1 };
    let union_preserved = sys.union_of(all) == cut.union_of(all);

    let g = sys.interaction_graph()?;
    let base = g.base_graph()?;
    let var_mask = |set: u64| bits(set).fold(0u64, |acc, i| acc | g.left_neighbors(i).iter().fold(0u64, |a, &j| a | 1 << j));
    let mut correlation_failure = None;
    // K1 ranges over nonempty subsets, K2 over nonempty subsets of the complement.
    'outer: for k1 in 1..=all {
        let rest = all & !k1;
        let mut k2 = rest;
        while k2 != 0 {
            if k1 < k2 && var_mask(k1) & var_mask(k2) == 0 {
                let (u1, u2) = (cut.union_of(k1), cut.union_of(k2));
                if cut.prob(&intersection(&u1, &u2)) < cut.prob(&u1) * cut.prob(&u2) {
                    correlation_failure = Some((bits(k1).collect(), bits(k2).collect()));
                    break 'outer;
                }
            }
            k2 = (k2 - 1) & rest;
        }
    }
    let lopsidependency = lopsidependency_check(&cut, &base)?;

    let mut aligned_pair_failure = None;
    'pairs: for a in 0..cut.m() {
        for b in a + 1..cut.m() {
            let shared: Vec<usize> = cut.events[a].vars.iter().copied().filter(|j| cut.events[b].vars.contains(j)).collect();
            let mut aligned = true;
            for &j in &shared {
                if cut.variables[j].domain != 2 {
                    aligned = false;
                    break;
                }
                let (x, y) = (cut.classify(&cut.indicators[a], j)?, cut.classify(&cut.indicators[b], j)?);
                aligned &= (x.is_up() && y.is_up()) || (x.is_down() && y.is_down());
            }
            if aligned {
                let (sa, sb) = (&cut.indicators[a], &cut.indicators[b]);
                if cut.prob(&intersection(sa, sb)) < cut.prob(sa) * cut.prob(sb) {
                    aligned_pair_failure = Some((a, b));
                    break 'pairs;
                }
            }
        }
    }
    Ok(CuttingReport { union_preserved, correlation_failure, lopsidependency, aligned_pair_failure })
}

/// Exhaustively checks the monotonicity lemmas over all pairs of events on `n_vars`
/// binary variables with the given Pr(X_j = 1); returns the first violation.
///
/// (a) same-direction unions and intersections keep the direction, (b) A₁∖A₂ stays
/// opposite to A₂ when the pair is opposite, (c) same-direction pairs are positively correlated.
pub fn check_monotone_lemmas(n_vars: usize, p_one: &[Rational]) -> Result<Option<String>> {
    if n_vars == 0 || n_vars > 3 || p_one.len() != n_vars {
        return invalid("monotone lemmas are checked on 1 to 3 binary variables");
    }
    let variables: Vec<Variable> =
        p_one.iter().map(|p| Variable { domain: 2, masses: vec![Rational::one() - p, p.clone()] }).collect();
    let sys = DiscreteEventSystem::new(variables, Vec::new())?;
    let states = sys.state_count();
    let sets: Vec<StateSet> = (0..1u32 << states).map(|mask| (0..states).map(|s| mask >> s & 1 == 1).collect()).collect();
    let classes: Vec<Vec<Monotonicity>> =
        sets.iter().map(|s| (0..n_vars).map(|x| sys.classify(s, x)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let up_all = |c: &[Monotonicity], dir: &[bool]| c.iter().zip(dir).all(|(m, &up)| if up { m.is_up() } else { m.is_down() });
    // Direction patterns: for each variable, up (true) or down (false).
    for pattern in 0..1u32 << n_vars {
        let dir: Vec<bool> = (0..n_vars).map(|x| pattern >> x & 1 == 1).collect();
        let opp: Vec<bool> = dir.iter().map(|d| !d).collect();
        let same: Vec<usize> = (0..sets.len()).filter(|&a| up_all(&classes[a], &dir)).collect();
        let opposite: Vec<usize> = (0..sets.len()).filter(|&a| up_all(&classes[a], &opp)).collect();
        for &a in &same {
            for &b in &same {
                for (name, s) in [("union", union(&sets[a], &sets[b])), ("intersection", intersection(&sets[a], &sets[b]))] {
                    let c: Vec<Monotonicity> = (0..n_vars).map(|x| sys.classify(&s, x)).collect::<Result<_>>()?;
                    if !up_all(&c, &dir) {
                        return Ok(Some(format!("(a) {name} of sets {a} and {b} loses direction pattern {pattern}")));
                    }
                }
                let (sa, sb) = (&sets[a], &sets[b]);
                if sys.prob(&intersection(sa, sb)) < sys.prob(sa) * sys.prob(sb) {
                    return Ok(Some(format!("(c) sets {a} and {b} are negatively correlated")));
                }
            }
            for &b in &opposite {
                let s = difference(&sets[a], &sets[b]);
                let c: Vec<Monotonicity> = (0..n_vars).map(|x| sys.classify(&s, x)).collect::<Result<_>>()?;
                if !up_all(&c, &dir) {
                    return Ok(Some(format!("(b) set {a} minus set {b} is not opposite to set {b}")));
                }
            }
        }
    }
    Ok(None)
}

/// Realises the extremal distribution of `g` at `p`: one variable ranging over the
/// independent sets with their extremal masses, and A_v = {Z ∋ v}.
pub fn extremal_system(g: &DependencyGraph, p: &[Rational]) -> Result<DiscreteEventSystem> {
    let dist = extremal_distribution(g, p)?;
    let variable = Variable { domain: dist.len(), masses: dist.iter().map(|(_, m)| m.clone()).collect() };
    let events = (0..g.m())
        .map(|v| Event {
            vars: vec![0],
            assignments: dist.iter().enumerate().filter(|(_, (s, _))| s.contains(&v)).map(|(z, _)| vec![z]).collect(),
        })
        .collect();
    DiscreteEventSystem::new(vec![variable], events)
}

/// Pr(no event occurs).
pub fn avoidance_probability(sys: &DiscreteEventSystem) -> Rational {
    let all = if sys.m() >= 64 { u64::MAX } else { (1u64 << sys.m()) - 1 };
    Rational::one() - sys.prob(&sys.union_of(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::shearer::ind_poly;

    fn ev(vars: &[usize], tuples: &[&[usize]]) -> Event {
        Event { vars: vars.to_vec(), assignments: tuples.iter().map(|t| t.to_vec()).collect() }
    }

    fn bits2() -> Vec<Variable> {
        vec![Variable::uniform(2), Variable::uniform(2)]
    }

    #[test]
    fn probabilities() {
        let sys = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[1]]), ev(&[1], &[&[0]]), ev(&[0], &[&[0]])]).unwrap();
        assert_eq!(event_prob(&sys, &ProbExpr::Event(0)).unwrap(), ratio(1, 2));
        assert_eq!(event_prob(&sys, &ProbExpr::Union(vec![0, 2])).unwrap(), Rational::one());
        let cond = ProbExpr::Conditional(Box::new(ProbExpr::Event(0)), Box::new(ProbExpr::Event(1)));
        assert_eq!(event_prob(&sys, &cond).unwrap(), ratio(1, 2));
        let empty = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[])]).unwrap();
        let cond = ProbExpr::Conditional(Box::new(ProbExpr::Event(0)), Box::new(ProbExpr::Event(0)));
        assert!(event_prob(&empty, &cond).is_err());
    }

    #[test]
    fn invalid_systems() {
        let bad = vec![Variable { domain: 2, masses: vec![ratio(1, 2), ratio(1, 3)] }];
        assert!(DiscreteEventSystem::new(bad, vec![]).is_err());
        assert!(DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[2]])]).is_err());
        assert!(DiscreteEventSystem::new(vec![Variable::uniform(2); 21], vec![]).is_err());
    }

    #[test]
    fn cross_sections() {
        let sys = DiscreteEventSystem::new(
            bits2(),
            vec![ev(&[1], &[&[1]]), ev(&[0], &[&[1]]), ev(&[0, 1], &[&[0, 1], &[1, 0], &[1, 1]]), ev(&[0], &[&[0]])],
        )
        .unwrap();
        assert_eq!(cross_section_monotone(&sys, 0, 0).unwrap().class, Monotonicity::Both);
        assert_eq!(cross_section_monotone(&sys, 1, 0).unwrap().class, Monotonicity::Up);
        let c = cross_section_monotone(&sys, 2, 0).unwrap();
        assert_eq!(c.class, Monotonicity::Up);
        assert_eq!(c.section0.len(), 1);
        assert_eq!(c.section1.len(), 2);
        assert_eq!(cross_section_monotone(&sys, 3, 0).unwrap().class, Monotonicity::Down);
        let ternary = DiscreteEventSystem::new(vec![Variable::uniform(3)], vec![ev(&[0], &[&[1]])]).unwrap();
        assert!(cross_section_monotone(&ternary, 0, 0).is_err());
    }

    #[test]
    fn cutting_example() {
        let sys = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[1]]), ev(&[0, 1], &[&[1, 1]])]).unwrap();
        let plan = CuttingPlan { cuts: vec![(0, 1)] };
        let cut = cut_events(&sys, &plan).unwrap();
        assert_eq!(cut.events()[0], ev(&[0, 1], &[&[1, 0]]));
        assert_eq!(event_prob(&cut, &ProbExpr::Event(0)).unwrap(), ratio(1, 4));
        assert_eq!(cut_events(&sys, &CuttingPlan::default()).unwrap(), sys);
    }

    #[test]
    fn cutting_disjoint_events_is_identity() {
        let sys = DiscreteEventSystem::new(bits2(), vec![ev(&[0, 1], &[&[1, 1]]), ev(&[1], &[&[0]])]).unwrap();
        let cut = cut_events(&sys, &CuttingPlan { cuts: vec![(0, 1)] }).unwrap();
        assert_eq!(cut.indicator(0), sys.indicator(0));
    }

    #[test]
    fn incompatible_plans_are_rejected() {
        let vars = vec![Variable::uniform(2); 3];
        let sys = DiscreteEventSystem::new(vars, vec![ev(&[0], &[&[1]]), ev(&[0, 1], &[&[0, 0]]), ev(&[1, 2], &[&[1, 1]])]).unwrap();
        assert!(validate_plan(&sys, &CuttingPlan { cuts: vec![(0, 1), (2, 1)] }).is_err());
        assert!(validate_plan(&sys, &CuttingPlan { cuts: vec![(0, 1), (1, 2)] }).is_err());
        assert!(validate_plan(&sys, &CuttingPlan { cuts: vec![(0, 2)] }).is_err());
        assert!(validate_plan(&sys, &CuttingPlan { cuts: vec![(0, 1)] }).is_ok());
    }

    #[test]
    fn opposite_pair_cutting_properties() {
        // A_k is X-up, A_i = {X=0, Y=1} is X-down: a standard pair.
        let sys = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[1]]), ev(&[0, 1], &[&[0, 1]])]).unwrap();
        check_standard(&sys).unwrap();
        let report = verify_cutting_properties(&sys, &CuttingPlan { cuts: vec![(0, 1)] }).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(verify_cutting_properties(&sys, &CuttingPlan::default()).unwrap().passed());
        let same = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[1]]), ev(&[0, 1], &[&[1, 1]])]).unwrap();
        assert!(check_standard(&same).is_err());
    }

    #[test]
    fn lopsidependency_examples() {
        let indep = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[1]]), ev(&[1], &[&[1]])]).unwrap();
        assert!(lopsidependency_check(&indep, &DependencyGraph::empty(2)).unwrap().holds);
        let clash = DiscreteEventSystem::new(bits2(), vec![ev(&[0], &[&[1]]), ev(&[0], &[&[0]])]).unwrap();
        let v = lopsidependency_check(&clash, &DependencyGraph::empty(2)).unwrap();
        assert_eq!(v.counterexample, Some((0, vec![1])));
        assert!(lopsidependency_check(&clash, &DependencyGraph::complete(2)).unwrap().holds);
    }

    #[test]
    fn monotone_lemmas_on_small_spaces() {
        for n in 1..=2 {
            let masses: Vec<Rational> = (0..n).map(|j| ratio(j as i64 + 1, 4)).collect();
            assert_eq!(check_monotone_lemmas(n, &masses).unwrap(), None);
        }
    }

    #[test]
    fn extremal_realisation() {
        let g = DependencyGraph::cycle(4);
        let p = vec![ratio(1, 10), ratio(1, 5), ratio(1, 10), ratio(1, 8)];
        let sys = extremal_system(&g, &p).unwrap();
        assert_eq!(avoidance_probability(&sys), ind_poly(&g, &p, None).unwrap());
        for (v, pv) in p.iter().enumerate() {
            assert_eq!(&event_prob(&sys, &ProbExpr::Event(v)).unwrap(), pv);
        }
    }

    #[test]
    fn json_round_trip() {
        let sys = DiscreteEventSystem::new(bits2(), vec![ev(&[0, 1], &[&[0, 1], &[1, 1]])]).unwrap();
        assert_eq!(DiscreteEventSystem::from_json(&sys.to_json()).unwrap(), sys);
    }
}
