//! Explicit subspace instances of the quantum LLL: random sampling, rank
//! verification, dimension padding, and constructions that attain Shearer's bound.
//!
//! A Hamiltonian is stored as a basis of its local subspace V_i^loc inside
//! ⊗_{j∈𝒩(i)} H_j. Local and global product bases are ordered with the lowest
//! qudit index most significant.

use num::bigint::BigInt;
use num::{Integer, One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{domain, invalid, LllError, Result};
use crate::graph::{bits, DependencyGraph, InteractionGraph};
use crate::linalg::{integer_row, random_full_rank_rows, random_prime, rank_exact, reduce_mod, ModEchelon};
use crate::rational::{fmt_decimal, fmt_exact, parse_rational, Rational};
use crate::shearer::{shearer_check, IndPoly};

/// Largest total dimension ∏ d_j accepted by default.
pub const DEFAULT_MAX_TOTAL_DIM: u64 = 1 << 16;
/// Automatic rank verification is exact up to this total dimension.
pub const EXACT_AUTO_LIMIT: u64 = 256;
/// Explicitly requested exact verification refuses larger spaces.
pub const EXACT_CAP: u64 = 4096;

/// One Hamiltonian: a basis of its local subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalSubspace {
    /// Qudits acted on, sorted; equals 𝒩(i).
    pub acts_on: Vec<usize>,
    /// Linearly independent rows of length ∏_{j∈acts_on} d_j.
    pub basis: Vec<Vec<BigInt>>,
}

/// Hamiltonians of a frustration-free system given by their local subspaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceInstance {
    pub graph: InteractionGraph,
    pub dims: Vec<u64>,
    pub seed: u64,
    pub hamiltonians: Vec<LocalSubspace>,
}

fn product(dims: &[u64], idx: &[usize]) -> u64 {
    idx.iter().map(|&j| dims[j]).product()
}

impl SubspaceInstance {
    pub fn total_dim(&self) -> u64 {
        self.dims.iter().product()
    }

    pub fn local_dim(&self, i: usize) -> u64 {
        product(&self.dims, &self.hamiltonians[i].acts_on)
    }

    /// dim V_i^loc / dim H_{𝒩(i)} for every Hamiltonian.
    pub fn relative_dims(&self) -> Vec<Rational> {
        (0..self.hamiltonians.len())
            .map(|i| Rational::new(BigInt::from(self.hamiltonians[i].basis.len()), BigInt::from(self.local_dim(i))))
            .collect()
    }

    /// Checks shapes, acts_on = 𝒩(i), and linear independence of every basis.
    pub fn validate(&self) -> Result<()> {
        let g = &self.graph;
        if self.dims.len() != g.n() {
            return invalid(format!("{} dimensions given for {} qudits", self.dims.len(), g.n()));
        }
        if self.dims.contains(&0) {
            return invalid("qudit dimensions must be positive");
        }
        if self.hamiltonians.len() != g.m() {
            return invalid(format!("{} Hamiltonians given for {} left vertices", self.hamiltonians.len(), g.m()));
        }
        let mut total: u64 = 1;
        for &d in &self.dims {
            total = total.checked_mul(d).ok_or_else(|| LllError::CapExceeded("total dimension overflows u64".into()))?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let p = random_prime(&mut rng);
        for (i, h) in self.hamiltonians.iter().enumerate() {
            if h.acts_on != g.left_neighbors(i) {
                return invalid(format!("Hamiltonian {} acts on qudits other than its graph neighbours", i + 1));
            }
            let ld = self.local_dim(i) as usize;
            if h.basis.iter().any(|row| row.len() != ld) {
                return invalid(format!("Hamiltonian {}: basis rows must have length {ld}", i + 1));
            }
            let mut e = ModEchelon::new(p, ld);
            let independent = h.basis.iter().all(|row| e.push(row.iter().map(|x| reduce_mod(x, p)).collect()));
            if !independent && crate::linalg::rank_exact(&h.basis, ld) < h.basis.len() {
                return invalid(format!("Hamiltonian {}: basis rows are linearly dependent", i + 1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let hams: Vec<serde_json::Value> = self
            .hamiltonians
            .iter()
            .map(|h| {
                let basis: Vec<Vec<String>> = h.basis.iter().map(|row| row.iter().map(|x| format!("{x}/1")).collect()).collect();
                json!({"acts_on": h.acts_on.iter().map(|j| j + 1).collect::<Vec<_>>(), "basis": basis})
            })
            .collect();
        json!({"graph": self.graph.to_json(), "dims": self.dims, "seed": self.seed, "hamiltonians": hams})
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct HJson {
            acts_on: Vec<usize>,
            basis: Vec<Vec<String>>,
        }
        #[derive(Deserialize)]
        struct IJson {
            graph: serde_json::Value,
            dims: Vec<u64>,
            #[serde(default)]
            seed: u64,
            hamiltonians: Vec<HJson>,
        }
        let raw: IJson = serde_json::from_value(v.clone()).map_err(|e| LllError::Parse(format!("instance: {e}")))?;
        let graph = InteractionGraph::from_json(&raw.graph)?;
        let mut hamiltonians = Vec::with_capacity(raw.hamiltonians.len());
        for h in raw.hamiltonians {
            if h.acts_on.contains(&0) {
                return Err(LllError::Parse("acts_on is 1-indexed".into()));
            }
            let rows = h
                .basis
                .iter()
                .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            hamiltonians.push(LocalSubspace {
                acts_on: h.acts_on.iter().map(|j| j - 1).collect(),
                basis: rows.iter().map(|r| integer_row(r)).collect(),
            });
        }
        let inst = SubspaceInstance { graph, dims: raw.dims, seed: raw.seed, hamiltonians };
        inst.validate()?;
        Ok(inst)
    }
}

/// How ranks are certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Auto,
    Exact,
    Modular,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankMethod {
    Exact,
    Modular(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanReport {
    pub rank: u64,
    pub total_dim: u64,
    /// dim ker(H) / dim H = 1 − rank / total.
    pub kernel_relative_dim: Rational,
    pub spans: bool,
    pub method: RankMethod,
}

impl SpanReport {
    pub fn to_json(&self) -> serde_json::Value {
        let method = match &self.method {
            RankMethod::Exact => json!("exact"),
            RankMethod::Modular(ps) => json!({"modular": ps}),
        };
        json!({
            "rank": self.rank,
            "total_dim": self.total_dim,
            "kernel_relative_dim": fmt_exact(&self.kernel_relative_dim),
            "kernel_relative_dim_decimal": fmt_decimal(&self.kernel_relative_dim, 12),
            "spans": self.spans,
            "method": method,
        })
    }
}

/// Enumerates the global rows spanned by V_i^loc ⊗ H_{rest}, one per (basis row, rest assignment).
struct Lifter {
    dims: Vec<u64>,
    strides: Vec<u64>,
    total: u64,
}

impl Lifter {
    fn new(dims: &[u64]) -> Self {
        let n = dims.len();
        let mut strides = vec![1u64; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * dims[j + 1];
        }
        Lifter { dims: dims.to_vec(), strides, total: dims.iter().product() }
    }

    /// Global offsets contributed by each local index of `acts_on`.
    fn local_offsets(&self, acts_on: &[usize]) -> Vec<u64> {
        let mut offs = vec![0u64];
        for &j in acts_on {
            let mut next = Vec::with_capacity(offs.len() * self.dims[j] as usize);
            for &o in &offs {
                for x in 0..self.dims[j] {
                    next.push(o + x * self.strides[j]);
                }
            }
            offs = next;
        }
        offs
    }

    fn rest_offsets(&self, acts_on: &[usize]) -> Vec<u64> {
        let rest: Vec<usize> = (0..self.dims.len()).filter(|j| !acts_on.contains(j)).collect();
        self.local_offsets(&rest)
    }

    fn for_each_row(&self, h: &LocalSubspace, mut f: impl FnMut(&[(usize, &BigInt)]) -> bool) {
        let local = self.local_offsets(&h.acts_on);
        let rest = self.rest_offsets(&h.acts_on);
        let mut sparse = Vec::new();
        for row in &h.basis {
            for &ro in &rest {
                sparse.clear();
                sparse.extend(row.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(l, x)| ((ro + local[l]) as usize, x)));
                if !f(&sparse) {
                    return;
                }
            }
        }
    }
}

fn rank_of_instance_mod(inst: &SubspaceInstance, lifter: &Lifter, p: u64) -> u64 {
    let cols = lifter.total as usize;
    let mut e = ModEchelon::new(p, cols);
    for h in &inst.hamiltonians {
        lifter.for_each_row(h, |sparse| {
            let mut row = vec![0u64; cols];
            for &(c, x) in sparse {
                row[c] = reduce_mod(x, p);
            }
            e.push(row);
            !e.is_full()
        });
        if e.is_full() {
            break;
        }
    }
    e.rank() as u64
}

fn rank_of_instance_exact(inst: &SubspaceInstance, lifter: &Lifter) -> u64 {
    let cols = lifter.total as usize;
    let mut rows = Vec::new();
    for h in &inst.hamiltonians {
        lifter.for_each_row(h, |sparse| {
            let mut row = vec![BigInt::zero(); cols];
            for &(c, x) in sparse {
                row[c] = x.clone();
            }
            rows.push(row);
            true
        });
    }
    rank_exact(&rows, cols) as u64
}

/// Rank of the span of all Hamiltonians lifted to the full space.
///
/// `Auto` is exact up to 256 total dimensions and otherwise uses two random primes
/// above 2^60, falling back to exact elimination when they disagree.
pub fn verify_span(inst: &SubspaceInstance, mode: RankMode) -> Result<SpanReport> {
    inst.validate()?;
    let total = inst.total_dim();
    let lifter = Lifter::new(&inst.dims);
    let exact = match mode {
        RankMode::Exact => {
            if total > EXACT_CAP {
                return Err(LllError::CapExceeded(format!("exact rank limited to total dimension {EXACT_CAP}, got {total}")));
            }
            true
        }
        RankMode::Auto => total <= EXACT_AUTO_LIMIT,
        RankMode::Modular => false,
    };
    let (rank, method) = if exact {
        (rank_of_instance_exact(inst, &lifter), RankMethod::Exact)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x5eed_0f5a_1100_u64);
        let primes = [random_prime(&mut rng), random_prime(&mut rng)];
        let ranks: Vec<u64> = primes.iter().map(|&p| rank_of_instance_mod(inst, &lifter, p)).collect();
        if ranks[0] == ranks[1] {
            (ranks[0], RankMethod::Modular(primes.to_vec()))
        } else {
            (rank_of_instance_exact(inst, &lifter), RankMethod::Exact)
        }
    };
    let kernel = Rational::one() - Rational::new(BigInt::from(rank), BigInt::from(total));
    Ok(SpanReport { rank, total_dim: total, spans: rank == total, kernel_relative_dim: kernel, method })
}

/// `k` random linearly independent vectors in an `ambient`-dimensional space.
pub fn sample_random_subspace(ambient: usize, k: usize, seed: u64) -> Result<Vec<Vec<BigInt>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(&mut rng, ambient, k)
}

fn sample_with(rng: &mut ChaCha8Rng, ambient: usize, k: usize) -> Result<Vec<Vec<BigInt>>> {
    if k > ambient {
        return invalid(format!("cannot sample {k} independent vectors in dimension {ambient}"));
    }
    if k == ambient {
        return Ok(identity_rows(ambient));
    }
    random_full_rank_rows(k, ambient, rng)
        .ok_or_else(|| LllError::Verification(format!("no full-rank {k}x{ambient} sample after 16 attempts")))
}

fn identity_rows(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|a| (0..n).map(|b| if a == b { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

/// Random instance with prescribed relative dimensions; `r_i·∏_{𝒩(i)} d_j` must be an integer.
pub fn random_instance(g: &InteractionGraph, dims: &[u64], r: &[Rational], seed: u64) -> Result<SubspaceInstance> {
    if dims.len() != g.n() || r.len() != g.m() {
        return invalid("dimension or relative-dimension vector has the wrong length");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hams = Vec::with_capacity(g.m());
    for i in 0..g.m() {
        let acts_on = g.left_neighbors(i).to_vec();
        let ld = product(dims, &acts_on);
        let k = &r[i] * Rational::from_integer(BigInt::from(ld));
        if !k.is_integer() || k.is_negative() || k > Rational::from_integer(BigInt::from(ld)) {
            return invalid(format!("r_{} = {} is not realisable with local dimension {ld}", i + 1, fmt_exact(&r[i])));
        }
        let k = k.to_integer().to_usize().expect("fits");
        hams.push(LocalSubspace { acts_on, basis: sample_with(&mut rng, ld as usize, k)? });
    }
    Ok(SubspaceInstance { graph: g.clone(), dims: dims.to_vec(), seed, hamiltonians: hams })
}

/// Replicates the instance block-diagonally so that qudit j has dimension `new_dims[j]`,
/// which must be a multiple of the current one. Relative dimensions and spanning are preserved.
pub fn pad_dims(inst: &SubspaceInstance, new_dims: &[u64], max_total: u64) -> Result<SubspaceInstance> {
    if new_dims.len() != inst.dims.len() {
        return invalid(format!("expected {} dimensions, got {}", inst.dims.len(), new_dims.len()));
    }
    for (j, (&d, &nd)) in inst.dims.iter().zip(new_dims).enumerate() {
        if nd == 0 || nd % d != 0 {
            return invalid(format!("new dimension {nd} of qudit {} is not a multiple of {d}", j + 1));
        }
    }
    check_total(new_dims, max_total, "padding")?;
    let mut hams = Vec::with_capacity(inst.hamiltonians.len());
    for h in &inst.hamiltonians {
        let old: Vec<u64> = h.acts_on.iter().map(|&j| inst.dims[j]).collect();
        let new: Vec<u64> = h.acts_on.iter().map(|&j| new_dims[j]).collect();
        let copies: Vec<u64> = old.iter().zip(&new).map(|(o, n)| n / o).collect();
        let new_len: u64 = new.iter().product();
        let old_len: u64 = old.iter().product();
        let mut basis = Vec::with_capacity(h.basis.len() * copies.iter().product::<u64>() as usize);
        for c in 0..copies.iter().product::<u64>() {
            let cidx = mixed_radix(c, &copies);
            // Map each old local index into copy `cidx` of the padded local space.
            let map: Vec<usize> = (0..old_len)
                .map(|l| {
                    let x = mixed_radix(l, &old);
                    let mut idx = 0u64;
                    for t in 0..old.len() {
                        idx = idx * new[t] + cidx[t] * old[t] + x[t];
                    }
                    idx as usize
                })
                .collect();
            for row in &h.basis {
                let mut nr = vec![BigInt::zero(); new_len as usize];
                for (l, x) in row.iter().enumerate() {
                    nr[map[l]] = x.clone();
                }
                basis.push(nr);
            }
        }
        hams.push(LocalSubspace { acts_on: h.acts_on.clone(), basis });
    }
    Ok(SubspaceInstance { graph: inst.graph.clone(), dims: new_dims.to_vec(), seed: inst.seed, hamiltonians: hams })
}

fn mixed_radix(mut x: u64, radices: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; radices.len()];
    for t in (0..radices.len()).rev() {
        out[t] = x % radices[t];
        x /= radices[t];
    }
    out
}

fn check_total(dims: &[u64], max_total: u64, what: &str) -> Result<()> {
    let mut total: u128 = 1;
    for &d in dims {
        total = total.saturating_mul(d as u128);
    }
    if total > max_total as u128 {
        return Err(LllError::CapExceeded(format!("{what}: total dimension {total} exceeds {max_total}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Construction.

/// One slice of a split qudit: Hamiltonian `i` owns a fraction of the qudit.
#[derive(Debug, Clone)]
struct Slice {
    i: usize,
    fraction: Rational,
    overflow: bool,
}

#[derive(Debug, Clone)]
enum Plan {
    /// A single Hamiltonian with r_i = 1 covers its whole local space.
    Whole { i: usize },
    /// The minimal witness is proper; other Hamiltonians are arbitrary.
    Restrict { inner: Box<Plan>, extras: Vec<usize> },
    /// Qudit `qudit` is cut into one slice per neighbouring Hamiltonian.
    Split { qudit: usize, slices: Vec<Slice>, others: Vec<usize> },
}

struct Planner<'a> {
    g: &'a InteractionGraph,
    max_total: u64,
}

/// Planning result: the plan and per-qudit divisors such that every dimension
/// vector that is a componentwise multiple admits the instance.
struct Planned {
    plan: Plan,
    req: Vec<BigInt>,
}

fn lcm_vec(a: &mut [BigInt], b: &[BigInt]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = x.lcm(y);
    }
}

impl<'a> Planner<'a> {
    fn check_req(&self, req: &[BigInt], path: &str) -> Result<()> {
        let total = req.iter().fold(BigInt::one(), |a, d| a * d);
        if total > BigInt::from(self.max_total) {
            return Err(LllError::CapExceeded(format!(
                "construction needs total dimension {total} > {} at {path}",
                self.max_total
            )));
        }
        Ok(())
    }

    /// Makes ρ·∏_{q∈qudits} D_q integral by enlarging the first listed qudit.
    fn make_integral(&self, req: &mut [BigInt], qudits: &[usize], rho: &Rational, what: &str) -> Result<()> {
        let prod = qudits.iter().fold(rho.clone(), |acc, &q| acc * Rational::from_integer(req[q].clone()));
        if prod.is_integer() {
            return Ok(());
        }
        match qudits.first() {
            Some(&q) => {
                req[q] = &req[q] * prod.denom();
                Ok(())
            }
            None => domain(format!("{what}: relative dimension {} cannot be realised without qudits", fmt_exact(rho))),
        }
    }

    fn plan(&self, active: &[usize], r: &[Rational], path: &str) -> Result<Planned> {
        let n = self.g.n();
        let sub = self.g.induced_left(active)?;
        let d = sub.base_graph()?;
        let r_act: Vec<Rational> = active.iter().map(|&i| r[i].clone()).collect();
        let verdict = shearer_check(&d, &r_act)?;
        let witness: Vec<usize> = match verdict.witness {
            Some(w) => w.iter().map(|&x| active[x]).collect(),
            None => return domain(format!("relative dimensions are inside Shearer's bound at {path}")),
        };

        if witness.len() < active.len() {
            let inner = self.plan(&witness, r, &format!("{path}/restrict{}", fmt_set(&witness)))?;
            let mut req = inner.req;
            let extras: Vec<usize> = active.iter().copied().filter(|i| !witness.contains(i)).collect();
            for &e in &extras {
                self.make_integral(&mut req, self.g.left_neighbors(e), &r[e], &format!("{path}: Hamiltonian {}", e + 1))?;
            }
            self.check_req(&req, path)?;
            return Ok(Planned { plan: Plan::Restrict { inner: Box::new(inner.plan), extras }, req });
        }

        if witness.len() == 1 {
            let i = witness[0];
            debug_assert!(r[i].is_one());
            return Ok(Planned { plan: Plan::Whole { i }, req: vec![BigInt::one(); n] });
        }

        // Every qudit shared by two active Hamiltonians is a valid split; keep the
        // one with the smallest total dimension, ties to the lowest index.
        let candidates: Vec<usize> = (0..n).filter(|&j| sub.right_neighbors(j).len() >= 2).collect();
        if candidates.is_empty() {
            return domain(format!("connected witness without a shared qudit at {path}"));
        }
        let mut best: Option<(BigInt, Planned)> = None;
        let mut first_err = None;
        for &qudit in &candidates {
            match self.split_at(qudit, active, r, &sub, &d, &r_act, path) {
                Ok(p) => {
                    let total = p.req.iter().fold(BigInt::one(), |a, x| a * x);
                    if best.as_ref().is_none_or(|(t, _)| total < *t) {
                        best = Some((total, p));
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match best {
            Some((_, p)) => Ok(p),
            None => Err(first_err.expect("at least one candidate")),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn split_at(
        &self,
        qudit: usize,
        active: &[usize],
        r: &[Rational],
        sub: &InteractionGraph,
        d: &DependencyGraph,
        r_act: &[Rational],
        path: &str,
    ) -> Result<Planned> {
        let n = self.g.n();
        let t_local: Vec<usize> = sub.right_neighbors(qudit).to_vec();
        let t_set: Vec<usize> = t_local.iter().map(|&x| active[x]).collect();
        let others: Vec<usize> = active.iter().copied().filter(|i| !t_set.contains(i)).collect();

        let mut ip = IndPoly::new(d, r_act)?;
        let full = d.full_mask();
        let weights: Vec<Rational> = t_local.iter().map(|&x| &r_act[x] * ip.eval(full & !d.closed_mask(x))).collect();
        let total: Rational = weights.iter().fold(Rational::zero(), |a, w| a + w);
        let t_mask = t_local.iter().fold(0u64, |a, &x| a | 1 << x);
        debug_assert_eq!(total, ip.eval(full & !t_mask) - ip.eval(full));
        debug_assert!(total <= Rational::from_integer(2.into()));

        let mut req = vec![BigInt::one(); n];
        let mut qudit_req = BigInt::one();
        let mut slices = Vec::with_capacity(t_set.len());
        for (x, &i) in t_set.iter().enumerate() {
            let fraction = &weights[x] / &total;
            let rescaled = &r[i] / &fraction;
            let overflow = rescaled > Rational::one();
            let slice_req = if overflow {
                BigInt::one()
            } else {
                let mut sub_active: Vec<usize> = others.clone();
                sub_active.push(i);
                sub_active.sort_unstable();
                let mut r_sub = r.to_vec();
                r_sub[i] = rescaled.clone();
                let planned = self.plan(&sub_active, &r_sub, &format!("{path}/split(q{})/slice(h{})", qudit + 1, i + 1))?;
                lcm_vec(&mut req, &planned.req);
                planned.req[qudit].clone()
            };
            // Smallest d with fraction·d a multiple of the slice requirement.
            let (a, b) = (fraction.numer(), fraction.denom());
            qudit_req = qudit_req.lcm(&(b * &slice_req / a.gcd(&slice_req)));
            slices.push(Slice { i, fraction, overflow });
        }
        req[qudit] = req[qudit].lcm(&qudit_req);

        for s in &slices {
            if s.overflow {
                let rest: Vec<usize> = self.g.left_neighbors(s.i).iter().copied().filter(|&q| q != qudit).collect();
                if !rest.is_empty() {
                    let rho = (&r[s.i] - &s.fraction) / (Rational::one() - &s.fraction);
                    self.make_integral(&mut req, &rest, &rho, &format!("{path}: overflow of Hamiltonian {}", s.i + 1))?;
                }
            }
        }
        for &i in active {
            self.make_integral(&mut req, self.g.left_neighbors(i), &r[i], &format!("{path}: Hamiltonian {}", i + 1))?;
        }
        self.check_req(&req, path)?;
        Ok(Planned { plan: Plan::Split { qudit, slices, others }, req })
    }
}

fn fmt_set(s: &[usize]) -> String {
    let v: Vec<String> = s.iter().map(|x| (x + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

struct Materializer<'a> {
    g: &'a InteractionGraph,
    dims: &'a [u64],
    r: &'a [Rational],
    rng: ChaCha8Rng,
    out: Vec<Option<Vec<Vec<BigInt>>>>,
}

impl<'a> Materializer<'a> {
    fn local_dim(&self, i: usize) -> u64 {
        product(self.dims, self.g.left_neighbors(i))
    }

    fn count(&self, rho: &Rational, dim: u64) -> Result<usize> {
        let k = rho * Rational::from_integer(BigInt::from(dim));
        if !k.is_integer() {
            return Err(LllError::Verification(format!("non-integral subspace dimension {}", fmt_exact(&k))));
        }
        Ok(k.to_integer().to_usize().expect("fits"))
    }

    fn random_full(&mut self, i: usize) -> Result<()> {
        let ld = self.local_dim(i);
        let k = self.count(&self.r[i], ld)?;
        let rows = sample_with(&mut self.rng, ld as usize, k)?;
        self.out[i] = Some(rows);
        Ok(())
    }

    fn run(&mut self, plan: &Plan) -> Result<()> {
        match plan {
            Plan::Whole { i } => {
                self.out[*i] = Some(identity_rows(self.local_dim(*i) as usize));
            }
            Plan::Restrict { inner, extras } => {
                self.run(inner)?;
                for &e in extras {
                    self.random_full(e)?;
                }
            }
            Plan::Split { qudit, slices, others } => {
                let dj = self.dims[*qudit];
                let mut offset = 0u64;
                for s in slices {
                    let size = self.count(&s.fraction, dj)? as u64;
                    self.slice_hamiltonian(*qudit, s, offset, size)?;
                    offset += size;
                }
                debug_assert_eq!(offset, dj);
                for &k in others {
                    self.random_full(k)?;
                }
            }
        }
        Ok(())
    }

    /// Builds V_i^loc for a Hamiltonian owning `size` coordinates of the split qudit starting at `offset`.
    fn slice_hamiltonian(&mut self, qudit: usize, s: &Slice, offset: u64, size: u64) -> Result<()> {
        let acts_on = self.g.left_neighbors(s.i).to_vec();
        let pos = acts_on.iter().position(|&q| q == qudit).expect("split qudit is a neighbour");
        let local_dims: Vec<u64> = acts_on.iter().map(|&q| self.dims[q]).collect();
        let ld: u64 = local_dims.iter().product();
        let dj = self.dims[qudit];
        let rest_dim = ld / dj;
        // Local index of (rest assignment x, split-qudit value y).
        let index = |x: u64, y: u64| -> usize {
            let mut rest_dims = local_dims.clone();
            rest_dims.remove(pos);
            let mut xs = mixed_radix(x, &rest_dims);
            xs.insert(pos, y);
            let mut idx = 0u64;
            for t in 0..local_dims.len() {
                idx = idx * local_dims[t] + xs[t];
            }
            idx as usize
        };
        let mut rows = Vec::new();
        if !s.overflow {
            // Random subspace of H_{𝒩(i)∖j} ⊗ slice with dimension r_i·d_j·P.
            let k = self.count(&self.r[s.i], ld)?;
            let amb = (rest_dim * size) as usize;
            for v in sample_with(&mut self.rng, amb, k)? {
                let mut row = vec![BigInt::zero(); ld as usize];
                for (c, x) in v.into_iter().enumerate() {
                    let (xr, y) = (c as u64 / size, c as u64 % size);
                    row[index(xr, offset + y)] = x;
                }
                rows.push(row);
            }
        } else {
            // Whole slice, plus V^of ⊗ (other slices) with V^of of relative dimension (r_i − f)/(1 − f).
            for xr in 0..rest_dim {
                for y in offset..offset + size {
                    let mut row = vec![BigInt::zero(); ld as usize];
                    row[index(xr, y)] = BigInt::one();
                    rows.push(row);
                }
            }
            let outside: Vec<u64> = (0..dj).filter(|y| *y < offset || *y >= offset + size).collect();
            if acts_on.len() > 1 {
                let rho = (&self.r[s.i] - &s.fraction) / (Rational::one() - &s.fraction);
                let k = self.count(&rho, rest_dim)?;
                let vof = sample_with(&mut self.rng, rest_dim as usize, k)?;
                for v in &vof {
                    for &y in &outside {
                        let mut row = vec![BigInt::zero(); ld as usize];
                        for (xr, x) in v.iter().enumerate() {
                            row[index(xr as u64, y)] = x.clone();
                        }
                        rows.push(row);
                    }
                }
            } else {
                // Only the split qudit: any subspace of the other slices of the right size.
                let k = self.count(&self.r[s.i], ld)? - size as usize;
                for v in sample_with(&mut self.rng, outside.len(), k)? {
                    let mut row = vec![BigInt::zero(); ld as usize];
                    for (c, x) in v.into_iter().enumerate() {
                        row[outside[c] as usize] = x;
                    }
                    rows.push(row);
                }
            }
        }
        self.out[s.i] = Some(rows);
        Ok(())
    }
}

/// Outcome of a construction.
#[derive(Debug, Clone)]
pub struct Construction {
    pub instance: SubspaceInstance,
    pub report: SpanReport,
}

fn build_spanning(g: &InteractionGraph, r: &[Rational], seed: u64, max_total: u64) -> Result<SubspaceInstance> {
    let planner = Planner { g, max_total };
    let active: Vec<usize> = (0..g.m()).collect();
    let planned = planner.plan(&active, r, "root")?;
    let dims: Vec<u64> = planned
        .req
        .iter()
        .map(|d| d.to_u64().ok_or_else(|| LllError::CapExceeded("dimension overflows u64".into())))
        .collect::<Result<_>>()?;
    check_total(&dims, max_total, "construction")?;
    let mut mat = Materializer { g, dims: &dims, r, rng: ChaCha8Rng::seed_from_u64(seed), out: vec![None; g.m()] };
    mat.run(&planned.plan)?;
    let hamiltonians = mat
        .out
        .into_iter()
        .enumerate()
        .map(|(i, rows)| LocalSubspace { acts_on: g.left_neighbors(i).to_vec(), basis: rows.expect("every Hamiltonian built") })
        .collect();
    Ok(SubspaceInstance { graph: g.clone(), dims, seed, hamiltonians })
}

fn check_r(g: &InteractionGraph, r: &[Rational]) -> Result<()> {
    if r.len() != g.m() {
        return invalid(format!("relative-dimension vector has length {}, graph has {} Hamiltonians", r.len(), g.m()));
    }
    if r.iter().any(|x| x.is_negative() || *x > Rational::one()) {
        return invalid("relative dimensions must lie in [0,1]");
    }
    Ok(())
}

fn reseed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1)
}

/// Builds an instance whose Hamiltonians span the whole space, for `r` beyond Shearer's bound.
pub fn construct_spanning_instance(g: &InteractionGraph, r: &[Rational], seed: u64, max_total: u64) -> Result<Construction> {
    check_r(g, r)?;
    let verdict = shearer_check(&g.base_graph()?, r)?;
    if verdict.in_bound {
        return domain("relative dimensions are inside Shearer's bound; no spanning instance exists");
    }
    let mut s = seed;
    for attempt in 0..2 {
        let instance = build_spanning(g, r, s, max_total)?;
        let report = verify_span(&instance, RankMode::Auto)?;
        if report.spans {
            return Ok(Construction { instance, report });
        }
        if attempt == 0 {
            s = reseed(s);
        }
    }
    Err(LllError::Verification("constructed instance does not span after reseeding".into()))
}

/// Builds an instance with kernel relative dimension exactly I(G, r), for `r` inside Shearer's bound.
///
/// A helper Hamiltonian acting on every qudit with relative dimension I(G, r) pushes `r`
/// onto the boundary; the spanning instance of the extended graph minus that helper is returned.
pub fn construct_boundary_instance(g: &InteractionGraph, r: &[Rational], seed: u64, max_total: u64) -> Result<Construction> {
    check_r(g, r)?;
    let d: DependencyGraph = g.base_graph()?;
    let verdict = shearer_check(&d, r)?;
    if !verdict.in_bound {
        return domain("relative dimensions are beyond Shearer's bound");
    }
    let value = verdict.full_value.clone();
    let mut edges = g.edges();
    edges.extend((0..g.n()).map(|j| (g.m(), j)));
    let extended = InteractionGraph::new(g.m() + 1, g.n(), &edges)?;
    let mut r_ext = r.to_vec();
    r_ext.push(if value.is_negative() { Rational::zero() } else { value.clone() });
    let mut s = seed;
    for attempt in 0..2 {
        let full = build_spanning(&extended, &r_ext, s, max_total)?;
        let mut hams = full.hamiltonians;
        hams.pop();
        let instance = SubspaceInstance { graph: g.clone(), dims: full.dims, seed: s, hamiltonians: hams };
        let report = verify_span(&instance, RankMode::Auto)?;
        if report.kernel_relative_dim == value {
            return Ok(Construction { instance, report });
        }
        if attempt == 0 {
            s = reseed(s);
        }
    }
    Err(LllError::Verification("boundary instance kernel differs from I(G, r) after reseeding".into()))
}

/// Which construction to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructMode {
    Span,
    Boundary,
}

pub fn construct(g: &InteractionGraph, r: &[Rational], mode: ConstructMode, seed: u64) -> Result<Construction> {
    match mode {
        ConstructMode::Span => construct_spanning_instance(g, r, seed, DEFAULT_MAX_TOTAL_DIM),
        ConstructMode::Boundary => construct_boundary_instance(g, r, seed, DEFAULT_MAX_TOTAL_DIM),
    }
}

/// Masks helper used by tests and diagnostics.
pub fn left_mask(vs: &[usize]) -> u64 {
    vs.iter().fold(0u64, |a, &v| a | 1 << v)
}

#[allow(dead_code)]
fn describe(mask: u64) -> String {
    fmt_set(&bits(mask).collect::<Vec<_>>())
}
