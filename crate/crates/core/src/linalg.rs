//! Rank computations over ℚ (fraction-free) and over large prime fields.

use num::bigint::{BigInt, Sign};
use num::{Integer, One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::rational::Rational;

/// Smallest admissible modulus for modular rank.
pub const MIN_PRIME: u64 = 1 << 60;

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Random prime in [2^60, 2^62).
pub fn random_prime<R: Rng>(rng: &mut R) -> u64 {
    loop {
        let c = rng.gen_range(MIN_PRIME..(1u64 << 62)) | 1;
        if is_prime(c) {
            return c;
        }
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Reduces an integer modulo `p` into `[0, p)`.
pub fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits in u64")
}

/// Scales a rational row to a primitive integer row with the same span.
pub fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let den = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = row.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        ints
    } else {
        ints.into_iter().map(|x| x / &g).collect()
    }
}

/// Incremental row echelon form over 𝔽_p.
pub struct ModEchelon {
    p: u64,
    cols: usize,
    /// (pivot column, row with a 1 at the pivot) in insertion order.
    pivots: Vec<(usize, Vec<u64>)>,
}

impl ModEchelon {
    pub fn new(p: u64, cols: usize) -> Self {
        ModEchelon { p, cols, pivots: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_full(&self) -> bool {
        self.pivots.len() == self.cols
    }

    /// Adds a row; returns whether the rank grew.
    pub fn push(&mut self, mut row: Vec<u64>) -> bool {
        debug_assert_eq!(row.len(), self.cols);
        let p = self.p;
        for (c, prow) in &self.pivots {
            let f = row[*c];
            if f == 0 {
                continue;
            }
            let neg = p - f;
            for (x, &y) in row.iter_mut().zip(prow.iter()).skip(*c) {
                if y != 0 {
                    *x = ((*x as u128 + neg as u128 * y as u128) % p as u128) as u64;
                }
            }
        }
        match row.iter().position(|&x| x != 0) {
            None => false,
            Some(c) => {
                let inv = inv_mod(row[c], p);
                for x in row.iter_mut().skip(c) {
                    *x = mul_mod(*x, inv, p);
                }
                self.pivots.push((c, row));
                true
            }
        }
    }
}

/// Rank of integer rows modulo `p`.
pub fn rank_mod(rows: &[Vec<BigInt>], cols: usize, p: u64) -> usize {
    let mut e = ModEchelon::new(p, cols);
    for r in rows {
        if e.is_full() {
            break;
        }
        e.push(r.iter().map(|x| reduce_mod(x, p)).collect());
    }
    e.rank()
}

/// Exact rank over ℚ by fraction-free (Bareiss) elimination.
pub fn rank_exact(rows: &[Vec<BigInt>], cols: usize) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let n = a.len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if rank == n {
            break;
        }
        let Some(piv) = (rank..n).filter(|&r| !a[r][c].is_zero()).min_by_key(|&r| a[r][c].bits()) else {
            continue;
        };
        a.swap(rank, piv);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pr = &top[rank];
        let pv = pr[c].clone();
        for row in rest.iter_mut() {
            let f = std::mem::take(&mut row[c]);
            for j in c + 1..cols {
                let mut v = &pv * &row[j];
                if !f.is_zero() && !pr[j].is_zero() {
                    v -= &f * &pr[j];
                }
                if !prev.is_one() {
                    v /= &prev;
                }
                row[j] = v;
            }
        }
        prev = pv;
        rank += 1;
    }
    rank
}

/// `k` random integer rows of length `ambient` with entries in [−2^20, 2^20],
/// resampled (up to 16 times) until they are linearly independent.
pub fn random_full_rank_rows<R: Rng>(k: usize, ambient: usize, rng: &mut R) -> Option<Vec<Vec<BigInt>>> {
    if k > ambient {
        return None;
    }
    const BOUND: i64 = 1 << 20;
    let p = random_prime(rng);
    for _ in 0..16 {
        let rows: Vec<Vec<BigInt>> = (0..k)
            .map(|_| (0..ambient).map(|_| BigInt::from(rng.gen_range(-BOUND..=BOUND))).collect())
            .collect();
        // Full rank modulo p certifies full rank over ℚ.
        if rank_mod(&rows, ambient, p) == k {
            return Some(rows);
        }
    }
    None
}

pub fn is_zero_row(row: &[BigInt]) -> bool {
    row.iter().all(|x| x.sign() == Sign::NoSign)
}

pub fn max_abs_bits(rows: &[Vec<BigInt>]) -> u64 {
    rows.iter().flatten().map(|x| x.abs().bits()).max().unwrap_or(0)
}
