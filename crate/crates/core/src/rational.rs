//! Exact rational helpers: parsing, formatting and serde glue.

use num::bigint::{BigInt, Sign};
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{LllError, Result};

/// Arbitrary-precision exact fraction.
pub type Rational = BigRational;

/// Builds `n/d` from machine integers.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"a/b"`, `"a"`, or a decimal literal such as `"0.3"`, `"-1.5e-3"`.
///
/// Decimal literals are converted exactly, so `"0.1"` is `1/10`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || LllError::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(LllError::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().map_err(|_| bad())?;
    let digits = digits / BigInt::from(10);
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(digits * num::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Parses a comma-separated list of rationals.
pub fn parse_rational_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_rational)
        .collect()
}

/// Canonical `"num/den"` rendering (integers keep the `/1`).
pub fn fmt_exact(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering with `sig` significant digits, rounded half away from zero.
///
/// Values with decimal exponent outside `[-4, 12)` use scientific notation.
pub fn fmt_decimal(r: &Rational, sig: usize) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1);
    let neg = r.is_negative();
    let a = r.abs();
    // Exponent e with 10^e <= a < 10^(e+1).
    let mut e = estimate_exponent(&a);
    let ten = int(10);
    loop {
        let lo = pow10(e);
        if a < lo {
            e -= 1;
            continue;
        }
        if a >= &lo * &ten {
            e += 1;
            continue;
        }
        break;
    }
    // Integer with `sig` digits: round(a * 10^(sig-1-e)).
    let shift = sig as i64 - 1 - e;
    let scaled = &a * pow10(shift);
    let mut digits = round_half_up(&scaled);
    if digits.to_string().len() > sig {
        // Rounding carried into a new digit.
        digits /= BigInt::from(10);
        e += 1;
    }
    let ds = digits.to_string();
    let body = if (-4..12).contains(&e) {
        place_point(&ds, e)
    } else {
        let (h, t) = ds.split_at(1);
        let t = t.trim_end_matches('0');
        if t.is_empty() {
            format!("{h}e{e}")
        } else {
            format!("{h}.{t}e{e}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn place_point(ds: &str, e: i64) -> String {
    let n = ds.len() as i64;
    let s = if e < 0 {
        format!("0.{}{}", "0".repeat((-e - 1) as usize), ds)
    } else if e + 1 >= n {
        format!("{}{}", ds, "0".repeat((e + 1 - n) as usize))
    } else {
        let (a, b) = ds.split_at((e + 1) as usize);
        format!("{a}.{b}")
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn estimate_exponent(a: &Rational) -> i64 {
    let bits = a.numer().bits() as i64 - a.denom().bits() as i64;
    (bits as f64 * std::f64::consts::LOG10_2).floor() as i64
}

fn pow10(e: i64) -> Rational {
    let ten = BigInt::from(10);
    if e >= 0 {
        Rational::from_integer(num::pow(ten, e as usize))
    } else {
        Rational::new(BigInt::one(), num::pow(ten, (-e) as usize))
    }
}

fn round_half_up(x: &Rational) -> BigInt {
    let two = BigInt::from(2);
    let n = x.numer() * &two + x.denom();
    let d = x.denom() * &two;
    // x >= 0 here, so floor division is truncation.
    n / d
}

/// Lossy conversion for diagnostics only.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Least common multiple of the denominators, i.e. `pd` extended to vectors.
pub fn common_denominator<'a>(rs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    rs.into_iter()
        .fold(BigInt::one(), |acc, r| num::integer::lcm(acc, r.denom().clone()))
}

/// Integer square root of a non-negative big integer (floor).
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(n.sign() != Sign::Minus, "isqrt of negative value");
    n.sqrt()
}

/// Serde adapter storing a rational as a `"num/den"` string.
pub mod serde_exact {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_exact(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_exact_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&fmt_exact(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("0.3").unwrap(), ratio(3, 10));
        assert_eq!(parse_rational("1e-12").unwrap(), Rational::new(1.into(), num::pow(BigInt::from(10), 12)));
        assert_eq!(parse_rational("-1.5e2").unwrap(), int(-150));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational(".25").unwrap(), ratio(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_decimals() {
        assert_eq!(fmt_decimal(&ratio(3, 80), 12), "0.0375");
        assert_eq!(fmt_decimal(&ratio(1, 3), 4), "0.3333");
        assert_eq!(fmt_decimal(&ratio(2, 3), 4), "0.6667");
        assert_eq!(fmt_decimal(&int(0), 4), "0");
        assert_eq!(fmt_decimal(&ratio(-1, 8), 12), "-0.125");
        assert_eq!(fmt_decimal(&parse_rational("5.9439e-8").unwrap(), 4), "5.944e-8");
        assert_eq!(fmt_decimal(&ratio(9999, 10000), 3), "1");
        assert_eq!(fmt_decimal(&int(1234), 12), "1234");
        assert_eq!(fmt_exact(&int(0)), "0/1");
    }
}
