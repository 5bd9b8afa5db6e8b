//! Exact rational binomials and truncated polynomial products.
//!
//! Category sizes are usually integers, but reference-table reproduction
//! needs fractional sizes (e.g. 20/3 workers per category), so the binomial
//! takes a rational upper argument: C(m, j) = m (m-1) ... (m-j+1) / j!.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn rat_u(v: u64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Generalized binomial coefficient with rational `m` and integer `j`.
pub fn binomial(m: &Rat, j: u64) -> Rat {
    let mut num = Rat::one();
    for i in 0..j {
        num *= m - rat_u(i);
    }
    let mut den = BigInt::one();
    for i in 1..=j {
        den *= BigInt::from(i);
    }
    num / Rat::from_integer(den)
}

/// Integer binomial C(n, k) as a big integer (0 when k > n).
pub fn binomial_int(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `sum_{j=0}^{g-1} C(m, j) x^j` as a dense coefficient vector.
pub fn bin_poly(m: &Rat, g: u64) -> Vec<Rat> {
    (0..g).map(|j| binomial(m, j)).collect()
}

/// Product of two polynomials, truncated at degree `trunc` inclusive.
pub fn poly_mul(a: &[Rat], b: &[Rat], trunc: usize) -> Vec<Rat> {
    let len = (a.len() + b.len()).saturating_sub(1).min(trunc + 1);
    let mut out = vec![Rat::zero(); len];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() || i >= len {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

pub fn coeff(poly: &[Rat], degree: usize) -> Rat {
    poly.get(degree).cloned().unwrap_or_else(Rat::zero)
}

/// Render a rational as a decimal string with `digits` fractional digits,
/// rounding half away from zero. Exact-table CSV output uses this.
pub fn to_decimal_string(r: &Rat, digits: u32) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let scale = BigInt::from(10u32).pow(digits);
    // round(abs * scale)
    let scaled = &abs * Rat::from_integer(scale.clone());
    let (q, rem) = (scaled.numer() / scaled.denom(), scaled.numer() % scaled.denom());
    let rounded = if &rem * 2 >= *scaled.denom() { q + 1 } else { q };
    let (int_part, frac_part) = (&rounded / &scale, &rounded % &scale);
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac:0>width$}", frac = frac_part, width = digits as usize)
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
