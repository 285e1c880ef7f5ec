//! Exact rational reference implementations of the binomial quantities.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// `numer / denom` as an exact rational.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

fn choose(total: u64, hits: u64) -> BigInt {
    let k = hits.min(total - hits);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(total - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn pmf(total: u64, hits: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    BigRational::from_integer(choose(total, hits)) * pow(p, hits) * pow(&q, total - hits)
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

/// `P(n >= k)` under `Bin(total, p)`.
pub fn upper_tail(k: u64, total: u64, p: &BigRational) -> BigRational {
    (k..=total).fold(BigRational::zero(), |acc, n| acc + pmf(total, n, p))
}

/// `P(n < k)` under `Bin(total, p)`.
pub fn lower_tail(k: u64, total: u64, p: &BigRational) -> BigRational {
    (0..k.min(total + 1)).fold(BigRational::zero(), |acc, n| acc + pmf(total, n, p))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("finite rational")
}

/// Exact `Bin(total, p)` probabilities for `n = 0..=total`.
pub fn pmf_vector(total: u64, p: &BigRational) -> Vec<BigRational> {
    let q = BigRational::one() - p;
    let mut coeff = BigInt::one();
    let mut out = Vec::with_capacity(total as usize + 1);
    for n in 0..=total {
        if n > 0 {
            coeff = coeff * BigInt::from(total - n + 1) / BigInt::from(n);
        }
        out.push(BigRational::from_integer(coeff.clone()) * pow(p, n) * pow(&q, total - n));
    }
    out
}

/// Smallest `(N, k)` with `P(n >= k | p0) <= a` and `P(n < k | p1) <= b`,
/// trying every cutoff at every `N` in order.
pub fn exhaustive_operating_point(
    p0: &BigRational,
    p1: &BigRational,
    a: &BigRational,
    b: &BigRational,
    cap: u64,
) -> Option<(u64, u64)> {
    for total in 0..=cap {
        let f0 = pmf_vector(total, p0);
        let f1 = pmf_vector(total, p1);
        // alpha(k) = 1 - sum_{n<k} f0, beta(k) = sum_{n<k} f1
        let mut below0 = BigRational::zero();
        let mut below1 = BigRational::zero();
        for k in 0..=total {
            if &(BigRational::one() - &below0) <= a && &below1 <= b {
                return Some((total, k));
            }
            below0 += &f0[k as usize];
            below1 += &f1[k as usize];
        }
    }
    None
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
