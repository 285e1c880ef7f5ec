//! Binomial probabilities in log space.
//!
//! The mass function uses Loader's saddle-point expansion (the algorithm
//! behind R's `dbinom`): the binomial coefficient is never formed, so the
//! result keeps close to full double precision even when `N` is in the
//! millions and the probability itself is far below `f64::MIN_POSITIVE`
//! in linear space.

use std::f64::consts::PI;

/// `ln(n!) - (n + 1/2) ln(n) + n - ln(sqrt(2 pi))` for `n = 0..=15`.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_67,
    0.041_340_695_955_409_294_093_82,
    0.027_677_925_684_998_339_148_79,
    0.020_790_672_103_765_093_111_52,
    0.016_644_691_189_821_192_163_19,
    0.013_876_128_823_070_747_998_75,
    0.011_896_709_945_891_770_095_06,
    0.010_411_265_261_972_096_497_48,
    0.009_255_462_182_712_732_917_729,
    0.008_330_563_433_362_871_256_469,
    0.007_573_675_487_951_840_794_972,
    0.006_942_840_107_209_529_865_664,
    0.006_408_994_188_004_207_068_44,
    0.005_951_370_112_758_847_735_624,
    0.005_554_733_551_962_801_371_039,
];

/// Error of Stirling's approximation to `ln(n!)`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        // only ever called with integral arguments
        return STIRLING_ERROR_TABLE[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated by series when `x` is
/// close to `np` to avoid cancellation.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / np).ln() + np - x
}

/// `ln P(n | N, p)` for `n <= N` and `p` in `[0, 1]`. Returns `-inf` for
/// impossible outcomes.
pub(crate) fn ln_pmf_unchecked(total: u64, hits: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if hits == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if hits == total { 0.0 } else { f64::NEG_INFINITY };
    }
    let n = total as f64;
    let x = hits as f64;
    if hits == 0 {
        if total == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -deviance(n, n * q) - n * p
        } else {
            n * q.ln()
        };
    }
    if hits == total {
        return if q < 0.1 {
            -deviance(n, n * p) - n * q
        } else {
            n * p.ln()
        };
    }
    let lc =
        stirling_error(n) - stirling_error(x) - stirling_error(n - x) - deviance(x, n * p) - deviance(n - x, n * q);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}

/// Shifts a real threshold to the first integer count `>= eta`, clamped to
/// `0..=N+1`.
pub(crate) fn first_count_at_or_above(eta: f64, total: u64) -> u64 {
    if eta.is_nan() || eta <= 0.0 {
        0
    } else if eta > total as f64 {
        total + 1
    } else {
        eta.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_error_continuity_at_table_edge() {
        // the series branch at n = 16 must agree with lgamma-based values
        // (computed with 40-digit arithmetic)
        let expected_16 = 0.005_207_655_919_609_640_4;
        assert!((stirling_error(16.0) - expected_16).abs() < 1e-13 * expected_16);
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(ln_pmf_unchecked(5, 0, 0.0), 0.0);
        assert_eq!(ln_pmf_unchecked(5, 1, 0.0), f64::NEG_INFINITY);
        assert_eq!(ln_pmf_unchecked(5, 5, 1.0), 0.0);
        assert_eq!(ln_pmf_unchecked(0, 0, 0.3), 0.0);
    }

    #[test]
    fn first_count_edges() {
        assert_eq!(first_count_at_or_above(-2.0, 10), 0);
        assert_eq!(first_count_at_or_above(0.0, 10), 0);
        assert_eq!(first_count_at_or_above(3.2, 10), 4);
        assert_eq!(first_count_at_or_above(3.0, 10), 3);
        assert_eq!(first_count_at_or_above(10.5, 10), 11);
    }
}
