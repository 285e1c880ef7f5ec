//! Binomial model of with-period usage and the likelihood-ratio test that
//! separates abbreviations from common word forms.
//!
//! Under either hypothesis a word form observed `N` times carries the
//! period `n` times with `n ~ Binomial(N, p)`; `p = p1` for abbreviations
//! and `p = p0` for ordinary words. Everything here is a pure function.

mod binomial;
mod estimate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use estimate::{estimate_share_params, Pooling, SeedWarning, ShareEstimate};

use binomial::{first_count_at_or_above, ln_pmf_unchecked};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("count {hits} exceeds number of trials {total}")]
    CountOutOfRange { hits: u64, total: u64 },
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("invalid hypotheses: need 0 < p0 < p1 < 1, got p0={p0}, p1={p1}")]
    Hypotheses { p0: f64, p1: f64 },
    #[error("likelihood-ratio threshold must be a positive finite number, got {0}")]
    Threshold(f64),
    #[error("error target {0} is outside (0, 1)")]
    Target(f64),
    #[error("no usage count up to {cap} reaches alpha <= {alpha} and beta <= {beta}")]
    SearchExhausted { cap: u64, alpha: f64, beta: f64 },
    #[error("seed list `{0}` has no usable words")]
    EmptySeedList(&'static str),
    #[error("seed word `{0}` appears in both seed lists")]
    OverlappingSeeds(String),
    #[error("no year in {start}-{end} has pooled usage for the `{list}` seed list")]
    EmptyMeanWindow { list: &'static str, start: i32, end: i32 },
}

/// Competing hypotheses about a word form together with the decision
/// threshold `C` on the likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UncheckedParams")]
pub struct HypothesisParams {
    p0: f64,
    p1: f64,
    c: f64,
}

impl HypothesisParams {
    /// With-period share of ordinary words reported for the Russian corpus.
    pub const DEFAULT_P0: f64 = 0.068;
    /// With-period share of abbreviations reported for the Russian corpus.
    pub const DEFAULT_P1: f64 = 0.955;

    pub fn new(p0: f64, p1: f64, c: f64) -> Result<Self, StatError> {
        if !(p0 > 0.0 && p0 < p1 && p1 < 1.0) {
            return Err(StatError::Hypotheses { p0, p1 });
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(StatError::Threshold(c));
        }
        Ok(Self { p0, p1, c })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `ln(p1 (1 - p0) / (p0 (1 - p1)))`, the per-success log-likelihood
    /// increment.
    fn ln_odds_ratio(&self) -> f64 {
        (self.p1.ln() - self.p0.ln()) + ((-self.p0).ln_1p() - (-self.p1).ln_1p())
    }

    /// `ln((1 - p1) / (1 - p0))`, the per-trial log-likelihood offset.
    fn ln_failure_ratio(&self) -> f64 {
        (-self.p1).ln_1p() - (-self.p0).ln_1p()
    }
}

#[derive(Deserialize)]
struct UncheckedParams {
    p0: f64,
    p1: f64,
    c: f64,
}

impl TryFrom<UncheckedParams> for HypothesisParams {
    type Error = StatError;

    fn try_from(raw: UncheckedParams) -> Result<Self, Self::Error> {
        HypothesisParams::new(raw.p0, raw.p1, raw.c)
    }
}

impl Default for HypothesisParams {
    fn default() -> Self {
        Self {
            p0: Self::DEFAULT_P0,
            p1: Self::DEFAULT_P1,
            c: 1.0,
        }
    }
}

fn check_probability(p: f64) -> Result<(), StatError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(StatError::Probability(p))
    }
}

/// Natural log of `C(N, n) p^n (1 - p)^(N - n)`.
pub fn ln_binomial_pmf(total: u64, hits: u64, p: f64) -> Result<f64, StatError> {
    if hits > total {
        return Err(StatError::CountOutOfRange { hits, total });
    }
    check_probability(p)?;
    Ok(ln_pmf_unchecked(total, hits, p))
}

/// Probability that a word form seen `total` times carries the period
/// exactly `hits` times.
pub fn binomial_pmf(total: u64, hits: u64, p: f64) -> Result<f64, StatError> {
    ln_binomial_pmf(total, hits, p).map(f64::exp)
}

/// `ln L` for a real-valued success count; the closed form extends to
/// non-integer `n`, which is what the threshold equation solves over.
pub fn ln_likelihood_ratio(hits: f64, total: f64, params: &HypothesisParams) -> f64 {
    hits * params.ln_odds_ratio() + total * params.ln_failure_ratio()
}

/// `P(n | H1) / P(n | H0)`. Overflows to infinity for corpus-scale counts;
/// use [`ln_likelihood_ratio`] when the magnitude matters.
pub fn likelihood_ratio(hits: u64, total: u64, params: &HypothesisParams) -> f64 {
    ln_likelihood_ratio(hits as f64, total as f64, params).exp()
}

/// Real root `eta` of `L(eta) = C`; the test decides "abbreviation" for
/// `n > eta`.
pub fn solve_threshold(total: u64, params: &HypothesisParams) -> Result<f64, StatError> {
    if params.p1 <= params.p0 {
        return Err(StatError::Hypotheses {
            p0: params.p0,
            p1: params.p1,
        });
    }
    let numerator = params.c.ln() - total as f64 * params.ln_failure_ratio();
    Ok(numerator / params.ln_odds_ratio())
}

/// Smallest integer count strictly above `eta`: the first `n` the test
/// labels an abbreviation.
pub fn decision_cutoff(eta: f64) -> u64 {
    if eta < 0.0 {
        0
    } else {
        eta.floor() as u64 + 1
    }
}

/// Probability of a false abbreviation verdict: `P(n >= eta | N, p0)`.
pub fn alpha_error(eta: f64, total: u64, p0: f64) -> f64 {
    let cutoff = first_count_at_or_above(eta, total);
    split_mass(total, cutoff, p0).1
}

/// Probability of missing an abbreviation: `P(n < eta | N, p1)`.
pub fn beta_error(eta: f64, total: u64, p1: f64) -> f64 {
    let cutoff = first_count_at_or_above(eta, total);
    split_mass(total, cutoff, p1).0
}

/// Splits the binomial mass at `cutoff` into `(P(n < cutoff), P(n >= cutoff))`.
///
/// The side not holding the mode is summed directly, walking away from the
/// mode until terms stop contributing; the other side is its complement.
/// Both halves therefore sum to one, the small side keeps full relative
/// precision, and the cost is `O(sqrt(N))` rather than `O(N)`.
fn split_mass(total: u64, cutoff: u64, p: f64) -> (f64, f64) {
    if cutoff == 0 {
        return (0.0, 1.0);
    }
    if cutoff > total {
        return (1.0, 0.0);
    }
    let mode = (((total + 1) as f64) * p).floor().min(total as f64) as u64;
    if cutoff > mode {
        let upper = sum_decreasing(total, p, cutoff..=total);
        (1.0 - upper, upper)
    } else {
        let lower = sum_decreasing(total, p, (0..cutoff).rev());
        (lower, 1.0 - lower)
    }
}

fn sum_decreasing(total: u64, p: f64, counts: impl Iterator<Item = u64>) -> f64 {
    let mut sum = 0.0;
    for n in counts {
        let term = ln_pmf_unchecked(total, n, p).exp();
        if term == 0.0 || (sum > 0.0 && term < sum * f64::EPSILON * 1e-3) {
            break;
        }
        sum += term;
    }
    sum
}

/// Usage level from which the test reaches the requested error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Smallest total usage `N*` for which some cutoff meets both targets.
    pub min_usage: u64,
    /// Smallest integer cutoff `k` (verdict "abbreviation" iff `n >= k`)
    /// meeting both targets at `min_usage`.
    pub cutoff: u64,
    pub alpha: f64,
    pub beta: f64,
}

pub const DEFAULT_USAGE_SEARCH_CAP: u64 = 10_000;

/// [`min_usage_for_error_capped`] with the default search cap.
pub fn min_usage_for_error(
    params: &HypothesisParams,
    alpha_target: f64,
    beta_target: f64,
) -> Result<OperatingPoint, StatError> {
    min_usage_for_error_capped(params, alpha_target, beta_target, DEFAULT_USAGE_SEARCH_CAP)
}

/// Smallest `N <= cap` with an integer cutoff `k` in `0..=N` such that
/// `alpha_error(k) <= alpha_target` and `beta_error(k) <= beta_target`.
pub fn min_usage_for_error_capped(
    params: &HypothesisParams,
    alpha_target: f64,
    beta_target: f64,
    cap: u64,
) -> Result<OperatingPoint, StatError> {
    for target in [alpha_target, beta_target] {
        if !(target > 0.0 && target < 1.0) {
            return Err(StatError::Target(target));
        }
    }
    for total in 0..=cap {
        // alpha is non-increasing in k and beta non-decreasing, so the
        // smallest k satisfying the alpha target is the only candidate.
        let (mut lo, mut hi) = (0u64, total + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if alpha_error(mid as f64, total, params.p0) <= alpha_target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo > total {
            continue;
        }
        let beta = beta_error(lo as f64, total, params.p1);
        if beta <= beta_target {
            return Ok(OperatingPoint {
                min_usage: total,
                cutoff: lo,
                alpha: alpha_error(lo as f64, total, params.p0),
                beta,
            });
        }
    }
    Err(StatError::SearchExhausted {
        cap,
        alpha: alpha_target,
        beta: beta_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Abbreviation,
    CommonWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionMethod {
    Lrt,
    MedianThreshold,
}

/// Outcome of classifying one word form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub word: String,
    /// Total usages `N`.
    pub usage_total: u64,
    /// With-period usages `n`.
    pub with_period: u64,
    pub eta: Option<f64>,
    /// `ln L(n)`; kept in log form since `L` overflows at corpus scale.
    pub ln_likelihood: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub verdict: Verdict,
    pub method: DecisionMethod,
    /// Set when the evidence was too thin to classify.
    #[serde(default)]
    pub undecidable: bool,
}

impl DecisionRecord {
    pub fn is_abbreviation(&self) -> bool {
        self.verdict == Verdict::Abbreviation
    }

    pub fn likelihood(&self) -> Option<f64> {
        self.ln_likelihood.map(f64::exp)
    }
}
