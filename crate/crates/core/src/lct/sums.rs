//! Partial sums over annuli, tail bounds, and threshold bisection.

use serde::Serialize;

use super::sampling::{
    draw_annulus, BlockDraws, IntegralEstimate, Region, IMPORTANCE_EXPONENT, MIN_SAMPLES,
};
use super::{predicted_threshold, scaling_exponent, QuasiHomogSpec, SpecSummary};
use crate::error::{LabError, Result};

/// A ratio at or above `1 − ε` on three consecutive annuli counts as
/// divergence evidence; below `1 − ε` everywhere counts as convergence.
pub const DIVERGENCE_EPSILON: f64 = 0.02;
const DIVERGENCE_RUN: usize = 3;
const MAX_BRACKET: f64 = 16.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Converged {
        ratio_bound: f64,
        tail_bound: f64,
        total: f64,
    },
    DivergenceEvidence {
        consecutive: usize,
        reason: String,
    },
    Inconclusive {
        max_ratio: f64,
    },
}

impl Verdict {
    pub fn is_converged(&self) -> bool {
        matches!(self, Self::Converged { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Self::DivergenceEvidence { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartialSums {
    pub beta: f64,
    pub region: Region,
    pub annuli: Vec<IntegralEstimate>,
    pub partial_sums: Vec<f64>,
    /// `I_{r+1} / I_r` for consecutive annuli.
    pub ratios: Vec<f64>,
    /// Combined standard error of each ratio.
    pub ratio_stderr: Vec<f64>,
    pub verdict: Verdict,
}

/// Estimates `Σ_{r < count} I_r` and classifies the tail.
///
/// With `ρ` the largest observed consecutive ratio, `ρ < 1 − ε` yields the
/// geometric tail bound `I_{count−1} ρ / (1 − ρ)`. Divergence is only ever
/// reported as evidence.
pub fn partial_sums(
    spec: &QuasiHomogSpec,
    beta: f64,
    count: u32,
    samples: usize,
    seed: u64,
    region: Region,
) -> Result<PartialSums> {
    if count < 2 {
        return Err(LabError::Precondition(format!("need at least 2 annuli, got {count}")));
    }
    let annuli = (0..count)
        .map(|r| super::annulus_integral(spec, beta, r, samples, seed, region))
        .collect::<Result<Vec<_>>>()?;
    let partial_sums = annuli
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a.mean;
            Some(*acc)
        })
        .collect();
    let (ratios, ratio_stderr): (Vec<f64>, Vec<f64>) = annuli
        .windows(2)
        .map(|w| ratio_with_error(&w[0], &w[1]))
        .unzip();
    let verdict = classify(&annuli, &ratios);
    Ok(PartialSums {
        beta,
        region,
        annuli,
        partial_sums,
        ratios,
        ratio_stderr,
        verdict,
    })
}

/// `I₁ / I₀` and its combined standard error.
pub fn ratio_with_error(lower: &IntegralEstimate, upper: &IntegralEstimate) -> (f64, f64) {
    let q = upper.mean / lower.mean;
    let rel = ((lower.stderr / lower.mean).powi(2) + (upper.stderr / upper.mean).powi(2)).sqrt();
    (q, q * rel)
}

fn classify(annuli: &[IntegralEstimate], ratios: &[f64]) -> Verdict {
    if annuli.iter().any(|a| a.overflow) {
        return Verdict::DivergenceEvidence {
            consecutive: 0,
            reason: "integrand overflow".into(),
        };
    }
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_ratio < 1.0 - DIVERGENCE_EPSILON {
        let last = annuli.last().map(|a| a.mean).unwrap_or(0.0);
        let tail_bound = last * max_ratio / (1.0 - max_ratio);
        let total = annuli.iter().map(|a| a.mean).sum::<f64>() + tail_bound;
        return Verdict::Converged {
            ratio_bound: max_ratio,
            tail_bound,
            total,
        };
    }
    let mut run = 0;
    let mut best = 0;
    for &q in ratios {
        run = if q >= 1.0 - DIVERGENCE_EPSILON { run + 1 } else { 0 };
        best = best.max(run);
    }
    if best >= DIVERGENCE_RUN {
        Verdict::DivergenceEvidence {
            consecutive: best,
            reason: format!("annulus ratio ≥ {} on {best} consecutive annuli", 1.0 - DIVERGENCE_EPSILON),
        }
    } else {
        Verdict::Inconclusive { max_ratio }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdEstimate {
    pub beta_hat: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub samples_per_annulus: usize,
}

/// Log of `mean(exp(log_weight − 2β log|f|))` computed stably.
fn log_mean(blocks: &[BlockDraws], beta: f64) -> f64 {
    let values = blocks
        .iter()
        .flat_map(|b| b.draws.iter())
        .map(|s| s.log_weight - 2.0 * beta * s.log_abs_f);
    let (max, n) = values.clone().fold((f64::NEG_INFINITY, 0usize), |(m, n), v| (m.max(v), n + 1));
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    max + (sum / n as f64).ln()
}

/// Bisects β on the sign of `log(I₁/I₀)`, reusing one set of draws per annulus
/// for every β so the measured ratio is a smooth function of β. Specs with a
/// first-variable chart draw with `γ =` [`IMPORTANCE_EXPONENT`]; without it
/// the weights have infinite variance for every β above 1/2.
pub fn estimate_threshold(
    spec: &QuasiHomogSpec,
    tol: f64,
    budget: usize,
    seed: u64,
    region: Region,
) -> Result<ThresholdEstimate> {
    if !(tol >= 0.005) {
        return Err(LabError::Precondition(format!("tolerance must be ≥ 0.005, got {tol}")));
    }
    if budget < MIN_SAMPLES {
        return Err(LabError::Precondition(format!(
            "need at least {MIN_SAMPLES} samples per annulus, got {budget}"
        )));
    }
    let proposal = spec.chart().map(|_| IMPORTANCE_EXPONENT);
    let inner = draw_annulus(spec, 0, budget, seed, region, proposal);
    let outer = draw_annulus(spec, 1, budget, seed, region, proposal);
    let log_ratio = |beta: f64| log_mean(&outer, beta) - log_mean(&inner, beta);

    let mut lo = 0.0;
    let mut hi = 1.0;
    if log_ratio(lo) >= 0.0 {
        return Err(LabError::BudgetExhausted("ratio ≥ 1 already at β = 0".into()));
    }
    while log_ratio(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_BRACKET {
            return Err(LabError::BudgetExhausted(format!(
                "no bracket for the ratio crossing 1 below β = {MAX_BRACKET}"
            )));
        }
    }
    let mut iterations = 0;
    while hi - lo > tol / 16.0 {
        let mid = 0.5 * (lo + hi);
        if log_ratio(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdEstimate {
        beta_hat: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
        samples_per_annulus: budget,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusRow {
    pub r: u32,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// The JSON report for one spec and β.
#[derive(Clone, Debug, Serialize)]
pub struct LctReport {
    pub spec: SpecSummary,
    pub beta: f64,
    pub region: Region,
    pub annuli: Vec<AnnulusRow>,
    pub exponent_expected: f64,
    pub ratio_expected: f64,
    /// Geometric mean of the consecutive annulus ratios.
    pub ratio_observed: f64,
    /// Largest deviation of a consecutive ratio from `2^{exponent}` in units
    /// of its combined standard error.
    pub max_ratio_z: f64,
    pub threshold_predicted: f64,
    pub threshold_estimated: Option<f64>,
    pub verdict: Verdict,
}

pub fn lct_report(
    spec: &QuasiHomogSpec,
    sums: &PartialSums,
    threshold: Option<&ThresholdEstimate>,
) -> LctReport {
    let exponent = scaling_exponent(spec, sums.beta);
    let expected = 2f64.powf(exponent);
    let k = sums.ratios.len() as f64;
    let ratio_observed = (sums.ratios.iter().map(|q| q.ln()).sum::<f64>() / k).exp();
    let max_ratio_z = sums
        .ratios
        .iter()
        .zip(&sums.ratio_stderr)
        .map(|(q, s)| (q - expected).abs() / s)
        .fold(0.0, f64::max);
    let predicted = predicted_threshold(spec);
    LctReport {
        spec: spec.summary(),
        beta: sums.beta,
        region: sums.region,
        annuli: sums
            .annuli
            .iter()
            .map(|a| AnnulusRow {
                r: a.r,
                mean: a.mean,
                stderr: a.stderr,
                samples: a.samples,
            })
            .collect(),
        exponent_expected: exponent,
        ratio_expected: expected,
        ratio_observed,
        max_ratio_z,
        threshold_predicted: *predicted.numer() as f64 / *predicted.denom() as f64,
        threshold_estimated: threshold.map(|t| t.beta_hat),
        verdict: sums.verdict.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn converges_below_threshold() {
        let spec = QuasiHomogSpec::cusp23();
        let sums = partial_sums(&spec, 0.5, 4, 50_000, 1, Region::Product).unwrap();
        let Verdict::Converged { ratio_bound, tail_bound, total } = sums.verdict else {
            panic!("expected convergence, got {:?}", sums.verdict);
        };
        assert!(ratio_bound < 0.1);
        assert!(tail_bound > 0.0 && tail_bound < 1e-3 * total);
    }

    #[test]
    fn divergence_evidence_above_threshold() {
        let spec = QuasiHomogSpec::cusp23();
        let sums = partial_sums(&spec, 0.9, 6, 50_000, 2, Region::Product).unwrap();
        assert!(sums.verdict.is_divergent(), "{:?}", sums.verdict);
        assert!(sums.ratios.iter().all(|&q| q > 1.0));
    }

    #[test]
    fn single_ratio_at_threshold() {
        let spec = QuasiHomogSpec::cusp23();
        let sums = partial_sums(&spec, 5.0 / 6.0, 2, 1_000_000, 3, Region::Product).unwrap();
        // One ratio is never a run of consecutive ratios.
        assert!(!sums.verdict.is_divergent());
        let (q, se) = (sums.ratios[0], sums.ratio_stderr[0]);
        assert!((q - 1.0).abs() < 3.0 * se, "{q} ± {se}");
    }

    #[test]
    fn shell_sums_recover_polydisc_volume() {
        let spec = QuasiHomogSpec::cusp23();
        let sums = partial_sums(&spec, 0.0, 3, 5_000, 4, Region::Shell).unwrap();
        let Verdict::Converged { total, .. } = sums.verdict else {
            panic!("β = 0 converges");
        };
        assert!((total - PI * PI).abs() < 1e-9);
    }

    #[test]
    fn threshold_bisection_preconditions() {
        let spec = QuasiHomogSpec::cusp23();
        assert!(estimate_threshold(&spec, 0.001, 10_000, 1, Region::Product).is_err());
        assert!(estimate_threshold(&spec, 0.02, 10, 1, Region::Product).is_err());
        assert!(partial_sums(&spec, 0.5, 1, 10_000, 1, Region::Product).is_err());
    }

    #[test]
    fn threshold_estimates_track_prediction() {
        for (spec, expected) in [
            (QuasiHomogSpec::cusp23(), 5.0 / 6.0),
            (QuasiHomogSpec::monomial(2).unwrap(), 1.0),
            (QuasiHomogSpec::cusp25(), 0.7),
        ] {
            let est = estimate_threshold(&spec, 0.02, 100_000, 7, Region::Product).unwrap();
            assert!((est.beta_hat - expected).abs() < 0.02, "{spec:?}: {}", est.beta_hat);
        }
    }

    #[test]
    fn report_fields() {
        let spec = QuasiHomogSpec::cusp23();
        let sums = partial_sums(&spec, 0.4, 3, 40_000, 5, Region::Product).unwrap();
        let report = lct_report(&spec, &sums, None);
        assert_eq!(report.exponent_expected, 12.0 * 0.4 - 10.0);
        assert!((report.threshold_predicted - 5.0 / 6.0).abs() < 1e-15);
        assert!(report.max_ratio_z < 4.0);
        let json = serde_json::to_value(&report).unwrap();
        for key in ["spec", "beta", "annuli", "exponent_expected", "ratio_observed", "threshold_predicted", "threshold_estimated"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["spec"]["weights"], serde_json::json!([3, 2]));
    }
}
