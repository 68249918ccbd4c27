//! Monte Carlo estimates of `∫_{Ω_r} |f|^{−2β}` over dyadic regions.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FirstVariableChart, QuasiHomogSpec, MAX_VARIABLES};
use crate::error::{LabError, Result};

pub const MIN_SAMPLES: usize = 1_000;
const BLOCK: usize = 1 << 14;
/// Exponent `γ` of the proposal density `∝ |w|^{−2γ}` for `w = f(z)` used by
/// threshold bisection on specs with a first-variable chart. Weights scale
/// like `|w|^{2γ−2β}`: bounded for `β ≤ γ`, square-integrable for
/// `β < (1 + γ)/2`.
pub const IMPORTANCE_EXPONENT: f64 = 0.9;
const MAX_PROPOSAL_EXPONENT: f64 = 0.95;

/// Proposal exponent for a single-β integral. Below `β = 1/2` plain sampling
/// has finite variance and does better; at `β = 1/2` its variance diverges
/// logarithmically.
pub(crate) fn proposal_exponent(spec: &QuasiHomogSpec, beta: f64, region: Region) -> Option<f64> {
    let usable = region == Region::Product && spec.chart().is_some();
    (usable && beta >= 0.5).then(|| beta.min(MAX_PROPOSAL_EXPONENT))
}
/// Samples with `|f|` below this are redrawn.
const SINGULAR_FLOOR: f64 = 1e-300;

/// Which dyadic decomposition of the punctured polydisc to integrate over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// The product annulus `2^{−wᵢ(r+1)} ≤ |zᵢ| ≤ 2^{−wᵢ r}` for every `i`.
    #[default]
    Product,
    /// The weighted shell `D_r \ D_{r+1}` with
    /// `D_r = {|zᵢ| ≤ 2^{−wᵢ r} ∀i}`. Shells tile the punctured polydisc;
    /// product annuli sit inside them but leave gaps.
    Shell,
}

/// Per-variable radial bounds of the product annulus `Ω_r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnulusSpec {
    pub r: u32,
    pub bounds: Vec<(f64, f64)>,
}

impl AnnulusSpec {
    pub fn new(spec: &QuasiHomogSpec, r: u32) -> Self {
        let bounds = spec
            .weights()
            .iter()
            .map(|&w| {
                let w = w as i32;
                (2f64.powi(-w * (r as i32 + 1)), 2f64.powi(-w * r as i32))
            })
            .collect();
        Self { r, bounds }
    }

    pub fn contains(&self, z: &[Complex64]) -> bool {
        z.iter()
            .zip(&self.bounds)
            .all(|(zi, &(lo, hi))| (lo..=hi).contains(&zi.norm()))
    }

    /// Lebesgue measure of the annulus.
    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| PI * (hi * hi - lo * lo)).product()
    }
}

/// Index of the weighted shell containing `z`, or `None` at the origin or
/// outside the closed unit polydisc.
pub fn shell_index(spec: &QuasiHomogSpec, z: &[Complex64]) -> Option<u32> {
    let level = z
        .iter()
        .zip(spec.weights())
        .map(|(zi, &w)| -zi.norm().log2() / w as f64)
        .fold(f64::INFINITY, f64::min);
    if !level.is_finite() || level < 0.0 {
        return None;
    }
    Some(level.floor() as u32)
}

/// Monte Carlo estimate of one annulus integral.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub r: u32,
    pub beta: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Draws rejected because they landed on the zero set of `f`.
    pub resampled: usize,
    /// The integrand left the float range; read as divergence evidence.
    pub overflow: bool,
}

/// One draw: log importance weight and `log |f|`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSample {
    pub log_weight: f64,
    pub log_abs_f: f64,
}

pub(crate) struct BlockDraws {
    pub draws: Vec<LogSample>,
    pub resampled: usize,
}

/// Stream identifier for block `block` of annulus `r`.
fn stream_id(r: u32, block: usize) -> u64 {
    (u64::from(r) << 32) | block as u64
}

fn validate(beta: f64, samples: usize) -> Result<()> {
    if !(beta >= 0.0) {
        return Err(LabError::Precondition(format!("β must be ≥ 0, got {beta}")));
    }
    if samples < MIN_SAMPLES {
        return Err(LabError::Precondition(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// Draws `samples` points of annulus `r` in fixed-size blocks; each block has
/// its own counter-based stream so results do not depend on thread count.
pub(crate) fn draw_annulus(
    spec: &QuasiHomogSpec,
    r: u32,
    samples: usize,
    seed: u64,
    region: Region,
    proposal: Option<f64>,
) -> Vec<BlockDraws> {
    let blocks = samples.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(samples - b * BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(r, b));
            draw_block(spec, r, region, proposal, count, &mut rng)
        })
        .collect()
}

fn draw_block(
    spec: &QuasiHomogSpec,
    r: u32,
    region: Region,
    proposal: Option<f64>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> BlockDraws {
    let n = spec.variables();
    let mut z = [Complex64::new(0.0, 0.0); MAX_VARIABLES];
    let mut draws = Vec::with_capacity(count);
    let mut resampled = 0;
    let shell_log_volume = shell_log_volume(spec, r);
    while draws.len() < count {
        if let (Region::Product, Some(chart), Some(gamma)) = (region, spec.chart(), proposal) {
            draws.push(draw_chart(spec, chart, gamma, r, rng, &mut z[..n]));
            continue;
        }
        let log_weight = match region {
            Region::Product => draw_radial(spec.weights(), r, rng, &mut z[..n]),
            Region::Shell => {
                draw_shell(spec, r, rng, &mut z[..n]);
                shell_log_volume
            }
        };
        let abs_f = spec.eval(&z[..n]).norm();
        if abs_f < SINGULAR_FLOOR {
            resampled += 1;
            continue;
        }
        draws.push(LogSample {
            log_weight,
            log_abs_f: abs_f.ln(),
        });
    }
    BlockDraws { draws, resampled }
}

/// Log-uniform radius and uniform angle per variable; returns the log of the
/// importance weight `Π 2π ρᵢ² wᵢ ln 2`.
fn draw_radial(weights: &[u32], r: u32, rng: &mut ChaCha8Rng, z: &mut [Complex64]) -> f64 {
    let mut log_weight = 0.0;
    for (zi, &w) in z.iter_mut().zip(weights) {
        let span = w as f64 * LN_2;
        let log_rho = (rng.random::<f64>() - (r as f64 + 1.0)) * span;
        let theta = rng.random::<f64>() * TAU;
        *zi = Complex64::from_polar(log_rho.exp(), theta);
        log_weight += 2.0 * log_rho + span.ln() + TAU.ln();
    }
    log_weight
}

/// Draws `z₂, …` as in [`draw_radial`], then `w = f(z)` from the density
/// `q(w) ∝ |w|^{−2γ}` on `|w| ≤ bound·2^{−rd}` and `z₁` on a uniformly chosen
/// branch of `z₁^e = w − h(z₂, …)`. The change of variables contributes
/// `1/|e z₁^{e−1}|²`. Draws whose `z₁` leaves the annulus carry zero weight.
fn draw_chart(
    spec: &QuasiHomogSpec,
    chart: &FirstVariableChart,
    gamma: f64,
    r: u32,
    rng: &mut ChaCha8Rng,
    z: &mut [Complex64],
) -> LogSample {
    let weights = spec.weights();
    let mut log_weight = draw_radial(&weights[1..], r, rng, &mut z[1..]);
    let e = chart.exponent as f64;
    let a = 2.0 - 2.0 * gamma;
    let log_radius = chart.bound.ln() - (spec.degree() * r) as f64 * LN_2;
    let log_abs_w = log_radius + (1.0 - rng.random::<f64>()).ln() / a;
    let w = Complex64::from_polar(log_abs_w.exp(), rng.random::<f64>() * TAU);
    let branch = rng.random_range(0..chart.exponent) as f64;

    z[0] = Complex64::new(0.0, 0.0);
    let target = w - (chart.rest)(z);
    z[0] = target.powf(1.0 / e) * Complex64::from_polar(1.0, TAU * branch / e);

    let w1 = weights[0] as i32;
    let (lo, hi) = (2f64.powi(-w1 * (r as i32 + 1)), 2f64.powi(-w1 * r as i32));
    let rho = z[0].norm();
    if !(lo..=hi).contains(&rho) {
        return LogSample {
            log_weight: f64::NEG_INFINITY,
            log_abs_f: log_abs_w,
        };
    }
    let log_q = a.ln() - TAU.ln() - a * log_radius - 2.0 * gamma * log_abs_w;
    let log_jacobian = -2.0 * (e.ln() + (e - 1.0) * rho.ln());
    log_weight += e.ln() + log_jacobian - log_q;
    LogSample {
        log_weight,
        log_abs_f: log_abs_w,
    }
}

/// Uniform point of the shell `D_r \ D_{r+1}`: uniform in `D_0 \ D_1`, then
/// dilated by `2^{−r wᵢ}`.
fn draw_shell(spec: &QuasiHomogSpec, r: u32, rng: &mut ChaCha8Rng, z: &mut [Complex64]) {
    loop {
        for zi in z.iter_mut() {
            let rho = rng.random::<f64>().sqrt();
            *zi = Complex64::from_polar(rho, rng.random::<f64>() * TAU);
        }
        let inner = z
            .iter()
            .zip(spec.weights())
            .all(|(zi, &w)| zi.norm() <= 2f64.powi(-(w as i32)));
        if !inner {
            break;
        }
    }
    for (zi, &w) in z.iter_mut().zip(spec.weights()) {
        *zi *= 2f64.powi(-(w as i32) * r as i32);
    }
}

fn shell_log_volume(spec: &QuasiHomogSpec, r: u32) -> f64 {
    let n = spec.variables() as f64;
    let s = spec.weight_sum() as f64;
    n * PI.ln() + (-(2f64.powf(-2.0 * s))).ln_1p() - 2.0 * s * r as f64 * LN_2
}

/// Reduces log draws to an estimate at exponent β; Welford per block, merged
/// in block order.
pub(crate) fn reduce(blocks: &[BlockDraws], r: u32, beta: f64) -> IntegralEstimate {
    let mut count = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut overflow = false;
    let mut resampled = 0;
    for block in blocks {
        resampled += block.resampled;
        let (mut bc, mut bm, mut bm2) = (0usize, 0.0f64, 0.0f64);
        for s in &block.draws {
            let v = (s.log_weight - 2.0 * beta * s.log_abs_f).exp();
            if !v.is_finite() {
                overflow = true;
                continue;
            }
            bc += 1;
            let delta = v - bm;
            bm += delta / bc as f64;
            bm2 += delta * (v - bm);
        }
        if bc == 0 {
            continue;
        }
        let total = count + bc;
        let delta = bm - mean;
        mean += delta * bc as f64 / total as f64;
        m2 += bm2 + delta * delta * count as f64 * bc as f64 / total as f64;
        count = total;
    }
    let stderr = if count > 1 {
        (m2 / (count - 1) as f64 / count as f64).sqrt()
    } else {
        f64::INFINITY
    };
    overflow |= !mean.is_finite() || !stderr.is_finite();
    IntegralEstimate {
        r,
        beta,
        mean: if overflow { f64::INFINITY } else { mean },
        stderr: if overflow { f64::INFINITY } else { stderr },
        samples: blocks.iter().map(|b| b.draws.len()).sum(),
        resampled,
        overflow,
    }
}

/// Unbiased estimate of `∫_{Ω_r} |f|^{−2β}` with its standard error. For
/// `β ≥ 1/2` on a spec with a first-variable chart, product annuli are
/// sampled through the value of `f` with `γ = min(β, 0.95)`.
pub fn annulus_integral(
    spec: &QuasiHomogSpec,
    beta: f64,
    r: u32,
    samples: usize,
    seed: u64,
    region: Region,
) -> Result<IntegralEstimate> {
    validate(beta, samples)?;
    let proposal = proposal_exponent(spec, beta, region);
    let blocks = draw_annulus(spec, r, samples, seed, region, proposal);
    Ok(reduce(&blocks, r, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn beta_zero_gives_annulus_volume() {
        let spec = QuasiHomogSpec::cusp23();
        let est = annulus_integral(&spec, 0.0, 0, 200_000, 11, Region::Product).unwrap();
        let exact = PI * PI * (1.0 - 2f64.powi(-6)) * (1.0 - 2f64.powi(-4));
        assert!((AnnulusSpec::new(&spec, 0).volume() - exact).abs() < 1e-12);
        assert!((est.mean - exact).abs() < 3.0 * est.stderr, "{est:?} vs {exact}");
    }

    fn plain(spec: &QuasiHomogSpec) -> QuasiHomogSpec {
        let f = spec.clone();
        QuasiHomogSpec::new("plain", spec.weights().to_vec(), spec.degree(), move |z| f.eval(z)).unwrap()
    }

    #[test]
    fn chart_sampler_agrees_with_plain_sampler() {
        // Below β = 1/2 the plain estimator has finite variance too.
        for spec in [QuasiHomogSpec::cusp23(), QuasiHomogSpec::cusp25()] {
            assert!(spec.has_first_variable_chart());
            let reference = plain(&spec);
            assert!(!reference.has_first_variable_chart());
            for (beta, r, gamma) in [(0.0, 0, 0.9), (0.3, 1, 0.9), (0.45, 0, 0.6)] {
                let blocks = draw_annulus(&spec, r, 200_000, 21, Region::Product, Some(gamma));
                let a = reduce(&blocks, r, beta);
                let b = annulus_integral(&reference, beta, r, 200_000, 22, Region::Product).unwrap();
                let sigma = a.stderr.hypot(b.stderr);
                assert!((a.mean - b.mean).abs() < 4.0 * sigma, "{a:?} vs {b:?}");

            }
        }
    }

    #[test]
    fn chart_bounds_weights_below_the_proposal_exponent() {
        let spec = QuasiHomogSpec::cusp23();
        let blocks = draw_annulus(&spec, 0, 20_000, 8, Region::Product, Some(IMPORTANCE_EXPONENT));
        let values: Vec<f64> = blocks
            .iter()
            .flat_map(|b| &b.draws)
            .map(|s| (s.log_weight - 2.0 * 0.8 * s.log_abs_f).exp())
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().cloned().fold(0.0, f64::max);
        assert!(max < 50.0 * mean, "max {max} mean {mean}");
        let rejected = values.iter().filter(|&&v| v == 0.0).count();
        assert!(rejected < values.len() / 2);
    }

    #[test]
    fn high_beta_integrals_use_the_chart() {
        let spec = QuasiHomogSpec::cusp23();
        assert_eq!(proposal_exponent(&spec, 0.4, Region::Product), None);
        assert_eq!(proposal_exponent(&spec, 0.5, Region::Product), Some(0.5));
        assert_eq!(proposal_exponent(&spec, 0.8, Region::Product), Some(0.8));
        assert_eq!(proposal_exponent(&spec, 3.0, Region::Product), Some(0.95));
        assert_eq!(proposal_exponent(&spec, 0.8, Region::Shell), None);
        let m = QuasiHomogSpec::monomial(2).unwrap();
        assert_eq!(proposal_exponent(&m, 0.8, Region::Product), None);
        // Relative error at β = 0.8 stays under a percent.
        let est = annulus_integral(&spec, 0.8, 0, 100_000, 2, Region::Product).unwrap();
        assert!(est.stderr < 1e-2 * est.mean, "{est:?}");
    }

    #[test]
    fn chart_must_match_the_polynomial() {
        let cusp = |z: &[Complex64]| z[0] * z[0] - z[1] * z[1] * z[1];
        let make = || QuasiHomogSpec::new("c", vec![3, 2], 6, cusp).unwrap();
        assert!(make().with_first_variable_chart(2, |z| -(z[1] * z[1] * z[1]), 2.0).is_ok());
        assert!(make().with_first_variable_chart(2, |z| z[1] * z[1] * z[1], 2.0).is_err());
        assert!(make().with_first_variable_chart(3, |z| -(z[1] * z[1] * z[1]), 2.0).is_err());
        assert!(make().with_first_variable_chart(2, |z| -(z[1] * z[1] * z[1]), 0.5).is_err());
        // The remainder may not depend on z₁.
        let r = make().with_first_variable_chart(2, |z| -(z[1] * z[1] * z[1]) + z[0] * 0.0 + z[0] * z[0] - z[0] * z[0], 2.0);
        assert!(r.is_ok());
        let r = make().with_first_variable_chart(2, |z| z[0] - z[0] * z[0] - z[1] * z[1] * z[1], 2.0);
        assert!(r.is_err());
    }

    #[test]
    fn shell_volume_at_beta_zero() {
        let spec = QuasiHomogSpec::cusp23();
        let est = annulus_integral(&spec, 0.0, 2, 5_000, 3, Region::Shell).unwrap();
        let exact = PI * PI * (1.0 - 2f64.powi(-10)) * 2f64.powi(-20);
        // Uniform sampling makes the integrand constant at β = 0.
        assert!((est.mean - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = QuasiHomogSpec::cusp23();
        let a = annulus_integral(&spec, 0.7, 1, 40_000, 5, Region::Product).unwrap();
        let b = annulus_integral(&spec, 0.7, 1, 40_000, 5, Region::Product).unwrap();
        assert_eq!(a, b);
        let c = annulus_integral(&spec, 0.7, 1, 40_000, 6, Region::Product).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let spec = QuasiHomogSpec::cusp23();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| annulus_integral(&spec, 0.5, 0, 70_000, 9, Region::Product).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn preconditions() {
        let spec = QuasiHomogSpec::cusp23();
        assert!(annulus_integral(&spec, -0.1, 0, 10_000, 1, Region::Product).is_err());
        assert!(annulus_integral(&spec, 0.1, 0, 999, 1, Region::Product).is_err());
    }

    #[test]
    fn huge_beta_reports_overflow() {
        let spec = QuasiHomogSpec::cusp23();
        let est = annulus_integral(&spec, 200.0, 6, 2_000, 1, Region::Product).unwrap();
        assert!(est.overflow);
    }

    #[test]
    fn shells_tile_and_contain_product_annuli() {
        let spec = QuasiHomogSpec::cusp23();
        let annuli: Vec<AnnulusSpec> = (0..40).map(|r| AnnulusSpec::new(&spec, r)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut gaps = 0;
        for _ in 0..10_000 {
            // Log-uniform moduli reach deep into the polydisc.
            let z: Vec<Complex64> = (0..2)
                .map(|_| {
                    let rho = 2f64.powf(-12.0 * rng.random::<f64>());
                    Complex64::from_polar(rho, rng.random::<f64>() * TAU)
                })
                .collect();
            let shell = shell_index(&spec, &z).expect("inside punctured polydisc");
            let hits: Vec<u32> = annuli.iter().filter(|a| a.contains(&z)).map(|a| a.r).collect();
            assert!(hits.len() <= 1 || hits.windows(2).all(|w| w[1] == w[0] + 1));
            for r in &hits {
                // Boundary points may touch the next shell.
                assert!(*r == shell || *r + 1 == shell);
            }
            if hits.is_empty() {
                gaps += 1;
            }
        }
        // Product annuli alone leave most of the polydisc uncovered.
        assert!(gaps > 1000);
        let gap_point = [Complex64::new(0.5, 0.0), Complex64::new(0.001, 0.0)];
        assert!(annuli.iter().all(|a| !a.contains(&gap_point)));
        assert_eq!(shell_index(&spec, &gap_point), Some(0));
    }
}
