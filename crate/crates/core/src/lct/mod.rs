//! Integrability thresholds of quasi-homogeneous singularities.
//!
//! For `f` with `f(λ^{w₁}z₁, …, λ^{wₙ}zₙ) = λ^d f(z)`, the substitution
//! `zᵢ ↦ 2^{−wᵢ} zᵢ` maps the dyadic annulus `Ω_r` onto `Ω_{r+1}` and gives
//!
//! ```text
//! I_{r+1} = 2^{2dβ − 2Σwᵢ} I_r,   I_r = ∫_{Ω_r} |f|^{−2β}
//! ```
//!
//! so the annulus sum converges exactly when `β < Σwᵢ / d`. For the cusp
//! `z² − w³` with weights (3, 2) and degree 6 this is `12β − 10` and the
//! threshold `5/6`.

mod sampling;
mod sums;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};

pub use sampling::{
    annulus_integral, shell_index, AnnulusSpec, IntegralEstimate, Region, IMPORTANCE_EXPONENT,
};
pub use sums::{
    estimate_threshold, lct_report, partial_sums, LctReport, PartialSums, ThresholdEstimate,
    Verdict, DIVERGENCE_EPSILON,
};

/// Largest number of complex variables a spec may have.
pub const MAX_VARIABLES: usize = 8;

type Evaluator = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// A quasi-homogeneous polynomial with positive integer weights.
#[derive(Clone)]
pub struct QuasiHomogSpec {
    name: String,
    weights: Vec<u32>,
    degree: u32,
    eval: Evaluator,
    chart: Option<FirstVariableChart>,
}

/// `f = z₁^e + h(z₂, …, zₙ)`, which lets the sampler solve `f(z) = w` for `z₁`.
#[derive(Clone)]
pub(crate) struct FirstVariableChart {
    pub exponent: u32,
    pub rest: Evaluator,
    /// Upper bound for `|f|` on the closed unit polydisc.
    pub bound: f64,
}

impl fmt::Debug for QuasiHomogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiHomogSpec")
            .field("name", &self.name)
            .field("weights", &self.weights)
            .field("degree", &self.degree)
            .field("chart", &self.chart.as_ref().map(|c| c.exponent))
            .finish()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecSummary {
    pub name: String,
    pub weights: Vec<u32>,
    pub degree: u32,
}

impl QuasiHomogSpec {
    /// Validates weights and degree, then checks quasi-homogeneity on random
    /// points of the unit polydisc.
    pub fn new(
        name: impl Into<String>,
        weights: Vec<u32>,
        degree: u32,
        eval: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() > MAX_VARIABLES {
            return Err(LabError::InvalidSpec(format!(
                "need 1..={MAX_VARIABLES} variables, got {}",
                weights.len()
            )));
        }
        if weights.contains(&0) || degree == 0 {
            return Err(LabError::InvalidSpec("weights and degree must be positive".into()));
        }
        let spec = Self {
            name: name.into(),
            weights,
            degree,
            eval: Arc::new(eval),
            chart: None,
        };
        let err = spec.quasi_homogeneity_error(256, 0x5eed);
        if !(err <= 1e-12) {
            return Err(LabError::InvalidSpec(format!(
                "not quasi-homogeneous for the given weights (relative error {err:e})"
            )));
        }
        Ok(spec)
    }

    /// Declares `f = z₁^e + rest(z)` with `rest` independent of `z₁` and
    /// `|f| ≤ bound` on the unit polydisc. Product-annulus sampling then draws
    /// the value of `f` directly, which keeps the weights bounded near the
    /// smooth part of the zero set.
    pub fn with_first_variable_chart(
        mut self,
        exponent: u32,
        rest: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
        bound: f64,
    ) -> Result<Self> {
        if exponent == 0 || exponent * self.weights[0] != self.degree {
            return Err(LabError::InvalidSpec(format!(
                "z₁^{exponent} does not have degree {}",
                self.degree
            )));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(LabError::InvalidSpec(format!("bound must be positive, got {bound}")));
        }
        let rest: Evaluator = Arc::new(rest);
        let mut rng = ChaCha8Rng::seed_from_u64(0xc4a7);
        for _ in 0..256 {
            let mut z = random_polydisc_point(&mut rng, self.variables());
            let f = self.eval(&z);
            let h = rest(&z);
            let split = z[0].powu(exponent) + h;
            z[0] = Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * std::f64::consts::TAU);
            let moved = (rest(&z) - h).norm();
            if (f - split).norm() > 1e-12 * (1.0 + f.norm()) || moved > 1e-14 || f.norm() > bound {
                return Err(LabError::InvalidSpec(format!(
                    "f is not z₁^{exponent} + rest(z₂, …) with |f| ≤ {bound}"
                )));
            }
        }
        self.chart = Some(FirstVariableChart { exponent, rest, bound });
        Ok(self)
    }

    pub(crate) fn chart(&self) -> Option<&FirstVariableChart> {
        self.chart.as_ref()
    }

    /// Whether product-annulus sampling draws `f(z)` directly.
    pub fn has_first_variable_chart(&self) -> bool {
        self.chart.is_some()
    }

    /// `z² − w³`, weights (3, 2), degree 6.
    pub fn cusp23() -> Self {
        Self::new("cusp23", vec![3, 2], 6, |z| z[0] * z[0] - z[1] * z[1] * z[1])
            .and_then(|s| s.with_first_variable_chart(2, |z| -(z[1] * z[1] * z[1]), 2.0))
            .expect("z^2 - w^3 is quasi-homogeneous")
    }

    /// `z² − w⁵`, weights (5, 2), degree 10.
    pub fn cusp25() -> Self {
        Self::new("cusp25", vec![5, 2], 10, |z| {
            z[0] * z[0] - z[1] * z[1] * z[1] * z[1] * z[1]
        })
        .and_then(|s| s.with_first_variable_chart(2, |z| -z[1].powu(5), 2.0))
        .expect("z^2 - w^5 is quasi-homogeneous")
    }

    /// `Σ zᵢ^{d/wᵢ}` for weights dividing the degree, the polynomial behind
    /// `--weights`/`--degree` on the command line.
    pub fn sum_of_powers(weights: Vec<u32>, degree: u32) -> Result<Self> {
        if weights.is_empty() || weights.len() > MAX_VARIABLES {
            return Err(LabError::InvalidSpec(format!("need 1..={MAX_VARIABLES} variables")));
        }
        if degree == 0 || weights.iter().any(|&w| w == 0 || degree % w != 0) {
            return Err(LabError::InvalidSpec(format!(
                "every weight must divide the degree {degree}, got {weights:?}"
            )));
        }
        let exponents: Vec<u32> = weights.iter().map(|w| degree / w).collect();
        let name = format!(
            "sum_of_powers[{}]",
            exponents.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        );
        let all = exponents.clone();
        let tail = exponents.clone();
        let n = weights.len();
        Self::new(name, weights, degree, move |z| {
            z.iter().zip(&all).map(|(zi, &e)| zi.powu(e)).sum()
        })?
        .with_first_variable_chart(
            exponents[0],
            move |z| z.iter().zip(&tail).skip(1).map(|(zi, &e)| zi.powu(e)).sum(),
            n as f64,
        )
    }

    /// `z₁ ⋯ z_p` on its own `p` variables, all weights 1, degree `p`.
    pub fn monomial(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_VARIABLES {
            return Err(LabError::InvalidSpec(format!("monomial needs 1 ≤ p ≤ {MAX_VARIABLES}")));
        }
        Self::new(format!("monomial{p}"), vec![1; p], p as u32, |z| {
            z.iter().product()
        })
    }

    /// Named presets: `cusp23`, `cusp25`, `monomial:p,n` (with `1 ≤ p ≤ n`).
    ///
    /// The monomial germ only involves its `p` vanishing coordinates; the
    /// remaining `n − p` directions contribute a smooth bounded factor and are
    /// accounted for only by [`monomial_integral`].
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cusp23" => Ok(Self::cusp23()),
            "cusp25" => Ok(Self::cusp25()),
            other => {
                let (p, n) = parse_monomial(other)?;
                let _ = n;
                Self::monomial(p)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn variables(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_sum(&self) -> u32 {
        self.weights.iter().sum()
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        (self.eval)(z)
    }

    pub fn summary(&self) -> SpecSummary {
        SpecSummary {
            name: self.name.clone(),
            weights: self.weights.clone(),
            degree: self.degree,
        }
    }

    /// Applies the weighted dilation `zᵢ ↦ 2^{−k wᵢ} zᵢ`.
    pub fn dilate(&self, z: &[Complex64], k: i32) -> Vec<Complex64> {
        z.iter()
            .zip(&self.weights)
            .map(|(zi, &w)| zi * 2f64.powi(-k * w as i32))
            .collect()
    }

    /// Largest relative deviation from `f(λ^w z) = λ^d f(z)` over random
    /// points and dyadic and non-dyadic `λ`.
    pub fn quasi_homogeneity_error(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let z = random_polydisc_point(&mut rng, self.variables());
            let lambda: f64 = if rng.random_bool(0.5) {
                2f64.powi(rng.random_range(-3..=3))
            } else {
                rng.random_range(0.5..2.0)
            };
            let scaled: Vec<Complex64> = z
                .iter()
                .zip(&self.weights)
                .map(|(zi, &w)| zi * lambda.powi(w as i32))
                .collect();
            let lhs = self.eval(&scaled);
            let rhs = self.eval(&z) * lambda.powi(self.degree as i32);
            let scale = lhs.norm().max(rhs.norm());
            if scale > 1e-200 {
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        worst
    }
}

fn parse_monomial(name: &str) -> Result<(usize, usize)> {
    let bad = || LabError::InvalidSpec(format!("unknown preset `{name}`"));
    let rest = name.strip_prefix("monomial:").ok_or_else(bad)?;
    let (p, n) = rest.split_once(',').ok_or_else(bad)?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if p == 0 || p > n {
        return Err(LabError::InvalidSpec(format!("monomial needs 1 ≤ p ≤ n, got p={p}, n={n}")));
    }
    Ok((p, n))
}

/// Parses `monomial:p,n` into `(p, n)`.
pub fn monomial_dimensions(name: &str) -> Result<(usize, usize)> {
    parse_monomial(name)
}

pub(crate) fn random_polydisc_point<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let r = rng.random::<f64>().sqrt();
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            Complex64::from_polar(r, theta)
        })
        .collect()
}

/// Exponent `2dβ − 2Σwᵢ` with `I_{r+1} = 2^{exponent} I_r`.
pub fn scaling_exponent(spec: &QuasiHomogSpec, beta: f64) -> f64 {
    2.0 * spec.degree() as f64 * beta - 2.0 * spec.weight_sum() as f64
}

/// `Σwᵢ / d`, the β at which the scaling exponent vanishes.
pub fn predicted_threshold(spec: &QuasiHomogSpec) -> Ratio<i64> {
    Ratio::new(spec.weight_sum() as i64, spec.degree() as i64)
}

/// Largest relative error of `|f(2^{−w}z)|^{−2β} = 2^{2dβ} |f(z)|^{−2β}` over
/// random points of the polydisc.
pub fn pointwise_scaling_error(spec: &QuasiHomogSpec, beta: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = 2f64.powf(2.0 * spec.degree() as f64 * beta);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let z = random_polydisc_point(&mut rng, spec.variables());
        let base = spec.eval(&z).norm();
        if base < 1e-150 {
            continue;
        }
        let lhs = spec.eval(&spec.dilate(&z, 1)).norm().powf(-2.0 * beta);
        let rhs = factor * base.powf(-2.0 * beta);
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    worst
}

/// Value of `∫ |z₁⋯z_p|^{−2β}` over the unit polydisc in `Cⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum MonomialIntegral {
    Finite(f64),
    Divergent,
}

impl MonomialIntegral {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `(2π / (2 − 2β))^p · π^{n−p}` for `β < 1`, divergent otherwise.
pub fn monomial_integral(p: usize, n: usize, beta: f64) -> Result<MonomialIntegral> {
    if p == 0 || p > n {
        return Err(LabError::Precondition(format!("need 1 ≤ p ≤ n, got p={p}, n={n}")));
    }
    if beta >= 1.0 {
        return Ok(MonomialIntegral::Divergent);
    }
    let pi = std::f64::consts::PI;
    let disc = 2.0 * pi / (2.0 - 2.0 * beta);
    Ok(MonomialIntegral::Finite(
        disc.powi(p as i32) * pi.powi((n - p) as i32),
    ))
}
