//! A flat-torus testbed for the lower bound `∫ φ ≥ −M`.
//!
//! On `[0, 2π)²` with volume `V = 4π²`, the Green's function
//! `G(z) = (1/V) Σ_{k≠0} e^{ik·z} / |k|²` satisfies
//! `f(x) = −∫ G(x − y) Δf(y) dy + (1/V) ∫ f`. Shifting by `−min G` gives a
//! nonnegative kernel `K` without changing the identity, because `Δf`
//! integrates to zero. If `max φ = 0` and `Δφ ≥ −c`, evaluating the identity
//! at an argmax `x*` gives
//! `∫ φ = V ∫ K(x*, y) Δφ(y) dy ≥ −c V ∫ K(x*, y) dy ≥ −M`
//! with `M = c V max_x ∫ K(x, y) dy`. On the discrete torus `K` is finite,
//! so integrability in each variable is automatic.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{LabError, Result};
use crate::report::CheckReport;
use crate::trial_rng;

/// Volume of the torus `[0, 2π)²`.
pub const VOLUME: f64 = 4.0 * PI * PI;
const MEAN_TOL: f64 = 1e-10;
const MAX_TOL: f64 = 1e-12;

/// Samples of a periodic function on an `m × m` grid, row-major in `(x₁, x₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    m: usize,
    values: Vec<f64>,
}

impl TorusField {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m < 4 {
            return Err(LabError::GridTooCoarse { got: m, min: 4 });
        }
        if values.len() != m * m {
            return Err(LabError::InvalidSpec(format!("expected {} values, got {}", m * m, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidSpec("field has non-finite values".into()));
        }
        Ok(Self { m, values })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 2.0 * PI / m as f64;
        let values = (0..m * m).map(|n| f((n / m) as f64 * h, (n % m) as f64 * h)).collect();
        Self::new(m, values)
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(m, vec![0.0; m * m])
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i % self.m) * self.m + j % self.m]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫ f` by the grid average times `V`.
    pub fn integral(&self) -> f64 {
        self.mean() * VOLUME
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Grid index `(i, j)` of the first maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let n = self
            .values
            .iter()
            .enumerate()
            .fold(0, |best, (n, &v)| if v > self.values[best] { n } else { best });
        (n / self.m, n % self.m)
    }

    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            m: self.m,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Signed integer frequency of FFT index `i`.
fn frequency(i: usize, m: usize) -> f64 {
    if i <= m / 2 {
        i as f64
    } else {
        i as f64 - m as f64
    }
}

fn wavenumber_sq(n: usize, m: usize) -> f64 {
    frequency(n / m, m).powi(2) + frequency(n % m, m).powi(2)
}

/// Unnormalized 2D DFT in place; the inverse sums `e^{+2πi jk/m}`.
fn fft2(data: &mut [Complex64], m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    fft.process(data);
    let mut t = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            t[j * m + i] = data[i * m + j];
        }
    }
    fft.process(&mut t);
    for i in 0..m {
        for j in 0..m {
            data[i * m + j] = t[j * m + i];
        }
    }
}

fn spectrum(f: &TorusField) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, f.m, false);
    data
}

fn from_spectrum(mut data: Vec<Complex64>, m: usize) -> TorusField {
    fft2(&mut data, m, true);
    let scale = 1.0 / (m * m) as f64;
    TorusField {
        m,
        values: data.iter().map(|z| z.re * scale).collect(),
    }
}

/// `Δf` by spectral multiplication with `−|k|²`.
pub fn spectral_laplacian(f: &TorusField) -> TorusField {
    let m = f.m;
    let data = spectrum(f)
        .into_iter()
        .enumerate()
        .map(|(n, z)| -z * wavenumber_sq(n, m))
        .collect();
    from_spectrum(data, m)
}

/// `Δf` by the periodic five-point stencil.
pub fn five_point_laplacian(f: &TorusField) -> TorusField {
    let m = f.m;
    let h2 = (2.0 * PI / m as f64).powi(2);
    let values = (0..m * m)
        .map(|n| {
            let (i, j) = (n / m, n % m);
            (f.get(i + 1, j) + f.get(i + m - 1, j) + f.get(i, j + 1) + f.get(i, j + m - 1) - 4.0 * f.get(i, j)) / h2
        })
        .collect();
    TorusField { m, values }
}

/// The zero-mean `u` with `Δu = source`.
pub fn green_apply(source: &TorusField) -> Result<TorusField> {
    let mean = source.mean();
    let scale = 1.0 + source.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if mean.abs() > MEAN_TOL * scale {
        return Err(LabError::NonzeroMean(mean));
    }
    let m = source.m;
    let data = spectrum(source)
        .into_iter()
        .enumerate()
        .map(|(n, z)| if n == 0 { Complex64::new(0.0, 0.0) } else { -z / wavenumber_sq(n, m) })
        .collect();
    Ok(from_spectrum(data, m))
}

/// The normalized Green's kernel `K(x, y) = G(x − y) − min G ≥ 0` on the grid.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    m: usize,
    /// `K` as a function of the grid offset `x − y`.
    offsets: Vec<f64>,
    shift: f64,
}

impl GreenKernel {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(LabError::GridTooCoarse { got: m, min: 4 });
        }
        let data = (0..m * m)
            .map(|n| {
                let k2 = wavenumber_sq(n, m);
                Complex64::new(if n == 0 { 0.0 } else { 1.0 / (VOLUME * k2) }, 0.0)
            })
            .collect::<Vec<_>>();
        let mut data = data;
        fft2(&mut data, m, true);
        let raw: Vec<f64> = data.iter().map(|z| z.re).collect();
        let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            m,
            offsets: raw.iter().map(|g| g - min).collect(),
            shift: -min,
        })
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    /// The constant added to `G` to make it nonnegative.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `K(x, y)` for grid points `x = (i₁, j₁)`, `y = (i₂, j₂)`.
    pub fn value(&self, x: (usize, usize), y: (usize, usize)) -> f64 {
        let m = self.m;
        let di = (x.0 + m - y.0 % m) % m;
        let dj = (x.1 + m - y.1 % m) % m;
        self.offsets[di * m + dj]
    }

    pub fn min(&self) -> f64 {
        self.offsets.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `max |K(x, y) − K(y, x)|` over all offsets.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.m;
        (0..m * m)
            .map(|n| {
                let (i, j) = (n / m, n % m);
                (self.offsets[n] - self.offsets[((m - i) % m) * m + (m - j) % m]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `∫ K(x, y) dy`, the same for every `x` by translation invariance.
    pub fn row_integral(&self) -> f64 {
        self.offsets.iter().sum::<f64>() * VOLUME / (self.m * self.m) as f64
    }

    /// `∫ K(x, y) g(y) dy` by the grid rule.
    pub fn integrate_against(&self, x: (usize, usize), g: &TorusField) -> f64 {
        let m = self.m;
        let sum: f64 = (0..m * m).map(|n| self.value(x, (n / m, n % m)) * g.values[n]).sum();
        sum * VOLUME / (m * m) as f64
    }

    /// `−∫ K(x, y) Δf(y) dy + (1/V) ∫ f` at the grid point `x`.
    pub fn reconstruct(&self, x: (usize, usize), laplacian: &TorusField, mean: f64) -> f64 {
        -self.integrate_against(x, laplacian) + mean
    }
}

/// `M = c V max_x ∫ K(x, y) dy`.
pub fn lower_bound_constant(kernel: &GreenKernel, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(LabError::Precondition(format!("bound constant must be nonnegative, got {c}")));
    }
    Ok(c * VOLUME * kernel.row_integral())
}

/// Tolerance for `Δφ ≥ −c` on the grid.
pub fn laplacian_tolerance(c: f64) -> f64 {
    1e-8 * (1.0 + c)
}

/// Checks `∫ φ ≥ −M` together with each step of the chain through the argmax.
///
/// Hypothesis violations (`max φ ≠ 0`, `Δφ < −c`) are errors, not failed checks.
pub fn check_lower_bound(phi: &TorusField, c: f64, kernel: &GreenKernel) -> Result<CheckReport> {
    if kernel.m != phi.m {
        return Err(LabError::Precondition("kernel and field resolutions differ".into()));
    }
    if phi.max().abs() > MAX_TOL {
        return Err(LabError::Precondition(format!("max φ = {} is not 0", phi.max())));
    }
    let lap = spectral_laplacian(phi);
    let lap_tol = laplacian_tolerance(c);
    if lap.min() < -c - lap_tol {
        return Err(LabError::Precondition(format!("Δφ reaches {} < −{c}", lap.min())));
    }
    let m_const = lower_bound_constant(kernel, c)?;
    let x_star = phi.argmax();
    let lhs = phi.integral();
    let via_kernel = VOLUME * kernel.integrate_against(x_star, &lap);
    let lower = -c * VOLUME * kernel.row_integral();
    let tol = 1e-9 * (1.0 + lhs.abs() + m_const);
    let mut report = CheckReport::new("lower_bound", tol);
    report.record(tol - (lhs - via_kernel).abs());
    report.record(via_kernel - lower + tol);
    report.record(lower + m_const + tol);
    report.record(lhs + m_const);
    Ok(report
        .with_detail("integral", lhs)
        .with_detail("kernel_side", via_kernel)
        .with_detail("chain_lower", lower)
        .with_detail("M", m_const)
        .with_detail("margin", lhs + m_const))
}

/// Smooth random field: white noise damped by `e^{−t|k|²}` and cut off above `kmax`.
pub fn smooth_noise<R: Rng>(rng: &mut R, m: usize, t: f64, kmax: f64) -> TorusField {
    let white = TorusField {
        m,
        values: (0..m * m).map(|_| rng.sample(StandardNormal)).collect(),
    };
    let data = spectrum(&white)
        .into_iter()
        .enumerate()
        .map(|(n, z)| {
            let k2 = wavenumber_sq(n, m);
            if k2 > kmax * kmax {
                Complex64::new(0.0, 0.0)
            } else {
                z * (-t * k2).exp()
            }
        })
        .collect();
    from_spectrum(data, m)
}

/// A random `φ` with `Δφ ≥ −c` and `max φ = 0`: `φ = c u − max(c u)` where
/// `Δu = w / mean(w) − 1` for a smooth positive random `w`.
pub fn random_admissible<R: Rng>(rng: &mut R, m: usize, c: f64) -> Result<TorusField> {
    let t = 0.01 + 0.2 * rng.random::<f64>();
    let amplitude = 0.5 + 2.5 * rng.random::<f64>();
    let g = smooth_noise(rng, m, t, m as f64 / 4.0);
    let spread = g.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let w = g.map(|v| (amplitude * v / spread).exp());
    let mean = w.mean();
    let source = w.map(|v| v / mean - 1.0);
    let centered = source.map(|v| v - source.mean());
    let u = green_apply(&centered)?;
    let phi = u.map(|v| c * v);
    let top = phi.max();
    Ok(phi.map(|v| v - top))
}

/// Runs [`check_lower_bound`] on `trials` random admissible fields.
pub fn lower_bound_trials(m: usize, c: f64, trials: usize, seed: u64) -> Result<CheckReport> {
    let kernel = GreenKernel::new(m)?;
    let reports = (0..trials)
        .into_par_iter()
        .map(|i| {
            let phi = random_admissible(&mut trial_rng(seed, i as u64), m, c)?;
            check_lower_bound(&phi, c, &kernel)
        })
        .collect::<Result<Vec<_>>>()?;
    let margins: Vec<f64> = reports.iter().map(|r| r.worst_margin).collect();
    let min_bound_margin = reports
        .iter()
        .map(|r| r.details["margin"].as_f64().unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    Ok(CheckReport::from_margins("lower_bound_trials", 1e-9, margins)
        .with_detail("M", lower_bound_constant(&kernel, c)?)
        .with_detail("min_bound_margin", min_bound_margin))
}

/// Maximum error of reconstructing `f` from `Δf` and its mean through the
/// kernel, over `points` random grid points.
pub fn reconstruction_error(f: &TorusField, kernel: &GreenKernel, points: usize, seed: u64) -> f64 {
    let lap = spectral_laplacian(f);
    let mean = f.mean();
    let mut rng = trial_rng(seed, 0);
    let m = f.m;
    (0..points)
        .map(|_| {
            let x = (rng.random_range(0..m), rng.random_range(0..m));
            (kernel.reconstruct(x, &lap, mean) - f.get(x.0, x.1)).abs()
        })
        .fold(0.0, f64::max)
}
