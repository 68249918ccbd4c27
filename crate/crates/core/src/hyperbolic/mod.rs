//! Hyperbolic 3-space as determinant-one positive Hermitian 2×2 matrices.
//!
//! `SL(2,C)` acts by `P ↦ g P g*`; the stabilizer of the identity `P₀` is
//! `SU(2)`, so the icosahedral group acts by rotations about `P₀`. Distances
//! are the root-sum-square of the log-eigenvalues of `A⁻¹B`, which gives
//! `distance(P₀, diag(eᵗ, e⁻ᵗ)) = t√2`.

mod checks;
mod cstar;

pub use checks::{
    chord_bound_check, convexity_check, fixed_point_uniqueness, invariant_min_check, random_convex_generator,
    sampled_argmin, symmetrize, ChordConstants, InvariantFunction, CONVEXITY_REL_STEP,
};
pub use cstar::{cstar_psh_check, cstar_test_functions, CStarFunction, MIN_RESOLUTION};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::forms::GroupElement;

/// Tolerance on Hermitian symmetry and on the determinant.
pub const POINT_TOL: f64 = 1e-12;

/// A Hermitian matrix `[[a, b], [b̄, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct Herm {
    a: f64,
    b: Complex64,
    d: f64,
}

impl Herm {
    fn identity() -> Self {
        Self { a: 1.0, b: Complex64::new(0.0, 0.0), d: 1.0 }
    }

    fn det(&self) -> f64 {
        self.a * self.d - self.b.norm_sqr()
    }

    /// Applies `f` spectrally; `df` is used when the eigenvalues nearly coincide.
    fn apply(&self, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        let m = 0.5 * (self.a + self.d);
        let h = 0.5 * (self.a - self.d);
        let s = h.hypot(self.b.norm());
        let (fp, fm) = (f(m + s), f(m - s));
        let slope = if s > 1e-7 * m.abs().max(1.0) { (fp - fm) / (2.0 * s) } else { df(m) };
        let mean = 0.5 * (fp + fm);
        Self {
            a: mean + slope * h,
            b: self.b * slope,
            d: mean - slope * h,
        }
    }

    fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[Complex64::new(self.a, 0.0), self.b], [self.b.conj(), Complex64::new(self.d, 0.0)]]
    }

    /// `X H X*` for an arbitrary complex 2×2 `X`, re-Hermitized.
    fn congruence(&self, x: &[[Complex64; 2]; 2]) -> Self {
        let h = self.matrix();
        let xh = mat_mul(x, &h);
        let xs = [[x[0][0].conj(), x[1][0].conj()], [x[0][1].conj(), x[1][1].conj()]];
        let r = mat_mul(&xh, &xs);
        Self {
            a: r[0][0].re,
            b: 0.5 * (r[0][1] + r[1][0].conj()),
            d: r[1][1].re,
        }
    }

    /// Rescales to determinant one.
    fn unimodular(self) -> Self {
        let k = self.det().sqrt().recip();
        Self {
            a: self.a * k,
            b: self.b * k,
            d: self.d * k,
        }
    }
}

fn mat_mul(x: &[[Complex64; 2]; 2], y: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    r
}

/// A point of hyperbolic 3-space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HPoint(Herm);

impl HPoint {
    /// The base point `P₀ = I`.
    pub fn base() -> Self {
        Self(Herm::identity())
    }

    /// Validates Hermitian symmetry, determinant one and positivity.
    pub fn from_matrix(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let asym = (m[0][1] - m[1][0].conj()).norm().max(m[0][0].im.abs()).max(m[1][1].im.abs());
        if asym > POINT_TOL {
            return Err(LabError::Precondition(format!("matrix is not Hermitian (defect {asym:e})")));
        }
        let h = Herm { a: m[0][0].re, b: m[0][1], d: m[1][1].re };
        if h.a <= 0.0 || h.det() <= 0.0 {
            return Err(LabError::Precondition("matrix is not positive definite".into()));
        }
        if (h.det() - 1.0).abs() > POINT_TOL {
            return Err(LabError::Precondition(format!("determinant {} is not 1", h.det())));
        }
        Ok(Self(h))
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.0.matrix()
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    pub fn trace(&self) -> f64 {
        self.0.a + self.0.d
    }

    /// `g g*`; right multiplication of `g` by `SU(2)` does not change it.
    pub fn from_group(g: &GroupElement<Complex64>) -> Result<Self> {
        let det = g.det();
        if (det - 1.0).norm() > POINT_TOL * 100.0 {
            return Err(LabError::DegenerateElement(det.norm()));
        }
        Ok(Self::base().act(g))
    }

    /// `g P g*`.
    pub fn act(&self, g: &GroupElement<Complex64>) -> Self {
        let [a, b, c, d] = g.entries();
        Self(self.0.congruence(&[[a, b], [c, d]]).unimodular())
    }

    /// Exponential coordinates at `P₀`: `x ↦ exp(X)` with `X` traceless
    /// Hermitian and `‖X‖_F = |x|`, so `distance(P₀, ·) = |x|`.
    pub fn from_coords(x: [f64; 3]) -> Self {
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let (p, q) = (x[0] * k, Complex64::new(x[1] * k, x[2] * k));
        let rho = p.hypot(q.norm());
        let ch = rho.cosh();
        let sh = if rho > 1e-300 { rho.sinh() / rho } else { 1.0 };
        Self(Herm { a: ch + sh * p, b: q * sh, d: ch - sh * p }.unimodular())
    }

    /// Inverse of [`HPoint::from_coords`].
    pub fn coords(&self) -> [f64; 3] {
        let log = self.0.apply(f64::ln, f64::recip);
        let k = std::f64::consts::SQRT_2;
        let p = 0.5 * (log.a - log.d);
        [p * k, log.b.re * k, log.b.im * k]
    }

    /// Root-sum-square of the log-eigenvalues of `A⁻¹B`.
    pub fn distance(&self, other: &Self) -> f64 {
        let inv_sqrt = self.0.apply(|x| x.powf(-0.5), |x| -0.5 * x.powf(-1.5));
        let c = other.0.congruence(&inv_sqrt.matrix());
        let m = 0.5 * (c.a + c.d);
        let s = (0.5 * (c.a - c.d)).hypot(c.b.norm());
        let up = (m - 1.0 + s).ln_1p();
        let down = (m - 1.0 - s).ln_1p();
        up.hypot(down)
    }

    /// `A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
    pub fn geodesic(&self, other: &Self, t: f64) -> Self {
        let sqrt = self.0.apply(f64::sqrt, |x| 0.5 / x.sqrt());
        let inv_sqrt = self.0.apply(|x| x.powf(-0.5), |x| -0.5 * x.powf(-1.5));
        let c = other.0.congruence(&inv_sqrt.matrix());
        let ct = c.apply(|x| x.powf(t), |x| t * x.powf(t - 1.0));
        Self(ct.congruence(&sqrt.matrix()).unimodular())
    }

    /// The point at distance `length` from `self` along the geodesic whose
    /// initial direction at `P₀` would be `direction` (a unit vector).
    pub fn shoot(&self, direction: [f64; 3], length: f64) -> Self {
        let end = Self::from_coords(direction.map(|x| x * length));
        let sqrt = self.0.apply(f64::sqrt, |x| 0.5 / x.sqrt());
        Self(end.0.congruence(&sqrt.matrix()).unimodular())
    }

    /// Random point `exp(tD)` with `D` uniform on the unit sphere and `t`
    /// uniform in `[0, radius]`.
    pub fn random<R: Rng>(rng: &mut R, radius: f64) -> Self {
        let t = rng.random::<f64>() * radius;
        Self::from_coords(random_direction(rng).map(|x| x * t))
    }
}

/// A uniformly distributed unit vector in R³.
pub fn random_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return v.map(|x| x / n);
        }
    }
}

/// The orbit `{u P u*}` under the 60 icosahedral rotations, listed with repetition.
pub fn gamma_orbit(p: &HPoint) -> Vec<HPoint> {
    checks::gamma().iter().map(|g| p.act(g)).collect()
}
