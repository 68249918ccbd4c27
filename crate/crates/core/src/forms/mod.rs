//! Binary forms, the SL(2) substitution action and the degree-12 orbit map.
//!
//! A [`BinaryForm`] of degree `d` stores the coefficient of `z₁^{d−k} z₂^k` at
//! index `k`. Dehomogenizing at `z₂ = 1` gives the polynomial
//! `Σ c_k z^{d−k}` in descending powers of `z`, so a root `α = (α₁ : α₂)`
//! contributes the linear factor `α₂ z₁ − α₁ z₂` and the point at infinity
//! `(1 : 0)` lowers the dehomogenized degree.

pub mod group;
pub mod roots;

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::{Complex, Complex64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{LabError, Result};

pub use group::{
    commutator_subgroup, equivariance_check, icosahedral_group, ICOSAHEDRAL_ORDER, random_proj_point, random_sl2_displaced, stabilizer_probe, GroupElement,
    StabilizerReport,
};

/// Degree of the forms housing the icosahedral configuration and the orbit map.
pub const ORBIT_DEGREE: usize = 12;

/// Commutative ring operations needed to expand products of linear forms.
///
/// Implemented for exact rationals, complex floats and truncated power series,
/// so the same expansion code produces numeric forms and the exact local chart.
pub trait Ring:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + Debug
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
{
}

/// A field whose elements can be compared numerically.
pub trait Scalar: Ring + Div<Output = Self> {
    fn modulus(&self) -> f64;
    fn to_complex(&self) -> Complex64;
    /// Whether `self` should count as one for determinant validation.
    fn is_unit(&self, tol: f64) -> bool;

    /// Coefficients of `F(a z₁ + b z₂, c z₁ + d z₂)`.
    fn substitute(coeffs: &[Self], m: &GroupElement<Self>) -> Vec<Self> {
        substitute_linear(coeffs, m)
    }
}

impl Scalar for Complex64 {
    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn is_unit(&self, tol: f64) -> bool {
        (*self - Complex64::one()).norm() <= tol
    }

    /// Expanding a degree-12 substitution in floating point cancels badly
    /// when `m` is far from unitary, so the expansion is done exactly on the
    /// binary values of the inputs (as integers times a power of two) and
    /// rounded once.
    fn substitute(coeffs: &[Self], m: &GroupElement<Self>) -> Vec<Self> {
        let entries = [m.a, m.b, m.c, m.d];
        let km = dyadic_scale(&entries);
        let kc = dyadic_scale(coeffs);
        let scaled = |z: &Complex64, k: i64| Complex::new(scaled_integer(z.re, k), scaled_integer(z.im, k));
        let m = GroupElement {
            a: scaled(&m.a, km),
            b: scaled(&m.b, km),
            c: scaled(&m.c, km),
            d: scaled(&m.d, km),
        };
        let coeffs: Vec<_> = coeffs.iter().map(|z| scaled(z, kc)).collect();
        let shift = kc + km * (coeffs.len() as i64 - 1);
        substitute_linear(&coeffs, &m)
            .iter()
            .map(|z| Complex64::new(unscale(&z.re, shift), unscale(&z.im, shift)))
            .collect()
    }
}

/// Smallest `k ≥ 0` with `2^k x` an integer for every real and imaginary part.
fn dyadic_scale(values: &[Complex64]) -> i64 {
    values
        .iter()
        .flat_map(|z| [z.re, z.im])
        .filter(|x| *x != 0.0)
        .map(|x| -i64::from(num_traits::Float::integer_decode(x).1))
        .fold(0, i64::max)
}

fn scaled_integer(x: f64, k: i64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let (mantissa, exponent, sign) = num_traits::Float::integer_decode(x);
    let magnitude = BigInt::from(mantissa) << ((i64::from(exponent) + k) as usize);
    if sign < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// `v · 2^{−shift}` rounded to a double.
fn unscale(v: &BigInt, shift: i64) -> f64 {
    let bits = v.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (v >> (drop as usize)).to_f64().unwrap_or(0.0);
    let mut e = drop - shift;
    let mut x = top;
    while e > 0 {
        let step = e.min(1000);
        x *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        x /= 2f64.powi(step as i32);
        e += step;
    }
    x
}

impl Scalar for BigRational {
    fn modulus(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn is_unit(&self, _tol: f64) -> bool {
        self.is_one()
    }
}

/// A point `(z₁ : z₂)` of the projective line.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint<T> {
    pub z1: T,
    pub z2: T,
}

impl<T: Ring> ProjPoint<T> {
    pub fn new(z1: T, z2: T) -> Result<Self> {
        if z1.is_zero() && z2.is_zero() {
            return Err(LabError::InvalidProjPoint);
        }
        Ok(Self { z1, z2 })
    }

    /// The affine point `z`, i.e. `(z : 1)`.
    pub fn affine(z: T) -> Self {
        Self { z1: z, z2: T::one() }
    }

    pub fn infinity() -> Self {
        Self {
            z1: T::one(),
            z2: T::zero(),
        }
    }

    /// Coefficients `[α₂, −α₁]` of the linear form vanishing at this point.
    fn linear_factor(&self) -> [T; 2] {
        [self.z2.clone(), -self.z1.clone()]
    }
}

impl ProjPoint<Complex64> {
    /// Chordal distance on the Riemann sphere; zero iff the points agree
    /// projectively.
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        let cross = (self.z1 * other.z2 - self.z2 * other.z1).norm();
        let n1 = (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt();
        let n2 = (other.z1.norm_sqr() + other.z2.norm_sqr()).sqrt();
        cross / (n1 * n2)
    }
}

/// A homogeneous polynomial in two variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryForm<T> {
    coeffs: Vec<T>,
}

impl<T: Ring> BinaryForm<T> {
    /// Builds a form from its coefficients `c_k` of `z₁^{d−k} z₂^k`.
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.iter().all(Zero::is_zero) {
            return Err(LabError::ZeroForm);
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// The product of the linear forms vanishing at `roots`.
    pub fn from_roots(roots: &[ProjPoint<T>]) -> Self {
        let coeffs = roots.iter().fold(vec![T::one()], |acc, root| {
            poly_mul(&acc, &root.linear_factor())
        });
        Self { coeffs }
    }

    /// Evaluates `F(z₁, z₂)`.
    pub fn eval(&self, z1: &T, z2: &T) -> T {
        let d = self.degree();
        let mut acc = T::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            acc = acc + c.clone() * pow(z1, d - k) * pow(z2, k);
        }
        acc
    }

    /// `F ∘ g⁻¹`: the substitution action, under which the roots of the
    /// result are the `g`-images of the roots of `F`.
    pub fn act(&self, g: &GroupElement<T>) -> Self
    where
        T: Scalar,
    {
        Self {
            coeffs: T::substitute(&self.coeffs, &g.inverse()),
        }
    }
}

/// Coefficients of `F(a z₁ + b z₂, c z₁ + d z₂)` for `m = [[a, b], [c, d]]`.
fn substitute_linear<T: Ring>(coeffs: &[T], m: &GroupElement<T>) -> Vec<T> {
    let l1 = [m.a.clone(), m.b.clone()];
    let l2 = [m.c.clone(), m.d.clone()];
    let d = coeffs.len() - 1;
    let pows1 = powers(&l1, d);
    let pows2 = powers(&l2, d);
    let mut out = vec![T::zero(); d + 1];
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let term = poly_mul(&pows1[d - k], &pows2[k]);
        for (slot, t) in out.iter_mut().zip(term) {
            *slot = slot.clone() + c.clone() * t;
        }
    }
    out
}

impl<T: Scalar> BinaryForm<T> {
    /// Divides by the coefficient of largest modulus (first one on ties).
    pub fn normalized(&self) -> Self {
        let idx = max_modulus_index(&self.coeffs);
        let pivot = self.coeffs[idx].clone();
        Self {
            coeffs: self.coeffs.iter().map(|c| c.clone() / pivot.clone()).collect(),
        }
    }

    pub fn to_complex(&self) -> BinaryForm<Complex64> {
        BinaryForm {
            coeffs: self.coeffs.iter().map(Scalar::to_complex).collect(),
        }
    }
}

impl BinaryForm<Complex64> {
    /// Scale-free distance between the lines spanned by two forms.
    ///
    /// Each form is divided by its own coefficient at the other's
    /// max-modulus index and the max-norm of the difference is taken; the
    /// larger of the two directions is returned.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        if self.coeffs.len() != other.coeffs.len() {
            return f64::INFINITY;
        }
        one_sided_distance(&self.coeffs, &other.coeffs)
            .max(one_sided_distance(&other.coeffs, &self.coeffs))
    }

    /// Max-norm of the coefficient difference, without rescaling.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        if self.coeffs.len() != other.coeffs.len() {
            return f64::INFINITY;
        }
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn one_sided_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let idx = max_modulus_index(a);
    let pa = a[idx];
    let pb = b[idx];
    if pb.norm() <= f64::MIN_POSITIVE {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / pa - y / pb).norm())
        .fold(0.0, f64::max)
}

fn max_modulus_index<T: Scalar>(coeffs: &[T]) -> usize {
    let mut best = 0;
    let mut best_mod = coeffs[0].modulus();
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        let m = c.modulus();
        if m > best_mod {
            best = k;
            best_mod = m;
        }
    }
    best
}

/// Degree-12 form with the single root `α` of multiplicity 12: a point of the
/// rational normal curve.
pub fn expand_rnc<T: Ring>(alpha: &ProjPoint<T>) -> Result<BinaryForm<T>> {
    check_point(alpha)?;
    Ok(BinaryForm::from_roots(&vec![alpha.clone(); ORBIT_DEGREE]))
}

/// Degree-12 form with roots `α` (eleven times) and `β` (once).
pub fn expand_mu<T: Ring>(alpha: &ProjPoint<T>, beta: &ProjPoint<T>) -> Result<BinaryForm<T>> {
    check_point(alpha)?;
    check_point(beta)?;
    let mut roots = vec![alpha.clone(); ORBIT_DEGREE - 1];
    roots.push(beta.clone());
    Ok(BinaryForm::from_roots(&roots))
}

fn check_point<T: Ring>(p: &ProjPoint<T>) -> Result<()> {
    if p.z1.is_zero() && p.z2.is_zero() {
        Err(LabError::InvalidProjPoint)
    } else {
        Ok(())
    }
}

/// Klein's icosahedral form `z₁z₂(z₁¹⁰ + 11 z₁⁵z₂⁵ − z₂¹⁰)`, scaled so its
/// largest coefficient is 1.
///
/// Its roots are `0`, `∞` and the ten roots of `z¹⁰ + 11z⁵ − 1`, the
/// stereographic images of the vertices of a regular icosahedron with a pair
/// of opposite vertices at the poles. The order-5 rotation about the poles is
/// `z ↦ e^{2πi/5} z`.
pub fn icosahedral_form() -> BinaryForm<Complex64> {
    let mut coeffs = vec![Complex64::zero(); ORBIT_DEGREE + 1];
    coeffs[1] = Complex64::new(1.0 / 11.0, 0.0);
    coeffs[6] = Complex64::new(1.0, 0.0);
    coeffs[11] = Complex64::new(-1.0 / 11.0, 0.0);
    BinaryForm { coeffs }
}

/// The twelve vertex roots in closed form: `0`, `∞` and the fifth roots of
/// `(−11 ± 5√5)/2`.
pub fn icosahedral_vertex_roots() -> Vec<ProjPoint<Complex64>> {
    let mut roots = vec![
        ProjPoint::affine(Complex64::zero()),
        ProjPoint::infinity(),
    ];
    let s5 = 5f64.sqrt();
    for t in [(-11.0 + 5.0 * s5) / 2.0, (-11.0 - 5.0 * s5) / 2.0] {
        let base = Complex64::new(t, 0.0).powf(0.2);
        for k in 0..5 {
            let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 5.0);
            roots.push(ProjPoint::affine(base * rot));
        }
    }
    roots
}

pub(crate) fn poly_mul<T: Ring>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn powers<T: Ring>(linear: &[T; 2], max: usize) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(vec![T::one()]);
    for k in 1..=max {
        let next = poly_mul(&out[k - 1], linear);
        out.push(next);
    }
    out
}

fn pow<T: Ring>(x: &T, n: usize) -> T {
    (0..n).fold(T::one(), |acc, _| acc * x.clone())
}
