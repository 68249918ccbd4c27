//! SL(2) lifts, the binary icosahedral group and the stabilizer probe.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use rayon::prelude::*;

use super::{expand_mu, BinaryForm, ProjPoint, Ring, Scalar};
use crate::report::CheckReport;
use crate::error::{LabError, Result};

/// Determinant tolerance for floating-point lifts.
pub const DET_TOL: f64 = 1e-12;

/// Number of elements of the rotation icosahedral group.
pub const ICOSAHEDRAL_ORDER: usize = 60;

/// A determinant-one 2×2 matrix `[[a, b], [c, d]]` acting on `(z₁, z₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> GroupElement<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let g = Self { a, b, c, d };
        let det = g.det();
        if !det.is_unit(DET_TOL) {
            let err = (det.to_complex() - num_complex::Complex64::new(1.0, 0.0)).norm();
            return Err(LabError::DegenerateElement(err));
        }
        Ok(g)
    }

    pub fn identity() -> Self {
        Self {
            a: T::one(),
            b: T::zero(),
            c: T::zero(),
            d: T::one(),
        }
    }
}

impl<T: Ring> GroupElement<T> {
    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    /// The adjugate, which is the inverse for determinant one.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            a: self.a.clone() * other.a.clone() + self.b.clone() * other.c.clone(),
            b: self.a.clone() * other.b.clone() + self.b.clone() * other.d.clone(),
            c: self.c.clone() * other.a.clone() + self.d.clone() * other.c.clone(),
            d: self.c.clone() * other.b.clone() + self.d.clone() * other.d.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            a: -self.a.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: -self.d.clone(),
        }
    }

    /// Linear action on homogeneous coordinates (a Möbius map on P¹).
    pub fn apply(&self, p: &ProjPoint<T>) -> ProjPoint<T> {
        ProjPoint {
            z1: self.a.clone() * p.z1.clone() + self.b.clone() * p.z2.clone(),
            z2: self.c.clone() * p.z1.clone() + self.d.clone() * p.z2.clone(),
        }
    }
}

impl GroupElement<Complex64> {
    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: self.c.conj(),
            c: self.b.conj(),
            d: self.d.conj(),
        }
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Distance between the PSL classes `±self` and `±other`.
    pub fn psl_distance(&self, other: &Self) -> f64 {
        self.frobenius_distance(other)
            .min(self.frobenius_distance(&other.neg()))
    }

    pub fn is_pm_identity(&self, tol: f64) -> bool {
        self.psl_distance(&Self::identity()) <= tol
    }

    /// Order in PSL(2, C), i.e. the least `k` with `g^k = ±1`, up to `max`.
    pub fn psl_order(&self, max: usize, tol: f64) -> Option<usize> {
        let mut acc = self.clone();
        for k in 1..=max {
            if acc.is_pm_identity(tol) {
                return Some(k);
            }
            acc = acc.mul(self);
        }
        None
    }

    /// Rescales a nonsingular matrix to determinant one.
    pub fn normalize_det(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(LabError::DegenerateElement(1.0));
        }
        let s = det.sqrt();
        Self::new(a / s, b / s, c / s, d / s)
    }

    /// Picks the sign representative whose first non-negligible entry has
    /// positive real part (or positive imaginary part when purely imaginary).
    fn canonical_sign(&self) -> Self {
        for z in self.entries() {
            if z.norm() > 1e-8 {
                let flip = if z.re.abs() > 1e-8 { z.re < 0.0 } else { z.im < 0.0 };
                return if flip { self.neg() } else { self.clone() };
            }
        }
        self.clone()
    }
}

/// SU(2) generators of the icosahedral rotation group: the order-5 rotation
/// `z ↦ εz`, the order-2 rotation `z ↦ −1/z`, and Klein's order-2 rotation
/// exchanging the poles with a pair of ring vertices (`ε = e^{2πi/5}`).
pub fn icosahedral_generators() -> [GroupElement<Complex64>; 3] {
    let zeta = Complex64::from_polar(1.0, PI / 5.0);
    let s = GroupElement {
        a: zeta,
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: zeta.conj(),
    };
    let t = GroupElement {
        a: Complex64::new(0.0, 0.0),
        b: Complex64::new(-1.0, 0.0),
        c: Complex64::new(1.0, 0.0),
        d: Complex64::new(0.0, 0.0),
    };
    let eps = |k: f64| Complex64::from_polar(1.0, 2.0 * PI * k / 5.0);
    let p = eps(1.0) - eps(4.0);
    let q = eps(2.0) - eps(3.0);
    let r5 = 5f64.sqrt();
    let u = GroupElement {
        a: -p / r5,
        b: q / r5,
        c: q / r5,
        d: p / r5,
    };
    [s, t, u]
}

/// Closes a generating set under multiplication modulo `±1`, returning one
/// canonical lift per PSL element in breadth-first order. Stops with an error
/// once `cap` elements are found.
pub fn psl_closure(
    generators: &[GroupElement<Complex64>],
    cap: usize,
) -> Result<Vec<GroupElement<Complex64>>> {
    let mut elements = vec![GroupElement::identity()];
    let mut frontier = 0;
    while frontier < elements.len() {
        let current = elements[frontier].clone();
        frontier += 1;
        for g in generators {
            let candidate = current.mul(g).canonical_sign();
            if !elements.iter().any(|e| e.psl_distance(&candidate) < 1e-8) {
                elements.push(candidate);
                if elements.len() > cap {
                    return Err(LabError::Precondition(format!(
                        "closure exceeded {cap} elements"
                    )));
                }
            }
        }
    }
    Ok(elements)
}

/// The 60 SU(2) representatives of the icosahedral rotation group, one per
/// element of PSL(2, C).
pub fn icosahedral_group() -> Vec<GroupElement<Complex64>> {
    psl_closure(&icosahedral_generators(), 1000)
        .expect("icosahedral generators close to a finite group")
}

/// The subgroup generated by all commutators `ghg⁻¹h⁻¹`.
pub fn commutator_subgroup(group: &[GroupElement<Complex64>]) -> Vec<GroupElement<Complex64>> {
    let mut commutators: Vec<GroupElement<Complex64>> = Vec::new();
    for g in group {
        for h in group {
            let c = g.mul(h).mul(&g.inverse()).mul(&h.inverse()).canonical_sign();
            if !commutators.iter().any(|e| e.psl_distance(&c) < 1e-8) {
                commutators.push(c);
            }
        }
    }
    psl_closure(&commutators, 10 * group.len().max(1))
        .expect("commutators of a finite group generate a finite group")
}

/// Evidence that the projective stabilizer of a form is exactly Γ.
#[derive(Clone, Debug, Serialize)]
pub struct StabilizerReport {
    pub group_size: usize,
    pub group_fixed: usize,
    /// Largest unscaled coefficient error over Γ.
    pub group_worst_error: f64,
    pub minus_identity_fixes: bool,
    pub trials: usize,
    pub moved: usize,
    /// Smallest projective displacement among the random non-Γ elements.
    pub min_movement: f64,
    pub pass: bool,
}

/// Checks that all of Γ fixes `f` and that `trials` random determinant-one
/// elements at PSL distance > 0.1 from Γ move it projectively by > 1e-6.
pub fn stabilizer_probe(f: &BinaryForm<Complex64>, trials: usize, seed: u64) -> StabilizerReport {
    let group = icosahedral_group();
    let mut group_fixed = 0;
    let mut worst: f64 = 0.0;
    for g in &group {
        let err = f.act(g).max_abs_difference(f);
        worst = worst.max(err);
        if err < 1e-10 {
            group_fixed += 1;
        }
    }
    let minus = GroupElement::<Complex64>::identity().neg();
    let minus_identity_fixes = f.act(&minus).max_abs_difference(f) < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moved = 0;
    let mut min_movement = f64::INFINITY;
    let mut done = 0;
    while done < trials {
        let g = random_sl2(&mut rng);
        if group.iter().any(|e| e.psl_distance(&g) <= 0.1) {
            continue;
        }
        done += 1;
        let movement = f.act(&g).projective_distance(f);
        min_movement = min_movement.min(movement);
        if movement > 1e-6 {
            moved += 1;
        }
    }
    StabilizerReport {
        group_size: group.len(),
        group_fixed,
        group_worst_error: worst,
        minus_identity_fixes,
        trials,
        moved,
        min_movement,
        pass: group_fixed == group.len() && moved == trials && minus_identity_fixes,
    }
}

/// A random element of SL(2, C) with Gaussian entries rescaled to unit
/// determinant.
pub fn random_sl2<R: Rng>(rng: &mut R) -> GroupElement<Complex64> {
    loop {
        let mut z = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let (a, b, c, d) = (z(), z(), z(), z());
        if (a * d - b * c).norm() > 1e-3 {
            if let Ok(g) = GroupElement::normalize_det(a, b, c, d) {
                return g;
            }
        }
    }
}

/// A random element of SU(2) (Haar measure via a normalized Gaussian
/// quaternion).
pub fn random_su2<R: Rng>(rng: &mut R) -> GroupElement<Complex64> {
    let mut q: [f64; 4] = [0.0; 4];
    for x in &mut q {
        *x = rng.sample(StandardNormal);
    }
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(q[0] / n, q[1] / n);
    let b = Complex64::new(q[2] / n, q[3] / n);
    GroupElement {
        a,
        b,
        c: -b.conj(),
        d: a.conj(),
    }
}

/// `u₁ diag(eᵗ, e⁻ᵗ) u₂` with Haar-random `u₁, u₂ ∈ SU(2)` and `t` uniform
/// in `[0, max_displacement]`; the condition number is at most `e^{2·max}`.
pub fn random_sl2_displaced<R: Rng>(rng: &mut R, max_displacement: f64) -> GroupElement<Complex64> {
    let t = rng.random::<f64>() * max_displacement;
    let zero = Complex64::new(0.0, 0.0);
    let d = GroupElement {
        a: Complex64::new(t.exp(), 0.0),
        b: zero,
        c: zero,
        d: Complex64::new((-t).exp(), 0.0),
    };
    random_su2(rng).mul(&d).mul(&random_su2(rng))
}

/// A point of the projective line with Gaussian homogeneous coordinates,
/// uniformly distributed on the sphere.
pub fn random_proj_point<R: Rng>(rng: &mut R) -> ProjPoint<Complex64> {
    loop {
        let mut z = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        if let Ok(p) = ProjPoint::new(z(), z()) {
            return p;
        }
    }
}

/// Displacement bound for the random elements of [`equivariance_check`].
///
/// Acting on a degree-12 form with rounded coefficients amplifies the
/// rounding by up to `κ(g)¹²`; at `κ ≤ e` this stays near `1e-11`.
pub const EQUIVARIANCE_DISPLACEMENT: f64 = 0.5;

/// Projective distance between `act(g, μ(α, β))` and `μ(gα, gβ)` over random triples.
pub fn equivariance_check(trials: usize, tolerance: f64, seed: u64) -> CheckReport {
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::trial_rng(seed, i as u64);
            let g = random_sl2_displaced(&mut rng, EQUIVARIANCE_DISPLACEMENT);
            let (a, b) = (random_proj_point(&mut rng), random_proj_point(&mut rng));
            let lhs = expand_mu(&a, &b).expect("valid points").act(&g);
            let rhs = expand_mu(&g.apply(&a), &g.apply(&b)).expect("valid points");
            lhs.projective_distance(&rhs)
        })
        .collect();
    let max = errors.iter().cloned().fold(0.0, f64::max);
    CheckReport::from_margins("equivariance", tolerance, errors.iter().map(|e| tolerance - e)).with_detail("max_error", max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::icosahedral_form;
    use num_rational::BigRational;
    use std::collections::BTreeMap;

    #[test]
    fn generators_are_unitary_with_unit_det() {
        for g in icosahedral_generators() {
            assert!((g.det() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            let gg = g.mul(&g.adjoint());
            assert!(gg.frobenius_distance(&GroupElement::identity()) < 1e-14);
        }
    }

    #[test]
    fn group_has_sixty_elements() {
        assert_eq!(icosahedral_group().len(), ICOSAHEDRAL_ORDER);
    }

    #[test]
    fn element_orders_are_1_2_3_5() {
        let mut counts = BTreeMap::new();
        for g in icosahedral_group() {
            let k = g.psl_order(60, 1e-9).expect("finite order");
            *counts.entry(k).or_insert(0) += 1;
        }
        let expected: BTreeMap<usize, usize> =
            [(1, 1), (2, 15), (3, 20), (5, 24)].into_iter().collect();
        assert_eq!(counts, expected);
    }

    #[test]
    fn group_is_closed_and_perfect() {
        let group = icosahedral_group();
        for g in &group {
            for h in &group {
                let gh = g.mul(h);
                assert!(group.iter().any(|e| e.psl_distance(&gh) < 1e-9));
            }
        }
        assert_eq!(commutator_subgroup(&group).len(), ICOSAHEDRAL_ORDER);
    }

    #[test]
    fn dihedral_subgroup_is_not_perfect() {
        let [s, t, _] = icosahedral_generators();
        let d5 = psl_closure(&[s, t], 100).unwrap();
        assert_eq!(d5.len(), 10);
        assert_eq!(commutator_subgroup(&d5).len(), 5);
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        assert!(matches!(
            GroupElement::new(one * 2.0, z, z, one),
            Err(LabError::DegenerateElement(_))
        ));
        let q = |n: i64| BigRational::from_integer(n.into());
        assert!(GroupElement::new(q(2), q(3), q(1), q(2)).is_ok());
        assert!(GroupElement::new(q(2), q(3), q(1), q(1)).is_err());
    }

    #[test]
    fn icosahedral_form_is_fixed_exactly() {
        let f = icosahedral_form();
        for g in icosahedral_group() {
            assert!(f.act(&g).max_abs_difference(&f) < 1e-12);
        }
    }

    #[test]
    fn identity_and_minus_identity_act_trivially() {
        let f = expand_mu(
            &ProjPoint::affine(Complex64::new(0.4, 1.0)),
            &ProjPoint::affine(Complex64::new(-2.0, 0.1)),
        )
        .unwrap();
        let id = GroupElement::<Complex64>::identity();
        assert!(f.act(&id).max_abs_difference(&f) == 0.0);
        assert!(f.act(&id.neg()).max_abs_difference(&f) < 1e-14);
    }

    #[test]
    fn probe_separates_gamma_from_random_elements() {
        let report = stabilizer_probe(&icosahedral_form(), 200, 7);
        assert_eq!(report.group_fixed, 60);
        assert_eq!(report.moved, 200);
        assert!(report.minus_identity_fixes);
        assert!(report.pass);
    }

    #[test]
    fn action_is_a_left_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = icosahedral_form().act(&random_sl2(&mut rng));
        for _ in 0..20 {
            let g = random_sl2(&mut rng);
            let h = random_sl2(&mut rng);
            let lhs = f.act(&g.mul(&h)).normalized();
            let rhs = f.act(&h).act(&g).normalized();
            assert!(lhs.max_abs_difference(&rhs) < 1e-10);
        }
    }
}

#[cfg(test)]
mod equivariance_tests {
    use super::*;

    #[test]
    fn orbit_map_equivariance_on_random_triples() {
        let report = equivariance_check(100, 1e-9, 1);
        assert!(report.pass, "{report:?}");
        assert_eq!(report.trials, 100);
    }

    #[test]
    fn displaced_elements_have_bounded_condition() {
        let mut rng = crate::trial_rng(2, 0);
        for _ in 0..100 {
            let g = random_sl2_displaced(&mut rng, 0.5);
            let p = crate::hyperbolic::HPoint::from_group(&g).unwrap();
            assert!(p.distance(&crate::hyperbolic::HPoint::base()) <= 0.5 * 2f64.sqrt() * 2.0 + 1e-9);
        }
    }
}
