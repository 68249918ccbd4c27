//! The log-sum-exp potential on `V*` and the invariant minimization there.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{dot_f, fixed_points, transpose, IntMatrix, LatticePolytope, PolytopeSymmetry};
use crate::error::{LabError, Result};
use crate::optimize::minimize;
use crate::report::CheckReport;
use crate::trial_rng;

const VERTEX_TOL: f64 = 1e-3;
const ARGMIN_TOL: f64 = 1e-4;
const SEARCH_RADIUS: f64 = 5.0;

/// `f(x) = log Σ_v e^{⟨v, x⟩}` over all lattice points `v` of a polytope.
#[derive(Clone, Debug)]
pub struct LsePotential {
    points: Vec<Vec<i64>>,
}

impl LsePotential {
    pub fn new(p: &LatticePolytope) -> Self {
        Self { points: p.lattice_points() }
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    fn exponents(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let e: Vec<f64> = self.points.iter().map(|v| dot_f(v, x)).collect();
        let max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (e, max)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (e, max) = self.exponents(x);
        max + e.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
    }

    /// The softmax average of the lattice points.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (e, max) = self.exponents(x);
        let w: Vec<f64> = e.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = w.iter().sum();
        (0..x.len())
            .map(|i| self.points.iter().zip(&w).map(|(v, w)| v[i] as f64 * w).sum::<f64>() / total)
            .collect()
    }
}

fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn random_in_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    random_unit(rng, n).iter().map(|x| x * r).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// For each vertex, `|∇f(R u_v) − v|` where `u_v` is the normalized sum of
/// the facet normals at `v`, a direction exposing `v`.
pub fn vertex_approach(p: &LatticePolytope, radius: f64) -> Vec<(Vec<i64>, f64)> {
    let f = LsePotential::new(p);
    p.vertices()
        .iter()
        .map(|v| {
            let mut u = vec![0.0; p.dimension()];
            for facet in p.active_facets(v) {
                for (ui, &a) in u.iter_mut().zip(&facet.normal) {
                    *ui += a as f64;
                }
            }
            let len = norm(&u);
            let x: Vec<f64> = u.iter().map(|c| radius * c / len).collect();
            let g = f.gradient(&x);
            let err = norm(&g.iter().zip(v).map(|(g, &v)| g - v as f64).collect::<Vec<_>>());
            (v.clone(), err)
        })
        .collect()
}

/// `∇f` stays strictly inside `P` at `samples` points of the ball of
/// `radius`, and `∇f(R u_v)` comes within `1e-3` of each vertex at `R = 50`.
pub fn gradient_image_check(p: &LatticePolytope, samples: usize, radius: f64, seed: u64) -> CheckReport {
    let f = LsePotential::new(p);
    let n = p.dimension();
    let inside: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = random_in_ball(&mut trial_rng(seed, i as u64), n, radius);
            let margin = p.interior_margin(&f.gradient(&x));
            if margin > 0.0 {
                margin
            } else {
                -f64::MIN_POSITIVE.max(-margin)
            }
        })
        .collect();
    let inside_fraction = inside.iter().filter(|&&m| m > 0.0).count() as f64 / samples.max(1) as f64;
    let approach = vertex_approach(p, 50.0);
    let max_vertex_error = approach.iter().map(|a| a.1).fold(0.0, f64::max);
    let margins = inside.into_iter().chain(approach.iter().map(|a| VERTEX_TOL - a.1));
    CheckReport::from_margins("gradient_image", VERTEX_TOL, margins)
        .with_detail("inside_fraction", inside_fraction)
        .with_detail("max_vertex_error", max_vertex_error)
        .with_detail("gradient_at_origin", f.gradient(&vec![0.0; n]))
}

/// `x ↦ (1/|Γ|) Σ_g q(gᵀx)` for a positive definite quadratic
/// `q(y) = (y − c)ᵀ A (y − c)`.
#[derive(Clone, Debug)]
pub struct SymmetricQuadratic {
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
    dual: Vec<IntMatrix>,
}

impl SymmetricQuadratic {
    pub fn value(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .dual
            .iter()
            .map(|gt| {
                let y: Vec<f64> = gt.iter().zip(&self.c).map(|(row, c)| dot_f(row, x) - c).collect();
                self.a
                    .iter()
                    .zip(&y)
                    .map(|(row, yi)| yi * row.iter().zip(&y).map(|(a, yj)| a * yj).sum::<f64>())
                    .sum::<f64>()
            })
            .sum();
        total / self.dual.len() as f64
    }
}

/// A random quadratic `A = BᵀB + 0.1 I`, `c` in the unit cube, averaged over the dual action.
pub fn random_symmetric_quadratic<R: Rng>(rng: &mut R, group: &PolytopeSymmetry) -> SymmetricQuadratic {
    let n = group.dimension();
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let a = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 })
                .collect()
        })
        .collect();
    let c = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    SymmetricQuadratic {
        a,
        c,
        dual: group.elements().iter().map(transpose).collect(),
    }
}

/// Best of `samples` points in the ball of radius 5, refined by simplex search.
pub fn sampled_argmin_dual<F: Fn(&[f64]) -> f64 + Sync>(f: &F, n: usize, samples: usize, seed: u64) -> Vec<f64> {
    let (start, best) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = random_in_ball(&mut trial_rng(seed, i as u64), n, SEARCH_RADIUS);
            let v = f(&x);
            (x, v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((vec![0.0; n], f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    match minimize(f, &start, 0.5, 4000) {
        Ok((x, fx)) if fx <= best => x,
        _ => start,
    }
}

/// Chord margins `−b + (ā + b)|Q| − f(Q)/2π` on the unit ball and
/// `π(ā − b) − f(Q)` on the half ball, where `f(0) = −2πb` and `2πā` is the
/// sampled maximum on the unit sphere (including each point's radial endpoint).
pub fn euclidean_chord_margins<F: Fn(&[f64]) -> f64>(f: &F, n: usize, trials: usize, seed: u64) -> Vec<f64> {
    let mut rng = trial_rng(seed, u64::MAX);
    let draws: Vec<(f64, bool, f64, f64)> = (0..2 * trials)
        .map(|i| {
            let u = random_unit(&mut rng, n);
            let half = i >= trials;
            let d = rng.random::<f64>() * if half { 0.5 } else { 1.0 };
            let q: Vec<f64> = u.iter().map(|x| x * d).collect();
            (d, half, f(&q), f(&u))
        })
        .collect();
    let a_bar = draws.iter().map(|s| s.3).fold(f64::NEG_INFINITY, f64::max) / (2.0 * PI);
    let b = -f(&vec![0.0; n]) / (2.0 * PI);
    let tol = 1e-9 * (1.0 + a_bar.abs() + b.abs());
    draws
        .iter()
        .map(|&(d, half, value, _)| {
            if half {
                PI * (a_bar - b) - value + tol
            } else {
                -b + (a_bar + b) * d - value / (2.0 * PI) + tol
            }
        })
        .collect()
}

/// For `trials` random Γ-averaged quadratics on `V*`, the sampled argmin lies
/// within `1e-4` of the origin and the chord bound holds with Euclidean
/// distance. Requires the group to fix only the origin.
pub fn invariant_min_on_dual(group: &PolytopeSymmetry, trials: usize, seed: u64) -> Result<CheckReport> {
    let fixed = fixed_points(group);
    if !fixed.unique {
        return Err(LabError::Precondition(format!(
            "fixed point is not unique: fixed subspace has dimension {}",
            fixed.dimension
        )));
    }
    let n = group.dimension();
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let q = random_symmetric_quadratic(&mut trial_rng(seed, i as u64), group);
            let f = |x: &[f64]| q.value(x);
            let argmin = sampled_argmin_dual(&f, n, 256, seed ^ (i as u64) << 20);
            let chord = euclidean_chord_margins(&f, n, 200, seed.wrapping_add(i as u64));
            (norm(&argmin), chord.into_iter().fold(f64::INFINITY, f64::min))
        })
        .collect();
    let max_argmin = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let margins = results.iter().map(|&(d, chord)| (ARGMIN_TOL - d).min(chord));
    Ok(CheckReport::from_margins("invariant_min_on_dual", ARGMIN_TOL, margins).with_detail("max_argmin_norm", max_argmin))
}

#[cfg(test)]
mod tests {
    use super::super::{asymmetric_triangle, hexagon, square, square_reflection_subgroup, symmetry_group};
    use super::*;

    #[test]
    fn lse_examples() {
        let h = hexagon();
        let f = LsePotential::new(&h);
        assert!((f.value(&[0.0, 0.0]) - 7f64.ln()).abs() < 1e-15);
        assert_eq!(f.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        let group = symmetry_group(&h).unwrap();
        let mut rng = trial_rng(1, 0);
        for _ in 0..200 {
            let x = random_in_ball(&mut rng, 2, 10.0);
            for g in group.elements() {
                let gx: Vec<f64> = transpose(g).iter().map(|row| dot_f(row, &x)).collect();
                assert!((f.value(&gx) - f.value(&x)).abs() < 1e-12);
            }
        }
        let argmin = sampled_argmin_dual(&|x: &[f64]| f.value(x), 2, 256, 3);
        assert!(norm(&argmin) < 1e-4);
    }

    #[test]
    fn lse_is_convex_on_segments() {
        for p in [hexagon(), square(), asymmetric_triangle()] {
            let f = LsePotential::new(&p);
            let mut rng = trial_rng(2, 0);
            for _ in 0..1000 {
                let a = random_in_ball(&mut rng, 2, 10.0);
                let b = random_in_ball(&mut rng, 2, 10.0);
                let at = |t: f64| f.value(&a.iter().zip(&b).map(|(a, b)| a + t * (b - a)).collect::<Vec<_>>());
                for k in 1..=5 {
                    let t = k as f64 / 6.0;
                    let second = at(t + 1e-3) - 2.0 * at(t) + at(t - 1e-3);
                    assert!(second >= -1e-8, "{second}");
                }
            }
        }
    }

    #[test]
    fn gradient_image_examples() {
        let report = gradient_image_check(&hexagon(), 10_000, 10.0, 4);
        assert!(report.pass, "{report:?}");
        assert_eq!(report.details["inside_fraction"], serde_json::json!(1.0));
        let approach = vertex_approach(&hexagon(), 50.0);
        assert_eq!(approach.len(), 6);
        assert!(approach.iter().all(|a| a.1 < 1e-3));
        assert!(gradient_image_check(&asymmetric_triangle(), 2000, 10.0, 5).pass);
    }

    #[test]
    fn invariant_minimum_examples() {
        let hex = symmetry_group(&hexagon()).unwrap();
        let report = invariant_min_on_dual(&hex, 20, 6).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(matches!(
            invariant_min_on_dual(&square_reflection_subgroup(), 5, 7),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn chord_margins_fail_for_concave_control() {
        let f = |x: &[f64]| {
            let d = norm(x);
            2.0 * d - d * d
        };
        assert!(euclidean_chord_margins(&f, 2, 200, 1).iter().any(|&m| m < 0.0));
    }
}
