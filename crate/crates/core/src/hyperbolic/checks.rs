//! Invariant functions on hyperbolic 3-space and the checks run against them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{random_direction, HPoint};
use crate::forms::group::random_sl2;
use crate::forms::{icosahedral_group, GroupElement};
use crate::optimize::minimize;
use crate::report::CheckReport;
use crate::trial_rng;

/// Finite-difference step as a fraction of the segment length.
pub const CONVEXITY_REL_STEP: f64 = 1e-3;
const SEGMENT_RADIUS: f64 = 3.0;
const MIN_RADIUS: f64 = 5.0;
const ARGMIN_TOL: f64 = 1e-4;
const INVARIANCE_TOL: f64 = 1e-10;
const MOVE_TOL: f64 = 1e-6;

pub(super) fn gamma() -> &'static [GroupElement<Complex64>] {
    static GAMMA: OnceLock<Vec<GroupElement<Complex64>>> = OnceLock::new();
    GAMMA.get_or_init(icosahedral_group)
}

type Evaluator = Arc<dyn Fn(&HPoint) -> f64 + Send + Sync>;

/// A real function on hyperbolic space, tagged when it is a Γ-average.
#[derive(Clone)]
pub struct InvariantFunction {
    name: String,
    eval: Evaluator,
    symmetrized: bool,
}

impl fmt::Debug for InvariantFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantFunction")
            .field("name", &self.name)
            .field("symmetrized", &self.symmetrized)
            .finish()
    }
}

impl InvariantFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(&HPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(f),
            symmetrized: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn eval(&self, p: &HPoint) -> f64 {
        (self.eval)(p)
    }

    /// `max |f(γP) − f(P)|` over Γ and `samples` random points of radius ≤ 3,
    /// relative to `1 + |f(P)|`.
    pub fn invariance_defect(&self, samples: usize, seed: u64) -> f64 {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let p = HPoint::random(&mut trial_rng(seed, i as u64), SEGMENT_RADIUS);
                let fp = self.eval(&p);
                gamma()
                    .iter()
                    .map(|g| (self.eval(&p.act(g)) - fp).abs() / (1.0 + fp.abs()))
                    .fold(0.0, f64::max)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// The Γ-average `P ↦ (1/60) Σ f(γP)`.
pub fn symmetrize(f: &InvariantFunction) -> InvariantFunction {
    let inner = f.eval.clone();
    InvariantFunction {
        name: format!("sym({})", f.name),
        eval: Arc::new(move |p| gamma().iter().map(|g| inner(&p.act(g))).sum::<f64>() / gamma().len() as f64),
        symmetrized: true,
    }
}

/// `w₁ dist(P, Q)² + w₂ log tr(gPg*)` with random `Q`, `g` and weights.
/// Both terms are convex along geodesics and the first is strictly convex.
pub fn random_convex_generator<R: Rng>(rng: &mut R) -> InvariantFunction {
    let q = HPoint::random(rng, 2.0);
    let g = random_sl2(rng);
    let w1 = 0.5 + 1.5 * rng.random::<f64>();
    let w2 = rng.random::<f64>();
    InvariantFunction::new("dist²+log tr", move |p| {
        w1 * p.distance(&q).powi(2) + w2 * p.act(&g).trace().ln()
    })
}

/// Centered second differences along random geodesic segments. A trial
/// fails if any difference falls below `-tol (1 + |f|)`.
pub fn convexity_check(f: &InvariantFunction, trials: usize, steps: usize, tol: f64, seed: u64) -> CheckReport {
    let per_trial: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let a = HPoint::random(&mut rng, SEGMENT_RADIUS);
            let len = 0.5 + (SEGMENT_RADIUS - 0.5) * rng.random::<f64>();
            let b = a.shoot(random_direction(&mut rng), len);
            let h = CONVEXITY_REL_STEP;
            let g = |t: f64| f.eval(&a.geodesic(&b, t));
            let mut worst_margin = f64::INFINITY;
            let mut min_second = f64::INFINITY;
            for k in 1..=steps {
                let t = k as f64 / (steps + 1) as f64;
                let mid = g(t);
                let second = (g(t + h) - 2.0 * mid + g(t - h)) / (h * len).powi(2);
                min_second = min_second.min(second);
                worst_margin = worst_margin.min(second + tol * (1.0 + mid.abs()));
            }
            (worst_margin, min_second)
        })
        .collect();
    let min_second = per_trial.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    CheckReport::from_margins(format!("convexity:{}", f.name), tol, per_trial.iter().map(|x| x.0))
        .with_detail("min_second_difference", min_second)
}

/// Best of `samples` random points in the ball of `radius`, refined by a
/// local simplex search in exponential coordinates.
pub fn sampled_argmin(f: &InvariantFunction, samples: usize, radius: f64, seed: u64) -> (HPoint, f64) {
    let candidates: Vec<(HPoint, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = HPoint::random(&mut trial_rng(seed, i as u64), radius);
            (p, f.eval(&p))
        })
        .collect();
    let (start, best) = candidates
        .into_iter()
        .fold((HPoint::base(), f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    match minimize(|x| f.eval(&HPoint::from_coords([x[0], x[1], x[2]])), &start.coords(), 0.25, 4000) {
        Ok((x, fx)) if fx <= best => (HPoint::from_coords([x[0], x[1], x[2]]), fx),
        _ => (start, best),
    }
}

/// Checks that a Γ-invariant function is minimized at `P₀`.
///
/// The trials sample points of radius up to 5 and require
/// `f(Q) ≥ f(P₀) − 1e-9 (1 + |f(P₀)|)`. Unless the sampled values are
/// constant (the degenerate case), the refined argmin must also lie within
/// `1e-4` of `P₀`. A function that is not Γ-invariant fails the
/// precondition.
pub fn invariant_min_check(f: &InvariantFunction, trials: usize, seed: u64) -> CheckReport {
    let base = f.eval(&HPoint::base());
    let tol = 1e-9 * (1.0 + base.abs());
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| f.eval(&HPoint::random(&mut trial_rng(seed, i as u64), MIN_RADIUS)))
        .collect();
    let mut report = CheckReport::from_margins(format!("invariant_min:{}", f.name), tol, values.iter().map(|v| v - base + tol));
    let defect = f.invariance_defect(16, seed ^ 0x5eed);
    report = report.with_detail("invariance_defect", defect).with_detail("value_at_base", base);
    if defect > INVARIANCE_TOL {
        report.fail("invariance precondition violated");
    }
    let spread = values.iter().fold(0.0f64, |m, v| m.max((v - base).abs()));
    if spread <= tol {
        return report.with_detail("degenerate", true);
    }
    let (argmin, fmin) = sampled_argmin(f, trials.max(64), MIN_RADIUS, seed.wrapping_add(1));
    let dist = argmin.distance(&HPoint::base());
    report.record(ARGMIN_TOL - dist);
    report.record(fmin - base + tol);
    report
        .with_detail("degenerate", false)
        .with_detail("argmin_distance", dist)
        .with_detail("argmin_value", fmin)
}

/// The constants of the chord bound: `f(P₀) = −2πb` and `2πā` the maximum
/// of `f` over the sampled unit sphere about `P₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChordConstants {
    pub a_bar: f64,
    pub b: f64,
    /// `π(ā − b)`, the bound on the ball of radius 1/2.
    pub half_ball_bound: f64,
}

/// Verifies `f(Q)/2π ≤ −b + (ā + b) dist(Q, P₀)` at `trials` points of the
/// unit ball, and `f ≤ π(ā − b)` at `trials` points of the half-radius ball.
/// Each sampled point's radial endpoint on the unit sphere is among the
/// points defining `ā`.
pub fn chord_bound_check(f: &InvariantFunction, trials: usize, seed: u64) -> CheckReport {
    struct Sample {
        dist: f64,
        value: f64,
        endpoint: f64,
    }
    let draw = |offset: u64, max_dist: f64| -> Vec<Sample> {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, offset + i as u64);
                let dir = random_direction(&mut rng);
                let dist = max_dist * rng.random::<f64>();
                Sample {
                    dist,
                    value: f.eval(&HPoint::from_coords(dir.map(|x| x * dist))),
                    endpoint: f.eval(&HPoint::from_coords(dir)),
                }
            })
            .collect()
    };
    let full = draw(0, 1.0);
    let half = draw(1 << 32, 0.5);
    let sphere_max = full.iter().chain(&half).map(|s| s.endpoint).fold(f64::NEG_INFINITY, f64::max);
    let a_bar = sphere_max / (2.0 * PI);
    let b = -f.eval(&HPoint::base()) / (2.0 * PI);
    let constants = ChordConstants {
        a_bar,
        b,
        half_ball_bound: PI * (a_bar - b),
    };
    let tol = 1e-9;
    let scale = 1.0 + a_bar.abs() + b.abs();
    let chord = full.iter().map(|s| (-b + (a_bar + b) * s.dist) - s.value / (2.0 * PI) + tol * scale);
    let corollary = half.iter().map(|s| constants.half_ball_bound - s.value + tol * scale);
    CheckReport::from_margins(format!("chord:{}", f.name), tol, chord.chain(corollary)).with_detail("constants", constants)
}

/// Evidence that `P₀` is the only fixed point: at random points `P` with
/// `dist(P, P₀) ∈ [1e-3, 5]`, some γ moves `P` by more than `1e-6`.
pub fn fixed_point_uniqueness(trials: usize, seed: u64) -> CheckReport {
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let t = 1e-3 + (MIN_RADIUS - 1e-3) * rng.random::<f64>();
            let p = HPoint::from_coords(random_direction(&mut rng).map(|x| x * t));
            let moved = gamma().iter().map(|g| p.act(g).distance(&p)).fold(0.0, f64::max);
            moved - MOVE_TOL
        })
        .collect();
    CheckReport::from_margins("fixed_point_uniqueness", MOVE_TOL, margins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist_sq() -> InvariantFunction {
        InvariantFunction::new("dist²", |p| p.distance(&HPoint::base()).powi(2))
    }

    #[test]
    fn convexity_examples() {
        assert!(convexity_check(&dist_sq(), 100, 5, 1e-6, 1).pass);
        let concave = InvariantFunction::new("-dist", |p| -p.distance(&HPoint::base()));
        assert!(!convexity_check(&concave, 100, 5, 1e-6, 1).pass);
        let log_tr = InvariantFunction::new("log tr", |p| p.trace().ln());
        assert!(convexity_check(&log_tr, 1000, 3, 1e-6, 2).pass);
    }

    #[test]
    fn symmetrize_examples() {
        let invariant = dist_sq();
        let sym = symmetrize(&invariant);
        let mut rng = trial_rng(3, 0);
        for _ in 0..20 {
            let p = HPoint::random(&mut rng, 3.0);
            let v = invariant.eval(&p);
            assert!((sym.eval(&p) - v).abs() < 1e-12 * (1.0 + v));
            let twice = symmetrize(&sym);
            assert!((twice.eval(&p) - sym.eval(&p)).abs() < 1e-12 * (1.0 + v));
        }
        let q = HPoint::random(&mut rng, 2.0);
        let f = symmetrize(&InvariantFunction::new("dist² to Q", move |p| p.distance(&q).powi(2)));
        assert!(f.invariance_defect(8, 4) < 1e-10);
        let (argmin, _) = sampled_argmin(&f, 500, 5.0, 5);
        assert!(argmin.distance(&HPoint::base()) < 1e-4);
    }

    #[test]
    fn symmetrized_generators_minimize_at_base() {
        for i in 0..5 {
            let f = symmetrize(&random_convex_generator(&mut trial_rng(10, i)));
            assert!(convexity_check(&f, 20, 3, 1e-6, i).pass);
            let report = invariant_min_check(&f, 200, i);
            assert!(report.pass, "{report:?}");
        }
    }

    #[test]
    fn non_invariant_control_fails_precondition() {
        let q0 = HPoint::from_coords([0.8, 0.0, -0.3]);
        let f = InvariantFunction::new("dist² to Q₀", move |p| p.distance(&q0).powi(2));
        let report = invariant_min_check(&f, 200, 1);
        assert!(!report.pass);
        assert!(report.details["failure"].as_str().unwrap().contains("invariance"));
        let (argmin, _) = sampled_argmin(&f, 500, 5.0, 2);
        assert!(argmin.distance(&q0) < 1e-4);
    }

    #[test]
    fn constant_function_is_degenerate() {
        let f = symmetrize(&InvariantFunction::new("const", |_| 3.0));
        let report = invariant_min_check(&f, 100, 1);
        assert!(report.pass);
        assert_eq!(report.details["degenerate"], serde_json::json!(true));
    }

    #[test]
    fn chord_examples() {
        let f = symmetrize(&random_convex_generator(&mut trial_rng(11, 0)));
        assert!(chord_bound_check(&f, 300, 1).pass);
        let constant = InvariantFunction::new("const", |_| -2.0 * PI * 0.7);
        let report = chord_bound_check(&constant, 100, 2);
        assert!(report.pass);
        let concave = InvariantFunction::new("2d-d²", |p| {
            let d = p.distance(&HPoint::base());
            2.0 * d - d * d
        });
        assert!(!convexity_check(&concave, 50, 3, 1e-6, 3).pass);
        assert!(!chord_bound_check(&concave, 300, 3).pass);
    }

    #[test]
    fn uniqueness_evidence() {
        let report = fixed_point_uniqueness(200, 7);
        assert!(report.pass && report.worst_margin > 0.0);
    }
}
