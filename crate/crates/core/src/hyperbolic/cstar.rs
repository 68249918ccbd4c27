//! The `U(1) ⊂ C*` model: a radial function `F(z) = h(log|z|)` is
//! subharmonic exactly where `h` is convex, since `ΔF = h''(log r) / r²`.

use std::f64::consts::E;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::report::CheckReport;

pub const MIN_RESOLUTION: usize = 32;
const H_STEP: f64 = 1e-3;
const H_FLOOR: f64 = 1e-6;

/// A named profile `h` on `[-1, 1]`.
#[derive(Clone)]
pub struct CStarFunction {
    pub name: &'static str,
    pub h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Whether `h'' ≥ 0` on the whole interval.
    pub convex: bool,
}

impl std::fmt::Debug for CStarFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CStarFunction({})", self.name)
    }
}

fn profile(name: &'static str, convex: bool, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> CStarFunction {
    CStarFunction {
        name,
        h: Arc::new(h),
        convex,
    }
}

/// Twenty profiles: convex ones, concave ones, and several whose second
/// derivative changes sign.
pub fn cstar_test_functions() -> Vec<CStarFunction> {
    vec![
        profile("t^2", true, |t| t * t),
        profile("-t^2", false, |t| -t * t),
        profile("log(1+e^2t)", true, |t| (2.0 * t).exp().ln_1p()),
        profile("-log(1+e^2t)", false, |t| -(2.0 * t).exp().ln_1p()),
        profile("e^t", true, f64::exp),
        profile("e^-2t", true, |t| (-2.0 * t).exp()),
        profile("cosh 2t", true, |t| (2.0 * t).cosh()),
        profile("-cosh t", false, |t| -t.cosh()),
        profile("t^4+t^2", true, |t| t.powi(4) + t * t),
        profile("t^3", false, |t| t.powi(3)),
        profile("sin 2t", false, |t| (2.0 * t).sin()),
        profile("t^2+sin(3t)/10", true, |t| t * t + (3.0 * t).sin() / 10.0),
        profile("sqrt(1+t^2)", true, |t| (1.0 + t * t).sqrt()),
        profile("log cosh 3t", true, |t| (3.0 * t).cosh().ln()),
        profile("(t-0.3)^2", true, |t| (t - 0.3).powi(2)),
        profile("-(t+0.2)^4-t^2", false, |t| -(t + 0.2).powi(4) - t * t),
        profile("e^t-3t^2", false, |t| t.exp() - 3.0 * t * t),
        profile("cos t", false, f64::cos),
        profile("t e^t", true, |t| t * t.exp()),
        profile("atan 2t", false, |t| (2.0 * t).atan()),
    ]
}

#[derive(Debug, Serialize)]
struct GridPass {
    decided: usize,
    undecided: usize,
    disagreements: usize,
    worst_margin: f64,
    relation_error: f64,
}

fn second_derivative(h: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    (h(t + H_STEP) - 2.0 * h(t) + h(t - H_STEP)) / (H_STEP * H_STEP)
}

fn grid_pass(h: &dyn Fn(f64) -> f64, m: usize) -> GridPass {
    let step = 2.0 * E / (m - 1) as f64;
    let f = |x: f64, y: f64| h(0.5 * (x * x + y * y).ln());
    let lap = |x: f64, y: f64, s: f64| (f(x + s, y) + f(x - s, y) + f(x, y + s) + f(x, y - s) - 4.0 * f(x, y)) / (s * s);
    let mut pass = GridPass {
        decided: 0,
        undecided: 0,
        disagreements: 0,
        worst_margin: f64::INFINITY,
        relation_error: 0.0,
    };
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (-E + i as f64 * step, -E + j as f64 * step);
            let r = x.hypot(y);
            if !(1.0 / E..=E).contains(&r) {
                continue;
            }
            let fine = lap(x, y, step);
            let coarse = lap(x, y, 2.0 * step);
            let hpp = second_derivative(h, r.ln());
            pass.relation_error = pass.relation_error.max((fine - hpp / (r * r)).abs());
            if fine.abs() <= (fine - coarse).abs() || hpp.abs() <= H_FLOOR {
                pass.undecided += 1;
                continue;
            }
            pass.decided += 1;
            let margin = fine * hpp.signum();
            if margin <= 0.0 {
                pass.disagreements += 1;
            }
            pass.worst_margin = pass.worst_margin.min(margin);
        }
    }
    pass
}

/// Compares the sign of the five-point Laplacian of `F(z) = h(log|z|)` with
/// the sign of `h''` on the grid nodes of `[-e, e]²` with `e⁻¹ ≤ |z| ≤ e`.
///
/// A node is decided when the Laplacian exceeds its own Richardson error
/// estimate (the change from doubling the stencil) and `|h''| > 1e-6`;
/// agreement is measured over decided nodes. The relation
/// `ΔF = h''(log r)/r²` is also checked for second-order convergence by
/// repeating on a grid of twice the resolution.
pub fn cstar_psh_check(f: &CStarFunction, resolution: usize) -> Result<CheckReport> {
    if resolution < MIN_RESOLUTION {
        return Err(LabError::GridTooCoarse {
            got: resolution,
            min: MIN_RESOLUTION,
        });
    }
    let coarse = grid_pass(&*f.h, resolution);
    let fine = grid_pass(&*f.h, 2 * resolution - 1);
    let ratio = coarse.relation_error / fine.relation_error.max(f64::MIN_POSITIVE);
    let second_order = coarse.relation_error < 1e-8 || ratio > 3.0;
    let mut report = CheckReport::new(format!("cstar_psh:{}", f.name), H_FLOOR);
    report.trials = coarse.decided;
    report.failures = coarse.disagreements;
    report.worst_margin = coarse.worst_margin;
    report.pass = coarse.disagreements == 0 && coarse.decided > 0;
    let agreement = coarse.decided.saturating_sub(coarse.disagreements) as f64 / coarse.decided.max(1) as f64;
    let mut report = report
        .with_detail("agreement", agreement)
        .with_detail("undecided", coarse.undecided)
        .with_detail("relation_error", coarse.relation_error)
        .with_detail("relation_error_refined", fine.relation_error)
        .with_detail("refinement_ratio", ratio)
        .with_detail("convex", f.convex);
    if !second_order {
        report.fail("Laplacian relation not second-order accurate");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &str) -> CStarFunction {
        cstar_test_functions().into_iter().find(|f| f.name == name).unwrap()
    }

    #[test]
    fn convex_and_concave_examples() {
        for name in ["t^2", "-t^2", "log(1+e^2t)"] {
            let report = cstar_psh_check(&named(name), 128).unwrap();
            assert!(report.pass, "{report:?}");
            assert_eq!(report.details["agreement"], serde_json::json!(1.0));
            assert_eq!(report.details["undecided"], serde_json::json!(0));
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            cstar_psh_check(&named("t^2"), 16),
            Err(LabError::GridTooCoarse { got: 16, min: 32 })
        ));
    }

    #[test]
    fn twenty_profiles_agree() {
        let all = cstar_test_functions();
        assert_eq!(all.len(), 20);
        assert!(all.iter().any(|f| !f.convex));
        for f in &all {
            let report = cstar_psh_check(f, 128).unwrap();
            assert!(report.pass, "{report:?}");
        }
    }
}
