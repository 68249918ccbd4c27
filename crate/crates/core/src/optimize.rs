//! Derivative-free local minimization used to refine sampled minima.

use argmin::core::{CostFunction, Error, Executor, State};
use argmin::solver::neldermead::NelderMead;

use crate::error::{LabError, Result};

struct Cost<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Cost<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, Error> {
        Ok((self.0)(p))
    }
}

/// Nelder–Mead from `start` with an axis-aligned initial simplex of size `step`.
/// Returns the best point and its value.
pub fn minimize<F>(f: F, start: &[f64], step: f64, max_iters: u64) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let run = || -> std::result::Result<_, Error> {
        let solver = NelderMead::new(simplex).with_sd_tolerance(1e-15)?;
        let res = Executor::new(Cost(f), solver)
            .configure(|s| s.max_iters(max_iters))
            .run()?;
        let state = res.state();
        let best = state.get_best_param().cloned().unwrap_or_default();
        Ok((best, state.get_best_cost()))
    };
    run().map_err(|e| LabError::Precondition(format!("minimizer failed: {e}")))
}
