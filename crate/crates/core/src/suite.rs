//! The twelve acceptance checks, run in order under one seed.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cusp::{cusp_certificate, cusp_normal_form_check, slice_from_curve, SLICE_VARS};
use crate::error::{LabError, Result};
use crate::forms::{
    commutator_subgroup, equivariance_check, icosahedral_form, icosahedral_group,
    icosahedral_vertex_roots, stabilizer_probe, BinaryForm, ICOSAHEDRAL_ORDER,
};
use crate::green::{lower_bound_trials, reconstruction_error, smooth_noise, GreenKernel};
use crate::hyperbolic::{
    chord_bound_check, convexity_check, cstar_psh_check, cstar_test_functions, fixed_point_uniqueness,
    invariant_min_check, random_convex_generator, symmetrize,
};
use crate::lct::{
    estimate_threshold, lct_report, monomial_integral, partial_sums, pointwise_scaling_error,
    predicted_threshold, MonomialIntegral, QuasiHomogSpec, Region, Verdict,
};
use crate::series::BivariateSeries;
use crate::toric::{
    fixed_points, gradient_image_check, hexagon, invariant_min_on_dual, square_reflection_subgroup,
    symmetry_group, symmetry_report, vertex_approach,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Named tolerances that may be overridden; every value must be positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Tolerances {
    values: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let values = [
            ("threshold", 0.02),
            ("threshold_seconds", 60.0),
            ("ratio_sigmas", 3.0),
            ("pointwise", 1e-12),
            ("disc_relative", 0.01),
            ("equivariance", 1e-9),
            ("invariance", 1e-10),
            ("convexity", 1e-6),
            ("reconstruction", 1e-8),
            ("vertex_approach", 1e-3),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { values }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.values.contains_key(name) {
            return Err(LabError::Precondition(format!("unknown tolerance `{name}`")));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(LabError::Precondition(format!("tolerance `{name}` must be positive, got {value}")));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }
}

/// The outcome of one acceptance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub claim: &'static str,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
    /// Wall-clock time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

/// Names and claims of the twelve criteria, in order.
pub const CRITERIA: [(&str, &str); 12] = [
    ("threshold", "the invariant exponent is 5/6"),
    ("scaling", "I_{r+1} = 2^{12β−10} I_r"),
    ("partial_sums", "Σ I_r is finite iff β < 5/6"),
    ("monomial", "|z₁⋯z_p|^{−2β} is locally integrable iff β < 1"),
    ("cusp", "the slice curve is z₁² = z₂³ with weights 2, 3"),
    ("equivariance", "the map to degree-12 forms is equivariant"),
    ("icosahedral", "Γ fixes the degree-12 form and is perfect"),
    ("fixed_point_min", "invariant convex functions are minimized at P₀"),
    ("chord", "f/2π ≤ −b + (ā + b) dist(Q, P₀)"),
    ("cstar", "h(log|z|) is subharmonic iff h is convex"),
    ("green", "∫φ dμ₀ ≥ −M for Δφ ≥ −c, max φ = 0"),
    ("toric", "the hexagon group has a single fixed point and ∇f maps onto P"),
];

fn result(id: u8, pass: bool, summary: String, details: Value) -> CriterionResult {
    let (name, claim) = CRITERIA[id as usize - 1];
    CriterionResult {
        id,
        name,
        claim,
        pass,
        summary,
        details,
        seconds: 0.0,
    }
}

/// Runs criterion `id` (1 to 12). Errors inside a check become a failed result.
pub fn run_criterion(id: u8, seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let start = Instant::now();
    let outcome = match id {
        1 => threshold(seed, tol),
        2 => scaling(seed, tol),
        3 => convergence(seed),
        4 => monomial(seed, tol),
        5 => cusp(),
        6 => Ok(equivariance(seed, tol)),
        7 => Ok(icosahedral(seed, tol)),
        8 => Ok(fixed_point_min(50, seed, tol)),
        9 => Ok(chord(50, 1000, seed, tol)),
        10 => cstar(128),
        11 => green(128, 6.0, 100, seed, tol),
        12 => toric(seed, tol),
        _ => return Err(LabError::Precondition(format!("no criterion {id}"))),
    };
    let mut res = outcome.unwrap_or_else(|e| result(id, false, format!("error: {e}"), json!({ "error": e.to_string() })));
    res.seconds = start.elapsed().as_secs_f64();
    if id == 1 && res.seconds >= tol.get("threshold_seconds") {
        res.pass = false;
        res.summary = format!("{} (took {:.1} s)", res.summary, res.seconds);
    }
    Ok(res)
}

/// All twelve criteria in order.
pub fn run_all(seed: u64, tol: &Tolerances) -> Vec<CriterionResult> {
    (1..=12)
        .map(|id| run_criterion(id, seed, tol).expect("ids 1..=12 exist"))
        .collect()
}

fn threshold(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let spec = QuasiHomogSpec::cusp23();
    let predicted = predicted_threshold(&spec);
    let est = estimate_threshold(&spec, 0.005, 1_000_000, seed, Region::Product)?;
    let target = 5.0 / 6.0;
    let error = (est.beta_hat - target).abs();
    let pass = predicted == Ratio::new(5, 6) && error <= tol.get("threshold");
    Ok(result(
        1,
        pass,
        format!("predicted {predicted}, estimated {:.4} (|error| {error:.4})", est.beta_hat),
        json!({ "predicted": predicted.to_string(), "estimate": est, "error": error }),
    ))
}

fn scaling(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let spec = QuasiHomogSpec::cusp23();
    let sigmas = tol.get("ratio_sigmas");
    let mut rows = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut undefined = false;
    for beta in [0.0, 0.4, 0.8] {
        let sums = partial_sums(&spec, beta, 4, 1_000_000, seed, Region::Product)?;
        let report = lct_report(&spec, &sums, None);
        for (r, (q, se)) in sums.ratios.iter().zip(&sums.ratio_stderr).enumerate() {
            let z = (q - report.ratio_expected) / se;
            undefined |= !z.is_finite();
            worst_z = worst_z.max(z.abs());
            rows.push(json!({ "beta": beta, "r": r, "ratio": q, "stderr": se, "expected": report.ratio_expected, "z": z }));
        }
    }
    let mut pointwise: f64 = spec.quasi_homogeneity_error(10_000, seed);
    for beta in [0.0, 0.4, 0.8, 5.0 / 6.0] {
        pointwise = pointwise.max(pointwise_scaling_error(&spec, beta, 10_000, seed));
    }
    let pass = !undefined && worst_z <= sigmas && pointwise <= tol.get("pointwise");
    Ok(result(
        2,
        pass,
        format!("max |z| {worst_z:.2} over 9 ratios, pointwise error {pointwise:.1e}"),
        json!({ "ratios": rows, "max_abs_z": worst_z, "pointwise_error": pointwise }),
    ))
}

fn convergence(seed: u64) -> Result<CriterionResult> {
    let spec = QuasiHomogSpec::cusp23();
    let below = partial_sums(&spec, 0.5, 4, 200_000, seed, Region::Product)?;
    let above = partial_sums(&spec, 0.9, 6, 200_000, seed, Region::Product)?;
    let converged = matches!(below.verdict, Verdict::Converged { .. });
    let min_ratio = above.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let divergent = above.verdict.is_divergent() && min_ratio > 1.0;
    Ok(result(
        3,
        converged && divergent,
        format!("β = 0.5 converged: {converged}; β = 0.9 divergence evidence with min ratio {min_ratio:.3}"),
        json!({ "below": below.verdict, "above": above.verdict, "above_ratios": above.ratios }),
    ))
}

fn monomial(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let finite = monomial_integral(1, 1, 0.9)?.is_finite() && monomial_integral(2, 2, 0.9)?.is_finite();
    let divergent = monomial_integral(1, 1, 1.0)? == MonomialIntegral::Divergent
        && monomial_integral(2, 2, 1.0)? == MonomialIntegral::Divergent;
    let spec = QuasiHomogSpec::monomial(1)?;
    let sums = partial_sums(&spec, 0.5, 12, 200_000, seed, Region::Shell)?;
    let total = match sums.verdict {
        Verdict::Converged { total, .. } => total,
        _ => f64::NAN,
    };
    let closed = match monomial_integral(1, 1, 0.5)? {
        MonomialIntegral::Finite(v) => v,
        MonomialIntegral::Divergent => f64::NAN,
    };
    let rel = (total - TAU).abs() / TAU;
    let closed_rel = (closed - TAU).abs() / TAU;
    let pass = finite && divergent && rel <= tol.get("disc_relative") && closed_rel < 1e-14;
    Ok(result(
        4,
        pass,
        format!("finite at 0.9: {finite}, divergent at 1: {divergent}; disc integral {total:.4} vs 2π (rel {rel:.1e})"),
        json!({ "disc_estimate": total, "disc_closed_form": closed, "relative_error": rel }),
    ))
}

fn cusp() -> Result<CriterionResult> {
    let cert = cusp_certificate(6)?;
    let leads_ok = cert.lead2 == "-66" && cert.lead3 == "-440";
    let t = BivariateSeries::variable(1, SLICE_VARS, 6);
    let smooth = cusp_normal_form_check(&slice_from_curve(t.clone(), t.pow(2))?)?;
    let tacnode = cusp_normal_form_check(&slice_from_curve(t.pow(2), t.pow(4))?)?;
    let pass = cert.pass && cert.orders == [2, 3] && leads_ok && !smooth.pass && !tacnode.pass;
    Ok(result(
        5,
        pass,
        format!(
            "orders {:?}, leads ({}, {}); controls smooth {:?} and tacnode {:?} rejected: {}",
            cert.orders,
            cert.lead2,
            cert.lead3,
            smooth.orders,
            tacnode.orders,
            !smooth.pass && !tacnode.pass
        ),
        json!({ "certificate": cert, "smooth_control": smooth, "tacnode_control": tacnode }),
    ))
}

fn equivariance(seed: u64, tol: &Tolerances) -> CriterionResult {
    let report = equivariance_check(100, tol.get("equivariance"), seed);
    result(
        6,
        report.pass,
        format!(
            "{}/{} draws within {:.0e}, max error {:.1e}",
            report.passed(),
            report.trials,
            report.tolerance,
            report.details["max_error"].as_f64().unwrap_or(0.0)
        ),
        json!(report),
    )
}

fn icosahedral(seed: u64, tol: &Tolerances) -> CriterionResult {
    let group = icosahedral_group();
    let form = icosahedral_form();
    let stab = stabilizer_probe(&form, 20, seed);
    let closed = BinaryForm::from_roots(&icosahedral_vertex_roots());
    let roots_distance = closed.projective_distance(&form);
    let commutators = commutator_subgroup(&group).len();
    let pass = group.len() == ICOSAHEDRAL_ORDER
        && stab.group_fixed == ICOSAHEDRAL_ORDER
        && stab.group_worst_error < tol.get("invariance")
        && roots_distance < tol.get("invariance")
        && commutators == ICOSAHEDRAL_ORDER
        && stab.pass;
    result(
        7,
        pass,
        format!(
            "order {}, {}/60 fix the form (worst {:.1e}), commutators generate {commutators}",
            group.len(),
            stab.group_fixed,
            stab.group_worst_error
        ),
        json!({ "stabilizer": stab, "closed_form_root_distance": roots_distance, "commutator_subgroup_order": commutators }),
    )
}

/// Symmetrized convex generators shared by the minimum and chord checks.
fn convex_functions(count: usize, seed: u64) -> Vec<crate::hyperbolic::InvariantFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| symmetrize(&random_convex_generator(&mut rng))).collect()
}

/// `count` symmetrized convex functions are convex and minimized at `P₀`, and
/// no other point is fixed by Γ.
pub fn fixed_point_min(count: usize, seed: u64, tol: &Tolerances) -> CriterionResult {
    let functions = convex_functions(count, seed);
    let mut minimized = 0;
    let mut convex = 0;
    let mut worst_distance: f64 = 0.0;
    for (i, f) in functions.iter().enumerate() {
        let s = seed.wrapping_add(i as u64);
        let min = invariant_min_check(f, 200, s);
        if let Some(d) = min.details.get("argmin_distance").and_then(Value::as_f64) {
            worst_distance = worst_distance.max(d);
        }
        minimized += usize::from(min.pass);
        convex += usize::from(convexity_check(f, 20, 16, tol.get("convexity"), s).pass);
    }
    let unique = fixed_point_uniqueness(1000, seed);
    let pass = minimized == count && convex == count && unique.pass;
    result(
        8,
        pass,
        format!(
            "{minimized}/{count} minimized at P₀ (worst argmin distance {worst_distance:.1e}), {convex}/{count} convex, uniqueness {}/{}",
            unique.passed(),
            unique.trials
        ),
        json!({ "minimized": minimized, "convex": convex, "worst_argmin_distance": worst_distance, "uniqueness": unique }),
    )
}

/// The chord bound at `points` points for each of `count` convex functions.
pub fn chord(count: usize, points: usize, seed: u64, tol: &Tolerances) -> CriterionResult {
    let functions = convex_functions(count, seed);
    let mut tested = 0;
    let mut held = 0;
    let mut worst: f64 = f64::INFINITY;
    for (i, f) in functions.iter().enumerate() {
        let s = seed.wrapping_add(i as u64);
        if !convexity_check(f, 20, 16, tol.get("convexity"), s).pass {
            continue;
        }
        tested += 1;
        let report = chord_bound_check(f, points, s);
        worst = worst.min(report.worst_margin);
        held += usize::from(report.pass);
    }
    let pass = tested == count && held == tested;
    result(
        9,
        pass,
        format!("chord and half-ball bounds hold for {held}/{tested} functions at {points} points each"),
        json!({ "tested": tested, "held": held, "worst_margin": worst }),
    )
}

/// Sign agreement of the grid Laplacian with `h''` for the twenty profiles.
pub fn cstar(resolution: usize) -> Result<CriterionResult> {
    let functions = cstar_test_functions();
    let mut agreeing = 0;
    let mut reports = Vec::new();
    for f in &functions {
        let report = cstar_psh_check(f, resolution)?;
        agreeing += usize::from(report.pass);
        reports.push(json!({ "name": f.name, "convex": f.convex, "pass": report.pass, "agreement": report.details["agreement"] }));
    }
    let controls = functions.iter().filter(|f| !f.convex).count();
    let pass = agreeing == functions.len() && controls > 0 && functions.len() == 20;
    Ok(result(
        10,
        pass,
        format!("{agreeing}/{} profiles agree in sign at resolution {resolution} ({controls} non-convex)", functions.len()),
        json!(reports),
    ))
}

/// The lower bound and its chain on `trials` admissible fields, and kernel
/// reconstruction of band-limited fields.
pub fn green(m: usize, c: f64, trials: usize, seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let count = trials;
    let trials = lower_bound_trials(m, c, count, seed)?;
    let kernel = GreenKernel::new(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recon: f64 = 0.0;
    for _ in 0..5 {
        let f = smooth_noise(&mut rng, m, 0.0, 8.0);
        recon = recon.max(reconstruction_error(&f, &kernel, 64, seed));
    }
    let pass = trials.pass && trials.passed() == count && recon < tol.get("reconstruction");
    Ok(result(
        11,
        pass,
        format!(
            "bound and chain hold for {}/{count} fields (M = {:.3}); reconstruction error {recon:.1e}",
            trials.passed(),
            trials.details["M"].as_f64().unwrap_or(f64::NAN)
        ),
        json!({ "trials": trials, "reconstruction_error": recon }),
    ))
}

fn toric(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let p = hexagon();
    let group = symmetry_group(&p)?;
    let report = symmetry_report(&group);
    let image = gradient_image_check(&p, 1000, 10.0, seed);
    let approach = vertex_approach(&p, 50.0);
    let vertex_error = approach.iter().map(|a| a.1).fold(0.0, f64::max);
    let dual_min = invariant_min_on_dual(&group, 20, seed)?;
    let control = fixed_points(&square_reflection_subgroup());
    let inside = image.details["inside_fraction"].as_f64().unwrap_or(0.0);
    let pass = report.order == 12
        && report.fixed_point_unique
        && report.fixed_point == Some(vec![0, 0])
        && image.pass
        && inside == 1.0
        && vertex_error <= tol.get("vertex_approach")
        && dual_min.pass
        && !control.unique;
    Ok(result(
        12,
        pass,
        format!(
            "order {}, unique fixed point {}, gradients inside {:.0}%, vertex error {vertex_error:.1e}, reflection control fixed dimension {}",
            report.order,
            report.fixed_point_unique,
            100.0 * inside,
            control.dimension
        ),
        json!({ "symmetry": report, "gradient_image": image, "dual_minimum": dual_min, "reflection_control": control }),
    ))
}

/// A plain-text table of the results.
pub fn summary_table(results: &[CriterionResult], with_times: bool) -> String {
    let mut out = String::new();
    for r in results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        let time = if with_times { format!(" [{:.1}s]", r.seconds) } else { String::new() };
        out.push_str(&format!("{:>2} {status} {:<16} {}: {}{time}\n", r.id, r.name, r.claim, r.summary));
    }
    out
}
