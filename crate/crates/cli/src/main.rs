//! `alpha-lab`: each verification as a subcommand.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! errors and failed preconditions.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use alpha_lab::cusp::{cusp_certificate, DEFAULT_TRUNCATION};
use alpha_lab::forms::{
    commutator_subgroup, equivariance_check, icosahedral_form, icosahedral_group, stabilizer_probe,
    ICOSAHEDRAL_ORDER,
};
use alpha_lab::lct::{
    estimate_threshold, lct_report, monomial_dimensions, monomial_integral, partial_sums, QuasiHomogSpec,
    Region, Verdict,
};
use alpha_lab::suite::{self, run_all, summary_table};
use alpha_lab::toric::{
    fixed_points, gradient_image_check, hexagon, invariant_min_on_dual, symmetry_group, symmetry_report,
    LatticePolytope,
};
use alpha_lab::LabError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::RunConfig;
use output::{Outcome, Table};

#[derive(Parser, Debug)]
#[command(name = "alpha-lab", version, about = "Finite checks behind an α-invariant of 5/6")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "ALPHA_LAB_SEED", default_value_t = suite::DEFAULT_SEED)]
    seed: u64,
    /// Override a named tolerance, e.g. `--tolerance threshold=0.01`.
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Leave the generation time out of the report.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Emit CSV rows instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Annulus integrals, scaling ratios and the integrability threshold.
    Lct(LctArgs),
    /// Exact cusp certificate for the slice of the orbit closure.
    Cusp {
        /// Truncation order of the power series.
        #[arg(short = 'N', long = "truncation", default_value_t = DEFAULT_TRUNCATION)]
        n: u32,
    },
    /// Icosahedral invariance, perfectness, stabilizer and equivariance.
    Orbit {
        /// Random draws for the equivariance and stabilizer probes.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Invariant convex functions on hyperbolic space and the C* model.
    Hyperbolic {
        #[arg(long, default_value_t = 50)]
        functions: usize,
        /// Points per function for the chord bound.
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Grid resolution for the C* check.
        #[arg(long, default_value_t = 128)]
        resolution: usize,
    },
    /// Lower bound for potentials on the flat torus.
    Green {
        #[arg(long, default_value_t = 128)]
        resolution: usize,
        #[arg(long = "c", default_value_t = 6.0)]
        c: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Symmetry group, fixed points and gradient image of a lattice polytope.
    Toric {
        /// Polytope JSON (`{"dimension": n, "vertices": [[...], ...]}`); the
        /// hexagon when omitted.
        #[arg(long)]
        polytope: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Every acceptance criterion in order, with a summary table.
    Reproduce {
        /// Machine-readable summary instead of the table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct LctArgs {
    /// `cusp23`, `cusp25` or `monomial:p,n`.
    #[arg(long, default_value = "cusp23", conflicts_with = "weights")]
    preset: String,
    /// Comma-separated weights for `Σ zᵢ^{d/wᵢ}`; needs `--degree`.
    #[arg(long, value_delimiter = ',', requires = "degree")]
    weights: Option<Vec<u32>>,
    #[arg(long, requires = "weights")]
    degree: Option<u32>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Number of annuli.
    #[arg(short = 'R', long = "annuli", default_value_t = 4)]
    annuli: u32,
    /// Samples per annulus; 10⁶ when estimating the threshold, 2·10⁵ otherwise.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = RegionArg::Product)]
    region: RegionArg,
    /// Also bisect for the β where the annulus ratio crosses 1.
    #[arg(long)]
    estimate_threshold: bool,
    /// Divergence evidence is the expected outcome and counts as a pass.
    #[arg(long)]
    expect_divergent: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegionArg {
    Product,
    Shell,
}

impl From<RegionArg> for Region {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::Product => Region::Product,
            RegionArg::Shell => Region::Shell,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::from_args(
        cli.global.seed,
        &cli.global.tolerances,
        cli.global.output.clone(),
        cli.global.no_timestamp,
        cli.global.csv,
    )
    .and_then(|cfg| run(&cli.command, &cfg).and_then(|outcome| outcome.emit(&cfg).map(|()| outcome.pass)));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("alpha-lab: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: &Command, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    Ok(match command {
        Command::Lct(args) => cmd_lct(args, cfg)?,
        Command::Cusp { n } => cmd_cusp(*n)?,
        Command::Orbit { trials } => cmd_orbit(*trials, cfg),
        Command::Hyperbolic {
            functions,
            points,
            resolution,
        } => cmd_hyperbolic(*functions, *points, *resolution, cfg)?,
        Command::Green { resolution, c, trials } => cmd_green(*resolution, *c, *trials, cfg)?,
        Command::Toric { polytope, samples } => cmd_toric(polytope.as_deref(), *samples, cfg)?,
        Command::Reproduce { json } => cmd_reproduce(*json, cfg),
    })
}

fn cmd_lct(args: &LctArgs, cfg: &RunConfig) -> Result<Outcome, LabError> {
    let spec = match (&args.weights, args.degree) {
        (Some(w), Some(d)) => QuasiHomogSpec::sum_of_powers(w.clone(), d)?,
        _ => QuasiHomogSpec::preset(&args.preset)?,
    };
    let region = Region::from(args.region);
    let samples = args.samples.unwrap_or(if args.estimate_threshold { 1_000_000 } else { 200_000 });
    let sums = partial_sums(&spec, args.beta, args.annuli, samples, cfg.seed, region)?;
    let estimate = if args.estimate_threshold {
        Some(estimate_threshold(&spec, 0.005, samples, cfg.seed, region)?)
    } else {
        None
    };
    let report = lct_report(&spec, &sums, estimate.as_ref());

    let sigmas = cfg.tolerances.get("ratio_sigmas");
    let ratios_ok = report.max_ratio_z <= sigmas;
    let verdict_ok = match &report.verdict {
        Verdict::Converged { .. } => !args.expect_divergent,
        Verdict::DivergenceEvidence { .. } => args.expect_divergent,
        Verdict::Inconclusive { .. } => false,
    };
    let threshold_ok = report
        .threshold_estimated
        .is_none_or(|t| (t - report.threshold_predicted).abs() <= cfg.tolerances.get("threshold"));
    let closed_form = monomial_dimensions(&args.preset)
        .ok()
        .filter(|_| args.weights.is_none())
        .map(|(p, n)| monomial_integral(p, n, args.beta))
        .transpose()?;

    let mut table = Table::new(&["r", "mean", "stderr", "samples", "ratio_to_previous"]);
    for (i, row) in report.annuli.iter().enumerate() {
        let ratio = i.checked_sub(1).map(|j| sums.ratios[j].to_string()).unwrap_or_default();
        table.push(vec![row.r.to_string(), row.mean.to_string(), row.stderr.to_string(), row.samples.to_string(), ratio]);
    }
    Ok(Outcome::new(
        "lct",
        ratios_ok && verdict_ok && threshold_ok,
        json!({
            "report": report,
            "threshold_estimate": estimate,
            "closed_form": closed_form,
            "expect_divergent": args.expect_divergent,
            "checks": { "ratios_within_sigmas": ratios_ok, "verdict_as_expected": verdict_ok, "threshold_within_tolerance": threshold_ok },
        }),
        table,
    ))
}

fn cmd_cusp(n: u32) -> Result<Outcome, LabError> {
    let cert = cusp_certificate(n)?;
    let mut table = Table::new(&["order_x", "order_y", "lead_x", "lead_y", "residual_order", "truncation", "pass"]);
    table.push(vec![
        cert.orders[0].to_string(),
        cert.orders[1].to_string(),
        cert.lead2.clone(),
        cert.lead3.clone(),
        cert.residual_order.to_string(),
        cert.truncation.to_string(),
        cert.pass.to_string(),
    ]);
    Ok(Outcome::new("cusp", cert.pass, json!(cert), table))
}

fn cmd_orbit(trials: usize, cfg: &RunConfig) -> Outcome {
    let group = icosahedral_group();
    let commutators = commutator_subgroup(&group).len();
    let stabilizer = stabilizer_probe(&icosahedral_form(), trials, cfg.seed);
    let invariance_ok = stabilizer.group_worst_error < cfg.tolerances.get("invariance");
    let equivariance = equivariance_check(trials, cfg.tolerances.get("equivariance"), cfg.seed);
    let pass = group.len() == ICOSAHEDRAL_ORDER
        && commutators == ICOSAHEDRAL_ORDER
        && stabilizer.pass
        && invariance_ok
        && equivariance.pass;
    let mut table = Table::new(&["check", "trials", "failures", "worst", "pass"]);
    table.push(vec!["group_order".into(), "1".into(), u8::from(group.len() != 60).to_string(), group.len().to_string(), (group.len() == 60).to_string()]);
    table.push(vec![
        "invariance".into(),
        stabilizer.group_size.to_string(),
        (stabilizer.group_size - stabilizer.group_fixed).to_string(),
        stabilizer.group_worst_error.to_string(),
        invariance_ok.to_string(),
    ]);
    table.push(vec!["perfect".into(), "1".into(), u8::from(commutators != 60).to_string(), commutators.to_string(), (commutators == 60).to_string()]);
    table.push(vec![
        "stabilizer".into(),
        stabilizer.trials.to_string(),
        (stabilizer.trials - stabilizer.moved).to_string(),
        stabilizer.min_movement.to_string(),
        stabilizer.pass.to_string(),
    ]);
    table.push_report(&equivariance);
    Outcome::new(
        "orbit",
        pass,
        json!({
            "group_order": group.len(),
            "commutator_subgroup_order": commutators,
            "stabilizer": stabilizer,
            "equivariance": equivariance,
        }),
        table,
    )
}

fn cmd_hyperbolic(functions: usize, points: usize, resolution: usize, cfg: &RunConfig) -> Result<Outcome, LabError> {
    let minimum = suite::fixed_point_min(functions, cfg.seed, &cfg.tolerances);
    let chord = suite::chord(functions, points, cfg.seed, &cfg.tolerances);
    let cstar = suite::cstar(resolution)?;
    Ok(Outcome::from_criteria("hyperbolic", vec![minimum, chord, cstar]))
}

fn cmd_green(resolution: usize, c: f64, trials: usize, cfg: &RunConfig) -> Result<Outcome, LabError> {
    let result = suite::green(resolution, c, trials, cfg.seed, &cfg.tolerances)?;
    if let Some(e) = result.details.get("error") {
        return Err(LabError::Precondition(e.to_string()));
    }
    Ok(Outcome::from_criteria("green", vec![result]))
}

fn cmd_toric(path: Option<&std::path::Path>, samples: usize, cfg: &RunConfig) -> Result<Outcome, LabError> {
    let polytope = match path {
        Some(p) => LatticePolytope::load(p)?,
        None => hexagon(),
    };
    let group = symmetry_group(&polytope)?;
    let symmetry = symmetry_report(&group);
    let fixed = fixed_points(&group);
    let image = gradient_image_check(&polytope, samples, 10.0, cfg.seed);
    let dual_minimum = if fixed.unique {
        Some(invariant_min_on_dual(&group, 20, cfg.seed)?)
    } else {
        None
    };
    let pass = image.pass && dual_minimum.as_ref().is_none_or(|r| r.pass);
    let mut table = Table::new(&["check", "trials", "failures", "worst", "pass"]);
    table.push_report(&image);
    if let Some(r) = &dual_minimum {
        table.push_report(r);
    }
    Ok(Outcome::new(
        "toric",
        pass,
        json!({
            "polytope": polytope,
            "symmetry": symmetry,
            "fixed_subspace": fixed,
            "gradient_image": image,
            "dual_minimum": dual_minimum,
        }),
        table,
    ))
}

fn cmd_reproduce(json_output: bool, cfg: &RunConfig) -> Outcome {
    let results = run_all(cfg.seed, &cfg.tolerances);
    if let Some(first) = results.iter().find(|r| !r.pass) {
        eprintln!("alpha-lab: criterion {} ({}) failed: {}", first.id, first.name, first.summary);
    }
    let text = (!json_output && !cfg.csv).then(|| summary_table(&results, !cfg.no_timestamp));
    let mut outcome = Outcome::from_criteria("reproduce", results);
    outcome.text = text;
    outcome
}
