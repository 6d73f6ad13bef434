//! `nsbox`: box runs, identity/inequality verification, and regularity
//! monitoring from one binary.
//!
//! Exit codes: 0 success, 2 bad configuration or arguments, 3 runtime error
//! (I/O, malformed artifacts), 4 a verification gate did not hold.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use nsbox::field::{random_spectrum_field, Axis, TestFieldKind};
use nsbox::identities::{kukavica_ziane_unchecked, verify_all};
use nsbox::inequalities::{beta_from_r, estimate_constant, FamilySpec};
use nsbox::monitor::evaluate_criterion;
use nsbox::solver::{energy_report, run_simulation, RunParams, Trajectory};
use nsbox::{generate_test_field, GridSpec, VectorField};

use config::Config;
use output::{IdentityRow, OutDir};

/// How a command failed, mapped onto the process exit code.
pub enum Failure {
    /// Bad configuration or arguments (exit 2).
    Config(String),
    /// I/O problems, malformed artifacts, internal errors (exit 3).
    Runtime(String),
    /// A verification gate did not hold (exit 4).
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) | Failure::Verification(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "nsbox",
    version,
    about = "Pseudospectral Navier-Stokes on the periodic box: runs, exact-identity and \
             inequality verification, and directional regularity monitoring"
)]
struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rebase every seed in the configuration from this value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the exact trilinear identities on seeded solenoidal fields.
    VerifyIdentities,
    /// Bound the constants of the anisotropic trilinear inequalities.
    VerifyInequalities,
    /// Integrate the equations, recording diagnostics and snapshots.
    Simulate,
    /// Evaluate the directional regularity criterion along a run.
    Monitor {
        /// Read a previous `simulate` output directory instead of re-running.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Temporal self-convergence study on a perturbed base flow.
    Convergence,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::VerifyIdentities => "verify-identities",
            Cmd::VerifyInequalities => "verify-inequalities",
            Cmd::Simulate => "simulate",
            Cmd::Monitor { .. } => "monitor",
            Cmd::Convergence => "convergence",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (mut cfg, config_hash) = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.rebase_seeds(seed);
    }
    let out_path = cli
        .out
        .clone()
        .ok_or_else(|| Failure::Config("--out <DIR> is required".into()))?;
    let mut out = OutDir::create(&out_path)?;

    let result = match &cli.command {
        Cmd::VerifyIdentities => cmd_verify_identities(&cfg, &mut out),
        Cmd::VerifyInequalities => cmd_verify_inequalities(&cfg, &mut out),
        Cmd::Simulate => cmd_simulate(&cfg, &mut out),
        Cmd::Monitor { from } => cmd_monitor(&cfg, &mut out, from.as_deref()),
        Cmd::Convergence => cmd_convergence(&cfg, &mut out),
    };

    // A failed verification still leaves a complete artifact directory; only
    // config and runtime errors abandon the manifest.
    match result {
        Ok(()) => out.write_manifest(cli.command.name(), &config_hash, cli.seed),
        Err(f @ Failure::Verification(_)) => {
            out.write_manifest(cli.command.name(), &config_hash, cli.seed)?;
            Err(f)
        }
        Err(other) => Err(other),
    }
}

// ---------------------------------------------------------------------------
// verify-identities
// ---------------------------------------------------------------------------

fn cmd_verify_identities(cfg: &Config, out: &mut OutDir) -> Result<(), Failure> {
    let ids = &cfg.identities;
    if ids.sizes.is_empty() || ids.seeds.is_empty() {
        return Err(Failure::Config("[identities]: sizes and seeds must be nonempty".into()));
    }
    if !(ids.gate > 0.0 && ids.control_gate > 0.0) {
        return Err(Failure::Config("[identities]: gates must be positive".into()));
    }

    let mut rows = Vec::new();
    for &n in &ids.sizes {
        let grid = GridSpec::new(n, cfg.grid.viscosity)
            .map_err(|e| Failure::Config(format!("[identities] n = {n}: {e}")))?;
        for &seed in &ids.seeds {
            let u = generate_test_field(
                TestFieldKind::RandomSolenoidal { decay: ids.decay },
                seed,
                &grid,
            )
            .map_err(runtime)?;
            for report in verify_all(&u).map_err(runtime)? {
                let pass = report.rel_residual <= ids.gate;
                rows.push(IdentityRow { n, seed, projected: true, report, pass });
            }
            if ids.negative_control {
                // A raw (non-projected) draw must BREAK the component-reducing
                // identity; `pass` means the residual is large.
                let v = random_spectrum_field(seed, &grid, ids.decay, false).map_err(runtime)?;
                let report = kukavica_ziane_unchecked(&v);
                let pass = report.rel_residual > ids.control_gate;
                rows.push(IdentityRow { n, seed, projected: false, report, pass });
            }
        }
    }

    output::write_identities_csv(out, &rows)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows
        .iter()
        .filter(|r| r.projected)
        .map(|r| r.report.rel_residual)
        .fold(0.0f64, f64::max);
    println!(
        "identities: {}/{} checks pass (worst projected residual {worst:.3e}, gate {:.1e})",
        rows.len() - failed,
        rows.len(),
        ids.gate
    );
    if failed > 0 {
        return Err(Failure::Verification(format!("{failed} identity checks failed")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify-inequalities
// ---------------------------------------------------------------------------

fn cmd_verify_inequalities(cfg: &Config, out: &mut OutDir) -> Result<(), Failure> {
    let ineq = &cfg.inequalities;
    let variants = cfg.inequality_variants()?;
    if ineq.sizes.is_empty() || ineq.r_list.is_empty() {
        return Err(Failure::Config("[inequalities]: sizes and r_list must be nonempty".into()));
    }
    if ineq.family_count == 0 {
        return Err(Failure::Config("[inequalities]: family_count must be positive".into()));
    }
    for &r in &ineq.r_list {
        beta_from_r(r).map_err(|e| Failure::Config(format!("[inequalities]: {e}")))?;
    }

    let mut estimates = Vec::new();
    for &n in &ineq.sizes {
        let grid = GridSpec::new(n, cfg.grid.viscosity)
            .map_err(|e| Failure::Config(format!("[inequalities] n = {n}: {e}")))?;
        let family = FamilySpec { count: ineq.family_count, seed: ineq.family_seed, grid };
        for &variant in &variants {
            for &r in &ineq.r_list {
                let est = estimate_constant(variant, r, &family).map_err(runtime)?;
                estimates.push((n, ineq.family_seed, est));
            }
        }
    }

    output::write_inequalities_csv(out, &estimates)?;
    output::write_inequality_summary_csv(out, &estimates)?;

    let mut bad = 0usize;
    let mut sup = 0.0f64;
    for (_, _, est) in &estimates {
        bad += est.ratios.iter().filter(|x| !x.is_finite()).count();
        sup = sup.max(est.sup_ratio);
    }
    println!(
        "inequalities: {} estimates over {} grids, largest sup ratio {sup:.6}, {bad} non-finite",
        estimates.len(),
        ineq.sizes.len()
    );
    if bad > 0 {
        return Err(Failure::Verification(format!("{bad} non-finite inequality ratios")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn run_from_config(cfg: &Config) -> Result<Trajectory, Failure> {
    let grid = cfg.grid_spec()?;
    let ic = cfg.initial_field(&grid)?;
    let params = cfg.run_params()?;
    cfg.criterion_config()?; // exponent sanity; params reuse the beta list
    run_simulation(&ic, &params).map_err(runtime)
}

fn write_run_artifacts(out: &mut OutDir, traj: &Trajectory) -> Result<(), Failure> {
    output::write_diagnostics_csv(out, traj)?;
    output::write_run_json(out, traj)?;
    for s in traj.samples() {
        if let Some(f) = &s.snapshot {
            output::write_snapshot(out, s.step, s.t, traj.viscosity(), f)?;
        }
    }
    let energy = energy_report(traj, traj.samples()[0].t, traj.end_time()).map_err(runtime)?;
    output::write_energy_csv(out, &energy)?;
    println!(
        "simulate: {} samples to t = {}, terminus {}, max divergence {:.3e}, energy defect {:.3e} (rel)",
        traj.samples().len(),
        traj.end_time(),
        traj.terminus(),
        traj.max_divergence(),
        energy.defect_rel
    );
    Ok(())
}

fn cmd_simulate(cfg: &Config, out: &mut OutDir) -> Result<(), Failure> {
    let traj = run_from_config(cfg)?;
    write_run_artifacts(out, &traj)
}

// ---------------------------------------------------------------------------
// monitor
// ---------------------------------------------------------------------------

fn cmd_monitor(cfg: &Config, out: &mut OutDir, from: Option<&Path>) -> Result<(), Failure> {
    let criterion = cfg.criterion_config()?;
    let traj = match from {
        Some(dir) => output::load_trajectory(dir)?,
        None => {
            cfg.check_monitor_feasible()?;
            run_from_config(cfg)?
        }
    };
    let report = evaluate_criterion(&traj, &criterion).map_err(runtime)?;
    output::write_criterion_outputs(out, &report)?;
    let lead = &report.per_beta[0];
    println!(
        "monitor: triple {}, window [{}, {}], ||entries|| mixed norm {:.6e} at beta = {}, \
         smallness {:.6e} (< {:.1e}: {})",
        report.triple,
        report.window.0,
        report.window.1,
        lead.joint_value(),
        output::beta_label(lead.beta),
        report.smallness.quantity,
        report.smallness.epsilon,
        report.smallness.holds
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

fn perturbed_base_flow(cfg: &Config, grid: &GridSpec) -> Result<VectorField, Failure> {
    let base = generate_test_field(TestFieldKind::TaylorGreen2d, 0, grid).map_err(runtime)?;
    let pert = generate_test_field(
        TestFieldKind::RandomSolenoidal { decay: cfg.initial.decay },
        cfg.initial.seed,
        grid,
    )
    .map_err(runtime)?;
    let eps = cfg.convergence.perturbation;
    let components = Axis::ALL.map(|axis| {
        base.component(axis).added(&pert.component(axis).scaled(eps)).expect("same grid")
    });
    VectorField::new(components).map_err(runtime)
}

/// Grid L2 distance between two fields (physical views).
fn l2_distance(a: &VectorField, b: &VectorField) -> f64 {
    let mut sum = 0.0;
    for axis in Axis::ALL {
        let pa = a.component(axis).physical();
        let pb = b.component(axis).physical();
        for i in 0..pa.len() {
            let d = pa[i] - pb[i];
            sum += d * d;
        }
    }
    (a.grid().cell_volume() * sum).sqrt()
}

/// Least-squares slope of `ln error` against `ln dt`.
fn fit_order(rows: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|(_, e)| *e > 0.0).map(|(dt, e)| (dt.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let num: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    num / den
}

fn cmd_convergence(cfg: &Config, out: &mut OutDir) -> Result<(), Failure> {
    cfg.check_convergence()?;
    let grid = cfg.grid_spec()?;
    let conv = &cfg.convergence;
    let ic = perturbed_base_flow(cfg, &grid)?;

    let final_state = |dt: f64| -> Result<Arc<VectorField>, Failure> {
        let mut params = RunParams::new(dt, conv.t_end);
        params.sample_stride = usize::MAX; // only the endpoints are recorded
        params.snapshot_every = 1;
        let traj = run_simulation(&ic, &params).map_err(runtime)?;
        if !traj.terminus().is_completed() {
            return Err(Failure::Runtime(format!(
                "convergence run at dt = {dt} stopped early ({})",
                traj.terminus()
            )));
        }
        let last = traj.samples().last().expect("run has samples");
        Ok(last.snapshot.clone().expect("final snapshot recorded"))
    };

    let reference = final_state(conv.reference_dt)?;
    let mut rows = Vec::with_capacity(conv.dt_list.len());
    for &dt in &conv.dt_list {
        let f = final_state(dt)?;
        rows.push((dt, l2_distance(&f, &reference)));
    }
    let order = fit_order(&rows);

    output::write_errors_csv(out, &rows)?;
    output::write_convergence_json(out, conv.reference_dt, conv.t_end, grid.n(), order)?;
    println!(
        "convergence: {} step sizes against dt = {}, fitted order {order:.3}",
        rows.len(),
        conv.reference_dt
    );
    Ok(())
}
