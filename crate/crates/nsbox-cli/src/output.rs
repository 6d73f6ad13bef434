//! Artifact writers and readers: CSV schemas, the snapshot binary format,
//! `run.json`, and the output manifest.
//!
//! All floats are printed with Rust's shortest round-trip formatting, so
//! re-parsing a file reproduces the exact bits and rerunning a command
//! reproduces the exact bytes.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use nsbox::field::Axis;
use nsbox::identities::IdentityReport;
use nsbox::inequalities::ConstantEstimate;
use nsbox::monitor::CriterionReport;
use nsbox::solver::{
    BlowUpReason, RunTerminus, Trajectory, TrajectorySample, diagnostics_for,
};
use nsbox::{GridSpec, ScalarField, VectorField};

use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn runtime(msg: impl Into<String>) -> Failure {
    Failure::Runtime(msg.into())
}

fn io_fail(path: &Path, e: io::Error) -> Failure {
    runtime(format!("{}: {e}", path.display()))
}

/// Column-label spelling of an exponent: `inf` for the supremum norm,
/// shortest round-trip decimal otherwise.
pub fn beta_label(beta: f64) -> String {
    if beta.is_infinite() {
        "inf".into()
    } else {
        format!("{beta}")
    }
}

pub fn parse_beta_label(s: &str) -> Result<f64, Failure> {
    match s {
        "inf" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| runtime(format!("bad exponent label {s:?}"))),
    }
}

/// Tracks every file written under one output directory for the manifest.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| io_fail(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    /// Open `name` for writing and remember it for the manifest.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_fail(parent, e))?;
        }
        let f = File::create(&path).map_err(|e| io_fail(&path, e))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    /// Write the manifest last: what command produced this directory, from
    /// which config (by hash), and which files it left behind.
    pub fn write_manifest(
        mut self,
        command: &str,
        config_sha256: &str,
        seed: Option<u64>,
    ) -> Result<(), Failure> {
        let created_unix =
            SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        self.files.sort();
        let manifest = serde_json::json!({
            "command": command,
            "config_sha256": config_sha256,
            "crate_version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "files": self.files,
            "created_unix": created_unix,
        });
        let path = self.root.join("manifest.json");
        let mut w = BufWriter::new(File::create(&path).map_err(|e| io_fail(&path, e))?);
        serde_json::to_writer_pretty(&mut w, &manifest)
            .map_err(|e| runtime(format!("manifest: {e}")))?;
        writeln!(w).map_err(|e| io_fail(&path, e))?;
        Ok(())
    }
}

fn finish<W: Write>(name: &str, w: &mut W, r: io::Result<()>) -> Result<(), Failure> {
    r.and_then(|()| w.flush()).map_err(|e| runtime(format!("writing {name}: {e}")))
}

/// `diagnostics.csv`: one row per recorded sample; the trailing column groups
/// repeat per configured exponent.
pub fn write_diagnostics_csv(out: &mut OutDir, traj: &Trajectory) -> Result<(), Failure> {
    let mut w = out.file("diagnostics.csv")?;
    let r = (|| -> io::Result<()> {
        write!(w, "step,t,u_l2,grad_l2,grad_h_l2,grad_grad_h_l2,lap_l2,max_divergence,dissipation_integral")?;
        for &beta in traj.beta_list() {
            let b = beta_label(beta);
            write!(w, ",hess_a_{b},hess_b_{b},hess_joint_{b}")?;
        }
        writeln!(w)?;
        for s in traj.samples() {
            let d = &s.diagnostics;
            write!(
                w,
                "{},{},{},{},{},{},{},{},",
                s.step, s.t, d.u_l2, d.grad_l2, d.grad_h_l2, d.grad_grad_h_l2, d.lap_l2,
                d.max_divergence
            )?;
            if let Some(di) = d.dissipation_integral {
                write!(w, "{di}")?;
            }
            for h in &d.hessian {
                write!(w, ",{},{},{}", h.comp_a, h.comp_b, h.joint)?;
            }
            writeln!(w)?;
        }
        Ok(())
    })();
    finish("diagnostics.csv", &mut w, r)
}

/// `run.json`: the run-level facts needed to reload a trajectory.
pub fn write_run_json(out: &mut OutDir, traj: &Trajectory) -> Result<(), Failure> {
    let betas: Vec<String> = traj.beta_list().iter().map(|&b| beta_label(b)).collect();
    let json = serde_json::json!({
        "n": traj.grid().n(),
        "viscosity": traj.grid().viscosity(),
        "beta_list": betas,
        "terminus": traj.terminus().to_string(),
        "max_divergence": traj.max_divergence(),
        "end_time": traj.end_time(),
        "samples": traj.samples().len(),
    });
    let mut w = out.file("run.json")?;
    serde_json::to_writer_pretty(&mut w, &json).map_err(|e| runtime(format!("run.json: {e}")))?;
    let r = writeln!(w);
    finish("run.json", &mut w, r)
}

pub fn write_energy_csv(out: &mut OutDir, report: &nsbox::solver::EnergyReport) -> Result<(), Failure> {
    let mut w = out.file("energy.csv")?;
    let r = (|| -> io::Result<()> {
        writeln!(w, "t_start,t_end,kinetic_start,kinetic_end,dissipation_two_nu,dissipation_single_nu,defect,defect_rel")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            report.t_start, report.t_end, report.kinetic_start, report.kinetic_end,
            report.dissipation_two_nu, report.dissipation_single_nu, report.defect,
            report.defect_rel
        )
    })();
    finish("energy.csv", &mut w, r)
}

// ---------------------------------------------------------------------------
// Snapshot binary format.
//
//   bytes 0..8    magic "NSBXSNAP"
//   bytes 8..12   format version, u32 LE (currently 1)
//   bytes 12..20  n, u64 LE
//   bytes 20..28  step index, u64 LE
//   bytes 28..36  time t, f64 LE
//   bytes 36..44  viscosity, f64 LE
//   then 3 * n^3 physical f64 LE values (components u1, u2, u3, each in
//   linear index order with x1 fastest).
// ---------------------------------------------------------------------------

const SNAP_MAGIC: &[u8; 8] = b"NSBXSNAP";
const SNAP_VERSION: u32 = 1;

pub fn snapshot_name(step: usize) -> String {
    format!("snapshots/step_{step:08}.bin")
}

pub fn write_snapshot(
    out: &mut OutDir,
    step: usize,
    t: f64,
    nu: f64,
    field: &VectorField,
) -> Result<(), Failure> {
    let name = snapshot_name(step);
    let mut w = out.file(&name)?;
    let r = (|| -> io::Result<()> {
        w.write_all(SNAP_MAGIC)?;
        w.write_all(&SNAP_VERSION.to_le_bytes())?;
        w.write_all(&(field.grid().n() as u64).to_le_bytes())?;
        w.write_all(&(step as u64).to_le_bytes())?;
        w.write_all(&t.to_le_bytes())?;
        w.write_all(&nu.to_le_bytes())?;
        for axis in Axis::ALL {
            for &v in field.component(axis).physical() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })();
    finish(&name, &mut w, r)
}

pub struct SnapshotFile {
    pub step: usize,
    pub t: f64,
    pub nu: f64,
    pub field: VectorField,
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile, Failure> {
    let f = File::open(path).map_err(|e| io_fail(path, e))?;
    let mut r = BufReader::new(f);
    let bad = |what: &str| runtime(format!("{}: {what}", path.display()));

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| io_fail(path, e))?;
    if &magic != SNAP_MAGIC {
        return Err(bad("not a snapshot file (bad magic)"));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b).map_err(|e| io_fail(path, e))?;
    if u32::from_le_bytes(u32b) != SNAP_VERSION {
        return Err(bad("unsupported snapshot version"));
    }
    let mut u64b = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64, Failure> {
        r.read_exact(&mut u64b).map_err(|e| io_fail(path, e))?;
        Ok(u64::from_le_bytes(u64b))
    };
    let n = read_u64(&mut r)? as usize;
    let step = read_u64(&mut r)? as usize;
    let t = f64::from_bits(read_u64(&mut r)?);
    let nu = f64::from_bits(read_u64(&mut r)?);

    // The embedded GridSpec only fixes the layout; the stored viscosity is
    // returned separately, so an inviscid run's zero is clamped here to keep
    // GridSpec::new constructible.
    let grid = GridSpec::new(n, nu.max(f64::MIN_POSITIVE))
        .map_err(|e| bad(&format!("bad grid header: {e}")))?;
    let len = grid.len();
    let mut components = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut data = vec![0f64; len];
        for v in data.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|e| io_fail(path, e))?;
            *v = f64::from_le_bytes(b);
        }
        components.push(
            ScalarField::from_physical(grid, data)
                .map_err(|e| bad(&format!("bad component data: {e}")))?,
        );
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| io_fail(path, e))? != 0 {
        return Err(bad("trailing bytes after snapshot payload"));
    }
    let field = VectorField::new([
        components.remove(0),
        components.remove(0),
        components.remove(0),
    ])
    .map_err(|e| bad(&format!("bad field: {e}")))?;
    Ok(SnapshotFile { step, t, nu, field })
}

// ---------------------------------------------------------------------------
// Reloading a simulate directory.
// ---------------------------------------------------------------------------

struct RunJson {
    grid: GridSpec,
    beta_list: Vec<f64>,
    terminus: RunTerminus,
    max_divergence: f64,
}

fn read_run_json(dir: &Path) -> Result<RunJson, Failure> {
    let path = dir.join("run.json");
    let text = fs::read_to_string(&path).map_err(|e| io_fail(&path, e))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| runtime(format!("run.json: {e}")))?;
    let bad = |what: &str| runtime(format!("run.json: {what}"));

    let n = v["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
    let nu = v["viscosity"].as_f64().ok_or_else(|| bad("missing viscosity"))?;
    let grid = GridSpec::new(n, nu).map_err(|e| bad(&format!("bad grid: {e}")))?;
    let beta_list = v["beta_list"]
        .as_array()
        .ok_or_else(|| bad("missing beta_list"))?
        .iter()
        .map(|b| parse_beta_label(b.as_str().unwrap_or("?")))
        .collect::<Result<Vec<_>, _>>()?;
    let terminus = parse_terminus(v["terminus"].as_str().ok_or_else(|| bad("missing terminus"))?)?;
    let max_divergence =
        v["max_divergence"].as_f64().ok_or_else(|| bad("missing max_divergence"))?;
    Ok(RunJson { grid, beta_list, terminus, max_divergence })
}

fn parse_terminus(s: &str) -> Result<RunTerminus, Failure> {
    if s == "completed" {
        return Ok(RunTerminus::Completed);
    }
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 && parts[0] == "flagged" {
        let reason = match parts[1] {
            "non_finite" => BlowUpReason::NonFinite,
            "cfl_exceeded" => BlowUpReason::CflExceeded,
            _ => return Err(runtime(format!("unknown blow-up reason {:?}", parts[1]))),
        };
        let t: f64 =
            parts[2].parse().map_err(|_| runtime(format!("bad terminus time {:?}", parts[2])))?;
        return Ok(RunTerminus::Flagged { t, reason });
    }
    Err(runtime(format!("bad terminus {s:?}")))
}

fn parse_opt_f64(s: &str, what: &str) -> Result<Option<f64>, Failure> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| runtime(format!("bad {what} value {s:?}")))
    }
}

fn read_diagnostics_csv(
    dir: &Path,
    beta_list: &[f64],
) -> Result<Vec<TrajectorySample>, Failure> {
    let path = dir.join("diagnostics.csv");
    let text = fs::read_to_string(&path).map_err(|e| io_fail(&path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| runtime("diagnostics.csv: empty file"))?;
    let fixed = 9;
    let expected = fixed + 3 * beta_list.len();
    if header.split(',').count() != expected {
        return Err(runtime(format!(
            "diagnostics.csv: expected {expected} columns for {} exponents",
            beta_list.len()
        )));
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected {
            return Err(runtime(format!("diagnostics.csv row {}: bad column count", lineno + 2)));
        }
        let num = |i: usize, what: &str| -> Result<f64, Failure> {
            cells[i].parse().map_err(|_| {
                runtime(format!("diagnostics.csv row {}: bad {what} {:?}", lineno + 2, cells[i]))
            })
        };
        let step: usize = cells[0]
            .parse()
            .map_err(|_| runtime(format!("diagnostics.csv row {}: bad step", lineno + 2)))?;
        let mut hessian = Vec::with_capacity(beta_list.len());
        for (bi, &beta) in beta_list.iter().enumerate() {
            hessian.push(nsbox::solver::HessianDiag {
                beta,
                comp_a: num(fixed + 3 * bi, "hess_a")?,
                comp_b: num(fixed + 3 * bi + 1, "hess_b")?,
                joint: num(fixed + 3 * bi + 2, "hess_joint")?,
            });
        }
        let diagnostics = nsbox::solver::Diagnostics {
            u_l2: num(2, "u_l2")?,
            grad_l2: num(3, "grad_l2")?,
            grad_h_l2: num(4, "grad_h_l2")?,
            grad_grad_h_l2: num(5, "grad_grad_h_l2")?,
            lap_l2: num(6, "lap_l2")?,
            max_divergence: num(7, "max_divergence")?,
            dissipation_integral: parse_opt_f64(cells[8], "dissipation_integral")?,
            hessian,
        };
        samples.push(TrajectorySample { step, t: num(1, "t")?, diagnostics, snapshot: None });
    }
    if samples.is_empty() {
        return Err(runtime("diagnostics.csv: no data rows"));
    }
    Ok(samples)
}

/// Rebuild a [`Trajectory`] from a `simulate` output directory: from the
/// snapshot files when present (full recomputation), else from the recorded
/// diagnostics rows.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory, Failure> {
    let run = read_run_json(dir)?;
    let snapdir = dir.join("snapshots");
    let samples = if snapdir.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(&snapdir)
            .map_err(|e| io_fail(&snapdir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin"))
            .collect();
        names.sort();
        let mut samples = Vec::with_capacity(names.len());
        for name in &names {
            let snap = read_snapshot(name)?;
            run.grid
                .check_same(snap.field.grid())
                .map_err(|e| runtime(format!("{}: {e}", name.display())))?;
            if snap.nu != run.grid.viscosity() {
                return Err(runtime(format!(
                    "{}: snapshot viscosity {} disagrees with run.json ({})",
                    name.display(),
                    snap.nu,
                    run.grid.viscosity()
                )));
            }
            let diagnostics = diagnostics_for(&snap.field, &[], None)
                .map_err(|e| runtime(format!("{}: {e}", name.display())))?;
            samples.push(TrajectorySample {
                step: snap.step,
                t: snap.t,
                diagnostics,
                snapshot: Some(Arc::new(snap.field)),
            });
        }
        if samples.is_empty() {
            return Err(runtime(format!("{}: no snapshot files", snapdir.display())));
        }
        samples
    } else {
        read_diagnostics_csv(dir, &run.beta_list)?
    };
    Ok(Trajectory::from_parts(
        run.grid,
        run.grid.viscosity(),
        run.beta_list,
        samples,
        run.terminus,
        run.max_divergence,
    ))
}

// ---------------------------------------------------------------------------
// Verification and monitor tables.
// ---------------------------------------------------------------------------

/// One `identities.csv` row, already assessed against its gate.
pub struct IdentityRow {
    pub n: usize,
    pub seed: u64,
    pub projected: bool,
    pub report: IdentityReport,
    pub pass: bool,
}

pub fn write_identities_csv(out: &mut OutDir, rows: &[IdentityRow]) -> Result<(), Failure> {
    let mut w = out.file("identities.csv")?;
    let r = (|| -> io::Result<()> {
        writeln!(w, "identity,n,seed,projected,sign,lhs,rhs,abs_residual,rel_residual,verdict")?;
        for row in rows {
            let rep = &row.report;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                rep.id, row.n, row.seed, row.projected, rep.sign, rep.lhs, rep.rhs,
                rep.abs_residual, rep.rel_residual,
                if row.pass { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    })();
    finish("identities.csv", &mut w, r)
}

/// Rows are `(n, family_seed, estimate)`; the per-triple seed is re-derived
/// from the family base so every ratio is attributable to its input.
pub fn write_inequalities_csv(
    out: &mut OutDir,
    estimates: &[(usize, u64, ConstantEstimate)],
) -> Result<(), Failure> {
    let mut w = out.file("inequalities.csv")?;
    let r = (|| -> io::Result<()> {
        writeln!(w, "variant,r,n,family_index,seed,ratio")?;
        for (n, family_seed, est) in estimates {
            for (i, ratio) in est.ratios.iter().enumerate() {
                let seed = nsbox::inequalities::derive_member_seed(*family_seed, i);
                writeln!(w, "{},{},{},{},{},{}", est.variant, est.r, n, i, seed, ratio)?;
            }
        }
        Ok(())
    })();
    finish("inequalities.csv", &mut w, r)
}

pub fn write_inequality_summary_csv(
    out: &mut OutDir,
    estimates: &[(usize, u64, ConstantEstimate)],
) -> Result<(), Failure> {
    let mut w = out.file("inequalities_summary.csv")?;
    let r = (|| -> io::Result<()> {
        writeln!(w, "variant,r,beta,n,count,sup_ratio,argmax_index,argmax_seed")?;
        for (n, _, est) in estimates {
            let beta = nsbox::inequalities::beta_from_r(est.r).map_or(f64::NAN, |b| b);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                est.variant, est.r, beta_label(beta), n, est.ratios.len(), est.sup_ratio,
                est.argmax_index, est.argmax_seed
            )?;
        }
        Ok(())
    })();
    finish("inequalities_summary.csv", &mut w, r)
}

pub fn write_criterion_outputs(out: &mut OutDir, report: &CriterionReport) -> Result<(), Failure> {
    {
        let mut w = out.file("criterion.csv")?;
        let r = (|| -> io::Result<()> {
            writeln!(w, "beta,alpha,joint_integral,joint_value,comp_a_value,comp_b_value")?;
            for pb in &report.per_beta {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    beta_label(pb.beta), beta_label(pb.alpha), pb.joint_integral(),
                    pb.joint_value(), pb.comp_a.value(), pb.comp_b.value()
                )?;
            }
            Ok(())
        })();
        finish("criterion.csv", &mut w, r)?;
    }

    for pb in &report.per_beta {
        let name = format!("series_beta_{}.csv", beta_label(pb.beta));
        let mut w = out.file(&name)?;
        let r = (|| -> io::Result<()> {
            writeln!(w, "t,joint,comp_a,comp_b,joint_running_integral")?;
            let joint = pb.joint.samples();
            let a = pb.comp_a.samples();
            let b = pb.comp_b.samples();
            for i in 0..joint.len() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    joint[i].t, joint[i].value, a[i].value, b[i].value,
                    joint[i].running_integral
                )?;
            }
            Ok(())
        })();
        finish(&name, &mut w, r)?;
    }

    {
        let mut w = out.file("smallness.csv")?;
        let s = &report.smallness;
        let r = (|| -> io::Result<()> {
            writeln!(w, "tau,epsilon,quantity,holds")?;
            writeln!(w, "{},{},{},{}", s.tau, s.epsilon, s.quantity, s.holds)
        })();
        finish("smallness.csv", &mut w, r)?;
    }

    {
        let mut w = out.file("gronwall.csv")?;
        let r = (|| -> io::Result<()> {
            writeln!(w, "t_mid,ddt_grad_h_sq,visc_grad_grad_h_sq,lhs_growth,driver,ratio")?;
            for row in &report.gronwall {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    row.t_mid, row.ddt_grad_h_sq, row.visc_grad_grad_h_sq, row.lhs_growth,
                    row.driver, row.ratio
                )?;
            }
            Ok(())
        })();
        finish("gronwall.csv", &mut w, r)?;
    }

    if let Some(serrin) = &report.serrin {
        let mut w = out.file("serrin.csv")?;
        let r = (|| -> io::Result<()> {
            writeln!(w, "beta_prime,alpha_prime,integral,value")?;
            writeln!(
                w,
                "{},{},{},{}",
                beta_label(serrin.beta_prime), beta_label(serrin.alpha_prime),
                serrin.integral(), serrin.value()
            )
        })();
        finish("serrin.csv", &mut w, r)?;
    }

    {
        let source = match report.source {
            nsbox::monitor::CriterionSource::StoredDiagnostics => "stored_diagnostics",
            nsbox::monitor::CriterionSource::Snapshots => "snapshots",
        };
        let json = serde_json::json!({
            "triple": report.triple.to_string(),
            "source": source,
            "window": [report.window.0, report.window.1],
            "terminus": report.terminus.to_string(),
            "gronwall_rows": report.gronwall.len(),
        });
        let mut w = out.file("monitor.json")?;
        serde_json::to_writer_pretty(&mut w, &json)
            .map_err(|e| runtime(format!("monitor.json: {e}")))?;
        let r = writeln!(w);
        finish("monitor.json", &mut w, r)?;
    }
    Ok(())
}

pub fn write_errors_csv(out: &mut OutDir, rows: &[(f64, f64)]) -> Result<(), Failure> {
    let mut w = out.file("errors.csv")?;
    let r = (|| -> io::Result<()> {
        writeln!(w, "dt,error_l2")?;
        for (dt, err) in rows {
            writeln!(w, "{dt},{err}")?;
        }
        Ok(())
    })();
    finish("errors.csv", &mut w, r)
}

pub fn write_convergence_json(
    out: &mut OutDir,
    reference_dt: f64,
    t_end: f64,
    n: usize,
    fitted_order: f64,
) -> Result<(), Failure> {
    let json = serde_json::json!({
        "reference_dt": reference_dt,
        "t_end": t_end,
        "n": n,
        "fitted_order": fitted_order,
    });
    let mut w = out.file("convergence.json")?;
    serde_json::to_writer_pretty(&mut w, &json)
        .map_err(|e| runtime(format!("convergence.json: {e}")))?;
    let r = writeln!(w);
    finish("convergence.json", &mut w, r)
}
