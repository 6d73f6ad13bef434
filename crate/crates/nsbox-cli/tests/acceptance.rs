//! Acceptance gate: seven criteria covering the identity suite, the
//! inequality constant bounds, the exponent algebra, solver accuracy, monitor
//! selectivity, and bit-identical reruns. Each test prints one PASS/FAIL line;
//! run with `cargo test -p nsbox-cli --test acceptance -- --nocapture` to see
//! them all. Tolerances are pinned in the assertions on purpose.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nsbox::field::random_spectrum_field;
use nsbox::identities::{kukavica_ziane, kukavica_ziane_unchecked, verify_all};
use nsbox::inequalities::{
    beta_from_r, derive_member_seed, driver_exponents, inequality_report, InequalityVariant,
};
use nsbox::monitor::{smallness_window, CriterionSource};
use nsbox::norms::ExponentPair;
use nsbox::solver::{energy_report, TrajectorySample};
use nsbox::{
    evaluate_criterion, generate_test_field, run_simulation, Axis, AxisTriple, CriterionConfig,
    GridSpec, RunParams, TestFieldKind, Trajectory, VectorField,
};
use tempfile::TempDir;

/// Print the verdict line for one criterion; panic with the collected
/// failures if any check missed its pinned tolerance.
fn conclude(number: usize, label: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("ACCEPTANCE criterion {number} ({label}): PASS");
    } else {
        println!("ACCEPTANCE criterion {number} ({label}): FAIL");
        for f in &failures {
            println!("  - {f}");
        }
        panic!("acceptance criterion {number} failed:\n{}", failures.join("\n"));
    }
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

// ---------------------------------------------------------------------------
// 1. Kukavica–Ziane identity residuals
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_kukavica_ziane_residuals() {
    let mut failures = Vec::new();
    let start = Instant::now();
    for n in [32usize, 64] {
        let grid = GridSpec::new(n, 1.0).unwrap();
        for seed in 1..=10u64 {
            let u = generate_test_field(
                TestFieldKind::RandomSolenoidal { decay: 1.5 },
                seed,
                &grid,
            )
            .unwrap();
            let rep = kukavica_ziane(&u).unwrap();
            check(&mut failures, rep.rel_residual <= 1e-10, || {
                format!(
                    "n = {n}, seed {seed}: relative residual {:.3e} > 1e-10",
                    rep.rel_residual
                )
            });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(&mut failures, elapsed < 30.0, || {
        format!("identity sweep took {elapsed:.1} s, budget is 30 s")
    });
    conclude(1, "Kukavica-Ziane identity residuals", failures);
}

// ---------------------------------------------------------------------------
// 2. Decomposition identities and the negative control
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_decomposition_identities_with_negative_control() {
    let mut failures = Vec::new();
    for n in [32usize, 64] {
        let grid = GridSpec::new(n, 1.0).unwrap();
        for seed in 1..=10u64 {
            let u = generate_test_field(
                TestFieldKind::RandomSolenoidal { decay: 1.5 },
                seed,
                &grid,
            )
            .unwrap();
            for rep in verify_all(&u).unwrap() {
                check(&mut failures, rep.rel_residual <= 1e-10, || {
                    format!(
                        "{} at n = {n}, seed {seed}: relative residual {:.3e} > 1e-10",
                        rep.id.as_str(),
                        rep.rel_residual
                    )
                });
            }
        }
    }

    // Non-solenoidal fields must break the identity by a visible margin.
    let grid = GridSpec::new(32, 1.0).unwrap();
    let mut control_floor = f64::INFINITY;
    for seed in 201..=210u64 {
        let u = random_spectrum_field(seed, &grid, 1.5, false).unwrap();
        let rep = kukavica_ziane_unchecked(&u);
        control_floor = control_floor.min(rep.rel_residual);
        check(&mut failures, rep.rel_residual > 1e-3, || {
            format!(
                "negative control seed {seed}: residual {:.3e} not above 1e-3",
                rep.rel_residual
            )
        });
    }
    println!("  negative-control residual floor over 10 seeds: {control_floor:.3e}");
    conclude(2, "decomposition identities and negative control", failures);
}

// ---------------------------------------------------------------------------
// 3. Anisotropic inequality constant bounds
// ---------------------------------------------------------------------------

const R_SWEEP: [f64; 5] = [1.25, 1.5, 2.0, 2.5, 3.0];
const FAMILY_SEED: u64 = 424242;
const FAMILY_COUNT: usize = 100;

#[test]
fn criterion_3_inequality_constant_bounds() {
    let mut failures = Vec::new();
    let mut sup = [[0.0f64; R_SWEEP.len()]; 2];

    for (gi, n) in [32usize, 64].into_iter().enumerate() {
        let grid = GridSpec::new(n, 1.0).unwrap();
        for i in 0..FAMILY_COUNT {
            let seed = derive_member_seed(FAMILY_SEED, i);
            let triple =
                generate_test_field(TestFieldKind::BumpCompact, seed, &grid).unwrap();
            let (f, g, h) = (
                triple.component(Axis::X1),
                triple.component(Axis::X2),
                triple.component(Axis::X3),
            );
            for (ri, &r) in R_SWEEP.iter().enumerate() {
                let rep =
                    inequality_report(InequalityVariant::DistinguishedX3, f, g, h, r)
                        .unwrap();
                check(&mut failures, rep.ratio.is_finite(), || {
                    format!("n = {n}, member {i}, r = {r}: ratio {} not finite", rep.ratio)
                });
                sup[gi][ri] = sup[gi][ri].max(rep.ratio);
            }
        }
    }

    // Refining the grid must not move the empirical constant by more than 5%.
    for (ri, &r) in R_SWEEP.iter().enumerate() {
        let (s32, s64) = (sup[0][ri], sup[1][ri]);
        let shift = (s64 / s32 - 1.0).abs();
        println!("  r = {r}: sup ratio {s32:.6} at n = 32, {s64:.6} at n = 64");
        check(&mut failures, shift <= 0.05, || {
            format!("r = {r}: sup ratio moved {:.2}% from n = 32 to n = 64", 100.0 * shift)
        });
    }

    // The ratio is invariant under separate scalar scaling of each entry.
    let grid = GridSpec::new(32, 1.0).unwrap();
    for i in 0..3 {
        let seed = derive_member_seed(FAMILY_SEED, i);
        let triple = generate_test_field(TestFieldKind::BumpCompact, seed, &grid).unwrap();
        let (f, g, h) = (
            triple.component(Axis::X1),
            triple.component(Axis::X2),
            triple.component(Axis::X3),
        );
        let (fs, gs, hs) = (f.scaled(2.5), g.scaled(0.3), h.scaled(7.0));
        for &r in &R_SWEEP {
            let base =
                inequality_report(InequalityVariant::DistinguishedX3, f, g, h, r).unwrap();
            let scaled =
                inequality_report(InequalityVariant::DistinguishedX3, &fs, &gs, &hs, r)
                    .unwrap();
            let drift = (scaled.ratio / base.ratio - 1.0).abs();
            check(&mut failures, drift <= 1e-12, || {
                format!("member {i}, r = {r}: scaling moved the ratio by {drift:.3e}")
            });
        }
    }

    // The x1-distinguished variant is the x3 variant after relabeling axes.
    let swap = [Axis::X3, Axis::X2, Axis::X1];
    for i in 0..5 {
        let seed = derive_member_seed(FAMILY_SEED, i);
        let triple = generate_test_field(TestFieldKind::BumpCompact, seed, &grid).unwrap();
        let (f, g, h) = (
            triple.component(Axis::X1),
            triple.component(Axis::X2),
            triple.component(Axis::X3),
        );
        let (fr, gr, hr) = (
            f.relabel_axes(swap).unwrap(),
            g.relabel_axes(swap).unwrap(),
            h.relabel_axes(swap).unwrap(),
        );
        for &r in &R_SWEEP {
            let x1 = inequality_report(InequalityVariant::DistinguishedX1, f, g, h, r)
                .unwrap()
                .ratio;
            let x3 = inequality_report(InequalityVariant::DistinguishedX3, &fr, &gr, &hr, r)
                .unwrap()
                .ratio;
            let diff = (x1 - x3).abs() / x1.abs().max(x3.abs()).max(1e-300);
            check(&mut failures, diff <= 1e-12, || {
                format!("member {i}, r = {r}: x1 vs relabeled-x3 ratios differ by {diff:.3e}")
            });
        }
    }

    conclude(3, "anisotropic inequality constant bounds", failures);
}

// ---------------------------------------------------------------------------
// 4. Exponent algebra
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_exponent_algebra() {
    let mut failures = Vec::new();

    // The criterion pairing 1/alpha + 1/beta = 1 closes to rounding level.
    for beta in [1.01, 4.0 / 3.0, 2.0, 10.0, f64::INFINITY] {
        let pair = ExponentPair::hessian_criterion(beta).unwrap();
        let defect = pair.relation_defect();
        check(&mut failures, defect <= 1e-15, || {
            format!("beta = {beta}: conjugacy defect {defect:.3e} > 1e-15")
        });
    }

    // Exponent bookkeeping for the interpolation driver closes as well.
    for beta in [1.01, 4.0 / 3.0, 2.0, 10.0, f64::INFINITY] {
        let d = driver_exponents(beta).unwrap();
        for defect in d.relation_defects() {
            check(&mut failures, defect <= 1e-15, || {
                format!("beta = {beta}: driver exponent defect {defect:.3e} > 1e-15")
            });
        }
    }

    // beta -> r -> beta is bitwise exact wherever a single f64 can carry the
    // information back.
    for beta in [1.01, 4.0 / 3.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let r = driver_exponents(beta).unwrap().r;
        let back = beta_from_r(r).unwrap();
        check(&mut failures, back == beta, || {
            format!("beta = {beta}: round-trip through r = {r} returned {back}")
        });
    }

    // r -> beta -> r is bitwise exact on the whole interpolation sweep.
    for r in R_SWEEP {
        let beta = beta_from_r(r).unwrap();
        let back = driver_exponents(beta).unwrap().r;
        check(&mut failures, back == r, || {
            format!("r = {r}: round-trip through beta = {beta} returned {back}")
        });
    }

    // At beta = 10 the rounded r = fl(2.8) cannot carry beta back bitwise:
    // no f64 r has 2/(3-r) rounding to 10.0, because that needs 3-r = 0.2
    // exactly and 2.8 is not representable. The round-trip must instead land
    // at the double-rounding floor, within a couple of ulps.
    let r10 = driver_exponents(10.0).unwrap().r;
    let back10 = beta_from_r(r10).unwrap();
    let rel = (back10 / 10.0 - 1.0).abs();
    check(&mut failures, rel <= 2e-15, || {
        format!("beta = 10: round-trip landed at {back10}, {rel:.3e} away relative")
    });
    let mut candidate = r10;
    for _ in 0..8 {
        candidate = candidate.next_down();
    }
    for _ in 0..17 {
        check(&mut failures, beta_from_r(candidate).unwrap() != 10.0, || {
            format!("r = {candidate:?} inverts to exactly 10.0; floor analysis is wrong")
        });
        candidate = candidate.next_up();
    }

    conclude(4, "exponent algebra", failures);
}

// ---------------------------------------------------------------------------
// 5. Solver accuracy
// ---------------------------------------------------------------------------

/// L2 distance between two velocity fields on the same grid.
fn l2_distance(a: &VectorField, b: &VectorField) -> f64 {
    let mut sum = 0.0;
    for axis in Axis::ALL {
        let (pa, pb) = (a.component(axis).physical(), b.component(axis).physical());
        sum += pa
            .iter()
            .zip(pb)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum::<f64>();
    }
    (a.grid().cell_volume() * sum).sqrt()
}

/// Least-squares slope of ln(error) against ln(dt).
fn fitted_order(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(_, e)| *e > 0.0).map(|(dt, e)| (dt.ln(), e.ln())).collect();
    let k = logs.len() as f64;
    let (sx, sy) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy) =
        logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    (k * sxy - sx * sy) / (k * sxx - sx * sx)
}

#[test]
fn criterion_5_solver_accuracy() {
    let mut failures = Vec::new();
    let start = Instant::now();
    let mut worst_divergence = 0.0f64;

    // (a) The planar vortex decays exactly; the discrete run must track it.
    let grid = GridSpec::new(32, 0.1).unwrap();
    let u0 = generate_test_field(TestFieldKind::TaylorGreen2d, 0, &grid).unwrap();
    let mut params = RunParams::new(1e-3, 1.0);
    params.sample_stride = 100;
    params.snapshot_every = 10;
    let traj = run_simulation(&u0, &params).unwrap();
    check(&mut failures, traj.terminus().is_completed(), || {
        format!("vortex run did not complete: {}", traj.terminus())
    });
    worst_divergence = worst_divergence.max(traj.max_divergence());
    let last = traj.samples().last().unwrap();
    let exact = u0.scaled((-2.0 * 0.1 * last.t).exp());
    let err = l2_distance(last.snapshot.as_ref().expect("final snapshot"), &exact);
    println!("  vortex decay error at t = 1: {err:.3e}");
    check(&mut failures, err <= 1e-6, || {
        format!("L2 error {err:.3e} against the exact decaying vortex exceeds 1e-6")
    });

    // (b) Fourth-order self-convergence on a perturbed vortex.
    let base = generate_test_field(TestFieldKind::TaylorGreen2d, 0, &grid).unwrap();
    let pert =
        generate_test_field(TestFieldKind::RandomSolenoidal { decay: 1.5 }, 5, &grid)
            .unwrap();
    let ic = base.added(&pert.scaled(0.05)).unwrap();
    let final_state = |dt: f64| -> Arc<VectorField> {
        let mut p = RunParams::new(dt, 0.24);
        p.sample_stride = usize::MAX;
        p.snapshot_every = 1;
        let t = run_simulation(&ic, &p).unwrap();
        assert!(t.terminus().is_completed(), "convergence run flagged: {}", t.terminus());
        t.samples().last().unwrap().snapshot.as_ref().unwrap().clone()
    };
    let reference = final_state(2.4e-4);
    let dts = [8e-3, 4e-3, 2e-3, 1e-3];
    let points: Vec<(f64, f64)> =
        dts.iter().map(|&dt| (dt, l2_distance(&final_state(dt), &reference))).collect();
    let order = fitted_order(&points);
    println!("  fitted temporal order: {order:.3}");
    check(&mut failures, (3.7..=4.1).contains(&order), || {
        format!("fitted order {order:.3} outside [3.7, 4.1]; errors {points:?}")
    });

    // (c) Energy balance on a random run.
    let grid = GridSpec::new(32, 0.05).unwrap();
    let ic = generate_test_field(TestFieldKind::RandomSolenoidal { decay: 1.5 }, 77, &grid)
        .unwrap();
    let mut params = RunParams::new(2e-3, 1.0);
    params.sample_stride = 50;
    let traj = run_simulation(&ic, &params).unwrap();
    check(&mut failures, traj.terminus().is_completed(), || {
        format!("energy run did not complete: {}", traj.terminus())
    });
    worst_divergence = worst_divergence.max(traj.max_divergence());
    let report = energy_report(&traj, 0.0, traj.end_time()).unwrap();
    println!("  energy defect (relative): {:.3e}", report.defect_rel);
    check(&mut failures, report.defect_rel <= 1e-6, || {
        format!("relative energy defect {:.3e} exceeds 1e-6", report.defect_rel)
    });

    println!("  worst spectral divergence: {worst_divergence:.3e}");
    check(&mut failures, worst_divergence <= 1e-11, || {
        format!("spectral divergence reached {worst_divergence:.3e} > 1e-11")
    });
    let elapsed = start.elapsed().as_secs_f64();
    check(&mut failures, elapsed < 300.0, || {
        format!("solver validation took {elapsed:.0} s, budget is 300 s")
    });
    conclude(5, "solver accuracy", failures);
}

// ---------------------------------------------------------------------------
// 6. Monitor selectivity and consistency
// ---------------------------------------------------------------------------

/// Clone a trajectory with the stored per-exponent columns removed, forcing
/// criterion evaluation back onto the snapshots.
fn without_stored_hessian(traj: &Trajectory) -> Trajectory {
    let samples: Vec<TrajectorySample> = traj
        .samples()
        .iter()
        .map(|s| {
            let mut d = s.diagnostics.clone();
            d.hessian = Vec::new();
            TrajectorySample { step: s.step, t: s.t, diagnostics: d, snapshot: s.snapshot.clone() }
        })
        .collect();
    Trajectory::from_parts(
        *traj.grid(),
        traj.viscosity(),
        traj.beta_list().to_vec(),
        samples,
        traj.terminus(),
        traj.max_divergence(),
    )
}

/// Clone a trajectory with every snapshot relabeled by `perm` (stored
/// columns removed, so evaluation sees only the relabeled fields).
fn with_relabeled_snapshots(traj: &Trajectory, perm: [Axis; 3]) -> Trajectory {
    let samples: Vec<TrajectorySample> = traj
        .samples()
        .iter()
        .map(|s| {
            let mut d = s.diagnostics.clone();
            d.hessian = Vec::new();
            let snapshot = s
                .snapshot
                .as_ref()
                .map(|f| Arc::new(f.relabel_axes(perm).expect("cubic grid relabels")));
            TrajectorySample { step: s.step, t: s.t, diagnostics: d, snapshot }
        })
        .collect();
    Trajectory::from_parts(
        *traj.grid(),
        traj.viscosity(),
        traj.beta_list().to_vec(),
        samples,
        traj.terminus(),
        traj.max_divergence(),
    )
}

#[test]
fn criterion_6_monitor_selectivity() {
    let mut failures = Vec::new();

    // Flows with no vertical structure never trip the criterion even though
    // their gradients stay order one.
    for (name, kind) in [
        ("taylor_green", TestFieldKind::TaylorGreen2d),
        ("abc", TestFieldKind::AbcFlow),
    ] {
        let grid = GridSpec::new(32, 0.1).unwrap();
        let u0 = generate_test_field(kind, 0, &grid).unwrap();
        let mut params = RunParams::new(2e-3, 0.2);
        params.sample_stride = 10;
        let traj = run_simulation(&u0, &params).unwrap();
        check(&mut failures, traj.terminus().is_completed(), || {
            format!("{name} run did not complete: {}", traj.terminus())
        });
        for s in traj.samples() {
            check(&mut failures, s.diagnostics.grad_l2 > 0.0, || {
                format!("{name}: ||grad u||_2 vanished at t = {}", s.t)
            });
        }
        let report =
            evaluate_criterion(&traj, &CriterionConfig::new(vec![2.0])).unwrap();
        let pb = &report.per_beta[0];
        let peak =
            pb.joint.samples().iter().map(|s| s.value.abs()).fold(0.0f64, f64::max);
        if name == "taylor_green" {
            // The planar vortex keeps u3 at exact floating-point zero.
            for s in pb.joint.samples() {
                check(&mut failures, s.value == 0.0, || {
                    format!("{name}: entry norm {:.3e} at t = {} is not zero", s.value, s.t)
                });
            }
            check(&mut failures, pb.joint_integral() == 0.0, || {
                format!("{name}: criterion integral {:.3e} not zero", pb.joint_integral())
            });
        } else {
            // The evolved Beltrami flow accrues only rounding noise in the
            // monitored entries; hold it to twelve orders below the O(1)
            // gradients and the integral to the corresponding square.
            println!("  {name}: peak entry norm {peak:.3e}, integral {:.3e}", pb.joint_integral());
            check(&mut failures, peak <= 1e-12, || {
                format!("{name}: peak entry norm {peak:.3e} above the rounding floor 1e-12")
            });
            check(&mut failures, pb.joint_integral() <= 1e-20, || {
                format!(
                    "{name}: criterion integral {:.3e} above the rounding floor 1e-20",
                    pb.joint_integral()
                )
            });
        }
    }

    // A generic random run: stored columns and snapshot recomputation must
    // tell the same story.
    let grid = GridSpec::new(16, 0.05).unwrap();
    let u0 = generate_test_field(TestFieldKind::RandomSolenoidal { decay: 1.5 }, 9, &grid)
        .unwrap();
    let mut params = RunParams::new(2e-3, 0.2);
    params.sample_stride = 5;
    params.snapshot_every = 1;
    params.beta_list = vec![2.0, f64::INFINITY];
    let traj = run_simulation(&u0, &params).unwrap();
    let config = CriterionConfig::new(vec![2.0, f64::INFINITY]);
    let stored = evaluate_criterion(&traj, &config).unwrap();
    check(&mut failures, stored.source == CriterionSource::StoredDiagnostics, || {
        "stored-path evaluation did not use the stored diagnostics".into()
    });
    let snapshots = evaluate_criterion(&without_stored_hessian(&traj), &config).unwrap();
    check(&mut failures, snapshots.source == CriterionSource::Snapshots, || {
        "snapshot-path evaluation did not use the snapshots".into()
    });
    for (a, b) in stored.per_beta.iter().zip(&snapshots.per_beta) {
        let drift = (a.joint_integral() / b.joint_integral() - 1.0).abs();
        check(&mut failures, drift <= 1e-8, || {
            format!(
                "beta = {}: stored {:.12e} vs snapshots {:.12e} disagree ({drift:.3e})",
                a.beta,
                a.joint_integral(),
                b.joint_integral()
            )
        });
    }

    // Permutation covariance is exact: a permuted triple on the original run
    // reproduces the default triple on pre-relabeled snapshots, bitwise.
    let triple = AxisTriple::new([2, 3, 1]).unwrap();
    let mut permuted_config = CriterionConfig::new(vec![2.0, f64::INFINITY]);
    permuted_config.triple = triple;
    let permuted = evaluate_criterion(&without_stored_hessian(&traj), &permuted_config).unwrap();
    let relabeled = evaluate_criterion(
        &with_relabeled_snapshots(&traj, triple.relabel_perm()),
        &config,
    )
    .unwrap();
    for (a, b) in permuted.per_beta.iter().zip(&relabeled.per_beta) {
        check(&mut failures, a.joint_integral() == b.joint_integral(), || {
            format!(
                "beta = {}: permuted integral {:.17e} != relabeled {:.17e}",
                a.beta,
                a.joint_integral(),
                b.joint_integral()
            )
        });
        for (sa, sb) in a.joint.samples().iter().zip(b.joint.samples()) {
            check(&mut failures, sa.value == sb.value, || {
                format!(
                    "beta = {}, t = {}: permuted value {:.17e} != relabeled {:.17e}",
                    a.beta, sa.t, sa.value, sb.value
                )
            });
        }
    }

    // The smallness tail is nonincreasing in the window start.
    let times: Vec<f64> = traj.samples().iter().map(|s| s.t).collect();
    let mut previous = f64::INFINITY;
    for &tau in &times {
        let report = smallness_window(&traj, tau, 2.0, 0.1).unwrap();
        check(&mut failures, report.quantity <= previous, || {
            format!(
                "smallness quantity rose from {previous:.6e} to {:.6e} at tau = {tau}",
                report.quantity
            )
        });
        previous = report.quantity;
    }

    conclude(6, "monitor selectivity and consistency", failures);
}

// ---------------------------------------------------------------------------
// 7. Bit-identical reruns
// ---------------------------------------------------------------------------

const PIPELINE_CONFIG: &str = r#"
[grid]
n = 16
viscosity = 0.05

[initial]
kind = "random_solenoidal"
seed = 11

[time]
dt = 2e-3
t_end = 0.04
sample_stride = 5
snapshot_every = 1

[criterion]
betas = [2.0, inf]
serrin_beta_prime = inf

[identities]
seeds = [1, 2]
sizes = [16]

[inequalities]
r_list = [1.5, 2.5]
family_count = 3
sizes = [16]

[convergence]
dt_list = [8e-3, 4e-3]
reference_dt = 2e-3
t_end = 0.04
"#;

fn run_pipeline(cfg: &Path, root: &Path) {
    let bin = env!("CARGO_BIN_EXE_nsbox");
    let sim = root.join("sim");
    let steps: [(&str, &[&str], PathBuf); 5] = [
        ("verify-identities", &[], root.join("identities")),
        ("verify-inequalities", &[], root.join("inequalities")),
        ("simulate", &[], sim.clone()),
        ("monitor", &["--from", sim.to_str().unwrap()], root.join("monitor")),
        ("convergence", &[], root.join("convergence")),
    ];
    for (cmd, extra, out) in steps {
        let status = Command::new(bin)
            .arg(cmd)
            .args(extra)
            .arg("--config")
            .arg(cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .expect("binary should launch");
        assert!(status.success(), "{cmd} exited with {status}");
    }
}

fn collect_files(base: &Path, dir: &Path, into: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(base, &path, into);
        } else {
            into.push(path.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

#[test]
fn criterion_7_bit_identical_reruns() {
    let mut failures = Vec::new();
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("config.toml");
    fs::write(&cfg, PIPELINE_CONFIG).unwrap();

    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&cfg, &a);
    run_pipeline(&cfg, &b);

    let mut files_a = Vec::new();
    let mut files_b = Vec::new();
    collect_files(&a, &a, &mut files_a);
    collect_files(&b, &b, &mut files_b);
    files_a.sort();
    files_b.sort();
    check(&mut failures, files_a == files_b, || {
        format!("artifact sets differ: {files_a:?} vs {files_b:?}")
    });

    let mut compared = 0usize;
    for rel in &files_a {
        if rel.file_name().is_some_and(|f| f == "manifest.json") {
            // The manifest embeds its creation time; everything else must
            // match byte for byte.
            continue;
        }
        let (bytes_a, bytes_b) = (fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap());
        if bytes_a != bytes_b {
            failures.push(format!("{} differs between identical reruns", rel.display()));
        }
        compared += 1;
    }
    println!("  byte-compared {compared} artifacts across the two passes");
    check(&mut failures, compared >= 20, || {
        format!("only {compared} artifacts were compared; pipeline looks incomplete")
    });

    conclude(7, "bit-identical reruns", failures);
}
