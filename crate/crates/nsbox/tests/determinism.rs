//! Bitwise agreement between the parallel and sequential executors.
//!
//! Every floating-point reduction in the crate goes through fixed-chunk
//! deterministic summation, so switching executors (or thread counts) must
//! not change a single bit anywhere in the pipeline.

use nsbox::exec;
use nsbox::field::{generate_test_field, Axis, TestFieldKind};
use nsbox::identities::{verify_identity, IdentityId};
use nsbox::inequalities::{estimate_constant, FamilySpec, InequalityVariant};
use nsbox::monitor::{evaluate_criterion, CriterionConfig};
use nsbox::norms::lebesgue_norm;
use nsbox::solver::{run_simulation, RunParams, Trajectory};
use nsbox::GridSpec;

struct Fingerprint {
    final_spectrum: Vec<(u64, u64)>,
    u_l2: u64,
    hessian_joint: u64,
    identity_rel: u64,
    norm4: u64,
    sup_ratio: u64,
    criterion_integral: u64,
}

fn pipeline() -> Fingerprint {
    let grid = GridSpec::new(16, 0.05).unwrap();
    let ic = generate_test_field(TestFieldKind::RandomSolenoidal { decay: 2.0 }, 33, &grid)
        .unwrap();
    let mut params = RunParams::new(2e-3, 0.04);
    params.sample_stride = 5;
    params.snapshot_every = 1;
    params.beta_list = vec![2.0];
    let traj: Trajectory = run_simulation(&ic, &params).unwrap();
    let last = traj.samples().last().unwrap();

    let report = verify_identity(IdentityId::KukavicaZiane, &ic).unwrap();
    let norm4 = lebesgue_norm(ic.component(Axis::X1), 4.0).unwrap();
    let family = FamilySpec { count: 3, seed: 7, grid };
    let estimate = estimate_constant(InequalityVariant::DistinguishedX3, 2.0, &family).unwrap();
    let criterion = evaluate_criterion(&traj, &CriterionConfig::new(vec![2.0])).unwrap();

    // Spectral coefficients of the evolved field, bit-exact.
    let final_spectrum = last
        .snapshot
        .as_ref()
        .unwrap()
        .component(Axis::X1)
        .spectral()
        .iter()
        .map(|c| (c.re.to_bits(), c.im.to_bits()))
        .collect();

    Fingerprint {
        final_spectrum,
        u_l2: last.diagnostics.u_l2.to_bits(),
        hessian_joint: last.diagnostics.hessian[0].joint.to_bits(),
        identity_rel: report.rel_residual.to_bits(),
        norm4: norm4.to_bits(),
        sup_ratio: estimate.sup_ratio.to_bits(),
        criterion_integral: criterion.per_beta[0].joint_integral().to_bits(),
    }
}

#[test]
fn parallel_and_sequential_pipelines_agree_bitwise() {
    let parallel = pipeline();
    exec::set_sequential(true);
    let sequential = pipeline();
    exec::set_sequential(false);

    assert_eq!(parallel.final_spectrum, sequential.final_spectrum);
    assert_eq!(parallel.u_l2, sequential.u_l2);
    assert_eq!(parallel.hessian_joint, sequential.hessian_joint);
    assert_eq!(parallel.identity_rel, sequential.identity_rel);
    assert_eq!(parallel.norm4, sequential.norm4);
    assert_eq!(parallel.sup_ratio, sequential.sup_ratio);
    assert_eq!(parallel.criterion_integral, sequential.criterion_integral);
}

#[test]
fn repeated_runs_are_bitwise_reproducible() {
    let a = pipeline();
    let b = pipeline();
    assert_eq!(a.u_l2, b.u_l2);
    assert_eq!(a.final_spectrum, b.final_spectrum);
    assert_eq!(a.criterion_integral, b.criterion_integral);
}
