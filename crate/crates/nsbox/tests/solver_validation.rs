//! Longer-horizon solver invariants that are too slow for unit tests.

use nsbox::field::{generate_test_field, TestFieldKind};
use nsbox::monitor::{evaluate_criterion, CriterionConfig};
use nsbox::solver::{run_simulation, RunParams, SolverState, Trajectory};
use nsbox::GridSpec;

/// Spectral divergence must stay at the projection floor over a long run.
#[test]
fn divergence_stays_pinned_over_a_thousand_steps() {
    let grid = GridSpec::new(16, 0.05).unwrap();
    let ic = generate_test_field(TestFieldKind::RandomSolenoidal { decay: 2.0 }, 99, &grid)
        .unwrap();
    let mut params = RunParams::new(1e-3, 1.0);
    params.sample_stride = 100;
    let traj = run_simulation(&ic, &params).unwrap();
    assert!(traj.terminus().is_completed());
    assert!(
        traj.max_divergence() <= 1e-11,
        "divergence drifted to {:.3e}",
        traj.max_divergence()
    );
}

/// With zero viscosity the scheme conserves kinetic energy up to the
/// time-integration error, which at dt = 1e-3 sits far below 1e-7.
#[test]
fn inviscid_energy_drift_is_negligible() {
    let grid = GridSpec::new(16, 1.0).unwrap();
    let ic = generate_test_field(TestFieldKind::RandomSolenoidal { decay: 2.0 }, 5, &grid)
        .unwrap();
    let mut state = SolverState::with_viscosity(&ic, 0.0).unwrap();
    let e0 = {
        let d = nsbox::solver::diagnostics_for(state.velocity(), &[], None).unwrap();
        d.u_l2 * d.u_l2
    };
    for _ in 0..100 {
        state.step(1e-3).unwrap();
    }
    let e1 = {
        let d = nsbox::solver::diagnostics_for(state.velocity(), &[], None).unwrap();
        d.u_l2 * d.u_l2
    };
    let drift = ((e1 - e0) / e0).abs();
    assert!(drift <= 1e-7, "energy drift {drift:.3e}");
}

/// Subsample a trajectory's rows by the given step, always keeping the
/// endpoints, so the same run can be integrated at three resolutions.
fn subsample(traj: &Trajectory, every: usize) -> Trajectory {
    let samples: Vec<_> = traj
        .samples()
        .iter()
        .enumerate()
        .filter(|(i, _)| i % every == 0 || *i == traj.samples().len() - 1)
        .map(|(_, s)| s.clone())
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

/// The criterion integral is a trapezoid sum over sampled diagnostics, so
/// halving the sampling interval should cut the quadrature error by about
/// four; comparing three dyadic resolutions exposes that second-order decay
/// without a closed-form reference.
#[test]
fn criterion_integral_refines_at_second_order_in_the_sampling_stride() {
    let grid = GridSpec::new(16, 0.02).unwrap();
    let ic = generate_test_field(TestFieldKind::RandomSolenoidal { decay: 1.5 }, 12, &grid)
        .unwrap();
    let mut params = RunParams::new(2e-3, 0.48);
    params.sample_stride = 6;
    params.beta_list = vec![2.0];
    let traj = run_simulation(&ic, &params).unwrap();
    // 240 steps / stride 6 = 40 intervals, divisible by 4.
    assert_eq!(traj.samples().len(), 41);

    let config = CriterionConfig::new(vec![2.0]);
    let integral = |t: &Trajectory| {
        evaluate_criterion(t, &config).unwrap().per_beta[0].joint_integral()
    };
    let fine = integral(&traj);
    let mid = integral(&subsample(&traj, 2));
    let coarse = integral(&subsample(&traj, 4));

    let ratio = (coarse - mid) / (mid - fine);
    assert!(
        (2.5..6.0).contains(&ratio),
        "expected ~4x error contraction, got ratio {ratio:.3} (coarse {coarse:.6e}, mid {mid:.6e}, fine {fine:.6e})"
    );
}
