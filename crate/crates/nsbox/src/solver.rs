//! Time integration for the incompressible equations and trajectory records.
//!
//! The momentum equation is advanced in spectral space with the classical
//! four-stage Runge-Kutta scheme applied to the nonlinear term while the
//! viscous semigroup `exp(-nu |k|^2 t)` is applied exactly per mode
//! (integrating-factor RK4).  The nonlinear term is evaluated
//! pseudospectrally in convective form and truncated to the 1/3-rule band
//! before the Leray projection, so the system that is actually integrated is
//! finite-dimensional and alias-free.
//!
//! Alongside the velocity the stepper accumulates `int ||grad u||^2 ds` with
//! the matching fourth-order quadrature (Simpson weights over the stage
//! enstrophies), which makes the discrete energy balance
//! `||u(T)||^2 + 2 nu int = ||u(0)||^2` hold to the accuracy of the scheme
//! rather than of a sampled trapezoid rule.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::Error;
use crate::exec;
use crate::fft::Fft3;
use crate::field::{deriv_freq_table, Axis, ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::norms::{lebesgue_norm, lebesgue_norm_components};
use crate::Result;

/// Default advective CFL fraction used by [`run_simulation`].
pub const DEFAULT_CFL: f64 = 0.5;

/// Relative tolerance for matching requested times against recorded samples.
pub const SAMPLE_TIME_TOL: f64 = 1e-9;

/// Spectral-space workspace shared by the right-hand side and the stepper.
struct SpectralOps {
    grid: GridSpec,
    fft: Fft3,
    /// Derivative frequency per grid index along one axis (Nyquist zeroed).
    freq: Vec<f64>,
    /// Dealias band membership per grid index along one axis.
    in_band: Vec<bool>,
}

impl SpectralOps {
    fn new(grid: GridSpec) -> Self {
        let kmax = grid.dealias_kmax();
        let in_band = (0..grid.n()).map(|m| grid.frequency(m).abs() <= kmax).collect();
        Self { grid, fft: Fft3::new(grid.n()), freq: deriv_freq_table(&grid), in_band }
    }

    /// Spectral coefficients of `d_axis s`.
    fn derivative(&self, s: &[Complex<f64>], axis: usize) -> Vec<Complex<f64>> {
        let n = self.grid.n();
        let freq = &self.freq;
        let mut out = vec![Complex::new(0.0, 0.0); s.len()];
        exec::for_each_chunk_mut(&mut out, exec::CHUNK, |start, chunk| {
            for (off, v) in chunk.iter_mut().enumerate() {
                let idx = start + off;
                let m = match axis {
                    0 => idx % n,
                    1 => (idx / n) % n,
                    _ => idx / (n * n),
                };
                *v = Complex::new(0.0, freq[m]) * s[idx];
            }
        });
        out
    }

    fn to_physical(&self, spec: &[Vec<Complex<f64>>; 3]) -> [Vec<f64>; 3] {
        [
            self.fft.inverse_real(&spec[0]),
            self.fft.inverse_real(&spec[1]),
            self.fft.inverse_real(&spec[2]),
        ]
    }

    /// Dealiased spectral coefficients of the convective term `(u.grad)u`.
    fn convective(&self, spec: &[Vec<Complex<f64>>; 3], phys: [&[f64]; 3]) -> [Vec<Complex<f64>>; 3] {
        let len = self.grid.len();
        let mut out: [Vec<Complex<f64>>; 3] = Default::default();
        for j in 0..3 {
            let mut conv = vec![0.0f64; len];
            for (i, phys_i) in phys.iter().enumerate() {
                let dij = self.fft.inverse_real(&self.derivative(&spec[j], i));
                exec::for_each_chunk_mut(&mut conv, exec::CHUNK, |start, chunk| {
                    for (off, v) in chunk.iter_mut().enumerate() {
                        *v += phys_i[start + off] * dij[start + off];
                    }
                });
            }
            out[j] = self.fft.forward(&conv);
        }
        self.mask(&mut out);
        out
    }

    /// Zero every coefficient outside the dealias band.
    fn mask(&self, c: &mut [Vec<Complex<f64>>; 3]) {
        let n = self.grid.n();
        let in_band = &self.in_band;
        let [c1, c2, c3] = c;
        exec::for_each_triple_chunk_mut(c1, c2, c3, exec::CHUNK, |start, a, b, c| {
            for off in 0..a.len() {
                let idx = start + off;
                let (m1, m2, m3) = (idx % n, (idx / n) % n, idx / (n * n));
                if !(in_band[m1] && in_band[m2] && in_band[m3]) {
                    a[off] = Complex::new(0.0, 0.0);
                    b[off] = Complex::new(0.0, 0.0);
                    c[off] = Complex::new(0.0, 0.0);
                }
            }
        });
    }

    /// Leray projection applied in place, with an optional overall negation.
    fn project(&self, c: &mut [Vec<Complex<f64>>; 3], negate: bool) {
        let n = self.grid.n();
        let freq = &self.freq;
        let sign = if negate { -1.0 } else { 1.0 };
        let [c1, c2, c3] = c;
        exec::for_each_triple_chunk_mut(c1, c2, c3, exec::CHUNK, |start, a, b, c| {
            for off in 0..a.len() {
                let idx = start + off;
                let k1 = freq[idx % n];
                let k2 = freq[(idx / n) % n];
                let k3 = freq[idx / (n * n)];
                let ksq = k1 * k1 + k2 * k2 + k3 * k3;
                if ksq > 0.0 {
                    let scale = (k1 * a[off] + k2 * b[off] + k3 * c[off]) / ksq;
                    a[off] -= k1 * scale;
                    b[off] -= k2 * scale;
                    c[off] -= k3 * scale;
                }
                a[off] *= sign;
                b[off] *= sign;
                c[off] *= sign;
            }
        });
    }

    /// `-P[dealias((u.grad)u)]` from spectral and physical views of `u`.
    fn nonlinear(&self, spec: &[Vec<Complex<f64>>; 3], phys: [&[f64]; 3]) -> [Vec<Complex<f64>>; 3] {
        let mut c = self.convective(spec, phys);
        self.project(&mut c, true);
        c
    }

    /// `(2 pi)^3 sum_k w(k) sum_c |s_c(k)|^2` with deterministic reduction.
    fn weighted_square_sum<W>(&self, spec: &[Vec<Complex<f64>>; 3], weight: W) -> f64
    where
        W: Fn(f64, f64, f64) -> f64 + Sync + Send,
    {
        let n = self.grid.n();
        let freq = &self.freq;
        let total = exec::sum_indexed(self.grid.len(), |idx| {
            let k1 = freq[idx % n];
            let k2 = freq[(idx / n) % n];
            let k3 = freq[idx / (n * n)];
            let w = weight(k1, k2, k3);
            w * (spec[0][idx].norm_sqr() + spec[1][idx].norm_sqr() + spec[2][idx].norm_sqr())
        });
        self.grid.volume() * total
    }

    /// `||grad u||^2` from spectral coefficients.
    fn enstrophy(&self, spec: &[Vec<Complex<f64>>; 3]) -> f64 {
        self.weighted_square_sum(spec, |k1, k2, k3| k1 * k1 + k2 * k2 + k3 * k3)
    }
}

fn spectral_copies(u: &VectorField) -> [Vec<Complex<f64>>; 3] {
    [
        u.component(Axis::X1).spectral().to_vec(),
        u.component(Axis::X2).spectral().to_vec(),
        u.component(Axis::X3).spectral().to_vec(),
    ]
}

fn physical_views(u: &VectorField) -> [&[f64]; 3] {
    [
        u.component(Axis::X1).physical(),
        u.component(Axis::X2).physical(),
        u.component(Axis::X3).physical(),
    ]
}

fn combine(len: usize, f: impl Fn(usize) -> Complex<f64> + Sync + Send) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); len];
    exec::for_each_chunk_mut(&mut out, exec::CHUNK, |start, chunk| {
        for (off, v) in chunk.iter_mut().enumerate() {
            *v = f(start + off);
        }
    });
    out
}

/// Three per-mode linear combinations, one per component.
fn stage<F>(len: usize, f: F) -> [Vec<Complex<f64>>; 3]
where
    F: Fn(usize, usize) -> Complex<f64> + Sync + Send,
{
    [combine(len, |i| f(0, i)), combine(len, |i| f(1, i)), combine(len, |i| f(2, i))]
}

fn all_finite(spec: &[Vec<Complex<f64>>; 3]) -> bool {
    spec.iter().all(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

fn check_viscosity(nu: f64) -> Result<()> {
    if !nu.is_finite() || nu < 0.0 {
        return Err(Error::InvalidViscosity { nu });
    }
    Ok(())
}

/// Momentum right-hand side `P[-dealias((u.grad)u)] + nu lap u`.
///
/// The field must be solenoidal; the result is again solenoidal because the
/// viscous term commutes with the projection.
pub fn rhs(u: &VectorField, nu: f64) -> Result<VectorField> {
    check_viscosity(nu)?;
    if !u.is_solenoidal() {
        return Err(Error::NotSolenoidal { divergence: u.max_spectral_divergence() });
    }
    let ops = SpectralOps::new(*u.grid());
    let spec = spectral_copies(u);
    let nl = ops.nonlinear(&spec, physical_views(u));
    let n = ops.grid.n();
    let freq = &ops.freq;
    let len = ops.grid.len();
    let build = |j: usize| {
        let nl_j = &nl[j];
        let spec_j = &spec[j];
        combine(len, |idx| {
            let k1 = freq[idx % n];
            let k2 = freq[(idx / n) % n];
            let k3 = freq[idx / (n * n)];
            nl_j[idx] - nu * (k1 * k1 + k2 * k2 + k3 * k3) * spec_j[idx]
        })
    };
    let components = [
        ScalarField::from_spectral(ops.grid, build(0))?,
        ScalarField::from_spectral(ops.grid, build(1))?,
        ScalarField::from_spectral(ops.grid, build(2))?,
    ];
    VectorField::new(components)
}

/// Pressure consistent with the dealiased momentum balance, in the mean-zero
/// gauge.
///
/// Solves `lap p = -div dealias((u.grad)u)` spectrally.  The viscous term is
/// divergence-free and contributes nothing, so no viscosity enters.
pub fn recover_pressure(u: &VectorField) -> Result<ScalarField> {
    if !u.is_solenoidal() {
        return Err(Error::NotSolenoidal { divergence: u.max_spectral_divergence() });
    }
    let ops = SpectralOps::new(*u.grid());
    let spec = spectral_copies(u);
    let conv = ops.convective(&spec, physical_views(u));
    let n = ops.grid.n();
    let freq = &ops.freq;
    let p_spec = combine(ops.grid.len(), |idx| {
        let k1 = freq[idx % n];
        let k2 = freq[(idx / n) % n];
        let k3 = freq[idx / (n * n)];
        let ksq = k1 * k1 + k2 * k2 + k3 * k3;
        if ksq > 0.0 {
            Complex::new(0.0, 1.0) * (k1 * conv[0][idx] + k2 * conv[1][idx] + k3 * conv[2][idx])
                / ksq
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    ScalarField::from_spectral(ops.grid, p_spec)
}

/// Velocity, clock, and accumulated dissipation of an evolving solution.
#[derive(Clone)]
pub struct SolverState {
    t: f64,
    u: VectorField,
    nu: f64,
    dissipation_integral: f64,
}

impl SolverState {
    /// Start from `initial` (dealiased and projected here) with the grid's
    /// viscosity.
    pub fn new(initial: &VectorField) -> Result<Self> {
        let nu = initial.grid().viscosity();
        Self::with_viscosity(initial, nu)
    }

    /// Start with an explicit viscosity; `nu = 0` gives the inviscid limit
    /// (useful as a conservation check) while the grid keeps its own value.
    pub fn with_viscosity(initial: &VectorField, nu: f64) -> Result<Self> {
        check_viscosity(nu)?;
        let u = initial.dealias().leray_project();
        Ok(Self { t: 0.0, u, nu, dissipation_integral: 0.0 })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn velocity(&self) -> &VectorField {
        &self.u
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    /// Running `int_0^t ||grad u||^2 ds`, accumulated by the stepper.
    pub fn dissipation_integral(&self) -> f64 {
        self.dissipation_integral
    }

    /// Largest stable step under the advective CFL fraction `cfl`.
    pub fn cfl_limit(&self, cfl: f64) -> f64 {
        let speed = self.u.max_speed();
        if speed > 0.0 {
            cfl * self.u.grid().spacing() / speed
        } else {
            f64::INFINITY
        }
    }

    /// One integrating-factor RK4 step of size `dt`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidTimeStep(format!("step size {dt} must be positive")));
        }
        let ops = SpectralOps::new(*self.u.grid());
        let len = ops.grid.len();
        let n = ops.grid.n();
        let nu = self.nu;

        // Half-step viscous factor per mode and its square.
        let freq = ops.freq.clone();
        let mut e = vec![0.0f64; len];
        exec::for_each_chunk_mut(&mut e, exec::CHUNK, |start, chunk| {
            for (off, v) in chunk.iter_mut().enumerate() {
                let idx = start + off;
                let k1 = freq[idx % n];
                let k2 = freq[(idx / n) % n];
                let k3 = freq[idx / (n * n)];
                *v = (-nu * (k1 * k1 + k2 * k2 + k3 * k3) * dt / 2.0).exp();
            }
        });
        let e2: Vec<f64> = e.iter().map(|v| v * v).collect();

        let s0 = spectral_copies(&self.u);
        let g1 = ops.enstrophy(&s0);
        let n1 = ops.nonlinear(&s0, physical_views(&self.u));

        let half = dt / 2.0;
        let sa = stage(len, |j, i| e[i] * (s0[j][i] + half * n1[j][i]));
        let g2 = ops.enstrophy(&sa);
        let pa = ops.to_physical(&sa);
        let n2 = ops.nonlinear(&sa, [&pa[0], &pa[1], &pa[2]]);

        let sb = stage(len, |j, i| e[i] * s0[j][i] + half * n2[j][i]);
        let g3 = ops.enstrophy(&sb);
        let pb = ops.to_physical(&sb);
        let n3 = ops.nonlinear(&sb, [&pb[0], &pb[1], &pb[2]]);

        let sc = stage(len, |j, i| e2[i] * s0[j][i] + dt * e[i] * n3[j][i]);
        let g4 = ops.enstrophy(&sc);
        let pc = ops.to_physical(&sc);
        let n4 = ops.nonlinear(&sc, [&pc[0], &pc[1], &pc[2]]);

        let sixth = dt / 6.0;
        let mut next = stage(len, |j, i| {
            e2[i] * s0[j][i] + sixth * (e2[i] * n1[j][i] + 2.0 * e[i] * (n2[j][i] + n3[j][i]) + n4[j][i])
        });
        // The stages are individually projected; re-projecting the combination
        // only removes rounding-level divergence, but keeps it from
        // accumulating over long runs.
        ops.project(&mut next, false);

        if !all_finite(&next) {
            return Err(Error::BlowUp { t: self.t + dt });
        }
        let [x1, x2, x3] = next;
        self.u = VectorField::new([
            ScalarField::from_spectral(ops.grid, x1)?,
            ScalarField::from_spectral(ops.grid, x2)?,
            ScalarField::from_spectral(ops.grid, x3)?,
        ])?;
        // Simpson weights over the stage enstrophies: fourth-order quadrature
        // of the dissipation integral, consistent with the stepper.
        self.dissipation_integral += sixth * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
        self.t += dt;
        Ok(())
    }

    /// [`SolverState::step`] guarded by the advective CFL condition.
    pub fn step_with_cfl(&mut self, dt: f64, cfl: f64) -> Result<()> {
        let limit = self.cfl_limit(cfl);
        if dt > limit {
            return Err(Error::CflViolation { dt, limit, max_speed: self.u.max_speed() });
        }
        self.step(dt)
    }
}

/// Per-exponent Lebesgue norms of the two monitored Hessian entries
/// `d1 d3 u3` and `d2 d3 u3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianDiag {
    pub beta: f64,
    /// `||d1 d3 u3||_beta`.
    pub comp_a: f64,
    /// `||d2 d3 u3||_beta`.
    pub comp_b: f64,
    /// `|| |(d1 d3 u3, d2 d3 u3)| ||_beta` (pointwise Euclidean magnitude).
    pub joint: f64,
}

/// Instantaneous norms recorded along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub u_l2: f64,
    pub grad_l2: f64,
    /// `||grad_h u||_2`, horizontal derivatives of all three components.
    pub grad_h_l2: f64,
    /// `||grad grad_h u||_2`.
    pub grad_grad_h_l2: f64,
    pub lap_l2: f64,
    pub max_divergence: f64,
    /// `int_0^t ||grad u||^2 ds` when produced by the stepper.
    pub dissipation_integral: Option<f64>,
    pub hessian: Vec<HessianDiag>,
}

/// Compute the diagnostic norms for one field.
pub fn diagnostics_for(
    u: &VectorField,
    beta_list: &[f64],
    dissipation_integral: Option<f64>,
) -> Result<Diagnostics> {
    let ops = SpectralOps::new(*u.grid());
    let spec = spectral_copies(u);
    fn sq<W>(ops: &SpectralOps, spec: &[Vec<Complex<f64>>; 3], w: W) -> f64
    where
        W: Fn(f64, f64, f64) -> f64 + Sync + Send,
    {
        ops.weighted_square_sum(spec, w).max(0.0).sqrt()
    }
    let u_l2 = sq(&ops, &spec, |_, _, _| 1.0);
    let grad_l2 = sq(&ops, &spec, |k1, k2, k3| k1 * k1 + k2 * k2 + k3 * k3);
    let grad_h_l2 = sq(&ops, &spec, |k1, k2, _| k1 * k1 + k2 * k2);
    let grad_grad_h_l2 =
        sq(&ops, &spec, |k1, k2, k3| (k1 * k1 + k2 * k2 + k3 * k3) * (k1 * k1 + k2 * k2));
    let lap_l2 = sq(&ops, &spec, |k1, k2, k3| {
        let ksq = k1 * k1 + k2 * k2 + k3 * k3;
        ksq * ksq
    });
    let a = u.hessian_entry(Axis::X1, Axis::X3, Axis::X3);
    let b = u.hessian_entry(Axis::X2, Axis::X3, Axis::X3);
    let mut hessian = Vec::with_capacity(beta_list.len());
    for &beta in beta_list {
        hessian.push(HessianDiag {
            beta,
            comp_a: lebesgue_norm(&a, beta)?,
            comp_b: lebesgue_norm(&b, beta)?,
            joint: lebesgue_norm_components(&[&a, &b], beta)?,
        });
    }
    Ok(Diagnostics {
        u_l2,
        grad_l2,
        grad_h_l2,
        grad_grad_h_l2,
        lap_l2,
        max_divergence: u.max_spectral_divergence(),
        dissipation_integral,
        hessian,
    })
}

/// One recorded instant of a run.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub step: usize,
    pub t: f64,
    pub diagnostics: Diagnostics,
    /// Full velocity field, kept only at the snapshot cadence.
    pub snapshot: Option<Arc<VectorField>>,
}

/// Why a run stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowUpReason {
    /// A non-finite coefficient appeared.
    NonFinite,
    /// The fixed step exceeded the advective CFL limit.
    CflExceeded,
}

impl fmt::Display for BlowUpReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlowUpReason::NonFinite => write!(f, "non_finite"),
            BlowUpReason::CflExceeded => write!(f, "cfl_exceeded"),
        }
    }
}

/// Terminal status of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunTerminus {
    Completed,
    /// The run stopped at `t`; the last sample holds the final sound state.
    Flagged { t: f64, reason: BlowUpReason },
}

impl RunTerminus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunTerminus::Completed)
    }
}

impl fmt::Display for RunTerminus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunTerminus::Completed => write!(f, "completed"),
            RunTerminus::Flagged { t, reason } => write!(f, "flagged:{reason}:{t}"),
        }
    }
}

/// A recorded run: sampled diagnostics, optional snapshots, and how it ended.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: GridSpec,
    nu: f64,
    beta_list: Vec<f64>,
    samples: Vec<TrajectorySample>,
    terminus: RunTerminus,
    max_divergence: f64,
}

impl Trajectory {
    /// Assemble a trajectory from parts (used when loading stored runs).
    pub fn from_parts(
        grid: GridSpec,
        nu: f64,
        beta_list: Vec<f64>,
        samples: Vec<TrajectorySample>,
        terminus: RunTerminus,
        max_divergence: f64,
    ) -> Self {
        Self { grid, nu, beta_list, samples, terminus, max_divergence }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    pub fn beta_list(&self) -> &[f64] {
        &self.beta_list
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn terminus(&self) -> RunTerminus {
        self.terminus
    }

    /// Largest spectral divergence seen at any step of the run.
    pub fn max_divergence(&self) -> f64 {
        self.max_divergence
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// The recorded sample at time `t`, matched within [`SAMPLE_TIME_TOL`].
    pub fn sample_at_time(&self, t: f64) -> Result<&TrajectorySample> {
        let tol = SAMPLE_TIME_TOL * (1.0 + t.abs());
        self.samples.iter().find(|s| (s.t - t).abs() <= tol).ok_or(Error::TimeOutOfRange {
            t,
            start: self.samples.first().map_or(0.0, |s| s.t),
            end: self.end_time(),
        })
    }

    /// Drop all snapshots, keeping the diagnostic series.
    pub fn strip_snapshots(&mut self) {
        for s in &mut self.samples {
            s.snapshot = None;
        }
    }
}

/// Knobs for [`run_simulation`].
#[derive(Clone, Debug)]
pub struct RunParams {
    pub dt: f64,
    pub t_end: f64,
    /// Record diagnostics every this many steps (plus step 0 and the end).
    pub sample_stride: usize,
    /// Keep a full snapshot every this many recorded samples; 0 disables.
    pub snapshot_every: usize,
    /// Lebesgue exponents for the Hessian diagnostics.
    pub beta_list: Vec<f64>,
    /// Advective CFL fraction; exceeding it flags the run.
    pub cfl: f64,
}

impl RunParams {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            sample_stride: 10,
            snapshot_every: 0,
            beta_list: vec![2.0],
            cfl: DEFAULT_CFL,
        }
    }
}

/// Integrate from `initial` with the grid's viscosity.
pub fn run_simulation(initial: &VectorField, params: &RunParams) -> Result<Trajectory> {
    run_simulation_from(SolverState::new(initial)?, params)
}

/// Integrate from an explicit starting state.
///
/// A CFL violation or a non-finite coefficient does not error: the run is
/// returned with a [`RunTerminus::Flagged`] terminus whose last sample is the
/// final sound state.
pub fn run_simulation_from(mut state: SolverState, params: &RunParams) -> Result<Trajectory> {
    if !params.dt.is_finite() || params.dt <= 0.0 {
        return Err(Error::InvalidTimeStep(format!("step size {} must be positive", params.dt)));
    }
    if !params.t_end.is_finite() || params.t_end <= 0.0 {
        return Err(Error::InvalidTimeStep(format!("end time {} must be positive", params.t_end)));
    }
    if params.sample_stride == 0 {
        return Err(Error::InvalidTimeStep("sample stride must be at least 1".into()));
    }
    let grid = *state.velocity().grid();
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut max_divergence = state.velocity().max_spectral_divergence();
    let mut terminus = RunTerminus::Completed;

    let record =
        |state: &SolverState, step: usize, samples: &mut Vec<TrajectorySample>| -> Result<()> {
            if samples.last().is_some_and(|s| s.step == step) {
                return Ok(());
            }
            let snapshot = (params.snapshot_every > 0
                && samples.len() % params.snapshot_every == 0)
                .then(|| Arc::new(state.velocity().clone()));
            let diagnostics = diagnostics_for(
                state.velocity(),
                &params.beta_list,
                Some(state.dissipation_integral()),
            )?;
            samples.push(TrajectorySample { step, t: state.time(), diagnostics, snapshot });
            Ok(())
        };

    record(&state, 0, &mut samples)?;
    let mut step = 0usize;
    let end_tol = 1e-12 * params.dt;
    while state.time() < params.t_end - end_tol {
        let dt = params.dt.min(params.t_end - state.time());
        let prev = state.clone();
        match state.step_with_cfl(dt, params.cfl) {
            Ok(()) => {}
            Err(Error::CflViolation { .. }) => {
                terminus =
                    RunTerminus::Flagged { t: state.time(), reason: BlowUpReason::CflExceeded };
                record(&state, step, &mut samples)?;
                break;
            }
            Err(Error::BlowUp { t }) => {
                terminus = RunTerminus::Flagged { t, reason: BlowUpReason::NonFinite };
                state = prev;
                record(&state, step, &mut samples)?;
                break;
            }
            Err(other) => return Err(other),
        }
        step += 1;
        max_divergence = max_divergence.max(state.velocity().max_spectral_divergence());
        let finished = state.time() >= params.t_end - end_tol;
        if step % params.sample_stride == 0 || finished {
            record(&state, step, &mut samples)?;
        }
    }
    // Make sure the terminal state is recorded even for degenerate parameter
    // combinations (e.g. a flag on an already-sampled step).
    record(&state, step, &mut samples)?;
    if params.snapshot_every > 0 {
        if let Some(last) = samples.last_mut() {
            if last.snapshot.is_none() {
                last.snapshot = Some(Arc::new(state.velocity().clone()));
            }
        }
    }
    Ok(Trajectory { grid, nu: state.viscosity(), beta_list: params.beta_list.clone(), samples, terminus, max_divergence })
}

/// Discrete energy balance over `[t_start, t_end]`.
///
/// `defect = ||u(t_end)||^2 + 2 nu int ||grad u||^2 - ||u(t_start)||^2`,
/// which vanishes for the exact equations.  The dissipation term is also
/// reported with a single factor of `nu` for comparison against statements
/// normalized that way.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub t_start: f64,
    pub t_end: f64,
    /// `||u(t_start)||_2^2`.
    pub kinetic_start: f64,
    /// `||u(t_end)||_2^2`.
    pub kinetic_end: f64,
    /// `2 nu int ||grad u||^2 ds`.
    pub dissipation_two_nu: f64,
    /// `nu int ||grad u||^2 ds`.
    pub dissipation_single_nu: f64,
    pub defect: f64,
    /// `|defect|` relative to the starting energy.
    pub defect_rel: f64,
}

/// Evaluate the energy balance between two recorded sample times.
pub fn energy_report(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<EnergyReport> {
    let first = traj.sample_at_time(t_start)?;
    let last = traj.sample_at_time(t_end)?;
    let d0 = first
        .diagnostics
        .dissipation_integral
        .ok_or(Error::MissingData("dissipation integral not recorded for this trajectory"))?;
    let d1 = last
        .diagnostics
        .dissipation_integral
        .ok_or(Error::MissingData("dissipation integral not recorded for this trajectory"))?;
    let kinetic_start = first.diagnostics.u_l2 * first.diagnostics.u_l2;
    let kinetic_end = last.diagnostics.u_l2 * last.diagnostics.u_l2;
    let nu = traj.viscosity();
    let dissipation_single_nu = nu * (d1 - d0);
    let dissipation_two_nu = 2.0 * dissipation_single_nu;
    let defect = kinetic_end + dissipation_two_nu - kinetic_start;
    let defect_rel = defect.abs() / kinetic_start.max(kinetic_end).max(f64::MIN_POSITIVE);
    Ok(EnergyReport {
        t_start: first.t,
        t_end: last.t,
        kinetic_start,
        kinetic_end,
        dissipation_two_nu,
        dissipation_single_nu,
        defect,
        defect_rel,
    })
}
