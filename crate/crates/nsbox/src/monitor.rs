//! Trajectory monitor for the directional regularity criterion.
//!
//! The monitored quantity is built from exactly two entries of the velocity
//! Hessian, `d1 d3 u3` and `d2 d3 u3`, measured in `L^alpha(0,T; L^beta)`
//! with the conjugate coupling `alpha = beta/(beta-1)`.  The module evaluates
//! that mixed norm along recorded trajectories, the windowed smallness
//! quantity `int_tau^T [ ||(d1,d2) d3 u3||_beta^alpha + ||grad u||_2^2 ] ds`,
//! a Gronwall-style ratio series for the horizontal-gradient energy, and the
//! classical Serrin baseline `int ||u||_{beta'}^{alpha'} dt` for comparison.
//!
//! The distinguished direction is configurable as an axis triple `(i, j, k)`:
//! entries `d_i d_k u_k` and `d_j d_k u_k` are then monitored.  Evaluation is
//! permutation-covariant — triple `(i,j,k)` on `u` equals the default triple
//! on the axis-relabeled field — because that is how the quantity is defined.
//!
//! Two data sources are supported: the diagnostics recorded by the solver at
//! sample times (default triple only, since that is what the solver stores)
//! and full snapshots, from which everything is recomputed from scratch.  The
//! window always ends at the run's terminus: its final time, or the step at
//! which the solver flagged the discrete solution as unsound.

use crate::error::Error;
use crate::field::Axis;
use crate::norms::{criterion_alpha, lebesgue_norm_vector, ExponentPair, MixedNormAccumulator};
use crate::solver::{diagnostics_for, Diagnostics, HessianDiag, RunTerminus, Trajectory};
use crate::Result;

/// Which data the monitor consumed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionSource {
    /// Diagnostics recorded by the solver while stepping.
    StoredDiagnostics,
    /// Full velocity snapshots, recomputed here.
    Snapshots,
}

/// An ordered permutation `(i, j, k)` of the axes: the criterion monitors
/// `d_i d_k u_k` and `d_j d_k u_k`, so `k` is the distinguished direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisTriple {
    axes: [Axis; 3],
}

impl AxisTriple {
    /// The triple `(1, 2, 3)`: monitor `d1 d3 u3` and `d2 d3 u3`.
    pub const DEFAULT: Self = Self { axes: [Axis::X1, Axis::X2, Axis::X3] };

    /// Build from one-based axis labels; they must be a permutation.
    pub fn new(one_based: [usize; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        let mut axes = [Axis::X1; 3];
        for (slot, &label) in one_based.iter().enumerate() {
            let axis = Axis::from_one_based(label)
                .map_err(|_| Error::InvalidAxisTriple { triple: one_based })?;
            if seen[axis.index()] {
                return Err(Error::InvalidAxisTriple { triple: one_based });
            }
            seen[axis.index()] = true;
            axes[slot] = axis;
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> [Axis; 3] {
        self.axes
    }

    pub fn one_based(&self) -> [usize; 3] {
        [self.axes[0].index() + 1, self.axes[1].index() + 1, self.axes[2].index() + 1]
    }

    pub fn is_default(&self) -> bool {
        *self == Self::DEFAULT
    }

    /// Permutation for [`VectorField::relabel_axes`] sending the triple to
    /// `(1, 2, 3)`: original axis `i` becomes the first coordinate, `j` the
    /// second, and the distinguished axis `k` the third.
    pub fn relabel_perm(&self) -> [Axis; 3] {
        let mut perm = [Axis::X1; 3];
        for (slot, axis) in self.axes.iter().enumerate() {
            perm[axis.index()] = Axis::ALL[slot];
        }
        perm
    }
}

impl std::fmt::Display for AxisTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [i, j, k] = self.one_based();
        write!(f, "({i},{j},{k})")
    }
}

/// What to evaluate: exponents, direction, and the smallness window.
#[derive(Clone, Debug)]
pub struct CriterionConfig {
    /// Spatial exponents `beta` in `(1, inf]`; the first entry drives the
    /// smallness and Gronwall reports.
    pub beta_list: Vec<f64>,
    pub triple: AxisTriple,
    /// Left end of the smallness window.
    pub tau: f64,
    /// Smallness budget `epsilon~` the windowed quantity is compared against.
    pub epsilon: f64,
    /// Evaluate the Serrin baseline at this exponent when set.
    pub serrin_beta_prime: Option<f64>,
}

impl CriterionConfig {
    /// Window from time zero with a reporting budget of `1e-2`; the theory
    /// leaves the budget free, so this default is only a reporting anchor.
    pub fn new(beta_list: Vec<f64>) -> Self {
        Self {
            beta_list,
            triple: AxisTriple::DEFAULT,
            tau: 0.0,
            epsilon: 1e-2,
            serrin_beta_prime: None,
        }
    }
}

/// Mixed-norm series of the two monitored Hessian entries for one `beta`.
#[derive(Clone, Debug)]
pub struct BetaCriterionReport {
    pub beta: f64,
    pub alpha: f64,
    /// Pointwise Euclidean magnitude of the entry pair.
    pub joint: MixedNormAccumulator,
    /// First entry alone (`d_i d_k u_k`).
    pub comp_a: MixedNormAccumulator,
    /// Second entry alone (`d_j d_k u_k`).
    pub comp_b: MixedNormAccumulator,
}

impl BetaCriterionReport {
    /// `int ||.||_beta^alpha ds` over the whole window (un-rooted).
    pub fn joint_integral(&self) -> f64 {
        self.joint.integral()
    }

    /// The mixed norm itself (`integral^(1/alpha)`, supremum for `alpha=inf`).
    pub fn joint_value(&self) -> f64 {
        self.joint.value()
    }
}

/// The windowed smallness quantity and its verdict.
#[derive(Clone, Copy, Debug)]
pub struct SmallnessReport {
    pub tau: f64,
    pub epsilon: f64,
    /// `int_tau^T [ ||(d_i,d_j) d_k u_k||_beta^alpha + ||grad u||_2^2 ] ds`.
    pub quantity: f64,
    /// `quantity < epsilon`.
    pub holds: bool,
}

/// One interval of the Gronwall ratio series for `y = ||grad_h u||_2^2`.
///
/// The underlying differential inequality bounds `dy/dt + nu z` by an
/// unspecified constant times the driver, so the ratio series is reported
/// as-is and never turned into a pass/fail verdict.
#[derive(Clone, Copy, Debug)]
pub struct GronwallRow {
    /// Interval midpoint.
    pub t_mid: f64,
    /// Finite difference of `||grad_h u||_2^2` over the interval.
    pub ddt_grad_h_sq: f64,
    /// `nu ||grad grad_h u||_2^2`, endpoint average.
    pub visc_grad_grad_h_sq: f64,
    /// Sum of the two terms above — the left side of the inequality.
    pub lhs_growth: f64,
    /// `||grad_h u||_2^2 * ||grad u||_2 * ||entries||_beta^(beta/(2(beta-1)))`,
    /// endpoint average.
    pub driver: f64,
    /// `lhs_growth / driver`, or 0 when the driver vanishes.
    pub ratio: f64,
}

/// The Serrin-scale baseline `int ||u||_{beta'}^{alpha'} dt`.
#[derive(Clone, Debug)]
pub struct SerrinReport {
    pub beta_prime: f64,
    pub alpha_prime: f64,
    pub norms: MixedNormAccumulator,
}

impl SerrinReport {
    pub fn integral(&self) -> f64 {
        self.norms.integral()
    }

    /// `integral^(1/alpha')`; the running supremum of `||u||_3` at the
    /// endpoint `beta' = 3`.
    pub fn value(&self) -> f64 {
        self.norms.value()
    }
}

/// Everything the monitor computed for one trajectory and configuration.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub triple: AxisTriple,
    pub source: CriterionSource,
    /// Time window `[start, end]` the integrals cover; the right end is the
    /// run's terminus (final time or the flagged step).
    pub window: (f64, f64),
    pub per_beta: Vec<BetaCriterionReport>,
    /// Smallness for the first configured `beta`.
    pub smallness: SmallnessReport,
    /// Gronwall series for the first configured `beta`; empty when fewer
    /// than three samples were available.
    pub gronwall: Vec<GronwallRow>,
    pub serrin: Option<SerrinReport>,
    pub terminus: RunTerminus,
}

/// Time-stamped diagnostics rows the monitor consumes.
type Rows = Vec<(f64, Diagnostics)>;

fn hessian_for(d: &Diagnostics, beta: f64) -> Result<&HessianDiag> {
    d.hessian
        .iter()
        .find(|h| h.beta == beta)
        .ok_or(Error::MissingData("requested beta not present in stored diagnostics"))
}

/// Rows straight from the solver's recorded diagnostics; requires every
/// requested `beta` at every sample.
fn stored_rows(traj: &Trajectory, beta_list: &[f64]) -> Result<Rows> {
    if traj.samples().is_empty() {
        return Err(Error::EmptyInput("trajectory has no samples"));
    }
    for s in traj.samples() {
        for &beta in beta_list {
            hessian_for(&s.diagnostics, beta)?;
        }
    }
    Ok(traj.samples().iter().map(|s| (s.t, s.diagnostics.clone())).collect())
}

/// Rows recomputed from snapshots, relabeled so the requested triple becomes
/// the default one.
fn snapshot_rows(traj: &Trajectory, triple: AxisTriple, beta_list: &[f64]) -> Result<Rows> {
    let perm = triple.relabel_perm();
    let mut rows = Vec::new();
    for s in traj.samples() {
        let Some(snapshot) = &s.snapshot else { continue };
        let relabeled = snapshot.relabel_axes(perm)?;
        rows.push((s.t, diagnostics_for(&relabeled, beta_list, None)?));
    }
    if rows.is_empty() {
        return Err(Error::MissingData(
            "criterion evaluation needs stored diagnostics for the default triple or snapshots",
        ));
    }
    Ok(rows)
}

fn window_of(rows: &Rows) -> (f64, f64) {
    (rows.first().map_or(0.0, |r| r.0), rows.last().map_or(0.0, |r| r.0))
}

fn per_beta_report(rows: &Rows, beta: f64) -> Result<BetaCriterionReport> {
    let alpha = criterion_alpha(beta)?;
    let pair = ExponentPair::hessian_criterion(beta)?;
    let mut joint = MixedNormAccumulator::new(pair.clone());
    let mut comp_a = MixedNormAccumulator::new(pair.clone());
    let mut comp_b = MixedNormAccumulator::new(pair);
    for (t, d) in rows {
        let h = hessian_for(d, beta)?;
        joint.push(*t, h.joint)?;
        comp_a.push(*t, h.comp_a)?;
        comp_b.push(*t, h.comp_b)?;
    }
    Ok(BetaCriterionReport { beta, alpha, joint, comp_a, comp_b })
}

fn smallness_from_rows(rows: &Rows, beta: f64, tau: f64, epsilon: f64) -> Result<SmallnessReport> {
    let alpha = criterion_alpha(beta)?;
    let (start, end) = window_of(rows);
    let tol = crate::solver::SAMPLE_TIME_TOL * (1.0 + tau.abs());
    if tau < start - tol || tau > end + tol {
        return Err(Error::TimeOutOfRange { t: tau, start, end });
    }
    let tau = tau.clamp(start, end);
    // Integrand at each sample; the window integral is a trapezoid rule with
    // the integrand interpolated linearly at tau, which makes the quantity
    // exactly nonincreasing in tau.
    let phi: Vec<(f64, f64)> = rows
        .iter()
        .map(|(t, d)| {
            let h = hessian_for(d, beta)?;
            let hess = if alpha.is_infinite() { h.joint } else { h.joint.powf(alpha) };
            Ok((*t, hess + d.grad_l2 * d.grad_l2))
        })
        .collect::<Result<_>>()?;
    let mut quantity = 0.0;
    for pair in phi.windows(2) {
        let (t0, f0) = pair[0];
        let (t1, f1) = pair[1];
        if t1 <= tau {
            continue;
        }
        let (left_t, left_f) = if t0 < tau {
            let s = (tau - t0) / (t1 - t0);
            (tau, f0 + s * (f1 - f0))
        } else {
            (t0, f0)
        };
        quantity += 0.5 * (left_f + f1) * (t1 - left_t);
    }
    Ok(SmallnessReport { tau, epsilon, quantity, holds: quantity < epsilon })
}

/// Exponent on the Hessian norm inside the Gronwall driver.
fn gronwall_exponent(beta: f64) -> f64 {
    if beta.is_infinite() {
        0.5
    } else {
        beta / (2.0 * (beta - 1.0))
    }
}

fn gronwall_from_rows(rows: &Rows, nu: f64, beta: f64) -> Result<Vec<GronwallRow>> {
    if rows.len() < 3 {
        return Err(Error::MissingData("gronwall diagnostics need at least three samples"));
    }
    let e = gronwall_exponent(beta);
    let driver_at = |d: &Diagnostics| -> Result<f64> {
        let h = hessian_for(d, beta)?;
        Ok(d.grad_h_l2 * d.grad_h_l2 * d.grad_l2 * h.joint.powf(e))
    };
    let mut out = Vec::with_capacity(rows.len() - 1);
    for pair in rows.windows(2) {
        let (t0, d0) = &pair[0];
        let (t1, d1) = &pair[1];
        let dt = t1 - t0;
        let ddt_grad_h_sq = (d1.grad_h_l2 * d1.grad_h_l2 - d0.grad_h_l2 * d0.grad_h_l2) / dt;
        let visc_grad_grad_h_sq = nu
            * 0.5
            * (d0.grad_grad_h_l2 * d0.grad_grad_h_l2 + d1.grad_grad_h_l2 * d1.grad_grad_h_l2);
        let lhs_growth = ddt_grad_h_sq + visc_grad_grad_h_sq;
        let driver = 0.5 * (driver_at(d0)? + driver_at(d1)?);
        let ratio = if driver > 0.0 { lhs_growth / driver } else { 0.0 };
        out.push(GronwallRow {
            t_mid: 0.5 * (t0 + t1),
            ddt_grad_h_sq,
            visc_grad_grad_h_sq,
            lhs_growth,
            driver,
            ratio,
        });
    }
    Ok(out)
}

fn serrin_from_snapshots(traj: &Trajectory, beta_prime: f64) -> Result<SerrinReport> {
    let pair = ExponentPair::serrin(beta_prime)?;
    let alpha_prime = pair.alpha();
    let mut norms = MixedNormAccumulator::new(pair);
    let mut pushed = false;
    for s in traj.samples() {
        let Some(snapshot) = &s.snapshot else { continue };
        norms.push(s.t, lebesgue_norm_vector(snapshot, beta_prime)?)?;
        pushed = true;
    }
    if !pushed {
        return Err(Error::MissingData("the Serrin baseline needs snapshots"));
    }
    Ok(SerrinReport { beta_prime, alpha_prime, norms })
}

/// True when the stored diagnostics can serve this configuration: default
/// triple and every requested `beta` recorded at every sample.
fn stored_diagnostics_cover(traj: &Trajectory, config: &CriterionConfig) -> bool {
    config.triple.is_default()
        && !traj.samples().is_empty()
        && traj.samples().iter().all(|s| {
            config.beta_list.iter().all(|b| s.diagnostics.hessian.iter().any(|h| h.beta == *b))
        })
}

/// Evaluate the criterion over a recorded trajectory.
///
/// Uses stored diagnostics when they cover the request (default triple, all
/// exponents recorded); otherwise recomputes from snapshots, relabeling axes
/// so the requested triple becomes the default one.  Errors when neither
/// source is available.
pub fn evaluate_criterion(traj: &Trajectory, config: &CriterionConfig) -> Result<CriterionReport> {
    if config.beta_list.is_empty() {
        return Err(Error::EmptyInput("criterion beta list"));
    }
    for &beta in &config.beta_list {
        criterion_alpha(beta)?;
    }
    let (source, rows) = if stored_diagnostics_cover(traj, config) {
        (CriterionSource::StoredDiagnostics, stored_rows(traj, &config.beta_list)?)
    } else {
        (CriterionSource::Snapshots, snapshot_rows(traj, config.triple, &config.beta_list)?)
    };
    let per_beta: Vec<BetaCriterionReport> =
        config.beta_list.iter().map(|&b| per_beta_report(&rows, b)).collect::<Result<_>>()?;
    let lead_beta = config.beta_list[0];
    let smallness = smallness_from_rows(&rows, lead_beta, config.tau, config.epsilon)?;
    let gronwall = if rows.len() >= 3 {
        gronwall_from_rows(&rows, traj.viscosity(), lead_beta)?
    } else {
        Vec::new()
    };
    let serrin = match config.serrin_beta_prime {
        Some(beta_prime) => Some(serrin_from_snapshots(traj, beta_prime)?),
        None => None,
    };
    Ok(CriterionReport {
        triple: config.triple,
        source,
        window: window_of(&rows),
        per_beta,
        smallness,
        gronwall,
        serrin,
        terminus: traj.terminus(),
    })
}

/// The windowed smallness quantity from stored diagnostics (default triple).
pub fn smallness_window(
    traj: &Trajectory,
    tau: f64,
    beta: f64,
    epsilon: f64,
) -> Result<SmallnessReport> {
    let rows = stored_rows(traj, &[beta])?;
    smallness_from_rows(&rows, beta, tau, epsilon)
}

/// The Gronwall ratio series from stored diagnostics (default triple).
pub fn gronwall_diagnostics(traj: &Trajectory, beta: f64) -> Result<Vec<GronwallRow>> {
    criterion_alpha(beta)?;
    let rows = stored_rows(traj, &[beta])?;
    gronwall_from_rows(&rows, traj.viscosity(), beta)
}

/// The Serrin baseline `int ||u||_{beta'}^{alpha'} dt` from snapshots.
pub fn serrin_baseline(traj: &Trajectory, beta_prime: f64) -> Result<SerrinReport> {
    serrin_from_snapshots(traj, beta_prime)
}
