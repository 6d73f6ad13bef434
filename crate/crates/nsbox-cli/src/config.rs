//! TOML run configuration with defaults for every knob.
//!
//! Every section may be omitted; an absent `--config` means "all defaults".
//! Infinite exponents use the TOML float literal `inf`.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use nsbox::field::TestFieldKind;
use nsbox::inequalities::InequalityVariant;
use nsbox::monitor::{AxisTriple, CriterionConfig};
use nsbox::solver::{RunParams, DEFAULT_CFL};
use nsbox::{GridSpec, VectorField};

use crate::Failure;

fn default_n() -> usize {
    32
}
fn default_viscosity() -> f64 {
    0.05
}

/// `[grid]`: discretization and fluid viscosity.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Points per axis; even, at least 8.
    pub n: usize,
    pub viscosity: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: default_n(), viscosity: default_viscosity() }
    }
}

/// `[initial]`: which velocity field a run starts from.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// `taylor_green_2d`, `abc_flow`, `random_solenoidal`, or `bump_compact`.
    pub kind: String,
    pub seed: u64,
    /// Spectral decay exponent for `random_solenoidal`.
    pub decay: f64,
    /// Uniform scale applied to the generated field.
    pub amplitude: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { kind: "taylor_green_2d".into(), seed: 1, decay: 2.0, amplitude: 1.0 }
    }
}

/// `[time]`: stepping and recording cadence.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded diagnostics (step 0 and the end are always kept).
    pub sample_stride: usize,
    /// Keep a full snapshot every this many recorded samples; 0 disables.
    pub snapshot_every: usize,
    /// Advective CFL fraction; exceeding it flags the run.
    pub cfl: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, sample_stride: 10, snapshot_every: 0, cfl: DEFAULT_CFL }
    }
}

/// `[criterion]`: the regularity quantity to monitor.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriterionSection {
    /// Space exponents in `(1, inf]`; the first drives smallness and Gronwall.
    pub betas: Vec<f64>,
    /// One-based axis permutation `(i, j, k)`; the monitored entries are
    /// `d_i d_k u_k` and `d_j d_k u_k`.
    pub triple: [usize; 3],
    /// Left end of the smallness window.
    pub tau: f64,
    /// Smallness budget the windowed quantity is reported against.
    pub epsilon: f64,
    /// Evaluate the Serrin baseline at this exponent (needs snapshots).
    pub serrin_beta_prime: Option<f64>,
}

impl Default for CriterionSection {
    fn default() -> Self {
        Self { betas: vec![2.0], triple: [1, 2, 3], tau: 0.0, epsilon: 1e-2, serrin_beta_prime: None }
    }
}

/// `[identities]`: the exact-identity verification sweep.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesSection {
    pub seeds: Vec<u64>,
    /// Grid sizes to run the sweep on.
    pub sizes: Vec<usize>,
    /// Spectral decay of the random solenoidal inputs.
    pub decay: f64,
    /// Relative-residual gate for projected fields.
    pub gate: f64,
    /// Also evaluate raw (non-projected) draws, which must FAIL the identity.
    pub negative_control: bool,
    /// Residual every control draw must exceed.
    pub control_gate: f64,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        Self {
            seeds: vec![1, 2, 3, 4, 5],
            sizes: vec![32],
            decay: 2.0,
            gate: 1e-10,
            negative_control: true,
            control_gate: 1e-3,
        }
    }
}

/// `[inequalities]`: the constant-estimation sweep.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitiesSection {
    /// `x3` and/or `x1`.
    pub variants: Vec<String>,
    /// Interpolation parameters in `(1, 3]`.
    pub r_list: Vec<f64>,
    /// Bump triples per family.
    pub family_count: usize,
    pub family_seed: u64,
    pub sizes: Vec<usize>,
}

impl Default for InequalitiesSection {
    fn default() -> Self {
        Self {
            variants: vec!["x3".into(), "x1".into()],
            r_list: vec![1.25, 1.5, 2.0, 2.5, 3.0],
            family_count: 20,
            family_seed: 42,
            sizes: vec![32],
        }
    }
}

/// `[convergence]`: the perturbed self-convergence study.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    /// Step sizes to measure, coarsest first.
    pub dt_list: Vec<f64>,
    /// Step size of the reference run; must be smaller than all of `dt_list`.
    pub reference_dt: f64,
    pub t_end: f64,
    /// Amplitude of the random solenoidal perturbation added to the base flow.
    pub perturbation: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self { dt_list: vec![8e-3, 4e-3, 2e-3], reference_dt: 1e-3, t_end: 0.25, perturbation: 0.05 }
    }
}

/// The whole configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub grid: GridSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    pub criterion: CriterionSection,
    pub identities: IdentitiesSection,
    pub inequalities: InequalitiesSection,
    pub convergence: ConvergenceSection,
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl Config {
    /// Load from a file, or all defaults when `path` is `None`. Returns the
    /// config together with the sha256 of the bytes it was parsed from.
    pub fn load(path: Option<&Path>) -> Result<(Self, String), Failure> {
        let bytes = match path {
            Some(p) => fs::read(p)
                .map_err(|e| config_err(format!("cannot read config {}: {e}", p.display())))?,
            None => Vec::new(),
        };
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| config_err("config file is not valid UTF-8"))?;
        let config: Config =
            toml::from_str(&text).map_err(|e| config_err(format!("config parse error: {e}")))?;
        Ok((config, crate::output::sha256_hex(&bytes)))
    }

    /// Rebase every seed in the file from a single override.
    pub fn rebase_seeds(&mut self, seed: u64) {
        self.initial.seed = seed;
        self.inequalities.family_seed = seed;
        self.identities.seeds =
            (0..self.identities.seeds.len() as u64).map(|i| seed + i).collect();
    }

    pub fn grid_spec(&self) -> Result<GridSpec, Failure> {
        GridSpec::new(self.grid.n, self.grid.viscosity)
            .map_err(|e| config_err(format!("[grid]: {e}")))
    }

    pub fn initial_field(&self, grid: &GridSpec) -> Result<VectorField, Failure> {
        let kind = TestFieldKind::parse(&self.initial.kind, self.initial.decay)
            .map_err(|e| config_err(format!("[initial]: {e}")))?;
        let field = nsbox::generate_test_field(kind, self.initial.seed, grid)
            .map_err(|e| config_err(format!("[initial]: {e}")))?;
        if !self.initial.amplitude.is_finite() {
            return Err(config_err("[initial]: amplitude must be finite"));
        }
        Ok(if self.initial.amplitude == 1.0 { field } else { field.scaled(self.initial.amplitude) })
    }

    pub fn run_params(&self) -> Result<RunParams, Failure> {
        let t = &self.time;
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return Err(config_err("[time]: dt must be positive"));
        }
        if !(t.t_end.is_finite() && t.t_end > 0.0) {
            return Err(config_err("[time]: t_end must be positive"));
        }
        if t.sample_stride == 0 {
            return Err(config_err("[time]: sample_stride must be at least 1"));
        }
        let mut params = RunParams::new(t.dt, t.t_end);
        params.sample_stride = t.sample_stride;
        params.snapshot_every = t.snapshot_every;
        params.cfl = t.cfl;
        params.beta_list = self.criterion.betas.clone();
        Ok(params)
    }

    pub fn criterion_config(&self) -> Result<CriterionConfig, Failure> {
        let c = &self.criterion;
        if c.betas.is_empty() {
            return Err(config_err("[criterion]: betas must be nonempty"));
        }
        for &beta in &c.betas {
            if !(beta > 1.0) {
                return Err(config_err(format!("[criterion]: beta {beta} must be > 1")));
            }
        }
        let triple = AxisTriple::new(c.triple)
            .map_err(|e| config_err(format!("[criterion]: {e}")))?;
        let mut config = CriterionConfig::new(c.betas.clone());
        config.triple = triple;
        config.tau = c.tau;
        config.epsilon = c.epsilon;
        config.serrin_beta_prime = c.serrin_beta_prime;
        Ok(config)
    }

    /// Monitor runs that need snapshots (non-default triple, Serrin baseline)
    /// must have them enabled; catch that before spending a simulation on it.
    pub fn check_monitor_feasible(&self) -> Result<(), Failure> {
        let needs_snapshots =
            self.criterion.triple != [1, 2, 3] || self.criterion.serrin_beta_prime.is_some();
        if needs_snapshots && self.time.snapshot_every == 0 {
            return Err(config_err(
                "[criterion]: a non-default triple or a Serrin baseline is evaluated from \
                 snapshots; set [time].snapshot_every to a positive value",
            ));
        }
        Ok(())
    }

    pub fn inequality_variants(&self) -> Result<Vec<InequalityVariant>, Failure> {
        if self.inequalities.variants.is_empty() {
            return Err(config_err("[inequalities]: variants must be nonempty"));
        }
        self.inequalities
            .variants
            .iter()
            .map(|s| {
                InequalityVariant::parse(s)
                    .map_err(|_| config_err(format!("[inequalities]: unknown variant {s:?}")))
            })
            .collect()
    }

    pub fn check_convergence(&self) -> Result<(), Failure> {
        let c = &self.convergence;
        if c.dt_list.is_empty() {
            return Err(config_err("[convergence]: dt_list must be nonempty"));
        }
        for &dt in &c.dt_list {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(config_err(format!("[convergence]: dt {dt} must be positive")));
            }
            if c.reference_dt >= dt {
                return Err(config_err(format!(
                    "[convergence]: reference_dt {} must be smaller than every dt (got {dt})",
                    c.reference_dt
                )));
            }
        }
        if !(c.t_end.is_finite() && c.t_end > 0.0) {
            return Err(config_err("[convergence]: t_end must be positive"));
        }
        if !c.perturbation.is_finite() {
            return Err(config_err("[convergence]: perturbation must be finite"));
        }
        Ok(())
    }
}
