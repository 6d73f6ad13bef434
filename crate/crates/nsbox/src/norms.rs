//! Lebesgue norms on the box and mixed space–time norms along a trajectory.
//!
//! Space norms use the rectangle rule `(h^3 sum |f|^q)^(1/q)`, which is exact
//! for the band-limited products this crate produces and agrees with the
//! continuum norm to spectral accuracy otherwise.  Time integration is the
//! trapezoid rule on whatever sample times the caller pushes.  The
//! [`ExponentPair`] types pin down the two exponent families the monitor
//! works with: the Hölder-conjugate pairing `1/alpha + 1/beta = 1` for the
//! Hessian criterion and the classical `2/alpha + 3/beta = 1` scaling for the
//! baseline comparison.

use std::io::Write;

use crate::error::Error;
use crate::exec;
use crate::field::{ScalarField, VectorField};
use crate::Result;

fn check_exponent(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        Err(Error::InvalidLebesgueExponent { q })
    } else {
        Ok(())
    }
}

/// `L^q` norm of a scalar field, `q` in `[1, inf]`.
pub fn lebesgue_norm(f: &ScalarField, q: f64) -> Result<f64> {
    check_exponent(q)?;
    let phys = f.physical();
    let len = phys.len();
    let h3 = f.grid().cell_volume();
    if q == f64::INFINITY {
        return Ok(f.max_abs());
    }
    if q == 1.0 {
        return Ok(h3 * exec::sum_indexed(len, |i| phys[i].abs()));
    }
    if q == 2.0 {
        return Ok((h3 * exec::sum_indexed(len, |i| phys[i] * phys[i])).sqrt());
    }
    let s = exec::sum_indexed(len, |i| phys[i].abs().powf(q));
    Ok((h3 * s).powf(1.0 / q))
}

/// `L^q` norm of the pointwise Euclidean magnitude of a tuple of fields.
pub fn lebesgue_norm_components(fields: &[&ScalarField], q: f64) -> Result<f64> {
    check_exponent(q)?;
    let first = match fields.first() {
        Some(f) => f,
        None => return Err(Error::EmptyInput("no fields to take a norm of")),
    };
    for f in &fields[1..] {
        first.grid().check_same(f.grid())?;
    }
    let len = first.grid().len();
    let h3 = first.grid().cell_volume();
    let sq = |i: usize| -> f64 {
        fields
            .iter()
            .map(|f| {
                let v = f.physical()[i];
                v * v
            })
            .sum()
    };
    if q == f64::INFINITY {
        return Ok(exec::max_indexed(len, |i| sq(i).sqrt()));
    }
    if q == 2.0 {
        return Ok((h3 * exec::sum_indexed(len, sq)).sqrt());
    }
    let s = exec::sum_indexed(len, |i| sq(i).powf(0.5 * q));
    Ok((h3 * s).powf(1.0 / q))
}

/// `L^q` norm of the pointwise speed of a vector field.
pub fn lebesgue_norm_vector(u: &VectorField, q: f64) -> Result<f64> {
    let c = u.components();
    lebesgue_norm_components(&[&c[0], &c[1], &c[2]], q)
}

/// The time exponent conjugate to a space exponent `beta > 1` in the Hessian
/// criterion: `alpha = beta / (beta - 1)`, so `1/alpha + 1/beta = 1`.
/// `beta = inf` gives `alpha = 1`.
pub fn criterion_alpha(beta: f64) -> Result<f64> {
    if beta.is_nan() || beta <= 1.0 {
        return Err(Error::InvalidCriterionBeta { beta });
    }
    if beta.is_infinite() {
        return Ok(1.0);
    }
    Ok(beta / (beta - 1.0))
}

/// Which scaling relation an [`ExponentPair`] satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentFamily {
    /// `1/alpha + 1/beta = 1`: the pairing for the two-entry Hessian
    /// criterion.
    HessianCriterion,
    /// `2/alpha + 3/beta = 1`: the classical velocity-based baseline.
    SerrinBaseline,
}

/// A time/space exponent pair `(alpha, beta)` with its family tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    alpha: f64,
    beta: f64,
    family: ExponentFamily,
}

impl ExponentPair {
    /// Pair for the Hessian criterion at space exponent `beta` in `(1, inf]`.
    pub fn hessian_criterion(beta: f64) -> Result<Self> {
        let alpha = criterion_alpha(beta)?;
        Ok(Self { alpha, beta, family: ExponentFamily::HessianCriterion })
    }

    /// Pair for the velocity baseline at space exponent `beta` in `[3, inf]`.
    /// `beta = 3` gives `alpha = inf` (an essential supremum in time).
    pub fn serrin(beta_prime: f64) -> Result<Self> {
        if beta_prime.is_nan() || beta_prime < 3.0 {
            return Err(Error::InvalidSerrinBeta { beta_prime });
        }
        let alpha = if beta_prime == 3.0 {
            f64::INFINITY
        } else if beta_prime.is_infinite() {
            2.0
        } else {
            2.0 * beta_prime / (beta_prime - 3.0)
        };
        Ok(Self { alpha, beta: beta_prime, family: ExponentFamily::SerrinBaseline })
    }

    /// Time exponent.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Space exponent.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The family whose relation the pair satisfies.
    pub fn family(&self) -> ExponentFamily {
        self.family
    }

    /// Absolute defect in the family's exponent relation; zero in exact
    /// arithmetic, at rounding level in floats.
    pub fn relation_defect(&self) -> f64 {
        match self.family {
            ExponentFamily::HessianCriterion => (self.alpha.recip() + self.beta.recip() - 1.0).abs(),
            ExponentFamily::SerrinBaseline => {
                (2.0 * self.alpha.recip() + 3.0 * self.beta.recip() - 1.0).abs()
            }
        }
    }
}

/// One time sample of a space norm together with the running time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    /// Sample time.
    pub t: f64,
    /// Space norm at that time.
    pub value: f64,
    /// Trapezoid integral of `value^alpha` from the first sample to `t`
    /// (running supremum of `value` when `alpha = inf`).
    pub running_integral: f64,
}

/// Accumulates `||f(t)||` samples into the mixed norm
/// `( integral ||f(s)||^alpha ds )^(1/alpha)` (or `sup_t ||f(t)||` for
/// `alpha = inf`).
#[derive(Debug, Clone)]
pub struct MixedNormAccumulator {
    pair: ExponentPair,
    samples: Vec<NormSample>,
}

impl MixedNormAccumulator {
    /// Empty accumulator for the given exponent pair.
    pub fn new(pair: ExponentPair) -> Self {
        Self { pair, samples: Vec::new() }
    }

    /// Exponent pair the accumulator integrates against.
    pub fn pair(&self) -> &ExponentPair {
        &self.pair
    }

    /// The samples pushed so far.
    pub fn samples(&self) -> &[NormSample] {
        &self.samples
    }

    /// Append a sample. Times must be finite and strictly increasing; values
    /// must be finite and nonnegative.
    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 || !t.is_finite() {
            return Err(Error::InvalidNormSample { t, value });
        }
        if let Some(last) = self.samples.last() {
            if t <= last.t {
                return Err(Error::NonMonotoneTime { t, last: last.t });
            }
        }
        let alpha = self.pair.alpha;
        let running_integral = match self.samples.last() {
            None => {
                if alpha.is_infinite() {
                    value
                } else {
                    0.0
                }
            }
            Some(prev) => {
                if alpha.is_infinite() {
                    prev.running_integral.max(value)
                } else {
                    prev.running_integral
                        + 0.5 * (value.powf(alpha) + prev.value.powf(alpha)) * (t - prev.t)
                }
            }
        };
        self.samples.push(NormSample { t, value, running_integral });
        Ok(())
    }

    /// The un-rooted time integral `integral ||f||^alpha ds` over the pushed
    /// window (the supremum for `alpha = inf`); zero when empty.
    pub fn integral(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.running_integral)
    }

    /// The mixed norm: `integral()^(1/alpha)`, or the supremum for
    /// `alpha = inf`.
    pub fn value(&self) -> f64 {
        let alpha = self.pair.alpha;
        if alpha.is_infinite() {
            self.integral()
        } else {
            self.integral().powf(alpha.recip())
        }
    }

    /// Write the samples as CSV with header `t,value,running_integral`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,value,running_integral")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.t, s.value, s.running_integral)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, PERIOD};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, 0.1).expect("valid grid")
    }

    #[test]
    fn l2_norm_of_sine_is_exact() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |x1, _, _| x1.sin());
        let got = lebesgue_norm(&f, 2.0).expect("valid exponent");
        let want = 2.0 * std::f64::consts::PI.powf(1.5);
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn norms_of_a_constant_match_closed_form() {
        let g = grid(8);
        let f = ScalarField::from_fn(g, |_, _, _| -1.5);
        for q in [1.0, 2.0, 3.0, 7.5] {
            let got = lebesgue_norm(&f, q).expect("valid exponent");
            let want = 1.5 * PERIOD.powf(3.0 / q);
            assert!((got - want).abs() < 1e-12 * want, "q = {q}");
        }
        let sup = lebesgue_norm(&f, f64::INFINITY).expect("valid exponent");
        assert!((sup - 1.5).abs() < 1e-15);
    }

    #[test]
    fn component_norm_is_norm_of_magnitude() {
        let g = grid(16);
        let f1 = ScalarField::from_fn(g, |x1, _, _| (3.0f64).sqrt() * x1.cos());
        let f2 = ScalarField::from_fn(g, |x1, _, _| x1.cos());
        // magnitude = 2 |cos x1|
        let got = lebesgue_norm_components(&[&f1, &f2], 4.0).expect("valid exponent");
        let single = ScalarField::from_fn(g, |x1, _, _| 2.0 * x1.cos());
        let want = lebesgue_norm(&single, 4.0).expect("valid exponent");
        assert!((got - want).abs() < 1e-12 * want);
        let sup = lebesgue_norm_components(&[&f1, &f2], f64::INFINITY).expect("valid exponent");
        assert!((sup - 2.0).abs() < 1e-12);
    }

    #[test]
    fn norm_is_homogeneous() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |x1, x2, _| x1.sin() + 0.3 * (2.0 * x2).cos());
        for q in [1.0, 2.0, 2.5, f64::INFINITY] {
            let a = lebesgue_norm(&f.scaled(-3.25), q).expect("valid exponent");
            let b = 3.25 * lebesgue_norm(&f, q).expect("valid exponent");
            assert!((a - b).abs() < 1e-12 * b, "q = {q}");
        }
    }

    #[test]
    fn power_mean_nesting_holds_on_the_grid() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |x1, x2, x3| {
            1.0 + 0.5 * x1.sin() * x2.cos() + 0.25 * x3.sin()
        });
        let pairs = [(1.0, 2.0), (2.0, 4.0), (1.5, 6.0), (2.0, f64::INFINITY)];
        for (p, q) in pairs {
            let np = lebesgue_norm(&f, p).expect("valid exponent");
            let nq = lebesgue_norm(&f, q).expect("valid exponent");
            let factor = PERIOD.powf(3.0 * (p.recip() - q.recip()));
            assert!(np <= factor * nq * (1.0 + 1e-12), "p = {p}, q = {q}");
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        let g = grid(8);
        let f = ScalarField::zeros(g);
        assert!(lebesgue_norm(&f, 0.5).is_err());
        assert!(lebesgue_norm(&f, f64::NAN).is_err());
        assert!(lebesgue_norm_components(&[], 2.0).is_err());
    }

    #[test]
    fn refinement_leaves_band_limited_norms_unchanged() {
        let build = |g: GridSpec| {
            ScalarField::from_fn(g, |x1, x2, x3| {
                (2.0 * x1).sin() * x2.cos() + 0.4 * (3.0 * x3).cos()
            })
        };
        let coarse = build(grid(32));
        let fine = build(grid(64));
        for q in [2.0, 4.0] {
            let a = lebesgue_norm(&coarse, q).expect("valid exponent");
            let b = lebesgue_norm(&fine, q).expect("valid exponent");
            assert!((a - b).abs() < 1e-10 * b, "q = {q}");
        }
    }

    #[test]
    fn criterion_alpha_is_the_holder_conjugate() {
        for (beta, want) in [(2.0, 2.0), (4.0, 4.0 / 3.0), (f64::INFINITY, 1.0)] {
            let alpha = criterion_alpha(beta).expect("valid beta");
            assert_eq!(alpha, want);
        }
        assert!(criterion_alpha(1.0).is_err());
        assert!(criterion_alpha(0.5).is_err());
    }

    #[test]
    fn exponent_relations_close_to_machine_precision() {
        for beta in [1.01, 4.0 / 3.0, 2.0, 10.0, f64::INFINITY] {
            let pair = ExponentPair::hessian_criterion(beta).expect("valid beta");
            assert!(pair.relation_defect() <= 1e-15, "beta = {beta}");
        }
        for beta_prime in [3.0, 4.0, 5.0, 12.0, f64::INFINITY] {
            let pair = ExponentPair::serrin(beta_prime).expect("valid beta'");
            assert!(pair.relation_defect() <= 1e-15, "beta' = {beta_prime}");
        }
        assert!(ExponentPair::serrin(2.9).is_err());
    }

    #[test]
    fn serrin_endpoints_take_their_limit_values() {
        assert_eq!(ExponentPair::serrin(3.0).expect("endpoint").alpha(), f64::INFINITY);
        assert_eq!(ExponentPair::serrin(f64::INFINITY).expect("endpoint").alpha(), 2.0);
    }

    #[test]
    fn trapezoid_integral_matches_hand_computation() {
        let pair = ExponentPair::hessian_criterion(2.0).expect("valid beta");
        let mut acc = MixedNormAccumulator::new(pair);
        acc.push(0.0, 1.0).expect("first sample");
        acc.push(1.0, 3.0).expect("second sample");
        // integral of value^2 by trapezoid: (1 + 9) / 2 = 5
        assert!((acc.integral() - 5.0).abs() < 1e-15);
        assert!((acc.value() - 5.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sup_accumulator_tracks_the_running_maximum() {
        let pair = ExponentPair::serrin(3.0).expect("endpoint");
        let mut acc = MixedNormAccumulator::new(pair);
        for (t, v) in [(0.0, 0.25), (0.5, 2.0), (1.0, 1.0)] {
            acc.push(t, v).expect("sample");
        }
        assert_eq!(acc.value(), 2.0);
        assert_eq!(acc.samples()[2].running_integral, 2.0);
    }

    #[test]
    fn accumulator_rejects_bad_samples() {
        let pair = ExponentPair::hessian_criterion(2.0).expect("valid beta");
        let mut acc = MixedNormAccumulator::new(pair);
        acc.push(0.0, 1.0).expect("first sample");
        assert!(acc.push(0.0, 1.0).is_err(), "duplicate time");
        assert!(acc.push(-1.0, 1.0).is_err(), "time went backwards");
        assert!(acc.push(1.0, -0.5).is_err(), "negative value");
        assert!(acc.push(1.0, f64::NAN).is_err(), "NaN value");
        assert_eq!(acc.samples().len(), 1);
    }

    #[test]
    fn csv_has_the_documented_schema() {
        let pair = ExponentPair::hessian_criterion(2.0).expect("valid beta");
        let mut acc = MixedNormAccumulator::new(pair);
        acc.push(0.0, 1.0).expect("sample");
        acc.push(0.5, 2.0).expect("sample");
        let mut buf = Vec::new();
        acc.write_csv(&mut buf).expect("write to memory");
        let text = String::from_utf8(buf).expect("utf8");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,value,running_integral"));
        assert_eq!(lines.next(), Some("0,1,0"));
        assert_eq!(lines.next(), Some("0.5,2,1.25"));
    }
}
