//! Anisotropic trilinear inequalities: per-triple reports and empirical
//! constant estimation.
//!
//! The inequality family bounds `integral f g h dx` by a product of eight
//! norms in which one axis is distinguished: the first factor carries a
//! single directional derivative in a sharp `L^q` norm, the other two carry
//! derivatives along the remaining pair of axes in `L^2`. The exponents on
//! each argument sum to one, which fixes the scaling; no universal constant
//! is asserted anywhere — [`estimate_constant`] reports the supremum of the
//! ratio over a seeded family of compactly supported bump triples, giving a
//! reproducible empirical lower bound for the best constant.
//!
//! Compact support stands in for decay at infinity: inputs must vanish on a
//! fixed margin inside the periodic cell, which makes quadrature over the
//! box identical to whole-space integration for every integrand involved.

use crate::error::Error;
use crate::field::{
    generate_test_field, Axis, ScalarField, TestFieldKind, BUMP_MARGIN,
};
use crate::grid::{GridSpec, PERIOD};
use crate::norms::lebesgue_norm;
use crate::{exec, Result};

/// Which axis carries the distinguished single derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InequalityVariant {
    /// Distinguished derivative along `x3`; co-derivatives along `x1`, `x2`.
    DistinguishedX3,
    /// Distinguished derivative along `x1`; co-derivatives along `x2`, `x3`.
    DistinguishedX1,
}

impl InequalityVariant {
    /// Stable identifier used in CSV output and config files.
    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityVariant::DistinguishedX3 => "x3",
            InequalityVariant::DistinguishedX1 => "x1",
        }
    }

    /// Parse the config spelling.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "x3" => Ok(InequalityVariant::DistinguishedX3),
            "x1" => Ok(InequalityVariant::DistinguishedX1),
            _ => Err(Error::EmptyInput("inequality variant must be \"x3\" or \"x1\"")),
        }
    }

    /// The distinguished axis.
    pub fn distinguished_axis(&self) -> Axis {
        match self {
            InequalityVariant::DistinguishedX3 => Axis::X3,
            InequalityVariant::DistinguishedX1 => Axis::X1,
        }
    }

    /// The remaining two axes, in coordinate order.
    pub fn co_axes(&self) -> [Axis; 2] {
        match self {
            InequalityVariant::DistinguishedX3 => [Axis::X1, Axis::X2],
            InequalityVariant::DistinguishedX1 => [Axis::X2, Axis::X3],
        }
    }
}

impl std::fmt::Display for InequalityVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled norm factor with the exponent it enters the product with.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorNorm {
    /// Human-readable factor name, e.g. `d3_f_lq`.
    pub label: String,
    /// The norm value.
    pub value: f64,
    /// The exponent applied in the product.
    pub exponent: f64,
}

/// Both sides of the inequality on one triple, with the full factor list.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    /// Which variant was evaluated.
    pub variant: InequalityVariant,
    /// Interpolation parameter in `(1, 3]`.
    pub r: f64,
    /// Signed `integral f g h dx`.
    pub lhs: f64,
    /// `|lhs|`, the quantity the inequality bounds.
    pub lhs_abs: f64,
    /// The eight norm factors in report order (f, then g, then h).
    pub factors: Vec<FactorNorm>,
    /// Product of `value^exponent` over the factors (constant excluded).
    pub rhs_product: f64,
    /// `lhs_abs / rhs_product`; zero when the product vanishes (which forces
    /// the left side to vanish as well).
    pub ratio: f64,
}

/// Sharp exponent on the distinguished-derivative factor: `2/(3-r)`, read as
/// the sup norm at the `r = 3` endpoint.
pub fn distinguished_norm_exponent(r: f64) -> Result<f64> {
    check_r(r)?;
    if r == 3.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(2.0 / (3.0 - r))
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_nan() || r <= 1.0 || r > 3.0 {
        Err(Error::InvalidInterpolationR { r })
    } else {
        Ok(())
    }
}

/// Verify that a field vanishes on the boundary margin, within rounding of
/// its own amplitude.
fn check_margin(f: &ScalarField) -> Result<()> {
    let grid = *f.grid();
    let phys = f.physical();
    let amplitude = f.max_abs();
    let in_margin = move |idx: usize| {
        let (x1, x2, x3) = grid.coords(idx);
        [x1, x2, x3]
            .iter()
            .any(|&x| x < BUMP_MARGIN || x > PERIOD - BUMP_MARGIN)
    };
    let max = exec::max_indexed(phys.len(), |i| if in_margin(i) { phys[i].abs() } else { 0.0 });
    if max <= 1e-12 * amplitude {
        Ok(())
    } else {
        Err(Error::MarginViolation { max, amplitude })
    }
}

/// Evaluate one variant of the inequality on a triple of compactly supported
/// fields at interpolation parameter `r`.
pub fn inequality_report(
    variant: InequalityVariant,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    r: f64,
) -> Result<InequalityReport> {
    check_r(r)?;
    f.grid().check_same(g.grid())?;
    f.grid().check_same(h.grid())?;
    for field in [f, g, h] {
        check_margin(field)?;
    }
    let q = distinguished_norm_exponent(r)?;
    let dist = variant.distinguished_axis();
    let [co_a, co_b] = variant.co_axes();
    let e_l2 = (r - 1.0) / r;
    let e_dist = 1.0 / r;
    let e_co = 1.0 / (2.0 * r);

    let mut factors = Vec::with_capacity(8);
    factors.push(FactorNorm {
        label: "f_l2".into(),
        value: lebesgue_norm(f, 2.0)?,
        exponent: e_l2,
    });
    factors.push(FactorNorm {
        label: format!("d{}_f_lq", dist.index() + 1),
        value: lebesgue_norm(&f.partial(dist), q)?,
        exponent: e_dist,
    });
    for (name, field) in [("g", g), ("h", h)] {
        factors.push(FactorNorm {
            label: format!("{name}_l2"),
            value: lebesgue_norm(field, 2.0)?,
            exponent: e_l2,
        });
        for axis in [co_a, co_b] {
            factors.push(FactorNorm {
                label: format!("d{}_{name}_l2", axis.index() + 1),
                value: lebesgue_norm(&field.partial(axis), 2.0)?,
                exponent: e_co,
            });
        }
    }

    let (pf, pg, ph) = (f.physical(), g.physical(), h.physical());
    let lhs = f.grid().cell_volume() * exec::sum_indexed(pf.len(), |i| pf[i] * pg[i] * ph[i]);
    let lhs_abs = lhs.abs();
    let rhs_product = factors.iter().map(|fac| fac.value.powf(fac.exponent)).product();
    let ratio = if rhs_product > 0.0 { lhs_abs / rhs_product } else { 0.0 };
    Ok(InequalityReport { variant, r, lhs, lhs_abs, factors, rhs_product, ratio })
}

/// A seeded family of bump triples for constant estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    /// Number of triples.
    pub count: usize,
    /// Base seed; member `i` uses [`derive_member_seed`]`(seed, i)`.
    pub seed: u64,
    /// Grid every member is sampled on.
    pub grid: GridSpec,
}

/// Seed for family member `i`: a golden-ratio stride from the base seed, so
/// families with the same base nest as the count grows.
pub fn derive_member_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1))
}

/// The supremum of the inequality ratio over a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    /// Variant the estimate is for.
    pub variant: InequalityVariant,
    /// Interpolation parameter.
    pub r: f64,
    /// Largest ratio observed.
    pub sup_ratio: f64,
    /// Index of the maximizing triple within the family.
    pub argmax_index: usize,
    /// Seed of the maximizing triple.
    pub argmax_seed: u64,
    /// Every per-triple ratio, in family order.
    pub ratios: Vec<f64>,
}

/// Evaluate the ratio over every triple in the family and report the
/// supremum. Deterministic for a fixed spec.
pub fn estimate_constant(
    variant: InequalityVariant,
    r: f64,
    family: &FamilySpec,
) -> Result<ConstantEstimate> {
    if family.count == 0 {
        return Err(Error::EmptyInput("constant estimation needs a nonempty family"));
    }
    let mut ratios = Vec::with_capacity(family.count);
    for i in 0..family.count {
        let seed = derive_member_seed(family.seed, i);
        let triple = generate_test_field(TestFieldKind::BumpCompact, seed, &family.grid)?;
        let report = inequality_report(
            variant,
            triple.component(Axis::X1),
            triple.component(Axis::X2),
            triple.component(Axis::X3),
            r,
        )?;
        ratios.push(report.ratio);
    }
    let (argmax_index, &sup_ratio) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("ratios are finite"))
        .expect("family is nonempty");
    Ok(ConstantEstimate {
        variant,
        r,
        sup_ratio,
        argmax_index,
        argmax_seed: derive_member_seed(family.seed, argmax_index),
        ratios,
    })
}

/// The exponent set driving the a-priori estimates at space exponent `beta`:
/// the interpolation parameter `r` with `2/(3-r) = beta`, and the powers
/// carried by the gradient norm (`base`, appearing three times), the mixed
/// Hessian norm (`hessian`) and the dissipation norm (`dissipation`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverExponents {
    /// Space exponent of the Hessian norm, in `[1, inf]`.
    pub beta: f64,
    /// Interpolation parameter, `3 - 2/beta`.
    pub r: f64,
    /// Exponent on the gradient norm: `2(beta-1)/(3 beta - 2)`.
    pub base: f64,
    /// Exponent on the Hessian norm: `beta/(3 beta - 2)`.
    pub hessian: f64,
    /// Exponent on the dissipation norm: `2 beta/(3 beta - 2)`.
    pub dissipation: f64,
}

impl DriverExponents {
    /// The two bookkeeping identities the exponents satisfy:
    /// `3 base + hessian + dissipation = 3` and `2 base + dissipation = 2`.
    /// Returns the absolute defects, which sit at rounding level.
    pub fn relation_defects(&self) -> [f64; 2] {
        [
            (3.0 * self.base + self.hessian + self.dissipation - 3.0).abs(),
            (2.0 * self.base + self.dissipation - 2.0).abs(),
        ]
    }
}

/// Exponent set for a given `beta >= 1` (`beta = inf` gives the `r = 3`
/// endpoint).
pub fn driver_exponents(beta: f64) -> Result<DriverExponents> {
    if beta.is_nan() || beta < 1.0 {
        return Err(Error::InvalidCriterionBeta { beta });
    }
    if beta.is_infinite() {
        return Ok(DriverExponents {
            beta,
            r: 3.0,
            base: 2.0 / 3.0,
            hessian: 1.0 / 3.0,
            dissipation: 2.0 / 3.0,
        });
    }
    let denom = 3.0 * beta - 2.0;
    Ok(DriverExponents {
        beta,
        r: 3.0 - 2.0 / beta,
        base: 2.0 * (beta - 1.0) / denom,
        hessian: beta / denom,
        dissipation: 2.0 * beta / denom,
    })
}

/// Inverse of the `beta -> r` map: `beta = 2/(3-r)` for `r` in `(1, 3]`,
/// with `r = 3` mapping to `beta = inf`.
pub fn beta_from_r(r: f64) -> Result<f64> {
    check_r(r)?;
    if r == 3.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(2.0 / (3.0 - r))
    }
}
