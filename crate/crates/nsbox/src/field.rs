//! Scalar and vector fields on the periodic box.
//!
//! A [`ScalarField`] keeps both the physical samples and the Fourier
//! coefficients of a function, so grid-point arithmetic and exact spectral
//! calculus are both one call away.  [`VectorField`] bundles three components
//! with a measured solenoidality flag, the Leray projection, and the mixed
//! second derivatives the regularity monitor consumes.  The module also ships
//! the canned initial data used throughout the test and verification suites
//! (Taylor–Green, ABC, seeded random band-limited fields, compactly supported
//! bumps) and a bit-exact binary snapshot format.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::exec;
use crate::fft::Fft3;
use crate::grid::{GridSpec, PERIOD};
use crate::Result;

/// Relative threshold on `max_k |k . u_hat(k)|` below which a vector field is
/// considered divergence-free.
pub const SOLENOIDAL_REL_TOL: f64 = 1e-12;

/// Magic bytes at the head of a field snapshot.
const SNAPSHOT_MAGIC: [u8; 4] = *b"NSFD";
/// Snapshot format version written by this crate.
const SNAPSHOT_VERSION: u32 = 1;

/// A coordinate axis of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    /// All three axes in coordinate order.
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    /// Zero-based index of the axis.
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
        }
    }

    /// Axis from a zero-based index.
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Axis::X1),
            1 => Ok(Axis::X2),
            2 => Ok(Axis::X3),
            _ => Err(Error::InvalidAxisTriple { triple: [i, i, i] }),
        }
    }

    /// Axis from the one-based label used in configs (`1`, `2`, `3`).
    pub fn from_one_based(i: usize) -> Result<Self> {
        if (1..=3).contains(&i) {
            Axis::from_index(i - 1)
        } else {
            Err(Error::InvalidAxisTriple { triple: [i, i, i] })
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.index() + 1)
    }
}

/// Signed frequency used by derivative multipliers: the Nyquist column (only
/// present above the dealias band) has no well-defined odd derivative on a
/// real grid, so its multiplier is zeroed.
pub(crate) fn deriv_freq(grid: &GridSpec, m: usize) -> f64 {
    if 2 * m == grid.n() {
        0.0
    } else {
        grid.frequency(m) as f64
    }
}

/// Per-axis table of derivative frequencies.
pub(crate) fn deriv_freq_table(grid: &GridSpec) -> Vec<f64> {
    (0..grid.n()).map(|m| deriv_freq(grid, m)).collect()
}

/// A real scalar function sampled on the grid, stored in both physical and
/// spectral form.
///
/// The two views are kept consistent by construction: every operation that
/// produces a field computes one view and transforms to fill in the other.
/// Spectral coefficients follow the convention `f(x) = sum_k fhat(k) e^{i k.x}`.
#[derive(Clone)]
pub struct ScalarField {
    grid: GridSpec,
    physical: Vec<f64>,
    spectral: Vec<Complex<f64>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.grid.n())
            .field("mean", &self.mean())
            .finish()
    }
}

impl ScalarField {
    /// Field from physical samples in x1-fastest linear order.
    pub fn from_physical(grid: GridSpec, physical: Vec<f64>) -> Result<Self> {
        if physical.len() != grid.len() {
            return Err(Error::EmptyInput("physical sample count does not match the grid"));
        }
        let spectral = Fft3::new(grid.n()).forward(&physical);
        Ok(Self { grid, physical, spectral })
    }

    /// Field from Fourier coefficients in x1-fastest linear order.
    ///
    /// The coefficients are taken as given; if they are not Hermitian the
    /// imaginary part of the inverse transform is silently dropped.
    pub fn from_spectral(grid: GridSpec, spectral: Vec<Complex<f64>>) -> Result<Self> {
        if spectral.len() != grid.len() {
            return Err(Error::EmptyInput("spectral coefficient count does not match the grid"));
        }
        let physical = Fft3::new(grid.n()).inverse_real(&spectral);
        Ok(Self { grid, physical, spectral })
    }

    /// The zero field.
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            physical: vec![0.0; grid.len()],
            spectral: vec![Complex::new(0.0, 0.0); grid.len()],
        }
    }

    /// Field sampled from a closure of the grid coordinates.
    pub fn from_fn<F: Fn(f64, f64, f64) -> f64 + Sync>(grid: GridSpec, f: F) -> Self {
        let mut physical = vec![0.0; grid.len()];
        exec::for_each_chunk_mut(&mut physical, exec::CHUNK, |start, chunk| {
            for (offset, value) in chunk.iter_mut().enumerate() {
                let (x1, x2, x3) = grid.coords(start + offset);
                *value = f(x1, x2, x3);
            }
        });
        let spectral = Fft3::new(grid.n()).forward(&physical);
        Self { grid, physical, spectral }
    }

    /// Grid the field lives on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Physical samples in x1-fastest order.
    pub fn physical(&self) -> &[f64] {
        &self.physical
    }

    /// Fourier coefficients in x1-fastest order.
    pub fn spectral(&self) -> &[Complex<f64>] {
        &self.spectral
    }

    /// Mean of the field over the box (the zero-mode coefficient).
    pub fn mean(&self) -> f64 {
        self.spectral[0].re
    }

    /// Maximum absolute physical value.
    pub fn max_abs(&self) -> f64 {
        let physical = &self.physical;
        exec::max_indexed(physical.len(), |i| physical[i].abs())
    }

    /// Maximum spectral amplitude `max_k |fhat(k)|`.
    pub fn max_spectral_abs(&self) -> f64 {
        let spectral = &self.spectral;
        exec::max_indexed(spectral.len(), |i| spectral[i].norm())
    }

    /// New field with coefficients `m(k1, k2, k3) * fhat(k)`.
    ///
    /// The multiplier receives derivative frequencies (Nyquist zeroed), which
    /// is what every caller in this crate wants.
    fn apply_multiplier<F: Fn(f64, f64, f64) -> Complex<f64> + Sync>(&self, m: F) -> Self {
        let n = self.grid.n();
        let table = deriv_freq_table(&self.grid);
        let spectral_in = &self.spectral;
        let mut spectral = vec![Complex::new(0.0, 0.0); self.grid.len()];
        exec::for_each_chunk_mut(&mut spectral, exec::CHUNK, |start, chunk| {
            for (offset, value) in chunk.iter_mut().enumerate() {
                let idx = start + offset;
                let m1 = idx % n;
                let m2 = (idx / n) % n;
                let m3 = idx / (n * n);
                *value = m(table[m1], table[m2], table[m3]) * spectral_in[idx];
            }
        });
        let physical = Fft3::new(n).inverse_real(&spectral);
        Self { grid: self.grid, physical, spectral }
    }

    /// Exact spectral partial derivative along one axis.
    pub fn partial(&self, axis: Axis) -> Self {
        match axis {
            Axis::X1 => self.apply_multiplier(|k1, _, _| Complex::new(0.0, k1)),
            Axis::X2 => self.apply_multiplier(|_, k2, _| Complex::new(0.0, k2)),
            Axis::X3 => self.apply_multiplier(|_, _, k3| Complex::new(0.0, k3)),
        }
    }

    /// Exact mixed second derivative `d_i d_j f`.
    pub fn second_partial(&self, i: Axis, j: Axis) -> Self {
        let pick = |k1: f64, k2: f64, k3: f64, axis: Axis| match axis {
            Axis::X1 => k1,
            Axis::X2 => k2,
            Axis::X3 => k3,
        };
        self.apply_multiplier(move |k1, k2, k3| {
            Complex::new(-pick(k1, k2, k3, i) * pick(k1, k2, k3, j), 0.0)
        })
    }

    /// Gradient in the first two coordinates.
    pub fn horizontal_gradient(&self) -> (Self, Self) {
        (self.partial(Axis::X1), self.partial(Axis::X2))
    }

    /// Laplacian in the first two coordinates.
    pub fn horizontal_laplacian(&self) -> Self {
        self.apply_multiplier(|k1, k2, _| Complex::new(-(k1 * k1 + k2 * k2), 0.0))
    }

    /// Full Laplacian.
    pub fn laplacian(&self) -> Self {
        self.apply_multiplier(|k1, k2, k3| Complex::new(-(k1 * k1 + k2 * k2 + k3 * k3), 0.0))
    }

    /// Zero every coefficient outside the dealias band `max_i |k_i| <= kmax`.
    pub fn dealias(&self) -> Self {
        // Band membership must be judged on true frequencies: the Nyquist
        // column (derivative multiplier zero) lies outside the band but picks
        // up aliased content from quadratic products, so it has to go too.
        let grid = self.grid;
        let n = grid.n();
        let kmax = grid.dealias_kmax();
        let keep: Vec<bool> = (0..n).map(|m| grid.frequency(m).abs() <= kmax).collect();
        let mut spectral = self.spectral.clone();
        exec::for_each_chunk_mut(&mut spectral, exec::CHUNK, |start, chunk| {
            for (off, v) in chunk.iter_mut().enumerate() {
                let idx = start + off;
                let (m1, m2, m3) = (idx % n, (idx / n) % n, idx / (n * n));
                if !(keep[m1] && keep[m2] && keep[m3]) {
                    *v = Complex::new(0.0, 0.0);
                }
            }
        });
        Self::from_spectral(grid, spectral).expect("dealiasing preserves the layout")
    }

    /// Field scaled by a constant (both views, no transform).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        exec::for_each_chunk_mut(&mut out.physical, exec::CHUNK, |_, chunk| {
            for value in chunk.iter_mut() {
                *value *= c;
            }
        });
        exec::for_each_chunk_mut(&mut out.spectral, exec::CHUNK, |_, chunk| {
            for value in chunk.iter_mut() {
                *value *= c;
            }
        });
        out
    }

    /// Pointwise sum with another field on the same grid.
    pub fn added(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        exec::for_each_chunk_mut(&mut out.physical, exec::CHUNK, |start, chunk| {
            for (offset, value) in chunk.iter_mut().enumerate() {
                *value += other.physical[start + offset];
            }
        });
        exec::for_each_chunk_mut(&mut out.spectral, exec::CHUNK, |start, chunk| {
            for (offset, value) in chunk.iter_mut().enumerate() {
                *value += other.spectral[start + offset];
            }
        });
        Ok(out)
    }

    /// Pointwise difference with another field on the same grid.
    pub fn subbed(&self, other: &Self) -> Result<Self> {
        self.added(&other.scaled(-1.0))
    }

    /// Field translated by a whole number of grid cells along each axis:
    /// the result samples `f(x - s*h)`.
    pub fn translated(&self, shift: [usize; 3]) -> Self {
        let n = self.grid.n();
        let mut physical = vec![0.0; self.grid.len()];
        for m3 in 0..n {
            for m2 in 0..n {
                for m1 in 0..n {
                    let src = self.grid.index(m1, m2, m3);
                    let dst = self.grid.index(
                        (m1 + shift[0]) % n,
                        (m2 + shift[1]) % n,
                        (m3 + shift[2]) % n,
                    );
                    physical[dst] = self.physical[src];
                }
            }
        }
        let spectral = Fft3::new(n).forward(&physical);
        Self { grid: self.grid, physical, spectral }
    }

    /// Field with coordinates relabeled: axis `a` of the input becomes axis
    /// `perm[a]` of the output, i.e. the result `g` satisfies
    /// `g(y) = f(x)` with `y_{perm[a]} = x_a`.
    pub fn relabel_axes(&self, perm: [Axis; 3]) -> Result<Self> {
        let p = [perm[0].index(), perm[1].index(), perm[2].index()];
        if p[0] == p[1] || p[0] == p[2] || p[1] == p[2] {
            return Err(Error::InvalidAxisTriple { triple: [p[0] + 1, p[1] + 1, p[2] + 1] });
        }
        let n = self.grid.n();
        let mut physical = vec![0.0; self.grid.len()];
        for m3 in 0..n {
            for m2 in 0..n {
                for m1 in 0..n {
                    let src = self.grid.index(m1, m2, m3);
                    let mut out = [0usize; 3];
                    out[p[0]] = m1;
                    out[p[1]] = m2;
                    out[p[2]] = m3;
                    physical[self.grid.index(out[0], out[1], out[2])] = self.physical[src];
                }
            }
        }
        Self::from_physical(self.grid, physical)
    }
}

/// A three-component vector field with a measured solenoidality flag.
#[derive(Clone)]
pub struct VectorField {
    components: [ScalarField; 3],
    solenoidal: bool,
    max_spectral_divergence: f64,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("n", &self.grid().n())
            .field("solenoidal", &self.solenoidal)
            .field("max_spectral_divergence", &self.max_spectral_divergence)
            .finish()
    }
}

impl VectorField {
    /// Bundle three components, measuring `max_k |k . u_hat(k)|` to decide the
    /// solenoidality flag.
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        components[0].grid.check_same(&components[1].grid)?;
        components[0].grid.check_same(&components[2].grid)?;
        let (div, amp) = spectral_divergence_stats(&components);
        Ok(Self {
            components,
            solenoidal: div <= SOLENOIDAL_REL_TOL * amp,
            max_spectral_divergence: div,
        })
    }

    /// Grid the field lives on.
    pub fn grid(&self) -> &GridSpec {
        &self.components[0].grid
    }

    /// One component.
    pub fn component(&self, axis: Axis) -> &ScalarField {
        &self.components[axis.index()]
    }

    /// All three components in coordinate order.
    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    /// Whether the measured spectral divergence passed [`SOLENOIDAL_REL_TOL`].
    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    /// The measured `max_k |k . u_hat(k)|`.
    pub fn max_spectral_divergence(&self) -> f64 {
        self.max_spectral_divergence
    }

    /// Divergence as a scalar field (exact spectral derivatives).
    pub fn divergence(&self) -> ScalarField {
        let d1 = self.components[0].partial(Axis::X1);
        let d2 = self.components[1].partial(Axis::X2);
        let d3 = self.components[2].partial(Axis::X3);
        d1.added(&d2).and_then(|s| s.added(&d3)).expect("components share a grid")
    }

    /// Leray projection onto divergence-free fields:
    /// `u_hat(k) -= k (k . u_hat(k)) / |k|^2` for `k != 0`.
    ///
    /// Frequencies follow the derivative convention (Nyquist zeroed), so any
    /// content on Nyquist planes passes through untouched; every field in this
    /// crate is dealiased well below those planes.
    pub fn leray_project(&self) -> Self {
        let grid = *self.grid();
        let n = grid.n();
        let table = deriv_freq_table(&grid);
        let mut s0 = self.components[0].spectral.clone();
        let mut s1 = self.components[1].spectral.clone();
        let mut s2 = self.components[2].spectral.clone();
        exec::for_each_triple_chunk_mut(&mut s0, &mut s1, &mut s2, exec::CHUNK, |start, a, b, c| {
            for offset in 0..a.len() {
                let idx = start + offset;
                let k1 = table[idx % n];
                let k2 = table[(idx / n) % n];
                let k3 = table[idx / (n * n)];
                let ksq = k1 * k1 + k2 * k2 + k3 * k3;
                if ksq > 0.0 {
                    let scale = (a[offset] * k1 + b[offset] * k2 + c[offset] * k3) / ksq;
                    a[offset] -= scale * k1;
                    b[offset] -= scale * k2;
                    c[offset] -= scale * k3;
                }
            }
        });
        let fft = Fft3::new(n);
        let mk = |spec: Vec<Complex<f64>>| {
            let physical = fft.inverse_real(&spec);
            ScalarField { grid, physical, spectral: spec }
        };
        Self::new([mk(s0), mk(s1), mk(s2)]).expect("components share a grid")
    }

    /// Mixed second derivative `d_i d_j` of component `c`.
    pub fn hessian_entry(&self, i: Axis, j: Axis, c: Axis) -> ScalarField {
        self.components[c.index()].second_partial(i, j)
    }

    /// Componentwise dealias.
    pub fn dealias(&self) -> Self {
        Self::new([
            self.components[0].dealias(),
            self.components[1].dealias(),
            self.components[2].dealias(),
        ])
        .expect("components share a grid")
    }

    /// Componentwise scaling.
    pub fn scaled(&self, c: f64) -> Self {
        Self::new([
            self.components[0].scaled(c),
            self.components[1].scaled(c),
            self.components[2].scaled(c),
        ])
        .expect("components share a grid")
    }

    /// Componentwise sum.
    pub fn added(&self, other: &Self) -> Result<Self> {
        Self::new([
            self.components[0].added(&other.components[0])?,
            self.components[1].added(&other.components[1])?,
            self.components[2].added(&other.components[2])?,
        ])
    }

    /// Componentwise translation by whole grid cells.
    pub fn translated(&self, shift: [usize; 3]) -> Self {
        Self::new([
            self.components[0].translated(shift),
            self.components[1].translated(shift),
            self.components[2].translated(shift),
        ])
        .expect("components share a grid")
    }

    /// Relabel coordinates by a permutation, moving components along with the
    /// axes so a solenoidal field stays solenoidal: component `a` of the input
    /// becomes component `perm[a]` of the output.
    pub fn relabel_axes(&self, perm: [Axis; 3]) -> Result<Self> {
        let mut slots: [Option<ScalarField>; 3] = [None, None, None];
        for (a, c) in self.components.iter().enumerate() {
            slots[perm[a].index()] = Some(c.relabel_axes(perm)?);
        }
        Self::new(slots.map(|s| s.expect("perm is a permutation")))
    }

    /// Maximum pointwise speed `max_x |u(x)|`.
    pub fn max_speed(&self) -> f64 {
        let u1 = &self.components[0].physical;
        let u2 = &self.components[1].physical;
        let u3 = &self.components[2].physical;
        exec::max_indexed(u1.len(), |i| {
            (u1[i] * u1[i] + u2[i] * u2[i] + u3[i] * u3[i]).sqrt()
        })
    }
}

/// Measured spectral divergence and amplitude scale of a component triple.
fn spectral_divergence_stats(components: &[ScalarField; 3]) -> (f64, f64) {
    let grid = components[0].grid;
    let n = grid.n();
    let table = deriv_freq_table(&grid);
    let s1 = &components[0].spectral;
    let s2 = &components[1].spectral;
    let s3 = &components[2].spectral;
    let div = exec::max_indexed(grid.len(), |idx| {
        let k1 = table[idx % n];
        let k2 = table[(idx / n) % n];
        let k3 = table[idx / (n * n)];
        (s1[idx] * k1 + s2[idx] * k2 + s3[idx] * k3).norm()
    });
    let amp = exec::max_indexed(grid.len(), |idx| {
        s1[idx].norm().max(s2[idx].norm()).max(s3[idx].norm())
    });
    (div, amp)
}

/// The canned initial data known to the generators and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFieldKind {
    /// Planar Taylor–Green vortex `(sin x1 cos x2, -cos x1 sin x2, 0)`.
    TaylorGreen2d,
    /// Arnold–Beltrami–Childress flow with unit coefficients.
    AbcFlow,
    /// Seeded random solenoidal field with power-law spectral decay,
    /// normalized to unit maximum speed.
    RandomSolenoidal { decay: f64 },
    /// Three independent seeded bump components, compactly supported inside
    /// the box with an eighth-period margin.
    BumpCompact,
}

impl TestFieldKind {
    /// Parse the config-file spelling of a kind.
    pub fn parse(s: &str, decay: f64) -> Result<Self> {
        match s {
            "taylor_green_2d" => Ok(TestFieldKind::TaylorGreen2d),
            "abc_flow" => Ok(TestFieldKind::AbcFlow),
            "random_solenoidal" => Ok(TestFieldKind::RandomSolenoidal { decay }),
            "bump_compact" => Ok(TestFieldKind::BumpCompact),
            other => Err(Error::UnknownFieldKind(other.to_string())),
        }
    }

    /// Config-file spelling of the kind.
    pub fn name(&self) -> &'static str {
        match self {
            TestFieldKind::TaylorGreen2d => "taylor_green_2d",
            TestFieldKind::AbcFlow => "abc_flow",
            TestFieldKind::RandomSolenoidal { .. } => "random_solenoidal",
            TestFieldKind::BumpCompact => "bump_compact",
        }
    }
}

/// Build one of the canned fields.  The seed only matters for the random
/// kinds; the closed-form flows are constructed directly in spectral space so
/// their symmetries hold to the last bit.
pub fn generate_test_field(kind: TestFieldKind, seed: u64, grid: &GridSpec) -> Result<VectorField> {
    match kind {
        TestFieldKind::TaylorGreen2d => taylor_green_2d(grid),
        TestFieldKind::AbcFlow => abc_flow(grid),
        TestFieldKind::RandomSolenoidal { decay } => {
            let u = random_spectrum_field(seed, grid, decay, true)?;
            let speed = u.max_speed();
            if speed > 0.0 {
                Ok(u.scaled(1.0 / speed))
            } else {
                Ok(u)
            }
        }
        TestFieldKind::BumpCompact => bump_compact(seed, grid),
    }
}

/// Place one coefficient and return, for brevity in the closed-form builders.
fn put(grid: &GridSpec, spec: &mut [Complex<f64>], k: [i64; 3], value: Complex<f64>) {
    let idx = grid.index(
        grid.index_of_frequency(k[0]),
        grid.index_of_frequency(k[1]),
        grid.index_of_frequency(k[2]),
    );
    spec[idx] = value;
}

/// Planar Taylor–Green built from its four Fourier modes per component.
fn taylor_green_2d(grid: &GridSpec) -> Result<VectorField> {
    let len = grid.len();
    let mut s1 = vec![Complex::new(0.0, 0.0); len];
    let mut s2 = vec![Complex::new(0.0, 0.0); len];
    let s3 = vec![Complex::new(0.0, 0.0); len];
    let q = 0.25;
    // sin x1 cos x2 and -cos x1 sin x2 as exponentials.
    put(grid, &mut s1, [1, 1, 0], Complex::new(0.0, -q));
    put(grid, &mut s1, [1, -1, 0], Complex::new(0.0, -q));
    put(grid, &mut s1, [-1, 1, 0], Complex::new(0.0, q));
    put(grid, &mut s1, [-1, -1, 0], Complex::new(0.0, q));
    put(grid, &mut s2, [1, 1, 0], Complex::new(0.0, q));
    put(grid, &mut s2, [-1, 1, 0], Complex::new(0.0, q));
    put(grid, &mut s2, [1, -1, 0], Complex::new(0.0, -q));
    put(grid, &mut s2, [-1, -1, 0], Complex::new(0.0, -q));
    VectorField::new([
        ScalarField::from_spectral(*grid, s1)?,
        ScalarField::from_spectral(*grid, s2)?,
        ScalarField::from_spectral(*grid, s3)?,
    ])
}

/// ABC flow with A = B = C = 1 from its six Fourier modes.
fn abc_flow(grid: &GridSpec) -> Result<VectorField> {
    let len = grid.len();
    let mut s1 = vec![Complex::new(0.0, 0.0); len];
    let mut s2 = vec![Complex::new(0.0, 0.0); len];
    let mut s3 = vec![Complex::new(0.0, 0.0); len];
    let h = 0.5;
    // u1 = sin x3 + cos x2
    put(grid, &mut s1, [0, 0, 1], Complex::new(0.0, -h));
    put(grid, &mut s1, [0, 0, -1], Complex::new(0.0, h));
    put(grid, &mut s1, [0, 1, 0], Complex::new(h, 0.0));
    put(grid, &mut s1, [0, -1, 0], Complex::new(h, 0.0));
    // u2 = sin x1 + cos x3
    put(grid, &mut s2, [1, 0, 0], Complex::new(0.0, -h));
    put(grid, &mut s2, [-1, 0, 0], Complex::new(0.0, h));
    put(grid, &mut s2, [0, 0, 1], Complex::new(h, 0.0));
    put(grid, &mut s2, [0, 0, -1], Complex::new(h, 0.0));
    // u3 = sin x2 + cos x1
    put(grid, &mut s3, [0, 1, 0], Complex::new(0.0, -h));
    put(grid, &mut s3, [0, -1, 0], Complex::new(0.0, h));
    put(grid, &mut s3, [1, 0, 0], Complex::new(h, 0.0));
    put(grid, &mut s3, [-1, 0, 0], Complex::new(h, 0.0));
    VectorField::new([
        ScalarField::from_spectral(*grid, s1)?,
        ScalarField::from_spectral(*grid, s2)?,
        ScalarField::from_spectral(*grid, s3)?,
    ])
}

/// Standard normal via the Box–Muller transform.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1], keeps the log finite
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Seeded random band-limited field with coefficient scale
/// `(1 + |k|^2)^(-decay/2)`, Hermitian by construction.
///
/// With `project` the field is Leray-projected; without it the raw draw is
/// returned, which is the deliberately compressible input the verification
/// negative controls need.
pub fn random_spectrum_field(
    seed: u64,
    grid: &GridSpec,
    decay: f64,
    project: bool,
) -> Result<VectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = grid.dealias_kmax();
    let len = grid.len();
    let mut spec: [Vec<Complex<f64>>; 3] = [
        vec![Complex::new(0.0, 0.0); len],
        vec![Complex::new(0.0, 0.0); len],
        vec![Complex::new(0.0, 0.0); len],
    ];
    // Fill one representative per conjugate pair, in linear index order so the
    // draw sequence is reproducible, then mirror.
    for idx in 0..len {
        let (k1, k2, k3) = grid.frequencies(idx);
        let in_band = k1.abs() <= kmax && k2.abs() <= kmax && k3.abs() <= kmax;
        let positive_half =
            k3 > 0 || (k3 == 0 && k2 > 0) || (k3 == 0 && k2 == 0 && k1 > 0);
        if !in_band || !positive_half {
            continue;
        }
        let ksq = (k1 * k1 + k2 * k2 + k3 * k3) as f64;
        let amp = (1.0 + ksq).powf(-decay / 2.0);
        let mirror = grid.index(
            grid.index_of_frequency(-k1),
            grid.index_of_frequency(-k2),
            grid.index_of_frequency(-k3),
        );
        for component in spec.iter_mut() {
            let value = Complex::new(standard_normal(&mut rng), standard_normal(&mut rng)) * amp;
            component[idx] = value;
            component[mirror] = value.conj();
        }
    }
    let [s1, s2, s3] = spec;
    let u = VectorField::new([
        ScalarField::from_spectral(*grid, s1)?,
        ScalarField::from_spectral(*grid, s2)?,
        ScalarField::from_spectral(*grid, s3)?,
    ])?;
    if project {
        Ok(u.leray_project())
    } else {
        Ok(u)
    }
}

/// The unit bump profile: `exp(1 - 1/(1 - t^2))` inside `|t| < 1`, zero
/// outside, normalized to 1 at the center.
fn bump_profile(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Margin kept clear of support on every side of the box: an eighth period.
pub const BUMP_MARGIN: f64 = PERIOD / 8.0;

/// Three independent compactly supported bump components with randomized
/// widths, centers, and low-frequency modulation.
fn bump_compact(seed: u64, grid: &GridSpec) -> Result<VectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_half_width = (PERIOD - 2.0 * BUMP_MARGIN) / 2.0;
    let mut fields: Vec<ScalarField> = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut width = [0.0; 3];
        let mut center = [0.0; 3];
        let mut depth = [0.0; 3];
        let mut freq = [0.0; 3];
        let mut phase = [0.0; 3];
        for a in 0..3 {
            width[a] = rng.gen_range(0.5..=1.0) * max_half_width;
            center[a] = rng.gen_range((BUMP_MARGIN + width[a])..=(PERIOD - BUMP_MARGIN - width[a]));
            depth[a] = rng.gen_range(0.0..=0.6);
            freq[a] = rng.gen_range(1..=3) as f64;
            phase[a] = rng.gen_range(0.0..PERIOD);
        }
        let amplitude: f64 = rng.gen_range(0.5..=1.5);
        fields.push(ScalarField::from_fn(*grid, move |x1, x2, x3| {
            let x = [x1, x2, x3];
            let mut value = amplitude;
            for a in 0..3 {
                let t = (x[a] - center[a]) / width[a];
                value *= bump_profile(t) * (1.0 + depth[a] * (freq[a] * (x[a] - center[a]) + phase[a]).cos());
            }
            value
        }));
    }
    let f2 = fields.pop().expect("three components");
    let f1 = fields.pop().expect("three components");
    let f0 = fields.pop().expect("three components");
    VectorField::new([f0, f1, f2])
}

/// Metadata stored in a snapshot header alongside the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    /// Simulation time the snapshot was taken at.
    pub time: f64,
    /// Viscosity of the run that produced it.
    pub viscosity: f64,
}

/// Write a field snapshot: a fixed little-endian header followed by the raw
/// physical samples of the three components in x1-fastest order.  Snapshots
/// of the same field are byte-identical.
pub fn write_snapshot(path: &Path, u: &VectorField, time: f64) -> Result<()> {
    let grid = u.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&3u32.to_le_bytes())?;
    w.write_all(&grid.period().to_le_bytes())?;
    w.write_all(&grid.viscosity().to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?; // flags, reserved
    for axis in Axis::ALL {
        for value in u.component(axis).physical() {
            w.write_all(&value.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(VectorField, SnapshotMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::SnapshotFormat("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotFormat(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let ncomp = read_u32(&mut r)?;
    if ncomp != 3 {
        return Err(Error::SnapshotFormat(format!("expected 3 components, found {ncomp}")));
    }
    let period = read_f64(&mut r)?;
    if period != PERIOD {
        return Err(Error::SnapshotFormat(format!("unsupported period {period}")));
    }
    let viscosity = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let _flags = read_u32(&mut r)?;
    let grid = GridSpec::new(n, viscosity)?;
    let len = grid.len();
    let mut components: Vec<ScalarField> = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes)?;
        let physical: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        components.push(ScalarField::from_physical(grid, physical)?);
    }
    let f2 = components.pop().expect("three components");
    let f1 = components.pop().expect("three components");
    let f0 = components.pop().expect("three components");
    let u = VectorField::new([f0, f1, f2])?;
    Ok((u, SnapshotMeta { time, viscosity }))
}

fn read_u32<R: std::io::Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: std::io::Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
