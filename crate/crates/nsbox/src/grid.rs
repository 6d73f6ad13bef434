//! The uniform periodic grid: `n` points per axis on `[0, 2*pi)^3`.

use crate::error::Error;
use crate::Result;
use std::f64::consts::TAU;

/// Spatial period of the box along every axis.
pub const PERIOD: f64 = TAU;

/// Specification of the discretization: a uniform `n^3` grid on the
/// `2*pi`-periodic box together with the problem viscosity.
///
/// The grid owns the quadrature rule: the rectangle rule with uniform weight
/// [`GridSpec::cell_volume`], which is spectrally accurate for smooth periodic
/// integrands and exact for band-limited ones.
///
/// Linear storage convention for fields on this grid:
/// `index(m1, m2, m3) = (m3 * n + m2) * n + m1` (the x1 axis varies fastest).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    viscosity: f64,
}

impl GridSpec {
    /// Build a grid spec. `n` must be even and at least 8; `viscosity`
    /// strictly positive.
    pub fn new(n: usize, viscosity: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGridSize { n });
        }
        if !(viscosity > 0.0) || !viscosity.is_finite() {
            return Err(Error::InvalidViscosity { nu: viscosity });
        }
        Ok(GridSpec { n, viscosity })
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Problem viscosity stored with the grid.
    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    /// Spatial period (always `2*pi`).
    pub fn period(&self) -> f64 {
        PERIOD
    }

    /// Grid spacing `2*pi/n`.
    pub fn spacing(&self) -> f64 {
        PERIOD / self.n as f64
    }

    /// Total number of grid points `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Always false (a valid grid has at least 8^3 points); included for
    /// `len`/`is_empty` symmetry.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one cell, `(2*pi/n)^3`.
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    /// Volume of the box, `(2*pi)^3`.
    pub fn volume(&self) -> f64 {
        PERIOD * PERIOD * PERIOD
    }

    /// Dealiasing cutoff `K` of the 2/3 rule: modes with any `|k_i| > K` are
    /// zeroed after nonlinear products. Chosen as the largest `K` with
    /// `3K < n`, which makes the rectangle-rule quadrature of triple products
    /// of `K`-band-limited fields exact.
    pub fn dealias_kmax(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }

    /// Signed integer frequency of the DFT index `m` along one axis:
    /// `m` for `m <= n/2`, `m - n` otherwise.
    pub fn frequency(&self, m: usize) -> i64 {
        debug_assert!(m < self.n);
        if m <= self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// DFT index holding the signed frequency `k` (the inverse of
    /// [`GridSpec::frequency`] away from the Nyquist ambiguity).
    pub fn index_of_frequency(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(-n / 2 <= k && k <= n / 2);
        k.rem_euclid(n) as usize
    }

    /// Linear index of the grid point `(m1, m2, m3)`.
    pub fn index(&self, m1: usize, m2: usize, m3: usize) -> usize {
        (m3 * self.n + m2) * self.n + m1
    }

    /// Inverse of [`GridSpec::index`].
    pub fn decompose(&self, idx: usize) -> (usize, usize, usize) {
        let m1 = idx % self.n;
        let m2 = (idx / self.n) % self.n;
        let m3 = idx / (self.n * self.n);
        (m1, m2, m3)
    }

    /// Coordinates of the grid point with linear index `idx`.
    pub fn coords(&self, idx: usize) -> (f64, f64, f64) {
        let (m1, m2, m3) = self.decompose(idx);
        let h = self.spacing();
        (m1 as f64 * h, m2 as f64 * h, m3 as f64 * h)
    }

    /// Signed frequency triple of the spectral index `idx`.
    pub fn frequencies(&self, idx: usize) -> (i64, i64, i64) {
        let (m1, m2, m3) = self.decompose(idx);
        (
            self.frequency(m1),
            self.frequency(m2),
            self.frequency(m3),
        )
    }

    /// Check that two specs describe the same discretization.
    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }
}
