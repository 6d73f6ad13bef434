//! Three-dimensional complex FFT on the `n^3` grid, built from 1D rustfft
//! plans applied along each axis.
//!
//! Normalization convention: [`Fft3::forward`] returns Fourier *coefficients*
//! (the `1/n^3` factor is applied on the forward side), so a physical field is
//! `f(x) = sum_k fhat_k exp(i k.x)` and [`Fft3::inverse_real`] is the plain
//! unnormalized inverse transform. With this convention the discrete Parseval
//! identity reads `h^3 sum_x |f|^2 = (2*pi)^3 sum_k |fhat|^2`.
//!
//! Storage layout matches [`crate::grid::GridSpec`]: linear index
//! `(m3*n + m2)*n + m1`, x1 fastest. Lines along x1 are contiguous, x2 lines
//! have stride `n` within one x3-slab, x3 lines have stride `n^2`.

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::exec;

type Plan = Arc<dyn Fft<f64>>;

fn plan_cache() -> &'static Mutex<HashMap<(usize, bool), Plan>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(n: usize, inverse: bool) -> Plan {
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Raw pointer wrapper so disjoint strided lines can be processed in
/// parallel. Safety rests on the caller touching disjoint index sets.
#[derive(Copy, Clone)]
struct SendMut(*mut Complex<f64>);
unsafe impl Send for SendMut {}
unsafe impl Sync for SendMut {}

/// 3D FFT plans for one grid size.
pub struct Fft3 {
    n: usize,
    forward: Plan,
    inverse: Plan,
}

impl Fft3 {
    /// Plans (cached globally per size) for an `n^3` transform.
    pub fn new(n: usize) -> Self {
        Fft3 {
            n,
            forward: plan(n, false),
            inverse: plan(n, true),
        }
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Forward transform of a real field: returns coefficient-normalized
    /// spectral data (`1/n^3` applied).
    pub fn forward(&self, physical: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(physical.len(), self.n * self.n * self.n);
        let mut data: Vec<Complex<f64>> =
            physical.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.passes(&mut data, false);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        exec::for_each_chunk_mut(&mut data, 8192, |_, chunk| {
            for v in chunk {
                *v *= scale;
            }
        });
        data
    }

    /// Inverse transform of coefficient-normalized spectral data; returns the
    /// real part (the imaginary part of a Hermitian spectrum is rounding
    /// noise).
    pub fn inverse_real(&self, spectral: &[Complex<f64>]) -> Vec<f64> {
        assert_eq!(spectral.len(), self.n * self.n * self.n);
        let mut data = spectral.to_vec();
        self.passes(&mut data, true);
        data.into_iter().map(|v| v.re).collect()
    }

    fn passes(&self, data: &mut [Complex<f64>], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        self.pass_axis0(data, fft);
        self.pass_axis1(data, fft);
        self.pass_axis2(data, fft);
    }

    /// x1 lines are contiguous: hand rustfft whole slabs (it chunks by fft
    /// length internally), one x3-slab per task.
    fn pass_axis0(&self, data: &mut [Complex<f64>], fft: &Plan) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        exec::for_each_chunk_mut_init(
            data,
            n * n,
            || vec![Complex::new(0.0, 0.0); scratch_len],
            |scratch, _, slab| {
                fft.process_with_scratch(slab, scratch);
            },
        );
    }

    /// x2 lines have stride `n` but stay inside one contiguous x3-slab, so a
    /// slab per task keeps the borrow checker happy.
    fn pass_axis1(&self, data: &mut [Complex<f64>], fft: &Plan) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        exec::for_each_chunk_mut_init(
            data,
            n * n,
            || {
                (
                    vec![Complex::new(0.0, 0.0); n],
                    vec![Complex::new(0.0, 0.0); scratch_len],
                )
            },
            |(line, scratch), _, slab| {
                for m1 in 0..n {
                    for m2 in 0..n {
                        line[m2] = slab[m2 * n + m1];
                    }
                    fft.process_with_scratch(line, scratch);
                    for m2 in 0..n {
                        slab[m2 * n + m1] = line[m2];
                    }
                }
            },
        );
    }

    /// x3 lines (stride `n^2`) cross slab boundaries; process disjoint line
    /// batches through a raw pointer.
    fn pass_axis2(&self, data: &mut [Complex<f64>], fft: &Plan) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        let ptr = SendMut(data.as_mut_ptr());
        // One batch = the n lines sharing an x2 index; batches partition the
        // n^2 (m2, m1) line set, so writes are disjoint.
        exec::for_each_index_init(
            n,
            || {
                (
                    vec![Complex::new(0.0, 0.0); n],
                    vec![Complex::new(0.0, 0.0); scratch_len],
                )
            },
            |(line, scratch), m2| {
                let ptr = ptr;
                for m1 in 0..n {
                    let base = m2 * n + m1;
                    // SAFETY: the (m2, m1) batches index pairwise-disjoint
                    // strided lines of `data`, and `data` outlives the loop.
                    unsafe {
                        for m3 in 0..n {
                            line[m3] = *ptr.0.add(base + m3 * n * n);
                        }
                        fft.process_with_scratch(line, scratch);
                        for m3 in 0..n {
                            *ptr.0.add(base + m3 * n * n) = line[m3];
                        }
                    }
                }
            },
        );
    }
}
