//! Deterministic execution helpers: fixed-chunk reductions and index-parallel
//! maps.
//!
//! Every floating-point reduction in this crate goes through the helpers here.
//! Sums are accumulated per fixed-size chunk in index order and the partials
//! are folded sequentially, so the rounding pattern is a function of the data
//! alone: thread count, scheduling and the `parallel` feature never change a
//! single bit of any result. That property is what makes rerun outputs
//! byte-identical.
//!
//! With the `parallel` feature enabled (the default), chunk maps and index
//! loops dispatch through rayon; the thread count follows rayon's global pool
//! (the `RAYON_NUM_THREADS` environment variable). [`set_sequential`] forces
//! the sequential path at runtime so the benchmark suite can compare both
//! paths within one process.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions and chunk maps. Fixed (never
/// derived from the thread count) so partial sums are reproducible.
pub const CHUNK: usize = 8192;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential code path even when the `parallel` feature is on.
///
/// Results are bitwise identical either way; this only changes how the work
/// is scheduled. Used by the benchmark suite.
pub fn set_sequential(force: bool) {
    FORCE_SEQUENTIAL.store(force, Ordering::Relaxed);
}

/// True when work is currently dispatched through rayon.
pub fn parallel_active() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

fn chunk_count(len: usize) -> usize {
    len.div_ceil(CHUNK)
}

/// Deterministic `sum_{i < len} f(i)`.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partial = |c: usize| -> f64 {
        let lo = c * CHUNK;
        let hi = usize::min(lo + CHUNK, len);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    if parallel_active() {
        let partials: Vec<f64> = (0..chunk_count(len)).into_par_iter().map(partial).collect();
        return partials.into_iter().sum();
    }
    (0..chunk_count(len)).map(partial).sum()
}

/// Deterministic `max_{i < len} f(i)`; `f64::NEG_INFINITY` for an empty range.
///
/// `f` must not produce NaN (max would silently drop it).
pub fn max_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partial = |c: usize| -> f64 {
        let lo = c * CHUNK;
        let hi = usize::min(lo + CHUNK, len);
        let mut acc = f64::NEG_INFINITY;
        for i in lo..hi {
            acc = acc.max(f(i));
        }
        acc
    };
    #[cfg(feature = "parallel")]
    if parallel_active() {
        let partials: Vec<f64> = (0..chunk_count(len)).into_par_iter().map(partial).collect();
        return partials.into_iter().fold(f64::NEG_INFINITY, f64::max);
    }
    (0..chunk_count(len))
        .map(partial)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Run `f(i)` for every `i < count`, possibly in parallel. `f` must only touch
/// data disjoint across indices.
pub fn for_each_index<F>(count: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        (0..count).into_par_iter().for_each(f);
        return;
    }
    for i in 0..count {
        f(i);
    }
}

/// Like [`for_each_index`] but with per-task scratch state built by `init`.
pub fn for_each_index_init<S, I, F>(count: usize, init: I, f: F)
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        (0..count).into_par_iter().for_each_init(&init, |s, i| f(s, i));
        return;
    }
    let mut s = init();
    for i in 0..count {
        f(&mut s, i);
    }
}

/// Map slices of `chunk` consecutive elements of `data` through `f`, possibly
/// in parallel. `f` receives the index of the chunk's first element within
/// `data` alongside the chunk itself.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i * chunk, c));
        return;
    }
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        f(i * chunk, c);
    }
}

/// Like [`for_each_chunk_mut`] with per-task scratch state built by `init`.
pub fn for_each_chunk_mut_init<T, S, I, F>(data: &mut [T], chunk: usize, init: I, f: F)
where
    T: Send,
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each_init(&init, |s, (i, c)| f(s, i * chunk, c));
        return;
    }
    let mut s = init();
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        f(&mut s, i * chunk, c);
    }
}

/// Walk three same-length slices in lockstep chunks, passing the start index
/// and the three chunk slices to `f`, possibly in parallel.
pub fn for_each_triple_chunk_mut<T, F>(a: &mut [T], b: &mut [T], c: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T], &mut [T], &mut [T]) + Sync + Send,
{
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), c.len());
    #[cfg(feature = "parallel")]
    if parallel_active() {
        a.par_chunks_mut(chunk)
            .zip(b.par_chunks_mut(chunk))
            .zip(c.par_chunks_mut(chunk))
            .enumerate()
            .for_each(|(i, ((ca, cb), cc))| f(i * chunk, ca, cb, cc));
        return;
    }
    for (i, ((ca, cb), cc)) in a
        .chunks_mut(chunk)
        .zip(b.chunks_mut(chunk))
        .zip(c.chunks_mut(chunk))
        .enumerate()
    {
        f(i * chunk, ca, cb, cc);
    }
}
