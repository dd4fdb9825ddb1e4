//! Sample scheduling.
//!
//! Estimators split their samples into fixed-size chunks, hand the chunks to
//! an [`Executor`] and combine the per-chunk partial results in chunk order.
//! Chunk boundaries never depend on the executor, so a parallel executor
//! returns bit-identical results to [`Sequential`].

use alloc::vec::Vec;

/// Samples per chunk.
pub const CHUNK: u64 = 1024;

pub trait Executor: Sync {
    /// `(0..count).map(f)`, results in index order.
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

fn chunks(samples: u64) -> usize {
    samples.div_ceil(CHUNK) as usize
}

fn chunk_range(c: usize, samples: u64) -> core::ops::Range<u64> {
    let lo = c as u64 * CHUNK;
    lo..(lo + CHUNK).min(samples)
}

/// Number of samples `i ∈ 0..samples` with `f(i) == true`.
pub fn count_where<E, F>(exec: &E, samples: u64, f: F) -> u64
where
    E: Executor + ?Sized,
    F: Fn(u64) -> bool + Sync + Send,
{
    exec.map(chunks(samples), |c| chunk_range(c, samples).filter(|&i| f(i)).count() as u64)
        .into_iter()
        .sum()
}

/// `(Σ f(i), Σ f(i)²)` over `i ∈ 0..samples`.
pub fn sum_and_squares<E, F>(exec: &E, samples: u64, f: F) -> (f64, f64)
where
    E: Executor + ?Sized,
    F: Fn(u64) -> f64 + Sync + Send,
{
    exec.map(chunks(samples), |c| {
        chunk_range(c, samples).map(&f).fold((0.0, 0.0), |(s, q), x| (s + x, q + x * x))
    })
    .into_iter()
    .fold((0.0, 0.0), |(s, q), (a, b)| (s + a, q + b))
}

/// Run `f` on every sample and collect outputs in sample order.
pub fn collect<E, T, F>(exec: &E, samples: u64, f: F) -> Vec<T>
where
    E: Executor + ?Sized,
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    exec.map(chunks(samples), |c| chunk_range(c, samples).map(&f).collect::<Vec<T>>())
        .into_iter()
        .flatten()
        .collect()
}
