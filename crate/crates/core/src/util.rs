//! Small shared utilities: worker-count selection, deterministic chunked
//! reductions, and seeded RNG construction.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of worker threads honoring the `LDG_THREADS` cap.
pub fn worker_count() -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("LDG_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n.min(avail),
            _ => avail,
        },
        Err(_) => avail,
    }
}

/// Fixed chunk length used by the deterministic reductions. Summation
/// order is a function of the data length only, never of the thread
/// count, so energy traces are bit-identical across `LDG_THREADS`.
const CHUNK: usize = 4096;

/// Below this many items the thread-spawn overhead outweighs the work;
/// reductions and fills run sequentially (same association order).
const PAR_THRESHOLD: usize = 150_000;

/// Sum `f(i)` for `i in 0..n` with a fixed chunked association order.
pub fn chunked_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let nchunks = n.div_ceil(CHUNK);
    let mut partials = vec![0.0f64; nchunks];
    let workers = worker_count();
    if workers <= 1 || nchunks <= 1 || n < PAR_THRESHOLD {
        for (c, out) in partials.iter_mut().enumerate() {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            *out = s;
        }
    } else {
        let f = &f;
        std::thread::scope(|scope| {
            for (w, slab) in partials.chunks_mut(nchunks.div_ceil(workers)).enumerate() {
                let base = w * nchunks.div_ceil(workers);
                scope.spawn(move || {
                    for (k, out) in slab.iter_mut().enumerate() {
                        let lo = (base + k) * CHUNK;
                        let hi = (lo + CHUNK).min(n);
                        let mut s = 0.0;
                        for i in lo..hi {
                            s += f(i);
                        }
                        *out = s;
                    }
                });
            }
        });
    }
    partials.iter().sum()
}

/// Sum one value per z-slab of an n^3 grid, combining slab partials in
/// slab order. Each slab closure does enough work that threading pays
/// off for large grids; the result is bit-identical for any worker
/// count.
pub fn slab_sum<F: Fn(usize) -> f64 + Sync>(n: usize, slab: F) -> f64 {
    let mut partials = vec![0.0f64; n];
    let workers = worker_count();
    if workers <= 1 || n * n * n < PAR_THRESHOLD {
        for (iz, out) in partials.iter_mut().enumerate() {
            *out = slab(iz);
        }
    } else {
        let slab = &slab;
        let per = n.div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, chunk) in partials.chunks_mut(per).enumerate() {
                let base = w * per;
                scope.spawn(move || {
                    for (k, out) in chunk.iter_mut().enumerate() {
                        *out = slab(base + k);
                    }
                });
            }
        });
    }
    partials.iter().sum()
}

/// Fill `out[i] = f(i)` in parallel; the result does not depend on the
/// thread partitioning.
pub fn par_fill<T: Send, F: Fn(usize) -> T + Sync>(out: &mut [T], f: F) {
    let workers = worker_count();
    let n = out.len();
    if workers <= 1 || n < PAR_THRESHOLD {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
        return;
    }
    let f = &f;
    let per = n.div_ceil(workers);
    std::thread::scope(|scope| {
        for (w, slab) in out.chunks_mut(per).enumerate() {
            let base = w * per;
            scope.spawn(move || {
                for (k, slot) in slab.iter_mut().enumerate() {
                    *slot = f(base + k);
                }
            });
        }
    });
}

/// Seeded deterministic RNG used by noise injection and the self tests.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential() {
        let n = 10_000;
        let s = chunked_sum(n, |i| (i as f64).sin());
        let mut r = 0.0;
        // Same chunk association, sequentially.
        for c in 0..n.div_ceil(CHUNK) {
            let mut p = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                p += (i as f64).sin();
            }
            r += p;
        }
        assert_eq!(s, r);
    }

    #[test]
    fn par_fill_is_exhaustive() {
        let mut v = vec![0usize; 12345];
        par_fill(&mut v, |i| i + 1);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i + 1));
    }
}
