//! Deterministic block reductions.
//!
//! Index spaces are cut into blocks whose boundaries depend only on the
//! problem size. Each block is summed sequentially with compensation, and the
//! block partials are combined by a fixed pairwise tree. The result is
//! therefore bit-identical for any number of worker threads, and identical
//! between the `parallel` and sequential builds.

use num_complex::Complex64;

/// Execution policy for the heavy reductions.
///
/// `Parallel` silently degrades to sequential when the crate is built
/// without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// Sum a slice with a fixed pairwise tree.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Map every block index in `0..blocks` to a partial sum and reduce the
/// partials pairwise. `block_fn` must itself be deterministic.
pub fn reduce_blocks<F>(exec: Exec, blocks: usize, block_fn: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let partials = map_blocks(exec, blocks, block_fn);
    pairwise_sum(&partials)
}

/// Evaluate `f` on `0..count`, preserving order.
pub fn map_blocks<T, F>(exec: Exec, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return (0..count).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// Run `f` inside a pool with `workers` threads (or the global pool when
/// `workers` is `None`). Without the `parallel` feature this just calls `f`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = workers {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                return pool.install(f);
            }
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(i: usize) -> Complex64 {
        let x = (i as f64 * 0.7310585786).sin() * 10f64.powi((i % 17) as i32 - 8);
        Complex64::new(x, -0.5 * x)
    }

    #[test]
    fn pairwise_matches_exact_on_integers() {
        let v: Vec<Complex64> = (1..=100).map(|i| Complex64::new(i as f64, 0.0)).collect();
        assert_eq!(pairwise_sum(&v).re, 5050.0);
        assert_eq!(pairwise_sum(&[]).re, 0.0);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let mut acc = CompensatedSum::default();
        acc.add(Complex64::new(1e16, 0.0));
        for _ in 0..10 {
            acc.add(Complex64::new(1.0, 0.0));
        }
        acc.add(Complex64::new(-1e16, 0.0));
        assert_eq!(acc.value().re, 10.0);
    }

    #[test]
    fn reduction_is_bit_stable_across_pools() {
        let run = |workers| {
            with_workers(Some(workers), || {
                reduce_blocks(Exec::Parallel, 257, |b| {
                    let mut acc = CompensatedSum::default();
                    for i in 0..1000 {
                        acc.add(noisy(b * 1000 + i));
                    }
                    acc.value()
                })
            })
        };
        let one = run(1);
        let eight = run(8);
        let seq = reduce_blocks(Exec::Sequential, 257, |b| {
            let mut acc = CompensatedSum::default();
            for i in 0..1000 {
                acc.add(noisy(b * 1000 + i));
            }
            acc.value()
        });
        assert_eq!(one.re.to_bits(), eight.re.to_bits());
        assert_eq!(one.im.to_bits(), seq.im.to_bits());
    }
}
