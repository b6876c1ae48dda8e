//! Worker layout and streaming moments for reproducible Monte Carlo runs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// How a Monte Carlo budget is split across workers.
///
/// Worker `w` draws from `RngStream::new(seed, w)` and receives
/// `total / workers` samples, plus one if `w < total % workers`. Partial
/// results are merged in worker order, so the outcome depends only on
/// `(seed, workers)` and not on thread scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub seed: u64,
    pub workers: usize,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
        }
    }
}

impl MonteCarlo {
    pub fn new(seed: u64, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidArgument(
                "worker count must be at least 1".into(),
            ));
        }
        Ok(Self { seed, workers })
    }

    /// Sample count assigned to each worker.
    pub fn split(&self, total: u64) -> Vec<u64> {
        let w = self.workers as u64;
        (0..w)
            .map(|i| total / w + u64::from(i < total % w))
            .collect()
    }

    /// Runs `job(stream, count)` once per worker and returns results in worker order.
    pub fn run<A, F>(&self, total: u64, job: F) -> Vec<A>
    where
        A: Send,
        F: Fn(RngStream, u64) -> A + Sync,
    {
        let counts = self.split(total);
        counts
            .into_par_iter()
            .enumerate()
            .map(|(w, count)| job(RngStream::new(self.seed, w as u64), count))
            .collect()
    }
}

/// Running count, mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Pooled merge (Chan et al.).
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += d * nb / n as f64;
        self.m2 += other.m2 + d * d * na * nb / n as f64;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance with `n - 1` in the denominator.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Sample standard deviation over the square root of the count.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    #[test]
    fn split_covers_budget() {
        let plan = MonteCarlo::new(1, 3).unwrap();
        assert_eq!(plan.split(10), vec![4, 3, 3]);
        assert_eq!(plan.split(2), vec![1, 1, 0]);
        assert!(MonteCarlo::new(1, 0).is_err());
    }

    #[test]
    fn run_is_ordered_and_reproducible() {
        let plan = MonteCarlo::new(42, 4).unwrap();
        let job = |mut r: RngStream, n: u64| (0..n).map(|_| r.next_u64() % 1000).sum::<u64>();
        assert_eq!(plan.run(1000, job), plan.run(1000, job));
    }

    #[test]
    fn moments_match_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, -3.0];
        let m: Moments = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((m.mean() - mean).abs() < 1e-14);
        assert!((m.variance() - var).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn merge_equals_single_pass(
            xs in prop::collection::vec(-1e3f64..1e3, 1..200),
            cut in 0usize..200,
        ) {
            let cut = cut.min(xs.len());
            let all: Moments = xs.iter().copied().collect();
            let mut left: Moments = xs[..cut].iter().copied().collect();
            let right: Moments = xs[cut..].iter().copied().collect();
            left.merge(&right);
            prop_assert_eq!(left.count(), all.count());
            prop_assert!((left.mean() - all.mean()).abs() < 1e-9);
            prop_assert!((left.variance() - all.variance()).abs() < 1e-6 * all.variance().max(1.0));
        }
    }
}
