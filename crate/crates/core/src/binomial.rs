//! Binomial kernels shared by the exact estimators.
//!
//! Probabilities are built by ratio recurrence outward from the mode over a
//! window of +-38 standard deviations (plus a small constant), then
//! normalized by the window sum. Mass outside the window is below `1e-300`.

use statrs::function::factorial::ln_binomial as statrs_ln_binomial;

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    statrs_ln_binomial(n, k)
}

/// Binomial(n, p) probabilities on the window `lo..lo + probs.len()`.
#[derive(Debug, Clone)]
pub struct BinomialWindow {
    pub n: u64,
    pub lo: u64,
    pub probs: Vec<f64>,
}

impl BinomialWindow {
    pub fn new(n: u64, p: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p));
        if p <= 0.0 {
            return Self {
                n,
                lo: 0,
                probs: vec![1.0],
            };
        }
        if p >= 1.0 {
            return Self {
                n,
                lo: n,
                probs: vec![1.0],
            };
        }
        let q = 1.0 - p;
        let nf = n as f64;
        let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
        let half = (38.0 * (nf * p * q).sqrt()).ceil() as u64 + 12;
        let lo = mode.saturating_sub(half);
        let hi = (mode + half).min(n);
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        let m = (mode - lo) as usize;
        probs[m] = 1.0;
        let odds = p / q;
        for k in mode..hi {
            let i = (k - lo) as usize;
            probs[i + 1] = probs[i] * ((n - k) as f64 / (k + 1) as f64) * odds;
        }
        for k in (lo + 1..=mode).rev() {
            let i = (k - lo) as usize;
            probs[i - 1] = probs[i] * (k as f64 / (n - k + 1) as f64) / odds;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= total);
        Self { n, lo, probs }
    }

    /// `(k, P(K = k))` pairs over the window.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.lo + i as u64, p))
    }

    /// `E|2K - n - center|`, the expected absolute deviation of the vote sum.
    pub fn abs_deviation(&self, center: f64) -> f64 {
        let n = self.n as f64;
        self.iter()
            .map(|(k, p)| p * (2.0 * k as f64 - n - center).abs())
            .sum()
    }
}

/// `E|S|` for `n` independent fair votes.
pub fn fair_abs_margin(n: u64) -> f64 {
    BinomialWindow::new(n, 0.5).abs_deviation(0.0)
}
