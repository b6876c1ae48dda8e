//! Composite Gauss–Legendre quadrature with panel doubling.
//!
//! The interval is cut into `2^k` equal panels with a 32-point rule on each,
//! starting from two panels (64 nodes) and doubling until two successive
//! levels agree to [`TOLERANCE`]. For intervals symmetric about zero the
//! origin is always a panel edge, so integrands with a kink there (such as
//! `E|S|` as a function of the belief) converge quickly.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const NODES_PER_PANEL: usize = 32;
pub const INITIAL_PANELS: usize = 2;
pub const MAX_PANELS: usize = 1 << 12;
pub const TOLERANCE: f64 = 1e-10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NODES_PER_PANEL))
}

/// Visits every `(node, weight)` pair of the composite rule with `panels` panels.
fn for_each_node(lo: f64, hi: f64, panels: usize, mut visit: impl FnMut(f64, f64)) {
    let rule = panel_rule();
    let width = (hi - lo) / panels as f64;
    for p in 0..panels {
        let a = lo + width * p as f64;
        let mid = a + 0.5 * width;
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            visit(mid + 0.5 * width * x, 0.5 * width * w);
        }
    }
}

/// Integrates a vector-valued function over `[lo, hi]`.
///
/// `accumulate(x, w, acc)` must add `w * f(x)` into `acc`.
pub fn integrate_vec(
    len: usize,
    lo: f64,
    hi: f64,
    mut accumulate: impl FnMut(f64, f64, &mut [f64]),
) -> Result<Vec<f64>> {
    let level = |panels: usize, acc: &mut dyn FnMut(f64, f64, &mut [f64])| {
        let mut out = vec![0.0; len];
        for_each_node(lo, hi, panels, |x, w| acc(x, w, &mut out));
        out
    };
    let mut panels = INITIAL_PANELS;
    let mut previous = level(panels, &mut accumulate);
    let mut change = f64::INFINITY;
    while panels < MAX_PANELS {
        panels *= 2;
        let current = level(panels, &mut accumulate);
        let scale = current.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        change = current
            .iter()
            .zip(&previous)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if change <= TOLERANCE * scale {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::QuadratureNotConverged {
        nodes: panels * NODES_PER_PANEL,
        change,
    })
}

/// Integrates a scalar function over `[lo, hi]`.
pub fn integrate(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    integrate_vec(1, lo, hi, |x, w, acc| acc[0] += w * f(x)).map(|v| v[0])
}
