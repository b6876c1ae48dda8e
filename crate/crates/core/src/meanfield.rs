//! Mean-field fixed point, asymptotic weights and power-law fits.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    expected_margin_asymptotic, expected_margin_exact, expected_margin_mc, mean_field_asymptote,
};
use crate::mc::MonteCarlo;
use crate::model::{MarginEstimate, VotingModel};

/// Lower end of the bisection bracket.
pub const BRACKET_LOW: f64 = 1e-8;

/// Positive root of `tanh(J C) = C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CjSolution {
    pub coupling: f64,
    pub value: f64,
    /// `|tanh(J C) - C|`.
    pub residual: f64,
    pub iterations: u32,
}

/// Solves `tanh(J C) = C` for `J > 1` by bisection on `(1e-8, 1)`.
pub fn solve_cj(coupling: f64) -> Result<CjSolution> {
    if !coupling.is_finite() {
        return Err(Error::InvalidCoupling(coupling));
    }
    if coupling <= 1.0 {
        return Err(Error::Subcritical(coupling));
    }
    let g = |c: f64| (coupling * c).tanh() - c;
    let (mut lo, mut hi) = (BRACKET_LOW, 1.0);
    // Very close to J = 1 the root can fall below the bracket.
    if g(lo) <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "coupling {coupling} is too close to 1: root lies below {BRACKET_LOW}"
        )));
    }
    let mut iterations = 0;
    while hi - lo > f64::EPSILON * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let value = if hi < 1.0 && g(hi).abs() < g(lo).abs() {
        hi
    } else {
        lo
    };
    Ok(CjSolution {
        coupling,
        value,
        residual: g(value).abs(),
        iterations,
    })
}

/// Leading-order `E|S|` across the phase transition.
pub fn asymptotic_weight_meanfield(coupling: f64, population: u64) -> Result<MarginEstimate> {
    if population == 0 {
        return Err(Error::PopulationTooSmall { min: 1, found: 0 });
    }
    mean_field_asymptote(coupling, population as f64).map(MarginEstimate::asymptotic)
}

/// How each grid point of a scaling fit is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingMode {
    Exact,
    MonteCarlo { samples: u64, plan: MonteCarlo },
    Asymptotic,
}

/// Least-squares fit of `log w_N = log_prefactor + exponent * log N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    /// `(N, w_N)` with `w_N = E|S| / 2`.
    pub grid: Vec<(u64, f64)>,
}

/// Evaluates the weight `E|S| / 2` of `family(N)` on `grid` and fits a power law.
pub fn scaling_fit<F>(family: F, grid: &[u64], mode: ScalingMode) -> Result<ScalingFit>
where
    F: Fn(u64) -> Result<VotingModel> + Sync,
{
    check_grid(grid)?;
    let points = grid
        .par_iter()
        .map(|&n| {
            let model = family(n)?;
            let est = match mode {
                ScalingMode::Exact => expected_margin_exact(&model, n)?,
                ScalingMode::MonteCarlo { samples, plan } => {
                    expected_margin_mc(&model, n, samples, &plan)?
                }
                ScalingMode::Asymptotic => expected_margin_asymptotic(&model, n)?,
            };
            Ok((n, 0.5 * est.value))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(&points)
}

/// Ordinary least squares of `log y` on `log N`.
pub fn fit_power_law(points: &[(u64, f64)]) -> Result<ScalingFit> {
    let ns: Vec<u64> = points.iter().map(|p| p.0).collect();
    check_grid(&ns)?;
    if let Some(&(n, y)) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs positive values, received {y} at N={n}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let log_prefactor = my - exponent * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(ScalingFit {
        exponent,
        log_prefactor,
        r_squared,
        grid: points.to_vec(),
    })
}

/// `lo, lo * factor, ...` up to and including `hi`.
pub fn geometric_grid(lo: u64, hi: u64, factor: u64) -> Result<Vec<u64>> {
    if lo == 0 || factor < 2 || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "geometric grid needs 1 <= lo <= hi and factor >= 2, received {lo}:{hi}:x{factor}"
        )));
    }
    let mut out = vec![lo];
    let mut n = lo;
    while let Some(next) = n.checked_mul(factor).filter(|&v| v <= hi) {
        out.push(next);
        n = next;
    }
    Ok(out)
}

fn check_grid(grid: &[u64]) -> Result<()> {
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 3 || sorted.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "scaling grid needs at least 3 distinct populations, received {grid:?}"
        )));
    }
    Ok(())
}
