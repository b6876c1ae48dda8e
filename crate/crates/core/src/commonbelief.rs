//! Belief functionals, regime classification and convergence diagnostics
//! for the common-belief model.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::belief::BeliefDistribution;
use crate::binomial::BinomialWindow;
use crate::error::{Error, Result};
use crate::mc::{Moments, MonteCarlo};
use crate::quadrature::GaussLegendre;

/// `mu_bar = int |zeta| d mu`.
pub fn mu_bar(belief: &BeliefDistribution) -> Result<f64> {
    match belief {
        BeliefDistribution::PointMassZero => Ok(0.0),
        BeliefDistribution::UniformSymmetric { a } => {
            belief.validate()?;
            Ok(0.5 * a)
        }
        _ => belief.expectation(f64::abs),
    }
}

/// `int zeta^2 d mu`, the covariance of two distinct voters.
pub fn second_moment(belief: &BeliefDistribution) -> Result<f64> {
    match belief {
        BeliefDistribution::PointMassZero => Ok(0.0),
        BeliefDistribution::UniformSymmetric { a } => {
            belief.validate()?;
            Ok(a * a / 3.0)
        }
        _ => belief.expectation(|z| z * z),
    }
}

/// A belief law for every population size.
#[derive(Debug, Clone, PartialEq)]
pub enum BeliefFamily {
    /// Uniform on `[-a_N, a_N]` with `a_N = min(c N^(-beta), 1)`.
    Straffin { c: f64, beta: f64 },
    /// The same law at every `N`.
    Fixed(BeliefDistribution),
}

impl BeliefFamily {
    pub fn straffin(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidBelief(format!(
                "Straffin family needs c > 0 and beta >= 0, received c={c} beta={beta}"
            )));
        }
        Ok(Self::Straffin { c, beta })
    }

    /// Half-width `a_N` of a Straffin family.
    pub fn half_width(c: f64, beta: f64, population: u64) -> f64 {
        (c * (population as f64).powf(-beta)).min(1.0)
    }

    pub fn at(&self, population: u64) -> Result<BeliefDistribution> {
        match self {
            Self::Straffin { c, beta } => {
                BeliefDistribution::uniform(Self::half_width(*c, *beta, population))
            }
            Self::Fixed(b) => {
                b.validate()?;
                Ok(b.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Weight grows like `N mu_bar_N`.
    Linear,
    /// Weight grows like `sqrt(N)`.
    SquareRoot,
    /// Inside the `epsilon` band where neither law is guaranteed.
    Boundary,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::SquareRoot => "square_root",
            Self::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Fitted slope of `log mu_bar_N` against `log N`; `None` with a single
    /// population or when `mu_bar_N` vanishes.
    pub slope: Option<f64>,
    /// Exponent `alpha` of the weight `w_N ~ N^alpha`, when the regime has one.
    pub predicted_exponent: Option<f64>,
    /// `(N, mu_bar_N)`.
    pub points: Vec<(u64, f64)>,
}

/// Classifies the decay of `mu_bar_N` over `grid`.
///
/// With two or more populations the log-log slope `g` decides: linear if
/// `g >= -1/2 + epsilon` (`alpha = 1 + g`), square-root if
/// `g <= -1/2 - epsilon` (`alpha = 1/2`), boundary otherwise. A single
/// population is compared against `N^(-1/2 +- epsilon)` directly.
pub fn classify_regime(family: &BeliefFamily, epsilon: f64, grid: &[u64]) -> Result<RegimeReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, received {epsilon}"
        )));
    }
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::InvalidArgument(
            "regime grid must be a nonempty list of positive populations".into(),
        ));
    }
    let points = grid
        .iter()
        .map(|&n| Ok((n, mu_bar(&family.at(n)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let linear = |g: f64| g >= -0.5 + epsilon;
    let sqrt = |g: f64| g <= -0.5 - epsilon;
    if points.iter().all(|p| p.1 == 0.0) {
        return Ok(RegimeReport {
            regime: Regime::SquareRoot,
            slope: None,
            predicted_exponent: Some(0.5),
            points,
        });
    }
    if points.iter().any(|p| p.1 == 0.0) {
        return Err(Error::Unclassifiable(
            "mu_bar vanishes at some but not all populations".into(),
        ));
    }
    let mut distinct: Vec<u64> = grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let (regime, slope) = if distinct.len() == 1 {
        let (n, m) = points[0];
        let level = m.ln() / (n as f64).ln();
        let regime = if n == 1 {
            Regime::Boundary
        } else if linear(level) {
            Regime::Linear
        } else if sqrt(level) {
            Regime::SquareRoot
        } else {
            Regime::Boundary
        };
        (regime, None)
    } else {
        let g = log_log_slope(&points);
        let regime = if linear(g) {
            Regime::Linear
        } else if sqrt(g) {
            Regime::SquareRoot
        } else {
            Regime::Boundary
        };
        (regime, Some(g))
    };
    let predicted_exponent = match regime {
        Regime::Linear => Some(slope.map_or(1.0, |g| (1.0 + g).min(1.0))),
        Regime::SquareRoot => Some(0.5),
        Regime::Boundary => None,
    };
    Ok(RegimeReport {
        regime,
        slope,
        predicted_exponent,
        points,
    })
}

fn log_log_slope(points: &[(u64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundMode {
    Exact,
    MonteCarlo { samples: u64, plan: MonteCarlo },
}

/// Gaps behind the `1/sqrt(N)` bounds on the per-capita margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginBoundReport {
    pub population: u64,
    /// `E(|S| / N)`.
    pub mean_abs_fraction: f64,
    /// `E(|S - N Z| / N)`.
    pub coupling_distance: f64,
    /// Zero for exact evaluation.
    pub std_error: f64,
    pub mu_bar: f64,
    /// `|E(|S| / N) - mu_bar|`.
    pub gap: f64,
    /// `1 / sqrt(N)`.
    pub bound: f64,
    pub gap_within_bound: bool,
    pub coupling_within_bound: bool,
}

pub fn margin_bound_check(
    belief: &BeliefDistribution,
    population: u64,
    mode: BoundMode,
) -> Result<MarginBoundReport> {
    if population == 0 {
        return Err(Error::PopulationTooSmall { min: 1, found: 0 });
    }
    let n = population;
    let nf = n as f64;
    let m = mu_bar(belief)?;
    let (abs_frac, coupling, std_error) = match mode {
        BoundMode::Exact => {
            let abs = belief.expectation(|z| BinomialWindow::new(n, p_of(z)).abs_deviation(0.0))?;
            (abs / nf, coupling_distance(belief, n)? / nf, 0.0)
        }
        BoundMode::MonteCarlo { samples, plan } => {
            if samples < 2 {
                return Err(Error::InvalidArgument(format!(
                    "Monte Carlo needs at least 2 samples, received {samples}"
                )));
            }
            belief.validate()?;
            let parts = plan.run(samples, |mut rng, count| {
                let (mut a, mut c) = (Moments::default(), Moments::default());
                for _ in 0..count {
                    let z = belief.sample(&mut rng);
                    let k = Binomial::new(n, p_of(z))
                        .expect("valid binomial")
                        .sample(&mut rng);
                    let s = 2.0 * k as f64 - nf;
                    a.push(s.abs() / nf);
                    c.push((s - nf * z).abs() / nf);
                }
                (a, c)
            });
            let (mut a, mut c) = (Moments::default(), Moments::default());
            for (pa, pc) in &parts {
                a.merge(pa);
                c.merge(pc);
            }
            (a.mean(), c.mean(), a.std_error())
        }
    };
    let bound = 1.0 / nf.sqrt();
    let gap = (abs_frac - m).abs();
    Ok(MarginBoundReport {
        population: n,
        mean_abs_fraction: abs_frac,
        coupling_distance: coupling,
        std_error,
        mu_bar: m,
        gap,
        bound,
        gap_within_bound: gap <= bound,
        coupling_within_bound: coupling <= bound,
    })
}

/// `E|S - N Z|`.
///
/// As a function of `zeta` the integrand has a kink wherever `N zeta` hits
/// the lattice `2k - N`, so continuous beliefs are integrated panel by panel
/// between consecutive lattice points with a fixed Gauss–Legendre rule.
fn coupling_distance(belief: &BeliefDistribution, n: u64) -> Result<f64> {
    let nf = n as f64;
    let f = |z: f64| BinomialWindow::new(n, p_of(z)).abs_deviation(nf * z);
    let BeliefDistribution::UniformSymmetric { a } = belief else {
        return belief.expectation(f);
    };
    belief.validate()?;
    let rule = GaussLegendre::new(PANEL_NODES);
    let mut edges = vec![-a];
    edges.extend(
        (0..=n)
            .map(|k| -1.0 + 2.0 * k as f64 / nf)
            .filter(|x| x.abs() < *a),
    );
    edges.push(*a);
    let total: f64 = edges
        .windows(2)
        .map(|e| rule.integrate(e[0], e[1], f))
        .sum();
    Ok(total * 0.5 / a)
}

const PANEL_NODES: usize = 8;

/// Law of the mean vote `S / N`: entry `k` is `P(S / N = -1 + 2k / N)`.
pub fn mean_vote_law(belief: &BeliefDistribution, population: u64) -> Result<Vec<f64>> {
    if population == 0 {
        return Err(Error::PopulationTooSmall { min: 1, found: 0 });
    }
    let n = population;
    belief.expectation_vec(n as usize + 1, |z, w, acc| {
        let win = BinomialWindow::new(n, p_of(z));
        for (k, p) in win.iter() {
            acc[k as usize] += w * p;
        }
    })
}

/// Wasserstein-1 distance between the law of `S / N` and `mu`.
///
/// Both distribution functions are piecewise linear between the merged
/// breakpoints, so `int |F_P - F_mu|` is evaluated exactly on each piece.
pub fn distribution_distance(belief: &BeliefDistribution, population: u64) -> Result<f64> {
    let law = mean_vote_law(belief, population)?;
    Ok(wasserstein_to_belief(&law, belief))
}

pub(crate) fn wasserstein_to_belief(law: &[f64], belief: &BeliefDistribution) -> f64 {
    let n = (law.len() - 1) as f64;
    let lattice: Vec<f64> = (0..law.len()).map(|k| -1.0 + 2.0 * k as f64 / n).collect();
    let continuous = matches!(belief, BeliefDistribution::UniformSymmetric { .. });
    let mut cuts: Vec<f64> = lattice.clone();
    cuts.extend(belief.breakpoints());
    cuts.push(-1.0);
    cuts.push(1.0);
    cuts.retain(|x| (-1.0..=1.0).contains(x));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut total = 0.0;
    let mut next = 0;
    let mut fp = 0.0;
    for pair in cuts.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        while next < lattice.len() && lattice[next] <= u {
            fp += law[next];
            next += 1;
        }
        let fu = belief.cdf(u);
        let fv = if continuous { belief.cdf(v) } else { fu };
        total += abs_gap_linear(fp, fu, fv, v - u);
    }
    total
}

/// `int_0^h |c - F(t)| dt` for `F` linear from `fu` to `fv`.
fn abs_gap_linear(c: f64, fu: f64, fv: f64, h: f64) -> f64 {
    let (lo, hi) = if fu <= fv { (fu, fv) } else { (fv, fu) };
    if c >= hi || c <= lo {
        (c - 0.5 * (fu + fv)).abs() * h
    } else {
        let t = (c - fu) / (fv - fu);
        0.5 * ((c - fu).abs() * t + (fv - c).abs() * (1.0 - t)) * h
    }
}

fn p_of(z: f64) -> f64 {
    (0.5 * (1.0 + z)).clamp(0.0, 1.0)
}

/// Mean vote laws for several populations in parallel.
pub fn mean_vote_laws(belief: &BeliefDistribution, grid: &[u64]) -> Result<Vec<Vec<f64>>> {
    grid.par_iter().map(|&n| mean_vote_law(belief, n)).collect()
}
