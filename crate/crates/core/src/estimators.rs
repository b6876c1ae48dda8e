//! Expected margin `E|S|` of one state: exact, Monte Carlo and asymptotic.

use std::f64::consts::PI;

use crate::belief::BeliefDistribution;
use crate::binomial::{fair_abs_margin, ln_binomial, BinomialWindow};
use crate::commonbelief::mu_bar;
use crate::error::{Error, Result};
use crate::mc::{Moments, MonteCarlo};
use crate::meanfield::solve_cj;
use crate::measures::{magnetization_pmf, ModelSampler};
use crate::model::{EstimateMethod, MarginEstimate, VotingModel};

/// Largest population accepted by the exact routes unless overridden.
pub const DEFAULT_EXACT_BUDGET: u64 = 10_000_000;

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: u64 = 100_000;

/// `sqrt(2 / pi)`, the limit of `E|S| / sqrt(N)` for independent voters.
pub fn sqrt_two_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}

/// Exact `E|S|` with the default population budget.
pub fn expected_margin_exact(model: &VotingModel, population: u64) -> Result<MarginEstimate> {
    expected_margin_exact_with_budget(model, population, DEFAULT_EXACT_BUDGET)
}

pub fn expected_margin_exact_with_budget(
    model: &VotingModel,
    population: u64,
    budget: u64,
) -> Result<MarginEstimate> {
    check_population(population, budget)?;
    model.validate()?;
    let value = match model {
        VotingModel::Independent => fair_abs_margin(population),
        VotingModel::CommonBelief(belief) => belief.expectation(|z| {
            BinomialWindow::new(population, belief_probability(z)).abs_deviation(0.0)
        })?,
        VotingModel::MeanField { .. } if population == 1 => 1.0,
        VotingModel::MeanField { coupling } => magnetization_pmf(*coupling, population)?.abs_mean(),
    };
    Ok(MarginEstimate::exact(value))
}

/// Monte Carlo estimate of `E|S|` from `samples` draws split across `plan.workers`.
pub fn expected_margin_mc(
    model: &VotingModel,
    population: u64,
    samples: u64,
    plan: &MonteCarlo,
) -> Result<MarginEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least 2 samples, received {samples}"
        )));
    }
    let sampler = ModelSampler::new(model, population)?;
    let parts = plan.run(samples, |mut rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(sampler.sample_sum(&mut rng).unsigned_abs() as f64);
        }
        m
    });
    let mut total = Moments::default();
    parts.iter().for_each(|m| total.merge(m));
    Ok(MarginEstimate {
        value: total.mean(),
        std_error: total.std_error(),
        method: EstimateMethod::MonteCarlo,
        samples,
    })
}

/// Thresholds separating the common-belief regimes.
///
/// The linear law applies when `mu_bar >= constant * N^(-1/2 + epsilon)` and
/// the square-root law when `mu_bar <= constant * N^(-1/2 - epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    pub epsilon: f64,
    pub constant: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            constant: 1.0,
        }
    }
}

/// Leading-order `E|S|` with default common-belief thresholds.
pub fn expected_margin_asymptotic(model: &VotingModel, population: u64) -> Result<MarginEstimate> {
    expected_margin_asymptotic_with(model, population, &RegimeThresholds::default())
}

pub fn expected_margin_asymptotic_with(
    model: &VotingModel,
    population: u64,
    thresholds: &RegimeThresholds,
) -> Result<MarginEstimate> {
    check_population(population, u64::MAX)?;
    model.validate()?;
    let n = population as f64;
    let value = match model {
        VotingModel::Independent => sqrt_two_over_pi() * n.sqrt(),
        VotingModel::MeanField { coupling } => mean_field_asymptote(*coupling, n)?,
        VotingModel::CommonBelief(belief) => common_belief_asymptote(belief, n, thresholds)?,
    };
    Ok(MarginEstimate::asymptotic(value))
}

pub(crate) fn mean_field_asymptote(coupling: f64, n: f64) -> Result<f64> {
    if !(coupling.is_finite() && coupling >= 0.0) {
        return Err(Error::InvalidCoupling(coupling));
    }
    if coupling == 1.0 {
        return Err(Error::CriticalCoupling);
    }
    if coupling < 1.0 {
        Ok(sqrt_two_over_pi() * (n / (1.0 - coupling)).sqrt())
    } else {
        Ok(solve_cj(coupling)?.value * n)
    }
}

fn common_belief_asymptote(
    belief: &BeliefDistribution,
    n: f64,
    t: &RegimeThresholds,
) -> Result<f64> {
    if !(t.epsilon > 0.0 && t.constant > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "regime thresholds need epsilon > 0 and constant > 0, received epsilon={} constant={}",
            t.epsilon, t.constant
        )));
    }
    let m = mu_bar(belief)?;
    if m >= t.constant * n.powf(-0.5 + t.epsilon) {
        Ok(n * m)
    } else if m <= t.constant * n.powf(-0.5 - t.epsilon) {
        // The constant is extrapolated from the independent case.
        Ok(sqrt_two_over_pi() * n.sqrt())
    } else {
        Err(Error::Unclassifiable(format!(
            "mu_bar={m} at N={n} lies between the linear and square-root thresholds"
        )))
    }
}

/// Exact moments of the total spin of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMoments {
    /// `E|S|`.
    pub abs_mean: f64,
    /// `E(S^2)`.
    pub second_moment: f64,
    /// `P(S = 0)`, zero for odd populations.
    pub tie_probability: f64,
}

pub fn state_moments(model: &VotingModel, population: u64) -> Result<StateMoments> {
    state_moments_with_budget(model, population, DEFAULT_EXACT_BUDGET)
}

pub fn state_moments_with_budget(
    model: &VotingModel,
    population: u64,
    budget: u64,
) -> Result<StateMoments> {
    check_population(population, budget)?;
    model.validate()?;
    let n = population;
    let nf = n as f64;
    let even = n.is_multiple_of(2);
    let moments = match model {
        VotingModel::Independent => StateMoments {
            abs_mean: fair_abs_margin(n),
            second_moment: nf,
            tie_probability: if even {
                (ln_binomial(n, n / 2) - nf * std::f64::consts::LN_2).exp()
            } else {
                0.0
            },
        },
        VotingModel::CommonBelief(belief) => {
            // acc = [E|S|, int zeta^2, P(S = 0)]
            let acc = belief.expectation_vec(3, |z, w, acc| {
                let win = BinomialWindow::new(n, belief_probability(z));
                acc[0] += w * win.abs_deviation(0.0);
                acc[1] += w * z * z;
                if even {
                    let tie = win
                        .iter()
                        .find(|(k, _)| *k == n / 2)
                        .map_or(0.0, |(_, p)| p);
                    acc[2] += w * tie;
                }
            })?;
            StateMoments {
                abs_mean: acc[0],
                second_moment: nf + nf * (nf - 1.0) * acc[1],
                tie_probability: acc[2],
            }
        }
        VotingModel::MeanField { .. } if n == 1 => StateMoments {
            abs_mean: 1.0,
            second_moment: 1.0,
            tie_probability: 0.0,
        },
        VotingModel::MeanField { coupling } => {
            let pmf = magnetization_pmf(*coupling, n)?;
            StateMoments {
                abs_mean: pmf.abs_mean(),
                second_moment: pmf.second_moment(),
                tie_probability: pmf.prob(0),
            }
        }
    };
    Ok(moments)
}

fn belief_probability(z: f64) -> f64 {
    (0.5 * (1.0 + z)).clamp(0.0, 1.0)
}

fn check_population(population: u64, budget: u64) -> Result<()> {
    if population == 0 {
        return Err(Error::PopulationTooSmall { min: 1, found: 0 });
    }
    if population > budget {
        return Err(Error::BudgetExceeded {
            budget,
            found: population,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::pmf_exact;
    use crate::outcome::{margin, Outcome};

    fn models() -> Vec<VotingModel> {
        vec![
            VotingModel::Independent,
            VotingModel::common_belief(BeliefDistribution::point_mass_zero()).unwrap(),
            VotingModel::common_belief(BeliefDistribution::uniform(1.0).unwrap()).unwrap(),
            VotingModel::common_belief(BeliefDistribution::uniform(0.3).unwrap()).unwrap(),
            VotingModel::common_belief(BeliefDistribution::symmetric_pair(0.4).unwrap()).unwrap(),
            VotingModel::common_belief(
                BeliefDistribution::gridded(
                    vec![-1.0, -0.5, 0.0, 0.5, 1.0],
                    vec![0.25, 0.75, 0.25, 0.75, 0.25],
                )
                .unwrap(),
            )
            .unwrap(),
            VotingModel::mean_field(0.0).unwrap(),
            VotingModel::mean_field(0.5).unwrap(),
            VotingModel::mean_field(1.0).unwrap(),
            VotingModel::mean_field(2.0).unwrap(),
        ]
    }

    fn brute_force(model: &VotingModel, n: u64) -> (f64, f64, f64) {
        let (mut abs, mut sq, mut tie) = (0.0, 0.0, 0.0);
        for o in Outcome::enumerate(n as usize) {
            let p = pmf_exact(model, n, &o).unwrap();
            let s = o.sum() as f64;
            abs += p * margin(&o) as f64;
            sq += p * s * s;
            if s == 0.0 {
                tie += p;
            }
        }
        (abs, sq, tie)
    }

    #[test]
    fn small_examples() {
        let ind = VotingModel::Independent;
        assert!((expected_margin_exact(&ind, 2).unwrap().value - 1.0).abs() < 1e-15);
        assert!((expected_margin_exact(&ind, 3).unwrap().value - 1.5).abs() < 1e-15);
        let pm = VotingModel::common_belief(BeliefDistribution::point_mass_zero()).unwrap();
        assert!((expected_margin_exact(&pm, 3).unwrap().value - 1.5).abs() < 1e-15);
        // 4-outcome enumeration: 2 * P(S = 2) * 2 with P(S = 2) = e / (2e + 2).
        let mf = VotingModel::mean_field(0.5).unwrap();
        let e = 1f64.exp();
        let v = expected_margin_exact(&mf, 2).unwrap();
        assert!((v.value - 2.0 * e / (e + 1.0)).abs() < 1e-14);
        assert!((v.value - 1.4621171572600098).abs() < 1e-12);
        assert_eq!(v.method, EstimateMethod::Exact);
        assert_eq!(v.std_error, 0.0);
    }

    #[test]
    fn matches_brute_force_up_to_sixteen() {
        for model in models() {
            for n in 1..=16u64 {
                let (abs, sq, tie) = brute_force(&model, n);
                let exact = expected_margin_exact(&model, n).unwrap().value;
                assert!(
                    (exact - abs).abs() < 1e-9,
                    "{model} N={n}: {exact} vs {abs}"
                );
                if n <= 12 {
                    let m = state_moments(&model, n).unwrap();
                    assert!((m.abs_mean - abs).abs() < 1e-9);
                    assert!((m.second_moment - sq).abs() < 1e-9, "{model} N={n}");
                    assert!((m.tie_probability - tie).abs() < 1e-12, "{model} N={n}");
                }
            }
        }
    }

    #[test]
    fn even_closed_form() {
        for m in [1u64, 2, 5, 10, 50, 500, 5000] {
            let n = 2 * m;
            let closed = (n as f64) * (ln_binomial(n, m) - n as f64 * std::f64::consts::LN_2).exp();
            let v = expected_margin_exact(&VotingModel::Independent, n)
                .unwrap()
                .value;
            assert!(
                (v - closed).abs() < 1e-9 * closed.max(1.0),
                "N={n}: {v} vs {closed}"
            );
        }
    }

    #[test]
    fn converges_monotonically_to_constant() {
        let c = sqrt_two_over_pi();
        let errs: Vec<f64> = [100u64, 1000, 10_000]
            .iter()
            .map(|&n| {
                let v = expected_margin_exact(&VotingModel::Independent, n)
                    .unwrap()
                    .value;
                (v / (n as f64).sqrt() - c).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn budget_and_population_guards() {
        let ind = VotingModel::Independent;
        assert!(matches!(
            expected_margin_exact_with_budget(&ind, 101, 100),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(expected_margin_exact(&ind, 0).is_err());
        assert!(expected_margin_exact(&ind, 20_000_000).is_err());
    }

    #[test]
    fn monte_carlo_within_four_sigma() {
        let plan = MonteCarlo::new(7, 4).unwrap();
        let cases = vec![
            (VotingModel::Independent, 100u64),
            (VotingModel::mean_field(1.5).unwrap(), 500),
            (
                VotingModel::common_belief(BeliefDistribution::uniform(1.0).unwrap()).unwrap(),
                1000,
            ),
        ];
        for (model, n) in cases {
            let exact = expected_margin_exact(&model, n).unwrap().value;
            let mc = expected_margin_mc(&model, n, DEFAULT_SAMPLES, &plan).unwrap();
            assert_eq!(mc.method, EstimateMethod::MonteCarlo);
            assert_eq!(mc.samples, DEFAULT_SAMPLES);
            assert!(
                (mc.value - exact).abs() < 4.0 * mc.std_error,
                "{model} N={n}: mc {} +- {} vs {exact}",
                mc.value,
                mc.std_error
            );
        }
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let plan = MonteCarlo::new(3, 3).unwrap();
        let m = VotingModel::mean_field(0.8).unwrap();
        let a = expected_margin_mc(&m, 50, 10_000, &plan).unwrap();
        let b = expected_margin_mc(&m, 50, 10_000, &plan).unwrap();
        assert_eq!(a, b);
        assert!(expected_margin_mc(&m, 50, 1, &plan).is_err());
    }

    #[test]
    fn asymptotic_examples() {
        let v = expected_margin_asymptotic(&VotingModel::Independent, 10_000).unwrap();
        assert!((v.value - 79.788).abs() < 1e-3);
        assert_eq!(v.method, EstimateMethod::Asymptotic);
        let v = expected_margin_asymptotic(&VotingModel::mean_field(0.5).unwrap(), 10_000).unwrap();
        assert!((v.value - 112.838).abs() < 1e-3);
        let v = expected_margin_asymptotic(&VotingModel::mean_field(2.0).unwrap(), 10_000).unwrap();
        assert!((v.value - 9575.040241).abs() < 1e-4);
        assert!(matches!(
            expected_margin_asymptotic(&VotingModel::mean_field(1.0).unwrap(), 100),
            Err(Error::CriticalCoupling)
        ));
    }

    #[test]
    fn asymptotic_common_belief_regimes() {
        let n = 10_000;
        let wide = VotingModel::common_belief(BeliefDistribution::uniform(1.0).unwrap()).unwrap();
        assert!((expected_margin_asymptotic(&wide, n).unwrap().value - 5000.0).abs() < 1e-9);
        let narrow =
            VotingModel::common_belief(BeliefDistribution::uniform(1e-4).unwrap()).unwrap();
        assert!((expected_margin_asymptotic(&narrow, n).unwrap().value - 79.788).abs() < 1e-3);
        // mu_bar = 0.01 = N^(-1/2) sits inside the band.
        let edge = VotingModel::common_belief(BeliefDistribution::uniform(0.02).unwrap()).unwrap();
        assert!(matches!(
            expected_margin_asymptotic(&edge, n),
            Err(Error::Unclassifiable(_))
        ));
        let pm = VotingModel::common_belief(BeliefDistribution::point_mass_zero()).unwrap();
        assert!(expected_margin_asymptotic(&pm, n).is_ok());
    }
}
