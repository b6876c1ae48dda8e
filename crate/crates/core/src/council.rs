//! Council decisions and end-to-end union simulation.

use std::fmt;

use crate::error::{Error, Result};
use crate::mc::{Moments, MonteCarlo};
use crate::measures::ModelSampler;
use crate::outcome::{chi, majority_sign, Outcome, Quota, Spin};
use crate::weights::{
    council_moments, delta_from_moments, ray_scale, CouncilSpec, DeltaEstimate, DeltaMethod,
    WeightVector,
};

/// Majority sign of a state's vote sum; ties vote no.
pub fn state_delegate_vote(outcome: &Outcome) -> Spin {
    majority_sign(outcome.sum() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Accept => "accept",
            Self::Reject => "reject",
        })
    }
}

/// Accepts iff `sum_v w_v xi_v` meets the quota relative to `W = sum_v w_v`.
pub fn council_decision(
    delegate_votes: &[Spin],
    weights: &WeightVector,
    quota: Quota,
) -> Result<Decision> {
    if delegate_votes.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "delegate votes",
            expected: weights.len(),
            found: delegate_votes.len(),
        });
    }
    if let Some(v) = delegate_votes.iter().find(|v| v.abs() != 1) {
        return Err(Error::InvalidOutcome(format!(
            "delegate vote must be +1 or -1, received {v}"
        )));
    }
    let score: f64 = delegate_votes
        .iter()
        .zip(weights.as_slice())
        .map(|(&v, w)| f64::from(v) * w)
        .sum();
    Ok(if quota.accepts(score, weights.total()) {
        Decision::Accept
    } else {
        Decision::Reject
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub delta: DeltaEstimate,
    /// Fraction of trials where the council and the popular vote decide differently.
    pub disagreement_rate: f64,
    pub disagreement_std_error: f64,
    /// Mean of `|P|`.
    pub mean_popular_margin: f64,
    pub trials: u64,
    /// Fraction of yes votes among the voters of each state.
    pub per_state_yes_rates: Vec<f64>,
    /// Fraction of trials in which each delegate votes yes.
    pub delegate_yes_rates: Vec<f64>,
    /// Sample covariance matrix of the delegate votes, row-major.
    pub delegate_covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    deficit: Moments,
    disagree: Moments,
    popular: Moments,
    yes_votes: Vec<u64>,
    /// `sum xi_v` and `sum xi_v xi_u`; exact integers.
    xi: Vec<i64>,
    xi_cross: Vec<i64>,
}

impl Tally {
    fn new(states: usize) -> Self {
        Self {
            yes_votes: vec![0; states],
            xi: vec![0; states],
            xi_cross: vec![0; states * states],
            ..Self::default()
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.deficit.merge(&other.deficit);
        self.disagree.merge(&other.disagree);
        self.popular.merge(&other.popular);
        add(&mut self.yes_votes, &other.yes_votes);
        add(&mut self.xi, &other.xi);
        add(&mut self.xi_cross, &other.xi_cross);
    }
}

fn add<T: Copy + std::ops::AddAssign>(a: &mut [T], b: &[T]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
}

/// Simulates `trials` independent referendums across the union.
pub fn simulate(
    council: &CouncilSpec,
    weights: &WeightVector,
    trials: u64,
    plan: &MonteCarlo,
) -> Result<SimulationResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least 1 trial".into(),
        ));
    }
    if weights.len() != council.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: council.len(),
            found: weights.len(),
        });
    }
    let samplers = council
        .states()
        .iter()
        .map(|s| ModelSampler::new(&s.model, s.population))
        .collect::<Result<Vec<_>>>()?;
    let m = council.len();
    let w = weights.as_slice();
    let total_weight = weights.total();
    let total_pop = council.total_population() as f64;
    let quota = council.quota();
    let parts = plan.run(trials, |mut rng, count| {
        let mut t = Tally::new(m);
        let mut xi = vec![0i64; m];
        for _ in 0..count {
            let (mut p, mut c) = (0i64, 0.0);
            for (v, sampler) in samplers.iter().enumerate() {
                let yes = sampler.sample_yes(&mut rng);
                let s = 2 * yes as i64 - sampler.population() as i64;
                t.yes_votes[v] += yes;
                xi[v] = i64::from(chi(s));
                p += s;
                c += w[v] * xi[v] as f64;
            }
            let pf = p as f64;
            t.deficit.push((pf - c) * (pf - c));
            t.popular.push(pf.abs());
            let differ = quota.accepts(pf, total_pop) != quota.accepts(c, total_weight);
            t.disagree.push(if differ { 1.0 } else { 0.0 });
            for a in 0..m {
                t.xi[a] += xi[a];
                for b in 0..m {
                    t.xi_cross[a * m + b] += xi[a] * xi[b];
                }
            }
        }
        t
    });
    let mut tally = Tally::new(m);
    parts.iter().for_each(|p| tally.merge(p));
    let tf = trials as f64;
    let mean_xi: Vec<f64> = tally.xi.iter().map(|&s| s as f64 / tf).collect();
    let delegate_covariance = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let e = tally.xi_cross[a * m + b] as f64 / tf;
                    let cov = e - mean_xi[a] * mean_xi[b];
                    if trials > 1 {
                        cov * tf / (tf - 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(SimulationResult {
        delta: DeltaEstimate {
            value: tally.deficit.mean(),
            method: DeltaMethod::MonteCarlo,
            std_error: tally.deficit.std_error(),
        },
        disagreement_rate: tally.disagree.mean(),
        disagreement_std_error: tally.disagree.std_error(),
        mean_popular_margin: tally.popular.mean(),
        trials,
        per_state_yes_rates: tally
            .yes_votes
            .iter()
            .zip(council.states())
            .map(|(&y, s)| y as f64 / (tf * s.population as f64))
            .collect(),
        delegate_yes_rates: mean_xi.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        delegate_covariance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightRule {
    /// `E|S_v| / 2`.
    Optimal,
    SqrtPopulation,
    Population,
    Equal,
}

impl WeightRule {
    pub const ALL: [WeightRule; 4] = [
        Self::Optimal,
        Self::SqrtPopulation,
        Self::Population,
        Self::Equal,
    ];
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::SqrtPopulation => "sqrt_population",
            Self::Population => "population",
            Self::Equal => "equal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleComparison {
    pub rule: WeightRule,
    /// Unscaled weights of the rule.
    pub direction: WeightVector,
    /// Scale minimizing `Delta` along `direction`.
    pub scale: f64,
    pub weights: WeightVector,
    /// Closed-form `Delta` at `weights`.
    pub delta_semi_exact: f64,
    pub simulation: SimulationResult,
}

/// Compares weight rules after scaling each one optimally along its ray.
///
/// Every rule is simulated with the same `plan`, so the rules see the same
/// random referendums.
pub fn compare_weight_rules(
    council: &CouncilSpec,
    trials: u64,
    plan: &MonteCarlo,
) -> Result<Vec<RuleComparison>> {
    let moments = council_moments(council)?;
    WeightRule::ALL
        .iter()
        .map(|&rule| {
            let u: Vec<f64> = council
                .states()
                .iter()
                .zip(&moments)
                .map(|(s, m)| match rule {
                    WeightRule::Optimal => 0.5 * m.abs_mean,
                    WeightRule::SqrtPopulation => (s.population as f64).sqrt(),
                    WeightRule::Population => s.population as f64,
                    WeightRule::Equal => 1.0,
                })
                .collect();
            let scale = ray_scale(&moments, &u);
            let direction = WeightVector::new(u)?;
            let weights = direction.scaled(scale)?;
            let delta_semi_exact = delta_from_moments(&moments, weights.as_slice());
            let simulation = simulate(council, &weights, trials, plan)?;
            Ok(RuleComparison {
                rule,
                direction,
                scale,
                weights,
                delta_semi_exact,
                simulation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VotingModel;
    use crate::weights::{delta, optimal_weights, DeltaMode, State};

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn delegate_votes() {
        assert_eq!(
            state_delegate_vote(&Outcome::new(vec![1, 1, -1]).unwrap()),
            1
        );
        assert_eq!(state_delegate_vote(&Outcome::new(vec![1, -1]).unwrap()), -1);
        assert_eq!(
            state_delegate_vote(&Outcome::new(vec![-1, -1, -1]).unwrap()),
            -1
        );
    }

    #[test]
    fn decisions() {
        let ones = w(&[1.0, 1.0, 1.0]);
        let half = Quota::SimpleMajority;
        assert_eq!(
            council_decision(&[1, 1, -1], &ones, half).unwrap(),
            Decision::Accept
        );
        assert_eq!(
            council_decision(&[1, -1], &w(&[1.0, 1.0]), half).unwrap(),
            Decision::Reject
        );
        let q = Quota::qualified(0.75).unwrap();
        assert_eq!(
            council_decision(&[1, 1, -1], &ones, q).unwrap(),
            Decision::Reject
        );
        assert_eq!(
            council_decision(&[1, 1, 1], &ones, q).unwrap(),
            Decision::Accept
        );
        assert!(council_decision(&[1, 1], &ones, half).is_err());
        assert!(council_decision(&[1, 0, 1], &ones, half).is_err());
    }

    #[test]
    fn simulation_matches_enumeration() {
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        let ow = optimal_weights(&c).unwrap().raw;
        let exact = delta(&c, &ow, DeltaMode::Exact).unwrap().value;
        let plan = MonteCarlo::new(2024, 4).unwrap();
        let sim = simulate(&c, &ow, 1_000_000, &plan).unwrap();
        assert!((sim.delta.value - exact).abs() < 4.0 * sim.delta.std_error);
        assert_eq!(sim.trials, 1_000_000);
        for r in sim
            .per_state_yes_rates
            .iter()
            .chain(&sim.delegate_yes_rates)
        {
            assert!((0.0..=1.0).contains(r));
        }
        assert!((0.0..=1.0).contains(&sim.disagreement_rate));
    }

    #[test]
    fn delegates_are_independent_across_states() {
        let c = CouncilSpec::new(
            vec![
                State::new("a", 4, VotingModel::mean_field(1.5).unwrap()),
                State::new("b", 7, VotingModel::Independent),
                State::new("c", 10, VotingModel::mean_field(0.5).unwrap()),
            ],
            Quota::SimpleMajority,
        )
        .unwrap();
        let trials = 200_000u64;
        let sim = simulate(
            &c,
            &w(&[1.0, 1.0, 1.0]),
            trials,
            &MonteCarlo::new(9, 3).unwrap(),
        )
        .unwrap();
        let cov = &sim.delegate_covariance;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let sd = ((cov[a][a] * cov[b][b]) / trials as f64).sqrt();
                    assert!(cov[a][b].abs() < 4.0 * sd, "({a},{b}): {}", cov[a][b]);
                }
            }
        }
    }

    #[test]
    fn zero_weights_reject_everything() {
        let c = CouncilSpec::independent(&[3, 4, 6]).unwrap();
        let sim = simulate(
            &c,
            &WeightVector::zeros(3),
            200_000,
            &MonteCarlo::new(1, 2).unwrap(),
        )
        .unwrap();
        // E P^2 = 13 and the council never accepts, so disagreement = P(P > 0).
        assert!((sim.delta.value - 13.0).abs() < 4.0 * sim.delta.std_error);
        // P(P > 0) = (1 - P(P = 0)) / 2 with P(P = 0) = C(13, 6.5) = 0 for odd totals.
        assert!((sim.disagreement_rate - 0.5).abs() < 4.0 * sim.disagreement_std_error);
    }

    #[test]
    fn reproducible_for_fixed_plan() {
        let c = CouncilSpec::independent(&[5, 9]).unwrap();
        let ws = w(&[1.0, 2.0]);
        let plan = MonteCarlo::new(77, 3).unwrap();
        assert_eq!(
            simulate(&c, &ws, 10_000, &plan).unwrap(),
            simulate(&c, &ws, 10_000, &plan).unwrap()
        );
        assert!(simulate(&c, &ws, 0, &plan).is_err());
    }

    #[test]
    fn exchangeable_states_relabel() {
        let c = CouncilSpec::independent(&[5, 5, 5]).unwrap();
        let ws = w(&[1.0, 1.0, 1.0]);
        let a = simulate(&c, &ws, 100_000, &MonteCarlo::new(3, 1).unwrap()).unwrap();
        let b = simulate(&c, &ws, 100_000, &MonteCarlo::new(4, 1).unwrap()).unwrap();
        let se = (a.disagreement_std_error.powi(2) + b.disagreement_std_error.powi(2)).sqrt();
        assert!((a.disagreement_rate - b.disagreement_rate).abs() < 4.0 * se);
    }

    #[test]
    fn simulated_optimum_beats_perturbations() {
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        let plan = MonteCarlo::new(31, 4).unwrap();
        let best = crate::weights::delta_minimizing_weights(&c).unwrap();
        let base = simulate(&c, &best, 400_000, &plan).unwrap().delta;
        for i in 0..3 {
            for off in [-0.5, 0.5] {
                let mut v = best.as_slice().to_vec();
                v[i] += off;
                // Same plan, so the difference is measured on common draws.
                let d = simulate(&c, &w(&v), 400_000, &plan).unwrap().delta;
                assert!(
                    d.value > base.value,
                    "{i} {off}: {} vs {}",
                    d.value,
                    base.value
                );
            }
        }
    }

    #[test]
    fn rule_comparisons() {
        let plan = MonteCarlo::new(5, 2).unwrap();
        let ind = CouncilSpec::independent(&[100, 400, 900]).unwrap();
        let rows = compare_weight_rules(&ind, 20_000, &plan).unwrap();
        let get = |rows: &[RuleComparison], r: WeightRule| {
            rows.iter().find(|x| x.rule == r).unwrap().delta_semi_exact
        };
        let (opt, sq) = (
            get(&rows, WeightRule::Optimal),
            get(&rows, WeightRule::SqrtPopulation),
        );
        assert!((opt / sq - 1.0).abs() < 1e-3, "{opt} vs {sq}");
        assert!(opt <= sq);
        let rows_ind = &rows;
        for r in rows_ind {
            let s = &r.simulation.delta;
            assert!(
                (s.value - r.delta_semi_exact).abs() < 4.0 * s.std_error,
                "{}",
                r.rule
            );
        }

        let mf = CouncilSpec::new(
            [100u64, 400, 900]
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    State::new(format!("m{i}"), n, VotingModel::mean_field(1.5).unwrap())
                })
                .collect(),
            Quota::SimpleMajority,
        )
        .unwrap();
        let rows = compare_weight_rules(&mf, 20_000, &plan).unwrap();
        assert!(get(&rows, WeightRule::Population) < get(&rows, WeightRule::SqrtPopulation));

        let single = CouncilSpec::independent(&[7]).unwrap();
        let rows = compare_weight_rules(&single, 1000, &plan).unwrap();
        let first = rows[0].delta_semi_exact;
        for r in &rows {
            assert!((r.delta_semi_exact - first).abs() < 1e-12);
            assert!((r.weights.as_slice()[0] - rows[0].weights.as_slice()[0]).abs() < 1e-12);
        }
    }
}
