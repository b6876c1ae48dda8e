//! Council weights and the democracy deficit `Delta = E(P - C)^2`.
//!
//! With `S_v` the vote sum of state `v`, `xi_v = chi(S_v)` its delegate vote
//! and `t_v = E xi_v = -P(S_v = 0)`, independence across states gives
//!
//! ```text
//! Delta = sum_v [E S_v^2 - 2 w_v E|S_v| + w_v^2] + (sum_v w_v t_v)^2 - sum_v w_v^2 t_v^2
//! ```
//!
//! because `S chi(S) = |S|` for every integer `S`. The tie terms vanish when
//! every population is odd.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    expected_margin_exact_with_budget, expected_margin_mc, state_moments_with_budget, StateMoments,
    DEFAULT_EXACT_BUDGET, DEFAULT_SAMPLES,
};
use crate::mc::MonteCarlo;
use crate::measures::pmf_exact;
use crate::model::{MarginEstimate, VotingModel};
use crate::outcome::{chi, Outcome, Quota};

/// Largest total population for which `Delta` is enumerated outcome by outcome.
pub const EXACT_DELTA_CAP: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub name: String,
    pub population: u64,
    pub model: VotingModel,
}

impl State {
    pub fn new(name: impl Into<String>, population: u64, model: VotingModel) -> Self {
        Self {
            name: name.into(),
            population,
            model,
        }
    }
}

/// States of a union and the council quota.
#[derive(Debug, Clone, PartialEq)]
pub struct CouncilSpec {
    states: Vec<State>,
    quota: Quota,
}

impl CouncilSpec {
    pub fn new(states: Vec<State>, quota: Quota) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidCouncil(
                "a council needs at least one state".into(),
            ));
        }
        let mut seen = HashSet::new();
        for s in &states {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::InvalidCouncil(format!(
                    "duplicate state name {:?}",
                    s.name
                )));
            }
            if s.population == 0 {
                return Err(Error::InvalidCouncil(format!(
                    "state {:?} must have population >= 1",
                    s.name
                )));
            }
            s.model.validate()?;
        }
        if let Quota::Qualified(q) = quota {
            Quota::qualified(q)?;
        }
        Ok(Self { states, quota })
    }

    /// Independent states with simple-majority quota and names `s1, s2, ...`.
    pub fn independent(populations: &[u64]) -> Result<Self> {
        Self::new(
            populations
                .iter()
                .enumerate()
                .map(|(i, &n)| State::new(format!("s{}", i + 1), n, VotingModel::Independent))
                .collect(),
            Quota::SimpleMajority,
        )
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn quota(&self) -> Quota {
        self.quota
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn total_population(&self) -> u64 {
        self.states.iter().map(|s| s.population).sum()
    }
}

/// Nonnegative finite weight per state.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative, received {w}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Copy rescaled so that the largest weight is 1; all-zero vectors are returned unchanged.
    pub fn normalized(&self) -> Self {
        let max = self.0.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            Self(self.0.iter().map(|w| w / max).collect())
        } else {
            self.clone()
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|w| w * c).collect())
    }

    fn check_len(&self, council: &CouncilSpec) -> Result<()> {
        if self.len() != council.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                expected: council.len(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeltaMethod {
    Exact,
    SemiExact,
    MonteCarlo,
}

impl fmt::Display for DeltaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::SemiExact => "semi_exact",
            Self::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub value: f64,
    pub method: DeltaMethod,
    /// Zero unless Monte Carlo.
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// Enumerates every outcome; total population at most [`EXACT_DELTA_CAP`].
    Exact,
    /// Closed form from per-state moments.
    SemiExact,
    MonteCarlo {
        trials: u64,
        plan: MonteCarlo,
    },
}

/// Options for per-state margin evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginOptions {
    /// Populations above this fall back to Monte Carlo.
    pub exact_budget: u64,
    pub samples: u64,
    /// State `v` uses seed `plan.seed + v`.
    pub plan: MonteCarlo,
}

impl Default for MarginOptions {
    fn default() -> Self {
        Self {
            exact_budget: DEFAULT_EXACT_BUDGET,
            samples: DEFAULT_SAMPLES,
            plan: MonteCarlo::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWeights {
    /// `w_v = E|S_v| / 2`.
    pub raw: WeightVector,
    /// `raw` rescaled to maximum 1; induces the same voting system.
    pub normalized: WeightVector,
    pub margins: Vec<MarginEstimate>,
}

/// Weights `w_v = E|S_v| / 2`.
pub fn optimal_weights(council: &CouncilSpec) -> Result<OptimalWeights> {
    optimal_weights_with(council, &MarginOptions::default())
}

pub fn optimal_weights_with(
    council: &CouncilSpec,
    options: &MarginOptions,
) -> Result<OptimalWeights> {
    let margins = council
        .states()
        .par_iter()
        .enumerate()
        .map(|(i, s)| state_margin(s, i, options))
        .collect::<Result<Vec<_>>>()?;
    let raw = WeightVector::new(margins.iter().map(|m| 0.5 * m.value).collect())?;
    Ok(OptimalWeights {
        normalized: raw.normalized(),
        raw,
        margins,
    })
}

fn state_margin(state: &State, index: usize, options: &MarginOptions) -> Result<MarginEstimate> {
    match expected_margin_exact_with_budget(&state.model, state.population, options.exact_budget) {
        Err(Error::BudgetExceeded { .. }) => {
            let plan = MonteCarlo {
                seed: options.plan.seed.wrapping_add(index as u64),
                ..options.plan
            };
            expected_margin_mc(&state.model, state.population, options.samples, &plan)
        }
        other => other,
    }
}

/// Exact per-state moments, evaluated in parallel.
pub fn council_moments(council: &CouncilSpec) -> Result<Vec<StateMoments>> {
    council
        .states()
        .par_iter()
        .map(|s| state_moments_with_budget(&s.model, s.population, DEFAULT_EXACT_BUDGET))
        .collect()
}

pub fn delta(
    council: &CouncilSpec,
    weights: &WeightVector,
    mode: DeltaMode,
) -> Result<DeltaEstimate> {
    weights.check_len(council)?;
    match mode {
        DeltaMode::Exact => Ok(DeltaEstimate {
            value: delta_enumerated(council, weights.as_slice())?,
            method: DeltaMethod::Exact,
            std_error: 0.0,
        }),
        DeltaMode::SemiExact => Ok(DeltaEstimate {
            value: delta_from_moments(&council_moments(council)?, weights.as_slice()),
            method: DeltaMethod::SemiExact,
            std_error: 0.0,
        }),
        DeltaMode::MonteCarlo { trials, plan } => {
            Ok(crate::council::simulate(council, weights, trials, &plan)?.delta)
        }
    }
}

/// Closed-form `Delta` for arbitrary real weights.
pub fn delta_from_moments(moments: &[StateMoments], weights: &[f64]) -> f64 {
    let mut diag = 0.0;
    let mut tie_sum = 0.0;
    let mut tie_sq = 0.0;
    for (m, &w) in moments.iter().zip(weights) {
        let t = -m.tie_probability;
        diag += m.second_moment - 2.0 * w * m.abs_mean + w * w;
        tie_sum += w * t;
        tie_sq += w * w * t * t;
    }
    (diag + tie_sum * tie_sum - tie_sq).max(0.0)
}

/// Per-state law of `(S, chi(S))` by outcome enumeration.
fn state_law(state: &State) -> Result<Vec<(f64, f64, f64)>> {
    let n = state.population;
    let mut by_sum = vec![0.0; n as usize + 1];
    for o in Outcome::enumerate(n as usize) {
        let k = ((o.sum() + n as i64) / 2) as usize;
        by_sum[k] += pmf_exact(&state.model, n, &o)?;
    }
    Ok(by_sum
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .map(|(k, p)| {
            let s = 2 * k as i64 - n as i64;
            (s as f64, f64::from(chi(s)), p)
        })
        .collect())
}

fn delta_enumerated(council: &CouncilSpec, weights: &[f64]) -> Result<f64> {
    let total = council.total_population();
    if total > EXACT_DELTA_CAP {
        return Err(Error::EnumerationTooLarge {
            cap: EXACT_DELTA_CAP,
            found: total,
        });
    }
    let laws = council
        .states()
        .iter()
        .map(state_law)
        .collect::<Result<Vec<_>>>()?;
    fn walk(laws: &[Vec<(f64, f64, f64)>], w: &[f64], p: f64, c: f64, prob: f64) -> f64 {
        match laws.split_first() {
            None => prob * (p - c) * (p - c),
            Some((law, rest)) => law
                .iter()
                .map(|&(s, xi, q)| walk(rest, &w[1..], p + s, c + w[0] * xi, prob * q))
                .sum(),
        }
    }
    Ok(walk(&laws, weights, 0.0, 0.0, 1.0))
}

/// The weight vector that minimizes `Delta`.
///
/// Setting the gradient to zero gives `w_v (1 - t_v^2) = E|S_v| - t_v s` with
/// `s = sum_v w_v t_v`, which is solved for `s` in closed form. For odd
/// populations this is `w_v = E|S_v|`.
pub fn delta_minimizing_weights(council: &CouncilSpec) -> Result<WeightVector> {
    Ok(minimizer_from_moments(&council_moments(council)?))
}

pub fn minimizer_from_moments(moments: &[StateMoments]) -> WeightVector {
    let (mut a, mut b) = (0.0, 0.0);
    for m in moments {
        let t = -m.tie_probability;
        let d = 1.0 - t * t;
        a += t * m.abs_mean / d;
        b += t * t / d;
    }
    let s = a / (1.0 + b);
    WeightVector(
        moments
            .iter()
            .map(|m| {
                let t = -m.tie_probability;
                ((m.abs_mean - t * s) / (1.0 - t * t)).max(0.0)
            })
            .collect(),
    )
}

/// Scale `c` minimizing `Delta(c u)` along the direction `u`.
pub fn ray_scale(moments: &[StateMoments], direction: &[f64]) -> f64 {
    let mut lin = 0.0;
    let mut quad = 0.0;
    let mut tie_sum = 0.0;
    let mut tie_sq = 0.0;
    for (m, &u) in moments.iter().zip(direction) {
        let t = -m.tie_probability;
        lin += u * m.abs_mean;
        quad += u * u;
        tie_sum += u * t;
        tie_sq += u * u * t * t;
    }
    let q = quad + tie_sum * tie_sum - tie_sq;
    if q > 0.0 {
        lin / q
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub state: usize,
    pub offset: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// Moving weight `state` by `offset` did not increase `Delta`.
    NotIncreased {
        state: usize,
        offset: f64,
        base: f64,
        perturbed: f64,
    },
    /// `Delta` along coordinate `state` has its vertex away from the candidate.
    VertexMismatch {
        state: usize,
        vertex: f64,
        weight: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotIncreased {
                state,
                offset,
                base,
                perturbed,
            } => write!(
                f,
                "state {state}: offset {offset:+} gives Delta {perturbed} <= {base}"
            ),
            Self::VertexMismatch {
                state,
                vertex,
                weight,
            } => write!(
                f,
                "state {state}: vertex at {vertex}, candidate weight {weight}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerReport {
    /// Method used for the perturbation comparisons.
    pub method: DeltaMethod,
    pub base_delta: f64,
    pub perturbations: Vec<Perturbation>,
    /// Vertex of the closed-form `Delta` along each coordinate.
    pub vertices: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl MinimizerReport {
    pub fn is_minimizer(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `w_star` is a coordinatewise minimizer of `Delta`.
///
/// Perturbations use enumeration when the total population allows it and the
/// closed form otherwise. Violations are reported, not raised.
pub fn verify_minimizer(
    council: &CouncilSpec,
    w_star: &WeightVector,
    step: f64,
) -> Result<MinimizerReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, received {step}"
        )));
    }
    w_star.check_len(council)?;
    let moments = council_moments(council)?;
    let exact = council.total_population() <= EXACT_DELTA_CAP;
    let eval = |w: &[f64]| -> Result<f64> {
        if exact {
            delta_enumerated(council, w)
        } else {
            Ok(delta_from_moments(&moments, w))
        }
    };
    let base = w_star.as_slice().to_vec();
    let base_delta = eval(&base)?;
    let mut perturbations = Vec::new();
    let mut vertices = Vec::new();
    let mut violations = Vec::new();
    for i in 0..base.len() {
        for offset in [-step, step] {
            let mut w = base.clone();
            w[i] += offset;
            let d = eval(&w)?;
            perturbations.push(Perturbation {
                state: i,
                offset,
                delta: d,
            });
            if d <= base_delta {
                violations.push(Violation::NotIncreased {
                    state: i,
                    offset,
                    base: base_delta,
                    perturbed: d,
                });
            }
        }
        let at = |x: f64| {
            let mut w = base.clone();
            w[i] = x;
            delta_from_moments_signed(&moments, &w)
        };
        let (lo, mid, hi) = (at(base[i] - step), at(base[i]), at(base[i] + step));
        let vertex = base[i] - step * (hi - lo) / (2.0 * (hi - 2.0 * mid + lo));
        vertices.push(vertex);
        if (vertex - base[i]).abs() > 1e-9 * base[i].abs().max(1.0) {
            violations.push(Violation::VertexMismatch {
                state: i,
                vertex,
                weight: base[i],
            });
        }
    }
    Ok(MinimizerReport {
        method: if exact {
            DeltaMethod::Exact
        } else {
            DeltaMethod::SemiExact
        },
        base_delta,
        perturbations,
        vertices,
        violations,
    })
}

/// Closed form without the clamp at zero, for vertex fitting.
fn delta_from_moments_signed(moments: &[StateMoments], weights: &[f64]) -> f64 {
    let mut diag = 0.0;
    let mut tie_sum = 0.0;
    let mut tie_sq = 0.0;
    for (m, &w) in moments.iter().zip(weights) {
        let t = -m.tie_probability;
        diag += m.second_moment - 2.0 * w * m.abs_mean + w * w;
        tie_sum += w * t;
        tie_sq += w * w * t * t;
    }
    diag + tie_sum * tie_sum - tie_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::BeliefDistribution;
    use crate::outcome::margin;

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    fn models() -> Vec<VotingModel> {
        vec![
            VotingModel::Independent,
            VotingModel::common_belief(BeliefDistribution::uniform(1.0).unwrap()).unwrap(),
            VotingModel::common_belief(BeliefDistribution::symmetric_pair(0.4).unwrap()).unwrap(),
            VotingModel::mean_field(0.7).unwrap(),
            VotingModel::mean_field(2.0).unwrap(),
        ]
    }

    #[test]
    fn council_validation() {
        assert!(CouncilSpec::new(vec![], Quota::SimpleMajority).is_err());
        let dup = vec![
            State::new("a", 1, VotingModel::Independent),
            State::new("a", 2, VotingModel::Independent),
        ];
        assert!(CouncilSpec::new(dup, Quota::SimpleMajority).is_err());
        assert!(CouncilSpec::independent(&[3, 0]).is_err());
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        assert_eq!(c.total_population(), 9);
        assert!(WeightVector::new(vec![1.0, -0.1]).is_err());
        assert!(WeightVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn optimal_weight_examples() {
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        let ow = optimal_weights(&c).unwrap();
        assert_eq!(ow.raw.as_slice(), &[0.5, 0.75, 0.9375]);
        assert!((ow.normalized.as_slice()[2] - 1.0).abs() < 1e-15);
        assert!((ow.normalized.as_slice()[0] - 0.5 / 0.9375).abs() < 1e-15);
        let single = optimal_weights(&CouncilSpec::independent(&[1]).unwrap()).unwrap();
        assert_eq!(single.raw.as_slice(), &[0.5]);
        let pair = optimal_weights(&CouncilSpec::independent(&[100, 400]).unwrap()).unwrap();
        let r = pair.raw.as_slice()[1] / pair.raw.as_slice()[0];
        assert!((r - 2.0).abs() < 0.04, "{r}");
    }

    #[test]
    fn falls_back_to_monte_carlo_over_budget() {
        let c = CouncilSpec::independent(&[50, 500]).unwrap();
        let opts = MarginOptions {
            exact_budget: 100,
            samples: 20_000,
            plan: MonteCarlo::new(5, 2).unwrap(),
        };
        let ow = optimal_weights_with(&c, &opts).unwrap();
        assert_eq!(ow.margins[0].method, crate::model::EstimateMethod::Exact);
        assert_eq!(
            ow.margins[1].method,
            crate::model::EstimateMethod::MonteCarlo
        );
        let exact = crate::binomial::fair_abs_margin(500);
        assert!((ow.margins[1].value - exact).abs() < 4.0 * ow.margins[1].std_error);
    }

    #[test]
    fn sign_times_chi_is_abs() {
        // E(S chi(S)) = E|S| and E S = 0 for every model.
        for model in models() {
            for n in 1..=12u64 {
                let (mut s_chi, mut abs, mut mean) = (0.0, 0.0, 0.0);
                for o in Outcome::enumerate(n as usize) {
                    let p = pmf_exact(&model, n, &o).unwrap();
                    let s = o.sum();
                    s_chi += p * (s * i64::from(chi(s))) as f64;
                    abs += p * margin(&o) as f64;
                    mean += p * s as f64;
                }
                assert!((s_chi - abs).abs() < 1e-12, "{model} N={n}");
                assert!(mean.abs() < 1e-12, "{model} N={n}");
            }
        }
    }

    #[test]
    fn delta_small_examples() {
        let one = CouncilSpec::independent(&[1]).unwrap();
        let d = delta(&one, &w(&[0.5]), DeltaMode::Exact).unwrap();
        assert!((d.value - 0.25).abs() < 1e-15);
        assert_eq!(d.method, DeltaMethod::Exact);
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        let zero = delta(&c, &WeightVector::zeros(3), DeltaMode::Exact).unwrap();
        assert!((zero.value - 9.0).abs() < 1e-12);
        assert!(delta(&c, &w(&[1.0]), DeltaMode::Exact).is_err());
        let big = CouncilSpec::independent(&[10, 11]).unwrap();
        assert!(delta(&big, &WeightVector::zeros(2), DeltaMode::Exact).is_err());
    }

    #[test]
    fn delta_oracle_values() {
        // 512-outcome enumeration oracle.
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        let base = [0.5, 0.75, 0.9375];
        let d = delta(&c, &w(&base), DeltaMode::Exact).unwrap().value;
        assert!((d - 3.92578125).abs() < 1e-12);
        let expected = [
            (0, -0.1, 4.03578125),
            (0, 0.1, 3.83578125),
            (1, -0.1, 4.08578125),
            (1, 0.1, 3.78578125),
            (2, -0.1, 4.12328125),
            (2, 0.1, 3.74828125),
        ];
        for (i, off, want) in expected {
            let mut v = base;
            v[i] += off;
            let got = delta(&c, &w(&v), DeltaMode::Exact).unwrap().value;
            assert!((got - want).abs() < 1e-12, "{i} {off}: {got}");
        }
        let min = delta_minimizing_weights(&c).unwrap();
        assert_eq!(min.as_slice(), &[1.0, 1.5, 1.875]);
        let d = delta(&c, &min, DeltaMode::Exact).unwrap().value;
        assert!((d - 2.234375).abs() < 1e-12);
    }

    fn councils() -> Vec<CouncilSpec> {
        let m = models();
        vec![
            CouncilSpec::independent(&[1, 3, 5]).unwrap(),
            CouncilSpec::independent(&[2, 4]).unwrap(),
            CouncilSpec::independent(&[2, 2, 2, 2]).unwrap(),
            CouncilSpec::new(
                vec![
                    State::new("a", 4, m[1].clone()),
                    State::new("b", 5, m[3].clone()),
                    State::new("c", 6, m[4].clone()),
                ],
                Quota::SimpleMajority,
            )
            .unwrap(),
            CouncilSpec::new(
                vec![
                    State::new("a", 3, m[2].clone()),
                    State::new("b", 8, m[1].clone()),
                    State::new("c", 2, m[4].clone()),
                ],
                Quota::SimpleMajority,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn semi_exact_matches_enumeration() {
        for c in councils() {
            let k = c.len();
            for weights in [
                vec![0.0; k],
                optimal_weights(&c).unwrap().raw.as_slice().to_vec(),
                delta_minimizing_weights(&c).unwrap().as_slice().to_vec(),
                (0..k).map(|i| 0.3 + 0.7 * i as f64).collect(),
            ] {
                let wv = w(&weights);
                let e = delta(&c, &wv, DeltaMode::Exact).unwrap().value;
                let s = delta(&c, &wv, DeltaMode::SemiExact).unwrap().value;
                assert!((e - s).abs() < 1e-10, "{c:?} {weights:?}: {e} vs {s}");
            }
        }
        // Tie cross-term oracle: council (2, 4) at E|S| / 2.
        let c = CouncilSpec::independent(&[2, 4]).unwrap();
        let d = delta(&c, &w(&[0.5, 0.75]), DeltaMode::SemiExact)
            .unwrap()
            .value;
        assert!((d - 3.703125).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_give_second_moments() {
        for c in councils() {
            let m = council_moments(&c).unwrap();
            let want: f64 = m.iter().map(|m| m.second_moment).sum();
            let d = delta(&c, &WeightVector::zeros(c.len()), DeltaMode::SemiExact).unwrap();
            assert!((d.value - want).abs() < 1e-10);
        }
    }

    #[test]
    fn single_state_scan() {
        // Delta(w) = 3 - 3w + w^2 for one independent state of 3 voters.
        let c = CouncilSpec::independent(&[3]).unwrap();
        let (best, _) = (0..=300)
            .map(|i| {
                let x = i as f64 / 100.0;
                (x, delta(&c, &w(&[x]), DeltaMode::Exact).unwrap().value)
            })
            .fold((0.0, f64::INFINITY), |b, p| if p.1 < b.1 { p } else { b });
        assert!((best - 1.5).abs() < 1e-12);
        let r = verify_minimizer(&c, &w(&[1.5]), 0.1).unwrap();
        assert!(r.is_minimizer());
        assert!((r.vertices[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn lattice_search_finds_minimizer() {
        for c in councils().into_iter().filter(|c| c.len() <= 3) {
            let m = council_moments(&c).unwrap();
            let target = minimizer_from_moments(&m);
            let axis: Vec<f64> = (0..=120).map(|i| 0.05 * i as f64).collect();
            let mut best = (f64::INFINITY, vec![]);
            let k = c.len();
            let mut idx = vec![0usize; k];
            loop {
                let pt: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
                let d = delta_from_moments(&m, &pt);
                if d < best.0 {
                    best = (d, pt);
                }
                let mut j = 0;
                while j < k {
                    idx[j] += 1;
                    if idx[j] < axis.len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == k {
                    break;
                }
            }
            for (b, t) in best.1.iter().zip(target.as_slice()) {
                assert!(
                    (b - t).abs() <= 0.025 + 1e-12,
                    "{c:?}: {:?} vs {:?}",
                    best.1,
                    target
                );
            }
        }
    }

    #[test]
    fn verify_reports_true_and_false_minimizers() {
        for c in councils() {
            let min = delta_minimizing_weights(&c).unwrap();
            let r = verify_minimizer(&c, &min, 0.1).unwrap();
            assert!(r.is_minimizer(), "{c:?}: {:?}", r.violations);
            assert_eq!(r.perturbations.len(), 2 * c.len());
            // Doubling the minimizer moves away from the vertex.
            let twice = min.scaled(2.0).unwrap();
            let d1 = delta(&c, &min, DeltaMode::SemiExact).unwrap().value;
            let d2 = delta(&c, &twice, DeltaMode::SemiExact).unwrap().value;
            assert!(d2 > d1);
        }
        let c = CouncilSpec::independent(&[1, 3, 5]).unwrap();
        let half = optimal_weights(&c).unwrap().raw;
        let r = verify_minimizer(&c, &half, 0.1).unwrap();
        assert_eq!(r.method, DeltaMethod::Exact);
        assert!(!r.is_minimizer());
        for (v, want) in r.vertices.iter().zip([1.0, 1.5, 1.875]) {
            assert!((v - want).abs() < 1e-9);
        }
        assert!(verify_minimizer(&c, &half, 0.0).is_err());
    }

    #[test]
    fn ray_scale_minimizes_along_direction() {
        for c in councils() {
            let m = council_moments(&c).unwrap();
            let u: Vec<f64> = c
                .states()
                .iter()
                .map(|s| (s.population as f64).sqrt())
                .collect();
            let s = ray_scale(&m, &u);
            let at = |x: f64| delta_from_moments(&m, &u.iter().map(|v| v * x).collect::<Vec<_>>());
            assert!(at(s) <= at(s * 1.01) && at(s) <= at(s * 0.99));
        }
        // The minimizer direction scales to itself.
        let c = CouncilSpec::independent(&[2, 5, 8]).unwrap();
        let m = council_moments(&c).unwrap();
        let min = minimizer_from_moments(&m);
        assert!((ray_scale(&m, min.as_slice()) - 1.0).abs() < 1e-12);
    }
}
