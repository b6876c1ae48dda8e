//! Exact probabilities and samplers for the three voting measures.
//!
//! All three measures are exchangeable, so an outcome can be sampled by
//! drawing the total spin `S` from its exact law and then choosing a
//! uniformly random set of `(N + S) / 2` yes-voters.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

pub use crate::belief::BeliefDistribution;
use crate::binomial::ln_binomial;
use crate::error::{Error, Result};
use crate::model::VotingModel;
use crate::outcome::{affirmative_count, Outcome};

/// Largest population for which outcome-level enumeration is allowed.
pub const ENUMERATION_CAP: u64 = 24;

/// Probability of one exact outcome under `model`.
///
/// Common-belief mixtures over continuous beliefs are integrated with the
/// composite Gauss–Legendre rule; the integrand is a polynomial of degree
/// `N`, so the rule is exact up to rounding.
pub fn pmf_exact(model: &VotingModel, population: u64, outcome: &Outcome) -> Result<f64> {
    if population > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            cap: ENUMERATION_CAP,
            found: population,
        });
    }
    if population == 0 {
        return Err(Error::PopulationTooSmall { min: 1, found: 0 });
    }
    if outcome.len() as u64 != population {
        return Err(Error::LengthMismatch {
            what: "outcome population",
            expected: population as usize,
            found: outcome.len(),
        });
    }
    model.validate()?;
    let n = population as i32;
    let yes = affirmative_count(outcome) as i32;
    match model {
        VotingModel::Independent => Ok(0.5f64.powi(n)),
        VotingModel::CommonBelief(belief) => belief.expectation(|z| {
            let p = 0.5 * (1.0 + z);
            p.powi(yes) * (1.0 - p).powi(n - yes)
        }),
        VotingModel::MeanField { coupling } => {
            if population == 1 {
                return Ok(0.5);
            }
            let pmf = magnetization_pmf(*coupling, population)?;
            let k = yes as u64;
            Ok(pmf.prob(outcome.sum()) / ln_binomial(population, k).exp())
        }
    }
}

/// Law of the total spin `S` under the mean-field measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationPmf {
    population: u64,
    /// `probs[k] = P(S = 2k - N)`.
    probs: Vec<f64>,
}

impl MagnetizationPmf {
    pub fn population(&self) -> u64 {
        self.population
    }

    /// `P(S = s)`; zero off the lattice `s = N (mod 2)`.
    pub fn prob(&self, s: i64) -> f64 {
        let n = self.population as i64;
        if s.abs() > n || (s + n) % 2 != 0 {
            return 0.0;
        }
        self.probs[((s + n) / 2) as usize]
    }

    /// `(s, P(S = s))` for `s = -N, -N + 2, ..., N`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.population as i64;
        self.probs
            .iter()
            .enumerate()
            .map(move |(k, &p)| (2 * k as i64 - n, p))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `E|S|`.
    pub fn abs_mean(&self) -> f64 {
        self.iter().map(|(s, p)| s.unsigned_abs() as f64 * p).sum()
    }

    /// `E(S^2)`.
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(s, p)| (s as f64).powi(2) * p).sum()
    }

    /// Most likely non-negative value of `S / N`.
    pub fn positive_mode(&self) -> f64 {
        let n = self.population as i64;
        let (s, _) =
            self.iter()
                .filter(|(s, _)| *s >= 0)
                .fold((0, f64::NEG_INFINITY), |best, (s, p)| {
                    if p > best.1 {
                        (s, p)
                    } else {
                        best
                    }
                });
        s as f64 / n as f64
    }
}

/// `P(S = s) ∝ C(N, (N + s)/2) exp(J s^2 / (2(N - 1)))`, normalized in log space.
pub fn magnetization_pmf(coupling: f64, population: u64) -> Result<MagnetizationPmf> {
    if !(coupling.is_finite() && coupling >= 0.0) {
        return Err(Error::InvalidCoupling(coupling));
    }
    if population < 2 {
        return Err(Error::PopulationTooSmall {
            min: 2,
            found: population,
        });
    }
    let n = population;
    let nf = n as f64;
    let scale = coupling / (2.0 * (nf - 1.0));
    let half = (n / 2) as usize;
    let mut logw = vec![0.0; n as usize + 1];
    for (k, lw) in logw.iter_mut().enumerate().take(half + 1) {
        let s = 2.0 * k as f64 - nf;
        *lw = ln_binomial(n, k as u64) + scale * s * s;
    }
    // Mirror so that P(s) = P(-s) holds bit for bit.
    for k in half + 1..=n as usize {
        logw[k] = logw[n as usize - k];
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|l| (l - max).exp()).sum();
    let log_z = max + total.ln();
    let probs = logw.iter().map(|l| (l - log_z).exp()).collect();
    Ok(MagnetizationPmf {
        population: n,
        probs,
    })
}

/// Maps a local field `h` to the belief `zeta = tanh(h)`.
pub fn field_to_belief(h: f64) -> f64 {
    h.tanh()
}

/// Inverse of [`field_to_belief`]; requires `|zeta| < 1`.
pub fn belief_to_field(zeta: f64) -> Result<f64> {
    if zeta.is_nan() || zeta.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "belief must satisfy |zeta| < 1 to have a finite field, received {zeta}"
        )));
    }
    Ok(zeta.atanh())
}

/// A sampler prepared for one `(model, N)` pair.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    population: u64,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Fair(Binomial),
    Belief(BeliefDistribution),
    /// Cumulative probabilities of `k = (N + S) / 2`.
    MeanField(Vec<f64>),
}

impl ModelSampler {
    pub fn new(model: &VotingModel, population: u64) -> Result<Self> {
        if population == 0 {
            return Err(Error::PopulationTooSmall { min: 1, found: 0 });
        }
        model.validate()?;
        let fair = || Binomial::new(population, 0.5).expect("valid binomial");
        let kind = match model {
            VotingModel::Independent => SamplerKind::Fair(fair()),
            VotingModel::CommonBelief(BeliefDistribution::PointMassZero) => {
                SamplerKind::Fair(fair())
            }
            VotingModel::CommonBelief(b) => SamplerKind::Belief(b.clone()),
            VotingModel::MeanField { .. } if population == 1 => SamplerKind::Fair(fair()),
            VotingModel::MeanField { coupling } => {
                let pmf = magnetization_pmf(*coupling, population)?;
                let mut acc = 0.0;
                let cdf = pmf
                    .probabilities()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                SamplerKind::MeanField(cdf)
            }
        };
        Ok(Self { population, kind })
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    /// Number of yes votes in one draw.
    pub fn sample_yes<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.kind {
            SamplerKind::Fair(b) => b.sample(rng),
            SamplerKind::Belief(belief) => {
                let p = (0.5 * (1.0 + belief.sample(rng))).clamp(0.0, 1.0);
                Binomial::new(self.population, p)
                    .expect("valid binomial")
                    .sample(rng)
            }
            SamplerKind::MeanField(cdf) => {
                let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                (cdf.partition_point(|&c| c <= u) as u64).min(self.population)
            }
        }
    }

    /// Total spin `S` of one draw.
    pub fn sample_sum<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        2 * self.sample_yes(rng) as i64 - self.population as i64
    }

    /// One full outcome.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        let n = self.population as usize;
        let yes = self.sample_yes(rng) as usize;
        if yes <= n / 2 {
            Outcome::from_yes_set(n, index::sample(rng, n, yes))
        } else {
            let no: std::collections::HashSet<usize> =
                index::sample(rng, n, n - yes).into_iter().collect();
            Outcome::from_yes_set(n, (0..n).filter(|i| !no.contains(i)))
        }
    }
}

/// Draws one outcome of `N` voters under `model`.
pub fn sample<R: Rng + ?Sized>(
    model: &VotingModel,
    population: u64,
    rng: &mut R,
) -> Result<Outcome> {
    Ok(ModelSampler::new(model, population)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::margin;
    use crate::rng::RngStream;

    /// Unnormalized mean-field weight of one outcome from the pair sum.
    fn pair_weight(outcome: &Outcome, coupling: f64) -> f64 {
        let v = outcome.votes();
        let n = v.len();
        let mut pairs = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                pairs += i64::from(v[i] * v[j]);
            }
        }
        (coupling / (n as f64 - 1.0) * pairs as f64).exp()
    }

    fn test_models() -> Vec<VotingModel> {
        vec![
            VotingModel::Independent,
            VotingModel::CommonBelief(BeliefDistribution::PointMassZero),
            VotingModel::CommonBelief(BeliefDistribution::uniform(1.0).unwrap()),
            VotingModel::CommonBelief(BeliefDistribution::uniform(0.3).unwrap()),
            VotingModel::CommonBelief(BeliefDistribution::symmetric_pair(0.4).unwrap()),
            VotingModel::CommonBelief(
                BeliefDistribution::gridded(
                    vec![-1.0, -0.5, 0.0, 0.5, 1.0],
                    vec![0.25, 0.75, 0.25, 0.75, 0.25],
                )
                .unwrap(),
            ),
            VotingModel::MeanField { coupling: 0.0 },
            VotingModel::MeanField { coupling: 0.7 },
            VotingModel::MeanField { coupling: 2.0 },
        ]
    }

    fn out(v: &[i8]) -> Outcome {
        Outcome::new(v.to_vec()).unwrap()
    }

    #[test]
    fn independent_is_uniform() {
        for o in Outcome::enumerate(3) {
            assert_eq!(pmf_exact(&VotingModel::Independent, 3, &o).unwrap(), 0.125);
        }
    }

    #[test]
    fn mean_field_small_examples() {
        let j0 = VotingModel::MeanField { coupling: 0.0 };
        assert!((pmf_exact(&j0, 2, &out(&[1, -1])).unwrap() - 0.25).abs() < 1e-15);
        // Four-outcome enumeration: weights e^{J x1 x2} with J = 0.5.
        let j = VotingModel::MeanField { coupling: 0.5 };
        let z: f64 = Outcome::enumerate(2).map(|o| pair_weight(&o, 0.5)).sum();
        let expected = pair_weight(&out(&[1, 1]), 0.5) / z;
        let got = pmf_exact(&j, 2, &out(&[1, 1])).unwrap();
        assert!((got - expected).abs() < 1e-15);
        // e / (2e + 2)
        assert!((got - 0.365_529_289_315_002_4).abs() < 1e-15);
    }

    #[test]
    fn magnetization_examples() {
        let p = magnetization_pmf(0.0, 4).unwrap();
        assert!((p.prob(0) - 6.0 / 16.0).abs() < 1e-15);
        assert_eq!(p.prob(1), 0.0);
        let p = magnetization_pmf(0.5, 2).unwrap();
        assert!((p.prob(2) - 0.365_529_289_315_002_4).abs() < 1e-15);
        assert!((p.prob(0) - 0.268_941_421_369_995_1).abs() < 1e-15);
        let p = magnetization_pmf(2.0, 1000).unwrap();
        assert!((p.positive_mode() - 0.9575).abs() < 0.01);
    }

    #[test]
    fn magnetization_is_symmetric_and_normalized() {
        for &(j, n) in &[(0.3, 7u64), (1.0, 100), (2.0, 1001), (0.9, 50_000)] {
            let p = magnetization_pmf(j, n).unwrap();
            let total: f64 = p.probabilities().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for (s, q) in p.iter() {
                assert_eq!(q, p.prob(-s));
            }
        }
    }

    #[test]
    fn magnetization_matches_enumeration() {
        for &j in &[0.3, 1.0, 2.0] {
            for n in 2..=16u64 {
                let mut law = vec![0.0; n as usize + 1];
                let mut z = 0.0;
                for o in Outcome::enumerate(n as usize) {
                    let w = pair_weight(&o, j);
                    z += w;
                    law[affirmative_count(&o) as usize] += w;
                }
                let pmf = magnetization_pmf(j, n).unwrap();
                for (k, w) in law.iter().enumerate() {
                    let s = 2 * k as i64 - n as i64;
                    assert!((pmf.prob(s) - w / z).abs() < 1e-10, "J={j} N={n} s={s}");
                }
            }
        }
    }

    #[test]
    fn pmf_is_symmetric_and_normalized() {
        for model in test_models() {
            for n in [1u64, 2, 5, 8, 12] {
                let mut total = 0.0;
                for o in Outcome::enumerate(n as usize) {
                    let p = pmf_exact(&model, n, &o).unwrap();
                    let q = pmf_exact(&model, n, &o.flipped()).unwrap();
                    assert!((p - q).abs() < 1e-14, "{model} N={n}");
                    total += p;
                }
                assert!((total - 1.0).abs() < 1e-10, "{model} N={n}: {total}");
            }
        }
    }

    #[test]
    fn reductions_to_independent() {
        let models = [
            VotingModel::MeanField { coupling: 0.0 },
            VotingModel::CommonBelief(BeliefDistribution::PointMassZero),
        ];
        for model in &models {
            for n in 1..=12u64 {
                for o in Outcome::enumerate(n as usize).step_by(7) {
                    let p = pmf_exact(model, n, &o).unwrap();
                    assert!((p - 0.5f64.powi(n as i32)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn pmf_rejects_bad_input() {
        let o = Outcome::from_bits(0, 25);
        assert!(matches!(
            pmf_exact(&VotingModel::Independent, 25, &o),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let bad = VotingModel::CommonBelief(BeliefDistribution::UniformSymmetric { a: 2.0 });
        assert!(matches!(
            pmf_exact(&bad, 2, &out(&[1, 1])),
            Err(Error::InvalidBelief(_))
        ));
        assert!(pmf_exact(&VotingModel::Independent, 3, &out(&[1, 1])).is_err());
    }

    #[test]
    fn field_belief_round_trip() {
        assert_eq!(field_to_belief(0.0), 0.0);
        assert!((field_to_belief(1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!((field_to_belief(40.0) - 1.0).abs() < 1e-15);
        for &z in &[-0.99, -0.5, 0.0, 0.3, 0.9] {
            assert!((field_to_belief(belief_to_field(z).unwrap()) - z).abs() < 1e-12);
        }
        assert!(belief_to_field(1.0).is_err());
        assert!(belief_to_field(-1.5).is_err());
        assert!(field_to_belief(0.2) < field_to_belief(0.3));
    }

    #[test]
    fn independent_sum_has_zero_mean() {
        let s = ModelSampler::new(&VotingModel::Independent, 1_000_000).unwrap();
        let mut rng = RngStream::new(11, 0);
        let draws: Vec<f64> = (0..10_000).map(|_| s.sample_sum(&mut rng) as f64).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let se = (var / draws.len() as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn straffin_pair_covariance() {
        // Covariance of two fixed voters under the uniform belief is 1/3.
        let model = VotingModel::CommonBelief(BeliefDistribution::uniform(1.0).unwrap());
        let s = ModelSampler::new(&model, 10_000).unwrap();
        let mut rng = RngStream::new(5, 0);
        let draws = 20_000;
        let prods: Vec<f64> = (0..draws)
            .map(|_| {
                let o = s.sample(&mut rng);
                f64::from(o.votes()[0] * o.votes()[1])
            })
            .collect();
        let mean = prods.iter().sum::<f64>() / draws as f64;
        let var = prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn supercritical_sampler_is_bimodal() {
        let s = ModelSampler::new(&VotingModel::MeanField { coupling: 1.5 }, 1000).unwrap();
        let mut rng = RngStream::new(9, 0);
        let mut pos = 0;
        for _ in 0..2000 {
            let m = s.sample(&mut rng).sum() as f64 / 1000.0;
            assert!((m.abs() - 0.8586).abs() < 0.15, "m = {m}");
            if m > 0.0 {
                pos += 1;
            }
        }
        assert!((pos as f64 - 1000.0).abs() < 4.0 * 500f64.sqrt());
    }

    #[test]
    fn sampled_outcomes_are_consistent_with_sums() {
        let model = VotingModel::MeanField { coupling: 0.8 };
        let s = ModelSampler::new(&model, 37).unwrap();
        let mut rng = RngStream::new(1, 2);
        for _ in 0..200 {
            let o = s.sample(&mut rng);
            assert_eq!(o.len(), 37);
            assert!(margin(&o) <= 37);
        }
    }

    #[test]
    fn sampler_frequencies_match_pmf() {
        let draws = 1_000_000u64;
        for model in test_models() {
            let n = 4u64;
            let s = ModelSampler::new(&model, n).unwrap();
            let mut rng = RngStream::new(2024, 0);
            let mut counts = vec![0u64; 1 << n];
            for _ in 0..draws {
                let o = s.sample(&mut rng);
                let bits =
                    o.votes()
                        .iter()
                        .enumerate()
                        .fold(0usize, |b, (i, &v)| if v == 1 { b | 1 << i } else { b });
                counts[bits] += 1;
            }
            for (bits, &c) in counts.iter().enumerate() {
                let p = pmf_exact(&model, n, &Outcome::from_bits(bits as u64, n as usize)).unwrap();
                let freq = c as f64 / draws as f64;
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 5.0 * se,
                    "{model} outcome {bits}: {freq} vs {p}"
                );
            }
        }
    }
}
