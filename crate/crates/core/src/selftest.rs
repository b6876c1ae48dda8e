//! Fast invariant checks across every module, used by `fairvote selftest`.

use crate::belief::BeliefDistribution;
use crate::commonbelief::{distribution_distance, margin_bound_check, second_moment, BoundMode};
use crate::error::Result;
use crate::estimators::{expected_margin_exact, expected_margin_mc, sqrt_two_over_pi};
use crate::mc::MonteCarlo;
use crate::meanfield::solve_cj;
use crate::measures::{magnetization_pmf, pmf_exact};
use crate::model::VotingModel;
use crate::outcome::{affirmative_count, chi, majority_sign, margin, q_margin, Outcome};
use crate::weights::{delta, delta_minimizing_weights, verify_minimizer, CouncilSpec, DeltaMode};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn models() -> Result<Vec<VotingModel>> {
    Ok(vec![
        VotingModel::Independent,
        VotingModel::common_belief(BeliefDistribution::point_mass_zero())?,
        VotingModel::common_belief(BeliefDistribution::uniform(1.0)?)?,
        VotingModel::common_belief(BeliefDistribution::symmetric_pair(0.4)?)?,
        VotingModel::mean_field(0.5)?,
        VotingModel::mean_field(2.0)?,
    ])
}

fn beliefs() -> Result<Vec<BeliefDistribution>> {
    Ok(vec![
        BeliefDistribution::point_mass_zero(),
        BeliefDistribution::uniform(1.0)?,
        BeliefDistribution::uniform(0.3)?,
        BeliefDistribution::symmetric_pair(0.4)?,
    ])
}

/// Returns `(worst deviation, tolerance)`.
type Probe = fn() -> Result<(f64, f64)>;

fn outcome_identities() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        for o in Outcome::enumerate(n) {
            let m = margin(&o) as f64;
            worst = worst.max((m - (2.0 * affirmative_count(&o) as f64 - n as f64).abs()).abs());
            worst = worst.max((q_margin(&o, 0.5 + 1e-12)? - m).abs() - 1e-9);
        }
    }
    for x in [0.3, 1.0, 7.5] {
        worst = worst.max(f64::from((majority_sign(-x) + majority_sign(x)).abs()));
    }
    worst = worst.max(f64::from((majority_sign(0.0) + 1).abs()));
    Ok((worst.max(0.0), 0.0))
}

fn pmf_symmetry_and_mass() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for model in models()? {
        for n in 1..=8u64 {
            let mut total = 0.0;
            for o in Outcome::enumerate(n as usize) {
                let p = pmf_exact(&model, n, &o)?;
                worst = worst.max((p - pmf_exact(&model, n, &o.flipped())?).abs());
                total += p;
            }
            worst = worst.max((total - 1.0).abs());
        }
    }
    Ok((worst, 1e-10))
}

fn magnetization_vs_enumeration() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for j in [0.3, 1.0, 2.0] {
        for n in 2..=10u64 {
            let pmf = magnetization_pmf(j, n)?;
            let scale = j / (2.0 * (n as f64 - 1.0));
            let mut by_s = vec![0.0; n as usize + 1];
            let mut z = 0.0;
            for o in Outcome::enumerate(n as usize) {
                let s = o.sum();
                let wgt = (scale * (s * s) as f64).exp();
                by_s[((s + n as i64) / 2) as usize] += wgt;
                z += wgt;
            }
            for (k, w) in by_s.iter().enumerate() {
                worst = worst.max((pmf.probabilities()[k] - w / z).abs());
            }
        }
    }
    Ok((worst, 1e-10))
}

fn margin_vs_brute_force() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for model in models()? {
        for n in 1..=10u64 {
            let brute: f64 = Outcome::enumerate(n as usize)
                .map(|o| pmf_exact(&model, n, &o).map(|p| p * margin(&o) as f64))
                .sum::<Result<f64>>()?;
            worst = worst.max((expected_margin_exact(&model, n)?.value - brute).abs());
        }
    }
    Ok((worst, 1e-9))
}

fn sign_chi_identity() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for model in models()? {
        for n in 1..=10u64 {
            let (mut lhs, mut rhs) = (0.0, 0.0);
            for o in Outcome::enumerate(n as usize) {
                let p = pmf_exact(&model, n, &o)?;
                let s = o.sum();
                lhs += p * (s * i64::from(chi(s))) as f64;
                rhs += p * margin(&o) as f64;
            }
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok((worst, 1e-12))
}

fn semi_exact_vs_exact() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for pops in [&[1u64, 3, 5][..], &[2, 4], &[2, 3, 6]] {
        let c = CouncilSpec::independent(pops)?;
        let w = crate::weights::optimal_weights(&c)?.raw;
        let e = delta(&c, &w, DeltaMode::Exact)?.value;
        let s = delta(&c, &w, DeltaMode::SemiExact)?.value;
        worst = worst.max((e - s).abs());
    }
    Ok((worst, 1e-10))
}

fn minimizer_check() -> Result<(f64, f64)> {
    let c = CouncilSpec::independent(&[1, 3, 5])?;
    let w = delta_minimizing_weights(&c)?;
    let r = verify_minimizer(&c, &w, 0.1)?;
    Ok((r.violations.len() as f64, 0.0))
}

fn covariance_check() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for b in beliefs()? {
        let model = VotingModel::common_belief(b.clone())?;
        let n = 6u64;
        let cov: f64 = Outcome::enumerate(n as usize)
            .map(|o| {
                let v = o.votes();
                pmf_exact(&model, n, &o).map(|p| p * f64::from(v[0] * v[1]))
            })
            .sum::<Result<f64>>()?;
        worst = worst.max((cov - second_moment(&b)?).abs());
    }
    Ok((worst, 1e-9))
}

fn bound_checks() -> Result<(f64, f64)> {
    // Positive values report by how much a bound is exceeded.
    let mut worst = f64::NEG_INFINITY;
    for b in beliefs()? {
        for n in [1u64, 10, 100, 1000] {
            let r = margin_bound_check(&b, n, BoundMode::Exact)?;
            worst = worst
                .max(r.gap - r.bound)
                .max(r.coupling_distance - r.bound);
            worst = worst.max(distribution_distance(&b, n)? - r.bound);
        }
    }
    Ok((worst.max(0.0), 0.0))
}

fn cj_residuals() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    let mut prev = 0.0;
    for j in [1.01, 1.1, 1.5, 2.0, 5.0, 10.0] {
        let s = solve_cj(j)?;
        worst = worst.max(s.residual);
        if s.value <= prev {
            worst = f64::INFINITY;
        }
        prev = s.value;
    }
    Ok((worst, 1e-12))
}

fn square_root_constant() -> Result<(f64, f64)> {
    let v = expected_margin_exact(&VotingModel::Independent, 10_000)?.value / 100.0;
    Ok(((v / sqrt_two_over_pi() - 1.0).abs(), 5e-3))
}

fn monte_carlo_agreement() -> Result<(f64, f64)> {
    let plan = MonteCarlo::new(0, 2)?;
    let mut worst: f64 = 0.0;
    for (model, n) in [
        (VotingModel::Independent, 100u64),
        (VotingModel::mean_field(1.5)?, 200),
        (
            VotingModel::common_belief(BeliefDistribution::uniform(1.0)?)?,
            200,
        ),
    ] {
        let exact = expected_margin_exact(&model, n)?.value;
        let mc = expected_margin_mc(&model, n, 20_000, &plan)?;
        worst = worst.max((mc.value - exact).abs() / mc.std_error);
    }
    Ok((worst, 4.0))
}

const CHECKS: [(&str, Probe); 12] = [
    ("outcome_identities", outcome_identities),
    ("pmf_symmetry_and_normalization", pmf_symmetry_and_mass),
    (
        "magnetization_matches_enumeration",
        magnetization_vs_enumeration,
    ),
    ("expected_margin_matches_brute_force", margin_vs_brute_force),
    ("sign_chi_equals_abs", sign_chi_identity),
    ("semi_exact_delta_matches_enumeration", semi_exact_vs_exact),
    ("delta_minimizer_has_no_violations", minimizer_check),
    ("belief_covariance_is_second_moment", covariance_check),
    ("margin_and_distance_bounds", bound_checks),
    ("cj_residual_and_monotonicity", cj_residuals),
    ("square_root_constant", square_root_constant),
    ("monte_carlo_within_four_sigma", monte_carlo_agreement),
];

/// Runs every check; an error inside a check counts as a failure.
pub fn run_selftest() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|(name, probe)| match probe() {
            Ok((value, tolerance)) => Check {
                name,
                passed: value <= tolerance,
                detail: format!("worst={value:.3e} tolerance={tolerance:.1e}"),
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
