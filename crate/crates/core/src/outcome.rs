//! Voting outcomes and the outcome-level primitives: margin, q-margin,
//! affirmative count and the majority sign.

use crate::error::{Error, Result};

/// A single vote: `+1` for yes, `-1` for no.
pub type Spin = i8;

pub const YES: Spin = 1;
pub const NO: Spin = -1;

/// The votes of a population of `N >= 1` voters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome {
    votes: Vec<Spin>,
}

impl Outcome {
    pub fn new(votes: Vec<Spin>) -> Result<Self> {
        if votes.is_empty() {
            return Err(Error::InvalidOutcome(
                "an outcome needs at least one voter".into(),
            ));
        }
        if let Some((i, v)) = votes.iter().enumerate().find(|(_, &v)| v != YES && v != NO) {
            return Err(Error::InvalidOutcome(format!(
                "vote {i} is {v}, every vote must be +1 or -1"
            )));
        }
        Ok(Self { votes })
    }

    /// Checks that the outcome has the declared population.
    pub fn with_population(votes: Vec<Spin>, population: u64) -> Result<Self> {
        let outcome = Self::new(votes)?;
        if outcome.len() as u64 != population {
            return Err(Error::LengthMismatch {
                what: "outcome population",
                expected: population as usize,
                found: outcome.len(),
            });
        }
        Ok(outcome)
    }

    /// Outcome whose voter `i` votes yes iff bit `i` of `bits` is set.
    pub fn from_bits(bits: u64, population: usize) -> Self {
        debug_assert!((1..=64).contains(&population));
        let votes = (0..population)
            .map(|i| if bits >> i & 1 == 1 { YES } else { NO })
            .collect();
        Self { votes }
    }

    /// Outcome where exactly the voters listed in `yes` vote `+1`.
    pub(crate) fn from_yes_set(population: usize, yes: impl IntoIterator<Item = usize>) -> Self {
        let mut votes = vec![NO; population];
        for i in yes {
            votes[i] = YES;
        }
        Self { votes }
    }

    pub fn votes(&self) -> &[Spin] {
        &self.votes
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    /// Total spin `S = sum of votes`.
    pub fn sum(&self) -> i64 {
        self.votes.iter().map(|&v| i64::from(v)).sum()
    }

    /// The sign-flipped outcome `-X`.
    pub fn flipped(&self) -> Self {
        Self {
            votes: self.votes.iter().map(|&v| -v).collect(),
        }
    }

    /// Iterates all `2^N` outcomes of a population of size `N` in bit order.
    pub fn enumerate(population: usize) -> impl Iterator<Item = Outcome> {
        assert!(
            (1..=crate::measures::ENUMERATION_CAP as usize).contains(&population),
            "enumeration requires 1 <= N <= {}",
            crate::measures::ENUMERATION_CAP
        );
        (0..1u64 << population).map(move |bits| Outcome::from_bits(bits, population))
    }
}

/// `|sum of votes|`, the margin of the outcome.
pub fn margin(outcome: &Outcome) -> u64 {
    outcome.sum().unsigned_abs()
}

/// `|sum of votes - (2q - 1) N|`, the margin relative to a quota `q`.
pub fn q_margin(outcome: &Outcome, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidQuota(q));
    }
    let n = outcome.len() as f64;
    Ok((outcome.sum() as f64 - (2.0 * q - 1.0) * n).abs())
}

/// Number of yes votes, `(S + N) / 2`.
pub fn affirmative_count(outcome: &Outcome) -> u64 {
    ((outcome.sum() + outcome.len() as i64) / 2) as u64
}

/// `+1` for strictly positive input, `-1` otherwise. Ties count as no.
pub fn majority_sign(x: f64) -> Spin {
    if x > 0.0 {
        YES
    } else {
        NO
    }
}

/// [`majority_sign`] on an integer vote sum.
pub(crate) fn chi(s: i64) -> Spin {
    if s > 0 {
        YES
    } else {
        NO
    }
}

/// Council decision threshold.
///
/// `SimpleMajority` accepts a strictly positive score. `Qualified(q)` accepts
/// a score of at least `(2q - 1)` times the total weight.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Quota {
    #[default]
    SimpleMajority,
    Qualified(f64),
}

impl Quota {
    pub fn qualified(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidQuota(q));
        }
        Ok(Quota::Qualified(q))
    }

    /// Whether `score` passes the threshold when the maximal score is `total`.
    pub fn accepts(&self, score: f64, total: f64) -> bool {
        match *self {
            Quota::SimpleMajority => score > 0.0,
            Quota::Qualified(q) => score >= (2.0 * q - 1.0) * total,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Quota::SimpleMajority => None,
            Quota::Qualified(q) => Some(q),
        }
    }
}
