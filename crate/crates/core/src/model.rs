//! Per-state voter correlation models and margin estimates.

use std::fmt;

use crate::belief::BeliefDistribution;
use crate::error::{Error, Result};

/// Correlation structure of the voters inside one state.
#[derive(Debug, Clone, PartialEq)]
pub enum VotingModel {
    /// Independent fair coin votes.
    Independent,
    /// Votes independent given a shared belief `Z ~ mu`, with `P(yes | Z) = (1 + Z) / 2`.
    CommonBelief(BeliefDistribution),
    /// Curie–Weiss measure with pair coupling `J / (N - 1)` over unordered pairs.
    MeanField { coupling: f64 },
}

impl VotingModel {
    pub fn mean_field(coupling: f64) -> Result<Self> {
        let m = Self::MeanField { coupling };
        m.validate()?;
        Ok(m)
    }

    pub fn common_belief(belief: BeliefDistribution) -> Result<Self> {
        belief.validate()?;
        Ok(Self::CommonBelief(belief))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Independent => Ok(()),
            Self::CommonBelief(b) => b.validate(),
            Self::MeanField { coupling } => {
                if coupling.is_finite() && *coupling >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidCoupling(*coupling))
                }
            }
        }
    }
}

impl fmt::Display for VotingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Independent => write!(f, "independent"),
            Self::CommonBelief(b) => write!(f, "common_belief({})", b.label()),
            Self::MeanField { coupling } => write!(f, "mean_field(J={coupling})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
    Asymptotic,
}

impl fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::MonteCarlo => "monte_carlo",
            Self::Asymptotic => "asymptotic",
        })
    }
}

/// An estimate of the expected margin `E|S|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginEstimate {
    pub value: f64,
    /// Zero for exact and asymptotic values.
    pub std_error: f64,
    pub method: EstimateMethod,
    /// Number of Monte Carlo samples, zero otherwise.
    pub samples: u64,
}

impl MarginEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            method: EstimateMethod::Exact,
            samples: 0,
        }
    }

    pub fn asymptotic(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            method: EstimateMethod::Asymptotic,
            samples: 0,
        }
    }
}
