//! Symmetric belief distributions on `[-1, 1]` for the common-belief model.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature;

const MASS_TOLERANCE: f64 = 1e-12;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Law `mu` of the common belief `Z`.
///
/// `GriddedDensity` is integrated with the trapezoid rule on its own nodes,
/// so everywhere in this crate it acts as the discrete measure that puts the
/// trapezoid weight of each node on that node. This keeps expectations,
/// sampling and distribution functions consistent with one another.
#[derive(Debug, Clone, PartialEq)]
pub enum BeliefDistribution {
    /// `Z = 0`: independent voters.
    PointMassZero,
    /// Uniform on `[-a, a]` with `0 < a <= 1`.
    UniformSymmetric { a: f64 },
    /// Atoms `(zeta, weight)`, symmetric under `zeta -> -zeta`.
    DiscreteSymmetric { atoms: Vec<(f64, f64)> },
    /// Density values on an ascending grid mirrored about zero.
    GriddedDensity {
        nodes: Vec<f64>,
        densities: Vec<f64>,
    },
}

impl BeliefDistribution {
    pub fn point_mass_zero() -> Self {
        Self::PointMassZero
    }

    pub fn uniform(a: f64) -> Result<Self> {
        let b = Self::UniformSymmetric { a };
        b.validate()?;
        Ok(b)
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let b = Self::DiscreteSymmetric { atoms };
        b.validate()?;
        Ok(b)
    }

    /// Two atoms at `+-zeta` with mass one half each.
    pub fn symmetric_pair(zeta: f64) -> Result<Self> {
        Self::atoms(vec![(-zeta, 0.5), (zeta, 0.5)])
    }

    pub fn gridded(nodes: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        let b = Self::GriddedDensity { nodes, densities };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PointMassZero => Ok(()),
            Self::UniformSymmetric { a } => {
                if *a > 0.0 && *a <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidBelief(format!(
                        "uniform half-width a must lie in (0, 1], received {a}"
                    )))
                }
            }
            Self::DiscreteSymmetric { atoms } => validate_atoms(atoms),
            Self::GriddedDensity { nodes, densities } => validate_grid(nodes, densities),
        }
    }

    /// Atoms of the measure when it is discrete (point mass, atoms, grid).
    pub fn discrete_atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::PointMassZero => Some(vec![(0.0, 1.0)]),
            Self::UniformSymmetric { .. } => None,
            Self::DiscreteSymmetric { atoms } => Some(atoms.clone()),
            Self::GriddedDensity { nodes, densities } => Some(
                nodes
                    .iter()
                    .copied()
                    .zip(trapezoid_weights(nodes, densities))
                    .collect(),
            ),
        }
    }

    /// `int f d mu`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.expectation_vec(1, |z, w, acc| acc[0] += w * f(z))
            .map(|v| v[0])
    }

    /// Vector-valued `int f d mu`; `accumulate(zeta, weight, acc)` must add
    /// `weight * f(zeta)` into `acc`.
    pub fn expectation_vec(
        &self,
        len: usize,
        mut accumulate: impl FnMut(f64, f64, &mut [f64]),
    ) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            Self::UniformSymmetric { a } => {
                let density = 0.5 / a;
                quadrature::integrate_vec(len, -a, *a, |z, w, acc| accumulate(z, w * density, acc))
            }
            _ => {
                let mut out = vec![0.0; len];
                for (z, w) in self.discrete_atoms().expect("discrete measure") {
                    if w > 0.0 {
                        accumulate(z, w, &mut out);
                    }
                }
                Ok(out)
            }
        }
    }

    /// `mu([-1, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::UniformSymmetric { a } => ((x + a) / (2.0 * a)).clamp(0.0, 1.0),
            _ => self
                .discrete_atoms()
                .expect("discrete measure")
                .iter()
                .filter(|(z, _)| *z <= x)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// `int_{-1}^{x} cdf(t) dt`.
    pub fn integrated_cdf(&self, x: f64) -> f64 {
        match self {
            Self::UniformSymmetric { a } => {
                let a = *a;
                if x <= -a {
                    0.0
                } else if x <= a {
                    (x + a) * (x + a) / (4.0 * a)
                } else {
                    a + (x - a)
                }
            }
            _ => self
                .discrete_atoms()
                .expect("discrete measure")
                .iter()
                .map(|(z, w)| w * (x - z).max(0.0))
                .sum(),
        }
    }

    /// Points where the distribution function is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::UniformSymmetric { a } => vec![-a, *a],
            _ => self
                .discrete_atoms()
                .expect("discrete measure")
                .iter()
                .map(|(z, _)| *z)
                .collect(),
        }
    }

    /// Draws `Z ~ mu`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::PointMassZero => 0.0,
            Self::UniformSymmetric { a } => a * (2.0 * rng.random::<f64>() - 1.0),
            _ => {
                let atoms = self.discrete_atoms().expect("discrete measure");
                let total: f64 = atoms.iter().map(|(_, w)| w).sum();
                let mut u = rng.random::<f64>() * total;
                for (z, w) in &atoms {
                    if u < *w {
                        return *z;
                    }
                    u -= w;
                }
                atoms
                    .iter()
                    .rev()
                    .find(|(_, w)| *w > 0.0)
                    .map(|(z, _)| *z)
                    .unwrap_or(0.0)
            }
        }
    }

    /// Short human-readable label, e.g. `uniform(a=0.5)`.
    pub fn label(&self) -> String {
        match self {
            Self::PointMassZero => "point_mass_zero".into(),
            Self::UniformSymmetric { a } => format!("uniform(a={a})"),
            Self::DiscreteSymmetric { atoms } => format!("atoms({})", atoms.len()),
            Self::GriddedDensity { nodes, .. } => format!("grid({})", nodes.len()),
        }
    }
}

fn trapezoid_weights(nodes: &[f64], densities: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h * densities[i];
        w[i + 1] += 0.5 * h * densities[i + 1];
    }
    w
}

fn validate_atoms(atoms: &[(f64, f64)]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidBelief("atom list is empty".into()));
    }
    for &(z, w) in atoms {
        if !(-1.0..=1.0).contains(&z) {
            return Err(Error::InvalidBelief(format!(
                "atom location {z} lies outside [-1, 1]"
            )));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidBelief(format!(
                "atom weight {w} must be finite and non-negative"
            )));
        }
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidBelief(format!(
            "atom weights sum to {total}, expected 1"
        )));
    }
    let mass_near = |x: f64| -> f64 {
        atoms
            .iter()
            .filter(|(z, _)| (z - x).abs() <= SYMMETRY_TOLERANCE)
            .map(|(_, w)| w)
            .sum()
    };
    for &(z, _) in atoms {
        if z.abs() > SYMMETRY_TOLERANCE {
            let (plus, minus) = (mass_near(z), mass_near(-z));
            if (plus - minus).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::InvalidBelief(format!(
                    "asymmetric atoms: mass {plus} at {z} but {minus} at {}",
                    -z
                )));
            }
        }
    }
    Ok(())
}

fn validate_grid(nodes: &[f64], densities: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::InvalidBelief("grid needs at least two nodes".into()));
    }
    if nodes.len() != densities.len() {
        return Err(Error::LengthMismatch {
            what: "grid densities",
            expected: nodes.len(),
            found: densities.len(),
        });
    }
    if nodes.iter().any(|z| !(-1.0..=1.0).contains(z)) {
        return Err(Error::InvalidBelief(
            "grid nodes must lie in [-1, 1]".into(),
        ));
    }
    if nodes.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidBelief(
            "grid nodes must be strictly ascending".into(),
        ));
    }
    if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidBelief(
            "grid densities must be finite and non-negative".into(),
        ));
    }
    let n = nodes.len();
    for i in 0..n {
        let j = n - 1 - i;
        if (nodes[i] + nodes[j]).abs() > SYMMETRY_TOLERANCE {
            return Err(Error::InvalidBelief(format!(
                "grid is not mirrored: node {} pairs with {}",
                nodes[i], nodes[j]
            )));
        }
        if (densities[i] - densities[j]).abs() > SYMMETRY_TOLERANCE * densities[i].abs().max(1.0) {
            return Err(Error::InvalidBelief(format!(
                "asymmetric density: {} at {} but {} at {}",
                densities[i], nodes[i], densities[j], nodes[j]
            )));
        }
    }
    let mass: f64 = trapezoid_weights(nodes, densities).iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidBelief(format!(
            "grid density integrates to {mass}, expected 1"
        )));
    }
    Ok(())
}
