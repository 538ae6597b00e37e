//! Exact discrete optimal transport with squared-distance cost.
//!
//! In one dimension the monotone (quantile) coupling is optimal for any
//! convex cost, so [`solve_ot_1d`] is exact. [`solve_ot_lp`] solves the same
//! problem as a transportation LP and serves as a cross-check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginals::MarginalDensity;
use crate::simplex::{solve, LinearProgram, LpStatus, Sense};

/// Masses must sum to 1 within this tolerance.
pub const MASS_TOL: f64 = 1e-10;
/// Largest support accepted by [`solve_ot_lp`].
pub const MAX_LP_SUPPORT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != masses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} support points for {} masses",
                support.len(),
                masses.len()
            )));
        }
        if support.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidArgument("support must lie in [0,1]".into()));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "support must be strictly increasing".into(),
            ));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidArgument("masses must be nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { support, masses })
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        Self::new(vec![at], vec![1.0])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Samples `density` at the midpoints of `n` equal cells and renormalizes.
pub fn discretize(density: &MarginalDensity, n: usize) -> Result<DiscreteDistribution> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "discretization needs n >= 2, got {n}"
        )));
    }
    let support: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let raw: Vec<f64> = support.iter().map(|&u| density.value(u)).collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateDensity(
            "sampled density has no mass".into(),
        ));
    }
    let masses = raw.iter().map(|m| m / total).collect();
    DiscreteDistribution::new(support, masses)
}

/// A coupling between two discrete distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    /// `mass[i][j]` moved from source point i to target point j.
    pub mass: Vec<Vec<f64>>,
    /// Σ mass[i][j] (x_i − y_j)².
    pub cost: f64,
}

impl TransportPlan {
    fn from_mass(
        mass: Vec<Vec<f64>>,
        mu: &DiscreteDistribution,
        nu: &DiscreteDistribution,
    ) -> Self {
        let mut cost = 0.0;
        for (row, &x) in mass.iter().zip(&mu.support) {
            for (&m, &y) in row.iter().zip(&nu.support) {
                cost += m * (x - y) * (x - y);
            }
        }
        Self { mass, cost }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let cols = self.mass.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.mass.iter().map(|r| r[j]).sum())
            .collect()
    }
}

/// Monotone coupling, swept left to right.
pub fn solve_ot_1d(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> TransportPlan {
    let (n, m) = (mu.len(), nu.len());
    let mut mass = vec![vec![0.0; m]; n];
    let (mut i, mut j) = (0, 0);
    let mut left_mu = mu.masses[0];
    let mut left_nu = nu.masses[0];
    while i < n && j < m {
        let moved = left_mu.min(left_nu);
        mass[i][j] += moved;
        left_mu -= moved;
        left_nu -= moved;
        // Advance whichever side is exhausted; the last index on each side
        // absorbs rounding residue.
        if left_mu <= left_nu {
            i += 1;
            if i < n {
                left_mu = mu.masses[i];
            }
        } else {
            j += 1;
            if j < m {
                left_nu = nu.masses[j];
            }
        }
    }
    TransportPlan::from_mass(mass, mu, nu)
}

/// Transportation LP over all n·m pairs, solved by the simplex method.
pub fn solve_ot_lp(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> Result<TransportPlan> {
    let (n, m) = (mu.len(), nu.len());
    if n > MAX_LP_SUPPORT || m > MAX_LP_SUPPORT {
        return Err(Error::InvalidArgument(format!(
            "transport LP supports at most {MAX_LP_SUPPORT} points per side, got {n} and {m}"
        )));
    }
    let objective = mu
        .support
        .iter()
        .flat_map(|&x| nu.support.iter().map(move |&y| (x - y) * (x - y)))
        .collect();
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        let mut row = vec![0.0; n * m];
        row[i * m..(i + 1) * m].fill(1.0);
        lp.add_constraint(row, Sense::Eq, mu.masses[i]);
    }
    for j in 0..m {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        lp.add_constraint(row, Sense::Eq, nu.masses[j]);
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalDomain(format!(
            "transport LP ended {:?}",
            sol.status
        )));
    }
    let mass = sol.values.chunks(m).map(<[f64]>::to_vec).collect();
    Ok(TransportPlan::from_mass(mass, mu, nu))
}
