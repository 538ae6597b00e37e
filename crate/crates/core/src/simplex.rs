//! Dense two-phase simplex with Bland's rule.
//!
//! Variables are shifted to their lower bound or split into positive and
//! negative parts when free; rows are sign-normalized so the right-hand side
//! is nonnegative. Phase one minimizes the sum of artificials, phase two the
//! original objective.

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-11;
const RELATIVE_PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

/// minimize cᵀx subject to A x (≥|≤|=) b and x_j ≥ l_j where given.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    /// `None` marks a free variable.
    pub lower_bounds: Vec<Option<f64>>,
}

impl LinearProgram {
    /// A program with the given objective, no rows, and all variables ≥ 0.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower_bounds: vec![Some(0.0); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_constraint(&mut self, row: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(row);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: Option<f64>) {
        self.lower_bounds[var] = bound;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let m = self.constraints.len();
        if self.senses.len() != m || self.rhs.len() != m {
            return Err(Error::InvalidArgument(format!(
                "{m} constraint rows, {} senses, {} right-hand sides",
                self.senses.len(),
                self.rhs.len()
            )));
        }
        if self.lower_bounds.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{n} variables but {} bounds",
                self.lower_bounds.len()
            )));
        }
        if let Some((i, row)) = self
            .constraints
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != n)
        {
            return Err(Error::InvalidArgument(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.rhs.iter().all(|v| v.is_finite())
            && self.constraints.iter().flatten().all(|v| v.is_finite())
            && self.lower_bounds.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite LP data".into()));
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for ((row, &sense), &b) in self.constraints.iter().zip(&self.senses).zip(&self.rhs) {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match sense {
                Sense::Ge => b - lhs,
                Sense::Le => lhs - b,
                Sense::Eq => (lhs - b).abs(),
            };
            worst = worst.max(v);
        }
        for (l, v) in self.lower_bounds.iter().zip(x) {
            if let Some(l) = l {
                worst = worst.max(l - v);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the original variables; meaningful when optimal.
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Phase-two reduced costs of every non-artificial standard-form column
    /// at termination. All are ≥ −`PIVOT_TOL` at optimality.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

enum Column {
    Shifted { var: usize, lower: f64 },
    Positive(usize),
    Negative(usize),
}

struct Tableau {
    /// m rows of `width` entries; the last entry of each row is the rhs.
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
    /// For split free variables, the opposite-sign column.
    twin: Vec<Option<usize>>,
}

impl Tableau {
    /// False when `j` is a split column whose twin is basic.
    fn twin_free(&self, j: usize) -> bool {
        self.twin
            .get(j)
            .copied()
            .flatten()
            .is_none_or(|t| !self.basis.contains(&t))
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width - 1]
    }

    fn pivot(&mut self, r: usize, e: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::SolverStall {
                pivots: self.pivots,
            });
        }
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][e] = 1.0;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (v, &pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[e] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = e;
        Ok(())
    }

    /// Bland's rule iterations over columns `< allowed`. Returns false when
    /// an unbounded direction is found.
    fn run(&mut self, allowed: usize) -> Result<bool> {
        loop {
            // The twin of a basic split column has zero reduced cost in exact
            // arithmetic; entering it would make the basis singular.
            let candidate = |j: usize| self.cost[j] < -PIVOT_TOL && self.twin_free(j);
            let Some(e) = (0..allowed).find(|&j| candidate(j)) else {
                return Ok(true);
            };
            // Entries that are cancellation noise relative to the column are
            // not eligible pivots.
            let scale = self.rows.iter().fold(0.0f64, |m, r| m.max(r[e].abs()));
            let threshold = PIVOT_TOL.max(RELATIVE_PIVOT_TOL * scale);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > threshold {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, e)?,
                None => return Ok(false),
            }
        }
    }

    fn set_cost(&mut self, c: &[f64]) {
        self.cost = c.to_vec();
        self.cost.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                for (v, &a) in self.cost.iter_mut().zip(&self.rows[i]) {
                    *v -= cb * a;
                }
            }
        }
    }
}

/// Solves `lp` to optimality, or reports infeasibility/unboundedness.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    let mut columns = Vec::with_capacity(2 * n);
    for (j, bound) in lp.lower_bounds.iter().enumerate() {
        match *bound {
            Some(lower) => columns.push(Column::Shifted { var: j, lower }),
            None => {
                columns.push(Column::Positive(j));
                columns.push(Column::Negative(j));
            }
        }
    }
    let structural = columns.len();

    // Rows with nonnegative rhs: (coefficients over structural columns, sense, rhs).
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.num_constraints());
    for ((row, &sense), &b) in lp.constraints.iter().zip(&lp.senses).zip(&lp.rhs) {
        let mut coeffs = Vec::with_capacity(structural);
        let mut rhs = b;
        for col in &columns {
            coeffs.push(match *col {
                Column::Shifted { var, lower } => {
                    rhs -= row[var] * lower;
                    row[var]
                }
                Column::Positive(var) => row[var],
                Column::Negative(var) => -row[var],
            });
        }
        let flip = rhs < 0.0 || (rhs == 0.0 && sense == Sense::Ge);
        let sense = match (flip, sense) {
            (false, s) => s,
            (true, Sense::Ge) => Sense::Le,
            (true, Sense::Le) => Sense::Ge,
            (true, Sense::Eq) => Sense::Eq,
        };
        if flip {
            coeffs.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
        }
        let norm = coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm > 0.0 {
            coeffs.iter_mut().for_each(|v| *v /= norm);
            rhs /= norm;
        }
        rows.push((coeffs, sense, rhs.abs()));
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let first_art = structural + n_slack;
    let width = first_art + n_art + 1;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        cost: Vec::new(),
        basis: Vec::with_capacity(m),
        width,
        pivots: 0,
        twin: columns
            .iter()
            .enumerate()
            .map(|(k, col)| match col {
                Column::Positive(_) => Some(k + 1),
                Column::Negative(_) => Some(k - 1),
                Column::Shifted { .. } => None,
            })
            .collect(),
    };
    let (mut slack, mut art) = (structural, first_art);
    for (coeffs, sense, rhs) in rows {
        let mut row = vec![0.0; width];
        row[..structural].copy_from_slice(&coeffs);
        row[width - 1] = rhs;
        match sense {
            Sense::Le => {
                row[slack] = 1.0;
                tab.basis.push(slack);
                slack += 1;
            }
            Sense::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                tab.basis.push(art);
                art += 1;
            }
            Sense::Eq => {
                row[art] = 1.0;
                tab.basis.push(art);
                art += 1;
            }
        }
        tab.rows.push(row);
    }

    let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if n_art > 0 {
        let mut phase1 = vec![0.0; width - 1];
        phase1[first_art..].iter_mut().for_each(|v| *v = 1.0);
        tab.set_cost(&phase1);
        tab.run(width - 1)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= first_art)
            .map(|i| tab.rhs(i))
            .sum();
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: vec![f64::NAN; n],
                objective_value: f64::NAN,
                reduced_costs: Vec::new(),
                pivots: tab.pivots,
            });
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= first_art {
                let entering =
                    (0..first_art).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL && tab.twin_free(j));
                match entering {
                    Some(j) => tab.pivot(i, j)?,
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut phase2 = vec![0.0; width - 1];
    for (k, col) in columns.iter().enumerate() {
        phase2[k] = match *col {
            Column::Shifted { var, .. } | Column::Positive(var) => lp.objective[var],
            Column::Negative(var) => -lp.objective[var],
        };
    }
    tab.set_cost(&phase2);
    let bounded = tab.run(first_art)?;

    let mut standard = vec![0.0; first_art];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < first_art {
            standard[b] = tab.rhs(i).max(0.0);
        }
    }
    let mut values = vec![0.0; n];
    for (k, col) in columns.iter().enumerate() {
        match *col {
            Column::Shifted { var, lower } => values[var] = lower + standard[k],
            Column::Positive(var) => values[var] += standard[k],
            Column::Negative(var) => values[var] -= standard[k],
        }
    }
    let objective_value = if bounded {
        lp.objective.iter().zip(&values).map(|(c, v)| c * v).sum()
    } else {
        f64::NEG_INFINITY
    };
    Ok(LpSolution {
        status: if bounded {
            LpStatus::Optimal
        } else {
            LpStatus::Unbounded
        },
        values,
        objective_value,
        reduced_costs: tab.cost[..first_art].to_vec(),
        pivots: tab.pivots,
    })
}
