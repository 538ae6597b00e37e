//! The natural copula: `π(x,y) = f_X(x) f_Y(y) τ(x,y)` with
//! `τ = C + Σ c_i x^{j_i} y^{k_i}`, chosen to minimize `∫∫ (x−y)² π`.
//!
//! With the marginals fixed the cost and the normalization are both linear
//! in (C, c_1..c_m), giving the program
//!
//! ```text
//! minimize   Σ c_i Ĩ_i
//! subject to Σ c_i I_i ≥ 1
//!            τ(x_g, y_g) ≥ 0 on a grid
//! ```
//!
//! The grid rows keep π a density; without them the program is unbounded.
//! After solving, π is re-checked on a finer grid and any negative point is
//! added as a cut until the check passes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::marginals::MarginalDensity;
use crate::quadrature::{gauss_legendre_rule, integrate_2d_tensor, QuadratureRule};
use crate::simplex::{solve, LinearProgram, LpStatus, Sense};

pub const MAX_BASIS_SIZE: usize = 8;
/// π values below this on the check grid trigger a cut.
const NEGATIVITY_TOL: f64 = 1e-10;

/// Monomials x^j y^k with j, k ≥ 1, so every term vanishes on both axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonomialBasis {
    terms: Vec<(u32, u32)>,
}

impl MonomialBasis {
    pub fn new(terms: Vec<(u32, u32)>) -> Result<Self> {
        if terms.len() > MAX_BASIS_SIZE {
            return Err(Error::InvalidArgument(format!(
                "basis has {} monomials, at most {MAX_BASIS_SIZE} allowed",
                terms.len()
            )));
        }
        for (i, &(j, k)) in terms.iter().enumerate() {
            if j == 0 || k == 0 {
                return Err(Error::InvalidArgument(format!(
                    "monomial x^{j} y^{k} does not vanish on both axes"
                )));
            }
            if terms[..i].contains(&(j, k)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate monomial x^{j} y^{k}"
                )));
            }
        }
        Ok(Self { terms })
    }

    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    /// {xy, x²y, xy², x²y²}.
    pub fn default_four() -> Self {
        Self {
            terms: vec![(1, 1), (2, 1), (1, 2), (2, 2)],
        }
    }

    /// Parses `"11,21,12"` (single-digit exponent pairs) or `"1:1,10:2"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let bad = |tok: &str| Error::InvalidArgument(format!("bad monomial `{tok}`"));
        let mut terms = Vec::new();
        for tok in s.split(',').map(str::trim) {
            let (j, k) = match tok.split_once(':') {
                Some((j, k)) => (j, k),
                None if tok.len() == 2 && tok.is_ascii() => tok.split_at(1),
                None => return Err(bad(tok)),
            };
            let j: u32 = j.parse().map_err(|_| bad(tok))?;
            let k: u32 = k.parse().map_err(|_| bad(tok))?;
            terms.push((j, k));
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[(u32, u32)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Swaps the x and y exponents of every term.
    pub fn transposed(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|&(j, k)| (k, j)).collect(),
        }
    }

    /// Exponent pairs with the constant term (0,0) prepended.
    fn with_constant(&self) -> Vec<(u32, u32)> {
        std::iter::once((0, 0))
            .chain(self.terms.iter().copied())
            .collect()
    }

    /// `"21"` for x²y, or `"10:2"` when an exponent has two digits.
    pub fn labels(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|&(j, k)| {
                if j < 10 && k < 10 {
                    format!("{j}{k}")
                } else {
                    format!("{j}:{k}")
                }
            })
            .collect()
    }
}

impl std::fmt::Display for MonomialBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let toks: Vec<String> = self
            .terms
            .iter()
            .map(|&(j, k)| format!("{j}:{k}"))
            .collect();
        f.write_str(&toks.join(","))
    }
}

/// `mass[i] = ∫∫ f_X f_Y m_i` and `transport[i] = ∫∫ (x−y)² f_X f_Y m_i`,
/// index 0 being the constant monomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostIntegrals {
    pub mass: Vec<f64>,
    pub transport: Vec<f64>,
}

fn monomial(x: f64, y: f64, (j, k): (u32, u32)) -> f64 {
    x.powi(j as i32) * y.powi(k as i32)
}

/// Per-monomial double integrals against the product of the marginals.
pub fn compute_integrals(
    f_x: &MarginalDensity,
    f_y: &MarginalDensity,
    basis: &MonomialBasis,
    rule: &QuadratureRule,
) -> Result<CostIntegrals> {
    compute_integrals_with(f_x, f_y, basis, rule, Exec::default())
}

/// [`compute_integrals`] with an explicit execution policy; monomials are
/// distributed across workers.
pub fn compute_integrals_with(
    f_x: &MarginalDensity,
    f_y: &MarginalDensity,
    basis: &MonomialBasis,
    rule: &QuadratureRule,
    exec: Exec,
) -> Result<CostIntegrals> {
    let qx = f_x.quadrature(rule);
    let qy = f_y.quadrature(rule);
    let exps = basis.with_constant();
    let per_term = exec.map(exps.len(), |i| {
        let e = exps[i];
        let weight = |x: f64, y: f64| f_x.value(x) * f_y.value(y) * monomial(x, y, e);
        let mass = integrate_2d_tensor(weight, &qx, &qy, Exec::Sequential)?;
        let transport = integrate_2d_tensor(
            |x, y| (x - y) * (x - y) * weight(x, y),
            &qx,
            &qy,
            Exec::Sequential,
        )?;
        Ok((mass, transport))
    });
    let mut out = CostIntegrals {
        mass: Vec::with_capacity(exps.len()),
        transport: Vec::with_capacity(exps.len()),
    };
    for r in per_term {
        let (m, t) = r?;
        out.mass.push(m);
        out.transport.push(t);
    }
    Ok(out)
}

/// Equispaced grid on [0,1] including both ends.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|g| g as f64 / (n - 1) as f64).collect(),
    }
}

fn tau_row(x: f64, y: f64, basis: &MonomialBasis) -> Vec<f64> {
    basis
        .with_constant()
        .into_iter()
        .map(|e| monomial(x, y, e))
        .collect()
}

/// Builds the program over (C, c_1..c_m): minimize Σ c_i Ĩ_i subject to
/// Σ c_i I_i ≥ 1 and τ ≥ 0 on a `grid_n × grid_n` grid. All variables
/// are free.
pub fn assemble_lp(
    integrals: &CostIntegrals,
    basis: &MonomialBasis,
    grid_n: usize,
) -> Result<LinearProgram> {
    let n = basis.len() + 1;
    if integrals.mass.len() != n || integrals.transport.len() != n {
        return Err(Error::InvalidArgument(format!(
            "integrals cover {} terms, basis has {n}",
            integrals.mass.len()
        )));
    }
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!(
            "nonnegativity grid needs at least 2 points per axis, got {grid_n}"
        )));
    }
    let mut lp = LinearProgram::new(integrals.transport.clone());
    for j in 0..n {
        lp.set_lower_bound(j, None);
    }
    lp.add_constraint(integrals.mass.clone(), Sense::Ge, 1.0);
    let grid = unit_grid(grid_n);
    for &x in &grid {
        for &y in &grid {
            lp.add_constraint(tau_row(x, y, basis), Sense::Ge, 0.0);
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone)]
pub struct CopulaConfig {
    pub quad_n: usize,
    pub grid_n: usize,
    /// Resolution of the post-solve nonnegativity check.
    pub check_grid_n: usize,
    /// Adds ∫∫ x^r π = ∫ x^r f_X and ∫∫ y^r π = ∫ y^r f_Y for r = 1..=k,
    /// and turns the total-mass row into an equality.
    pub moment_constraints: usize,
    pub max_refinements: usize,
    pub exec: Exec,
}

impl Default for CopulaConfig {
    fn default() -> Self {
        Self {
            quad_n: crate::quadrature::DEFAULT_RULE_SIZE,
            grid_n: 21,
            check_grid_n: 101,
            moment_constraints: 0,
            max_refinements: 8,
            exec: Exec::default(),
        }
    }
}

/// A fitted copula density.
#[derive(Debug, Clone)]
pub struct CopulaModel {
    pub f_x: MarginalDensity,
    pub f_y: MarginalDensity,
    pub basis: MonomialBasis,
    /// C.
    pub constant: f64,
    /// c_i, aligned with `basis`.
    pub coefficients: Vec<f64>,
    pub integrals: CostIntegrals,
    /// Σ c_i Ĩ_i.
    pub cost: f64,
    /// Σ c_i I_i, the total mass of π.
    pub mass: f64,
    /// Nonnegativity cuts added beyond the base grid.
    pub cuts: usize,
}

impl CopulaModel {
    /// A model with given coefficients; integrals and cost are computed.
    pub fn from_coefficients(
        f_x: MarginalDensity,
        f_y: MarginalDensity,
        basis: MonomialBasis,
        constant: f64,
        coefficients: Vec<f64>,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} monomials",
                coefficients.len(),
                basis.len()
            )));
        }
        let integrals = compute_integrals(&f_x, &f_y, &basis, rule)?;
        let mut model = Self {
            f_x,
            f_y,
            basis,
            constant,
            coefficients,
            integrals,
            cost: 0.0,
            mass: 0.0,
            cuts: 0,
        };
        model.refresh_totals();
        Ok(model)
    }

    /// τ ≡ 1.
    pub fn product(
        f_x: MarginalDensity,
        f_y: MarginalDensity,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        Self::from_coefficients(f_x, f_y, MonomialBasis::empty(), 1.0, Vec::new(), rule)
    }

    fn refresh_totals(&mut self) {
        let c = self.all_coefficients();
        self.cost = c
            .iter()
            .zip(&self.integrals.transport)
            .map(|(a, b)| a * b)
            .sum();
        self.mass = c.iter().zip(&self.integrals.mass).map(|(a, b)| a * b).sum();
    }

    /// (C, c_1, .., c_m).
    pub fn all_coefficients(&self) -> Vec<f64> {
        std::iter::once(self.constant)
            .chain(self.coefficients.iter().copied())
            .collect()
    }

    pub fn tau(&self, x: f64, y: f64) -> f64 {
        self.constant
            + self
                .basis
                .terms()
                .iter()
                .zip(&self.coefficients)
                .map(|(&e, c)| c * monomial(x, y, e))
                .sum::<f64>()
    }

    /// (τ_x, τ_y, τ_xx, τ_yy).
    pub fn tau_derivatives(&self, x: f64, y: f64) -> [f64; 4] {
        let mut d = [0.0; 4];
        for (&(j, k), &c) in self.basis.terms().iter().zip(&self.coefficients) {
            let (j, k) = (j as i32, k as i32);
            let (xf, yf) = (j as f64, k as f64);
            d[0] += c * xf * x.powi(j - 1) * y.powi(k);
            d[1] += c * yf * x.powi(j) * y.powi(k - 1);
            if j >= 2 {
                d[2] += c * xf * (xf - 1.0) * x.powi(j - 2) * y.powi(k);
            }
            if k >= 2 {
                d[3] += c * yf * (yf - 1.0) * x.powi(j) * y.powi(k - 2);
            }
        }
        d
    }

    /// π(x, y) without the domain check.
    pub fn density_at(&self, x: f64, y: f64) -> f64 {
        self.f_x.value(x) * self.f_y.value(y) * self.tau(x, y)
    }

    /// π(x, y) on [0,1]².
    pub fn density(&self, x: f64, y: f64) -> Result<f64> {
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(Error::InvalidArgument(format!(
                "({x}, {y}) lies outside the unit square"
            )));
        }
        Ok(self.density_at(x, y))
    }

    /// |Σ c_i I_i − 1|.
    pub fn constraint_residual(&self) -> f64 {
        (self.mass - 1.0).abs()
    }

    /// Larger of the L1 distances between π's marginals and f_X, f_Y.
    pub fn marginal_deviation(&self, rule: &QuadratureRule) -> Result<f64> {
        let qx = self.f_x.quadrature(rule);
        let qy = self.f_y.quadrature(rule);
        let dev = |outer: &QuadratureRule,
                   inner: &QuadratureRule,
                   f_out: &MarginalDensity,
                   f_in: &MarginalDensity,
                   swap: bool| {
            let mut total = 0.0;
            for (&s, &ws) in outer.nodes().iter().zip(outer.weights()) {
                let mut integral = 0.0;
                for (&t, &wt) in inner.nodes().iter().zip(inner.weights()) {
                    let tau = if swap { self.tau(t, s) } else { self.tau(s, t) };
                    integral += wt * f_in.value(t) * tau;
                }
                let f = f_out.value(s);
                total += ws * (f * integral - f).abs();
            }
            total
        };
        let d = dev(&qx, &qy, &self.f_x, &self.f_y, false)
            .max(dev(&qy, &qx, &self.f_y, &self.f_x, true));
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NumericalDomain(
                "marginal deviation is not finite".into(),
            ))
        }
    }

    /// π sampled on a `n × n` grid, rows indexed by x.
    pub fn density_grid(&self, n: usize, exec: Exec) -> Vec<Vec<f64>> {
        let grid = unit_grid(n);
        exec.map(grid.len(), |a| {
            grid.iter().map(|&y| self.density_at(grid[a], y)).collect()
        })
    }
}

/// Solves the natural-copula program for the given marginals.
pub fn estimate_copula(
    f_x: &MarginalDensity,
    f_y: &MarginalDensity,
    basis: &MonomialBasis,
    config: &CopulaConfig,
) -> Result<CopulaModel> {
    let rule = gauss_legendre_rule(config.quad_n)?;
    let integrals = compute_integrals_with(f_x, f_y, basis, &rule, config.exec)?;
    let mut lp = assemble_lp(&integrals, basis, config.grid_n)?;

    // The product copula is always feasible.
    let mut baseline = vec![0.0; basis.len() + 1];
    baseline[0] = 1.0 / integrals.mass[0];
    debug_assert!(lp.max_violation(&baseline) < 1e-12);

    if config.moment_constraints > 0 {
        add_moment_rows(&mut lp, f_x, f_y, basis, &rule, config.moment_constraints);
    }

    let check = unit_grid(config.check_grid_n);
    let fx_check: Vec<f64> = check.iter().map(|&u| f_x.value(u)).collect();
    let fy_check: Vec<f64> = check.iter().map(|&u| f_y.value(u)).collect();
    let mut cuts = 0;
    for round in 0..=config.max_refinements {
        let sol = solve(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::EstimationInfeasible),
            LpStatus::Unbounded => return Err(Error::ModelUnbounded),
        }
        let mut model = CopulaModel {
            f_x: f_x.clone(),
            f_y: f_y.clone(),
            basis: basis.clone(),
            constant: sol.values[0],
            coefficients: sol.values[1..].to_vec(),
            integrals: integrals.clone(),
            cost: 0.0,
            mass: 0.0,
            cuts,
        };
        model.refresh_totals();

        let violations: Vec<(f64, f64)> = config
            .exec
            .map(check.len(), |a| {
                let mut out = Vec::new();
                for (b, &y) in check.iter().enumerate() {
                    let pi = fx_check[a] * fy_check[b] * model.tau(check[a], y);
                    if pi < -NEGATIVITY_TOL {
                        out.push((check[a], y));
                    }
                }
                out
            })
            .into_iter()
            .flatten()
            .collect();
        if violations.is_empty() || round == config.max_refinements {
            return Ok(model);
        }
        cuts += violations.len();
        for (x, y) in violations {
            lp.add_constraint(tau_row(x, y, basis), Sense::Ge, 0.0);
        }
    }
    unreachable!("refinement loop returns on its last round")
}

fn add_moment_rows(
    lp: &mut LinearProgram,
    f_x: &MarginalDensity,
    f_y: &MarginalDensity,
    basis: &MonomialBasis,
    rule: &QuadratureRule,
    k: usize,
) {
    let exps = basis.with_constant();
    let max_power = exps.iter().map(|e| e.0.max(e.1)).max().unwrap_or(0) as usize + k;
    let moments = |f: &MarginalDensity| -> Vec<f64> {
        let q = f.quadrature(rule);
        (0..=max_power)
            .map(|p| {
                q.nodes()
                    .iter()
                    .zip(q.weights())
                    .map(|(&s, &w)| w * s.powi(p as i32) * f.value(s))
                    .sum()
            })
            .collect()
    };
    let (mx, my) = (moments(f_x), moments(f_y));
    let mass = exps
        .iter()
        .map(|&(j, l)| mx[j as usize] * my[l as usize])
        .collect();
    lp.add_constraint(mass, Sense::Le, 1.0);
    for r in 1..=k {
        let row_x = exps
            .iter()
            .map(|&(j, l)| mx[j as usize + r] * my[l as usize])
            .collect();
        lp.add_constraint(row_x, Sense::Eq, mx[r]);
        let row_y = exps
            .iter()
            .map(|&(j, l)| mx[j as usize] * my[l as usize + r])
            .collect();
        lp.add_constraint(row_y, Sense::Eq, my[r]);
    }
}

/// ∫∫ (x−y)² π by tensor quadrature over the marginals' supports.
pub fn wasserstein_cost(model: &CopulaModel, rule: &QuadratureRule) -> Result<f64> {
    let qx = model.f_x.quadrature(rule);
    let qy = model.f_y.quadrature(rule);
    integrate_2d_tensor(
        |x, y| (x - y) * (x - y) * model.density_at(x, y),
        &qx,
        &qy,
        Exec::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::{normalize, DomainMap, MarginalSpec};

    fn rule() -> QuadratureRule {
        gauss_legendre_rule(32).unwrap()
    }

    fn hermite_density(coeffs: [f64; 4], center: f64, width: f64) -> MarginalDensity {
        let spec = MarginalSpec {
            coeffs,
            xi: 1.0,
            center,
            width,
            theta: 1.0,
            volume: 1.0,
        };
        normalize(&spec, &DomainMap::unit(), &rule()).unwrap()
    }

    #[test]
    fn basis_validation_and_parsing() {
        assert!(MonomialBasis::new(vec![(0, 1)]).is_err());
        assert!(MonomialBasis::new(vec![(1, 1), (1, 1)]).is_err());
        assert!(MonomialBasis::new((1..=9).map(|j| (j, 1)).collect()).is_err());
        assert_eq!(
            MonomialBasis::parse("11,21,12,22").unwrap(),
            MonomialBasis::default_four()
        );
        assert_eq!(
            MonomialBasis::parse("1:1, 10:2").unwrap().terms(),
            &[(1, 1), (10, 2)]
        );
        assert!(MonomialBasis::parse("").unwrap().is_empty());
        assert!(MonomialBasis::parse("1").is_err());
        assert!(MonomialBasis::parse("10").is_err());
        assert_eq!(
            MonomialBasis::parse("21").unwrap().transposed().terms(),
            &[(1, 2)]
        );
    }

    #[test]
    fn uniform_integrals_match_closed_form() {
        let u = MarginalDensity::uniform();
        let basis = MonomialBasis::new(vec![(1, 1)]).unwrap();
        let ints = compute_integrals(&u, &u, &basis, &rule()).unwrap();
        assert!((ints.mass[0] - 1.0).abs() < 1e-14);
        assert!((ints.mass[1] - 0.25).abs() < 1e-14);
        assert!((ints.transport[0] - 1.0 / 6.0).abs() < 1e-14);
        // ∫∫(x−y)²xy = 1/4·... = 2·(1/4·1/2) − 2·(1/3)² = 1/4 − 2/9 = 1/36
        assert!((ints.transport[1] - 1.0 / 36.0).abs() < 1e-14);
    }

    #[test]
    fn integrals_agree_with_separable_moments() {
        let fx = hermite_density([0.3, -0.6, 0.1, -0.2], 0.4, 0.2);
        let fy = hermite_density([-0.2, -0.5, 0.0, -0.1], 0.6, 0.25);
        let basis = MonomialBasis::default_four();
        let ints = compute_integrals(&fx, &fy, &basis, &rule()).unwrap();
        let moments = |f: &MarginalDensity| -> Vec<f64> {
            let q = f.quadrature(&gauss_legendre_rule(48).unwrap());
            (0..6)
                .map(|p| {
                    q.nodes()
                        .iter()
                        .zip(q.weights())
                        .map(|(&s, &w)| w * s.powi(p) * f.value(s))
                        .sum()
                })
                .collect()
        };
        let (mx, my) = (moments(&fx), moments(&fy));
        for (i, &(j, k)) in basis.with_constant().iter().enumerate() {
            let (j, k) = (j as usize, k as usize);
            let mass = mx[j] * my[k];
            let transport = mx[j + 2] * my[k] - 2.0 * mx[j + 1] * my[k + 1] + mx[j] * my[k + 2];
            assert!((ints.mass[i] - mass).abs() < 1e-12);
            assert!((ints.transport[i] - transport).abs() < 1e-12);
            assert!(ints.transport[i] >= 0.0);
        }
        assert!((ints.mass[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn symmetric_marginals_give_symmetric_integrals() {
        let f = hermite_density([0.2, -0.8, 0.1, -0.3], 0.5, 0.2);
        let basis = MonomialBasis::new(vec![(1, 2), (2, 1)]).unwrap();
        let ints = compute_integrals(&f, &f, &basis, &rule()).unwrap();
        assert!((ints.mass[1] - ints.mass[2]).abs() < 1e-10);
        assert!((ints.transport[1] - ints.transport[2]).abs() < 1e-10);
    }

    #[test]
    fn lp_shape_for_uniform_single_monomial() {
        let u = MarginalDensity::uniform();
        let basis = MonomialBasis::new(vec![(1, 1)]).unwrap();
        let ints = compute_integrals(&u, &u, &basis, &rule()).unwrap();
        let lp = assemble_lp(&ints, &basis, 11).unwrap();
        assert_eq!(lp.num_vars(), 2);
        assert_eq!(lp.num_constraints(), 1 + 121);
        assert!(assemble_lp(&ints, &MonomialBasis::empty(), 11).is_err());
        assert!(assemble_lp(&ints, &basis, 1).is_err());
    }

    #[test]
    fn uniform_optimum_is_four_xy() {
        let u = MarginalDensity::uniform();
        let basis = MonomialBasis::new(vec![(1, 1)]).unwrap();
        let m = estimate_copula(&u, &u, &basis, &CopulaConfig::default()).unwrap();
        assert!(m.constant.abs() < 1e-12);
        assert!((m.coefficients[0] - 4.0).abs() < 1e-12);
        assert!((m.cost - 1.0 / 9.0).abs() < 1e-12);
        assert!((m.density(0.5, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((wasserstein_cost(&m, &rule()).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        assert!(m.density(1.5, 0.5).is_err());
        // π's x-marginal is 2x, so the L1 deviation from 1 is 1/2.
        assert!((m.marginal_deviation(&rule()).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn empty_basis_gives_product_copula() {
        let f = hermite_density([0.2, -0.8, 0.1, -0.3], 0.45, 0.2);
        let g = hermite_density([0.1, -0.6, 0.0, -0.2], 0.55, 0.15);
        let m = estimate_copula(&f, &g, &MonomialBasis::empty(), &CopulaConfig::default()).unwrap();
        assert!((m.constant - 1.0).abs() < 1e-12);
        assert!((m.cost - m.integrals.transport[0]).abs() < 1e-12);
        let x = 0.47;
        assert!((m.density(x, 0.5).unwrap() - f.value(x) * g.value(0.5)).abs() < 1e-12);
    }

    #[test]
    fn axes_carry_only_the_constant() {
        let f = hermite_density([0.2, -0.8, 0.1, -0.3], 0.45, 0.3);
        let m = estimate_copula(
            &f,
            &f,
            &MonomialBasis::default_four(),
            &CopulaConfig::default(),
        )
        .unwrap();
        for y in [0.1, 0.5, 0.9] {
            let want = f.value(0.0) * f.value(y) * m.constant;
            assert!((m.density(0.0, y).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn cost_dominated_by_product_and_constraint_active() {
        let f = hermite_density([0.3, -0.9, 0.05, -0.25], 0.5, 0.22);
        let m = estimate_copula(
            &f,
            &f,
            &MonomialBasis::default_four(),
            &CopulaConfig::default(),
        )
        .unwrap();
        assert!(m.cost <= m.integrals.transport[0] + 1e-9);
        assert!(m.constraint_residual() < 1e-8);
        let w = wasserstein_cost(&m, &rule()).unwrap();
        assert!((w - m.cost).abs() < 1e-7);
    }

    #[test]
    fn swapping_marginals_transposes_the_solution() {
        let f = hermite_density([0.3, -0.9, 0.05, -0.25], 0.4, 0.2);
        let g = hermite_density([-0.1, -0.7, 0.1, -0.2], 0.6, 0.25);
        let basis = MonomialBasis::new(vec![(1, 1), (2, 1)]).unwrap();
        let cfg = CopulaConfig::default();
        let a = estimate_copula(&f, &g, &basis, &cfg).unwrap();
        let b = estimate_copula(&g, &f, &basis.transposed(), &cfg).unwrap();
        assert!((a.cost - b.cost).abs() < 1e-9, "{} vs {}", a.cost, b.cost);
    }

    #[test]
    fn moment_constraints_pin_marginal_means() {
        let f = hermite_density([0.3, -0.9, 0.05, -0.25], 0.4, 0.2);
        let g = hermite_density([-0.1, -0.7, 0.1, -0.2], 0.6, 0.25);
        let cfg = CopulaConfig {
            moment_constraints: 1,
            ..CopulaConfig::default()
        };
        let m = estimate_copula(&f, &g, &MonomialBasis::default_four(), &cfg).unwrap();
        let r = gauss_legendre_rule(48).unwrap();
        let (qx, qy) = (f.quadrature(&r), g.quadrature(&r));
        let mean_x =
            integrate_2d_tensor(|x, y| x * m.density_at(x, y), &qx, &qy, Exec::Sequential).unwrap();
        let fx_mean: f64 = qx
            .nodes()
            .iter()
            .zip(qx.weights())
            .map(|(&s, &w)| w * s * f.value(s))
            .sum();
        assert!((mean_x - fx_mean).abs() < 1e-9);
        assert!(m.constraint_residual() < 1e-9);
    }

    #[test]
    fn sequential_and_parallel_estimates_agree() {
        let f = hermite_density([0.3, -0.9, 0.05, -0.25], 0.4, 0.2);
        let g = hermite_density([-0.1, -0.7, 0.1, -0.2], 0.6, 0.25);
        let run = |exec| {
            let cfg = CopulaConfig {
                exec,
                ..CopulaConfig::default()
            };
            estimate_copula(&f, &g, &MonomialBasis::default_four(), &cfg).unwrap()
        };
        let (a, b) = (run(Exec::Sequential), run(Exec::Parallel));
        assert_eq!(a.all_coefficients(), b.all_coefficients());
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
    }
}
