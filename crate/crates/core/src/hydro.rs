//! Stream-function flow of a copula potential.
//!
//! A potential V on [0,1]² defines the velocity `v = (∂V/∂y, −∂V/∂x)`.
//! Circulation Γ and flux Φ are contour integrals around the unit square,
//! taken leg by leg:
//!
//! ```text
//! Γ = ∫_(0,0)^(1,0) v_x dx + ∫_(1,0)^(1,1) v_y dy + ∫_(1,1)^(0,1) v_x dx + ∫_(0,1)^(0,0) v_y dy
//! Φ = −∫_(0,0)^(1,0) v_y dx + ∫_(1,0)^(1,1) v_x dy − ∫_(1,1)^(0,1) v_y dx + ∫_(0,1)^(0,0) v_x dy
//! ```
//!
//! Since v is a rotated gradient, Φ = ∮ dV vanishes for every continuous V,
//! and Green's theorem gives Γ = −∫∫ ΔV.
//!
//! Clamped marginals make copula potentials only piecewise smooth. Potentials
//! report their kink lines so that line and area integrals split there, and
//! report the jump of the normal derivative across each line, which is the
//! singular part of ΔV.

use serde::Serialize;

use crate::copula::{unit_grid, CopulaModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quadrature::{integrate_1d, integrate_2d_tensor, QuadratureRule};

/// Step for the finite-difference gradient fallback.
const FD_GRADIENT_STEP: f64 = 1e-5;
/// Step for the finite-difference Laplacian fallback.
const FD_LAPLACIAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// A scalar potential on the unit square.
pub trait Potential: Sync {
    fn value(&self, x: f64, y: f64) -> f64;

    /// (∂V/∂x, ∂V/∂y) in closed form, when available.
    fn gradient(&self, _x: f64, _y: f64) -> Option<[f64; 2]> {
        None
    }

    /// (∂²V/∂x², ∂²V/∂y²) in closed form, when available.
    fn second_derivatives(&self, _x: f64, _y: f64) -> Option<[f64; 2]> {
        None
    }

    /// Interior lines x = a (for `Axis::X`) or y = b where derivatives of V
    /// may be discontinuous.
    fn kinks(&self, _axis: Axis) -> Vec<f64> {
        Vec::new()
    }

    /// Jump of ∂V/∂axis across the kink line at `at`, evaluated at
    /// coordinate `along` on the other axis.
    fn gradient_jump(&self, _axis: Axis, _at: f64, _along: f64) -> f64 {
        0.0
    }
}

/// Second-order difference quotient for dV/dt, one-sided near the ends of
/// [0,1].
fn diff1<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    if t - h < 0.0 {
        (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
    } else if t + h > 1.0 {
        (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h)
    } else {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }
}

fn diff2<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    if t - h < 0.0 {
        (2.0 * f(t) - 5.0 * f(t + h) + 4.0 * f(t + 2.0 * h) - f(t + 3.0 * h)) / (h * h)
    } else if t + h > 1.0 {
        (2.0 * f(t) - 5.0 * f(t - h) + 4.0 * f(t - 2.0 * h) - f(t - 3.0 * h)) / (h * h)
    } else {
        (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
    }
}

/// Finite-difference gradient with step `h`.
pub fn gradient_fd<V: Potential + ?Sized>(v: &V, x: f64, y: f64, h: f64) -> [f64; 2] {
    [
        diff1(|s| v.value(s, y), x, h),
        diff1(|s| v.value(x, s), y, h),
    ]
}

fn gradient_of<V: Potential + ?Sized>(v: &V, x: f64, y: f64) -> [f64; 2] {
    v.gradient(x, y)
        .unwrap_or_else(|| gradient_fd(v, x, y, FD_GRADIENT_STEP))
}

fn laplacian_of<V: Potential + ?Sized>(v: &V, x: f64, y: f64) -> f64 {
    let [xx, yy] = v.second_derivatives(x, y).unwrap_or_else(|| {
        let h = FD_LAPLACIAN_STEP;
        [
            diff2(|s| v.value(s, y), x, h),
            diff2(|s| v.value(x, s), y, h),
        ]
    });
    xx + yy
}

/// (v_x, v_y) = (∂V/∂y, −∂V/∂x).
pub fn velocity<V: Potential + ?Sized>(v: &V, x: f64, y: f64) -> [f64; 2] {
    let [gx, gy] = gradient_of(v, x, y);
    [gy, -gx]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityField {
    pub points: Vec<(f64, f64)>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

fn field_from<G>(grid_n: usize, exec: Exec, grad: G) -> Result<VelocityField>
where
    G: Fn(f64, f64) -> [f64; 2] + Sync + Send,
{
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!(
            "velocity grid needs at least 2 points per axis, got {grid_n}"
        )));
    }
    let grid = unit_grid(grid_n);
    let rows = exec.map(grid.len(), |a| {
        grid.iter()
            .map(|&y| (grid[a], y, grad(grid[a], y)))
            .collect::<Vec<_>>()
    });
    let mut field = VelocityField {
        points: Vec::with_capacity(grid_n * grid_n),
        vx: Vec::with_capacity(grid_n * grid_n),
        vy: Vec::with_capacity(grid_n * grid_n),
    };
    for (x, y, [gx, gy]) in rows.into_iter().flatten() {
        if !(gx.is_finite() && gy.is_finite()) {
            return Err(Error::NumericalDomain(format!(
                "potential gradient is not finite at ({x}, {y})"
            )));
        }
        field.points.push((x, y));
        field.vx.push(gy);
        field.vy.push(-gx);
    }
    Ok(field)
}

/// Velocity on a `grid_n × grid_n` grid covering the square, x-major.
/// Closed-form derivatives are used when the potential provides them,
/// otherwise differences with step 1/(4·grid_n).
pub fn velocity_field<V: Potential + ?Sized>(
    v: &V,
    grid_n: usize,
    exec: Exec,
) -> Result<VelocityField> {
    let h = 1.0 / (4.0 * grid_n as f64);
    field_from(grid_n, exec, |x, y| {
        v.gradient(x, y).unwrap_or_else(|| gradient_fd(v, x, y, h))
    })
}

/// Velocity field from finite differences with step `h`, ignoring any
/// closed-form gradient.
pub fn velocity_field_fd<V: Potential + ?Sized>(
    v: &V,
    grid_n: usize,
    h: f64,
    exec: Exec,
) -> Result<VelocityField> {
    field_from(grid_n, exec, |x, y| gradient_fd(v, x, y, h))
}

/// Orientation bookkeeping for the contour legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContourConvention {
    /// Directed leg integrals with the limits and signs exactly as written
    /// in the module docs.
    #[default]
    Literal,
    /// Arc-length parametrization, counterclockwise, with v·t for Γ and
    /// v·n (outward normal) for Φ.
    CounterClockwise,
}

/// The four leg contributions: bottom, right, top, left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourLegs {
    pub bottom: f64,
    pub right: f64,
    pub top: f64,
    pub left: f64,
}

impl ContourLegs {
    pub fn total(&self) -> f64 {
        self.bottom + self.right + self.top + self.left
    }
}

fn leg_rules<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
) -> (QuadratureRule, QuadratureRule) {
    (
        rule.split_at(&v.kinks(Axis::X)),
        rule.split_at(&v.kinks(Axis::Y)),
    )
}

/// ∫ over [0,1] of `f`, with the result of `integrate_1d` as-is.
fn line<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule) -> Result<f64> {
    integrate_1d(f, rule)
}

/// Γ leg by leg.
pub fn circulation_legs<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
    convention: ContourConvention,
) -> Result<ContourLegs> {
    let (rx, ry) = leg_rules(v, rule);
    let vel = |x, y| velocity(v, x, y);
    Ok(match convention {
        ContourConvention::Literal => ContourLegs {
            // ∫_(0,0)^(1,0) v_x dx
            bottom: line(|x| vel(x, 0.0)[0], &rx)?,
            // ∫_(1,0)^(1,1) v_y dy
            right: line(|y| vel(1.0, y)[1], &ry)?,
            // ∫_(1,1)^(0,1) v_x dx, limits reversed
            top: -line(|x| vel(x, 1.0)[0], &rx)?,
            // ∫_(0,1)^(0,0) v_y dy, limits reversed
            left: -line(|y| vel(0.0, y)[1], &ry)?,
        },
        ContourConvention::CounterClockwise => {
            // r(t) per edge with unit tangent t̂; contributes ∫ v·t̂ ds.
            let tangent = |p: [f64; 2], t: [f64; 2]| p[0] * t[0] + p[1] * t[1];
            ContourLegs {
                bottom: line(|s| tangent(vel(s, 0.0), [1.0, 0.0]), &rx)?,
                right: line(|s| tangent(vel(1.0, s), [0.0, 1.0]), &ry)?,
                top: line(|s| tangent(vel(1.0 - s, 1.0), [-1.0, 0.0]), &mirror(&rx))?,
                left: line(|s| tangent(vel(0.0, 1.0 - s), [0.0, -1.0]), &mirror(&ry))?,
            }
        }
    })
}

/// Φ leg by leg.
pub fn flux_legs<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
    convention: ContourConvention,
) -> Result<ContourLegs> {
    let (rx, ry) = leg_rules(v, rule);
    let vel = |x, y| velocity(v, x, y);
    Ok(match convention {
        ContourConvention::Literal => ContourLegs {
            // −∫_(0,0)^(1,0) v_y dx
            bottom: -line(|x| vel(x, 0.0)[1], &rx)?,
            // ∫_(1,0)^(1,1) v_x dy
            right: line(|y| vel(1.0, y)[0], &ry)?,
            // −∫_(1,1)^(0,1) v_y dx, limits reversed
            top: line(|x| vel(x, 1.0)[1], &rx)?,
            // ∫_(0,1)^(0,0) v_x dy, limits reversed
            left: -line(|y| vel(0.0, y)[0], &ry)?,
        },
        ContourConvention::CounterClockwise => {
            let normal = |p: [f64; 2], n: [f64; 2]| p[0] * n[0] + p[1] * n[1];
            ContourLegs {
                bottom: line(|s| normal(vel(s, 0.0), [0.0, -1.0]), &rx)?,
                right: line(|s| normal(vel(1.0, s), [1.0, 0.0]), &ry)?,
                top: line(|s| normal(vel(1.0 - s, 1.0), [0.0, 1.0]), &mirror(&rx))?,
                left: line(|s| normal(vel(0.0, 1.0 - s), [-1.0, 0.0]), &mirror(&ry))?,
            }
        }
    })
}

/// The rule reflected through 1/2, for edges traversed from 1 to 0.
fn mirror(rule: &QuadratureRule) -> QuadratureRule {
    let nodes: Vec<f64> = rule.nodes().iter().rev().map(|t| 1.0 - t).collect();
    let weights: Vec<f64> = rule.weights().iter().rev().copied().collect();
    QuadratureRule::from_parts(nodes, weights).expect("reflection preserves rule invariants")
}

pub fn circulation<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
    convention: ContourConvention,
) -> Result<f64> {
    Ok(circulation_legs(v, rule, convention)?.total())
}

pub fn flux<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
    convention: ContourConvention,
) -> Result<f64> {
    Ok(flux_legs(v, rule, convention)?.total())
}

/// −∫∫ ΔV over the square, including the line terms from gradient jumps
/// across kinks.
pub fn negative_laplacian_integral<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
) -> Result<f64> {
    let (rx, ry) = leg_rules(v, rule);
    let smooth = integrate_2d_tensor(|x, y| laplacian_of(v, x, y), &rx, &ry, Exec::default())?;
    let mut singular = 0.0;
    for a in v.kinks(Axis::X) {
        singular += integrate_1d(|y| v.gradient_jump(Axis::X, a, y), &ry)?;
    }
    for b in v.kinks(Axis::Y) {
        singular += integrate_1d(|x| v.gradient_jump(Axis::Y, b, x), &rx)?;
    }
    Ok(-(smooth + singular))
}

/// |Γ − (−∫∫ ΔV)|.
pub fn green_check<V: Potential + ?Sized>(v: &V, rule: &QuadratureRule) -> Result<f64> {
    let gamma = circulation(v, rule, ContourConvention::Literal)?;
    let area = negative_laplacian_integral(v, rule)?;
    Ok((gamma - area).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSummary {
    pub circulation: f64,
    pub flux: f64,
    pub green_residual: f64,
}

pub fn flow_summary<V: Potential + ?Sized>(
    v: &V,
    rule: &QuadratureRule,
    convention: ContourConvention,
) -> Result<FlowSummary> {
    let circulation = circulation(v, rule, convention)?;
    let flux = flux(v, rule, convention)?;
    let area = negative_laplacian_integral(v, rule)?;
    Ok(FlowSummary {
        circulation,
        flux,
        green_residual: (circulation - area).abs(),
    })
}

/// Σ a · x^i · y^j with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    pub terms: Vec<(f64, u32, u32)>,
}

impl PolynomialPotential {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Self {
        Self { terms }
    }
}

fn pow_d(x: f64, n: u32, order: u32) -> f64 {
    if order > n {
        return 0.0;
    }
    let coeff: f64 = (0..order).map(|k| (n - k) as f64).product();
    coeff * x.powi((n - order) as i32)
}

impl Potential for PolynomialPotential {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, i, j)| a * pow_d(x, i, 0) * pow_d(y, j, 0))
            .sum()
    }

    fn gradient(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let mut g = [0.0; 2];
        for &(a, i, j) in &self.terms {
            g[0] += a * pow_d(x, i, 1) * pow_d(y, j, 0);
            g[1] += a * pow_d(x, i, 0) * pow_d(y, j, 1);
        }
        Some(g)
    }

    fn second_derivatives(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let mut h = [0.0; 2];
        for &(a, i, j) in &self.terms {
            h[0] += a * pow_d(x, i, 2) * pow_d(y, j, 0);
            h[1] += a * pow_d(x, i, 0) * pow_d(y, j, 2);
        }
        Some(h)
    }
}

/// Wraps a closure; all derivatives come from finite differences.
pub struct FnPotential<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Potential for FnPotential<F> {
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.0)(x, y)
    }
}

/// Which surface of a copula model acts as the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PotentialKind {
    /// V = π(x, y).
    #[default]
    Density,
    /// V = ∫₀^x ∫₀^y π.
    Cumulative,
}

/// A copula model viewed as a potential.
pub struct CopulaPotential<'a> {
    model: &'a CopulaModel,
    kind: PotentialKind,
    rule: QuadratureRule,
}

impl<'a> CopulaPotential<'a> {
    /// `rule` is used for the partial moments of the cumulative surface.
    pub fn new(model: &'a CopulaModel, kind: PotentialKind, rule: &QuadratureRule) -> Self {
        Self {
            model,
            kind,
            rule: rule.clone(),
        }
    }

    /// (A_0(s), A_e(s) for each x-exponent) style partial moments:
    /// ∫₀^s t^p f(t) dt.
    fn partial(&self, axis: Axis, p: u32, s: f64) -> f64 {
        let f = match axis {
            Axis::X => &self.model.f_x,
            Axis::Y => &self.model.f_y,
        };
        f.partial_moment(p, s, &self.rule)
    }

    fn terms(&self) -> impl Iterator<Item = (f64, u32, u32)> + '_ {
        let m = self.model;
        std::iter::once((m.constant, 0, 0)).chain(
            m.basis
                .terms()
                .iter()
                .zip(&m.coefficients)
                .map(|(&(j, k), &c)| (c, j, k)),
        )
    }
}

impl Potential for CopulaPotential<'_> {
    fn value(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            PotentialKind::Density => self.model.density_at(x, y),
            PotentialKind::Cumulative => self
                .terms()
                .map(|(c, j, k)| c * self.partial(Axis::X, j, x) * self.partial(Axis::Y, k, y))
                .sum(),
        }
    }

    fn gradient(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let m = self.model;
        let [fx, dfx, _] = m.f_x.derivatives(x);
        let [fy, dfy, _] = m.f_y.derivatives(y);
        Some(match self.kind {
            PotentialKind::Density => {
                let tau = m.tau(x, y);
                let [tx, ty, _, _] = m.tau_derivatives(x, y);
                [dfx * fy * tau + fx * fy * tx, fx * dfy * tau + fx * fy * ty]
            }
            PotentialKind::Cumulative => {
                let (mut gx, mut gy) = (0.0, 0.0);
                for (c, j, k) in self.terms() {
                    gx += c * x.powi(j as i32) * self.partial(Axis::Y, k, y);
                    gy += c * self.partial(Axis::X, j, x) * y.powi(k as i32);
                }
                [fx * gx, fy * gy]
            }
        })
    }

    fn second_derivatives(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let m = self.model;
        let [fx, dfx, ddfx] = m.f_x.derivatives(x);
        let [fy, dfy, ddfy] = m.f_y.derivatives(y);
        Some(match self.kind {
            PotentialKind::Density => {
                let tau = m.tau(x, y);
                let [tx, ty, txx, tyy] = m.tau_derivatives(x, y);
                [
                    fy * (ddfx * tau + 2.0 * dfx * tx + fx * txx),
                    fx * (ddfy * tau + 2.0 * dfy * ty + fy * tyy),
                ]
            }
            PotentialKind::Cumulative => {
                let (mut gx, mut gxx, mut gy, mut gyy) = (0.0, 0.0, 0.0, 0.0);
                for (c, j, k) in self.terms() {
                    let by = self.partial(Axis::Y, k, y);
                    let ax = self.partial(Axis::X, j, x);
                    gx += c * x.powi(j as i32) * by;
                    gy += c * ax * y.powi(k as i32);
                    if j >= 1 {
                        gxx += c * j as f64 * x.powi(j as i32 - 1) * by;
                    }
                    if k >= 1 {
                        gyy += c * k as f64 * ax * y.powi(k as i32 - 1);
                    }
                }
                [dfx * gx + fx * gxx, dfy * gy + fy * gyy]
            }
        })
    }

    fn kinks(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::X => self.model.f_x.breakpoints(),
            Axis::Y => self.model.f_y.breakpoints(),
        }
    }

    fn gradient_jump(&self, axis: Axis, at: f64, along: f64) -> f64 {
        if self.kind == PotentialKind::Cumulative {
            // ∂V/∂x is an integral of π in y, continuous in x.
            return 0.0;
        }
        let m = self.model;
        let (f, other, x, y) = match axis {
            Axis::X => (&m.f_x, &m.f_y, at, along),
            Axis::Y => (&m.f_y, &m.f_x, along, at),
        };
        f.slope_jumps()
            .iter()
            .find(|&&(a, _)| a == at)
            .map(|&(_, jump)| jump * other.value(along) * m.tau(x, y))
            .unwrap_or(0.0)
    }
}
