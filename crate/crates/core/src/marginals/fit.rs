//! Least-squares fit of a Hermite marginal to a binned price histogram.
//!
//! For fixed (p, σ, θ) the clamped model is linear in the four coefficients
//! on the bins where it is positive, so the coefficients come from an
//! active-set linear least-squares solve. The nonlinear parameters are
//! searched by Nelder–Mead in (u-center, ln σ_u, ln θ) coordinates.

use nalgebra::{DMatrix, DVector};

use super::nelder_mead::nelder_mead;
use super::{hermite_table, normalize, DomainMap, MarginalDensity, MarginalSpec, BASIS_SIZE};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

const MIN_FIT_BINS: usize = 6;
const RANK_TOL: f64 = 1e-12;
const MAX_ACTIVE_SET_ROUNDS: usize = 32;
const NM_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalHistogram {
    bin_centers: Vec<f64>,
    masses: Vec<f64>,
}

impl EmpiricalHistogram {
    pub fn new(bin_centers: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if bin_centers.len() != masses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} bin centers but {} masses",
                bin_centers.len(),
                masses.len()
            )));
        }
        if bin_centers.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "histogram needs at least 3 bins, got {}",
                bin_centers.len()
            )));
        }
        if bin_centers.iter().any(|c| !c.is_finite())
            || bin_centers
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidArgument(
                "bin centers must be finite and strictly increasing".into(),
            ));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidArgument(
                "bin masses must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            bin_centers,
            masses,
        })
    }

    pub fn bin_centers(&self) -> &[f64] {
        &self.bin_centers
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mean spacing between bin centers.
    pub fn bin_width(&self) -> f64 {
        let n = self.bin_centers.len();
        (self.bin_centers[n - 1] - self.bin_centers[0]) / (n - 1) as f64
    }

    /// Mass-weighted mean and standard deviation of the bin centers.
    fn moments(&self) -> (f64, f64) {
        let total = self.total();
        if total <= 0.0 {
            let n = self.len() as f64;
            let mean = self.bin_centers.iter().sum::<f64>() / n;
            return (mean, self.bin_width() * n / 4.0);
        }
        let mean = self
            .bin_centers
            .iter()
            .zip(&self.masses)
            .map(|(c, m)| c * m)
            .sum::<f64>()
            / total;
        let var = self
            .bin_centers
            .iter()
            .zip(&self.masses)
            .map(|(c, m)| m * (c - mean) * (c - mean))
            .sum::<f64>()
            / total;
        (mean, var.sqrt().max(self.bin_width()))
    }
}

/// Search settings for [`fit_marginal`]. Ranges are in price units; `None`
/// picks a range from the histogram and domain.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// ξ is held at this value: any change in ξ is absorbed exactly by the
    /// coefficients, so it cannot be estimated from data.
    pub xi: f64,
    pub center_range: Option<(f64, f64)>,
    pub width_range: Option<(f64, f64)>,
    pub theta_range: (f64, f64),
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            xi: 1.0,
            center_range: None,
            width_range: None,
            theta_range: (0.2, 8.0),
            max_iterations: 500,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: MarginalSpec,
    pub density: MarginalDensity,
    /// Sum of squared residuals between predicted and observed bin masses.
    pub residual: f64,
    pub iterations: usize,
    /// False when Nelder–Mead stopped on its iteration cap.
    pub converged: bool,
}

struct Problem<'a> {
    hist: &'a EmpiricalHistogram,
    map: DomainMap,
    center: (f64, f64),
    width: (f64, f64),
    theta: (f64, f64),
}

struct Trial {
    residual: f64,
    /// Coefficients of H_i(z)·exp(−z²/2θ) predicting bin masses directly.
    effective: [f64; BASIS_SIZE],
}

impl Problem<'_> {
    fn unpack(&self, x: &[f64]) -> Option<(f64, f64, f64)> {
        let center = self.map.to_price(x[0]);
        let width = x[1].exp() * self.map.span();
        let theta = x[2].exp();
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        (inside(center, self.center) && inside(width, self.width) && inside(theta, self.theta))
            .then_some((center, width, theta))
    }

    fn design_row(&self, k: usize, center: f64, width: f64, theta: f64) -> [f64; BASIS_SIZE] {
        let z = (self.hist.bin_centers[k] - center) / width;
        let h = hermite_table(z);
        let e = (-z * z / (2.0 * theta)).exp();
        [h[1] * e, h[2] * e, h[3] * e, h[4] * e]
    }

    fn solve(&self, center: f64, width: f64, theta: f64) -> Result<Trial> {
        let n = self.hist.len();
        let rows: Vec<[f64; BASIS_SIZE]> = (0..n)
            .map(|k| self.design_row(k, center, width, theta))
            .collect();
        let masses = &self.hist.masses;
        let mut active: Vec<bool> = masses.iter().map(|&m| m > 0.0).collect();
        let mut coef = [0.0; BASIS_SIZE];
        for _ in 0..MAX_ACTIVE_SET_ROUNDS {
            let idx: Vec<usize> = (0..n).filter(|&k| active[k]).collect();
            if idx.len() < BASIS_SIZE {
                return Err(Error::IllConditionedFit(format!(
                    "only {} informative bins",
                    idx.len()
                )));
            }
            let a = DMatrix::from_fn(idx.len(), BASIS_SIZE, |r, c| rows[idx[r]][c]);
            let b = DVector::from_iterator(idx.len(), idx.iter().map(|&k| masses[k]));
            let svd = a.svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smax.is_nan() || smax <= 0.0 || smin / smax < RANK_TOL {
                return Err(Error::IllConditionedFit(format!(
                    "design matrix condition {:.3e}",
                    smax / smin
                )));
            }
            let x = svd
                .solve(&b, smax * RANK_TOL)
                .map_err(|e| Error::IllConditionedFit(e.to_string()))?;
            coef.copy_from_slice(x.as_slice());
            // Zero-mass bins the unclamped model overshoots join the fit.
            let mut grew = false;
            for k in 0..n {
                if !active[k] && dot(&rows[k], &coef) > 0.0 {
                    active[k] = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let residual = rows
            .iter()
            .zip(masses)
            .map(|(r, m)| {
                let d = dot(r, &coef).max(0.0) - m;
                d * d
            })
            .sum();
        Ok(Trial {
            residual,
            effective: coef,
        })
    }

    fn objective(&self, x: &[f64]) -> f64 {
        match self.unpack(x) {
            Some((c, w, t)) => self
                .solve(c, w, t)
                .map(|trial| trial.residual)
                .unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    }
}

fn dot(a: &[f64; BASIS_SIZE], b: &[f64; BASIS_SIZE]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits a [`MarginalSpec`] to `hist`, with the profile expressed on `map`.
///
/// The returned spec predicts bin masses as `raw_density(u) · Δu`, where Δu
/// is the bin spacing in unit coordinates, so `volume` is the model's total
/// mass.
pub fn fit_marginal(
    hist: &EmpiricalHistogram,
    map: &DomainMap,
    config: &FitConfig,
    rule: &QuadratureRule,
) -> Result<FitResult> {
    if hist.len() < MIN_FIT_BINS {
        return Err(Error::InsufficientData {
            bins: hist.len(),
            required: MIN_FIT_BINS,
        });
    }
    if !(config.xi.is_finite() && config.xi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "xi must be positive, got {}",
            config.xi
        )));
    }
    let span = map.span();
    let bin = hist.bin_width();
    let problem = Problem {
        hist,
        map: *map,
        center: config.center_range.unwrap_or((map.lo, map.hi)),
        width: config.width_range.unwrap_or((0.5 * bin, 2.0 * span)),
        theta: config.theta_range,
    };

    // Coarse deterministic scan for a starting point.
    let (mean, sd) = hist.moments();
    let mode = hist.bin_centers[hist.masses.iter().enumerate().fold(0, |best, (k, &m)| {
        if m > hist.masses[best] {
            k
        } else {
            best
        }
    })];
    let mut start: Option<(Vec<f64>, f64)> = None;
    for center in [mean, mode] {
        for mult in [0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8] {
            for theta in [0.5, 1.0, 2.0, 4.0] {
                let x = vec![map.to_unit(center), (mult * sd / span).ln(), f64::ln(theta)];
                let v = problem.objective(&x);
                if v.is_finite() && start.as_ref().is_none_or(|s| v < s.1) {
                    start = Some((x, v));
                }
            }
        }
    }
    let Some((mut x, mut best)) = start else {
        return Err(Error::IllConditionedFit(
            "no admissible starting point".into(),
        ));
    };

    let steps = [0.25 * sd / span, 0.2, 0.2];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..NM_RESTARTS {
        let run = nelder_mead(
            |p| problem.objective(p),
            &x,
            &steps,
            config.tolerance,
            config.max_iterations,
        );
        iterations += run.iterations;
        converged = run.converged;
        let improved = run.value < best;
        if improved {
            x = run.point;
            best = run.value;
        }
        if !improved || run.iterations == 0 {
            break;
        }
    }

    let (center, width, theta) = problem
        .unpack(&x)
        .ok_or_else(|| Error::IllConditionedFit("optimum left the search box".into()))?;
    let trial = problem.solve(center, width, theta)?;

    // Rescale so that raw_density · Δu reproduces predicted bin masses.
    let du = bin / span;
    let mut coeffs = [0.0; BASIS_SIZE];
    let mut pow = 1.0;
    for (c, d) in coeffs.iter_mut().zip(&trial.effective) {
        pow *= config.xi;
        *c = d / (du * pow);
    }
    let mut spec = MarginalSpec {
        coeffs,
        xi: config.xi,
        center,
        width,
        theta,
        volume: 1.0,
    };
    let volume = normalize(&spec, map, rule)?.normalizer();
    spec.volume = volume;
    spec.coeffs = coeffs.map(|c| c / volume);
    let density = normalize(&spec, map, rule)?;

    Ok(FitResult {
        spec,
        density,
        residual: trial.residual,
        iterations,
        converged,
    })
}
