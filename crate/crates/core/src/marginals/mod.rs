//! Hermite-polynomial marginal densities on the unit interval.
//!
//! A [`MarginalSpec`] describes an unnormalized price-space profile
//!
//! ```text
//! V · Σ_{i=1..4} c_i ξ^i H_i(z) · exp(−z² / 2θ),   z = (x − p) / σ
//! ```
//!
//! which is clamped at zero and normalized over [0,1] after an affine
//! [`DomainMap`] from prices to the unit interval. Clamping produces kinks
//! wherever the polynomial changes sign; [`MarginalDensity`] tracks those
//! breakpoints so integrals against the density stay at full quadrature order.

mod fit;
mod nelder_mead;
mod roots;

pub use fit::{fit_marginal, EmpiricalHistogram, FitConfig, FitResult};
pub use nelder_mead::{nelder_mead, NelderMeadResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

/// Number of Hermite terms in every marginal.
pub const BASIS_SIZE: usize = 4;

const MAX_HERMITE_ORDER: usize = 10;

/// Physicists' Hermite polynomial H_n(x).
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Hermite order {n} exceeds {MAX_HERMITE_ORDER}"
        )));
    }
    let mut h0 = 1.0;
    if n == 0 {
        return Ok(h0);
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    Ok(h1)
}

/// H_0..H_4 at `z`.
pub(crate) fn hermite_table(z: f64) -> [f64; 5] {
    let mut h = [1.0, 2.0 * z, 0.0, 0.0, 0.0];
    for k in 1..4 {
        h[k + 1] = 2.0 * z * h[k] - 2.0 * k as f64 * h[k - 1];
    }
    h
}

/// Affine map from a price interval onto [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainMap {
    pub lo: f64,
    pub hi: f64,
}

impl DomainMap {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "domain [{lo}, {hi}] is empty or non-finite"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn to_unit(&self, price: f64) -> f64 {
        (price - self.lo) / self.span()
    }

    pub fn to_price(&self, u: f64) -> f64 {
        self.lo + u * self.span()
    }
}

/// Parameters of one side's price profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    /// a_1..a_4 (buy) or b_1..b_4 (sell).
    pub coeffs: [f64; BASIS_SIZE],
    /// Scaling factor applied as ξ^i to coefficient i.
    pub xi: f64,
    /// Center price p.
    pub center: f64,
    /// Width σ_p in price units.
    pub width: f64,
    /// Stretch θ of the Gaussian cutoff.
    pub theta: f64,
    /// Volume amplitude V.
    pub volume: f64,
}

impl MarginalSpec {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("xi", self.xi),
            ("width", self.width),
            ("theta", self.theta),
            ("volume", self.volume),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.center.is_finite() || self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "center and coefficients must be finite".into(),
            ));
        }
        if self.coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidArgument(
                "at least one coefficient must be nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Coefficients with the ξ^i factor folded in.
    pub fn effective_coeffs(&self) -> [f64; BASIS_SIZE] {
        let mut out = [0.0; BASIS_SIZE];
        let mut pow = 1.0;
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            pow *= self.xi;
            *o = c * pow;
        }
        out
    }

    /// Monomial coefficients (ascending powers of z) of Σ d_i H_i(z).
    fn z_polynomial(&self) -> [f64; 5] {
        let [d1, d2, d3, d4] = self.effective_coeffs();
        [
            -2.0 * d2 + 12.0 * d4,
            2.0 * d1 - 12.0 * d3,
            4.0 * d2 - 48.0 * d4,
            8.0 * d3,
            16.0 * d4,
        ]
    }
}

/// Unclamped profile and its first two derivatives with respect to `u`.
fn profile_derivatives(spec: &MarginalSpec, map: &DomainMap, u: f64) -> [f64; 3] {
    let poly = spec.z_polynomial();
    let z = (map.to_price(u) - spec.center) / spec.width;
    let dz = map.span() / spec.width;
    let p = roots::eval(&poly, z);
    let p1 = poly[1] + z * (2.0 * poly[2] + z * (3.0 * poly[3] + z * 4.0 * poly[4]));
    let p2 = 2.0 * poly[2] + z * (6.0 * poly[3] + z * 12.0 * poly[4]);
    let th = spec.theta;
    let e = (-z * z / (2.0 * th)).exp();
    let g0 = p * e;
    let g1 = (p1 - z * p / th) * e;
    let g2 = (p2 - 2.0 * z * p1 / th + (z * z / (th * th) - 1.0 / th) * p) * e;
    let v = spec.volume;
    [v * g0, v * dz * g1, v * dz * dz * g2]
}

fn profile(spec: &MarginalSpec, map: &DomainMap, u: f64) -> f64 {
    let z = (map.to_price(u) - spec.center) / spec.width;
    let h = hermite_table(z);
    let d = spec.effective_coeffs();
    let sum: f64 = (0..BASIS_SIZE).map(|i| d[i] * h[i + 1]).sum();
    spec.volume * sum * (-z * z / (2.0 * spec.theta)).exp()
}

/// Clamped, unnormalized profile at `u ∈ [0,1]`.
pub fn raw_density(spec: &MarginalSpec, u: f64, map: &DomainMap) -> f64 {
    profile(spec, map, u).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    Hermite { spec: MarginalSpec, map: DomainMap },
}

/// A normalized, nonnegative density on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDensity {
    shape: Shape,
    normalizer: f64,
    /// Maximal sub-intervals of [0,1] on which the density is positive.
    support: Vec<(f64, f64)>,
    /// Interior kinks as (position, f'(a⁺) − f'(a⁻)).
    slope_jumps: Vec<(f64, f64)>,
}

/// Clamps, locates the support and normalizes `spec` over [0,1].
pub fn normalize(
    spec: &MarginalSpec,
    map: &DomainMap,
    rule: &QuadratureRule,
) -> Result<MarginalDensity> {
    spec.validate()?;
    let poly = spec.z_polynomial();
    let z_of = |u: f64| (map.to_price(u) - spec.center) / spec.width;
    let (z0, z1) = (z_of(0.0), z_of(1.0));
    let cuts: Vec<f64> = roots::real_roots(&poly, z0.min(z1), z0.max(z1))
        .into_iter()
        .map(|z| map.to_unit(spec.center + z * spec.width))
        .collect();
    let pieces = crate::quadrature::segments_between(0.0, 1.0, &cuts);

    let mut support: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pieces {
        if roots::eval(&poly, z_of(0.5 * (a + b))) > 0.0 {
            match support.last_mut() {
                // Merge across double roots.
                Some(last) if last.1 == a => last.1 = b,
                _ => support.push((a, b)),
            }
        }
    }
    if support.is_empty() {
        return Err(Error::DegenerateDensity(
            "profile is nonpositive on the whole domain".into(),
        ));
    }

    let composite = rule.on_segments(&support);
    let mut normalizer = 0.0;
    for (&u, &w) in composite.nodes().iter().zip(composite.weights()) {
        normalizer += w * raw_density(spec, u, map);
    }
    if !(normalizer.is_finite() && normalizer > 0.0) {
        return Err(Error::DegenerateDensity(format!(
            "normalizer is {normalizer}"
        )));
    }

    let mut slope_jumps = Vec::new();
    for &(a, b) in &support {
        for edge in [a, b] {
            if edge > 0.0 && edge < 1.0 {
                let slope = profile_derivatives(spec, map, edge)[1];
                slope_jumps.push((edge, slope.abs() / normalizer));
            }
        }
    }

    Ok(MarginalDensity {
        shape: Shape::Hermite {
            spec: *spec,
            map: *map,
        },
        normalizer,
        support,
        slope_jumps,
    })
}

impl MarginalDensity {
    /// The uniform density on [0,1].
    pub fn uniform() -> Self {
        Self {
            shape: Shape::Uniform,
            normalizer: 1.0,
            support: vec![(0.0, 1.0)],
            slope_jumps: Vec::new(),
        }
    }

    pub fn spec(&self) -> Option<&MarginalSpec> {
        match &self.shape {
            Shape::Hermite { spec, .. } => Some(spec),
            Shape::Uniform => None,
        }
    }

    pub fn domain(&self) -> Option<&DomainMap> {
        match &self.shape {
            Shape::Hermite { map, .. } => Some(map),
            Shape::Uniform => None,
        }
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    /// Interior kinks and the jump in slope across each.
    pub fn slope_jumps(&self) -> &[(f64, f64)] {
        &self.slope_jumps
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.slope_jumps.iter().map(|&(a, _)| a).collect()
    }

    pub fn value(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Uniform => 1.0,
            Shape::Hermite { spec, map } => raw_density(spec, u, map) / self.normalizer,
        }
    }

    /// (f, f', f'') at `u`; all zero where the profile is clamped.
    pub fn derivatives(&self, u: f64) -> [f64; 3] {
        match &self.shape {
            Shape::Uniform => [1.0, 0.0, 0.0],
            Shape::Hermite { spec, map } => {
                let d = profile_derivatives(spec, map, u);
                if d[0] > 0.0 {
                    d.map(|v| v / self.normalizer)
                } else {
                    [0.0; 3]
                }
            }
        }
    }

    /// `rule` mapped onto every support segment.
    pub fn quadrature(&self, rule: &QuadratureRule) -> QuadratureRule {
        rule.on_segments(&self.support)
    }

    /// ∫₀^x s^j f(s) ds.
    pub fn partial_moment(&self, j: u32, x: f64, rule: &QuadratureRule) -> f64 {
        let segs: Vec<(f64, f64)> = self
            .support
            .iter()
            .filter(|s| s.0 < x)
            .map(|&(a, b)| (a, b.min(x)))
            .collect();
        let q = rule.on_segments(&segs);
        q.nodes()
            .iter()
            .zip(q.weights())
            .map(|(&s, &w)| w * s.powi(j as i32) * self.value(s))
            .sum()
    }
}
