//! Gauss–Legendre quadrature on the unit interval and unit square.
//!
//! A base rule lives on [0,1]. [`QuadratureRule::on_segments`] maps it onto a
//! union of sub-intervals so integrands with kinks (clamped densities) can be
//! integrated piecewise at full order.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;

pub const MAX_RULE_SIZE: usize = 256;
pub const DEFAULT_RULE_SIZE: usize = 32;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Assembles a rule from raw nodes and weights. Nodes must be strictly
    /// increasing and weights positive.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidArgument(
                "quadrature nodes must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err(Error::InvalidArgument(
                "quadrature weights must be positive".into(),
            ));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maps this [0,1] rule onto each segment `(a, b)` in turn. Segments must
    /// be ordered and non-overlapping; empty segments are skipped.
    pub fn on_segments(&self, segments: &[(f64, f64)]) -> QuadratureRule {
        let mut nodes = Vec::with_capacity(self.len() * segments.len());
        let mut weights = Vec::with_capacity(self.len() * segments.len());
        for &(a, b) in segments {
            let len = b - a;
            if len.is_nan() || len <= 0.0 {
                continue;
            }
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                nodes.push(a + len * t);
                weights.push(len * w);
            }
        }
        QuadratureRule { nodes, weights }
    }

    /// Splits [0,1] at the given interior points and maps the rule onto
    /// every piece.
    pub fn split_at(&self, breakpoints: &[f64]) -> QuadratureRule {
        self.on_segments(&segments_between(0.0, 1.0, breakpoints))
    }
}

/// Consecutive segments of `[lo, hi]` cut at the interior points of `cuts`.
pub fn segments_between(lo: f64, hi: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut points: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut out = Vec::with_capacity(points.len() + 1);
    let mut start = lo;
    for p in points {
        out.push((start, p));
        start = p;
    }
    out.push((start, hi));
    out
}

/// Gauss–Legendre rule with `n` points mapped affinely onto [0,1].
pub fn gauss_legendre_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_RULE_SIZE {
        return Err(Error::InvalidArgument(format!(
            "rule size {n} outside 1..={MAX_RULE_SIZE}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Roots on [-1,1], descending in i.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() < NEWTON_TOL {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let w = 1.0 / ((1.0 - z * z) * dp * dp);
        if 2 * i + 1 == n {
            nodes[i] = 0.5;
        } else {
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
        }
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    QuadratureRule::from_parts(nodes, weights)
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn check_finite(v: f64, x: f64, y: Option<f64>) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalDomain(match y {
            Some(y) => format!("integrand is {v} at ({x}, {y})"),
            None => format!("integrand is {v} at {x}"),
        }))
    }
}

/// Σ w_k f(x_k).
pub fn integrate_1d<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * check_finite(f(x), x, None)?;
    }
    Ok(acc)
}

/// Tensor-product integral over [0,1]² with the same rule on both axes.
pub fn integrate_2d<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    integrate_2d_tensor(f, rule, rule, Exec::default())
}

/// Tensor-product integral with independent rules per axis. Rows are
/// evaluated under `exec` and summed in index order.
pub fn integrate_2d_tensor<F>(
    f: F,
    x_rule: &QuadratureRule,
    y_rule: &QuadratureRule,
    exec: Exec,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let rows = exec.map(x_rule.len(), |k| {
        let x = x_rule.nodes[k];
        let mut acc = 0.0;
        for (&y, &w) in y_rule.nodes.iter().zip(&y_rule.weights) {
            acc += w * check_finite(f(x, y), x, Some(y))?;
        }
        Ok(acc)
    });
    let mut total = 0.0;
    for (row, &w) in rows.into_iter().zip(&x_rule.weights) {
        total += w * row?;
    }
    Ok(total)
}
