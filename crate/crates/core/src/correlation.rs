//! Correlation measure C_T = ∫∫ f_X f_Y (τ² − 1).

use serde::Serialize;

use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quadrature::{integrate_2d_tensor, QuadratureRule};

/// Normalization residual above which the variance identity is not checked.
const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub ct: f64,
    /// E[τ²] − E[τ]² under f_X f_Y.
    pub variance: f64,
    pub mean_tau: f64,
    /// |C_T − variance|, or `None` when the model is not normalized.
    pub variance_residual: Option<f64>,
    pub normalization_active: bool,
}

pub fn correlation_ct(model: &CopulaModel, rule: &QuadratureRule) -> Result<Correlation> {
    let qx = model.f_x.quadrature(rule);
    let qy = model.f_y.quadrature(rule);
    let weight = |x: f64, y: f64| model.f_x.value(x) * model.f_y.value(y);
    let exec = Exec::default();
    let ct = integrate_2d_tensor(
        |x, y| {
            let t = model.tau(x, y);
            weight(x, y) * (t * t - 1.0)
        },
        &qx,
        &qy,
        exec,
    )?;
    let base = integrate_2d_tensor(weight, &qx, &qy, exec)?;
    if base <= 0.0 {
        return Err(Error::DegenerateDensity(
            "sampled density has no mass".into(),
        ));
    }
    let mean_tau =
        integrate_2d_tensor(|x, y| weight(x, y) * model.tau(x, y), &qx, &qy, exec)? / base;
    let second = integrate_2d_tensor(
        |x, y| {
            let t = model.tau(x, y);
            weight(x, y) * t * t
        },
        &qx,
        &qy,
        exec,
    )? / base;
    let variance = second - mean_tau * mean_tau;
    let normalization_active = (mean_tau - 1.0).abs() <= NORMALIZATION_TOL;
    Ok(Correlation {
        ct,
        variance,
        mean_tau,
        variance_residual: normalization_active.then(|| (ct - variance).abs()),
        normalization_active,
    })
}
