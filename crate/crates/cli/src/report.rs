use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "natural-copula/1";

/// `x` rounded to 12 significant digits.
pub fn r12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn r12_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| r12(x)).collect()
}

/// Plain decimal text of `r12(x)`.
pub fn fmt12(x: f64) -> String {
    format!("{}", r12(x))
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copula: Option<CopulaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hydro: Option<HydroSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrSection>,
}

#[derive(Debug, Serialize)]
pub struct Params {
    pub input: Option<String>,
    pub uniform: bool,
    pub bins: u64,
    pub ma_order: u64,
    pub basis: Vec<String>,
    pub grid_n: u64,
    pub quad_n: u64,
    pub moment_constraints: u64,
    pub potential: &'static str,
    pub contour_convention: &'static str,
    pub test_potential: Option<&'static str>,
    pub xi: f64,
    pub grid_res: u64,
}

#[derive(Debug, Serialize)]
pub struct SideFit {
    pub coeffs: Vec<f64>,
    pub xi: f64,
    pub center: f64,
    pub width: f64,
    pub theta: f64,
    pub volume: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Support of the normalized density in unit coordinates.
    pub support: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct FitSection {
    /// Price range mapped onto [0,1].
    pub domain: [f64; 2],
    pub buy: SideFit,
    pub sell: SideFit,
}

#[derive(Debug, Serialize)]
pub struct CopulaSection {
    #[serde(rename = "C")]
    pub constant: f64,
    pub basis: Vec<String>,
    pub coefficients: Vec<f64>,
    pub cost: f64,
    pub mass: f64,
    pub constraint_residual: f64,
    pub marginal_deviation: f64,
    pub ot_lower_bound: f64,
    pub ot_gap: f64,
    pub min_density: f64,
    pub cuts: usize,
}

#[derive(Debug, Serialize)]
pub struct HydroSection {
    pub potential: &'static str,
    pub contour_convention: &'static str,
    pub gamma: f64,
    pub phi: f64,
    pub green_residual: f64,
    pub stream_function: bool,
}

#[derive(Debug, Serialize)]
pub struct CorrSection {
    pub ct: f64,
    pub variance: f64,
    pub variance_residual: Option<f64>,
    pub normalization_active: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// `key,value` lines with dotted keys, sorted within each object.
pub fn to_csv(report: &Report) -> String {
    let value = serde_json::to_value(report).expect("report serializes");
    let mut out = String::from("key,value\n");
    flatten("", &value, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push_str(&format!("{prefix},\n")),
        Value::String(s) => out.push_str(&format!("{prefix},{s}\n")),
        other => out.push_str(&format!("{prefix},{other}\n")),
    }
}
