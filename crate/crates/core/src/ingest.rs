//! Price-level records: CSV input/output, smoothing and binning.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::EmpiricalHistogram;

pub const CSV_HEADER: [&str; 3] = ["price", "volume", "side"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn parse(token: &str) -> Option<Side> {
        match token.trim().to_ascii_lowercase().as_str() {
            "buy" | "b" => Some(Side::Buy),
            "sell" | "s" => Some(Side::Sell),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceLevelRecord {
    pub price: f64,
    pub volume: f64,
    pub side: Side,
}

impl PriceLevelRecord {
    pub fn new(price: f64, volume: f64, side: Side) -> Result<Self> {
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "price must be positive, got {price}"
            )));
        }
        if !(volume.is_finite() && volume >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "volume must be nonnegative, got {volume}"
            )));
        }
        Ok(Self {
            price,
            volume,
            side,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads `price,volume,side` records in file order.
pub fn load_csv(path: &Path) -> Result<Vec<PriceLevelRecord>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        let field = |k: usize| row.get(k).unwrap_or("");
        let price: f64 = field(0)
            .parse()
            .map_err(|_| parse_err(format!("bad price `{}`", field(0))))?;
        let volume: f64 = field(1)
            .parse()
            .map_err(|_| parse_err(format!("bad volume `{}`", field(1))))?;
        let side = Side::parse(field(2))
            .ok_or_else(|| parse_err(format!("unknown side `{}`", field(2))))?;
        let rec = PriceLevelRecord::new(price, volume, side).map_err(|e| match e {
            Error::InvalidArgument(m) => parse_err(m),
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Records as CSV text with the `price,volume,side` header. Floats use the
/// shortest representation that reads back to the same value.
pub fn to_csv_string(records: &[PriceLevelRecord]) -> String {
    let mut buf = String::with_capacity(32 * (records.len() + 1));
    buf.push_str(&CSV_HEADER.join(","));
    buf.push('\n');
    for r in records {
        buf.push_str(&format!("{},{},{}\n", r.price, r.volume, r.side));
    }
    buf
}

pub fn write_csv(path: &Path, records: &[PriceLevelRecord]) -> Result<()> {
    let mut file = File::create(path).map_err(io_err(path))?;
    file.write_all(to_csv_string(records).as_bytes())
        .map_err(io_err(path))
}

/// Trailing moving average over a window of `order` values, shorter at the
/// left edge. Total mass is not preserved in general.
pub fn ma_smooth(masses: &[f64], order: usize) -> Result<Vec<f64>> {
    if masses.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot smooth an empty sequence".into(),
        ));
    }
    if order == 0 {
        return Err(Error::InvalidArgument(
            "smoothing order must be positive".into(),
        ));
    }
    Ok((0..masses.len())
        .map(|k| {
            let window = &masses[(k + 1).saturating_sub(order)..=k];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}

/// Equal-width histogram of one side's volume over that side's price range.
pub fn bin_levels(
    records: &[PriceLevelRecord],
    n_bins: usize,
    side: Side,
) -> Result<EmpiricalHistogram> {
    if n_bins < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 bins, got {n_bins}"
        )));
    }
    let selected: Vec<&PriceLevelRecord> = records.iter().filter(|r| r.side == side).collect();
    if selected.is_empty() {
        return Err(Error::EmptySide(side));
    }
    let mut lo = selected
        .iter()
        .map(|r| r.price)
        .fold(f64::INFINITY, f64::min);
    let mut hi = selected
        .iter()
        .map(|r| r.price)
        .fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        // A single price level: center it in a narrow window.
        let half = 0.5e-3 * lo.abs().max(1.0);
        lo -= half;
        hi += half;
    }
    let width = (hi - lo) / n_bins as f64;
    let mut masses = vec![0.0; n_bins];
    for r in selected {
        let k = (((r.price - lo) / width).floor() as usize).min(n_bins - 1);
        masses[k] += r.volume;
    }
    let centers = (0..n_bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    EmpiricalHistogram::new(centers, masses)
}
