//! Synthetic two-sided price-level data from known marginal specs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{PriceLevelRecord, Side};
use crate::marginals::{raw_density, DomainMap, MarginalSpec};

/// Stand-in effective coefficients ξ^i·c_i for the buy side. Together with
/// the sell side they give the unimodal profiles −16z⁴ ± 1.2z³ + 12.
pub const BUY_STAND_IN: [f64; 4] = [0.9, -12.0, 0.15, -1.0];
pub const SELL_STAND_IN: [f64; 4] = [-0.9, -12.0, -0.15, -1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub buy: MarginalSpec,
    pub sell: MarginalSpec,
}

fn side_spec(
    effective: [f64; 4],
    xi: f64,
    center: f64,
    width: f64,
    theta: f64,
    volume: f64,
) -> MarginalSpec {
    let mut coeffs = effective;
    let mut pow = 1.0;
    for c in &mut coeffs {
        pow *= xi;
        *c /= pow;
    }
    MarginalSpec {
        coeffs,
        xi,
        center,
        width,
        theta,
        volume,
    }
}

impl Preset {
    /// IBM row: V = 3.5 / 6.0, σ = 0.0471, ξ = 3.558, p = 13.374 / 13.561, θ = 1.
    pub fn ibm() -> Self {
        Self {
            name: "ibm",
            buy: side_spec(BUY_STAND_IN, 3.558, 13.374, 0.0471, 1.0, 3.5),
            sell: side_spec(SELL_STAND_IN, 3.558, 13.561, 0.0471, 1.0, 6.0),
        }
    }

    /// SPDR row: V = 14.0 / 16.0, σ = 10.561, ξ = 1.698, p = 173.164 / 174.116, θ = 2.
    pub fn spdr() -> Self {
        Self {
            name: "spdr",
            buy: side_spec(BUY_STAND_IN, 1.698, 173.164, 10.561, 2.0, 14.0),
            sell: side_spec(SELL_STAND_IN, 1.698, 174.116, 10.561, 2.0, 16.0),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ibm" => Ok(Self::ibm()),
            "spdr" => Ok(Self::spdr()),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset {other:?}, expected ibm or spdr"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub buy: MarginalSpec,
    pub sell: MarginalSpec,
    /// Price levels per side.
    pub levels: usize,
    pub seed: u64,
    /// Standard deviation of the multiplicative noise factor; 0 disables it.
    pub noise: f64,
    /// Half-width of the price range in units of σ√θ beyond the outer centers.
    pub span_sigmas: f64,
}

impl SynthConfig {
    pub fn from_preset(preset: &Preset) -> Self {
        Self {
            buy: preset.buy,
            sell: preset.sell,
            levels: 64,
            seed: 0,
            noise: 0.0,
            span_sigmas: 3.0,
        }
    }

    /// Common price range of both sides.
    pub fn price_range(&self) -> (f64, f64) {
        let reach = |s: &MarginalSpec| self.span_sigmas * s.width * s.theta.sqrt();
        let lo = (self.buy.center - reach(&self.buy)).min(self.sell.center - reach(&self.sell));
        let hi = (self.buy.center + reach(&self.buy)).max(self.sell.center + reach(&self.sell));
        (lo, hi)
    }
}

/// Volume V·max(0, profile) at `levels` equally spaced prices spanning the
/// common range, for each side. Zero-volume levels are kept so both sides
/// share one price grid.
pub fn synthesize(config: &SynthConfig) -> Result<Vec<PriceLevelRecord>> {
    for (side, spec) in [(Side::Buy, &config.buy), (Side::Sell, &config.sell)] {
        if spec.volume == 0.0 {
            return Err(Error::EmptySide(side));
        }
    }
    config.buy.validate()?;
    config.sell.validate()?;
    if config.levels < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 price levels, got {}",
            config.levels
        )));
    }
    if !(config.noise.is_finite() && config.noise >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise must be nonnegative, got {}",
            config.noise
        )));
    }
    if !(config.span_sigmas.is_finite() && config.span_sigmas > 0.0) {
        return Err(Error::InvalidArgument("span must be positive".into()));
    }
    let (lo, hi) = config.price_range();
    let map = DomainMap::new(lo, hi)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.levels;
    let mut out = Vec::with_capacity(2 * n);
    for (side, spec) in [(Side::Buy, &config.buy), (Side::Sell, &config.sell)] {
        let mut total = 0.0;
        for k in 0..n {
            let u = k as f64 / (n - 1) as f64;
            let mut volume = raw_density(spec, u, &map);
            if config.noise > 0.0 {
                let eps: f64 = normal.sample(&mut rng);
                volume *= (1.0 + config.noise * eps).max(0.0);
            }
            total += volume;
            out.push(PriceLevelRecord::new(map.to_price(u), volume, side)?);
        }
        if total <= 0.0 {
            return Err(Error::EmptySide(side));
        }
    }
    Ok(out)
}
