//! Sweeps of the key rate over Q, threshold search, and published reference
//! thresholds.

use rayon::prelude::*;

use crate::channel::{check_dim, MubConvention, NoiseModel, Scenario};
use crate::error::{Error, Result};
use crate::keyrate::{check_config, key_rate, BoundReading, KeyRateBreakdown};

/// Bracket width at which bisection stops.
pub const BRACKET_TOL: f64 = 1e-7;
/// Largest |r(q*)| accepted, in bits.
pub const RATE_TOL: f64 = 1e-6;
/// Points in the pre-scan over [0, 1/d].
pub const PRESCAN_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Config {
    pub d: usize,
    pub n_mubs: usize,
    pub scenario: Scenario,
    pub convention: MubConvention,
    pub reading: BoundReading,
}

impl Config {
    pub fn new(d: usize, n_mubs: usize, scenario: Scenario) -> Result<Self> {
        check_config(d, n_mubs)?;
        Ok(Self {
            d,
            n_mubs,
            scenario,
            convention: MubConvention::default(),
            reading: BoundReading::default(),
        })
    }

    pub fn with_convention(mut self, convention: MubConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_reading(mut self, reading: BoundReading) -> Self {
        self.reading = reading;
        self
    }

    pub fn q_max(&self) -> f64 {
        1.0 / self.d as f64
    }

    pub fn evaluate(&self, q: f64) -> Result<KeyRateBreakdown> {
        let model = NoiseModel::new(self.d, q, self.scenario, self.convention)?;
        key_rate(&model, self.n_mubs, self.reading)
    }

    pub fn rate(&self, q: f64) -> Result<f64> {
        Ok(self.evaluate(q)?.r)
    }

    /// Every supported (d, n_mubs, scenario) with the default convention and reading.
    pub fn all() -> Vec<Config> {
        let mut out = Vec::new();
        for d in [3, 4] {
            for &n in crate::keyrate::supported_mubs(d) {
                for s in Scenario::ALL {
                    out.push(Config::new(d, n, s).expect("supported"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub n_mubs: usize,
    pub scenario: Scenario,
    pub convention: MubConvention,
    pub q: f64,
    pub r: f64,
    pub t: [f64; 4],
    pub lambda1: f64,
    pub warnings: usize,
}

impl SweepRow {
    fn from_breakdown(config: &Config, q: f64, b: &KeyRateBreakdown) -> Self {
        Self {
            d: config.d,
            n_mubs: config.n_mubs,
            scenario: config.scenario,
            convention: config.convention,
            q,
            r: b.r,
            t: b.t.as_array(),
            lambda1: b.lambda1,
            warnings: b.warnings.len(),
        }
    }
}

/// Inclusive grid start, start+step, …, stop (stop kept if it lands within step·1e−6).
pub fn q_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidGrid(format!("start={start} stop={stop} step={step}")));
    }
    let n = ((stop - start) / step + 1e-6).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

pub fn sweep(config: &Config, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid is not strictly ascending".into()));
    }
    check_dim(config.d)?;
    if let Some(&q) = grid.iter().find(|&&q| !(q >= 0.0 && q <= config.q_max() + 1e-12)) {
        return Err(Error::InvalidGrid(format!("Q={q} outside [0, 1/{}]", config.d)));
    }
    grid.par_iter()
        .map(|&q| config.evaluate(q).map(|b| SweepRow::from_breakdown(config, q, &b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub config: Config,
    pub q_star: f64,
    pub bracket_width: f64,
    pub iterations: usize,
    pub r_at_q_star: f64,
    /// The rate never reached zero on [0, 1/d].
    pub open: bool,
    /// The rate is positive again somewhere past the first crossing.
    pub reentrant: bool,
}

/// First zero crossing of r(Q) from positive values.
pub fn find_threshold(config: &Config) -> Result<ThresholdResult> {
    let r0 = config.rate(0.0)?;
    if r0 <= 0.0 {
        return Err(Error::NoPositiveRate(r0));
    }
    let q_max = config.q_max();
    let grid: Vec<f64> = (0..=PRESCAN_POINTS)
        .map(|k| q_max * k as f64 / PRESCAN_POINTS as f64)
        .collect();
    let rates = grid
        .par_iter()
        .map(|&q| config.rate(q))
        .collect::<Result<Vec<f64>>>()?;

    let Some(first) = rates.iter().position(|&r| r <= 0.0) else {
        return Ok(ThresholdResult {
            config: *config,
            q_star: q_max,
            bracket_width: 0.0,
            iterations: 0,
            r_at_q_star: rates[PRESCAN_POINTS],
            open: true,
            reentrant: false,
        });
    };
    let reentrant = rates[first..].iter().any(|&r| r > 0.0);

    let (mut lo, mut hi) = (grid[first - 1], grid[first]);
    let mut r_lo = rates[first - 1];
    let mut iterations = 0;
    while (hi - lo > BRACKET_TOL || r_lo.abs() > RATE_TOL) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r_mid = config.rate(mid)?;
        if r_mid > 0.0 {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdResult {
        config: *config,
        q_star: lo,
        bracket_width: hi - lo,
        iterations,
        r_at_q_star: r_lo,
        open: false,
        reentrant,
    })
}

/// Which basis set a reference entry describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// The first n bases of the family (computational included).
    Mubs(usize),
    /// Computational basis plus basis B only (ququarts).
    CompPlusB,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceThreshold {
    pub d: usize,
    pub variant: Variant,
    pub scenario: Scenario,
    pub q: f64,
    /// Whether this crate evaluates the configuration (otherwise reference only).
    pub evaluated: bool,
}

/// Published noise thresholds, as fractions.
pub fn reference_thresholds() -> Vec<ReferenceThreshold> {
    use Scenario::{Dependent as Dep, Independent as Ind};
    let rows: [(usize, Variant, f64, f64, bool); 8] = [
        (3, Variant::Mubs(2), 0.04247, 0.0305, false),
        (3, Variant::Mubs(3), 0.0689, 0.0395, true),
        (3, Variant::Mubs(4), 0.0932, 0.0443, true),
        (4, Variant::Mubs(2), 0.03, 0.0162, true),
        (4, Variant::Mubs(3), 0.0477, 0.0224, true),
        (4, Variant::Mubs(4), 0.0579, 0.0258, true),
        (4, Variant::Mubs(5), 0.0648, 0.0265, true),
        (4, Variant::CompPlusB, 0.1205, 0.0322, false),
    ];
    rows.iter()
        .flat_map(|&(d, variant, dep, ind, evaluated)| {
            [(Dep, dep), (Ind, ind)].map(|(scenario, q)| ReferenceThreshold {
                d,
                variant,
                scenario,
                q,
                evaluated,
            })
        })
        .collect()
}

pub fn reference_threshold(d: usize, n_mubs: usize, scenario: Scenario) -> Option<f64> {
    reference_thresholds()
        .into_iter()
        .find(|r| r.d == d && r.variant == Variant::Mubs(n_mubs) && r.scenario == scenario)
        .map(|r| r.q)
}
