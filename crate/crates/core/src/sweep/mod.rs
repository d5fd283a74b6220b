//! Parameter sweeps over channel gain or rate, and their CSV form.

mod config;
mod csv_out;

pub use config::{range_grid, Config};
pub use csv_out::{emit_csv, format_float, read_csv, render_csv, CsvRecord, CSV_HEADER};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::capacity::{CapacityConfig, CapacityEngine};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::optimizer::{
    optimize_bound, optimize_exact, relaxed_optimum, zeta_exact, EeResult, ExactSearch,
};
use crate::power::{db_to_linear, SystemParams};
use crate::regime::{classify, RegimeReport};

/// Which quantity varies along the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    /// Channel gain in dB; the rate is fixed.
    ChannelGainDb,
    /// Rate in bit/s/Hz; the channel gain is fixed.
    Rate,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::ChannelGainDb => "gc_db",
            SweepVariable::Rate => "rate",
        }
    }
}

/// One curve per objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepObjective {
    Exact,
    Bound,
    Relaxed,
    /// Exact objective with the antenna count pinned.
    FixedAntennas(u32),
}

impl fmt::Display for SweepObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepObjective::Exact => f.write_str("exact"),
            SweepObjective::Bound => f.write_str("bound"),
            SweepObjective::Relaxed => f.write_str("relaxed"),
            SweepObjective::FixedAntennas(m) => write!(f, "fixed-m-{m}"),
        }
    }
}

impl FromStr for SweepObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "exact" => Ok(SweepObjective::Exact),
            "bound" => Ok(SweepObjective::Bound),
            "relaxed" => Ok(SweepObjective::Relaxed),
            _ => s
                .as_str()
                .strip_prefix("fixed-m-")
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|&m| m >= 1)
                .map(SweepObjective::FixedAntennas)
                .ok_or_else(|| Error::Config(format!("unknown objective {s:?}"))),
        }
    }
}

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Strictly increasing; dB when sweeping the channel gain.
    pub grid: Vec<f64>,
    /// The quantity held fixed: the rate, or the channel gain in dB.
    pub fixed_value: f64,
    /// Hardware parameters; the channel gain is overridden per point.
    pub params: SystemParams,
    pub objectives: Vec<SweepObjective>,
    pub output_path: Option<PathBuf>,
    pub capacity: CapacityConfig,
    pub search: ExactSearch,
    pub threshold: f64,
    pub execution: Execution,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grid has non-finite values".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        if self.variable == SweepVariable::Rate && self.grid[0] <= 0.0 {
            return Err(Error::Config("rate grid must be > 0".into()));
        }
        if !self.fixed_value.is_finite()
            || (self.variable == SweepVariable::ChannelGainDb && self.fixed_value <= 0.0)
        {
            return Err(Error::Config(format!(
                "invalid fixed value {} for a {} sweep",
                self.fixed_value,
                self.variable.label()
            )));
        }
        if self.objectives.is_empty() {
            return Err(Error::Config("no objectives selected".into()));
        }
        for (i, o) in self.objectives.iter().enumerate() {
            if self.objectives[..i].contains(o) {
                return Err(Error::Config(format!("objective {o} listed twice")));
            }
        }
        self.capacity.validate()?;
        self.params.with_channel_gain(1.0).validate()
    }

    /// `(rate, params)` at grid index `i`.
    pub fn point(&self, i: usize) -> (f64, SystemParams) {
        let v = self.grid[i];
        match self.variable {
            SweepVariable::ChannelGainDb => (
                self.fixed_value,
                self.params.with_channel_gain(db_to_linear(v)),
            ),
            SweepVariable::Rate => (
                v,
                self.params
                    .with_channel_gain(db_to_linear(self.fixed_value)),
            ),
        }
    }
}

/// Everything computed at one grid point.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub sweep_value: f64,
    pub rate: f64,
    pub channel_gain: f64,
    pub regime: std::result::Result<RegimeReport, String>,
    /// In the order of [`SweepSpec::objectives`].
    pub outcomes: Vec<(SweepObjective, std::result::Result<EeResult, String>)>,
}

#[derive(Clone, Debug)]
pub struct TradeoffCurve {
    pub variable: SweepVariable,
    pub points: Vec<CurvePoint>,
}

impl TradeoffCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.points
            .iter()
            .flat_map(|p| &p.outcomes)
            .filter(|(_, r)| r.is_err())
            .count()
    }

    /// Successful results for one objective, in grid order.
    pub fn series(&self, objective: SweepObjective) -> Vec<(f64, &EeResult)> {
        self.points
            .iter()
            .filter_map(|p| {
                p.outcomes
                    .iter()
                    .find(|(o, _)| *o == objective)
                    .and_then(|(_, r)| r.as_ref().ok())
                    .map(|r| (p.sweep_value, r))
            })
            .collect()
    }
}

/// Solves one objective at a single operating point.
pub fn solve(
    objective: SweepObjective,
    rate: f64,
    params: &SystemParams,
    engine: &CapacityEngine,
    search: &ExactSearch,
) -> Result<EeResult> {
    let theta = params.normalize()?;
    let normalized = match objective {
        SweepObjective::Exact => optimize_exact(rate, &theta, engine, search)?,
        SweepObjective::Bound => optimize_bound(rate, &theta, search.tie_break)?,
        SweepObjective::Relaxed => relaxed_optimum(rate, &theta)?,
        SweepObjective::FixedAntennas(m) => zeta_exact(m, rate, &theta, engine)?,
    };
    Ok(normalized.unnormalize(rate, params))
}

/// Evaluates every objective at every grid point.
///
/// Numerical failures are recorded per row; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<TradeoffCurve> {
    spec.validate()?;
    let engine = CapacityEngine::new(spec.capacity)?;
    let points = exec::map_range(spec.execution, spec.grid.len(), |i| {
        let (rate, params) = spec.point(i);
        let outcomes = spec
            .objectives
            .iter()
            .map(|&o| {
                let r = solve(o, rate, &params, &engine, &spec.search).map_err(|e| e.to_string());
                (o, r)
            })
            .collect();
        CurvePoint {
            sweep_value: spec.grid[i],
            rate,
            channel_gain: params.channel_gain,
            regime: classify(rate, &params, spec.threshold).map_err(|e| e.to_string()),
            outcomes,
        }
    });
    Ok(TradeoffCurve {
        variable: spec.variable,
        points,
    })
}

/// The EE-optimal design compared against a fixed antenna count.
#[derive(Clone, Debug)]
pub struct FixedComparison {
    pub optimum: EeResult,
    pub fixed: EeResult,
    /// `eta_optimum / eta_fixed`.
    pub ratio: f64,
}

pub fn compare_fixed_m(
    rate: f64,
    params: &SystemParams,
    fixed_antennas: u32,
    engine: &CapacityEngine,
    search: &ExactSearch,
) -> Result<FixedComparison> {
    let optimum = solve(SweepObjective::Exact, rate, params, engine, search)?;
    let fixed = solve(
        SweepObjective::FixedAntennas(fixed_antennas),
        rate,
        params,
        engine,
        search,
    )?;
    Ok(FixedComparison {
        ratio: optimum.eta / fixed.eta,
        optimum,
        fixed,
    })
}
