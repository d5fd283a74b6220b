//! Flat key-value run configuration (TOML syntax).
//!
//! Every key is optional; hardware keys default to the reference parameter
//! set. Units are SI; only the channel gain may also be given in dB, which is
//! converted at parse time.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::capacity::{CapacityConfig, Estimator};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optimizer::{ExactSearch, TieBreak};
use crate::power::{db_to_linear, SystemParams};
use crate::regime::DEFAULT_THRESHOLD;

use super::{SweepObjective, SweepSpec, SweepVariable};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    bandwidth_hz: Option<f64>,
    noise_psd_w_per_hz: Option<f64>,
    channel_gain_db: Option<f64>,
    channel_gain_linear: Option<f64>,
    pa_efficiency: Option<f64>,
    pa_alpha: Option<f64>,
    p_bs_w: Option<f64>,
    p_ut_w: Option<f64>,
    p_osc_w: Option<f64>,
    p_static_w: Option<f64>,
    p_dec_w_per_bps: Option<f64>,
    c0_j: Option<f64>,

    rate: Option<f64>,
    fixed_m: Option<u32>,

    sweep_variable: Option<String>,
    grid: Option<Vec<f64>>,
    grid_start: Option<f64>,
    grid_stop: Option<f64>,
    grid_step: Option<f64>,
    objectives: Option<StringList>,
    output: Option<PathBuf>,

    estimator: Option<String>,
    quadrature_nodes: Option<usize>,
    mc_samples: Option<usize>,
    seed: Option<u64>,
    rate_tolerance: Option<f64>,
    parallel: Option<bool>,

    search_cap: Option<u32>,
    search_cap_multiplier: Option<u32>,
    search_cap_offset: Option<u32>,
    stop_rule_width: Option<u32>,
    tie_break: Option<String>,

    dominance_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StringList {
    One(String),
    Many(Vec<String>),
}

impl StringList {
    fn items(&self) -> Vec<String> {
        match self {
            StringList::One(s) => s.split(',').map(|p| p.trim().to_owned()).collect(),
            StringList::Many(v) => v.iter().map(|p| p.trim().to_owned()).collect(),
        }
    }
}

/// A parsed configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Hardware parameters; `channel_gain` is meaningful only when
    /// [`Config::channel_gain`] is set.
    pub params: SystemParams,
    pub channel_gain: Option<f64>,
    pub rate: Option<f64>,
    pub fixed_m: u32,
    pub sweep_variable: Option<SweepVariable>,
    pub grid: Option<Vec<f64>>,
    pub objectives: Vec<SweepObjective>,
    pub output: Option<PathBuf>,
    pub capacity: CapacityConfig,
    pub search: ExactSearch,
    pub threshold: f64,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn exclusive<T>(a: Option<T>, b: Option<T>, names: &str) -> Result<Option<(T, bool)>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(config_err(format!("set only one of {names}"))),
        (Some(x), None) => Ok(Some((x, true))),
        (None, Some(x)) => Ok(Some((x, false))),
        (None, None) => Ok(None),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        text.parse().map_err(|e| match e {
            Error::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Hardware parameters at the configured channel gain.
    pub fn point_params(&self) -> Result<SystemParams> {
        let gain = self
            .channel_gain
            .ok_or_else(|| config_err("channel_gain_db or channel_gain_linear is required"))?;
        let params = self.params.with_channel_gain(gain);
        params.validate()?;
        Ok(params)
    }

    pub fn require_rate(&self) -> Result<f64> {
        let rate = self.rate.ok_or_else(|| config_err("rate is required"))?;
        if rate.is_finite() && rate > 0.0 {
            Ok(rate)
        } else {
            Err(config_err(format!("rate must be > 0, got {rate}")))
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let variable = self
            .sweep_variable
            .ok_or_else(|| config_err("sweep_variable is required for a sweep"))?;
        let grid = self
            .grid
            .clone()
            .ok_or_else(|| config_err("grid or grid_start/grid_stop/grid_step is required"))?;
        let fixed_value = match variable {
            SweepVariable::ChannelGainDb => self.require_rate()?,
            SweepVariable::Rate => {
                let gain = self.channel_gain.ok_or_else(|| {
                    config_err("channel_gain_db is required when sweeping the rate")
                })?;
                10.0 * gain.log10()
            }
        };
        let spec = SweepSpec {
            variable,
            grid,
            fixed_value,
            params: self.params,
            objectives: self.objectives.clone(),
            output_path: self.output.clone(),
            capacity: self.capacity,
            search: self.search,
            threshold: self.threshold,
            execution: self.capacity.execution,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl std::str::FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let reference = SystemParams::reference_set(1.0);

        let channel_gain = exclusive(
            raw.channel_gain_db,
            raw.channel_gain_linear,
            "channel_gain_db / channel_gain_linear",
        )?
        .map(|(v, is_db)| if is_db { db_to_linear(v) } else { v });
        let pa_factor =
            match exclusive(raw.pa_efficiency, raw.pa_alpha, "pa_efficiency / pa_alpha")? {
                Some((eff, true)) => {
                    if !(eff > 0.0 && eff <= 1.0) {
                        return Err(config_err(format!(
                            "pa_efficiency must be in (0, 1], got {eff}"
                        )));
                    }
                    1.0 / eff
                }
                Some((alpha, false)) => alpha,
                None => reference.pa_factor,
            };
        let params = SystemParams {
            bandwidth: raw.bandwidth_hz.unwrap_or(reference.bandwidth),
            noise_psd: raw.noise_psd_w_per_hz.unwrap_or(reference.noise_psd),
            channel_gain: channel_gain.unwrap_or(reference.channel_gain),
            pa_factor,
            p_bs: raw.p_bs_w.unwrap_or(reference.p_bs),
            p_ut: raw.p_ut_w.unwrap_or(reference.p_ut),
            p_osc: raw.p_osc_w.unwrap_or(reference.p_osc),
            p_static: raw.p_static_w.unwrap_or(reference.p_static),
            p_dec: raw.p_dec_w_per_bps.unwrap_or(reference.p_dec),
            op_energy: raw.c0_j.unwrap_or(reference.op_energy),
        };
        params.validate()?;

        let sweep_variable = raw
            .sweep_variable
            .as_deref()
            .map(|s| match s.to_ascii_lowercase().as_str() {
                "gc" | "gc_db" | "channel_gain" => Ok(SweepVariable::ChannelGainDb),
                "r" | "rate" => Ok(SweepVariable::Rate),
                other => Err(config_err(format!("unknown sweep_variable {other:?}"))),
            })
            .transpose()?;

        let range = (raw.grid_start, raw.grid_stop, raw.grid_step);
        let grid = match (raw.grid, range) {
            (Some(_), (Some(_), _, _) | (_, Some(_), _) | (_, _, Some(_))) => {
                return Err(config_err(
                    "use either grid or grid_start/grid_stop/grid_step",
                ))
            }
            (Some(g), _) => Some(g),
            (None, (Some(start), Some(stop), Some(step))) => Some(range_grid(start, stop, step)?),
            (None, (None, None, None)) => None,
            (None, _) => {
                return Err(config_err(
                    "grid_start, grid_stop and grid_step go together",
                ))
            }
        };

        let objectives = match raw.objectives {
            Some(list) => list
                .items()
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<SweepObjective>>>()?,
            None => vec![SweepObjective::Exact, SweepObjective::Relaxed],
        };

        let seed = raw.seed.unwrap_or(0);
        let estimator = match raw.estimator.as_deref().unwrap_or("quadrature") {
            "quadrature" => Estimator::Quadrature {
                nodes: raw
                    .quadrature_nodes
                    .unwrap_or(CapacityConfig::DEFAULT_NODES),
            },
            "monte-carlo" | "monte_carlo" => Estimator::MonteCarlo {
                samples: raw.mc_samples.unwrap_or(CapacityConfig::DEFAULT_SAMPLES),
                seed,
            },
            other => return Err(config_err(format!("unknown estimator {other:?}"))),
        };
        let capacity = CapacityConfig {
            estimator,
            rate_tolerance: raw
                .rate_tolerance
                .unwrap_or(CapacityConfig::DEFAULT_TOLERANCE),
            execution: if raw.parallel.unwrap_or(true) {
                Execution::Parallel
            } else {
                Execution::Sequential
            },
        };
        capacity.validate()?;

        let defaults = ExactSearch::default();
        let tie_break = match raw.tie_break.as_deref().unwrap_or("smaller") {
            "smaller" => TieBreak::Smaller,
            "larger" => TieBreak::Larger,
            other => return Err(config_err(format!("unknown tie_break {other:?}"))),
        };
        let search = ExactSearch {
            cap: raw.search_cap,
            cap_multiplier: raw.search_cap_multiplier.unwrap_or(defaults.cap_multiplier),
            cap_offset: raw.search_cap_offset.unwrap_or(defaults.cap_offset),
            stop_width: raw.stop_rule_width.unwrap_or(defaults.stop_width),
            tie_break,
        };
        if search.stop_width == 0 {
            return Err(config_err("stop_rule_width must be >= 1"));
        }

        let threshold = raw.dominance_threshold.unwrap_or(DEFAULT_THRESHOLD);
        if !(threshold.is_finite() && threshold >= 1.0) {
            return Err(config_err(format!(
                "dominance_threshold must be >= 1, got {threshold}"
            )));
        }
        let fixed_m = raw.fixed_m.unwrap_or(1);
        if fixed_m == 0 {
            return Err(config_err("fixed_m must be >= 1"));
        }

        Ok(Config {
            params,
            channel_gain,
            rate: raw.rate,
            fixed_m,
            sweep_variable,
            grid,
            objectives,
            output: raw.output,
            capacity,
            search,
            threshold,
        })
    }
}

/// `start, start + step, ..., stop`; `stop` must lie on the lattice.
pub fn range_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(config_err(format!(
            "invalid grid range {start}..{stop} step {step}"
        )));
    }
    let span = (stop - start) / step;
    let steps = span.round();
    if (span - steps).abs() > 1e-9 * steps.max(1.0) || steps > 1e7 {
        return Err(config_err(format!(
            "grid_stop {stop} is not start {start} plus a whole number of steps {step}"
        )));
    }
    Ok((0..=steps as usize)
        .map(|i| start + step * i as f64)
        .collect())
}
