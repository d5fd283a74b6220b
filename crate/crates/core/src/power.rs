//! Transceiver power consumption and the normalized parameter vector.
//!
//! Total consumed power for `M` BS antennas at spectral efficiency `R` with
//! radiated power `P_T` is
//!
//! ```text
//! P = M (P_BS + 2 C0 B) + P_C + R B P_dec + alpha P_T,   P_C = P_UT + P_OSC + P_s
//! ```
//!
//! where the `2 M C0 B` term is the conjugate beamformer's arithmetic load.
//! Dividing through by `N0 B / Gc` gives the dimensionless constants in
//! [`NormalizedParams`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Physical and hardware parameters, SI units throughout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Bandwidth `B` in Hz.
    pub bandwidth: f64,
    /// Noise power spectral density `N0` in W/Hz.
    pub noise_psd: f64,
    /// Average channel power gain `Gc`, linear.
    pub channel_gain: f64,
    /// Consumed-to-radiated power ratio of the PA, `alpha >= 1`.
    pub pa_factor: f64,
    /// Per-antenna RF chain power at the BS, W.
    pub p_bs: f64,
    /// RF chain power at the user terminal, W.
    pub p_ut: f64,
    /// Local oscillator power, W.
    pub p_osc: f64,
    /// Fixed baseband processing power, W.
    pub p_static: f64,
    /// Load-dependent power, W per bit/s.
    pub p_dec: f64,
    /// Energy per arithmetic operation, J.
    pub op_energy: f64,
}

impl SystemParams {
    /// Hardware values used throughout the published numerical study:
    /// `N0 = 10^-20.4 W/Hz`, `B = 1 MHz`, `P_s = 5 W`, `P_dec = 1.15 W/Gbit/s`,
    /// `P_BS = P_UT = 0.1 W`, `P_OSC = 2 W`, PA efficiency `0.39`,
    /// `C0 = 1 nJ`.
    pub fn reference_set(channel_gain: f64) -> Self {
        SystemParams {
            bandwidth: 1e6,
            noise_psd: 3.981_071_705_534_972e-21,
            channel_gain,
            pa_factor: 1.0 / 0.39,
            p_bs: 0.1,
            p_ut: 0.1,
            p_osc: 2.0,
            p_static: 5.0,
            p_dec: 1.15e-9,
            op_energy: 1e-9,
        }
    }

    pub fn with_channel_gain(self, channel_gain: f64) -> Self {
        SystemParams {
            channel_gain,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
            ("channel_gain", self.channel_gain),
        ];
        for (name, v) in positive {
            ensure(v.is_finite() && v > 0.0, name, v, "must be finite and > 0")?;
        }
        ensure(
            self.pa_factor.is_finite() && self.pa_factor >= 1.0,
            "pa_factor",
            self.pa_factor,
            "must be finite and >= 1",
        )?;
        let non_negative = [
            ("p_bs", self.p_bs),
            ("p_ut", self.p_ut),
            ("p_osc", self.p_osc),
            ("p_static", self.p_static),
            ("p_dec", self.p_dec),
            ("op_energy", self.op_energy),
        ];
        for (name, v) in non_negative {
            ensure(
                v.is_finite() && v >= 0.0,
                name,
                v,
                "must be finite and >= 0",
            )?;
        }
        Ok(())
    }

    /// `P_C = P_UT + P_OSC + P_s`.
    pub fn circuit_power(&self) -> f64 {
        self.p_ut + self.p_osc + self.p_static
    }

    /// Power that scales with the antenna count, `P_BS + 2 C0 B`.
    pub fn per_antenna_power(&self) -> f64 {
        self.p_bs + 2.0 * self.op_energy * self.bandwidth
    }

    /// Noise power `N0 B` referred to the transmitter, i.e. divided by `Gc`.
    pub fn noise_at_tx(&self) -> f64 {
        self.noise_psd * self.bandwidth / self.channel_gain
    }

    /// Radiated power needed for transmit SNR `gamma`.
    pub fn tx_power_for_snr(&self, gamma: f64) -> f64 {
        gamma * self.noise_at_tx()
    }

    /// Converts normalized EE `zeta` to bits per Joule.
    pub fn unnormalize(&self, zeta: f64) -> f64 {
        zeta * self.channel_gain / self.noise_psd
    }

    pub fn normalize(&self) -> Result<NormalizedParams> {
        normalize(self)
    }

    pub fn total_power(&self, antennas: u32, rate: f64, tx_power: f64) -> Result<PowerBreakdown> {
        total_power(self, antennas, rate, tx_power)
    }
}

/// The dimensionless parameter vector `(alpha, rho, rho_c, rho_d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// PA inefficiency `alpha`.
    pub pa_factor: f64,
    /// `rho = Gc (P_BS + 2 C0 B) / (N0 B)`.
    pub per_antenna: f64,
    /// `rho_c = Gc P_C / (N0 B)`.
    pub fixed: f64,
    /// `rho_d = Gc P_dec / N0`.
    pub per_rate: f64,
}

impl NormalizedParams {
    pub fn new(pa_factor: f64, per_antenna: f64, fixed: f64, per_rate: f64) -> Result<Self> {
        let theta = NormalizedParams {
            pa_factor,
            per_antenna,
            fixed,
            per_rate,
        };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.pa_factor.is_finite() && self.pa_factor >= 1.0,
            "alpha",
            self.pa_factor,
            "must be finite and >= 1",
        )?;
        ensure(
            self.per_antenna.is_finite() && self.per_antenna >= 0.0,
            "rho",
            self.per_antenna,
            "must be finite and >= 0",
        )?;
        ensure(
            self.fixed.is_finite() && self.fixed >= 0.0,
            "rho_c",
            self.fixed,
            "must be finite and >= 0",
        )?;
        ensure(
            self.per_rate.is_finite() && self.per_rate >= 0.0,
            "rho_d",
            self.per_rate,
            "must be finite and >= 0",
        )
    }
}

/// Normalizes physical parameters by `N0 B / Gc` (and `N0 / Gc` for the
/// per-rate term).
pub fn normalize(params: &SystemParams) -> Result<NormalizedParams> {
    params.validate()?;
    let scale = params.channel_gain / (params.noise_psd * params.bandwidth);
    Ok(NormalizedParams {
        pa_factor: params.pa_factor,
        per_antenna: scale * params.per_antenna_power(),
        fixed: scale * params.circuit_power(),
        per_rate: params.channel_gain * params.p_dec / params.noise_psd,
    })
}

/// Component-wise power consumption, all in W.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    /// `M P_BS`.
    pub rf_antennas: f64,
    /// `P_UT + P_OSC`.
    pub rf_fixed: f64,
    /// Beamformer arithmetic, `2 M C0 B`.
    pub beamforming: f64,
    /// `P_s`.
    pub baseband: f64,
    /// `R B P_dec`.
    pub load: f64,
    /// `alpha P_T`.
    pub amplifier: f64,
    pub total: f64,
    /// `amplifier / total`.
    pub pa_fraction: f64,
}

impl PowerBreakdown {
    /// Breakdown for a possibly non-integer antenna count (used by the
    /// relaxed optimum).
    pub(crate) fn build(params: &SystemParams, antennas: f64, rate: f64, tx_power: f64) -> Self {
        let rf_antennas = antennas * params.p_bs;
        let rf_fixed = params.p_ut + params.p_osc;
        let beamforming = 2.0 * antennas * params.op_energy * params.bandwidth;
        let baseband = params.p_static;
        let load = rate * params.bandwidth * params.p_dec;
        let amplifier = params.pa_factor * tx_power;
        let total = rf_antennas + rf_fixed + beamforming + baseband + load + amplifier;
        let pa_fraction = if total > 0.0 { amplifier / total } else { 0.0 };
        PowerBreakdown {
            rf_antennas,
            rf_fixed,
            beamforming,
            baseband,
            load,
            amplifier,
            total,
            pa_fraction,
        }
    }
}

pub fn total_power(
    params: &SystemParams,
    antennas: u32,
    rate: f64,
    tx_power: f64,
) -> Result<PowerBreakdown> {
    params.validate()?;
    ensure(antennas >= 1, "M", antennas as f64, "must be >= 1")?;
    ensure(
        rate.is_finite() && rate >= 0.0,
        "R",
        rate,
        "must be finite and >= 0",
    )?;
    ensure(
        tx_power.is_finite() && tx_power >= 0.0,
        "P_T",
        tx_power,
        "must be finite and >= 0",
    )?;
    Ok(PowerBreakdown::build(
        params,
        antennas as f64,
        rate,
        tx_power,
    ))
}

/// Fraction of total power drawn by the PAs at the relaxed EE-optimal antenna
/// count, in closed form.
///
/// With `S = P_BS + 2 C0 B + P_C + R B P_dec` and
/// `L = 2 sqrt(N0 B / Gc) sqrt(alpha (2^R - 1) (P_BS + 2 C0 B))`, the PAs draw
/// `L / 2` out of `S + L`, so `f = 1 / (2 + 2 S / L)`. Always below `1/2`.
pub fn pa_fraction_closed_form(params: &SystemParams, rate: f64) -> Result<f64> {
    params.validate()?;
    ensure(
        rate.is_finite() && rate > 0.0,
        "R",
        rate,
        "must be finite and > 0",
    )?;
    let per_antenna = params.per_antenna_power();
    let rest = per_antenna + params.circuit_power() + rate * params.bandwidth * params.p_dec;
    let excess = params.pa_factor * rate_excess(rate);
    let ratio = params.channel_gain.sqrt() * rest
        / ((params.noise_psd * params.bandwidth).sqrt() * (excess * per_antenna).sqrt());
    Ok(1.0 / (2.0 + ratio))
}

/// `2^R - 1` computed without cancellation for small `R`.
pub(crate) fn rate_excess(rate: f64) -> f64 {
    (rate * std::f64::consts::LN_2).exp_m1()
}
