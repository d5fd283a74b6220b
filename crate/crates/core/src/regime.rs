//! Asymptotic operating regimes of the relaxed EE optimum.
//!
//! Four dominance tests, each comparing the PA-driven term of the optimal
//! power budget against the circuit terms:
//!
//! | regime      | test                                                     |
//! |-------------|----------------------------------------------------------|
//! | small rate  | `R rho_d + 2 sqrt(alpha rho (2^R - 1))  <<  rho`          |
//! | large rate  | `R rho_d + 2 sqrt(alpha rho (2^R - 1))  >>  rho + rho_c`  |
//! | large gain  | `L  <<  P_BS + 2 C0 B`                                    |
//! | small gain  | `L  >>  P_BS + 2 C0 B + R B P_dec + P_C`                  |
//!
//! with `L = 2 sqrt(N0 B / Gc) sqrt(alpha (2^R - 1) (P_BS + 2 C0 B))`.
//! "Much less/greater" holds when the dominance ratio strictly exceeds a
//! configurable threshold (default 10).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::optimizer::relaxed_antennas;
use crate::power::{rate_excess, NormalizedParams, SystemParams};

pub const DEFAULT_THRESHOLD: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SmallRate,
    LargeRate,
    LargeGain,
    SmallGain,
    Transitional,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::SmallRate => "small-R",
            Regime::LargeRate => "large-R",
            Regime::LargeGain => "large-Gc",
            Regime::SmallGain => "small-Gc",
            Regime::Transitional => "transitional",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What the approximation attached to a regime evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxKind {
    /// Normalized EE.
    Zeta,
    /// EE in bits/Joule.
    Eta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub regime: Regime,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs / lhs` for "much less" tests, `lhs / rhs` for "much greater".
    pub dominance: f64,
    pub holds: bool,
    pub approx_kind: ApproxKind,
    pub approx_value: f64,
    pub approx_antennas: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub threshold: f64,
    /// In the order small-R, large-R, large-Gc, small-Gc.
    pub checks: [RegimeCheck; 4],
}

impl RegimeReport {
    /// Regimes whose test holds, or `[Transitional]`.
    pub fn regimes(&self) -> Vec<Regime> {
        let held: Vec<Regime> = self
            .checks
            .iter()
            .filter(|c| c.holds)
            .map(|c| c.regime)
            .collect();
        if held.is_empty() {
            vec![Regime::Transitional]
        } else {
            held
        }
    }

    pub fn holds(&self, regime: Regime) -> bool {
        self.check(regime).is_some_and(|c| c.holds)
    }

    pub fn check(&self, regime: Regime) -> Option<&RegimeCheck> {
        self.checks.iter().find(|c| c.regime == regime)
    }

    /// Satisfied regimes joined with `+`, e.g. `small-R+large-Gc`.
    pub fn label(&self) -> String {
        self.regimes()
            .iter()
            .map(|r| r.label())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// `(R / (rho + rho_c), 1)`: EE grows linearly in `R` with a single antenna.
pub fn small_rate_approx(rate: f64, theta: &NormalizedParams) -> (f64, f64) {
    (rate / (theta.per_antenna + theta.fixed), 1.0)
}

/// `1 / (rho_d + 2 sqrt(alpha rho (2^R - 1) / R^2))`, vanishing as `R` grows.
pub fn large_rate_approx(rate: f64, theta: &NormalizedParams) -> f64 {
    1.0 / (theta.per_rate
        + 2.0 * (theta.pa_factor * theta.per_antenna * rate_excess(rate) / (rate * rate)).sqrt())
}

/// `R B / (P_BS + 2 C0 B + P_C + R B P_dec)`, independent of `Gc`.
pub fn large_gain_approx(rate: f64, params: &SystemParams) -> f64 {
    rate * params.bandwidth
        / (params.per_antenna_power()
            + params.circuit_power()
            + rate * params.bandwidth * params.p_dec)
}

/// EE proportional to `sqrt(Gc)` and the relaxed antenna count, which grows
/// as `1 / sqrt(Gc)`.
pub fn small_gain_approx(rate: f64, params: &SystemParams) -> (f64, f64) {
    let excess = rate_excess(rate);
    let per_antenna = params.per_antenna_power();
    let eta = params.channel_gain.sqrt() * rate
        / (2.0
            * (params.noise_psd / params.bandwidth).sqrt()
            * (params.pa_factor * excess * per_antenna).sqrt());
    let antennas = 1.0
        + (params.noise_psd * params.bandwidth / params.channel_gain).sqrt()
            * (params.pa_factor * excess / per_antenna).sqrt();
    (eta, antennas)
}

fn much_less(lhs: f64, rhs: f64, threshold: f64) -> (f64, bool) {
    let dominance = rhs / lhs;
    (dominance, dominance > threshold)
}

fn much_greater(lhs: f64, rhs: f64, threshold: f64) -> (f64, bool) {
    let dominance = lhs / rhs;
    (dominance, dominance > threshold)
}

/// Evaluates the four regime tests at `(R, params)`.
pub fn classify(rate: f64, params: &SystemParams, threshold: f64) -> Result<RegimeReport> {
    ensure(
        threshold.is_finite() && threshold >= 1.0,
        "dominance_threshold",
        threshold,
        "must be finite and >= 1",
    )?;
    ensure(
        rate.is_finite() && rate > 0.0,
        "R",
        rate,
        "must be finite and > 0",
    )?;
    let theta = params.normalize()?;
    let relaxed_m = relaxed_antennas(rate, &theta)?;
    let excess = rate_excess(rate);

    let rate_lhs =
        rate * theta.per_rate + 2.0 * (theta.pa_factor * theta.per_antenna * excess).sqrt();
    let (d, h) = much_less(rate_lhs, theta.per_antenna, threshold);
    let (zeta, m) = small_rate_approx(rate, &theta);
    let small_rate = RegimeCheck {
        regime: Regime::SmallRate,
        lhs: rate_lhs,
        rhs: theta.per_antenna,
        dominance: d,
        holds: h,
        approx_kind: ApproxKind::Zeta,
        approx_value: zeta,
        approx_antennas: m,
    };

    let large_rhs = theta.per_antenna + theta.fixed;
    let (d, h) = much_greater(rate_lhs, large_rhs, threshold);
    let large_rate = RegimeCheck {
        regime: Regime::LargeRate,
        lhs: rate_lhs,
        rhs: large_rhs,
        dominance: d,
        holds: h,
        approx_kind: ApproxKind::Zeta,
        approx_value: large_rate_approx(rate, &theta),
        approx_antennas: relaxed_m,
    };

    let per_antenna = params.per_antenna_power();
    let gain_lhs =
        2.0 * params.noise_at_tx().sqrt() * (params.pa_factor * excess * per_antenna).sqrt();
    let (d, h) = much_less(gain_lhs, per_antenna, threshold);
    let large_gain = RegimeCheck {
        regime: Regime::LargeGain,
        lhs: gain_lhs,
        rhs: per_antenna,
        dominance: d,
        holds: h,
        approx_kind: ApproxKind::Eta,
        approx_value: large_gain_approx(rate, params),
        approx_antennas: 1.0,
    };

    let small_rhs = per_antenna + rate * params.bandwidth * params.p_dec + params.circuit_power();
    let (d, h) = much_greater(gain_lhs, small_rhs, threshold);
    let (eta, m) = small_gain_approx(rate, params);
    let small_gain = RegimeCheck {
        regime: Regime::SmallGain,
        lhs: gain_lhs,
        rhs: small_rhs,
        dominance: d,
        holds: h,
        approx_kind: ApproxKind::Eta,
        approx_value: eta,
        approx_antennas: m,
    };

    Ok(RegimeReport {
        threshold,
        checks: [small_rate, large_rate, large_gain, small_gain],
    })
}
