//! Energy efficiency as a function of the antenna count, and its optimizers.
//!
//! In normalized form the inverse EE at `M` antennas, rate `R` and transmit
//! SNR `gamma` is
//!
//! ```text
//! 1 / zeta = rho_d + (M rho + rho_c) / R + alpha gamma / R
//! ```
//!
//! Three objectives share this expression and differ only in `gamma`:
//!
//! - exact: `gamma = gamma_0(M, R)`, the ergodic-capacity inverse;
//! - bound: `gamma = (2^R - 1) / (M - 1)`, from the capacity lower bound;
//! - relaxed: the bound objective minimized over real `M >= 1`, which has the
//!   closed form `M' = 1 + sqrt((alpha / rho) (2^R - 1))`.
//!
//! The bound objective is convex in `M`, so its integer minimizer is one of
//! `floor(M')`, `ceil(M')`. The exact objective is only empirically unimodal
//! and is searched outward from `M'` with a stop rule.

use serde::{Deserialize, Serialize};

use crate::capacity::{snr_lower_bound_rate, CapacityEngine};
use crate::error::{ensure, Error, Result};
use crate::power::{rate_excess, NormalizedParams, PowerBreakdown, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    Exact,
    Bound,
    Relaxed,
}

impl Objective {
    pub fn label(self) -> &'static str {
        match self {
            Objective::Exact => "exact",
            Objective::Bound => "bound",
            Objective::Relaxed => "relaxed",
        }
    }
}

/// Which antenna count wins when two candidates have equal EE.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    Smaller,
    Larger,
}

impl TieBreak {
    fn prefers(self, candidate: u32, incumbent: u32) -> bool {
        match self {
            TieBreak::Smaller => candidate < incumbent,
            TieBreak::Larger => candidate > incumbent,
        }
    }

    /// Whether `(m, v)` should replace `(best_m, best_v)` in a minimization.
    fn improves(self, m: u32, v: f64, best_m: u32, best_v: f64) -> bool {
        v < best_v || (v == best_v && self.prefers(m, best_m))
    }
}

/// How one side of the exact outward scan ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanStop {
    /// `stop_width` consecutive evaluations failed to improve.
    StopRule,
    /// Reached `M = 1` (downward) or the search cap (upward).
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchInfo {
    pub cap: u32,
    pub evaluations: u32,
    pub lower: ScanStop,
    pub upper: ScanStop,
    /// Times the objective decreased again after having increased on the
    /// same side; non-zero means the exact objective was not unimodal.
    pub unimodality_violations: u32,
}

/// An optimization outcome in normalized units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedEe {
    pub objective: Objective,
    /// Integral except for the relaxed objective.
    pub antennas: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub search: Option<SearchInfo>,
}

impl NormalizedEe {
    pub fn unnormalize(&self, rate: f64, params: &SystemParams) -> EeResult {
        let tx_power = params.tx_power_for_snr(self.gamma);
        EeResult {
            objective: self.objective,
            antennas: self.antennas,
            gamma: self.gamma,
            zeta: self.zeta,
            eta: params.unnormalize(self.zeta),
            breakdown: PowerBreakdown::build(params, self.antennas, rate, tx_power),
            search: self.search,
        }
    }
}

/// An optimization outcome with physical units attached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EeResult {
    pub objective: Objective,
    pub antennas: f64,
    pub gamma: f64,
    pub zeta: f64,
    /// bits/Joule
    pub eta: f64,
    pub breakdown: PowerBreakdown,
    pub search: Option<SearchInfo>,
}

/// `1 / zeta` for an arbitrary (possibly real) antenna count and SNR.
pub fn inverse_zeta(antennas: f64, rate: f64, gamma: f64, theta: &NormalizedParams) -> f64 {
    theta.per_rate
        + (antennas * theta.per_antenna + theta.fixed) / rate
        + theta.pa_factor * gamma / rate
}

/// `1 / zeta_1` over real `M > 1`.
pub fn inverse_zeta_bound(antennas: f64, rate: f64, theta: &NormalizedParams) -> f64 {
    inverse_zeta(antennas, rate, rate_excess(rate) / (antennas - 1.0), theta)
}

fn check_inputs(rate: f64, theta: &NormalizedParams) -> Result<()> {
    theta.validate()?;
    ensure(
        rate.is_finite() && rate > 0.0,
        "R",
        rate,
        "must be finite and > 0",
    )
}

/// EE when the rate equals the ergodic capacity.
pub fn zeta_exact(
    antennas: u32,
    rate: f64,
    theta: &NormalizedParams,
    engine: &CapacityEngine,
) -> Result<NormalizedEe> {
    check_inputs(rate, theta)?;
    let gamma = engine.invert_capacity(antennas, rate)?.gamma;
    Ok(NormalizedEe {
        objective: Objective::Exact,
        antennas: antennas as f64,
        gamma,
        zeta: 1.0 / inverse_zeta(antennas as f64, rate, gamma, theta),
        search: None,
    })
}

/// EE when the rate equals the capacity lower bound. Needs `M >= 2`.
pub fn zeta_bound(antennas: u32, rate: f64, theta: &NormalizedParams) -> Result<NormalizedEe> {
    check_inputs(rate, theta)?;
    let gamma = snr_lower_bound_rate(antennas, rate)?;
    Ok(NormalizedEe {
        objective: Objective::Bound,
        antennas: antennas as f64,
        gamma,
        zeta: 1.0 / inverse_zeta(antennas as f64, rate, gamma, theta),
        search: None,
    })
}

/// `M' = 1 + sqrt((alpha / rho) (2^R - 1))`.
pub fn relaxed_antennas(rate: f64, theta: &NormalizedParams) -> Result<f64> {
    check_inputs(rate, theta)?;
    ensure(
        theta.per_antenna > 0.0,
        "rho",
        theta.per_antenna,
        "the relaxed optimum needs a positive per-antenna cost",
    )?;
    Ok(1.0 + (theta.pa_factor / theta.per_antenna * rate_excess(rate)).sqrt())
}

/// Closed-form continuous optimum of the bound objective.
pub fn relaxed_optimum(rate: f64, theta: &NormalizedParams) -> Result<NormalizedEe> {
    let antennas = relaxed_antennas(rate, theta)?;
    let excess = rate_excess(rate);
    let zeta = rate
        / (theta.per_antenna
            + theta.fixed
            + rate * theta.per_rate
            + 2.0 * (theta.pa_factor * theta.per_antenna * excess).sqrt());
    Ok(NormalizedEe {
        objective: Objective::Relaxed,
        antennas,
        gamma: excess / (antennas - 1.0),
        zeta,
        search: None,
    })
}

fn integer_antennas(m: f64) -> Result<u32> {
    ensure(
        m.is_finite() && m < (u32::MAX / 4) as f64,
        "M'",
        m,
        "relaxed antenna count out of range",
    )?;
    Ok(m as u32)
}

/// Integer minimizer of the bound objective over `M >= 2`.
///
/// Picks the better of `floor(M')` and `ceil(M')`, which is exact because the
/// objective is convex; if a local-optimality check fails anyway the window
/// `[2, 2 ceil(M') + 8]` is scanned exhaustively.
pub fn optimize_bound(rate: f64, theta: &NormalizedParams, tie: TieBreak) -> Result<NormalizedEe> {
    let relaxed = relaxed_antennas(rate, theta)?;
    let objective = |m: u32| inverse_zeta_bound(m as f64, rate, theta);
    let floor = integer_antennas(relaxed.floor())?.max(2);
    let ceil = integer_antennas(relaxed.ceil())?.max(2);

    let (mut best, mut best_v) = (floor, objective(floor));
    if ceil != floor {
        let v = objective(ceil);
        if tie.improves(ceil, v, best, best_v) {
            best = ceil;
            best_v = v;
        }
    }
    let locally_optimal =
        (best == 2 || objective(best - 1) >= best_v) && objective(best + 1) >= best_v;
    if !locally_optimal {
        for m in 2..=2 * ceil + 8 {
            let v = objective(m);
            if tie.improves(m, v, best, best_v) {
                best = m;
                best_v = v;
            }
        }
    }
    zeta_bound(best, rate, theta)
}

/// Outward-scan settings for the exact objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSearch {
    /// Explicit cap; otherwise `cap_multiplier * ceil(M') + cap_offset`.
    pub cap: Option<u32>,
    pub cap_multiplier: u32,
    pub cap_offset: u32,
    pub stop_width: u32,
    pub tie_break: TieBreak,
}

impl Default for ExactSearch {
    fn default() -> Self {
        ExactSearch {
            cap: None,
            cap_multiplier: 4,
            cap_offset: 16,
            stop_width: 8,
            tie_break: TieBreak::Smaller,
        }
    }
}

impl ExactSearch {
    fn resolve_cap(&self, relaxed: f64) -> Result<u32> {
        let ceil = integer_antennas(relaxed.ceil())?;
        match self.cap {
            Some(cap) => {
                ensure(
                    cap >= 2 * ceil,
                    "search_cap",
                    cap as f64,
                    "must be at least 2 ceil(M')",
                )?;
                Ok(cap)
            }
            None => Ok(self.cap_multiplier.max(2) * ceil + self.cap_offset),
        }
    }
}

struct SideScan {
    best: (u32, f64),
    stop: ScanStop,
    violations: u32,
    evaluations: u32,
    still_decreasing: bool,
}

fn scan_side<I, F>(
    steps: I,
    start: (u32, f64),
    width: u32,
    tie: TieBreak,
    mut objective: F,
) -> Result<SideScan>
where
    I: Iterator<Item = u32>,
    F: FnMut(u32) -> Result<f64>,
{
    let mut scan = SideScan {
        best: start,
        stop: ScanStop::Boundary,
        violations: 0,
        evaluations: 0,
        still_decreasing: false,
    };
    let mut side_best = start.1;
    let mut prev = start.1;
    let mut increased = false;
    let mut stale = 0;
    for m in steps {
        let v = objective(m)?;
        scan.evaluations += 1;
        if v > prev {
            increased = true;
        } else if v < prev && increased {
            scan.violations += 1;
        }
        scan.still_decreasing = v < prev;
        prev = v;
        if tie.improves(m, v, scan.best.0, scan.best.1) {
            scan.best = (m, v);
        }
        if v < side_best {
            side_best = v;
            stale = 0;
        } else {
            stale += 1;
            if stale >= width {
                scan.stop = ScanStop::StopRule;
                break;
            }
        }
    }
    Ok(scan)
}

/// Integer minimizer of the exact objective over `M` in `[1, cap]`.
///
/// Scans up and down from `round(M')`; each side stops after
/// `search.stop_width` consecutive evaluations that fail to improve on that
/// side's best. Fails with [`Error::SearchCap`] if the upward scan reaches the
/// cap while the objective is still decreasing.
pub fn optimize_exact(
    rate: f64,
    theta: &NormalizedParams,
    engine: &CapacityEngine,
    search: &ExactSearch,
) -> Result<NormalizedEe> {
    let relaxed = relaxed_antennas(rate, theta)?;
    let cap = search.resolve_cap(relaxed)?;
    ensure(
        search.stop_width >= 1,
        "stop_width",
        search.stop_width as f64,
        "must be >= 1",
    )?;
    let start = integer_antennas(relaxed.round())?.clamp(1, cap);

    let objective = |m: u32| -> Result<f64> {
        let gamma = engine.invert_capacity(m, rate)?.gamma;
        Ok(inverse_zeta(m as f64, rate, gamma, theta))
    };
    let (best, best_v, info) = scan_outward(start, cap, search, objective)?;
    let gamma = engine.invert_capacity(best, rate)?.gamma;
    debug_assert_eq!(inverse_zeta(best as f64, rate, gamma, theta), best_v);
    Ok(NormalizedEe {
        objective: Objective::Exact,
        antennas: best as f64,
        gamma,
        zeta: 1.0 / best_v,
        search: Some(info),
    })
}

/// Minimizes `objective` over `[1, cap]` scanning outward from `start`.
fn scan_outward<F>(
    start: u32,
    cap: u32,
    search: &ExactSearch,
    mut objective: F,
) -> Result<(u32, f64, SearchInfo)>
where
    F: FnMut(u32) -> Result<f64>,
{
    let start_v = objective(start)?;
    let up = scan_side(
        start + 1..=cap,
        (start, start_v),
        search.stop_width,
        search.tie_break,
        &mut objective,
    )?;
    if up.stop == ScanStop::Boundary && up.still_decreasing {
        return Err(Error::SearchCap { cap });
    }
    let down = scan_side(
        (1..start).rev(),
        (start, start_v),
        search.stop_width,
        search.tie_break,
        &mut objective,
    )?;

    let (mut best, mut best_v) = up.best;
    if search
        .tie_break
        .improves(down.best.0, down.best.1, best, best_v)
    {
        (best, best_v) = down.best;
    }
    let info = SearchInfo {
        cap,
        evaluations: 1 + up.evaluations + down.evaluations,
        lower: down.stop,
        upper: up.stop,
        unimodality_violations: up.violations + down.violations,
    };
    Ok((best, best_v, info))
}
