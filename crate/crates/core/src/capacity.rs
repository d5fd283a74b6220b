//! Ergodic capacity of the conjugate-beamformed Rayleigh link.
//!
//! With `M` i.i.d. `CN(0, 1)` channel taps and maximum-ratio transmission the
//! effective SNR is `gamma * X` where `X = ||h||^2 ~ Gamma(M, 1)`, so
//!
//! ```text
//! C(M, gamma) = E[log2(1 + gamma X)]
//! log2(1 + (M - 1) gamma) <= C(M, gamma) <= log2(1 + M gamma)
//! ```
//!
//! Two estimators are provided. The default integrates in the log domain,
//! `x = e^u`, where the integrand is analytic in a strip of fixed width around
//! the real axis for every `gamma`, so the trapezoidal rule converges
//! geometrically even when `M = 1` and the SNR is large. The Monte Carlo
//! estimator draws `Gamma(M, 1)` samples once per evaluator and reuses them
//! for every `gamma` (common random numbers), which keeps it monotone in
//! `gamma` along the sample path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exec::{self, Execution};
use crate::power::rate_excess;

/// Log-density cut-off used to truncate the integration range.
const TAIL_CUT: f64 = 42.0;
/// 99% two-sided normal quantile.
const Z_99: f64 = 2.5758293035489004;
const MC_CHUNK: usize = 1 << 16;
const MAX_BISECTIONS: u32 = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    /// Log-domain trapezoidal quadrature; `nodes` is rounded up to an odd
    /// number so the half-resolution rule reuses every other node.
    Quadrature {
        nodes: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Quadrature {
            nodes: CapacityConfig::DEFAULT_NODES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityConfig {
    pub estimator: Estimator,
    /// Rate tolerance of the inversion, bits/s/Hz.
    pub rate_tolerance: f64,
    /// Applies to Monte Carlo sampling only.
    pub execution: Execution,
}

impl CapacityConfig {
    pub const DEFAULT_NODES: usize = 257;
    pub const DEFAULT_SAMPLES: usize = 1_000_000;
    pub const DEFAULT_TOLERANCE: f64 = 1e-6;

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        CapacityConfig {
            estimator: Estimator::MonteCarlo { samples, seed },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.rate_tolerance.is_finite() && self.rate_tolerance > 0.0,
            "rate_tolerance",
            self.rate_tolerance,
            "must be finite and > 0",
        )?;
        match self.estimator {
            Estimator::Quadrature { nodes } => {
                ensure(nodes >= 9, "quadrature_nodes", nodes as f64, "must be >= 9")
            }
            Estimator::MonteCarlo { samples, .. } => {
                ensure(samples >= 2, "mc_samples", samples as f64, "must be >= 2")
            }
        }
    }
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            estimator: Estimator::default(),
            rate_tolerance: Self::DEFAULT_TOLERANCE,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// bits/s/Hz
    pub value: f64,
    pub method: Method,
    /// Quadrature: discretization plus truncation estimate. Monte Carlo: 99%
    /// confidence half-width.
    pub abs_error_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSolution {
    pub gamma: f64,
    /// `C(M, gamma) - R`.
    pub residual: f64,
    pub iterations: u32,
}

/// Closed-form bounds `(log2(1 + (M-1) gamma), log2(1 + M gamma))`.
pub fn capacity_bounds(antennas: u32, gamma: f64) -> Result<(f64, f64)> {
    check_point(antennas, gamma)?;
    let m = antennas as f64;
    Ok((
        ((m - 1.0) * gamma).ln_1p() / std::f64::consts::LN_2,
        (m * gamma).ln_1p() / std::f64::consts::LN_2,
    ))
}

/// SNR at which the lower bound reaches `rate`: `(2^R - 1) / (M - 1)`.
pub fn snr_lower_bound_rate(antennas: u32, rate: f64) -> Result<f64> {
    ensure(
        antennas >= 2,
        "M",
        antennas as f64,
        "the lower-bound rate needs at least 2 antennas",
    )?;
    check_rate(rate)?;
    Ok(rate_excess(rate) / (antennas - 1) as f64)
}

fn check_point(antennas: u32, gamma: f64) -> Result<()> {
    ensure(antennas >= 1, "M", antennas as f64, "must be >= 1")?;
    ensure(
        gamma.is_finite() && gamma > 0.0,
        "gamma",
        gamma,
        "must be finite and > 0",
    )
}

fn check_rate(rate: f64) -> Result<()> {
    ensure(
        rate.is_finite() && rate > 0.0,
        "R",
        rate,
        "must be finite and > 0",
    )
}

fn ln_gamma_int(m: u32) -> f64 {
    (2..m).map(|k| (k as f64).ln()).sum()
}

/// Trapezoidal nodes and weights for `E[f(X)]`, `X ~ Gamma(M, 1)`, in the
/// variable `u = ln x`.
#[derive(Clone, Debug)]
pub struct QuadratureTable {
    antennas: u32,
    points: Vec<f64>,
    weights: Vec<f64>,
    coarse_weights: Vec<f64>,
    /// Density mass left outside `[lo, hi]`, per endpoint.
    tail_mass: (f64, f64),
    /// Relative rounding error of a weighted sum over the table.
    rounding: f64,
}

impl QuadratureTable {
    pub fn new(antennas: u32, nodes: usize) -> Result<Self> {
        ensure(antennas >= 1, "M", antennas as f64, "must be >= 1")?;
        ensure(nodes >= 9, "quadrature_nodes", nodes as f64, "must be >= 9")?;
        let n = nodes | 1;
        let m = antennas as f64;
        let ln_norm = ln_gamma_int(antennas);
        let log_density = |u: f64| m * u - u.exp() - ln_norm;
        let centre = m.ln();
        let floor = log_density(centre) - TAIL_CUT;

        let edge = |dir: f64| {
            let mut near = 0.0;
            let mut far = 1.0;
            while log_density(centre + dir * far) > floor {
                near = far;
                far *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (near + far);
                if log_density(centre + dir * mid) > floor {
                    near = mid;
                } else {
                    far = mid;
                }
            }
            centre + dir * far
        };
        let lo = edge(-1.0);
        let hi = edge(1.0);
        let h = (hi - lo) / (n - 1) as f64;

        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut coarse_weights = Vec::with_capacity(n / 2 + 1);
        let mut exponent_scale: f64 = 0.0;
        for i in 0..n {
            let u = lo + h * i as f64;
            exponent_scale = exponent_scale.max(m * u.abs() + u.exp() + ln_norm);
            let end = i == 0 || i == n - 1;
            let d = log_density(u).exp();
            points.push(u.exp());
            weights.push(if end { 0.5 * h * d } else { h * d });
            if i % 2 == 0 {
                coarse_weights.push(if end { h * d } else { 2.0 * h * d });
            }
        }
        // Left tail decays like e^{M u}; right tail super-exponentially.
        let tail_mass = (log_density(lo).exp() / m, log_density(hi).exp());
        Ok(QuadratureTable {
            antennas,
            points,
            weights,
            coarse_weights,
            tail_mass,
            rounding: f64::EPSILON * (exponent_scale + n as f64),
        })
    }

    pub fn nodes(&self) -> usize {
        self.points.len()
    }

    /// `E[ln(1 + gamma X)]` in nats together with an error estimate.
    fn expect_ln1p(&self, gamma: f64) -> (f64, f64) {
        let mut fine = 0.0;
        let mut coarse = 0.0;
        let mut magnitude = 0.0;
        for (i, (&x, &w)) in self.points.iter().zip(&self.weights).enumerate() {
            let f = (gamma * x).ln_1p();
            fine += w * f;
            magnitude += (w * f).abs();
            if i % 2 == 0 {
                coarse += self.coarse_weights[i / 2] * f;
            }
        }
        let x_lo = self.points[0];
        let x_hi = self.points[self.points.len() - 1];
        let tail = self.tail_mass.0 * (gamma * x_lo).ln_1p()
            + self.tail_mass.1 * (gamma * x_hi).ln_1p() * 4.0;
        (
            fine,
            (fine - coarse).abs() + tail + self.rounding * magnitude,
        )
    }

    pub fn capacity(&self, gamma: f64) -> Result<CapacityEstimate> {
        check_point(self.antennas, gamma)?;
        check_overflow(self.antennas, gamma * self.points[self.points.len() - 1])?;
        let (value, err) = self.expect_ln1p(gamma);
        Ok(CapacityEstimate {
            value: value / std::f64::consts::LN_2,
            method: Method::Quadrature,
            abs_error_bound: err / std::f64::consts::LN_2,
        })
    }
}

fn check_overflow(antennas: u32, scaled: f64) -> Result<()> {
    if scaled.is_finite() && scaled < 1e300 {
        Ok(())
    } else {
        Err(Error::Overflow {
            antennas,
            gamma: scaled,
        })
    }
}

/// A fixed set of `Gamma(M, 1)` draws, i.e. `||h||^2` realisations.
#[derive(Clone, Debug)]
pub struct GammaSamples {
    antennas: u32,
    chunks: Vec<Vec<f64>>,
    exec: Execution,
}

impl GammaSamples {
    /// Draws `samples` values. Chunk `k` uses ChaCha8 stream
    /// `(M << 32) | k` of `seed`, so the result does not depend on
    /// `exec`.
    pub fn draw(antennas: u32, samples: usize, seed: u64, exec: Execution) -> Result<Self> {
        ensure(antennas >= 1, "M", antennas as f64, "must be >= 1")?;
        ensure(samples >= 2, "mc_samples", samples as f64, "must be >= 2")?;
        let dist = Gamma::new(antennas as f64, 1.0).expect("shape >= 1 and unit scale");
        let n_chunks = samples.div_ceil(MC_CHUNK);
        let chunks = exec::map_range(exec, n_chunks, |k| {
            let len = MC_CHUNK.min(samples - k * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((antennas as u64) << 32) | k as u64);
            (0..len)
                .map(|_| dist.sample(&mut rng))
                .collect::<Vec<f64>>()
        });
        Ok(GammaSamples {
            antennas,
            chunks,
            exec,
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample mean and unbiased variance of `f(X)`.
    pub fn mean_var<F>(&self, f: F) -> (f64, f64)
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        // Per-chunk (n, mean, M2), merged in chunk order.
        let parts = exec::map(self.exec, &self.chunks, |chunk| {
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for (i, &x) in chunk.iter().enumerate() {
                let v = f(x);
                let delta = v - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (v - mean);
            }
            (chunk.len() as f64, mean, m2)
        });
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for (nb, mb, m2b) in parts {
            let total = n + nb;
            let delta = mb - mean;
            mean += delta * nb / total;
            m2 += m2b + delta * delta * n * nb / total;
            n = total;
        }
        (mean, m2 / (n - 1.0))
    }

    pub fn capacity(&self, gamma: f64) -> Result<CapacityEstimate> {
        check_point(self.antennas, gamma)?;
        check_overflow(self.antennas, gamma * self.antennas as f64)?;
        let (mean, var) = self.mean_var(|x| (gamma * x).ln_1p() / std::f64::consts::LN_2);
        Ok(CapacityEstimate {
            value: mean,
            method: Method::MonteCarlo,
            abs_error_bound: Z_99 * (var / self.len() as f64).sqrt(),
        })
    }
}

/// Capacity evaluator bound to one antenna count.
#[derive(Clone, Debug)]
pub enum Evaluator {
    Quadrature(QuadratureTable),
    MonteCarlo(GammaSamples),
}

impl Evaluator {
    pub fn capacity(&self, gamma: f64) -> Result<CapacityEstimate> {
        match self {
            Evaluator::Quadrature(t) => t.capacity(gamma),
            Evaluator::MonteCarlo(s) => s.capacity(gamma),
        }
    }
}

/// Capacity evaluation and inversion under a fixed estimator configuration.
#[derive(Clone, Copy, Debug, Default)]
pub struct CapacityEngine {
    config: CapacityConfig,
}

impl CapacityEngine {
    pub fn new(config: CapacityConfig) -> Result<Self> {
        config.validate()?;
        Ok(CapacityEngine { config })
    }

    pub fn config(&self) -> &CapacityConfig {
        &self.config
    }

    pub fn evaluator(&self, antennas: u32) -> Result<Evaluator> {
        Ok(match self.config.estimator {
            Estimator::Quadrature { nodes } => {
                Evaluator::Quadrature(QuadratureTable::new(antennas, nodes)?)
            }
            Estimator::MonteCarlo { samples, seed } => Evaluator::MonteCarlo(GammaSamples::draw(
                antennas,
                samples,
                seed,
                self.config.execution,
            )?),
        })
    }

    pub fn ergodic_capacity(&self, antennas: u32, gamma: f64) -> Result<CapacityEstimate> {
        check_point(antennas, gamma)?;
        self.evaluator(antennas)?.capacity(gamma)
    }

    /// Transmit SNR `gamma_0(M, R)` at which the ergodic capacity equals
    /// `rate`, by bisection from the bracket
    /// `[(2^R - 1) / M, (2^R - 1) / max(M - 1, 1/2)]`.
    pub fn invert_capacity(&self, antennas: u32, rate: f64) -> Result<SnrSolution> {
        ensure(antennas >= 1, "M", antennas as f64, "must be >= 1")?;
        check_rate(rate)?;
        let tol = self.config.rate_tolerance;
        let eval = self.evaluator(antennas)?;
        let excess = rate_excess(rate);
        let m = antennas as f64;

        let mut lo = excess / m;
        let mut hi = excess / (m - 1.0).max(0.5);
        let mut iterations = 0;

        let c_lo = eval.capacity(lo)?;
        if (c_lo.value - rate).abs() <= tol {
            return Ok(SnrSolution {
                gamma: lo,
                residual: c_lo.value - rate,
                iterations,
            });
        }
        let mut c_hi = eval.capacity(hi)?;
        if (c_hi.value - rate).abs() <= tol {
            return Ok(SnrSolution {
                gamma: hi,
                residual: c_hi.value - rate,
                iterations,
            });
        }
        // Only the single-antenna upper end lacks a guaranteed bracket.
        if antennas == 1 {
            while c_hi.value < rate && iterations < MAX_BISECTIONS {
                lo = hi;
                hi *= 2.0;
                c_hi = eval.capacity(hi)?;
                iterations += 1;
            }
        }
        let c_lo = if antennas == 1 {
            eval.capacity(lo)?
        } else {
            c_lo
        };
        if c_lo.value > rate || c_hi.value < rate {
            return Err(Error::Bracket {
                antennas,
                rate,
                lo,
                hi,
                c_lo: c_lo.value,
                c_hi: c_hi.value,
                error_bound: c_lo.abs_error_bound.max(c_hi.abs_error_bound),
            });
        }

        let mut residual = f64::INFINITY;
        while iterations < MAX_BISECTIONS {
            iterations += 1;
            let mid = if hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            let c = eval.capacity(mid)?.value;
            residual = c - rate;
            if residual.abs() <= tol {
                return Ok(SnrSolution {
                    gamma: mid,
                    residual,
                    iterations,
                });
            }
            if residual < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        Err(Error::NoConvergence {
            antennas,
            rate,
            iterations,
            residual,
        })
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LOG2_E: f64 = std::f64::consts::LOG2_E;

    #[test]
    fn bounds_examples() {
        let (lo, hi) = capacity_bounds(1, 7.0).unwrap();
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-15);
        let (lo, hi) = capacity_bounds(2, 1.0).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-15);
        assert_relative_eq!(hi, 3f64.log2(), max_relative = 1e-15);
        assert!(capacity_bounds(0, 1.0).is_err());
        assert!(capacity_bounds(2, 0.0).is_err());
        assert!(capacity_bounds(2, f64::NAN).is_err());
    }

    #[test]
    fn lower_bound_snr() {
        assert_relative_eq!(
            snr_lower_bound_rate(2, 1.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            snr_lower_bound_rate(32, 5.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(snr_lower_bound_rate(1, 5.0).is_err());
        assert!(snr_lower_bound_rate(4, 0.0).is_err());
    }

    // E[ln(1 + X)] = 1 exactly for X ~ Gamma(2, 1).
    #[test]
    fn two_antennas_unit_snr_is_log2_e() {
        let c = CapacityEngine::default().ergodic_capacity(2, 1.0).unwrap();
        assert_relative_eq!(c.value, LOG2_E, max_relative = 1e-13);
        assert_eq!(c.method, Method::Quadrature);
        assert!(c.abs_error_bound < 1e-10);
    }

    // Reference values from 30-digit adaptive quadrature.
    #[test]
    fn quadrature_matches_high_precision_reference() {
        let cases = [
            (1, 1.0, 0.86034738227088595),
            (1, 52.0, 4.9903563644833412),
            (4, 10.0, 5.181077213119313),
            (64, 0.5, 5.0337764830140008),
            (256, 1e-3, 0.32871950077179661),
            (8, 1e3, 12.873946331237651),
        ];
        let engine = CapacityEngine::default();
        for (m, g, expected) in cases {
            let c = engine.ergodic_capacity(m, g).unwrap();
            assert!(
                (c.value - expected).abs() < 1e-11,
                "M = {m}, gamma = {g}: {} vs {expected}",
                c.value
            );
            assert!(
                (c.value - expected).abs() <= c.abs_error_bound + 1e-15,
                "M = {m}, gamma = {g}: err {:e} > bound {:e}",
                (c.value - expected).abs(),
                c.abs_error_bound
            );
        }
    }

    #[test]
    fn zero_snr_limit() {
        let engine = CapacityEngine::default();
        for m in [1, 8, 128] {
            let c = engine.ergodic_capacity(m, 1e-12).unwrap();
            assert!(c.value < 1e-9 * m as f64);
        }
    }

    #[test]
    fn overflow_is_an_error() {
        let err = CapacityEngine::default()
            .ergodic_capacity(4, 1e305)
            .unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn inversion_reference_values() {
        let engine = CapacityEngine::default();
        for (m, r, expected) in [
            (1, 5.0, 52.373628079268193),
            (2, 5.0, 20.021486973292286),
            (64, 5.0, 0.48806281145239242),
            (1, 1.0, 1.2553245125428198),
            (2, 1.0, 0.56310233101280349),
        ] {
            let s = engine.invert_capacity(m, r).unwrap();
            assert_relative_eq!(s.gamma, expected, max_relative = 1e-5);
            assert!(s.residual.abs() <= 1e-6);
        }
    }

    #[test]
    fn inversion_close_to_large_array_approximation() {
        let s = CapacityEngine::default().invert_capacity(64, 5.0).unwrap();
        let approx = 31.0 / 64.0;
        assert!(((s.gamma - approx) / approx).abs() < 0.03);
    }

    #[test]
    fn inversion_round_trip() {
        let engine = CapacityEngine::default();
        for m in [1, 3, 17, 100] {
            for r in [0.05, 1.0, 4.0, 12.0] {
                let s = engine.invert_capacity(m, r).unwrap();
                let c = engine.ergodic_capacity(m, s.gamma).unwrap().value;
                assert!((c - r).abs() <= 1e-6, "M = {m}, R = {r}");
            }
        }
    }

    #[test]
    fn inversion_rejects_bad_input() {
        let engine = CapacityEngine::default();
        assert!(engine.invert_capacity(0, 1.0).is_err());
        assert!(engine.invert_capacity(2, 0.0).is_err());
        assert!(engine.invert_capacity(2, f64::INFINITY).is_err());
    }

    #[test]
    fn odd_node_count() {
        assert_eq!(QuadratureTable::new(3, 128).unwrap().nodes(), 129);
        assert_eq!(QuadratureTable::new(3, 257).unwrap().nodes(), 257);
        assert!(QuadratureTable::new(3, 4).is_err());
        let bad = CapacityConfig {
            rate_tolerance: 0.0,
            ..Default::default()
        };
        assert!(CapacityEngine::new(bad).is_err());
    }

    #[test]
    fn monte_carlo_is_seeded_and_execution_independent() {
        let a = GammaSamples::draw(3, 200_000, 7, Execution::Sequential).unwrap();
        let b = GammaSamples::draw(3, 200_000, 7, Execution::Parallel).unwrap();
        let ca = a.capacity(2.0).unwrap();
        let cb = b.capacity(2.0).unwrap();
        assert_eq!(ca, cb);
        let c = GammaSamples::draw(3, 200_000, 8, Execution::Sequential).unwrap();
        assert_ne!(ca.value, c.capacity(2.0).unwrap().value);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let engine = CapacityEngine::new(CapacityConfig::monte_carlo(400_000, 11)).unwrap();
        for (m, g) in [(1, 1.0), (4, 0.3), (16, 2.0)] {
            let mc = engine.ergodic_capacity(m, g).unwrap();
            let q = CapacityEngine::default().ergodic_capacity(m, g).unwrap();
            assert_eq!(mc.method, Method::MonteCarlo);
            assert!((mc.value - q.value).abs() <= mc.abs_error_bound * 1.5);
        }
    }

    #[test]
    fn monte_carlo_inversion_is_deterministic() {
        let engine = CapacityEngine::new(CapacityConfig::monte_carlo(100_000, 3)).unwrap();
        let a = engine.invert_capacity(8, 3.0).unwrap();
        let b = engine.invert_capacity(8, 3.0).unwrap();
        assert_eq!(a, b);
        let eval = engine.evaluator(8).unwrap();
        assert!((eval.capacity(a.gamma).unwrap().value - 3.0).abs() <= 1e-6);
    }
}
