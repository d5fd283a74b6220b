//! Energy-efficiency-optimal antenna count for a single-user massive MIMO
//! downlink with conjugate beamforming and a full transceiver power model.
//!
//! The crate is organised bottom-up:
//!
//! - [`power`]: power-consumption bookkeeping and the normalized parameter
//!   vector used by every efficiency formula.
//! - [`capacity`]: ergodic capacity of the beamformed Rayleigh link, its
//!   closed-form bounds, and the rate-to-SNR inverse.
//! - [`optimizer`]: energy efficiency for a given antenna count, the integer
//!   optimal antenna counts, and the closed-form continuous relaxation.
//! - [`regime`]: asymptotic regime tests and their approximation formulas.
//! - [`sweep`]: configuration, parameter sweeps and CSV output driven by the
//!   `mimo-ee` binary.
//!
//! ```
//! use mimo_ee::power::SystemParams;
//! use mimo_ee::optimizer::relaxed_optimum;
//!
//! let params = SystemParams::reference_set(1e-15);
//! let theta = params.normalize().unwrap();
//! let relaxed = relaxed_optimum(5.0, &theta).unwrap();
//! assert!((relaxed.antennas - 56.7).abs() < 0.05);
//! ```

pub mod capacity;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod power;
pub mod regime;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Execution;
