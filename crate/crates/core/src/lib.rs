//! Analysis toolkit for the Rosenzweig-MacArthur prey-predator model and its
//! stochastic extension driven by symmetric alpha-stable Levy noise.
//!
//! - [`model`]: the deterministic vector field, closed-form equilibria,
//!   linear stability, and the transcritical bifurcation curve.
//! - [`stable`]: alpha-stable variate generation and the Levy-measure
//!   normalization constant.
//! - [`integrate`]: deterministic and jump-SDE trajectory integration with
//!   reproducible Monte Carlo ensembles.
//! - [`fpe`]: a stationary solver for the associated non-local
//!   Fokker-Planck equation on a truncated domain.

pub mod fpe;
pub mod integrate;
pub mod model;
pub mod stable;

pub use fpe::{DensityGrid, FpeConfig, StationaryResult};
pub use integrate::{Ensemble, SimConfig, Trajectory};
pub use model::{EquilibriumReport, ModelParams, Stability, State};
pub use stable::{RngStream, StableNoiseSpec};
