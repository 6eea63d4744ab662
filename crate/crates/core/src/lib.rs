//! Simulation library for secure simultaneous wireless information and
//! power transfer (SWIPT) in a downlink multi-user massive MIMO cell with
//! an active, pilot-contaminating, energy-harvesting eavesdropper.
//!
//! The pipeline follows the TDD frame structure: users (and the
//! eavesdropper) spend previously harvested energy on uplink pilots, the
//! base station forms MMSE channel estimates and MRT beams, and the
//! downlink carries data plus known pseudorandom energy symbols that
//! every receiver power-splits between decoding and harvesting.
//!
//! Everything of interest exists in (at least) two independently
//! computed routes: closed forms and Monte Carlo over the full pipeline
//! for received RF power, harvested energy and the secrecy-rate lower
//! bound, plus large-M asymptotics. The `optimize` module solves the
//! constrained secrecy maximization over the power-splitting ratio and
//! the pilot-energy allocation fraction.

// `!(x > 0.0)` guards reject NaN along with nonpositive values; plain
// `x <= 0.0` would let NaN through
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// configs are built as "defaults plus tweaks" throughout
#![allow(clippy::field_reassign_with_default)]

pub mod channel;
pub mod cmat;
pub mod downlink;
pub mod energy;
pub mod optimize;
pub mod secrecy;
pub mod sysmodel;

use thiserror::Error as ThisError;

/// Library-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("fixed point did not converge after {iterations} iterations (last iterate Q_k = {q_user:e}, Q_eve = {q_eve:e})")]
    NoConvergence {
        iterations: usize,
        q_user: f64,
        q_eve: f64,
    },
}

pub use channel::{
    despread, draw_channels, estimation_stats, make_pilots, mmse_estimate, run_training,
    uplink_receive, ChannelSet, PilotSet, TrainingOutcome,
};
pub use cmat::CMat;
pub use downlink::{
    downlink_receive, draw_symbols, mrt_precoder, split_power, DownlinkSymbols, Precoder,
    SplitSignal,
};
pub use energy::{
    eh_asymptotic, energy_report_asymptotic, energy_report_closed, energy_report_empirical,
    linear_eh, nonlinear_eh, rf_power_asymptotic, rf_power_eve_closed, rf_power_user_closed,
    EnergyReport, EnergyVariant,
};
pub use optimize::{
    bound_for_allocation, maximize_secrecy, monotonicity_check, rho_max, secrecy_bound_drho,
    steady_state_energy, theta_min, AuditReport, Binding, GridSpec, MonotonicityReport,
    OptimumReport, SteadyState, RHO_GUARD,
};
pub use secrecy::{
    gaussian_moments, jensen_constant, mc_rates, mc_secrecy_rate, moment_bundle,
    quartic_entry_moment, secrecy_asymptotic, secrecy_bound_closed, secrecy_report, sigma_z_sq,
    sinr_terms, McEstimate, McRates, MomentBundle, SecrecyReport, SinrTerms,
};
pub use sysmodel::{
    dbm_to_watts, draw_scenario, load_config, parse_config, pathloss, substream, watts_to_dbm,
    EhCurve, EhParams, EnergyBudget, Geometry, ResolvedConfig, StreamRole, SystemConfig,
};
