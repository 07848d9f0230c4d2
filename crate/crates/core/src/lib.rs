//! Asymptotic secret-key rates for dual-rail DV protocols and Gaussian CV
//! protocols over thermal-loss and phase-noise channels, with capacity
//! bounds, a truncated-Fock-space oracle for the DV channel formulas, and a
//! sweep/comparison engine.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod compare;
pub mod config;
pub mod cv;
pub mod dv;
pub mod error;
pub mod evaluate;
pub mod fock;
pub mod optimize;
pub mod rate;
pub mod scalar;
pub mod sweep;
pub mod symplectic;

pub use bounds::{capacity_bounds, normalize_rate, CapacityBounds};
pub use channel::{combined_channel_stats, DvChannelStats, PhaseNoise, ThermalLossChannel};
pub use config::{AxisName, AxisSpec, Scale, SweepConfig};
pub use cv::{CvCovariance, CvExcessNoise, CvSource, HolevoTerms, Placement};
pub use error::{Error, Result};
pub use evaluate::{evaluate, FreeParam, RateSettings, SourcePolicy};
pub use rate::{Diagnostics, KeyRateResult, Protocol};
pub use sweep::{run_comparison, run_sweep, ComparisonKind, Table};
