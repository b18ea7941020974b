//! Monte-Carlo harness: the per-slot signal chain, per-trial sampling,
//! parameter sweeps with parallel trials, CSV emission, closed-form
//! cross-validation, and the acceptance criteria suite.

mod output;
mod sweep;
mod trial;
mod validate;

pub use output::{
    config_hash_hex, render_cep_demo_csv, render_closed_csv, render_sweep_csv, write_text,
};
pub use sweep::{
    aggregate, apply_axis, closed_forms, cross_validate, run_sweep, Aggregates, ClosedForms,
    SweepAxis, SweepRow, ValidationCheck, ValidationReport,
};
pub use trial::{run_cep_demo, run_defended_slot, run_trial, CepDemo, SlotInputs, SlotOutcome, TrialMetrics};
pub use validate::{
    cascade_mean_power, combiner_rotation_defense, defended_link_error_rate,
    determinism_parallel_equivalence, eavesdropping_error_rates, estimation_exactness,
    fake_probability_ordering, injection_power_tail, phase_flip_identity,
    pilot_overhead_efficiency, pollution_detection, run_all, secrecy_rate_ordering,
    CriterionResult,
};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::cep::CepError;
use crate::channel::ChannelError;
use crate::phy::PhyError;
use crate::ris::RisError;
use crate::scenario::ScenarioError;

/// Errors from the harness layer, wrapping the domain layers' own.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Configuration or slot-plan problem.
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    /// Channel model problem.
    #[error(transparent)]
    Channel(#[from] ChannelError),
    /// Surface construction problem.
    #[error(transparent)]
    Ris(#[from] RisError),
    /// Symbol-chain problem.
    #[error(transparent)]
    Phy(#[from] PhyError),
    /// Estimation-protocol problem.
    #[error(transparent)]
    Cep(#[from] CepError),
    /// Closed-form problem.
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    /// The estimation protocol needs every pilot before the first data
    /// symbol.
    #[error("pilot symbol {pilot} comes after data symbol {data}; estimation must finish before data")]
    PilotAfterData {
        /// Largest pilot index in the slot.
        pilot: usize,
        /// Smallest data index in the slot.
        data: usize,
    },
    /// A sweep value does not fit its axis.
    #[error("value {value} invalid for axis {axis}: {msg}")]
    BadAxisValue {
        /// Axis name.
        axis: &'static str,
        /// Offending value.
        value: f64,
        /// Reason.
        msg: String,
    },
    /// Monte-Carlo aggregation needs at least one trial.
    #[error("at least one trial is required")]
    NoTrials,
    /// An estimation-example label that is not one of the three cases.
    #[error("unknown estimation scenario `{0}` (expected opt1, opt2 or polluted)")]
    UnknownScenario(String),
    /// Worker-pool construction failed.
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    /// File I/O with the offending path attached.
    #[error("writing {path}: {source}")]
    Io {
        /// Path being written.
        path: String,
        /// Underlying error.
        source: std::io::Error,
    },
}
