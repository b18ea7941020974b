//! Link-level simulator and analysis toolkit for reflective-surface
//! man-in-the-middle attacks and their non-reciprocal defense.
//!
//! The library models a narrowband OFDM link between a base station and a
//! user equipment, assisted by a defensive reconfigurable surface whose
//! common phase differs between downlink and uplink symbols. An adversary
//! operates her own reflective panel to eavesdrop, inject fake symbols, or
//! pollute the channel-estimation protocol. Modules:
//!
//! - [`scenario`]: configuration types, the text config format, slot plans,
//!   pilot-overhead efficiency, and adversary-exposure fractions.
//! - [`channel`]: pathloss, link budgets, per-element channel draws, and
//!   cascaded/effective responses.
//! - [`ris`]: panel state, static-phase strategies, the per-symbol dynamic
//!   phase schedule, and the phase-rotation identity used by the base
//!   station to derive downlink state from uplink estimates.
//! - [`phy`]: constellations, precoder/combiner construction, the
//!   transmit/combine/decide chain, and symbol-error-rate accounting.
//! - [`adversary`]: the adversary's knowledge timers, eavesdropping,
//!   injection, and estimation-pollution behavior.
//! - [`cep`]: the staged channel-estimation protocol, recovery of the
//!   surface channels from stage differences, pollution detection, and
//!   backoff.
//! - [`analysis`]: closed-form rates, secrecy rates, feasibility windows,
//!   and fake-symbol detection/residual probabilities.
//! - [`harness`]: per-trial Monte-Carlo simulation, parameter sweeps,
//!   deterministic CSV output, closed-form cross-validation, and the
//!   acceptance checks behind the `validate` subcommand.

pub mod adversary;
pub mod analysis;
pub mod cep;
pub mod channel;
pub mod harness;
pub mod phy;
pub mod ris;
pub mod rng;
pub mod scenario;
