//! The adversary: what she knows, when she knows it, and what she does
//! with it.
//!
//! She owns a reflective panel placed between the endpoints and a receiver
//! behind it, and she estimates her own channels perfectly. Against a
//! reciprocal link she needs `n_r` symbols of observation to align with the
//! precoding; against the non-reciprocal defense she needs `n_n` symbols to
//! learn the per-direction precoders and `n_n_prime >= n_n` to additionally
//! learn the receive combiners. Her knowledge resets whenever the defense
//! redraws its per-slot phases. Injection always rides her own
//! perfectly-known channel with conjugate beamforming, so the legitimate
//! receiver sees `|h_e|^2 * x_e` — rotated by the receiver combiner she does
//! not know, or pre-compensated once she does.

use num_complex::Complex64;
use rand::Rng;

use crate::phy::{decide, sample_noise, Constellation, ConstellationSymbol, PhyError};
use crate::scenario::{AdversaryMode, AdversaryTiming};

/// Which protection the adversary is searching against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchRegime {
    /// Reciprocal link: one timer (`n_r`) unlocks everything.
    Reciprocal,
    /// Non-reciprocal defense: `n_n` unlocks precoders, `n_n_prime` combiners.
    NonReciprocal,
}

/// The adversary's evolving knowledge within one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EveState {
    /// Her search timers and activation plan.
    pub timing: AdversaryTiming,
    /// Protection regime she is up against.
    pub regime: SearchRegime,
    /// Symbols observed since the current phase epoch began.
    pub elapsed: usize,
    /// She has learned the transmit precoders in use.
    pub knows_precoders: bool,
    /// She has additionally learned the receive combiners.
    pub knows_combiners: bool,
    /// Combiner phase of the receiver she is currently targeting, once
    /// learned (set by the harness per direction).
    pub target_combiner: Option<f64>,
    /// Log of the fake symbols she injected this slot.
    pub injected: Vec<ConstellationSymbol>,
}

impl EveState {
    /// Fresh state at the start of a phase epoch.
    pub fn new(timing: AdversaryTiming, regime: SearchRegime) -> Self {
        EveState {
            timing,
            regime,
            elapsed: 0,
            knows_precoders: false,
            knows_combiners: false,
            target_combiner: None,
            injected: Vec::new(),
        }
    }

    /// Reset for a new slot: the defense redraws its per-slot phases, so all
    /// acquired knowledge expires.
    pub fn new_epoch(&self) -> EveState {
        EveState::new(self.timing, self.regime)
    }

    /// Whether her panel is active at symbol `n` (given her activation plan
    /// and the defensive surface's activation for the pollution mode).
    pub fn active_at(&self, n: usize, dris_active_from: usize) -> bool {
        self.timing.mode != AdversaryMode::Off && n >= pollute_cep(self, dris_active_from)
    }
}

/// Advance the observation timers by `symbols` and update the knowledge
/// flags. In the reciprocal regime both flags unlock at `n_r`; in the
/// non-reciprocal regime precoders unlock at `n_n` and combiners at
/// `n_n_prime`.
pub fn advance(state: &mut EveState, symbols: usize) {
    state.elapsed += symbols;
    match state.regime {
        SearchRegime::Reciprocal => {
            let unlocked = state.elapsed >= state.timing.n_r;
            state.knows_precoders = unlocked;
            state.knows_combiners = unlocked;
        }
        SearchRegime::NonReciprocal => {
            state.knows_precoders = state.elapsed >= state.timing.n_n;
            state.knows_combiners = state.elapsed >= state.timing.n_n_prime;
        }
    }
}

/// Her activation symbol: in the estimation-pollution mode she co-activates
/// with the defensive surface; otherwise she follows her own plan.
pub fn pollute_cep(state: &EveState, dris_active_from: usize) -> usize {
    match state.timing.mode {
        AdversaryMode::PolluteCep => dris_active_from,
        _ => state.timing.activation_symbol,
    }
}

/// What she hears: the transmitted (already precoded) value through her own
/// channel toward the transmitter, plus receiver noise at her antenna.
pub fn eavesdrop(
    sent: Complex64,
    h_toward_eve: Complex64,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Complex64 {
    let mut y = h_toward_eve * sent;
    if noise_var > 0.0 {
        y += sample_noise(noise_var, rng);
    }
    y
}

/// Her decision on an eavesdropped sample. She always knows her own channel;
/// once she knows the precoder she inverts it too, otherwise her decision is
/// off by the precoder's phase.
pub fn decode_eavesdropped(
    y: Complex64,
    h_toward_eve: Complex64,
    precoder: Option<Complex64>,
    kind: Constellation,
) -> Result<ConstellationSymbol, PhyError> {
    let g = match precoder {
        Some(v) => h_toward_eve * v,
        None => h_toward_eve,
    };
    if g.norm() == 0.0 {
        return Err(PhyError::ZeroChannel);
    }
    Ok(decide(g.conj() * y, g.norm_sqr(), kind))
}

/// The interference her injection adds at the legitimate receiver:
/// `|h_e|^2 * x_e`, pre-rotated by the receiver's combiner phase once she
/// knows it (so her symbol survives combining upright — the worst case for
/// the receiver).
pub fn inject(fake: &ConstellationSymbol, h_e: Complex64, state: &EveState) -> Complex64 {
    let base = h_e.norm_sqr() * fake.value;
    match (state.knows_combiners, state.target_combiner) {
        (true, Some(theta)) => base * Complex64::from_polar(1.0, theta),
        _ => base,
    }
}
