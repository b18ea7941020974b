//! The staged channel-estimation protocol (CEP) and its countermeasures.
//!
//! Estimation runs in stages within one slot: stage 0 with the defensive
//! surface off, stage 1 with it on under the per-direction phase, and (for
//! the downlink receiver) stage 2 with the downlink pilot carrying the
//! *uplink* phase. Differencing stage estimates against stage 0 isolates
//! the surface channel; anything that stays constant across stages — the
//! direct path, and an adversary panel that is active throughout — cancels.
//! An adversary who switches on *together with* the surface contaminates
//! exactly the differences, which is detected afterwards from the
//! symbol-error rate of known validation symbols, answered by a random
//! mute-and-restart backoff.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::phy::{ConstellationSymbol, ReceivedSample};
use crate::ris::{rotate_csi, RisPanel};
use crate::scenario::{SlotPlan, SymbolKind};

/// Symbol-error-rate threshold above which a slot is flagged as polluted
/// (tuned for unit-power QPSK validation symbols).
pub const POLLUTION_SER_THRESHOLD: f64 = 0.1;

/// Errors from the estimation protocol.
#[derive(Debug, Error, PartialEq)]
pub enum CepError {
    /// Least-squares needs a non-zero pilot.
    #[error("least-squares estimate undefined for a zero pilot symbol")]
    ZeroPilot,
    /// A required stage recorded no samples.
    #[error("missing stage estimates: {0}")]
    MissingStage(&'static str),
    /// Deriving downlink state requires an uplink estimate.
    #[error("no uplink estimate available to derive the downlink from")]
    NoUplinkEstimate,
}

/// Receiving side of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The user collects downlink pilots (stages 0, 1 and 2).
    Ue,
    /// The base station collects uplink pilots (stages 0 and 1).
    Bs,
}

/// The unit pilot symbol (power-normalized like data symbols).
pub fn pilot_symbol() -> ConstellationSymbol {
    ConstellationSymbol { value: Complex64::new(1.0, 0.0), index: 0 }
}

/// Per-stage averaged least-squares estimates for one side, with the sample
/// count behind each average.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageEstimates {
    /// Downlink stage-0 average.
    pub dl_p0: Option<Complex64>,
    /// Downlink stage-1 average.
    pub dl_p1: Option<Complex64>,
    /// Downlink stage-2 (flipped) average.
    pub dl_p2: Option<Complex64>,
    /// Uplink stage-0 average.
    pub ul_p0: Option<Complex64>,
    /// Uplink stage-1 average.
    pub ul_p1: Option<Complex64>,
    /// Samples behind each downlink stage average.
    pub dl_counts: [usize; 3],
    /// Samples behind each uplink stage average.
    pub ul_counts: [usize; 2],
}

/// Single least-squares channel estimate from one received pilot sample.
pub fn ls_estimate(y: Complex64, pilot: &ConstellationSymbol) -> Result<Complex64, CepError> {
    if pilot.value.norm() == 0.0 {
        return Err(CepError::ZeroPilot);
    }
    Ok(y / pilot.value)
}

/// Average the least-squares estimates of one side's pilot receptions by
/// stage. Samples at non-pilot indices (or the other side's pilots) are
/// ignored; duplicate stage receptions average.
pub fn collect_stages(
    received: &[ReceivedSample],
    slot: &SlotPlan,
    side: Side,
) -> Result<StageEstimates, CepError> {
    let pilot = pilot_symbol();
    let mut sums = [Complex64::new(0.0, 0.0); 5];
    let mut counts = [0usize; 5];
    for sample in received {
        let stage = match (side, slot.kind_of(sample.n)) {
            (Side::Ue, Some(SymbolKind::DlP0)) => 0,
            (Side::Ue, Some(SymbolKind::DlP1)) => 1,
            (Side::Ue, Some(SymbolKind::DlP2)) => 2,
            (Side::Bs, Some(SymbolKind::UlP0)) => 3,
            (Side::Bs, Some(SymbolKind::UlP1)) => 4,
            _ => continue,
        };
        sums[stage] += ls_estimate(sample.y, &pilot)?;
        counts[stage] += 1;
    }
    let avg = |i: usize| (counts[i] > 0).then(|| sums[i] / counts[i] as f64);
    Ok(StageEstimates {
        dl_p0: avg(0),
        dl_p1: avg(1),
        dl_p2: avg(2),
        ul_p0: avg(3),
        ul_p1: avg(4),
        dl_counts: [counts[0], counts[1], counts[2]],
        ul_counts: [counts[3], counts[4]],
    })
}

/// Which estimation timeline the slot followed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioTag {
    /// Adversary inactive during all pilot stages: stage 0 is the direct
    /// path alone.
    Opt1,
    /// Adversary active during all pilot stages: her contribution cancels in
    /// the differences, and stage 0 is the direct-plus-adversary composite.
    Opt2,
    /// Adversary co-activated with the surface mid-protocol: the differences
    /// are contaminated and must not be trusted.
    Polluted,
}

/// Recovered channel state from one side's stage estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiResult {
    /// Downlink surface-channel estimate (difference of stages 1 and 0), or
    /// the value derived by the base station via [`bs_derive_dl`].
    pub h_a_dl: Option<Complex64>,
    /// Uplink surface-channel estimate (user: stages 2 minus 0; base
    /// station: uplink stages 1 minus 0).
    pub h_a_ul: Option<Complex64>,
    /// Direct-path estimate, available only when stage 0 was adversary-free.
    pub h_d: Option<Complex64>,
    /// Stage-0 baseline as observed (direct path, plus the adversary panel
    /// when she was active throughout).
    pub baseline_p0: Option<Complex64>,
    /// Timeline the recovery assumed.
    pub tag: ScenarioTag,
    /// The differences are contaminated and must not be trusted.
    pub polluted: bool,
}

/// Recover surface-channel state from stage differences.
///
/// Works for whichever side's stages are present: the user yields downlink
/// and uplink estimates plus the baseline; the base station yields the
/// uplink estimate plus the baseline (downlink follows via
/// [`bs_derive_dl`]). Under [`ScenarioTag::Polluted`] the same differences
/// are returned but flagged untrusted — they carry the adversary's panel
/// additively.
pub fn recover_csi(stages: &StageEstimates, tag: ScenarioTag) -> Result<CsiResult, CepError> {
    let polluted = tag == ScenarioTag::Polluted;
    let (h_a_dl, h_a_ul, baseline) = match (stages.dl_p0, stages.ul_p0) {
        (Some(p0), _) => {
            let p1 = stages.dl_p1.ok_or(CepError::MissingStage("downlink stage 1"))?;
            let h_a_dl = Some(p1 - p0);
            let h_a_ul = stages.dl_p2.map(|p2| p2 - p0);
            (h_a_dl, h_a_ul, p0)
        }
        (None, Some(p0)) => {
            let p1 = stages.ul_p1.ok_or(CepError::MissingStage("uplink stage 1"))?;
            (None, Some(p1 - p0), p0)
        }
        (None, None) => return Err(CepError::MissingStage("stage 0")),
    };
    Ok(CsiResult {
        h_a_dl,
        h_a_ul,
        h_d: (tag == ScenarioTag::Opt1).then_some(baseline),
        baseline_p0: Some(baseline),
        tag,
        polluted,
    })
}

/// Fill in the downlink estimate from the uplink one using the surface's
/// announced per-direction phases (no feedback channel needed).
pub fn bs_derive_dl(result: &CsiResult, panel: &RisPanel) -> Result<CsiResult, CepError> {
    let h_ul = result.h_a_ul.ok_or(CepError::NoUplinkEstimate)?;
    let mut out = *result;
    out.h_a_dl = Some(rotate_csi(h_ul, panel.phi_dl, panel.phi_ul));
    Ok(out)
}

/// Flag a slot as polluted when the validation symbol-error rate strictly
/// exceeds the threshold.
pub fn detect_pollution(validation_ser: f64, threshold: f64) -> bool {
    debug_assert!((0.0..=1.0).contains(&validation_ser), "SER must be a rate");
    validation_ser > threshold
}

/// Mute duration before restarting the protocol: uniform in
/// `[1, max_backoff]` symbols.
pub fn backoff_and_restart(rng: &mut impl Rng, max_backoff: usize) -> usize {
    debug_assert!(max_backoff >= 1, "backoff window must allow at least one symbol");
    rng.gen_range(1..=max_backoff.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::transmit;
    use crate::ris::RisPanel;
    use crate::scenario::default_slot_plan;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Simulate the five pilot receptions of one slot given the effective
    /// per-symbol channels, noiselessly.
    fn pilot_pass(channels: &[(usize, Complex64)]) -> Vec<ReceivedSample> {
        let pilot = pilot_symbol();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        channels
            .iter()
            .map(|&(n, h)| {
                transmit(&pilot, Complex64::new(1.0, 0.0), h, Complex64::new(0.0, 0.0), 0.0, n, &mut rng)
            })
            .collect()
    }

    #[test]
    fn ls_estimate_inverts_the_pilot() {
        let h = Complex64::new(0.3, -0.9);
        let est = ls_estimate(h * pilot_symbol().value, &pilot_symbol()).unwrap();
        assert!((est - h).norm() < 1e-15);
        let zero = ConstellationSymbol { value: Complex64::new(0.0, 0.0), index: 0 };
        assert_eq!(ls_estimate(h, &zero), Err(CepError::ZeroPilot));
    }

    #[test]
    fn stage_collection_splits_by_side_and_averages() {
        let slot = default_slot_plan(22).unwrap();
        let h = Complex64::new(1.0, 2.0);
        // Two receptions of the same downlink stage-0 pilot value average to it;
        // uplink samples are invisible to the user side.
        let samples = pilot_pass(&[(0, h), (0, h), (1, Complex64::new(9.0, 9.0)), (2, 2.0 * h)]);
        let ue = collect_stages(&samples, &slot, Side::Ue).unwrap();
        assert_eq!(ue.dl_counts, [2, 1, 0]);
        assert!((ue.dl_p0.unwrap() - h).norm() < 1e-15);
        assert!((ue.dl_p1.unwrap() - 2.0 * h).norm() < 1e-15);
        assert_eq!(ue.dl_p2, None);
        assert_eq!(ue.ul_p0, None);

        let bs = collect_stages(&samples, &slot, Side::Bs).unwrap();
        assert_eq!(bs.ul_counts, [1, 0]);
        assert!((bs.ul_p0.unwrap() - Complex64::new(9.0, 9.0)).norm() < 1e-15);
    }

    #[test]
    fn adversary_free_recovery_isolates_every_channel() {
        let slot = default_slot_plan(22).unwrap();
        let h_d = Complex64::new(0.2, -0.1);
        let h_a_dl = Complex64::new(-0.7, 0.4);
        let h_a_ul = Complex64::new(0.5, 0.9);
        let samples = pilot_pass(&[(0, h_d), (2, h_d + h_a_dl), (4, h_d + h_a_ul)]);
        let stages = collect_stages(&samples, &slot, Side::Ue).unwrap();
        let csi = recover_csi(&stages, ScenarioTag::Opt1).unwrap();
        assert!((csi.h_a_dl.unwrap() - h_a_dl).norm() < 1e-14);
        assert!((csi.h_a_ul.unwrap() - h_a_ul).norm() < 1e-14);
        assert!((csi.h_d.unwrap() - h_d).norm() < 1e-14);
        assert!(!csi.polluted);
    }

    #[test]
    fn always_active_adversary_cancels_in_the_differences() {
        let slot = default_slot_plan(22).unwrap();
        let h_d = Complex64::new(0.2, -0.1);
        let h_e = Complex64::new(1.1, 0.6);
        let h_a_dl = Complex64::new(-0.7, 0.4);
        let h_a_ul = Complex64::new(0.5, 0.9);
        let samples =
            pilot_pass(&[(0, h_d + h_e), (2, h_d + h_a_dl + h_e), (4, h_d + h_a_ul + h_e)]);
        let stages = collect_stages(&samples, &slot, Side::Ue).unwrap();
        let csi = recover_csi(&stages, ScenarioTag::Opt2).unwrap();
        assert!((csi.h_a_dl.unwrap() - h_a_dl).norm() < 1e-14);
        assert!((csi.h_a_ul.unwrap() - h_a_ul).norm() < 1e-14);
        // The baseline is the composite; the direct path alone is unknown.
        assert_eq!(csi.h_d, None);
        assert!((csi.baseline_p0.unwrap() - (h_d + h_e)).norm() < 1e-14);
        assert!(!csi.polluted);
    }

    #[test]
    fn coactivated_adversary_contaminates_the_differences_and_flags() {
        let slot = default_slot_plan(22).unwrap();
        let h_d = Complex64::new(0.2, -0.1);
        let h_e = Complex64::new(1.1, 0.6);
        let h_a_dl = Complex64::new(-0.7, 0.4);
        let samples = pilot_pass(&[(0, h_d), (2, h_d + h_a_dl + h_e)]);
        let stages = collect_stages(&samples, &slot, Side::Ue).unwrap();
        let csi = recover_csi(&stages, ScenarioTag::Polluted).unwrap();
        assert!((csi.h_a_dl.unwrap() - (h_a_dl + h_e)).norm() < 1e-14);
        assert!(csi.polluted);
    }

    #[test]
    fn missing_stages_are_reported() {
        let slot = default_slot_plan(22).unwrap();
        let stages = collect_stages(&[], &slot, Side::Ue).unwrap();
        assert_eq!(recover_csi(&stages, ScenarioTag::Opt1), Err(CepError::MissingStage("stage 0")));

        let only_p0 = pilot_pass(&[(0, Complex64::new(1.0, 0.0))]);
        let stages = collect_stages(&only_p0, &slot, Side::Ue).unwrap();
        assert_eq!(
            recover_csi(&stages, ScenarioTag::Opt1),
            Err(CepError::MissingStage("downlink stage 1"))
        );
    }

    #[test]
    fn base_station_derives_downlink_from_uplink() {
        let slot = default_slot_plan(22).unwrap();
        let h_d = Complex64::new(0.1, 0.1);
        let h_a = Complex64::new(0.8, -0.3);
        let phi_dl = 0.7;
        let phi_ul = -1.9;
        let h_a_ul = h_a * Complex64::from_polar(1.0, phi_ul);
        let h_a_dl = h_a * Complex64::from_polar(1.0, phi_dl);
        let samples = pilot_pass(&[(1, h_d), (3, h_d + h_a_ul)]);
        let stages = collect_stages(&samples, &slot, Side::Bs).unwrap();
        let csi = recover_csi(&stages, ScenarioTag::Opt1).unwrap();
        assert_eq!(csi.h_a_dl, None);
        let panel = RisPanel::new(vec![0.0; 2], phi_dl, phi_ul, 2).unwrap();
        let derived = bs_derive_dl(&csi, &panel).unwrap();
        assert!((derived.h_a_dl.unwrap() - h_a_dl).norm() < 1e-14);
        assert!((derived.h_a_ul.unwrap() - h_a_ul).norm() < 1e-14);

        let empty = CsiResult {
            h_a_dl: None,
            h_a_ul: None,
            h_d: None,
            baseline_p0: None,
            tag: ScenarioTag::Opt1,
            polluted: false,
        };
        assert_eq!(bs_derive_dl(&empty, &panel), Err(CepError::NoUplinkEstimate));
    }

    #[test]
    fn detection_threshold_is_strict() {
        assert!(!detect_pollution(0.1, POLLUTION_SER_THRESHOLD));
        assert!(detect_pollution(0.100001, POLLUTION_SER_THRESHOLD));
        assert!(!detect_pollution(0.0, POLLUTION_SER_THRESHOLD));
        assert!(detect_pollution(1.0, POLLUTION_SER_THRESHOLD));
    }

    #[test]
    fn backoff_is_in_range_and_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws: Vec<usize> = (0..200).map(|_| backoff_and_restart(&mut rng, 17)).collect();
        assert!(draws.iter().all(|&d| (1..=17).contains(&d)));
        // Both endpoints are reachable.
        assert!(draws.contains(&1));
        assert!(draws.contains(&17));
        let mut rng2 = ChaCha8Rng::seed_from_u64(8);
        let again: Vec<usize> = (0..200).map(|_| backoff_and_restart(&mut rng2, 17)).collect();
        assert_eq!(draws, again);
    }
}
