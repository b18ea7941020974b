//! Reconfigurable-surface state: per-element static phases, the common
//! per-symbol dynamic phase schedule, and the rotation identity that lets
//! the base station derive downlink state from an uplink estimate.
//!
//! A panel's response is split into a static per-element configuration
//! (fixed for a whole slot) and one common dynamic phase added on top of
//! every element, switched per OFDM symbol: downlink symbols use `phi_dl`,
//! uplink symbols `phi_ul`, and the flipped downlink pilot stage carries
//! `phi_ul` so the user can estimate the uplink state from a downlink
//! reception. Because the per-element propagation is reciprocal, the two
//! directions differ by exactly `e^{j(phi_dl - phi_ul)}`.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::scenario::{SlotPlan, SymbolKind};

/// Errors from panel construction and phase alignment.
#[derive(Debug, Error, PartialEq)]
pub enum RisError {
    /// Panel element count and static-phase vector length must agree.
    #[error("panel declares {m} elements but carries {phases} static phases")]
    ElementMismatch { m: usize, phases: usize },
    /// Leg vectors of a cascade must pair up element-wise.
    #[error("leg length mismatch: {first} vs {second}")]
    LegMismatch { first: usize, second: usize },
    /// An empty panel has no response.
    #[error("panel must have at least one element")]
    Empty,
}

/// One reflective panel's configuration for a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    /// Element count.
    pub m: usize,
    /// Static per-element phases, radians (length `m`).
    pub static_phases: Vec<f64>,
    /// Common dynamic phase on downlink symbols, radians.
    pub phi_dl: f64,
    /// Common dynamic phase on uplink symbols, radians.
    pub phi_ul: f64,
    /// First symbol index at which the panel is active.
    pub active_from: usize,
}

impl RisPanel {
    /// Construct a panel, checking that the phase vector matches `m`.
    pub fn new(
        static_phases: Vec<f64>,
        phi_dl: f64,
        phi_ul: f64,
        active_from: usize,
    ) -> Result<Self, RisError> {
        if static_phases.is_empty() {
            return Err(RisError::Empty);
        }
        Ok(RisPanel { m: static_phases.len(), static_phases, phi_dl, phi_ul, active_from })
    }
}

/// Uniform random static phases in `[0, 2*pi)` — the incoherent strategy.
pub fn random_static_phases(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
}

/// Static phases that align every cascaded element pair: element `i` gets
/// `-(arg(first[i]) + arg(second[i]))`, making each term of the cascade a
/// non-negative real — the coherent strategy.
pub fn align_static_phases(
    first: &[Complex64],
    second: &[Complex64],
) -> Result<Vec<f64>, RisError> {
    if first.len() != second.len() {
        return Err(RisError::LegMismatch { first: first.len(), second: second.len() });
    }
    if first.is_empty() {
        return Err(RisError::Empty);
    }
    Ok(first.iter().zip(second).map(|(a, b)| -(a.arg() + b.arg())).collect())
}

/// The common dynamic phase per OFDM symbol; `None` marks symbols where the
/// protocol keeps the panel's dynamic stage off (stage-0 pilots).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    per_symbol: Vec<Option<f64>>,
}

impl PhaseSchedule {
    /// Dynamic phase at symbol `n`; `None` when the protocol has the panel
    /// off at `n` or `n` is outside the slot.
    pub fn phase_at(&self, n: usize) -> Option<f64> {
        self.per_symbol.get(n).copied().flatten()
    }
}

/// Build the dynamic-phase schedule for a slot.
///
/// Downlink data and stage-1 downlink pilots carry `phi_dl`; uplink data,
/// stage-1 uplink pilots and (with `flip` set) the stage-2 downlink pilots
/// carry `phi_ul`; stage-0 pilots have the panel off. With `flip` unset the
/// stage-2 pilots carry `phi_dl` like any downlink symbol (the
/// reciprocal-style schedule, which leaves the user unable to observe the
/// uplink phase).
pub fn schedule_phases(panel: &RisPanel, slot: &SlotPlan, flip: bool) -> PhaseSchedule {
    let per_symbol = (0..slot.n_total)
        .map(|n| match slot.kind_of(n) {
            Some(SymbolKind::DlData) | Some(SymbolKind::DlP1) => Some(panel.phi_dl),
            Some(SymbolKind::UlData) | Some(SymbolKind::UlP1) => Some(panel.phi_ul),
            Some(SymbolKind::DlP2) => Some(if flip { panel.phi_ul } else { panel.phi_dl }),
            Some(SymbolKind::DlP0) | Some(SymbolKind::UlP0) | None => None,
        })
        .collect();
    PhaseSchedule { per_symbol }
}

/// Derive the downlink surface channel from an uplink estimate:
/// `h_dl = h_ul * e^{j*(phi_dl - phi_ul)}`.
///
/// Valid because the per-element legs are reciprocal; only the common
/// dynamic phase differs between directions.
pub fn rotate_csi(h_ul: Complex64, phi_dl: f64, phi_ul: f64) -> Complex64 {
    h_ul * Complex64::from_polar(1.0, phi_dl - phi_ul)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_slot_plan;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn panel(phi_dl: f64, phi_ul: f64) -> RisPanel {
        RisPanel::new(vec![0.0; 4], phi_dl, phi_ul, 2).unwrap()
    }

    #[test]
    fn panel_construction_validates_lengths() {
        assert_eq!(RisPanel::new(vec![], 0.0, 0.0, 0), Err(RisError::Empty));
        let p = RisPanel::new(vec![0.1, 0.2], 0.0, 0.0, 0).unwrap();
        assert_eq!(p.m, 2);
    }

    #[test]
    fn random_phases_are_deterministic_per_seed_and_in_range() {
        let a = random_static_phases(64, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_static_phases(64, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(a.iter().all(|&p| (0.0..std::f64::consts::TAU).contains(&p)));
    }

    #[test]
    fn aligned_phases_make_every_cascade_term_real_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let first: Vec<Complex64> =
            (0..32).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let second: Vec<Complex64> =
            (0..32).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let phases = align_static_phases(&first, &second).unwrap();
        for ((a, b), phi) in first.iter().zip(&second).zip(&phases) {
            let term = Complex64::from_polar(1.0, *phi) * a * b;
            assert!(term.im.abs() < 1e-12 * term.norm().max(1e-300));
            assert!(term.re >= -1e-15);
        }
    }

    #[test]
    fn align_rejects_mismatched_or_empty_legs() {
        let one = vec![Complex64::new(1.0, 0.0)];
        assert_eq!(
            align_static_phases(&one, &[]),
            Err(RisError::LegMismatch { first: 1, second: 0 })
        );
        assert_eq!(align_static_phases(&[], &[]), Err(RisError::Empty));
    }

    #[test]
    fn schedule_follows_the_protocol_case_split() {
        let slot = default_slot_plan(22).unwrap();
        let p = panel(0.7, -1.3);
        let s = schedule_phases(&p, &slot, true);
        assert_eq!(s.phase_at(0), None); // dl_p0: panel off
        assert_eq!(s.phase_at(1), None); // ul_p0: panel off
        assert_eq!(s.phase_at(2), Some(0.7)); // dl_p1
        assert_eq!(s.phase_at(3), Some(-1.3)); // ul_p1
        assert_eq!(s.phase_at(4), Some(-1.3)); // dl_p2 carries the uplink phase
        assert_eq!(s.phase_at(5), Some(0.7)); // downlink data
        assert_eq!(s.phase_at(14), Some(-1.3)); // uplink data
        assert_eq!(s.phase_at(22), None); // out of range

        let unflipped = schedule_phases(&p, &slot, false);
        assert_eq!(unflipped.phase_at(4), Some(0.7));
    }

    #[test]
    fn rotate_csi_matches_the_direction_identity() {
        let h_ul = Complex64::new(0.3, -1.1);
        let phi_dl = 0.9;
        let phi_ul = 2.4;
        let h_dl = rotate_csi(h_ul, phi_dl, phi_ul);
        // Deriving back with swapped phases restores the input exactly.
        let back = rotate_csi(h_dl, phi_ul, phi_dl);
        assert!((back - h_ul).norm() < 1e-15);
        // Explicit form.
        let expect = h_ul * Complex64::from_polar(1.0, phi_dl - phi_ul);
        assert_eq!(h_dl, expect);
    }

    proptest! {
        #[test]
        fn schedule_covers_exactly_the_non_stage0_symbols(n_total in 6usize..40) {
            let slot = default_slot_plan(n_total).unwrap();
            let p = panel(1.0, 2.0);
            let s = schedule_phases(&p, &slot, true);
            for n in 0..n_total {
                let kind = slot.kind_of(n).unwrap();
                match kind {
                    SymbolKind::DlP0 | SymbolKind::UlP0 => prop_assert_eq!(s.phase_at(n), None),
                    SymbolKind::DlData | SymbolKind::DlP1 => prop_assert_eq!(s.phase_at(n), Some(1.0)),
                    _ => prop_assert_eq!(s.phase_at(n), Some(2.0)),
                }
            }
        }
    }
}
