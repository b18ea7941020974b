//! Propagation model: non-line-of-sight pathloss, link budgets derived from
//! geometry, per-element Rayleigh channel draws, cascaded panel responses,
//! and the effective end-to-end channel per OFDM symbol.
//!
//! Every scalar link (and every panel-element leg) is an independent
//! circularly-symmetric complex Gaussian whose variance is the linear
//! pathloss gain of its distance. A panel's cascade toward a receiver is
//! `sum_m e^{j*phase_m} * leg1_m * leg2_m`; with random static phases it is
//! itself asymptotically complex Gaussian of mean power
//! `M * var(leg1) * var(leg2)`, which is what the closed-form analysis uses.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::phy::sample_noise;
use crate::ris::{schedule_phases, PhaseSchedule, RisPanel};
use crate::scenario::{Direction, ScenarioConfig, SlotPlan};

/// Errors from the propagation model.
#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    /// The pathloss model is calibrated for distances of at least one meter.
    #[error("pathloss undefined for distance {distance} m (model valid for d >= 1 m)")]
    InvalidDistance { distance: f64 },
    /// Two nodes that need a link sit at the same point.
    #[error("degenerate geometry: {link} distance is {distance} m")]
    DegenerateGeometry { link: &'static str, distance: f64 },
    /// Cascade legs must pair up element-wise with the phase vector.
    #[error("cascade length mismatch: {phases} phases, {first} x {second} legs")]
    CascadeMismatch { phases: usize, first: usize, second: usize },
    /// An empty cascade has no response.
    #[error("cascade must have at least one element")]
    EmptyCascade,
    /// Variances must be non-negative and finite.
    #[error("invalid variance {value} for {name}")]
    InvalidVariance { name: &'static str, value: f64 },
}

/// Non-line-of-sight pathloss in dB:
/// `33 + 25.5*log10(d_m) + 20*log10(f_GHz)`, valid for `d >= 1` m.
pub fn pathloss_db(distance_m: f64, carrier_ghz: f64) -> Result<f64, ChannelError> {
    if distance_m < 1.0 || !distance_m.is_finite() {
        return Err(ChannelError::InvalidDistance { distance: distance_m });
    }
    Ok(33.0 + 25.5 * distance_m.log10() + 20.0 * carrier_ghz.log10())
}

/// Linear power gain of the same pathloss: `10^(-PL_dB/10)`.
pub fn pathloss_nlos(distance_m: f64, carrier_ghz: f64) -> Result<f64, ChannelError> {
    Ok(10f64.powf(-pathloss_db(distance_m, carrier_ghz)? / 10.0))
}

/// Per-link variances and the effective noise level for one scenario.
///
/// Symbols are normalized to unit power, so the whole power budget lives in
/// `sigma_w2 = noise_lin / tx_lin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Direct base-station–user link variance.
    pub sigma_d2: f64,
    /// Base-station–defensive-surface element variance.
    pub sigma_qa2: f64,
    /// Defensive-surface–user element variance.
    pub sigma_ga2: f64,
    /// Base-station–adversary-panel element variance.
    pub sigma_qe2: f64,
    /// Adversary-panel–user element variance.
    pub sigma_ge2: f64,
    /// Adversary-panel–adversary-receiver element variance.
    pub sigma_gv2: f64,
    /// Effective noise variance relative to unit symbol power.
    pub sigma_w2: f64,
}

/// Derive the link budget from geometry, applying any explicit overrides.
pub fn derive_link_budget(cfg: &ScenarioConfig) -> Result<LinkBudget, ChannelError> {
    let g = &cfg.geometry;
    let link = |name: &'static str,
                a: &crate::scenario::Position,
                b: &crate::scenario::Position,
                ov: Option<f64>|
     -> Result<f64, ChannelError> {
        if let Some(v) = ov {
            if v < 0.0 || !v.is_finite() {
                return Err(ChannelError::InvalidVariance { name, value: v });
            }
            return Ok(v);
        }
        let d = a.distance(b);
        if d == 0.0 {
            return Err(ChannelError::DegenerateGeometry { link: name, distance: d });
        }
        pathloss_nlos(d, g.carrier_ghz)
    };
    let sigma_d2 = link("sigma_d2", &g.bs, &g.ue, cfg.budget.sigma_d2)?;
    let sigma_qa2 = link("sigma_qa2", &g.bs, &g.dris, cfg.budget.sigma_qa2)?;
    let sigma_ga2 = link("sigma_ga2", &g.dris, &g.ue, cfg.budget.sigma_ga2)?;
    let sigma_qe2 = link("sigma_qe2", &g.bs, &g.aris, cfg.budget.sigma_qe2)?;
    let sigma_ge2 = link("sigma_ge2", &g.aris, &g.ue, cfg.budget.sigma_ge2)?;
    let sigma_gv2 = link("sigma_gv2", &g.aris, &g.eve, cfg.budget.sigma_gv2)?;
    let sigma_w2 = 10f64.powf((cfg.power.noise_dbm - cfg.power.tx_power_dbm) / 10.0);
    Ok(LinkBudget { sigma_d2, sigma_qa2, sigma_ga2, sigma_qe2, sigma_ge2, sigma_gv2, sigma_w2 })
}

/// One draw of every small-scale channel coefficient in the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Direct base-station–user coefficient.
    pub h_d: Complex64,
    /// Base-station–defensive-surface legs (length `m_a`).
    pub q_a: Vec<Complex64>,
    /// Defensive-surface–user legs (length `m_a`).
    pub g_a: Vec<Complex64>,
    /// Base-station–adversary-panel legs (length `m_e`).
    pub q_e: Vec<Complex64>,
    /// Adversary-panel–user legs (length `m_e`).
    pub g_e: Vec<Complex64>,
    /// Adversary-panel–adversary-receiver legs (length `m_e`).
    pub g_v: Vec<Complex64>,
}

/// Draw a complete channel realization. The draw order is fixed (`h_d`,
/// `q_a`, `g_a`, `q_e`, `g_e`, `g_v`) so results are reproducible from the
/// RNG state alone.
pub fn sample_realization(
    budget: &LinkBudget,
    m_a: usize,
    m_e: usize,
    rng: &mut impl Rng,
) -> ChannelRealization {
    let h_d = sample_noise(budget.sigma_d2, rng);
    let q_a = (0..m_a).map(|_| sample_noise(budget.sigma_qa2, rng)).collect();
    let g_a = (0..m_a).map(|_| sample_noise(budget.sigma_ga2, rng)).collect();
    let q_e = (0..m_e).map(|_| sample_noise(budget.sigma_qe2, rng)).collect();
    let g_e = (0..m_e).map(|_| sample_noise(budget.sigma_ge2, rng)).collect();
    let g_v = (0..m_e).map(|_| sample_noise(budget.sigma_gv2, rng)).collect();
    ChannelRealization { h_d, q_a, g_a, q_e, g_e, g_v }
}

/// Cascaded panel response `sum_m e^{j*phases[m]} * first[m] * second[m]`.
pub fn cascaded_response(
    phases: &[f64],
    first: &[Complex64],
    second: &[Complex64],
) -> Result<Complex64, ChannelError> {
    if phases.len() != first.len() || first.len() != second.len() {
        return Err(ChannelError::CascadeMismatch {
            phases: phases.len(),
            first: first.len(),
            second: second.len(),
        });
    }
    if phases.is_empty() {
        return Err(ChannelError::EmptyCascade);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&phi, a), b) in phases.iter().zip(first).zip(second) {
        acc += Complex64::from_polar(1.0, phi) * a * b;
    }
    Ok(acc)
}

/// The scene's effective scalar channels for one slot, assembled once from
/// a realization and the two panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannels {
    /// Direct link.
    pub h_d: Complex64,
    /// Defensive-surface cascade before the common dynamic phase.
    pub h_a: Complex64,
    /// Surface cascade on downlink symbols: `e^{j*phi_dl} * h_a`.
    pub h_a_dl: Complex64,
    /// Surface cascade on uplink symbols: `e^{j*phi_ul} * h_a`.
    pub h_a_ul: Complex64,
    /// Adversary-panel cascade toward the user (downlink-side coupling).
    pub h_e_u: Complex64,
    /// Adversary-panel cascade toward the base station (uplink-side coupling).
    pub h_e_b: Complex64,
}

/// Assemble the effective channels from a realization and the two panels.
pub fn effective_channels(
    real: &ChannelRealization,
    dris: &RisPanel,
    adv: &RisPanel,
) -> Result<EffectiveChannels, ChannelError> {
    let h_a = cascaded_response(&dris.static_phases, &real.q_a, &real.g_a)?;
    let h_e_u = cascaded_response(&adv.static_phases, &real.g_v, &real.g_e)?;
    let h_e_b = cascaded_response(&adv.static_phases, &real.g_v, &real.q_e)?;
    Ok(EffectiveChannels {
        h_d: real.h_d,
        h_a,
        h_a_dl: h_a * Complex64::from_polar(1.0, dris.phi_dl),
        h_a_ul: h_a * Complex64::from_polar(1.0, dris.phi_ul),
        h_e_u,
        h_e_b,
    })
}

/// Effective end-to-end channel seen by the receiver of symbol `n`:
/// the direct link, plus the defensive surface's cascade under its scheduled
/// dynamic phase when `dris_on`, plus the adversary panel's cascade toward
/// the receiving side when `adv_on`.
///
/// `dris_on`/`adv_on` carry the activation gating (training/activation
/// times); the schedule additionally keeps the surface off during stage-0
/// pilots regardless of `dris_on`.
#[allow(clippy::too_many_arguments)]
pub fn effective_response(
    real: &ChannelRealization,
    dris: &RisPanel,
    adv: &RisPanel,
    n: usize,
    slot: &SlotPlan,
    dris_on: bool,
    adv_on: bool,
    direction: Direction,
) -> Result<Complex64, ChannelError> {
    let schedule = schedule_phases(dris, slot, true);
    effective_response_scheduled(real, dris, adv, n, &schedule, dris_on, adv_on, direction)
}

/// [`effective_response`] with a precomputed schedule (avoids rebuilding it
/// per symbol in inner loops).
#[allow(clippy::too_many_arguments)]
pub fn effective_response_scheduled(
    real: &ChannelRealization,
    dris: &RisPanel,
    adv: &RisPanel,
    n: usize,
    schedule: &PhaseSchedule,
    dris_on: bool,
    adv_on: bool,
    direction: Direction,
) -> Result<Complex64, ChannelError> {
    let mut h = real.h_d;
    if dris_on {
        if let Some(phi) = schedule.phase_at(n) {
            let h_a = cascaded_response(&dris.static_phases, &real.q_a, &real.g_a)?;
            h += h_a * Complex64::from_polar(1.0, phi);
        }
    }
    if adv_on {
        let h_e = match direction {
            Direction::Downlink => cascaded_response(&adv.static_phases, &real.g_v, &real.g_e)?,
            Direction::Uplink => cascaded_response(&adv.static_phases, &real.g_v, &real.q_e)?,
        };
        h += h_e;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris::random_static_phases;
    use crate::scenario::{default_config, default_slot_plan};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Frozen oracle anchors for the pathloss model.
    #[test]
    fn pathloss_matches_frozen_anchors() {
        assert_relative_eq!(pathloss_db(1.0, 1.0).unwrap(), 33.0, max_relative = 1e-12);
        assert_relative_eq!(pathloss_db(20.0, 3.5).unwrap(), 77.0576257764, max_relative = 1e-10);
        assert_relative_eq!(pathloss_db(125f64.sqrt(), 3.5).unwrap(), 70.6169635529, max_relative = 1e-10);
        assert_relative_eq!(pathloss_db(5.0, 3.5).unwrap(), 61.7050959976, max_relative = 1e-10);
        assert_relative_eq!(pathloss_nlos(20.0, 3.5).unwrap(), 1.968962398e-8, max_relative = 1e-9);
        assert_relative_eq!(pathloss_nlos(125f64.sqrt(), 3.5).unwrap(), 8.675682395e-8, max_relative = 1e-9);
        assert_relative_eq!(pathloss_nlos(5.0, 3.5).unwrap(), 6.752901270e-7, max_relative = 1e-9);
    }

    #[test]
    fn pathloss_slope_is_25p5_db_per_decade() {
        let a = pathloss_db(2.0, 3.5).unwrap();
        let b = pathloss_db(20.0, 3.5).unwrap();
        assert_relative_eq!(b - a, 25.5, max_relative = 1e-12);
    }

    #[test]
    fn pathloss_rejects_sub_meter_distances() {
        assert_eq!(pathloss_db(0.5, 3.5), Err(ChannelError::InvalidDistance { distance: 0.5 }));
        assert!(pathloss_db(f64::NAN, 3.5).is_err());
    }

    #[test]
    fn default_budget_matches_geometry_and_is_symmetric() {
        let cfg = default_config();
        let b = derive_link_budget(&cfg).unwrap();
        assert_relative_eq!(b.sigma_d2, 1.968962398e-8, max_relative = 1e-9);
        // Both surfaces sit 5 m off the 20 m axis at its midpoint, so all
        // four panel legs share one distance.
        assert_eq!(b.sigma_qa2, b.sigma_ga2);
        assert_eq!(b.sigma_qa2, b.sigma_qe2);
        assert_eq!(b.sigma_qe2, b.sigma_ge2);
        assert_relative_eq!(b.sigma_qa2, 8.675682395e-8, max_relative = 1e-9);
        // The adversary receiver is closer to her panel than any other node.
        assert!(b.sigma_gv2 > b.sigma_qa2);
        assert_relative_eq!(b.sigma_gv2, 6.752901270e-7, max_relative = 1e-9);
        // -130 dBm noise at -30 dBm transmit power.
        assert_relative_eq!(b.sigma_w2, 1e-10, max_relative = 1e-12);
    }

    #[test]
    fn budget_overrides_win_over_geometry() {
        let mut cfg = default_config();
        cfg.budget.sigma_d2 = Some(0.0);
        cfg.budget.sigma_gv2 = Some(0.25);
        let b = derive_link_budget(&cfg).unwrap();
        assert_eq!(b.sigma_d2, 0.0);
        assert_eq!(b.sigma_gv2, 0.25);
        cfg.budget.sigma_d2 = Some(-1.0);
        assert!(matches!(derive_link_budget(&cfg), Err(ChannelError::InvalidVariance { .. })));
    }

    #[test]
    fn degenerate_geometry_is_reported() {
        let mut cfg = default_config();
        cfg.geometry.ue = cfg.geometry.bs;
        assert!(matches!(
            derive_link_budget(&cfg),
            Err(ChannelError::DegenerateGeometry { link: "sigma_d2", .. })
        ));
    }

    #[test]
    fn realization_has_the_right_shapes_and_variances() {
        let budget = LinkBudget {
            sigma_d2: 0.5,
            sigma_qa2: 1.0,
            sigma_ga2: 2.0,
            sigma_qe2: 0.25,
            sigma_ge2: 0.75,
            sigma_gv2: 1.5,
            sigma_w2: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 4000;
        let m = 16;
        let mut acc = [0.0f64; 6];
        for _ in 0..trials {
            let r = sample_realization(&budget, m, m, &mut rng);
            assert_eq!(r.q_a.len(), m);
            assert_eq!(r.g_v.len(), m);
            acc[0] += r.h_d.norm_sqr();
            acc[1] += r.q_a.iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
            acc[2] += r.g_a.iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
            acc[3] += r.q_e.iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
            acc[4] += r.g_e.iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
            acc[5] += r.g_v.iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
        }
        let expect = [0.5, 1.0, 2.0, 0.25, 0.75, 1.5];
        for (a, e) in acc.iter().zip(expect) {
            assert_relative_eq!(a / trials as f64, e, max_relative = 0.05);
        }
    }

    #[test]
    fn cascade_validates_lengths_and_matches_a_manual_sum() {
        let phases = [0.5, -1.0];
        let a = [Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)];
        let b = [Complex64::new(0.5, 0.0), Complex64::new(1.0, 1.0)];
        let got = cascaded_response(&phases, &a, &b).unwrap();
        let want = Complex64::from_polar(1.0, 0.5) * a[0] * b[0]
            + Complex64::from_polar(1.0, -1.0) * a[1] * b[1];
        assert!((got - want).norm() < 1e-15);
        assert!(matches!(
            cascaded_response(&phases, &a[..1], &b),
            Err(ChannelError::CascadeMismatch { .. })
        ));
        assert_eq!(cascaded_response(&[], &[], &[]), Err(ChannelError::EmptyCascade));
    }

    #[test]
    fn incoherent_cascade_mean_power_is_m_times_leg_variances() {
        let budget = LinkBudget {
            sigma_d2: 0.0,
            sigma_qa2: 0.8,
            sigma_ga2: 1.3,
            sigma_qe2: 1.0,
            sigma_ge2: 1.0,
            sigma_gv2: 1.0,
            sigma_w2: 0.0,
        };
        let m = 64;
        let trials = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut acc = 0.0;
        for _ in 0..trials {
            let r = sample_realization(&budget, m, 1, &mut rng);
            let phases = random_static_phases(m, &mut rng);
            acc += cascaded_response(&phases, &r.q_a, &r.g_a).unwrap().norm_sqr();
        }
        let mean = acc / trials as f64;
        assert_relative_eq!(mean, m as f64 * 0.8 * 1.3, max_relative = 0.03);
    }

    #[test]
    fn coherent_cascade_magnitude_concentrates_at_the_aligned_mean() {
        let budget = LinkBudget {
            sigma_d2: 0.0,
            sigma_qa2: 1.0,
            sigma_ga2: 1.0,
            sigma_qe2: 1.0,
            sigma_ge2: 1.0,
            sigma_gv2: 1.0,
            sigma_w2: 0.0,
        };
        let m = 256;
        let trials = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut acc = 0.0;
        for _ in 0..trials {
            let r = sample_realization(&budget, m, 1, &mut rng);
            let phases = crate::ris::align_static_phases(&r.q_a, &r.g_a).unwrap();
            acc += cascaded_response(&phases, &r.q_a, &r.g_a).unwrap().re;
        }
        let mean = acc / trials as f64;
        // Each aligned term has mean (pi/4) * sigma_q * sigma_g.
        assert_relative_eq!(mean, m as f64 * std::f64::consts::FRAC_PI_4, max_relative = 0.01);
    }

    #[test]
    fn effective_response_composes_the_gated_terms() {
        let budget = LinkBudget {
            sigma_d2: 1.0,
            sigma_qa2: 1.0,
            sigma_ga2: 1.0,
            sigma_qe2: 1.0,
            sigma_ge2: 1.0,
            sigma_gv2: 1.0,
            sigma_w2: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = 8;
        let r = sample_realization(&budget, m, m, &mut rng);
        let dris =
            RisPanel::new(random_static_phases(m, &mut rng), 0.4, -0.9, 2).unwrap();
        let adv = RisPanel::new(random_static_phases(m, &mut rng), 0.0, 0.0, 0).unwrap();
        let slot = default_slot_plan(22).unwrap();

        let h_a = cascaded_response(&dris.static_phases, &r.q_a, &r.g_a).unwrap();
        let h_e_u = cascaded_response(&adv.static_phases, &r.g_v, &r.g_e).unwrap();
        let h_e_b = cascaded_response(&adv.static_phases, &r.g_v, &r.q_e).unwrap();

        // Stage-0 pilot: surface off by protocol even when activated.
        let h = effective_response(&r, &dris, &adv, 0, &slot, true, false, Direction::Downlink)
            .unwrap();
        assert!((h - r.h_d).norm() < 1e-15);

        // Stage-1 downlink pilot with both panels on.
        let h = effective_response(&r, &dris, &adv, 2, &slot, true, true, Direction::Downlink)
            .unwrap();
        let want = r.h_d + h_a * Complex64::from_polar(1.0, 0.4) + h_e_u;
        assert!((h - want).norm() < 1e-12 * want.norm());

        // Flipped stage: downlink symbol, uplink phase.
        let h = effective_response(&r, &dris, &adv, 4, &slot, true, false, Direction::Downlink)
            .unwrap();
        let want = r.h_d + h_a * Complex64::from_polar(1.0, -0.9);
        assert!((h - want).norm() < 1e-12 * want.norm());

        // Uplink data with the adversary on couples through her BS-side legs.
        let h = effective_response(&r, &dris, &adv, 14, &slot, false, true, Direction::Uplink)
            .unwrap();
        let want = r.h_d + h_e_b;
        assert!((h - want).norm() < 1e-12 * want.norm());

        // Effective-channel assembly agrees with the per-symbol composition.
        let eff = effective_channels(&r, &dris, &adv).unwrap();
        assert!((eff.h_a - h_a).norm() < 1e-15);
        assert!((eff.h_a_dl - h_a * Complex64::from_polar(1.0, 0.4)).norm() < 1e-15);
        assert!((eff.h_e_u - h_e_u).norm() < 1e-15);
        assert!((eff.h_e_b - h_e_b).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn pathloss_gain_is_monotone_in_distance(
            d1 in 1.0f64..1000.0,
            factor in 1.01f64..10.0,
            f in 0.5f64..30.0,
        ) {
            let g1 = pathloss_nlos(d1, f).unwrap();
            let g2 = pathloss_nlos(d1 * factor, f).unwrap();
            prop_assert!(g2 < g1);
        }
    }
}
