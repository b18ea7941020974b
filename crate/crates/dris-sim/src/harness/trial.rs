//! One defended slot end to end, and one Monte-Carlo trial around it.
//!
//! A slot runs pilots first (both sides collect stage estimates), then the
//! estimation protocol, then data symbols under the recovered precoders and
//! combiners while the adversary acts per her mode and timers.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::adversary::{advance, decode_eavesdropped, eavesdrop, inject, EveState, SearchRegime};
use crate::analysis::beta_threshold;
use crate::cep::{
    bs_derive_dl, collect_stages, detect_pollution, pilot_symbol, recover_csi, CepError,
    CsiResult, ScenarioTag, Side, StageEstimates, POLLUTION_SER_THRESHOLD,
};
use crate::channel::{derive_link_budget, effective_channels, sample_realization, LinkBudget};
use crate::phy::{
    build_precoders, combine, decide, random_symbol, symbol_error_rate, transmit, Constellation,
};
use crate::ris::{align_static_phases, random_static_phases, schedule_phases, RisPanel};
use crate::rng::trial_rng;
use crate::scenario::{
    AdversaryMode, AdversaryTiming, Direction, GainMode, ScenarioConfig, SlotPlan,
};

use super::HarnessError;

/// Everything one defended slot needs, already reduced to effective scalar
/// channels.
#[derive(Debug, Clone, Copy)]
pub struct SlotInputs<'a> {
    /// Slot layout.
    pub slot: &'a SlotPlan,
    /// Data constellation.
    pub constellation: Constellation,
    /// Direct base-station–user channel.
    pub h_d: Complex64,
    /// Defensive-surface cascade before the common dynamic phase.
    pub h_a: Complex64,
    /// Downlink common phase.
    pub phi_dl: f64,
    /// Uplink common phase.
    pub phi_ul: f64,
    /// Adversary-panel cascade coupling into the user's receiver.
    pub h_e_u: Complex64,
    /// Adversary-panel cascade coupling into the base station's receiver.
    pub h_e_b: Complex64,
    /// First symbol at which the defensive surface is active.
    pub dris_active_from: usize,
    /// Adversary timers, activation and mode.
    pub timing: AdversaryTiming,
    /// Which search timer set applies to the adversary.
    pub regime: SearchRegime,
    /// Noise variance on pilot receptions.
    pub pilot_noise: f64,
    /// Noise variance on downlink data receptions.
    pub data_noise_dl: f64,
    /// Noise variance on uplink data receptions.
    pub data_noise_ul: f64,
    /// Noise variance at the adversary's receiver.
    pub eve_noise: f64,
    /// Symbol-error rate above which a slot is flagged polluted.
    pub detection_threshold: f64,
}

/// What one defended slot produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// Timeline the estimation assumed (from the adversary's actual pilot
    /// activity).
    pub tag: ScenarioTag,
    /// User-side recovered channel state.
    pub ue_csi: CsiResult,
    /// Base-station-side recovered channel state (downlink filled by phase
    /// rotation).
    pub bs_csi: CsiResult,
    /// User-side stage averages.
    pub ue_stages: StageEstimates,
    /// Base-station-side stage averages.
    pub bs_stages: StageEstimates,
    /// Downlink data symbol-error rate (0 when the slot has no downlink
    /// data).
    pub ser_dl: f64,
    /// Uplink data symbol-error rate (0 when the slot has no uplink data).
    pub ser_ul: f64,
    /// Downlink data symbols carried.
    pub dl_symbols: usize,
    /// Uplink data symbols carried.
    pub ul_symbols: usize,
    /// Adversary's downlink-eavesdropping symbol-error rate, when she
    /// listened.
    pub eve_ser_dl: Option<f64>,
    /// Adversary's uplink-eavesdropping symbol-error rate, when she
    /// listened.
    pub eve_ser_ul: Option<f64>,
    /// Fake symbols she injected during data.
    pub fake_injected: usize,
    /// Injected symbols the legitimate receiver decoded as hers.
    pub fake_decoded: usize,
    /// The receivers flagged the slot (validation error rate above
    /// threshold in either direction).
    pub flagged: bool,
}

/// Compose the true channel seen by a data receiver: the defensive
/// surface's cascade under its scheduled phase when active. The direct path
/// does not carry defended data — the scheme moves the whole data link onto
/// the surface so the per-direction phases protect every data symbol.
fn surface_channel(
    h_a: Complex64,
    schedule_phase: Option<f64>,
    n: usize,
    active_from: usize,
) -> Complex64 {
    if n >= active_from {
        schedule_phase.map(|phi| h_a * Complex64::from_polar(1.0, phi)).unwrap_or_default()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Run one defended slot: pilots, estimation, precoded data, adversary.
///
/// Requires every pilot symbol to precede every data symbol (the protocol
/// cannot precode data before estimation finishes).
pub fn run_defended_slot(
    inp: &SlotInputs<'_>,
    rng: &mut impl Rng,
) -> Result<SlotOutcome, HarnessError> {
    inp.slot.validate()?;
    inp.timing.validate()?;
    let first_data = inp.slot.first_data_symbol().unwrap_or(inp.slot.n_total);
    if let Some(last_pilot) = inp.slot.pilot_indices().into_iter().max() {
        if last_pilot > first_data {
            return Err(HarnessError::PilotAfterData { pilot: last_pilot, data: first_data });
        }
    }

    // Single-element stand-in panel: only the common phases and activation
    // matter for the schedule and the phase-rotation derivation.
    let panel = RisPanel::new(vec![0.0], inp.phi_dl, inp.phi_ul, inp.dris_active_from)?;
    let schedule = schedule_phases(&panel, inp.slot, true);
    let pilot = pilot_symbol();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    let mut eve = EveState::new(inp.timing, inp.regime);
    advance(&mut eve, 0); // timers of zero grant knowledge from the first symbol

    // Pilot phase: both sides record their receptions.
    let mut ue_pilots = Vec::new();
    let mut bs_pilots = Vec::new();
    let mut pilots_seen = 0usize;
    let mut eve_active_pilots = 0usize;
    for n in 0..first_data {
        let kind = inp.slot.kind_of(n).expect("indices below n_total are planned");
        let direction = kind.direction();
        pilots_seen += 1;
        let mut h = inp.h_d + surface_channel(inp.h_a, schedule.phase_at(n), n, inp.dris_active_from);
        if eve.active_at(n, inp.dris_active_from) {
            eve_active_pilots += 1;
            h += match direction {
                Direction::Downlink => inp.h_e_u,
                Direction::Uplink => inp.h_e_b,
            };
        }
        let sample = transmit(&pilot, one, h, zero, inp.pilot_noise, n, rng);
        match direction {
            Direction::Downlink => ue_pilots.push(sample),
            Direction::Uplink => bs_pilots.push(sample),
        }
        advance(&mut eve, 1);
    }

    // Estimation: classify the timeline by her observed pilot activity,
    // then recover per-side channel state.
    let tag = if eve_active_pilots == 0 {
        ScenarioTag::Opt1
    } else if eve_active_pilots == pilots_seen {
        ScenarioTag::Opt2
    } else {
        ScenarioTag::Polluted
    };
    let ue_stages = collect_stages(&ue_pilots, inp.slot, Side::Ue)?;
    let bs_stages = collect_stages(&bs_pilots, inp.slot, Side::Bs)?;
    let ue_csi = recover_csi(&ue_stages, tag)?;
    let bs_csi = bs_derive_dl(&recover_csi(&bs_stages, tag)?, &panel)?;

    let ue_pair = build_precoders(
        ue_csi.h_a_dl.ok_or(CepError::MissingStage("downlink stage 1"))?,
        ue_csi.h_a_ul.ok_or(CepError::MissingStage("downlink stage 2"))?,
    )?;
    let bs_pair = build_precoders(
        bs_csi.h_a_dl.ok_or(CepError::NoUplinkEstimate)?,
        bs_csi.h_a_ul.ok_or(CepError::MissingStage("uplink stage 1"))?,
    )?;

    // Data phase.
    let mut dl_sent = Vec::new();
    let mut dl_decided = Vec::new();
    let mut ul_sent = Vec::new();
    let mut ul_decided = Vec::new();
    let mut eve_dl_sent = Vec::new();
    let mut eve_dl_decided = Vec::new();
    let mut eve_ul_sent = Vec::new();
    let mut eve_ul_decided = Vec::new();
    let mut fake_injected = 0usize;
    let mut fake_decoded = 0usize;
    let injecting = matches!(inp.timing.mode, AdversaryMode::Inject | AdversaryMode::PolluteCep);

    for n in first_data..inp.slot.n_total {
        let kind = inp.slot.kind_of(n).expect("indices below n_total are planned");
        let direction = kind.direction();
        let h_true = surface_channel(inp.h_a, schedule.phase_at(n), n, inp.dris_active_from);
        let x = random_symbol(inp.constellation, rng);
        let eve_on = eve.active_at(n, inp.dris_active_from);

        let mut interference = zero;
        let mut fake = None;
        if injecting && eve_on {
            let f = random_symbol(inp.constellation, rng);
            let (h_e, theta) = match direction {
                Direction::Downlink => (inp.h_e_u, ue_pair.theta_ul),
                Direction::Uplink => (inp.h_e_b, bs_pair.theta_dl),
            };
            eve.target_combiner = Some(theta);
            interference = inject(&f, h_e, &eve);
            fake_injected += 1;
            fake = Some(f);
        }

        let decided = match direction {
            Direction::Downlink => {
                let y = transmit(&x, bs_pair.v_b, h_true, interference, inp.data_noise_dl, n, rng);
                let z = combine(&y, ue_pair.theta_ul).z.expect("combine sets z");
                let d = decide(z, ue_pair.ref_gain_dl, inp.constellation);
                dl_sent.push(x);
                dl_decided.push(d);
                if inp.timing.mode == AdversaryMode::Eavesdrop && eve_on {
                    let y_e = eavesdrop(bs_pair.v_b * x.value, inp.h_e_b, inp.eve_noise, rng);
                    let de = decode_eavesdropped(
                        y_e,
                        inp.h_e_b,
                        eve.knows_precoders.then_some(bs_pair.v_b),
                        inp.constellation,
                    )?;
                    eve_dl_sent.push(x);
                    eve_dl_decided.push(de);
                }
                d
            }
            Direction::Uplink => {
                let y = transmit(&x, ue_pair.v_u, h_true, interference, inp.data_noise_ul, n, rng);
                let z = combine(&y, bs_pair.theta_dl).z.expect("combine sets z");
                let d = decide(z, bs_pair.ref_gain_ul, inp.constellation);
                ul_sent.push(x);
                ul_decided.push(d);
                if inp.timing.mode == AdversaryMode::Eavesdrop && eve_on {
                    let y_e = eavesdrop(ue_pair.v_u * x.value, inp.h_e_u, inp.eve_noise, rng);
                    let de = decode_eavesdropped(
                        y_e,
                        inp.h_e_u,
                        eve.knows_precoders.then_some(ue_pair.v_u),
                        inp.constellation,
                    )?;
                    eve_ul_sent.push(x);
                    eve_ul_decided.push(de);
                }
                d
            }
        };
        if let Some(f) = fake {
            if decided.index == f.index {
                fake_decoded += 1;
            }
        }
        advance(&mut eve, 1);
    }

    let ser_dl =
        if dl_sent.is_empty() { 0.0 } else { symbol_error_rate(&dl_sent, &dl_decided)? };
    let ser_ul =
        if ul_sent.is_empty() { 0.0 } else { symbol_error_rate(&ul_sent, &ul_decided)? };
    let eve_ser_dl = if eve_dl_sent.is_empty() {
        None
    } else {
        Some(symbol_error_rate(&eve_dl_sent, &eve_dl_decided)?)
    };
    let eve_ser_ul = if eve_ul_sent.is_empty() {
        None
    } else {
        Some(symbol_error_rate(&eve_ul_sent, &eve_ul_decided)?)
    };
    let flagged = detect_pollution(ser_dl, inp.detection_threshold)
        || detect_pollution(ser_ul, inp.detection_threshold);

    Ok(SlotOutcome {
        tag,
        ue_csi,
        bs_csi,
        ue_stages,
        bs_stages,
        ser_dl,
        ser_ul,
        dl_symbols: dl_sent.len(),
        ul_symbols: ul_sent.len(),
        eve_ser_dl,
        eve_ser_ul,
        fake_injected,
        fake_decoded,
        flagged,
    })
}

/// Per-trial scalars kept for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    /// Downlink data symbol-error rate.
    pub ser_dl: f64,
    /// Uplink data symbol-error rate.
    pub ser_ul: f64,
    /// Downlink data symbols carried.
    pub dl_symbols: usize,
    /// Uplink data symbols carried.
    pub ul_symbols: usize,
    /// Adversary's downlink-eavesdropping symbol-error rate.
    pub eve_ser_dl: Option<f64>,
    /// Adversary's uplink-eavesdropping symbol-error rate.
    pub eve_ser_ul: Option<f64>,
    /// Fake symbols injected.
    pub fake_injected: usize,
    /// Fake symbols the legitimate side decoded as hers.
    pub fake_decoded: usize,
    /// The slot was flagged polluted.
    pub flagged: bool,
    /// The estimation timeline was actually polluted.
    pub polluted: bool,
    /// Instantaneous direct-link SNR `|h_d|^2 / sigma_w^2`.
    pub snr_d: f64,
    /// Instantaneous surface-cascade SNR `|h_a|^2 / sigma_w^2`.
    pub snr_a: f64,
    /// Instantaneous adversary-to-base-station SNR `|h_e_b|^2 / sigma_w^2`.
    pub snr_eb: f64,
    /// Instantaneous adversary-to-user SNR `|h_e_u|^2 / sigma_w^2`.
    pub snr_eu: f64,
    /// Her injected power at the user beats the decision threshold.
    pub fake_power_exceeds_ue: bool,
    /// Her injected power at the base station beats the decision threshold.
    pub fake_power_exceeds_bs: bool,
}

/// Run one Monte-Carlo trial: draw a channel realization and panel phases
/// from the trial's own stream, run the defended slot, reduce to metrics.
pub fn run_trial(
    cfg: &ScenarioConfig,
    budget: &LinkBudget,
    trial: u64,
) -> Result<TrialMetrics, HarnessError> {
    let mut rng = trial_rng(cfg.run.seed, trial);
    let real = sample_realization(budget, cfg.panels.m_a, cfg.panels.m_e, &mut rng);
    let statics = match cfg.run.gain_mode {
        GainMode::Incoherent => random_static_phases(cfg.panels.m_a, &mut rng),
        GainMode::Coherent => align_static_phases(&real.q_a, &real.g_a)?,
    };
    let phi_dl = cfg.panels.phi_dl.unwrap_or_else(|| rng.gen_range(0.0..TAU));
    let phi_ul = cfg.panels.phi_ul.unwrap_or_else(|| rng.gen_range(0.0..TAU));
    // Her static phases are always random: she cannot align what she cannot
    // measure element-by-element.
    let adv_statics = random_static_phases(cfg.panels.m_e, &mut rng);
    let active_from = cfg
        .panels
        .active_from
        .unwrap_or_else(|| cfg.slot.dl_p1.first().copied().unwrap_or(0));
    let dris = RisPanel::new(statics, phi_dl, phi_ul, active_from)?;
    let adv = RisPanel::new(adv_statics, 0.0, 0.0, 0)?;
    let eff = effective_channels(&real, &dris, &adv)?;

    let inputs = SlotInputs {
        slot: &cfg.slot,
        constellation: cfg.run.constellation,
        h_d: eff.h_d,
        h_a: eff.h_a,
        phi_dl,
        phi_ul,
        h_e_u: eff.h_e_u,
        h_e_b: eff.h_e_b,
        dris_active_from: active_from,
        timing: cfg.adversary,
        regime: SearchRegime::NonReciprocal,
        pilot_noise: budget.sigma_w2,
        data_noise_dl: budget.sigma_w2,
        data_noise_ul: budget.sigma_w2,
        eve_noise: budget.sigma_w2,
        detection_threshold: POLLUTION_SER_THRESHOLD,
    };
    let out = run_defended_slot(&inputs, &mut rng)?;
    let beta = beta_threshold(budget, cfg.panels.m_a);
    Ok(TrialMetrics {
        ser_dl: out.ser_dl,
        ser_ul: out.ser_ul,
        dl_symbols: out.dl_symbols,
        ul_symbols: out.ul_symbols,
        eve_ser_dl: out.eve_ser_dl,
        eve_ser_ul: out.eve_ser_ul,
        fake_injected: out.fake_injected,
        fake_decoded: out.fake_decoded,
        flagged: out.flagged,
        polluted: out.tag == ScenarioTag::Polluted,
        snr_d: eff.h_d.norm_sqr() / budget.sigma_w2,
        snr_a: eff.h_a.norm_sqr() / budget.sigma_w2,
        snr_eb: eff.h_e_b.norm_sqr() / budget.sigma_w2,
        snr_eu: eff.h_e_u.norm_sqr() / budget.sigma_w2,
        fake_power_exceeds_ue: eff.h_e_u.norm_sqr() > beta,
        fake_power_exceeds_bs: eff.h_e_b.norm_sqr() > beta,
    })
}

/// One worked estimation-protocol example: a seeded slot with noiseless
/// pilots, carrying the truth next to what the protocol recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct CepDemo {
    /// Scenario label (`opt1`, `opt2` or `polluted`).
    pub label: &'static str,
    /// True direct channel.
    pub truth_h_d: Complex64,
    /// True downlink surface channel.
    pub truth_h_a_dl: Complex64,
    /// True uplink surface channel.
    pub truth_h_a_ul: Complex64,
    /// True adversary coupling into the user.
    pub truth_h_e_u: Complex64,
    /// True adversary coupling into the base station.
    pub truth_h_e_b: Complex64,
    /// The slot's full outcome.
    pub outcome: SlotOutcome,
}

/// Run the worked estimation example for one scenario label.
///
/// `opt1` keeps the adversary off; `opt2` activates her panel from symbol 0
/// so she is present through every stage; `polluted` has her co-activate
/// with the surface mid-protocol. Pilots are noiseless so the stage
/// estimates land exactly on their targets.
pub fn run_cep_demo(cfg: &ScenarioConfig, scenario: &str) -> Result<CepDemo, HarnessError> {
    let mut cfg = cfg.clone();
    let label = match scenario {
        "opt1" => {
            cfg.adversary.mode = AdversaryMode::Off;
            "opt1"
        }
        "opt2" => {
            cfg.adversary.mode = AdversaryMode::Inject;
            cfg.adversary.activation_symbol = 0;
            "opt2"
        }
        "polluted" => {
            cfg.adversary.mode = AdversaryMode::PolluteCep;
            "polluted"
        }
        other => return Err(HarnessError::UnknownScenario(other.to_string())),
    };
    let budget = derive_link_budget(&cfg)?;
    let mut rng = trial_rng(cfg.run.seed, 0);
    let real = sample_realization(&budget, cfg.panels.m_a, cfg.panels.m_e, &mut rng);
    let statics = match cfg.run.gain_mode {
        GainMode::Incoherent => random_static_phases(cfg.panels.m_a, &mut rng),
        GainMode::Coherent => align_static_phases(&real.q_a, &real.g_a)?,
    };
    let phi_dl = cfg.panels.phi_dl.unwrap_or_else(|| rng.gen_range(0.0..TAU));
    let phi_ul = cfg.panels.phi_ul.unwrap_or_else(|| rng.gen_range(0.0..TAU));
    let adv_statics = random_static_phases(cfg.panels.m_e, &mut rng);
    let active_from = cfg
        .panels
        .active_from
        .unwrap_or_else(|| cfg.slot.dl_p1.first().copied().unwrap_or(0));
    let dris = RisPanel::new(statics, phi_dl, phi_ul, active_from)?;
    let adv = RisPanel::new(adv_statics, 0.0, 0.0, 0)?;
    let eff = effective_channels(&real, &dris, &adv)?;

    let inputs = SlotInputs {
        slot: &cfg.slot,
        constellation: cfg.run.constellation,
        h_d: eff.h_d,
        h_a: eff.h_a,
        phi_dl,
        phi_ul,
        h_e_u: eff.h_e_u,
        h_e_b: eff.h_e_b,
        dris_active_from: active_from,
        timing: cfg.adversary,
        regime: SearchRegime::NonReciprocal,
        pilot_noise: 0.0,
        data_noise_dl: budget.sigma_w2,
        data_noise_ul: budget.sigma_w2,
        eve_noise: budget.sigma_w2,
        detection_threshold: POLLUTION_SER_THRESHOLD,
    };
    let outcome = run_defended_slot(&inputs, &mut rng)?;
    Ok(CepDemo {
        label,
        truth_h_d: eff.h_d,
        truth_h_a_dl: eff.h_a_dl,
        truth_h_a_ul: eff.h_a_ul,
        truth_h_e_u: eff.h_e_u,
        truth_h_e_b: eff.h_e_b,
        outcome,
    })
}
