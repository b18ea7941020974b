//! The acceptance suite: twelve timed pass/fail checks covering pilot
//! overhead, channel statistics, estimation exactness, the defense chain,
//! the adversary's regimes, closed-form orderings, detection, and
//! reproducibility. Each check reports one line; the suite passes when all
//! twelve do.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{decode_eavesdropped, eavesdrop, inject, EveState, SearchRegime};
use crate::analysis::{
    asr_timed, capacity, fake_prob_conditional, fake_prob_residual, mean_snrs,
    reciprocal_fake_prob,
};
use crate::cep::{ScenarioTag, POLLUTION_SER_THRESHOLD};
use crate::channel::{cascaded_response, derive_link_budget};
use crate::phy::{build_precoders, decide, random_symbol, sample_noise, Constellation};
use crate::ris::random_static_phases;
use crate::rng::trial_rng;
use crate::scenario::{
    default_slot_plan, efficiency, AdversaryMode, AdversaryTiming, ScenarioConfig, SlotPlan,
};

use super::output::render_sweep_csv;
use super::sweep::{run_sweep, SweepAxis};
use super::trial::{run_defended_slot, SlotInputs, SlotOutcome};
use super::HarnessError;

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    /// Check name.
    pub name: &'static str,
    /// The check's own assertion held.
    pub passed: bool,
    /// The check finished inside its time budget.
    pub within_budget: bool,
    /// Wall-clock time taken.
    pub elapsed: Duration,
    /// Time budget.
    pub budget: Duration,
    /// One-line explanation with the measured numbers.
    pub detail: String,
}

impl CriterionResult {
    /// Overall verdict: assertion held and the budget was met.
    pub fn ok(&self) -> bool {
        self.passed && self.within_budget
    }

    /// The one-line report for this check.
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.1}s/{:.0}s budget): {}",
            if self.ok() { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64(),
            self.detail
        )
    }
}

fn timed(
    name: &'static str,
    budget_s: f64,
    f: impl FnOnce() -> Result<(bool, String), HarnessError>,
) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    let budget = Duration::from_secs_f64(budget_s);
    CriterionResult { name, passed, within_budget: elapsed <= budget, elapsed, budget, detail }
}

/// Relative deviation with a floor on the reference magnitude.
fn rel(estimate: Complex64, truth: Complex64) -> f64 {
    (estimate - truth).norm() / truth.norm().max(1e-300)
}

/// One synthetic channel drawing for a slot-level check.
struct DrawnSlot {
    h_d: Complex64,
    h_a: Complex64,
    h_e_u: Complex64,
    h_e_b: Complex64,
    phi_dl: f64,
    phi_ul: f64,
}

impl DrawnSlot {
    /// Unit-power links and direct path drawn from standard complex normal.
    fn sample(rng: &mut impl Rng) -> DrawnSlot {
        DrawnSlot {
            h_d: sample_noise(1.0, rng),
            h_a: sample_noise(1.0, rng),
            h_e_u: sample_noise(1.0, rng),
            h_e_b: sample_noise(1.0, rng),
            phi_dl: rng.gen_range(0.0..TAU),
            phi_ul: rng.gen_range(0.0..TAU),
        }
    }

    /// Like [`DrawnSlot::sample`] but with unit-magnitude surface and
    /// adversary couplings (equal powers, random phases).
    fn sample_unit_magnitudes(rng: &mut impl Rng) -> DrawnSlot {
        DrawnSlot {
            h_d: sample_noise(1.0, rng),
            h_a: Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)),
            h_e_u: Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)),
            h_e_b: Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)),
            phi_dl: rng.gen_range(0.0..TAU),
            phi_ul: rng.gen_range(0.0..TAU),
        }
    }
}

fn synthetic_inputs<'a>(
    slot: &'a SlotPlan,
    draw: &DrawnSlot,
    mode: AdversaryMode,
    activation: usize,
    pilot_noise: f64,
    data_noise: f64,
) -> SlotInputs<'a> {
    SlotInputs {
        slot,
        constellation: Constellation::Qpsk,
        h_d: draw.h_d,
        h_a: draw.h_a,
        phi_dl: draw.phi_dl,
        phi_ul: draw.phi_ul,
        h_e_u: draw.h_e_u,
        h_e_b: draw.h_e_b,
        dris_active_from: slot.dl_p1.first().copied().unwrap_or(0),
        timing: AdversaryTiming {
            n_r: 1_000,
            n_n: 2_000,
            n_n_prime: 4_000,
            activation_symbol: activation,
            mode,
        },
        regime: SearchRegime::NonReciprocal,
        pilot_noise,
        data_noise_dl: data_noise,
        data_noise_ul: data_noise,
        eve_noise: data_noise,
        detection_threshold: POLLUTION_SER_THRESHOLD,
    }
}

fn run_noiseless(
    slot: &SlotPlan,
    draw: &DrawnSlot,
    mode: AdversaryMode,
    activation: usize,
    rng: &mut impl Rng,
) -> Result<SlotOutcome, HarnessError> {
    run_defended_slot(&synthetic_inputs(slot, draw, mode, activation, 0.0, 0.0), rng)
}

/// Pilot-overhead efficiencies for the three protocol variants on the
/// 22-symbol slot, checked exactly and after table rounding.
pub fn pilot_overhead_efficiency(_cfg: &ScenarioConfig) -> CriterionResult {
    timed("pilot_overhead_efficiency", 1.0, || {
        let n = 22usize;
        let slot = default_slot_plan(n)?;
        slot.validate()?;
        let e3 = efficiency(3, n)?;
        let e4 = efficiency(4, n)?;
        let e2 = efficiency(2, n)?;
        let r4 = |x: f64| (x * 1e4).round() / 1e4;
        let r2 = |x: f64| (x * 1e2).round() / 1e2;
        let exact = e3 == 19.0 / 22.0 && e4 == 18.0 / 22.0 && e2 == 20.0 / 22.0;
        let four = r4(e3) == 0.8636 && r4(e4) == 0.8182 && r4(e2) == 0.9091;
        let two = r2(e3) == 0.86 && r2(e4) == 0.82 && r2(e2) == 0.91;
        Ok((
            exact && four && two,
            format!(
                "3/4/2 pilots over {n} symbols: {:.4}/{:.4}/{:.4}, table-rounded {:.2}/{:.2}/{:.2}",
                e3, e4, e2, r2(e3), r2(e4), r2(e2)
            ),
        ))
    })
}

/// Sample means of the three cascade powers against their closed-form
/// values at panel size 1000.
pub fn cascade_mean_power(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    let cfg = cfg.clone();
    timed("cascade_mean_power", 30.0, move || {
        let budget = derive_link_budget(&cfg)?;
        let m = 1000usize;
        let trials = 100_000u64;
        let powers: Vec<(f64, f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<(f64, f64, f64), HarnessError> {
                let mut rng = trial_rng(seed ^ 0x5CA1E, t);
                let q_a: Vec<Complex64> =
                    (0..m).map(|_| sample_noise(budget.sigma_qa2, &mut rng)).collect();
                let g_a: Vec<Complex64> =
                    (0..m).map(|_| sample_noise(budget.sigma_ga2, &mut rng)).collect();
                let statics = random_static_phases(m, &mut rng);
                let h_a = cascaded_response(&statics, &q_a, &g_a)?;
                let q_e: Vec<Complex64> =
                    (0..m).map(|_| sample_noise(budget.sigma_qe2, &mut rng)).collect();
                let g_e: Vec<Complex64> =
                    (0..m).map(|_| sample_noise(budget.sigma_ge2, &mut rng)).collect();
                let g_v: Vec<Complex64> =
                    (0..m).map(|_| sample_noise(budget.sigma_gv2, &mut rng)).collect();
                let adv = random_static_phases(m, &mut rng);
                let h_e_u = cascaded_response(&adv, &g_v, &g_e)?;
                let h_e_b = cascaded_response(&adv, &g_v, &q_e)?;
                Ok((h_a.norm_sqr(), h_e_u.norm_sqr(), h_e_b.norm_sqr()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = trials as f64;
        let mut sums = [0.0f64; 3];
        for (a, u, b) in &powers {
            sums[0] += a;
            sums[1] += u;
            sums[2] += b;
        }
        let truth = [
            m as f64 * budget.sigma_qa2 * budget.sigma_ga2,
            m as f64 * budget.sigma_gv2 * budget.sigma_ge2,
            m as f64 * budget.sigma_gv2 * budget.sigma_qe2,
        ];
        let relerr: Vec<f64> =
            sums.iter().zip(&truth).map(|(s, t)| (s / n - t).abs() / t).collect();
        let ok = relerr.iter().all(|r| *r <= 0.02);
        Ok((
            ok,
            format!(
                "mean cascade powers off by {:.2}% / {:.2}% / {:.2}% (2% budget, 1e5 draws, 1000 elements)",
                relerr[0] * 100.0,
                relerr[1] * 100.0,
                relerr[2] * 100.0
            ),
        ))
    })
}

/// The adversary cascade's power tail against the exponential law at
/// thresholds of 0.5x, 1x and 2x its mean.
pub fn injection_power_tail(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    let cfg = cfg.clone();
    timed("injection_power_tail", 60.0, move || {
        let budget = derive_link_budget(&cfg)?;
        let trials = 100_000u64;
        let mut ok = true;
        let mut worst = 0.0f64;
        for (i, m_e) in [1000usize, 2000].into_iter().enumerate() {
            let chi = m_e as f64 * budget.sigma_gv2 * budget.sigma_qe2;
            let powers: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| -> Result<f64, HarnessError> {
                    let mut rng = trial_rng(seed ^ (0x7A11 + i as u64), t);
                    let g_v: Vec<Complex64> =
                        (0..m_e).map(|_| sample_noise(budget.sigma_gv2, &mut rng)).collect();
                    let q_e: Vec<Complex64> =
                        (0..m_e).map(|_| sample_noise(budget.sigma_qe2, &mut rng)).collect();
                    let statics = random_static_phases(m_e, &mut rng);
                    Ok(cascaded_response(&statics, &g_v, &q_e)?.norm_sqr())
                })
                .collect::<Result<Vec<_>, _>>()?;
            for ratio in [0.5, 1.0, 2.0] {
                let p_hat =
                    powers.iter().filter(|&&p| p > ratio * chi).count() as f64 / trials as f64;
                let p = (-ratio).exp();
                let tol = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
                let dev = (p_hat - p).abs() / tol;
                worst = worst.max(dev);
                ok &= dev <= 1.0;
            }
        }
        Ok((
            ok,
            format!(
                "tail probabilities within 3 binomial standard errors at all 6 thresholds \
(worst deviation {worst:.2} of allowance; panels 1000/2000, 1e5 draws each)"
            ),
        ))
    })
}

/// Noiseless estimation recovers the exact channels in the clean timelines
/// and the exact contamination (with the untrusted flag) in the polluted
/// one.
pub fn estimation_exactness(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    timed("estimation_exactness", 10.0, move || {
        let slot = default_slot_plan(22)?;
        let mut rng = trial_rng(seed ^ 0xCE9, 0);
        let mut max_rel = 0.0f64;
        let mut flags_ok = true;
        for _ in 0..1000 {
            let d = DrawnSlot::sample(&mut rng);
            let e_dl = Complex64::from_polar(1.0, d.phi_dl);
            let e_ul = Complex64::from_polar(1.0, d.phi_ul);

            let clean = run_noiseless(&slot, &d, AdversaryMode::Off, 5, &mut rng)?;
            flags_ok &= clean.tag == ScenarioTag::Opt1 && !clean.ue_csi.polluted;
            for (hat, truth) in [
                (clean.ue_csi.h_a_dl, d.h_a * e_dl),
                (clean.ue_csi.h_a_ul, d.h_a * e_ul),
                (clean.ue_csi.h_d, d.h_d),
                (clean.bs_csi.h_a_dl, d.h_a * e_dl),
                (clean.bs_csi.h_a_ul, d.h_a * e_ul),
            ] {
                max_rel = max_rel.max(rel(hat.expect("clean timeline recovers all"), truth));
            }

            let covered = run_noiseless(&slot, &d, AdversaryMode::Inject, 0, &mut rng)?;
            flags_ok &= covered.tag == ScenarioTag::Opt2
                && covered.ue_csi.h_d.is_none()
                && !covered.ue_csi.polluted;
            for (hat, truth) in [
                (covered.ue_csi.h_a_dl, d.h_a * e_dl),
                (covered.ue_csi.h_a_ul, d.h_a * e_ul),
                (covered.bs_csi.h_a_ul, d.h_a * e_ul),
                (covered.ue_csi.baseline_p0, d.h_d + d.h_e_u),
                (covered.bs_csi.baseline_p0, d.h_d + d.h_e_b),
            ] {
                max_rel = max_rel.max(rel(hat.expect("covered timeline recovers these"), truth));
            }

            let polluted = run_noiseless(&slot, &d, AdversaryMode::PolluteCep, 5, &mut rng)?;
            flags_ok &= polluted.tag == ScenarioTag::Polluted
                && polluted.ue_csi.polluted
                && polluted.bs_csi.polluted;
            for (hat, truth) in [
                (polluted.ue_csi.h_a_dl, d.h_a * e_dl + d.h_e_u),
                (polluted.ue_csi.h_a_ul, d.h_a * e_ul + d.h_e_u),
                (polluted.bs_csi.h_a_ul, d.h_a * e_ul + d.h_e_b),
            ] {
                max_rel = max_rel.max(rel(hat.expect("differences are still formed"), truth));
            }
        }
        let ok = max_rel <= 1e-12 && flags_ok;
        Ok((
            ok,
            format!(
                "max relative error {max_rel:.2e} over 1000 draws x 3 timelines (1e-12 budget); \
contamination exact and untrusted flag set: {flags_ok}"
            ),
        ))
    })
}

/// The base station's downlink estimate, derived purely by rotating its
/// uplink estimate with the announced phases, matches ground truth.
pub fn phase_flip_identity(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    timed("phase_flip_identity", 5.0, move || {
        let slot = default_slot_plan(22)?;
        let mut rng = trial_rng(seed ^ 0xF11F, 0);
        let mut max_rel = 0.0f64;
        for _ in 0..1000 {
            let d = DrawnSlot::sample(&mut rng);
            let out = run_noiseless(&slot, &d, AdversaryMode::Off, 5, &mut rng)?;
            let truth_dl = d.h_a * Complex64::from_polar(1.0, d.phi_dl);
            let truth_ul = d.h_a * Complex64::from_polar(1.0, d.phi_ul);
            max_rel = max_rel.max(rel(out.bs_csi.h_a_dl.expect("derived"), truth_dl));
            // The flipped pilot hands the user the uplink state the same way.
            max_rel = max_rel.max(rel(out.ue_csi.h_a_ul.expect("observed"), truth_ul));
        }
        Ok((
            max_rel <= 1e-12,
            format!(
                "rotation-derived downlink estimate within {max_rel:.2e} of truth over 1000 draws \
(1e-12 budget)"
            ),
        ))
    })
}

/// End-to-end defended data at 30 dB: both directions under 1e-3 symbol
/// errors across at least 1e5 symbols each.
pub fn defended_link_error_rate(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    timed("defended_link_error_rate", 30.0, move || {
        let slot = default_slot_plan(22)?;
        let mut rng = trial_rng(seed ^ 0xD474, 0);
        let noise = 1e-3; // unit surface power -> 30 dB effective SNR
        let mut errors = [0.0f64; 2];
        let mut symbols = [0usize; 2];
        for _ in 0..13_000 {
            let d = DrawnSlot {
                h_d: sample_noise(1.0, &mut rng),
                h_a: Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)),
                h_e_u: Complex64::new(0.0, 0.0),
                h_e_b: Complex64::new(0.0, 0.0),
                phi_dl: rng.gen_range(0.0..TAU),
                phi_ul: rng.gen_range(0.0..TAU),
            };
            let inp = synthetic_inputs(&slot, &d, AdversaryMode::Off, 5, 0.0, noise);
            let out = run_defended_slot(&inp, &mut rng)?;
            errors[0] += out.ser_dl * out.dl_symbols as f64;
            errors[1] += out.ser_ul * out.ul_symbols as f64;
            symbols[0] += out.dl_symbols;
            symbols[1] += out.ul_symbols;
        }
        let ser_dl = errors[0] / symbols[0] as f64;
        let ser_ul = errors[1] / symbols[1] as f64;
        let ok =
            ser_dl < 1e-3 && ser_ul < 1e-3 && symbols[0] >= 100_000 && symbols[1] >= 100_000;
        Ok((
            ok,
            format!(
                "downlink SER {ser_dl:.2e} over {} symbols, uplink SER {ser_ul:.2e} over {} \
symbols (bar 1e-3 at 30 dB)",
                symbols[0], symbols[1]
            ),
        ))
    })
}

/// The receive combiner strips an unaware adversary's injection down to the
/// random-quadrant floor; once she knows the combiner, a dominant injection
/// always lands.
pub fn combiner_rotation_defense(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    timed("combiner_rotation_defense", 60.0, move || {
        let trials = 100_000usize;
        let mut rng = trial_rng(seed ^ 0xC03B, 0);
        let timing = AdversaryTiming {
            n_r: 0,
            n_n: 0,
            n_n_prime: 0,
            activation_symbol: 0,
            mode: AdversaryMode::Inject,
        };
        // 80 dB above the unit-power links: dominance is certain.
        let h_e = Complex64::new(1e4, 0.0);
        let mut unaware_hits = 0usize;
        let mut aware_hits = 0usize;
        for _ in 0..trials {
            let pair =
                build_precoders(sample_noise(1.0, &mut rng), sample_noise(1.0, &mut rng))?;
            let fake = random_symbol(Constellation::Qpsk, &mut rng);
            let combiner = Complex64::from_polar(1.0, -pair.theta_ul);

            let mut eve = EveState::new(timing, SearchRegime::NonReciprocal);
            eve.target_combiner = Some(pair.theta_ul);
            eve.knows_combiners = false;
            let z = combiner * inject(&fake, h_e, &eve);
            let d = decide(z, pair.ref_gain_dl, Constellation::Qpsk);
            unaware_hits += usize::from(d.index == fake.index);

            eve.knows_combiners = true;
            let z = combiner * inject(&fake, h_e, &eve);
            let d = decide(z, pair.ref_gain_dl, Constellation::Qpsk);
            aware_hits += usize::from(d.index == fake.index);
        }
        let unaware = unaware_hits as f64 / trials as f64;
        let aware = aware_hits as f64 / trials as f64;
        let ok = (unaware - 0.25).abs() <= 0.02 && aware == 1.0;
        Ok((
            ok,
            format!(
                "unaware injection decoded as intended {unaware:.4} (0.25 +/- 0.02); \
combiner-aware {aware:.4} (must be 1.0) at 1e5 trials, 80 dB dominance"
            ),
        ))
    })
}

/// The non-reciprocal secrecy rate never falls below the reciprocal one on
/// the exposure sweep, and both collapse to the main-link capacity when the
/// search outlasts the slot.
pub fn secrecy_rate_ordering(cfg: &ScenarioConfig) -> CriterionResult {
    let cfg = cfg.clone();
    timed("secrecy_rate_ordering", 1.0, move || {
        let budget = derive_link_budget(&cfg)?;
        let snrs = mean_snrs(&budget, cfg.panels.m_a, cfg.panels.m_e)?;
        let n = cfg.slot.n_total;
        let eta = (n.saturating_sub(3)) as f64 / n as f64;
        let c_a = capacity(snrs.rho_a, eta)?;
        let mut ok = true;
        let mut min_gap = f64::INFINITY;
        for rho_e in [snrs.rho_eb, snrs.rho_eu] {
            let c_e = capacity(rho_e, eta)?;
            ok &= asr_timed(c_a, c_e, n, n)? == c_a;
            for k in 1..=12 {
                let eta_s = k as f64 * 0.05;
                let n_r = ((1.0 - eta_s) * n as f64).round() as usize;
                let n_n = 2 * n_r;
                let e_ar = asr_timed(c_a, c_e, n_r, n)?;
                let e_an = asr_timed(c_a, c_e, n_n, n)?;
                ok &= e_an >= e_ar - 1e-12;
                min_gap = min_gap.min(e_an - e_ar);
                if n_n >= n {
                    ok &= e_an == c_a;
                }
            }
        }
        Ok((
            ok,
            format!(
                "doubled-timer rate >= single-timer rate at all 12 exposure points for both \
intercept couplings (min gap {min_gap:.3e} bit/s/Hz); timer = slot gives the full main rate"
            ),
        ))
    })
}

/// The slot-level fake-decoding probability never exceeds the baseline,
/// falls strictly with the surface size, and scales exactly with the
/// exposure window.
pub fn fake_probability_ordering(cfg: &ScenarioConfig) -> CriterionResult {
    let cfg = cfg.clone();
    timed("fake_probability_ordering", 1.0, move || {
        let base = derive_link_budget(&cfg)?;
        let mut strong = base;
        strong.sigma_gv2 = 1.0;
        let n = cfg.slot.n_total;
        let mut ok = true;
        let mut cases = 0usize;
        for budget in [base, strong] {
            for m_e in [500usize, 1000, 2000] {
                for sigma_e2 in [budget.sigma_qe2, budget.sigma_ge2] {
                    let mut prev: Option<f64> = None;
                    for m_a in [500usize, 1000, 2000, 4000] {
                        let p2 = fake_prob_conditional(&budget, m_a, m_e, sigma_e2)?;
                        ok &= (0.0..=1.0).contains(&p2);
                        if let Some(prev_p2) = prev {
                            ok &= p2 < prev_p2;
                        }
                        prev = Some(p2);
                        let baseline = reciprocal_fake_prob(p2, false);
                        for timer in 0..=n {
                            let r = fake_prob_residual(p2, timer, n)?;
                            ok &= r.value <= baseline;
                            ok &= r.value == (n - timer) as f64 / n as f64 * p2;
                            ok &= !r.clamped;
                            cases += 1;
                        }
                        let over = fake_prob_residual(p2, n + 1, n)?;
                        ok &= over.value == 0.0 && over.clamped;
                    }
                }
            }
        }
        Ok((
            ok,
            format!(
                "{cases} (budget, panel, leg, timer) cases: bounded by the baseline, strictly \
decreasing in the surface size, exposure factor exact"
            ),
        ))
    })
}

/// Detection of estimation pollution when her power matches the surface's,
/// and the false-flag rate on clean slots at 20 dB.
pub fn pollution_detection(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    timed("pollution_detection", 60.0, move || {
        let slot = default_slot_plan(22)?;
        let trials = 10_000usize;
        let mut rng = trial_rng(seed ^ 0x9011, 0);
        let mut detected = 0usize;
        for _ in 0..trials {
            let d = DrawnSlot::sample_unit_magnitudes(&mut rng);
            let out = run_noiseless(&slot, &d, AdversaryMode::PolluteCep, 5, &mut rng)?;
            detected += usize::from(out.flagged);
        }
        let rate = detected as f64 / trials as f64;

        let mut false_flags = 0usize;
        for _ in 0..trials {
            let mut d = DrawnSlot::sample_unit_magnitudes(&mut rng);
            d.h_e_u = Complex64::new(0.0, 0.0);
            d.h_e_b = Complex64::new(0.0, 0.0);
            let inp = synthetic_inputs(&slot, &d, AdversaryMode::Off, 5, 0.01, 0.01);
            false_flags += usize::from(run_defended_slot(&inp, &mut rng)?.flagged);
        }
        let ff_rate = false_flags as f64 / trials as f64;

        let ok = rate > 0.99 && ff_rate < 1e-3;
        let mut detail = format!(
            "detection rate {rate:.4} over 1e4 polluted slots at equal adversary/surface power \
(bar > 0.99); false-flag rate {ff_rate:.1e} over 1e4 clean slots at 20 dB (bar < 1e-3)"
        );
        if rate <= 0.99 {
            detail.push_str(
                "; the residual misses are slots whose contamination rotates both receivers' \
decision samples within their regions, which symbol-count validation at this constellation \
cannot see",
            );
        }
        Ok((ok, detail))
    })
}

/// Byte-identical sweep output for repeated runs and for worker counts 1, 4
/// and 8.
pub fn determinism_parallel_equivalence(cfg: &ScenarioConfig) -> CriterionResult {
    let cfg = cfg.clone();
    timed("determinism_parallel_equivalence", 60.0, move || {
        let mut point = cfg;
        point.adversary.mode = AdversaryMode::Inject;
        let values = [-40.0, -30.0, -20.0];
        let mut outputs = Vec::new();
        for workers in [1usize, 1, 4, 8] {
            let rows = run_sweep(&point, SweepAxis::TxPowerDbm, &values, 200, workers)?;
            outputs.push(render_sweep_csv(&point, SweepAxis::TxPowerDbm, &rows));
        }
        let ok = outputs.windows(2).all(|w| w[0] == w[1]);
        Ok((
            ok,
            format!(
                "same-seed rerun and worker counts 1/4/8 all produced byte-identical CSV \
({} bytes, 3 values x 200 trials)",
                outputs[0].len()
            ),
        ))
    })
}

/// Her two listening regimes: an unprecoded transmission is fully readable
/// at high SNR, a precoded one before the timer sits at the random-rotation
/// floor, and knowing the precoder removes that floor.
pub fn eavesdropping_error_rates(cfg: &ScenarioConfig) -> CriterionResult {
    let seed = cfg.run.seed;
    timed("eavesdropping_error_rates", 30.0, move || {
        let trials = 10_000usize;
        let mut rng = trial_rng(seed ^ 0xEA5E, 0);
        let mut errors = [0usize; 3];
        for _ in 0..trials {
            let h_e = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
            let x = random_symbol(Constellation::Qpsk, &mut rng);
            let y = eavesdrop(x.value, h_e, 1e-3, &mut rng);
            errors[0] +=
                usize::from(decode_eavesdropped(y, h_e, None, Constellation::Qpsk)?.index != x.index);

            let pair =
                build_precoders(sample_noise(1.0, &mut rng), sample_noise(1.0, &mut rng))?;
            let x2 = random_symbol(Constellation::Qpsk, &mut rng);
            let y2 = eavesdrop(pair.v_b * x2.value, h_e, 0.0, &mut rng);
            errors[1] += usize::from(
                decode_eavesdropped(y2, h_e, None, Constellation::Qpsk)?.index != x2.index,
            );
            errors[2] += usize::from(
                decode_eavesdropped(y2, h_e, Some(pair.v_b), Constellation::Qpsk)?.index
                    != x2.index,
            );
        }
        let plain = errors[0] as f64 / trials as f64;
        let blind = errors[1] as f64 / trials as f64;
        let aware = errors[2] as f64 / trials as f64;
        let ok = plain < 0.01 && blind >= 0.7 && aware == 0.0;
        Ok((
            ok,
            format!(
                "unprecoded at 30 dB: SER {plain:.4} (< 0.01); precoded before the timer: \
SER {blind:.4} (>= 0.7 rotation floor); precoder known: SER {aware:.4} (= 0) at 1e4 trials"
            ),
        ))
    })
}

/// Run the whole acceptance suite in order.
pub fn run_all(cfg: &ScenarioConfig) -> Vec<CriterionResult> {
    vec![
        pilot_overhead_efficiency(cfg),
        cascade_mean_power(cfg),
        injection_power_tail(cfg),
        estimation_exactness(cfg),
        phase_flip_identity(cfg),
        defended_link_error_rate(cfg),
        combiner_rotation_defense(cfg),
        secrecy_rate_ordering(cfg),
        fake_probability_ordering(cfg),
        pollution_detection(cfg),
        determinism_parallel_equivalence(cfg),
        eavesdropping_error_rates(cfg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_config;

    #[test]
    fn result_lines_carry_verdict_name_and_detail() {
        let r = CriterionResult {
            name: "example_check",
            passed: true,
            within_budget: true,
            elapsed: Duration::from_millis(1500),
            budget: Duration::from_secs(5),
            detail: "all good".to_string(),
        };
        assert_eq!(r.line(), "PASS example_check (1.5s/5s budget): all good");
        let mut slow = r.clone();
        slow.within_budget = false;
        assert!(slow.line().starts_with("FAIL example_check"));
    }

    #[test]
    fn errors_become_failed_results() {
        let r = timed("exploding", 1.0, || Err(HarnessError::NoTrials));
        assert!(!r.passed);
        assert!(r.detail.contains("at least one trial"));
    }

    #[test]
    fn efficiency_check_passes_on_defaults() {
        let r = pilot_overhead_efficiency(&default_config());
        assert!(r.ok(), "{}", r.line());
    }

    #[test]
    fn formula_level_checks_pass_on_defaults() {
        let cfg = default_config();
        let r = secrecy_rate_ordering(&cfg);
        assert!(r.ok(), "{}", r.line());
        let r = fake_probability_ordering(&cfg);
        assert!(r.ok(), "{}", r.line());
    }
}
