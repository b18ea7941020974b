//! Parameter sweeps: closed-form predictions next to Monte-Carlo
//! aggregates, with worker-count-independent results and a statistical
//! cross-check between the two.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{
    asr_timed, beta_threshold, capacity, fake_prob_conditional, fake_prob_residual, mean_snrs,
    reciprocal_fake_prob,
};
use crate::channel::{derive_link_budget, LinkBudget};
use crate::scenario::{GainMode, ScenarioConfig};

use super::trial::{run_trial, TrialMetrics};
use super::HarnessError;

/// The quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Transmit power, dBm.
    TxPowerDbm,
    /// Noise floor, dBm.
    NoiseDbm,
    /// Defensive-surface element count.
    MA,
    /// Adversary-panel element count.
    ME,
    /// Adversary exposure fraction: timers are derived as
    /// `n_r = round((1 - value) * n_total)`, `n_n = 2 * n_r`,
    /// `n_n_prime = 2 * n_n`.
    EtaS,
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tx_power_dbm" => Ok(SweepAxis::TxPowerDbm),
            "noise_dbm" => Ok(SweepAxis::NoiseDbm),
            "m_a" => Ok(SweepAxis::MA),
            "m_e" => Ok(SweepAxis::ME),
            "eta_s" => Ok(SweepAxis::EtaS),
            other => Err(format!(
                "unknown sweep axis `{other}` (expected tx_power_dbm, noise_dbm, m_a, m_e or eta_s)"
            )),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::TxPowerDbm => "tx_power_dbm",
            SweepAxis::NoiseDbm => "noise_dbm",
            SweepAxis::MA => "m_a",
            SweepAxis::ME => "m_e",
            SweepAxis::EtaS => "eta_s",
        };
        write!(f, "{s}")
    }
}

/// Check that an axis value is a positive integer and return it.
fn integral(axis: &'static str, value: f64) -> Result<usize, HarnessError> {
    if !value.is_finite() || value < 1.0 || value.fract() != 0.0 {
        return Err(HarnessError::BadAxisValue {
            axis,
            value,
            msg: "element counts must be integers of at least 1".to_string(),
        });
    }
    Ok(value as usize)
}

/// Set one sweep value on a scenario.
pub fn apply_axis(
    cfg: &mut ScenarioConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<(), HarnessError> {
    match axis {
        SweepAxis::TxPowerDbm | SweepAxis::NoiseDbm => {
            if !value.is_finite() {
                return Err(HarnessError::BadAxisValue {
                    axis: if axis == SweepAxis::TxPowerDbm { "tx_power_dbm" } else { "noise_dbm" },
                    value,
                    msg: "power levels must be finite".to_string(),
                });
            }
            if axis == SweepAxis::TxPowerDbm {
                cfg.power.tx_power_dbm = value;
            } else {
                cfg.power.noise_dbm = value;
            }
        }
        SweepAxis::MA => cfg.panels.m_a = integral("m_a", value)?,
        SweepAxis::ME => cfg.panels.m_e = integral("m_e", value)?,
        SweepAxis::EtaS => {
            if !(0.0..=1.0).contains(&value) {
                return Err(HarnessError::BadAxisValue {
                    axis: "eta_s",
                    value,
                    msg: "exposure fraction must lie in [0, 1]".to_string(),
                });
            }
            let n_r = ((1.0 - value) * cfg.slot.n_total as f64).round() as usize;
            cfg.adversary.n_r = n_r;
            cfg.adversary.n_n = 2 * n_r;
            cfg.adversary.n_n_prime = 4 * n_r;
        }
    }
    Ok(())
}

/// Closed-form predictions at one sweep point.
///
/// Capacities use the non-reciprocal protocol's pilot overhead (three pilot
/// symbols); the two secrecy rates share the same capacities and differ only
/// in the adversary's exposure window, which is how their source states
/// them. The listening capacity takes the stronger of her two couplings
/// (conservative). `p2_ue`/`p2_bs` are her injection-dominance
/// probabilities toward each receiver; the defended slot probability scales
/// the larger one by the exposure left after her combiner search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForms {
    /// Pilot efficiency `(n_total - 3) / n_total`.
    pub eta: f64,
    /// Mean direct-link SNR.
    pub rho_d: f64,
    /// Mean defended-surface SNR.
    pub rho_a: f64,
    /// Mean adversary SNR toward the base station.
    pub rho_eb: f64,
    /// Mean adversary SNR toward the user.
    pub rho_eu: f64,
    /// Direct-link capacity at the same overhead.
    pub c_d: f64,
    /// Defended-link capacity.
    pub c_a: f64,
    /// Her listening capacity (stronger coupling).
    pub c_e: f64,
    /// Secrecy rate with the reciprocal search timer.
    pub asr_reciprocal: f64,
    /// Secrecy rate with the non-reciprocal precoder timer.
    pub asr_nonreciprocal: f64,
    /// Injection decision threshold.
    pub beta: f64,
    /// Injection-dominance probability toward the user.
    pub p2_ue: f64,
    /// Injection-dominance probability toward the base station.
    pub p2_bs: f64,
    /// Defended fake-decoding probability over the slot.
    pub p_fake_defended: f64,
    /// The combiner search outlasted the slot and clamped the above to zero.
    pub p_fake_clamped: bool,
    /// Reciprocal baseline fake-decoding probability (no timing protection).
    pub p_fake_reciprocal: f64,
}

/// Evaluate the closed forms for one scenario.
pub fn closed_forms(
    cfg: &ScenarioConfig,
    budget: &LinkBudget,
) -> Result<ClosedForms, HarnessError> {
    let n = cfg.slot.n_total;
    let eta = (n.saturating_sub(3)) as f64 / n as f64;
    let snrs = mean_snrs(budget, cfg.panels.m_a, cfg.panels.m_e)?;
    let c_d = capacity(snrs.rho_d, eta)?;
    let c_a = capacity(snrs.rho_a, eta)?;
    let c_e = capacity(snrs.rho_eb.max(snrs.rho_eu), eta)?;
    let asr_reciprocal = asr_timed(c_a, c_e, cfg.adversary.n_r, n)?;
    let asr_nonreciprocal = asr_timed(c_a, c_e, cfg.adversary.n_n, n)?;
    let beta = beta_threshold(budget, cfg.panels.m_a);
    let p2_ue = fake_prob_conditional(budget, cfg.panels.m_a, cfg.panels.m_e, budget.sigma_ge2)?;
    let p2_bs = fake_prob_conditional(budget, cfg.panels.m_a, cfg.panels.m_e, budget.sigma_qe2)?;
    let p2 = p2_ue.max(p2_bs);
    let residual = fake_prob_residual(p2, cfg.adversary.n_n_prime, n)?;
    Ok(ClosedForms {
        eta,
        rho_d: snrs.rho_d,
        rho_a: snrs.rho_a,
        rho_eb: snrs.rho_eb,
        rho_eu: snrs.rho_eu,
        c_d,
        c_a,
        c_e,
        asr_reciprocal,
        asr_nonreciprocal,
        beta,
        p2_ue,
        p2_bs,
        p_fake_defended: residual.value,
        p_fake_clamped: residual.clamped,
        p_fake_reciprocal: reciprocal_fake_prob(p2, false),
    })
}

/// Monte-Carlo aggregates over one sweep point's trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    /// Trials behind the aggregates.
    pub trials: usize,
    /// Mean downlink data symbol-error rate.
    pub mean_ser_dl: f64,
    /// Mean uplink data symbol-error rate.
    pub mean_ser_ul: f64,
    /// Mean adversary downlink-listening error rate, over trials where she
    /// listened.
    pub eve_ser_dl: Option<f64>,
    /// Mean adversary uplink-listening error rate, over trials where she
    /// listened.
    pub eve_ser_ul: Option<f64>,
    /// Total fake symbols injected.
    pub fake_injected: usize,
    /// Total fake symbols decoded as hers by the legitimate side.
    pub fake_decoded: usize,
    /// Fraction of slots flagged polluted.
    pub flag_rate: f64,
    /// Mean instantaneous direct-link SNR.
    pub mean_snr_d: f64,
    /// Mean instantaneous surface SNR.
    pub mean_snr_a: f64,
    /// Mean instantaneous adversary-to-base-station SNR.
    pub mean_snr_eb: f64,
    /// Mean instantaneous adversary-to-user SNR.
    pub mean_snr_eu: f64,
    /// Fraction of trials where her power toward the user beat the
    /// threshold.
    pub p2_hat_ue: f64,
    /// Fraction of trials where her power toward the base station beat the
    /// threshold.
    pub p2_hat_bs: f64,
}

/// Reduce per-trial metrics in trial order (worker-count independent).
pub fn aggregate(metrics: &[TrialMetrics]) -> Result<Aggregates, HarnessError> {
    if metrics.is_empty() {
        return Err(HarnessError::NoTrials);
    }
    let n = metrics.len() as f64;
    let mut ser_dl = 0.0;
    let mut ser_ul = 0.0;
    let mut eve_dl = (0.0, 0usize);
    let mut eve_ul = (0.0, 0usize);
    let mut fake_injected = 0usize;
    let mut fake_decoded = 0usize;
    let mut flagged = 0usize;
    let mut snr = [0.0f64; 4];
    let mut exceeds_ue = 0usize;
    let mut exceeds_bs = 0usize;
    for m in metrics {
        ser_dl += m.ser_dl;
        ser_ul += m.ser_ul;
        if let Some(s) = m.eve_ser_dl {
            eve_dl = (eve_dl.0 + s, eve_dl.1 + 1);
        }
        if let Some(s) = m.eve_ser_ul {
            eve_ul = (eve_ul.0 + s, eve_ul.1 + 1);
        }
        fake_injected += m.fake_injected;
        fake_decoded += m.fake_decoded;
        flagged += usize::from(m.flagged);
        snr[0] += m.snr_d;
        snr[1] += m.snr_a;
        snr[2] += m.snr_eb;
        snr[3] += m.snr_eu;
        exceeds_ue += usize::from(m.fake_power_exceeds_ue);
        exceeds_bs += usize::from(m.fake_power_exceeds_bs);
    }
    Ok(Aggregates {
        trials: metrics.len(),
        mean_ser_dl: ser_dl / n,
        mean_ser_ul: ser_ul / n,
        eve_ser_dl: (eve_dl.1 > 0).then(|| eve_dl.0 / eve_dl.1 as f64),
        eve_ser_ul: (eve_ul.1 > 0).then(|| eve_ul.0 / eve_ul.1 as f64),
        fake_injected,
        fake_decoded,
        flag_rate: flagged as f64 / n,
        mean_snr_d: snr[0] / n,
        mean_snr_a: snr[1] / n,
        mean_snr_eb: snr[2] / n,
        mean_snr_eu: snr[3] / n,
        p2_hat_ue: exceeds_ue as f64 / n,
        p2_hat_bs: exceeds_bs as f64 / n,
    })
}

/// One sweep point: the axis value, its closed forms, its aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Axis value at this point.
    pub value: f64,
    /// Closed-form predictions.
    pub closed: ClosedForms,
    /// Monte-Carlo aggregates.
    pub agg: Aggregates,
}

/// Run a sweep: for each axis value, evaluate closed forms and run `trials`
/// Monte-Carlo trials on a worker pool.
///
/// Trial `t` always draws from the stream derived from `(seed, t)`, and the
/// reduction walks trials in order, so results are identical for any worker
/// count (`workers = 0` uses the machine's default parallelism).
pub fn run_sweep(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    workers: usize,
) -> Result<Vec<SweepRow>, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut point = cfg.clone();
        apply_axis(&mut point, axis, value)?;
        let budget = derive_link_budget(&point)?;
        let closed = closed_forms(&point, &budget)?;
        let metrics: Vec<TrialMetrics> = pool.install(|| {
            (0..trials as u64)
                .into_par_iter()
                .map(|t| run_trial(&point, &budget, t))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let agg = aggregate(&metrics)?;
        rows.push(SweepRow { value, closed, agg });
    }
    Ok(rows)
}

/// One closed-form-versus-empirical comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCheck {
    /// Quantity compared.
    pub name: &'static str,
    /// Closed-form value.
    pub closed: f64,
    /// Empirical value.
    pub empirical: f64,
    /// Standardized deviation.
    pub z: f64,
    /// `|z| <= 3`.
    pub pass: bool,
}

/// The cross-validation verdict for one sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Axis value the row sits at.
    pub value: f64,
    /// Individual comparisons.
    pub checks: Vec<ValidationCheck>,
    /// All comparisons passed.
    pub all_pass: bool,
}

impl ValidationReport {
    /// Render one line per check plus a verdict line.
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                format!(
                    "  {} {}: closed {:.6e}, empirical {:.6e}, z = {:+.2}",
                    if c.pass { "ok  " } else { "FAIL" },
                    c.name,
                    c.closed,
                    c.empirical,
                    c.z
                )
            })
            .collect();
        out.insert(0, format!("value {}: {}", self.value, if self.all_pass { "consistent" } else { "INCONSISTENT" }));
        out
    }
}

fn mean_check(name: &'static str, closed: f64, empirical: f64, trials: usize) -> ValidationCheck {
    // The instantaneous SNRs are exponential (variance equals the squared
    // mean), so the sample mean's standard error is `closed / sqrt(n)`.
    let se = closed.max(1e-300) / (trials as f64).sqrt();
    let z = (empirical - closed) / se;
    ValidationCheck { name, closed, empirical, z, pass: z.abs() <= 3.0 }
}

fn tail_check(name: &'static str, closed: f64, empirical: f64, trials: usize) -> ValidationCheck {
    let p = closed.clamp(1e-12, 1.0 - 1e-12);
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    let z = (empirical - closed) / se;
    ValidationCheck { name, closed, empirical, z, pass: z.abs() <= 3.0 }
}

/// Compare one row's aggregates against its closed forms.
///
/// Mean SNRs are checked at three standard errors; the injection-dominance
/// probabilities are checked as binomial tails. The surface-SNR check only
/// applies under the incoherent phase strategy (the aligned strategy is
/// designed to beat the incoherent mean, so its deviation is expected).
pub fn cross_validate(cfg: &ScenarioConfig, row: &SweepRow) -> ValidationReport {
    let n = row.agg.trials;
    let mut checks = vec![mean_check("mean_snr_d", row.closed.rho_d, row.agg.mean_snr_d, n)];
    if cfg.run.gain_mode == GainMode::Incoherent {
        checks.push(mean_check("mean_snr_a", row.closed.rho_a, row.agg.mean_snr_a, n));
    }
    checks.push(mean_check("mean_snr_eb", row.closed.rho_eb, row.agg.mean_snr_eb, n));
    checks.push(mean_check("mean_snr_eu", row.closed.rho_eu, row.agg.mean_snr_eu, n));
    checks.push(tail_check("p2_ue", row.closed.p2_ue, row.agg.p2_hat_ue, n));
    checks.push(tail_check("p2_bs", row.closed.p2_bs, row.agg.p2_hat_bs, n));
    let all_pass = checks.iter().all(|c| c.pass);
    ValidationReport { value: row.value, checks, all_pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_config;
    use approx::assert_relative_eq;

    #[test]
    fn axis_labels_round_trip() {
        for axis in
            [SweepAxis::TxPowerDbm, SweepAxis::NoiseDbm, SweepAxis::MA, SweepAxis::ME, SweepAxis::EtaS]
        {
            let label = axis.to_string();
            assert_eq!(label.parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("bogus".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn axes_set_their_targets() {
        let mut cfg = default_config();
        apply_axis(&mut cfg, SweepAxis::TxPowerDbm, -20.0).unwrap();
        assert_eq!(cfg.power.tx_power_dbm, -20.0);
        apply_axis(&mut cfg, SweepAxis::NoiseDbm, -120.0).unwrap();
        assert_eq!(cfg.power.noise_dbm, -120.0);
        apply_axis(&mut cfg, SweepAxis::MA, 500.0).unwrap();
        assert_eq!(cfg.panels.m_a, 500);
        apply_axis(&mut cfg, SweepAxis::ME, 250.0).unwrap();
        assert_eq!(cfg.panels.m_e, 250);
    }

    #[test]
    fn exposure_axis_derives_all_three_timers() {
        let mut cfg = default_config();
        apply_axis(&mut cfg, SweepAxis::EtaS, 0.5).unwrap();
        assert_eq!(cfg.adversary.n_r, 11);
        assert_eq!(cfg.adversary.n_n, 22);
        assert_eq!(cfg.adversary.n_n_prime, 44);
        apply_axis(&mut cfg, SweepAxis::EtaS, 1.0).unwrap();
        assert_eq!(cfg.adversary.n_r, 0);
        assert_eq!(cfg.adversary.n_n, 0);
    }

    #[test]
    fn bad_axis_values_are_rejected() {
        let mut cfg = default_config();
        assert!(apply_axis(&mut cfg, SweepAxis::MA, 2.5).is_err());
        assert!(apply_axis(&mut cfg, SweepAxis::MA, 0.0).is_err());
        assert!(apply_axis(&mut cfg, SweepAxis::ME, -3.0).is_err());
        assert!(apply_axis(&mut cfg, SweepAxis::EtaS, 1.5).is_err());
        assert!(apply_axis(&mut cfg, SweepAxis::TxPowerDbm, f64::NAN).is_err());
    }

    #[test]
    fn closed_forms_match_hand_derived_values() {
        let cfg = default_config();
        let budget = derive_link_budget(&cfg).unwrap();
        let closed = closed_forms(&cfg, &budget).unwrap();
        assert_relative_eq!(closed.eta, 19.0 / 22.0, max_relative = 1e-15);
        assert_relative_eq!(closed.rho_d, 196.8962398093561, max_relative = 1e-9);
        assert_relative_eq!(closed.rho_a, 0.15053493004800056, max_relative = 1e-9);
        assert_relative_eq!(closed.rho_eb, 0.585860266689983, max_relative = 1e-9);
        assert_relative_eq!(closed.rho_eu, 0.585860266689983, max_relative = 1e-9);
        assert_relative_eq!(closed.c_d, 6.588336700483179, max_relative = 1e-9);
        assert_relative_eq!(closed.c_a, 0.17471776817876028, max_relative = 1e-9);
        assert_relative_eq!(closed.c_e, 0.5745476136455546, max_relative = 1e-9);
        // The precoder timer spans the whole default slot: full protection.
        assert_relative_eq!(closed.asr_nonreciprocal, closed.c_a, max_relative = 1e-15);
        // The reciprocal timer leaves half the slot exposed.
        assert_relative_eq!(closed.asr_reciprocal, -0.11255603864401703, max_relative = 1e-9);
        assert_relative_eq!(closed.beta, 1.9804677473940412e-8, max_relative = 1e-9);
        assert_relative_eq!(closed.p2_ue, 1.5459237660329992e-147, max_relative = 1e-6);
        assert_eq!(closed.p2_ue, closed.p2_bs);
        assert_eq!(closed.p_fake_defended, 0.0);
        assert!(closed.p_fake_clamped);
        assert_eq!(closed.p_fake_reciprocal, closed.p2_ue);
    }

    #[test]
    fn aggregation_averages_and_counts() {
        let m = TrialMetrics {
            ser_dl: 0.2,
            ser_ul: 0.0,
            dl_symbols: 9,
            ul_symbols: 8,
            eve_ser_dl: Some(0.5),
            eve_ser_ul: None,
            fake_injected: 3,
            fake_decoded: 1,
            flagged: true,
            polluted: true,
            snr_d: 10.0,
            snr_a: 1.0,
            snr_eb: 2.0,
            snr_eu: 4.0,
            fake_power_exceeds_ue: true,
            fake_power_exceeds_bs: false,
        };
        let mut quiet = m.clone();
        quiet.ser_dl = 0.0;
        quiet.eve_ser_dl = None;
        quiet.fake_injected = 0;
        quiet.fake_decoded = 0;
        quiet.flagged = false;
        quiet.fake_power_exceeds_ue = false;
        let agg = aggregate(&[m, quiet]).unwrap();
        assert_eq!(agg.trials, 2);
        assert_relative_eq!(agg.mean_ser_dl, 0.1);
        assert_eq!(agg.eve_ser_dl, Some(0.5));
        assert_eq!(agg.eve_ser_ul, None);
        assert_eq!(agg.fake_injected, 3);
        assert_eq!(agg.fake_decoded, 1);
        assert_relative_eq!(agg.flag_rate, 0.5);
        assert_relative_eq!(agg.mean_snr_d, 10.0);
        assert_relative_eq!(agg.p2_hat_ue, 0.5);
        assert_relative_eq!(agg.p2_hat_bs, 0.0);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn sweeps_are_worker_count_invariant() {
        let mut cfg = default_config();
        cfg.panels.m_a = 50;
        cfg.panels.m_e = 20;
        cfg.run.trials = 8;
        let values = [-30.0, -25.0];
        let serial = run_sweep(&cfg, SweepAxis::TxPowerDbm, &values, 8, 1).unwrap();
        let parallel = run_sweep(&cfg, SweepAxis::TxPowerDbm, &values, 8, 4).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.len(), 2);
        assert!(run_sweep(&cfg, SweepAxis::TxPowerDbm, &values, 0, 1).is_err());
    }

    #[test]
    fn cross_validation_flags_only_real_deviations() {
        let cfg = default_config();
        let budget = derive_link_budget(&cfg).unwrap();
        let closed = closed_forms(&cfg, &budget).unwrap();
        let consistent = Aggregates {
            trials: 1000,
            mean_ser_dl: 0.0,
            mean_ser_ul: 0.0,
            eve_ser_dl: None,
            eve_ser_ul: None,
            fake_injected: 0,
            fake_decoded: 0,
            flag_rate: 0.0,
            mean_snr_d: closed.rho_d,
            mean_snr_a: closed.rho_a,
            mean_snr_eb: closed.rho_eb,
            mean_snr_eu: closed.rho_eu,
            p2_hat_ue: 0.0,
            p2_hat_bs: 0.0,
        };
        let row = SweepRow { value: -30.0, closed, agg: consistent };
        let report = cross_validate(&cfg, &row);
        assert!(report.all_pass, "{:?}", report.checks);
        assert_eq!(report.checks.len(), 6);

        let mut skewed = row;
        skewed.agg.mean_snr_d = closed.rho_d * 1.5;
        let report = cross_validate(&cfg, &skewed);
        assert!(!report.all_pass);
        assert!(report.lines().iter().any(|l| l.contains("FAIL mean_snr_d")));
    }
}
