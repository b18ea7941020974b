//! Closed-form performance expressions: link capacities, achievable secrecy
//! rates under timed precoder exposure, the high-SNR approximation pair, and
//! the fake-symbol decoding probabilities.
//!
//! Everything here is deterministic arithmetic on a [`LinkBudget`]; the
//! Monte-Carlo counterparts live in the harness, and the validation path
//! compares the two.

use thiserror::Error;

use crate::channel::LinkBudget;

/// Errors from the closed-form layer.
#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    /// A rate or probability needs a non-empty slot.
    #[error("slot has zero symbols")]
    EmptySlot,
    /// Efficiencies live in (0, 1].
    #[error("efficiency {0} outside (0, 1]")]
    BadEfficiency(f64),
    /// SNRs and variances must be non-negative and finite.
    #[error("negative or non-finite quantity: {0}")]
    BadQuantity(&'static str),
}

/// Mean SNRs of the four links, each `E[|h|^2] / sigma_w^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSnrs {
    /// Direct link.
    pub rho_d: f64,
    /// Defensive-surface cascade (`m_a` elements, two legitimate legs).
    pub rho_a: f64,
    /// Adversary cascade toward the base station.
    pub rho_eb: f64,
    /// Adversary cascade toward the user.
    pub rho_eu: f64,
}

/// Mean SNRs from the link budget and the two panel sizes.
///
/// An incoherent cascade of `m` elements with per-leg variances `s1`, `s2`
/// has mean power `m * s1 * s2`, so the four links come out as
/// `sigma_d^2`, `m_a * sigma_qa^2 * sigma_ga^2`,
/// `m_e * sigma_qe^2 * sigma_gv^2` and `m_e * sigma_ge^2 * sigma_gv^2`,
/// all over the noise power.
pub fn mean_snrs(budget: &LinkBudget, m_a: usize, m_e: usize) -> Result<MeanSnrs, AnalysisError> {
    if budget.sigma_w2 <= 0.0 || !budget.sigma_w2.is_finite() {
        return Err(AnalysisError::BadQuantity("noise power"));
    }
    Ok(MeanSnrs {
        rho_d: budget.sigma_d2 / budget.sigma_w2,
        rho_a: m_a as f64 * budget.sigma_qa2 * budget.sigma_ga2 / budget.sigma_w2,
        rho_eb: m_e as f64 * budget.sigma_qe2 * budget.sigma_gv2 / budget.sigma_w2,
        rho_eu: m_e as f64 * budget.sigma_ge2 * budget.sigma_gv2 / budget.sigma_w2,
    })
}

/// Link capacity `efficiency * log2(1 + snr)` in bit/s/Hz.
pub fn capacity(snr: f64, efficiency: f64) -> Result<f64, AnalysisError> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(AnalysisError::BadEfficiency(efficiency));
    }
    if snr < 0.0 || !snr.is_finite() {
        return Err(AnalysisError::BadQuantity("snr"));
    }
    Ok(efficiency * (1.0 + snr).log2())
}

/// Secrecy rate with no timing protection: the capacity margin of the main
/// link over the intercept link when the former has the better SNR, zero
/// otherwise.
pub fn asr_basic(c_main: f64, c_eve: f64, rho_main: f64, rho_eve: f64) -> f64 {
    if rho_main > rho_eve {
        c_main - c_eve
    } else {
        0.0
    }
}

/// Secrecy rate when the intercept link only opens for the slot fraction
/// left after a search of `timer` symbols: `c_main - (1 - timer/n) * c_eve`.
///
/// Deliberately unclamped — a negative value is the honest reading of an
/// intercept link so strong that even its exposed tail outweighs the main
/// link.
pub fn asr_timed(c_main: f64, c_eve: f64, timer: usize, n_total: usize) -> Result<f64, AnalysisError> {
    if n_total == 0 {
        return Err(AnalysisError::EmptySlot);
    }
    let exposed = 1.0 - timer as f64 / n_total as f64;
    Ok(c_main - exposed.max(0.0) * c_eve)
}

/// The high-SNR approximation of the timed secrecy rate, in three readings,
/// plus the gap between the two approximate ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsrApprox {
    /// The form with the squared panel-size numerator,
    /// `eta * log2(m_a^2 s_qa s_ga / (chi^(1-f) * s_w^(f)))`, reproduced
    /// as printed in its source.
    pub printed: f64,
    /// The approximation that actually follows from dropping the `1 +` in
    /// both capacities: same expression with a single power of `m_a`.
    pub high_snr: f64,
    /// The exact timed secrecy rate it approximates.
    pub exact: f64,
    /// `printed - high_snr`, which works out to `eta * log2(m_a)`.
    pub discrepancy: f64,
}

/// Evaluate the approximation pair and the exact value for one intercept
/// variance choice `sigma_e2` (one of the adversary's two per-element leg
/// variances toward the legitimate nodes).
#[allow(clippy::too_many_arguments)]
pub fn asr_approx(
    budget: &LinkBudget,
    m_a: usize,
    m_e: usize,
    sigma_e2: f64,
    timer: usize,
    n_total: usize,
    efficiency: f64,
) -> Result<AsrApprox, AnalysisError> {
    if n_total == 0 {
        return Err(AnalysisError::EmptySlot);
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(AnalysisError::BadEfficiency(efficiency));
    }
    if sigma_e2 <= 0.0 || !sigma_e2.is_finite() {
        return Err(AnalysisError::BadQuantity("intercept leg variance"));
    }
    let frac = timer as f64 / n_total as f64;
    let exposed = 1.0 - frac;
    let rho_a = m_a as f64 * budget.sigma_qa2 * budget.sigma_ga2 / budget.sigma_w2;
    let rho_e = m_e as f64 * sigma_e2 * budget.sigma_gv2 / budget.sigma_w2;
    if !(rho_a > 0.0 && rho_e > 0.0) {
        return Err(AnalysisError::BadQuantity("mean snr"));
    }
    let chi = m_e as f64 * sigma_e2 * budget.sigma_gv2;
    let printed = efficiency
        * ((m_a as f64).powi(2) * budget.sigma_qa2 * budget.sigma_ga2
            / (chi.powf(exposed) * budget.sigma_w2.powf(frac)))
        .log2();
    let high_snr = efficiency * (rho_a.log2() - exposed * rho_e.log2());
    let c_main = capacity(rho_a, efficiency)?;
    let c_eve = capacity(rho_e, efficiency)?;
    let exact = asr_timed(c_main, c_eve, timer, n_total)?;
    Ok(AsrApprox { printed, high_snr, exact, discrepancy: printed - high_snr })
}

/// Slot-length feasibility for timed protection: the slot must outlast the
/// pilot overhead yet not outlast the adversary's search,
/// `n_pilots < n_total <= timer`.
pub fn feasibility(n_pilots: usize, n_total: usize, timer: usize) -> bool {
    n_pilots < n_total && n_total <= timer
}

/// Decision power threshold an injected symbol must beat:
/// the mean surface-cascade power plus the direct path plus noise.
pub fn beta_threshold(budget: &LinkBudget, m_a: usize) -> f64 {
    m_a as f64 * budget.sigma_qa2 * budget.sigma_ga2 + budget.sigma_d2 + budget.sigma_w2
}

/// Probability that the adversary's injected power beats the threshold,
/// given she already knows the combiner: `exp(-beta / (m_e * sigma_e2 *
/// sigma_gv2))` — the tail of the exponential power of her cascade.
pub fn fake_prob_conditional(
    budget: &LinkBudget,
    m_a: usize,
    m_e: usize,
    sigma_e2: f64,
) -> Result<f64, AnalysisError> {
    if sigma_e2 <= 0.0 || !sigma_e2.is_finite() {
        return Err(AnalysisError::BadQuantity("intercept leg variance"));
    }
    if budget.sigma_gv2 <= 0.0 || !budget.sigma_gv2.is_finite() || m_e == 0 {
        return Err(AnalysisError::BadQuantity("adversary cascade power"));
    }
    let chi = m_e as f64 * sigma_e2 * budget.sigma_gv2;
    Ok((-beta_threshold(budget, m_a) / chi).exp())
}

/// A probability together with a flag marking that a timer longer than the
/// slot clamped it to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualProb {
    /// The probability value.
    pub value: f64,
    /// True when the search timer exceeded the slot and the exposure was
    /// clamped at zero.
    pub clamped: bool,
}

/// Fake-decoding probability over a whole slot: the conditional probability
/// scaled by the slot fraction left after the combiner search,
/// `(1 - timer/n) * p2`, clamped at zero when the search outlasts the slot.
///
/// The pre-discovery term contributes nothing: without the combiner the
/// injected symbol arrives rotated by an unknown phase and fails the
/// integrity check, so its decoding probability is zero.
pub fn fake_prob_residual(p2: f64, timer: usize, n_total: usize) -> Result<ResidualProb, AnalysisError> {
    if n_total == 0 {
        return Err(AnalysisError::EmptySlot);
    }
    if !(0.0..=1.0).contains(&p2) {
        return Err(AnalysisError::BadQuantity("conditional probability"));
    }
    if timer > n_total {
        Ok(ResidualProb { value: 0.0, clamped: true })
    } else {
        let exposed = (n_total - timer) as f64 / n_total as f64;
        Ok(ResidualProb { value: exposed * p2, clamped: false })
    }
}

/// Fake-decoding probability before the combiner is known: zero, because the
/// combiner rotation scrambles any injection built without it.
pub fn fake_prob_unaware() -> f64 {
    0.0
}

/// The reciprocal baseline's fake-decoding probability.
///
/// With no integrity-checking combiner the injection succeeds whenever its
/// power beats the threshold — probability `p2`, with no timing protection.
/// `literal_complement` instead returns `1 - p2`, the figure its source
/// states for this baseline (a "resilience" reading that is not on the same
/// scale as the defended case); keep it off for comparable numbers.
pub fn reciprocal_fake_prob(p2: f64, literal_complement: bool) -> f64 {
    if literal_complement {
        1.0 - p2
    } else {
        p2
    }
}
