//! Physical-layer symbol chain: constellations, precoders/combiners, the
//! transmit–combine–decide path, and symbol-error accounting.
//!
//! The defended link uses conjugate precoding anchored on the surface
//! channel of the opposite direction's phase, so that the receiver-side
//! phase combiner collapses the composite to a positive real gain: with a
//! downlink surface channel `h_dl` and uplink `h_ul`, the base station
//! precoder is `conj(h_dl) * e^{j*arg(h_ul)}` and the user combiner is
//! `e^{-j*arg(h_ul)}`, which yields exactly `|h_dl|^2 * x` on a clean
//! channel. An interferer who does not know the combiner phase sees her
//! contribution rotated by it.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Errors from constellation handling and the symbol chain.
#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    /// Bit buffer length is not a multiple of the bits-per-symbol.
    #[error("bit buffer of length {got} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { got: usize, bits_per_symbol: usize },
    /// A bit value other than 0 or 1 was supplied.
    #[error("bit value {value} at position {index} is not 0 or 1")]
    BadBit { index: usize, value: u8 },
    /// Constellation index out of range.
    #[error("symbol index {index} out of range for a {order}-point constellation")]
    BadIndex { index: usize, order: usize },
    /// A channel estimate with zero magnitude cannot anchor a precoder.
    #[error("cannot build precoders from a zero-magnitude channel estimate")]
    ZeroChannel,
    /// Sent/decided sequences must pair up one-to-one.
    #[error("sequence length mismatch: sent {sent}, decided {decided}")]
    LengthMismatch { sent: usize, decided: usize },
    /// Error-rate over an empty sequence is undefined.
    #[error("symbol error rate over an empty sequence is undefined")]
    EmptySequence,
}

/// Supported constellations (unit average symbol power, Gray-labeled).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    /// 4 points, 2 bits/symbol, points `(±1 ± j)/sqrt(2)`.
    Qpsk,
    /// 16 points, 4 bits/symbol, per-axis levels `{-3,-1,1,3}/sqrt(10)`.
    Qam16,
}

impl Constellation {
    /// Number of points.
    pub fn order(self) -> usize {
        match self {
            Constellation::Qpsk => 4,
            Constellation::Qam16 => 16,
        }
    }

    /// Bits carried per symbol.
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }
}

impl std::str::FromStr for Constellation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qpsk" => Ok(Constellation::Qpsk),
            "16qam" | "qam16" => Ok(Constellation::Qam16),
            other => Err(format!("unknown constellation `{other}` (expected qpsk or 16qam)")),
        }
    }
}

impl std::fmt::Display for Constellation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constellation::Qpsk => write!(f, "qpsk"),
            Constellation::Qam16 => write!(f, "16qam"),
        }
    }
}

/// One constellation point together with its index in the fixed table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationSymbol {
    /// Complex point value (unit average power over the constellation).
    pub value: Complex64,
    /// Index into [`constellation_points`] for this constellation.
    pub index: usize,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray-labeled QPSK table: index = bits `b0 b1` read as `b0*2 + b1`.
/// Adjacent quadrants differ in exactly one bit.
const QPSK_POINTS: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),   // 00
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),  // 01
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2), // 11
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),  // 10
];

/// Per-axis Gray map for 16-QAM: bit pair -> level/sqrt(10).
/// Neighboring levels differ in exactly one bit.
const QAM16_AXIS: [(u8, u8, f64); 4] = [
    (0, 0, -3.0),
    (0, 1, -1.0),
    (1, 1, 1.0),
    (1, 0, 3.0),
];

fn qam16_points() -> [Complex64; 16] {
    let scale = 1.0 / 10f64.sqrt();
    let mut pts = [Complex64::new(0.0, 0.0); 16];
    for (i_idx, &(_, _, i_level)) in QAM16_AXIS.iter().enumerate() {
        for (q_idx, &(_, _, q_level)) in QAM16_AXIS.iter().enumerate() {
            pts[i_idx * 4 + q_idx] = Complex64::new(i_level * scale, q_level * scale);
        }
    }
    pts
}

/// The full point table for a constellation, in index order.
pub fn constellation_points(kind: Constellation) -> Vec<Complex64> {
    match kind {
        Constellation::Qpsk => QPSK_POINTS.to_vec(),
        Constellation::Qam16 => qam16_points().to_vec(),
    }
}

/// Look up one point by index.
pub fn symbol_from_index(kind: Constellation, index: usize) -> Result<ConstellationSymbol, PhyError> {
    let points = constellation_points(kind);
    points
        .get(index)
        .map(|&value| ConstellationSymbol { value, index })
        .ok_or(PhyError::BadIndex { index, order: kind.order() })
}

/// Draw a uniformly random symbol.
pub fn random_symbol(kind: Constellation, rng: &mut impl Rng) -> ConstellationSymbol {
    let index = rng.gen_range(0..kind.order());
    symbol_from_index(kind, index).expect("index drawn in range")
}

/// Map a 0/1 bit buffer to symbols (Gray labeling).
///
/// The buffer length must be a multiple of the bits-per-symbol and every
/// entry must be 0 or 1.
pub fn map_symbols(bits: &[u8], kind: Constellation) -> Result<Vec<ConstellationSymbol>, PhyError> {
    let bps = kind.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(PhyError::BitLength { got: bits.len(), bits_per_symbol: bps });
    }
    if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
        return Err(PhyError::BadBit { index, value });
    }
    let mut out = Vec::with_capacity(bits.len() / bps);
    for chunk in bits.chunks(bps) {
        let index = match kind {
            Constellation::Qpsk => gray_pair_index(chunk[0], chunk[1]),
            Constellation::Qam16 => {
                4 * gray_pair_index(chunk[0], chunk[1]) + gray_pair_index(chunk[2], chunk[3])
            }
        };
        out.push(symbol_from_index(kind, index)?);
    }
    Ok(out)
}

/// Recover the bit labels of a symbol sequence (inverse of [`map_symbols`]).
pub fn demap_symbols(symbols: &[ConstellationSymbol], kind: Constellation) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * kind.bits_per_symbol());
    for s in symbols {
        match kind {
            Constellation::Qpsk => {
                let (b0, b1) = gray_index_pair(s.index);
                bits.push(b0);
                bits.push(b1);
            }
            Constellation::Qam16 => {
                let (b0, b1) = gray_index_pair(s.index / 4);
                let (b2, b3) = gray_index_pair(s.index % 4);
                bits.extend_from_slice(&[b0, b1, b2, b3]);
            }
        }
    }
    bits
}

/// Gray order on a pair of bits: 00, 01, 11, 10 -> 0, 1, 2, 3.
fn gray_pair_index(b0: u8, b1: u8) -> usize {
    match (b0, b1) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        (1, 0) => 3,
        _ => unreachable!("bits validated earlier"),
    }
}

fn gray_index_pair(index: usize) -> (u8, u8) {
    match index {
        0 => (0, 0),
        1 => (0, 1),
        2 => (1, 1),
        3 => (1, 0),
        _ => unreachable!("pair index is mod 4"),
    }
}

/// Precoders and combiners for one slot, anchored on a channel estimate pair.
///
/// Built from the estimated downlink/uplink surface channels held by one
/// side. `theta_dl`/`theta_ul` are the estimate phases; the combiners are
/// the unit-magnitude rotations that undo them at the respective receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecoderPair {
    /// Base-station transmit precoder `conj(h_dl) * e^{j*theta_ul}`.
    pub v_b: Complex64,
    /// User transmit precoder `conj(h_ul) * e^{j*theta_dl}`.
    pub v_u: Complex64,
    /// User-side combiner `e^{-j*theta_ul}` (applied to downlink samples).
    pub combiner_ue: Complex64,
    /// Base-station combiner `e^{-j*theta_dl}` (applied to uplink samples).
    pub combiner_bs: Complex64,
    /// Phase of the downlink estimate, radians.
    pub theta_dl: f64,
    /// Phase of the uplink estimate, radians.
    pub theta_ul: f64,
    /// Decision reference gain for downlink data: `|h_dl|^2`.
    pub ref_gain_dl: f64,
    /// Decision reference gain for uplink data: `|h_ul|^2`.
    pub ref_gain_ul: f64,
}

/// Build the precoder/combiner set from an estimate pair.
///
/// On a clean channel the downlink decision sample is exactly
/// `|h_dl|^2 * x` and the uplink one `|h_ul|^2 * x`. Zero-magnitude
/// estimates are rejected (their phase is undefined).
pub fn build_precoders(h_dl: Complex64, h_ul: Complex64) -> Result<PrecoderPair, PhyError> {
    if h_dl.norm() == 0.0 || h_ul.norm() == 0.0 {
        return Err(PhyError::ZeroChannel);
    }
    let theta_dl = h_dl.arg();
    let theta_ul = h_ul.arg();
    let e_dl = Complex64::from_polar(1.0, theta_dl);
    let e_ul = Complex64::from_polar(1.0, theta_ul);
    Ok(PrecoderPair {
        v_b: h_dl.conj() * e_ul,
        v_u: h_ul.conj() * e_dl,
        combiner_ue: e_ul.conj(),
        combiner_bs: e_dl.conj(),
        theta_dl,
        theta_ul,
        ref_gain_dl: h_dl.norm_sqr(),
        ref_gain_ul: h_ul.norm_sqr(),
    })
}

/// Build the precoder/combiner set from estimates carrying additive
/// contamination: the effective estimate pair is `(h_dl + e_dl, h_ul + e_ul)`.
///
/// This is what a receiver whose estimation stages were polluted ends up
/// using; with both contaminations equal it reduces to the shared-interferer
/// special case.
pub fn build_polluted_precoders(
    h_dl: Complex64,
    h_ul: Complex64,
    e_dl: Complex64,
    e_ul: Complex64,
) -> Result<PrecoderPair, PhyError> {
    build_precoders(h_dl + e_dl, h_ul + e_ul)
}

/// One received sample, before (`y`) and optionally after (`z`) combining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedSample {
    /// Raw received value.
    pub y: Complex64,
    /// Combined value, set by [`combine`].
    pub z: Option<Complex64>,
    /// OFDM symbol index within the slot.
    pub n: usize,
}

/// Propagate one symbol through `channel` with `precoder`, add an
/// interference term and circularly-symmetric complex Gaussian noise of
/// variance `noise_var` (zero variance draws no noise).
///
/// Caller contract: `noise_var >= 0`.
pub fn transmit(
    symbol: &ConstellationSymbol,
    precoder: Complex64,
    channel: Complex64,
    interference: Complex64,
    noise_var: f64,
    n: usize,
    rng: &mut impl Rng,
) -> ReceivedSample {
    debug_assert!(noise_var >= 0.0, "noise variance must be non-negative");
    let mut y = channel * precoder * symbol.value + interference;
    if noise_var > 0.0 {
        y += sample_noise(noise_var, rng);
    }
    ReceivedSample { y, z: None, n }
}

/// Draw one circularly-symmetric complex Gaussian of variance `var`.
pub fn sample_noise(var: f64, rng: &mut impl Rng) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Apply the receiver combiner `e^{-j*combiner_phase}` to a sample.
pub fn combine(sample: &ReceivedSample, combiner_phase: f64) -> ReceivedSample {
    let rot = Complex64::from_polar(1.0, -combiner_phase);
    ReceivedSample { y: sample.y, z: Some(rot * sample.y), n: sample.n }
}

/// Nearest-point decision after normalizing by the receiver's reference
/// gain. Ties resolve to the lowest constellation index.
///
/// Caller contract: `reference_gain > 0`.
pub fn decide(z: Complex64, reference_gain: f64, kind: Constellation) -> ConstellationSymbol {
    debug_assert!(reference_gain > 0.0, "reference gain must be positive");
    let zn = z / reference_gain;
    let points = constellation_points(kind);
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (zn - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    ConstellationSymbol { value: points[best], index: best }
}

/// Fraction of positions where the decided index differs from the sent one.
pub fn symbol_error_rate(
    sent: &[ConstellationSymbol],
    decided: &[ConstellationSymbol],
) -> Result<f64, PhyError> {
    if sent.len() != decided.len() {
        return Err(PhyError::LengthMismatch { sent: sent.len(), decided: decided.len() });
    }
    if sent.is_empty() {
        return Err(PhyError::EmptySequence);
    }
    let errors = sent.iter().zip(decided).filter(|(s, d)| s.index != d.index).count();
    Ok(errors as f64 / sent.len() as f64)
}
