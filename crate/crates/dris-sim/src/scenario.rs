//! Scenario configuration: geometry, panel sizes, link-budget overrides,
//! the slot plan, adversary timing, and run parameters — plus the plain-text
//! config format used by the CLI.
//!
//! The config format is UTF-8 lines of `section.key = value`. `#` starts a
//! comment, blank lines are ignored, lists are comma-separated. Unknown keys
//! are errors (with their line number), not warnings: a typo that silently
//! fell back to a default would invalidate a whole sweep.

use std::str::FromStr;

use thiserror::Error;

use crate::phy::Constellation;

/// Errors from config parsing and scenario validation.
#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    /// A key that is not part of the config schema.
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    /// A value that does not parse for its key.
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    /// A line without a `key = value` shape.
    #[error("line {line}: expected `section.key = value`")]
    BadLine { line: usize },
    /// The slot cannot hold the five pilot stages plus at least one data symbol.
    #[error("slot needs at least {min} symbols (five pilot stages plus data), got {got}")]
    SlotTooShort { min: usize, got: usize },
    /// Structural slot-plan violation (overlap, gap, or out-of-range index).
    #[error("invalid slot plan: {0}")]
    InvalidSlot(String),
    /// Adversary timer ordering violation.
    #[error("invalid adversary timing: {0}")]
    InvalidTiming(String),
    /// Pilot overhead must leave room for data.
    #[error("efficiency undefined: {pilots} pilot symbols do not fit strictly inside {total}")]
    BadEfficiency { pilots: usize, total: usize },
}

/// A point in meters. The z coordinate defaults to zero in configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    /// x coordinate, meters.
    pub x: f64,
    /// y coordinate, meters.
    pub y: f64,
    /// z coordinate, meters.
    pub z: f64,
}

impl Position {
    /// Construct from coordinates in meters.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    /// Euclidean distance to another point, meters.
    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Transmission direction of an OFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Base station transmits, user receives.
    Downlink,
    /// User transmits, base station receives.
    Uplink,
}

/// Role of one OFDM symbol within the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// Downlink pilot with the defensive surface off.
    DlP0,
    /// Uplink pilot with the defensive surface off.
    UlP0,
    /// Downlink pilot with the surface on, downlink phase.
    DlP1,
    /// Uplink pilot with the surface on, uplink phase.
    UlP1,
    /// Downlink pilot with the surface on, uplink phase (flipped stage).
    DlP2,
    /// Downlink data symbol.
    DlData,
    /// Uplink data symbol.
    UlData,
}

impl SymbolKind {
    /// Direction of the symbol.
    pub fn direction(self) -> Direction {
        match self {
            SymbolKind::DlP0 | SymbolKind::DlP1 | SymbolKind::DlP2 | SymbolKind::DlData => {
                Direction::Downlink
            }
            SymbolKind::UlP0 | SymbolKind::UlP1 | SymbolKind::UlData => Direction::Uplink,
        }
    }

    /// Whether the symbol carries a pilot.
    pub fn is_pilot(self) -> bool {
        !matches!(self, SymbolKind::DlData | SymbolKind::UlData)
    }
}

/// How the defensive surface's static (per-element) phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// Uniform random static phases; the cascade has Rayleigh statistics
    /// with mean power `M * sigma_q^2 * sigma_g^2`.
    Incoherent,
    /// Per-element alignment; the cascade magnitude concentrates near
    /// `M * (pi/4) * sigma_q * sigma_g`.
    Coherent,
}

impl FromStr for GainMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incoherent" => Ok(GainMode::Incoherent),
            "coherent" => Ok(GainMode::Coherent),
            other => Err(format!("unknown gain mode `{other}` (expected incoherent or coherent)")),
        }
    }
}

impl std::fmt::Display for GainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GainMode::Incoherent => write!(f, "incoherent"),
            GainMode::Coherent => write!(f, "coherent"),
        }
    }
}

/// What the adversary does with her panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryMode {
    /// Panel off; no adversary.
    Off,
    /// Panel on; she only listens.
    Eavesdrop,
    /// Panel on; she injects her own stream during data symbols.
    Inject,
    /// Panel on; she co-activates with the defensive surface to pollute the
    /// estimation stages, and injects during data symbols.
    PolluteCep,
}

impl FromStr for AdversaryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(AdversaryMode::Off),
            "eavesdrop" => Ok(AdversaryMode::Eavesdrop),
            "inject" => Ok(AdversaryMode::Inject),
            "pollute_cep" => Ok(AdversaryMode::PolluteCep),
            other => Err(format!(
                "unknown adversary mode `{other}` (expected off, eavesdrop, inject or pollute_cep)"
            )),
        }
    }
}

impl std::fmt::Display for AdversaryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AdversaryMode::Off => "off",
            AdversaryMode::Eavesdrop => "eavesdrop",
            AdversaryMode::Inject => "inject",
            AdversaryMode::PolluteCep => "pollute_cep",
        };
        write!(f, "{s}")
    }
}

/// Which of the adversary's search timers applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposureRegime {
    /// Reciprocal system: one timer (`n_r`) unlocks both directions.
    Reciprocal,
    /// Non-reciprocal system, eavesdropping: the precoder timer `n_n`.
    NonReciprocalEavesdrop,
    /// Non-reciprocal system, injection: the combiner timer `n_n_prime`.
    NonReciprocalInject,
}

/// Exposure fraction of a slot left to the adversary once her timer expires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaS {
    /// `1 - timer / n_total`, clamped at zero.
    pub value: f64,
    /// True when the timer exceeded the slot and the value was clamped.
    pub clamped: bool,
}

/// Adversary search timers and activation, in OFDM symbols.
///
/// `n_r` is the symbols she needs to learn a reciprocal configuration,
/// `n_n` the symbols to learn the non-reciprocal precoders, and
/// `n_n_prime >= n_n` the symbols to additionally learn the combiners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdversaryTiming {
    /// Search duration against a reciprocal system.
    pub n_r: usize,
    /// Search duration for the non-reciprocal precoders.
    pub n_n: usize,
    /// Search duration for the non-reciprocal combiners.
    pub n_n_prime: usize,
    /// First symbol index at which her panel is active.
    pub activation_symbol: usize,
    /// Behavior once active.
    pub mode: AdversaryMode,
}

impl AdversaryTiming {
    /// Check the timer ordering `n_r <= n_n <= n_n_prime`.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_n < self.n_r {
            return Err(ScenarioError::InvalidTiming(format!(
                "non-reciprocal precoder timer n_n = {} is shorter than the reciprocal timer n_r = {}",
                self.n_n, self.n_r
            )));
        }
        if self.n_n_prime < self.n_n {
            return Err(ScenarioError::InvalidTiming(format!(
                "combiner timer n_n_prime = {} is shorter than the precoder timer n_n = {}",
                self.n_n_prime, self.n_n
            )));
        }
        Ok(())
    }
}

/// Symbol-index plan for one slot.
///
/// The five pilot stages are: `dl_p0`/`ul_p0` (surface off), `dl_p1`/`ul_p1`
/// (surface on, per-direction phase), and `dl_p2` (surface on, the downlink
/// pilot carrying the *uplink* phase so the user learns the uplink state
/// without feedback). The subsets must partition `0..n_total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPlan {
    /// Total OFDM symbols in the slot.
    pub n_total: usize,
    /// Subcarriers per symbol (metadata carried into outputs).
    pub k_subcarriers: usize,
    /// Downlink stage-0 pilot indices.
    pub dl_p0: Vec<usize>,
    /// Uplink stage-0 pilot indices.
    pub ul_p0: Vec<usize>,
    /// Downlink stage-1 pilot indices.
    pub dl_p1: Vec<usize>,
    /// Uplink stage-1 pilot indices.
    pub ul_p1: Vec<usize>,
    /// Downlink stage-2 (phase-flipped) pilot indices.
    pub dl_p2: Vec<usize>,
    /// Downlink data indices.
    pub dl_data: Vec<usize>,
    /// Uplink data indices.
    pub ul_data: Vec<usize>,
}

impl SlotPlan {
    /// Role of symbol `n`, or `None` when `n >= n_total`.
    pub fn kind_of(&self, n: usize) -> Option<SymbolKind> {
        let sets: [(&[usize], SymbolKind); 7] = [
            (&self.dl_p0, SymbolKind::DlP0),
            (&self.ul_p0, SymbolKind::UlP0),
            (&self.dl_p1, SymbolKind::DlP1),
            (&self.ul_p1, SymbolKind::UlP1),
            (&self.dl_p2, SymbolKind::DlP2),
            (&self.dl_data, SymbolKind::DlData),
            (&self.ul_data, SymbolKind::UlData),
        ];
        sets.iter().find(|(set, _)| set.contains(&n)).map(|&(_, kind)| kind)
    }

    /// Direction of symbol `n`, or `None` when out of range.
    pub fn direction_of(&self, n: usize) -> Option<Direction> {
        self.kind_of(n).map(SymbolKind::direction)
    }

    /// All pilot indices in ascending order.
    pub fn pilot_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .dl_p0
            .iter()
            .chain(&self.ul_p0)
            .chain(&self.dl_p1)
            .chain(&self.ul_p1)
            .chain(&self.dl_p2)
            .copied()
            .collect();
        v.sort_unstable();
        v
    }

    /// Number of pilot symbols in the slot.
    pub fn n_pilots(&self) -> usize {
        self.dl_p0.len() + self.ul_p0.len() + self.dl_p1.len() + self.ul_p1.len() + self.dl_p2.len()
    }

    /// First data symbol index, if any data symbols exist.
    pub fn first_data_symbol(&self) -> Option<usize> {
        self.dl_data.iter().chain(&self.ul_data).copied().min()
    }

    /// Structural validation: every index in range, the subsets pairwise
    /// disjoint, their union exactly `0..n_total`, and every pilot stage
    /// non-empty.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_total < 6 {
            return Err(ScenarioError::SlotTooShort { min: 6, got: self.n_total });
        }
        for (name, set) in [
            ("dl_p0", &self.dl_p0),
            ("ul_p0", &self.ul_p0),
            ("dl_p1", &self.dl_p1),
            ("ul_p1", &self.ul_p1),
            ("dl_p2", &self.dl_p2),
        ] {
            if set.is_empty() {
                return Err(ScenarioError::InvalidSlot(format!("pilot stage {name} is empty")));
            }
        }
        let mut seen = vec![0usize; self.n_total];
        for set in [
            &self.dl_p0,
            &self.ul_p0,
            &self.dl_p1,
            &self.ul_p1,
            &self.dl_p2,
            &self.dl_data,
            &self.ul_data,
        ] {
            for &n in set.iter() {
                if n >= self.n_total {
                    return Err(ScenarioError::InvalidSlot(format!(
                        "symbol index {n} out of range (n_total = {})",
                        self.n_total
                    )));
                }
                seen[n] += 1;
            }
        }
        if let Some(n) = seen.iter().position(|&c| c > 1) {
            return Err(ScenarioError::InvalidSlot(format!("symbol {n} assigned more than once")));
        }
        if let Some(n) = seen.iter().position(|&c| c == 0) {
            return Err(ScenarioError::InvalidSlot(format!("symbol {n} unassigned")));
        }
        Ok(())
    }
}

/// The default slot layout: pilots at `0: dl_p0, 1: ul_p0, 2: dl_p1,
/// 3: ul_p1, 4: dl_p2`, then the remaining symbols split between downlink
/// and uplink data with downlink first (downlink gets the extra symbol when
/// the remainder is odd).
pub fn default_slot_plan(n_total: usize) -> Result<SlotPlan, ScenarioError> {
    if n_total < 6 {
        return Err(ScenarioError::SlotTooShort { min: 6, got: n_total });
    }
    let n_data = n_total - 5;
    let dl_n = n_data - n_data / 2;
    let plan = SlotPlan {
        n_total,
        k_subcarriers: 600,
        dl_p0: vec![0],
        ul_p0: vec![1],
        dl_p1: vec![2],
        ul_p1: vec![3],
        dl_p2: vec![4],
        dl_data: (5..5 + dl_n).collect(),
        ul_data: (5 + dl_n..n_total).collect(),
    };
    plan.validate()?;
    Ok(plan)
}

/// Data-rate efficiency of a slot that spends `n_pilots` of `n_total`
/// symbols on reference signals: `(n_total - n_pilots) / n_total`.
///
/// Computed on integers, converted to `f64` by a single division.
pub fn efficiency(n_pilots: usize, n_total: usize) -> Result<f64, ScenarioError> {
    if n_pilots >= n_total {
        return Err(ScenarioError::BadEfficiency { pilots: n_pilots, total: n_total });
    }
    Ok((n_total - n_pilots) as f64 / n_total as f64)
}

/// Fraction of the slot exposed to the adversary once the regime's timer
/// expires. A timer longer than the slot clamps to zero exposure and sets
/// the `clamped` flag (the adversary never finishes searching in time).
pub fn eta_s(
    timing: &AdversaryTiming,
    n_total: usize,
    regime: ExposureRegime,
) -> Result<EtaS, ScenarioError> {
    if n_total == 0 {
        return Err(ScenarioError::InvalidSlot("slot has zero symbols".to_string()));
    }
    let timer = match regime {
        ExposureRegime::Reciprocal => timing.n_r,
        ExposureRegime::NonReciprocalEavesdrop => timing.n_n,
        ExposureRegime::NonReciprocalInject => timing.n_n_prime,
    };
    if timer > n_total {
        Ok(EtaS { value: 0.0, clamped: true })
    } else {
        Ok(EtaS { value: (n_total - timer) as f64 / n_total as f64, clamped: false })
    }
}

/// Node positions and carrier frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Base station position, meters.
    pub bs: Position,
    /// User position, meters.
    pub ue: Position,
    /// Defensive surface position, meters.
    pub dris: Position,
    /// Adversarial surface position, meters.
    pub aris: Position,
    /// Adversary receiver position, meters.
    pub eve: Position,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
}

/// Panel sizes and optional pinned surface parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelSettings {
    /// Defensive surface element count.
    pub m_a: usize,
    /// Adversarial panel element count.
    pub m_e: usize,
    /// Pin the downlink common phase instead of drawing it per slot.
    pub phi_dl: Option<f64>,
    /// Pin the uplink common phase instead of drawing it per slot.
    pub phi_ul: Option<f64>,
    /// First symbol at which the defensive surface is active; defaults to
    /// the first stage-1 pilot.
    pub active_from: Option<usize>,
}

/// Link-budget knobs: per-link variance overrides win over the values
/// derived from geometry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BudgetOverrides {
    /// Direct base-station–user link variance.
    pub sigma_d2: Option<f64>,
    /// Base-station–surface element variance.
    pub sigma_qa2: Option<f64>,
    /// Surface–user element variance.
    pub sigma_ga2: Option<f64>,
    /// Base-station–adversary-panel element variance.
    pub sigma_qe2: Option<f64>,
    /// Adversary-panel–user element variance.
    pub sigma_ge2: Option<f64>,
    /// Adversary-panel–adversary-receiver element variance.
    pub sigma_gv2: Option<f64>,
}

/// Transmit power and noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSettings {
    /// Transmit power, dBm (same for both directions).
    pub tx_power_dbm: f64,
    /// Effective per-subcarrier noise power, dBm.
    pub noise_dbm: f64,
}

/// Monte-Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    /// Master seed for all streams.
    pub seed: u64,
    /// Trials per sweep point.
    pub trials: usize,
    /// Defensive-surface static-phase strategy.
    pub gain_mode: GainMode,
    /// Data constellation.
    pub constellation: Constellation,
}

/// A complete scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Node geometry and carrier.
    pub geometry: Geometry,
    /// Panel sizes and pinned parameters.
    pub panels: PanelSettings,
    /// Link-variance overrides.
    pub budget: BudgetOverrides,
    /// Power and noise.
    pub power: PowerSettings,
    /// Slot layout.
    pub slot: SlotPlan,
    /// Adversary timing and mode.
    pub adversary: AdversaryTiming,
    /// Run parameters.
    pub run: RunParams,
    /// Interpretation notes echoed into reports.
    pub notes: Vec<String>,
}

/// Fixed interpretation note echoed by every parsed config.
const CASCADE_NOTE: &str =
    "adversary cascade sums run over the adversary panel size (m_e elements)";

/// The default evaluation scenario: nodes on a 20 m link with the two
/// surfaces 5 m off-axis on opposite sides and the adversary receiver behind
/// hers, 3.5 GHz carrier, -30 dBm transmit power, -130 dBm noise, a
/// 22-symbol slot, and the adversary off.
pub fn default_config() -> ScenarioConfig {
    ScenarioConfig {
        geometry: Geometry {
            bs: Position::new(0.0, 0.0, 0.0),
            ue: Position::new(20.0, 0.0, 0.0),
            dris: Position::new(10.0, 5.0, 0.0),
            aris: Position::new(10.0, -5.0, 0.0),
            eve: Position::new(10.0, -10.0, 0.0),
            carrier_ghz: 3.5,
        },
        panels: PanelSettings { m_a: 2000, m_e: 1000, phi_dl: None, phi_ul: None, active_from: None },
        budget: BudgetOverrides::default(),
        power: PowerSettings { tx_power_dbm: -30.0, noise_dbm: -130.0 },
        slot: default_slot_plan(22).expect("default slot is valid"),
        adversary: AdversaryTiming {
            n_r: 11,
            n_n: 22,
            n_n_prime: 44,
            activation_symbol: 5,
            mode: AdversaryMode::Off,
        },
        run: RunParams {
            seed: 1,
            trials: 1000,
            gain_mode: GainMode::Incoherent,
            constellation: Constellation::Qpsk,
        },
        notes: vec![CASCADE_NOTE.to_string()],
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    value.trim().parse::<f64>().map_err(|e| ScenarioError::BadValue {
        line,
        key: key.to_string(),
        msg: e.to_string(),
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ScenarioError> {
    value.trim().parse::<usize>().map_err(|e| ScenarioError::BadValue {
        line,
        key: key.to_string(),
        msg: format!("{e} (must be a non-negative integer)"),
    })
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64, ScenarioError> {
    value.trim().parse::<u64>().map_err(|e| ScenarioError::BadValue {
        line,
        key: key.to_string(),
        msg: e.to_string(),
    })
}

fn parse_position(line: usize, key: &str, value: &str) -> Result<Position, ScenarioError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(ScenarioError::BadValue {
            line,
            key: key.to_string(),
            msg: format!("expected `x,y` or `x,y,z`, got `{value}`"),
        });
    }
    let x = parse_f64(line, key, parts[0])?;
    let y = parse_f64(line, key, parts[1])?;
    let z = if parts.len() == 3 { parse_f64(line, key, parts[2])? } else { 0.0 };
    Ok(Position::new(x, y, z))
}

fn parse_index_list(line: usize, key: &str, value: &str) -> Result<Vec<usize>, ScenarioError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|p| parse_usize(line, key, p)).collect()
}

/// Parse a scenario from config text. Unspecified keys keep their defaults.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = default_config();

    // Slot keys are gathered first and resolved together so the result does
    // not depend on line order.
    let mut slot_n_total: Option<usize> = None;
    let mut slot_k: Option<usize> = None;
    let mut slot_lists: Vec<(&'static str, Vec<usize>)> = Vec::new();
    let mut activation: Option<usize> = None;
    let mut active_from: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = match content.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => return Err(ScenarioError::BadLine { line }),
        };
        let bad = |msg: String| ScenarioError::BadValue { line, key: key.to_string(), msg };
        match key {
            "geom.bs" => cfg.geometry.bs = parse_position(line, key, value)?,
            "geom.ue" => cfg.geometry.ue = parse_position(line, key, value)?,
            "geom.dris" => cfg.geometry.dris = parse_position(line, key, value)?,
            "geom.aris" => cfg.geometry.aris = parse_position(line, key, value)?,
            "geom.eve" => cfg.geometry.eve = parse_position(line, key, value)?,
            "geom.carrier_ghz" => cfg.geometry.carrier_ghz = parse_f64(line, key, value)?,
            "ris.m_a" => cfg.panels.m_a = parse_usize(line, key, value)?,
            "ris.m_e" => cfg.panels.m_e = parse_usize(line, key, value)?,
            "ris.phi_dl" => cfg.panels.phi_dl = Some(parse_f64(line, key, value)?),
            "ris.phi_ul" => cfg.panels.phi_ul = Some(parse_f64(line, key, value)?),
            "ris.active_from" => active_from = Some(parse_usize(line, key, value)?),
            "budget.sigma_d2" => cfg.budget.sigma_d2 = Some(parse_f64(line, key, value)?),
            "budget.sigma_qa2" => cfg.budget.sigma_qa2 = Some(parse_f64(line, key, value)?),
            "budget.sigma_ga2" => cfg.budget.sigma_ga2 = Some(parse_f64(line, key, value)?),
            "budget.sigma_qe2" => cfg.budget.sigma_qe2 = Some(parse_f64(line, key, value)?),
            "budget.sigma_ge2" => cfg.budget.sigma_ge2 = Some(parse_f64(line, key, value)?),
            "budget.sigma_gv2" => cfg.budget.sigma_gv2 = Some(parse_f64(line, key, value)?),
            "budget.tx_power_dbm" => cfg.power.tx_power_dbm = parse_f64(line, key, value)?,
            "budget.noise_dbm" => cfg.power.noise_dbm = parse_f64(line, key, value)?,
            "slot.n_total" => slot_n_total = Some(parse_usize(line, key, value)?),
            "slot.k_subcarriers" => slot_k = Some(parse_usize(line, key, value)?),
            "slot.dl_p0" => slot_lists.push(("dl_p0", parse_index_list(line, key, value)?)),
            "slot.ul_p0" => slot_lists.push(("ul_p0", parse_index_list(line, key, value)?)),
            "slot.dl_p1" => slot_lists.push(("dl_p1", parse_index_list(line, key, value)?)),
            "slot.ul_p1" => slot_lists.push(("ul_p1", parse_index_list(line, key, value)?)),
            "slot.dl_p2" => slot_lists.push(("dl_p2", parse_index_list(line, key, value)?)),
            "slot.dl_data" => slot_lists.push(("dl_data", parse_index_list(line, key, value)?)),
            "slot.ul_data" => slot_lists.push(("ul_data", parse_index_list(line, key, value)?)),
            "adv.n_r" => cfg.adversary.n_r = parse_usize(line, key, value)?,
            "adv.n_n" => cfg.adversary.n_n = parse_usize(line, key, value)?,
            "adv.n_n_prime" => cfg.adversary.n_n_prime = parse_usize(line, key, value)?,
            "adv.activation_symbol" => activation = Some(parse_usize(line, key, value)?),
            "adv.mode" => cfg.adversary.mode = value.parse().map_err(bad)?,
            "run.seed" => cfg.run.seed = parse_u64(line, key, value)?,
            "run.trials" => cfg.run.trials = parse_usize(line, key, value)?,
            "run.gain_mode" => cfg.run.gain_mode = value.parse().map_err(bad)?,
            "run.constellation" => cfg.run.constellation = value.parse().map_err(bad)?,
            _ => return Err(ScenarioError::UnknownKey { line, key: key.to_string() }),
        }
    }

    if slot_n_total.is_some() || !slot_lists.is_empty() || slot_k.is_some() {
        let n_total = slot_n_total.unwrap_or(cfg.slot.n_total);
        let mut slot = default_slot_plan(n_total)?;
        if let Some(k) = slot_k {
            slot.k_subcarriers = k;
        }
        for (name, list) in slot_lists {
            match name {
                "dl_p0" => slot.dl_p0 = list,
                "ul_p0" => slot.ul_p0 = list,
                "dl_p1" => slot.dl_p1 = list,
                "ul_p1" => slot.ul_p1 = list,
                "dl_p2" => slot.dl_p2 = list,
                "dl_data" => slot.dl_data = list,
                "ul_data" => slot.ul_data = list,
                _ => unreachable!("list names are fixed above"),
            }
        }
        slot.validate()?;
        cfg.slot = slot;
    }

    cfg.panels.active_from = active_from.or(cfg.panels.active_from);
    // The adversary's default activation tracks the slot: she waits out the
    // pilot stages unless told otherwise.
    cfg.adversary.activation_symbol = match activation {
        Some(a) => a,
        None => cfg.slot.first_data_symbol().unwrap_or(cfg.slot.n_total),
    };
    cfg.adversary.validate()?;
    cfg.notes = vec![CASCADE_NOTE.to_string()];
    Ok(cfg)
}

/// Serialize a scenario to canonical config text. `load_scenario` on the
/// result reproduces the config exactly.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let pos = |p: &Position| format!("{},{},{}", p.x, p.y, p.z);
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("geom.bs", pos(&cfg.geometry.bs));
    push("geom.ue", pos(&cfg.geometry.ue));
    push("geom.dris", pos(&cfg.geometry.dris));
    push("geom.aris", pos(&cfg.geometry.aris));
    push("geom.eve", pos(&cfg.geometry.eve));
    push("geom.carrier_ghz", format!("{}", cfg.geometry.carrier_ghz));
    push("ris.m_a", format!("{}", cfg.panels.m_a));
    push("ris.m_e", format!("{}", cfg.panels.m_e));
    if let Some(phi) = cfg.panels.phi_dl {
        push("ris.phi_dl", format!("{phi}"));
    }
    if let Some(phi) = cfg.panels.phi_ul {
        push("ris.phi_ul", format!("{phi}"));
    }
    if let Some(a) = cfg.panels.active_from {
        push("ris.active_from", format!("{a}"));
    }
    for (key, v) in [
        ("budget.sigma_d2", cfg.budget.sigma_d2),
        ("budget.sigma_qa2", cfg.budget.sigma_qa2),
        ("budget.sigma_ga2", cfg.budget.sigma_ga2),
        ("budget.sigma_qe2", cfg.budget.sigma_qe2),
        ("budget.sigma_ge2", cfg.budget.sigma_ge2),
        ("budget.sigma_gv2", cfg.budget.sigma_gv2),
    ] {
        if let Some(v) = v {
            push(key, format!("{v}"));
        }
    }
    push("budget.tx_power_dbm", format!("{}", cfg.power.tx_power_dbm));
    push("budget.noise_dbm", format!("{}", cfg.power.noise_dbm));
    push("slot.n_total", format!("{}", cfg.slot.n_total));
    push("slot.k_subcarriers", format!("{}", cfg.slot.k_subcarriers));
    let list = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
    push("slot.dl_p0", list(&cfg.slot.dl_p0));
    push("slot.ul_p0", list(&cfg.slot.ul_p0));
    push("slot.dl_p1", list(&cfg.slot.dl_p1));
    push("slot.ul_p1", list(&cfg.slot.ul_p1));
    push("slot.dl_p2", list(&cfg.slot.dl_p2));
    push("slot.dl_data", list(&cfg.slot.dl_data));
    push("slot.ul_data", list(&cfg.slot.ul_data));
    push("adv.mode", format!("{}", cfg.adversary.mode));
    push("adv.n_r", format!("{}", cfg.adversary.n_r));
    push("adv.n_n", format!("{}", cfg.adversary.n_n));
    push("adv.n_n_prime", format!("{}", cfg.adversary.n_n_prime));
    push("adv.activation_symbol", format!("{}", cfg.adversary.activation_symbol));
    push("run.seed", format!("{}", cfg.run.seed));
    push("run.trials", format!("{}", cfg.run.trials));
    push("run.gain_mode", format!("{}", cfg.run.gain_mode));
    push("run.constellation", format!("{}", cfg.run.constellation));
    out
}
