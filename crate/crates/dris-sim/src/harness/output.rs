//! CSV rendering and file output.
//!
//! Every file opens with `# key=value` metadata lines (schema version,
//! master seed, a digest of the full scenario, and the sweep axis or
//! example label) so a result can always be traced back to its inputs.
//! Floats render through Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::cep::ScenarioTag;
use crate::scenario::{serialize_scenario, ScenarioConfig};

use super::sweep::{ClosedForms, SweepAxis, SweepRow};
use super::trial::CepDemo;
use super::HarnessError;

/// Digest of the complete scenario: the first 8 bytes of the SHA-256 of its
/// canonical serialization, hex-encoded.
pub fn config_hash_hex(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(serialize_scenario(cfg).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Quote one CSV field per RFC 4180 when it needs it.
fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn metadata(cfg: &ScenarioConfig, context_key: &str, context_value: &str) -> String {
    format!(
        "# schema=1\n# seed={}\n# config={}\n# {}={}\n",
        cfg.run.seed,
        config_hash_hex(cfg),
        context_key,
        context_value
    )
}

const CLOSED_COLUMNS: &str = "value,eta,rho_d,rho_a,rho_eb,rho_eu,c_d,c_a,c_e,asr_reciprocal,\
asr_nonreciprocal,beta,p2_ue,p2_bs,p_fake_defended,p_fake_clamped,p_fake_reciprocal";

fn closed_fields(value: f64, c: &ClosedForms) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        value,
        c.eta,
        c.rho_d,
        c.rho_a,
        c.rho_eb,
        c.rho_eu,
        c.c_d,
        c.c_a,
        c.c_e,
        c.asr_reciprocal,
        c.asr_nonreciprocal,
        c.beta,
        c.p2_ue,
        c.p2_bs,
        c.p_fake_defended,
        u8::from(c.p_fake_clamped),
        c.p_fake_reciprocal
    )
}

/// Render the closed-form table for a sweep.
pub fn render_closed_csv(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    rows: &[(f64, ClosedForms)],
) -> String {
    let mut out = metadata(cfg, "axis", &axis.to_string());
    out.push_str(CLOSED_COLUMNS);
    out.push('\n');
    for (value, closed) in rows {
        out.push_str(&closed_fields(*value, closed));
        out.push('\n');
    }
    out
}

/// Render the full sweep table: closed forms plus Monte-Carlo aggregates.
pub fn render_sweep_csv(cfg: &ScenarioConfig, axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut out = metadata(cfg, "axis", &axis.to_string());
    out.push_str(CLOSED_COLUMNS);
    out.push_str(
        ",trials,ser_dl,ser_ul,eve_ser_dl,eve_ser_ul,fake_injected,fake_decoded,flag_rate,\
snr_d_hat,snr_a_hat,snr_eb_hat,snr_eu_hat,p2_ue_hat,p2_bs_hat",
    );
    out.push('\n');
    for row in rows {
        let a = &row.agg;
        out.push_str(&closed_fields(row.value, &row.closed));
        let _ = write!(
            out,
            ",{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            a.trials,
            a.mean_ser_dl,
            a.mean_ser_ul,
            fmt_opt(a.eve_ser_dl),
            fmt_opt(a.eve_ser_ul),
            a.fake_injected,
            a.fake_decoded,
            a.flag_rate,
            a.mean_snr_d,
            a.mean_snr_a,
            a.mean_snr_eb,
            a.mean_snr_eu,
            a.p2_hat_ue,
            a.p2_hat_bs
        );
        out.push('\n');
    }
    out
}

fn tag_label(tag: ScenarioTag) -> &'static str {
    match tag {
        ScenarioTag::Opt1 => "opt1",
        ScenarioTag::Opt2 => "opt2",
        ScenarioTag::Polluted => "polluted",
    }
}

/// Render the worked estimation example: truth, stage averages, recovered
/// state and verdict flags as `field,re,im` rows (scalars use `re` alone).
pub fn render_cep_demo_csv(cfg: &ScenarioConfig, demo: &CepDemo) -> String {
    let mut out = metadata(cfg, "scenario", demo.label);
    out.push_str("field,re,im\n");
    let mut complex_row = |name: &str, v: Complex64| {
        let _ = writeln!(out, "{},{},{}", csv_field(name), v.re, v.im);
    };
    complex_row("truth_h_d", demo.truth_h_d);
    complex_row("truth_h_a_dl", demo.truth_h_a_dl);
    complex_row("truth_h_a_ul", demo.truth_h_a_ul);
    complex_row("truth_h_e_u", demo.truth_h_e_u);
    complex_row("truth_h_e_b", demo.truth_h_e_b);

    let o = &demo.outcome;
    let mut opt_row = |name: &str, v: Option<Complex64>| {
        if let Some(v) = v {
            let _ = writeln!(out, "{},{},{}", csv_field(name), v.re, v.im);
        }
    };
    opt_row("ue_stage_dl_p0", o.ue_stages.dl_p0);
    opt_row("ue_stage_dl_p1", o.ue_stages.dl_p1);
    opt_row("ue_stage_dl_p2", o.ue_stages.dl_p2);
    opt_row("bs_stage_ul_p0", o.bs_stages.ul_p0);
    opt_row("bs_stage_ul_p1", o.bs_stages.ul_p1);
    opt_row("ue_hat_h_a_dl", o.ue_csi.h_a_dl);
    opt_row("ue_hat_h_a_ul", o.ue_csi.h_a_ul);
    opt_row("ue_hat_h_d", o.ue_csi.h_d);
    opt_row("ue_baseline_p0", o.ue_csi.baseline_p0);
    opt_row("bs_hat_h_a_dl", o.bs_csi.h_a_dl);
    opt_row("bs_hat_h_a_ul", o.bs_csi.h_a_ul);
    opt_row("bs_baseline_p0", o.bs_csi.baseline_p0);

    let _ = writeln!(out, "tag,{},", tag_label(o.tag));
    let _ = writeln!(out, "ser_dl,{},", o.ser_dl);
    let _ = writeln!(out, "ser_ul,{},", o.ser_ul);
    let _ = writeln!(out, "fake_injected,{},", o.fake_injected);
    let _ = writeln!(out, "fake_decoded,{},", o.fake_decoded);
    let _ = writeln!(out, "polluted,{},", u8::from(o.ue_csi.polluted));
    let _ = writeln!(out, "flagged,{},", u8::from(o.flagged));
    out
}

/// Write text to a file, attaching the path to any failure.
pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text)
        .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::super::sweep::{Aggregates, ClosedForms};
    use super::*;
    use crate::scenario::default_config;

    fn sample_row() -> SweepRow {
        SweepRow {
            value: -30.0,
            closed: ClosedForms {
                eta: 0.5,
                rho_d: 1.0,
                rho_a: 2.0,
                rho_eb: 3.0,
                rho_eu: 4.0,
                c_d: 0.5,
                c_a: 0.25,
                c_e: 0.125,
                asr_reciprocal: -0.5,
                asr_nonreciprocal: 0.25,
                beta: 1.5e-8,
                p2_ue: 0.5,
                p2_bs: 0.25,
                p_fake_defended: 0.0,
                p_fake_clamped: true,
                p_fake_reciprocal: 0.5,
            },
            agg: Aggregates {
                trials: 10,
                mean_ser_dl: 0.1,
                mean_ser_ul: 0.2,
                eve_ser_dl: None,
                eve_ser_ul: Some(0.75),
                fake_injected: 17,
                fake_decoded: 4,
                flag_rate: 0.3,
                mean_snr_d: 1.125,
                mean_snr_a: 2.25,
                mean_snr_eb: 3.375,
                mean_snr_eu: 4.5,
                p2_hat_ue: 0.4,
                p2_hat_bs: 0.2,
            },
        }
    }

    #[test]
    fn config_digest_is_stable_and_input_sensitive() {
        let cfg = default_config();
        let a = config_hash_hex(&cfg);
        let b = config_hash_hex(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
        let mut other = default_config();
        other.panels.m_a = 999;
        assert_ne!(a, config_hash_hex(&other));
    }

    #[test]
    fn fields_with_separators_are_quoted() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn closed_csv_has_metadata_header_and_rows() {
        let cfg = default_config();
        let row = sample_row();
        let text = render_closed_csv(&cfg, SweepAxis::TxPowerDbm, &[(row.value, row.closed)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert_eq!(lines[1], "# seed=1");
        assert!(lines[2].starts_with("# config="));
        assert_eq!(lines[3], "# axis=tx_power_dbm");
        assert!(lines[4].starts_with("value,eta,rho_d"));
        assert_eq!(
            lines[5],
            "-30,0.5,1,2,3,4,0.5,0.25,0.125,-0.5,0.25,0.000000015,0.5,0.25,0,1,0.5"
        );
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn sweep_csv_appends_aggregates_and_blanks_missing_rates() {
        let cfg = default_config();
        let text = render_sweep_csv(&cfg, SweepAxis::MA, &[sample_row()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[3], "# axis=m_a");
        assert!(lines[4].ends_with(
            ",trials,ser_dl,ser_ul,eve_ser_dl,eve_ser_ul,fake_injected,fake_decoded,flag_rate,\
snr_d_hat,snr_a_hat,snr_eb_hat,snr_eu_hat,p2_ue_hat,p2_bs_hat"
        ));
        // The listener never heard downlink data: empty field, not zero.
        assert!(lines[5].contains(",10,0.1,0.2,,0.75,17,4,0.3,"));
    }

    #[test]
    fn demo_csv_carries_truth_estimates_and_verdict() {
        let cfg = default_config();
        let demo = crate::harness::run_cep_demo(&cfg, "polluted").unwrap();
        let text = render_cep_demo_csv(&cfg, &demo);
        assert!(text.starts_with("# schema=1\n"));
        assert!(text.contains("# scenario=polluted\n"));
        assert!(text.contains("field,re,im\n"));
        assert!(text.contains("truth_h_d,"));
        assert!(text.contains("ue_hat_h_a_dl,"));
        assert!(text.contains("tag,polluted,"));
        assert!(text.contains("polluted,1,"));
        // Option fields that are absent must not appear at all.
        assert!(!text.contains("ue_hat_h_d,"));
    }

    #[test]
    fn writing_attaches_the_path_on_failure() {
        let dir = std::env::temp_dir().join(format!("dris-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.csv");
        write_text(&path, "x,y\n1,2\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,y\n1,2\n");
        let missing = dir.join("no-such-dir").join("table.csv");
        let err = write_text(&missing, "x").unwrap_err();
        assert!(err.to_string().contains("no-such-dir"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
