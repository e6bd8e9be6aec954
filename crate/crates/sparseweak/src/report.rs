//! Byte-stable report emission. Keys are written in a fixed order and every
//! real is printed with 17 significant digits, so identical inputs produce
//! byte-identical JSON and CSV across runs and thread counts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{ExperimentConfig, RemovalMode};
use crate::error::Result;
use crate::weaktype::{ExperimentReport, SanityReport};

/// 17 significant digits, scientific: round-trips every f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "\"nan\"".to_string()
    } else if x > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

fn config_json(cfg: &ExperimentConfig) -> String {
    let removal = match cfg.removal {
        RemovalMode::FracMaximal => "frac",
        RemovalMode::PlainMaximal => "plain",
    };
    format!(
        "{{\"d\":{},\"l\":{},\"alpha\":{},\"nu\":{},\"lambda1\":{},\"trials\":{},\"seed\":{},\"young\":{},\"f\":{},\"w\":{},\"sparse\":{},\"removal\":\"{}\"}}",
        cfg.d,
        cfg.level,
        fmt_f64(cfg.alpha),
        fmt_f64(cfg.nu),
        fmt_f64(cfg.lambda1),
        cfg.trials,
        cfg.seed,
        cfg.young.canonical_json(),
        cfg.f_spec.canonical_json(),
        cfg.w_spec.canonical_json(),
        cfg.sparse.canonical_json(),
        removal
    )
}

/// JSON document: config echo, per-trial rows with the lemma ledger, and the
/// aggregate block.
pub fn experiment_json(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"config\": {},", config_json(&report.config));
    out.push_str("  \"per_trial\": [");
    for (i, t) in report.trials.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    {");
        let _ = write!(
            out,
            "\"trial\":{},\"seed\":{},\"lhs\":{},\"rhs\":{},\"ratio\":{},\"lemma_ledger\":[",
            t.trial,
            t.seed,
            fmt_f64(t.lhs),
            fmt_f64(t.rhs),
            fmt_f64(t.ratio)
        );
        for (j, e) in t.ledger.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "{{\"k\":{},\"lhs_k\":{},\"layer_bound\":{},\"C_k\":{}}}",
                e.k,
                fmt_f64(e.lhs_k),
                fmt_f64(e.layer_bound),
                fmt_f64(e.c_k)
            );
        }
        out.push_str("]}");
    }
    if report.trials.is_empty() {
        out.push_str("],\n");
    } else {
        out.push_str("\n  ],\n");
    }
    let a = &report.aggregate;
    let _ = writeln!(
        out,
        "  \"aggregate\": {{\"max_ratio\":{},\"mean_ratio\":{},\"p95_ratio\":{},\"c_phi\":{}}}",
        fmt_f64(a.max_ratio),
        fmt_f64(a.mean_ratio),
        fmt_f64(a.p95_ratio),
        fmt_f64(a.c_phi)
    );
    out.push_str("}\n");
    out
}

/// CSV companion: `trial,seed,lhs,rhs,ratio`.
pub fn experiment_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("trial,seed,lhs,rhs,ratio\n");
    for t in &report.trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.trial,
            t.seed,
            fmt_f64(t.lhs),
            fmt_f64(t.rhs),
            fmt_f64(t.ratio)
        );
    }
    out
}

pub fn sanity_json(report: &SanityReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(
        out,
        "  \"config\": {{\"d\":{},\"trials\":{},\"seed\":{},\"delta\":{},\"alpha\":{},\"levels\":[{}],\"climb_steps\":{}}},",
        report.config.d,
        report.config.trials,
        report.config.seed,
        fmt_f64(report.config.delta),
        fmt_f64(report.config.alpha),
        report
            .config
            .levels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(","),
        report.config.climb_steps
    );
    let _ = writeln!(
        out,
        "  \"fefferman_stein\": {{\"trials\":{},\"max_ratio\":{}}},",
        report.fs_trials,
        fmt_f64(report.fs_max_ratio)
    );
    let _ = writeln!(
        out,
        "  \"monotonicity\": {{\"trials\":{},\"violations\":{}}},",
        report.mono_trials, report.mono_violations
    );
    out.push_str("  \"adversarial\": [");
    for (i, row) in report.adversarial.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "\n    {{\"l\":{},\"cell\":{},\"ratio\":{}}}",
            row.level,
            row.cell,
            fmt_f64(row.ratio)
        );
    }
    if report.adversarial.is_empty() {
        out.push_str("]\n");
    } else {
        out.push_str("\n  ]\n");
    }
    out.push_str("}\n");
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}
