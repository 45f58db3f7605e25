//! Report serialization: JSON, CSV, or an aligned text table.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{BenchError, Result};
use crate::run::{BenchReport, KernelRow};

pub const CSV_HEADER: [&str; 8] = [
    "kernel",
    "n_sites",
    "t_scalar_s",
    "t_vec_s",
    "boost",
    "max_energy_rel",
    "max_force_rel",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Human,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "human" => Ok(Format::Human),
            other => Err(BenchError::Config(format!(
                "unknown format '{other}' (expected json, csv or human)"
            ))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

pub fn format_boost(b: f64) -> String {
    format!("{b:.4}")
}

fn csv_record(r: &KernelRow) -> [String; 8] {
    [
        r.kernel.to_string(),
        r.n_sites.to_string(),
        opt(r.t_scalar_s),
        opt(r.t_vec_s),
        r.boost.map(format_boost).unwrap_or_default(),
        opt(r.max_energy_rel),
        opt(r.max_force_rel),
        r.status.as_str().to_string(),
    ]
}

pub fn emit_report(report: &BenchReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in &report.rows {
                w.write_record(csv_record(r))?;
            }
            let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        Format::Human => Ok(human(report)),
    }
}

fn human(report: &BenchReport) -> String {
    let shards = report.rows.iter().any(|r| r.shard > 0);
    let mut header = vec!["kernel"];
    if shards {
        header.push("shard");
    }
    header.extend(["n_sites", "t_scalar (s)", "t_vec (s)", "boost", "energy rel", "force rel", "status"]);
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.kernel.to_string()];
            if shards {
                v.push(r.shard.to_string());
            }
            v.extend([
                r.n_sites.to_string(),
                opt_sci(r.t_scalar_s),
                opt_sci(r.t_vec_s),
                r.boost.map(format_boost).unwrap_or_else(|| "-".into()),
                opt_sci(r.max_energy_rel),
                opt_sci(r.max_force_rel),
                r.status.as_str().to_string(),
            ]);
            v
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "{}", report.environment);
    let _ = writeln!(
        out,
        "{:?} system, {} sites, seed {}, {} repeats after {} warmup",
        report.system_kind, report.n_sites, report.seed, report.repeats, report.warmup
    );
    let line = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let head: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", line(&head));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r));
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}
