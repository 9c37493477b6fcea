//! Stage breakdowns and speedups across simulated variants of one workload.

use serde::{Deserialize, Serialize};

use super::sim::{SimReport, Workload};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub workload: Workload,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub name: String,
    pub sample_frac: f64,
    pub load_frac: f64,
    pub dequant_frac: f64,
    pub compute_frac: f64,
    pub epoch_s: f64,
    pub bytes_transferred: f64,
    pub cache_hit_rate: f64,
    pub speedup_vs_baseline: f64,
}

/// One row per variant, baseline first; speedup is `baseline.epoch_s / variant.epoch_s`.
pub fn report(baseline: &Variant, variants: &[Variant]) -> Result<Vec<BreakdownRow>> {
    let mut rows = Vec::with_capacity(variants.len() + 1);
    for v in std::iter::once(baseline).chain(variants) {
        if v.workload != baseline.workload {
            return Err(Error::WorkloadMismatch(format!(
                "{:?} differs from baseline {:?}",
                v.name, baseline.name
            )));
        }
        let r = &v.report;
        let frac = |x: f64| if r.epoch_s > 0.0 { x / r.epoch_s } else { 0.0 };
        rows.push(BreakdownRow {
            name: v.name.clone(),
            sample_frac: frac(r.sample_s),
            load_frac: frac(r.load_s),
            dequant_frac: frac(r.dequant_s),
            compute_frac: frac(r.compute_s),
            epoch_s: r.epoch_s,
            bytes_transferred: r.bytes_transferred,
            cache_hit_rate: r.cache_hit_rate,
            speedup_vs_baseline: baseline.report.epoch_s / r.epoch_s,
        });
    }
    Ok(rows)
}

const HEADER: [&str; 9] = [
    "variant",
    "sample",
    "load",
    "dequant",
    "compute",
    "epoch_s",
    "bytes",
    "hit_rate",
    "speedup",
];

pub fn render_csv(rows: &[BreakdownRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.name,
            r.sample_frac,
            r.load_frac,
            r.dequant_frac,
            r.compute_frac,
            r.epoch_s,
            r.bytes_transferred,
            r.cache_hit_rate,
            r.speedup_vs_baseline
        ));
    }
    out
}

pub fn render_text(rows: &[BreakdownRow]) -> String {
    let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(7);
    let mut out = format!(
        "{:<name_w$}  {:>7} {:>7} {:>7} {:>7}  {:>12} {:>14} {:>8} {:>8}\n",
        HEADER[0], HEADER[1], HEADER[2], HEADER[3], HEADER[4], HEADER[5], HEADER[6], HEADER[7], HEADER[8]
    );
    for r in rows {
        out.push_str(&format!(
            "{:<name_w$}  {:>6.1}% {:>6.1}% {:>6.1}% {:>6.1}%  {:>12.6} {:>14.0} {:>8.3} {:>7.2}x\n",
            r.name,
            100.0 * r.sample_frac,
            100.0 * r.load_frac,
            100.0 * r.dequant_frac,
            100.0 * r.compute_frac,
            r.epoch_s,
            r.bytes_transferred,
            r.cache_hit_rate,
            r.speedup_vs_baseline
        ));
    }
    out
}
