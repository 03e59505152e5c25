//! Serialized forms of [`MetricReport`]: versioned JSON and flat CSV.
//!
//! Everything except the `timing_ms` block is a pure function of the inputs
//! and configuration. CSV output carries no timing at all.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::pipeline::{Exclusions, MetricReport, MetricSeries, Sample, StageTiming};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    frames: usize,
    pairs: usize,
    width: usize,
    height: usize,
    flow_source: &'a str,
    vm_patch_size: usize,
    metrics: BTreeMap<&'static str, &'a MetricSeries>,
    exclusions: &'a Exclusions,
    timing_ms: &'a StageTiming,
}

pub fn write_json<W: Write>(report: &MetricReport, mut out: W) -> Result<()> {
    let doc = JsonReport {
        schema_version: SCHEMA_VERSION,
        frames: report.frames,
        pairs: report.pairs(),
        width: report.width,
        height: report.height,
        flow_source: &report.flow_source,
        vm_patch_size: report.vm_patch_size,
        metrics: report.metrics.iter().map(|(m, s)| (m.id(), s)).collect(),
        exclusions: &report.exclusions,
        timing_ms: &report.timing,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn cell(s: Option<Sample>) -> String {
    match s {
        Some(Sample::Value(v)) => format!("{v}"),
        Some(Sample::Infinite) => "inf".into(),
        Some(Sample::Missing) | None => String::new(),
    }
}

/// One row per frame pair (`pair` = index of its first frame) followed by a
/// `mean` row; metric columns in alphabetical order of their identifiers.
pub fn write_csv<W: Write>(report: &MetricReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["pair".to_string()];
    header.extend(report.metrics.keys().map(|m| m.id().to_string()));
    w.write_record(&header)?;
    for t in 0..report.pairs() {
        let mut row = vec![t.to_string()];
        row.extend(report.metrics.values().map(|s| cell(s.values.get(t).copied())));
        w.write_record(&row)?;
    }
    let mut row = vec!["mean".to_string()];
    row.extend(report.metrics.values().map(|s| cell(s.aggregate.map(Sample::Value))));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}
