//! Dataset manifests and batch correlation against DMOS.
//!
//! A manifest is a UTF-8 CSV with header `ref,dis,dmos[,group]`. Extra
//! columns are allowed: `width`/`height` give the size of raw YUV inputs,
//! and a column named after a metric identifier (for example `epe`) supplies
//! a precomputed score that is used instead of scoring the videos. Relative
//! paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::correlation::{evaluate_metric, LogisticParams};
use crate::error::{Error, Result};
use crate::media::open_video;
use crate::pipeline::{score_streams, Metric, MetricConfig};

/// Smallest group the logistic fit accepts.
pub const MIN_GROUP_SIZE: usize = 5;

/// Label of the group containing every row.
pub const OVERALL: &str = "overall";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// Line number in the manifest file (the header is line 1).
    pub line: usize,
    pub ref_path: PathBuf,
    pub dis_path: PathBuf,
    pub dmos: f64,
    pub group: Option<String>,
    /// Every other column, keyed by header name.
    pub extra: BTreeMap<String, String>,
}

impl ManifestRow {
    /// Value of `column` in this row, including the fixed columns.
    pub fn column(&self, column: &str) -> Option<String> {
        match column {
            "ref" => Some(self.ref_path.display().to_string()),
            "dis" => Some(self.dis_path.display().to_string()),
            "dmos" => Some(self.dmos.to_string()),
            "group" => self.group.clone(),
            other => self.extra.get(other).cloned(),
        }
    }

    fn dims(&self) -> Result<Option<(usize, usize)>> {
        let get = |k: &str| -> Result<Option<usize>> {
            match self.extra.get(k).map(|s| s.trim()).filter(|s| !s.is_empty()) {
                None => Ok(None),
                Some(s) => s.parse().map(Some).map_err(|_| Error::Manifest {
                    row: self.line,
                    message: format!("{k} '{s}' is not a positive integer"),
                }),
            }
        };
        match (get("width")?, get("height")?) {
            (Some(w), Some(h)) => Ok(Some((w, h))),
            (None, None) => Ok(None),
            _ => Err(Error::Manifest {
                row: self.line,
                message: "width and height must be given together".into(),
            }),
        }
    }

    fn precomputed(&self, metric: Metric) -> Result<Option<f64>> {
        let Some(raw) = self.extra.get(metric.id()).map(|s| s.trim()).filter(|s| !s.is_empty()) else {
            return Ok(None);
        };
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(Error::Manifest {
                row: self.line,
                message: format!("{} score '{raw}' is not a finite number", metric.id()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub columns: Vec<String>,
    pub rows: Vec<ManifestRow>,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub fn parse_manifest<R: Read>(reader: R, base_dir: &Path) -> Result<Manifest> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let columns: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    let find = |name: &str| columns.iter().position(|c| c == name);
    let (Some(ri), Some(di), Some(mi)) = (find("ref"), find("dis"), find("dmos")) else {
        return Err(Error::Manifest {
            row: 1,
            message: format!("header must contain ref,dis,dmos; got {}", columns.join(",")),
        });
    };
    let gi = find("group");

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Manifest {
            row: line,
            message: e.to_string(),
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let need = |idx: usize, name: &str| -> Result<String> {
            let v = field(idx);
            if v.is_empty() {
                return Err(Error::Manifest {
                    row: line,
                    message: format!("empty {name}"),
                });
            }
            Ok(v)
        };
        let ref_path = PathBuf::from(need(ri, "ref")?);
        let dis_path = PathBuf::from(need(di, "dis")?);
        let raw = need(mi, "dmos")?;
        let dmos = match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                return Err(Error::Manifest {
                    row: line,
                    message: format!("dmos '{raw}' is not a finite number"),
                })
            }
        };
        let group = gi.map(field).filter(|g| !g.is_empty());
        let extra = columns
            .iter()
            .enumerate()
            .filter(|(idx, _)| ![Some(ri), Some(di), Some(mi), gi].contains(&Some(*idx)))
            .map(|(idx, name)| (name.clone(), field(idx)))
            .collect();
        rows.push(ManifestRow {
            line,
            ref_path,
            dis_path,
            dmos,
            group,
            extra,
        });
    }
    Ok(Manifest {
        columns,
        rows,
        base_dir: base_dir.to_path_buf(),
    })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = std::fs::File::open(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(file, &base)
}

#[derive(Debug, Clone)]
pub struct CorrelateOptions {
    pub metrics: BTreeSet<Metric>,
    /// Column whose values define the groups; every row is also part of the
    /// `overall` group.
    pub group_by: Option<String>,
    /// Configuration for rows that need scoring from video.
    pub scoring: MetricConfig,
    /// Size of raw YUV inputs when the manifest has no width/height columns.
    pub dims: Option<(usize, usize)>,
}

impl Default for CorrelateOptions {
    fn default() -> Self {
        Self {
            metrics: [Metric::Epe, Metric::Ts, Metric::Div, Metric::VmEpe].into_iter().collect(),
            group_by: None,
            scoring: MetricConfig::default(),
            dims: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub group: String,
    pub metric: String,
    pub n: usize,
    pub plcc: f64,
    pub srcc: f64,
    pub krcc: f64,
    pub rmse: f64,
    pub params: LogisticParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedGroup {
    pub group: String,
    pub metric: String,
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
    pub skipped: Vec<SkippedGroup>,
}

/// Metric scores for one manifest row: precomputed columns where present,
/// otherwise sequence aggregates from scoring the two videos.
pub fn row_scores(manifest: &Manifest, row: &ManifestRow, opts: &CorrelateOptions) -> Result<BTreeMap<Metric, f64>> {
    let mut scores = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for &m in &opts.metrics {
        match row.precomputed(m)? {
            Some(v) => {
                scores.insert(m, v);
            }
            None => {
                missing.insert(m);
            }
        }
    }
    if missing.is_empty() {
        return Ok(scores);
    }

    let mut cfg = opts.scoring.clone();
    cfg.metrics = missing.iter().flat_map(|m| [Some(*m), m.weight_source()]).flatten().collect();
    let dims = row.dims()?.or(opts.dims);
    let reference = open_video(&manifest.resolve(&row.ref_path), dims)?;
    let distorted = open_video(&manifest.resolve(&row.dis_path), dims)?;
    let report = score_streams(reference, distorted, &cfg)?;
    for m in missing {
        let v = report.aggregate(m).ok_or_else(|| Error::Manifest {
            row: row.line,
            message: format!("no {} value could be computed", m.id()),
        })?;
        scores.insert(m, v);
    }
    Ok(scores)
}

/// Fits and evaluates every requested metric overall and per group. Groups
/// smaller than [`MIN_GROUP_SIZE`] or with degenerate data are skipped with a
/// warning.
pub fn correlate(manifest: &Manifest, opts: &CorrelateOptions) -> Result<CorrelationTable> {
    if let Some(col) = &opts.group_by {
        if !manifest.has_column(col) {
            return Err(Error::InvalidArgument(format!(
                "--group-by column '{col}' is not in the manifest header ({})",
                manifest.columns.join(",")
            )));
        }
    }

    let scored: Vec<BTreeMap<Metric, f64>> = manifest
        .rows
        .iter()
        .map(|row| row_scores(manifest, row, opts))
        .collect::<Result<_>>()?;

    // group label -> row indices, overall first, then groups in sorted order
    let mut groups: Vec<(String, Vec<usize>)> = vec![(OVERALL.to_string(), (0..manifest.rows.len()).collect())];
    if let Some(col) = &opts.group_by {
        let mut by: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, row) in manifest.rows.iter().enumerate() {
            let label = row.column(col).filter(|s| !s.is_empty()).unwrap_or_else(|| "(none)".into());
            by.entry(label).or_default().push(i);
        }
        groups.extend(by);
    }

    let mut table = CorrelationTable {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for (group, members) in &groups {
        for &m in &opts.metrics {
            let scores: Vec<f64> = members.iter().map(|&i| scored[i][&m]).collect();
            let dmos: Vec<f64> = members.iter().map(|&i| manifest.rows[i].dmos).collect();
            let skip = |reason: String| SkippedGroup {
                group: group.clone(),
                metric: m.id().to_string(),
                n: members.len(),
                reason,
            };
            if members.len() < MIN_GROUP_SIZE {
                let s = skip(format!("needs at least {MIN_GROUP_SIZE} rows"));
                log::warn!("skipping group '{}' for {}: {} rows, {}", s.group, s.metric, s.n, s.reason);
                table.skipped.push(s);
                continue;
            }
            match evaluate_metric(&scores, &dmos) {
                Ok(r) => table.rows.push(CorrelationRow {
                    group: group.clone(),
                    metric: m.id().to_string(),
                    n: r.n,
                    plcc: r.plcc,
                    srcc: r.srcc,
                    krcc: r.krcc,
                    rmse: r.rmse,
                    params: r.params,
                }),
                Err(Error::Degenerate(msg)) => {
                    let s = skip(msg);
                    log::warn!("skipping group '{}' for {}: {}", s.group, s.metric, s.reason);
                    table.skipped.push(s);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(table)
}

/// Long-format table: one line per (group, metric).
pub fn write_table_csv<W: Write>(table: &CorrelationTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "group", "metric", "n", "plcc", "srcc", "krcc", "rmse", "beta1", "beta2", "beta3", "beta4",
    ])?;
    for r in &table.rows {
        w.write_record([
            r.group.clone(),
            r.metric.clone(),
            r.n.to_string(),
            r.plcc.to_string(),
            r.srcc.to_string(),
            r.krcc.to_string(),
            r.rmse.to_string(),
            r.params.beta1.to_string(),
            r.params.beta2.to_string(),
            r.params.beta3.to_string(),
            r.params.beta4.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_json<W: Write>(table: &CorrelationTable, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, table)?;
    out.write_all(b"\n")?;
    Ok(())
}
