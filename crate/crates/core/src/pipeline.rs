//! Sequence-level scoring and the per-frame timing benchmark.
//!
//! For each consecutive pair `t → t+1` the reference and distorted motion
//! fields are obtained (estimated or loaded), then every enabled metric is
//! evaluated. Temporal smoothness follows the distorted trajectory into the
//! next pair's field, so the last pair has no sample. Image metrics compare
//! the luma of frame `t+1`. Work is processed in chunks of pairs on a
//! bounded worker pool; every value is computed independently and reduced in
//! frame order, so reports do not depend on the worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{estimate_flow, EstimatorConfig, MotionEstimator};
use crate::flow::{read_flo_file, MotionField};
use crate::image::{cap_psnr, psnr, ssim, weighted_metric};
use crate::media::{luma, Frame, VideoSequence};
use crate::spatial::{div_metric, vm_epe, VmConfig};
use crate::temporal::{epe, temporal_smoothness_detailed};

/// Every metric the pipeline can report. Declaration order is the
/// alphabetical order of the identifiers, which fixes report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Div,
    Epe,
    Psnr,
    PsnrDiv,
    PsnrEpe,
    PsnrTs,
    SdisSref,
    Ssim,
    SsimDiv,
    SsimEpe,
    SsimTs,
    Ts,
    VmEpe,
}

impl Metric {
    pub const ALL: [Metric; 13] = [
        Metric::Div,
        Metric::Epe,
        Metric::Psnr,
        Metric::PsnrDiv,
        Metric::PsnrEpe,
        Metric::PsnrTs,
        Metric::SdisSref,
        Metric::Ssim,
        Metric::SsimDiv,
        Metric::SsimEpe,
        Metric::SsimTs,
        Metric::Ts,
        Metric::VmEpe,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Metric::Div => "div",
            Metric::Epe => "epe",
            Metric::Psnr => "psnr",
            Metric::PsnrDiv => "psnr-div",
            Metric::PsnrEpe => "psnr-epe",
            Metric::PsnrTs => "psnr-ts",
            Metric::SdisSref => "sdis-sref",
            Metric::Ssim => "ssim",
            Metric::SsimDiv => "ssim-div",
            Metric::SsimEpe => "ssim-epe",
            Metric::SsimTs => "ssim-ts",
            Metric::Ts => "ts",
            Metric::VmEpe => "vm-epe",
        }
    }

    pub fn valid_names() -> String {
        Metric::ALL.iter().map(|m| m.id()).collect::<Vec<_>>().join(", ")
    }

    /// Motion metric supplying the weight of a weighted image metric.
    pub fn weight_source(self) -> Option<Metric> {
        match self {
            Metric::PsnrDiv | Metric::SsimDiv => Some(Metric::Div),
            Metric::PsnrEpe | Metric::SsimEpe => Some(Metric::Epe),
            Metric::PsnrTs | Metric::SsimTs => Some(Metric::Ts),
            _ => None,
        }
    }

    fn image_base(self) -> Option<Metric> {
        match self {
            Metric::Psnr | Metric::PsnrDiv | Metric::PsnrEpe | Metric::PsnrTs => Some(Metric::Psnr),
            Metric::Ssim | Metric::SsimDiv | Metric::SsimEpe | Metric::SsimTs => Some(Metric::Ssim),
            _ => None,
        }
    }

    fn needs_reference_flow(self) -> bool {
        matches!(self, Metric::Epe | Metric::SdisSref)
    }

    fn needs_distorted_flow(self) -> bool {
        matches!(self, Metric::Epe | Metric::Ts | Metric::Div | Metric::VmEpe | Metric::SdisSref)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Metric::ALL
            .into_iter()
            .find(|m| m.id() == key)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown metric '{s}'; valid names: {}",
                    Metric::valid_names()
                ))
            })
    }
}

/// Parses a comma-separated metric list.
pub fn parse_metric_list(list: &str) -> Result<BTreeSet<Metric>> {
    let set: BTreeSet<Metric> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Metric::from_str)
        .collect::<Result<_>>()?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("metric list is empty".into()));
    }
    Ok(set)
}

/// Where motion fields come from.
#[derive(Clone)]
pub enum FlowSource {
    Builtin(EstimatorConfig),
    /// Precomputed fields at `<dir>/ref/NNNNNN.flo` and `<dir>/dis/NNNNNN.flo`,
    /// where NNNNNN is the index of the first frame of the pair.
    Directory(PathBuf),
    Custom(Arc<dyn MotionEstimator>),
}

impl fmt::Debug for FlowSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowSource::Builtin(cfg) => f.debug_tuple("Builtin").field(cfg).finish(),
            FlowSource::Directory(p) => f.debug_tuple("Directory").field(p).finish(),
            FlowSource::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Default for FlowSource {
    fn default() -> Self {
        FlowSource::Builtin(EstimatorConfig::default())
    }
}

impl FlowSource {
    /// Parses `builtin` or `dir:<path>`.
    pub fn parse(s: &str, estimator: EstimatorConfig) -> Result<Self> {
        if s == "builtin" {
            Ok(FlowSource::Builtin(estimator))
        } else if let Some(path) = s.strip_prefix("dir:") {
            if path.is_empty() {
                return Err(Error::InvalidArgument("--flow dir: needs a path".into()));
            }
            Ok(FlowSource::Directory(PathBuf::from(path)))
        } else {
            Err(Error::InvalidArgument(format!(
                "unknown flow source '{s}'; expected 'builtin' or 'dir:<path>'"
            )))
        }
    }

    fn describe(&self) -> String {
        match self {
            FlowSource::Builtin(_) => "builtin".into(),
            FlowSource::Directory(p) => format!("dir:{}", p.display()),
            FlowSource::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub metrics: BTreeSet<Metric>,
    pub flow: FlowSource,
    pub vm: VmConfig,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metrics: Metric::ALL.into_iter().collect(),
            flow: FlowSource::default(),
            vm: VmConfig::default(),
            threads: None,
        }
    }
}

impl MetricConfig {
    pub fn with_metrics(metrics: impl IntoIterator<Item = Metric>) -> Self {
        Self {
            metrics: metrics.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("no metrics enabled".into()));
        }
        for m in &self.metrics {
            if let Some(src) = m.weight_source() {
                if !self.metrics.contains(&src) {
                    return Err(Error::InvalidConfig(format!("{m} requires {src} to be enabled")));
                }
            }
        }
        if let FlowSource::Builtin(cfg) = &self.flow {
            cfg.validate()?;
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be >= 1".into()));
        }
        Ok(())
    }

    fn needs_reference_flow(&self) -> bool {
        self.metrics.iter().any(|m| m.needs_reference_flow())
    }

    fn needs_distorted_flow(&self) -> bool {
        self.metrics.iter().any(|m| m.needs_distorted_flow())
    }

    fn needs_image(&self, base: Metric) -> bool {
        self.metrics.iter().any(|m| m.image_base() == Some(base))
    }
}

/// One per-pair value. Identical frames give an infinite PSNR; the last
/// pair has no temporal smoothness sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Value(f64),
    Infinite,
    Missing,
}

impl Sample {
    /// Value entering sequence means.
    pub fn for_mean(self) -> Option<f64> {
        match self {
            Sample::Value(v) => Some(v),
            Sample::Infinite => Some(cap_psnr(f64::INFINITY)),
            Sample::Missing => None,
        }
    }
}

impl Serialize for Sample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sample::Value(v) => s.serialize_f64(*v),
            Sample::Infinite => s.serialize_str("inf"),
            Sample::Missing => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    /// Mean of the available per-pair values; `None` when there are none.
    pub aggregate: Option<f64>,
    pub values: Vec<Sample>,
    /// Pairs without a value.
    pub missing: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Exclusions {
    /// Trajectories that left the frame, summed over pairs.
    pub ts_excluded_pixels: usize,
    /// Pairs whose every trajectory left the frame (reported as 0).
    pub ts_empty_pairs: usize,
    /// Unknown-flow sentinels replaced by zero in loaded .flo files.
    pub flo_sentinels_replaced: usize,
}

/// Summed per-stage wall time in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTiming {
    pub motion_estimation_ms: f64,
    pub calc_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub flow_source: String,
    pub vm_patch_size: usize,
    pub metrics: BTreeMap<Metric, MetricSeries>,
    pub exclusions: Exclusions,
    pub timing: StageTiming,
}

impl MetricReport {
    pub fn pairs(&self) -> usize {
        self.frames.saturating_sub(1)
    }

    pub fn aggregate(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(&metric).and_then(|s| s.aggregate)
    }
}

/// Loads or estimates motion fields for one side of the comparison.
enum FlowProvider<'a> {
    Estimator(&'a dyn MotionEstimator),
    Builtin(EstimatorConfig),
    Directory(PathBuf),
}

impl FlowProvider<'_> {
    fn flow(&self, side: &str, a: &Frame, b: &Frame) -> Result<(MotionField, usize)> {
        let field = match self {
            FlowProvider::Builtin(cfg) => return Ok((estimate_flow(a, b, cfg)?, 0)),
            FlowProvider::Estimator(e) => return Ok((e.estimate(a, b)?, 0)),
            FlowProvider::Directory(dir) => {
                let path = dir.join(side).join(format!("{:06}.flo", a.index()));
                read_flo_file(&path)?
            }
        };
        let dims = (a.width(), a.height());
        if field.field.dims() != dims {
            return Err(Error::mismatch(dims, field.field.dims()));
        }
        Ok((field.field, field.replaced))
    }
}

struct PairFlows {
    reference: Option<MotionField>,
    distorted: Option<MotionField>,
    replaced: usize,
    elapsed: Duration,
}

#[derive(Default)]
struct PairValues {
    values: BTreeMap<Metric, Sample>,
    calc: BTreeMap<Metric, Duration>,
    ts_excluded: usize,
    ts_empty: bool,
}

fn timed<T>(calc: &mut BTreeMap<Metric, Duration>, m: Metric, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *calc.entry(m).or_default() += start.elapsed();
    out
}

fn pair_values(
    cfg: &MetricConfig,
    ref_next: &Frame,
    dis_next: &Frame,
    flows: &PairFlows,
    next_distorted: Option<&MotionField>,
) -> Result<PairValues> {
    let mut out = PairValues::default();
    let on = |m: Metric| cfg.metrics.contains(&m);
    let mut motion: BTreeMap<Metric, Option<f64>> = BTreeMap::new();

    if on(Metric::Epe) {
        let (r, d) = (flows.reference.as_ref().unwrap(), flows.distorted.as_ref().unwrap());
        let v = timed(&mut out.calc, Metric::Epe, || epe(r, d))?;
        motion.insert(Metric::Epe, Some(v));
    }
    if on(Metric::Ts) {
        let d = flows.distorted.as_ref().unwrap();
        let v = match next_distorted {
            Some(n) => {
                let o = timed(&mut out.calc, Metric::Ts, || temporal_smoothness_detailed(d, n))?;
                out.ts_excluded = o.excluded_pixels;
                out.ts_empty = o.valid_pixels == 0;
                Some(o.value)
            }
            None => None,
        };
        motion.insert(Metric::Ts, v);
    }
    if on(Metric::Div) {
        let d = flows.distorted.as_ref().unwrap();
        let v = timed(&mut out.calc, Metric::Div, || div_metric(d))?;
        motion.insert(Metric::Div, Some(v));
    }
    let mut vm_dis = None;
    if on(Metric::VmEpe) {
        let d = flows.distorted.as_ref().unwrap();
        let v = timed(&mut out.calc, Metric::VmEpe, || Ok(vm_epe(d, &cfg.vm)))?;
        vm_dis = Some(v);
        motion.insert(Metric::VmEpe, Some(v));
    }
    if on(Metric::SdisSref) {
        let (r, d) = (flows.reference.as_ref().unwrap(), flows.distorted.as_ref().unwrap());
        let v = timed(&mut out.calc, Metric::SdisSref, || {
            let dis = vm_dis.unwrap_or_else(|| vm_epe(d, &cfg.vm));
            Ok((dis - vm_epe(r, &cfg.vm)).abs())
        })?;
        motion.insert(Metric::SdisSref, Some(v));
    }
    for (m, v) in &motion {
        out.values.insert(*m, v.map_or(Sample::Missing, Sample::Value));
    }

    let (rl, dl) = (luma(ref_next), luma(dis_next));
    let mut psnr_db = None;
    if cfg.needs_image(Metric::Psnr) {
        let db = timed(&mut out.calc, Metric::Psnr, || psnr(&rl, &dl))?;
        if on(Metric::Psnr) {
            let s = if db.is_infinite() { Sample::Infinite } else { Sample::Value(db) };
            out.values.insert(Metric::Psnr, s);
        }
        psnr_db = Some(cap_psnr(db));
    }
    let mut ssim_v = None;
    if cfg.needs_image(Metric::Ssim) {
        let s = timed(&mut out.calc, Metric::Ssim, || ssim(&rl, &dl))?;
        if on(Metric::Ssim) {
            out.values.insert(Metric::Ssim, Sample::Value(s));
        }
        ssim_v = Some(s);
    }
    for &m in &cfg.metrics {
        let (Some(src), Some(base)) = (m.weight_source(), m.image_base()) else {
            continue;
        };
        let score = if base == Metric::Psnr { psnr_db } else { ssim_v }.unwrap();
        let sample = match motion[&src] {
            Some(alpha) => Sample::Value(weighted_metric(score, alpha)?),
            None => Sample::Missing,
        };
        out.values.insert(m, sample);
    }
    Ok(out)
}

fn check_frames(r: &Frame, d: &Frame, dims: (usize, usize)) -> Result<()> {
    for f in [r, d] {
        if (f.width(), f.height()) != dims {
            return Err(Error::mismatch(dims, (f.width(), f.height())));
        }
    }
    Ok(())
}

const CHUNK_PAIRS: usize = 8;

struct Accumulator {
    values: BTreeMap<Metric, Vec<Sample>>,
    exclusions: Exclusions,
    est: Duration,
    calc: BTreeMap<Metric, Duration>,
}

impl Accumulator {
    fn push(&mut self, pv: PairValues) {
        for (m, s) in pv.values {
            self.values.entry(m).or_default().push(s);
        }
        for (m, d) in pv.calc {
            *self.calc.entry(m).or_default() += d;
        }
        self.exclusions.ts_excluded_pixels += pv.ts_excluded;
        self.exclusions.ts_empty_pairs += usize::from(pv.ts_empty);
    }
}

/// Scores a distorted stream against its reference while holding at most a
/// chunk of frames in memory.
pub fn score_streams<R, D>(reference: R, distorted: D, cfg: &MetricConfig) -> Result<MetricReport>
where
    R: IntoIterator<Item = Result<Frame>>,
    D: IntoIterator<Item = Result<Frame>>,
{
    cfg.validate()?;
    let pool = match cfg.threads {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?,
        ),
        None => None,
    };
    score_streams_inner(reference.into_iter(), distorted.into_iter(), cfg, pool.as_ref())
}

fn in_pool<T: Send>(pool: Option<&rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn next_pair(
    r: &mut impl Iterator<Item = Result<Frame>>,
    d: &mut impl Iterator<Item = Result<Frame>>,
    counts: &mut (usize, usize),
) -> Result<Option<(Frame, Frame)>> {
    let a = r.next().transpose()?;
    let b = d.next().transpose()?;
    counts.0 += usize::from(a.is_some());
    counts.1 += usize::from(b.is_some());
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => {
            // drain both so the error carries the real totals
            counts.0 += r.count();
            counts.1 += d.count();
            Err(Error::FrameCountMismatch {
                reference: counts.0,
                distorted: counts.1,
            })
        }
    }
}

fn score_streams_inner(
    mut reference: impl Iterator<Item = Result<Frame>>,
    mut distorted: impl Iterator<Item = Result<Frame>>,
    cfg: &MetricConfig,
    pool: Option<&rayon::ThreadPool>,
) -> Result<MetricReport> {
    let mut counts = (0, 0);
    let Some(first) = next_pair(&mut reference, &mut distorted, &mut counts)? else {
        return Err(Error::TooSmall("sequences need at least 2 frames".into()));
    };
    let dims = (first.0.width(), first.0.height());
    check_frames(&first.0, &first.1, dims)?;

    let builtin;
    let provider = match &cfg.flow {
        FlowSource::Builtin(c) => FlowProvider::Builtin(*c),
        FlowSource::Directory(p) => FlowProvider::Directory(p.clone()),
        FlowSource::Custom(e) => {
            builtin = e.clone();
            FlowProvider::Estimator(builtin.as_ref())
        }
    };
    let (need_ref, need_dis) = (cfg.needs_reference_flow(), cfg.needs_distorted_flow());

    let mut acc = Accumulator {
        values: BTreeMap::new(),
        exclusions: Exclusions::default(),
        est: Duration::ZERO,
        calc: BTreeMap::new(),
    };
    // frames[0] is the first frame of the next pair to process
    let mut frames = vec![first];
    // the last pair of the previous chunk, waiting for its successor's flow
    let mut pending: Option<((Frame, Frame), PairFlows)> = None;
    let mut exhausted = false;

    while !exhausted {
        while frames.len() < CHUNK_PAIRS + 1 {
            match next_pair(&mut reference, &mut distorted, &mut counts)? {
                Some(p) => {
                    check_frames(&p.0, &p.1, dims)?;
                    frames.push(p);
                }
                None => {
                    exhausted = true;
                    break;
                }
            }
        }
        if frames.len() < 2 {
            break;
        }

        let flows: Vec<PairFlows> = in_pool(pool, || {
            frames
            .par_windows(2)
            .map(|w| -> Result<PairFlows> {
                let start = Instant::now();
                let mut replaced = 0;
                let reference = if need_ref {
                    let (f, n) = provider.flow("ref", &w[0].0, &w[1].0)?;
                    replaced += n;
                    Some(f)
                } else {
                    None
                };
                let distorted = if need_dis {
                    let (f, n) = provider.flow("dis", &w[0].1, &w[1].1)?;
                    replaced += n;
                    Some(f)
                } else {
                    None
                };
                Ok(PairFlows {
                    reference,
                    distorted,
                    replaced,
                    elapsed: start.elapsed(),
                })
            })
            .collect::<Result<_>>()
        })?;

        if let Some(((rn, dn), pf)) = pending.take() {
            let pv = pair_values(cfg, &rn, &dn, &pf, flows[0].distorted.as_ref())?;
            acc.push(pv);
        }

        let last = flows.len() - 1;
        let results: Vec<PairValues> = in_pool(pool, || {
            (0..last)
                .into_par_iter()
                .map(|i| {
                    let next = flows[i + 1].distorted.as_ref();
                    pair_values(cfg, &frames[i + 1].0, &frames[i + 1].1, &flows[i], next)
                })
                .collect::<Result<_>>()
        })?;
        for pv in results {
            acc.push(pv);
        }
        for pf in &flows {
            acc.est += pf.elapsed;
            acc.exclusions.flo_sentinels_replaced += pf.replaced;
        }

        let mut flows = flows;
        let tail_flow = flows.pop().unwrap();
        let tail_frame = frames.pop().unwrap();
        pending = Some((tail_frame.clone(), tail_flow));
        frames = vec![tail_frame];
    }

    let Some(((rn, dn), pf)) = pending else {
        return Err(Error::TooSmall("sequences need at least 2 frames".into()));
    };
    acc.push(pair_values(cfg, &rn, &dn, &pf, None)?);

    let metrics = acc
        .values
        .into_iter()
        .map(|(m, values)| {
            let avail: Vec<f64> = values.iter().filter_map(|s| s.for_mean()).collect();
            let aggregate = (!avail.is_empty()).then(|| avail.iter().sum::<f64>() / avail.len() as f64);
            let missing = values.len() - avail.len();
            (
                m,
                MetricSeries {
                    aggregate,
                    values,
                    missing,
                },
            )
        })
        .collect();

    Ok(MetricReport {
        frames: counts.0,
        width: dims.0,
        height: dims.1,
        flow_source: cfg.flow.describe(),
        vm_patch_size: cfg.vm.patch_size(),
        metrics,
        exclusions: acc.exclusions,
        timing: StageTiming {
            motion_estimation_ms: ms(acc.est),
            calc_ms: acc.calc.into_iter().map(|(m, d)| (m.id().to_string(), ms(d))).collect(),
        },
    })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Scores two in-memory sequences of equal length and dimensions.
pub fn score_sequences(
    reference: &VideoSequence,
    distorted: &VideoSequence,
    cfg: &MetricConfig,
) -> Result<MetricReport> {
    if reference.len() != distorted.len() {
        return Err(Error::FrameCountMismatch {
            reference: reference.len(),
            distorted: distorted.len(),
        });
    }
    score_streams(
        reference.frames().iter().cloned().map(Ok),
        distorted.frames().iter().cloned().map(Ok),
        cfg,
    )
}

/// One row of the timing table, in milliseconds per frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub metric: &'static str,
    pub motion_estimation_ms: f64,
    pub calc_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, metric: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "per-frame time at {}x{}, median of {} repetitions (file I/O excluded)",
            self.width, self.height, self.repetitions
        )?;
        writeln!(f, "{:<8} {:>16} {:>12} {:>12}", "metric", "motion est. ms", "calc. ms", "total ms")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<8} {:>16.3} {:>12.3} {:>12.3}",
                r.metric, r.motion_estimation_ms, r.calc_ms, r.total_ms
            )?;
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn time_ms(reps: usize, mut f: impl FnMut()) -> f64 {
    median(
        (0..reps)
            .map(|_| {
                let start = Instant::now();
                f();
                ms(start.elapsed())
            })
            .collect(),
    )
}

/// Smooth random texture moved by a global shift, for timing estimation.
fn synthetic_pair(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Result<(Frame, Frame)> {
    let coarse_w = width / 8 + 2;
    let coarse_h = height / 8 + 2;
    let grid: Vec<f64> = (0..coarse_w * coarse_h).map(|_| rng.random_range(0.0..255.0)).collect();
    let sample = |x: usize, y: usize| {
        let (fx, fy) = (x as f64 / 8.0, y as f64 / 8.0);
        let (x0, y0) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let g = |xx: usize, yy: usize| grid[yy.min(coarse_h - 1) * coarse_w + xx.min(coarse_w - 1)];
        let top = g(x0, y0) * (1.0 - tx) + g(x0 + 1, y0) * tx;
        let bottom = g(x0, y0 + 1) * (1.0 - tx) + g(x0 + 1, y0 + 1) * tx;
        (top * (1.0 - ty) + bottom * ty) as u8
    };
    let a: Vec<u8> = (0..width * height).map(|i| sample(i % width, i / width)).collect();
    let b: Vec<u8> = (0..width * height)
        .map(|i| sample((i % width).saturating_sub(2), (i / width).saturating_sub(1)))
        .collect();
    Ok((Frame::from_luma(0, width, height, a)?, Frame::from_luma(1, width, height, b)?))
}

fn random_field(width: usize, height: usize, rng: &mut ChaCha8Rng) -> MotionField {
    MotionField::from_fn(width, height, |_, _| (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)))
}

/// Median per-frame timing of the motion-estimation and calculation stages
/// for EPE, TS, DIV and VM-EPE. EPE needs a reference and a distorted field,
/// the others only the distorted one. Calculation stages run on random
/// fields, so they do not depend on estimator quality.
pub fn benchmark(width: usize, height: usize, repetitions: usize) -> Result<BenchReport> {
    if repetitions < 10 {
        return Err(Error::InvalidArgument(format!(
            "benchmark needs at least 10 repetitions, got {repetitions}"
        )));
    }
    if width < 16 || height < 16 || width % 2 == 1 || height % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "benchmark frame must be even-sized and at least 16x16, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (ref_a, ref_b) = synthetic_pair(width, height, &mut rng)?;
    let (dis_a, dis_b) = synthetic_pair(width, height, &mut rng)?;
    let est = EstimatorConfig::default();

    let mut failure = None;
    let mut estimate = |a: &Frame, b: &Frame| {
        time_ms(repetitions, || {
            if let Err(e) = estimate_flow(a, b, &est) {
                failure.get_or_insert(e);
            }
        })
    };
    let est_ref = estimate(&ref_a, &ref_b);
    let est_dis = estimate(&dis_a, &dis_b);
    if let Some(e) = failure {
        return Err(e);
    }

    let f_ref = random_field(width, height, &mut rng);
    let f_dis = random_field(width, height, &mut rng);
    let f_next = random_field(width, height, &mut rng);
    let vm = VmConfig::default();
    let mut sink = 0.0;
    let calc_epe = time_ms(repetitions, || sink += epe(&f_ref, &f_dis).unwrap_or(0.0));
    let calc_ts = time_ms(repetitions, || {
        sink += temporal_smoothness_detailed(&f_dis, &f_next).map_or(0.0, |o| o.value)
    });
    let calc_div = time_ms(repetitions, || sink += div_metric(&f_dis).unwrap_or(0.0));
    let calc_vm = time_ms(repetitions, || sink += vm_epe(&f_dis, &vm));
    std::hint::black_box(sink);

    let row = |metric, est_ms: f64, calc_ms: f64| BenchRow {
        metric,
        motion_estimation_ms: est_ms,
        calc_ms,
        total_ms: est_ms + calc_ms,
    };
    Ok(BenchReport {
        width,
        height,
        repetitions,
        rows: vec![
            row("EPE", est_ref + est_dis, calc_epe),
            row("TS", est_dis, calc_ts),
            row("DIV", est_dis, calc_div),
            row("VM-EPE", est_dis, calc_vm),
        ],
    })
}
