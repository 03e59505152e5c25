//! Forward (t → t+1) dense motion estimation.
//!
//! [`MotionEstimator`] is the pluggable interface; [`BlockMatcher`] is the
//! built-in classical estimator. It runs coarse-to-fine over a 2× luma
//! pyramid. At each level every block searches a window around the vector
//! predicted by the coarser level, minimizing the sum of absolute
//! differences (ties go to the shorter vector), and the block vectors are
//! then smoothed with a 3×3 vector median. At full resolution the integer
//! minimum is refined with a parabola fit of the cost surface. The dense
//! field is the bilinear interpolation of block-center vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::MotionField;
use crate::media::{luma, Frame};
use crate::spatial::{vector_median_filter, VmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub pyramid_levels: usize,
    /// Matching block edge in pixels, odd.
    pub block_size: usize,
    /// Search radius in pixels at every level.
    pub search_radius: usize,
    /// Cost per pixel of deviation from the predicted vector, in SAD units
    /// per block pixel.
    pub smoothing_weight: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            block_size: 9,
            search_radius: 4,
            smoothing_weight: 0.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels == 0 {
            return Err(Error::InvalidConfig("pyramid_levels must be >= 1".into()));
        }
        if self.block_size < 3 || self.block_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "block_size must be odd and >= 3, got {}",
                self.block_size
            )));
        }
        if self.search_radius == 0 {
            return Err(Error::InvalidConfig("search_radius must be >= 1".into()));
        }
        if !(self.smoothing_weight >= 0.0 && self.smoothing_weight.is_finite()) {
            return Err(Error::InvalidConfig("smoothing_weight must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Per-component displacement the coarsest level covers on its own, in
    /// full-resolution pixels. Global shifts up to this size are recovered
    /// when the frame is large enough for every pyramid level.
    pub fn search_range(&self) -> usize {
        self.search_radius << (self.pyramid_levels - 1)
    }

    /// Upper bound on any output component: every level adds at most
    /// `search_radius`, plus half a pixel of sub-pixel refinement.
    pub fn max_displacement(&self) -> f64 {
        (self.search_radius * ((1usize << self.pyramid_levels) - 1)) as f64 + 0.5
    }
}

/// Computes the forward motion field between two frames of equal size.
pub trait MotionEstimator: Send + Sync {
    fn estimate(&self, current: &Frame, next: &Frame) -> Result<MotionField>;
}

#[derive(Debug, Clone, Default)]
pub struct BlockMatcher {
    cfg: EstimatorConfig,
}

impl BlockMatcher {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }
}

impl MotionEstimator for BlockMatcher {
    fn estimate(&self, current: &Frame, next: &Frame) -> Result<MotionField> {
        estimate_flow(current, next, &self.cfg)
    }
}

struct Image {
    w: usize,
    h: usize,
    data: Vec<u8>,
}

impl Image {
    #[inline]
    fn clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }

    fn downsample(&self) -> Image {
        let w = self.w.div_ceil(2);
        let h = self.h.div_ceil(2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = (2 * x as isize, 2 * y as isize);
                let sum = u32::from(self.clamped(sx, sy))
                    + u32::from(self.clamped(sx + 1, sy))
                    + u32::from(self.clamped(sx, sy + 1))
                    + u32::from(self.clamped(sx + 1, sy + 1));
                data.push(((sum + 2) / 4) as u8);
            }
        }
        Image { w, h, data }
    }
}

/// Interpolation table along one axis: for each pixel, the two bracketing
/// block centers and the weight of the second.
fn axis_weights(centers: &[usize], len: usize) -> Vec<(usize, usize, f64)> {
    let last = centers.len() - 1;
    let mut seg = 0;
    (0..len)
        .map(|p| {
            if p <= centers[0] {
                return (0, 0, 0.0);
            }
            if p >= centers[last] {
                return (last, last, 0.0);
            }
            while centers[seg + 1] <= p {
                seg += 1;
            }
            let t = (p - centers[seg]) as f64 / (centers[seg + 1] - centers[seg]) as f64;
            (seg, seg + 1, t)
        })
        .collect()
}

/// Block-center vectors on one pyramid level.
struct BlockGrid {
    cx: Vec<usize>,
    cy: Vec<usize>,
    field: MotionField,
}

fn block_centers(len: usize, block: usize) -> Vec<usize> {
    let count = len.div_ceil(block);
    (0..count).map(|i| (i * block + block / 2).min(len - 1)).collect()
}

impl BlockGrid {
    fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        let locate = |c: &[usize], p: f64| -> (usize, usize, f64) {
            let last = c.len() - 1;
            if p <= c[0] as f64 {
                return (0, 0, 0.0);
            }
            if p >= c[last] as f64 {
                return (last, last, 0.0);
            }
            let i = c.partition_point(|&v| (v as f64) <= p) - 1;
            (i, i + 1, (p - c[i] as f64) / (c[i + 1] - c[i]) as f64)
        };
        let (x0, x1, tx) = locate(&self.cx, x);
        let (y0, y1, ty) = locate(&self.cy, y);
        self.bilerp(x0, x1, tx, y0, y1, ty)
    }

    #[inline]
    fn bilerp(&self, x0: usize, x1: usize, tx: f64, y0: usize, y1: usize, ty: f64) -> (f64, f64) {
        let cols = self.cx.len();
        let pick = |c: &[f64]| {
            let top = c[y0 * cols + x0] * (1.0 - tx) + c[y0 * cols + x1] * tx;
            let bottom = c[y1 * cols + x0] * (1.0 - tx) + c[y1 * cols + x1] * tx;
            top * (1.0 - ty) + bottom * ty
        };
        (pick(self.field.u()), pick(self.field.v()))
    }

    fn dense(&self, w: usize, h: usize) -> MotionField {
        let xs = axis_weights(&self.cx, w);
        let ys = axis_weights(&self.cy, h);
        let mut u = Vec::with_capacity(w * h);
        let mut v = Vec::with_capacity(w * h);
        for &(y0, y1, ty) in &ys {
            for &(x0, x1, tx) in &xs {
                let (a, b) = self.bilerp(x0, x1, tx, y0, y1, ty);
                u.push(a);
                v.push(b);
            }
        }
        MotionField::new(w, h, u, v).expect("dense field dimensions")
    }
}

struct Search<'a> {
    cur: &'a Image,
    next: &'a Image,
    half: isize,
    radius: isize,
    penalty: f64,
}

impl Search<'_> {
    fn sad(&self, cx: isize, cy: isize, dx: isize, dy: isize) -> u32 {
        let h = self.half;
        let inside = |img: &Image, x: isize, y: isize| {
            x - h >= 0 && y - h >= 0 && x + h < img.w as isize && y + h < img.h as isize
        };
        let mut total = 0u32;
        if inside(self.cur, cx, cy) && inside(self.next, cx + dx, cy + dy) {
            let side = (2 * h + 1) as usize;
            for k in -h..=h {
                let a0 = ((cy + k) as usize) * self.cur.w + (cx - h) as usize;
                let b0 = ((cy + dy + k) as usize) * self.next.w + (cx + dx - h) as usize;
                let a = &self.cur.data[a0..a0 + side];
                let b = &self.next.data[b0..b0 + side];
                total += a.iter().zip(b).map(|(&p, &q)| u32::from(p.abs_diff(q))).sum::<u32>();
            }
        } else {
            for ky in -h..=h {
                for kx in -h..=h {
                    let p = self.cur.clamped(cx + kx, cy + ky);
                    let q = self.next.clamped(cx + dx + kx, cy + dy + ky);
                    total += u32::from(p.abs_diff(q));
                }
            }
        }
        total
    }

    /// Best vector for the block centered at `(cx, cy)`, searched around
    /// `pred`. With `refine`, adds the parabola sub-pixel offset.
    fn best(&self, cx: usize, cy: usize, pred: (isize, isize), refine: bool) -> (f64, f64) {
        let r = self.radius;
        let side = (2 * r + 1) as usize;
        let area = ((2 * self.half + 1) * (2 * self.half + 1)) as f64;
        let mut costs = vec![0.0f64; side * side];
        let mut best: Option<(f64, isize, usize)> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                let (vx, vy) = (pred.0 + dx, pred.1 + dy);
                let idx = ((dy + r) as usize) * side + (dx + r) as usize;
                let cost = f64::from(self.sad(cx as isize, cy as isize, vx, vy))
                    + self.penalty * area * (dx.abs() + dy.abs()) as f64;
                costs[idx] = cost;
                let mag = vx * vx + vy * vy;
                let better = match best {
                    None => true,
                    Some((c, m, _)) => cost < c || (cost == c && mag < m),
                };
                if better {
                    best = Some((cost, mag, idx));
                }
            }
        }
        let (_, _, idx) = best.expect("non-empty search window");
        let (bx, by) = ((idx % side) as isize - r, (idx / side) as isize - r);
        let mut out = ((pred.0 + bx) as f64, (pred.1 + by) as f64);
        if refine {
            let at = |dx: isize, dy: isize| costs[((dy + r) as usize) * side + (dx + r) as usize];
            let parabola = |minus: f64, centre: f64, plus: f64| {
                let denom = minus - 2.0 * centre + plus;
                if denom > 0.0 {
                    (0.5 * (minus - plus) / denom).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            };
            if bx > -r && bx < r {
                out.0 += parabola(at(bx - 1, by), at(bx, by), at(bx + 1, by));
            }
            if by > -r && by < r {
                out.1 += parabola(at(bx, by - 1), at(bx, by), at(bx, by + 1));
            }
        }
        out
    }
}

fn frame_image(frame: &Frame) -> Image {
    let plane = luma(frame);
    Image {
        w: plane.width(),
        h: plane.height(),
        data: plane.data().to_vec(),
    }
}

/// Estimates the motion field from `current` to `next`.
pub fn estimate_flow(current: &Frame, next: &Frame, cfg: &EstimatorConfig) -> Result<MotionField> {
    cfg.validate()?;
    let dims = (current.width(), current.height());
    if dims != (next.width(), next.height()) {
        return Err(Error::mismatch(dims, (next.width(), next.height())));
    }

    let mut pyr_a = vec![frame_image(current)];
    let mut pyr_b = vec![frame_image(next)];
    while pyr_a.len() < cfg.pyramid_levels {
        let top = pyr_a.last().unwrap();
        if top.w.div_ceil(2) < cfg.block_size || top.h.div_ceil(2) < cfg.block_size {
            break;
        }
        let a = top.downsample();
        let b = pyr_b.last().unwrap().downsample();
        pyr_a.push(a);
        pyr_b.push(b);
    }

    let vm = VmConfig::default();
    let mut coarse: Option<BlockGrid> = None;
    for level in (0..pyr_a.len()).rev() {
        let (a, b) = (&pyr_a[level], &pyr_b[level]);
        let cx = block_centers(a.w, cfg.block_size);
        let cy = block_centers(a.h, cfg.block_size);
        let search = Search {
            cur: a,
            next: b,
            half: (cfg.block_size / 2) as isize,
            radius: cfg.search_radius as isize,
            penalty: cfg.smoothing_weight,
        };
        let refine = level == 0;
        let vectors: Vec<(f64, f64)> = (0..cy.len() * cx.len())
            .into_par_iter()
            .map(|i| {
                let (bx, by) = (cx[i % cx.len()], cy[i / cx.len()]);
                let pred = coarse.as_ref().map_or((0, 0), |g| {
                    let (pu, pv) = g.sample(bx as f64 / 2.0, by as f64 / 2.0);
                    ((2.0 * pu).round() as isize, (2.0 * pv).round() as isize)
                });
                search.best(bx, by, pred, refine)
            })
            .collect();
        let (u, v): (Vec<f64>, Vec<f64>) = vectors.into_iter().unzip();
        let raw = MotionField::new(cx.len(), cy.len(), u, v)?;
        let field = vector_median_filter(&raw, &vm);
        coarse = Some(BlockGrid { cx, cy, field });
    }

    Ok(coarse.expect("at least one level").dense(dims.0, dims.1))
}
