//! Temporal-consistency metrics: endpoint error between reference and
//! distorted motion, its normalized weight map, and motion-compensated
//! temporal smoothness of consecutive distorted fields.
//!
//! All reductions run in row-major order so results are bit-identical
//! across runs and worker counts.

use crate::error::Result;
use crate::flow::MotionField;

/// Per-pixel nonnegative scalars (endpoint error, absolute divergence).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarFieldMap {
    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Mean over all pixels, summed row by row with [`row_sum`].
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let total: f64 = self.values.chunks(self.width).map(row_sum).sum();
        total / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-pixel weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl WeightMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }
}

/// Sums one row with four interleaved accumulators. The order is fixed by
/// the row length alone, so the result does not depend on scheduling.
pub(crate) fn row_sum(row: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut chunks = row.chunks_exact(4);
    for c in &mut chunks {
        acc[0] += c[0];
        acc[1] += c[1];
        acc[2] += c[2];
        acc[3] += c[3];
    }
    let mut tail = 0.0;
    for &x in chunks.remainder() {
        tail += x;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

#[inline]
fn endpoint(du: f64, dv: f64) -> f64 {
    (du * du + dv * dv).sqrt()
}

pub fn epe_map(reference: &MotionField, distorted: &MotionField) -> Result<ScalarFieldMap> {
    reference.ensure_same_dims(distorted)?;
    let values = reference
        .u()
        .iter()
        .zip(reference.v())
        .zip(distorted.u().iter().zip(distorted.v()))
        .map(|((ur, vr), (ud, vd))| endpoint(ur - ud, vr - vd))
        .collect();
    Ok(ScalarFieldMap::from_parts(reference.width(), reference.height(), values))
}

/// Mean endpoint error over the frame. Lower is better.
pub fn epe(reference: &MotionField, distorted: &MotionField) -> Result<f64> {
    reference.ensure_same_dims(distorted)?;
    if reference.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = reference
        .u()
        .iter()
        .zip(reference.v())
        .zip(distorted.u().iter().zip(distorted.v()))
        .map(|((ur, vr), (ud, vd))| endpoint(ur - ud, vr - vd))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// Endpoint error normalized to a distribution over pixels.
///
/// A perfect reconstruction (zero total error) yields the uniform map.
pub fn epe_weight_map(reference: &MotionField, distorted: &MotionField) -> Result<WeightMap> {
    let map = epe_map(reference, distorted)?;
    let total: f64 = map.values.iter().sum();
    let n = map.values.len();
    let weights = if total > 0.0 {
        map.values.iter().map(|e| e / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    Ok(WeightMap {
        width: map.width,
        height: map.height,
        weights,
    })
}

/// Samples both components of `field` at a continuous position with
/// bilinear interpolation. `None` when the position lies outside the grid.
pub(crate) fn sample_bilinear(field: &MotionField, x: f64, y: f64) -> Option<(f64, f64)> {
    let (w, h) = field.dims();
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let x0 = (x.floor() as usize).min(w - 1);
    let y0 = (y.floor() as usize).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    // a + t(b - a) reproduces equal corners exactly
    let mix = |a: f64, b: f64, t: f64| a + t * (b - a);
    let lerp = |c: &[f64]| {
        let top = mix(c[y0 * w + x0], c[y0 * w + x1], fx);
        let bottom = mix(c[y1 * w + x0], c[y1 * w + x1], fx);
        mix(top, bottom, fy)
    };
    Some((lerp(field.u()), lerp(field.v())))
}

/// Temporal smoothness with exclusion bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessOutcome {
    pub value: f64,
    pub valid_pixels: usize,
    /// Trajectories that left the frame.
    pub excluded_pixels: usize,
}

/// Follows every vector of `current` into `next` and averages the change of
/// motion along the trajectory. Trajectories ending outside the frame are
/// skipped; if none remain the value is 0.
pub fn temporal_smoothness_detailed(current: &MotionField, next: &MotionField) -> Result<SmoothnessOutcome> {
    current.ensure_same_dims(next)?;
    let w = current.width();
    let mut sum = 0.0;
    let mut valid = 0usize;
    for (i, (&u, &v)) in current.u().iter().zip(current.v()).enumerate() {
        let x = (i % w) as f64 + u;
        let y = (i / w) as f64 + v;
        if let Some((un, vn)) = sample_bilinear(next, x, y) {
            sum += endpoint(u - un, v - vn);
            valid += 1;
        }
    }
    let excluded = current.len() - valid;
    let value = if valid == 0 {
        if !current.is_empty() {
            log::warn!("every trajectory left the frame; temporal smoothness reported as 0");
        }
        0.0
    } else {
        sum / valid as f64
    };
    Ok(SmoothnessOutcome {
        value,
        valid_pixels: valid,
        excluded_pixels: excluded,
    })
}

pub fn temporal_smoothness(current: &MotionField, next: &MotionField) -> Result<f64> {
    temporal_smoothness_detailed(current, next).map(|o| o.value)
}
