//! Spatial-consistency metrics over a single motion field.
//!
//! The vector median of a neighborhood is the member vector with the least
//! summed Euclidean distance to every other member. Filtering a field with it
//! removes isolated outliers without inventing vectors; [`vm_epe`] measures
//! how far a field sits from its filtered self. [`div_metric`] averages the
//! absolute divergence, which flags sources and sinks in the flow.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::MotionField;
use crate::temporal::{epe, row_sum, ScalarFieldMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmConfig {
    patch_size: usize,
}

impl VmConfig {
    pub fn new(patch_size: usize) -> Result<Self> {
        if patch_size < 3 || patch_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "vector-median patch size must be odd and >= 3, got {patch_size}"
            )));
        }
        Ok(Self { patch_size })
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }
}

impl Default for VmConfig {
    fn default() -> Self {
        Self { patch_size: 3 }
    }
}

#[inline]
fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let du = a.0 - b.0;
    let dv = a.1 - b.1;
    (du * du + dv * dv).sqrt()
}

/// Scratch buffers reused across the pixels of one row.
struct Patch {
    members: Vec<(f64, f64)>,
    dist: Vec<f64>,
    energy: Vec<f64>,
}

impl Patch {
    fn new(n: usize) -> Self {
        Self {
            members: Vec::with_capacity(n * n),
            dist: vec![0.0; n * n * n * n],
            energy: Vec::with_capacity(n * n),
        }
    }

    /// Index of the vector median among `members`; `center` wins ties,
    /// otherwise the first minimizer in raster order.
    fn argmin(&mut self, center: usize) -> usize {
        let m = self.members.len();
        for i in 0..m {
            self.dist[i * m + i] = 0.0;
            for j in i + 1..m {
                let d = distance(self.members[i], self.members[j]);
                self.dist[i * m + j] = d;
                self.dist[j * m + i] = d;
            }
        }
        self.energy.clear();
        for i in 0..m {
            let mut e = 0.0;
            for j in 0..m {
                e += self.dist[i * m + j];
            }
            self.energy.push(e);
        }
        let mut best = 0;
        for i in 1..m {
            if self.energy[i] < self.energy[best] {
                best = i;
            }
        }
        if self.energy[center] == self.energy[best] {
            center
        } else {
            best
        }
    }
}

/// Replaces each vector by the vector median of its `n×n` neighborhood.
/// Neighborhoods are clipped at the frame border.
pub fn vector_median_filter(field: &MotionField, cfg: &VmConfig) -> MotionField {
    let (w, h) = field.dims();
    let r = cfg.patch_size / 2;
    let (u, v) = (field.u(), field.v());
    let mut out_u = vec![0.0; w * h];
    let mut out_v = vec![0.0; w * h];
    if w == 0 || h == 0 {
        return field.clone();
    }
    out_u
        .par_chunks_mut(w)
        .zip(out_v.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row_u, row_v))| {
            let mut patch = Patch::new(cfg.patch_size);
            let y0 = y.saturating_sub(r);
            let y1 = (y + r).min(h - 1);
            for x in 0..w {
                let x0 = x.saturating_sub(r);
                let x1 = (x + r).min(w - 1);
                patch.members.clear();
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        let i = yy * w + xx;
                        patch.members.push((u[i], v[i]));
                    }
                }
                let center = (y - y0) * (x1 - x0 + 1) + (x - x0);
                let best = patch.argmin(center);
                let (mu, mv) = patch.members[best];
                row_u[x] = mu;
                row_v[x] = mv;
            }
        });
    MotionField::new(w, h, out_u, out_v).expect("dimensions preserved")
}

/// Mean endpoint error between `field` and its vector-median filtered copy.
pub fn vm_epe(field: &MotionField, cfg: &VmConfig) -> f64 {
    let filtered = vector_median_filter(field, cfg);
    epe(field, &filtered).expect("filter preserves dimensions")
}

/// Absolute difference of the two fields' VM-EPE.
pub fn smoothness_dissimilarity(
    reference: &MotionField,
    distorted: &MotionField,
    cfg: &VmConfig,
) -> Result<f64> {
    reference.ensure_same_dims(distorted)?;
    Ok((vm_epe(distorted, cfg) - vm_epe(reference, cfg)).abs())
}

fn check_divergence_size(field: &MotionField) -> Result<()> {
    let (w, h) = field.dims();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!(
            "divergence needs a field of at least 3x3, got {w}x{h}"
        )));
    }
    Ok(())
}

/// Writes `|du/dx + dv/dy|` for row `y` into `out`. Central differences in
/// the interior, one-sided at the borders.
fn divergence_row(field: &MotionField, y: usize, out: &mut [f64]) {
    let (w, h) = field.dims();
    let (u, v) = (field.u(), field.v());
    let row = y * w;
    let u_row = &u[row..row + w];

    // vertical derivative of v, per column
    let (below, above, scale) = if y == 0 {
        (row + w, row, 1.0)
    } else if y == h - 1 {
        (row, row - w, 1.0)
    } else {
        (row + w, row - w, 0.5)
    };
    let v_next = &v[below..below + w];
    let v_prev = &v[above..above + w];

    out[0] = ((u_row[1] - u_row[0]) + (v_next[0] - v_prev[0]) * scale).abs();
    for x in 1..w - 1 {
        let dudx = (u_row[x + 1] - u_row[x - 1]) * 0.5;
        let dvdy = (v_next[x] - v_prev[x]) * scale;
        out[x] = (dudx + dvdy).abs();
    }
    out[w - 1] = ((u_row[w - 1] - u_row[w - 2]) + (v_next[w - 1] - v_prev[w - 1]) * scale).abs();
}

pub fn divergence_map(field: &MotionField) -> Result<ScalarFieldMap> {
    check_divergence_size(field)?;
    let (w, h) = field.dims();
    let mut values = vec![0.0; w * h];
    for (y, row) in values.chunks_mut(w).enumerate() {
        divergence_row(field, y, row);
    }
    Ok(ScalarFieldMap::from_parts(w, h, values))
}

/// Mean absolute divergence. Equal (bit for bit) to the mean of
/// [`divergence_map`], without materializing the map.
pub fn div_metric(field: &MotionField) -> Result<f64> {
    check_divergence_size(field)?;
    let (w, h) = field.dims();
    let mut row = vec![0.0; w];
    let mut total = 0.0;
    for y in 0..h {
        divergence_row(field, y, &mut row);
        total += row_sum(&row);
    }
    Ok(total / (w * h) as f64)
}
