//! Objective-to-subjective agreement: four-parameter logistic mapping of
//! metric scores onto DMOS, then linearity (PLCC), accuracy (RMSE) and
//! monotonicity (SRCC, Kendall tau-b) statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of `β2 + (β1 − β2) / (1 + exp(−(x − β3)/|β4|))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
}

impl LogisticParams {
    pub fn new(beta1: f64, beta2: f64, beta3: f64, beta4: f64) -> Self {
        Self {
            beta1,
            beta2,
            beta3,
            beta4,
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.beta1, self.beta2, self.beta3, self.beta4]
    }

    fn from_array(p: [f64; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }
}

#[inline]
fn logistic_unchecked(x: f64, p: &[f64; 4]) -> f64 {
    p[1] + (p[0] - p[1]) / (1.0 + (-(x - p[2]) / p[3].abs()).exp())
}

pub fn logistic(x: f64, p: &LogisticParams) -> Result<f64> {
    if p.beta4 == 0.0 {
        return Err(Error::InvalidArgument("logistic slope beta4 must be nonzero".into()));
    }
    Ok(logistic_unchecked(x, &p.to_array()))
}

fn check_pair(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_n {
        return Err(Error::Degenerate(format!(
            "need at least {min_n} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean((i+1)..=j)
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn srcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    plcc(&average_ranks(x), &average_ranks(y))
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as u64;
        total += t * (t - 1) / 2;
        i = j;
    }
    total
}

/// Sorts `v` and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
pub fn krcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as u64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let n1 = tie_pairs(&xs);
    let mut joint = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] && y[order[j]] == y[order[i]] {
            j += 1;
        }
        let t = (j - i) as u64;
        joint += t * (t - 1) / 2;
        i = j;
    }
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut scratch = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut scratch);
    let n2 = tie_pairs(&ys);

    if n0 == n1 || n0 == n2 {
        return Err(Error::Degenerate("zero variance in rank correlation input".into()));
    }
    let score = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * swaps as i64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((score as f64 / denom).clamp(-1.0, 1.0))
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 1)?;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / x.len() as f64).sqrt())
}

const MAX_ITERATIONS: usize = 500;
const SSE_TOLERANCE: f64 = 1e-10;

/// Least-squares logistic fit state in standardized coordinates.
struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl Problem<'_> {
    fn sse(&self, p: &[f64; 4]) -> f64 {
        if p[3] == 0.0 || p.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        self.x
            .iter()
            .zip(self.y)
            .map(|(&x, &y)| {
                let r = y - logistic_unchecked(x, p);
                r * r
            })
            .sum()
    }

    fn gradient(&self, p: &[f64; 4]) -> [f64; 4] {
        let mut g = [0.0; 4];
        for k in 0..4 {
            let h = 1e-6 * p[k].abs().max(1.0);
            let mut up = *p;
            let mut down = *p;
            up[k] += h;
            down[k] -= h;
            g[k] = (self.sse(&up) - self.sse(&down)) / (2.0 * h);
        }
        g
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity() -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// BFGS with central-difference gradients and Armijo backtracking.
/// Returns the final point and its SSE, never worse than the start.
fn bfgs(problem: &Problem<'_>, start: [f64; 4], tolerance: f64) -> ([f64; 4], f64) {
    let mut p = start;
    let mut f = problem.sse(&p);
    if !f.is_finite() || f == 0.0 {
        return (p, f);
    }
    let mut g = problem.gradient(&p);
    let mut h_inv = identity();
    let mut fresh = true;

    for _ in 0..MAX_ITERATIONS {
        let mut d = [0.0; 4];
        for i in 0..4 {
            d[i] = -(0..4).map(|j| h_inv[i][j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            h_inv = identity();
            fresh = true;
            d = g.map(|v| -v);
            slope = dot(&g, &d);
            if slope.is_nan() || slope >= 0.0 {
                break;
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: [f64; 4] = std::array::from_fn(|i| p[i] + step * d[i]);
            let ft = problem.sse(&trial);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((p_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            h_inv = identity();
            fresh = true;
            continue;
        };

        let g_new = problem.gradient(&p_new);
        let s: [f64; 4] = std::array::from_fn(|i| p_new[i] - p[i]);
        let yv: [f64; 4] = std::array::from_fn(|i| g_new[i] - g[i]);
        let sy = dot(&s, &yv);
        if sy > 1e-300 {
            if fresh {
                let scale = sy / dot(&yv, &yv);
                h_inv = identity().map(|row| row.map(|v| v * scale));
            }
            let rho = 1.0 / sy;
            let hy: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| h_inv[i][j] * yv[j]).sum());
            let yhy = dot(&yv, &hy);
            for i in 0..4 {
                for j in 0..4 {
                    h_inv[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }

        let improvement = f - f_new;
        p = p_new;
        f = f_new;
        g = g_new;
        if f == 0.0 || improvement < tolerance {
            break;
        }
    }
    (p, f)
}

/// Fits the logistic model to `(x, y)` by least squares.
///
/// The documented starting point is `β1 = max(y)`, `β2 = min(y)`,
/// `β3 = median(x)`, `β4 = std(x)/4`; the mirrored start with `β1`/`β2`
/// swapped is also tried so decreasing relationships converge, and the
/// lower-SSE result is kept.
pub fn fit_logistic(x: &[f64], y: &[f64]) -> Result<LogisticParams> {
    check_pair(x, y, 5)?;
    let x_std = population_std(x);
    if x_std == 0.0 {
        return Err(Error::Degenerate("all metric scores are identical".into()));
    }
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let start = [y_max, y_min, median(x), x_std / 4.0];

    // work in standardized units so step sizes are comparable per parameter
    let (x_mean, y_mean) = (mean(x), mean(y));
    let y_scale = match population_std(y) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let xs: Vec<f64> = x.iter().map(|v| (v - x_mean) / x_std).collect();
    let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
    let to_std = |p: [f64; 4]| {
        [
            (p[0] - y_mean) / y_scale,
            (p[1] - y_mean) / y_scale,
            (p[2] - x_mean) / x_std,
            p[3] / x_std,
        ]
    };
    let from_std = |p: [f64; 4]| {
        [
            p[0] * y_scale + y_mean,
            p[1] * y_scale + y_mean,
            p[2] * x_std + x_mean,
            p[3] * x_std,
        ]
    };

    let problem = Problem { x: &xs, y: &ys };
    let tolerance = SSE_TOLERANCE / (y_scale * y_scale);
    let (p_a, f_a) = bfgs(&problem, to_std(start), tolerance);
    let mirrored = [start[1], start[0], start[2], start[3]];
    let (p_b, f_b) = bfgs(&problem, to_std(mirrored), tolerance);
    let best = if f_b < f_a { p_b } else { p_a };
    Ok(LogisticParams::from_array(from_std(best)))
}

pub fn sse(x: &[f64], y: &[f64], p: &LogisticParams) -> Result<f64> {
    check_pair(x, y, 1)?;
    let mut total = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let r = b - logistic(a, p)?;
        total += r * r;
    }
    Ok(total)
}

/// Agreement of one metric with subjective scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub plcc: f64,
    pub srcc: f64,
    pub krcc: f64,
    pub rmse: f64,
    pub params: LogisticParams,
    pub n: usize,
}

/// Fits the logistic map, then PLCC and RMSE between mapped scores and
/// DMOS. Rank statistics use the raw scores.
pub fn evaluate_metric(scores: &[f64], dmos: &[f64]) -> Result<EvalReport> {
    let params = fit_logistic(scores, dmos)?;
    let predicted = scores
        .iter()
        .map(|&s| logistic(s, &params))
        .collect::<Result<Vec<_>>>()?;
    let plcc = match plcc(&predicted, dmos) {
        Ok(r) => r,
        // a flat fit of constant DMOS carries no linear association
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        plcc,
        srcc: srcc(scores, dmos)?,
        krcc: krcc(scores, dmos)?,
        rmse: rmse(&predicted, dmos)?,
        params,
        n: scores.len(),
    })
}
