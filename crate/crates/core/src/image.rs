//! Full-reference image metrics on 8-bit luma and their motion-weighted
//! variants.

use crate::error::{Error, Result};
use crate::media::Plane;

/// PSNR substituted for identical frames when averaging.
pub const PSNR_CAP_DB: f64 = 100.0;

const PEAK: f64 = 255.0;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn same_dims(a: &Plane<'_>, b: &Plane<'_>) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::mismatch((a.width(), a.height()), (b.width(), b.height())));
    }
    Ok(())
}

pub fn mse(reference: &Plane<'_>, distorted: &Plane<'_>) -> Result<f64> {
    same_dims(reference, distorted)?;
    let n = reference.data().len();
    if n == 0 {
        return Err(Error::TooSmall("empty image".into()));
    }
    let sse: u64 = reference
        .data()
        .iter()
        .zip(distorted.data())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / n as f64)
}

/// PSNR in dB for 8-bit samples. Identical inputs give `f64::INFINITY`;
/// see [`cap_psnr`].
pub fn psnr(reference: &Plane<'_>, distorted: &Plane<'_>) -> Result<f64> {
    let mse = mse(reference, distorted)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

pub fn cap_psnr(db: f64) -> f64 {
    db.min(PSNR_CAP_DB)
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, w) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *w = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= s);
    k
}

/// Separable "valid" filtering: output is (w-10)×(h-10).
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut horiz[y * ow..(y + 1) * ow];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, kt) in k.iter().enumerate() {
                acc += kt * row[x + t];
            }
            *o = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        let dst = &mut out[y * ow..(y + 1) * ow];
        for (t, kt) in k.iter().enumerate() {
            let src_row = &horiz[(y + t) * ow..(y + t + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += kt * s;
            }
        }
    }
    out
}

/// Mean single-scale SSIM with an 11×11 Gaussian window (σ = 1.5),
/// K1 = 0.01, K2 = 0.03, evaluated at every window position fully inside the
/// image.
pub fn ssim(reference: &Plane<'_>, distorted: &Plane<'_>) -> Result<f64> {
    same_dims(reference, distorted)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k = gaussian_window();
    let x: Vec<f64> = reference.data().iter().map(|&s| f64::from(s)).collect();
    let y: Vec<f64> = distorted.data().iter().map(|&s| f64::from(s)).collect();
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();

    let mu_x = filter_valid(&x, w, h, &k);
    let mu_y = filter_valid(&y, w, h, &k);
    let e_xx = filter_valid(&xx, w, h, &k);
    let e_yy = filter_valid(&yy, w, h, &k);
    let e_xy = filter_valid(&xy, w, h, &k);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

/// Maps a motion error in `[0, ∞)` to a weight in `(0, 1]`.
pub fn motion_weight(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "motion error must be finite and nonnegative, got {alpha}"
        )));
    }
    Ok(1.0 / (1.0 + alpha))
}

/// Image score scaled by the motion weight of `alpha`.
pub fn weighted_metric(image_score: f64, alpha: f64) -> Result<f64> {
    Ok(motion_weight(alpha)? * image_score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane(w: usize, h: usize, data: &[u8]) -> Plane<'_> {
        Plane::new(w, h, data).unwrap()
    }

    fn textured(seed: u64, w: usize, h: usize) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..w * h).map(|_| rng.random_range(0..=255u8)).collect()
    }

    /// Direct windowed SSIM: explicit weighted sums at every valid position.
    fn oracle_ssim(a: &[u8], b: &[u8], w: usize, h: usize) -> f64 {
        let sigma = 1.5f64;
        let mut g = [[0.0f64; 11]; 11];
        let mut s = 0.0;
        for (i, row) in g.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
                *cell = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
                s += *cell;
            }
        }
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        let mut total = 0.0;
        let mut count = 0.0;
        for y in 0..=h - 11 {
            for x in 0..=w - 11 {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let wgt = g[i][j] / s;
                        let p = f64::from(a[(y + i) * w + x + j]);
                        let q = f64::from(b[(y + i) * w + x + j]);
                        mx += wgt * p;
                        my += wgt * q;
                        sxx += wgt * p * p;
                        syy += wgt * q * q;
                        sxy += wgt * p * q;
                    }
                }
                let vx = sxx - mx * mx;
                let vy = syy - my * my;
                let cov = sxy - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn psnr_of_unit_error() {
        let a = textured(1, 16, 16).iter().map(|&s| s.min(254)).collect::<Vec<_>>();
        let b: Vec<u8> = a.iter().map(|&s| s + 1).collect();
        let db = psnr(&plane(16, 16, &a), &plane(16, 16, &b)).unwrap();
        assert!((db - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((db - 48.13).abs() < 0.005);
    }

    #[test]
    fn psnr_extremes() {
        let black = vec![0u8; 64];
        let white = vec![255u8; 64];
        assert_eq!(psnr(&plane(8, 8, &black), &plane(8, 8, &white)).unwrap(), 0.0);
        let same = psnr(&plane(8, 8, &black), &plane(8, 8, &black)).unwrap();
        assert!(same.is_infinite());
        assert_eq!(cap_psnr(same), 100.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = vec![0u8; 64];
        assert!(psnr(&plane(8, 8, &a), &plane(4, 16, &a)).is_err());
        assert!(ssim(&plane(8, 8, &a), &plane(4, 16, &a)).is_err());
    }

    #[test]
    fn ssim_identity_and_size() {
        let a = textured(2, 20, 17);
        assert_eq!(ssim(&plane(20, 17, &a), &plane(20, 17, &a)).unwrap(), 1.0);
        let small = vec![0u8; 100];
        assert!(matches!(ssim(&plane(10, 10, &small), &plane(10, 10, &small)), Err(Error::TooSmall(_))));
    }

    #[test]
    fn ssim_inverted_matches_oracle() {
        let (w, h) = (24, 19);
        let a = textured(3, w, h);
        let b: Vec<u8> = a.iter().map(|&s| 255 - s).collect();
        let got = ssim(&plane(w, h, &a), &plane(w, h, &b)).unwrap();
        let expected = oracle_ssim(&a, &b, w, h);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!(got < 0.3);
    }

    #[test]
    fn ssim_constant_planes_luminance_only() {
        let a = vec![128u8; 15 * 15];
        let b = vec![130u8; 15 * 15];
        let got = ssim(&plane(15, 15, &a), &plane(15, 15, &b)).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        let closed = (2.0 * 128.0 * 130.0 + c1) / (128.0f64.powi(2) + 130.0f64.powi(2) + c1);
        assert!((got - closed).abs() < 1e-9);
        assert!((got - oracle_ssim(&a, &b, 15, 15)).abs() < 1e-9);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = textured(4, 16, 16);
        let b = textured(5, 16, 16);
        let ab = ssim(&plane(16, 16, &a), &plane(16, 16, &b)).unwrap();
        let ba = ssim(&plane(16, 16, &b), &plane(16, 16, &a)).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn weights() {
        assert_eq!(motion_weight(0.0).unwrap(), 1.0);
        assert_eq!(motion_weight(1.0).unwrap(), 0.5);
        assert!((motion_weight(9.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(motion_weight(-0.1).is_err());
        assert!(motion_weight(f64::NAN).is_err());
        assert!(motion_weight(f64::INFINITY).is_err());
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(weighted_metric(40.0, 0.0).unwrap(), 40.0);
        assert_eq!(weighted_metric(40.0, 1.0).unwrap(), 20.0);
        assert!((weighted_metric(0.9, 0.25).unwrap() - 0.72).abs() < 1e-15);
        assert!(weighted_metric(0.9, -1.0).is_err());
    }
}
