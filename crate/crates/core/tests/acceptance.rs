//! Acceptance suite: one check per criterion, each printing a PASS/FAIL
//! line. Runs as a plain binary (no libtest harness) so the lines are always
//! visible; exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use vfiqa::correlation::{fit_logistic, krcc, logistic, plcc, rmse, srcc, LogisticParams};
use vfiqa::flow::{read_flo, write_flo, MotionField};
use vfiqa::image::weighted_metric;
use vfiqa::media::{read_y4m, write_y4m, Frame, FrameRate, VideoSequence};
use vfiqa::pipeline::benchmark;
use vfiqa::spatial::{div_metric, divergence_map, vector_median_filter, vm_epe, VmConfig};
use vfiqa::temporal::{epe, temporal_smoothness};
use vfiqa::Error;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

// ---------------------------------------------------------------- AC1

/// Energy scan over the clipped neighborhood: energies summed in raster
/// order; the center wins ties, then the first minimizer.
fn oracle_vector_median(f: &MotionField, n: usize) -> MotionField {
    let (w, h) = f.dims();
    let r = (n / 2) as isize;
    MotionField::from_fn(w, h, |x, y| {
        let mut members = Vec::new();
        let mut center = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                let (xx, yy) = (x as isize + dx, y as isize + dy);
                if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                    continue;
                }
                if dx == 0 && dy == 0 {
                    center = members.len();
                }
                members.push(f.get(xx as usize, yy as usize));
            }
        }
        let mut energies = Vec::new();
        for a in &members {
            let mut e = 0.0;
            for b in &members {
                let (du, dv) = (a.0 - b.0, a.1 - b.1);
                e += (du * du + dv * dv).sqrt();
            }
            energies.push(e);
        }
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        if energies[center] == min {
            members[center]
        } else {
            members[energies.iter().position(|&e| e == min).unwrap()]
        }
    })
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = VmConfig::new(3).unwrap();
    for i in 0..1000 {
        // every other field is drawn from a few integer vectors so ties occur
        let f = if i % 2 == 0 {
            MotionField::from_fn(9, 9, |_, _| (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
        } else {
            MotionField::from_fn(9, 9, |_, _| (f64::from(rng.random_range(-1..=1)), f64::from(rng.random_range(-1..=1))))
        };
        let got = vector_median_filter(&f, &cfg);
        let expected = oracle_vector_median(&f, 3);
        ensure(got == expected, || format!("field {i} differs from the energy-scan oracle"))?;
    }
    let took = within_time(start, Duration::from_secs(10))?;
    Ok(format!("1000 fields equal to oracle at every pixel in {took:.2?}"))
}

// ---------------------------------------------------------------- AC2

fn ac2() -> Outcome {
    let n = 129;
    let identity = divergence_map(&MotionField::from_fn(n, n, |x, y| (x as f64, y as f64))).unwrap();
    let rotation = divergence_map(&MotionField::from_fn(n, n, |x, y| (y as f64, -(x as f64)))).unwrap();
    let mut worst = (0.0f64, 0.0f64);
    for y in 1..n - 1 {
        for x in 1..n - 1 {
            worst.0 = worst.0.max((identity.get(x, y) - 2.0).abs());
            worst.1 = worst.1.max(rotation.get(x, y).abs());
        }
    }
    ensure(worst.0 <= 1e-9, || format!("identity field interior error {}", worst.0))?;
    ensure(worst.1 <= 1e-9, || format!("rotation field interior error {}", worst.1))?;
    Ok(format!("max interior error {:.1e} (identity), {:.1e} (rotation)", worst.0, worst.1))
}

// ---------------------------------------------------------------- AC3

fn random_field(rng: &mut ChaCha8Rng, w: usize, h: usize, scale: f64) -> MotionField {
    MotionField::from_fn(w, h, |_, _| (rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_offset = 0.0f64;
    let mut worst_scale = 0.0f64;
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let f = random_field(&mut rng, w, h, 10.0);
        ensure(epe(&f, &f).unwrap() == 0.0, || format!("epe(F, F) != 0 for field {i}"))?;

        let shifted = f.offset(3.0, 4.0);
        worst_offset = worst_offset.max((epe(&f, &shifted).unwrap() - 5.0).abs());

        let g = random_field(&mut rng, w, h, 10.0);
        let a: f64 = rng.random_range(-5.0..5.0);
        let base = epe(&f, &g).unwrap();
        let scaled = epe(&f.scaled(a), &g.scaled(a)).unwrap();
        worst_scale = worst_scale.max((scaled - a.abs() * base).abs() / (a.abs() * base));
    }
    let zero = MotionField::zeros(17, 9);
    let constant = MotionField::constant(17, 9, 3.0, 4.0);
    worst_offset = worst_offset.max((epe(&zero, &constant).unwrap() - 5.0).abs());
    ensure(worst_offset <= 1e-12, || format!("(3,4) offset error {worst_offset}"))?;
    ensure(worst_scale <= 1e-9, || format!("scaling relative error {worst_scale}"))?;
    Ok(format!(
        "identity 0 on 100 fields; offset error {worst_offset:.1e}; scaling rel. error {worst_scale:.1e}"
    ))
}

// ---------------------------------------------------------------- AC4

/// Direct per-pixel loop: follow the vector, bilinearly sample the next
/// field, skip landings outside the frame, average the rest.
fn oracle_ts(cur: &MotionField, next: &MotionField) -> f64 {
    let (w, h) = cur.dims();
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            let (u, v) = cur.get(x, y);
            let (px, py) = (x as f64 + u, y as f64 + v);
            if px < 0.0 || py < 0.0 || px > (w - 1) as f64 || py > (h - 1) as f64 {
                continue;
            }
            let (x0, y0) = (px.floor() as usize, py.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (px - x0 as f64, py - y0 as f64);
            let mut sample = [0.0; 2];
            for (k, s) in sample.iter_mut().enumerate() {
                let c = |xx: usize, yy: usize| {
                    let p = next.get(xx, yy);
                    if k == 0 {
                        p.0
                    } else {
                        p.1
                    }
                };
                let top = c(x0, y0) * (1.0 - fx) + c(x1, y0) * fx;
                let bottom = c(x0, y1) * (1.0 - fx) + c(x1, y1) * fx;
                *s = top * (1.0 - fy) + bottom * fy;
            }
            total += ((u - sample[0]).powi(2) + (v - sample[1]).powi(2)).sqrt();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_const = 0.0f64;
    for _ in 0..20 {
        let (u, v) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let f = MotionField::constant(16, 12, u, v);
        worst_const = worst_const.max(temporal_smoothness(&f, &f).unwrap().abs());
    }
    let f = MotionField::constant(6, 6, 2.0, 1.0);
    worst_const = worst_const.max(temporal_smoothness(&f, &f).unwrap().abs());
    ensure(worst_const <= 1e-9, || format!("constant motion TS {worst_const}"))?;

    let mut worst = 0.0f64;
    for _ in 0..500 {
        let cur = random_field(&mut rng, 6, 6, 2.5);
        let next = random_field(&mut rng, 6, 6, 2.5);
        worst = worst.max((temporal_smoothness(&cur, &next).unwrap() - oracle_ts(&cur, &next)).abs());
    }
    ensure(worst <= 1e-9, || format!("random 6x6 deviation from loop oracle {worst}"))?;
    Ok(format!("constant-motion TS {worst_const:.1e}; 500 random 6x6 cases within {worst:.1e} of oracle"))
}

// ---------------------------------------------------------------- AC5

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let s: f64 = rng.random_range(0.0..100.0);
        let got = weighted_metric(s, 0.0).unwrap();
        ensure(got == s, || format!("weighted_metric({s}, 0) = {got}"))?;
    }
    for _ in 0..1000 {
        let s: f64 = rng.random_range(0.0..100.0);
        let a: f64 = rng.random_range(0.0..20.0);
        let b = a + rng.random_range(0.0..5.0);
        let (wa, wb) = (weighted_metric(s, a).unwrap(), weighted_metric(s, b).unwrap());
        ensure(wb <= wa, || format!("not monotone: s={s} alpha {a} -> {wa}, {b} -> {wb}"))?;
    }
    Ok("fallback exact on 1000 scores; non-increasing on 1000 random pairs".into())
}

// ---------------------------------------------------------------- AC6

fn ac6() -> Outcome {
    let start = Instant::now();
    let truth = LogisticParams::new(90.0, 10.0, 50.0, 8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..100.0)).collect();
    let clean: Vec<f64> = x.iter().map(|&v| logistic(v, &truth).unwrap()).collect();
    let fit_rmse = |y: &[f64]| -> f64 {
        let p = fit_logistic(&x, y).unwrap();
        let pred: Vec<f64> = x.iter().map(|&v| logistic(v, &p).unwrap()).collect();
        rmse(&pred, y).unwrap()
    };

    let exact = fit_rmse(&clean);
    ensure(exact < 1e-6, || format!("noise-free RMSE {exact}"))?;

    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut noisy_rmse = Vec::new();
    for _ in 0..5 {
        let y: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
        let r = fit_rmse(&y);
        ensure((0.8..=1.3).contains(&r), || format!("noisy RMSE {r} outside [0.8, 1.3]"))?;
        noisy_rmse.push(format!("{r:.3}"));
    }
    let took = within_time(start, Duration::from_secs(5))?;
    Ok(format!(
        "noise-free RMSE {exact:.1e}; sigma=1 RMSE [{}] in {took:.2?}",
        noisy_rmse.join(", ")
    ))
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Outcome {
    let start = Instant::now();
    let n = 8usize;
    let x: Vec<f64> = (1..=n).map(|v| v as f64).collect();
    let mean2 = (n + 1) as i64; // twice the mean rank
    let mut checked = 0;
    for perm in (1..=n as i64).permutations(n) {
        let y: Vec<f64> = perm.iter().map(|&v| v as f64).collect();

        // Pearson from its definition on doubled, integer-centered values
        let cx: Vec<i64> = (1..=n as i64).map(|v| 2 * v - mean2).collect();
        let cy: Vec<i64> = perm.iter().map(|&v| 2 * v - mean2).collect();
        let sxy: i64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
        let sxx: i64 = cx.iter().map(|a| a * a).sum();
        let pearson = sxy as f64 / sxx as f64; // sxx == syy for permutations

        // Spearman from rank differences; ranks are the values themselves
        let d2: i64 = perm.iter().enumerate().map(|(i, &r)| (i as i64 + 1 - r).pow(2)).sum();
        let nn = n as i64;
        let spearman = (nn * (nn * nn - 1) - 6 * d2) as f64 / (nn * (nn * nn - 1)) as f64;

        // tau-b by pair counting
        let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let a = (x[j] - x[i]).signum() as i64;
                let b = (y[j] - y[i]).signum() as i64;
                match (a, b) {
                    (0, 0) => {}
                    (0, _) => tx += 1,
                    (_, 0) => ty += 1,
                    _ if a == b => conc += 1,
                    _ => disc += 1,
                }
            }
        }
        let denom = (((conc + disc + tx) * (conc + disc + ty)) as f64).sqrt();
        let tau = (conc - disc) as f64 / denom;

        let got = (plcc(&x, &y).unwrap(), srcc(&x, &y).unwrap(), krcc(&x, &y).unwrap());
        ensure(got == (pearson, spearman, tau), || {
            format!("permutation {perm:?}: got {got:?}, oracle {:?}", (pearson, spearman, tau))
        })?;
        checked += 1;
    }
    let took = within_time(start, Duration::from_secs(60))?;
    Ok(format!("{checked} permutations match exactly in {took:.2?}"))
}

// ---------------------------------------------------------------- AC8

fn ac8() -> Outcome {
    let report = benchmark(1920, 1080, 10).map_err(|e| e.to_string())?;
    let div = report.row("DIV").unwrap();
    let vm = report.row("VM-EPE").unwrap();
    let epe_row = report.row("EPE").unwrap();
    let ratio = vm.calc_ms / div.calc_ms;
    ensure(ratio >= 100.0, || {
        format!("VM-EPE/DIV calc ratio {ratio:.1} < 100 ({:.3} ms vs {:.3} ms)", vm.calc_ms, div.calc_ms)
    })?;
    ensure(div.total_ms < epe_row.total_ms, || {
        format!("DIV total {:.1} ms >= EPE total {:.1} ms", div.total_ms, epe_row.total_ms)
    })?;
    Ok(format!(
        "calc DIV {:.3} ms vs VM-EPE {:.1} ms ({ratio:.0}x); total DIV {:.1} ms < EPE {:.1} ms",
        div.calc_ms, vm.calc_ms, div.total_ms, epe_row.total_ms
    ))
}

// ---------------------------------------------------------------- AC9

/// Monte-Carlo correlation of the generator itself: DMOS against the
/// logistic map of its noisy score.
fn designed_plcc(truth: &LogisticParams, sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    let noise = Normal::new(0.0, sigma).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..400_000 {
        let d: f64 = rng.random_range(15.0..85.0);
        let s = inverse_logistic(d, truth) + noise.sample(rng);
        a.push(d);
        b.push(logistic(s, truth).unwrap());
    }
    plcc(&a, &b).unwrap()
}

fn inverse_logistic(d: f64, p: &LogisticParams) -> f64 {
    p.beta3 - p.beta4.abs() * ((p.beta1 - p.beta2) / (d - p.beta2) - 1.0).ln()
}

fn ac9_correlate() -> Outcome {
    let truth = LogisticParams::new(90.0, 10.0, 1.5, 0.6);
    let sigma = 0.35;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let design = designed_plcc(&truth, sigma, &mut rng);

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = dir.path().join("manifest.csv");
    let out = dir.path().join("table.csv");
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut text = String::from("ref,dis,dmos,group,epe\n");
    for i in 0..500 {
        let d: f64 = rng.random_range(15.0..85.0);
        let s = inverse_logistic(d, &truth) + noise.sample(&mut rng);
        text.push_str(&format!("ref{i}.y4m,dis{i}.y4m,{d},g{},{s}\n", i % 2));
    }
    std::fs::write(&manifest, text).map_err(|e| e.to_string())?;

    let status = Command::new(env!("CARGO_BIN_EXE_vfiqa"))
        .args(["correlate", "--metrics", "epe", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("correlate failed: {}", String::from_utf8_lossy(&status.stderr))
    })?;
    let table = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let mut rdr = csv::Reader::from_reader(table.as_bytes());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let col = headers.iter().position(|h| h == "plcc").ok_or("no plcc column")?;
    let row = rdr.records().next().ok_or("empty table")?.map_err(|e| e.to_string())?;
    let got: f64 = row[col].parse().map_err(|_| "bad plcc cell".to_string())?;
    ensure((got - design).abs() <= 0.05, || format!("recovered PLCC {got:.4} vs designed {design:.4}"))?;
    Ok(format!("recovered PLCC {got:.4}, designed {design:.4}"))
}

fn ac9_ladder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let levels = [0.0, 0.5, 1.0, 2.0, 4.0];
    let (w, h) = (48, 40);
    let vm = VmConfig::default();
    for base_index in 0..10 {
        // random translation plus rotation: smooth and free of divergence
        let (tu, tv) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let omega: f64 = rng.random_range(-0.02..0.02);
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        let base = MotionField::from_fn(w, h, |x, y| (tu + omega * (y as f64 - cy), tv - omega * (x as f64 - cx)));
        let base_next = base.clone();
        let n0 = random_field(&mut rng, w, h, 1.0);
        let n1 = random_field(&mut rng, w, h, 1.0);
        let corrupt = |f: &MotionField, n: &MotionField, s: f64| {
            MotionField::from_fn(w, h, |x, y| {
                let (a, b) = (f.get(x, y), n.get(x, y));
                (a.0 + s * b.0, a.1 + s * b.1)
            })
        };
        let mut series: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for &s in &levels {
            let f = corrupt(&base, &n0, s);
            let g = corrupt(&base_next, &n1, s);
            series.entry("EPE").or_default().push(epe(&base, &f).unwrap());
            series.entry("TS").or_default().push(temporal_smoothness(&f, &g).unwrap());
            series.entry("DIV").or_default().push(div_metric(&f).unwrap());
            series.entry("VM-EPE").or_default().push(vm_epe(&f, &vm));
        }
        for (name, values) in &series {
            let monotone = values.windows(2).all(|p| p[1] >= p[0]);
            ensure(monotone, || format!("{name} not monotone on base field {base_index}: {values:?}"))?;
        }
    }
    Ok("EPE, TS, DIV, VM-EPE non-decreasing over 5 levels on 10 base fields".into())
}

fn ac9() -> Outcome {
    let a = ac9_correlate()?;
    let b = ac9_ladder()?;
    Ok(format!("{a}; {b}"))
}

// ---------------------------------------------------------------- AC10

fn ac10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..24), rng.random_range(1..24));
        let f = MotionField::from_fn(w, h, |_, _| {
            (f64::from(rng.random_range(-1e4f32..1e4)), f64::from(rng.random_range(-1e4f32..1e4)))
        });
        let mut bytes = Vec::new();
        write_flo(&f, &mut bytes).unwrap();
        let back = read_flo(&bytes[..]).map_err(|e| format!("flo {i}: {e}"))?;
        ensure(back.field == f && back.replaced == 0, || format!("flo {i}: field changed"))?;
        let mut again = Vec::new();
        write_flo(&back.field, &mut again).unwrap();
        ensure(again == bytes, || format!("flo {i}: bytes changed"))?;
    }
    for i in 0..100 {
        let (w, h) = (2 * rng.random_range(1..10), 2 * rng.random_range(1..10));
        let frames: Vec<Frame> = (0..rng.random_range(1..4))
            .map(|t| {
                let mut plane = |n: usize| (0..n).map(|_| rng.random()).collect::<Vec<u8>>();
                let (y, u, v) = (plane(w * h), plane(w * h / 4), plane(w * h / 4));
                Frame::new(t, w, h, y, u, v).unwrap()
            })
            .collect();
        let rate = FrameRate::new(rng.random_range(1..120), rng.random_range(1..3));
        let seq = VideoSequence::new(frames, Some(rate)).unwrap();
        let mut bytes = Vec::new();
        write_y4m(&seq, &mut bytes).unwrap();
        let back = read_y4m(&bytes[..]).map_err(|e| format!("y4m {i}: {e}"))?;
        ensure(back.len() == seq.len() && back.frame_rate() == Some(rate), || format!("y4m {i}: header changed"))?;
        for (a, b) in seq.frames().iter().zip(back.frames()) {
            ensure(a.y_plane() == b.y_plane() && a.u_plane() == b.u_plane() && a.v_plane() == b.v_plane(), || {
                format!("y4m {i}: planes changed")
            })?;
        }
        let mut again = Vec::new();
        write_y4m(&back, &mut again).unwrap();
        ensure(again == bytes, || format!("y4m {i}: bytes changed"))?;
    }

    // malformed inputs map to their specific errors
    let mut flo = Vec::new();
    write_flo(&MotionField::constant(2, 2, 1.0, 1.0), &mut flo).unwrap();
    let mut bad_magic = flo.clone();
    bad_magic[..4].copy_from_slice(&0.0f32.to_le_bytes());
    ensure(matches!(read_flo(&bad_magic[..]), Err(Error::FloMagic(_))), || "bad magic".into())?;
    ensure(
        read_flo(&bad_magic[..]).unwrap_err().to_string().contains("not a flow file"),
        || "magic message".into(),
    )?;
    ensure(matches!(read_flo(&flo[..flo.len() - 3]), Err(Error::FloTruncated { .. })), || "truncated flo".into())?;
    let mut neg = flo.clone();
    neg[4..8].copy_from_slice(&(-2i32).to_le_bytes());
    ensure(matches!(read_flo(&neg[..]), Err(Error::FloDimensions { .. })), || "negative flo dims".into())?;

    let good = b"YUV4MPEG2 W4 H4 F30:1\nFRAME\n".iter().copied().chain([0u8; 24]).collect::<Vec<u8>>();
    ensure(read_y4m(&good[..]).is_ok(), || "valid y4m rejected".into())?;
    ensure(matches!(read_y4m(&b"YUV4MPEG W4 H4 F30:1\n"[..]), Err(Error::Y4mSignature)), || "signature".into())?;
    ensure(
        matches!(read_y4m(&b"YUV4MPEG2 W4 H4 F30:1 C444\n"[..]), Err(Error::UnsupportedColorspace(_))),
        || "colorspace".into(),
    )?;
    ensure(matches!(read_y4m(&b"YUV4MPEG2 W4 F30:1\n"[..]), Err(Error::Y4mHeader(_))), || "missing H".into())?;
    ensure(matches!(read_y4m(&good[..good.len() - 1]), Err(Error::TruncatedFrame { .. })), || "truncated y4m".into())?;

    // random corruption of valid streams: errors or values, never panics
    let mut fuzzed = 0;
    for _ in 0..2000 {
        let (mut a, mut b) = (flo.clone(), good.clone());
        for buf in [&mut a, &mut b] {
            for _ in 0..rng.random_range(1..4) {
                let i = rng.random_range(0..buf.len());
                buf[i] = rng.random();
            }
            let keep = rng.random_range(0..=buf.len());
            buf.truncate(keep);
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let _ = read_flo(&a[..]);
            let _ = read_y4m(&b[..]);
        }));
        ensure(outcome.is_ok(), || format!("panic on corrupted input {a:?} / {b:?}"))?;
        fuzzed += 1;
    }
    Ok(format!("100 .flo and 100 y4m round trips bit-exact; malformed inputs rejected; {fuzzed} corrupted streams without panic"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "vector median equals exhaustive oracle", ac1),
        ("AC2", "analytic divergence", ac2),
        ("AC3", "EPE correctness", ac3),
        ("AC4", "temporal smoothness trajectory semantics", ac4),
        ("AC5", "weighted-metric contract", ac5),
        ("AC6", "logistic fit recovery", ac6),
        ("AC7", "rank statistics on all 8! permutations", ac7),
        ("AC8", "runtime ordering at 1920x1080", ac8),
        ("AC9", "synthetic correlation and corruption ladder", ac9),
        ("AC10", "format fidelity", ac10),
    ];
    // keep expected-failure panics quiet; report them as FAIL lines instead
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail} ({secs:.2} s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail} ({secs:.2} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
