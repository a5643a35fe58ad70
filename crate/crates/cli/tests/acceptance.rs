//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use sensornoise::calibration::{
    banding_spectrum, fit_tukey_lambda, ppcc_fit, probability_plot_sorted, shapiro_wilk, default_lambda_grid,
    tukey_quantile_fn, DEFAULT_TRIM,
};
use sensornoise::distributions::normal_quantile;
use sensornoise::{
    brightness_align, sample_gaussian, sample_tukey_lambda, sample_uniform, synthesize_noise, Frame, FrameMeta,
    NoiseComponents, Params, RngStream,
};

const ROUND_TRIP_SETS: usize = 10;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(300);
const R2_TRIALS: u64 = 100;
const R2_SAMPLES: usize = 100_000;
const R2_GAUSSIAN_LIKE_GAP: f64 = 0.01;
const PPCC_TRIALS: u64 = 100;
const PPCC_SAMPLES: usize = 100_000;
const PPCC_WINDOW: (f64, f64) = (0.10, 0.18);
const PPCC_MIN_HITS: usize = 95;
const BANDING_TRIALS: u64 = 100;
const BANDING_MIN: f64 = 2.0;
const WHITE_WINDOW: (f64, f64) = (0.9, 1.1);
const SW_TRIALS: u64 = 10_000;
const SW_N: usize = 500;
const SW_SIZE_WINDOW: (f64, f64) = (0.04, 0.06);
const VARIANCE_REL_TOL: f64 = 0.02;
const REGRESSION_DRAWS: usize = 100_000;
const REGRESSION_COEF_TOL: f64 = 0.02;
const REGRESSION_SIGMA_REL_TOL: f64 = 0.05;
const ALIGN_PAIRS: u64 = 100;
const ALIGN_GRID: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Uniform draws on [0, 1) from the library's counter-based stream.
fn unit_uniforms(n: usize, seed: u64) -> Vec<f64> {
    sample_uniform::<f64>(n, 0.5, &RngStream::new(seed, 0))
        .unwrap()
        .into_iter()
        .map(|u| u + 0.5)
        .collect()
}

fn log_uniform(u: f64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

fn calibration_round_trip() -> Outcome {
    let start = Instant::now();
    let u = unit_uniforms(4 * ROUND_TRIP_SETS, 9001);
    let geom = Geometry {
        bias_width: 16384,
        bias_height: 512,
        bias_frames: 4,
        flat_size: 1024,
        levels: vec![0.05, 0.15, 0.3, 0.5],
        flats_per_level: 2,
    };
    let mut failures = Vec::new();
    let mut worst = [0.0f64; 4];
    for i in 0..ROUND_TRIP_SETS {
        let t = Truth {
            k: log_uniform(u[4 * i], 0.5, 8.0),
            lambda: -0.5 + u[4 * i + 1],
            sigma_tl: log_uniform(u[4 * i + 2], 1.0, 16.0),
            sigma_r: log_uniform(u[4 * i + 3], 0.25, 4.0),
        };
        let sensor = Sensor {
            camera_id: "acceptance".into(),
            iso: 100 * (i as u32 + 1),
            black_level: 16384,
            white_level: 65535,
        };
        let dir = tempfile::tempdir().unwrap();
        let (flats, biases) = (dir.path().join("flats"), dir.path().join("biases"));
        generate_iso(dir.path(), &sensor, t, &geom, 500 + 2 * i as u64, &flats, &biases);
        let profile = dir.path().join("profile.json");
        let out = calibrate(&flats, &biases, &profile, None);
        if out.code != 0 {
            failures.push(format!("set {i} {t:?}: calibrate exited {}: {}", out.code, out.stderr.trim()));
            continue;
        }
        let e = Errors::of(&read_json(&profile), sensor.iso, t);
        let errs = [e.k_rel.abs(), e.lambda_abs.abs(), e.sigma_tl_rel.abs(), e.sigma_r_rel.abs()];
        for (w, v) in worst.iter_mut().zip(errs) {
            *w = w.max(v);
        }
        if !e.within_tolerance() {
            failures.push(format!("set {i} {t:?}: {e:?}"));
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{}/{} sets within tolerance in {:.0} s; worst |ΔK/K| {:.4}, |Δλ| {:.4}, |Δσ_TL/σ_TL| {:.4}, |Δσ_r/σ_r| {:.4}{}",
        ROUND_TRIP_SETS - failures.len(),
        ROUND_TRIP_SETS,
        elapsed.as_secs_f64(),
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    outcome(failures.is_empty() && elapsed < ROUND_TRIP_BUDGET, detail)
}

/// R² of the Gaussian and of the fitted Tukey lambda probability plots, both
/// over every order statistic, with the shape taken from the trimmed fit.
fn r2_pair(x: &mut [f64]) -> (f64, f64) {
    x.sort_by(f64::total_cmp);
    let gauss = probability_plot_sorted(x, normal_quantile).unwrap().r2;
    let shape = fit_tukey_lambda(x, &default_lambda_grid(), DEFAULT_TRIM, 0.0).unwrap();
    let tl = probability_plot_sorted(x, tukey_quantile_fn(shape.lambda)).unwrap().r2;
    (gauss, tl)
}

fn tukey_beats_gaussian() -> Outcome {
    let lambdas = unit_uniforms(R2_TRIALS as usize, 9002);
    let mut wins = 0;
    let mut smallest_margin = f64::INFINITY;
    for i in 0..R2_TRIALS {
        let lambda = -lambdas[i as usize];
        let mut x = sample_tukey_lambda(R2_SAMPLES, lambda, 3.0, &RngStream::new(9003, i)).unwrap();
        let (g, t) = r2_pair(&mut x);
        if t > g {
            wins += 1;
        }
        smallest_margin = smallest_margin.min(t - g);
    }
    let mut gaps = Vec::new();
    for i in 0..R2_TRIALS {
        let mut x = sample_tukey_lambda(R2_SAMPLES, 0.14, 3.0, &RngStream::new(9004, i)).unwrap();
        let (g, t) = r2_pair(&mut x);
        gaps.push((t - g).abs());
    }
    let worst_gap = gaps.iter().cloned().fold(0.0, f64::max);
    outcome(
        wins == R2_TRIALS && worst_gap < R2_GAUSSIAN_LIKE_GAP,
        format!(
            "λ ≤ 0: r2_tl > r2_gauss in {wins}/{R2_TRIALS} (smallest margin {smallest_margin:.2e}); \
             λ = 0.14: max |r2_tl - r2_gauss| {worst_gap:.2e} over {R2_TRIALS}"
        ),
    )
}

fn ppcc_gaussian_landmark() -> Outcome {
    let grid = default_lambda_grid();
    let mut hits = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..PPCC_TRIALS {
        let x = sample_gaussian(PPCC_SAMPLES, 1.0, &RngStream::new(9005, i)).unwrap();
        let l = ppcc_fit(&x, &grid).unwrap().lambda;
        lo = lo.min(l);
        hi = hi.max(l);
        if (PPCC_WINDOW.0..=PPCC_WINDOW.1).contains(&l) {
            hits += 1;
        }
    }
    outcome(
        hits >= PPCC_MIN_HITS,
        format!("λ* in [0.10, 0.18] for {hits}/{PPCC_TRIALS} trials (range {lo:.2} to {hi:.2})"),
    )
}

fn bias_meta() -> FrameMeta {
    FrameMeta {
        black_level: 0,
        white_level: 65535,
        iso: 800,
        ..FrameMeta::default()
    }
}

fn banding_detection() -> Outcome {
    let u = unit_uniforms(3 * BANDING_TRIALS as usize, 9006);
    let zero = Frame::filled(512, 512, 0.0, bias_meta()).unwrap();
    let mut banded_min = f64::INFINITY;
    for i in 0..BANDING_TRIALS as usize {
        let sigma_tl = log_uniform(u[3 * i], 1.0, 16.0);
        let p = Params {
            k: 1.0,
            lambda: -0.5 + u[3 * i + 1],
            sigma_tl,
            // σ_r between σ_TL and 2 σ_TL
            sigma_r: sigma_tl * (1.0 + u[3 * i + 2]),
            q: 1.0,
            enabled: NoiseComponents::all_except("shot").unwrap(),
        };
        let b = synthesize_noise(&zero, &p, &RngStream::new(9007, i as u64), false).unwrap();
        banded_min = banded_min.min(banding_spectrum(&b).banding_ratio);
    }
    let (mut wlo, mut whi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..BANDING_TRIALS {
        let white = sample_gaussian(512 * 512, 1.0, &RngStream::new(9008, i)).unwrap();
        let r = banding_spectrum(&Frame::new(512, 512, white, bias_meta()).unwrap()).banding_ratio;
        wlo = wlo.min(r);
        whi = whi.max(r);
    }
    outcome(
        banded_min > BANDING_MIN && wlo >= WHITE_WINDOW.0 && whi <= WHITE_WINDOW.1,
        format!("σ_r ≥ σ_TL: min ratio {banded_min:.2}; white noise: ratio in [{wlo:.3}, {whi:.3}]"),
    )
}

fn shapiro_wilk_size() -> Outcome {
    let r = RngStream::new(0, 0);
    let mut rejections = 0;
    let mut rule_ok = true;
    for i in 0..SW_TRIALS {
        let x = sample_gaussian(SW_N, 1.0, &RngStream::new(9009, i)).unwrap();
        let sw = shapiro_wilk(&x, 5000, &r).unwrap();
        if !sw.is_normal(0.05) {
            rejections += 1;
        }
        rule_ok &= sw.is_normal(0.05) == (sw.p_value > 0.05);
    }
    let rate = rejections as f64 / SW_TRIALS as f64;
    outcome(
        (SW_SIZE_WINDOW.0..=SW_SIZE_WINDOW.1).contains(&rate) && rule_ok,
        format!("rejection rate {rate:.4} at α = 0.05 over {SW_TRIALS} trials; Gaussian iff p > 0.05: {rule_ok}"),
    )
}

/// Unit-scale Tukey lambda variance, the integral of Q(p)² over (0, 1),
/// by the trapezoid rule in logit space.
fn tl_variance(lambda: f64) -> f64 {
    let (lo, hi, steps) = (-80.0f64, 80.0f64, 400_000);
    let h = (hi - lo) / steps as f64;
    let integrand = |z: f64| {
        let p = 1.0 / (1.0 + (-z).exp());
        let pc = 1.0 / (1.0 + z.exp());
        let q = if lambda == 0.0 { z } else { (p.powf(lambda) - pc.powf(lambda)) / lambda };
        q * q * p * pc
    };
    let inner: f64 = (1..steps).map(|i| integrand(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (integrand(lo) + integrand(hi)))
}

fn variance_moments() -> Outcome {
    // (K, λ, σ_TL, σ_r, q, electrons)
    let sets = [
        (2.0, 0.0, 1.0, 0.5, 1.0, 100.0),
        (0.5, 0.14, 4.0, 1.0, 1.0, 400.0),
        (4.0, -0.2, 6.0, 2.0, 1.0, 20.0),
        (8.0, 0.5, 16.0, 4.0, 2.0, 50.0),
        (1.0, -0.1, 2.5, 3.0, 1.0, 5.0),
    ];
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (j, (k, lambda, sigma_tl, sigma_r, q, level)) in sets.into_iter().enumerate() {
        let p = Params {
            k,
            lambda,
            sigma_tl,
            sigma_r,
            q,
            enabled: NoiseComponents::ALL,
        };
        let clean = Frame::filled(2048, 2048, level, bias_meta()).unwrap();
        let out = synthesize_noise(&clean, &p, &RngStream::new(9010, j as u64), false).unwrap();
        let d = out.data();
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let expected = k * k * level + sigma_tl * sigma_tl * tl_variance(lambda) + sigma_r * sigma_r + q * q / 12.0;
        let rel = v / expected - 1.0;
        worst = worst.max(rel.abs());
        lines.push(format!("{rel:+.4}"));
    }
    outcome(
        worst < VARIANCE_REL_TOL,
        format!("relative variance errors at 4 Mpx [{}], worst {worst:.4}", lines.join(", ")),
    )
}

/// Ordinary least squares: (slope, intercept, residual std with n - 2 dof).
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (ss / (n - 2.0)).sqrt())
}

fn sampler_regression(work: &Path) -> Outcome {
    let (a, b, s) = (0.8, 0.3, 0.1);
    let profile = work.join("regression_profile.json");
    let doc = serde_json::json!({
        "format_version": 1,
        "camera_id": "acceptance",
        "per_iso": { "800": { "k": 2.0, "lambda": 0.0, "sigma_tl": 2.0, "sigma_r": 1.0 } },
        "joint": {
            "log_k_min": 0.5f64.ln(), "log_k_max": 8f64.ln(),
            "tl_line": { "a": a, "b": b, "sigma": s, "n": 5 },
            "row_line": { "a": 0.6, "b": -1.2, "sigma": 0.15, "n": 5 },
            "lambda_pool": [-0.3, 0.0, 0.14],
        },
    });
    std::fs::write(&profile, doc.to_string()).unwrap();
    let out = run_ok([
        "sample-params",
        "--profile",
        profile.to_str().unwrap(),
        "--count",
        &REGRESSION_DRAWS.to_string(),
        "--seed",
        "9011",
    ]);
    let mut reader = csv::Reader::from_reader(out.stdout.as_bytes());
    let (mut lk, mut ltl) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.unwrap();
        lk.push(rec[1].parse::<f64>().unwrap().ln());
        ltl.push(rec[3].parse::<f64>().unwrap().ln());
    }
    let (a_hat, b_hat, s_hat) = ols(&lk, &ltl);
    let pass = lk.len() == REGRESSION_DRAWS
        && (a_hat - a).abs() <= REGRESSION_COEF_TOL
        && (b_hat - b).abs() <= REGRESSION_COEF_TOL
        && (s_hat / s - 1.0).abs() <= REGRESSION_SIGMA_REL_TOL;
    outcome(
        pass,
        format!("{} draws: a {a_hat:.4} (true {a}), b {b_hat:.4} (true {b}), σ̂ {s_hat:.4} (true {s})", lk.len()),
    )
}

fn determinism(work: &Path) -> Outcome {
    let clean = work.join("det_clean");
    std::fs::create_dir_all(&clean).unwrap();
    let sensor = Sensor {
        camera_id: "acceptance".into(),
        iso: 800,
        black_level: 512,
        white_level: 16383,
    };
    for i in 0..3 {
        let data = (0..256 * 192)
            .map(|j| (2000.0 + 1500.0 * ((j % 256) as f64 / (9.0 + i as f64)).sin()).round())
            .collect();
        let f = Frame::new(256, 192, data, sensor.meta()).unwrap();
        write_clean(&clean.join(format!("c{i}.pgm")), &f, None);
    }
    let profile = work.join("det_profile.json");
    let doc = serde_json::json!({
        "format_version": 1,
        "camera_id": "acceptance",
        "per_iso": { "800": { "k": 2.0, "lambda": 0.1, "sigma_tl": 3.0, "sigma_r": 1.0 } },
        "joint": {
            "log_k_min": 0.0, "log_k_max": 2.0,
            "tl_line": { "a": 0.8, "b": 0.5, "sigma": 0.1, "n": 4 },
            "row_line": { "a": 0.6, "b": -0.9, "sigma": 0.2, "n": 4 },
            "lambda_pool": [-0.2, 0.0, 0.14],
        },
    });
    std::fs::write(&profile, doc.to_string()).unwrap();
    let synth = |name: &str, threads: Option<&str>| {
        let out = work.join(name);
        let mut args = vec![
            "synth".to_string(),
            "--clean".into(),
            clean.display().to_string(),
            "--profile".into(),
            profile.display().to_string(),
            "--out".into(),
            out.display().to_string(),
            "--count".into(),
            "8".into(),
            "--seed".into(),
            "7".into(),
        ];
        if let Some(t) = threads {
            args.extend(["--threads".to_string(), t.to_string()]);
        }
        run_ok(args);
        tree(&out)
    };
    let first = synth("det_a", None);
    let second = synth("det_b", None);
    let one = synth("det_1", Some("1"));
    let four = synth("det_4", Some("4"));
    let pass = !first.is_empty() && first == second && one == four && first == one;
    outcome(
        pass,
        format!(
            "{} files; repeat run identical: {}; 1 vs 4 threads identical: {}",
            first.len(),
            first == second,
            one == four
        ),
    )
}

fn brightness_alignment() -> Outcome {
    let mut worst = 0.0f64;
    let mut all_ok = true;
    let (lo, hi) = (0.0, 4.0);
    let step = (hi - lo) / ALIGN_GRID as f64;
    for i in 0..ALIGN_PAIRS {
        let r = RngStream::new(9012, i);
        let u = unit_uniforms(3, 9013 + i);
        let gain = 0.2 + 3.0 * u[0];
        let noise_sigma = 5.0 + 100.0 * u[1];
        let x: Vec<f64> = sample_uniform::<f64>(1024, 400.0, &r)
            .unwrap()
            .into_iter()
            .map(|v| v + 500.0 + 200.0 * u[2])
            .collect();
        let n = sample_gaussian(1024, noise_sigma, &r.substream(1)).unwrap();
        let y: Vec<f64> = x.iter().zip(&n).map(|(a, e)| gain * a + e).collect();
        let fx = Frame::new(32, 32, x.clone(), bias_meta()).unwrap();
        let fy = Frame::new(32, 32, y.clone(), bias_meta()).unwrap();
        let c = brightness_align(&fx, &fy).unwrap();
        let loss = |c: f64| x.iter().zip(&y).map(|(a, b)| (c * a - b).powi(2)).sum::<f64>() / x.len() as f64;
        let best = (0..=ALIGN_GRID)
            .map(|k| lo + k as f64 * step)
            .min_by(|a, b| loss(*a).total_cmp(&loss(*b)))
            .unwrap();
        worst = worst.max((best - c).abs());
        all_ok &= (best - c).abs() <= step;
    }
    outcome(
        all_ok,
        format!("{ALIGN_PAIRS} pairs: max |c - grid argmin| {worst:.2e} with grid step {step:.0e}"),
    )
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("calibration_round_trip", Box::new(calibration_round_trip)),
        ("tukey_lambda_beats_gaussian", Box::new(tukey_beats_gaussian)),
        ("ppcc_gaussian_landmark", Box::new(ppcc_gaussian_landmark)),
        ("banding_detection", Box::new(banding_detection)),
        ("shapiro_wilk_size", Box::new(shapiro_wilk_size)),
        ("constant_scene_variance", Box::new(variance_moments)),
        ("joint_sampler_regression", Box::new(|| sampler_regression(work.path()))),
        ("synth_determinism", Box::new(|| determinism(work.path()))),
        ("brightness_alignment", Box::new(brightness_alignment)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name} ({:.1} s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
