//! Helpers shared by the command line tests: running the binary and
//! building calibration data sets with `synth`.
#![allow(dead_code)]

use std::ffi::{OsStr, OsString};
use std::path::{Path, PathBuf};
use std::process::Command;

use sensornoise::io::{write_frame, FrameSidecar};
use sensornoise::{Frame, FrameKind, FrameMeta};

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_sensornoise"))
        .args(args)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn run_ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let out = run(args);
    assert_eq!(out.code, 0, "command failed: {}", out.stderr);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub k: f64,
    pub lambda: f64,
    pub sigma_tl: f64,
    pub sigma_r: f64,
}

#[derive(Debug, Clone)]
pub struct Sensor {
    pub camera_id: String,
    pub iso: u32,
    pub black_level: u32,
    pub white_level: u32,
}

impl Sensor {
    pub fn meta(&self) -> FrameMeta {
        FrameMeta {
            black_level: self.black_level,
            white_level: self.white_level,
            iso: self.iso,
            camera_id: self.camera_id.clone(),
            ..FrameMeta::default()
        }
    }

    pub fn range(&self) -> f64 {
        (self.white_level - self.black_level) as f64
    }
}

#[derive(Debug, Clone)]
pub struct Geometry {
    pub bias_width: usize,
    pub bias_height: usize,
    pub bias_frames: usize,
    pub flat_size: usize,
    /// Flat levels as fractions of the usable range.
    pub levels: Vec<f64>,
    pub flats_per_level: usize,
}

pub fn write_clean(path: &Path, frame: &Frame, exposure: Option<f64>) {
    let mut side = FrameSidecar::describe(frame, FrameKind::Clean);
    side.exposure_time_s = exposure;
    write_frame(path, frame, &side).unwrap();
}

/// Profile whose sampler always returns `truth`.
pub fn degenerate_profile(path: &Path, sensor: &Sensor, truth: Truth) {
    let line = |v: f64| serde_json::json!({ "a": 0.0, "b": v.ln(), "sigma": 0.0, "n": 2 });
    let doc = serde_json::json!({
        "format_version": 1,
        "camera_id": sensor.camera_id,
        "per_iso": { sensor.iso.to_string(): {
            "k": truth.k, "lambda": truth.lambda, "sigma_tl": truth.sigma_tl, "sigma_r": truth.sigma_r
        }},
        "joint": {
            "log_k_min": truth.k.ln(),
            "log_k_max": truth.k.ln(),
            "tl_line": line(truth.sigma_tl),
            "row_line": line(truth.sigma_r),
            "lambda_pool": [truth.lambda],
        },
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

fn synth_into(work: &Path, clean: &Path, profile: &Path, count: usize, seed: u64, kind: &str, dest: &Path, prefix: &str) {
    let out = work.join(format!("synth-{prefix}-{kind}"));
    let args: Vec<OsString> = vec![
        "synth".into(),
        "--clean".into(),
        clean.into(),
        "--profile".into(),
        profile.into(),
        "--out".into(),
        (&out).into(),
        "--count".into(),
        count.to_string().into(),
        "--f-min".into(),
        "1".into(),
        "--f-max".into(),
        "1".into(),
        "--seed".into(),
        seed.to_string().into(),
        "--disable".into(),
        "quant".into(),
        "--no-clip".into(),
        "--kind".into(),
        kind.into(),
    ];
    run_ok(args);
    std::fs::create_dir_all(dest).unwrap();
    for entry in std::fs::read_dir(&out).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        // keep only the synthesized captures
        if name.contains("_noisy.") {
            std::fs::rename(&p, dest.join(format!("{prefix}_{name}"))).unwrap();
        }
    }
    std::fs::remove_dir_all(&out).unwrap();
}

/// Bias and flat frames of one ISO produced by `synth` from a profile
/// that pins the parameters to `truth`. Frames land in `flats` and
/// `biases` with a per-ISO prefix.
pub fn generate_iso(work: &Path, sensor: &Sensor, truth: Truth, geom: &Geometry, seed: u64, flats: &Path, biases: &Path) {
    let prefix = format!("iso{}", sensor.iso);
    let profile = work.join(format!("{prefix}_truth.json"));
    degenerate_profile(&profile, sensor, truth);

    let clean_bias = work.join(format!("{prefix}_clean_bias"));
    std::fs::create_dir_all(&clean_bias).unwrap();
    let zero = Frame::filled(geom.bias_width, geom.bias_height, 0.0, sensor.meta()).unwrap();
    write_clean(&clean_bias.join("dark.pgm"), &zero, None);
    synth_into(work, &clean_bias, &profile, geom.bias_frames, seed, "bias", biases, &prefix);

    let clean_flat = work.join(format!("{prefix}_clean_flat"));
    std::fs::create_dir_all(&clean_flat).unwrap();
    for (j, frac) in geom.levels.iter().enumerate() {
        let v = (frac * sensor.range()).round();
        let f = Frame::filled(geom.flat_size, geom.flat_size, v, sensor.meta()).unwrap();
        write_clean(&clean_flat.join(format!("level{j}.pgm")), &f, Some(*frac));
    }
    let count = geom.levels.len() * geom.flats_per_level;
    synth_into(work, &clean_flat, &profile, count, seed + 1, "flat", flats, &prefix);

    std::fs::remove_dir_all(&clean_bias).unwrap();
    std::fs::remove_dir_all(&clean_flat).unwrap();
}

pub fn calibrate(flats: &Path, biases: &Path, out: &Path, report: Option<&Path>) -> Output {
    let mut args: Vec<PathBuf> = vec![
        "calibrate".into(),
        "--flats".into(),
        flats.into(),
        "--biases".into(),
        biases.into(),
        "--out".into(),
        out.into(),
    ];
    if let Some(r) = report {
        args.push("--report".into());
        args.push(r.into());
    }
    run(args)
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Relative and absolute errors of calibrated parameters against the truth.
#[derive(Debug, Clone, Copy)]
pub struct Errors {
    pub k_rel: f64,
    pub lambda_abs: f64,
    pub sigma_tl_rel: f64,
    pub sigma_r_rel: f64,
}

impl Errors {
    pub fn of(profile: &serde_json::Value, iso: u32, truth: Truth) -> Self {
        let p = &profile["per_iso"][iso.to_string()];
        let get = |k: &str| p[k].as_f64().unwrap_or_else(|| panic!("missing {k} for ISO {iso}"));
        Self {
            k_rel: get("k") / truth.k - 1.0,
            lambda_abs: get("lambda") - truth.lambda,
            sigma_tl_rel: get("sigma_tl") / truth.sigma_tl - 1.0,
            sigma_r_rel: get("sigma_r") / truth.sigma_r - 1.0,
        }
    }

    /// K within 2%, λ within ±0.05, σ_TL within 5%, σ_r within 10%.
    pub fn within_tolerance(&self) -> bool {
        self.k_rel.abs() < 0.02 && self.lambda_abs.abs() <= 0.05 + 1e-12 && self.sigma_tl_rel.abs() < 0.05 && self.sigma_r_rel.abs() < 0.10
    }
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
