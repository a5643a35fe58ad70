use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sensornoise::calibration::{calibrate_iso, CalibrationOptions, CalibrationReport, CameraProfile, FrameSet};
use sensornoise::io::{read_frame, read_sidecar, write_atomic, write_profile, FrameFile};
use sensornoise::{FrameKind, RawFrame};

use crate::error::{CliError, CliResult, LibResultExt};
use crate::fsutil::list_rasters;

pub const REPORT_FORMAT_VERSION: u32 = 1;

pub struct Args {
    pub flats: PathBuf,
    pub biases: PathBuf,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    format_version: u32,
    camera_id: &'a str,
    reports: &'a [CalibrationReport],
}

type Loaded = FrameFile<f32>;

/// Frames of `kind` in `dir`; frames of other kinds (e.g. the clean
/// references `synth` writes alongside its output) are skipped.
fn load_kind(dir: &Path, kind: FrameKind) -> CliResult<Vec<Loaded>> {
    let mut frames = Vec::new();
    for path in list_rasters(dir)? {
        if read_sidecar(&path).data_err()?.kind == kind {
            frames.push(read_frame(&path).data_err()?);
        }
    }
    if frames.is_empty() {
        return Err(CliError::data(format!("no {kind} frames in {}", dir.display())));
    }
    Ok(frames)
}

fn by_iso(frames: Vec<Loaded>) -> BTreeMap<u32, Vec<Loaded>> {
    let mut map: BTreeMap<u32, Vec<Loaded>> = BTreeMap::new();
    for f in frames {
        map.entry(f.sidecar.iso).or_default().push(f);
    }
    map
}

pub fn run(args: &Args) -> CliResult<()> {
    let flats = load_kind(&args.flats, FrameKind::Flat)?;
    let biases = load_kind(&args.biases, FrameKind::Bias)?;
    let camera_id = flats[0].sidecar.camera_id.clone();
    if let Some(f) = flats.iter().chain(&biases).find(|f| f.sidecar.camera_id != camera_id) {
        return Err(CliError::data(format!(
            "mixed cameras: {camera_id:?} and {:?}",
            f.sidecar.camera_id
        )));
    }
    let mut flats = by_iso(flats);
    let mut biases = by_iso(biases);
    if flats.keys().ne(biases.keys()) {
        return Err(CliError::data(format!(
            "flat ISOs {:?} and bias ISOs {:?} differ",
            flats.keys().collect::<Vec<_>>(),
            biases.keys().collect::<Vec<_>>()
        )));
    }

    let options = CalibrationOptions {
        seed: args.seed,
        ..CalibrationOptions::default()
    };
    let mut reports = Vec::new();
    let isos: Vec<u32> = flats.keys().copied().collect();
    for iso in isos {
        let fl = flats.remove(&iso).expect("key listed");
        let bi = biases.remove(&iso).expect("same keys");
        let levels = fl.iter().map(|f| f.sidecar.exposure_time_s).collect();
        let fl: Vec<RawFrame<f32>> = fl.into_iter().map(|f| f.frame).collect();
        let bi: Vec<RawFrame<f32>> = bi.into_iter().map(|f| f.frame).collect();
        let flat_set = FrameSet::flats(fl, levels).calib_err()?;
        let bias_set = FrameSet::biases(bi).calib_err()?;
        reports.push(calibrate_iso(&flat_set, &bias_set, &options).calib_err()?);
    }

    let per_iso = reports.iter().map(|r| (r.iso, r.params())).collect();
    let profile = CameraProfile::from_per_iso(camera_id.clone(), per_iso).calib_err()?;
    if let Some(path) = &args.report {
        let doc = ReportDoc {
            format_version: REPORT_FORMAT_VERSION,
            camera_id: &camera_id,
            reports: &reports,
        };
        let json = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::data(e.to_string()))?;
        write_atomic(path, &json).data_err()?;
    }
    write_profile(&args.out, &profile).data_err()
}
