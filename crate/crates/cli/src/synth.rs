use std::path::PathBuf;

use sensornoise::io::{read_frame, read_profile, write_frame, FrameFile, FrameSidecar};
use sensornoise::{synthesize_pair, FrameKind, NoiseComponents, RngStream, SynthesisConfig};

use crate::error::{CliError, CliResult, LibResultExt};
use crate::fsutil::{list_rasters, StagedDir, RASTER_EXT};

pub struct Args {
    pub clean: PathBuf,
    pub profile: PathBuf,
    pub out: PathBuf,
    pub count: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub seed: u64,
    pub disable: Option<String>,
    pub no_clip: bool,
    pub no_quantize: bool,
    pub kind: FrameKind,
}

/// Pair `i` draws from stream `(seed, i)` and uses clean frame `i mod n`.
pub fn run(args: &Args) -> CliResult<()> {
    if matches!(args.kind, FrameKind::Clean) {
        return Err(CliError::usage("--kind must describe a noisy output (noisy, bias or flat)"));
    }
    let components = match &args.disable {
        Some(list) => NoiseComponents::all_except(list).data_err()?,
        None => NoiseComponents::ALL,
    };
    let config = SynthesisConfig {
        f_min: args.f_min,
        f_max: args.f_max,
        clip: !args.no_clip,
        quantize_output: !args.no_quantize,
        components,
        ..SynthesisConfig::default()
    };
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let profile = read_profile(&args.profile).data_err()?;

    let sources = list_rasters(&args.clean)?;
    if sources.is_empty() {
        return Err(CliError::data(format!("no clean frames in {}", args.clean.display())));
    }
    let clean: Vec<FrameFile<f64>> = sources
        .iter()
        .map(|p| read_frame(p).data_err())
        .collect::<CliResult<_>>()?;

    let staged = StagedDir::new(&args.out)?;
    for i in 0..args.count {
        let src = &clean[i % clean.len()];
        let stream = RngStream::new(args.seed, i as u64);
        let pair = synthesize_pair(&src.frame, &profile.joint, &config, &stream).data_err()?;

        let mut noisy_side = FrameSidecar::describe(&pair.noisy, args.kind);
        noisy_side.exposure_time_s = src.sidecar.exposure_time_s;
        noisy_side.low_light_factor = Some(pair.factor);
        noisy_side.noise_params = Some(pair.params);
        noisy_side.seed = Some(args.seed);
        noisy_side.stream_id = Some(i as u64);
        let mut clean_side = FrameSidecar::describe(&pair.clean, FrameKind::Clean);
        clean_side.exposure_time_s = src.sidecar.exposure_time_s;

        let dir = staged.path();
        write_frame(&dir.join(format!("{i:05}_noisy.{RASTER_EXT}")), &pair.noisy, &noisy_side).data_err()?;
        write_frame(&dir.join(format!("{i:05}_clean.{RASTER_EXT}")), &pair.clean, &clean_side).data_err()?;
    }
    staged.commit()
}
