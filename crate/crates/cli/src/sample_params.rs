use std::io::Write;
use std::path::PathBuf;

use sensornoise::io::read_profile;
use sensornoise::rng::tags;
use sensornoise::{sample_noise_params, Params, RngStream, SynthesisConfig};

use crate::error::{CliError, CliResult, LibResultExt};
use crate::eval::fmt_num;

pub struct Args {
    pub profile: PathBuf,
    pub count: usize,
    pub seed: u64,
}

/// Draw `i` comes from the same substream `synth` uses for pair `i`, so the
/// two commands agree for a given seed.
pub fn run(args: &Args, out: &mut dyn Write) -> CliResult<()> {
    let profile = read_profile(&args.profile).data_err()?;
    let q = SynthesisConfig::default().quant_step;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::data(format!("writing CSV: {e}"));
    w.write_record(["index", "k", "lambda", "sigma_tl", "sigma_r", "q"])
        .map_err(csv_err)?;
    for i in 0..args.count {
        let stream = RngStream::new(args.seed, i as u64).substream(tags::PARAMS);
        let p: Params = sample_noise_params(&profile.joint, &stream).data_err()?;
        w.write_record([
            i.to_string(),
            fmt_num(p.k),
            fmt_num(p.lambda),
            fmt_num(p.sigma_tl),
            fmt_num(p.sigma_r),
            fmt_num(q),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::data(format!("writing CSV: {e}")))
}
