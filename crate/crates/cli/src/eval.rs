use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use sensornoise::io::{read_frame, FrameFile};
use sensornoise::metrics::evaluate;

use crate::error::{CliError, CliResult, LibResultExt};
use crate::fsutil::list_rasters;

pub struct Args {
    pub pred: PathBuf,
    pub reference: PathBuf,
    pub align: bool,
}

/// Infinite PSNR is written as `inf`; finite values use the shortest
/// representation that reads back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// CSV rows `name,psnr,ssim,align_scalar` for every reference raster, plus a
/// final `mean` row.
pub fn run(args: &Args, out: &mut dyn Write) -> CliResult<()> {
    let refs = list_rasters(&args.reference)?;
    if refs.is_empty() {
        return Err(CliError::data(format!("no frames in {}", args.reference.display())));
    }
    let rows: Vec<(String, f64, f64, f64)> = refs
        .par_iter()
        .map(|r| {
            let name = r.file_name().expect("listed file").to_string_lossy().into_owned();
            let p = args.pred.join(&name);
            if !p.is_file() {
                return Err(CliError::data(format!("{} has no counterpart in {}", name, args.pred.display())));
            }
            let reference: FrameFile<f64> = read_frame(r).data_err()?;
            let pred: FrameFile<f64> = read_frame(&p).data_err()?;
            let peak = reference.frame.meta.range_max() as f64;
            let res = evaluate(&pred.frame, &reference.frame, peak, args.align).data_err()?;
            Ok((name, res.psnr, res.ssim, res.align_scalar))
        })
        .collect::<CliResult<_>>()?;

    let n = rows.len() as f64;
    let mean = |f: fn(&(String, f64, f64, f64)) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let means = (mean(|r| r.1), mean(|r| r.2), mean(|r| r.3));

    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::data(format!("writing CSV: {e}"));
    w.write_record(["name", "psnr", "ssim", "align_scalar"]).map_err(csv_err)?;
    for (name, p, s, c) in &rows {
        w.write_record([name.clone(), fmt_num(*p), fmt_num(*s), fmt_num(*c)])
            .map_err(csv_err)?;
    }
    w.write_record(["mean".to_string(), fmt_num(means.0), fmt_num(means.1), fmt_num(means.2)])
        .map_err(csv_err)?;
    w.flush().map_err(|e| CliError::data(format!("writing CSV: {e}")))
}
