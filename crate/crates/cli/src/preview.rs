use std::path::PathBuf;

use image::{ImageFormat, RgbImage};

use sensornoise::io::{read_frame, write_atomic, FrameFile};
use sensornoise::preview::linear_preview;

use crate::error::{CliError, CliResult, LibResultExt};

pub struct Args {
    pub input: PathBuf,
    pub out: PathBuf,
}

/// Half-resolution 8-bit PNG; not colorimetric.
pub fn run(args: &Args) -> CliResult<()> {
    let f: FrameFile<f64> = read_frame(&args.input).data_err()?;
    let p = linear_preview(&f.frame).data_err()?;
    let img = RgbImage::from_raw(p.width as u32, p.height as u32, p.rgb)
        .ok_or_else(|| CliError::data("preview buffer size mismatch"))?;
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, ImageFormat::Png)
        .map_err(|e| CliError::data(format!("encoding PNG: {e}")))?;
    write_atomic(&args.out, bytes.get_ref()).data_err()
}
