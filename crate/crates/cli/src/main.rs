//! `sensornoise`: calibrate sensor noise profiles and synthesize low-light
//! raw training pairs.

mod calibrate;
mod error;
mod eval;
mod fsutil;
mod preview;
mod sample_params;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use error::{CliError, CliResult};
use sensornoise::FrameKind;

#[derive(Parser)]
#[command(name = "sensornoise", version, about = "Physics-based raw sensor noise toolkit")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutKind {
    Noisy,
    Bias,
    Flat,
}

impl From<OutKind> for FrameKind {
    fn from(k: OutKind) -> Self {
        match k {
            OutKind::Noisy => FrameKind::Noisy,
            OutKind::Bias => FrameKind::Bias,
            OutKind::Flat => FrameKind::Flat,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-ISO noise parameters and the joint model from flat and bias frames.
    Calibrate {
        #[arg(long)]
        flats: PathBuf,
        #[arg(long)]
        biases: PathBuf,
        /// Profile JSON to write.
        #[arg(long)]
        out: PathBuf,
        /// Diagnostics JSON (PPCC curves, probability plots, spectra, transfer curve).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Seed for pixel subsampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate noisy/clean pairs from clean frames and a profile.
    Synth {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Output directory; must not exist or be empty.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 100.0)]
        f_min: f64,
        #[arg(long, default_value_t = 300.0)]
        f_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma separated components to turn off: shot,read,row,quant.
        #[arg(long)]
        disable: Option<String>,
        /// Keep values outside [0, white - black].
        #[arg(long)]
        no_clip: bool,
        /// Skip rounding to integer DN (the 16-bit files round regardless).
        #[arg(long)]
        no_quantize: bool,
        /// Kind recorded in the noisy frames' sidecars.
        #[arg(long, value_enum, default_value = "noisy")]
        kind: OutKind,
    },
    /// Per-pair and mean PSNR/SSIM as CSV on standard output.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Scale predictions by the MSE-minimizing brightness scalar first.
        #[arg(long)]
        align: bool,
    },
    /// Noise parameter draws as CSV on standard output.
    SampleParams {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Linear, non-colorimetric 8-bit PNG preview of a raw frame.
    Preview {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let stdout = std::io::stdout();
    match cli.command {
        Command::Calibrate {
            flats,
            biases,
            out,
            report,
            seed,
        } => calibrate::run(&calibrate::Args {
            flats,
            biases,
            out,
            report,
            seed,
        }),
        Command::Synth {
            clean,
            profile,
            out,
            count,
            f_min,
            f_max,
            seed,
            disable,
            no_clip,
            no_quantize,
            kind,
        } => synth::run(&synth::Args {
            clean,
            profile,
            out,
            count,
            f_min,
            f_max,
            seed,
            disable,
            no_clip,
            no_quantize,
            kind: kind.into(),
        }),
        Command::Eval { pred, reference, align } => {
            eval::run(&eval::Args { pred, reference, align }, &mut stdout.lock())
        }
        Command::SampleParams { profile, count, seed } => {
            sample_params::run(&sample_params::Args { profile, count, seed }, &mut stdout.lock())
        }
        Command::Preview { input, out } => preview::run(&preview::Args { input, out }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::usage(msg).to_json_line());
            return ExitCode::from(error::EXIT_USAGE as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.code as u8)
        }
    }
}
