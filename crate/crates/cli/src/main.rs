use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ris_dfrc_cli::{run_cut, run_design, run_tradeoff, Arch, CliError, RunConfig, RunOptions};

/// Beampattern design and ISAC tradeoff experiments for a RIS-based DFRC transmitter.
#[derive(Parser)]
#[command(name = "ris-dfrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and print the fully resolved configuration.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Design waveform and RIS phases for one power split.
    Design {
        #[command(flatten)]
        common: Common,
        /// Power split between the radar and communication beams.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Export one frequency slice of a stored beampattern map.
    Cut {
        /// Directory written by `design`.
        #[arg(long)]
        from: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        freq_mhz: f64,
        /// Write normalized power in dB instead of amplitude.
        #[arg(long)]
        normalize: bool,
        /// Defaults to the `--from` directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sweep the power split and tabulate average rate and detection probability.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr_db: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        eta_list: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = ArchChoice::Both)]
        arch: ArchChoice,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the optimizer and Monte Carlo seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Omit wall-clock times so reruns produce identical files.
    #[arg(long)]
    deterministic: bool,
    /// Defaults to `output.dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Allow grids larger than the desk-scale limit.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchChoice {
    Ris,
    Mimo,
    Both,
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(RunConfig::from_toml(&text)?)
        }
        None => Ok(RunConfig::paper()),
    }
}

fn prepare(common: &Common) -> Result<(RunConfig, RunOptions), CliError> {
    let mut cfg = load(common.config.as_ref())?;
    if let Some(seed) = common.seed {
        cfg.optimizer.seed = seed;
        cfg.performance.mc_seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    let opts = RunOptions {
        out_dir: PathBuf::from(&cfg.output.dir),
        deterministic: common.deterministic,
        full_scale: common.full_scale,
    };
    Ok((cfg, opts))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(config.as_ref())?;
            println!("# config_hash: {}", cfg.hash());
            print!("{}", cfg.to_toml());
        }
        Command::Design { common, eta } => {
            let (mut cfg, opts) = prepare(&common)?;
            if let Some(eta) = eta {
                cfg.desired.eta = eta;
            }
            let out = run_design(&cfg, &opts)?;
            eprintln!(
                "eta = {}: objective {:.6e} after {} iterations{}",
                cfg.desired.eta,
                out.trace.final_objective,
                out.trace.iterations,
                if out.trace.converged { "" } else { " (iteration cap reached)" }
            );
            for f in &out.files {
                println!("{}", f.display());
            }
        }
        Command::Cut {
            from,
            freq_mhz,
            normalize,
            out_dir,
        } => {
            let out = out_dir.unwrap_or_else(|| from.clone());
            println!("{}", run_cut(&from, freq_mhz, normalize, &out)?.display());
        }
        Command::Tradeoff {
            common,
            snr_db,
            eta_list,
            arch,
        } => {
            let (mut cfg, opts) = prepare(&common)?;
            if let Some(v) = snr_db {
                cfg.performance.snr_db = v;
            }
            if let Some(v) = eta_list {
                cfg.desired.eta_list = v;
            }
            let archs: &[Arch] = match arch {
                ArchChoice::Ris => &[Arch::Ris],
                ArchChoice::Mimo => &[Arch::Mimo],
                ArchChoice::Both => &[Arch::Ris, Arch::Mimo],
            };
            for f in run_tradeoff(&cfg, archs, &opts)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
