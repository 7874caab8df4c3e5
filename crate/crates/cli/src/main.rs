use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use imdd_core::harness::{
    comparison_csv, find_nulls, loading_for, notch_probe, run_comparison, run_point, write_outputs, CurveStatus,
    Manifest, Scenario, Sideband, SimConfig,
};
use imdd_core::rx::FormatTag;
use imdd_core::Error;

#[derive(Parser)]
#[command(name = "imdd", version, about = "IM/DD short-reach link simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pam4,
    Dmt,
    Cap,
}

impl From<Format> for FormatTag {
    fn from(f: Format) -> Self {
        match f {
            Format::Pam4 => FormatTag::Pam4,
            Format::Dmt => FormatTag::Dmt,
            Format::Cap => FormatTag::Cap,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure the BER of one format at one OSNR.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Format,
        /// OSNR in dB per 0.1 nm; `inf` disables ASE.
        #[arg(long)]
        osnr: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run every scenario of a manifest and write CSVs and a gnuplot script.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probe the link and print the resulting bit-loading table as CSV.
    Loadmap {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Format,
        /// Probe OSNR; defaults to the link's configured OSNR.
        #[arg(long)]
        osnr: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sweep a tone through the noiseless link and write the detected response.
    Notch {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10e6)]
        start: f64,
        #[arg(long, default_value_t = 20e9)]
        stop: f64,
        #[arg(long, default_value_t = 10e6)]
        step: f64,
    },
}

enum Failure {
    Core(Error),
    Outcome(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, Error> {
    match path {
        Some(p) => SimConfig::load(p),
        None => Ok(SimConfig::default()),
    }
}

/// Scenario reproducing the link exactly as configured.
fn as_configured(cfg: &SimConfig, format: FormatTag) -> Scenario {
    let link = &cfg.link;
    let sideband = if link.laser_detuning_hz == 0.0 { Sideband::Dsb } else { Sideband::Vsb };
    let mut sc = Scenario::new(format.name(), format, sideband, link.fiber_length_km, link.dcm_enabled);
    sc.detuning_hz = link.laser_detuning_hz;
    sc
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Simulate { config, format, osnr, seed } => {
            let cfg = load_config(config.as_deref())?;
            let sc = as_configured(&cfg, format.into());
            let p = run_point(&sc, &cfg, osnr, seed)?;
            let ber = p.ber.map(|b| format!("{b:e}")).unwrap_or_else(|| "-".into());
            println!("format={} osnr_db={} errors={} bits={} ber={ber} valid={}", sc.format, p.osnr_db, p.errors, p.bits, p.valid);
            if !p.valid {
                return Err(Failure::Outcome("receiver failed to synchronize or converge".into()));
            }
        }
        Cmd::Sweep { manifest, out } => {
            let m = Manifest::load(&manifest)?;
            let curves = run_comparison(&m)?;
            let files = write_outputs(&out, &curves, m.sweep.target_ber)?;
            print!("{}", comparison_csv(&curves));
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            let bad: Vec<&str> = curves
                .iter()
                .filter(|c| c.status == CurveStatus::NoCrossing || c.points.iter().any(|p| !p.valid))
                .map(|c| c.scenario.id.as_str())
                .collect();
            if !bad.is_empty() {
                return Err(Failure::Outcome(format!("no crossing or sync failure in: {}", bad.join(", "))));
            }
        }
        Cmd::Loadmap { config, format, osnr, seed } => {
            let mut cfg = load_config(config.as_deref())?;
            let tag: FormatTag = format.into();
            match tag {
                FormatTag::Pam4 => return Err(Error::Config("PAM-4 has no loading table".into()).into()),
                FormatTag::Dmt => cfg.dmt.loading_file = None,
                FormatTag::Cap => cfg.cap.loading_file = None,
            }
            let mut link = cfg.link.clone();
            if let Some(o) = osnr {
                link.osnr_db = o;
                link.ase_enabled = o.is_finite();
            }
            let table = loading_for(tag, &cfg, &link, seed)?;
            print!("{}", table.to_csv());
        }
        Cmd::Notch { config, out, start, stop, step } => {
            let cfg = load_config(config.as_deref())?;
            let resp = notch_probe(&cfg.link, cfg.dmt.dac_rate, start, stop, step)?;
            let mut csv = String::from("frequency_hz,power_db\n");
            for (f, p) in &resp {
                csv.push_str(&format!("{f},{p}\n"));
            }
            std::fs::write(&out, csv).map_err(Error::from)?;
            for f in find_nulls(&resp, 15.0, 1e9) {
                println!("null_hz={f:.4e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Sync { .. } | Error::NoCrossing(_) => 3,
                _ => 1,
            })
        }
        Err(Failure::Outcome(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
