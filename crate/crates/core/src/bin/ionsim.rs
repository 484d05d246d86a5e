use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionsim::cli::{self, parse_override, Command, RunConfig, EXIT_COMPARISON, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(name = "ionsim", version, about = "Trapped-ion transverse-field Ising simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Sub {
    /// Transverse mode frequencies, eigenvectors and Lamb-Dicke factors.
    Modes,
    /// Ising coupling matrix and power-law fit.
    Couplings,
    /// Trajectory ensembles for every N in sweep.n_values.
    Sweep,
    /// Exact uniform-coupling ground-state crossover curves.
    Dicke,
    /// Trajectories versus the density-matrix reference (N <= 3).
    Oracle,
    /// Fit a photon-count histogram (CSV of count,shots).
    Fit { histogram: PathBuf },
    /// Synthesize a detection histogram from detect.truth.
    Synthesize,
    /// Time ensembles across worker counts.
    Bench,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. --set ramp.tau=40 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    n_ions: Option<usize>,
    /// Uniform Rabi frequency or comma-separated per-ion list (kHz).
    #[arg(long, global = true)]
    omega: Option<String>,
    /// Absolute beatnote detuning (kHz).
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    n_traj: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> ionsim::Result<Vec<(String, String)>> {
        let mut out = self.set.iter().map(|s| parse_override(s)).collect::<ionsim::Result<Vec<_>>>()?;
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(n) = self.n_ions {
            put("trap.n_ions", n.to_string());
        }
        if let Some(w) = &self.omega {
            put("omega", if w.contains(',') { format!("[{w}]") } else { w.clone() });
        }
        if let Some(mu) = self.mu {
            put("mu", format!("{mu:?}"));
        }
        if let Some(n) = self.n_traj {
            put("n_traj", n.to_string());
        }
        if let Some(s) = self.seed {
            put("base_seed", s.to_string());
        }
        if let Some(w) = self.workers {
            put("workers", w.to_string());
        }
        if let Some(d) = &self.out_dir {
            put("output.dir", toml::Value::String(d.display().to_string()).to_string());
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Cli::parse();
    let cfg = match args.common.overrides().and_then(|ov| RunConfig::load(args.common.config.as_deref(), &ov)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let command = match args.command {
        Sub::Modes => Command::Modes,
        Sub::Couplings => Command::Couplings,
        Sub::Sweep => Command::Sweep,
        Sub::Dicke => Command::Dicke,
        Sub::Oracle => Command::Oracle,
        Sub::Fit { histogram } => Command::Fit { histogram },
        Sub::Synthesize => Command::Synthesize,
        Sub::Bench => Command::Bench,
    };
    let outcome = cli::execute(&command, &cfg).and_then(|o| o.report.write_files(&cfg).map(|paths| (o, paths)));
    match outcome {
        Ok((o, paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            if o.comparison_passed {
                ExitCode::from(EXIT_OK as u8)
            } else {
                eprintln!("oracle comparison failed");
                ExitCode::from(EXIT_COMPARISON as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
