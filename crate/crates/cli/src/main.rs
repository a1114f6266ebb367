//! `ionthermo` command-line front end.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ionthermo", version, about = "Trapped-ion thermometry by bichromatic driving")]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Print the effective configuration with every default and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Excited populations on the configured time grid.
    Simulate {
        #[arg(long)]
        nbar: Option<f64>,
        /// full | weak | weak-sideband | fit-hamiltonian | analytic-reduced | analytic-extended
        #[arg(long)]
        model: Option<String>,
    },
    /// Library of sideband evolutions from every Fock state.
    FockSweep {
        #[arg(long)]
        n_sweep: Option<usize>,
        /// blue | red
        #[arg(long)]
        sideband: Option<String>,
    },
    /// Estimate n̄ from a shot table.
    Estimate {
        #[arg(long)]
        shots: PathBuf,
        /// point | mle
        #[arg(long, default_value = "point")]
        method: String,
    },
    /// Fit a sideband evolution trace against a library.
    Fit {
        #[arg(long)]
        library: PathBuf,
        /// `time_us, ion, pe[, sigma]` trace.
        #[arg(long, conflicts_with = "shots")]
        trace: Option<PathBuf>,
        #[arg(long)]
        shots: Option<PathBuf>,
        /// Fit a noiseless trace and require recovery of the configured n̄.
        #[arg(long)]
        self_test: bool,
        /// Run a coverage study over this many synthetic experiments.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        nbar: Option<f64>,
    },
    /// Simulated heating-rate measurement.
    Heating {
        /// blue | red | bichromatic
        #[arg(long, default_value = "bichromatic")]
        pipeline: String,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Fisher information grids and the optimal probe locus.
    Fisher,
    /// Sample a shot table from the displacement dynamics.
    Sample {
        #[arg(long)]
        nbar: Option<f64>,
        /// Single probe time with `probe_shots` repetitions instead of the grid.
        #[arg(long)]
        time_us: Option<f64>,
    },
    /// Scan-then-probe measurement of n̄.
    Protocol {
        #[arg(long)]
        nbar: Option<f64>,
    },
    /// Ensemble spread of an estimator against the Cramér-Rao bound.
    Benchmark {
        /// point | mle | combined
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long)]
        n_shots: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    apply_overrides(&mut cfg, cli.command.as_ref());
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage("a subcommand is required (see --help)".into()));
    };
    let out = &cli.output_dir;
    match command {
        Command::Simulate { .. } => commands::simulate(&cfg, out),
        Command::FockSweep { .. } => commands::fock_sweep(&cfg, out),
        Command::Estimate { shots, method } => commands::estimate(&cfg, out, &shots, &method),
        Command::Fit {
            library,
            trace,
            shots,
            self_test,
            seeds,
            ..
        } => commands::fit(&cfg, out, &library, trace.as_deref(), shots.as_deref(), self_test, seeds),
        Command::Heating { pipeline, .. } => commands::heating(&cfg, out, &pipeline),
        Command::Fisher => commands::fisher(&cfg, out),
        Command::Sample { time_us, .. } => commands::sample(&cfg, out, time_us),
        Command::Protocol { .. } => commands::protocol(&cfg, out),
        Command::Benchmark { .. } => commands::benchmark(&cfg, out),
    }
}

/// Fold command flags into the configuration so the hash covers them.
fn apply_overrides(cfg: &mut RunConfig, command: Option<&Command>) {
    match command {
        Some(Command::Simulate { nbar, model }) => {
            if let Some(n) = nbar {
                cfg.nbar = *n;
            }
            if let Some(m) = model {
                cfg.model = m.clone();
            }
        }
        Some(Command::FockSweep { n_sweep, sideband }) => {
            if let Some(n) = n_sweep {
                cfg.n_sweep = *n;
            }
            if let Some(s) = sideband {
                cfg.sideband = s.clone();
            }
        }
        Some(Command::Fit { nbar, seeds, .. }) => {
            if let Some(n) = nbar {
                cfg.nbar = *n;
            }
            if let Some(s) = seeds {
                cfg.seeds = *s;
            }
        }
        Some(Command::Heating { repeats, .. }) => {
            if let Some(r) = repeats {
                cfg.repeats = *r;
            }
        }
        Some(Command::Sample { nbar, .. }) | Some(Command::Protocol { nbar }) => {
            if let Some(n) = nbar {
                cfg.nbar = *n;
            }
        }
        Some(Command::Benchmark { estimator, n_shots, seeds }) => {
            if let Some(e) = estimator {
                cfg.estimator = e.clone();
            }
            if let Some(n) = n_shots {
                cfg.probe_shots = *n;
            }
            if let Some(s) = seeds {
                cfg.seeds = *s;
            }
        }
        _ => {}
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ionthermo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
