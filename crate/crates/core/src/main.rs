use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chiral_array::config::{Overrides, SimulationConfig};
use chiral_array::{runner, Result};

/// Multi-excitation dynamics in a chirally coupled atomic array.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads for sweeps, ensembles and observables (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write data, figures and a manifest.
    Run(ConfigArgs),
    /// Evaluate the configured [sweep] over theta, D or xi.
    Sweep(ConfigArgs),
    /// Routing-time statistics over phase-jittered initial states.
    Jitter(ConfigArgs),
    /// Compare against the full master equation (small arrays only).
    OracleCheck(ConfigArgs),
    /// Re-render figures from an existing result directory.
    Figures {
        /// Result directory written by an earlier command.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of sites N.
    #[arg(long = "n")]
    n_sites: Option<usize>,
    /// Number of excitations M.
    #[arg(long = "m")]
    n_excitations: Option<usize>,
    /// Directionality D in [-1, 1].
    #[arg(long = "d", allow_negative_numbers = true)]
    directionality: Option<f64>,
    /// Phase per spacing in radians.
    #[arg(long, conflicts_with = "xi_over_pi", allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Phase per spacing in units of pi.
    #[arg(long, allow_negative_numbers = true)]
    xi_over_pi: Option<f64>,
    /// Final time of the grid.
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SimulationConfig> {
        let mut config = SimulationConfig::from_path(&self.config)?;
        config.apply(&Overrides {
            n_sites: self.n_sites,
            n_excitations: self.n_excitations,
            directionality: self.directionality,
            xi: self.xi,
            xi_over_pi: self.xi_over_pi,
            t_max: self.t_max,
            out: self.out.clone(),
        });
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let bundle = runner::run(&args.load()?)?;
            let sim = &bundle.simulation;
            println!("wrote {} files to {}", bundle.manifest.files.len(), bundle.dir.display());
            if let Some(r) = &sim.routing {
                println!("t_c = {:?}, P_N(t_c) = {:.6e}, S = {:.6}", r.t_c, r.p_max, sim.entropy);
            }
            if let Some(res) = sim.residual {
                println!("propagation residual = {res:.3e}");
            }
        }
        Command::Sweep(args) => {
            let config = args.load()?;
            let result = runner::sweep(&config)?;
            println!("{} points -> {}", result.points.len(), config.output.dir.display());
            for p in &result.points {
                println!(
                    "D = {:<6} {} = {:<10.6} t_c = {:?}",
                    p.series_d,
                    result.axis.label(),
                    p.value,
                    p.routing.t_c
                );
            }
        }
        Command::Jitter(args) => {
            let config = args.load()?;
            let r = runner::jitter_study(&config)?;
            println!(
                "t_c over {} samples: mean {:.4}, std {:.4}, spread {:.4} (baseline {:?})",
                r.n_samples, r.mean, r.std, r.spread, r.baseline_t_c
            );
            if let Some(ok) = r.within_bound {
                println!("relative std {:.4e} within bound: {ok}", r.relative_std);
            }
        }
        Command::OracleCheck(args) => {
            let r = runner::oracle_check(&args.load()?)?;
            println!(
                "max block deviation {:.3e} (tolerance {:.0e}): pass",
                r.max_block_deviation, r.tolerance
            );
        }
        Command::Figures { out } => {
            let manifest = runner::figures(&out)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!("manifest lists {} files", manifest.files.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
