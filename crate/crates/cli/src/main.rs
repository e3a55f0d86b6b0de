use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoothrl::cases::{SweepGrid, Variant};
use smoothrl::config::{
    cmd_linearize, cmd_run, cmd_simulate, cmd_sweep, export_scenario, list_scenarios, ConfigError, MethodKind,
    RunConfig,
};

/// Smooth and conventional rate limiter experiments.
#[derive(Parser)]
#[command(name = "smoothrl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write <out>/<scenario>/trace.csv.
    Simulate(RunArgs),
    /// Linearize at the operating point and write poles.csv, state_matrix.csv and pole_map.csv.
    Linearize(RunArgs),
    /// Sweep the limiter gains and write metrics.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// k1 values, comma separated.
        #[arg(long, value_delimiter = ',')]
        k1: Vec<f64>,
        /// k2 values, comma separated.
        #[arg(long, value_delimiter = ',')]
        k2: Vec<f64>,
        /// k3 values, comma separated.
        #[arg(long, value_delimiter = ',')]
        k3: Vec<f64>,
    },
    /// Run every analysis listed in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print a built-in scenario as TOML.
    ExportScenario {
        name: String,
        #[arg(long)]
        variant: Option<Variant>,
        /// Write to this file instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name or scenario TOML file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    variant: Option<Variant>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<MethodKind>,
    /// Fixed step (rk4) or initial step (adaptive).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// End of the simulated horizon, s.
    #[arg(long)]
    t_end: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn config(self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => RunConfig::new(name),
            (None, None) => return Err(ConfigError::Invalid("give --scenario or --config".into())),
        };
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(v) = self.variant {
            cfg.variant = Some(v);
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        cfg.method = self.method.or(cfg.method);
        cfg.h = self.h.or(cfg.h);
        cfg.rtol = self.rtol.or(cfg.rtol);
        cfg.atol = self.atol.or(cfg.atol);
        cfg.t_end = self.t_end.or(cfg.t_end);
        cfg.jobs = self.jobs.or(cfg.jobs);
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<(), ConfigError> {
    match command {
        Command::Simulate(args) => println!("{}", cmd_simulate(&args.config()?)?),
        Command::Linearize(args) => println!("{}", cmd_linearize(&args.config()?)?),
        Command::Sweep { run, k1, k2, k3 } => {
            let mut cfg = run.config()?;
            if !(k1.is_empty() && k2.is_empty() && k3.is_empty()) {
                let base = cfg.resolve()?;
                let p = base.model.limiter();
                let or = |v: Vec<f64>, k: f64| if v.is_empty() { vec![k] } else { v };
                cfg.sweep = Some(SweepGrid { k1: or(k1, p.k1()), k2: or(k2, p.k2()), k3: or(k3, p.k3()) });
            }
            println!("{}", cmd_sweep(&cfg)?);
        }
        Command::Run { config } => {
            for line in cmd_run(&RunConfig::load(&config)?)? {
                println!("{line}");
            }
        }
        Command::ListScenarios => {
            for (name, about) in list_scenarios() {
                println!("{name:<18}{about}");
            }
        }
        Command::ExportScenario { name, variant, output } => {
            let text = export_scenario(&name, variant)?;
            match output {
                Some(path) => smoothrl::io::write_atomic(&path, text.as_bytes())
                    .map_err(|source| ConfigError::Write { path: path.display().to_string(), source })?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
