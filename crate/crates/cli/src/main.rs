use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qzeno_cli::config::{load_config, SEED_ENV};
use qzeno_cli::{run_experiment, CliError, Experiment, Settings};

#[derive(Parser, Debug)]
#[command(name = "qzeno", version, about = "Quantum Zeno effect experiments for a driven two-level system")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed for all random streams (default: $QZENO_SEED, else 1234)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: stdout)
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// key = value file; flags take precedence over it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Survival after n probes over half a Rabi period, exact and exponential
    Fig2 {
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Survival versus time for probe spacings dt = pi/(k*omega)
    Fig3 {
        #[arg(long)]
        omega: Option<String>,
        /// Comma-separated k values
        #[arg(long)]
        dt_divisors: Option<String>,
        #[arg(long)]
        t_max: Option<String>,
    },
    /// Monte Carlo no-tunneling counts versus tunneling rate
    Fig4 {
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        gamma_min: Option<String>,
        #[arg(long)]
        gamma_max: Option<String>,
        #[arg(long)]
        gamma_steps: Option<u64>,
        #[arg(long)]
        runs: Option<u64>,
        /// first-order or exact
        #[arg(long)]
        stepping: Option<String>,
        /// Fixed integration step in microseconds
        #[arg(long)]
        step: Option<String>,
    },
    /// Stochastic pulsed selective-measurement ensemble
    PulsedSim {
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        n_probes: Option<u64>,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        epsilon0: Option<String>,
        #[arg(long)]
        eta: Option<String>,
    },
    /// Pulsed versus continuous decay rates at gamma = 4/dt
    Equivalence {
        #[arg(long)]
        omega_pulsed: Option<String>,
        #[arg(long)]
        dt_max: Option<String>,
        #[arg(long)]
        dt_points: Option<u64>,
        #[arg(long)]
        decades: Option<String>,
    },
    /// Oracle cross-checks of the closed forms plus the equivalence table
    Validate {
        #[arg(long)]
        rk4_steps: Option<u64>,
        #[arg(long)]
        omega_pulsed: Option<String>,
        #[arg(long)]
        dt_max: Option<String>,
        #[arg(long)]
        dt_points: Option<u64>,
        #[arg(long)]
        decades: Option<String>,
    },
}

fn put(map: &mut BTreeMap<String, String>, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v.to_string());
    }
}

fn experiment_flags(cmd: Command) -> (Experiment, BTreeMap<String, String>) {
    let mut m = BTreeMap::new();
    let exp = match cmd {
        Command::Fig2 { n_max } => {
            put(&mut m, "n-max", n_max);
            Experiment::Fig2
        }
        Command::Fig3 { omega, dt_divisors, t_max } => {
            put(&mut m, "omega", omega);
            put(&mut m, "dt-divisors", dt_divisors);
            put(&mut m, "t-max", t_max);
            Experiment::Fig3
        }
        Command::Fig4 { omega, gamma_min, gamma_max, gamma_steps, runs, stepping, step } => {
            put(&mut m, "omega", omega);
            put(&mut m, "gamma-min", gamma_min);
            put(&mut m, "gamma-max", gamma_max);
            put(&mut m, "gamma-steps", gamma_steps);
            put(&mut m, "runs", runs);
            put(&mut m, "stepping", stepping);
            put(&mut m, "step", step);
            Experiment::Fig4
        }
        Command::PulsedSim { omega, n_probes, runs, epsilon0, eta } => {
            put(&mut m, "omega", omega);
            put(&mut m, "n-probes", n_probes);
            put(&mut m, "runs", runs);
            put(&mut m, "epsilon0", epsilon0);
            put(&mut m, "eta", eta);
            Experiment::PulsedSim
        }
        Command::Equivalence { omega_pulsed, dt_max, dt_points, decades } => {
            put(&mut m, "omega-pulsed", omega_pulsed);
            put(&mut m, "dt-max", dt_max);
            put(&mut m, "dt-points", dt_points);
            put(&mut m, "decades", decades);
            Experiment::Equivalence
        }
        Command::Validate { rk4_steps, omega_pulsed, dt_max, dt_points, decades } => {
            put(&mut m, "rk4-steps", rk4_steps);
            put(&mut m, "omega-pulsed", omega_pulsed);
            put(&mut m, "dt-max", dt_max);
            put(&mut m, "dt-points", dt_points);
            put(&mut m, "decades", decades);
            Experiment::Validate
        }
    };
    (exp, m)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.common;
    let (experiment, mut flags) = experiment_flags(cli.command);
    put(&mut flags, "seed", common.seed);
    put(&mut flags, "format", common.format);
    put(&mut flags, "threads", common.threads);
    put(&mut flags, "output", common.output.map(|p| p.display().to_string()));

    let config = match &common.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let settings = Settings::resolve(experiment, config, flags, std::env::var(SEED_ENV).ok())?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = settings.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Configuration(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| run_experiment(&settings))?;

    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let text = report.render(settings.format, &timestamp);
    match &settings.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or("").to_string();
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.one_line());
            ExitCode::from(1)
        }
    }
}
