use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gibbs_scan_cli::commands::{self, CommandOutput, TableOptions, VerifyOptions};
use gibbs_scan_cli::config::{ExperimentConfig, RatioErrorKind};
use gibbs_scan_cli::CliError;

#[derive(Parser)]
#[command(
    name = "gibbs-scan",
    version,
    about = "Two-component Gibbs sampler experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Normal-Normal preset (1 or 2), applied before the config file.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    setting: Option<u8>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicate-level parallelism; does not affect output.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; defaults to <output_dir>/<command>.csv, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Drift certificates over the q and p grids.
    Certify {
        #[arg(long)]
        j: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        n: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        q_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
    },
    /// Export one chain.
    Run {
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, default_value_t = 1)]
        thin: usize,
    },
    /// CI, ACT and MSE-ratio summary table.
    Table {
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        replicate_n: Option<usize>,
        /// Run random-scan strategies for n rather than 2n iterations.
        #[arg(long)]
        no_rsgs_doubling: bool,
        #[arg(long, value_enum)]
        ratio_error: Option<RatioErrorArg>,
    },
    /// Final y values of one run per strategy.
    Trace {
        #[arg(long)]
        strategy: Vec<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        last_k: Option<usize>,
        #[arg(long)]
        no_rsgs_doubling: bool,
    },
    /// Monte Carlo check of the drift certificates at pilot-run states.
    VerifyDrift {
        #[arg(long)]
        strategy: Vec<String>,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Also check the composition-scan certificate transferred from
        /// each random strategy.
        #[arg(long)]
        transfer: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RatioErrorArg {
    Delta,
    Jackknife,
}

fn resolve(global: &Global, flags: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match global.setting {
        Some(id) => ExperimentConfig::setting(id)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &global.config {
        cfg = cfg.overlay(ExperimentConfig::load(path)?);
    }
    let mut flags = flags;
    flags.seed = global.seed;
    Ok(cfg.overlay(flags))
}

fn strategies(list: Vec<String>) -> Option<Vec<String>> {
    (!list.is_empty()).then_some(list)
}

fn execute(cli: Cli) -> Result<(String, ExperimentConfig, CommandOutput), CliError> {
    let global = &cli.global;
    if let Some(w) = global.workers {
        if w < 1 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let (name, cfg, out) = match cli.command {
        Command::Certify {
            j,
            k,
            m,
            n,
            q_grid,
            p_grid,
        } => {
            let cfg = resolve(
                global,
                ExperimentConfig {
                    contract_j: j,
                    contract_k: k,
                    contract_m: m,
                    contract_n: n,
                    q_grid,
                    p_grid,
                    ..Default::default()
                },
            )?;
            let out = commands::certify(&cfg)?;
            ("certify", cfg, out)
        }
        Command::Run {
            strategy,
            iterations,
            thin,
        } => {
            let cfg = resolve(
                global,
                ExperimentConfig {
                    strategies: strategy.map(|s| vec![s]),
                    n: iterations,
                    thin: Some(thin),
                    ..Default::default()
                },
            )?;
            let out = commands::run(&cfg, thin)?;
            ("run", cfg, out)
        }
        Command::Table {
            iterations,
            replicates,
            replicate_n,
            no_rsgs_doubling,
            ratio_error,
        } => {
            let cfg = resolve(
                global,
                ExperimentConfig {
                    n: iterations,
                    replicates,
                    replicate_n,
                    rsgs_doubling: no_rsgs_doubling.then_some(false),
                    ratio_error: ratio_error.map(|r| match r {
                        RatioErrorArg::Delta => RatioErrorKind::Delta,
                        RatioErrorArg::Jackknife => RatioErrorKind::Jackknife,
                    }),
                    ..Default::default()
                },
            )?;
            let opts = TableOptions {
                rsgs_doubling: cfg.rsgs_doubling.unwrap_or(true),
            };
            let out = commands::table(&cfg, &opts)?;
            ("table", cfg, out)
        }
        Command::Trace {
            strategy,
            iterations,
            last_k,
            no_rsgs_doubling,
        } => {
            let cfg = resolve(
                global,
                ExperimentConfig {
                    strategies: strategies(strategy),
                    n: iterations,
                    last_k,
                    rsgs_doubling: no_rsgs_doubling.then_some(false),
                    ..Default::default()
                },
            )?;
            let out = commands::trace(
                &cfg,
                cfg.last_k.unwrap_or(1000),
                cfg.rsgs_doubling.unwrap_or(true),
            )?;
            ("trace", cfg, out)
        }
        Command::VerifyDrift {
            strategy,
            probes,
            mc_samples,
            transfer,
        } => {
            let cfg = resolve(
                global,
                ExperimentConfig {
                    strategies: strategies(strategy),
                    probes,
                    mc_samples,
                    ..Default::default()
                },
            )?;
            let opts = VerifyOptions {
                probes: cfg.probes.unwrap_or(50),
                mc_samples: cfg.mc_samples.unwrap_or(10_000),
                transfer,
            };
            let out = commands::verify(&cfg, &opts)?;
            ("verify-drift", cfg, out)
        }
    };
    Ok((name.to_string(), cfg, out))
}

fn write_output(path: Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(gibbs_scan::Error::from)?;
            }
            std::fs::write(&p, bytes).map_err(gibbs_scan::Error::from)?;
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(gibbs_scan::Error::from)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_flag = cli.global.out.clone();
    let result = execute(cli).and_then(|(name, cfg, out)| {
        let path = out_flag.or_else(|| cfg.output_dir.map(|d| d.join(format!("{name}.csv"))));
        write_output(path, &out.csv)?;
        Ok(out.failure)
    });
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("gibbs-scan: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gibbs-scan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
