use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ospr::harness::{
    cmd_converge, cmd_generate, cmd_ssim_components, cmd_ssim_converge, cmd_table1,
    ExperimentConfig,
};
use ospr::metrics::SsimComponent;
use ospr::{OsprError, Result};

#[derive(Parser)]
#[command(name = "ospr", version, about = "OSPR holography experiments")]
struct Cli {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override any config key, e.g. `--set sweep=1,2,4`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write quantised subframes and the mean replay image.
    Generate,
    /// MSE and SSIM against subframe count, with the A + B/N fit.
    Converge,
    /// Measured and simulated error parameters per distribution.
    Table1,
    /// Histograms of the SSIM components per subframe count.
    SsimComponents,
    /// Measured SSIM against the model predictions.
    SsimConverge,
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            OsprError::Io { path, source } => OsprError::Config {
                location: path.display().to_string(),
                message: source.to_string(),
            },
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.runs = runs;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    match cli.command {
        Command::Generate => {
            let r = cmd_generate(cfg)?;
            println!("{}", r.energy);
            println!("replay rotationally symmetric: {}", r.replay_symmetric);
            println!("wrote {} files to {}", r.files.len(), cfg.out.display());
        }
        Command::Converge => {
            let r = cmd_converge(cfg)?;
            println!("{:>4}  {:>12}  {:>12}  {:>10}", "N", "MSE", "2sd", "SSIM");
            for row in &r.campaign.rows {
                println!(
                    "{:>4}  {:>12.6}  {:>12.6}  {:>10.6}",
                    row.n_subframes,
                    row.mse_mean,
                    2.0 * row.mse_std,
                    row.ssim_mean
                );
            }
            if let Some(fit) = &r.fit {
                println!("fit: A = {:.6}  B = {:.6}  r^2 = {:.6}", fit.a, fit.b, fit.r_squared);
            }
            println!(
                "model: floor = {:.6}  sigma2 = {:.6}  bias_cs = {:.6}",
                r.model.floor, r.model.sigma2_eps_prime, r.bias.bias_cs
            );
        }
        Command::Table1 => {
            println!(
                "{:<10} {:>10} {:>10} {:>10} {:>10} {:>8}",
                "dist", "bias(m)", "s2(m)", "bias(s)", "s2(s)", "relerr"
            );
            for row in cmd_table1(cfg)? {
                println!(
                    "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.4}",
                    row.distribution,
                    row.measured_floor,
                    row.measured_sigma2,
                    row.simulated_floor,
                    row.simulated_sigma2,
                    row.max_relative_error
                );
            }
        }
        Command::SsimComponents => {
            let r = cmd_ssim_components(cfg)?;
            for (i, row) in r.rows.iter().enumerate() {
                let parts: Vec<String> = SsimComponent::ALL
                    .iter()
                    .map(|&c| format!("{}={:.4e}", c.name(), r.histogram(i, c).mean))
                    .collect();
                println!("N={:<3} {}", row.n_subframes, parts.join(" "));
            }
        }
        Command::SsimConverge => {
            let r = cmd_ssim_converge(cfg)?;
            println!("{:>4}  {:>10}  {:>10}  {:>10}", "N", "measured", "model", "model_full");
            for row in &r.rows {
                println!(
                    "{:>4}  {:>10.6}  {:>10.6}  {:>10.6}",
                    row.n_subframes, row.ssim_mean, row.model, row.model_full
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = config(&cli).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| OsprError::InvalidArgument(e.to_string()))?;
        pool.install(|| run(&cli, &cfg))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
