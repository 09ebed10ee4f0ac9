use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergsim::sim::check::{check, CheckOptions};
use ergsim::sim::plot::line_chart;
use ergsim::sim::{run, sweep, ConfigError, SimConfig, TrajectoryLog};
use log::info;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "ergsim", about = "Quadruped trot simulation with an explicit reference governor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trajectory and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `sim.output_dir`, then the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Feed the desired reference straight to the controller.
        #[arg(long)]
        no_erg: bool,
        /// Extra `key=value` overrides applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run one simulation per value of a numeric parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_name = "DOTTED.KEY")]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
        /// Also write the summary table to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a pass/fail report.
    Check {
        /// Fewer randomized instances.
        #[arg(long)]
        fast: bool,
        /// Scenario used by the simulation-based criteria.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Attraction gain of the randomized governor trials.
        #[arg(long)]
        alpha_r: Option<f64>,
    },
    /// Print the program version.
    Version,
    /// Draw logged columns against time as an SVG line chart.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated column names, with or without units.
        #[arg(long)]
        cols: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, overrides: &[String]) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::load(path)?;
    for kv in overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: kv.clone() })?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn cmd_run(config: &Path, out: Option<PathBuf>, no_erg: bool, overrides: &[String]) -> ExitCode {
    let mut cfg = match load(config, overrides) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    if no_erg {
        cfg.erg_enabled = false;
    }
    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return config_error(&e),
    };
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    match output.save(&dir) {
        Ok((log_path, metrics_path)) => info!("wrote {} and {}", log_path.display(), metrics_path.display()),
        Err(e) => {
            eprintln!("writing {}: {e}", dir.display());
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    if !output.events.is_empty() {
        info!("{} events", output.events.len());
    }
    print!("{}", output.metrics.to_text());
    if output.metrics.completed {
        ExitCode::SUCCESS
    } else {
        eprintln!("run aborted: {}", output.metrics.abort_reason.as_deref().unwrap_or("unknown"));
        ExitCode::from(EXIT_FAILURE)
    }
}

fn cmd_sweep(config: &Path, param: &str, values: &str, out: Option<PathBuf>) -> ExitCode {
    let cfg = match load(config, &[]) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    let values: Vec<String> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
    let table = match sweep(&cfg, param, &values) {
        Ok(t) => t,
        Err(e) => return config_error(&e),
    };
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = table.write_csv(&mut stdout) {
        eprintln!("writing summary: {e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    if let Some(path) = out {
        if let Err(e) = table.save(&path) {
            eprintln!("writing {}: {e}", path.display());
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let mut failed = false;
    for (value, e) in table.failures() {
        eprintln!("{param} = {value}: {e}");
        failed = true;
    }
    for (value, m) in table.metrics() {
        if !m.completed {
            eprintln!("{param} = {value}: run aborted");
            failed = true;
        }
    }
    if failed {
        ExitCode::from(EXIT_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_check(fast: bool, config: Option<PathBuf>, alpha_r: Option<f64>) -> ExitCode {
    let mut opts = CheckOptions { fast, ..CheckOptions::default() };
    if let Some(path) = config {
        match load(&path, &[]) {
            Ok(c) => opts.scenario = c,
            Err(e) => return config_error(&e),
        }
    }
    if let Some(a) = alpha_r {
        opts.governor.alpha_r = a;
    }
    match check(&opts) {
        Ok(report) => {
            print!("{}", report.to_text());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Err(e) => config_error(&e),
    }
}

fn cmd_plot(input: &Path, cols: &str, out: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("reading {}: {e}", input.display());
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let cols: Vec<&str> = cols.split(',').map(str::trim).filter(|c| !c.is_empty()).collect();
    let svg = TrajectoryLog::read_csv(&text).and_then(|log| line_chart(&log, &cols));
    match svg {
        Ok(svg) => match std::fs::write(out, svg) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("writing {}: {e}", out.display());
                ExitCode::from(EXIT_FAILURE)
            }
        },
        Err(e) => {
            eprintln!("plot: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { config, out, no_erg, overrides } => cmd_run(&config, out, no_erg, &overrides),
        Command::Sweep { config, param, values, out } => cmd_sweep(&config, &param, &values, out),
        Command::Check { fast, config, alpha_r } => cmd_check(fast, config, alpha_r),
        Command::Version => {
            println!("ergsim {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Plot { input, cols, out } => cmd_plot(&input, &cols, &out),
    }
}
