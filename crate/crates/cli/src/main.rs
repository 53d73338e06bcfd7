use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fenep_core::oracles::{self, DEFAULT_SEED};
use fenep_core::{convergence_study, run, BoundaryKind, Error, RunConfig};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fenep",
    version,
    about = "Viscoelastic shallow-water solver with FENE-P rheology"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots, diagnostics, final.svg and run.json.
    Solve(SolveArgs),
    /// Run a refinement study and report observed orders.
    Converge(ConvergeArgs),
    /// Run the verification oracles.
    Check {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Flat `key = value` configuration file (defaults to the dam-break preset).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    bc: Option<BoundaryKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "strict-dissipation")]
    strict_dissipation: bool,
    #[arg(long = "strict-subcharacteristic")]
    strict_subcharacteristic: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallel: bool,
    /// Any other configuration key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Comma-separated cell counts, each twice the previous.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
}

fn resolve(o: &Overrides) -> Result<RunConfig, Error> {
    let mut config = match &o.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::preset_dam_break(10.0)?,
    };
    if let Some(seed) = o.seed {
        config.set("seed", &seed.to_string())?;
    }
    if let Some(s) = &o.scenario {
        config.set_scenario(s)?;
    }
    if let Some(ell) = o.ell {
        config.params.extensibility = ell;
    }
    if let Some(n) = o.cells {
        config.cells = n;
    }
    if let Some(t) = o.t_end {
        config.t_end = t;
    }
    if let Some(c) = o.cfl {
        config.cfl = c;
    }
    if let Some(bc) = o.bc {
        config.boundary = bc;
    }
    if let Some(out) = &o.out {
        config.out_dir = Some(out.clone());
    }
    config.strict_dissipation |= o.strict_dissipation;
    config.strict_subcharacteristic |= o.strict_subcharacteristic;
    config.parallel |= o.parallel;
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config.set(k.trim(), v.trim())?;
    }
    config.validate()?;
    Ok(config)
}

fn solve(args: &SolveArgs) -> Result<(), Error> {
    let config = resolve(&args.overrides)?;
    let out = run(&config)?;
    let s = &out.summary;
    println!(
        "completed t={} steps={} min_dt={:e} violations={} max_stretch={} wall={:.3}s",
        s.t_final, s.steps, s.min_dt, s.violations, s.max_stretch, s.wall_time_s
    );
    if let Some(dir) = &config.out_dir {
        println!("output written to {}", dir.display());
    }
    Ok(())
}

fn converge(args: &ConvergeArgs) -> Result<(), Error> {
    let config = resolve(&args.overrides)?;
    let report = convergence_study(&config, &args.levels)?;
    println!("levels {:?}", report.levels);
    for (k, e) in report.self_errors.iter().enumerate() {
        let order = k
            .checked_sub(1)
            .and_then(|j| report.self_orders.get(j))
            .map_or(String::from("-"), |o| format!("{o:.3}"));
        println!(
            "{:>6} -> {:<6} L1(h) = {:.6e}  order = {}",
            report.levels[k],
            report.levels[k + 1],
            e,
            order
        );
    }
    if let (Some(errs), Some(ords)) = (&report.exact_errors, &report.exact_orders) {
        for (k, e) in errs.iter().enumerate() {
            let order = k
                .checked_sub(1)
                .and_then(|j| ords.get(j))
                .map_or(String::from("-"), |o| format!("{o:.3}"));
            println!(
                "{:>6} vs exact  L1(h) = {:.6e}  order = {}",
                report.levels[k], e, order
            );
        }
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("convergence.json"), &text)?;
    }
    println!("{text}");
    Ok(())
}

fn check(seed: u64) -> ExitCode {
    let reports = oracles::run_all(seed);
    for r in &reports {
        println!("{r}");
    }
    let passed = reports.iter().all(|r| r.passed);
    let summary = json!({ "seed": seed, "passed": passed, "oracles": reports });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("serializable report")
    );
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Converge(args) => converge(args),
        Command::Check { seed } => return check(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
