use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use watsonlab::verify::{
    dump_traces, format_report, reports_json, run_many, special_table, SuiteConfig, SUITES,
};
use watsonlab::Error;

#[derive(Parser)]
#[command(name = "watsonlab", version, about = "Property suites for the complementary series of GL(2,R)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite, or `all`.
    Run {
        suite: String,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        grading: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Dump function traces and the orbit operator as CSV.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        /// Number of grid levels (each doubles x_max and nodes).
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Override a tolerance: `suite=tol` or `suite.metric=tol`.
        #[arg(long = "tol", value_name = "KEY=VALUE")]
        tolerances: Vec<String>,
        /// Keep wall times in the JSON report (breaks byte-determinism).
        #[arg(long)]
        timings: bool,
    },
    /// Print x, φ_s(x), ψ_s(x)/i as CSV.
    Table {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// List suite names.
    List,
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for s in SUITES {
                println!("{s}");
            }
            ExitCode::SUCCESS
        }
        Command::Table { s, xmax, points } => match special_table(s, xmax, points) {
            Ok(rows) => {
                println!("x,phi,psi_over_i");
                for [x, phi, psi] in rows {
                    println!("{x:.16e},{phi:.16e},{psi:.16e}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => config_error(e),
        },
        Command::Run { suite, s, xmax, nodes, grading, seed, json, csv_dir, refine, jobs, tolerances, timings } => {
            let mut cfg = SuiteConfig::default();
            if let Ok(path) = std::env::var("WATSONLAB_DEFAULTS") {
                let text = match std::fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => return config_error(format!("{path}: {e}")),
                };
                if let Err(e) = cfg.apply_defaults_file(&text) {
                    return config_error(format!("{path}: {e}"));
                }
            }
            cfg.s = s.unwrap_or(cfg.s);
            cfg.x_max = xmax.unwrap_or(cfg.x_max);
            cfg.n_nodes = nodes.unwrap_or(cfg.n_nodes);
            cfg.grading = grading.unwrap_or(cfg.grading);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.refine = refine.unwrap_or(cfg.refine);
            cfg.jobs = jobs.unwrap_or(cfg.jobs);
            for t in &tolerances {
                let parsed = t.split_once('=').and_then(|(k, v)| Some((k.trim(), v.trim().parse::<f64>().ok()?)));
                match parsed {
                    Some((k, v)) => {
                        cfg.tolerance_overrides.insert(k.to_string(), v);
                    }
                    None => return config_error(format!("bad --tol '{t}'")),
                }
            }
            match cfg.validate() {
                Ok(warnings) => warnings.iter().for_each(|w| eprintln!("warning: {w}")),
                Err(e) => return config_error(e),
            }
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let reports = match run_many(&names, &cfg) {
                Ok(r) => r,
                Err(e @ (Error::UnknownSuite(_) | Error::ConfigError(_))) => return config_error(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            for r in &reports {
                print!("{}", format_report(r));
            }
            let passed = reports.iter().filter(|r| r.passed).count();
            println!("{passed}/{} suites passed", reports.len());
            if let Some(path) = json {
                if let Err(e) = std::fs::write(&path, reports_json(&cfg, &reports, timings)) {
                    return config_error(format!("{}: {e}", path.display()));
                }
            }
            if let Some(dir) = csv_dir {
                match dump_traces(&cfg, &dir) {
                    Ok(files) => files.iter().for_each(|f| eprintln!("wrote {f}")),
                    Err(e) => return config_error(e),
                }
            }
            if passed == reports.len() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
