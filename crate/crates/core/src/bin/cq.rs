use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contactq::harness::{self, Format, SuiteConfig};
use contactq::CqError;

#[derive(Parser)]
#[command(name = "cq", version, about = "Verify quantum connections on contact manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verification suite.
    Verify {
        suite: String,
        /// TOML config; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated ħ values, fractions allowed.
        #[arg(long)]
        hbar: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        /// Grid points and half-width, `N,L`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance override, `name=value`; repeatable.
        #[arg(long)]
        tol: Vec<String>,
        /// Run only this check; repeatable.
        #[arg(long)]
        only: Vec<String>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// List the registered suites.
    List,
}

fn config_from(cmd: Command) -> Result<Option<SuiteConfig>, CqError> {
    let Command::Verify { suite, config, hbar, dim, grid, samples, seed, tol, only, report, format } = cmd else {
        return Ok(None);
    };
    let mut cfg = match config {
        Some(p) => SuiteConfig::load(&p)?,
        None => SuiteConfig::default(),
    };
    cfg.suite = suite;
    if let Some(h) = hbar {
        cfg.hbar = Some(harness::parse_hbars(&h)?);
    }
    if dim.is_some() {
        cfg.dim = dim;
    }
    if let Some(g) = grid {
        cfg.grid = Some(harness::parse_grid(&g)?);
    }
    if samples.is_some() {
        cfg.samples = samples;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for t in tol {
        let (k, v) = harness::parse_tol(&t)?;
        cfg.tol.insert(k, v);
    }
    if !only.is_empty() {
        cfg.only = only;
    }
    if report.is_some() {
        cfg.report = report;
    }
    if let Some(f) = format {
        cfg.format = f.parse::<Format>()?;
    }
    Ok(Some(cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::List = cli.command {
        for (name, about) in harness::SUITES {
            println!("{name:<16}{about}");
        }
        return ExitCode::SUCCESS;
    }
    let cfg = match config_from(cli.command) {
        Ok(Some(c)) => c,
        Ok(None) => return ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cq: {e}");
            return ExitCode::from(2);
        }
    };
    let pool = match harness::thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cq: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match pool.install(|| harness::run_suite(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cq: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = harness::emit_report(&report, cfg.format, cfg.report.as_deref()) {
        eprintln!("cq: {e}");
        return ExitCode::from(2);
    }
    if cfg.report.is_some() {
        for c in &report.checks {
            let verdict = if c.pass { "ok" } else { "FAIL" };
            eprintln!("{verdict:<5}{:<40}{:.3e} (tol {:.1e})", c.name, c.residual, c.tolerance);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
