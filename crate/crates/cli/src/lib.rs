//! Command-line front end: named verifications emitting JSON reports and CSV series.

pub mod commands;
pub mod config;
pub mod report;

use clap::{Args, Parser, Subcommand};
use config::{Config, CONFIG_ENV};
use g2hitchin::Error;
use report::Report;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "g2hitchin", version, about = "Verify variational properties of G2 and split-G2 volume functionals")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Write the JSON report to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the tabular series (or the report values) as CSV to this path.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Configuration file; overrides the environment variable and ./g2hitchin.toml.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Quadrature method: moment-reduction, radial-1d, monte-carlo or trapezoid.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Nodes of the radial rules.
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Do not print the report to standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Type components of a form literal such as "dx[1,2,3] - 1/2 dx[4,5,6]".
    Decompose {
        form: String,
        /// compact (φ0) or split (φ̃0).
        #[arg(long, default_value = "compact")]
        structure: String,
    },
    /// Second variation along one perturbation family, with a finite-difference cross-check.
    Hessian {
        #[arg(long, allow_hyphen_values = true)]
        family: String,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Second-variation signs and finite-amplitude search for a lemma's families.
    VerifyLemma {
        /// p0, sg3, sg4 or ch.
        lemma: String,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Geometric growth or decay of H⁴ over a ball packing.
    Unbounded {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_sign, default_value = "+")]
        sign: i32,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        packing: Option<String>,
    },
    /// Gram matrix of the second variation on k disjoint bumps.
    Saddle {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_sign, default_value = "+")]
        sign: i32,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Explicit Euler Laplacian coflow from a perturbation of ψ0 on a periodic line.
    Coflow {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        cfl_factor: Option<f64>,
        #[arg(long)]
        mode_cutoff: Option<usize>,
    },
    /// Flat-ball volume bound Vol(B_η) against (η/7)·Area(S⁶_η).
    HkBound {
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Glue a closed perturbation of ψ0 to ψ0 near the origin.
    Glue {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long)]
        eta_floor: Option<f64>,
    },
}

fn parse_sign(s: &str) -> Result<i32, String> {
    match s {
        "+" | "plus" | "pos" | "1" | "+1" => Ok(1),
        "-" | "minus" | "neg" | "-1" => Ok(-1),
        _ => Err(format!("sign must be + or -, got '{s}'")),
    }
}

/// Errors caused by the user's input rather than by a failed verification.
fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::Invalid(_) | Error::Parse(_) | Error::Grade(_) | Error::InvalidLabel { .. })
}

fn load_config(flag: Option<&Path>) -> g2hitchin::Result<Config> {
    let env = std::env::var(CONFIG_ENV).ok();
    match Config::resolve_path(flag, env.as_deref()) {
        Some(p) => Config::load(&p),
        None => Ok(Config::default()),
    }
}

fn apply_overrides(cfg: &mut Config, cli: &Cli) {
    let g = &cli.global;
    if let Some(m) = &g.method {
        cfg.quadrature.method = m.clone();
    }
    if let Some(s) = g.seed {
        cfg.quadrature.seed = s;
    }
    if let Some(s) = g.samples {
        cfg.quadrature.samples = s;
    }
    if let Some(n) = g.nodes {
        cfg.quadrature.nodes = n;
    }
    match &cli.command {
        Command::Hessian { eta, .. } | Command::VerifyLemma { eta, .. } => {
            if let Some(e) = eta {
                cfg.bump.eta = *e;
            }
        }
        Command::Unbounded { rounds, nu, packing, .. } => {
            let u = &mut cfg.unbounded;
            u.rounds = rounds.unwrap_or(u.rounds);
            u.nu = nu.unwrap_or(u.nu);
            if let Some(p) = packing {
                u.packing = p.clone();
            }
        }
        Command::Saddle { k, eta, .. } => {
            cfg.saddle.k = k.unwrap_or(cfg.saddle.k);
            cfg.saddle.eta = eta.unwrap_or(cfg.saddle.eta);
        }
        Command::Coflow { grid, s, dt, steps, cfl_factor, mode_cutoff } => {
            let c = &mut cfg.coflow;
            c.grid = grid.unwrap_or(c.grid);
            c.s = s.unwrap_or(c.s);
            c.dt = dt.or(c.dt);
            c.steps = steps.unwrap_or(c.steps);
            c.cfl_factor = cfl_factor.unwrap_or(c.cfl_factor);
            c.mode_cutoff = mode_cutoff.unwrap_or(c.mode_cutoff);
        }
        Command::Glue { delta, s, eta_floor } => {
            let g = &mut cfg.glue;
            g.delta = delta.unwrap_or(g.delta);
            g.s = s.unwrap_or(g.s);
            g.eta_floor = eta_floor.unwrap_or(g.eta_floor);
        }
        Command::Decompose { .. } | Command::HkBound { .. } => {}
    }
}

fn dispatch(cli: &Cli, cfg: &Config) -> g2hitchin::Result<commands::Outcome> {
    match &cli.command {
        Command::Decompose { form, structure } => commands::decompose(form, structure, cfg),
        Command::Hessian { family, .. } => commands::hessian(family, cfg.bump.eta, &cfg.quadrature.spec()?, cfg),
        Command::VerifyLemma { lemma, .. } => commands::verify_lemma(lemma, cfg.bump.eta, &cfg.quadrature.spec()?, cfg),
        Command::Unbounded { sign, .. } => commands::unbounded(*sign, cfg.unbounded.rounds, cfg.unbounded.nu, &cfg.unbounded.packing, cfg),
        Command::Saddle { sign, .. } => commands::saddle(cfg.saddle.k, *sign, cfg.saddle.eta, &cfg.quadrature.spec()?, cfg),
        Command::Coflow { .. } => commands::coflow(cfg),
        Command::HkBound { eta } => commands::hk_bound(*eta, cfg),
        Command::Glue { .. } => commands::glue(cfg),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Decompose { .. } => "decompose",
        Command::Hessian { .. } => "hessian",
        Command::VerifyLemma { .. } => "verify-lemma",
        Command::Unbounded { .. } => "unbounded",
        Command::Saddle { .. } => "saddle",
        Command::Coflow { .. } => "coflow",
        Command::HkBound { .. } => "hk-bound",
        Command::Glue { .. } => "glue",
    }
}

fn write_csv(path: &Path, table: &commands::Table) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.0)?;
    for row in &table.1 {
        w.write_record(row)?;
    }
    w.flush()
}

fn values_table(report: &Report) -> commands::Table {
    let header = ["name", "value", "error"].map(String::from).to_vec();
    let rows = report.values.iter().map(|v| vec![v.name.clone(), v.value.to_string(), v.error.to_string()]).collect();
    (header, rows)
}

/// Parse `argv`, run the subcommand and write its outputs. Returns the exit code and the report,
/// if one was produced.
pub fn run<I, T>(argv: I) -> (i32, Option<Report>)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            return (code, None);
        }
    };
    let start = Instant::now();
    let mut cfg = match load_config(cli.global.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return (EXIT_USAGE, None);
        }
    };
    apply_overrides(&mut cfg, &cli);
    let (mut report, table, usage) = match dispatch(&cli, &cfg) {
        Ok(o) => (o.report, o.table, false),
        Err(e) => {
            let mut r = Report::new(command_name(&cli.command), serde_json::json!({}));
            r.error = Some(e.to_string());
            eprintln!("error: {e}");
            (r, None, is_usage_error(&e))
        }
    };
    report.finish(start.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    if !cli.global.quiet {
        println!("{text}");
    }
    if let Some(path) = &cli.global.out {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return (EXIT_FAIL, Some(report));
        }
    }
    if let Some(path) = &cli.global.csv {
        let table = table.unwrap_or_else(|| values_table(&report));
        if let Err(e) = write_csv(path, &table) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return (EXIT_FAIL, Some(report));
        }
    }
    let code = if usage {
        EXIT_USAGE
    } else if report.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    (code, Some(report))
}
