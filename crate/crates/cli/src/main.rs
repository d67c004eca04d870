mod config;
mod output;
mod problem;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{info, warn};
use nearspace::linop::DEFAULT_DENSE_CAP;
use nearspace::perturb::{spectrum_dense, PerturbedOperator};
use nearspace::pipeline::{validate_decoding, validate_encoding};
use nearspace::Error;
use serde_json::json;

use config::RunConfig;
use problem::Built;

/// Eigenpairs of a self-adjoint operator near a subspace.
#[derive(Parser)]
#[command(name = "nearspace", version)]
struct Cli {
    /// Output directory (overrides the config's `output.directory`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Solver seed (overrides `solver.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; the solver is sequential, so only 1 is used.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the search; writes report.json, eigenvalues.csv and field grids.
    Run { config: PathBuf },
    /// Check the perturbation bounds against a dense oracle.
    Validate { config: PathBuf },
    /// Eigenvalues of L(s) in and near the search region.
    Spectrum { config: PathBuf },
}

const OK: u8 = 0;
const FAILED: u8 = 1;
const NOTHING_ACCEPTED: u8 = 2;
const NOT_CONVERGED: u8 = 3;

struct Session {
    config: RunConfig,
    built: Built,
    out: PathBuf,
}

impl Session {
    fn open(cli: &Cli, path: &Path) -> anyhow::Result<Self> {
        let mut config = RunConfig::load(path)?;
        if let Some(seed) = cli.seed {
            config.solver.seed = seed;
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        let built = problem::build(&config.problem, dir)?;
        let out = cli
            .output_dir
            .clone()
            .or(config.output.directory.clone())
            .unwrap_or_else(|| PathBuf::from("nearspace-out"));
        std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
        Ok(Self { config, built, out })
    }
}

fn cmd_run(cli: &Cli, path: &Path) -> anyhow::Result<u8> {
    let s = Session::open(cli, path)?;
    let spec = s.config.search.resolve(s.built.default_spec)?;
    let report = s.built.solve(&spec, &s.config.solver)?;
    let status = if !report.diagnostics.converged {
        "no_convergence"
    } else if report.accepted.is_empty() {
        "no_pairs"
    } else {
        "ok"
    };
    let mut doc = json!({
        "schema": output::SCHEMA,
        "command": "run",
        "status": status,
        "problem": s.config.problem,
        "report": report,
    });
    if let Some(g) = &s.built.grid {
        doc["tau2_convention"] = serde_json::to_value(g.convention)?;
    }
    output::write(&s.out, "report.json", &output::canonical_json(&doc)?)?;
    output::write(&s.out, "eigenvalues.csv", &output::eigenvalues_csv(&report))?;
    if let (true, Some(g)) = (s.config.output.fields, &s.built.grid) {
        output::write_fields(&s.out, &report, g)?;
    }
    info!(
        "{} candidates, {} accepted {:?}; wrote {}",
        report.candidates.len(),
        report.accepted.len(),
        report.accepted_indices(),
        s.out.display()
    );
    Ok(match status {
        "no_convergence" => {
            warn!("solver did not converge (max residual {:e})", report.diagnostics.max_residual);
            NOT_CONVERGED
        }
        "no_pairs" => {
            info!("{}", report.message.as_deref().unwrap_or("no pair passed the filter"));
            NOTHING_ACCEPTED
        }
        _ => OK,
    })
}

fn dense_hint(e: Error) -> anyhow::Error {
    match e {
        Error::CapExceeded { dim, cap } => {
            anyhow::anyhow!("dimension {dim} exceeds the dense limit {cap}; validate a smaller instance")
        }
        other => other.into(),
    }
}

fn cmd_validate(cli: &Cli, path: &Path) -> anyhow::Result<u8> {
    let s = Session::open(cli, path)?;
    let spec = s.config.search.resolve(s.built.default_spec)?;
    let s_values = s.config.validate.s_values.clone().unwrap_or_else(|| vec![spec.region.s]);
    let l = s.built.operator.as_ref();
    let encoding = validate_encoding(l, &s.built.projector, &s_values).map_err(dense_hint)?;
    let decoding = validate_decoding(l, &s.built.projector, spec.region.s).map_err(dense_hint)?;
    let all_hold = encoding.all_hold() && decoding.all_hold();
    let doc = json!({
        "schema": output::SCHEMA,
        "command": "validate",
        "problem": s.config.problem,
        "all_hold": all_hold,
        "encoding": encoding,
        "decoding": decoding,
    });
    output::write(&s.out, "validation.json", &output::canonical_json(&doc)?)?;
    info!(
        "encoding worst margin {:e}, decoding worst margin {:e}",
        encoding.worst_margin(),
        decoding.worst_margin()
    );
    Ok(if all_hold { OK } else { NOTHING_ACCEPTED })
}

fn cmd_spectrum(cli: &Cli, path: &Path) -> anyhow::Result<u8> {
    let s = Session::open(cli, path)?;
    let mut spec = s.config.search.resolve(s.built.default_spec)?;
    // report the whole strip, not only the acceptance disk
    spec.search_delta = Some(spec.search_delta.unwrap_or(1.0).max(1.0));
    let report = s.built.solve(&spec, &s.config.solver)?;
    let sv = spec.region.s;
    let mut csv = String::from("source,re,im,tau2\n");
    for c in &report.candidates {
        let _ = writeln!(csv, "candidate,{},{},{}", c.mu.re, c.mu.im, c.tau2);
    }
    let n = s.built.operator.dim();
    if n <= DEFAULT_DENSE_CAP {
        let p = PerturbedOperator::new(s.built.operator.clone(), s.built.projector.clone(), sv)?;
        let mut values = spectrum_dense(&p)?.values;
        values.sort_by(|a, b| a.re.total_cmp(&b.re));
        for mu in values {
            let _ = writeln!(csv, "dense,{},{},{}", mu.re, mu.im, mu.im / sv);
        }
    } else {
        info!("dimension {n} above {DEFAULT_DENSE_CAP}: dense spectrum skipped");
    }
    output::write(&s.out, "spectrum.csv", &csv)?;
    Ok(if report.diagnostics.converged { OK } else { NOT_CONVERGED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if cli.threads != 1 {
        warn!("--threads {}: the solver is sequential and runs on one thread", cli.threads);
    }
    let result = match &cli.command {
        Command::Run { config } => cmd_run(&cli, config),
        Command::Validate { config } => cmd_validate(&cli, config),
        Command::Spectrum { config } => cmd_spectrum(&cli, config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(FAILED)
        }
    }
}
