//! `sohkit`: command-line front end for the sohkit numerical kernels.
//!
//! Exit codes: 0 success, 1 output failure, 2 configuration error, 3
//! numerical failure. Errors print one `error kind=... message=...` line on
//! stderr, and no output file is written unless the whole run succeeds.

mod commands;
mod config;
mod emit;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sohkit::particles::Model;

use config::{
    override_law, parse_kinetic_initial, parse_particle_initial, CoefficientParams, CoefficientTable, FileConfig,
    GciModel, GciParams, KineticParams, PhaseParams, RangeSpec, VicsekParams,
};
use emit::{config_hash, Manifest, SCHEMA};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sohkit",
    version,
    about = "Alignment dynamics: particles, kinetic flow, collision invariants, phase diagrams"
)]
struct Cli {
    /// TOML file with a section per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: sohkit-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: SOHKIT_THREADS, else all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vicsek particle simulation; writes series.csv.
    SimulateVicsek(SimArgs),
    /// Body-attitude particle simulation in d = 3; writes series.csv.
    SimulateBody(SimArgs),
    /// Homogeneous kinetic equation; writes diagnostics.csv and final_state.csv.
    SolveKinetic(KineticArgs),
    /// Collision-invariant profiles and coefficients; writes grid.csv and coefficients.csv.
    ComputeGci(GciArgs),
    /// Consistency roots over a density sweep; writes phase.csv and report.json.
    PhaseDiagram(PhaseArgs),
    /// Coefficient tables over a concentration sweep; writes coefficients.csv.
    Coefficients(CoefArgs),
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Box side L.
    #[arg(long = "box")]
    l: Option<f64>,
    /// Interaction radius R; R >= L sqrt(d) / 2 means all-to-all.
    #[arg(long = "radius")]
    r: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Record every STRIDE steps.
    #[arg(long)]
    stride: Option<u64>,
    /// uniform | aligned | vmf:KAPPA
    #[arg(long)]
    initial: Option<String>,
    /// Also write final_state.bin.
    #[arg(long)]
    snapshot: bool,
}

#[derive(Debug, Args)]
struct LawArgs {
    /// linear | tuned | cubic | exponential | quadratic | constant
    #[arg(long)]
    law: Option<String>,
    /// Law parameter KEY=VALUE (repeatable), e.g. nu0=2.
    #[arg(long = "law-param")]
    law_param: Vec<String>,
}

#[derive(Debug, Args)]
struct KineticArgs {
    #[command(flatten)]
    law: LawArgs,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// perturbed:MODE:AMP | vmf:KAPPA[:ANGLE] | nodes:FILE
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt0: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
}

#[derive(Debug, Args)]
struct GciArgs {
    #[arg(long, value_enum)]
    model: Option<GciModel>,
    #[arg(long)]
    d: Option<usize>,
    /// KAPPA or a:b:step
    #[arg(long)]
    kappa: Option<String>,
    /// Elements of the base grid.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[command(flatten)]
    law: LawArgs,
    #[arg(long)]
    d: Option<usize>,
    /// RHO or a:b:step
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    kappa_max: Option<f64>,
}

#[derive(Debug, Args)]
struct CoefArgs {
    #[arg(long, value_enum)]
    table: Option<CoefficientTable>,
    #[arg(long)]
    d: Option<usize>,
    /// KAPPA or a:b:step
    #[arg(long)]
    kappa: Option<String>,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

/// A fully resolved run.
#[derive(Debug, Serialize)]
#[serde(tag = "subcommand", content = "params", rename_all = "kebab-case")]
enum Resolved {
    SimulateVicsek(VicsekParams),
    SimulateBody(VicsekParams),
    SolveKinetic(KineticParams),
    ComputeGci(GciParams),
    PhaseDiagram(PhaseParams),
    Coefficients(CoefficientParams),
}

fn resolve_sim(base: Option<VicsekParams>, a: SimArgs, body: bool) -> Result<VicsekParams, CliError> {
    let mut p = base.unwrap_or_default();
    if body && a.d.is_none() {
        p.d = 3;
    }
    set!(p.n, a.n);
    set!(p.l, a.l);
    set!(p.r, a.r);
    set!(p.nu, a.nu);
    set!(p.tau, a.tau);
    set!(p.dt, a.dt);
    set!(p.d, a.d);
    set!(p.t_end, a.t_end);
    set!(p.stride, a.stride);
    if let Some(s) = a.initial {
        p.initial = parse_particle_initial(&s)?;
    }
    p.snapshot |= a.snapshot;
    Ok(p)
}

fn resolve(cmd: Command, file: FileConfig) -> Result<Resolved, CliError> {
    Ok(match cmd {
        Command::SimulateVicsek(a) => Resolved::SimulateVicsek(resolve_sim(file.simulate_vicsek, a, false)?),
        Command::SimulateBody(a) => Resolved::SimulateBody(resolve_sim(file.simulate_body, a, true)?),
        Command::SolveKinetic(a) => {
            let mut p = file.solve_kinetic.unwrap_or_default();
            p.law = override_law(&p.law, a.law.law.as_deref(), &a.law.law_param)?;
            set!(p.d, a.d);
            set!(p.modes, a.modes);
            set!(p.rho, a.rho);
            set!(p.t_end, a.t_end);
            set!(p.dt0, a.dt0);
            set!(p.dt_max, a.dt_max);
            set!(p.record_every, a.record_every);
            if let Some(s) = a.initial {
                p.initial = parse_kinetic_initial(&s)?;
            }
            Resolved::SolveKinetic(p)
        }
        Command::ComputeGci(a) => {
            let mut p = file.compute_gci.unwrap_or_default();
            set!(p.model, a.model);
            set!(p.d, a.d);
            set!(p.n, a.n);
            set!(p.kappa, a.kappa.map(RangeSpec::Text));
            p.kappa.values()?;
            Resolved::ComputeGci(p)
        }
        Command::PhaseDiagram(a) => {
            let mut p = file.phase_diagram.unwrap_or_default();
            p.law = override_law(&p.law, a.law.law.as_deref(), &a.law.law_param)?;
            set!(p.d, a.d);
            set!(p.kappa_max, a.kappa_max);
            set!(p.rho, a.rho.map(RangeSpec::Text));
            p.rho.values()?;
            Resolved::PhaseDiagram(p)
        }
        Command::Coefficients(a) => {
            let mut p = file.coefficients.unwrap_or_default();
            set!(p.table, a.table);
            set!(p.d, a.d);
            set!(p.kappa, a.kappa.map(RangeSpec::Text));
            p.kappa.values()?;
            Resolved::Coefficients(p)
        }
    })
}

fn thread_budget(flag: Option<usize>, file: Option<usize>) -> Result<usize, CliError> {
    let env = match std::env::var("SOHKIT_THREADS") {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("SOHKIT_THREADS must be a positive integer, got '{s}'")))?,
        ),
        Err(_) => None,
    };
    let n = flag.or(file).or(env).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(CliError::config("thread budget must be >= 1"));
    }
    Ok(n)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = thread_budget(cli.threads, file.threads)?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out_dir = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("sohkit-out"));
    let resolved = resolve(cli.command, file)?;
    let mut record = serde_json::to_value(&resolved).expect("configs serialize");
    record["seed"] = serde_json::json!(seed);
    let subcommand = record["subcommand"].as_str().unwrap_or_default().to_string();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {threads} threads: {e}")))?;
    let (mut outputs, warnings) = pool.install(|| match &resolved {
        Resolved::SimulateVicsek(p) => commands::simulate(Model::Vicsek, p, seed),
        Resolved::SimulateBody(p) => commands::simulate(Model::Body, p, seed),
        Resolved::SolveKinetic(p) => commands::solve_kinetic(p),
        Resolved::ComputeGci(p) => commands::compute_gci(p),
        Resolved::PhaseDiagram(p) => commands::phase(p),
        Resolved::Coefficients(p) => commands::coefficients(p),
    })?;

    let manifest = Manifest {
        schema: SCHEMA,
        kind: "manifest",
        tool: "sohkit",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: &subcommand,
        config_hash: config_hash(&record),
        config: &record,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: &warnings,
        files: outputs.names(),
    };
    outputs.json("manifest.json", &manifest);
    outputs.write_all(&out_dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::config(first.trim_start_matches("error:").trim());
            eprintln!("{}", err.diagnostic());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
