mod output;

use clap::{Args, Parser, Subcommand};
use kikuchi::check::check_model;
use kikuchi::diffusion::{
    conservation_check, run, spectrum, twisted_laplacian, DivergenceMode, Equilibrium, FluxKind, RunConfig, RunStatus,
    Trace,
};
use kikuchi::energy::bethe_free_energy;
use kikuchi::model::Model;
use kikuchi::oracle::{exact_marginals, globalize};
use kikuchi::transforms::zeta0;
use kikuchi::{Belief, Complex, Error};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kikuchi", version, about = "Region-based inference on hypergraph models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the diffusion to an equilibrium and report its beliefs.
    Infer {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Write the iteration log as JSON lines.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Exact marginals, free energy and entropy by enumeration.
    Exact { model: PathBuf },
    /// Run the invariant suite on the model; exits 1 on any failure.
    Check {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare converged beliefs against the exact marginals.
    Compare {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Converge, then print the eigenvalues of the twisted Laplacian.
    Spectrum {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "standard", value_parser = ["standard", "normalized", "canonical"])]
    flux: String,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Use the full boundary operator instead of dropping the empty region.
    #[arg(long)]
    full: bool,
    /// Hold the boundary members at the model's clamp tables.
    #[arg(long, conflicts_with = "full")]
    clamp: bool,
    /// Skip the per-step normalization of local free energies.
    #[arg(long)]
    no_normalize: bool,
}

enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Diverged(usize, f64),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::ChecksFailed => 1,
            Failure::Io(..) => 2,
            Failure::Diverged(..) => 4,
            Failure::Core(e) => match e {
                Error::Model { .. } | Error::InvalidInput(_) => 2,
                Error::Precondition(_)
                | Error::NotClosed
                | Error::NotAdapted { .. }
                | Error::ClosureUndefined(_)
                | Error::DecompositionUnavailable(_) => 3,
                Error::Divergence { .. } => 4,
                Error::SizeGuard { .. } => 5,
                _ => 1,
            },
        }
    }
}

type Outcome = Result<String, Failure>;

#[derive(Serialize)]
struct Marginal<'a> {
    region: &'a [usize],
    values: &'a [f64],
}

fn marginals<'a>(cx: &'a Complex, q: &'a [Belief]) -> Vec<Marginal<'a>> {
    q.iter().enumerate().map(|(a, p)| Marginal { region: cx.region(a).vars(), values: p.values() }).collect()
}

#[derive(Serialize)]
struct Drifts {
    global_sum: Option<f64>,
    log_belief: Option<f64>,
}

#[derive(Serialize)]
struct InferReport<'a> {
    flux: FluxKind,
    step: f64,
    tol: f64,
    mode: &'a DivergenceMode,
    status: RunStatus,
    iterations: usize,
    diameter: usize,
    residual: f64,
    consistency: f64,
    drifts: Drifts,
    residuals: Vec<f64>,
    marginals: Vec<Marginal<'a>>,
}

#[derive(Serialize)]
struct ExactReport<'a> {
    free_energy: f64,
    entropy: f64,
    marginals: Vec<Marginal<'a>>,
}

#[derive(Serialize)]
struct RegionDistance<'a> {
    region: &'a [usize],
    tv: f64,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    status: RunStatus,
    iterations: usize,
    max_tv: f64,
    tv: Vec<RegionDistance<'a>>,
    bethe_free_energy: f64,
    exact_free_energy: f64,
    free_energy_gap: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    status: RunStatus,
    iterations: usize,
    dimension: usize,
    /// `[re, im]` pairs.
    eigenvalues: Vec<[f64; 2]>,
    max_residual: f64,
}

fn load(path: &Path) -> Result<Model, Failure> {
    if let Err(e) = std::fs::metadata(path) {
        return Err(Failure::Io(path.to_owned(), e));
    }
    Ok(Model::load(path)?)
}

fn converge(m: &Model, args: &RunArgs) -> Result<(Equilibrium, Trace, RunConfig, FluxKind), Failure> {
    let kind: FluxKind = args.flux.parse()?;
    let (u0, mode) = if args.clamp {
        m.clamped()?
    } else if args.full {
        (m.potentials.clone(), DivergenceMode::Full)
    } else {
        (m.potentials.clone(), DivergenceMode::Truncated)
    };
    let config = RunConfig {
        step: args.step,
        tol: args.tol,
        max_iters: args.max_iters,
        mode,
        normalize_each_step: !args.no_normalize,
        record_trace: true,
    };
    let (eq, trace) = run(&m.complex, &u0, kind, &config)?;
    if eq.status == RunStatus::Diverged {
        return Err(Failure::Diverged(eq.iterations, eq.residual));
    }
    Ok((eq, trace, config, kind))
}

fn infer(path: &Path, args: &RunArgs, trace_path: Option<&Path>) -> Outcome {
    let m = load(path)?;
    let (eq, trace, config, kind) = converge(&m, args)?;
    if let Some(out) = trace_path {
        let mut text = String::new();
        for e in &trace.entries {
            text.push_str(&output::to_line(e).expect("trace entries serialize"));
            text.push('\n');
        }
        std::fs::write(out, text).map_err(|e| Failure::Io(out.to_owned(), e))?;
    }
    let has_sum = trace.entries.iter().any(|e| e.global_sum_drift.is_some());
    let c = conservation_check(&trace);
    let cx = &m.complex;
    let report = InferReport {
        flux: kind,
        step: config.step,
        tol: config.tol,
        mode: &config.mode,
        status: eq.status,
        iterations: eq.iterations,
        diameter: cx.hypergraph().diameter().value,
        residual: eq.residual,
        consistency: eq.consistency,
        drifts: Drifts {
            // normalization and δ′ move the global sum by design
            global_sum: (has_sum && config.mode == DivergenceMode::Full && !config.normalize_each_step)
                .then_some(c.global_sum_drift),
            log_belief: has_sum.then_some(c.log_belief_drift),
        },
        residuals: trace.entries.iter().map(|e| e.residual).collect(),
        marginals: marginals(cx, &eq.q),
    };
    Ok(output::to_pretty(&report).expect("report serializes"))
}

fn exact(path: &Path) -> Outcome {
    let m = load(path)?;
    let g = globalize(&m.complex, &m.potentials)?;
    let p = exact_marginals(&g, &m.complex)?;
    let report =
        ExactReport { free_energy: g.free_energy(), entropy: g.entropy(), marginals: marginals(&m.complex, &p) };
    Ok(output::to_pretty(&report).expect("report serializes"))
}

fn check(path: &Path, seed: u64) -> Outcome {
    let m = load(path)?;
    let report = check_model(&m.complex, &m.potentials, seed);
    let text = output::to_pretty(&report).expect("report serializes");
    if report.passed() {
        Ok(text)
    } else {
        print!("{text}");
        Err(Failure::ChecksFailed)
    }
}

fn total_variation(p: &Belief, q: &Belief) -> f64 {
    0.5 * p.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn compare(path: &Path, args: &RunArgs) -> Outcome {
    let m = load(path)?;
    if args.clamp {
        return Err(Error::Precondition("compare runs on the unclamped model".into()).into());
    }
    let cx = &m.complex;
    let g = globalize(cx, &m.potentials)?;
    let p = exact_marginals(&g, cx)?;
    let (eq, ..) = converge(&m, args)?;
    let tv: Vec<RegionDistance> = (0..cx.len())
        .map(|a| RegionDistance { region: cx.region(a).vars(), tv: total_variation(&eq.q[a], &p[a]) })
        .collect();
    let bethe = bethe_free_energy(cx, &eq.q, &zeta0(cx, &m.potentials)?)?;
    let report = CompareReport {
        status: eq.status,
        iterations: eq.iterations,
        max_tv: tv.iter().map(|d| d.tv).fold(0.0, f64::max),
        tv,
        bethe_free_energy: bethe,
        exact_free_energy: g.free_energy(),
        free_energy_gap: bethe - g.free_energy(),
    };
    Ok(output::to_pretty(&report).expect("report serializes"))
}

fn spectrum_of(path: &Path, args: &RunArgs) -> Outcome {
    let m = load(path)?;
    let (eq, ..) = converge(&m, args)?;
    let l = twisted_laplacian(&m.complex, &eq.u)?;
    let s = spectrum(&l)?;
    let report = SpectrumReport {
        status: eq.status,
        iterations: eq.iterations,
        dimension: l.nrows(),
        eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        max_residual: s.residuals.iter().copied().fold(0.0, f64::max),
    };
    Ok(output::to_pretty(&report).expect("report serializes"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Infer { model, run, trace } => infer(model, run, trace.as_deref()),
        Command::Exact { model } => exact(model),
        Command::Check { model, seed } => check(model, *seed),
        Command::Compare { model, run } => compare(model, run),
        Command::Spectrum { model, run } => spectrum_of(model, run),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(p, e) => eprintln!("error: {}: {e}", p.display()),
                Failure::Diverged(i, r) => eprintln!("error: diverged after {i} steps, residual {r}"),
                Failure::ChecksFailed => eprintln!("error: some checks failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
