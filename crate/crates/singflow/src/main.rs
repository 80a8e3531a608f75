use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use singflow::run::{execute, output_dir, write_outputs, RunError};
use singflow::scenario::{
    parse_list, parse_pair, parse_params, parse_tag, BarrierSpec, Experiment, Scenario, ScenarioError,
};

#[derive(Parser)]
#[command(name = "singflow", version, about = "Numerical lab for u_t = f(g(u_x) u_xx) with infinite boundary values")]
struct Cli {
    /// Worker threads for parallel loops.
    #[arg(long, env = "SINGFLOW_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Existence / uniqueness verdict for the preset and datum.
    Classify(Flags),
    /// Traveling-wave profile and speed.
    Wave(Flags),
    /// Certify a barrier family against its differential inequality.
    Barrier(Flags),
    /// Run the capped finite-difference solver.
    Solve(Flags),
    /// Probe value as the boundary cap grows.
    Capstudy(Flags),
    /// Run the invariant suite.
    Verify(Flags),
    /// Run a scenario file, dispatching on its `experiment`.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Inline flags override the matching scenario fields.
#[derive(clap::Args)]
struct Flags {
    /// JSON scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario name; also the default output subdirectory.
    #[arg(long)]
    name: Option<String>,
    /// `curvature`, `p_heat` or `power`.
    #[arg(long)]
    preset: Option<String>,
    /// Preset parameters, e.g. `beta2=1`.
    #[arg(long)]
    params: Option<String>,
    /// Half-width of the interval.
    #[arg(long)]
    b: Option<f64>,
    /// Initial datum, e.g. `polynomial:1,0,2` or `boundary_rate:1,2`.
    #[arg(long)]
    u0: Option<String>,
    /// Interior grid nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Boundary cap M.
    #[arg(long)]
    cap: Option<f64>,
    /// Comma-separated caps.
    #[arg(long)]
    caps: Option<String>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Probe point `x,t`.
    #[arg(long)]
    probe: Option<String>,
    /// Expected cap verdict: `saturating`, `diverging` or `inconclusive`.
    #[arg(long)]
    expect: Option<String>,
    /// Barrier family, e.g. `sub_vl`.
    #[arg(long)]
    family: Option<String>,
    /// Barrier parameters, e.g. `L0=2.5,nu=1000`.
    #[arg(long)]
    barrier_params: Option<String>,
    /// `sub`, `super`, `sub_strict:<delta>` or `super_strict:<delta>`.
    #[arg(long)]
    side: Option<String>,
    /// Stratified sample count for barrier checks.
    #[arg(long)]
    samples: Option<usize>,
    /// Wave grid size.
    #[arg(long)]
    n_grid: Option<usize>,
    /// Wave value at x = 0.
    #[arg(long)]
    w0: Option<f64>,
}

fn load(path: &PathBuf) -> Result<Scenario, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?;
    Ok(Scenario::from_json(&text)?)
}

fn assemble(experiment: Experiment, f: &Flags) -> Result<Scenario, RunError> {
    let mut sc = match &f.scenario {
        Some(p) => load(p)?,
        None => Scenario::new(f.name.clone().unwrap_or_else(|| "inline".into()), experiment),
    };
    if sc.experiment != experiment {
        return Err(ScenarioError::Invalid(format!(
            "scenario experiment {:?} does not match the subcommand {experiment:?}",
            sc.experiment
        ))
        .into());
    }
    if let Some(v) = &f.name {
        sc.name = v.clone();
    }
    if let Some(v) = &f.preset {
        sc.preset = Some(parse_tag(v)?);
    }
    if let Some(v) = &f.params {
        sc.params = parse_params(v)?;
    }
    if let Some(v) = f.b {
        sc.b = v;
    }
    if let Some(v) = &f.u0 {
        sc.u0 = Some(v.clone());
    }
    sc.n = f.n.or(sc.n);
    sc.cap = f.cap.or(sc.cap);
    sc.t_end = f.t_end.or(sc.t_end);
    sc.samples = f.samples.or(sc.samples);
    sc.n_grid = f.n_grid.or(sc.n_grid);
    sc.w0 = f.w0.or(sc.w0);
    if let Some(v) = &f.caps {
        sc.caps = Some(parse_list(v)?);
    }
    if let Some(v) = &f.probe {
        sc.probe = Some(parse_pair(v)?);
    }
    if let Some(v) = &f.expect {
        sc.expect = Some(parse_tag(v)?);
    }
    if f.family.is_some() || f.barrier_params.is_some() || f.side.is_some() {
        let mut bs = match (sc.barrier.take(), &f.family) {
            (_, Some(fam)) => BarrierSpec { family: parse_tag(fam)?, params: Default::default(), side: None },
            (Some(bs), None) => bs,
            (None, None) => return Err(ScenarioError::Missing("barrier family").into()),
        };
        if let Some(p) = &f.barrier_params {
            bs.params = parse_params(p)?;
        }
        if let Some(s) = &f.side {
            bs.side = Some(s.clone());
        }
        sc.barrier = Some(bs);
    }
    sc.validate()?;
    Ok(sc)
}

fn dispatch(cli: &Cli) -> Result<bool, RunError> {
    let (sc, out) = match &cli.command {
        Command::Run { scenario, out } => (load(scenario)?, out.clone()),
        Command::Classify(f) => (assemble(Experiment::Classify, f)?, f.out.clone()),
        Command::Wave(f) => (assemble(Experiment::Wave, f)?, f.out.clone()),
        Command::Barrier(f) => (assemble(Experiment::Barrier, f)?, f.out.clone()),
        Command::Solve(f) => (assemble(Experiment::Solve, f)?, f.out.clone()),
        Command::Capstudy(f) => (assemble(Experiment::Capstudy, f)?, f.out.clone()),
        Command::Verify(f) => (assemble(Experiment::Verify, f)?, f.out.clone()),
    };
    let result = execute(&sc)?;
    let dir = output_dir(&sc, out.as_deref());
    write_outputs(&sc, &result, &dir)?;
    println!("{}: {} ({})", sc.name, if result.pass { "pass" } else { "FAIL" }, dir.display());
    Ok(result.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
