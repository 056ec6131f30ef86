//! su2sta command-line interface: pulse design, simulation, parameter sweeps,
//! and end-to-end regeneration of the benchmark tables and figure datasets.
//!
//! Exit codes: 0 success, 2 usage or parameter validation, 3 accuracy or
//! tolerance failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use su2sta::dynamics::{propagate_lindblad, propagate_state, TimeGrid, DEFAULT_STEPS};
use su2sta::experiments::{
    decoherence_sweep, reproduce, robustness_sweep, PerturbAxis, ReproduceOptions, Target,
    TwoLevelCase,
};
use su2sta::linalg::{DensityMatrix, StateVector};
use su2sta::nv::{
    self, collapse_channels, default_gaussian_pulses, designed_pulses, full_hamiltonian,
    gaussian_fit, nv_design, solve_b, DecayModel, NvConfig, PulsePair,
};
use su2sta::output::{write_file, write_json};
use su2sta::two_level::{design_case1, design_case2, Case1Schedule, Case2Schedule};
use su2sta::Error;

#[derive(Parser)]
#[command(
    name = "su2sta",
    version,
    about = "Inverse-engineered driving pulses for two- and three-level systems, with unitary and dissipative dynamics"
)]
struct Cli {
    /// JSON file with default parameter values; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output root (default: $SU2STA_OUTPUT_ROOT, falling back to ./runs).
    #[arg(long, global = true)]
    outdir: Option<PathBuf>,

    /// Cap the sweep worker pool at N threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inverse-engineer pulse tables and write them as CSV + JSON.
    Design {
        #[command(subcommand)]
        what: DesignCmd,
    },
    /// Propagate a model and write the population/fidelity trajectory.
    Simulate {
        #[command(subcommand)]
        what: SimulateCmd,
    },
    /// Regenerate a named benchmark dataset
    /// (table1|table2|fig1|fig2|fig4|fig5a|fig5b|fig6|fig7|fig8);
    /// exits 3 if any embedded tolerance checkpoint fails.
    Reproduce {
        target: String,
        /// RK4 steps per run.
        #[arg(long)]
        steps: Option<usize>,
        /// Heatmap resolution per axis (fig7/fig8).
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Parameter sweeps producing fidelity grids.
    Sweep {
        #[command(subcommand)]
        what: SweepCmd,
    },
}

#[derive(Subcommand)]
enum DesignCmd {
    /// Two-level designs (case I: beta = 0; case II: alpha = 0).
    TwoLevel(TwoLevelDesignArgs),
    /// Three-level transfer design for the NV-cavity model.
    Nv(NvDesignArgs),
}

#[derive(Args)]
struct TwoLevelDesignArgs {
    /// I or II.
    #[arg(long)]
    case: String,
    /// Amplitude parameter for case II, in (0, 30*pi).
    #[arg(long)]
    a1: Option<f64>,
    /// Rows in the pulse table.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct NvDesignArgs {
    /// Schedule amplitude A in (0, 32).
    #[arg(long)]
    a: Option<f64>,
    /// Either a number or "auto" (solve the transfer constraint).
    #[arg(long)]
    b: Option<String>,
    /// Rows in the pulse table.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Full six-level NV-cavity model from psi1.
    Nv(NvSimulateArgs),
    /// Designed two-level transfer from |1>.
    TwoLevel(TwoLevelSimulateArgs),
}

#[derive(Args)]
struct NvSimulateArgs {
    /// Coupling strength lambda in units of 1/T.
    #[arg(long = "lambda-t")]
    lambda_t: Option<f64>,
    /// kappa / lambda.
    #[arg(long)]
    kappa_ratio: Option<f64>,
    /// gamma / lambda.
    #[arg(long)]
    gamma_ratio: Option<f64>,
    /// Pulse provenance: gaussian (default) or designed.
    #[arg(long)]
    pulses: Option<String>,
    /// Decay channel set: calibrated (default) or full.
    #[arg(long)]
    decay: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct TwoLevelSimulateArgs {
    #[arg(long)]
    case: String,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Final fidelity versus (kappa/lambda, gamma/lambda).
    Decoherence(DecoherenceArgs),
    /// Final fidelity versus two imperfection axes (dT|dOmega|dLambda).
    Robustness(RobustnessArgs),
}

#[derive(Args)]
struct DecoherenceArgs {
    #[arg(long)]
    kappa_max: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "lambda-t")]
    lambda_t: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct RobustnessArgs {
    #[arg(long)]
    axis1: String,
    #[arg(long)]
    axis2: String,
    /// Half-width of the relative-offset range (max 0.2).
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "lambda-t")]
    lambda_t: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

/// Defaults loaded from the optional JSON config file. Precedence:
/// explicit flag > config file > built-in default.
struct Defaults(serde_json::Value);

impl Defaults {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self(serde_json::Value::Null)),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Ok(Self(serde_json::from_str(&text)?))
            }
        }
    }

    fn f64(&self, key: &str, flag: Option<f64>, fallback: f64) -> f64 {
        flag.or_else(|| self.0.get(key).and_then(|v| v.as_f64()))
            .unwrap_or(fallback)
    }

    fn usize(&self, key: &str, flag: Option<usize>, fallback: usize) -> usize {
        flag.or_else(|| self.0.get(key).and_then(|v| v.as_u64()).map(|v| v as usize))
            .unwrap_or(fallback)
    }

    fn string(&self, key: &str, flag: Option<&str>, fallback: &str) -> String {
        flag.map(str::to_string)
            .or_else(|| {
                self.0
                    .get(key)
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
            })
            .unwrap_or_else(|| fallback.to_string())
    }
}

fn output_root(cli_outdir: Option<&Path>) -> PathBuf {
    if let Some(d) = cli_outdir {
        return d.to_path_buf();
    }
    if let Ok(root) = std::env::var("SU2STA_OUTPUT_ROOT") {
        return PathBuf::from(root);
    }
    PathBuf::from("runs")
}

fn run_dir(root: &Path, pipeline: &str) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    root.join(format!("{pipeline}-{stamp}"))
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    if let Some(e) = err.downcast_ref::<Error>() {
        match e {
            Error::ParameterRange { .. }
            | Error::SingularSchedule { .. }
            | Error::UnknownTarget(_)
            | Error::DimensionMismatch { .. } => ExitCode::from(2),
            Error::Accuracy { .. }
            | Error::Positivity { .. }
            | Error::Quadrature { .. }
            | Error::FitQuality { .. }
            | Error::EigenConvergence { .. }
            | Error::NonHermitian { .. }
            | Error::InvalidDensity(_) => ExitCode::from(3),
            Error::Io(_) => ExitCode::FAILURE,
        }
    } else {
        ExitCode::FAILURE
    }
}

/// Marker for a failed tolerance checkpoint set (exit 3).
#[derive(Debug)]
struct ToleranceFailure(usize);

impl std::fmt::Display for ToleranceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} tolerance checkpoint(s) failed", self.0)
    }
}

impl std::error::Error for ToleranceFailure {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            eprintln!("su2sta: could not configure worker pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("su2sta: {err}");
            if err.downcast_ref::<ToleranceFailure>().is_some() {
                ExitCode::from(3)
            } else {
                exit_code_for(&err)
            }
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let defaults = Defaults::load(cli.config.as_deref())?;
    let root = output_root(cli.outdir.as_deref());
    match &cli.command {
        Command::Design { what } => match what {
            DesignCmd::TwoLevel(args) => design_two_level(args, &defaults, &root),
            DesignCmd::Nv(args) => design_nv(args, &defaults, &root),
        },
        Command::Simulate { what } => match what {
            SimulateCmd::Nv(args) => simulate_nv(args, &defaults, &root),
            SimulateCmd::TwoLevel(args) => simulate_two_level(args, &defaults, &root),
        },
        Command::Reproduce {
            target,
            steps,
            grid_n,
        } => run_reproduce(target, *steps, *grid_n, &defaults, &root),
        Command::Sweep { what } => match what {
            SweepCmd::Decoherence(args) => sweep_decoherence(args, &defaults, &root),
            SweepCmd::Robustness(args) => sweep_robustness(args, &defaults, &root),
        },
    }
}

fn design_two_level(
    args: &TwoLevelDesignArgs,
    defaults: &Defaults,
    root: &Path,
) -> anyhow::Result<()> {
    let case = TwoLevelCase::from_str(&defaults.string("case", Some(&args.case), "I"))?;
    let grid = defaults.usize("grid", args.grid, 1001);
    let a1 = defaults.f64("a1", args.a1, 8.0 * PI);
    let pulses = match case {
        TwoLevelCase::I => design_case1(Case1Schedule)?,
        TwoLevelCase::II => design_case2(Case2Schedule::new(a1)?)?,
    };
    let dir = run_dir(root, "design-two-level");
    let mut csv = Vec::new();
    pulses.write_csv(&mut csv, grid)?;
    write_file(&dir, "pulses.csv", &String::from_utf8(csv).unwrap())?;
    write_json(
        &dir,
        "manifest.json",
        &serde_json::json!({
            "tool": "su2sta",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "design two-level",
            "config": {"case": format!("{case:?}"), "a1": a1, "grid": grid},
            "residual_axis": format!("{:?}", pulses.residual_axis()),
        }),
    )?;
    println!("{}", dir.display());
    Ok(())
}

fn design_nv(args: &NvDesignArgs, defaults: &Defaults, root: &Path) -> anyhow::Result<()> {
    let a = defaults.f64("a", args.a, 11.0);
    let b_spec = defaults.string("b", args.b.as_deref(), "auto");
    let b = if b_spec == "auto" {
        solve_b(a)?
    } else {
        b_spec
            .parse::<f64>()
            .map_err(|_| Error::ParameterRange {
                name: "B",
                value: f64::NAN,
                range: "a number or \"auto\"",
            })?
    };
    let grid = defaults.usize("grid", args.grid, 1001);

    let design = nv_design(a, b)?;
    let designed = designed_pulses(a, b)?;
    let fitted = gaussian_fit(&designed, 2000)?;
    let dir = run_dir(root, "design-nv");
    let mut csv = Vec::new();
    design.pulses().write_csv(&mut csv, grid)?;
    write_file(&dir, "pulses.csv", &String::from_utf8(csv).unwrap())?;
    write_json(
        &dir,
        "manifest.json",
        &serde_json::json!({
            "tool": "su2sta",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "design nv",
            "config": {"a": a, "b": b, "b_mode": b_spec, "grid": grid},
            "constraint_ok": designed.constraint_ok,
            "gaussian_fit": fitted.describe(),
        }),
    )?;
    println!("{}", dir.display());
    Ok(())
}

fn nv_pulse_pair(provenance: &str, a: f64, b: f64) -> anyhow::Result<PulsePair> {
    match provenance {
        "gaussian" => {
            if (a - 11.0).abs() < 1e-12 {
                Ok(default_gaussian_pulses().clone())
            } else {
                Ok(gaussian_fit(&designed_pulses(a, b)?, 2000)?)
            }
        }
        "designed" => Ok(designed_pulses(a, b)?),
        _ => Err(Error::UnknownTarget(provenance.to_string()).into()),
    }
}

fn simulate_nv(args: &NvSimulateArgs, defaults: &Defaults, root: &Path) -> anyhow::Result<()> {
    let lambda = defaults.f64("lambda_t", args.lambda_t, 30.0);
    let kappa_ratio = defaults.f64("kappa_ratio", args.kappa_ratio, 0.0);
    let gamma_ratio = defaults.f64("gamma_ratio", args.gamma_ratio, 0.0);
    let steps = defaults.usize("steps", args.steps, DEFAULT_STEPS);
    let provenance = defaults.string("pulses", args.pulses.as_deref(), "gaussian");
    let decay_name = defaults.string("decay", args.decay.as_deref(), "calibrated");
    let decay = match decay_name.as_str() {
        "calibrated" => DecayModel::Calibrated,
        "full" => DecayModel::FullSpontaneous,
        other => return Err(Error::UnknownTarget(other.to_string()).into()),
    };

    let a = defaults.f64("a", None, 11.0);
    let b = solve_b(a)?;
    let config = NvConfig {
        lambda,
        a,
        b,
        kappa: kappa_ratio * lambda,
        gamma: gamma_ratio * lambda,
    };
    config.validate()?;
    let pulses = nv_pulse_pair(&provenance, a, b)?;
    let h = |s: f64| full_hamiltonian(s, &pulses, config.lambda);
    let grid = TimeGrid::with_steps(steps)?;
    let target = StateVector::basis(nv::DIM, nv::TARGET);
    let traj = if config.kappa > 0.0 || config.gamma > 0.0 {
        let rho0 = DensityMatrix::pure(&StateVector::basis(nv::DIM, nv::INITIAL));
        let channels = collapse_channels(config.kappa, config.gamma, decay);
        propagate_lindblad(&h, &rho0, &channels, &grid, Some(&target))?
    } else {
        propagate_state(&h, &StateVector::basis(nv::DIM, nv::INITIAL), &grid, Some(&target))?
    };

    let dir = run_dir(root, "simulate-nv");
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    write_file(&dir, "trajectory.csv", &String::from_utf8(csv).unwrap())?;
    write_json(
        &dir,
        "manifest.json",
        &serde_json::json!({
            "tool": "su2sta",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "simulate nv",
            "config": {
                "lambda_t": lambda,
                "kappa_ratio": kappa_ratio,
                "gamma_ratio": gamma_ratio,
                "pulses": provenance,
                "decay": decay_name,
                "steps": steps,
            },
            "model": nv::model_json(&config, &pulses, decay),
            "final_fidelity": traj.final_fidelity(),
        }),
    )?;
    println!("{}", dir.display());
    println!("final fidelity: {:.6}", traj.final_fidelity().unwrap());
    Ok(())
}

fn simulate_two_level(
    args: &TwoLevelSimulateArgs,
    defaults: &Defaults,
    root: &Path,
) -> anyhow::Result<()> {
    let case = TwoLevelCase::from_str(&defaults.string("case", Some(&args.case), "I"))?;
    let a1 = defaults.f64("a1", args.a1, 8.0 * PI);
    let steps = defaults.usize("steps", args.steps, DEFAULT_STEPS);
    let (_, traj) = su2sta::experiments::two_level_demo(case, Some(a1), steps)?;
    let dir = run_dir(root, "simulate-two-level");
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    write_file(&dir, "trajectory.csv", &String::from_utf8(csv).unwrap())?;
    write_json(
        &dir,
        "manifest.json",
        &serde_json::json!({
            "tool": "su2sta",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "simulate two-level",
            "config": {"case": format!("{case:?}"), "a1": a1, "steps": steps},
            "final_p2": traj.final_population(1),
        }),
    )?;
    println!("{}", dir.display());
    println!("final P2: {:.6}", traj.final_population(1));
    Ok(())
}

fn run_reproduce(
    target: &str,
    steps: Option<usize>,
    grid_n: Option<usize>,
    defaults: &Defaults,
    root: &Path,
) -> anyhow::Result<()> {
    let target = Target::from_str(target)?;
    let opts = ReproduceOptions {
        steps: defaults.usize("steps", steps, DEFAULT_STEPS),
        grid_n: defaults.usize("grid_n", grid_n, 21),
    };
    let output = reproduce(target, &opts)?;
    let dir = run_dir(root, &format!("reproduce-{target}"));
    output.write_to(&dir)?;
    println!("{}", dir.display());
    for c in &output.checkpoints {
        println!("{c}");
    }
    let failing = output.failing();
    if !failing.is_empty() {
        for c in &failing {
            eprintln!("FAILED checkpoint: {c}");
        }
        return Err(ToleranceFailure(failing.len()).into());
    }
    Ok(())
}

fn sweep_decoherence(
    args: &DecoherenceArgs,
    defaults: &Defaults,
    root: &Path,
) -> anyhow::Result<()> {
    let kappa_max = defaults.f64("kappa_max", args.kappa_max, 0.04);
    let gamma_max = defaults.f64("gamma_max", args.gamma_max, 0.04);
    let n = defaults.usize("n", args.n, 21);
    let lambda = defaults.f64("lambda_t", args.lambda_t, 30.0);
    let steps = defaults.usize("steps", args.steps, DEFAULT_STEPS);
    let mut config = NvConfig::reference();
    config.lambda = lambda;
    let axis = |max: f64| -> Vec<f64> {
        (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect()
    };
    let grid = decoherence_sweep(
        &axis(kappa_max),
        &axis(gamma_max),
        &config,
        DecayModel::Calibrated,
        steps,
    )?;
    let dir = run_dir(root, "sweep-decoherence");
    write_file(&dir, "sweep.csv", &grid.to_csv())?;
    write_json(
        &dir,
        "manifest.json",
        &serde_json::json!({
            "tool": "su2sta",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "sweep decoherence",
            "config": {
                "kappa_max": kappa_max, "gamma_max": gamma_max, "n": n,
                "lambda_t": lambda, "steps": steps,
            },
            "sweep": grid.metadata,
        }),
    )?;
    println!("{}", dir.display());
    Ok(())
}

fn sweep_robustness(
    args: &RobustnessArgs,
    defaults: &Defaults,
    root: &Path,
) -> anyhow::Result<()> {
    let axis1 = PerturbAxis::from_str(&args.axis1)?;
    let axis2 = PerturbAxis::from_str(&args.axis2)?;
    let range = defaults.f64("range", args.range, 0.1);
    let n = defaults.usize("n", args.n, 21);
    let lambda = defaults.f64("lambda_t", args.lambda_t, 30.0);
    let steps = defaults.usize("steps", args.steps, DEFAULT_STEPS);
    let mut config = NvConfig::reference();
    config.lambda = lambda;
    let grid = robustness_sweep(axis1, axis2, range, n, &config, steps)?;
    let dir = run_dir(root, "sweep-robustness");
    write_file(&dir, "sweep.csv", &grid.to_csv())?;
    write_json(
        &dir,
        "manifest.json",
        &serde_json::json!({
            "tool": "su2sta",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "sweep robustness",
            "config": {
                "axis1": axis1.label(), "axis2": axis2.label(),
                "range": range, "n": n, "lambda_t": lambda, "steps": steps,
            },
            "sweep": grid.metadata,
        }),
    )?;
    println!("{}", dir.display());
    Ok(())
}
