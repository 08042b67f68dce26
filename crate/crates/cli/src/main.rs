//! `zeno`: generate instances, simulate Zeno dragging, plan and optimize schedules, and
//! regenerate the figure data sets.

mod commands;
mod config;
mod error;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::CliError;

#[derive(Parser)]
#[command(name = "zeno", version, about = "Measurement-driven k-SAT simulation and schedule optimization")]
struct Cli {
    /// Output directory (overrides ZENO_OUT_DIR and the config file's out_dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON config: a flat object of parameters, or a manifest from an earlier run. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Default)]
struct InstanceArgs {
    /// DIMACS CNF file (overrides --family/--n).
    #[arg(long)]
    instance: Option<String>,
    /// Generated family: ring2sat | single_solution_ring | random3sat.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Master seed; every random component draws from its own substream.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance as DIMACS CNF.
    Gen(GenArgs),
    /// Eigenvalues of the cost operator and its gap along θ.
    Spectrum(SpectrumArgs),
    /// Evolve |+…+⟩ under a schedule: Lindblad traces or a trajectory ensemble.
    Drag(DragArgs),
    /// Discrete dragging plan with per-step repetition counts.
    Plan(PlanArgs),
    /// Optimize a schedule (Lindblad or most-likely-path, fixed or optimal horizon).
    Optimize(OptimizeArgs),
    /// Final-fidelity statistics of a trajectory ensemble with post-selection.
    Ensemble(EnsembleArgs),
    /// Closed-form single-qubit optimal schedules.
    QubitAnalytic(QubitArgs),
    /// Relative speedup of optimized over linear schedules versus n.
    Speedup(SpeedupArgs),
    /// Regenerate a figure's data set: fig3 | fig4 | fig5 | fig6.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct GenArgs {
    /// ring2sat | single_solution_ring | random3sat.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default <out-dir>/instance.cnf).
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct DragArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inst: InstanceArgs,
    /// "linear" or a schedule CSV (t, theta or t, theta_1..theta_n).
    #[arg(long)]
    schedule: Option<String>,
    /// kraus | lindblad | sme.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Horizon of the linear schedule.
    #[arg(long)]
    t_f: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// per_clause_1_over_m | parallel.
    #[arg(long)]
    rate_share: Option<String>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct EnsembleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    schedule: Option<String>,
    /// kraus | sme.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_f: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    rate_share: Option<String>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct PlanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    theta_i: Option<f64>,
    #[arg(long)]
    theta_f: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    rate_share: Option<String>,
    #[arg(long)]
    large_first_step: Option<bool>,
    #[arg(long)]
    gap_floor: Option<f64>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct OptimizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inst: InstanceArgs,
    /// lindblad_ofs | lindblad_ot | mlp_ofs | mlp_ot.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    t_f: Option<f64>,
    #[arg(long)]
    bracket_lo: Option<f64>,
    #[arg(long)]
    bracket_hi: Option<f64>,
    #[arg(long)]
    horizon_tol: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    tau_m: Option<f64>,
    #[arg(long)]
    per_qubit: Option<bool>,
    #[arg(long)]
    perturbation: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    clamp: Option<bool>,
    #[arg(long)]
    clamp_lo: Option<f64>,
    #[arg(long)]
    clamp_hi: Option<f64>,
    #[arg(long)]
    weight: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    rate_share: Option<String>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct QubitArgs {
    #[arg(long)]
    phi_i: Option<f64>,
    #[arg(long)]
    phi_f: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_f: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct SpeedupArgs {
    #[arg(long)]
    family: Option<String>,
    /// "2..5", "2,3,4" or a single value.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    tau_m: Option<f64>,
    #[arg(long)]
    bracket_lo: Option<f64>,
    #[arg(long)]
    bracket_hi: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    weight: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ReproduceArgs {
    /// fig3 | fig4 | fig5 | fig6.
    figure: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    t_f: Option<f64>,
    /// Any other pipeline parameter as key=value (value parsed as JSON, else taken as a string).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ReproduceArgs {
    fn flags(&self) -> Result<serde_json::Map<String, serde_json::Value>, CliError> {
        use serde_json::json;
        let mut m = serde_json::Map::new();
        let mut put = |k: &str, v: serde_json::Value| {
            if !v.is_null() {
                m.insert(k.to_string(), v);
            }
        };
        put("seed", json!(self.seed));
        put("shots", json!(self.shots));
        put("max_iters", json!(self.max_iters));
        put("grid_size", json!(self.grid_size));
        put("learning_rate", json!(self.learning_rate));
        put("t_f", json!(self.t_f));
        for kv in &self.set {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| CliError::param(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
            m.insert(k.to_string(), v);
        }
        Ok(m)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(config::load_config).transpose()?;
    let mut file = file;
    // out_dir is a driver setting, not a parameter of any subcommand.
    let file_out =
        file.as_mut().and_then(|f| f.remove("out_dir")).map(|v| serde_json::Map::from_iter([("out_dir".into(), v)]));
    let out = config::out_dir(cli.out_dir.as_deref(), file_out.as_ref());
    let file = file.as_ref();
    match &cli.command {
        Command::Gen(a) => commands::gen(config::resolve(file, a)?, &out),
        Command::Spectrum(a) => commands::spectrum(config::resolve(file, a)?, &out),
        Command::Drag(a) => commands::drag(config::resolve(file, a)?, &out),
        Command::Plan(a) => commands::plan(config::resolve(file, a)?, &out),
        Command::Optimize(a) => commands::optimize(config::resolve(file, a)?, &out),
        Command::Ensemble(a) => commands::ensemble(config::resolve(file, a)?, &out),
        Command::QubitAnalytic(a) => commands::qubit_analytic(config::resolve(file, a)?, &out),
        Command::Speedup(a) => commands::speedup(config::resolve(file, a)?, &out),
        Command::Reproduce(a) => commands::reproduce(&a.figure, file, &a.flags()?, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code as u8)
        }
    }
}
