use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use zeno_core::analytic_qubit::{optimal_cost, phi_tf_residual, sample_schedules, solve_phi_tf, QubitDragSpec};
use zeno_core::bounds::{corollary_time, plan_linear_drag, PlanOptions};
use zeno_core::control::{
    nesterov_grape, optimize_tf, per_qubit_distance, tts, CdjOptions, ControlProblem, GrapeConfig,
};
use zeno_core::dynamics::ensemble::DEFAULT_BINS;
use zeno_core::dynamics::{
    evolve_lindblad, fidelity_statistics, run_ensemble, DensityMatrix, MeasurementConfig, Schedule, TrajectoryMode,
    TrajectoryOptions,
};
use zeno_core::experiments::figures::figure_grape;
use zeno_core::experiments::{
    fig3, fig4, fig5, fig6, histogram_table, horizon_table, perturbed_schedule, plan_table, qubit_analytic_table,
    readout_table, schedule_from_table, schedule_table, shots_table, spectrum_table, speedup_table, trace_table,
    Fig3Config, Fig4Config, Fig5Config, Fig6Config, RunManifest, RunOutput, SpeedupConfig, Table, MANIFEST_FILE,
};
use zeno_core::operators::{spectral_gap, AxisVector};
use zeno_core::sat::{generate_instance, parse_dimacs, render_dimacs, SatInstance};

use crate::config::{parse_n_list, resolve};
use crate::error::CliError;
use crate::params::*;

type Resolved<P> = (P, Value);

fn load_instance(p: &InstanceParams) -> zeno_core::Result<SatInstance> {
    match &p.instance {
        Some(path) => parse_dimacs(&std::fs::read_to_string(path)?),
        None => generate_instance(p.family, p.n, p.seed),
    }
}

fn load_schedule(source: &str, n: usize, t_f: f64, grid_size: usize) -> zeno_core::Result<Schedule> {
    if source == "linear" {
        Schedule::linear_midpoint(n, t_f, grid_size, 0.0)
    } else {
        schedule_from_table(&Table::from_csv(&std::fs::read_to_string(source)?)?, n)
    }
}

fn finish(out: &RunOutput, dir: &Path, command: &str, config: Value, seed: u64) -> Result<RunManifest, CliError> {
    let manifest = out.write(dir, command, config, seed)?;
    report(&manifest, dir);
    Ok(manifest)
}

fn report(manifest: &RunManifest, dir: &Path) {
    for p in manifest.output_paths(dir) {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", dir.join(MANIFEST_FILE).display());
    for (k, v) in &manifest.summary {
        println!("{k} = {v}");
    }
}

pub fn gen((p, cfg): Resolved<GenParams>, dir: &Path) -> Result<(), CliError> {
    let inst = generate_instance(p.kind, p.n, p.seed)?;
    let path = p.output.as_ref().map_or_else(|| dir.join("instance.cnf"), PathBuf::from);
    if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(e.to_string()))?;
    }
    std::fs::write(&path, render_dimacs(&inst)).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut out = RunOutput::default();
    out.summary.insert("n".into(), inst.n() as f64);
    out.summary.insert("m".into(), inst.m() as f64);
    let mut manifest = out.write(dir, "gen", cfg, p.seed)?;
    manifest.outputs.push(path.display().to_string());
    manifest.write(&dir.join(MANIFEST_FILE))?;
    println!("wrote {}", path.display());
    report(&RunManifest { outputs: Vec::new(), ..manifest }, dir);
    Ok(())
}

pub fn spectrum((p, cfg): Resolved<SpectrumParams>, dir: &Path) -> Result<(), CliError> {
    let inst = load_instance(&p.inst)?;
    let mut out = RunOutput::default();
    let t = spectrum_table(&inst, p.points, (p.theta_min, p.theta_max))?;
    let gaps = t.column("gap").unwrap_or_default();
    out.summary.insert("min_gap".into(), gaps.iter().copied().fold(f64::INFINITY, f64::min));
    out.table("spectrum.csv", t);
    finish(&out, dir, "spectrum", cfg, p.inst.seed).map(drop)
}

fn measurement(dt: f64, tau: f64, share: zeno_core::dynamics::RateShare) -> zeno_core::Result<MeasurementConfig> {
    MeasurementConfig::new(dt, tau, share)
}

pub fn drag((p, cfg): Resolved<DragParams>, dir: &Path) -> Result<(), CliError> {
    let inst = load_instance(&p.inst)?;
    let sched = load_schedule(&p.schedule, inst.n(), p.t_f, p.grid_size)?;
    let meas = measurement(p.dt, p.tau, p.rate_share)?;
    let rho0 = DensityMatrix::plus_state(inst.n());
    let mut out = RunOutput::default();
    out.table("schedule.csv", schedule_table(&sched, true));
    let mode = match p.mode {
        DragMode::Lindblad => {
            let tr = evolve_lindblad(&rho0, &inst, &sched, &meas)?;
            out.summary.insert("final_fidelity".into(), tr.final_fidelity());
            out.table("trace.csv", trace_table(&tr.times, &tr.fidelity, &tr.purity));
            return finish(&out, dir, "drag", cfg, p.inst.seed).map(drop);
        }
        DragMode::Kraus => TrajectoryMode::Kraus,
        DragMode::Sme => TrajectoryMode::Sme,
    };
    let records = run_ensemble(&rho0, &inst, &sched, &meas, mode, p.shots, p.inst.seed, &TrajectoryOptions::default())?;
    // Ensemble-mean traces on the shared step grid.
    let times = records[0].times.clone();
    let k = records.len() as f64;
    let mean = |f: fn(&zeno_core::dynamics::TrajectoryRecord) -> &Vec<f64>| -> Vec<f64> {
        (0..times.len()).map(|i| records.iter().map(|r| f(r)[i]).sum::<f64>() / k).collect()
    };
    let (fid, pur) = (mean(|r| &r.fidelity_trace), mean(|r| &r.purity_trace));
    out.table("trace.csv", trace_table(&times, &fid, &pur));
    let finals: Vec<f64> = records.iter().map(|r| r.final_fidelity()).collect();
    let s = fidelity_statistics(&finals, Some(p.cutoff), DEFAULT_BINS)?;
    out.table("shots.csv", shots_table(&finals));
    out.summary.insert("mean_fidelity".into(), s.mean);
    out.summary.insert("variance".into(), s.variance);
    out.document("summary.json", &s)?;
    finish(&out, dir, "drag", cfg, p.inst.seed).map(drop)
}

pub fn ensemble((p, cfg): Resolved<EnsembleParams>, dir: &Path) -> Result<(), CliError> {
    let inst = load_instance(&p.inst)?;
    let sched = load_schedule(&p.schedule, inst.n(), p.t_f, p.grid_size)?;
    let meas = measurement(p.dt, p.tau, p.rate_share)?;
    let opts = TrajectoryOptions { record: false, truncation: None };
    let records =
        run_ensemble(&DensityMatrix::plus_state(inst.n()), &inst, &sched, &meas, p.mode, p.shots, p.inst.seed, &opts)?;
    let finals: Vec<f64> = records.iter().map(|r| r.final_fidelity()).collect();
    let s = fidelity_statistics(&finals, Some(p.cutoff), p.bins)?;
    let mut out = RunOutput::default();
    out.table("shots.csv", shots_table(&finals));
    out.table("histogram.csv", histogram_table(&s));
    out.summary.insert("mean_fidelity".into(), s.mean);
    out.summary.insert("variance".into(), s.variance);
    if let Some(m) = s.post_selection.as_ref().and_then(|ps| ps.mean) {
        out.summary.insert("post_selected_mean".into(), m);
    }
    out.document("summary.json", &s)?;
    finish(&out, dir, "ensemble", cfg, p.inst.seed).map(drop)
}

pub fn plan((p, cfg): Resolved<PlanParams>, dir: &Path) -> Result<(), CliError> {
    let inst = load_instance(&p.inst)?;
    let meas = measurement(p.dt, p.tau, p.rate_share)?;
    let opts = PlanOptions { gap_floor: p.gap_floor, large_first_step: p.large_first_step };
    let n = inst.n();
    let plan = plan_linear_drag(
        n,
        p.theta_i,
        p.theta_f,
        p.eps1,
        p.eps2,
        &meas,
        |th| spectral_gap(&inst, &AxisVector::uniform(n, th)?),
        &opts,
    )?;
    let corollary = corollary_time(&plan, &meas);
    let mut out = RunOutput::default();
    out.table("plan_steps.csv", plan_table(&plan));
    out.document("plan.json", &json!({ "plan": plan, "corollary": corollary }))?;
    out.summary.insert("total_applications".into(), plan.total_applications as f64);
    out.summary.insert("total_time".into(), plan.total_time);
    out.summary.insert("g_min".into(), plan.g_min);
    finish(&out, dir, "plan", cfg, p.inst.seed).map(drop)
}

pub fn optimize((p, cfg): Resolved<OptimizeParams>, dir: &Path) -> Result<(), CliError> {
    let inst = load_instance(&p.inst)?;
    let n = inst.n();
    let t0 = if p.kind.is_ot() { p.bracket_lo } else { p.t_f };
    let mut problem = ControlProblem::new(p.kind, inst, t0, p.grid_size)?;
    problem.measurement = measurement(problem.measurement.dt, p.tau, p.rate_share)?;
    problem.per_qubit = p.per_qubit;
    if let Some(t) = p.tau_m {
        problem.tau_m = t;
    }
    if p.per_qubit && p.perturbation > 0.0 {
        problem = problem.with_schedule(perturbed_schedule(n, t0, p.grid_size, p.perturbation, p.inst.seed)?)?;
    }
    problem.validate()?;
    let grape = GrapeConfig {
        learning_rate: p.learning_rate,
        momentum: p.momentum,
        max_iters: p.max_iters,
        grad_tol: p.grad_tol,
        theta_clamp: p.clamp.then_some((p.clamp_lo, p.clamp_hi)),
        cdj_running_cost_weight: p.weight,
    };
    let mut out = RunOutput::default();
    let (result, t_f) = if p.kind.is_ot() {
        let cdj = CdjOptions { weight: p.weight, ..Default::default() };
        let h = optimize_tf(&problem, (p.bracket_lo, p.bracket_hi), p.horizon_tol, &grape, &cdj)?;
        out.document(
            "horizon.json",
            &json!({ "t_f": h.t_f, "tts": h.tts, "probes": h.probes, "at_boundary": h.at_boundary }),
        )?;
        (h.result.expect("optimize_tf runs an inner optimization"), h.t_f)
    } else {
        (nesterov_grape(&problem, &grape)?, p.t_f)
    };
    let time_to_solution = tts(t_f, problem.tau_m, result.final_fidelity);
    out.summary.insert("final_fidelity".into(), result.final_fidelity);
    out.summary.insert("t_f".into(), t_f);
    out.summary.insert("tts".into(), time_to_solution);
    if p.per_qubit && n > 1 {
        out.summary.insert("d_l2".into(), per_qubit_distance(&result.schedule)?);
    }
    out.table("schedule.csv", schedule_table(&result.schedule, p.per_qubit));
    if let Some(r) = &result.optimal_readouts {
        out.table("readouts.csv", readout_table(result.schedule.times(), r)?);
    }
    out.document("result.json", &json!({ "result": result, "tts": time_to_solution, "tau_m": problem.tau_m }))?;
    finish(&out, dir, "optimize", cfg, p.inst.seed).map(drop)
}

pub fn qubit_analytic((p, cfg): Resolved<QubitParams>, dir: &Path) -> Result<(), CliError> {
    let spec = QubitDragSpec::from_tau(p.phi_i, p.phi_f, p.tau, p.t_f)?;
    let phi = solve_phi_tf(&spec)?;
    let j = optimal_cost(&spec)?;
    let mut out = RunOutput::default();
    out.table("qubit_schedules.csv", qubit_analytic_table(&sample_schedules(&spec, p.points)?));
    let residual = phi_tf_residual(&spec, phi);
    out.document(
        "qubit_analytic.json",
        &json!({ "phi_Tf": phi, "J_star": j, "residual": residual, "gamma_rate": spec.gamma_rate }),
    )?;
    out.summary.insert("phi_Tf".into(), phi);
    out.summary.insert("J_star".into(), j);
    finish(&out, dir, "qubit-analytic", cfg, p.seed).map(drop)
}

pub fn speedup((p, cfg): Resolved<SpeedupParams>, dir: &Path) -> Result<(), CliError> {
    let ns = parse_n_list(&p.n).map_err(CliError::param)?;
    let sc = SpeedupConfig {
        family: p.family,
        ns,
        tau_m: p.tau_m,
        bracket: (p.bracket_lo, p.bracket_hi),
        tol: p.tol,
        grid_size: p.grid_size,
        seed: p.seed,
        grape: GrapeConfig {
            learning_rate: p.learning_rate,
            max_iters: p.max_iters,
            cdj_running_cost_weight: p.weight,
            ..figure_grape(p.max_iters)
        },
    };
    let rows = zeno_core::experiments::speedup(&sc)?;
    let mut out = RunOutput::default();
    for r in &rows {
        out.summary.insert(format!("n{}_G_lindblad", r.n), r.g_lindblad);
        out.summary.insert(format!("n{}_G_mlp", r.n), r.g_mlp);
    }
    out.table("speedup.csv", speedup_table(&rows));
    out.table("speedup_horizons.csv", horizon_table(&rows));
    out.document("speedup.json", &rows)?;
    finish(&out, dir, "speedup", cfg, p.seed).map(drop)
}

pub fn reproduce(
    figure: &str,
    file: Option<&Map<String, Value>>,
    flags: &Map<String, Value>,
    dir: &Path,
) -> Result<(), CliError> {
    let command = format!("reproduce {figure}");
    let (out, cfg, seed) = match figure {
        "fig3" => {
            let (c, v): Resolved<Fig3Config> = resolve(file, flags)?;
            (fig3(&c)?, v, c.seed)
        }
        "fig4" => {
            let (c, v): Resolved<Fig4Config> = resolve(file, flags)?;
            (fig4(&c)?, v, c.seed)
        }
        "fig5" => {
            let (c, v): Resolved<Fig5Config> = resolve(file, flags)?;
            (fig5(&c)?, v, c.seed)
        }
        "fig6" => {
            let (c, v): Resolved<Fig6Config> = resolve(file, flags)?;
            (fig6(&c)?, v, c.seed)
        }
        other => return Err(CliError::param(format!("unknown figure '{other}' (expected fig3, fig4, fig5 or fig6)"))),
    };
    finish(&out, dir, &command, cfg, seed).map(drop)
}
