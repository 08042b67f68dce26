//! Dual-route checks: each library routine against an independent computation.

mod common;

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use zeno_core::analytic_qubit::{lindblad_schedule, mlp_schedule, optimal_cost, replay_lindblad, QubitDragSpec};
use zeno_core::dynamics::{
    averaged_channel, evolve_lindblad, readout_density, sample_measurement, DensityMatrix, MeasurementConfig,
    RateShare, Schedule,
};
use zeno_core::linalg::{max_abs, C64};
use zeno_core::operators::{cost_matrix, cost_operator, projector_set, target_projector, AxisVector};
use zeno_core::rng::{stream, substream};
use zeno_core::sat::{enumerate_solutions, generate_instance, per_qubit_instance_one, Assignment, InstanceKind};

use common::{
    composite_rule, jacobi_eigenvalues, ks_statistic, lindblad_superoperator_step, random_instance, random_state,
};

#[test]
fn spectrum_matches_jacobi_eigenvalues() {
    let mut rng = substream(11, stream::TEST, 0);
    for _ in 0..30 {
        let n = rng.random_range(1..=3usize);
        let inst = random_instance(n, 6, &mut rng);
        let axis = AxisVector::new((0..n).map(|_| rng.random_range(0.0..FRAC_PI_2)).collect()).unwrap();
        let op = cost_operator(&inst, &axis).unwrap();
        let jacobi = jacobi_eigenvalues(&cost_matrix(&inst, &axis).unwrap());
        for (a, b) in op.eigenvalues.iter().zip(&jacobi) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn computational_axis_spectrum_counts_violated_clauses() {
    let mut rng = substream(12, stream::TEST, 0);
    for _ in 0..20 {
        let n = rng.random_range(1..=3usize);
        let inst = random_instance(n, 6, &mut rng);
        let op = cost_operator(&inst, &AxisVector::uniform(n, FRAC_PI_2).unwrap()).unwrap();
        let mut counts: Vec<f64> = (0..inst.dim())
            .map(|i| {
                let a = Assignment::from_index(i, n);
                inst.clauses().iter().filter(|c| !c.is_satisfied(&a.0)).count() as f64 / inst.m() as f64
            })
            .collect();
        counts.sort_by(f64::total_cmp);
        for (a, b) in op.eigenvalues.iter().zip(&counts) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(max_abs(&(&op.ground_projector - target_projector(&inst).unwrap())) < 1e-10);
        assert_eq!(op.ground_dim, enumerate_solutions(&inst).unwrap().len());
    }
}

#[test]
fn lindblad_matches_superoperator_exponential() {
    let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
    let cfg = MeasurementConfig::new(0.01, 0.7, RateShare::PerClause1OverM).unwrap();
    let sched = Schedule::from_fn(1.5, 12, |t| vec![0.1 + 0.9 * t, 0.3 + 0.5 * t * t]).unwrap();
    let rho0 = DensityMatrix::plus_state(2);
    let trace = evolve_lindblad(&rho0, &inst, &sched, &cfg).unwrap();
    let rate = 1.0 / (inst.m() as f64 * cfg.tau);
    let mut rho = rho0.matrix().clone();
    for j in 0..sched.intervals() {
        let ps = projector_set(&inst, &sched.axes()[j]).unwrap().projectors;
        rho = lindblad_superoperator_step(&rho, &ps, rate, sched.interval_width(j));
    }
    assert!(max_abs(&(trace.final_state().matrix() - &rho)) < 1e-9);
}

#[test]
fn readout_samples_follow_the_two_gaussian_law() {
    let inst = random_instance(2, 1, &mut substream(13, stream::TEST, 0));
    let p = projector_set(&inst, &AxisVector::new(vec![0.4, 1.1]).unwrap()).unwrap().projectors[0].map(C64::from);
    let rho = random_state(4, &mut substream(13, stream::TEST, 1));
    let cfg = MeasurementConfig::new(0.3, 0.8, RateShare::PerClause1OverM).unwrap();
    let w = (p.clone() * rho.matrix()).trace().re;
    let c = 1.0 / cfg.tau.sqrt();
    let sd = 1.0 / cfg.dt.sqrt();
    let (lo, hi) = (Normal::new(-c, sd).unwrap(), Normal::new(c, sd).unwrap());
    let cdf = |r: f64| w * lo.cdf(r) + (1.0 - w) * hi.cdf(r);

    let mut rng = substream(13, stream::TEST, 2);
    let shots = 20_000;
    let mut samples: Vec<f64> = (0..shots).map(|_| sample_measurement(&rho, &p, &cfg, &mut rng).unwrap().1).collect();
    // 0.1% critical value of the one-sample KS statistic.
    assert!(ks_statistic(&mut samples, cdf) < 1.95 / (shots as f64).sqrt());

    let mass: f64 = composite_rule(-40.0, 40.0, 400, 10).iter().map(|&(r, wt)| wt * readout_density(w, r, &cfg)).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    let partial: f64 =
        composite_rule(-40.0, 0.7, 400, 10).iter().map(|&(r, wt)| wt * readout_density(w, r, &cfg)).sum();
    // statrs' normal CDF is accurate to about 1e-11 here.
    assert!((partial - cdf(0.7)).abs() < 1e-10, "{partial} vs {}", cdf(0.7));
}

#[test]
fn sampled_kraus_updates_average_to_the_channel() {
    // One clause, so the channel's per-clause share is 1 and matches a single measurement.
    let inst = random_instance(2, 1, &mut substream(14, stream::TEST, 0));
    let set = projector_set(&inst, &AxisVector::new(vec![0.7, 0.2]).unwrap()).unwrap();
    let p = set.projectors[0].map(C64::from);
    let rho = random_state(4, &mut substream(14, stream::TEST, 1));
    let cfg = MeasurementConfig::new(0.5, 1.0, RateShare::PerClause1OverM).unwrap();
    let mut rng = substream(14, stream::TEST, 2);
    let shots = 40_000;
    let outs: Vec<DMatrix<C64>> =
        (0..shots).map(|_| sample_measurement(&rho, &p, &cfg, &mut rng).unwrap().0.into_matrix()).collect();
    let channel = averaged_channel(&rho, &set, &cfg);
    for i in 0..4 {
        for j in 0..4 {
            for part in [(|z: C64| z.re) as fn(C64) -> f64, |z: C64| z.im] {
                let xs: Vec<f64> = outs.iter().map(|m| part(m[(i, j)])).collect();
                let mean = xs.iter().sum::<f64>() / shots as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (shots - 1) as f64;
                let se = (var / shots as f64).sqrt();
                assert!((mean - part(channel.matrix()[(i, j)])).abs() <= 5.0 * se + 1e-12, "entry ({i},{j})");
            }
        }
    }
}

#[test]
fn closed_form_optimal_fidelity_matches_bloch_replay() {
    for t_f in [0.5, 1.0, 2.0, 5.0] {
        let spec = QubitDragSpec::from_tau(0.0, FRAC_PI_2, 1.0, t_f).unwrap();
        let replayed = replay_lindblad(&spec, |t| lindblad_schedule(&spec, t).unwrap(), 20_000).unwrap();
        assert!((replayed - optimal_cost(&spec).unwrap()).abs() < 1e-9, "T_f = {t_f}");
        // The readout-conditioned schedule is a different optimum and does worse under Lindblad.
        let mlp = replay_lindblad(&spec, |t| mlp_schedule(&spec, t).unwrap(), 20_000).unwrap();
        assert!(mlp < replayed);
    }
}

#[test]
fn instance_families_have_their_solution_counts() {
    for n in 2..=6 {
        let single = generate_instance(InstanceKind::SingleSolutionRing, n, 0).unwrap();
        assert_eq!(enumerate_solutions(&single).unwrap().len(), 1);
        let ring = generate_instance(InstanceKind::Ring2sat, n, 0).unwrap();
        assert_eq!(enumerate_solutions(&ring).unwrap().len(), 2);
    }
    for n in 3..=5 {
        let r = generate_instance(InstanceKind::Random3sat, n, 5).unwrap();
        assert_eq!(enumerate_solutions(&r).unwrap().len(), 1);
    }
    assert_eq!(enumerate_solutions(&per_qubit_instance_one()).unwrap().len(), 4);
}
