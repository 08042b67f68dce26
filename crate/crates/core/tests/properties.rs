//! Structural invariants over randomized inputs.

mod common;

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use zeno_core::bounds::{block_decompose, fidelity_bound, upsilon};
use zeno_core::dynamics::{
    averaged_channel, evolve_lindblad, sample_measurement, DensityMatrix, MeasurementConfig, RateShare, Schedule,
};
use zeno_core::experiments::{schedule_from_table, schedule_table, Table};
use zeno_core::linalg::{hermiticity_error, max_abs, C64};
use zeno_core::operators::{clause_projector, cost_operator, AxisVector};
use zeno_core::rng::{stream, substream};
use zeno_core::sat::{parse_dimacs, render_dimacs, SatInstance};

use common::{random_instance, random_state};

struct Case {
    inst: SatInstance,
    axis: AxisVector,
    rho: DensityMatrix,
}

fn case(seed: u64) -> Case {
    let mut rng = substream(seed, stream::TEST, 0);
    let n = rng.random_range(1..=3usize);
    let inst = random_instance(n, 6, &mut rng);
    let axis = AxisVector::new((0..n).map(|_| rng.random_range(0.0..=FRAC_PI_2)).collect()).unwrap();
    let rho = random_state(inst.dim(), &mut rng);
    Case { inst, axis, rho }
}

fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn share() -> impl Strategy<Value = RateShare> {
    prop_oneof![Just(RateShare::PerClause1OverM), Just(RateShare::Parallel)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_maps_states_to_states(seed in any::<u64>(), dt in 1e-3..10.0f64, tau in 0.1..10.0f64, rs in share()) {
        let c = case(seed);
        let cfg = MeasurementConfig::new(dt, tau, rs).unwrap();
        let set = zeno_core::operators::projector_set(&c.inst, &c.axis).unwrap();
        let out = averaged_channel(&c.rho, &set, &cfg);
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(hermiticity_error(out.matrix()) < 1e-12);
        if cfg.beta() * c.inst.m() as f64 / cfg.share(c.inst.m()) <= 1.0 {
            prop_assert!(min_eigenvalue(out.matrix()) > -1e-12);
        }
    }

    #[test]
    fn channel_keeps_groundspace_fidelity_for_any_share(seed in any::<u64>(), dt in 1e-3..10.0f64, rs in share()) {
        let c = case(seed);
        let cfg = MeasurementConfig::new(dt, 1.0, rs).unwrap();
        let set = zeno_core::operators::projector_set(&c.inst, &c.axis).unwrap();
        let pi = cost_operator(&c.inst, &c.axis).unwrap().ground_projector;
        let out = averaged_channel(&c.rho, &set, &cfg);
        prop_assert!((out.fidelity(&pi) - c.rho.fidelity(&pi)).abs() < 1e-12);
    }

    #[test]
    fn conditioned_update_is_a_state(seed in any::<u64>(), dt in 1e-3..50.0f64, tau in 0.1..10.0f64) {
        let c = case(seed);
        let cfg = MeasurementConfig::new(dt, tau, RateShare::PerClause1OverM).unwrap();
        let set = zeno_core::operators::projector_set(&c.inst, &c.axis).unwrap();
        let mut rng = substream(seed, stream::TEST, 1);
        for p in &set.projectors {
            let (out, r) = sample_measurement(&c.rho, &p.map(C64::from), &cfg, &mut rng).unwrap();
            prop_assert!(r.is_finite());
            prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
            prop_assert!(hermiticity_error(out.matrix()) < 1e-12);
            prop_assert!(min_eigenvalue(out.matrix()) > -1e-10);
        }
    }

    #[test]
    fn clause_projectors_are_orthogonal_projectors(seed in any::<u64>()) {
        let c = case(seed);
        let n = c.inst.n();
        for clause in c.inst.clauses() {
            let p = clause_projector(clause, &c.axis, n).unwrap();
            prop_assert!((&p * &p - &p).amax() < 1e-12);
            prop_assert!((&p - p.transpose()).amax() < 1e-15);
            let rank = (1usize << n) >> clause.len();
            prop_assert!((p.trace() - rank as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_spectrum_lies_in_the_unit_interval(seed in any::<u64>()) {
        let c = case(seed);
        let op = cost_operator(&c.inst, &c.axis).unwrap();
        prop_assert!(op.eigenvalues.iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));
        let g = &op.ground_projector;
        prop_assert!((g * g - g).amax() < 1e-10);
        prop_assert!((g * &op.matrix - &op.matrix * g).amax() < 1e-10);
        prop_assert!(op.ground_dim >= 1);
    }

    #[test]
    fn block_decomposition_reconstructs_the_state(seed in any::<u64>()) {
        let c = case(seed);
        let pi = cost_operator(&c.inst, &c.axis).unwrap().ground_projector;
        let b = block_decompose(&c.rho, &pi).unwrap();
        prop_assert!(max_abs(&(b.reconstruct() - c.rho.matrix())) < 1e-12);
        prop_assert!((b.f - c.rho.fidelity(&pi)).abs() < 1e-12);
        // Positivity of ρ bounds the coherence by the block weights.
        prop_assert!(b.gamma * b.gamma <= b.f * (1.0 - b.f) + 1e-12);
    }

    #[test]
    fn upsilon_is_at_least_its_limit(dt in 0.0..20.0f64, tau in 0.1..10.0f64, dt2 in 0.0..20.0f64) {
        prop_assert!(upsilon(dt, tau) >= 2.0 * tau * (1.0 - 1e-12));
        let (a, b) = if dt <= dt2 { (dt, dt2) } else { (dt2, dt) };
        prop_assert!(upsilon(a, tau) <= upsilon(b, tau) * (1.0 + 1e-12));
    }

    #[test]
    fn fidelity_bound_never_exceeds_the_mixed_overlap(f in 0.0..=1.0f64, delta in 0.0..=1.0f64, bg in 0.0..=1.0f64, m in 1u64..50) {
        let b = fidelity_bound(f, delta, bg, m);
        prop_assert!(b <= f * delta + 1e-15);
        prop_assert!(b >= fidelity_bound(f, delta, bg, m.saturating_sub(1).max(1)) - 1e-15);
    }

    #[test]
    fn dimacs_round_trip(seed in any::<u64>()) {
        let c = case(seed);
        prop_assert_eq!(parse_dimacs(&render_dimacs(&c.inst)).unwrap(), c.inst);
    }

    #[test]
    fn schedule_csv_round_trip_is_exact(seed in any::<u64>(), t_f in 0.1..20.0f64, grid in 2usize..40) {
        let mut rng = substream(seed, stream::TEST, 2);
        let n = rng.random_range(1..=4usize);
        let tracks: Vec<Vec<f64>> = (0..n).map(|_| (0..grid).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let sched = Schedule::from_tracks(Schedule::uniform_grid(t_f, grid).unwrap(), &tracks).unwrap();
        let text = schedule_table(&sched, true).to_csv().unwrap();
        let back = schedule_from_table(&Table::from_csv(&text).unwrap(), n).unwrap();
        prop_assert_eq!(back, sched);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lindblad_traces_stay_physical(seed in any::<u64>(), t_f in 0.2..3.0f64, tau in 0.3..3.0f64) {
        let c = case(seed);
        let n = c.inst.n();
        let mut rng = substream(seed, stream::TEST, 3);
        let slopes: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let sched = Schedule::from_fn(t_f, 8, |t| slopes.iter().map(|s| s * t).collect()).unwrap();
        let cfg = MeasurementConfig::new(0.01, tau, RateShare::PerClause1OverM).unwrap();
        let trace = evolve_lindblad(&c.rho, &c.inst, &sched, &cfg).unwrap();
        let last = trace.final_state().matrix();
        prop_assert!((last.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(min_eigenvalue(last) > -1e-10);
        prop_assert!(trace.fidelity.iter().all(|&f| (-1e-10..=1.0 + 1e-10).contains(&f)));
        // Dephasing cannot raise purity.
        prop_assert!(trace.purity.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    }
}
