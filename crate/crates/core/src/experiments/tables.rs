//! Table builders shared by the CLI subcommands and the figure pipelines.

use nalgebra::DMatrix;

use super::Table;
use crate::bounds::DragPlan;
use crate::dynamics::{EnsembleSummary, Schedule};
use crate::error::{Error, Result};
use crate::operators::{cost_operator, AxisVector};
use crate::sat::SatInstance;

/// θ, every eigenvalue of Ô(θ) in ascending order, and the gap, on `points` equally spaced angles.
pub fn spectrum_table(instance: &SatInstance, points: usize, range: (f64, f64)) -> Result<Table> {
    if points < 2 {
        return Err(Error::InvalidParameter("spectrum needs at least two points".into()));
    }
    let mut header = vec!["theta[rad]".to_string()];
    header.extend((0..instance.dim()).map(|i| format!("lambda_{i}[1]")));
    header.push("gap[1]".into());
    let mut t = Table::new(header);
    for k in 0..points {
        let th = range.0 + (range.1 - range.0) * k as f64 / (points - 1) as f64;
        let op = cost_operator(instance, &AxisVector::uniform(instance.n(), th)?)?;
        let mut row = vec![th];
        row.extend(&op.eigenvalues);
        row.push(op.gap);
        t.push(row);
    }
    Ok(t)
}

/// `t, theta` for a shared track, `t, theta_1..theta_n` otherwise.
pub fn schedule_table(schedule: &Schedule, per_qubit: bool) -> Table {
    let n = schedule.n();
    let mut header = vec!["t[tau]".to_string()];
    if per_qubit {
        header.extend((1..=n).map(|q| format!("theta_{q}[rad]")));
    } else {
        header.push("theta[rad]".into());
    }
    let mut t = Table::new(header);
    for (j, &time) in schedule.times().iter().enumerate() {
        let th = schedule.axes()[j].thetas();
        let mut row = vec![time];
        if per_qubit {
            row.extend(th);
        } else {
            row.push(th[0]);
        }
        t.push(row);
    }
    t
}

/// Inverse of [`schedule_table`]; a single `theta` column is broadcast to all n qubits.
pub fn schedule_from_table(table: &Table, n: usize) -> Result<Schedule> {
    let times = table.column("t").ok_or_else(|| Error::Csv("schedule CSV needs a 't' column".into()))?;
    let tracks: Vec<Vec<f64>> = if let Some(th) = table.column("theta") {
        vec![th; n]
    } else {
        (1..=n)
            .map(|q| {
                table.column(&format!("theta_{q}")).ok_or_else(|| Error::Csv(format!("schedule CSV lacks theta_{q}")))
            })
            .collect::<Result<_>>()?
    };
    Schedule::from_tracks(times, &tracks)
}

/// `t, r_1..r_m` from an m × N readout matrix.
pub fn readout_table(times: &[f64], readouts: &DMatrix<f64>) -> Result<Table> {
    if readouts.ncols() != times.len() {
        return Err(Error::InvalidParameter("readout columns differ from the time grid".into()));
    }
    let mut header = vec!["t[tau]".to_string()];
    header.extend((1..=readouts.nrows()).map(|a| format!("r_{a}[1/sqrt(tau)]")));
    let mut t = Table::new(header);
    for (j, &time) in times.iter().enumerate() {
        let mut row = vec![time];
        row.extend(readouts.column(j).iter());
        t.push(row);
    }
    Ok(t)
}

pub fn trace_table(times: &[f64], fidelity: &[f64], purity: &[f64]) -> Table {
    let mut t = Table::new(["t[tau]", "fidelity[1]", "purity[1]"]);
    for ((&a, &f), &p) in times.iter().zip(fidelity).zip(purity) {
        t.push(vec![a, f, p]);
    }
    t
}

pub fn shots_table(finals: &[f64]) -> Table {
    let mut t = Table::new(["shot[1]", "fidelity[1]"]);
    for (i, &f) in finals.iter().enumerate() {
        t.push(vec![i as f64, f]);
    }
    t
}

pub fn histogram_table(summary: &EnsembleSummary) -> Table {
    let mut t = Table::new(["lo[1]", "hi[1]", "count[1]"]);
    for b in &summary.histogram {
        t.push(vec![b.lo, b.hi, b.count as f64]);
    }
    t
}

/// Per-step plan: `k, theta_k, G, M_k`.
pub fn plan_table(plan: &DragPlan) -> Table {
    let mut t = Table::new(["k[1]", "theta_k[rad]", "G[1]", "M_k[1]"]);
    for (k, ((&th, &g), &m)) in plan.thetas.iter().zip(&plan.gaps).zip(&plan.m_per_step).enumerate() {
        t.push(vec![(k + 1) as f64, th, g, m as f64]);
    }
    t
}

/// `t, theta_mlp, theta_lindblad` from analytic samples.
pub fn qubit_analytic_table(samples: &[(f64, f64, f64)]) -> Table {
    let mut t = Table::new(["t[tau]", "theta_mlp[rad]", "theta_lindblad[rad]"]);
    for &(a, b, c) in samples {
        t.push(vec![a, b, c]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{generate_instance, InstanceKind};

    #[test]
    fn schedule_table_round_trip() {
        let s = Schedule::from_fn(2.0, 5, |t| vec![0.1 + t, 0.2, -0.3 * t]).unwrap();
        let t = schedule_table(&s, true);
        assert_eq!(t.header, ["t[tau]", "theta_1[rad]", "theta_2[rad]", "theta_3[rad]"]);
        let back = schedule_from_table(&Table::from_csv(&t.to_csv().unwrap()).unwrap(), 3).unwrap();
        assert_eq!(back, s);
        let shared =
            schedule_from_table(&schedule_table(&Schedule::linear(3, 1.0, 4, 0.0).unwrap(), false), 3).unwrap();
        assert_eq!(shared, Schedule::linear(3, 1.0, 4, 0.0).unwrap());
    }

    #[test]
    fn spectrum_columns() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let t = spectrum_table(&inst, 3, (0.2, 1.5)).unwrap();
        assert_eq!(t.header.len(), 1 + 4 + 1);
        assert_eq!(t.header[5], "gap[1]");
        for row in &t.rows {
            assert!(row[1].abs() < 1e-12);
            assert!(row[1..5].windows(2).all(|w| w[0] <= w[1] + 1e-12));
        }
    }
}
