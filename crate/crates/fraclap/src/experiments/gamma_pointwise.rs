//! Pointwise limit behaviour of the rescaled energies: for a fixed test
//! vector the split energy obeys an exact `ell^{-2s}` law, both
//! rescaled energies decrease in `ell`, and they squeeze the limit
//! energy from above.

use crate::config::ExperimentConfig;
use crate::experiments::random_values;
use crate::report::{cell, num, Assertion, ExperimentReport};
use anyhow::Result;
use fraclap_core::forms::{scaled_energy, scaled_tensor_energy};
use fraclap_core::lattice::{product_grid, GridFunction};

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new("gamma-pointwise", cfg);
    let gx = cfg.omega_grid()?;
    let gt = cfg.t_unit_grid()?;
    let grid = product_grid(&gx, &gt)?;

    for (i, &o) in cfg.orders()?.iter().enumerate() {
        let s = o.value();
        let u = GridFunction::new(
            grid.clone(),
            random_values(cfg.seed, 7_000_000 + i as u64, grid.node_count()),
        )?;
        let e_limit = scaled_tensor_energy(o, &u, f64::INFINITY)?;

        let mut series = Vec::new();
        for &ell in &cfg.ell_values {
            let e_split = scaled_tensor_energy(o, &u, ell)?;
            let e_full = scaled_energy(o, &u, ell)?;
            report.cells.push(cell(&[
                ("s", num(s)),
                ("ell", num(ell)),
                ("e_split", num(e_split)),
                ("e_full", num(e_full)),
                ("e_limit", num(e_limit)),
            ]));
            report.push_assertion(Assertion::ineq(
                format!("limit-below-rescaled s={s} ell={ell}"),
                e_limit,
                e_full,
                1e-12,
            ));
            report.push_assertion(Assertion::ineq(
                format!("rescaled-below-split s={s} ell={ell}"),
                e_full,
                e_split,
                1e-12,
            ));
            series.push((ell, e_split, e_full));
        }

        // the split excess over the limit is an exact power law
        let reference = (series[0].1 - e_limit) * series[0].0.powf(2.0 * s);
        for &(ell, e_split, _) in &series[1..] {
            report.push_assertion(Assertion::close(
                format!("split-excess-power-law s={s} ell={ell}"),
                (e_split - e_limit) * ell.powf(2.0 * s),
                reference,
                1e-12,
            ));
        }
        for pair in series.windows(2) {
            report.push_assertion(Assertion::fact(
                format!(
                    "rescaled-energy-decreasing s={s} ell={}->{}",
                    pair[0].0, pair[1].0
                ),
                pair[1].2 < pair[0].2,
                pair[1].2,
                pair[0].2,
            ));
            report.push_assertion(Assertion::fact(
                format!(
                    "split-energy-decreasing s={s} ell={}->{}",
                    pair[0].0, pair[1].0
                ),
                pair[1].1 < pair[0].1,
                pair[1].1,
                pair[0].1,
            ));
        }
    }
    Ok(report)
}
