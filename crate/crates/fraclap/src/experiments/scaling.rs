//! Scaling invariance of the first eigenvalue: on congruent grids,
//! `ell^{2s} * lambda(ell U)` is independent of `ell`.

use crate::config::ExperimentConfig;
use crate::report::{cell, num, Assertion, ExperimentReport};
use anyhow::Result;
use fraclap_core::forms::NonlocalForm;
use fraclap_core::solvers::smallest_eigenpair;
use fraclap_core::weights::FractionalOrder;
use rayon::prelude::*;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new("scaling", cfg);
    let base_grid = cfg.omega_grid()?;

    let mut orders = cfg.orders()?;
    if cfg.include_local_baseline {
        orders.push(FractionalOrder::local_baseline());
    }

    let jobs: Vec<(FractionalOrder, f64)> = orders
        .iter()
        .flat_map(|&o| cfg.ell_values.iter().map(move |&l| (o, l)))
        .collect();
    let results: Vec<(f64, f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(o, ell)| -> Result<_> {
            let grid = base_grid.scaled(ell)?;
            let form = NonlocalForm::full(o, grid)?;
            let lam = smallest_eigenpair(&form, cfg.tol_eig)?.value;
            let product = ell.powf(2.0 * o.value()) * lam;
            Ok((o.value(), ell, lam, product))
        })
        .collect::<Result<_>>()?;

    for &(s, ell, lam, product) in &results {
        report.cells.push(cell(&[
            ("s", num(s)),
            ("ell", num(ell)),
            ("hx", num(cfg.hx)),
            ("lambda", num(lam)),
            ("product", num(product)),
        ]));
    }

    for o in &orders {
        let s = o.value();
        let series: Vec<(f64, f64)> = results
            .iter()
            .filter(|r| r.0 == s)
            .map(|r| (r.1, r.3))
            .collect();
        let reference = series[0].1;
        for &(ell, product) in &series[1..] {
            report.push_assertion(Assertion::close(
                format!("eigenvalue-scaling-invariance s={s} ell={ell}"),
                product,
                reference,
                1e-10,
            ));
        }
        if o.is_local() {
            // the s = 1 product is the unscaled eigenvalue itself
            report.push_assertion(Assertion::close(
                "local-baseline-scaling-identity".to_string(),
                reference,
                results
                    .iter()
                    .find(|r| r.0 == s && r.1 == cfg.ell_values[0])
                    .map(|r| r.2 * cfg.ell_values[0].powi(2))
                    .unwrap_or(f64::NAN),
                1e-12,
            ));
        }
    }
    Ok(report)
}
