//! The eigenvalue sandwich on the growing cylinder: the section
//! eigenvalue bounds from below, the split (Kronecker) bound from
//! above, and the gap follows the `ell^{-2s}` envelope.

use crate::config::ExperimentConfig;
use crate::report::{cell, num, Assertion, ExperimentReport};
use anyhow::Result;
use fraclap_core::forms::NonlocalForm;
use fraclap_core::lattice::{product_grid, LatticeGrid};
use fraclap_core::oracles::local_baseline_lambda;
use fraclap_core::solvers::smallest_eigenpair;
use fraclap_core::weights::FractionalOrder;
use rayon::prelude::*;

struct Row {
    s: f64,
    ell: f64,
    lambda_omega: f64,
    lambda_b1: f64,
    lambda_cyl: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new("sandwich", cfg);
    let gx = cfg.omega_grid()?;
    let gb1 = cfg.t_unit_grid()?;
    let ht = cfg.ht();

    let orders = cfg.orders()?;
    // 1-D factor eigenvalues once per order
    let factors: Vec<(f64, f64, f64)> = orders
        .par_iter()
        .map(|&o| -> Result<_> {
            let lx = smallest_eigenpair(&NonlocalForm::full(o, gx.clone())?, cfg.tol_eig)?.value;
            let lt = smallest_eigenpair(&NonlocalForm::full(o, gb1.clone())?, cfg.tol_eig)?.value;
            Ok((o.value(), lx, lt))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(FractionalOrder, f64)> = orders
        .iter()
        .flat_map(|&o| cfg.ell_values.iter().map(move |&l| (o, l)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(o, ell)| -> Result<Row> {
            let s = o.value();
            let gt = LatticeGrid::interval(ell, ExperimentConfig::nodes_for(ell, ht))?;
            let grid = product_grid(&gx, &gt)?;
            let form = NonlocalForm::full(o, grid)?;
            let lam = smallest_eigenpair(&form, cfg.tol_eig)?.value;
            let &(_, lx, lt) = factors.iter().find(|f| f.0 == s).unwrap();
            Ok(Row {
                s,
                ell,
                lambda_omega: lx,
                lambda_b1: lt,
                lambda_cyl: lam,
            })
        })
        .collect::<Result<_>>()?;

    for r in &rows {
        let envelope = r.lambda_b1 * r.ell.powf(-2.0 * r.s);
        report.cells.push(cell(&[
            ("s", num(r.s)),
            ("ell", num(r.ell)),
            ("hx", num(cfg.hx)),
            ("ht", num(ht)),
            ("lambda_omega", num(r.lambda_omega)),
            ("lambda_B1", num(r.lambda_b1)),
            ("lambda_Omega", num(r.lambda_cyl)),
            ("lower_slack", num(r.lambda_cyl - r.lambda_omega)),
            ("upper_slack", num(r.lambda_omega + envelope - r.lambda_cyl)),
            ("gap", num(r.lambda_cyl - r.lambda_omega)),
            ("envelope", num(envelope)),
        ]));
        report.push_assertion(Assertion::ineq(
            format!("sandwich-lower-bound s={} ell={}", r.s, r.ell),
            r.lambda_omega,
            r.lambda_cyl,
            1e-10,
        ));
        report.push_assertion(Assertion::ineq(
            format!("sandwich-upper-bound s={} ell={}", r.s, r.ell),
            r.lambda_cyl,
            r.lambda_omega + envelope,
            1e-10,
        ));
    }

    for o in &orders {
        let s = o.value();
        let mut series: Vec<&Row> = rows.iter().filter(|r| r.s == s).collect();
        series.sort_by(|a, b| a.ell.partial_cmp(&b.ell).unwrap());
        for pair in series.windows(2) {
            let g0 = pair[0].lambda_cyl - pair[0].lambda_omega;
            let g1 = pair[1].lambda_cyl - pair[1].lambda_omega;
            report.push_assertion(Assertion::fact(
                format!(
                    "eigenvalue-gap-strictly-decreasing s={s} ell={}->{}",
                    pair[0].ell, pair[1].ell
                ),
                g1 < g0,
                g1,
                g0,
            ));
        }
        if series.len() >= 2 {
            let first = series.first().unwrap();
            let last = series.last().unwrap();
            let ratio = (last.lambda_cyl - last.lambda_omega)
                / (first.lambda_cyl - first.lambda_omega);
            let envelope_ratio = (last.ell / first.ell).powf(-2.0 * s);
            report.push_assertion(Assertion::ineq(
                format!("gap-follows-envelope s={s}"),
                ratio,
                envelope_ratio * 1.05,
                0.0,
            ));
        }
    }

    if cfg.include_local_baseline {
        // classical identity: the split operator's gap is exactly the
        // scaled cross-section eigenvalue
        let o = FractionalOrder::local_baseline();
        let lx = local_baseline_lambda(&gx)?;
        let lb = local_baseline_lambda(&gb1)?;
        for &ell in &cfg.ell_values {
            let gt = LatticeGrid::interval(ell, ExperimentConfig::nodes_for(ell, ht))?;
            let grid = product_grid(&gx, &gt)?;
            let tensor = NonlocalForm::tensor(o, grid)?;
            let lam = smallest_eigenpair(&tensor, cfg.tol_eig)?.value;
            let lt_scaled = local_baseline_lambda(&gt)?;
            report.cells.push(cell(&[
                ("s", num(1.0)),
                ("ell", num(ell)),
                ("hx", num(cfg.hx)),
                ("ht", num(ht)),
                ("lambda_omega", num(lx)),
                ("lambda_B1", num(lb)),
                ("lambda_Omega", num(lam)),
                ("lower_slack", num(lam - lx)),
                ("upper_slack", num(lx + lt_scaled - lam)),
                ("gap", num(lam - lx)),
                ("envelope", num(lt_scaled)),
            ]));
            report.push_assertion(Assertion::close(
                format!("local-split-gap-identity ell={ell}"),
                lam - lx,
                lt_scaled,
                1e-9,
            ));
        }
    }
    Ok(report)
}
