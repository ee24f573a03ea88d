//! Dimension reduction: the averaged cylinder solution converges to the
//! section solution as the cylinder grows, and the rescaled minima
//! converge to the limit minimum.

use crate::config::ExperimentConfig;
use crate::report::{cell, num, Assertion, ExperimentReport};
use anyhow::Result;
use fraclap_core::lattice::{l2_norm, GridFunction};
use fraclap_core::reduction::{
    functional_i, reduction_error, solve_dirichlet_cylinder, solve_dirichlet_section, unstretch,
};
use fraclap_core::weights::FractionalOrder;
use rayon::prelude::*;

struct Row {
    s: f64,
    ell: f64,
    hs_error: f64,
    l2_error: f64,
    m_breve: f64,
    m_inf: f64,
    load_residual: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new("reduction", cfg);
    let gx = cfg.omega_grid()?;
    let ht = cfg.ht();
    let load = cfg.load_spec()?;
    let orders = cfg.orders()?;

    let limits: Vec<(f64, GridFunction, f64)> = orders
        .par_iter()
        .map(|&o| -> Result<_> {
            let u_inf = solve_dirichlet_section(o, &gx, &load, cfg.tol_cg)?;
            let m_inf = functional_i(o, f64::INFINITY, &u_inf, &load)?;
            Ok((o.value(), u_inf, m_inf))
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
            let (_, u_inf, m_inf) = limits.iter().find(|l| l.0 == s).unwrap();
            let u_ell = solve_dirichlet_cylinder(o, &gx, ell, ht, &load, cfg.tol_cg)?;
            let (hs_error, l2_error) = reduction_error(o, &u_ell, u_inf)?;
            let v = unstretch(&u_ell, ell)?;
            let m_breve = functional_i(o, ell, &v, &load)?;
            let f_breve = load.sample_breve(o, v.grid(), ell)?;
            let f_inf_2d = load.sample_breve(o, v.grid(), f64::INFINITY)?;
            let load_residual = l2_norm(&f_breve.sub(&f_inf_2d)?);
            Ok(Row {
                s,
                ell,
                hs_error,
                l2_error,
                m_breve,
                m_inf: *m_inf,
                load_residual,
            })
        })
        .collect::<Result<_>>()?;

    for r in &rows {
        report.cells.push(cell(&[
            ("s", num(r.s)),
            ("ell", num(r.ell)),
            ("hs_error", num(r.hs_error)),
            ("l2_error", num(r.l2_error)),
            ("m_breve", num(r.m_breve)),
            ("m_inf", num(r.m_inf)),
            ("load_residual", num(r.load_residual)),
        ]));
    }

    for o in &orders {
        let s = o.value();
        let mut series: Vec<&Row> = rows.iter().filter(|r| r.s == s).collect();
        series.sort_by(|a, b| a.ell.partial_cmp(&b.ell).unwrap());
        for pair in series.windows(2) {
            report.push_assertion(Assertion::fact(
                format!(
                    "averaged-solution-error-decreasing s={s} ell={}->{}",
                    pair[0].ell, pair[1].ell
                ),
                pair[1].hs_error < pair[0].hs_error,
                pair[1].hs_error,
                pair[0].hs_error,
            ));
            report.push_assertion(Assertion::fact(
                format!(
                    "minimum-gap-decreasing s={s} ell={}->{}",
                    pair[0].ell, pair[1].ell
                ),
                (pair[1].m_breve - pair[1].m_inf).abs()
                    <= (pair[0].m_breve - pair[0].m_inf).abs(),
                (pair[1].m_breve - pair[1].m_inf).abs(),
                (pair[0].m_breve - pair[0].m_inf).abs(),
            ));
        }
        if series.len() >= 2 {
            let first = series.first().unwrap();
            let last = series.last().unwrap();
            report.push_assertion(Assertion::ineq(
                format!("error-contraction-factor-four s={s}"),
                last.hs_error,
                first.hs_error / 4.0,
                0.0,
            ));
        }
    }
    Ok(report)
}
