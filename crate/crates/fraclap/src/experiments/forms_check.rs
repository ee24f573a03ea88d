//! Randomized verification of the exact discrete form inequalities:
//! split-energy bounds, slice bounds, the averaging chain, and the
//! section-eigenvalue (Poincare-type) lower bound for the rescaled
//! energy.

use crate::config::ExperimentConfig;
use crate::experiments::random_values;
use crate::report::{cell, num, Assertion, ExperimentReport};
use anyhow::Result;
use fraclap_core::forms::{scaled_energy, slice_energy_sum, NonlocalForm};
use fraclap_core::lattice::{l2_norm, product_grid, GridFunction};
use fraclap_core::reduction::average_rho;
use fraclap_core::solvers::smallest_eigenpair;
use rayon::prelude::*;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new("forms-check", cfg);
    let gx = cfg.omega_grid()?;
    let gt = cfg.t_unit_grid()?;
    let grid = product_grid(&gx, &gt)?;
    let t_measure = grid.nodes_per_axis()[1] as f64 * grid.spacing()[1];

    let orders = cfg.orders()?;
    let per_order: Vec<_> = orders
        .par_iter()
        .enumerate()
        .map(|(i, &o)| -> Result<_> {
            let s = o.value();
            let full = NonlocalForm::full(o, grid.clone())?;
            let tensor = NonlocalForm::tensor(o, grid.clone())?;
            let omega_form = NonlocalForm::full(o, gx.clone())?;
            let lambda_omega = smallest_eigenpair(&omega_form, cfg.tol_eig)?.value;

            // min relative slacks over the random sample
            let mut slk = [f64::INFINITY; 7];
            for v in 0..cfg.random_vectors {
                let u = GridFunction::new(
                    grid.clone(),
                    random_values(cfg.seed, (i * 100_000 + v) as u64, grid.node_count()),
                )?;
                let e = full.energy(&u)?;
                let te = tensor.energy(&u)?;
                let sx = slice_energy_sum(o, &u, 0)?;
                let st = slice_energy_sum(o, &u, 1)?;
                let scale = te.max(1e-300);
                slk[0] = slk[0].min((te - e) / scale);
                slk[1] = slk[1].min((e - 2f64.powf(s - 1.0) * te) / scale);
                slk[2] = slk[2].min((e - sx) / scale);
                slk[3] = slk[3].min((e - st) / scale);

                let rho = average_rho(&u)?;
                let lhs = omega_form.energy(&rho)?;
                let mid = sx / t_measure;
                let rhs = scaled_energy(o, &u, 1.0)?;
                slk[4] = slk[4].min((mid - lhs) / scale);
                slk[5] = slk[5].min((rhs - mid) / scale);

                let mass = l2_norm(&u).powi(2) / t_measure;
                for &ell in &cfg.ell_values {
                    let el = scaled_energy(o, &u, ell)?;
                    slk[6] = slk[6].min((el - lambda_omega * mass) / scale);
                }
            }

            // degenerate rows: zero and t-independent vectors
            let zero = GridFunction::zeros(grid.clone());
            let zero_energy = full.energy(&zero)?;
            let flat = GridFunction::sample_2d(grid.clone(), |x, _| (1.0 - x * x).max(0.0))?;
            let flat_t_part = slice_energy_sum(o, &flat, 1)?;

            Ok((s, slk, zero_energy, flat_t_part))
        })
        .collect::<Result<_>>()?;

    for &(s, slk, zero_energy, flat_t_part) in &per_order {
        report.cells.push(cell(&[
            ("s", num(s)),
            ("vectors", num(cfg.random_vectors as f64)),
            ("min_slack_split_upper", num(slk[0])),
            ("min_slack_split_lower", num(slk[1])),
            ("min_slack_slice_x", num(slk[2])),
            ("min_slack_slice_t", num(slk[3])),
            ("min_slack_average", num(slk[4])),
            ("min_slack_mean_slice", num(slk[5])),
            ("min_slack_poincare", num(slk[6])),
            ("zero_vector_energy", num(zero_energy)),
            ("t_independent_t_part", num(flat_t_part)),
        ]));
        let tight = [
            ("split-energy-upper-bound", slk[0], 1e-12),
            ("split-energy-lower-bound", slk[1], 1e-12),
            ("slice-x-below-full", slk[2], 1e-12),
            ("slice-t-below-full", slk[3], 1e-12),
            ("average-below-mean-slice", slk[4], 1e-10),
            ("mean-slice-below-rescaled", slk[5], 1e-10),
            ("rescaled-poincare-lower-bound", slk[6], 1e-10),
        ];
        for (name, min_slack, tol) in tight {
            report.push_assertion(Assertion::ineq(
                format!("{name} s={s}"),
                -min_slack,
                0.0,
                tol,
            ));
        }
        report.push_assertion(Assertion::fact(
            format!("zero-vector-energy-vanishes s={s}"),
            zero_energy == 0.0,
            zero_energy,
            0.0,
        ));
    }
    Ok(report)
}
