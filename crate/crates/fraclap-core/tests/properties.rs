//! Property-based checks of the structural invariants: stencil sign
//! pattern, symbol-inequality exactness on random data, homogeneity,
//! and solver consistency.

use fraclap_core::forms::{scaled_energy, slice_energy_sum, NonlocalForm};
use fraclap_core::lattice::{l2_norm, product_grid, GridFunction, LatticeGrid};
use fraclap_core::oracles::tail_kappa;
use fraclap_core::reduction::average_rho;
use fraclap_core::solvers::cg_solve;
use fraclap_core::weights::{closed_form_weights_1d, sampled_weights, FractionalOrder};
use proptest::prelude::*;

fn order(s: f64) -> FractionalOrder {
    FractionalOrder::new(s).unwrap()
}

fn grid_fn(grid: std::sync::Arc<LatticeGrid>, vals: Vec<f64>) -> GridFunction {
    GridFunction::new(grid, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stencil_signs_and_symmetry(
        s in 0.05f64..0.95,
        h in 0.05f64..4.0,
        r in 2usize..12,
    ) {
        let st = sampled_weights(order(s), &[h], &[r], 4).unwrap();
        prop_assert!(st.weight(&[0]) > 0.0);
        let mut sum = st.weight(&[0]);
        for m in 1..=r as isize {
            let w = st.weight(&[m]);
            prop_assert!(w < 0.0);
            prop_assert_eq!(w, st.weight(&[-m]));
            sum += 2.0 * w;
        }
        prop_assert!(sum >= -1e-12 * st.weight(&[0]));
    }

    #[test]
    fn closed_form_kernel_monotone_decay(s in 0.05f64..0.95) {
        let o = order(s);
        let mut prev = closed_form_weights_1d(o, 1).unwrap().abs();
        for m in 2..40 {
            let cur = closed_form_weights_1d(o, m).unwrap().abs();
            prop_assert!(cur < prev, "m={}: {} !< {}", m, cur, prev);
            prev = cur;
        }
    }

    #[test]
    fn kappa_positive_and_decreasing_toward_center(s in 0.05f64..0.95) {
        let o = order(s);
        let k_mid = tail_kappa(0.0, (-1.0, 1.0), o).unwrap();
        let k_off = tail_kappa(0.7, (-1.0, 1.0), o).unwrap();
        prop_assert!(k_mid > 0.0);
        prop_assert!(k_off > k_mid);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn split_energy_inequalities_random(
        s in 0.1f64..0.9,
        nx in 4usize..10,
        nt in 4usize..10,
        seed in 0u64..1000,
    ) {
        let gx = LatticeGrid::interval(1.0, nx).unwrap();
        let gt = LatticeGrid::interval(1.0, nt).unwrap();
        let g = product_grid(&gx, &gt).unwrap();
        let o = order(s);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = grid_fn(g.clone(), vals);
        let full = NonlocalForm::full(o, g.clone()).unwrap();
        let tensor = NonlocalForm::tensor(o, g.clone()).unwrap();
        let e = full.energy(&u).unwrap();
        let te = tensor.energy(&u).unwrap();
        prop_assert!(e <= te * (1.0 + 1e-12));
        prop_assert!(e >= 2f64.powf(s - 1.0) * te * (1.0 - 1e-12));
        for axis in 0..2 {
            let se = slice_energy_sum(o, &u, axis).unwrap();
            prop_assert!(se <= e * (1.0 + 1e-12));
        }
        // averaging chain
        let omega_form = NonlocalForm::full(o, average_rho(&u).unwrap().grid().clone()).unwrap();
        let lhs = omega_form.energy(&average_rho(&u).unwrap()).unwrap();
        let t_measure = g.nodes_per_axis()[1] as f64 * g.spacing()[1];
        let mid = slice_energy_sum(o, &u, 0).unwrap() / t_measure;
        let rhs = scaled_energy(o, &u, 1.0).unwrap();
        prop_assert!(lhs <= mid * (1.0 + 1e-12));
        prop_assert!(mid <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn cg_consistency_random(
        s in 0.1f64..0.9,
        n in 6usize..20,
        seed in 0u64..1000,
    ) {
        let g = LatticeGrid::interval(1.0, n).unwrap();
        let o = order(s);
        let form = NonlocalForm::full(o, g.clone()).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = grid_fn(g, vals);
        let rhs = form.apply(&w).unwrap();
        let (u, _) = cg_solve(&form, &rhs, 1e-13, 100 * n).unwrap();
        let err = l2_norm(&u.sub(&w).unwrap());
        prop_assert!(err <= 1e-8 * l2_norm(&w).max(1e-300), "err {}", err);
    }

    #[test]
    fn scaled_energy_homogeneous_grids(
        s in 0.1f64..0.9,
        seed in 0u64..1000,
    ) {
        // energy on a grid scaled by c equals c^{1-2s} times the original (1-D)
        let o = order(s);
        let g = LatticeGrid::interval(1.0, 12).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = grid_fn(g.clone(), vals.clone());
        let c = 3.0;
        let gs = g.scaled(c).unwrap();
        let us = grid_fn(gs.clone(), vals);
        let e = NonlocalForm::full(o, g).unwrap().energy(&u).unwrap();
        let es = NonlocalForm::full(o, gs).unwrap().energy(&us).unwrap();
        let expect = c.powf(1.0 - 2.0 * s) * e;
        prop_assert!((es - expect).abs() <= 1e-11 * expect.abs(), "{} vs {}", es, expect);
    }
}
