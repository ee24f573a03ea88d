//! Conjugate gradients and smallest-eigenpair computation for the
//! discrete forms.
//!
//! The L2 mass matrix is a multiple of the identity on a uniform grid,
//! so the generalized eigenproblem reduces to the plain nodal one: the
//! Rayleigh quotient energy / ||u||^2 equals the nodal quotient of the
//! strong-form operator.

use crate::error::{FraclapError, Result};
use crate::forms::NonlocalForm;
use crate::lattice::{l2_inner, l2_norm, GridFunction};
use std::time::{Duration, Instant};

pub const DEFAULT_CG_TOL: f64 = 1e-12;
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub elapsed: Duration,
}

/// Smallest eigenvalue and sign-normalized unit-L2 eigenvector of a form.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Smallest eigenvalue (units: length^{-2s}).
    pub value: f64,
    /// Unit L2 norm, nonnegative mean.
    pub vector: GridFunction,
    /// L2 norm of `A v - lambda v` (strong form, mass-weighted).
    pub residual: f64,
    /// Estimated distance to the second eigenvalue (positive gap certifies
    /// simplicity at this resolution).
    pub gap_estimate: f64,
}

fn nodal_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A u = rhs` (strong form, nodal) by conjugate gradients.
///
/// Stops when the nodal residual norm falls below `tol * ||rhs||`. On
/// stall the error carries the best iterate found.
pub fn cg_solve(
    form: &NonlocalForm,
    rhs: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, SolveReport)> {
    cg_solve_from(form, rhs, None, tol, max_iter)
}

/// `cg_solve` with a warm-start iterate.
pub fn cg_solve_from(
    form: &NonlocalForm,
    rhs: &GridFunction,
    start: Option<&GridFunction>,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, SolveReport)> {
    if !(tol > 0.0) {
        return Err(FraclapError::Config(format!(
            "cg tolerance must be positive, got {tol}"
        )));
    }
    let t0 = Instant::now();
    let rhs_norm = nodal_dot(rhs.values(), rhs.values()).sqrt();
    if rhs_norm == 0.0 {
        return Ok((
            GridFunction::zeros(rhs.grid().clone()),
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                elapsed: t0.elapsed(),
            },
        ));
    }

    let mut x = match start {
        Some(g) => g.clone(),
        None => GridFunction::zeros(rhs.grid().clone()),
    };
    let ax = form.apply(&x)?;
    let mut r: Vec<f64> = rhs
        .values()
        .iter()
        .zip(ax.values())
        .map(|(b, a)| b - a)
        .collect();
    let mut p = r.clone();
    let mut rr = nodal_dot(&r, &r);
    let target = tol * rhs_norm;

    let mut best = x.clone();
    let mut best_res = rr.sqrt();
    let mut iterations = 0;
    while rr.sqrt() > target {
        if iterations >= max_iter {
            return Err(FraclapError::CgStalled {
                iterations,
                relative_residual: best_res / rhs_norm,
                best_iterate: Box::new(best),
            });
        }
        let pg = GridFunction::new(rhs.grid().clone(), p.clone())?;
        let ap = form.apply(&pg)?;
        let pap = nodal_dot(&p, ap.values());
        if !(pap > 0.0) {
            return Err(FraclapError::Precision(format!(
                "cg search direction has non-positive curvature ({pap:.3e}); form is not positive definite"
            )));
        }
        let alpha = rr / pap;
        for ((xi, pi), (ri, api)) in x
            .values_mut()
            .iter_mut()
            .zip(&p)
            .zip(r.iter_mut().zip(ap.values()))
        {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rr_new = nodal_dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        iterations += 1;
        if rr.sqrt() < best_res {
            best_res = rr.sqrt();
            best = x.clone();
        }
    }
    Ok((
        x,
        SolveReport {
            iterations,
            relative_residual: rr.sqrt() / rhs_norm,
            elapsed: t0.elapsed(),
        },
    ))
}

/// One inverse-power sweep state: iterate, Rayleigh value.
fn rayleigh(form: &NonlocalForm, v: &GridFunction) -> Result<f64> {
    Ok(form.energy(v)? / l2_inner(v, v)?)
}

fn normalize(v: &mut GridFunction) {
    let n = l2_norm(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        for x in v.values_mut() {
            *x *= inv;
        }
    }
}

fn project_out(v: &mut GridFunction, dir: &GridFunction) {
    let c = nodal_dot(v.values(), dir.values()) / nodal_dot(dir.values(), dir.values());
    for (a, b) in v.values_mut().iter_mut().zip(dir.values()) {
        *a -= c * b;
    }
}

const MAX_OUTER: usize = 400;
const GAP_OUTER: usize = 60;

/// Smallest eigenpair by inverse power iteration with CG inner solves,
/// plus a deflated second-eigenvalue estimate for the spectral gap.
///
/// Start vector is the all-ones interior vector; eigenvector sign is
/// normalized to nonnegative mean.
pub fn smallest_eigenpair(form: &NonlocalForm, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(FraclapError::Config(format!(
            "eigenvalue tolerance must be positive, got {tol}"
        )));
    }
    let grid = form.grid().clone();
    let n = grid.node_count();
    let mut v = GridFunction::constant(grid.clone(), 1.0);
    normalize(&mut v);
    let mut lambda = rayleigh(form, &v)?;
    let max_cg = 20 * n + 100;
    let mut warm: Option<GridFunction> = None;
    let mut converged = false;
    // value converges twice as fast as the vector, so gate on both the
    // Rayleigh increment and the eigen-residual (sqrt(tol) * lambda)
    let res_target = tol.sqrt();
    for _ in 0..MAX_OUTER {
        let (w, _) = cg_solve_from(form, &v, warm.as_ref(), DEFAULT_CG_TOL, max_cg)?;
        let mut w_next = w.clone();
        warm = Some(w);
        normalize(&mut w_next);
        let lam_next = rayleigh(form, &w_next)?;
        let aw = form.apply(&w_next)?;
        let mut res = aw;
        res.add_scaled(-lam_next, &w_next)?;
        let res_norm = l2_norm(&res);
        let done = (lam_next - lambda).abs() <= tol * lam_next.abs()
            && res_norm <= res_target * lam_next.abs();
        v = w_next;
        lambda = lam_next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FraclapError::Convergence {
            iterations: MAX_OUTER,
            relative_residual: f64::NAN,
        });
    }

    // sign: nonnegative mean
    if v.values().iter().sum::<f64>() < 0.0 {
        for x in v.values_mut() {
            *x = -*x;
        }
    }
    normalize(&mut v);
    let av = form.apply(&v)?;
    let mut res = av.clone();
    res.add_scaled(-lambda, &v)?;
    let residual = l2_norm(&res);

    // deflated iteration for the second eigenvalue
    let mut u = GridFunction::new(grid.clone(), {
        // deterministic non-symmetric start so it overlaps the second mode
        (0..n).map(|j| ((j as f64) * 0.7391).sin() + 0.1).collect()
    })?;
    project_out(&mut u, &v);
    normalize(&mut u);
    let mut lambda2 = rayleigh(form, &u)?;
    let mut warm2: Option<GridFunction> = None;
    for _ in 0..GAP_OUTER {
        let (w, _) = cg_solve_from(form, &u, warm2.as_ref(), 1e-10, max_cg)?;
        let mut w_next = w.clone();
        warm2 = Some(w);
        project_out(&mut w_next, &v);
        normalize(&mut w_next);
        let lam_next = rayleigh(form, &w_next)?;
        let done = (lam_next - lambda2).abs() <= 1e-6 * lam_next.abs();
        u = w_next;
        lambda2 = lam_next;
        if done {
            break;
        }
    }

    Ok(EigenPair {
        value: lambda,
        vector: v,
        residual,
        gap_estimate: lambda2 - lambda,
    })
}

/// Exact smallest eigenvalue of the Kronecker-sum (tensor) form from the
/// factor eigenvalues.
pub fn tensor_min_eigenvalue(lambda_x: f64, lambda_t: f64) -> f64 {
    lambda_x + lambda_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{product_grid, LatticeGrid};
    use crate::weights::FractionalOrder;

    fn order(s: f64) -> FractionalOrder {
        FractionalOrder::new(s).unwrap()
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let g = LatticeGrid::interval(1.0, 15).unwrap();
        let form = NonlocalForm::full(order(0.5), g.clone()).unwrap();
        let (u, rep) = cg_solve(&form, &GridFunction::zeros(g), 1e-12, 100).unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn cg_recovers_known_solution() {
        let g = LatticeGrid::interval(1.0, 31).unwrap();
        let form = NonlocalForm::full(order(0.5), g.clone()).unwrap();
        let w = GridFunction::sample_1d(g, |x| x.cos() - x * x).unwrap();
        let rhs = form.apply(&w).unwrap();
        let (u, rep) = cg_solve(&form, &rhs, 1e-12, 10_000).unwrap();
        let err = l2_norm(&u.sub(&w).unwrap());
        assert!(err < 1e-9 * l2_norm(&w), "err {err}");
        assert!(rep.relative_residual <= 1e-12);
    }

    #[test]
    fn local_poisson_is_nodally_exact() {
        // f = 1 on (-1,1): u = (1 - x^2)/2, exact for the 3-point scheme
        let g = LatticeGrid::interval(1.0, 63).unwrap();
        let form = NonlocalForm::full(FractionalOrder::local_baseline(), g.clone()).unwrap();
        let rhs = GridFunction::constant(g.clone(), 1.0);
        let (u, _) = cg_solve(&form, &rhs, 1e-14, 10_000).unwrap();
        let exact = GridFunction::sample_1d(g, |x| 0.5 * (1.0 - x * x)).unwrap();
        let err = u
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn cg_stall_carries_best_iterate() {
        let g = LatticeGrid::interval(1.0, 31).unwrap();
        let form = NonlocalForm::full(order(0.5), g.clone()).unwrap();
        let rhs = GridFunction::constant(g, 1.0);
        match cg_solve(&form, &rhs, 1e-14, 2) {
            Err(FraclapError::CgStalled {
                iterations,
                best_iterate,
                ..
            }) => {
                assert_eq!(iterations, 2);
                assert!(best_iterate.values().iter().any(|&x| x != 0.0));
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn local_eigenvalue_closed_form() {
        let g = LatticeGrid::interval(1.0, 199).unwrap();
        let h = g.spacing()[0];
        let form = NonlocalForm::full(FractionalOrder::local_baseline(), g).unwrap();
        let pair = smallest_eigenpair(&form, DEFAULT_EIG_TOL).unwrap();
        let exact = (4.0 / (h * h)) * (std::f64::consts::PI * h / 4.0).sin().powi(2);
        let rel = (pair.value - exact).abs() / exact;
        assert!(rel < 1e-10, "rel {rel:.3e}");
        // h -> 0 limit is pi^2/4; at h = 0.01 agreement to O(h^2)
        assert!((pair.value - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-3);
    }

    #[test]
    fn eigenvector_positive_with_gap() {
        let gx = LatticeGrid::interval(1.0, 15).unwrap();
        let gt = LatticeGrid::interval(1.0, 11).unwrap();
        let g = product_grid(&gx, &gt).unwrap();
        for s in [0.25, 0.75] {
            let form = NonlocalForm::full(order(s), g.clone()).unwrap();
            let pair = smallest_eigenpair(&form, DEFAULT_EIG_TOL).unwrap();
            assert!(pair.vector.values().iter().all(|&x| x > 0.0), "s={s}");
            assert!(pair.gap_estimate > 0.0, "s={s}: gap {}", pair.gap_estimate);
            assert!((l2_norm(&pair.vector) - 1.0).abs() < 1e-12);
            let rq = rayleigh(&form, &pair.vector).unwrap();
            assert!((rq - pair.value).abs() <= 10.0 * DEFAULT_EIG_TOL * pair.value);
            assert!(
                pair.residual <= 1e-5 * pair.value * (1.0 + 1e-9),
                "residual {}",
                pair.residual
            );
        }
    }

    #[test]
    fn scaling_law_on_congruent_grids() {
        for s in [0.25, 0.5, 0.75] {
            let o = order(s);
            let g1 = LatticeGrid::interval(1.0, 63).unwrap();
            let base = smallest_eigenpair(&NonlocalForm::full(o, g1.clone()).unwrap(), 1e-11)
                .unwrap()
                .value;
            for ell in [2.0, 4.0] {
                let gl = g1.scaled(ell).unwrap();
                let lam = smallest_eigenpair(&NonlocalForm::full(o, gl).unwrap(), 1e-11)
                    .unwrap()
                    .value;
                let rel = (lam * ell.powf(2.0 * s) - base).abs() / base;
                assert!(rel < 1e-10, "s={s} ell={ell}: rel {rel:.3e}");
            }
        }
    }

    #[test]
    fn tensor_additivity_small() {
        let gx = LatticeGrid::interval(1.0, 15).unwrap();
        let gt = LatticeGrid::interval(1.0, 11).unwrap();
        let g = product_grid(&gx, &gt).unwrap();
        let o = order(0.5);
        let lx = smallest_eigenpair(&NonlocalForm::full(o, gx).unwrap(), 1e-11)
            .unwrap()
            .value;
        let lt = smallest_eigenpair(&NonlocalForm::full(o, gt).unwrap(), 1e-11)
            .unwrap()
            .value;
        let tensor = NonlocalForm::tensor(o, g).unwrap();
        let lam = smallest_eigenpair(&tensor, 1e-11).unwrap().value;
        let expect = tensor_min_eigenvalue(lx, lt);
        let rel = (lam - expect).abs() / expect;
        assert!(rel < 1e-10, "rel {rel:.3e}");
    }

    #[test]
    fn domain_monotonicity_in_ell() {
        let gx = LatticeGrid::interval(1.0, 15).unwrap();
        let o = order(0.5);
        let mut prev = f64::INFINITY;
        for ell in [1usize, 2, 4] {
            let nt = 16 * ell - 1;
            let gt = LatticeGrid::interval(ell as f64, nt).unwrap();
            let g = product_grid(&gx, &gt).unwrap();
            let lam = smallest_eigenpair(&NonlocalForm::full(o, g).unwrap(), 1e-10)
                .unwrap()
                .value;
            assert!(lam < prev, "ell={ell}: {lam} !< {prev}");
            prev = lam;
        }
    }
}
