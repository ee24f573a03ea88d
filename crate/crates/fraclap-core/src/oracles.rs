//! Reference computations independent of the lattice scheme: Fourier-side
//! energies, a Monte-Carlo estimate of the singular-integral (Gagliardo)
//! form, the 1-D exterior tail potential, and the local (s = 1) baseline
//! eigenvalue. These validate the stencil discretization from the outside.

use crate::error::{FraclapError, Result};
use crate::lattice::LatticeGrid;
use crate::weights::FractionalOrder;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma, ln_gamma};

/// Smooth test functions with known structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticFunction {
    /// `exp(-x^2/2)`; unitary Fourier transform `exp(-xi^2/2)`, energy
    /// `Gamma(s + 1/2)` in closed form.
    Gaussian,
    /// `exp(1 - 1/(1 - x^2))` on (-1,1), zero outside; compactly
    /// supported, no closed-form energy.
    Bump,
}

impl AnalyticFunction {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Bump => "bump",
        }
    }

    pub fn evaluate(self, x: f64) -> f64 {
        match self {
            Self::Gaussian => (-0.5 * x * x).exp(),
            Self::Bump => {
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed-form value of the order-s energy, when available.
    pub fn closed_form_energy(self, s: f64) -> Option<f64> {
        match self {
            // int |xi|^{2s} e^{-xi^2} dxi = Gamma(s + 1/2)
            Self::Gaussian => Some(gamma(s + 0.5)),
            Self::Bump => None,
        }
    }

    /// A box containing (numerically) all of the support.
    pub fn support_box(self) -> (f64, f64) {
        match self {
            Self::Gaussian => (-12.0, 12.0),
            Self::Bump => (-1.0, 1.0),
        }
    }

    /// Unitary Fourier transform at `xi`; analytic for the Gaussian,
    /// numeric quadrature over the support otherwise.
    fn fourier_transform(self, xi: f64) -> f64 {
        match self {
            Self::Gaussian => (-0.5 * xi * xi).exp(),
            Self::Bump => {
                let g = |x: f64| self.evaluate(x) * (x * xi).cos();
                quad_tanh_sinh(&g, -1.0, 1.0, 9) / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
    }
}

/// Tanh-sinh quadrature of `f` over `(a, b)`; `levels` halvings of the
/// step (9 gives ~500 nodes, enough for 1e-12 on smooth or
/// endpoint-singular integrands).
fn quad_tanh_sinh(f: &dyn Fn(f64) -> f64, a: f64, b: f64, levels: u32) -> f64 {
    let h = 4.0 / (1 << levels) as f64;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let n = (4.0 / h).ceil() as i64;
    for k in -n..=n {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let y = u.tanh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let x = mid + half * y;
        if x > a && x < b {
            let v = f(x);
            if v.is_finite() {
                sum += w * v;
            }
        }
    }
    sum * half * h
}

/// Fourier-side energy `int_{-cutoff}^{cutoff} |xi|^{2s} |f^(xi)|^2 dxi`,
/// with a tail check: the contribution of `[cutoff, 2 cutoff]` must be
/// below 1e-10 of the total, otherwise the cutoff is rejected.
pub fn fourier_energy(
    f: AnalyticFunction,
    order: FractionalOrder,
    cutoff: f64,
    quad_points: usize,
) -> Result<f64> {
    if !(cutoff > 0.0) {
        return Err(FraclapError::Config(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    if quad_points < 32 {
        return Err(FraclapError::Config(format!(
            "need at least 32 quadrature points, got {quad_points}"
        )));
    }
    let s = order.value();
    let integrand = |xi: f64| {
        let ft = f.fourier_transform(xi);
        xi.powf(2.0 * s) * ft * ft
    };
    let levels = (quad_points as f64).log2().ceil().max(6.0) as u32;
    // even integrand: integrate (0, cutoff) and double
    let main = 2.0 * quad_tanh_sinh(&integrand, 0.0, cutoff, levels);
    let tail = 2.0 * quad_tanh_sinh(&integrand, cutoff, 2.0 * cutoff, levels);
    if tail.abs() > 1e-10 * main.abs().max(f64::MIN_POSITIVE) {
        return Err(FraclapError::Precision(format!(
            "spectral tail beyond cutoff {cutoff} is {tail:.3e} (total {main:.3e}); enlarge the cutoff"
        )));
    }
    Ok(main + tail)
}

/// The Gagliardo normalization `C_{d,s} = s 2^{2s} Gamma((d+2s)/2) /
/// (Gamma(1-s) pi^{d/2})`.
pub fn gagliardo_constant(d: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(FraclapError::Domain(format!(
            "Gagliardo constant needs s in (0,1), got {s}"
        )));
    }
    if d == 0 {
        return Err(FraclapError::Domain("dimension must be positive".into()));
    }
    let df = d as f64;
    let log = (2.0 * s) * 2f64.ln() + ln_gamma(df / 2.0 + s)
        - ln_gamma(1.0 - s)
        - 0.5 * df * std::f64::consts::PI.ln();
    Ok(s * log.exp())
}

/// Exterior mass of the Gagliardo kernel seen from an interior point:
/// `int_{R \ (a,b)} |x - y|^{-1-2s} dy = ((x-a)^{-2s} + (b-x)^{-2s}) / (2s)`.
pub fn tail_kappa(x: f64, interval: (f64, f64), order: FractionalOrder) -> Result<f64> {
    let (a, b) = interval;
    let s = order.value();
    if !(s > 0.0 && s < 1.0) {
        return Err(FraclapError::Domain(format!(
            "tail potential needs s in (0,1), got {s}"
        )));
    }
    if !(a < x && x < b) {
        return Err(FraclapError::Domain(format!(
            "point {x} outside the open interval ({a}, {b})"
        )));
    }
    Ok(((x - a).powf(-2.0 * s) + (b - x).powf(-2.0 * s)) / (2.0 * s))
}

const MC_CHUNK: usize = 1 << 16;

/// Monte-Carlo estimate of the order-s energy of `f` through the
/// singular-integral form (1-D only):
///
/// `E = C/2 * double integral over (a,b)^2 + C * int f(z)^2 kappa(z) dz`.
///
/// The interior double integral is importance-sampled in the pair
/// distance (density ~ r^{1-2s} near zero, ~ r^{-1-2s} beyond the split
/// point), deterministically chunked so the result depends only on
/// `(samples, seed)`.
pub fn montecarlo_gagliardo(
    f: AnalyticFunction,
    order: FractionalOrder,
    support_box: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let s = order.value();
    let (a, b) = support_box;
    if !(a < b) {
        return Err(FraclapError::Domain(format!(
            "support box needs a < b, got ({a}, {b})"
        )));
    }
    let c = gagliardo_constant(1, s)?;
    if samples == 0 {
        return Ok((0.0, 0.0));
    }

    // deterministic tail term by quadrature (f vanishes at the box edges
    // fast enough to tame the (b-x)^{-2s} blow-up)
    let tail_integrand = |z: f64| {
        let v = f.evaluate(z);
        v * v * ((z - a).powf(-2.0 * s) + (b - z).powf(-2.0 * s)) / (2.0 * s)
    };
    let tail_term = c * quad_tanh_sinh(&tail_integrand, a, b, 10);

    // piecewise proposal for the pair distance r in (0, R):
    //   p(r) ~ r^{1-2s}  on (0, r0]   (mass m1)
    //   p(r) ~ r^{-1-2s} on (r0, R]   (mass m2)
    let r_max = b - a;
    let r0 = 0.5 * r_max;
    let e1 = 2.0 - 2.0 * s; // cdf exponent of the near-zero piece
    let e2 = -2.0 * s; // cdf exponent of the far piece
    let m1 = r0.powf(e1) / e1;
    let m2 = (r_max.powf(e2) - r0.powf(e2)) / e2;
    let total_mass = m1 + m2;
    let sample_r = move |u: f64| -> f64 {
        let m = u * total_mass;
        if m <= m1 {
            (m * e1).powf(1.0 / e1)
        } else {
            ((m - m1) * e2 + r0.powf(e2)).powf(1.0 / e2)
        }
    };
    let density_r = |r: f64| -> f64 {
        if r <= r0 {
            r.powf(1.0 - 2.0 * s) / total_mass
        } else {
            r.powf(-1.0 - 2.0 * s) / total_mass
        }
    };

    let chunks = (samples + MC_CHUNK - 1) / MC_CHUNK;
    let mut mean_acc = 0.0;
    let mut sq_acc = 0.0;
    let mut count = 0usize;
    for chunk in 0..chunks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (chunk as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
        for _ in 0..n {
            let z = a + (b - a) * rng.gen::<f64>();
            let r = sample_r(rng.gen::<f64>());
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let eta = z + sign * r;
            // interior x interior only; the exterior part is the tail term
            let val = if eta > a && eta < b {
                let d = f.evaluate(z) - f.evaluate(eta);
                let p = density_r(r) / (b - a) * 0.5;
                d * d * r.powf(-1.0 - 2.0 * s) / p
            } else {
                0.0
            };
            mean_acc += val;
            sq_acc += val * val;
            count += 1;
        }
    }
    let n = count as f64;
    let mean = mean_acc / n;
    let var = (sq_acc / n - mean * mean).max(0.0) / n;
    let estimate = 0.5 * c * mean + tail_term;
    let stderr = 0.5 * c * var.sqrt();
    Ok((estimate, stderr))
}

/// Closed-form smallest eigenvalue of the 3-point Laplacian on a 1-D
/// grid over an interval of length `L`: `(4/h^2) sin^2(pi h / (2 L))`.
pub fn local_baseline_lambda(grid: &LatticeGrid) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(FraclapError::GridMismatch(
            "local baseline eigenvalue is defined on 1-D grids".into(),
        ));
    }
    let h = grid.spacing()[0];
    let l = grid.domain().side(0);
    Ok((4.0 / (h * h)) * (std::f64::consts::PI * h / (2.0 * l)).sin().powi(2))
}
