//! Thin wrappers around rustfft for 1-D and 2-D transforms.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// In-place 1-D transform. rustfft does not normalize; callers divide by
/// the length where a true inverse is needed.
pub fn fft_1d(data: &mut [Complex<f64>], inverse: bool) {
    plan(data.len(), inverse).process(data);
}

/// In-place 2-D transform of a row-major `rows x cols` array.
pub fn fft_2d(data: &mut [Complex<f64>], rows: usize, cols: usize, inverse: bool) {
    assert_eq!(data.len(), rows * cols);
    let row_plan = plan(cols, inverse);
    for r in 0..rows {
        row_plan.process(&mut data[r * cols..(r + 1) * cols]);
    }
    let col_plan = plan(rows, inverse);
    let mut col = vec![Complex::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        col_plan.process(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

/// Smallest 5-smooth number `>= n` (keeps rustfft on fast code paths).
pub fn good_fft_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2usize, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let rows = 6;
        let cols = 10;
        let orig: Vec<Complex<f64>> = (0..rows * cols)
            .map(|i| Complex::new((i % 7) as f64, (i % 3) as f64))
            .collect();
        let mut data = orig.clone();
        fft_2d(&mut data, rows, cols, false);
        fft_2d(&mut data, rows, cols, true);
        let scale = (rows * cols) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(good_fft_size(17), 18);
        assert_eq!(good_fft_size(128), 128);
        assert_eq!(good_fft_size(1), 1);
    }
}
