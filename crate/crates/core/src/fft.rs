//! Thin 2D wrapper over `rustfft` for row-major, x1-fastest buffers.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_rows(data: &mut [Complex64], len: usize, direction: FftDirection) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction));
    fft.process(data);
}

fn transform_2d(data: &mut [Complex64], n1: usize, n2: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n1 * n2);
    transform_rows(data, n1, direction);
    let mut cols = vec![Complex64::new(0.0, 0.0); n1 * n2];
    for j in 0..n2 {
        for i in 0..n1 {
            cols[i * n2 + j] = data[j * n1 + i];
        }
    }
    transform_rows(&mut cols, n2, direction);
    for j in 0..n2 {
        for i in 0..n1 {
            data[j * n1 + i] = cols[i * n2 + j];
        }
    }
}

/// Forward transform normalized so that the zero mode is the mean.
pub(crate) fn forward(data: &mut [Complex64], n1: usize, n2: usize) {
    transform_2d(data, n1, n2, FftDirection::Forward);
    let scale = 1.0 / (n1 * n2) as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

/// Unnormalized inverse: sample values of the trigonometric sum.
pub(crate) fn inverse(data: &mut [Complex64], n1: usize, n2: usize) {
    transform_2d(data, n1, n2, FftDirection::Inverse);
}

/// Inverse transform along x2 only, leaving each grid row as its x1 spectrum.
pub(crate) fn inverse_x2(data: &mut [Complex64], n1: usize, n2: usize) {
    let mut cols = vec![Complex64::new(0.0, 0.0); n1 * n2];
    for j in 0..n2 {
        for i in 0..n1 {
            cols[i * n2 + j] = data[j * n1 + i];
        }
    }
    transform_rows(&mut cols, n2, FftDirection::Inverse);
    for j in 0..n2 {
        for i in 0..n1 {
            data[j * n1 + i] = cols[i * n2 + j];
        }
    }
}
