//! Unitary discrete Fourier transforms of tensor-valued fields.
//!
//! The transform is applied componentwise along every grid axis and carries a
//! 1/√N normalization in each direction, so a forward/inverse round trip is
//! the identity and Parseval holds exactly: `norm(transform(P)) == norm(P)`
//! up to floating point. Wavevector indexing matches [`Grid::wavevector`].

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::field::{Direction, Field};

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

static PLANS: Lazy<Mutex<PlanCache>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = PLANS.lock().expect("fft plan cache poisoned");
    plans
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// In-place multidimensional FFT of a scalar lattice stored row-major
/// (last axis fastest). No normalization.
fn fft_nd(data: &mut [Complex64], sizes: &[usize], forward: bool) {
    let total: usize = sizes.iter().product();
    debug_assert_eq!(data.len(), total);
    let d = sizes.len();
    let mut scratch = Vec::new();
    for axis in 0..d {
        let n = sizes[axis];
        let fft = plan(n, forward);
        scratch.resize(n, Complex64::ZERO);
        // stride between successive entries along `axis`
        let stride: usize = sizes[axis + 1..].iter().product();
        let lines = total / n;
        for line in 0..lines {
            // decompose line index into (outer, inner) around the axis
            let inner = line % stride;
            let outer = line / stride;
            let base = outer * n * stride + inner;
            for i in 0..n {
                scratch[i] = data[base + i * stride];
            }
            fft.process(&mut scratch);
            for i in 0..n {
                data[base + i * stride] = scratch[i];
            }
        }
    }
}

/// Componentwise unitary DFT of a field.
pub fn transform(p: &Field, direction: Direction) -> Field {
    let grid = p.grid().clone();
    let shape = p.shape().clone();
    let n = grid.len();
    let dim = shape.dim();
    let forward = direction == Direction::Forward;
    let scale = 1.0 / (n as f64).sqrt();

    let mut out = Field::zeros(&grid, &shape);
    let mut component = vec![Complex64::ZERO; n];
    for c in 0..dim {
        for (x, slot) in component.iter_mut().enumerate() {
            *slot = p.values()[x * dim + c];
        }
        fft_nd(&mut component, grid.sizes(), forward);
        for (x, v) in component.iter().enumerate() {
            out.values_mut()[x * dim + c] = v * scale;
        }
    }
    out
}
