//! Periodic lattice discretization of L²(ℝⁿ) and the FFT sweeps that act on it.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// `n` axes of `points` samples each on a torus of side `length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub points: usize,
    pub length: f64,
}

impl GridSpec {
    pub const DEFAULT_MAX_DIM: usize = 4096;

    pub fn new(n: usize, points: usize, length: f64) -> Result<Self> {
        Self::with_max_dim(n, points, length, Self::DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(n: usize, points: usize, length: f64, max_dim: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidGrid("spatial dimension must be >= 1".into()));
        }
        if points < 2 || !points.is_multiple_of(2) {
            return Err(LabError::InvalidGrid(format!(
                "points per axis must be even and >= 2, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::InvalidGrid(format!("period must be positive, got {length}")));
        }
        let dim = (points as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if dim > max_dim as u128 {
            return Err(LabError::InvalidGrid(format!(
                "dimension {points}^{n} exceeds cap {max_dim}"
            )));
        }
        Ok(GridSpec { n, points, length })
    }

    pub fn dim(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    /// Lattice spacing h = L/N.
    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Frequency lattice spacing 2π/L.
    pub fn dual_spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Per-axis positions x_k = −L/2 + k h.
    pub fn positions(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points)
            .map(|k| -0.5 * self.length + k as f64 * h)
            .collect()
    }

    /// Per-axis angular frequencies in FFT bin order; the Nyquist bin carries −N/2.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = self.dual_spacing();
        (0..n)
            .map(|m| {
                let s = if m < n / 2 { m } else { m - n };
                s as f64 * dk
            })
            .collect()
    }

    /// Stride of `axis` in the flat index (axis 0 is most significant).
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.n - 1 - axis) as u32)
    }

    /// Lattice index of `flat` along `axis`.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.points
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.n {
            Err(LabError::AxisOutOfRange { axis, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Coordinates of every lattice point along `axis`, indexed by flat index.
    pub fn coordinate_column(&self, axis: usize) -> Vec<f64> {
        let xs = self.positions();
        (0..self.dim()).map(|r| xs[self.axis_index(r, axis)]).collect()
    }
}

/// How the period L follows the refinement parameter N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LengthRule {
    /// Same L at every N.
    Fixed { length: f64 },
    /// L = scale·√N.
    Sqrt { scale: f64 },
    /// L = 2π·2^⌈log₂N / 2⌉: equals 2π√N on even powers of two and keeps
    /// the phase-space box commensurate with 2π-periodic symbols.
    SqrtPow2,
}

impl LengthRule {
    pub fn length(&self, points: usize) -> f64 {
        match *self {
            LengthRule::Fixed { length } => length,
            LengthRule::Sqrt { scale } => scale * (points as f64).sqrt(),
            LengthRule::SqrtPow2 => {
                let e = (points as f64).log2() / 2.0;
                2.0 * PI * 2f64.powi(e.ceil() as i32)
            }
        }
    }

    pub fn grid(&self, n: usize, points: usize) -> Result<GridSpec> {
        GridSpec::new(n, points, self.length(points))
    }
}

/// Forward and inverse plans for one axis length.
#[derive(Clone)]
pub(crate) struct AxisFft {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    len: usize,
}

impl AxisFft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        AxisFft {
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            len,
        }
    }

    /// Unnormalized transform of `buf` in place.
    pub fn run(&self, buf: &mut [C64], inverse: bool, scratch: &mut Vec<C64>) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let need = plan.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, C64::new(0.0, 0.0));
        }
        plan.process_with_scratch(buf, &mut scratch[..need]);
    }

    /// buf ← F⁻¹ diag(mult) F buf.
    pub fn filter(&self, buf: &mut [C64], mult: &[C64], scratch: &mut Vec<C64>) {
        self.run(buf, false, scratch);
        let s = 1.0 / self.len as f64;
        for (z, m) in buf.iter_mut().zip(mult) {
            *z *= m * s;
        }
        self.run(buf, true, scratch);
    }
}

/// Unnormalized multi-dimensional FFT over selected axes of a row-major
/// array with uniform side `side` and `rank` axes.
pub(crate) fn fft_axes(data: &mut [C64], side: usize, rank: usize, axes: &[usize], inverse: bool) {
    let plan = AxisFft::new(side);
    let total = data.len();
    let mut line = vec![C64::new(0.0, 0.0); side];
    let mut scratch = Vec::new();
    for &axis in axes {
        let stride = side.pow((rank - 1 - axis) as u32);
        let block = stride * side;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (k, z) in line.iter_mut().enumerate() {
                    *z = data[start + k * stride];
                }
                plan.run(&mut line, inverse, &mut scratch);
                for (k, z) in line.iter().enumerate() {
                    data[start + k * stride] = *z;
                }
            }
        }
    }
}

/// Applies the Fourier multiplier `mult` (FFT bin order) along `axis` to a
/// vector on the grid. `line` and `scratch` are reusable work buffers.
pub(crate) fn filter_axis(
    grid: &GridSpec,
    plan: &AxisFft,
    v: &mut [C64],
    axis: usize,
    mult: &[C64],
    line: &mut Vec<C64>,
    scratch: &mut Vec<C64>,
) {
    let side = grid.points;
    let stride = grid.stride(axis);
    if stride == 1 && v.len() == side {
        plan.filter(v, mult, scratch);
        return;
    }
    line.resize(side, C64::new(0.0, 0.0));
    let block = stride * side;
    for base in (0..v.len()).step_by(block) {
        for off in 0..stride {
            let start = base + off;
            for (k, z) in line.iter_mut().enumerate() {
                *z = v[start + k * stride];
            }
            plan.filter(line, mult, scratch);
            for (k, z) in line.iter().enumerate() {
                v[start + k * stride] = *z;
            }
        }
    }
}
