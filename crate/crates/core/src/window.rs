//! Phase-space window: the span of low-energy states of an anisotropic
//! oscillator that sits well inside the discretized box.
//!
//! Spectral P on the torus jumps at the box edge (x = ±L/2 wraps, frequency
//! wraps at Nyquist), so raw commutator norms are dominated by wrap-around
//! artifacts that grow with N even for perfectly smooth symbols. Compressing
//! every operator to V*YV, with V spanning the states of
//! H = Σ (Q_j/X)² + (P_j/Ξ)² of energy ≤ r², measures the operator where the
//! lattice is a faithful model of L²(ℝⁿ). As N grows the window grows with
//! the box, so the compressed norms converge to the continuum ones.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::grid::GridSpec;
use crate::heisenberg::build_momentum;
use crate::operator::{adjoint, schatten_norm_matrix, SchattenIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Energy cut-off radius r relative to the box half-widths.
    pub radius: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { radius: 0.5 }
    }
}

#[derive(Clone, Debug)]
pub struct PhaseWindow {
    grid: GridSpec,
    spec: WindowSpec,
    basis: Array2<C64>,
    basis_adj: Array2<C64>,
}

impl PhaseWindow {
    pub fn new(grid: GridSpec, spec: WindowSpec) -> Result<Self> {
        if !(spec.radius > 0.0 && spec.radius <= 1.0) {
            return Err(invalid(format!("window radius must lie in (0, 1], got {}", spec.radius)));
        }
        let d = grid.dim();
        let x_half = 0.5 * grid.length;
        let xi_half = std::f64::consts::PI * grid.points as f64 / grid.length;
        // H is real, but it is diagonalized in complex arithmetic: some
        // OpenBLAS builds mis-detect AVX-512 cores and return garbage from the
        // real kernels at moderate sizes, while the complex ones stay sound.
        let mut h = Array2::<C64>::zeros((d, d));
        for j in 0..grid.n {
            let p = build_momentum(&grid, j)?;
            let p2 = p.entries().dot(p.entries());
            h.zip_mut_with(&p2, |a, z| *a += C64::from(z.re / (xi_half * xi_half)));
            for (r, x) in grid.coordinate_column(j).into_iter().enumerate() {
                h[[r, r]] += (x / x_half).powi(2);
            }
        }
        let (vals, vecs) = h.eigh(UPLO::Lower).map_err(|e| LabError::Linalg(e.to_string()))?;
        // row-major input hands back conjugated eigenvectors
        let cut = spec.radius * spec.radius;
        let keep: Vec<usize> = (0..d).filter(|&i| vals[i] <= cut).collect();
        if keep.is_empty() {
            return Err(invalid("phase window is empty on this grid"));
        }
        let basis = Array2::from_shape_fn((d, keep.len()), |(r, k)| vecs[[r, keep[k]]].conj());
        let basis_adj = adjoint(&basis.view());
        Ok(PhaseWindow { grid, spec, basis, basis_adj })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    /// Number of retained states K.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// D×K orthonormal basis.
    pub fn basis(&self) -> &Array2<C64> {
        &self.basis
    }

    /// V* Y V.
    pub fn compress(&self, y: &ArrayView2<C64>) -> Array2<C64> {
        self.basis_adj.dot(&y.dot(&self.basis))
    }

    pub fn norm(&self, y: &ArrayView2<C64>, q: SchattenIndex) -> Result<f64> {
        schatten_norm_matrix(&self.compress(y).view(), q)
    }

    /// V z for a K-vector z.
    pub fn lift(&self, z: &Array1<C64>) -> Array1<C64> {
        self.basis.dot(z)
    }

    /// V* v.
    pub fn restrict(&self, v: &Array1<C64>) -> Array1<C64> {
        self.basis_adj.dot(v)
    }

    /// V V* v.
    pub fn project(&self, v: &Array1<C64>) -> Array1<C64> {
        self.lift(&self.restrict(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::build_position;
    use crate::operator::commutator;

    #[test]
    fn basis_is_orthonormal() {
        for points in [64, 256] {
            let g = GridSpec::new(1, points, 8.0).unwrap();
            let w = PhaseWindow::new(g, WindowSpec::default()).unwrap();
            let gram = w.basis_adj.dot(&w.basis);
            let k = w.rank();
            assert!(k > 5);
            let err = (&gram - &Array2::<C64>::eye(k)).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            assert!(err < 1e-12, "N = {points}: {err}");
        }
    }

    #[test]
    fn canonical_commutation_inside_window() {
        let g = GridSpec::new(1, 64, 2.0 * std::f64::consts::PI * 8.0).unwrap();
        let w = PhaseWindow::new(g, WindowSpec::default()).unwrap();
        let q = build_position(&g, 0).unwrap();
        let p = build_momentum(&g, 0).unwrap();
        let c = commutator(&q, &p).unwrap();
        let cw = w.compress(&c.entries().view());
        let target = Array2::<C64>::eye(w.rank()) * C64::i();
        let err = (&cw - &target).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(err < 1e-6, "err {err}");
    }
}
