//! Per-grid measurement context: generators, phase window and probe vectors.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridSpec;
use crate::heisenberg::{build_generators, GeneratorSet, HeisenbergElement, Schrodinger};
use crate::operator::{schatten_norm_matrix, SchattenIndex};
use crate::window::{PhaseWindow, WindowSpec};

/// Which operator topology a distance is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    /// Schatten-q norm.
    Norm { q: SchattenIndex },
    /// Largest action on the probe vectors.
    Strong,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    /// Gaussian width as a fraction of the period L.
    pub width_fraction: f64,
    pub random: usize,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec { width_fraction: 0.125, random: 5, seed: 7 }
    }
}

/// Unit probe vectors: a Gaussian, two Hermite-like excitations along the
/// first axis, and seeded random states.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub names: Vec<String>,
    pub vectors: Vec<Array1<C64>>,
}

fn normalize(v: &mut Array1<C64>) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / n);
}

impl ProbeSet {
    /// Probes in the full lattice space; with a window they are projected
    /// into it (random probes are drawn there directly).
    pub fn build(grid: &GridSpec, spec: &ProbeSpec, window: Option<&PhaseWindow>) -> Result<Self> {
        if !(spec.width_fraction > 0.0) {
            return Err(invalid("probe width must be positive"));
        }
        let sigma = spec.width_fraction * grid.length;
        let d = grid.dim();
        let coords: Vec<Vec<f64>> = (0..grid.n).map(|j| grid.coordinate_column(j)).collect();
        let gauss: Vec<f64> = (0..d)
            .map(|r| {
                let s: f64 = coords.iter().map(|c| c[r] * c[r]).sum();
                (-0.5 * s / (sigma * sigma)).exp()
            })
            .collect();
        let x0 = &coords[0];
        let shapes: [(&str, Box<dyn Fn(usize) -> f64>); 3] = [
            ("gaussian", Box::new(|_| 1.0)),
            ("hermite1", Box::new(|r| x0[r] / sigma)),
            ("hermite2", Box::new(|r| (x0[r] / sigma).powi(2) - 1.0)),
        ];
        let mut names = Vec::new();
        let mut vectors = Vec::new();
        for (name, shape) in shapes.iter() {
            let mut v: Array1<C64> = (0..d).map(|r| C64::from(shape(r) * gauss[r])).collect();
            if let Some(w) = window {
                v = w.project(&v);
            }
            normalize(&mut v);
            names.push(name.to_string());
            vectors.push(v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for i in 0..spec.random {
            let len = window.map_or(d, |w| w.rank());
            let z: Array1<C64> = (0..len)
                .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let mut v = match window {
                Some(w) => w.lift(&z),
                None => z,
            };
            normalize(&mut v);
            names.push(format!("random{i}"));
            vectors.push(v);
        }
        Ok(ProbeSet { names, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Everything needed to act on and measure operators on one grid.
#[derive(Clone)]
pub struct GridContext {
    pub grid: GridSpec,
    pub generators: GeneratorSet,
    pub window: Option<PhaseWindow>,
    pub probes: ProbeSet,
    /// Probe vectors expressed in window coordinates (V* v), if windowed.
    reduced_probes: Vec<Array1<C64>>,
}

impl GridContext {
    /// Windowed context (the default measurement frame).
    pub fn new(grid: GridSpec, window: WindowSpec, probes: &ProbeSpec) -> Result<Self> {
        let w = PhaseWindow::new(grid, window)?;
        Self::assemble(grid, Some(w), probes)
    }

    /// Context measuring raw full-space norms.
    pub fn raw(grid: GridSpec, probes: &ProbeSpec) -> Result<Self> {
        Self::assemble(grid, None, probes)
    }

    fn assemble(grid: GridSpec, window: Option<PhaseWindow>, spec: &ProbeSpec) -> Result<Self> {
        let generators = build_generators(&grid)?;
        let probes = ProbeSet::build(&grid, spec, window.as_ref())?;
        let reduced_probes = match &window {
            Some(w) => probes.vectors.iter().map(|v| w.restrict(v)).collect(),
            None => probes.vectors.clone(),
        };
        Ok(GridContext { grid, generators, window, probes, reduced_probes })
    }

    pub fn rep(&self) -> &Schrodinger {
        self.generators.representation()
    }

    pub fn conj(&self, g: &HeisenbergElement, y: &Array2<C64>) -> Result<Array2<C64>> {
        self.rep().conj(g, y)
    }

    pub fn is_windowed(&self) -> bool {
        self.window.is_some()
    }

    /// Compression to the measurement frame (identity without a window).
    pub fn reduce(&self, y: &ArrayView2<C64>) -> Array2<C64> {
        match &self.window {
            Some(w) => w.compress(y),
            None => y.to_owned(),
        }
    }

    /// Distance measure of an already reduced matrix.
    pub fn measure_reduced(&self, c: &ArrayView2<C64>, topo: Topology) -> Result<f64> {
        match topo {
            Topology::Norm { q } => schatten_norm_matrix(c, q),
            Topology::Strong => Ok(self
                .reduced_probes
                .iter()
                .map(|z| c.dot(z).iter().map(|u| u.norm_sqr()).sum::<f64>().sqrt())
                .fold(0.0, f64::max)),
        }
    }

    pub fn measure(&self, y: &ArrayView2<C64>, topo: Topology) -> Result<f64> {
        self.measure_reduced(&self.reduce(y).view(), topo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_are_unit() {
        let g = GridSpec::new(1, 64, 6.0).unwrap();
        for ctx in [
            GridContext::raw(g, &ProbeSpec::default()).unwrap(),
            GridContext::new(g, WindowSpec::default(), &ProbeSpec::default()).unwrap(),
        ] {
            assert_eq!(ctx.probes.len(), 8);
            for v in &ctx.probes.vectors {
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn strong_measure_of_identity_is_one() {
        let g = GridSpec::new(1, 32, 6.0).unwrap();
        let ctx = GridContext::new(g, WindowSpec::default(), &ProbeSpec::default()).unwrap();
        let i = Array2::<C64>::eye(32);
        assert!((ctx.measure(&i.view(), Topology::Strong).unwrap() - 1.0).abs() < 1e-12);
    }
}
