//! Heisenberg group, its Schrödinger representation on the lattice, and the
//! conjugation action on operators.

use ndarray::{Array2, Axis};
use ndarray::parallel::prelude::*;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{filter_axis, AxisFft, GridSpec};
use crate::operator::{same_dim, CommutatorWord, Operator};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Group element (a, b, c): translation a, modulation b, central phase c.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergElement {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl HeisenbergElement {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(LabError::DimensionMismatch { left: a.len(), right: b.len() });
        }
        if !(a.iter().chain(&b).all(|x| x.is_finite()) && c.is_finite()) {
            return Err(LabError::InvalidArgument("group coordinates must be finite".into()));
        }
        Ok(HeisenbergElement { a, b, c })
    }

    pub fn identity(n: usize) -> Self {
        HeisenbergElement { a: vec![0.0; n], b: vec![0.0; n], c: 0.0 }
    }

    pub fn central(n: usize, c: f64) -> Self {
        HeisenbergElement { a: vec![0.0; n], b: vec![0.0; n], c }
    }

    pub fn translation(n: usize, axis: usize, t: f64) -> Self {
        let mut g = Self::identity(n);
        g.a[axis] = t;
        g
    }

    pub fn modulation(n: usize, axis: usize, t: f64) -> Self {
        let mut g = Self::identity(n);
        g.b[axis] = t;
        g
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Euclidean size of the (a, b) part.
    pub fn radius(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum()
}

/// (a,b,c)(a',b',c') = (a+a', b+b', c+c'+½(a·b' − b·a')).
pub fn heisenberg_mul(g1: &HeisenbergElement, g2: &HeisenbergElement) -> HeisenbergElement {
    let a = g1.a.iter().zip(&g2.a).map(|(x, y)| x + y).collect();
    let b = g1.b.iter().zip(&g2.b).map(|(x, y)| x + y).collect();
    let c = g1.c + g2.c + 0.5 * (dot(&g1.a, &g2.b) - dot(&g1.b, &g2.a));
    HeisenbergElement { a, b, c }
}

pub fn heisenberg_inv(g: &HeisenbergElement) -> HeisenbergElement {
    HeisenbergElement {
        a: g.a.iter().map(|x| -x).collect(),
        b: g.b.iter().map(|x| -x).collect(),
        c: -g.c,
    }
}

/// Q_j: multiplication by the j-th lattice coordinate.
pub fn build_position(grid: &GridSpec, axis: usize) -> Result<Operator> {
    grid.check_axis(axis)?;
    let f: Vec<C64> = grid.coordinate_column(axis).into_iter().map(C64::from).collect();
    Operator::diagonal(*grid, &f, format!("Q{}", axis + 1))
}

/// P_j = F⁻¹ diag(ω) F along axis j, symmetrized as (P + P*)/2.
pub fn build_momentum(grid: &GridSpec, axis: usize) -> Result<Operator> {
    grid.check_axis(axis)?;
    let rep = Schrodinger::new(*grid);
    let mut p = Array2::<C64>::eye(grid.dim());
    rep.left_multiplier(&mut p, &rep.momentum_multipliers(axis));
    let p = (&p + &p.t().mapv(|z| z.conj())) * C64::from(0.5);
    Ok(Operator::from_parts(*grid, p, format!("P{}", axis + 1)))
}

/// Lattice-level machinery for ρ: FFT plans, frequencies and coordinates.
#[derive(Clone)]
pub struct Schrodinger {
    grid: GridSpec,
    plan: AxisFft,
    omega: Vec<f64>,
    coords: Vec<Vec<f64>>,
}

/// Per-axis Fourier multipliers; `None` means identity on that axis.
type Multipliers = Vec<Option<Vec<C64>>>;

impl Schrodinger {
    pub fn new(grid: GridSpec) -> Self {
        Schrodinger {
            plan: AxisFft::new(grid.points),
            omega: grid.frequencies(),
            coords: (0..grid.n).map(|j| grid.coordinate_column(j)).collect(),
            grid,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coordinates(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    fn translation_multipliers(&self, a: &[f64]) -> Multipliers {
        a.iter()
            .map(|&t| {
                (t != 0.0).then(|| self.omega.iter().map(|w| C64::from_polar(1.0, t * w)).collect())
            })
            .collect()
    }

    fn momentum_multipliers(&self, axis: usize) -> Multipliers {
        (0..self.grid.n)
            .map(|j| (j == axis).then(|| self.omega.iter().map(|&w| C64::from(w)).collect()))
            .collect()
    }

    fn filter_vec(&self, v: &mut [C64], mults: &Multipliers, line: &mut Vec<C64>, scratch: &mut Vec<C64>) {
        for (axis, m) in mults.iter().enumerate() {
            if let Some(m) = m {
                filter_axis(&self.grid, &self.plan, v, axis, m, line, scratch);
            }
        }
    }

    /// Each row r ← conj(S conj(row r)), i.e. Y ← Y S* for the multiplier S.
    fn right_adjoint_multiplier(&self, y: &mut Array2<C64>, mults: &Multipliers) {
        if mults.iter().all(Option::is_none) {
            return;
        }
        y.axis_iter_mut(Axis(0)).into_par_iter().for_each_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(buf, line, scratch), mut row| {
                buf.clear();
                buf.extend(row.iter().map(|z| z.conj()));
                self.filter_vec(buf, mults, line, scratch);
                for (dst, z) in row.iter_mut().zip(buf.iter()) {
                    *dst = z.conj();
                }
            },
        );
    }

    /// Y ← S Y for the multiplier S (acts on columns).
    fn left_multiplier(&self, y: &mut Array2<C64>, mults: &Multipliers) {
        if mults.iter().all(Option::is_none) {
            return;
        }
        let mut t = y.t().as_standard_layout().into_owned();
        t.axis_iter_mut(Axis(0)).into_par_iter().for_each_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(buf, line, scratch), mut row| {
                buf.clear();
                buf.extend(row.iter().copied());
                self.filter_vec(buf, mults, line, scratch);
                row.iter_mut().zip(buf.iter()).for_each(|(d, z)| *d = *z);
            },
        );
        y.assign(&t.t());
    }

    /// Dense ρ(g) = e^{ic} e^{ia·b/2} M_b T_a.
    pub fn unitary(&self, g: &HeisenbergElement) -> Result<Array2<C64>> {
        self.check(g)?;
        let mut u = Array2::<C64>::eye(self.grid.dim());
        self.left_multiplier(&mut u, &self.translation_multipliers(&g.a));
        let phase = C64::from_polar(1.0, g.c + 0.5 * dot(&g.a, &g.b));
        let mb = self.modulation_phases(&g.b);
        for (mut row, m) in u.axis_iter_mut(Axis(0)).zip(&mb) {
            let s = phase * m;
            row.mapv_inplace(|z| z * s);
        }
        Ok(u)
    }

    fn modulation_phases(&self, b: &[f64]) -> Vec<C64> {
        (0..self.grid.dim())
            .map(|r| {
                let arg: f64 = b.iter().enumerate().map(|(j, bj)| bj * self.coords[j][r]).sum();
                C64::from_polar(1.0, arg)
            })
            .collect()
    }

    fn check(&self, g: &HeisenbergElement) -> Result<()> {
        if g.dim() != self.grid.n {
            Err(LabError::DimensionMismatch { left: g.dim(), right: self.grid.n })
        } else {
            Ok(())
        }
    }

    /// ρ(g) Y ρ(g)⁻¹ on a raw matrix; the central coordinate never enters.
    pub fn conj(&self, g: &HeisenbergElement, y: &Array2<C64>) -> Result<Array2<C64>> {
        self.check(g)?;
        let mut z = y.clone();
        let mults = self.translation_multipliers(&g.a);
        self.left_multiplier(&mut z, &mults);
        self.right_adjoint_multiplier(&mut z, &mults);
        if g.b.iter().any(|&t| t != 0.0) {
            let mb = self.modulation_phases(&g.b);
            z.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(r, mut row)| {
                for (s, zz) in row.iter_mut().enumerate() {
                    *zz *= mb[r] * mb[s].conj();
                }
            });
        }
        Ok(z)
    }

    /// [iP_j, Y] = i(P Y − Y P).
    pub fn ad_translation(&self, axis: usize, y: &Array2<C64>) -> Array2<C64> {
        let mults = self.momentum_multipliers(axis);
        let mut py = y.clone();
        self.left_multiplier(&mut py, &mults);
        let mut yp = y.clone();
        self.right_adjoint_multiplier(&mut yp, &mults);
        (py - yp) * I
    }

    /// [iQ_j, Y]_{rs} = i(x_r − x_s) Y_{rs}.
    pub fn ad_modulation(&self, axis: usize, y: &Array2<C64>) -> Array2<C64> {
        let x = &self.coords[axis];
        let mut out = y.clone();
        out.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(r, mut row)| {
            for (s, z) in row.iter_mut().enumerate() {
                *z *= I * (x[r] - x[s]);
            }
        });
        out
    }
}

pub fn rho_unitary(grid: &GridSpec, g: &HeisenbergElement) -> Result<Operator> {
    let u = Schrodinger::new(*grid).unitary(g)?;
    Ok(Operator::from_parts(*grid, u, "rho"))
}

pub fn conj_action(grid: &GridSpec, g: &HeisenbergElement, y: &Operator) -> Result<Operator> {
    if y.grid() != grid {
        return Err(LabError::GridMismatch("operator grid differs from action grid".into()));
    }
    let z = Schrodinger::new(*grid).conj(g, y.entries())?;
    Ok(Operator::from_parts(*grid, z, y.label.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    Translation(usize),
    Modulation(usize),
    Central,
}

impl GeneratorKind {
    pub fn name(&self) -> String {
        match self {
            GeneratorKind::Translation(j) => format!("iP{}", j + 1),
            GeneratorKind::Modulation(j) => format!("iQ{}", j + 1),
            GeneratorKind::Central => "iI".into(),
        }
    }
}

/// {iP_1..iP_n, iQ_1..iQ_n, iI} as dense operators plus fast adjoint actions.
#[derive(Clone)]
pub struct GeneratorSet {
    pub kinds: Vec<GeneratorKind>,
    pub ops: Vec<Operator>,
    rep: Schrodinger,
}

pub fn build_generators(grid: &GridSpec) -> Result<GeneratorSet> {
    let n = grid.n;
    let mut kinds = Vec::with_capacity(2 * n + 1);
    let mut ops = Vec::with_capacity(2 * n + 1);
    for j in 0..n {
        kinds.push(GeneratorKind::Translation(j));
        ops.push(build_momentum(grid, j)?.scale(I).with_label(format!("iP{}", j + 1)));
    }
    for j in 0..n {
        kinds.push(GeneratorKind::Modulation(j));
        ops.push(build_position(grid, j)?.scale(I).with_label(format!("iQ{}", j + 1)));
    }
    kinds.push(GeneratorKind::Central);
    ops.push(Operator::identity(*grid).scale(I).with_label("iI"));
    Ok(GeneratorSet { kinds, ops, rep: Schrodinger::new(*grid) })
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn grid(&self) -> &GridSpec {
        self.rep.grid()
    }

    pub fn representation(&self) -> &Schrodinger {
        &self.rep
    }

    /// Indices of translation and modulation generators (central skipped).
    pub fn noncentral(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.kinds[j] != GeneratorKind::Central).collect()
    }

    pub fn word_name(&self, w: &CommutatorWord) -> String {
        if w.is_empty() {
            return "Y".into();
        }
        w.0.iter().map(|&j| self.kinds[j].name()).collect::<Vec<_>>().join("·")
    }

    /// One-parameter subgroup element exp_G(tX_j).
    pub fn one_parameter(&self, j: usize, t: f64) -> HeisenbergElement {
        let n = self.grid().n;
        match self.kinds[j] {
            GeneratorKind::Translation(a) => HeisenbergElement::translation(n, a, t),
            GeneratorKind::Modulation(b) => HeisenbergElement::modulation(n, b, t),
            GeneratorKind::Central => HeisenbergElement::central(n, t),
        }
    }

    /// Operator norm of generator j on this grid (largest |ξ|, |x| or 1).
    pub fn generator_norm(&self, j: usize) -> f64 {
        let g = self.grid();
        match self.kinds[j] {
            GeneratorKind::Translation(_) => std::f64::consts::PI * g.points as f64 / g.length,
            GeneratorKind::Modulation(_) => 0.5 * g.length,
            GeneratorKind::Central => 1.0,
        }
    }

    /// [A_j, Y] without forming dense products.
    pub fn ad(&self, j: usize, y: &Array2<C64>) -> Array2<C64> {
        match self.kinds[j] {
            GeneratorKind::Translation(a) => self.rep.ad_translation(a, y),
            GeneratorKind::Modulation(b) => self.rep.ad_modulation(b, y),
            GeneratorKind::Central => Array2::zeros(y.raw_dim()),
        }
    }

    pub fn iterated_ad(&self, word: &CommutatorWord, y: &Operator) -> Result<Operator> {
        let m = self.len();
        if let Some(&bad) = word.0.iter().find(|&&j| j >= m) {
            return Err(LabError::WordIndexOutOfRange { index: bad, m });
        }
        same_dim(y, &self.ops[0])?;
        let mut acc = y.entries().clone();
        for &j in word.0.iter().rev() {
            acc = self.ad(j, &acc);
        }
        Ok(Operator::from_parts(*y.grid(), acc, format!("ad[{}]({})", self.word_name(word), y.label)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_abs;

    #[test]
    fn position_on_two_points() {
        let g = GridSpec::new(1, 2, 2.0).unwrap();
        let q = build_position(&g, 0).unwrap();
        assert_eq!(q.entries()[[0, 0]], C64::new(-1.0, 0.0));
        assert_eq!(q.entries()[[1, 1]], C64::new(0.0, 0.0));
        assert!(build_position(&g, 1).is_err());
    }

    #[test]
    fn central_commutator_of_group() {
        let g1 = HeisenbergElement::new(vec![0.7], vec![0.0], 0.0).unwrap();
        let g2 = HeisenbergElement::new(vec![0.0], vec![1.3], 0.0).unwrap();
        let c = heisenberg_mul(
            &heisenberg_mul(&heisenberg_mul(&g1, &g2), &heisenberg_inv(&g1)),
            &heisenberg_inv(&g2),
        );
        assert_eq!(c.a, vec![0.0]);
        assert_eq!(c.b, vec![0.0]);
        assert!((c.c - 0.7 * 1.3).abs() < 1e-15);
    }

    #[test]
    fn identity_element_is_identity_operator() {
        let g = GridSpec::new(1, 16, 3.0).unwrap();
        let u = rho_unitary(&g, &HeisenbergElement::identity(1)).unwrap();
        assert_eq!(max_abs(&(u.entries() - &Array2::<C64>::eye(16)).view()), 0.0);
    }

    #[test]
    fn momentum_kills_constants() {
        let g = GridSpec::new(1, 32, 5.0).unwrap();
        let p = build_momentum(&g, 0).unwrap();
        let ones = ndarray::Array1::from_elem(32, C64::new(1.0, 0.0));
        let r = p.entries().dot(&ones);
        assert!(r.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn fast_ad_matches_dense() {
        let g = GridSpec::new(2, 6, 4.0).unwrap();
        let gens = build_generators(&g).unwrap();
        let y = Array2::from_shape_fn((36, 36), |(r, s)| C64::new((r * 7 + s) as f64 % 5.0, (r + 3 * s) as f64 % 3.0));
        for j in 0..gens.len() {
            let dense = gens.ops[j].entries().dot(&y) - y.dot(gens.ops[j].entries());
            assert!(max_abs(&(gens.ad(j, &y) - dense).view()) < 1e-10);
        }
    }
}
