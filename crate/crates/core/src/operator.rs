//! Dense operators on the grid Hilbert space, Schatten norms and commutators.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::SVD;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::grid::GridSpec;

/// Square matrix acting on the lattice functions of `grid`.
#[derive(Clone, Debug)]
pub struct Operator {
    entries: Array2<C64>,
    grid: GridSpec,
    pub label: String,
}

impl Operator {
    pub fn new(grid: GridSpec, entries: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        let d = grid.dim();
        let (r, c) = entries.dim();
        if r != d {
            return Err(LabError::DimensionMismatch { left: r, right: d });
        }
        if c != d {
            return Err(LabError::DimensionMismatch { left: c, right: d });
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(LabError::NonFinite);
        }
        Ok(Operator { entries, grid, label: label.into() })
    }

    /// Constructor for results of internal arithmetic on valid operators.
    pub(crate) fn from_parts(grid: GridSpec, entries: Array2<C64>, label: impl Into<String>) -> Self {
        debug_assert_eq!(entries.dim(), (grid.dim(), grid.dim()));
        Operator { entries, grid, label: label.into() }
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::from_parts(grid, Array2::eye(grid.dim()), "identity")
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let d = grid.dim();
        Self::from_parts(grid, Array2::zeros((d, d)), "zero")
    }

    /// Multiplication by the lattice function `f` (flat index order).
    pub fn diagonal(grid: GridSpec, f: &[C64], label: impl Into<String>) -> Result<Self> {
        if f.len() != grid.dim() {
            return Err(LabError::DimensionMismatch { left: f.len(), right: grid.dim() });
        }
        Self::new(grid, Array2::from_diag(&Array1::from(f.to_vec())), label)
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Self::from_parts(self.grid, adjoint(&self.entries.view()), format!("{}*", self.label))
    }

    pub fn scale(&self, s: C64) -> Operator {
        Self::from_parts(self.grid, &self.entries * s, self.label.clone())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other)?;
        Ok(Self::from_parts(self.grid, &self.entries + &other.entries, self.label.clone()))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other)?;
        Ok(Self::from_parts(self.grid, &self.entries - &other.entries, self.label.clone()))
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other)?;
        Ok(Self::from_parts(self.grid, self.entries.dot(&other.entries), self.label.clone()))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest entry modulus; cheap scale for absolute comparisons.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries.view())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs(&(&self.entries - &adjoint(&self.entries.view())).view()) <= tol
    }
}

pub(crate) fn same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        Err(LabError::DimensionMismatch { left: a.dim(), right: b.dim() })
    } else {
        Ok(())
    }
}

pub fn adjoint(m: &ArrayView2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn max_abs(m: &ArrayView2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Schatten exponent q ∈ [1, ∞].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchattenIndex {
    Finite(f64),
    Infinity,
}

impl SchattenIndex {
    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(SchattenIndex::Infinity)
        } else if q.is_finite() && q >= 1.0 {
            Ok(SchattenIndex::Finite(q))
        } else {
            Err(LabError::InvalidSchattenIndex(q))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            SchattenIndex::Finite(q) => q,
            SchattenIndex::Infinity => f64::INFINITY,
        }
    }

    /// Conjugate exponent p with 1/p + 1/q = 1.
    pub fn conjugate(&self) -> SchattenIndex {
        match *self {
            SchattenIndex::Infinity => SchattenIndex::Finite(1.0),
            SchattenIndex::Finite(1.0) => SchattenIndex::Infinity,
            SchattenIndex::Finite(q) => SchattenIndex::Finite(q / (q - 1.0)),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SchattenIndex::Infinity)
    }

    /// Norm of a vector of singular values.
    pub fn apply(&self, sv: &[f64]) -> f64 {
        let top = sv.iter().cloned().fold(0.0, f64::max);
        match *self {
            SchattenIndex::Infinity => top,
            _ if top == 0.0 => 0.0,
            SchattenIndex::Finite(q) => {
                let s: f64 = sv.iter().map(|&x| (x / top).powf(q)).sum();
                top * s.powf(1.0 / q)
            }
        }
    }
}

impl fmt::Display for SchattenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchattenIndex::Finite(q) => write!(f, "{q}"),
            SchattenIndex::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for SchattenIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            SchattenIndex::Finite(q) => s.serialize_f64(q),
            SchattenIndex::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SchattenIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let q = match Raw::deserialize(d)? {
            Raw::Num(q) => q,
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Inf") => f64::INFINITY,
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom)?,
        };
        SchattenIndex::new(q).map_err(serde::de::Error::custom)
    }
}

/// Sequence of generator indices (0-based); applied innermost-last, i.e.
/// (j1, …, jk) means [A_j1, [A_j2, … [A_jk, Y]…]].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CommutatorWord(pub Vec<usize>);

impl CommutatorWord {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= m) {
            return Err(LabError::WordIndexOutOfRange { index: bad, m });
        }
        Ok(CommutatorWord(indices))
    }

    pub fn empty() -> Self {
        CommutatorWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All words of length `k` over `alphabet`, lexicographic in alphabet order.
    pub fn all_of_length(alphabet: &[usize], k: usize) -> Vec<CommutatorWord> {
        let mut words = vec![Vec::new()];
        for _ in 0..k {
            words = words
                .into_iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |&j| {
                        let mut v = w.clone();
                        v.push(j);
                        v
                    })
                })
                .collect();
        }
        words.into_iter().map(CommutatorWord).collect()
    }
}

impl fmt::Display for CommutatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Full SVD is used up to this dimension.
pub const SVD_MAX_DIM: usize = 1024;

pub fn singular_values(m: &ArrayView2<C64>) -> Result<Vec<f64>> {
    let (_, s, _) = m.svd(false, false).map_err(|e| LabError::Linalg(e.to_string()))?;
    Ok(s.to_vec())
}

/// Schatten-q norm of a raw matrix. Non-square input is allowed (windowed
/// compressions are square but the routine does not care).
pub fn schatten_norm_matrix(m: &ArrayView2<C64>, q: SchattenIndex) -> Result<f64> {
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(LabError::NonFinite);
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    if q.is_infinite() && m.nrows().max(m.ncols()) > SVD_MAX_DIM {
        return Ok(spectral_norm_power(m, 1e-8, 500));
    }
    Ok(q.apply(&singular_values(m)?))
}

pub fn schatten_norm(y: &Operator, q: SchattenIndex) -> Result<f64> {
    schatten_norm_matrix(&y.entries.view(), q)
}

/// Largest singular value by power iteration on Y*Y.
pub fn spectral_norm_power(m: &ArrayView2<C64>, tol: f64, max_iter: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Array1<C64> = (0..m.ncols())
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / nv);
    let mh = adjoint(m);
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let w = m.dot(&v);
        let s = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if s == 0.0 {
            return 0.0;
        }
        let mut u = mh.dot(&w);
        let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        u.mapv_inplace(|z| z / nu);
        v = u;
        if (s - sigma).abs() <= tol * s {
            sigma = s;
            break;
        }
        sigma = s;
    }
    sigma
}

/// ⟨Y, V⟩ = Tr(YV).
pub fn duality_pairing(y: &Operator, v: &Operator) -> Result<C64> {
    same_dim(y, v)?;
    let a = &y.entries;
    let b = &v.entries;
    let d = y.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    Ok(acc)
}

/// AB − BA.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    same_dim(a, b)?;
    let e = a.entries.dot(&b.entries) - b.entries.dot(&a.entries);
    Ok(Operator::from_parts(a.grid, e, format!("[{},{}]", a.label, b.label)))
}

/// [A_j1, [A_j2, … [A_jk, Y]…]] by dense products.
pub fn iterated_commutator(
    generators: &[Operator],
    word: &CommutatorWord,
    y: &Operator,
) -> Result<Operator> {
    let m = generators.len();
    if let Some(&bad) = word.0.iter().find(|&&j| j >= m) {
        return Err(LabError::WordIndexOutOfRange { index: bad, m });
    }
    let mut acc = y.clone();
    for &j in word.0.iter().rev() {
        acc = commutator(&generators[j], &acc)?;
    }
    Ok(acc.with_label(format!("ad{}({})", word, y.label)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(points: usize) -> GridSpec {
        GridSpec::new(1, points, 1.0).unwrap()
    }

    fn diag(vals: &[f64]) -> Operator {
        let f: Vec<C64> = vals.iter().map(|&x| C64::new(x, 0.0)).collect();
        Operator::diagonal(grid(vals.len()), &f, "d").unwrap()
    }

    #[test]
    fn diag_norms() {
        let y = diag(&[3.0, 4.0]);
        assert!((schatten_norm(&y, SchattenIndex::new(1.0).unwrap()).unwrap() - 7.0).abs() < 1e-12);
        assert!((schatten_norm(&y, SchattenIndex::Infinity).unwrap() - 4.0).abs() < 1e-12);
        assert!((schatten_norm(&y, SchattenIndex::new(2.0).unwrap()).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_q() {
        assert!(SchattenIndex::new(0.0).is_err());
        assert!(SchattenIndex::new(0.5).is_err());
        assert!(SchattenIndex::new(f64::NAN).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut e = Array2::<C64>::eye(2);
        e[[0, 1]] = C64::new(f64::NAN, 0.0);
        assert!(matches!(Operator::new(grid(2), e, "x"), Err(LabError::NonFinite)));
    }

    #[test]
    fn pairing_trivia() {
        let i4 = Operator::identity(grid(4));
        assert_eq!(duality_pairing(&i4, &i4).unwrap(), C64::new(4.0, 0.0));
        let y = diag(&[1.0, -1.0]);
        let i2 = Operator::identity(grid(2));
        assert_eq!(duality_pairing(&y, &i2).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn diagonal_commute() {
        let c = commutator(&diag(&[1.0, 2.0]), &diag(&[5.0, 7.0])).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn word_range_checked() {
        assert!(CommutatorWord::new(vec![0, 3], 3).is_err());
        let y = Operator::identity(grid(2));
        let gens = vec![y.clone()];
        let w = CommutatorWord(vec![1]);
        assert!(iterated_commutator(&gens, &w, &y).is_err());
    }

    #[test]
    fn word_enumeration() {
        let ws = CommutatorWord::all_of_length(&[0, 1], 2);
        let got: Vec<Vec<usize>> = ws.into_iter().map(|w| w.0).collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m: Array2<C64> = Array2::from_shape_fn((40, 40), |_| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let exact = SchattenIndex::Infinity.apply(&singular_values(&m.view()).unwrap());
        let est = spectral_norm_power(&m.view(), 1e-12, 5000);
        assert!((est - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn q_serde_round_trip() {
        let s = serde_json::to_string(&SchattenIndex::Infinity).unwrap();
        assert_eq!(s, "\"inf\"");
        let q: SchattenIndex = serde_json::from_str("2").unwrap();
        assert_eq!(q, SchattenIndex::Finite(2.0));
        assert!(serde_json::from_str::<SchattenIndex>("0.5").is_err());
    }
}
