//! Discrete Weyl calculus on the periodic phase-space lattice.
//!
//! A symbol is sampled on x_r (positions) × ξ_m (frequencies, ascending,
//! ξ_m = (m − N/2)·2π/L). Its discrete Fourier coefficients â(l, k) weight
//! symmetric displacements D(k, l) = e^{iθ(k,l)} M^l T^k, where M^l
//! multiplies by e^{i u_l x}, u_l = 2πl/L, and (T^k f)_r = f_{r+k}. The phase
//! θ = πkl/N; on the Nyquist row or column (index −N/2) it is taken as
//! π|kl|/N, which keeps real symbols Hermitian on even grids.

use std::f64::consts::PI;
use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::context::GridContext;
use crate::criterion::{ck_scores, RefinementStudy};
use crate::error::{invalid, LabError, Result};
use crate::grid::{fft_axes, GridSpec};
use crate::operator::{Operator, SchattenIndex};
use crate::verdict::{growth_fit, Growth, GrowthFit, Thresholds};

/// Complex samples of a(x, ξ); flat index r·D + m with r the position
/// multi-index and m the frequency multi-index (axis 0 most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSymbol {
    grid: GridSpec,
    values: Vec<C64>,
    pub label: String,
}

impl PhaseSymbol {
    pub fn new(grid: GridSpec, values: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        let d = grid.dim();
        if values.len() != d * d {
            return Err(LabError::DimensionMismatch { left: values.len(), right: d * d });
        }
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(LabError::NonFinite);
        }
        Ok(PhaseSymbol { grid, values, label: label.into() })
    }

    /// Samples `f(x, ξ)` on the phase grid.
    pub fn from_fn(grid: GridSpec, label: impl Into<String>, f: impl Fn(&[f64], &[f64]) -> C64) -> Result<Self> {
        let d = grid.dim();
        let xs: Vec<Vec<f64>> = (0..d).map(|r| position_of(&grid, r)).collect();
        let xis: Vec<Vec<f64>> = (0..d).map(|m| frequency_of(&grid, m)).collect();
        let mut values = Vec::with_capacity(d * d);
        for x in &xs {
            for xi in &xis {
                values.push(f(x, xi));
            }
        }
        Self::new(grid, values, label)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn conj(&self) -> PhaseSymbol {
        PhaseSymbol {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
            label: format!("conj({})", self.label),
        }
    }

    pub fn max_abs_diff(&self, other: &PhaseSymbol) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Writes rows `x1..xn, xi1..xin, re, im` with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.grid.n;
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
        header.extend((1..=n).map(|j| format!("xi{j}")));
        header.extend(["re".to_string(), "im".to_string()]);
        out.write_record(&header).map_err(|e| LabError::Format(e.to_string()))?;
        let d = self.grid.dim();
        for r in 0..d {
            let x = position_of(&self.grid, r);
            for m in 0..d {
                let xi = frequency_of(&self.grid, m);
                let z = self.values[r * d + m];
                let row: Vec<String> = x.iter().chain(&xi).chain([z.re, z.im].iter()).map(|v| format!("{v:e}")).collect();
                out.write_record(&row).map_err(|e| LabError::Format(e.to_string()))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads rows written by [`PhaseSymbol::write_csv`] (any row order);
    /// every lattice point must appear exactly once.
    pub fn read_csv<R: Read>(grid: GridSpec, r: R, label: impl Into<String>) -> Result<Self> {
        let n = grid.n;
        let d = grid.dim();
        let mut values = vec![C64::new(0.0, 0.0); d * d];
        let mut seen = vec![false; d * d];
        let h = grid.spacing();
        let dk = grid.dual_spacing();
        let snap = |v: f64, origin: f64, step: f64| -> Result<usize> {
            let t = (v - origin) / step;
            let k = t.round();
            if (t - k).abs() > 1e-6 || k < 0.0 || k >= grid.points as f64 {
                return Err(LabError::Format(format!("coordinate {v} is not on the lattice")));
            }
            Ok(k as usize)
        };
        let mut rdr = csv::Reader::from_reader(r);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| LabError::Format(e.to_string()))?;
            if rec.len() != 2 * n + 2 {
                return Err(LabError::Format(format!("expected {} columns, got {}", 2 * n + 2, rec.len())));
            }
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| LabError::Format(e.to_string())))
                .collect::<Result<_>>()?;
            let mut rf = 0;
            let mut mf = 0;
            for j in 0..n {
                rf = rf * grid.points + snap(nums[j], -0.5 * grid.length, h)?;
                mf = mf * grid.points + snap(nums[n + j], -(grid.points as f64 / 2.0) * dk, dk)?;
            }
            let idx = rf * d + mf;
            if seen[idx] {
                return Err(LabError::Format("duplicate lattice point".into()));
            }
            seen[idx] = true;
            values[idx] = C64::new(nums[2 * n], nums[2 * n + 1]);
        }
        if !seen.iter().all(|&s| s) {
            return Err(LabError::Format("symbol file does not cover the phase grid".into()));
        }
        Self::new(grid, values, label)
    }
}

fn position_of(grid: &GridSpec, r: usize) -> Vec<f64> {
    let xs = grid.positions();
    (0..grid.n).map(|j| xs[grid.axis_index(r, j)]).collect()
}

fn frequency_of(grid: &GridSpec, m: usize) -> Vec<f64> {
    let dk = grid.dual_spacing();
    let half = (grid.points / 2) as f64;
    (0..grid.n).map(|j| (grid.axis_index(m, j) as f64 - half) * dk).collect()
}

/// Signed index of an FFT bin.
fn signed(bin: usize, n: usize) -> i64 {
    if bin < n / 2 { bin as i64 } else { bin as i64 - n as i64 }
}

fn parity(s: i64) -> f64 {
    if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 }
}

fn theta(k: i64, l: i64, n: usize) -> f64 {
    let half = -(n as i64) / 2;
    if k == half || l == half {
        PI * (k * l).abs() as f64 / n as f64
    } else {
        PI * (k * l) as f64 / n as f64
    }
}

/// Per flat (l, k) index: multi-indices of l (position-dual) and k (frequency-dual).
fn split_indices(grid: &GridSpec, flat: usize) -> (Vec<i64>, Vec<i64>) {
    let d = grid.dim();
    let (lf, kf) = (flat / d, flat % d);
    let n = grid.points;
    let l = (0..grid.n).map(|j| signed(grid.axis_index(lf, j), n)).collect();
    let k = (0..grid.n).map(|j| signed(grid.axis_index(kf, j), n)).collect();
    (l, k)
}

fn shifted(grid: &GridSpec, r: usize, k: &[i64]) -> usize {
    let n = grid.points as i64;
    (0..grid.n).fold(0, |acc, j| {
        let rj = grid.axis_index(r, j) as i64;
        acc * grid.points + (rj + k[j]).rem_euclid(n) as usize
    })
}

/// Op(a) = Σ â(l,k) D(k,l). The first sample a₀ is split off as a₀·I so
/// that constant symbols quantize to exact multiples of the identity.
pub fn weyl_quantize(a: &PhaseSymbol) -> Result<Operator> {
    let grid = a.grid;
    let n = grid.n;
    let d = grid.dim();
    let side = grid.points;
    let anchor = a.values[0];
    let mut data: Vec<C64> = a.values.iter().map(|z| z - anchor).collect();
    let all: Vec<usize> = (0..2 * n).collect();
    fft_axes(&mut data, side, 2 * n, &all, false);
    let norm = 1.0 / (d as f64 * d as f64);
    for (flat, z) in data.iter_mut().enumerate() {
        let (l, k) = split_indices(&grid, flat);
        let sign: f64 = l.iter().chain(&k).map(|&s| parity(s)).product();
        let th: f64 = k.iter().zip(&l).map(|(&kj, &lj)| theta(kj, lj, side)).sum();
        // c(l,k)·(−1)^l, ready for the synthesis over l
        let lsign: f64 = l.iter().map(|&s| parity(s)).product();
        *z *= C64::from_polar(norm * sign * lsign, th);
    }
    let pos: Vec<usize> = (0..n).collect();
    fft_axes(&mut data, side, 2 * n, &pos, true);
    let mut op = Array2::<C64>::zeros((d, d));
    for r in 0..d {
        for kf in 0..d {
            let k: Vec<i64> = (0..n).map(|j| signed(grid.axis_index(kf, j), side)).collect();
            op[[r, shifted(&grid, r, &k)]] = data[r * d + kf];
        }
        op[[r, r]] += anchor;
    }
    Operator::new(grid, op, format!("Op({})", a.label))
}

/// Left inverse of [`weyl_quantize`]: pairs Y against the displacements.
pub fn weyl_symbol(y: &Operator) -> Result<PhaseSymbol> {
    let grid = *y.grid();
    let n = grid.n;
    let d = grid.dim();
    let side = grid.points;
    let e = y.entries();
    let mut data = vec![C64::new(0.0, 0.0); d * d];
    for r in 0..d {
        for kf in 0..d {
            let k: Vec<i64> = (0..n).map(|j| signed(grid.axis_index(kf, j), side)).collect();
            data[r * d + kf] = e[[r, shifted(&grid, r, &k)]];
        }
    }
    let pos: Vec<usize> = (0..n).collect();
    fft_axes(&mut data, side, 2 * n, &pos, false);
    for (flat, z) in data.iter_mut().enumerate() {
        let (l, k) = split_indices(&grid, flat);
        let th: f64 = k.iter().zip(&l).map(|(&kj, &lj)| theta(kj, lj, side)).sum();
        // c = (−1)^l FFT_r(B)/D, â = c e^{−iθ}, then weight (−1)^{l+k} for synthesis
        let ksign: f64 = k.iter().map(|&s| parity(s)).product();
        *z *= C64::from_polar(ksign / d as f64, -th);
    }
    let all: Vec<usize> = (0..2 * n).collect();
    fft_axes(&mut data, side, 2 * n, &all, true);
    PhaseSymbol::new(grid, data, format!("sym({})", y.label))
}

/// Spectral partial derivative ∂^α a; α lists the orders for (x_1..x_n, ξ_1..ξ_n).
/// Odd-order derivatives drop the Nyquist mode along their axis.
pub fn symbol_derivative(a: &PhaseSymbol, alpha: &[usize]) -> Result<PhaseSymbol> {
    let grid = a.grid;
    let n = grid.n;
    if alpha.len() != 2 * n {
        return Err(invalid(format!("multi-index must have {} entries", 2 * n)));
    }
    let side = grid.points;
    let rank = 2 * n;
    let mut data = a.values.clone();
    let active: Vec<usize> = (0..rank).filter(|&ax| alpha[ax] > 0).collect();
    if active.is_empty() {
        return Ok(a.clone());
    }
    fft_axes(&mut data, side, rank, &active, false);
    let h = grid.spacing();
    let dk = grid.dual_spacing();
    for (flat, z) in data.iter_mut().enumerate() {
        let mut f = C64::new(1.0 / (side as f64).powi(active.len() as i32), 0.0);
        for &ax in &active {
            let stride = side.pow((rank - 1 - ax) as u32);
            let s = signed((flat / stride) % side, side);
            let order = alpha[ax] as i32;
            if order % 2 == 1 && s == -(side as i64) / 2 {
                f = C64::new(0.0, 0.0);
                break;
            }
            // position axes pair with u_l = l·2π/L, frequency axes with v_k = k·h
            let w = if ax < n { s as f64 * dk } else { s as f64 * h };
            f *= C64::new(0.0, w).powi(order);
        }
        *z *= f;
    }
    fft_axes(&mut data, side, rank, &active, true);
    PhaseSymbol::new(grid, data, format!("d{:?}({})", alpha, a.label))
}

/// Discrete L^p norm with cell volume (2π/N)^n; p = ∞ is the max modulus.
pub fn symbol_lp_norm(a: &PhaseSymbol, p: SchattenIndex) -> f64 {
    match p {
        SchattenIndex::Infinity => a.values.iter().fold(0.0, |m, z| m.max(z.norm())),
        SchattenIndex::Finite(p) => {
            let cell = (2.0 * PI / a.grid.points as f64).powi(a.grid.n as i32);
            (a.values.iter().map(|z| z.norm().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
        }
    }
}

/// All multi-indices of length `dims` and total order `k`.
pub fn multi_indices(dims: usize, k: usize) -> Vec<Vec<usize>> {
    if dims == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in multi_indices(dims - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeScore {
    pub alpha: Vec<usize>,
    pub norms: Vec<f64>,
    pub growth: GrowthFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderScore {
    pub k: usize,
    pub class: Growth,
    pub max_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolScores {
    pub family: String,
    pub p: SchattenIndex,
    pub k_max: usize,
    pub grids: Vec<GridSpec>,
    pub baselines: Vec<f64>,
    pub derivatives: Vec<DerivativeScore>,
    pub orders: Vec<OrderScore>,
    pub thresholds: Thresholds,
}

/// L^p norms of ∂^α a for |α| ≤ k_max across the refinement family, with
/// growth classification (relative to ‖a‖_p when p < ∞).
pub fn symbol_class_score(family: &[PhaseSymbol], p: SchattenIndex, k_max: usize, th: &Thresholds) -> Result<SymbolScores> {
    if k_max > 3 {
        return Err(invalid(format!("k_max must be <= 3, got {k_max}")));
    }
    if family.len() < 3 {
        return Err(invalid("growth fits need at least three grids"));
    }
    if family.windows(2).any(|w| w[1].grid.points <= w[0].grid.points) {
        return Err(invalid("grids must be strictly increasing in N"));
    }
    let n = family[0].grid.n;
    let ns: Vec<f64> = family.iter().map(|a| a.grid.points as f64).collect();
    let baselines: Vec<f64> = family.iter().map(|a| symbol_lp_norm(a, p)).collect();
    let relative = !p.is_infinite();
    let mut derivatives = Vec::new();
    let mut orders = Vec::new();
    for k in 0..=k_max {
        let mut class = Growth::Bounded;
        let mut max_exp: Option<f64> = None;
        for alpha in multi_indices(2 * n, k) {
            let norms: Vec<f64> = family
                .iter()
                .map(|a| Ok(symbol_lp_norm(&symbol_derivative(a, &alpha)?, p)))
                .collect::<Result<_>>()?;
            let growth = growth_fit(&ns, &norms, &baselines, relative, th);
            class = class.min(growth.class);
            if let Some(e) = growth.exponent {
                max_exp = Some(max_exp.map_or(e, |m: f64| m.max(e)));
            }
            derivatives.push(DerivativeScore { alpha, norms, growth });
        }
        orders.push(OrderScore { k, class, max_exponent: max_exp });
    }
    Ok(SymbolScores {
        family: family[0].label.clone(),
        p,
        k_max,
        grids: family.iter().map(|a| a.grid).collect(),
        baselines,
        derivatives,
        orders,
        thresholds: th.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub symbol: SymbolScores,
    pub operator: RefinementStudy,
    /// Per order: (symbol class, operator class, agree).
    pub agreement: Vec<(Growth, Growth, bool)>,
    pub pass: bool,
}

/// Symbol-side classes vs commutator-side classes of Op(a), order by order.
pub fn correspondence_audit(
    family: &[PhaseSymbol],
    contexts: &[&GridContext],
    p: SchattenIndex,
    k_max: usize,
    th: &Thresholds,
) -> Result<CorrespondenceReport> {
    if family.len() != contexts.len() {
        return Err(invalid("one context per symbol grid required"));
    }
    let symbol = symbol_class_score(family, p, k_max, th)?;
    let ops: Vec<Operator> = family.iter().map(weyl_quantize).collect::<Result<_>>()?;
    let members: Vec<(&GridContext, &Operator)> = contexts.iter().copied().zip(ops.iter()).collect();
    let operator = ck_scores(&family[0].label, &members, p, k_max, th)?;
    let agreement: Vec<(Growth, Growth, bool)> = symbol
        .orders
        .iter()
        .zip(&operator.orders)
        .map(|(s, o)| (s.class, o.class, s.class == o.class))
        .collect();
    let pass = agreement.iter().all(|a| a.2);
    Ok(CorrespondenceReport { symbol, operator, agreement, pass })
}

/// Seeded symbol with independent standard-normal real and imaginary parts.
pub fn random_symbol(grid: GridSpec, seed: u64) -> Result<PhaseSymbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let values = (0..d * d)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    PhaseSymbol::new(grid, values, format!("random(seed={seed})"))
}

/// Sanity checks of the calculus on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalculusChecks {
    pub grid: GridSpec,
    /// max |Op(1) − I|.
    pub identity_defect: f64,
    /// Largest max-modulus error of sym(Op(a)) − a over the random symbols.
    pub roundtrip_error: f64,
    /// ‖Op(a)‖_{S_2} / ‖a‖_{ℓ²} per random symbol.
    pub plancherel_constants: Vec<f64>,
    /// (max − min) / mean of those constants.
    pub plancherel_spread: f64,
}

pub fn calculus_checks(grid: GridSpec, samples: usize, seed: u64) -> Result<CalculusChecks> {
    if samples == 0 {
        return Err(invalid("calculus checks need at least one sample"));
    }
    let one = PhaseSymbol::from_fn(grid, "1", |_, _| C64::new(1.0, 0.0))?;
    let id = weyl_quantize(&one)?;
    let identity_defect = crate::operator::max_abs(&(id.entries() - &Array2::<C64>::eye(grid.dim())).view());
    let mut roundtrip_error = 0.0f64;
    let mut plancherel_constants = Vec::with_capacity(samples);
    for i in 0..samples {
        let a = random_symbol(grid, seed.wrapping_add(i as u64))?;
        let op = weyl_quantize(&a)?;
        roundtrip_error = roundtrip_error.max(weyl_symbol(&op)?.max_abs_diff(&a));
        let hs = op.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let l2 = a.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        plancherel_constants.push(hs / l2);
    }
    let (lo, hi) = plancherel_constants.iter().fold((f64::MAX, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
    let mean = plancherel_constants.iter().sum::<f64>() / samples as f64;
    Ok(CalculusChecks { grid, identity_defect, roundtrip_error, plancherel_constants, plancherel_spread: (hi - lo) / mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{build_momentum, build_position};
    use crate::operator::max_abs;

    fn grid() -> GridSpec {
        GridSpec::new(1, 16, 2.0 * PI * 2.0).unwrap()
    }

    #[test]
    fn constant_quantizes_to_identity_exactly() {
        let g = grid();
        let a = PhaseSymbol::from_fn(g, "1", |_, _| C64::new(1.0, 0.0)).unwrap();
        let op = weyl_quantize(&a).unwrap();
        assert_eq!(max_abs(&(op.entries() - &Array2::<C64>::eye(16)).view()), 0.0);
    }

    #[test]
    fn linear_symbols_give_generators() {
        let g = grid();
        let x = PhaseSymbol::from_fn(g, "x", |x, _| C64::from(x[0])).unwrap();
        let xi = PhaseSymbol::from_fn(g, "xi", |_, xi| C64::from(xi[0])).unwrap();
        let q = build_position(&g, 0).unwrap();
        let p = build_momentum(&g, 0).unwrap();
        assert!(max_abs(&(weyl_quantize(&x).unwrap().entries() - q.entries()).view()) < 1e-12);
        assert!(max_abs(&(weyl_quantize(&xi).unwrap().entries() - p.entries()).view()) < 1e-12);
    }

    #[test]
    fn two_dimensional_round_trip() {
        let g = GridSpec::new(2, 4, 3.0).unwrap();
        let a = PhaseSymbol::from_fn(g, "a", |x, xi| C64::new(x[0] * xi[1] + x[1].sin(), xi[0].cos())).unwrap();
        let back = weyl_symbol(&weyl_quantize(&a).unwrap()).unwrap();
        assert!(a.max_abs_diff(&back) < 1e-12);
        let x2 = PhaseSymbol::from_fn(g, "x2", |x, _| C64::from(x[1])).unwrap();
        let q2 = build_position(&g, 1).unwrap();
        assert!(max_abs(&(weyl_quantize(&x2).unwrap().entries() - q2.entries()).view()) < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = GridSpec::new(1, 8, 2.0 * PI).unwrap();
        let a = PhaseSymbol::from_fn(g, "a", |x, xi| C64::new(x[0], xi[0])).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let b = PhaseSymbol::read_csv(g, buf.as_slice(), "a").unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        assert!(PhaseSymbol::read_csv(g, "x1,xi1,re,im\n0,0,1,0\n".as_bytes(), "bad").is_err());
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 3).len(), 4);
        assert_eq!(multi_indices(4, 2).len(), 10);
        assert_eq!(multi_indices(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn plancherel_constant_is_inverse_sqrt_dim() {
        let g = GridSpec::new(1, 16, 2.0 * PI).unwrap();
        let c = calculus_checks(g, 4, 1).unwrap();
        assert_eq!(c.identity_defect, 0.0);
        assert!(c.roundtrip_error < 1e-12);
        for v in &c.plancherel_constants {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_trig() {
        let g = GridSpec::new(1, 32, 2.0 * PI * 4.0).unwrap();
        let a = PhaseSymbol::from_fn(g, "s", |x, _| C64::from(x[0].sin())).unwrap();
        let da = symbol_derivative(&a, &[1, 0]).unwrap();
        let expect = PhaseSymbol::from_fn(g, "c", |x, _| C64::from(x[0].cos())).unwrap();
        assert!(da.max_abs_diff(&expect) < 1e-10);
    }
}
