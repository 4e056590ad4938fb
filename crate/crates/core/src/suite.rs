//! Named operator and symbol families with their expected classifications.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{GridSpec, LengthRule};
use crate::operator::Operator;
use crate::orbit::FamilyScales;
use crate::verdict::Verdict;
use crate::weyl::{weyl_quantize, PhaseSymbol};

/// A family is a name plus numeric parameters; building it on a grid is
/// deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// One expected verdict, keyed `Y{k}_norm`, `Y{k}_strong` or `C{k}`
/// (operator-norm setting).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub key: String,
    pub expected: Verdict,
}

const OPERATOR_FAMILIES: [&str; 5] = ["identity", "smooth_gaussian", "triangle_wave", "holder_half", "random_hermitian"];
const SYMBOL_FAMILIES: [&str; 4] = ["constant", "coordinate", "separable_trig", "chirp"];

fn allowed_params(name: &str) -> &'static [&'static str] {
    match name {
        "identity" => &["n", "length"],
        "smooth_gaussian" => &["n", "length", "width"],
        "triangle_wave" => &["n", "length", "period", "slope"],
        "holder_half" => &["n", "length", "period"],
        "random_hermitian" => &["n", "length", "seed"],
        "constant" => &["n", "length", "value"],
        "coordinate" => &["n", "length"],
        "separable_trig" => &["n", "length", "lambda"],
        "chirp" => &["n", "length", "beta"],
        _ => &[],
    }
}

fn with(name: &str, params: &[(&str, f64)]) -> FamilySpec {
    FamilySpec {
        name: name.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

impl FamilySpec {
    pub fn identity() -> Self {
        with("identity", &[])
    }

    pub fn smooth_gaussian(width: f64) -> Self {
        with("smooth_gaussian", &[("width", width)])
    }

    pub fn triangle_wave(period: f64, slope: f64) -> Self {
        with("triangle_wave", &[("period", period), ("slope", slope)])
    }

    pub fn holder_half(period: f64) -> Self {
        with("holder_half", &[("period", period)])
    }

    pub fn random_hermitian(seed: u64) -> Self {
        with("random_hermitian", &[("seed", seed as f64)])
    }

    pub fn constant(value: f64) -> Self {
        with("constant", &[("value", value)])
    }

    pub fn coordinate() -> Self {
        with("coordinate", &[])
    }

    pub fn separable_trig(lambda: f64) -> Self {
        with("separable_trig", &[("lambda", lambda)])
    }

    pub fn chirp(beta: f64) -> Self {
        with("chirp", &[("beta", beta)])
    }

    /// Stable identifier: name plus sorted parameters.
    pub fn id(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.name, p.join(","))
    }

    pub fn is_symbol(&self) -> bool {
        SYMBOL_FAMILIES.contains(&self.name.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if !OPERATOR_FAMILIES.contains(&self.name.as_str()) && !self.is_symbol() {
            return Err(invalid(format!("unknown family '{}'", self.name)));
        }
        let allowed = allowed_params(&self.name);
        for (k, v) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(invalid(format!("family '{}': unknown parameter '{k}'", self.name)));
            }
            if !v.is_finite() {
                return Err(invalid(format!("family '{}': parameter '{k}' must be finite", self.name)));
            }
        }
        for key in ["width", "period", "length"] {
            if self.params.get(key).is_some_and(|&v| v <= 0.0) {
                return Err(invalid(format!("family '{}': '{key}' must be positive", self.name)));
            }
        }
        let n = self.param("n", 1.0);
        if n < 1.0 || n.fract() != 0.0 {
            return Err(invalid(format!("family '{}': 'n' must be a positive integer", self.name)));
        }
        Ok(())
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn spatial_dim(&self) -> usize {
        self.param("n", 1.0) as usize
    }

    /// Operator families live on a fixed torus (default L = 2π); symbol
    /// families grow the box with N.
    pub fn length_rule(&self) -> LengthRule {
        match self.params.get("length") {
            Some(&length) => LengthRule::Fixed { length },
            None if self.is_symbol() => LengthRule::SqrtPow2,
            None => LengthRule::Fixed { length: 2.0 * PI },
        }
    }

    pub fn grid(&self, points: usize) -> Result<GridSpec> {
        self.length_rule().grid(self.spatial_dim(), points)
    }

    pub fn scales(&self) -> FamilyScales {
        match self.name.as_str() {
            "triangle_wave" | "holder_half" => {
                let p = self.param("period", 2.0 * PI);
                FamilyScales { position: p, frequency: p }
            }
            "separable_trig" => FamilyScales {
                position: 2.0 * PI,
                frequency: 2.0 * PI / self.param("lambda", PI / 4.0),
            },
            "constant" | "coordinate" | "chirp" => FamilyScales { position: 2.0 * PI, frequency: 8.0 },
            _ => FamilyScales { position: 2.0 * PI, frequency: 2.0 * PI },
        }
    }

    fn check_period(&self, grid: &GridSpec, period: f64) -> Result<()> {
        let ratio = grid.length / period;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(invalid(format!(
                "family '{}': period {period} does not divide L = {}",
                self.name, grid.length
            )));
        }
        Ok(())
    }

    fn multiplication(&self, grid: &GridSpec, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let vals: Vec<C64> = grid.coordinate_column(0).into_iter().map(|x| C64::from(f(x))).collect();
        Operator::diagonal(*grid, &vals, self.id())
    }

    /// The family member on `grid` as an operator (symbols are quantized).
    pub fn build_operator(&self, grid: &GridSpec) -> Result<Operator> {
        self.validate()?;
        if self.is_symbol() {
            return Ok(weyl_quantize(&self.build_symbol(grid)?)?.with_label(self.id()));
        }
        match self.name.as_str() {
            "identity" => Ok(Operator::identity(*grid).with_label(self.id())),
            "smooth_gaussian" => {
                let w = self.param("width", 0.3);
                let l = grid.length;
                self.multiplication(grid, |x| {
                    (-3..=3).map(|j| (-(x + j as f64 * l).powi(2) / (2.0 * w * w)).exp()).sum()
                })
            }
            "triangle_wave" => {
                let p = self.param("period", 2.0 * PI);
                let s = self.param("slope", 1.0);
                self.check_period(grid, p)?;
                self.multiplication(grid, |x| s * (wrap(x, p).abs() - 0.25 * p))
            }
            "holder_half" => {
                let p = self.param("period", 2.0 * PI);
                self.check_period(grid, p)?;
                self.multiplication(grid, |x| wrap(x, p).abs().sqrt())
            }
            "random_hermitian" => {
                let seed = self.param("seed", 0.0) as u64;
                let d = grid.dim();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = Array2::from_shape_simple_fn((d, d), || {
                    C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                });
                let scale = C64::from(0.25 / (d as f64).sqrt());
                let h = (&g + &g.t().mapv(|z| z.conj())) * scale;
                Operator::new(*grid, h, self.id())
            }
            other => Err(invalid(format!("unknown family '{other}'"))),
        }
    }

    /// The family member as a phase-space symbol; only symbol families.
    pub fn build_symbol(&self, grid: &GridSpec) -> Result<PhaseSymbol> {
        self.validate()?;
        let id = self.id();
        match self.name.as_str() {
            "constant" => {
                let v = self.param("value", 1.0);
                PhaseSymbol::from_fn(*grid, id, |_, _| C64::from(v))
            }
            "coordinate" => PhaseSymbol::from_fn(*grid, id, |x, _| C64::from(x[0])),
            "separable_trig" => {
                let lambda = self.param("lambda", PI / 4.0);
                self.check_period(grid, 2.0 * PI)?;
                let box_len = grid.points as f64 * grid.dual_spacing();
                let r = box_len * lambda / (2.0 * PI);
                if (r - r.round()).abs() > 1e-9 * r.max(1.0) || r.round() < 1.0 {
                    return Err(invalid(format!(
                        "family '{}': frequency period {} does not divide the frequency box {box_len}",
                        self.name,
                        2.0 * PI / lambda
                    )));
                }
                PhaseSymbol::from_fn(*grid, id, |x, xi| C64::from(x[0].sin() * (lambda * xi[0]).cos()))
            }
            "chirp" => {
                let beta = self.param("beta", 1.0 / 16.0);
                let l = grid.length;
                let amp = l * l / (2.0 * PI * PI);
                PhaseSymbol::from_fn(*grid, id, |x, _| {
                    let u = amp * (1.0 - (2.0 * PI * x[0] / l).cos());
                    C64::from((beta * u).sin())
                })
            }
            other => Err(invalid(format!("'{other}' is not a symbol family"))),
        }
    }

    /// Expected verdicts in the operator norm.
    pub fn expectations(&self) -> Vec<Expectation> {
        let e = |key: &str, v: Verdict| Expectation { key: key.to_string(), expected: v };
        let all_pass = || {
            let mut v = Vec::new();
            for k in 0..=3 {
                v.push(e(&format!("Y{k}_norm"), Verdict::Pass));
                v.push(e(&format!("Y{k}_strong"), Verdict::Pass));
            }
            for k in 1..=3 {
                v.push(e(&format!("C{k}"), Verdict::Pass));
            }
            v
        };
        match self.name.as_str() {
            "identity" | "smooth_gaussian" | "constant" | "separable_trig" => all_pass(),
            "triangle_wave" => vec![
                e("Y0_norm", Verdict::Pass),
                e("Y1_norm", Verdict::Fail),
                e("Y1_strong", Verdict::Pass),
                e("C1", Verdict::Pass),
                e("C2", Verdict::Fail),
            ],
            "holder_half" => vec![e("Y0_norm", Verdict::Pass), e("Y1_norm", Verdict::Fail), e("C1", Verdict::Fail)],
            "random_hermitian" => vec![e("Y0_norm", Verdict::Pass), e("C1", Verdict::Fail)],
            "chirp" => vec![e("Y1_norm", Verdict::Fail), e("C1", Verdict::Fail)],
            _ => Vec::new(),
        }
    }
}

/// x reduced to [−p/2, p/2).
fn wrap(x: f64, p: f64) -> f64 {
    x - p * (x / p + 0.5).floor()
}

/// The audited example suite: controls, both strictness witnesses, a
/// random control and the Weyl symbols (the unbounded coordinate symbol is
/// only a calculus check and is left out).
pub fn default_suite() -> Vec<FamilySpec> {
    vec![
        FamilySpec::identity(),
        FamilySpec::smooth_gaussian(0.3),
        FamilySpec::triangle_wave(2.0 * PI, 1.0),
        FamilySpec::holder_half(2.0 * PI),
        FamilySpec::random_hermitian(7),
        FamilySpec::constant(1.0),
        FamilySpec::separable_trig(PI / 4.0),
        FamilySpec::chirp(1.0 / 16.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_geometry() {
        let f = FamilySpec::triangle_wave(2.0 * PI, 1.0);
        let g = f.grid(64).unwrap();
        let y = f.build_operator(&g).unwrap();
        let sup = y.entries().diag().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!((sup - PI / 2.0).abs() < 1e-12);
        let bad = GridSpec::new(1, 64, 5.0).unwrap();
        assert!(f.build_operator(&bad).is_err());
    }

    #[test]
    fn deterministic_and_hermitian() {
        let f = FamilySpec::random_hermitian(3);
        let g = f.grid(32).unwrap();
        let a = f.build_operator(&g).unwrap();
        let b = f.build_operator(&g).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert!(a.is_hermitian(0.0));
    }

    #[test]
    fn validation() {
        assert!(FamilySpec { name: "nope".into(), params: BTreeMap::new() }.validate().is_err());
        let mut f = FamilySpec::smooth_gaussian(0.3);
        f.params.insert("colour".into(), 1.0);
        assert!(f.validate().is_err());
        assert!(FamilySpec::smooth_gaussian(-1.0).validate().is_err());
    }

    #[test]
    fn trig_needs_commensurate_box() {
        let f = FamilySpec::separable_trig(PI / 4.0);
        assert!(f.build_symbol(&f.grid(64).unwrap()).is_ok());
        assert!(f.build_symbol(&f.grid(32).unwrap()).is_err());
    }

    #[test]
    fn ids_are_stable() {
        assert_eq!(FamilySpec::triangle_wave(2.0, 1.0).id(), "triangle_wave(period=2,slope=1)");
        assert_eq!(FamilySpec::identity().id(), "identity");
    }
}
