//! Verdict vocabulary and the decision thresholds behind it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fit::loglog_slope;

/// Outcome of a regularity test. Ordered by strength: `Fail < Inconclusive < Pass`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fail,
    Inconclusive,
    Pass,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Growth classification of a norm sequence under refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Unbounded,
    Inconclusive,
    Bounded,
}

impl Growth {
    pub fn as_verdict(self) -> Verdict {
        match self {
            Growth::Bounded => Verdict::Pass,
            Growth::Unbounded => Verdict::Fail,
            Growth::Inconclusive => Verdict::Inconclusive,
        }
    }
}

/// Every numeric cut-off used to turn measurements into verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Growth exponent below which a sequence counts as bounded.
    pub bounded_exponent: f64,
    /// Growth exponent at or above which a sequence counts as unbounded.
    pub unbounded_exponent: f64,
    /// Largest allowed ratio between the last two refinement values for "bounded".
    pub stability_ratio: f64,
    /// Relative Cauchy tail below which difference quotients have converged.
    pub cauchy_pass: f64,
    /// Relative Cauchy tail above which they are declared divergent.
    pub cauchy_fail: f64,
    /// Minimal log-log decay rate of successive Cauchy gaps for a pass.
    pub cauchy_rate: f64,
    /// Relative modulus at the smallest radius for orbit continuity.
    pub continuity_tol: f64,
    /// Norms below this fraction of the reference scale are treated as zero.
    pub zero_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bounded_exponent: 0.1,
            unbounded_exponent: 0.25,
            stability_ratio: 1.15,
            cauchy_pass: 1e-4,
            cauchy_fail: 1e-1,
            cauchy_rate: 0.25,
            continuity_tol: 1e-3,
            zero_tol: 1e-10,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.bounded_exponent,
            self.unbounded_exponent,
            self.stability_ratio,
            self.cauchy_pass,
            self.cauchy_fail,
            self.cauchy_rate,
            self.continuity_tol,
            self.zero_tol,
        ];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(invalid("thresholds: all values must be finite"));
        }
        if self.bounded_exponent >= self.unbounded_exponent {
            return Err(invalid("thresholds: bounded_exponent must be < unbounded_exponent"));
        }
        if !(self.cauchy_pass > 0.0 && self.cauchy_pass < self.cauchy_fail) {
            return Err(invalid("thresholds: need 0 < cauchy_pass < cauchy_fail"));
        }
        if self.stability_ratio <= 1.0 {
            return Err(invalid("thresholds: stability_ratio must exceed 1"));
        }
        if self.cauchy_rate <= 0.0 || self.continuity_tol <= 0.0 || self.zero_tol < 0.0 {
            return Err(invalid("thresholds: cauchy_rate, continuity_tol must be positive"));
        }
        Ok(())
    }
}


/// Growth evidence for one norm sequence across refinements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Fitted log-log slope against N; `None` for identically zero sequences.
    pub exponent: Option<f64>,
    /// Ratio of the last two fitted values.
    pub last_ratio: Option<f64>,
    /// Slope over the last refinement step alone.
    pub tail_exponent: Option<f64>,
    /// Whether the values were divided by the baseline norms first.
    pub relative: bool,
    pub class: Growth,
}

/// Classifies `norms` over grids `ns`. Values at or below `zero_tol` times the
/// baseline count as zero; with `relative`, norms are divided by the baseline
/// before fitting.
pub fn growth_fit(ns: &[f64], norms: &[f64], baselines: &[f64], relative: bool, th: &Thresholds) -> GrowthFit {
    let zero = norms
        .iter()
        .zip(baselines)
        .all(|(v, b)| *v <= th.zero_tol * b.max(f64::MIN_POSITIVE));
    if zero {
        return GrowthFit { exponent: None, last_ratio: None, tail_exponent: None, relative, class: Growth::Bounded };
    }
    let vals: Vec<f64> = if relative {
        norms.iter().zip(baselines).map(|(v, b)| if *b > 0.0 { v / b } else { 0.0 }).collect()
    } else {
        norms.to_vec()
    };
    let exponent = if vals.iter().all(|v| *v > 0.0) { loglog_slope(ns, &vals) } else { None };
    let last_ratio = match vals.len() {
        n if n >= 2 && vals[n - 2] > 0.0 => Some(vals[n - 1] / vals[n - 2]),
        _ => None,
    };
    let n = vals.len();
    let tail_exponent = match last_ratio {
        Some(r) if r > 0.0 && n >= 2 => Some(r.ln() / (ns[n - 1] / ns[n - 2]).ln()),
        _ => None,
    };
    // The overall slope must be confirmed by the last step: early grids can
    // still be filling in a bounded limit, and a sequence that has flattened
    // out is not diverging.
    let finite = vals.iter().all(|v| v.is_finite());
    let class = match (exponent, tail_exponent, last_ratio) {
        (Some(e), Some(t), _) if e >= th.unbounded_exponent && t >= th.bounded_exponent => Growth::Unbounded,
        (_, Some(t), Some(r)) if t < th.bounded_exponent && r < th.stability_ratio && finite => Growth::Bounded,
        _ => Growth::Inconclusive,
    };
    GrowthFit { exponent, last_ratio, tail_exponent, relative, class }
}
