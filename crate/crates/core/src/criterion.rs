//! Commutator criterion: growth of ‖[A_j1, … [A_jk, Y]…]‖_q under grid
//! refinement, the inclusion-chain audit and the embedding check.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::context::{GridContext, Topology};
use crate::error::{invalid, LabError, Result};
use crate::grid::GridSpec;
use crate::operator::{CommutatorWord, Operator, SchattenIndex};
use crate::orbit::{ContinuityReport, SmoothnessReport};
use crate::verdict::{growth_fit, Growth, GrowthFit, Thresholds, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordStudy {
    pub word: CommutatorWord,
    pub name: String,
    /// Windowed Schatten-q norm per grid.
    pub norms: Vec<f64>,
    /// Round-off level per grid; norms below it are fitted as zero.
    pub noise_floor: Vec<f64>,
    pub growth: GrowthFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub k: usize,
    pub class: Growth,
    pub max_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub family: String,
    pub q: SchattenIndex,
    pub k_max: usize,
    pub grids: Vec<GridSpec>,
    pub windowed: bool,
    /// ‖Y_N‖_q per grid (the reference for relative fits when q < ∞).
    pub baselines: Vec<f64>,
    pub words: Vec<WordStudy>,
    /// Orders 0..=k_max; order k is bounded iff every length-k word is.
    pub orders: Vec<OrderStudy>,
    pub thresholds: Thresholds,
}

impl RefinementStudy {
    pub fn class(&self, k: usize) -> Option<Growth> {
        self.orders.get(k).map(|o| o.class)
    }

    pub fn word(&self, w: &CommutatorWord) -> Option<&WordStudy> {
        self.words.iter().find(|s| &s.word == w)
    }
}

/// Iterated commutators of every word up to `k_max` for one operator,
/// sharing suffixes; returns reduced-frame norms keyed by word.
fn commutator_norms(ctx: &GridContext, y: &Operator, k_max: usize, q: SchattenIndex) -> Result<BTreeMap<CommutatorWord, f64>> {
    let alphabet = ctx.generators.noncentral();
    let mut out = BTreeMap::new();
    out.insert(CommutatorWord::empty(), ctx.measure(&y.entries().view(), Topology::Norm { q })?);
    let mut level: Vec<(Vec<usize>, Array2<C64>)> = vec![(Vec::new(), y.entries().clone())];
    for k in 1..=k_max {
        let mut next = Vec::new();
        for (w, x) in &level {
            for &j in &alphabet {
                let z = ctx.generators.ad(j, x);
                let mut word = vec![j];
                word.extend(w.iter().copied());
                out.insert(CommutatorWord(word.clone()), ctx.measure(&z.view(), Topology::Norm { q })?);
                if k < k_max {
                    next.push((word, z));
                }
            }
        }
        level = next;
    }
    Ok(out)
}

/// FFT round-off in ad_{A_j} is relative to ‖A_j‖‖Y‖, so a word's
/// commutator cannot be told apart from zero below ~ε‖Y‖Π 2‖A_j‖.
pub(crate) fn roundoff_floor(gens: &crate::heisenberg::GeneratorSet, w: &CommutatorWord, base: f64) -> f64 {
    w.0.iter().fold(64.0 * f64::EPSILON * base, |acc, &j| acc * 2.0 * gens.generator_norm(j))
}

/// Refinement study of a family: one operator per grid, N increasing, at
/// least three grids.
pub fn ck_scores(
    family: &str,
    members: &[(&GridContext, &Operator)],
    q: SchattenIndex,
    k_max: usize,
    th: &Thresholds,
) -> Result<RefinementStudy> {
    if k_max > 3 {
        return Err(invalid(format!("k_max must be <= 3, got {k_max}")));
    }
    if members.len() < 3 {
        return Err(invalid("growth fits need at least three grids"));
    }
    if members.windows(2).any(|w| w[1].0.grid.points <= w[0].0.grid.points) {
        return Err(invalid("grids must be strictly increasing in N"));
    }
    for (ctx, y) in members {
        if *y.grid() != ctx.grid {
            return Err(LabError::GridMismatch("operator and context grids differ".into()));
        }
    }
    th.validate()?;
    let per_grid: Vec<BTreeMap<CommutatorWord, f64>> = members
        .iter()
        .map(|(ctx, y)| commutator_norms(ctx, y, k_max, q))
        .collect::<Result<_>>()?;
    let ns: Vec<f64> = members.iter().map(|(c, _)| c.grid.points as f64).collect();
    let baselines: Vec<f64> = per_grid.iter().map(|m| m[&CommutatorWord::empty()]).collect();
    let relative = !q.is_infinite();
    let gens = &members[0].0.generators;
    let mut words = Vec::new();
    let mut orders = Vec::new();
    for k in 0..=k_max {
        let mut class = Growth::Bounded;
        let mut max_exponent: Option<f64> = None;
        for w in CommutatorWord::all_of_length(&gens.noncentral(), k) {
            let norms: Vec<f64> = per_grid.iter().map(|m| m[&w]).collect();
            let noise_floor: Vec<f64> = members
                .iter()
                .zip(&baselines)
                .map(|((ctx, _), b)| roundoff_floor(&ctx.generators, &w, *b))
                .collect();
            let snapped: Vec<f64> = norms.iter().zip(&noise_floor).map(|(v, f)| if v <= f { 0.0 } else { *v }).collect();
            let growth = growth_fit(&ns, &snapped, &baselines, relative, th);
            class = class.min(growth.class);
            if let Some(e) = growth.exponent {
                max_exponent = Some(max_exponent.map_or(e, |m: f64| m.max(e)));
            }
            words.push(WordStudy { name: gens.word_name(&w), word: w, norms, noise_floor, growth });
        }
        orders.push(OrderStudy { k, class, max_exponent });
    }
    Ok(RefinementStudy {
        family: family.to_string(),
        q,
        k_max,
        grids: members.iter().map(|(c, _)| c.grid).collect(),
        windowed: members[0].0.is_windowed(),
        baselines,
        words,
        orders,
        thresholds: th.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub k: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainAudit {
    pub family: String,
    pub q: SchattenIndex,
    /// Norm-topology Y^k verdicts, k = 0..=k_max.
    pub y_verdicts: Vec<Verdict>,
    /// C^k classes, k = 0..=k_max (order 0 is plain boundedness).
    pub c_classes: Vec<Growth>,
    pub violations: Vec<ChainRecord>,
    pub confirmations: Vec<ChainRecord>,
}

impl ChainAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks Y^k ⊆ C^k ⊆ Y^{k−1} order by order. A violation is Y^k pass with
/// C^k unbounded, or C^k bounded with Y^{k−1} fail. Strict inclusions that
/// are actually observed are recorded as confirmations.
pub fn chain_audit(smooth: &SmoothnessReport, study: &RefinementStudy, k_max: usize) -> Result<ChainAudit> {
    if smooth.k_max < k_max || study.k_max < k_max {
        return Err(invalid(format!(
            "order mismatch: smoothness covers {}, study covers {}, audit wants {k_max}",
            smooth.k_max, study.k_max
        )));
    }
    if smooth.q != study.q {
        return Err(invalid("smoothness report and study use different Schatten indices"));
    }
    let y: Vec<Verdict> = (0..=k_max).map(|k| smooth.orders[k].norm).collect();
    let c: Vec<Growth> = (0..=k_max).map(|k| study.orders[k].class).collect();
    let mut violations = Vec::new();
    let mut confirmations = Vec::new();
    for k in 1..=k_max {
        if y[k] == Verdict::Pass && c[k] == Growth::Unbounded {
            violations.push(ChainRecord { k, message: format!("Y{k}(norm) pass but C{k} unbounded") });
        }
        if c[k] == Growth::Bounded && y[k - 1] == Verdict::Fail {
            violations.push(ChainRecord { k, message: format!("C{k} bounded but Y{}(norm) fail", k - 1) });
        }
        if c[k] == Growth::Bounded && y[k] == Verdict::Fail {
            confirmations.push(ChainRecord { k, message: format!("C{k} pass, Y{k}(norm) fail") });
        }
        if y[k - 1] == Verdict::Pass && c[k] == Growth::Unbounded {
            confirmations.push(ChainRecord { k, message: format!("Y{}(norm) pass, C{k} fail", k - 1) });
        }
    }
    Ok(ChainAudit { family: study.family.clone(), q: study.q, y_verdicts: y, c_classes: c, violations, confirmations })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub family: String,
    pub c1: Growth,
    pub continuity: Verdict,
    pub holds: bool,
}

/// C¹-bounded families must have a continuous orbit.
pub fn sobolev_embedding_check(study: &RefinementStudy, continuity: &[&ContinuityReport]) -> Result<EmbeddingCheck> {
    let c1 = study.class(1).ok_or_else(|| invalid("study must cover order 1"))?;
    let cont = continuity.iter().map(|c| c.verdict).min().unwrap_or(Verdict::Inconclusive);
    let holds = !(c1 == Growth::Bounded && cont == Verdict::Fail);
    Ok(EmbeddingCheck { family: study.family.clone(), c1, continuity: cont, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ProbeSpec;
    use crate::window::WindowSpec;

    #[test]
    fn identity_family_bounded_everywhere() {
        let ctxs: Vec<GridContext> = [16, 32, 64]
            .iter()
            .map(|&n| GridContext::new(GridSpec::new(1, n, 6.0).unwrap(), WindowSpec::default(), &ProbeSpec::default()).unwrap())
            .collect();
        let ids: Vec<Operator> = ctxs.iter().map(|c| Operator::identity(c.grid)).collect();
        let members: Vec<(&GridContext, &Operator)> = ctxs.iter().zip(ids.iter()).collect();
        let s = ck_scores("identity", &members, SchattenIndex::Infinity, 2, &Thresholds::default()).unwrap();
        assert!(s.orders.iter().all(|o| o.class == Growth::Bounded));
        assert!(ck_scores("identity", &members[..2], SchattenIndex::Infinity, 2, &Thresholds::default()).is_err());
        assert!(ck_scores("identity", &members, SchattenIndex::Infinity, 4, &Thresholds::default()).is_err());
    }
}
