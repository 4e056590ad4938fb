//! Pipeline execution for each command and the structured report it yields.

use heisenlab::context::{GridContext, ProbeSpec};
use heisenlab::criterion::{chain_audit, ck_scores, sobolev_embedding_check, ChainAudit, EmbeddingCheck, RefinementStudy};
use heisenlab::garding::{density_study, DensityReport};
use heisenlab::orbit::{classify_yk, one_param_reduction_check, ContinuityReport, OneParamReport, SmoothnessReport};
use heisenlab::suite::FamilySpec;
use heisenlab::verdict::{Thresholds, Verdict};
use heisenlab::weyl::{calculus_checks, correspondence_audit, CalculusChecks, CorrespondenceReport, PhaseSymbol};
use heisenlab::{GridSpec, LabError, Operator, SchattenIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{cache_key, Cache};
use crate::config::{Command, RunConfig};

pub const ROUNDTRIP_TOL: f64 = 1e-10;
pub const PLANCHEREL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QSection {
    pub q: SchattenIndex,
    pub smoothness: Option<SmoothnessReport>,
    pub study: Option<RefinementStudy>,
    pub chain: Option<ChainAudit>,
    pub embedding: Option<EmbeddingCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub key: String,
    pub q: SchattenIndex,
    pub expected: Verdict,
    pub observed: Verdict,
    pub matched: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyRun {
    pub family: String,
    pub spec: FamilySpec,
    pub grids: Vec<GridSpec>,
    pub sections: Vec<QSection>,
    /// Suite expectations are stated for the operator norm, so they are
    /// checked against the q = ∞ section only.
    pub expectations: Vec<ExpectationCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionRun {
    pub family: String,
    pub grid: GridSpec,
    pub checks: Vec<OneParamReport>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylRun {
    pub checks: CalculusChecks,
    pub identity_exact: bool,
    pub roundtrip_ok: bool,
    pub plancherel_ok: bool,
    pub audits: Vec<CorrespondenceReport>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub chain_violations: usize,
    pub embedding_violations: usize,
    pub expectation_mismatches: usize,
    /// Checks outside the exit contract of this command that did not pass.
    pub failed_checks: Vec<String>,
    /// Everything that makes the exit status non-zero.
    pub violations: Vec<String>,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub thresholds: Thresholds,
    pub config: RunConfig,
    pub families: Vec<FamilyRun>,
    pub reduction: Vec<ReductionRun>,
    pub garding: Vec<DensityReport>,
    pub weyl: Option<WeylRun>,
    /// Interpretation caveats attached to the families that were run.
    pub notes: Vec<String>,
    pub summary: Summary,
}

const WITNESS_NOTE: &str = "Y^2 \\ C^1 is empty under the audited chain Y^{k+1} ⊆ C^{k+1} ⊆ Y^k ⊆ C^k, so no \
family is offered for it; the second strict inclusion is witnessed as Y^0 \\ C^1 by holder_half instead.";

fn notes_for(families: &[FamilySpec]) -> Vec<String> {
    let mut notes = Vec::new();
    if families.iter().any(|f| f.name == "holder_half") {
        notes.push(WITNESS_NOTE.to_string());
    }
    notes
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{family}: {source}")]
    Family { family: String, source: LabError },
    #[error(transparent)]
    Lab(#[from] LabError),
}

fn tag(family: &FamilySpec) -> impl Fn(LabError) -> RunError + '_ {
    move |source| RunError::Family { family: family.id(), source }
}

/// Grid for a family at N: a family's own `n` / `length` win over the
/// run-wide settings.
pub fn family_grid(cfg: &RunConfig, f: &FamilySpec, points: usize) -> heisenlab::Result<GridSpec> {
    let n = f.params.get("n").map(|&v| v as usize).unwrap_or(cfg.grid.n);
    let rule = match cfg.grid.length {
        Some(rule) if !f.params.contains_key("length") => rule,
        _ => f.length_rule(),
    };
    rule.grid(n, points)
}

/// Builds contexts and operators only when some cached blob is missing.
struct Members<'a> {
    cfg: &'a RunConfig,
    family: &'a FamilySpec,
    built: Option<(Vec<GridContext>, Vec<Operator>)>,
}

impl<'a> Members<'a> {
    fn get(&mut self) -> Result<&(Vec<GridContext>, Vec<Operator>), RunError> {
        if self.built.is_none() {
            let f = self.family;
            let mut ctxs = Vec::new();
            let mut ops = Vec::new();
            for &n in &self.cfg.grid.points {
                let g = family_grid(self.cfg, f, n).map_err(tag(f))?;
                ops.push(f.build_operator(&g).map_err(tag(f))?);
                ctxs.push(GridContext::new(g, self.cfg.window, &self.cfg.probes).map_err(tag(f))?);
            }
            self.built = Some((ctxs, ops));
        }
        Ok(self.built.as_ref().unwrap())
    }
}

fn pairs(m: &(Vec<GridContext>, Vec<Operator>)) -> Vec<(&GridContext, &Operator)> {
    m.0.iter().zip(m.1.iter()).collect()
}

fn family_run(cfg: &RunConfig, command: Command, f: &FamilySpec, cache: &Cache) -> Result<FamilyRun, RunError> {
    let grids: Vec<GridSpec> = cfg.grid.points.iter().map(|&n| family_grid(cfg, f, n)).collect::<Result<_, _>>().map_err(tag(f))?;
    let id = f.id();
    let th = &cfg.thresholds;
    let mut members = Members { cfg, family: f, built: None };
    let mut sections = Vec::new();
    for &q in &cfg.q {
        let smoothness = if command.needs_smoothness() {
            let key = cache_key(&("smoothness", f, &grids, q, cfg.k_max, th, cfg.window, &cfg.probes, &cfg.orbit));
            Some(cache.get_or_compute(&key, || {
                let m = members.get()?;
                classify_yk(&id, &pairs(m), q, cfg.k_max, f.scales(), &cfg.orbit, th).map_err(tag(f))
            })?)
        } else {
            None
        };
        let study = if command.needs_study() {
            let key = cache_key(&("study", f, &grids, q, cfg.k_max, th, cfg.window));
            Some(cache.get_or_compute(&key, || {
                let m = members.get()?;
                ck_scores(&id, &pairs(m), q, cfg.k_max, th).map_err(tag(f))
            })?)
        } else {
            None
        };
        let (chain, embedding) = match (&smoothness, &study) {
            (Some(s), Some(c)) => {
                let conts: Vec<&ContinuityReport> = s.continuity.iter().map(|c| &c[0]).collect();
                (
                    Some(chain_audit(s, c, cfg.k_max).map_err(tag(f))?),
                    Some(sobolev_embedding_check(c, &conts).map_err(tag(f))?),
                )
            }
            _ => (None, None),
        };
        sections.push(QSection { q, smoothness, study, chain, embedding });
    }
    let expectations = check_expectations(f, &sections, cfg.k_max);
    Ok(FamilyRun { family: id, spec: f.clone(), grids, sections, expectations })
}

fn check_expectations(f: &FamilySpec, sections: &[QSection], k_max: usize) -> Vec<ExpectationCheck> {
    let Some(sec) = sections.iter().find(|s| s.q.is_infinite()) else { return Vec::new() };
    let mut out = Vec::new();
    for e in f.expectations() {
        let (kind, k) = match parse_key(&e.key) {
            Some(x) => x,
            None => continue,
        };
        if k > k_max {
            continue;
        }
        let observed = match (kind, &sec.smoothness, &sec.study) {
            ("norm", Some(s), _) => s.norm_verdict(k),
            ("strong", Some(s), _) => s.strong_verdict(k),
            ("C", _, Some(c)) => c.class(k).map(|g| g.as_verdict()),
            _ => None,
        };
        if let Some(observed) = observed {
            out.push(ExpectationCheck { key: e.key, q: sec.q, expected: e.expected, observed, matched: observed == e.expected });
        }
    }
    out
}

/// "Y{k}_norm" → ("norm", k), "Y{k}_strong" → ("strong", k), "C{k}" → ("C", k).
fn parse_key(key: &str) -> Option<(&'static str, usize)> {
    if let Some(rest) = key.strip_prefix('C') {
        return rest.parse().ok().map(|k| ("C", k));
    }
    let rest = key.strip_prefix('Y')?;
    let (k, topo) = rest.split_once('_')?;
    let k = k.parse().ok()?;
    match topo {
        "norm" => Some(("norm", k)),
        "strong" => Some(("strong", k)),
        _ => None,
    }
}

fn reduction_run(cfg: &RunConfig, index: usize, f: &FamilySpec) -> Result<ReductionRun, RunError> {
    let r = &cfg.reduction;
    let g = family_grid(cfg, f, r.points).map_err(tag(f))?;
    let ctx = GridContext::raw(g, &ProbeSpec::default()).map_err(tag(f))?;
    let y = f.build_operator(&g).map_err(tag(f))?;
    let mut checks = Vec::new();
    for &q in &cfg.q {
        for (j, &delta) in r.deltas.iter().enumerate() {
            let seed = cfg.seed.wrapping_add(1000 * index as u64 + j as u64);
            checks.push(one_param_reduction_check(&ctx, &y, delta, r.samples, q, seed).map_err(tag(f))?);
        }
    }
    let holds = checks.iter().all(|c| c.holds);
    Ok(ReductionRun { family: f.id(), grid: g, checks, holds })
}

fn density_run(cfg: &RunConfig, f: &FamilySpec, cache: &Cache) -> Result<DensityReport, RunError> {
    let grids: Vec<GridSpec> = cfg.grid.points.iter().map(|&n| family_grid(cfg, f, n)).collect::<Result<_, _>>().map_err(tag(f))?;
    let g = &cfg.garding;
    let key = cache_key(&("garding", f, &grids, g, cfg.k_max, &cfg.thresholds, cfg.window));
    cache.get_or_compute(&key, || {
        let mut members = Members { cfg, family: f, built: None };
        let m = members.get()?;
        density_study(&f.id(), &pairs(m), g.q, &g.widths, cfg.k_max, &cfg.thresholds).map_err(tag(f))
    })
}

fn weyl_audit_one(cfg: &RunConfig, f: &FamilySpec, cache: &Cache) -> Result<CorrespondenceReport, RunError> {
    let grids: Vec<GridSpec> = cfg.grid.points.iter().map(|&n| family_grid(cfg, f, n)).collect::<Result<_, _>>().map_err(tag(f))?;
    let key = cache_key(&("weyl", f, &grids, cfg.weyl.p, cfg.k_max, &cfg.thresholds, cfg.window));
    cache.get_or_compute(&key, || {
        let ctxs: Vec<GridContext> = grids
            .iter()
            .map(|g| GridContext::new(*g, cfg.window, &cfg.probes))
            .collect::<Result<_, _>>()
            .map_err(tag(f))?;
        let syms: Vec<PhaseSymbol> = grids.iter().map(|g| f.build_symbol(g)).collect::<Result<_, _>>().map_err(tag(f))?;
        let refs: Vec<&GridContext> = ctxs.iter().collect();
        correspondence_audit(&syms, &refs, cfg.weyl.p, cfg.k_max, &cfg.thresholds).map_err(tag(f))
    })
}

fn weyl_run(cfg: &RunConfig, cache: &Cache) -> Result<WeylRun, RunError> {
    let w = &cfg.weyl;
    let g = GridSpec::new(cfg.grid.n, w.check_points, 2.0 * std::f64::consts::PI)?;
    let checks = calculus_checks(g, w.check_samples, cfg.seed)?;
    let audits: Vec<CorrespondenceReport> = w.families.par_iter().map(|f| weyl_audit_one(cfg, f, cache)).collect::<Result<_, _>>()?;
    let identity_exact = checks.identity_defect == 0.0;
    let roundtrip_ok = checks.roundtrip_error < ROUNDTRIP_TOL;
    let plancherel_ok = checks.plancherel_spread < PLANCHEREL_TOL;
    let passed = identity_exact && roundtrip_ok && plancherel_ok && audits.iter().all(|a| a.pass);
    Ok(WeylRun { checks, identity_exact, roundtrip_ok, plancherel_ok, audits, passed })
}

/// Runs `command`; the config must already be validated. Families run in
/// parallel and are merged back in configuration order.
pub fn execute(cfg: &RunConfig, command: Command, cache: &Cache) -> Result<Report, RunError> {
    let families = cfg.families_for(command);
    for f in &families {
        f.validate().map_err(tag(f))?;
    }
    let operator_side = command.needs_smoothness() || command.needs_study();
    let family_runs: Vec<FamilyRun> = if operator_side {
        families.par_iter().map(|f| family_run(cfg, command, f, cache)).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let reduction: Vec<ReductionRun> = if command == Command::FullAudit {
        families.par_iter().enumerate().map(|(i, f)| reduction_run(cfg, i, f)).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let garding: Vec<DensityReport> = if matches!(command, Command::Garding | Command::FullAudit) {
        families.par_iter().map(|f| density_run(cfg, f, cache)).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let weyl = if matches!(command, Command::WeylAudit | Command::FullAudit) { Some(weyl_run(cfg, cache)?) } else { None };
    let summary = summarize(command, &family_runs, &reduction, &garding, weyl.as_ref());
    let mut config = cfg.clone();
    config.command = Some(command);
    let notes = notes_for(&families);
    config.families = Some(families);
    Ok(Report {
        tool: "heisenlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        thresholds: cfg.thresholds.clone(),
        config,
        families: family_runs,
        reduction,
        garding,
        weyl,
        notes,
        summary,
    })
}

/// Exit status: chain-audit violations, embedding violations and unmet
/// expectations always count; the density and Weyl checks count only for
/// their own commands and are listed as failed checks otherwise.
fn summarize(
    command: Command,
    families: &[FamilyRun],
    reduction: &[ReductionRun],
    garding: &[DensityReport],
    weyl: Option<&WeylRun>,
) -> Summary {
    let mut violations = Vec::new();
    let mut failed_checks = Vec::new();
    let (mut chain, mut embed, mut mismatches) = (0, 0, 0);
    for fr in families {
        for s in &fr.sections {
            if let Some(c) = &s.chain {
                for v in &c.violations {
                    chain += 1;
                    violations.push(format!("{} q={}: chain: {}", fr.family, s.q, v.message));
                }
            }
            if let Some(e) = &s.embedding {
                if !e.holds {
                    embed += 1;
                    violations.push(format!("{} q={}: embedding: C1 bounded but orbit not continuous", fr.family, s.q));
                }
            }
        }
        for e in fr.expectations.iter().filter(|e| !e.matched) {
            mismatches += 1;
            violations.push(format!(
                "{}: expected {} = {}, observed {}",
                fr.family,
                e.key,
                e.expected.symbol(),
                e.observed.symbol()
            ));
        }
    }
    for r in reduction.iter().filter(|r| !r.holds) {
        failed_checks.push(format!("{}: one-parameter reduction inequality violated", r.family));
    }
    for d in garding.iter().filter(|d| !d.passed) {
        let why = if d.decreasing { "smoothed operators not all C^k-bounded" } else { "deviations not decreasing" };
        let msg = format!("{}: density: {why}", d.family);
        if command == Command::Garding {
            violations.push(msg);
        } else {
            failed_checks.push(msg);
        }
    }
    if let Some(w) = weyl {
        let mut msgs = Vec::new();
        if !w.identity_exact {
            msgs.push(format!("weyl: Op(1) differs from I by {:e}", w.checks.identity_defect));
        }
        if !w.roundtrip_ok {
            msgs.push(format!("weyl: round trip error {:e}", w.checks.roundtrip_error));
        }
        if !w.plancherel_ok {
            msgs.push(format!("weyl: Plancherel spread {:e}", w.checks.plancherel_spread));
        }
        for a in w.audits.iter().filter(|a| !a.pass) {
            msgs.push(format!("weyl: {}: symbol and operator classes disagree", a.symbol.family));
        }
        if command == Command::WeylAudit {
            violations.extend(msgs);
        } else {
            failed_checks.extend(msgs);
        }
    }
    let exit_code = if violations.is_empty() { 0 } else { 2 };
    Summary {
        chain_violations: chain,
        embedding_violations: embed,
        expectation_mismatches: mismatches,
        failed_checks,
        violations,
        exit_code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_keys() {
        assert_eq!(parse_key("Y1_norm"), Some(("norm", 1)));
        assert_eq!(parse_key("Y0_strong"), Some(("strong", 0)));
        assert_eq!(parse_key("C3"), Some(("C", 3)));
        assert_eq!(parse_key("Z1"), None);
        assert_eq!(parse_key("Y1_weak"), None);
    }

    #[test]
    fn family_length_wins_over_run_rule() {
        let mut cfg = RunConfig::default();
        cfg.grid.length = Some(heisenlab::LengthRule::Fixed { length: 3.0 });
        let own = FamilySpec { name: "identity".into(), params: [("length".to_string(), 5.0)].into() };
        assert_eq!(family_grid(&cfg, &own, 16).unwrap().length, 5.0);
        assert_eq!(family_grid(&cfg, &FamilySpec::identity(), 16).unwrap().length, 3.0);
    }
}
