//! Regularity of the orbit map g ↦ ρ(g) Y ρ(g)⁻¹: continuity moduli,
//! difference quotients with Cauchy diagnostics, Y^k classification and the
//! one-parameter reduction inequality.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{GridContext, Topology};
use crate::error::{invalid, LabError, Result};
use crate::fit::{cube_to_ball, halton, isotonic_nondecreasing, loglog_slope};
use crate::grid::GridSpec;
use crate::heisenberg::{GeneratorKind, HeisenbergElement};
use crate::operator::{schatten_norm_matrix, CommutatorWord, Operator, SchattenIndex};
use crate::verdict::{growth_fit, GrowthFit, Thresholds, Verdict};

/// Steps below this are dominated by rounding in the difference quotients.
pub const MIN_STEP: f64 = 1e-7;

/// Natural length scales of a family: where its features live in position
/// and in frequency. Step schedules and radii are expressed relative to them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyScales {
    pub position: f64,
    pub frequency: f64,
}

/// Decreasing step sizes, one list per generator kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub translation: Vec<f64>,
    pub modulation: Vec<f64>,
}

impl StepSchedule {
    pub fn new(translation: Vec<f64>, modulation: Vec<f64>) -> Result<Self> {
        let s = StepSchedule { translation, modulation };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(steps: Vec<f64>) -> Result<Self> {
        Self::new(steps.clone(), steps)
    }

    /// t_i = scale · first · 2^{−i}, i < count.
    pub fn halving(scales: FamilyScales, first: f64, count: usize) -> Result<Self> {
        let seq = |s: f64| (0..count).map(|i| s * first * 0.5f64.powi(i as i32)).collect();
        Self::new(seq(scales.position), seq(scales.frequency))
    }

    fn validate(&self) -> Result<()> {
        if self.translation.is_empty() || self.translation.len() != self.modulation.len() {
            return Err(invalid("step schedule must be non-empty with equal-length lists"));
        }
        for list in [&self.translation, &self.modulation] {
            if list.iter().any(|&t| !(t >= MIN_STEP) || !t.is_finite()) {
                return Err(invalid(format!("steps must be finite and >= {MIN_STEP:e}")));
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("steps must be strictly decreasing"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.translation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.translation.is_empty()
    }

    fn step(&self, kind: GeneratorKind, i: usize) -> f64 {
        match kind {
            GeneratorKind::Modulation(_) => self.modulation[i],
            _ => self.translation[i],
        }
    }

    /// Steps relative to the first one (same for both lists under halving).
    fn relative(&self) -> Vec<f64> {
        self.translation.iter().map(|t| t / self.translation[0]).collect()
    }
}

/// Successive distances between difference quotients across a step schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyDiagnostics {
    /// Step sizes relative to the first step.
    pub relative_steps: Vec<f64>,
    /// gap_i = dist(q_i, q_{i+1}) / scale.
    pub gaps: Vec<f64>,
    pub scale: f64,
    pub tail: f64,
    /// Log-log slope of the gaps against the step size.
    pub rate: Option<f64>,
    pub verdict: Verdict,
}

impl CauchyDiagnostics {
    fn from_gaps(relative_steps: Vec<f64>, raw_gaps: Vec<f64>, scale: f64, th: &Thresholds) -> Self {
        if scale <= 0.0 || raw_gaps.iter().all(|&g| g <= th.zero_tol * scale) {
            let gaps = vec![0.0; raw_gaps.len()];
            return CauchyDiagnostics { relative_steps, gaps, scale, tail: 0.0, rate: None, verdict: Verdict::Pass };
        }
        let gaps: Vec<f64> = raw_gaps.iter().map(|g| g / scale).collect();
        let tail = *gaps.last().unwrap();
        let rate = loglog_slope(&relative_steps[..gaps.len()], &gaps);
        let verdict = if tail <= th.cauchy_pass || rate.is_some_and(|r| r >= th.cauchy_rate) {
            Verdict::Pass
        } else if tail > th.cauchy_fail {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        CauchyDiagnostics { relative_steps, gaps, scale, tail, rate, verdict }
    }
}

/// Central difference of the orbit along generator j at step t.
fn central_difference(ctx: &GridContext, j: usize, t: f64, x: &Array2<C64>) -> Result<Array2<C64>> {
    let gens = &ctx.generators;
    let plus = ctx.conj(&gens.one_parameter(j, t), x)?;
    let minus = ctx.conj(&gens.one_parameter(j, -t), x)?;
    Ok((plus - minus) * C64::from(0.5 / t))
}

/// Mixed difference quotient D_{j1} ⋯ D_{jk} Y at schedule index i,
/// innermost (rightmost) letter first.
fn word_quotient(ctx: &GridContext, word: &CommutatorWord, sched: &StepSchedule, i: usize, y: &Array2<C64>) -> Result<Array2<C64>> {
    let mut acc = y.clone();
    for &j in word.0.iter().rev() {
        let t = sched.step(ctx.generators.kinds[j], i);
        acc = central_difference(ctx, j, t, &acc)?;
    }
    Ok(acc)
}

fn check_word(ctx: &GridContext, word: &CommutatorWord) -> Result<()> {
    let m = ctx.generators.len();
    match word.0.iter().find(|&&j| j >= m) {
        Some(&index) => Err(LabError::WordIndexOutOfRange { index, m }),
        None => Ok(()),
    }
}

fn check_grid(ctx: &GridContext, y: &Operator) -> Result<()> {
    if *y.grid() != ctx.grid {
        return Err(LabError::GridMismatch(format!("operator on {:?}, context on {:?}", y.grid(), ctx.grid)));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FdResult {
    /// Quotient at the smallest step.
    pub estimate: Operator,
    pub diagnostics: CauchyDiagnostics,
}

/// k-fold (possibly mixed) difference quotient of the orbit along `word`,
/// with a Cauchy test across `schedule` in `topology`. Distances are
/// relative to max(‖q_i‖, ‖Y‖) in the Schatten norm of the topology
/// (operator norm for the strong topology).
pub fn orbit_fd_derivative(
    ctx: &GridContext,
    y: &Operator,
    word: &CommutatorWord,
    schedule: &StepSchedule,
    topology: Topology,
    th: &Thresholds,
) -> Result<FdResult> {
    check_grid(ctx, y)?;
    check_word(ctx, word)?;
    if word.is_empty() {
        return Err(invalid("difference order must be >= 1"));
    }
    schedule.validate()?;
    let quotients: Vec<Array2<C64>> = (0..schedule.len())
        .map(|i| word_quotient(ctx, word, schedule, i, y.entries()))
        .collect::<Result<_>>()?;
    let reduced: Vec<Array2<C64>> = quotients.iter().map(|q| ctx.reduce(&q.view())).collect();
    let scale_q = match topology {
        Topology::Norm { q } => q,
        Topology::Strong => SchattenIndex::Infinity,
    };
    let mut scale = ctx.measure(&y.entries().view(), Topology::Norm { q: scale_q })?;
    for c in &reduced {
        scale = scale.max(schatten_norm_matrix(&c.view(), scale_q)?);
    }
    let gaps = reduced
        .windows(2)
        .map(|w| ctx.measure_reduced(&(&w[0] - &w[1]).view(), topology))
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = CauchyDiagnostics::from_gaps(schedule.relative(), gaps, scale, th);
    let last = quotients.into_iter().last().unwrap();
    let label = format!("D{}({})", ctx.generators.word_name(word), y.label);
    Ok(FdResult { estimate: Operator::from_parts(ctx.grid, last, label), diagnostics })
}

/// Sampling controls for continuity moduli.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuitySettings {
    /// Radii relative to the family scales; decreasing. The exponent is fitted on these.
    pub radii: Vec<f64>,
    /// Extra tiny radius (relative) on which the continuity verdict is read.
    pub verdict_radius: f64,
    pub samples_per_radius: usize,
    pub seed: u64,
}

impl Default for ContinuitySettings {
    fn default() -> Self {
        ContinuitySettings {
            radii: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            verdict_radius: 1e-6,
            samples_per_radius: 16,
            seed: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub topology: Topology,
    /// Relative radii, decreasing; the last one is the verdict radius.
    pub radii: Vec<f64>,
    /// Largest sampled deviation ‖Ad(g)Y − Y‖ per radius.
    pub moduli: Vec<f64>,
    /// Isotonic (nondecreasing in radius) fit of the moduli.
    pub monotone: Vec<f64>,
    pub scale: f64,
    /// Log-log slope of the monotone moduli over the fit radii.
    pub exponent: Option<f64>,
    pub verdict: Verdict,
}

/// Group elements with ‖(a/s_x, b/s_ξ)‖ ≤ δ: Halton points (seeded shift)
/// plus the extreme points on every axis.
fn ball_samples(n: usize, delta: f64, scales: FamilyScales, count: usize, shift: &[f64]) -> Vec<HeisenbergElement> {
    let dims = 2 * n;
    let mut pts: Vec<Vec<f64>> = (0..count as u64).map(|i| cube_to_ball(&halton(i, dims, shift), delta)).collect();
    for d in 0..dims {
        for s in [delta, -delta] {
            let mut p = vec![0.0; dims];
            p[d] = s;
            pts.push(p);
        }
    }
    pts.into_iter()
        .map(|p| HeisenbergElement {
            a: p[..n].iter().map(|x| x * scales.position).collect(),
            b: p[n..].iter().map(|x| x * scales.frequency).collect(),
            c: 0.0,
        })
        .collect()
}

fn continuity_reports(
    ctx: &GridContext,
    y: &Operator,
    q: SchattenIndex,
    scales: FamilyScales,
    settings: &ContinuitySettings,
    th: &Thresholds,
) -> Result<[ContinuityReport; 2]> {
    check_grid(ctx, y)?;
    if settings.radii.is_empty() {
        return Err(invalid("continuity radii must be non-empty"));
    }
    let mut radii = settings.radii.clone();
    radii.push(settings.verdict_radius);
    if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("continuity radii must be positive and strictly decreasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let shift: Vec<f64> = (0..2 * ctx.grid.n).map(|_| rng.random::<f64>()).collect();
    let topologies = [Topology::Norm { q }, Topology::Strong];
    let y0 = ctx.reduce(&y.entries().view());
    let scale = ctx.measure_reduced(&y0.view(), Topology::Norm { q })?;
    let per_radius: Vec<[f64; 2]> = radii
        .iter()
        .map(|&delta| {
            let samples = ball_samples(ctx.grid.n, delta, scales, settings.samples_per_radius, &shift);
            let devs = samples
                .par_iter()
                .map(|g| {
                    let c = ctx.reduce(&ctx.conj(g, y.entries())?.view()) - &y0;
                    Ok([
                        ctx.measure_reduced(&c.view(), topologies[0])?,
                        ctx.measure_reduced(&c.view(), topologies[1])?,
                    ])
                })
                .collect::<Result<Vec<[f64; 2]>>>()?;
            Ok(devs.iter().fold([0.0f64, 0.0f64], |m, d| [m[0].max(d[0]), m[1].max(d[1])]))
        })
        .collect::<Result<_>>()?;
    let nfit = settings.radii.len();
    let build = |t: usize| {
        let moduli: Vec<f64> = per_radius.iter().map(|m| m[t]).collect();
        let asc: Vec<f64> = moduli.iter().rev().copied().collect();
        let monotone: Vec<f64> = isotonic_nondecreasing(&asc).into_iter().rev().collect();
        let exponent = loglog_slope(&radii[..nfit], &monotone[..nfit]);
        let last = *monotone.last().unwrap();
        let verdict = if scale == 0.0 || last <= th.continuity_tol * scale {
            Verdict::Pass
        } else if last >= monotone[0] {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        ContinuityReport { topology: topologies[t], radii: radii.clone(), moduli, monotone, scale, exponent, verdict }
    };
    Ok([build(0), build(1)])
}

/// Continuity modulus of the orbit of Y in `topology`.
pub fn continuity_modulus(
    ctx: &GridContext,
    y: &Operator,
    topology: Topology,
    scales: FamilyScales,
    settings: &ContinuitySettings,
    th: &Thresholds,
) -> Result<ContinuityReport> {
    let q = match topology {
        Topology::Norm { q } => q,
        Topology::Strong => SchattenIndex::Infinity,
    };
    let [norm, strong] = continuity_reports(ctx, y, q, scales, settings, th)?;
    Ok(if matches!(topology, Topology::Strong) { strong } else { norm })
}

/// Everything that controls a Y^k classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSettings {
    /// First step as a fraction of the family scale.
    pub first_step: f64,
    pub step_count: usize,
    pub continuity: ContinuitySettings,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        OrbitSettings { first_step: 1.0 / 16.0, step_count: 5, continuity: ContinuitySettings::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordReport {
    pub word: CommutatorWord,
    pub name: String,
    /// Per grid.
    pub norm_cauchy: Vec<CauchyDiagnostics>,
    pub strong_cauchy: Vec<CauchyDiagnostics>,
    /// Size of the smallest-step quotient per grid.
    pub estimate_norms: Vec<f64>,
    pub estimate_strong: Vec<f64>,
    pub norm_growth: GrowthFit,
    pub strong_growth: GrowthFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub k: usize,
    /// After enforcing filtration monotonicity.
    pub norm: Verdict,
    pub strong: Verdict,
    /// Before enforcing monotonicity.
    pub norm_raw: Verdict,
    pub strong_raw: Verdict,
    pub words: Vec<WordReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub family: String,
    pub q: SchattenIndex,
    pub k_max: usize,
    pub grids: Vec<GridSpec>,
    pub windowed: bool,
    pub scales: FamilyScales,
    pub schedule: StepSchedule,
    pub thresholds: Thresholds,
    /// Per grid: norm- and strong-topology continuity.
    pub continuity: Vec<[ContinuityReport; 2]>,
    pub orders: Vec<OrderReport>,
    /// Orders where the strong verdict came out stricter than the norm one.
    pub topology_violations: Vec<String>,
    /// First-order quotient estimates on the finest grid.
    #[serde(skip)]
    pub derivative_estimates: Vec<(CommutatorWord, Operator)>,
}

impl SmoothnessReport {
    pub fn norm_verdict(&self, k: usize) -> Option<Verdict> {
        self.orders.get(k).map(|o| o.norm)
    }

    pub fn strong_verdict(&self, k: usize) -> Option<Verdict> {
        self.orders.get(k).map(|o| o.strong)
    }
}

/// Reduced quotients for every word of length 1..=k_max at schedule index i.
fn quotient_tree(
    ctx: &GridContext,
    y: &Array2<C64>,
    alphabet: &[usize],
    k_max: usize,
    sched: &StepSchedule,
    i: usize,
    keep_first_order: bool,
) -> Result<(BTreeMap<CommutatorWord, Array2<C64>>, Vec<(CommutatorWord, Array2<C64>)>)> {
    let mut out = BTreeMap::new();
    let mut first = Vec::new();
    let mut level: Vec<(Vec<usize>, Array2<C64>)> = vec![(Vec::new(), y.clone())];
    for k in 1..=k_max {
        let tasks: Vec<(Vec<usize>, usize, &Array2<C64>)> = level
            .iter()
            .flat_map(|(w, x)| alphabet.iter().map(move |&j| (w.clone(), j, x)))
            .collect();
        let next: Vec<(Vec<usize>, Array2<C64>)> = tasks
            .into_par_iter()
            .map(|(w, j, x)| {
                let t = sched.step(ctx.generators.kinds[j], i);
                let mut word = vec![j];
                word.extend(w);
                Ok((word, central_difference(ctx, j, t, x)?))
            })
            .collect::<Result<_>>()?;
        for (w, x) in &next {
            out.insert(CommutatorWord(w.clone()), ctx.reduce(&x.view()));
            if k == 1 && keep_first_order {
                first.push((CommutatorWord(w.clone()), x.clone()));
            }
        }
        level = if k < k_max { next } else { Vec::new() };
    }
    Ok((out, first))
}

fn strong_of(ctx: &GridContext, c: &ArrayView2<C64>) -> Result<f64> {
    ctx.measure_reduced(c, Topology::Strong)
}

/// Classify a family (one operator per grid, grids increasing) into the
/// orbit-smoothness classes Y^0 … Y^{k_max}, in the Schatten-q norm and in
/// the strong topology.
pub fn classify_yk(
    family: &str,
    members: &[(&GridContext, &Operator)],
    q: SchattenIndex,
    k_max: usize,
    scales: FamilyScales,
    settings: &OrbitSettings,
    th: &Thresholds,
) -> Result<SmoothnessReport> {
    if k_max > 3 {
        return Err(invalid(format!("k_max must be <= 3, got {k_max}")));
    }
    if members.len() < 2 {
        return Err(invalid("classification needs at least two grids"));
    }
    for (ctx, y) in members {
        check_grid(ctx, y)?;
    }
    if members.windows(2).any(|w| w[1].0.grid.points <= w[0].0.grid.points) {
        return Err(invalid("grids must be strictly increasing in N"));
    }
    let n = members[0].0.grid.n;
    if members.iter().any(|(c, _)| c.grid.n != n) {
        return Err(LabError::GridMismatch("family mixes spatial dimensions".into()));
    }
    th.validate()?;
    let schedule = StepSchedule::halving(scales, settings.first_step, settings.step_count)?;
    let rel = schedule.relative();
    let ns: Vec<f64> = members.iter().map(|(c, _)| c.grid.points as f64).collect();
    let alphabet = members[0].0.generators.noncentral();
    let words: Vec<CommutatorWord> = (1..=k_max).flat_map(|k| CommutatorWord::all_of_length(&alphabet, k)).collect();

    let mut continuity = Vec::new();
    // per word: per grid: (norm gaps diag, strong diag, est norm, est strong)
    let mut per_word: BTreeMap<CommutatorWord, Vec<(CauchyDiagnostics, CauchyDiagnostics, f64, f64)>> = BTreeMap::new();
    let mut baselines = Vec::new();
    let mut derivative_estimates = Vec::new();
    let last_grid = members.len() - 1;
    for (gi, (ctx, y)) in members.iter().enumerate() {
        continuity.push(continuity_reports(ctx, y, q, scales, &settings.continuity, th)?);
        let y0 = ctx.reduce(&y.entries().view());
        let base = ctx.measure_reduced(&y0.view(), Topology::Norm { q })?;
        baselines.push(base);
        if k_max == 0 {
            continue;
        }
        let mut trees = Vec::with_capacity(schedule.len());
        for i in 0..schedule.len() {
            let keep = gi == last_grid && i + 1 == schedule.len();
            let (tree, first) = quotient_tree(ctx, y.entries(), &alphabet, k_max, &schedule, i, keep)?;
            if keep {
                derivative_estimates = first
                    .into_iter()
                    .map(|(w, x)| {
                        let label = format!("D{}({})", ctx.generators.word_name(&w), y.label);
                        (w, Operator::from_parts(ctx.grid, x, label))
                    })
                    .collect();
            }
            trees.push(tree);
        }
        for w in &words {
            let seq: Vec<&Array2<C64>> = trees.iter().map(|t| &t[w]).collect();
            let mut scale = base;
            for c in &seq {
                scale = scale.max(schatten_norm_matrix(&c.view(), q)?);
            }
            let mut ngaps = Vec::new();
            let mut sgaps = Vec::new();
            for pair in seq.windows(2) {
                let d = pair[0] - pair[1];
                ngaps.push(ctx.measure_reduced(&d.view(), Topology::Norm { q })?);
                sgaps.push(strong_of(ctx, &d.view())?);
            }
            let last = seq.last().unwrap();
            let entry = (
                CauchyDiagnostics::from_gaps(rel.clone(), ngaps, scale, th),
                CauchyDiagnostics::from_gaps(rel.clone(), sgaps, scale, th),
                schatten_norm_matrix(&last.view(), q)?,
                strong_of(ctx, &last.view())?,
            );
            per_word.entry(w.clone()).or_default().push(entry);
        }
    }

    let relative = !q.is_infinite();
    let mut orders = Vec::new();
    let cont_norm = continuity.iter().map(|c| c[0].verdict).min().unwrap();
    let cont_strong = continuity.iter().map(|c| c[1].verdict).min().unwrap();
    orders.push(OrderReport { k: 0, norm: cont_norm, strong: cont_strong, norm_raw: cont_norm, strong_raw: cont_strong, words: Vec::new() });
    let gens = &members[0].0.generators;
    for k in 1..=k_max {
        let mut reports = Vec::new();
        for w in words.iter().filter(|w| w.len() == k) {
            let rows = &per_word[w];
            let est_n: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let est_s: Vec<f64> = rows.iter().map(|r| r.3).collect();
            reports.push(WordReport {
                word: w.clone(),
                name: gens.word_name(w),
                norm_cauchy: rows.iter().map(|r| r.0.clone()).collect(),
                strong_cauchy: rows.iter().map(|r| r.1.clone()).collect(),
                norm_growth: growth_fit(&ns, &est_n, &baselines, relative, th),
                strong_growth: growth_fit(&ns, &est_s, &baselines, false, th),
                estimate_norms: est_n,
                estimate_strong: est_s,
            });
        }
        let combine = |cauchy: &dyn Fn(&WordReport) -> &Vec<CauchyDiagnostics>, growth: &dyn Fn(&WordReport) -> &GrowthFit| {
            let c = reports.iter().flat_map(|r| cauchy(r).iter().map(|d| d.verdict)).min().unwrap_or(Verdict::Pass);
            let g = reports.iter().map(|r| growth(r).class.as_verdict()).min().unwrap_or(Verdict::Pass);
            c.min(g)
        };
        let norm_raw = combine(&|r| &r.norm_cauchy, &|r| &r.norm_growth);
        let strong_raw = combine(&|r| &r.strong_cauchy, &|r| &r.strong_growth);
        orders.push(OrderReport { k, norm: norm_raw, strong: strong_raw, norm_raw, strong_raw, words: reports });
    }
    for k in 1..orders.len() {
        orders[k].norm = orders[k].norm_raw.min(orders[k - 1].norm);
        orders[k].strong = orders[k].strong_raw.min(orders[k - 1].strong);
    }
    let topology_violations = orders
        .iter()
        .filter(|o| o.strong < o.norm)
        .map(|o| format!("order {}: strong {} stricter than norm {}", o.k, o.strong.symbol(), o.norm.symbol()))
        .collect();
    Ok(SmoothnessReport {
        family: family.to_string(),
        q,
        k_max,
        grids: members.iter().map(|(c, _)| c.grid).collect(),
        windowed: members[0].0.is_windowed(),
        scales,
        schedule,
        thresholds: th.clone(),
        continuity,
        orders,
        topology_violations,
        derivative_estimates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneParamReport {
    pub delta: f64,
    pub samples: usize,
    pub q: SchattenIndex,
    /// Largest value of lhs − rhs (negative when the inequality holds with room).
    pub max_excess: f64,
    pub max_lhs: f64,
    pub max_rhs: f64,
    pub slack: f64,
    pub violations: usize,
    pub holds: bool,
}

/// ‖Ad(γ_1(t_1)) ⋯ Ad(γ_m(t_m)) Y − Y‖ ≤ Σ_j ‖Ad(γ_j(t_j)) Y − Y‖ on
/// seeded samples |t_j| ≤ δ over all m generators. Norms are raw (full
/// space) so the isometry behind the inequality is exact.
pub fn one_param_reduction_check(
    ctx: &GridContext,
    y: &Operator,
    delta: f64,
    samples: usize,
    q: SchattenIndex,
    seed: u64,
) -> Result<OneParamReport> {
    check_grid(ctx, y)?;
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let gens = &ctx.generators;
    let m = gens.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ts: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..m).map(|_| rng.random_range(-delta..=delta)).collect())
        .collect();
    let y0 = y.entries();
    let yscale = schatten_norm_matrix(&y0.view(), SchattenIndex::Infinity)?;
    let slack = 1e-9 * yscale.max(f64::MIN_POSITIVE);
    let rows = ts
        .par_iter()
        .map(|t| {
            let mut full = y0.clone();
            for j in (0..m).rev() {
                full = gens.representation().conj(&gens.one_parameter(j, t[j]), &full)?;
            }
            let lhs = schatten_norm_matrix(&(&full - y0).view(), q)?;
            let mut rhs = 0.0;
            for j in 0..m {
                let single = gens.representation().conj(&gens.one_parameter(j, t[j]), y0)?;
                rhs += schatten_norm_matrix(&(&single - y0).view(), q)?;
            }
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let max_excess = rows.iter().map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max);
    let violations = rows.iter().filter(|(l, r)| *l > r + slack).count();
    Ok(OneParamReport {
        delta,
        samples,
        q,
        max_excess,
        max_lhs: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_rhs: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        slack,
        violations,
        holds: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ProbeSpec;

    fn ctx(points: usize) -> GridContext {
        GridContext::raw(GridSpec::new(1, points, 8.0).unwrap(), &ProbeSpec::default()).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(StepSchedule::uniform(vec![1e-2, 1e-3]).is_ok());
        assert!(StepSchedule::uniform(vec![1e-3, 1e-2]).is_err());
        assert!(StepSchedule::uniform(vec![1e-2, 1e-8]).is_err());
        assert!(StepSchedule::uniform(vec![]).is_err());
    }

    #[test]
    fn identity_derivative_is_zero() {
        let c = ctx(32);
        let y = Operator::identity(c.grid);
        let s = StepSchedule::uniform(vec![1e-2, 1e-3]).unwrap();
        for j in 0..2 {
            let r = orbit_fd_derivative(&c, &y, &CommutatorWord(vec![j]), &s, Topology::Norm { q: SchattenIndex::Infinity }, &Thresholds::default()).unwrap();
            assert!(r.estimate.max_abs() < 1e-12);
            assert_eq!(r.diagnostics.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn identity_one_param() {
        let c = ctx(16);
        let r = one_param_reduction_check(&c, &Operator::identity(c.grid), 0.1, 10, SchattenIndex::Infinity, 1).unwrap();
        assert!(r.holds);
        assert!(r.max_lhs < 1e-12);
    }

    #[test]
    fn cauchy_rules() {
        let th = Thresholds::default();
        let rel = vec![1.0, 0.5, 0.25, 0.125];
        let flat = CauchyDiagnostics::from_gaps(rel.clone(), vec![0.5, 0.5, 0.5], 1.0, &th);
        assert_eq!(flat.verdict, Verdict::Fail);
        let fast = CauchyDiagnostics::from_gaps(rel.clone(), vec![0.4, 0.1, 0.025], 1.0, &th);
        assert_eq!(fast.verdict, Verdict::Pass);
        assert!((fast.rate.unwrap() - 2.0).abs() < 1e-12);
        let small = CauchyDiagnostics::from_gaps(rel, vec![0.05, 0.05, 0.05], 1.0, &th);
        assert_eq!(small.verdict, Verdict::Inconclusive);
    }
}
