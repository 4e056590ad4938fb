//! Orbit-side and commutator-side behaviour of the suite witnesses.

mod common;

use common::max_abs;
use heisenlab::context::{GridContext, ProbeSpec, Topology};
use heisenlab::criterion::{chain_audit, ck_scores, sobolev_embedding_check};
use heisenlab::orbit::{
    classify_yk, continuity_modulus, one_param_reduction_check, orbit_fd_derivative, ContinuitySettings, OrbitSettings,
    StepSchedule,
};
use heisenlab::suite::FamilySpec;
use heisenlab::verdict::{Growth, Thresholds, Verdict};
use heisenlab::window::WindowSpec;
use heisenlab::{CommutatorWord, Operator, SchattenIndex};
use std::f64::consts::PI;

const INF: SchattenIndex = SchattenIndex::Infinity;

fn windowed(f: &FamilySpec, ns: &[usize]) -> (Vec<GridContext>, Vec<Operator>) {
    let ctxs: Vec<GridContext> = ns
        .iter()
        .map(|&n| GridContext::new(f.grid(n).unwrap(), WindowSpec::default(), &ProbeSpec::default()).unwrap())
        .collect();
    let ops = ctxs.iter().map(|c| f.build_operator(&c.grid).unwrap()).collect();
    (ctxs, ops)
}

#[test]
fn gradient_check_smooth_gaussian() {
    let f = FamilySpec::smooth_gaussian(0.3);
    let g = f.grid(128).unwrap();
    let ctx = GridContext::raw(g, &ProbeSpec::default()).unwrap();
    let y = f.build_operator(&g).unwrap();
    let rel_err = |h: f64, w: &CommutatorWord| {
        let sched = StepSchedule::uniform(vec![h]).unwrap();
        let fd = orbit_fd_derivative(&ctx, &y, w, &sched, Topology::Norm { q: INF }, &Thresholds::default()).unwrap();
        let exact = ctx.generators.iterated_ad(w, &y).unwrap();
        let err = max_abs(&(fd.estimate.entries() - exact.entries()));
        // multiplication operators commute with iQ: both sides vanish
        let scale = max_abs(exact.entries());
        if scale == 0.0 { err } else { err / scale }
    };
    for j in ctx.generators.noncentral() {
        let w = CommutatorWord(vec![j]);
        let (coarse, fine) = (rel_err(1e-3, &w), rel_err(1e-4, &w));
        assert!(fine < 1e-4, "generator {j}: {fine}");
        // central differences: error falls by 100 per decade of step
        if fine > 1e-9 {
            assert!((50.0..200.0).contains(&(coarse / fine)), "generator {j}: {coarse} / {fine}");
        }
    }
}

#[test]
fn continuity_moduli_slopes() {
    let settings = ContinuitySettings::default();
    let th = Thresholds::default();
    for (f, lo, hi) in [(FamilySpec::smooth_gaussian(0.3), 0.8, 1.2), (FamilySpec::holder_half(2.0 * PI), 0.3, 0.7)] {
        let g = f.grid(128).unwrap();
        let ctx = GridContext::new(g, WindowSpec::default(), &ProbeSpec::default()).unwrap();
        let y = f.build_operator(&g).unwrap();
        let r = continuity_modulus(&ctx, &y, Topology::Norm { q: INF }, f.scales(), &settings, &th).unwrap();
        let e = r.exponent.unwrap();
        assert!(e >= lo && e <= hi, "{}: exponent {e}", f.id());
        assert_eq!(r.verdict, Verdict::Pass, "{}", f.id());
    }
}

#[test]
fn strictness_witnesses_and_chain_records() {
    let th = Thresholds::default();
    let ns = [128, 256, 512];
    let settings = OrbitSettings::default();

    let tri = FamilySpec::triangle_wave(2.0 * PI, 1.0);
    let (c, y) = windowed(&tri, &ns);
    let m: Vec<_> = c.iter().zip(y.iter()).collect();
    let s = classify_yk(&tri.id(), &m, INF, 1, tri.scales(), &settings, &th).unwrap();
    let st = ck_scores(&tri.id(), &m, INF, 1, &th).unwrap();
    assert_eq!(s.norm_verdict(0), Some(Verdict::Pass));
    assert_eq!(s.norm_verdict(1), Some(Verdict::Fail));
    // the difference quotients of a kink stop converging as the grid resolves it
    let ip = s.orders[1].words.iter().find(|w| w.name == "iP1").unwrap();
    let rates: Vec<f64> = ip.norm_cauchy.iter().map(|d| d.rate.unwrap()).collect();
    assert!(rates.windows(2).all(|r| r[1] < r[0]), "{rates:?}");
    assert_eq!(ip.norm_cauchy.last().unwrap().verdict, Verdict::Fail);
    assert_eq!(ip.norm_growth.class, Growth::Bounded);
    assert_eq!(s.strong_verdict(1), Some(Verdict::Pass));
    assert_eq!(st.class(1), Some(Growth::Bounded));
    // continuum ‖[φ(Q), P]‖ = sup|φ'| = 1
    let last = st.words.iter().find(|w| w.word == CommutatorWord(vec![0])).unwrap().norms[2];
    assert!((last - 1.0).abs() < 0.1, "{last}");
    let audit = chain_audit(&s, &st, 1).unwrap();
    assert!(audit.violations.is_empty());
    assert!(audit.confirmations.iter().any(|r| r.message == "C1 pass, Y1(norm) fail"));
    let conts: Vec<_> = s.continuity.iter().map(|c| &c[0]).collect();
    assert!(sobolev_embedding_check(&st, &conts).unwrap().holds);

    let hol = FamilySpec::holder_half(2.0 * PI);
    let (c, y) = windowed(&hol, &ns);
    let m: Vec<_> = c.iter().zip(y.iter()).collect();
    let s = classify_yk(&hol.id(), &m, INF, 1, hol.scales(), &settings, &th).unwrap();
    let st = ck_scores(&hol.id(), &m, INF, 1, &th).unwrap();
    assert_eq!(s.norm_verdict(0), Some(Verdict::Pass));
    assert_eq!(st.class(1), Some(Growth::Unbounded));
    assert!(st.orders[1].max_exponent.unwrap() >= 0.25);
    let audit = chain_audit(&s, &st, 1).unwrap();
    assert!(audit.violations.is_empty());
    assert!(audit.confirmations.iter().any(|r| r.message == "Y0(norm) pass, C1 fail"));
}

#[test]
fn smooth_gaussian_passes_everything() {
    let th = Thresholds::default();
    let f = FamilySpec::smooth_gaussian(0.3);
    let (c, y) = windowed(&f, &[128, 256, 512]);
    let m: Vec<_> = c.iter().zip(y.iter()).collect();
    let s = classify_yk(&f.id(), &m, INF, 3, f.scales(), &OrbitSettings::default(), &th).unwrap();
    let st = ck_scores(&f.id(), &m, INF, 3, &th).unwrap();
    for k in 0..=3 {
        assert_eq!(s.norm_verdict(k), Some(Verdict::Pass), "Y{k} norm");
        assert_eq!(s.strong_verdict(k), Some(Verdict::Pass), "Y{k} strong");
        assert_eq!(st.class(k), Some(Growth::Bounded), "C{k}");
    }
    let conts: Vec<_> = s.continuity.iter().map(|c| &c[0]).collect();
    let e = sobolev_embedding_check(&st, &conts).unwrap();
    assert!(e.holds && e.c1 == Growth::Bounded && e.continuity == Verdict::Pass);
}

#[test]
fn one_parameter_reduction_inequality() {
    for (f, deltas) in [
        (FamilySpec::random_hermitian(7), vec![0.1]),
        (FamilySpec::holder_half(2.0 * PI), vec![0.1, 0.01]),
    ] {
        let g = f.grid(64).unwrap();
        let ctx = GridContext::raw(g, &ProbeSpec::default()).unwrap();
        let y = f.build_operator(&g).unwrap();
        let mut prev_rhs = f64::INFINITY;
        for (i, d) in deltas.into_iter().enumerate() {
            let r = one_param_reduction_check(&ctx, &y, d, 100, INF, 40 + i as u64).unwrap();
            assert!(r.holds, "{}: δ={d}: {r:?}", f.id());
            assert!(r.max_rhs < prev_rhs);
            prev_rhs = r.max_rhs;
        }
    }
}

#[test]
fn pipeline_inputs_validated() {
    let th = Thresholds::default();
    let f = FamilySpec::identity();
    let (c, y) = windowed(&f, &[16, 32, 64]);
    let m: Vec<_> = c.iter().zip(y.iter()).collect();
    assert!(classify_yk("id", &m, INF, 4, f.scales(), &OrbitSettings::default(), &th).is_err());
    let rev: Vec<_> = m.iter().rev().copied().collect();
    assert!(ck_scores("id", &rev, INF, 1, &th).is_err());
    let mut bad = th.clone();
    bad.bounded_exponent = 0.5;
    assert!(ck_scores("id", &m, INF, 1, &bad).is_err());
}
