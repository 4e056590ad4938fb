mod common;

use common::{adjoint, max_abs};
use heisenlab::context::{GridContext, ProbeSpec};
use heisenlab::suite::FamilySpec;
use heisenlab::verdict::{Growth, Thresholds};
use heisenlab::weyl::{
    calculus_checks, correspondence_audit, multi_indices, random_symbol, symbol_class_score, symbol_derivative,
    symbol_lp_norm, weyl_quantize, weyl_symbol, PhaseSymbol,
};
use heisenlab::window::WindowSpec;
use heisenlab::{build_position, rho_unitary, GridSpec, HeisenbergElement, SchattenIndex, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn position_symbol_quantizes_to_q_and_back() {
    let g = GridSpec::new(1, 64, 2.0 * PI * 8.0).unwrap();
    let a = PhaseSymbol::from_fn(g, "x", |x, _| C64::from(x[0])).unwrap();
    let q = build_position(&g, 0).unwrap();
    assert!(max_abs(&(weyl_quantize(&a).unwrap().entries() - q.entries())) < 1e-8);
    assert!(weyl_symbol(&q).unwrap().max_abs_diff(&a) < 1e-8);
}

#[test]
fn identity_roundtrip_and_plancherel() {
    let g = GridSpec::new(1, 64, 2.0 * PI).unwrap();
    let c = calculus_checks(g, 10, 5).unwrap();
    assert_eq!(c.identity_defect, 0.0);
    assert!(c.roundtrip_error < 1e-10, "{}", c.roundtrip_error);
    assert!(c.plancherel_spread < 1e-8, "{}", c.plancherel_spread);
    // independent value of the constant: ‖Op(a)‖_HS² = Σ|a|² / D
    assert!((c.plancherel_constants[0] - 1.0 / 8.0).abs() < 1e-12);
}

#[test]
fn separable_trig_derivatives_bounded_by_one() {
    let f = FamilySpec::separable_trig(PI / 4.0);
    for n in [64, 128] {
        let a = f.build_symbol(&f.grid(n).unwrap()).unwrap();
        for k in 0..=3 {
            for alpha in multi_indices(2, k) {
                let v = symbol_lp_norm(&symbol_derivative(&a, &alpha).unwrap(), SchattenIndex::Infinity);
                assert!(v <= 1.0 + 1e-6, "N={n} α={alpha:?}: {v}");
            }
        }
    }
}

#[test]
fn chirp_first_derivatives_grow() {
    let f = FamilySpec::chirp(1.0 / 16.0);
    let fam: Vec<PhaseSymbol> = [128, 256, 512].iter().map(|&n| f.build_symbol(&f.grid(n).unwrap()).unwrap()).collect();
    let s = symbol_class_score(&fam, SchattenIndex::Infinity, 1, &Thresholds::default()).unwrap();
    assert_eq!(s.orders[1].class, Growth::Unbounded);
    assert!(s.orders[1].max_exponent.unwrap() >= 0.25);
}

#[test]
fn separable_trig_correspondence_agrees() {
    let f = FamilySpec::separable_trig(PI / 4.0);
    let ns = [128, 256, 512];
    let ctxs: Vec<GridContext> =
        ns.iter().map(|&n| GridContext::new(f.grid(n).unwrap(), WindowSpec::default(), &ProbeSpec::default()).unwrap()).collect();
    let syms: Vec<PhaseSymbol> = ctxs.iter().map(|c| f.build_symbol(&c.grid).unwrap()).collect();
    let refs: Vec<&GridContext> = ctxs.iter().collect();
    let r = correspondence_audit(&syms, &refs, SchattenIndex::Infinity, 3, &Thresholds::default()).unwrap();
    assert!(r.pass, "{:?}", r.agreement);
    assert!(r.agreement.iter().all(|a| a.0 == Growth::Bounded));
}

#[test]
fn lattice_translation_covariance() {
    // ρ(g) Op(a) ρ(g)⁻¹ = Op(a(· + t, ·)) for a lattice shift t (ρ(g)ψ = ψ(· + t))
    let g = GridSpec::new(1, 32, 2.0 * PI * 2.0).unwrap();
    let t = 3.0 * g.spacing();
    let f = |x: f64, xi: f64| C64::new((x * 0.5).sin() * (xi * 0.3).cos(), (x * 1.5).cos() * 0.2);
    let a = PhaseSymbol::from_fn(g, "a", |x, xi| f(x[0], xi[0])).unwrap();
    let shifted = PhaseSymbol::from_fn(g, "a_t", |x, xi| f(x[0] + t, xi[0])).unwrap();
    let u = rho_unitary(&g, &HeisenbergElement::translation(1, 0, t)).unwrap().into_entries();
    let lhs = u.dot(weyl_quantize(&a).unwrap().entries()).dot(&adjoint(&u));
    let rhs = weyl_quantize(&shifted).unwrap();
    assert!(max_abs(&(lhs - rhs.entries())) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn conjugate_symbol_gives_adjoint(seed in any::<u64>()) {
        let g = GridSpec::new(1, 16, 2.0 * PI).unwrap();
        let a = random_symbol(g, seed).unwrap();
        let op = weyl_quantize(&a).unwrap();
        let opc = weyl_quantize(&a.conj()).unwrap();
        prop_assert!(max_abs(&(opc.entries() - adjoint(op.entries()))) < 1e-12);
    }

    #[test]
    fn quantization_is_linear(seed in any::<u64>(), c in -2.0f64..2.0) {
        let g = GridSpec::new(1, 16, 5.0).unwrap();
        let a = random_symbol(g, seed).unwrap();
        let b = random_symbol(g, seed.wrapping_add(1)).unwrap();
        let sum = PhaseSymbol::new(g, a.values().iter().zip(b.values()).map(|(x, y)| x + y * c).collect(), "s").unwrap();
        let lhs = weyl_quantize(&sum).unwrap();
        let rhs = weyl_quantize(&a).unwrap().add(&weyl_quantize(&b).unwrap().scale(C64::from(c))).unwrap();
        prop_assert!(max_abs(&(lhs.entries() - rhs.entries())) < 1e-12);
    }

    #[test]
    fn symbol_roundtrip(seed in any::<u64>()) {
        let g = GridSpec::new(1, 16, 3.0).unwrap();
        let a = random_symbol(g, seed).unwrap();
        prop_assert!(weyl_symbol(&weyl_quantize(&a).unwrap()).unwrap().max_abs_diff(&a) < 1e-12);
    }
}
