mod common;

use common::{max_abs, oracle_schatten, random_matrix, random_operator};
use heisenlab::{
    build_generators, commutator, duality_pairing, iterated_commutator, schatten_norm, CommutatorWord, GridSpec,
    Operator, SchattenIndex, C64,
};
use proptest::prelude::*;

fn grid(d: usize) -> GridSpec {
    GridSpec::new(1, d, 1.0).unwrap()
}

fn q(v: f64) -> SchattenIndex {
    SchattenIndex::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn schatten_matches_eigenvalue_oracle(seed in any::<u64>()) {
        let y = random_operator(grid(8), seed);
        for qv in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let ours = schatten_norm(&y, q(qv)).unwrap();
            let oracle = oracle_schatten(y.entries(), qv);
            prop_assert!((ours - oracle).abs() <= 1e-9 * oracle, "q={qv}: {ours} vs {oracle}");
        }
    }

    #[test]
    fn schatten_norms_decrease_in_q(seed in any::<u64>()) {
        let y = random_operator(grid(8), seed);
        let qs = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
        let norms: Vec<f64> = qs.iter().map(|&v| schatten_norm(&y, q(v)).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn trace_duality_holder(seed in any::<u64>(), qv in prop::sample::select(vec![1.0, 1.25, 2.0, 3.0, f64::INFINITY])) {
        let y = random_operator(grid(8), seed);
        let v = random_operator(grid(8), seed.wrapping_add(1));
        let qi = q(qv);
        let p = qi.conjugate();
        // direct trace against oracle norms
        let tr: C64 = (0..8).map(|i| (0..8).map(|k| y.entries()[[i, k]] * v.entries()[[k, i]]).sum::<C64>()).sum();
        let bound = oracle_schatten(y.entries(), qv) * oracle_schatten(v.entries(), p.value());
        prop_assert!(tr.norm() <= bound * (1.0 + 1e-12));
        prop_assert!((duality_pairing(&y, &v).unwrap() - tr).norm() <= 1e-12 * (1.0 + tr.norm()));
    }

    #[test]
    fn commutator_bilinear_antisymmetric(seed in any::<u64>(), c in -3.0f64..3.0) {
        let g = grid(6);
        let a = random_operator(g, seed);
        let y = random_operator(g, seed ^ 0x55);
        let z = random_operator(g, seed ^ 0xaa);
        let lhs = commutator(&a, &y.add(&z.scale(C64::from(c))).unwrap()).unwrap();
        let rhs = commutator(&a, &y).unwrap().add(&commutator(&a, &z).unwrap().scale(C64::from(c))).unwrap();
        prop_assert!(max_abs(&(lhs.entries() - rhs.entries())) < 1e-12 * (1.0 + max_abs(lhs.entries())));
        let ba = commutator(&y, &a).unwrap();
        prop_assert!(max_abs(&(commutator(&a, &y).unwrap().entries() + ba.entries())) < 1e-12);
    }
}

#[test]
fn jacobi_for_words() {
    // ad_{g1} ad_{g2} − ad_{g2} ad_{g1} = ad_{[g1, g2]} at D = 16
    let g = GridSpec::new(1, 16, 5.0).unwrap();
    let gens = build_generators(&g).unwrap();
    let y = Operator::new(g, random_matrix(16, 3), "Y").unwrap();
    let a = iterated_commutator(&gens.ops, &CommutatorWord(vec![0, 1]), &y).unwrap();
    let b = iterated_commutator(&gens.ops, &CommutatorWord(vec![1, 0]), &y).unwrap();
    let g12 = commutator(&gens.ops[0], &gens.ops[1]).unwrap();
    let direct = commutator(&g12, &y).unwrap();
    let diff = a.sub(&b).unwrap();
    assert!(max_abs(&(diff.entries() - direct.entries())) < 1e-10 * max_abs(direct.entries()));
}

#[test]
fn fast_adjoint_action_matches_dense_words() {
    let g = GridSpec::new(1, 16, 4.0).unwrap();
    let gens = build_generators(&g).unwrap();
    let y = Operator::new(g, random_matrix(16, 9), "Y").unwrap();
    for w in CommutatorWord::all_of_length(&gens.noncentral(), 3) {
        let fast = gens.iterated_ad(&w, &y).unwrap();
        let dense = iterated_commutator(&gens.ops, &w, &y).unwrap();
        assert!(max_abs(&(fast.entries() - dense.entries())) < 1e-9 * (1.0 + max_abs(dense.entries())), "{w:?}");
    }
}

#[test]
fn out_of_range_words_rejected() {
    let g = GridSpec::new(1, 8, 4.0).unwrap();
    let gens = build_generators(&g).unwrap();
    let y = Operator::identity(g);
    assert!(gens.iterated_ad(&CommutatorWord(vec![7]), &y).is_err());
    assert!(iterated_commutator(&gens.ops, &CommutatorWord(vec![0, 9]), &y).is_err());
}
