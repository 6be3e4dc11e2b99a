//! Public-API invariants: isometry and deck invariance, the exact Randers
//! length identity, and the hyperbolic horofunction.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use minrays::asymptotic::hyperbolic_horofunction;
use minrays::engine::{dist_f, EngineOptions};
use minrays::hyperbolic::dist_g;
use minrays::{
    BoundaryPoint, DiscPoint, FinslerMetric, GeneratorSet, GroupWord, InvariantField, Letter,
    MobiusMap,
};
use proptest::prelude::*;

fn gens() -> &'static GeneratorSet {
    static G: OnceLock<GeneratorSet> = OnceLock::new();
    G.get_or_init(|| GeneratorSet::build_octagon_group().unwrap())
}

fn field() -> Arc<InvariantField> {
    static F: OnceLock<Arc<InvariantField>> = OnceLock::new();
    F.get_or_init(|| Arc::new(InvariantField::new(gens(), 0.5, 1.0, 6).unwrap()))
        .clone()
}

fn point() -> impl Strategy<Value = DiscPoint> {
    (0.0..TAU, 0.0..3.0f64).prop_map(|(t, r)| DiscPoint::new(t, r).unwrap())
}

fn word() -> impl Strategy<Value = GroupWord> {
    proptest::collection::vec((0u8..4, any::<bool>()), 0..4)
        .prop_map(|v| GroupWord::reduce(v.into_iter().map(|(g, inv)| Letter::new(g, inv))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mobius_maps_preserve_distance(p in point(), q in point(), phi in 0.0..TAU, t in -2.0..2.0f64) {
        let m = MobiusMap::rotation(phi) * MobiusMap::translation(t);
        let d = dist_g(&m.apply(&p).unwrap(), &m.apply(&q).unwrap());
        prop_assert!((d - dist_g(&p, &q)).abs() < 1e-9 * (1.0 + d));
    }

    #[test]
    fn field_is_deck_invariant(p in point(), w in word()) {
        let m = gens().evaluate_word(&w);
        let Ok(image) = m.apply(&p) else { return Ok(()) };
        prop_assume!(image.rho() < 8.0);
        let f = field();
        prop_assert!((f.value(&image).unwrap() - f.value(&p).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn horofunction_is_one_lipschitz(xi in 0.0..TAU, p in point(), q in point()) {
        let xi = BoundaryPoint::new(xi);
        let du = hyperbolic_horofunction(&xi, &p) - hyperbolic_horofunction(&xi, &q);
        prop_assert!(du.abs() <= dist_g(&p, &q) + 1e-9);
    }

    #[test]
    fn horofunction_shifts_by_translation_length(xi in 0.0..TAU, t in 0.0..3.0f64) {
        let xi = BoundaryPoint::new(xi);
        let p = DiscPoint::new(xi.angle(), t).unwrap();
        prop_assert!((hyperbolic_horofunction(&xi, &p) - t).abs() < 1e-9);
    }
}

#[test]
fn randers_length_is_riemannian_length_plus_exact_term() {
    let eps = 0.3;
    let metric = FinslerMetric::randers_exact(field(), eps).unwrap();
    let hyp = FinslerMetric::hyperbolic();
    let opts = EngineOptions::default();
    let pairs = [
        ((0.3, 0.2), (2.1, 1.7)),
        ((1.0, 2.0), (4.0, 1.0)),
        ((5.5, 0.0), (0.4, 2.5)),
    ];
    for ((t1, r1), (t2, r2)) in pairs {
        let x = DiscPoint::new(t1, r1).unwrap();
        let y = DiscPoint::new(t2, r2).unwrap();
        let f = field();
        let expected = dist_f(&hyp, &x, &y, &opts).unwrap()
            + eps * (f.value(&y).unwrap() - f.value(&x).unwrap());
        let got = dist_f(&metric, &x, &y, &opts).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}

#[test]
fn conformal_distance_is_symmetric_and_deck_invariant() {
    let metric = FinslerMetric::conformal(field());
    let opts = EngineOptions::default();
    let x = DiscPoint::new(0.4, 0.9).unwrap();
    let y = DiscPoint::new(2.6, 1.3).unwrap();
    let d = dist_f(&metric, &x, &y, &opts).unwrap();
    let back = dist_f(&metric, &y, &x, &opts).unwrap();
    assert!((d - back).abs() < 1e-7 * d, "{d} vs {back}");
    let m = gens().evaluate_word(&GroupWord::parse("aB").unwrap());
    let moved = dist_f(&metric, &m.apply(&x).unwrap(), &m.apply(&y).unwrap(), &opts).unwrap();
    assert!((d - moved).abs() < 1e-7 * d, "{d} vs {moved}");
}
