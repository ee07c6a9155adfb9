use polygon_chsh::bipartite::*;
use polygon_chsh::search::sample_max_tensor;
use polygon_chsh::theory::{build_theory, unit, Mat3, Orthogonal3, Theory, Vec3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-12;

fn random_state_in(t: &Theory, weights: &[f64]) -> Vec3 {
    let total: f64 = weights.iter().take(t.n()).sum::<f64>() + 1e-12;
    let v: Vec3 = t
        .pure_states()
        .iter()
        .zip(weights)
        .map(|(p, w)| p * (w / total))
        .sum();
    Vec3::new(v.x, v.y, 1.0)
}

#[test]
fn map_validation_examples() {
    for n in [3, 5, 7, 9] {
        let t = build_theory(n).unwrap();
        assert!(state_from_map(&t, Mat3::identity(), 1e-9).is_ok(), "n={n}");
    }
    let t4 = build_theory(4).unwrap();
    assert!(matches!(
        state_from_map(&t4, Mat3::identity(), 1e-9),
        Err(BipartiteError::NotPositive(_))
    ));
    assert!(!in_max_tensor(&t4, &Mat3::identity(), 1e-9));
    assert!(matches!(
        state_from_map(&t4, Mat3::zeros(), 1e-9),
        Err(BipartiteError::NotNormalized(_))
    ));
}

#[test]
fn products_and_mixtures() {
    let t4 = build_theory(4).unwrap();
    let s = separable_state(&t4, &[(1.0, t4.pure_state(0), t4.pure_state(1))]).unwrap();
    assert_eq!(s.map().rank(1e-12), 1);
    for e in t4.pure_effects() {
        let expected = e.dot(&t4.pure_state(0)) * t4.pure_state(1);
        assert!((s.apply(e) - expected).amax() < EPS);
    }
    assert!(in_max_tensor(&t4, s.map(), 1e-12));

    for n in 3..=8 {
        let t = build_theory(n).unwrap();
        let w = 1.0 / (n * n) as f64;
        let terms: Vec<(f64, i64, i64)> = (0..n as i64)
            .flat_map(|a| (0..n as i64).map(move |b| (w, a, b)))
            .collect();
        let s = separable_from_vertices(&t, &terms).unwrap();
        assert!((s.apply(&unit()) - t.max_mixed()).amax() < EPS);
    }
}

#[test]
fn mixture_errors() {
    let t = build_theory(5).unwrap();
    assert!(matches!(separable_state(&t, &[]), Err(BipartiteError::BadMixture(_))));
    let v = t.pure_state(0);
    assert!(separable_state(&t, &[(0.5, v, v)]).is_err());
    assert!(separable_state(&t, &[(1.0, Vec3::new(5.0, 0.0, 1.0), v)]).is_err());
}

#[test]
fn maximally_entangled_examples() {
    let t4 = build_theory(4).unwrap();
    let me = max_entangled(&t4, &Orthogonal3(Mat3::identity())).unwrap();
    assert_eq!(*me.map(), t4.order_isomorphism().0);
    assert!((me.apply(&t4.pure_effect(0)) - 0.5 * t4.pure_state(0)).amax() < EPS);
    let t5 = build_theory(5).unwrap();
    let me = max_entangled(&t5, &Orthogonal3(Mat3::identity())).unwrap();
    assert_eq!(*me.map(), Mat3::identity());
    assert_eq!(
        max_entangled(&t5, &Orthogonal3::rotation(0.1)).unwrap_err(),
        BipartiteError::NotSymmetry
    );
}

#[test]
fn enumeration_of_maximally_entangled_states() {
    for n in 3..=12 {
        let t = build_theory(n).unwrap();
        let all = enumerate_max_entangled(&t);
        assert_eq!(all.len(), 2 * n);
        for (k, a) in all.iter().enumerate() {
            assert_eq!(a.group_index, k);
            assert!(in_max_tensor(&t, a.state.map(), 1e-12));
            assert!((a.state.apply(&unit()) - t.max_mixed()).amax() < EPS);
            for b in &all[k + 1..] {
                assert!((a.state.map() - b.state.map()).amax() > 1e-6);
            }
        }
    }
}

/// Maximally entangled maps send extreme effect rays onto vertex rays.
#[test]
fn rays_go_to_rays() {
    for n in 3..=16 {
        let t = build_theory(n).unwrap();
        for me in enumerate_max_entangled(&t) {
            for i in 0..n as i64 {
                let image = me.state.apply(&t.pure_effect(i));
                assert!(image.z > 0.0);
                let normalized = image / image.z;
                let hit = t.pure_states().iter().any(|v| (v - normalized).amax() < 1e-12);
                assert!(hit, "n={n} g={} i={i}", me.group_index);
            }
        }
    }
}

#[test]
fn transposition() {
    let t = build_theory(5).unwrap();
    let me = max_entangled(&t, &Orthogonal3(Mat3::identity())).unwrap();
    assert_eq!(transpose_state(&me), me);
    let (a, b) = (t.pure_state(1), t.pure_state(3));
    let ab = separable_state(&t, &[(1.0, a, b)]).unwrap();
    let ba = separable_state(&t, &[(1.0, b, a)]).unwrap();
    assert!((transpose_state(&ab).map() - ba.map()).amax() < EPS);
    assert_eq!(transpose_state(&transpose_state(&ab)), ab);
}

#[test]
fn assemblage_examples() {
    let t5 = build_theory(5).unwrap();
    let id = state_from_map(&t5, Mat3::identity(), 1e-9).unwrap();
    let a = conditional_assemblage(&id, &t5.binary_observable(0));
    assert!((a.probs[0] - 0.447214).abs() < 1e-6);
    assert!((a.probs[0] - t5.big_r()).abs() < EPS);
    assert!((a.states[0] - t5.pure_state(0)).amax() < EPS);

    let xi = t5.pure_state(2);
    let prod = separable_state(&t5, &[(1.0, t5.max_mixed(), xi)]).unwrap();
    let a = conditional_assemblage(&prod, &t5.binary_observable(1));
    for k in 0..2 {
        assert!((a.states[k] - xi).amax() < EPS);
    }

    for n in [4, 5, 6, 7] {
        let t = build_theory(n).unwrap();
        for me in enumerate_max_entangled(&t) {
            for i in 0..n as i64 {
                let a = conditional_assemblage(&me.state, &t.binary_observable(i));
                assert!((a.average() - t.max_mixed()).amax() < EPS);
            }
        }
    }
}

#[test]
fn degenerate_outcome_is_flagged() {
    // The vertex state annihilated by u - e_5(0) is omega_5(0).
    let t = build_theory(5).unwrap();
    let s = separable_state(&t, &[(1.0, t.pure_state(0), t.pure_state(1))]).unwrap();
    let a = conditional_assemblage(&s, &t.binary_observable(0));
    assert!(a.degenerate[1]);
    assert_eq!(a.states[1], t.max_mixed());
    assert!((a.probs[0] - 1.0).abs() < EPS);
}

#[test]
fn json_round_trip() {
    let t = build_theory(6).unwrap();
    let me = &enumerate_max_entangled(&t)[3].state;
    let text = serde_json::to_string(&me.to_json()).unwrap();
    let back: StateJson = serde_json::from_str(&text).unwrap();
    assert_eq!(state_from_json(&t, &back, 1e-12).unwrap(), *me);
    let t5 = build_theory(5).unwrap();
    assert!(matches!(
        state_from_json(&t5, &back, 1e-12),
        Err(BipartiteError::SideMismatch { state: 6, theory: 5 })
    ));
}

#[test]
fn triangle_max_tensor_is_separable() {
    let t = build_theory(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let s = sample_max_tensor(&t, &mut rng, 4).unwrap();
        let d = separable_decomposition(&t, &s).unwrap().expect("separable");
        assert!(d.residual <= 1e-8, "residual {}", d.residual);
        let total: f64 = d.terms.iter().map(|x| x.0).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }
}

#[test]
fn square_entangled_state_has_no_decomposition() {
    let t = build_theory(4).unwrap();
    let me = max_entangled(&t, &Orthogonal3(Mat3::identity())).unwrap();
    assert!(separable_decomposition(&t, &me).unwrap().is_none());
    let sep = separable_from_vertices(&t, &[(0.25, 0, 1), (0.75, 2, 2)]).unwrap();
    assert!(separable_decomposition(&t, &sep).unwrap().unwrap().residual < 1e-9);
}

fn setup() -> impl Strategy<Value = (usize, Vec<(f64, Vec<f64>, Vec<f64>)>, i64, i64)> {
    (
        3usize..=10,
        prop::collection::vec(
            (
                0.01f64..1.0,
                prop::collection::vec(0.0f64..1.0, 10),
                prop::collection::vec(0.0f64..1.0, 10),
            ),
            1..5,
        ),
        0i64..10,
        0i64..10,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn separable_states_do_not_signal((n, terms, i, j) in setup()) {
        let t = build_theory(n).unwrap();
        let total: f64 = terms.iter().map(|x| x.0).sum();
        let mixture: Vec<_> = terms
            .iter()
            .map(|(w, a, b)| (w / total, random_state_in(&t, a), random_state_in(&t, b)))
            .collect();
        let s = separable_state(&t, &mixture).unwrap();
        prop_assert!(in_max_tensor(&t, s.map(), 1e-10));
        let pair = AssemblagePair::new(&s, &t.binary_observable(i), &t.binary_observable(j));
        prop_assert!(pair.signaling_gap() <= 1e-10);
        for a in &pair.assemblages {
            prop_assert!((a.probs[0] + a.probs[1] - 1.0).abs() <= 1e-10);
            for k in 0..2 {
                prop_assert!(t.contains_state(&a.states[k], 1e-9));
            }
        }
    }
}
