use fmarkov::measure::{
    check_shift_invariance, coarsen, d1, markov_marginal, pattern_prob, sample,
};
use fmarkov::transition::{
    bernoulli_system, cyclic_system, flip_system, matching_system,
    permutation_system_from_positive, wsf_system, PairStats,
};
use fmarkov::{Domain, Generator, GroupSpec, MeasureSource, Pattern, TransitionSystem, Word};
use proptest::prelude::*;

fn g2() -> GroupSpec {
    GroupSpec::group(2)
}

fn two_state_builtins() -> Vec<TransitionSystem> {
    vec![
        flip_system(g2(), 0.3).unwrap(),
        flip_system(g2(), 0.0).unwrap(),
        bernoulli_system(g2(), &[0.5, 0.5]).unwrap(),
        permutation_system_from_positive(g2(), 2, &[vec![1, 0], vec![0, 1]]).unwrap(),
        flip_system(GroupSpec::semigroup(2), 0.3).unwrap(),
    ]
}

#[test]
fn ball_marginals_are_normalized() {
    for ts in two_state_builtins() {
        let m = markov_marginal(&ts, &Domain::ball(ts.spec(), 2)).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-12);
    }
    for ts in [wsf_system(2).unwrap(), matching_system(2).unwrap()] {
        let m = markov_marginal(&ts, &Domain::ball(ts.spec(), 1)).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn shift_invariance_of_builtins() {
    let mut systems = two_state_builtins();
    systems.push(cyclic_system(GroupSpec::semigroup(2), 3, 0.4).unwrap());
    for ts in &systems {
        for n in 0..=2 {
            let ball = Domain::ball(ts.spec(), n);
            for s in ts.spec().generators() {
                let r = check_shift_invariance(ts, &ball, s).unwrap();
                assert!(r < 1e-12, "n={n} s={s:?}: {r}");
            }
        }
    }
}

#[test]
fn empirical_wsf_joints_match_exact() {
    let ts = wsf_system(2).unwrap();
    let emp = MeasureSource::Empirical(sample(&ts, 1, 11, 100_000).unwrap());
    let a = emp.pair_stats().unwrap();
    let b = ts.pair_stats();
    let worst = a
        .joints
        .iter()
        .flatten()
        .zip(b.joints.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.01, "{worst}");
}

#[test]
fn samples_are_reproducible() {
    let ts = flip_system(g2(), 0.3).unwrap();
    let a = sample(&ts, 2, 5, 50).unwrap();
    assert_eq!(a, sample(&ts, 2, 5, 50).unwrap());
    assert_ne!(a.rows, sample(&ts, 2, 6, 50).unwrap().rows);
    assert_eq!(a.to_csv().lines().count(), 51);
}

#[test]
fn identity_coarsening_is_the_markov_measure() {
    let ts = cyclic_system(g2(), 3, 0.2).unwrap();
    let src = coarsen(&ts, ts.states()).unwrap();
    let d = Domain::ball(&g2(), 1);
    let a = src.ball_marginal(&d).unwrap();
    let b = markov_marginal(&ts, &d).unwrap();
    for (i, p) in b.nonzero() {
        assert!((a.prob_index(i) - p).abs() < 1e-15);
    }
}

fn flip_stats(eps: f64) -> PairStats {
    flip_system(g2(), eps).unwrap().pair_stats()
}

fn domain_in_ball(max_words: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::btree_set(0usize..17, 1..=max_words).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marginals_are_projective(eps in 0.0f64..=1.0, picks in domain_in_ball(6)) {
        let ts = flip_system(g2(), eps).unwrap();
        let ball = Domain::ball(&g2(), 2);
        let sub = Domain::new(picks.iter().map(|&i| ball.words()[i].clone()));
        let big = markov_marginal(&ts, &ball).unwrap();
        let small = markov_marginal(&ts, &sub).unwrap();
        let projected = big.marginalize(&sub).unwrap();
        for idx in 0..small.codec().count().unwrap() {
            prop_assert!((projected.prob_index(idx) - small.prob_index(idx)).abs() < 1e-12);
        }
    }

    #[test]
    fn flip_shift_invariance(eps in 0.0f64..=1.0, n in 0usize..=2, slot in 0usize..4, semigroup in any::<bool>()) {
        let spec = if semigroup { GroupSpec::semigroup(2) } else { g2() };
        let ts = flip_system(spec, eps).unwrap();
        let gens = spec.generators();
        let s = gens[slot % gens.len()];
        prop_assert!(check_shift_invariance(&ts, &Domain::ball(&spec, n), s).unwrap() < 1e-12);
    }

    #[test]
    fn pattern_prob_is_translation_invariant(stay in 0.0f64..=1.0, values in prop::collection::vec(0usize..3, 3)) {
        let ts = cyclic_system(g2(), 3, stay).unwrap();
        let words: Vec<Word> = ["e", "ab", "B"].iter().map(|w| Word::parse(w, &g2()).unwrap()).collect();
        let d = Domain::new(words.clone());
        let z: Vec<usize> = d.iter().map(|w| values[words.iter().position(|x| x == w).unwrap()]).collect();
        let s = Generator::negative(0);
        let moved = d.right_translate(s, &g2()).unwrap();
        let zs: Vec<usize> = moved
            .iter()
            .map(|w| {
                let back = w.right_mul(s.inv(), &g2()).unwrap();
                z[d.index_of(&back).unwrap()]
            })
            .collect();
        let p = pattern_prob(&ts, &Pattern::new(d, z).unwrap()).unwrap();
        let q = pattern_prob(&ts, &Pattern::new(moved, zs).unwrap()).unwrap();
        prop_assert!((p - q).abs() < 1e-15);
    }

    #[test]
    fn d1_is_a_pseudometric(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        let (x, y, z) = (flip_stats(a), flip_stats(b), flip_stats(c));
        prop_assert_eq!(d1(&x, &x), 0.0);
        prop_assert_eq!(d1(&x, &y), d1(&y, &x));
        prop_assert!(d1(&x, &z) <= d1(&x, &y) + d1(&y, &z) + 1e-15);
    }
}

#[test]
fn d1_pads_state_spaces() {
    let two = bernoulli_system(g2(), &[0.5, 0.5]).unwrap().pair_stats();
    let three = bernoulli_system(g2(), &[0.5, 0.5, 0.0])
        .unwrap()
        .pair_stats();
    assert!(d1(&two, &three) < 1e-15);
    let other = bernoulli_system(g2(), &[0.5, 0.0, 0.5])
        .unwrap()
        .pair_stats();
    // each of 4 generators moves mass 0.5 off the padded joints
    assert!((d1(&two, &other) - 4.0 * 1.5).abs() < 1e-12);
}
