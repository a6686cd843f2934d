use fmarkov::freegroup::{ball, induced_left_edges, is_left_connected, reduce, tree_hull};
use fmarkov::{Domain, Generator, GroupSpec, Word};
use proptest::prelude::*;

fn letters(rank: usize, group: bool, max_len: usize) -> impl Strategy<Value = Vec<Generator>> {
    prop::collection::vec((0..rank, any::<bool>()), 0..=max_len).prop_map(move |v| {
        v.into_iter()
            .map(|(i, inv)| {
                if inv && group {
                    Generator::negative(i)
                } else {
                    Generator::positive(i)
                }
            })
            .collect()
    })
}

fn spec(rank: usize, group: bool) -> GroupSpec {
    if group {
        GroupSpec::group(rank)
    } else {
        GroupSpec::semigroup(rank)
    }
}

fn domain_strategy() -> impl Strategy<Value = (bool, Vec<Vec<Generator>>)> {
    any::<bool>().prop_flat_map(|group| {
        (
            Just(group),
            prop::collection::vec(letters(2, group, 4), 1..6),
        )
    })
}

#[test]
fn ball_sizes_match_formula() {
    for r in 2..=4usize {
        for n in 0..=4u32 {
            let q = 2 * r - 1;
            let group = 1 + 2 * r * (q.pow(n) - 1) / (2 * r - 2);
            assert_eq!(
                ball(&GroupSpec::group(r), n as usize).len(),
                group,
                "r={r} n={n}"
            );
            let semi = (r.pow(n + 1) - 1) / (r - 1);
            assert_eq!(
                ball(&GroupSpec::semigroup(r), n as usize).len(),
                semi,
                "r={r} n={n}"
            );
        }
    }
    assert_eq!(ball(&GroupSpec::semigroup(1), 4).len(), 5);
}

#[test]
fn ball_is_shortlex_sorted_and_reduced() {
    let g = GroupSpec::group(2);
    let words = ball(&g, 3);
    assert!(words.windows(2).all(|w| w[0] < w[1]));
    for w in &words {
        assert_eq!(&reduce(w.letters(), &g).unwrap(), w);
    }
    let printed: Vec<String> = words[..5].iter().map(|w| w.to_string()).collect();
    assert_eq!(printed, ["e", "a", "A", "b", "B"]);
}

proptest! {
    #[test]
    fn reduce_is_idempotent(group in any::<bool>(), raw in letters(3, true, 12)) {
        let s = spec(3, group);
        let raw: Vec<Generator> = raw.into_iter()
            .map(|g| if group { g } else { Generator::positive(g.index()) })
            .collect();
        let once = reduce(&raw, &s).unwrap();
        let twice = reduce(once.letters(), &s).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.letters().windows(2).all(|p| p[0] != p[1].inv()));
    }

    #[test]
    fn word_times_inverse_is_identity(raw in letters(3, true, 12)) {
        let s = GroupSpec::group(3);
        let w = reduce(&raw, &s).unwrap();
        let inv = w.inverse(&s).unwrap();
        prop_assert!(w.concat(&inv, &s).unwrap().is_identity());
        prop_assert!(inv.concat(&w, &s).unwrap().is_identity());
        prop_assert_eq!(inv.inverse(&s).unwrap(), w);
    }

    #[test]
    fn left_and_right_multiplication_associate(
        raw in letters(2, true, 6), i in 0usize..2, j in 0usize..2, inv in any::<bool>()
    ) {
        let s = GroupSpec::group(2);
        let w = reduce(&raw, &s).unwrap();
        let a = Generator::positive(i);
        let b = if inv { Generator::negative(j) } else { Generator::positive(j) };
        let left_first = w.left_mul(a, &s).unwrap().right_mul(b, &s).unwrap();
        let right_first = w.right_mul(b, &s).unwrap().left_mul(a, &s).unwrap();
        prop_assert_eq!(left_first, right_first);
    }

    #[test]
    fn tree_hull_is_minimal_left_connected_cover((group, raws) in domain_strategy()) {
        let s = spec(2, group);
        let d = Domain::new(raws.iter().map(|r| reduce(r, &s).unwrap()));
        let hull = tree_hull(&d);
        prop_assert!(is_left_connected(&hull));
        prop_assert!(d.is_subset(&hull));
        prop_assert!(hull.contains(&Word::identity()));
        prop_assert_eq!(induced_left_edges(&hull).len(), hull.len() - 1);
        // every leaf of the hull is needed
        for w in hull.iter() {
            let is_leaf = !hull.iter().any(|c| c.parent().as_ref() == Some(w));
            if is_leaf && !w.is_identity() {
                prop_assert!(d.contains(w), "{} is a superfluous leaf", w);
            }
        }
    }

    #[test]
    fn translated_ball_keeps_size(n in 0usize..4, i in 0usize..2, inv in any::<bool>()) {
        let s = GroupSpec::group(2);
        let g = if inv { Generator::negative(i) } else { Generator::positive(i) };
        let b = Domain::ball(&s, n);
        let moved = b.right_translate(g, &s).unwrap();
        prop_assert_eq!(moved.len(), b.len());
        prop_assert_eq!(moved.right_translate(g.inv(), &s).unwrap(), b);
    }
}
