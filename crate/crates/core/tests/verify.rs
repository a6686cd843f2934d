use fmarkov::verify::{check_names, derive_seed, run_all, run_selected, to_json, DEFAULT_SEED};

#[test]
fn full_suite_passes_with_the_default_seed() {
    let results = run_all(DEFAULT_SEED);
    assert_eq!(results.len(), check_names().len());
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.to_string())
        .collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert!(results.iter().any(|r| r.negative_control));
}

#[test]
fn sampled_checks_are_reproducible() {
    let a = to_json(&run_selected(DEFAULT_SEED, Some("structural_samples")));
    let b = to_json(&run_selected(DEFAULT_SEED, Some("structural_samples")));
    assert_eq!(a, b);
    let c = run_selected(DEFAULT_SEED, Some("sampling_bands"));
    let d = run_selected(DEFAULT_SEED + 1, Some("sampling_bands"));
    assert_ne!(c[0].residual, d[0].residual);
}

#[test]
fn per_check_seeds_differ() {
    let seeds: Vec<u64> = (0..check_names().len())
        .map(|i| derive_seed(DEFAULT_SEED, i))
        .collect();
    let mut unique = seeds.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), seeds.len());
    assert_eq!(seeds[3], derive_seed(DEFAULT_SEED, 3));
}

#[test]
fn selection_matches_names_and_prefixes() {
    assert_eq!(run_selected(DEFAULT_SEED, Some("ow87")).len(), 2);
    assert_eq!(run_selected(DEFAULT_SEED, Some("ow87.r3")).len(), 1);
    assert!(run_selected(DEFAULT_SEED, Some("ow8")).is_empty());
}
