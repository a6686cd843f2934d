//! Named numerical checks of the identities the library relies on.
//!
//! Every check returns a [`CheckResult`]; [`run_all`] runs the default
//! suite, including negative controls that feed deliberately broken inputs
//! to a check and pass only when that check fails.

use std::fmt;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::markov_approximation;
use crate::entropy::{big_f, closed_form_f, f_markov, f_sequence};
use crate::error::Result;
use crate::freegroup::{induced_left_edges, Domain, GroupSpec, Word};
use crate::measure::{
    check_markov_property, check_shift_invariance, check_shift_invariance_sampled, coarsen,
    markov_marginal, sample, MeasureSource,
};
use crate::transition::{
    bernoulli_system, cyclic_system, flip_system, matching_system,
    permutation_system_from_positive, product_system, validate, wsf_system, TransitionSystem,
};

/// Tolerance for entropy identities.
pub const ENTROPY_TOL: f64 = 1e-9;
/// Tolerance for algebraic and measure identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Width of Monte Carlo bands, in standard deviations.
pub const SIGMA_BAND: f64 = 4.0;
/// Required drop `F(alpha^0) - F(alpha^1)` for a non-Markov source.
pub const STRICT_DROP: f64 = 1e-3;
/// Default seed of the suite.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    /// Set for negative controls: `passed` then means the underlying check
    /// failed, as it should.
    pub negative_control: bool,
    pub details: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64, details: String) -> Self {
        CheckResult {
            name: name.into(),
            passed: residual <= tolerance,
            residual,
            tolerance,
            negative_control: false,
            details,
        }
    }

    fn error(name: impl Into<String>, err: &crate::error::Error) -> Self {
        CheckResult {
            name: name.into(),
            passed: false,
            residual: f64::INFINITY,
            tolerance: 0.0,
            negative_control: false,
            details: format!("error: {err}"),
        }
    }

    /// Turns a check on broken input into a control that passes iff the
    /// check failed.
    pub fn into_negative_control(mut self) -> Self {
        self.passed = !self.passed;
        self.negative_control = true;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} residual={:.3e} tol={:.1e}{}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance,
            if self.negative_control {
                " (negative control)"
            } else {
                ""
            },
            self.details
        )
    }
}

/// `max_{n <= n_max} |F(alpha^n) - f|` for the Markov measure of `ts`, with
/// `f` from the closed form. The identity needs an invariant system, so the
/// residual also includes the largest invariance violation of `ts`.
pub fn check_f_equals_big_f(ts: &TransitionSystem, n_max: usize, tol: f64) -> Result<CheckResult> {
    let f = closed_form_f(ts);
    let src = MeasureSource::Markov(ts.clone());
    let mut identity: f64 = 0.0;
    let mut values = Vec::new();
    for rep in f_sequence(&src, n_max)? {
        identity = identity.max((rep.big_f - f).abs());
        values.push(format!("F{}={:.10}", rep.n, rep.big_f));
    }
    let invariance = validate(ts, tol).max_residual();
    Ok(CheckResult::new(
        "f_equals_F",
        identity.max(invariance),
        tol,
        format!(
            "f={f:.10} {} identity_residual={identity:.3e} invariance_residual={invariance:.3e}",
            values.join(" ")
        ),
    ))
}

/// Markov-property test at the root followed by the drop
/// `F(alpha^0) - F(alpha^1)`. A non-Markov source must show a drop above
/// `tol_strict`; a Markov one must show none. For the former the residual
/// is `tol_strict - drop` against tolerance 0.
pub fn check_characterization(src: &MeasureSource, tol_strict: f64) -> Result<CheckResult> {
    let spec = *src.spec();
    let s = spec.positive_generators()[0];
    let markov = check_markov_property(src, &Word::identity(), s, 1)?;
    let f0 = big_f(src, 0)?.big_f;
    let f1 = big_f(src, 1)?.big_f;
    let drop = f0 - f1;
    let is_markov = markov.residual <= ENTROPY_TOL;
    let details = format!(
        "F0={f0:.12} F1={f1:.12} drop={drop:.12} markov_residual={:.3e}",
        markov.residual
    );
    Ok(if is_markov {
        CheckResult::new(
            "characterization",
            drop.abs(),
            ENTROPY_TOL,
            format!("Markov, no drop expected; {details}"),
        )
    } else {
        let mut r = CheckResult::new(
            "characterization",
            tol_strict - drop,
            0.0,
            format!("not Markov, drop above {tol_strict:e} expected; {details}"),
        );
        r.passed = drop > tol_strict;
        r
    })
}

/// `|f(ts1 x ts2) - f(ts1) - f(ts2)|`.
pub fn check_product_additivity(
    a: &TransitionSystem,
    b: &TransitionSystem,
    tol: f64,
) -> Result<CheckResult> {
    let fa = f_markov(a)?;
    let fb = f_markov(b)?;
    let fp = f_markov(&product_system(a, b)?)?;
    Ok(CheckResult::new(
        "product_additivity",
        (fp - fa - fb).abs(),
        tol,
        format!("f(product)={fp:.12} f1={fa:.12} f2={fb:.12}"),
    ))
}

/// Cyclic shift by one under the first generator, identity elsewhere.
fn rotation_system(spec: GroupSpec, n: usize) -> Result<TransitionSystem> {
    let mut perms = vec![(0..n).collect::<Vec<_>>(); spec.rank()];
    perms[0] = (0..n).map(|i| (i + 1) % n).collect();
    permutation_system_from_positive(spec, n, &perms)
}

fn identity_permutations(spec: GroupSpec, n: usize) -> Result<TransitionSystem> {
    permutation_system_from_positive(spec, n, &vec![(0..n).collect(); spec.rank()])
}

/// For a base action on `n_base` points and its `fiber`-to-one extension
/// (product with the identity action on `fiber` points):
/// `f(base) = (r - 1) log(fiber) + f(extension)`.
pub fn check_finite_to_one(
    n_base: usize,
    fiber: usize,
    rank: usize,
    tol: f64,
) -> Result<CheckResult> {
    let spec = GroupSpec::new(rank, crate::freegroup::GroupKind::Group)?;
    let base = rotation_system(spec, n_base)?;
    let ext = product_system(&base, &identity_permutations(spec, fiber)?)?;
    let f_base = f_markov(&base)?;
    let f_ext = f_markov(&ext)?;
    let shift = (rank as f64 - 1.0) * (fiber as f64).ln();
    Ok(CheckResult::new(
        "finite_to_one",
        (f_base - shift - f_ext).abs(),
        tol,
        format!(
            "n={n_base} fiber={fiber} r={rank}: f(base)={f_base:.12} f(ext)={f_ext:.12} (r-1)log(fiber)={shift:.12}"
        ),
    ))
}

/// `f(T_G) = f(T_N) + f(T_{GxG})` with `T_G` the uniform Bernoulli shift on
/// 2 symbols, `T_N` the trivial action on 2 points and `T_{GxG}` the
/// uniform Bernoulli shift on 4 symbols. The identity holds at rank 2; at
/// every rank the extension relation `f(T_G) = (r-1) log 2 + f(T_G x T_N)`
/// is checked as well.
pub fn check_ow87(rank: usize, tol: f64) -> Result<CheckResult> {
    let spec = GroupSpec::new(rank, crate::freegroup::GroupKind::Group)?;
    let t_g = bernoulli_system(spec, &[0.5; 2])?;
    let t_n = identity_permutations(spec, 2)?;
    let t_gg = bernoulli_system(spec, &[0.25; 4])?;
    let (fg, fn_, fgg) = (f_markov(&t_g)?, f_markov(&t_n)?, f_markov(&t_gg)?);
    let f_ext = f_markov(&product_system(&t_g, &t_n)?)?;
    let ext_residual = (fg - (rank as f64 - 1.0) * 2f64.ln() - f_ext).abs();
    let mut details = format!("f(T_G)={fg:.12} f(T_N)={fn_:.12} f(T_GxG)={fgg:.12}");
    let residual = if rank == 2 {
        details.push_str(" (addition identity and extension relation)");
        ext_residual.max((fg - fn_ - fgg).abs())
    } else {
        details.push_str(" (extension relation only)");
        ext_residual
    };
    Ok(CheckResult::new("ow87", residual, tol, details))
}

/// Edge constraint read with state `i` meaning the `i`-th generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeConstraint {
    /// `x(g) = s` forbids `x(sg) = s^-1`.
    Forest,
    /// `x(g) = s` if and only if `x(sg) = s^-1`.
    Matching,
}

/// Counts sampled tree edges `g -> sg` inside `B(e, radius)` that violate
/// `constraint`.
pub fn check_structural_samples(
    ts: &TransitionSystem,
    constraint: EdgeConstraint,
    radius: usize,
    seed: u64,
    count: usize,
) -> Result<CheckResult> {
    let spec = *ts.spec();
    let samples = sample(ts, radius, seed, count)?;
    let gens = spec.generators();
    let slot_of = |s| gens.iter().position(|&t| t == s);
    let edges: Vec<(usize, usize, Option<usize>, Option<usize>)> =
        induced_left_edges(&samples.domain)
            .into_iter()
            .map(|e| {
                (
                    samples.domain.index_of(&e.tail).unwrap(),
                    samples.domain.index_of(&e.head).unwrap(),
                    slot_of(e.label),
                    slot_of(e.label.inv()),
                )
            })
            .collect();
    let mut violations = 0u64;
    for row in &samples.rows {
        for &(g, sg, s, s_inv) in &edges {
            let out = s.is_some() && Some(row[g]) == s;
            let back = s_inv.is_some() && Some(row[sg]) == s_inv;
            let bad = match constraint {
                EdgeConstraint::Forest => out && back,
                EdgeConstraint::Matching => out != back,
            };
            violations += u64::from(bad);
        }
    }
    Ok(CheckResult::new(
        "structural_samples",
        violations as f64,
        0.0,
        format!(
            "{constraint:?} constraint, {count} samples on B(e,{radius}), {} edges each: {violations} violations",
            edges.len()
        ),
    ))
}

/// Largest deviation, in standard deviations, of an empirical cylinder
/// frequency on `B(e, radius)` from its exact probability.
pub fn check_sampling_bands(
    ts: &TransitionSystem,
    radius: usize,
    seed: u64,
    count: usize,
) -> Result<CheckResult> {
    let samples = sample(ts, radius, seed, count)?;
    let exact = markov_marginal(ts, &samples.domain)?;
    let empirical = samples.marginal(&samples.domain)?;
    let n = count as f64;
    let mut worst: f64 = 0.0;
    let mut outside_support = 0;
    for (idx, p) in exact.nonzero() {
        let sigma = (p * (1.0 - p) / n).sqrt();
        let dev = (empirical.prob_index(idx) - p).abs();
        if sigma > 0.0 {
            worst = worst.max(dev / sigma);
        } else if dev > 0.0 {
            worst = f64::INFINITY;
        }
    }
    for (idx, _) in empirical.nonzero() {
        if exact.prob_index(idx) == 0.0 {
            outside_support += 1;
            worst = f64::INFINITY;
        }
    }
    Ok(CheckResult::new(
        "sampling_bands",
        worst,
        SIGMA_BAND,
        format!(
            "{count} samples on B(e,{radius}), {} cylinders, {outside_support} sampled outside the support",
            exact.nonzero().len()
        ),
    ))
}

/// Largest shift-invariance residual over every generator and every ball
/// up to `radius`.
pub fn check_shift_invariance_all(
    ts: &TransitionSystem,
    radius: usize,
    tol: f64,
) -> Result<CheckResult> {
    let spec = *ts.spec();
    let mut residual: f64 = 0.0;
    for n in 0..=radius {
        let ball = Domain::ball(&spec, n);
        for s in spec.generators() {
            residual = residual.max(check_shift_invariance(ts, &ball, s)?);
        }
    }
    Ok(CheckResult::new(
        "shift_invariance",
        residual,
        tol,
        format!(
            "{} generators, balls up to radius {radius}",
            spec.num_generators()
        ),
    ))
}

/// Largest increase `F(alpha^{n+1}) - F(alpha^n)` for `n < n_max`.
pub fn check_monotone(src: &MeasureSource, n_max: usize, tol: f64) -> Result<CheckResult> {
    let seq = f_sequence(src, n_max)?;
    let increase = seq
        .windows(2)
        .map(|w| w[1].big_f - w[0].big_f)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let values: Vec<String> = seq.iter().map(|r| format!("{:.10}", r.big_f)).collect();
    Ok(CheckResult::new(
        "monotone",
        increase,
        tol,
        format!("F = [{}]", values.join(", ")),
    ))
}

/// `max_{m <= m_max} |f(approximation at depth m) - F(alpha^m)|`.
pub fn check_approximation(src: &MeasureSource, m_max: usize, tol: f64) -> Result<CheckResult> {
    let mut residual: f64 = 0.0;
    let mut parts = Vec::new();
    for m in 0..=m_max {
        let approx = markov_approximation(src, m)?;
        let fa = f_markov(&approx.inner)?;
        let bf = big_f(src, m)?.big_f;
        residual = residual.max((fa - bf).abs());
        parts.push(format!(
            "m={m}: {} superstates, f={fa:.12}, F={bf:.12}",
            approx.inner.num_states()
        ));
    }
    Ok(CheckResult::new(
        "approximation",
        residual,
        tol,
        parts.join("; "),
    ))
}

/// The 3-state cycle with `stay = 0.2` on the rank-2 free group, with
/// states 0 and 1 merged.
pub fn hidden_cycle_source() -> Result<MeasureSource> {
    let ts = cyclic_system(GroupSpec::group(2), 3, 0.2)?;
    coarsen(&ts, &["0".into(), "0".into(), "1".into()])
}

type CheckFn = fn(u64) -> Result<CheckResult>;

fn suite() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("f_equals_F.wsf", |_| {
            check_f_equals_big_f(&wsf_system(2)?, 1, ENTROPY_TOL)
        }),
        ("f_equals_F.matching", |_| {
            check_f_equals_big_f(&matching_system(2)?, 1, ENTROPY_TOL)
        }),
        ("f_equals_F.flip", |_| {
            check_f_equals_big_f(&flip_system(GroupSpec::group(2), 0.3)?, 2, ENTROPY_TOL)
        }),
        ("f_equals_F.perturbed_pi", |_| {
            let ts = flip_system(GroupSpec::group(2), 0.3)?.with_pi(vec![0.6, 0.4])?;
            Ok(check_f_equals_big_f(&ts, 1, ENTROPY_TOL)?.into_negative_control())
        }),
        ("characterization.hidden_cycle", |_| {
            check_characterization(&hidden_cycle_source()?, STRICT_DROP)
        }),
        ("characterization.identity_map", |_| {
            let ts = cyclic_system(GroupSpec::group(2), 3, 0.2)?;
            check_characterization(&coarsen(&ts, ts.states())?, STRICT_DROP)
        }),
        ("characterization.bernoulli", |_| {
            let ts = bernoulli_system(GroupSpec::group(2), &[0.2, 0.3, 0.5])?;
            let src = coarsen(&ts, &["x".into(), "x".into(), "y".into()])?;
            check_characterization(&src, STRICT_DROP)
        }),
        ("product_additivity.flip", |_| {
            let g = GroupSpec::group(2);
            check_product_additivity(&flip_system(g, 0.2)?, &flip_system(g, 0.7)?, ENTROPY_TOL)
        }),
        ("product_additivity.bernoulli", |_| {
            let g = GroupSpec::group(2);
            check_product_additivity(
                &bernoulli_system(g, &[0.3, 0.7])?,
                &bernoulli_system(g, &[0.1, 0.2, 0.7])?,
                ENTROPY_TOL,
            )
        }),
        ("product_additivity.wsf_trivial", |_| {
            check_product_additivity(
                &wsf_system(2)?,
                &bernoulli_system(GroupSpec::group(2), &[1.0])?,
                ENTROPY_TOL,
            )
        }),
        ("finite_to_one.3_2_r2", |_| {
            check_finite_to_one(3, 2, 2, ENTROPY_TOL)
        }),
        ("finite_to_one.5_1_r2", |_| {
            check_finite_to_one(5, 1, 2, ENTROPY_TOL)
        }),
        ("finite_to_one.2_4_r3", |_| {
            check_finite_to_one(2, 4, 3, ENTROPY_TOL)
        }),
        ("ow87.r2", |_| check_ow87(2, ENTROPY_TOL)),
        ("ow87.r3", |_| check_ow87(3, ENTROPY_TOL)),
        ("structural_samples.wsf", |seed| {
            check_structural_samples(&wsf_system(2)?, EdgeConstraint::Forest, 2, seed, 10_000)
        }),
        ("structural_samples.matching", |seed| {
            check_structural_samples(
                &matching_system(2)?,
                EdgeConstraint::Matching,
                2,
                seed,
                10_000,
            )
        }),
        ("structural_samples.flip_as_matching", |seed| {
            let ts = flip_system(GroupSpec::group(2), 0.5)?;
            Ok(
                check_structural_samples(&ts, EdgeConstraint::Matching, 2, seed, 10_000)?
                    .into_negative_control(),
            )
        }),
        ("sampling_bands.flip", |seed| {
            check_sampling_bands(&flip_system(GroupSpec::group(2), 0.3)?, 1, seed, 100_000)
        }),
        ("shift_invariance.group", |seed| {
            // four states: B(e,2) translates have too many configurations
            let mut worst = check_shift_invariance_all(&wsf_system(2)?, 1, EXACT_TOL)?;
            for (ts, radius) in [
                (matching_system(2)?, 1),
                (flip_system(GroupSpec::group(2), 0.3)?, 2),
            ] {
                let r = check_shift_invariance_all(&ts, radius, EXACT_TOL)?;
                if r.residual > worst.residual {
                    worst = r;
                }
            }
            let ball = Domain::ball(&GroupSpec::group(2), 2);
            let mut sampled: f64 = 0.0;
            for ts in [wsf_system(2)?, matching_system(2)?] {
                for s in ts.spec().generators() {
                    sampled =
                        sampled.max(check_shift_invariance_sampled(&ts, &ball, s, seed, 2_000)?);
                }
            }
            if sampled > worst.residual {
                worst.residual = sampled;
            }
            worst.passed = worst.residual <= worst.tolerance;
            worst.details.push_str(&format!(
                "; wsf and matching on B(e,2) over sampled patterns: relative residual {sampled:.3e}"
            ));
            Ok(worst.renamed("shift_invariance.group"))
        }),
        ("shift_invariance.semigroup", |_| {
            check_shift_invariance_all(&flip_system(GroupSpec::semigroup(2), 0.3)?, 2, EXACT_TOL)
        }),
        ("monotone.hidden_cycle", |_| {
            check_monotone(&hidden_cycle_source()?, 1, 1e-10)
        }),
        ("approximation.hidden_cycle", |_| {
            check_approximation(&hidden_cycle_source()?, 1, ENTROPY_TOL)
        }),
    ]
}

/// Names of the checks in [`run_all`], in order.
pub fn check_names() -> Vec<&'static str> {
    suite().into_iter().map(|(n, _)| n).collect()
}

/// Seed of the `index`-th check, derived from the master seed.
pub fn derive_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Runs the checks whose name equals `only` or starts with `only.`; all
/// checks when `only` is `None`.
pub fn run_selected(seed: u64, only: Option<&str>) -> Vec<CheckResult> {
    suite()
        .into_iter()
        .enumerate()
        .filter(|(_, (name, _))| match only {
            None => true,
            Some(o) => *name == o || name.strip_prefix(o).is_some_and(|r| r.starts_with('.')),
        })
        .map(|(i, (name, check))| match check(derive_seed(seed, i)) {
            Ok(r) => r.renamed(name),
            Err(e) => CheckResult::error(name, &e),
        })
        .collect()
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    run_selected(seed, None)
}

/// JSON array of results.
pub fn to_json(results: &[CheckResult]) -> String {
    serde_json::to_string_pretty(results).expect("check results serialize")
}
