//! Markov approximation of a shift-invariant measure.
//!
//! The depth-`m` approximation is the Markov chain whose states are the
//! positive-mass patterns on `B(e, m)`, with `pi` read off the depth-`m`
//! marginal and `P^s` read off the joint law of the pattern at `e` and the
//! pattern shifted by `s`, i.e. the marginal on `B(e, m) u B(e, m) s`.

use std::collections::HashMap;

use crate::entropy::f_markov;
use crate::error::{Error, Result};
use crate::freegroup::{Domain, GroupSpec};
use crate::measure::{MeasureSource, PatternCodec};
use crate::transition::{
    from_pair_marginals, validate, PairStats, TransitionSystem, ValidationReport, USER_TOL,
};

/// Refuse when `superstates^2 * |S|` reaches this.
pub const APPROX_LIMIT: u64 = 1 << 26;

#[derive(Debug, Clone)]
pub struct SuperstateSystem {
    pub base: GroupSpec,
    pub depth: usize,
    pub base_states: Vec<String>,
    /// Base pattern on `B(e, depth)` represented by each superstate.
    pub patterns: Vec<Vec<usize>>,
    pub inner: TransitionSystem,
    /// Validation of `inner` at the user tolerance.
    pub report: ValidationReport,
    /// Positive-probability transitions whose patterns disagree on the
    /// overlap `B(e,m) n B(e,m) s`.
    pub overlap_violations: usize,
}

impl SuperstateSystem {
    pub fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

fn pattern_label(pattern: &[usize], states: &[String]) -> String {
    let sep = if states.iter().all(|s| s.chars().count() == 1) {
        ""
    } else {
        "."
    };
    pattern
        .iter()
        .map(|&i| states[i].as_str())
        .collect::<Vec<_>>()
        .join(sep)
}

struct Support {
    ball: Domain,
    codec: PatternCodec,
    index: HashMap<u64, usize>,
    patterns: Vec<Vec<usize>>,
    pi: Vec<f64>,
}

fn support(src: &MeasureSource, depth: usize) -> Result<Support> {
    let spec = *src.spec();
    if let Some(r) = src.max_radius() {
        if r < depth + 1 {
            return Err(Error::Capability(format!(
                "depth-{depth} approximation needs radius {} (source has {r})",
                depth + 1
            )));
        }
    }
    let ball = Domain::ball(&spec, depth);
    let marginal = src.ball_marginal(&ball)?;
    let codec = marginal.codec();
    let nonzero = marginal.nonzero();
    let n = nonzero.len() as u64;
    if n * n * spec.num_generators() as u64 >= APPROX_LIMIT {
        return Err(Error::Capability(format!(
            "{n} superstates are too many for a depth-{depth} approximation"
        )));
    }
    let index = nonzero
        .iter()
        .enumerate()
        .map(|(k, &(i, _))| (i, k))
        .collect();
    let patterns = nonzero.iter().map(|&(i, _)| codec.decode(i)).collect();
    let pi = nonzero.iter().map(|&(_, p)| p).collect();
    Ok(Support {
        ball,
        codec,
        index,
        patterns,
        pi,
    })
}

/// Joint law of (pattern at e, pattern shifted by s) for every generator,
/// plus the count of overlap-inconsistent transitions.
fn superstate_joints(src: &MeasureSource, sup: &Support) -> Result<(Vec<Vec<Vec<f64>>>, usize)> {
    let spec = *src.spec();
    let n = sup.patterns.len();
    let mut joints = Vec::with_capacity(spec.num_generators());
    let mut overlap_violations = 0;
    for s in spec.generators() {
        let shifted = sup.ball.right_translate(s, &spec)?;
        let domain = sup.ball.union(&shifted);
        let marginal = src.ball_marginal(&domain)?;
        let codec = marginal.codec();
        let here: Vec<usize> = sup
            .ball
            .iter()
            .map(|w| domain.index_of(w).unwrap())
            .collect();
        let there: Vec<usize> = sup
            .ball
            .iter()
            .map(|w| Ok(domain.index_of(&w.right_mul(s, &spec)?).unwrap()))
            .collect::<Result<_>>()?;
        // pairs (k, l) of ball positions with ball[k] * s = ball[l]
        let overlap: Vec<(usize, usize)> = sup
            .ball
            .iter()
            .enumerate()
            .filter_map(|(k, w)| {
                let ws = w.right_mul(s, &spec).ok()?;
                sup.ball.index_of(&ws).map(|l| (k, l))
            })
            .collect();
        let mut joint = vec![vec![0.0; n]; n];
        let mut digits = vec![0; codec.len];
        let mut a = vec![0; sup.codec.len];
        let mut b = vec![0; sup.codec.len];
        for (idx, p) in marginal.nonzero() {
            codec.decode_into(idx, &mut digits);
            for k in 0..a.len() {
                a[k] = digits[here[k]];
                b[k] = digits[there[k]];
            }
            let i = sup.index[&sup.codec.encode(&a)];
            let j = *sup.index.get(&sup.codec.encode(&b)).ok_or_else(|| {
                Error::Domain(format!(
                    "shifted pattern under {} has zero mass; source is not shift-invariant",
                    s.file_key()
                ))
            })?;
            joint[i][j] += p;
        }
        for (i, row) in joint.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0
                    && overlap
                        .iter()
                        .any(|&(k, l)| sup.patterns[i][l] != sup.patterns[j][k])
                {
                    overlap_violations += 1;
                }
            }
        }
        joints.push(joint);
    }
    Ok((joints, overlap_violations))
}

/// Depth-`m` Markov approximation of `src`.
pub fn markov_approximation(src: &MeasureSource, depth: usize) -> Result<SuperstateSystem> {
    let spec = *src.spec();
    let sup = support(src, depth)?;
    let (joints, overlap_violations) = superstate_joints(src, &sup)?;
    let labels = sup
        .patterns
        .iter()
        .map(|p| pattern_label(p, src.states()))
        .collect();
    let inner = from_pair_marginals(spec, labels, &sup.pi, &joints, USER_TOL)?;
    let report = validate(&inner, USER_TOL);
    Ok(SuperstateSystem {
        base: spec,
        depth,
        base_states: src.states().to_vec(),
        patterns: sup.patterns,
        inner,
        report,
        overlap_violations,
    })
}

/// The source's own single-site and pair statistics over depth-`m`
/// patterns, indexed like the approximation's superstates.
pub fn source_superstate_stats(src: &MeasureSource, depth: usize) -> Result<PairStats> {
    let sup = support(src, depth)?;
    let (joints, _) = superstate_joints(src, &sup)?;
    Ok(PairStats {
        num_states: sup.pi.len(),
        pi: sup.pi,
        joints: joints
            .into_iter()
            .map(|j| j.into_iter().flatten().collect())
            .collect(),
    })
}

/// `f` of the depth-`m` approximations for `m = 0..=m_max`; each equals
/// `F(mu, alpha^m)`.
pub fn approximation_sequence(src: &MeasureSource, m_max: usize) -> Result<Vec<(usize, f64)>> {
    (0..=m_max)
        .map(|m| Ok((m, f_markov(&markov_approximation(src, m)?.inner)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{coarsen, d1};
    use crate::transition::{cyclic_system, flip_system, wsf_system};

    #[test]
    fn depth_zero_reproduces_markov_system() {
        let ts = wsf_system(2).unwrap();
        let approx = markov_approximation(&MeasureSource::Markov(ts.clone()), 0).unwrap();
        assert!(approx.report.is_empty());
        assert_eq!(approx.inner.states(), ts.states());
        for (a, b) in approx.inner.matrices().iter().zip(ts.matrices()) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn depth_one_fixed_point() {
        let src = MeasureSource::Markov(flip_system(GroupSpec::group(2), 0.3).unwrap());
        let approx = markov_approximation(&src, 1).unwrap();
        assert_eq!(approx.inner.num_states(), 32);
        assert_eq!(approx.overlap_violations, 0);
        assert!(approx.report.is_empty());
        let stats = source_superstate_stats(&src, 1).unwrap();
        assert!(d1(&approx.inner.pair_stats(), &stats) < 1e-12);
        let again = markov_approximation(&MeasureSource::Markov(approx.inner.clone()), 0).unwrap();
        assert!(d1(&again.inner.pair_stats(), &approx.inner.pair_stats()) < 1e-12);
    }

    #[test]
    fn labels() {
        let states: Vec<String> = vec!["0".into(), "1".into()];
        assert_eq!(pattern_label(&[0, 1, 1], &states), "011");
        let long: Vec<String> = vec!["(0,1)".into(), "x".into()];
        assert_eq!(pattern_label(&[0, 1], &long), "(0,1).x");
    }

    #[test]
    fn coarsened_sequence_is_monotone() {
        let ts = cyclic_system(GroupSpec::group(2), 3, 0.2).unwrap();
        let src = coarsen(&ts, &["0".into(), "0".into(), "1".into()]).unwrap();
        let seq = approximation_sequence(&src, 1).unwrap();
        assert!(seq[1].1 < seq[0].1);
    }
}
