//! Shannon entropies of finite distributions and the F functionals.
//!
//! All values are in nats.

use crate::error::{Error, Result};
use crate::freegroup::{Domain, Generator};
use crate::measure::{MeasureSource, PatternCodec};
use crate::transition::{ensure_valid, TransitionSystem, USER_TOL};

/// Guard on the configurations of the coordinate set used by F*.
pub const F_STAR_LIMIT: u64 = 1 << 24;

/// `p ln p` with `0 ln 0 = 0`.
#[inline]
pub fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn check_distribution(dist: &[f64]) -> Result<()> {
    let mut total = Accumulator::default();
    for (index, &value) in dist.iter().enumerate() {
        if value < 0.0 || value.is_nan() {
            return Err(Error::NegativeProbability { index, value });
        }
        total.add(value);
    }
    if (total.value() - 1.0).abs() > USER_TOL {
        return Err(Error::NotNormalized(total.value()));
    }
    Ok(())
}

/// `-sum p ln p`.
pub fn shannon(dist: &[f64]) -> Result<f64> {
    check_distribution(dist)?;
    let mut acc = Accumulator::default();
    for &p in dist {
        acc.add(-plogp(p));
    }
    Ok(acc.value())
}

/// `H(A | B)` for a joint law with rows indexed by `A` and columns by `B`.
pub fn conditional_entropy(joint: &[Vec<f64>]) -> Result<f64> {
    let cols = joint.first().map_or(0, Vec::len);
    if joint.iter().any(|r| r.len() != cols) {
        return Err(Error::Structural(
            "joint rows have different lengths".into(),
        ));
    }
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    let h_joint = shannon(&flat)?;
    let b: Vec<f64> = (0..cols)
        .map(|j| joint.iter().map(|r| r[j]).sum())
        .collect();
    Ok(h_joint - shannon(&b)?)
}

/// `-eps ln eps - (1-eps) ln(1-eps)`.
pub fn binary_entropy(eps: f64) -> f64 {
    -plogp(eps) - plogp(1.0 - eps)
}

/// Entropy terms of `F(alpha^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub n: usize,
    pub h_ball: f64,
    /// `H(alpha^n v T_{s_i}^{-1} alpha^n)` for each positive generator.
    pub h_pairs: Vec<f64>,
    pub big_f: f64,
    pub big_f_star: Option<f64>,
}

impl EntropyReport {
    pub fn rank(&self) -> usize {
        self.h_pairs.len()
    }

    /// `(1 - 2r) H_ball + sum of pair entropies`, recomputed from the fields.
    pub fn recompute_f(&self) -> f64 {
        let r = self.rank() as f64;
        (1.0 - 2.0 * r) * self.h_ball + self.h_pairs.iter().sum::<f64>()
    }

    pub fn csv_header(rank: usize) -> String {
        let mut cols = vec!["n".to_string(), "H_ball".to_string()];
        cols.extend((1..=rank).map(|i| format!("H_pair_s{i}")));
        cols.push("F".into());
        cols.push("F_star".into());
        cols.join(",")
    }

    /// One CSV row; entropies are multiplied by `scale` (1 for nats).
    pub fn csv_row(&self, scale: f64) -> String {
        let mut cols = vec![self.n.to_string(), fmt_value(self.h_ball * scale)];
        cols.extend(self.h_pairs.iter().map(|h| fmt_value(h * scale)));
        cols.push(fmt_value(self.big_f * scale));
        cols.push(
            self.big_f_star
                .map_or(String::new(), |v| fmt_value(v * scale)),
        );
        cols.join(",")
    }
}

pub(crate) fn fmt_value(x: f64) -> String {
    format!("{x:.12}")
}

/// Coordinates of `alpha^n v T_s^{-1} alpha^n`: `B(e,n) u B(e,n) s`.
pub fn pair_domain(src: &MeasureSource, n: usize, s: Generator) -> Result<Domain> {
    let ball = Domain::ball(src.spec(), n);
    Ok(ball.union(&ball.right_translate(s, src.spec())?))
}

fn require_radius(src: &MeasureSource, needed: usize) -> Result<()> {
    match src.max_radius() {
        Some(r) if r < needed => Err(Error::Capability(format!(
            "source describes balls up to radius {r}, radius {needed} needed"
        ))),
        _ => Ok(()),
    }
}

/// `F(mu, alpha^n) = (1 - 2r) H(alpha^n) + sum_i H(alpha^n v T_{s_i}^{-1} alpha^n)`.
pub fn big_f(src: &MeasureSource, n: usize) -> Result<EntropyReport> {
    let spec = *src.spec();
    require_radius(src, n + 1)?;
    let h_ball = src.entropy(&Domain::ball(&spec, n))?;
    let h_pairs = spec
        .positive_generators()
        .into_iter()
        .map(|s| src.entropy(&pair_domain(src, n, s)?))
        .collect::<Result<Vec<_>>>()?;
    let mut report = EntropyReport {
        n,
        h_ball,
        h_pairs,
        big_f: 0.0,
        big_f_star: None,
    };
    report.big_f = report.recompute_f();
    Ok(report)
}

/// `F(alpha^0), ..., F(alpha^{n_max})`. For non-Markov sources the last
/// entry is only an upper bound on f.
pub fn f_sequence(src: &MeasureSource, n_max: usize) -> Result<Vec<EntropyReport>> {
    (0..=n_max).map(|n| big_f(src, n)).collect()
}

/// Truncated `F*(alpha^n) = (1 - r) H(alpha^n) + sum_i h_m(T_{s_i}, alpha^n)`
/// with `h_m(T_s, beta) = H(T_s^{-m} beta | v_{k<m} T_s^{-k} beta)`.
pub fn big_f_star(src: &MeasureSource, n: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("F* truncation must be at least 1".into()));
    }
    let spec = *src.spec();
    let ball = Domain::ball(&spec, n);
    let mut terms = Vec::with_capacity(spec.rank());
    for s in spec.positive_generators() {
        let mut chains = vec![ball.clone()];
        let mut shifted = ball.clone();
        for _ in 0..m {
            shifted = shifted.right_translate(s, &spec)?;
            let next = chains.last().unwrap().union(&shifted);
            chains.push(next);
        }
        let widest = chains.last().unwrap();
        let count = PatternCodec::new(src.num_states(), widest.len())?.count()?;
        if count > F_STAR_LIMIT {
            return Err(Error::Capability(format!(
                "F* over {} coordinates needs {count} configurations (limit {F_STAR_LIMIT})",
                widest.len()
            )));
        }
        require_radius(src, widest.max_length())?;
        terms.push(src.entropy(widest)? - src.entropy(&chains[m - 1])?);
    }
    let r = spec.rank() as f64;
    Ok((1.0 - r) * src.entropy(&ball)? + terms.iter().sum::<f64>())
}

/// Closed-form f of the Markov measure, without validating the system:
/// `(2r - 1) sum pi ln pi - sum_{s in S+} sum_{ij} pi_i P^s_ij ln(pi_i P^s_ij)`.
pub fn closed_form_f(ts: &TransitionSystem) -> f64 {
    let spec = ts.spec();
    let r = spec.rank() as f64;
    let mut acc = Accumulator::default();
    for &p in ts.pi() {
        acc.add((2.0 * r - 1.0) * plogp(p));
    }
    for s in spec.positive_generators() {
        let m = ts.matrix(s);
        for (i, &p) in ts.pi().iter().enumerate() {
            for &q in m.row(i) {
                acc.add(-plogp(p * q));
            }
        }
    }
    acc.value()
}

/// f-invariant of an invariant transition system; refuses invalid systems.
pub fn f_markov(ts: &TransitionSystem) -> Result<f64> {
    ensure_valid(ts, USER_TOL)?;
    Ok(closed_form_f(ts))
}
