//! Transition systems: a probability vector `pi` and one stochastic matrix
//! per generator. A system is invariant when `pi P^s = pi` for every
//! generator and, for groups, `pi_i P^{s^-1}_{ij} = pi_j P^s_{ji}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::{Generator, GroupKind, GroupSpec};

/// Tolerance used for user-supplied data.
pub const USER_TOL: f64 = 1e-9;
/// Tolerance used for the built-in constructors.
pub const BUILTIN_TOL: f64 = 1e-12;

/// A square row-major matrix intended to be stochastic.
///
/// Construction does not enforce the stochastic invariants so that files
/// with violations can still be loaded and reported on by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Structural(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(StochasticMatrix { size, entries })
    }

    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                entries.push(f(i, j));
            }
        }
        StochasticMatrix { size, entries }
    }

    pub fn identity(size: usize) -> Self {
        Self::from_fn(size, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }

    /// `v P`.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * self.get(i, j);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &StochasticMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// States, stationary vector and one matrix per generator of `spec`,
/// stored in the order of [`GroupSpec::generators`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSystem {
    spec: GroupSpec,
    states: Vec<String>,
    pi: Vec<f64>,
    matrices: Vec<StochasticMatrix>,
}

impl TransitionSystem {
    /// Checks dimensions only; use [`validate`] for the numeric conditions.
    pub fn new(
        spec: GroupSpec,
        states: Vec<String>,
        pi: Vec<f64>,
        matrices: Vec<StochasticMatrix>,
    ) -> Result<Self> {
        let k = states.len();
        if k == 0 {
            return Err(Error::Structural("empty state space".into()));
        }
        if pi.len() != k {
            return Err(Error::Structural(format!(
                "pi has {} entries for {k} states",
                pi.len()
            )));
        }
        if matrices.len() != spec.num_generators() {
            return Err(Error::Structural(format!(
                "{} matrices supplied, the group has {} generators",
                matrices.len(),
                spec.num_generators()
            )));
        }
        for (m, s) in matrices.iter().zip(spec.generators()) {
            if m.size() != k {
                return Err(Error::Structural(format!(
                    "matrix for {} is {}x{}, expected {k}x{k}",
                    s.file_key(),
                    m.size(),
                    m.size()
                )));
            }
        }
        Ok(TransitionSystem {
            spec,
            states,
            pi,
            matrices,
        })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn matrices(&self) -> &[StochasticMatrix] {
        &self.matrices
    }

    /// Matrix `P^s`. Panics if `s` is not a generator of `self.spec()`.
    pub fn matrix(&self, s: Generator) -> &StochasticMatrix {
        let slot = self
            .spec
            .generator_slot(s)
            .expect("generator outside the system's group");
        &self.matrices[slot]
    }

    pub fn with_pi(&self, pi: Vec<f64>) -> Result<Self> {
        Self::new(self.spec, self.states.clone(), pi, self.matrices.clone())
    }

    pub fn with_states(mut self, states: Vec<String>) -> Result<Self> {
        if states.len() != self.states.len() {
            return Err(Error::Structural(
                "relabelling changes the state count".into(),
            ));
        }
        self.states = states;
        Ok(self)
    }

    /// Exact single-site and generator-pair statistics.
    pub fn pair_stats(&self) -> PairStats {
        let k = self.num_states();
        let joints = self
            .matrices
            .iter()
            .map(|m| {
                let mut j = vec![0.0; k * k];
                for a in 0..k {
                    for b in 0..k {
                        j[a * k + b] = self.pi[a] * m.get(a, b);
                    }
                }
                j
            })
            .collect();
        PairStats {
            num_states: k,
            pi: self.pi.clone(),
            joints,
        }
    }
}

/// `pi` and, for each generator `s`, the joint law of `(x(e), x(s))`
/// stored row-major as a `K x K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub num_states: usize,
    pub pi: Vec<f64>,
    pub joints: Vec<Vec<f64>>,
}

impl PairStats {
    pub fn joint(&self, slot: usize, i: usize, j: usize) -> f64 {
        self.joints[slot][i * self.num_states + j]
    }
}

/// Which invariant a [`Violation`] refers to.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    EntryRange {
        generator: Generator,
        i: usize,
        j: usize,
    },
    RowSum {
        generator: Generator,
        i: usize,
    },
    PiNegative {
        i: usize,
    },
    PiSum,
    SteadyState {
        generator: Generator,
        j: usize,
    },
    PairConsistency {
        generator: Generator,
        i: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.condition {
            Condition::EntryRange { generator, i, j } => write!(
                f,
                "entry P^{}[{i}][{j}] outside [0,1]",
                generator.file_key()
            )?,
            Condition::RowSum { generator, i } => {
                write!(f, "row {i} of P^{} does not sum to 1", generator.file_key())?
            }
            Condition::PiNegative { i } => write!(f, "pi[{i}] is negative")?,
            Condition::PiSum => write!(f, "pi does not sum to 1")?,
            Condition::SteadyState { generator, j } => write!(
                f,
                "steady state: (pi P^{})[{j}] != pi[{j}]",
                generator.file_key()
            )?,
            Condition::PairConsistency { generator, i, j } => write!(
                f,
                "pair consistency: pi[{i}] P^{}[{i}][{j}] != pi[{j}] P^{}[{j}][{i}]",
                generator.inv().file_key(),
                generator.file_key()
            )?,
        }
        write!(f, " (residual {:.3e})", self.residual)
    }
}

/// Violated conditions; empty when the system is invariant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.violations
            .iter()
            .map(|v| v.residual)
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(
                f,
                "ok: invariant transition system (tol {:e})",
                self.tolerance
            );
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the stochastic, stationarity and (group) pair-consistency
/// conditions. Dimension problems are caught by [`TransitionSystem::new`].
pub fn validate(ts: &TransitionSystem, tol: f64) -> ValidationReport {
    let k = ts.num_states();
    let mut violations = Vec::new();
    let mut push = |condition: Condition, residual: f64| {
        if residual > tol {
            violations.push(Violation {
                condition,
                residual,
            });
        }
    };

    for (i, &p) in ts.pi.iter().enumerate() {
        push(Condition::PiNegative { i }, (-p).max(0.0));
    }
    push(Condition::PiSum, (ts.pi.iter().sum::<f64>() - 1.0).abs());

    let gens = ts.spec.generators();
    for (m, &s) in ts.matrices.iter().zip(&gens) {
        for i in 0..k {
            for j in 0..k {
                let x = m.get(i, j);
                let out = if x < 0.0 { -x } else { (x - 1.0).max(0.0) };
                push(Condition::EntryRange { generator: s, i, j }, out);
            }
            push(
                Condition::RowSum { generator: s, i },
                (m.row(i).iter().sum::<f64>() - 1.0).abs(),
            );
        }
        let pip = m.left_apply(&ts.pi);
        for (j, (a, b)) in pip.iter().zip(&ts.pi).enumerate() {
            push(Condition::SteadyState { generator: s, j }, (a - b).abs());
        }
    }

    if ts.spec.is_group() {
        for &s in &gens {
            let p = ts.matrix(s);
            let q = ts.matrix(s.inv());
            for i in 0..k {
                for j in 0..k {
                    push(
                        Condition::PairConsistency { generator: s, i, j },
                        (ts.pi[i] * q.get(i, j) - ts.pi[j] * p.get(j, i)).abs(),
                    );
                }
            }
        }
    }

    ValidationReport {
        tolerance: tol,
        violations,
    }
}

/// Returns the system when it validates at `tol`, otherwise the report.
pub fn ensure_valid(ts: &TransitionSystem, tol: f64) -> Result<()> {
    let report = validate(ts, tol);
    if report.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSystem(report))
    }
}

fn numbered_states(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn same_matrix_for_all(spec: GroupSpec, m: StochasticMatrix) -> Vec<StochasticMatrix> {
    vec![m; spec.num_generators()]
}

/// Wired spanning forest chain on the rank-`r` free group. States are the
/// generators; state `s` at `g` means the forest edge leaves `g` towards `sg`.
pub fn wsf_system(rank: usize) -> Result<TransitionSystem> {
    if rank < 2 {
        return Err(Error::UnsupportedRank { rank, min: 2 });
    }
    let spec = GroupSpec::new(rank, GroupKind::Group)?;
    let gens = spec.generators();
    let n = gens.len();
    let d = (n - 1) as f64;
    let mats = gens
        .iter()
        .map(|&s| {
            let s_slot = spec.generator_slot(s).unwrap();
            let inv_slot = spec.generator_slot(s.inv()).unwrap();
            StochasticMatrix::from_fn(n, |u, v| {
                if u == s_slot {
                    if v == inv_slot {
                        0.0
                    } else {
                        1.0 / d
                    }
                } else if v == inv_slot {
                    1.0 / d
                } else {
                    (n as f64 - 2.0) / (d * d)
                }
            })
        })
        .collect();
    TransitionSystem::new(
        spec,
        gens.iter().map(|s| s.letter().to_string()).collect(),
        vec![1.0 / n as f64; n],
        mats,
    )
}

/// Perfect matching chain: state `s` at `g` forces state `s^-1` at `sg`.
pub fn matching_system(rank: usize) -> Result<TransitionSystem> {
    if rank < 2 {
        return Err(Error::UnsupportedRank { rank, min: 2 });
    }
    let spec = GroupSpec::new(rank, GroupKind::Group)?;
    let gens = spec.generators();
    let n = gens.len();
    let d = (n - 1) as f64;
    let mats = gens
        .iter()
        .map(|&s| {
            let s_slot = spec.generator_slot(s).unwrap();
            let inv_slot = spec.generator_slot(s.inv()).unwrap();
            StochasticMatrix::from_fn(n, |u, v| match (u == s_slot, v == inv_slot) {
                (true, true) => 1.0,
                (true, false) | (false, true) => 0.0,
                (false, false) => 1.0 / d,
            })
        })
        .collect();
    TransitionSystem::new(
        spec,
        gens.iter().map(|s| s.letter().to_string()).collect(),
        vec![1.0 / n as f64; n],
        mats,
    )
}

/// Two states, uniform `pi`, every `P^s = [[eps, 1-eps], [1-eps, eps]]`.
pub fn flip_system(spec: GroupSpec, eps: f64) -> Result<TransitionSystem> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} is outside [0, 1]")));
    }
    let m = StochasticMatrix::from_rows(&[vec![eps, 1.0 - eps], vec![1.0 - eps, eps]])?;
    TransitionSystem::new(
        spec,
        numbered_states(2),
        vec![0.5, 0.5],
        same_matrix_for_all(spec, m),
    )
}

/// I.i.d. states with law `p`.
pub fn bernoulli_system(spec: GroupSpec, p: &[f64]) -> Result<TransitionSystem> {
    let k = p.len();
    let m = StochasticMatrix::from_fn(k, |_, j| p[j]);
    TransitionSystem::new(
        spec,
        numbered_states(k),
        p.to_vec(),
        same_matrix_for_all(spec, m),
    )
}

/// Deterministic action on `n` points with uniform measure. Every generator
/// of `spec` needs an assignment; for groups `s^-1` must get the inverse
/// permutation of `s`.
pub fn permutation_system(
    spec: GroupSpec,
    n: usize,
    assignments: &BTreeMap<Generator, Vec<usize>>,
) -> Result<TransitionSystem> {
    if n == 0 {
        return Err(Error::InvalidPermutation("no points".into()));
    }
    let mut mats = Vec::new();
    for s in spec.generators() {
        let perm = assignments.get(&s).ok_or_else(|| {
            Error::InvalidPermutation(format!("no permutation for generator {}", s.file_key()))
        })?;
        check_permutation(perm, n)?;
        if spec.is_group() {
            if let Some(inv) = assignments.get(&s.inv()) {
                if (0..n).any(|i| inv.get(perm[i]) != Some(&i)) {
                    return Err(Error::InvalidPermutation(format!(
                        "permutation for {} is not the inverse of {}",
                        s.inv().file_key(),
                        s.file_key()
                    )));
                }
            }
        }
        mats.push(StochasticMatrix::from_fn(n, |i, j| {
            if perm[i] == j {
                1.0
            } else {
                0.0
            }
        }));
    }
    TransitionSystem::new(spec, numbered_states(n), vec![1.0 / n as f64; n], mats)
}

/// Like [`permutation_system`], given permutations of the positive
/// generators only; inverse generators get the inverse permutations.
pub fn permutation_system_from_positive(
    spec: GroupSpec,
    n: usize,
    perms: &[Vec<usize>],
) -> Result<TransitionSystem> {
    if perms.len() != spec.rank() {
        return Err(Error::InvalidPermutation(format!(
            "{} permutations for rank {}",
            perms.len(),
            spec.rank()
        )));
    }
    let mut map = BTreeMap::new();
    for (i, perm) in perms.iter().enumerate() {
        check_permutation(perm, n)?;
        map.insert(Generator::positive(i), perm.clone());
        if spec.is_group() {
            let mut inv = vec![0; n];
            for (x, &y) in perm.iter().enumerate() {
                inv[y] = x;
            }
            map.insert(Generator::negative(i), inv);
        }
    }
    permutation_system(spec, n, &map)
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "{} images for {n} points",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &y in perm {
        if y >= n || seen[y] {
            return Err(Error::InvalidPermutation(format!(
                "{perm:?} is not a bijection"
            )));
        }
        seen[y] = true;
    }
    Ok(())
}

/// `n` states on a cycle, uniform `pi`. Each positive generator stays put
/// with probability `stay` and otherwise steps `i -> i+1`; inverse
/// generators use the transposed matrix.
pub fn cyclic_system(spec: GroupSpec, n: usize, stay: f64) -> Result<TransitionSystem> {
    if n == 0 {
        return Err(Error::Structural("empty cycle".into()));
    }
    if !(0.0..=1.0).contains(&stay) {
        return Err(Error::Domain(format!("stay = {stay} is outside [0, 1]")));
    }
    let forward = StochasticMatrix::from_fn(n, |i, j| {
        let mut p = 0.0;
        if i == j {
            p += stay;
        }
        if (i + 1) % n == j {
            p += 1.0 - stay;
        }
        p
    });
    let backward = StochasticMatrix::from_fn(n, |i, j| forward.get(j, i));
    let mats = spec
        .generators()
        .iter()
        .map(|s| {
            if s.is_inverse() {
                backward.clone()
            } else {
                forward.clone()
            }
        })
        .collect();
    TransitionSystem::new(spec, numbered_states(n), vec![1.0 / n as f64; n], mats)
}

/// Independent product: states `K1 x K2`, `pi1 (x) pi2`, `P1^s (x) P2^s`.
pub fn product_system(a: &TransitionSystem, b: &TransitionSystem) -> Result<TransitionSystem> {
    if a.spec != b.spec {
        return Err(Error::MismatchedSpec);
    }
    let (ka, kb) = (a.num_states(), b.num_states());
    let mut states = Vec::with_capacity(ka * kb);
    let mut pi = Vec::with_capacity(ka * kb);
    for i in 0..ka {
        for j in 0..kb {
            states.push(format!("({},{})", a.states[i], b.states[j]));
            pi.push(a.pi[i] * b.pi[j]);
        }
    }
    let mats = a
        .matrices
        .iter()
        .zip(&b.matrices)
        .map(|(ma, mb)| {
            StochasticMatrix::from_fn(ka * kb, |x, y| {
                ma.get(x / kb, y / kb) * mb.get(x % kb, y % kb)
            })
        })
        .collect();
    TransitionSystem::new(a.spec, states, pi, mats)
}

/// Builds `P^s_{ij} = J^s_{ij} / pi_i` from single-site and pair marginals.
/// States with zero mass are dropped.
pub fn from_pair_marginals(
    spec: GroupSpec,
    states: Vec<String>,
    pi: &[f64],
    joints: &[Vec<Vec<f64>>],
    tol: f64,
) -> Result<TransitionSystem> {
    let k = pi.len();
    if states.len() != k {
        return Err(Error::Structural(format!(
            "{} labels for {k} states",
            states.len()
        )));
    }
    if joints.len() != spec.num_generators() {
        return Err(Error::Structural(format!(
            "{} joints for {} generators",
            joints.len(),
            spec.num_generators()
        )));
    }
    let gens = spec.generators();
    for (joint, s) in joints.iter().zip(&gens) {
        if joint.len() != k || joint.iter().any(|row| row.len() != k) {
            return Err(Error::Structural(format!(
                "joint for {} is not {k}x{k}",
                s.file_key()
            )));
        }
        for (i, row) in joint.iter().enumerate() {
            if let Some(&x) = row.iter().find(|&&x| x < -tol) {
                return Err(Error::NegativeProbability { index: i, value: x });
            }
            let residual = (row.iter().sum::<f64>() - pi[i]).abs();
            if residual > tol {
                return Err(Error::InconsistentMarginals {
                    generator: s.file_key(),
                    state: i,
                    residual,
                });
            }
        }
    }
    let keep: Vec<usize> = (0..k).filter(|&i| pi[i] > 0.0).collect();
    let mats = joints
        .iter()
        .map(|joint| {
            StochasticMatrix::from_fn(keep.len(), |a, b| joint[keep[a]][keep[b]] / pi[keep[a]])
        })
        .collect();
    TransitionSystem::new(
        spec,
        keep.iter().map(|&i| states[i].clone()).collect(),
        keep.iter().map(|&i| pi[i]).collect(),
        mats,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupFile {
    rank: usize,
    kind: GroupKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    group: GroupFile,
    states: Vec<String>,
    pi: Vec<f64>,
    #[serde(rename = "P")]
    matrices: BTreeMap<String, Vec<Vec<f64>>>,
}

impl TransitionSystem {
    pub fn to_json(&self) -> String {
        let file = SystemFile {
            group: GroupFile {
                rank: self.spec.rank(),
                kind: self.spec.kind(),
            },
            states: self.states.clone(),
            pi: self.pi.clone(),
            matrices: self
                .spec
                .generators()
                .iter()
                .zip(&self.matrices)
                .map(|(s, m)| (s.file_key(), m.rows()))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let spec = GroupSpec::new(file.group.rank, file.group.kind)?;
        let mut by_gen: BTreeMap<Generator, Vec<Vec<f64>>> = BTreeMap::new();
        for (key, rows) in file.matrices {
            let s = Generator::from_file_key(&key)?;
            if spec.generator_slot(s).is_none() {
                return Err(Error::Format(format!("generator {key} not in the group")));
            }
            by_gen.insert(s, rows);
        }
        let mats = spec
            .generators()
            .iter()
            .map(|s| {
                let rows = by_gen
                    .get(s)
                    .ok_or_else(|| Error::Format(format!("missing matrix {}", s.file_key())))?;
                StochasticMatrix::from_rows(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        TransitionSystem::new(spec, file.states, file.pi, mats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> GroupSpec {
        GroupSpec::group(2)
    }

    #[test]
    fn builtins_validate() {
        for r in [2, 3] {
            assert!(validate(&wsf_system(r).unwrap(), BUILTIN_TOL).is_empty());
            assert!(validate(&matching_system(r).unwrap(), BUILTIN_TOL).is_empty());
        }
        for eps in [0.0, 0.1, 0.3, 0.5, 1.0] {
            assert!(validate(&flip_system(g2(), eps).unwrap(), BUILTIN_TOL).is_empty());
        }
        let bern = bernoulli_system(g2(), &[0.3, 0.7]).unwrap();
        assert!(validate(&bern, BUILTIN_TOL).is_empty());
        let cyc = cyclic_system(g2(), 3, 0.2).unwrap();
        assert!(validate(&cyc, BUILTIN_TOL).is_empty());
    }

    #[test]
    fn non_steady_pi_is_reported() {
        let ts = flip_system(g2(), 0.0)
            .unwrap()
            .with_pi(vec![0.6, 0.4])
            .unwrap();
        let report = validate(&ts, USER_TOL);
        let steady = report
            .violations
            .iter()
            .find(|v| matches!(v.condition, Condition::SteadyState { j: 0, .. }))
            .expect("steady-state violation");
        assert!((steady.residual - 0.2).abs() < 1e-12);
    }

    #[test]
    fn structural_errors() {
        let m = StochasticMatrix::identity(2);
        assert!(matches!(
            TransitionSystem::new(g2(), numbered_states(2), vec![1.0], vec![m.clone(); 4]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            TransitionSystem::new(g2(), numbered_states(2), vec![0.5, 0.5], vec![m; 3]),
            Err(Error::Structural(_))
        ));
        assert!(StochasticMatrix::from_rows(&[vec![1.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn example_matrices() {
        let m = matching_system(2).unwrap();
        let a = Generator::positive(0);
        let p = m.matrix(a);
        // states are a, A, b, B
        assert_eq!(p.row(0), &[0.0, 1.0, 0.0, 0.0]);
        let w = wsf_system(2).unwrap();
        assert_eq!(w.matrix(a).get(0, 1), 0.0);
        assert!((w.matrix(a).get(2, 3) - 2.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            wsf_system(1),
            Err(Error::UnsupportedRank { rank: 1, min: 2 })
        ));
        assert!(matches!(
            matching_system(1),
            Err(Error::UnsupportedRank { .. })
        ));
    }

    #[test]
    fn flip_half_is_bernoulli_uniform() {
        let f = flip_system(g2(), 0.5).unwrap();
        let b = bernoulli_system(g2(), &[0.5, 0.5]).unwrap();
        assert_eq!(f, b);
    }

    #[test]
    fn product_examples() {
        let a = bernoulli_system(g2(), &[0.3, 0.7]).unwrap();
        let b = bernoulli_system(g2(), &[0.5, 0.25, 0.25]).unwrap();
        let prod = product_system(&a, &b).unwrap();
        let direct_p: Vec<f64> = [0.3, 0.7]
            .iter()
            .flat_map(|x| [0.5, 0.25, 0.25].map(|y| x * y))
            .collect();
        let direct = bernoulli_system(g2(), &direct_p).unwrap();
        for (m1, m2) in prod.matrices().iter().zip(direct.matrices()) {
            assert!(m1.max_abs_diff(m2) < 1e-15);
        }
        let one = bernoulli_system(g2(), &[1.0]).unwrap();
        let w = wsf_system(2).unwrap();
        let wp = product_system(&w, &one).unwrap();
        assert_eq!(wp.pi(), w.pi());
        assert_eq!(wp.matrices(), w.matrices());
        assert!(matches!(
            product_system(&w, &bernoulli_system(GroupSpec::group(3), &[1.0]).unwrap()),
            Err(Error::MismatchedSpec)
        ));
        let fp = product_system(
            &flip_system(g2(), 0.2).unwrap(),
            &flip_system(g2(), 0.7).unwrap(),
        )
        .unwrap();
        assert!(validate(&fp, BUILTIN_TOL).is_empty());
    }

    #[test]
    fn permutations() {
        let single = permutation_system_from_positive(g2(), 1, &[vec![0], vec![0]]).unwrap();
        assert!(validate(&single, BUILTIN_TOL).is_empty());
        let ts = permutation_system_from_positive(g2(), 4, &[vec![1, 2, 3, 0], vec![3, 1, 0, 2]])
            .unwrap();
        assert!(validate(&ts, BUILTIN_TOL).is_empty());
        assert!(matches!(
            permutation_system_from_positive(g2(), 3, &[vec![0, 0, 1], vec![0, 1, 2]]),
            Err(Error::InvalidPermutation(_))
        ));
        let mut map = BTreeMap::new();
        map.insert(Generator::positive(0), vec![1, 2, 0]);
        map.insert(Generator::negative(0), vec![1, 2, 0]);
        map.insert(Generator::positive(1), vec![0, 1, 2]);
        map.insert(Generator::negative(1), vec![0, 1, 2]);
        assert!(matches!(
            permutation_system(g2(), 3, &map),
            Err(Error::InvalidPermutation(_))
        ));
    }

    #[test]
    fn pair_marginal_roundtrip() {
        let ts = flip_system(g2(), 0.3).unwrap();
        let stats = ts.pair_stats();
        let joints: Vec<Vec<Vec<f64>>> = stats
            .joints
            .iter()
            .map(|j| j.chunks(2).map(|r| r.to_vec()).collect())
            .collect();
        let back =
            from_pair_marginals(g2(), ts.states().to_vec(), ts.pi(), &joints, USER_TOL).unwrap();
        for (m1, m2) in back.matrices().iter().zip(ts.matrices()) {
            assert!(m1.max_abs_diff(m2) < 1e-15);
        }
    }

    #[test]
    fn diagonal_joints_give_identity_chain() {
        let pi = [0.2, 0.0, 0.8];
        let diag: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { pi[i] } else { 0.0 }).collect())
            .collect();
        let ts =
            from_pair_marginals(g2(), numbered_states(3), &pi, &vec![diag; 4], USER_TOL).unwrap();
        assert_eq!(ts.states(), ["0", "2"]);
        for m in ts.matrices() {
            assert_eq!(m, &StochasticMatrix::identity(2));
        }
        let bad = vec![vec![vec![0.5, 0.0], vec![0.0, 0.4]]; 4];
        assert!(matches!(
            from_pair_marginals(g2(), numbered_states(2), &[0.5, 0.5], &bad, USER_TOL),
            Err(Error::InconsistentMarginals { .. })
        ));
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let ts = wsf_system(2).unwrap();
        let text = ts.to_json();
        assert!(text.contains("\"s1_inv\""));
        assert_eq!(TransitionSystem::from_json(&text).unwrap(), ts);
        let semi = flip_system(GroupSpec::semigroup(2), 0.3).unwrap();
        let text = semi.to_json();
        assert!(!text.contains("_inv"));
        assert_eq!(TransitionSystem::from_json(&text).unwrap(), semi);
        let bad = text.replace("\"s2\"", "\"s2_inv\"");
        assert!(matches!(
            TransitionSystem::from_json(&bad),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            TransitionSystem::from_json("{\"group\": 3}"),
            Err(Error::Json(_))
        ));
    }
}
