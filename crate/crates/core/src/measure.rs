//! Finite-dimensional distributions of tree-indexed Markov measures and of
//! measures derived from them.
//!
//! Patterns over a domain are encoded in mixed radix with the first domain
//! word (in shortlex order) as the most significant digit.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{plogp, Accumulator};
use crate::error::{Error, Result};
use crate::freegroup::{self, Domain, Generator, GroupSpec, Word};
use crate::transition::{PairStats, TransitionSystem};

/// Above this many configurations marginals are stored sparsely.
pub const DENSE_LIMIT: u64 = 1 << 20;
/// Maximum number of nonzero entries in a sparse marginal.
pub const SPARSE_LIMIT: u64 = 1 << 22;
/// Maximum number of nonzero configurations visited by streaming entropy.
pub const STREAM_LIMIT: u64 = 1 << 27;
/// Maximum number of coarse patterns enumerated for a coarsened marginal.
pub const COARSE_LIMIT: u64 = 1 << 22;

/// Mixed-radix codec for patterns of a fixed length over `k` states.
#[derive(Debug, Clone, Copy)]
pub struct PatternCodec {
    pub states: usize,
    pub len: usize,
}

impl PatternCodec {
    pub fn new(states: usize, len: usize) -> Result<Self> {
        let codec = PatternCodec { states, len };
        codec.count()?;
        Ok(codec)
    }

    pub fn count(&self) -> Result<u64> {
        (self.states as u64)
            .checked_pow(self.len as u32)
            .filter(|&c| c < (1u64 << 62))
            .ok_or_else(|| {
                Error::Capability(format!(
                    "{}^{} configurations cannot be indexed",
                    self.states, self.len
                ))
            })
    }

    pub fn encode(&self, values: &[usize]) -> u64 {
        values
            .iter()
            .fold(0u64, |acc, &v| acc * self.states as u64 + v as u64)
    }

    pub fn decode_into(&self, mut index: u64, out: &mut [usize]) {
        let k = self.states as u64;
        for slot in out.iter_mut().rev() {
            *slot = (index % k) as usize;
            index /= k;
        }
    }

    pub fn decode(&self, index: u64) -> Vec<usize> {
        let mut out = vec![0; self.len];
        self.decode_into(index, &mut out);
        out
    }
}

/// An assignment of states to the words of a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub domain: Domain,
    pub values: Vec<usize>,
}

impl Pattern {
    pub fn new(domain: Domain, values: Vec<usize>) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(Error::Structural(format!(
                "{} values for a domain of {} words",
                values.len(),
                domain.len()
            )));
        }
        Ok(Pattern { domain, values })
    }

    pub fn value_at(&self, w: &Word) -> Option<usize> {
        self.domain.index_of(w).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse(BTreeMap<u64, f64>),
}

/// Exact or empirical law of the pattern on a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMarginal {
    domain: Domain,
    states: Vec<String>,
    storage: Storage,
}

impl BallMarginal {
    fn dense(domain: Domain, states: Vec<String>, probs: Vec<f64>) -> Self {
        BallMarginal {
            domain,
            states,
            storage: Storage::Dense(probs),
        }
    }

    fn from_sparse(domain: Domain, states: Vec<String>, map: BTreeMap<u64, f64>) -> Result<Self> {
        let codec = PatternCodec::new(states.len(), domain.len())?;
        if codec.count()? <= DENSE_LIMIT {
            let mut probs = vec![0.0; codec.count()? as usize];
            for (i, p) in map {
                probs[i as usize] = p;
            }
            Ok(Self::dense(domain, states, probs))
        } else {
            Ok(BallMarginal {
                domain,
                states,
                storage: Storage::Sparse(map),
            })
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn codec(&self) -> PatternCodec {
        PatternCodec {
            states: self.states.len(),
            len: self.domain.len(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn prob_index(&self, index: u64) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v.get(index as usize).copied().unwrap_or(0.0),
            Storage::Sparse(m) => m.get(&index).copied().unwrap_or(0.0),
        }
    }

    /// Probability of a pattern given in domain order.
    pub fn prob(&self, values: &[usize]) -> f64 {
        self.prob_index(self.codec().encode(values))
    }

    /// `(index, probability)` for every configuration with nonzero mass.
    pub fn nonzero(&self) -> Vec<(u64, f64)> {
        match &self.storage {
            Storage::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 0.0)
                .map(|(i, &p)| (i as u64, p))
                .collect(),
            Storage::Sparse(m) => m.iter().map(|(&i, &p)| (i, p)).collect(),
        }
    }

    /// Dense probability vector; errors above [`DENSE_LIMIT`].
    pub fn dense_probs(&self) -> Result<Vec<f64>> {
        match &self.storage {
            Storage::Dense(v) => Ok(v.clone()),
            Storage::Sparse(_) => Err(Error::Capability(format!(
                "marginal over {} words is too large to densify",
                self.domain.len()
            ))),
        }
    }

    pub fn total(&self) -> f64 {
        let mut acc = Accumulator::default();
        for (_, p) in self.nonzero() {
            acc.add(p);
        }
        acc.value()
    }

    pub fn entropy(&self) -> f64 {
        let mut acc = Accumulator::default();
        for (_, p) in self.nonzero() {
            acc.add(-plogp(p));
        }
        acc.value()
    }

    /// Law of the restriction to `sub`, which must be a subset of the domain.
    pub fn marginalize(&self, sub: &Domain) -> Result<BallMarginal> {
        let positions = sub
            .iter()
            .map(|w| {
                self.domain
                    .index_of(w)
                    .ok_or_else(|| Error::Domain(format!("{w} is not in the marginal's domain")))
            })
            .collect::<Result<Vec<_>>>()?;
        if positions.len() == self.domain.len() {
            return Ok(self.clone());
        }
        let codec = self.codec();
        let sub_codec = PatternCodec::new(self.states.len(), sub.len())?;
        let mut digits = vec![0; codec.len];
        let mut picked = vec![0; sub_codec.len];
        let mut project = |index: u64| {
            codec.decode_into(index, &mut digits);
            for (dst, &p) in picked.iter_mut().zip(&positions) {
                *dst = digits[p];
            }
            sub_codec.encode(&picked)
        };
        if sub_codec.count()? <= DENSE_LIMIT {
            let mut out = vec![0.0; sub_codec.count()? as usize];
            for (i, p) in self.nonzero() {
                out[project(i) as usize] += p;
            }
            Ok(Self::dense(sub.clone(), self.states.clone(), out))
        } else {
            let mut out = BTreeMap::new();
            for (i, p) in self.nonzero() {
                *out.entry(project(i)).or_insert(0.0) += p;
            }
            Self::from_sparse(sub.clone(), self.states.clone(), out)
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct MarginalFile<'a> {
            domain: Vec<String>,
            states: &'a [String],
            probs: Vec<Vec<serde_json::Value>>,
        }
        let codec = self.codec();
        let probs = self
            .nonzero()
            .into_iter()
            .map(|(i, p)| {
                let mut row: Vec<serde_json::Value> =
                    codec.decode(i).into_iter().map(|d| d.into()).collect();
                row.push(p.into());
                row
            })
            .collect();
        let file = MarginalFile {
            domain: self.domain.iter().map(|w| w.to_string()).collect(),
            states: &self.states,
            probs,
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

/// A rooted tree over a left-connected domain containing the identity,
/// listed in shortlex order (parents precede children).
#[derive(Debug, Clone)]
struct TreeLayout {
    parent: Vec<usize>,
    slot: Vec<usize>,
}

impl TreeLayout {
    fn new(hull: &Domain, spec: &GroupSpec) -> Result<Self> {
        let words = hull.words();
        if words.first().map(Word::is_identity) != Some(true) {
            return Err(Error::Domain("domain does not contain the identity".into()));
        }
        let mut parent = vec![usize::MAX];
        let mut slot = vec![usize::MAX];
        for w in &words[1..] {
            let p = w
                .parent()
                .and_then(|p| hull.index_of(&p))
                .ok_or_else(|| Error::Domain(format!("domain is not left-connected at {w}")))?;
            parent.push(p);
            slot.push(
                spec.generator_slot(w.first_letter().unwrap())
                    .ok_or_else(|| Error::InvalidLetter(w.to_string()))?,
            );
        }
        Ok(TreeLayout { parent, slot })
    }

    fn len(&self) -> usize {
        self.parent.len()
    }
}

fn check_vertex(ts: &TransitionSystem, w: &Word) -> Result<()> {
    let spec = ts.spec();
    for &s in w.letters() {
        if spec.generator_slot(s).is_none() {
            return Err(Error::InvalidLetter(format!(
                "{w} is not a word of the system's group"
            )));
        }
    }
    Ok(())
}

/// `mu(C) = pi_{z(e)} * prod_{edges} P^s_{z(tail), z(head)}` for a pattern
/// on a left-connected domain containing the identity.
pub fn cylinder_prob(ts: &TransitionSystem, pattern: &Pattern) -> Result<f64> {
    if !pattern.domain.contains(&Word::identity()) {
        return Err(Error::Domain(
            "cylinder domain must contain the identity; marginalize over its tree hull".into(),
        ));
    }
    if !freegroup::is_left_connected(&pattern.domain) {
        return Err(Error::Domain(
            "cylinder domain is not left-connected; marginalize over its tree hull".into(),
        ));
    }
    for w in &pattern.domain {
        check_vertex(ts, w)?;
    }
    let k = ts.num_states();
    if let Some(&bad) = pattern.values.iter().find(|&&v| v >= k) {
        return Err(Error::Structural(format!("state index {bad} out of range")));
    }
    let layout = TreeLayout::new(&pattern.domain, ts.spec())?;
    let z = &pattern.values;
    let mut p = ts.pi()[z[0]];
    for v in 1..layout.len() {
        p *= ts.matrices()[layout.slot[v]].get(z[layout.parent[v]], z[v]);
    }
    Ok(p)
}

fn markov_dense(ts: &TransitionSystem, layout: &TreeLayout) -> Vec<f64> {
    let k = ts.num_states();
    let mut probs = ts.pi().to_vec();
    for v in 1..layout.len() {
        let m = &ts.matrices()[layout.slot[v]];
        let stride = (k as u64).pow((v - 1 - layout.parent[v]) as u32) as usize;
        let mut next = vec![0.0; probs.len() * k];
        for (idx, &base) in probs.iter().enumerate() {
            if base == 0.0 {
                continue;
            }
            let x = (idx / stride) % k;
            let row = m.row(x);
            let out = &mut next[idx * k..(idx + 1) * k];
            for (o, &q) in out.iter_mut().zip(row) {
                *o = base * q;
            }
        }
        probs = next;
    }
    probs
}

/// Depth-first enumeration of nonzero configurations on a tree layout,
/// split into independent prefixes for parallel evaluation.
struct TreeWalk<'a> {
    ts: &'a TransitionSystem,
    layout: &'a TreeLayout,
}

impl<'a> TreeWalk<'a> {
    fn prefixes(&self, depth: usize) -> Vec<(Vec<usize>, f64)> {
        let k = self.ts.num_states();
        let mut out: Vec<(Vec<usize>, f64)> = (0..k)
            .filter(|&x| self.ts.pi()[x] > 0.0)
            .map(|x| (vec![x], self.ts.pi()[x]))
            .collect();
        for v in 1..depth.min(self.layout.len()) {
            let m = &self.ts.matrices()[self.layout.slot[v]];
            let mut next = Vec::with_capacity(out.len() * k);
            for (digits, p) in out {
                let row = m.row(digits[self.layout.parent[v]]);
                for (y, &q) in row.iter().enumerate() {
                    if q > 0.0 {
                        let mut d = digits.clone();
                        d.push(y);
                        next.push((d, p * q));
                    }
                }
            }
            out = next;
        }
        out
    }

    fn walk<F: FnMut(&[usize], f64)>(&self, digits: &mut Vec<usize>, prob: f64, leaf: &mut F) {
        let v = digits.len();
        if v == self.layout.len() {
            leaf(digits, prob);
            return;
        }
        let row = self.ts.matrices()[self.layout.slot[v]].row(digits[self.layout.parent[v]]);
        for (y, &q) in row.iter().enumerate() {
            if q > 0.0 {
                digits.push(y);
                self.walk(digits, prob * q, leaf);
                digits.pop();
            }
        }
    }

    fn split_depth(&self) -> usize {
        let k = self.ts.num_states().max(2);
        let mut depth = 1;
        let mut count = k;
        while count < 512 && depth < self.layout.len() {
            depth += 1;
            count *= k;
        }
        depth
    }

    /// Entropy of the law on the layout's vertices, without materializing it.
    fn entropy(&self, budget: u64) -> Result<f64> {
        let visited = AtomicU64::new(0);
        let partial: Vec<Option<f64>> = self
            .prefixes(self.split_depth())
            .into_par_iter()
            .map(|(mut digits, p)| {
                let mut acc = Accumulator::default();
                let mut count = 0u64;
                let mut over = false;
                self.walk(&mut digits, p, &mut |_, q| {
                    acc.add(-plogp(q));
                    count += 1;
                    if count & 0xffff == 0 && visited.fetch_add(0x10000, Ordering::Relaxed) > budget
                    {
                        over = true;
                    }
                });
                let total = visited.fetch_add(count & 0xffff, Ordering::Relaxed) + (count & 0xffff);
                if over || total > budget {
                    None
                } else {
                    Some(acc.value())
                }
            })
            .collect();
        let mut acc = Accumulator::default();
        for part in partial {
            acc.add(part.ok_or_else(|| {
                Error::Capability(format!(
                    "more than {budget} nonzero configurations to enumerate"
                ))
            })?);
        }
        Ok(acc.value())
    }

    fn sparse(&self, codec: PatternCodec, budget: u64) -> Result<BTreeMap<u64, f64>> {
        let mut out = BTreeMap::new();
        let mut over = false;
        for (mut digits, p) in self.prefixes(1) {
            self.walk(&mut digits, p, &mut |d, q| {
                if (out.len() as u64) < budget {
                    out.insert(codec.encode(d), q);
                } else {
                    over = true;
                }
            });
            if over {
                return Err(Error::Capability(format!(
                    "more than {budget} nonzero configurations; marginal too large"
                )));
            }
        }
        Ok(out)
    }
}

/// Exact marginal of the Markov measure on its tree hull, then restricted.
pub fn markov_marginal(ts: &TransitionSystem, domain: &Domain) -> Result<BallMarginal> {
    for w in domain {
        check_vertex(ts, w)?;
    }
    let hull = freegroup::tree_hull(domain);
    let layout = TreeLayout::new(&hull, ts.spec())?;
    let codec = PatternCodec::new(ts.num_states(), hull.len())?;
    let states = ts.states().to_vec();
    let full = if codec.count()? <= DENSE_LIMIT {
        BallMarginal::dense(hull, states, markov_dense(ts, &layout))
    } else {
        let map = TreeWalk {
            ts,
            layout: &layout,
        }
        .sparse(codec, SPARSE_LIMIT)?;
        BallMarginal::from_sparse(hull, states, map)?
    };
    full.marginalize(domain)
}

/// Entropy of the Markov measure's marginal on `domain`.
pub fn markov_entropy(ts: &TransitionSystem, domain: &Domain) -> Result<f64> {
    for w in domain {
        check_vertex(ts, w)?;
    }
    let hull = freegroup::tree_hull(domain);
    let codec = PatternCodec::new(ts.num_states(), hull.len())?;
    if hull == *domain && codec.count()? > DENSE_LIMIT {
        let layout = TreeLayout::new(&hull, ts.spec())?;
        return TreeWalk {
            ts,
            layout: &layout,
        }
        .entropy(STREAM_LIMIT);
    }
    Ok(markov_marginal(ts, domain)?.entropy())
}

/// Probability that the hidden chain's image under `map` matches `coarse`
/// on the constrained vertices (`None` = unconstrained), by sum-product.
fn coarse_cylinder(
    ts: &TransitionSystem,
    layout: &TreeLayout,
    map: &[usize],
    constraint: &[Option<usize>],
    beta: &mut [f64],
) -> f64 {
    let k = ts.num_states();
    let n = layout.len();
    for v in 0..n {
        for x in 0..k {
            beta[v * k + x] = match constraint[v] {
                Some(c) if map[x] != c => 0.0,
                _ => 1.0,
            };
        }
    }
    for v in (1..n).rev() {
        let m = &ts.matrices()[layout.slot[v]];
        let p = layout.parent[v];
        for x in 0..k {
            if beta[p * k + x] == 0.0 {
                continue;
            }
            let row = m.row(x);
            let msg: f64 = (0..k).map(|y| row[y] * beta[v * k + y]).sum();
            beta[p * k + x] *= msg;
        }
    }
    (0..k).map(|x| ts.pi()[x] * beta[x]).sum()
}

/// Measures that can produce ball marginals.
#[derive(Debug, Clone)]
pub enum MeasureSource {
    /// The Markov measure of a transition system.
    Markov(TransitionSystem),
    /// Pushforward of a Markov measure under a map of states.
    Coarsened {
        system: TransitionSystem,
        state_map: Vec<usize>,
        states: Vec<String>,
    },
    /// Empirical law of sampled patterns on a ball.
    Empirical(SampleSet),
}

/// Coarsening by a state map given as one target label per state; the new
/// state space is the set of labels in order of first appearance.
pub fn coarsen(ts: &TransitionSystem, labels: &[String]) -> Result<MeasureSource> {
    if labels.len() != ts.num_states() {
        return Err(Error::Structural(format!(
            "state map has {} entries for {} states",
            labels.len(),
            ts.num_states()
        )));
    }
    let mut states: Vec<String> = Vec::new();
    let state_map = labels
        .iter()
        .map(|l| match states.iter().position(|s| s == l) {
            Some(i) => i,
            None => {
                states.push(l.clone());
                states.len() - 1
            }
        })
        .collect();
    Ok(MeasureSource::Coarsened {
        system: ts.clone(),
        state_map,
        states,
    })
}

impl MeasureSource {
    pub fn spec(&self) -> &GroupSpec {
        match self {
            MeasureSource::Markov(ts) => ts.spec(),
            MeasureSource::Coarsened { system, .. } => system.spec(),
            MeasureSource::Empirical(s) => &s.spec,
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            MeasureSource::Markov(ts) => ts.states(),
            MeasureSource::Coarsened { states, .. } => states,
            MeasureSource::Empirical(s) => &s.states,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states().len()
    }

    /// Largest radius whose ball the source can describe, if bounded.
    pub fn max_radius(&self) -> Option<usize> {
        match self {
            MeasureSource::Empirical(s) => Some(s.radius),
            _ => None,
        }
    }

    pub fn ball_marginal(&self, domain: &Domain) -> Result<BallMarginal> {
        match self {
            MeasureSource::Markov(ts) => markov_marginal(ts, domain),
            MeasureSource::Coarsened {
                system,
                state_map,
                states,
            } => coarsened_marginal(system, state_map, states, domain),
            MeasureSource::Empirical(samples) => samples.marginal(domain),
        }
    }

    pub fn entropy(&self, domain: &Domain) -> Result<f64> {
        match self {
            MeasureSource::Markov(ts) => markov_entropy(ts, domain),
            _ => Ok(self.ball_marginal(domain)?.entropy()),
        }
    }

    /// Single-site law and generator-pair joints `(x(e), x(s))`.
    pub fn pair_stats(&self) -> Result<PairStats> {
        let spec = *self.spec();
        let e = Word::identity();
        let pi = self
            .ball_marginal(&Domain::new([e.clone()]))?
            .dense_probs()?;
        let joints = spec
            .generators()
            .iter()
            .map(|&s| {
                self.ball_marginal(&Domain::new([e.clone(), Word::generator(s)]))?
                    .dense_probs()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PairStats {
            num_states: self.num_states(),
            pi,
            joints,
        })
    }
}

fn coarsened_marginal(
    ts: &TransitionSystem,
    map: &[usize],
    states: &[String],
    domain: &Domain,
) -> Result<BallMarginal> {
    for w in domain {
        check_vertex(ts, w)?;
    }
    let hull = freegroup::tree_hull(domain);
    let layout = TreeLayout::new(&hull, ts.spec())?;
    let codec = PatternCodec::new(states.len(), domain.len())?;
    let count = codec.count()?;
    if count > COARSE_LIMIT {
        return Err(Error::Capability(format!(
            "{count} coarse patterns on {} words exceed the limit of {COARSE_LIMIT}",
            domain.len()
        )));
    }
    let positions: Vec<usize> = domain
        .iter()
        .map(|w| hull.index_of(w).expect("hull contains domain"))
        .collect();
    let k = ts.num_states();
    let n = hull.len();
    let probs: Vec<f64> = (0..count)
        .into_par_iter()
        .map_init(
            || (vec![0usize; codec.len], vec![None; n], vec![0.0; n * k]),
            |(digits, constraint, beta), index| {
                codec.decode_into(index, digits);
                for (&pos, &d) in positions.iter().zip(digits.iter()) {
                    constraint[pos] = Some(d);
                }
                coarse_cylinder(ts, &layout, map, constraint, beta)
            },
        )
        .collect();
    Ok(BallMarginal::dense(domain.clone(), states.to_vec(), probs))
}

/// Sampled patterns on a ball, one row of state indices per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub spec: GroupSpec,
    pub states: Vec<String>,
    pub radius: usize,
    pub domain: Domain,
    pub rows: Vec<Vec<usize>>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = Pattern> + '_ {
        self.rows.iter().map(|r| Pattern {
            domain: self.domain.clone(),
            values: r.clone(),
        })
    }

    /// Empirical frequencies of patterns on a subdomain of the sampled ball.
    pub fn marginal(&self, domain: &Domain) -> Result<BallMarginal> {
        let positions = domain
            .iter()
            .map(|w| {
                self.domain.index_of(w).ok_or_else(|| {
                    Error::Capability(format!(
                        "{w} lies outside the sampled ball of radius {}",
                        self.radius
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if self.rows.is_empty() {
            return Err(Error::Capability("no samples".into()));
        }
        let codec = PatternCodec::new(self.states.len(), domain.len())?;
        let weight = 1.0 / self.rows.len() as f64;
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        let mut picked = vec![0; domain.len()];
        for row in &self.rows {
            for (dst, &p) in picked.iter_mut().zip(&positions) {
                *dst = row[p];
            }
            *counts.entry(codec.encode(&picked)).or_insert(0) += 1;
        }
        let map = counts
            .into_iter()
            .map(|(i, c)| (i, c as f64 * weight))
            .collect();
        BallMarginal::from_sparse(domain.clone(), self.states.clone(), map)
    }

    /// Header of domain words, then one line of state labels per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.domain.iter().map(|w| w.to_string()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let labels: Vec<&str> = row.iter().map(|&i| self.states[i].as_str()).collect();
            out.push_str(&labels.join(","));
            out.push('\n');
        }
        out
    }
}

/// Draws `count` patterns on `B(e, radius)`: the root from `pi`, then each
/// word `sg` from row `x(g)` of `P^s`, in shortlex order.
pub fn sample(ts: &TransitionSystem, radius: usize, seed: u64, count: usize) -> Result<SampleSet> {
    let domain = Domain::ball(ts.spec(), radius);
    let layout = TreeLayout::new(&domain, ts.spec())?;
    let root = WeightedIndex::new(ts.pi())
        .map_err(|e| Error::Domain(format!("pi cannot be sampled: {e}")))?;
    let rows: Vec<Vec<Option<WeightedIndex<f64>>>> = ts
        .matrices()
        .iter()
        .map(|m| {
            (0..m.size())
                .map(|i| WeightedIndex::new(m.row(i)).ok())
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = Vec::with_capacity(layout.len());
        x.push(root.sample(&mut rng));
        for v in 1..layout.len() {
            let from = x[layout.parent[v]];
            let dist = rows[layout.slot[v]][from].as_ref().ok_or_else(|| {
                Error::Domain(format!(
                    "row {from} of a transition matrix cannot be sampled"
                ))
            })?;
            x.push(dist.sample(&mut rng));
        }
        out.push(x);
    }
    Ok(SampleSet {
        spec: *ts.spec(),
        states: ts.states().to_vec(),
        radius,
        domain,
        rows: out,
    })
}

/// `max_z |mu(C_z) - mu(T_s^{-1} C_z)|` over patterns on `domain`, where
/// `T_s^{-1} C_z` is the cylinder on `domain * s` carrying the same values.
pub fn check_shift_invariance(ts: &TransitionSystem, domain: &Domain, s: Generator) -> Result<f64> {
    let spec = ts.spec();
    let moved = domain.right_translate(s, spec)?;
    let here = markov_marginal(ts, domain)?;
    let there = markov_marginal(ts, &moved)?;
    // position in `moved` of w*s for each w in domain
    let perm = domain
        .iter()
        .map(|w| {
            Ok(moved
                .index_of(&w.right_mul(s, spec)?)
                .expect("translated word"))
        })
        .collect::<Result<Vec<usize>>>()?;
    let codec = here.codec();
    let mut inverse = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    let mut a = vec![0; codec.len];
    let mut b = vec![0; codec.len];
    let mut residual: f64 = 0.0;
    for (idx, p) in here.nonzero() {
        codec.decode_into(idx, &mut a);
        for (i, &dst) in perm.iter().enumerate() {
            b[dst] = a[i];
        }
        residual = residual.max((p - there.prob(&b)).abs());
    }
    for (idx, q) in there.nonzero() {
        codec.decode_into(idx, &mut b);
        for (j, &src) in inverse.iter().enumerate() {
            a[src] = b[j];
        }
        residual = residual.max((here.prob(&a) - q).abs());
    }
    Ok(residual)
}

/// `mu(C_z)` for a pattern on any finite domain, summing out the rest of
/// its tree hull.
pub fn pattern_prob(ts: &TransitionSystem, pattern: &Pattern) -> Result<f64> {
    for w in &pattern.domain {
        check_vertex(ts, w)?;
    }
    let k = ts.num_states();
    if let Some(&bad) = pattern.values.iter().find(|&&v| v >= k) {
        return Err(Error::Structural(format!("state index {bad} out of range")));
    }
    let hull = freegroup::tree_hull(&pattern.domain);
    let layout = TreeLayout::new(&hull, ts.spec())?;
    let mut constraint = vec![None; hull.len()];
    for (w, &v) in pattern.domain.iter().zip(&pattern.values) {
        constraint[hull.index_of(w).expect("hull contains domain")] = Some(v);
    }
    let identity: Vec<usize> = (0..k).collect();
    let mut beta = vec![0.0; hull.len() * k];
    Ok(coarse_cylinder(
        ts,
        &layout,
        &identity,
        &constraint,
        &mut beta,
    ))
}

/// Shift invariance on `count` patterns half drawn from the measure and
/// half uniformly at random, for domains too large to enumerate. Returns
/// the largest relative residual `|p - q| / max(p, q)` (0 when both vanish).
pub fn check_shift_invariance_sampled(
    ts: &TransitionSystem,
    domain: &Domain,
    s: Generator,
    seed: u64,
    count: usize,
) -> Result<f64> {
    let spec = ts.spec();
    let moved = domain.right_translate(s, spec)?;
    let positions = domain
        .iter()
        .map(|w| {
            Ok(moved
                .index_of(&w.right_mul(s, spec)?)
                .expect("translated word"))
        })
        .collect::<Result<Vec<usize>>>()?;
    let drawn = sample(ts, domain.max_length(), seed, count / 2)?;
    let picks: Vec<usize> = domain
        .iter()
        .map(|w| drawn.domain.index_of(w).expect("ball contains domain"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let uniform = rand::distributions::Uniform::new(0, ts.num_states());
    let mut patterns: Vec<Vec<usize>> = drawn
        .rows
        .iter()
        .map(|row| picks.iter().map(|&i| row[i]).collect())
        .collect();
    while patterns.len() < count {
        patterns.push(
            (0..domain.len())
                .map(|_| uniform.sample(&mut rng))
                .collect(),
        );
    }
    let mut residual: f64 = 0.0;
    for values in patterns {
        let mut shifted = vec![0; values.len()];
        for (i, &dst) in positions.iter().enumerate() {
            shifted[dst] = values[i];
        }
        let p = pattern_prob(ts, &Pattern::new(domain.clone(), values)?)?;
        let q = pattern_prob(ts, &Pattern::new(moved.clone(), shifted)?)?;
        let scale = p.max(q);
        if scale > 0.0 {
            residual = residual.max((p - q).abs() / scale);
        }
    }
    Ok(residual)
}

/// Conditional entropies compared by [`check_markov_property`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovResidual {
    /// `H(x(sg) | x on the truncated past)`.
    pub given_past: f64,
    /// `H(x(sg) | x(g))`.
    pub given_parent: f64,
    pub residual: f64,
}

/// Compares `H(x(sg) | Past(sg; g) within B(e, radius))` with `H(x(sg) | x(g))`.
pub fn check_markov_property(
    src: &MeasureSource,
    g: &Word,
    s: Generator,
    radius: usize,
) -> Result<MarkovResidual> {
    let spec = *src.spec();
    let sg = g.left_mul(s, &spec)?;
    let past = freegroup::past(&sg, g, radius, &spec)?;
    let with_head = past.union(&Domain::new([sg.clone()]));
    let given_past = src.entropy(&with_head)? - src.entropy(&past)?;
    let pair = Domain::new([g.clone(), sg]);
    let given_parent = src.entropy(&pair)? - src.entropy(&Domain::new([g.clone()]))?;
    Ok(MarkovResidual {
        given_past,
        given_parent,
        residual: (given_past - given_parent).abs(),
    })
}

/// `sum_s sum_{i,j} |J_A^s(i,j) - J_B^s(i,j)|`, padding the smaller state
/// space (and generator list) with zero mass.
pub fn d1(a: &PairStats, b: &PairStats) -> f64 {
    let k = a.num_states.max(b.num_states);
    let gens = a.joints.len().max(b.joints.len());
    let get = |st: &PairStats, slot: usize, i: usize, j: usize| {
        if slot < st.joints.len() && i < st.num_states && j < st.num_states {
            st.joint(slot, i, j)
        } else {
            0.0
        }
    };
    let mut acc = Accumulator::default();
    for slot in 0..gens {
        for i in 0..k {
            for j in 0..k {
                acc.add((get(a, slot, i, j) - get(b, slot, i, j)).abs());
            }
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::{
        bernoulli_system, cyclic_system, flip_system, matching_system, wsf_system,
    };

    fn g2() -> GroupSpec {
        GroupSpec::group(2)
    }

    fn dom(words: &[&str]) -> Domain {
        Domain::new(words.iter().map(|s| Word::parse(s, &g2()).unwrap()))
    }

    #[test]
    fn codec_roundtrip() {
        let c = PatternCodec::new(3, 4).unwrap();
        for i in 0..81 {
            assert_eq!(c.encode(&c.decode(i)), i);
        }
        assert_eq!(c.encode(&[1, 0, 0, 0]), 27);
        assert!(PatternCodec::new(10, 40).is_err());
    }

    #[test]
    fn cylinder_examples() {
        let eps = 0.2;
        let ts = flip_system(g2(), eps).unwrap();
        let p = |words: &[&str], vals: &[usize]| {
            cylinder_prob(&ts, &Pattern::new(dom(words), vals.to_vec()).unwrap()).unwrap()
        };
        assert_eq!(p(&["e"], &[0]), 0.5);
        assert!((p(&["e", "a"], &[0, 1]) - 0.5 * (1.0 - eps)).abs() < 1e-15);
        assert!((p(&["e", "a", "b"], &[0, 1, 1]) - 0.5 * (1.0 - eps).powi(2)).abs() < 1e-15);
        let disconnected = Pattern::new(dom(&["e", "ab"]), vec![0, 0]).unwrap();
        assert!(matches!(
            cylinder_prob(&ts, &disconnected),
            Err(Error::Domain(_))
        ));
        let rootless = Pattern::new(dom(&["a"]), vec![0]).unwrap();
        assert!(matches!(
            cylinder_prob(&ts, &rootless),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn alternating_star() {
        let ts = flip_system(g2(), 0.0).unwrap();
        let m = markov_marginal(&ts, &Domain::ball(&g2(), 1)).unwrap();
        let nz = m.nonzero();
        assert_eq!(nz.len(), 2);
        assert!(nz.iter().all(|&(_, p)| p == 0.5));
        // e=0 and all neighbours 1, and the complement
        assert_eq!(m.prob(&[0, 1, 1, 1, 1]), 0.5);
        assert_eq!(m.prob(&[1, 0, 0, 0, 0]), 0.5);
    }

    #[test]
    fn identity_marginals() {
        let ts = bernoulli_system(g2(), &[0.3, 0.7]).unwrap();
        let src = MeasureSource::Markov(ts.clone());
        let m = src.ball_marginal(&dom(&["e"])).unwrap();
        assert_eq!(m.dense_probs().unwrap(), vec![0.3, 0.7]);
        let cyc = cyclic_system(g2(), 3, 0.2).unwrap();
        let c = coarsen(&cyc, &["x".into(), "x".into(), "y".into()]).unwrap();
        let m = c
            .ball_marginal(&dom(&["e"]))
            .unwrap()
            .dense_probs()
            .unwrap();
        assert!((m[0] - 2.0 / 3.0).abs() < 1e-15 && (m[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn projectivity_and_normalization() {
        let ts = flip_system(g2(), 0.3).unwrap();
        let b2 = markov_marginal(&ts, &Domain::ball(&g2(), 2)).unwrap();
        assert!((b2.total() - 1.0).abs() < 1e-12);
        let b1 = markov_marginal(&ts, &Domain::ball(&g2(), 1)).unwrap();
        let proj = b2.marginalize(&Domain::ball(&g2(), 1)).unwrap();
        for (x, y) in proj
            .dense_probs()
            .unwrap()
            .iter()
            .zip(b1.dense_probs().unwrap())
        {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn non_connected_domain_via_hull() {
        let ts = flip_system(g2(), 0.3).unwrap();
        let m = markov_marginal(&ts, &dom(&["e", "ab"])).unwrap();
        // two steps of the flip chain
        let same = 0.3 * 0.3 + 0.7 * 0.7;
        assert!((m.prob(&[0, 0]) - 0.5 * same).abs() < 1e-15);
        assert!((m.prob(&[0, 1]) - 0.5 * (1.0 - same)).abs() < 1e-15);
    }

    #[test]
    fn coarsened_identity_matches_markov() {
        let ts = wsf_system(2).unwrap();
        let labels: Vec<String> = ts.states().to_vec();
        let c = coarsen(&ts, &labels).unwrap();
        let d = dom(&["e", "a", "b", "ab", "Ab"]);
        let x = c.ball_marginal(&d).unwrap().dense_probs().unwrap();
        let y = markov_marginal(&ts, &d).unwrap().dense_probs().unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-15);
        }
        let constant = coarsen(&ts, &vec!["z".to_string(); 4]).unwrap();
        let m = constant.ball_marginal(&Domain::ball(&g2(), 1)).unwrap();
        assert_eq!(m.nonzero().len(), 1);
        assert!((m.prob(&[0; 5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_invariance_small() {
        let ts = wsf_system(2).unwrap();
        for s in g2().generators() {
            let r = check_shift_invariance(&ts, &Domain::ball(&g2(), 1), s).unwrap();
            assert!(r < 1e-12, "{s}: {r}");
        }
        let bad = flip_system(g2(), 0.3)
            .unwrap()
            .with_pi(vec![0.6, 0.4])
            .unwrap();
        let r = check_shift_invariance(&bad, &dom(&["e"]), Generator::positive(0)).unwrap();
        // |pi P - pi| = |0.18 + 0.28 - 0.6|
        assert!((r - 0.14).abs() < 1e-12);
    }

    #[test]
    fn sampler_constraints() {
        let s = sample(&matching_system(2).unwrap(), 2, 7, 0).unwrap();
        assert!(s.is_empty());
        let spec = g2();
        let gens = spec.generators();
        let ts = matching_system(2).unwrap();
        let samples = sample(&ts, 2, 11, 200).unwrap();
        for pat in samples.patterns() {
            for (g, &x) in pat.domain.iter().zip(&pat.values) {
                let sg = g.left_mul(gens[x], &spec).unwrap();
                if let Some(y) = pat.value_at(&sg) {
                    assert_eq!(gens[y], gens[x].inv());
                }
            }
        }
        let again = sample(&ts, 2, 11, 200).unwrap();
        assert_eq!(samples, again);
    }

    #[test]
    fn empirical_capability() {
        let ts = flip_system(g2(), 0.3).unwrap();
        let src = MeasureSource::Empirical(sample(&ts, 1, 3, 100).unwrap());
        assert!(src.ball_marginal(&Domain::ball(&g2(), 1)).is_ok());
        assert!(matches!(
            src.ball_marginal(&Domain::ball(&g2(), 2)),
            Err(Error::Capability(_))
        ));
        assert!((src.ball_marginal(&dom(&["e", "a"])).unwrap().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d1_examples() {
        let a = flip_system(g2(), 0.0).unwrap().pair_stats();
        let b = flip_system(g2(), 1.0).unwrap().pair_stats();
        assert!((d1(&a, &b) - 8.0).abs() < 1e-12);
        assert_eq!(d1(&a, &a), 0.0);
        let w = wsf_system(2).unwrap().pair_stats();
        assert_eq!(d1(&a, &w), d1(&w, &a));
    }

    #[test]
    fn markov_property_checks() {
        let src = MeasureSource::Markov(flip_system(g2(), 0.2).unwrap());
        let r = check_markov_property(&src, &Word::identity(), Generator::positive(0), 1).unwrap();
        assert!(r.residual < 1e-12);
        let perm = crate::transition::permutation_system_from_positive(
            g2(),
            3,
            &[vec![1, 2, 0], vec![0, 2, 1]],
        )
        .unwrap();
        let r = check_markov_property(
            &MeasureSource::Markov(perm),
            &Word::identity(),
            Generator::positive(1),
            1,
        )
        .unwrap();
        assert!(r.given_past.abs() < 1e-12 && r.given_parent.abs() < 1e-12);
        let b = Word::parse("b", &g2()).unwrap();
        assert!(matches!(
            check_markov_property(&src, &b, Generator::negative(1), 1),
            Err(Error::InvalidPair { .. })
        ));
    }

    #[test]
    fn streaming_entropy_matches_dense() {
        let ts = flip_system(g2(), 0.3).unwrap();
        let d = Domain::ball(&g2(), 2);
        let dense = markov_marginal(&ts, &d).unwrap().entropy();
        let layout = TreeLayout::new(&d, ts.spec()).unwrap();
        let streamed = TreeWalk {
            ts: &ts,
            layout: &layout,
        }
        .entropy(STREAM_LIMIT)
        .unwrap();
        assert!((dense - streamed).abs() < 1e-12);
        let tiny = TreeWalk {
            ts: &ts,
            layout: &layout,
        }
        .entropy(10);
        assert!(matches!(tiny, Err(Error::Capability(_))));
    }

    #[test]
    fn pattern_prob_matches_marginal() {
        let ts = cyclic_system(g2(), 3, 0.2).unwrap();
        let d = dom(&["a", "ba", "Ba", "aa"]);
        let m = markov_marginal(&ts, &d).unwrap();
        let codec = m.codec();
        for idx in 0..codec.count().unwrap() {
            let p =
                pattern_prob(&ts, &Pattern::new(d.clone(), codec.decode(idx)).unwrap()).unwrap();
            assert!((p - m.prob_index(idx)).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_invariance_on_large_balls() {
        let ball = Domain::ball(&g2(), 2);
        for ts in [wsf_system(2).unwrap(), matching_system(2).unwrap()] {
            for s in g2().generators() {
                let r = check_shift_invariance_sampled(&ts, &ball, s, 3, 200).unwrap();
                assert!(r < 1e-12, "{r}");
            }
        }
        let bad = flip_system(g2(), 0.3)
            .unwrap()
            .with_pi(vec![0.6, 0.4])
            .unwrap();
        let s = Generator::positive(0);
        assert!(check_shift_invariance_sampled(&bad, &ball, s, 3, 200).unwrap() > 1e-3);
    }
}
