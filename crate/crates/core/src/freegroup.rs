//! Words in free groups and free semigroups, and the left-Cayley tree.
//!
//! Every vertex `w` other than the identity has a unique parent in the
//! left-Cayley tree: the word obtained by deleting its first letter. The edge
//! from the parent to `w` is labelled by that first letter `s`, so that
//! `w = s * parent(w)`. Right multiplication by a generator is the shift.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Group,
    Semigroup,
}

/// A free group or free semigroup (with identity) of a given rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    rank: usize,
    kind: GroupKind,
}

/// A generator `s_i` or its inverse. Ordered `a < A < b < B < ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    index: u8,
    inverse: bool,
}

impl Generator {
    pub fn positive(index: usize) -> Self {
        Generator {
            index: index as u8,
            inverse: false,
        }
    }

    pub fn negative(index: usize) -> Self {
        Generator {
            index: index as u8,
            inverse: true,
        }
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    pub fn inv(self) -> Self {
        Generator {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    pub fn letter(self) -> char {
        let c = (b'a' + self.index) as char;
        if self.inverse {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_letter(c: char) -> Result<Self> {
        if !c.is_ascii_alphabetic() {
            return Err(Error::InvalidLetter(c.to_string()));
        }
        let index = c.to_ascii_lowercase() as u8 - b'a';
        Ok(Generator {
            index,
            inverse: c.is_ascii_uppercase(),
        })
    }

    /// Key used in the transition-system file format: `s1`, `s1_inv`, ...
    pub fn file_key(self) -> String {
        if self.inverse {
            format!("s{}_inv", self.index + 1)
        } else {
            format!("s{}", self.index + 1)
        }
    }

    pub fn from_file_key(key: &str) -> Result<Self> {
        let bad = || Error::Format(format!("unknown generator key {key:?}"));
        let rest = key.strip_prefix('s').ok_or_else(bad)?;
        let (digits, inverse) = match rest.strip_suffix("_inv") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let n: usize = digits.parse().map_err(|_| bad())?;
        if n == 0 || n > 26 {
            return Err(bad());
        }
        Ok(Generator {
            index: (n - 1) as u8,
            inverse,
        })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl GroupSpec {
    pub fn new(rank: usize, kind: GroupKind) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(Error::UnsupportedRank { rank, min: 1 });
        }
        Ok(GroupSpec { rank, kind })
    }

    /// Free group of the given rank. Panics if `rank` is 0 or above 26.
    pub fn group(rank: usize) -> Self {
        Self::new(rank, GroupKind::Group).expect("rank out of range")
    }

    /// Free semigroup of the given rank. Panics if `rank` is 0 or above 26.
    pub fn semigroup(rank: usize) -> Self {
        Self::new(rank, GroupKind::Semigroup).expect("rank out of range")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn is_group(&self) -> bool {
        self.kind == GroupKind::Group
    }

    /// The generating set `S`, in alphabet order.
    pub fn generators(&self) -> Vec<Generator> {
        let mut out = Vec::with_capacity(self.num_generators());
        for i in 0..self.rank {
            out.push(Generator::positive(i));
            if self.is_group() {
                out.push(Generator::negative(i));
            }
        }
        out
    }

    /// `S_+ = {s_1, ..., s_r}`.
    pub fn positive_generators(&self) -> Vec<Generator> {
        (0..self.rank).map(Generator::positive).collect()
    }

    pub fn num_generators(&self) -> usize {
        match self.kind {
            GroupKind::Group => 2 * self.rank,
            GroupKind::Semigroup => self.rank,
        }
    }

    /// Position of `s` in [`GroupSpec::generators`].
    pub fn generator_slot(&self, s: Generator) -> Option<usize> {
        if s.index() >= self.rank || (s.inverse && !self.is_group()) {
            return None;
        }
        Some(if self.is_group() {
            2 * s.index() + s.inverse as usize
        } else {
            s.index()
        })
    }

    /// Coefficient `1 - 2r` of `H(alpha)` in the F functional.
    pub fn f_coefficient(&self) -> f64 {
        1.0 - 2.0 * self.rank as f64
    }

    fn check_letter(&self, s: Generator) -> Result<()> {
        if self.generator_slot(s).is_none() {
            return Err(Error::InvalidLetter(format!(
                "{} is not a generator of the rank-{} free {}",
                s.letter(),
                self.rank,
                if self.is_group() {
                    "group"
                } else {
                    "semigroup"
                }
            )));
        }
        Ok(())
    }
}

/// A reduced word. Constructed only through [`reduce`] and [`Word::parse`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Generator>,
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for s in &self.letters {
            write!(f, "{}", s.letter())?;
        }
        Ok(())
    }
}

/// Free reduction of a raw letter sequence.
pub fn reduce(letters: &[Generator], spec: &GroupSpec) -> Result<Word> {
    let mut out: Vec<Generator> = Vec::with_capacity(letters.len());
    for &s in letters {
        spec.check_letter(s)?;
        if spec.is_group() && out.last() == Some(&s.inv()) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    Ok(Word { letters: out })
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn generator(s: Generator) -> Self {
        Word { letters: vec![s] }
    }

    /// Parses `"e"` or a string over `{a, A, b, B, ...}`, reducing it.
    pub fn parse(text: &str, spec: &GroupSpec) -> Result<Self> {
        let text = text.trim();
        if text == "e" || text.is_empty() {
            return Ok(Word::identity());
        }
        let letters = text
            .chars()
            .map(Generator::from_letter)
            .collect::<Result<Vec<_>>>()?;
        reduce(&letters, spec)
    }

    pub fn letters(&self) -> &[Generator] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Parent in the left-Cayley tree; `None` for the identity.
    pub fn parent(&self) -> Option<Word> {
        if self.letters.is_empty() {
            None
        } else {
            Some(Word {
                letters: self.letters[1..].to_vec(),
            })
        }
    }

    /// Label of the tree edge from the parent to this word.
    pub fn first_letter(&self) -> Option<Generator> {
        self.letters.first().copied()
    }

    /// `s * self`.
    pub fn left_mul(&self, s: Generator, spec: &GroupSpec) -> Result<Word> {
        let mut raw = Vec::with_capacity(self.len() + 1);
        raw.push(s);
        raw.extend_from_slice(&self.letters);
        reduce(&raw, spec)
    }

    /// `self * s`.
    pub fn right_mul(&self, s: Generator, spec: &GroupSpec) -> Result<Word> {
        let mut raw = self.letters.clone();
        raw.push(s);
        reduce(&raw, spec)
    }

    pub fn concat(&self, other: &Word, spec: &GroupSpec) -> Result<Word> {
        let mut raw = self.letters.clone();
        raw.extend_from_slice(&other.letters);
        reduce(&raw, spec)
    }

    /// Group inverse. Errors for semigroups unless the word is the identity.
    pub fn inverse(&self, spec: &GroupSpec) -> Result<Word> {
        let raw: Vec<Generator> = self.letters.iter().rev().map(|s| s.inv()).collect();
        reduce(&raw, spec)
    }

    /// True when `self` lies in the subtree rooted at `root`, i.e. the tree
    /// path from `self` to the identity passes through `root`.
    pub fn has_suffix(&self, root: &Word) -> bool {
        self.letters.ends_with(&root.letters)
    }
}

/// A finite set of words kept sorted in shortlex order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Domain {
    words: Vec<Word>,
}

impl Domain {
    pub fn new<I: IntoIterator<Item = Word>>(words: I) -> Self {
        let set: BTreeSet<Word> = words.into_iter().collect();
        Domain {
            words: set.into_iter().collect(),
        }
    }

    pub fn ball(spec: &GroupSpec, radius: usize) -> Self {
        Domain {
            words: ball(spec, radius),
        }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.words.binary_search(w).ok()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.index_of(w).is_some()
    }

    pub fn is_subset(&self, other: &Domain) -> bool {
        self.words.iter().all(|w| other.contains(w))
    }

    pub fn union(&self, other: &Domain) -> Domain {
        Domain::new(self.words.iter().chain(other.words.iter()).cloned())
    }

    /// `{ w * s : w in self }`.
    pub fn right_translate(&self, s: Generator, spec: &GroupSpec) -> Result<Domain> {
        let words = self
            .words
            .iter()
            .map(|w| w.right_mul(s, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Domain::new(words))
    }

    pub fn max_length(&self) -> usize {
        self.words.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Word> {
        self.words.iter()
    }
}

impl<'a> IntoIterator for &'a Domain {
    type Item = &'a Word;
    type IntoIter = std::slice::Iter<'a, Word>;

    fn into_iter(self) -> Self::IntoIter {
        self.words.iter()
    }
}

/// An edge of the left-Cayley graph, `head = label * tail`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CayleyEdge {
    pub tail: Word,
    pub head: Word,
    pub label: Generator,
}

/// All words of length at most `radius`, in shortlex order.
pub fn ball(spec: &GroupSpec, radius: usize) -> Vec<Word> {
    let gens = spec.generators();
    let mut out = vec![Word::identity()];
    let mut level_start = 0;
    for _ in 0..radius {
        let level_end = out.len();
        for k in level_start..level_end {
            for &s in &gens {
                let last = out[k].letters.last().copied();
                if spec.is_group() && last == Some(s.inv()) {
                    continue;
                }
                let mut letters = out[k].letters.clone();
                letters.push(s);
                out.push(Word { letters });
            }
        }
        level_start = level_end;
    }
    out
}

/// Left-Cayley edges with both endpoints in `domain`, each oriented away
/// from the identity.
pub fn induced_left_edges(domain: &Domain) -> Vec<CayleyEdge> {
    domain
        .iter()
        .filter_map(|w| {
            let tail = w.parent()?;
            if domain.contains(&tail) {
                Some(CayleyEdge {
                    tail,
                    head: w.clone(),
                    label: w.first_letter().expect("non-identity word"),
                })
            } else {
                None
            }
        })
        .collect()
}

/// Whether the induced left-subgraph is connected. Induced subgraphs of a
/// tree are forests, so this is an edge count.
pub fn is_left_connected(domain: &Domain) -> bool {
    !domain.is_empty() && induced_left_edges(domain).len() + 1 == domain.len()
}

/// Smallest left-connected superset of `domain` containing the identity.
pub fn tree_hull(domain: &Domain) -> Domain {
    let mut words: BTreeSet<Word> = BTreeSet::new();
    words.insert(Word::identity());
    for w in domain {
        for k in 0..w.len() {
            words.insert(Word {
                letters: w.letters[k..].to_vec(),
            });
        }
    }
    Domain {
        words: words.into_iter().collect(),
    }
}

/// `Past(sg; g)` truncated to the ball of the given radius.
///
/// This is everything outside the subtree rooted at `sg`.
pub fn past(sg: &Word, g: &Word, radius: usize, spec: &GroupSpec) -> Result<Domain> {
    if sg.parent().as_ref() != Some(g) {
        return Err(Error::InvalidPair {
            head: sg.to_string(),
            tail: g.to_string(),
        });
    }
    Ok(Domain {
        words: ball(spec, radius)
            .into_iter()
            .filter(|f| !f.has_suffix(sg))
            .collect(),
    })
}
