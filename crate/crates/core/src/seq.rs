//! Sequence data model and the containment primitives everything else builds on.
//!
//! Items are interned into dense `u32` ids through an [`Alphabet`]. Sequences
//! are plain ordered lists of those ids; all operations in this module are
//! pure functions of their arguments.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ItemId = u32;
pub type ClassId = usize;

/// Bijection between item tokens and dense ids `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    tokens: Vec<String>,
    ids: HashMap<String, ItemId>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `token`, assigning the next free id on first sight.
    pub fn intern(&mut self, token: &str) -> ItemId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as ItemId;
        self.tokens.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<ItemId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: ItemId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Interns every whitespace-separated token of `text`.
    pub fn sequence_from_text(&mut self, text: &str) -> Sequence {
        Sequence::new(text.split_whitespace().map(|t| self.intern(t)).collect())
    }

    /// Renders a sequence back to space-separated tokens. Unknown ids print as `#<id>`.
    pub fn render(&self, seq: &Sequence) -> String {
        seq.iter()
            .map(|&id| match self.token(id) {
                Some(t) => t.to_owned(),
                None => format!("#{id}"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// An ordered list of item ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence(Vec<ItemId>);

impl Sequence {
    pub fn new(items: Vec<ItemId>) -> Self {
        Sequence(items)
    }

    pub fn empty() -> Self {
        Sequence(Vec::new())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ItemId> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<ItemId> {
        self.0
    }
}

impl From<Vec<ItemId>> for Sequence {
    fn from(items: Vec<ItemId>) -> Self {
        Sequence(items)
    }
}

impl From<&[ItemId]> for Sequence {
    fn from(items: &[ItemId]) -> Self {
        Sequence(items.to_vec())
    }
}

impl std::ops::Deref for Sequence {
    type Target = [ItemId];

    fn deref(&self) -> &[ItemId] {
        &self.0
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str(">")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub sequence: Sequence,
    pub label: ClassId,
}

impl LabeledSequence {
    pub fn new(sequence: Sequence, label: ClassId) -> Self {
        Self { sequence, label }
    }
}

/// A labelled corpus together with its class table and alphabet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceDataset {
    pub instances: Vec<LabeledSequence>,
    pub classes: Vec<String>,
    pub alphabet: Alphabet,
}

impl SequenceDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Returns the class id for `name`, adding it to the class table if new.
    pub fn intern_class(&mut self, name: &str) -> ClassId {
        if let Some(pos) = self.classes.iter().position(|c| c == name) {
            return pos;
        }
        self.classes.push(name.to_owned());
        self.classes.len() - 1
    }

    /// Appends an instance from raw tokens. Unseen items extend the alphabet.
    pub fn push_tokens<'a>(&mut self, label: &str, tokens: impl IntoIterator<Item = &'a str>) {
        let label = self.intern_class(label);
        let items = tokens.into_iter().map(|t| self.alphabet.intern(t)).collect();
        self.instances
            .push(LabeledSequence::new(Sequence::new(items), label));
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.instances.iter().map(|d| d.label).collect()
    }

    /// Copy of the dataset restricted to the given instance indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> SequenceDataset {
        SequenceDataset {
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
            classes: self.classes.clone(),
            alphabet: self.alphabet.clone(),
        }
    }
}

/// Bounds on the number of skipped positions between consecutive matched items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapBounds {
    pub mingap: usize,
    pub maxgap: usize,
}

impl GapBounds {
    pub fn new(mingap: usize, maxgap: usize) -> Result<Self> {
        if mingap > maxgap {
            return Err(Error::invalid(format!(
                "mingap ({mingap}) must not exceed maxgap ({maxgap})"
            )));
        }
        Ok(Self { mingap, maxgap })
    }

    pub fn admits(&self, gap: usize) -> bool {
        self.mingap <= gap && gap <= self.maxgap
    }
}

/// Greedy left-to-right containment test.
pub fn is_subsequence(t: &[ItemId], s: &[ItemId]) -> bool {
    let mut it = s.iter();
    t.iter().all(|x| it.any(|y| y == x))
}

/// Whether `t` embeds into `s` with every gap inside `gap`.
pub fn embeds_with_gap(t: &[ItemId], s: &[ItemId], gap: GapBounds) -> Result<bool> {
    if t.is_empty() {
        return Err(Error::invalid("gap-constrained embedding of an empty pattern"));
    }
    let mut reach: Vec<bool> = s.iter().map(|&x| x == t[0]).collect();
    for &item in &t[1..] {
        let mut next = vec![false; s.len()];
        let mut any = false;
        for (j, &x) in s.iter().enumerate() {
            if x != item || j < gap.mingap + 1 {
                continue;
            }
            // previous match position i satisfies mingap <= j - i - 1 <= maxgap
            let hi = j - gap.mingap - 1;
            let lo = (j - 1).saturating_sub(gap.maxgap);
            if (lo..=hi).any(|i| reach[i]) {
                next[j] = true;
                any = true;
            }
        }
        if !any {
            return Ok(false);
        }
        reach = next;
    }
    Ok(reach.iter().any(|&r| r))
}

/// Number (and fraction) of sequences in `seqs` that contain `t`.
pub fn support<S: AsRef<[ItemId]>>(t: &[ItemId], seqs: &[S]) -> Result<(usize, f64)> {
    if seqs.is_empty() {
        return Err(Error::invalid("support over an empty sequence set"));
    }
    let count = seqs
        .iter()
        .filter(|s| is_subsequence(t, s.as_ref()))
        .count();
    Ok((count, count as f64 / seqs.len() as f64))
}

/// Count of disjoint embeddings found by repeated greedy leftmost matching,
/// each match consuming the positions it used.
pub fn occount_nonoverlap(t: &[ItemId], s: &[ItemId]) -> Result<usize> {
    if t.is_empty() {
        return Err(Error::invalid("occurrence count of an empty pattern"));
    }
    let mut used = vec![false; s.len()];
    let mut matched = Vec::with_capacity(t.len());
    let mut count = 0;
    loop {
        matched.clear();
        let mut k = 0;
        for (j, &x) in s.iter().enumerate() {
            if !used[j] && x == t[k] {
                matched.push(j);
                k += 1;
                if k == t.len() {
                    break;
                }
            }
        }
        if k < t.len() {
            return Ok(count);
        }
        for &j in &matched {
            used[j] = true;
        }
        count += 1;
    }
}

/// Smallest span `i_r - i_1 + 1` over all embeddings of `t` in `s`.
pub fn min_window(t: &[ItemId], s: &[ItemId]) -> Result<Option<usize>> {
    if t.is_empty() {
        return Err(Error::invalid("window of an empty pattern"));
    }
    let mut best: Option<usize> = None;
    for start in 0..s.len() {
        if s[start] != t[0] {
            continue;
        }
        // earliest completion from this start is the tightest window starting here
        let mut k = 1;
        let mut end = start;
        for (j, &x) in s.iter().enumerate().skip(start + 1) {
            if k == t.len() {
                break;
            }
            if x == t[k] {
                k += 1;
                end = j;
            }
        }
        if k == t.len() {
            let w = end - start + 1;
            best = Some(best.map_or(w, |b| b.min(w)));
        } else {
            // later starts cannot complete either
            break;
        }
    }
    Ok(best)
}

/// Order-preserving split of the dataset by class, keyed by class id.
pub fn partition_by_class(data: &SequenceDataset) -> std::collections::BTreeMap<ClassId, Vec<Sequence>> {
    group_by_class(&data.instances)
}

pub(crate) fn group_by_class(
    instances: &[LabeledSequence],
) -> std::collections::BTreeMap<ClassId, Vec<Sequence>> {
    let mut groups = std::collections::BTreeMap::new();
    for d in instances {
        groups
            .entry(d.label)
            .or_insert_with(Vec::new)
            .push(d.sequence.clone());
    }
    groups
}
