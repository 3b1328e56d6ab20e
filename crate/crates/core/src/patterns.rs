//! Frequent subsequence mining and the pattern constraint catalog.
//!
//! Mining is prefix growth over pseudo-projected databases. A pattern is
//! kept when it is frequent in at least one class; per-class statistics are
//! carried along so discriminative and structural filters can be applied
//! afterwards.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::seq::{
    embeds_with_gap, is_subsequence, min_window, occount_nonoverlap, Alphabet, ClassId, GapBounds,
    ItemId, LabeledSequence, Sequence,
};
use crate::similarity::SimilaritySpec;

/// Slack used when comparing a support fraction with a threshold, so that
/// e.g. 3/10 meets a 0.3 threshold despite rounding in `0.3 * 10`.
const SUPPORT_EPS: f64 = 1e-9;

/// `x >= threshold` up to the same relative slack, for ratio thresholds.
fn at_least(x: f64, threshold: f64) -> bool {
    x >= threshold - SUPPORT_EPS * threshold.abs().max(1.0)
}

/// Whether `count` out of `size` sequences meets the fractional threshold.
pub fn meets_minsup(count: usize, size: usize, minsup: f64) -> bool {
    size > 0 && count as f64 >= minsup * size as f64 - SUPPORT_EPS
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub minsup: f64,
    pub maxsize: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapBounds>,
}

impl MiningConfig {
    pub fn new(minsup: f64, maxsize: usize) -> Self {
        Self {
            minsup,
            maxsize,
            gap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.minsup > 0.0 && self.minsup <= 1.0) {
            return Err(Error::invalid(format!(
                "minsup must lie in (0, 1], got {}",
                self.minsup
            )));
        }
        if self.maxsize == 0 {
            return Err(Error::invalid("maxsize must be positive"));
        }
        if let Some(g) = self.gap {
            GapBounds::new(g.mingap, g.maxgap)?;
        }
        Ok(())
    }

    fn contains(&self, t: &[ItemId], s: &[ItemId]) -> bool {
        match self.gap {
            Some(g) if !t.is_empty() => embeds_with_gap(t, s, g).unwrap_or(false),
            _ => is_subsequence(t, s),
        }
    }
}

/// Per-class statistics of one pattern over a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternStats {
    pub class_sizes: Vec<usize>,
    /// Sequences per class containing the pattern.
    pub counts: Vec<usize>,
    pub support: Vec<f64>,
    /// Total non-overlapping occurrences per class.
    pub occount: Vec<usize>,
    /// Non-overlapping occurrences in each sequence, per class.
    pub occurrences: Vec<Vec<usize>>,
    /// Mean minimal window over supporting sequences (0 when unsupported).
    pub mean_window: Vec<f64>,
    pub cohesion: Vec<f64>,
    pub interest: Vec<f64>,
}

impl PatternStats {
    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn total_count(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn total_size(&self) -> usize {
        self.class_sizes.iter().sum()
    }

    /// `count_c(t) / count_D(t)`; zero when the pattern occurs nowhere.
    pub fn confidence(&self, class: ClassId) -> f64 {
        let total = self.total_count();
        if total == 0 {
            0.0
        } else {
            self.counts[class] as f64 / total as f64
        }
    }

    pub fn class_prior(&self, class: ClassId) -> f64 {
        self.class_sizes[class] as f64 / self.total_size() as f64
    }

    /// Class with the highest support; ties go to the smaller id.
    pub fn majority_class(&self) -> ClassId {
        let mut best = 0;
        for c in 1..self.num_classes() {
            if self.support[c] > self.support[best] {
                best = c;
            }
        }
        best
    }

    fn nonempty_classes(&self) -> Vec<ClassId> {
        (0..self.num_classes())
            .filter(|&c| self.class_sizes[c] > 0)
            .collect()
    }

    /// Target-versus-rest view used by the discriminative functions.
    fn contrast(&self, target: ClassId) -> Contrast {
        let n1 = self.class_sizes[target];
        let n2 = self.total_size() - n1;
        let c1 = self.counts[target];
        let c2 = self.total_count() - c1;
        let o1 = self.occount[target];
        let o2: usize = self.occount.iter().sum::<usize>() - o1;
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Contrast {
            sup1: frac(c1, n1),
            sup2: frac(c2, n2),
            occ1: frac(o1, n1),
            occ2: frac(o2, n2),
            n1,
            n2,
            per_seq1: self.occurrences[target].clone(),
            per_seq2: self
                .occurrences
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != target)
                .flat_map(|(_, v)| v.iter().copied())
                .collect(),
        }
    }

    /// Growth rate of the target class against the rest.
    pub fn growth_rate(&self, target: ClassId) -> f64 {
        let c = self.contrast(target);
        growth_rate(c.sup1, c.sup2)
    }
}

struct Contrast {
    sup1: f64,
    sup2: f64,
    occ1: f64,
    occ2: f64,
    n1: usize,
    n2: usize,
    per_seq1: Vec<usize>,
    per_seq2: Vec<usize>,
}

fn growth_rate(sup1: f64, sup2: f64) -> f64 {
    if sup2 > 0.0 {
        sup1 / sup2
    } else if sup1 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `a / b` for growth rates, with infinite operands handled explicitly.
fn gr_ratio(a: f64, b: f64) -> f64 {
    match (a.is_infinite(), b.is_infinite()) {
        (true, true) => 1.0,
        (false, true) => 0.0,
        (true, false) => f64::INFINITY,
        (false, false) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinedPattern {
    pub pattern: Sequence,
    pub stats: PatternStats,
}

/// Sequences grouped by class id, with empty groups for absent ids.
fn class_groups(train: &[LabeledSequence]) -> Vec<Vec<&Sequence>> {
    let num_classes = train.iter().map(|d| d.label + 1).max().unwrap_or(0);
    let mut groups = vec![Vec::new(); num_classes];
    for d in train {
        groups[d.label].push(&d.sequence);
    }
    groups
}

fn compute_stats(t: &[ItemId], groups: &[Vec<&Sequence>], cfg: &MiningConfig) -> PatternStats {
    let k = groups.len();
    let mut stats = PatternStats {
        class_sizes: groups.iter().map(Vec::len).collect(),
        counts: vec![0; k],
        support: vec![0.0; k],
        occount: vec![0; k],
        occurrences: Vec::with_capacity(k),
        mean_window: vec![0.0; k],
        cohesion: vec![0.0; k],
        interest: vec![0.0; k],
    };
    for (c, seqs) in groups.iter().enumerate() {
        let mut window_sum = 0usize;
        let mut occ = Vec::with_capacity(seqs.len());
        for s in seqs {
            if cfg.contains(t, s) {
                stats.counts[c] += 1;
                window_sum += min_window(t, s).ok().flatten().unwrap_or(0);
            }
            occ.push(occount_nonoverlap(t, s).unwrap_or(0));
        }
        stats.occount[c] = occ.iter().sum();
        stats.occurrences.push(occ);
        if stats.counts[c] > 0 {
            let size = seqs.len() as f64;
            stats.support[c] = stats.counts[c] as f64 / size;
            stats.mean_window[c] = window_sum as f64 / stats.counts[c] as f64;
            stats.cohesion[c] = t.len() as f64 / stats.mean_window[c];
            stats.interest[c] = stats.support[c] * stats.cohesion[c];
        }
    }
    stats
}

/// Full statistics of an arbitrary pattern over `train`.
pub fn pattern_stats(t: &[ItemId], train: &[LabeledSequence], cfg: &MiningConfig) -> PatternStats {
    compute_stats(t, &class_groups(train), cfg)
}

/// Canonical order: shorter first, then lexicographic by item id.
pub fn canonical_cmp(a: &Sequence, b: &Sequence) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.items().cmp(b.items()))
}

/// One row of a projected database: a training sequence and the positions
/// where the current prefix can end. Without a gap constraint only the
/// earliest end is kept, since every later continuation is reachable from it.
struct Projection {
    seq: usize,
    ends: Vec<usize>,
}

struct Miner<'a> {
    seqs: Vec<&'a [ItemId]>,
    labels: Vec<ClassId>,
    class_sizes: Vec<usize>,
    cfg: MiningConfig,
    found: Vec<Vec<ItemId>>,
}

impl Miner<'_> {
    fn frequent(&self, db: &[Projection]) -> bool {
        let mut counts = vec![0usize; self.class_sizes.len()];
        for p in db {
            counts[self.labels[p.seq]] += 1;
        }
        counts
            .iter()
            .zip(&self.class_sizes)
            .any(|(&c, &n)| meets_minsup(c, n, self.cfg.minsup))
    }

    /// Positions in `s` that may follow a prefix ending at one of `ends`.
    fn successors(&self, s: &[ItemId], ends: &[usize]) -> Vec<usize> {
        match self.cfg.gap {
            None => (ends[0] + 1..s.len()).collect(),
            Some(g) => {
                let mut out = BTreeSet::new();
                for &e in ends {
                    let lo = e + 1 + g.mingap;
                    let hi = (e + 1 + g.maxgap).min(s.len().saturating_sub(1));
                    out.extend(lo..=hi);
                }
                out.into_iter().collect()
            }
        }
    }

    fn extend(&self, db: &[Projection], item: ItemId) -> Vec<Projection> {
        let mut next = Vec::new();
        for p in db {
            let s = self.seqs[p.seq];
            let ends: Vec<usize> = self
                .successors(s, &p.ends)
                .into_iter()
                .filter(|&j| s[j] == item)
                .collect();
            if ends.is_empty() {
                continue;
            }
            let ends = if self.cfg.gap.is_none() {
                vec![ends[0]]
            } else {
                ends
            };
            next.push(Projection { seq: p.seq, ends });
        }
        next
    }

    fn grow(&mut self, prefix: &mut Vec<ItemId>, db: &[Projection]) {
        if prefix.len() >= self.cfg.maxsize {
            return;
        }
        let mut candidates = BTreeSet::new();
        for p in db {
            let s = self.seqs[p.seq];
            for j in self.successors(s, &p.ends) {
                candidates.insert(s[j]);
            }
        }
        for item in candidates {
            let projected = self.extend(db, item);
            if !self.frequent(&projected) {
                continue;
            }
            prefix.push(item);
            self.found.push(prefix.clone());
            self.grow(prefix, &projected);
            prefix.pop();
        }
    }

    fn run(&mut self) {
        let mut singles = BTreeSet::new();
        for s in &self.seqs {
            singles.extend(s.iter().copied());
        }
        for item in singles {
            let db: Vec<Projection> = self
                .seqs
                .iter()
                .enumerate()
                .filter_map(|(i, s)| {
                    let ends: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|&(_, &x)| x == item)
                        .map(|(j, _)| j)
                        .collect();
                    if ends.is_empty() {
                        None
                    } else if self.cfg.gap.is_none() {
                        Some(Projection { seq: i, ends: vec![ends[0]] })
                    } else {
                        Some(Projection { seq: i, ends })
                    }
                })
                .collect();
            if !self.frequent(&db) {
                continue;
            }
            let mut prefix = vec![item];
            self.found.push(prefix.clone());
            self.grow(&mut prefix, &db);
        }
    }
}

/// All patterns of length `<= maxsize` that are frequent in at least one class,
/// in canonical order, each with its per-class statistics.
pub fn mine_frequent(train: &[LabeledSequence], cfg: &MiningConfig) -> Result<Vec<MinedPattern>> {
    if train.is_empty() {
        return Err(Error::invalid("cannot mine an empty training set"));
    }
    cfg.validate()?;
    let groups = class_groups(train);
    let mut miner = Miner {
        seqs: train.iter().map(|d| d.sequence.items()).collect(),
        labels: train.iter().map(|d| d.label).collect(),
        class_sizes: groups.iter().map(Vec::len).collect(),
        cfg: *cfg,
        found: Vec::new(),
    };
    miner.run();
    let mut out: Vec<MinedPattern> = miner
        .found
        .into_iter()
        .map(|t| MinedPattern {
            stats: compute_stats(&t, &groups, cfg),
            pattern: Sequence::new(t),
        })
        .collect();
    out.sort_by(|a, b| canonical_cmp(&a.pattern, &b.pattern));
    Ok(out)
}

/// Discriminative function and its thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discriminator {
    /// Support above `minsup` in the target and at most `minsup` elsewhere.
    Df1 { minsup: f64 },
    /// Per-sequence occurrence rate above `mincount` in the target and at most `mincount` elsewhere.
    Df2 { mincount: f64 },
    /// Support difference at least `minsupdiff`.
    Df3 { minsupdiff: f64 },
    /// Between/within occurrence F-ratio at least `min_fratio`.
    Df4 { min_fratio: f64 },
    /// Growth rate and conditional significance against discriminative sub-patterns.
    Df5 { min_gr: f64, min_sig: f64 },
    /// Pearson chi-squared test of class versus containment.
    Df6 { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminativeSpec {
    pub criterion: Discriminator,
    /// Class tested against the rest. `None` accepts a pattern that passes for any class.
    #[serde(default)]
    pub target: Option<ClassId>,
}

impl DiscriminativeSpec {
    pub fn any_class(criterion: Discriminator) -> Self {
        Self {
            criterion,
            target: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscEval {
    pub score: f64,
    pub passes: bool,
    /// Class the evaluation refers to (`None` for the class-free chi-squared test).
    pub target: Option<ClassId>,
}

/// Pearson chi-squared statistic and p-value for a `rows x 2` contingency table.
pub fn chi_squared_test(table: &[[usize; 2]]) -> (f64, f64) {
    let rows: Vec<&[usize; 2]> = table.iter().filter(|r| r[0] + r[1] > 0).collect();
    let total: usize = rows.iter().map(|r| r[0] + r[1]).sum();
    let col = [
        rows.iter().map(|r| r[0]).sum::<usize>(),
        rows.iter().map(|r| r[1]).sum::<usize>(),
    ];
    if rows.len() < 2 || col[0] == 0 || col[1] == 0 {
        return (0.0, 1.0);
    }
    let mut stat = 0.0;
    for r in &rows {
        let row_total = (r[0] + r[1]) as f64;
        for k in 0..2 {
            let expected = row_total * col[k] as f64 / total as f64;
            let d = r[k] as f64 - expected;
            stat += d * d / expected;
        }
    }
    let dist = ChiSquared::new((rows.len() - 1) as f64).expect("positive degrees of freedom");
    (stat, dist.sf(stat))
}

fn eval_for_target(
    pattern: &Sequence,
    stats: &PatternStats,
    criterion: &Discriminator,
    target: ClassId,
    mined: &[MinedPattern],
) -> DiscEval {
    let c = stats.contrast(target);
    let (score, passes) = match *criterion {
        Discriminator::Df1 { minsup } => (c.sup1, c.sup1 > minsup && c.sup2 <= minsup),
        Discriminator::Df2 { mincount } => (c.occ1, c.occ1 > mincount && c.occ2 <= mincount),
        Discriminator::Df3 { minsupdiff } => {
            let d = c.sup1 - c.sup2;
            (d, at_least(d, minsupdiff))
        }
        Discriminator::Df4 { min_fratio } => {
            let mean = (c.occ1 + c.occ2) / 2.0;
            let between = c.n1 as f64 * (c.occ1 - mean).powi(2) + c.n2 as f64 * (c.occ2 - mean).powi(2);
            let within: f64 = c
                .per_seq1
                .iter()
                .map(|&o| (o as f64 - c.occ1).powi(2))
                .chain(c.per_seq2.iter().map(|&o| (o as f64 - c.occ2).powi(2)))
                .sum();
            let f = if within > 0.0 {
                between / within
            } else if between > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            (f, at_least(f, min_fratio))
        }
        Discriminator::Df5 { min_gr, min_sig } => {
            let gr = growth_rate(c.sup1, c.sup2);
            let sig = mined
                .iter()
                .filter(|q| q.pattern.len() < pattern.len() && is_subsequence(&q.pattern, pattern))
                .map(|q| q.stats.growth_rate(target))
                .filter(|&qgr| at_least(qgr, min_gr))
                .map(|qgr| gr_ratio(gr, qgr))
                .fold(f64::INFINITY, f64::min);
            (gr, at_least(gr, min_gr) && at_least(sig, min_sig))
        }
        Discriminator::Df6 { .. } => unreachable!("chi-squared is evaluated over all classes"),
    };
    DiscEval {
        score,
        passes,
        target: Some(target),
    }
}

/// Scores a pattern with a discriminative function.
///
/// `mined` supplies the candidate sub-patterns for the DF5 redundancy check and
/// may be empty for the other criteria. With no explicit target, the first
/// class (by id) for which the pattern passes is reported, or the best-scoring
/// class when none passes.
pub fn discriminative_eval(
    pattern: &Sequence,
    stats: &PatternStats,
    spec: &DiscriminativeSpec,
    mined: &[MinedPattern],
) -> Result<DiscEval> {
    let classes = stats.nonempty_classes();
    if classes.len() < 2 {
        return Err(Error::invalid(
            "discriminative evaluation needs at least two non-empty classes",
        ));
    }
    if let Discriminator::Df6 { alpha } = spec.criterion {
        let table: Vec<[usize; 2]> = classes
            .iter()
            .map(|&c| [stats.counts[c], stats.class_sizes[c] - stats.counts[c]])
            .collect();
        let (stat, p) = chi_squared_test(&table);
        return Ok(DiscEval {
            score: stat,
            passes: p <= alpha,
            target: None,
        });
    }
    match spec.target {
        Some(t) => {
            if t >= stats.num_classes() || stats.class_sizes[t] == 0 {
                return Err(Error::invalid(format!("target class {t} has no training sequences")));
            }
            Ok(eval_for_target(pattern, stats, &spec.criterion, t, mined))
        }
        None => {
            let evals: Vec<DiscEval> = classes
                .iter()
                .map(|&c| eval_for_target(pattern, stats, &spec.criterion, c, mined))
                .collect();
            let best = evals.iter().find(|e| e.passes).copied().unwrap_or_else(|| {
                evals
                    .iter()
                    .copied()
                    .fold(evals[0], |a, b| if b.score > a.score { b } else { a })
            });
            Ok(best)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interest {
    pub support: f64,
    pub cohesion: f64,
    pub interest: f64,
}

/// Support, mean cohesion and their product for `pattern` within one class.
pub fn interestingness(pattern: &[ItemId], class_seqs: &[Sequence]) -> Result<Interest> {
    if pattern.is_empty() {
        return Err(Error::invalid("interestingness of an empty pattern"));
    }
    let windows: Vec<usize> = class_seqs
        .iter()
        .map(|s| min_window(pattern, s))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if windows.is_empty() {
        return Ok(Interest {
            support: 0.0,
            cohesion: 0.0,
            interest: 0.0,
        });
    }
    let support = windows.len() as f64 / class_seqs.len() as f64;
    let mean = windows.iter().sum::<usize>() as f64 / windows.len() as f64;
    let cohesion = pattern.len() as f64 / mean;
    Ok(Interest {
        support,
        cohesion,
        interest: support * cohesion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralFilter {
    /// No item repeats within the pattern.
    Uniqueness,
    /// No mined super-pattern has the same overall support count.
    Closedness,
    /// Confidence for the target class is at least that class's prior.
    Redundancy,
}

/// Conjunction of the requested structural checks.
///
/// Closedness is judged within `all`. Redundancy uses `target`, or the class
/// in which the pattern has the highest support when no target is given.
pub fn structural_filters(
    p: &MinedPattern,
    all: &[MinedPattern],
    which: &[StructuralFilter],
    target: Option<ClassId>,
) -> bool {
    which.iter().all(|f| match f {
        StructuralFilter::Uniqueness => {
            let distinct: BTreeSet<_> = p.pattern.iter().collect();
            distinct.len() == p.pattern.len()
        }
        StructuralFilter::Closedness => {
            let count = p.stats.total_count();
            !all.iter().any(|q| {
                q.pattern.len() > p.pattern.len()
                    && q.stats.total_count() == count
                    && is_subsequence(&p.pattern, &q.pattern)
            })
        }
        StructuralFilter::Redundancy => {
            let c = target.unwrap_or_else(|| p.stats.majority_class());
            p.stats.total_count() > 0 && p.stats.confidence(c) >= p.stats.class_prior(c)
        }
    })
}

/// A full pattern-based reference selection recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSelection {
    pub mining: MiningConfig,
    #[serde(default)]
    pub discriminative: Vec<DiscriminativeSpec>,
    #[serde(default)]
    pub structural: Vec<StructuralFilter>,
    #[serde(default)]
    pub minint: Option<f64>,
}

impl PatternSelection {
    pub fn frequent(mining: MiningConfig) -> Self {
        Self {
            mining,
            discriminative: Vec::new(),
            structural: Vec::new(),
            minint: None,
        }
    }
}

/// Constraint stacks of well-known pattern-based classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternPreset {
    /// Frequent patterns: minsup 0.3, maxsize 3, containment similarity.
    Fsp,
    /// Frequent patterns filtered by growth rate (minGR 3) and conditional significance.
    Dsp,
    /// minsup + redundancy + chi-squared, containment similarity.
    FeatureMine,
    /// minsup + interestingness + maxsize, cohesion similarity.
    Scip,
    /// minsup + closedness, LCS/max similarity.
    Closed,
    /// uniqueness + gap + occurrence-based discrimination, occurrence-count similarity.
    Occurrence,
    /// gap + support contrast, windowed edit-distance similarity.
    Contrast,
    /// minsup + gap, containment similarity.
    GapFrequent,
}

impl PatternPreset {
    pub const ALL: [PatternPreset; 8] = [
        PatternPreset::Fsp,
        PatternPreset::Dsp,
        PatternPreset::FeatureMine,
        PatternPreset::Scip,
        PatternPreset::Closed,
        PatternPreset::Occurrence,
        PatternPreset::Contrast,
        PatternPreset::GapFrequent,
    ];

    pub const FSP_MINSUP: f64 = 0.3;
    pub const FSP_MAXSIZE: usize = 3;
    pub const DSP_MIN_GR: f64 = 3.0;
    pub const DSP_MIN_SIG: f64 = 1.0;
    pub const SCIP_MININT: f64 = 0.2;
    pub const DEFAULT_GAP: GapBounds = GapBounds { mingap: 0, maxgap: 2 };

    pub fn selection(&self) -> PatternSelection {
        let base = MiningConfig::new(Self::FSP_MINSUP, Self::FSP_MAXSIZE);
        let gapped = MiningConfig {
            gap: Some(Self::DEFAULT_GAP),
            ..base
        };
        let mut sel = PatternSelection::frequent(base);
        match self {
            PatternPreset::Fsp => {}
            PatternPreset::Dsp => {
                sel.discriminative.push(DiscriminativeSpec::any_class(Discriminator::Df5 {
                    min_gr: Self::DSP_MIN_GR,
                    min_sig: Self::DSP_MIN_SIG,
                }));
            }
            PatternPreset::FeatureMine => {
                sel.structural.push(StructuralFilter::Redundancy);
                sel.discriminative
                    .push(DiscriminativeSpec::any_class(Discriminator::Df6 { alpha: 0.05 }));
            }
            PatternPreset::Scip => sel.minint = Some(Self::SCIP_MININT),
            PatternPreset::Closed => sel.structural.push(StructuralFilter::Closedness),
            PatternPreset::Occurrence => {
                sel.mining = gapped;
                sel.structural.push(StructuralFilter::Uniqueness);
                sel.discriminative.extend([
                    DiscriminativeSpec::any_class(Discriminator::Df2 { mincount: 0.5 }),
                    DiscriminativeSpec::any_class(Discriminator::Df4 { min_fratio: 1.0 }),
                ]);
            }
            PatternPreset::Contrast => {
                sel.mining = gapped;
                sel.discriminative.extend([
                    DiscriminativeSpec::any_class(Discriminator::Df1 {
                        minsup: Self::FSP_MINSUP,
                    }),
                    DiscriminativeSpec::any_class(Discriminator::Df3 { minsupdiff: 0.2 }),
                ]);
            }
            PatternPreset::GapFrequent => sel.mining = gapped,
        }
        sel
    }

    /// Similarity function customarily paired with the preset.
    pub fn similarity(&self) -> SimilaritySpec {
        match self {
            PatternPreset::Scip => SimilaritySpec::Sf3,
            PatternPreset::Closed => SimilaritySpec::Sf6,
            PatternPreset::Occurrence => SimilaritySpec::Sf5,
            PatternPreset::Contrast => SimilaritySpec::Sf2 { gamma: 0.2 },
            _ => SimilaritySpec::Sf1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PatternPreset::Fsp => "fsp",
            PatternPreset::Dsp => "dsp",
            PatternPreset::FeatureMine => "feature-mine",
            PatternPreset::Scip => "scip",
            PatternPreset::Closed => "closed",
            PatternPreset::Occurrence => "occurrence",
            PatternPreset::Contrast => "contrast",
            PatternPreset::GapFrequent => "gap-frequent",
        }
    }
}

impl fmt::Display for PatternPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        PatternPreset::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| Error::invalid(format!("unknown pattern preset `{s}`")))
    }
}

/// Mines frequent patterns and keeps those passing every requested constraint.
pub fn select_pattern_references(
    train: &[LabeledSequence],
    sel: &PatternSelection,
) -> Result<Vec<MinedPattern>> {
    let mined = mine_frequent(train, &sel.mining)?;
    let mut kept = Vec::new();
    for p in &mined {
        if !structural_filters(p, &mined, &sel.structural, None) {
            continue;
        }
        if let Some(minint) = sel.minint {
            let interesting = (0..p.stats.num_classes()).any(|c| {
                meets_minsup(p.stats.counts[c], p.stats.class_sizes[c], sel.mining.minsup)
                    && p.stats.interest[c] >= minint
            });
            if !interesting {
                continue;
            }
        }
        let mut passes = true;
        for d in &sel.discriminative {
            if !discriminative_eval(&p.pattern, &p.stats, d, &mined)?.passes {
                passes = false;
                break;
            }
        }
        if passes {
            kept.push(p.clone());
        }
    }
    Ok(kept)
}

/// Writes mined patterns as tab-separated text with a header row:
/// `pattern  length  count  support:<class>...  occount:<class>...  interest:<class>...`
pub fn write_patterns_tsv<W: Write>(
    mut w: W,
    patterns: &[MinedPattern],
    alphabet: &Alphabet,
    classes: &[String],
) -> std::io::Result<()> {
    let class_name = |c: usize| classes.get(c).cloned().unwrap_or_else(|| c.to_string());
    let k = patterns.first().map_or(classes.len(), |p| p.stats.num_classes());
    let mut header = vec!["pattern".to_string(), "length".into(), "count".into()];
    for prefix in ["support", "occount", "interest"] {
        header.extend((0..k).map(|c| format!("{prefix}:{}", class_name(c))));
    }
    writeln!(w, "{}", header.join("\t"))?;
    for p in patterns {
        let mut row = vec![
            alphabet.render(&p.pattern),
            p.pattern.len().to_string(),
            p.stats.total_count().to_string(),
        ];
        row.extend(p.stats.support.iter().map(|v| format!("{v}")));
        row.extend(p.stats.occount.iter().map(|v| v.to_string()));
        row.extend(p.stats.interest.iter().map(|v| format!("{v}")));
        writeln!(w, "{}", row.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Sequence {
        Sequence::new(s.bytes().map(|b| (b - b'a') as ItemId).collect())
    }

    fn labelled(data: &[(&str, ClassId)]) -> Vec<LabeledSequence> {
        data.iter().map(|&(s, c)| LabeledSequence::new(seq(s), c)).collect()
    }

    fn patterns(mined: &[MinedPattern]) -> Vec<Sequence> {
        mined.iter().map(|m| m.pattern.clone()).collect()
    }

    #[test]
    fn mining_examples() {
        let d = labelled(&[("ab", 0), ("ac", 0), ("abc", 0)]);
        let got = mine_frequent(&d, &MiningConfig::new(2.0 / 3.0, 2)).unwrap();
        assert_eq!(
            patterns(&got),
            vec![seq("a"), seq("b"), seq("c"), seq("ab"), seq("ac")]
        );
        let got = mine_frequent(&d, &MiningConfig::new(1.0, 2)).unwrap();
        assert_eq!(patterns(&got), vec![seq("a")]);
        let got = mine_frequent(&d, &MiningConfig::new(0.5, 1)).unwrap();
        assert_eq!(patterns(&got), vec![seq("a"), seq("b"), seq("c")]);
        assert!(mine_frequent(&[], &MiningConfig::new(0.5, 1)).is_err());
        assert!(mine_frequent(&d, &MiningConfig::new(0.0, 1)).is_err());
    }

    #[test]
    fn mining_with_gap() {
        let d = labelled(&[("abc", 0), ("acb", 0)]);
        let cfg = MiningConfig {
            gap: Some(GapBounds::new(0, 0).unwrap()),
            ..MiningConfig::new(1.0, 2)
        };
        let got = patterns(&mine_frequent(&d, &cfg).unwrap());
        // <a,c> is contiguous only in the second sequence, <a,b> only in the first
        assert_eq!(got, vec![seq("a"), seq("b"), seq("c")]);
        let cfg = MiningConfig {
            gap: Some(GapBounds::new(0, 1).unwrap()),
            ..MiningConfig::new(1.0, 2)
        };
        let got = patterns(&mine_frequent(&d, &cfg).unwrap());
        assert_eq!(got, vec![seq("a"), seq("b"), seq("c"), seq("ab"), seq("ac")]);
    }

    #[test]
    fn frequent_in_any_class() {
        let d = labelled(&[("ab", 0), ("ab", 0), ("cd", 1), ("cd", 1), ("ad", 1)]);
        let got = mine_frequent(&d, &MiningConfig::new(0.6, 2)).unwrap();
        assert_eq!(
            patterns(&got),
            vec![seq("a"), seq("b"), seq("c"), seq("d"), seq("ab"), seq("cd")]
        );
        let a = &got[0];
        assert_eq!(a.stats.counts, vec![2, 1]);
        assert_eq!(a.stats.class_sizes, vec![2, 3]);
    }

    #[test]
    fn stats_fields() {
        let d = labelled(&[("cd", 0), ("cad", 0), ("ab", 1), ("cdcd", 1)]);
        let st = pattern_stats(&seq("cd"), &d, &MiningConfig::new(0.5, 2));
        assert_eq!(st.counts, vec![2, 1]);
        assert_eq!(st.occurrences, vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(st.occount, vec![2, 2]);
        assert!((st.mean_window[0] - 2.5).abs() < 1e-12);
        assert!((st.cohesion[0] - 0.8).abs() < 1e-12);
        assert!((st.interest[0] - 0.8).abs() < 1e-12);
        assert!((st.confidence(0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn interestingness_examples() {
        let seqs = vec![seq("cd"), seq("cad")];
        let i = interestingness(&seq("cd"), &seqs).unwrap();
        assert!((i.support - 1.0).abs() < 1e-12);
        assert!((i.cohesion - 0.8).abs() < 1e-12);
        assert!((i.interest - 0.8).abs() < 1e-12);
        let i = interestingness(&seq("abc"), &[seq("abc")]).unwrap();
        assert_eq!((i.support, i.cohesion, i.interest), (1.0, 1.0, 1.0));
        let i = interestingness(&seq("e"), &seqs).unwrap();
        assert_eq!((i.support, i.cohesion, i.interest), (0.0, 0.0, 0.0));
        assert!(interestingness(&[], &seqs).is_err());
    }

    fn stats_with_support(counts: [usize; 2], sizes: [usize; 2]) -> PatternStats {
        PatternStats {
            class_sizes: sizes.to_vec(),
            counts: counts.to_vec(),
            support: vec![
                counts[0] as f64 / sizes[0] as f64,
                counts[1] as f64 / sizes[1] as f64,
            ],
            occount: counts.to_vec(),
            occurrences: vec![
                (0..sizes[0]).map(|i| usize::from(i < counts[0])).collect(),
                (0..sizes[1]).map(|i| usize::from(i < counts[1])).collect(),
            ],
            mean_window: vec![1.0; 2],
            cohesion: vec![1.0; 2],
            interest: vec![0.0; 2],
        }
    }

    #[test]
    fn df3_and_df5_examples() {
        let p = seq("a");
        let st = stats_with_support([8, 3], [10, 10]);
        let spec = DiscriminativeSpec {
            criterion: Discriminator::Df3 { minsupdiff: 0.5 },
            target: Some(0),
        };
        let e = discriminative_eval(&p, &st, &spec, &[]).unwrap();
        assert!((e.score - 0.5).abs() < 1e-12);
        assert!(e.passes);

        let st = stats_with_support([6, 2], [10, 10]);
        let spec = DiscriminativeSpec {
            criterion: Discriminator::Df5 { min_gr: 3.0, min_sig: 1.0 },
            target: Some(0),
        };
        let e = discriminative_eval(&p, &st, &spec, &[]).unwrap();
        assert!((e.score - 3.0).abs() < 1e-12);
        assert!(e.passes);
    }

    #[test]
    fn df5_infinite_growth_rate() {
        let st = stats_with_support([4, 0], [10, 10]);
        let spec = DiscriminativeSpec::any_class(Discriminator::Df5 { min_gr: 3.0, min_sig: 1.0 });
        let e = discriminative_eval(&seq("a"), &st, &spec, &[]).unwrap();
        assert!(e.score.is_infinite());
        assert!(e.passes);
        assert_eq!(e.target, Some(0));
    }

    #[test]
    fn df5_conditional_redundancy() {
        // <a> alone has GR 4; <a,b> only reaches GR 3, so it adds nothing
        let sub = MinedPattern {
            pattern: seq("a"),
            stats: stats_with_support([8, 2], [10, 10]),
        };
        let st = stats_with_support([6, 2], [10, 10]);
        let spec = DiscriminativeSpec {
            criterion: Discriminator::Df5 { min_gr: 3.0, min_sig: 1.0 },
            target: Some(0),
        };
        let e = discriminative_eval(&seq("ab"), &st, &spec, std::slice::from_ref(&sub)).unwrap();
        assert!(!e.passes);
        let relaxed = DiscriminativeSpec {
            criterion: Discriminator::Df5 { min_gr: 3.0, min_sig: 0.75 },
            target: Some(0),
        };
        assert!(discriminative_eval(&seq("ab"), &st, &relaxed, &[sub]).unwrap().passes);
    }

    #[test]
    fn df6_contingency() {
        // independent closed form: every cell deviates by 7.5 from an expectation of 12.5
        let expected_stat = 4.0 * 7.5f64.powi(2) / 12.5;
        let (stat, p) = chi_squared_test(&[[20, 5], [5, 20]]);
        assert!((stat - expected_stat).abs() < 1e-9);
        assert!(p < 0.001);
        let st = stats_with_support([20, 5], [25, 25]);
        let spec = DiscriminativeSpec::any_class(Discriminator::Df6 { alpha: 0.05 });
        let e = discriminative_eval(&seq("a"), &st, &spec, &[]).unwrap();
        assert!(e.passes);
        assert!((e.score - expected_stat).abs() < 1e-9);
        // no association
        let (stat, p) = chi_squared_test(&[[5, 5], [5, 5]]);
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn df1_df2_df4() {
        let st = stats_with_support([6, 2], [10, 10]);
        let df1 = DiscriminativeSpec { criterion: Discriminator::Df1 { minsup: 0.3 }, target: Some(0) };
        assert!(discriminative_eval(&seq("a"), &st, &df1, &[]).unwrap().passes);
        let df1 = DiscriminativeSpec { criterion: Discriminator::Df1 { minsup: 0.3 }, target: Some(1) };
        assert!(!discriminative_eval(&seq("a"), &st, &df1, &[]).unwrap().passes);
        let df2 = DiscriminativeSpec::any_class(Discriminator::Df2 { mincount: 0.5 });
        let e = discriminative_eval(&seq("a"), &st, &df2, &[]).unwrap();
        assert!(e.passes);
        assert!((e.score - 0.6).abs() < 1e-12);

        // F-ratio by hand: occ1 = 0.6, occ2 = 0.2, mean 0.4
        let between = 10.0 * 0.2f64.powi(2) * 2.0;
        let within = 6.0 * 0.4f64.powi(2) + 4.0 * 0.6f64.powi(2) + 2.0 * 0.8f64.powi(2) + 8.0 * 0.2f64.powi(2);
        let df4 = DiscriminativeSpec { criterion: Discriminator::Df4 { min_fratio: 0.0 }, target: Some(0) };
        let e = discriminative_eval(&seq("a"), &st, &df4, &[]).unwrap();
        assert!((e.score - between / within).abs() < 1e-12);

        let flat = stats_with_support([10, 10], [10, 10]);
        let e = discriminative_eval(&seq("a"), &flat, &df4, &[]).unwrap();
        assert_eq!(e.score, 0.0);
        let one_class = PatternStats { class_sizes: vec![3, 0], ..stats_with_support([1, 0], [3, 1]) };
        assert!(discriminative_eval(&seq("a"), &one_class, &df4, &[]).is_err());
    }

    #[test]
    fn structural_examples() {
        let mk = |s: &str, counts: [usize; 2]| MinedPattern {
            pattern: seq(s),
            stats: stats_with_support(counts, [3, 3]),
        };
        let aba = mk("aba", [1, 0]);
        assert!(!structural_filters(&aba, &[], &[StructuralFilter::Uniqueness], None));
        assert!(structural_filters(&mk("abc", [1, 0]), &[], &[StructuralFilter::Uniqueness], None));

        let a = mk("a", [2, 0]);
        let ab = mk("ab", [2, 0]);
        let c = mk("c", [1, 1]);
        let all = vec![a.clone(), c.clone(), ab.clone()];
        assert!(!structural_filters(&a, &all, &[StructuralFilter::Closedness], None));
        assert!(structural_filters(&ab, &all, &[StructuralFilter::Closedness], None));
        assert!(structural_filters(&c, &all, &[StructuralFilter::Closedness], None));

        // conf 0.7 against a prior of 0.5
        let p = MinedPattern {
            pattern: seq("a"),
            stats: stats_with_support([7, 3], [10, 10]),
        };
        assert!(structural_filters(&p, &[], &[StructuralFilter::Redundancy], Some(0)));
        assert!(!structural_filters(&p, &[], &[StructuralFilter::Redundancy], Some(1)));
        assert!(structural_filters(&p, &[], &[StructuralFilter::Redundancy], None));
    }

    #[test]
    fn presets() {
        let d = labelled(&[
            ("abcd", 0), ("abce", 0), ("abde", 0), ("abcf", 0),
            ("efgh", 1), ("efga", 1), ("fegh", 1), ("efhg", 1),
        ]);
        let fsp = select_pattern_references(&d, &PatternPreset::Fsp.selection()).unwrap();
        let mined = mine_frequent(&d, &MiningConfig::new(0.3, 3)).unwrap();
        assert_eq!(fsp, mined);

        let dsp = PatternPreset::Dsp.selection();
        assert_eq!(
            dsp.discriminative[0].criterion,
            Discriminator::Df5 { min_gr: 3.0, min_sig: 1.0 }
        );
        let got = select_pattern_references(&d, &dsp).unwrap();
        assert!(!got.is_empty());
        assert!(got.len() < fsp.len());

        // a threshold nothing can meet yields an empty, non-error result
        let mut impossible = PatternPreset::Fsp.selection();
        impossible
            .discriminative
            .push(DiscriminativeSpec::any_class(Discriminator::Df3 { minsupdiff: 1.5 }));
        assert!(select_pattern_references(&d, &impossible).unwrap().is_empty());

        for preset in PatternPreset::ALL {
            assert_eq!(preset.name().parse::<PatternPreset>().unwrap(), preset);
            let sel = preset.selection();
            sel.mining.validate().unwrap();
            let a = select_pattern_references(&d, &sel).unwrap();
            let b = select_pattern_references(&d, &sel).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn patterns_tsv() {
        let mut alphabet = Alphabet::new();
        for t in ["a", "b"] {
            alphabet.intern(t);
        }
        let d = labelled(&[("ab", 0), ("b", 1)]);
        let mined = mine_frequent(&d, &MiningConfig::new(1.0, 2)).unwrap();
        let mut out = Vec::new();
        write_patterns_tsv(&mut out, &mined, &alphabet, &["x".into(), "y".into()]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "pattern\tlength\tcount\tsupport:x\tsupport:y\toccount:x\toccount:y\tinterest:x\tinterest:y"
        );
        assert_eq!(lines[1], "a\t1\t1\t1\t0\t1\t0\t1\t0");
        assert_eq!(lines.len(), 4);
    }
}
