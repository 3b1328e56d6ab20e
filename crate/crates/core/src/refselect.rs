//! Reference selection: all training sequences, group-average clustering
//! representatives, hypothesis-testing survivors, or mined patterns.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::patterns::{select_pattern_references, PatternPreset, PatternSelection};
use crate::seq::{Alphabet, ClassId, LabeledSequence, Sequence};
use crate::similarity::{similarity_matrix, SimilarityMatrix, SimilaritySpec};

/// Where a reference came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Index into the training list the selector was given.
    Train(usize),
    Pattern(Sequence),
}

impl Provenance {
    pub fn describe(&self, alphabet: Option<&Alphabet>) -> String {
        match self {
            Provenance::Train(i) => format!("train:{i}"),
            Provenance::Pattern(p) => match alphabet {
                Some(a) => format!("pattern:{}", a.render(p)),
                None => format!("pattern:{p}"),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectionMethod {
    All,
    /// `pointnum` defaults to a tenth of the training set, rounded up.
    Gahc {
        #[serde(default)]
        pointnum: Option<usize>,
    },
    Mht {
        alpha: f64,
        /// Leave a candidate's similarity to itself out of its own class sample.
        #[serde(default)]
        exclude_self: bool,
    },
    Pattern {
        preset: PatternPreset,
    },
    CustomPattern {
        selection: PatternSelection,
    },
}

impl SelectionMethod {
    pub const DEFAULT_ALPHA: f64 = 0.05;

    pub fn mht(alpha: f64) -> Self {
        SelectionMethod::Mht {
            alpha,
            exclude_self: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SelectionMethod::Gahc { pointnum: Some(0) } => {
                Err(Error::invalid("gahc pointnum must be positive"))
            }
            SelectionMethod::Mht { alpha, .. } if !(*alpha > 0.0 && *alpha < 1.0) => Err(
                Error::invalid(format!("mht alpha must lie in (0, 1), got {alpha}")),
            ),
            SelectionMethod::CustomPattern { selection } => selection.mining.validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionMethod::All => f.write_str("all"),
            SelectionMethod::Gahc { pointnum: Some(p) } => write!(f, "gahc(pointnum={p})"),
            SelectionMethod::Gahc { pointnum: None } => f.write_str("gahc"),
            SelectionMethod::Mht { alpha, exclude_self } => {
                write!(f, "mht(alpha={alpha}")?;
                if *exclude_self {
                    f.write_str(",exclude_self")?;
                }
                f.write_str(")")
            }
            SelectionMethod::Pattern { preset } => write!(f, "pattern({preset})"),
            SelectionMethod::CustomPattern { .. } => f.write_str("pattern(custom)"),
        }
    }
}

/// The ordered references that define the feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub references: Vec<Sequence>,
    pub provenance: Vec<Provenance>,
    pub method: SelectionMethod,
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn feature_names(&self, alphabet: Option<&Alphabet>) -> Vec<String> {
        self.provenance.iter().map(|p| p.describe(alphabet)).collect()
    }

    /// Training indices of every reference drawn from the training list.
    pub fn train_indices(&self) -> Vec<usize> {
        self.provenance
            .iter()
            .filter_map(|p| match p {
                Provenance::Train(i) => Some(*i),
                Provenance::Pattern(_) => None,
            })
            .collect()
    }

    fn from_train(train: &[Sequence], indices: &[usize], method: SelectionMethod) -> Self {
        ReferenceSet {
            references: indices.iter().map(|&i| train[i].clone()).collect(),
            provenance: indices.iter().map(|&i| Provenance::Train(i)).collect(),
            method,
        }
    }
}

pub fn select_all(train: &[LabeledSequence]) -> Result<ReferenceSet> {
    if train.is_empty() {
        return Err(Error::invalid("cannot select references from an empty training set"));
    }
    let seqs: Vec<Sequence> = train.iter().map(|d| d.sequence.clone()).collect();
    let idx: Vec<usize> = (0..seqs.len()).collect();
    Ok(ReferenceSet::from_train(&seqs, &idx, SelectionMethod::All))
}

/// One agglomeration step: cluster `absorbed` merged into cluster `kept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub kept: usize,
    pub absorbed: usize,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Member lists of the surviving clusters, ordered by their smallest member.
    pub clusters: Vec<Vec<usize>>,
    pub merges: Vec<Merge>,
}

/// Group-average agglomerative clustering of `n` points under a similarity,
/// stopped when `target` clusters remain.
///
/// Cluster `i` starts as `{i}`; merging `k < l` keeps the slot `k`, so every
/// slot's smallest member is its own index. Cluster similarity is the mean of
/// all cross-member similarities, recomputed from `sim` after each merge.
/// Among equal maxima the lexicographically smallest `(k, l)` wins.
pub fn average_linkage<F>(n: usize, sim: F, target: usize) -> Result<Clustering>
where
    F: Fn(usize, usize) -> f64,
{
    if target == 0 || target > n {
        return Err(Error::invalid(format!(
            "cluster count {target} outside 1..={n}"
        )));
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active = vec![true; n];
    let mut csim = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            csim[i * n + j] = sim(i, j);
        }
    }
    let row_best = |csim: &[f64], active: &[bool], i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in i + 1..n {
            if active[j] && best.is_none_or(|(b, _)| csim[i * n + j] > b) {
                best = Some((csim[i * n + j], j));
            }
        }
        best
    };
    let mut best: Vec<Option<(f64, usize)>> = (0..n).map(|i| row_best(&csim, &active, i)).collect();
    let mut merges = Vec::with_capacity(n - target);
    let mut remaining = n;

    while remaining > target {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if let Some((s, j)) = best[i] {
                if pick.is_none_or(|(b, _, _)| s > b) {
                    pick = Some((s, i, j));
                }
            }
        }
        let (s, k, l) = pick.expect("at least two active clusters");
        merges.push(Merge {
            kept: k,
            absorbed: l,
            similarity: s,
        });
        let absorbed = std::mem::take(&mut members[l]);
        members[k].extend(absorbed);
        active[l] = false;
        best[l] = None;
        remaining -= 1;

        for x in (0..n).filter(|&x| active[x] && x != k) {
            let (lo, hi) = (k.min(x), k.max(x));
            let mut total = 0.0;
            for &a in &members[lo] {
                for &b in &members[hi] {
                    total += sim(a.min(b), a.max(b));
                }
            }
            csim[lo * n + hi] = total / (members[lo].len() * members[hi].len()) as f64;
        }
        best[k] = row_best(&csim, &active, k);
        for i in 0..n {
            if !active[i] || i == k {
                continue;
            }
            match best[i] {
                Some((_, j)) if j == k || j == l => best[i] = row_best(&csim, &active, i),
                Some((b, j)) if i < k => {
                    let v = csim[i * n + k];
                    if v > b || (v == b && k < j) {
                        best[i] = Some((v, k));
                    }
                }
                _ => {}
            }
        }
    }

    let clusters = (0..n)
        .filter(|&i| active[i])
        .map(|i| {
            let mut m = members[i].clone();
            m.sort_unstable();
            m
        })
        .collect();
    Ok(Clustering { clusters, merges })
}

/// Symmetric pairwise view of a square similarity matrix. Directional kinds
/// are averaged over both directions.
fn symmetric_lookup(m: &SimilarityMatrix) -> impl Fn(usize, usize) -> f64 + '_ {
    let symmetric = m.spec.is_symmetric();
    move |i, j| {
        if symmetric {
            m.get(i, j)
        } else {
            0.5 * (m.get(i, j) + m.get(j, i))
        }
    }
}

/// Cluster `cr` into `pointnum` groups and keep each group's smallest-index member.
pub fn select_gahc(cr: &[Sequence], spec: &SimilaritySpec, pointnum: usize) -> Result<(ReferenceSet, Vec<Merge>)> {
    if pointnum == 0 || pointnum > cr.len() {
        return Err(Error::invalid(format!(
            "pointnum {pointnum} outside 1..={}",
            cr.len()
        )));
    }
    let m = similarity_matrix(cr, cr, spec)?;
    let clustering = average_linkage(cr.len(), symmetric_lookup(&m), pointnum)?;
    let reps: Vec<usize> = clustering.clusters.iter().map(|c| c[0]).collect();
    let method = SelectionMethod::Gahc {
        pointnum: Some(pointnum),
    };
    Ok((ReferenceSet::from_train(cr, &reps, method), clustering.merges))
}

/// `ceil(n / 10)`, at least 1.
pub fn default_pointnum(n: usize) -> usize {
    n.div_ceil(10).max(1)
}

/// Midranks of the pooled sample (1-based), plus the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Number of ways each value of U arises when `m` ranks of `m + n` distinct
/// ranks fall in the first sample.
fn u_distribution(m: usize, n: usize) -> Vec<u64> {
    // f[a][b][u]: counts for sample sizes a, b
    let max_u = m * n;
    let mut f = vec![vec![vec![0u64; max_u + 1]; n + 1]; m + 1];
    for a in 0..=m {
        for b in 0..=n {
            if a == 0 || b == 0 {
                f[a][b][0] = 1;
                continue;
            }
            for u in 0..=a * b {
                // largest rank belongs to the first sample (it beats all b) or the second
                let with = if u >= b { f[a - 1][b][u - b] } else { 0 };
                let without = f[a][b - 1][u];
                f[a][b][u] = with + without;
            }
        }
    }
    f[m][n].clone()
}

/// Pooled sample sizes at or below this use the exact null distribution when tie-free.
pub const EXACT_MAX_N: usize = 12;

/// Two-sided Mann-Whitney U test p-value.
///
/// Exact when the pooled size is at most [`EXACT_MAX_N`] and there are no
/// ties; otherwise the normal approximation with tie-corrected variance and
/// a 0.5 continuity correction.
pub fn mann_whitney_p(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("mann-whitney test needs two non-empty samples"));
    }
    if pos.iter().chain(neg).any(|v| v.is_nan()) {
        return Err(Error::invalid("mann-whitney test on NaN values"));
    }
    let (m, n) = (pos.len(), neg.len());
    let pooled: Vec<f64> = pos.iter().chain(neg).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let total = m + n;
    if ties.len() == 1 && ties[0] == total {
        return Ok(1.0);
    }
    let r1: f64 = ranks[..m].iter().sum();
    let u1 = r1 - (m * (m + 1)) as f64 / 2.0;

    if total <= EXACT_MAX_N && ties.is_empty() {
        let dist = u_distribution(m, n);
        let u = u1.round() as usize;
        let below: u64 = dist[..=u].iter().sum();
        let above: u64 = dist[u..].iter().sum();
        let all: u64 = dist.iter().sum();
        let p = (2 * below.min(above)) as f64 / all as f64;
        return Ok(p.min(1.0));
    }

    let (mf, nf, nt) = (m as f64, n as f64, total as f64);
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (nt * (nt - 1.0));
    let var = mf * nf / 12.0 * ((nt + 1.0) - tie_term);
    if var <= 0.0 {
        return Ok(1.0);
    }
    let mean = mf * nf / 2.0;
    let z = ((u1 - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

/// Benjamini-Hochberg step-up cutoff on ascending p-values: the largest
/// 1-based `k` with `p_k <= alpha * k / m`, or 0.
pub fn bh_select(pvals: &[f64], alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if pvals.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("p-values must be sorted ascending"));
    }
    let m = pvals.len() as f64;
    Ok(pvals
        .iter()
        .enumerate()
        .filter(|&(i, &p)| p <= alpha * (i + 1) as f64 / m)
        .map(|(i, _)| i + 1)
        .next_back()
        .unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MhtEntry {
    /// Index into the training list.
    pub candidate: usize,
    pub class: ClassId,
    pub p_value: f64,
    /// 1-based position in the class's ascending p-value order.
    pub rank: usize,
    pub kept: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MhtReport {
    /// Ordered by class, then rank.
    pub entries: Vec<MhtEntry>,
    /// Per class: `(class, maxindex)`.
    pub cutoffs: Vec<(ClassId, usize)>,
    pub notes: Vec<String>,
}

impl MhtReport {
    /// Tab-separated audit table: `candidate  class  p_value  rank  kept`.
    pub fn write_tsv<W: Write>(&self, mut w: W, classes: &[String]) -> std::io::Result<()> {
        writeln!(w, "candidate\tclass\tp_value\trank\tkept")?;
        for e in &self.entries {
            let class = classes.get(e.class).cloned().unwrap_or_else(|| e.class.to_string());
            writeln!(
                w,
                "{}\t{}\t{:.17e}\t{}\t{}",
                e.candidate,
                class,
                e.p_value,
                e.rank,
                u8::from(e.kept)
            )?;
        }
        Ok(())
    }
}

/// Keeps, per class, the training sequences whose similarity profile separates
/// their own class from the rest, with the false discovery rate held at `alpha`.
pub fn select_mht(
    train: &[LabeledSequence],
    spec: &SimilaritySpec,
    alpha: f64,
    exclude_self: bool,
) -> Result<(ReferenceSet, MhtReport)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let seqs: Vec<Sequence> = train.iter().map(|d| d.sequence.clone()).collect();
    let mut classes: Vec<ClassId> = train.iter().map(|d| d.label).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("hypothesis-testing selection needs at least two classes"));
    }
    let m = similarity_matrix(&seqs, &seqs, spec)?;
    // similarity of data sequence j to candidate k
    let sim = |k: usize, j: usize| m.get(j, k);

    let mut report = MhtReport::default();
    let mut chosen = Vec::new();
    for &class in &classes {
        let pos: Vec<usize> = (0..train.len()).filter(|&i| train[i].label == class).collect();
        let neg: Vec<usize> = (0..train.len()).filter(|&i| train[i].label != class).collect();
        if pos.len() < 2 {
            report.notes.push(format!(
                "class {class} has {} member(s); its test uses a degenerate positive sample",
                pos.len()
            ));
        }
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(pos.len());
        for &k in &pos {
            let sp: Vec<f64> = pos
                .iter()
                .filter(|&&j| !(exclude_self && j == k))
                .map(|&j| sim(k, j))
                .collect();
            let sn: Vec<f64> = neg.iter().map(|&j| sim(k, j)).collect();
            let p = if sp.is_empty() {
                report
                    .notes
                    .push(format!("candidate {k}: empty positive sample, p set to 1"));
                1.0
            } else {
                mann_whitney_p(&sp, &sn)?
            };
            scored.push((k, p));
        }
        // stable: equal p-values keep training order
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        let sorted_p: Vec<f64> = scored.iter().map(|&(_, p)| p).collect();
        let maxindex = bh_select(&sorted_p, alpha)?;
        report.cutoffs.push((class, maxindex));
        for (r, &(k, p)) in scored.iter().enumerate() {
            let kept = r < maxindex;
            report.entries.push(MhtEntry {
                candidate: k,
                class,
                p_value: p,
                rank: r + 1,
                kept,
            });
            if kept {
                chosen.push(k);
            }
        }
    }
    if chosen.is_empty() {
        return Err(Error::NoReferences(format!(
            "no candidate survived the BH cutoff at alpha = {alpha}; try a larger alpha"
        )));
    }
    let method = SelectionMethod::Mht { alpha, exclude_self };
    Ok((ReferenceSet::from_train(&seqs, &chosen, method), report))
}

/// Outcome of [`select_references`]; the MHT report is present for `Mht` only.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub references: ReferenceSet,
    pub mht_report: Option<MhtReport>,
}

pub fn select_references(
    train: &[LabeledSequence],
    method: &SelectionMethod,
    spec: &SimilaritySpec,
) -> Result<Selection> {
    method.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("cannot select references from an empty training set"));
    }
    let seqs = || train.iter().map(|d| d.sequence.clone()).collect::<Vec<_>>();
    let from_patterns = |sel: &PatternSelection| -> Result<ReferenceSet> {
        let mined = select_pattern_references(train, sel)?;
        if mined.is_empty() {
            return Err(Error::NoReferences(
                "no pattern passed the configured constraints".into(),
            ));
        }
        Ok(ReferenceSet {
            references: mined.iter().map(|m| m.pattern.clone()).collect(),
            provenance: mined
                .iter()
                .map(|m| Provenance::Pattern(m.pattern.clone()))
                .collect(),
            method: method.clone(),
        })
    };
    let (references, mht_report) = match method {
        SelectionMethod::All => (select_all(train)?, None),
        SelectionMethod::Gahc { pointnum } => {
            let p = pointnum.unwrap_or_else(|| default_pointnum(train.len()));
            (select_gahc(&seqs(), spec, p)?.0, None)
        }
        SelectionMethod::Mht {
            alpha,
            exclude_self,
        } => {
            let (r, rep) = select_mht(train, spec, *alpha, *exclude_self)?;
            (r, Some(rep))
        }
        SelectionMethod::Pattern { preset } => (from_patterns(&preset.selection())?, None),
        SelectionMethod::CustomPattern { selection } => (from_patterns(selection)?, None),
    };
    Ok(Selection {
        references,
        mht_report,
    })
}
