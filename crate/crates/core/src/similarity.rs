//! Sequence-to-sequence similarity functions and pairwise matrices.
//!
//! Directional kinds (`Sf1`..`Sf5`) treat the first argument as the data
//! sequence `s` and the second as the reference `t`. All arithmetic is `f64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::{is_subsequence, min_window, occount_nonoverlap, ItemId, Sequence};

/// Which similarity function to apply, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimilaritySpec {
    /// 1 if the reference is contained in the sequence.
    Sf1,
    /// 1 if some window of the sequence is within `gamma * |t|` edits of the reference.
    Sf2 { gamma: f64 },
    /// Cohesion `|t| / W(t, s)` when contained.
    Sf3,
    /// Occurrence count when contained (greedy non-overlapping).
    Sf4,
    /// Non-overlapping occurrence count.
    Sf5,
    /// `|LCS| / max(|s|, |t|)`.
    Sf6,
    /// `|LCS| / (|s| + |t| - |LCS|)`.
    JaccardLcs,
    /// Normalized string subsequence kernel.
    Ssk { n: usize, lambda: f64 },
    /// `|LCS| / min(|s|, |t|)`.
    LcsMin,
}

impl SimilaritySpec {
    pub const DEFAULT_SSK_N: usize = 1;
    pub const DEFAULT_SSK_LAMBDA: f64 = 0.5;

    pub fn ssk_default() -> Self {
        SimilaritySpec::Ssk {
            n: Self::DEFAULT_SSK_N,
            lambda: Self::DEFAULT_SSK_LAMBDA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SimilaritySpec::Sf2 { gamma } if !(0.0..=1.0).contains(&gamma) => Err(
                Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")),
            ),
            SimilaritySpec::Ssk { n, lambda } => {
                if n == 0 {
                    return Err(Error::invalid("ssk subsequence length n must be positive"));
                }
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(Error::invalid(format!(
                        "ssk lambda must lie strictly inside (0, 1), got {lambda}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether `evaluate(s, t) == evaluate(t, s)` for all inputs.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            SimilaritySpec::Sf6
                | SimilaritySpec::JaccardLcs
                | SimilaritySpec::Ssk { .. }
                | SimilaritySpec::LcsMin
        )
    }

    /// Whether values are confined to `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        !matches!(self, SimilaritySpec::Sf4 | SimilaritySpec::Sf5)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimilaritySpec::Sf1 => "sf1",
            SimilaritySpec::Sf2 { .. } => "sf2",
            SimilaritySpec::Sf3 => "sf3",
            SimilaritySpec::Sf4 => "sf4",
            SimilaritySpec::Sf5 => "sf5",
            SimilaritySpec::Sf6 => "sf6",
            SimilaritySpec::JaccardLcs => "jaccard",
            SimilaritySpec::Ssk { .. } => "ssk",
            SimilaritySpec::LcsMin => "lcs-min",
        }
    }

    /// Builds a spec from a kind name, filling unspecified parameters with defaults
    /// (`gamma` 0.0, `n` 1, `lambda` 0.5).
    pub fn from_parts(
        kind: &str,
        gamma: Option<f64>,
        lambda: Option<f64>,
        n: Option<usize>,
    ) -> Result<Self> {
        let spec = match kind.to_ascii_lowercase().as_str() {
            "sf1" => SimilaritySpec::Sf1,
            "sf2" => SimilaritySpec::Sf2 {
                gamma: gamma.unwrap_or(0.0),
            },
            "sf3" => SimilaritySpec::Sf3,
            "sf4" => SimilaritySpec::Sf4,
            "sf5" => SimilaritySpec::Sf5,
            "sf6" => SimilaritySpec::Sf6,
            "jaccard" | "jaccard-lcs" | "jaccard_lcs" => SimilaritySpec::JaccardLcs,
            "ssk" => SimilaritySpec::Ssk {
                n: n.unwrap_or(Self::DEFAULT_SSK_N),
                lambda: lambda.unwrap_or(Self::DEFAULT_SSK_LAMBDA),
            },
            "lcs-min" | "lcs_min" | "norm-lcs" => SimilaritySpec::LcsMin,
            other => return Err(Error::invalid(format!("unknown similarity kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SimilaritySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilaritySpec::Sf2 { gamma } => write!(f, "sf2(gamma={gamma})"),
            SimilaritySpec::Ssk { n, lambda } => write!(f, "ssk(n={n},lambda={lambda})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SimilaritySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimilaritySpec::from_parts(s, None, None, None)
    }
}

pub fn lcs_len(s: &[ItemId], t: &[ItemId]) -> usize {
    let (long, short) = if s.len() >= t.len() { (s, t) } else { (t, s) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for &a in long {
        for (j, &b) in short.iter().enumerate() {
            cur[j + 1] = if a == b {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Levenshtein distance with unit costs.
pub fn edit_distance(a: &[ItemId], b: &[ItemId]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn jaccard_lcs(s: &[ItemId], t: &[ItemId]) -> Result<f64> {
    if s.is_empty() && t.is_empty() {
        return Err(Error::invalid("jaccard similarity of two empty sequences"));
    }
    let l = lcs_len(s, t);
    Ok(l as f64 / (s.len() + t.len() - l) as f64)
}

pub fn lcs_min_norm(s: &[ItemId], t: &[ItemId]) -> Result<f64> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::invalid("normalized LCS with an empty operand"));
    }
    Ok(lcs_len(s, t) as f64 / s.len().min(t.len()) as f64)
}

fn check_ssk(n: usize, lambda: f64) -> Result<()> {
    SimilaritySpec::Ssk { n, lambda }.validate()
}

/// Unnormalized string subsequence kernel `K_n(s, t)`.
///
/// Every common length-`n` subsequence contributes `lambda^(span_s + span_t)`
/// per pair of embeddings. Computed with the `O(n |s| |t|)` auxiliary-kernel
/// recursion over prefixes.
pub fn ssk_raw(s: &[ItemId], t: &[ItemId], n: usize, lambda: f64) -> Result<f64> {
    check_ssk(n, lambda)?;
    let (ls, lt) = (s.len(), t.len());
    if ls < n || lt < n {
        return Ok(0.0);
    }
    let w = lt + 1;
    // kp[i * w + j] holds K'_{l}(s[..i], t[..j]); level 0 is identically 1.
    let mut kp = vec![1.0f64; (ls + 1) * w];
    for level in 1..n {
        let mut next = vec![0.0f64; (ls + 1) * w];
        for i in level..=ls {
            let mut kpp = 0.0;
            for j in level..=lt {
                kpp *= lambda;
                if s[i - 1] == t[j - 1] {
                    kpp += lambda * lambda * kp[(i - 1) * w + (j - 1)];
                }
                next[i * w + j] = lambda * next[(i - 1) * w + j] + kpp;
            }
        }
        kp = next;
    }
    let mut k = 0.0;
    for i in 1..=ls {
        for j in 1..=lt {
            if s[i - 1] == t[j - 1] {
                k += lambda * lambda * kp[(i - 1) * w + (j - 1)];
            }
        }
    }
    Ok(k)
}

/// `K_n(s,t) / sqrt(K_n(s,s) K_n(t,t))`, or 0 when either self-kernel vanishes.
pub fn ssk_normalized(s: &[ItemId], t: &[ItemId], n: usize, lambda: f64) -> Result<f64> {
    let kss = ssk_raw(s, s, n, lambda)?;
    let ktt = ssk_raw(t, t, n, lambda)?;
    if kss <= 0.0 || ktt <= 0.0 {
        return Ok(0.0);
    }
    let v = ssk_raw(s, t, n, lambda)? / (kss * ktt).sqrt();
    Ok(v.clamp(0.0, 1.0))
}

/// Whether some contiguous window of `s` of length `|t|` is within `gamma * |t|` edits of `t`.
fn has_similar_window(s: &[ItemId], t: &[ItemId], gamma: f64) -> bool {
    if t.is_empty() {
        return true;
    }
    if s.len() < t.len() {
        return false;
    }
    let budget = gamma * t.len() as f64;
    s.windows(t.len())
        .any(|w| edit_distance(w, t) as f64 <= budget)
}

/// Evaluates `spec` with `s` as the data sequence and `t` as the reference.
pub fn evaluate(spec: &SimilaritySpec, s: &[ItemId], t: &[ItemId]) -> Result<f64> {
    let v = match *spec {
        SimilaritySpec::Sf1 => f64::from(u8::from(is_subsequence(t, s))),
        SimilaritySpec::Sf2 { gamma } => {
            spec.validate()?;
            f64::from(u8::from(has_similar_window(s, t, gamma)))
        }
        SimilaritySpec::Sf3 => match min_window(t, s)? {
            Some(w) => t.len() as f64 / w as f64,
            None => 0.0,
        },
        SimilaritySpec::Sf4 | SimilaritySpec::Sf5 => occount_nonoverlap(t, s)? as f64,
        SimilaritySpec::Sf6 => {
            let denom = s.len().max(t.len());
            if denom == 0 {
                return Err(Error::invalid("sf6 of two empty sequences"));
            }
            lcs_len(s, t) as f64 / denom as f64
        }
        SimilaritySpec::JaccardLcs => jaccard_lcs(s, t)?,
        SimilaritySpec::Ssk { n, lambda } => ssk_normalized(s, t, n, lambda)?,
        SimilaritySpec::LcsMin => lcs_min_norm(s, t)?,
    };
    Ok(v)
}

/// Dense row-major `|A| x |B|` matrix of similarities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub spec: SimilaritySpec,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

fn compute_row(spec: &SimilaritySpec, s: &Sequence, b: &[Sequence], i: usize) -> Result<Vec<f64>> {
    b.iter()
        .enumerate()
        .map(|(j, t)| {
            evaluate(spec, s, t).map_err(|e| Error::At {
                row: i,
                col: j,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `values[i][j] = evaluate(spec, a[i], b[j])`.
///
/// Rows are computed independently (in parallel with the `parallel` feature);
/// the result does not depend on the schedule. On failure the error for the
/// first offending entry in row-major order is returned.
pub fn similarity_matrix(a: &[Sequence], b: &[Sequence], spec: &SimilaritySpec) -> Result<SimilarityMatrix> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("similarity matrix needs non-empty inputs"));
    }
    spec.validate()?;
    #[cfg(feature = "parallel")]
    let rows: Vec<Result<Vec<f64>>> = {
        use rayon::prelude::*;
        a.par_iter()
            .enumerate()
            .map(|(i, s)| compute_row(spec, s, b, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Result<Vec<f64>>> = a
        .iter()
        .enumerate()
        .map(|(i, s)| compute_row(spec, s, b, i))
        .collect();

    let mut values = Vec::with_capacity(a.len() * b.len());
    for row in rows {
        values.extend(row?);
    }
    Ok(SimilarityMatrix {
        rows: a.len(),
        cols: b.len(),
        values,
        spec: *spec,
    })
}
