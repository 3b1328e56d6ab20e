//! KNN and Gaussian naive Bayes over feature matrices, and the repeated
//! stratified cross-validation harness that runs the whole pipeline per fold.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{transform, FeatureMatrix};
use crate::refselect::{select_references, Provenance, SelectionMethod};
use crate::seq::{ClassId, LabeledSequence, SequenceDataset};
use crate::similarity::SimilaritySpec;

/// Added to every per-feature variance in [`gnb_fit`].
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 1 }
    }
}

fn check_dims(train: &FeatureMatrix, query: &[f64]) -> Result<()> {
    if train.rows == 0 {
        return Err(Error::invalid("classifier needs at least one training row"));
    }
    if query.len() != train.cols {
        return Err(Error::invalid(format!(
            "query has {} features, training matrix has {}",
            query.len(),
            train.cols
        )));
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Majority label of the `k` nearest training rows (Euclidean).
/// Distance ties go to the lower row index, vote ties to the smaller class id.
pub fn knn_predict(train: &FeatureMatrix, query: &[f64], cfg: &KnnConfig) -> Result<ClassId> {
    check_dims(train, query)?;
    if cfg.k == 0 || cfg.k > train.rows {
        return Err(Error::invalid(format!(
            "k = {} must lie in [1, {}]",
            cfg.k, train.rows
        )));
    }
    let mut order: Vec<(f64, usize)> = (0..train.rows)
        .map(|i| (sq_dist(train.row(i), query), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes: BTreeMap<ClassId, usize> = BTreeMap::new();
    for &(_, i) in &order[..cfg.k] {
        *votes.entry(train.labels[i]).or_default() += 1;
    }
    let mut best = (0, 0);
    for (&c, &v) in &votes {
        if v > best.1 {
            best = (c, v);
        }
    }
    Ok(best.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    /// Ascending class ids the model was fitted on.
    pub classes: Vec<ClassId>,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Population variances plus [`VARIANCE_FLOOR`].
    pub variances: Vec<Vec<f64>>,
}

/// Fits on the classes present in `train`.
pub fn gnb_fit(train: &FeatureMatrix) -> Result<GnbModel> {
    let mut classes = train.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    gnb_fit_classes(train, &classes)
}

/// Fits one Gaussian per listed class; a listed class without rows is an error.
pub fn gnb_fit_classes(train: &FeatureMatrix, classes: &[ClassId]) -> Result<GnbModel> {
    if train.rows == 0 || classes.is_empty() {
        return Err(Error::invalid("naive Bayes needs at least one training row"));
    }
    let mut classes = classes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let d = train.cols;
    let mut priors = Vec::with_capacity(classes.len());
    let mut means = Vec::with_capacity(classes.len());
    let mut variances = Vec::with_capacity(classes.len());
    for &c in &classes {
        let rows: Vec<usize> = (0..train.rows).filter(|&i| train.labels[i] == c).collect();
        if rows.is_empty() {
            return Err(Error::invalid(format!("class {c} has no training rows")));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in &rows {
            for (m, x) in mean.iter_mut().zip(train.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in &rows {
            for ((v, x), m) in var.iter_mut().zip(train.row(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v = *v / n + VARIANCE_FLOOR);
        priors.push(n / train.rows as f64);
        means.push(mean);
        variances.push(var);
    }
    Ok(GnbModel {
        classes,
        priors,
        means,
        variances,
    })
}

impl GnbModel {
    /// Unnormalised log posterior per class, in `classes` order.
    pub fn log_joint(&self, query: &[f64]) -> Result<Vec<f64>> {
        let d = self.means.first().map_or(0, Vec::len);
        if query.len() != d {
            return Err(Error::invalid(format!(
                "query has {} features, model has {d}",
                query.len()
            )));
        }
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        Ok((0..self.classes.len())
            .map(|c| {
                let mut s = self.priors[c].ln();
                for ((x, m), v) in query.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                    s -= 0.5 * (ln2pi + v.ln()) + (x - m) * (x - m) / (2.0 * v);
                }
                s
            })
            .collect())
    }

    pub fn posterior(&self, query: &[f64]) -> Result<Vec<f64>> {
        let lj = self.log_joint(query)?;
        let max = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = lj.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = e.iter().sum();
        Ok(e.into_iter().map(|v| v / z).collect())
    }
}

/// Argmax of the log posterior; ties go to the smaller class id.
pub fn gnb_predict(model: &GnbModel, query: &[f64]) -> Result<ClassId> {
    let lj = model.log_joint(query)?;
    let mut best = 0;
    for c in 1..lj.len() {
        if lj[c] > lj[best] {
            best = c;
        }
    }
    Ok(model.classes[best])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Knn { k: usize },
    Gnb,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::Knn { k: 1 }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classifier::Knn { k } => write!(f, "knn(k={k})"),
            Classifier::Gnb => f.write_str("gnb"),
        }
    }
}

/// Fits on `train` and labels every row of `test`.
pub fn fit_predict(train: &FeatureMatrix, test: &FeatureMatrix, clf: &Classifier) -> Result<Vec<ClassId>> {
    if train.spec != test.spec {
        return Err(Error::invalid(
            "train and test matrices were built with different similarity settings",
        ));
    }
    match clf {
        Classifier::Knn { k } => {
            let cfg = KnnConfig { k: *k };
            (0..test.rows).map(|i| knn_predict(train, test.row(i), &cfg)).collect()
        }
        Classifier::Gnb => {
            let model = gnb_fit(train)?;
            (0..test.rows).map(|i| gnb_predict(&model, test.row(i))).collect()
        }
    }
}

pub fn accuracy(predicted: &[ClassId], truth: &[ClassId]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    correct as f64 / truth.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            repeats: 5,
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be positive"));
        }
        Ok(())
    }
}

/// `assignment[r][i]` is the fold of instance `i` in repeat `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: usize,
    pub assignment: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl FoldPlan {
    pub fn test_indices(&self, repeat: usize, fold: usize) -> Vec<usize> {
        (0..self.assignment[repeat].len())
            .filter(|&i| self.assignment[repeat][i] == fold)
            .collect()
    }

    pub fn train_indices(&self, repeat: usize, fold: usize) -> Vec<usize> {
        (0..self.assignment[repeat].len())
            .filter(|&i| self.assignment[repeat][i] != fold)
            .collect()
    }
}

/// Repeat `r` seeds ChaCha8 with `seed` on stream `r`. Classes are visited in
/// id order; each class's indices (ascending) are shuffled, then dealt
/// round-robin, with the dealing position carried over from one class to the
/// next so that overall fold sizes also differ by at most one.
pub fn stratified_folds(labels: &[ClassId], cfg: &CvConfig) -> Result<FoldPlan> {
    cfg.validate()?;
    if labels.len() < cfg.folds {
        return Err(Error::invalid(format!(
            "{} instances cannot fill {} folds",
            labels.len(),
            cfg.folds
        )));
    }
    let mut by_class: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let warnings = by_class
        .iter()
        .filter(|(_, m)| m.len() < cfg.folds)
        .map(|(c, m)| {
            format!(
                "class {c} has {} member(s) for {} folds; some folds test none of it",
                m.len(),
                cfg.folds
            )
        })
        .collect();
    let assignment = (0..cfg.repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let mut fold_of = vec![0; labels.len()];
            let mut next = 0;
            for members in by_class.values() {
                let mut m = members.clone();
                m.shuffle(&mut rng);
                for i in m {
                    fold_of[i] = next;
                    next = (next + 1) % cfg.folds;
                }
            }
            fold_of
        })
        .collect();
    Ok(FoldPlan {
        folds: cfg.folds,
        assignment,
        warnings,
    })
}

/// Everything that determines a cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub selection: SelectionMethod,
    pub similarity: SimilaritySpec,
    pub classifier: Classifier,
    pub cv: CvConfig,
    #[serde(default)]
    pub skip_failed_folds: bool,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for r in [
            self.selection.validate(),
            self.similarity.validate(),
            self.cv.validate(),
        ] {
            if let Err(e) = r {
                problems.push(e.to_string());
            }
        }
        if let Classifier::Knn { k: 0 } = self.classifier {
            problems.push("knn k must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub n_test: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub n_references: usize,
    /// References per class, for references that are training instances.
    pub references_per_class: Vec<usize>,
    /// Dataset indices of training-instance references.
    #[serde(skip)]
    pub reference_origins: Vec<usize>,
    #[serde(skip)]
    pub test_indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedFold {
    pub repeat: usize,
    pub fold: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Caller-supplied settings echoed ahead of the pipeline config.
    pub context: BTreeMap<String, String>,
    pub config: PipelineConfig,
    pub classes: Vec<String>,
    /// Ordered by (repeat, fold).
    pub folds: Vec<FoldResult>,
    pub skipped: Vec<SkippedFold>,
    pub mean_accuracy: f64,
    /// `confusion[truth][predicted]`, summed over every evaluated fold.
    pub confusion: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.context {
            writeln!(w, "# {}\t{}", tsv_field(k), tsv_field(v))?;
        }
        writeln!(w, "# selection\t{}", self.config.selection)?;
        writeln!(w, "# similarity\t{}", self.config.similarity)?;
        writeln!(w, "# classifier\t{}", self.config.classifier)?;
        writeln!(w, "# folds\t{}", self.config.cv.folds)?;
        writeln!(w, "# repeats\t{}", self.config.cv.repeats)?;
        writeln!(w, "# seed\t{}", self.config.cv.seed)?;
        writeln!(w, "# skip_failed_folds\t{}", self.config.skip_failed_folds)?;
        for warn in &self.warnings {
            writeln!(w, "# warning\t{}", tsv_field(warn))?;
        }
        writeln!(w, "repeat\tfold\tn_test\tcorrect\taccuracy\treferences")?;
        for f in &self.folds {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                f.repeat, f.fold, f.n_test, f.correct, f.accuracy, f.n_references
            )?;
        }
        for s in &self.skipped {
            writeln!(w, "{}\t{}\tskipped\t\t\t{}", s.repeat, s.fold, tsv_field(&s.error))?;
        }
        writeln!(w, "mean\t\t\t\t{}\t", self.mean_accuracy)?;
        write!(w, "confusion")?;
        for c in &self.classes {
            write!(w, "\t{}", tsv_field(c))?;
        }
        writeln!(w)?;
        for (t, row) in self.confusion.iter().enumerate() {
            write!(w, "{}", tsv_field(&self.classes[t]))?;
            for v in row {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

struct FoldOutcome {
    result: FoldResult,
    predictions: Vec<(ClassId, ClassId)>,
}

fn run_fold(
    data: &SequenceDataset,
    plan: &FoldPlan,
    cfg: &PipelineConfig,
    repeat: usize,
    fold: usize,
) -> Result<FoldOutcome> {
    let train_idx = plan.train_indices(repeat, fold);
    let test_idx = plan.test_indices(repeat, fold);
    let pick = |idx: &[usize]| -> Vec<LabeledSequence> {
        idx.iter().map(|&i| data.instances[i].clone()).collect()
    };
    let train = pick(&train_idx);
    let test = pick(&test_idx);
    let sel = select_references(&train, &cfg.selection, &cfg.similarity)?;
    let refs = sel.references;
    let mut references_per_class = vec![0; data.num_classes()];
    let mut reference_origins = Vec::new();
    for p in &refs.provenance {
        if let Provenance::Train(i) = p {
            reference_origins.push(train_idx[*i]);
            references_per_class[train[*i].label] += 1;
        }
    }
    let alphabet = Some(&data.alphabet);
    let xtrain = transform(&train, &refs, &cfg.similarity, alphabet)?;
    let xtest = transform(&test, &refs, &cfg.similarity, alphabet)?;
    let pred = fit_predict(&xtrain, &xtest, &cfg.classifier)?;
    let truth: Vec<ClassId> = test.iter().map(|d| d.label).collect();
    let correct = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(FoldOutcome {
        result: FoldResult {
            repeat,
            fold,
            n_test: test.len(),
            correct,
            accuracy: accuracy(&pred, &truth),
            n_references: refs.len(),
            references_per_class,
            reference_origins,
            test_indices: test_idx,
        },
        predictions: truth.into_iter().zip(pred).collect(),
    })
}

/// Repeated stratified cross-validation of the full select, transform, fit,
/// predict pipeline. Reference selection sees only the training fold.
pub fn cross_validate(data: &SequenceDataset, cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot cross-validate an empty dataset"));
    }
    let plan = stratified_folds(&data.labels(), &cfg.cv)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.cv.repeats)
        .flat_map(|r| (0..cfg.cv.folds).map(move |f| (r, f)))
        .collect();
    let run = |&(r, f): &(usize, usize)| run_fold(data, &plan, cfg, r, f);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<FoldOutcome>> = jobs.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<FoldOutcome>> = jobs.iter().map(run).collect();

    let k = data.num_classes();
    let mut confusion = vec![vec![0; k]; k];
    let mut folds = Vec::new();
    let mut skipped = Vec::new();
    for (&(repeat, fold), out) in jobs.iter().zip(outcomes) {
        match out {
            Ok(o) => {
                for (t, p) in o.predictions {
                    confusion[t][p] += 1;
                }
                folds.push(o.result);
            }
            Err(e) if cfg.skip_failed_folds => skipped.push(SkippedFold {
                repeat,
                fold,
                error: e.to_string(),
            }),
            Err(e) => {
                return Err(Error::Fold {
                    repeat,
                    fold,
                    source: Box::new(e),
                })
            }
        }
    }
    if folds.is_empty() {
        return Err(Error::invalid("every fold failed"));
    }
    let mean_accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    Ok(EvalReport {
        context: BTreeMap::new(),
        config: cfg.clone(),
        classes: data.classes.clone(),
        folds,
        skipped,
        mean_accuracy,
        confusion,
        warnings: plan.warnings,
    })
}
