//! Run configuration: a JSON file and command-line flags share one schema.
//! Every field is optional; a flag that is present overrides the file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use refseq::classify::{Classifier, CvConfig, PipelineConfig};
use refseq::patterns::{MiningConfig, PatternPreset, PatternSelection};
use refseq::refselect::SelectionMethod;
use refseq::seq::GapBounds;
use refseq::similarity::SimilaritySpec;

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Training dataset (`label<TAB>items` per line).
    #[arg(long, short = 'd')]
    pub dataset: Option<PathBuf>,
    /// Test dataset for `transform` and `classify`.
    #[arg(long)]
    pub test: Option<PathBuf>,

    /// Reference selection: all, gahc, mht or pattern.
    #[arg(long, visible_alias = "method")]
    pub select: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub pointnum: Option<usize>,
    /// Pattern preset: fsp, dsp, feature-mine, scip, closed, occurrence, contrast, gap-frequent.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exclude_self: Option<bool>,

    /// Similarity: sf1..sf6, jaccard, ssk, lcs-min.
    #[arg(long)]
    pub sim: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Subsequence length for ssk.
    #[arg(long)]
    pub n: Option<usize>,

    /// Classifier: knn or gnb.
    #[arg(long)]
    pub clf: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub skip_failed_folds: Option<bool>,

    #[arg(long)]
    pub minsup: Option<f64>,
    #[arg(long)]
    pub maxsize: Option<usize>,
    #[arg(long)]
    pub mingap: Option<usize>,
    #[arg(long)]
    pub maxgap: Option<usize>,

    /// Main output file (TSV); stdout when absent.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// JSON copy of the report.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub arff: Option<PathBuf>,
    /// Per-candidate test results when selecting with mht.
    #[arg(long)]
    pub mht_report: Option<PathBuf>,

    /// Worker threads; never changes results.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// JSON file with any of the fields accepted as flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: RunConfig,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `top` win over those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self, top, dataset, test, select, alpha, pointnum, preset, exclude_self, sim, gamma,
            lambda, n, clf, k, folds, repeats, seed, skip_failed_folds, minsup, maxsize, mingap,
            maxgap, out, json, csv, arff, mht_report, threads,
        )
    }
}

impl RunArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.flags.clone()))
    }
}

/// Collects every violated precondition before reporting.
#[derive(Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    pub fn take<T, E: std::fmt::Display>(&mut self, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(e.to_string());
                None
            }
        }
    }

    pub fn finish(self) -> anyhow::Result<()> {
        if self.0.is_empty() {
            return Ok(());
        }
        let list: Vec<String> = self.0.iter().map(|p| format!("  - {p}")).collect();
        bail!("invalid configuration:\n{}", list.join("\n"))
    }
}

impl RunConfig {
    pub fn require_dataset(&self, p: &mut Problems) -> Option<PathBuf> {
        if self.dataset.is_none() {
            p.push("a dataset is required (--dataset)");
        }
        self.dataset.clone()
    }

    pub fn similarity(&self, p: &mut Problems) -> Option<SimilaritySpec> {
        let kind = self.sim.as_deref().unwrap_or("jaccard");
        p.take(SimilaritySpec::from_parts(kind, self.gamma, self.lambda, self.n))
    }

    fn gap(&self, p: &mut Problems) -> Option<Option<GapBounds>> {
        match (self.mingap, self.maxgap) {
            (None, None) => Some(None),
            (min, Some(max)) => p.take(GapBounds::new(min.unwrap_or(0), max)).map(Some),
            (Some(_), None) => {
                p.push("--mingap needs --maxgap");
                None
            }
        }
    }

    /// Preset selection with any explicit mining flags applied on top; plain
    /// frequent mining with the FSP thresholds when no preset is named.
    pub fn pattern_selection(&self, p: &mut Problems) -> Option<(Option<PatternPreset>, PatternSelection)> {
        let preset = match &self.preset {
            Some(name) => Some(p.take(name.parse::<PatternPreset>())?),
            None => None,
        };
        let mut sel = match preset {
            Some(pr) => pr.selection(),
            None => PatternSelection {
                mining: MiningConfig::new(PatternPreset::FSP_MINSUP, PatternPreset::FSP_MAXSIZE),
                discriminative: vec![],
                structural: vec![],
                minint: None,
            },
        };
        if let Some(m) = self.minsup {
            sel.mining.minsup = m;
        }
        if let Some(m) = self.maxsize {
            sel.mining.maxsize = m;
        }
        if let Some(g) = self.gap(p)? {
            sel.mining.gap = Some(g);
        }
        p.take(sel.mining.validate())?;
        Some((preset, sel))
    }

    pub fn selection(&self, p: &mut Problems) -> Option<SelectionMethod> {
        let method = match self.select.as_deref().unwrap_or("all").to_ascii_lowercase().as_str() {
            "all" | "ra" | "r-a" => SelectionMethod::All,
            "gahc" => SelectionMethod::Gahc {
                pointnum: self.pointnum,
            },
            "mht" => SelectionMethod::Mht {
                alpha: self.alpha.unwrap_or(SelectionMethod::DEFAULT_ALPHA),
                exclude_self: self.exclude_self.unwrap_or(false),
            },
            "pattern" => {
                let (preset, sel) = self.pattern_selection(p)?;
                let customised = self.minsup.is_some() || self.maxsize.is_some() || self.maxgap.is_some();
                match preset {
                    Some(preset) if !customised => SelectionMethod::Pattern { preset },
                    _ => SelectionMethod::CustomPattern { selection: sel },
                }
            }
            other => {
                p.push(format!("unknown selection method `{other}` (all, gahc, mht, pattern)"));
                return None;
            }
        };
        p.take(method.validate())?;
        Some(method)
    }

    pub fn classifier(&self, p: &mut Problems) -> Option<Classifier> {
        match self.clf.as_deref().unwrap_or("knn").to_ascii_lowercase().as_str() {
            "knn" => {
                let k = self.k.unwrap_or(1);
                if k == 0 {
                    p.push("--k must be positive");
                    return None;
                }
                Some(Classifier::Knn { k })
            }
            "gnb" | "nb" => Some(Classifier::Gnb),
            other => {
                p.push(format!("unknown classifier `{other}` (knn, gnb)"));
                None
            }
        }
    }

    pub fn cv(&self, p: &mut Problems) -> Option<CvConfig> {
        let cv = CvConfig {
            folds: self.folds.unwrap_or(5),
            repeats: self.repeats.unwrap_or(5),
            seed: self.seed.unwrap_or(0),
        };
        p.take(cv.validate())?;
        Some(cv)
    }

    pub fn threads_ok(&self, p: &mut Problems) {
        if self.threads == Some(0) {
            p.push("--threads must be positive");
        }
    }

    pub fn pipeline(&self, p: &mut Problems) -> Option<PipelineConfig> {
        let selection = self.selection(p);
        let similarity = self.similarity(p);
        let classifier = self.classifier(p);
        let cv = self.cv(p);
        Some(PipelineConfig {
            selection: selection?,
            similarity: similarity?,
            classifier: classifier?,
            cv: cv?,
            skip_failed_folds: self.skip_failed_folds.unwrap_or(false),
        })
    }
}

/// The settings that determine a run's output, with defaults filled in.
/// Output paths and the thread count are left out so that reruns compare equal.
pub fn echo(cfg: &RunConfig, extra: Value) -> Value {
    let mut v = json!({ "dataset": cfg.dataset, "test": cfg.test });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
        m.retain(|_, x| !x.is_null());
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"alpha": 0.1, "folds": 3, "sim": "ssk"}"#).unwrap();
        let flags = RunConfig {
            alpha: Some(0.01),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.alpha, Some(0.01));
        assert_eq!(merged.folds, Some(3));
        assert_eq!(merged.sim.as_deref(), Some("ssk"));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alhpa": 0.1}"#).is_err());
    }

    #[test]
    fn all_problems_listed() {
        let cfg = RunConfig {
            select: Some("mht".into()),
            alpha: Some(2.0),
            sim: Some("nope".into()),
            clf: Some("svm".into()),
            folds: Some(1),
            ..Default::default()
        };
        let mut p = Problems::default();
        assert!(cfg.pipeline(&mut p).is_none());
        cfg.require_dataset(&mut p);
        let msg = p.finish().unwrap_err().to_string();
        for needle in ["alpha", "nope", "svm", "folds", "dataset"] {
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn defaults() {
        let mut p = Problems::default();
        let pl = RunConfig::default().pipeline(&mut p).unwrap();
        assert_eq!(pl.selection, SelectionMethod::All);
        assert_eq!(pl.similarity, SimilaritySpec::JaccardLcs);
        assert_eq!(pl.classifier, Classifier::Knn { k: 1 });
        assert_eq!(pl.cv, CvConfig { folds: 5, repeats: 5, seed: 0 });
        let mht = RunConfig { select: Some("mht".into()), ..Default::default() };
        assert_eq!(mht.selection(&mut p).unwrap(), SelectionMethod::mht(0.05));
    }

    #[test]
    fn fsp_preset_thresholds() {
        let mut p = Problems::default();
        let cfg = RunConfig { preset: Some("fsp".into()), ..Default::default() };
        let (_, sel) = cfg.pattern_selection(&mut p).unwrap();
        assert_eq!(sel.mining.minsup, 0.3);
        assert_eq!(sel.mining.maxsize, 3);
        let cfg = RunConfig { preset: Some("fsp".into()), minsup: Some(0.5), select: Some("pattern".into()), ..Default::default() };
        assert!(matches!(cfg.selection(&mut p).unwrap(), SelectionMethod::CustomPattern { .. }));
    }
}
