//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes plain values and returns a JSON string. The `*_json`
//! functions hold the logic and are callable (and tested) natively; the
//! `#[wasm_bindgen]` wrappers only convert errors into JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use refseq::classify::{cross_validate, Classifier, CvConfig, PipelineConfig};
use refseq::features::transform;
use refseq::refselect::{select_references, SelectionMethod};
use refseq::seq::Alphabet;
use refseq::similarity::{evaluate, SimilaritySpec};
use refseq::synth::synth_gen;

#[derive(Serialize)]
struct Score {
    kind: String,
    value: f64,
}

/// Every similarity kind for two whitespace-separated token strings.
pub fn similarities_json(s: &str, t: &str, gamma: f64, lambda: f64, n: usize) -> Result<String, String> {
    let mut alphabet = Alphabet::new();
    let (s, t) = (alphabet.sequence_from_text(s), alphabet.sequence_from_text(t));
    let kinds = ["sf1", "sf2", "sf3", "sf4", "sf5", "sf6", "jaccard", "ssk", "lcs-min"];
    let mut out = Vec::new();
    for kind in kinds {
        let spec = SimilaritySpec::from_parts(kind, Some(gamma), Some(lambda), Some(n)).map_err(|e| e.to_string())?;
        let value = evaluate(&spec, &s, &t).map_err(|e| e.to_string())?;
        out.push(Score {
            kind: spec.to_string(),
            value,
        });
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn method(name: &str, alpha: f64) -> Result<SelectionMethod, String> {
    match name {
        "all" => Ok(SelectionMethod::All),
        "gahc" => Ok(SelectionMethod::Gahc { pointnum: None }),
        "mht" => Ok(SelectionMethod::mht(alpha)),
        other => Err(format!("unknown selection method `{other}`")),
    }
}

#[derive(Serialize)]
struct Embedding {
    sequences: Vec<String>,
    labels: Vec<usize>,
    classes: Vec<String>,
    references: Vec<usize>,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Synthetic dataset, its selected references, and the similarity matrix.
#[allow(clippy::too_many_arguments)]
pub fn embed_json(
    classes: usize,
    per_class: usize,
    motif_len: usize,
    noise_len: usize,
    seed: u64,
    selection: &str,
    alpha: f64,
    sim: &str,
) -> Result<String, String> {
    let ds = synth_gen(classes, per_class, motif_len, noise_len, seed).map_err(|e| e.to_string())?;
    let spec = SimilaritySpec::from_parts(sim, None, None, None).map_err(|e| e.to_string())?;
    let sel = select_references(&ds.instances, &method(selection, alpha)?, &spec).map_err(|e| e.to_string())?;
    let m = transform(&ds.instances, &sel.references, &spec, Some(&ds.alphabet)).map_err(|e| e.to_string())?;
    let out = Embedding {
        sequences: ds.instances.iter().map(|d| ds.alphabet.render(&d.sequence)).collect(),
        labels: ds.labels(),
        classes: ds.classes.clone(),
        references: sel.references.train_indices(),
        rows: m.rows,
        cols: m.cols,
        values: m.values,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Cross-validation report for a synthetic dataset.
#[allow(clippy::too_many_arguments)]
pub fn cv_json(
    classes: usize,
    per_class: usize,
    motif_len: usize,
    noise_len: usize,
    seed: u64,
    selection: &str,
    alpha: f64,
    sim: &str,
    k: usize,
    folds: usize,
    repeats: usize,
) -> Result<String, String> {
    let ds = synth_gen(classes, per_class, motif_len, noise_len, seed).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        selection: method(selection, alpha)?,
        similarity: SimilaritySpec::from_parts(sim, None, None, None).map_err(|e| e.to_string())?,
        classifier: Classifier::Knn { k },
        cv: CvConfig { folds, repeats, seed },
        skip_failed_folds: true,
    };
    let report = cross_validate(&ds, &cfg).map_err(|e| e.to_string())?;
    report.to_json().map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn similarities(s: &str, t: &str, gamma: f64, lambda: f64, n: usize) -> Result<String, JsValue> {
    similarities_json(s, t, gamma, lambda, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn embed(
    classes: usize,
    per_class: usize,
    motif_len: usize,
    noise_len: usize,
    seed: u32,
    selection: &str,
    alpha: f64,
    sim: &str,
) -> Result<String, JsValue> {
    embed_json(classes, per_class, motif_len, noise_len, seed.into(), selection, alpha, sim)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn cross_validation(
    classes: usize,
    per_class: usize,
    motif_len: usize,
    noise_len: usize,
    seed: u32,
    selection: &str,
    alpha: f64,
    sim: &str,
    k: usize,
    folds: usize,
    repeats: usize,
) -> Result<String, JsValue> {
    cv_json(classes, per_class, motif_len, noise_len, seed.into(), selection, alpha, sim, k, folds, repeats)
        .map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn worked_pair() {
        let v: Value = serde_json::from_str(&similarities_json("a b c d e", "e c d c", 0.2, 0.5, 1).unwrap()).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 9);
        let get = |k: &str| arr.iter().find(|x| x["kind"] == k).unwrap()["value"].as_f64().unwrap();
        assert!((get("jaccard") - 2.0 / 7.0).abs() < 1e-12);
        assert_eq!(get("lcs-min"), 0.5);
    }

    #[test]
    fn embedding_shape() {
        let v: Value = serde_json::from_str(&embed_json(2, 6, 3, 4, 1, "gahc", 0.05, "jaccard").unwrap()).unwrap();
        assert_eq!(v["rows"], 12);
        assert_eq!(v["cols"], 2);
        assert_eq!(v["values"].as_array().unwrap().len(), 24);
        assert!(embed_json(2, 6, 3, 4, 1, "nope", 0.05, "jaccard").is_err());
    }

    #[test]
    fn cv_report() {
        let v: Value = serde_json::from_str(&cv_json(2, 10, 4, 4, 3, "all", 0.05, "jaccard", 1, 5, 1).unwrap()).unwrap();
        assert_eq!(v["folds"].as_array().unwrap().len(), 5);
    }
}
