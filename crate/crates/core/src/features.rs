//! Similarity-to-reference feature matrices and their CSV/ARFF exports.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refselect::ReferenceSet;
use crate::seq::{Alphabet, ClassId, LabeledSequence, Sequence};
use crate::similarity::{similarity_matrix, SimilaritySpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub values: Vec<f64>,
    pub labels: Vec<ClassId>,
    pub feature_names: Vec<String>,
    pub spec: SimilaritySpec,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }
}

/// Embeds every sequence of `data` as its similarities to the references.
pub fn transform(
    data: &[LabeledSequence],
    refs: &ReferenceSet,
    spec: &SimilaritySpec,
    alphabet: Option<&Alphabet>,
) -> Result<FeatureMatrix> {
    if data.is_empty() || refs.is_empty() {
        return Err(Error::invalid("transform needs non-empty data and references"));
    }
    let seqs: Vec<Sequence> = data.iter().map(|d| d.sequence.clone()).collect();
    let m = similarity_matrix(&seqs, &refs.references, spec)?;
    if let Some(bad) = m.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::At {
            row: bad / m.cols,
            col: bad % m.cols,
            source: Box::new(Error::invalid("non-finite similarity")),
        });
    }
    Ok(FeatureMatrix {
        rows: m.rows,
        cols: m.cols,
        values: m.values,
        labels: data.iter().map(|d| d.label).collect(),
        feature_names: refs.feature_names(alphabet),
        spec: *spec,
    })
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn class_name(classes: &[String], c: ClassId) -> String {
    classes.get(c).cloned().unwrap_or_else(|| c.to_string())
}

/// CSV with header `f0,...,f{n-1},label` and one row per instance.
pub fn write_csv<W: Write>(m: &FeatureMatrix, classes: &[String], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..m.cols).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    wr.write_record(&header)?;
    for i in 0..m.rows {
        let mut rec: Vec<String> = m.row(i).iter().map(|&v| fmt_value(v)).collect();
        rec.push(class_name(classes, m.labels[i]));
        wr.write_record(&rec)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn export_csv(m: &FeatureMatrix, classes: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(m, classes, BufWriter::new(f)).map_err(|e| match e {
        Error::Csv(c) if c.is_io_error() => Error::io(path, std::io::Error::other(c.to_string())),
        other => other,
    })
}

/// Rows read back from a feature CSV: values plus the label column as text.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub cols: usize,
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

pub fn read_csv<R: Read>(r: R) -> Result<CsvTable> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.is_empty() || &header[header.len() - 1] != "label" {
        return Err(Error::Parse {
            line: 1,
            message: "last column must be `label`".into(),
        });
    }
    let cols = header.len() - 1;
    let mut table = CsvTable {
        cols,
        values: Vec::new(),
        labels: Vec::new(),
    };
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = (0..cols)
            .map(|j| {
                rec[j].parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    message: format!("column {j}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        table.values.push(row);
        table.labels.push(rec[cols].to_string());
    }
    Ok(table)
}

fn arff_quote(s: &str) -> String {
    let plain = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

/// ARFF with numeric attributes `f0..` and a nominal `class` attribute that
/// enumerates every entry of `classes`, present in this matrix or not.
pub fn write_arff<W: Write>(m: &FeatureMatrix, classes: &[String], relation: &str, mut w: W) -> std::io::Result<()> {
    writeln!(w, "% similarity: {}", m.spec)?;
    for (j, name) in m.feature_names.iter().enumerate() {
        writeln!(w, "% f{j} = {name}")?;
    }
    writeln!(w, "@RELATION {}", arff_quote(relation))?;
    writeln!(w)?;
    for j in 0..m.cols {
        writeln!(w, "@ATTRIBUTE f{j} NUMERIC")?;
    }
    let nominal: Vec<String> = classes.iter().map(|c| arff_quote(c)).collect();
    writeln!(w, "@ATTRIBUTE class {{{}}}", nominal.join(","))?;
    writeln!(w)?;
    writeln!(w, "@DATA")?;
    for i in 0..m.rows {
        let mut rec: Vec<String> = m.row(i).iter().map(|&v| fmt_value(v)).collect();
        rec.push(arff_quote(&class_name(classes, m.labels[i])));
        writeln!(w, "{}", rec.join(","))?;
    }
    Ok(())
}

pub fn export_arff(m: &FeatureMatrix, classes: &[String], relation: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_arff(m, classes, relation, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
