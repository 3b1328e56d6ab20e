//! Line-oriented dataset text format: `label<TAB>item item ...`.
//!
//! Blank lines and lines starting with `#` are ignored. Items are
//! whitespace-separated tokens compared by exact string equality. Classes and
//! items are interned in order of first appearance.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::seq::SequenceDataset;

pub fn parse_dataset_str(text: &str) -> Result<SequenceDataset> {
    parse_into(text, SequenceDataset::new())
}

/// Parses `text` against the class table and alphabet of `base`, so ids agree
/// with it. Instances of `base` are not carried over.
pub fn parse_dataset_str_extending(text: &str, base: &SequenceDataset) -> Result<SequenceDataset> {
    let ds = SequenceDataset {
        instances: Vec::new(),
        classes: base.classes.clone(),
        alphabet: base.alphabet.clone(),
    };
    parse_into(text, ds)
}

fn parse_into(text: &str, mut ds: SequenceDataset) -> Result<SequenceDataset> {
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((label, items)) = line.split_once('\t') else {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected `label<TAB>items`".into(),
            });
        };
        if label.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty label".into(),
            });
        }
        ds.push_tokens(label, items.split_whitespace());
    }
    if ds.is_empty() {
        return Err(Error::invalid("dataset contains no instances"));
    }
    Ok(ds)
}

pub fn parse_dataset(path: impl AsRef<Path>) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_str(&text)
}

pub fn parse_dataset_extending(path: impl AsRef<Path>, base: &SequenceDataset) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_str_extending(&text, base)
}

pub fn write_dataset<W: Write>(ds: &SequenceDataset, mut w: W) -> Result<()> {
    for (n, inst) in ds.instances.iter().enumerate() {
        let label = &ds.classes[inst.label];
        if label.is_empty() || label.starts_with('#') || label.contains(['\t', '\n', '\r']) {
            return Err(Error::invalid(format!("instance {n}: label {label:?} cannot be written")));
        }
        let mut items = Vec::with_capacity(inst.sequence.len());
        for &id in inst.sequence.iter() {
            let tok = ds
                .alphabet
                .token(id)
                .ok_or_else(|| Error::invalid(format!("instance {n}: unknown item id {id}")))?;
            if tok.is_empty() || tok.contains(char::is_whitespace) {
                return Err(Error::invalid(format!("instance {n}: item {tok:?} cannot be written")));
            }
            items.push(tok);
        }
        writeln!(w, "{label}\t{}", items.join(" ")).map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn save_dataset(ds: &SequenceDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
