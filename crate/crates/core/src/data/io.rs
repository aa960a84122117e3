//! Dataset directory layout:
//!
//! ```text
//! manifest.json        name, K, L, C, seen_classes, unseen_classes, semantic_format
//! attributes.csv       C rows of L values
//! train_features.csv   N_tr rows of K values
//! train_labels.csv     N_tr integers, one per line
//! test_features.csv    N_te rows of K values
//! test_labels.csv      N_te integers, one per line
//! ```
//!
//! Decimals are written with 17 significant digits so 64-bit values survive a round trip.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{GzslDataset, Manifest};
use crate::diffmath::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub struct DatasetFiles;

impl DatasetFiles {
    pub const MANIFEST: &'static str = "manifest.json";
    pub const ATTRIBUTES: &'static str = "attributes.csv";
    pub const TRAIN_FEATURES: &'static str = "train_features.csv";
    pub const TRAIN_LABELS: &'static str = "train_labels.csv";
    pub const TEST_FEATURES: &'static str = "test_features.csv";
    pub const TEST_LABELS: &'static str = "test_labels.csv";
}

/// Scientific notation with 17 significant digits.
pub fn format_value<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

pub fn write_matrix_csv<T: Scalar>(m: &Matrix<T>) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for i in 0..m.rows() {
        for (j, &v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_value(v));
        }
        out.push('\n');
    }
    out
}

fn write_labels(labels: &[usize]) -> String {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

/// Parses a comma-separated matrix; every non-empty line must have `cols` values.
pub fn read_matrix_csv<T: Scalar>(text: &str, cols: usize, path: &Path) -> Result<Matrix<T>> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: {field:?} is not a number", n + 1)))?;
            data.push(T::lit(v));
        }
        if data.len() - start != cols {
            return Err(Error::parse(
                path,
                format!("line {}: {} values, expected {cols}", n + 1, data.len() - start),
            ));
        }
        rows += 1;
    }
    Matrix::new(rows, cols, data)
}

fn read_labels(text: &str, path: &Path) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: {l:?} is not a class id", n + 1)))
        })
        .collect()
}

fn manifest_text(m: &Manifest) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serializes");
    s.push('\n');
    s
}

fn serialized_files<T: Scalar>(d: &GzslDataset<T>) -> [(&'static str, String); 6] {
    [
        (DatasetFiles::MANIFEST, manifest_text(&d.manifest())),
        (DatasetFiles::ATTRIBUTES, write_matrix_csv(&d.semantics)),
        (DatasetFiles::TRAIN_FEATURES, write_matrix_csv(&d.train_features)),
        (DatasetFiles::TRAIN_LABELS, write_labels(&d.train_labels)),
        (DatasetFiles::TEST_FEATURES, write_matrix_csv(&d.test_features)),
        (DatasetFiles::TEST_LABELS, write_labels(&d.test_labels)),
    ]
}

pub(super) fn fingerprint<T: Scalar>(d: &GzslDataset<T>) -> String {
    let mut h = Sha256::new();
    for (name, body) in serialized_files(d) {
        h.update(name.as_bytes());
        h.update([0u8]);
        h.update(body.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// Writes the dataset into `dir`, creating it if needed.
pub fn save_dataset<T: Scalar>(d: &GzslDataset<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in serialized_files(d) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

/// Reads and validates a dataset directory.
pub fn load_dataset<T: Scalar>(dir: &Path) -> Result<GzslDataset<T>> {
    let manifest_path = dir.join(DatasetFiles::MANIFEST);
    let manifest: Manifest = serde_json::from_str(&read(dir, DatasetFiles::MANIFEST)?)
        .map_err(|e| Error::parse(&manifest_path, e.to_string()))?;
    let semantics: Matrix<T> = read_matrix_csv(
        &read(dir, DatasetFiles::ATTRIBUTES)?,
        manifest.semantic_dim,
        &dir.join(DatasetFiles::ATTRIBUTES),
    )?;
    if semantics.rows() != manifest.classes {
        return Err(Error::Validation(format!(
            "attributes has {} rows but manifest declares C={}",
            semantics.rows(),
            manifest.classes
        )));
    }
    let k = manifest.visual_dim;
    let train_features = read_matrix_csv(&read(dir, DatasetFiles::TRAIN_FEATURES)?, k, &dir.join(DatasetFiles::TRAIN_FEATURES))?;
    let train_labels = read_labels(&read(dir, DatasetFiles::TRAIN_LABELS)?, &dir.join(DatasetFiles::TRAIN_LABELS))?;
    let test_features = read_matrix_csv(&read(dir, DatasetFiles::TEST_FEATURES)?, k, &dir.join(DatasetFiles::TEST_FEATURES))?;
    let test_labels = read_labels(&read(dir, DatasetFiles::TEST_LABELS)?, &dir.join(DatasetFiles::TEST_LABELS))?;
    let mut seen = manifest.seen_classes.clone();
    let mut unseen = manifest.unseen_classes.clone();
    seen.sort_unstable();
    unseen.sort_unstable();
    let d = GzslDataset {
        name: manifest.name,
        semantic_format: manifest.semantic_format,
        semantics,
        train_features: if train_labels.is_empty() { Matrix::zeros(0, k) } else { train_features },
        train_labels,
        test_features: if test_labels.is_empty() { Matrix::zeros(0, k) } else { test_features },
        test_labels,
        seen,
        unseen,
    };
    d.validate()?;
    Ok(d)
}
