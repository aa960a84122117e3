//! GZSL datasets: in-memory representation, validation, on-disk format and a synthetic
//! benchmark generator.
//!
//! Class ids are contiguous `0..C`. Semantic vectors are per class. Training samples come
//! from seen classes only; the test split holds samples of both seen and unseen classes.

mod io;
mod synthetic;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::diffmath::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use io::{format_value, load_dataset, read_matrix_csv, save_dataset, write_matrix_csv, DatasetFiles};
pub use synthetic::{make_synthetic, SyntheticSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticFormat {
    Continuous,
    Binary,
}

/// Contents of `manifest.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    #[serde(rename = "K")]
    pub visual_dim: usize,
    #[serde(rename = "L")]
    pub semantic_dim: usize,
    #[serde(rename = "C")]
    pub classes: usize,
    pub seen_classes: Vec<usize>,
    pub unseen_classes: Vec<usize>,
    pub semantic_format: SemanticFormat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GzslDataset<T> {
    pub name: String,
    pub semantic_format: SemanticFormat,
    /// `C × L`, row `c` is the semantic vector of class `c`.
    pub semantics: Matrix<T>,
    pub train_features: Matrix<T>,
    pub train_labels: Vec<usize>,
    pub test_features: Matrix<T>,
    pub test_labels: Vec<usize>,
    /// Sorted seen class ids.
    pub seen: Vec<usize>,
    /// Sorted unseen class ids.
    pub unseen: Vec<usize>,
}

impl<T: Scalar> GzslDataset<T> {
    pub fn visual_dim(&self) -> usize {
        self.train_features.cols()
    }

    pub fn semantic_dim(&self) -> usize {
        self.semantics.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.semantics.rows()
    }

    pub fn is_unseen(&self, class: usize) -> bool {
        self.unseen.binary_search(&class).is_ok()
    }

    pub fn is_seen(&self, class: usize) -> bool {
        self.seen.binary_search(&class).is_ok()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            name: self.name.clone(),
            visual_dim: self.visual_dim(),
            semantic_dim: self.semantic_dim(),
            classes: self.num_classes(),
            seen_classes: self.seen.clone(),
            unseen_classes: self.unseen.clone(),
            semantic_format: self.semantic_format,
        }
    }

    /// Semantic vector of one class.
    pub fn per_class_semantic(&self, class: usize) -> Result<&[T]> {
        if class >= self.num_classes() {
            return Err(Error::Contract(format!(
                "class {class} out of range for {} classes",
                self.num_classes()
            )));
        }
        Ok(self.semantics.row(class))
    }

    /// Stacks the semantic vectors of the given labels.
    pub fn semantics_for(&self, labels: &[usize]) -> Matrix<T> {
        self.semantics.select_rows(labels)
    }

    /// Checks every structural rule; the error message names the violated rule.
    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes();
        let fail = |msg: String| Err(Error::Validation(msg));
        if c == 0 {
            return fail("dataset has no classes".into());
        }
        let seen: BTreeSet<usize> = self.seen.iter().copied().collect();
        let unseen: BTreeSet<usize> = self.unseen.iter().copied().collect();
        if seen.len() != self.seen.len() || unseen.len() != self.unseen.len() {
            return fail("duplicate class id in split lists".into());
        }
        if let Some(&both) = seen.intersection(&unseen).next() {
            return fail(format!("split overlap: class {both} is both seen and unseen"));
        }
        if let Some(&bad) = seen.iter().chain(&unseen).find(|&&k| k >= c) {
            return fail(format!("split class {bad} out of range for C={c}"));
        }
        if seen.len() + unseen.len() != c {
            let missing = (0..c).find(|k| !seen.contains(k) && !unseen.contains(k)).unwrap_or(0);
            return fail(format!("split coverage: class {missing} is neither seen nor unseen"));
        }
        if seen.is_empty() {
            return fail("split coverage: no seen classes".into());
        }
        if !self.semantics.is_finite() {
            return fail("non-finite attribute".into());
        }
        if self.semantic_format == SemanticFormat::Binary
            && self.semantics.as_slice().iter().any(|&v| v != T::zero() && v != T::one())
        {
            return fail("binary attribute not in {0,1}".into());
        }
        let k = self.train_features.cols();
        if self.test_features.cols() != k && !self.test_features.is_empty() {
            return fail(format!(
                "feature width mismatch: train K={k}, test K={}",
                self.test_features.cols()
            ));
        }
        if self.train_labels.len() != self.train_features.rows() {
            return fail(format!(
                "train label count {} differs from {} feature rows",
                self.train_labels.len(),
                self.train_features.rows()
            ));
        }
        if self.test_labels.len() != self.test_features.rows() {
            return fail(format!(
                "test label count {} differs from {} feature rows",
                self.test_labels.len(),
                self.test_features.rows()
            ));
        }
        if let Some(&bad) = self.train_labels.iter().chain(&self.test_labels).find(|&&l| l >= c) {
            return fail(format!("label {bad} out of range for C={c}"));
        }
        if let Some(&bad) = self.train_labels.iter().find(|l| !seen.contains(l)) {
            return fail(format!("train label {bad} not in seen set"));
        }
        if !self.train_features.is_finite() {
            return fail("non-finite train feature".into());
        }
        if !self.test_features.is_finite() {
            return fail("non-finite test feature".into());
        }
        let tested: BTreeSet<usize> = self.test_labels.iter().copied().collect();
        if let Some(&bad) = unseen.iter().find(|u| !tested.contains(u)) {
            return fail(format!("unseen class {bad} has no test samples"));
        }
        Ok(())
    }

    /// Keeps only the listed classes and remaps them to `0..n` in ascending order.
    pub fn restrict_classes(&self, keep: &[usize]) -> Result<Self> {
        let keep: BTreeSet<usize> = keep.iter().copied().collect();
        if let Some(&bad) = keep.iter().find(|&&k| k >= self.num_classes()) {
            return Err(Error::Contract(format!("class {bad} out of range for {} classes", self.num_classes())));
        }
        let order: Vec<usize> = keep.iter().copied().collect();
        let remap = |c: usize| order.binary_search(&c).ok();
        let filter = |features: &Matrix<T>, labels: &[usize]| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| keep.contains(&labels[i])).collect();
            let labels = idx.iter().map(|&i| remap(labels[i]).expect("kept label")).collect::<Vec<_>>();
            (features.select_rows(&idx), labels)
        };
        let (train_features, train_labels) = filter(&self.train_features, &self.train_labels);
        let (test_features, test_labels) = filter(&self.test_features, &self.test_labels);
        let out = Self {
            name: self.name.clone(),
            semantic_format: self.semantic_format,
            semantics: self.semantics.select_rows(&order),
            train_features,
            train_labels,
            test_features,
            test_labels,
            seen: self.seen.iter().filter_map(|&c| remap(c)).collect(),
            unseen: self.unseen.iter().filter_map(|&c| remap(c)).collect(),
        };
        out.validate()?;
        Ok(out)
    }

    /// SHA-256 over the canonical serialization of every dataset file.
    pub fn fingerprint(&self) -> String {
        io::fingerprint(self)
    }

    /// Train rows grouped by label, in label order.
    pub fn train_indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.train_labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}
