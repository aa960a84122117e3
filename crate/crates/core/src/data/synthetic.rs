use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GzslDataset, SemanticFormat};
use crate::diffmath::Matrix;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Parameters of the synthetic benchmark.
///
/// Class semantics are standard normal (thresholded at 0 for binary attributes). Visual
/// samples follow `x = max(0, aW + b) + σε` with one ground-truth `(W, b)` shared by all
/// classes and per-sample Gaussian `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: String,
    pub visual_dim: usize,
    pub semantic_dim: usize,
    pub classes: usize,
    pub unseen: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub noise_scale: f64,
    pub binary: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// The standard desk-scale benchmark: K=16, L=8, C=15 with 5 unseen classes.
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            visual_dim: 16,
            semantic_dim: 8,
            classes: 15,
            unseen: 5,
            train_per_class: 200,
            test_per_class: 50,
            noise_scale: 0.5,
            binary: false,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.visual_dim == 0 || self.semantic_dim == 0 {
            return fail("visual and semantic dimensions must be at least 1".into());
        }
        if self.classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.unseen >= self.classes {
            return fail(format!(
                "unseen classes must be a proper subset: {} unseen of {} classes",
                self.unseen, self.classes
            ));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return fail("samples per class must be at least 1".into());
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return fail(format!("noise scale must be finite and >= 0, got {}", self.noise_scale));
        }
        Ok(())
    }
}

fn normal<R: rand::Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Generates a dataset; identical specs give bitwise-identical datasets.
pub fn make_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<GzslDataset<T>> {
    spec.validate()?;
    let (k, l, c) = (spec.visual_dim, spec.semantic_dim, spec.classes);

    let mut rng = seeded(spec.seed, 100);
    let semantics = Matrix::from_fn(c, l, |_, _| {
        let v = normal(&mut rng);
        if spec.binary {
            if v > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            v
        }
    });
    let scale = 1.0 / (l as f64).sqrt();
    let weight = Matrix::from_fn(l, k, |_, _| normal(&mut rng) * scale);
    let bias = Matrix::from_fn(1, k, |_, _| 0.5 * normal(&mut rng));
    let means = semantics.matmul(&weight)?.add_row(&bias)?.map(|v| v.max(0.0));

    let mut order: Vec<usize> = (0..c).collect();
    order.shuffle(&mut rng);
    let mut unseen: Vec<usize> = order[..spec.unseen].to_vec();
    unseen.sort_unstable();
    let seen: Vec<usize> = (0..c).filter(|x| unseen.binary_search(x).is_err()).collect();

    let mut sample_rng = seeded(spec.seed, 101);
    let mut draw = |classes: &[usize], per_class: usize| {
        let mut data = Vec::with_capacity(classes.len() * per_class * k);
        let mut labels = Vec::with_capacity(classes.len() * per_class);
        for &class in classes {
            for _ in 0..per_class {
                data.extend(means.row(class).iter().map(|&m| T::lit(m + spec.noise_scale * normal(&mut sample_rng))));
                labels.push(class);
            }
        }
        (Matrix::new(labels.len(), k, data).expect("sample block shape"), labels)
    };
    let (train_features, train_labels) = draw(&seen, spec.train_per_class);
    let all: Vec<usize> = (0..c).collect();
    let (test_features, test_labels) = draw(&all, spec.test_per_class);

    let d = GzslDataset {
        name: spec.name.clone(),
        semantic_format: if spec.binary { SemanticFormat::Binary } else { SemanticFormat::Continuous },
        semantics: semantics.cast(),
        train_features,
        train_labels,
        test_features,
        test_labels,
        seen,
        unseen,
    };
    d.validate()?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec { seed: 7, ..Default::default() };
        let a: GzslDataset<f64> = make_synthetic(&spec).unwrap();
        let b: GzslDataset<f64> = make_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let other: GzslDataset<f64> = make_synthetic(&SyntheticSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.fingerprint(), other.fingerprint());
    }

    #[test]
    fn standard_benchmark_sizes() {
        let d: GzslDataset<f64> = make_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(d.train_features.shape(), (10 * 200, 16));
        assert_eq!(d.unseen.len(), 5);
        assert_eq!(d.semantics.shape(), (15, 8));
    }

    #[test]
    fn zero_noise_makes_class_samples_identical() {
        let spec = SyntheticSpec { noise_scale: 0.0, train_per_class: 4, test_per_class: 3, ..Default::default() };
        let d: GzslDataset<f64> = make_synthetic(&spec).unwrap();
        for rows in d.train_indices_by_class() {
            for w in rows.windows(2) {
                assert_eq!(d.train_features.row(w[0]), d.train_features.row(w[1]));
            }
        }
    }

    #[test]
    fn unseen_must_be_proper_subset() {
        let spec = SyntheticSpec { classes: 15, unseen: 15, ..Default::default() };
        assert!(matches!(make_synthetic::<f64>(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn binary_semantics() {
        let d: GzslDataset<f64> = make_synthetic(&SyntheticSpec { binary: true, ..Default::default() }).unwrap();
        assert_eq!(d.semantic_format, SemanticFormat::Binary);
        assert!(d.semantics.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn random_specs_validate_and_keep_unseen_out_of_train(
            classes in 2usize..12,
            unseen_frac in 0.0f64..1.0,
            k in 1usize..6,
            l in 1usize..6,
            per_class in 1usize..5,
            seed in 0u64..1000,
            binary in any::<bool>(),
        ) {
            let unseen = ((classes - 1) as f64 * unseen_frac) as usize;
            let spec = SyntheticSpec {
                name: "p".into(), visual_dim: k, semantic_dim: l, classes, unseen,
                train_per_class: per_class, test_per_class: per_class, noise_scale: 0.3, binary, seed,
            };
            let d: GzslDataset<f64> = make_synthetic(&spec).unwrap();
            prop_assert!(d.validate().is_ok());
            prop_assert!(d.train_labels.iter().all(|&y| !d.is_unseen(y)));
            prop_assert_eq!(d.unseen.len(), unseen);
        }
    }
}
