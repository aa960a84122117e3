use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::losses::LossWeights;

/// Feature-generator variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// WGAN-GP with a frozen seen-class classifier term weighted by β (f-CLSWGAN).
    #[serde(rename = "baseline")]
    Baseline,
    /// WGAN-GP plus the seen-class cycle-consistency term weighted by λ₁.
    #[serde(rename = "cycle-wgan")]
    CycleWgan,
    /// cycle-WGAN whose cycle term also covers unseen-class semantics.
    #[serde(rename = "cycle-uwgan")]
    CycleUwgan,
    /// cycle-WGAN plus a frozen seen-class classifier term weighted by λ₂.
    #[serde(rename = "cycle-clswgan")]
    CycleClswgan,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Baseline, Variant::CycleWgan, Variant::CycleUwgan, Variant::CycleClswgan];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::CycleWgan => "cycle-wgan",
            Variant::CycleUwgan => "cycle-uwgan",
            Variant::CycleClswgan => "cycle-clswgan",
        }
    }

    pub fn uses_cycle(self) -> bool {
        !matches!(self, Variant::Baseline)
    }

    pub fn uses_classifier(self) -> bool {
        matches!(self, Variant::Baseline | Variant::CycleClswgan)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown variant {s:?}; valid variants: {}",
                Variant::ALL.map(Variant::name).join(", ")
            ))
        })
    }
}

/// Named hyperparameter rows for the public benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Cub,
    Flo,
    Sun,
    Awa,
    Imagenet,
}

impl Profile {
    pub const ALL: [Profile; 5] = [Profile::Cub, Profile::Flo, Profile::Sun, Profile::Awa, Profile::Imagenet];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Cub => "cub",
            Profile::Flo => "flo",
            Profile::Sun => "sun",
            Profile::Awa => "awa",
            Profile::Imagenet => "imagenet",
        }
    }

    /// `(lr_R, batch_R, epochs_R, lr_G, lr_D, batch_GAN, epochs_GAN, lr_cls, batch_cls, epochs_cls)`.
    #[allow(clippy::type_complexity)]
    fn row(self) -> (f64, usize, usize, f64, f64, usize, usize, f64, usize, usize) {
        match self {
            Profile::Cub => (1e-4, 64, 100, 1e-4, 1e-3, 64, 926, 1e-4, 4096, 80),
            Profile::Flo => (1e-4, 64, 100, 1e-4, 1e-3, 64, 926, 1e-4, 2048, 100),
            Profile::Sun => (1e-4, 64, 100, 1e-2, 1e-2, 64, 926, 1e-4, 4096, 298),
            Profile::Awa => (1e-3, 64, 50, 1e-4, 1e-3, 64, 350, 1e-4, 2048, 37),
            Profile::Imagenet => (1e-4, 2048, 5, 1e-4, 1e-3, 256, 300, 1e-3, 2048, 300),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown profile {s:?}; valid profiles: {}",
                Profile::ALL.map(Profile::name).join(", ")
            ))
        })
    }
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub weights: LossWeights,
    pub lr_regressor: f64,
    pub batch_regressor: usize,
    pub epochs_regressor: usize,
    pub lr_generator: f64,
    pub lr_critic: f64,
    pub batch_gan: usize,
    pub epochs_gan: usize,
    /// Critic updates per generator update.
    pub n_critic: usize,
    /// Softmax classifiers: the frozen seen-class classifier and the final classifier.
    pub lr_classifier: f64,
    pub batch_classifier: usize,
    pub epochs_classifier: usize,
    /// Noise width; `None` ties it to the semantic width.
    pub noise_dim: Option<usize>,
    pub hidden: usize,
    pub seed: u64,
    /// Synthesized features per class for the final classifier.
    pub synth_per_class: usize,
    /// Unseen-semantics batch size for the cycle term; `None` uses `batch_gan`.
    pub unseen_batch: Option<usize>,
    /// Fine-tuning budget of cycle-(U)WGAN as a fraction of `epochs_gan`.
    pub finetune_fraction: f64,
    /// Train cycle-(U)WGAN from scratch with the unseen cycle term instead of fine-tuning.
    pub from_scratch_unseen: bool,
    /// Fill the `wall_seconds` metrics column. Off by default so metric files are
    /// reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    /// Desk-scale defaults for the synthetic benchmark.
    fn default() -> Self {
        Self {
            variant: Variant::Baseline,
            weights: LossWeights::desk(),
            lr_regressor: 1e-3,
            batch_regressor: 64,
            epochs_regressor: 30,
            lr_generator: 1e-3,
            lr_critic: 1e-3,
            batch_gan: 64,
            epochs_gan: 60,
            n_critic: 5,
            lr_classifier: 1e-3,
            batch_classifier: 64,
            epochs_classifier: 20,
            noise_dim: None,
            hidden: 64,
            seed: 0,
            synth_per_class: 300,
            unseen_batch: None,
            finetune_fraction: 0.25,
            from_scratch_unseen: false,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    /// Overwrites learning rates, batch sizes, epoch counts, hidden width and loss
    /// weights with a benchmark row.
    pub fn apply_profile(&mut self, profile: Profile) {
        let (lr_r, b_r, e_r, lr_g, lr_d, b_gan, e_gan, lr_c, b_c, e_c) = profile.row();
        self.lr_regressor = lr_r;
        self.batch_regressor = b_r;
        self.epochs_regressor = e_r;
        self.lr_generator = lr_g;
        self.lr_critic = lr_d;
        self.batch_gan = b_gan;
        self.epochs_gan = e_gan;
        self.lr_classifier = lr_c;
        self.batch_classifier = b_c;
        self.epochs_classifier = e_c;
        self.hidden = crate::models::DEFAULT_HIDDEN;
        self.weights = LossWeights::default();
    }

    pub fn with_profile(profile: Profile) -> Self {
        let mut c = Self::default();
        c.apply_profile(profile);
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        for (name, v) in [
            ("lr_regressor", self.lr_regressor),
            ("lr_generator", self.lr_generator),
            ("lr_critic", self.lr_critic),
            ("lr_classifier", self.lr_classifier),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("batch_regressor", self.batch_regressor),
            ("batch_gan", self.batch_gan),
            ("batch_classifier", self.batch_classifier),
            ("n_critic", self.n_critic),
            ("hidden", self.hidden),
            ("synth_per_class", self.synth_per_class),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.noise_dim == Some(0) || self.unseen_batch == Some(0) {
            return Err(Error::Config("noise_dim and unseen_batch must be at least 1".into()));
        }
        if !(self.finetune_fraction >= 0.0 && self.finetune_fraction.is_finite()) {
            return Err(Error::Config(format!("finetune_fraction must be >= 0, got {}", self.finetune_fraction)));
        }
        Ok(())
    }

    pub fn noise_dim_for(&self, semantic_dim: usize) -> usize {
        self.noise_dim.unwrap_or(semantic_dim)
    }

    pub fn finetune_epochs(&self) -> usize {
        (self.epochs_gan as f64 * self.finetune_fraction).round() as usize
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}
