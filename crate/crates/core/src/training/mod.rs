//! Pretraining of the regressor and seen-class classifier, and the alternating
//! critic/generator optimization for every generator variant.
//!
//! Seeding is fully deterministic: every random draw comes from a ChaCha stream derived
//! from `config.seed` and a fixed per-purpose stream id.

mod config;
mod metrics;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{GzslDataset, SemanticFormat};
use crate::diffmath::{Matrix, Tape};
use crate::error::{Error, Result};
use crate::losses::{cls_loss, critic_loss, cyc_loss, cycle_reconstruction, generator_adversarial_loss, reg_loss, CycleTerm};
use crate::models::{
    generator_forward, generator_forward_tape, init_classifier, init_discriminator, init_generator, init_regressor,
    sample_noise, Mlp, MlpOptimizer, RegressorOutput,
};
use crate::rng::seeded;
use crate::scalar::Scalar;

pub use config::{Profile, TrainConfig, Variant};
pub use metrics::{metrics_csv, parse_metrics_csv, EpochMetrics, METRICS_HEADER};
use metrics::Accumulator;

mod stream {
    pub const REGRESSOR_INIT: u64 = 1;
    pub const REGRESSOR_BATCHES: u64 = 2;
    pub const CLASSIFIER_INIT: u64 = 3;
    pub const CLASSIFIER_BATCHES: u64 = 4;
    pub const GENERATOR_INIT: u64 = 5;
    pub const CRITIC_INIT: u64 = 6;
    pub const GAN: u64 = 7;
    pub const FINETUNE: u64 = 8;
}

/// Shuffled mini-batches covering `0..n` once; the last batch may be short.
pub fn shuffled_batches<R: Rng>(n: usize, batch: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}

fn finite_or_diverged<T: Scalar>(value: T, epoch: usize, what: &str) -> Result<f64> {
    let v = value.as_f64();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Training { epoch, detail: format!("{what} is {v}") })
    }
}

/// Re-labels numeric failures inside a training step with the epoch they occurred in.
fn at_epoch<V>(epoch: usize, r: Result<V>) -> Result<V> {
    r.map_err(|e| match e {
        Error::Numeric(detail) => Error::Training { epoch, detail },
        other => other,
    })
}

fn require_train_data<T: Scalar>(dataset: &GzslDataset<T>) -> Result<()> {
    if dataset.train_labels.is_empty() {
        return Err(Error::Validation("dataset has no seen-class training samples".into()));
    }
    Ok(())
}

/// Pretrained regressor with its per-epoch mean `ℓ_REG`.
#[derive(Clone, Debug)]
pub struct RegressorFit<T> {
    pub regressor: Mlp<T>,
    pub curve: Vec<f64>,
}

impl<T> RegressorFit<T> {
    pub fn metrics(&self) -> Vec<EpochMetrics> {
        self.curve
            .iter()
            .enumerate()
            .map(|(i, &l)| EpochMetrics { epoch: i + 1, l_reg: Some(l), ..Default::default() })
            .collect()
    }
}

/// Fits the visual→semantic regressor on seen-class `(x, a)` pairs. A sigmoid output is
/// used for binary attributes.
pub fn pretrain_regressor<T: Scalar>(dataset: &GzslDataset<T>, config: &TrainConfig) -> Result<RegressorFit<T>> {
    config.validate()?;
    require_train_data(dataset)?;
    let output = match dataset.semantic_format {
        SemanticFormat::Binary => RegressorOutput::Sigmoid,
        SemanticFormat::Continuous => RegressorOutput::Identity,
    };
    let mut regressor = init_regressor(
        dataset.visual_dim(),
        dataset.semantic_dim(),
        output,
        config.seed.wrapping_add(stream::REGRESSOR_INIT),
    )?;
    let mut opt = MlpOptimizer::new(&regressor);
    let mut rng = seeded(config.seed, stream::REGRESSOR_BATCHES);
    let lr = T::lit(config.lr_regressor);
    let mut curve = Vec::with_capacity(config.epochs_regressor);
    for epoch in 1..=config.epochs_regressor {
        let mut acc = Accumulator::default();
        for batch in shuffled_batches(dataset.train_labels.len(), config.batch_regressor, &mut rng) {
            let labels: Vec<usize> = batch.iter().map(|&i| dataset.train_labels[i]).collect();
            let mut tape = Tape::new();
            let vars = regressor.register(&mut tape);
            let x = tape.leaf(dataset.train_features.select_rows(&batch));
            let a = tape.leaf(dataset.semantics_for(&labels));
            let loss = at_epoch(epoch, reg_loss(&mut tape, &regressor, &vars, x, a))?;
            acc.push(finite_or_diverged(tape.value(loss).item()?, epoch, "regression loss")?);
            let grads = tape.backward(loss, &vars.all())?.into_matrices();
            at_epoch(epoch, opt.step(&mut regressor, &grads, lr))?;
        }
        let mean = acc.mean().expect("at least one batch");
        log::debug!("regressor epoch {epoch}: l_reg {mean:.6}");
        curve.push(mean);
    }
    Ok(RegressorFit { regressor, curve })
}

/// Linear softmax classifier over a subset of global class ids, sorted ascending;
/// output `j` scores `classes[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSubsetClassifier<T> {
    pub model: Mlp<T>,
    pub classes: Vec<usize>,
}

impl<T: Scalar> ClassSubsetClassifier<T> {
    /// Local index of a global class id.
    pub fn local(&self, class: usize) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    /// Local label per global label; errors on a label outside the class set.
    pub fn local_labels(&self, labels: &[usize]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|&l| {
                self.local(l)
                    .ok_or_else(|| Error::Validation(format!("label {l} is not in the classifier's class set")))
            })
            .collect()
    }

    /// Highest-scoring global class per row, ties to the lowest id.
    pub fn predict(&self, features: &Matrix<T>) -> Result<Vec<usize>> {
        let logits = self.model.forward(features)?;
        if !logits.is_finite() {
            return Err(Error::Numeric("classifier logits".into()));
        }
        Ok(logits.argmax_rows().into_iter().map(|j| self.classes[j]).collect())
    }

    /// Plain (not per-class) accuracy against global labels.
    pub fn accuracy(&self, features: &Matrix<T>, labels: &[usize]) -> Result<f64> {
        let pred = self.predict(features)?;
        let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / labels.len().max(1) as f64)
    }
}

/// Mini-batch Adam fit of a linear softmax classifier on `(features, labels)` over the
/// given global class set.
pub fn fit_softmax<T: Scalar>(
    features: &Matrix<T>,
    labels: &[usize],
    classes: &[usize],
    lr: f64,
    batch: usize,
    epochs: usize,
    seed: u64,
) -> Result<ClassSubsetClassifier<T>> {
    let mut classes = classes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if features.rows() != labels.len() {
        return Err(Error::dim("fit_softmax", format!("{} feature rows, {} labels", features.rows(), labels.len())));
    }
    let model = init_classifier(features.cols(), classes.len(), seed.wrapping_add(stream::CLASSIFIER_INIT))?;
    let mut clf = ClassSubsetClassifier { model, classes };
    let local = clf.local_labels(labels)?;
    let mut opt = MlpOptimizer::new(&clf.model);
    let mut rng = seeded(seed, stream::CLASSIFIER_BATCHES);
    let lr = T::lit(lr);
    for epoch in 1..=epochs {
        for idx in shuffled_batches(labels.len(), batch, &mut rng) {
            let y: Vec<usize> = idx.iter().map(|&i| local[i]).collect();
            let mut tape = Tape::new();
            let vars = clf.model.register(&mut tape);
            let x = tape.leaf(features.select_rows(&idx));
            let loss = at_epoch(epoch, cls_loss(&mut tape, &clf.model, &vars, x, &y))?;
            finite_or_diverged(tape.value(loss).item()?, epoch, "classification loss")?;
            let grads = tape.backward(loss, &vars.all())?.into_matrices();
            at_epoch(epoch, opt.step(&mut clf.model, &grads, lr))?;
        }
    }
    Ok(clf)
}

/// Softmax classifier over the seen classes, fitted on real training features.
pub fn pretrain_classifier<T: Scalar>(
    dataset: &GzslDataset<T>,
    config: &TrainConfig,
) -> Result<ClassSubsetClassifier<T>> {
    config.validate()?;
    require_train_data(dataset)?;
    let mut present: Vec<usize> = dataset.train_labels.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Validation(format!(
            "seen-class classifier needs at least 2 seen classes with training data, got {}",
            present.len()
        )));
    }
    fit_softmax(
        &dataset.train_features,
        &dataset.train_labels,
        &dataset.seen,
        config.lr_classifier,
        config.batch_classifier,
        config.epochs_classifier,
        config.seed,
    )
}

/// Frozen models a generator variant may depend on.
#[derive(Clone, Debug, Default)]
pub struct Pretrained<T> {
    pub regressor: Option<Mlp<T>>,
    pub classifier: Option<ClassSubsetClassifier<T>>,
}

/// Everything a generator training run produces.
#[derive(Clone, Debug)]
pub struct TrainArtifacts<T> {
    pub variant: Variant,
    pub generator: Mlp<T>,
    pub critic: Mlp<T>,
    pub regressor: Option<Mlp<T>>,
    pub classifier: Option<ClassSubsetClassifier<T>>,
    pub metrics: Vec<EpochMetrics>,
    pub warnings: Vec<String>,
    pub dataset_hash: String,
    pub config_hash: String,
}

/// Which extra generator terms are active, after variant gating.
#[derive(Clone, Copy, Debug)]
struct Terms {
    cycle: Option<f64>,
    unseen_cycle: bool,
    cls: Option<f64>,
}

fn gate_terms<T: Scalar>(
    config: &TrainConfig,
    pretrained: &Pretrained<T>,
    warnings: &mut Vec<String>,
) -> Result<Terms> {
    let w = &config.weights;
    let v = config.variant;
    let mut warn = |m: String| {
        log::warn!("{m}");
        warnings.push(m);
    };
    if !v.uses_cycle() && w.cycle > 0.0 {
        warn(format!("variant {v} has no cycle term; cycle weight {} ignored", w.cycle));
    }
    if v != Variant::CycleClswgan && w.cls > 0.0 {
        warn(format!("variant {v} has no cycle-CLS term; cls weight {} ignored", w.cls));
    }
    if v != Variant::Baseline && w.beta > 0.0 {
        warn(format!("variant {v} has no baseline classification term; beta {} ignored", w.beta));
    }
    if v.uses_cycle() && pretrained.regressor.is_none() {
        return Err(Error::Config(format!("variant {v} requires a pretrained regressor")));
    }
    if v.uses_classifier() && pretrained.classifier.is_none() {
        return Err(Error::Config(format!("variant {v} requires a pretrained seen-class classifier")));
    }
    Ok(Terms {
        cycle: v.uses_cycle().then_some(w.cycle),
        unseen_cycle: false,
        cls: match v {
            Variant::Baseline => Some(w.beta),
            Variant::CycleClswgan => Some(w.cls),
            _ => None,
        },
    })
}

/// Mutable state of an adversarial run.
pub(crate) struct GanState<'a, T> {
    dataset: &'a GzslDataset<T>,
    config: &'a TrainConfig,
    terms: Terms,
    pub generator: Mlp<T>,
    pub critic: Mlp<T>,
    regressor: Option<&'a Mlp<T>>,
    classifier: Option<&'a ClassSubsetClassifier<T>>,
    gen_opt: MlpOptimizer<T>,
    critic_opt: MlpOptimizer<T>,
    rng: ChaCha8Rng,
    noise_dim: usize,
    critic_steps: usize,
}

#[derive(Default)]
struct EpochAcc {
    loss_d: Accumulator,
    loss_g: Accumulator,
    gp: Accumulator,
    wasserstein: Accumulator,
    l_cls: Accumulator,
    l_cyc: Accumulator,
    fake_top1: Accumulator,
}

impl<'a, T: Scalar> GanState<'a, T> {
    /// One critic update on a real batch; the generator is only evaluated.
    fn critic_step(&mut self, batch: &[usize], epoch: usize, acc: &mut EpochAcc) -> Result<()> {
        let d = self.dataset;
        let labels: Vec<usize> = batch.iter().map(|&i| d.train_labels[i]).collect();
        let semantics = d.semantics_for(&labels);
        let noise = sample_noise(&mut self.rng, batch.len(), self.noise_dim);
        let fake = at_epoch(epoch, generator_forward(&self.generator, &semantics, &noise))?;
        let alpha: Vec<T> = (0..batch.len()).map(|_| T::lit(self.rng.random::<f64>())).collect();

        let mut tape = Tape::new();
        let vars = self.critic.register(&mut tape);
        let x = tape.leaf(d.train_features.select_rows(batch));
        let x_fake = tape.leaf(fake);
        let a = tape.leaf(semantics);
        let gp_lambda = T::lit(self.config.weights.gp_lambda);
        let out = at_epoch(epoch, critic_loss(&mut tape, &self.critic, &vars, x, x_fake, a, &alpha, gp_lambda))?;
        acc.loss_d.push(finite_or_diverged(tape.value(out.loss).item()?, epoch, "critic loss")?);
        acc.gp.push(finite_or_diverged(out.diagnostics.gp_term, epoch, "gradient penalty")?);
        acc.wasserstein.push(finite_or_diverged(out.diagnostics.wasserstein, epoch, "Wasserstein estimate")?);
        let grads = tape.backward(out.loss, &vars.all())?.into_matrices();
        at_epoch(epoch, self.critic_opt.step(&mut self.critic, &grads, T::lit(self.config.lr_critic)))
    }

    /// One generator update conditioned on the labels of `batch`; critic, regressor
    /// and classifier are constants.
    fn generator_step(&mut self, batch: &[usize], epoch: usize, acc: &mut EpochAcc) -> Result<()> {
        let d = self.dataset;
        let labels: Vec<usize> = batch.iter().map(|&i| d.train_labels[i]).collect();
        let mut tape = Tape::new();
        let gvars = self.generator.register(&mut tape);
        let dvars = self.critic.register(&mut tape);
        let a = tape.leaf(d.semantics_for(&labels));
        let z = tape.leaf(sample_noise(&mut self.rng, batch.len(), self.noise_dim));
        let fake = at_epoch(epoch, generator_forward_tape(&self.generator, &mut tape, &gvars, a, z))?;
        let mut total = at_epoch(epoch, generator_adversarial_loss(&mut tape, &self.critic, &dvars, fake, a))?;

        if let (Some(weight), Some(reg)) = (self.terms.cycle, self.regressor) {
            let rvars = reg.register(&mut tape);
            let unseen = if self.terms.unseen_cycle {
                let n = self.config.unseen_batch.unwrap_or(self.config.batch_gan);
                let picks: Vec<usize> =
                    (0..n).map(|_| d.unseen[self.rng.random_range(0..d.unseen.len())]).collect();
                let ua = tape.leaf(d.semantics_for(&picks));
                let uz = tape.leaf(sample_noise(&mut self.rng, n, self.noise_dim));
                Some(CycleTerm { semantics: ua, noise: uz })
            } else {
                None
            };
            // The seen term reuses the already generated batch.
            let seen_part = at_epoch(epoch, reg_loss(&mut tape, reg, &rvars, fake, a))?;
            let l_cyc = match unseen {
                None => seen_part,
                Some(term) => {
                    let u = at_epoch(epoch, cyc_loss(&mut tape, &self.generator, &gvars, reg, &rvars, term, None))?;
                    tape.add(seen_part, u)?
                }
            };
            acc.l_cyc.push(finite_or_diverged(tape.value(l_cyc).item()?, epoch, "cycle loss")?);
            let scaled = tape.scale(l_cyc, T::lit(weight));
            total = tape.add(total, scaled)?;
        }

        if let Some(clf) = self.classifier {
            let local = clf.local_labels(&labels)?;
            let cvars = clf.model.register(&mut tape);
            let fake_pred = tape.value(fake).clone();
            if let Some(weight) = self.terms.cls {
                let l_cls = at_epoch(epoch, cls_loss(&mut tape, &clf.model, &cvars, fake, &local))?;
                acc.l_cls.push(finite_or_diverged(tape.value(l_cls).item()?, epoch, "classification loss")?);
                let scaled = tape.scale(l_cls, T::lit(weight));
                total = tape.add(total, scaled)?;
            }
            acc.fake_top1.push(at_epoch(epoch, clf.accuracy(&fake_pred, &labels))?);
        }

        acc.loss_g.push(finite_or_diverged(tape.value(total).item()?, epoch, "generator loss")?);
        let grads = tape.backward(total, &gvars.all())?.into_matrices();
        at_epoch(epoch, self.gen_opt.step(&mut self.generator, &grads, T::lit(self.config.lr_generator)))
    }

    /// One pass over the seen training samples; a generator step follows every
    /// `n_critic` critic steps, counted across epoch boundaries.
    fn run_epoch(&mut self, epoch: usize) -> Result<EpochMetrics> {
        let start = Instant::now();
        let mut acc = EpochAcc::default();
        for batch in shuffled_batches(self.dataset.train_labels.len(), self.config.batch_gan, &mut self.rng) {
            self.critic_step(&batch, epoch, &mut acc)?;
            self.critic_steps += 1;
            if self.critic_steps % self.config.n_critic == 0 {
                self.generator_step(&batch, epoch, &mut acc)?;
            }
        }
        Ok(EpochMetrics {
            epoch,
            loss_d: acc.loss_d.mean(),
            loss_g: acc.loss_g.mean(),
            gp: acc.gp.mean(),
            wasserstein: acc.wasserstein.mean(),
            l_cls: acc.l_cls.mean(),
            l_cyc: acc.l_cyc.mean(),
            l_reg: None,
            fake_seen_top1: acc.fake_top1.mean(),
            wall_seconds: self.config.record_wall_time.then(|| start.elapsed().as_secs_f64()),
        })
    }
}

/// Adversarial training of a fresh generator and critic for `config.variant`.
///
/// `cycle-uwgan` is normally produced by [`finetune_uwgan`] from a cycle-WGAN run; it is
/// accepted here only with `from_scratch_unseen`, which includes the unseen cycle term
/// from the first epoch.
pub fn train_gan<T: Scalar>(
    dataset: &GzslDataset<T>,
    config: &TrainConfig,
    pretrained: &Pretrained<T>,
) -> Result<TrainArtifacts<T>> {
    config.validate()?;
    require_train_data(dataset)?;
    if config.variant == Variant::CycleUwgan && !config.from_scratch_unseen {
        return Err(Error::Config(
            "cycle-uwgan fine-tunes a cycle-wgan run; train cycle-wgan first or set from_scratch_unseen".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut terms = gate_terms(config, pretrained, &mut warnings)?;
    terms.unseen_cycle = config.variant == Variant::CycleUwgan;
    if terms.unseen_cycle && dataset.unseen.is_empty() {
        return Err(Error::Validation("unseen cycle term needs at least one unseen class".into()));
    }
    let (k, l) = (dataset.visual_dim(), dataset.semantic_dim());
    let noise_dim = config.noise_dim_for(l);
    let generator = init_generator(l, noise_dim, k, config.hidden, config.seed.wrapping_add(stream::GENERATOR_INIT))?;
    let critic = init_discriminator(k, l, config.hidden, config.seed.wrapping_add(stream::CRITIC_INIT))?;
    let mut state = GanState {
        dataset,
        config,
        terms,
        gen_opt: MlpOptimizer::new(&generator),
        critic_opt: MlpOptimizer::new(&critic),
        generator,
        critic,
        regressor: pretrained.regressor.as_ref(),
        classifier: pretrained.classifier.as_ref(),
        rng: seeded(config.seed, stream::GAN),
        noise_dim,
        critic_steps: 0,
    };
    let mut metrics = Vec::with_capacity(config.epochs_gan);
    for epoch in 1..=config.epochs_gan {
        let row = state.run_epoch(epoch)?;
        log::info!(
            "{} epoch {epoch}: loss_d {:.5} wasserstein {:.5}",
            config.variant,
            row.loss_d.unwrap_or(f64::NAN),
            row.wasserstein.unwrap_or(f64::NAN)
        );
        metrics.push(row);
    }
    Ok(TrainArtifacts {
        variant: config.variant,
        generator: state.generator,
        critic: state.critic,
        regressor: pretrained.regressor.clone(),
        classifier: pretrained.classifier.clone(),
        metrics,
        warnings,
        dataset_hash: dataset.fingerprint(),
        config_hash: config.hash(),
    })
}

/// Continues a cycle-WGAN run with the unseen-semantics cycle term for
/// `config.finetune_epochs()` epochs, with fresh optimizer state at the same learning
/// rates. Metrics rows continue the epoch numbering of the input run.
pub fn finetune_uwgan<T: Scalar>(
    artifacts: &TrainArtifacts<T>,
    dataset: &GzslDataset<T>,
    config: &TrainConfig,
) -> Result<TrainArtifacts<T>> {
    config.validate()?;
    if artifacts.variant != Variant::CycleWgan {
        return Err(Error::Config(format!(
            "fine-tuning starts from a cycle-wgan run, got a {} run",
            artifacts.variant
        )));
    }
    let hash = dataset.fingerprint();
    if hash != artifacts.dataset_hash {
        return Err(Error::Config(format!(
            "dataset mismatch: run was trained on {}, fine-tuning requested on {hash}",
            artifacts.dataset_hash
        )));
    }
    let regressor = artifacts
        .regressor
        .as_ref()
        .ok_or_else(|| Error::Config("cycle-wgan artifacts carry no regressor".into()))?;
    if dataset.unseen.is_empty() {
        return Err(Error::Validation("unseen cycle term needs at least one unseen class".into()));
    }
    let mut warnings = artifacts.warnings.clone();
    let ft_config = TrainConfig { variant: Variant::CycleUwgan, ..config.clone() };
    let pretrained = Pretrained { regressor: Some(regressor.clone()), classifier: artifacts.classifier.clone() };
    let mut terms = gate_terms(&ft_config, &pretrained, &mut warnings)?;
    terms.unseen_cycle = true;
    let mut state = GanState {
        dataset,
        config: &ft_config,
        terms,
        gen_opt: MlpOptimizer::new(&artifacts.generator),
        critic_opt: MlpOptimizer::new(&artifacts.critic),
        generator: artifacts.generator.clone(),
        critic: artifacts.critic.clone(),
        regressor: Some(regressor),
        classifier: artifacts.classifier.as_ref(),
        rng: seeded(config.seed, stream::FINETUNE),
        noise_dim: artifacts.generator.input_dim() - dataset.semantic_dim(),
        critic_steps: 0,
    };
    let mut metrics = artifacts.metrics.clone();
    let first = metrics.last().map_or(0, |m| m.epoch) + 1;
    for epoch in first..first + ft_config.finetune_epochs() {
        metrics.push(state.run_epoch(epoch)?);
    }
    Ok(TrainArtifacts {
        variant: Variant::CycleUwgan,
        generator: state.generator,
        critic: state.critic,
        regressor: artifacts.regressor.clone(),
        classifier: artifacts.classifier.clone(),
        metrics,
        warnings,
        dataset_hash: hash,
        config_hash: ft_config.hash(),
    })
}

/// `ℓ_CYC` on a fixed batch of unseen semantics: `per_class` rows for every unseen
/// class with noise drawn from `seed`.
pub fn unseen_cycle_loss<T: Scalar>(
    generator: &Mlp<T>,
    regressor: &Mlp<T>,
    dataset: &GzslDataset<T>,
    per_class: usize,
    seed: u64,
) -> Result<f64> {
    let labels: Vec<usize> = dataset.unseen.iter().flat_map(|&c| std::iter::repeat_n(c, per_class)).collect();
    if labels.is_empty() {
        return Err(Error::Contract("no unseen semantics to evaluate".into()));
    }
    let noise_dim = generator.input_dim() - dataset.semantic_dim();
    let mut rng = seeded(seed, 0);
    let noise = sample_noise(&mut rng, labels.len(), noise_dim);
    Ok(cycle_reconstruction(generator, regressor, &dataset.semantics_for(&labels), &noise)?.as_f64())
}
