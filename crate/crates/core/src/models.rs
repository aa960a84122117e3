//! The four networks: conditional generator, critic, regressor and softmax classifier.
//!
//! Conditioned inputs are concatenated in a fixed order: `[a ‖ z]` for the generator and
//! `[x ‖ a]` for the critic.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffmath::{adam_step, sigmoid, AdamState, Matrix, Tape, Var};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Negative-side slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.2;
/// Standard deviation of the truncated-normal weight initializer.
pub const INIT_STD: f64 = 0.01;
/// Default hidden width of the generator and critic.
pub const DEFAULT_HIDDEN: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu,
    Sigmoid,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(T::zero()),
            Activation::LeakyRelu => {
                if x > T::zero() {
                    x
                } else {
                    x * T::lit(LEAKY_SLOPE)
                }
            }
            Activation::Sigmoid => sigmoid(x),
        }
    }

    fn record<T: Scalar>(self, tape: &mut Tape<T>, x: Var) -> Var {
        match self {
            Activation::Identity => x,
            Activation::Relu => tape.relu(x),
            Activation::LeakyRelu => tape.leaky_relu(x, T::lit(LEAKY_SLOPE)),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => Activation::Identity,
            "relu" => Activation::Relu,
            "leaky_relu" => Activation::LeakyRelu,
            "sigmoid" => Activation::Sigmoid,
            other => return Err(Error::Validation(format!("unknown activation tag {other:?}"))),
        })
    }
}

/// Which of the four networks a parameter set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Generator,
    Discriminator,
    Regressor,
    Classifier,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Generator => "generator",
            NetworkKind::Discriminator => "discriminator",
            NetworkKind::Regressor => "regressor",
            NetworkKind::Classifier => "classifier",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "generator" => NetworkKind::Generator,
            "discriminator" => NetworkKind::Discriminator,
            "regressor" => NetworkKind::Regressor,
            "classifier" => NetworkKind::Classifier,
            other => return Err(Error::Validation(format!("unknown network {other:?}"))),
        })
    }
}

/// Output activation of the regressor: identity for continuous semantics, sigmoid for
/// binary attributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorOutput {
    Identity,
    Sigmoid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    /// `in × out`
    pub weight: Matrix<T>,
    /// `1 × out`
    pub bias: Matrix<T>,
    pub activation: Activation,
}

/// Weights, biases and activations of a fully connected network.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    pub kind: NetworkKind,
    pub layers: Vec<Layer<T>>,
}

/// Tape handles for the parameters of an [`Mlp`], in layer order.
#[derive(Clone, Debug)]
pub struct MlpVars {
    pub layers: Vec<(Var, Var)>,
}

impl MlpVars {
    pub fn all(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}

fn truncated_normal<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            break T::lit(z * std);
        }
    })
}

impl<T: Scalar> Mlp<T> {
    /// Builds a network with truncated-normal weights and zero biases.
    pub fn init(kind: NetworkKind, widths: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(Error::Contract(format!(
                "{kind}: {} widths with {} activations",
                widths.len(),
                activations.len()
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Contract(format!("{kind}: layer widths must be at least 1, got {widths:?}")));
        }
        let mut rng = seeded(seed, 0);
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| Layer {
                weight: truncated_normal(&mut rng, w[0], w[1], INIT_STD),
                bias: Matrix::zeros(1, w[1]),
                activation,
            })
            .collect();
        Ok(Self { kind, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.cols())
    }

    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| l.weight.shape()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        let mut h = input.clone();
        for layer in &self.layers {
            h = h.matmul(&layer.weight)?.add_row(&layer.bias)?;
            let act = layer.activation;
            h = h.map(|v| act.apply(v));
        }
        Ok(h)
    }

    /// Places the parameters on the tape as leaves.
    pub fn register(&self, tape: &mut Tape<T>) -> MlpVars {
        MlpVars {
            layers: self
                .layers
                .iter()
                .map(|l| (tape.leaf(l.weight.clone()), tape.leaf(l.bias.clone())))
                .collect(),
        }
    }

    pub fn forward_tape(&self, tape: &mut Tape<T>, vars: &MlpVars, input: Var) -> Result<Var> {
        let mut h = input;
        for (layer, &(w, b)) in self.layers.iter().zip(&vars.layers) {
            let z = tape.matmul(h, w)?;
            let z = tape.bias_add(z, b)?;
            h = layer.activation.record(tape, z);
        }
        Ok(h)
    }

    /// Parameter matrices in layer order, weight before bias.
    pub fn params(&self) -> impl Iterator<Item = &Matrix<T>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Matrix<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    /// SHA-256 over the little-endian parameter bytes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in self.params() {
            for v in p.as_slice() {
                h.update(v.as_f64().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(Matrix::is_finite)
    }
}

/// Generator `[a ‖ z] → hidden (leaky rectifier) → K (rectifier)`.
pub fn init_generator<T: Scalar>(
    semantic_dim: usize,
    noise_dim: usize,
    visual_dim: usize,
    hidden: usize,
    seed: u64,
) -> Result<Mlp<T>> {
    Mlp::init(
        NetworkKind::Generator,
        &[semantic_dim + noise_dim, hidden, visual_dim],
        &[Activation::LeakyRelu, Activation::Relu],
        seed,
    )
}

/// Critic `[x ‖ a] → hidden (leaky rectifier) → 1 (linear)`.
pub fn init_discriminator<T: Scalar>(visual_dim: usize, semantic_dim: usize, hidden: usize, seed: u64) -> Result<Mlp<T>> {
    Mlp::init(
        NetworkKind::Discriminator,
        &[visual_dim + semantic_dim, hidden, 1],
        &[Activation::LeakyRelu, Activation::Identity],
        seed,
    )
}

/// Single linear layer from visual to semantic space.
pub fn init_regressor<T: Scalar>(visual_dim: usize, semantic_dim: usize, output: RegressorOutput, seed: u64) -> Result<Mlp<T>> {
    let act = match output {
        RegressorOutput::Identity => Activation::Identity,
        RegressorOutput::Sigmoid => Activation::Sigmoid,
    };
    Mlp::init(NetworkKind::Regressor, &[visual_dim, semantic_dim], &[act], seed)
}

/// Linear softmax classifier producing `classes` logits.
pub fn init_classifier<T: Scalar>(visual_dim: usize, classes: usize, seed: u64) -> Result<Mlp<T>> {
    if classes < 2 {
        return Err(Error::Validation(format!("a softmax classifier needs at least 2 classes, got {classes}")));
    }
    Mlp::init(NetworkKind::Classifier, &[visual_dim, classes], &[Activation::Identity], seed)
}

fn check_batch<T: Scalar>(op: &'static str, a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::dim(op, format!("batch sizes {} and {}", a.rows(), b.rows())));
    }
    Ok(())
}

/// Synthesizes visual features `G(a, z)`.
pub fn generator_forward<T: Scalar>(generator: &Mlp<T>, semantics: &Matrix<T>, noise: &Matrix<T>) -> Result<Matrix<T>> {
    check_batch("generator_forward", semantics, noise)?;
    generator.forward(&semantics.concat_cols(noise)?)
}

pub fn generator_forward_tape<T: Scalar>(
    generator: &Mlp<T>,
    tape: &mut Tape<T>,
    vars: &MlpVars,
    semantics: Var,
    noise: Var,
) -> Result<Var> {
    check_batch("generator_forward", tape.value(semantics), tape.value(noise))?;
    let input = tape.concat_cols(semantics, noise)?;
    generator.forward_tape(tape, vars, input)
}

/// Critic scores `D(x, a)`, one per row.
pub fn discriminator_forward<T: Scalar>(critic: &Mlp<T>, visual: &Matrix<T>, semantics: &Matrix<T>) -> Result<Matrix<T>> {
    check_batch("discriminator_forward", visual, semantics)?;
    critic.forward(&visual.concat_cols(semantics)?)
}

pub fn discriminator_forward_tape<T: Scalar>(
    critic: &Mlp<T>,
    tape: &mut Tape<T>,
    vars: &MlpVars,
    visual: Var,
    semantics: Var,
) -> Result<Var> {
    check_batch("discriminator_forward", tape.value(visual), tape.value(semantics))?;
    let input = tape.concat_cols(visual, semantics)?;
    critic.forward_tape(tape, vars, input)
}

/// Standard normal noise block.
pub fn sample_noise<T: Scalar, R: Rng>(rng: &mut R, rows: usize, dim: usize) -> Matrix<T> {
    Matrix::from_fn(rows, dim, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        T::lit(z)
    })
}

/// Adam state for every parameter matrix of one network.
#[derive(Clone, Debug)]
pub struct MlpOptimizer<T> {
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> MlpOptimizer<T> {
    pub fn new(mlp: &Mlp<T>) -> Self {
        Self { states: mlp.params().map(AdamState::for_param).collect() }
    }

    /// Applies one update; `grads` follows [`Mlp::params`] order.
    pub fn step(&mut self, mlp: &mut Mlp<T>, grads: &[Matrix<T>], lr: T) -> Result<()> {
        if grads.len() != self.states.len() {
            return Err(Error::Contract(format!(
                "{} gradients for {} parameter matrices",
                grads.len(),
                self.states.len()
            )));
        }
        let kind = mlp.kind;
        for (i, ((p, g), s)) in mlp.params_mut().zip(grads).zip(&mut self.states).enumerate() {
            let name = format!("{kind}.{}{}", if i % 2 == 0 { "w" } else { "b" }, i / 2);
            adam_step(&name, p, g, s, lr)?;
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &str = "cyclegzsl-checkpoint 1";

/// Metadata stored in a checkpoint header.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub kind: NetworkKind,
    pub config_hash: String,
    pub layers: Vec<(usize, usize, Activation)>,
}

/// Serializes a network: a text header terminated by `end\n`, followed by
/// little-endian `f64` values, layer by layer, weights then bias.
pub fn checkpoint_bytes<T: Scalar>(mlp: &Mlp<T>, config_hash: &str) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    out.push_str(&format!("network {}\n", mlp.kind));
    out.push_str(&format!("config_hash {}\n", if config_hash.is_empty() { "-" } else { config_hash }));
    out.push_str(&format!("layers {}\n", mlp.layers.len()));
    for (i, l) in mlp.layers.iter().enumerate() {
        out.push_str(&format!("layer {i} {} {} {}\n", l.weight.rows(), l.weight.cols(), l.activation.tag()));
    }
    out.push_str("end\n");
    let mut bytes = out.into_bytes();
    for p in mlp.params() {
        for v in p.as_slice() {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    bytes
}

pub fn parse_checkpoint<T: Scalar>(bytes: &[u8], origin: &Path) -> Result<(Mlp<T>, CheckpointHeader)> {
    let bad = |d: &str| Error::parse(origin, d.to_string());
    let marker = b"\nend\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| bad("missing end of header"))?
        + marker.len();
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad("not a checkpoint file"));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(&format!("expected {key:?}, found {line:?}")))
    };
    let kind: NetworkKind = field("network")?.parse()?;
    let config_hash = match field("config_hash")?.as_str() {
        "-" => String::new(),
        h => h.to_string(),
    };
    let n: usize = field("layers")?.parse().map_err(|_| bad("bad layer count"))?;
    let mut shapes = Vec::with_capacity(n);
    for i in 0..n {
        let rest = field("layer")?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != i.to_string() {
            return Err(bad(&format!("malformed layer line {rest:?}")));
        }
        let rows: usize = parts[1].parse().map_err(|_| bad("bad layer rows"))?;
        let cols: usize = parts[2].parse().map_err(|_| bad("bad layer cols"))?;
        shapes.push((rows, cols, parts[3].parse::<Activation>()?));
    }
    let expected: usize = shapes.iter().map(|&(r, c, _)| r * c + c).sum();
    let body = &bytes[end..];
    if body.len() != expected * 8 {
        return Err(bad(&format!("expected {} parameter bytes, found {}", expected * 8, body.len())));
    }
    let mut values = body.chunks_exact(8).map(|c| {
        let v = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        T::lit(v)
    });
    let mut layers = Vec::with_capacity(n);
    for &(rows, cols, activation) in &shapes {
        let weight = Matrix::new(rows, cols, values.by_ref().take(rows * cols).collect())?;
        let bias = Matrix::new(1, cols, values.by_ref().take(cols).collect())?;
        layers.push(Layer { weight, bias, activation });
    }
    for w in shapes.windows(2) {
        if w[0].1 != w[1].0 {
            return Err(bad("layer widths do not chain"));
        }
    }
    let mlp = Mlp { kind, layers };
    Ok((mlp, CheckpointHeader { kind, config_hash, layers: shapes }))
}

pub fn save_checkpoint<T: Scalar>(mlp: &Mlp<T>, config_hash: &str, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&checkpoint_bytes(mlp, config_hash)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Mlp<T>, CheckpointHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes, path)
}
