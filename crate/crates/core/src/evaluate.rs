//! Feature synthesis, the final softmax classifier and the ZSL/GZSL protocol.
//!
//! Accuracies are fractions in `[0, 1]`; [`render_percent`] produces the one-decimal
//! percentages used in text reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::data::{format_value, GzslDataset};
use crate::diffmath::Matrix;
use crate::error::{Error, Result};
use crate::models::{generator_forward, sample_noise, Mlp};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::training::{fit_softmax, ClassSubsetClassifier, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Zsl,
    Gzsl,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Zsl => "zsl",
            EvalMode::Gzsl => "gzsl",
        }
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zsl" => Ok(EvalMode::Zsl),
            "gzsl" => Ok(EvalMode::Gzsl),
            _ => Err(Error::Config(format!("unknown mode {s:?}; valid modes: zsl, gzsl"))),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Synthesized visual features with their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFeatures<T> {
    pub features: Matrix<T>,
    pub labels: Vec<usize>,
}

/// `per_class` samples `G(a_c, z)` for every class in `classes`, in the given class
/// order, with fresh noise drawn from `seed`.
pub fn synthesize_features<T: Scalar>(
    generator: &Mlp<T>,
    dataset: &GzslDataset<T>,
    classes: &[usize],
    per_class: usize,
    seed: u64,
) -> Result<LabeledFeatures<T>> {
    if classes.is_empty() || per_class == 0 {
        return Err(Error::Contract("feature synthesis needs a non-empty class set and per-class count".into()));
    }
    if let Some(&bad) = classes.iter().find(|&&c| c >= dataset.num_classes()) {
        return Err(Error::Contract(format!("class {bad} out of range for {} classes", dataset.num_classes())));
    }
    let noise_dim = generator
        .input_dim()
        .checked_sub(dataset.semantic_dim())
        .ok_or_else(|| Error::dim("synthesize_features", "generator input narrower than the semantic width"))?;
    let labels: Vec<usize> = classes.iter().flat_map(|&c| std::iter::repeat_n(c, per_class)).collect();
    let mut rng = seeded(seed, 200);
    let noise = sample_noise(&mut rng, labels.len(), noise_dim);
    let features = generator_forward(generator, &dataset.semantics_for(&labels), &noise)?;
    if !features.is_finite() {
        return Err(Error::Numeric("synthesized features".into()));
    }
    Ok(LabeledFeatures { features, labels })
}

/// The final classifier's label space: unseen classes for ZSL, all classes for GZSL.
pub fn label_space<T: Scalar>(dataset: &GzslDataset<T>, mode: EvalMode) -> Vec<usize> {
    match mode {
        EvalMode::Zsl => dataset.unseen.clone(),
        EvalMode::Gzsl => (0..dataset.num_classes()).collect(),
    }
}

/// Fits the final softmax classifier on synthesized features.
///
/// ZSL input must carry unseen labels only; GZSL input must carry both seen and unseen
/// labels.
pub fn fit_final_classifier<T: Scalar>(
    synth: &LabeledFeatures<T>,
    dataset: &GzslDataset<T>,
    mode: EvalMode,
    config: &TrainConfig,
) -> Result<ClassSubsetClassifier<T>> {
    match mode {
        EvalMode::Zsl => {
            if let Some(&bad) = synth.labels.iter().find(|&&y| !dataset.is_unseen(y)) {
                return Err(Error::Validation(format!("zsl classifier given label {bad}, which is not an unseen class")));
            }
        }
        EvalMode::Gzsl => {
            let has_seen = synth.labels.iter().any(|&y| dataset.is_seen(y));
            let has_unseen = synth.labels.iter().any(|&y| dataset.is_unseen(y));
            if !(has_seen && has_unseen) {
                return Err(Error::Validation("gzsl classifier needs both seen and unseen labels".into()));
            }
        }
    }
    fit_softmax(
        &synth.features,
        &synth.labels,
        &label_space(dataset, mode),
        config.lr_classifier,
        config.batch_classifier,
        config.epochs_classifier,
        config.seed.wrapping_add(1000),
    )
}

/// `argmax` class per row over `label_space`, which must equal the classifier's class
/// set. Ties go to the lowest class id.
pub fn predict<T: Scalar>(
    classifier: &ClassSubsetClassifier<T>,
    features: &Matrix<T>,
    label_space: &[usize],
) -> Result<Vec<usize>> {
    let mut space = label_space.to_vec();
    space.sort_unstable();
    space.dedup();
    if space != classifier.classes {
        return Err(Error::Contract(format!(
            "label space {space:?} differs from the classifier's classes {:?}",
            classifier.classes
        )));
    }
    classifier.predict(features)
}

/// Mean over `classes` of the within-class fraction of correct predictions.
pub fn per_class_top1(predictions: &[usize], truths: &[usize], classes: &[usize]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Contract(format!("{} predictions for {} truths", predictions.len(), truths.len())));
    }
    if classes.is_empty() {
        return Err(Error::Contract("per-class accuracy over an empty class set".into()));
    }
    let mut tally: BTreeMap<usize, (u64, u64)> = classes.iter().map(|&c| (c, (0, 0))).collect();
    for (&p, &t) in predictions.iter().zip(truths) {
        let entry = tally
            .get_mut(&t)
            .ok_or_else(|| Error::Contract(format!("truth label {t} is outside the class set")))?;
        entry.1 += 1;
        if p == t {
            entry.0 += 1;
        }
    }
    let mut sum = 0.0;
    for (class, (hit, n)) in &tally {
        if *n == 0 {
            return Err(Error::Contract(format!("class {class} has no samples")));
        }
        sum += *hit as f64 / *n as f64;
    }
    Ok(sum / tally.len() as f64)
}

/// `2us / (u + s)`, 0 when both are 0.
pub fn harmonic_mean(u: f64, s: f64) -> f64 {
    if u + s == 0.0 {
        0.0
    } else {
        2.0 * u * s / (u + s)
    }
}

/// Evaluation results as fractions; absent entries were not computed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GzslMetrics {
    pub u: Option<f64>,
    pub s: Option<f64>,
    pub h: Option<f64>,
    pub t1_z: Option<f64>,
}

impl GzslMetrics {
    pub fn merge(self, other: GzslMetrics) -> GzslMetrics {
        GzslMetrics {
            u: self.u.or(other.u),
            s: self.s.or(other.s),
            h: self.h.or(other.h),
            t1_z: self.t1_z.or(other.t1_z),
        }
    }
}

/// Per-class accuracy over the classes of `subset` that have at least one test sample.
fn subset_top1(predictions: &[usize], truths: &[usize], subset: &[usize], what: &str) -> Result<Option<f64>> {
    let mut present = Vec::new();
    for &c in subset {
        if truths.contains(&c) {
            present.push(c);
        } else {
            log::warn!("{what} class {c} has no test samples; excluded from the average");
        }
    }
    if present.is_empty() {
        return Ok(None);
    }
    let idx: Vec<usize> = (0..truths.len()).filter(|&i| present.binary_search(&truths[i]).is_ok()).collect();
    let p: Vec<usize> = idx.iter().map(|&i| predictions[i]).collect();
    let t: Vec<usize> = idx.iter().map(|&i| truths[i]).collect();
    per_class_top1(&p, &t, &present).map(Some)
}

/// `u`, `s` and `H` from predictions over the full test set. With no seen-class test
/// samples `s` and `H` are left out.
pub fn gzsl_metrics<T: Scalar>(predictions: &[usize], dataset: &GzslDataset<T>) -> Result<GzslMetrics> {
    let truths = &dataset.test_labels;
    if predictions.len() != truths.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} test samples",
            predictions.len(),
            truths.len()
        )));
    }
    let u = subset_top1(predictions, truths, &dataset.unseen, "unseen")?;
    let s = subset_top1(predictions, truths, &dataset.seen, "seen")?;
    if s.is_none() {
        log::warn!("no seen-class test samples; H is not reported");
    }
    let h = match (u, s) {
        (Some(u), Some(s)) => Some(harmonic_mean(u, s)),
        _ => None,
    };
    Ok(GzslMetrics { u, s, h, t1_z: None })
}

/// Rows and labels of the unseen-class test samples.
pub fn unseen_test_split<T: Scalar>(dataset: &GzslDataset<T>) -> (Matrix<T>, Vec<usize>) {
    let idx: Vec<usize> = (0..dataset.test_labels.len()).filter(|&i| dataset.is_unseen(dataset.test_labels[i])).collect();
    let labels = idx.iter().map(|&i| dataset.test_labels[i]).collect();
    (dataset.test_features.select_rows(&idx), labels)
}

/// Full protocol for one mode: synthesize → fit → predict → metrics.
pub fn evaluate_generator<T: Scalar>(
    generator: &Mlp<T>,
    dataset: &GzslDataset<T>,
    mode: EvalMode,
    per_class: usize,
    config: &TrainConfig,
) -> Result<GzslMetrics> {
    let space = label_space(dataset, mode);
    let synth = synthesize_features(generator, dataset, &space, per_class, config.seed)?;
    let classifier = fit_final_classifier(&synth, dataset, mode, config)?;
    match mode {
        EvalMode::Zsl => {
            let (x, truths) = unseen_test_split(dataset);
            let pred = predict(&classifier, &x, &space)?;
            Ok(GzslMetrics { t1_z: Some(per_class_top1(&pred, &truths, &dataset.unseen)?), ..Default::default() })
        }
        EvalMode::Gzsl => {
            let pred = predict(&classifier, &dataset.test_features, &space)?;
            gzsl_metrics(&pred, dataset)
        }
    }
}

/// One percentage with one decimal, e.g. `0.5083` → `"50.8"`.
pub fn render_percent(fraction: f64) -> String {
    format!("{:.1}", fraction * 100.0)
}

pub const REPORT_HEADER: &str = "dataset,variant,seed,u,s,H,T1_Z";

/// One evaluated run.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: String,
    pub seed: u64,
    pub metrics: GzslMetrics,
}

fn opt_field(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

fn opt_percent(v: Option<f64>) -> String {
    v.map(render_percent).unwrap_or_else(|| "-".into())
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{}",
            self.dataset,
            self.variant,
            self.seed,
            opt_field(m.u),
            opt_field(m.s),
            opt_field(m.h),
            opt_field(m.t1_z)
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Validation(format!("report row needs 7 fields, got {}: {line:?}", f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::Validation(format!("bad number {s:?} in report row")))
            }
        };
        Ok(Self {
            dataset: f[0].to_string(),
            variant: f[1].to_string(),
            seed: f[2].parse().map_err(|_| Error::Validation(format!("bad seed {:?} in report row", f[2])))?,
            metrics: GzslMetrics { u: num(f[3])?, s: num(f[4])?, h: num(f[5])?, t1_z: num(f[6])? },
        })
    }
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Aligned text table in the usual GZSL results layout: `T1_Z` under ZSL and
/// `u / s / H` under GZSL, as percentages.
pub fn report_text(rows: &[ReportRow]) -> String {
    report_table(rows, &[])
}

/// [`report_text`] followed by per-variant mean rows, whose seed column reads `mean`.
pub fn report_table(rows: &[ReportRow], means: &[ReportRow]) -> String {
    let head = ["dataset", "variant", "seed", "T1_Z", "u", "s", "H"].map(String::from);
    let mut table = vec![head];
    let labelled = rows.iter().map(|r| (r, r.seed.to_string())).chain(means.iter().map(|r| (r, "mean".to_string())));
    for (r, seed) in labelled {
        let m = &r.metrics;
        table.push([
            r.dataset.clone(),
            r.variant.clone(),
            seed,
            opt_percent(m.t1_z),
            opt_percent(m.u),
            opt_percent(m.s),
            opt_percent(m.h),
        ]);
    }
    let widths: Vec<usize> = (0..7).map(|j| table.iter().map(|row| row[j].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, c)| if j < 3 { format!("{c:<w$}", w = widths[j]) } else { format!("{c:>w$}", w = widths[j]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Per-(dataset, variant) means over seeds of every metric present in all rows of the
/// group. The seed field of a mean row holds the number of runs averaged.
pub fn mean_rows(rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<(String, String), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.dataset.clone(), r.variant.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, variant), g)| {
            let mean = |f: fn(&GzslMetrics) -> Option<f64>| -> Option<f64> {
                let vals: Option<Vec<f64>> = g.iter().map(|r| f(&r.metrics)).collect();
                vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
            };
            ReportRow {
                dataset,
                variant,
                seed: g.len() as u64,
                metrics: GzslMetrics { u: mean(|m| m.u), s: mean(|m| m.s), h: mean(|m| m.h), t1_z: mean(|m| m.t1_z) },
            }
        })
        .collect()
}
