use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cyclegzsl::data::{load_dataset, make_synthetic, save_dataset, SyntheticSpec};
use cyclegzsl::evaluate::{evaluate_generator, mean_rows, report_csv, report_table, EvalMode, GzslMetrics, ReportRow};
use cyclegzsl::models::{load_checkpoint, save_checkpoint, NetworkKind};
use cyclegzsl::training::{
    finetune_uwgan, metrics_csv, parse_metrics_csv, pretrain_classifier, pretrain_regressor, train_gan,
    ClassSubsetClassifier, Pretrained, TrainArtifacts, TrainConfig, Variant,
};
use cyclegzsl::{Dataset64, Error, Mlp64};
use serde_json::Value;

use crate::args::{EvalArgs, GenSyntheticArgs, InspectArgs, ModeArg, ReportArgs, TrainArgs};
use crate::manifest::{thread_cap, unix_now, RunManifest, RunStatus};
use crate::CliError;

/// File names inside a run directory.
pub struct RunFiles;

impl RunFiles {
    pub const CONFIG: &'static str = "config.json";
    pub const METRICS: &'static str = "metrics.csv";
    pub const METRICS_REGRESSOR: &'static str = "metrics_regressor.csv";
    pub const GENERATOR: &'static str = "generator.ckpt";
    pub const CRITIC: &'static str = "critic.ckpt";
    pub const REGRESSOR: &'static str = "regressor.ckpt";
    pub const CLASSIFIER: &'static str = "classifier.ckpt";
    pub const REPORT_CSV: &'static str = "report.csv";
    pub const REPORT_TXT: &'static str = "report.txt";
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    Ok(fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Creates `dir`, refusing to reuse a non-empty directory unless `force`.
fn prepare_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if let Ok(mut entries) = fs::read_dir(dir) {
        if entries.next().is_some() && !force {
            return Err(CliError::Refused(format!(
                "write into non-empty directory {} (pass --force to overwrite)",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

pub fn cmd_gen_synthetic(args: &GenSyntheticArgs) -> Result<String, CliError> {
    let spec = SyntheticSpec {
        name: args.name.clone(),
        visual_dim: args.k,
        semantic_dim: args.l,
        classes: args.classes,
        unseen: args.unseen,
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        noise_scale: args.noise,
        binary: args.binary,
        seed: args.seed,
    };
    let dataset: Dataset64 = make_synthetic(&spec)?;
    prepare_dir(&args.out, args.force)?;
    save_dataset(&dataset, &args.out)?;
    log::info!("wrote dataset {} to {}", dataset.name, args.out.display());
    Ok(dataset_summary(&dataset))
}

fn dataset_summary(d: &Dataset64) -> String {
    let m = d.manifest();
    format!(
        "dataset {}\n  K={} L={} C={} ({} seen, {} unseen), {:?} semantics\n  train samples {}, test samples {}\n  unseen classes {:?}\n  hash {}\n",
        m.name,
        m.visual_dim,
        m.semantic_dim,
        m.classes,
        m.seen_classes.len(),
        m.unseen_classes.len(),
        m.semantic_format,
        d.train_labels.len(),
        d.test_labels.len(),
        m.unseen_classes,
        d.fingerprint()
    )
}

/// Overlays the keys of `patch` onto `base`, recursing into objects.
fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge_json(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults < profile < config file < flags.
pub fn resolve_config(args: &TrainArgs) -> Result<TrainConfig, CliError> {
    let mut config = TrainConfig::default();
    if let Some(p) = args.profile {
        config.apply_profile(p);
    }
    if let Some(path) = &args.config {
        let text = read(path)?;
        let patch: Value = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        if !patch.is_object() {
            return Err(Error::parse(path, "config file must hold a JSON object").into());
        }
        let mut base = serde_json::to_value(&config).expect("config serializes");
        merge_json(&mut base, patch);
        config = serde_json::from_value(base).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    macro_rules! flag {
        ($field:ident) => {
            if let Some(v) = args.$field {
                config.$field = v;
            }
        };
    }
    flag!(variant);
    flag!(seed);
    flag!(epochs_gan);
    flag!(epochs_regressor);
    flag!(epochs_classifier);
    flag!(lr_generator);
    flag!(lr_critic);
    flag!(batch_gan);
    flag!(hidden);
    if let Some(v) = args.lambda_cycle {
        config.weights.cycle = v;
    }
    if let Some(v) = args.lambda_cls {
        config.weights.cls = v;
    }
    if let Some(v) = args.beta {
        config.weights.beta = v;
    }
    config.from_scratch_unseen |= args.from_scratch_unseen;
    config.record_wall_time |= args.wall_clock;
    config.validate()?;
    Ok(config)
}

fn load_net(dir: &Path, file: &str, kind: NetworkKind) -> Result<Mlp64, CliError> {
    let path = dir.join(file);
    let (mlp, header) = load_checkpoint::<f64>(&path)?;
    if header.kind != kind {
        return Err(Error::parse(&path, format!("expected a {kind} checkpoint, found {}", header.kind)).into());
    }
    Ok(mlp)
}

/// Rebuilds the artifacts of a completed cycle-wgan run directory.
fn load_source_run(dir: &Path, dataset: &Dataset64) -> Result<TrainArtifacts<f64>, CliError> {
    let manifest = RunManifest::load(dir)?;
    if manifest.config.variant != Variant::CycleWgan || manifest.status != RunStatus::Complete {
        return Err(Error::Config(format!(
            "{} is not a completed cycle-wgan run (variant {}, status {:?})",
            dir.display(),
            manifest.config.variant,
            manifest.status
        ))
        .into());
    }
    let classifier = match dir.join(RunFiles::CLASSIFIER).exists() {
        true => Some(ClassSubsetClassifier {
            model: load_net(dir, RunFiles::CLASSIFIER, NetworkKind::Classifier)?,
            classes: dataset.seen.clone(),
        }),
        false => None,
    };
    Ok(TrainArtifacts {
        variant: Variant::CycleWgan,
        generator: load_net(dir, RunFiles::GENERATOR, NetworkKind::Generator)?,
        critic: load_net(dir, RunFiles::CRITIC, NetworkKind::Discriminator)?,
        regressor: Some(load_net(dir, RunFiles::REGRESSOR, NetworkKind::Regressor)?),
        classifier,
        metrics: parse_metrics_csv(&read(&dir.join(RunFiles::METRICS))?)?,
        warnings: manifest.warnings,
        dataset_hash: manifest.dataset_hash,
        config_hash: manifest.config_hash,
    })
}

/// Runs the variant's stages and writes the run directory.
pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf, CliError> {
    let config = resolve_config(args)?;
    let threads = thread_cap()?;
    if config.variant == Variant::CycleUwgan && args.init_from.is_none() && !config.from_scratch_unseen {
        return Err(Error::Config(
            "cycle-uwgan needs --init-from <cycle-wgan run> or --from-scratch-unseen".into(),
        )
        .into());
    }
    if args.init_from.is_some() && config.variant != Variant::CycleUwgan {
        return Err(CliError::Usage("--init-from only applies to --variant cycle-uwgan".into()));
    }
    let dataset: Dataset64 = load_dataset(&args.dataset)?;
    let source = match &args.init_from {
        Some(dir) => Some(load_source_run(dir, &dataset)?),
        None => None,
    };

    prepare_dir(&args.out, args.force)?;
    let config_hash = config.hash();
    let mut manifest = RunManifest {
        config: config.clone(),
        config_hash: config_hash.clone(),
        dataset_dir: args.dataset.display().to_string(),
        dataset_name: dataset.name.clone(),
        dataset_hash: dataset.fingerprint(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        threads,
        started_unix: unix_now(),
        finished_unix: None,
        status: RunStatus::Running,
        source_run: args.init_from.as_ref().map(|p| p.display().to_string()),
        warnings: Vec::new(),
        outputs: Vec::new(),
    };
    manifest.save(&args.out)?;
    write(&args.out.join(RunFiles::CONFIG), config.to_json() + "\n")?;
    let mut outputs = vec![RunFiles::CONFIG.to_string()];
    log::info!("training {} (seed {}) into {}", config.variant, config.seed, args.out.display());

    let artifacts = match source {
        Some(src) => finetune_uwgan(&src, &dataset, &config)?,
        None => {
            let regressor = if config.variant.uses_cycle() {
                let fit = pretrain_regressor(&dataset, &config)?;
                write(&args.out.join(RunFiles::METRICS_REGRESSOR), metrics_csv(&fit.metrics()))?;
                outputs.push(RunFiles::METRICS_REGRESSOR.to_string());
                Some(fit.regressor)
            } else {
                None
            };
            let classifier = match pretrain_classifier(&dataset, &config) {
                Ok(c) => Some(c),
                Err(e) if !config.variant.uses_classifier() => {
                    log::warn!("no seen-class classifier, fake-sample accuracy not reported: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            train_gan(&dataset, &config, &Pretrained { regressor, classifier })?
        }
    };

    let nets: [(&str, Option<&Mlp64>); 4] = [
        (RunFiles::GENERATOR, Some(&artifacts.generator)),
        (RunFiles::CRITIC, Some(&artifacts.critic)),
        (RunFiles::REGRESSOR, artifacts.regressor.as_ref()),
        (RunFiles::CLASSIFIER, artifacts.classifier.as_ref().map(|c| &c.model)),
    ];
    for (file, net) in nets {
        if let Some(net) = net {
            save_checkpoint(net, &config_hash, &args.out.join(file))?;
            outputs.push(file.to_string());
        }
    }
    write(&args.out.join(RunFiles::METRICS), metrics_csv(&artifacts.metrics))?;
    outputs.push(RunFiles::METRICS.to_string());

    manifest.warnings = artifacts.warnings.clone();
    manifest.outputs = outputs;
    manifest.finished_unix = Some(unix_now());
    manifest.status = RunStatus::Complete;
    manifest.save(&args.out)?;
    Ok(args.out.clone())
}

/// Synthesize → fit → predict → metrics for a run; writes `report.csv` and `report.txt`.
pub fn cmd_eval(args: &EvalArgs) -> Result<ReportRow, CliError> {
    let manifest = RunManifest::load(&args.run)?;
    let generator = load_net(&args.run, RunFiles::GENERATOR, NetworkKind::Generator)?;
    let dataset_dir = args.dataset.clone().unwrap_or_else(|| PathBuf::from(&manifest.dataset_dir));
    let dataset: Dataset64 = load_dataset(&dataset_dir)?;
    if dataset.fingerprint() != manifest.dataset_hash {
        return Err(Error::Config(format!(
            "dataset at {} differs from the one the run was trained on",
            dataset_dir.display()
        ))
        .into());
    }
    let config = &manifest.config;
    let per_class = args.per_class_count.unwrap_or(config.synth_per_class);
    if per_class == 0 {
        return Err(CliError::Usage("--per-class-count must be at least 1".into()));
    }
    let modes: &[EvalMode] = match args.mode {
        ModeArg::Zsl => &[EvalMode::Zsl],
        ModeArg::Gzsl => &[EvalMode::Gzsl],
        ModeArg::Both => &[EvalMode::Zsl, EvalMode::Gzsl],
    };
    let mut metrics = GzslMetrics::default();
    for &mode in modes {
        log::info!("evaluating {} ({mode}, {per_class} synthesized per class)", config.variant);
        metrics = metrics.merge(evaluate_generator(&generator, &dataset, mode, per_class, config)?);
    }
    let row = ReportRow { dataset: dataset.name.clone(), variant: config.variant.to_string(), seed: config.seed, metrics };
    let rows = std::slice::from_ref(&row);
    write(&args.run.join(RunFiles::REPORT_CSV), report_csv(rows))?;
    write(&args.run.join(RunFiles::REPORT_TXT), report_table(rows, &[]))?;
    Ok(row)
}

pub const COMPARISON_HEADER: &str = "dataset_hash,dataset,variant,seed,u,s,H,T1_Z";

/// Comparison across evaluated runs, grouped by dataset hash, with per-variant means.
/// Returns the text table; writes the CSV form when requested.
pub fn cmd_report(args: &ReportArgs) -> Result<String, CliError> {
    let mut groups: BTreeMap<String, Vec<ReportRow>> = BTreeMap::new();
    for dir in &args.runs {
        let report = dir.join(RunFiles::REPORT_CSV);
        if !report.exists() {
            log::warn!("{} has not been evaluated; skipped", dir.display());
            continue;
        }
        let hash = RunManifest::load(dir)?.dataset_hash;
        let text = read(&report)?;
        for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
            groups.entry(hash.clone()).or_default().push(ReportRow::parse_csv_line(line)?);
        }
    }
    if groups.is_empty() {
        return Err(CliError::Usage("no evaluated runs given (run `eval` first)".into()));
    }
    let mut text = String::new();
    let mut csv = format!("{COMPARISON_HEADER}\n");
    for (hash, mut rows) in groups {
        rows.sort_by(|a, b| (&a.variant, a.seed).cmp(&(&b.variant, b.seed)));
        let means = mean_rows(&rows);
        text.push_str(&format!("dataset hash {}\n", &hash[..hash.len().min(16)]));
        text.push_str(&report_table(&rows, &means));
        text.push('\n');
        for r in &rows {
            csv.push_str(&format!("{hash},{}\n", r.csv_line()));
        }
        for m in &means {
            let line = m.csv_line();
            let mut f: Vec<&str> = line.split(',').collect();
            f[2] = "mean";
            csv.push_str(&format!("{hash},{}\n", f.join(",")));
        }
    }
    if let Some(path) = &args.csv {
        write(path, csv)?;
    }
    Ok(text)
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<String, CliError> {
    let path = &args.path;
    if path.is_file() {
        let (mlp, header) = load_checkpoint::<f64>(path)?;
        let mut out = format!("checkpoint {}\n  network {}\n", path.display(), header.kind);
        for (i, (r, c, act)) in header.layers.iter().enumerate() {
            out.push_str(&format!("  layer {i}: {r} -> {c} ({})\n", act.tag()));
        }
        out.push_str(&format!(
            "  parameters {}\n  config hash {}\n  fingerprint {}\n",
            mlp.param_count(),
            if header.config_hash.is_empty() { "-" } else { &header.config_hash },
            mlp.fingerprint()
        ));
        return Ok(out);
    }
    if path.join(crate::manifest::RUN_MANIFEST).exists() {
        let m = RunManifest::load(path)?;
        let mut out = format!(
            "run {}\n  variant {} seed {} status {:?}\n  dataset {} ({})\n  outputs {}\n",
            path.display(),
            m.config.variant,
            m.seed,
            m.status,
            m.dataset_name,
            m.dataset_dir,
            m.outputs.join(", ")
        );
        for w in &m.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
        if let Ok(report) = fs::read_to_string(path.join(RunFiles::REPORT_TXT)) {
            out.push_str(&report);
        }
        return Ok(out);
    }
    if path.join(cyclegzsl::data::DatasetFiles::MANIFEST).exists() {
        let d: Dataset64 = load_dataset(path)?;
        return Ok(dataset_summary(&d));
    }
    Err(CliError::Usage(format!(
        "{} is neither a checkpoint, a run directory nor a dataset directory",
        path.display()
    )))
}
