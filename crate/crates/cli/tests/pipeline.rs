use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use cyclegzsl::training::{Profile, Variant};
use cyclegzsl_cli::args::Command;
use cyclegzsl_cli::commands::{cmd_eval, cmd_gen_synthetic, cmd_inspect, cmd_report, cmd_train, resolve_config, RunFiles};
use cyclegzsl_cli::manifest::{RunManifest, RunStatus};
use cyclegzsl_cli::{Cli, CliError};

fn parse(args: &[&str]) -> Result<Command, clap::Error> {
    let mut argv = vec!["cyclegzsl"];
    argv.extend_from_slice(args);
    Cli::try_parse_from(argv).map(|c| c.command)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(out: &Path, extra: &[&str]) -> Result<String, CliError> {
    let mut args = vec!["gen-synthetic", "--out", s(out), "--classes", "6", "--unseen", "2", "--train-per-class", "20", "--test-per-class", "5"];
    args.extend_from_slice(extra);
    let Ok(Command::GenSynthetic(a)) = parse(&args) else { panic!("bad args") };
    cmd_gen_synthetic(&a)
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Result<PathBuf, CliError> {
    let mut args = vec!["train", "--dataset", s(data), "--out", s(out), "--epochs-gan", "3", "--epochs-regressor", "3", "--epochs-classifier", "3"];
    args.extend_from_slice(extra);
    let Ok(Command::Train(a)) = parse(&args) else { panic!("bad args") };
    cmd_train(&a)
}

fn eval(run: &Path, extra: &[&str]) -> Result<cyclegzsl::evaluate::ReportRow, CliError> {
    let mut args = vec!["eval", s(run), "--per-class-count", "20"];
    args.extend_from_slice(extra);
    let Ok(Command::Eval(a)) = parse(&args) else { panic!("bad args") };
    cmd_eval(&a)
}

#[test]
fn gen_synthetic_is_deterministic_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    gen(&a, &["--seed", "4"]).unwrap();
    gen(&b, &["--seed", "4"]).unwrap();
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
    assert!(matches!(gen(&a, &[]), Err(CliError::Refused(_))));
    gen(&a, &["--force"]).unwrap();
    let c = tmp.path().join("c");
    let Ok(Command::GenSynthetic(bad)) = parse(&["gen-synthetic", "--out", s(&c), "--classes", "4", "--unseen", "4"]) else { panic!() };
    assert!(matches!(cmd_gen_synthetic(&bad), Err(CliError::Core(cyclegzsl::Error::Validation(_)))));
}

#[test]
fn profile_resolution_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let Ok(Command::Train(a)) = parse(&["train", "--dataset", "d", "--out", "o", "--profile", "cub"]) else { panic!() };
    let c = resolve_config(&a).unwrap();
    assert_eq!(c.lr_generator, 1e-4);
    assert_eq!(c.lr_critic, 1e-3);
    assert_eq!(c.batch_gan, 64);
    assert_eq!(c.hidden, 4096);
    assert_eq!(c.weights.cycle, 0.01);
    assert_eq!(a.profile, Some(Profile::Cub));

    let file = tmp.path().join("cfg.json");
    fs::write(&file, r#"{"lr_generator": 0.002, "weights": {"cycle": 0.5}, "seed": 9}"#).unwrap();
    let Ok(Command::Train(a)) =
        parse(&["train", "--dataset", "d", "--out", "o", "--profile", "cub", "--config", s(&file), "--seed", "11"])
    else {
        panic!()
    };
    let c = resolve_config(&a).unwrap();
    assert_eq!(c.lr_generator, 0.002);
    assert_eq!(c.weights.cycle, 0.5);
    assert_eq!(c.weights.gp_lambda, 10.0);
    assert_eq!(c.seed, 11);

    fs::write(&file, r#"{"learning_rate": 1}"#).unwrap();
    let Ok(Command::Train(a)) = parse(&["train", "--dataset", "d", "--out", "o", "--config", s(&file)]) else { panic!() };
    assert!(matches!(resolve_config(&a), Err(CliError::Core(cyclegzsl::Error::Config(_)))));
}

#[test]
fn unknown_variant_lists_the_valid_names() {
    let err = parse(&["train", "--dataset", "d", "--out", "o", "--variant", "cycle-gan"]).unwrap_err().to_string();
    for v in ["baseline", "cycle-wgan", "cycle-uwgan", "cycle-clswgan"] {
        assert!(err.contains(v), "{err}");
    }
}

#[test]
fn train_eval_finetune_report() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, &[]).unwrap();

    let base = train(&data, &tmp.path().join("base"), &["--variant", "baseline"]).unwrap();
    let cyc = train(&data, &tmp.path().join("cyc"), &["--variant", "cycle-wgan"]).unwrap();
    let manifest = RunManifest::load(&cyc).unwrap();
    assert_eq!(manifest.status, RunStatus::Complete);
    assert_eq!(manifest.config.variant, Variant::CycleWgan);
    assert!(cyc.join(RunFiles::REGRESSOR).exists());
    assert!(!base.join(RunFiles::REGRESSOR).exists());
    let metrics = fs::read_to_string(cyc.join(RunFiles::METRICS)).unwrap();
    assert_eq!(metrics.lines().count(), 4);

    let err = train(&data, &tmp.path().join("uw0"), &["--variant", "cycle-uwgan"]).unwrap_err();
    assert!(matches!(err, CliError::Core(cyclegzsl::Error::Config(_))), "{err}");
    assert!(matches!(
        train(&data, &tmp.path().join("bad"), &["--variant", "baseline", "--init-from", s(&cyc)]),
        Err(CliError::Usage(_))
    ));
    let uw = train(&data, &tmp.path().join("uw"), &["--variant", "cycle-uwgan", "--init-from", s(&cyc)]).unwrap();
    assert_eq!(RunManifest::load(&uw).unwrap().source_run.as_deref(), Some(s(&cyc)));

    let row = eval(&base, &[]).unwrap();
    assert!(row.metrics.u.is_some() && row.metrics.s.is_some() && row.metrics.h.is_some() && row.metrics.t1_z.is_some());
    eval(&cyc, &["--mode", "gzsl"]).unwrap();
    let zsl = eval(&uw, &["--mode", "zsl"]).unwrap();
    assert!(zsl.metrics.t1_z.is_some() && zsl.metrics.h.is_none());

    let csv = tmp.path().join("report.csv");
    let Ok(Command::Report(r)) = parse(&["report", s(&base), s(&cyc), s(&uw), "--csv", s(&csv)]) else { panic!() };
    let text = cmd_report(&r).unwrap();
    assert!(text.contains("mean"), "{text}");
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 1 + 3 + 3);

    let Ok(Command::Inspect(i)) = parse(&["inspect", s(&cyc.join(RunFiles::GENERATOR))]) else { panic!() };
    assert!(cmd_inspect(&i).unwrap().contains("generator"));
}

#[test]
fn eval_rejects_a_changed_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, &[]).unwrap();
    let run = train(&data, &tmp.path().join("run"), &["--variant", "baseline"]).unwrap();
    gen(&data, &["--seed", "1", "--force"]).unwrap();
    assert!(matches!(eval(&run, &[]), Err(CliError::Core(cyclegzsl::Error::Config(_)))));
    let Ok(Command::Report(r)) = parse(&["report", s(&run)]) else { panic!() };
    assert!(matches!(cmd_report(&r), Err(CliError::Usage(_))));
}
