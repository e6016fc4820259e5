use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_uti2speech");

const CONFIG: &str = r#"
[paths]
corpus = "corpus"
output = "out"

[network]
preset = "toy"

[train]
max_epochs = 3
batch_size = 8

[synth]
griffin_lim_iterations = 10

[toy]
utterances = 3
frames = 30
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("pipeline.toml");
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .env_remove("UTI2SPEECH_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pipeline.toml"), CONFIG).unwrap();
    dir
}

fn full_run(dir: &Path, jobs: &str) {
    for stage in ["toy-corpus", "split", "extract", "train", "predict", "synth", "eval"] {
        ok(dir, &["--jobs", jobs, stage]);
    }
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn toy_pipeline_produces_audio_and_scores() {
    let dir = setup();
    full_run(dir.path(), "2");
    let out = dir.path().join("out");
    for id in ["toy000", "toy001", "toy002"] {
        let wav = uti2speech::ingest::read_wav(&out.join("synth").join(format!("{id}.wav"))).unwrap();
        assert_eq!(wav.sample_rate, 22050);
        assert!(wav.rms() > 0.0, "{id} is silent");
        assert!(wav.samples.iter().all(|v| v.is_finite()));
    }
    let tsv = String::from_utf8(read(&out, "eval/mcd.tsv")).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "utterance\tmcd_db\tframes");
    assert_eq!(lines.len(), 5);
    let mean: f64 = lines[4].split('\t').nth(1).unwrap().parse().unwrap();
    assert!(mean.is_finite() && mean > 0.0);
    let log = String::from_utf8(read(&out, "model/mel.log")).unwrap();
    assert!(log.lines().count() >= 2);
}

#[test]
fn runs_are_bitwise_reproducible_across_thread_counts() {
    let (a, b) = (setup(), setup());
    full_run(a.path(), "1");
    full_run(b.path(), "4");
    for rel in [
        "out/split.tsv",
        "out/features/target.nrm",
        "out/model/mel.cnn",
        "out/predict/toy001.mel",
        "out/synth/toy001.wav",
        "out/eval/mcd.tsv",
    ] {
        assert!(read(a.path(), rel) == read(b.path(), rel), "{rel} differs between runs");
    }
}

#[test]
fn eval_of_reference_against_itself_is_zero() {
    let dir = setup();
    ok(dir.path(), &["toy-corpus"]);
    ok(dir.path(), &["split"]);
    let stdout = ok(dir.path(), &["eval", "--set", "eval.test_dir=\"corpus\""]);
    assert!(stdout.starts_with("eval\t3\t0.0000"), "{stdout}");
}

#[test]
fn missing_upstream_artifact_is_reported_in_one_line() {
    let dir = setup();
    let out = run(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    let line = err.lines().last().unwrap();
    assert!(line.starts_with("error\ttrain\tmissing-artifact\t"), "{line}");
    assert!(line.contains("split.tsv"));
    assert!(!dir.path().join("out/model").exists());
}

#[test]
fn bad_config_is_rejected_before_any_work() {
    let dir = setup();
    let out = run(dir.path(), &["toy-corpus", "--set", "features.fps=80"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("invalid-config"));
    assert!(!dir.path().join("corpus").exists());
}

#[test]
fn engine_must_match_features() {
    let dir = setup();
    let out = run(dir.path(), &["synth", "--engine", "contvoc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("dimension-mismatch"));
}

#[test]
fn mushra_scores_are_tested_pairwise() {
    let dir = setup();
    std::fs::write(
        dir.path().join("scores.csv"),
        "listener,system,sentence,score\nl1,a,s1,10\nl1,b,s1,90\nl2,a,s1,20\nl2,b,s1,80\n",
    )
    .unwrap();
    let stdout = ok(dir.path(), &["mushra", "--set", "eval.scores=\"scores.csv\""]);
    assert_eq!(stdout, "mushra\ta\tb\t0.333333\tfalse\n");
    assert!(dir.path().join("out/eval/mushra.tsv").exists());
}
