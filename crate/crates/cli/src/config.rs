use std::path::{Path, PathBuf};

use serde::Deserialize;
use uti2speech::cnn::{CnnArchitecture, TrainConfig};
use uti2speech::features::StftConfig;
use uti2speech::ingest::{hop_from_rate, HOP, SAMPLE_RATE, ULTRASOUND_FPS};
use uti2speech::postproc::{GriffinLimConfig, SmoothingConfig};
use uti2speech::toy::ToyConfig;
use uti2speech::vocoder::{MgcConfig, VocoderConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// 80-band log-mel targets, one network.
    Mel,
    /// Continuous-vocoder targets: a 25-dim spectral and a 2-dim excitation network.
    Contvoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Contvoc,
    Griffinlim,
    Export,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: PathBuf,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "corpus".into(),
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Features {
    pub kind: FeatureKind,
    pub sample_rate: u32,
    pub fps: f64,
    pub fft_size: usize,
    pub win_size: usize,
    pub mgc_order: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for Features {
    fn default() -> Self {
        let mgc = MgcConfig::default();
        Self {
            kind: FeatureKind::Mel,
            sample_rate: SAMPLE_RATE,
            fps: ULTRASOUND_FPS,
            fft_size: 1024,
            win_size: 1024,
            mgc_order: mgc.order,
            alpha: mgc.alpha,
            gamma: mgc.gamma,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Network {
    /// `standard`, `toy` or `reduced`; the fields below override it.
    pub preset: String,
    pub input_rows: Option<usize>,
    pub input_cols: Option<usize>,
    pub kernel: Option<usize>,
    pub conv: Option<Vec<usize>>,
    pub hidden: Option<Vec<usize>>,
    pub dropout: Option<f64>,
}

impl Default for Network {
    fn default() -> Self {
        Self {
            preset: "standard".into(),
            input_rows: None,
            input_cols: None,
            kernel: None,
            conv: None,
            hidden: None,
            dropout: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Train {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for Train {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Smoothing {
    pub window: usize,
    pub order: usize,
}

impl Default for Smoothing {
    fn default() -> Self {
        let s = SmoothingConfig::default();
        Self {
            window: s.window,
            order: s.order,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Synth {
    pub engine: Engine,
    pub griffin_lim_iterations: usize,
}

impl Default for Synth {
    fn default() -> Self {
        Self {
            engine: Engine::Griffinlim,
            griffin_lim_iterations: GriffinLimConfig::default().iterations,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Eval {
    /// Split subset that predict, synth and eval work on.
    pub subset: String,
    /// Reference WAVs; defaults to the corpus.
    pub reference_dir: Option<PathBuf>,
    /// WAVs under test; defaults to `<output>/synth`.
    pub test_dir: Option<PathBuf>,
    /// `listener,system,sentence,score` CSV for `mushra`.
    pub scores: Option<PathBuf>,
}

impl Default for Eval {
    fn default() -> Self {
        Self {
            subset: "test".into(),
            reference_dir: None,
            test_dir: None,
            scores: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub split: u64,
    pub init: u64,
    pub train: u64,
    pub synth: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toy {
    pub utterances: usize,
    pub frames: usize,
    pub num_vectors: usize,
    pub pix_per_vector: usize,
    pub seed: u64,
}

impl Default for Toy {
    fn default() -> Self {
        let t = ToyConfig::default();
        Self {
            utterances: 3,
            frames: t.frames,
            num_vectors: t.num_vectors,
            pix_per_vector: t.pix_per_vector,
            seed: t.seed,
        }
    }
}

/// Everything a pipeline run needs, read from one TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub features: Features,
    pub network: Network,
    pub train: Train,
    pub smoothing: Smoothing,
    pub synth: Synth,
    pub eval: Eval,
    pub seeds: Seeds,
    pub toy: Toy,
}

fn config_err(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Applies one `section.key=value` override. The value is parsed as TOML
/// and falls back to a plain string.
fn apply_override(root: &mut toml::Table, spec: &str, path: &Path) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(path, format!("override {spec:?} is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut table = root;
    for s in sections {
        table = table
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| config_err(path, format!("{key}: {s} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Reads `path`, applies overrides and resolves relative paths against
    /// the directory of the config file.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(path, e.to_string()))?;
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| config_err(path, e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o, path)?;
        }
        let mut cfg: PipelineConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| config_err(path, e.message().to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.paths.corpus, &mut cfg.paths.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for p in [
            &mut cfg.eval.reference_dir,
            &mut cfg.eval.test_dir,
            &mut cfg.eval.scores,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate().map_err(|m| config_err(path, m))?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        let hop = self.hop()?;
        if hop != HOP {
            return Err(format!(
                "{} Hz / {} fps gives a hop of {hop} samples; the toolkit works at {HOP}",
                self.features.sample_rate, self.features.fps
            ));
        }
        if !["train", "val", "test"].contains(&self.eval.subset.as_str()) {
            return Err(format!(
                "eval.subset must be train, val or test, got {:?}",
                self.eval.subset
            ));
        }
        self.architecture(1)?.validate().map_err(|e| e.to_string())?;
        self.train_config().validate().map_err(|e| e.to_string())?;
        self.smoothing().validate().map_err(|e| e.to_string())?;
        if self.features.kind == FeatureKind::Contvoc {
            self.vocoder().mgc.validate().map_err(|e| e.to_string())?;
            if self.features.gamma == 0.0 {
                return Err("contvoc features need features.gamma < 0".into());
            }
        }
        Ok(())
    }

    /// Analysis hop from the sample rate and the ultrasound frame rate.
    pub fn hop(&self) -> Result<usize, String> {
        hop_from_rate(self.features.sample_rate, self.features.fps).map_err(|e| e.to_string())
    }

    pub fn stft(&self) -> StftConfig {
        StftConfig {
            fft_size: self.features.fft_size,
            win_size: self.features.win_size,
            ..Default::default()
        }
    }

    pub fn vocoder(&self) -> VocoderConfig {
        let mut v = VocoderConfig {
            seed: self.seeds.synth,
            ..Default::default()
        };
        v.mgc.order = self.features.mgc_order;
        v.mgc.alpha = self.features.alpha;
        v.mgc.gamma = self.features.gamma;
        v
    }

    pub fn architecture(&self, output: usize) -> Result<CnnArchitecture, String> {
        let n = &self.network;
        let mut a = match n.preset.as_str() {
            "standard" => CnnArchitecture::standard(output),
            "toy" => CnnArchitecture::toy(output),
            "reduced" => CnnArchitecture::reduced(output),
            other => return Err(format!("unknown network preset {other:?}")),
        };
        if let Some(v) = n.input_rows {
            a.input_rows = v;
        }
        if let Some(v) = n.input_cols {
            a.input_cols = v;
        }
        if let Some(v) = n.kernel {
            a.kernel = v;
        }
        if let Some(v) = &n.conv {
            a.conv = v.clone();
        }
        if let Some(v) = &n.hidden {
            a.hidden = v.clone();
        }
        if let Some(v) = n.dropout {
            a.dropout = v;
        }
        Ok(a)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            seed: self.seeds.train,
        }
    }

    pub fn smoothing(&self) -> SmoothingConfig {
        SmoothingConfig {
            window: self.smoothing.window,
            order: self.smoothing.order,
        }
    }

    pub fn griffin_lim(&self) -> GriffinLimConfig {
        GriffinLimConfig {
            iterations: self.synth.griffin_lim_iterations,
            seed: self.seeds.synth,
            ..Default::default()
        }
    }

    pub fn toy(&self) -> ToyConfig {
        ToyConfig {
            frames: self.toy.frames,
            num_vectors: self.toy.num_vectors,
            pix_per_vector: self.toy.pix_per_vector,
            seed: self.toy.seed,
        }
    }
}
