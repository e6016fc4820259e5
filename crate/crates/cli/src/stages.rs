//! One function per subcommand. Each stage loads and checks all of its
//! inputs before computing anything, and rewrites its outputs in full.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use uti2speech::cnn::{fit_input, load_model, predict_sequence, save_model, train, CnnModel, Dataset};
use uti2speech::eval::{mcd_waveforms, mushra_report, McdReport, MushraScores};
use uti2speech::features::{
    mel_spectrogram, read_mel, write_mel, FeatureNormalizer, MelFilterbank, MelSpectrogram, N_MELS,
};
use uti2speech::ingest::{
    align_frames, read_frames, read_split_manifest, read_ultrasound, read_wav, split_dataset, write_frames,
    write_split_manifest, write_wav, DatasetSplit, ResizedFrame, Subset, SAMPLE_RATE,
};
use uti2speech::postproc::{export_conditioning, griffin_lim, prepare_conditioning};
use uti2speech::toy::write_toy_corpus;
use uti2speech::vocoder::{analyze, read_params, synthesize, write_params, ContParams};
use uti2speech::Matrix;

use crate::config::{Engine, FeatureKind, PipelineConfig};
use crate::error::{CliError, CliResult};

/// Where every artifact lives under the output root.
struct Layout<'a> {
    cfg: &'a PipelineConfig,
}

impl<'a> Layout<'a> {
    fn out(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.cfg.paths.output.clone(), |p, s| p.join(s))
    }

    fn split(&self) -> PathBuf {
        self.out(&["split.tsv"])
    }

    fn frames(&self, id: &str) -> PathBuf {
        self.out(&["features", &format!("{id}.frm")])
    }

    fn target(&self, id: &str) -> PathBuf {
        self.out(&["features", &format!("{id}.{}", self.ext())])
    }

    fn normalizer(&self) -> PathBuf {
        self.out(&["features", "target.nrm"])
    }

    fn model(&self, name: &str) -> PathBuf {
        self.out(&["model", &format!("{name}.cnn")])
    }

    fn train_log(&self, name: &str) -> PathBuf {
        self.out(&["model", &format!("{name}.log")])
    }

    fn prediction(&self, id: &str) -> PathBuf {
        self.out(&["predict", &format!("{id}.{}", self.ext())])
    }

    fn synth_wav(&self, id: &str) -> PathBuf {
        self.out(&["synth", &format!("{id}.wav")])
    }

    fn conditioning(&self, id: &str) -> PathBuf {
        self.out(&["synth", &format!("{id}.cond.mel")])
    }

    fn ext(&self) -> &'static str {
        match self.cfg.features.kind {
            FeatureKind::Mel => "mel",
            FeatureKind::Contvoc => "cvp",
        }
    }
}

fn require(path: &Path, needs: &'static str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact {
            path: path.to_path_buf(),
            needs,
        })
    }
}

fn make_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| {
        uti2speech::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

/// Networks trained for a feature kind: name and target column range.
fn models(kind: FeatureKind, order: usize) -> Vec<(&'static str, std::ops::Range<usize>)> {
    match kind {
        FeatureKind::Mel => vec![("mel", 0..N_MELS)],
        FeatureKind::Contvoc => vec![("spectral", 0..order + 1), ("excitation", order + 1..order + 3)],
    }
}

fn target_dims(cfg: &PipelineConfig) -> usize {
    match cfg.features.kind {
        FeatureKind::Mel => N_MELS,
        FeatureKind::Contvoc => cfg.features.mgc_order + 3,
    }
}

fn load_split(l: &Layout) -> CliResult<DatasetSplit> {
    let p = l.split();
    require(&p, "split")?;
    Ok(read_split_manifest(&p)?)
}

/// Ids of `name`, falling back to val and then train when it is empty
/// (tiny corpora round whole subsets away).
fn subset_ids(split: &DatasetSplit, name: &str) -> Vec<String> {
    let wanted: Subset = name.parse().expect("validated at config load");
    for s in [wanted, Subset::Val, Subset::Train] {
        if !split.subset(s).is_empty() {
            if s != wanted {
                log::warn!("{wanted} subset is empty; using {s}");
            }
            return split.subset(s).to_vec();
        }
    }
    Vec::new()
}

pub fn toy_corpus(cfg: &PipelineConfig) -> CliResult<()> {
    let ids = write_toy_corpus(&cfg.paths.corpus, cfg.toy.utterances, &cfg.toy())?;
    println!("toy-corpus\t{}\t{}", ids.len(), cfg.paths.corpus.display());
    Ok(())
}

/// Utterances with a WAV, a `.bin` container and a `.meta` sidecar.
fn corpus_ids(corpus: &Path) -> CliResult<Vec<String>> {
    require(corpus, "toy-corpus")?;
    let rd = std::fs::read_dir(corpus).map_err(|e| uti2speech::Error::Io {
        path: corpus.to_path_buf(),
        source: e,
    })?;
    let mut ids = Vec::new();
    for entry in rd.flatten() {
        let p = entry.path();
        if p.extension().is_some_and(|e| e == "wav") {
            let stem = p.file_stem().unwrap().to_string_lossy().to_string();
            if corpus.join(format!("{stem}.bin")).exists() && corpus.join(format!("{stem}.meta")).exists() {
                ids.push(stem);
            } else {
                log::warn!("{} has no ultrasound container; skipped", p.display());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn split(cfg: &PipelineConfig) -> CliResult<()> {
    let ids = corpus_ids(&cfg.paths.corpus)?;
    let s = split_dataset(&ids, cfg.seeds.split)?;
    make_dir(&cfg.paths.output)?;
    write_split_manifest(&s, &Layout { cfg }.split())?;
    println!("split\t{}\t{}\t{}", s.train.len(), s.val.len(), s.test.len());
    Ok(())
}

enum Target {
    Mel(MelSpectrogram),
    Params(ContParams),
}

impl Target {
    fn matrix(&self) -> Matrix {
        match self {
            Target::Mel(m) => m.values.clone(),
            Target::Params(p) => p.to_matrix(),
        }
    }
}

pub fn extract(cfg: &PipelineConfig) -> CliResult<()> {
    let l = Layout { cfg };
    let split = load_split(&l)?;
    let corpus = &cfg.paths.corpus;
    let ids: Vec<&String> = split.train.iter().chain(&split.val).chain(&split.test).collect();
    for id in &ids {
        for ext in ["wav", "bin", "meta"] {
            require(&corpus.join(format!("{id}.{ext}")), "toy-corpus")?;
        }
    }
    make_dir(&l.out(&["features"]))?;
    let fb = MelFilterbank::new(
        uti2speech::features::MEL_FMIN,
        uti2speech::features::MEL_FMAX,
        N_MELS,
        cfg.features.fft_size,
        SAMPLE_RATE,
    )?;
    let stft = cfg.stft();
    let voc = cfg.vocoder();
    let targets: Vec<(String, Matrix)> = ids
        .par_iter()
        .map(|id| -> CliResult<(String, Matrix)> {
            let us = read_ultrasound(&corpus.join(format!("{id}.bin")), &corpus.join(format!("{id}.meta")))?;
            let wav = read_wav(&corpus.join(format!("{id}.wav")))?;
            let t = align_frames(us.len(), wav.len())?;
            write_frames(&us.truncated(t).resized()?, &l.frames(id))?;
            let target = match cfg.features.kind {
                FeatureKind::Mel => {
                    let mut m = mel_spectrogram(&wav, &stft, &fb)?;
                    m.values = m.values.truncated(t);
                    write_mel(&m, &l.target(id))?;
                    Target::Mel(m)
                }
                FeatureKind::Contvoc => {
                    let mut p = analyze(&wav, &voc)?;
                    p.frames.truncate(t);
                    write_params(&p, &l.target(id))?;
                    Target::Params(p)
                }
            };
            Ok((id.to_string(), target.matrix()))
        })
        .collect::<CliResult<_>>()?;

    let train_mats: Vec<&Matrix> = targets
        .iter()
        .filter(|(id, _)| split.train.contains(id))
        .map(|(_, m)| m)
        .collect();
    let norm = FeatureNormalizer::fit(train_mats)?;
    norm.save(&l.normalizer())?;
    let mut stats = String::from("dim\tmean\tstd\n");
    for (d, (m, s)) in norm.mean.iter().zip(&norm.std).enumerate() {
        stats.push_str(&format!("{d}\t{m:.6}\t{s:.6}\n"));
    }
    let p = l.out(&["features", "target_stats.tsv"]);
    std::fs::write(&p, stats).map_err(|e| uti2speech::Error::Io { path: p, source: e })?;
    let frames: usize = targets.iter().map(|(_, m)| m.rows()).sum();
    println!("extract\t{}\t{frames}", targets.len());
    Ok(())
}

/// Frames and target matrix of one utterance, checked against each other
/// and against the configured feature dimension.
fn load_pair(cfg: &PipelineConfig, l: &Layout, id: &str) -> CliResult<(Vec<ResizedFrame>, Matrix)> {
    let (fp, tp) = (l.frames(id), l.target(id));
    require(&fp, "extract")?;
    require(&tp, "extract")?;
    let frames = read_frames(&fp)?;
    let m = match cfg.features.kind {
        FeatureKind::Mel => read_mel(&tp)?.values,
        FeatureKind::Contvoc => read_params(&tp)?.to_matrix(),
    };
    if m.cols() != target_dims(cfg) {
        return Err(CliError::Mismatch(format!(
            "{}: {} feature dims, config expects {}",
            tp.display(),
            m.cols(),
            target_dims(cfg)
        )));
    }
    if m.rows() != frames.len() {
        return Err(CliError::Mismatch(format!(
            "{id}: {} image frames but {} feature frames",
            frames.len(),
            m.rows()
        )));
    }
    Ok((frames, m))
}

fn dataset(
    pairs: &[(Vec<ResizedFrame>, Matrix)],
    cols: &std::ops::Range<usize>,
    model: &CnnModel,
    norm: &FeatureNormalizer,
) -> CliResult<Dataset<f32>> {
    let arch = model.architecture();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (frames, m) in pairs {
        let sub = norm.apply(&m.columns(cols.clone()))?;
        for (f, row) in frames.iter().zip(sub.iter_rows()) {
            inputs.push(fit_input(f, arch)?.into_iter().map(|v| v as f32).collect());
            targets.push(row.iter().map(|&v| v as f32).collect());
        }
    }
    Ok(Dataset::new(inputs, targets)?)
}

fn slice_normalizer(n: &FeatureNormalizer, cols: &std::ops::Range<usize>) -> FeatureNormalizer {
    FeatureNormalizer {
        mean: n.mean[cols.clone()].to_vec(),
        std: n.std[cols.clone()].to_vec(),
        constant_dims: n
            .constant_dims
            .iter()
            .filter(|d| cols.contains(d))
            .map(|d| d - cols.start)
            .collect(),
    }
}

pub fn train_models(cfg: &PipelineConfig) -> CliResult<()> {
    let l = Layout { cfg };
    let split = load_split(&l)?;
    let val_ids = if split.val.is_empty() {
        log::warn!("validation subset is empty; validating on the training subset");
        &split.train
    } else {
        &split.val
    };
    let load = |ids: &[String]| {
        ids.iter()
            .map(|id| load_pair(cfg, &l, id))
            .collect::<CliResult<Vec<_>>>()
    };
    let train_pairs = load(&split.train)?;
    let val_pairs = load(val_ids)?;
    require(&l.normalizer(), "extract")?;
    let norm = FeatureNormalizer::load(&l.normalizer())?;
    if norm.dims() != target_dims(cfg) {
        return Err(CliError::Mismatch(format!(
            "normalizer has {} dims, config expects {}",
            norm.dims(),
            target_dims(cfg)
        )));
    }
    make_dir(&l.out(&["model"]))?;
    for (name, cols) in models(cfg.features.kind, cfg.features.mgc_order) {
        let arch = cfg.architecture(cols.len()).map_err(CliError::Mismatch)?;
        let mut model = CnnModel::new(arch, cfg.seeds.init)?;
        let sub_norm = slice_normalizer(&norm, &cols);
        let data = dataset(&train_pairs, &cols, &model, &sub_norm)?;
        let val = dataset(&val_pairs, &cols, &model, &sub_norm)?;
        let h = train(&mut model, &data, &val, &cfg.train_config())?;
        model.target_norm = Some(sub_norm);
        save_model(&model, &l.model(name))?;
        h.save_log(&l.train_log(name))?;
        let best = &h.epochs[h.best_epoch - 1];
        println!(
            "train\t{name}\t{}\t{:.6}\t{:.6}",
            h.best_epoch, best.train_mse, best.val_mse
        );
    }
    Ok(())
}

pub fn predict(cfg: &PipelineConfig) -> CliResult<()> {
    let l = Layout { cfg };
    let split = load_split(&l)?;
    let ids = subset_ids(&split, &cfg.eval.subset);
    let specs = models(cfg.features.kind, cfg.features.mgc_order);
    let mut nets = Vec::new();
    for (name, cols) in &specs {
        let p = l.model(name);
        require(&p, "train")?;
        let m = load_model(&p)?;
        if m.output_dim() != cols.len() {
            return Err(CliError::Mismatch(format!(
                "{}: model outputs {} values, {name} features have {}",
                p.display(),
                m.output_dim(),
                cols.len()
            )));
        }
        nets.push(m);
    }
    let inputs: Vec<Vec<ResizedFrame>> = ids
        .iter()
        .map(|id| {
            let p = l.frames(id);
            require(&p, "extract")?;
            Ok(read_frames(&p)?)
        })
        .collect::<CliResult<_>>()?;
    make_dir(&l.out(&["predict"]))?;
    for (id, frames) in ids.iter().zip(&inputs) {
        let mut parts = Vec::new();
        for net in &nets {
            let x: Vec<Vec<f64>> = frames
                .iter()
                .map(|f| fit_input(f, net.architecture()))
                .collect::<Result<_, _>>()?;
            parts.push(predict_sequence(net, &x)?);
        }
        let m = parts[1..].iter().fold(parts[0].clone(), |a, b| a.hstack(b));
        match cfg.features.kind {
            FeatureKind::Mel => write_mel(
                &MelSpectrogram {
                    values: m,
                    hop: uti2speech::ingest::HOP as u32,
                    sample_rate: SAMPLE_RATE,
                },
                &l.prediction(id),
            )?,
            FeatureKind::Contvoc => {
                let mut p = ContParams::from_matrix(&m)?;
                p.sanitize();
                write_params(&p, &l.prediction(id))?;
            }
        }
    }
    println!("predict\t{}", ids.len());
    Ok(())
}

pub fn synth(cfg: &PipelineConfig, engine: Engine) -> CliResult<()> {
    let l = Layout { cfg };
    let needs_kind = match engine {
        Engine::Contvoc => FeatureKind::Contvoc,
        Engine::Griffinlim | Engine::Export => FeatureKind::Mel,
    };
    if cfg.features.kind != needs_kind {
        return Err(CliError::Mismatch(
            format!(
                "engine {engine:?} needs {needs_kind:?} features, config has {:?}",
                cfg.features.kind
            )
            .to_lowercase(),
        ));
    }
    let split = load_split(&l)?;
    let ids = subset_ids(&split, &cfg.eval.subset);
    for id in &ids {
        require(&l.prediction(id), "predict")?;
    }
    make_dir(&l.out(&["synth"]))?;
    let residuals: Vec<Option<f64>> = ids
        .par_iter()
        .map(|id| -> CliResult<Option<f64>> {
            let p = l.prediction(id);
            match engine {
                Engine::Contvoc => {
                    let params = read_params(&p)?;
                    write_wav(&synthesize(&params, &cfg.vocoder().synth())?, &l.synth_wav(id))?;
                    Ok(None)
                }
                Engine::Griffinlim => {
                    let cond = prepare_conditioning(&read_mel(&p)?, &cfg.smoothing())?;
                    let out = griffin_lim(&cond, &cfg.griffin_lim())?;
                    write_wav(&out.wav, &l.synth_wav(id))?;
                    Ok(out.residuals.last().copied())
                }
                Engine::Export => {
                    let cond = prepare_conditioning(&read_mel(&p)?, &cfg.smoothing())?;
                    export_conditioning(&cond, &l.conditioning(id))?;
                    Ok(None)
                }
            }
        })
        .collect::<CliResult<_>>()?;
    for (id, r) in ids.iter().zip(&residuals) {
        if let Some(r) = r {
            log::info!("{id}: final spectral convergence {r:.4}");
        }
    }
    println!("synth\t{}\t{}", format!("{engine:?}").to_lowercase(), ids.len());
    Ok(())
}

pub fn eval(cfg: &PipelineConfig) -> CliResult<()> {
    let l = Layout { cfg };
    let split = load_split(&l)?;
    let ids = subset_ids(&split, &cfg.eval.subset);
    let ref_dir = cfg
        .eval
        .reference_dir
        .clone()
        .unwrap_or_else(|| cfg.paths.corpus.clone());
    let test_dir = cfg.eval.test_dir.clone().unwrap_or_else(|| l.out(&["synth"]));
    let pairs: Vec<(PathBuf, PathBuf)> = ids
        .iter()
        .map(|id| (ref_dir.join(format!("{id}.wav")), test_dir.join(format!("{id}.wav"))))
        .collect();
    for (r, t) in &pairs {
        require(r, "toy-corpus")?;
        require(t, "synth")?;
    }
    let scores: Vec<(f64, usize)> = pairs
        .par_iter()
        .map(|(r, t)| Ok(mcd_waveforms(&read_wav(r)?, &read_wav(t)?)?))
        .collect::<CliResult<_>>()?;
    let mut report = McdReport::default();
    for (id, (d, n)) in ids.iter().zip(scores) {
        report.push(id.clone(), d, n);
    }
    make_dir(&l.out(&["eval"]))?;
    report.save(&l.out(&["eval", "mcd.tsv"]))?;
    println!("eval\t{}\t{:.4}", report.entries.len(), report.mean());
    Ok(())
}

pub fn mushra(cfg: &PipelineConfig) -> CliResult<()> {
    let l = Layout { cfg };
    let path = cfg.eval.scores.as_ref().ok_or_else(|| CliError::Config {
        path: "eval.scores".into(),
        msg: "no score file configured".into(),
    })?;
    require(path, "a listening test export")?;
    let report = mushra_report(&MushraScores::load(path)?)?;
    make_dir(&l.out(&["eval"]))?;
    report.save(&l.out(&["eval", "mushra.tsv"]))?;
    for p in &report.pairs {
        println!(
            "mushra\t{}\t{}\t{:.6}\t{}",
            p.system_a,
            p.system_b,
            p.result.p,
            p.result.significant()
        );
    }
    Ok(())
}
