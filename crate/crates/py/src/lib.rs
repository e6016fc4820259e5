//! Python bindings for the uti2speech toolkit. Matrices cross the boundary
//! as lists of rows, audio as lists of samples.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use uti2speech::cnn::{self, CnnArchitecture, Dataset, TrainConfig};
use uti2speech::features::{self, FeatureNormalizer, MelFilterbank, StftConfig};
use uti2speech::ingest::{self, ResizedFrame};
use uti2speech::postproc::{self, GriffinLimConfig, SmoothingConfig};
use uti2speech::{eval, toy, vocoder, Matrix};

create_exception!(pyuti2speech, Uti2SpeechError, PyException);

fn err(e: uti2speech::Error) -> PyErr {
    Uti2SpeechError::new_err(e.to_string())
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(Uti2SpeechError::new_err("rows have different lengths"));
        }
    }
    Ok(Matrix::from_rows(rows))
}

#[pyclass(name = "Waveform", module = "pyuti2speech")]
pub struct PyWaveform(ingest::Waveform);

#[pymethods]
impl PyWaveform {
    #[new]
    #[pyo3(signature = (samples, sample_rate = ingest::SAMPLE_RATE))]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        ingest::Waveform::new(samples, sample_rate).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ingest::read_wav(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        ingest::write_wav(&self.0, &path).map_err(err)
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.0.samples.clone()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.0.sample_rate
    }

    fn rms(&self) -> f64 {
        self.0.rms()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "MelSpectrogram", module = "pyuti2speech")]
pub struct PyMel(features::MelSpectrogram);

#[pymethods]
impl PyMel {
    #[new]
    #[pyo3(signature = (values, hop = ingest::HOP as u32, sample_rate = ingest::SAMPLE_RATE))]
    fn new(values: Vec<Vec<f64>>, hop: u32, sample_rate: u32) -> PyResult<Self> {
        Ok(Self(features::MelSpectrogram {
            values: matrix(&values)?,
            hop,
            sample_rate,
        }))
    }

    /// 80-band log-mel spectrogram at the 270-sample hop.
    #[staticmethod]
    fn from_wav(wav: &PyWaveform) -> PyResult<Self> {
        features::mel_spectrogram(&wav.0, &StftConfig::default(), &MelFilterbank::standard())
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        features::read_mel(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        features::write_mel(&self.0, &path).map_err(err)
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        rows(&self.0.values)
    }

    #[getter]
    fn hop(&self) -> u32 {
        self.0.hop
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.0.sample_rate
    }

    #[getter]
    fn n_frames(&self) -> usize {
        self.0.n_frames()
    }

    #[getter]
    fn n_mels(&self) -> usize {
        self.0.n_mels()
    }
}

#[pyclass(name = "ContParams", module = "pyuti2speech")]
pub struct PyContParams(vocoder::ContParams);

#[pymethods]
impl PyContParams {
    /// Continuous-vocoder analysis: gain, LSPs, log F0, log MVF per frame.
    #[staticmethod]
    fn analyze(wav: &PyWaveform) -> PyResult<Self> {
        vocoder::analyze(&wav.0, &vocoder::VocoderConfig::default())
            .map(Self)
            .map_err(err)
    }

    /// Columns: gain, LSPs, log F0, log MVF. Out-of-range values are
    /// repaired the same way as network predictions.
    #[staticmethod]
    fn from_matrix(values: Vec<Vec<f64>>) -> PyResult<Self> {
        let mut p = vocoder::ContParams::from_matrix(&matrix(&values)?).map_err(err)?;
        p.sanitize();
        Ok(Self(p))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        vocoder::read_params(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        vocoder::write_params(&self.0, &path).map_err(err)
    }

    fn to_matrix(&self) -> Vec<Vec<f64>> {
        rows(&self.0.to_matrix())
    }

    #[pyo3(signature = (seed = 0))]
    fn synthesize(&self, seed: u64) -> PyResult<PyWaveform> {
        let cfg = vocoder::VocoderConfig {
            seed,
            ..Default::default()
        };
        vocoder::synthesize(&self.0, &cfg.synth()).map(PyWaveform).map_err(err)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn architecture(preset: &str, output: usize) -> PyResult<CnnArchitecture> {
    match preset {
        "standard" => Ok(CnnArchitecture::standard(output)),
        "reduced" => Ok(CnnArchitecture::reduced(output)),
        "toy" => Ok(CnnArchitecture::toy(output)),
        _ => Err(Uti2SpeechError::new_err(format!(
            "unknown preset {preset:?} (standard, reduced, toy)"
        ))),
    }
}

fn dataset(inputs: Vec<Vec<f64>>, targets: &Matrix) -> PyResult<Dataset<f32>> {
    let x = inputs
        .into_iter()
        .map(|r| r.into_iter().map(|v| v as f32).collect())
        .collect();
    let y = targets
        .iter_rows()
        .map(|r| r.iter().map(|&v| v as f32).collect())
        .collect();
    Dataset::new(x, y).map_err(err)
}

/// Convolutional regressor from ultrasound images to acoustic features.
#[pyclass(name = "Cnn", module = "pyuti2speech")]
pub struct PyCnn(cnn::CnnModel);

#[pymethods]
impl PyCnn {
    #[new]
    #[pyo3(signature = (output, preset = "standard", seed = 0, dropout = None))]
    fn new(output: usize, preset: &str, seed: u64, dropout: Option<f64>) -> PyResult<Self> {
        let mut arch = architecture(preset, output)?;
        if let Some(d) = dropout {
            arch.dropout = d;
        }
        cnn::CnnModel::new(arch, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        cnn::load_model(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        cnn::save_model(&self.0, &path).map_err(err)
    }

    /// `(rows, cols)` of the network input.
    #[getter]
    fn input_shape(&self) -> (usize, usize) {
        let a = self.0.architecture();
        (a.input_rows, a.input_cols)
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.0.output_dim()
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.0.num_params()
    }

    #[getter]
    fn is_trained(&self) -> bool {
        self.0.is_trained()
    }

    /// A flattened 64x128 frame in [0, 1] brought to the input resolution.
    fn fit_input(&self, frame: Vec<f64>) -> PyResult<Vec<f64>> {
        if frame.len() != ingest::RESIZED_ROWS * ingest::RESIZED_COLS {
            return Err(Uti2SpeechError::new_err(format!(
                "frame has {} pixels, expected {}",
                frame.len(),
                ingest::RESIZED_ROWS * ingest::RESIZED_COLS
            )));
        }
        cnn::fit_input(&ResizedFrame { pixels: frame }, self.0.architecture()).map_err(err)
    }

    /// Trains with early stopping on the validation loss. Targets are
    /// standardized with statistics of `targets` when `normalize` is set.
    /// Returns the per-epoch `(epoch, train_mse, val_mse)` log.
    #[pyo3(signature = (inputs, targets, val_inputs, val_targets, learning_rate = 0.01, batch_size = 32,
                        max_epochs = 100, patience = 3, seed = 0, normalize = true))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        val_inputs: Vec<Vec<f64>>,
        val_targets: Vec<Vec<f64>>,
        learning_rate: f64,
        batch_size: usize,
        max_epochs: usize,
        patience: usize,
        seed: u64,
        normalize: bool,
    ) -> PyResult<Vec<(usize, f64, f64)>> {
        let (mut y, mut vy) = (matrix(&targets)?, matrix(&val_targets)?);
        let norm = if normalize {
            let n = FeatureNormalizer::fit([&y]).map_err(err)?;
            y = n.apply(&y).map_err(err)?;
            vy = n.apply(&vy).map_err(err)?;
            Some(n)
        } else {
            None
        };
        let data = dataset(inputs, &y)?;
        let val = dataset(val_inputs, &vy)?;
        let cfg = TrainConfig {
            learning_rate,
            batch_size,
            max_epochs,
            patience,
            seed,
        };
        let model = &mut self.0;
        let h = py.detach(|| cnn::train(model, &data, &val, &cfg)).map_err(err)?;
        self.0.target_norm = norm;
        Ok(h.epochs.iter().map(|e| (e.epoch, e.train_mse, e.val_mse)).collect())
    }

    /// One output row per input row, in feature units.
    fn predict(&self, py: Python<'_>, inputs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let model = &self.0;
        py.detach(|| cnn::predict_sequence(model, &inputs))
            .map(|m| rows(&m))
            .map_err(err)
    }
}

/// Ultrasound frames of a `.bin`/`.meta` pair resized to 64x128 and
/// flattened row-major, intensities in [0, 1].
#[pyfunction]
fn read_ultrasound(container: PathBuf, meta: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    let us = ingest::read_ultrasound(&container, &meta).map_err(err)?;
    let frames = us.resized().map_err(err)?;
    Ok(frames.into_iter().map(|f| f.pixels).collect())
}

/// Common frame count of an ultrasound sequence and its audio.
#[pyfunction]
fn align_frames(us_frames: usize, n_samples: usize) -> PyResult<usize> {
    ingest::align_frames(us_frames, n_samples).map_err(err)
}

/// Seeded 80/10/10 partition of utterance ids.
#[pyfunction]
#[pyo3(signature = (ids, seed = 0))]
fn split_dataset<'py>(py: Python<'py>, ids: Vec<String>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let s = ingest::split_dataset(&ids, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("train", s.train)?;
    d.set_item("val", s.val)?;
    d.set_item("test", s.test)?;
    Ok(d)
}

/// Resampled to the 256-sample hop and smoothed along time.
#[pyfunction]
#[pyo3(signature = (mel, window = 5, order = 3))]
fn prepare_conditioning(mel: &PyMel, window: usize, order: usize) -> PyResult<PyMel> {
    postproc::prepare_conditioning(&mel.0, &SmoothingConfig { window, order })
        .map(PyMel)
        .map_err(err)
}

/// Waveform and per-iteration spectral convergence.
#[pyfunction]
#[pyo3(signature = (mel, iterations = 60, seed = 0))]
fn griffin_lim(py: Python<'_>, mel: &PyMel, iterations: usize, seed: u64) -> PyResult<(PyWaveform, Vec<f64>)> {
    let cfg = GriffinLimConfig {
        iterations,
        seed,
        ..Default::default()
    };
    let m = &mel.0;
    let out = py.detach(|| postproc::griffin_lim(m, &cfg)).map_err(err)?;
    Ok((PyWaveform(out.wav), out.residuals))
}

/// Mel-cepstral distortion in dB between two cepstrum sequences.
#[pyfunction]
fn mcd(reference: Vec<Vec<f64>>, test: Vec<Vec<f64>>) -> PyResult<f64> {
    eval::mcd(&matrix(&reference)?, &matrix(&test)?).map_err(err)
}

/// MCD of two waveforms and the number of frames compared.
#[pyfunction]
fn mcd_waveforms(reference: &PyWaveform, test: &PyWaveform) -> PyResult<(f64, usize)> {
    eval::mcd_waveforms(&reference.0, &test.0).map_err(err)
}

/// Two-sided rank-sum test: `(U, p, exact)`.
#[pyfunction]
fn ranksum_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, bool)> {
    let r = eval::ranksum_test(&a, &b).map_err(err)?;
    Ok((r.u, r.p, r.exact))
}

/// Summary and pairwise tests of `listener,system,sentence,score` rows, as TSV.
#[pyfunction]
fn mushra_report(csv: &str) -> PyResult<String> {
    let scores = eval::MushraScores::from_csv(csv).map_err(err)?;
    eval::mushra_report(&scores).map(|r| r.to_tsv()).map_err(err)
}

/// Writes a synthetic corpus and returns its utterance ids.
#[pyfunction]
#[pyo3(signature = (dir, n, frames = 120, seed = 0))]
fn write_toy_corpus(dir: PathBuf, n: usize, frames: usize, seed: u64) -> PyResult<Vec<String>> {
    let cfg = toy::ToyConfig {
        frames,
        seed,
        ..Default::default()
    };
    toy::write_toy_corpus(&dir, n, &cfg).map_err(err)
}

#[pymodule]
fn pyuti2speech(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Uti2SpeechError", m.py().get_type::<Uti2SpeechError>())?;
    m.add("SAMPLE_RATE", ingest::SAMPLE_RATE)?;
    m.add("HOP", ingest::HOP)?;
    m.add("N_MELS", features::N_MELS)?;
    m.add_class::<PyWaveform>()?;
    m.add_class::<PyMel>()?;
    m.add_class::<PyContParams>()?;
    m.add_class::<PyCnn>()?;
    m.add_function(wrap_pyfunction!(read_ultrasound, m)?)?;
    m.add_function(wrap_pyfunction!(align_frames, m)?)?;
    m.add_function(wrap_pyfunction!(split_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_conditioning, m)?)?;
    m.add_function(wrap_pyfunction!(griffin_lim, m)?)?;
    m.add_function(wrap_pyfunction!(mcd, m)?)?;
    m.add_function(wrap_pyfunction!(mcd_waveforms, m)?)?;
    m.add_function(wrap_pyfunction!(ranksum_test, m)?)?;
    m.add_function(wrap_pyfunction!(mushra_report, m)?)?;
    m.add_function(wrap_pyfunction!(write_toy_corpus, m)?)?;
    Ok(())
}
