use std::path::PathBuf;

/// Errors produced by the toolkit. Variants map one-to-one onto the failure
/// kinds each stage can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed ultrasound container: {0}")]
    MalformedContainer(String),

    #[error("invalid ultrasound metadata: {0}")]
    InvalidMetadata(String),

    #[error("input image {rows}x{cols} is smaller than 4x4")]
    TooSmallInput { rows: usize, cols: usize },

    #[error("ultrasound and audio streams have no overlapping frames")]
    EmptyOverlap,

    #[error("need at least 3 utterances to split, got {0}")]
    TooFewUtterances(usize),

    #[error("empty signal")]
    EmptySignal,

    #[error("invalid frequency range: fmin {fmin} Hz, fmax {fmax} Hz")]
    InvalidRange { fmin: f64, fmax: f64 },

    #[error("unsupported sample rate {0} Hz (expected 22050)")]
    SampleRate(u32),

    #[error("wav error: {0}")]
    Wav(String),

    #[error("bad feature file: {0}")]
    Format(String),

    #[error("unstable frame: found {found} of {expected} line spectral frequencies")]
    UnstableFrame { found: usize, expected: usize },

    #[error("invalid vocoder parameters: {0}")]
    InvalidParams(String),

    #[error("invalid network input: {0}")]
    InvalidInput(String),

    #[error("activation cache does not match the model")]
    InvalidCache,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("model has not been trained")]
    Untrained,

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("sequence too short: need at least {needed} frames, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("conditioning must use hop {expected}, got hop {got}")]
    WrongHop { expected: u32, got: u32 },

    #[error("length mismatch: {0} vs {1} frames")]
    LengthMismatch(usize, usize),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
