use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config {path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("missing {path}; run `{needs}` first")]
    MissingArtifact { path: PathBuf, needs: &'static str },

    #[error("{0}")]
    Mismatch(String),

    #[error(transparent)]
    Core(#[from] uti2speech::Error),
}

impl CliError {
    /// Stable kebab-case identifier for the error line.
    pub fn kind(&self) -> &'static str {
        use uti2speech::Error as E;
        match self {
            CliError::Config { .. } => "invalid-config",
            CliError::MissingArtifact { .. } => "missing-artifact",
            CliError::Mismatch(_) => "dimension-mismatch",
            CliError::Core(e) => match e {
                E::Io { .. } => "io",
                E::MalformedContainer(_) => "malformed-container",
                E::InvalidMetadata(_) => "invalid-metadata",
                E::TooSmallInput { .. } => "too-small-input",
                E::EmptyOverlap => "empty-overlap",
                E::TooFewUtterances(_) => "too-few-utterances",
                E::EmptySignal => "empty-signal",
                E::InvalidRange { .. } => "invalid-range",
                E::SampleRate(_) => "sample-rate",
                E::Wav(_) => "wav",
                E::Format(_) => "bad-format",
                E::UnstableFrame { .. } => "unstable-frame",
                E::InvalidParams(_) => "invalid-params",
                E::InvalidInput(_) => "invalid-input",
                E::InvalidCache => "invalid-cache",
                E::Diverged { .. } => "diverged",
                E::Untrained => "untrained",
                E::CorruptModel(_) => "corrupt-model",
                E::TooShort { .. } => "too-short",
                E::WrongHop { .. } => "wrong-hop",
                E::LengthMismatch(..) => "length-mismatch",
                E::EmptySample => "empty-sample",
                E::Invalid(_) => "invalid",
            },
        }
    }

    /// One tab-separated line: `error`, stage, kind, message.
    pub fn line(&self, stage: &str) -> String {
        let msg: String = self
            .to_string()
            .chars()
            .map(|c| if c == '\t' || c == '\n' { ' ' } else { c })
            .collect();
        format!("error\t{stage}\t{}\t{msg}", self.kind())
    }
}

pub type CliResult<T> = Result<T, CliError>;
