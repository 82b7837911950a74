use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{}: unsupported audio: {reason}", path.display())]
    UnsupportedAudio { path: PathBuf, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("config: missing key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("manifest {}:{line}: {reason}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("training diverged at epoch {epoch}, step {step}: loss is {loss}")]
    Diverged {
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] mvat_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn checkpoint(msg: impl Into<String>) -> Error {
        Error::Checkpoint(msg.into())
    }
}
