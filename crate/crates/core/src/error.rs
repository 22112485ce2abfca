use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: expected 3 tab-separated fields, found {found}")]
    Parse {
        path: PathBuf,
        line: usize,
        found: usize,
    },

    #[error("training split {0} contains no triples")]
    EmptyTrain(PathBuf),

    #[error("triple ({subject}, {relation}, {object}) references an id outside the vocabulary")]
    UnknownId {
        subject: usize,
        relation: usize,
        object: usize,
    },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("cannot evaluate an empty triple list")]
    EmptyEvaluation,

    #[error("k-means needs k <= number of points (k = {k}, points = {points})")]
    TooFewPoints { k: usize, points: usize },

    #[error("train config hash {found} does not match the clean run's {expected}")]
    ConfigMismatch { expected: String, found: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
