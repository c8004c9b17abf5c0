use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed line ({reason})")]
    MalformedLine { line: usize, reason: String },
    #[error("utterance {utterance}, line {line}: token starts before the previous one ends")]
    Overlap { utterance: String, line: usize },
    #[error("utterance {utterance}: word edge at {time:.3}s does not fall on a phone boundary")]
    BoundaryMismatch { utterance: String, time: f64 },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: timestamp is not strictly increasing")]
    NonMonotonicTime { line: usize },
    #[error("file contains no data")]
    EmptyFile,
    #[error("unknown utterance {0}")]
    UnknownUtterance(String),
    #[error("class {0} has no fragments")]
    EmptyClass(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("fragment {utterance} [{onset:.3}, {offset:.3}] lies outside the utterance")]
    FragmentOutOfRange {
        utterance: String,
        onset: f64,
        offset: f64,
    },
    #[error("utterance {0}: duration is shorter than its last phone")]
    DurationTooShort(String),
    #[error("no speaker listed for utterance {0}")]
    MissingSpeaker(String),
    #[error("no frame falls in [{onset}, {offset})")]
    EmptySlice { onset: f64, offset: f64 },

    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("negative entry in probability vector")]
    NegativeEntry,

    #[error("cell has too few scorable items after dropping empty slices")]
    DegenerateCell,
    #[error("no scorable ABX cells")]
    NoCells,
    #[error("no feature file for utterance {0}")]
    MissingFeatureFile(String),

    #[error("no valid fragment pairs")]
    NoValidPairs,
    #[error("discoverable part of the corpus is empty")]
    EmptyDiscoverablePart,

    #[error("no symbols in input")]
    EmptyInput,
    #[error("total duration is zero")]
    ZeroDuration,
    #[error("no duration known for utterance {0}")]
    MissingDuration(String),

    #[error("no score for item {0}")]
    MissingScore(String),
    #[error("no pairs to evaluate")]
    EmptyPairSet,
    #[error("constant input, correlation undefined")]
    ConstantInput,
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no embedding for word {0}")]
    MissingWord(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("duplicate metric {task}.{metric}")]
    DuplicateMetric { task: String, metric: String },

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedLine {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::InFile { .. } | Error::Io { .. }) => e,
            e => Error::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    /// Strips file context, returning the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
