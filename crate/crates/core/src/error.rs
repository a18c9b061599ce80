use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of range at ({row}, {col}): {value}")]
    OutOfRange { row: usize, col: usize, value: f64 },

    #[error("duplicate classifier id {0:?}")]
    DuplicateId(String),

    #[error("non-binary label at index {index}")]
    NonBinaryLabel { index: usize },

    #[error("unknown classifier id {0:?}")]
    UnknownId(String),

    #[error("{0} undefined: labels contain a single class")]
    SingleClass(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("distance matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("class {class} has {count} members, too few for {folds} stratified folds")]
    ClassTooSmall { class: u8, count: usize, folds: usize },

    #[error("cluster {cluster}: {source}")]
    Cluster {
        cluster: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("pair ({a}, {b}): {source}")]
    Pair {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },

    #[error("learner {learner}: {message}")]
    Learner { learner: String, message: String },

    #[error("unknown {kind} {name:?}")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to a method failing on well-formed data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::OutOfRange { .. }
                | Error::DuplicateId(_)
                | Error::NonBinaryLabel { .. }
                | Error::UnknownId(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
