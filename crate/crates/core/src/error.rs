use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("size mismatch: header implies {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("header dimensions overflow: {0}")]
    DimensionOverflow(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("labels are not contiguous: {0}")]
    LabelContiguity(String),

    #[error("missing file referenced at line {line}: {path}")]
    MissingFile { line: usize, path: PathBuf },

    #[error("corrupt data: {0}")]
    Corrupt(String),
}

impl Error {
    /// Wraps an I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "shape",
            Error::NonFinite(_) => "non-finite",
            Error::InvalidArgument(_) | Error::Empty(_) => "invalid-argument",
            Error::Io { .. } | Error::MissingFile { .. } => "io",
            Error::BadMagic { .. }
            | Error::UnsupportedVersion { .. }
            | Error::SizeMismatch { .. }
            | Error::DimensionOverflow(_)
            | Error::Corrupt(_) => "format",
            Error::Checksum { .. } => "checksum",
            Error::Malformed { .. } | Error::LabelContiguity(_) => "manifest",
        }
    }
}
