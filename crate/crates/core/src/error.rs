use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // -- on-disk formats --
    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("unsupported format version {found} in {path} (supported: {supported})")]
    UnsupportedVersion {
        path: PathBuf,
        found: u32,
        supported: u32,
    },
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("malformed header in {path}: {reason}")]
    BadHeader { path: PathBuf, reason: String },
    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error("row count mismatch: payload has {payload} rows, index has {index}")]
    RowCountMismatch { payload: u64, index: u64 },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    // -- type invariants --
    #[error("row {row} ({sample_id}) has a non-finite entry at column {column}")]
    NonFinite {
        row: usize,
        sample_id: String,
        column: usize,
    },
    #[error("row {row} has {found} entries, expected dimension {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate sample id {0:?}")]
    DuplicateSampleId(String),
    #[error("unknown class id {0}")]
    UnknownClass(u32),
    #[error("invalid class catalog: {0}")]
    InvalidCatalog(String),
    #[error("invalid template {template:?}: {reason}")]
    InvalidTemplate { template: String, reason: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),

    // -- planning --
    #[error("strategy {0} requires a source manifest")]
    MissingSourceManifest(&'static str),
    #[error("class {0} has no source images to condition on")]
    EmptyConditioningPool(u32),
    #[error("{origin} pool too small: {required} samples required, {available} available")]
    PoolTooSmall {
        origin: &'static str,
        required: u64,
        available: u64,
    },

    // -- filtering --
    #[error("no caption embedding for class {0}")]
    MissingCaption(u32),
    #[error("multiple caption embeddings for class {0}")]
    DuplicateCaption(u32),

    // -- metrics --
    #[error("zero-norm vector in {0}")]
    ZeroNorm(String),
    #[error("accuracy undefined: no records after class restriction")]
    EmptyRestriction,
    #[error("baseline fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("baseline fit is degenerate: all source accuracies equal {0}")]
    DegenerateBaseline(f64),
    #[error("FID needs at least 2 samples per side, got {a} and {b}")]
    TooFewSamples { a: usize, b: usize },
    #[error("eigendecomposition did not converge")]
    EigenNonConvergence,
    #[error("materially negative eigenvalue {value} (largest {max})")]
    NegativeEigenvalue { value: f64, max: f64 },
    #[error("no class has at least {min_per_class} samples on both sides")]
    NoEligibleClasses { min_per_class: usize },
    #[error("class {class_id} has {count} samples; diversity needs at least 2")]
    ClassTooSmall { class_id: u32, count: usize },

    // -- evaluation --
    #[error("normalized class name {name:?} is ambiguous in catalog {tag}")]
    AmbiguousName { tag: String, name: String },
    #[error("overlap map is not injective: class {0} appears twice")]
    NonInjectiveOverlap(u32),
    #[error("dataset {dataset:?} is neither side of overlap map ({source_tag} / {target_tag})")]
    OverlapSideMismatch {
        dataset: String,
        source_tag: String,
        target_tag: String,
    },
    #[error("row {row:?} has no accuracy for dataset {dataset:?}")]
    MissingAccuracy { row: String, dataset: String },
    #[error("no baseline zoo for shifted dataset {0:?}")]
    MissingZoo(String),

    // -- rendering --
    #[error("ragged table: row {row:?} has {found} cells, header has {expected}")]
    RaggedTable {
        row: String,
        expected: usize,
        found: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
