//! Domain types and their on-disk formats.
//!
//! Every reader either returns a value that satisfies its type invariants or
//! a typed [`Error`](crate::Error); nothing partially valid escapes.

mod catalog;
mod dataset;
mod embeddings;
mod predictions;
mod zoo;

pub use catalog::{read_catalog, write_catalog, ClassCatalog};
pub use dataset::{read_dataset_manifest, write_dataset_manifest, DatasetEntry, DatasetManifest, Origin};
pub use embeddings::{
    index_path, read_embeddings, write_embeddings, EmbeddingRow, EmbeddingSet, Modality, DTYPE_F32,
    FORMAT_VERSION, HEADER_LEN, MAGIC,
};
pub use predictions::{
    read_prediction_log, read_prediction_log_with_stats, write_prediction_log, PredictionLog,
    PredictionRecord, ReadStats,
};
pub use zoo::{read_zoo, write_zoo, ClassifierPoint, ZooEntry};
