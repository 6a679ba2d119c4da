//! Datasets, embeddings, the comparison protocol, reports and the command
//! line front end.

pub mod cli;
pub mod data;
pub mod embed;
pub mod experiment;
pub mod report;
pub mod synthetic;

pub use data::{
    load_dataset, parse_clinc150, parse_hint3, parse_hint3_files, parse_jsonl, write_jsonl, ClincOptions,
    DatasetFormat, RawDataset, HINT3_OOS_MARKER, OOS_LABEL,
};
pub use embed::{hash_featurize, load_embedding_file, save_embedding_file, Embedder, EmbeddingSource, EmbeddingTable};
pub use experiment::{
    embed_dataset, run_embedded, run_experiment, train_and_evaluate, Algorithm, EmbeddedDataset, ExperimentConfig,
    MetricSummary, ReportRow, ReportTable, RunMetrics,
};
pub use report::{delta_percent, emit_report, ReportFormat};
pub use synthetic::GaussianBenchmark;
