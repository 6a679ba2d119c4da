//! End-to-end run over a small HINT3-style dataset with a precomputed
//! embedding file, both written to a temporary directory first.

use std::fs;

use oos_encoding::harness::{
    emit_report, hash_featurize, parse_hint3, run_experiment, save_embedding_file, Algorithm, EmbeddingSource,
    EmbeddingTable, ExperimentConfig, ReportFormat, HINT3_OOS_MARKER,
};
use oos_encoding::model::{Loss, NetworkConfig};

const TRAIN: &[(&str, &str)] = &[
    ("what is the price of the mattress", "price"),
    ("how much does it cost", "price"),
    ("price of a king size bed", "price"),
    ("is there a discount on the price", "price"),
    ("when will my order arrive", "delivery"),
    ("track my delivery", "delivery"),
    ("delivery time for my city", "delivery"),
    ("has my order shipped", "delivery"),
    ("can i return the mattress", "returns"),
    ("how do i get a refund", "returns"),
    ("return policy for beds", "returns"),
    ("i want to send it back", "returns"),
];

const TEST: &[(&str, &str)] = &[
    ("what does the queen size cost", "price"),
    ("where is my delivery", "delivery"),
    ("refund for my order", "returns"),
    ("tell me a joke", HINT3_OOS_MARKER),
    ("who won the cricket match", HINT3_OOS_MARKER),
    ("weather in mumbai tomorrow", HINT3_OOS_MARKER),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let csv = |rows: &[(&str, &str)]| {
        let mut s = String::from("sentence,label\n");
        for (t, l) in rows {
            s.push_str(&format!("{t},{l}\n"));
        }
        s
    };
    fs::write(dir.path().join("mattress_train.csv"), csv(TRAIN))?;
    fs::write(dir.path().join("mattress_test.csv"), csv(TEST))?;

    // stand-in for sentence-encoder output
    let mut table = EmbeddingTable::new(32)?;
    for (text, _) in TRAIN.iter().chain(TEST) {
        table.insert(*text, hash_featurize(text, 32)?)?;
    }
    let embeddings = dir.path().join("embeddings.txt");
    save_embedding_file(&table, &embeddings)?;

    let data = parse_hint3(dir.path(), HINT3_OOS_MARKER)?;
    println!("classes {:?}, {} train, {} test", data.class_names, data.train.len(), data.test.len());
    let mut config = ExperimentConfig::new(
        vec![Algorithm::OneHotSoftmax, Algorithm::OneHotDistance, Algorithm::RandomDense],
        vec![3, 10],
        EmbeddingSource::File(embeddings),
    );
    config.samples_per_n = 10;
    config.network = NetworkConfig {
        hidden_dim: 64,
        epochs: 40,
        batch_size: 4,
        ..NetworkConfig::new(32, 3, Loss::CrossEntropy)
    };
    let report = run_experiment(&data, &config)?;
    print!("{}", emit_report(&report, ReportFormat::Markdown)?);
    Ok(())
}
