//! The comparison protocol on the Gaussian benchmark: one-hot baselines
//! against `K` random R(N) encodings per dimension.
//!
//! `cargo run --release --example random_encoding_experiment [K]`

use oos_encoding::harness::{
    emit_report, run_embedded, Algorithm, EmbeddingSource, ExperimentConfig, GaussianBenchmark, ReportFormat,
};
use oos_encoding::model::{Loss, NetworkConfig};

fn main() -> oos_encoding::Result<()> {
    let samples: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let data = GaussianBenchmark::default().generate(0)?;
    let mut config = ExperimentConfig::new(
        vec![Algorithm::OneHotSoftmax, Algorithm::OneHotDistance, Algorithm::RandomDense],
        vec![2, 8, 16],
        EmbeddingSource::Hashed { dim: 8 },
    );
    config.samples_per_n = samples;
    config.network = NetworkConfig {
        hidden_dim: 128,
        ..NetworkConfig::new(data.input_dim(), 2, Loss::CrossEntropy)
    };
    let table = run_embedded(&data, &config)?;
    print!("{}", emit_report(&table, ReportFormat::Markdown)?);
    for n in &config.n_values {
        let best = table.row(Algorithm::RandomDense, *n).expect("row").best_far_run();
        println!("best R({n}): seed {} FAR {:.3} ISER {:.3}", best.seed, best.far, best.iser);
    }
    Ok(())
}
