//! Repulsion-driven class encoding search on the Gaussian benchmark. Writes
//! the trace and best encodings to a temporary directory.
//!
//! `cargo run --release --example class_encoding_search [iterations]`

use oos_encoding::ces::{ces_search, CesConfig};
use oos_encoding::encoding::random_encoding_set;
use oos_encoding::harness::GaussianBenchmark;
use oos_encoding::model::{Loss, NetworkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iterations: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let data = GaussianBenchmark::default().generate(0)?;
    let initial = random_encoding_set(2, 8, 3)?;
    let mut config = CesConfig::new(NetworkConfig {
        hidden_dim: 64,
        ..NetworkConfig::new(data.input_dim(), 8, Loss::Mse)
    });
    config.iterations = iterations;
    config.inner_epochs = 20;
    config.lambda = 0.01;

    let trace = ces_search(&data.train, &data.test, &initial, &config)?;
    let best = trace.best_far_so_far();
    for (r, b) in trace.records.iter().zip(&best).step_by((iterations / 10).max(1)) {
        println!("iter {:>4}  FAR {:.3}  best {:.3}  ISER {:.3}", r.iteration, r.far, b, r.iser);
    }
    let dir = tempfile::tempdir()?;
    for path in trace.write_to(dir.path())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
