//! Trains the likelihood network on the Gaussian benchmark with both losses
//! and reports the loss curve and test metrics.

use oos_encoding::encoding::{one_hot_encoding_set, random_encoding_set, DecisionRule};
use oos_encoding::harness::GaussianBenchmark;
use oos_encoding::metrics::{compute_eer, score_samples};
use oos_encoding::model::{train_with_history, Loss, NetworkConfig};

fn main() -> oos_encoding::Result<()> {
    let data = GaussianBenchmark::default().generate(1)?;
    let runs = [
        ("one-hot / cross-entropy / softmax", one_hot_encoding_set(2)?, Loss::CrossEntropy),
        ("R(8) / mse / distance", random_encoding_set(2, 8, 1)?, Loss::Mse),
    ];
    for (name, targets, loss) in runs {
        let config = NetworkConfig {
            hidden_dim: 128,
            epochs: 30,
            seed: 1,
            ..NetworkConfig::new(data.input_dim(), targets.dim(), loss)
        };
        let (model, history) = train_with_history(&data.train, &targets, config)?;
        let rule = match loss {
            Loss::CrossEntropy => DecisionRule::Softmax { classes: 2 },
            Loss::Mse => DecisionRule::Dense(targets.clone()),
        };
        let report = compute_eer(&score_samples(&model, &rule, &data.test)?, rule.semantics())?;
        println!("{name}");
        println!(
            "    loss {:.4} -> {:.4} over {} epochs",
            history[0],
            history[history.len() - 1],
            history.len()
        );
        println!("    EER {:.3}  FAR {:.3}  ISER {:.3}", report.eer, report.far_at_theta, report.iser);
    }
    Ok(())
}
