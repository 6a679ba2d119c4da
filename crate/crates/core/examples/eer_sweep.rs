//! Equal-error-rate sweep over hand-written distance scores, printed as the
//! FAR/FRR curve.

use oos_encoding::encoding::ThresholdSemantics;
use oos_encoding::metrics::{compute_eer, ScoredSample};
use oos_encoding::model::SampleLabel;

fn main() -> oos_encoding::Result<()> {
    let in_scope = [0.1, 0.2, 0.6];
    let out_of_scope = [0.3, 0.7];
    let scored: Vec<ScoredSample> = in_scope
        .iter()
        .map(|&d| ScoredSample::new(-d, 0, SampleLabel::Class(0)))
        .chain(out_of_scope.iter().map(|&d| ScoredSample::new(-d, 0, SampleLabel::OutOfScope)))
        .collect();
    let report = compute_eer(&scored, ThresholdSemantics::DistanceCeiling)?;
    print!("{}", report.curve_csv());
    println!(
        "EER {:.4} at distance ceiling {} (FAR {:.3}, FRR {:.3})",
        report.eer, report.theta_star, report.far_at_theta, report.frr_at_theta
    );
    Ok(())
}
