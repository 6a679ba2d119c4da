//! Counts the distinct decision-region topologies of each rule family over
//! the unit square.
//!
//! `cargo run --release --example topology_survey [draws]`

use std::collections::BTreeMap;

use oos_encoding::encoding::random_encoding_set;
use oos_encoding::topology::{
    distance_threshold_boundaries, enumerate_signatures, softmax_threshold_boundaries, survey_dense, DecisionFamily,
    GridSpec,
};

fn main() -> oos_encoding::Result<()> {
    let draws: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let grid = GridSpec::new(2, 128)?;
    let thetas: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();

    for (name, family, sweep) in [
        ("max", DecisionFamily::Max, &thetas[..]),
        ("softmax", DecisionFamily::Softmax, &thetas[..17]),
        ("1-hot distance", DecisionFamily::OneHotDistance, &thetas[..]),
    ] {
        let sigs = enumerate_signatures(&family, sweep, &grid)?;
        println!("{name}: {} signature(s)", sigs.len());
        for s in &sigs {
            println!("    {s}");
        }
    }
    println!("softmax boundaries (c=2): {:?}", softmax_threshold_boundaries(2)?);
    println!("distance boundaries (c=2): {:?}", distance_threshold_boundaries(2)?);

    let encodings: Vec<_> = (0..draws)
        .map(|k| random_encoding_set(2, 2, k))
        .collect::<Result<_, _>>()?;
    let pairs = encodings
        .iter()
        .enumerate()
        .map(|(k, e)| (e, 0.1 + 1.4 * ((k as f64 * 0.618_033_988_75) % 1.0)));
    let survey = survey_dense(pairs, &grid)?;
    let mut by_oos: BTreeMap<usize, usize> = BTreeMap::new();
    for sig in survey.keys() {
        *by_oos.entry(sig.oos_components()).or_default() += 1;
    }
    println!("dense R(2): {} signatures over {draws} draws", survey.len());
    println!("    signatures per OOS-component count: {by_oos:?}");
    Ok(())
}
