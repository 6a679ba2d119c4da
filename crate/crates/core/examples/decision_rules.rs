//! The four threshold rules applied to a few likelihood vectors.

use oos_encoding::encoding::{
    classify_dense, classify_max, classify_one_hot_distance, classify_softmax, ClassEncodingSet, LikelihoodVector,
    ThresholdPolicy,
};

fn main() -> oos_encoding::Result<()> {
    let codes = ClassEncodingSet::dense(vec![vec![0.6, -0.4, 0.9], vec![-0.7, 0.5, -0.2], vec![0.1, 0.8, 0.3]])?;
    let inputs = [
        vec![0.9, 0.1, 0.0],
        vec![0.4, 0.4, 0.4],
        vec![-0.2, -0.3, -0.9],
        vec![0.55, -0.35, 0.85],
    ];
    let floor = ThresholdPolicy::score_floor(0.5)?;
    let ceiling = ThresholdPolicy::distance_ceiling(0.5)?;

    println!("{:<22} {:>10} {:>10} {:>10} {:>10}", "z", "max", "softmax", "1-hot d", "dense");
    for values in inputs {
        let z = LikelihoodVector::new(values.clone())?;
        println!(
            "{:<22} {:>10} {:>10} {:>10} {:>10}",
            format!("{values:?}"),
            format!("{:?}", classify_max(&z, &floor)?),
            format!("{:?}", classify_softmax(&z, &ThresholdPolicy::score_floor(0.4)?)?),
            format!("{:?}", classify_one_hot_distance(&z, &ceiling)?),
            format!("{:?}", classify_dense(&z, &codes, &ceiling)?),
        );
    }
    Ok(())
}
