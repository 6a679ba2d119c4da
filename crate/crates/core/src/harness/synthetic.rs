//! A small Gaussian benchmark with a known out-of-scope layout.
//!
//! Two in-scope clusters sit at `±separation · e1`. Out-of-scope inputs come
//! from two clusters: one midway between the classes and one beyond class 0
//! along `e1`. The second is the hard case for softmax confidence, which
//! only grows as inputs move further along the discriminating direction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::experiment::EmbeddedDataset;
use crate::error::{Error, Result};
use crate::model::EmbeddedSample;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBenchmark {
    pub dim: usize,
    /// Distance of each class center from the origin along `e1`.
    pub separation: f64,
    /// Per-coordinate standard deviation of every cluster.
    pub spread: f64,
    /// Offset of the far OOS cluster along `e1`, on the class-0 side.
    pub oos_beyond: f64,
    /// Fraction of OOS samples drawn from the far cluster.
    pub beyond_fraction: f64,
    pub train_size: usize,
    pub test_is_size: usize,
    pub test_oos_size: usize,
}

impl Default for GaussianBenchmark {
    /// R^8, 200 training / 200 in-scope test / 200 out-of-scope test samples.
    fn default() -> Self {
        Self {
            dim: 8,
            separation: 2.0,
            spread: 0.5,
            oos_beyond: 6.0,
            beyond_fraction: 0.5,
            train_size: 200,
            test_is_size: 200,
            test_oos_size: 200,
        }
    }
}

impl GaussianBenchmark {
    pub fn generate(&self, seed: u64) -> Result<EmbeddedDataset> {
        if self.dim == 0 || self.train_size < 2 || self.test_is_size == 0 || self.test_oos_size == 0 {
            return Err(Error::invalid("benchmark sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beyond_fraction) {
            return Err(Error::invalid("beyond_fraction must be in [0, 1]"));
        }
        let noise = Normal::new(0.0, self.spread).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = |center_e1: f64| -> Vec<f64> {
            let mut v: Vec<f64> = (0..self.dim).map(|_| noise.sample(&mut rng)).collect();
            v[0] += center_e1;
            v
        };
        let centers = [-self.separation, self.separation];
        let train = (0..self.train_size)
            .map(|i| EmbeddedSample::class(point(centers[i % 2]), i % 2))
            .collect();
        let mut test: Vec<EmbeddedSample> = (0..self.test_is_size)
            .map(|i| EmbeddedSample::class(point(centers[i % 2]), i % 2))
            .collect();
        let beyond = (self.test_oos_size as f64 * self.beyond_fraction).round() as usize;
        for i in 0..self.test_oos_size {
            let center = if i < beyond { -self.oos_beyond } else { 0.0 };
            test.push(EmbeddedSample::oos(point(center)));
        }
        Ok(EmbeddedDataset {
            train,
            test,
            class_names: vec!["class_a".into(), "class_b".into()],
        })
    }
}
