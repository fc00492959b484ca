//! Reference dataset: two known components mixed with random weights.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`. Draw order is
//! fixed: first all weights column by column (`L` uniform draws on the open
//! interval (0, 1) per column, each column then divided by its sum), then
//! the noise column by column (`M` standard normal draws per column via
//! `rand_distr::StandardNormal`, scaled by `noise_sd`).

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{AggregatedSamples, ComponentCurves, SampleGrid, WeightMatrix};

/// `sin(5x) exp(-x^2)`.
pub fn alpha1(x: f64) -> f64 {
    (5.0 * x).sin() * (-x * x).exp()
}

/// Step function: -2 below 0, 0 on [0, 1.5), 3 from 1.5 on.
pub fn alpha2(x: f64) -> f64 {
    if x < 0.0 {
        -2.0
    } else if x < 1.5 {
        0.0
    } else {
        3.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub samples: usize,
    pub points: usize,
    pub start: f64,
    pub end: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            points: 1024,
            start: -1.0,
            end: 2.0,
            noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub data: AggregatedSamples,
    pub weights: WeightMatrix,
    pub x: SampleGrid,
    pub alphas: ComponentCurves,
}

pub fn simulate_dataset(config: &SimulationConfig) -> Result<SimulatedDataset> {
    let &SimulationConfig {
        samples: n,
        points: m,
        start,
        end,
        noise_sd,
        seed,
    } = config;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "need at least one sample".into(),
        });
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise_sd",
            reason: format!("must be nonnegative, got {noise_sd}"),
        });
    }
    let x = SampleGrid::uniform(start, end, m)?;
    let alphas = DMatrix::from_fn(m, 2, |r, c| {
        let t = x.points()[r];
        if c == 0 {
            alpha1(t)
        } else {
            alpha2(t)
        }
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = DMatrix::zeros(2, n);
    for mut col in weights.column_iter_mut() {
        for v in col.iter_mut() {
            *v = rng.sample::<f64, _>(Open01);
        }
        let total = col.sum();
        col /= total;
    }

    let mut data = &alphas * &weights;
    if noise_sd > 0.0 {
        for mut col in data.column_iter_mut() {
            for v in col.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += noise_sd * z;
            }
        }
    }

    Ok(SimulatedDataset {
        data: AggregatedSamples::new(data)?,
        weights: WeightMatrix::new(weights)?,
        x,
        alphas: ComponentCurves::new(alphas)?,
    })
}
