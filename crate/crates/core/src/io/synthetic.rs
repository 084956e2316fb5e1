//! Seeded synthetic datasets.
//!
//! Generation uses ChaCha8 (a counter-based stream cipher generator, 8
//! rounds, seeded through `seed_from_u64`) and the ziggurat standard normal
//! sampler, so output is identical on every platform for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::vectors::Vectors;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recipe {
    /// I.i.d. uniform in `[0, 1]^dim`.
    Uniform { dim: usize },
    /// Cluster centers uniform in the unit cube; each point picks a center
    /// uniformly and adds isotropic normal noise with standard deviation `spread`.
    Gaussian {
        dim: usize,
        clusters: usize,
        spread: f64,
    },
}

impl Recipe {
    pub fn dim(&self) -> usize {
        match *self {
            Recipe::Uniform { dim } | Recipe::Gaussian { dim, .. } => dim,
        }
    }
}

pub fn generate_synthetic(recipe: Recipe, n: usize, seed: u64) -> Result<Vectors> {
    let dim = recipe.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    match recipe {
        Recipe::Uniform { .. } => {
            data.extend((0..n * dim).map(|_| rng.random::<f32>()));
        }
        Recipe::Gaussian {
            clusters, spread, ..
        } => {
            if clusters == 0 {
                return Err(Error::InvalidInput("need at least one cluster".into()));
            }
            if !(spread.is_finite() && spread >= 0.0) {
                return Err(Error::InvalidInput(format!("invalid spread {spread}")));
            }
            let centers: Vec<f64> = (0..clusters * dim).map(|_| rng.random::<f64>()).collect();
            for _ in 0..n {
                let c = rng.random_range(0..clusters);
                let center = &centers[c * dim..(c + 1) * dim];
                data.extend(center.iter().map(|&x| {
                    let z: f64 = rng.sample(StandardNormal);
                    (x + spread * z) as f32
                }));
            }
        }
    }
    Vectors::from_flat(dim, data)
}

/// Unit-ball uniform points (direction from normals, radius `u^(1/dim)`).
pub fn uniform_ball(dim: usize, n: usize, seed: u64) -> Result<Vectors> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = rng.random::<f64>().powf(1.0 / dim as f64);
        data.extend(z.iter().map(|x| (x / norm * r) as f32));
    }
    Vectors::from_flat(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let r = Recipe::Gaussian {
            dim: 5,
            clusters: 3,
            spread: 0.1,
        };
        let a = generate_synthetic(r, 100, 11).unwrap();
        let b = generate_synthetic(r, 100, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic(r, 100, 12).unwrap());
    }

    #[test]
    fn uniform_stays_in_unit_cube() {
        let v = generate_synthetic(Recipe::Uniform { dim: 7 }, 200, 3).unwrap();
        assert_eq!((v.len(), v.dim()), (200, 7));
        assert!(v.as_flat().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn ball_points_have_norm_at_most_one() {
        let v = uniform_ball(5, 300, 1).unwrap();
        for row in v.iter() {
            let n: f32 = row.iter().map(|x| x * x).sum::<f32>().sqrt();
            assert!(n <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn rejects_degenerate_recipes() {
        assert!(generate_synthetic(Recipe::Uniform { dim: 0 }, 3, 0).is_err());
        let r = Recipe::Gaussian {
            dim: 2,
            clusters: 0,
            spread: 0.1,
        };
        assert!(generate_synthetic(r, 3, 0).is_err());
    }
}
