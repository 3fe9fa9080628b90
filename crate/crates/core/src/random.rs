//! Seeded random test fields.
//!
//! Coefficients are complex Gaussians shaped by `Σ_j φ(2^{−j}ξ) 2^{−γj}`,
//! i.e. amplitude `2^{−γj}` on block `j`, with `γ` drawn per field. The
//! result is Hermitian-symmetrised and mean-zero. Identical seeds give
//! bit-identical fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::field::{ScalarField, VelocityField};
use crate::littlewood_paley::DyadicPartition;
use crate::spectral::leray_project;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Keep only modes with `|m_a| ≤ max_mode_fraction · n_a` on every axis.
    pub max_mode_fraction: Option<f64>,
    /// Keep only modes whose whole block support lies in `[lo, hi]`.
    pub blocks: Option<(i32, i32)>,
}

impl Default for RandomFieldConfig {
    fn default() -> Self {
        Self {
            gamma_min: 0.5,
            gamma_max: 2.5,
            max_mode_fraction: Some(1.0 / 3.0),
            blocks: None,
        }
    }
}

impl RandomFieldConfig {
    /// Fields whose pairwise products stay inside the 2/3 cube and whose
    /// blocks avoid the edges of the usable range.
    pub fn interior(partition: &DyadicPartition) -> Self {
        Self {
            max_mode_fraction: Some(1.0 / 6.0),
            blocks: Some((partition.j_min() + 1, partition.j_max() - 1)),
            ..Self::default()
        }
    }
}

/// Derive an independent stream seed from a base seed and a sample id.
pub fn sample_seed(base: u64, sample: u64, stream: u64) -> u64 {
    // splitmix64 finaliser over a combined key
    let mut z = base
        .wrapping_add(sample.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random scalar field; returns the field and the decay exponent `γ` used.
pub fn random_scalar(
    partition: &DyadicPartition,
    seed: u64,
    cfg: &RandomFieldConfig,
) -> (ScalarField, f64) {
    let lattice = partition.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = if cfg.gamma_max > cfg.gamma_min {
        rng.random_range(cfg.gamma_min..cfg.gamma_max)
    } else {
        cfg.gamma_min
    };
    let mut amplitude = vec![0.0; lattice.len()];
    let (lo, hi) = cfg.blocks.unwrap_or((partition.j_min(), partition.j_max()));
    for j in partition.range() {
        if (lo..=hi).contains(&j) {
            let a = 2f64.powf(-gamma * j as f64);
            partition.for_each_weight(j, |i, w| amplitude[i] += w * a);
        }
    }
    // a mode partly owned by an excluded block is dropped entirely
    for j in partition.range().filter(|j| !(lo..=hi).contains(j)) {
        partition.for_each_weight(j, |i, w| {
            if w > 0.0 {
                amplitude[i] = 0.0;
            }
        });
    }
    let shape = lattice.shape();
    let coeffs = (0..lattice.len())
        .map(|i| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let keep = match cfg.max_mode_fraction {
                Some(frac) => {
                    let m = lattice.mode_at(i);
                    (0..3).all(|a| (m[a].abs() as f64) <= frac * shape[a] as f64)
                }
                None => true,
            };
            if keep {
                Complex64::new(re, im) * amplitude[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let f = ScalarField::from_spectral(lattice, coeffs).expect("finite coefficients");
    (f, gamma)
}

/// Random divergence-free, mean-zero vector field.
pub fn random_divergence_free(
    partition: &DyadicPartition,
    seed: u64,
    cfg: &RandomFieldConfig,
) -> VelocityField {
    let c = [0u64, 1, 2].map(|k| random_scalar(partition, sample_seed(seed, 0, 17 + k), cfg).0);
    leray_project(&VelocityField::new(c).expect("shared lattice"))
}

/// Random field rescaled to a prescribed max-norm.
pub fn normalised(f: &ScalarField, max_abs: f64) -> ScalarField {
    let m = f.max_abs();
    if m == 0.0 {
        return f.clone();
    }
    f.scaled(max_abs / m)
}
