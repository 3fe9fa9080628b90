//! Dyadic partition of unity, the block operators `Δ̇_j`, `Ṡ_j`, and
//! homogeneous Besov norms `Ḃ^s_{p,r}`.
//!
//! The radial profile is built from the smooth step
//! `T(t) = h(t) / (h(t) + h(1 − t))`, `h(t) = exp(−1/t)` for `t > 0`:
//! `χ(r) = T((4/3 − r) / (4/3 − 3/4))` equals 1 on `r ≤ 3/4` and 0 on
//! `r ≥ 4/3`, and `φ(r) = χ(r/2) − χ(r)` is supported in `[3/4, 8/3]`.
//! Telescoping gives `Σ_j φ(2^{−j} r) = 1` for every `r > 0`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Result};
use crate::field::{ScalarField, VelocityField};
use crate::lattice::FrequencyLattice;
use crate::spectral::lp_norm_values;

pub const ANNULUS_INNER: f64 = 3.0 / 4.0;
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;
const PLATEAU_EDGE: f64 = 4.0 / 3.0;

/// Fraction of spectral energy in the edge blocks above which a
/// truncation warning is attached.
pub const BOUNDARY_MASS_WARNING: f64 = 1e-6;

fn h(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = h(t);
    a / (a + h(1.0 - t))
}

/// Low-frequency cutoff `χ(r)`.
pub fn low_cutoff(r: f64) -> f64 {
    smooth_step((PLATEAU_EDGE - r) / (PLATEAU_EDGE - ANNULUS_INNER))
}

/// Radial bump `φ(r) = χ(r/2) − χ(r)`.
pub fn bump(r: f64) -> f64 {
    low_cutoff(0.5 * r) - low_cutoff(r)
}

/// Weight of block `j` at radius `r`, i.e. `φ(2^{−j} r)`.
pub fn block_weight(j: i32, r: f64) -> f64 {
    bump(r * 2f64.powi(-j))
}

/// Indices `(s, p, r)` of a homogeneous Besov norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        check_exponent("p", p)?;
        check_exponent("r", r)?;
        if !s.is_finite() {
            return Err(crate::Error::Constraint(format!("regularity s = {s} must be finite")));
        }
        Ok(Self { s, p, r })
    }

    /// The critical index `Ḃ^{−1+3/p}_{p,1}` of the smallness condition.
    pub fn critical(p: f64) -> Result<Self> {
        Self::new(-1.0 + 3.0 / p, p, 1.0)
    }
}

#[derive(Debug, Clone)]
struct BlockMask {
    indices: Vec<u32>,
    weights: Vec<f64>,
}

/// The partition `φ(2^{−j}ξ)` evaluated on a lattice for every usable `j`.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    lattice: FrequencyLattice,
    j_min: i32,
    j_max: i32,
    blocks: Vec<BlockMask>,
}

impl DyadicPartition {
    /// Usable blocks are those whose open annulus `2^j (3/4, 8/3)` meets the
    /// lattice's nonzero radii; together they cover every nonzero frequency.
    pub fn new(lattice: &FrequencyLattice) -> Self {
        let (kmin, kmax) = lattice.radius_range();
        let mut j_min = (kmin / ANNULUS_OUTER).log2().floor() as i32 - 1;
        while 2f64.powi(j_min) * ANNULUS_OUTER <= kmin {
            j_min += 1;
        }
        let mut j_max = (kmax / ANNULUS_INNER).log2().ceil() as i32 + 1;
        while 2f64.powi(j_max) * ANNULUS_INNER >= kmax {
            j_max -= 1;
        }
        let count = (j_max - j_min + 1).max(0) as usize;
        let mut blocks: Vec<BlockMask> = (0..count)
            .map(|_| BlockMask {
                indices: Vec::new(),
                weights: Vec::new(),
            })
            .collect();
        for (idx, r) in lattice.radii().into_iter().enumerate() {
            if r == 0.0 || lattice.is_nyquist(idx) {
                continue;
            }
            let lo = ((r / ANNULUS_OUTER).log2().floor() as i32).max(j_min);
            let hi = ((r / ANNULUS_INNER).log2().ceil() as i32).min(j_max);
            for j in lo..=hi {
                let w = block_weight(j, r);
                if w > 0.0 {
                    let b = &mut blocks[(j - j_min) as usize];
                    b.indices.push(idx as u32);
                    b.weights.push(w);
                }
            }
        }
        Self {
            lattice: lattice.clone(),
            j_min,
            j_max,
            blocks,
        }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn contains(&self, j: i32) -> bool {
        j >= self.j_min && j <= self.j_max
    }

    /// Dense per-frequency weights `φ(2^{−j}ξ)` for block `j` (zeros if out of range).
    pub fn dense_weights(&self, j: i32) -> Vec<f64> {
        let mut w = vec![0.0; self.lattice.len()];
        if let Some(b) = self.mask(j) {
            for (&i, &v) in b.indices.iter().zip(&b.weights) {
                w[i as usize] = v;
            }
        }
        w
    }

    fn mask(&self, j: i32) -> Option<&BlockMask> {
        if self.contains(j) {
            Some(&self.blocks[(j - self.j_min) as usize])
        } else {
            None
        }
    }

    /// Visit `(flat index, φ(2^{−j}ξ))` for every frequency in block `j`.
    pub(crate) fn for_each_weight(&self, j: i32, mut visit: impl FnMut(usize, f64)) {
        if let Some(b) = self.mask(j) {
            for (&i, &w) in b.indices.iter().zip(&b.weights) {
                visit(i as usize, w);
            }
        }
    }

    fn check(&self, f: &ScalarField) {
        assert!(
            *f.lattice() == self.lattice,
            "field and partition live on different lattices"
        );
    }

    /// Coefficients of `Δ̇_j f` (dense, zero outside the block).
    pub(crate) fn block_coefficients(&self, f: &ScalarField, j: i32) -> Vec<Complex64> {
        self.check(f);
        let mut out = vec![Complex64::new(0.0, 0.0); self.lattice.len()];
        if let Some(b) = self.mask(j) {
            let src = f.spectral();
            for (&i, &w) in b.indices.iter().zip(&b.weights) {
                out[i as usize] = src[i as usize] * w;
            }
        }
        out
    }

    /// Grid values of `Δ̇_j f`, or `None` when the block is empty for `f`.
    pub(crate) fn block_values(&self, f: &ScalarField, j: i32) -> Option<Vec<f64>> {
        let mut data = self.block_coefficients(f, j);
        if data.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            return None;
        }
        self.lattice.inverse(&mut data);
        Some(data.into_iter().map(|c| c.re).collect())
    }

    /// `‖Δ̇_j f‖_{L^p}`.
    pub fn block_norm(&self, f: &ScalarField, j: i32, p: f64) -> f64 {
        match self.block_values(f, j) {
            Some(v) => lp_norm_values(&v, p, self.lattice.cell_volume()),
            None => 0.0,
        }
    }

    /// Spectral energy `Σ|c|²` carried by block `j` (with its weights applied).
    pub fn block_energy(&self, f: &ScalarField, j: i32) -> f64 {
        self.check(f);
        self.mask(j).map_or(0.0, |b| {
            b.indices
                .iter()
                .zip(&b.weights)
                .map(|(&i, &w)| (f.spectral()[i as usize] * w).norm_sqr())
                .sum()
        })
    }
}

/// `Δ̇_j f`. Out-of-range `j` yields the zero field.
pub fn block(f: &ScalarField, j: i32, partition: &DyadicPartition) -> ScalarField {
    ScalarField::from_spectral_unchecked(f.lattice(), partition.block_coefficients(f, j))
}

/// `Ṡ_j f = Σ_{k ≤ j−1} Δ̇_k f` plus the zero mode of `f`.
pub fn low_pass(f: &ScalarField, j: i32, partition: &DyadicPartition) -> ScalarField {
    partition.check(f);
    let mut weights = vec![0.0; f.lattice().len()];
    weights[0] = 1.0;
    let top = (j - 1).min(partition.j_max);
    for k in partition.j_min..=top {
        let b = partition.mask(k).expect("k in range");
        for (&i, &w) in b.indices.iter().zip(&b.weights) {
            weights[i as usize] += w;
        }
    }
    f.apply_weights(&weights)
}

/// Per-block `L^p` norms `‖Δ̇_j f‖_{L^p}` for every usable `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSpectrum {
    pub p: f64,
    pub entries: Vec<(i32, f64)>,
    /// Fraction of spectral energy in the first and last usable blocks.
    pub boundary_fraction: f64,
}

impl DyadicSpectrum {
    pub fn compute(f: &ScalarField, p: f64, partition: &DyadicPartition) -> Result<Self> {
        check_exponent("p", p)?;
        let mut entries = Vec::new();
        let mut total = 0.0;
        let mut edge = 0.0;
        for j in partition.range() {
            let norm = partition.block_norm(f, j, p);
            entries.push((j, norm));
            let e = partition.block_energy(f, j);
            total += e;
            if j == partition.j_min || j == partition.j_max {
                edge += e;
            }
        }
        let boundary_fraction = if total > 0.0 { edge / total } else { 0.0 };
        Ok(Self {
            p,
            entries,
            boundary_fraction,
        })
    }

    /// `‖(2^{js} ‖Δ̇_j f‖_{L^p})_j‖_{ℓ^r}`.
    pub fn besov(&self, s: f64, r: f64) -> f64 {
        let terms = self.entries.iter().map(|&(j, n)| 2f64.powf(j as f64 * s) * n);
        ell_r(terms, r)
    }

    pub fn norm_at(&self, j: i32) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == j)
            .map_or(0.0, |e| e.1)
    }

    pub fn truncation_warning(&self) -> Option<String> {
        (self.boundary_fraction > BOUNDARY_MASS_WARNING).then(|| {
            format!(
                "{:.3e} of the spectral energy sits in the edge blocks; the lattice truncates the dyadic sum",
                self.boundary_fraction
            )
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,block_norm\n");
        for (j, n) in &self.entries {
            let _ = writeln!(out, "{j},{n:.17e}");
        }
        out
    }
}

/// `ℓ^r` norm of a nonnegative sequence; `r = ∞` is the sup.
pub fn ell_r(terms: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        return terms.fold(0.0, f64::max);
    }
    if r == 1.0 {
        return terms.sum();
    }
    terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
}

/// `‖f‖_{Ḃ^s_{p,r}}` over the usable block range; the zero mode is ignored.
pub fn besov_norm(f: &ScalarField, idx: BesovIndex, partition: &DyadicPartition) -> Result<f64> {
    Ok(DyadicSpectrum::compute(f, idx.p, partition)?.besov(idx.s, idx.r))
}

/// Sum of component norms, `‖u¹‖ + ‖u²‖ + ‖u³‖`.
pub fn vector_besov_norm(
    u: &VelocityField,
    idx: BesovIndex,
    partition: &DyadicPartition,
) -> Result<f64> {
    let mut total = 0.0;
    for c in u.components() {
        if !c.is_zero() {
            total += besov_norm(c, idx, partition)?;
        }
    }
    Ok(total)
}
