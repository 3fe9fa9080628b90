//! Fourier-multiplier operators and grid quadrature on the torus.

use num_complex::Complex64;

use crate::error::{check_exponent, Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::lattice::{Axis, FrequencyLattice};

/// Spectral derivative `∂_axis f` (multiplier `i k_axis`).
pub fn derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let lattice = f.lattice();
    let a = axis.index();
    let data = f
        .spectral()
        .iter()
        .enumerate()
        .map(|(i, &c)| c * Complex64::new(0.0, lattice.wavevector_at(i)[a]))
        .collect();
    ScalarField::from_spectral_unchecked(lattice, data)
}

pub fn gradient(f: &ScalarField) -> [ScalarField; 3] {
    Axis::ALL.map(|a| derivative(f, a))
}

/// `∂₁u¹ + ∂₂u² + ∂₃u³`, evaluated spectrally.
pub fn divergence(u: &VelocityField) -> ScalarField {
    let lattice = u.lattice();
    let data = (0..lattice.len())
        .map(|i| {
            let k = lattice.wavevector_at(i);
            (0..3)
                .map(|a| u.component(a).spectral()[i] * Complex64::new(0.0, k[a]))
                .sum()
        })
        .collect();
    ScalarField::from_spectral_unchecked(lattice, data)
}

/// Max over components and axes of `|∂_a u^i|` on the grid.
pub fn max_gradient(u: &VelocityField) -> f64 {
    let mut m: f64 = 0.0;
    for c in u.components() {
        for a in Axis::ALL {
            m = m.max(derivative(c, a).max_abs());
        }
    }
    m
}

/// Divergence residual `max|div u|` and the bound `tol · max|∇u|` it is judged against.
pub fn divergence_residual(u: &VelocityField) -> (f64, f64) {
    (divergence(u).max_abs(), max_gradient(u))
}

/// Check `max|div u| ≤ rel_tol · max|∇u|`, with an absolute floor for tiny fields.
pub fn require_divergence_free(u: &VelocityField, rel_tol: f64) -> Result<()> {
    let (residual, grad) = divergence_residual(u);
    let bound = rel_tol * grad.max(f64::MIN_POSITIVE);
    if residual > bound && residual > 1e-300 {
        return Err(Error::NotDivergenceFree { residual, bound });
    }
    Ok(())
}

/// Leray projection `û ↦ û − k (k·û)/|k|²`; the zero mode is untouched.
pub fn leray_project(u: &VelocityField) -> VelocityField {
    let lattice = u.lattice();
    let n = lattice.len();
    let mut out = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    let c = u.components();
    for i in 0..n {
        let k = lattice.wavevector_at(i);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let v = [c[0].spectral()[i], c[1].spectral()[i], c[2].spectral()[i]];
        if k2 == 0.0 {
            for a in 0..3 {
                out[a].push(v[a]);
            }
            continue;
        }
        let kdotv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
        for a in 0..3 {
            out[a].push(v[a] - kdotv * k[a]);
        }
    }
    let [o0, o1, o2] = out;
    VelocityField::new([
        ScalarField::from_spectral_unchecked(lattice, o0),
        ScalarField::from_spectral_unchecked(lattice, o1),
        ScalarField::from_spectral_unchecked(lattice, o2),
    ])
    .expect("components share a lattice")
}

/// L^p norm of grid values with cell volume `dv`; `p = ∞` gives the max.
pub(crate) fn lp_norm_values(values: &[f64], p: f64, dv: f64) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || max == 0.0 {
        return max;
    }
    if p == 2.0 {
        let s: f64 = values.iter().map(|v| v * v).sum();
        return (s * dv).sqrt();
    }
    let s: f64 = values.iter().map(|v| (v.abs() / max).powf(p)).sum();
    max * (s * dv).powf(1.0 / p)
}

/// Rectangle-rule `L^p` norm over the periodic box; `p = f64::INFINITY` is the grid max.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    Ok(lp_norm_values(f.physical(), p, f.lattice().cell_volume()))
}

/// Largest mode index kept by the 2/3 rule along an axis of `n` points.
pub fn dealias_cutoff(n: usize) -> i64 {
    (n / 3) as i64
}

/// Whether the stored frequency `idx` survives 2/3-rule truncation.
#[inline]
pub fn within_dealias_cube(lattice: &FrequencyLattice, idx: usize) -> bool {
    let m = lattice.mode_at(idx);
    let s = lattice.shape();
    (0..3).all(|a| m[a].abs() <= dealias_cutoff(s[a]))
}

/// 2/3-rule truncation: zero every mode with some `|m_a| > n_a/3`.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let lattice = f.lattice();
    let data = f
        .spectral()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if within_dealias_cube(lattice, i) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ScalarField::from_spectral_unchecked(lattice, data)
}

pub fn dealias_vector(u: &VelocityField) -> VelocityField {
    u.map(dealias)
}

/// Pointwise product on the grid, without truncation.
pub fn product(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    f.check_same_lattice(g)?;
    let values = f
        .physical()
        .iter()
        .zip(g.physical())
        .map(|(a, b)| a * b)
        .collect();
    ScalarField::from_physical(f.lattice(), values)
}

/// Pointwise product followed by 2/3-rule truncation.
pub fn product_dealiased(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    Ok(dealias(&product(f, g)?))
}

/// `Σ_m |c_m|² · volume`, which equals `‖f‖²_{L²}` by Parseval.
pub fn spectral_energy(f: &ScalarField) -> f64 {
    f.spectral().iter().map(|c| c.norm_sqr()).sum::<f64>() * f.lattice().volume()
}
