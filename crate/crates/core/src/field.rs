//! Real scalar and vector fields on a [`FrequencyLattice`].
//!
//! The spectral coefficients are the canonical representation; the
//! physical view is synthesised lazily and cached. Every constructor zeroes
//! Nyquist modes and repairs Hermitian symmetry, so each field is the
//! real trigonometric polynomial its coefficients describe.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Axis, FrequencyLattice};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone)]
pub struct ScalarField {
    lattice: FrequencyLattice,
    spectral: Vec<Complex64>,
    physical: OnceLock<Vec<f64>>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("lattice", &self.lattice)
            .field("mean", &self.mean())
            .finish()
    }
}

impl ScalarField {
    pub fn zeros(lattice: &FrequencyLattice) -> Self {
        Self {
            lattice: lattice.clone(),
            spectral: vec![ZERO; lattice.len()],
            physical: OnceLock::new(),
        }
    }

    /// Field from grid values (row-major, axis 3 fastest).
    pub fn from_physical(lattice: &FrequencyLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidField(format!(
                "expected {} grid values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite grid value".into()));
        }
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        lattice.forward(&mut data);
        Ok(Self::repaired(lattice, data))
    }

    /// Field sampled from a function of the physical coordinates.
    pub fn from_fn(lattice: &FrequencyLattice, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..lattice.len()).map(|i| f(lattice.point_at(i))).collect();
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        lattice.forward(&mut data);
        Self::repaired(lattice, data)
    }

    /// Field from Fourier-series coefficients; symmetry is repaired.
    pub fn from_spectral(lattice: &FrequencyLattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::InvalidField(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidField("non-finite coefficient".into()));
        }
        Ok(Self::repaired(lattice, coeffs))
    }

    /// Coefficients produced by a function of the wavevector.
    pub fn from_spectral_fn(
        lattice: &FrequencyLattice,
        f: impl Fn([f64; 3]) -> Complex64,
    ) -> Self {
        let coeffs = (0..lattice.len()).map(|i| f(lattice.wavevector_at(i))).collect();
        Self::repaired(lattice, coeffs)
    }

    /// Zero Nyquist modes and average each coefficient with the conjugate of
    /// its mirror so the synthesised field is real.
    fn repaired(lattice: &FrequencyLattice, mut data: Vec<Complex64>) -> Self {
        for idx in 0..data.len() {
            if lattice.is_nyquist(idx) {
                data[idx] = ZERO;
                continue;
            }
            let neg = lattice.negated(idx);
            if neg < idx {
                continue;
            }
            let sym = 0.5 * (data[idx] + data[neg].conj());
            data[idx] = sym;
            data[neg] = sym.conj();
        }
        Self {
            lattice: lattice.clone(),
            spectral: data,
            physical: OnceLock::new(),
        }
    }

    /// Wrap coefficients that are already Hermitian with zero Nyquist modes.
    pub(crate) fn from_spectral_unchecked(
        lattice: &FrequencyLattice,
        spectral: Vec<Complex64>,
    ) -> Self {
        debug_assert_eq!(spectral.len(), lattice.len());
        Self {
            lattice: lattice.clone(),
            spectral,
            physical: OnceLock::new(),
        }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn spectral(&self) -> &[Complex64] {
        &self.spectral
    }

    pub fn into_spectral(self) -> Vec<Complex64> {
        self.spectral
    }

    /// Grid values, synthesised on first access.
    pub fn physical(&self) -> &[f64] {
        self.physical.get_or_init(|| {
            let mut data = self.spectral.clone();
            self.lattice.inverse(&mut data);
            data.into_iter().map(|c| c.re).collect()
        })
    }

    pub fn mean(&self) -> f64 {
        self.spectral[0].re
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.spectral.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// The same trigonometric polynomial on another lattice with equal box
    /// lengths. Modes that do not fit are dropped.
    pub fn resampled(&self, lattice: &FrequencyLattice) -> Result<Self> {
        let same_box = self
            .lattice
            .lengths()
            .iter()
            .zip(lattice.lengths())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs());
        if !same_box {
            return Err(Error::LatticeMismatch("resampling needs equal box lengths".into()));
        }
        let mut out = vec![ZERO; lattice.len()];
        for (idx, c) in self.spectral.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let m = self.lattice.mode_at(idx);
            let target = [0, 1, 2].map(|a| lattice.storage_index(Axis::ALL[a], m[a]));
            if let [Some(i), Some(j), Some(k)] = target {
                out[lattice.flat([i, j, k])] = *c;
            }
        }
        Ok(Self::repaired(lattice, out))
    }

    /// Largest `|c_m − conj(c_{−m})|` over the lattice.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.spectral.len())
            .filter(|&i| !self.lattice.is_nyquist(i))
            .map(|i| (self.spectral[i] - self.spectral[self.lattice.negated(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Apply a real multiplier `m(k)` that is even in `k`.
    pub fn apply_real_multiplier(&self, m: impl Fn([f64; 3]) -> f64) -> Self {
        let data = self
            .spectral
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if c == ZERO {
                    ZERO
                } else {
                    c * m(self.lattice.wavevector_at(i))
                }
            })
            .collect();
        Self::from_spectral_unchecked(&self.lattice, data)
    }

    /// Apply per-coefficient real weights (one per stored frequency).
    pub(crate) fn apply_weights(&self, weights: &[f64]) -> Self {
        let data = self
            .spectral
            .iter()
            .zip(weights)
            .map(|(&c, &w)| c * w)
            .collect();
        Self::from_spectral_unchecked(&self.lattice, data)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let data = self.spectral.iter().map(|&c| c * a).collect();
        Self::from_spectral_unchecked(&self.lattice, data)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        self.check_same_lattice(other)?;
        let data = self
            .spectral
            .iter()
            .zip(&other.spectral)
            .map(|(&x, &y)| x * a + y * b)
            .collect();
        Ok(Self::from_spectral_unchecked(&self.lattice, data))
    }

    pub fn check_same_lattice(&self, other: &ScalarField) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(format!(
                "{:?} vs {:?}",
                self.lattice, other.lattice
            )));
        }
        Ok(())
    }

    /// Max-norm of the difference of two fields on the grid.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_lattice(other)?;
        Ok(self
            .physical()
            .iter()
            .zip(other.physical())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Same field on a lattice with the same shape but different periods.
    pub(crate) fn relabelled(&self, lattice: &FrequencyLattice) -> Self {
        debug_assert_eq!(lattice.shape(), self.lattice.shape());
        Self {
            lattice: lattice.clone(),
            spectral: self.spectral.clone(),
            physical: self.physical.clone(),
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.combine(1.0, rhs, 1.0).expect("lattice mismatch in field addition")
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.combine(1.0, rhs, -1.0).expect("lattice mismatch in field subtraction")
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, a: f64) -> ScalarField {
        self.scaled(a)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scaled(-1.0)
    }
}

/// Three scalar components `(u¹, u², u³)` on one lattice.
#[derive(Clone, Debug)]
pub struct VelocityField {
    components: [ScalarField; 3],
}

impl VelocityField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        components[0].check_same_lattice(&components[1])?;
        components[0].check_same_lattice(&components[2])?;
        Ok(Self { components })
    }

    pub fn zeros(lattice: &FrequencyLattice) -> Self {
        Self {
            components: [0, 1, 2].map(|_| ScalarField::zeros(lattice)),
        }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        self.components[0].lattice()
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            components: [0, 1, 2].map(|i| f(&self.components[i])),
        }
    }

    pub fn combine(&self, a: f64, other: &VelocityField, b: f64) -> Result<Self> {
        let c = [0, 1, 2].map(|i| self.components[i].combine(a, &other.components[i], b));
        let [c0, c1, c2] = c;
        Ok(Self {
            components: [c0?, c1?, c2?],
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|c| c.scaled(a))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn resampled(&self, lattice: &FrequencyLattice) -> Result<Self> {
        let [a, b, c] = self.components.each_ref().map(|c| c.resampled(lattice));
        Ok(Self {
            components: [a?, b?, c?],
        })
    }

    pub fn max_abs_diff(&self, other: &VelocityField) -> Result<f64> {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            m = m.max(self.components[i].max_abs_diff(&other.components[i])?);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lat() -> FrequencyLattice {
        FrequencyLattice::cubic(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn round_trip_band_limited() {
        let lattice = lat();
        let f = |x: [f64; 3]| (x[0]).sin() * (2.0 * x[1]).cos() + 0.3 * (3.0 * x[2] - x[0]).sin();
        let field = ScalarField::from_fn(&lattice, f);
        let values: Vec<f64> = (0..lattice.len()).map(|i| f(lattice.point_at(i))).collect();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = field
            .physical()
            .iter()
            .zip(&values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-12 * scale, "round trip error {err}");
    }

    #[test]
    fn resampling_preserves_polynomial() {
        let coarse = lat();
        let fine = FrequencyLattice::cubic(32, 2.0 * PI).unwrap();
        let f = |x: [f64; 3]| (x[0] - 2.0 * x[2]).sin() + 0.5 * (3.0 * x[1]).cos();
        let up = ScalarField::from_fn(&coarse, f).resampled(&fine).unwrap();
        assert!(up.max_abs_diff(&ScalarField::from_fn(&fine, f)).unwrap() < 1e-12);
        let back = up.resampled(&coarse).unwrap();
        assert!(back.max_abs_diff(&ScalarField::from_fn(&coarse, f)).unwrap() < 1e-12);
        let other = FrequencyLattice::cubic(32, 3.0).unwrap();
        assert!(up.resampled(&other).is_err());
    }

    #[test]
    fn nyquist_is_zeroed() {
        let lattice = FrequencyLattice::cubic(8, 2.0 * PI).unwrap();
        // cos(4 x1) lives entirely on the Nyquist index of an n = 8 lattice.
        let f = ScalarField::from_fn(&lattice, |x| (4.0 * x[0]).cos());
        assert!(f.is_zero() || f.max_abs() < 1e-14);
    }

    #[test]
    fn spectral_constructor_repairs_symmetry() {
        let lattice = FrequencyLattice::cubic(8, 2.0 * PI).unwrap();
        let mut c = vec![ZERO; lattice.len()];
        c[lattice.flat([1, 0, 0])] = Complex64::new(1.0, 0.0);
        let f = ScalarField::from_spectral(&lattice, c).unwrap();
        assert!(f.hermitian_defect() < 1e-15);
        // half the energy moved to the mirror mode: 0.5 (e^{ix} + e^{-ix}) = cos x
        let g = ScalarField::from_fn(&lattice, |x| x[0].cos());
        assert!(f.max_abs_diff(&g).unwrap() < 1e-14);
    }

    #[test]
    fn mismatched_lattices_are_rejected() {
        let a = ScalarField::zeros(&lat());
        let b = ScalarField::zeros(&FrequencyLattice::cubic(8, 2.0 * PI).unwrap());
        assert!(a.combine(1.0, &b, 1.0).is_err());
        assert!(VelocityField::new([a.clone(), a.clone(), b]).is_err());
    }
}
