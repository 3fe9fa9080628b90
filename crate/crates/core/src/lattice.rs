//! Periodic grid geometry and its integer frequency lattice.
//!
//! A lattice covers the box `[0, L₁) × [0, L₂) × [0, L₃)` with `n₁ × n₂ × n₃`
//! points, stored row-major (axis 3 contiguous). Along each axis the signed
//! mode index `m ∈ [-n/2, n/2)` carries the physical wavenumber
//! `k = 2π m / L`. The index `m = -n/2` (Nyquist) has no partner under
//! negation; every field constructor zeroes it.
//!
//! Spectral coefficients use the Fourier-series normalisation
//! `f(x) = Σ_m c_m exp(i k_m · x)`, so `cos(x₁)` has `c_{±1} = 1/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate axis of the 3D box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
        }
    }

    /// Axis from its 1-based number, as used in `∂₁, ∂₂, ∂₃`.
    pub fn from_number(n: usize) -> Result<Axis> {
        match n {
            1 => Ok(Axis::X1),
            2 => Ok(Axis::X2),
            3 => Ok(Axis::X3),
            _ => Err(Error::Constraint(format!("axis must be 1, 2 or 3, got {n}"))),
        }
    }
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct Inner {
    shape: [usize; 3],
    lengths: [f64; 3],
    modes: [Vec<i64>; 3],
    wavenumbers: [Vec<f64>; 3],
    plans: [AxisPlan; 3],
}

/// Periodic grid geometry together with FFT plans. Cheap to clone.
#[derive(Clone)]
pub struct FrequencyLattice {
    inner: Arc<Inner>,
}

impl fmt::Debug for FrequencyLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyLattice")
            .field("shape", &self.inner.shape)
            .field("lengths", &self.inner.lengths)
            .finish()
    }
}

impl PartialEq for FrequencyLattice {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.shape == other.inner.shape
                && self.inner.lengths == other.inner.lengths)
    }
}

/// Serializable description of a lattice (shape and periods).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub shape: [usize; 3],
    pub lengths: [f64; 3],
}

impl FrequencyLattice {
    /// Cubic lattice with `n` points and period `length` along every axis.
    pub fn cubic(n: usize, length: f64) -> Result<Self> {
        Self::new([n; 3], [length; 3])
    }

    /// Lattice with per-axis point counts and periods.
    pub fn new(shape: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        for (axis, &n) in shape.iter().enumerate() {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidLattice(format!(
                    "axis {} has n = {n}; need a power of two >= 8",
                    axis + 1
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidLattice(format!(
                    "axis {} has period L = {l}; need L > 0",
                    axis + 1
                )));
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let modes = shape.map(|n| {
            (0..n)
                .map(|i| {
                    let i = i as i64;
                    let n = n as i64;
                    if i < n / 2 {
                        i
                    } else {
                        i - n
                    }
                })
                .collect::<Vec<_>>()
        });
        let wavenumbers = [0, 1, 2].map(|a| {
            modes[a]
                .iter()
                .map(|&m| 2.0 * PI * m as f64 / lengths[a])
                .collect::<Vec<_>>()
        });
        let plans = shape.map(|n| AxisPlan {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        });
        Ok(Self {
            inner: Arc::new(Inner {
                shape,
                lengths,
                modes,
                wavenumbers,
                plans,
            }),
        })
    }

    pub fn from_spec(spec: LatticeSpec) -> Result<Self> {
        Self::new(spec.shape, spec.lengths)
    }

    pub fn spec(&self) -> LatticeSpec {
        LatticeSpec {
            shape: self.inner.shape,
            lengths: self.inner.lengths,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.inner.shape
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.inner.lengths
    }

    pub fn n(&self, axis: Axis) -> usize {
        self.inner.shape[axis.index()]
    }

    pub fn length(&self, axis: Axis) -> f64 {
        self.inner.lengths[axis.index()]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Wavenumber spacing `2π / L` along an axis.
    pub fn spacing(&self, axis: Axis) -> f64 {
        2.0 * PI / self.length(axis)
    }

    /// Volume of one grid cell, `Π L_a / n_a`.
    pub fn cell_volume(&self) -> f64 {
        (0..3)
            .map(|a| self.inner.lengths[a] / self.inner.shape[a] as f64)
            .product()
    }

    pub fn volume(&self) -> f64 {
        self.inner.lengths.iter().product()
    }

    /// Physical wavenumbers along an axis, in FFT storage order.
    pub fn wavenumbers(&self, axis: Axis) -> &[f64] {
        &self.inner.wavenumbers[axis.index()]
    }

    /// Signed mode indices along an axis, in FFT storage order.
    pub fn modes(&self, axis: Axis) -> &[i64] {
        &self.inner.modes[axis.index()]
    }

    /// Storage index along `axis` of the signed mode `m`, if it exists.
    pub fn storage_index(&self, axis: Axis, m: i64) -> Option<usize> {
        let n = self.n(axis) as i64;
        if m < -n / 2 || m >= n / 2 {
            return None;
        }
        Some(m.rem_euclid(n) as usize)
    }

    #[inline]
    pub fn flat(&self, i: [usize; 3]) -> usize {
        let [_, n1, n2] = self.inner.shape;
        (i[0] * n1 + i[1]) * n2 + i[2]
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let [_, n1, n2] = self.inner.shape;
        [idx / (n1 * n2), (idx / n2) % n1, idx % n2]
    }

    /// Flat index of the frequency `-m` for the frequency stored at `idx`.
    #[inline]
    pub fn negated(&self, idx: usize) -> usize {
        let s = self.inner.shape;
        let i = self.unflat(idx);
        self.flat([
            (s[0] - i[0]) % s[0],
            (s[1] - i[1]) % s[1],
            (s[2] - i[2]) % s[2],
        ])
    }

    /// Whether any axis of the frequency at `idx` sits on the Nyquist index.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let i = self.unflat(idx);
        (0..3).any(|a| i[a] == self.inner.shape[a] / 2)
    }

    #[inline]
    pub fn mode_at(&self, idx: usize) -> [i64; 3] {
        let i = self.unflat(idx);
        [
            self.inner.modes[0][i[0]],
            self.inner.modes[1][i[1]],
            self.inner.modes[2][i[2]],
        ]
    }

    #[inline]
    pub fn wavevector_at(&self, idx: usize) -> [f64; 3] {
        let i = self.unflat(idx);
        [
            self.inner.wavenumbers[0][i[0]],
            self.inner.wavenumbers[1][i[1]],
            self.inner.wavenumbers[2][i[2]],
        ]
    }

    /// Physical coordinates of grid point `idx`.
    #[inline]
    pub fn point_at(&self, idx: usize) -> [f64; 3] {
        let i = self.unflat(idx);
        [0, 1, 2].map(|a| i[a] as f64 * self.inner.lengths[a] / self.inner.shape[a] as f64)
    }

    /// `|k|` for every stored frequency, in storage order.
    pub fn radii(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let w = &self.inner.wavenumbers;
        for k0 in &w[0] {
            for k1 in &w[1] {
                for k2 in &w[2] {
                    out.push((k0 * k0 + k1 * k1 + k2 * k2).sqrt());
                }
            }
        }
        out
    }

    /// Smallest and largest `|k|` over nonzero, non-Nyquist frequencies.
    pub fn radius_range(&self) -> (f64, f64) {
        let kmin = (0..3)
            .map(|a| self.spacing(Axis::ALL[a]))
            .fold(f64::INFINITY, f64::min);
        let kmax = (0..3)
            .map(|a| {
                let n = self.inner.shape[a] as f64;
                (n / 2.0 - 1.0) * self.spacing(Axis::ALL[a])
            })
            .map(|k| k * k)
            .sum::<f64>()
            .sqrt();
        (kmin, kmax)
    }

    /// In-place forward transform; output holds Fourier-series coefficients.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true, None);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// In-place inverse transform (synthesis from Fourier-series coefficients).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false, None);
    }

    /// Inverse transform of coefficients that vanish outside the box
    /// `|m_a| ≤ cut[a]`. Lines that are identically zero are skipped.
    pub fn inverse_truncated(&self, data: &mut [Complex64], cut: [i64; 3]) {
        self.transform(data, false, Some(cut));
    }

    /// Forward transform that only computes the coefficients inside
    /// `|m_a| ≤ cut[a]`; entries outside the box are left unspecified.
    pub fn forward_truncated(&self, data: &mut [Complex64], cut: [i64; 3]) {
        self.transform(data, true, Some(cut));
        let scale = 1.0 / self.len() as f64;
        let [_, n1, n2] = self.inner.shape;
        let k2 = self.kept(2, Some(cut));
        for i0 in self.kept(0, Some(cut)) {
            for i1 in self.kept(1, Some(cut)) {
                let row = &mut data[(i0 * n1 + i1) * n2..(i0 * n1 + i1 + 1) * n2];
                for &i2 in &k2 {
                    row[i2] *= scale;
                }
            }
        }
    }

    fn kept(&self, axis: usize, cut: Option<[i64; 3]>) -> Vec<usize> {
        let modes = &self.inner.modes[axis];
        (0..modes.len())
            .filter(|&i| cut.is_none_or(|c| modes[i].abs() <= c[axis]))
            .collect()
    }

    fn transform(&self, data: &mut [Complex64], forward: bool, cut: Option<[i64; 3]>) {
        assert_eq!(data.len(), self.len(), "transform buffer size");
        let [n0, n1, n2] = self.inner.shape;
        let plan = |a: usize| {
            if forward {
                &self.inner.plans[a].forward
            } else {
                &self.inner.plans[a].inverse
            }
        };
        let zero = Complex64::new(0.0, 0.0);
        let scratch_len = (0..3)
            .map(|a| plan(a).get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let mut scratch = vec![zero; scratch_len];
        let all = |n: usize| (0..n).collect::<Vec<_>>();
        let k1 = self.kept(1, cut);
        let k2 = self.kept(2, cut);
        let mut tile = vec![zero; TILE * n0.max(n1)];
        let plane_len = n1 * n2;

        // Axes 2 and 3 together, one x₁-plane at a time so the plane stays
        // in cache. `rows` are the live x₂-rows for the axis-3 pass and
        // `cols` the live x₃-columns for the axis-2 pass.
        let plane_2d = |plane: &mut [Complex64], scratch: &mut [Complex64], tile: &mut [Complex64], rows: &[usize], cols: &[usize], axis3_first: bool| {
            let axis3 = |plane: &mut [Complex64], scratch: &mut [Complex64]| {
                if rows.len() == n1 {
                    plan(2).process_with_scratch(plane, scratch);
                } else {
                    for &i1 in rows {
                        plan(2).process_with_scratch(&mut plane[i1 * n2..(i1 + 1) * n2], scratch);
                    }
                }
            };
            if axis3_first {
                axis3(plane, scratch);
            }
            // Strided axis through a tile of TILE lines at a time.
            for chunk in cols.chunks(TILE) {
                let t = &mut tile[..chunk.len() * n1];
                for i1 in 0..n1 {
                    let row = &plane[i1 * n2..(i1 + 1) * n2];
                    for (b, &c) in chunk.iter().enumerate() {
                        t[b * n1 + i1] = row[c];
                    }
                }
                plan(1).process_with_scratch(t, scratch);
                for i1 in 0..n1 {
                    let row = &mut plane[i1 * n2..(i1 + 1) * n2];
                    for (b, &c) in chunk.iter().enumerate() {
                        row[c] = t[b * n1 + i1];
                    }
                }
            }
            if !axis3_first {
                axis3(plane, scratch);
            }
        };
        let axis1 = |data: &mut [Complex64], scratch: &mut [Complex64], tile: &mut [Complex64], cols: &[usize]| {
            for chunk in cols.chunks(TILE) {
                let t = &mut tile[..chunk.len() * n0];
                for i0 in 0..n0 {
                    let row = &data[i0 * plane_len..(i0 + 1) * plane_len];
                    for (b, &c) in chunk.iter().enumerate() {
                        t[b * n0 + i0] = row[c];
                    }
                }
                plan(0).process_with_scratch(t, scratch);
                for i0 in 0..n0 {
                    let row = &mut data[i0 * plane_len..(i0 + 1) * plane_len];
                    for (b, &c) in chunk.iter().enumerate() {
                        row[c] = t[b * n0 + i0];
                    }
                }
            }
        };
        let plane_cols: Vec<usize> = k1.iter().flat_map(|&i1| k2.iter().map(move |&i2| i1 * n2 + i2)).collect();
        let all1 = all(n1);

        if forward {
            // Physical input: every line is live, but only kept outputs are needed.
            for plane in data.chunks_mut(plane_len) {
                plane_2d(plane, &mut scratch, &mut tile, &all1, &k2, true);
            }
            axis1(data, &mut scratch, &mut tile, &plane_cols);
        } else {
            // Spectral input vanishes outside the kept box.
            axis1(data, &mut scratch, &mut tile, &plane_cols);
            for plane in data.chunks_mut(plane_len) {
                plane_2d(plane, &mut scratch, &mut tile, &all1, &k2, false);
            }
        }
    }
}

const TILE: usize = 16;
