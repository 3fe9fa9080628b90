//! Pseudo-spectral integrator for the perturbation `v = u − e^{tΔ}u₀` of
//! the incompressible Navier–Stokes equations with unit viscosity.
//!
//! `U = e^{tΔ}u₀` is exact; `v` solves
//! `∂_t v − Δv = −P div((U+v)⊗(U+v))`, `v(0) = 0`, and is advanced by
//! integrating-factor (Lawson) RK4. Products are formed on the grid and
//! truncated by the 2/3 rule.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criterion::{standard_components, Frame};
use crate::error::{check_exponent, Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::heat::heat_evolve_vector;
use crate::lattice::{Axis, FrequencyLattice};
use crate::littlewood_paley::{vector_besov_norm, BesovIndex, DyadicPartition, DyadicSpectrum};
use crate::spectral::{
    dealias_cutoff, dealias_vector, derivative, divergence, leray_project, product, product_dealiased, spectral_energy,
    within_dealias_cube,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Lebesgue exponent of the monitor norms.
    pub p: f64,
    /// Bootstrap threshold on `‖v‖_{Ḃ^{−1+3/p}_{p,1}}`.
    pub eta: f64,
    /// Monitors are evaluated every this many steps (and at the last step).
    pub output_every: usize,
    /// Record the integrands of the a-priori balance at output times.
    pub balance: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            p: 4.0,
            eta: 0.1,
            output_every: 10,
            balance: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Constraint(format!(
                "need dt > 0 and T > 0, got dt = {}, T = {}",
                self.dt, self.t_end
            )));
        }
        check_exponent("p", self.p)?;
        if !(self.eta > 0.0) {
            return Err(Error::Constraint(format!("eta must be positive, got {}", self.eta)));
        }
        if self.output_every == 0 {
            return Err(Error::Constraint("output_every must be at least 1".into()));
        }
        let steps = (self.t_end / self.dt).round();
        if steps < 1.0 || (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Constraint(format!(
                "T = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Completed,
    /// `monitor_inf` exceeded `η`; the run stopped there.
    BootstrapExceeded,
    /// Non-finite values appeared. This says nothing about the PDE.
    BlowupSuspect,
    /// The velocity grew past the CFL bound for the configured `dt`.
    CflViolated,
}

/// Integrands of the a-priori balance at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSample {
    /// `‖v·∇v‖_{Ḃ^{3/p−1}_{p,1}}`
    pub i1: f64,
    /// `‖U·∇U‖_{Ḃ^{3/p−1}_{p,1}}`
    pub i2: f64,
    /// `‖div(v⊗U) + div(U⊗v)‖_{Ḃ^{3/p−1}_{p,1}}`
    pub i3: f64,
    /// `‖U‖²_{L^∞} + ‖U‖_{Ḃ¹_{∞,∞}}`
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub config: SolveConfig,
    pub times: Vec<f64>,
    /// `‖v(t)‖_{Ḃ^{−1+3/p}_{p,1}}`
    pub monitor_inf: Vec<f64>,
    /// `∫_0^t ‖v‖_{Ḃ^{1+3/p}_{p,1}} dτ` (trapezoid over output times).
    pub monitor_l1: Vec<f64>,
    /// `‖u(t)‖²_{L²}/2`
    pub energy: Vec<f64>,
    /// `max|div u(t)|`
    pub div_residual: Vec<f64>,
    pub gamma_hit: Option<f64>,
    pub status: SolveStatus,
    pub balance: Vec<BalanceSample>,
}

impl SolveTrace {
    /// CSV with columns `t, monitor_inf, monitor_l1, energy, div_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,monitor_inf,monitor_l1,energy,div_residual\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[i], self.monitor_inf[i], self.monitor_l1[i], self.energy[i], self.div_residual[i]
            );
        }
        out
    }

    pub fn max_monitor(&self) -> f64 {
        self.monitor_inf.iter().copied().fold(0.0, f64::max)
    }
}

pub struct SolveOutcome {
    pub trace: SolveTrace,
    /// `v` at the last accepted step.
    pub v: VelocityField,
    /// The dealiased initial data actually evolved.
    pub u0: VelocityField,
}

/// Largest step allowed by `dt ≤ 0.5 / (max|k| · max|u|)`.
pub fn cfl_limit(lattice: &FrequencyLattice, max_velocity: f64) -> f64 {
    let kmax = lattice.radius_range().1;
    if max_velocity == 0.0 {
        f64::INFINITY
    } else {
        0.5 / (kmax * max_velocity)
    }
}

/// Spectral workspace for the nonlinear term. Spectral arrays hold only
/// the modes kept by the 2/3 rule, listed in `cube`; two real transforms
/// are packed into each complex one.
struct Stepper {
    lattice: FrequencyLattice,
    cube: Vec<usize>,
    kvec: [Vec<f64>; 3],
    k2: Vec<f64>,
    cut: [i64; 3],
    /// Compact index of `−k`.
    neg: Vec<usize>,
    /// `w₁ + i w₂` and `w₃` on the grid.
    w12: Vec<Complex64>,
    w3: Vec<Complex64>,
    buf: Vec<Complex64>,
    prod_hat: [Vec<Complex64>; 6],
    max_w: f64,
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
/// Slot in `PAIRS` of the symmetric product `w_i w_j`.
const PAIR_SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

fn dealias_cube(lattice: &FrequencyLattice) -> Vec<usize> {
    (0..lattice.len()).filter(|&i| within_dealias_cube(lattice, i)).collect()
}

impl Stepper {
    fn new(lattice: &FrequencyLattice) -> Self {
        let n = lattice.len();
        let cube = dealias_cube(lattice);
        let m = cube.len();
        let kvec = [0, 1, 2].map(|a| cube.iter().map(|&i| lattice.wavevector_at(i)[a]).collect::<Vec<_>>());
        let k2 = (0..m)
            .map(|i| kvec[0][i].powi(2) + kvec[1][i].powi(2) + kvec[2][i].powi(2))
            .collect();
        let mut compact = vec![usize::MAX; n];
        for (c, &i) in cube.iter().enumerate() {
            compact[i] = c;
        }
        let neg = cube.iter().map(|&i| compact[lattice.negated(i)]).collect();
        Self {
            lattice: lattice.clone(),
            cube,
            kvec,
            k2,
            cut: lattice.shape().map(dealias_cutoff),
            neg,
            w12: vec![ZERO; n],
            w3: vec![ZERO; n],
            buf: vec![ZERO; n],
            prod_hat: std::array::from_fn(|_| vec![ZERO; m]),
            max_w: 0.0,
        }
    }

    /// Grid values of `u + v`, components 1 and 2 packed into one transform.
    fn synthesise(&mut self, u: &[Vec<Complex64>; 3], v: &[Vec<Complex64>; 3]) {
        let i = Complex64::new(0.0, 1.0);
        self.w12.fill(ZERO);
        self.w3.fill(ZERO);
        for (c, &full) in self.cube.iter().enumerate() {
            self.w12[full] = u[0][c] + v[0][c] + i * (u[1][c] + v[1][c]);
            self.w3[full] = u[2][c] + v[2][c];
        }
        self.lattice.inverse_truncated(&mut self.w12, self.cut);
        self.lattice.inverse_truncated(&mut self.w3, self.cut);
    }

    /// Spectra of the products in slots `a` and `b`, with one transform.
    fn forward_pair(&mut self, a: usize, b: usize) {
        let w = |z: &Complex64, y: &Complex64, i: usize| match i {
            0 => z.re,
            1 => z.im,
            _ => y.re,
        };
        let ((a0, a1), (b0, b1)) = (PAIRS[a], PAIRS[b]);
        for ((o, z), y) in self.buf.iter_mut().zip(&self.w12).zip(&self.w3) {
            *o = Complex64::new(w(z, y, a0) * w(z, y, a1), w(z, y, b0) * w(z, y, b1));
        }
        self.lattice.forward_truncated(&mut self.buf, self.cut);
        let half = Complex64::new(0.5, 0.0);
        let minus_half_i = Complex64::new(0.0, -0.5);
        let (lo, hi) = self.prod_hat.split_at_mut(b);
        let (pa, pb) = (&mut lo[a], &mut hi[0]);
        for (c, &full) in self.cube.iter().enumerate() {
            let z = self.buf[full];
            let zc = self.buf[self.cube[self.neg[c]]].conj();
            pa[c] = (z + zc) * half;
            pb[c] = (z - zc) * minus_half_i;
        }
    }

    /// `−P dealias(div(w⊗w))` for `w = U + v` given spectrally.
    fn rhs(&mut self, u_hat: &[Vec<Complex64>; 3], v_hat: &[Vec<Complex64>; 3], out: &mut [Vec<Complex64>; 3]) {
        self.synthesise(u_hat, v_hat);
        self.max_w = self
            .w12
            .iter()
            .zip(&self.w3)
            .fold(0.0f64, |m, (z, y)| m.max(z.re.abs()).max(z.im.abs()).max(y.re.abs()));
        self.forward_pair(0, 1);
        self.forward_pair(2, 3);
        self.forward_pair(4, 5);
        let i = Complex64::new(0.0, 1.0);
        for k in 0..self.k2.len() {
            let kv = [self.kvec[0][k], self.kvec[1][k], self.kvec[2][k]];
            let mut f = [ZERO; 3];
            for (c, fc) in f.iter_mut().enumerate() {
                for (j, &kj) in kv.iter().enumerate() {
                    *fc += i * kj * self.prod_hat[PAIR_SLOT[c][j]][k];
                }
            }
            let q = self.k2[k];
            if q > 0.0 {
                let kf = (f[0] * kv[0] + f[1] * kv[1] + f[2] * kv[2]) / q;
                for c in 0..3 {
                    out[c][k] = -(f[c] - kf * kv[c]);
                }
            } else {
                for o in out.iter_mut() {
                    o[k] = ZERO;
                }
            }
        }
    }
}

/// `out = a ⊙ x + b ⊙ y` with per-mode multipliers.
fn stage_combination(out: &mut [Vec<Complex64>; 3], x: &[Vec<Complex64>; 3], a: &[f64], y: &[Vec<Complex64>; 3], b: &[f64]) {
    for c in 0..3 {
        for k in 0..out[c].len() {
            out[c][k] = x[c][k] * a[k] + y[c][k] * b[k];
        }
    }
}

fn gather(cube: &[usize], u: &VelocityField) -> [Vec<Complex64>; 3] {
    std::array::from_fn(|c| {
        let s = u.component(c).spectral();
        cube.iter().map(|&i| s[i]).collect()
    })
}

fn scatter(lattice: &FrequencyLattice, cube: &[usize], hat: &[Vec<Complex64>; 3]) -> Result<VelocityField> {
    VelocityField::new(std::array::from_fn(|c| {
        let mut full = vec![ZERO; lattice.len()];
        for (k, &i) in cube.iter().enumerate() {
            full[i] = hat[c][k];
        }
        ScalarField::from_spectral(lattice, full).expect("finite coefficients")
    }))
}

struct Monitors {
    inf: f64,
    high: f64,
    energy: f64,
    div: f64,
}

fn monitors(u: &VelocityField, v: &VelocityField, p: f64, partition: &DyadicPartition) -> Result<Monitors> {
    let mut inf = 0.0;
    let mut high = 0.0;
    for c in v.components() {
        if c.is_zero() {
            continue;
        }
        let sp = DyadicSpectrum::compute(c, p, partition)?;
        inf += sp.besov(-1.0 + 3.0 / p, 1.0);
        high += sp.besov(1.0 + 3.0 / p, 1.0);
    }
    let energy = 0.5 * u.components().iter().map(spectral_energy).sum::<f64>();
    Ok(Monitors {
        inf,
        high,
        energy,
        div: divergence(u).max_abs(),
    })
}

/// Solve from `u₀` (which is dealiased first) and record the monitors.
pub fn solve(u0: &VelocityField, cfg: &SolveConfig) -> Result<SolveOutcome> {
    let steps = cfg.validate()?;
    let u0 = dealias_vector(u0);
    crate::spectral::require_divergence_free(&u0, 1e-10)?;
    for c in u0.components() {
        if c.mean().abs() > 1e-12 * c.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotMeanZero(c.mean()));
        }
    }
    let lattice = u0.lattice().clone();
    let limit = cfl_limit(&lattice, u0.max_abs());
    if cfg.dt > limit {
        return Err(Error::Cfl { dt: cfg.dt, limit });
    }
    let partition = DyadicPartition::new(&lattice);
    let mut st = Stepper::new(&lattice);
    let cube = st.cube.clone();
    let m = cube.len();
    let dt = cfg.dt;
    let e_full: Vec<f64> = st.k2.iter().map(|q| (-q * dt).exp()).collect();
    let e_half: Vec<f64> = st.k2.iter().map(|q| (-q * 0.5 * dt).exp()).collect();
    let half_dt_e_half: Vec<f64> = e_half.iter().map(|e| 0.5 * dt * e).collect();
    let dt_e_half: Vec<f64> = e_half.iter().map(|e| dt * e).collect();
    let half_dt = vec![0.5 * dt; m];

    let zero3 = || -> [Vec<Complex64>; 3] { std::array::from_fn(|_| vec![ZERO; m]) };
    let mut u_hat = gather(&cube, &u0);
    let mut v_hat = zero3();
    let (mut k1, mut k2, mut k3, mut k4) = (zero3(), zero3(), zero3(), zero3());
    let (mut u_half, mut u_next, mut stage) = (zero3(), zero3(), zero3());

    let mut trace = SolveTrace {
        config: *cfg,
        times: Vec::new(),
        monitor_inf: Vec::new(),
        monitor_l1: Vec::new(),
        energy: Vec::new(),
        div_residual: Vec::new(),
        gamma_hit: None,
        status: SolveStatus::Completed,
        balance: Vec::new(),
    };
    let mut last_high = 0.0;
    let mut record = |t: f64, u_hat: &[Vec<Complex64>; 3], v_hat: &[Vec<Complex64>; 3], trace: &mut SolveTrace| -> Result<bool> {
        let v = scatter(&lattice, &cube, v_hat)?;
        let big_u = scatter(&lattice, &cube, u_hat)?;
        let u = big_u.combine(1.0, &v, 1.0)?;
        let m = monitors(&u, &v, cfg.p, &partition)?;
        let l1 = match trace.times.last() {
            Some(&t0) => trace.monitor_l1.last().copied().unwrap_or(0.0) + 0.5 * (t - t0) * (last_high + m.high),
            None => 0.0,
        };
        last_high = m.high;
        trace.times.push(t);
        trace.monitor_inf.push(m.inf);
        trace.monitor_l1.push(l1);
        trace.energy.push(m.energy);
        trace.div_residual.push(m.div);
        if cfg.balance {
            trace.balance.push(balance_sample(&big_u, &v, cfg.p, &partition)?);
        }
        let finite = m.inf.is_finite() && m.high.is_finite() && m.energy.is_finite();
        if !finite {
            trace.status = SolveStatus::BlowupSuspect;
            return Ok(false);
        }
        if m.inf > cfg.eta {
            trace.gamma_hit = Some(t);
            trace.status = SolveStatus::BootstrapExceeded;
            return Ok(false);
        }
        Ok(true)
    };

    let mut keep_going = record(0.0, &u_hat, &v_hat, &mut trace)?;
    let mut step = 0;
    while keep_going && step < steps {
        for c in 0..3 {
            for k in 0..m {
                u_half[c][k] = u_hat[c][k] * e_half[k];
                u_next[c][k] = u_hat[c][k] * e_full[k];
            }
        }
        st.rhs(&u_hat, &v_hat, &mut k1);
        if !st.max_w.is_finite() {
            trace.status = SolveStatus::BlowupSuspect;
            break;
        }
        if dt > cfl_limit(&lattice, st.max_w) {
            trace.status = SolveStatus::CflViolated;
            break;
        }
        // a = E₂(v + dt/2 k₁)
        stage_combination(&mut stage, &v_hat, &e_half, &k1, &half_dt_e_half);
        st.rhs(&u_half, &stage, &mut k2);
        // b = E₂v + dt/2 k₂
        stage_combination(&mut stage, &v_hat, &e_half, &k2, &half_dt);
        st.rhs(&u_half, &stage, &mut k3);
        // c = E v + dt E₂ k₃
        stage_combination(&mut stage, &v_hat, &e_full, &k3, &dt_e_half);
        st.rhs(&u_next, &stage, &mut k4);
        for c in 0..3 {
            for k in 0..m {
                v_hat[c][k] = v_hat[c][k] * e_full[k]
                    + (k1[c][k] * e_full[k] + (k2[c][k] + k3[c][k]) * (2.0 * e_half[k]) + k4[c][k]) * (dt / 6.0);
            }
        }
        std::mem::swap(&mut u_hat, &mut u_next);
        step += 1;
        if step % cfg.output_every == 0 || step == steps {
            keep_going = record(step as f64 * dt, &u_hat, &v_hat, &mut trace)?;
        }
    }
    let v = scatter(&lattice, &cube, &v_hat)?;
    Ok(SolveOutcome { trace, v, u0 })
}

/// `(a·∇)b` with dealiased products, `Σ_j a_j ∂_j b_i`.
fn advect(a: &VelocityField, b: &VelocityField) -> Result<VelocityField> {
    let comps: Vec<ScalarField> = (0..3)
        .map(|i| {
            let mut acc = ScalarField::zeros(a.lattice());
            for (j, axis) in Axis::ALL.iter().enumerate() {
                let term = product_dealiased(a.component(j), &derivative(b.component(i), *axis))?;
                acc = &acc + &term;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    VelocityField::new(comps.try_into().expect("three components"))
}

/// `div(a⊗b)_i = Σ_j ∂_j(a_i b_j)`, dealiased.
fn div_tensor(a: &VelocityField, b: &VelocityField) -> Result<VelocityField> {
    let comps: Vec<ScalarField> = (0..3)
        .map(|i| {
            let mut acc = ScalarField::zeros(a.lattice());
            for (j, axis) in Axis::ALL.iter().enumerate() {
                let prod = product_dealiased(a.component(i), b.component(j))?;
                acc = &acc + &derivative(&prod, *axis);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    VelocityField::new(comps.try_into().expect("three components"))
}

/// `−P(v·∇v + div(v⊗U) + div(U⊗v) + U·∇U)`, each term formed separately.
pub fn nonlinear_rhs(v: &VelocityField, big_u: &VelocityField) -> Result<VelocityField> {
    if v.lattice() != big_u.lattice() {
        return Err(Error::LatticeMismatch("v and U on different lattices".into()));
    }
    let terms = [
        div_tensor(v, v)?,
        div_tensor(v, big_u)?,
        div_tensor(big_u, v)?,
        div_tensor(big_u, big_u)?,
    ];
    let mut sum = VelocityField::zeros(v.lattice());
    for t in &terms {
        sum = sum.combine(1.0, t, 1.0)?;
    }
    Ok(leray_project(&sum).scaled(-1.0))
}

fn balance_sample(big_u: &VelocityField, v: &VelocityField, p: f64, partition: &DyadicPartition) -> Result<BalanceSample> {
    let idx = BesovIndex::new(3.0 / p - 1.0, p, 1.0)?;
    let i1 = if v.is_zero() { 0.0 } else { vector_besov_norm(&advect(v, v)?, idx, partition)? };
    let i2 = vector_besov_norm(&advect(big_u, big_u)?, idx, partition)?;
    let i3 = if v.is_zero() {
        0.0
    } else {
        let cross = div_tensor(v, big_u)?.combine(1.0, &div_tensor(big_u, v)?, 1.0)?;
        vector_besov_norm(&cross, idx, partition)?
    };
    let sup: f64 = big_u.components().iter().map(|c| c.max_abs()).sum();
    let b1 = vector_besov_norm(big_u, BesovIndex::new(1.0, f64::INFINITY, f64::INFINITY)?, partition)?;
    Ok(BalanceSample {
        i1,
        i2,
        i3,
        weight: sup * sup + b1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub t: f64,
    /// `sup_{τ≤t} monitor_inf + monitor_l1(t)`
    pub lhs: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `∫_0^t (‖U‖²_∞ + ‖U‖_{Ḃ¹_{∞,∞}}) ‖v‖_{Ḃ^{−1+3/p}_{p,1}} dτ`
    pub gronwall: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub rows: Vec<BalanceRow>,
    /// Largest ratio over non-degenerate rows.
    pub max_ratio: f64,
}

/// Right sides below this are treated as zero. The monitored norms are
/// critical, so an absolute floor is meaningful.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

/// Left side of the a-priori estimate against its integrated right side.
pub fn apriori_balance(trace: &SolveTrace) -> Result<BalanceReport> {
    if trace.balance.len() != trace.times.len() || trace.times.is_empty() {
        return Err(Error::InsufficientData(
            "trace has no balance integrands; run with balance enabled".into(),
        ));
    }
    let mut rows = Vec::with_capacity(trace.times.len());
    let (mut i1, mut i2, mut i3, mut gr) = (0.0, 0.0, 0.0, 0.0);
    let mut sup = 0.0f64;
    for k in 0..trace.times.len() {
        if k > 0 {
            let h = 0.5 * (trace.times[k] - trace.times[k - 1]);
            let (a, b) = (&trace.balance[k - 1], &trace.balance[k]);
            i1 += h * (a.i1 + b.i1);
            i2 += h * (a.i2 + b.i2);
            i3 += h * (a.i3 + b.i3);
            gr += h * (a.weight * trace.monitor_inf[k - 1] + b.weight * trace.monitor_inf[k]);
        }
        sup = sup.max(trace.monitor_inf[k]);
        let lhs = sup + trace.monitor_l1[k];
        let denom = i1 + i2 + i3 + gr;
        let degenerate = !(denom > DEGENERATE_FLOOR);
        rows.push(BalanceRow {
            t: trace.times[k],
            lhs,
            i1,
            i2,
            i3,
            gronwall: gr,
            ratio: if degenerate { 0.0 } else { lhs / denom },
            degenerate,
        });
    }
    let max_ratio = rows.iter().filter(|r| !r.degenerate).map(|r| r.ratio).fold(0.0, f64::max);
    Ok(BalanceReport { rows, max_ratio })
}

/// Pointwise residual of the `div U = 0` rewrite of `U·∇U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewriteResidual {
    pub absolute: f64,
    /// `max|U| · max|∇U|`
    pub scale: f64,
    pub relative: f64,
}

/// Compare `U·∇U` with its rewritten form
/// `((U¹+U²)∂₁U¹ + U²∂₂(U¹+U²) + U²∂₃U³ + U³∂₃U¹, (U¹+U²)∂₂U² + U¹∂₁(U¹+U²) + U¹∂₃U³ + U³∂₃U²,
/// U¹∂₁U³ + U²∂₂U³ − U³(∂₁U¹ + ∂₂U²))`, on the grid.
pub fn transport_rewrite_residual(u: &VelocityField) -> RewriteResidual {
    let forms = TransportForms::new(u);
    let mut absolute = 0.0f64;
    for i in 0..3 {
        for (a, b) in forms.direct[i].iter().zip(&forms.rewritten[i]) {
            absolute = absolute.max((a - b).abs());
        }
    }
    let scale = u.max_abs() * forms.grad_max;
    RewriteResidual {
        absolute,
        scale,
        relative: if scale > 0.0 { absolute / scale } else { 0.0 },
    }
}

/// The rewritten form of `U·∇U` as a dealiased field.
pub fn transport_rewritten(u: &VelocityField) -> Result<VelocityField> {
    let forms = TransportForms::new(u);
    let [a, b, c] = forms.rewritten.map(|v| ScalarField::from_physical(u.lattice(), v));
    Ok(dealias_vector(&VelocityField::new([a?, b?, c?])?))
}

struct TransportForms {
    direct: [Vec<f64>; 3],
    rewritten: [Vec<f64>; 3],
    grad_max: f64,
}

impl TransportForms {
    fn new(u: &VelocityField) -> Self {
        let g: Vec<[Vec<f64>; 3]> = u
            .components()
            .iter()
            .map(|c| Axis::ALL.map(|a| derivative(c, a).physical().to_vec()))
            .collect();
        let v: Vec<&[f64]> = u.components().iter().map(|c| c.physical()).collect();
        let n = v[0].len();
        let mut direct: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        let mut rewritten: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        let mut grad_max = 0.0f64;
        for x in 0..n {
            let (u1, u2, u3) = (v[0][x], v[1][x], v[2][x]);
            let d = |i: usize, a: usize| g[i][a][x];
            for i in 0..3 {
                for a in 0..3 {
                    grad_max = grad_max.max(d(i, a).abs());
                }
                direct[i][x] = u1 * d(i, 0) + u2 * d(i, 1) + u3 * d(i, 2);
            }
            rewritten[0][x] = (u1 + u2) * d(0, 0) + u2 * (d(0, 1) + d(1, 1)) + u2 * d(2, 2) + u3 * d(0, 2);
            rewritten[1][x] = (u1 + u2) * d(1, 1) + u1 * (d(0, 0) + d(1, 0)) + u1 * d(2, 2) + u3 * d(1, 2);
            rewritten[2][x] = u1 * d(2, 0) + u2 * d(2, 1) - u3 * (d(0, 0) + d(1, 1));
        }
        Self {
            direct,
            rewritten,
            grad_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticI2Report {
    /// `∫_0^∞ ‖U·∇U‖_{Ḃ^{3/p−1}_{p,1}} dτ` along `U = e^{τΔ}u₀`.
    pub i2: f64,
    /// `‖u₀¹+u₀², u₀³‖ · ‖u₀¹, u₀²‖` in `Ḃ^{3/p−1}_{p,1}`.
    pub static_bound: f64,
    pub ratio: f64,
}

/// Integrate the `U·∇U` term along the free heat flow and compare it with
/// the product of the two anisotropic norms of the data.
pub fn i2_static_check(u0: &VelocityField, frame: Frame, p: f64) -> Result<StaticI2Report> {
    check_exponent("p", p)?;
    let lattice = u0.lattice();
    let partition = DyadicPartition::new(lattice);
    let idx = BesovIndex::new(3.0 / p - 1.0, p, 1.0)?;
    let norm = |u: &VelocityField| -> Result<f64> {
        let std = VelocityField::new(standard_components(u, frame))?;
        vector_besov_norm(&std, idx, &partition)
    };
    let integrand = |t: f64| -> Result<f64> {
        let big_u = heat_evolve_vector(u0, t)?;
        let comps: Vec<ScalarField> = (0..3)
            .map(|i| {
                let mut acc = ScalarField::zeros(lattice);
                for (j, axis) in Axis::ALL.iter().enumerate() {
                    acc = &acc + &product(big_u.component(j), &derivative(big_u.component(i), *axis))?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        norm(&VelocityField::new(comps.try_into().expect("three components"))?)
    };
    let kmin2 = (0..lattice.len())
        .filter(|&i| u0.components().iter().any(|c| c.spectral()[i].norm_sqr() > 0.0))
        .map(|i| {
            let k = lattice.wavevector_at(i);
            k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
        })
        .filter(|&q| q > 0.0)
        .fold(f64::INFINITY, f64::min);
    let i2 = if kmin2.is_infinite() {
        0.0
    } else {
        // trapezoid in ln t on a geometric grid, flat head on [0, t_min]
        let t_min = 1e-3 / kmin2;
        let ratio: f64 = 1.25;
        let ds = ratio.ln();
        let f0 = integrand(t_min)?;
        let mut total = t_min * f0;
        let mut prev = t_min * f0;
        let mut t = t_min;
        loop {
            t *= ratio;
            let cur = t * integrand(t)?;
            total += 0.5 * ds * (prev + cur);
            prev = cur;
            // the integrand decays at least like e^{−2 k²_min t}
            if t * kmin2 > 2.0 && cur < 1e-6 * total {
                break;
            }
            if t * kmin2 > 200.0 {
                break;
            }
        }
        total
    };
    let [s1, s2, s3] = standard_components(u0, frame);
    let sum12 = &s1 + &s2;
    let n = |f: &ScalarField| crate::littlewood_paley::besov_norm(f, idx, &partition);
    let static_bound = (n(&sum12)? + n(&s3)?) * (n(&s1)? + n(&s2)?);
    Ok(StaticI2Report {
        i2,
        static_bound,
        ratio: if static_bound > 0.0 { i2 / static_bound } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_divergence_free, RandomFieldConfig};
    use std::f64::consts::PI;

    fn shear(lat: &FrequencyLattice) -> VelocityField {
        VelocityField::new([
            ScalarField::from_fn(lat, |x| x[1].sin()),
            ScalarField::zeros(lat),
            ScalarField::zeros(lat),
        ])
        .unwrap()
    }

    #[test]
    fn shear_has_no_nonlinearity() {
        let lat = FrequencyLattice::cubic(16, 2.0 * PI).unwrap();
        let u = shear(&lat);
        assert!(nonlinear_rhs(&VelocityField::zeros(&lat), &u).unwrap().max_abs() < 1e-14);
        let z = VelocityField::zeros(&lat);
        assert_eq!(nonlinear_rhs(&z, &z).unwrap().max_abs(), 0.0);
        let r = transport_rewrite_residual(&u);
        assert!(r.absolute < 1e-14);
    }

    #[test]
    fn rewrite_negative_control() {
        let lat = FrequencyLattice::cubic(16, 2.0 * PI).unwrap();
        let w = VelocityField::new([
            ScalarField::from_fn(&lat, |x| x[0].sin()),
            ScalarField::zeros(&lat),
            ScalarField::zeros(&lat),
        ])
        .unwrap();
        let r = transport_rewrite_residual(&w);
        assert!((r.absolute - 0.5).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn fast_rhs_matches_termwise_rhs() {
        let lat = FrequencyLattice::cubic(16, 2.0 * PI).unwrap();
        let part = DyadicPartition::new(&lat);
        let big_u = dealias_vector(&random_divergence_free(&part, 5, &RandomFieldConfig::default()));
        let v = dealias_vector(&random_divergence_free(&part, 6, &RandomFieldConfig::default()));
        let slow = nonlinear_rhs(&v, &big_u).unwrap();
        let mut st = Stepper::new(&lat);
        let cube = st.cube.clone();
        let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![ZERO; cube.len()]);
        st.rhs(&gather(&cube, &big_u), &gather(&cube, &v), &mut out);
        let fast = scatter(&lat, &cube, &out).unwrap();
        let scale = slow.max_abs();
        assert!(fast.max_abs_diff(&slow).unwrap() <= 1e-12 * scale, "{}", fast.max_abs_diff(&slow).unwrap());
        assert!(divergence(&fast).max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn config_validation() {
        let cfg = SolveConfig {
            dt: 0.3,
            t_end: 1.0,
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!(SolveConfig::default().validate().unwrap(), 1000);
    }

    #[test]
    fn shear_run_keeps_v_zero() {
        let lat = FrequencyLattice::cubic(16, 2.0 * PI).unwrap();
        let cfg = SolveConfig {
            dt: 0.01,
            t_end: 0.5,
            output_every: 5,
            ..SolveConfig::default()
        };
        let out = solve(&shear(&lat), &cfg).unwrap();
        assert_eq!(out.trace.status, SolveStatus::Completed);
        assert!(out.trace.max_monitor() <= 1e-10);
        assert!(out.v.max_abs() <= 1e-10);
        let z = solve(&VelocityField::zeros(&lat), &cfg).unwrap();
        assert!(z.trace.energy.iter().all(|&e| e == 0.0));
    }

    fn random_field(n: usize, seed: u64, amplitude: f64) -> VelocityField {
        let lat = FrequencyLattice::cubic(n, 2.0 * PI).unwrap();
        let part = DyadicPartition::new(&lat);
        let cfg = RandomFieldConfig {
            blocks: Some((part.j_min(), 1)),
            ..RandomFieldConfig::default()
        };
        let u = random_divergence_free(&part, seed, &cfg);
        u.scaled(amplitude / u.max_abs())
    }

    #[test]
    fn rhs_matches_rewritten_transport() {
        let u = dealias_vector(&random_field(16, 11, 1.0));
        let rhs = nonlinear_rhs(&VelocityField::zeros(u.lattice()), &u).unwrap();
        let alt = leray_project(&transport_rewritten(&u).unwrap()).scaled(-1.0);
        assert!(rhs.max_abs_diff(&alt).unwrap() <= 1e-9 * rhs.max_abs());
    }

    #[test]
    fn energy_decays_and_divergence_stays_small() {
        let u = random_field(16, 4, 1.0);
        let cfg = SolveConfig {
            dt: 0.01,
            t_end: 0.5,
            output_every: 5,
            eta: 10.0,
            ..SolveConfig::default()
        };
        let out = solve(&u, &cfg).unwrap();
        assert_eq!(out.trace.status, SolveStatus::Completed, "{:?}", out.trace.monitor_inf);
        for w in out.trace.energy.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-3));
        }
        assert!(out.trace.div_residual.iter().all(|&d| d <= 1e-9));
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let u = random_field(16, 8, 1.0);
        let monitor_at_end = |dt: f64| {
            let cfg = SolveConfig {
                dt,
                t_end: 0.4,
                output_every: 1000,
                eta: 10.0,
                ..SolveConfig::default()
            };
            *solve(&u, &cfg).unwrap().trace.monitor_inf.last().unwrap()
        };
        let m: Vec<f64> = [0.04, 0.02, 0.01, 0.005].map(monitor_at_end).to_vec();
        let e1 = (m[0] - m[1]).abs();
        let e2 = (m[1] - m[2]).abs();
        let e3 = (m[2] - m[3]).abs();
        let order = ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0;
        assert!(order >= 3.5, "{m:?} {order}");
    }

    #[test]
    fn shear_balance_is_degenerate() {
        let lat = FrequencyLattice::cubic(16, 2.0 * PI).unwrap();
        let cfg = SolveConfig {
            dt: 0.01,
            t_end: 0.1,
            output_every: 5,
            balance: true,
            ..SolveConfig::default()
        };
        let trace = solve(&shear(&lat), &cfg).unwrap().trace;
        let report = apriori_balance(&trace).unwrap();
        assert!(report.rows.iter().all(|r| r.degenerate));
        let bare = SolveConfig { balance: false, ..cfg };
        assert!(apriori_balance(&solve(&shear(&lat), &bare).unwrap().trace).is_err());
    }
}
