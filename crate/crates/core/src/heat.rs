//! Heat semigroup, caloric norms, Chemin–Lerner space-time norms and the
//! forced heat equation solved by exact per-mode Duhamel.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::lattice::FrequencyLattice;
use crate::littlewood_paley::{ell_r, BesovIndex, DyadicPartition, ANNULUS_OUTER};
use crate::paraproduct::InequalityReport;
use crate::spectral::lp_norm;

/// `e^{tΔ} f`, i.e. multiplication of each coefficient by `e^{−|k|²t}`.
pub fn heat_evolve(f: &ScalarField, t: f64) -> Result<ScalarField> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_real_multiplier(|k| (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * t).exp()))
}

pub fn heat_evolve_vector(u: &VelocityField, t: f64) -> Result<VelocityField> {
    check_time(t)?;
    Ok(u.map(|c| heat_evolve(c, t).expect("time checked")))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Constraint(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// Summability index of a caloric norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaloricIndex {
    One,
    Two,
    Infinity,
}

impl CaloricIndex {
    pub fn r(self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Two => 2.0,
            Self::Infinity => f64::INFINITY,
        }
    }
}

/// Geometric time grid `t_m = t_min ρ^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub ratio: f64,
    /// Stop once the tail bound drops below this fraction of the running value.
    pub stop_fraction: f64,
    /// Reject the result if the final tail bound exceeds this fraction.
    pub fail_fraction: f64,
    pub max_steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            ratio: 1.1,
            stop_fraction: 1e-3,
            fail_fraction: 1e-2,
            max_steps: 4000,
        }
    }
}

/// Evaluates `h(t) = Σ_i ‖e^{tΔ} f_i‖_{L^∞}` and the cheap upper bound
/// `B(t) = Σ_i Σ_k |c_k| e^{−|k|²t}`.
struct HeatProbe<'a> {
    lattice: FrequencyLattice,
    fields: Vec<&'a ScalarField>,
    k2: Vec<f64>,
    k2_min: f64,
    buf: Vec<Complex64>,
}

impl<'a> HeatProbe<'a> {
    fn new(fields: Vec<&'a ScalarField>) -> Result<Self> {
        let lattice = fields[0].lattice().clone();
        for f in &fields {
            lattice_check(&lattice, f)?;
            let scale = f.max_abs();
            if f.mean().abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotMeanZero(f.mean()));
            }
        }
        let k2: Vec<f64> = (0..lattice.len())
            .map(|i| {
                let k = lattice.wavevector_at(i);
                k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
            })
            .collect();
        let k2_min = fields
            .iter()
            .flat_map(|f| f.spectral().iter().zip(&k2).filter(|(c, &q)| q > 0.0 && c.norm_sqr() > 0.0))
            .map(|(_, &q)| q)
            .fold(f64::INFINITY, f64::min);
        let n = lattice.len();
        Ok(Self {
            lattice,
            fields,
            k2,
            k2_min,
            buf: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    fn is_zero(&self) -> bool {
        self.k2_min.is_infinite()
    }

    fn sup(&mut self, t: f64) -> f64 {
        let mut total = 0.0;
        for f in &self.fields {
            for ((b, &c), &q) in self.buf.iter_mut().zip(f.spectral()).zip(&self.k2) {
                *b = if q == 0.0 { Complex64::new(0.0, 0.0) } else { c * (-q * t).exp() };
            }
            self.lattice.inverse(&mut self.buf);
            total += self.buf.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
        }
        total
    }

    fn bound(&self, t: f64) -> f64 {
        self.fields
            .iter()
            .map(|f| {
                f.spectral()
                    .iter()
                    .zip(&self.k2)
                    .filter(|(_, &q)| q > 0.0)
                    .map(|(c, &q)| c.norm() * (-q * t).exp())
                    .sum::<f64>()
            })
            .sum()
    }
}

fn lattice_check(lattice: &FrequencyLattice, f: &ScalarField) -> Result<()> {
    if f.lattice() != lattice {
        return Err(Error::LatticeMismatch("fields on different lattices".into()));
    }
    Ok(())
}

fn start_time(partition: &DyadicPartition) -> f64 {
    let k = ANNULUS_OUTER * 2f64.powi(partition.j_max());
    1.0 / (10.0 * k * k)
}

/// `sup_t t^{1/2} h(t)`: grid search, then one parabolic refinement in `ln t`.
fn caloric_sup(probe: &mut HeatProbe, t_min: f64, grid: &TimeGrid) -> Result<f64> {
    let t_peak = 1.0 / (2.0 * probe.k2_min);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut best = 0.0f64;
    let mut t = t_min;
    for _ in 0..grid.max_steps {
        let v = t.sqrt() * probe.sup(t);
        samples.push((t, v));
        best = best.max(v);
        if t >= t_peak && t.sqrt() * probe.bound(t) <= best {
            let m = samples
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(i, _)| i)
                .expect("nonempty");
            if m > 0 && m + 1 < samples.len() {
                let s = |i: usize| samples[i].0.ln();
                let y = |i: usize| samples[i].1.ln();
                let (s0, s1, s2) = (s(m - 1), s(m), s(m + 1));
                let (y0, y1, y2) = (y(m - 1), y(m), y(m + 1));
                let denom = (s0 - s1) * (s0 - s2) * (s1 - s2);
                let a = (s2 * (y1 - y0) + s1 * (y0 - y2) + s0 * (y2 - y1)) / denom;
                let b = (s2 * s2 * (y0 - y1) + s1 * s1 * (y2 - y0) + s0 * s0 * (y1 - y2)) / denom;
                if a < 0.0 {
                    let sv = (-b / (2.0 * a)).clamp(s0, s2);
                    let tv = sv.exp();
                    best = best.max(tv.sqrt() * probe.sup(tv));
                }
            }
            return Ok(best);
        }
        t *= grid.ratio;
    }
    Err(Error::QuadratureNonConvergence {
        tail: t.sqrt() * probe.bound(t),
        total: best,
    })
}

/// `∫_0^∞ w(t) h(t)^power dt` with trapezoid in `ln t` on the geometric grid.
fn caloric_integral(
    probe: &mut HeatProbe,
    t_min: f64,
    grid: &TimeGrid,
    power: i32,
    weight_exp: f64,
) -> Result<f64> {
    let h0 = probe.sup(0.0);
    let mut h_prev = probe.sup(t_min);
    // [0, t_min]: h is flat to within e^{−|k|²t_min} ≈ 1 there
    let head_weight = t_min.powf(weight_exp + 1.0) / (weight_exp + 1.0);
    let mut total = head_weight * 0.5 * (h0.powi(power) + h_prev.powi(power));
    let integrand = |t: f64, h: f64| t.powf(weight_exp + 1.0) * h.powi(power);
    let mut f_prev = integrand(t_min, h_prev);
    let ds = grid.ratio.ln();
    let mut t = t_min;
    let mut tail = f64::INFINITY;
    for _ in 0..grid.max_steps {
        t *= grid.ratio;
        h_prev = probe.sup(t);
        let f = integrand(t, h_prev);
        total += 0.5 * ds * (f_prev + f);
        f_prev = f;
        // beyond t every mode decays at least like e^{−k²_min (τ − t)}
        let b = probe.bound(t);
        tail = t.powf(weight_exp) * b.powi(power) / (power as f64 * probe.k2_min);
        if tail < grid.stop_fraction * total {
            return Ok(total);
        }
    }
    if tail > grid.fail_fraction * total {
        return Err(Error::QuadratureNonConvergence { tail, total });
    }
    Ok(total)
}

/// Caloric `Ḃ^{−1}_{∞,r}` norm of a mean-zero field.
///
/// `r = ∞`: `sup_t t^{1/2}‖e^{tΔ}f‖_∞`; `r = 2`: `(∫_0^∞ ‖e^{tΔ}f‖²_∞ dt)^{1/2}`;
/// `r = 1`: the dyadic proxy `Σ_j 2^{−j}‖Δ̇_j f‖_∞` (see [`caloric_one_quadrature`]
/// for the time-integral cross-check).
pub fn caloric_norm(f: &ScalarField, r: CaloricIndex, partition: &DyadicPartition) -> Result<f64> {
    caloric_norm_with(&[f], r, partition, &TimeGrid::default())
}

/// Vector version: the time function is `Σ_i ‖e^{tΔ}u^i‖_∞`.
pub fn caloric_norm_vector(u: &VelocityField, r: CaloricIndex, partition: &DyadicPartition) -> Result<f64> {
    let comps: Vec<&ScalarField> = u.components().iter().collect();
    caloric_norm_with(&comps, r, partition, &TimeGrid::default())
}

pub fn caloric_norm_with(
    fields: &[&ScalarField],
    r: CaloricIndex,
    partition: &DyadicPartition,
    grid: &TimeGrid,
) -> Result<f64> {
    let nonzero: Vec<&ScalarField> = fields.iter().copied().filter(|f| !f.is_zero()).collect();
    if nonzero.is_empty() {
        return Ok(0.0);
    }
    let mut probe = HeatProbe::new(nonzero)?;
    if probe.is_zero() {
        return Ok(0.0);
    }
    let t_min = start_time(partition);
    match r {
        CaloricIndex::Infinity => caloric_sup(&mut probe, t_min, grid),
        CaloricIndex::Two => Ok(caloric_integral(&mut probe, t_min, grid, 2, 0.0)?.sqrt()),
        CaloricIndex::One => {
            let idx = BesovIndex::new(-1.0, f64::INFINITY, 1.0)?;
            Ok(probe
                .fields
                .iter()
                .map(|f| crate::littlewood_paley::besov_norm(f, idx, partition))
                .sum::<Result<f64>>()?)
        }
    }
}

/// `∫_0^∞ t^{−1/2}‖e^{tΔ}f‖_∞ dt`, the time-integral form of the `r = 1` norm.
pub fn caloric_one_quadrature(fields: &[&ScalarField], partition: &DyadicPartition, grid: &TimeGrid) -> Result<f64> {
    let nonzero: Vec<&ScalarField> = fields.iter().copied().filter(|f| !f.is_zero()).collect();
    if nonzero.is_empty() {
        return Ok(0.0);
    }
    let mut probe = HeatProbe::new(nonzero)?;
    if probe.is_zero() {
        return Ok(0.0);
    }
    caloric_integral(&mut probe, start_time(partition), grid, 1, -0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceEntry {
    pub r: f64,
    pub dyadic: f64,
    pub caloric: f64,
    /// `caloric / dyadic`, 1 when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub entries: Vec<EquivalenceEntry>,
    /// Every ratio lies in `[1/10, 10]`.
    pub within_bounds: bool,
}

pub const EQUIVALENCE_BRACKET: (f64, f64) = (0.1, 10.0);

/// Dyadic versus caloric `Ḃ^{−1}_{∞,r}` for `r ∈ {2, ∞}`.
pub fn equivalence_check(f: &ScalarField, partition: &DyadicPartition) -> Result<EquivalenceReport> {
    let mut entries = Vec::new();
    for r in [CaloricIndex::Two, CaloricIndex::Infinity] {
        let dyadic = crate::littlewood_paley::besov_norm(f, BesovIndex::new(-1.0, f64::INFINITY, r.r())?, partition)?;
        let caloric = caloric_norm(f, r, partition)?;
        let ratio = match (dyadic > 0.0, caloric > 0.0) {
            (false, false) => 1.0,
            (true, _) => caloric / dyadic,
            (false, true) => f64::INFINITY,
        };
        entries.push(EquivalenceEntry {
            r: r.r(),
            dyadic,
            caloric,
            ratio,
        });
    }
    let within_bounds = entries
        .iter()
        .all(|e| e.ratio >= EQUIVALENCE_BRACKET.0 && e.ratio <= EQUIVALENCE_BRACKET.1);
    Ok(EquivalenceReport { entries, within_bounds })
}

/// A snapshot type usable in a [`Trajectory`].
pub trait Snapshot: Clone {
    fn scalar_components(&self) -> Vec<&ScalarField>;
    fn lattice(&self) -> &FrequencyLattice;
}

impl Snapshot for ScalarField {
    fn scalar_components(&self) -> Vec<&ScalarField> {
        vec![self]
    }
    fn lattice(&self) -> &FrequencyLattice {
        ScalarField::lattice(self)
    }
}

impl Snapshot for VelocityField {
    fn scalar_components(&self) -> Vec<&ScalarField> {
        self.components().iter().collect()
    }
    fn lattice(&self) -> &FrequencyLattice {
        VelocityField::lattice(self)
    }
}

/// Fields sampled on an increasing time grid starting at 0.
#[derive(Debug, Clone)]
pub struct Trajectory<S: Snapshot> {
    times: Vec<f64>,
    snapshots: Vec<S>,
}

impl<S: Snapshot> Trajectory<S> {
    pub fn new(times: Vec<f64>, snapshots: Vec<S>) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::InsufficientData(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Constraint("trajectory must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Constraint("times must be strictly increasing".into()));
        }
        let lat = snapshots[0].lattice();
        if snapshots.iter().any(|s| s.lattice() != lat) {
            return Err(Error::LatticeMismatch("snapshots on different lattices".into()));
        }
        Ok(Self { times, snapshots })
    }

    /// Snapshots `f(t_m)` of a closure on a uniform grid of `steps` intervals.
    pub fn sample(t_end: f64, steps: usize, f: impl Fn(f64) -> S) -> Result<Self> {
        if steps == 0 || !(t_end > 0.0) {
            return Err(Error::Constraint("need t_end > 0 and at least one step".into()));
        }
        let times: Vec<f64> = (0..=steps).map(|m| t_end * m as f64 / steps as f64).collect();
        let snaps = times.iter().map(|&t| f(t)).collect();
        Self::new(times, snaps)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[S] {
        &self.snapshots
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        self.snapshots[0].lattice()
    }

    /// CSV with columns `t, linf, l2` (sums over components).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,linf,l2\n");
        for (t, s) in self.times.iter().zip(&self.snapshots) {
            let comps = s.scalar_components();
            let linf: f64 = comps.iter().map(|c| c.max_abs()).sum();
            let l2: f64 = comps.iter().map(|c| lp_norm(c, 2.0).expect("valid exponent")).sum();
            let _ = writeln!(out, "{t:.17e},{linf:.17e},{l2:.17e}");
        }
        out
    }
}

/// Trapezoid rule on the trajectory's time grid.
fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `‖u‖_{L̃^q_T(Ḃ^s_{p,r})} = ‖(2^{js} ‖Δ̇_j u‖_{L^q_T L^p})_j‖_{ℓ^r}`, summed over components.
pub fn chemin_lerner_norm<S: Snapshot>(
    traj: &Trajectory<S>,
    q: f64,
    idx: BesovIndex,
    partition: &DyadicPartition,
) -> Result<f64> {
    check_exponent("q", q)?;
    if traj.lattice() != partition.lattice() {
        return Err(Error::LatticeMismatch("partition built on another lattice".into()));
    }
    let ncomp = traj.snapshots[0].scalar_components().len();
    let mut total = 0.0;
    for c in 0..ncomp {
        let terms = partition.range().map(|j| {
            let norms: Vec<f64> = traj
                .snapshots
                .iter()
                .map(|s| partition.block_norm(s.scalar_components()[c], j, idx.p))
                .collect();
            let time_norm = if q.is_infinite() {
                norms.iter().copied().fold(0.0, f64::max)
            } else if traj.times.len() == 1 {
                0.0
            } else {
                let powered: Vec<f64> = norms.iter().map(|n| n.powf(q)).collect();
                trapezoid(&traj.times, &powered).powf(1.0 / q)
            };
            2f64.powf(j as f64 * idx.s) * time_norm
        });
        total += ell_r(terms, idx.r);
    }
    Ok(total)
}

/// Solution of `∂_t u − Δu = G`, `u(0) = u₀`, at the trajectory times of `G`.
///
/// Each mode is integrated exactly with `G` linear in time between snapshots.
pub fn forced_heat(u0: &ScalarField, g: &Trajectory<ScalarField>) -> Result<Trajectory<ScalarField>> {
    u0.check_same_lattice(&g.snapshots[0])?;
    let lattice = u0.lattice();
    let k2: Vec<f64> = (0..lattice.len())
        .map(|i| {
            let k = lattice.wavevector_at(i);
            k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
        })
        .collect();
    let mut current: Vec<Complex64> = u0.spectral().to_vec();
    let mut snaps = vec![u0.clone()];
    for m in 1..g.times.len() {
        let h = g.times[m] - g.times[m - 1];
        let ga = g.snapshots[m - 1].spectral();
        let gb = g.snapshots[m].spectral();
        for i in 0..current.len() {
            let (phi0, phi1, phi2) = duhamel_weights(k2[i], h);
            current[i] = current[i] * phi0 + ga[i] * phi1 + (gb[i] - ga[i]) * phi2;
        }
        snaps.push(ScalarField::from_spectral(lattice, current.clone())?);
    }
    Trajectory::new(g.times.clone(), snaps)
}

/// `(e^{−λh}, ∫_0^h e^{−λ(h−τ)}dτ, ∫_0^h e^{−λ(h−τ)} τ/h dτ)`.
fn duhamel_weights(lambda: f64, h: f64) -> (f64, f64, f64) {
    let x = lambda * h;
    if x == 0.0 {
        return (1.0, h, 0.5 * h);
    }
    let em1 = (-x).exp_m1();
    let phi1 = -em1 / lambda;
    let phi2 = if x < 1e-4 {
        // (x + e^{−x} − 1)/x² = 1/2 − x/6 + x²/24 − …
        h * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0)
    } else {
        (x + em1) / (lambda * x)
    };
    (1.0 + em1, phi1, phi2)
}

/// Indices of the maximal-regularity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub q1: f64,
    pub q2: f64,
}

/// `‖u‖_{L̃^{q₂}_T(Ḃ^{s+2/q₂}_{p,r})}` against
/// `‖u₀‖_{Ḃ^s_{p,r}} + ‖G‖_{L̃^{q₁}_T(Ḃ^{s+2/q₁−2}_{p,r})}`.
pub fn verify_heat_smoothing(
    u0: &ScalarField,
    g: &Trajectory<ScalarField>,
    params: SmoothingParams,
    partition: &DyadicPartition,
) -> Result<InequalityReport> {
    check_exponent("q1", params.q1)?;
    check_exponent("q2", params.q2)?;
    if params.q1 > params.q2 {
        return Err(Error::Constraint(format!(
            "need q1 <= q2, got {} > {}",
            params.q1, params.q2
        )));
    }
    let inv = |q: f64| if q.is_infinite() { 0.0 } else { 1.0 / q };
    let u = forced_heat(u0, g)?;
    let lhs = chemin_lerner_norm(
        &u,
        params.q2,
        BesovIndex::new(params.s + 2.0 * inv(params.q2), params.p, params.r)?,
        partition,
    )?;
    let rhs = crate::littlewood_paley::besov_norm(u0, BesovIndex::new(params.s, params.p, params.r)?, partition)?
        + chemin_lerner_norm(
            g,
            params.q1,
            BesovIndex::new(params.s + 2.0 * inv(params.q1) - 2.0, params.p, params.r)?,
            partition,
        )?;
    Ok(InequalityReport::new(
        "heat_smoothing".into(),
        0,
        lhs,
        rhs,
        vec![
            ("s".into(), params.s),
            ("p".into(), params.p),
            ("r".into(), params.r),
            ("q1".into(), params.q1),
            ("q2".into(), params.q2),
            ("T".into(), g.horizon()),
        ],
    ))
}
