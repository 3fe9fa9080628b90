//! The smallness functional on initial data, the two example families of
//! large data, lattice-exact rescaling and log-log scaling fits.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::heat::{caloric_norm_vector, CaloricIndex};
use crate::lattice::{Axis, FrequencyLattice};
use crate::littlewood_paley::{smooth_step, vector_besov_norm, BesovIndex, DyadicPartition, DyadicSpectrum};
use crate::spectral::{derivative, require_divergence_free};

/// Orientation of the lattice axes relative to the standard `x₁, x₂, x₃` axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Standard,
    /// Axes `y₁ = (x₁ − x₂)/√2`, `y₂ = (x₁ + x₂)/√2`, `y₃ = x₃`.
    Diagonal,
}

/// Components along the standard axes of a field stored in `frame`.
pub fn standard_components(u: &VelocityField, frame: Frame) -> [ScalarField; 3] {
    match frame {
        Frame::Standard => u.components().clone(),
        Frame::Diagonal => {
            let [a, b, c] = u.components();
            let s = 1.0 / SQRT_2;
            [
                a.combine(s, b, s).expect("shared lattice"),
                a.combine(-s, b, s).expect("shared lattice"),
                c.clone(),
            ]
        }
    }
}

pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CriterionInput {
    pub u0: VelocityField,
    pub frame: Frame,
    pub p: f64,
    pub c_const: f64,
    pub delta: f64,
}

impl CriterionInput {
    /// Standard frame, `C = 1`, `δ = 1`.
    pub fn new(u0: VelocityField, p: f64) -> Result<Self> {
        let input = Self {
            u0,
            frame: Frame::Standard,
            p,
            c_const: 1.0,
            delta: 1.0,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn with_constants(mut self, c_const: f64, delta: f64) -> Result<Self> {
        self.c_const = c_const;
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        if !(self.c_const > 0.0) || !self.c_const.is_finite() {
            return Err(Error::Constraint(format!("C must be positive, got {}", self.c_const)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Constraint(format!("delta must be positive, got {}", self.delta)));
        }
        require_divergence_free(&self.u0, DIVERGENCE_TOLERANCE)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 3.0 && p < 6.0) {
        return Err(Error::InvalidExponent {
            name: "p",
            value: p,
            constraint: "must lie in (3, 6)",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionOptions {
    /// Also evaluate the caloric form of the largeness norm.
    pub caloric_largeness: bool,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self {
            caloric_largeness: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub p: f64,
    pub c_const: f64,
    pub delta: f64,
    /// `‖u¹+u², u³‖_{Ḃ^{−1+3/p}_{p,1}}`
    pub norm_sum_comp: f64,
    /// `‖u¹, u²‖_{Ḃ^{−1+3/p}_{p,1}}`
    pub norm_first_two: f64,
    /// Caloric `Ḃ^{−1}_{∞,2}`, by time quadrature.
    pub caloric_2: f64,
    /// `Ḃ^{−1}_{∞,1}`, dyadic.
    pub caloric_1: f64,
    /// `exp(C (caloric_2² + caloric_1))`
    pub exp_factor: f64,
    pub lhs: f64,
    /// Dyadic `Ḃ^{−1}_{∞,∞}`.
    pub largeness: f64,
    /// Caloric `sup_t t^{1/2}‖e^{tΔ}u₀‖_∞`, when requested.
    pub largeness_caloric: Option<f64>,
    /// `lhs ≤ δ`. `C` and `δ` are free parameters here, so this certifies nothing.
    pub below_delta: bool,
    pub truncation_warning: Option<String>,
}

/// `nsc · nft · exp(C (cal2² + cal1))`, zero whenever a norm factor is.
pub fn assemble_lhs(norm_sum_comp: f64, norm_first_two: f64, caloric_2: f64, caloric_1: f64, c_const: f64) -> f64 {
    let product = norm_sum_comp * norm_first_two;
    if product == 0.0 {
        return 0.0;
    }
    product * (c_const * (caloric_2 * caloric_2 + caloric_1)).exp()
}

pub fn criterion_lhs(input: &CriterionInput) -> Result<CriterionReport> {
    criterion_lhs_with(input, &CriterionOptions::default())
}

pub fn criterion_lhs_with(input: &CriterionInput, opts: &CriterionOptions) -> Result<CriterionReport> {
    input.validate()?;
    let lattice = input.u0.lattice();
    let partition = DyadicPartition::new(lattice);
    let [u1, u2, u3] = standard_components(&input.u0, input.frame);
    let s = -1.0 + 3.0 / input.p;
    let spectra = |f: &ScalarField, p: f64| DyadicSpectrum::compute(f, p, &partition);

    let sum12 = &u1 + &u2;
    let sp_sum = spectra(&sum12, input.p)?;
    let sp = [spectra(&u1, input.p)?, spectra(&u2, input.p)?, spectra(&u3, input.p)?];
    let norm_sum_comp = sp_sum.besov(s, 1.0) + sp[2].besov(s, 1.0);
    let norm_first_two = sp[0].besov(s, 1.0) + sp[1].besov(s, 1.0);

    let standard = VelocityField::new([u1, u2, u3])?;
    let caloric_2 = caloric_norm_vector(&standard, CaloricIndex::Two, &partition)?;
    let caloric_1 = vector_besov_norm(&standard, BesovIndex::new(-1.0, f64::INFINITY, 1.0)?, &partition)?;
    let largeness = vector_besov_norm(
        &standard,
        BesovIndex::new(-1.0, f64::INFINITY, f64::INFINITY)?,
        &partition,
    )?;
    let largeness_caloric = if opts.caloric_largeness {
        Some(caloric_norm_vector(&standard, CaloricIndex::Infinity, &partition)?)
    } else {
        None
    };
    let lhs = assemble_lhs(norm_sum_comp, norm_first_two, caloric_2, caloric_1, input.c_const);
    let truncation_warning = sp
        .iter()
        .chain(std::iter::once(&sp_sum))
        .find_map(|s| s.truncation_warning());
    Ok(CriterionReport {
        p: input.p,
        c_const: input.c_const,
        delta: input.delta,
        norm_sum_comp,
        norm_first_two,
        caloric_2,
        caloric_1,
        exp_factor: (input.c_const * (caloric_2 * caloric_2 + caloric_1)).exp(),
        lhs,
        largeness,
        largeness_caloric,
        below_delta: lhs <= input.delta,
        truncation_warning,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Constraint(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Parameters of the first example family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example1Params {
    pub eps: f64,
    pub alpha: f64,
    pub p: f64,
    /// Width of the Gaussian profile in the scaled variables.
    pub sigma: f64,
}

/// Default profile width; the lattice periods below are `8π` in the scaled variables.
pub const EXAMPLE1_SIGMA: f64 = 2.0;
const EXAMPLE1_PERIOD: f64 = 8.0 * PI;
const PROFILE_TAIL: f64 = 1e-12;

impl Example1Params {
    pub fn new(eps: f64, alpha: f64, p: f64) -> Result<Self> {
        let params = Self {
            eps,
            alpha,
            p,
            sigma: EXAMPLE1_SIGMA,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.p >= 5.0 && self.p < 6.0) {
            return Err(Error::InvalidExponent {
                name: "p",
                value: self.p,
                constraint: "must lie in [5, 6)",
            });
        }
        let lo = 6.0 / (self.p + 2.0);
        if !(self.alpha > lo && self.alpha < 1.0) {
            return Err(Error::Constraint(format!(
                "alpha = {} must lie in (6/(p+2), 1) = ({lo}, 1)",
                self.alpha
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Constraint(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    fn amplitude(&self) -> f64 {
        (1.0 / self.eps).ln().powf(0.2) / self.eps
    }
}

/// Lattice for the first example: periods `(8π, 8π ε^α, 8π)`, 32 points
/// across, and `n₁ ≥ 256` large enough to hold the carrier `1/ε` plus the
/// profile's spectral width.
pub fn example1_lattice(params: &Example1Params) -> Result<FrequencyLattice> {
    params.validate()?;
    let carrier = EXAMPLE1_PERIOD / (2.0 * PI * params.eps);
    let width = profile_halfwidth(params.sigma, EXAMPLE1_PERIOD);
    let need = 2.0 * (carrier + width) + 2.0;
    let n1 = (need.ceil() as usize).next_power_of_two().max(256);
    FrequencyLattice::new(
        [n1, 32, 32],
        [EXAMPLE1_PERIOD, EXAMPLE1_PERIOD * params.eps.powf(params.alpha), EXAMPLE1_PERIOD],
    )
}

/// Mode index beyond which a Gaussian of width `sigma` on period `period`
/// has coefficients below `PROFILE_TAIL` of its peak.
fn profile_halfwidth(sigma: f64, period: f64) -> f64 {
    let kappa = (2.0 * (1.0 / PROFILE_TAIL).ln()).sqrt() / sigma;
    kappa * period / (2.0 * PI)
}

/// `u = (log 1/ε)^{1/5} ε^{−1} cos(x₁/ε) (0, −ε^α ∂₃φ, ∂₂φ)(x₁, x₂/ε^α, x₃)`
/// with `φ` the periodised Gaussian of width σ in the scaled variables.
///
/// Built as `u = (0, −∂₃Ψ, ∂₂Ψ)` with
/// `Ψ = (log 1/ε)^{1/5} ε^{α−1} cos(x₁/ε) φ(x₁, x₂/ε^α, x₃)`, which is
/// divergence-free mode by mode.
pub fn example1_data(params: &Example1Params, lattice: &FrequencyLattice) -> Result<VelocityField> {
    params.validate()?;
    let scale = params.eps.powf(params.alpha);
    // periods of φ in its own variables
    let periods = [
        lattice.length(Axis::X1),
        lattice.length(Axis::X2) / scale,
        lattice.length(Axis::X3),
    ];
    let carrier = lattice.length(Axis::X1) / (2.0 * PI * params.eps);
    let m_c = carrier.round();
    if (carrier - m_c).abs() > 1e-9 * carrier.max(1.0) {
        return Err(Error::Constraint(format!(
            "1/eps = {} is not a lattice wavenumber along x1 (mode {carrier})",
            1.0 / params.eps
        )));
    }
    let m_c = m_c as i64;
    let shape = lattice.shape();
    let reach = [
        shape[0] as f64 / 2.0 - 1.0 - m_c as f64,
        shape[1] as f64 / 2.0 - 1.0,
        shape[2] as f64 / 2.0 - 1.0,
    ];
    for a in 0..3 {
        let tail = (-0.5 * (params.sigma * 2.0 * PI * reach[a] / periods[a]).powi(2)).exp();
        if reach[a] <= 0.0 || tail > PROFILE_TAIL {
            return Err(Error::Resolution(format!(
                "axis {} cannot hold the profile: coefficient tail {tail:e} at the edge",
                a + 1
            )));
        }
    }
    let volume: f64 = periods.iter().product();
    let norm = (2.0 * PI * params.sigma * params.sigma).powf(1.5) / volume;
    let gauss = |m: [i64; 3]| {
        let k2: f64 = (0..3)
            .map(|a| (2.0 * PI * m[a] as f64 / periods[a]).powi(2))
            .sum();
        norm * (-0.5 * params.sigma * params.sigma * k2).exp()
    };
    let amp = params.amplitude() * scale;
    let psi: Vec<Complex64> = (0..lattice.len())
        .map(|i| {
            let m = lattice.mode_at(i);
            let lo = gauss([m[0] - m_c, m[1], m[2]]);
            let hi = gauss([m[0] + m_c, m[1], m[2]]);
            Complex64::new(0.5 * amp * (lo + hi), 0.0)
        })
        .collect();
    let psi = ScalarField::from_spectral(lattice, psi)?;
    VelocityField::new([
        ScalarField::zeros(lattice),
        derivative(&psi, Axis::X3).scaled(-1.0),
        derivative(&psi, Axis::X2),
    ])
}

/// Lattice for the second example, in the [`Frame::Diagonal`] frame:
/// slab-normal spacing `ε/8` over 16 points, spacing `1/64` over 256
/// points along the slab and along `x₃`.
pub fn example2_lattice(eps: f64) -> Result<FrequencyLattice> {
    check_eps(eps)?;
    FrequencyLattice::new([16, 256, 256], [16.0 * PI / eps, 128.0 * PI, 128.0 * PI])
}

fn rise(x: f64, a: f64, b: f64) -> f64 {
    smooth_step((x - a) / (b - a))
}

/// Symbol of `χ̂` in the rotated frequency variables `η = (ξ₁−ξ₂)/√2`,
/// `ζ = (ξ₁+ξ₂)/√2`.
fn chi_hat(eps: f64, eta: f64, zeta: f64) -> f64 {
    let slab = 1.0 - rise(SQRT_2 * eta.abs(), 0.5 * eps, eps);
    let r2 = eta * eta + zeta * zeta;
    slab * rise(r2, 8.0 / 9.0, 17.0 / 18.0) * (1.0 - rise(r2, 17.0 / 16.0, 9.0 / 8.0))
}

fn phi_hat(xi3: f64) -> f64 {
    let x = xi3.abs();
    rise(x, 2.0 * SQRT_2 / 3.0, 34f64.sqrt() / 6.0) * (1.0 - rise(x, 17f64.sqrt() / 4.0, 3.0 * SQRT_2 / 4.0))
}

/// `â₀(ξ) = ε^{−1}(log log 1/ε)^{1/2} χ̂(ξ₁,ξ₂) φ̂(ξ₃)` at a rotated-frame wavevector.
pub fn example2_symbol(eps: f64, k: [f64; 3]) -> f64 {
    let amp = (1.0 / eps).ln().ln().sqrt() / eps;
    amp * chi_hat(eps, k[0], k[1]) * phi_hat(k[2])
}

fn check_example2(eps: f64, lattice: &FrequencyLattice) -> Result<()> {
    check_eps(eps)?;
    if eps >= (-1.0f64).exp() {
        return Err(Error::Constraint(format!("eps = {eps} must be below 1/e so that log log 1/eps > 0")));
    }
    let shape = lattice.shape();
    let d1 = lattice.spacing(Axis::X1);
    if d1 > eps / 4.0 {
        return Err(Error::Resolution(format!(
            "slab-normal frequency spacing {d1} exceeds eps/4 = {}",
            eps / 4.0
        )));
    }
    let reach = |a: Axis| (lattice.n(a) as f64 / 2.0 - 1.0) * lattice.spacing(a);
    if reach(Axis::X1) < eps / SQRT_2 {
        return Err(Error::Resolution(format!("axis 1 does not reach the slab edge eps/sqrt2 ({shape:?})")));
    }
    let outer = 3.0 * SQRT_2 / 4.0;
    if reach(Axis::X2) < outer || reach(Axis::X3) < outer {
        return Err(Error::Resolution(format!(
            "axes 2 and 3 must reach |k| = {outer}"
        )));
    }
    Ok(())
}

fn example2_potential(eps: f64, lattice: &FrequencyLattice) -> Result<ScalarField> {
    check_example2(eps, lattice)?;
    let volume = lattice.volume();
    Ok(ScalarField::from_spectral_fn(lattice, |k| {
        Complex64::new(example2_symbol(eps, k) / volume, 0.0)
    }))
}

/// Curl-form field `(∂_{y₂}a₀, −∂_{y₁}a₀, 0)` in the [`Frame::Diagonal`] frame.
pub fn example2_data(eps: f64, lattice: &FrequencyLattice) -> Result<VelocityField> {
    let a = example2_potential(eps, lattice)?;
    VelocityField::new([
        derivative(&a, Axis::X2),
        derivative(&a, Axis::X1).scaled(-1.0),
        ScalarField::zeros(lattice),
    ])
}

/// `‖â₀‖_{L^q(ℝ³)}` by the Riemann sum over lattice frequencies.
pub fn example2_symbol_norm(eps: f64, q: f64, lattice: &FrequencyLattice) -> Result<f64> {
    check_example2(eps, lattice)?;
    crate::error::check_exponent("q", q)?;
    let cell: f64 = Axis::ALL.iter().map(|&a| lattice.spacing(a)).product();
    let values: Vec<f64> = (0..lattice.len())
        .filter(|&i| !lattice.is_nyquist(i))
        .map(|i| example2_symbol(eps, lattice.wavevector_at(i)))
        .collect();
    Ok(crate::spectral::lp_norm_values(&values, q, cell))
}

/// `u_λ(x) = λ u(λx)` for `λ = 2^k`: the same grid values on a box shrunk by `λ`.
pub fn rescale(u: &VelocityField, lambda: f64) -> Result<VelocityField> {
    let k = lambda.log2();
    if !(lambda > 0.0) || (k - k.round()).abs() > 1e-12 {
        return Err(Error::Constraint(format!("lambda = {lambda} is not a power of two")));
    }
    let lat = u.lattice();
    let lengths = lat.lengths().map(|l| l / lambda);
    let target = FrequencyLattice::new(lat.shape(), lengths)?;
    VelocityField::new(u.components().clone().map(|c| c.relabelled(&target).scaled(lambda)))
}

/// Known logarithmic factor divided out before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogFactor {
    None,
    /// `(log 1/ε)^a`
    Log(f64),
    /// `(log log 1/ε)^a`
    LogLog(f64),
}

impl LogFactor {
    pub fn value(self, eps: f64) -> f64 {
        match self {
            Self::None => 1.0,
            Self::Log(a) => (1.0 / eps).ln().powf(a),
            Self::LogLog(a) => (1.0 / eps).ln().ln().powf(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub eps_values: Vec<f64>,
    pub observations: Vec<f64>,
    pub log_correction: LogFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(log ε, log(y / logfactor))`.
pub fn scaling_fit(series: &ScalingSeries) -> Result<ScalingFit> {
    let n = series.eps_values.len();
    if n != series.observations.len() {
        return Err(Error::InsufficientData(format!(
            "{n} eps values for {} observations",
            series.observations.len()
        )));
    }
    if n < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 points, got {n}")));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (&e, &y) in series.eps_values.iter().zip(&series.observations) {
        check_eps(e)?;
        let f = series.log_correction.value(e);
        if !(y > 0.0) || !(f > 0.0) || !y.is_finite() {
            return Err(Error::Constraint(format!(
                "observation {y} (log factor {f}) at eps = {e} must be positive"
            )));
        }
        xs.push(e.ln());
        ys.push((y / f).ln());
    }
    let span = (xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - xs.iter().copied().fold(f64::INFINITY, f64::min))
        / 2f64.ln();
    if span < 2.0 - 1e-12 {
        return Err(Error::InsufficientData(format!("eps values span {span:.3} octaves, need 2")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit { slope, intercept, r2 })
}

/// One point of an ε-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub alpha: Option<f64>,
    pub report: CriterionReport,
}

pub fn example1_sweep(eps_values: &[f64], alpha: f64, p: f64, opts: &CriterionOptions) -> Result<Vec<SweepRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let params = Example1Params::new(eps, alpha, p)?;
            let lattice = example1_lattice(&params)?;
            let u = example1_data(&params, &lattice)?;
            let report = criterion_lhs_with(&CriterionInput::new(u, p)?, opts)?;
            Ok(SweepRow {
                eps,
                alpha: Some(alpha),
                report,
            })
        })
        .collect()
}

pub fn example2_sweep(eps_values: &[f64], p: f64, opts: &CriterionOptions) -> Result<Vec<SweepRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let lattice = example2_lattice(eps)?;
            let u = example2_data(eps, &lattice)?;
            let input = CriterionInput::new(u, p)?.with_frame(Frame::Diagonal);
            Ok(SweepRow {
                eps,
                alpha: None,
                report: criterion_lhs_with(&input, opts)?,
            })
        })
        .collect()
}

/// CSV with columns `eps, alpha, p, norm_sum_comp, norm_first_two, caloric_2, caloric_1, lhs, largeness`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("eps,alpha,p,norm_sum_comp,norm_first_two,caloric_2,caloric_1,lhs,largeness\n");
    for row in rows {
        let r = &row.report;
        let alpha = row.alpha.map_or(String::new(), |a| a.to_string());
        let _ = writeln!(
            out,
            "{},{alpha},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            row.eps, r.p, r.norm_sum_comp, r.norm_first_two, r.caloric_2, r.caloric_1, r.lhs, r.largeness
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::besov_norm;
    use crate::spectral::divergence_residual;

    fn cube(n: usize) -> FrequencyLattice {
        FrequencyLattice::cubic(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let lat = cube(16);
        let rep = criterion_lhs(&CriterionInput::new(VelocityField::zeros(&lat), 4.0).unwrap()).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.largeness, 0.0);
        assert!(rep.below_delta);
    }

    #[test]
    fn structural_null_of_first_factor() {
        let lat = cube(16);
        // u¹ = −u² = sin(x₃), u³ = 0 is divergence-free
        let s = ScalarField::from_fn(&lat, |x| 5.0 * x[2].sin());
        let u = VelocityField::new([s.clone(), s.scaled(-1.0), ScalarField::zeros(&lat)]).unwrap();
        let rep = criterion_lhs(&CriterionInput::new(u, 4.0).unwrap()).unwrap();
        assert_eq!(rep.norm_sum_comp, 0.0);
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.norm_first_two > 0.0);
    }

    #[test]
    fn input_validation() {
        let lat = cube(16);
        let z = VelocityField::zeros(&lat);
        assert!(CriterionInput::new(z.clone(), 3.0).is_err());
        assert!(CriterionInput::new(z.clone(), 6.0).is_err());
        assert!(CriterionInput::new(z.clone(), 4.0).unwrap().with_constants(0.0, 1.0).is_err());
        let compressive = VelocityField::new([
            ScalarField::from_fn(&lat, |x| x[0].sin()),
            ScalarField::zeros(&lat),
            ScalarField::zeros(&lat),
        ])
        .unwrap();
        assert!(matches!(
            CriterionInput::new(compressive, 4.0),
            Err(Error::NotDivergenceFree { .. })
        ));
    }

    #[test]
    fn lhs_monotone_in_factors() {
        let base = assemble_lhs(0.3, 0.7, 0.4, 0.2, 1.0);
        assert!(assemble_lhs(0.31, 0.7, 0.4, 0.2, 1.0) > base);
        assert!(assemble_lhs(0.3, 0.71, 0.4, 0.2, 1.0) > base);
        assert!(assemble_lhs(0.3, 0.7, 0.41, 0.2, 1.0) > base);
        assert!(assemble_lhs(0.3, 0.7, 0.4, 0.21, 1.0) > base);
    }

    #[test]
    fn diagonal_frame_components() {
        let lat = cube(8);
        let a = ScalarField::from_fn(&lat, |x| x[0].cos());
        let b = ScalarField::from_fn(&lat, |x| x[1].sin());
        let u = VelocityField::new([a.clone(), b.clone(), ScalarField::zeros(&lat)]).unwrap();
        let [s1, s2, _] = standard_components(&u, Frame::Diagonal);
        let r = 1.0 / SQRT_2;
        assert!(s1.max_abs_diff(&a.combine(r, &b, r).unwrap()).unwrap() < 1e-15);
        assert!(s2.max_abs_diff(&a.combine(-r, &b, r).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn example1_structure() {
        let params = Example1Params::new(0.25, 0.9, 5.0).unwrap();
        let lat = example1_lattice(&params).unwrap();
        let u = example1_data(&params, &lat).unwrap();
        assert!(u.component(0).is_zero());
        let (res, grad) = divergence_residual(&u);
        assert!(res <= 1e-10 * grad, "{res} vs {grad}");
        assert!(u.components().iter().all(|c| c.mean().abs() <= 1e-12 * c.max_abs()));
        assert!(Example1Params::new(0.25, 0.8, 5.0).is_err());
        assert!(Example1Params::new(0.25, 0.9, 4.0).is_err());
        // 1/ε must be an x₁ mode
        let odd = FrequencyLattice::new([256, 32, 32], [1.0, 1.0, 1.0]).unwrap();
        assert!(example1_data(&params, &odd).is_err());
    }

    #[test]
    fn example2_structure() {
        let eps = 0.125;
        let lat = example2_lattice(eps).unwrap();
        let u = example2_data(eps, &lat).unwrap();
        assert!(u.component(2).is_zero());
        let (res, grad) = divergence_residual(&u);
        assert!(res <= 1e-12 * grad.max(1.0));
        // every excited frequency sits where block 0 has unit weight
        let part = DyadicPartition::new(&lat);
        let [s1, _, _] = standard_components(&u, Frame::Diagonal);
        let b = besov_norm(&s1, BesovIndex::new(0.0, 2.0, 1.0).unwrap(), &part).unwrap();
        let l2 = crate::spectral::lp_norm(&s1, 2.0).unwrap();
        assert!((b - l2).abs() <= 1e-10 * l2);
        let coarse = FrequencyLattice::new([16, 256, 256], [8.0 * PI, 128.0 * PI, 128.0 * PI]).unwrap();
        assert!(matches!(example2_data(eps, &coarse), Err(Error::Resolution(_))));
        assert!(example2_data(0.5, &example2_lattice(0.5).unwrap()).is_err());
    }

    #[test]
    fn example2_lhs_matches_separate_factors() {
        let eps = 2f64.powi(-6);
        let lat = example2_lattice(eps).unwrap();
        let u = example2_data(eps, &lat).unwrap();
        let input = CriterionInput::new(u.clone(), 4.0).unwrap().with_frame(Frame::Diagonal);
        let rep = criterion_lhs_with(&input, &CriterionOptions { caloric_largeness: false }).unwrap();
        let part = DyadicPartition::new(&lat);
        let idx = BesovIndex::new(-0.25, 4.0, 1.0).unwrap();
        let [s1, s2, s3] = standard_components(&u, Frame::Diagonal);
        let nsc = besov_norm(&(&s1 + &s2), idx, &part).unwrap() + besov_norm(&s3, idx, &part).unwrap();
        let nft = besov_norm(&s1, idx, &part).unwrap() + besov_norm(&s2, idx, &part).unwrap();
        let want = nsc * nft * (rep.caloric_2.powi(2) + rep.caloric_1).exp();
        assert!((rep.lhs - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn rescale_examples() {
        let lat = cube(16);
        let u = VelocityField::new([
            ScalarField::from_fn(&lat, |x| x[1].sin()),
            ScalarField::zeros(&lat),
            ScalarField::zeros(&lat),
        ])
        .unwrap();
        assert_eq!(rescale(&u, 1.0).unwrap().component(0).spectral(), u.component(0).spectral());
        let v = rescale(&u, 2.0).unwrap();
        // same coefficient at mode index 1, now wavenumber 2, amplitude doubled
        let want = ScalarField::from_fn(v.lattice(), |x| 2.0 * (2.0 * x[1]).sin());
        assert!(v.component(0).max_abs_diff(&want).unwrap() < 1e-13);
        assert!(rescale(&u, 3.0).is_err());
        let p: f64 = 4.0;
        let idx = BesovIndex::critical(p).unwrap();
        let a = crate::littlewood_paley::vector_besov_norm(&u, idx, &DyadicPartition::new(&lat)).unwrap();
        let b = crate::littlewood_paley::vector_besov_norm(&v, idx, &DyadicPartition::new(v.lattice())).unwrap();
        assert!((b / a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_synthetic_series() {
        let eps: Vec<f64> = (3..8).map(|k| 2f64.powi(-k)).collect();
        let pure = ScalingSeries {
            observations: eps.iter().map(|e| e.powf(0.5)).collect(),
            eps_values: eps.clone(),
            log_correction: LogFactor::None,
        };
        let fit = scaling_fit(&pure).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let logged = ScalingSeries {
            observations: eps.iter().map(|e| e.powf(0.5) * (1.0 / e).ln().powf(0.2)).collect(),
            eps_values: eps.clone(),
            log_correction: LogFactor::Log(0.2),
        };
        assert!((scaling_fit(&logged).unwrap().slope - 0.5).abs() < 1e-10);
        let short = ScalingSeries {
            eps_values: eps[..3].to_vec(),
            observations: vec![1.0; 3],
            log_correction: LogFactor::None,
        };
        assert!(scaling_fit(&short).is_err());
        let narrow = ScalingSeries {
            eps_values: vec![0.5, 0.45, 0.4, 0.35],
            observations: vec![1.0; 4],
            log_correction: LogFactor::None,
        };
        assert!(scaling_fit(&narrow).is_err());
    }
}
