//! Batch verification suites: identities, norm oracles and inequality
//! ensembles, each reduced to a single metric checked against a tolerance.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::heat::{caloric_norm, equivalence_check, heat_evolve, verify_heat_smoothing, CaloricIndex, SmoothingParams, Trajectory, EQUIVALENCE_BRACKET};
use crate::lattice::FrequencyLattice;
use crate::littlewood_paley::{besov_norm, BesovIndex, DyadicPartition};
use crate::paraproduct::{bony_residual, max_ratio, run_ensemble, EnsembleKind, EstimateParams, EstimateVariant};
use crate::random::{random_divergence_free, random_scalar, sample_seed, RandomFieldConfig};
use crate::solver::transport_rewrite_residual;
use crate::spectral::leray_project;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    Bony,
    Heat,
    Leray,
    Transport,
    Norms,
    Caloric,
    Equivalence,
    ParaproductLebesgue,
    ParaproductNegative,
    Remainder,
    Product,
    Smoothing,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Bony,
        Suite::Heat,
        Suite::Leray,
        Suite::Transport,
        Suite::Norms,
        Suite::Caloric,
        Suite::Equivalence,
        Suite::ParaproductLebesgue,
        Suite::ParaproductNegative,
        Suite::Remainder,
        Suite::Product,
        Suite::Smoothing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bony => "bony",
            Suite::Heat => "heat",
            Suite::Leray => "leray",
            Suite::Transport => "transport",
            Suite::Norms => "norms",
            Suite::Caloric => "caloric",
            Suite::Equivalence => "equivalence",
            Suite::ParaproductLebesgue => "paraproduct-lebesgue",
            Suite::ParaproductNegative => "paraproduct-negative",
            Suite::Remainder => "remainder",
            Suite::Product => "product",
            Suite::Smoothing => "heat-smoothing",
        }
    }

    pub fn from_name(name: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Constraint(format!("unknown suite {name:?}; known: {}", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Grid points per axis (cubic `2π` box).
    pub n: usize,
    /// Second resolution for the ratio-stability suites.
    pub n_fine: usize,
    pub samples: u64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n: 32,
            n_fine: 64,
            samples: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub passed: bool,
    /// The quantity compared against the tolerance.
    pub metric: f64,
    pub tolerance: f64,
    pub details: Vec<(String, f64)>,
}

impl SuiteOutcome {
    fn new(suite: Suite, passed: bool, metric: f64, tolerance: f64, details: Vec<(String, f64)>) -> Self {
        Self {
            suite: suite.name().into(),
            passed,
            metric,
            tolerance,
            details,
        }
    }
}

fn torus(n: usize) -> Result<(FrequencyLattice, DyadicPartition)> {
    let lattice = FrequencyLattice::cubic(n, 2.0 * PI)?;
    let partition = DyadicPartition::new(&lattice);
    Ok((lattice, partition))
}

/// Default indices of each paraproduct/remainder ensemble.
pub fn estimate_defaults(variant: EstimateVariant) -> EstimateParams {
    let inf = f64::INFINITY;
    match variant {
        EstimateVariant::ParaproductLebesgue => EstimateParams {
            s: 0.5,
            t: 0.0,
            t1: 0.0,
            t2: 0.0,
            p: 2.0,
            p1: inf,
            p2: 2.0,
            r: 2.0,
            r1: inf,
            r2: 2.0,
        },
        EstimateVariant::ParaproductNegative => EstimateParams {
            s: 0.5,
            t: 0.5,
            t1: 0.0,
            t2: 0.0,
            p: 2.0,
            p1: inf,
            p2: 2.0,
            r: 2.0,
            r1: inf,
            r2: 2.0,
        },
        EstimateVariant::Remainder => EstimateParams {
            s: 0.0,
            t: 1.0,
            t1: 0.5,
            t2: 0.5,
            p: 2.0,
            p1: 4.0,
            p2: 4.0,
            r: 1.0,
            r1: 2.0,
            r2: 2.0,
        },
    }
}

/// Product-estimate indices `s₁ = s₂ = 3/p`, `p = 4`.
pub const PRODUCT_DEFAULT: (f64, f64, f64) = (0.75, 0.75, 4.0);

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    if cfg.samples == 0 {
        return Err(Error::Constraint("samples must be at least 1".into()));
    }
    match suite {
        Suite::Bony => bony(cfg),
        Suite::Heat => heat(cfg),
        Suite::Leray => leray(cfg),
        Suite::Transport => transport(cfg),
        Suite::Norms => norms(cfg),
        Suite::Caloric => caloric(cfg),
        Suite::Equivalence => equivalence(cfg),
        Suite::ParaproductLebesgue => stability(suite, EnsembleKind::Estimate(EstimateVariant::ParaproductLebesgue, estimate_defaults(EstimateVariant::ParaproductLebesgue)), cfg),
        Suite::ParaproductNegative => stability(suite, EnsembleKind::Estimate(EstimateVariant::ParaproductNegative, estimate_defaults(EstimateVariant::ParaproductNegative)), cfg),
        Suite::Remainder => stability(suite, EnsembleKind::Estimate(EstimateVariant::Remainder, estimate_defaults(EstimateVariant::Remainder)), cfg),
        Suite::Product => {
            let (s1, s2, p) = PRODUCT_DEFAULT;
            stability(suite, EnsembleKind::Product { s1, s2, p }, cfg)
        }
        Suite::Smoothing => smoothing(cfg),
    }
}

/// Bony reconstruction on interior band-limited pairs.
fn bony(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (_, part) = torus(cfg.n)?;
    let rc = RandomFieldConfig::interior(&part);
    let mut worst = 0.0f64;
    let mut warnings = 0;
    for id in 0..cfg.samples {
        let (f, _) = random_scalar(&part, sample_seed(cfg.seed, id, 1), &rc);
        let (g, _) = random_scalar(&part, sample_seed(cfg.seed, id, 2), &rc);
        let rep = bony_residual(&f, &g, &part)?;
        worst = worst.max(rep.relative);
        warnings += rep.warning.is_some() as u32;
    }
    let tol = 1e-8;
    Ok(SuiteOutcome::new(
        Suite::Bony,
        worst <= tol && warnings == 0,
        worst,
        tol,
        vec![("samples".into(), cfg.samples as f64), ("warnings".into(), warnings as f64)],
    ))
}

/// Single-mode decay and the semigroup law.
fn heat(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (lat, part) = torus(cfg.n)?;
    let k = [1.0, 2.0, -3.0];
    let k2: f64 = k.iter().map(|x| x * x).sum();
    let mode = |x: [f64; 3]| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos();
    let f = ScalarField::from_fn(&lat, mode);
    let t = 0.05;
    let want = ScalarField::from_fn(&lat, |x| (-k2 * t).exp() * mode(x));
    let single = heat_evolve(&f, t)?.max_abs_diff(&want)?;
    let (g, _) = random_scalar(&part, sample_seed(cfg.seed, 0, 3), &RandomFieldConfig::default());
    let g = g.scaled(1.0 / g.max_abs());
    let semigroup = heat_evolve(&heat_evolve(&g, 0.01)?, 0.02)?.max_abs_diff(&heat_evolve(&g, 0.03)?)?;
    let metric = single.max(semigroup);
    let tol = 1e-12;
    Ok(SuiteOutcome::new(
        Suite::Heat,
        metric <= tol,
        metric,
        tol,
        vec![("single_mode_error".into(), single), ("semigroup_error".into(), semigroup)],
    ))
}

/// `P(Pu) = Pu` on random vector fields that are not divergence-free.
fn leray(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (_, part) = torus(cfg.n)?;
    let rc = RandomFieldConfig::default();
    let mut worst = 0.0f64;
    for id in 0..cfg.samples {
        let c = [0, 1, 2].map(|k| {
            let (f, _) = random_scalar(&part, sample_seed(cfg.seed, id, 10 + k), &rc);
            f.scaled(1.0 / f.max_abs().max(f64::MIN_POSITIVE))
        });
        let u = VelocityField::new(c)?;
        let pu = leray_project(&u);
        worst = worst.max(leray_project(&pu).max_abs_diff(&pu)?);
    }
    let tol = 1e-12;
    Ok(SuiteOutcome::new(Suite::Leray, worst <= tol, worst, tol, vec![("samples".into(), cfg.samples as f64)]))
}

/// The `div U = 0` rewrite of `U·∇U`, with a compressible negative control.
fn transport(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (lat, part) = torus(cfg.n)?;
    let rc = RandomFieldConfig::default();
    let mut worst = 0.0f64;
    for id in 0..cfg.samples {
        let u = random_divergence_free(&part, sample_seed(cfg.seed, id, 4), &rc);
        worst = worst.max(transport_rewrite_residual(&u).relative);
    }
    let control = VelocityField::new([
        ScalarField::from_fn(&lat, |x| x[0].sin()),
        ScalarField::zeros(&lat),
        ScalarField::zeros(&lat),
    ])?;
    let control_residual = transport_rewrite_residual(&control).relative;
    let tol = 1e-9;
    Ok(SuiteOutcome::new(
        Suite::Transport,
        worst <= tol && control_residual > 0.1,
        worst,
        tol,
        vec![
            ("samples".into(), cfg.samples as f64),
            ("negative_control_relative".into(), control_residual),
        ],
    ))
}

/// `‖cos 4x₁‖_{Ḃ⁰_{∞,1}} = 1`.
fn norms(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (lat, part) = torus(cfg.n.max(16))?;
    let f = ScalarField::from_fn(&lat, |x| (4.0 * x[0]).cos());
    let v = besov_norm(&f, BesovIndex::new(0.0, f64::INFINITY, 1.0)?, &part)?;
    let err = (v - 1.0).abs();
    let tol = 1e-6;
    Ok(SuiteOutcome::new(Suite::Norms, err <= tol, err, tol, vec![("value".into(), v)]))
}

/// Caloric norms of single modes against `(2e|k|²)^{−1/2}` and `(2|k|²)^{−1/2}`.
fn caloric(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (lat, part) = torus(cfg.n.max(16))?;
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for k in [[1.0, 0.0, 0.0], [4.0, 0.0, 0.0], [2.0, 1.0, -2.0]] {
        let f = ScalarField::from_fn(&lat, |x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos());
        let k2: f64 = k.iter().map(|x| x * x).sum();
        let sup = caloric_norm(&f, CaloricIndex::Infinity, &part)?;
        let l2 = caloric_norm(&f, CaloricIndex::Two, &part)?;
        let e_sup = (sup / (2.0 * E * k2).powf(-0.5) - 1.0).abs();
        let e_l2 = (l2 / (2.0 * k2).powf(-0.5) - 1.0).abs();
        worst = worst.max(e_sup).max(e_l2);
        details.push((format!("k2={k2}:sup_rel_err"), e_sup));
        details.push((format!("k2={k2}:l2_rel_err"), e_l2));
    }
    let tol = 5e-3;
    Ok(SuiteOutcome::new(Suite::Caloric, worst <= tol, worst, tol, details))
}

/// Dyadic against caloric `Ḃ^{−1}_{∞,r}` on random fields.
fn equivalence(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (_, part) = torus(cfg.n)?;
    let rc = RandomFieldConfig::default();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for id in 0..cfg.samples {
        let (f, _) = random_scalar(&part, sample_seed(cfg.seed, id, 5), &rc);
        for e in equivalence_check(&f, &part)?.entries {
            lo = lo.min(e.ratio);
            hi = hi.max(e.ratio);
        }
    }
    let (a, b) = EQUIVALENCE_BRACKET;
    // distance outside the bracket in log scale; 0 when inside
    let metric = (a / lo).ln().max((hi / b).ln()).max(0.0);
    Ok(SuiteOutcome::new(
        Suite::Equivalence,
        lo >= a && hi <= b,
        metric,
        0.0,
        vec![("min_ratio".into(), lo), ("max_ratio".into(), hi), ("samples".into(), cfg.samples as f64)],
    ))
}

/// Maximum ensemble ratio at two resolutions; passes when they agree within
/// a factor of two.
fn stability(suite: Suite, kind: EnsembleKind, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let run = |n: usize| -> Result<f64> {
        let (_, part) = torus(n)?;
        Ok(max_ratio(&run_ensemble(&kind, &part, &RandomFieldConfig::default(), cfg.samples, cfg.seed)?))
    };
    let coarse = run(cfg.n)?;
    let fine = run(cfg.n_fine)?;
    let factor = if coarse > 0.0 && fine > 0.0 {
        (fine / coarse).max(coarse / fine)
    } else {
        f64::INFINITY
    };
    Ok(SuiteOutcome::new(
        suite,
        factor <= 2.0,
        factor,
        2.0,
        vec![
            (format!("max_ratio_n{}", cfg.n), coarse),
            (format!("max_ratio_n{}", cfg.n_fine), fine),
            ("samples".into(), cfg.samples as f64),
        ],
    ))
}

/// Free heat flow (`G = 0`) in the maximal-regularity estimate, `q₂ = ∞`.
fn smoothing(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let (lat, part) = torus(cfg.n)?;
    let params = SmoothingParams {
        s: -0.5,
        p: 2.0,
        r: 1.0,
        q1: 1.0,
        q2: f64::INFINITY,
    };
    let g = Trajectory::sample(1.0, 8, |_| ScalarField::zeros(&lat))?;
    let mut worst = 0.0f64;
    for id in 0..cfg.samples.min(10) {
        let (u0, _) = random_scalar(&part, sample_seed(cfg.seed, id, 6), &RandomFieldConfig::default());
        worst = worst.max(verify_heat_smoothing(&u0, &g, params, &part)?.ratio);
    }
    let tol = 1.1;
    Ok(SuiteOutcome::new(
        Suite::Smoothing,
        worst <= tol,
        worst,
        tol,
        vec![("samples".into(), cfg.samples.min(10) as f64)],
    ))
}
