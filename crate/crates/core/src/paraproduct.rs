//! Bony decomposition `fg = Ṫ_f g + Ṫ_g f + Ṙ(f, g)` and empirical ratios
//! for the paraproduct, remainder and product estimates.
//!
//! Products are formed pointwise on the grid and truncated by the 2/3
//! rule. Block sums run over the partition's usable range.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::field::ScalarField;
use crate::littlewood_paley::{besov_norm, BesovIndex, DyadicPartition, BOUNDARY_MASS_WARNING};
use crate::random::{random_scalar, sample_seed, RandomFieldConfig};
use crate::spectral::{dealias, lp_norm};

/// Physical values of every block of a field, plus its mean.
struct BlockValues {
    j_min: i32,
    blocks: Vec<Option<Vec<f64>>>,
    mean: f64,
}

impl BlockValues {
    fn new(f: &ScalarField, partition: &DyadicPartition) -> Self {
        Self {
            j_min: partition.j_min(),
            blocks: partition.range().map(|j| partition.block_values(f, j)).collect(),
            mean: f.mean(),
        }
    }

    fn get(&self, j: i32) -> Option<&[f64]> {
        let k = j - self.j_min;
        if k < 0 || k as usize >= self.blocks.len() {
            return None;
        }
        self.blocks[k as usize].as_deref()
    }

    /// Grid values of `Ṡ_{j−1} f = mean + Σ_{k ≤ j−2} Δ̇_k f` for each usable `j`.
    fn low_passes(&self, len: usize) -> Vec<Vec<f64>> {
        let mut acc = vec![self.mean; len];
        let mut out = Vec::with_capacity(self.blocks.len());
        for idx in 0..self.blocks.len() {
            // Ṡ_{j−1} for j = j_min + idx covers blocks up to j − 2 = j_min + idx − 2.
            if idx >= 2 {
                if let Some(b) = &self.blocks[idx - 2] {
                    for (a, v) in acc.iter_mut().zip(b) {
                        *a += v;
                    }
                }
            }
            out.push(acc.clone());
        }
        out
    }
}

fn check_pair(f: &ScalarField, g: &ScalarField, partition: &DyadicPartition) -> Result<()> {
    f.check_same_lattice(g)?;
    if f.lattice() != partition.lattice() {
        return Err(Error::LatticeMismatch("partition built on another lattice".into()));
    }
    Ok(())
}

fn paraproduct_values(fb: &BlockValues, gb: &BlockValues, len: usize) -> Vec<f64> {
    let lows = fb.low_passes(len);
    let mut out = vec![0.0; len];
    for (k, low) in lows.iter().enumerate() {
        if let Some(g) = gb.get(fb.j_min + k as i32) {
            for ((o, a), b) in out.iter_mut().zip(low).zip(g) {
                *o += a * b;
            }
        }
    }
    out
}

fn remainder_values(fb: &BlockValues, gb: &BlockValues, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for k in 0..fb.blocks.len() {
        let j = fb.j_min + k as i32;
        let Some(f) = fb.get(j) else { continue };
        for jj in j - 1..=j + 1 {
            if let Some(g) = gb.get(jj) {
                for ((o, a), b) in out.iter_mut().zip(f).zip(g) {
                    *o += a * b;
                }
            }
        }
    }
    out
}

fn finish(f: &ScalarField, values: Vec<f64>) -> ScalarField {
    dealias(&ScalarField::from_physical(f.lattice(), values).expect("finite product"))
}

/// `Ṫ_f g = Σ_j Ṡ_{j−1} f · Δ̇_j g`, dealiased.
pub fn paraproduct(f: &ScalarField, g: &ScalarField, partition: &DyadicPartition) -> Result<ScalarField> {
    check_pair(f, g, partition)?;
    let len = f.lattice().len();
    let fb = BlockValues::new(f, partition);
    let gb = BlockValues::new(g, partition);
    Ok(finish(f, paraproduct_values(&fb, &gb, len)))
}

/// `Ṙ(f, g) = Σ_j Δ̇_j f · Δ̃_j g` with `Δ̃_j = Δ̇_{j−1} + Δ̇_j + Δ̇_{j+1}`, dealiased.
pub fn remainder(f: &ScalarField, g: &ScalarField, partition: &DyadicPartition) -> Result<ScalarField> {
    check_pair(f, g, partition)?;
    let len = f.lattice().len();
    let fb = BlockValues::new(f, partition);
    let gb = BlockValues::new(g, partition);
    Ok(finish(f, remainder_values(&fb, &gb, len)))
}

/// The three Bony pieces of a product.
pub struct BonyPieces {
    pub t_fg: ScalarField,
    pub t_gf: ScalarField,
    pub r_fg: ScalarField,
}

pub fn bony_pieces(f: &ScalarField, g: &ScalarField, partition: &DyadicPartition) -> Result<BonyPieces> {
    check_pair(f, g, partition)?;
    let len = f.lattice().len();
    let fb = BlockValues::new(f, partition);
    let gb = BlockValues::new(g, partition);
    Ok(BonyPieces {
        t_fg: finish(f, paraproduct_values(&fb, &gb, len)),
        t_gf: finish(f, paraproduct_values(&gb, &fb, len)),
        r_fg: finish(f, remainder_values(&fb, &gb, len)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonyReport {
    /// `max|fg − (Ṫ_f g + Ṫ_g f + Ṙ(f, g))|` on the grid.
    pub residual: f64,
    /// `residual / (‖f‖_∞ ‖g‖_∞)`, or 0 when either factor vanishes.
    pub relative: f64,
    pub warning: Option<String>,
}

/// Reconstruction residual of the Bony decomposition against the grid
/// product `f·g`.
///
/// The identity is exact when both inputs carry no content outside the
/// 2/3 cube's inner half (so `fg` needs no truncation) and no energy in the
/// edge blocks of the usable range; otherwise a warning is attached.
pub fn bony_residual(f: &ScalarField, g: &ScalarField, partition: &DyadicPartition) -> Result<BonyReport> {
    let pieces = bony_pieces(f, g, partition)?;
    let prod: Vec<f64> = f.physical().iter().zip(g.physical()).map(|(a, b)| a * b).collect();
    let t1 = pieces.t_fg.physical();
    let t2 = pieces.t_gf.physical();
    let r = pieces.r_fg.physical();
    let residual = (0..prod.len())
        .map(|i| (prod[i] - (t1[i] + t2[i] + r[i])).abs())
        .fold(0.0, f64::max);
    let scale = f.max_abs() * g.max_abs();
    let relative = if scale > 0.0 { residual / scale } else { 0.0 };

    let mut notes = Vec::new();
    for (name, h) in [("f", f), ("g", g)] {
        let total: f64 = partition.range().map(|j| partition.block_energy(h, j)).sum();
        if !inner_band_limited(h) {
            notes.push(format!("{name} has modes beyond n/6; fg is truncated by the 2/3 rule"));
        }
        let edge = partition.block_energy(h, partition.j_min()) + partition.block_energy(h, partition.j_max());
        if edge > BOUNDARY_MASS_WARNING * total {
            notes.push(format!("{name} has energy in an edge block of the usable range"));
        }
    }
    if f.mean() != 0.0 && g.mean() != 0.0 {
        notes.push("both inputs have a nonzero mean; the mean-mean product is not represented".into());
    }
    Ok(BonyReport {
        residual,
        relative,
        warning: (!notes.is_empty()).then(|| notes.join("; ")),
    })
}

/// Whether every nonzero mode has `|m_a| ≤ n_a/6` on all axes.
pub fn inner_band_limited(f: &ScalarField) -> bool {
    let lat = f.lattice();
    let s = lat.shape();
    f.spectral().iter().enumerate().all(|(i, c)| {
        let m = lat.mode_at(i);
        c.norm_sqr() == 0.0 || (0..3).all(|a| 6 * m[a].unsigned_abs() as usize <= s[a])
    })
}

/// Which paraproduct or remainder estimate to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateVariant {
    /// `‖Ṫ_f g‖_{Ḃ^s_{p,r}} ≤ C ‖f‖_{L^{p₁}} ‖g‖_{Ḃ^s_{p₂,r}}`
    ParaproductLebesgue,
    /// `‖Ṫ_f g‖_{Ḃ^{s−t}_{p,r}} ≤ C ‖f‖_{Ḃ^{−t}_{p₁,r₁}} ‖g‖_{Ḃ^s_{p₂,r₂}}`
    ParaproductNegative,
    /// `‖Ṙ(f,g)‖_{Ḃ^t_{p,r}} ≤ C ‖f‖_{Ḃ^{t₁}_{p₁,r₁}} ‖g‖_{Ḃ^{t₂}_{p₂,r₂}}`
    Remainder,
}

impl EstimateVariant {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::ParaproductLebesgue),
            2 => Ok(Self::ParaproductNegative),
            3 => Ok(Self::Remainder),
            _ => Err(Error::Constraint(format!("variant must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::ParaproductLebesgue => 1,
            Self::ParaproductNegative => 2,
            Self::Remainder => 3,
        }
    }
}

/// Indices of the paraproduct/remainder estimates. Unused entries are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub s: f64,
    pub t: f64,
    pub t1: f64,
    pub t2: f64,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
}

const INDEX_TOL: f64 = 1e-12;

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn harmonic(name: &str, total: f64, a: f64, b: f64) -> Result<()> {
    if (recip(total) - recip(a) - recip(b)).abs() > INDEX_TOL {
        return Err(Error::Constraint(format!(
            "1/{name} = 1/{name}1 + 1/{name}2 fails: {total}, {a}, {b}"
        )));
    }
    Ok(())
}

impl EstimateParams {
    pub fn validate(&self, variant: EstimateVariant) -> Result<()> {
        for (name, v) in [("p", self.p), ("p1", self.p1), ("p2", self.p2), ("r", self.r)] {
            check_exponent(name, v)?;
        }
        harmonic("p", self.p, self.p1, self.p2)?;
        match variant {
            EstimateVariant::ParaproductLebesgue => {}
            EstimateVariant::ParaproductNegative => {
                check_exponent("r1", self.r1)?;
                check_exponent("r2", self.r2)?;
                harmonic("r", self.r, self.r1, self.r2)?;
                if self.t <= 0.0 {
                    return Err(Error::Constraint(format!("t = {} must be positive", self.t)));
                }
            }
            EstimateVariant::Remainder => {
                check_exponent("r1", self.r1)?;
                check_exponent("r2", self.r2)?;
                harmonic("r", self.r, self.r1, self.r2)?;
                if (self.t - self.t1 - self.t2).abs() > INDEX_TOL {
                    return Err(Error::Constraint(format!(
                        "t = t1 + t2 fails: {} vs {} + {}",
                        self.t, self.t1, self.t2
                    )));
                }
                if self.t1 + self.t2 <= 0.0 {
                    return Err(Error::Constraint(format!(
                        "t1 + t2 = {} must be positive",
                        self.t1 + self.t2
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Both sides of one sampled inequality; the constant is never assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub label: String,
    pub sample_id: u64,
    pub lhs: f64,
    /// Product of the norms on the right, without the constant.
    pub rhs_factor: f64,
    /// `lhs / rhs_factor`, or 0 for a degenerate report.
    pub ratio: f64,
    pub degenerate: bool,
    pub params: Vec<(String, f64)>,
}

impl InequalityReport {
    pub(crate) fn new(label: String, sample_id: u64, lhs: f64, rhs_factor: f64, params: Vec<(String, f64)>) -> Self {
        let degenerate = !(rhs_factor > 0.0);
        let ratio = if degenerate { 0.0 } else { lhs / rhs_factor };
        Self {
            label,
            sample_id,
            lhs,
            rhs_factor,
            ratio,
            degenerate,
            params,
        }
    }
}

fn named(p: &EstimateParams) -> Vec<(String, f64)> {
    [
        ("s", p.s),
        ("t", p.t),
        ("t1", p.t1),
        ("t2", p.t2),
        ("p", p.p),
        ("p1", p.p1),
        ("p2", p.p2),
        ("r", p.r),
        ("r1", p.r1),
        ("r2", p.r2),
    ]
    .iter()
    .map(|(n, v)| (n.to_string(), *v))
    .collect()
}

pub fn estimate_ratio(
    f: &ScalarField,
    g: &ScalarField,
    variant: EstimateVariant,
    params: &EstimateParams,
    partition: &DyadicPartition,
    sample_id: u64,
) -> Result<InequalityReport> {
    params.validate(variant)?;
    let q = params;
    let (lhs, rhs) = match variant {
        EstimateVariant::ParaproductLebesgue => {
            let t = paraproduct(f, g, partition)?;
            let lhs = besov_norm(&t, BesovIndex::new(q.s, q.p, q.r)?, partition)?;
            let rhs = lp_norm(f, q.p1)? * besov_norm(g, BesovIndex::new(q.s, q.p2, q.r)?, partition)?;
            (lhs, rhs)
        }
        EstimateVariant::ParaproductNegative => {
            let t = paraproduct(f, g, partition)?;
            let lhs = besov_norm(&t, BesovIndex::new(q.s - q.t, q.p, q.r)?, partition)?;
            let rhs = besov_norm(f, BesovIndex::new(-q.t, q.p1, q.r1)?, partition)?
                * besov_norm(g, BesovIndex::new(q.s, q.p2, q.r2)?, partition)?;
            (lhs, rhs)
        }
        EstimateVariant::Remainder => {
            let r = remainder(f, g, partition)?;
            let lhs = besov_norm(&r, BesovIndex::new(q.t, q.p, q.r)?, partition)?;
            let rhs = besov_norm(f, BesovIndex::new(q.t1, q.p1, q.r1)?, partition)?
                * besov_norm(g, BesovIndex::new(q.t2, q.p2, q.r2)?, partition)?;
            (lhs, rhs)
        }
    };
    Ok(InequalityReport::new(
        match variant {
            EstimateVariant::ParaproductLebesgue => "paraproduct_lebesgue",
            EstimateVariant::ParaproductNegative => "paraproduct_negative",
            EstimateVariant::Remainder => "remainder",
        }
        .into(),
        sample_id,
        lhs,
        rhs,
        named(params),
    ))
}

/// Product estimate `‖fg‖_{Ḃ^{s₁+s₂−3/p}_{p,1}} ≤ C ‖f‖_{Ḃ^{s₁}_{p,1}} ‖g‖_{Ḃ^{s₂}_{p,1}}`
/// in three dimensions, for `2 ≤ p ≤ ∞`, `s₁, s₂ ≤ 3/p`, `s₁ + s₂ > 3 max(0, 2/p − 1)`.
pub fn product_ratio(
    f: &ScalarField,
    g: &ScalarField,
    s1: f64,
    s2: f64,
    p: f64,
    partition: &DyadicPartition,
    sample_id: u64,
) -> Result<InequalityReport> {
    check_product_indices(s1, s2, p)?;
    let d_over_p = 3.0 * recip(p);
    let fg = crate::spectral::product_dealiased(f, g)?;
    let lhs = besov_norm(&fg, BesovIndex::new(s1 + s2 - d_over_p, p, 1.0)?, partition)?;
    let rhs = besov_norm(f, BesovIndex::new(s1, p, 1.0)?, partition)?
        * besov_norm(g, BesovIndex::new(s2, p, 1.0)?, partition)?;
    Ok(InequalityReport::new(
        "product".into(),
        sample_id,
        lhs,
        rhs,
        vec![("s1".into(), s1), ("s2".into(), s2), ("p".into(), p)],
    ))
}

pub fn check_product_indices(s1: f64, s2: f64, p: f64) -> Result<()> {
    check_exponent("p", p)?;
    if p < 2.0 {
        return Err(Error::Constraint(format!("p = {p} must be at least 2")));
    }
    let d_over_p = 3.0 * recip(p);
    if s1 > d_over_p + INDEX_TOL || s2 > d_over_p + INDEX_TOL {
        return Err(Error::Constraint(format!(
            "s1 = {s1}, s2 = {s2} must not exceed 3/p = {d_over_p}"
        )));
    }
    let floor = 3.0 * f64::max(0.0, 2.0 * recip(p) - 1.0);
    if s1 + s2 <= floor {
        return Err(Error::Constraint(format!(
            "s1 + s2 = {} must exceed {floor}",
            s1 + s2
        )));
    }
    Ok(())
}

/// What an ensemble samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnsembleKind {
    Estimate(EstimateVariant, EstimateParams),
    Product { s1: f64, s2: f64, p: f64 },
}

/// Ratios over `samples` seeded random pairs `(f, g)`.
pub fn run_ensemble(
    kind: &EnsembleKind,
    partition: &DyadicPartition,
    cfg: &RandomFieldConfig,
    samples: u64,
    base_seed: u64,
) -> Result<Vec<InequalityReport>> {
    (0..samples)
        .map(|id| {
            let (f, _) = random_scalar(partition, sample_seed(base_seed, id, 1), cfg);
            let (g, _) = random_scalar(partition, sample_seed(base_seed, id, 2), cfg);
            match kind {
                EnsembleKind::Estimate(v, p) => estimate_ratio(&f, &g, *v, p, partition, id),
                EnsembleKind::Product { s1, s2, p } => product_ratio(&f, &g, *s1, *s2, *p, partition, id),
            }
        })
        .collect()
}

pub fn max_ratio(reports: &[InequalityReport]) -> f64 {
    reports
        .iter()
        .filter(|r| !r.degenerate)
        .map(|r| r.ratio)
        .fold(0.0, f64::max)
}

/// CSV with columns `sample_id, <params...>, lhs, rhs_factor, ratio`.
pub fn reports_to_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::from("sample_id");
    if let Some(first) = reports.first() {
        for (name, _) in &first.params {
            out.push(',');
            out.push_str(name);
        }
    }
    out.push_str(",lhs,rhs_factor,ratio\n");
    for r in reports {
        let _ = write!(out, "{}", r.sample_id);
        for (_, v) in &r.params {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{:.17e},{:.17e},{:.17e}", r.lhs, r.rhs_factor, r.ratio);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FrequencyLattice;
    use crate::littlewood_paley::{block, low_pass};
    use crate::spectral::product;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (FrequencyLattice, DyadicPartition) {
        let lat = FrequencyLattice::cubic(n, 2.0 * PI).unwrap();
        let part = DyadicPartition::new(&lat);
        (lat, part)
    }

    #[test]
    fn constant_times_field() {
        let (lat, part) = setup(32);
        let c = ScalarField::from_fn(&lat, |_| 2.5);
        let g = ScalarField::from_fn(&lat, |x| x[0].sin() * (3.0 * x[1]).cos() + (2.0 * x[2]).cos());
        let t = paraproduct(&c, &g, &part).unwrap();
        assert!(t.max_abs_diff(&g.scaled(2.5)).unwrap() < 1e-10);
        let z = ScalarField::zeros(&lat);
        assert!(paraproduct(&c, &z, &part).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn high_low_paraproduct_vanishes() {
        let (lat, part) = setup(32);
        let f = ScalarField::from_fn(&lat, |x| (8.0 * x[0]).cos());
        let g = ScalarField::from_fn(&lat, |x| x[1].cos());
        // oracle: literal double sum Σ_j Σ_{k ≤ j−2} Δ̇_k f Δ̇_j g
        let mut oracle = ScalarField::zeros(&lat);
        for j in part.range() {
            let low = low_pass(&f, j - 1, &part);
            oracle = &oracle + &product(&low, &block(&g, j, &part)).unwrap();
        }
        assert!(oracle.max_abs() < 1e-14);
        assert!(paraproduct(&f, &g, &part).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn remainder_of_separated_supports_vanishes() {
        let (lat, part) = setup(32);
        let f = ScalarField::from_fn(&lat, |x| x[0].cos());
        let g = ScalarField::from_fn(&lat, |x| (8.0 * x[1]).cos());
        assert!(remainder(&f, &g, &part).unwrap().max_abs() < 1e-14);
        let z = ScalarField::zeros(&lat);
        assert_eq!(remainder(&f, &z, &part).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn bony_identity_single_mode() {
        let (lat, part) = setup(32);
        let f = ScalarField::from_fn(&lat, |x| (4.0 * x[0]).cos());
        let rep = bony_residual(&f, &f, &part).unwrap();
        assert!(rep.relative <= 1e-10, "{rep:?}");
        let z = ScalarField::zeros(&lat);
        assert_eq!(bony_residual(&z, &f, &part).unwrap().residual, 0.0);
    }

    #[test]
    fn bony_identity_random_interior() {
        let (_, part) = setup(32);
        let cfg = RandomFieldConfig::interior(&part);
        for id in 0..5 {
            let (f, _) = random_scalar(&part, sample_seed(11, id, 1), &cfg);
            let (g, _) = random_scalar(&part, sample_seed(11, id, 2), &cfg);
            let rep = bony_residual(&f, &g, &part).unwrap();
            assert!(rep.relative <= 1e-8, "{rep:?}");
            assert!(rep.warning.is_none(), "{rep:?}");
        }
    }

    #[test]
    fn bony_warns_on_truncated_product() {
        let (lat, part) = setup(16);
        let f = ScalarField::from_fn(&lat, |x| (4.0 * x[0]).cos());
        let rep = bony_residual(&f, &f, &part).unwrap();
        assert!(rep.warning.is_some());
    }

    #[test]
    fn index_constraints() {
        let ok = EstimateParams {
            s: 0.5,
            t: 1.0,
            t1: 0.5,
            t2: 0.5,
            p: 2.0,
            p1: 4.0,
            p2: 4.0,
            r: 1.0,
            r1: 2.0,
            r2: 2.0,
        };
        assert!(ok.validate(EstimateVariant::Remainder).is_ok());
        let bad_p = EstimateParams { p: 3.0, ..ok };
        assert!(bad_p.validate(EstimateVariant::ParaproductLebesgue).is_err());
        let bad_t = EstimateParams { t: 0.0, t1: 0.0, t2: 0.0, ..ok };
        assert!(bad_t.validate(EstimateVariant::Remainder).is_err());
        assert!(bad_t.validate(EstimateVariant::ParaproductNegative).is_err());
        let bad_r = EstimateParams { r: 2.0, ..ok };
        assert!(bad_r.validate(EstimateVariant::Remainder).is_err());
        assert!(check_product_indices(2.0, 2.0, 4.0).is_err());
        assert!(check_product_indices(0.75, 0.75, 4.0).is_ok());
        assert!(check_product_indices(-0.5, 0.4, 4.0).is_err());
        assert!(check_product_indices(0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn degenerate_reports() {
        let (lat, part) = setup(16);
        let f = ScalarField::from_fn(&lat, |x| x[0].sin());
        let z = ScalarField::zeros(&lat);
        let params = EstimateParams {
            s: 0.5,
            t: 1.0,
            t1: 0.5,
            t2: 0.5,
            p: 2.0,
            p1: f64::INFINITY,
            p2: 2.0,
            r: 1.0,
            r1: f64::INFINITY,
            r2: 1.0,
        };
        let rep = estimate_ratio(&f, &z, EstimateVariant::ParaproductLebesgue, &params, &part, 0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.degenerate);
        let rep = product_ratio(&z, &f, 0.75, 0.75, 4.0, &part, 0).unwrap();
        assert_eq!(rep.lhs, 0.0);
    }

    #[test]
    fn separated_remainder_ratio_is_zero() {
        let (lat, part) = setup(32);
        let f = ScalarField::from_fn(&lat, |x| x[0].cos());
        let g = ScalarField::from_fn(&lat, |x| (8.0 * x[1]).cos());
        let params = EstimateParams {
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
        };
        let rep = estimate_ratio(&f, &g, EstimateVariant::Remainder, &params, &part, 0).unwrap();
        // products of separated blocks vanish up to roundoff
        assert!(rep.ratio < 1e-12, "{rep:?}");
        assert!(!rep.degenerate);
    }
}
