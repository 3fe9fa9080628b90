use std::f64::consts::TAU;

use nsbesov::criterion::{assemble_lhs, rescale};
use nsbesov::heat::heat_evolve;
use nsbesov::littlewood_paley::{besov_norm, block, vector_besov_norm, BesovIndex, DyadicPartition};
use nsbesov::paraproduct::paraproduct;
use nsbesov::random::{random_divergence_free, random_scalar, RandomFieldConfig};
use nsbesov::spectral::{derivative, divergence, leray_project, spectral_energy};
use nsbesov::{Axis, FrequencyLattice, ScalarField, VelocityField};
use proptest::prelude::*;

fn partition(n: usize) -> DyadicPartition {
    DyadicPartition::new(&FrequencyLattice::cubic(n, TAU).unwrap())
}

fn scalar(part: &DyadicPartition, seed: u64) -> ScalarField {
    random_scalar(part, seed, &RandomFieldConfig::default()).0
}

/// Random field whose components need not be divergence-free.
fn vector(part: &DyadicPartition, seed: u64) -> VelocityField {
    VelocityField::new([0, 1, 2].map(|i| scalar(part, seed.wrapping_mul(3).wrapping_add(i)))).unwrap()
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![1.0..8.0f64, Just(f64::INFINITY)]
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn parseval(seed in any::<u64>()) {
        let f = scalar(&partition(16), seed);
        let lat = f.lattice();
        let physical: f64 = f.physical().iter().map(|x| x * x).sum::<f64>() * lat.cell_volume();
        let spectral = spectral_energy(&f);
        prop_assert!((physical - spectral).abs() <= 1e-12 * spectral.max(1e-300));
    }

    #[test]
    fn leray_is_an_idempotent_projection(seed in any::<u64>()) {
        let u = vector(&partition(16), seed);
        let p = leray_project(&u);
        let scale = u.max_abs();
        prop_assert!(leray_project(&p).max_abs_diff(&p).unwrap() <= 1e-12 * scale);
        prop_assert!(divergence(&p).max_abs() <= 1e-11 * scale);
    }

    #[test]
    fn derivatives_commute_with_leray(seed in any::<u64>(), axis in 0usize..3) {
        let u = vector(&partition(16), seed);
        let a = Axis::from_number(axis + 1).unwrap();
        let left = leray_project(&u.map(|c| derivative(c, a)));
        let right = leray_project(&u).map(|c| derivative(c, a));
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-11 * left.max_abs().max(1.0));
    }

    #[test]
    fn paraproduct_is_bilinear(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let part = partition(16);
        let (f, g, h) = (scalar(&part, seed), scalar(&part, seed ^ 1), scalar(&part, seed ^ 2));
        let mix = f.combine(a, &g, b).unwrap();
        let left = paraproduct(&mix, &h, &part).unwrap();
        let right = paraproduct(&f, &h, &part).unwrap().combine(a, &paraproduct(&g, &h, &part).unwrap(), b).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12 * left.max_abs().max(1.0));
        let left = paraproduct(&h, &mix, &part).unwrap();
        let right = paraproduct(&h, &f, &part).unwrap().combine(a, &paraproduct(&h, &g, &part).unwrap(), b).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12 * left.max_abs().max(1.0));
    }

    #[test]
    fn besov_norm_decreases_in_r(seed in any::<u64>(), s in -1.5..1.5f64, p in exponent(), r1 in exponent(), r2 in exponent()) {
        let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let part = partition(16);
        let f = scalar(&part, seed);
        let lo = besov_norm(&f, BesovIndex::new(s, p, r2).unwrap(), &part).unwrap();
        let hi = besov_norm(&f, BesovIndex::new(s, p, r1).unwrap(), &part).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn heat_semigroup(seed in any::<u64>(), s in 0.0..0.5f64, t in 0.0..0.5f64) {
        let f = scalar(&partition(16), seed);
        let two_steps = heat_evolve(&heat_evolve(&f, s).unwrap(), t).unwrap();
        let one_step = heat_evolve(&f, s + t).unwrap();
        prop_assert!(two_steps.max_abs_diff(&one_step).unwrap() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn heat_commutes_with_blocks(seed in any::<u64>(), t in 0.0..0.3f64, j in 0i32..3) {
        let part = partition(16);
        let f = scalar(&part, seed);
        let left = block(&heat_evolve(&f, t).unwrap(), j, &part);
        let right = heat_evolve(&block(&f, j, &part), t).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn critical_norm_is_scale_invariant(seed in any::<u64>(), p in 3.1..5.9f64, k in -2i32..3) {
        let part = partition(16);
        let u = random_divergence_free(&part, seed, &RandomFieldConfig::default());
        let idx = BesovIndex::critical(p).unwrap();
        let before = vector_besov_norm(&u, idx, &part).unwrap();
        let v = rescale(&u, 2f64.powi(k)).unwrap();
        let after = vector_besov_norm(&v, idx, &DyadicPartition::new(v.lattice())).unwrap();
        prop_assert!((after - before).abs() <= 1e-10 * before);
    }

    #[test]
    fn criterion_lhs_grows_with_each_factor(
        base in prop::array::uniform4(0.0..2.0f64),
        bump in 0.0..1.0f64,
        which in 0usize..4,
        c in 0.1..3.0f64,
    ) {
        let mut raised = base;
        raised[which] += bump;
        let lhs = |x: [f64; 4]| assemble_lhs(x[0], x[1], x[2], x[3], c);
        prop_assert!(lhs(raised) >= lhs(base));
    }
}
