use std::f64::consts::TAU;

use carleson_kit::construction::{
    build_contour_nets, condition_sums, epsilon_net_split, ConstructionConfig, EpsilonNet,
};
use carleson_kit::contour::{representing_measure, select_bad_intervals, BoundedFunction};
use carleson_kit::disk::{quasi_uniform_grid, Arc};
use carleson_kit::hardy::{garsia_sup, hankel_embedding_constant, HardyFunction};
use carleson_kit::linalg::CVector;
use carleson_kit::model_space::{MatrixEntry, MatrixFunction};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, r_max: f64) -> Complex64 {
    Complex64::from_polar(
        r_max * rng.random::<f64>().sqrt(),
        TAU * rng.random::<f64>(),
    )
}

#[test]
fn garsia_and_hankel_constants_are_comparable() {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let grid = quasi_uniform_grid(7);
    let mut worst: f64 = 1.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=8);
        let family: Vec<HardyFunction> = (0..n)
            .map(|_| {
                let deg = rng.random_range(1..=16);
                HardyFunction::new(
                    (0..=deg)
                        .map(|_| {
                            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        })
                        .collect(),
                )
            })
            .collect();
        let (garsia, _) = garsia_sup(&family, &grid).unwrap();
        let hankel = hankel_embedding_constant(&family, 64);
        worst = worst.max(garsia / hankel).max(hankel / garsia);
    }
    assert!(worst <= 20.0, "worst ratio {worst}");
}

#[test]
fn bad_intervals_cover_every_heavy_dyadic_arc() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut heavy = 0;
    for _ in 0..10 {
        let zeros: Vec<Complex64> = (0..12).map(|_| random_point(&mut rng, 0.97)).collect();
        let phi = BoundedFunction::blaschke(&zeros).unwrap();
        let nu = representing_measure(&phi);
        let base = Arc::dyadic(3, rng.random_range(0..8));
        let m = 2.0;
        let bad = select_bad_intervals(&nu, &base, m, 14);
        for (i, a) in bad.selected.iter().enumerate() {
            for b in &bad.selected[i + 1..] {
                let overlap = a.contains_arc(b) || b.contains_arc(a);
                assert!(!overlap, "selected arcs {a:?} and {b:?} are nested");
            }
        }
        let five = base.scaled(5.0);
        for depth in 0..=10u32 {
            for index in 0..(1u64 << depth) {
                let j = Arc::dyadic(depth, index);
                if five.contains_arc(&j) && nu.square_mass(&j) > m * j.normalized_length() {
                    heavy += 1;
                    assert!(
                        bad.components.iter().any(|c| c.contains_arc(&j)),
                        "heavy arc at depth {depth} index {index} is not covered"
                    );
                }
            }
        }
    }
    assert!(heavy > 0);
}

#[test]
fn split_preserves_zeros_and_hypothesis() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = ConstructionConfig::new(0.05, 0.1).unwrap();
    let entry = |rng: &mut ChaCha8Rng| MatrixEntry::blaschke(vec![random_point(rng, 0.8)]);
    let family: Vec<MatrixFunction> = (0..3)
        .map(|_| {
            MatrixFunction::new(
                2,
                2,
                vec![
                    entry(&mut rng),
                    MatrixEntry::constant(Complex64::new(0.0, 0.0)),
                    entry(&mut rng),
                    entry(&mut rng),
                ],
            )
            .unwrap()
        })
        .collect();
    let ps = build_contour_nets(&family, &cfg).unwrap();
    let net = EpsilonNet::build(2, ps.epsilon).unwrap();
    let split = epsilon_net_split(&ps, &family, &net).unwrap();
    assert!(split.nets_valid());
    assert!(split.split_is_partition());
    for m in &split.members {
        let mut all: Vec<Complex64> = (0..split.part_count())
            .flat_map(|k| m.part_zeros(k))
            .collect();
        let mut original = m.zeros();
        let key = |z: &Complex64| (z.re.to_bits(), z.im.to_bits());
        all.sort_by_key(key);
        original.sort_by_key(key);
        assert_eq!(all, original);
        for p in &m.points {
            let part_residual = p.part_residual.expect("every point is assigned");
            assert!(part_residual <= p.residual + split.epsilon + 1e-12);
            assert!(part_residual < 2.0 * split.epsilon);
        }
    }
    let blaschke = split.blaschke_products().unwrap();
    let parts: Vec<_> = (0..split.part_count())
        .map(|k| split.part_family(k).unwrap())
        .collect();
    let directions: Vec<CVector> = net
        .vectors
        .iter()
        .map(|v| CVector::from_column_slice(v))
        .collect();
    let sums = condition_sums(
        &family,
        &blaschke,
        &parts,
        &quasi_uniform_grid(4),
        &directions,
    )
    .unwrap();
    assert!(sums.split_dominance);
    assert_eq!(sums.split_violations, 0);
}
