use bubble_reduce_core::ball::{BallDomain, PlacementK};
use bubble_reduce_core::critical::Classification;
use bubble_reduce_core::energy::{energy_functional, BubbleAtom, Configuration};
use bubble_reduce_core::integrals::{expansion_constants, Variant};
use bubble_reduce_core::profiles::standard_energy;
use bubble_reduce_core::quadrature::QuadratureSpec;
use bubble_reduce_core::reduced::{critical_point, thm12_profile, ReducedPoint, Regime, SignPattern};

#[test]
fn polygon_scales_are_a_critical_point_of_the_full_energy() {
    let n = 8;
    let k = 3;
    let c = expansion_constants(n, 1.0, k, Variant::Multipoint, &QuadratureSpec::default()).unwrap();
    let p = thm12_profile(n, k, 0.7, &c).unwrap();
    let centers = PlacementK::new(n, k, 0.7).unwrap().centers;
    let mut lambdas = vec![p.lambda1; k];
    lambdas.push(p.lambda_bar);
    let point = ReducedPoint { lambdas, centers, regime: Regime::Thm12 };
    let ball = BallDomain::new(n).unwrap();
    let cp = critical_point(&ball, &SignPattern::thm12(k), &point, &c).unwrap();
    assert!(cp.grad_norm <= 1e-9 * cp.value.abs());
    assert!((cp.value - p.nu).abs() <= 1e-11 * p.nu.abs());
    assert_eq!(cp.classification, Classification::LocalMin);
}

#[test]
fn small_centred_bubble_nearly_saturates_sobolev() {
    let n = 7;
    let config = Configuration {
        n,
        mu: 0.0,
        epsilon: 0.0,
        atoms: vec![BubbleAtom::Standard { sign: 1.0, delta: 0.05, center: vec![0.0; n] }],
    };
    let e = energy_functional(&config, &QuadratureSpec::default()).unwrap();
    let s = standard_energy(n);
    assert!(e.quadratic < s && e.quadratic > 0.999 * s);
    assert!(e.critical_norm < s / (2.0 * n as f64 / (n as f64 - 2.0)));
    // the norm loses twice what the quadratic part loses, so J sits just above S/N
    let level = s / n as f64;
    assert!(e.total > level && e.total < 1.001 * level);
}
