use num_complex::Complex64;
use proptest::prelude::*;
use ringwave::spectrum::{char_poly_eval, RingSystem};
use ringwave::stability::{log_gain, round_counts};
use ringwave::{
    equilibrium_from_length, equilibrium_from_velocity, CarFollowingModel, Composition, LinearTrio,
    PopulationSpec, VelocityPreference,
};

fn trio() -> impl Strategy<Value = LinearTrio> {
    (0.1..4.0f64, 0.05..1.5f64, -0.9..3.0f64).prop_map(|(alpha, gamma, u)| {
        let beta = (2.0 * alpha * u + gamma * gamma + 2.0 * alpha).sqrt();
        LinearTrio::new(alpha, beta.max(gamma * 1.0001), gamma).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_preserve_total(rates in prop::collection::vec(0.01..1.0f64, 1..5), total in 1usize..500) {
        let counts = round_counts(&rates, total);
        prop_assert_eq!(counts.iter().sum::<usize>(), total);
        let sum: f64 = rates.iter().sum();
        for (c, r) in counts.iter().zip(&rates) {
            prop_assert!((*c as f64 - r / sum * total as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn length_round_trip(v in 0.5..8.0f64, n1 in 1usize..30, n2 in 1usize..30, a2 in 0.2..3.0f64) {
        let p = VelocityPreference::new(9.0, 4.5, 2.2).unwrap();
        let comp = Composition::interleaved(vec![
            PopulationSpec::new(1, CarFollowingModel::bando_ftl(2.0, 10.0, p).unwrap(), n1),
            PopulationSpec::new(2, CarFollowingModel::bando_ftl(a2, 5.0, p).unwrap(), n2),
        ]).unwrap();
        let eq = equilibrium_from_velocity(&comp, v).unwrap();
        let back = equilibrium_from_length(&comp, eq.length).unwrap();
        prop_assert!((back.v_bar - v).abs() <= 1e-6);
    }

    #[test]
    fn char_poly_ignores_ordering(trios in prop::collection::vec(trio(), 2..12), re in -2.0..2.0f64, im in -2.0..2.0f64, k in 0usize..12) {
        let a = RingSystem::new(trios.clone()).unwrap();
        let mut rotated = trios.clone();
        rotated.reverse();
        rotated.rotate_left(k % trios.len());
        let b = RingSystem::new(rotated).unwrap();
        let z = Complex64::new(re, im);
        let (pa, pb) = (char_poly_eval(&a, z), char_poly_eval(&b, z));
        prop_assert!((pa - pb).norm() <= 1e-9 * (1.0 + pa.norm()));
    }

    #[test]
    fn log_gain_is_per_vehicle_gain_on_imaginary_axis(t in trio(), x in 1e-3..20.0f64) {
        let z = Complex64::new(0.0, x);
        let num = (z * t.gamma + t.alpha).norm_sqr();
        let den = (z * z + z * t.beta + t.alpha).norm_sqr();
        let direct = (num / den).ln();
        prop_assert!((log_gain(&t, x * x).unwrap() - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
    }
}
