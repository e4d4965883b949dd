use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringwave::equilibrium::interleave_counts;
use ringwave::spectrum::{eigenvalues_on_h, RingSystem};
use ringwave::stability::{
    critical_penetration, min_unstable_size, multi_phase_margin, tau0_bounds, two_phase_margin,
    MarginVerdict, MinUnstable,
};
use ringwave::LinearTrio;

fn random_trio(rng: &mut ChaCha8Rng, stable: bool) -> LinearTrio {
    let alpha: f64 = rng.gen_range(0.2..3.0);
    let gamma = rng.gen_range(0.05..1.0);
    let u = if stable {
        rng.gen_range(0.05..2.0)
    } else {
        rng.gen_range(-0.75..-0.05)
    };
    let beta = (2.0 * alpha * u + gamma * gamma + 2.0 * alpha).sqrt();
    LinearTrio::new(alpha, beta, gamma).unwrap()
}

fn reference() -> (LinearTrio, LinearTrio) {
    let g = 20.0 / (10.4 * 10.4);
    let slope = (4.0 + 40.0 / (10.4 * 10.4) - 7.28 / 4.0) / 2.0;
    (
        LinearTrio::new(4.0 * slope, 4.0 + g, g).unwrap(),
        LinearTrio::new(0.5 * slope, 0.5 + g, g).unwrap(),
    )
}

#[test]
fn lower_bound_below_upper_bound_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut violations = Vec::new();
    for k in 0..100 {
        let (t1, t2) = (random_trio(&mut rng, true), random_trio(&mut rng, false));
        let (lo, hi) = tau0_bounds(&t1, &t2).unwrap();
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            violations.push((k, lo, hi));
        }
    }
    assert!(
        violations.is_empty(),
        "B_l >= B_u for {} of 100 pairs: {violations:?}",
        violations.len()
    );
}

#[test]
fn lower_bound_never_exceeds_tau0() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let (t1, t2) = (random_trio(&mut rng, true), random_trio(&mut rng, false));
        let (lo, _) = tau0_bounds(&t1, &t2).unwrap();
        let r = critical_penetration(&t1, &t2).unwrap();
        assert!(lo > 0.0 && lo < 1.0);
        assert!(lo <= r.tau0 * (1.0 + 1e-12), "B_l = {lo}, τ₀ = {}", r.tau0);
    }
}

#[test]
fn negative_margin_means_every_ordering_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut checked = 0;
    for _ in 0..3 {
        let (t1, t2) = (random_trio(&mut rng, true), random_trio(&mut rng, false));
        for total in 2..=14usize {
            for n1 in 0..=total {
                let n2 = total - n1;
                let rep = two_phase_margin(&t1, &t2, n1 as f64, n2 as f64).unwrap();
                if rep.verdict != MarginVerdict::StableAllN {
                    continue;
                }
                let mut ring: Vec<LinearTrio> = interleave_counts(&[n1, n2])
                    .into_iter()
                    .map(|k| [t1, t2][k])
                    .collect();
                for _ in 0..20 {
                    ring.shuffle(&mut rng);
                    let a = eigenvalues_on_h(&RingSystem::new(ring.clone()).unwrap())
                        .unwrap()
                        .abscissa;
                    assert!(a < 0.0, "({n1},{n2}): abscissa {a:e}");
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 20, "only {checked} stable compositions");
}

#[test]
fn positive_margin_means_finite_unstable_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..5 {
        let (t1, t2) = (random_trio(&mut rng, true), random_trio(&mut rng, false));
        let tau0 = critical_penetration(&t1, &t2).unwrap().tau0;
        let rate = 0.5 * tau0;
        let rep = two_phase_margin(&t1, &t2, rate, 1.0 - rate).unwrap();
        assert!(rep.sup_margin > 0.0);
        let found = min_unstable_size(&[t1, t2], &[rate, 1.0 - rate], 1000).unwrap();
        assert!(matches!(found, MinUnstable::Found { .. }), "{found:?}");
    }
}

#[test]
fn sweep_brackets_reference_tau0() {
    let (t1, t2) = reference();
    let tau0 = critical_penetration(&t1, &t2).unwrap().tau0;
    let below = min_unstable_size(&[t1, t2], &[tau0 - 0.01, 1.01 - tau0], 2000).unwrap();
    assert!(matches!(below, MinUnstable::Found { .. }), "{below:?}");
    let above = min_unstable_size(&[t1, t2], &[tau0 + 0.01, 0.99 - tau0], 2000).unwrap();
    assert_eq!(above, MinUnstable::NotFoundBelowCap { cap: 2000 });
}

#[test]
fn margin_is_homogeneous_in_counts() {
    let (t1, t2) = reference();
    let a = multi_phase_margin(&[t1, t2], &[0.8, 0.2]).unwrap();
    let b = multi_phase_margin(&[t1, t2], &[80.0, 20.0]).unwrap();
    assert!((b.sup_margin - 100.0 * a.sup_margin).abs() <= 1e-9 * b.sup_margin.abs());
    assert_eq!(a.verdict, b.verdict);
}
