mod common;

use common::brute_force_ground_state;
use ionsim::chain::CouplingMatrix;
use ionsim::dynamics::{run_ensemble, NoiseModel, RampSchedule, SimConfig};
use ionsim::observables::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dicke_matches_full_diagonalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.random_range(2..=6);
        let j = rng.random_range(0.3..3.0);
        let b = j * 10f64.powf(rng.random_range(-0.7..0.7));
        let dicke = dicke_ground_state(n, j, b).unwrap().distribution.p;
        let brute = brute_force_ground_state(n, j, b);
        for (a, c) in dicke.iter().zip(&brute) {
            assert!((a - c).abs() < 1e-8, "N = {n}, J = {j}, B = {b}: {dicke:?} vs {brute:?}");
        }
    }
}

#[test]
fn dicke_limits() {
    for n in [2, 5, 9, 40] {
        let strong = dicke_ground_state(n, 1.0, 1e4).unwrap();
        let op = scale_order_params(&strong.distribution).unwrap();
        assert!(op.g_scaled.abs() < 1e-3, "N = {n}: {}", op.g_scaled);
        let zero = dicke_ground_state(n, 1.0, 0.0).unwrap();
        let op = scale_order_params(&zero.distribution).unwrap();
        assert!((op.g_scaled - 1.0).abs() < 1e-12 && (op.p_fm - 1.0).abs() < 1e-12);
        assert!(strong.gap > 0.0);
    }
}

#[test]
fn scaling_identities() {
    for n in 2..=12 {
        let para = scale_order_params(&SpinDistribution::binomial(n)).unwrap();
        assert!(para.m_x_scaled.abs() < 1e-12 && para.g_scaled.abs() < 1e-12, "N = {n}");
        assert!((para.g - (3.0 - 2.0 / n as f64)).abs() < 1e-12);
        let fm = scale_order_params(&SpinDistribution::ferromagnetic(n)).unwrap();
        assert!(
            (fm.m_x_scaled - 1.0).abs() < 1e-12 && (fm.g_scaled - 1.0).abs() < 1e-12 && (fm.p_fm - 1.0).abs() < 1e-12
        );
    }
    let half = SpinDistribution::new(vec![0.25, 0.5, 0.25]).unwrap();
    assert!((magnetization(&half) - 0.5).abs() < 1e-12);
    assert!((binder_cumulant(&half).unwrap() - 2.0).abs() < 1e-12);
    assert!(scale_order_params(&SpinDistribution::binomial(1)).is_err());
}

#[test]
fn sharpening_with_system_size() {
    let grid = log_grid(0.05, 20.0, 40);
    let curves: Vec<_> = [2, 3, 5, 9, 100].iter().map(|&n| dicke_crossover(n, &grid).unwrap()).collect();
    let slopes = crossover_sharpness(&curves).unwrap();
    assert!(slopes.windows(2).all(|w| w[1].1 > w[0].1), "{slopes:?}");
    let big = crossing(&curves[4], 0.5).unwrap();
    assert!((0.8..1.2).contains(&big), "{big}");
}

#[test]
fn noiseless_oracle_matches_single_trajectory() {
    // With no noise and no flip error, every trajectory is the same pure state.
    for n in 2..=3 {
        let j = CouplingMatrix::uniform(n, 2.0);
        let ramp = RampSchedule::exponential(10.0, 80.0, 400.0, 0.0, 9);
        let oracle = lindblad_oracle(&j, &ramp, &NoiseModel::none(), 0.0).unwrap();
        let stats = run_ensemble(&SimConfig::new(j, ramp, NoiseModel::none()), 1, 0, 1).unwrap();
        for (d, p) in oracle.distributions.iter().zip(&stats.p) {
            for (a, b) in d.p.iter().zip(p) {
                assert!((a - b).abs() < 1e-7, "N = {n}: {a} vs {b}");
            }
        }
    }
    assert!(lindblad_oracle(
        &CouplingMatrix::uniform(4, 1.0),
        &RampSchedule::frozen(1.0, 1.0, 2),
        &NoiseModel::none(),
        0.0
    )
    .is_err());
}

fn random_distribution(n: usize, seed: u64) -> SpinDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..=n).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = w.iter().sum();
    SpinDistribution::new(w.into_iter().map(|x| x / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_parameters_match_moments(n in 2usize..13, seed in any::<u64>()) {
        let d = random_distribution(n, seed);
        let nf = n as f64;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for (s, p) in d.p.iter().enumerate() {
            let m = nf - 2.0 * s as f64;
            m1 += m.abs() * p;
            m2 += m * m * p;
            m4 += m.powi(4) * p;
        }
        let op = scale_order_params(&d).unwrap();
        prop_assert!((op.m_x - m1 / nf).abs() < 1e-12);
        prop_assert!((op.g - m4 / (m2 * m2)).abs() < 1e-12 * op.g.max(1.0));
        prop_assert!((op.p_fm - d.p[0] - d.p[n]).abs() < 1e-15);
        prop_assert!(op.g >= 1.0 - 1e-12);
    }

    #[test]
    fn dicke_ground_state_is_mirror_symmetric(n in 2usize..60, b in 0.01f64..20.0) {
        let d = dicke_ground_state(n, 1.0, b).unwrap().distribution;
        for s in 0..=n {
            prop_assert!((d.p[s] - d.p[n - s]).abs() < 1e-8);
        }
        prop_assert!((d.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
