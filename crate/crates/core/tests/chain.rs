use ionsim::chain::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn modes(n: usize) -> (ChainGeometry, ModeData) {
    let cfg = TrapConfig::experiment(n);
    let geom = equilibrium_positions(n).unwrap();
    let m = transverse_modes(&cfg, &geom).unwrap();
    (geom, m)
}

#[test]
fn small_chain_positions_are_analytic() {
    assert_eq!(equilibrium_positions(1).unwrap().positions, vec![0.0]);
    let two = equilibrium_positions(2).unwrap().positions;
    let a = 2f64.powf(-2.0 / 3.0);
    assert!((two[0] + a).abs() < 1e-10 && (two[1] - a).abs() < 1e-10);
    let three = equilibrium_positions(3).unwrap().positions;
    let c = 1.25f64.cbrt();
    assert!((three[0] + c).abs() < 1e-10 && three[1].abs() < 1e-10 && (three[2] - c).abs() < 1e-10);
}

#[test]
fn com_and_tilt_mode_frequencies() {
    for n in 2..=9 {
        let (_, m) = modes(n);
        let cfg = TrapConfig::experiment(n);
        let tilt = (cfg.nu_x.powi(2) - cfg.nu_z.powi(2)).sqrt();
        assert!((m.frequencies[0] / cfg.nu_x - 1.0).abs() < 1e-9, "N = {n}");
        assert!((m.frequencies[1] / tilt - 1.0).abs() < 1e-9, "N = {n}");
        assert!(m.frequencies.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn single_ion_has_one_com_mode() {
    let (_, m) = modes(1);
    assert_eq!(m.frequencies.len(), 1);
    assert!((m.frequencies[0] - TrapConfig::experiment(1).nu_x).abs() < 1e-9);
    assert!((m.vectors[(0, 0)].abs() - 1.0).abs() < 1e-12);
}

#[test]
fn mode_vectors_are_orthonormal() {
    for n in 2..=9 {
        let (_, m) = modes(n);
        let gram = m.vectors.transpose() * &m.vectors;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-10, "N = {n}");
    }
}

#[test]
fn com_lamb_dicke_is_uniform_and_scales_as_inverse_sqrt_n() {
    let (_, m2) = modes(2);
    let eta2 = m2.lamb_dicke[(0, 0)].abs();
    for n in 2..=9 {
        let (_, m) = modes(n);
        let col: Vec<f64> = (0..n).map(|i| m.lamb_dicke[(i, 0)].abs()).collect();
        assert!(col.iter().all(|&e| (e - col[0]).abs() < 1e-12 * col[0]));
        let expected = eta2 * (2.0 / n as f64).sqrt();
        assert!((col[0] / expected - 1.0).abs() < 1e-9, "N = {n}");
    }
}

#[test]
fn couplings_are_symmetric_mirror_symmetric_and_ferromagnetic_above_com() {
    let (_, m) = modes(9);
    let j = coupling_matrix(&m, &[370.0], m.frequencies[0] + 30.0).unwrap();
    let v = j.matrix();
    for a in 0..9 {
        assert_eq!(v[(a, a)], 0.0);
        for b in 0..9 {
            assert_eq!(v[(a, b)], v[(b, a)]);
            assert!((v[(a, b)] - v[(8 - a, 8 - b)]).abs() < 1e-9 * j.max_abs());
            if a != b {
                assert!(v[(a, b)] > 0.0);
            }
        }
    }
    // Order of 1 kHz after the 1/N normalization.
    let per_n = j.mean_j() / 9.0;
    assert!((0.1..10.0).contains(&per_n), "J/N = {per_n}");
}

#[test]
fn detuning_between_com_and_tilt_gives_mixed_signs() {
    let (_, m) = modes(5);
    let mu = 0.5 * (m.frequencies[0] + m.frequencies[1]);
    let j = coupling_matrix(&m, &[370.0], mu).unwrap();
    assert!(j.matrix().iter().any(|&v| v < 0.0));
}

#[test]
fn two_ions_couple_ferromagnetically() {
    let (_, m) = modes(2);
    let j = coupling_matrix(&m, &[370.0], m.frequencies[0] + 63.0).unwrap();
    assert!(j.get(0, 1) > 0.0);
}

#[test]
fn resonant_detuning_is_an_error() {
    let (_, m) = modes(4);
    let err = coupling_matrix(&m, &[370.0], m.frequencies[2] + 0.1).unwrap_err();
    assert!(matches!(err, ionsim::Error::Resonance { mode: 3, .. }));
    assert!(err.is_config());
}

#[test]
fn per_ion_rabi_length_is_checked() {
    let (_, m) = modes(3);
    assert!(coupling_matrix(&m, &[1.0, 2.0], m.frequencies[0] + 30.0).is_err());
    assert!(coupling_matrix(&m, &[1.0, 2.0, 3.0], m.frequencies[0] + 30.0).is_ok());
}

#[test]
fn power_law_fit_recovers_synthetic_exponent() {
    let n = 9;
    let mut v = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let x = 3.2 / ((b - a) as f64).powf(1.7);
            v[(a, b)] = x;
            v[(b, a)] = x;
        }
    }
    let fit = fit_power_law(&CouplingMatrix::from_matrix(v).unwrap()).unwrap();
    assert!((fit.exponent - 1.7).abs() < 1e-12);
    assert!((fit.prefactor - 3.2).abs() < 1e-12);
    assert!(fit_power_law(&CouplingMatrix::uniform(2, 1.0)).is_none());
}

#[test]
fn range_grows_toward_dipolar_with_detuning() {
    let cfg = TrapConfig::experiment(9);
    let nu1 = cfg.nu_x;
    let scan = coupling_range_scan(&cfg, &[370.0], &[nu1 + 30.0, nu1 + 300.0, 2.0 * nu1, 10.0 * nu1]).unwrap();
    let alphas: Vec<f64> = scan.iter().map(|(_, f)| f.unwrap().exponent).collect();
    assert!(alphas.windows(2).all(|w| w[1] > w[0]), "{alphas:?}");
    assert!((alphas[3] - 3.0).abs() < 0.3);
    assert!(coupling_range_scan(&cfg, &[370.0], &[nu1 - 10.0]).is_err());
}

#[test]
fn unstable_aspect_ratio_is_rejected() {
    let mut cfg = TrapConfig::experiment(9);
    cfg.nu_x = 1.1 * cfg.nu_z;
    let geom = equilibrium_positions(9).unwrap();
    assert!(cfg.validate().is_err() || transverse_modes(&cfg, &geom).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positions_are_sorted_and_centered(n in 1usize..16) {
        let g = equilibrium_positions(n).unwrap();
        prop_assert!(g.positions.windows(2).all(|w| w[1] > w[0]));
        for k in 0..n {
            prop_assert!((g.positions[k] + g.positions[n - 1 - k]).abs() < 1e-9);
        }
        prop_assert!(g.residual() < 1e-9);
    }

    #[test]
    fn blue_detuned_couplings_are_positive(n in 2usize..10, offset in 5.0f64..2000.0, omega in 50.0f64..800.0) {
        let (_, m) = modes(n);
        let j = coupling_matrix(&m, &[omega], m.frequencies[0] + offset).unwrap();
        for a in 0..n {
            for b in a + 1..n {
                prop_assert!(j.get(a, b) > 0.0);
                prop_assert_eq!(j.get(a, b), j.get(b, a));
            }
        }
    }

    #[test]
    fn couplings_scale_with_rabi_squared(n in 2usize..8, omega in 10.0f64..500.0) {
        let (_, m) = modes(n);
        let mu = m.frequencies[0] + 40.0;
        let a = coupling_matrix(&m, &[omega], mu).unwrap();
        let b = coupling_matrix(&m, &[2.0 * omega], mu).unwrap();
        prop_assert!((b.mean_j() / a.mean_j() - 4.0).abs() < 1e-9);
    }
}
