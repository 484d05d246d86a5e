#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// P(s) of the ground state of `-(J/N) sum_{i<j} sx sx - B sum sy` by dense
/// diagonalization over all 2^N states. A rotation about X maps sy to sz and leaves
/// the measured sx untouched, so the real z-basis form is used, then
/// Walsh-Hadamard transformed to the x basis.
pub fn brute_force_ground_state(n: usize, j: f64, b: f64) -> Vec<f64> {
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for idx in 0..dim {
        let ups = n - (idx as u32).count_ones() as usize;
        h[(idx, idx)] = -b * (ups as f64 - (n - ups) as f64);
        for p in 0..n {
            for q in p + 1..n {
                let flipped = idx ^ (1 << p) ^ (1 << q);
                h[(flipped, idx)] -= j / n as f64;
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let k = (0..dim).min_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c])).unwrap();
    let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let mut half = 1;
    while half < dim {
        for base in (0..dim).step_by(2 * half) {
            for i in base..base + half {
                let (a, c) = (v[i], v[i + half]);
                v[i] = (a + c) * std::f64::consts::FRAC_1_SQRT_2;
                v[i + half] = (a - c) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        half *= 2;
    }
    let mut p = vec![0.0; n + 1];
    for (idx, a) in v.iter().enumerate() {
        // Bit set means down along X.
        p[n - (idx as u32).count_ones() as usize] += a * a;
    }
    p
}
