//! Exact ground state for uniform couplings in the maximal total-spin sector.
//!
//! With `J_ij = J` the Hamiltonian is `-(J/N)(2 Sx^2 - N/2) - 2B Sy`. In the
//! Sx eigenbasis `|m>`, `m = s - N/2`, the first term is diagonal and `Sy`
//! couples neighbours with `<m+1|Sy|m> = sqrt(S(S+1) - m(m+1))/2`. The
//! Hamiltonian commutes with `m -> -m`; the ground state lives in the even
//! sector, which is diagonalized directly so the `B = 0` limit selects the
//! even GHZ combination.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::distribution::SpinDistribution;
use crate::error::{invalid, Result};

/// Largest Dicke dimension handled by dense diagonalization.
pub const MAX_DICKE_DIM: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeGroundState {
    pub distribution: SpinDistribution,
    /// Ground-state energy (kHz).
    pub energy: f64,
    /// Gap (kHz) to the lowest excited state in the same parity sector.
    pub gap: f64,
}

/// Full (N+1)-dimensional Dicke Hamiltonian, index `s = 0..N` (number of up spins).
pub fn dicke_hamiltonian(n: usize, j: f64, b: f64) -> DMatrix<f64> {
    let spin = n as f64 / 2.0;
    let mut h = DMatrix::zeros(n + 1, n + 1);
    for s in 0..=n {
        let m = s as f64 - spin;
        h[(s, s)] = -(j / n as f64) * (2.0 * m * m - n as f64 / 2.0);
        if s < n {
            let off = -b * (spin * (spin + 1.0) - m * (m + 1.0)).sqrt();
            h[(s, s + 1)] = off;
            h[(s + 1, s)] = off;
        }
    }
    h
}

pub fn dicke_ground_state(n: usize, j: f64, b: f64) -> Result<DickeGroundState> {
    if n == 0 {
        return invalid("N must be at least 1");
    }
    if n + 1 > MAX_DICKE_DIM {
        return invalid(format!("N = {n} exceeds the dense Dicke limit"));
    }
    if j < 0.0 || b < 0.0 {
        return invalid("J and B must be non-negative");
    }
    if j == 0.0 && b == 0.0 {
        // Fully degenerate: take the B -> 0+ limit of the paramagnet.
        return Ok(DickeGroundState { distribution: SpinDistribution::binomial(n), energy: 0.0, gap: 0.0 });
    }
    let h = dicke_hamiltonian(n, j, b);
    // Orthonormal basis of the even sector: (e_s + e_{N-s})/sqrt2 for s < N/2, plus e_{N/2}.
    let half = n / 2;
    let dim = half + 1;
    let mut v = DMatrix::zeros(n + 1, dim);
    for k in 0..dim {
        if 2 * k == n {
            v[(k, k)] = 1.0;
        } else {
            v[(k, k)] = std::f64::consts::FRAC_1_SQRT_2;
            v[(n - k, k)] = std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    let h_even = v.transpose() * &h * &v;
    let eig = SymmetricEigen::new(h_even);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));
    let ground = eig.eigenvectors.column(order[0]);
    let full = &v * ground;
    let mut p: Vec<f64> = full.iter().map(|a| a * a).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let gap = if dim > 1 { eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]] } else { f64::INFINITY };
    Ok(DickeGroundState { distribution: SpinDistribution { n, p, sem: None }, energy: eig.eigenvalues[order[0]], gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::scale_order_params;

    #[test]
    fn strong_field_is_binomial() {
        let gs = dicke_ground_state(6, 1.0, 1e6).unwrap();
        let binom = SpinDistribution::binomial(6);
        for (a, b) in gs.distribution.p.iter().zip(&binom.p) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!(scale_order_params(&gs.distribution).unwrap().g_scaled.abs() < 1e-4);
    }

    #[test]
    fn zero_field_is_even_ghz() {
        for n in [2, 5, 8] {
            let gs = dicke_ground_state(n, 1.0, 0.0).unwrap();
            assert!((gs.distribution.p[0] - 0.5).abs() < 1e-12);
            assert!((gs.distribution.p[n] - 0.5).abs() < 1e-12);
            let op = scale_order_params(&gs.distribution).unwrap();
            assert!((op.g_scaled - 1.0).abs() < 1e-12);
            // Next even level: m = +-(S-1), gap 2J(N-1)/N.
            assert!((gs.gap - 2.0 * (n as f64 - 1.0) / n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_state_is_mirror_symmetric() {
        let gs = dicke_ground_state(9, 1.0, 0.7).unwrap();
        for s in 0..=9 {
            assert!((gs.distribution.p[s] - gs.distribution.p[9 - s]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_matrix_ground_energy_agrees() {
        let (n, j, b) = (7, 1.3, 0.9);
        let gs = dicke_ground_state(n, j, b).unwrap();
        let e = SymmetricEigen::new(dicke_hamiltonian(n, j, b)).eigenvalues.min();
        assert!((gs.energy - e).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(dicke_ground_state(0, 1.0, 1.0).is_err());
        assert!(dicke_ground_state(3, -1.0, 1.0).is_err());
        assert!(dicke_ground_state(MAX_DICKE_DIM, 1.0, 1.0).is_err());
    }
}
