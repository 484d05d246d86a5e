//! Spin state storage in the sigma_x product basis.
//!
//! Bit `k` of a basis index refers to `active[k]`; a clear bit is |up> (sigma_x = +1),
//! a set bit is |down>. In this basis sigma_x is diagonal, sigma_y acts as the
//! standard Pauli Y and sigma_z as minus Pauli X, so
//! `|up_z> = (|up> - |down>)/sqrt 2` and `|down_z> = (|up> + |down>)/sqrt 2`.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::chain::CouplingMatrix;
use crate::error::{Error, Result};

/// Angular factor converting kHz to rad/us.
pub const KHZ_TO_RAD_PER_US: f64 = 2.0 * std::f64::consts::PI * 1e-3;

/// A pure state of the ions still in the qubit space, plus those factored out by leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n_total: usize,
    pub(crate) active: Vec<usize>,
    pub(crate) amplitudes: Vec<Complex64>,
    pub(crate) leaked: Vec<usize>,
}

impl SpinState {
    /// Builds a state over all `n` ions from raw sigma_x-basis amplitudes.
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: amplitudes.len() });
        }
        Ok(Self { n_total: n, active: (0..n).collect(), amplitudes, leaked: Vec::new() })
    }

    /// Product state with spin `k` along +Y when `signs[k]` is true, -Y otherwise.
    pub fn y_product(signs: &[bool]) -> Self {
        let n = signs.len();
        let amplitudes = (0..1usize << n)
            .map(|idx| {
                signs.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (k, &plus)| {
                    let down = Complex64::new(0.0, if plus { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 });
                    acc * if idx >> k & 1 == 0 { Complex64::new(FRAC_1_SQRT_2, 0.0) } else { down }
                })
            })
            .collect();
        Self { n_total: n, active: (0..n).collect(), amplitudes, leaked: Vec::new() }
    }

    /// (|up...up> + |down...down>)/sqrt 2.
    pub fn ghz(n: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amplitudes[(1 << n) - 1] += Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { n_total: n, active: (0..n).collect(), amplitudes, leaked: Vec::new() }
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn leaked(&self) -> &[usize] {
        &self.leaked
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        if s > 0.0 {
            let inv = 1.0 / s;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// P(s), s = 0..N: probability that `s` ions read out up along X, with
    /// leaked ions counted as up.
    pub fn spin_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_total + 1];
        let a = self.active.len() as u32;
        let offset = self.leaked.len();
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let ups = (a - (idx as u32).count_ones()) as usize;
            p[ups + offset] += amp.norm_sqr();
        }
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|v| *v /= total);
        }
        p
    }

    /// <sigma_y> of the ion at active position `k`, normalized.
    pub fn expect_sigma_y(&self, k: usize) -> f64 {
        let mask = 1usize << k;
        let mut acc = 0.0;
        for idx in 0..self.amplitudes.len() {
            if idx & mask == 0 {
                // <psi| Y |psi> = 2 Im(conj(a0) a1) pairwise for Y = [[0,-i],[i,0]].
                let a0 = self.amplitudes[idx];
                let a1 = self.amplitudes[idx | mask];
                acc += 2.0 * (a0.conj() * a1).im;
            }
        }
        acc / self.norm_sqr()
    }

    /// <sigma_x> of the ion at active position `k`, normalized.
    pub fn expect_sigma_x(&self, k: usize) -> f64 {
        let mask = 1usize << k;
        let s: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| if idx & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        s / self.norm_sqr()
    }
}

/// The +Y product state, with each spin independently flipped to -Y with
/// probability `flip_error`.
pub fn initial_state<R: Rng + ?Sized>(n: usize, flip_error: f64, rng: &mut R) -> Result<SpinState> {
    if !(0.0..=1.0).contains(&flip_error) {
        return Err(Error::InvalidInput(format!("flip_error {flip_error} outside [0, 1]")));
    }
    let signs: Vec<bool> = (0..n).map(|_| rng.random::<f64>() >= flip_error).collect();
    Ok(SpinState::y_product(&signs))
}

/// Diagonal Ising energies (kHz) for every basis index over the given active ions:
/// `-(1/N) sum_{i<j} J_ij x_i x_j`, with `N` the full chain length.
pub fn ising_diagonal(j: &CouplingMatrix, active: &[usize]) -> Vec<f64> {
    let n_total = j.n() as f64;
    let a = active.len();
    let pairs: Vec<(usize, usize, f64)> = (0..a)
        .flat_map(|p| (p + 1..a).map(move |q| (p, q)))
        .map(|(p, q)| (p, q, j.get(active[p], active[q]) / n_total))
        .collect();
    (0..1usize << a)
        .map(|idx| pairs.iter().map(|&(p, q, c)| if (idx >> p ^ idx >> q) & 1 == 0 { -c } else { c }).sum())
        .collect()
}

/// Accumulates `B * sum_k sigma_y^k psi` scaled by `-i * scale` into `out`.
/// With `-i * Y` real in this basis the update is `out[up] += s psi[down]`,
/// `out[down] -= s psi[up]` where `s = scale * B`.
#[inline]
pub(crate) fn add_field_term(psi: &[Complex64], out: &mut [Complex64], n_active: usize, coeff: f64) {
    // The two lowest qubits pair neighbouring amplitudes; unrolled so no short inner loop remains.
    if n_active >= 1 {
        for (p, o) in psi.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            o[0] += p[1] * coeff;
            o[1] -= p[0] * coeff;
        }
    }
    if n_active >= 2 {
        for (p, o) in psi.chunks_exact(4).zip(out.chunks_exact_mut(4)) {
            o[0] += p[2] * coeff;
            o[1] += p[3] * coeff;
            o[2] -= p[0] * coeff;
            o[3] -= p[1] * coeff;
        }
    }
    for k in 2..n_active {
        let mask = 1usize << k;
        for (p, o) in psi.chunks_exact(2 * mask).zip(out.chunks_exact_mut(2 * mask)) {
            let (p0, p1) = p.split_at(mask);
            let (o0, o1) = o.split_at_mut(mask);
            for (((a0, a1), b0), b1) in o0.iter_mut().zip(o1.iter_mut()).zip(p0).zip(p1) {
                *a0 += *b1 * coeff;
                *a1 -= *b0 * coeff;
            }
        }
    }
}

/// `-i 2pi H |psi>` in rad/us for `H = -(1/N) sum J_ij sx sx - B sum sy` (kHz).
/// `j` must already be restricted to the state's active ions via [`ising_diagonal`];
/// this convenience form builds the diagonal on the fly.
pub fn hamiltonian_apply(state: &SpinState, j: &CouplingMatrix, b: f64) -> Result<Vec<Complex64>> {
    if j.n() != state.n_total {
        return Err(Error::DimensionMismatch { expected: state.n_total, found: j.n() });
    }
    let diag = ising_diagonal(j, &state.active);
    let mut out: Vec<Complex64> =
        state.amplitudes.iter().zip(&diag).map(|(a, e)| *a * Complex64::new(0.0, -KHZ_TO_RAD_PER_US * e)).collect();
    // -i * w * (-B) * Y = w * B * (-i Y) ... with -iY = [[0,-1],[1,0]] the
    // signed real update is handled by add_field_term.
    add_field_term(&state.amplitudes, &mut out, state.active.len(), KHZ_TO_RAD_PER_US * b);
    Ok(out)
}

/// <psi|H|psi> / <psi|psi> in kHz.
pub fn energy(state: &SpinState, j: &CouplingMatrix, b: f64) -> Result<f64> {
    let d = hamiltonian_apply(state, j, b)?;
    // d = -i w H psi  =>  <psi|d> = -i w <H>
    let inner: Complex64 = state.amplitudes.iter().zip(&d).map(|(a, x)| a.conj() * x).sum();
    Ok(-inner.im / KHZ_TO_RAD_PER_US / state.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_plus_y_amplitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = initial_state(1, 0.0, &mut rng).unwrap();
        assert!((s.amplitudes[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn flip_error_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let plus = initial_state(2, 0.0, &mut rng).unwrap();
        let minus = initial_state(2, 1.0, &mut rng).unwrap();
        for k in 0..2 {
            assert!((plus.expect_sigma_y(k) - 1.0).abs() < 1e-14);
            assert!((minus.expect_sigma_y(k) + 1.0).abs() < 1e-14);
        }
        assert!(initial_state(2, 1.5, &mut rng).is_err());
    }

    #[test]
    fn single_spin_precession_rate() {
        // H = -B sy; for |up_x> = (1,0): d psi/dt = -i w (-B) Y (1,0) = i w B (0, i) = (0, -w B).
        let s = SpinState::from_amplitudes(1, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let j = CouplingMatrix::uniform(1, 0.0);
        let d = hamiltonian_apply(&s, &j, 1.0).unwrap();
        assert!(d[0].norm() < 1e-15);
        assert!((d[1] - c(-KHZ_TO_RAD_PER_US, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_spin_ising_spectrum() {
        // Oracle: explicit 4x4 diagonal of -(J/2) sx sx.
        let jv = 3.0;
        let j = CouplingMatrix::uniform(2, jv);
        let diag = ising_diagonal(&j, &[0, 1]);
        let expected = [-jv / 2.0, jv / 2.0, jv / 2.0, -jv / 2.0];
        for (a, b) in diag.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn ghz_is_eigenstate_without_field() {
        let s = SpinState::ghz(3);
        let j = CouplingMatrix::uniform(3, 2.0);
        let d = hamiltonian_apply(&s, &j, 0.0).unwrap();
        let e = energy(&s, &j, 0.0).unwrap();
        for (di, ai) in d.iter().zip(s.amplitudes()) {
            let expected = *ai * c(0.0, -KHZ_TO_RAD_PER_US * e);
            assert!((di - expected).norm() < 1e-14);
        }
        // -(J/N) * 3 pairs = -2
        assert!((e + 2.0).abs() < 1e-12);
    }

    #[test]
    fn plus_y_energy_is_field_only() {
        let s = SpinState::y_product(&[true, true, true]);
        let j = CouplingMatrix::uniform(3, 1.0);
        let e = energy(&s, &j, 2.0).unwrap();
        assert!((e + 6.0).abs() < 1e-12);
    }

    #[test]
    fn binomial_distribution_of_plus_y() {
        let s = SpinState::y_product(&[true; 4]);
        let p = s.spin_distribution();
        let expected = [1.0, 4.0, 6.0, 4.0, 1.0].map(|v| v / 16.0);
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = SpinState::ghz(2);
        assert!(hamiltonian_apply(&s, &CouplingMatrix::uniform(3, 1.0), 0.0).is_err());
        assert!(SpinState::from_amplitudes(2, vec![c(1.0, 0.0)]).is_err());
    }
}
