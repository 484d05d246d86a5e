//! Density-matrix reference for the trajectory noise model, N <= 3.
//!
//! Each ion is a three-level system {up_x, down_x, leaked}. The jump
//! operators are exactly those of the trajectory unraveling:
//! `sqrt(g_se p_b) |r_b><chi|` with `<chi| = <up_z| + <down_z|` and reset
//! states `|down_z>`, `|up_z>`, `|leaked>`, plus `sqrt(g_deph) sigma_x`.
//! Leaked ions carry no Hamiltonian terms and read out as up.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::distribution::{scale_order_params, OrderParams, SpinDistribution};
use crate::chain::CouplingMatrix;
use crate::dynamics::{step_at, NoiseModel, RampSchedule, KHZ_TO_RAD_PER_US};
use crate::error::{invalid, Error, Result};

pub const MAX_ORACLE_IONS: usize = 3;

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladSeries {
    pub sample_times: Vec<f64>,
    pub distributions: Vec<SpinDistribution>,
    /// Empty for N = 1 (no Binder scaling).
    pub params: Vec<OrderParams>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Embeds a single-ion 3x3 operator acting on `ion` into the 3^n space.
fn embed(op: &CMat, ion: usize, n: usize) -> CMat {
    let dim = 3usize.pow(n as u32);
    let stride = 3usize.pow(ion as u32);
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let lc = (col / stride) % 3;
        let base = col - lc * stride;
        for lr in 0..3 {
            let v = op[(lr, lc)];
            if v != c(0.0, 0.0) {
                out[(base + lr * stride, col)] = v;
            }
        }
    }
    out
}

fn level(idx: usize, ion: usize) -> usize {
    (idx / 3usize.pow(ion as u32)) % 3
}

struct Liouvillian {
    ising: CMat,
    field: CMat,
    half_decay: CMat,
    jumps: Vec<CMat>,
}

impl Liouvillian {
    fn new(j: &CouplingMatrix, noise: &NoiseModel) -> Self {
        let n = j.n();
        let dim = 3usize.pow(n as u32);
        let x_of = |l: usize| [1.0, -1.0, 0.0][l];
        let mut ising = CMat::zeros(dim, dim);
        for idx in 0..dim {
            let mut e = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    e -= j.get(p, q) / n as f64 * x_of(level(idx, p)) * x_of(level(idx, q));
                }
            }
            ising[(idx, idx)] = c(e, 0.0);
        }
        let sy = CMat::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0),
                c(0.0, -1.0),
                c(0.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let mut field = CMat::zeros(dim, dim);
        for ion in 0..n {
            field -= embed(&sy, ion, n);
        }

        let gs = noise.gamma_se * 1e-3;
        let gd = noise.gamma_deph * 1e-3;
        let b = noise.branch;
        let mut singles = Vec::new();
        let mut one = |entries: &[(usize, usize, f64)], rate: f64| {
            if rate > 0.0 {
                let mut m = CMat::zeros(3, 3);
                for &(r, col, v) in entries {
                    m[(r, col)] = c(v * rate.sqrt(), 0.0);
                }
                singles.push(m);
            }
        };
        // |down_z><chi| = (|up_x> + |down_x>) <up_x|, |up_z><chi| = (|up_x> - |down_x>) <up_x|.
        one(&[(0, 0, 1.0), (1, 0, 1.0)], gs * b.down);
        one(&[(0, 0, 1.0), (1, 0, -1.0)], gs * b.up);
        one(&[(2, 0, std::f64::consts::SQRT_2)], gs * b.leak);
        one(&[(0, 0, 1.0), (1, 1, -1.0)], gd);

        let jumps: Vec<CMat> = (0..n).flat_map(|ion| singles.iter().map(move |s| embed(s, ion, n))).collect();
        let mut half_decay = CMat::zeros(dim, dim);
        for l in &jumps {
            half_decay += l.adjoint() * l * c(0.5, 0.0);
        }
        Self { ising, field, half_decay, jumps }
    }

    fn rhs(&self, b: f64, rho: &CMat) -> CMat {
        // K = -i w H - G/2;  d rho = K rho + rho K^dag + sum L rho L^dag.
        let h = &self.ising + &self.field * c(b, 0.0);
        let k = &h * c(0.0, -KHZ_TO_RAD_PER_US) - &self.half_decay;
        let kr = &k * rho;
        let mut out = &kr + kr.adjoint();
        for l in &self.jumps {
            out += l * rho * l.adjoint();
        }
        out
    }
}

fn initial_density(n: usize, flip_error: f64) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [c(s, 0.0), c(0.0, s), c(0.0, 0.0)];
    let minus = [c(s, 0.0), c(0.0, -s), c(0.0, 0.0)];
    let mut single = CMat::zeros(3, 3);
    for r in 0..3 {
        for col in 0..3 {
            single[(r, col)] =
                plus[r] * plus[col].conj() * (1.0 - flip_error) + minus[r] * minus[col].conj() * flip_error;
        }
    }
    let mut rho = CMat::from_element(1, 1, c(1.0, 0.0));
    for _ in 0..n {
        // Ion k is the k-th base-3 digit, so new ions are the most significant factor.
        rho = single.kronecker(&rho);
    }
    rho
}

fn distribution(rho: &CMat, n: usize) -> Result<SpinDistribution> {
    let mut p = vec![0.0; n + 1];
    for idx in 0..rho.nrows() {
        let ups = (0..n).filter(|&ion| level(idx, ion) != 1).count();
        p[ups] += rho[(idx, idx)].re;
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v = v.max(0.0) / total);
    SpinDistribution::new(p)
}

/// Integrates the master equation through the ramp and reports P(s) and
/// order parameters at every sample time.
pub fn lindblad_oracle(
    j: &CouplingMatrix,
    ramp: &RampSchedule,
    noise: &NoiseModel,
    flip_error: f64,
) -> Result<LindbladSeries> {
    let n = j.n();
    if n == 0 || n > MAX_ORACLE_IONS {
        return invalid(format!("Lindblad oracle supports 1..={MAX_ORACLE_IONS} ions, got {n}"));
    }
    ramp.validate()?;
    noise.validate()?;
    let liou = Liouvillian::new(j, noise);
    let mut rho = initial_density(n, flip_error);
    let mut t = 0.0;
    let mut out =
        LindbladSeries { sample_times: ramp.sample_times.clone(), distributions: Vec::new(), params: Vec::new() };
    for &target in &ramp.sample_times {
        let span = target - t;
        if span > 0.0 {
            // Half the trajectory step: the commutator spans the full spectral width.
            let h_max = 0.5 * step_at(j, ramp, t);
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for k in 0..steps {
                let t0 = t + k as f64 * h;
                let k1 = liou.rhs(ramp.field(t0), &rho);
                let k2 = liou.rhs(ramp.field(t0 + 0.5 * h), &(&rho + &k1 * c(0.5 * h, 0.0)));
                let k3 = liou.rhs(ramp.field(t0 + 0.5 * h), &(&rho + &k2 * c(0.5 * h, 0.0)));
                let k4 = liou.rhs(ramp.field(t0 + h), &(&rho + &k3 * c(h, 0.0)));
                rho += (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
            }
            t = target;
        }
        let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
        if (trace - 1.0).abs() > 1e-6 || !trace.is_finite() {
            return Err(Error::NormDrift { time: t, drift: trace - 1.0 });
        }
        let d = distribution(&rho, n)?;
        if n >= 2 {
            out.params.push(scale_order_params(&d)?);
        }
        out.distributions.push(d);
    }
    Ok(out)
}

/// Density matrix after free evolution, for direct inspection in tests.
#[doc(hidden)]
pub fn evolve_density(
    j: &CouplingMatrix,
    b: f64,
    noise: &NoiseModel,
    rho0: &DMatrix<Complex64>,
    t: f64,
    steps: usize,
) -> DMatrix<Complex64> {
    let liou = Liouvillian::new(j, noise);
    let h = t / steps as f64;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = liou.rhs(b, &rho);
        let k2 = liou.rhs(b, &(&rho + &k1 * c(0.5 * h, 0.0)));
        let k3 = liou.rhs(b, &(&rho + &k2 * c(0.5 * h, 0.0)));
        let k4 = liou.rhs(b, &(&rho + &k3 * c(h, 0.0)));
        rho += (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
    }
    rho
}
