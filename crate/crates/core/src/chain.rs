//! Ion-chain mechanics: equilibrium positions, transverse normal modes,
//! Lamb-Dicke parameters and the spin-spin coupling matrix they induce.
//!
//! All user-facing frequencies are ordinary frequencies in kHz.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const AMU: f64 = 1.660_539_066_60e-27;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Mass of 171Yb+ in atomic mass units.
pub const YB171_MASS_AMU: f64 = 170.936_325_8;
/// Detection / Raman wavelength used for the default wavevector difference.
pub const WAVELENGTH_M: f64 = 369.5e-9;

/// Equilibrium solver controls.
const GRADIENT_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;

/// Hard guard band around each mode frequency (kHz).
pub const DEFAULT_GUARD_BAND_KHZ: f64 = 1.0;
/// Detunings closer than this multiple of the largest `eta * Omega` to a mode
/// make adiabatic elimination of the phonons marginal.
pub const ADIABATIC_MARGIN: f64 = 4.0;

/// Two beams crossing at right angles: |dk| = sqrt(2) * 2pi / lambda.
pub fn default_delta_k() -> f64 {
    std::f64::consts::SQRT_2 * 2.0 * std::f64::consts::PI / WAVELENGTH_M
}

fn default_mass() -> f64 {
    YB171_MASS_AMU
}

/// Trap and laser parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Transverse COM frequency (kHz).
    pub nu_x: f64,
    /// Axial COM frequency (kHz).
    pub nu_z: f64,
    /// Ion mass (amu).
    #[serde(default = "default_mass")]
    pub ion_mass: f64,
    /// Raman wavevector difference (rad/m).
    #[serde(default = "default_delta_k")]
    pub delta_k: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self::experiment(9)
    }
}

impl TrapConfig {
    /// The trap of the nine-ion experiment: 4.748 MHz transverse, 1.002 MHz axial.
    pub fn experiment(n_ions: usize) -> Self {
        Self { n_ions, nu_x: 4748.0, nu_z: 1002.0, ion_mass: YB171_MASS_AMU, delta_k: default_delta_k() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ions == 0 {
            return invalid("n_ions must be at least 1");
        }
        if !(self.nu_z > 0.0 && self.nu_x > self.nu_z) {
            return invalid(format!("require nu_x > nu_z > 0, got nu_x = {}, nu_z = {}", self.nu_x, self.nu_z));
        }
        if !(self.ion_mass > 0.0) || !(self.delta_k > 0.0) {
            return invalid("ion_mass and delta_k must be positive");
        }
        Ok(())
    }

    /// Axial length scale (m) that converts dimensionless positions to metres.
    pub fn length_scale(&self) -> f64 {
        let mass = self.ion_mass * AMU;
        let omega_z = 2.0 * std::f64::consts::PI * self.nu_z * 1e3;
        let q2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
        (q2 / (4.0 * std::f64::consts::PI * EPSILON_0 * mass * omega_z * omega_z)).cbrt()
    }
}

/// Dimensionless equilibrium coordinates, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    pub positions: Vec<f64>,
}

impl ChainGeometry {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Max-norm of the gradient of the dimensionless potential.
    pub fn residual(&self) -> f64 {
        potential_gradient(&self.positions).amax()
    }
}

/// Transverse normal modes of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    /// Mode frequencies (kHz), descending; index 0 is the COM mode.
    pub frequencies: Vec<f64>,
    /// `vectors[(i, m)]` is the participation of ion `i` in mode `m`.
    pub vectors: DMatrix<f64>,
    /// `lamb_dicke[(i, m)]`, dimensionless.
    pub lamb_dicke: DMatrix<f64>,
}

impl ModeData {
    pub fn n_ions(&self) -> usize {
        self.frequencies.len()
    }
}

/// The symmetric Ising coupling matrix (kHz) with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    values: DMatrix<f64>,
    mean: f64,
}

impl CouplingMatrix {
    /// Builds a coupling matrix from explicit values. The matrix must be
    /// square and symmetric; the diagonal is forced to zero.
    pub fn from_matrix(mut values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.ncols() });
        }
        for i in 0..n {
            values[(i, i)] = 0.0;
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return invalid(format!("coupling matrix not symmetric at ({i}, {j})"));
                }
                values[(j, i)] = a;
            }
        }
        let mean = upper_mean(&values);
        Ok(Self { values, mean })
    }

    /// All-to-all coupling of equal strength `j`.
    pub fn uniform(n: usize, j: f64) -> Self {
        let mut values = DMatrix::from_element(n, n, j);
        values.fill_diagonal(0.0);
        let mean = if n > 1 { j } else { 0.0 };
        Self { values, mean }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// |J|: mean of the upper-triangle entries (kHz).
    pub fn mean_j(&self) -> f64 {
        self.mean
    }

    /// Largest absolute entry (kHz).
    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `J_{1,1+r}` for `r = 1..N-1`.
    pub fn edge_row(&self) -> Vec<f64> {
        (1..self.n()).map(|j| self.values[(0, j)]).collect()
    }
}

fn upper_mean(values: &DMatrix<f64>) -> f64 {
    let n = values.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += values[(i, j)];
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

fn potential(x: &[f64]) -> f64 {
    let mut u = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        u += 0.5 * xi * xi;
        for &xj in &x[i + 1..] {
            u += 1.0 / (xi - xj).abs();
        }
    }
    u
}

fn potential_gradient(x: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        x.iter().enumerate().map(|(i, &xi)| {
            let coulomb: f64 = x
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| {
                    let d = xi - xj;
                    d.signum() / (d * d)
                })
                .sum();
            xi - coulomb
        }),
    )
}

fn potential_hessian(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = 1.0;
        for j in 0..n {
            if i != j {
                let c = 2.0 / (x[i] - x[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

fn is_ordered(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1])
}

/// Minimizes `sum x_i^2/2 + sum_{i<j} 1/|x_i - x_j|` by damped Newton
/// iteration from a uniformly spaced chain.
pub fn equilibrium_positions(n_ions: usize) -> Result<ChainGeometry> {
    if n_ions == 0 {
        return invalid("n_ions must be at least 1");
    }
    if n_ions == 1 {
        return Ok(ChainGeometry { positions: vec![0.0] });
    }
    let spacing = 2.0 / (n_ions as f64).powf(0.56);
    let centre = 0.5 * (n_ions - 1) as f64;
    let mut x: Vec<f64> = (0..n_ions).map(|i| (i as f64 - centre) * spacing).collect();

    let mut grad = potential_gradient(&x);
    for _ in 0..MAX_ITERATIONS {
        if grad.amax() < GRADIENT_TOL {
            // Enforce exact mirror symmetry; both halves agree to solver tolerance already.
            let sym: Vec<f64> = (0..n_ions).map(|i| 0.5 * (x[i] - x[n_ions - 1 - i])).collect();
            let sym_grad = potential_gradient(&sym).amax();
            if sym_grad <= grad.amax().max(GRADIENT_TOL) {
                x = sym;
            }
            return Ok(ChainGeometry { positions: x });
        }
        // The Hessian is diagonally dominant with positive diagonal, so Cholesky succeeds.
        let step = potential_hessian(&x).cholesky().map(|c| c.solve(&grad)).unwrap_or_else(|| grad.clone());
        let u0 = potential(&x);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi - alpha * si).collect();
            if is_ordered(&trial) && potential(&trial) <= u0 + 1e-14 * u0.abs() {
                x = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(Error::SolverFailure { iterations: 0, gradient: grad.amax() });
            }
        }
        grad = potential_gradient(&x);
    }
    Err(Error::SolverFailure { iterations: MAX_ITERATIONS, gradient: grad.amax() })
}

/// Transverse (x) normal modes of the chain.
pub fn transverse_modes(cfg: &TrapConfig, geom: &ChainGeometry) -> Result<ModeData> {
    cfg.validate()?;
    let n = geom.len();
    if n != cfg.n_ions {
        return Err(Error::DimensionMismatch { expected: cfg.n_ions, found: n });
    }
    let u = &geom.positions;
    let aspect = (cfg.nu_x / cfg.nu_z).powi(2);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = aspect;
        for j in 0..n {
            if i != j {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, i)] -= c;
                a[(i, j)] = c;
            }
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));

    let mass = cfg.ion_mass * AMU;
    let mut frequencies = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    let mut lamb_dicke = DMatrix::zeros(n, n);
    for (m, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda <= 0.0 {
            return Err(Error::Stability { eigenvalue: lambda });
        }
        let nu = cfg.nu_z * lambda.sqrt();
        let mut col = eig.eigenvectors.column(k).into_owned();
        // Fix the arbitrary eigenvector sign: first significant component positive.
        let lead = col.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
        if lead < 0.0 {
            col.neg_mut();
        }
        let zpf = (HBAR / (2.0 * mass * 2.0 * std::f64::consts::PI * nu * 1e3)).sqrt();
        for i in 0..n {
            vectors[(i, m)] = col[i];
            lamb_dicke[(i, m)] = col[i] * cfg.delta_k * zpf;
        }
        frequencies.push(nu);
    }
    Ok(ModeData { frequencies, vectors, lamb_dicke })
}

/// Expands a Rabi input of length 1 (uniform) or N (per ion).
pub fn expand_rabi(rabi: &[f64], n: usize) -> Result<Vec<f64>> {
    match rabi.len() {
        1 => Ok(vec![rabi[0]; n]),
        len if len == n => Ok(rabi.to_vec()),
        len => Err(Error::DimensionMismatch { expected: n, found: len }),
    }
}

/// Largest `|eta_{i,m} Omega_i|` over ions for mode `m` (0-based), in kHz.
pub fn sideband_coupling(modes: &ModeData, rabi: &[f64], m: usize) -> Result<f64> {
    let omega = expand_rabi(rabi, modes.n_ions())?;
    Ok(omega.iter().enumerate().map(|(i, w)| (modes.lamb_dicke[(i, m)] * w).abs()).fold(0.0, f64::max))
}

/// Ising couplings mediated by virtual transverse phonons:
/// `J_ij = N W_i W_j sum_m eta_im eta_jm nu_m / (mu^2 - nu_m^2)`.
pub fn coupling_matrix(modes: &ModeData, rabi: &[f64], mu: f64) -> Result<CouplingMatrix> {
    coupling_matrix_with_guard(modes, rabi, mu, DEFAULT_GUARD_BAND_KHZ)
}

pub fn coupling_matrix_with_guard(modes: &ModeData, rabi: &[f64], mu: f64, guard_band: f64) -> Result<CouplingMatrix> {
    let n = modes.n_ions();
    let omega = expand_rabi(rabi, n)?;
    for (m, &nu) in modes.frequencies.iter().enumerate() {
        if (mu - nu).abs() < guard_band {
            return Err(Error::Resonance { mu, mode: m + 1, freq: nu, guard: guard_band });
        }
        let coupling = (0..n).map(|i| (modes.lamb_dicke[(i, m)] * omega[i]).abs()).fold(0.0, f64::max);
        if (mu - nu).abs() < ADIABATIC_MARGIN * coupling {
            log::warn!(
                "detuning {:.3} kHz from mode {} is below 4 eta*Omega = {:.3} kHz; adiabatic elimination is marginal",
                (mu - nu).abs(),
                m + 1,
                ADIABATIC_MARGIN * coupling
            );
        }
    }
    let weights: Vec<f64> = modes.frequencies.iter().map(|&nu| nu / (mu * mu - nu * nu)).collect();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = (0..n).map(|m| modes.lamb_dicke[(i, m)] * modes.lamb_dicke[(j, m)] * weights[m]).sum();
            let v = n as f64 * omega[i] * omega[j] * s;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let mean = upper_mean(&values);
    Ok(CouplingMatrix { values, mean })
}

/// Result of a log-log least-squares fit `J_{1,1+r} = C / r^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
}

/// Fits the decay of the first row of `J` with distance. Returns `None` when
/// fewer than two distances are available or an entry is not positive.
pub fn fit_power_law(j: &CouplingMatrix) -> Option<PowerLawFit> {
    let row = j.edge_row();
    if row.len() < 2 {
        log::warn!("power-law fit needs at least three ions; got {}", j.n());
        return None;
    }
    if row.iter().any(|&v| v <= 0.0) {
        log::warn!("power-law fit skipped: non-positive coupling in the first row");
        return None;
    }
    let pts: Vec<(f64, f64)> = row.iter().enumerate().map(|(r, &v)| (((r + 1) as f64).ln(), v.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some(PowerLawFit { exponent: -slope, prefactor: (my - slope * mx).exp() })
}

/// Coupling range versus detuning: fitted exponent for each `mu`.
pub fn coupling_range_scan(cfg: &TrapConfig, rabi: &[f64], mu_list: &[f64]) -> Result<Vec<(f64, Option<PowerLawFit>)>> {
    let geom = equilibrium_positions(cfg.n_ions)?;
    let modes = transverse_modes(cfg, &geom)?;
    mu_list
        .iter()
        .map(|&mu| {
            if mu <= modes.frequencies[0] {
                return invalid(format!("scan detuning {mu} kHz must lie above the COM mode"));
            }
            let j = coupling_matrix(&modes, rabi, mu)?;
            Ok((mu, fit_power_law(&j)))
        })
        .collect()
}

/// Convenience: positions, modes and couplings in one call.
pub fn build_couplings(cfg: &TrapConfig, rabi: &[f64], mu: f64) -> Result<(ChainGeometry, ModeData, CouplingMatrix)> {
    let geom = equilibrium_positions(cfg.n_ions)?;
    let modes = transverse_modes(cfg, &geom)?;
    let j = coupling_matrix(&modes, rabi, mu)?;
    Ok((geom, modes, j))
}
