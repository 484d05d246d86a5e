//! Monte-Carlo wave-function evolution through the field ramp.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use super::state::{add_field_term, initial_state, ising_diagonal, SpinState, KHZ_TO_RAD_PER_US};
use crate::chain::CouplingMatrix;
use crate::error::{invalid, Error, Result};

/// Maximum phase advance per RK4 step (rad).
pub const MAX_PHASE_PER_STEP: f64 = 0.05;
/// Jump-time bisection resolution as a fraction of the step.
const BISECTION_FRACTION: f64 = 1e-3;
/// Allowed growth of the squared norm between jumps.
const NORM_DRIFT_TOL: f64 = 1e-6;

/// Exponential field ramp `B(t) = max(B0 exp(-t/tau), B_final)`. Times in us, fields in kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    pub b0: f64,
    pub tau: f64,
    pub t_final: f64,
    pub b_final: f64,
    pub sample_times: Vec<f64>,
}

impl RampSchedule {
    /// Ramp with `n_samples` evenly spaced readouts over `[0, t_final]`.
    pub fn exponential(b0: f64, tau: f64, t_final: f64, b_final: f64, n_samples: usize) -> Self {
        let sample_times = match n_samples {
            0 => Vec::new(),
            1 => vec![t_final],
            n => (0..n).map(|k| t_final * k as f64 / (n - 1) as f64).collect(),
        };
        Self { b0, tau, t_final, b_final, sample_times }
    }

    /// Constant field `b` held for `t_final`.
    pub fn frozen(b: f64, t_final: f64, n_samples: usize) -> Self {
        Self::exponential(b, f64::INFINITY, t_final, b, n_samples)
    }

    pub fn field(&self, t: f64) -> f64 {
        (self.b0 * (-t / self.tau).exp()).max(self.b_final)
    }

    /// Time at which the exponential reaches `b_final` (infinite for `b_final = 0`).
    pub fn ramp_end(&self) -> f64 {
        if self.b_final <= 0.0 {
            f64::INFINITY
        } else {
            self.tau * (self.b0 / self.b_final).ln()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0 >= self.b_final && self.b_final >= 0.0) {
            return invalid(format!("require B0 >= B_final >= 0, got {} and {}", self.b0, self.b_final));
        }
        if !(self.tau > 0.0) || !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return invalid("tau must be positive and t_final finite and non-negative");
        }
        if self.sample_times.windows(2).any(|w| w[0] > w[1]) {
            return invalid("sample times must be sorted");
        }
        if self.sample_times.iter().any(|&t| !(0.0..=self.t_final).contains(&t)) {
            return invalid("sample times must lie in [0, t_final]");
        }
        Ok(())
    }
}

/// Post-emission outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branching {
    pub down: f64,
    pub up: f64,
    pub leak: f64,
}

impl Default for Branching {
    fn default() -> Self {
        Self { down: 1.0 / 3.0, up: 1.0 / 3.0, leak: 1.0 / 3.0 }
    }
}

/// Jump rates per ion (1/ms) and emission branching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gamma_se: f64,
    pub gamma_deph: f64,
    #[serde(default)]
    pub branch: Branching,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { gamma_se: 0.0, gamma_deph: 0.0, branch: Branching::default() }
    }

    /// 10% emission per spin per ms, 0.3/ms dephasing, one third leakage.
    pub fn experiment() -> Self {
        Self { gamma_se: 0.1, gamma_deph: 0.3, branch: Branching::default() }
    }

    pub fn is_noiseless(&self) -> bool {
        self.gamma_se == 0.0 && self.gamma_deph == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.branch;
        if !(self.gamma_se >= 0.0 && self.gamma_deph >= 0.0) {
            return invalid("jump rates must be non-negative");
        }
        if !(b.down >= 0.0 && b.up >= 0.0 && b.leak >= 0.0) || (b.down + b.up + b.leak - 1.0).abs() > 1e-12 {
            return invalid("branching probabilities must be non-negative and sum to 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpChannel {
    Dephasing,
    EmissionDown,
    EmissionUp,
    Leak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub ion: usize,
    pub channel: JumpChannel,
}

/// Identifies the random stream of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySeed {
    pub base: u64,
    pub index: u64,
}

impl TrajectorySeed {
    /// ChaCha8 keyed by `base`, stream `index`: a pure function of the pair.
    pub fn rng(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(self.base);
        rng.set_stream(self.index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: TrajectorySeed,
    pub jumps: Vec<JumpEvent>,
    /// P(s) at each sample time, leaked ions counted as up.
    pub samples: Vec<Vec<f64>>,
}

/// Step size (us) such that `h * 2pi * max(B0, N max|J|) <= 0.05 rad`.
pub fn max_step(j: &CouplingMatrix, ramp: &RampSchedule) -> f64 {
    let scale = ramp.b0.max(j.n() as f64 * j.max_abs());
    if scale <= 0.0 {
        f64::INFINITY
    } else {
        MAX_PHASE_PER_STEP / (KHZ_TO_RAD_PER_US * scale)
    }
}

/// Step size for a segment starting at `t`: [`max_step`], further limited so the phase
/// accrued across half the spectral width of `H(t)` stays within the same per-step budget.
/// `B(t)` only decreases, so the bound at the segment start holds throughout it.
pub fn step_at(j: &CouplingMatrix, ramp: &RampSchedule, t: f64) -> f64 {
    let n = j.n();
    let ising: f64 = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).map(|(a, b)| j.get(a, b).abs()).sum();
    let half_width = n as f64 * ramp.field(t) + ising / n as f64;
    let h = max_step(j, ramp);
    if half_width <= 0.0 {
        h
    } else {
        h.min(MAX_PHASE_PER_STEP / (KHZ_TO_RAD_PER_US * half_width))
    }
}

/// Non-Hermitian generator over the active ions plus RK4 workspace.
struct Propagator<'a> {
    j: &'a CouplingMatrix,
    ramp: &'a RampSchedule,
    noise: NoiseModel,
    /// Ising energy (kHz) minus the running energy shift is applied per index.
    diag: Vec<f64>,
    /// Half the total jump rate per basis index (1/us).
    half_decay: Vec<f64>,
    shift: f64,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    fn new(j: &'a CouplingMatrix, ramp: &'a RampSchedule, noise: NoiseModel, state: &SpinState) -> Self {
        let mut p = Self {
            j,
            ramp,
            noise,
            diag: Vec::new(),
            half_decay: Vec::new(),
            shift: 0.0,
            k: Default::default(),
            tmp: Vec::new(),
        };
        p.rebuild(state);
        p
    }

    fn rebuild(&mut self, state: &SpinState) {
        let a = state.active.len();
        let dim = 1usize << a;
        self.diag = ising_diagonal(self.j, &state.active);
        let se = 2.0 * self.noise.gamma_se * 1e-3;
        let deph = self.noise.gamma_deph * 1e-3;
        self.half_decay = (0..dim)
            .map(|idx| {
                let ups = a - (idx as u32).count_ones() as usize;
                0.5 * (se * ups as f64 + deph * a as f64)
            })
            .collect();
        for buf in self.k.iter_mut().chain(std::iter::once(&mut self.tmp)) {
            buf.clear();
            buf.resize(dim, Complex64::new(0.0, 0.0));
        }
    }

    /// One RK4 step of size `h` from `psi` into `out`.
    /// The energy shift is reset to the Rayleigh quotient of `psi` before the stages run.
    fn rk4(&mut self, t: f64, h: f64, psi: &[Complex64], out: &mut [Complex64], n_active: usize) {
        let w = KHZ_TO_RAD_PER_US;
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        let gen = Generator { diag: &self.diag, half_decay: &self.half_decay, shift: self.shift, ramp: self.ramp };
        gen.derivative(t, psi, k1, n_active);
        // <psi|k1> = -i w (<H> - shift <psi|psi>) - <decay>.
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if norm > 0.0 {
            let inner: Complex64 = psi.iter().zip(k1.iter()).map(|(a, b)| a.conj() * b).sum();
            let delta = -inner.im / (w * norm);
            self.shift += delta;
            let fix = Complex64::new(0.0, w * delta);
            for (k, a) in k1.iter_mut().zip(psi) {
                *k += *a * fix;
            }
        }
        let gen = Generator { diag: &self.diag, half_decay: &self.half_decay, shift: self.shift, ramp: self.ramp };
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k1[i] * (0.5 * h);
        }
        gen.derivative(t + 0.5 * h, tmp, k2, n_active);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k2[i] * (0.5 * h);
        }
        gen.derivative(t + 0.5 * h, tmp, k3, n_active);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k3[i] * h;
        }
        gen.derivative(t + h, tmp, k4, n_active);
        let h6 = h / 6.0;
        for i in 0..psi.len() {
            out[i] = psi[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * h6;
        }
    }
}

struct Generator<'g> {
    diag: &'g [f64],
    half_decay: &'g [f64],
    shift: f64,
    ramp: &'g RampSchedule,
}

impl Generator<'_> {
    #[inline]
    fn derivative(&self, t: f64, psi: &[Complex64], out: &mut [Complex64], n_active: usize) {
        let w = KHZ_TO_RAD_PER_US;
        for ((o, a), (e, g)) in out.iter_mut().zip(psi).zip(self.diag.iter().zip(self.half_decay)) {
            *o = *a * Complex64::new(-g, -w * (e - self.shift));
        }
        add_field_term(psi, out, n_active, w * self.ramp.field(t));
    }
}

/// Drops the qubit at active position `k`, keeping the amplitudes with it up along X.
/// This is the (unnormalized) action of `<up_z| + <down_z| = sqrt2 <up_x|`.
fn project_up(amps: &[Complex64], k: usize) -> Vec<Complex64> {
    let low = (1usize << k) - 1;
    (0..amps.len() / 2)
        .map(|r| {
            let idx = (r & low) | ((r & !low) << 1);
            amps[idx]
        })
        .collect()
}

/// Inserts a qubit at active position `k` in state `(c_up, c_down)`.
fn insert_qubit(amps: &[Complex64], k: usize, c_up: f64, c_down: f64) -> Vec<Complex64> {
    let low = (1usize << k) - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len() * 2];
    for (r, a) in amps.iter().enumerate() {
        let idx = (r & low) | ((r & !low) << 1);
        out[idx] = *a * c_up;
        out[idx | (1 << k)] = *a * c_down;
    }
    out
}

/// Applies a jump chosen with probability proportional to its instantaneous rate.
fn apply_jump<R: Rng + ?Sized>(state: &mut SpinState, noise: &NoiseModel, rng: &mut R) -> Option<(usize, JumpChannel)> {
    let a = state.active.len();
    if a == 0 {
        return None;
    }
    let norm = state.norm_sqr();
    let mut rates = Vec::with_capacity(2 * a);
    for k in 0..a {
        let mask = 1usize << k;
        let up: f64 =
            state.amplitudes.iter().enumerate().filter(|(idx, _)| idx & mask == 0).map(|(_, v)| v.norm_sqr()).sum();
        rates.push(2.0 * noise.gamma_se * up);
        rates.push(noise.gamma_deph * norm);
    }
    let total: f64 = rates.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut chosen = rates.len() - 1;
    for (c, r) in rates.iter().enumerate() {
        if u < *r {
            chosen = c;
            break;
        }
        u -= r;
    }
    let k = chosen / 2;
    let ion = state.active[k];
    if chosen % 2 == 1 {
        let mask = 1usize << k;
        for (idx, v) in state.amplitudes.iter_mut().enumerate() {
            if idx & mask != 0 {
                *v = -*v;
            }
        }
        state.normalize();
        return Some((ion, JumpChannel::Dephasing));
    }
    let rest = project_up(&state.amplitudes, k);
    let b = noise.branch;
    let v = rng.random::<f64>();
    let channel = if v < b.down {
        JumpChannel::EmissionDown
    } else if v < b.down + b.up {
        JumpChannel::EmissionUp
    } else {
        JumpChannel::Leak
    };
    state.amplitudes = match channel {
        JumpChannel::EmissionDown => insert_qubit(&rest, k, FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        JumpChannel::EmissionUp => insert_qubit(&rest, k, FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        _ => {
            state.active.remove(k);
            state.leaked.push(ion);
            rest
        }
    };
    state.normalize();
    Some((ion, channel))
}

/// Draws a jump threshold in (0, 1).
fn threshold<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            return r;
        }
    }
}

/// Evolves one trajectory from `state` through `ramp`, recording P(s) at every
/// sample time. Random draws come from `rng` in a fixed order.
pub fn evolve_trajectory<R: Rng + ?Sized>(
    state: SpinState,
    j: &CouplingMatrix,
    ramp: &RampSchedule,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(Vec<JumpEvent>, Vec<Vec<f64>>)> {
    evolve_state(state, j, ramp, noise, rng).map(|(_, jumps, samples)| (jumps, samples))
}

/// As [`evolve_trajectory`], also returning the unnormalized state at `t_final`.
pub fn evolve_state<R: Rng + ?Sized>(
    mut state: SpinState,
    j: &CouplingMatrix,
    ramp: &RampSchedule,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(SpinState, Vec<JumpEvent>, Vec<Vec<f64>>)> {
    ramp.validate()?;
    noise.validate()?;
    if j.n() != state.n_total() {
        return Err(Error::DimensionMismatch { expected: state.n_total(), found: j.n() });
    }
    state.normalize();
    let noiseless = noise.is_noiseless();
    let mut prop = Propagator::new(j, ramp, *noise, &state);
    let mut jumps = Vec::new();
    let mut samples = Vec::with_capacity(ramp.sample_times.len());
    let mut next = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    let mut r = if noiseless { 0.0 } else { threshold(rng) };
    let mut t = 0.0;
    let mut last_norm = 1.0;

    let mut checkpoints: Vec<f64> = ramp.sample_times.clone();
    if checkpoints.last().is_none_or(|&l| l < ramp.t_final) {
        checkpoints.push(ramp.t_final);
    }
    let n_samples = ramp.sample_times.len();

    for (ci, &target) in checkpoints.iter().enumerate() {
        let span = target - t;
        if span > 0.0 {
            let h_max = step_at(j, ramp, t);
            let n_steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / n_steps as f64;
            for step in 0..n_steps {
                let t0 = t;
                let t_end = if step + 1 == n_steps { target } else { t0 + h };
                let mut remaining = t_end - t0;
                let mut t_cur = t0;
                while remaining > 0.0 {
                    let n_active = state.active.len();
                    prop.rk4(t_cur, remaining, &state.amplitudes, &mut next, n_active);
                    let norm: f64 = next.iter().map(|a| a.norm_sqr()).sum();
                    if !norm.is_finite() {
                        return Err(Error::StepFailure { time: t_cur, reason: "non-finite amplitude".into() });
                    }
                    if norm > last_norm * (1.0 + NORM_DRIFT_TOL) || (noiseless && (norm - 1.0).abs() > NORM_DRIFT_TOL) {
                        return Err(Error::NormDrift { time: t_cur + remaining, drift: norm - last_norm });
                    }
                    if noiseless || norm >= r || n_active == 0 {
                        std::mem::swap(&mut state.amplitudes, &mut next);
                        last_norm = norm;
                        break;
                    }
                    // Locate the threshold crossing by bisection on the sub-step length.
                    let (mut lo, mut hi) = (0.0, remaining);
                    while hi - lo > BISECTION_FRACTION * h {
                        let mid = 0.5 * (lo + hi);
                        prop.rk4(t_cur, mid, &state.amplitudes, &mut next, n_active);
                        let nm: f64 = next.iter().map(|a| a.norm_sqr()).sum();
                        if nm < r {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    prop.rk4(t_cur, hi, &state.amplitudes, &mut next, n_active);
                    std::mem::swap(&mut state.amplitudes, &mut next);
                    t_cur += hi;
                    remaining = t_end - t_cur;
                    if let Some((ion, channel)) = apply_jump(&mut state, noise, rng) {
                        jumps.push(JumpEvent { time: t_cur, ion, channel });
                        if state.active.len() != n_active {
                            prop.rebuild(&state);
                        }
                        next.resize(state.amplitudes.len(), Complex64::new(0.0, 0.0));
                    }
                    last_norm = 1.0;
                    r = threshold(rng);
                }
                t = t_end;
            }
        }
        if ci < n_samples {
            samples.push(state.spin_distribution());
        }
    }
    Ok((state, jumps, samples))
}

/// Draws the initial state and evolves one trajectory from its seeded stream.
pub fn run_trajectory(
    j: &CouplingMatrix,
    ramp: &RampSchedule,
    noise: &NoiseModel,
    flip_error: f64,
    seed: TrajectorySeed,
) -> Result<TrajectoryRecord> {
    let mut rng = seed.rng();
    let state = initial_state(j.n(), flip_error, &mut rng)?;
    let (jumps, samples) = evolve_trajectory(state, j, ramp, noise, &mut rng)?;
    Ok(TrajectoryRecord { seed, jumps, samples })
}
