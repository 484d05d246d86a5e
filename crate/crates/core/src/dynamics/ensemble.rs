//! Parallel trajectory ensembles with order-independent reduction.
//!
//! Trajectory `i` draws from ChaCha8 stream `i` keyed by the base seed, and
//! results are summed in fixed chunks of consecutive indices whose partial
//! sums are combined in chunk order. The output is therefore bit-identical
//! for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trajectory::{run_trajectory, NoiseModel, RampSchedule, TrajectorySeed};
use crate::chain::CouplingMatrix;
use crate::error::{invalid, Error, Result};
use crate::observables::{paramagnetic_binder, paramagnetic_magnetization};

const CHUNK: u64 = 64;

/// Everything one ensemble run needs apart from trajectory count and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub couplings: CouplingMatrix,
    pub ramp: RampSchedule,
    pub noise: NoiseModel,
    pub flip_error: f64,
}

impl SimConfig {
    pub fn new(couplings: CouplingMatrix, ramp: RampSchedule, noise: NoiseModel) -> Self {
        Self { couplings, ramp, noise, flip_error: 0.0 }
    }

    /// Checks the protocol: the ramp must start at `B0 >= |J|`.
    pub fn validate(&self) -> Result<()> {
        self.ramp.validate()?;
        self.noise.validate()?;
        if !(0.0..=1.0).contains(&self.flip_error) {
            return invalid("flip_error must lie in [0, 1]");
        }
        let mean_j = self.couplings.mean_j().abs();
        if mean_j > 0.0 {
            let ratio = self.ramp.b0 / mean_j;
            if ratio < 1.0 {
                return invalid(format!("B0/|J| = {ratio:.3} < 1: the ramp must start in the paramagnet"));
            }
            if ratio < 5.0 {
                log::warn!("B0/|J| = {ratio:.3} is below 5; the initial state is not deep in the paramagnet");
            }
        }
        Ok(())
    }
}

/// Order parameters with standard errors at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservablePoint {
    pub m_x: f64,
    pub m_x_sem: f64,
    pub m_x_scaled: f64,
    pub m_x_scaled_sem: f64,
    pub g: f64,
    pub g_sem: f64,
    /// NaN for N < 2.
    pub g_scaled: f64,
    pub g_scaled_sem: f64,
    pub p_fm: f64,
    pub p_fm_sem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n: usize,
    pub n_traj: u64,
    pub base_seed: u64,
    pub mean_j: f64,
    pub sample_times: Vec<f64>,
    pub fields: Vec<f64>,
    pub b_over_j: Vec<f64>,
    /// `p[t][s]`: ensemble-averaged P(s) at sample `t`.
    pub p: Vec<Vec<f64>>,
    pub sem: Vec<Vec<f64>>,
    pub observables: Vec<ObservablePoint>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct SampleSums {
    p: Vec<f64>,
    p2: Vec<f64>,
    mx: f64,
    mx2: f64,
    m2: f64,
    m2sq: f64,
    m4: f64,
    m4sq: f64,
    m2m4: f64,
    fm: f64,
    fm2: f64,
}

impl SampleSums {
    fn new(n: usize) -> Self {
        Self { p: vec![0.0; n + 1], p2: vec![0.0; n + 1], ..Default::default() }
    }

    fn add_distribution(&mut self, dist: &[f64]) {
        let n = dist.len() - 1;
        let (mut mx, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for (s, &ps) in dist.iter().enumerate() {
            let m = n as f64 - 2.0 * s as f64;
            mx += m.abs() * ps;
            m2 += m * m * ps;
            m4 += m.powi(4) * ps;
            self.p[s] += ps;
            self.p2[s] += ps * ps;
        }
        mx /= n as f64;
        let fm = dist[0] + dist[n];
        self.mx += mx;
        self.mx2 += mx * mx;
        self.m2 += m2;
        self.m2sq += m2 * m2;
        self.m4 += m4;
        self.m4sq += m4 * m4;
        self.m2m4 += m2 * m4;
        self.fm += fm;
        self.fm2 += fm * fm;
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.p.iter_mut().zip(&other.p) {
            *a += b;
        }
        for (a, b) in self.p2.iter_mut().zip(&other.p2) {
            *a += b;
        }
        self.mx += other.mx;
        self.mx2 += other.mx2;
        self.m2 += other.m2;
        self.m2sq += other.m2sq;
        self.m4 += other.m4;
        self.m4sq += other.m4sq;
        self.m2m4 += other.m2m4;
        self.fm += other.fm;
        self.fm2 += other.fm2;
    }
}

/// Sample mean and standard error of the mean from running sums.
fn mean_sem(sum: f64, sum_sq: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - sum * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

fn covariance(sum_xy: f64, sum_x: f64, sum_y: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    (sum_xy - sum_x * sum_y / n) / (n - 1.0)
}

fn summarize(n: usize, sums: &SampleSums, count: f64) -> (Vec<f64>, Vec<f64>, ObservablePoint) {
    let (p, sem): (Vec<f64>, Vec<f64>) = sums.p.iter().zip(&sums.p2).map(|(&a, &b)| mean_sem(a, b, count)).unzip();
    let (m_x, m_x_sem) = mean_sem(sums.mx, sums.mx2, count);
    let (p_fm, p_fm_sem) = mean_sem(sums.fm, sums.fm2, count);
    let (m2, m2_sem) = mean_sem(sums.m2, sums.m2sq, count);
    let (m4, m4_sem) = mean_sem(sums.m4, sums.m4sq, count);
    let cov = covariance(sums.m2m4, sums.m2, sums.m4, count) / count;
    let g = m4 / (m2 * m2);
    // Delta method for g = M4 / M2^2.
    let d4 = 1.0 / (m2 * m2);
    let d2 = -2.0 * m4 / (m2 * m2 * m2);
    let g_var = d4 * d4 * m4_sem * m4_sem + d2 * d2 * m2_sem * m2_sem + 2.0 * d4 * d2 * cov;
    let g_sem = g_var.max(0.0).sqrt();
    let m0 = paramagnetic_magnetization(n);
    let (g_scaled, g_scaled_sem) = if n >= 2 {
        let g0 = paramagnetic_binder(n);
        ((g0 - g) / (g0 - 1.0), g_sem / (g0 - 1.0))
    } else {
        (f64::NAN, f64::NAN)
    };
    let point = ObservablePoint {
        m_x,
        m_x_sem,
        m_x_scaled: (m0 - m_x) / (m0 - 1.0),
        m_x_scaled_sem: m_x_sem / (1.0 - m0),
        g,
        g_sem,
        g_scaled,
        g_scaled_sem,
        p_fm,
        p_fm_sem,
    };
    (p, sem, point)
}

/// Runs `n_traj` trajectories on `workers` threads (0 = all available cores).
pub fn run_ensemble(cfg: &SimConfig, n_traj: u64, base_seed: u64, workers: usize) -> Result<EnsembleStats> {
    cfg.validate()?;
    if n_traj == 0 {
        return invalid("n_traj must be at least 1");
    }
    let n = cfg.couplings.n();
    let n_samples = cfg.ramp.sample_times.len();
    let n_chunks = n_traj.div_ceil(CHUNK);

    let run_chunk = |c: u64| -> Result<Vec<SampleSums>> {
        let mut sums = vec![SampleSums::new(n); n_samples];
        for index in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
            let seed = TrajectorySeed { base: base_seed, index };
            let rec = run_trajectory(&cfg.couplings, &cfg.ramp, &cfg.noise, cfg.flip_error, seed)
                .map_err(|e| Error::Trajectory { index, source: Box::new(e) })?;
            for (acc, dist) in sums.iter_mut().zip(&rec.samples) {
                acc.add_distribution(dist);
            }
        }
        Ok(sums)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let partials: Vec<Result<Vec<SampleSums>>> =
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect());

    let mut totals = vec![SampleSums::new(n); n_samples];
    for part in partials {
        for (t, s) in totals.iter_mut().zip(&part?) {
            t.merge(s);
        }
    }

    let count = n_traj as f64;
    let mean_j = cfg.couplings.mean_j();
    let mut stats = EnsembleStats {
        n,
        n_traj,
        base_seed,
        mean_j,
        sample_times: cfg.ramp.sample_times.clone(),
        fields: cfg.ramp.sample_times.iter().map(|&t| cfg.ramp.field(t)).collect(),
        b_over_j: Vec::with_capacity(n_samples),
        p: Vec::with_capacity(n_samples),
        sem: Vec::with_capacity(n_samples),
        observables: Vec::with_capacity(n_samples),
    };
    stats.b_over_j = stats.fields.iter().map(|b| b / mean_j.abs()).collect();
    for sums in &totals {
        let (p, sem, obs) = summarize(n, sums, count);
        stats.p.push(p);
        stats.sem.push(sem);
        stats.observables.push(obs);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sem_matches_direct_formula() {
        let xs = [0.1, 0.4, 0.35, 0.8];
        let (s, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
        let (m, e) = mean_sem(s, s2, 4.0);
        let mean = xs.iter().sum::<f64>() / 4.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((m - mean).abs() < 1e-15);
        assert!((e - (var / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn protocol_requires_paramagnetic_start() {
        let cfg = SimConfig::new(
            CouplingMatrix::uniform(2, 1.0),
            RampSchedule::exponential(0.5, 80.0, 100.0, 0.0, 2),
            NoiseModel::none(),
        );
        assert!(cfg.validate().is_err());
        assert!(run_ensemble(&cfg, 1, 0, 1).is_err());
    }
}
