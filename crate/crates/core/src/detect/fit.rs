//! Histogram fitting.
//!
//! The outer problem searches the two photon means with a bounded
//! Nelder-Mead simplex. For fixed means the basis is fixed and the Neyman
//! chi-square is a convex quadratic in P(s), minimized exactly on the
//! probability simplex by a primal active-set method.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histogram::CountHistogram;
use super::model::{basis_functions, PhotonModel};
use crate::error::{Error, Result};
use crate::observables::{scale_order_params, SpinDistribution};

/// Smallest histogram accepted by the fitter.
pub const MIN_SHOTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub distribution: SpinDistribution,
    pub mean_dark: f64,
    pub mean_bright: f64,
    pub mean_dark_err: f64,
    pub mean_bright_err: f64,
    pub chi2: f64,
    pub dof: i64,
    pub evaluations: usize,
    /// Detection model with the fitted means.
    pub model: PhotonModel,
}

/// Minimizes `0.5 p'Qp - c'p` over the probability simplex.
pub fn simplex_qp(q: &DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let d = c.len();
    let tol = 1e-12 * (1.0 + q.diagonal().amax());
    let mut p = DVector::from_element(d, 1.0 / d as f64);
    let mut fixed = vec![false; d];
    for _ in 0..50 * d + 50 {
        let free: Vec<usize> = (0..d).filter(|&i| !fixed[i]).collect();
        let m = free.len();
        // KKT system on the free set: [Q_FF 1; 1' 0] [x; -nu] = [c_F; 1].
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = q[(i, j)];
            }
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
            rhs[a] = c[i];
        }
        rhs[m] = 1.0;
        let sol = kkt.lu().solve(&rhs).ok_or_else(|| Error::Fit("singular basis in simplex least squares".into()))?;
        let mut target = DVector::zeros(d);
        for (a, &i) in free.iter().enumerate() {
            target[i] = sol[a];
        }
        if free.iter().all(|&i| target[i] >= -1e-15) {
            p = target.map(|v| v.max(0.0));
            let grad = q * &p - c;
            let nu = -sol[m];
            // Release the fixed index with the most negative multiplier.
            let worst = (0..d).filter(|&i| fixed[i]).map(|i| (i, grad[i] - nu)).min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((i, mu)) if mu < -tol => fixed[i] = false,
                _ => {
                    let s = p.sum();
                    return Ok(p / s);
                }
            }
        } else {
            let mut alpha = 1.0;
            let mut block = None;
            for &i in &free {
                if target[i] < 0.0 {
                    let a = p[i] / (p[i] - target[i]);
                    if a < alpha {
                        alpha = a;
                        block = Some(i);
                    }
                }
            }
            p += (target - &p) * alpha;
            if let Some(i) = block {
                fixed[i] = true;
                p[i] = 0.0;
            }
        }
    }
    Err(Error::Fit("simplex least squares did not converge".into()))
}

/// Neyman chi-square problem for fixed photon means.
struct Inner<'a> {
    hist: &'a CountHistogram,
    n: usize,
    max_count: usize,
    total: f64,
}

impl Inner<'_> {
    fn solve(&self, model: &PhotonModel) -> Result<(DVector<f64>, f64)> {
        let basis = basis_functions(model, self.n, self.max_count)?;
        let d = self.n + 1;
        let mut q = DMatrix::zeros(d, d);
        let mut c = DVector::zeros(d);
        let mut y2 = 0.0;
        for k in 0..=self.max_count {
            let h = self.hist.counts.get(k).copied().unwrap_or(0) as f64;
            let w = 1.0 / h.max(1.0);
            let row: Vec<f64> = basis.iter().map(|f| self.total * f[k]).collect();
            for a in 0..d {
                c[a] += w * row[a] * h;
                for b in a..d {
                    q[(a, b)] += w * row[a] * row[b];
                }
            }
            y2 += w * h * h;
        }
        for a in 0..d {
            for b in 0..a {
                q[(a, b)] = q[(b, a)];
            }
        }
        let p = simplex_qp(&q, &c)?;
        let chi2 = (p.dot(&(&q * &p)) - 2.0 * c.dot(&p) + y2).max(0.0);
        Ok((p, chi2))
    }

    fn chi2(&self, base: &PhotonModel, md: f64, mb: f64) -> f64 {
        if !(md >= 0.0 && mb > md) {
            return f64::INFINITY;
        }
        self.solve(&base.with_means(md, mb)).map(|r| r.1).unwrap_or(f64::INFINITY)
    }
}

/// Bounded Nelder-Mead in two dimensions; infeasible points score +inf.
fn nelder_mead<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    x0: [f64; 2],
    step: [f64; 2],
    max_evals: usize,
) -> ([f64; 2], f64, usize) {
    let mut pts = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut vals = pts.map(&mut f);
    let mut evals = 3;
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while evals < max_evals {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.map(|i| pts[i]);
        vals = idx.map(|i| vals[i]);
        let size = (1..3).map(|i| (pts[i][0] - pts[0][0]).abs().max((pts[i][1] - pts[0][1]).abs())).fold(0.0, f64::max);
        if vals[2] - vals[0] <= 1e-10 * (1.0 + vals[0].abs()) && size < 1e-7 {
            break;
        }
        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflect = lerp(centroid, pts[2], -1.0);
        let fr = f(reflect);
        evals += 1;
        if fr < vals[0] {
            let expand = lerp(centroid, pts[2], -2.0);
            let fe = f(expand);
            evals += 1;
            (pts[2], vals[2]) = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < vals[1] {
            (pts[2], vals[2]) = (reflect, fr);
        } else {
            let contract = if fr < vals[2] { lerp(centroid, reflect, 0.5) } else { lerp(centroid, pts[2], 0.5) };
            let fc = f(contract);
            evals += 1;
            if fc < vals[2].min(fr) {
                (pts[2], vals[2]) = (contract, fc);
            } else {
                for i in 1..3 {
                    pts[i] = lerp(pts[0], pts[i], 0.5);
                    vals[i] = f(pts[i]);
                }
                evals += 2;
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    (pts[best], vals[best], evals)
}

/// Fits P(s) and both photon means to a histogram.
///
/// `guess` supplies the starting means together with the fixed leak, jitter
/// and beam-profile parameters.
pub fn fit_histogram(hist: &CountHistogram, n: usize, guess: &PhotonModel) -> Result<FitResult> {
    guess.validate()?;
    let total = hist.total();
    if total < MIN_SHOTS {
        return Err(Error::Fit(format!("histogram has {total} shots; need at least {MIN_SHOTS}")));
    }
    if hist.occupied_bins() < 2 {
        return Err(Error::Fit("all shots fall in one bin; the photon means are unidentifiable".into()));
    }
    let inner = Inner { hist, n, max_count: hist.max_count().max(guess.default_max_count(n)), total: total as f64 };
    let x0 = [guess.mean_dark, guess.mean_bright];
    let step = [0.2 * guess.mean_dark + 0.05, 0.1 * guess.mean_bright];
    let (best, chi2, evaluations) = nelder_mead(|x| inner.chi2(guess, x[0], x[1]), x0, step, 600);
    if !chi2.is_finite() {
        return Err(Error::Fit("no feasible photon means found".into()));
    }
    let (md, mb) = (best[0], best[1]);
    let model = guess.with_means(md, mb);
    let (p, _) = inner.solve(&model)?;

    // Curvature of the profile chi-square; the stencil stays inside m_D >= 0.
    let h = [0.05 * md.max(0.02), 0.01 * mb];
    let cd = md.max(h[0]);
    let f = |a: f64, b: f64| inner.chi2(guess, cd + a * h[0], mb + b * h[1]);
    let f0 = f(0.0, 0.0);
    let hdd = (f(1.0, 0.0) - 2.0 * f0 + f(-1.0, 0.0)) / (h[0] * h[0]);
    let hbb = (f(0.0, 1.0) - 2.0 * f0 + f(0.0, -1.0)) / (h[1] * h[1]);
    let hdb = (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h[0] * h[1]);
    let det = hdd * hbb - hdb * hdb;
    let (var_d, var_b) = if hdd > 0.0 && hbb > 0.0 && det > 0.0 {
        (2.0 * hbb / det, 2.0 * hdd / det)
    } else if hdd > 0.0 && hbb > 0.0 {
        log::warn!("chi-square curvature is not positive definite; using diagonal errors");
        (2.0 / hdd, 2.0 / hbb)
    } else {
        return Err(Error::Fit(format!("chi-square has no curvature at the optimum (H_DD = {hdd}, H_BB = {hbb})")));
    };
    if !(var_d.is_finite() && var_b.is_finite()) {
        return Err(Error::Fit("photon-mean uncertainties are not finite".into()));
    }
    let dof = hist.occupied_bins() as i64 - n as i64 - 2;
    Ok(FitResult {
        distribution: SpinDistribution::new(p.iter().copied().collect())?,
        mean_dark: md,
        mean_bright: mb,
        mean_dark_err: var_d.sqrt(),
        mean_bright_err: var_b.sqrt(),
        chi2,
        dof,
        evaluations,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_resample: usize,
    pub seed: u64,
    /// Intensity-jitter values to take the envelope over; empty uses the fit model's value.
    pub jitter_envelope: Vec<f64>,
    /// Also Poisson-resample every histogram bin in each draw.
    pub resample_counts: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { n_resample: 400, seed: 0, jitter_envelope: Vec::new(), resample_counts: true }
    }
}

/// Gaussian widths of the resampled quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McErrorBars {
    pub p: Vec<f64>,
    pub m_x: f64,
    pub g_scaled: f64,
    pub p_fm: f64,
    pub draws: usize,
    pub failures: usize,
}

/// Largest tolerated fraction of failed resampling draws.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

fn widths(samples: &[Vec<f64>]) -> Vec<f64> {
    let m = samples.len() as f64;
    let d = samples[0].len();
    (0..d)
        .map(|j| {
            let mean = samples.iter().map(|s| s[j]).sum::<f64>() / m;
            // Maximum-likelihood Gaussian width.
            (samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / m).sqrt()
        })
        .collect()
}

fn mc_single(hist: &CountHistogram, fit: &FitResult, model: &PhotonModel, opts: &McOptions) -> Result<McErrorBars> {
    let n = fit.distribution.n;
    let draws: Vec<Option<Vec<f64>>> = (0..opts.n_resample)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let md = Normal::new(fit.mean_dark, fit.mean_dark_err).ok()?.sample(&mut rng).max(0.0);
            let mb = Normal::new(fit.mean_bright, fit.mean_bright_err).ok()?.sample(&mut rng);
            if mb <= md {
                return None;
            }
            let resampled;
            let h = if opts.resample_counts {
                resampled = CountHistogram::new(
                    hist.counts
                        .iter()
                        .map(|&c| {
                            if c == 0 {
                                0
                            } else {
                                rand_distr::Poisson::new(c as f64).map(|d| d.sample(&mut rng) as u64).unwrap_or(c)
                            }
                        })
                        .collect(),
                );
                &resampled
            } else {
                hist
            };
            let inner = Inner {
                hist: h,
                n,
                max_count: hist.max_count().max(model.default_max_count(n)),
                total: h.total() as f64,
            };
            let (p, _) = inner.solve(&model.with_means(md, mb)).ok()?;
            let dist = SpinDistribution::new(p.iter().copied().collect()).ok()?;
            let op = scale_order_params(&dist).ok()?;
            let mut row: Vec<f64> = dist.p;
            row.extend([op.m_x, op.g_scaled, op.p_fm]);
            row.iter().all(|v| v.is_finite()).then_some(row)
        })
        .collect();
    let ok: Vec<Vec<f64>> = draws.iter().flatten().cloned().collect();
    let failures = opts.n_resample - ok.len();
    if ok.len() < 2 || failures as f64 > MAX_FAILURE_FRACTION * opts.n_resample as f64 {
        return Err(Error::Fit(format!("{failures} of {} resampling draws failed", opts.n_resample)));
    }
    let w = widths(&ok);
    Ok(McErrorBars {
        p: w[..=n].to_vec(),
        m_x: w[n + 1],
        g_scaled: w[n + 2],
        p_fm: w[n + 3],
        draws: opts.n_resample,
        failures,
    })
}

/// Monte Carlo error bars for a fit: photon means drawn from their fitted
/// Gaussians, optionally with the histogram resampled, P(s) re-solved each time.
/// With a jitter envelope each width is the maximum over the listed values.
pub fn mc_error_bars(hist: &CountHistogram, fit: &FitResult, opts: &McOptions) -> Result<McErrorBars> {
    if fit.distribution.n < 2 {
        return Err(Error::Fit("error bars need N >= 2 for the scaled order parameters".into()));
    }
    if opts.n_resample < 2 {
        return Err(Error::InvalidInput("n_resample must be at least 2".into()));
    }
    let jitters =
        if opts.jitter_envelope.is_empty() { vec![fit.model.intensity_jitter] } else { opts.jitter_envelope.clone() };
    let mut out: Option<McErrorBars> = None;
    for jit in jitters {
        let model = PhotonModel { intensity_jitter: jit, ..fit.model };
        let bars = mc_single(hist, fit, &model, opts)?;
        out = Some(match out {
            None => bars,
            Some(mut acc) => {
                acc.p.iter_mut().zip(&bars.p).for_each(|(a, b)| *a = a.max(*b));
                acc.m_x = acc.m_x.max(bars.m_x);
                acc.g_scaled = acc.g_scaled.max(bars.g_scaled);
                acc.p_fm = acc.p_fm.max(bars.p_fm);
                acc.draws += bars.draws;
                acc.failures += bars.failures;
                acc
            }
        });
    }
    out.ok_or_else(|| Error::Fit("no error bars computed".into()))
}
