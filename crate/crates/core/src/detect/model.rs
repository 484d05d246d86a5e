//! Photon-count distributions for bright and dark ions.
//!
//! A single ion's count is a mixture of Poisson distributions. Each mixture
//! component is one (pumping time, intensity) combination:
//!
//! * optical pumping during the window truncates the exposure: a bright ion
//!   pumped dark at fraction `f` of the window emits `m_B f + m_D (1 - f)`,
//!   and a dark ion pumped bright emits `m_D f + m_B (1 - f)`; pumping
//!   times are exponential, conditioned on pumping within the window, and
//!   discretized into [`EXPOSURE_BINS`] bins;
//! * a Gaussian intensity fluctuation multiplies the mean;
//! * a three-step beam profile mixes three scaled copies.
//!
//! The last PMF bin holds the tail mass `P(k >= K)`, so every PMF sums to 1.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const EXPOSURE_BINS: usize = 32;
/// Nodes for the intensity-jitter Gaussian, unit spacing over +-5 sigma.
/// The trapezoid rule on a Gaussian at this spacing is accurate to ~1e-8.
const JITTER_NODES: usize = 11;
/// Probabilities below this are dropped from inner loops.
const NEGLIGIBLE: f64 = 1e-25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    /// Relative intensities of the three steps.
    pub intensities: [f64; 3],
    /// Fraction of ions in each step.
    pub occupancy: [f64; 3],
}

impl Default for BeamProfile {
    fn default() -> Self {
        Self { intensities: [0.9, 1.0, 0.9], occupancy: [0.25, 0.5, 0.25] }
    }
}

impl BeamProfile {
    pub fn flat() -> Self {
        Self { intensities: [1.0; 3], occupancy: [0.0, 1.0, 0.0] }
    }
}

/// Fluorescence detection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonModel {
    /// Mean counts of one bright ion per detection window.
    pub mean_bright: f64,
    /// Mean counts attributed to one dark ion (background and scatter).
    pub mean_dark: f64,
    pub leak_bright_to_dark: f64,
    pub leak_dark_to_bright: f64,
    /// Fractional standard deviation of the detection intensity.
    #[serde(default = "default_jitter")]
    pub intensity_jitter: f64,
    #[serde(default)]
    pub beam_profile: BeamProfile,
}

fn default_jitter() -> f64 {
    0.05
}

impl PhotonModel {
    /// Ideal Poisson detection: no leaks, jitter or profile.
    pub fn ideal(mean_bright: f64, mean_dark: f64) -> Self {
        Self {
            mean_bright,
            mean_dark,
            leak_bright_to_dark: 0.0,
            leak_dark_to_bright: 0.0,
            intensity_jitter: 0.0,
            beam_profile: BeamProfile::flat(),
        }
    }

    /// Mean 12 bright counts, weak background, 5% jitter, default beam profile.
    /// The pumping leak is left at zero; see [`tune_bright_leak`].
    pub fn experiment() -> Self {
        Self {
            mean_bright: 12.0,
            mean_dark: 0.1,
            leak_bright_to_dark: 0.0,
            leak_dark_to_bright: 0.002,
            intensity_jitter: 0.05,
            beam_profile: BeamProfile::default(),
        }
    }

    pub fn with_means(mut self, mean_dark: f64, mean_bright: f64) -> Self {
        self.mean_dark = mean_dark;
        self.mean_bright = mean_bright;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_bright > self.mean_dark && self.mean_dark >= 0.0) {
            return invalid(format!(
                "require m_B > m_D >= 0, got m_B = {}, m_D = {}",
                self.mean_bright, self.mean_dark
            ));
        }
        for p in [self.leak_bright_to_dark, self.leak_dark_to_bright] {
            if !(0.0..=1.0).contains(&p) {
                return invalid("leak probabilities must lie in [0, 1]");
            }
        }
        if !(self.intensity_jitter >= 0.0) {
            return invalid("intensity jitter must be non-negative");
        }
        let bp = &self.beam_profile;
        if bp.intensities.iter().any(|&w| !(w > 0.0)) || bp.occupancy.iter().any(|&o| !(o >= 0.0)) {
            return invalid("beam profile intensities must be positive and occupancies non-negative");
        }
        if (bp.occupancy.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return invalid("beam profile occupancies must sum to 1");
        }
        Ok(())
    }

    /// Count range large enough that N ions leave negligible mass above it.
    pub fn default_max_count(&self, n: usize) -> usize {
        let top = n as f64 * self.mean_bright * self.beam_profile.intensities.iter().fold(0.0f64, |a, &b| a.max(b))
            / self.mean_intensity()
            * (1.0 + 5.0 * self.intensity_jitter);
        (top + 10.0 * top.sqrt() + 20.0).ceil() as usize
    }

    fn mean_intensity(&self) -> f64 {
        let bp = &self.beam_profile;
        bp.intensities.iter().zip(&bp.occupancy).map(|(i, o)| i * o).sum()
    }

    /// Multiplicative intensity factors with weights: jitter nodes times profile steps,
    /// normalized to unit mean intensity.
    fn intensity_factors(&self) -> Vec<(f64, f64)> {
        let jitter: Vec<(f64, f64)> = if self.intensity_jitter > 0.0 {
            let raw: Vec<(f64, f64)> = (0..JITTER_NODES)
                .map(|q| {
                    let z = -5.0 + 10.0 * q as f64 / (JITTER_NODES - 1) as f64;
                    ((-0.5 * z * z).exp(), (1.0 + self.intensity_jitter * z).max(0.0))
                })
                .collect();
            let total: f64 = raw.iter().map(|r| r.0).sum();
            raw.into_iter().map(|(w, s)| (w / total, s)).collect()
        } else {
            vec![(1.0, 1.0)]
        };
        let bp = &self.beam_profile;
        let norm = self.mean_intensity();
        let mut out = Vec::with_capacity(jitter.len() * 3);
        for (o, i) in bp.occupancy.iter().zip(&bp.intensities) {
            if *o > 0.0 {
                for (w, s) in &jitter {
                    out.push((o * w, s * i / norm));
                }
            }
        }
        out
    }
}

/// Exposure fractions and weights for a pumping event with total probability `leak`.
fn exposure_mixture(leak: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(1.0 - leak, 1.0)];
    if leak <= 0.0 {
        return out;
    }
    // P(t < T) = leak with exponential pumping: rate r = -ln(1 - leak) per window.
    let rate = (-(1.0 - leak).ln()).min(700.0);
    for k in 0..EXPOSURE_BINS {
        let a = k as f64 / EXPOSURE_BINS as f64;
        let b = (k + 1) as f64 / EXPOSURE_BINS as f64;
        let w = (-rate * a).exp() - (-rate * b).exp();
        // Conditional mean of t within [a, b].
        let mean = if rate * (b - a) < 1e-8 {
            0.5 * (a + b)
        } else {
            (a * (-rate * a).exp() - b * (-rate * b).exp()) / w + 1.0 / rate
        };
        out.push((w, mean));
    }
    let total: f64 = out.iter().map(|o| o.0).sum();
    out.iter_mut().for_each(|o| o.0 /= total);
    out
}

/// Poisson PMF on 0..=max_count with the tail folded into the last bin, added with `weight`.
pub(crate) fn add_poisson(out: &mut [f64], lambda: f64, weight: f64) {
    let last = out.len() - 1;
    if lambda <= 0.0 {
        out[0] += weight;
        return;
    }
    let mut term = (-lambda).exp();
    let mut acc = 0.0;
    for (k, slot) in out.iter_mut().enumerate().take(last) {
        if k > 0 {
            term *= lambda / k as f64;
            if term < NEGLIGIBLE && k as f64 > lambda {
                break;
            }
        }
        *slot += weight * term;
        acc += term;
    }
    out[last] += weight * (1.0 - acc).max(0.0);
}

/// Mixture components `(weight, mean)` for one ion.
pub fn ion_components(model: &PhotonModel, bright: bool) -> Vec<(f64, f64)> {
    let (start, end, leak) = if bright {
        (model.mean_bright, model.mean_dark, model.leak_bright_to_dark)
    } else {
        (model.mean_dark, model.mean_bright, model.leak_dark_to_bright)
    };
    let factors = model.intensity_factors();
    let mut out = Vec::new();
    for (we, f) in exposure_mixture(leak) {
        let lambda = start * f + end * (1.0 - f);
        for &(wi, s) in &factors {
            out.push((we * wi, lambda * s));
        }
    }
    out
}

/// Count PMF of one bright or dark ion over `0..=max_count`.
pub fn single_ion_pmf(model: &PhotonModel, bright: bool, max_count: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_count + 1];
    for (w, lambda) in ion_components(model, bright) {
        add_poisson(&mut out, lambda, w);
    }
    out
}

/// Discrete convolution truncated to `a.len()` bins, tail folded into the last bin.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len();
    let mut out = vec![0.0; len];
    let b_end = b.iter().rposition(|&v| v > NEGLIGIBLE).map_or(0, |e| e + 1);
    let b = &b[..b_end];
    for (i, &ai) in a.iter().enumerate() {
        if ai <= NEGLIGIBLE {
            continue;
        }
        let direct = b.len().min(len - 1 - i);
        for (o, &bj) in out[i..i + direct].iter_mut().zip(b) {
            *o += ai * bj;
        }
        out[len - 1] += ai * b[direct..].iter().sum::<f64>();
    }
    out
}

/// PMFs for s = 0..=N bright ions among N.
pub fn basis_functions(model: &PhotonModel, n: usize, max_count: usize) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    if n == 0 {
        return invalid("N must be at least 1");
    }
    let bright = single_ion_pmf(model, true, max_count);
    let dark = single_ion_pmf(model, false, max_count);
    let mut delta = vec![0.0; max_count + 1];
    delta[0] = 1.0;
    // dark_pow[k] = k-fold convolution of the dark PMF.
    let mut dark_pow = vec![delta.clone()];
    for k in 1..=n {
        dark_pow.push(convolve(&dark_pow[k - 1], &dark));
    }
    let mut bright_pow = delta;
    let mut out = Vec::with_capacity(n + 1);
    for s in 0..=n {
        if s > 0 {
            bright_pow = convolve(&bright_pow, &bright);
        }
        let mut f = convolve(&bright_pow, &dark_pow[n - s]);
        let total: f64 = f.iter().sum();
        f.iter_mut().for_each(|v| *v /= total);
        out.push(f);
    }
    Ok(out)
}

/// `sum_k min(a_k, b_k)`.
pub fn overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).sum()
}

/// Overlap of the single-ion bright and dark PMFs.
pub fn bright_dark_overlap(model: &PhotonModel) -> f64 {
    let k = model.default_max_count(1);
    overlap(&single_ion_pmf(model, true, k), &single_ion_pmf(model, false, k))
}

/// Chooses the bright-to-dark leak so the single-ion overlap hits `target`.
pub fn tune_bright_leak(model: &PhotonModel, target: f64) -> Result<PhotonModel> {
    let at = |leak: f64| bright_dark_overlap(&PhotonModel { leak_bright_to_dark: leak, ..*model });
    let (mut lo, mut hi) = (0.0, 0.999);
    if at(lo) > target || at(hi) < target {
        return invalid(format!("overlap {target} not reachable by tuning the leak"));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PhotonModel { leak_bright_to_dark: 0.5 * (lo + hi), ..*model })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson(lambda: f64, k: usize) -> f64 {
        let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
        (k as f64 * lambda.ln() - lambda - ln_fact).exp()
    }

    #[test]
    fn ideal_bright_is_poisson() {
        let m = PhotonModel::ideal(12.0, 0.5);
        let pmf = single_ion_pmf(&m, true, 80);
        for (k, p) in pmf.iter().take(60).enumerate() {
            assert!((p - poisson(12.0, k)).abs() < 1e-14);
        }
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_dark_is_delta() {
        let m = PhotonModel::ideal(12.0, 0.0);
        let pmf = single_ion_pmf(&m, false, 40);
        assert_eq!(pmf[0], 1.0);
        assert!(pmf[1..].iter().all(|&v| v == 0.0));
        let basis = basis_functions(&m, 3, 60).unwrap();
        assert_eq!(basis[0][0], 1.0);
    }

    #[test]
    fn basis_means_are_additive() {
        let m = PhotonModel { intensity_jitter: 0.0, leak_bright_to_dark: 0.03, ..PhotonModel::experiment() };
        let k = m.default_max_count(4);
        let mean = |p: &[f64]| p.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>();
        let mb = mean(&single_ion_pmf(&m, true, k));
        let md = mean(&single_ion_pmf(&m, false, k));
        let basis = basis_functions(&m, 4, k).unwrap();
        for (s, f) in basis.iter().enumerate() {
            assert!((mean(f) - (s as f64 * mb + (4 - s) as f64 * md)).abs() < 1e-9);
        }
    }

    #[test]
    fn two_ion_middle_basis_is_bright_times_dark() {
        let m = PhotonModel::experiment();
        let k = m.default_max_count(2);
        let basis = basis_functions(&m, 2, k).unwrap();
        let direct = convolve(&single_ion_pmf(&m, true, k), &single_ion_pmf(&m, false, k));
        for (a, b) in basis[1].iter().zip(&direct) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pmfs_are_normalized() {
        let m = tune_bright_leak(&PhotonModel::experiment(), 0.01).unwrap();
        for bright in [true, false] {
            let p = single_ion_pmf(&m, bright, 60);
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for f in basis_functions(&m, 9, m.default_max_count(9)).unwrap() {
            assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn overlap_tuning_hits_one_percent() {
        let m = tune_bright_leak(&PhotonModel::experiment(), 0.01).unwrap();
        assert!((bright_dark_overlap(&m) - 0.01).abs() < 1e-9);
        assert!(m.leak_bright_to_dark > 0.0);
    }

    #[test]
    fn overlap_grows_with_leak() {
        let base = PhotonModel::experiment();
        let mut last = 0.0;
        for leak in [0.0, 0.01, 0.03, 0.1, 0.3] {
            let o = bright_dark_overlap(&PhotonModel { leak_bright_to_dark: leak, ..base });
            assert!(o > last);
            last = o;
        }
    }

    #[test]
    fn exposure_weights_sum_to_one() {
        for leak in [0.0, 0.02, 0.5, 0.999] {
            let w: f64 = exposure_mixture(leak).iter().map(|c| c.0).sum();
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_models() {
        assert!(PhotonModel::ideal(1.0, 2.0).validate().is_err());
        let mut m = PhotonModel::experiment();
        m.beam_profile.occupancy = [0.5, 0.5, 0.5];
        assert!(m.validate().is_err());
    }
}
