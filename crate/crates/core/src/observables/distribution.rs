//! P(s) distributions and the order parameters derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// P(s): probability that `s` of `N` spins read out up along X, s = 0..N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinDistribution {
    pub n: usize,
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sem: Option<Vec<f64>>,
}

impl SpinDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return invalid("distribution needs at least one bin");
        }
        if p.iter().any(|&v| !(v >= -1e-12)) {
            return invalid("distribution has negative or non-finite entries");
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("distribution sums to {total}, not 1"));
        }
        Ok(Self { n: p.len() - 1, p, sem: None })
    }

    pub fn with_sem(mut self, sem: Vec<f64>) -> Result<Self> {
        if sem.len() != self.p.len() {
            return Err(Error::DimensionMismatch { expected: self.p.len(), found: sem.len() });
        }
        self.sem = Some(sem);
        Ok(self)
    }

    /// The paramagnetic distribution C(N,s)/2^N.
    pub fn binomial(n: usize) -> Self {
        Self { n, p: binomial_weights(n), sem: None }
    }

    /// Even mixture of the two ferromagnetic configurations.
    pub fn ferromagnetic(n: usize) -> Self {
        let mut p = vec![0.0; n + 1];
        p[0] += 0.5;
        p[n] += 0.5;
        Self { n, p, sem: None }
    }

    /// Raw moment `sum (N - 2s)^k P(s)`.
    pub fn moment(&self, k: i32) -> f64 {
        self.p.iter().enumerate().map(|(s, &ps)| (self.n as f64 - 2.0 * s as f64).powi(k) * ps).sum()
    }
}

pub fn binomial_weights(n: usize) -> Vec<f64> {
    // Pascal row scaled by 2^-N in log space keeps large N finite.
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut ln_c = 0.0f64;
    let mut out = Vec::with_capacity(n + 1);
    for s in 0..=n {
        if s > 0 {
            ln_c += ((n - s + 1) as f64).ln() - (s as f64).ln();
        }
        out.push((ln_c - ln2n).exp());
    }
    out
}

/// Average absolute magnetization per site, `(1/N) sum |N - 2s| P(s)`.
pub fn magnetization(d: &SpinDistribution) -> f64 {
    let n = d.n as f64;
    d.p.iter().enumerate().map(|(s, &ps)| (n - 2.0 * s as f64).abs() * ps).sum::<f64>() / n
}

/// Binder cumulant `<M^4> / <M^2>^2` with `M = N - 2s`.
pub fn binder_cumulant(d: &SpinDistribution) -> Result<f64> {
    let m2 = d.moment(2);
    if m2 <= 0.0 {
        return Err(Error::UndefinedCumulant);
    }
    Ok(d.moment(4) / (m2 * m2))
}

/// Paramagnetic magnetization `(1/(N 2^N)) sum C(N,n) |N - 2n|`.
pub fn paramagnetic_magnetization(n: usize) -> f64 {
    magnetization(&SpinDistribution::binomial(n))
}

/// Paramagnetic Binder cumulant `3 - 2/N`.
pub fn paramagnetic_binder(n: usize) -> f64 {
    3.0 - 2.0 / n as f64
}

/// Raw and finite-size-rescaled order parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParams {
    pub m_x: f64,
    pub m_x_scaled: f64,
    pub g: f64,
    pub g_scaled: f64,
    pub p_fm: f64,
}

pub fn p_fm(d: &SpinDistribution) -> f64 {
    if d.n == 0 {
        return d.p[0];
    }
    d.p[0] + d.p[d.n]
}

/// Rescales so the binomial distribution maps to 0 and the ferromagnetic mixture to 1.
pub fn scale_order_params(d: &SpinDistribution) -> Result<OrderParams> {
    if d.n < 2 {
        return invalid("Binder scaling needs N >= 2 (3 - 2/N = 1 makes it singular)");
    }
    let m0 = paramagnetic_magnetization(d.n);
    let g0 = paramagnetic_binder(d.n);
    let m_x = magnetization(d);
    let g = binder_cumulant(d)?;
    Ok(OrderParams { m_x, m_x_scaled: (m0 - m_x) / (m0 - 1.0), g, g_scaled: (g0 - g) / (g0 - 1.0), p_fm: p_fm(d) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_spin_examples() {
        let fm = SpinDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(magnetization(&fm), 1.0);
        assert_eq!(binder_cumulant(&fm).unwrap(), 1.0);
        let para = SpinDistribution::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(magnetization(&para), 0.5);
        assert_eq!(binder_cumulant(&para).unwrap(), 2.0);
    }

    #[test]
    fn worked_rescaling() {
        let d = SpinDistribution::new(vec![0.45, 0.10, 0.45]).unwrap();
        let op = scale_order_params(&d).unwrap();
        assert!((op.m_x - 0.9).abs() < 1e-15);
        assert!((op.p_fm - 0.9).abs() < 1e-15);
        assert!((op.m_x_scaled - 0.8).abs() < 1e-14);
    }

    #[test]
    fn nine_spin_paramagnet() {
        // Direct sum of C(9,n)|9-2n| / (9 * 2^9).
        let c = [1.0, 9.0, 36.0, 84.0, 126.0, 126.0, 84.0, 36.0, 9.0, 1.0];
        let direct: f64 =
            c.iter().enumerate().map(|(n, cn)| cn * (9.0 - 2.0 * n as f64).abs()).sum::<f64>() / (9.0 * 512.0);
        assert!((paramagnetic_magnetization(9) - direct).abs() < 1e-15);
        let m2: f64 = c.iter().enumerate().map(|(n, cn)| cn * (9.0 - 2.0 * n as f64).powi(2)).sum::<f64>() / 512.0;
        let m4: f64 = c.iter().enumerate().map(|(n, cn)| cn * (9.0 - 2.0 * n as f64).powi(4)).sum::<f64>() / 512.0;
        let g = binder_cumulant(&SpinDistribution::binomial(9)).unwrap();
        assert!((g - m4 / (m2 * m2)).abs() < 1e-13);
        assert!((g - (3.0 - 2.0 / 9.0)).abs() < 1e-13);
    }

    #[test]
    fn undefined_cumulant_and_single_spin_scaling() {
        let d = SpinDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(binder_cumulant(&d), Err(Error::UndefinedCumulant)));
        let one = SpinDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(scale_order_params(&one).is_err());
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(SpinDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(SpinDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(SpinDistribution::new(vec![]).is_err());
    }
}
