use serde::{Deserialize, Serialize};

use super::dicke::dicke_ground_state;
use super::distribution::scale_order_params;
use crate::error::{invalid, Result};

/// Minimum sampling density of a crossover curve in log10(B/|J|).
pub const MIN_POINTS_PER_DECADE: f64 = 10.0;

/// Scaled Binder cumulant sampled against B/|J| for one system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverCurve {
    pub n: usize,
    pub b_over_j: Vec<f64>,
    pub g_scaled: Vec<f64>,
}

/// Logarithmic grid from `lo` to `hi` with the given density, endpoints included.
pub fn log_grid(lo: f64, hi: f64, points_per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * points_per_decade as f64).ceil().max(1.0) as usize;
    (0..=steps).map(|k| lo * (hi / lo).powf(k as f64 / steps as f64)).collect()
}

/// Exact adiabatic crossover from the uniform-coupling ground state.
pub fn dicke_crossover(n: usize, grid: &[f64]) -> Result<CrossoverCurve> {
    let g_scaled = grid
        .iter()
        .map(|&x| Ok(scale_order_params(&dicke_ground_state(n, 1.0, x)?.distribution)?.g_scaled))
        .collect::<Result<Vec<f64>>>()?;
    Ok(CrossoverCurve { n, b_over_j: grid.to_vec(), g_scaled })
}

/// Field ratio where the curve first rises through `level` scanning from
/// high to low B/|J|, interpolated linearly in ln(B/|J|).
pub fn crossing(curve: &CrossoverCurve, level: f64) -> Option<f64> {
    let x = &curve.b_over_j;
    let y = &curve.g_scaled;
    (1..x.len()).rev().find_map(|k| {
        let (hi, lo) = (k, k - 1);
        if (y[hi] - level) * (y[lo] - level) <= 0.0 && y[hi] != y[lo] {
            let t = (level - y[hi]) / (y[lo] - y[hi]);
            Some((x[hi].ln() + t * (x[lo].ln() - x[hi].ln())).exp())
        } else {
            None
        }
    })
}

/// Largest finite-difference |d g_scaled / d ln(B/|J|)| for each curve.
pub fn crossover_sharpness(curves: &[CrossoverCurve]) -> Result<Vec<(usize, f64)>> {
    let Some(first) = curves.first() else {
        return Ok(Vec::new());
    };
    let grid = &first.b_over_j;
    if grid.len() < 2 || grid.iter().any(|&x| !(x > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("crossover grid must be positive and strictly increasing");
    }
    let decades = (grid[grid.len() - 1] / grid[0]).log10();
    let density = (grid.len() - 1) as f64 / decades;
    if density < MIN_POINTS_PER_DECADE - 1e-9 {
        return invalid(format!("grid has {density:.2} points per decade; need {MIN_POINTS_PER_DECADE}"));
    }
    curves
        .iter()
        .map(|c| {
            if c.b_over_j.len() != grid.len()
                || c.g_scaled.len() != grid.len()
                || c.b_over_j.iter().zip(grid).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs())
            {
                return invalid(format!("curve for N = {} is not on the common grid", c.n));
            }
            let slope = (1..grid.len())
                .map(|k| ((c.g_scaled[k] - c.g_scaled[k - 1]) / (grid[k] / grid[k - 1]).ln()).abs())
                .fold(0.0, f64::max);
            Ok((c.n, slope))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_curve_has_zero_slope() {
        let grid = log_grid(0.1, 10.0, 10);
        let flat = CrossoverCurve { n: 3, b_over_j: grid.clone(), g_scaled: vec![0.4; grid.len()] };
        assert_eq!(crossover_sharpness(&[flat]).unwrap(), vec![(3, 0.0)]);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = log_grid(0.1, 10.0, 4);
        let c = CrossoverCurve { n: 2, b_over_j: grid.clone(), g_scaled: vec![0.0; grid.len()] };
        assert!(crossover_sharpness(&[c]).is_err());
    }

    #[test]
    fn crossing_interpolates_in_log_field() {
        let c = CrossoverCurve { n: 2, b_over_j: vec![0.1, 1.0, 10.0], g_scaled: vec![1.0, 0.6, 0.2] };
        let x = crossing(&c, 0.5).unwrap();
        assert!((x.log10() - 0.25).abs() < 1e-12);
        assert!(crossing(&c, 2.0).is_none());
    }

    #[test]
    fn larger_systems_are_sharper() {
        let grid = log_grid(0.05, 20.0, 40);
        let curves: Vec<_> = [2, 9, 100].iter().map(|&n| dicke_crossover(n, &grid).unwrap()).collect();
        let s = crossover_sharpness(&curves).unwrap();
        assert!(s[1].1 > s[0].1);
        assert!(s[2].1 > s[1].1);
    }
}
