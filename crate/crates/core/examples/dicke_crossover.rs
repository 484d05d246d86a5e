//! Exact adiabatic crossover of the uniform-coupling model in the total-spin basis.
//!
//! `cargo run --release --example dicke_crossover -- 2 5 9 100`

use ionsim::observables::{
    crossing, crossover_sharpness, dicke_crossover, dicke_ground_state, log_grid, scale_order_params,
};

fn main() -> ionsim::Result<()> {
    let mut sizes: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if sizes.is_empty() {
        sizes = vec![2, 5, 9, 100];
    }
    let grid = log_grid(0.05, 20.0, 20);
    let curves = sizes.iter().map(|&n| dicke_crossover(n, &grid)).collect::<ionsim::Result<Vec<_>>>()?;

    print!("{:>9}", "B/|J|");
    sizes.iter().for_each(|n| print!("{:>10}", format!("N={n}")));
    println!();
    for (k, x) in grid.iter().enumerate().step_by(4) {
        print!("{x:>9.3}");
        curves.iter().for_each(|c| print!("{:>10.4}", c.g_scaled[k]));
        println!();
    }

    println!("\n   N   g=0.5 at B/|J|   max slope   gap at B=|J| (kHz)");
    for (c, (n, slope)) in curves.iter().zip(crossover_sharpness(&curves)?) {
        let gap = dicke_ground_state(n, 1.0, 1.0)?.gap;
        println!("{n:>4} {:>16.3} {slope:>11.3} {gap:>20.4}", crossing(c, 0.5).unwrap_or(f64::NAN));
    }

    let deep = scale_order_params(&dicke_ground_state(100, 1.0, 0.1)?.distribution)?;
    println!("\nN = 100 at B/|J| = 0.1: m_x = {:.4}, P(FM) = {:.4}", deep.m_x, deep.p_fm);
    Ok(())
}
