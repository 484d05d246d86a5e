//! Phonon-mediated Ising couplings and their power-law range versus detuning.
//!
//! `cargo run --release --example coupling_range`

use ionsim::chain::{build_couplings, coupling_range_scan, fit_power_law, TrapConfig};

fn main() -> ionsim::Result<()> {
    let n = 9;
    let omega = [370.0];
    let cfg = TrapConfig::experiment(n);
    let mu = cfg.nu_x + 30.0;
    let (_, _, j) = build_couplings(&cfg, &omega, mu)?;

    println!("J_ij (kHz), N = {n}, Omega = {} kHz, mu = nu_1 + 30 kHz:", omega[0]);
    for row in j.rows() {
        println!("  {}", row.iter().map(|v| format!("{v:7.3}")).collect::<Vec<_>>().join(" "));
    }
    println!("mean J = {:.3} kHz, mean J / N = {:.3} kHz", j.mean_j(), j.mean_j() / n as f64);
    if let Some(fit) = fit_power_law(&j) {
        println!("J_(1,1+r) ~ {:.3} / r^{:.3}", fit.prefactor, fit.exponent);
    }

    println!("\n detuning above COM (kHz)   exponent");
    let offsets = [10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 9.0 * cfg.nu_x];
    let mus: Vec<f64> = offsets.iter().map(|d| cfg.nu_x + d).collect();
    for (mu, fit) in coupling_range_scan(&cfg, &omega, &mus)? {
        println!("{:>25.1} {:>10.3}", mu - cfg.nu_x, fit.map_or(f64::NAN, |f| f.exponent));
    }
    Ok(())
}
