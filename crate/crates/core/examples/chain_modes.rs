//! Equilibrium positions and transverse normal modes of an ion chain.
//!
//! `cargo run --release --example chain_modes -- 9`

use ionsim::chain::{equilibrium_positions, transverse_modes, TrapConfig};

fn main() -> ionsim::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(9);
    let cfg = TrapConfig::experiment(n);
    let geom = equilibrium_positions(n)?;
    let modes = transverse_modes(&cfg, &geom)?;

    println!("{n} ions, nu_x = {} kHz, nu_z = {} kHz", cfg.nu_x, cfg.nu_z);
    println!("length scale {:.3} um", cfg.length_scale() * 1e6);
    println!("positions (dimensionless): {:?}", geom.positions.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
    println!("\n mode   freq (kHz)   eta (ion 1)   eigenvector");
    for m in 0..n {
        let b: Vec<String> = (0..n).map(|i| format!("{:+.3}", modes.vectors[(i, m)])).collect();
        println!("{:>5} {:>12.3} {:>13.5}   {}", m + 1, modes.frequencies[m], modes.lamb_dicke[(0, m)], b.join(" "));
    }
    if n >= 2 {
        let tilt = (cfg.nu_x.powi(2) - cfg.nu_z.powi(2)).sqrt();
        println!(
            "\nCOM at nu_x: {:.3e} rel. error; tilt at sqrt(nu_x^2 - nu_z^2): {:.3e}",
            modes.frequencies[0] / cfg.nu_x - 1.0,
            modes.frequencies[1] / tilt - 1.0
        );
    }
    Ok(())
}
