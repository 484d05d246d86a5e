//! Quantum-trajectory ensemble through the exponential field ramp with the
//! experimental noise rates, reporting order parameters along the ramp.
//!
//! `cargo run --release --example trajectory_ensemble -- 5 500`

use ionsim::cli::{build_chain, sim_config, RunConfig};
use ionsim::dynamics::run_ensemble;

fn main() -> ionsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let n_traj: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(500);

    let cfg = RunConfig::from_toml_with_overrides("", &[("trap.n_ions".into(), n.to_string())])?;
    let (_, _, j, mu) = build_chain(&cfg)?;
    let sim = sim_config(&cfg, j);
    println!(
        "N = {n}, mu - nu_COM = {:.1} kHz, mean J = {:.3} kHz, B0 = {:.3} kHz, tau = {} us",
        mu - cfg.trap.nu_x,
        sim.couplings.mean_j(),
        sim.ramp.b0,
        sim.ramp.tau
    );
    let stats = run_ensemble(&sim, n_traj, cfg.base_seed, 0)?;

    println!("\n t (us)    B/|J|     m_x      scaled m_x   scaled g        P(FM)");
    for (k, o) in stats.observables.iter().enumerate().step_by(2) {
        println!(
            "{:>7.1} {:>8.4} {:>8.4} {:>12.4} {:>10.4} {:>8.4} +- {:.4}",
            stats.sample_times[k], stats.b_over_j[k], o.m_x, o.m_x_scaled, o.g_scaled, o.p_fm, o.p_fm_sem
        );
    }
    let last = stats.p.last().unwrap();
    println!("\nfinal P(s): {}", last.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" "));
    Ok(())
}
