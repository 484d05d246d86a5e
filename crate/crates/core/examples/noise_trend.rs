//! Final ferromagnetic probability versus system size, with and without noise.
//!
//! `cargo run --release --example noise_trend -- 200`

use ionsim::cli::{build_chain, sim_config, RunConfig};
use ionsim::dynamics::run_ensemble;

fn final_p_fm(cfg: &RunConfig, n: usize, n_traj: u64) -> ionsim::Result<(f64, f64)> {
    let c = cfg.with_n(n);
    let (_, _, j, _) = build_chain(&c)?;
    let stats = run_ensemble(&sim_config(&c, j), n_traj, c.base_seed, 0)?;
    let o = stats.observables.last().unwrap();
    Ok((o.p_fm, o.p_fm_sem))
}

fn main() -> ionsim::Result<()> {
    let n_traj: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let noisy = RunConfig::from_toml_with_overrides("", &[])?;
    let clean = RunConfig::from_toml_with_overrides(
        "",
        &[("noise.gamma_se".into(), "0".into()), ("noise.gamma_deph".into(), "0".into())],
    )?;

    println!("  N   P(FM) noisy        P(FM) noiseless");
    for n in 2..=9 {
        let (p, e) = final_p_fm(&noisy, n, n_traj)?;
        // Without noise or preparation error every trajectory is identical.
        let (q, _) = final_p_fm(&clean, n, 1)?;
        println!("{n:>3}   {p:.3} +- {e:.3}      {q:.4}");
    }
    Ok(())
}
