//! Trajectory ensemble against the exact density-matrix evolution for two ions.
//!
//! `cargo run --release --example lindblad_oracle -- 4000`

use ionsim::cli::{cmd_oracle, RunConfig};

fn main() -> ionsim::Result<()> {
    let n_traj = std::env::args().nth(1).unwrap_or_else(|| "4000".into());
    let cfg =
        RunConfig::from_toml_with_overrides("", &[("trap.n_ions".into(), "2".into()), ("n_traj".into(), n_traj)])?;
    let (report, cmp) = cmd_oracle(&cfg)?;

    let t = &report.table;
    let col = |name: &str| t.values(name).unwrap();
    let (time, p, p_ref, z) = (col("t_us"), col("p_fm"), col("p_fm_oracle"), col("z_p_fm"));
    println!(" t (us)   P(FM) traj   P(FM) exact    z");
    for k in (0..time.len()).step_by(3) {
        println!("{:>7.1} {:>12.4} {:>13.4} {:>6.2}", time[k], p[k], p_ref[k], z[k]);
    }
    println!("\nlargest z over all observables and times: {:.2} (threshold {})", cmp.max_z, cmp.threshold);
    println!("{}", if cmp.passed { "agreement" } else { "disagreement" });
    Ok(())
}
