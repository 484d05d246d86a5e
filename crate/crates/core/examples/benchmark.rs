//! Ensemble throughput across worker counts, checking bit-identical output.
//!
//! `cargo run --release --example benchmark -- 9 200`

use ionsim::cli::{bench_rows, RunConfig};

fn main() -> ionsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().unwrap_or_else(|| "9".into());
    let n_traj = args.next().unwrap_or_else(|| "200".into());
    let cfg = RunConfig::from_toml_with_overrides(
        "",
        &[
            ("bench.n_values".into(), format!("[{n}]")),
            ("n_traj".into(), n_traj),
            ("bench.workers".into(), "[1, 2, 4, 8]".into()),
        ],
    )?;
    let cores = std::thread::available_parallelism().map_or(1, |p| p.get());
    println!("host cores: {cores}");
    println!(" N  workers  traj/s    efficiency  identical");
    for r in bench_rows(&cfg)? {
        println!("{:>2} {:>8} {:>8.1} {:>12.2} {:>10}", r.n, r.workers, r.traj_per_second, r.efficiency, r.identical);
    }
    Ok(())
}
