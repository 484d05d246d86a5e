//! One Monte-Carlo wave-function trajectory with strong noise, showing its jump record.
//!
//! `cargo run --release --example single_trajectory -- 42`

use ionsim::chain::CouplingMatrix;
use ionsim::dynamics::{run_trajectory, Branching, NoiseModel, RampSchedule, TrajectorySeed};

fn main() -> ionsim::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(42);
    let n = 4;
    let j = CouplingMatrix::uniform(n, 2.0);
    let ramp = RampSchedule::exponential(10.0, 80.0, 600.0, 0.0, 7);
    // Rates a hundred times the experimental ones, so a single run shows several jumps.
    let noise = NoiseModel { gamma_se: 10.0, gamma_deph: 30.0, branch: Branching::default() };

    let rec = run_trajectory(&j, &ramp, &noise, 0.0, TrajectorySeed { base: seed, index: 0 })?;
    println!("{} jumps:", rec.jumps.len());
    for e in &rec.jumps {
        println!("  t = {:>7.2} us  ion {}  {:?}", e.time, e.ion, e.channel);
    }
    println!("\n t (us)   P(s = 0..{n})");
    for (t, p) in ramp.sample_times.iter().zip(&rec.samples) {
        println!("{t:>7.1}   {}", p.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
