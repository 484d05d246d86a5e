//! Library use of the command layer: TOML config plus overrides, a command run,
//! and the CSV/JSON files with their reproducibility header.
//!
//! `cargo run --release --example config_pipeline`

use ionsim::cli::{execute, read_csv_header, Command, RunConfig};

const CONFIG: &str = r#"
n_traj = 100
base_seed = 12345

[trap]
n_ions = 3

[ramp]
tau = 80.0
samples = 9

[sweep]
n_values = [2, 3]
"#;

fn main() -> ionsim::Result<()> {
    let dir = std::env::temp_dir().join("ionsim-config-pipeline");
    let overrides = vec![
        ("ramp.tau".to_string(), "60.0".to_string()),
        ("output.dir".to_string(), format!("{:?}", dir.display().to_string())),
    ];
    let cfg = RunConfig::from_toml_with_overrides(CONFIG, &overrides)?;
    println!("resolved tau = {} us (override wins over the file's 80)", cfg.ramp.tau);

    let outcome = execute(&Command::Sweep, &cfg)?;
    for path in outcome.report.write_files(&cfg)? {
        println!("wrote {}", path.display());
    }
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).map_err(ionsim::Error::Io)?;
    let header = read_csv_header(&csv).expect("header line");
    println!(
        "header: command = {}, base_seed = {}, ramp = {}",
        header["command"], header["config"]["base_seed"], header["config"]["ramp"]
    );
    println!("\nfirst rows:");
    csv.lines().skip(1).take(4).for_each(|l| println!("  {l}"));
    Ok(())
}
