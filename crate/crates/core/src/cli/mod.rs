//! Configuration, command dispatch and reproducible output files.

mod commands;
mod config;
mod output;

pub use commands::{
    bench_rows, build_chain, cmd_bench, cmd_couplings, cmd_dicke, cmd_fit, cmd_modes, cmd_oracle, cmd_sweep,
    cmd_synthesize, execute, fit_with_errors, resolve_ramp, sim_config, sweep_stats, synthesize, z_score, BenchRow,
    Command, CouplingReport, DickeSummary, FitReport, OracleComparison, Outcome,
};
pub use config::{
    parse_override, BenchConfig, DetectConfig, DickeConfig, NoiseConfig, Omega, OracleConfig, OutputConfig, RampConfig,
    RunConfig, SweepConfig,
};
pub use output::{num, read_csv_header, Report, Table};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_COMPARISON: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}
