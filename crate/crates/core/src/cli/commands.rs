//! Pipeline wiring for each subcommand.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::RunConfig;
use super::output::{num, Report, Table};
use crate::chain::{
    coupling_matrix, equilibrium_positions, fit_power_law, sideband_coupling, transverse_modes, ChainGeometry,
    CouplingMatrix, ModeData, PowerLawFit,
};
use crate::detect::{
    fit_histogram, mc_error_bars, synthesize_histogram, CountHistogram, FitResult, McErrorBars, McOptions,
};
use crate::dynamics::{run_ensemble, EnsembleStats, RampSchedule, SimConfig};
use crate::error::{Error, Result};
use crate::observables::{
    crossing, crossover_sharpness, dicke_ground_state, lindblad_oracle, log_grid, scale_order_params, CrossoverCurve,
    OrderParams, SpinDistribution, MAX_ORACLE_IONS,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Modes,
    Couplings,
    Sweep,
    Dicke,
    Oracle,
    Fit { histogram: PathBuf },
    Synthesize,
    Bench,
}

/// A finished command. `comparison_passed` is false only when an oracle
/// comparison ran to completion and disagreed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub comparison_passed: bool,
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let ok = |report| Ok(Outcome { report, comparison_passed: true });
    match command {
        Command::Modes => ok(cmd_modes(cfg)?),
        Command::Couplings => ok(cmd_couplings(cfg)?),
        Command::Sweep => ok(cmd_sweep(cfg)?),
        Command::Dicke => ok(cmd_dicke(cfg)?),
        Command::Oracle => {
            let (report, cmp) = cmd_oracle(cfg)?;
            Ok(Outcome { report, comparison_passed: cmp.passed })
        }
        Command::Fit { histogram } => ok(cmd_fit(cfg, histogram)?),
        Command::Synthesize => ok(cmd_synthesize(cfg)?),
        Command::Bench => ok(cmd_bench(cfg)?),
    }
}

/// Chain, modes, couplings and the resolved beatnote for `cfg.trap`.
pub fn build_chain(cfg: &RunConfig) -> Result<(ChainGeometry, ModeData, CouplingMatrix, f64)> {
    let geom = equilibrium_positions(cfg.trap.n_ions)?;
    let modes = transverse_modes(&cfg.trap, &geom)?;
    let mu = cfg.resolved_mu(modes.frequencies[0], sideband_coupling(&modes, cfg.omega.as_slice(), 0)?);
    let j = coupling_matrix(&modes, cfg.omega.as_slice(), mu)?;
    Ok((geom, modes, j, mu))
}

/// Ramp with `B0` resolved against the mean coupling.
pub fn resolve_ramp(cfg: &RunConfig, mean_j: f64) -> RampSchedule {
    let r = &cfg.ramp;
    let b0 = r.b0.unwrap_or(r.b0_over_j * mean_j.abs());
    RampSchedule::exponential(b0, r.tau, r.t_final, r.b_final, r.samples)
}

pub fn sim_config(cfg: &RunConfig, couplings: CouplingMatrix) -> SimConfig {
    let ramp = resolve_ramp(cfg, couplings.mean_j());
    SimConfig { couplings, ramp, noise: cfg.noise.model(), flip_error: cfg.noise.flip_error }
}

pub fn cmd_modes(cfg: &RunConfig) -> Result<Report> {
    let (geom, modes, _, _) = build_chain(cfg)?;
    let n = cfg.trap.n_ions;
    let mut columns = vec!["mode".to_string(), "frequency_khz".to_string()];
    columns.extend((1..=n).map(|i| format!("b_{i}")));
    columns.extend((1..=n).map(|i| format!("eta_{i}")));
    let mut table = Table::new(columns);
    for m in 0..n {
        let mut row = vec![(m + 1).to_string(), num(modes.frequencies[m])];
        row.extend((0..n).map(|i| num(modes.vectors[(i, m)])));
        row.extend((0..n).map(|i| num(modes.lamb_dicke[(i, m)])));
        table.push(row);
    }
    let result = json!({ "positions": geom.positions, "length_scale_m": cfg.trap.length_scale(), "modes": modes });
    Report::new("modes", table, &result, json!({}))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingReport {
    pub mu: f64,
    pub mean_j: f64,
    pub matrix: Vec<Vec<f64>>,
    pub power_law: Option<PowerLawFit>,
}

pub fn cmd_couplings(cfg: &RunConfig) -> Result<Report> {
    let (_, _, j, mu) = build_chain(cfg)?;
    let n = j.n();
    let mut table = Table::new(["i", "j", "distance", "j_khz"]);
    for a in 0..n {
        for b in a + 1..n {
            table.push(vec![(a + 1).to_string(), (b + 1).to_string(), (b - a).to_string(), num(j.get(a, b))]);
        }
    }
    let result = CouplingReport { mu, mean_j: j.mean_j(), matrix: j.rows(), power_law: fit_power_law(&j) };
    Report::new("couplings", table, &result, json!({}))
}

const OBSERVABLE_COLUMNS: [&str; 14] = [
    "n",
    "t_us",
    "b_khz",
    "b_over_j",
    "m_x",
    "m_x_sem",
    "m_x_scaled",
    "m_x_scaled_sem",
    "g",
    "g_sem",
    "g_scaled",
    "g_scaled_sem",
    "p_fm",
    "p_fm_sem",
];

fn push_stats(table: &mut Table, stats: &EnsembleStats) {
    for (k, o) in stats.observables.iter().enumerate() {
        table.push(vec![
            stats.n.to_string(),
            num(stats.sample_times[k]),
            num(stats.fields[k]),
            num(stats.b_over_j[k]),
            num(o.m_x),
            num(o.m_x_sem),
            num(o.m_x_scaled),
            num(o.m_x_scaled_sem),
            num(o.g),
            num(o.g_sem),
            num(o.g_scaled),
            num(o.g_scaled_sem),
            num(o.p_fm),
            num(o.p_fm_sem),
        ]);
    }
}

/// Runs the ensemble for every N in `cfg.sweep.n_values`.
pub fn sweep_stats(cfg: &RunConfig) -> Result<Vec<EnsembleStats>> {
    cfg.sweep
        .n_values
        .iter()
        .map(|&n| {
            let c = cfg.with_n(n);
            let (_, _, j, _) = build_chain(&c)?;
            log::info!("sweep: N = {n}, {} trajectories", c.n_traj);
            run_ensemble(&sim_config(&c, j), c.n_traj, c.base_seed, c.workers)
        })
        .collect()
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Report> {
    let all = sweep_stats(cfg)?;
    let mut table = Table::new(OBSERVABLE_COLUMNS);
    for stats in &all {
        push_stats(&mut table, stats);
    }
    Report::new("sweep", table, &all, json!({ "base_seed": cfg.base_seed, "n_traj": cfg.n_traj }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DickeSummary {
    pub n: usize,
    /// B/|J| where the scaled Binder cumulant crosses 0.5.
    pub half_crossing: Option<f64>,
    pub max_slope: f64,
}

pub fn cmd_dicke(cfg: &RunConfig) -> Result<Report> {
    let d = &cfg.dicke;
    if !(d.b_over_j_min > 0.0 && d.b_over_j_max > d.b_over_j_min) {
        return Err(Error::Config("dicke grid needs 0 < b_over_j_min < b_over_j_max".into()));
    }
    let grid = log_grid(d.b_over_j_min, d.b_over_j_max, d.points_per_decade);
    let mut table =
        Table::new(["n", "b_over_j", "m_x", "m_x_scaled", "g", "g_scaled", "p_fm", "energy_khz", "gap_khz"]);
    if d.n_values.iter().any(|&n| n < 2) {
        return Err(Error::Config("dicke.n_values must be at least 2".into()));
    }
    let mut curves = Vec::new();
    for &n in &d.n_values {
        let mut g_scaled = Vec::with_capacity(grid.len());
        for &x in &grid {
            let gs = dicke_ground_state(n, 1.0, x)?;
            let op = scale_order_params(&gs.distribution)?;
            g_scaled.push(op.g_scaled);
            table.push(vec![
                n.to_string(),
                num(x),
                num(op.m_x),
                num(op.m_x_scaled),
                num(op.g),
                num(op.g_scaled),
                num(op.p_fm),
                num(gs.energy),
                num(gs.gap),
            ]);
        }
        curves.push(CrossoverCurve { n, b_over_j: grid.clone(), g_scaled });
    }
    let slopes = crossover_sharpness(&curves)?;
    let summary: Vec<DickeSummary> = curves
        .iter()
        .zip(&slopes)
        .map(|(c, &(n, s))| DickeSummary { n, half_crossing: crossing(c, 0.5), max_slope: s })
        .collect();
    Report::new("dicke", table, &json!({ "summary": summary, "curves": curves }), json!({}))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparison {
    pub n: usize,
    pub max_z: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// |a - b| in units of the combined standard error with a floor.
pub fn z_score(a: f64, b: f64, sem: f64, floor: f64) -> f64 {
    (a - b).abs() / (sem * sem + floor * floor).sqrt()
}

/// Trajectory ensemble against the density-matrix reference on `m_x`, the
/// scaled Binder cumulant and P(FM) at every sample time.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<(Report, OracleComparison)> {
    let n = cfg.trap.n_ions;
    if !(2..=MAX_ORACLE_IONS).contains(&n) {
        return Err(Error::Config(format!("oracle needs 2 <= n_ions <= {MAX_ORACLE_IONS}, got {n}")));
    }
    let (_, _, j, _) = build_chain(cfg)?;
    let sim = sim_config(cfg, j);
    let stats = run_ensemble(&sim, cfg.n_traj, cfg.base_seed, cfg.workers)?;
    let oracle = lindblad_oracle(&sim.couplings, &sim.ramp, &sim.noise, sim.flip_error)?;
    let floor = cfg.oracle.se_floor;
    let mut table = Table::new([
        "t_us",
        "b_over_j",
        "m_x",
        "m_x_oracle",
        "z_m_x",
        "g_scaled",
        "g_scaled_oracle",
        "z_g_scaled",
        "p_fm",
        "p_fm_oracle",
        "z_p_fm",
    ]);
    let mut max_z: f64 = 0.0;
    for (k, (o, r)) in stats.observables.iter().zip(&oracle.params).enumerate() {
        let z = [
            z_score(o.m_x, r.m_x, o.m_x_sem, floor),
            z_score(o.g_scaled, r.g_scaled, o.g_scaled_sem, floor),
            z_score(o.p_fm, r.p_fm, o.p_fm_sem, floor),
        ];
        max_z = z.iter().fold(max_z, |a, &b| a.max(b));
        table.push(vec![
            num(stats.sample_times[k]),
            num(stats.b_over_j[k]),
            num(o.m_x),
            num(r.m_x),
            num(z[0]),
            num(o.g_scaled),
            num(r.g_scaled),
            num(z[1]),
            num(o.p_fm),
            num(r.p_fm),
            num(z[2]),
        ]);
    }
    let cmp = OracleComparison { n, max_z, threshold: cfg.oracle.max_z, passed: max_z <= cfg.oracle.max_z };
    let result = json!({ "comparison": cmp, "trajectories": stats, "oracle": oracle });
    let report = Report::new("oracle", table, &result, json!({ "base_seed": cfg.base_seed, "n_traj": cfg.n_traj }))?;
    Ok((report, cmp))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub fit: FitResult,
    pub error_bars: McErrorBars,
    pub order_params: OrderParams,
}

pub fn fit_with_errors(cfg: &RunConfig, hist: &CountHistogram) -> Result<FitReport> {
    let d = &cfg.detect;
    let n = cfg.trap.n_ions;
    let fit = fit_histogram(hist, n, &d.model()?)?;
    let opts = McOptions {
        n_resample: d.n_resample,
        seed: d.seed,
        jitter_envelope: d.jitter_envelope.clone(),
        resample_counts: d.resample_counts,
    };
    let error_bars = mc_error_bars(hist, &fit, &opts)?;
    let order_params = scale_order_params(&fit.distribution)?;
    Ok(FitReport { fit, error_bars, order_params })
}

pub fn cmd_fit(cfg: &RunConfig, histogram: &Path) -> Result<Report> {
    let file = std::fs::File::open(histogram)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", histogram.display())))?;
    let hist = CountHistogram::from_csv(file)?;
    let rep = fit_with_errors(cfg, &hist)?;
    let mut table = Table::new(["s", "p", "p_err"]);
    for (s, (p, e)) in rep.fit.distribution.p.iter().zip(&rep.error_bars.p).enumerate() {
        table.push(vec![s.to_string(), num(*p), num(*e)]);
    }
    let seeds = json!({ "mc_seed": cfg.detect.seed, "histogram": histogram.display().to_string() });
    Report::new("fit", table, &rep, seeds)
}

pub fn synthesize(cfg: &RunConfig) -> Result<(SpinDistribution, CountHistogram)> {
    let n = cfg.trap.n_ions;
    let truth = match &cfg.detect.truth {
        Some(p) => SpinDistribution::new(p.clone())?,
        None => SpinDistribution::binomial(n),
    };
    let model = cfg.detect.model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.detect.seed);
    let hist = synthesize_histogram(&truth, &model, cfg.detect.shots, model.default_max_count(n), &mut rng)?;
    Ok((truth, hist))
}

pub fn cmd_synthesize(cfg: &RunConfig) -> Result<Report> {
    let (truth, hist) = synthesize(cfg)?;
    let mut table = Table::new(["count", "shots"]);
    for (k, c) in hist.counts.iter().enumerate() {
        table.push(vec![k.to_string(), c.to_string()]);
    }
    let result = json!({ "truth": truth, "model": cfg.detect.model()?, "histogram": hist });
    Report::new("synthesize", table, &result, json!({ "detect_seed": cfg.detect.seed }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub workers: usize,
    pub n_traj: u64,
    pub seconds: f64,
    pub traj_per_second: f64,
    /// Speedup over the first timed worker count, divided by the worker ratio.
    pub efficiency: f64,
    /// Output bit-identical to the first timed worker count.
    pub identical: bool,
}

fn effective_workers(w: usize) -> usize {
    if w == 0 {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    } else {
        w
    }
}

pub fn bench_rows(cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    if cfg.bench.workers.is_empty() {
        return Err(Error::Config("bench.workers must list at least one worker count".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.bench.n_values {
        let c = cfg.with_n(n);
        let (_, _, j, _) = build_chain(&c)?;
        let sim = sim_config(&c, j);
        let mut base: Option<(f64, usize, String)> = None;
        for &w in &cfg.bench.workers {
            let start = Instant::now();
            let stats = run_ensemble(&sim, c.n_traj, c.base_seed, w)?;
            let seconds = start.elapsed().as_secs_f64();
            // Debug formatting keeps NaN comparable and is exact for f64.
            let fingerprint = format!("{stats:?}");
            let we = effective_workers(w);
            let (efficiency, identical) = match &base {
                None => (1.0, true),
                Some((t0, w0, fp)) => ((t0 / seconds) / (we as f64 / *w0 as f64), *fp == fingerprint),
            };
            if base.is_none() {
                base = Some((seconds, we, fingerprint));
            }
            log::info!("bench: N = {n}, {we} workers, {} trajectories in {seconds:.3} s", c.n_traj);
            rows.push(BenchRow {
                n,
                workers: we,
                n_traj: c.n_traj,
                seconds,
                traj_per_second: c.n_traj as f64 / seconds,
                efficiency,
                identical,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<Report> {
    let rows = bench_rows(cfg)?;
    let mut table = Table::new(["n", "workers", "n_traj", "seconds", "traj_per_second", "efficiency", "identical"]);
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            r.workers.to_string(),
            r.n_traj.to_string(),
            num(r.seconds),
            num(r.traj_per_second),
            num(r.efficiency),
            r.identical.to_string(),
        ]);
    }
    let cores = effective_workers(0);
    Report::new("bench", table, &json!({ "host_cores": cores, "rows": rows }), json!({ "base_seed": cfg.base_seed }))
}
