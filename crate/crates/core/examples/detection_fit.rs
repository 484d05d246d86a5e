//! Photon-count histograms: synthesize from a known P(s), fit back, and attach
//! Monte-Carlo error bars.
//!
//! `cargo run --release --example detection_fit`

use ionsim::detect::{
    bright_dark_overlap, fit_histogram, mc_error_bars, synthesize_histogram, tune_bright_leak, McOptions, PhotonModel,
};
use ionsim::observables::{scale_order_params, SpinDistribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ionsim::Result<()> {
    let model = tune_bright_leak(&PhotonModel::experiment(), 0.01)?;
    println!(
        "m_B = {}, m_D = {}, bright-to-dark leak {:.4} -> overlap {:.4}",
        model.mean_bright,
        model.mean_dark,
        model.leak_bright_to_dark,
        bright_dark_overlap(&model)
    );

    let truth = SpinDistribution::new(vec![0.40, 0.05, 0.07, 0.08, 0.40])?;
    let n = truth.n;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let hist = synthesize_histogram(&truth, &model, 50_000, model.default_max_count(n), &mut rng)?;

    let fit = fit_histogram(&hist, n, &model)?;
    let bars = mc_error_bars(&hist, &fit, &McOptions::default())?;
    println!(
        "fitted m_D = {:.4} +- {:.4}, m_B = {:.3} +- {:.3}, chi2/dof = {:.1}/{}",
        fit.mean_dark, fit.mean_dark_err, fit.mean_bright, fit.mean_bright_err, fit.chi2, fit.dof
    );
    println!("\n s   truth    fit     error");
    for s in 0..=n {
        println!("{s:>2} {:>7.4} {:>7.4} {:>8.4}", truth.p[s], fit.distribution.p[s], bars.p[s]);
    }
    let op = scale_order_params(&fit.distribution)?;
    println!(
        "\nm_x = {:.4} +- {:.4}, scaled g = {:.4} +- {:.4}, P(FM) = {:.4} +- {:.4}",
        op.m_x, bars.m_x, op.g_scaled, bars.g_scaled, op.p_fm, bars.p_fm
    );
    Ok(())
}
