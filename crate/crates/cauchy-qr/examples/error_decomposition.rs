//! End-to-end error decomposition on a small grid: for each combination of
//! regularization parameter, mesh level and noise amplitude, the runner
//! splits the measured error into a noise part, a discretization part
//! measured against a finer same-eps reference, and the remaining
//! regularization error.
//!
//! Run with: cargo run --example error_decomposition

use cauchy_qr::sweep::{fit_log_decay, run_sweep, SweepConfig};

fn main() -> cauchy_qr::Result<()> {
    let config: SweepConfig = serde_json::from_str(
        r#"{
            "geometry": "square",
            "gamma": ["bottom"],
            "exact": "one_edge",
            "eps_list": [1e-1, 1e-2, 1e-3],
            "h_levels": [3, 4],
            "delta_list": [0.0, 1e-3],
            "seed": 42
        }"#,
    )
    .map_err(cauchy_qr::Error::from)?;
    config.validate()?;

    let report = run_sweep(&config)?;
    println!("{}", report.bias_note);
    println!(
        "{:>8} {:>6} {:>8} {:>12} {:>12} {:>12} {:>12}",
        "eps", "h", "delta", "H1 total", "noise", "disc(ref)", "eta(ref)"
    );
    for row in &report.rows {
        println!(
            "{:>8.0e} {:>6.4} {:>8.0e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            row.epsilon, row.h, row.delta, row.h1_total, row.h1_noise, row.h1_disc_vs_reference, row.h1_eta_vs_reference
        );
    }

    println!("discretization rates vs the same-eps reference:");
    for fit in &report.disc_rates {
        println!("  eps {:>8.0e}: rate {:.3} (r^2 {:.4})", fit.epsilon, fit.rate, fit.r_squared);
    }

    report.check_invariants()?;
    println!("invariants hold: norms finite, triangle inequality, noise linear in delta");

    // The remaining part decays only slowly in eps; fit an inverse log power.
    let finest: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.delta == 0.0 && (r.h - report.rows.iter().map(|q| q.h).fold(f64::MAX, f64::min)).abs() < 1e-12)
        .map(|r| (r.epsilon, r.h1_eta_vs_reference))
        .collect();
    let (eps, eta): (Vec<f64>, Vec<f64>) = finest.into_iter().unzip();
    let trend = fit_log_decay(&eps, &eta)?;
    println!(
        "regularization error on the finest level: {:.4} -> {:.4} over three decades of eps",
        eta.first().unwrap(),
        eta.last().unwrap()
    );
    println!(
        "the decay is logarithmic (best inverse-log-power mu {:.2}); a few decades barely move it, \
         which is the hallmark of severe ill-posedness (resolved decrease: {})",
        trend.best_mu, trend.monotone_ok
    );
    Ok(())
}
