//! Data completion for the Laplace equation: recover a harmonic field in the
//! whole square from Dirichlet plus Neumann data on two sides only.
//!
//! The datum comes from e^x cos y, the solver never sees the other two sides.
//! As the regularization parameter decreases the interior error falls and the
//! auxiliary field collapses toward zero.
//!
//! Run with: cargo run --example data_completion

use std::sync::Arc;

use cauchy_qr::fem::{error_norms, MeshNorms};
use cauchy_qr::fields::{cauchy_data_from, harmonic_catalog};
use cauchy_qr::geometry::{PolygonSpec, SquareSide};
use cauchy_qr::mesh::generate_structured;
use cauchy_qr::qr::assemble_qr_cauchy;

fn main() -> cauchy_qr::Result<()> {
    let spec = PolygonSpec::unit_square(&[SquareSide::Bottom, SquareSide::Right])?;
    let mesh = Arc::new(generate_structured(&spec, 32)?);
    let norms = MeshNorms::new(&mesh)?;

    let exact = harmonic_catalog("exp_cos", &serde_json::Value::Null)?;
    let data = cauchy_data_from(&exact, &mesh);
    println!(
        "square, data on y=0 and x=1: {} Dirichlet nodes, {} flux edges, mesh 1/32",
        data.g0.len(),
        data.g1.len()
    );

    let exact_h1 = {
        let interp = cauchy_qr::FeFunction::interpolate(mesh.clone(), |p| exact.value(p))?;
        norms.h1_norm(&interp)?
    };

    println!(
        "{:>10} {:>14} {:>14} {:>14} {:>12}",
        "eps", "rel H1 error", "||lambda||_H1", "alg residual", "|D| range"
    );
    for k in 1..=5 {
        let eps = 10f64.powi(-k);
        let sol = assemble_qr_cauchy(&mesh, eps, &data)?.solve()?;
        let err = error_norms(&sol.u, &|p| exact.value(p), &|p| exact.gradient(p));
        let r = &sol.residual;
        println!(
            "{:>10.0e} {:>14.4e} {:>14.4e} {:>14.2e} {:>12}",
            eps,
            err.h1 / exact_h1,
            norms.h1_norm(&sol.lambda)?,
            r.algebraic_rel,
            format!("{:.0e}..{:.0e}", r.d_min_abs, r.d_max_abs),
        );
    }

    // Point check far from the accessible sides.
    let eps = 1e-5;
    let sol = assemble_qr_cauchy(&mesh, eps, &data)?.solve()?;
    let p = [0.25, 0.75];
    let got = sol.u.eval(p).unwrap();
    println!(
        "u(0.25, 0.75) at eps=1e-5: {:.6} vs exact {:.6} (diff {:.1e})",
        got,
        exact.value(p),
        (got - exact.value(p)).abs()
    );
    Ok(())
}
