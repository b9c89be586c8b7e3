//! Response to data noise and the coupled parameter choice. At fixed mesh
//! and regularization the perturbation of the computed field is exactly
//! linear in the noise amplitude; the coupling rule picks eps and h from
//! delta so that neither term dominates as delta -> 0.
//!
//! Run with: cargo run --example noisy_data

use std::sync::Arc;

use cauchy_qr::fem::{error_norms, MeshNorms};
use cauchy_qr::fields::compatible_source;
use cauchy_qr::geometry::{PolygonSpec, SquareSide};
use cauchy_qr::mesh::generate_structured;
use cauchy_qr::qr::solve_noisy;
use cauchy_qr::sweep::{couple_parameters, CouplingRule};

fn main() -> cauchy_qr::Result<()> {
    let spec = PolygonSpec::unit_square(&[SquareSide::Bottom])?;
    let pair = compatible_source(&spec, "one_edge")?;
    let mesh = Arc::new(generate_structured(&spec, 32)?);
    let f = |p: [f64; 2]| pair.source.value(p);

    // One seed, one eps: u(delta) - u(0) scales exactly with delta.
    let eps = 1e-2;
    let base = solve_noisy(&mesh, eps, &f, 0.0, 9)?;
    println!("square 1/32, eps = {eps}, seed 9");
    println!("{:>10} {:>16} {:>18}", "delta", "||u_d - u_0||_H1", "per unit delta");
    for delta in [1e-4, 1e-3, 1e-2] {
        let noisy = solve_noisy(&mesh, eps, &f, delta, 9)?;
        let diff = error_norms(&noisy.u, &|p| base.u.eval(p).unwrap(), &|p| {
            base.u.eval_grad(p).unwrap()
        });
        println!("{:>10.0e} {:>16.6e} {:>18.10e}", delta, diff.h1, diff.h1 / delta);
    }
    println!("(the last column is constant: the solve is affine in the data)");

    // Coupling rule eps = c_eps * delta^p, h = c_h * eps^q with the exponent
    // limits baked in: p < 2 keeps the noise term delta/sqrt(eps) vanishing,
    // q > 1/(s-1) keeps the discretization term h^(s-1)/eps vanishing.
    // Violating either is a configuration error.
    let rule = CouplingRule { c_eps: 0.1, p: 1.0, c_h: 2.0, q: 1.05, s_used: 1.99 };
    println!("coupled choice under rule eps = 0.1*delta, h = 2*eps^1.05:");
    for delta in [1.0, 0.3, 0.1] {
        let (eps_d, h_d) = couple_parameters(delta, &rule)?;
        let n = (1.0 / h_d).ceil() as usize;
        let sol = solve_noisy(&mesh_for(&spec, n)?, eps_d, &f, delta, 9)?;
        let err = error_norms(&sol.u, &|p| pair.u_star.value(p), &|p| pair.u_star.gradient(p));
        println!(
            "  delta {:>6.0e}: eps {:>8.2e}, h 1/{:<4} H1 error {:.4}, lambda {:.3e}",
            delta,
            eps_d,
            n,
            err.h1,
            MeshNorms::new(&sol.u.mesh)?.h1_norm(&sol.lambda)?
        );
    }

    let bad = CouplingRule { c_eps: 1.0, p: 2.0, c_h: 2.0, q: 1.05, s_used: 1.99 };
    match couple_parameters(1e-3, &bad) {
        Err(e) => println!("rule with p = 2 rejected: {e}"),
        Ok(_) => unreachable!("the noise term delta/sqrt(eps) would diverge"),
    }
    Ok(())
}

fn mesh_for(spec: &PolygonSpec, n: usize) -> cauchy_qr::Result<Arc<cauchy_qr::TriMesh>> {
    Ok(Arc::new(generate_structured(spec, n)?))
}
