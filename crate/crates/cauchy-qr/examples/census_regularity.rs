//! Corner classification on the built-in polygons, the singular-exponent
//! census at corners where the two boundary parts meet, and the resulting
//! Sobolev exponent that the convergence theory keys on.
//!
//! Run with: cargo run --example census_regularity

use cauchy_qr::geometry::DEFAULT_SLACK;
use cauchy_qr::spectrum::{classical_singularity, singularity_census};
use cauchy_qr::{classify_corners, regularity_exponent, CornerKind, PolygonSpec};
use cauchy_qr::geometry::SquareSide;

fn survey(label: &str, spec: &PolygonSpec) -> cauchy_qr::Result<()> {
    println!("{label}");
    let corners = classify_corners(spec)?;
    for c in &corners {
        let angle = format!("{:.3}", c.omega);
        match c.kind {
            CornerKind::Mixed => {
                let census = singularity_census(c, 1e-2)?;
                let ks: Vec<String> = census.entries.iter().map(|e| e.k.to_string()).collect();
                println!(
                    "  vertex {} at ({:.2}, {:.2}): mixed, omega = {angle}, census {{{}}}",
                    c.vertex,
                    c.position[0],
                    c.position[1],
                    ks.join(", ")
                );
            }
            _ => {
                let branch = classical_singularity(c)?;
                println!(
                    "  vertex {} at ({:.2}, {:.2}): {:?}, omega = {angle}, exponent {:.3}, singular: {}",
                    c.vertex, c.position[0], c.position[1], c.kind, branch.exponent, branch.singular
                );
            }
        }
    }
    let report = regularity_exponent(&corners, DEFAULT_SLACK)?;
    println!(
        "  exponents: same-part sup {:.3}, mixed sup {:.3}, overall sup {:.3}, used {:.3}",
        report.s_c_sup, report.s_m_sup, report.s_sup, report.s_used
    );
    Ok(())
}

fn main() -> cauchy_qr::Result<()> {
    survey(
        "unit square, accessible side y=0 (two mixed right angles)",
        &PolygonSpec::unit_square(&[SquareSide::Bottom])?,
    )?;
    survey(
        "L-shape, accessible edge x=1/2 (reentrant corner is mixed)",
        &PolygonSpec::l_shape(&[3])?,
    )?;
    survey(
        "L-shape, both reentrant edges accessible (reentrant corner is same-part)",
        &PolygonSpec::l_shape(&[2, 3])?,
    )?;
    Ok(())
}
