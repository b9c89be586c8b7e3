//! Two-dimensional finite-element toolkit for the Cauchy problem of the
//! Laplace equation, regularized by a mixed quasi-reversibility formulation.
//!
//! The crate has three legs:
//!
//! * a P1 solver for the coupled two-field weak form on polygonal domains
//!   whose boundary splits into an accessible part (tag `G`) carrying both
//!   Dirichlet and Neumann data and an inaccessible part (tag `GT`),
//! * closed-form machinery for the corner operator pencil: eigenvalues,
//!   eigenfunctions, the adjoint family, biorthogonality constants and
//!   singularity censuses for mixed corners,
//! * one-dimensional slice solvers and log-domain sweeps that witness the
//!   regularization-uniform estimates behind the method.
//!
//! Everything is deterministic: given the same inputs and seeds, meshes,
//! solutions and reports reproduce bit for bit.

pub mod fem;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod qr;
pub mod cli;
pub mod spectrum;
pub mod sweep;
pub mod symbol;

pub use fem::{DofMap, ErrorNorms, FeFunction, SparseMat};
pub use geometry::{classify_corners, regularity_exponent, CornerKind, CornerRecord, EdgeTag, ExponentReport, PolygonSpec};
pub use mesh::TriMesh;
pub use qr::{QrSolution, QrSystem};
pub use spectrum::{EigenPair, PencilParams, Sign};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },
    #[error("fem: {0}")]
    Fem(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("fields: {0}")]
    Fields(String),
    #[error("spectrum: {0}")]
    Spectrum(String),
    #[error("symbol: {0}")]
    Symbol(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Formats a float with 17 significant digits, enough for bit-exact f64
/// round-trips through text.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_f64_round_trips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -2.2250738585072014e-308,
            f64::MAX,
            1e-17,
            0.1 + 0.2,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "failed for {s}");
        }
    }
}
