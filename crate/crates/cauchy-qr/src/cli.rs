//! Command grammar and dispatch for the one binary. Every subcommand writes
//! its artifacts into --out and prints a one-line summary; numeric output is
//! fixed at 17 significant digits so reruns diff clean.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::fem::error_norms;
use crate::fields::{cauchy_data_from, harmonic_catalog};
use crate::geometry::{classify_corners, CornerKind, PolygonSpec};
use crate::mesh::generate_structured;
use crate::qr::assemble_qr_cauchy;
use crate::spectrum::{
    biorthogonality_matrix, classical_singularity, eigenvalues, singularity_census,
    verify_eigen_residual, PencilParams,
};
use crate::sweep::{parse_geometry, run_sweep, SweepConfig};
use crate::symbol::{quotient_sweep, scalar_slice_probe, uniform_estimate_probe};
use crate::fmt_f64;

/// Dispatch failure split by exit code: 2 for bad invocations and missing
/// inputs, 1 for checks that fail after a well-formed invocation.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Check(m) => m,
        }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "cauchy-qr", version, about = "Quasi-reversibility toolkit for the two-dimensional Cauchy-Laplace problem", propagate_version = true)]
pub struct Cli {
    /// Worker threads for parallel table fills (default: all cores).
    /// Results do not depend on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate a named geometry and write the mesh as plaintext.
    MeshGen(MeshGenArgs),
    /// Complete one Cauchy problem from a catalog field's boundary data.
    Solve(SolveArgs),
    /// Run the (epsilon, h, delta) error-decomposition grid from a JSON config.
    Sweep(SweepArgs),
    /// Corner eigenpairs with closed-form residual checks.
    Spectrum(SpectrumArgs),
    /// One-dimensional slice probes and quotient tables for the corner symbol.
    VerifySymbol(VerifySymbolArgs),
    /// Singular exponents in (0,1) for every corner of a geometry.
    Census(CensusArgs),
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Named geometry: square or lshape.
    #[arg(long, default_value = "square", conflicts_with = "geometry_json")]
    pub geometry: String,
    /// Data edges: sides (bottom,right,top,left) for square, indices 0..=5
    /// for lshape.
    #[arg(long, value_delimiter = ',', conflicts_with = "geometry_json")]
    pub gamma: Vec<String>,
    /// Polygon JSON file {"vertices": [[x,y],...], "edge_tags": ["G","GT",...]}
    /// instead of a named geometry.
    #[arg(long)]
    pub geometry_json: Option<PathBuf>,
}

impl GeometryArgs {
    fn resolve(&self) -> Result<PolygonSpec, Failure> {
        if let Some(path) = &self.geometry_json {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            return Ok(PolygonSpec::from_json(&text)?);
        }
        Ok(parse_geometry(&self.geometry, &self.gamma)?)
    }
}

#[derive(Debug, Args)]
pub struct MeshGenArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Subdivisions per unit length; h = 1/n.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Extra uniform refinement passes after structured generation.
    #[arg(long, default_value_t = 0)]
    pub refine: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Harmonic catalog entry supplying the Cauchy data: exp_cos, poly2,
    /// corner_sing.
    #[arg(long)]
    pub exact: String,
    /// JSON parameters for the catalog entry (corner_sing needs them).
    #[arg(long, default_value = "{}")]
    pub exact_params: String,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OmegaArg {
    /// Corner opening angle in radians.
    #[arg(long, required_unless_present = "omega_degrees", conflicts_with = "omega_degrees")]
    pub omega: Option<f64>,
    /// Corner opening angle in degrees.
    #[arg(long)]
    pub omega_degrees: Option<f64>,
}

impl OmegaArg {
    fn radians(&self) -> f64 {
        match (self.omega, self.omega_degrees) {
            (Some(w), _) => w,
            (None, Some(d)) => d.to_radians(),
            (None, None) => unreachable!("clap enforces one of the pair"),
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub omega: OmegaArg,
    #[arg(long)]
    pub eps: f64,
    /// Inclusive integer range "lo:hi" of eigenpair indices.
    #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
    pub n_range: String,
    /// Residual ceiling asserted on every emitted pair.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also compute and write the biorthogonality pairing table.
    #[arg(long, default_value_t = false)]
    pub biorth: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SymbolMode {
    /// Single-field slice ratio over a purely imaginary frequency grid.
    Scalar,
    /// Two-field slice stability ratio over an (epsilon, tau) grid.
    Uniform,
    /// Closed-form quotient tables with saturation points.
    Quotients,
}

#[derive(Debug, Args)]
pub struct VerifySymbolArgs {
    #[arg(long, value_enum)]
    pub mode: SymbolMode,
    #[command(flatten)]
    pub omega: OmegaArg,
    /// Real part of lambda (distance from the real singular lattice is
    /// checked). Defaults: 0 for scalar mode, 0.3 otherwise.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1e-2, 1e-4])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub tau_max: f64,
    /// Symmetric grid size over [-tau_max, tau_max]; odd counts hit 0.
    #[arg(long, default_value_t = 41)]
    pub tau_count: usize,
    /// Grid points per one-dimensional slice solve.
    #[arg(long, default_value_t = 801)]
    pub n_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Regularization weight handed to the corner pencil; the exponents in
    /// the census do not depend on it.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn ensure_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| Failure::Check(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn parse_n_range(text: &str) -> Result<std::ops::RangeInclusive<i32>, Failure> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("--n-range wants \"lo:hi\", got \"{text}\"")))?;
    let lo: i32 = lo
        .parse()
        .map_err(|_| Failure::Usage(format!("--n-range lower bound \"{lo}\" is not an integer")))?;
    let hi: i32 = hi
        .parse()
        .map_err(|_| Failure::Usage(format!("--n-range upper bound \"{hi}\" is not an integer")))?;
    if lo > hi {
        return Err(Failure::Usage(format!("--n-range is empty: {lo} > {hi}")));
    }
    Ok(lo..=hi)
}

fn tau_grid(tau_max: f64, count: usize) -> Result<Vec<f64>, Failure> {
    if !(tau_max > 0.0) || count < 2 {
        return Err(Failure::Usage(format!(
            "tau grid wants tau_max > 0 and at least 2 points, got {tau_max} and {count}"
        )));
    }
    let step = 2.0 * tau_max / (count - 1) as f64;
    Ok((0..count).map(|i| -tau_max + step * i as f64).collect())
}

impl Cli {
    /// Parse-free dispatch; the binary maps the result onto the process
    /// exit code.
    pub fn execute(&self) -> Result<(), Failure> {
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(Failure::Usage("--jobs must be at least 1".into()));
            }
            // First caller wins; a pool set up by an earlier command in the
            // same process is fine since results never depend on it.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
        }
        match &self.command {
            Command::MeshGen(args) => mesh_gen(args),
            Command::Solve(args) => solve(args),
            Command::Sweep(args) => sweep(args),
            Command::Spectrum(args) => spectrum(args),
            Command::VerifySymbol(args) => verify_symbol(args),
            Command::Census(args) => census(args),
        }
    }
}

fn mesh_gen(args: &MeshGenArgs) -> Result<(), Failure> {
    let spec = args.geometry.resolve()?;
    ensure_out(&args.out)?;
    let mut mesh = generate_structured(&spec, args.n)?;
    for _ in 0..args.refine {
        mesh = mesh.refine_uniform();
    }
    mesh.validate(Some(&spec))?;
    let mesh_path = args.out.join("mesh.txt");
    mesh.write_file(&mesh_path)?;
    write_artifact(&args.out, "geometry.json", &spec.to_json())?;
    println!(
        "mesh-gen: {} nodes, {} triangles, min angle {:.2} deg -> {}",
        mesh.nodes.len(),
        mesh.triangles.len(),
        mesh.min_angle_degrees(),
        mesh_path.display()
    );
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let spec = args.geometry.resolve()?;
    let params: serde_json::Value = serde_json::from_str(&args.exact_params)
        .map_err(|e| Failure::Usage(format!("--exact-params is not JSON: {e}")))?;
    let field = harmonic_catalog(&args.exact, &params)?;
    ensure_out(&args.out)?;
    let mesh = Arc::new(generate_structured(&spec, args.n)?);
    let data = cauchy_data_from(&field, &mesh);
    let system = assemble_qr_cauchy(&mesh, args.eps, &data)?;
    let sol = system.solve()?;
    write_artifact(&args.out, "solution.csv", &sol.to_csv())?;
    let residual_json = serde_json::to_string_pretty(&sol.residual)
        .expect("residual report serialization cannot fail");
    write_artifact(&args.out, "residual.json", &residual_json)?;
    let err = error_norms(&sol.u, &|p| field.value(p), &|p| field.gradient(p));
    let err_json = format!(
        "{{\n  \"l2\": {},\n  \"h1_semi\": {},\n  \"h1\": {}\n}}\n",
        fmt_f64(err.l2),
        fmt_f64(err.h1_semi),
        fmt_f64(err.h1)
    );
    write_artifact(&args.out, "error.json", &err_json)?;
    println!(
        "solve: eps {:e}, {} nodes, algebraic residual {:.3e}, H1 error vs {} = {:.6e}",
        args.eps,
        mesh.nodes.len(),
        sol.residual.algebraic_rel,
        args.exact,
        err.h1
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let config = SweepConfig::from_json(&text)?;
    ensure_out(&args.out)?;
    let report = run_sweep(&config)?;
    write_artifact(&args.out, "report.csv", &report.to_csv())?;
    write_artifact(&args.out, "summary.json", &report.to_json_summary())?;
    let failed = report.rows.iter().filter(|r| r.status != "ok").count();
    report.check_invariants()?;
    if failed > 0 {
        return Err(Failure::Check(format!(
            "sweep finished with {failed} failed grid point(s) out of {}; see report.csv",
            report.rows.len()
        )));
    }
    println!(
        "sweep: {} rows ok, reference h = {}, {} rate fits -> {}",
        report.rows.len(),
        fmt_f64(report.h_reference),
        report.disc_rates.len(),
        args.out.join("report.csv").display()
    );
    Ok(())
}

fn spectrum(args: &SpectrumArgs) -> Result<(), Failure> {
    let params = PencilParams::new(args.omega.radians(), args.eps)?;
    let range = parse_n_range(&args.n_range)?;
    ensure_out(&args.out)?;
    let pairs = eigenvalues(&params, range.clone());
    let mut csv = String::from("n,sign,re_lambda,im_lambda,residual,d_k\n");
    let mut worst: f64 = 0.0;
    for pair in &pairs {
        let residual = verify_eigen_residual(pair, &params).max(pair.defining_residual(args.eps));
        worst = worst.max(residual);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            pair.n,
            pair.sign.as_char(),
            fmt_f64(pair.lambda.re),
            fmt_f64(pair.lambda.im),
            fmt_f64(residual),
            fmt_f64(params.d_k(pair.n))
        ));
    }
    write_artifact(&args.out, "eigenpairs.csv", &csv)?;
    if args.biorth {
        let report = biorthogonality_matrix(&params, range)?;
        let mut bcsv = String::from("k,nu,j,mu,pairing_re,pairing_im,expected\n");
        for e in &report.entries {
            bcsv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.k,
                e.nu,
                e.j,
                e.mu,
                fmt_f64(e.pairing_re),
                fmt_f64(e.pairing_im),
                fmt_f64(e.expected)
            ));
        }
        write_artifact(&args.out, "biorth.csv", &bcsv)?;
        println!(
            "spectrum: biorthogonality max diag rel {:.3e}, max offdiag (scaled) {:.3e}",
            report.max_diag_rel_err, report.max_offdiag_scaled
        );
    }
    if worst > args.tol {
        return Err(Failure::Check(format!(
            "eigenpair residual {worst:.3e} exceeds tolerance {:.3e}",
            args.tol
        )));
    }
    println!("spectrum: {} pairs, worst residual {:.3e} <= {:.1e}", pairs.len(), worst, args.tol);
    Ok(())
}

fn verify_symbol(args: &VerifySymbolArgs) -> Result<(), Failure> {
    let omega = args.omega.radians();
    let taus = tau_grid(args.tau_max, args.tau_count)?;
    ensure_out(&args.out)?;
    match args.mode {
        SymbolMode::Scalar => {
            let beta = args.beta.unwrap_or(0.0);
            let table = scalar_slice_probe(omega, beta, &taus, args.n_points, args.seed)?;
            write_artifact(&args.out, "scalar_ratio.csv", &table.to_csv())?;
            println!(
                "verify-symbol scalar: max ratio {:.6} over {} frequencies",
                table.max_ratio,
                table.rows.len()
            );
        }
        SymbolMode::Uniform => {
            let beta = args.beta.unwrap_or(0.3);
            let table =
                uniform_estimate_probe(omega, beta, &args.eps, &taus, args.n_points, args.seed)?;
            write_artifact(&args.out, "uniform_probe.csv", &table.to_csv())?;
            println!(
                "verify-symbol uniform: max ratio {:.6} at (eps, tau) = ({:e}, {}), median {:.6}",
                table.max_ratio, table.argmax.0, table.argmax.1, table.median_ratio
            );
        }
        SymbolMode::Quotients => {
            let beta = args.beta.unwrap_or(0.3);
            let table = quotient_sweep(omega, beta, &args.eps, &taus)?;
            write_artifact(&args.out, "quotients.csv", &table.to_csv())?;
            println!(
                "verify-symbol quotients: Q1*eps saturates at |tau| = {:.3}, Q2 at |tau| = {:.3}",
                table.saturation_tau_q1_eps, table.saturation_tau_q2
            );
        }
    }
    Ok(())
}

fn census(args: &CensusArgs) -> Result<(), Failure> {
    let spec = args.geometry.resolve()?;
    ensure_out(&args.out)?;
    let corners = classify_corners(&spec)?;
    let mut csv = String::from("vertex,x,y,omega,kind,branch,index,exponent,singular\n");
    let mut json_entries: Vec<serde_json::Value> = Vec::new();
    for corner in &corners {
        let kind = match corner.kind {
            CornerKind::Gamma => "gamma",
            CornerKind::GammaTilde => "gamma_tilde",
            CornerKind::Mixed => "mixed",
        };
        let head = format!(
            "{},{},{},{},{kind}",
            corner.vertex,
            fmt_f64(corner.position[0]),
            fmt_f64(corner.position[1]),
            fmt_f64(corner.omega)
        );
        if corner.kind == CornerKind::Mixed {
            let report = singularity_census(corner, args.eps)?;
            if report.entries.is_empty() {
                csv.push_str(&format!("{head},pencil,,,false\n"));
            }
            for e in &report.entries {
                csv.push_str(&format!("{head},pencil,{},{},true\n", e.k, fmt_f64(e.re_lambda)));
            }
            json_entries.push(serde_json::json!({
                "vertex": corner.vertex,
                "omega": corner.omega,
                "kind": kind,
                "branch": "pencil",
                "singular_indices": report.entries.iter().map(|e| e.k).collect::<Vec<_>>(),
                "exponents": report.entries.iter().map(|e| e.re_lambda).collect::<Vec<_>>(),
            }));
        } else {
            let branch = classical_singularity(corner)?;
            csv.push_str(&format!(
                "{head},classical,,{},{}\n",
                fmt_f64(branch.exponent),
                branch.singular
            ));
            json_entries.push(serde_json::json!({
                "vertex": corner.vertex,
                "omega": corner.omega,
                "kind": kind,
                "branch": "classical",
                "exponent": branch.exponent,
                "singular": branch.singular,
                "trace_pinned": branch.trace_pinned,
            }));
        }
    }
    write_artifact(&args.out, "census.csv", &csv)?;
    let json = serde_json::to_string_pretty(&json_entries).expect("census serialization cannot fail");
    write_artifact(&args.out, "census.json", &json)?;
    println!("census: {} corners -> {}", corners.len(), args.out.join("census.csv").display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::error::ErrorKind;

    fn parse(argv: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(argv)
    }

    #[test]
    fn grammar_accepts_the_documented_forms() {
        assert!(parse(&[
            "cauchy-qr", "solve", "--geometry", "square", "--gamma", "bottom,right",
            "--exact", "exp_cos", "--eps", "1e-3", "--n", "64", "--out", "r",
        ])
        .is_ok());
        assert!(parse(&[
            "cauchy-qr", "spectrum", "--omega", "1.5707963", "--eps", "1.0",
            "--n-range", "-2:2", "--out", "r",
        ])
        .is_ok());
        assert!(parse(&["cauchy-qr", "sweep", "--config", "cfg.json", "--out", "r"]).is_ok());
        assert!(parse(&[
            "cauchy-qr", "verify-symbol", "--mode", "scalar", "--omega-degrees", "90", "--out", "r",
        ])
        .is_ok());
        assert!(parse(&["cauchy-qr", "census", "--geometry", "lshape", "--gamma", "0,1", "--out", "r"]).is_ok());
        assert!(parse(&["cauchy-qr", "mesh-gen", "--n", "8", "--gamma", "bottom", "--out", "r"]).is_ok());
    }

    #[test]
    fn grammar_rejects_unknown_flags_and_missing_subcommand() {
        let err = parse(&["cauchy-qr", "spectrum", "--omega", "1.0", "--eps", "1.0", "--bogus", "--out", "r"])
            .unwrap_err();
        assert_eq!(err.kind(), ErrorKind::UnknownArgument);
        assert!(parse(&["cauchy-qr"]).is_err());
        // omega and omega-degrees are exclusive, and one is required.
        assert!(parse(&["cauchy-qr", "spectrum", "--eps", "1.0", "--out", "r"]).is_err());
        assert!(parse(&[
            "cauchy-qr", "spectrum", "--omega", "1.0", "--omega-degrees", "90", "--eps", "1.0", "--out", "r",
        ])
        .is_err());
    }

    #[test]
    fn n_range_and_tau_grid_parsing() {
        assert_eq!(parse_n_range("-2:2").unwrap(), -2..=2);
        assert_eq!(parse_n_range("0:0").unwrap(), 0..=0);
        assert!(parse_n_range("2:-2").is_err());
        assert!(parse_n_range("1-3").is_err());
        assert!(parse_n_range("a:3").is_err());
        let g = tau_grid(10.0, 5).unwrap();
        assert_eq!(g, vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert!(tau_grid(0.0, 5).is_err());
        assert!(tau_grid(1.0, 1).is_err());
    }

    #[test]
    fn omega_degrees_converts() {
        let cli = parse(&[
            "cauchy-qr", "spectrum", "--omega-degrees", "90", "--eps", "1.0", "--out", "r",
        ])
        .unwrap();
        let Command::Spectrum(args) = &cli.command else { panic!("wrong subcommand") };
        assert!((args.omega.radians() - std::f64::consts::FRAC_PI_2).abs() <= 1e-12);
    }

    #[test]
    fn missing_inputs_exit_with_usage_code() {
        let tmp = tempfile::tempdir().unwrap();
        let cli = parse(&[
            "cauchy-qr", "sweep",
            "--config", tmp.path().join("absent.json").to_str().unwrap(),
            "--out", tmp.path().join("r").to_str().unwrap(),
        ])
        .unwrap();
        let err = cli.execute().unwrap_err();
        assert_eq!(err.code(), 2);
        let cli = parse(&[
            "cauchy-qr", "census",
            "--geometry-json", tmp.path().join("absent.geo.json").to_str().unwrap(),
            "--out", tmp.path().join("r").to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(cli.execute().unwrap_err().code(), 2);
    }

    #[test]
    fn rejected_coupling_rule_is_a_check_failure() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = r#"{"geometry":"square","gamma":["bottom"],"exact":"one_edge",
            "eps_list":[0.01],"h_levels":[3],"delta_list":[0.001],"seed":1,
            "coupling":{"c_eps":1.0,"p":2.0,"c_h":0.5,"q":1.2,"s_used":1.99}}"#;
        let cfg_path = tmp.path().join("cfg.json");
        std::fs::write(&cfg_path, cfg).unwrap();
        let cli = parse(&[
            "cauchy-qr", "sweep",
            "--config", cfg_path.to_str().unwrap(),
            "--out", tmp.path().join("r").to_str().unwrap(),
        ])
        .unwrap();
        let err = cli.execute().unwrap_err();
        assert_eq!(err.code(), 1);
        assert!(err.message().contains("p < 2"), "{}", err.message());
    }

    #[test]
    fn mesh_gen_census_and_spectrum_write_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("m");
        let cli = parse(&[
            "cauchy-qr", "mesh-gen", "--geometry", "square", "--gamma", "bottom",
            "--n", "4", "--out", out.to_str().unwrap(),
        ])
        .unwrap();
        cli.execute().unwrap();
        assert!(out.join("mesh.txt").is_file());
        assert!(out.join("geometry.json").is_file());
        // A geometry round-trips through its JSON artifact.
        let cli = parse(&[
            "cauchy-qr", "census",
            "--geometry-json", out.join("geometry.json").to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ])
        .unwrap();
        cli.execute().unwrap();
        let census = std::fs::read_to_string(out.join("census.csv")).unwrap();
        assert!(census.starts_with("vertex,x,y,omega,kind,branch,index,exponent,singular"));
        // Square with gamma = bottom: two mixed right-angle corners, no
        // singular pencil exponents, and four corner rows in all.
        assert_eq!(census.lines().count(), 5);
        assert!(census.contains("mixed,pencil,,,false"));
        let spec_out = tmp.path().join("s");
        let cli = parse(&[
            "cauchy-qr", "spectrum", "--omega", "1.5707963267948966", "--eps", "1.0",
            "--n-range", "-2:2", "--out", spec_out.to_str().unwrap(),
        ])
        .unwrap();
        cli.execute().unwrap();
        let csv = std::fs::read_to_string(spec_out.join("eigenpairs.csv")).unwrap();
        assert_eq!(csv.lines().count(), 11, "header plus ten eigenpair rows");
        assert!(csv.starts_with("n,sign,re_lambda,im_lambda,residual,d_k"));
    }

    #[test]
    fn verify_symbol_writes_each_table() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("v");
        let taus = ["--tau-max", "20", "--tau-count", "5", "--n-points", "301"];
        for (mode, file) in [
            ("scalar", "scalar_ratio.csv"),
            ("uniform", "uniform_probe.csv"),
            ("quotients", "quotients.csv"),
        ] {
            let mut argv = vec![
                "cauchy-qr", "verify-symbol", "--mode", mode, "--omega-degrees", "90",
                "--eps", "1.0,1e-2", "--out", out.to_str().unwrap(),
            ];
            argv.extend_from_slice(&taus);
            parse(&argv).unwrap().execute().unwrap();
            assert!(out.join(file).is_file(), "{file}");
        }
        let quotients = std::fs::read_to_string(out.join("quotients.csv")).unwrap();
        assert!(quotients.starts_with("epsilon,tau,Q1,Q2"));
        let uniform = std::fs::read_to_string(out.join("uniform_probe.csv")).unwrap();
        assert!(uniform.starts_with("epsilon,tau,ratio"));
        let scalar = std::fs::read_to_string(out.join("scalar_ratio.csv")).unwrap();
        assert!(scalar.starts_with("tau,ratio"));
    }

    #[test]
    fn solve_writes_solution_and_reports() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("sol");
        let cli = parse(&[
            "cauchy-qr", "solve", "--geometry", "square", "--gamma", "bottom,right",
            "--exact", "exp_cos", "--eps", "1e-3", "--n", "8", "--out", out.to_str().unwrap(),
        ])
        .unwrap();
        cli.execute().unwrap();
        let sol = std::fs::read_to_string(out.join("solution.csv")).unwrap();
        assert!(sol.starts_with("x,y,u,lambda"));
        assert_eq!(sol.lines().count(), 1 + 81);
        let residual: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("residual.json")).unwrap()).unwrap();
        assert!(residual["algebraic_rel"].as_f64().unwrap() <= 1e-10);
        assert!(out.join("error.json").is_file());
    }

    #[test]
    fn sweep_command_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = r#"{"geometry":"square","gamma":["bottom"],"exact":"one_edge",
            "eps_list":[0.01],"h_levels":[3],"delta_list":[0.0],"seed":7}"#;
        let cfg_path = tmp.path().join("cfg.json");
        std::fs::write(&cfg_path, cfg).unwrap();
        let out = tmp.path().join("r");
        let cli = parse(&[
            "cauchy-qr", "sweep",
            "--config", cfg_path.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ])
        .unwrap();
        cli.execute().unwrap();
        assert!(out.join("report.csv").is_file());
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["n_failed"].as_u64(), Some(0));
        assert_eq!(summary["invariants_ok"].as_bool(), Some(true));
    }
}
