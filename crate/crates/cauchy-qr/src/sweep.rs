//! Error-decomposition harness: sweeps the solver over (epsilon, h, delta)
//! grids against a manufactured compatible solution, splits the H1 error
//! into noise / discretization / regularization parts along the triangle
//! inequality, fits rates, and emits reproducible CSV + JSON reports.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fem::{error_norms, FeFunction, MeshNorms};
use crate::fields::compatible_source;
use crate::geometry::{PolygonSpec, SquareSide};
use crate::mesh::{generate_structured, TriMesh};
use crate::qr::{assemble_qr_source, solve_noisy, QrSolution};
use crate::{fmt_f64, Error, Result};

/// Coupling rules epsilon = c_eps * delta^p and h = c_h * epsilon^q. The
/// exponents must make both error contributions vanish in the limit:
/// delta/sqrt(epsilon) needs p < 2, h^(s-1)/epsilon needs q > 1/(s-1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRule {
    pub c_eps: f64,
    pub p: f64,
    pub c_h: f64,
    pub q: f64,
    pub s_used: f64,
}

pub fn couple_parameters(delta: f64, rule: &CouplingRule) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Sweep(format!("coupling needs a positive noise level, got {delta}")));
    }
    if !(rule.c_eps > 0.0 && rule.c_h > 0.0) {
        return Err(Error::Sweep("coupling constants must be positive".into()));
    }
    if !(rule.p < 2.0) {
        return Err(Error::Sweep(format!(
            "noise coupling requires p < 2 so that delta/sqrt(epsilon) vanishes; got p = {}",
            rule.p
        )));
    }
    if !(rule.s_used > 1.0) {
        return Err(Error::Sweep(format!("regularity exponent must exceed 1, got s = {}", rule.s_used)));
    }
    let q_min = 1.0 / (rule.s_used - 1.0);
    if !(rule.q > q_min) {
        return Err(Error::Sweep(format!(
            "mesh coupling requires q > 1/(s - 1) = {q_min} so that h^(s-1)/epsilon vanishes; got q = {}",
            rule.q
        )));
    }
    let epsilon = rule.c_eps * delta.powf(rule.p);
    let h = rule.c_h * epsilon.powf(rule.q);
    if !(epsilon > 0.0 && h > 0.0) || !epsilon.is_finite() || !h.is_finite() {
        return Err(Error::Sweep(format!("coupled pair out of range: epsilon = {epsilon}, h = {h}")));
    }
    Ok((epsilon, h))
}

/// Least-squares slope of log(error) against log(scale), with r^2.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::Sweep(format!("rate fit needs at least 2 pairs, got {}", pairs.len())));
    }
    for &(s, e) in pairs {
        if !(s > 0.0 && e > 0.0) || !s.is_finite() || !e.is_finite() {
            return Err(Error::Sweep(format!("rate fit needs positive finite pairs, got ({s}, {e})")));
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::Sweep("rate fit needs at least two distinct scales".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let rate = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let pred = ym + rate * (x - xm);
            (y - pred) * (y - pred)
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((rate, r_squared))
}

/// Build the polygon for a named geometry with the listed data edges.
pub fn parse_geometry(name: &str, gamma: &[String]) -> Result<PolygonSpec> {
    match name {
        "square" => {
            let sides: Option<Vec<SquareSide>> = gamma.iter().map(|s| SquareSide::parse(s)).collect();
            let sides = sides
                .ok_or_else(|| Error::Sweep(format!("unknown square side in {gamma:?}; use bottom/right/top/left")))?;
            PolygonSpec::unit_square(&sides)
        }
        "lshape" => {
            let idx: std::result::Result<Vec<usize>, _> = gamma.iter().map(|s| s.parse::<usize>()).collect();
            let idx =
                idx.map_err(|_| Error::Sweep(format!("lshape data edges must be indices 0..=5, got {gamma:?}")))?;
            PolygonSpec::l_shape(&idx)
        }
        other => Err(Error::Sweep(format!("unknown geometry '{other}'; use square or lshape"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub geometry: String,
    pub gamma: Vec<String>,
    /// Manufactured compatible solution: "one_edge", "two_edge" or
    /// "inner_edge".
    pub exact: String,
    pub eps_list: Vec<f64>,
    /// Mesh levels l with h = 1/2^l.
    pub h_levels: Vec<u32>,
    pub delta_list: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_rate_slack")]
    pub rate_slack: f64,
    #[serde(default)]
    pub coupling: Option<CouplingRule>,
}

fn default_rate_slack() -> f64 {
    0.15
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() || self.h_levels.is_empty() || self.delta_list.is_empty() {
            return Err(Error::Sweep("eps_list, h_levels and delta_list must be nonempty".into()));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::Sweep(format!("eps_list must be positive and finite, got {:?}", self.eps_list)));
        }
        if self.delta_list.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::Sweep(format!(
                "delta_list must be nonnegative and finite, got {:?}",
                self.delta_list
            )));
        }
        if self.h_levels.len() > 8 || self.h_levels.iter().any(|&l| l == 0 || l > 8) {
            return Err(Error::Sweep(format!(
                "h_levels are desk scale: at most 8 entries, each in 1..=8, got {:?}",
                self.h_levels
            )));
        }
        if !(self.rate_slack > 0.0) {
            return Err(Error::Sweep(format!("rate_slack must be positive, got {}", self.rate_slack)));
        }
        let mut keys: Vec<(u64, u32, u64)> = Vec::new();
        for &e in &self.eps_list {
            for &l in &self.h_levels {
                for &d in &self.delta_list {
                    keys.push((e.to_bits(), l, d.to_bits()));
                }
            }
        }
        let before = keys.len();
        keys.sort_unstable();
        keys.dedup();
        if keys.len() != before {
            return Err(Error::Sweep("duplicate (epsilon, level, delta) grid points".into()));
        }
        if let Some(rule) = &self.coupling {
            // Surface bad exponents at config time, not mid-sweep.
            couple_parameters(1e-3, rule)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub h: f64,
    pub delta: f64,
    pub seed: u64,
    pub l2_total: f64,
    pub h1_total: f64,
    /// ||u_delta - u_0|| on the sweep mesh.
    pub h1_noise: f64,
    /// ||u_0 - u_ref|| with the reference solve standing in for the
    /// continuous regularized solution.
    pub h1_disc_vs_reference: f64,
    /// ||u_ref - u_exact||.
    pub h1_eta_vs_reference: f64,
    pub l2_eta_vs_reference: f64,
    pub h1_lambda: f64,
    pub lambda_over_sqrt_eps: f64,
    pub algebraic_residual: f64,
    pub refinement_steps: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub status: String,
}

impl SweepRow {
    fn failed(epsilon: f64, h: f64, delta: f64, seed: u64, msg: &str) -> Self {
        SweepRow {
            epsilon,
            h,
            delta,
            seed,
            l2_total: f64::NAN,
            h1_total: f64::NAN,
            h1_noise: f64::NAN,
            h1_disc_vs_reference: f64::NAN,
            h1_eta_vs_reference: f64::NAN,
            l2_eta_vs_reference: f64::NAN,
            h1_lambda: f64::NAN,
            lambda_over_sqrt_eps: f64::NAN,
            algebraic_residual: f64::NAN,
            refinement_steps: 0,
            d_min: f64::NAN,
            d_max: f64::NAN,
            status: msg.replace(',', ";"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub epsilon: f64,
    pub rate: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub h_reference: f64,
    pub bias_note: String,
    pub rows: Vec<SweepRow>,
    /// Rate of the vs-reference discretization column in h, per epsilon.
    pub disc_rates: Vec<RateFit>,
}

/// Solve the grid. The per-epsilon reference lives on a mesh two uniform
/// refinements finer than the finest sweep level; level meshes nest in it,
/// so coarse solutions inject exactly and the decomposition columns obey
/// the triangle inequality up to quadrature rounding.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let spec = parse_geometry(&config.geometry, &config.gamma)?;
    let pair = compatible_source(&spec, &config.exact)?;
    let exact = |p: [f64; 2]| pair.u_star.value(p);
    let exact_grad = |p: [f64; 2]| pair.u_star.gradient(p);
    let source = |p: [f64; 2]| pair.source.value(p);

    let mut levels: Vec<u32> = config.h_levels.clone();
    levels.sort_unstable();
    let n_max = 1usize << *levels.iter().max().unwrap();
    let n_ref = 4 * n_max;
    let h_reference = 1.0 / n_ref as f64;
    let mesh_ref = Arc::new(generate_structured(&spec, n_ref)?);
    let norms_ref = MeshNorms::new(&mesh_ref)?;

    let mut level_meshes: BTreeMap<u32, (Arc<TriMesh>, MeshNorms)> = BTreeMap::new();
    for &l in &levels {
        let mesh = Arc::new(generate_structured(&spec, 1usize << l)?);
        let norms = MeshNorms::new(&mesh)?;
        level_meshes.insert(l, (mesh, norms));
    }

    let inject = |sol: &FeFunction| -> Result<FeFunction> {
        FeFunction::interpolate(mesh_ref.clone(), |p| sol.eval(p).unwrap_or(f64::NAN))
    };

    let mut rows: Vec<SweepRow> = Vec::new();
    let mut disc_rates: Vec<RateFit> = Vec::new();
    for &epsilon in &config.eps_list {
        let reference = assemble_qr_source(&mesh_ref, epsilon, &source).and_then(|s| s.solve());
        let reference = match reference {
            Ok(r) => r,
            Err(e) => {
                let msg = format!("reference solve failed: {e}");
                for &l in &levels {
                    for &delta in &config.delta_list {
                        rows.push(SweepRow::failed(epsilon, 1.0 / (1u64 << l) as f64, delta, config.seed, &msg));
                    }
                }
                continue;
            }
        };
        let eta = error_norms(&reference.u, &exact, &exact_grad);
        let mut disc_pairs: Vec<(f64, f64)> = Vec::new();
        for &l in &levels {
            let (mesh_l, norms_l) = &level_meshes[&l];
            let h = 1.0 / (1u64 << l) as f64;
            let base = assemble_qr_source(mesh_l, epsilon, &source).and_then(|s| s.solve());
            let base = match base {
                Ok(b) => b,
                Err(e) => {
                    let msg = e.to_string();
                    for &delta in &config.delta_list {
                        rows.push(SweepRow::failed(epsilon, h, delta, config.seed, &msg));
                    }
                    continue;
                }
            };
            let cell = |delta: f64| -> Result<SweepRow> {
                let noisy: QrSolution;
                let sol = if delta == 0.0 {
                    &base
                } else {
                    noisy = solve_noisy(mesh_l, epsilon, &source, delta, config.seed)?;
                    &noisy
                };
                let diff_vals: Vec<f64> =
                    sol.u.values.iter().zip(&base.u.values).map(|(a, b)| a - b).collect();
                let h1_noise = norms_l.h1_norm(&FeFunction::new(mesh_l.clone(), diff_vals)?)?;
                let base_on_ref = inject(&base.u)?;
                let disc_vals: Vec<f64> =
                    base_on_ref.values.iter().zip(&reference.u.values).map(|(a, b)| a - b).collect();
                let h1_disc = norms_ref.h1_norm(&FeFunction::new(mesh_ref.clone(), disc_vals)?)?;
                let total = error_norms(&inject(&sol.u)?, &exact, &exact_grad);
                let h1_lambda = norms_l.h1_norm(&sol.lambda)?;
                Ok(SweepRow {
                    epsilon,
                    h,
                    delta,
                    seed: config.seed,
                    l2_total: total.l2,
                    h1_total: total.h1,
                    h1_noise,
                    h1_disc_vs_reference: h1_disc,
                    h1_eta_vs_reference: eta.h1,
                    l2_eta_vs_reference: eta.l2,
                    h1_lambda,
                    lambda_over_sqrt_eps: h1_lambda / epsilon.sqrt(),
                    algebraic_residual: sol.residual.algebraic_rel,
                    refinement_steps: sol.residual.refinement_steps,
                    d_min: sol.residual.d_min_abs,
                    d_max: sol.residual.d_max_abs,
                    status: "ok".into(),
                })
            };
            for &delta in &config.delta_list {
                match cell(delta) {
                    Ok(row) => {
                        if delta == 0.0 {
                            disc_pairs.push((h, row.h1_disc_vs_reference));
                        }
                        rows.push(row);
                    }
                    Err(e) => rows.push(SweepRow::failed(epsilon, h, delta, config.seed, &e.to_string())),
                }
            }
        }
        if disc_pairs.len() >= 2 {
            if let Ok((rate, r_squared)) = fit_rate(&disc_pairs) {
                // Error decays as h shrinks, so the fitted slope is positive.
                disc_rates.push(RateFit { epsilon, rate, r_squared });
            }
        }
    }
    let bias_note = format!(
        "disc and eta columns are vs-reference (same-epsilon solve at h = {}); \
         the reference bias of order h_ref^(s-1)/epsilon adds to both columns",
        fmt_f64(h_reference)
    );
    Ok(SweepReport { config: config.clone(), h_reference, bias_note, rows, disc_rates })
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {}\n", self.bias_note);
        s.push_str(
            "epsilon,h,delta,seed,l2_total,h1_total,h1_noise,h1_disc_vs_reference,\
             h1_eta_vs_reference,l2_eta_vs_reference,h1_lambda,lambda_over_sqrt_eps,\
             algebraic_residual,refinement_steps,d_min,d_max,status\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(r.epsilon),
                fmt_f64(r.h),
                fmt_f64(r.delta),
                r.seed,
                fmt_f64(r.l2_total),
                fmt_f64(r.h1_total),
                fmt_f64(r.h1_noise),
                fmt_f64(r.h1_disc_vs_reference),
                fmt_f64(r.h1_eta_vs_reference),
                fmt_f64(r.l2_eta_vs_reference),
                fmt_f64(r.h1_lambda),
                fmt_f64(r.lambda_over_sqrt_eps),
                fmt_f64(r.algebraic_residual),
                r.refinement_steps,
                fmt_f64(r.d_min),
                fmt_f64(r.d_max),
                r.status
            ));
        }
        s
    }

    pub fn to_json_summary(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a SweepConfig,
            h_reference: f64,
            bias_note: &'a str,
            n_rows: usize,
            n_failed: usize,
            disc_rates: &'a [RateFit],
            invariants_ok: bool,
            invariant_message: String,
        }
        let inv = self.check_invariants();
        let summary = Summary {
            config: &self.config,
            h_reference: self.h_reference,
            bias_note: &self.bias_note,
            n_rows: self.rows.len(),
            n_failed: self.rows.iter().filter(|r| r.status != "ok").count(),
            disc_rates: &self.disc_rates,
            invariants_ok: inv.is_ok(),
            invariant_message: inv.err().map(|e| e.to_string()).unwrap_or_default(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail")
    }

    /// Hard checks: finite nonnegative norms, the triangle inequality of the
    /// decomposition (1e-8 slack for quadrature rounding), and exact
    /// linearity of the noise column in delta at fixed (epsilon, h, seed).
    pub fn check_invariants(&self) -> Result<()> {
        let mut noise_groups: BTreeMap<(u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
        for r in &self.rows {
            if r.status != "ok" {
                continue;
            }
            for (name, v) in [
                ("l2_total", r.l2_total),
                ("h1_total", r.h1_total),
                ("h1_noise", r.h1_noise),
                ("h1_disc_vs_reference", r.h1_disc_vs_reference),
                ("h1_eta_vs_reference", r.h1_eta_vs_reference),
                ("h1_lambda", r.h1_lambda),
            ] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Sweep(format!(
                        "row (eps={:e}, h={:e}, delta={:e}): {name} = {v} is not a norm",
                        r.epsilon, r.h, r.delta
                    )));
                }
            }
            let bound = r.h1_noise + r.h1_disc_vs_reference + r.h1_eta_vs_reference + 1e-8;
            if r.h1_total > bound {
                return Err(Error::Sweep(format!(
                    "triangle inequality violated at (eps={:e}, h={:e}, delta={:e}): {} > {}",
                    r.epsilon, r.h, r.delta, r.h1_total, bound
                )));
            }
            if r.delta > 0.0 {
                noise_groups
                    .entry((r.epsilon.to_bits(), r.h.to_bits()))
                    .or_default()
                    .push((r.delta, r.h1_noise));
            }
        }
        for ((eps_bits, _), group) in noise_groups {
            if group.len() < 2 {
                continue;
            }
            let kappa0 = group[0].1 / group[0].0;
            for &(delta, noise) in &group[1..] {
                let kappa = noise / delta;
                if (kappa - kappa0).abs() > 1e-10 * kappa0.abs().max(1e-300) {
                    return Err(Error::Sweep(format!(
                        "noise column is not linear in delta at eps={:e}: {kappa} vs {kappa0}",
                        f64::from_bits(eps_bits)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaTrend {
    pub best_mu: f64,
    /// Relative residual of the best inverse-log-power fit.
    pub fit_rel_residual: f64,
    pub monotone_ok: bool,
    pub values: Vec<(f64, f64)>,
}

/// Fit y against (log(1/eps))^-mu over a mu grid in (0,1). Only monotone
/// decrease is ever asserted downstream; the exponent is reported, not
/// checked, because it depends on the geometry in an unknown way.
pub fn fit_log_decay(eps: &[f64], y: &[f64]) -> Result<EtaTrend> {
    if eps.len() < 3 || eps.len() != y.len() {
        return Err(Error::Sweep(format!(
            "log-decay fit needs at least 3 matched samples, got {} and {}",
            eps.len(),
            y.len()
        )));
    }
    for w in eps.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Sweep("eps samples must be strictly decreasing".into()));
        }
    }
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Sweep("log-decay fit needs eps in (0,1)".into()));
    }
    if y.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Sweep("log-decay fit needs positive finite values".into()));
    }
    let y_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best = (f64::NAN, f64::INFINITY);
    let mut mu = 0.02;
    while mu < 0.99 {
        let xs: Vec<f64> = eps.iter().map(|&e| (1.0 / e).ln().powf(-mu)).collect();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(y).map(|(x, v)| x * v).sum();
        let c = sxy / sxx;
        let res: f64 = xs.iter().zip(y).map(|(x, v)| (v - c * x) * (v - c * x)).sum::<f64>().sqrt();
        let rel = res / y_norm;
        if rel < best.1 {
            best = (mu, rel);
        }
        mu += 0.02;
    }
    let mut monotone_ok = y.last().unwrap() < &(0.95 * y[0]);
    for w in y.windows(2) {
        if w[1] > 1.05 * w[0] {
            monotone_ok = false;
        }
    }
    Ok(EtaTrend {
        best_mu: best.0,
        fit_rel_residual: best.1,
        monotone_ok,
        values: eps.iter().copied().zip(y.iter().copied()).collect(),
    })
}

/// Regularization-error trend out of a sweep report: the vs-reference eta
/// column per epsilon, largest epsilon first.
pub fn logarithmic_monitor(report: &SweepReport) -> Result<EtaTrend> {
    let mut per_eps: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in &report.rows {
        if r.status == "ok" {
            per_eps.insert(r.epsilon.to_bits(), (r.epsilon, r.l2_eta_vs_reference));
        }
    }
    let mut pairs: Vec<(f64, f64)> = per_eps.into_values().collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let eps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    fit_log_decay(&eps, &y)
}
