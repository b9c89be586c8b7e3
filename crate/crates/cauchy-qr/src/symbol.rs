//! 1D verification bench for the angular slice problems obtained at a fixed
//! spectral parameter lambda: a coupled two-field slice, a single-field
//! slice, and the trigonometric quotients controlling the coupled system's
//! denominator. Probes witness that the stability constants stay bounded
//! over (epsilon, tau) grids; they cannot prove bounds, only fail on blow-up.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::BandBuilderC;
use crate::spectrum::{eigenvalues, PencilParams};
use crate::{fmt_f64, Error, Result};

/// Distance from lambda to the nearest eigenvalue of the two-field pencil
/// at (omega, epsilon).
fn pencil_distance(omega: f64, epsilon: f64, lambda: Complex64) -> Result<f64> {
    let params = PencilParams::new(omega, epsilon)?;
    let n_star = ((lambda.re * omega - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI)
        .round()
        .clamp(-1e6, 1e6) as i32;
    let mut dist = f64::INFINITY;
    for pair in eigenvalues(&params, n_star - 1..=n_star + 1) {
        dist = dist.min((lambda - pair.lambda).norm());
    }
    Ok(dist)
}

/// Distance from beta to the real lattice (pi/2 + n pi)/omega where the
/// single-field slice operator is singular.
fn real_lattice_distance(omega: f64, beta: f64) -> f64 {
    let n_star = ((beta * omega - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI)
        .round()
        .clamp(-1e6, 1e6);
    let mut dist = f64::INFINITY;
    for dn in [-1.0, 0.0, 1.0] {
        let lattice = (std::f64::consts::FRAC_PI_2 + (n_star + dn) * std::f64::consts::PI) / omega;
        dist = dist.min((beta - lattice).abs());
    }
    dist
}

/// Coupled two-field problem on (0, omega) at spectral parameter lambda:
///
///   -(d^2 + lambda^2) u = f1,   -(d^2 + lambda^2) l = eps * f2,
///   u(0) = 0,  l(omega) = 0,  u'(0) - l'(0) = 0,  eps u'(omega) + l'(omega) = 0,
///
/// with right-hand sides given on the uniform grid of n_points nodes.
#[derive(Debug, Clone)]
pub struct SliceProblem {
    pub omega: f64,
    pub epsilon: f64,
    pub lambda: Complex64,
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub n_points: usize,
}

impl SliceProblem {
    pub fn new(
        omega: f64,
        epsilon: f64,
        lambda: Complex64,
        f1: Vec<Complex64>,
        f2: Vec<Complex64>,
    ) -> Result<Self> {
        if !(omega > 0.0 && omega < 2.0 * std::f64::consts::PI) {
            return Err(Error::Symbol(format!("opening angle must lie in (0, 2*pi), got {omega}")));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Symbol(format!("regularization parameter must be positive, got {epsilon}")));
        }
        let n_points = f1.len();
        if n_points < 200 {
            return Err(Error::Symbol(format!("slice grid needs at least 200 points, got {n_points}")));
        }
        if f2.len() != n_points {
            return Err(Error::Symbol(format!(
                "right-hand sides disagree in length: {} vs {}",
                f1.len(),
                f2.len()
            )));
        }
        if f1.iter().chain(&f2).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Symbol("right-hand side contains a non-finite value".into()));
        }
        let dist = pencil_distance(omega, epsilon, lambda)?;
        if dist < 1e-8 {
            return Err(Error::Symbol(format!(
                "spectral parameter {lambda} is within {dist:e} of a pencil eigenvalue; system nearly singular"
            )));
        }
        Ok(SliceProblem { omega, epsilon, lambda, f1, f2, n_points })
    }

    fn h(&self) -> f64 {
        self.omega / (self.n_points - 1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct SliceSolution {
    pub theta: Vec<f64>,
    pub u: Vec<Complex64>,
    pub l: Vec<Complex64>,
    /// Relative algebraic residual of the discrete system after refinement.
    pub residual: f64,
}

fn matvec(triplets: &[(usize, usize, Complex64)], x: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for &(i, j, v) in triplets {
        y[i] += v * x[j];
    }
    y
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Factor, solve, refine (up to 3 steps) and insist the relative residual in
/// the max norm is at most 1e-10.
fn band_solve_checked(
    n: usize,
    kl: usize,
    ku: usize,
    triplets: &[(usize, usize, Complex64)],
    rhs: &[Complex64],
    what: &str,
) -> Result<(Vec<Complex64>, f64)> {
    let mut builder = BandBuilderC::new(n, kl, ku);
    for &(i, j, v) in triplets {
        builder.set(i, j, v);
    }
    let lu = builder
        .factor()
        .map_err(|e| Error::Symbol(format!("{what}: factorization failed: {e}")))?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    let mut rel = f64::INFINITY;
    for _ in 0..3 {
        let ax = matvec(triplets, &x, n);
        let mut r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        // Backward-error normalization ||r|| / (||b|| + || |A||x| ||); the
        // raw residual bottoms out at macheps * ||A|| ||x|| (~1e-9 at fine
        // grids where the stencil weights reach 1/h^2).
        let mut row_scale = vec![0.0f64; n];
        for &(i, j, v) in triplets {
            row_scale[i] += v.norm() * x[j].norm();
        }
        let scale = inf_norm(rhs) + row_scale.iter().fold(0.0f64, |m, &s| m.max(s)).max(1e-300);
        rel = inf_norm(&r) / scale;
        if rel <= 1e-10 {
            break;
        }
        lu.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
    }
    if !(rel <= 1e-10) {
        return Err(Error::Symbol(format!("{what}: residual {rel:e} exceeds 1e-10")));
    }
    Ok((x, rel))
}

/// Second-order centered interior stencils; the derivative couplings at the
/// ends use one-sided second-order stencils so the boundary does not drop
/// the global order.
pub fn solve_slice(p: &SliceProblem) -> Result<SliceSolution> {
    let n = p.n_points;
    let h = p.h();
    let inv_h2 = Complex64::new(1.0 / (h * h), 0.0);
    let inv_2h = Complex64::new(1.0 / (2.0 * h), 0.0);
    let l2 = p.lambda * p.lambda;
    let one = Complex64::new(1.0, 0.0);
    let eps = Complex64::new(p.epsilon, 0.0);
    // Interleaved unknowns: u_i at 2i, l_i at 2i+1.
    let mut t: Vec<(usize, usize, Complex64)> = Vec::with_capacity(12 * n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); 2 * n];
    t.push((0, 0, one));
    // u'(0) - l'(0) = 0 in the l_0 slot.
    t.push((1, 0, -3.0 * inv_2h));
    t.push((1, 2, 4.0 * inv_2h));
    t.push((1, 4, -inv_2h));
    t.push((1, 1, 3.0 * inv_2h));
    t.push((1, 3, -4.0 * inv_2h));
    t.push((1, 5, inv_2h));
    for i in 1..n - 1 {
        let (ru, rl) = (2 * i, 2 * i + 1);
        t.push((ru, ru - 2, -inv_h2));
        t.push((ru, ru, 2.0 * inv_h2 - l2));
        t.push((ru, ru + 2, -inv_h2));
        rhs[ru] = p.f1[i];
        t.push((rl, rl - 2, -inv_h2));
        t.push((rl, rl, 2.0 * inv_h2 - l2));
        t.push((rl, rl + 2, -inv_h2));
        rhs[rl] = eps * p.f2[i];
    }
    // eps u'(omega) + l'(omega) = 0 in the u_{n-1} slot.
    let ru = 2 * (n - 1);
    t.push((ru, ru, eps * 3.0 * inv_2h));
    t.push((ru, ru - 2, eps * -4.0 * inv_2h));
    t.push((ru, ru - 4, eps * inv_2h));
    t.push((ru, ru + 1, 3.0 * inv_2h));
    t.push((ru, ru - 1, -4.0 * inv_2h));
    t.push((ru, ru - 3, inv_2h));
    t.push((ru + 1, ru + 1, one));
    let (x, residual) = band_solve_checked(2 * n, 4, 4, &t, &rhs, "two-field slice")?;
    let theta: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let u: Vec<Complex64> = (0..n).map(|i| x[2 * i]).collect();
    let l: Vec<Complex64> = (0..n).map(|i| x[2 * i + 1]).collect();
    Ok(SliceSolution { theta, u, l, residual })
}

/// Trapezoid L2 norm of a grid function with spacing h.
pub fn grid_l2(v: &[Complex64], h: f64) -> f64 {
    let n = v.len();
    let mut acc = 0.5 * (v[0].norm_sqr() + v[n - 1].norm_sqr());
    for c in &v[1..n - 1] {
        acc += c.norm_sqr();
    }
    (h * acc).sqrt()
}

/// Grid H1 norm: trapezoid L2 plus the forward-difference seminorm.
pub fn grid_h1(v: &[Complex64], h: f64) -> f64 {
    let l2 = grid_l2(v, h);
    let mut semi = 0.0;
    for w in v.windows(2) {
        let d = (w[1] - w[0]) / h;
        semi += h * d.norm_sqr();
    }
    (l2 * l2 + semi).sqrt()
}

/// L2 norm of the centered second difference over interior nodes.
pub fn grid_d2_l2(v: &[Complex64], h: f64) -> f64 {
    let mut acc = 0.0;
    for w in v.windows(3) {
        let d2 = (w[0] - 2.0 * w[1] + w[2]) / (h * h);
        acc += h * d2.norm_sqr();
    }
    acc.sqrt()
}

/// Single-field slice -(d^2 + lambda^2) phi = g with phi(0) = 0 and
/// phi'(omega) = 0, solvable whenever Re(lambda) avoids the real lattice
/// (pi/2 + n pi)/omega.
pub fn solve_scalar_slice(omega: f64, lambda: Complex64, g: &[Complex64]) -> Result<Vec<Complex64>> {
    if !(omega > 0.0 && omega < 2.0 * std::f64::consts::PI) {
        return Err(Error::Symbol(format!("opening angle must lie in (0, 2*pi), got {omega}")));
    }
    let n = g.len();
    if n < 200 {
        return Err(Error::Symbol(format!("slice grid needs at least 200 points, got {n}")));
    }
    let dist = real_lattice_distance(omega, lambda.re);
    if dist < 1e-8 {
        return Err(Error::Symbol(format!(
            "Re(lambda) = {} is within {dist:e} of the singular lattice (pi/2 + n pi)/omega",
            lambda.re
        )));
    }
    let h = omega / (n - 1) as f64;
    let inv_h2 = Complex64::new(1.0 / (h * h), 0.0);
    let inv_2h = Complex64::new(1.0 / (2.0 * h), 0.0);
    let l2 = lambda * lambda;
    let mut t: Vec<(usize, usize, Complex64)> = Vec::with_capacity(3 * n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    t.push((0, 0, Complex64::new(1.0, 0.0)));
    for i in 1..n - 1 {
        t.push((i, i - 1, -inv_h2));
        t.push((i, i, 2.0 * inv_h2 - l2));
        t.push((i, i + 1, -inv_h2));
        rhs[i] = g[i];
    }
    t.push((n - 1, n - 1, 3.0 * inv_2h));
    t.push((n - 1, n - 2, -4.0 * inv_2h));
    t.push((n - 1, n - 3, inv_2h));
    let (x, _) = band_solve_checked(n, 2, 2, &t, &rhs, "single-field slice")?;
    Ok(x)
}

/// (||d^2 phi|| + |lambda|^2 ||phi||) / ||g||.
pub fn scalar_ratio(omega: f64, lambda: Complex64, g: &[Complex64], phi: &[Complex64]) -> f64 {
    let h = omega / (g.len() - 1) as f64;
    (grid_d2_l2(phi, h) + lambda.norm_sqr() * grid_l2(phi, h)) / grid_l2(g, h)
}

fn unit_random_grid(n: usize, rng: &mut ChaCha8Rng, h: f64) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = grid_l2(&v, h);
    for c in &mut v {
        *c /= norm;
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarProbeRow {
    pub tau: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarProbeTable {
    pub omega: f64,
    pub beta: f64,
    pub seed: u64,
    pub rows: Vec<ScalarProbeRow>,
    pub max_ratio: f64,
}

impl ScalarProbeTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{},{}\n", fmt_f64(r.tau), fmt_f64(r.ratio)));
        }
        s
    }
}

/// Stability-ratio table for the single-field slice with seeded random g.
/// On the imaginary axis (beta = 0) the continuous constant is 3; ratios
/// above 3.5 (constant plus discretization slack) are an error.
pub fn scalar_slice_probe(
    omega: f64,
    beta: f64,
    tau_grid: &[f64],
    n_points: usize,
    seed: u64,
) -> Result<ScalarProbeTable> {
    let dist = real_lattice_distance(omega, beta);
    if dist < 1e-8 {
        return Err(Error::Symbol(format!(
            "beta = {beta} is within {dist:e} of the singular lattice (pi/2 + n pi)/omega"
        )));
    }
    let h = omega / (n_points - 1) as f64;
    let rows: Result<Vec<ScalarProbeRow>> = tau_grid
        .par_iter()
        .enumerate()
        .map(|(idx, &tau)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(idx as u64 + 1)));
            let g = unit_random_grid(n_points, &mut rng, h);
            let lambda = Complex64::new(beta, tau);
            let phi = solve_scalar_slice(omega, lambda, &g)?;
            let ratio = scalar_ratio(omega, lambda, &g, &phi);
            if !ratio.is_finite() {
                return Err(Error::Symbol(format!("non-finite ratio at tau = {tau}")));
            }
            Ok(ScalarProbeRow { tau, ratio })
        })
        .collect();
    let rows = rows?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    if beta == 0.0 && max_ratio > 3.5 {
        return Err(Error::Symbol(format!(
            "imaginary-axis ratio {max_ratio} exceeds 3.5 (continuous constant 3 plus slack)"
        )));
    }
    Ok(ScalarProbeTable { omega, beta, seed, rows, max_ratio })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub epsilon: f64,
    pub tau: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeTable {
    pub omega: f64,
    pub beta: f64,
    pub seed: u64,
    pub rows: Vec<ProbeRow>,
    pub max_ratio: f64,
    pub argmax: (f64, f64),
    pub median_ratio: f64,
}

impl ProbeTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,tau,ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", fmt_f64(r.epsilon), fmt_f64(r.tau), fmt_f64(r.ratio)));
        }
        s
    }
}

/// Stability witness for the coupled slice: for each (epsilon, tau) with
/// lambda = beta + i tau and a unit random right-hand side, the ratio
///
///   [sqrt(eps)(||d^2 u|| + |lambda|^2 ||u||) + ||d^2 l|| + |lambda|^2 ||l||]
///     / (||f1|| + sqrt(eps) ||f2||)
///
/// is tabulated; a grid max above 10x the median counts as blow-up.
pub fn uniform_estimate_probe(
    omega: f64,
    beta: f64,
    eps_grid: &[f64],
    tau_grid: &[f64],
    n_points: usize,
    seed: u64,
) -> Result<ProbeTable> {
    let dist = real_lattice_distance(omega, beta);
    if dist < 1e-8 {
        return Err(Error::Symbol(format!(
            "beta = {beta} is within {dist:e} of the excluded lattice (pi/2 + n pi)/omega"
        )));
    }
    if eps_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::Symbol("empty probe grid".into()));
    }
    let h = omega / (n_points - 1) as f64;
    let cells: Vec<(usize, f64, f64)> = eps_grid
        .iter()
        .flat_map(|&e| tau_grid.iter().map(move |&t| (e, t)))
        .enumerate()
        .map(|(i, (e, t))| (i, e, t))
        .collect();
    let rows: Result<Vec<ProbeRow>> = cells
        .par_iter()
        .map(|&(idx, epsilon, tau)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(idx as u64 + 1)));
            let f1 = unit_random_grid(n_points, &mut rng, h);
            let f2 = unit_random_grid(n_points, &mut rng, h);
            let lambda = Complex64::new(beta, tau);
            let p = SliceProblem::new(omega, epsilon, lambda, f1, f2)?;
            let sol = solve_slice(&p)?;
            let l2l = lambda.norm_sqr();
            let num = epsilon.sqrt() * (grid_d2_l2(&sol.u, h) + l2l * grid_l2(&sol.u, h))
                + grid_d2_l2(&sol.l, h)
                + l2l * grid_l2(&sol.l, h);
            let den = grid_l2(&p.f1, h) + epsilon.sqrt() * grid_l2(&p.f2, h);
            let ratio = num / den;
            if !ratio.is_finite() {
                return Err(Error::Symbol(format!("non-finite ratio at epsilon = {epsilon}, tau = {tau}")));
            }
            Ok(ProbeRow { epsilon, tau, ratio })
        })
        .collect();
    let rows = rows?;
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median_ratio = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let best = rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    let (max_ratio, argmax) = (best.ratio, (best.epsilon, best.tau));
    if max_ratio > 10.0 * median_ratio {
        return Err(Error::Symbol(format!(
            "ratio blow-up: max {max_ratio} at (epsilon, tau) = {argmax:?} exceeds 10x median {median_ratio}"
        )));
    }
    Ok(ProbeTable { omega, beta, seed, rows, max_ratio, argmax, median_ratio })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub tau: f64,
    pub q1: f64,
    pub q2: f64,
    pub ln_q1: f64,
    pub ln_q2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub omega: f64,
    pub beta: f64,
    pub rows: Vec<SweepRow>,
    /// Smallest |tau| whose eps*Q1 value reaches the grid max of eps*Q1
    /// within 1e-12 relative.
    pub saturation_tau_q1_eps: f64,
    /// Same for Q2.
    pub saturation_tau_q2: f64,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,tau,Q1,Q2\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(r.epsilon),
                fmt_f64(r.tau),
                fmt_f64(r.q1),
                fmt_f64(r.q2)
            ));
        }
        s
    }
}

/// ln |1 + eps*cos^2(lambda*omega)|^2 for lambda = beta + i tau, safe for
/// arbitrarily large |tau|. Uses cos(2*lambda*omega) = cos(2 b w) cosh(t')
/// - i sin(2 b w) sinh(t') with t' = 2 tau omega, and factors out e^|t'|
/// so only O(1) quantities and a log offset remain.
fn ln_denominator(omega: f64, beta: f64, eps: f64, tau: f64) -> f64 {
    let t = 2.0 * tau.abs() * omega;
    let c2b = (2.0 * beta * omega).cos();
    let s2b = (2.0 * beta * omega).sin();
    let em2t = (-2.0 * t).exp();
    let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
    // z = eps (1 + cos(2 lambda omega)) / 2 = (eps e^t / 4) * w
    let wr = c2b * (1.0 + em2t) + 2.0 * (-t).exp();
    let wi = -sign * s2b * (1.0 - em2t);
    let ln_a = eps.ln() - 4.0f64.ln() + t;
    let ln_abs_w = 0.5 * (wr * wr + wi * wi).ln();
    let ln_abs_z = ln_a + ln_abs_w;
    if ln_abs_z <= 200.0 {
        // |z| at most e^200: form |1+z|^2 - 1 directly.
        let a = ln_a.exp();
        let (zr, zi) = (a * wr, a * wi);
        (2.0 * zr + zr * zr + zi * zi).ln_1p()
    } else {
        // |1+z|^2 = |z|^2 |1 + 1/z|^2 with |1/z| below e^-200.
        let inv_a = (-ln_a).exp();
        let den = wr * wr + wi * wi;
        let re_inv_z = inv_a * wr / den;
        let abs_inv_z2 = inv_a * inv_a / den;
        2.0 * ln_abs_z + (2.0 * re_inv_z + abs_inv_z2).ln_1p()
    }
}

/// ln of Q1 = eps e^{2|tau| omega} / |1 + eps cos^2(lambda omega)|^2 and of
/// Q2 = eps^2 e^{4|tau| omega} / (same denominator).
pub fn ln_quotients(omega: f64, beta: f64, eps: f64, tau: f64) -> (f64, f64) {
    let t = 2.0 * tau.abs() * omega;
    let ln_den = ln_denominator(omega, beta, eps, tau);
    (eps.ln() + t - ln_den, 2.0 * eps.ln() + 2.0 * t - ln_den)
}

/// Quotient table over an (epsilon, tau) grid. Bounded quantities: eps*Q1
/// decays for large |tau| while Q2 levels off at 16 (the denominator grows
/// like (eps e^{2|tau| omega} / 4)^2). Checks: the full-grid sup stays
/// within 10x the sup over every second grid entry, and no value at the
/// extreme |tau| exceeds the grid max.
pub fn quotient_sweep(omega: f64, beta: f64, eps_grid: &[f64], tau_grid: &[f64]) -> Result<SweepTable> {
    let dist = real_lattice_distance(omega, beta);
    if dist < 1e-8 {
        return Err(Error::Symbol(format!(
            "beta = {beta} is within {dist:e} of the excluded lattice (pi/2 + n pi)/omega"
        )));
    }
    if eps_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::Symbol("empty sweep grid".into()));
    }
    let mut rows = Vec::with_capacity(eps_grid.len() * tau_grid.len());
    for &epsilon in eps_grid {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Symbol(format!("regularization parameter must be positive, got {epsilon}")));
        }
        for &tau in tau_grid {
            let (ln_q1, ln_q2) = ln_quotients(omega, beta, epsilon, tau);
            if !ln_q1.is_finite() || !ln_q2.is_finite() || ln_q1 > 700.0 || ln_q2 > 700.0 {
                return Err(Error::Symbol(format!(
                    "quotient overflow at epsilon = {epsilon}, tau = {tau}: ln Q1 = {ln_q1}, ln Q2 = {ln_q2}"
                )));
            }
            rows.push(SweepRow { epsilon, tau, q1: ln_q1.exp(), q2: ln_q2.exp(), ln_q1, ln_q2 });
        }
    }
    // Full-grid sup vs every-second-entry sup, in the log domain.
    let sup = |pick_coarse: bool, f: &dyn Fn(&SweepRow) -> f64| -> f64 {
        let mut m = f64::NEG_INFINITY;
        for (ie, _) in eps_grid.iter().enumerate() {
            for (it, _) in tau_grid.iter().enumerate() {
                if pick_coarse && (ie % 2 == 1 || it % 2 == 1) {
                    continue;
                }
                m = m.max(f(&rows[ie * tau_grid.len() + it]));
            }
        }
        m
    };
    for (name, f) in [
        ("Q1", &(|r: &SweepRow| r.ln_q1) as &dyn Fn(&SweepRow) -> f64),
        ("Q2", &|r: &SweepRow| r.ln_q2),
    ] {
        let full = sup(false, f);
        let coarse = sup(true, f);
        if full > coarse + 10.0f64.ln() {
            return Err(Error::Symbol(format!(
                "{name} sup over the full grid exceeds 10x the coarse half-grid sup: {full} vs {coarse} (log)"
            )));
        }
    }
    let tau_abs_max = tau_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let saturation = |value: &dyn Fn(&SweepRow) -> f64| -> Result<f64> {
        let max = rows.iter().map(|r| value(r)).fold(f64::NEG_INFINITY, f64::max);
        for r in &rows {
            if r.tau.abs() == tau_abs_max && value(r) > max + 1e-15 {
                return Err(Error::Symbol(format!(
                    "value at the extreme tau = {} exceeds the grid max",
                    r.tau
                )));
            }
        }
        Ok(rows
            .iter()
            .filter(|r| value(r) >= max - 1e-12)
            .map(|r| r.tau.abs())
            .fold(f64::INFINITY, f64::min))
    };
    let saturation_tau_q1_eps = saturation(&|r: &SweepRow| r.ln_q1 + r.epsilon.ln())?;
    let saturation_tau_q2 = saturation(&|r: &SweepRow| r.ln_q2)?;
    Ok(SweepTable { omega, beta, rows, saturation_tau_q1_eps, saturation_tau_q2 })
}
