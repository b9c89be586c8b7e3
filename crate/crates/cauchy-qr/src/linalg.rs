//! Deterministic direct solvers sized for this crate: a banded LDL^T for
//! symmetric quasi-definite systems (positive-definite leading block,
//! negative-definite trailing block after symmetric permutation), a banded
//! complex LU with partial pivoting for the 1D slice systems, and
//! Gauss-Legendre rules.

use num_complex::Complex64;

use crate::{Error, Result};

/// Symmetric banded matrix, lower band stored column-major: entry `(i, j)`
/// with `j <= i <= j + bw` lives at `data[j * (bw + 1) + (i - j)]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, bw: usize) -> Self {
        BandMatrix { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    /// Accumulates `v` at `(i, j)`; only the lower triangle is stored, so
    /// callers add each symmetric off-diagonal pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(hi - lo <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        self.data[lo * (self.bw + 1) + (hi - lo)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            return 0.0;
        }
        self.data[lo * (self.bw + 1) + (hi - lo)]
    }

    /// In-place LDL^T without pivoting. Fails on a vanishing pivot, which for
    /// quasi-definite input signals loss of definiteness at working precision.
    pub fn ldl(mut self) -> Result<BandLdl> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut d_min = f64::INFINITY;
        let mut d_max = 0.0f64;
        for j in 0..n {
            let k_lo = j.saturating_sub(bw);
            for k in k_lo..j {
                let ljk = self.data[k * w + (j - k)];
                if ljk == 0.0 {
                    continue;
                }
                let f = ljk * self.data[k * w];
                // Column k reaches rows up to k + bw.
                let i_hi = (k + bw).min(n - 1);
                for i in j..=i_hi {
                    self.data[j * w + (i - j)] -= self.data[k * w + (i - k)] * f;
                }
            }
            let d = self.data[j * w];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Solver(format!("zero or non-finite pivot at column {j} of {n}")));
            }
            d_min = d_min.min(d.abs());
            d_max = d_max.max(d.abs());
            let i_hi = (j + bw).min(n - 1);
            for i in (j + 1)..=i_hi {
                self.data[j * w + (i - j)] /= d;
            }
        }
        Ok(BandLdl { n, bw, data: self.data, d_min_abs: d_min, d_max_abs: d_max })
    }
}

/// Factored form; `solve_in_place` applies L^{-1}, D^{-1}, L^{-T}.
#[derive(Debug, Clone)]
pub struct BandLdl {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
    /// Extremal |D_ii|: a conditioning witness for the factored system.
    pub d_min_abs: f64,
    pub d_max_abs: f64,
}

impl BandLdl {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                let i_hi = (j + bw).min(n - 1);
                for i in (j + 1)..=i_hi {
                    x[i] -= self.data[j * w + (i - j)] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] /= self.data[j * w];
        }
        for j in (0..n).rev() {
            let i_hi = (j + bw).min(n - 1);
            let mut acc = x[j];
            for i in (j + 1)..=i_hi {
                acc -= self.data[j * w + (i - j)] * x[i];
            }
            x[j] = acc;
        }
    }
}

/// Complex banded LU with partial pivoting, LAPACK-style storage: `kl`
/// subdiagonals, `ku` superdiagonals, `kl` extra rows for pivoting fill.
/// Entry `(i, j)` lives at `ab[(kl + ku + i - j) + j * ldab]`.
#[derive(Debug, Clone)]
pub struct BandLuC {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

pub struct BandBuilderC {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
}

impl BandBuilderC {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandBuilderC { n, kl, ku, ab: vec![Complex64::new(0.0, 0.0); n * ldab] }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let (kl, ku) = (self.kl, self.ku);
        assert!(i + ku >= j && j + kl >= i, "entry ({i}, {j}) outside band kl={kl} ku={ku}");
        let ldab = 2 * kl + ku + 1;
        self.ab[(kl + ku + i - j) + j * ldab] = v;
    }

    pub fn factor(self) -> Result<BandLuC> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let mut ab = self.ab;
        let mut piv = vec![0usize; n];
        // Band width of U grows to kl + ku under row interchanges.
        let kv = kl + ku;
        for j in 0..n {
            // Pivot among rows j..=min(j+kl, n-1).
            let i_hi = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = ab[(kv + j - j) + j * ldab].norm_sqr();
            for i in (j + 1)..=i_hi {
                let mag = ab[(kv + i - j) + j * ldab].norm_sqr();
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            piv[j] = p;
            if best == 0.0 {
                return Err(Error::Solver(format!("singular banded system at column {j} of {n}")));
            }
            if p != j {
                // Swap rows j and p across the columns where both live in band.
                let c_hi = (j + kv).min(n - 1);
                for c in j..=c_hi {
                    let a = (kv + j - c) + c * ldab;
                    let b = (kv + p - c) + c * ldab;
                    ab.swap(a, b);
                }
            }
            let pivot = ab[kv + j * ldab];
            for i in (j + 1)..=i_hi {
                let idx = (kv + i - j) + j * ldab;
                let m = ab[idx] / pivot;
                ab[idx] = m;
                if m != Complex64::new(0.0, 0.0) {
                    let c_hi = (j + kv).min(n - 1);
                    for c in (j + 1)..=c_hi {
                        let src = ab[(kv + j - c) + c * ldab];
                        ab[(kv + i - c) + c * ldab] -= m * src;
                    }
                }
            }
        }
        Ok(BandLuC { n, kl, ku, ab, piv })
    }
}

impl BandLuC {
    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj != Complex64::new(0.0, 0.0) {
                let i_hi = (j + kl).min(n - 1);
                for i in (j + 1)..=i_hi {
                    let m = self.ab[(kv + i - j) + j * ldab];
                    x[i] -= m * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            let c_hi = (j + kv).min(n - 1);
            for c in (j + 1)..=c_hi {
                acc -= self.ab[(kv + j - c) + c * ldab] * x[c];
            }
            x[j] = acc / self.ab[kv + j * ldab];
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Deterministic; accurate to ~1e-15 for n up to a few
/// thousand.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z).
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Maps a [-1, 1] rule onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}
