//! Spectral solution of the angular system.
//!
//! Eigenvalue form: `ξY = HY` with `H = [[−am cosθ, 𝓛₋], [−𝓛₊, am cosθ]]`,
//! which is symmetric in `L²((0, π), sinθ dθ)`. Each component is expanded in
//! `(sin θ/2)^α (cos θ/2)^β P_n^{(α,β)}(cos θ)`, orthonormal in that measure,
//! with exponents matched to the regular behaviour at the poles:
//! `Y₁: (|k − ½|, |k + ½|)`, `Y₂: (|k + ½|, |k − ½|)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpacetimeParams;
use crate::separation::{ModeParams, Sample2, V2};

pub const MIN_NODES: usize = 8;
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    /// Basis functions per component.
    pub n: usize,
}

impl DiscretizationSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!("need at least {MIN_NODES} basis functions, got {n}")));
        }
        Ok(DiscretizationSpec { n })
    }

    fn quadrature_order(&self, k: f64) -> usize {
        2 * self.n + 2 * k.abs().ceil() as usize + 40
    }
}

/// Gauss-Legendre nodes and weights on `[lo, hi]`.
pub fn gauss_legendre(q: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
    for i in 0..(q + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=q {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if q == 0 { 1.0 } else if q == 1 { z } else { p1 };
            let pm = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = mid - half * z;
        x[q - 1 - i] = mid + half * z;
        let wi = 2.0 * half / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
    (x, w)
}

/// Values and `x`-derivatives of `P_0 … P_{n−1}` for Jacobi parameters `(a, b)`.
fn jacobi(n: usize, a: f64, b: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n];
    let mut dp = vec![0.0; n];
    if n == 0 {
        return (p, dp);
    }
    p[0] = 1.0;
    if n == 1 {
        return (p, dp);
    }
    p[1] = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    dp[1] = (a + b + 2.0) / 2.0;
    for j in 2..n {
        let jf = j as f64;
        let s = 2.0 * jf + a + b;
        let c0 = 2.0 * jf * (jf + a + b) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c1d = (s - 1.0) * s * (s - 2.0);
        let c2 = 2.0 * (jf + a - 1.0) * (jf + b - 1.0) * s;
        p[j] = (c1 * p[j - 1] - c2 * p[j - 2]) / c0;
        dp[j] = (c1d * p[j - 1] + c1 * dp[j - 1] - c2 * dp[j - 2]) / c0;
    }
    (p, dp)
}

/// `∫₀^π [(sin θ/2)^a (cos θ/2)^b P_n]² sinθ dθ`.
fn jacobi_norms(n: usize, a: f64, b: f64) -> Vec<f64> {
    // g_n = Γ(n+a+1)Γ(n+b+1)/(Γ(n+a+b+1) n!), integer a and b.
    let fact = |m: f64| (1..=m as usize).map(|i| i as f64).product::<f64>();
    let mut g = fact(a) * fact(b) / fact(a + b);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let jf = j as f64;
        out.push(2.0 * g / (2.0 * jf + a + b + 1.0));
        g *= (jf + a + 1.0) * (jf + b + 1.0) / ((jf + a + b + 1.0) * (jf + 1.0));
    }
    out
}

/// Orthonormal Jacobi-weighted basis for one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentBasis {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

impl ComponentBasis {
    /// Values and θ-derivatives of all basis functions at `θ`.
    pub fn eval(&self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (self.alpha, self.beta);
        let (sh, ch) = (0.5 * theta).sin_cos();
        let x = theta.cos();
        let (p, dpx) = jacobi(self.n, a, b, x);
        let norms = jacobi_norms(self.n, a, b);
        let wgt = sh.powf(a) * ch.powf(b);
        // d/dθ [s^a c^b] = s^a c^b (a/2 cot(θ/2) − b/2 tan(θ/2)), written without poles
        let dw = 0.5 * (a * pw(sh, a - 1.0) * ch.powf(b + 1.0) - b * sh.powf(a + 1.0) * pw(ch, b - 1.0));
        let dx = -theta.sin();
        let mut f = Vec::with_capacity(self.n);
        let mut df = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let s = 1.0 / norms[j].sqrt();
            f.push(wgt * p[j] * s);
            df.push((dw * p[j] + wgt * dpx[j] * dx) * s);
        }
        (f, df)
    }
}

fn pw(x: f64, e: f64) -> f64 {
    if e == -1.0 && x == 0.0 {
        0.0
    } else {
        x.powf(e)
    }
}

pub fn component_bases(k: f64, spec: &DiscretizationSpec) -> [ComponentBasis; 2] {
    let lo = (k - 0.5).abs();
    let hi = (k + 0.5).abs();
    [
        ComponentBasis { alpha: lo, beta: hi, n: spec.n },
        ComponentBasis { alpha: hi, beta: lo, n: spec.n },
    ]
}

struct Tables {
    w: Vec<f64>,
    theta: Vec<f64>,
    f: [Vec<Vec<f64>>; 2],
    df: [Vec<Vec<f64>>; 2],
}

fn tables(k: f64, spec: &DiscretizationSpec) -> Tables {
    let (theta, w) = gauss_legendre(spec.quadrature_order(k), 0.0, std::f64::consts::PI);
    let bases = component_bases(k, spec);
    let mut f = [Vec::new(), Vec::new()];
    let mut df = [Vec::new(), Vec::new()];
    for c in 0..2 {
        for &t in &theta {
            let (v, d) = bases[c].eval(t);
            f[c].push(v);
            df[c].push(d);
        }
    }
    Tables { w, theta, f, df }
}

/// Matrix elements `⟨φ¹_i, 𝓛₋ φ²_j⟩` and `⟨φ²_i, −𝓛₊ φ¹_j⟩` and the diagonal blocks.
fn blocks(mode: &ModeParams, params: &SpacetimeParams, t: &Tables, n: usize) -> [DMatrix<f64>; 4] {
    let mut h11 = DMatrix::zeros(n, n);
    let mut h22 = DMatrix::zeros(n, n);
    let mut h12 = DMatrix::zeros(n, n);
    let mut h21 = DMatrix::zeros(n, n);
    for (q, &th) in t.theta.iter().enumerate() {
        let (s, c) = th.sin_cos();
        let wq = t.w[q] * s;
        let amc = params.a * mode.mass * c;
        let w = params.a * mode.omega * s + mode.k / s;
        let hc = 0.5 * c / s;
        let (f1, f2) = (&t.f[0][q], &t.f[1][q]);
        let (d1, d2) = (&t.df[0][q], &t.df[1][q]);
        // 𝓛₋ φ²_j and −𝓛₊ φ¹_j
        let lm: Vec<f64> = (0..n).map(|j| d2[j] + (hc + w) * f2[j]).collect();
        let lp: Vec<f64> = (0..n).map(|j| -(d1[j] + (hc - w) * f1[j])).collect();
        for i in 0..n {
            let (a1, a2) = (wq * f1[i], wq * f2[i]);
            for j in 0..n {
                h11[(i, j)] -= a1 * amc * f1[j];
                h22[(i, j)] += a2 * amc * f2[j];
                h12[(i, j)] += a1 * lm[j];
                h21[(i, j)] += a2 * lp[j];
            }
        }
    }
    [h11, h12, h21, h22]
}

fn assemble(b: &[DMatrix<f64>; 4], n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&b[0]);
    h.view_mut((0, n), (n, n)).copy_from(&b[1]);
    h.view_mut((n, 0), (n, n)).copy_from(&b[2]);
    h.view_mut((n, n), (n, n)).copy_from(&b[3]);
    h
}

/// Galerkin matrix of `H` in the orthonormal basis, `2N × 2N`, all blocks by
/// quadrature (not symmetrized).
pub fn discretize_angular(mode: &ModeParams, params: &SpacetimeParams, spec: &DiscretizationSpec) -> Result<DMatrix<f64>> {
    mode.validate()?;
    let t = tables(mode.k, spec);
    Ok(assemble(&blocks(mode, params, &t, spec.n), spec.n))
}

/// Largest `|Im λ|` over the spectrum of the unsymmetrized Galerkin matrix.
pub fn realness_residual(h: &DMatrix<f64>) -> f64 {
    h.complex_eigenvalues().iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

/// `max |H − Hᵀ|`.
pub fn symmetry_defect(h: &DMatrix<f64>) -> f64 {
    (h - h.transpose()).amax()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularEigenpair {
    /// Signed branch index: `±1` for the eigenvalues closest to zero on each side.
    pub n: i32,
    pub xi: f64,
    pub basis: [ComponentBasis; 2],
    /// Expansion coefficients of `Y₁` and `Y₂`.
    pub coeffs: [Vec<f64>; 2],
}

impl AngularEigenpair {
    pub fn eval(&self, theta: f64) -> Sample2 {
        let mut out = Sample2 { f: V2::zeros(), df: V2::zeros() };
        for c in 0..2 {
            let (f, df) = self.basis[c].eval(theta);
            let v: f64 = f.iter().zip(&self.coeffs[c]).map(|(a, b)| a * b).sum();
            let d: f64 = df.iter().zip(&self.coeffs[c]).map(|(a, b)| a * b).sum();
            out.f[c] = C64::new(v, 0.0);
            out.df[c] = C64::new(d, 0.0);
        }
        out
    }

    /// `(θ, Y₁, Y₂)` on a grid.
    pub fn sample(&self, thetas: &[f64]) -> Vec<(f64, C64, C64)> {
        thetas
            .iter()
            .map(|&t| {
                let s = self.eval(t);
                (t, s.f[0], s.f[1])
            })
            .collect()
    }
}

/// `⟨Y, Z⟩ = ∫₀^π (Ȳ₁Z₁ + Ȳ₂Z₂) sinθ dθ` by Gauss-Legendre quadrature.
pub fn inner_product(y: &AngularEigenpair, z: &AngularEigenpair, nodes: usize) -> f64 {
    let (th, w) = gauss_legendre(nodes, 0.0, std::f64::consts::PI);
    th.iter()
        .zip(&w)
        .map(|(&t, &wi)| {
            let a = y.eval(t).f;
            let b = z.eval(t).f;
            wi * t.sin() * (a[0].conj() * b[0] + a[1].conj() * b[1]).re
        })
        .sum()
}

/// The `count` eigenvalues of smallest modulus, ascending, with eigenfunctions.
pub fn angular_eigenpairs(
    mode: &ModeParams,
    params: &SpacetimeParams,
    spec: &DiscretizationSpec,
    count: usize,
) -> Result<Vec<AngularEigenpair>> {
    mode.validate()?;
    if count > spec.n {
        return Err(Error::InvalidParameter(format!("count {count} exceeds basis size {}", spec.n)));
    }
    let n = spec.n;
    let t = tables(mode.k, spec);
    let mut b = blocks(mode, params, &t, n);
    // symmetric by construction; use the average to feed the symmetric solver
    b[1] = (&b[1] + b[2].transpose()) * 0.5;
    b[2] = b[1].transpose();
    b[0] = (&b[0] + b[0].transpose()) * 0.5;
    b[3] = (&b[3] + b[3].transpose()) * 0.5;
    let h = assemble(&b, n);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs()));
    let mut chosen: Vec<usize> = order[..count].to_vec();
    chosen.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    for pair in chosen.windows(2) {
        let gap = eig.eigenvalues[pair[1]] - eig.eigenvalues[pair[0]];
        if gap < DEGENERACY_TOL {
            return Err(Error::Degenerate(format!(
                "eigenvalues {} and {} coincide",
                eig.eigenvalues[pair[0]], eig.eigenvalues[pair[1]]
            )));
        }
    }

    let negatives = chosen.iter().filter(|&&i| eig.eigenvalues[i] < 0.0).count() as i32;
    let bases = component_bases(mode.k, spec);
    let mut out = Vec::with_capacity(count);
    for (rank, &i) in chosen.iter().enumerate() {
        let rank = rank as i32;
        let label = if rank < negatives { rank - negatives } else { rank - negatives + 1 };
        let v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let v = if pivot < 0.0 { -v } else { v };
        let v = &v / v.norm();
        out.push(AngularEigenpair {
            n: label,
            xi: eig.eigenvalues[i],
            basis: bases,
            coeffs: [v.rows(0, n).iter().copied().collect(), v.rows(n, n).iter().copied().collect()],
        });
    }
    Ok(out)
}

/// Follows the branch labelled `branch` at `omegas[0]` through the sweep by
/// nearest-value matching.
pub fn xi_continuation(
    mode: &ModeParams,
    params: &SpacetimeParams,
    omegas: &[f64],
    spec: &DiscretizationSpec,
    branch: i32,
) -> Result<Vec<f64>> {
    let count = (2 * branch.unsigned_abs() as usize + 4).min(spec.n);
    let mut out: Vec<f64> = Vec::with_capacity(omegas.len());
    for (idx, &omega) in omegas.iter().enumerate() {
        let m = ModeParams { omega, ..*mode };
        let pairs = angular_eigenpairs(&m, params, spec, count)?;
        let next = match out.last() {
            None => pairs
                .iter()
                .find(|p| p.n == branch)
                .map(|p| p.xi)
                .ok_or_else(|| Error::InvalidParameter(format!("no branch {branch} among {count} eigenvalues")))?,
            Some(&prev) => {
                let mut d: Vec<(f64, f64)> = pairs.iter().map(|p| ((p.xi - prev).abs(), p.xi)).collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0));
                let gap = (d[1].1 - d[0].1).abs();
                if d[0].0 >= 0.5 * gap {
                    return Err(Error::Degenerate(format!(
                        "branch tracking ambiguous at sample {idx} (ω = {omega}): step {} vs gap {gap}",
                        d[0].0
                    )));
                }
                d[0].1
            }
        };
        out.push(next);
    }
    Ok(out)
}
