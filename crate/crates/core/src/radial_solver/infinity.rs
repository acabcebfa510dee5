//! Asymptotics of radial solutions as `r⋆ → ∞`.
//!
//! A solution is written `X = D(u) W(u) f(u)` with `D` diagonalizing `U(u)`
//! and `W = diag(e^{iΦ₊}, e^{−iΦ₋})` carrying the oscillation together with
//! its logarithmic correction. `f` then tends to a constant like `1/u`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{integrate_with, logspace, wronskian_drift, Frame, IntegrateOptions, RadialTrajectory};
use crate::error::{Error, Result};
use crate::geometry::{tortoise_inverse_point, Branch, RadialPoint, SpacetimeParams};
use crate::separation::{potential_at, ModeParams, M2, V2};

const I: C64 = C64::new(0.0, 1.0);

/// Roots `w₁, w₂ = −w₁` of `w² = ω² − m²`, with `w₁` in the closed quarter
/// plane spanned by `ℝ₊` and `iℝ₊`.
pub fn w_roots(omega: f64, mass: f64) -> Result<(C64, C64)> {
    let d = omega * omega - mass * mass;
    if d == 0.0 {
        return Err(Error::Degenerate(format!("threshold ω² = m² (ω = {omega}, m = {mass})")));
    }
    let w1 = if d > 0.0 { C64::new(d.sqrt(), 0.0) } else { C64::new(0.0, (-d).sqrt()) };
    Ok((w1, -w1))
}

/// `Θ = ¼ ln((ω − m)/(ω + m))`, principal branch. Complex when `|ω| < m`.
pub fn theta_boost(omega: f64, mass: f64) -> Result<C64> {
    if omega == mass || omega == -mass {
        return Err(Error::Degenerate(format!("boost parameter singular at ω = ±m = {omega}")));
    }
    Ok(C64::new((omega - mass) / (omega + mass), 0.0).ln() / 4.0)
}

/// `[[cosh Θ, −sinh Θ], [−sinh Θ, cosh Θ]]`, unit determinant.
pub fn boost_matrix(theta: C64) -> M2 {
    let (c, s) = (theta.cosh(), theta.sinh());
    M2::new(c, -s, -s, c)
}

/// Limit diagonalizer of `U∞`; its columns are eigenvectors for `(i w₁, −i w₁)`.
pub fn infinity_diagonalizer(omega: f64, mass: f64) -> Result<M2> {
    let b = boost_matrix(theta_boost(omega, mass)?);
    // For ω < −m the principal log puts the boost eigenvectors in the
    // opposite order.
    Ok(if omega < -mass { M2::new(b[(0, 1)], b[(0, 0)], b[(1, 1)], b[(1, 0)]) } else { b })
}

/// How the phase matrix `W` is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModel {
    /// `Φ± = ±w u ± M(2ω ± m²/w) ln u`, as derived from the eigenvalue expansion.
    Full,
    /// The logarithmic correction dropped: `Φ± = ±w u`.
    NoLog,
}

/// `Φ₊ = w₁u + M(2ω + m²/w₁) ln u` and `Φ₋ = w₁u − M(2ω − m²/w₁) ln u`,
/// so that `e^{iΦ₊}` and `e^{−iΦ₋}` follow the two eigenvalues.
pub fn asymptotic_phases(u: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<(C64, C64)> {
    phases(u, mode, params, PhaseModel::Full)
}

pub fn phases(u: f64, mode: &ModeParams, params: &SpacetimeParams, model: PhaseModel) -> Result<(C64, C64)> {
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::InvalidParameter(format!("asymptotic phases need u > 0, got {u}")));
    }
    let (w, _) = w_roots(mode.omega, mode.mass)?;
    let lin = w * u;
    if model == PhaseModel::NoLog {
        return Ok((lin, lin));
    }
    let (c1, c2) = expansion_coefficients(&w, mode, params);
    // λ₁ = iw + c₁/u, λ₂ = −iw + c₂/u; e^{∫λ₁} = e^{iΦ₊}, e^{∫λ₂} = e^{−iΦ₋}.
    let l = u.ln();
    Ok((lin - I * c1 * l, lin + I * c2 * l))
}

/// `iM(2ω ± m²/w₁)`, the `1/u` coefficients of the two eigenvalues.
fn expansion_coefficients(w: &C64, mode: &ModeParams, params: &SpacetimeParams) -> (C64, C64) {
    let m2w = mode.mass * mode.mass / w;
    let two_omega = C64::new(2.0 * mode.omega, 0.0);
    (I * params.mass * (two_omega + m2w), I * params.mass * (two_omega - m2w))
}

/// Eigenvalue expansion `λ₁,₂ ≈ ±i w₁ + c₁,₂/u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenExpansion {
    pub leading: [C64; 2],
    pub first_order: [C64; 2],
}

impl EigenExpansion {
    pub fn at(&self, u: f64) -> [C64; 2] {
        [self.leading[0] + self.first_order[0] / u, self.leading[1] + self.first_order[1] / u]
    }
}

pub fn eigen_expansion(mode: &ModeParams, params: &SpacetimeParams) -> Result<EigenExpansion> {
    let (w, _) = w_roots(mode.omega, mode.mass)?;
    let (c1, c2) = expansion_coefficients(&w, mode, params);
    Ok(EigenExpansion { leading: [I * w, -I * w], first_order: [c1, c2] })
}

/// Eigenvalues of a 2×2 matrix, unordered.
pub fn eigenvalues2(m: &M2) -> [C64; 2] {
    let half = m.trace() / 2.0;
    let disc = (half * half - m.determinant()).sqrt();
    [half + disc, half - disc]
}

/// An eigenvector of `m` for eigenvalue `l`, picking the better-conditioned row.
fn eigenvector2(m: &M2, l: C64) -> V2 {
    let (a, b, c, d) = (m[(0, 0)] - l, m[(0, 1)], m[(1, 0)], m[(1, 1)] - l);
    if a.norm() + b.norm() >= c.norm() + d.norm() {
        V2::new(b, -a)
    } else {
        V2::new(-d, c)
    }
}

/// Diagonalizer of `U(u)` on the exterior branch: columns are eigenvectors
/// for the eigenvalues continuing `±i w₁`, each scaled so that the component
/// where `D∞` is largest equals the corresponding `D∞` entry.
pub fn diagonalizer(u: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<(M2, [C64; 2])> {
    let pt = tortoise_inverse_point(u, Branch::Exterior, params)?;
    diagonalize(&potential_at(&pt, mode, params), u, mode, params)
}

fn diagonalize(pot: &M2, u: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<(M2, [C64; 2])> {
    let dinf = infinity_diagonalizer(mode.omega, mode.mass)?;
    let target = eigen_expansion(mode, params)?.at(u);
    let ev = eigenvalues2(pot);
    let direct = (ev[0] - target[0]).norm() + (ev[1] - target[1]).norm();
    let swapped = (ev[1] - target[0]).norm() + (ev[0] - target[1]).norm();
    let lam = if direct <= swapped { ev } else { [ev[1], ev[0]] };
    if (lam[0] - lam[1]).norm() < 1e-12 * (lam[0].norm() + lam[1].norm()) {
        return Err(Error::Degenerate("coincident eigenvalues of U".into()));
    }
    let mut d = M2::zeros();
    for j in 0..2 {
        let v = eigenvector2(pot, lam[j]);
        let i = if dinf[(0, j)].norm() >= dinf[(1, j)].norm() { 0 } else { 1 };
        if v[i].norm() == 0.0 {
            return Err(Error::Degenerate("eigenvector gauge component vanishes".into()));
        }
        let col = v * (dinf[(i, j)] / v[i]);
        d.set_column(j, &col);
    }
    Ok((d, lam))
}

/// `(φ₁, φ₂)` with `W = diag(e^{iφ₁}, e^{iφ₂})`, i.e. `(Φ₊, −Φ₋)`.
fn phase_vector(u: f64, mode: &ModeParams, params: &SpacetimeParams, model: PhaseModel) -> Result<[C64; 2]> {
    let (pp, pm) = phases(u, mode, params, model)?;
    Ok([pp, -pm])
}

fn phase_matrix(u: f64, mode: &ModeParams, params: &SpacetimeParams, model: PhaseModel) -> Result<M2> {
    let p = phase_vector(u, mode, params, model)?;
    Ok(M2::from_diagonal(&V2::new((I * p[0]).exp(), (I * p[1]).exp())))
}

/// `diag(e^{−iφa}) m diag(e^{iφb})`, forming phase differences before
/// exponentiating so that the large common `w u` cancels exactly.
fn conjugate(m: &M2, left: &[C64; 2], right: &[C64; 2]) -> M2 {
    M2::from_fn(|j, k| m[(j, k)] * (I * (right[k] - left[j])).exp())
}

/// `X(u₀) = D(u₀) W(u₀) f₀`.
pub fn asymptotic_initial_data(u0: f64, f0: &V2, mode: &ModeParams, params: &SpacetimeParams) -> Result<V2> {
    let (d, _) = diagonalizer(u0, mode, params)?;
    Ok(d * phase_matrix(u0, mode, params, PhaseModel::Full)? * f0)
}

/// `f = W⁻¹ D⁻¹ X` at one sample.
pub fn recover_amplitudes(
    u: f64,
    x: &V2,
    mode: &ModeParams,
    params: &SpacetimeParams,
    model: PhaseModel,
) -> Result<V2> {
    let (d, _) = diagonalizer(u, mode, params)?;
    let dw = d * phase_matrix(u, mode, params, model)?;
    dw.lu().solve(x).ok_or_else(|| Error::Degenerate("singular diagonalizer".into()))
}

/// `X = D∞ W(u) g`.
pub fn from_asymptotic_frame(u: f64, g: &V2, mode: &ModeParams, params: &SpacetimeParams) -> Result<V2> {
    Ok(infinity_diagonalizer(mode.omega, mode.mass)? * phase_matrix(u, mode, params, PhaseModel::Full)? * g)
}

/// Potential of the system satisfied by `g = W⁻¹ D∞⁻¹ X`:
/// `W⁻¹ (D∞⁻¹ U D∞ − diag(λ₁, λ₂)) W` with the expanded eigenvalues.
/// It is `O(1/u)`, so `g` varies slowly and the fast phase is handled exactly.
pub struct FramePotential {
    dinf: M2,
    dinf_inv: M2,
    w: C64,
    c: [C64; 2],
    mode: ModeParams,
    params: SpacetimeParams,
}

impl FramePotential {
    pub fn new(mode: &ModeParams, params: &SpacetimeParams) -> Result<Self> {
        let dinf = infinity_diagonalizer(mode.omega, mode.mass)?;
        let dinf_inv = dinf.try_inverse().ok_or_else(|| Error::Degenerate("singular boost".into()))?;
        let (w, _) = w_roots(mode.omega, mode.mass)?;
        let (c1, c2) = expansion_coefficients(&w, mode, params);
        Ok(FramePotential { dinf, dinf_inv, w, c: [c1, c2], mode: *mode, params: *params })
    }

    pub fn at(&self, u: f64, point: &RadialPoint) -> M2 {
        let mut a = self.dinf_inv * potential_at(point, &self.mode, &self.params) * self.dinf;
        a[(0, 0)] -= I * self.w + self.c[0] / u;
        a[(1, 1)] -= -I * self.w + self.c[1] / u;
        // φ₂ − φ₁ = −(Φ₊ + Φ₋) = −2wu + i(c₁ − c₂) ln u
        let e = (I * (-2.0 * self.w * u + I * (self.c[0] - self.c[1]) * u.ln())).exp();
        a[(0, 1)] *= e;
        a[(1, 0)] /= e;
        a
    }
}

/// Integrates in the asymptotic frame on the exterior branch. `g0` are the
/// frame amplitudes at `start`; samples hold `g`.
pub fn integrate_asymptotic(
    mode: &ModeParams,
    params: &SpacetimeParams,
    start: f64,
    g0: &[V2],
    outputs: &[f64],
    opts: &IntegrateOptions,
) -> Result<RadialTrajectory> {
    if start <= 0.0 || outputs.iter().any(|&u| u <= 0.0) {
        return Err(Error::InvalidParameter("asymptotic frame needs r* > 0".into()));
    }
    let fp = FramePotential::new(mode, params)?;
    let mut traj = integrate_with(mode, params, Branch::Exterior, start, g0, outputs, opts, |u, p| fp.at(u, p))?;
    traj.frame = Frame::Asymptotic;
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityAsymptotics {
    pub w1: C64,
    pub w2: C64,
    pub theta: C64,
    pub f_inf: [C64; 2],
    /// `max u ‖X − D W f∞‖` over the fit window.
    pub decay_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityFit {
    pub asymptotics: InfinityAsymptotics,
    pub phase_model: PhaseModel,
    /// Log-log slope of the residual against `u`.
    pub slope: f64,
    pub window: [f64; 2],
    /// Relative variation of `‖f‖` over the last decade of `u`.
    pub tail_variation: f64,
    /// `(u, residual)` pairs used for the slope.
    pub residuals: Vec<(f64, f64)>,
}

/// Least-squares fit of `y = a + b/u + c/u²` to complex data; returns `a`.
fn fit_constant(us: &[f64], ys: &[C64]) -> Result<C64> {
    if us.len() < 4 {
        return Err(Error::InvalidParameter("too few samples for the limit fit".into()));
    }
    let scale = us.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = us.len();
    let svd = DMatrix::from_fn(n, 3, |i, j| (scale / us[i]).powi(j as i32)).svd(true, true);
    let solve = |v: DVector<f64>| -> Result<f64> {
        let sol = svd.solve(&v, 1e-14).map_err(|e| Error::Degenerate(e.to_string()))?;
        Ok(sol[0])
    };
    let re = solve(DVector::from_iterator(n, ys.iter().map(|y| y.re)))?;
    let im = solve(DVector::from_iterator(n, ys.iter().map(|y| y.im)))?;
    Ok(C64::new(re, im))
}

/// Ordinary least-squares slope and intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits the large-`u` asymptotics of the first solution in an exterior
/// trajectory (either frame). `f∞` is the constant term of an `a + b/u + c/u²`
/// fit over the last decade; the residual slope is taken over `window`.
pub fn fit_infinity(traj: &RadialTrajectory, window: [f64; 2], model: PhaseModel) -> Result<InfinityFit> {
    let (mode, params) = (&traj.mode, &traj.params);
    if traj.branch != Branch::Exterior {
        return Err(Error::InvalidParameter("infinity fit needs an exterior trajectory".into()));
    }
    let u_max = traj.samples.iter().map(|s| s.r_star).fold(f64::NEG_INFINITY, f64::max);
    if u_max < 1e4 {
        return Err(Error::InvalidParameter(format!("trajectory must reach r* ≥ 1e4, reaches {u_max}")));
    }
    let (w1, w2) = w_roots(mode.omega, mode.mass)?;
    let theta = theta_boost(mode.omega, mode.mass)?;
    let dinf = infinity_diagonalizer(mode.omega, mode.mass)?;
    let anchor = traj.samples.iter().max_by(|a, b| a.r_star.total_cmp(&b.r_star)).unwrap();
    if anchor.x[0].norm() < 1e-14 {
        return Err(Error::Degenerate("trivial solution".into()));
    }

    let mut us = Vec::new();
    let mut fs = Vec::new();
    // D W per sample, to map f differences back to X.
    let mut dws = Vec::new();
    for s in traj.samples.iter().filter(|s| s.r_star > 0.0) {
        let u = s.r_star;
        let pt = s.point(Branch::Exterior);
        let (d, _) = diagonalize(&potential_at(&pt, mode, params), u, mode, params)?;
        let d_inv = d.try_inverse().ok_or_else(|| Error::Degenerate("singular diagonalizer".into()))?;
        let pa = phase_vector(u, mode, params, model)?;
        let f = match traj.frame {
            Frame::Lab => {
                let wa_inv = M2::from_diagonal(&V2::new((-I * pa[0]).exp(), (-I * pa[1]).exp()));
                wa_inv * d_inv * s.x[0]
            }
            Frame::Asymptotic => {
                let pf = phase_vector(u, mode, params, PhaseModel::Full)?;
                conjugate(&(d_inv * dinf), &pa, &pf) * s.x[0]
            }
        };
        us.push(u);
        fs.push(f);
        dws.push((d, pa));
    }

    let tail: Vec<usize> = (0..us.len()).filter(|&i| us[i] >= u_max / 10.0).collect();
    let tu: Vec<f64> = tail.iter().map(|&i| us[i]).collect();
    let mut f_inf = [C64::new(0.0, 0.0); 2];
    for (c, slot) in f_inf.iter_mut().enumerate() {
        let ys: Vec<C64> = tail.iter().map(|&i| fs[i][c]).collect();
        *slot = fit_constant(&tu, &ys)?;
    }
    let finf = V2::new(f_inf[0], f_inf[1]);

    let norms: Vec<f64> = tail.iter().map(|&i| fs[i].norm()).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let tail_variation = (hi - lo) / finf.norm().max(f64::MIN_POSITIVE);

    // ‖X − D W f∞‖ = ‖D W (f − f∞)‖.
    let residuals: Vec<(f64, f64)> = (0..us.len())
        .filter(|&i| us[i] >= window[0] && us[i] <= window[1])
        .map(|i| {
            let (d, pa) = &dws[i];
            let df = fs[i] - finf;
            let wdf = V2::new(df[0] * (I * pa[0]).exp(), df[1] * (I * pa[1]).exp());
            (us[i], (d * wdf).norm())
        })
        .collect();
    if residuals.len() < 3 {
        return Err(Error::InvalidParameter("too few samples in the residual window".into()));
    }
    let lx: Vec<f64> = residuals.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = residuals.iter().map(|p| p.1.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    let decay_constant = residuals.iter().map(|(u, r)| u * r).fold(0.0, f64::max);

    Ok(InfinityFit {
        asymptotics: InfinityAsymptotics { w1, w2, theta, f_inf, decay_constant },
        phase_model: model,
        slope,
        window,
        tail_variation,
        residuals,
    })
}

/// Settings for the standard infinity experiment: start from asymptotic data
/// `f₀` at `u_start` and integrate inward to `u_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityRun {
    pub u_start: f64,
    pub u_end: f64,
    pub samples: usize,
    pub f0: [C64; 2],
    pub tol: f64,
}

impl Default for InfinityRun {
    fn default() -> Self {
        InfinityRun {
            u_start: 1e6,
            u_end: 1e3,
            samples: 301,
            f0: [C64::new(1.0, 0.0), C64::new(0.5, 0.25)],
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityReport {
    pub mode: ModeParams,
    pub params: SpacetimeParams,
    pub run: InfinityRun,
    pub fit: InfinityFit,
    pub ablated: InfinityFit,
    pub wronskian_drift: f64,
    pub trajectory: RadialTrajectory,
}

/// Integrates from asymptotic data (plus a second, independent solution for
/// the Wronskian check) and fits both the full and the log-free phase model.
pub fn infinity_experiment(mode: &ModeParams, params: &SpacetimeParams, run: &InfinityRun) -> Result<InfinityReport> {
    if mode.omega.abs() <= mode.mass {
        return Err(Error::InvalidParameter(format!(
            "infinity fit needs |ω| > m (ω = {}, m = {})",
            mode.omega, mode.mass
        )));
    }
    if !(run.u_end > 0.0 && run.u_start > run.u_end) {
        return Err(Error::InvalidParameter("infinity run needs u_start > u_end > 0".into()));
    }
    let u0 = run.u_start;
    let (d, _) = diagonalizer(u0, mode, params)?;
    let dinf_inv = infinity_diagonalizer(mode.omega, mode.mass)?
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular boost".into()))?;
    let pf = phase_vector(u0, mode, params, PhaseModel::Full)?;
    let to_frame = conjugate(&(dinf_inv * d), &pf, &pf);
    let f0 = V2::new(run.f0[0], run.f0[1]);
    let f1 = V2::new(-run.f0[1].conj(), run.f0[0].conj());
    let g0 = [to_frame * f0, to_frame * f1];

    let mut outs = logspace(run.u_start, run.u_end, run.samples);
    outs.dedup();
    let traj = integrate_asymptotic(mode, params, u0, &g0, &outs, &IntegrateOptions::with_tol(run.tol))?;
    let window = [run.u_end, run.u_start];
    let fit = fit_infinity(&traj, window, PhaseModel::Full)?;
    let ablated = fit_infinity(&traj, window, PhaseModel::NoLog)?;
    let drift = wronskian_drift(&traj)?;
    Ok(InfinityReport { mode: *mode, params: *params, run: *run, fit, ablated, wronskian_drift: drift, trajectory: traj })
}

/// Least-squares slope of `ln ‖X‖` against `r⋆` for one solution.
pub fn growth_rate(traj: &RadialTrajectory, column: usize) -> Result<f64> {
    let x: Vec<f64> = traj.samples.iter().map(|s| s.r_star).collect();
    let y = (0..traj.samples.len())
        .map(|i| Ok(traj.lab_x(i, column)?.norm().ln()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(linear_fit(&x, &y).0)
}
