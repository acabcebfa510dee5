//! Integration of `∂_{r⋆} X = U(r⋆) X` and the asymptotic analysis at
//! infinity and at the Cauchy horizon.
//!
//! The radial position is carried along as an extra state variable rather
//! than recovered by inverting `r⋆` at every evaluation: `t = ln(r − r₊)`
//! outside, `t = ln((r − r₋)/(r₊ − r))` between the horizons. Both obey a
//! smooth, bounded ODE and keep full relative precision near the horizon
//! the branch runs into.

pub mod horizon;
pub mod infinity;
pub mod integrator;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{tortoise_inverse_point, Branch, RadialPoint, SpacetimeParams};
use crate::separation::{potential_at, ModeParams, M2, V2};
pub use integrator::{Dop853, StepStats};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub r_star: f64,
    pub r: f64,
    pub offset: f64,
    /// One entry per integrated solution.
    pub x: Vec<V2>,
    /// `∫ Im tr U dr⋆` from the start of the trajectory.
    pub trace_phase: f64,
}

impl RadialSample {
    pub fn point(&self, branch: Branch) -> RadialPoint {
        RadialPoint { branch, r: self.r, offset: self.offset }
    }
}

/// What the stored solution vectors are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `X` itself.
    Lab,
    /// `g` with `X = D∞ W(u) g`, see [`infinity`].
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTrajectory {
    pub branch: Branch,
    pub frame: Frame,
    pub mode: ModeParams,
    pub params: SpacetimeParams,
    pub samples: Vec<RadialSample>,
    pub stats: StepStats,
    pub tol: f64,
}

impl RadialTrajectory {
    pub fn columns(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    /// Solution `column` at sample `i`, converted to `X`.
    pub fn lab_x(&self, i: usize, column: usize) -> Result<V2> {
        let s = &self.samples[i];
        match self.frame {
            Frame::Lab => Ok(s.x[column]),
            Frame::Asymptotic => infinity::from_asymptotic_frame(s.r_star, &s.x[column], &self.mode, &self.params),
        }
    }

    /// Rows `(r⋆, r, Re X₁, Im X₁, Re X₂, Im X₂)` for one solution.
    pub fn rows(&self, column: usize) -> Result<Vec<[f64; 6]>> {
        (0..self.samples.len())
            .map(|i| {
                let s = &self.samples[i];
                let x = self.lab_x(i, column)?;
                Ok([s.r_star, s.r, x[0].re, x[0].im, x[1].re, x[1].im])
            })
            .collect()
    }
}

/// Radial state variable for a point.
pub fn radial_variable(point: &RadialPoint, params: &SpacetimeParams) -> f64 {
    let l = params.horizons().width();
    match point.branch {
        Branch::Exterior => point.offset.ln(),
        Branch::Interior => point.offset.ln() - (l - point.offset).ln(),
    }
}

/// Inverse of [`radial_variable`].
pub fn point_from_variable(t: f64, branch: Branch, params: &SpacetimeParams) -> RadialPoint {
    let l = params.horizons().width();
    let offset = match branch {
        Branch::Exterior => t.exp(),
        Branch::Interior => l / (1.0 + (-t).exp()),
    };
    RadialPoint::from_offset(branch, offset, params)
}

/// `dt/dr⋆`.
fn radial_variable_rate(point: &RadialPoint, params: &SpacetimeParams) -> f64 {
    let l = params.horizons().width();
    let ra = point.r * point.r + params.a * params.a;
    match point.branch {
        Branch::Exterior => (point.offset + l) / ra,
        Branch::Interior => -l / ra,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { tol: DEFAULT_TOL, max_steps: 50_000_000 }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegrateOptions { tol, ..Default::default() }
    }

    fn solver(&self, components: usize) -> Result<Dop853> {
        if !(MIN_TOL..=MAX_TOL).contains(&self.tol) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {} outside [{MIN_TOL:e}, {MAX_TOL:e}]",
                self.tol
            )));
        }
        let mut s = Dop853::new(self.tol, 1e-2 * self.tol);
        s.max_steps = self.max_steps;
        s.error_components = Some(components);
        Ok(s)
    }
}

/// Integrates the radial system for every column of `x0` from `start`
/// through the monotone list `outputs`, all on one branch.
pub fn integrate(
    mode: &ModeParams,
    params: &SpacetimeParams,
    branch: Branch,
    start: f64,
    x0: &[V2],
    outputs: &[f64],
    opts: &IntegrateOptions,
) -> Result<RadialTrajectory> {
    integrate_with(mode, params, branch, start, x0, outputs, opts, |_, p| potential_at(p, mode, params))
}

/// As [`integrate`] with an arbitrary potential `U(r⋆, point)`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_with<P>(
    mode: &ModeParams,
    params: &SpacetimeParams,
    branch: Branch,
    start: f64,
    x0: &[V2],
    outputs: &[f64],
    opts: &IntegrateOptions,
    potential: P,
) -> Result<RadialTrajectory>
where
    P: Fn(f64, &RadialPoint) -> M2,
{
    mode.validate()?;
    params.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidParameter("no initial data".into()));
    }
    let p0 = tortoise_inverse_point(start, branch, params)?;
    let cols = x0.len();
    let n = 2 + 4 * cols;
    let mut y0 = vec![0.0; n];
    y0[0] = radial_variable(&p0, params);
    for (c, x) in x0.iter().enumerate() {
        y0[1 + 4 * c..5 + 4 * c].copy_from_slice(&[x[0].re, x[0].im, x[1].re, x[1].im]);
    }
    let solver = opts.solver(n - 1)?;

    let rhs = |r_star: f64, y: &[f64], dy: &mut [f64]| {
        let p = point_from_variable(y[0], branch, params);
        let u = potential(r_star, &p);
        dy[0] = radial_variable_rate(&p, params);
        for c in 0..cols {
            let o = 1 + 4 * c;
            let x = V2::new(C64::new(y[o], y[o + 1]), C64::new(y[o + 2], y[o + 3]));
            let d = u * x;
            dy[o] = d[0].re;
            dy[o + 1] = d[0].im;
            dy[o + 2] = d[1].re;
            dy[o + 3] = d[1].im;
        }
        dy[n - 1] = u.trace().im;
    };
    let (ys, stats) = solver.solve(rhs, start, &y0, outputs)?;

    let samples = ys
        .iter()
        .zip(outputs)
        .map(|(y, &u)| {
            let p = point_from_variable(y[0], branch, params);
            let x = (0..cols)
                .map(|c| {
                    let o = 1 + 4 * c;
                    V2::new(C64::new(y[o], y[o + 1]), C64::new(y[o + 2], y[o + 3]))
                })
                .collect();
            RadialSample { r_star: u, r: p.r, offset: p.offset, x, trace_phase: y[n - 1] }
        })
        .collect();
    Ok(RadialTrajectory { branch, frame: Frame::Lab, mode: *mode, params: *params, samples, stats, tol: opts.tol })
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![b],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` logarithmically spaced points from `a` to `b` inclusive (same sign).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.abs().ln(), b.abs().ln());
    let s = a.signum();
    let mut v: Vec<f64> = linspace(la, lb, n).into_iter().map(|x| s * x.exp()).collect();
    if n > 0 {
        v[0] = a;
        v[n - 1] = b;
    }
    v
}

/// Abel's identity: `det[X|Y] e^{−i∫Im tr U}` is constant (for the integrated
/// system, whichever frame it is in). Returns the largest
/// relative deviation from its initial value.
pub fn wronskian_drift(traj: &RadialTrajectory) -> Result<f64> {
    if traj.columns() < 2 {
        return Err(Error::InvalidParameter("Wronskian needs two solutions".into()));
    }
    let w = |s: &RadialSample| {
        let det = s.x[0][0] * s.x[1][1] - s.x[0][1] * s.x[1][0];
        det * C64::from_polar(1.0, -s.trace_phase)
    };
    let w0 = w(&traj.samples[0]);
    if w0.norm() == 0.0 {
        return Err(Error::Degenerate("initial solutions are linearly dependent".into()));
    }
    Ok(traj.samples.iter().map(|s| (w(s) / w0 - 1.0).norm()).fold(0.0, f64::max))
}

/// `∫ tr U dr⋆ = 2iω(r⋆ − r) + 2ikφ̃(r)` up to a constant; the imaginary part.
pub fn trace_integral(r_star: f64, point: &RadialPoint, mode: &ModeParams, params: &SpacetimeParams) -> f64 {
    2.0 * mode.omega * (r_star - point.r) + 2.0 * mode.k * point.azimuthal_shift(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tortoise;
    use crate::separation::potential_at_infinity;

    fn kn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6, 0.3).unwrap()
    }

    fn mode() -> ModeParams {
        ModeParams::new(0.9, 0.5, 0.4, 1.1).unwrap()
    }

    fn c(a: f64, b: f64) -> C64 {
        C64::new(a, b)
    }

    fn expm2(m: &M2, s: f64) -> M2 {
        // e^{sM} for traceless-plus-scalar 2×2: e^{s tr/2} (cosh(sμ) I + sinh(sμ)/μ (M − tr/2 I))
        let half = m.trace() / 2.0;
        let n = m - M2::identity() * half;
        let mu = (-(n.determinant())).sqrt();
        let (ch, sh_over) = if mu.norm() < 1e-14 {
            (c(1.0, 0.0), c(s, 0.0))
        } else {
            ((mu * s).cosh(), (mu * s).sinh() / mu)
        };
        (M2::identity() * ch + n * sh_over) * (half * s).exp()
    }

    #[test]
    fn radial_variable_round_trip() {
        let p = kn();
        for r in [0.3, 1.0, 1.7, 2.0, 50.0] {
            let pt = RadialPoint::from_r(r, &p).unwrap();
            let back = point_from_variable(radial_variable(&pt, &p), pt.branch, &p);
            assert!((back.r - r).abs() < 1e-13 * r.max(1.0));
        }
    }

    #[test]
    fn radial_variable_rate_matches_tortoise() {
        let p = kn();
        for r in [0.5, 1.2, 3.0, 40.0] {
            let pt = RadialPoint::from_r(r, &p).unwrap();
            let h = 1e-6;
            let u = tortoise(r, &p).unwrap();
            let tp = radial_variable(&tortoise_inverse_point(u + h, pt.branch, &p).unwrap(), &p);
            let tm = radial_variable(&tortoise_inverse_point(u - h, pt.branch, &p).unwrap(), &p);
            let fd = (tp - tm) / (2.0 * h);
            assert!((fd - radial_variable_rate(&pt, &p)).abs() < 1e-6, "r={r}");
        }
    }

    #[test]
    fn constant_potential_exponential() {
        let p = kn();
        let m = mode();
        let tol = 1e-11;
        let uinf = potential_at_infinity(&m);
        let x0 = V2::new(c(1.0, 0.2), c(-0.3, 0.5));
        let outs = linspace(10.0, 60.0, 11);
        let traj = integrate_with(&m, &p, Branch::Exterior, 10.0, &[x0], &outs, &IntegrateOptions::with_tol(tol), |_, _| uinf)
            .unwrap();
        for s in &traj.samples {
            let exact = expm2(&uinf, s.r_star - 10.0) * x0;
            assert!((s.x[0] - exact).norm() < 10.0 * tol * x0.norm(), "{}", (s.x[0] - exact).norm());
        }
    }

    #[test]
    fn superposition() {
        let p = kn();
        let m = mode();
        let tol = 1e-10;
        let x0 = V2::new(c(1.0, 0.0), c(0.2, -0.4));
        let k = c(2.0, 1.0);
        let outs = linspace(5.0, 200.0, 40);
        let o = IntegrateOptions::with_tol(tol);
        let a = integrate(&m, &p, Branch::Exterior, 5.0, &[x0], &outs, &o).unwrap();
        let b = integrate(&m, &p, Branch::Exterior, 5.0, &[x0 * k], &outs, &o).unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.x[0] * k - sb.x[0]).norm() < 10.0 * tol * (sb.x[0].norm()));
        }
    }

    #[test]
    fn trace_phase_matches_closed_form() {
        let p = kn();
        let m = mode();
        for (branch, a, b) in [(Branch::Exterior, -5.0, 30.0), (Branch::Interior, -2.0, 6.0)] {
            let outs = linspace(a, b, 20);
            let x0 = [V2::new(c(1.0, 0.0), c(0.0, 0.0)), V2::new(c(0.0, 0.0), c(1.0, 0.0))];
            let traj = integrate(&m, &p, branch, a, &x0, &outs, &IntegrateOptions::with_tol(1e-12)).unwrap();
            let s0 = &traj.samples[0];
            let i0 = trace_integral(s0.r_star, &s0.point(branch), &m, &p);
            for s in &traj.samples {
                let closed = trace_integral(s.r_star, &s.point(branch), &m, &p) - i0;
                assert!((s.trace_phase - closed).abs() < 1e-9, "{branch:?} {}", s.r_star);
            }
            assert!(wronskian_drift(&traj).unwrap() < 1e-10);
        }
    }

    #[test]
    fn tracked_radius_stays_on_tortoise_curve() {
        let p = kn();
        let m = mode();
        let outs = linspace(-20.0, 100.0, 13);
        let traj = integrate(&m, &p, Branch::Exterior, -20.0, &[V2::new(c(1.0, 0.0), c(1.0, 0.0))], &outs, &IntegrateOptions::default())
            .unwrap();
        for s in &traj.samples {
            let back = tortoise(s.r, &p).unwrap();
            assert!((back - s.r_star).abs() < 1e-7, "{} {}", s.r_star, back);
        }
    }

    #[test]
    fn tolerance_range_enforced() {
        let p = kn();
        let x0 = [V2::new(c(1.0, 0.0), c(0.0, 0.0))];
        assert!(integrate(&mode(), &p, Branch::Exterior, 0.0, &x0, &[1.0], &IntegrateOptions::with_tol(1e-3)).is_err());
        assert!(integrate(&mode(), &p, Branch::Exterior, 0.0, &x0, &[1.0], &IntegrateOptions::with_tol(1e-15)).is_err());
    }

    #[test]
    fn spacing_helpers() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        let l = logspace(1e3, 1e6, 4);
        assert_eq!(l[0], 1e3);
        assert_eq!(l[3], 1e6);
        assert!((l[1] - 1e4).abs() < 1e-8);
    }
}
