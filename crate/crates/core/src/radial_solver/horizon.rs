//! Asymptotics of interior solutions as `r⋆ → +∞`, i.e. `r → r₋`.
//!
//! With `h = (X₁ e^{−2i(ω + kΩ₋)u}, X₂)` the radial system becomes
//! `∂u h = B(u) h` where every entry of `B` vanishes at the Cauchy horizon,
//! the off-diagonal ones like `√|Δ| ∼ e^{−αu}`. Hence `h` has a limit.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::infinity::linear_fit;
use super::{integrate, linspace, wronskian_drift, IntegrateOptions, RadialSample, RadialTrajectory};
use crate::error::{Error, Result};
use crate::geometry::{tortoise_inverse_point, Branch, RadialPoint, SpacetimeParams};
use crate::separation::{ModeParams, M2, V2};

const I: C64 = C64::new(0.0, 1.0);

/// `Ω₋ = a/(r₋² + a²)`, the angular velocity of the inner horizon.
pub fn omega_minus(params: &SpacetimeParams) -> f64 {
    let rm = params.horizons().r_minus;
    params.a / (rm * rm + params.a * params.a)
}

/// `α = ½(r₊ − r₋)/(r₋² + a²)`.
pub fn alpha(params: &SpacetimeParams) -> f64 {
    let h = params.horizons();
    0.5 * h.width() / (h.r_minus * h.r_minus + params.a * params.a)
}

/// The phase `2(ω + kΩ₋)u` stripped from `X₁`.
pub fn strip_phase(u: f64, mode: &ModeParams, params: &SpacetimeParams) -> f64 {
    2.0 * (mode.omega + mode.k * omega_minus(params)) * u
}

/// `B(u)` at an interior point:
/// `(r²+a²)⁻¹ [[−i(ωΔ + 2k(Ω₋(r²+a²) − a)), (ξ − imr)√|Δ| e^{−iφ}],
///             [−(ξ + imr)√|Δ| e^{iφ}, −iωΔ]]`, `φ = 2(ω + kΩ₋)u`.
pub fn horizon_b(u: f64, point: &RadialPoint, mode: &ModeParams, params: &SpacetimeParams) -> Result<M2> {
    if point.branch != Branch::Interior {
        return Err(Error::InvalidParameter("B is defined between the horizons only".into()));
    }
    let a = params.a;
    let r = point.r;
    let ra = r * r + a * a;
    let delta = point.delta(params);
    let sq = delta.abs().sqrt();
    let (_, dm) = point.horizon_distances(params);
    // Ω₋(r² + a²) − a = a (r² − r₋²)/(r₋² + a²), written to keep precision near r₋.
    let rm = params.horizons().r_minus;
    let kterm = a * dm * (r + rm) / (rm * rm + a * a);
    let e = C64::from_polar(1.0, strip_phase(u, mode, params));
    let mr = mode.mass * r;
    Ok(M2::new(
        -I * (mode.omega * delta + 2.0 * mode.k * kterm),
        C64::new(mode.xi, -mr) * sq * e.conj(),
        -C64::new(mode.xi, mr) * sq * e,
        -I * mode.omega * delta,
    ) / C64::new(ra, 0.0))
}

pub fn horizon_b_at(u: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<M2> {
    let pt = tortoise_inverse_point(u, Branch::Interior, params)?;
    horizon_b(u, &pt, mode, params)
}

/// `h` for one solution at one sample.
pub fn stripped(sample: &RadialSample, column: usize, mode: &ModeParams, params: &SpacetimeParams) -> V2 {
    let x = sample.x[column];
    V2::new(x[0] * C64::from_polar(1.0, -strip_phase(sample.r_star, mode, params)), x[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonAsymptotics {
    pub h: [C64; 2],
    pub alpha: f64,
    pub omega_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonFit {
    pub asymptotics: HorizonAsymptotics,
    /// Fitted exponential rate of `‖h(u) − h∞‖`.
    pub rate: f64,
    /// `u` range used for the rate fit.
    pub window: [f64; 2],
    /// Fitted exponential rate of the tail differences `‖h(u) − h(u + lag)‖`.
    pub cauchy_rate: f64,
    pub cauchy_lag: f64,
    /// Largest imaginary part of `h∞` relative to its norm.
    pub imag_fraction: f64,
}

impl HorizonFit {
    pub fn rate_error(&self) -> f64 {
        (self.rate / self.asymptotics.alpha - 1.0).abs()
    }

    pub fn cauchy_rate_error(&self) -> f64 {
        (self.cauchy_rate / self.asymptotics.alpha - 1.0).abs()
    }
}

/// Relative error band used for the decay-rate fit: small enough to be in the
/// asymptotic regime, large enough to sit well above integration error.
pub const FIT_BAND: [f64; 2] = [1e-9, 1e-3];

/// Fits the Cauchy-horizon limit of solution `column` of an interior
/// trajectory that increases in `r⋆`.
pub fn fit_horizon(traj: &RadialTrajectory, column: usize, cauchy_lag: f64) -> Result<HorizonFit> {
    let (mode, params) = (&traj.mode, &traj.params);
    if traj.branch != Branch::Interior {
        return Err(Error::InvalidParameter("horizon fit needs an interior trajectory".into()));
    }
    let a = alpha(params);
    let last = traj.samples.last().ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    if last.r_star < 30.0 / a {
        return Err(Error::InvalidParameter(format!(
            "trajectory must reach r* ≥ 30/α = {}, reaches {}",
            30.0 / a,
            last.r_star
        )));
    }
    let us: Vec<f64> = traj.samples.iter().map(|s| s.r_star).collect();
    let hs: Vec<V2> = traj.samples.iter().map(|s| stripped(s, column, mode, params)).collect();
    let hinf = *hs.last().unwrap();
    let scale = hinf.norm();
    if scale < 1e-14 {
        return Err(Error::Degenerate("trivial solution".into()));
    }

    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (u, h) in us.iter().zip(&hs) {
        let e = (h - hinf).norm() / scale;
        if e >= FIT_BAND[0] && e <= FIT_BAND[1] {
            lx.push(*u);
            ly.push(e.ln());
        }
    }
    if lx.len() < 5 {
        return Err(Error::InvalidParameter("too few samples in the decay window".into()));
    }
    let rate = -linear_fit(&lx, &ly).0;
    let window = [lx[0], *lx.last().unwrap()];

    // Tail differences over a fixed lag, on samples inside the same window.
    let (mut cx, mut cy) = (Vec::new(), Vec::new());
    for (i, &u) in us.iter().enumerate() {
        if u < window[0] || u > window[1] {
            continue;
        }
        let target = u + cauchy_lag;
        let slack = 1e-9 * target.abs().max(1.0);
        let j = us.partition_point(|&v| v < target - slack);
        if j >= us.len() || (us[j] - target).abs() > slack {
            continue;
        }
        let d = (hs[i] - hs[j]).norm() / scale;
        if d >= FIT_BAND[0] {
            cx.push(u);
            cy.push(d.ln());
        }
    }
    if cx.len() < 5 {
        return Err(Error::InvalidParameter("too few samples for the Cauchy test".into()));
    }
    let cauchy_rate = -linear_fit(&cx, &cy).0;
    let imag_fraction = hinf.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;

    Ok(HorizonFit {
        asymptotics: HorizonAsymptotics { h: [hinf[0], hinf[1]], alpha: a, omega_minus: omega_minus(params) },
        rate,
        window,
        cauchy_rate,
        cauchy_lag,
        imag_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonRun {
    /// Span end in units of `1/α`.
    pub end_over_alpha: f64,
    /// Sample spacing in units of `1/α`.
    pub spacing_over_alpha: f64,
    pub x0: [C64; 2],
    pub tol: f64,
    /// Cauchy-test lag in units of `1/α`.
    pub lag_over_alpha: f64,
}

impl Default for HorizonRun {
    fn default() -> Self {
        HorizonRun {
            end_over_alpha: 40.0,
            spacing_over_alpha: 0.02,
            x0: [C64::new(1.0, 0.0), C64::new(0.3, -0.7)],
            tol: 1e-12,
            lag_over_alpha: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub mode: ModeParams,
    pub params: SpacetimeParams,
    pub run: HorizonRun,
    pub fit: HorizonFit,
    pub wronskian_drift: f64,
    pub trajectory: RadialTrajectory,
}

/// `r⋆` at the midpoint `(r₊ + r₋)/2` between the horizons.
pub fn mid_zone(params: &SpacetimeParams) -> f64 {
    let l = params.horizons().width();
    RadialPoint::from_offset(Branch::Interior, 0.5 * l, params).tortoise(params)
}

/// Integrates from the middle of the interior region towards `r₋` and fits
/// the horizon limit of the first solution.
pub fn horizon_experiment(mode: &ModeParams, params: &SpacetimeParams, run: &HorizonRun) -> Result<HorizonReport> {
    let u0 = mid_zone(params);
    let end = run.end_over_alpha / alpha(params);
    if end <= u0 {
        return Err(Error::InvalidParameter("horizon span ends before the mid-zone".into()));
    }
    let n = ((end - u0) * alpha(params) / run.spacing_over_alpha).ceil() as usize + 1;
    let outs = linspace(u0, end, n);
    let x0 = V2::new(run.x0[0], run.x0[1]);
    let x1 = V2::new(-run.x0[1].conj(), run.x0[0].conj());
    let traj = integrate(mode, params, Branch::Interior, u0, &[x0, x1], &outs, &IntegrateOptions::with_tol(run.tol))?;
    let lag_steps = (run.lag_over_alpha / alpha(params) / (outs[1] - outs[0])).round().max(1.0);
    let fit = fit_horizon(&traj, 0, lag_steps * (outs[1] - outs[0]))?;
    let drift = wronskian_drift(&traj)?;
    Ok(HorizonReport { mode: *mode, params: *params, run: *run, fit, wronskian_drift: drift, trajectory: traj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::potential_at;

    fn kn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6, 0.3).unwrap()
    }

    fn mode() -> ModeParams {
        ModeParams::new(0.7, 1.5, 0.4, -1.2).unwrap()
    }

    #[test]
    fn horizon_constants() {
        let p = kn();
        let h = p.horizons();
        let a2 = 0.36;
        assert!((omega_minus(&p) * (h.r_minus * h.r_minus + a2) - 0.6).abs() < 1e-15);
        let expected = 0.5 * (h.r_plus - h.r_minus) / (h.r_minus * h.r_minus + a2);
        assert!((alpha(&p) - expected).abs() < 1e-15);
        assert!(alpha(&p) > 0.0);
    }

    #[test]
    fn b_reproduces_the_stripped_system() {
        let p = kn();
        let m = mode();
        let x = V2::new(C64::new(0.4, -1.1), C64::new(0.9, 0.2));
        for u in [-3.0, 0.5, 4.0, 12.0] {
            let pt = tortoise_inverse_point(u, Branch::Interior, &p).unwrap();
            let dx = potential_at(&pt, &m, &p) * x;
            let phi = strip_phase(u, &m, &p);
            let dphi = 2.0 * (m.omega + m.k * omega_minus(&p));
            let e = C64::from_polar(1.0, -phi);
            let h = V2::new(x[0] * e, x[1]);
            let dh = V2::new(dx[0] * e - I * dphi * h[0], dx[1]);
            let b = horizon_b(u, &pt, &m, &p).unwrap();
            assert!((b * h - dh).norm() < 1e-13 * (1.0 + dh.norm()), "u={u}");
        }
    }

    #[test]
    fn b_vanishes_at_the_cauchy_horizon() {
        let p = kn();
        let m = mode();
        let a = alpha(&p);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..=40 {
            let u = (20.0 + i as f64) / a;
            xs.push(u);
            ys.push(horizon_b_at(u, &m, &p).unwrap().norm().ln());
        }
        let slope = linear_fit(&xs, &ys).0;
        assert!((slope / -a - 1.0).abs() < 0.1, "{slope} vs {}", -a);
        assert!(horizon_b_at(60.0 / a, &m, &p).unwrap().norm() < 1e-20);
        let outside = RadialPoint::from_r(3.0, &p).unwrap();
        assert!(horizon_b(0.0, &outside, &m, &p).is_err());
    }

    #[test]
    fn interior_limit_and_rate() {
        let p = kn();
        for m in [mode(), ModeParams::new(-1.3, -0.5, 0.0, 2.1).unwrap()] {
            let rep = horizon_experiment(&m, &p, &HorizonRun::default()).unwrap();
            assert!(rep.fit.rate_error() < 0.1, "rate {} α {}", rep.fit.rate, rep.fit.asymptotics.alpha);
            assert!(rep.fit.cauchy_rate_error() < 0.1);
            assert!(rep.wronskian_drift < 10.0 * rep.run.tol);
            // The unphased second component settles to a constant.
            let n = rep.trajectory.samples.len();
            let x2_end = rep.trajectory.samples[n - 1].x[0][1];
            let x2_before = rep.trajectory.samples[n - 200].x[0][1];
            assert!((x2_end - x2_before).norm() < 1e-9 * x2_end.norm().max(1e-300));
        }
    }

    #[test]
    fn too_short_span_rejected() {
        let p = kn();
        let run = HorizonRun { end_over_alpha: 10.0, ..Default::default() };
        assert!(horizon_experiment(&mode(), &p, &run).is_err());
    }
}
