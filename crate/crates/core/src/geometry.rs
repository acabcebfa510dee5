//! Kerr-Newman metric data, horizons and the Boyer-Lindquist to
//! Eddington-Finkelstein coordinate machinery.
//!
//! Coordinate order everywhere in this crate is `(t|τ, r, θ, φ|φ̂)`.

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const T: usize = 0;
pub const R: usize = 1;
pub const TH: usize = 2;
pub const PH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeParams {
    pub mass: f64,
    pub a: f64,
    pub charge: f64,
}

impl SpacetimeParams {
    /// Sub-extremal parameters only: `a² + Q² < M²`, `M > 0`.
    pub fn new(mass: f64, a: f64, charge: f64) -> Result<Self> {
        let p = SpacetimeParams { mass, a, charge };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.a.is_finite() && self.charge.is_finite()) {
            return Err(Error::InvalidParameter("non-finite spacetime parameter".into()));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {}", self.mass)));
        }
        if self.a * self.a + self.charge * self.charge >= self.mass * self.mass {
            return Err(Error::InvalidParameter(format!(
                "a² + Q² = {} is not below M² = {}",
                self.a * self.a + self.charge * self.charge,
                self.mass * self.mass
            )));
        }
        Ok(())
    }

    pub fn horizons(&self) -> HorizonData {
        let root = (self.mass * self.mass - self.a * self.a - self.charge * self.charge).sqrt();
        let r_plus = self.mass + root;
        // r₋ = (a² + Q²)/r₊ avoids cancellation for small a, Q.
        let r_minus = (self.a * self.a + self.charge * self.charge) / r_plus;
        HorizonData { r_plus, r_minus }
    }

    pub fn delta(&self, r: f64) -> f64 {
        r * r - 2.0 * self.mass * r + self.a * self.a + self.charge * self.charge
    }

    /// `Δ(r)` is zero up to rounding of its own terms.
    pub fn on_horizon(&self, r: f64) -> bool {
        let scale = r * r + 2.0 * self.mass * r.abs() + self.a * self.a + self.charge * self.charge;
        self.delta(r).abs() <= 16.0 * f64::EPSILON * scale
    }

    pub fn sigma(&self, r: f64, theta: f64) -> f64 {
        let c = theta.cos();
        r * r + self.a * self.a * c * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonData {
    pub r_plus: f64,
    pub r_minus: f64,
}

impl HorizonData {
    pub fn width(&self) -> f64 {
        self.r_plus - self.r_minus
    }
}

/// Validates the parameters and returns `r±`.
pub fn horizons(params: &SpacetimeParams) -> Result<HorizonData> {
    params.validate()?;
    Ok(params.horizons())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BLPoint {
    pub r: f64,
    pub theta: f64,
}

impl BLPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside (0, π)")));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParameter("non-finite r".into()));
        }
        Ok(BLPoint { r, theta })
    }
}

pub fn delta_sigma(point: &BLPoint, params: &SpacetimeParams) -> (f64, f64) {
    (params.delta(point.r), params.sigma(point.r, point.theta))
}

/// ε(Δ): +1 outside, −1 between the horizons.
pub fn eps_delta(delta: f64) -> Result<f64> {
    if delta > 0.0 {
        Ok(1.0)
    } else if delta < 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::Singular { what: "ε(Δ)", r: f64::NAN })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Exterior,
    Interior,
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exterior" => Ok(Branch::Exterior),
            "interior" => Ok(Branch::Interior),
            other => Err(Error::InvalidParameter(format!("unknown branch '{other}'"))),
        }
    }
}

/// The logarithm prefactors of the tortoise coordinate,
/// `(r₊² + a²)/(r₊ − r₋)` and `(r₋² + a²)/(r₊ − r₋)`.
fn tortoise_weights(params: &SpacetimeParams, h: &HorizonData) -> (f64, f64) {
    let a2 = params.a * params.a;
    let l = h.width();
    ((h.r_plus * h.r_plus + a2) / l, (h.r_minus * h.r_minus + a2) / l)
}

/// A radial location stored together with its distance to the nearest
/// horizon on its branch, so that Δ keeps full relative precision even when
/// `r` itself is indistinguishable from `r±` in double precision.
///
/// Exterior: `offset = r − r₊ > 0`. Interior: `offset = r − r₋ ∈ (0, r₊ − r₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialPoint {
    pub branch: Branch,
    pub r: f64,
    pub offset: f64,
}

impl RadialPoint {
    pub fn from_r(r: f64, params: &SpacetimeParams) -> Result<Self> {
        let h = params.horizons();
        if r > h.r_plus {
            Ok(RadialPoint { branch: Branch::Exterior, r, offset: r - h.r_plus })
        } else if r > h.r_minus && r < h.r_plus {
            Ok(RadialPoint { branch: Branch::Interior, r, offset: r - h.r_minus })
        } else {
            Err(Error::Singular { what: "radial point", r })
        }
    }

    pub fn from_offset(branch: Branch, offset: f64, params: &SpacetimeParams) -> Self {
        let h = params.horizons();
        let r = match branch {
            Branch::Exterior => h.r_plus + offset,
            Branch::Interior => h.r_minus + offset,
        };
        RadialPoint { branch, r, offset }
    }

    /// `r − r₊` and `r − r₋`, each with full relative precision.
    pub fn horizon_distances(&self, params: &SpacetimeParams) -> (f64, f64) {
        let l = params.horizons().width();
        match self.branch {
            Branch::Exterior => (self.offset, self.offset + l),
            Branch::Interior => (self.offset - l, self.offset),
        }
    }

    pub fn delta(&self, params: &SpacetimeParams) -> f64 {
        let (dp, dm) = self.horizon_distances(params);
        dp * dm
    }

    pub fn eps(&self) -> f64 {
        match self.branch {
            Branch::Exterior => 1.0,
            Branch::Interior => -1.0,
        }
    }

    pub fn tortoise(&self, params: &SpacetimeParams) -> f64 {
        let h = params.horizons();
        let (wp, wm) = tortoise_weights(params, &h);
        let (dp, dm) = self.horizon_distances(params);
        self.r + wp * dp.abs().ln() - wm * dm.abs().ln()
    }

    pub fn azimuthal_shift(&self, params: &SpacetimeParams) -> f64 {
        let l = params.horizons().width();
        let (dp, dm) = self.horizon_distances(params);
        params.a / l * (dp.abs().ln() - dm.abs().ln())
    }
}

/// Tortoise coordinate `r⋆(r)`; singular at `r₊`, undefined for `r ≤ r₋`.
pub fn tortoise(r: f64, params: &SpacetimeParams) -> Result<f64> {
    let h = params.horizons();
    if r == h.r_plus {
        return Err(Error::Singular { what: "tortoise coordinate", r });
    }
    if r <= h.r_minus {
        return Err(Error::InvalidParameter(format!("r = {r} is not above r₋ = {}", h.r_minus)));
    }
    Ok(RadialPoint::from_r(r, params)?.tortoise(params))
}

/// `dr⋆/dr = (r² + a²)/Δ`.
pub fn tortoise_derivative(r: f64, params: &SpacetimeParams) -> f64 {
    (r * r + params.a * params.a) / params.delta(r)
}

const INVERSION_MAX_ITER: usize = 200;

/// Inverts `r⋆` on the given branch. Returns the point in offset form.
///
/// The unknown is `t = ln(r − r₊)` outside and the logit
/// `t = ln s − ln(r₊ − r₋ − s)`, `s = r − r₋`, inside; `r⋆` is monotone in
/// `t` with range ℝ on both branches, so a bracket always exists.
pub fn tortoise_inverse_point(
    r_star: f64,
    branch: Branch,
    params: &SpacetimeParams,
) -> Result<RadialPoint> {
    tortoise_inverse_point_from(r_star, branch, params, None)
}

/// As [`tortoise_inverse_point`] with an optional warm start.
pub fn tortoise_inverse_point_from(
    r_star: f64,
    branch: Branch,
    params: &SpacetimeParams,
    guess: Option<&RadialPoint>,
) -> Result<RadialPoint> {
    if !r_star.is_finite() {
        return Err(Error::InvalidParameter("non-finite r*".into()));
    }
    let h = params.horizons();
    let l = h.width();
    if branch == Branch::Interior && h.r_minus == 0.0 {
        return Err(Error::InvalidParameter(
            "interior inversion needs a Cauchy horizon (a = Q = 0 has none)".into(),
        ));
    }
    let a2 = params.a * params.a;

    let point_of = |t: f64| -> RadialPoint {
        let offset = match branch {
            Branch::Exterior => t.exp(),
            Branch::Interior => {
                // s = L/(1 + e^{-t}), written to stay accurate for t ≪ 0.
                if t < 0.0 {
                    let e = t.exp();
                    l * e / (1.0 + e)
                } else {
                    l / (1.0 + (-t).exp())
                }
            }
        };
        RadialPoint::from_offset(branch, offset, params)
    };
    // g(t) = r⋆(t) − target, g'(t) = dr⋆/dt.
    let eval = |t: f64| -> (f64, f64, RadialPoint) {
        let p = point_of(t);
        let g = p.tortoise(params) - r_star;
        let dg = match branch {
            Branch::Exterior => (p.r * p.r + a2) / (p.offset + l),
            Branch::Interior => -(p.r * p.r + a2) / l,
        };
        (g, dg, p)
    };
    let t_of = |p: &RadialPoint| -> f64 {
        match branch {
            Branch::Exterior => p.offset.ln(),
            Branch::Interior => p.offset.ln() - (l - p.offset).ln(),
        }
    };

    let scale = r_star.abs().max(1.0);
    let tol = 1e-12 * scale;
    let sign = match branch {
        Branch::Exterior => 1.0,
        Branch::Interior => -1.0,
    };

    let mut t = match guess {
        Some(p) if p.branch == branch && p.offset > 0.0 => t_of(p),
        _ => match branch {
            Branch::Exterior => {
                let rough = r_star - h.r_plus;
                if rough > 1.0 { rough.ln() } else { 0.0 }
            }
            Branch::Interior => 0.0,
        },
    };

    // Bracket [lo, hi] with sign·g(lo) < 0 < sign·g(hi).
    let (mut g, mut dg, mut p) = eval(t);
    if g.abs() <= tol {
        return Ok(p);
    }
    let (mut lo, mut hi);
    let mut step = 1.0;
    if sign * g < 0.0 {
        lo = t;
        hi = t + step;
        loop {
            let (gh, _, _) = eval(hi);
            if sign * gh >= 0.0 {
                break;
            }
            lo = hi;
            step *= 2.0;
            hi += step;
            if step > 1e6 {
                return Err(Error::NonConvergence { what: "tortoise inversion bracket", iterations: 0 });
            }
        }
    } else {
        hi = t;
        lo = t - step;
        loop {
            let (gl, _, _) = eval(lo);
            if sign * gl <= 0.0 {
                break;
            }
            hi = lo;
            step *= 2.0;
            lo -= step;
            if step > 1e6 {
                return Err(Error::NonConvergence { what: "tortoise inversion bracket", iterations: 0 });
            }
        }
    }

    for _ in 0..INVERSION_MAX_ITER {
        let mut next = t - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        t = next;
        (g, dg, p) = eval(t);
        if g.abs() <= tol {
            return Ok(p);
        }
        if sign * g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence { what: "tortoise inversion", iterations: INVERSION_MAX_ITER })
}

/// Inverts `r⋆` on the given branch and returns `r`.
pub fn tortoise_inverse(r_star: f64, branch: Branch, params: &SpacetimeParams) -> Result<f64> {
    tortoise_inverse_point(r_star, branch, params).map(|p| p.r)
}

/// `φ̃ = a/(r₊ − r₋) · ln|(r − r₊)/(r − r₋)|`, integration constant zero.
pub fn azimuthal_shift(r: f64, params: &SpacetimeParams) -> Result<f64> {
    let h = params.horizons();
    if r == h.r_plus {
        return Err(Error::Singular { what: "azimuthal shift", r });
    }
    if r <= h.r_minus {
        return Err(Error::InvalidParameter(format!("r = {r} is not above r₋ = {}", h.r_minus)));
    }
    Ok(RadialPoint::from_r(r, params)?.azimuthal_shift(params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    BoyerLindquist,
    EddingtonFinkelstein,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricComponents {
    pub chart: Chart,
    pub g: Matrix4<f64>,
}

impl MetricComponents {
    pub fn inverse(&self) -> Option<Matrix4<f64>> {
        self.g.try_inverse()
    }
}

/// Metric components in the requested chart, order `(t|τ, r, θ, φ|φ̂)`.
///
/// EF chart uses `f = (Q² − 2Mr)/Σ`, `W = dr − a sin²θ dφ̂`:
/// `g = (1+f) dτ² + 2f dτ W − (1−f) W² − Σ dθ² − Σ sin²θ dφ̂²`.
pub fn metric(point: &BLPoint, chart: Chart, params: &SpacetimeParams) -> Result<MetricComponents> {
    let (r, th) = (point.r, point.theta);
    let (delta, sigma) = delta_sigma(point, params);
    let a = params.a;
    let q2 = params.charge * params.charge;
    let s2 = th.sin().powi(2);
    let f = (q2 - 2.0 * params.mass * r) / sigma;
    let mut g = Matrix4::zeros();
    match chart {
        Chart::BoyerLindquist => {
            if params.on_horizon(r) {
                return Err(Error::Singular { what: "Boyer-Lindquist metric", r });
            }
            g[(T, T)] = 1.0 + f;
            g[(R, R)] = -sigma / delta;
            g[(TH, TH)] = -sigma;
            g[(PH, PH)] = -s2 * (r * r + a * a - a * a * f * s2);
            g[(T, PH)] = -a * s2 * f;
            g[(PH, T)] = g[(T, PH)];
        }
        Chart::EddingtonFinkelstein => {
            // W = (0, 1, 0, −a s²)
            let w = [0.0, 1.0, 0.0, -a * s2];
            let dt = [1.0, 0.0, 0.0, 0.0];
            for i in 0..4 {
                for j in 0..4 {
                    g[(i, j)] = (1.0 + f) * dt[i] * dt[j] + f * (w[i] * dt[j] + dt[i] * w[j])
                        - (1.0 - f) * w[i] * w[j];
                }
            }
            g[(TH, TH)] -= sigma;
            g[(PH, PH)] -= sigma * s2;
        }
    }
    Ok(MetricComponents { chart, g })
}

/// Jacobian `∂x_EF/∂x_BL` (rows EF, columns BL).
pub fn bl_to_ef_jacobian(r: f64, params: &SpacetimeParams) -> Result<Matrix4<f64>> {
    let delta = params.delta(r);
    if params.on_horizon(r) {
        return Err(Error::Singular { what: "BL → EF Jacobian", r });
    }
    let mut j = Matrix4::identity();
    j[(T, R)] = (r * r + params.a * params.a) / delta - 1.0;
    j[(PH, R)] = params.a / delta;
    Ok(j)
}

/// The matrix `A = −g_EF` restricted to `τ = const`, basis `(r, φ̂, θ)`.
pub fn temporal_matrix(point: &BLPoint, params: &SpacetimeParams) -> Matrix3<f64> {
    let g = metric(point, Chart::EddingtonFinkelstein, params)
        .expect("EF metric is regular for r > r₋")
        .g;
    let idx = [R, PH, TH];
    Matrix3::from_fn(|i, j| -g[(idx[i], idx[j])])
}

/// Leading principal minors of [`temporal_matrix`].
///
/// Closed forms: `d₁ = (Σ + 2Mr − Q²)/Σ`, `d₂ = sin²θ (Σ + 2Mr − Q²)`, `d₃ = Σ d₂`.
pub fn temporal_minors(point: &BLPoint, params: &SpacetimeParams) -> (f64, f64, f64) {
    let a = temporal_matrix(point, params);
    let d1 = a[(0, 0)];
    let d2 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let d3 = a.determinant();
    (d1, d2, d3)
}

pub fn temporal_minors_closed(point: &BLPoint, params: &SpacetimeParams) -> (f64, f64, f64) {
    let sigma = params.sigma(point.r, point.theta);
    let core = sigma + 2.0 * params.mass * point.r - params.charge * params.charge;
    let s2 = point.theta.sin().powi(2);
    (core / sigma, s2 * core, sigma * s2 * core)
}
