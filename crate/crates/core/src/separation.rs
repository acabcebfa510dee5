//! Separation of the transformed Dirac equation on modes
//! `e^{−iωτ} e^{−ikφ} Φ̂(r, θ)` into a radial and an angular 2×2 system.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dirac_algebra::transformed_closed;
use crate::error::{Error, Result};
use crate::geometry::{tortoise_inverse_point, BLPoint, Branch, RadialPoint, SpacetimeParams};

pub type M2 = Matrix2<C64>;
pub type V2 = Vector2<C64>;

#[cfg(test)]
const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub omega: f64,
    /// Azimuthal number, `k ∈ ℤ + ½`.
    pub k: f64,
    pub mass: f64,
    pub xi: f64,
}

impl ModeParams {
    pub fn new(omega: f64, k: f64, mass: f64, xi: f64) -> Result<Self> {
        let m = ModeParams { omega, k, mass, xi };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega", self.omega), ("k", self.k), ("mass", self.mass), ("xi", self.xi)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        let twice = 2.0 * self.k;
        if twice.fract() != 0.0 || (twice as i64).rem_euclid(2) != 1 {
            return Err(Error::InvalidParameter(format!("k must be a half-integer, got {}", self.k)));
        }
        if self.mass < 0.0 {
            return Err(Error::InvalidParameter(format!("mass must be non-negative, got {}", self.mass)));
        }
        Ok(())
    }

    pub fn with_xi(&self, xi: f64) -> Self {
        ModeParams { xi, ..*self }
    }
}

/// `A ∂ + B` for a single variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeStencil {
    pub deriv: Matrix4<C64>,
    pub zeroth: Matrix4<C64>,
}

impl OdeStencil {
    pub fn apply(&self, f: &Vector4<C64>, df: &Vector4<C64>) -> Vector4<C64> {
        self.deriv * df + self.zeroth * f
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Radial matrix `𝓡(r)` with `𝓓₁ = −[(2r²+2a²−Δ)iω − Δ∂r + 2aki]/r₊` and
/// `𝓓₀ = r₊(iω + ∂r)`.
pub fn radial_operator(r: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<OdeStencil> {
    if params.on_horizon(r) {
        return Err(Error::Singular { what: "radial operator", r });
    }
    let a = params.a;
    let delta = params.delta(r);
    let rp = params.horizons().r_plus;
    let sq = delta.abs().sqrt();
    let imr = C64::new(0.0, mode.mass * r);
    // (∂r coefficient, zeroth order)
    let d1 = (re(delta / rp), -I * ((2.0 * (r * r + a * a) - delta) * mode.omega + 2.0 * a * mode.k) / rp);
    let d0 = (re(rp), I * (rp * mode.omega));

    let mut deriv = Matrix4::zeros();
    let mut zeroth = Matrix4::from_diagonal(&Vector4::new(imr, -imr, -imr, imr));
    for &(i, j) in &[(0, 2), (3, 1)] {
        deriv[(i, j)] = d1.0 / sq;
        zeroth[(i, j)] = d1.1 / sq;
    }
    for &(i, j) in &[(1, 3), (2, 0)] {
        deriv[(i, j)] = d0.0 * sq;
        zeroth[(i, j)] = d0.1 * sq;
    }
    Ok(OdeStencil { deriv, zeroth })
}

/// Angular matrix `𝓐(θ)` with `𝓛± = ∂θ + cotθ/2 ∓ (aω sinθ + k cscθ)`.
pub fn angular_operator(theta: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<OdeStencil> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("θ must lie in (0, π), got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    let amc = params.a * mode.mass * c;
    let w = params.a * mode.omega * s + mode.k / s;
    let half_cot = c / s / 2.0;
    let lp = re(half_cot - w);
    let lm = re(half_cot + w);
    let one = re(1.0);

    let mut deriv = Matrix4::zeros();
    let mut zeroth = Matrix4::from_diagonal(&Vector4::new(re(-amc), re(amc), re(-amc), re(amc)));
    deriv[(0, 3)] = one;
    zeroth[(0, 3)] = lp;
    deriv[(1, 2)] = -one;
    zeroth[(1, 2)] = -lm;
    deriv[(2, 1)] = one;
    zeroth[(2, 1)] = lp;
    deriv[(3, 0)] = -one;
    zeroth[(3, 0)] = -lm;
    Ok(OdeStencil { deriv, zeroth })
}

/// Values and first derivatives of a 2-component function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample2 {
    pub f: V2,
    pub df: V2,
}

/// `Φ̂ = (X̃₂Y₂, X̃₁Y₁, X̃₁Y₂, X̃₂Y₁)` with its `r` and `θ` derivatives.
pub fn separated_ansatz(x: &Sample2, y: &Sample2) -> (Vector4<C64>, Vector4<C64>, Vector4<C64>) {
    let pick = |a: &V2, b: &V2| Vector4::new(a[1] * b[1], a[0] * b[0], a[0] * b[1], a[1] * b[0]);
    (pick(&x.f, &y.f), pick(&x.df, &y.f), pick(&x.f, &y.df))
}

fn max_norm(v: &Vector4<C64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max(‖(𝓡 − ξ)Φ̂‖∞, ‖(𝓐 + ξ)Φ̂‖∞)`; zero exactly when both 2×2 systems hold
/// (for non-vanishing `X̃`, `Y`).
pub fn separation_residual(
    mode: &ModeParams,
    x: &Sample2,
    y: &Sample2,
    point: &BLPoint,
    params: &SpacetimeParams,
) -> Result<f64> {
    let (phi, dphi_r, dphi_th) = separated_ansatz(x, y);
    let rad = radial_operator(point.r, mode, params)?;
    let ang = angular_operator(point.theta, mode, params)?;
    let xi = re(mode.xi);
    let rr = rad.apply(&phi, &dphi_r) - phi * xi;
    let ra = ang.apply(&phi, &dphi_th) + phi * xi;
    Ok(max_norm(&rr).max(max_norm(&ra)))
}

/// Transformed Dirac operator applied to the mode `e^{−iωτ}e^{−ikφ}Φ̂`, minus
/// `(𝓡 + 𝓐)Φ̂`. Vanishes identically when the separation is exact.
pub fn mode_consistency_residual(
    mode: &ModeParams,
    x: &Sample2,
    y: &Sample2,
    point: &BLPoint,
    params: &SpacetimeParams,
) -> Result<f64> {
    let (phi, dphi_r, dphi_th) = separated_ansatz(x, y);
    let st = transformed_closed(point, params, mode.mass)?;
    let full = st.apply_mode(mode.omega, mode.k, &phi, &dphi_r, &dphi_th);
    let rad = radial_operator(point.r, mode, params)?;
    let ang = angular_operator(point.theta, mode, params)?;
    let split = rad.apply(&phi, &dphi_r) + ang.apply(&phi, &dphi_th);
    Ok(max_norm(&(full - split)))
}

/// `Ũ(r)`, the radial system `∂r X = Ũ X` for `X = (X̃₁, r₊X̃₂)`.
pub fn radial_system(r: f64, mode: &ModeParams, params: &SpacetimeParams) -> Result<M2> {
    if params.on_horizon(r) {
        return Err(Error::Singular { what: "radial system", r });
    }
    let delta = params.delta(r);
    let scale = (r * r + params.a * params.a) / delta;
    Ok(potential_from_parts(r, delta, mode, params) * re(scale))
}

fn potential_from_parts(r: f64, delta: f64, mode: &ModeParams, params: &SpacetimeParams) -> M2 {
    let a = params.a;
    let ra = r * r + a * a;
    let sq = delta.abs().sqrt();
    let eps_sq = if delta < 0.0 { -sq } else { sq };
    let mr = mode.mass * r;
    M2::new(
        I * ((mode.omega * (2.0 * ra - delta) + 2.0 * mode.k * a) / ra),
        C64::new(mode.xi, -mr) * (sq / ra),
        C64::new(mode.xi, mr) * (eps_sq / ra),
        -I * (mode.omega * delta / ra),
    )
}

/// `U = Δ/(r²+a²) Ũ` with `Δ` cancelled, evaluated at a radial point. Finite
/// at both horizons.
pub fn potential_at(point: &RadialPoint, mode: &ModeParams, params: &SpacetimeParams) -> M2 {
    potential_from_parts(point.r, point.delta(params), mode, params)
}

/// `U(r⋆)` on the given branch.
pub fn radial_potential(r_star: f64, branch: Branch, mode: &ModeParams, params: &SpacetimeParams) -> Result<M2> {
    let p = tortoise_inverse_point(r_star, branch, params)?;
    Ok(potential_at(&p, mode, params))
}

/// `tr U = iω(2r² + 2a² − 2Δ)/(r²+a²) + 2ika/(r²+a²)`.
pub fn potential_trace(point: &RadialPoint, mode: &ModeParams, params: &SpacetimeParams) -> C64 {
    let a = params.a;
    let ra = point.r * point.r + a * a;
    let delta = point.delta(params);
    I * ((mode.omega * (2.0 * ra - 2.0 * delta) + 2.0 * mode.k * a) / ra)
}

/// `U(r⋆ → ∞) = i[[ω, −m], [m, −ω]]`.
pub fn potential_at_infinity(mode: &ModeParams) -> M2 {
    M2::new(re(mode.omega), re(-mode.mass), re(mode.mass), re(-mode.omega)) * I
}

/// Right-hand side of the angular system solved for derivatives:
/// `Y₁' = −(cotθ/2 − w)Y₁ + (am cosθ − ξ)Y₂`, `Y₂' = −(cotθ/2 + w)Y₂ + (am cosθ + ξ)Y₁`,
/// `w = aω sinθ + k cscθ`.
pub fn angular_rhs(theta: f64, y: &V2, mode: &ModeParams, params: &SpacetimeParams) -> V2 {
    let (s, c) = theta.sin_cos();
    let amc = params.a * mode.mass * c;
    let w = params.a * mode.omega * s + mode.k / s;
    let half_cot = c / s / 2.0;
    V2::new(
        y[0] * re(w - half_cot) + y[1] * re(amc - mode.xi),
        y[1] * re(-w - half_cot) + y[0] * re(amc + mode.xi),
    )
}

/// `∂r X̃` from the radial system, `X̃ = (X₁, X₂/r₊)`.
pub fn radial_rhs_tilde(r: f64, x_tilde: &V2, mode: &ModeParams, params: &SpacetimeParams) -> Result<V2> {
    let rp = params.horizons().r_plus;
    let u = radial_system(r, mode, params)?;
    let x = V2::new(x_tilde[0], x_tilde[1] * rp);
    let dx = u * x;
    Ok(V2::new(dx[0], dx[1] / rp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6, 0.3).unwrap()
    }

    fn mode() -> ModeParams {
        ModeParams::new(0.8, 0.5, 0.4, 1.3).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn manufactured(point: &BLPoint, mode: &ModeParams, p: &SpacetimeParams) -> (Sample2, Sample2) {
        let xf = V2::new(c(0.3, -1.1), c(0.7, 0.2));
        let yf = V2::new(c(1.2, 0.4), c(-0.5, 0.9));
        let x = Sample2 { f: xf, df: radial_rhs_tilde(point.r, &xf, mode, p).unwrap() };
        let y = Sample2 { f: yf, df: angular_rhs(point.theta, &yf, mode, p) };
        (x, y)
    }

    #[test]
    fn mode_params_validation() {
        assert!(ModeParams::new(1.0, 0.5, 0.0, 0.0).is_ok());
        assert!(ModeParams::new(1.0, -2.5, 0.0, 0.0).is_ok());
        assert!(ModeParams::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ModeParams::new(1.0, 0.25, 0.0, 0.0).is_err());
        assert!(ModeParams::new(1.0, 0.5, -1.0, 0.0).is_err());
        assert!(ModeParams::new(f64::NAN, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn radial_operator_diagonal() {
        let m = ModeParams::new(0.5, 0.5, 1.0, 0.0).unwrap();
        let st = radial_operator(3.0, &m, &kn()).unwrap();
        let d: Vec<C64> = (0..4).map(|i| st.zeroth[(i, i)]).collect();
        assert_eq!(d, vec![c(0.0, 3.0), c(0.0, -3.0), c(0.0, -3.0), c(0.0, 3.0)]);
    }

    #[test]
    fn radial_operator_no_ak_term_at_a_zero() {
        let p = SpacetimeParams::new(1.0, 0.0, 0.2).unwrap();
        let m1 = ModeParams::new(0.5, 0.5, 1.0, 0.0).unwrap();
        let m2 = ModeParams::new(0.5, -0.5, 1.0, 0.0).unwrap();
        let a = radial_operator(3.0, &m1, &p).unwrap();
        let b = radial_operator(3.0, &m2, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn d0_on_plane_wave() {
        // 𝓓₀ e^{iκr} = r₊ i(ω + κ) e^{iκr}
        let p = kn();
        let m = ModeParams::new(0.7, 0.5, 0.0, 0.0).unwrap();
        let r = 4.0;
        let kappa = 1.9;
        let e = C64::from_polar(1.0, kappa * r);
        let st = radial_operator(r, &m, &p).unwrap();
        let f = Vector4::new(ZERO, ZERO, ZERO, e);
        let df = f * c(0.0, kappa);
        let out = st.apply(&f, &df);
        let rp = p.horizons().r_plus;
        let expected = c(0.0, rp * (0.7 + kappa)) * e * p.delta(r).sqrt();
        assert!((out[1] - expected).norm() < 1e-13);
    }

    #[test]
    fn angular_operator_equator() {
        let p = kn();
        let m = mode();
        let st = angular_operator(std::f64::consts::FRAC_PI_2, &m, &p).unwrap();
        let w = 0.6 * 0.8 + 0.5;
        assert!((st.zeroth[(0, 3)] - re(-w)).norm() < 1e-15);
        assert!((st.zeroth[(3, 0)] - re(-w)).norm() < 1e-15);
        assert!(st.zeroth[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn angular_operator_no_diagonal_without_am() {
        let p = SpacetimeParams::new(1.0, 0.0, 0.0).unwrap();
        let st = angular_operator(1.0, &mode(), &p).unwrap();
        for i in 0..4 {
            assert_eq!(st.zeroth[(i, i)], ZERO);
        }
        assert!(angular_operator(0.0, &mode(), &p).is_err());
    }

    #[test]
    fn l_plus_on_sqrt_sin() {
        // aω = 0, k = ½: 𝓛₊√sinθ = √sinθ (cotθ − ½ cscθ)
        let p = SpacetimeParams::new(1.0, 0.0, 0.0).unwrap();
        let m = ModeParams::new(0.0, 0.5, 0.0, 0.0).unwrap();
        let th = 0.9f64;
        let (s, co) = th.sin_cos();
        let st = angular_operator(th, &m, &p).unwrap();
        let f = Vector4::new(ZERO, ZERO, ZERO, re(s.sqrt()));
        let df = Vector4::new(ZERO, ZERO, ZERO, re(co / (2.0 * s.sqrt())));
        let out = st.apply(&f, &df);
        let expected = s.sqrt() * (co / s - 0.5 / s);
        assert!((out[0] - re(expected)).norm() < 1e-14);
    }

    #[test]
    fn residual_vanishes_on_manufactured_solution() {
        let p = kn();
        let m = mode();
        for &(r, th) in &[(3.0, 1.0), (0.6, 2.3), (25.0, 0.2)] {
            let pt = BLPoint::new(r, th).unwrap();
            let (x, y) = manufactured(&pt, &m, &p);
            assert!(separation_residual(&m, &x, &y, &pt, &p).unwrap() < 1e-12);
            assert!(mode_consistency_residual(&m, &x, &y, &pt, &p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn residual_is_linear_in_perturbation() {
        let p = kn();
        let m = mode();
        let pt = BLPoint::new(3.0, 1.0).unwrap();
        let (mut x, y) = manufactured(&pt, &m, &p);
        x.df[0] += c(1e-3, 0.0);
        let r1 = separation_residual(&m, &x, &y, &pt, &p).unwrap();
        x.df[0] += c(1e-3, 0.0);
        let r2 = separation_residual(&m, &x, &y, &pt, &p).unwrap();
        assert!(r1 > 1e-5 && r1 < 1e-2);
        assert!((r2 / r1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn residual_detects_wrong_xi() {
        let p = kn();
        let m = mode();
        let pt = BLPoint::new(3.0, 1.0).unwrap();
        let (x, y) = manufactured(&pt, &m, &p);
        let res = separation_residual(&m.with_xi(m.xi + 1.0), &x, &y, &pt, &p).unwrap();
        // (𝓐 + ξ + 1)Φ̂ − (𝓐 + ξ)Φ̂ = Φ̂
        let (phi, _, _) = separated_ansatz(&x, &y);
        assert!(res >= max_norm(&phi) * (1.0 - 1e-12));
    }

    #[test]
    fn radial_system_entries() {
        let p = kn();
        let m = mode();
        for r in [0.5, 3.0, 40.0] {
            let u = radial_system(r, &m, &p).unwrap();
            assert!((u[(1, 1)] - c(0.0, -m.omega)).norm() < 1e-14);
        }
        let m0 = ModeParams::new(0.8, 0.5, 0.0, 0.0).unwrap();
        let u = radial_system(3.0, &m0, &p).unwrap();
        assert_eq!(u[(0, 1)], ZERO);
        assert_eq!(u[(1, 0)], ZERO);
        assert!(radial_system(p.horizons().r_plus, &m, &p).is_err());
    }

    #[test]
    fn potential_matches_scaled_system() {
        let p = kn();
        let m = mode();
        for r in [0.5, 3.0, 40.0] {
            let pt = RadialPoint::from_r(r, &p).unwrap();
            let u = potential_at(&pt, &m, &p);
            let ut = radial_system(r, &m, &p).unwrap() * re(p.delta(r) / (r * r + 0.36));
            assert!((u - ut).norm() < 1e-13);
            assert!((u.trace() - potential_trace(&pt, &m, &p)).norm() < 1e-12);
        }
    }

    #[test]
    fn potential_at_horizon_limit() {
        let p = kn();
        let m = mode();
        let h = p.horizons();
        let pt = RadialPoint::from_offset(Branch::Exterior, 1e-8, &p);
        let u = potential_at(&pt, &m, &p);
        let ra = h.r_plus * h.r_plus + 0.36;
        let expected = c(0.0, 2.0 * (m.omega + m.k * 0.6 / ra));
        assert!((u[(0, 0)] - expected).norm() < 1e-7);
        assert!(u[(0, 1)].norm() < 1e-3 && u[(1, 0)].norm() < 1e-3);
        let exact = RadialPoint::from_offset(Branch::Exterior, 0.0, &p);
        let u0 = potential_at(&exact, &m, &p);
        assert!((u0[(0, 0)] - expected).norm() < 1e-12);
        assert_eq!(u0[(0, 1)], ZERO);
    }

    #[test]
    fn potential_far_field() {
        let p = kn();
        let m = mode();
        let u = radial_potential(1e7, Branch::Exterior, &m, &p).unwrap();
        let lim = potential_at_infinity(&m);
        assert!((u - lim).norm() < 1e-6);
        // off-diagonal signs: U₁₂ → −im, U₂₁ → +im
        assert!(u[(0, 1)].im < 0.0 && u[(1, 0)].im > 0.0);
    }

    #[test]
    fn potential_bounded_on_dense_grid() {
        let p = kn();
        let m = mode();
        let bound = 10.0 * (m.omega.abs() + m.k.abs() + m.mass + m.xi.abs() + 1.0);
        let h = p.horizons();
        let mut worst = 0.0f64;
        for e in -10..=3 {
            let d = 10f64.powi(e);
            for pt in [
                RadialPoint::from_offset(Branch::Exterior, d, &p),
                RadialPoint::from_offset(Branch::Interior, d.min(0.5 * h.width()), &p),
                RadialPoint::from_offset(Branch::Interior, h.width() - d.min(0.5 * h.width()), &p),
            ] {
                let u = potential_at(&pt, &m, &p);
                worst = worst.max(u.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        assert!(worst < bound, "{worst}");
    }

    #[test]
    fn interior_sign_of_lower_left() {
        let p = kn();
        let m = mode();
        let u = potential_at(&RadialPoint::from_r(1.0, &p).unwrap(), &m, &p);
        let d = p.delta(1.0);
        assert!(d < 0.0);
        let expected = c(m.xi, m.mass) * (-(-d).sqrt() / 1.36);
        assert!((u[(1, 0)] - expected).norm() < 1e-14);
    }
}
