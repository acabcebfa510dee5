//! Newman-Penrose and orthonormal tetrads, class-3 rotations and the
//! horizon-regular Eddington-Finkelstein frame.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{bl_to_ef_jacobian, eps_delta, BLPoint, Chart, MetricComponents, SpacetimeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Vectors,
    Forms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullTetrad {
    pub l: Vector4<f64>,
    pub n: Vector4<f64>,
    pub m: Vector4<C64>,
    pub mbar: Vector4<C64>,
    pub variance: Variance,
    pub chart: Chart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalTetrad {
    pub u: [Vector4<f64>; 4],
    pub variance: Variance,
    pub chart: Chart,
}

pub const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

fn cplx(v: &Vector4<f64>) -> Vector4<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// Bilinear pairing matrix for the given variance: `g` for vectors, `g⁻¹` for forms.
fn pairing(variance: Variance, g: &MetricComponents) -> Result<Matrix4<C64>> {
    let m = match variance {
        Variance::Vectors => g.g,
        Variance::Forms => g
            .inverse()
            .ok_or_else(|| Error::Degenerate("metric is not invertible".into()))?,
    };
    Ok(m.map(|x| C64::new(x, 0.0)))
}

fn check_chart(chart: Chart, g: &MetricComponents) -> Result<()> {
    if chart != g.chart {
        return Err(Error::Mismatch(format!("tetrad in {:?}, metric in {:?}", chart, g.chart)));
    }
    Ok(())
}

/// Largest deviation from the NP conditions
/// `g(l,n) = 1`, `g(m,m̄) = −1`, all other pairings zero.
pub fn np_residual(nt: &NullTetrad, g: &MetricComponents) -> Result<f64> {
    check_chart(nt.chart, g)?;
    let p = pairing(nt.variance, g)?;
    let vs = [cplx(&nt.l), cplx(&nt.n), nt.m, nt.mbar];
    let target = |i: usize, j: usize| -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => 1.0,
            (2, 3) => -1.0,
            _ => 0.0,
        }
    };
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in i..4 {
            let v = (vs[i].transpose() * p * vs[j])[(0, 0)];
            worst = worst.max((v - target(i, j)).norm());
        }
    }
    Ok(worst)
}

/// Largest deviation of `g(u_a, u_b)` from `η_ab`.
pub fn dyad_residual(ot: &OrthonormalTetrad, g: &MetricComponents) -> Result<f64> {
    check_chart(ot.chart, g)?;
    let p = pairing(ot.variance, g)?.map(|z| z.re);
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let v = (ot.u[i].transpose() * p * ot.u[j])[(0, 0)];
            let t = if i == j { ETA[i] } else { 0.0 };
            worst = worst.max((v - t).abs());
        }
    }
    Ok(worst)
}

/// Pseudo-orthonormalisation of a frame whose first vector is timelike.
pub fn gram_schmidt_tetrad(frame: [Vector4<f64>; 4], g: &MetricComponents) -> Result<OrthonormalTetrad> {
    let ip = |a: &Vector4<f64>, b: &Vector4<f64>| (a.transpose() * g.g * b)[(0, 0)];
    if ip(&frame[0], &frame[0]) <= 0.0 {
        return Err(Error::InvalidParameter("first frame vector is not timelike".into()));
    }
    let mut out: [Vector4<f64>; 4] = [Vector4::zeros(); 4];
    let scale = frame.iter().map(|v| v.amax()).fold(0.0, f64::max).max(1.0);
    for k in 0..4 {
        let mut v = frame[k];
        for (j, e) in out.iter().enumerate().take(k) {
            v -= e * (ip(e, &frame[k]) * ETA[j]);
        }
        let nn = ip(&v, &v);
        if nn.abs() <= 1e-14 * scale * scale {
            return Err(Error::Degenerate("frame is linearly dependent or null".into()));
        }
        if nn.signum() != ETA[k] {
            return Err(Error::Degenerate(format!("frame vector {k} has the wrong causal character")));
        }
        out[k] = v / nn.abs().sqrt();
    }
    Ok(OrthonormalTetrad { u: out, variance: Variance::Vectors, chart: g.chart })
}

/// `l = (u₀+u₃)/√2`, `n = (u₀−u₃)/√2`, `m = (u₁+iu₂)/√2`.
pub fn null_from_orthonormal(t: &OrthonormalTetrad) -> NullTetrad {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    let m = (cplx(&t.u[1]) + cplx(&t.u[2]) * i) * C64::from(s);
    let mbar = (cplx(&t.u[1]) - cplx(&t.u[2]) * i) * C64::from(s);
    NullTetrad {
        l: (t.u[0] + t.u[3]) * s,
        n: (t.u[0] - t.u[3]) * s,
        m,
        mbar,
        variance: t.variance,
        chart: t.chart,
    }
}

/// `u₀ = (l+n)/√2`, `u₁ = (m+m̄)/√2`, `u₂ = (m−m̄)/(√2 i)`, `u₃ = (l−n)/√2`.
pub fn orthonormal_from_null(t: &NullTetrad) -> OrthonormalTetrad {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    let u1 = ((t.m + t.mbar) * C64::from(s)).map(|z| z.re);
    let u2 = ((t.m - t.mbar) * (s / i)).map(|z| z.re);
    OrthonormalTetrad {
        u: [(t.l + t.n) * s, u1, u2, (t.l - t.n) * s],
        variance: t.variance,
        chart: t.chart,
    }
}

/// `(l, n, m, m̄) ↦ (C l, C⁻¹ n, (C/|C|) m, (C̄/|C|) m̄)`.
///
/// `l` and `n` stay real: they are scaled by `|C|`, the phase of `C` acts on `m` only.
/// Scaling commutes with index lowering, so the map is the same for forms.
pub fn class3_rotation(t: &NullTetrad, c: C64) -> Result<NullTetrad> {
    if c == C64::new(0.0, 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter("class-3 rotation needs C ≠ 0".into()));
    }
    let u = c.norm();
    let phase = c / u;
    Ok(NullTetrad {
        l: t.l * u,
        n: t.n / u,
        m: t.m * phase,
        mbar: t.mbar * phase.conj(),
        variance: t.variance,
        chart: t.chart,
    })
}

/// The symmetric Kinnersley-type frame in Boyer-Lindquist coordinates.
pub fn symmetric_bl_tetrad(point: &BLPoint, params: &SpacetimeParams) -> Result<NullTetrad> {
    let (r, th) = (point.r, point.theta);
    let a = params.a;
    let delta = params.delta(r);
    if params.on_horizon(r) {
        return Err(Error::Singular { what: "symmetric BL tetrad", r });
    }
    let eps = eps_delta(delta).map_err(|_| Error::Singular { what: "symmetric BL tetrad", r })?;
    let sigma = params.sigma(r, th);
    let k = 1.0 / (2.0 * sigma * delta.abs()).sqrt();
    let ra = r * r + a * a;
    let l = Vector4::new(ra, delta, 0.0, a) * k;
    let n = Vector4::new(ra, -delta, 0.0, a) * (eps * k);
    let km = 1.0 / (2.0 * sigma).sqrt();
    let (s, csc) = (th.sin(), 1.0 / th.sin());
    let m = Vector4::new(C64::new(0.0, a * s), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, csc)) * C64::from(km);
    let mbar = m.map(|z| z.conj());
    Ok(NullTetrad { l, n, m, mbar, variance: Variance::Vectors, chart: Chart::BoyerLindquist })
}

/// Pushes a BL vector tetrad forward to EF components.
pub fn bl_vectors_to_ef(t: &NullTetrad, r: f64, params: &SpacetimeParams) -> Result<NullTetrad> {
    if t.chart != Chart::BoyerLindquist || t.variance != Variance::Vectors {
        return Err(Error::Mismatch("expected BL vectors".into()));
    }
    let j = bl_to_ef_jacobian(r, params)?;
    let jc = j.map(|x| C64::new(x, 0.0));
    Ok(NullTetrad {
        l: j * t.l,
        n: j * t.n,
        m: jc * t.m,
        mbar: jc * t.mbar,
        variance: Variance::Vectors,
        chart: Chart::EddingtonFinkelstein,
    })
}

/// Lowers (vectors → forms) or raises (forms → vectors) all members.
pub fn change_variance(t: &NullTetrad, g: &MetricComponents) -> Result<NullTetrad> {
    check_chart(t.chart, g)?;
    let (p, variance) = match t.variance {
        Variance::Vectors => (g.g, Variance::Forms),
        Variance::Forms => (
            g.inverse().ok_or_else(|| Error::Degenerate("metric is not invertible".into()))?,
            Variance::Vectors,
        ),
    };
    let pc = p.map(|x| C64::new(x, 0.0));
    Ok(NullTetrad { l: p * t.l, n: p * t.n, m: pc * t.m, mbar: pc * t.mbar, variance, chart: t.chart })
}

struct EfScalars {
    delta: f64,
    sigma: f64,
    rp: f64,
    a: f64,
    s: f64,
    ra: f64,
}

fn ef_scalars(point: &BLPoint, params: &SpacetimeParams) -> EfScalars {
    let a = params.a;
    EfScalars {
        delta: params.delta(point.r),
        sigma: params.sigma(point.r, point.theta),
        rp: params.horizons().r_plus,
        a,
        s: point.theta.sin(),
        ra: point.r * point.r + a * a,
    }
}

/// The primed EF tetrad as vectors and as forms, regular across `r₊`.
pub fn ef_null_tetrad(point: &BLPoint, params: &SpacetimeParams) -> (NullTetrad, NullTetrad) {
    let EfScalars { delta, sigma, rp, a, s, ra } = ef_scalars(point, params);
    let k = 1.0 / (2.0 * sigma).sqrt();
    let z = C64::new(0.0, 0.0);
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    let chart = Chart::EddingtonFinkelstein;

    let l = Vector4::new(2.0 * ra - delta, delta, 0.0, 2.0 * a) * (k / rp);
    let n = Vector4::new(1.0, -1.0, 0.0, 0.0) * (k * rp);
    let m = Vector4::new(im(a * s), z, re(1.0), im(1.0 / s)) * C64::from(k);
    let vectors = NullTetrad { l, n, m, mbar: m.map(|w| w.conj()), variance: Variance::Vectors, chart };

    let lf = Vector4::new(delta, delta - 2.0 * sigma, 0.0, -a * delta * s * s) * (k / rp);
    let nf = Vector4::new(1.0, 1.0, 0.0, -a * s * s) * (k * rp);
    let mf = Vector4::new(im(a * s), im(a * s), re(-sigma), im(-ra * s)) * C64::from(k);
    let forms = NullTetrad { l: lf, n: nf, m: mf, mbar: mf.map(|w| w.conj()), variance: Variance::Forms, chart };
    (vectors, forms)
}

/// Closed-form orthonormal EF frame `u_(a)` as vectors and forms.
pub fn orthonormal_u_ef(point: &BLPoint, params: &SpacetimeParams) -> (OrthonormalTetrad, OrthonormalTetrad) {
    let EfScalars { delta, sigma, rp, a, s, ra } = ef_scalars(point, params);
    let rs = sigma.sqrt();
    let k = 1.0 / (2.0 * rs * rp);
    let rp2 = rp * rp;
    let chart = Chart::EddingtonFinkelstein;
    let vectors = OrthonormalTetrad {
        u: [
            Vector4::new(2.0 * ra - delta + rp2, delta - rp2, 0.0, 2.0 * a) * k,
            Vector4::new(0.0, 0.0, 1.0 / rs, 0.0),
            Vector4::new(a * s / rs, 0.0, 0.0, 1.0 / (s * rs)),
            Vector4::new(2.0 * ra - delta - rp2, delta + rp2, 0.0, 2.0 * a) * k,
        ],
        variance: Variance::Vectors,
        chart,
    };
    let s2 = s * s;
    let forms = OrthonormalTetrad {
        u: [
            Vector4::new(delta + rp2, delta - 2.0 * sigma + rp2, 0.0, -a * s2 * (delta + rp2)) * k,
            Vector4::new(0.0, 0.0, -rs, 0.0),
            Vector4::new(a * s / rs, a * s / rs, 0.0, -ra * s / rs),
            Vector4::new(delta - rp2, delta - 2.0 * sigma - rp2, 0.0, -a * s2 * (delta - rp2)) * k,
        ],
        variance: Variance::Forms,
        chart,
    };
    (vectors, forms)
}

/// Orthonormal BL frame built from the symmetric null tetrad.
pub fn orthonormal_u_bl(point: &BLPoint, params: &SpacetimeParams) -> Result<OrthonormalTetrad> {
    Ok(orthonormal_from_null(&symmetric_bl_tetrad(point, params)?))
}

/// Max absolute difference between two null tetrads of equal chart and variance.
pub fn tetrad_distance(a: &NullTetrad, b: &NullTetrad) -> Result<f64> {
    if a.chart != b.chart || a.variance != b.variance {
        return Err(Error::Mismatch("tetrads differ in chart or variance".into()));
    }
    let d = (a.l - b.l).amax().max((a.n - b.n).amax());
    let dm = (a.m - b.m).iter().chain((a.mbar - b.mbar).iter()).map(|z| z.norm()).fold(0.0, f64::max);
    Ok(d.max(dm))
}

/// Columns are the frame vectors.
pub fn frame_matrix(t: &OrthonormalTetrad) -> Matrix4<f64> {
    Matrix4::from_columns(&t.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric;

    fn kn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6, 0.3).unwrap()
    }

    fn minkowski() -> MetricComponents {
        MetricComponents { chart: Chart::BoyerLindquist, g: Matrix4::from_diagonal(&Vector4::from(ETA)) }
    }

    #[test]
    fn gram_schmidt_identity() {
        let g = minkowski();
        let frame = [Vector4::x(), Vector4::y(), Vector4::z(), Vector4::w()];
        let t = gram_schmidt_tetrad(frame, &g).unwrap();
        assert!((frame_matrix(&t) - Matrix4::identity()).amax() < 1e-15);
    }

    #[test]
    fn gram_schmidt_ef_coordinate_frame() {
        let p = kn();
        let pt = BLPoint::new(3.0, 1.0).unwrap();
        let g = metric(&pt, Chart::EddingtonFinkelstein, &p).unwrap();
        let frame = [Vector4::x(), Vector4::y(), Vector4::z(), Vector4::w()];
        let t = gram_schmidt_tetrad(frame, &g).unwrap();
        assert!(dyad_residual(&t, &g).unwrap() < 1e-10);
        let again = gram_schmidt_tetrad(t.u, &g).unwrap();
        assert!((frame_matrix(&again) - frame_matrix(&t)).amax() < 1e-10);
    }

    #[test]
    fn gram_schmidt_rejects_spacelike_first() {
        let g = minkowski();
        let frame = [Vector4::y(), Vector4::x(), Vector4::z(), Vector4::w()];
        assert!(gram_schmidt_tetrad(frame, &g).is_err());
    }

    #[test]
    fn minkowski_null_tetrad() {
        let ot = OrthonormalTetrad {
            u: [Vector4::x(), Vector4::y(), Vector4::z(), Vector4::w()],
            variance: Variance::Vectors,
            chart: Chart::BoyerLindquist,
        };
        let nt = null_from_orthonormal(&ot);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((nt.l - Vector4::new(s, 0.0, 0.0, s)).amax() < 1e-15);
        assert!((nt.n - Vector4::new(s, 0.0, 0.0, -s)).amax() < 1e-15);
        assert!((nt.m[1] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((nt.m[2] - C64::new(0.0, s)).norm() < 1e-15);
        assert!(np_residual(&nt, &minkowski()).unwrap() < 1e-15);
    }

    #[test]
    fn ef_tetrad_np_conditions_including_horizon() {
        let p = kn();
        let rp = p.horizons().r_plus;
        for &r in &[3.0, rp, 1.0, 0.5] {
            let pt = BLPoint::new(r, 1.1).unwrap();
            let g = metric(&pt, Chart::EddingtonFinkelstein, &p).unwrap();
            let (v, f) = ef_null_tetrad(&pt, &p);
            assert!(np_residual(&v, &g).unwrap() < 1e-10, "r={r}");
            assert!(np_residual(&f, &g).unwrap() < 1e-10, "r={r}");
            let lowered = change_variance(&v, &g).unwrap();
            assert!(tetrad_distance(&lowered, &f).unwrap() < 1e-10, "r={r}");
        }
    }

    #[test]
    fn ef_tetrad_schwarzschild_l() {
        let p = SpacetimeParams::new(1.0, 0.0, 0.0).unwrap();
        let pt = BLPoint::new(2.0, 1.0).unwrap();
        let (v, _) = ef_null_tetrad(&pt, &p);
        let k = 1.0 / (2.0 * 4.0f64).sqrt() / 2.0;
        assert!((v.l - Vector4::new(8.0 * k, 0.0, 0.0, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn construction_chain_reproduces_ef_tetrad() {
        let p = kn();
        for &(r, th) in &[(3.0, 1.0), (7.5, 0.4), (1.0, 2.2)] {
            let pt = BLPoint::new(r, th).unwrap();
            let sym = symmetric_bl_tetrad(&pt, &p).unwrap();
            let ef = bl_vectors_to_ef(&sym, r, &p).unwrap();
            let c = C64::new(p.delta(r).abs().sqrt() / p.horizons().r_plus, 0.0);
            let rotated = class3_rotation(&ef, c).unwrap();
            let (closed, _) = ef_null_tetrad(&pt, &p);
            assert!(tetrad_distance(&rotated, &closed).unwrap() < 1e-10, "r={r}");
        }
    }

    #[test]
    fn interior_symmetric_tetrad_flips_n() {
        let p = kn();
        let pt = BLPoint::new(1.0, 1.0).unwrap();
        let t = symmetric_bl_tetrad(&pt, &p).unwrap();
        let g = metric(&pt, Chart::BoyerLindquist, &p).unwrap();
        assert!(np_residual(&t, &g).unwrap() < 1e-10);
        assert!(t.n[0] < 0.0);
        assert!(symmetric_bl_tetrad(&BLPoint::new(p.horizons().r_plus, 1.0).unwrap(), &p).is_err());
    }

    #[test]
    fn orthonormal_closed_forms_match_composition() {
        let p = kn();
        for &(r, th) in &[(3.0, 1.0), (p.horizons().r_plus, 0.5), (0.6, 2.5)] {
            let pt = BLPoint::new(r, th).unwrap();
            let (v, f) = ef_null_tetrad(&pt, &p);
            let (uv, uf) = orthonormal_u_ef(&pt, &p);
            let cv = orthonormal_from_null(&v);
            let cf = orthonormal_from_null(&f);
            assert!((frame_matrix(&uv) - frame_matrix(&cv)).amax() < 1e-10);
            assert!((frame_matrix(&uf) - frame_matrix(&cf)).amax() < 1e-10);
            let g = metric(&pt, Chart::EddingtonFinkelstein, &p).unwrap();
            assert!(dyad_residual(&uv, &g).unwrap() < 1e-10);
            assert!(dyad_residual(&uf, &g).unwrap() < 1e-10);
        }
    }

    #[test]
    fn u1_is_theta_direction() {
        let p = kn();
        let pt = BLPoint::new(2.5, 0.8).unwrap();
        let (uv, _) = orthonormal_u_ef(&pt, &p);
        let s = p.sigma(2.5, 0.8);
        assert_eq!(uv.u[1], Vector4::new(0.0, 0.0, 1.0 / s.sqrt(), 0.0));
    }

    #[test]
    fn mixed_charts_rejected() {
        let p = kn();
        let pt = BLPoint::new(3.0, 1.0).unwrap();
        let (v, _) = ef_null_tetrad(&pt, &p);
        let g = metric(&pt, Chart::BoyerLindquist, &p).unwrap();
        assert!(np_residual(&v, &g).is_err());
    }

    #[test]
    fn round_trip_null_orthonormal() {
        let p = kn();
        let pt = BLPoint::new(4.0, 1.3).unwrap();
        let (v, _) = ef_null_tetrad(&pt, &p);
        let back = null_from_orthonormal(&orthonormal_from_null(&v));
        assert!(tetrad_distance(&back, &v).unwrap() < 1e-12);
    }

    #[test]
    fn class3_identity_and_zero() {
        let p = kn();
        let (v, _) = ef_null_tetrad(&BLPoint::new(4.0, 1.3).unwrap(), &p);
        let same = class3_rotation(&v, C64::new(1.0, 0.0)).unwrap();
        assert!(tetrad_distance(&same, &v).unwrap() == 0.0);
        assert!(class3_rotation(&v, C64::new(0.0, 0.0)).is_err());
    }
}
