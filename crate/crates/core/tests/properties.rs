use kndirac::angular_solver::{angular_eigenpairs, discretize_angular, symmetry_defect, DiscretizationSpec};
use kndirac::dirac_algebra::{anticommutator_residual, general_dirac_matrices, gamma_weyl};
use kndirac::geometry::{
    metric, temporal_minors, tortoise, tortoise_inverse_point, BLPoint, Branch, Chart, RadialPoint, SpacetimeParams,
};
use kndirac::np_tetrad::{orthonormal_u_bl, orthonormal_u_ef};
use kndirac::radial_solver::infinity::{boost_matrix, theta_boost, w_roots};
use kndirac::radial_solver::{integrate, linspace, wronskian_drift, IntegrateOptions};
use kndirac::separation::{
    angular_rhs, mode_consistency_residual, potential_at, potential_at_infinity, potential_trace, radial_rhs_tilde,
    separation_residual, ModeParams, Sample2, V2,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SpacetimeParams> {
    params_with(0.0)
}

/// Parameters with `√(a² + Q²) ≥ lo·M`, so a Cauchy horizon exists for `lo > 0`.
fn params_with(lo: f64) -> impl Strategy<Value = SpacetimeParams> {
    (0.5f64..2.0, lo..0.95, 0.0f64..std::f64::consts::FRAC_PI_2).prop_map(|(m, frac, ang)| {
        // a² + Q² = (frac M)², split by angle.
        let s = frac * m;
        SpacetimeParams::new(m, s * ang.cos(), s * ang.sin()).unwrap()
    })
}

fn mode() -> impl Strategy<Value = ModeParams> {
    (-2.0f64..2.0, -3i32..3, 0.0f64..1.5, -4.0f64..4.0)
        .prop_map(|(omega, kk, mass, xi)| ModeParams::new(omega, kk as f64 + 0.5, mass, xi).unwrap())
}

/// A radial location above `r₋` chosen by a fraction, avoiding the event horizon.
fn radius(p: &SpacetimeParams, frac: f64, exterior: bool) -> f64 {
    let h = p.horizons();
    if exterior {
        h.r_plus * (1.0 + 1e-3 + 30.0 * frac)
    } else {
        h.r_minus + h.width() * (0.02 + 0.96 * frac)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clifford_relation_in_both_charts(p in params(), frac in 0.0f64..1.0, ext in any::<bool>(), th in 0.05f64..3.09) {
        let pt = BLPoint::new(radius(&p, frac, ext), th).unwrap();
        let gs = gamma_weyl();
        let (u, _) = orthonormal_u_ef(&pt, &p);
        let g = general_dirac_matrices(&u, &gs).unwrap();
        let ginv = metric(&pt, Chart::EddingtonFinkelstein, &p).unwrap().inverse().unwrap();
        prop_assert!(anticommutator_residual(&g, &ginv) < 1e-9);
        let ub = orthonormal_u_bl(&pt, &p).unwrap();
        let gb = general_dirac_matrices(&ub, &gs).unwrap();
        let ginv_b = metric(&pt, Chart::BoyerLindquist, &p).unwrap().inverse().unwrap();
        prop_assert!(anticommutator_residual(&gb, &ginv_b) < 1e-9);
    }

    #[test]
    fn temporal_minors_positive(p in params(), frac in 0.0f64..1.0, ext in any::<bool>(), th in 0.01f64..3.13) {
        let pt = BLPoint::new(radius(&p, frac, ext), th).unwrap();
        let (d1, d2, d3) = temporal_minors(&pt, &p);
        prop_assert!(d1 > 0.0 && d2 > 0.0 && d3 > 0.0);
    }

    #[test]
    fn tortoise_round_trip(p in params(), frac in 0.0f64..1.0, ext in any::<bool>()) {
        let r = radius(&p, frac, ext);
        let u = tortoise(r, &p).unwrap();
        let branch = if ext { Branch::Exterior } else { Branch::Interior };
        let back = tortoise_inverse_point(u, branch, &p).unwrap();
        prop_assert!((back.r - r).abs() < 1e-10 * r.max(1.0));
    }

    #[test]
    fn manufactured_modes_separate(p in params(), m in mode(), frac in 0.0f64..1.0, ext in any::<bool>(), th in 0.05f64..3.09,
                                   xr in -1.0f64..1.0, xi in -1.0f64..1.0, yr in -1.0f64..1.0, yi in -1.0f64..1.0) {
        let pt = BLPoint::new(radius(&p, frac, ext), th).unwrap();
        let xf = V2::new(c(1.0, xr), c(xi, 0.5));
        let yf = V2::new(c(yr, 0.3), c(0.7, yi));
        let x = Sample2 { f: xf, df: radial_rhs_tilde(pt.r, &xf, &m, &p).unwrap() };
        let y = Sample2 { f: yf, df: angular_rhs(th, &yf, &m, &p) };
        let scale = 1.0 + x.df.norm() + y.df.norm();
        prop_assert!(separation_residual(&m, &x, &y, &pt, &p).unwrap() < 1e-11 * scale);
        prop_assert!(mode_consistency_residual(&m, &x, &y, &pt, &p).unwrap() < 1e-10 * scale);
    }

    #[test]
    fn potential_trace_and_bounds(p in params(), m in mode(), frac in 0.0f64..1.0, ext in any::<bool>()) {
        let pt = RadialPoint::from_r(radius(&p, frac, ext), &p).unwrap();
        let u = potential_at(&pt, &m, &p);
        prop_assert!((u.trace() - potential_trace(&pt, &m, &p)).norm() < 1e-12 * (1.0 + u.norm()));
        // Re tr U = 0: Abel's identity keeps |det| constant.
        prop_assert!(u.trace().re.abs() < 1e-14);
        // |Δ|/(r²+a²) ≤ 1 outside and ≤ (r₊−r₋)²/(4(r²+a²)) inside.
        let ra = pt.r * pt.r + p.a * p.a;
        let l = p.horizons().width();
        let d = (l * l / (4.0 * ra)).max(1.0);
        let bound = m.omega.abs() * (2.0 + d) + 2.0 * (m.k * p.a).abs() / ra + (m.xi.abs() + m.mass * pt.r) * (d / ra).sqrt();
        prop_assert!(u.iter().all(|z| z.norm() <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn potential_tends_to_limit(p in params(), m in mode()) {
        let far = tortoise_inverse_point(1e7, Branch::Exterior, &p).unwrap();
        let d = (potential_at(&far, &m, &p) - potential_at_infinity(&m)).norm();
        prop_assert!(d < 1e-5 * (1.0 + m.omega.abs() + m.mass + m.xi.abs() + m.k.abs()));
    }

    #[test]
    fn roots_and_boost(omega in -3.0f64..3.0, mass in 0.0f64..3.0) {
        prop_assume!((omega * omega - mass * mass).abs() > 1e-6 && (omega.abs() - mass).abs() > 1e-6);
        let (w1, w2) = w_roots(omega, mass).unwrap();
        prop_assert_eq!(w2, -w1);
        prop_assert!(w1.re >= 0.0 && w1.im >= 0.0);
        prop_assert!((w1 * w1 - c(omega * omega - mass * mass, 0.0)).norm() < 1e-12 * (1.0 + omega * omega));
        let b = boost_matrix(theta_boost(omega, mass).unwrap());
        prop_assert!((b.determinant() - c(1.0, 0.0)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn angular_matrix_symmetric_and_spectrum_real(p in params(), m in mode()) {
        let spec = DiscretizationSpec::new(16).unwrap();
        let h = discretize_angular(&m, &p, &spec).unwrap();
        prop_assert!(symmetry_defect(&h) < 1e-11 * (1.0 + h.amax()));
        let pairs = angular_eigenpairs(&m, &p, &spec, 4).unwrap();
        prop_assert!(pairs.windows(2).all(|w| w[0].xi <= w[1].xi));
        prop_assert!(pairs.iter().all(|e| e.xi != 0.0));
    }

    #[test]
    fn integration_is_linear_and_keeps_wronskian(p in params_with(0.3), m in mode(), cr in -2.0f64..2.0, ci in -2.0f64..2.0, ext in any::<bool>()) {
        let tol = 1e-10;
        let (branch, a, b) = if ext { (Branch::Exterior, -5.0, 25.0) } else { (Branch::Interior, -2.0, 8.0) };
        let outs = linspace(a, b, 16);
        let x0 = V2::new(c(1.0, 0.2), c(-0.4, 0.6));
        let x1 = V2::new(c(0.1, -0.3), c(0.9, 0.0));
        let k = c(cr, ci);
        let o = IntegrateOptions::with_tol(tol);
        let t = integrate(&m, &p, branch, a, &[x0, x1, x0 * k], &outs, &o).map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
        for s in &t.samples {
            prop_assert!((s.x[0] * k - s.x[2]).norm() <= 10.0 * tol * (1.0 + s.x[2].norm()));
        }
        // Global phase error accumulates per oscillation, so the bound is
        // 10·tol per period of the fastest diagonal rotation.
        let periods: f64 = t.samples.windows(2).map(|w| {
            let u = potential_at(&w[1].point(branch), &m, &p);
            u[(0, 0)].im.abs().max(u[(1, 1)].im.abs()) * (w[1].r_star - w[0].r_star)
        }).sum::<f64>() / std::f64::consts::TAU;
        // Growing solutions turn nearly parallel; the determinant then loses
        // digits to cancellation in proportion to ‖X‖‖Y‖/|det|.
        let cond = |s: &kndirac::radial_solver::RadialSample| {
            let det = s.x[0][0] * s.x[1][1] - s.x[0][1] * s.x[1][0];
            s.x[0].norm() * s.x[1].norm() / det.norm()
        };
        let c0 = cond(&t.samples[0]);
        let growth = t.samples.iter().map(|s| cond(s) / c0).fold(1.0, f64::max);
        // Beyond this the determinant is not resolvable in double precision.
        prop_assume!(growth < 1e8);
        prop_assert!(wronskian_drift(&t).unwrap() < 10.0 * tol * (1.0 + periods) * growth);
    }
}
