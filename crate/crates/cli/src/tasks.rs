//! The six subcommands. Each returns a [`Report`]; nothing here touches the
//! file system.

use std::f64::consts::PI;

use kndirac::angular_solver::{
    angular_eigenpairs, discretize_angular, inner_product, realness_residual, symmetry_defect, xi_continuation,
    AngularEigenpair, DiscretizationSpec,
};
use kndirac::dirac_algebra::{
    anticommutator_residual, assemble_stencil, b_term_closed, b_term_numeric, dirac_stencil, gamma_weyl,
    general_dirac_matrices, transform_stencil, transform_stencil_fd, transformed_closed, M4,
};
use kndirac::geometry::{metric, temporal_minors, BLPoint, Branch, Chart, RadialPoint, SpacetimeParams};
use kndirac::np_tetrad::{dyad_residual, ef_null_tetrad, np_residual, orthonormal_u_bl, orthonormal_u_ef};
use kndirac::radial_solver::horizon::{alpha, horizon_experiment, omega_minus, stripped, HorizonReport, HorizonRun};
use kndirac::radial_solver::infinity::{infinity_experiment, InfinityReport, InfinityRun};
use kndirac::radial_solver::{integrate, linspace, logspace, wronskian_drift, IntegrateOptions};
use kndirac::separation::{
    angular_rhs, mode_consistency_residual, radial_rhs_tilde, separation_residual, ModeParams, Sample2, V2,
};
use kndirac::Error;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{Check, Report, Table};
use crate::CliError;

pub const RADIAL_TOL: f64 = 1e-10;
pub const ASYMPTOTIC_TOL: f64 = 1e-12;

/// Verification thresholds shared with the acceptance harness.
pub mod limits {
    pub const CLIFFORD: f64 = 1e-9;
    pub const TETRAD: f64 = 1e-10;
    pub const B_TERM: f64 = 1e-6;
    pub const B_TERM_STEP: f64 = 1e-5;
    pub const FD_ORDER: (f64, f64) = (1.7, 2.3);
    pub const STENCIL: f64 = 1e-10;
    pub const CONJUGATION_FD: f64 = 1e-6;
    pub const SEPARATION: f64 = 1e-8;
    pub const ANGULAR: f64 = 1e-8;
    pub const GAP: f64 = 1e-6;
    pub const SLOPE: (f64, f64) = (-1.3, -0.7);
    pub const ABLATED_SLOPE: f64 = -0.3;
    pub const RATE: f64 = 0.1;
    /// Wronskian drift in units of the integration tolerance.
    pub const DRIFT: f64 = 10.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Horizons,
    TetradCheck,
    DiracVerify,
    Angular,
    Radial,
    Asymptotics,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Horizons => "horizons",
            Task::TetradCheck => "tetrad-check",
            Task::DiracVerify => "dirac-verify",
            Task::Angular => "angular",
            Task::Radial => "radial",
            Task::Asymptotics => "asymptotics",
        }
    }
}

pub fn run_task(task: Task, cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let wrap = |e: Error| CliError::from_core(task.name(), e);
    match task {
        Task::Horizons => horizons(cfg).map_err(wrap),
        Task::TetradCheck => tetrad_check(cfg).map_err(wrap),
        Task::DiracVerify => dirac_verify(cfg).map_err(wrap),
        Task::Angular => angular(cfg).map_err(wrap),
        Task::Radial => radial(cfg).map_err(wrap),
        Task::Asymptotics => asymptotics(cfg).map_err(wrap),
    }
}

type Res<T> = std::result::Result<T, Error>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Fills in ξ from the angular spectrum where the config leaves it open.
pub fn resolve_modes(cfg: &RunConfig, p: &SpacetimeParams) -> Res<Vec<ModeParams>> {
    let spec = DiscretizationSpec::new(cfg.angular.n)?;
    cfg.modes
        .iter()
        .map(|m| match m.xi {
            Some(xi) => ModeParams::new(m.omega, m.k, m.mass, xi),
            None => {
                let probe = ModeParams::new(m.omega, m.k, m.mass, 0.0)?;
                let count = (2 * m.branch_index.unsigned_abs() as usize + 2).min(spec.n);
                let pairs = angular_eigenpairs(&probe, p, &spec, count)?;
                let xi = pairs
                    .iter()
                    .find(|e| e.n == m.branch_index)
                    .map(|e| e.xi)
                    .ok_or_else(|| Error::InvalidParameter(format!("no angular branch {}", m.branch_index)))?;
                Ok(probe.with_xi(xi))
            }
        })
        .collect()
}

/// A random point on either side of `r₊`, clear of both horizons.
pub fn random_point(rng: &mut impl Rng, p: &SpacetimeParams) -> Res<BLPoint> {
    let h = p.horizons();
    let exterior = h.r_minus <= 0.0 || rng.random::<bool>();
    let r = if exterior {
        h.r_plus * (1.0 + 1e-3 + 30.0 * rng.random::<f64>())
    } else {
        h.r_minus + h.width() * rng.random_range(0.02..0.98)
    };
    BLPoint::new(r, rng.random_range(0.05..PI - 0.05))
}

fn maxabs(m: &M4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn horizons(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.spacetime().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let h = p.horizons();
    let cauchy = h.r_minus > 0.0;
    let record = json!({
        "params": p,
        "r_plus": h.r_plus,
        "r_minus": h.r_minus,
        "width": h.width(),
        "alpha": if cauchy { Some(alpha(&p)) } else { None },
        "omega_minus": if cauchy { Some(omega_minus(&p)) } else { None },
    });
    let mut t = Table::new("horizons_tortoise", &["branch", "r", "r_star"]);
    for off in logspace(1e-6 * h.r_plus, 100.0 * p.mass, 61) {
        let pt = RadialPoint::from_offset(Branch::Exterior, off, &p);
        t.push(vec!["exterior".into(), pt.r.into(), pt.tortoise(&p).into()]);
    }
    if cauchy {
        for frac in linspace(0.01, 0.99, 49) {
            let pt = RadialPoint::from_offset(Branch::Interior, frac * h.width(), &p);
            t.push(vec!["interior".into(), pt.r.into(), pt.tortoise(&p).into()]);
        }
    }
    Ok(Report { task: "horizons".into(), record, checks: Vec::new(), tables: vec![t] })
}

fn tetrad_check(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.spacetime().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new(
        "tetrad_points",
        &["r", "theta", "np_vectors", "np_forms", "dyad_ef", "dyad_bl", "minor1", "minor2", "minor3"],
    );
    let (mut np, mut dyad, mut minor) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..cfg.verify.points {
        let pt = random_point(&mut rng, &p)?;
        let g_ef = metric(&pt, Chart::EddingtonFinkelstein, &p)?;
        let g_bl = metric(&pt, Chart::BoyerLindquist, &p)?;
        let (v, f) = ef_null_tetrad(&pt, &p);
        let (nv, nf) = (np_residual(&v, &g_ef)?, np_residual(&f, &g_ef)?);
        let (uv, _) = orthonormal_u_ef(&pt, &p);
        let de = dyad_residual(&uv, &g_ef)?;
        let db = dyad_residual(&orthonormal_u_bl(&pt, &p)?, &g_bl)?;
        let (d1, d2, d3) = temporal_minors(&pt, &p);
        np = np.max(nv).max(nf);
        dyad = dyad.max(de).max(db);
        minor = minor.min(d1).min(d2).min(d3);
        t.push([pt.r, pt.theta, nv, nf, de, db, d1, d2, d3].iter().map(|&x| x.into()).collect());
    }
    let checks = vec![
        Check::below("np_normalization", np, limits::TETRAD),
        Check::below("orthonormality", dyad, limits::TETRAD),
        Check::above("min_temporal_minor", minor, 0.0),
    ];
    let record = json!({ "points": cfg.verify.points, "max_np_residual": np, "max_dyad_residual": dyad, "min_minor": minor });
    Ok(Report { task: "tetrad-check".into(), record, checks, tables: vec![t] })
}

fn dirac_verify(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.spacetime().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mode = resolve_modes(cfg, &p)?[0];
    let gs = gamma_weyl();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new(
        "dirac_points",
        &["r", "theta", "clifford_ef", "clifford_bl", "b_term", "stencil", "conjugation", "conjugation_fd", "separation"],
    );
    let mut worst = [0.0f64; 7];
    for _ in 0..cfg.verify.points {
        let pt = random_point(&mut rng, &p)?;
        let (u, _) = orthonormal_u_ef(&pt, &p);
        let inv = |c| metric(&pt, c, &p)?.inverse().ok_or(Error::Singular { what: "metric", r: pt.r });
        let ce = anticommutator_residual(&general_dirac_matrices(&u, &gs)?, &inv(Chart::EddingtonFinkelstein)?);
        let cb = anticommutator_residual(&general_dirac_matrices(&orthonormal_u_bl(&pt, &p)?, &gs)?, &inv(Chart::BoyerLindquist)?);
        let b = maxabs(&(b_term_numeric(&pt, &p, limits::B_TERM_STEP, &gs) - b_term_closed(&pt, &p, &gs)));
        let st = dirac_stencil(&pt, &p, mode.mass);
        let sa = assemble_stencil(&pt, &p, mode.mass, &gs)?.max_diff(&st) / st.scale().max(1.0);
        let closed = transformed_closed(&pt, &p, mode.mass)?;
        let conj = transform_stencil(&st, &p)?.max_diff(&closed) / closed.scale().max(1.0);
        let conj_fd = transform_stencil_fd(&st, &p, 1e-5)?.max_diff(&closed);
        let sep = manufactured_separation(&mode, &p, &pt, &mut rng)?;
        let row = [ce, cb, b, sa, conj, conj_fd, sep];
        for (w, v) in worst.iter_mut().zip(row) {
            *w = w.max(v);
        }
        let mut cells = vec![pt.r.into(), pt.theta.into()];
        cells.extend(row.iter().map(|&x| x.into()));
        t.push(cells);
    }
    let order = b_term_order(&p, &gs)?;
    let (lo, hi) = limits::FD_ORDER;
    let checks = vec![
        Check::below("clifford_ef", worst[0], limits::CLIFFORD),
        Check::below("clifford_bl", worst[1], limits::CLIFFORD),
        Check::below("b_term", worst[2], limits::B_TERM),
        Check::within("b_term_fd_order", order, lo, hi),
        Check::below("stencil_agreement", worst[3], limits::STENCIL),
        Check::below("conjugation_closed", worst[4], limits::STENCIL),
        Check::below("conjugation_fd", worst[5], limits::CONJUGATION_FD),
        Check::below("separation", worst[6], limits::SEPARATION),
    ];
    let record = json!({
        "points": cfg.verify.points,
        "mode": mode,
        "max_clifford_ef": worst[0],
        "max_clifford_bl": worst[1],
        "max_b_term": worst[2],
        "b_term_fd_order": order,
        "max_stencil_diff": worst[3],
        "max_conjugation": worst[4],
        "max_conjugation_fd": worst[5],
        "max_separation": worst[6],
    });
    Ok(Report { task: "dirac-verify".into(), record, checks, tables: vec![t] })
}

/// Observed order of the differenced spin-connection term from steps
/// `h` and `h/2`, large enough that truncation dominates rounding.
pub fn b_term_order(p: &SpacetimeParams, gs: &kndirac::dirac_algebra::GammaSet) -> Res<f64> {
    let pt = BLPoint::new(2.5 * p.horizons().r_plus, 0.9)?;
    let exact = b_term_closed(&pt, p, gs);
    let e1 = maxabs(&(b_term_numeric(&pt, p, 1e-2, gs) - exact));
    let e2 = maxabs(&(b_term_numeric(&pt, p, 5e-3, gs) - exact));
    Ok((e1 / e2).log2())
}

/// Separated ansatz built from random data that solves the radial and
/// angular equations pointwise; returns the larger relative residual.
pub fn manufactured_separation(mode: &ModeParams, p: &SpacetimeParams, pt: &BLPoint, rng: &mut impl Rng) -> Res<f64> {
    let mut c = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let xf = V2::new(c(), c());
    let yf = V2::new(c(), c());
    let x = Sample2 { f: xf, df: radial_rhs_tilde(pt.r, &xf, mode, p)? };
    let y = Sample2 { f: yf, df: angular_rhs(pt.theta, &yf, mode, p) };
    let scale = 1.0 + x.df.norm() + y.df.norm();
    let s = separation_residual(mode, &x, &y, pt, p)?;
    let m = mode_consistency_residual(mode, &x, &y, pt, p)?;
    Ok(s.max(m) / scale)
}

/// Spectrum diagnostics for one mode at basis size `n`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectrumCheck {
    pub xi: Vec<f64>,
    pub xi_refined: Vec<f64>,
    pub realness: f64,
    pub symmetry: f64,
    pub gram: f64,
    pub convergence: f64,
    pub min_gap: f64,
    #[serde(skip)]
    pub pairs: Vec<AngularEigenpair>,
}

pub fn spectrum_check(mode: &ModeParams, p: &SpacetimeParams, n: usize, count: usize) -> Res<SpectrumCheck> {
    let spec = DiscretizationSpec::new(n)?;
    let h = discretize_angular(mode, p, &spec)?;
    let pairs = angular_eigenpairs(mode, p, &spec, count)?;
    let refined = angular_eigenpairs(mode, p, &DiscretizationSpec::new(2 * n)?, count)?;
    let nodes = 2 * n + 2 * mode.k.abs().ceil() as usize + 40;
    let mut gram = 0.0f64;
    for (i, y) in pairs.iter().enumerate() {
        for (j, z) in pairs.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            gram = gram.max((inner_product(y, z, nodes) - target).abs());
        }
    }
    let convergence = pairs.iter().zip(&refined).map(|(a, b)| (a.xi - b.xi).abs()).fold(0.0, f64::max);
    let min_gap = pairs.windows(2).map(|w| w[1].xi - w[0].xi).fold(f64::INFINITY, f64::min);
    Ok(SpectrumCheck {
        xi: pairs.iter().map(|e| e.xi).collect(),
        xi_refined: refined.iter().map(|e| e.xi).collect(),
        realness: realness_residual(&h),
        symmetry: symmetry_defect(&h),
        gram,
        convergence,
        min_gap,
        pairs,
    })
}

/// Forward and reversed continuation of one branch; returns both sweeps
/// (the reversed one flipped back) and their largest difference.
pub fn sweep_reversal(
    mode: &ModeParams,
    p: &SpacetimeParams,
    omegas: &[f64],
    n: usize,
    branch: i32,
) -> Res<(Vec<f64>, Vec<f64>, f64)> {
    let spec = DiscretizationSpec::new(n)?;
    let fwd = xi_continuation(mode, p, omegas, &spec, branch)?;
    // Start the reversed sweep on the branch the forward sweep ended on.
    let end = *fwd.last().expect("non-empty sweep");
    let rev_omegas: Vec<f64> = omegas.iter().rev().cloned().collect();
    let last = ModeParams { omega: rev_omegas[0], ..*mode };
    let count = (2 * branch.unsigned_abs() as usize + 4).min(spec.n);
    let start = angular_eigenpairs(&last, p, &spec, count)?
        .into_iter()
        .min_by(|a, b| (a.xi - end).abs().total_cmp(&(b.xi - end).abs()))
        .map(|e| e.n)
        .ok_or_else(|| Error::Degenerate("empty spectrum".into()))?;
    let mut rev = xi_continuation(mode, p, &rev_omegas, &spec, start)?;
    rev.reverse();
    let diff = fwd.iter().zip(&rev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((fwd, rev, diff))
}

fn angular(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.spacetime().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let modes = resolve_modes(cfg, &p)?;
    let g = &cfg.angular;
    let mut spectrum = Table::new("angular_spectrum", &["mode", "n", "xi", "xi_refined"]);
    let mut funcs = Table::new("angular_eigenfunctions", &["mode", "n", "theta", "re_y1", "im_y1", "re_y2", "im_y2"]);
    let mut sweep_table = Table::new("angular_sweep", &["mode", "omega", "xi_forward", "xi_reversed"]);
    let mut checks = Vec::new();
    let mut records = Vec::new();
    let thetas = linspace(0.0, PI, g.theta_samples);
    for (i, mode) in modes.iter().enumerate() {
        let sc = spectrum_check(mode, &p, g.n, g.count)?;
        for (e, xr) in sc.pairs.iter().zip(&sc.xi_refined) {
            spectrum.push(vec![(i as i64).into(), (e.n as i64).into(), e.xi.into(), (*xr).into()]);
            for (th, y1, y2) in e.sample(&thetas) {
                funcs.push(vec![(i as i64).into(), (e.n as i64).into(), th.into(), y1.re.into(), y1.im.into(), y2.re.into(), y2.im.into()]);
            }
        }
        let tag = |s: &str| format!("mode{i}.{s}");
        checks.push(Check::below(tag("realness"), sc.realness, limits::ANGULAR));
        checks.push(Check::below(tag("gram"), sc.gram, limits::ANGULAR));
        checks.push(Check::below(tag("self_convergence"), sc.convergence, limits::ANGULAR));
        checks.push(Check::above(tag("min_gap"), sc.min_gap, limits::GAP));
        let mut rec = json!({ "mode": mode, "n": g.n, "spectrum": sc, "labels": sc.pairs.iter().map(|e| e.n).collect::<Vec<_>>() });
        if let Some((a, b, n)) = g.sweep {
            let omegas = linspace(a, b, n);
            let (fwd, rev, diff) = sweep_reversal(mode, &p, &omegas, g.n, cfg.modes[i].branch_index)?;
            for ((w, f), r) in omegas.iter().zip(&fwd).zip(&rev) {
                sweep_table.push(vec![(i as i64).into(), (*w).into(), (*f).into(), (*r).into()]);
            }
            checks.push(Check::below(tag("sweep_reversal"), diff, limits::ANGULAR));
            rec["sweep_reversal"] = json!(diff);
        }
        records.push(rec);
    }
    let mut tables = vec![spectrum, funcs];
    if g.sweep.is_some() {
        tables.push(sweep_table);
    }
    Ok(Report { task: "angular".into(), record: json!({ "modes": records }), checks, tables })
}

fn radial(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.spacetime().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let modes = resolve_modes(cfg, &p)?;
    let r = &cfg.radial;
    let tol = cfg.tol.unwrap_or(RADIAL_TOL);
    let outs = linspace(r.rstar_min, r.rstar_max, r.samples);
    let x0 = [V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)), V2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
    let mut t = Table::new("radial_trajectory", &["mode", "solution", "r_star", "r", "re_x1", "im_x1", "re_x2", "im_x2"]);
    let mut checks = Vec::new();
    let mut records = Vec::new();
    for (i, mode) in modes.iter().enumerate() {
        let traj = integrate(mode, &p, r.branch, r.rstar_min, &x0, &outs, &IntegrateOptions::with_tol(tol))?;
        let drift = wronskian_drift(&traj)?;
        for col in 0..traj.columns() {
            for row in traj.rows(col)? {
                let mut cells = vec![(i as i64).into(), (col as i64).into()];
                cells.extend(row.iter().map(|&x| x.into()));
                t.push(cells);
            }
        }
        checks.push(Check::below(format!("mode{i}.wronskian_drift"), drift, limits::DRIFT * tol));
        records.push(json!({ "mode": mode, "branch": r.branch, "tol": tol, "wronskian_drift": drift, "stats": traj.stats }));
    }
    Ok(Report { task: "radial".into(), record: json!({ "modes": records }), checks, tables: vec![t] })
}

enum Asymptotic {
    Infinity(Box<InfinityReport>),
    Horizon(Box<HorizonReport>),
}

fn asymptotics(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.spacetime().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let modes = resolve_modes(cfg, &p)?;
    let s = &cfg.asymptotics;
    let tol = cfg.tol.unwrap_or(ASYMPTOTIC_TOL);
    let inf_run = InfinityRun { u_start: s.u_start, u_end: s.u_end, samples: s.samples, tol, ..Default::default() };
    let hor_run = HorizonRun { end_over_alpha: s.end_over_alpha, spacing_over_alpha: s.spacing_over_alpha, tol, ..Default::default() };
    let mut jobs = Vec::new();
    for (i, m) in modes.iter().enumerate() {
        if s.infinity && m.omega.abs() > m.mass {
            jobs.push((i, true));
        }
        if s.horizon && p.horizons().r_minus > 0.0 {
            jobs.push((i, false));
        }
    }
    // Independent runs in parallel; results are collected in job order.
    let results: Vec<Res<Asymptotic>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(i, inf)| {
                let (m, p) = (&modes[i], &p);
                scope.spawn(move || {
                    if inf {
                        infinity_experiment(m, p, &inf_run).map(|r| Asymptotic::Infinity(Box::new(r)))
                    } else {
                        horizon_experiment(m, p, &hor_run).map(|r| Asymptotic::Horizon(Box::new(r)))
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("asymptotic worker panicked")).collect()
    });

    let mut inf_table = Table::new("asymptotics_infinity", &["mode", "model", "u", "residual"]);
    let mut hor_table = Table::new("asymptotics_horizon", &["mode", "r_star", "re_h1", "im_h1", "re_h2", "im_h2"]);
    let mut checks = Vec::new();
    let mut records = Vec::new();
    let (slo, shi) = limits::SLOPE;
    for (&(i, _), res) in jobs.iter().zip(results) {
        let tag = |s: &str| format!("mode{i}.{s}");
        match res? {
            Asymptotic::Infinity(r) => {
                for (model, fit) in [("full", &r.fit), ("no_log", &r.ablated)] {
                    for &(u, e) in &fit.residuals {
                        inf_table.push(vec![(i as i64).into(), model.into(), u.into(), e.into()]);
                    }
                }
                checks.push(Check::within(tag("infinity_slope"), r.fit.slope, slo, shi));
                checks.push(Check::above(tag("ablated_slope"), r.ablated.slope, limits::ABLATED_SLOPE));
                checks.push(Check::below(tag("infinity_drift"), r.wronskian_drift, limits::DRIFT * tol));
                records.push(json!({
                    "kind": "infinity",
                    "mode_index": i,
                    "mode": r.mode,
                    "run": r.run,
                    "slope": r.fit.slope,
                    "ablated_slope": r.ablated.slope,
                    "asymptotics": r.fit.asymptotics,
                    "tail_variation": r.fit.tail_variation,
                    "wronskian_drift": r.wronskian_drift,
                    "stats": r.trajectory.stats,
                }));
            }
            Asymptotic::Horizon(r) => {
                let stride = (r.trajectory.samples.len() / 400).max(1);
                for smp in r.trajectory.samples.iter().step_by(stride) {
                    let h = stripped(smp, 0, &r.mode, &r.params);
                    hor_table.push(vec![(i as i64).into(), smp.r_star.into(), h[0].re.into(), h[0].im.into(), h[1].re.into(), h[1].im.into()]);
                }
                checks.push(Check::below(tag("horizon_rate"), r.fit.rate_error(), limits::RATE));
                checks.push(Check::below(tag("horizon_cauchy_rate"), r.fit.cauchy_rate_error(), limits::RATE));
                checks.push(Check::below(tag("horizon_drift"), r.wronskian_drift, limits::DRIFT * tol));
                records.push(json!({
                    "kind": "horizon",
                    "mode_index": i,
                    "mode": r.mode,
                    "run": r.run,
                    "fit": r.fit,
                    "wronskian_drift": r.wronskian_drift,
                    "stats": r.trajectory.stats,
                }));
            }
        }
    }
    let record = json!({ "params": p, "tol": tol, "runs": records });
    Ok(Report { task: "asymptotics".into(), record, checks, tables: vec![inf_table, hor_table] })
}

/// The config echo, without the output directory so that runs into
/// different directories produce identical files.
pub fn config_value(cfg: &RunConfig) -> Value {
    let mut v = to_value(cfg);
    if let Some(m) = v.as_object_mut() {
        m.remove("out");
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig { verify: crate::config::VerifyConfig { points: 5 }, ..Default::default() }
    }

    #[test]
    fn horizons_example() {
        let mut c = cfg();
        c.params.a = 0.6;
        c.params.charge = 0.0;
        let r = run_task(Task::Horizons, &c).unwrap();
        assert!((r.record["r_minus"].as_f64().unwrap() - 0.2).abs() < 1e-15);
        assert!((r.record["r_plus"].as_f64().unwrap() - 1.8).abs() < 1e-15);
    }

    #[test]
    fn schwarzschild_has_no_inner_horizon_rows() {
        let mut c = cfg();
        c.params.a = 0.0;
        c.params.charge = 0.0;
        let r = run_task(Task::Horizons, &c).unwrap();
        assert!(r.record["alpha"].is_null());
        assert!(r.tables[0].rows.iter().all(|row| row[0] == "exterior".into()));
    }

    #[test]
    fn verification_tasks_pass() {
        for t in [Task::TetradCheck, Task::DiracVerify] {
            let r = run_task(t, &cfg()).unwrap();
            assert!(r.passed(), "{:?}", r.checks);
        }
    }

    #[test]
    fn xi_from_spectrum() {
        let c = cfg();
        let p = c.spacetime().unwrap();
        let m = resolve_modes(&c, &p).unwrap()[0];
        assert!(m.xi > 0.0);
        let spec = DiscretizationSpec::new(c.angular.n).unwrap();
        let pairs = angular_eigenpairs(&m, &p, &spec, 4).unwrap();
        assert!(pairs.iter().any(|e| e.n == 1 && e.xi == m.xi));
    }

    #[test]
    fn radial_short_run_passes() {
        let mut c = cfg();
        c.radial.rstar_max = 10.0;
        c.radial.samples = 11;
        let r = run_task(Task::Radial, &c).unwrap();
        assert!(r.passed());
        assert_eq!(r.tables[0].rows.len(), 22);
    }

    #[test]
    fn numerical_failure_is_reported() {
        let c = cfg();
        let p = c.spacetime().unwrap();
        let m = resolve_modes(&c, &p).unwrap()[0];
        let o = IntegrateOptions { tol: 1e-6, max_steps: 10 };
        let x0 = [V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))];
        let e = integrate(&m, &p, Branch::Exterior, -1e6, &x0, &[-1e6, 1e6], &o).unwrap_err();
        assert!(matches!(CliError::from_core("radial", e), CliError::Numerical { .. }));
    }
}
