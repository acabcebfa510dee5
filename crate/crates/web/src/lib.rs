//! Browser bindings: three small operations returning JSON strings.
//!
//! The `*_json` functions hold the logic and run natively; the exported
//! wrappers only turn errors into JS exceptions.

use kndirac::angular_solver::{angular_eigenpairs, DiscretizationSpec};
use kndirac::geometry::{Branch, RadialPoint, SpacetimeParams};
use kndirac::radial_solver::horizon::alpha;
use kndirac::radial_solver::{integrate, linspace, logspace, wronskian_drift, IntegrateOptions};
use kndirac::separation::{ModeParams, V2};
use num_complex::Complex64 as C64;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn params(m: f64, a: f64, q: f64) -> Result<SpacetimeParams, String> {
    SpacetimeParams::new(m, a, q).map_err(|e| e.to_string())
}

/// Horizon radii and `r⋆(r)` on both branches.
pub fn horizons_json(m: f64, a: f64, q: f64) -> Result<String, String> {
    let p = params(m, a, q)?;
    let h = p.horizons();
    let curve = |branch: Branch, offsets: Vec<f64>| -> Vec<[f64; 2]> {
        offsets
            .into_iter()
            .map(|o| {
                let pt = RadialPoint::from_offset(branch, o, &p);
                [pt.r, pt.tortoise(&p)]
            })
            .collect()
    };
    let exterior = curve(Branch::Exterior, logspace(1e-4 * h.r_plus, 20.0 * m, 120));
    let interior = if h.r_minus > 0.0 { curve(Branch::Interior, linspace(0.01, 0.99, 60).iter().map(|f| f * h.width()).collect()) } else { Vec::new() };
    Ok(json!({
        "r_plus": h.r_plus,
        "r_minus": h.r_minus,
        "alpha": if h.r_minus > 0.0 { Some(alpha(&p)) } else { None },
        "exterior": exterior,
        "interior": interior,
    })
    .to_string())
}

/// The `count` angular eigenvalues nearest zero with `Y` sampled on `[0, π]`.
#[allow(clippy::too_many_arguments)]
pub fn angular_json(m: f64, a: f64, q: f64, omega: f64, k: f64, mass: f64, n: usize, count: usize) -> Result<String, String> {
    let p = params(m, a, q)?;
    let mode = ModeParams::new(omega, k, mass, 0.0).map_err(|e| e.to_string())?;
    let spec = DiscretizationSpec::new(n).map_err(|e| e.to_string())?;
    let pairs = angular_eigenpairs(&mode, &p, &spec, count).map_err(|e| e.to_string())?;
    let thetas = linspace(0.0, std::f64::consts::PI, 91);
    let out: Vec<_> = pairs
        .iter()
        .map(|e| {
            let y: Vec<[f64; 3]> = e.sample(&thetas).into_iter().map(|(t, y1, y2)| [t, y1.re, y2.re]).collect();
            json!({ "n": e.n, "xi": e.xi, "y": y })
        })
        .collect();
    Ok(json!({ "pairs": out }).to_string())
}

/// `|X|` along one branch for the solution starting at `(1, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn radial_json(
    m: f64,
    a: f64,
    q: f64,
    omega: f64,
    k: f64,
    mass: f64,
    xi: f64,
    interior: bool,
    rstar_min: f64,
    rstar_max: f64,
) -> Result<String, String> {
    let p = params(m, a, q)?;
    let mode = ModeParams::new(omega, k, mass, xi).map_err(|e| e.to_string())?;
    if !(rstar_min < rstar_max) {
        return Err("need rstar_min < rstar_max".into());
    }
    let branch = if interior { Branch::Interior } else { Branch::Exterior };
    let outs = linspace(rstar_min, rstar_max, 301);
    let x0 = [V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)), V2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
    let traj = integrate(&mode, &p, branch, rstar_min, &x0, &outs, &IntegrateOptions::with_tol(1e-10))
        .map_err(|e| e.to_string())?;
    let rows: Vec<[f64; 4]> = traj.samples.iter().map(|s| [s.r_star, s.x[0][0].re, s.x[0][1].re, s.x[0].norm()]).collect();
    let drift = wronskian_drift(&traj).map_err(|e| e.to_string())?;
    Ok(json!({ "rows": rows, "wronskian_drift": drift, "steps": traj.stats.accepted }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn horizons(m: f64, a: f64, q: f64) -> Result<String, JsError> {
    js(horizons_json(m, a, q))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn angular(m: f64, a: f64, q: f64, omega: f64, k: f64, mass: f64, n: usize, count: usize) -> Result<String, JsError> {
    js(angular_json(m, a, q, omega, k, mass, n, count))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn radial(
    m: f64,
    a: f64,
    q: f64,
    omega: f64,
    k: f64,
    mass: f64,
    xi: f64,
    interior: bool,
    rstar_min: f64,
    rstar_max: f64,
) -> Result<String, JsError> {
    js(radial_json(m, a, q, omega, k, mass, xi, interior, rstar_min, rstar_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn horizons_values() {
        let v = parse(&horizons_json(1.0, 0.6, 0.0).unwrap());
        assert!((v["r_minus"].as_f64().unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(v["interior"].as_array().unwrap().len(), 60);
        assert!(horizons_json(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn angular_sorted() {
        let v = parse(&angular_json(1.0, 0.6, 0.3, 0.5, 0.5, 0.2, 24, 4).unwrap());
        let xi: Vec<f64> = v["pairs"].as_array().unwrap().iter().map(|p| p["xi"].as_f64().unwrap()).collect();
        assert!(xi.windows(2).all(|w| w[0] <= w[1]));
        assert!(angular_json(1.0, 0.6, 0.3, 0.5, 1.0, 0.2, 24, 4).is_err());
    }

    #[test]
    fn radial_runs() {
        let v = parse(&radial_json(1.0, 0.6, 0.3, 0.9, 0.5, 0.4, 1.2, false, -5.0, 20.0).unwrap());
        assert_eq!(v["rows"].as_array().unwrap().len(), 301);
        assert!(v["wronskian_drift"].as_f64().unwrap() < 1e-8);
    }
}
