//! Gamma matrices, generalized Dirac matrices, the spin-connection term and
//! the Dirac operator as a pointwise first-order stencil.
//!
//! Representation: chiral, `γ⁰ = [[0, 1], [1, 0]]`, `γⁱ = [[0, σⁱ], [−σⁱ, 0]]`,
//! `γ⁵ = iγ⁰γ¹γ²γ³ = diag(−1, −1, 1, 1)`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{BLPoint, SpacetimeParams, PH, R, T, TH};
use crate::np_tetrad::{orthonormal_u_ef, OrthonormalTetrad, Variance, ETA};

pub type M4 = Matrix4<C64>;
pub type V4 = Vector4<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSet {
    pub gamma: [M4; 4],
    pub gamma5: M4,
}

fn block(tl: [[C64; 2]; 2], tr: [[C64; 2]; 2], bl: [[C64; 2]; 2], br: [[C64; 2]; 2]) -> M4 {
    let mut m = M4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = tl[i][j];
            m[(i, j + 2)] = tr[i][j];
            m[(i + 2, j)] = bl[i][j];
            m[(i + 2, j + 2)] = br[i][j];
        }
    }
    m
}

fn pauli() -> [[[C64; 2]; 2]; 3] {
    [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -I], [I, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ]
}

fn neg(m: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
}

const Z2: [[C64; 2]; 2] = [[ZERO, ZERO], [ZERO, ZERO]];
const I2: [[C64; 2]; 2] = [[ONE, ZERO], [ZERO, ONE]];

/// Chiral (Weyl) gamma matrices.
pub fn gamma_weyl() -> GammaSet {
    let s = pauli();
    let g0 = block(Z2, I2, I2, Z2);
    let gi = |k: usize| block(Z2, s[k], neg(s[k]), Z2);
    let gamma = [g0, gi(0), gi(1), gi(2)];
    let gamma5 = gamma[0] * gamma[1] * gamma[2] * gamma[3] * I;
    GammaSet { gamma, gamma5 }
}

/// The block matrices `γ⁰ = −[[0,1],[1,0]]`, `γⁱ = −[[0,σⁱ],[σⁱ,0]]` exactly as
/// printed in the source text. They do not satisfy the Clifford relation
/// (`(γⁱ)² = +1`) and are kept only so tests can document that.
pub fn gamma_as_printed() -> [M4; 4] {
    let s = pauli();
    let g0 = block(Z2, neg(I2), neg(I2), Z2);
    let gi = |k: usize| block(Z2, neg(s[k]), neg(s[k]), Z2);
    [g0, gi(0), gi(1), gi(2)]
}

/// `max |½{γᵃ, γᵇ} − ηᵃᵇ|`.
pub fn clifford_residual(gamma: &[M4; 4]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let ac = (gamma[a] * gamma[b] + gamma[b] * gamma[a]) * C64::new(0.5, 0.0);
            let target = if a == b { ETA[a] } else { 0.0 };
            let d = ac - M4::identity() * C64::new(target, 0.0);
            worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// `G^μ = u^μ_(a) γ^(a)`.
pub fn general_dirac_matrices(u: &OrthonormalTetrad, gs: &GammaSet) -> Result<[M4; 4]> {
    if u.variance != Variance::Vectors {
        return Err(Error::Mismatch("general Dirac matrices need frame vectors".into()));
    }
    let mut g = [M4::zeros(); 4];
    for (mu, gm) in g.iter_mut().enumerate() {
        for a in 0..4 {
            *gm += gs.gamma[a] * C64::new(u.u[a][mu], 0.0);
        }
    }
    Ok(g)
}

/// `max ‖½{G^μ, G^ν} − g^{μν} Id‖∞`.
pub fn anticommutator_residual(g_up: &[M4; 4], g_inv: &Matrix4<f64>) -> f64 {
    let mut worst = 0.0f64;
    for mu in 0..4 {
        for nu in mu..4 {
            let ac = (g_up[mu] * g_up[nu] + g_up[nu] * g_up[mu]) * C64::new(0.5, 0.0);
            let scale = g_inv[(mu, nu)].abs().max(1.0);
            let d = ac - M4::identity() * C64::new(g_inv[(mu, nu)], 0.0);
            worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale);
        }
    }
    worst
}

/// `√|g| = Σ sin θ` in the EF chart.
pub fn sqrt_abs_g(point: &BLPoint, params: &SpacetimeParams) -> f64 {
    params.sigma(point.r, point.theta) * point.theta.sin()
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Closed form of the spin-connection term
///
/// ```text
/// B = i(r−M)/(2√Σ r₊) (γ⁰+γ³) + i cotθ/(2√Σ) γ¹ − i a² cosθ sinθ/(2Σ^{3/2}) γ¹
///   + i r/(4Σ^{3/2} r₊) [(Δ−r₊²) γ⁰ + (Δ+r₊²) γ³]
///   + a cosθ/(4Σ^{3/2} r₊) [(Δ−r₊²) γ⁰γ⁵ + (Δ+r₊²) γ³γ⁵]
///   + r a sinθ/(2Σ^{3/2}) γ¹γ⁵
/// ```
pub fn b_term_closed(point: &BLPoint, params: &SpacetimeParams, gs: &GammaSet) -> M4 {
    let (r, th) = (point.r, point.theta);
    let (s, c) = th.sin_cos();
    let a = params.a;
    let m = params.mass;
    let delta = params.delta(r);
    let sigma = params.sigma(r, th);
    let rp = params.horizons().r_plus;
    let rs = sigma.sqrt();
    let s32 = sigma * rs;
    let rp2 = rp * rp;
    let [g0, g1, _, g3] = gs.gamma;
    let g5 = gs.gamma5;

    (g0 + g3) * C64::new(0.0, (r - m) / (2.0 * rs * rp))
        + g1 * C64::new(0.0, c / s / (2.0 * rs))
        - g1 * C64::new(0.0, a * a * c * s / (2.0 * s32))
        + (g0 * re(delta - rp2) + g3 * re(delta + rp2)) * C64::new(0.0, r / (4.0 * s32 * rp))
        + (g0 * g5 * re(delta - rp2) + g3 * g5 * re(delta + rp2)) * re(a * c / (4.0 * s32 * rp))
        + g1 * g5 * re(r * a * s / (2.0 * s32))
}

fn levi_civita() -> Vec<([usize; 4], f64)> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| p[i] != p[j]));
                    if !distinct {
                        continue;
                    }
                    let mut inv = 0;
                    for i in 0..4 {
                        for j in i + 1..4 {
                            if p[i] > p[j] {
                                inv += 1;
                            }
                        }
                    }
                    out.push((p, if inv % 2 == 0 { 1.0 } else { -1.0 }));
                }
            }
        }
    }
    out
}

/// Spin-connection term evaluated from its defining expression
///
/// `B = i/(2√|g|) ∂_μ(√|g| u^μ_(a)) γ^(a) − ¼ ε^{μαβδ} η^{ab} u_(a)α (∂_μ u_(b)β) u_(c)δ γ^(c) γ⁵`
///
/// with `ε^{μαβδ} = ε̃^{μαβδ}/√|g|`, `ε̃^{τrθφ} = +1`, and central differences
/// of step `h` in `r` and `θ` (nothing depends on `τ` or `φ`).
pub fn b_term_numeric(point: &BLPoint, params: &SpacetimeParams, h: f64, gs: &GammaSet) -> M4 {
    let (r, th) = (point.r, point.theta);
    let at = |r: f64, th: f64| {
        let p = BLPoint { r, theta: th };
        let (v, f) = orthonormal_u_ef(&p, params);
        (v, f, sqrt_abs_g(&p, params))
    };
    let (_, forms, sg) = at(r, th);
    let (vrp, frp, srp) = at(r + h, th);
    let (vrm, frm, srm) = at(r - h, th);
    let (vtp, ftp, stp) = at(r, th + h);
    let (vtm, ftm, stm) = at(r, th - h);
    let inv2h = 1.0 / (2.0 * h);

    let mut b = M4::zeros();
    for a in 0..4 {
        let div = (srp * vrp.u[a][R] - srm * vrm.u[a][R]) * inv2h
            + (stp * vtp.u[a][TH] - stm * vtm.u[a][TH]) * inv2h;
        b += gs.gamma[a] * C64::new(0.0, div / (2.0 * sg));
    }

    // du[μ][a][β] = ∂_μ u_(a)β
    let mut du = [[[0.0f64; 4]; 4]; 4];
    for a in 0..4 {
        for beta in 0..4 {
            du[R][a][beta] = (frp.u[a][beta] - frm.u[a][beta]) * inv2h;
            du[TH][a][beta] = (ftp.u[a][beta] - ftm.u[a][beta]) * inv2h;
        }
    }
    let mut slash = [M4::zeros(); 4]; // slash[δ] = u_(c)δ γ^(c) γ⁵
    for (delta, sl) in slash.iter_mut().enumerate() {
        for c in 0..4 {
            *sl += gs.gamma[c] * gs.gamma5 * re(forms.u[c][delta]);
        }
    }
    for (p, sign) in levi_civita() {
        let [mu, alpha, beta, delta] = p;
        if mu != R && mu != TH {
            continue;
        }
        let mut coef = 0.0;
        for a in 0..4 {
            coef += ETA[a] * forms.u[a][alpha] * du[mu][a][beta];
        }
        b -= slash[delta] * re(0.25 * sign / sg * coef);
    }
    b
}

/// A first-order operator `A_μ ∂_μ + A₀` at a point, `μ ∈ (τ, r, θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracStencil {
    pub coeff: [M4; 4],
    pub zeroth: M4,
    pub point: BLPoint,
}

impl DiracStencil {
    /// Zeroth-order matrix on a mode `e^{−iωτ} e^{−ikφ}`.
    pub fn mode_zeroth(&self, omega: f64, k: f64) -> M4 {
        self.zeroth - self.coeff[T] * C64::new(0.0, omega) - self.coeff[PH] * C64::new(0.0, k)
    }

    pub fn apply_mode(&self, omega: f64, k: f64, psi: &V4, dpsi_dr: &V4, dpsi_dth: &V4) -> V4 {
        self.mode_zeroth(omega, k) * psi + self.coeff[R] * dpsi_dr + self.coeff[TH] * dpsi_dth
    }

    pub fn max_diff(&self, other: &DiracStencil) -> f64 {
        let d = |a: &M4, b: &M4| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        (0..4).map(|i| d(&self.coeff[i], &other.coeff[i])).fold(d(&self.zeroth, &other.zeroth), f64::max)
    }

    pub fn scale(&self) -> f64 {
        self.coeff
            .iter()
            .chain(std::iter::once(&self.zeroth))
            .flat_map(|m| m.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `iG^μ∂_μ + B − m` from the generalized Dirac matrices and [`b_term_closed`].
pub fn assemble_stencil(point: &BLPoint, params: &SpacetimeParams, mass: f64, gs: &GammaSet) -> Result<DiracStencil> {
    let (u, _) = orthonormal_u_ef(point, params);
    let g = general_dirac_matrices(&u, gs)?;
    Ok(DiracStencil {
        coeff: g.map(|m| m * I),
        zeroth: b_term_closed(point, params, gs) - M4::identity() * re(mass),
        point: *point,
    })
}

/// Dirac operator `G − m` built entry by entry from the block form
///
/// ```text
///      ⎡ 0   0   α₁  β₋ ⎤
/// G = −⎢ 0   0   β₊  α₀ ⎥
///      ⎢ ᾱ₀  β̄₊  0   0  ⎥
///      ⎣ β̄₋  ᾱ₁  0   0  ⎦
/// ```
///
/// The entries `α, β` are written for the representation `γ → −γ`, hence the
/// overall sign. Zeroth-order parts of `β±` carry `a sinθ (r ∓ i a cosθ)`.
pub fn dirac_stencil(point: &BLPoint, params: &SpacetimeParams, mass: f64) -> DiracStencil {
    let (r, th) = (point.r, point.theta);
    let (s, c) = th.sin_cos();
    let a = params.a;
    let m = params.mass;
    let delta = params.delta(r);
    let sigma = params.sigma(r, th);
    let rp = params.horizons().r_plus;
    let rs = sigma.sqrt();
    let s32 = sigma * rs;
    let dl = C64::new(r, a * c);
    let dlb = dl.conj();
    let ra2 = 2.0 * (r * r + a * a) - delta;

    // [τ, r, θ, φ, 1]
    let al1 = [
        C64::new(0.0, -ra2 / (rs * rp)),
        C64::new(0.0, -delta / (rs * rp)),
        ZERO,
        C64::new(0.0, -2.0 * a / (rs * rp)),
        -I * (re(r - m) + dlb * (delta / (2.0 * sigma))) / (rs * rp),
    ];
    let al1b = [al1[0], al1[1], al1[2], al1[3], -I * (re(r - m) + dl * (delta / (2.0 * sigma))) / (rs * rp)];
    let al0 = [
        C64::new(0.0, -rp / rs),
        C64::new(0.0, rp / rs),
        ZERO,
        ZERO,
        I * dlb * (rp / (2.0 * s32)),
    ];
    let al0b = [al0[0], al0[1], al0[2], al0[3], I * dl * (rp / (2.0 * s32))];
    let beta0 = -(I * (c / s / 2.0) + dlb * (a * s / (2.0 * sigma))) / rs;
    let beta0b = (I * (c / s / 2.0) - dl * (a * s / (2.0 * sigma))) / rs;
    let bm = [re(-a * s / rs), ZERO, C64::new(0.0, -1.0 / rs), re(-1.0 / (s * rs)), beta0];
    let bp = [re(a * s / rs), ZERO, C64::new(0.0, -1.0 / rs), re(1.0 / (s * rs)), beta0];
    let bmb = [re(-a * s / rs), ZERO, C64::new(0.0, 1.0 / rs), re(-1.0 / (s * rs)), beta0b];
    let bpb = [re(a * s / rs), ZERO, C64::new(0.0, 1.0 / rs), re(1.0 / (s * rs)), beta0b];

    let mut mats = [M4::zeros(); 5];
    for (i, g) in mats.iter_mut().enumerate() {
        g[(0, 2)] = -al1[i];
        g[(0, 3)] = -bm[i];
        g[(1, 2)] = -bp[i];
        g[(1, 3)] = -al0[i];
        g[(2, 0)] = -al0b[i];
        g[(2, 1)] = -bpb[i];
        g[(3, 0)] = -bmb[i];
        g[(3, 1)] = -al1b[i];
    }
    mats[4] -= M4::identity() * re(mass);
    DiracStencil { coeff: [mats[0], mats[1], mats[2], mats[3]], zeroth: mats[4], point: *point }
}

/// Diagonals of `D = diag(δ̄^{1/2}, (δ̄|Δ|)^{1/2}, (δ|Δ|)^{1/2}, δ^{1/2})` and
/// `Γ = −i diag(δ, −δ, −δ̄, δ̄)`, `δ = r + i a cosθ`, principal roots.
pub fn transform_diagonals(point: &BLPoint, params: &SpacetimeParams) -> Result<(V4, V4)> {
    let (r, th) = (point.r, point.theta);
    let delta = params.delta(r);
    if params.on_horizon(r) {
        return Err(Error::Singular { what: "D transformation", r });
    }
    let ad = delta.abs();
    let dl = C64::new(r, params.a * th.cos());
    let dlb = dl.conj();
    let d = V4::new(dlb.sqrt(), (dlb * ad).sqrt(), (dl * ad).sqrt(), dl.sqrt());
    let gamma = V4::new(dl, -dl, -dlb, dlb) * (-I);
    Ok((d, gamma))
}

/// `∂_r ln dⱼ` and `∂_θ ln dⱼ` for the diagonal of `D`.
fn log_derivatives(point: &BLPoint, params: &SpacetimeParams) -> (V4, V4) {
    let (r, th) = (point.r, point.theta);
    let (s, c) = th.sin_cos();
    let a = params.a;
    let dl = C64::new(r, a * c);
    let dlb = dl.conj();
    let dd = (r - params.mass) / params.delta(r); // ½ Δ'/Δ
    let half = C64::new(0.5, 0.0);
    let r_dl = half / dl;
    let r_dlb = half / dlb;
    let t_dl = half * C64::new(0.0, -a * s) / dl;
    let t_dlb = half * C64::new(0.0, a * s) / dlb;
    (
        V4::new(r_dlb, r_dlb + dd, r_dl + dd, r_dl),
        V4::new(t_dlb, t_dlb, t_dl, t_dl),
    )
}

fn conjugate(st: &DiracStencil, d: &V4, gamma: &V4, d_inv_r: &M4, d_inv_th: &M4) -> DiracStencil {
    let left = M4::from_diagonal(&gamma.component_mul(d));
    let d_inv = M4::from_diagonal(&d.map(|z| ONE / z));
    let coeff = st.coeff.map(|a| left * a * d_inv);
    let zeroth = left * (st.zeroth * d_inv + st.coeff[R] * d_inv_r + st.coeff[TH] * d_inv_th);
    DiracStencil { coeff, zeroth, point: st.point }
}

/// Stencil of `Γ D (G − m) D⁻¹`, product-rule terms in closed form.
pub fn transform_stencil(st: &DiracStencil, params: &SpacetimeParams) -> Result<DiracStencil> {
    let (d, gamma) = transform_diagonals(&st.point, params)?;
    let (lr, lt) = log_derivatives(&st.point, params);
    let d_inv = d.map(|z| ONE / z);
    let d_inv_r = M4::from_diagonal(&(-d_inv.component_mul(&lr)));
    let d_inv_th = M4::from_diagonal(&(-d_inv.component_mul(&lt)));
    Ok(conjugate(st, &d, &gamma, &d_inv_r, &d_inv_th))
}

/// As [`transform_stencil`] with `∂D⁻¹` from central differences of step `h`.
pub fn transform_stencil_fd(st: &DiracStencil, params: &SpacetimeParams, h: f64) -> Result<DiracStencil> {
    let p = st.point;
    let (d, gamma) = transform_diagonals(&p, params)?;
    let inv_at = |r: f64, th: f64| -> Result<V4> {
        let (dd, _) = transform_diagonals(&BLPoint { r, theta: th }, params)?;
        Ok(dd.map(|z| ONE / z))
    };
    let dr = (inv_at(p.r + h, p.theta)? - inv_at(p.r - h, p.theta)?) / re(2.0 * h);
    let dt = (inv_at(p.r, p.theta + h)? - inv_at(p.r, p.theta - h)?) / re(2.0 * h);
    Ok(conjugate(st, &d, &gamma, &M4::from_diagonal(&dr), &M4::from_diagonal(&dt)))
}

/// Closed form of the transformed operator
///
/// ```text
/// ⎡ iδm       0      |Δ|^{-½}D̃₁   L̃₊       ⎤
/// ⎢ 0        −iδm    −L̃₋          |Δ|^{½}D̃₀ ⎥
/// ⎢ |Δ|^{½}D̃₀  L̃₊     −iδ̄m         0        ⎥
/// ⎣ −L̃₋     |Δ|^{-½}D̃₁  0          iδ̄m      ⎦
/// ```
/// with `D̃₁ = [(2r²+2a²−Δ)∂τ + Δ∂r + 2a∂φ]/r₊`, `D̃₀ = −r₊(∂τ − ∂r)`,
/// `L̃± = ∂θ + cotθ/2 ∓ i(a sinθ ∂τ + cscθ ∂φ)`.
pub fn transformed_closed(point: &BLPoint, params: &SpacetimeParams, mass: f64) -> Result<DiracStencil> {
    let (r, th) = (point.r, point.theta);
    let (s, c) = th.sin_cos();
    let a = params.a;
    let delta = params.delta(r);
    if params.on_horizon(r) {
        return Err(Error::Singular { what: "transformed Dirac operator", r });
    }
    let rp = params.horizons().r_plus;
    let sq = delta.abs().sqrt();
    let d1 = [re((2.0 * (r * r + a * a) - delta) / rp), re(delta / rp), ZERO, re(2.0 * a / rp), ZERO];
    let d0 = [re(-rp), re(rp), ZERO, ZERO, ZERO];
    let lp = [C64::new(0.0, -a * s), ZERO, ONE, C64::new(0.0, -1.0 / s), re(c / s / 2.0)];
    let lm = [C64::new(0.0, a * s), ZERO, ONE, C64::new(0.0, 1.0 / s), re(c / s / 2.0)];
    let mut mats = [M4::zeros(); 5];
    for (i, e) in mats.iter_mut().enumerate() {
        e[(0, 2)] = d1[i] / sq;
        e[(0, 3)] = lp[i];
        e[(1, 2)] = -lm[i];
        e[(1, 3)] = d0[i] * sq;
        e[(2, 0)] = d0[i] * sq;
        e[(2, 1)] = lp[i];
        e[(3, 0)] = -lm[i];
        e[(3, 1)] = d1[i] / sq;
    }
    let dl = C64::new(r, a * c);
    let z = &mut mats[4];
    z[(0, 0)] = I * dl * mass;
    z[(1, 1)] = -I * dl * mass;
    z[(2, 2)] = -I * dl.conj() * mass;
    z[(3, 3)] = I * dl.conj() * mass;
    Ok(DiracStencil { coeff: [mats[0], mats[1], mats[2], mats[3]], zeroth: mats[4], point: *point })
}

/// Pointwise spin inner product `⟨ψ, S φ⟩`, `S = [[0, 1], [1, 0]]`.
pub fn spin_inner(psi: &V4, phi: &V4) -> C64 {
    let sphi = V4::new(phi[2], phi[3], phi[0], phi[1]);
    psi.iter().zip(sphi.iter()).map(|(a, b)| a.conj() * b).sum()
}
