//! Closed-form critical scales along the axis and polygon families and the
//! scalar profiles whose signs decide the existence of critical points.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    check_variant, eigs, grad_hess_from_matrix, interaction_matrix, psi_from_matrix,
    scale_from_weight, window_error, SignPattern, WINDOW_MARGIN,
};
use crate::ball::{
    gamma_tau, gamma_tau_derivatives, phi_axis, phi_axis_derivative, plus_root, BallDomain,
    GammaTau, PlacementK,
};
use crate::critical::{golden_section, refine_root, scan_sign, DEFAULT_GRID, DEFAULT_ROOT_TOL};
use crate::error::{Error, Result};
use crate::integrals::{ExpansionConstants, Variant};

const SCAN_LO: f64 = 1e-3;
const SCAN_HI: f64 = 1.0 - 1e-3;

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRange { name: "t", value: t, reason: "must lie in (0, 1)" });
    }
    Ok(())
}

fn axis(n: usize, t: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = t;
    x
}

/// Roots of `f` on `(lo, hi)`, ascending.
pub fn roots_of<F: Fn(f64) -> f64 + Sync>(label: &str, f: F, lo: f64, hi: f64, grid: usize) -> Result<Vec<f64>> {
    let mut r = scan_sign(label, &f, lo, hi, grid)?;
    r.refine_all(&f, DEFAULT_ROOT_TOL)?;
    Ok(r.roots.iter().map(|r| r.location).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm11Profile {
    pub t: f64,
    pub lambda1: f64,
    pub lambda_bar: f64,
    pub phi: f64,
    /// `b₂ - b₂ ln(b₂/2b₁) + b₂ ln φ`
    pub nu: f64,
    /// `ψ` evaluated at the closed-form scales.
    pub nu_direct: f64,
    /// `b₂ φ'/φ`
    pub nu_prime: f64,
    /// `∂ψ/∂t` at fixed scales (envelope form).
    pub nu_prime_envelope: f64,
    pub hess_eigs: Vec<f64>,
}

pub fn thm11_profile(n: usize, t: f64, consts: &ExpansionConstants) -> Result<Thm11Profile> {
    check_variant(consts, Variant::Multipoint, n)?;
    check_t(t)?;
    let nf = n as f64;
    let c = consts.ratio();
    let h = (1.0 - t * t).powf(2.0 - nf);
    let g = t.powf(2.0 - nf) - 1.0;
    let sh = h.sqrt();
    let y2 = c / (h + g * sh);
    let x2 = c / (1.0 + g / sh);
    let (y, x) = (y2.sqrt(), x2.sqrt());
    let lambdas = [scale_from_weight(n, y), scale_from_weight(n, x)];
    let ball = BallDomain::new(n)?;
    let a = interaction_matrix(&ball, &SignPattern::thm11(), &[axis(n, t)])?;
    let nu_direct = psi_from_matrix(n, &a, &lambdas, consts.b1, consts.b2);
    let (_, hess) = grad_hess_from_matrix(n, &a, &lambdas, consts.b1, consts.b2);
    let phi = phi_axis(n, t)?;
    let dphi = phi_axis_derivative(n, t)?;
    let dh = 2.0 * (nf - 2.0) * t * (1.0 - t * t).powf(1.0 - nf);
    let dg = (2.0 - nf) * t.powf(1.0 - nf);
    Ok(Thm11Profile {
        t,
        lambda1: lambdas[0],
        lambda_bar: lambdas[1],
        phi,
        nu: consts.b2 - consts.b2 * c.ln() + consts.b2 * phi.ln(),
        nu_direct,
        nu_prime: consts.b2 * dphi / phi,
        nu_prime_envelope: consts.b1 * (dh * y2 + 2.0 * dg * y * x),
        hess_eigs: eigs(&hess)?.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisMinimum {
    /// Root of `ν'`.
    pub nu_prime_root: f64,
    /// Minimiser of `φ` located independently of `φ'`.
    pub phi_minimizer: f64,
}

/// `ν'` root by bracketing the closed-form derivative, `φ` minimiser by golden
/// section refined on a central-difference derivative.
pub fn thm11_minimum(n: usize, consts: &ExpansionConstants) -> Result<AxisMinimum> {
    check_variant(consts, Variant::Multipoint, n)?;
    let nu_prime = |t: f64| thm11_profile(n, t, consts).map(|p| p.nu_prime).unwrap_or(f64::NAN);
    let roots = roots_of("nu_prime", nu_prime, SCAN_LO, SCAN_HI, DEFAULT_GRID)?;
    let nu_prime_root = *roots.first().ok_or_else(|| Error::NonReducible("nu' has no root".into()))?;
    let phi = |t: f64| phi_axis(n, t).unwrap_or(f64::INFINITY);
    let (tg, _) = golden_section(phi, SCAN_LO, SCAN_HI, 1e-10)?;
    let fd = |t: f64| {
        let h = 1e-5 * t;
        (phi(t + h) - phi(t - h)) / (2.0 * h)
    };
    let w = 1e-4;
    let phi_minimizer = refine_root(fd, (tg - w, tg + w), DEFAULT_ROOT_TOL)?.location;
    Ok(AxisMinimum { nu_prime_root, phi_minimizer })
}

/// Polygon family with `k` equal bubbles: `ν = (k+1)b₂/2 - b₂ ln(Y^k X)` where
/// `X = αY`, `α² + (k-1)τ₁α - γ = 0` and `Y² = c/(γ + τ₁α)`.
fn family_gamma(k: usize, gt: &GammaTau) -> Result<f64> {
    match k {
        2 => Ok(gt.gamma0()),
        3 => Ok(gt.gamma1),
        4 => Ok(gt.gamma2),
        _ => Err(Error::OutOfRange { name: "k", value: k as f64, reason: "polygon families exist for k in 2..=4" }),
    }
}

/// `γ' + 2α τ₁'`, the bracket in `ν'` for the `k`-gon.
pub fn polygon_iota(n: usize, k: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    let gt = gamma_tau(n, t)?;
    let d = gamma_tau_derivatives(n, t)?;
    let g = family_gamma(k, &gt)?;
    let dg = family_gamma(k, &d)?;
    let alpha = plus_root(1.0, (k as f64 - 1.0) * gt.tau1, g)?;
    Ok(dg + 2.0 * alpha * d.tau1)
}

/// `ι₁ = γ₁' + 2α₂τ₁'`.
pub fn iota1(n: usize, t: f64) -> Result<f64> {
    polygon_iota(n, 3, t)
}

/// Left end of the admissible window: the root of `γ₀` (k = 2), `γ₁` (k = 3)
/// or `γ₂` (k = 4).
pub fn polygon_window(n: usize, k: usize) -> Result<f64> {
    family_gamma(k, &gamma_tau(n, 0.5)?)?;
    let f = |t: f64| gamma_tau(n, t).and_then(|g| family_gamma(k, &g)).unwrap_or(f64::NAN);
    let roots = roots_of("gamma", f, SCAN_LO, SCAN_HI, DEFAULT_GRID)?;
    roots.first().copied().ok_or_else(|| Error::NonReducible("no admissible window".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm12Profile {
    pub k: usize,
    pub t: f64,
    pub t_star: f64,
    pub lambda1: f64,
    pub lambda_bar: f64,
    pub alpha: f64,
    pub nu: f64,
    pub nu_direct: f64,
    pub nu_prime: f64,
    pub iota: f64,
    /// Hessian of the equal-scale function in `(λ₁, λ̄)`.
    pub hess_eigs: Vec<f64>,
}

pub fn thm12_profile(n: usize, k: usize, t: f64, consts: &ExpansionConstants) -> Result<Thm12Profile> {
    let t_star = polygon_window(n, k)?;
    thm12_profile_in(n, k, t, t_star, consts)
}

/// As [`thm12_profile`] with a precomputed window end.
pub fn thm12_profile_in(
    n: usize,
    k: usize,
    t: f64,
    t_star: f64,
    consts: &ExpansionConstants,
) -> Result<Thm12Profile> {
    check_variant(consts, Variant::Multipoint, n)?;
    check_t(t)?;
    if t <= t_star + WINDOW_MARGIN {
        return Err(window_error(t));
    }
    let c = consts.ratio();
    let gt = gamma_tau(n, t)?;
    let d = gamma_tau_derivatives(n, t)?;
    let g = family_gamma(k, &gt)?;
    let alpha = plus_root(1.0, (k as f64 - 1.0) * gt.tau1, g)?;
    let beta = g + gt.tau1 * alpha;
    if !(beta > 0.0 && alpha > 0.0) {
        return Err(window_error(t));
    }
    let y2 = c / beta;
    let y = y2.sqrt();
    let x = alpha * y;
    let kf = k as f64;
    let lambda1 = scale_from_weight(n, y);
    let lambda_bar = scale_from_weight(n, x);
    let iota = family_gamma(k, &d)? + 2.0 * alpha * d.tau1;
    let nu = 0.5 * (kf + 1.0) * consts.b2 - consts.b2 * (kf * y.ln() + x.ln());

    let ball = BallDomain::new(n)?;
    let pl = PlacementK::new(n, k, t)?;
    let a = interaction_matrix(&ball, &SignPattern::thm12(k), &pl.centers)?;
    let mut lambdas = vec![lambda1; k];
    lambdas.push(lambda_bar);
    let nu_direct = psi_from_matrix(n, &a, &lambdas, consts.b1, consts.b2);
    let (_, full) = grad_hess_from_matrix(n, &a, &lambdas, consts.b1, consts.b2);
    // restrict to λ₁ = ... = λ_k
    let p = DMatrix::from_fn(k + 1, 2, |r, col| if (r < k) == (col == 0) { 1.0 } else { 0.0 });
    let reduced = p.transpose() * full * p;
    Ok(Thm12Profile {
        k,
        t,
        t_star,
        lambda1,
        lambda_bar,
        alpha,
        nu,
        nu_direct,
        nu_prime: kf * consts.b1 * y2 * iota,
        iota,
        hess_eigs: eigs(&reduced)?.0,
    })
}

/// Smallest `N` in `from..=to` with `ι₁(1/2) < 0`.
pub fn minimal_iota1_dimension(from: usize, to: usize) -> Result<Option<usize>> {
    for n in from..=to {
        if iota1(n, 0.5)? < 0.0 {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iota2Record {
    pub t: f64,
    pub gamma2: f64,
    pub alpha3: f64,
    pub iota2: f64,
    /// `(T^N + 3T)(1-t^{N-2})² - 1` with `T = t²/(1-t²)`.
    pub margin: f64,
}

pub fn remark36_iota2(n: usize, t: f64) -> Result<Iota2Record> {
    check_t(t)?;
    let gt = gamma_tau(n, t)?;
    let d = gamma_tau_derivatives(n, t)?;
    let alpha3 = plus_root(1.0, 3.0 * gt.tau1, gt.gamma2)?;
    Ok(Iota2Record {
        t,
        gamma2: gt.gamma2,
        alpha3,
        iota2: d.gamma2 + 2.0 * alpha3 * d.tau1,
        margin: square_margin(n, t),
    })
}

pub fn square_margin(n: usize, t: f64) -> f64 {
    let nf = n as f64;
    let big = t * t / (1.0 - t * t);
    (big.powf(nf) + 3.0 * big) * (1.0 - t.powf(nf - 2.0)).powi(2) - 1.0
}

/// Root of `γ` on the `t`-axis, the left end of the square's window.
pub fn gamma2_root(n: usize) -> Result<f64> {
    polygon_window(n, 4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm13Windows {
    /// Root of `γ₃`.
    pub t1_star: f64,
    /// Root of `γ₃ - 2τ₁²`.
    pub t2_star: f64,
}

impl Thm13Windows {
    pub fn contains(&self, t: f64) -> bool {
        (t > WINDOW_MARGIN && t < self.t1_star - WINDOW_MARGIN) || (t > self.t2_star + WINDOW_MARGIN && t < 1.0)
    }
}

pub fn thm13_windows(n: usize) -> Result<Thm13Windows> {
    let g3 = |t: f64| gamma_tau(n, t).map(|g| g.gamma3).unwrap_or(f64::NAN);
    let t1 = roots_of("gamma3", g3, SCAN_LO, SCAN_HI, DEFAULT_GRID)?;
    let t1_star = *t1.first().ok_or_else(|| Error::NonReducible("gamma3 has no root".into()))?;
    let f = |t: f64| gamma_tau(n, t).map(|g| g.gamma3 - 2.0 * g.tau1 * g.tau1).unwrap_or(f64::NAN);
    let t2 = roots_of("gamma3-2tau1^2", f, t1_star, SCAN_HI, DEFAULT_GRID)?;
    let t2_star = *t2.last().ok_or_else(|| Error::NonReducible("gamma3 - 2 tau1^2 has no root".into()))?;
    Ok(Thm13Windows { t1_star, t2_star })
}

/// `ι₃ = γ₃'(2γ₃(γ₃-2τ₁²) + τ₁²(γ₃+2γ₄)) - 2τ₁'τ₁γ₃(γ₃+2γ₄) + 4γ₄'γ₃(γ₃-2τ₁²)`.
pub fn iota3(n: usize, t: f64) -> Result<f64> {
    Ok(iota3_terms(n, t)?.iter().sum())
}

/// The three summands of `ι₃`, used to normalise residuals.
pub fn iota3_terms(n: usize, t: f64) -> Result<[f64; 3]> {
    check_t(t)?;
    let g = gamma_tau(n, t)?;
    let d = gamma_tau_derivatives(n, t)?;
    let tt = g.tau1 * g.tau1;
    let (g3, g4) = (g.gamma3, g.gamma4);
    Ok([
        d.gamma3 * (2.0 * g3 * (g3 - 2.0 * tt) + tt * (g3 + 2.0 * g4)),
        -2.0 * d.tau1 * g.tau1 * g3 * (g3 + 2.0 * g4),
        4.0 * d.gamma4 * g3 * (g3 - 2.0 * tt),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm13Profile {
    pub t: f64,
    pub t1_star: f64,
    pub t2_star: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_bar: f64,
    pub nu2: f64,
    pub nu2_direct: f64,
    pub nu2_prime: f64,
    pub iota3: f64,
    /// Sign of the determinant of the printed 3×3 reduced matrix.
    pub det_sign: f64,
    /// Sign of the determinant of the true Hessian in `(λ̄, λ₁, λ₂)`.
    pub hess_det_sign: f64,
    /// Largest residual of the three stationarity equations, relative to `c`.
    pub system_residual: f64,
}

/// Weights `(Y, Z, X)` for `λ₁ = λ₃`, `λ₂ = λ₄`, `λ̄`.
fn thm13_weights(g: &GammaTau, c: f64) -> Result<(f64, f64, f64)> {
    let (g3, g4, tau) = (g.gamma3, g.gamma4, g.tau1);
    let x2 = g3 * c / (g3 - 2.0 * tau * tau);
    let prod = c / (g3 + 2.0 * g4);
    if !(x2 > 0.0 && prod > 0.0) {
        return Err(Error::NonPositiveScale(x2.min(prod)));
    }
    let x = x2.sqrt();
    let diff = tau * x / g3;
    // Y = (-d + √(d² + 4p))/2 written without cancellation
    let disc = (diff * diff + 4.0 * prod).sqrt();
    let y = if diff > 0.0 { 2.0 * prod / (diff + disc) } else { 0.5 * (disc - diff) };
    let z = y + diff;
    if !(y > 0.0 && z > 0.0) {
        return Err(Error::NonPositiveScale(y.min(z)));
    }
    Ok((y, z, x))
}

/// Residuals `Y(γ₃Y+τ₁X+2γ₄Z) - c`, `Z(γ₃Z-τ₁X+2γ₄Y) - c`, `X(X+2τ₁(Y-Z)) - c`.
pub fn thm13_system(g: &GammaTau, c: f64, y: f64, z: f64, x: f64) -> [f64; 3] {
    let (g3, g4, tau) = (g.gamma3, g.gamma4, g.tau1);
    [
        y * (g3 * y + tau * x + 2.0 * g4 * z) - c,
        z * (g3 * z - tau * x + 2.0 * g4 * y) - c,
        x * (x + 2.0 * tau * (y - z)) - c,
    ]
}

/// Printed reduced matrix, rows and columns ordered `(λ̄, λ₁, λ₂)`.
pub fn thm13_matrix(n: usize, g: &GammaTau, c: f64, y: f64, z: f64, x: f64) -> DMatrix<f64> {
    let nf = n as f64;
    let e = 2.0 / (nf - 2.0);
    let f = (nf - 4.0) / (nf - 2.0);
    let (g3, g4, tau) = (g.gamma3, g.gamma4, g.tau1);
    DMatrix::from_row_slice(
        3,
        3,
        &[
            x / 2.0 + (c / 2.0) / x,
            tau * y.powf(e) * x.powf(f),
            -tau * z.powf(e) * x.powf(f),
            tau * y.powf(f) * x.powf(e),
            g3 * y + c / y,
            2.0 * g4 * y.powf(f) * z.powf(e),
            -tau * z.powf(f) * x.powf(e),
            2.0 * g4 * y.powf(e) * z.powf(f),
            g3 * z + c / z,
        ],
    )
}

pub fn thm13_profile(n: usize, t: f64, consts: &ExpansionConstants) -> Result<Thm13Profile> {
    let w = thm13_windows(n)?;
    thm13_profile_in(n, t, &w, consts)
}

pub fn thm13_profile_in(n: usize, t: f64, w: &Thm13Windows, consts: &ExpansionConstants) -> Result<Thm13Profile> {
    check_variant(consts, Variant::Multipoint, n)?;
    check_t(t)?;
    if !w.contains(t) {
        return Err(window_error(t));
    }
    let c = consts.ratio();
    let g = gamma_tau(n, t)?;
    let d = gamma_tau_derivatives(n, t)?;
    let (y, z, x) = thm13_weights(&g, c)?;
    let res = thm13_system(&g, c, y, z, x);
    let system_residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs())) / c;
    let (b1, b2) = (consts.b1, consts.b2);
    let nu2 = 2.5 * b2 - b2 * (2.0 * y.ln() + 2.0 * z.ln() + x.ln());
    let nu2_prime = 2.0 * b1 * (d.gamma3 * (y * y + z * z) + 2.0 * d.tau1 * (y - z) * x + 4.0 * d.gamma4 * y * z);

    let ball = BallDomain::new(n)?;
    let pl = PlacementK::new(n, 4, t)?;
    let a = interaction_matrix(&ball, &SignPattern::thm13(4), &pl.centers)?;
    let (l1, l2, lb) = (scale_from_weight(n, y), scale_from_weight(n, z), scale_from_weight(n, x));
    let lambdas = [l1, l2, l1, l2, lb];
    let nu2_direct = psi_from_matrix(n, &a, &lambdas, b1, b2);
    let (_, full) = grad_hess_from_matrix(n, &a, &lambdas, b1, b2);
    // columns (λ̄, λ₁, λ₂) of the symmetric restriction
    let p = DMatrix::from_fn(5, 3, |r, col| match (r, col) {
        (4, 0) | (0, 1) | (2, 1) | (1, 2) | (3, 2) => 1.0,
        _ => 0.0,
    });
    let reduced = p.transpose() * full * p;
    let printed = thm13_matrix(n, &g, c, y, z, x);
    Ok(Thm13Profile {
        t,
        t1_star: w.t1_star,
        t2_star: w.t2_star,
        lambda1: l1,
        lambda2: l2,
        lambda_bar: lb,
        nu2,
        nu2_direct,
        nu2_prime,
        iota3: iota3(n, t)?,
        det_sign: printed.determinant().signum(),
        hess_det_sign: reduced.determinant().signum(),
        system_residual,
    })
}

/// Newton solve of the symmetric system from a start in weights `(Y, Z, X)`.
pub fn thm13_newton(n: usize, t: f64, consts: &ExpansionConstants, start: [f64; 3], tol: f64) -> Result<[f64; 3]> {
    check_variant(consts, Variant::Multipoint, n)?;
    let c = consts.ratio();
    let g = gamma_tau(n, t)?;
    let f = |v: &DVector<f64>| DVector::from_iterator(3, thm13_system(&g, c, v[0], v[1], v[2]).map(|r| r / c));
    let (g3, g4, tau) = (g.gamma3, g.gamma4, g.tau1);
    let jac = |v: &DVector<f64>| {
        let (y, z, x) = (v[0], v[1], v[2]);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                2.0 * g3 * y + tau * x + 2.0 * g4 * z, 2.0 * g4 * y, tau * y,
                2.0 * g4 * z, 2.0 * g3 * z - tau * x + 2.0 * g4 * y, -tau * z,
                2.0 * tau * x, -2.0 * tau * x, 2.0 * x + 2.0 * tau * (y - z),
            ],
        ) / c
    };
    let sol = crate::critical::newton_nd(f, jac, &start, tol, 100)?;
    Ok([
        scale_from_weight(n, sol.x[0]),
        scale_from_weight(n, sol.x[1]),
        scale_from_weight(n, sol.x[2]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn consts(n: usize) -> ExpansionConstants {
        static C: OnceLock<Vec<ExpansionConstants>> = OnceLock::new();
        C.get_or_init(|| {
            [7, 10]
                .iter()
                .map(|&n| crate::integrals::expansion_constants(n, 1.0, 1, Variant::Multipoint, &QuadratureSpec::default()).unwrap())
                .collect()
        })
        .iter()
        .find(|c| c.n == n)
        .copied()
        .unwrap()
    }

    #[test]
    fn thm11_identity_and_minimum() {
        let c = consts(7);
        for i in 1..50 {
            let p = thm11_profile(7, i as f64 / 50.0, &c).unwrap();
            assert!((p.nu - p.nu_direct).abs() <= 1e-12 * p.nu.abs(), "{} {}", p.nu, p.nu_direct);
            assert!((p.nu_prime - p.nu_prime_envelope).abs() <= 1e-10 * p.nu_prime.abs().max(c.b2));
            assert!(p.hess_eigs.iter().all(|e| *e > 0.0));
        }
        let m = thm11_minimum(7, &c).unwrap();
        let exact = 0.5f64.sqrt();
        assert!((m.nu_prime_root - exact).abs() < 1e-12);
        assert!((m.phi_minimizer - m.nu_prime_root).abs() < 1e-9);
    }

    #[test]
    fn thm11_fd_nu_prime() {
        let c = consts(7);
        for t in [0.3, 0.6, 0.9] {
            let h = 1e-6;
            let fd = (thm11_profile(7, t + h, &c).unwrap().nu - thm11_profile(7, t - h, &c).unwrap().nu) / (2.0 * h);
            let an = thm11_profile(7, t, &c).unwrap().nu_prime;
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
        }
    }

    #[test]
    fn thm12_k3_window_and_sign() {
        let ts = polygon_window(7, 3).unwrap();
        assert!((ts - 0.483_611_601_929_794_2).abs() < 1e-12);
        assert!(gamma_tau(7, ts).unwrap().gamma1.abs() <= 1e-12);
        let c = consts(7);
        let p = thm12_profile_in(7, 3, 0.7, ts, &c).unwrap();
        assert!(p.iota > 0.0 && p.hess_eigs.iter().all(|e| *e > 0.0));
        assert!((p.nu - p.nu_direct).abs() <= 1e-12 * p.nu.abs());
        assert!(matches!(thm12_profile_in(7, 3, 0.4, ts, &c), Err(Error::OutsideWindow(_))));
        assert_eq!(minimal_iota1_dimension(7, 60).unwrap(), Some(20));
    }

    #[test]
    fn thm12_f2_hessian_n10() {
        let c = consts(10);
        let p = thm12_profile(10, 3, 0.7, &c).unwrap();
        assert!(p.hess_eigs.iter().all(|e| *e > 0.0));
    }

    #[test]
    fn thm12_nu_prime_fd() {
        let c = consts(7);
        for k in [2, 3, 4] {
            let ts = polygon_window(7, k).unwrap();
            for t in [0.75, 0.85] {
                let h = 1e-6;
                let up = thm12_profile_in(7, k, t + h, ts, &c).unwrap().nu;
                let dn = thm12_profile_in(7, k, t - h, ts, &c).unwrap().nu;
                let an = thm12_profile_in(7, k, t, ts, &c).unwrap().nu_prime;
                assert!(((up - dn) / (2.0 * h) - an).abs() <= 1e-6 * an.abs().max(1.0), "k={k} t={t}");
            }
        }
    }

    #[test]
    fn gamma_roots_n7() {
        assert!((gamma2_root(7).unwrap() - 0.547_499_702_191_107_5).abs() < 1e-12);
        let w = thm13_windows(7).unwrap();
        assert!((w.t1_star - 0.403_927_087_548_145_8).abs() < 1e-12);
        assert!((w.t2_star - 0.716_754_976_357_601_7).abs() < 1e-12);
    }

    #[test]
    fn iota2_and_margin() {
        let r = remark36_iota2(7, 0.8).unwrap();
        assert!(r.iota2 > 0.0 && r.margin > 0.0);
        let res = r.alpha3 * r.alpha3 + 3.0 * gamma_tau(7, 0.8).unwrap().tau1 * r.alpha3 - r.gamma2;
        assert!(res.abs() <= 1e-12 * r.gamma2.abs().max(r.alpha3 * r.alpha3));
    }

    #[test]
    fn thm13_closed_form_and_newton() {
        let c = consts(7);
        let w = thm13_windows(7).unwrap();
        for t in [0.2, 0.35, 0.8, 0.9] {
            let p = thm13_profile_in(7, t, &w, &c).unwrap();
            assert!(p.system_residual <= 1e-12, "{t} {}", p.system_residual);
            assert!((p.nu2 - p.nu2_direct).abs() <= 1e-11 * p.nu2.abs());
            let g = gamma_tau(7, t).unwrap();
            assert_eq!(p.det_sign, g.gamma3.signum());
            assert_eq!(p.hess_det_sign, g.gamma3.signum());
            assert_eq!(p.lambda2 > p.lambda1, g.gamma3 > 0.0);
            let m = 2.5;
            let start = [p.lambda1.powf(m) * 1.1, p.lambda2.powf(m) * 0.9, p.lambda_bar.powf(m) * 1.07];
            let l = thm13_newton(7, t, &c, start, 1e-14).unwrap();
            for (a, b) in l.iter().zip([p.lambda1, p.lambda2, p.lambda_bar]) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
        }
        assert!(matches!(thm13_profile_in(7, 0.5, &w, &c), Err(Error::OutsideWindow(_))));
    }

    #[test]
    fn thm13_iota3_root_matches_nu2_prime() {
        let c = consts(7);
        let w = thm13_windows(7).unwrap();
        let hi = w.t1_star - 1e-6;
        let r3 = roots_of("iota3", |t| iota3(7, t).unwrap(), 0.05, hi, DEFAULT_GRID).unwrap();
        let rn = roots_of("nu2'", |t| thm13_profile_in(7, t, &w, &c).map(|p| p.nu2_prime).unwrap_or(f64::NAN), 0.05, hi, DEFAULT_GRID).unwrap();
        assert_eq!(r3.len(), 1);
        assert_eq!(rn.len(), 1);
        assert!((r3[0] - rn[0]).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn alpha2_quadratic(t in 0.49f64..0.99) {
            let g = gamma_tau(7, t).unwrap();
            let a = plus_root(1.0, 2.0 * g.tau1, g.gamma1).unwrap();
            let res = a * a + 2.0 * g.tau1 * a - g.gamma1;
            prop_assert!(res.abs() <= 1e-12 * (a * a + 2.0 * g.tau1 * a + g.gamma1.abs()));
        }

        #[test]
        fn thm11_nu_matches_direct(t in 0.01f64..0.99, n in 5usize..20) {
            let c = crate::integrals::ExpansionConstants { n, ..consts(7) };
            let p = thm11_profile(n, t, &c).unwrap();
            prop_assert!((p.nu - p.nu_direct).abs() <= 1e-11 * p.nu.abs().max(c.b2));
        }
    }
}
