use nalgebra::{DMatrix, DVector};

use super::{check_variant, eigs, CriticalPoint, ReducedPoint, Regime, SignPattern};
use crate::ball::GreenProvider;
use crate::critical::{newton_nd, NewtonSolution};
use crate::error::{Error, Result};
use crate::integrals::{ExpansionConstants, Variant};

/// Symmetric matrix `A` with `ψ = b₁ΛᵀAΛ - b₂ Σ ln Λⱼ`, `Λⱼ = λⱼ^{(N-2)/2}`.
/// Diagonal entries are Robin values, off-diagonal ones `-sⱼsₗ G(ξⱼ, ξₗ)`;
/// the Hardy atom at the origin is the last index.
pub fn interaction_matrix<P: GreenProvider>(
    provider: &P,
    pattern: &SignPattern,
    centers: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    pattern.validate()?;
    if pattern.regime == Regime::Tower {
        return Err(Error::InvalidPattern("tower pattern has no multipoint energy".into()));
    }
    let k = pattern.k();
    if centers.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: centers.len() });
    }
    let n = provider.dim();
    let origin = vec![0.0; n];
    let mut pts: Vec<&[f64]> = centers.iter().map(|c| c.as_slice()).collect();
    pts.push(&origin);
    let mut signs: Vec<f64> = pattern.bubble_signs.iter().map(|&s| s as f64).collect();
    signs.push(pattern.hardy_sign as f64);
    for (i, c) in centers.iter().enumerate() {
        if c.iter().all(|v| *v == 0.0) || centers[..i].iter().any(|d| d == c) {
            return Err(Error::CoincidentPoints);
        }
        if c.iter().map(|v| v * v).sum::<f64>() >= 1.0 {
            return Err(Error::OutsideBall(c.iter().map(|v| v * v).sum::<f64>().sqrt()));
        }
    }
    let mut a = DMatrix::zeros(k + 1, k + 1);
    for j in 0..=k {
        a[(j, j)] = provider.regular_part(pts[j], pts[j])?;
        for l in j + 1..=k {
            let v = -signs[j] * signs[l] * provider.green(pts[j], pts[l])?;
            a[(j, l)] = v;
            a[(l, j)] = v;
        }
    }
    Ok(a)
}

fn weights(n: usize, lambdas: &[f64]) -> DVector<f64> {
    let m = 0.5 * (n as f64 - 2.0);
    DVector::from_iterator(lambdas.len(), lambdas.iter().map(|l| l.powf(m)))
}

/// `ψ = b₁ΛᵀAΛ - b₂ Σ ln Λⱼ` from a precomputed interaction matrix.
pub fn psi_from_matrix(n: usize, a: &DMatrix<f64>, lambdas: &[f64], b1: f64, b2: f64) -> f64 {
    let w = weights(n, lambdas);
    let quad = w.dot(&(a * &w));
    let logs: f64 = w.iter().map(|v| v.ln()).sum();
    b1 * quad - b2 * logs
}

pub fn psi_multipoint<P: GreenProvider>(
    provider: &P,
    pattern: &SignPattern,
    point: &ReducedPoint,
    consts: &ExpansionConstants,
) -> Result<f64> {
    let n = provider.dim();
    check_variant(consts, Variant::Multipoint, n)?;
    point.check()?;
    if point.regime != pattern.regime {
        return Err(Error::InvalidPattern("point and pattern regimes differ".into()));
    }
    let a = interaction_matrix(provider, pattern, &point.centers)?;
    Ok(psi_from_matrix(n, &a, &point.lambdas, consts.b1, consts.b2))
}

/// Gradient and Hessian of `ψ` in `λ` for a fixed interaction matrix.
pub fn grad_hess_from_matrix(
    n: usize,
    a: &DMatrix<f64>,
    lambdas: &[f64],
    b1: f64,
    b2: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let m = 0.5 * (n as f64 - 2.0);
    let w = weights(n, lambdas);
    let aw = a * &w;
    let len = lambdas.len();
    // dΛ/dλ and d²Λ/dλ²
    let d1: Vec<f64> = lambdas.iter().map(|l| m * l.powf(m - 1.0)).collect();
    let d2: Vec<f64> = lambdas.iter().map(|l| m * (m - 1.0) * l.powf(m - 2.0)).collect();
    let grad = DVector::from_fn(len, |j, _| 2.0 * b1 * aw[j] * d1[j] - b2 * m / lambdas[j]);
    let hess = DMatrix::from_fn(len, len, |j, l| {
        let mut v = 2.0 * b1 * a[(j, l)] * (d1[j.min(l)] * d1[j.max(l)]);
        if j == l {
            v += 2.0 * b1 * aw[j] * d2[j] + b2 * m / (lambdas[j] * lambdas[j]);
        }
        v
    });
    (grad, hess)
}

pub fn grad_hess_psi<P: GreenProvider>(
    provider: &P,
    pattern: &SignPattern,
    point: &ReducedPoint,
    consts: &ExpansionConstants,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = provider.dim();
    check_variant(consts, Variant::Multipoint, n)?;
    point.check()?;
    let a = interaction_matrix(provider, pattern, &point.centers)?;
    Ok(grad_hess_from_matrix(n, &a, &point.lambdas, consts.b1, consts.b2))
}

/// Stationarity in `Λ`: `Λⱼ(AΛ)ⱼ = b₂/(2b₁)`, divided by the right-hand side.
/// Newton from `start` (scales, not weights); returns the scales.
pub fn solve_stationarity(
    n: usize,
    a: &DMatrix<f64>,
    ratio: f64,
    start: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, NewtonSolution)> {
    let w0: Vec<f64> = weights(n, start).iter().copied().collect();
    let f = |w: &DVector<f64>| {
        let aw = a * w;
        DVector::from_fn(w.len(), |j, _| (w[j] * aw[j] - ratio) / ratio)
    };
    let jac = |w: &DVector<f64>| {
        let aw = a * w;
        let mut j = DMatrix::from_fn(w.len(), w.len(), |r, c| w[r] * a[(r, c)] / ratio);
        for r in 0..w.len() {
            j[(r, r)] += aw[r] / ratio;
        }
        j
    };
    let sol = newton_nd(f, jac, &w0, tol, 100)?;
    if let Some(&bad) = sol.x.iter().find(|v| **v <= 0.0) {
        return Err(Error::NonPositiveScale(bad));
    }
    let lambdas = sol.x.iter().map(|w| super::scale_from_weight(n, *w)).collect();
    Ok((lambdas, sol))
}

/// Value, gradient norm and Hessian classification at a candidate point.
pub fn critical_point<P: GreenProvider>(
    provider: &P,
    pattern: &SignPattern,
    point: &ReducedPoint,
    consts: &ExpansionConstants,
) -> Result<CriticalPoint> {
    let value = psi_multipoint(provider, pattern, point, consts)?;
    let (g, h) = grad_hess_psi(provider, pattern, point, consts)?;
    let (hessian_eigs, classification) = eigs(&h)?;
    Ok(CriticalPoint {
        point: point.clone(),
        value,
        grad_norm: g.amax(),
        hessian_eigs,
        classification,
    })
}
