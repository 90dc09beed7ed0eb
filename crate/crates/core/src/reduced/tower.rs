//! Reduced energy of the alternating tower centred at the origin.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::check_variant;
use crate::critical::newton_nd;
use crate::error::{Error, Result};
use crate::integrals::{
    sphere_area, tower_h1, tower_h2, tower_h2_curvature_integral, ExpansionConstants, Variant,
};
use crate::profiles::{check_dimension, half_weight};
use crate::quadrature::QuadratureSpec;

/// `h₁(ζᵢ)` and `h₂(ζᵢ)` for each offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerKernels {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

impl TowerKernels {
    pub fn k(&self) -> usize {
        self.h1.len()
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn tower_kernels(n: usize, zetas: &[Vec<f64>], q: &QuadratureSpec) -> Result<TowerKernels> {
    check_dimension(n)?;
    let mut h1 = Vec::with_capacity(zetas.len());
    let mut h2 = Vec::with_capacity(zetas.len());
    for z in zetas {
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: z.len() });
        }
        let rho = norm(z);
        h1.push(tower_h1(n, rho, q)?);
        h2.push(tower_h2(n, rho, q)?);
    }
    Ok(TowerKernels { h1, h2 })
}

struct TowerCoeffs {
    b1: f64,
    b2: f64,
    b3: f64,
    b4: f64,
}

fn coeffs(n: usize, k: usize, consts: &ExpansionConstants) -> Result<TowerCoeffs> {
    check_variant(consts, Variant::Tower, n)?;
    if consts.k != k {
        return Err(Error::VariantMismatch(format!("constants built for k = {}, not {k}", consts.k)));
    }
    let missing = || Error::VariantMismatch("tower constants incomplete".into());
    Ok(TowerCoeffs {
        b1: consts.b1,
        b2: consts.b2,
        b3: consts.b3.ok_or_else(missing)?,
        b4: consts.b4.ok_or_else(missing)?,
    })
}

/// `ψ(λ, ζ)` with `λ = (λ₁, .., λ_k, λ̄)`.
pub fn tower_psi_with(n: usize, lambdas: &[f64], kern: &TowerKernels, consts: &ExpansionConstants) -> Result<f64> {
    let k = kern.k();
    let c = coeffs(n, k, consts)?;
    check_scales(lambdas, k)?;
    let m = half_weight(n);
    let mut v = c.b1 * lambdas[0].powf(2.0 * m);
    for i in 0..k {
        v += c.b2 * (lambdas[i + 1] / lambdas[i]).powf(m) * kern.h1[i] - c.b3 * kern.h2[i];
    }
    v -= c.b4 * m * lambdas.iter().map(|l| l.ln()).sum::<f64>();
    Ok(v)
}

pub fn tower_psi(
    n: usize,
    k: usize,
    lambdas: &[f64],
    zetas: &[Vec<f64>],
    consts: &ExpansionConstants,
    q: &QuadratureSpec,
) -> Result<f64> {
    if zetas.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: zetas.len() });
    }
    tower_psi_with(n, lambdas, &tower_kernels(n, zetas, q)?, consts)
}

fn check_scales(lambdas: &[f64], k: usize) -> Result<()> {
    if lambdas.len() != k + 1 {
        return Err(Error::DimensionMismatch { expected: k + 1, got: lambdas.len() });
    }
    if let Some(&l) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::NonPositiveScale(l));
    }
    Ok(())
}

/// Analytic gradient and Hessian of `ψ` in `λ` at fixed offsets.
pub fn tower_grad_hess(
    n: usize,
    lambdas: &[f64],
    kern: &TowerKernels,
    consts: &ExpansionConstants,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = kern.k();
    let c = coeffs(n, k, consts)?;
    check_scales(lambdas, k)?;
    let m = half_weight(n);
    let len = k + 1;
    let mut g = DVector::zeros(len);
    let mut h = DMatrix::zeros(len, len);
    let l0 = lambdas[0];
    let lead = c.b1 * l0.powf(2.0 * m);
    g[0] += 2.0 * m * lead / l0;
    h[(0, 0)] += 2.0 * m * (2.0 * m - 1.0) * lead / (l0 * l0);
    for i in 0..k {
        let (a, b) = (lambdas[i], lambdas[i + 1]);
        let term = c.b2 * (b / a).powf(m) * kern.h1[i];
        g[i + 1] += m * term / b;
        g[i] -= m * term / a;
        h[(i + 1, i + 1)] += m * (m - 1.0) * term / (b * b);
        h[(i, i)] += m * (m + 1.0) * term / (a * a);
        h[(i, i + 1)] -= m * m * term / (a * b);
        h[(i + 1, i)] -= m * m * term / (a * b);
    }
    for j in 0..len {
        g[j] -= c.b4 * m / lambdas[j];
        h[(j, j)] += c.b4 * m / (lambdas[j] * lambdas[j]);
    }
    Ok((g, h))
}

/// `s₁ = λ₁^{(N-2)/2}`, `s_{i+1} = (λ_{i+1}/λᵢ)^{(N-2)/2}`.
pub fn tower_s_from_lambdas(n: usize, lambdas: &[f64]) -> Vec<f64> {
    let m = half_weight(n);
    let mut s = vec![lambdas[0].powf(m)];
    s.extend(lambdas.windows(2).map(|w| (w[1] / w[0]).powf(m)));
    s
}

pub fn tower_lambdas_from_s(n: usize, s: &[f64]) -> Vec<f64> {
    let inv = 1.0 / half_weight(n);
    let mut acc = 1.0;
    s.iter()
        .map(|v| {
            acc *= v;
            acc.powf(inv)
        })
        .collect()
}

/// `ψ̂(s) = b₁s₁² + Σ b₂s_{i+1}h₁ᵢ - Σ b₃h₂ᵢ - b₄ Σⱼ (k+2-j) ln sⱼ`.
pub fn tower_psi_hat(n: usize, s: &[f64], kern: &TowerKernels, consts: &ExpansionConstants) -> Result<f64> {
    let k = kern.k();
    let c = coeffs(n, k, consts)?;
    check_scales(s, k)?;
    let mut v = c.b1 * s[0] * s[0];
    for i in 0..k {
        v += c.b2 * s[i + 1] * kern.h1[i] - c.b3 * kern.h2[i];
    }
    for (j, sj) in s.iter().enumerate() {
        v -= c.b4 * (k + 1 - j) as f64 * sj.ln();
    }
    Ok(v)
}

/// Gradient of `ψ̂` together with the size of the competing terms in each
/// component.
pub fn tower_grad_s(
    n: usize,
    s: &[f64],
    kern: &TowerKernels,
    consts: &ExpansionConstants,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let k = kern.k();
    let c = coeffs(n, k, consts)?;
    check_scales(s, k)?;
    let mut g = DVector::zeros(k + 1);
    let mut scale = DVector::zeros(k + 1);
    let lead = 2.0 * c.b1 * s[0];
    let log0 = (k + 1) as f64 * c.b4 / s[0];
    g[0] = lead - log0;
    scale[0] = lead + log0;
    for i in 0..k {
        let lin = c.b2 * kern.h1[i];
        let log = (k - i) as f64 * c.b4 / s[i + 1];
        g[i + 1] = lin - log;
        scale[i + 1] = lin + log;
    }
    Ok((g, scale))
}

/// `ŝ₁ = √((k+1)b₄/(2b₁))`, `ŝ_{i+1} = (k+1-i)b₄/(b₂h₁(ζᵢ))`.
pub fn tower_s_hat(n: usize, kern: &TowerKernels, consts: &ExpansionConstants) -> Result<Vec<f64>> {
    let k = kern.k();
    let c = coeffs(n, k, consts)?;
    let mut s = vec![((k + 1) as f64 * c.b4 / (2.0 * c.b1)).sqrt()];
    for i in 0..k {
        s.push((k - i) as f64 * c.b4 / (c.b2 * kern.h1[i]));
    }
    Ok(s)
}

/// `gᵢ(ζ) = b₄(k+1-i) ln h₁(ζ) - b₃h₂(ζ)` for `i` counted from 1.
pub fn tower_gi(k: usize, i: usize, h1: f64, h2: f64, consts: &ExpansionConstants) -> Result<f64> {
    let c = coeffs(consts.n, k, consts)?;
    if !(1..=k).contains(&i) {
        return Err(Error::OutOfRange { name: "i", value: i as f64, reason: "must lie in 1..=k" });
    }
    Ok(c.b4 * (k + 1 - i) as f64 * h1.ln() - c.b3 * h2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiHessian {
    pub i: usize,
    /// Finite-difference diagonal (Richardson-extrapolated), one per axis.
    pub diagonal: Vec<f64>,
    /// Largest finite-difference mixed derivative.
    pub max_mixed: f64,
    /// `(2N-8)/N · b₃ ∫|y|⁻⁴(1+|y|²)^{2-N}`: the `h₂` contribution alone.
    pub h2_only_diagonal: f64,
    /// `h₂` contribution plus `-b₄(k+1-i)(N-2)ω/(N h₁(0))` from `ln h₁`.
    pub full_diagonal: f64,
}

/// Kernel values memoised by `|ζ|` so that every finite-difference stencil
/// evaluates `gᵢ` on honest `N`-vectors without repeating quadratures.
struct KernelCache<'a> {
    n: usize,
    q: &'a QuadratureSpec,
    map: HashMap<u64, (f64, f64)>,
}

impl KernelCache<'_> {
    fn get(&mut self, zeta: &[f64]) -> Result<(f64, f64)> {
        let rho = norm(zeta);
        if let Some(v) = self.map.get(&rho.to_bits()) {
            return Ok(*v);
        }
        let v = (tower_h1(self.n, rho, self.q)?, tower_h2(self.n, rho, self.q)?);
        self.map.insert(rho.to_bits(), v);
        Ok(v)
    }
}

pub const GI_FD_STEP: f64 = 0.02;

/// Hessians of every `gᵢ` at `ζ = 0` by central differences on `N`-vectors.
pub fn gi_hessians_at_0(n: usize, k: usize, consts: &ExpansionConstants, q: &QuadratureSpec) -> Result<Vec<GiHessian>> {
    let c = coeffs(n, k, consts)?;
    let nf = n as f64;
    let mut cache = KernelCache { n, q, map: HashMap::new() };
    let curvature = tower_h2_curvature_integral(n)?;
    let h1_0 = cache.get(&vec![0.0; n])?.0;
    let h2_only = (2.0 * nf - 8.0) / nf * c.b3 * curvature;
    let mut out = Vec::with_capacity(k);
    for i in 1..=k {
        let mut g = |z: &[f64]| -> Result<f64> {
            let (a, b) = cache.get(z)?;
            tower_gi(k, i, a, b, consts)
        };
        let at = |dirs: &[(usize, f64)]| {
            let mut z = vec![0.0; n];
            for &(j, v) in dirs {
                z[j] += v;
            }
            z
        };
        let g0 = g(&vec![0.0; n])?;
        let mut diagonal = Vec::with_capacity(n);
        for j in 0..n {
            let mut second = |h: f64| -> Result<f64> {
                Ok((g(&at(&[(j, h)]))? - 2.0 * g0 + g(&at(&[(j, -h)]))?) / (h * h))
            };
            let coarse = second(GI_FD_STEP)?;
            let fine = second(0.5 * GI_FD_STEP)?;
            diagonal.push((4.0 * fine - coarse) / 3.0);
        }
        let h = GI_FD_STEP;
        let mut max_mixed = 0.0f64;
        for j in 0..n {
            for l in j + 1..n {
                let v = (g(&at(&[(j, h), (l, h)]))? - g(&at(&[(j, h), (l, -h)]))?
                    - g(&at(&[(j, -h), (l, h)]))?
                    + g(&at(&[(j, -h), (l, -h)]))?)
                    / (4.0 * h * h);
                max_mixed = max_mixed.max(v.abs());
            }
        }
        let log_part = -c.b4 * (k + 1 - i) as f64 * (nf - 2.0) * sphere_area(n) / (nf * h1_0);
        out.push(GiHessian {
            i,
            diagonal,
            max_mixed,
            h2_only_diagonal: h2_only,
            full_diagonal: h2_only + log_part,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerCritical {
    pub k: usize,
    pub s_hat: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub psi_hat: f64,
    /// `C₁ + Σ gᵢ(ζᵢ)`.
    pub reduced_value: f64,
    /// `max |∂ψ̂/∂sⱼ|` relative to the competing terms at `ŝ`.
    pub gradient_residual: f64,
    pub gi_hessian_at_0: Vec<GiHessian>,
}

pub fn tower_critical(
    n: usize,
    mu0: f64,
    k: usize,
    zetas: &[Vec<f64>],
    consts: &ExpansionConstants,
    q: &QuadratureSpec,
) -> Result<TowerCritical> {
    coeffs(n, k, consts)?;
    if consts.mu0 != mu0 {
        return Err(Error::VariantMismatch(format!("constants built for mu0 = {}, not {mu0}", consts.mu0)));
    }
    if zetas.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: zetas.len() });
    }
    let kern = tower_kernels(n, zetas, q)?;
    let s_hat = tower_s_hat(n, &kern, consts)?;
    let psi_hat = tower_psi_hat(n, &s_hat, &kern, consts)?;
    let (g, scale) = tower_grad_s(n, &s_hat, &kern, consts)?;
    let gradient_residual = g.iter().zip(scale.iter()).fold(0.0f64, |m, (a, b)| m.max(a.abs() / b));
    let c1 = consts.c1.ok_or_else(|| Error::VariantMismatch("tower constants incomplete".into()))?;
    let mut reduced_value = c1;
    for i in 0..k {
        reduced_value += tower_gi(k, i + 1, kern.h1[i], kern.h2[i], consts)?;
    }
    Ok(TowerCritical {
        k,
        lambdas: tower_lambdas_from_s(n, &s_hat),
        s_hat,
        psi_hat,
        reduced_value,
        gradient_residual,
        gi_hessian_at_0: gi_hessians_at_0(n, k, consts, q)?,
    })
}

/// Newton solve of `∇ψ̂ = 0` from `start`, each component divided by its
/// term scale.
pub fn tower_newton(
    n: usize,
    kern: &TowerKernels,
    consts: &ExpansionConstants,
    start: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let k = kern.k();
    let c = coeffs(n, k, consts)?;
    let f = |s: &DVector<f64>| {
        let v: Vec<f64> = s.iter().map(|x| x.abs().max(f64::MIN_POSITIVE)).collect();
        match tower_grad_s(n, &v, kern, consts) {
            Ok((g, _)) => DVector::from_iterator(k + 1, g.iter().enumerate().map(|(j, x)| x * v[j] / c.b4)),
            Err(_) => DVector::from_element(k + 1, f64::NAN),
        }
    };
    // components sⱼ ∂ⱼψ̂ / b₄ are linear or quadratic in sⱼ
    let jac = |s: &DVector<f64>| {
        let mut d = DMatrix::zeros(k + 1, k + 1);
        d[(0, 0)] = 4.0 * c.b1 * s[0] / c.b4;
        for i in 0..k {
            d[(i + 1, i + 1)] = c.b2 * kern.h1[i] / c.b4;
        }
        d
    };
    let sol = newton_nd(f, jac, start, tol, 100)?;
    Ok(sol.x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::expansion_constants;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn consts(k: usize) -> ExpansionConstants {
        expansion_constants(7, 1.0, k, Variant::Tower, &QuadratureSpec::default()).unwrap()
    }

    fn random_zetas(rng: &mut ChaCha8Rng, k: usize) -> Vec<Vec<f64>> {
        (0..k).map(|_| (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn k0_collapses() {
        let c = consts(0);
        let r = tower_critical(7, 1.0, 0, &[], &c, &QuadratureSpec::default()).unwrap();
        assert!((r.s_hat[0] - (c.b4.unwrap() / (2.0 * c.b1)).sqrt()).abs() < 1e-15);
        assert_eq!(r.reduced_value, c.c1.unwrap());
        assert!((r.psi_hat - c.c1.unwrap()).abs() <= 1e-12 * r.psi_hat.abs());
    }

    #[test]
    fn gradient_vanishes_and_value_splits() {
        let q = QuadratureSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=3 {
            let c = consts(k);
            let z = random_zetas(&mut rng, k);
            let kern = tower_kernels(7, &z, &q).unwrap();
            let s = tower_s_hat(7, &kern, &c).unwrap();
            let (g, scale) = tower_grad_s(7, &s, &kern, &c).unwrap();
            for j in 0..=k {
                assert!(g[j].abs() <= 1e-14 * scale[j]);
            }
            let psi = tower_psi_hat(7, &s, &kern, &c).unwrap();
            let mut split = c.c1.unwrap();
            for i in 0..k {
                split += tower_gi(k, i + 1, kern.h1[i], kern.h2[i], &c).unwrap();
            }
            assert!((psi - split).abs() <= 1e-11 * psi.abs());
            // λ form agrees with s form
            let l = tower_lambdas_from_s(7, &s);
            let v = tower_psi_with(7, &l, &kern, &c).unwrap();
            assert!((v - psi).abs() <= 1e-11 * psi.abs());
            let back = tower_s_from_lambdas(7, &l);
            for (a, b) in back.iter().zip(&s) {
                assert!((a - b).abs() <= 1e-13 * b);
            }
            // independent Newton solve from a perturbed start
            let start: Vec<f64> = s.iter().map(|v| v * rng.gen_range(0.9..1.1)).collect();
            let sol = tower_newton(7, &kern, &c, &start, 1e-14).unwrap();
            for (a, b) in sol.iter().zip(&s) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
        }
    }

    #[test]
    fn lambda_derivatives_match_fd() {
        let q = QuadratureSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = consts(2);
        let kern = tower_kernels(7, &random_zetas(&mut rng, 2), &q).unwrap();
        for _ in 0..20 {
            let l: Vec<f64> = (0..3).map(|_| rng.gen_range(0.3..3.0)).collect();
            let (g, h) = tower_grad_hess(7, &l, &kern, &c).unwrap();
            assert_eq!(h, h.transpose());
            for j in 0..3 {
                let step = 1e-5 * l[j];
                let mut up = l.clone();
                let mut dn = l.clone();
                up[j] += step;
                dn[j] -= step;
                let fd = (tower_psi_with(7, &up, &kern, &c).unwrap() - tower_psi_with(7, &dn, &kern, &c).unwrap()) / (2.0 * step);
                assert!((fd - g[j]).abs() <= 1e-6 * g.amax().max(c.b4.unwrap() / l[j]));
                let gu = tower_grad_hess(7, &up, &kern, &c).unwrap().0;
                let gd = tower_grad_hess(7, &dn, &kern, &c).unwrap().0;
                for i in 0..3 {
                    assert!(((gu[i] - gd[i]) / (2.0 * step) - h[(i, j)]).abs() <= 1e-6 * h.amax());
                }
            }
        }
    }

    #[test]
    fn gi_hessian_structure() {
        let c = consts(2);
        let hs = gi_hessians_at_0(7, 2, &c, &QuadratureSpec::default()).unwrap();
        for h in &hs {
            let d0 = h.diagonal[0];
            assert!(h.diagonal.iter().all(|d| (d - d0).abs() <= 1e-7 * d0.abs()));
            assert!(h.max_mixed <= 1e-7 * d0.abs());
            // the log term dominates: ζ = 0 is a nondegenerate maximum
            assert!(d0 < 0.0 && h.h2_only_diagonal > 0.0);
            assert!((d0 - h.full_diagonal).abs() <= 1e-7 * h.full_diagonal.abs(), "{d0} {}", h.full_diagonal);
        }
    }

    #[test]
    fn errors() {
        let c = consts(1);
        let q = QuadratureSpec::default();
        assert!(tower_critical(7, 1.0, 2, &[vec![0.0; 7], vec![0.0; 7]], &c, &q).is_err());
        assert!(tower_critical(7, 2.0, 1, &[vec![0.0; 7]], &c, &q).is_err());
        assert!(tower_psi_with(7, &[1.0, -1.0], &TowerKernels { h1: vec![1.0], h2: vec![1.0] }, &c).is_err());
    }
}
