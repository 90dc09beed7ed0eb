//! Dimension constants and the two limiting profiles: the standard bubble
//! `U_{δ,ξ}` and the radial Hardy bubble `V_σ`.
//!
//! The Hardy constant is taken to be `(N-2)²/4`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::{radial_power_integral, sphere_area};
use crate::quadrature::{integrate_radial, QuadratureSpec};

pub const MIN_DIMENSION: usize = 5;

/// `2* = 2N/(N-2)`.
pub fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// `(N-2)/2`, the scaling exponent of both profiles.
pub fn half_weight(n: usize) -> f64 {
    0.5 * (n as f64 - 2.0)
}

pub fn hardy_constant(n: usize) -> f64 {
    let d = n as f64 - 2.0;
    0.25 * d * d
}

/// `C₀ = (N(N-2))^{(N-2)/4}`.
pub fn standard_constant(n: usize) -> f64 {
    let nf = n as f64;
    ((nf - 2.0) / 4.0 * (nf * (nf - 2.0)).ln()).exp()
}

pub(crate) fn check_dimension(n: usize) -> Result<()> {
    if n < MIN_DIMENSION {
        return Err(Error::DimensionTooSmall(n, MIN_DIMENSION));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyParams {
    pub n: usize,
    pub mu: f64,
    pub mu_bar: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c_mu: f64,
    pub c0: f64,
}

pub fn hardy_params(n: usize, mu: f64) -> Result<HardyParams> {
    check_dimension(n)?;
    let mu_bar = hardy_constant(n);
    if !(0.0..mu_bar).contains(&mu) {
        return Err(Error::MuOutOfRange { mu, mu_bar });
    }
    let ratio = mu / mu_bar;
    let root = (1.0 - ratio).sqrt();
    // 1 - sqrt(1 - r) without cancellation
    let beta1 = ratio / (1.0 + root);
    let beta2 = 1.0 + root;
    let nf = n as f64;
    let c_mu = ((nf - 2.0) / 4.0 * (4.0 * nf * (mu_bar - mu) / (nf - 2.0)).ln()).exp();
    Ok(HardyParams {
        n,
        mu,
        mu_bar,
        beta1,
        beta2,
        c_mu,
        c0: standard_constant(n),
    })
}

impl HardyParams {
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.n)
    }

    /// `V_σ(r)` for `r = |x|`.
    pub fn bubble_radial(&self, sigma: f64, r: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveScale(sigma));
        }
        if r == 0.0 && self.mu > 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.bubble_radial_unchecked(sigma, r))
    }

    pub(crate) fn bubble_radial_unchecked(&self, sigma: f64, r: f64) -> f64 {
        let den = sigma * sigma * r.powf(self.beta1) + r.powf(self.beta2);
        self.c_mu * (sigma / den).powf(half_weight(self.n))
    }
}

pub fn standard_bubble(n: usize, delta: f64, xi: &[f64], x: &[f64]) -> Result<f64> {
    check_dimension(n)?;
    if xi.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if xi.len() != n { xi.len() } else { x.len() },
        });
    }
    let d2: f64 = xi.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    standard_bubble_sq(n, delta, d2)
}

/// `U_{δ,0}(r)`.
pub fn standard_bubble_radial(n: usize, delta: f64, r: f64) -> Result<f64> {
    standard_bubble_sq(n, delta, r * r)
}

fn standard_bubble_sq(n: usize, delta: f64, d2: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveScale(delta));
    }
    Ok(standard_constant(n) * (delta / (delta * delta + d2)).powf(half_weight(n)))
}

pub fn hardy_bubble(p: &HardyParams, sigma: f64, x: &[f64]) -> Result<f64> {
    if x.len() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: x.len(),
        });
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    p.bubble_radial(sigma, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevConstants {
    pub s0: f64,
    pub s_mu: f64,
    pub s_bar: f64,
}

/// `∫_{R^N} U_{1,0}^{2*}` in closed Beta form.
pub fn standard_energy(n: usize) -> f64 {
    let p = critical_exponent(n);
    let nf = n as f64;
    (p * standard_constant(n).ln()).exp() * sphere_area(n) * radial_power_integral_unchecked(nf - 1.0, nf)
}

fn radial_power_integral_unchecked(a: f64, p: f64) -> f64 {
    radial_power_integral(a, p).expect("convergent by construction")
}

/// `∫_{R^N} V₁^{2*}` by radial quadrature.
pub fn hardy_energy(p: &HardyParams, q: &QuadratureSpec) -> Result<f64> {
    let exp = p.critical_exponent();
    let nf = p.n as f64;
    let omega = sphere_area(p.n);
    let v = integrate_radial(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            r.powf(nf - 1.0) * p.bubble_radial_unchecked(1.0, r).powf(exp)
        },
        &[1.0],
        q,
    )?;
    Ok(omega * v)
}

pub fn sobolev_constants(n: usize, mu: f64) -> Result<SobolevConstants> {
    sobolev_constants_with(n, mu, &QuadratureSpec::default().with_rel_tol(1e-13))
}

pub fn sobolev_constants_with(n: usize, mu: f64, q: &QuadratureSpec) -> Result<SobolevConstants> {
    let p = hardy_params(n, mu)?;
    let power = 2.0 / n as f64;
    let s0 = standard_energy(n).powf(power);
    let s_mu = hardy_energy(&p, q)?.powf(power);
    let h = 1e-4 * p.mu_bar;
    let slope = |step: f64| -> Result<f64> {
        let ph = hardy_params(n, step)?;
        Ok((s0 - hardy_energy(&ph, q)?.powf(power)) / step)
    };
    let d1 = slope(h)?;
    let d2 = slope(2.0 * h)?;
    let s_bar = 2.0 * d1 - d2;
    Ok(SobolevConstants { s0, s_mu, s_bar })
}
