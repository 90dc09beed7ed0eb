//! Whole-space integrals behind the expansion constants: Beta closed forms,
//! radial quadrature of the profiles, and the tower kernels `h₁`, `h₂`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::profiles::{
    check_dimension, critical_exponent, half_weight, hardy_params, sobolev_constants_with,
    standard_constant, standard_energy, HardyParams,
};
use crate::quadrature::{
    gauss_kronrod, gauss_kronrod_half_line, integrate_radial, tanh_sinh, tanh_sinh_half_line,
    CompensatedSum, QuadratureSpec,
};

/// Area of the unit sphere `S^{n-1} ⊂ R^n`.
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// `∫₀^∞ r^a (1+r²)^{-p} dr = ½ B((a+1)/2, p-(a+1)/2)`.
pub fn radial_power_integral(a: f64, p: f64) -> Result<f64> {
    if !(a > -1.0) || !(2.0 * p - a > 1.0) {
        return Err(Error::DivergentIntegral(format!(
            "∫ r^{a} (1+r²)^-{p} diverges"
        )));
    }
    let x = 0.5 * (a + 1.0);
    Ok(0.5 * ln_beta(x, p - x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantonIntegrals {
    /// `∫U^{2*} = S₀^{N/2}`
    pub int_u_2star: f64,
    pub int_u_2star_minus1: f64,
    pub int_u_ln_u: f64,
    /// `∫(1+|z|²)^{-(N+2)/2}`
    pub int_standard_kernel: f64,
    /// Largest relative gap between the closed forms and radial quadrature.
    pub max_discrepancy: f64,
}

pub fn instanton_integrals(n: usize, q: &QuadratureSpec) -> Result<InstantonIntegrals> {
    check_dimension(n)?;
    let nf = n as f64;
    let m = half_weight(n);
    let p = critical_exponent(n);
    let c0 = standard_constant(n);
    let omega = sphere_area(n);
    let half_beta = radial_power_integral(nf - 1.0, nf)?;
    let closed_2star = standard_energy(n);
    let closed_minus1 = (( p - 1.0) * c0.ln()).exp() * omega / nf;
    let closed_kernel = omega / nf;
    let closed_ln = c0.ln() * closed_2star
        - m * closed_2star * (digamma(nf) - digamma(0.5 * nf));
    debug_assert!((closed_2star - (p * c0.ln()).exp() * omega * half_beta).abs() <= 1e-12 * closed_2star);

    let u = |r: f64| c0 * (1.0 + r * r).powf(-m);
    let radial = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(omega * integrate_radial(|r| r.powf(nf - 1.0) * g(r), &[1.0], q)?)
    };
    let quad_2star = radial(&|r| u(r).powf(p))?;
    let quad_minus1 = radial(&|r| u(r).powf(p - 1.0))?;
    let quad_kernel = radial(&|r| (1.0 + r * r).powf(-0.5 * (nf + 2.0)))?;
    let quad_ln = radial(&|r| {
        let v = u(r);
        v.powf(p) * (c0.ln() - m * (r * r).ln_1p())
    })?;
    let gap = |a: f64, b: f64| ((a - b) / a).abs();
    let max_discrepancy = [
        gap(closed_2star, quad_2star),
        gap(closed_minus1, quad_minus1),
        gap(closed_kernel, quad_kernel),
        gap(closed_ln, quad_ln),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(InstantonIntegrals {
        int_u_2star: closed_2star,
        int_u_2star_minus1: closed_minus1,
        int_u_ln_u: closed_ln,
        int_standard_kernel: closed_kernel,
        max_discrepancy,
    })
}

/// `∫U_{1,0}^{2*}` by radial quadrature alone.
pub fn standard_energy_quadrature(n: usize, q: &QuadratureSpec) -> Result<f64> {
    check_dimension(n)?;
    let nf = n as f64;
    let m = half_weight(n);
    let p = critical_exponent(n);
    let c0 = standard_constant(n);
    Ok(sphere_area(n)
        * integrate_radial(
            |r| r.powf(nf - 1.0) * (c0 * (1.0 + r * r).powf(-m)).powf(p),
            &[1.0],
            q,
        )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyIntegrals {
    pub int_v_2star: f64,
    pub int_v_ln_v: f64,
    /// `∫(|z|^{β₁}+|z|^{β₂})^{-(N+2)/2}`
    pub int_hardy_kernel: f64,
}

pub fn hardy_profile_integrals(p: &HardyParams, q: &QuadratureSpec) -> Result<HardyIntegrals> {
    let nf = p.n as f64;
    let m = half_weight(p.n);
    let exp = p.critical_exponent();
    let omega = sphere_area(p.n);
    let base = |r: f64| r.powf(p.beta1) + r.powf(p.beta2);
    let radial = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(omega
            * integrate_radial(
                |r| if r == 0.0 { 0.0 } else { r.powf(nf - 1.0) * g(r) },
                &[1.0],
                q,
            )?)
    };
    let int_v_2star = radial(&|r| p.c_mu.powf(exp) * base(r).powf(-m * exp))?;
    let int_v_ln_v = radial(&|r| {
        let b = base(r);
        p.c_mu.powf(exp) * b.powf(-m * exp) * (p.c_mu.ln() - m * b.ln())
    })?;
    let int_hardy_kernel = radial(&|r| base(r).powf(-0.5 * (nf + 2.0)))?;
    Ok(HardyIntegrals {
        int_v_2star,
        int_v_ln_v,
        int_hardy_kernel,
    })
}

/// `h₁(ρ) = ∫ |y+ζ|^{2-N}(1+|y|²)^{-(N+2)/2} dy`, `ρ = |ζ|`, by the mean-value
/// reduction: the spherical mean of `|y+ζ|^{2-N}` over `|y| = r` is
/// `max(r, ρ)^{2-N}`.
pub fn tower_h1(n: usize, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_rho(n, rho)?;
    let nf = n as f64;
    let p = 0.5 * (nf + 2.0);
    let omega = sphere_area(n);
    let mut total = CompensatedSum::new();
    if rho > 0.0 {
        let inner = tanh_sinh(|r| r.powf(nf - 1.0) * (1.0 + r * r).powf(-p), 0.0, rho, q)?.value;
        total.add(rho.powf(2.0 - nf) * inner);
    }
    let outer = tanh_sinh_half_line(|r| r * (1.0 + r * r).powf(-p), rho, q)?.value;
    total.add(outer);
    Ok(omega * total.value())
}

/// `h₁(ρ)` by 2D quadrature in polar coordinates centred at the pole `-ζ`.
pub fn tower_h1_2d(n: usize, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_rho(n, rho)?;
    let nf = n as f64;
    pole_centred_2d(n, rho, q, |r| r, 0.5 * (nf + 2.0))
}

/// `h₂(ρ) = ∫ |y+ζ|^{-2}(1+|y|²)^{2-N} dy` by 2D quadrature in polar
/// coordinates centred at the pole.
pub fn tower_h2(n: usize, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_rho(n, rho)?;
    let nf = n as f64;
    if rho == 0.0 {
        return Ok(sphere_area(n) * radial_power_integral(nf - 3.0, nf - 2.0)?);
    }
    pole_centred_2d(n, rho, q, |r| r.powf(nf - 3.0), nf - 2.0)
}

/// `∫|y|^{-4}(1+|y|²)^{2-N} dy`, the integral in the Hessian of `h₂` at 0.
pub fn tower_h2_curvature_integral(n: usize) -> Result<f64> {
    check_dimension(n)?;
    let nf = n as f64;
    Ok(sphere_area(n) * radial_power_integral(nf - 5.0, nf - 2.0)?)
}

fn check_rho(n: usize, rho: f64) -> Result<()> {
    check_dimension(n)?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::OutOfRange {
            name: "rho",
            value: rho,
            reason: "must be finite and nonnegative",
        });
    }
    Ok(())
}

/// `ω_{N-2} ∫₀^π sin^{N-2}θ ∫₀^∞ w(r) (1+ρ²-2ρr cosθ+r²)^{-p} dr dθ`.
fn pole_centred_2d<W: Fn(f64) -> f64>(
    n: usize,
    rho: f64,
    q: &QuadratureSpec,
    weight: W,
    p: f64,
) -> Result<f64> {
    let nf = n as f64;
    let inner_spec = q.with_rel_tol(q.rel_tol * 0.05);
    let failure = std::cell::RefCell::new(None);
    let outer = gauss_kronrod(
        |theta: f64| {
            let (s, c) = theta.sin_cos();
            let peak = (rho * c).max(0.0);
            let v = gauss_kronrod_half_line(
                |r| weight(r) * (1.0 + rho * rho - 2.0 * rho * r * c + r * r).powf(-p),
                0.0,
                &[peak + 1.0],
                &inner_spec,
            );
            match v {
                Ok(e) => s.powf(nf - 2.0) * e.value,
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    0.0
                }
            }
        },
        &[0.0, 0.5 * std::f64::consts::PI, std::f64::consts::PI],
        q,
    );
    let outer = outer?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    Ok(sphere_area(n - 1) * outer.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Multipoint,
    Tower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub mu0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Multipoint only.
    pub a4: Option<f64>,
    pub b1: f64,
    pub b2: f64,
    /// Tower only.
    pub b3: Option<f64>,
    /// Tower only.
    pub b4: Option<f64>,
    /// Tower only.
    pub c1: Option<f64>,
}

impl ExpansionConstants {
    /// `b₂/(2b₁)` for the multipoint variant, the right-hand side of every
    /// stationarity system.
    pub fn ratio(&self) -> f64 {
        self.b2 / (2.0 * self.b1)
    }
}

pub fn expansion_constants(
    n: usize,
    mu0: f64,
    k: usize,
    variant: Variant,
    q: &QuadratureSpec,
) -> Result<ExpansionConstants> {
    check_dimension(n)?;
    if !(mu0 > 0.0) || !mu0.is_finite() {
        return Err(Error::OutOfRange {
            name: "mu0",
            value: mu0,
            reason: "must be positive",
        });
    }
    if variant == Variant::Multipoint && k < 1 {
        return Err(Error::OutOfRange {
            name: "k",
            value: k as f64,
            reason: "multipoint ansatz needs k >= 1",
        });
    }
    let nf = n as f64;
    let m = half_weight(n);
    let p = critical_exponent(n);
    let c0 = standard_constant(n);
    let inst = instanton_integrals(n, q)?;
    let sob = sobolev_constants_with(n, 0.0, &q.with_rel_tol(q.rel_tol.min(1e-13)))?;
    let kk = (k + 1) as f64;
    let s0_half = inst.int_u_2star;
    let a1 = kk * s0_half / nf;
    let a2_common = kk / p * inst.int_u_ln_u - kk / (p * p) * s0_half;
    let hardy_shift = 0.5 * sob.s0.powf(m) * sob.s_bar * mu0;
    let b1 = 0.5 * c0 * inst.int_u_2star_minus1;
    match variant {
        Variant::Multipoint => Ok(ExpansionConstants {
            variant,
            n,
            k,
            mu0,
            a1,
            a2: a2_common,
            a3: hardy_shift,
            a4: Some(kk / (2.0 * p) * s0_half),
            b1,
            b2: s0_half / p,
            b3: None,
            b4: None,
            c1: None,
        }),
        Variant::Tower => {
            let b2 = (p * c0.ln()).exp();
            let b3 = 0.5 * c0 * c0 * mu0;
            let b4 = s0_half / p;
            let mut logs = 0.5 * kk * (kk * b4 / (2.0 * b1)).ln();
            for i in 1..=k {
                let fi = i as f64;
                logs += fi * (fi * b4 / b2).ln();
            }
            let c1 = kk * kk * b4 / 2.0 - b4 * logs;
            Ok(ExpansionConstants {
                variant,
                n,
                k,
                mu0,
                a1,
                a2: a2_common - hardy_shift,
                a3: kk * kk / (2.0 * p) * s0_half,
                a4: None,
                b1,
                b2,
                b3: Some(b3),
                b4: Some(b4),
                c1: Some(c1),
            })
        }
    }
}

/// Value of the Hardy kernel as `μ → 0`, checked against the standard one.
pub fn hardy_kernel_at(n: usize, mu: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(hardy_profile_integrals(&hardy_params(n, mu)?, q)?.int_hardy_kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn tight() -> QuadratureSpec {
        QuadratureSpec::default().with_rel_tol(1e-13)
    }

    #[test]
    fn radial_power_examples() {
        assert_relative_eq!(radial_power_integral(0.0, 1.0).unwrap(), PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(radial_power_integral(1.0, 2.0).unwrap(), 0.5, max_relative = 1e-14);
        let quad = tanh_sinh_half_line(|r| r.powi(6) * (1.0 + r * r).powf(-4.5), 0.0, &tight()).unwrap();
        assert_relative_eq!(radial_power_integral(6.0, 4.5).unwrap(), quad.value, max_relative = 1e-12);
        assert!(radial_power_integral(-1.0, 3.0).is_err());
        assert!(radial_power_integral(2.0, 1.5).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(7), 33.073_361_792_319_808, max_relative = 1e-14);
    }

    #[test]
    fn instanton_values_n7() {
        let i = instanton_integrals(7, &tight()).unwrap();
        assert_relative_eq!(i.int_u_2star, 64_343.757_902_225_117, max_relative = 1e-13);
        assert_relative_eq!(i.int_u_2star_minus1, 14_077.754_957_839_960, max_relative = 1e-13);
        assert_relative_eq!(i.int_u_ln_u, 162_153.723_541_410_45, max_relative = 1e-13);
        assert_relative_eq!(i.int_standard_kernel, sphere_area(7) * radial_power_integral(6.0, 4.5).unwrap(), max_relative = 1e-14);
        assert!(i.max_discrepancy < 1e-12, "{}", i.max_discrepancy);
    }

    #[test]
    fn closed_forms_match_quadrature_across_dimensions() {
        for n in 5..=30 {
            let i = instanton_integrals(n, &QuadratureSpec::default()).unwrap();
            assert!(i.max_discrepancy <= 1e-10, "N={n}: {}", i.max_discrepancy);
        }
    }

    #[test]
    fn hardy_integrals_mu_zero_match_instanton() {
        let inst = instanton_integrals(7, &tight()).unwrap();
        let h = hardy_profile_integrals(&hardy_params(7, 0.0).unwrap(), &tight()).unwrap();
        assert_relative_eq!(h.int_v_2star, inst.int_u_2star, max_relative = 1e-9);
        assert_relative_eq!(h.int_v_ln_v, inst.int_u_ln_u, max_relative = 1e-9);
        assert_relative_eq!(h.int_hardy_kernel, inst.int_standard_kernel, max_relative = 1e-9);
    }

    #[test]
    fn hardy_integrals_mu_small() {
        let h = hardy_profile_integrals(&hardy_params(7, 1e-3).unwrap(), &tight()).unwrap();
        assert_relative_eq!(h.int_v_2star, 64_312.877_839_769_104, max_relative = 1e-11);
        assert_relative_eq!(h.int_v_ln_v, 162_063.038_602_168_59, max_relative = 1e-11);
        assert_relative_eq!(h.int_hardy_kernel, 4.725_938_205_795_862_4, max_relative = 1e-11);
        let s = sobolev_constants_with(7, 1e-3, &tight()).unwrap();
        assert_relative_eq!(h.int_v_2star, s.s_mu.powf(3.5), max_relative = 1e-11);
    }

    #[test]
    fn hardy_kernel_limit() {
        let k0 = instanton_integrals(7, &tight()).unwrap().int_standard_kernel;
        let vals: Vec<f64> = [1e-3, 1e-5, 1e-7]
            .iter()
            .map(|&mu| hardy_kernel_at(7, mu, &tight()).unwrap())
            .collect();
        // linear extrapolation to μ = 0 from the two smallest values
        let extrap = vals[2] - (vals[1] - vals[2]) * 1e-7 / (1e-5 - 1e-7);
        assert_relative_eq!(extrap, k0, max_relative = 1e-10);
        assert!((vals[0] - k0).abs() > (vals[1] - k0).abs());
    }

    #[test]
    fn h1_at_zero_collapses() {
        let h = tower_h1(7, 0.0, &tight()).unwrap();
        assert_relative_eq!(h, sphere_area(7) * radial_power_integral(1.0, 4.5).unwrap(), max_relative = 1e-13);
        assert_relative_eq!(h, 4.724_765_970_331_401_2, max_relative = 1e-13);
    }

    #[test]
    fn h1_reductions_agree() {
        for n in [7, 10] {
            for rho in [0.0, 0.3, 1.0, 3.0] {
                let a = tower_h1(n, rho, &tight()).unwrap();
                let b = tower_h1_2d(n, rho, &QuadratureSpec::default().with_rel_tol(1e-12)).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn h1_decreasing() {
        let vals: Vec<f64> = (0..60).map(|i| tower_h1(7, 0.05 * i as f64, &tight()).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn h2_examples() {
        let h0 = tower_h2(7, 0.0, &tight()).unwrap();
        assert_relative_eq!(h0, 1.217_613_637_925_030_5, max_relative = 1e-13);
        // the 2D path at a tiny offset approaches the collapsed value
        let near = tower_h2(7, 1e-6, &QuadratureSpec::default().with_rel_tol(1e-12)).unwrap();
        assert_relative_eq!(near, h0, max_relative = 1e-9);
        let q = QuadratureSpec::default();
        let a = tower_h2(7, 1.0, &q).unwrap();
        let b = tower_h2(7, 1.0, &q.with_rel_tol(0.5 * q.rel_tol)).unwrap();
        assert!((a - b).abs() <= 10.0 * q.rel_tol * a);
    }

    #[test]
    fn h2_curvature_integral_n7() {
        assert_relative_eq!(tower_h2_curvature_integral(7).unwrap(), 2.029_356_063_208_384_1, max_relative = 1e-13);
    }

    #[test]
    fn expansion_constants_n7() {
        let q = QuadratureSpec::default();
        let m = expansion_constants(7, 1.0, 1, Variant::Multipoint, &q).unwrap();
        assert_relative_eq!(m.a1, 18_383.930_829_207_176, max_relative = 1e-13);
        assert_relative_eq!(m.a1, 2.0 / 7.0 * instanton_integrals(7, &q).unwrap().int_u_2star, max_relative = 1e-15);
        assert_relative_eq!(m.a2, 99_409.864_289_215_342, max_relative = 1e-12);
        assert_relative_eq!(m.a3, 4_412.143_399_009_722_3, max_relative = 1e-6);
        assert_relative_eq!(m.a4.unwrap(), 22_979.913_536_508_970, max_relative = 1e-13);
        assert_relative_eq!(m.b1, 599_222.981_617_215_15, max_relative = 1e-13);
        assert_relative_eq!(m.b2, 22_979.913_536_508_970, max_relative = 1e-13);
        let expected_c1 = [
            56_923.089_462_455_951,
            176_080.271_513_641_13,
            335_530.985_325_288_96,
            525_358.867_170_980_99,
        ];
        for k in 0..4 {
            let t = expansion_constants(7, 1.0, k, Variant::Tower, &q).unwrap();
            assert_eq!(t.b1, m.b1);
            assert_relative_eq!(t.b2, 253_651.920_700_396_04, max_relative = 1e-13);
            assert_relative_eq!(t.b3.unwrap(), 3_623.598_867_148_514_8, max_relative = 1e-13);
            assert_relative_eq!(t.b4.unwrap(), 22_979.913_536_508_970, max_relative = 1e-13);
            assert_relative_eq!(t.c1.unwrap(), expected_c1[k], max_relative = 1e-12);
        }
        let t0 = expansion_constants(7, 1.0, 0, Variant::Tower, &q).unwrap();
        assert_relative_eq!(t0.a2, 45_292.788_745_597_949, max_relative = 1e-7);
        assert_relative_eq!(t0.a3, 11_489.956_768_254_485, max_relative = 1e-13);
    }

    #[test]
    fn expansion_constants_preconditions() {
        let q = QuadratureSpec::default();
        assert!(expansion_constants(7, 0.0, 1, Variant::Tower, &q).is_err());
        assert!(expansion_constants(7, 1.0, 0, Variant::Multipoint, &q).is_err());
        let a = expansion_constants(7, 1.0, 2, Variant::Tower, &q).unwrap();
        let b = expansion_constants(7, 2.5, 2, Variant::Tower, &q).unwrap();
        assert_relative_eq!(b.b3.unwrap() / a.b3.unwrap(), 2.5, max_relative = 1e-15);
    }
}
