//! Acceptance checks, one function per criterion. Each returns a verdict with
//! a short numeric detail; wall time is kept out of the serialised report so
//! that identical seeds give identical bytes.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{gamma_tau, BallDomain, PlacementK};
use crate::critical::{refine_root, scan_sign};
use crate::energy::{
    coefficient_extraction, energy_functional, fit_leading, hardy_deficit, pair_interaction, pair_target,
    standard_deficit, tower_k0_configuration, Basis,
};
use crate::error::Result;
use crate::integrals::{
    expansion_constants, hardy_profile_integrals, sphere_area, standard_energy_quadrature, tower_h1, tower_h1_2d,
    ExpansionConstants, Variant,
};
use crate::profiles::{critical_exponent, hardy_params, sobolev_constants_with, standard_constant, standard_energy};
use crate::quadrature::QuadratureSpec;
use crate::reduced::{
    grad_hess_from_matrix, gamma2_root, interaction_matrix, iota1, iota3, iota3_terms, minimal_iota1_dimension,
    polygon_window, psi_from_matrix, remark36_iota2, roots_of, solve_stationarity, thm11_minimum, thm11_profile,
    thm12_profile_in, thm13_profile_in, thm13_windows, tower_critical, tower_grad_hess, tower_kernels, tower_psi_with,
    SignPattern,
};

pub const DEFAULT_SEED: u64 = 42;
pub const CRITERIA: std::ops::RangeInclusive<u32> = 1..=11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn name(id: u32) -> &'static str {
    match id {
        1 => "constants",
        2 => "hardy-expansion",
        3 => "axis-profile",
        4 => "triangle-family",
        5 => "square-family",
        6 => "alternating-square",
        7 => "tower",
        8 => "equal-scales",
        9 => "derivatives",
        10 => "kernel-oracle",
        11 => "energy-expansion",
        _ => "unknown",
    }
}

/// Runs criterion `id`; computation errors count as failures.
pub fn run(id: u32, seed: u64) -> Verdict {
    let start = Instant::now();
    let outcome = match id {
        1 => constants(),
        2 => hardy_expansion(),
        3 => axis_profile(),
        4 => triangle_family(),
        5 => square_family(),
        6 => alternating_square(),
        7 => tower(seed),
        8 => equal_scales(seed),
        9 => derivatives(seed),
        10 => kernel_oracle(),
        11 => energy_expansion(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let budget = match id {
        1 => 5.0,
        3 => 10.0,
        4 | 7 => 60.0,
        5 => 120.0,
        6 => 30.0,
        11 => 1800.0,
        _ => f64::INFINITY,
    };
    let (passed, detail) = match outcome {
        Ok((ok, d)) if seconds < budget => (ok, d),
        Ok((_, d)) => (false, format!("{d}; over the {budget} s budget")),
        Err(e) => (false, format!("error: {e}")),
    };
    Verdict { id, name: name(id).into(), passed, detail, seconds }
}

pub fn run_all(seed: u64) -> Vec<Verdict> {
    CRITERIA.map(|id| run(id, seed)).collect()
}

type Outcome = Result<(bool, String)>;
type GradHess = (DVector<f64>, nalgebra::DMatrix<f64>);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn multipoint(n: usize, k: usize) -> Result<ExpansionConstants> {
    expansion_constants(n, 1.0, k, Variant::Multipoint, &QuadratureSpec::default())
}

fn constants() -> Outcome {
    let q = QuadratureSpec::default().with_rel_tol(1e-13);
    let mut worst = 0.0f64;
    for n in [7, 10, 15] {
        worst = worst.max(rel(standard_energy_quadrature(n, &q)?, standard_energy(n)));
    }
    Ok((worst <= 1e-10, format!("max relative gap {worst:.2e}")))
}

fn hardy_expansion() -> Outcome {
    let n = 7;
    let mut worst = 0.0f64;
    for mu in [1e-3, 1e-4] {
        let p = hardy_params(n, mu)?;
        let gap = (p.c_mu - p.c0 * (1.0 - mu / (n as f64 - 2.0))).abs() / p.c0;
        worst = worst.max(gap / (10.0 * (mu / p.mu_bar).powi(2)));
    }
    // slope of S_μ at the origin from chords at each μ
    let q = QuadratureSpec::default().with_rel_tol(1e-13);
    let s0 = sobolev_constants_with(n, 0.0, &q)?.s0;
    let mut slopes = Vec::new();
    for mu in [1e-3, 1e-4, 1e-5] {
        let s = sobolev_constants_with(n, mu, &q)?.s_mu;
        slopes.push((s0 - s) / mu);
    }
    let s_bar = sobolev_constants_with(n, 0.0, &q)?.s_bar;
    let spread = slopes.iter().map(|s| rel(*s, s_bar)).fold(0.0f64, f64::max);
    let ok = worst <= 1.0 && s_bar > 0.0 && spread < 5e-4;
    Ok((ok, format!("C_mu gap / bound {worst:.3}; S_bar {s_bar:.6e}, chord spread {spread:.1e}")))
}

fn axis_profile() -> Outcome {
    let n = 7;
    let c = multipoint(n, 1)?;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let t = (i as f64 + 0.5) / 1000.0;
        let p = thm11_profile(n, t, &c)?;
        worst = worst.max(rel(p.nu_direct, p.nu));
    }
    let m = thm11_minimum(n, &c)?;
    let gap = (m.nu_prime_root - m.phi_minimizer).abs();
    let eigs = thm11_profile(n, m.nu_prime_root, &c)?.hess_eigs;
    let ok = worst <= 1e-11 && gap <= 1e-9 && eigs.iter().all(|e| *e > 0.0);
    Ok((ok, format!("nu gap {worst:.1e}; root {:.12} vs minimiser gap {gap:.1e}; eigs {:.3e} {:.3e}", m.nu_prime_root, eigs[0], eigs[1])))
}

fn triangle_family() -> Outcome {
    let n = 7;
    let t_star = polygon_window(n, 3)?;
    let g = gamma_tau(n, t_star)?.gamma1.abs();
    let (lo, hi) = (t_star + 1e-6, 1.0 - 1e-6);
    let mut min_iota = f64::INFINITY;
    for i in 0..10_000 {
        min_iota = min_iota.min(iota1(n, lo + (hi - lo) * i as f64 / 9999.0)?);
    }
    let n0 = minimal_iota1_dimension(n, 60)?;
    let mut tail_ok = n0.is_some();
    let mut pairs = 0;
    if let Some(n0) = n0 {
        for dim in n0..=60 {
            if iota1(dim, 0.5)? >= 0.0 {
                tail_ok = false;
            }
            let ts = polygon_window(dim, 3)?;
            let f = |t: f64| iota1(dim, t).unwrap_or(f64::NAN);
            let roots = roots_of("iota1", f, ts + 1e-6, 1.0 - 1e-6, 10_000)?;
            if roots.len() >= 2 && roots[0] != roots[1] {
                pairs += 1;
            } else {
                tail_ok = false;
            }
        }
    }
    let ok = g <= 1e-12 && t_star < 0.5 && min_iota > 0.0 && tail_ok;
    Ok((
        ok,
        format!("t* {t_star:.12}, |gamma1(t*)| {g:.1e}; min iota1 {min_iota:.3e}; N0 {n0:?}, {pairs} dimensions with two roots"),
    ))
}

fn square_family() -> Outcome {
    let bound = (6f64.sqrt() - 2f64.sqrt()) / 2.0;
    let mut failures = Vec::new();
    let mut min_iota = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for n in 7..=30 {
        let ts = gamma2_root(n)?;
        if ts <= bound {
            failures.push(format!("N={n}: t* {ts:.6}"));
        }
        let (mut mi, mut mm) = (f64::INFINITY, f64::INFINITY);
        for i in 0..10_000 {
            let t = ts + (1.0 - ts) * (i as f64 + 0.5) / 10_000.0;
            let r = remark36_iota2(n, t)?;
            if !(r.iota2.is_finite() && r.margin.is_finite()) {
                mi = f64::NAN;
            }
            mi = mi.min(r.iota2);
            mm = mm.min(r.margin);
        }
        if !(mi > 0.0 && mm > 0.0) {
            failures.push(format!("N={n}: min iota2 {mi:.3e}, min margin {mm:.3e}"));
        }
        min_iota = min_iota.min(mi);
        min_margin = min_margin.min(mm);
    }
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            format!("N 7..=30: t* > {bound:.5}, min iota2 {min_iota:.3e}, min margin {min_margin:.3e}")
        } else {
            failures.join("; ")
        },
    ))
}

fn alternating_square() -> Outcome {
    let n = 7;
    let c = multipoint(n, 4)?;
    let w = thm13_windows(n)?;
    let windows_ok = w.t1_star > 0.0 && w.t1_star < 0.5 && w.t2_star > 0.5 && w.t2_star < 1.0;
    let f = |t: f64| iota3(n, t).unwrap_or(f64::NAN);
    let mut scan = scan_sign("iota3", f, 1e-3, w.t1_star - 1e-9, 4096)?;
    let mut root_res = f64::INFINITY;
    let mut root = f64::NAN;
    if let Some(b) = scan.brackets.first() {
        let r = refine_root(f, (b.left, b.right), 1e-15)?;
        let terms = iota3_terms(n, r.location)?;
        root_res = f(r.location).abs() / terms.iter().map(|v| v.abs()).sum::<f64>();
        root = r.location;
    }
    scan.brackets.clear();
    let mut worst_system = 0.0f64;
    let mut sign_misses = 0;
    let ts: Vec<f64> = (0..25)
        .map(|i| w.t1_star * (i as f64 + 0.5) / 25.0)
        .chain((0..25).map(|i| w.t2_star + (1.0 - w.t2_star) * (i as f64 + 0.5) / 25.0))
        .collect();
    for &t in &ts {
        let p = thm13_profile_in(n, t, &w, &c)?;
        worst_system = worst_system.max(p.system_residual);
        let s = gamma_tau(n, t)?.gamma3.signum();
        if p.det_sign != s || p.hess_det_sign != s {
            sign_misses += 1;
        }
    }
    let ok = windows_ok && root_res <= 1e-10 && worst_system <= 1e-10 && sign_misses == 0;
    Ok((
        ok,
        format!(
            "t1* {:.10}, t2* {:.10}; iota3 root {root:.12} residual {root_res:.1e}; system residual {worst_system:.1e}; {sign_misses}/50 sign mismatches",
            w.t1_star, w.t2_star
        ),
    ))
}

fn tower(seed: u64) -> Outcome {
    let n = 7;
    let q = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_grad = 0.0f64;
    let mut worst_equal = 0.0f64;
    let mut worst_printed = 0.0f64;
    let mut worst_full = 0.0f64;
    let mut worst_mixed = 0.0f64;
    for k in 0..=3 {
        let c = expansion_constants(n, 1.0, k, Variant::Tower, &q)?;
        for _ in 0..20 {
            let z: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let r = tower_critical(n, 1.0, k, &z, &c, &q)?;
            worst_grad = worst_grad.max(r.gradient_residual);
        }
        let r = tower_critical(n, 1.0, k, &vec![vec![0.0; n]; k], &c, &q)?;
        for g in &r.gi_hessian_at_0 {
            let d0 = g.diagonal[0];
            for d in &g.diagonal {
                worst_equal = worst_equal.max(rel(*d, d0));
                worst_printed = worst_printed.max(rel(*d, g.h2_only_diagonal));
                worst_full = worst_full.max(rel(*d, g.full_diagonal));
            }
            worst_mixed = worst_mixed.max(g.max_mixed / d0.abs());
        }
    }
    let ok = worst_grad <= 1e-11 && worst_equal <= 1e-7 && worst_printed <= 1e-7 && worst_mixed <= 1e-7;
    Ok((
        ok,
        format!(
            "grad residual {worst_grad:.1e}; diagonal spread {worst_equal:.1e}; vs h2-only formula {worst_printed:.2e}; vs h2 + ln h1 formula {worst_full:.1e}; mixed/diag {worst_mixed:.1e}"
        ),
    ))
}

fn equal_scales(seed: u64) -> Outcome {
    let n = 7;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = BallDomain::new(n)?;
    let mut worst_equal = 0.0f64;
    let mut worst_closed = 0.0f64;
    let mut solves = 0;
    for k in [2, 3] {
        let c = multipoint(n, k)?;
        let ts = polygon_window(n, k)?;
        for i in 0..10 {
            let t = ts + (1.0 - ts) * (i as f64 + 0.5) / 10.0;
            let prof = thm12_profile_in(n, k, t, ts, &c)?;
            let pl = PlacementK::new(n, k, t)?;
            let a = interaction_matrix(&ball, &SignPattern::thm12(k), &pl.centers)?;
            let mut start: Vec<f64> = (0..k).map(|_| prof.lambda1 * rng.gen_range(0.9..1.1)).collect();
            start.push(prof.lambda_bar * rng.gen_range(0.9..1.1));
            let (l, _) = solve_stationarity(n, &a, c.ratio(), &start, 1e-14)?;
            for j in 1..k {
                worst_equal = worst_equal.max(rel(l[j], l[0]));
            }
            worst_closed = worst_closed.max(rel(l[0], prof.lambda1)).max(rel(l[k], prof.lambda_bar));
            solves += 1;
        }
    }
    let ok = worst_equal <= 1e-10 && worst_closed <= 1e-10;
    Ok((ok, format!("{solves} solves; scale spread {worst_equal:.1e}; vs closed form {worst_closed:.1e}")))
}

/// Central differences of `f` at `x` along every coordinate, step relative
/// to each coordinate.
fn central_gradient(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    let mut y = x.to_vec();
    for j in 0..x.len() {
        let h = 1e-5 * x[j];
        y[j] = x[j] + h;
        let up = f(&y)?;
        y[j] = x[j] - h;
        let down = f(&y)?;
        y[j] = x[j];
        g[j] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

fn fd_error(
    value: &dyn Fn(&[f64]) -> Result<f64>,
    grad: &dyn Fn(&[f64]) -> Result<GradHess>,
    x: &[f64],
) -> Result<(f64, f64)> {
    let (g, h) = grad(x)?;
    let g_fd = central_gradient(value, x)?;
    let ge = (&g_fd - &g).amax() / g.amax();
    let mut he = 0.0f64;
    for j in 0..x.len() {
        let col = central_gradient(&|y: &[f64]| grad(y).map(|(g, _)| g[j]), x)?;
        he = he.max((&col - h.row(j).transpose()).amax() / h.amax());
    }
    Ok((ge, he))
}

fn derivatives(seed: u64) -> Outcome {
    let n = 7;
    let q = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = BallDomain::new(n)?;
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    let mut points = 0;
    let multi: Vec<(SignPattern, ExpansionConstants)> = vec![
        (SignPattern::thm11(), multipoint(n, 1)?),
        (SignPattern::thm12(2), multipoint(n, 2)?),
        (SignPattern::thm12(3), multipoint(n, 3)?),
        (SignPattern::thm13(4), multipoint(n, 4)?),
    ];
    let towers: Vec<ExpansionConstants> =
        (1..=3).map(|k| expansion_constants(n, 1.0, k, Variant::Tower, &q)).collect::<Result<_>>()?;
    while points < 100 {
        let scales = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(0.3..3.0)).collect() };
        if points % 2 == 0 {
            let (pattern, c) = &multi[(points / 2) % multi.len()];
            let k = pattern.k();
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let r = rng.gen_range(0.1..0.8);
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    let mut x = vec![0.0; n];
                    x[0] = r * th.cos();
                    x[1] = r * th.sin();
                    x[2] = rng.gen_range(-0.1..0.1);
                    x
                })
                .collect();
            let a = match interaction_matrix(&ball, pattern, &centers) {
                Ok(a) => a,
                Err(_) => continue,
            };
            let l = scales(&mut rng, k + 1);
            let value = |x: &[f64]| Ok(psi_from_matrix(n, &a, x, c.b1, c.b2));
            let grad = |x: &[f64]| Ok(grad_hess_from_matrix(n, &a, x, c.b1, c.b2));
            let (ge, he) = fd_error(&value, &grad, &l)?;
            worst_g = worst_g.max(ge);
            worst_h = worst_h.max(he);
        } else {
            let c = &towers[(points / 2) % towers.len()];
            let k = c.k;
            let z: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let kern = tower_kernels(n, &z, &q)?;
            let l = scales(&mut rng, k + 1);
            let value = |x: &[f64]| tower_psi_with(n, x, &kern, c);
            let grad = |x: &[f64]| tower_grad_hess(n, x, &kern, c);
            let (ge, he) = fd_error(&value, &grad, &l)?;
            worst_g = worst_g.max(ge);
            worst_h = worst_h.max(he);
        }
        points += 1;
    }
    let ok = worst_g <= 1e-6 && worst_h <= 1e-6;
    Ok((ok, format!("{points} points; gradient error {worst_g:.1e}; Hessian error {worst_h:.1e}")))
}

fn kernel_oracle() -> Outcome {
    let q = QuadratureSpec::default().with_rel_tol(1e-12);
    let mut worst = 0.0f64;
    for n in [7, 10] {
        for rho in [0.0, 0.3, 1.0, 3.0] {
            worst = worst.max(rel(tower_h1_2d(n, rho, &q)?, tower_h1(n, rho, &q)?));
        }
    }
    Ok((worst <= 1e-9, format!("max relative gap {worst:.1e}")))
}

fn energy_expansion() -> Outcome {
    let n = 7;
    let q = QuadratureSpec::default().with_rel_tol(1e-10);
    let pw = critical_exponent(n);
    let omega_n = sphere_area(n) / n as f64;
    let scales = [0.05, 0.02, 0.01];
    let power = n as f64 - 2.0;

    let p = hardy_params(n, 1e-3)?;
    let kernel = hardy_profile_integrals(&p, &q)?.int_hardy_kernel;
    let hardy_target = p.c0 * p.c_mu.powf(pw - 1.0) * kernel;
    let samples: Vec<(f64, f64)> = scales.iter().map(|&s| Ok((s, hardy_deficit(&p, s, &q)?))).collect::<Result<_>>()?;
    let hardy = fit_leading(&samples, power)?.0;

    let std_target = standard_constant(n).powf(pw) * omega_n;
    let samples: Vec<(f64, f64)> = scales.iter().map(|&s| Ok((s, standard_deficit(n, s, &q)?))).collect::<Result<_>>()?;
    let std = fit_leading(&samples, power)?.0;

    let mut x1 = vec![0.0; n];
    x1[0] = 0.5;
    let x2: Vec<f64> = x1.iter().map(|v| -v).collect();
    let pair_goal = pair_target(n, &x1, &x2)?;
    let pq = QuadratureSpec::default().with_rel_tol(1e-8);
    let samples: Vec<(f64, f64)> =
        scales.iter().map(|&d| Ok((d, pair_interaction(n, (d, &x1), (d, &x2), &pq)?))).collect::<Result<_>>()?;
    let pair = fit_leading(&samples, power)?.0;

    let c = expansion_constants(n, 1.0, 0, Variant::Tower, &q)?;
    let tq = QuadratureSpec::default().with_rel_tol(1e-13);
    let pairs: Vec<(f64, f64)> = [1e-2, 3e-3, 1e-3]
        .iter()
        .map(|&e| Ok((e, energy_functional(&tower_k0_configuration(&c, e)?, &tq)?.total)))
        .collect::<Result<_>>()?;
    let fit = coefficient_extraction(&pairs, &[Basis::One, Basis::Eps, Basis::EpsLnEps], Some(&c))?;
    let psi = fit.psi_estimate.unwrap_or(f64::NAN);
    let c1 = tower_critical(n, 1.0, 0, &[], &c, &q)?.reduced_value;
    // diagnostic: a₁ and a₃ pinned, next-order ε^{N/(N-2)} term fitted
    let pinned: Vec<(f64, f64)> = pairs.iter().map(|&(e, j)| (e, j - c.a1 + c.a3 * e * e.ln())).collect();
    let next = n as f64 / (n as f64 - 2.0);
    let pinned_fit = coefficient_extraction(&pinned, &[Basis::Eps, Basis::EpsPow(next)], None)?;
    let psi_pinned = pinned_fit.coefficients[0] - c.a2;

    let (eh, es, ep, et) = (rel(hardy, hardy_target), rel(std, std_target), rel(pair, pair_goal), rel(psi, c1));
    let ok = eh <= 0.05 && es <= 0.05 && ep <= 0.05 && et <= 0.10;
    Ok((
        ok,
        format!(
            "hardy deficit {eh:.1e}; standard deficit {es:.1e}; pair {ep:.1e}; tower psi {psi:.6e} vs {c1:.6e} ({et:.1e}), eps ln eps coefficient {:.6e} vs {:.6e}; with a1, a3 pinned and eps^{next} fitted psi {psi_pinned:.6e} ({:.1e})",
            fit.coefficients[2],
            -c.a3,
            rel(psi_pinned, c1)
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 2, 10] {
            let v = run(id, DEFAULT_SEED);
            assert!(v.passed, "{}", v.line());
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run(99, DEFAULT_SEED).passed);
    }
}
