use rayon::prelude::*;

use bubble_reduce_core::acceptance;
use bubble_reduce_core::ball::{gamma_tau, green, phi_axis, regular_part};
use bubble_reduce_core::energy::{
    coefficient_extraction, energy_functional, expansion_prediction, tower_k0_configuration, Basis,
};
use bubble_reduce_core::integrals::{expansion_constants, ExpansionConstants, Variant};
use bubble_reduce_core::profiles::standard_energy;
use bubble_reduce_core::quadrature::QuadratureSpec;
use bubble_reduce_core::reduced::{
    gamma2_root, iota1, iota3, minimal_iota1_dimension, polygon_iota, polygon_window, remark36_iota2, roots_of,
    thm11_minimum, thm11_profile, thm12_profile_in, thm13_profile_in, thm13_windows, tower_critical,
};

use crate::report::{Cell, Meta, Report};
use crate::{Cli, Command, Failure};

type Outcome = Result<(Report, bool), Failure>;

pub fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Constants => constants(cli),
        Command::Green => green_table(cli),
        Command::Thm11 => thm11(cli),
        Command::Thm12 => thm12(cli),
        Command::Remark36 => remark36(cli),
        Command::Prop37 => prop37(cli),
        Command::Thm13 => thm13(cli),
        Command::Tower => tower(cli),
        Command::Energy { eps } => energy(cli, eps),
        Command::VerifyAll { only } => verify_all(cli, only),
    }
}

fn meta(cli: &Cli, command: &str, k: Option<usize>) -> Meta {
    Meta {
        command: command.into(),
        n: cli.n,
        mu0: cli.mu0,
        k,
        alpha: cli.alpha,
        grid: cli.grid,
        tol: cli.tol,
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION"),
    }
}

fn spec(cli: &Cli) -> QuadratureSpec {
    QuadratureSpec::default().with_rel_tol(cli.tol)
}

fn consts(cli: &Cli, k: usize, variant: Variant) -> Result<ExpansionConstants, Failure> {
    Ok(expansion_constants(cli.n, cli.mu0, k, variant, &spec(cli))?)
}

/// `count` points strictly inside `(lo, hi)`, midpoint rule.
fn interior(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64).collect()
}

fn axis(n: usize, t: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = t;
    x
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

fn constants(cli: &Cli) -> Outcome {
    let variant: Variant = cli.variant.into();
    let k = cli.k.unwrap_or(if variant == Variant::Tower { 0 } else { 1 });
    let c = consts(cli, k, variant)?;
    let mut r = Report::new(meta(cli, "constants", Some(k)), &["name", "value"]);
    let named = [
        ("a1", Some(c.a1)),
        ("a2", Some(c.a2)),
        ("a3", Some(c.a3)),
        ("a4", c.a4),
        ("b1", Some(c.b1)),
        ("b2", Some(c.b2)),
        ("b3", c.b3),
        ("b4", c.b4),
        ("c1", c.c1),
        ("s0_half_power", Some(standard_energy(cli.n))),
    ];
    for (name, v) in named {
        if let Some(v) = v {
            r.push(vec![name.into(), v.into()]);
        }
    }
    r.note("variant", format!("{variant:?}").to_lowercase());
    Ok((r, true))
}

fn green_table(cli: &Cli) -> Outcome {
    let n = cli.n;
    let cols = ["t", "robin", "green_to_origin", "phi", "tau1", "gamma1", "gamma2", "gamma3", "gamma4"];
    let mut r = Report::new(meta(cli, "green", None), &cols);
    let origin = vec![0.0; n];
    for t in interior(0.0, 1.0, cli.grid.unwrap_or(99)) {
        let x = axis(n, t);
        let g = gamma_tau(n, t)?;
        r.push(vec![
            t.into(),
            regular_part(n, &x, &x)?.into(),
            green(n, &x, &origin)?.into(),
            phi_axis(n, t)?.into(),
            g.tau1.into(),
            g.gamma1.into(),
            g.gamma2.into(),
            g.gamma3.into(),
            g.gamma4.into(),
        ]);
    }
    Ok((r, true))
}

fn thm11(cli: &Cli) -> Outcome {
    let n = cli.n;
    let c = consts(cli, 1, Variant::Multipoint)?;
    let cols = ["t", "phi", "nu", "nu_direct", "nu_prime", "lambda1", "lambda_bar", "eig_min", "eig_max"];
    let mut r = Report::new(meta(cli, "thm11", Some(1)), &cols);
    let ts = interior(0.0, 1.0, cli.grid.unwrap_or(999));
    let rows: Vec<_> = ts.par_iter().map(|&t| thm11_profile(n, t, &c)).collect::<Result<_, _>>()?;
    for p in rows {
        r.push(vec![
            p.t.into(),
            p.phi.into(),
            p.nu.into(),
            p.nu_direct.into(),
            p.nu_prime.into(),
            p.lambda1.into(),
            p.lambda_bar.into(),
            p.hess_eigs[0].into(),
            p.hess_eigs[p.hess_eigs.len() - 1].into(),
        ]);
    }
    let m = thm11_minimum(n, &c)?;
    let at = thm11_profile(n, m.nu_prime_root, &c)?;
    r.note("nu_prime_root", m.nu_prime_root);
    r.note("phi_minimizer", m.phi_minimizer);
    r.note("hessian_eigenvalues", join(&at.hess_eigs));
    Ok((r, true))
}

fn polygon_k(cli: &Cli) -> Result<usize, Failure> {
    let k = cli.k.unwrap_or(3);
    if !(2..=4).contains(&k) {
        return Err(Failure::Config(format!("--k {k}: polygon families take k in 2..=4")));
    }
    Ok(k)
}

fn thm12(cli: &Cli) -> Outcome {
    let n = cli.n;
    let k = polygon_k(cli)?;
    let c = consts(cli, k, Variant::Multipoint)?;
    let t_star = polygon_window(n, k)?;
    let cols = ["t", "lambda1", "lambda_bar", "alpha", "nu", "nu_direct", "nu_prime", "iota", "eig_min", "eig_max"];
    let mut r = Report::new(meta(cli, "thm12", Some(k)), &cols);
    let ts = interior(t_star, 1.0, cli.grid.unwrap_or(1000));
    let rows: Vec<_> = ts.par_iter().map(|&t| thm12_profile_in(n, k, t, t_star, &c)).collect::<Result<_, _>>()?;
    for p in rows {
        r.push(vec![
            p.t.into(),
            p.lambda1.into(),
            p.lambda_bar.into(),
            p.alpha.into(),
            p.nu.into(),
            p.nu_direct.into(),
            p.nu_prime.into(),
            p.iota.into(),
            p.hess_eigs[0].into(),
            p.hess_eigs[1].into(),
        ]);
    }
    let label = match k {
        2 => "iota0",
        3 => "iota1",
        _ => "iota2",
    };
    let f = |t: f64| polygon_iota(n, k, t).unwrap_or(f64::NAN);
    let roots = roots_of(label, f, t_star + 1e-6, 1.0 - 1e-6, cli.grid.unwrap_or(10_000).max(10_000))?;
    r.note("t_star", t_star);
    if roots.is_empty() {
        r.note("roots", format!("no root of {label} in (t_star, 1)"));
    } else {
        r.note("roots", join(&roots));
    }
    if k == 3 {
        r.note("iota1_at_half", iota1(n, 0.5)?);
        let n0 = minimal_iota1_dimension(7, 60)?;
        r.note("minimal_N_iota1_half_negative", n0.map_or(Cell::Text("none up to 60".into()), Cell::from));
    }
    Ok((r, true))
}

fn remark36(cli: &Cli) -> Outcome {
    let n = cli.n;
    let mut r = Report::new(meta(cli, "remark36", Some(4)), &["t", "gamma2", "alpha3", "iota2"]);
    for t in interior(0.0, 1.0, cli.grid.unwrap_or(999)) {
        let g = gamma_tau(n, t)?.gamma2;
        // α₃ is undefined where its discriminant is negative
        let (a, i) = remark36_iota2(n, t).map_or((f64::NAN, f64::NAN), |rec| (rec.alpha3, rec.iota2));
        r.push(vec![t.into(), g.into(), a.into(), i.into()]);
    }
    r.note("gamma2_root", gamma2_root(n)?);
    r.note("gamma2_at_0.001", gamma_tau(n, 1e-3)?.gamma2);
    Ok((r, true))
}

fn prop37(cli: &Cli) -> Outcome {
    let n = cli.n;
    let t_star = gamma2_root(n)?;
    let bound = (6f64.sqrt() - 2f64.sqrt()) / 2.0;
    let mut r = Report::new(meta(cli, "prop37", Some(4)), &["t", "gamma2", "iota2", "lhs_357"]);
    let ts = interior(t_star, 1.0, cli.grid.unwrap_or(10_000));
    let rows: Vec<_> = ts.par_iter().map(|&t| remark36_iota2(n, t)).collect::<Result<_, _>>()?;
    let mut iota_ok = true;
    let mut margin_ok = true;
    for rec in rows {
        iota_ok &= rec.iota2 > 0.0;
        margin_ok &= rec.margin > 0.0;
        r.push(vec![rec.t.into(), rec.gamma2.into(), rec.iota2.into(), rec.margin.into()]);
    }
    let above = t_star > bound;
    r.note("t_star", t_star);
    r.note("t_star_above_bound", above);
    r.note("iota2_positive", iota_ok);
    r.note("margin_positive", margin_ok);
    Ok((r, above && iota_ok && margin_ok))
}

fn thm13(cli: &Cli) -> Outcome {
    let n = cli.n;
    let c = consts(cli, 4, Variant::Multipoint)?;
    let w = thm13_windows(n)?;
    let cols = [
        "t",
        "window",
        "lambda1",
        "lambda2",
        "lambda_bar",
        "nu2",
        "nu2_direct",
        "nu2_prime",
        "iota3",
        "gamma3",
        "det_sign",
        "hess_det_sign",
        "system_residual",
    ];
    let mut r = Report::new(meta(cli, "thm13", Some(4)), &cols);
    let per = cli.grid.unwrap_or(200);
    let ts: Vec<(usize, f64)> = interior(0.0, w.t1_star, per)
        .into_iter()
        .map(|t| (1, t))
        .chain(interior(w.t2_star, 1.0, per).into_iter().map(|t| (2, t)))
        .collect();
    for (win, t) in ts {
        let p = thm13_profile_in(n, t, &w, &c)?;
        r.push(vec![
            t.into(),
            win.into(),
            p.lambda1.into(),
            p.lambda2.into(),
            p.lambda_bar.into(),
            p.nu2.into(),
            p.nu2_direct.into(),
            p.nu2_prime.into(),
            p.iota3.into(),
            gamma_tau(n, t)?.gamma3.into(),
            p.det_sign.into(),
            p.hess_det_sign.into(),
            p.system_residual.into(),
        ]);
    }
    let f = |t: f64| iota3(n, t).unwrap_or(f64::NAN);
    let roots = roots_of("iota3", f, 1e-3, w.t1_star - 1e-9, 4096)?;
    r.note("t1_star", w.t1_star);
    r.note("t2_star", w.t2_star);
    r.note("iota3_roots_below_t1_star", join(&roots));
    Ok((r, true))
}

fn tower(cli: &Cli) -> Outcome {
    let n = cli.n;
    let k = cli.k.unwrap_or(1);
    if k > 8 {
        return Err(Failure::Config(format!("--k {k}: tower reports take k <= 8")));
    }
    let c = consts(cli, k, Variant::Tower)?;
    let t = tower_critical(n, cli.mu0, k, &vec![vec![0.0; n]; k], &c, &spec(cli))?;
    let mut r = Report::new(meta(cli, "tower", Some(k)), &["j", "s_hat", "lambda"]);
    for (j, (s, l)) in t.s_hat.iter().zip(&t.lambdas).enumerate() {
        r.push(vec![(j + 1).into(), (*s).into(), (*l).into()]);
    }
    r.note("psi_hat", t.psi_hat);
    r.note("reduced_value", t.reduced_value);
    r.note("gradient_residual", t.gradient_residual);
    for g in &t.gi_hessian_at_0 {
        r.note(format!("g{}_hessian_diagonal", g.i), join(&g.diagonal));
        r.note(format!("g{}_max_mixed", g.i), g.max_mixed);
        r.note(format!("g{}_h2_only_formula", g.i), g.h2_only_diagonal);
        r.note(format!("g{}_full_formula", g.i), g.full_diagonal);
        let cls = if g.diagonal.iter().all(|d| *d < 0.0) {
            "nondegenerate maximum"
        } else if g.diagonal.iter().all(|d| *d > 0.0) {
            "nondegenerate minimum"
        } else {
            "saddle or degenerate"
        };
        r.note(format!("g{}_at_zero", g.i), cls);
    }
    Ok((r, true))
}

fn energy(cli: &Cli, eps: &[f64]) -> Outcome {
    if matches!(cli.k, Some(k) if k != 0) {
        return Err(Failure::Config("energy reports the single-atom tower only (--k 0)".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 0.5)) {
        return Err(Failure::Config(format!("--eps {e} outside (0, 0.5)")));
    }
    let c = consts(cli, 0, Variant::Tower)?;
    let c1 = c.c1.unwrap_or(f64::NAN);
    let cols = ["eps", "sigma", "quadratic", "critical_norm", "subcritical_correction", "total", "prediction"];
    let mut r = Report::new(meta(cli, "energy", Some(0)), &cols);
    let q = spec(cli);
    let mut pairs = Vec::new();
    for &e in eps {
        let config = tower_k0_configuration(&c, e)?;
        let sigma = match &config.atoms[0] {
            bubble_reduce_core::energy::BubbleAtom::Hardy { sigma, .. } => *sigma,
            _ => f64::NAN,
        };
        let b = energy_functional(&config, &q)?;
        let pred = expansion_prediction(&c, Variant::Tower, e, cli.alpha, c1)?;
        r.push(vec![
            e.into(),
            sigma.into(),
            b.quadratic.into(),
            b.critical_norm.into(),
            b.subcritical_correction.into(),
            b.total.into(),
            pred.into(),
        ]);
        pairs.push((e, b.total));
    }
    r.note("a1", c.a1);
    r.note("a3", c.a3);
    r.note("c1", c1);
    if pairs.len() >= 3 {
        let fit = coefficient_extraction(&pairs, &[Basis::One, Basis::Eps, Basis::EpsLnEps], Some(&c))?;
        r.note("fit_one", fit.coefficients[0]);
        r.note("fit_eps", fit.coefficients[1]);
        r.note("fit_eps_ln_eps", fit.coefficients[2]);
        r.note("fit_residual", fit.residual);
        r.note("psi_estimate", fit.psi_estimate.unwrap_or(f64::NAN));
    }
    Ok((r, true))
}

fn verify_all(cli: &Cli, only: &[u32]) -> Outcome {
    let ids: Vec<u32> = acceptance::CRITERIA.filter(|id| only.is_empty() || only.contains(id)).collect();
    if ids.is_empty() {
        return Err(Failure::Config(format!("--only {only:?} selects no criterion")));
    }
    let mut r = Report::new(meta(cli, "verify-all", None), &["id", "name", "passed", "detail"]);
    let mut all = true;
    for id in ids {
        let v = acceptance::run(id, cli.seed);
        all &= v.passed;
        r.push(vec![(v.id as usize).into(), v.name.into(), v.passed.into(), v.detail.into()]);
    }
    r.note("all_passed", all);
    Ok((r, all))
}
