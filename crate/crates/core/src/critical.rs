//! Sign scans, bracketed roots, damped Newton, golden-section search and a
//! Jacobi eigen-solver for small symmetric Hessians.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
const TIKHONOV: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub left: f64,
    pub right: f64,
    pub sign_left: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedRoot {
    pub location: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub label: String,
    pub grid: usize,
    pub brackets: Vec<Bracket>,
    pub roots: Vec<RefinedRoot>,
    /// Grid points where the function was not finite.
    pub skipped: usize,
}

impl RootReport {
    /// Refines every bracket in place.
    pub fn refine_all<F>(&mut self, f: F, rel_tol: f64) -> Result<()>
    where
        F: Fn(f64) -> f64,
    {
        self.roots = self
            .brackets
            .iter()
            .map(|b| refine_root(&f, (b.left, b.right), rel_tol))
            .collect::<Result<_>>()?;
        Ok(())
    }
}

/// Evaluates `f` on `grid` equispaced points of `[a, b]` and reports every
/// sign change between consecutive finite values. Exact zeros become
/// degenerate brackets.
pub fn scan_sign<F>(label: &str, f: F, a: f64, b: f64, grid: usize) -> Result<RootReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::EmptyInterval(a, b));
    }
    if grid < 2 {
        return Err(Error::OutOfRange {
            name: "grid",
            value: grid as f64,
            reason: "needs at least two points",
        });
    }
    let step = (b - a) / (grid - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = if i + 1 == grid { b } else { a + step * i as f64 };
            (x, f(x))
        })
        .collect();
    let skipped = samples.iter().filter(|(_, v)| !v.is_finite()).count();
    if skipped == grid {
        return Err(Error::AllNonFinite);
    }
    let mut brackets = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for &(x, v) in samples.iter().filter(|(_, v)| v.is_finite()) {
        if v == 0.0 {
            brackets.push(Bracket { left: x, right: x, sign_left: 0.0 });
            continue;
        }
        if let Some((lx, lv)) = last {
            if lv.signum() != v.signum() && lx != x {
                // skip if the previous sample was an exact zero recorded above
                let prev_zero = brackets.last().is_some_and(|br| br.left == br.right && br.left > lx);
                if !prev_zero {
                    brackets.push(Bracket { left: lx, right: x, sign_left: lv.signum() });
                }
            }
        }
        last = Some((x, v));
    }
    Ok(RootReport {
        label: label.to_string(),
        grid,
        brackets,
        roots: Vec::new(),
        skipped,
    })
}

/// Brent's bracketed secant/inverse-quadratic/bisection method.
pub fn refine_root<F>(f: F, bracket: (f64, f64), rel_tol: f64) -> Result<RefinedRoot>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = bracket;
    if a == b {
        return Ok(RefinedRoot { location: a, residual: f(a).abs(), iterations: 0 });
    }
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::AllNonFinite);
    }
    if fa == 0.0 {
        return Ok(RefinedRoot { location: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(RefinedRoot { location: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::SameSignBracket(a, b));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for it in 1..=200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs().max(f64::MIN_POSITIVE);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(RefinedRoot { location: b, residual: fb.abs(), iterations: it });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::AllNonFinite);
        }
    }
    Ok(RefinedRoot { location: b, residual: fb.abs(), iterations: 200 })
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
pub fn golden_section<F>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(a < b) {
        return Err(Error::EmptyInterval(a, b));
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol * (lo.abs() + hi.abs()).max(1e-300) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton_step(j: &DMatrix<f64>, fx: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(step) = j.clone().lu().solve(&(-fx)) {
        if step.iter().all(|v| v.is_finite()) {
            return Some(step);
        }
    }
    // Tikhonov-damped normal equations
    let jt = j.transpose();
    let mut normal = &jt * j;
    let scale = normal.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..normal.nrows() {
        normal[(i, i)] += TIKHONOV * scale;
    }
    normal
        .cholesky()
        .map(|c| c.solve(&(-(jt * fx))))
        .filter(|s| s.iter().all(|v| v.is_finite()))
}

/// Newton's method with backtracking on `‖F‖∞`; succeeds only when the
/// residual drops to `tol`.
pub fn newton_nd<F, J>(f: F, jac: J, x0: &[f64], tol: f64, max_iter: usize) -> Result<NewtonSolution>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(&x);
    let mut res = inf_norm(&fx);
    for it in 0..=max_iter {
        if !res.is_finite() {
            return Err(Error::NewtonDivergence { iterations: it, residual: res });
        }
        if res <= tol {
            return Ok(NewtonSolution { x, residual: res, iterations: it });
        }
        if it == max_iter {
            break;
        }
        let step = newton_step(&jac(&x), &fx).ok_or(Error::SingularJacobian)?;
        let mut lambda = 1.0;
        loop {
            let trial = &x + &step * lambda;
            let ft = f(&trial);
            let rt = inf_norm(&ft);
            if rt.is_finite() && (rt < res || lambda < 1e-10) {
                x = trial;
                fx = ft;
                res = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(Error::NewtonDivergence { iterations: it, residual: res });
            }
        }
    }
    Err(Error::NewtonDivergence { iterations: max_iter, residual: res })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMin,
    LocalMax,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub classification: Classification,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
    }
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max((h[(i, j)] - h[(j, i)]).abs()));
    if asym > 1e-10 * scale {
        return Err(Error::Asymmetric(asym / scale));
    }
    let mut a = (h + h.transpose()) * 0.5;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn classify_hessian(h: &DMatrix<f64>) -> Result<HessianReport> {
    let eigenvalues = jacobi_eigenvalues(h)?;
    let radius = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = 1e-8 * radius;
    let classification = if radius == 0.0 || eigenvalues.iter().any(|e| e.abs() <= thr) {
        Classification::Degenerate
    } else if eigenvalues.iter().all(|&e| e > 0.0) {
        Classification::LocalMin
    } else if eigenvalues.iter().all(|&e| e < 0.0) {
        Classification::LocalMax
    } else {
        Classification::Saddle
    };
    Ok(HessianReport { classification, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::ball::gamma_tau;

    #[test]
    fn scan_linear_and_constant() {
        let r = scan_sign("lin", |t| t - 0.3, 0.0, 1.0, 1000).unwrap();
        assert_eq!(r.brackets.len(), 1);
        assert!(r.brackets[0].left <= 0.3 && 0.3 <= r.brackets[0].right);
        assert!(scan_sign("c", |_| 2.0, 0.0, 1.0, 100).unwrap().brackets.is_empty());
        assert!(matches!(scan_sign("e", |t| t, 1.0, 1.0, 10), Err(Error::EmptyInterval(..))));
        assert!(matches!(scan_sign("n", |_| f64::NAN, 0.0, 1.0, 10), Err(Error::AllNonFinite)));
    }

    #[test]
    fn scan_skips_non_finite_and_exact_zero() {
        let r = scan_sign("z", |t| if t < 0.5 { f64::NAN } else { t - 0.75 }, 0.0, 1.0, 5).unwrap();
        assert_eq!(r.skipped, 2);
        assert_eq!(r.brackets.len(), 1);
        assert_eq!(r.brackets[0].left, 0.75);
        assert_eq!(r.brackets[0].right, 0.75);
    }

    #[test]
    fn gamma1_single_sign_change() {
        let g = |t: f64| gamma_tau(7, t).unwrap().gamma1;
        let r = scan_sign("gamma1", g, 0.01, 0.99, DEFAULT_GRID).unwrap();
        assert_eq!(r.brackets.len(), 1);
        // fine-grid oracle
        let fine = scan_sign("gamma1", g, 0.01, 0.99, 1_000_000).unwrap();
        assert_eq!(fine.brackets.len(), 1);
    }

    #[test]
    fn brent_sqrt2() {
        let r = refine_root(|t| t * t - 2.0, (1.0, 2.0), 1e-12).unwrap();
        assert!((r.location - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(refine_root(|t| t * t + 1.0, (1.0, 2.0), 1e-12), Err(Error::SameSignBracket(..))));
    }

    #[test]
    fn gamma_roots() {
        let g2 = |t: f64| gamma_tau(7, t).unwrap().gamma2;
        let mut r = scan_sign("gamma2", g2, 0.01, 0.99, DEFAULT_GRID).unwrap();
        r.refine_all(g2, 1e-12).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!(r.roots[0].location > (6f64.sqrt() - 2f64.sqrt()) / 2.0);
        assert!(r.roots[0].residual <= 1e-12);
        let h = |t: f64| {
            let g = gamma_tau(7, t).unwrap();
            g.gamma3 - 2.0 * g.tau1 * g.tau1
        };
        let r = scan_sign("t2", h, 0.5, 0.99, DEFAULT_GRID).unwrap();
        assert!(!r.brackets.is_empty());
    }

    #[test]
    fn golden_parabola() {
        let (x, _) = golden_section(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn newton_linear_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let mut a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..n {
            a[(i, i)] += 4.0;
        }
        let b = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let sol = newton_nd(|x| &a * x - &b, |_| a.clone(), &[0.0; 4], 1e-12, 100).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn newton_reports_failure() {
        // no real root
        let r = newton_nd(
            |x| DVector::from_vec(vec![x[0] * x[0] + 1.0]),
            |x| DMatrix::from_vec(1, 1, vec![2.0 * x[0]]),
            &[1.0],
            1e-12,
            50,
        );
        assert!(r.is_err());
    }

    #[test]
    fn classify_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(classify_hessian(&id).unwrap().classification, Classification::LocalMin);
        let sad = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(classify_hessian(&sad).unwrap().classification, Classification::Saddle);
        let neg = -id.clone();
        assert_eq!(classify_hessian(&neg).unwrap().classification, Classification::LocalMax);
        let deg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-10]));
        assert_eq!(classify_hessian(&deg).unwrap().classification, Classification::Degenerate);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(classify_hessian(&asym), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn jacobi_matches_characteristic_roots() {
        // 2x2: (a+c)/2 ± sqrt(((a-c)/2)^2 + b^2)
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.5, 1.5, -2.0]);
        let e = jacobi_eigenvalues(&m).unwrap();
        let disc = (2.5f64 * 2.5 + 1.5 * 1.5).sqrt();
        assert!((e[0] - (0.5 - disc)).abs() < 1e-12);
        assert!((e[1] - (0.5 + disc)).abs() < 1e-12);
        // 3x3 with eigenvalues 2 - √2, 2, 2 + √2
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let e = jacobi_eigenvalues(&m).unwrap();
        let r2 = 2f64.sqrt();
        for (a, b) in e.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn brent_root_in_bracket(c in 0.05f64..0.95, p in 1u32..6) {
            let f = |t: f64| (t - c) * (1.0 + t.powi(p as i32));
            let r = refine_root(f, (0.0, 1.0), 1e-12).unwrap();
            prop_assert!(r.location >= 0.0 && r.location <= 1.0);
            prop_assert!((r.location - c).abs() <= 1e-12 * c + 4.0 * f64::EPSILON);
        }

        #[test]
        fn jacobi_trace_and_sorted(vals in proptest::collection::vec(-5.0f64..5.0, 15)) {
            let m = DMatrix::from_fn(5, 5, |i, j| {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                vals[a * 5 - a * (a + 1) / 2 + b - a]
            });
            let e = jacobi_eigenvalues(&m).unwrap();
            prop_assert!(e.windows(2).all(|w| w[0] <= w[1]));
            let tr: f64 = e.iter().sum();
            prop_assert!((tr - m.trace()).abs() <= 1e-10 * (1.0 + m.trace().abs()));
            let fro: f64 = e.iter().map(|x| x * x).sum();
            prop_assert!((fro - m.norm_squared()).abs() <= 1e-10 * (1.0 + m.norm_squared()));
        }
    }
}
