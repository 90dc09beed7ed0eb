//! Energy of projected bubble configurations on the unit ball by direct
//! quadrature, and fits of the small-parameter expansion.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ball::green;
use crate::error::{Error, Result};
use crate::integrals::{sphere_area, ExpansionConstants, Variant};
use crate::profiles::{check_dimension, critical_exponent, half_weight, hardy_params, standard_constant, HardyParams};
use crate::quadrature::{gauss_kronrod, tanh_sinh, CompensatedSum, QuadratureSpec};

/// A bubble minus its harmonic extension from the boundary sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProjectedBubble {
    /// Radial, so the correction is the constant boundary value.
    Hardy { params: HardyParams, sigma: f64, correction: f64 },
    /// The correction is itself a (Kelvin-reflected) bubble centred outside
    /// the ball: `C₀δ^{m}(q/(1 - 2q x·ξ + q²|ξ|²|x|²))^{m}`.
    Standard { n: usize, delta: f64, center: Vec<f64>, kelvin: f64 },
}

pub fn project_hardy_bubble(p: &HardyParams, sigma: f64) -> Result<ProjectedBubble> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveScale(sigma));
    }
    let correction = p.c_mu * (sigma / (sigma * sigma + 1.0)).powf(half_weight(p.n));
    Ok(ProjectedBubble::Hardy { params: *p, sigma, correction })
}

pub fn project_standard_bubble(n: usize, delta: f64, xi: &[f64]) -> Result<ProjectedBubble> {
    check_dimension(n)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::NonPositiveScale(delta));
    }
    if xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
    }
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        return Err(Error::OutsideBall(r2.sqrt()));
    }
    let s = 1.0 + r2 + delta * delta;
    let kelvin = 2.0 / (s + (s * s - 4.0 * r2).sqrt());
    Ok(ProjectedBubble::Standard { n, delta, center: xi.to_vec(), kelvin })
}

impl ProjectedBubble {
    pub fn dim(&self) -> usize {
        match self {
            ProjectedBubble::Hardy { params, .. } => params.n,
            ProjectedBubble::Standard { n, .. } => *n,
        }
    }

    /// Unprojected profile; the Hardy profile is infinite at the origin.
    pub fn base(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            ProjectedBubble::Hardy { params, sigma, .. } => params.bubble_radial_unchecked(*sigma, r2.sqrt()),
            ProjectedBubble::Standard { n, delta, center, .. } => {
                let d2: f64 = center.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                standard_constant(*n) * (delta / (delta * delta + d2)).powf(half_weight(*n))
            }
        }
    }

    pub fn correction(&self, x: &[f64]) -> f64 {
        match self {
            ProjectedBubble::Hardy { correction, .. } => *correction,
            ProjectedBubble::Standard { n, delta, center, kelvin } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let xr2: f64 = center.iter().map(|v| v * v).sum();
                let dot: f64 = center.iter().zip(x).map(|(a, b)| a * b).sum();
                let q = *kelvin;
                let den = 1.0 - 2.0 * q * dot + q * q * xr2 * r2;
                standard_constant(*n) * (delta * q / den).powf(half_weight(*n))
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.base(x) - self.correction(x)
    }

    /// Correction at `s·e` for the unit vector `e` along the centre, from the
    /// Poisson integral of the boundary trace (one polar angle).
    pub fn poisson_correction_on_axis(&self, s: f64, q: &QuadratureSpec) -> Result<f64> {
        let ProjectedBubble::Standard { n, delta, center, .. } = self else {
            return Ok(self.correction(&vec![0.0; self.dim()]));
        };
        if !(s.abs() < 1.0) {
            return Err(Error::OutsideBall(s.abs()));
        }
        let nf = *n as f64;
        let t: f64 = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c0 = standard_constant(*n);
        let m = half_weight(*n);
        let weight = sphere_area(*n - 1) / sphere_area(*n) * (1.0 - s * s);
        let f = |theta: f64| {
            let (sn, cs) = theta.sin_cos();
            let trace = c0 * (delta / (delta * delta + 1.0 - 2.0 * t * cs + t * t)).powf(m);
            trace * sn.powf(nf - 2.0) * (1.0 - 2.0 * s * cs + s * s).powf(-0.5 * nf)
        };
        let v = gauss_kronrod(f, &[0.0, 0.5 * std::f64::consts::PI, std::f64::consts::PI], q)?;
        Ok(weight * v.value)
    }

    /// Cross-polytope mean of the correction on the sphere of radius `r`
    /// about `x`, minus its value at `x`: `O(r⁴)` for harmonic functions.
    pub fn mean_value_defect(&self, x: &[f64], r: f64) -> f64 {
        let n = x.len();
        let mut acc = CompensatedSum::new();
        let mut y = x.to_vec();
        for j in 0..n {
            for sgn in [-1.0, 1.0] {
                y[j] = x[j] + sgn * r;
                acc.add(self.correction(&y));
                y[j] = x[j];
            }
        }
        acc.value() / (2 * n) as f64 - self.correction(x)
    }
}

/// One signed atom of a configuration. Hardy atoms sit at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BubbleAtom {
    Hardy { sign: f64, sigma: f64 },
    Standard { sign: f64, delta: f64, center: Vec<f64> },
}

impl BubbleAtom {
    fn sign(&self) -> f64 {
        match self {
            BubbleAtom::Hardy { sign, .. } | BubbleAtom::Standard { sign, .. } => *sign,
        }
    }
}

/// Signed sum of projected atoms with Hardy strength `mu` and exponent
/// `2* - epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub n: usize,
    pub mu: f64,
    pub epsilon: f64,
    pub atoms: Vec<BubbleAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `∫|∇u|² - μ∫u²/|x|²`
    pub quadratic: f64,
    /// `(1/2*)∫|u|^{2*}`
    pub critical_norm: f64,
    /// `(1/2*)∫|u|^{2*} - (1/(2*-ε))∫|u|^{2*-ε}`
    pub subcritical_correction: f64,
    /// `½ quadratic - (1/(2*-ε))∫|u|^{2*-ε}`
    pub total: f64,
    /// `sₐs_b ∫ (-Δ - μ/|x|²)P_a · P_b`, symmetrised.
    pub interactions: Vec<Vec<f64>>,
    /// Largest `|I_ab - I_ba|` relative to the largest entry.
    pub interaction_asymmetry: f64,
}

/// Axis frame of a reducible configuration.
enum Geometry {
    Radial,
    /// Unit axis and each standard centre's coordinate along it.
    Axis(Vec<f64>),
}

struct Prepared {
    n: usize,
    mu: f64,
    geometry: Geometry,
    atoms: Vec<(f64, ProjectedBubble)>,
    /// Scales for quadrature breakpoints.
    scales: Vec<f64>,
    /// Axial coordinates of centres (zero for Hardy atoms).
    offsets: Vec<f64>,
}

fn prepare(config: &Configuration) -> Result<Prepared> {
    let n = config.n;
    check_dimension(n)?;
    if !(config.epsilon >= 0.0 && config.epsilon < 0.5) {
        return Err(Error::OutOfRange { name: "epsilon", value: config.epsilon, reason: "must lie in [0, 0.5)" });
    }
    if config.atoms.is_empty() {
        return Err(Error::NonReducible("no atoms".into()));
    }
    let params = hardy_params(n, config.mu)?;
    let mut axis: Option<Vec<f64>> = None;
    for a in &config.atoms {
        if let BubbleAtom::Standard { center, .. } = a {
            if center.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: center.len() });
            }
            let r: f64 = center.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r == 0.0 {
                continue;
            }
            let dir: Vec<f64> = center.iter().map(|v| v / r).collect();
            match &axis {
                None => axis = Some(dir),
                Some(e) => {
                    let cos: f64 = e.iter().zip(&dir).map(|(a, b)| a * b).sum();
                    if (cos.abs() - 1.0).abs() > 1e-12 {
                        return Err(Error::NonReducible("standard centres are not collinear with the origin".into()));
                    }
                }
            }
        }
    }
    let mut atoms = Vec::new();
    let mut scales = Vec::new();
    let mut offsets = Vec::new();
    for a in &config.atoms {
        let sign = a.sign();
        if sign.abs() != 1.0 {
            return Err(Error::InvalidPattern(format!("atom sign {sign} is not ±1")));
        }
        match a {
            BubbleAtom::Hardy { sigma, .. } => {
                atoms.push((sign, project_hardy_bubble(&params, *sigma)?));
                scales.push(*sigma);
                offsets.push(0.0);
            }
            BubbleAtom::Standard { delta, center, .. } => {
                atoms.push((sign, project_standard_bubble(n, *delta, center)?));
                scales.push(*delta);
                let off = axis.as_ref().map_or(0.0, |e| e.iter().zip(center).map(|(a, b)| a * b).sum());
                offsets.push(off);
            }
        }
    }
    let geometry = match axis {
        None => Geometry::Radial,
        Some(e) => Geometry::Axis(e),
    };
    Ok(Prepared { n, mu: config.mu, geometry, atoms, scales, offsets })
}

impl Prepared {
    /// Point in `R^N` with axial coordinate `x1` and distance `rho` from the axis.
    fn point(&self, x1: f64, rho: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        match &self.geometry {
            Geometry::Radial => x[0] = x1,
            Geometry::Axis(e) => {
                // any unit vector orthogonal to e
                let j = if e[0].abs() < 0.9 { 0 } else { 1 };
                let mut perp = vec![0.0; self.n];
                perp[j] = 1.0;
                let d = e[j];
                for (p, v) in perp.iter_mut().zip(e) {
                    *p -= d * v;
                }
                let pn = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
                for i in 0..self.n {
                    x[i] = x1 * e[i] + rho * perp[i] / pn;
                }
                return x;
            }
        }
        x[1] = rho;
        x
    }

    /// `(-Δ - μ/|x|²) P_a` at `x`.
    fn source(&self, a: usize, x: &[f64]) -> f64 {
        let p = critical_exponent(self.n);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match &self.atoms[a].1 {
            b @ ProjectedBubble::Hardy { correction, .. } => b.base(x).powf(p - 1.0) + self.mu * correction / r2,
            b => b.base(x).powf(p - 1.0) - self.mu * b.value(x) / r2,
        }
    }

    fn integrate(&self, f: &dyn Fn(&[f64]) -> f64, q: &QuadratureSpec) -> Result<f64> {
        match self.geometry {
            Geometry::Radial => ball_radial(self.n, &|r| f(&self.point(r, 0.0)), &self.scales, q),
            Geometry::Axis(_) => {
                let centres: Vec<(f64, f64)> = self.offsets.iter().copied().zip(self.scales.iter().copied()).collect();
                ball_axisymmetric(self.n, &|x1, rho| f(&self.point(x1, rho)), &centres, q)
            }
        }
    }
}

/// `∫_B f(|x|) dx` with breakpoints graded around each scale.
pub fn ball_radial(n: usize, f: &dyn Fn(f64) -> f64, scales: &[f64], q: &QuadratureSpec) -> Result<f64> {
    let nf = n as f64;
    let g = |r: f64| f(r) * r.powf(nf - 1.0);
    let mut s: Vec<f64> = scales.iter().copied().filter(|v| *v > 0.0).collect();
    s.sort_by(f64::total_cmp);
    let first = s.first().copied().unwrap_or(1.0).min(0.5);
    let inner = first / 2f64.powi(q.grading as i32);
    let mut pts = vec![inner];
    for j in (0..q.grading).rev() {
        pts.push(first / 2f64.powi(j as i32));
    }
    for &x in &s {
        for m in [0.25, 0.5, 1.0, 2.0, 4.0, 16.0] {
            pts.push(x * m);
        }
    }
    pts.push(1.0);
    pts.retain(|p| *p >= inner && *p <= 1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = CompensatedSum::new();
    total.add(tanh_sinh(g, 0.0, inner, q)?.value);
    total.add(gauss_kronrod(g, &pts, q)?.value);
    Ok(sphere_area(n) * total.value())
}

/// `∫_B f dx` for `f` symmetric about the first axis:
/// `ω_{N-2} ∫∫ f(x₁, ρ) ρ^{N-2} dρ dx₁`. `centres` holds `(x₁, scale)` pairs.
pub fn ball_axisymmetric(
    n: usize,
    f: &dyn Fn(f64, f64) -> f64,
    centres: &[(f64, f64)],
    q: &QuadratureSpec,
) -> Result<f64> {
    let nf = n as f64;
    let mut xs = vec![-1.0, 1.0];
    let mut rhos = Vec::new();
    for &(c, s) in centres {
        xs.push(c);
        for m in [1.0, 4.0, 16.0] {
            xs.push(c - m * s);
            xs.push(c + m * s);
            rhos.push(m * s);
        }
    }
    xs.retain(|x| x.abs() <= 1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let inner_spec = q.with_rel_tol(q.rel_tol * 0.1);
    let failure = RefCell::new(None);
    let outer = gauss_kronrod(
        |x1| {
            let top = (1.0 - x1 * x1).max(0.0).sqrt();
            if top == 0.0 {
                return 0.0;
            }
            let mut pts = vec![0.0, top];
            pts.extend(rhos.iter().copied().filter(|r| *r < top));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            match gauss_kronrod(|rho| f(x1, rho) * rho.powf(nf - 2.0), &pts, &inner_spec) {
                Ok(e) => e.value,
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    0.0
                }
            }
        },
        &xs,
        q,
    )?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    Ok(sphere_area(n - 1) * outer.value)
}

pub fn energy_functional(config: &Configuration, q: &QuadratureSpec) -> Result<EnergyBreakdown> {
    let prep = prepare(config)?;
    let k = prep.atoms.len();
    let p = critical_exponent(config.n);
    let pe = p - config.epsilon;
    let mut table = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            let (sa, sb) = (prep.atoms[a].0, prep.atoms[b].0);
            let f = |x: &[f64]| prep.source(a, x) * prep.atoms[b].1.value(x);
            table[a][b] = sa * sb * prep.integrate(&f, q)?;
        }
    }
    let scale = table.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut asym = 0.0f64;
    for a in 0..k {
        for b in a + 1..k {
            asym = asym.max((table[a][b] - table[b][a]).abs());
            let mean = 0.5 * (table[a][b] + table[b][a]);
            table[a][b] = mean;
            table[b][a] = mean;
        }
    }
    let quadratic = crate::quadrature::compensated_sum(table.iter().flatten().copied());
    let u = |x: &[f64]| prep.atoms.iter().map(|(s, b)| s * b.value(x)).sum::<f64>().abs();
    let norm_p = prep.integrate(&|x| u(x).powf(p), q)?;
    let norm_pe = if config.epsilon == 0.0 { norm_p } else { prep.integrate(&|x| u(x).powf(pe), q)? };
    let critical_norm = norm_p / p;
    let sub = norm_pe / pe;
    Ok(EnergyBreakdown {
        quadratic,
        critical_norm,
        subcritical_correction: critical_norm - sub,
        total: 0.5 * quadratic - sub,
        interactions: table,
        interaction_asymmetry: if scale > 0.0 { asym / scale } else { 0.0 },
    })
}

/// `S_μ^{N/2} - ∫(-Δ-μ/|x|²)PV · PV` split into positive pieces:
/// `∫_{|x|>1}V^{2*} + c∫_B V^{2*-1} - μc∫_B (V-c)/|x|²`.
pub fn hardy_deficit(p: &HardyParams, sigma: f64, q: &QuadratureSpec) -> Result<f64> {
    let ProjectedBubble::Hardy { correction: c, .. } = project_hardy_bubble(p, sigma)? else { unreachable!() };
    let n = p.n;
    let nf = n as f64;
    let pw = critical_exponent(n);
    let v = |r: f64| p.bubble_radial_unchecked(sigma, r);
    // outside the ball, r = 1/s
    let outer = sphere_area(n)
        * gauss_kronrod(|s: f64| if s == 0.0 { 0.0 } else { v(1.0 / s).powf(pw) * s.powf(-nf - 1.0) }, &[0.0, 0.5, 1.0], q)?.value;
    let lin = c * ball_radial(n, &|r| v(r).powf(pw - 1.0), &[sigma], q)?;
    let hardy = if p.mu > 0.0 { p.mu * c * ball_radial(n, &|r| (v(r) - c) / (r * r), &[sigma], q)? } else { 0.0 };
    Ok(outer + lin - hardy)
}

/// `∫U^{2*} - ∫_B U^{2*-1}PU` for the bubble centred at the origin:
/// `∫_{|x|>1}U^{2*} + c∫_B U^{2*-1}`.
pub fn standard_deficit(n: usize, delta: f64, q: &QuadratureSpec) -> Result<f64> {
    let ProjectedBubble::Standard { kelvin, .. } = project_standard_bubble(n, delta, &vec![0.0; n])? else { unreachable!() };
    let nf = n as f64;
    let pw = critical_exponent(n);
    let c0 = standard_constant(n);
    let m = half_weight(n);
    let u = |r: f64| c0 * (delta / (delta * delta + r * r)).powf(m);
    let c = c0 * (delta * kelvin).powf(m);
    let outer = sphere_area(n)
        * gauss_kronrod(|s: f64| if s == 0.0 { 0.0 } else { u(1.0 / s).powf(pw) * s.powf(-nf - 1.0) }, &[0.0, 0.5, 1.0], q)?.value;
    Ok(outer + c * ball_radial(n, &|r| u(r).powf(pw - 1.0), &[delta], q)?)
}

/// `∫_B U_{δ,ξ}^{2*-1} P U_{δ',ξ'}` for centres on a common axis.
pub fn pair_interaction(
    n: usize,
    first: (f64, &[f64]),
    second: (f64, &[f64]),
    q: &QuadratureSpec,
) -> Result<f64> {
    let config = Configuration {
        n,
        mu: 0.0,
        epsilon: 0.0,
        atoms: vec![
            BubbleAtom::Standard { sign: 1.0, delta: first.0, center: first.1.to_vec() },
            BubbleAtom::Standard { sign: 1.0, delta: second.0, center: second.1.to_vec() },
        ],
    };
    let prep = prepare(&config)?;
    let pw = critical_exponent(n);
    prep.integrate(&|x| prep.atoms[0].1.base(x).powf(pw - 1.0) * prep.atoms[1].1.value(x), q)
}

/// Leading coefficient `A` in `value/scale^{power} = A + B scale²`, by least
/// squares over the samples.
pub fn fit_leading(samples: &[(f64, f64)], power: f64) -> Result<(f64, f64)> {
    let design = DMatrix::from_fn(samples.len(), 2, |i, j| if j == 0 { 1.0 } else { samples[i].0 * samples[i].0 });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|(s, v)| v / s.powf(power)));
    let x = least_squares(&design, &rhs)?;
    Ok((x[0], x[1]))
}

fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if design.nrows() < design.ncols() {
        return Err(Error::RankDeficient);
    }
    // column scaling keeps the rank test meaningful across basis magnitudes
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::RankDeficient);
    }
    let scaled = DMatrix::from_fn(design.nrows(), design.ncols(), |i, j| design[(i, j)] / norms[j]);
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax {
        return Err(Error::RankDeficient);
    }
    let y = svd.solve(rhs, 0.0).map_err(|_| Error::RankDeficient)?;
    Ok(DVector::from_iterator(y.len(), y.iter().zip(&norms).map(|(v, s)| v / s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    One,
    Eps,
    EpsLnEps,
    EpsPow(f64),
}

impl Basis {
    fn eval(self, eps: f64) -> f64 {
        match self {
            Basis::One => 1.0,
            Basis::Eps => eps,
            Basis::EpsLnEps => eps * eps.ln(),
            Basis::EpsPow(a) => eps.powf(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub basis: Vec<Basis>,
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub residual: f64,
    /// `ε`-coefficient minus `a₂` (plus `a₃` when `ε^α` merged into `ε`).
    pub psi_estimate: Option<f64>,
    /// True when `ε^α` with `α = 1` was folded into the `ε` column.
    pub merged: bool,
}

/// Least-squares fit of `J(ε)` on the model basis; `ε¹` is merged into `ε`.
pub fn coefficient_extraction(
    pairs: &[(f64, f64)],
    model: &[Basis],
    consts: Option<&ExpansionConstants>,
) -> Result<Fit> {
    if pairs.len() < 3 {
        return Err(Error::OutOfRange { name: "pairs", value: pairs.len() as f64, reason: "need at least three samples" });
    }
    if let Some(&(e, _)) = pairs.iter().find(|(e, _)| !(*e > 0.0)) {
        return Err(Error::NonPositiveScale(e));
    }
    let mut basis: Vec<Basis> = Vec::new();
    let mut merged = false;
    for &b in model {
        let b = match b {
            Basis::EpsPow(1.0) => {
                merged = true;
                Basis::Eps
            }
            other => other,
        };
        if !basis.contains(&b) {
            basis.push(b);
        }
    }
    let design = DMatrix::from_fn(pairs.len(), basis.len(), |i, j| basis[j].eval(pairs[i].0));
    let rhs = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.1));
    let x = least_squares(&design, &rhs)?;
    let resid = &design * &x - &rhs;
    let residual = (resid.norm_squared() / pairs.len() as f64).sqrt();
    let psi_estimate = match (consts, basis.iter().position(|b| *b == Basis::Eps)) {
        (Some(c), Some(j)) => Some(x[j] - c.a2 + if merged && c.variant == Variant::Multipoint { c.a3 } else { 0.0 }),
        _ => None,
    };
    Ok(Fit { basis, coefficients: x.iter().copied().collect(), residual, psi_estimate, merged })
}

/// `a₁ + a₂ε - a₃ε^α - a₄ε ln ε + ψε` (multipoint) or
/// `a₁ + a₂ε - a₃ε ln ε + ψε` (tower).
pub fn expansion_prediction(consts: &ExpansionConstants, variant: Variant, eps: f64, alpha: f64, psi: f64) -> Result<f64> {
    if consts.variant != variant {
        return Err(Error::VariantMismatch(format!("{:?} constants for a {variant:?} prediction", consts.variant)));
    }
    if !(eps >= 0.0) {
        return Err(Error::NonPositiveScale(eps));
    }
    let eln = if eps == 0.0 { 0.0 } else { eps * eps.ln() };
    Ok(match variant {
        Variant::Multipoint => {
            let a4 = consts.a4.ok_or_else(|| Error::VariantMismatch("a4 missing".into()))?;
            consts.a1 + consts.a2 * eps - consts.a3 * eps.powf(alpha) - a4 * eln + psi * eps
        }
        Variant::Tower => consts.a1 + consts.a2 * eps - consts.a3 * eln + psi * eps,
    })
}

/// Single Hardy atom at the tower's critical scale: `σ = λ̄ε^{1/(N-2)}`,
/// `μ = μ₀ε`, `λ̄^{(N-2)/2} = √(b₄/(2b₁))`.
pub fn tower_k0_configuration(consts: &ExpansionConstants, eps: f64) -> Result<Configuration> {
    if consts.variant != Variant::Tower || consts.k != 0 {
        return Err(Error::VariantMismatch("tower constants with k = 0 required".into()));
    }
    let n = consts.n;
    let b4 = consts.b4.ok_or_else(|| Error::VariantMismatch("b4 missing".into()))?;
    let s1 = (b4 / (2.0 * consts.b1)).sqrt();
    let lambda = s1.powf(1.0 / half_weight(n));
    Ok(Configuration {
        n,
        mu: consts.mu0 * eps,
        epsilon: eps,
        atoms: vec![BubbleAtom::Hardy { sign: 1.0, sigma: lambda * eps.powf(1.0 / (n as f64 - 2.0)) }],
    })
}

/// Target interaction coefficient `C₀^{2*} G(ξ₁, ξ₂) ω/N`.
pub fn pair_target(n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let p = critical_exponent(n);
    Ok(standard_constant(n).powf(p) * green(n, x, y)? * sphere_area(n) / n as f64)
}
