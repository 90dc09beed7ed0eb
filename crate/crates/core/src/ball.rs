//! Green function of the unit ball (normalised as `|x-y|^{2-N} - H`), the map
//! `φ`, symmetric polygon placements and the scalar functions `τ₁`, `γ₀..γ₄`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::check_dimension;

/// Capability needed by the reduced functionals.
pub trait GreenProvider {
    fn dim(&self) -> usize;
    fn green(&self, x: &[f64], y: &[f64]) -> Result<f64>;
    fn regular_part(&self, x: &[f64], y: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallDomain {
    pub n: usize,
}

impl BallDomain {
    pub fn new(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self { n })
    }
}

impl GreenProvider for BallDomain {
    fn dim(&self) -> usize {
        self.n
    }

    fn green(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        green(self.n, x, y)
    }

    fn regular_part(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        regular_part(self.n, x, y)
    }
}

const BOUNDARY_SLACK: f64 = 1e-12;

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_point(n: usize, x: &[f64]) -> Result<f64> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let r2 = norm_sq(x);
    if r2 > (1.0 + BOUNDARY_SLACK) * (1.0 + BOUNDARY_SLACK) {
        return Err(Error::OutsideBall(r2.sqrt()));
    }
    Ok(r2)
}

/// `H(x,y) = (|x|²|y|² - 2x·y + 1)^{(2-N)/2}`, so that `H(x,0) = 1`.
pub fn regular_part(n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dimension(n)?;
    let rx = check_point(n, x)?;
    let ry = check_point(n, y)?;
    let base = rx * ry - 2.0 * dot(x, y) + 1.0;
    Ok(base.powf(0.5 * (2.0 - n as f64)))
}

pub fn green(n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let h = regular_part(n, x, y)?;
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if d2 == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(d2.powf(0.5 * (2.0 - n as f64)) - h)
}

/// `φ(x) = H(0,0)^{1/2} H(x,x)^{1/2} + G(x,0)`.
pub fn phi_point(n: usize, x: &[f64]) -> Result<f64> {
    let origin = vec![0.0; n];
    let h00 = regular_part(n, &origin, &origin)?;
    let hxx = regular_part(n, x, x)?;
    let g = green(n, x, &origin)?;
    Ok((h00 * hxx).sqrt() + g)
}

fn check_axis(t: f64) -> Result<f64> {
    let a = t.abs();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            reason: "must lie in (-1, 1) \\ {0}",
        });
    }
    Ok(a)
}

/// `φ(t) = (1-t²)^{-(N-2)/2} + |t|^{2-N} - 1`.
pub fn phi_axis(n: usize, t: f64) -> Result<f64> {
    check_dimension(n)?;
    let a = check_axis(t)?;
    let nf = n as f64;
    Ok((1.0 - a * a).powf(-0.5 * (nf - 2.0)) + a.powf(2.0 - nf) - 1.0)
}

/// `dφ/dt` on `(0, 1)`.
pub fn phi_axis_derivative(n: usize, t: f64) -> Result<f64> {
    check_dimension(n)?;
    check_unit(t)?;
    let nf = n as f64;
    Ok((nf - 2.0) * t * (1.0 - t * t).powf(-0.5 * nf) + (2.0 - nf) * t.powf(1.0 - nf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaKind {
    One,
    Two,
    Three,
}

impl AlphaKind {
    fn multiplicity(self) -> f64 {
        match self {
            AlphaKind::One => 1.0,
            AlphaKind::Two => 2.0,
            AlphaKind::Three => 3.0,
        }
    }
}

/// Positive root of `aα² + bα - c = 0` on the `+√` branch, free of
/// cancellation when `b > 0`.
pub fn plus_root(a: f64, b: f64, c: f64) -> Result<f64> {
    let disc = b * b + 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let s = disc.sqrt();
    if b > 0.0 {
        Ok(2.0 * c / (b + s))
    } else {
        Ok((-b + s) / (2.0 * a))
    }
}

/// `(α_m, β_m)` with `H(0,0)α² + m G(x,0) α - (H(x,x) - I) = 0`, where the
/// interaction `I` is `G(x,y)`, `2G(x,y)` or `2G(x,y) + G(x,z)`.
pub fn alpha_beta<P: GreenProvider>(
    provider: &P,
    which: AlphaKind,
    x: &[f64],
    y: &[f64],
    z: Option<&[f64]>,
) -> Result<(f64, f64)> {
    let n = provider.dim();
    let origin = vec![0.0; n];
    if x == y || z.is_some_and(|z| z == x || z == y) || norm_sq(x) == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let h00 = provider.regular_part(&origin, &origin)?;
    let hxx = provider.regular_part(x, x)?;
    let gx0 = provider.green(x, &origin)?;
    let gxy = provider.green(x, y)?;
    let interaction = match which {
        AlphaKind::One => gxy,
        AlphaKind::Two => 2.0 * gxy,
        AlphaKind::Three => {
            let z = z.ok_or_else(|| Error::InvalidPattern("alpha_3 needs a third point".into()))?;
            2.0 * gxy + provider.green(x, z)?
        }
    };
    let c = hxx - interaction;
    let alpha = plus_root(h00, which.multiplicity() * gx0, c)?;
    Ok((alpha, c + gx0 * alpha))
}

/// `k` centres of modulus `t` at angles `2πi/k` in the `(x₁, x₂)` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementK {
    pub k: usize,
    pub t: f64,
    pub centers: Vec<Vec<f64>>,
}

impl PlacementK {
    pub fn new(n: usize, k: usize, t: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(1..=4).contains(&k) {
            return Err(Error::OutOfRange {
                name: "k",
                value: k as f64,
                reason: "placements exist for k in 1..=4",
            });
        }
        check_unit(t)?;
        let centers = (0..k)
            .map(|i| {
                let mut c = vec![0.0; n];
                let (s, co) = match (4 % k == 0, i * 4 / k) {
                    // exact angles for the square and the segment
                    (true, 0) => (0.0, 1.0),
                    (true, 1) => (1.0, 0.0),
                    (true, 2) => (0.0, -1.0),
                    (true, 3) => (-1.0, 0.0),
                    _ => (2.0 * PI * i as f64 / k as f64).sin_cos(),
                };
                c[0] = t * co;
                c[1] = t * s;
                c
            })
            .collect();
        Ok(Self { k, t, centers })
    }
}

fn check_unit(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            reason: "must lie in (0, 1)",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTau {
    pub tau1: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
}

impl GammaTau {
    /// `γ₀ = h(t,t) - g(t,-t)`, which coincides with `γ₃`.
    pub fn gamma0(&self) -> f64 {
        self.gamma3
    }
}

struct Pieces {
    /// `(1-t²)^{2-N}`
    robin: f64,
    /// `(c t)^{2-N}` for `c = √3, √2, 2`
    near3: f64,
    near2: f64,
    far: f64,
    /// `(t⁴+t²+1)^{-(N-2)/2}`
    tri: f64,
    /// `(t⁴+1)^{-(N-2)/2}`
    sq: f64,
    /// `(t²+1)^{2-N}`
    opp: f64,
    /// `t^{2-N}`
    pole: f64,
}

fn pieces(n: usize, t: f64) -> Pieces {
    let e = 2.0 - n as f64;
    let t2 = t * t;
    Pieces {
        robin: (1.0 - t2).powf(e),
        near3: (3f64.sqrt() * t).powf(e),
        near2: (2f64.sqrt() * t).powf(e),
        far: (2.0 * t).powf(e),
        tri: (t2 * t2 + t2 + 1.0).powf(0.5 * e),
        sq: (t2 * t2 + 1.0).powf(0.5 * e),
        opp: (t2 + 1.0).powf(e),
        pole: t.powf(e),
    }
}

pub fn gamma_tau(n: usize, t: f64) -> Result<GammaTau> {
    check_dimension(n)?;
    check_unit(t)?;
    let p = pieces(n, t);
    Ok(GammaTau {
        tau1: p.pole - 1.0,
        gamma1: p.robin - 2.0 * p.near3 + 2.0 * p.tri,
        gamma2: p.robin - 2.0 * p.near2 + 2.0 * p.sq - p.far + p.opp,
        gamma3: p.robin - p.far + p.opp,
        gamma4: p.near2 - p.sq,
    })
}

/// Derivatives in `t` of every field of [`gamma_tau`].
pub fn gamma_tau_derivatives(n: usize, t: f64) -> Result<GammaTau> {
    check_dimension(n)?;
    check_unit(t)?;
    let nf = n as f64;
    let t2 = t * t;
    let k = nf - 2.0;
    let robin = 2.0 * k * t * (1.0 - t2).powf(1.0 - nf);
    // d/dt (c t)^{2-N} = -(N-2) c^{2-N} t^{1-N}
    let power = |c: f64| -k * c.powf(-k) * t.powf(1.0 - nf);
    let tri = -0.5 * k * (4.0 * t2 * t + 2.0 * t) * (t2 * t2 + t2 + 1.0).powf(-0.5 * nf);
    let sq = -0.5 * k * 4.0 * t2 * t * (t2 * t2 + 1.0).powf(-0.5 * nf);
    let opp = -k * 2.0 * t * (t2 + 1.0).powf(1.0 - nf);
    Ok(GammaTau {
        tau1: power(1.0),
        gamma1: robin - 2.0 * power(3f64.sqrt()) + 2.0 * tri,
        gamma2: robin - 2.0 * power(2f64.sqrt()) + 2.0 * sq - power(2.0) + opp,
        gamma3: robin - power(2.0) + opp,
        gamma4: power(2f64.sqrt()) - sq,
    })
}

/// The same quantities assembled from `green`/`regular_part` on polygon
/// placements.
pub fn gamma_tau_generic<P: GreenProvider>(provider: &P, t: f64) -> Result<GammaTau> {
    let n = provider.dim();
    let origin = vec![0.0; n];
    let tri = PlacementK::new(n, 3, t)?;
    let sq = PlacementK::new(n, 4, t)?;
    let x = &sq.centers[0];
    let h = provider.regular_part(x, x)?;
    let g_adj = provider.green(x, &sq.centers[1])?;
    let g_opp = provider.green(x, &sq.centers[2])?;
    let g_tri = provider.green(&tri.centers[0], &tri.centers[1])?;
    Ok(GammaTau {
        tau1: provider.green(x, &origin)?,
        gamma1: h - 2.0 * g_tri,
        gamma2: h - 2.0 * g_adj - g_opp,
        gamma3: h - g_opp,
        gamma4: g_adj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn axis(n: usize, t: f64) -> Vec<f64> {
        let mut x = vec![0.0; n];
        x[0] = t;
        x
    }

    #[test]
    fn regular_part_examples() {
        let o = vec![0.0; 7];
        assert_eq!(regular_part(7, &o, &o).unwrap(), 1.0);
        let x = axis(7, 0.5);
        assert_relative_eq!(regular_part(7, &x, &x).unwrap(), 0.75f64.powi(-5), max_relative = 1e-14);
        assert_relative_eq!(green(7, &x, &o).unwrap(), 0.5f64.powi(-5) - 1.0, max_relative = 1e-14);
        assert!(matches!(green(7, &x, &x), Err(Error::CoincidentPoints)));
        assert!(matches!(regular_part(7, &axis(7, 1.1), &o), Err(Error::OutsideBall(_))));
    }

    #[test]
    fn green_vanishes_at_boundary() {
        let x = axis(7, 0.3);
        let mut y = vec![0.0; 7];
        let mut prev = f64::INFINITY;
        for r in [0.9, 0.99, 0.999, 0.9999, 1.0] {
            y[1] = r;
            let g = green(7, &x, &y).unwrap();
            assert!(g < prev && g >= -1e-12);
            prev = g;
        }
        assert!(prev.abs() < 1e-12);
    }

    #[test]
    fn phi_examples() {
        let v = phi_axis(7, 0.5).unwrap();
        assert_relative_eq!(v, 0.75f64.powf(-2.5) + 31.0, max_relative = 1e-14);
        assert_relative_eq!(v, phi_point(7, &axis(7, 0.5)).unwrap(), max_relative = 1e-14);
        assert_eq!(phi_axis(7, -0.3).unwrap(), phi_axis(7, 0.3).unwrap());
        for t in [-1.0, 0.0, 1.0] {
            assert!(phi_axis(7, t).is_err());
        }
        // interior minimum with positive second difference
        let h = 1e-3;
        let tmin = (1..1000)
            .map(|i| i as f64 / 1000.0)
            .min_by(|a, b| phi_axis(7, *a).unwrap().total_cmp(&phi_axis(7, *b).unwrap()))
            .unwrap();
        let d2 = phi_axis(7, tmin + h).unwrap() - 2.0 * phi_axis(7, tmin).unwrap() + phi_axis(7, tmin - h).unwrap();
        assert!(tmin > 0.01 && tmin < 0.99 && d2 > 0.0);
    }

    #[test]
    fn phi_derivative_matches_differences() {
        for t in [0.2, 0.5, 0.8] {
            let h = 1e-6;
            let fd = (phi_axis(9, t + h).unwrap() - phi_axis(9, t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(phi_axis_derivative(9, t).unwrap(), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn alpha_beta_degenerate_and_residual() {
        let ball = BallDomain::new(7).unwrap();
        // choose y so that G(x, y) = H(x, x): the constant term vanishes
        let x = axis(7, 0.5);
        let hxx = regular_part(7, &x, &x).unwrap();
        let mut lo = 0.51;
        let mut hi = 0.999;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = green(7, &x, &axis(7, mid)).unwrap();
            if g > hxx { lo = mid } else { hi = mid }
        }
        let (a, b) = alpha_beta(&ball, AlphaKind::One, &x, &axis(7, 0.5 * (lo + hi)), None).unwrap();
        assert!(a.abs() < 1e-8 && b.abs() < 1e-6, "{a} {b}");
        // β₁ identity and quadratic residual
        let y = axis(7, -0.6);
        let (a, b) = alpha_beta(&ball, AlphaKind::One, &x, &y, None).unwrap();
        let g0 = green(7, &x, &[0.0; 7]).unwrap();
        let gxy = green(7, &x, &y).unwrap();
        assert_relative_eq!(b, hxx - gxy + g0 * a, max_relative = 1e-15);
        let res = a * a + g0 * a - (hxx - gxy);
        assert!(res.abs() <= 1e-12 * (hxx + g0 * a.abs()));
    }

    #[test]
    fn alpha_negative_discriminant_reported() {
        let ball = BallDomain::new(7).unwrap();
        // near-boundary centre with a close partner: interaction dominates
        let x = axis(7, 0.95);
        let mut y = axis(7, 0.9);
        y[1] = 0.01;
        let r = alpha_beta(&ball, AlphaKind::One, &x, &y, None);
        assert!(matches!(r, Err(Error::NegativeDiscriminant(_))));
    }

    #[test]
    fn gamma_examples_n7() {
        let g = gamma_tau(7, 0.5).unwrap();
        assert_relative_eq!(g.gamma1, 1.121_791_758_265_343_2, max_relative = 1e-12);
        assert!(g.gamma1 > 0.0);
        assert!(gamma_tau(7, (6f64.sqrt() - 2f64.sqrt()) / 2.0).unwrap().gamma2 < 0.0);
        assert!(gamma_tau(7, 0.0).is_err() && gamma_tau(7, 1.0).is_err());
    }

    #[test]
    fn placements() {
        let p = PlacementK::new(7, 3, 0.4).unwrap();
        let (s, c) = (2.0 * PI / 3.0).sin_cos();
        for i in 0..3 {
            let a = &p.centers[i];
            let b = &p.centers[(i + 1) % 3];
            assert!((norm_sq(a).sqrt() - 0.4).abs() < 1e-15);
            assert!((c * a[0] - s * a[1] - b[0]).abs() < 1e-14);
            assert!((s * a[0] + c * a[1] - b[1]).abs() < 1e-14);
        }
        let one = PlacementK::new(7, 1, 0.4).unwrap();
        assert_eq!(one.centers, vec![axis(7, 0.4)]);
    }

    #[test]
    fn monotone_gamma1_gamma3() {
        for n in [7, 10, 15] {
            let h = 1e-6;
            for i in 0..10_000 {
                let t = 0.05 + 0.9 * (i as f64 + 0.5) / 10_000.0;
                let up = gamma_tau(n, t + h).unwrap();
                let dn = gamma_tau(n, t - h).unwrap();
                assert!(up.gamma1 > dn.gamma1, "N={n} t={t}");
                assert!(up.gamma3 > dn.gamma3, "N={n} t={t}");
            }
        }
    }

    proptest! {
        #[test]
        fn closed_forms_match_generic(t in 0.02f64..0.98, n in 5usize..25) {
            let ball = BallDomain::new(n).unwrap();
            let a = gamma_tau(n, t).unwrap();
            let b = gamma_tau_generic(&ball, t).unwrap();
            for (x, y) in [(a.tau1, b.tau1), (a.gamma1, b.gamma1), (a.gamma2, b.gamma2), (a.gamma3, b.gamma3), (a.gamma4, b.gamma4)] {
                // scale by the largest term entering the combination
                let scale = a.tau1.abs() + (1.0 - t * t).powf(2.0 - n as f64) + (t * 2f64.sqrt()).powf(2.0 - n as f64);
                prop_assert!((x - y).abs() <= 1e-12 * scale, "{x} {y}");
            }
        }

        #[test]
        fn derivatives_match_differences(t in 0.05f64..0.95, n in 5usize..20) {
            let h = 1e-6 * t.min(1.0 - t);
            let d = gamma_tau_derivatives(n, t).unwrap();
            let up = gamma_tau(n, t + h).unwrap();
            let dn = gamma_tau(n, t - h).unwrap();
            for (an, u, l) in [(d.tau1, up.tau1, dn.tau1), (d.gamma1, up.gamma1, dn.gamma1), (d.gamma2, up.gamma2, dn.gamma2), (d.gamma3, up.gamma3, dn.gamma3), (d.gamma4, up.gamma4, dn.gamma4)] {
                let fd = (u - l) / (2.0 * h);
                prop_assert!((an - fd).abs() <= 1e-5 * (an.abs() + d.tau1.abs()), "{an} {fd}");
            }
        }

        #[test]
        fn green_symmetric_positive(x in proptest::array::uniform7(-0.37f64..0.37), y in proptest::array::uniform7(-0.37f64..0.37)) {
            prop_assume!(x != y);
            let g1 = green(7, &x, &y).unwrap();
            let g2 = green(7, &y, &x).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-12 * g1.abs());
            prop_assert!(g1 > 0.0);
            let h1 = regular_part(7, &x, &y).unwrap();
            let h2 = regular_part(7, &y, &x).unwrap();
            prop_assert!((h1 - h2).abs() <= 1e-12 * h1);
        }

        #[test]
        fn green_rotation_equivariant(x in proptest::array::uniform7(-0.37f64..0.37), y in proptest::array::uniform7(-0.37f64..0.37), angle in 0.0f64..6.3) {
            prop_assume!(x != y);
            let (s, c) = angle.sin_cos();
            let rot = |v: &[f64; 7]| {
                let mut w = *v;
                w[2] = c * v[2] - s * v[6];
                w[6] = s * v[2] + c * v[6];
                w
            };
            let g1 = green(7, &x, &y).unwrap();
            let g2 = green(7, &rot(&x), &rot(&y)).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-11 * g1.abs());
        }

        #[test]
        fn alpha_residuals(t in 0.3f64..0.95, s in 0.05f64..0.95) {
            let ball = BallDomain::new(7).unwrap();
            let x = axis(7, t);
            let mut y = vec![0.0; 7];
            y[1] = s;
            let mut z = vec![0.0; 7];
            z[0] = -s;
            let o = vec![0.0; 7];
            let g0 = green(7, &x, &o).unwrap();
            for (kind, m) in [(AlphaKind::One, 1.0), (AlphaKind::Two, 2.0), (AlphaKind::Three, 3.0)] {
                if let Ok((a, b)) = alpha_beta(&ball, kind, &x, &y, Some(&z)) {
                    let hxx = regular_part(7, &x, &x).unwrap();
                    let inter = match kind {
                        AlphaKind::One => green(7, &x, &y).unwrap(),
                        AlphaKind::Two => 2.0 * green(7, &x, &y).unwrap(),
                        AlphaKind::Three => 2.0 * green(7, &x, &y).unwrap() + green(7, &x, &z).unwrap(),
                    };
                    let res = a * a + m * g0 * a - (hxx - inter);
                    prop_assert!(res.abs() <= 1e-12 * (a * a + m * g0 * a.abs() + hxx + inter.abs()));
                    prop_assert!((b - (hxx - inter + g0 * a)).abs() <= 1e-12 * (hxx + inter.abs() + g0 * a.abs()));
                }
            }
        }
    }
}
