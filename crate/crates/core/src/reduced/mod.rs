//! Reduced energies in the scales (and centres), their closed-form critical
//! points along symmetric families, and the derived sign profiles.

mod multipoint;
mod families;
mod tower;

pub use multipoint::*;
pub use families::*;
pub use tower::*;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::critical::{classify_hessian, Classification};
use crate::error::{Error, Result};
use crate::integrals::{ExpansionConstants, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Thm11,
    Thm12,
    Thm13,
    Tower,
}

/// Signs of the Hardy atom and of each standard bubble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPattern {
    pub hardy_sign: i8,
    pub bubble_signs: Vec<i8>,
    pub regime: Regime,
}

impl SignPattern {
    pub fn thm11() -> Self {
        Self { hardy_sign: 1, bubble_signs: vec![-1], regime: Regime::Thm11 }
    }

    pub fn thm12(k: usize) -> Self {
        Self { hardy_sign: 1, bubble_signs: vec![-1; k], regime: Regime::Thm12 }
    }

    /// Bubble `i` (from 1) carries `(-1)^i`.
    pub fn thm13(k: usize) -> Self {
        let bubble_signs = (1..=k).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        Self { hardy_sign: 1, bubble_signs, regime: Regime::Thm13 }
    }

    /// Bubble `i` carries `(-1)^{i-1}` and the Hardy atom `(-1)^k`.
    pub fn tower(k: usize) -> Self {
        let bubble_signs = (1..=k).map(|i| if i % 2 == 1 { 1 } else { -1 }).collect();
        let hardy_sign = if k.is_multiple_of(2) { 1 } else { -1 };
        Self { hardy_sign, bubble_signs, regime: Regime::Tower }
    }

    pub fn k(&self) -> usize {
        self.bubble_signs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.regime {
            Regime::Thm11 => {
                if self.k() != 1 {
                    return Err(Error::InvalidPattern("axis pattern has exactly one bubble".into()));
                }
                Self::thm11()
            }
            Regime::Thm12 => Self::thm12(self.k()),
            Regime::Thm13 => Self::thm13(self.k()),
            Regime::Tower => Self::tower(self.k()),
        };
        if *self != expected {
            return Err(Error::InvalidPattern(format!("{self:?} does not match its regime")));
        }
        Ok(())
    }
}

/// Scales `λ₁..λ_k, λ̄` (Hardy scale last) and the bubble centres (or tower
/// offsets `ζᵢ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub lambdas: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub regime: Regime,
}

impl ReducedPoint {
    pub fn lambda_bar(&self) -> f64 {
        *self.lambdas.last().expect("at least the Hardy scale")
    }

    pub(crate) fn check(&self) -> Result<()> {
        if let Some(&l) = self.lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::NonPositiveScale(l));
        }
        if self.lambdas.len() != self.centers.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.centers.len() + 1,
                got: self.lambdas.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: ReducedPoint,
    pub value: f64,
    pub grad_norm: f64,
    pub hessian_eigs: Vec<f64>,
    pub classification: Classification,
}

pub(crate) fn check_variant(consts: &ExpansionConstants, variant: Variant, n: usize) -> Result<()> {
    if consts.variant != variant {
        return Err(Error::VariantMismatch(format!(
            "expected {variant:?} constants, got {:?}",
            consts.variant
        )));
    }
    if consts.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: consts.n });
    }
    Ok(())
}

/// `λ = Λ^{2/(N-2)}`.
pub(crate) fn scale_from_weight(n: usize, w: f64) -> f64 {
    w.powf(2.0 / (n as f64 - 2.0))
}

pub(crate) fn eigs(h: &DMatrix<f64>) -> Result<(Vec<f64>, Classification)> {
    let r = classify_hessian(h)?;
    Ok((r.eigenvalues, r.classification))
}

pub(crate) fn window_error(t: f64) -> Error {
    Error::OutsideWindow(t)
}

/// Queries closer than this to a window endpoint are rejected.
pub const WINDOW_MARGIN: f64 = 1e-9;
