//! Strictly increasing, positive response transformations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_T1_SCALE: f64 = 10.0;
pub const DEFAULT_T1_OFFSET: f64 = 0.01;
pub const DEFAULT_T2_C0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResponseTransform {
    /// Bounded logistic: `1/(1+exp(-scale·y)) + offset`.
    T1 { scale: f64, offset: f64 },
    /// Shift by `(c0 - min y)` when the minimum falls below `c0`.
    T2 { c0: f64 },
}

impl ResponseTransform {
    pub fn t1_default() -> Self {
        ResponseTransform::T1 {
            scale: DEFAULT_T1_SCALE,
            offset: DEFAULT_T1_OFFSET,
        }
    }

    pub fn t2_default() -> Self {
        ResponseTransform::T2 { c0: DEFAULT_T2_C0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ResponseTransform::T1 { scale, offset } => {
                scale > 0.0 && offset > 0.0 && scale.is_finite() && offset.is_finite()
            }
            ResponseTransform::T2 { c0 } => c0 > 0.0 && c0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid transform parameters {self:?}")))
        }
    }

    pub fn apply(&self, y: &[f64]) -> Result<TransformedResponses> {
        self.validate()?;
        if y.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        Ok(match *self {
            ResponseTransform::T1 { scale, offset } => apply_t1(y, scale, offset),
            ResponseTransform::T2 { c0 } => apply_t2(y, c0),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ResponseTransform::T1 { .. } => "t1",
            ResponseTransform::T2 { .. } => "t2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedResponses {
    pub y_tilde: Vec<f64>,
    /// Uniform shift added by T2; always 0 for T1.
    pub shift_applied: f64,
}

pub fn apply_t1(y: &[f64], scale: f64, offset: f64) -> TransformedResponses {
    let y_tilde = y
        .iter()
        .map(|&v| 1.0 / (1.0 + (-scale * v).exp()) + offset)
        .collect();
    TransformedResponses {
        y_tilde,
        shift_applied: 0.0,
    }
}

pub fn apply_t2(y: &[f64], c0: f64) -> TransformedResponses {
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < c0 { c0 - min } else { 0.0 };
    TransformedResponses {
        y_tilde: y.iter().map(|&v| v + shift).collect(),
        shift_applied: shift,
    }
}
