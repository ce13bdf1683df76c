//! Weight re-mapping functions.
//!
//! Raw trainable angles live on the whole real line. Before every forward
//! pass each angle is pushed through one of these fixed maps, which (except
//! for the identity baseline and the one-sided ELU) squash it into
//! `[-pi, pi]`. Optimizer updates act on the raw values.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_finite, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RemapKind {
    /// No constraint, `phi(t) = t`.
    Identity,
    /// Hard clip to `[-pi, pi]`.
    Clamp,
    /// `pi * tanh(t)`.
    Tanh,
    /// `2 * atan(2t)`.
    Arctan,
    /// `2pi / (1 + e^-t) - pi`.
    Sigmoid,
    /// ELU with `alpha = pi`: `pi (e^t - 1)` below zero, identity above.
    Elu,
}

impl RemapKind {
    pub const ALL: [RemapKind; 6] = [
        RemapKind::Identity,
        RemapKind::Clamp,
        RemapKind::Tanh,
        RemapKind::Arctan,
        RemapKind::Sigmoid,
        RemapKind::Elu,
    ];

    /// Name used on the command line and in CSV files.
    pub fn as_str(self) -> &'static str {
        match self {
            RemapKind::Identity => "none",
            RemapKind::Clamp => "clamp",
            RemapKind::Tanh => "tanh",
            RemapKind::Arctan => "arctan",
            RemapKind::Sigmoid => "sigmoid",
            RemapKind::Elu => "elu",
        }
    }

    /// `phi(theta)`.
    pub fn value(self, theta: f64) -> Result<f64> {
        check_finite("remap input", theta)?;
        Ok(self.value_unchecked(theta))
    }

    /// `d phi / d theta`.
    ///
    /// At the kinks (`|theta| = pi` for Clamp, `theta = 0` for ELU) the
    /// derivative is taken as 1.
    pub fn derivative(self, theta: f64) -> Result<f64> {
        check_finite("remap input", theta)?;
        Ok(self.derivative_unchecked(theta))
    }

    pub(crate) fn value_unchecked(self, theta: f64) -> f64 {
        match self {
            RemapKind::Identity => theta,
            RemapKind::Clamp => theta.clamp(-PI, PI),
            RemapKind::Tanh => PI * theta.tanh(),
            RemapKind::Arctan => 2.0 * (2.0 * theta).atan(),
            // pi * tanh(t/2) is algebraically 2pi/(1+e^-t) - pi but has no
            // cancellation near the origin and is exactly odd.
            RemapKind::Sigmoid => PI * (theta / 2.0).tanh(),
            RemapKind::Elu => {
                if theta < 0.0 {
                    PI * theta.exp_m1()
                } else {
                    theta
                }
            }
        }
    }

    pub(crate) fn derivative_unchecked(self, theta: f64) -> f64 {
        match self {
            RemapKind::Identity => 1.0,
            RemapKind::Clamp => {
                if theta.abs() <= PI {
                    1.0
                } else {
                    0.0
                }
            }
            RemapKind::Tanh => {
                let t = theta.tanh();
                PI * (1.0 - t * t)
            }
            RemapKind::Arctan => 4.0 / (1.0 + 4.0 * theta * theta),
            RemapKind::Sigmoid => {
                // 2pi e^-t / (1 + e^-t)^2, written symmetrically to avoid overflow.
                let e = (-theta.abs()).exp();
                2.0 * PI * e / ((1.0 + e) * (1.0 + e))
            }
            RemapKind::Elu => {
                if theta < 0.0 {
                    PI * theta.exp()
                } else {
                    1.0
                }
            }
        }
    }
}

impl fmt::Display for RemapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RemapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        RemapKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown remap kind `{s}`")))
    }
}

pub fn remap_value(kind: RemapKind, theta: f64) -> Result<f64> {
    kind.value(theta)
}

pub fn remap_derivative(kind: RemapKind, theta: f64) -> Result<f64> {
    kind.derivative(theta)
}

/// Elementwise `phi` over a flat slice of raw angles.
pub fn remap_all(kind: RemapKind, thetas: &[f64]) -> Result<Vec<f64>> {
    thetas.iter().map(|&t| kind.value(t)).collect()
}
