//! Two-sided conditional laws `L(Z_t | Z_s, Z_u)` for `s < t < u`.
//!
//! | case | times           | law                                                       | of          |
//! |------|-----------------|-----------------------------------------------------------|-------------|
//! | 1    | `s < t < u < 1` | `Bin(Z_u - Z_s, (1-u)(t-s)/((1-t)(u-s)))`                 | `Z_t - Z_s` |
//! | 2    | `s < t < 1 < u` | `NB(Z_s + Z_u + 1/θ², (1-t)(u-s)/((1-s)(u-t)))`           | `Z_t - Z_s` |
//! | 3    | `s < 1 < t < u` | `NB(Z_s + Z_u + 1/θ², (t-1)(u-s)/((t-s)(u-1)))`           | `Z_t - Z_u` |
//! | 4    | `1 < s < t < u` | `Bin(Z_s - Z_u, (s-1)(u-t)/((t-1)(u-s)))`                 | `Z_t - Z_u` |
//!
//! Configurations that touch `t = 1` at `s`, `t` or `u` are not covered.

use serde::Serialize;
use thiserror::Error;

use crate::dists::{LawError, State, TransitionLaw};
use crate::kernel::ProcessParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("times must satisfy 0 <= s < t < u, got ({s}, {t}, {u})")]
    Unordered { s: f64, t: f64, u: f64 },
    #[error("bridges with a time equal to 1 are not supported (s = {s}, t = {t}, u = {u})")]
    Unsupported { s: f64, t: f64, u: f64 },
    #[error("end-point states must be integers")]
    RealState,
    #[error("states ({z_s}, {z_u}) are incompatible: {reason}")]
    Incompatible {
        z_s: u64,
        z_u: u64,
        reason: &'static str,
    },
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeCase {
    /// `s < t < u < 1`
    BirthBirth,
    /// `s < t < 1 < u`
    BirthCross,
    /// `s < 1 < t < u`
    CrossDeath,
    /// `1 < s < t < u`
    DeathDeath,
}

impl BridgeCase {
    pub const ALL: [BridgeCase; 4] = [
        Self::BirthBirth,
        Self::BirthCross,
        Self::CrossDeath,
        Self::DeathDeath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BirthBirth => "case1_birth_birth",
            Self::BirthCross => "case2_birth_cross",
            Self::CrossDeath => "case3_cross_death",
            Self::DeathDeath => "case4_death_death",
        }
    }
}

/// Which end point the returned law is measured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Law of `Z_t - Z_s`.
    FromLeft,
    /// Law of `Z_t - Z_u`.
    FromRight,
}

/// Conditioning on `σ{X_r : r <= s or r >= u}` reduces, by the Markov
/// property, to conditioning on `(Z_s, Z_u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeQuery {
    s: f64,
    t: f64,
    u: f64,
    z_s: u64,
    z_u: u64,
    case: BridgeCase,
}

impl BridgeQuery {
    pub fn new(s: f64, t: f64, u: f64, z_s: State, z_u: State) -> Result<Self, BridgeError> {
        if !(0.0 <= s && s < t && t < u) {
            return Err(BridgeError::Unordered { s, t, u });
        }
        if s == 1.0 || t == 1.0 || u == 1.0 {
            return Err(BridgeError::Unsupported { s, t, u });
        }
        let (State::Count(z_s), State::Count(z_u)) = (z_s, z_u) else {
            return Err(BridgeError::RealState);
        };
        let case = if u < 1.0 {
            BridgeCase::BirthBirth
        } else if t < 1.0 {
            BridgeCase::BirthCross
        } else if s < 1.0 {
            BridgeCase::CrossDeath
        } else {
            BridgeCase::DeathDeath
        };
        if s == 0.0 && z_s != 0 {
            return Err(BridgeError::Incompatible {
                z_s,
                z_u,
                reason: "Z_0 = 0",
            });
        }
        match case {
            BridgeCase::BirthBirth if z_u < z_s => Err(BridgeError::Incompatible {
                z_s,
                z_u,
                reason: "the birth phase never decreases",
            }),
            BridgeCase::DeathDeath if z_u > z_s => Err(BridgeError::Incompatible {
                z_s,
                z_u,
                reason: "the death phase never increases",
            }),
            _ => Ok(Self {
                s,
                t,
                u,
                z_s,
                z_u,
                case,
            }),
        }
    }

    pub fn case(&self) -> BridgeCase {
        self.case
    }

    pub fn times(&self) -> (f64, f64, f64) {
        (self.s, self.t, self.u)
    }

    pub fn states(&self) -> (u64, u64) {
        (self.z_s, self.z_u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BridgeLaw {
    pub case: BridgeCase,
    pub law: TransitionLaw,
    pub offset: u64,
    pub orientation: Orientation,
}

pub fn bridge_law(params: &ProcessParams, q: &BridgeQuery) -> Result<BridgeLaw, BridgeError> {
    let (s, t, u) = (q.s, q.t, q.u);
    let r0 = params.r0();
    let r = q.z_s as f64 + q.z_u as f64 + r0;
    let out = match q.case {
        BridgeCase::BirthBirth => BridgeLaw {
            case: q.case,
            law: TransitionLaw::binomial(
                q.z_u - q.z_s,
                (1.0 - u) * (t - s) / ((1.0 - t) * (u - s)),
            )?,
            offset: q.z_s,
            orientation: Orientation::FromLeft,
        },
        BridgeCase::BirthCross => BridgeLaw {
            case: q.case,
            law: TransitionLaw::negative_binomial(r, (1.0 - t) * (u - s) / ((1.0 - s) * (u - t)))?,
            offset: q.z_s,
            orientation: Orientation::FromLeft,
        },
        BridgeCase::CrossDeath => BridgeLaw {
            case: q.case,
            law: TransitionLaw::negative_binomial(r, (t - 1.0) * (u - s) / ((t - s) * (u - 1.0)))?,
            offset: q.z_u,
            orientation: Orientation::FromRight,
        },
        BridgeCase::DeathDeath => BridgeLaw {
            case: q.case,
            law: TransitionLaw::binomial(
                q.z_s - q.z_u,
                (s - 1.0) * (u - t) / ((t - 1.0) * (u - s)),
            )?,
            offset: q.z_u,
            orientation: Orientation::FromRight,
        },
    };
    Ok(out)
}

/// `ln P(Z_t = z_t | Z_s, Z_u)`; `-inf` off the support.
pub fn bridge_log_mass(
    params: &ProcessParams,
    q: &BridgeQuery,
    z_t: u64,
) -> Result<f64, BridgeError> {
    let b = bridge_law(params, q)?;
    if z_t < b.offset {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(b.law.log_mass(State::Count(z_t - b.offset))?)
}

/// Slope and intercept of `X_t = a Z_t + b` for `t != 1`.
fn x_affine(theta: f64, t: f64) -> (f64, f64) {
    if t < 1.0 {
        (theta * (1.0 - t), -t / theta)
    } else {
        (theta * (t - 1.0), -1.0 / theta)
    }
}

/// Mean and variance of `X_t` given the bridge end points, from the moments
/// of the bridge law.
pub fn conditional_moments(
    params: &ProcessParams,
    q: &BridgeQuery,
) -> Result<(f64, f64), BridgeError> {
    let b = bridge_law(params, q)?;
    let (m, v) = b.law.moments();
    let (a, c) = x_affine(params.theta(), q.t);
    Ok((a * (b.offset as f64 + m) + c, a * a * v))
}

/// End-point values `(X_s, X_u)` of a bridge query.
pub fn endpoint_x(params: &ProcessParams, q: &BridgeQuery) -> (f64, f64) {
    let theta = params.theta();
    let (a_s, c_s) = x_affine(theta, q.s);
    let (a_u, c_u) = x_affine(theta, q.u);
    (a_s * q.z_s as f64 + c_s, a_u * q.z_u as f64 + c_u)
}

/// Linear interpolation `((u-t) x_s + (t-s) x_u)/(u-s)` of the harness
/// property.
pub fn harness_mean(s: f64, t: f64, u: f64, x_s: f64, x_u: f64) -> f64 {
    ((u - t) * x_s + (t - s) * x_u) / (u - s)
}

/// Quadratic-harness conditional variance with `η = θ`, `q = 1`:
/// `(u-t)(t-s)/(u-s) · (1 + θ(u x_s - s x_u)/(u-s) + θ(x_u - x_s)/(u-s))`.
pub fn harness_variance(theta: f64, s: f64, t: f64, u: f64, x_s: f64, x_u: f64) -> f64 {
    let d = u - s;
    (u - t) * (t - s) / d * (1.0 + theta * (u * x_s - s * x_u) / d + theta * (x_u - x_s) / d)
}
