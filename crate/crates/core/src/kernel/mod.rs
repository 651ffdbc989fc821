//! Transition structure of `(Z_t)_{t>=0}`.
//!
//! `Z` is a pure birth process with immigration on `[0, 1)` with rate
//! `λ_n(t) = (n + 1/θ²)/(1 - t)`, a gamma variable at `t = 1`, and a pure
//! death process with rate `μ_n(t) = n/(t - 1)` on `(1, ∞)`, entered through
//! the Poisson law `L(Z_t | Z_1) = Poisson(Z_1/(t - 1))`.
//!
//! A forward transition `s -> t` falls into exactly one of five cases:
//!
//! | case          | times        | law                                            | of          |
//! |---------------|--------------|------------------------------------------------|-------------|
//! | `Birth`       | `s < t < 1`  | `NB(Z_s + 1/θ², (1-t)/(1-s))`                  | `Z_t - Z_s` |
//! | `BirthToOne`  | `s < t = 1`  | `Gamma(Z_s + 1/θ², 1 - s)`                     | `Z_1`       |
//! | `Cross`       | `s < 1 < t`  | `NB(Z_s + 1/θ², (t-1)/(t-s))`                  | `Z_t`       |
//! | `Entrance`    | `s = 1 < t`  | `Poisson(Z_1/(t-1))`                           | `Z_t`       |
//! | `Death`       | `1 < s < t`  | `Binomial(Z_s, (s-1)/(t-1))`                   | `Z_t`       |

mod ck;

pub use ck::{compose, verify_ck, Composition, CompositionCase};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dists::{LawError, State, TransitionLaw};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("theta must be a positive finite number, got {0}")]
    InvalidTheta(f64),
    #[error("time {0} must be >= 0")]
    NegativeTime(f64),
    #[error("times must satisfy s < t, got s = {s}, t = {t}")]
    Unordered { s: f64, t: f64 },
    #[error("state {state} has the wrong type for time {time} (integer off t = 1, real at t = 1)")]
    PhaseMismatch { time: f64, state: State },
    #[error("Z_0 = 0, so a kernel from s = 0 needs z_s = 0 (got {0})")]
    NonzeroAtOrigin(u64),
    #[error("Z_1 must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("eta * theta = 0: use the degenerate reference processes")]
    Degenerate,
    #[error("eta * theta = {0} < 0 is not attained by any bi-Poisson process")]
    Infeasible(f64),
    #[error("MGF argument {u} diverges in case {case:?}; must be below {bound}")]
    Divergent {
        case: KernelCase,
        u: f64,
        bound: f64,
    },
    #[error(transparent)]
    Law(#[from] LawError),
}

/// Numerical tolerances shared by kernel and verification routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative stopping threshold for open-ended sums.
    pub tail: f64,
    /// Absolute tolerance on probabilities for identity checks.
    pub check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tail: 1e-16,
            check: 1e-9,
        }
    }
}

/// Canonical parameter `θ > 0` of the process with `η = θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    theta: f64,
    #[serde(default)]
    tolerances: Tolerances,
}

impl ProcessParams {
    pub fn new(theta: f64) -> Result<Self, KernelError> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(KernelError::InvalidTheta(theta));
        }
        Ok(Self {
            theta,
            tolerances: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    /// Immigration shape `1/θ²`.
    pub fn r0(&self) -> f64 {
        1.0 / (self.theta * self.theta)
    }

    /// Birth rate `λ_n(t) = (n + 1/θ²)/(1 - t)` for `t < 1`.
    pub fn birth_rate(&self, n: u64, t: f64) -> f64 {
        (n as f64 + self.r0()) / (1.0 - t)
    }

    /// Death rate `μ_n(t) = n/(t - 1)` for `t > 1`.
    pub fn death_rate(&self, n: u64, t: f64) -> f64 {
        n as f64 / (t - 1.0)
    }
}

/// Result of mapping a general `(η, θ)` pair onto the canonical process
/// `X*_t = ± space_scale · X_{t · time_scale}` with parameters `(θ*, θ*)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub params: ProcessParams,
    pub time_scale: f64,
    pub space_scale: f64,
    pub negate: bool,
}

/// Reduces `(η, θ)` with `ηθ > 0` to the canonical `(θ*, θ*)`, `θ* = √(ηθ)`.
///
/// Negative pairs are first flipped by `X -> -X`, then
/// `X*_t = √(η/θ) X_{tθ/η}`.
pub fn reduce_params(eta: f64, theta: f64) -> Result<Reduction, KernelError> {
    let prod = eta * theta;
    if prod == 0.0 {
        return Err(KernelError::Degenerate);
    }
    if prod < 0.0 || prod.is_nan() {
        return Err(KernelError::Infeasible(prod));
    }
    let negate = eta < 0.0;
    let (eta, theta) = (eta.abs(), theta.abs());
    Ok(Reduction {
        params: ProcessParams::new(prod.sqrt())?,
        time_scale: theta / eta,
        space_scale: (eta / theta).sqrt(),
        negate,
    })
}

/// Which of the five transition cases applies to `s -> t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCase {
    Birth,
    BirthToOne,
    Cross,
    Entrance,
    Death,
}

impl KernelCase {
    pub fn classify(s: f64, t: f64) -> Result<Self, KernelError> {
        if s < 0.0 {
            return Err(KernelError::NegativeTime(s));
        }
        if s.is_nan() || t.is_nan() || s >= t {
            return Err(KernelError::Unordered { s, t });
        }
        Ok(if s < 1.0 {
            if t < 1.0 {
                Self::Birth
            } else if t == 1.0 {
                Self::BirthToOne
            } else {
                Self::Cross
            }
        } else if s == 1.0 {
            Self::Entrance
        } else {
            Self::Death
        })
    }
}

/// Checks that `state` has the type of the phase at time `t`.
pub fn check_phase(t: f64, state: State) -> Result<(), KernelError> {
    match (t == 1.0, state) {
        (true, State::Level(x)) if x >= 0.0 => Ok(()),
        (false, State::Count(_)) => Ok(()),
        _ => Err(KernelError::PhaseMismatch { time: t, state }),
    }
}

/// A validated transition query `Z_t | Z_s = z_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelQuery {
    s: f64,
    t: f64,
    z_s: State,
    case: KernelCase,
}

impl KernelQuery {
    pub fn new(s: f64, t: f64, z_s: State) -> Result<Self, KernelError> {
        let case = KernelCase::classify(s, t)?;
        check_phase(s, z_s)?;
        match z_s {
            State::Count(k) if s == 0.0 && k != 0 => return Err(KernelError::NonzeroAtOrigin(k)),
            State::Level(x) if x <= 0.0 => return Err(KernelError::NonPositiveLevel(x)),
            _ => {}
        }
        Ok(Self { s, t, z_s, case })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn z_s(&self) -> State {
        self.z_s
    }

    pub fn case(&self) -> KernelCase {
        self.case
    }
}

/// Law of `Z_t - offset` given `Z_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kernel {
    pub case: KernelCase,
    pub law: TransitionLaw,
    pub offset: u64,
}

impl Kernel {
    /// Log mass (or density at `t = 1`) of `Z_t = z_t`.
    pub fn log_mass(&self, z_t: State) -> Result<f64, KernelError> {
        let shifted = match z_t {
            State::Count(k) if k < self.offset => return Ok(f64::NEG_INFINITY),
            State::Count(k) => State::Count(k - self.offset),
            level => level,
        };
        Ok(self.law.log_mass(shifted)?)
    }

    /// Conditional mean and variance of `Z_t`.
    pub fn moments(&self) -> (f64, f64) {
        let (m, v) = self.law.moments();
        (m + self.offset as f64, v)
    }
}

/// Law of `Z_t`. `t = 0` gives the point mass at zero.
pub fn marginal(params: &ProcessParams, t: f64) -> Result<TransitionLaw, KernelError> {
    if t.is_nan() || t < 0.0 {
        return Err(KernelError::NegativeTime(t));
    }
    let r0 = params.r0();
    Ok(if t == 0.0 {
        TransitionLaw::zero()
    } else if t < 1.0 {
        TransitionLaw::negative_binomial(r0, 1.0 - t)?
    } else if t == 1.0 {
        TransitionLaw::gamma(r0, 1.0)?
    } else {
        TransitionLaw::negative_binomial(r0, 1.0 - 1.0 / t)?
    })
}

pub fn marginal_log_mass(params: &ProcessParams, t: f64, z: State) -> Result<f64, KernelError> {
    check_phase(t, z)?;
    Ok(marginal(params, t)?.log_mass(z)?)
}

/// The law of `Z_t` given `Z_s`, with the case that fired.
pub fn forward_kernel(params: &ProcessParams, query: &KernelQuery) -> Result<Kernel, KernelError> {
    let (s, t) = (query.s, query.t);
    let r0 = params.r0();
    let kernel = match (query.case, query.z_s) {
        (KernelCase::Birth, State::Count(i)) => Kernel {
            case: KernelCase::Birth,
            law: TransitionLaw::negative_binomial(i as f64 + r0, (1.0 - t) / (1.0 - s))?,
            offset: i,
        },
        (KernelCase::BirthToOne, State::Count(i)) => Kernel {
            case: KernelCase::BirthToOne,
            law: TransitionLaw::gamma(i as f64 + r0, 1.0 - s)?,
            offset: 0,
        },
        (KernelCase::Cross, State::Count(i)) => Kernel {
            case: KernelCase::Cross,
            law: TransitionLaw::negative_binomial(i as f64 + r0, (t - 1.0) / (t - s))?,
            offset: 0,
        },
        (KernelCase::Entrance, State::Level(x)) => Kernel {
            case: KernelCase::Entrance,
            law: TransitionLaw::poisson(x / (t - 1.0))?,
            offset: 0,
        },
        (KernelCase::Death, State::Count(n)) => Kernel {
            case: KernelCase::Death,
            law: TransitionLaw::binomial(n, (s - 1.0) / (t - 1.0))?,
            offset: 0,
        },
        (_, state) => return Err(KernelError::PhaseMismatch { time: s, state }),
    };
    Ok(kernel)
}

/// `ln P(Z_t = z_t | Z_s = z_s)`, a log density when `t = 1`; `-inf` off the
/// support.
pub fn kernel_log_mass(
    params: &ProcessParams,
    s: f64,
    t: f64,
    z_s: State,
    z_t: State,
) -> Result<f64, KernelError> {
    check_phase(t, z_t)?;
    let query = KernelQuery::new(s, t, z_s)?;
    forward_kernel(params, &query)?.log_mass(z_t)
}

/// Conditional log-MGF written as `ln E[e^{u Z_t} | Z_s] = log_scale + slope · Z_s`.
///
/// Every case has this affine form, which is what makes finite-dimensional
/// MGFs computable by backward recursion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineLogMgf {
    pub log_scale: f64,
    pub slope: f64,
}

/// Affine coefficients of the conditional log-MGF for `s -> t`.
///
/// Birth phase, from `E[e^{u(1-t)(Z_t - Z_s)} | Z_s] = ((1-t)/(1-s-(t-s)e^{u(1-t)}))^{Z_s + 1/θ²}`
/// with the argument rescaled so that `u` multiplies `Z_t` itself:
/// `E[e^{u Z_t} | Z_s] = e^{u Z_s} ((1-t)/(1-s-(t-s)e^u))^{Z_s + 1/θ²}`.
/// The other cases use `(1 - u(1-s))^{-Z_s-1/θ²}`, the cross-phase negative
/// binomial, `exp(Z_1 (e^u - 1)/(t-1))` and `((t-s+(s-1)e^u)/(t-1))^{Z_s}`.
pub fn conditional_log_mgf_affine(
    params: &ProcessParams,
    s: f64,
    t: f64,
    u: f64,
) -> Result<AffineLogMgf, KernelError> {
    let case = KernelCase::classify(s, t)?;
    let r0 = params.r0();
    let out = match case {
        KernelCase::Birth => {
            // (1-t) / (1-s-(t-s)e^u) = 1 / (1 - (t-s)(e^u - 1)/(1-t))
            let bound = ((1.0 - s) / (t - s)).ln();
            if u >= bound {
                return Err(KernelError::Divergent { case, u, bound });
            }
            let log_ratio = -(-(t - s) * u.exp_m1() / (1.0 - t)).ln_1p();
            AffineLogMgf {
                log_scale: r0 * log_ratio,
                slope: u + log_ratio,
            }
        }
        KernelCase::BirthToOne => {
            let bound = 1.0 / (1.0 - s);
            if u >= bound {
                return Err(KernelError::Divergent { case, u, bound });
            }
            let log_ratio = -(-u * (1.0 - s)).ln_1p();
            AffineLogMgf {
                log_scale: r0 * log_ratio,
                slope: log_ratio,
            }
        }
        KernelCase::Cross => {
            // NB(Z_s + r0, p) with p = (t-1)/(t-s): p/(1-(1-p)e^u)
            let p = (t - 1.0) / (t - s);
            let q = (1.0 - s) / (t - s);
            let bound = -q.ln();
            if u >= bound {
                return Err(KernelError::Divergent { case, u, bound });
            }
            let log_ratio = -(-q * u.exp_m1() / p).ln_1p();
            AffineLogMgf {
                log_scale: r0 * log_ratio,
                slope: log_ratio,
            }
        }
        KernelCase::Entrance => AffineLogMgf {
            log_scale: 0.0,
            slope: u.exp_m1() / (t - 1.0),
        },
        KernelCase::Death => AffineLogMgf {
            log_scale: 0.0,
            // (t - s + (s-1)e^u)/(t-1) = 1 + (s-1)(e^u - 1)/(t-1)
            slope: ((s - 1.0) * u.exp_m1() / (t - 1.0)).ln_1p(),
        },
    };
    Ok(out)
}

/// `E[e^{u Z_t} | Z_s = z_s]`.
pub fn conditional_mgf(
    params: &ProcessParams,
    s: f64,
    t: f64,
    z_s: State,
    u: f64,
) -> Result<f64, KernelError> {
    let query = KernelQuery::new(s, t, z_s)?;
    let a = conditional_log_mgf_affine(params, query.s, query.t, u)?;
    Ok((a.log_scale + a.slope * z_s.as_f64()).exp())
}
