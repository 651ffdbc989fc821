//! Chapman–Kolmogorov checks: compose `s -> m -> t` and compare with the
//! direct kernel `s -> t`.

use serde::{Deserialize, Serialize};

use super::{check_phase, kernel_log_mass, KernelError, ProcessParams};
use crate::dists::State;
use crate::numerics::{integrate_gamma_shaped, sum_nonnegative_series};
use crate::report::{Diagnostics, Method, VerificationReport};

/// The seven ways an intermediate time can sit relative to `t = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionCase {
    /// `s < m < t < 1`
    BirthBirth,
    /// `s < m < t = 1`
    BirthGamma,
    /// `s < m < 1 < t`
    BirthCross,
    /// `s < m = 1 < t`: integral over the gamma column.
    GammaDeath,
    /// `s < 1 < m < t`
    CrossDeath,
    /// `s = 1 < m < t`: the Poisson law is an entrance law.
    Entrance,
    /// `1 < s < m < t`
    DeathDeath,
}

impl CompositionCase {
    pub const ALL: [CompositionCase; 7] = [
        Self::BirthBirth,
        Self::BirthGamma,
        Self::BirthCross,
        Self::GammaDeath,
        Self::CrossDeath,
        Self::Entrance,
        Self::DeathDeath,
    ];

    pub fn classify(s: f64, m: f64, t: f64) -> Option<Self> {
        if !(0.0 <= s && s < m && m < t) {
            return None;
        }
        Some(if t < 1.0 {
            Self::BirthBirth
        } else if t == 1.0 {
            Self::BirthGamma
        } else if m < 1.0 {
            Self::BirthCross
        } else if m == 1.0 {
            Self::GammaDeath
        } else if s < 1.0 {
            Self::CrossDeath
        } else if s == 1.0 {
            Self::Entrance
        } else {
            Self::DeathDeath
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BirthBirth => "birth_birth",
            Self::BirthGamma => "birth_gamma",
            Self::BirthCross => "birth_cross",
            Self::GammaDeath => "gamma_death",
            Self::CrossDeath => "cross_death",
            Self::Entrance => "entrance",
            Self::DeathDeath => "death_death",
        }
    }
}

/// Composed and direct transition values for one `(s, m, t, z_s, z_t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Composition {
    pub case: CompositionCase,
    pub composed: f64,
    pub direct: f64,
    pub truncation_k: Option<u64>,
    pub panels: Option<usize>,
    pub converged: bool,
}

/// Computes `Σ_j P(Z_m = j | Z_s) P(Z_t | Z_m = j)` (or the integral over
/// `Z_1` when `m = 1`) next to the direct `P(Z_t | Z_s)`.
pub fn compose(
    params: &ProcessParams,
    s: f64,
    m: f64,
    t: f64,
    z_s: State,
    z_t: State,
) -> Result<Composition, KernelError> {
    let case = CompositionCase::classify(s, m, t).ok_or(KernelError::Unordered { s, t: m })?;
    check_phase(t, z_t)?;
    let direct = kernel_log_mass(params, s, t, z_s, z_t)?.exp();
    let tol = params.tolerances();

    if m == 1.0 {
        let (State::Count(i), State::Count(k)) = (z_s, z_t) else {
            return Err(KernelError::PhaseMismatch {
                time: s,
                state: z_s,
            });
        };
        let r0 = params.r0();
        let shape = i as f64 + k as f64 + r0;
        let rate = 1.0 / (1.0 - s) + 1.0 / (t - 1.0);
        let log_f = |x: f64| {
            let a =
                kernel_log_mass(params, s, 1.0, z_s, State::Level(x)).unwrap_or(f64::NEG_INFINITY);
            let b =
                kernel_log_mass(params, 1.0, t, State::Level(x), z_t).unwrap_or(f64::NEG_INFINITY);
            a + b
        };
        let q = integrate_gamma_shaped(log_f, shape, rate, tol.check / 10.0);
        return Ok(Composition {
            case,
            composed: q.value,
            direct,
            truncation_k: None,
            panels: Some(q.panels),
            converged: q.converged,
        });
    }

    // Range of Z_m with non-zero mass on both legs.
    let as_count = |z: State| z.count();
    let mut lo = 0;
    let mut hi = None;
    if m < 1.0 {
        lo = as_count(z_s).unwrap_or(0);
        if t < 1.0 {
            hi = as_count(z_t);
        }
    } else {
        if let Some(k) = as_count(z_t) {
            lo = k;
        }
        if s > 1.0 {
            hi = as_count(z_s);
        }
    }
    if let Some(h) = hi {
        if h < lo {
            return Ok(Composition {
                case,
                composed: 0.0,
                direct,
                truncation_k: Some(lo),
                panels: None,
                converged: true,
            });
        }
    }
    let sum = sum_nonnegative_series(lo, hi, tol.tail, |j| {
        let mid = State::Count(j);
        let a = kernel_log_mass(params, s, m, z_s, mid).unwrap_or(f64::NEG_INFINITY);
        let b = kernel_log_mass(params, m, t, mid, z_t).unwrap_or(f64::NEG_INFINITY);
        (a + b).exp()
    });
    Ok(Composition {
        case,
        composed: sum.value,
        direct,
        truncation_k: Some(sum.last_index),
        panels: None,
        converged: sum.converged,
    })
}

/// Chapman–Kolmogorov check for one configuration `s < m < t`.
///
/// Passes when the composition converged and
/// `|composed - direct| <= tolerances.check`.
pub fn verify_ck(
    params: &ProcessParams,
    s: f64,
    m: f64,
    t: f64,
    z_s: State,
    z_t: State,
) -> VerificationReport {
    let claim = format!(
        "ck.theta={}.s={s}.m={m}.t={t}.z={z_s}->{z_t}",
        params.theta()
    );
    match compose(params, s, m, t, z_s, z_t) {
        Ok(c) => {
            let method = if c.panels.is_some() {
                Method::Quadrature
            } else {
                Method::ExactSum
            };
            let mut r = VerificationReport::compare(
                format!("ck.{}", c.case.name()),
                method,
                vec![c.composed],
                vec![c.direct],
                params.tolerances().check,
            );
            r.pass &= c.converged;
            r.diagnostics.truncation_k = c.truncation_k;
            r.diagnostics.quadrature_panels = c.panels;
            r.with_note(claim)
        }
        Err(e) => VerificationReport {
            claim_id: "ck.invalid".into(),
            method: Method::ExactSum,
            computed: vec![],
            reference: vec![],
            tolerance: params.tolerances().check,
            pass: false,
            diagnostics: Diagnostics {
                notes: vec![claim, e.to_string()],
                ..Diagnostics::default()
            },
            seed: None,
        },
    }
}
