//! Exact path simulation.
//!
//! A path is stored as its jump times. Birth jumps `Γ_0 < Γ_1 < ...` lie in
//! `[0, 1)`: the level goes from `k` to `k + 1` at `Γ_k`. Death jumps satisfy
//! `... < Δ_1 < Δ_0` in `(1, ∞)`: the level goes from `j + 1` to `j` at
//! `Δ_j`. Both sequences accumulate at `t = 1`, so each simulator resolves
//! them only outside a window `(1 - δ, 1 + δ)` and carries `Z_1` separately.
//!
//! Two constructions are provided:
//!
//! * [`simulate_forward`] runs the birth process through its exponential
//!   sojourns, bridges to `Z_1` with the exact gamma law, then runs the death
//!   phase from a Poisson stream.
//! * [`simulate_by_representation`] draws `Z_1 ~ Gamma(1/θ², 1)` first and
//!   maps two independent Poisson streams of rate `θ Z_1` onto both phases.
//!
//! With a stream `a_1 < a_2 < ...` of rate `θ Z_1`, birth jumps are
//! `θa/(1 + θa)` and death jumps are `h(a) = 1 + 1/(θa)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dists::{sample_exponential, sample_poisson, State, TransitionLaw};
use crate::kernel::ProcessParams;
use crate::numerics::ln_gamma;

const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("time must be >= 0, got {0}")]
    NegativeTime(f64),
    #[error("state {state} is not valid at t = {t}")]
    PhaseMismatch { t: f64, state: State },
    #[error("x = {x} is not on a level line at t = {t}")]
    OffLattice { t: f64, x: f64 },
    #[error("jump times must be strictly {order} and inside {range}")]
    BadJumpTimes {
        order: &'static str,
        range: &'static str,
    },
    #[error("invalid simulation setting: {0}")]
    Config(String),
}

/// `X_t` from `Z_t`.
pub fn z_to_x(params: &ProcessParams, t: f64, z: State) -> Result<f64, TrajectoryError> {
    let theta = params.theta();
    match z {
        _ if t.is_nan() || t < 0.0 => Err(TrajectoryError::NegativeTime(t)),
        State::Count(k) if t < 1.0 => Ok(theta * (1.0 - t) * k as f64 - t / theta),
        State::Count(k) if t > 1.0 => Ok(theta * (t - 1.0) * k as f64 - 1.0 / theta),
        State::Level(z1) if t == 1.0 && z1 >= 0.0 => Ok(theta * z1 - 1.0 / theta),
        state => Err(TrajectoryError::PhaseMismatch { t, state }),
    }
}

/// Inverse of [`z_to_x`]. Off `t = 1` the level is snapped to the nearest
/// integer when it lies within `1e-9` of it.
pub fn x_to_z(params: &ProcessParams, t: f64, x: f64) -> Result<State, TrajectoryError> {
    let theta = params.theta();
    if t.is_nan() || t < 0.0 {
        return Err(TrajectoryError::NegativeTime(t));
    }
    let off = TrajectoryError::OffLattice { t, x };
    if t == 1.0 {
        let z1 = (x + 1.0 / theta) / theta;
        return if z1 >= -SNAP_TOLERANCE {
            Ok(State::Level(z1.max(0.0)))
        } else {
            Err(off)
        };
    }
    let z = if t < 1.0 {
        (x + t / theta) / (theta * (1.0 - t))
    } else {
        (x + 1.0 / theta) / (theta * (t - 1.0))
    };
    let k = z.round();
    if k >= 0.0 && (z - k).abs() <= SNAP_TOLERANCE {
        Ok(State::Count(k as u64))
    } else {
        Err(off)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XPoint {
    pub t: f64,
    pub x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Final time `T > 1`.
    pub horizon: f64,
    /// Half-width `δ` of the unresolved window around `t = 1`.
    pub window: f64,
    /// Cap on simulated jumps per phase.
    pub k_max: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            window: 1e-6,
            k_max: 1_000_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if !(self.horizon > 1.0 && self.horizon.is_finite()) {
            return Err(TrajectoryError::Config(format!(
                "horizon = {} must exceed 1",
                self.horizon
            )));
        }
        if !(self.window > 0.0 && self.window < 1.0) {
            return Err(TrajectoryError::Config(format!(
                "window = {} must lie in (0, 1)",
                self.window
            )));
        }
        if self.k_max == 0 {
            return Err(TrajectoryError::Config("k_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Forward,
    Representation,
}

/// Death jumps resolved on `(start, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeathSegment {
    /// `Δ_0 > Δ_1 > ...`: `jumps[j]` is the time the level drops to `j`.
    pub jumps: Vec<f64>,
    pub start: f64,
    /// `k_max` arrivals were drawn before reaching `1 + δ`.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub theta: f64,
    pub construction: Construction,
    pub config: SimulationConfig,
    /// `Γ_0 < Γ_1 < ...`; all birth jumps in `[0, birth_end]`.
    pub birth_jumps: Vec<f64>,
    pub birth_end: f64,
    pub birth_truncated: bool,
    pub z1: f64,
    /// `Δ_0 > Δ_1 > ...`; all death jumps in `(death_start, ∞)`, including
    /// those past the horizon.
    pub death_jumps: Vec<f64>,
    pub death_start: f64,
    pub death_truncated: bool,
}

impl Trajectory {
    /// `Z_t`, or `None` inside the unresolved window.
    pub fn z_at(&self, t: f64) -> Option<State> {
        if t < 0.0 {
            None
        } else if t < 1.0 {
            (t <= self.birth_end)
                .then(|| State::Count(self.birth_jumps.partition_point(|&g| g <= t) as u64))
        } else if t == 1.0 {
            Some(State::Level(self.z1))
        } else {
            (t > self.death_start)
                .then(|| State::Count(self.death_jumps.partition_point(|&d| d > t) as u64))
        }
    }

    pub fn x_at(&self, t: f64) -> Option<f64> {
        let params = ProcessParams::new(self.theta).ok()?;
        z_to_x(&params, t, self.z_at(t)?).ok()
    }

    /// `Z_T` at the horizon.
    pub fn count_at_horizon(&self) -> u64 {
        self.death_jumps
            .partition_point(|&d| d > self.config.horizon) as u64
    }

    /// Death jumps in `(death_start, T]`, in increasing time order, paired
    /// with the level entered.
    pub fn death_events_to_horizon(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        let first = self.count_at_horizon() as usize;
        (first..self.death_jumps.len())
            .rev()
            .map(|j| (self.death_jumps[j], j as u64))
    }

    /// `Δ_0`, the time the path reaches level 0 for good.
    pub fn hitting_time(&self) -> Option<f64> {
        if self.z1 == 0.0 {
            Some(1.0)
        } else {
            self.death_jumps.first().copied()
        }
    }

    /// `X` on `points` evenly spaced times in `[0, T]`, skipping times inside
    /// the unresolved window.
    pub fn grid(&self, points: usize) -> Vec<XPoint> {
        let step = if points > 1 {
            self.config.horizon / (points - 1) as f64
        } else {
            0.0
        };
        (0..points)
            .map(|i| i as f64 * step)
            .filter_map(|t| self.x_at(t).map(|x| XPoint { t, x }))
            .collect()
    }
}

/// Forward construction: sojourns `τ_j ~ Exp(j + 1/θ²)` give
/// `Γ_k = 1 - exp(-(τ_0 + ... + τ_k))`, stopped at `1 - δ` or after `k_max`
/// jumps; then `Z_1 ~ Gamma(Z_{t*} + 1/θ², 1 - t*)` at the stopping time `t*`.
pub fn simulate_forward<R: Rng + ?Sized>(
    params: &ProcessParams,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<Trajectory, TrajectoryError> {
    config.validate()?;
    let r0 = params.r0();
    let limit = 1.0 - config.window;
    let mut jumps = Vec::new();
    let mut clock = 0.0;
    let mut truncated = false;
    loop {
        if jumps.len() as u64 == config.k_max {
            truncated = true;
            break;
        }
        clock += sample_exponential(jumps.len() as f64 + r0, rng);
        let g = -(-clock).exp_m1();
        if g > limit {
            break;
        }
        jumps.push(g);
    }
    let birth_end = if truncated {
        *jumps.last().expect("k_max > 0")
    } else {
        limit
    };
    let shape = jumps.len() as f64 + r0;
    let z1 = TransitionLaw::gamma(shape, 1.0 - birth_end)
        .expect("positive shape and scale")
        .sample(rng)
        .as_f64();
    let death = simulate_death_given_z1(params, z1, config, rng)?;
    Ok(Trajectory {
        theta: params.theta(),
        construction: Construction::Forward,
        config: *config,
        birth_jumps: jumps,
        birth_end,
        birth_truncated: truncated,
        z1,
        death_jumps: death.jumps,
        death_start: death.start,
        death_truncated: death.truncated,
    })
}

/// Death phase given `Z_1 = z1`: a rate-`θ z1` Poisson stream on
/// `a ∈ (0, 1/(θδ))`, with `Δ_j = h(a_{j+1})`, `h(a) = 1 + 1/(θa)`.
/// Then `Z_t = #{a_i < 1/(θ(t-1))} ~ Poisson(z1/(t-1))`.
pub fn simulate_death_given_z1<R: Rng + ?Sized>(
    params: &ProcessParams,
    z1: f64,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<DeathSegment, TrajectoryError> {
    config.validate()?;
    if !(z1 >= 0.0 && z1.is_finite()) {
        return Err(TrajectoryError::PhaseMismatch {
            t: 1.0,
            state: State::Level(z1),
        });
    }
    let theta = params.theta();
    let a_max = 1.0 / (theta * config.window);
    let (arrivals, truncated) = poisson_stream(theta * z1, a_max, config.k_max, rng);
    let start = match (truncated, arrivals.last()) {
        (true, Some(&a)) => 1.0 + 1.0 / (theta * a),
        _ => 1.0 + config.window,
    };
    Ok(DeathSegment {
        jumps: arrivals.iter().map(|&a| 1.0 + 1.0 / (theta * a)).collect(),
        start,
        truncated,
    })
}

/// Representation: `Z_1 ~ Gamma(1/θ², 1)`, then two independent rate-`θ Z_1`
/// Poisson streams mapped to birth jumps `θa/(1 + θa)` and death jumps
/// `1 + 1/(θa)`.
pub fn simulate_by_representation<R: Rng + ?Sized>(
    params: &ProcessParams,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<Trajectory, TrajectoryError> {
    config.validate()?;
    let theta = params.theta();
    let z1 = TransitionLaw::gamma(params.r0(), 1.0)
        .expect("positive shape")
        .sample(rng)
        .as_f64();
    let limit = 1.0 - config.window;
    let a_max = limit / (theta * config.window);
    let (arrivals, truncated) = poisson_stream(theta * z1, a_max, config.k_max, rng);
    let birth_jumps: Vec<f64> = arrivals
        .iter()
        .map(|&a| theta * a / (1.0 + theta * a))
        .collect();
    let birth_end = match (truncated, birth_jumps.last()) {
        (true, Some(&g)) => g,
        _ => limit,
    };
    let death = simulate_death_given_z1(params, z1, config, rng)?;
    Ok(Trajectory {
        theta,
        construction: Construction::Representation,
        config: *config,
        birth_jumps,
        birth_end,
        birth_truncated: truncated,
        z1,
        death_jumps: death.jumps,
        death_start: death.start,
        death_truncated: death.truncated,
    })
}

/// Arrivals of a homogeneous Poisson stream on `(0, a_max)`, at most `k_max`
/// of them. The flag is set when the cap stopped the stream.
fn poisson_stream<R: Rng + ?Sized>(
    rate: f64,
    a_max: f64,
    k_max: u64,
    rng: &mut R,
) -> (Vec<f64>, bool) {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return (out, false);
    }
    let mut a = 0.0;
    loop {
        if out.len() as u64 == k_max {
            return (out, true);
        }
        a += sample_exponential(rate, rng);
        if a >= a_max {
            return (out, false);
        }
        out.push(a);
    }
}

/// Log joint density of `(Γ_0, ..., Γ_k)` at `s_0 < ... < s_k` in `(0, 1)`:
///
/// ```text
/// Γ(1/θ² + k + 1)/Γ(1/θ²) · (1 - s_k)^{1/θ² + k - 1} · Π_{j<k} (1 - s_j)^{-2}
/// ```
pub fn gamma_jump_log_density(params: &ProcessParams, s: &[f64]) -> Result<f64, TrajectoryError> {
    let bad = TrajectoryError::BadJumpTimes {
        order: "increasing",
        range: "(0, 1)",
    };
    if s.is_empty() || !s.iter().all(|&x| x > 0.0 && x < 1.0) || !s.windows(2).all(|w| w[0] < w[1])
    {
        return Err(bad);
    }
    let complements: Vec<f64> = s.iter().map(|&x| 1.0 - x).collect();
    Ok(gamma_jump_log_density_from_complements(
        params,
        &complements,
    ))
}

/// [`gamma_jump_log_density`] in terms of `c_j = 1 - s_j`, which keeps
/// resolution when jumps sit close to `t = 1`. Arguments are not checked.
pub(crate) fn gamma_jump_log_density_from_complements(params: &ProcessParams, c: &[f64]) -> f64 {
    let (&last, head) = c.split_last().expect("non-empty");
    let r0 = params.r0();
    let k = head.len() as f64;
    let head_sum: f64 = head.iter().map(|&x| x.ln()).sum();
    ln_gamma(r0 + k + 1.0) - ln_gamma(r0) + (r0 + k - 1.0) * last.ln() - 2.0 * head_sum
}

/// Log joint density of `(Δ_0, ..., Δ_k)` at `t_0 > ... > t_k > 1`:
///
/// ```text
/// Γ(1/θ² + k + 1)/Γ(1/θ²) · (t_k - 1)^{1/θ² + k - 1} t_k^{-(1/θ² + k + 1)} · Π_{i<k} (t_i - 1)^{-2}
/// ```
pub fn delta_jump_log_density(params: &ProcessParams, t: &[f64]) -> Result<f64, TrajectoryError> {
    let bad = TrajectoryError::BadJumpTimes {
        order: "decreasing",
        range: "(1, ∞)",
    };
    let Some((&last, head)) = t.split_last() else {
        return Err(bad);
    };
    if !t.iter().all(|&x| x > 1.0 && x.is_finite()) || !t.windows(2).all(|w| w[0] > w[1]) {
        return Err(bad);
    }
    let r0 = params.r0();
    let k = head.len() as f64;
    let head_sum: f64 = head.iter().map(|&x| (x - 1.0).ln()).sum();
    Ok(
        ln_gamma(r0 + k + 1.0) - ln_gamma(r0) + (r0 + k - 1.0) * (last - 1.0).ln()
            - (r0 + k + 1.0) * last.ln()
            - 2.0 * head_sum,
    )
}

/// `P(Δ_0 > t) = 1 - (1 - 1/t)^{1/θ²}` for `t > 1`.
pub fn hitting_survival(params: &ProcessParams, t: f64) -> f64 {
    -(params.r0() * (-1.0 / t).ln_1p()).exp_m1()
}

/// Degenerate members of the family, used as ground truth in limit checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateKind {
    /// Standard Brownian motion.
    Brownian,
    /// `X_t = θ N_{t/θ²} - t/θ`.
    Poisson,
    /// `X_t = θ t N_{1/(tθ²)} - 1/θ`.
    PoissonInverted,
}

impl std::str::FromStr for DegenerateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brownian" => Ok(Self::Brownian),
            "poisson" => Ok(Self::Poisson),
            "poisson-inverted" => Ok(Self::PoissonInverted),
            other => Err(format!("unknown reference process {other:?}")),
        }
    }
}

/// One exact sample of `(X_{t_1}, ..., X_{t_n})` for a degenerate process.
pub fn degenerate_reference<R: Rng + ?Sized>(
    kind: DegenerateKind,
    params: &ProcessParams,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>, TrajectoryError> {
    if !times.iter().all(|&t| t > 0.0 && t.is_finite()) || !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(TrajectoryError::BadJumpTimes {
            order: "increasing",
            range: "(0, ∞)",
        });
    }
    let theta = params.theta();
    let scale = 1.0 / (theta * theta);
    Ok(match kind {
        DegenerateKind::Brownian => {
            let mut x = 0.0;
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    let z: f64 = StandardNormal.sample(rng);
                    x += (t - prev).sqrt() * z;
                    prev = t;
                    x
                })
                .collect()
        }
        DegenerateKind::Poisson => {
            let mut n = 0u64;
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    n += sample_poisson((t - prev) * scale, rng);
                    prev = t;
                    theta * n as f64 - t / theta
                })
                .collect()
        }
        DegenerateKind::PoissonInverted => {
            // N is evaluated at decreasing arguments 1/(tθ²): fill from the last time.
            let mut out = vec![0.0; times.len()];
            let mut n = 0u64;
            let mut prev = 0.0;
            for (i, &t) in times.iter().enumerate().rev() {
                let arg = scale / t;
                n += sample_poisson(arg - prev, rng);
                prev = arg;
                out[i] = theta * t * n as f64 - 1.0 / theta;
            }
            out
        }
    })
}
