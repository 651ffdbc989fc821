//! Finite-dimensional MGFs by backward recursion, and the two scaling limits.
//!
//! Every conditional log-MGF `ln E[e^{c Z_t} | Z_s]` is affine in `Z_s`, so
//! `E exp(Σ v_j Z_{t_j})` collapses from the last time point backwards: the
//! last factor becomes a constant times `e^{c' Z_{t_{n-1}}}` and `c'` is added
//! to the previous argument. The recursion stops at `Z_0 = 0`.

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{conditional_log_mgf_affine, KernelError, ProcessParams};
use crate::report::{Method, VerificationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MgfError {
    #[error("need 0 < t_1 < ... < t_n with one argument per time")]
    BadQuery,
    #[error("diverges when absorbing t = {time} (step {step}): {source}")]
    Divergent {
        step: usize,
        time: f64,
        #[source]
        source: KernelError,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointMgfQuery {
    theta: f64,
    times: Vec<f64>,
    args: Vec<f64>,
}

impl JointMgfQuery {
    pub fn new(theta: f64, times: Vec<f64>, args: Vec<f64>) -> Result<Self, MgfError> {
        ProcessParams::new(theta)?;
        let ordered =
            times.first().is_some_and(|&t| t > 0.0) && times.windows(2).all(|w| w[0] < w[1]);
        if !ordered
            || times.len() != args.len()
            || !times.iter().chain(&args).all(|x| x.is_finite())
        {
            return Err(MgfError::BadQuery);
        }
        Ok(Self { theta, times, args })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn args(&self) -> &[f64] {
        &self.args
    }
}

/// `ln E exp(Σ v_j Z_{t_j})`.
pub fn joint_log_mgf_z(params: &ProcessParams, times: &[f64], v: &[f64]) -> Result<f64, MgfError> {
    if times.is_empty() || times.len() != v.len() {
        return Err(MgfError::BadQuery);
    }
    let n = times.len();
    let mut c = v[n - 1];
    let mut log_const = 0.0;
    for j in (0..n).rev() {
        let s = if j == 0 { 0.0 } else { times[j - 1] };
        let step = conditional_log_mgf_affine(params, s, times[j], c).map_err(|source| {
            MgfError::Divergent {
                step: n - j,
                time: times[j],
                source,
            }
        })?;
        log_const += step.log_scale;
        // Z_0 = 0 removes the final slope.
        c = if j == 0 { 0.0 } else { v[j - 1] + step.slope };
    }
    Ok(log_const)
}

/// `E exp(Σ u_j X_{t_j})`, exact up to rounding.
pub fn joint_mgf(query: &JointMgfQuery) -> Result<f64, MgfError> {
    joint_log_mgf(query).map(f64::exp)
}

pub fn joint_log_mgf(query: &JointMgfQuery) -> Result<f64, MgfError> {
    let params = ProcessParams::new(query.theta)?;
    let theta = query.theta;
    let mut v = Vec::with_capacity(query.times.len());
    let mut shift = 0.0;
    for (&t, &u) in query.times.iter().zip(&query.args) {
        let (a, b) = if t < 1.0 {
            (theta * (1.0 - t), -t / theta)
        } else if t == 1.0 {
            (theta, -1.0 / theta)
        } else {
            (theta * (t - 1.0), -1.0 / theta)
        };
        v.push(u * a);
        shift += u * b;
    }
    Ok(joint_log_mgf_z(&params, &query.times, &v)? + shift)
}

/// Limit of `E exp(Σ u_j Z^{(ε)}_{t_j ε²})` as `ε -> 0`: the joint MGF of a
/// unit-rate Poisson process, `Π_j exp((t_j - t_{j-1})(e^{Σ_{i>=j} u_i} - 1))`.
pub fn poisson_limit_mgf(times: &[f64], args: &[f64]) -> f64 {
    let mut log = 0.0;
    let mut prev = 0.0;
    for j in 0..times.len() {
        let tail: f64 = args[j..].iter().sum();
        log += (times[j] - prev) * tail.exp_m1();
        prev = times[j];
    }
    log.exp()
}

/// Brownian joint MGF `exp(½ Σ_k (t_k - t_{k-1}) (Σ_{j>=k} u_j)²)`.
pub fn brownian_mgf(times: &[f64], args: &[f64]) -> f64 {
    let mut log = 0.0;
    let mut prev = 0.0;
    for k in 0..times.len() {
        let tail: f64 = args[k..].iter().sum();
        log += 0.5 * (times[k] - prev) * tail * tail;
        prev = times[k];
    }
    log.exp()
}

/// Distance from the exact MGF to its limit along a parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitTrace {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    pub gaps: Vec<f64>,
}

impl LimitTrace {
    pub fn monotone(&self) -> bool {
        self.gaps
            .windows(2)
            .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
    }

    fn report(self, claim_id: String, final_tolerance: f64) -> VerificationReport {
        let final_gap = *self.gaps.last().unwrap_or(&f64::NAN);
        let monotone = self.monotone();
        let mut r = VerificationReport::compare(
            claim_id,
            Method::ClosedForm,
            vec![*self.values.last().unwrap_or(&f64::NAN)],
            vec![self.limit],
            final_tolerance,
        );
        r.pass &= monotone;
        r.diagnostics.notes.push(format!("grid = {:?}", self.grid));
        r.diagnostics.notes.push(format!("gaps = {:?}", self.gaps));
        r.diagnostics.notes.push(format!(
            "gaps strictly decreasing: {monotone}; final gap {final_gap:.3e}"
        ));
        r
    }
}

/// Poisson limit: `θ = ε`, times `t_j ε²`, arguments on `Z`. Only `u_j <= 0`
/// is covered by the limit theorem, so positive arguments are rejected.
pub fn poisson_limit_trace(
    eps_grid: &[f64],
    times: &[f64],
    args: &[f64],
) -> Result<LimitTrace, MgfError> {
    if args.iter().any(|&u| u > 0.0) || times.len() != args.len() {
        return Err(MgfError::BadQuery);
    }
    let limit = poisson_limit_mgf(times, args);
    let mut values = Vec::new();
    for &eps in eps_grid {
        let params = ProcessParams::new(eps)?;
        let scaled: Vec<f64> = times.iter().map(|t| t * eps * eps).collect();
        if !scaled.windows(2).all(|w| w[0] < w[1]) || scaled.first().is_none_or(|&t| t <= 0.0) {
            return Err(MgfError::BadQuery);
        }
        values.push(joint_log_mgf_z(&params, &scaled, args)?.exp());
    }
    let gaps = values.iter().map(|v| (v - limit).abs()).collect();
    Ok(LimitTrace {
        grid: eps_grid.to_vec(),
        values,
        limit,
        gaps,
    })
}

pub fn brownian_limit_trace(
    theta_grid: &[f64],
    times: &[f64],
    args: &[f64],
) -> Result<LimitTrace, MgfError> {
    let limit = brownian_mgf(times, args);
    let values = theta_grid
        .iter()
        .map(|&theta| joint_mgf(&JointMgfQuery::new(theta, times.to_vec(), args.to_vec())?))
        .collect::<Result<Vec<_>, _>>()?;
    let gaps = values.iter().map(|v| (v - limit).abs()).collect();
    Ok(LimitTrace {
        grid: theta_grid.to_vec(),
        values,
        limit,
        gaps,
    })
}

pub const DEFAULT_EPS_GRID: [f64; 4] = [0.3, 0.1, 0.03, 0.01];
pub const DEFAULT_THETA_GRID: [f64; 4] = [0.5, 0.2, 0.05, 0.01];
pub const LIMIT_TOLERANCE: f64 = 1e-3;

/// Named limit configurations checked by default. Poisson arguments stay
/// non-positive.
pub fn default_poisson_cases() -> Vec<(&'static str, Vec<f64>, Vec<f64>)> {
    vec![
        ("single", vec![1.0], vec![-0.5]),
        ("three_times", vec![0.5, 1.0, 2.0], vec![-0.5, -0.1, -0.5]),
        (
            "four_times",
            vec![0.25, 1.0, 2.5, 4.0],
            vec![-0.1, -0.5, -0.1, -0.5],
        ),
    ]
}

/// Brownian configurations; the times straddle `t = 1` so the recursion
/// passes through every kernel case.
pub fn default_brownian_cases() -> Vec<(&'static str, Vec<f64>, Vec<f64>)> {
    vec![
        ("single", vec![0.5], vec![0.1]),
        ("straddle", vec![0.5, 1.0, 2.0], vec![-0.5, -0.1, 0.1]),
        (
            "four_times",
            vec![0.25, 0.75, 1.5, 3.0],
            vec![0.3, -0.5, 0.1, -0.1],
        ),
    ]
}

pub fn check_poisson_limit(
    eps_grid: &[f64],
    times: &[f64],
    args: &[f64],
    name: &str,
) -> VerificationReport {
    let claim = format!("limits.poisson.{name}");
    match poisson_limit_trace(eps_grid, times, args) {
        Ok(trace) => trace.report(claim, LIMIT_TOLERANCE),
        Err(e) => {
            VerificationReport::compare(claim, Method::ClosedForm, vec![f64::NAN], vec![0.0], 0.0)
                .with_note(e.to_string())
        }
    }
}

pub fn check_brownian_limit(
    theta_grid: &[f64],
    times: &[f64],
    args: &[f64],
    name: &str,
) -> VerificationReport {
    let claim = format!("limits.brownian.{name}");
    match brownian_limit_trace(theta_grid, times, args) {
        Ok(trace) => trace.report(claim, LIMIT_TOLERANCE),
        Err(e) => {
            VerificationReport::compare(claim, Method::ClosedForm, vec![f64::NAN], vec![0.0], 0.0)
                .with_note(e.to_string())
        }
    }
}
