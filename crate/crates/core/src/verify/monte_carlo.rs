//! Seeded Monte Carlo checks on simulated paths.
//!
//! Paths are simulated with the window `config.window` and only probed at
//! times outside it, where both simulators are exact.

use serde::Serialize;

use super::mgf::{joint_mgf, JointMgfQuery};
use super::stats::{
    chi_square_gof, chi_square_gof_discrete, chi_square_two_sample, ks_test, repetition_passes,
    RunningMoments,
};
use super::{simulate_batch, SuiteConfig};
use crate::kernel::{marginal, ProcessParams};
use crate::report::{Diagnostics, Method, VerificationReport};
use crate::rng::derive_seed;
use crate::trajectory::{
    hitting_survival, simulate_by_representation, simulate_forward, Trajectory,
};

/// Significance level of every repeated goodness-of-fit claim.
pub const ALPHA: f64 = 0.01;
/// Rejections tolerated across the repetitions of one claim.
pub const ALLOWED_REJECTIONS: usize = 1;
/// Width of the Monte Carlo acceptance band in standard errors.
pub const SE_BAND: f64 = 4.0;

/// Exact `E X_t⁴ = 3t² + (t + 4t² + t³)θ²`.
pub fn fourth_moment(theta: f64, t: f64) -> f64 {
    3.0 * t * t + (t + 4.0 * t * t + t * t * t) * theta * theta
}

/// A claim decided by `repetitions` independent goodness-of-fit tests.
pub fn repetition_report(
    claim_id: impl Into<String>,
    p_values: Vec<f64>,
    samples_per_run: u64,
    seed: u64,
    test: &str,
) -> VerificationReport {
    let pass = repetition_passes(&p_values, ALPHA, ALLOWED_REJECTIONS);
    let rejections = p_values.iter().filter(|&&p| p <= ALPHA).count();
    VerificationReport {
        claim_id: claim_id.into(),
        method: Method::MonteCarlo,
        reference: vec![ALPHA; p_values.len()],
        computed: p_values,
        tolerance: ALPHA,
        pass,
        diagnostics: Diagnostics {
            sample_size: Some(samples_per_run),
            notes: vec![
                format!("{test}; computed are p-values of seeded repetitions"),
                format!("pass iff at most {ALLOWED_REJECTIONS} p-value <= {ALPHA}; {rejections} rejected"),
            ],
            ..Diagnostics::default()
        },
        seed: Some(seed),
    }
}

fn mc_report(
    claim_id: &str,
    acc: &[RunningMoments],
    targets: Vec<f64>,
    seed: u64,
    note: String,
) -> VerificationReport {
    let est: Vec<_> = acc.iter().map(RunningMoments::estimate).collect();
    VerificationReport::within_standard_errors(
        claim_id,
        est.iter().map(|e| e.mean).collect(),
        targets,
        est.iter().map(|e| e.se).collect(),
        SE_BAND,
        est.first().map_or(0, |e| e.n),
        seed,
    )
    .with_note(note)
}

pub const MOMENT_TIMES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const COVARIANCE_PAIRS: [(usize, usize); 6] = [(0, 1), (1, 3), (0, 4), (2, 3), (3, 4), (1, 2)];
pub const MGF_ARGS: [f64; 2] = [0.2, -0.1];

/// First, second, mixed and fourth moments of `X` and one two-time MGF, all
/// from `config.moment_samples` forward paths.
pub fn check_covariance(params: &ProcessParams, config: &SuiteConfig) -> Vec<VerificationReport> {
    let seed = derive_seed(config.seed, "moments", 0);
    let sim = config.simulation(MOMENT_TIMES[4] + 1.0);
    let xs: Vec<[f64; 5]> = simulate_batch(seed, config.moment_samples, |rng| {
        let path = simulate_forward(params, &sim, rng).expect("valid config");
        MOMENT_TIMES.map(|t| path.x_at(t).expect("outside the window"))
    });
    let mut mean = [RunningMoments::default(); 5];
    let mut second = [RunningMoments::default(); 5];
    let mut fourth = [RunningMoments::default(); 5];
    let mut cross = [RunningMoments::default(); 6];
    let mut mgf = RunningMoments::default();
    for x in &xs {
        for i in 0..5 {
            mean[i].push(x[i]);
            second[i].push(x[i] * x[i]);
            fourth[i].push(x[i].powi(4));
        }
        for (c, &(i, j)) in cross.iter_mut().zip(&COVARIANCE_PAIRS) {
            c.push(x[i] * x[j]);
        }
        mgf.push((MGF_ARGS[0] * x[1] + MGF_ARGS[1] * x[3]).exp());
    }
    let theta = params.theta();
    let times = format!("t = {MOMENT_TIMES:?}, theta = {theta}");
    let mgf_exact = joint_mgf(
        &JointMgfQuery::new(
            theta,
            vec![MOMENT_TIMES[1], MOMENT_TIMES[3]],
            MGF_ARGS.to_vec(),
        )
        .expect("valid query"),
    )
    .unwrap_or(f64::NAN);
    vec![
        mc_report(
            "moments.mean",
            &mean,
            vec![0.0; 5],
            config.seed,
            format!("E X_t; {times}"),
        ),
        mc_report(
            "moments.second",
            &second,
            MOMENT_TIMES.to_vec(),
            config.seed,
            format!("E X_t^2 = t; {times}"),
        ),
        mc_report(
            "moments.covariance",
            &cross,
            COVARIANCE_PAIRS
                .iter()
                .map(|&(i, j)| MOMENT_TIMES[i].min(MOMENT_TIMES[j]))
                .collect(),
            config.seed,
            format!(
                "E X_s X_t = min(s, t) for index pairs {COVARIANCE_PAIRS:?} of {MOMENT_TIMES:?}"
            ),
        ),
        mc_report(
            "moments.fourth",
            &fourth,
            MOMENT_TIMES
                .iter()
                .map(|&t| fourth_moment(theta, t))
                .collect(),
            config.seed,
            format!("E X_t^4 = 3t^2 + (t + 4t^2 + t^3) theta^2; {times}"),
        ),
        mc_report(
            "moments.joint_mgf",
            &[mgf],
            vec![mgf_exact],
            config.seed,
            format!(
                "E exp({} X_0.5 + {} X_2) against the exact recursion",
                MGF_ARGS[0], MGF_ARGS[1]
            ),
        ),
    ]
}

pub const MARGINAL_TIMES: [f64; 4] = [0.25, 0.5, 0.75, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct PathSummary {
    z: [u64; 4],
    z1: f64,
}

fn summarize(path: &Trajectory) -> PathSummary {
    PathSummary {
        z: MARGINAL_TIMES.map(|t| {
            path.z_at(t)
                .and_then(|s| s.count())
                .expect("outside the window")
        }),
        z1: path.z1,
    }
}

/// Forward construction against the Poisson representation: joint law of
/// `(Z_0.5, Z_2)` by a two-sample test, plus each simulator's marginals
/// against the exact laws and `Z_1` against `Gamma(1/θ², 1)` by KS.
pub fn check_simulators(params: &ProcessParams, config: &SuiteConfig) -> Vec<VerificationReport> {
    let sim = config.simulation(3.0);
    let n = config.samples;
    let r0 = params.r0();
    let laws: Vec<_> = MARGINAL_TIMES
        .iter()
        .map(|&t| marginal(params, t).expect("t > 0"))
        .collect();
    let mut joint = Vec::new();
    let mut marg_f = Vec::new();
    let mut marg_r = Vec::new();
    for rep in 0..config.repetitions {
        let fwd: Vec<PathSummary> = simulate_batch(
            derive_seed(config.seed, "simulators.forward", rep),
            n,
            |rng| summarize(&simulate_forward(params, &sim, rng).expect("valid config")),
        );
        let rep_paths: Vec<PathSummary> = simulate_batch(
            derive_seed(config.seed, "simulators.representation", rep),
            n,
            |rng| summarize(&simulate_by_representation(params, &sim, rng).expect("valid config")),
        );
        let key = |p: &PathSummary| (p.z[1], p.z[3]);
        let a: Vec<_> = fwd.iter().map(key).collect();
        let b: Vec<_> = rep_paths.iter().map(key).collect();
        joint.push(chi_square_two_sample(&a, &b).p_value);
        let marginal_p = |paths: &[PathSummary]| {
            let mut p: Vec<f64> = laws
                .iter()
                .enumerate()
                .map(|(i, law)| {
                    let z: Vec<u64> = paths.iter().map(|p| p.z[i]).collect();
                    chi_square_gof_discrete(&z, law).p_value
                })
                .collect();
            let cdf = |x: f64| statrs::function::gamma::gamma_lr(r0, x.max(0.0));
            let mut z1: Vec<f64> = paths.iter().map(|p| p.z1).collect();
            p.push(ks_test(&mut z1, cdf).p_value);
            bonferroni(&p)
        };
        marg_f.push(marginal_p(&fwd));
        marg_r.push(marginal_p(&rep_paths));
    }
    let marginal_note = |who: &str| {
        let times: Vec<String> = MARGINAL_TIMES.iter().map(|t| t.to_string()).collect();
        format!(
            "{who}: chi-square of Z_t against the kernel law for t in {{{}}} and KS of Z_1 against \
             Gamma(1/theta^2, 1), Bonferroni-combined per repetition",
            times.join(", ")
        )
    };
    vec![
        repetition_report(
            "representation.two_simulator",
            joint,
            n,
            config.seed,
            "two-sample chi-square on (Z_0.5, Z_2), forward vs representation",
        ),
        repetition_report(
            "representation.forward_marginals",
            marg_f,
            n,
            config.seed,
            &marginal_note("forward"),
        ),
        repetition_report(
            "representation.poisson_marginals",
            marg_r,
            n,
            config.seed,
            &marginal_note("representation"),
        ),
    ]
}

/// `min(1, m · min p)`: a valid p-value for the intersection of `m` nulls
/// whatever their dependence.
pub fn bonferroni(p_values: &[f64]) -> f64 {
    let min = p_values.iter().copied().fold(1.0, f64::min);
    (p_values.len() as f64 * min).min(1.0)
}

/// Number of unit windows `[i/θ, (i+1)/θ)` of the stream variable per phase.
const STREAM_WINDOWS: usize = 3;
/// Paths whose expected window count `Z_1` is below this are left out of the
/// conditional checks, where Pearson residuals become heavy-tailed.
const MIN_WINDOW_MEAN: f64 = 0.5;

/// Stream counts of the representation: arrivals `a` recovered from the
/// jump times (`a = s/(θ(1-s))` for births, `1/(θ(t-1))` for deaths) and
/// counted on unit windows, each with conditional mean `Z_1`.
fn stream_counts(path: &Trajectory) -> ([u64; STREAM_WINDOWS], [u64; STREAM_WINDOWS]) {
    let mut birth = [0u64; STREAM_WINDOWS];
    let mut death = [0u64; STREAM_WINDOWS];
    for &s in &path.birth_jumps {
        let w = (s / (1.0 - s)) as usize;
        if w < STREAM_WINDOWS {
            birth[w] += 1;
        }
    }
    for &d in &path.death_jumps {
        let w = (1.0 / (d - 1.0)) as usize;
        if w < STREAM_WINDOWS {
            death[w] += 1;
        }
    }
    (birth, death)
}

/// Conditional on `Z_1`, the mapped birth and death counts are independent
/// Poisson streams of intensity `θ Z_1`; unconditionally they are negative
/// binomial and over-dispersed.
pub fn check_poisson_representation(
    params: &ProcessParams,
    config: &SuiteConfig,
) -> Vec<VerificationReport> {
    let window_limit = (1.0 - config.window) / config.window;
    assert!(
        window_limit >= STREAM_WINDOWS as f64,
        "window too wide for the stream checks"
    );
    let sim = config.simulation(3.0);
    let seed = derive_seed(config.seed, "representation.streams", 0);
    let rows: Vec<(f64, [u64; STREAM_WINDOWS], [u64; STREAM_WINDOWS])> =
        simulate_batch(seed, config.samples, |rng| {
            let path = simulate_by_representation(params, &sim, rng).expect("valid config");
            let (b, d) = stream_counts(&path);
            (path.z1, b, d)
        });
    let mut resid = [RunningMoments::default(); 2 * STREAM_WINDOWS];
    let mut disp = [RunningMoments::default(); 2 * STREAM_WINDOWS];
    let mut corr = [RunningMoments::default(); STREAM_WINDOWS];
    let mut first = RunningMoments::default();
    let mut first_sq = RunningMoments::default();
    let mut first_var = RunningMoments::default();
    for (z1, b, d) in &rows {
        first.push(b[0] as f64);
        first_sq.push((b[0] * b[0]) as f64);
        first_var.push(((b[0] as f64) - params.r0()).powi(2));
        if *z1 < MIN_WINDOW_MEAN {
            continue;
        }
        let sd = z1.sqrt();
        let rb: Vec<f64> = b.iter().map(|&c| (c as f64 - z1) / sd).collect();
        let rd: Vec<f64> = d.iter().map(|&c| (c as f64 - z1) / sd).collect();
        for i in 0..STREAM_WINDOWS {
            resid[i].push(rb[i]);
            resid[STREAM_WINDOWS + i].push(rd[i]);
            disp[i].push(rb[i] * rb[i]);
            disp[STREAM_WINDOWS + i].push(rd[i] * rd[i]);
            corr[i].push(rb[i] * rd[i]);
        }
    }
    let r0 = params.r0();
    let note = format!(
        "windows [i/theta, (i+1)/theta), i < {STREAM_WINDOWS}, birth then death; paths with Z_1 >= {MIN_WINDOW_MEAN}; theta = {}",
        params.theta()
    );
    let mean_first = first.estimate().mean;
    let dispersion = first_var.estimate().mean / r0;
    let mut over = mc_report(
        "representation.overdispersion",
        &[first, first_sq],
        vec![r0, 2.0 * r0 + r0 * r0],
        config.seed,
        format!("first birth window count is NB(1/theta^2, 1/2): E N = r0, E N^2 = 2 r0 + r0^2; sample mean {mean_first:.4}"),
    );
    over.pass &= dispersion > 1.0;
    over.diagnostics
        .notes
        .push(format!("dispersion index {dispersion:.4} must exceed 1"));
    vec![
        mc_report(
            "representation.poissonity.mean",
            &resid,
            vec![0.0; 2 * STREAM_WINDOWS],
            config.seed,
            format!("Pearson residuals (N - Z_1)/sqrt(Z_1); {note}"),
        ),
        mc_report(
            "representation.poissonity.dispersion",
            &disp,
            vec![1.0; 2 * STREAM_WINDOWS],
            config.seed,
            format!("squared Pearson residuals; {note}"),
        ),
        mc_report(
            "representation.independence",
            &corr,
            vec![0.0; STREAM_WINDOWS],
            config.seed,
            format!("products of birth and death residuals on matching windows; {note}"),
        ),
        over,
    ]
}

pub const SURVIVAL_TIMES: [f64; 3] = [2.0, 5.0, 10.0];

/// Empirical `P(Δ_0 > t)` against `1 - (1 - 1/t)^{1/θ²}`, and every path
/// reaching level 0.
pub fn check_hitting_time(params: &ProcessParams, config: &SuiteConfig) -> Vec<VerificationReport> {
    let seed = derive_seed(config.seed, "hitting.survival", 0);
    let sim = config.simulation(SURVIVAL_TIMES[2]);
    let rows: Vec<(Option<f64>, bool)> = simulate_batch(seed, config.samples, |rng| {
        let path = simulate_forward(params, &sim, rng).expect("valid config");
        (path.death_jumps.first().copied(), path.death_truncated)
    });
    let mut surv = [RunningMoments::default(); 3];
    let mut reached = 0u64;
    for (delta0, truncated) in &rows {
        for (acc, &t) in surv.iter_mut().zip(&SURVIVAL_TIMES) {
            acc.push(f64::from(delta0.is_some_and(|d| d > t)));
        }
        reached += u64::from(!truncated);
    }
    let n = rows.len() as u64;
    let mut finite = VerificationReport::compare(
        "hitting.finite",
        Method::MonteCarlo,
        vec![reached as f64 / n as f64],
        vec![1.0],
        0.0,
    )
    .with_note("fraction of paths whose death stream was exhausted before k_max arrivals, so Δ_0 is finite and known")
    .with_seed(config.seed);
    finite.diagnostics.sample_size = Some(n);
    vec![
        mc_report(
            "hitting.survival",
            &surv,
            SURVIVAL_TIMES
                .iter()
                .map(|&t| hitting_survival(params, t))
                .collect(),
            config.seed,
            format!(
                "P(Δ_0 > t) at t = {SURVIVAL_TIMES:?}, theta = {}",
                params.theta()
            ),
        ),
        finite,
    ]
}

pub const PAIR_EDGES: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

/// `P(Γ_0 <= x, Γ_1 <= y)`, integrated from the joint jump density:
/// for `x < y` it is `1 - (1-x)^r - r (1-y)^{r+1} x/(1-x)`, and for `x >= y`
/// it reduces to `P(Γ_1 <= y) = 1 - (1-y)^r (1 + r y)`, with `r = 1/θ²`.
pub fn pair_cdf(params: &ProcessParams, x: f64, y: f64) -> f64 {
    let r = params.r0();
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    if x >= y {
        1.0 - (1.0 - y).powf(r) * (1.0 + r * y)
    } else {
        1.0 - (1.0 - x).powf(r) - r * (1.0 - y).powf(r + 1.0) * x / (1.0 - x)
    }
}

/// Cells `(i, j)`, `i <= j`, of `PAIR_EDGES × PAIR_EDGES` for `(Γ_0, Γ_1)`,
/// in row-major order, followed by the complement (`Γ_1` beyond the last edge).
pub fn pair_cell_probabilities(params: &ProcessParams) -> Vec<f64> {
    let e = &PAIR_EDGES;
    let m = e.len() - 1;
    let mut out = Vec::new();
    for i in 0..m {
        for j in i..m {
            let f = |x, y| pair_cdf(params, x, y);
            out.push(f(e[i + 1], e[j + 1]) - f(e[i], e[j + 1]) - f(e[i + 1], e[j]) + f(e[i], e[j]));
        }
    }
    let inside: f64 = out.iter().sum();
    out.push(1.0 - inside);
    out
}

/// Cell index of `(g0, g1)` in the layout of [`pair_cell_probabilities`].
pub fn pair_cell(g0: Option<f64>, g1: Option<f64>) -> usize {
    let e = &PAIR_EDGES;
    let m = e.len() - 1;
    let other = m * (m + 1) / 2;
    let (Some(a), Some(b)) = (g0, g1) else {
        return other;
    };
    if b >= e[m] {
        return other;
    }
    let bin = |v: f64| {
        e[1..]
            .iter()
            .position(|&edge| v < edge)
            .expect("below the last edge")
    };
    let (i, j) = (bin(a), bin(b));
    // rows before i hold m, m-1, ..., m-i+1 cells
    i * m - i * (i.saturating_sub(1)) / 2 + (j - i)
}

fn histogram_claim(
    params: &ProcessParams,
    config: &SuiteConfig,
    claim: &str,
    pick: impl Fn(&Trajectory) -> (Option<f64>, Option<f64>) + Sync,
    note: &str,
) -> VerificationReport {
    let sim = config.simulation(3.0);
    let probs = pair_cell_probabilities(params);
    let p_values = (0..config.repetitions)
        .map(|rep| {
            let cells: Vec<usize> = simulate_batch(
                derive_seed(config.seed, claim, rep),
                config.samples,
                |rng| {
                    let path = simulate_forward(params, &sim, rng).expect("valid config");
                    let (a, b) = pick(&path);
                    pair_cell(a, b)
                },
            );
            let mut counts = vec![0u64; probs.len()];
            cells.iter().for_each(|&c| counts[c] += 1);
            chi_square_gof(&counts, &probs).p_value
        })
        .collect();
    repetition_report(claim, p_values, config.samples, config.seed, note)
}

/// Histogram of `(Γ_0, Γ_1)` from forward paths against the joint density.
pub fn check_gamma_histogram(params: &ProcessParams, config: &SuiteConfig) -> VerificationReport {
    histogram_claim(
        params,
        config,
        "jumps.gamma_histogram",
        |p| {
            (
                p.birth_jumps.first().copied(),
                p.birth_jumps.get(1).copied(),
            )
        },
        "chi-square of (Γ_0, Γ_1) on a 0.2 grid of [0, 0.8]² against the joint jump density",
    )
}

/// Histogram of `(1/Δ_0, 1/Δ_1)` against the law of `(Γ_0, Γ_1)`.
pub fn check_inversion_histogram(
    params: &ProcessParams,
    config: &SuiteConfig,
) -> VerificationReport {
    histogram_claim(
        params,
        config,
        "inversion.delta_histogram",
        |p| {
            let inv = |j: usize| p.death_jumps.get(j).map(|d| 1.0 / d);
            (inv(0), inv(1))
        },
        "chi-square of (1/Δ_0, 1/Δ_1) on a 0.2 grid of [0, 0.8]² against the law of (Γ_0, Γ_1)",
    )
}
