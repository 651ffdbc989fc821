//! Checks decided by exact summation, quadrature or closed forms.
//!
//! Randomized configurations draw their times uniformly from `[0, 0.95]` and
//! `[1.05, 10]` and their states from the process itself (marginal, then
//! forward kernel, then bridge law), so compared masses sit where the laws
//! carry weight.

use rand::Rng;
use serde::Serialize;

use super::SuiteConfig;
use crate::bridge::{
    bridge_law, bridge_log_mass, conditional_moments, endpoint_x, harness_mean, harness_variance,
};
use crate::bridge::{BridgeCase, BridgeQuery};
use crate::dists::State;
use crate::kernel::{
    compose, forward_kernel, kernel_log_mass, marginal, CompositionCase, KernelQuery, ProcessParams,
};
use crate::numerics::integrate_adaptive;
use crate::report::{Method, VerificationReport};
use crate::rng::{derive_seed, SimRng};
use crate::trajectory::{
    delta_jump_log_density, gamma_jump_log_density, gamma_jump_log_density_from_complements,
    hitting_survival,
};

pub const BRIDGE_TOLERANCE: f64 = 1e-10;
pub const INVERSION_TOLERANCE: f64 = 1e-10;
pub const DENSITY_IDENTITY_TOLERANCE: f64 = 1e-12;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

const BIRTH_RANGE: (f64, f64) = (0.0, 0.95);
const DEATH_RANGE: (f64, f64) = (1.05, 10.0);

fn uniform(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// `n` strictly increasing draws from `range`.
fn sorted(rng: &mut SimRng, range: (f64, f64), n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| uniform(rng, range)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[0] < w[1]) {
            return v;
        }
    }
}

/// Draw of `Z_s` from its marginal (`Z_0 = 0`, a level at `s = 1`).
fn draw_marginal(params: &ProcessParams, s: f64, rng: &mut SimRng) -> State {
    marginal(params, s).expect("valid time").sample(rng)
}

/// Draw of `Z_t` given `Z_s = z`.
fn draw_forward(params: &ProcessParams, s: f64, t: f64, z: State, rng: &mut SimRng) -> State {
    let k = forward_kernel(params, &KernelQuery::new(s, t, z).expect("valid query"))
        .expect("valid kernel");
    match k.law.sample(rng) {
        State::Count(n) => State::Count(n + k.offset),
        level => level,
    }
}

fn ck_times(case: CompositionCase, rng: &mut SimRng) -> (f64, f64, f64) {
    use CompositionCase::*;
    match case {
        BirthBirth => {
            let v = sorted(rng, BIRTH_RANGE, 3);
            // a tenth of the draws start at the origin
            let s = if rng.random::<f64>() < 0.1 { 0.0 } else { v[0] };
            (s, v[1], v[2])
        }
        BirthGamma => {
            let v = sorted(rng, BIRTH_RANGE, 2);
            (v[0], v[1], 1.0)
        }
        BirthCross => {
            let v = sorted(rng, BIRTH_RANGE, 2);
            (v[0], v[1], uniform(rng, DEATH_RANGE))
        }
        GammaDeath => (uniform(rng, BIRTH_RANGE), 1.0, uniform(rng, DEATH_RANGE)),
        CrossDeath => {
            let v = sorted(rng, DEATH_RANGE, 2);
            (uniform(rng, BIRTH_RANGE), v[0], v[1])
        }
        Entrance => {
            let v = sorted(rng, DEATH_RANGE, 2);
            (1.0, v[0], v[1])
        }
        DeathDeath => {
            let v = sorted(rng, DEATH_RANGE, 3);
            (v[0], v[1], v[2])
        }
    }
}

/// Randomized Chapman–Kolmogorov suite: `config.ck_per_case` configurations
/// for each of the seven composition cases.
pub fn check_ck_suite(params: &ProcessParams, config: &SuiteConfig) -> Vec<VerificationReport> {
    CompositionCase::ALL
        .iter()
        .map(|&case| {
            let claim = format!("ck.{}", case.name());
            let mut rng = SimRng::new(derive_seed(config.seed, &claim, 0));
            let mut composed = Vec::with_capacity(config.ck_per_case);
            let mut direct = Vec::with_capacity(config.ck_per_case);
            let mut converged = true;
            let mut max_k = None::<u64>;
            let mut max_panels = None::<usize>;
            let mut errors = Vec::new();
            for _ in 0..config.ck_per_case {
                let (s, m, t) = ck_times(case, &mut rng);
                let z_s = draw_marginal(params, s, &mut rng);
                let z_t = draw_forward(params, s, t, z_s, &mut rng);
                match compose(params, s, m, t, z_s, z_t) {
                    Ok(c) => {
                        composed.push(c.composed);
                        direct.push(c.direct);
                        converged &= c.converged;
                        max_k = max_k.max(c.truncation_k);
                        max_panels = max_panels.max(c.panels);
                    }
                    Err(e) => errors.push(format!("s={s} m={m} t={t}: {e}")),
                }
            }
            // Z_1 has a density, unbounded near 0 when 1/θ² < 1; compare it in
            // units of max(1, direct), which leaves probabilities unchanged.
            let density = case == CompositionCase::BirthGamma;
            if density {
                for (c, d) in composed.iter_mut().zip(direct.iter_mut()) {
                    let scale = d.abs().max(1.0);
                    *c /= scale;
                    *d /= scale;
                }
            }
            let mut r = VerificationReport::compare(
                claim,
                Method::ExactSum,
                composed,
                direct,
                params.tolerances().check,
            );
            if density {
                r.diagnostics
                    .notes
                    .push("density values, both sides divided by max(1, |direct|)".into());
            }
            if max_panels.is_some() {
                r.method = Method::Quadrature;
            }
            r.pass &= converged && errors.is_empty();
            r.diagnostics.truncation_k = max_k;
            r.diagnostics.quadrature_panels = max_panels;
            r.diagnostics.sample_size = Some(config.ck_per_case as u64);
            r.diagnostics
                .notes
                .push(format!("theta = {}", params.theta()));
            r.diagnostics.notes.extend(errors);
            r.with_seed(config.seed)
        })
        .collect()
}

/// A bridge query together with an interior state drawn from its law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RandomBridgeQuery {
    pub case: BridgeCase,
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub z_s: u64,
    pub z_t: u64,
    pub z_u: u64,
}

impl RandomBridgeQuery {
    pub fn query(&self) -> BridgeQuery {
        BridgeQuery::new(
            self.s,
            self.t,
            self.u,
            State::Count(self.z_s),
            State::Count(self.z_u),
        )
        .expect("generated queries are valid")
    }
}

/// `config.bridge_per_case` queries for each of the four bridge cases.
pub fn random_bridge_queries(
    params: &ProcessParams,
    config: &SuiteConfig,
) -> Vec<RandomBridgeQuery> {
    let mut out = Vec::new();
    let birth = (0.02, BIRTH_RANGE.1);
    for case in BridgeCase::ALL {
        let mut rng = SimRng::new(derive_seed(config.seed, case.name(), 1));
        for _ in 0..config.bridge_per_case {
            let (s, t, u) = match case {
                BridgeCase::BirthBirth => {
                    let v = sorted(&mut rng, birth, 3);
                    (v[0], v[1], v[2])
                }
                BridgeCase::BirthCross => {
                    let v = sorted(&mut rng, birth, 2);
                    (v[0], v[1], uniform(&mut rng, DEATH_RANGE))
                }
                BridgeCase::CrossDeath => {
                    let v = sorted(&mut rng, DEATH_RANGE, 2);
                    (uniform(&mut rng, birth), v[0], v[1])
                }
                BridgeCase::DeathDeath => {
                    let v = sorted(&mut rng, DEATH_RANGE, 3);
                    (v[0], v[1], v[2])
                }
            };
            let z_s = draw_marginal(params, s, &mut rng);
            let z_u = draw_forward(params, s, u, z_s, &mut rng);
            let (z_s, z_u) = (z_s.count().expect("s != 1"), z_u.count().expect("u != 1"));
            let q = BridgeQuery::new(s, t, u, State::Count(z_s), State::Count(z_u))
                .expect("valid query");
            let b = bridge_law(params, &q).expect("valid law");
            let z_t = b.offset + b.law.sample(&mut rng).count().expect("discrete law");
            out.push(RandomBridgeQuery {
                case,
                s,
                t,
                u,
                z_s,
                z_t,
                z_u,
            });
        }
    }
    out
}

/// `ln P(Z_s→Z_t) + ln P(Z_t→Z_u) - ln P(Z_s→Z_u)`.
pub fn bayes_bridge_log_mass(params: &ProcessParams, q: &RandomBridgeQuery) -> f64 {
    let c = State::Count;
    let lm = |a, b, x, y| kernel_log_mass(params, a, b, c(x), c(y)).expect("valid kernel");
    lm(q.s, q.t, q.z_s, q.z_t) + lm(q.t, q.u, q.z_t, q.z_u) - lm(q.s, q.u, q.z_s, q.z_u)
}

/// Bridge laws against the Bayes composition of forward kernels, one report
/// per case, compared on log masses.
pub fn check_bridge_bayes(
    params: &ProcessParams,
    queries: &[RandomBridgeQuery],
    seed: u64,
) -> Vec<VerificationReport> {
    BridgeCase::ALL
        .iter()
        .map(|&case| {
            let (computed, reference): (Vec<f64>, Vec<f64>) = queries
                .iter()
                .filter(|q| q.case == case)
                .map(|q| {
                    let direct = bridge_log_mass(params, &q.query(), q.z_t).expect("valid query");
                    (direct, bayes_bridge_log_mass(params, q))
                })
                .unzip();
            let n = computed.len() as u64;
            let mut r = VerificationReport::compare(
                format!("bridge.bayes.{}", case.name()),
                Method::ClosedForm,
                computed,
                reference,
                BRIDGE_TOLERANCE,
            )
            .with_note("log masses; reference is kernel(s,t) kernel(t,u) / kernel(s,u)")
            .with_note(format!("theta = {}", params.theta()))
            .with_seed(seed);
            r.diagnostics.sample_size = Some(n);
            r
        })
        .collect()
}

/// Bridge-law moments of `X_t` against the harness mean and the quadratic
/// conditional variance. Both sides are divided by `max(1, |reference|)`.
pub fn check_harness(
    params: &ProcessParams,
    queries: &[RandomBridgeQuery],
    seed: u64,
) -> Vec<VerificationReport> {
    let theta = params.theta();
    let mut mean = (Vec::new(), Vec::new());
    let mut var = (Vec::new(), Vec::new());
    for q in queries {
        let bq = q.query();
        let (m, v) = conditional_moments(params, &bq).expect("valid query");
        let (xs, xu) = endpoint_x(params, &bq);
        let m_ref = harness_mean(q.s, q.t, q.u, xs, xu);
        let v_ref = harness_variance(theta, q.s, q.t, q.u, xs, xu);
        let scale_m = m_ref.abs().max(1.0);
        let scale_v = v_ref.abs().max(1.0);
        mean.0.push(m / scale_m);
        mean.1.push(m_ref / scale_m);
        var.0.push(v / scale_v);
        var.1.push(v_ref / scale_v);
    }
    let n = queries.len() as u64;
    [("harness.mean", mean), ("harness.variance", var)]
        .into_iter()
        .map(|(id, (c, r))| {
            let mut rep =
                VerificationReport::compare(id, Method::ClosedForm, c, r, BRIDGE_TOLERANCE)
                    .with_note("values scaled by max(1, |reference|)")
                    .with_note(format!("theta = {theta}"))
                    .with_seed(seed);
            rep.diagnostics.sample_size = Some(n);
            rep
        })
        .collect()
}

/// Exact parts of the time-inversion identity `(t X_{1/t}) ≍ (X_t)`.
///
/// Under inversion `Z_t` and `Z_{1/t}` are identified, so (i) the marginals
/// at `t` and `1/t` agree and (ii) the kernel `a -> b` equals the Bayes
/// reversal of the kernel `1/b -> 1/a`. (iii) The jump-time densities satisfy
/// `f_Δ(t) = f_Γ(1/t) Π t_i^{-2}`.
pub fn check_inversion_exact(
    params: &ProcessParams,
    config: &SuiteConfig,
) -> Vec<VerificationReport> {
    let n = config.inversion_queries;
    let c = State::Count;
    let mut rng = SimRng::new(derive_seed(config.seed, "inversion.exact", 0));
    let draw_time = |rng: &mut SimRng| -> f64 {
        loop {
            // log-uniform on [1/20, 20]
            let t = (20f64.ln() * (2.0 * rng.random::<f64>() - 1.0)).exp();
            if t != 1.0 {
                return t;
            }
        }
    };

    let mut marg = (Vec::new(), Vec::new());
    for _ in 0..n {
        let t = draw_time(&mut rng);
        let k = draw_marginal(params, t, &mut rng);
        marg.0.push(
            marginal(params, t)
                .expect("t > 0")
                .log_mass(k)
                .expect("count"),
        );
        marg.1.push(
            marginal(params, 1.0 / t)
                .expect("t > 0")
                .log_mass(k)
                .expect("count"),
        );
    }

    let mut rev = (Vec::new(), Vec::new());
    let mut configs = vec![(0.3, 0.6, 1, 3)];
    while configs.len() < n.max(1) {
        let (a, b) = (draw_time(&mut rng), draw_time(&mut rng));
        if a == b {
            continue;
        }
        let (a, b) = (a.min(b), a.max(b));
        let z = draw_marginal(params, a, &mut rng).count().expect("a != 1");
        let z2 = draw_forward(params, a, b, c(z), &mut rng)
            .count()
            .expect("b != 1");
        configs.push((a, b, z, z2));
    }
    for &(a, b, z, z2) in configs.iter().take(n.max(1)) {
        let lm = |s, t, x, y| kernel_log_mass(params, s, t, c(x), c(y)).expect("valid kernel");
        let mlm = |t: f64, x| {
            marginal(params, t)
                .expect("t > 0")
                .log_mass(c(x))
                .expect("count")
        };
        rev.0.push(lm(a, b, z, z2));
        rev.1
            .push(lm(1.0 / b, 1.0 / a, z2, z) + mlm(1.0 / b, z2) - mlm(1.0 / a, z));
    }

    let mut dens = (Vec::new(), Vec::new());
    for i in 0..n {
        let k = i % 4;
        let s = sorted(&mut rng, (0.01, 0.99), k + 1);
        let t: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
        dens.0
            .push(delta_jump_log_density(params, &t).expect("ordered"));
        dens.1.push(
            gamma_jump_log_density(params, &s).expect("ordered")
                - 2.0 * t.iter().map(|x| x.ln()).sum::<f64>(),
        );
    }

    let theta_note = format!("theta = {}", params.theta());
    vec![
        VerificationReport::compare(
            "inversion.density",
            Method::ClosedForm,
            dens.0,
            dens.1,
            DENSITY_IDENTITY_TOLERANCE,
        )
        .with_note("log f_delta(t) vs log f_gamma(1/t) - 2 sum ln t_i, k = 0..3"),
        VerificationReport::compare(
            "inversion.marginal",
            Method::ClosedForm,
            marg.0,
            marg.1,
            INVERSION_TOLERANCE,
        )
        .with_note("log P(Z_t = k) vs log P(Z_{1/t} = k)"),
        VerificationReport::compare(
            "inversion.reversed_kernel",
            Method::ClosedForm,
            rev.0,
            rev.1,
            INVERSION_TOLERANCE,
        )
        .with_note("log P(Z_b = z' | Z_a = z) vs Bayes reversal of 1/b -> 1/a"),
    ]
    .into_iter()
    .map(|mut r| {
        r.diagnostics.sample_size = Some(r.computed.len() as u64);
        r.with_note(theta_note.clone()).with_seed(config.seed)
    })
    .collect()
}

/// `∫_1^{e^k} P(Δ_0 > t) dt`, computed in `w = ln t` with `w = y^4` near 0.
pub fn hitting_partial_integral(params: &ProcessParams, k: f64) -> f64 {
    let f = |w: f64| w.exp() * hitting_survival(params, w.exp());
    let head = integrate_adaptive(
        |y: f64| 4.0 * y.powi(3) * f(y.powi(4)),
        0.0,
        1.0_f64.min(k).powf(0.25),
        1e-12,
    );
    if k <= 1.0 {
        return head.value;
    }
    head.value + integrate_adaptive(f, 1.0, k, 1e-10).value
}

/// `∫_1^{e^k} P(Δ_0 > t) dt > 0.9 · min(1, 1/θ²) · k` for `k = 2..8`: the
/// hitting time is finite but has infinite mean.
pub fn check_hitting_divergence(params: &ProcessParams) -> VerificationReport {
    let ks: Vec<f64> = (2..=8).map(f64::from).collect();
    let computed: Vec<f64> = ks
        .iter()
        .map(|&k| hitting_partial_integral(params, k))
        .collect();
    let slope = 0.9 * params.r0().min(1.0);
    let reference: Vec<f64> = ks.iter().map(|k| slope * k).collect();
    let pass = computed.iter().zip(&reference).all(|(c, r)| c > r)
        && computed.windows(2).all(|w| w[1] > w[0]);
    let mut r = VerificationReport::compare(
        "hitting.divergence",
        Method::Quadrature,
        computed,
        reference,
        f64::INFINITY,
    );
    r.tolerance = 0.0;
    r.pass = pass;
    r.with_note("pass iff each partial integral exceeds its reference and the sequence increases")
        .with_note("k = 2..8, reference 0.9 min(1, 1/theta^2) k")
        .with_note(format!("theta = {}", params.theta()))
}

/// Total mass of the joint density of `(Γ_0)` and of `(Γ_0, Γ_1)`.
///
/// Substituting `1 - s_0 = x^8` and `1 - s_1 = (1 - s_0) y^8` removes the
/// endpoint singularities at `s = 1` for `θ <= 2√2`.
pub fn jump_density_mass(params: &ProcessParams, k: usize) -> f64 {
    match k {
        0 => {
            integrate_adaptive(
                |x: f64| {
                    let c0 = x.powi(8);
                    gamma_jump_log_density_from_complements(params, &[c0]).exp() * 8.0 * x.powi(7)
                },
                0.0,
                1.0,
                1e-12,
            )
            .value
        }
        1 => {
            integrate_adaptive(
                |x: f64| {
                    let c0 = x.powi(8);
                    let inner = integrate_adaptive(
                        |y: f64| {
                            let c1 = c0 * y.powi(8);
                            gamma_jump_log_density_from_complements(params, &[c0, c1]).exp()
                                * 8.0
                                * c0
                                * y.powi(7)
                        },
                        0.0,
                        1.0,
                        1e-12,
                    );
                    inner.value * 8.0 * x.powi(7)
                },
                0.0,
                1.0,
                1e-10,
            )
            .value
        }
        _ => panic!("only k = 0 and k = 1 are integrated"),
    }
}

pub fn check_jump_normalization(params: &ProcessParams) -> Vec<VerificationReport> {
    (0..2)
        .map(|k| {
            VerificationReport::compare(
                format!("jumps.normalization.k{k}"),
                Method::Quadrature,
                vec![jump_density_mass(params, k)],
                vec![1.0],
                NORMALIZATION_TOLERANCE,
            )
            .with_note(format!("theta = {}", params.theta()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(theta: f64) -> (ProcessParams, SuiteConfig) {
        let config = SuiteConfig {
            theta,
            seed: 7,
            ck_per_case: 12,
            bridge_per_case: 25,
            inversion_queries: 30,
            ..SuiteConfig::default()
        };
        (config.params().unwrap(), config)
    }

    #[test]
    fn ck_suite_passes_on_small_draws() {
        for theta in [0.5, 1.0, 2.0] {
            let (params, config) = small(theta);
            for r in check_ck_suite(&params, &config) {
                assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
                assert_eq!(r.computed.len(), 12);
            }
        }
    }

    #[test]
    fn ck_times_fall_in_their_case() {
        let mut rng = SimRng::new(1);
        for case in CompositionCase::ALL {
            for _ in 0..200 {
                let (s, m, t) = ck_times(case, &mut rng);
                assert_eq!(CompositionCase::classify(s, m, t), Some(case));
            }
        }
    }

    #[test]
    fn bridge_checks_pass() {
        for theta in [0.5, 1.3] {
            let (params, config) = small(theta);
            let qs = random_bridge_queries(&params, &config);
            assert_eq!(qs.len(), 100);
            for q in &qs {
                assert_eq!(q.query().case(), q.case);
            }
            for r in check_bridge_bayes(&params, &qs, 7)
                .into_iter()
                .chain(check_harness(&params, &qs, 7))
            {
                assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
            }
        }
    }

    #[test]
    fn inversion_identities_pass() {
        for theta in [0.5, 1.0, 2.0] {
            let (params, config) = small(theta);
            for r in check_inversion_exact(&params, &config) {
                assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
                assert_eq!(r.computed.len(), 30);
            }
        }
    }

    #[test]
    fn partial_integral_is_log_at_theta_one() {
        let params = ProcessParams::new(1.0).unwrap();
        for k in [0.5, 2.0, 8.0] {
            assert!((hitting_partial_integral(&params, k) - k).abs() < 1e-9);
        }
        for theta in [0.5, 1.0, 2.0] {
            assert!(check_hitting_divergence(&ProcessParams::new(theta).unwrap()).pass);
        }
    }

    #[test]
    fn jump_densities_are_normalized() {
        for theta in [0.5, 1.0, 2.0] {
            let params = ProcessParams::new(theta).unwrap();
            for k in 0..2 {
                let m = jump_density_mass(&params, k);
                assert!((m - 1.0).abs() < 1e-8, "theta {theta} k {k}: {m}");
            }
        }
    }
}
