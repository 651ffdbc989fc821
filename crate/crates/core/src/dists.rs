//! The four laws that appear as transition probabilities of `Z`.
//!
//! | law               | parameters          | mass / density                          | `E e^{uZ}`               |
//! |-------------------|---------------------|-----------------------------------------|--------------------------|
//! | Poisson           | `λ > 0`             | `e^{-λ} λ^k / k!`                       | `exp(λ(e^u - 1))`        |
//! | Gamma             | `p > 0, σ > 0`      | `x^{p-1} e^{-x/σ} / (σ^p Γ(p))`         | `(1 - σu)^{-p}`          |
//! | Negative binomial | `r > 0, 0 < p < 1`  | `Γ(k+r)/(Γ(r) k!) p^r (1-p)^k`          | `p^r / (1-(1-p)e^u)^r`   |
//! | Binomial          | `n >= 0, 0<=p<=1`   | `C(n,k) p^k (1-p)^{n-k}`                | `(1 - p + p e^u)^n`      |
//!
//! All masses are computed in log space.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    ln_binomial_raw, ln_negative_binomial, ln_poisson, ln_poisson_raw, sum_nonnegative_series,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid {law} parameter: {detail}")]
    InvalidParameter { law: &'static str, detail: String },
    #[error("{law} takes {expected} arguments")]
    WrongSupport {
        law: &'static str,
        expected: &'static str,
    },
    #[error("argument {0} is outside the domain [0, inf)")]
    Domain(f64),
    #[error("MGF diverges: u = {u} must be below {bound}")]
    Divergent { u: f64, bound: f64 },
}

/// A value of `Z`: an integer level off `t = 1`, a real level at `t = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum State {
    Count(u64),
    Level(f64),
}

impl State {
    pub fn as_f64(self) -> f64 {
        match self {
            State::Count(k) => k as f64,
            State::Level(x) => x,
        }
    }

    pub fn count(self) -> Option<u64> {
        match self {
            State::Count(k) => Some(k),
            State::Level(_) => None,
        }
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            State::Count(k) => write!(f, "{k}"),
            State::Level(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Poisson {
    lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gamma {
    shape: f64,
    scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NegativeBinomial {
    r: f64,
    p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Binomial {
    n: u64,
    p: f64,
}

fn invalid(law: &'static str, detail: String) -> LawError {
    LawError::InvalidParameter { law, detail }
}

impl Poisson {
    pub fn new(lambda: f64) -> Result<Self, LawError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("Poisson", format!("lambda = {lambda} must be > 0")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        ln_poisson(k, self.lambda)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_poisson(self.lambda, rng)
    }
}

impl Gamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self, LawError> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(invalid("Gamma", format!("shape = {shape} must be > 0")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("Gamma", format!("scale = {scale} must be > 0")));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => -self.scale.ln(),
                _ => f64::NEG_INFINITY,
            };
        }
        // Poisson form of the density: no large cancelling terms at large shape.
        let y = x / self.scale;
        if self.shape < 1.0 {
            ln_poisson_raw(self.shape, y) + (self.shape / x).ln()
        } else {
            ln_poisson_raw(self.shape - 1.0, y) - self.scale.ln()
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Marsaglia–Tsang squeeze; exact.
        rand_distr::Gamma::new(self.shape, self.scale)
            .expect("validated gamma parameters")
            .sample(rng)
    }
}

impl NegativeBinomial {
    pub fn new(r: f64, p: f64) -> Result<Self, LawError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("NegativeBinomial", format!("r = {r} must be > 0")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(
                "NegativeBinomial",
                format!("p = {p} must lie in (0, 1)"),
            ));
        }
        Ok(Self { r, p })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        ln_negative_binomial(k, self.r, self.p, 1.0 - self.p)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        // Poisson with a Gamma(r, (1-p)/p) intensity.
        let intensity = Gamma {
            shape: self.r,
            scale: (1.0 - self.p) / self.p,
        }
        .sample(rng);
        if intensity > 0.0 {
            sample_poisson(intensity, rng)
        } else {
            0
        }
    }
}

impl Binomial {
    pub fn new(n: u64, p: f64) -> Result<Self, LawError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("Binomial", format!("p = {p} must lie in [0, 1]")));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        if k > self.n {
            return f64::NEG_INFINITY;
        }
        ln_binomial_raw(k as f64, self.n as f64, self.p, 1.0 - self.p)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.n == 0 || self.p == 0.0 {
            return 0;
        }
        if self.p == 1.0 {
            return self.n;
        }
        // Inversion on the smaller tail probability; BTPE when the mean is
        // large enough that sequential search would be slow.
        let flip = self.p > 0.5;
        let q = if flip { 1.0 - self.p } else { self.p };
        let k = if self.n as f64 * q < 30.0 {
            binomial_inversion(self.n, q, rng)
        } else {
            rand_distr::Binomial::new(self.n, q)
                .expect("validated binomial parameters")
                .sample(rng)
        };
        if flip {
            self.n - k
        } else {
            k
        }
    }
}

fn binomial_inversion<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let ratio = p / (1.0 - p);
    let mut pmf = ((n as f64) * (1.0 - p).ln()).exp();
    let mut cdf = pmf;
    let mut k = 0;
    while u > cdf && k < n {
        pmf *= ratio * (n - k) as f64 / (k + 1) as f64;
        k += 1;
        cdf += pmf;
    }
    k
}

/// Exact Poisson draw: sequential inversion for small means, the
/// transformed-rejection sampler otherwise.
pub(crate) fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda < 10.0 {
        let u: f64 = rng.random();
        let mut pmf = (-lambda).exp();
        let mut cdf = pmf;
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            pmf *= lambda / k as f64;
            cdf += pmf;
            if pmf == 0.0 && cdf < u {
                // roundoff left a gap at the far tail
                break;
            }
        }
        k
    } else {
        rand_distr::Poisson::new(lambda)
            .expect("finite positive intensity")
            .sample(rng) as u64
    }
}

/// Exponential draw by inversion of the CDF.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], so the log is finite.
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// A law over `Z≥0` or `R≥0`, the value of every kernel and bridge query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "tag")]
pub enum TransitionLaw {
    Poisson(Poisson),
    Gamma(Gamma),
    NegativeBinomial(NegativeBinomial),
    Binomial(Binomial),
}

impl TransitionLaw {
    pub fn poisson(lambda: f64) -> Result<Self, LawError> {
        Poisson::new(lambda).map(Self::Poisson)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self, LawError> {
        Gamma::new(shape, scale).map(Self::Gamma)
    }

    pub fn negative_binomial(r: f64, p: f64) -> Result<Self, LawError> {
        NegativeBinomial::new(r, p).map(Self::NegativeBinomial)
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self, LawError> {
        Binomial::new(n, p).map(Self::Binomial)
    }

    /// Point mass at zero.
    pub fn zero() -> Self {
        Self::Binomial(Binomial { n: 0, p: 0.0 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Poisson(_) => "Poisson",
            Self::Gamma(_) => "Gamma",
            Self::NegativeBinomial(_) => "NegativeBinomial",
            Self::Binomial(_) => "Binomial",
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Self::Gamma(_))
    }

    /// Log mass (discrete laws) or log density (gamma) at `value`.
    ///
    /// Returns `-inf` at points of zero mass inside the nominal support, and an
    /// error for arguments of the wrong type or outside `[0, inf)`.
    pub fn log_mass(&self, value: State) -> Result<f64, LawError> {
        match (self, value) {
            (Self::Gamma(g), State::Level(x)) => {
                if x.is_nan() || x < 0.0 {
                    return Err(LawError::Domain(x));
                }
                Ok(g.ln_pdf(x))
            }
            (Self::Gamma(_), State::Count(_)) => Err(LawError::WrongSupport {
                law: "Gamma",
                expected: "real",
            }),
            (_, State::Level(x)) => Err(if x < 0.0 {
                LawError::Domain(x)
            } else {
                LawError::WrongSupport {
                    law: self.name(),
                    expected: "integer",
                }
            }),
            (Self::Poisson(d), State::Count(k)) => Ok(d.ln_pmf(k)),
            (Self::NegativeBinomial(d), State::Count(k)) => Ok(d.ln_pmf(k)),
            (Self::Binomial(d), State::Count(k)) => Ok(d.ln_pmf(k)),
        }
    }

    /// `ln E e^{uZ}`.
    pub fn log_mgf(&self, u: f64) -> Result<f64, LawError> {
        match self {
            Self::Poisson(d) => Ok(d.lambda * u.exp_m1()),
            Self::Gamma(g) => {
                let bound = 1.0 / g.scale;
                if u >= bound {
                    return Err(LawError::Divergent { u, bound });
                }
                Ok(-g.shape * (-g.scale * u).ln_1p())
            }
            Self::NegativeBinomial(d) => {
                let bound = -(1.0 - d.p).ln();
                if u >= bound {
                    return Err(LawError::Divergent { u, bound });
                }
                // 1 - (1-p)e^u = p - (1-p)(e^u - 1)
                let q = 1.0 - d.p;
                Ok(-d.r * (-q * u.exp_m1() / d.p).ln_1p())
            }
            Self::Binomial(d) => {
                if d.n == 0 {
                    return Ok(0.0);
                }
                Ok(d.n as f64 * (d.p * u.exp_m1()).ln_1p())
            }
        }
    }

    pub fn mgf(&self, u: f64) -> Result<f64, LawError> {
        self.log_mgf(u).map(f64::exp)
    }

    /// Mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            Self::Poisson(d) => (d.lambda, d.lambda),
            Self::Gamma(g) => (g.shape * g.scale, g.shape * g.scale * g.scale),
            Self::NegativeBinomial(d) => {
                let q = 1.0 - d.p;
                (d.r * q / d.p, d.r * q / (d.p * d.p))
            }
            Self::Binomial(d) => {
                let n = d.n as f64;
                (n * d.p, n * d.p * (1.0 - d.p))
            }
        }
    }

    /// Largest mass point; the mean for the gamma law.
    pub fn mode(&self) -> f64 {
        match self {
            Self::Poisson(d) => d.lambda.floor(),
            Self::Gamma(g) => ((g.shape - 1.0) * g.scale).max(0.0),
            Self::NegativeBinomial(d) => {
                if d.r > 1.0 {
                    ((d.r - 1.0) * (1.0 - d.p) / d.p).floor()
                } else {
                    0.0
                }
            }
            Self::Binomial(d) => ((d.n as f64 + 1.0) * d.p).floor().min(d.n as f64),
        }
    }

    /// Index `K` past the mode at which the tail rule stops: the first `K`
    /// with `pmf(K) < eps * Σ_{k<=K} pmf(k)`. `None` for the gamma law.
    pub fn truncation_point(&self, eps: f64) -> Option<u64> {
        match self {
            Self::Gamma(_) => None,
            Self::Binomial(d) => Some(d.n),
            _ => {
                let s = sum_nonnegative_series(0, None, eps, |k| {
                    self.log_mass(State::Count(k)).map(f64::exp).unwrap_or(0.0)
                });
                Some(s.last_index)
            }
        }
    }

    /// Exact draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        match self {
            Self::Poisson(d) => State::Count(d.sample(rng)),
            Self::Gamma(g) => State::Level(g.sample(rng)),
            Self::NegativeBinomial(d) => State::Count(d.sample(rng)),
            Self::Binomial(d) => State::Count(d.sample(rng)),
        }
    }
}

impl std::fmt::Display for TransitionLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Poisson(d) => write!(f, "Poisson(lambda={})", d.lambda),
            Self::Gamma(g) => write!(f, "Gamma(shape={}, scale={})", g.shape, g.scale),
            Self::NegativeBinomial(d) => write!(f, "NegativeBinomial(r={}, p={})", d.r, d.p),
            Self::Binomial(d) => write!(f, "Binomial(n={}, p={})", d.n, d.p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_gamma_shaped, KahanSum};
    use crate::rng::SimRng;

    fn discrete_grid() -> Vec<TransitionLaw> {
        let mut laws = Vec::new();
        for lambda in [0.01, 0.7, 3.7, 42.0, 900.0] {
            laws.push(TransitionLaw::poisson(lambda).unwrap());
        }
        for r in [0.04, 0.25, 1.0, 2.5, 40.0, 1e4] {
            for p in [0.01, 0.3, 0.5, 0.97] {
                laws.push(TransitionLaw::negative_binomial(r, p).unwrap());
            }
        }
        for n in [0, 1, 7, 300] {
            for p in [0.0, 0.2, 0.5, 1.0] {
                laws.push(TransitionLaw::binomial(n, p).unwrap());
            }
        }
        laws
    }

    #[test]
    fn geometric_mass() {
        let nb = TransitionLaw::negative_binomial(1.0, 0.5).unwrap();
        let v = nb.log_mass(State::Count(2)).unwrap();
        assert!((v - 0.125f64.ln()).abs() < 1e-15, "{}", v - 0.125f64.ln());
    }

    #[test]
    fn degenerate_binomial() {
        let b = TransitionLaw::binomial(5, 0.0).unwrap();
        assert_eq!(b.log_mass(State::Count(0)).unwrap(), 0.0);
        assert_eq!(b.log_mass(State::Count(1)).unwrap(), f64::NEG_INFINITY);
        let b = TransitionLaw::binomial(5, 0.3).unwrap();
        assert_eq!(b.log_mass(State::Count(6)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn poisson_log_mass_matches_high_precision() {
        // mpmath, 50 digits: -3.7 + 50*ln(3.7) - ln(50!)
        let p = TransitionLaw::poisson(3.7).unwrap();
        let v = p.log_mass(State::Count(50)).unwrap();
        assert!((v - (-86.761_125_969_264_1)).abs() < 1e-12, "{v}");
        // k = 10^6 with lambda = 10^6: -1e6 + 1e6 ln 1e6 - ln((1e6)!)
        let p = TransitionLaw::poisson(1e6).unwrap();
        let v = p.log_mass(State::Count(1_000_000)).unwrap();
        assert!((v - (-7.826_693_895_520_143)).abs() < 1e-8, "{v}");
    }

    #[test]
    fn domain_errors_are_not_neg_infinity() {
        let g = TransitionLaw::gamma(2.0, 1.0).unwrap();
        assert_eq!(g.log_mass(State::Level(-1.0)), Err(LawError::Domain(-1.0)));
        let p = TransitionLaw::poisson(1.0).unwrap();
        assert!(matches!(
            p.log_mass(State::Level(-2.0)),
            Err(LawError::Domain(_))
        ));
        assert!(matches!(
            p.log_mass(State::Level(2.0)),
            Err(LawError::WrongSupport { .. })
        ));
        assert!(matches!(
            g.log_mass(State::Count(2)),
            Err(LawError::WrongSupport { .. })
        ));
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(TransitionLaw::poisson(0.0).is_err());
        assert!(TransitionLaw::gamma(-1.0, 1.0).is_err());
        assert!(TransitionLaw::gamma(1.0, 0.0).is_err());
        assert!(TransitionLaw::negative_binomial(1.0, 1.0).is_err());
        assert!(TransitionLaw::negative_binomial(0.0, 0.5).is_err());
        assert!(TransitionLaw::binomial(3, 1.5).is_err());
        assert!(TransitionLaw::poisson(f64::NAN).is_err());
    }

    #[test]
    fn mgf_closed_forms() {
        for law in discrete_grid() {
            assert!((law.mgf(0.0).unwrap() - 1.0).abs() < 1e-15);
        }
        let g = TransitionLaw::gamma(2.0, 0.5).unwrap();
        assert!((g.mgf(1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(matches!(g.mgf(2.0), Err(LawError::Divergent { bound, .. }) if bound == 2.0));
        let nb = TransitionLaw::negative_binomial(1.0, 0.5).unwrap();
        assert!(matches!(nb.mgf(0.7), Err(LawError::Divergent { .. })));
    }

    #[test]
    fn nb_mgf_matches_truncated_series() {
        let law = TransitionLaw::negative_binomial(0.25, 0.4).unwrap();
        let u = 0.3;
        let s = sum_nonnegative_series(0, None, 1e-16, |k| {
            (u * k as f64 + law.log_mass(State::Count(k)).unwrap()).exp()
        });
        let exact = law.mgf(u).unwrap();
        assert!(
            ((s.value - exact) / exact).abs() < 1e-12,
            "{} vs {exact}",
            s.value
        );
    }

    #[test]
    fn mgf_matches_series_on_grid() {
        for law in discrete_grid() {
            let bound = match law {
                TransitionLaw::NegativeBinomial(d) => -(1.0 - d.p()).ln(),
                _ => 1.0,
            };
            for frac in [-1.0, -0.3, 0.2, 0.6] {
                let u = (frac * bound).min(1.0);
                if law.log_mgf(u).unwrap().abs() > 700.0 {
                    continue;
                }
                let s = sum_nonnegative_series(0, None, 1e-17, |k| {
                    (u * k as f64 + law.log_mass(State::Count(k)).unwrap()).exp()
                });
                let exact = law.mgf(u).unwrap();
                assert!(
                    ((s.value - exact) / exact).abs() < 1e-10,
                    "{law} u={u}: {} vs {exact}",
                    s.value
                );
            }
        }
        let g = TransitionLaw::gamma(1.7, 0.8).unwrap();
        for u in [-0.5, 0.1, 0.9] {
            let q = integrate_gamma_shaped(
                |x| u * x + g.log_mass(State::Level(x)).unwrap(),
                1.7,
                1.0 / 0.8 - u,
                1e-14,
            );
            let exact = g.mgf(u).unwrap();
            assert!(
                ((q.value - exact) / exact).abs() < 1e-10,
                "u={u}: {} vs {exact} {:?}",
                q.value,
                q
            );
        }
    }

    #[test]
    fn pmf_sums_to_one_under_tail_rule() {
        for law in discrete_grid() {
            let k = law.truncation_point(1e-16).unwrap();
            let mut acc = KahanSum::default();
            for j in 0..=k {
                acc.add(law.log_mass(State::Count(j)).unwrap().exp());
            }
            assert!(acc.value() >= 1.0 - 1e-12, "{law}: {}", acc.value());
            assert!(acc.value() <= 1.0 + 1e-12, "{law}: {}", acc.value());
        }
    }

    #[test]
    fn gamma_density_integrates_to_one() {
        for (shape, scale) in [(0.25, 1.0), (1.0, 3.0), (4.0, 0.5), (1e4, 1e-4)] {
            let g = TransitionLaw::gamma(shape, scale).unwrap();
            let q = integrate_gamma_shaped(
                |x| g.log_mass(State::Level(x)).unwrap(),
                shape,
                1.0 / scale,
                1e-13,
            );
            assert!((q.value - 1.0).abs() < 1e-10, "shape {shape}: {}", q.value);
        }
    }

    #[test]
    fn log_mass_decreases_past_mode() {
        for law in discrete_grid() {
            let mode = law.mode() as u64;
            let k_end = law.truncation_point(1e-16).unwrap();
            let mut prev = law.log_mass(State::Count(mode)).unwrap();
            for k in mode + 1..=k_end.min(mode + 2000) {
                let v = law.log_mass(State::Count(k)).unwrap();
                assert!(v <= prev + 1e-12, "{law} k={k}");
                prev = v;
            }
        }
    }

    #[test]
    fn moments_closed_forms() {
        assert_eq!(TransitionLaw::poisson(5.0).unwrap().moments(), (5.0, 5.0));
        let nb = TransitionLaw::negative_binomial(1.0, 0.5)
            .unwrap()
            .moments();
        assert!((nb.0 - 1.0).abs() < 1e-15 && (nb.1 - 2.0).abs() < 1e-15);
        assert_eq!(
            TransitionLaw::binomial(10, 0.5).unwrap().moments(),
            (5.0, 2.5)
        );
    }

    #[test]
    fn moments_match_mgf_derivatives() {
        let h = 1e-5;
        for law in discrete_grid().into_iter().filter(|l| l.moments().1 < 1e6) {
            let (mean, var) = law.moments();
            let lp = law.log_mgf(h).unwrap();
            let lm = law.log_mgf(-h).unwrap();
            let d1 = (lp - lm) / (2.0 * h);
            let d2 = (lp + lm) / (h * h);
            assert!((d1 - mean).abs() <= 1e-6 * (1.0 + mean), "{law}");
            assert!(
                (d2 - var).abs() <= 1e-4 * (1.0 + var),
                "{law}: {d2} vs {var}"
            );
        }
    }

    #[test]
    fn empty_binomial_always_zero() {
        let mut rng = SimRng::new(1);
        let b = TransitionLaw::binomial(0, 0.3).unwrap();
        for _ in 0..1000 {
            assert_eq!(b.sample(&mut rng), State::Count(0));
        }
    }

    fn sample_moments(law: &TransitionLaw, n: usize, seed: u64) -> (f64, f64, f64) {
        let mut rng = SimRng::new(seed);
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng).as_f64()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        (mean, var, m4)
    }

    #[test]
    fn negative_binomial_sample_mean() {
        let law = TransitionLaw::negative_binomial(2.0, 0.25).unwrap();
        let n = 1_000_000;
        let (mean, var, _) = sample_moments(&law, n, 11);
        // r(1-p)/p = 6, variance r(1-p)/p^2 = 24
        let se = (24.0 / n as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean}");
        assert!((var - 24.0).abs() < 0.5);
    }

    #[test]
    fn exponential_tail_probability() {
        let law = TransitionLaw::gamma(1.0, 1.0).unwrap();
        let n = 1_000_000;
        let mut rng = SimRng::new(5);
        let hits = (0..n)
            .filter(|_| law.sample(&mut rng).as_f64() > 1.0)
            .count();
        let p = (-1.0f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn sample_moments_within_four_standard_errors() {
        let laws = [
            TransitionLaw::poisson(0.3).unwrap(),
            TransitionLaw::poisson(250.0).unwrap(),
            TransitionLaw::gamma(0.25, 2.0).unwrap(),
            TransitionLaw::gamma(30.0, 0.1).unwrap(),
            TransitionLaw::negative_binomial(0.25, 0.2).unwrap(),
            TransitionLaw::negative_binomial(400.0, 0.9).unwrap(),
            TransitionLaw::binomial(12, 0.3).unwrap(),
            TransitionLaw::binomial(5000, 0.8).unwrap(),
        ];
        let n = 1_000_000;
        for (i, law) in laws.iter().enumerate() {
            let (mean, var) = law.moments();
            let (m, v, m4) = sample_moments(law, n, 100 + i as u64);
            let se_mean = (var / n as f64).sqrt();
            let se_var = ((m4 - v * v) / n as f64).sqrt();
            assert!(
                (m - mean).abs() < 4.0 * se_mean,
                "{law}: mean {m} vs {mean}"
            );
            assert!((v - var).abs() < 4.0 * se_var, "{law}: var {v} vs {var}");
        }
    }

    #[test]
    fn identical_seed_identical_stream() {
        let law = TransitionLaw::negative_binomial(0.7, 0.3).unwrap();
        let mut a = SimRng::new(9);
        let mut b = SimRng::new(9);
        for _ in 0..1000 {
            assert_eq!(law.sample(&mut a), law.sample(&mut b));
        }
    }
}
