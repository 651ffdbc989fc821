//! Goodness-of-fit statistics used by the Monte Carlo checks.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::dists::{State, TransitionLaw};

/// Minimum expected count per chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl MeanEstimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let mut m = RunningMoments::default();
        x.iter().for_each(|&v| m.push(v));
        m.estimate()
    }
}

/// Welford accumulator; mergeable so that parallel chunks combine exactly
/// in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn estimate(&self) -> MeanEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            f64::NAN
        };
        MeanEstimate {
            mean: self.mean,
            se: (var / self.n as f64).sqrt(),
            n: self.n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub cells: usize,
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

/// Pearson test of observed cell counts against cell probabilities.
///
/// Adjacent cells are merged left to right until each has expected count at
/// least [`MIN_EXPECTED`]; a short final run joins the previous cell. The
/// probabilities should sum to one.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&c, &p) in observed.iter().zip(probs) {
        o += c as f64;
        e += p * nf;
        if e >= MIN_EXPECTED {
            cells.push((o, e));
            (o, e) = (0.0, 0.0);
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells: cells.len(),
    }
}

/// Chi-square test of integer draws against a discrete law. Cells are
/// `0, 1, ..., K` with the upper tail folded into `K`.
pub fn chi_square_gof_discrete(draws: &[u64], law: &TransitionLaw) -> ChiSquare {
    let k_max = law
        .truncation_point(1e-12)
        .unwrap_or(0)
        .max(draws.iter().copied().max().unwrap_or(0));
    let cells = k_max as usize + 1;
    let mut observed = vec![0u64; cells];
    for &d in draws {
        observed[d as usize] += 1;
    }
    let mut probs: Vec<f64> = (0..=k_max)
        .map(|k| law.log_mass(State::Count(k)).map(f64::exp).unwrap_or(0.0))
        .collect();
    let head: f64 = probs[..cells - 1].iter().sum();
    probs[cells - 1] = (1.0 - head).max(0.0);
    chi_square_gof(&observed, &probs)
}

/// Two-sample homogeneity test on categorical draws.
///
/// Categories whose pooled count is below `2 · MIN_EXPECTED` are folded into
/// one "other" cell; if that cell is itself too small it joins the smallest
/// retained category.
pub fn chi_square_two_sample<K: Ord + Clone>(a: &[K], b: &[K]) -> ChiSquare {
    let mut table: BTreeMap<K, (u64, u64)> = BTreeMap::new();
    for k in a {
        table.entry(k.clone()).or_default().0 += 1;
    }
    for k in b {
        table.entry(k.clone()).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    let threshold = MIN_EXPECTED * total / na.min(nb);
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut other = (0u64, 0u64);
    for &(x, y) in table.values() {
        if ((x + y) as f64) < threshold {
            other.0 += x;
            other.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if other.0 + other.1 > 0 {
        if ((other.0 + other.1) as f64) >= threshold || cells.is_empty() {
            cells.push(other);
        } else {
            let smallest = cells
                .iter_mut()
                .min_by_key(|c| c.0 + c.1)
                .expect("non-empty");
            smallest.0 += other.0;
            smallest.1 += other.1;
        }
    }
    let mut statistic = 0.0;
    for &(x, y) in &cells {
        let pooled = (x + y) as f64;
        let (ea, eb) = (pooled * na / total, pooled * nb / total);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells: cells.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF. Sorts
/// `samples` in place.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> KsTest {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let nf = n as f64;
    let mut d = 0.0_f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    KsTest {
        statistic: d,
        n,
        p_value: kolmogorov_sf(d, n),
    }
}

/// Asymptotic `P(D_n > d)` with the Stephens small-sample correction.
pub fn kolmogorov_sf(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Repetition rule for seeded Monte Carlo claims: at most `allowed` of the
/// p-values may fall at or below `alpha`.
pub fn repetition_passes(p_values: &[f64], alpha: f64, allowed: usize) -> bool {
    p_values.iter().filter(|&&p| p <= alpha).count() <= allowed
}
