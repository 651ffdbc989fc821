//! Small numerical toolkit: log-gamma, positive series with adaptive
//! truncation, and composite Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `ln C(n, k)`, assuming `k <= n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln Γ(n+1) - (n + 1/2) ln n + n - ln √(2π)`, the Stirling remainder,
/// to a few ulps absolute for `n > 0`.
fn stirlerr(n: f64) -> f64 {
    // Stirling series B_2k / (2k (2k-1)); ten terms are below 2e-16 at n >= 7.
    const B: [f64; 10] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
        43_867.0 / 244_188.0,
        -174_611.0 / 125_400.0,
    ];
    if n >= 7.0 {
        let inv2 = 1.0 / (n * n);
        return B.iter().rev().fold(0.0, |acc, &b| acc * inv2 + b) / n;
    }
    // stirlerr(n) = stirlerr(n+1) + (n + 1/2) ln(1 + 1/n) - 1
    let steps = (7.0 - n).ceil() as u32;
    let mut acc = stirlerr(n + steps as f64);
    for j in (0..steps).rev() {
        let m = n + j as f64;
        acc += (m + 0.5) * (1.0 / m).ln_1p() - 1.0;
    }
    acc
}

/// `x ln(x/m) + m - x`, accurate when `x ≈ m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}

/// Log binomial mass `ln C(n, x) p^x q^(n-x)` for real `0 <= x <= n`, with
/// `q = 1 - p` passed separately to keep its precision. Saddle-point form
/// (Loader), free of the cancellation in `ln Γ` differences.
pub(crate) fn ln_binomial_raw(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if x == 0.0 {
        return if p < 0.1 {
            n * (-p).ln_1p()
        } else {
            n * q.ln()
        };
    }
    if x == n {
        return if q < 0.1 {
            n * (-q).ln_1p()
        } else {
            n * p.ln()
        };
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    lc - 0.5 * ((2.0 * std::f64::consts::PI).ln() + x.ln() + (-x / n).ln_1p())
}

/// Log Poisson mass, saddle-point form.
pub(crate) fn ln_poisson(k: u64, lambda: f64) -> f64 {
    ln_poisson_raw(k as f64, lambda)
}

/// `ln(λ^x e^{-λ} / Γ(x+1))` for real `x >= 0`.
pub(crate) fn ln_poisson_raw(x: f64, lambda: f64) -> f64 {
    if x == 0.0 {
        return -lambda;
    }
    -stirlerr(x) - bd0(x, lambda) - 0.5 * (2.0 * std::f64::consts::PI * x).ln()
}

/// Log negative binomial mass `Γ(k+r)/(Γ(r) k!) p^r q^k`, `q = 1 - p`.
pub(crate) fn ln_negative_binomial(k: u64, r: f64, p: f64, q: f64) -> f64 {
    let x = k as f64;
    if k == 0 {
        return if p == 1.0 { 0.0 } else { r * p.ln() };
    }
    (r / (r + x)).ln() + ln_binomial_raw(r, x + r, p, q)
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Result of summing a non-negative series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// Index of the last term included.
    pub last_index: u64,
    pub converged: bool,
}

const MAX_SERIES_TERMS: u64 = 50_000_000;

/// Sums `term(k)` for `k = start, start+1, ...` up to `end` (inclusive) if
/// given.
///
/// Open-ended sums stop at the first index past the largest term where
/// `term(k) < eps * partial_sum`. All summands here have sub-exponential
/// tails, so the neglected remainder is of order `eps` relative.
pub fn sum_nonnegative_series<F>(start: u64, end: Option<u64>, eps: f64, mut term: F) -> SeriesSum
where
    F: FnMut(u64) -> f64,
{
    let mut acc = KahanSum::default();
    let mut peak = 0.0_f64;
    let mut k = start;
    loop {
        let t = term(k);
        debug_assert!(t >= 0.0 || t.is_nan(), "negative series term {t}");
        acc.add(t);
        let past_peak = t < peak;
        peak = peak.max(t);
        if end == Some(k) {
            return SeriesSum {
                value: acc.value(),
                last_index: k,
                converged: true,
            };
        }
        if past_peak && t <= eps * acc.value() {
            return SeriesSum {
                value: acc.value(),
                last_index: k,
                converged: true,
            };
        }
        if k - start >= MAX_SERIES_TERMS {
            return SeriesSum {
                value: acc.value(),
                last_index: k,
                converged: false,
            };
        }
        k += 1;
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights of order `n`, computed by Newton iteration on the
    /// Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Single-panel rule on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = KahanSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    /// Composite rule with `panels` equal panels.
    pub fn integrate_composite<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = KahanSum::default();
        for i in 0..panels {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            acc.add(self.integrate(f, lo, hi));
        }
        acc.value()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub panels: usize,
    pub converged: bool,
}

const QUAD_ORDER: usize = 20;
const MAX_PANELS: usize = 1 << 14;
const MAX_DEPTH: u32 = 60;
// Panels below this depth are always split, so a narrow peak cannot slip
// between the nodes of a coarse panel.
const MIN_DEPTH: u32 = 4;

/// Gauss–Legendre with local bisection: a panel is accepted once it agrees
/// with the sum of its two halves to within its share of `tol`, so endpoint
/// singularities get refined without refining the whole range.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    let rule = GaussLegendre::new(QUAD_ORDER);
    let width = b - a;
    let mut acc = KahanSum::default();
    let mut panels = 0;
    let mut converged = true;
    let mut stack = vec![(a, b, rule.integrate(&f, a, b), 0u32)];
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        let share = tol * ((hi - lo) / width).max(1e-3 / MAX_PANELS as f64);
        // a tolerance below rounding of the panel itself can never be met
        let floor = 16.0 * f64::EPSILON * (left.abs() + right.abs());
        let settled = depth >= MIN_DEPTH && (whole - (left + right)).abs() <= share.max(floor);
        if settled || !(whole - (left + right)).is_finite() {
            acc.add(left + right);
            panels += 2;
        } else if depth >= MAX_DEPTH || panels + stack.len() >= MAX_PANELS {
            acc.add(left + right);
            panels += 2;
            converged = false;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Quadrature {
        value: acc.value(),
        panels,
        converged,
    }
}

/// Integral of the gamma-shaped function `C x^(a-1) e^(-b x) g(x)` over
/// `(0, ∞)`, where `log_f(x)` returns the full log integrand.
///
/// The range is cut where a gamma(a, 1/b) law has negligible mass. For
/// `a < 1` the substitution `y = x^a` removes the singularity at zero.
pub fn integrate_gamma_shaped<F: Fn(f64) -> f64>(log_f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    let sd = a.sqrt() / b;
    let mean = a / b;
    let upper = mean + 40.0 * sd + 40.0 / b;
    if a < 1.0 {
        // x = y^(1/a), dx = (1/a) y^(1/a - 1) dy
        let inv = 1.0 / a;
        integrate_adaptive(
            // Gauss nodes never touch y = 0.
            |y: f64| {
                let x = y.powf(inv);
                (log_f(x) + (inv - 1.0) * y.ln()).exp() * inv
            },
            0.0,
            upper.powf(a),
            tol,
        )
    } else {
        let lower = (mean - 40.0 * sd).max(0.0);
        integrate_adaptive(|x: f64| (log_f(x)).exp(), lower, upper, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(5);
        // degree 9 is exact for 5 nodes
        let v = rule.integrate(&|x: f64| x.powi(9) + x.powi(8), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
        let w: f64 = GaussLegendre::new(20).weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_integral_of_exponential() {
        let q = integrate_adaptive(|x: f64| (-x).exp(), 0.0, 30.0, 1e-13);
        assert!(q.converged);
        assert!((q.value - (1.0 - (-30.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn stirling_remainder_matches_mpmath() {
        // mpmath, 50 digits: loggamma(n+1) - (n+1/2) ln n + n - ln sqrt(2 pi)
        for (n, v) in [
            (0.25, 0.27251040121343206),
            (1.0, 0.08106146679532726),
            (2.5, 0.03316287351993629),
            (6.999, 0.011898407430431262),
            (7.0, 0.01189670994589177),
            (30.0, 0.0027776749297526936),
        ] {
            assert!(
                (stirlerr(n) - v).abs() < 1e-15,
                "n={n}: {} vs {v}",
                stirlerr(n)
            );
        }
    }

    #[test]
    fn gamma_shaped_small_shape() {
        // ∫ x^(a-1) e^(-x) dx = Γ(a)
        for a in [0.25, 0.5, 0.9, 1.0, 3.5, 250.0] {
            let q = integrate_gamma_shaped(
                |x: f64| (a - 1.0) * x.ln() - x - ln_gamma(a),
                a,
                1.0,
                1e-12,
            );
            assert!(q.converged, "a={a}");
            assert!((q.value - 1.0).abs() < 1e-10, "a={a} got {}", q.value);
        }
    }

    #[test]
    fn geometric_series_truncation() {
        let s = sum_nonnegative_series(0, None, 1e-16, |k| 0.5f64.powi(k as i32 + 1));
        assert!(s.converged);
        assert!((s.value - 1.0).abs() < 1e-15);
        let finite = sum_nonnegative_series(2, Some(4), 1e-16, |k| k as f64);
        assert_eq!(finite.value, 9.0);
        assert_eq!(finite.last_index, 4);
    }

    #[test]
    fn series_waits_for_the_mode() {
        // Poisson(30) pmf: the first terms are tiny but rising.
        let lam: f64 = 30.0;
        let s = sum_nonnegative_series(0, None, 1e-16, |k| {
            (-lam + k as f64 * lam.ln() - ln_factorial(k)).exp()
        });
        assert!((s.value - 1.0).abs() < 1e-13);
        assert!(s.last_index > 60);
    }
}
