//! Small statistics toolkit for the Monte Carlo estimators: moment summaries
//! with standard errors, Kolmogorov–Smirnov tests, and binomial intervals.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Mergeable first-to-fourth power sums of a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.n += 1;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2 * x;
        self.s4 += x2 * x2;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    pub fn mean(&self) -> f64 {
        self.s1 / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        ((self.s2 - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    fn central4(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        let (e1, e2, e3, e4) = (m, self.s2 / n, self.s3 / n, self.s4 / n);
        e4 - 4.0 * e3 * e1 + 6.0 * e2 * e1 * e1 - 3.0 * e1.powi(4)
    }

    /// Standard error of the sample variance, `sqrt((mu4 - s^4) / n)`,
    /// using the empirical fourth central moment.
    pub fn variance_std_error(&self) -> f64 {
        let s2 = self.variance();
        ((self.central4() - s2 * s2).max(0.0) / self.n as f64).sqrt()
    }
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.value - target).abs() <= n_se * self.se
    }
}

/// Binomial proportion with a two-sided Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, confidence: f64) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        let z = normal_quantile(0.5 + confidence / 2.0);
        let z2 = z * z;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Proportion {
            successes,
            trials,
            estimate: p,
            ci_lo: (centre - half).max(0.0),
            ci_hi: (centre + half).min(1.0),
        }
    }

    pub fn disjoint_above(&self, other: &Proportion) -> bool {
        self.ci_lo > other.ci_hi
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided z for `k` simultaneous intervals at family confidence `confidence`.
pub fn bonferroni_z(confidence: f64, k: usize) -> f64 {
    normal_quantile(1.0 - (1.0 - confidence) / (2.0 * k.max(1) as f64))
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n_eff: f64,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Asymptotic Kolmogorov tail with Stephens' finite-sample correction.
pub fn kolmogorov_pvalue(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lam * lam).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Critical value of the one-sample KS statistic at level `alpha` (asymptotic).
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c / (n as f64).sqrt()
}

/// One-sample KS test of `xs` against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    KsResult {
        statistic: d,
        p_value: kolmogorov_pvalue(d, n),
        n_eff: n,
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    KsResult {
        statistic: d,
        p_value: kolmogorov_pvalue(d, n_eff),
        n_eff,
    }
}

/// Weighted least-squares line `y = a + b x`; returns `(a, b)`.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        sxy += wi * (xi - xm) * (yi - ym);
        sxx += wi * (xi - xm) * (xi - xm);
    }
    let b = sxy / sxx;
    (ym - b * xm, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments_of_small_sample() {
        let m = Moments::from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean(), 2.5);
        assert_abs_diff_eq!(m.variance(), 5.0 / 3.0, epsilon = 1e-14);
        let mut a = Moments::from_slice(&[1.0, 2.0]);
        a.merge(&Moments::from_slice(&[3.0, 4.0]));
        assert_eq!(a, m);
    }

    #[test]
    fn kolmogorov_tail_known_values() {
        // lambda ~ 1.358 is the classical 5% point, 1.628 the 1% point
        let n: f64 = 1e9;
        assert_abs_diff_eq!(kolmogorov_pvalue(1.3581 / n.sqrt(), n), 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(kolmogorov_pvalue(1.6276 / n.sqrt(), n), 0.01, epsilon = 2e-4);
        assert_abs_diff_eq!(ks_critical_value(10_000, 0.01), 0.016276, epsilon = 1e-5);
    }

    #[test]
    fn ks_detects_shift() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).passes(0.5));
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.1).collect();
        assert!(!ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).passes(0.01));
        assert!(!ks_two_sample(&xs, &shifted).passes(0.01));
        assert_eq!(ks_two_sample(&xs, &xs).statistic, 0.0);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let p = Proportion::new(30, 100, 0.95);
        assert!(p.ci_lo < 0.3 && p.ci_hi > 0.3);
        assert_abs_diff_eq!(p.ci_lo, 0.2189, epsilon = 1e-3);
        let zero = Proportion::new(0, 1000, 0.95);
        assert_eq!(zero.ci_lo, 0.0);
        assert!(zero.ci_hi < 0.005);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (a, b) = weighted_line_fit(&x, &y, &[1.0; 10]);
        assert_abs_diff_eq!(a, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -0.5, epsilon = 1e-12);
    }
}
