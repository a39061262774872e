//! Monte Carlo accumulators and goodness-of-fit statistics.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate: sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// `(mean - target) / stderr`; infinite when the error is zero but the
    /// mean misses the target.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { mean: self.mean * factor, stderr: self.stderr * factor.abs(), ..*self }
    }
}

/// Streaming mean and variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan's pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self, seed: u64) -> MCEstimate {
        let stderr = if self.n == 0 { 0.0 } else { (self.variance() / self.n as f64).sqrt() };
        MCEstimate { mean: self.mean, stderr, n: self.n, seed }
    }

    pub fn merge_all<'a>(parts: impl IntoIterator<Item = &'a Moments>) -> Moments {
        let mut total = Moments::default();
        for p in parts {
            total.merge(p);
        }
        total
    }
}

/// Self-normalized importance-sampling accumulator for `Σ w f / Σ w`.
///
/// The standard error is the delta-method value
/// `sqrt(Σ w² (f - μ)²) / Σ w`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightedMoments {
    n: usize,
    sw: f64,
    sw2: f64,
    swf: f64,
    sw2f: f64,
    sw2f2: f64,
}

impl WeightedMoments {
    pub fn push(&mut self, w: f64, f: f64) {
        self.n += 1;
        self.sw += w;
        self.sw2 += w * w;
        self.swf += w * f;
        self.sw2f += w * w * f;
        self.sw2f2 += w * w * f * f;
    }

    pub fn merge(&mut self, o: &WeightedMoments) {
        self.n += o.n;
        self.sw += o.sw;
        self.sw2 += o.sw2;
        self.swf += o.swf;
        self.sw2f += o.sw2f;
        self.sw2f2 += o.sw2f2;
    }

    pub fn mean(&self) -> f64 {
        self.swf / self.sw
    }

    /// Kish effective sample size `(Σ w)² / Σ w²`.
    pub fn ess(&self) -> f64 {
        self.sw * self.sw / self.sw2
    }

    pub fn estimate(&self, seed: u64) -> MCEstimate {
        let mu = self.mean();
        let num = (self.sw2f2 - 2.0 * mu * self.sw2f + mu * mu * self.sw2).max(0.0);
        MCEstimate { mean: mu, stderr: num.sqrt() / self.sw, n: self.n, seed }
    }
}

/// One-sample Kolmogorov–Smirnov distance between `samples` and `cdf`.
/// Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        acc.max(upper).max(lower)
    })
}

/// Two-sample Kolmogorov–Smirnov distance. Sorts both slices in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
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
    d
}
