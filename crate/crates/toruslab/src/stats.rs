//! Empirical-distribution utilities: ECDF construction and evaluation,
//! two-sample Kolmogorov–Smirnov distance, interpolated quantiles and a
//! Cauchy fit used by the one-dimensional rotation experiment.

use serde::Serialize;

use crate::error::{Error, Result};

/// Sorted sample set with step-function evaluation.
#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("empty sample set"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite sample"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalCdf { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// F_n(x) = #: samples <= x, divided by n.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.samples.len();
        // first index with sample > x
        let k = self.samples.partition_point(|&s| s <= x);
        k as f64 / n as f64
    }

    /// Linear-interpolated order statistic: quantile(q) interpolates between
    /// the order statistics at fractional rank q * (n - 1) (so q = 0 is the
    /// minimum, q = 1 the maximum).
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain(format!("quantile {q} outside [0, 1]")));
        }
        let n = self.samples.len();
        if n == 1 {
            return Ok(self.samples[0]);
        }
        let h = q * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let w = h - lo as f64;
        Ok(self.samples[lo] * (1.0 - w) + self.samples[hi] * w)
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.samples.last().unwrap()
    }

    /// Sorted samples, one per line (the CSV export format).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value\n");
        for v in &self.samples {
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

/// Two-sample Kolmogorov–Smirnov distance, computed by a merge scan over the
/// union of jump points.
pub fn ks_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample KS distance against a continuous CDF.
pub fn ks_distance_to(a: &EmpiricalCdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in a.samples().iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Result of fitting a Cauchy law by median / half-interquartile-range.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CauchyFit {
    pub location: f64,
    pub scale: f64,
    pub ks_to_fit: f64,
    pub degenerate: bool,
}

/// Standard Cauchy CDF.
pub fn cauchy_cdf(z: f64) -> f64 {
    z.atan() / std::f64::consts::PI + 0.5
}

/// Fits location = median and scale = IQR / 2 (the Cauchy quartile identity),
/// then reports the KS distance between the sample and the fitted CDF.
pub fn cauchy_fit(a: &EmpiricalCdf) -> Result<CauchyFit> {
    if a.len() < 100 {
        return Err(Error::domain(format!(
            "cauchy_fit needs at least 100 samples, got {}",
            a.len()
        )));
    }
    let location = a.quantile(0.5)?;
    let scale = 0.5 * (a.quantile(0.75)? - a.quantile(0.25)?);
    if scale <= 0.0 {
        return Ok(CauchyFit {
            location,
            scale: 0.0,
            ks_to_fit: 1.0,
            degenerate: true,
        });
    }
    let ks = ks_distance_to(a, |x| cauchy_cdf((x - location) / scale));
    Ok(CauchyFit {
        location,
        scale,
        ks_to_fit: ks,
        degenerate: false,
    })
}

/// JSON comparison report between two sample sets.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub n_a: usize,
    pub n_b: usize,
    pub ks: f64,
    pub quantiles_a: QuantileSummary,
    pub quantiles_b: QuantileSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantileSummary {
    pub q01: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub q99: f64,
}

impl QuantileSummary {
    pub fn of(cdf: &EmpiricalCdf) -> Self {
        let q = |p: f64| cdf.quantile(p).unwrap();
        QuantileSummary {
            q01: q(0.01),
            q05: q(0.05),
            q25: q(0.25),
            q50: q(0.50),
            q75: q(0.75),
            q95: q(0.95),
            q99: q(0.99),
        }
    }
}

pub fn compare(a: &EmpiricalCdf, b: &EmpiricalCdf) -> ComparisonReport {
    ComparisonReport {
        n_a: a.len(),
        n_b: b.len(),
        ks: ks_distance(a, b),
        quantiles_a: QuantileSummary::of(a),
        quantiles_b: QuantileSummary::of(b),
    }
}
