//! Small numeric utilities: compensated summation and simple linear regression.

use crate::error::{Error, Result};

/// Neumaier-compensated sum.
pub fn kahan_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = KahanAccumulator::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Running compensated sum, for prefix sums and streaming totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanAccumulator {
    sum: f64,
    compensation: f64,
}

impl KahanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Mean and sample standard deviation (n-1 denominator; 0 for a single point).
pub fn mean_and_sample_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "mean of an empty slice");
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, (ss.max(0.0) / (n - 1) as f64).sqrt())
}

/// Ordinary least squares y = intercept + slope * x.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    assert_eq!(x.len(), y.len(), "mismatched regression inputs");
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "regression needs at least 2 points, got {n}"
        )));
    }
    let xm = kahan_sum(x.iter().copied()) / n as f64;
    let ym = kahan_sum(y.iter().copied()) / n as f64;
    let sxx = kahan_sum(x.iter().map(|&v| (v - xm) * (v - xm)));
    if sxx <= 0.0 {
        return Err(Error::DegenerateRegression("no variance in the predictor"));
    }
    let sxy = kahan_sum(x.iter().zip(y).map(|(&a, &b)| (a - xm) * (b - ym)));
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let slope_se = if n > 2 {
        let ssr = kahan_sum(x.iter().zip(y).map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        }))
        .max(0.0);
        (ssr / ((n - 2) as f64 * sxx)).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        n,
    })
}

/// Ceiling with a snap to the nearest integer when the value is within 1e-9
/// of one, so binary float noise (e.g. 0.07 * 100 = 7.000000000000001) cannot
/// push a count one past the intended integer.
pub fn snap_ceil(value: f64) -> usize {
    let r = value.round();
    let k = if (value - r).abs() < 1e-9 { r } else { value.ceil() };
    k as usize
}

/// ceil(fraction * n), snapped.
pub fn ceil_count(fraction: f64, n: usize) -> usize {
    snap_ceil(fraction * n as f64)
}
