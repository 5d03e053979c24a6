//! Empirical estimation of the two-class parameters: average-income
//! temperature, crossover income from the top-fraction rule, tail regression
//! on the empirical survival curve, bootstrap errors, and Welch's t-test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::TwoClassParams;
use crate::numeric::{ceil_count, kahan_sum, linear_fit, mean_and_sample_sd, snap_ceil};

/// Normal 95% two-sided critical value.
pub const NORMAL_CI95: f64 = 1.96;

/// A point estimate with standard error and 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub ci95_half_width: f64,
    /// Sample size behind the estimate.
    pub n: usize,
}

impl EstimateWithError {
    pub fn new(value: f64, std_error: f64, n: usize, critical_factor: f64) -> Self {
        EstimateWithError {
            value,
            std_error,
            ci95_half_width: critical_factor * std_error,
            n,
        }
    }
}

/// Average income as the bulk "temperature", with the standard error of the mean.
pub fn temperature(dataset: &Dataset) -> Result<EstimateWithError> {
    let incomes = dataset.incomes();
    if incomes.is_empty() {
        return Err(Error::EmptyDataset("temperature needs at least one income"));
    }
    let (mean, sd) = mean_and_sample_sd(&incomes);
    let se = sd / (incomes.len() as f64).sqrt();
    Ok(EstimateWithError::new(mean, se, incomes.len(), NORMAL_CI95))
}

/// Crossover income: the lowest income among the `tail_fraction` richest.
pub fn crossover_income(dataset: &Dataset, tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail_fraction",
            reason: format!("must be in (0, 1), got {tail_fraction}"),
        });
    }
    let mut incomes = dataset.incomes();
    let n = incomes.len();
    let need = snap_ceil(1.0 / tail_fraction);
    if n < need {
        return Err(Error::InsufficientData(format!(
            "crossover at fraction {tail_fraction} needs at least {need} incomes, got {n}"
        )));
    }
    incomes.sort_by(f64::total_cmp);
    let k = ceil_count(tail_fraction, n);
    Ok(incomes[n - k])
}

/// Sorted (income, survival) pairs: survival = P(income >= m) in the sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCcdf {
    points: Vec<(f64, f64)>,
}

impl EmpiricalCcdf {
    /// Builds the survival curve over the distinct values of `incomes`.
    pub fn from_values(incomes: &[f64]) -> Result<Self> {
        if incomes.is_empty() {
            return Err(Error::EmptyDataset("empirical CCDF needs incomes"));
        }
        let mut sorted = incomes.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut points = Vec::new();
        let mut i = 0;
        while i < n {
            let v = sorted[i];
            points.push((v, (n - i) as f64 / n as f64));
            while i < n && sorted[i] == v {
                i += 1;
            }
        }
        Ok(EmpiricalCcdf { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Writes two-column delimited text (income, survival).
    pub fn write_delimited<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "income,survival")?;
        for (m, s) in &self.points {
            writeln!(out, "{m},{s}")?;
        }
        Ok(())
    }
}

/// Empirical survival curve of a dataset's incomes.
pub fn empirical_ccdf(dataset: &Dataset) -> Result<EmpiricalCcdf> {
    EmpiricalCcdf::from_values(&dataset.incomes())
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a model
/// survival function.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], survival: F) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - survival(x);
            let above = ((i + 1) as f64 / n - cdf).abs();
            let below = (cdf - i as f64 / n).abs();
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Result of the log-log tail regression.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TailFit {
    /// Pareto index from the slope of log-survival on log-income.
    pub pareto_index: EstimateWithError,
    /// Survival coefficient B so that P(income >= m) ~ B m^-alpha, scaled by
    /// the tail fraction the sample represents.
    pub tail_coefficient: f64,
    /// Fraction of the population the tail sample represents.
    pub tail_fraction: f64,
    /// Minimum income of the tail sample.
    pub crossover: f64,
    /// Maximum-likelihood tail index, reported as a cross-check on the
    /// regression estimate.
    pub hill_index: f64,
}

/// Fits the Pareto tail by ordinary least squares on the deduplicated
/// empirical survival points, in log-log space. The incomes are taken as a
/// full sample (tail fraction 1).
pub fn fit_pareto(tail_incomes: &[f64]) -> Result<TailFit> {
    fit_pareto_with_fraction(tail_incomes, 1.0)
}

/// Same regression, with the survival coefficient rescaled so it refers to
/// the whole population of which the tail is a `tail_fraction` share.
pub fn fit_pareto_with_fraction(tail_incomes: &[f64], tail_fraction: f64) -> Result<TailFit> {
    check_positive_incomes(tail_incomes)?;
    let ccdf = EmpiricalCcdf::from_values(tail_incomes)?;
    let points = ccdf.points();
    if points.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "tail regression needs at least 10 distinct incomes, got {}",
            points.len()
        )));
    }
    let x: Vec<f64> = points.iter().map(|(m, _)| m.ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, s)| s.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    if fit.slope >= 0.0 {
        return Err(Error::DegenerateRegression(
            "tail survival does not decay with income",
        ));
    }
    let alpha = -fit.slope;
    let crossover = tail_incomes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TailFit {
        pareto_index: EstimateWithError::new(alpha, fit.slope_se, tail_incomes.len(), NORMAL_CI95),
        tail_coefficient: tail_fraction * fit.intercept.exp(),
        tail_fraction,
        crossover,
        hill_index: hill_index(tail_incomes)?,
    })
}

/// Maximum-likelihood tail index for a sample bounded below by its minimum:
/// alpha = n / sum(ln(x_i / min)).
pub fn hill_index(values: &[f64]) -> Result<f64> {
    check_positive_incomes(values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let sum = kahan_sum(values.iter().map(|&v| (v / min).ln()));
    if sum <= 0.0 {
        return Err(Error::DegenerateRegression(
            "tail incomes are all equal; index is undefined",
        ));
    }
    Ok(values.len() as f64 / sum)
}

fn check_positive_incomes(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyDataset("tail sample is empty"));
    }
    match values.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        Some(&bad) => Err(Error::InvalidParameter {
            name: "tail_incomes",
            reason: format!("incomes must be positive and finite, got {bad}"),
        }),
        None => Ok(()),
    }
}

/// How the bootstrap subsamples are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BootstrapMode {
    /// One half-size subsample without replacement, then `resamples`
    /// with-replacement resamples of it (the default reading).
    HalfThenResample,
    /// `resamples` independent half-size subsamples without replacement.
    IndependentHalves,
}

/// Bootstrap error of the tail index: draws one half-size subsample of the
/// tail, resamples it 40 times with replacement, and fits the
/// maximum-likelihood index on each resample.
///
/// The standard error is the sample standard deviation of the resample fits.
/// Deterministic for a given seed: each resample draws from its own counter
/// stream, so the result does not depend on evaluation order.
pub fn bootstrap_pareto(tail_incomes: &[f64], resamples: usize, seed: u64) -> Result<EstimateWithError> {
    bootstrap_pareto_with(
        tail_incomes,
        resamples,
        seed,
        BootstrapMode::HalfThenResample,
        NORMAL_CI95,
    )
}

pub fn bootstrap_pareto_with(
    tail_incomes: &[f64],
    resamples: usize,
    seed: u64,
    mode: BootstrapMode,
    critical_factor: f64,
) -> Result<EstimateWithError> {
    check_positive_incomes(tail_incomes)?;
    if tail_incomes.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs a tail of at least 20 incomes, got {}",
            tail_incomes.len()
        )));
    }
    if resamples < 2 {
        return Err(Error::InvalidParameter {
            name: "resamples",
            reason: format!("need at least 2, got {resamples}"),
        });
    }
    let half = tail_incomes.len() / 2;
    let fits: Vec<f64> = match mode {
        BootstrapMode::HalfThenResample => {
            let mut rng = stream_rng(seed, 0);
            let half_sample = take_without_replacement(&mut rng, tail_incomes, half);
            (0..resamples)
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64 + 1);
                    let resample: Vec<f64> = (0..half)
                        .map(|_| half_sample[rng.random_range(0..half)])
                        .collect();
                    hill_index(&resample)
                })
                .collect::<Result<_>>()?
        }
        BootstrapMode::IndependentHalves => (0..resamples)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64 + 1);
                let half_sample = take_without_replacement(&mut rng, tail_incomes, half);
                hill_index(&half_sample)
            })
            .collect::<Result<_>>()?,
    };
    let (mean, sd) = mean_and_sample_sd(&fits);
    Ok(EstimateWithError::new(mean, sd, resamples, critical_factor))
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Partial Fisher-Yates draw of `k` values without replacement.
fn take_without_replacement(rng: &mut ChaCha12Rng, values: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(k <= values.len());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    for i in 0..k {
        let j = i + rng.random_range(0..values.len() - i);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx.into_iter().map(|i| values[i]).collect()
}

/// Welch's unpaired t-test.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WelchTTest {
    pub t: f64,
    pub dof: f64,
    pub p_value: f64,
}

/// Two-sample t-test without the equal-variance assumption; the two-sided
/// p-value comes from the Student-t survival function at the
/// Welch-Satterthwaite degrees of freedom.
pub fn welch_t_test(series_a: &[f64], series_b: &[f64]) -> Result<WelchTTest> {
    if series_a.len() < 2 || series_b.len() < 2 {
        return Err(Error::InsufficientData(
            "Welch's t-test needs at least 2 observations per series".into(),
        ));
    }
    let (mean_a, sd_a) = mean_and_sample_sd(series_a);
    let (mean_b, sd_b) = mean_and_sample_sd(series_b);
    if sd_a == 0.0 || sd_b == 0.0 {
        return Err(Error::InsufficientData(
            "Welch's t-test needs nonzero variance in both series".into(),
        ));
    }
    let va = sd_a * sd_a / series_a.len() as f64;
    let vb = sd_b * sd_b / series_b.len() as f64;
    let se2 = va + vb;
    let t = (mean_a - mean_b) / se2.sqrt();
    let dof = se2 * se2
        / (va * va / (series_a.len() - 1) as f64 + vb * vb / (series_b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::InvalidParameter {
        name: "dof",
        reason: e.to_string(),
    })?;
    let p_value = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(WelchTTest { t, dof, p_value })
}

/// Configuration of the full fit pipeline.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Share of the population treated as the Pareto region.
    pub tail_fraction: f64,
    /// Number of bootstrap resamples.
    pub resamples: usize,
    pub seed: u64,
    /// Critical factor for the bootstrap confidence interval.
    pub critical_factor: f64,
    pub bootstrap_mode: BootstrapMode,
    /// Share of `tail_fraction` used for the model's index calibration; the
    /// threshold sits slightly inside the tail so that crossover noise does
    /// not leak bulk incomes into the index fit.
    pub index_trim: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tail_fraction: 0.05,
            resamples: 40,
            seed: 42,
            critical_factor: NORMAL_CI95,
            bootstrap_mode: BootstrapMode::HalfThenResample,
            index_trim: 0.95,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.01..=0.20).contains(&self.tail_fraction) {
            return Err(Error::InvalidParameter {
                name: "tail_fraction",
                reason: format!("must be in [0.01, 0.20], got {}", self.tail_fraction),
            });
        }
        if !(0.5..=1.0).contains(&self.index_trim) {
            return Err(Error::InvalidParameter {
                name: "index_trim",
                reason: format!("must be in [0.5, 1.0], got {}", self.index_trim),
            });
        }
        if !(self.critical_factor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "critical_factor",
                reason: format!("must be positive, got {}", self.critical_factor),
            });
        }
        Ok(())
    }
}

/// Everything the fit pipeline produces.
#[derive(Debug, Clone)]
pub struct ModelFit {
    /// Calibrated model: bulk temperature from the truncated-exponential
    /// likelihood, index from the trimmed maximum-likelihood fit, crossover
    /// from the top-fraction rule.
    pub params: TwoClassParams,
    /// Average income with its standard error.
    pub temperature: EstimateWithError,
    /// Log-log regression over the tail survival points.
    pub tail: TailFit,
    /// Bootstrap error of the tail index.
    pub bootstrap: EstimateWithError,
    /// Number of incomes at or above the crossover.
    pub tail_size: usize,
    /// Number of incomes behind the model index.
    pub index_tail_size: usize,
}

/// Full pipeline: temperature, crossover, tail regression, bootstrap, and the
/// calibrated model parameters.
pub fn fit_model(dataset: &Dataset, config: &FitConfig) -> Result<ModelFit> {
    config.validate()?;
    let temp = temperature(dataset)?;
    let crossover = crossover_income(dataset, config.tail_fraction)?;

    let mut incomes = dataset.incomes();
    incomes.sort_by(f64::total_cmp);
    let n = incomes.len();
    let tail_start = incomes.partition_point(|&m| m < crossover);
    let tail = &incomes[tail_start..];
    let tail_fraction_actual = tail.len() as f64 / n as f64;

    let tail_fit = fit_pareto_with_fraction(tail, tail_fraction_actual)?;
    let bootstrap = bootstrap_pareto_with(
        tail,
        config.resamples,
        config.seed,
        config.bootstrap_mode,
        config.critical_factor,
    )?;

    let k_index = ceil_count(config.index_trim * config.tail_fraction, n).min(tail.len());
    if k_index < 10 {
        return Err(Error::InsufficientData(format!(
            "index calibration needs at least 10 tail incomes, got {k_index}"
        )));
    }
    let index = hill_index(&incomes[n - k_index..])?;
    let bulk_t = bulk_temperature(&incomes[..tail_start], crossover).unwrap_or(temp.value);
    let params = TwoClassParams::new(bulk_t, index, crossover)?;

    Ok(ModelFit {
        params,
        temperature: temp,
        tail: tail_fit,
        bootstrap,
        tail_size: tail.len(),
        index_tail_size: k_index,
    })
}

/// Maximum-likelihood scale of an exponential truncated to [0, cutoff].
///
/// Solves mean/cutoff = 1/x - 1/(e^x - 1) for x = cutoff/T. Returns `None`
/// when the bulk is empty or its mean is not below cutoff/2 (no exponential
/// shape can produce that), in which case callers fall back to the plain
/// average income.
pub fn bulk_temperature(bulk_incomes: &[f64], cutoff: f64) -> Option<f64> {
    if bulk_incomes.is_empty() || !(cutoff > 0.0) {
        return None;
    }
    let mean = kahan_sum(bulk_incomes.iter().copied()) / bulk_incomes.len() as f64;
    let target = mean / cutoff;
    if !(target > 0.0 && target < 0.5 - 1e-12) {
        return None;
    }
    let phi = |x: f64| -> f64 {
        if x < 1e-4 {
            // series of 1/x - 1/(e^x - 1) near zero
            0.5 - x / 12.0 + x * x * x / 720.0
        } else if x > 700.0 {
            1.0 / x
        } else {
            1.0 / x - 1.0 / x.exp_m1()
        }
    };
    let (mut lo, mut hi) = ((1e-9f64).ln(), (1e9f64).ln());
    if target >= phi(lo.exp()) || target <= phi(hi.exp()) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(cutoff / (0.5 * (lo + hi)).exp())
}
