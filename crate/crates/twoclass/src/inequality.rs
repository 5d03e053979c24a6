//! Lorenz curves and the Gini coefficient.
//!
//! The Gini coefficient is computed with Brown's trapezoid formula over
//! discrete Lorenz points:
//!
//! ```text
//! G = 1 - sum_j (Y_j + Y_{j-1}) (X_j - X_{j-1})
//! ```
//!
//! [`gini_converged`] evaluates it on a ladder of nested quantile partitions
//! and reports the refinement gap as the uncertainty.

use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::numeric::KahanAccumulator;

/// Cumulative (population share, income share) pairs, sorted by population
/// share, starting at (0, 0) and ending at (1, 1).
#[derive(Debug, Clone)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

impl LorenzCurve {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Two-column delimited export for external plotting.
    pub fn write_delimited<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "population_share,income_share")?;
        for (x, y) in &self.points {
            writeln!(out, "{x},{y}")?;
        }
        Ok(())
    }
}

/// Per-observation Lorenz curve: point j is (j/n, sum of the j smallest
/// incomes / total).
pub fn lorenz(dataset: &Dataset) -> Result<LorenzCurve> {
    let mut incomes = dataset.incomes();
    if incomes.is_empty() {
        return Err(Error::EmptyDataset("Lorenz curve needs incomes"));
    }
    incomes.sort_by(f64::total_cmp);
    let prefix = prefix_sums(&incomes);
    let total = *prefix.last().expect("nonempty prefix");
    if !(total > 0.0) {
        return Err(Error::DegenerateCurve);
    }
    let n = incomes.len();
    let points = (0..=n)
        .map(|j| (j as f64 / n as f64, prefix[j] / total))
        .collect();
    Ok(LorenzCurve { points })
}

/// Compensated prefix sums: result[j] = sum of the first j values.
fn prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut acc = KahanAccumulator::new();
    let mut out = Vec::with_capacity(values.len() + 1);
    out.push(0.0);
    for &v in values {
        acc.add(v);
        out.push(acc.value());
    }
    out
}

/// Brown's formula over consecutive curve points.
pub fn gini_brown(curve: &LorenzCurve) -> f64 {
    let mut area = KahanAccumulator::new();
    for pair in curve.points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        area.add((y1 + y0) * (x1 - x0));
    }
    1.0 - area.value()
}

/// Gini estimate with the refinement diagnostics of [`gini_converged`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GiniResult {
    pub value: f64,
    /// Gap between the two finest refinement levels.
    pub uncertainty: f64,
    /// First decimal place at which the two finest levels disagree
    /// (`None` when they agree to 15 places).
    pub divergent_decimal: Option<u32>,
    /// Partition size of the finest level.
    pub partitions_used: usize,
}

/// Evaluates Brown's formula on Lorenz curves built from nested quantile
/// partitions of sizes 2^5, 2^6, ... up to min(n, 2^17). Partition boundaries
/// take the lower order statistic, so every curve point is an exact partial
/// sum of observations. The value is the finest level; the uncertainty is the
/// last refinement gap.
pub fn gini_converged(dataset: &Dataset) -> Result<GiniResult> {
    let mut incomes = dataset.incomes();
    if incomes.is_empty() {
        return Err(Error::EmptyDataset("Gini needs incomes"));
    }
    incomes.sort_by(f64::total_cmp);
    let prefix = prefix_sums(&incomes);
    let total = *prefix.last().expect("nonempty prefix");
    if !(total > 0.0) {
        return Err(Error::DegenerateCurve);
    }
    let n = incomes.len();

    let mut levels: Vec<usize> = (5u32..=17)
        .map(|e| (1usize << e).min(n))
        .collect();
    levels.dedup();

    let values: Vec<f64> = levels
        .iter()
        .map(|&k| gini_at_partition(&prefix, total, n, k))
        .collect();

    let value = *values.last().expect("at least one level");
    let uncertainty = if values.len() >= 2 {
        (value - values[values.len() - 2]).abs()
    } else {
        0.0
    };
    let divergent_decimal = if values.len() >= 2 {
        first_divergent_decimal(value, values[values.len() - 2])
    } else {
        None
    };
    Ok(GiniResult {
        value,
        uncertainty,
        divergent_decimal,
        partitions_used: *levels.last().expect("at least one level"),
    })
}

/// Brown's formula over the k-panel quantile partition of the sorted sample.
fn gini_at_partition(prefix: &[f64], total: f64, n: usize, k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= n);
    let mut area = KahanAccumulator::new();
    let mut prev_x = 0.0;
    let mut prev_y = 0.0;
    for j in 1..=k {
        let i = j * n / k;
        let x = i as f64 / n as f64;
        let y = prefix[i] / total;
        area.add((y + prev_y) * (x - prev_x));
        prev_x = x;
        prev_y = y;
    }
    1.0 - area.value()
}

/// First decimal place at which the decimal expansions of `a` and `b`
/// disagree, scanning places 1..=15.
fn first_divergent_decimal(a: f64, b: f64) -> Option<u32> {
    for d in 1..=15u32 {
        let scale = 10f64.powi(d as i32);
        if (a * scale).floor() != (b * scale).floor() {
            return Some(d);
        }
    }
    None
}
