//! Multi-year reporting: per-subgroup parameter tables, percentage-difference
//! and income-share series, trend slopes, and plot-ready file emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{
    fit_model, welch_t_test, EstimateWithError, FitConfig, WelchTTest,
};
use crate::inequality::{gini_converged, GiniResult};
use crate::ingest::{subset, Dataset, SubgroupSelector};
use crate::numeric::{kahan_sum, linear_fit};

/// Error floor for percentage-difference series, in percentage points.
pub const PCT_DIFF_ERROR_FLOOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub value: f64,
    pub error: f64,
}

/// Percentage difference of a subgroup value from the total-population value.
pub fn percentage_difference(subgroup_value: f64, total_value: f64) -> Result<f64> {
    if !(total_value > 0.0) {
        return Err(Error::InvalidParameter {
            name: "total_value",
            reason: format!("must be positive, got {total_value}"),
        });
    }
    Ok(100.0 * (subgroup_value - total_value) / total_value)
}

/// Error bar for a percentage-difference point: the propagated relative error
/// with a floor of [`PCT_DIFF_ERROR_FLOOR`] percentage points.
pub fn percentage_difference_error(
    subgroup_value: f64,
    subgroup_se: f64,
    total_value: f64,
    total_se: f64,
) -> f64 {
    let ratio = (subgroup_value / total_value).abs();
    let rel_a = if subgroup_value != 0.0 {
        subgroup_se / subgroup_value.abs()
    } else {
        0.0
    };
    let rel_b = total_se / total_value.abs();
    let propagated = 100.0 * ratio * (rel_a * rel_a + rel_b * rel_b).sqrt();
    propagated.max(PCT_DIFF_ERROR_FLOOR)
}

/// Population and income shares of a subgroup, over the records where the
/// selector's field is known. An empty subgroup yields zero shares.
pub fn income_share(dataset: &Dataset, selector: SubgroupSelector) -> (f64, f64) {
    if selector == SubgroupSelector::All {
        return (1.0, 1.0);
    }
    let mut base_count = 0usize;
    let mut part_count = 0usize;
    let mut base_income = Vec::new();
    let mut part_income = Vec::new();
    for r in dataset.records() {
        if !selector.field_known(r) {
            continue;
        }
        let m = r.income.unwrap_or(0.0);
        base_count += 1;
        base_income.push(m);
        if selector.matches(r) {
            part_count += 1;
            part_income.push(m);
        }
    }
    if base_count == 0 {
        return (0.0, 0.0);
    }
    let total = kahan_sum(base_income);
    let part = kahan_sum(part_income);
    let income = if total > 0.0 { part / total } else { 0.0 };
    (part_count as f64 / base_count as f64, income)
}

/// OLS slope of a yearly series against the actual year values.
pub fn trend_slope(series: &[SeriesPoint]) -> Result<EstimateWithError> {
    let mut years: Vec<i32> = series.iter().map(|p| p.year).collect();
    years.sort_unstable();
    years.dedup();
    if series.len() < 3 || years.len() < 2 {
        return Err(Error::InsufficientData(
            "trend needs at least 3 points over at least 2 distinct years".into(),
        ));
    }
    let x: Vec<f64> = series.iter().map(|p| p.year as f64).collect();
    let y: Vec<f64> = series.iter().map(|p| p.value).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(EstimateWithError::new(fit.slope, fit.slope_se, series.len(), 1.96))
}

/// Model parameters in plain named fields, for report serialization.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ModelParamsSummary {
    pub temperature: f64,
    pub pareto_index: f64,
    pub crossover: f64,
    pub amplitude: f64,
    pub tail_coefficient: f64,
}

/// One (year, subgroup) cell of the report.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(untagged)]
pub enum Cell {
    Ok(Box<SubgroupStats>),
    Failed { error: String },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SubgroupStats {
    pub population: usize,
    pub total_income: f64,
    pub population_share: f64,
    pub income_share: f64,
    /// Average income with its standard error (the empirical "temperature").
    pub average_income: EstimateWithError,
    pub crossover: f64,
    pub tail_size: usize,
    /// Log-log regression index over the tail survival points.
    pub pareto_ols: EstimateWithError,
    pub tail_coefficient: f64,
    pub hill_index: f64,
    /// Bootstrap estimate of the tail index.
    pub pareto_bootstrap: EstimateWithError,
    pub model: ModelParamsSummary,
    pub gini: GiniResult,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct YearlyReport {
    pub year: i32,
    /// Keyed by selector name: all, man, woman, wy, bim.
    pub cells: BTreeMap<String, Cell>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Report {
    pub seed: u64,
    pub years: Vec<YearlyReport>,
    /// Keyed by "{metric}_{selector}".
    pub series: BTreeMap<String, Vec<SeriesPoint>>,
    /// Trend slopes for series with at least three points.
    pub trends: BTreeMap<String, EstimateWithError>,
    /// Welch's t-test between the man and woman tail-index series.
    pub welch_gender_pareto: Option<WelchTTest>,
    /// Welch's t-test between the wy and bim tail-index series.
    pub welch_color_pareto: Option<WelchTTest>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportConfig {
    pub fit: FitConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            fit: FitConfig::default(),
        }
    }
}

/// Runs the full analysis per year and selector. Cell failures are recorded
/// in place; the report always completes.
pub fn run_report(datasets: &BTreeMap<i32, Dataset>, config: &ReportConfig) -> Result<Report> {
    if datasets.is_empty() {
        return Err(Error::EmptyDataset("report needs at least one year"));
    }
    config.fit.validate()?;

    let mut years = Vec::new();
    for (&year, dataset) in datasets {
        let mut cells = BTreeMap::new();
        for selector in SubgroupSelector::ALL_SELECTORS {
            let cell = match analyze_cell(dataset, selector, &config.fit) {
                Ok(stats) => Cell::Ok(Box::new(stats)),
                Err(e) => Cell::Failed {
                    error: e.to_string(),
                },
            };
            cells.insert(selector.name().to_string(), cell);
        }
        years.push(YearlyReport { year, cells });
    }

    let mut series: BTreeMap<String, Vec<SeriesPoint>> = BTreeMap::new();
    for yr in &years {
        for selector in SubgroupSelector::ALL_SELECTORS {
            let Some(Cell::Ok(stats)) = yr.cells.get(selector.name()) else {
                continue;
            };
            let push = |series: &mut BTreeMap<String, Vec<SeriesPoint>>,
                        metric: &str,
                        value: f64,
                        error: f64| {
                series
                    .entry(format!("{metric}_{}", selector.name()))
                    .or_default()
                    .push(SeriesPoint {
                        year: yr.year,
                        value,
                        error,
                    });
            };
            push(
                &mut series,
                "temperature",
                stats.average_income.value,
                stats.average_income.std_error,
            );
            push(&mut series, "crossover", stats.crossover, 0.0);
            push(
                &mut series,
                "pareto",
                stats.pareto_bootstrap.value,
                stats.pareto_bootstrap.std_error,
            );
            push(&mut series, "gini", stats.gini.value, stats.gini.uncertainty);

            if selector != SubgroupSelector::All {
                if let Some(Cell::Ok(all)) = yr.cells.get(SubgroupSelector::All.name()) {
                    if let Ok(diff) = percentage_difference(
                        stats.average_income.value,
                        all.average_income.value,
                    ) {
                        let err = percentage_difference_error(
                            stats.average_income.value,
                            stats.average_income.std_error,
                            all.average_income.value,
                            all.average_income.std_error,
                        );
                        push(&mut series, "temperature_pct_diff", diff, err);
                    }
                    if let Ok(diff) = percentage_difference(stats.crossover, all.crossover) {
                        let err = percentage_difference_error(
                            stats.crossover,
                            0.0,
                            all.crossover,
                            0.0,
                        );
                        push(&mut series, "crossover_pct_diff", diff, err);
                    }
                }
            }
        }
    }

    let mut trends = BTreeMap::new();
    for (key, points) in &series {
        if let Ok(slope) = trend_slope(points) {
            trends.insert(key.clone(), slope);
        }
    }

    let mut notes = Vec::new();
    let pareto_values = |selector: SubgroupSelector| -> Vec<f64> {
        series
            .get(&format!("pareto_{}", selector.name()))
            .map(|pts| pts.iter().map(|p| p.value).collect())
            .unwrap_or_default()
    };
    let welch_pair = |a: SubgroupSelector, b: SubgroupSelector, notes: &mut Vec<String>| {
        let va = pareto_values(a);
        let vb = pareto_values(b);
        match welch_t_test(&va, &vb) {
            Ok(t) => Some(t),
            Err(e) => {
                notes.push(format!(
                    "welch test {}-{} skipped: {e}",
                    a.name(),
                    b.name()
                ));
                None
            }
        }
    };
    let welch_gender_pareto =
        welch_pair(SubgroupSelector::Man, SubgroupSelector::Woman, &mut notes);
    let welch_color_pareto = welch_pair(SubgroupSelector::Wy, SubgroupSelector::Bim, &mut notes);

    Ok(Report {
        seed: config.fit.seed,
        years,
        series,
        trends,
        welch_gender_pareto,
        welch_color_pareto,
        notes,
    })
}

fn analyze_cell(
    dataset: &Dataset,
    selector: SubgroupSelector,
    fit_config: &FitConfig,
) -> Result<SubgroupStats> {
    let (population_share, income_share_value) = income_share(dataset, selector);
    let sub = subset(dataset, selector)?;
    let fit = fit_model(&sub, fit_config)?;
    let gini = gini_converged(&sub)?;
    Ok(SubgroupStats {
        population: sub.population_count(),
        total_income: sub.total_income(),
        population_share,
        income_share: income_share_value,
        average_income: fit.temperature,
        crossover: fit.tail.crossover,
        tail_size: fit.tail_size,
        pareto_ols: fit.tail.pareto_index,
        tail_coefficient: fit.tail.tail_coefficient,
        hill_index: fit.tail.hill_index,
        pareto_bootstrap: fit.bootstrap,
        model: ModelParamsSummary {
            temperature: fit.params.temperature(),
            pareto_index: fit.params.pareto_index(),
            crossover: fit.params.crossover(),
            amplitude: fit.params.amplitude(),
            tail_coefficient: fit.params.tail_coefficient(),
        },
        gini,
    })
}

/// Writes `report.json` and one delimited series file per (metric, selector)
/// pair into `out_dir`. Every series file starts with a seed header line.
pub fn write_report(report: &Report, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    std::fs::write(out_dir.join("report.json"), json + "\n")?;
    for (key, points) in &report.series {
        let mut file = std::fs::File::create(out_dir.join(format!("{key}.csv")))?;
        writeln!(file, "# seed={}", report.seed)?;
        writeln!(file, "year,value,error")?;
        for p in points {
            writeln!(file, "{},{:.6},{:.6}", p.year, p.value, p.error)?;
        }
    }
    Ok(())
}
