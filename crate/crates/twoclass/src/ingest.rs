//! Survey microdata ingestion: schema-mapped delimited text, cleaning rules,
//! and subgroup selection.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::KahanAccumulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Gender {
    Man,
    Woman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Color {
    White,
    Yellow,
    Black,
    Indigenous,
    Mixed,
}

/// One microdata row. Unmappable cells are `None`, never silently zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonRecord {
    pub income: Option<f64>,
    pub gender: Option<Gender>,
    pub color: Option<Color>,
    pub age: Option<u32>,
    pub year: i32,
}

/// Population dichotomies used throughout the analysis.
///
/// `Wy` selects white/yellow, `Bim` selects black/indigenous/mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubgroupSelector {
    All,
    Man,
    Woman,
    Wy,
    Bim,
}

impl SubgroupSelector {
    pub const ALL_SELECTORS: [SubgroupSelector; 5] = [
        SubgroupSelector::All,
        SubgroupSelector::Man,
        SubgroupSelector::Woman,
        SubgroupSelector::Wy,
        SubgroupSelector::Bim,
    ];

    pub fn matches(&self, record: &PersonRecord) -> bool {
        match self {
            SubgroupSelector::All => true,
            SubgroupSelector::Man => record.gender == Some(Gender::Man),
            SubgroupSelector::Woman => record.gender == Some(Gender::Woman),
            SubgroupSelector::Wy => {
                matches!(record.color, Some(Color::White) | Some(Color::Yellow))
            }
            SubgroupSelector::Bim => matches!(
                record.color,
                Some(Color::Black) | Some(Color::Indigenous) | Some(Color::Mixed)
            ),
        }
    }

    /// `true` when the record carries the field this selector splits on.
    pub fn field_known(&self, record: &PersonRecord) -> bool {
        match self {
            SubgroupSelector::All => true,
            SubgroupSelector::Man | SubgroupSelector::Woman => record.gender.is_some(),
            SubgroupSelector::Wy | SubgroupSelector::Bim => record.color.is_some(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SubgroupSelector::All => "all",
            SubgroupSelector::Man => "man",
            SubgroupSelector::Woman => "woman",
            SubgroupSelector::Wy => "wy",
            SubgroupSelector::Bim => "bim",
        }
    }
}

impl std::str::FromStr for SubgroupSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(SubgroupSelector::All),
            "man" => Ok(SubgroupSelector::Man),
            "woman" => Ok(SubgroupSelector::Woman),
            "wy" => Ok(SubgroupSelector::Wy),
            "bim" => Ok(SubgroupSelector::Bim),
            other => Err(Error::Config(format!(
                "unknown group {other:?}; expected all, man, woman, wy or bim"
            ))),
        }
    }
}

impl std::fmt::Display for SubgroupSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A cleaned collection of records with conservation summaries: the number of
/// people and the total income they hold.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<PersonRecord>,
    population_count: usize,
    total_income: f64,
    year: i32,
}

impl Dataset {
    /// Builds a dataset from records, computing the summaries with
    /// compensated summation. Records without income contribute zero to the
    /// total (cleaned data always carries income).
    pub fn from_records(records: Vec<PersonRecord>, year: i32) -> Self {
        let mut total = KahanAccumulator::new();
        for r in &records {
            if let Some(m) = r.income {
                total.add(m);
            }
        }
        Dataset {
            population_count: records.len(),
            total_income: total.value(),
            records,
            year,
        }
    }

    /// Convenience constructor for synthetic income lists (no demographics).
    pub fn from_incomes(incomes: Vec<f64>, year: i32) -> Self {
        let records = incomes
            .into_iter()
            .map(|m| PersonRecord {
                income: Some(m),
                gender: None,
                color: None,
                age: None,
                year,
            })
            .collect();
        Self::from_records(records, year)
    }

    pub fn records(&self) -> &[PersonRecord] {
        &self.records
    }

    pub fn population_count(&self) -> usize {
        self.population_count
    }

    pub fn total_income(&self) -> f64 {
        self.total_income
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The incomes present in the dataset, in record order.
    pub fn incomes(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.income).collect()
    }
}

/// Maps logical fields to input columns and enumerates value encodings.
///
/// Only the income column is mandatory; gender, color and age columns are
/// optional so that plain income lists (e.g. synthetic samples) can be loaded
/// with a one-line schema.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub income_column: String,
    pub gender_column: Option<String>,
    pub color_column: Option<String>,
    pub age_column: Option<String>,
    pub year_column: Option<String>,
    /// Field delimiter, default comma.
    pub delimiter: Option<char>,
    pub gender_values: Option<GenderValues>,
    pub color_values: Option<ColorValues>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenderValues {
    pub man: Vec<String>,
    pub woman: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorValues {
    pub white: Vec<String>,
    pub yellow: Vec<String>,
    pub black: Vec<String>,
    pub indigenous: Vec<String>,
    pub mixed: Vec<String>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.gender_column.is_some() && self.gender_values.is_none() {
            return Err(Error::Config(
                "gender_column is set but gender_values is missing".into(),
            ));
        }
        if self.color_column.is_some() && self.color_values.is_none() {
            return Err(Error::Config(
                "color_column is set but color_values is missing".into(),
            ));
        }
        Ok(())
    }

    fn delimiter_byte(&self) -> u8 {
        self.delimiter.map(|c| c as u8).unwrap_or(b',')
    }
}

/// A row the parser could not turn into a record at all.
#[derive(Debug, Clone)]
pub struct RejectedRow {
    /// 1-based data row number (header not counted).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub records: Vec<PersonRecord>,
    pub rejects: Vec<RejectedRow>,
    /// Rows whose income cell was empty or unmappable.
    pub missing_income: usize,
}

/// Writes the rejects report as delimited text: row number and reason.
pub fn write_rejects<W: Write>(rejects: &[RejectedRow], mut out: W) -> Result<()> {
    writeln!(out, "row,reason")?;
    for r in rejects {
        writeln!(out, "{},{:?}", r.row, r.reason)?;
    }
    Ok(())
}

/// Loads schema-mapped records from delimited text with a header row.
///
/// Cell values that do not map become missing fields; structurally broken
/// rows are collected as rejects and parsing continues. `default_year` is
/// used when the schema does not name a year column.
pub fn load<R: Read>(source: R, schema: &Schema, default_year: i32) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte())
        .flexible(false)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| Error::Config(format!("cannot read header row: {e}")))?
        .clone();
    let find = |column: &str| headers.iter().position(|h| h == column);
    let require = |field: &'static str, column: &str| {
        find(column).ok_or_else(|| Error::MissingColumn {
            field,
            column: column.to_string(),
        })
    };

    let income_idx = require("income", &schema.income_column)?;
    let gender_idx = match &schema.gender_column {
        Some(c) => Some(require("gender", c)?),
        None => None,
    };
    let color_idx = match &schema.color_column {
        Some(c) => Some(require("color", c)?),
        None => None,
    };
    let age_idx = match &schema.age_column {
        Some(c) => Some(require("age", c)?),
        None => None,
    };
    let year_idx = match &schema.year_column {
        Some(c) => Some(require("year", c)?),
        None => None,
    };

    let gender_map = schema.gender_values.as_ref().map(|v| {
        let mut map = BTreeMap::new();
        for code in &v.man {
            map.insert(code.clone(), Gender::Man);
        }
        for code in &v.woman {
            map.insert(code.clone(), Gender::Woman);
        }
        map
    });
    let color_map = schema.color_values.as_ref().map(|v| {
        let mut map = BTreeMap::new();
        let pairs: [(&Vec<String>, Color); 5] = [
            (&v.white, Color::White),
            (&v.yellow, Color::Yellow),
            (&v.black, Color::Black),
            (&v.indigenous, Color::Indigenous),
            (&v.mixed, Color::Mixed),
        ];
        for (codes, color) in pairs {
            for code in codes {
                map.insert(code.clone(), color);
            }
        }
        map
    });

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut missing_income = 0usize;

    for (i, row) in reader.records().enumerate() {
        let row_number = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejects.push(RejectedRow {
                    row: row_number,
                    reason: e.to_string(),
                });
                continue;
            }
        };

        let cell = |idx: usize| row.get(idx).unwrap_or("").trim();
        let income = parse_income(cell(income_idx));
        if income.is_none() {
            missing_income += 1;
        }
        let gender = gender_idx.and_then(|idx| {
            gender_map
                .as_ref()
                .and_then(|map| map.get(cell(idx)).copied())
        });
        let color = color_idx.and_then(|idx| {
            color_map
                .as_ref()
                .and_then(|map| map.get(cell(idx)).copied())
        });
        let age = age_idx.and_then(|idx| cell(idx).parse::<u32>().ok());
        let year = year_idx
            .and_then(|idx| cell(idx).parse::<i32>().ok())
            .unwrap_or(default_year);

        records.push(PersonRecord {
            income,
            gender,
            color,
            age,
            year,
        });
    }

    Ok(LoadOutcome {
        records,
        rejects,
        missing_income,
    })
}

fn parse_income(cell: &str) -> Option<f64> {
    if cell.is_empty() {
        return None;
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
        _ => None,
    }
}

/// Options for [`clean`].
#[derive(Debug, Clone, Copy)]
pub struct CleanOptions {
    /// Age threshold; people at or below it are dropped when `min_age_exclusive`.
    pub min_age: u32,
    /// `true` keeps age > min_age (the literal "aged over" reading);
    /// `false` keeps age >= min_age.
    pub min_age_exclusive: bool,
    /// When `false`, records without an age value pass the age rule. Useful
    /// for sources that carry no age column at all.
    pub require_age: bool,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions {
            min_age: 10,
            min_age_exclusive: true,
            require_age: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct CleanReport {
    pub initial: usize,
    pub retained: usize,
    pub dropped_age: usize,
    pub dropped_missing_income: usize,
    pub dropped_nonpositive_income: usize,
}

/// Applies the cleaning rules: keep records above the age threshold with a
/// present, strictly positive income. Records with missing gender or color
/// are retained; they simply drop out of the corresponding dichotomy subsets.
pub fn clean(records: &[PersonRecord], options: CleanOptions) -> Result<(Dataset, CleanReport)> {
    let mut report = CleanReport {
        initial: records.len(),
        ..CleanReport::default()
    };
    let mut retained = Vec::new();
    for r in records {
        let age_ok = match r.age {
            Some(age) => {
                if options.min_age_exclusive {
                    age > options.min_age
                } else {
                    age >= options.min_age
                }
            }
            None => !options.require_age,
        };
        if !age_ok {
            report.dropped_age += 1;
            continue;
        }
        match r.income {
            None => {
                report.dropped_missing_income += 1;
            }
            Some(m) if m <= 0.0 => {
                report.dropped_nonpositive_income += 1;
            }
            Some(_) => retained.push(*r),
        }
    }
    report.retained = retained.len();
    if retained.is_empty() {
        return Err(Error::EmptyDataset("no records survive cleaning"));
    }
    let year = retained[0].year;
    Ok((Dataset::from_records(retained, year), report))
}

pub fn clean_default(records: &[PersonRecord]) -> Result<(Dataset, CleanReport)> {
    clean(records, CleanOptions::default())
}

/// Restricts a dataset to a subgroup, recomputing the summaries.
pub fn subset(dataset: &Dataset, selector: SubgroupSelector) -> Result<Dataset> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot subset an empty dataset"));
    }
    if selector == SubgroupSelector::All {
        return Ok(dataset.clone());
    }
    let records: Vec<PersonRecord> = dataset
        .records()
        .iter()
        .filter(|r| selector.matches(r))
        .copied()
        .collect();
    if records.is_empty() {
        return Err(Error::EmptyDataset("selector matches no records"));
    }
    Ok(Dataset::from_records(records, dataset.year()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"
income_column = "income"
gender_column = "sex"
color_column = "race"
age_column = "age"

[gender_values]
man = ["1"]
woman = ["2"]

[color_values]
white = ["2"]
yellow = ["6"]
black = ["4"]
indigenous = ["0"]
mixed = ["8"]
"#;

    fn schema() -> Schema {
        Schema::from_toml_str(SCHEMA).unwrap()
    }

    fn record(income: Option<f64>, age: Option<u32>) -> PersonRecord {
        PersonRecord {
            income,
            gender: Some(Gender::Man),
            color: Some(Color::Mixed),
            age,
            year: 2014,
        }
    }

    #[test]
    fn loads_three_valid_rows() {
        let data = "income,sex,race,age\n1200.5,1,4,34\n800,2,2,22\n96.25,2,8,71\n";
        let out = load(data.as_bytes(), &schema(), 2014).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.rejects.is_empty());
        assert_eq!(out.missing_income, 0);
        assert_eq!(out.records[0].income, Some(1200.5));
        assert_eq!(out.records[1].gender, Some(Gender::Woman));
        assert_eq!(out.records[2].color, Some(Color::Mixed));
    }

    #[test]
    fn empty_income_cell_becomes_missing() {
        let data = "income,sex,race,age\n,1,4,34\n100,1,4,40\n";
        let out = load(data.as_bytes(), &schema(), 2014).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].income, None);
        assert_eq!(out.missing_income, 1);
    }

    #[test]
    fn unmappable_cells_become_missing_not_zero() {
        let data = "income,sex,race,age\nabc,9,7,xx\n";
        let out = load(data.as_bytes(), &schema(), 2014).unwrap();
        let r = &out.records[0];
        assert_eq!(r.income, None);
        assert_eq!(r.gender, None);
        assert_eq!(r.color, None);
        assert_eq!(r.age, None);
    }

    #[test]
    fn negative_income_is_unmappable() {
        let data = "income,sex,race,age\n-5,1,4,34\n";
        let out = load(data.as_bytes(), &schema(), 2014).unwrap();
        assert_eq!(out.records[0].income, None);
        assert_eq!(out.missing_income, 1);
    }

    #[test]
    fn missing_age_column_names_the_field() {
        let data = "income,sex,race\n100,1,4\n";
        let err = load(data.as_bytes(), &schema(), 2014).unwrap_err();
        match err {
            Error::MissingColumn { field, column } => {
                assert_eq!(field, "age");
                assert_eq!(column, "age");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_rejected_and_parsing_continues() {
        let data = "income,sex,race,age\n100,1,4,34\n1,2\n200,2,8,50\n";
        let out = load(data.as_bytes(), &schema(), 2014).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].row, 2);
    }

    #[test]
    fn age_boundary_is_strict_by_default() {
        let records: Vec<PersonRecord> = [9, 10, 11]
            .into_iter()
            .map(|age| record(Some(100.0), Some(age)))
            .collect();
        let (ds, report) = clean_default(&records).unwrap();
        assert_eq!(ds.population_count(), 1);
        assert_eq!(ds.records()[0].age, Some(11));
        assert_eq!(report.dropped_age, 2);

        let inclusive = CleanOptions {
            min_age_exclusive: false,
            ..CleanOptions::default()
        };
        let (ds, _) = clean(&records, inclusive).unwrap();
        assert_eq!(ds.population_count(), 2);
    }

    #[test]
    fn all_zero_income_is_an_empty_dataset() {
        let records = vec![record(Some(0.0), Some(30)); 4];
        assert!(matches!(
            clean_default(&records),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn clean_is_idempotent() {
        let records = vec![
            record(Some(10.0), Some(30)),
            record(None, Some(40)),
            record(Some(5.0), Some(9)),
            record(Some(0.0), Some(50)),
            record(Some(7.5), Some(11)),
        ];
        let (first, _) = clean_default(&records).unwrap();
        let (second, report) = clean_default(first.records()).unwrap();
        assert_eq!(first.records(), second.records());
        assert_eq!(report.initial, report.retained);
        assert_eq!(first.total_income(), second.total_income());
    }

    #[test]
    fn subset_all_is_identity() {
        let records = vec![record(Some(10.0), Some(30)), record(Some(20.0), Some(40))];
        let (ds, _) = clean_default(&records).unwrap();
        let all = subset(&ds, SubgroupSelector::All).unwrap();
        assert_eq!(all.population_count(), ds.population_count());
        assert_eq!(all.total_income(), ds.total_income());
    }

    #[test]
    fn subset_counts_by_gender() {
        let mut records = Vec::new();
        for _ in 0..2 {
            records.push(PersonRecord {
                gender: Some(Gender::Man),
                ..record(Some(10.0), Some(30))
            });
        }
        for _ in 0..3 {
            records.push(PersonRecord {
                gender: Some(Gender::Woman),
                ..record(Some(10.0), Some(30))
            });
        }
        let (ds, _) = clean_default(&records).unwrap();
        let women = subset(&ds, SubgroupSelector::Woman).unwrap();
        assert_eq!(women.population_count(), 3);
    }

    #[test]
    fn empty_subset_is_an_error() {
        let records = vec![record(Some(10.0), Some(30))];
        let (ds, _) = clean_default(&records).unwrap();
        assert!(matches!(
            subset(&ds, SubgroupSelector::Woman),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn missing_gender_kept_for_all_but_not_dichotomies() {
        let mut r = record(Some(10.0), Some(30));
        r.gender = None;
        let records = vec![r, record(Some(20.0), Some(40))];
        let (ds, _) = clean_default(&records).unwrap();
        assert_eq!(ds.population_count(), 2);
        let men = subset(&ds, SubgroupSelector::Man).unwrap();
        assert_eq!(men.population_count(), 1);
    }

    #[test]
    fn rejects_report_roundtrip() {
        let rejects = vec![RejectedRow {
            row: 3,
            reason: "field count mismatch".into(),
        }];
        let mut buf = Vec::new();
        write_rejects(&rejects, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row,reason\n"));
        assert!(text.contains("3,"));
    }

    #[test]
    fn schema_requires_value_maps_for_configured_columns() {
        let bad = "income_column = \"income\"\ngender_column = \"sex\"\n";
        assert!(matches!(
            Schema::from_toml_str(bad),
            Err(Error::Config(_))
        ));
    }
}
