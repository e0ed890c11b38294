//! Raw long-format log parsing and per-day pivoting.
//!
//! Raw input is UTF-8 CSV with header `id,time,variable,value`, one
//! observation per row. Missing values are an empty field or the literal
//! `NA`. An optional leading unnamed index column (as written by common
//! dataframe exporters) is tolerated and ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowDiagnostic};

/// Name of the prediction target variable.
pub const MOOD: &str = "mood";

const EXPECTED_HEADER: [&str; 4] = ["id", "time", "variable", "value"];

/// One raw log line: a single measurement of one variable for one user.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationRecord {
    pub user_id: String,
    pub timestamp: NaiveDateTime,
    pub variable: String,
    /// `None` when the source marks the measurement unavailable.
    pub value: Option<f64>,
}

/// Daily aggregate of one variable for one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DailyCell {
    /// Mean of the raw values observed that day.
    pub mean: f64,
    /// Number of raw observations aggregated; 0 marks a cell written by
    /// imputation rather than measurement.
    pub count: u32,
}

impl DailyCell {
    pub fn is_imputed(&self) -> bool {
        self.count == 0
    }
}

/// Cells of one calendar day, keyed by variable name.
pub type DayCells = BTreeMap<String, DailyCell>;

/// Per-user, per-day, per-variable table of daily means.
///
/// Users and dates are kept sorted; the variable registry is the sorted set
/// of all variable names seen, so the table is independent of input order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UserDayTable {
    variables: Vec<String>,
    users: BTreeMap<String, BTreeMap<NaiveDate, DayCells>>,
}

impl UserDayTable {
    pub(crate) fn from_parts(
        variables: Vec<String>,
        users: BTreeMap<String, BTreeMap<NaiveDate, DayCells>>,
    ) -> Self {
        debug_assert!(variables.windows(2).all(|w| w[0] < w[1]));
        Self { variables, users }
    }

    /// Sorted registry of every variable name seen.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v == name)
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.users.keys().map(String::as_str)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn days(&self, user: &str) -> Option<&BTreeMap<NaiveDate, DayCells>> {
        self.users.get(user)
    }

    pub fn day_count(&self, user: &str) -> usize {
        self.users.get(user).map_or(0, BTreeMap::len)
    }

    pub fn cell(&self, user: &str, date: NaiveDate, variable: &str) -> Option<&DailyCell> {
        self.users.get(user)?.get(&date)?.get(variable)
    }

    pub fn iter_users(
        &self,
    ) -> impl Iterator<Item = (&str, &BTreeMap<NaiveDate, DayCells>)> {
        self.users.iter().map(|(u, d)| (u.as_str(), d))
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Date-ordered daily mood means for one user (days without a mood cell
    /// are skipped).
    pub fn mood_series(&self, user: &str) -> Vec<(NaiveDate, f64)> {
        self.users
            .get(user)
            .map(|days| {
                days.iter()
                    .filter_map(|(date, cells)| cells.get(MOOD).map(|c| (*date, c.mean)))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Total observation count over all present cells.
    pub fn total_observation_count(&self) -> u64 {
        self.users
            .values()
            .flat_map(|days| days.values())
            .flat_map(|cells| cells.values())
            .map(|c| u64::from(c.count))
            .sum()
    }
}

/// Strict parsing fails on any malformed row; lenient parsing skips the bad
/// rows and reports them in [`ParseOutcome::skipped`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseMode {
    Strict,
    Lenient,
}

#[derive(Debug)]
pub struct ParseOutcome {
    pub records: Vec<ObservationRecord>,
    /// Rows skipped in lenient mode, with line numbers (empty in strict mode).
    pub skipped: Vec<RowDiagnostic>,
}

/// Parse raw long-format CSV into observation records, in file order.
pub fn parse_records<R: Read>(reader: R, mode: ParseMode) -> Result<ParseOutcome> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = csv.headers()?.clone();
    let offset = header_offset(&headers)?;
    let expected_len = EXPECTED_HEADER.len() + offset;

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, offset, expected_len) {
            Ok(record) => records.push(record),
            Err(message) => diagnostics.push(RowDiagnostic { line, message }),
        }
    }

    match mode {
        ParseMode::Strict if !diagnostics.is_empty() => Err(Error::MalformedInput(diagnostics)),
        ParseMode::Strict => Ok(ParseOutcome {
            records,
            skipped: Vec::new(),
        }),
        ParseMode::Lenient => Ok(ParseOutcome {
            records,
            skipped: diagnostics,
        }),
    }
}

fn header_offset(headers: &csv::StringRecord) -> Result<usize> {
    let fields: Vec<&str> = headers.iter().map(str::trim).collect();
    if fields == EXPECTED_HEADER {
        return Ok(0);
    }
    if fields.len() == EXPECTED_HEADER.len() + 1
        && fields[0].is_empty()
        && fields[1..] == EXPECTED_HEADER
    {
        return Ok(1);
    }
    Err(Error::InvalidHeader(format!(
        "expected columns id,time,variable,value (optionally after an unnamed index column), found {:?}",
        fields
    )))
}

fn parse_row(
    row: &csv::StringRecord,
    offset: usize,
    expected_len: usize,
) -> std::result::Result<ObservationRecord, String> {
    if row.len() != expected_len {
        return Err(format!(
            "expected {} columns, found {}",
            expected_len,
            row.len()
        ));
    }
    let user_id = row[offset].trim();
    if user_id.is_empty() {
        return Err("empty id".into());
    }
    let timestamp = parse_timestamp(row[offset + 1].trim())
        .ok_or_else(|| format!("invalid timestamp {:?}", &row[offset + 1]))?;
    let variable = row[offset + 2].trim();
    if variable.is_empty() {
        return Err("empty variable name".into());
    }
    let value = parse_value(row[offset + 3].trim())?;
    Ok(ObservationRecord {
        user_id: user_id.to_string(),
        timestamp,
        variable: variable.to_string(),
        value,
    })
}

/// ISO 8601 with or without time-of-day; a bare date means midnight.
fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    for format in FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(text, format) {
            return Some(ts);
        }
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

fn parse_value(text: &str) -> std::result::Result<Option<f64>, String> {
    if text.is_empty() || text == "NA" {
        return Ok(None);
    }
    let value: f64 = text
        .parse()
        .map_err(|_| format!("non-numeric value {:?}", text))?;
    if !value.is_finite() {
        return Err(format!("non-finite value {:?}", text));
    }
    Ok(Some(value))
}

/// Pivot parsed records into per-user daily means.
///
/// Records with absent values contribute nothing; (user, day) pairs where no
/// variable has a present value are omitted. Contributions are summed in
/// sorted order, so the result is identical under any record permutation.
pub fn pivot_daily(records: &[ObservationRecord]) -> UserDayTable {
    let mut variables = BTreeSet::new();
    let mut values: BTreeMap<String, BTreeMap<NaiveDate, BTreeMap<String, Vec<f64>>>> =
        BTreeMap::new();

    for record in records {
        variables.insert(record.variable.clone());
        let Some(value) = record.value else {
            continue;
        };
        values
            .entry(record.user_id.clone())
            .or_default()
            .entry(record.timestamp.date())
            .or_default()
            .entry(record.variable.clone())
            .or_default()
            .push(value);
    }

    let users = values
        .into_iter()
        .map(|(user, days)| {
            let days = days
                .into_iter()
                .map(|(date, cells)| {
                    let cells = cells
                        .into_iter()
                        .map(|(var, mut contributions)| {
                            contributions.sort_by(f64::total_cmp);
                            let count = contributions.len() as u32;
                            let mean = contributions.iter().sum::<f64>() / f64::from(count);
                            (var, DailyCell { mean, count })
                        })
                        .collect();
                    (date, cells)
                })
                .collect();
            (user, days)
        })
        .collect();

    UserDayTable::from_parts(variables.into_iter().collect(), users)
}

/// Write records in the exact raw CSV format [`parse_records`] consumes.
pub fn write_raw_csv<W: Write>(records: &[ObservationRecord], mut writer: W) -> Result<()> {
    writeln!(writer, "id,time,variable,value")?;
    for record in records {
        let value = match record.value {
            Some(v) => v.to_string(),
            None => "NA".to_string(),
        };
        writeln!(
            writer,
            "{},{},{},{}",
            record.user_id,
            record.timestamp.format("%Y-%m-%dT%H:%M:%S"),
            record.variable,
            value
        )?;
    }
    Ok(())
}
