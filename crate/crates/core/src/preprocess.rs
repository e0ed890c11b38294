//! Pruning, imputation, and scaling of the daily table.
//!
//! Order of application: [`prune_variables`] drops variables observed on too
//! few days, [`prune_days`] drops days without mood or with too few of the
//! retained variables, [`forward_fill`] completes the remaining cells, and
//! [`fit_scaling`] / [`ScalingParams`] map every variable onto `[0, 1]`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DailyCell, UserDayTable, MOOD};

/// Coverage thresholds for pruning. The sources never quantify "too many
/// missing", so both fractions are configurable with conservative defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    /// Minimum share of days (pooled over users) on which a variable must be
    /// present to survive.
    pub min_variable_coverage: f64,
    /// Minimum share of retained variables that must be present on a day for
    /// the day to survive.
    pub min_day_coverage: f64,
    /// Drop days whose mood was never observed.
    pub require_mood: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            min_variable_coverage: 0.6,
            min_day_coverage: 0.8,
            require_mood: true,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("min_variable_coverage", self.min_variable_coverage),
            ("min_day_coverage", self.min_day_coverage),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Remove variables whose presence fraction over all users' days falls below
/// the threshold. The mood variable is never removed; it is a fatal error for
/// mood to be absent from the table entirely.
pub fn prune_variables(table: &UserDayTable, config: &PruneConfig) -> Result<UserDayTable> {
    config.validate()?;
    let total_days: usize = table.iter_users().map(|(_, days)| days.len()).sum();
    let mood_observed = table
        .iter_users()
        .any(|(_, days)| days.values().any(|cells| cells.contains_key(MOOD)));
    if !mood_observed {
        return Err(Error::MoodMissing);
    }

    let retained: Vec<String> = table
        .variables()
        .iter()
        .filter(|variable| {
            if *variable == MOOD {
                return true;
            }
            let present: usize = table
                .iter_users()
                .map(|(_, days)| {
                    days.values()
                        .filter(|cells| cells.contains_key(*variable))
                        .count()
                })
                .sum();
            let fraction = if total_days == 0 {
                0.0
            } else {
                present as f64 / total_days as f64
            };
            fraction >= config.min_variable_coverage
        })
        .cloned()
        .collect();

    let users = table
        .iter_users()
        .map(|(user, days)| {
            let days = days
                .iter()
                .map(|(date, cells)| {
                    let cells = cells
                        .iter()
                        .filter(|(var, _)| retained.contains(var))
                        .map(|(var, cell)| (var.clone(), *cell))
                        .collect();
                    (*date, cells)
                })
                .collect();
            (user.to_string(), days)
        })
        .collect();

    Ok(UserDayTable::from_parts(retained, users))
}

/// Result of [`prune_days`]: the pruned table plus the users that ended up
/// with no surviving days.
#[derive(Debug)]
pub struct PrunedDays {
    pub table: UserDayTable,
    pub removed_users: Vec<String>,
}

/// Per user independently: drop days without a mood cell (when configured),
/// then drop days carrying too small a fraction of the retained variables.
pub fn prune_days(table: &UserDayTable, config: &PruneConfig) -> PrunedDays {
    let registry_len = table.variables().len().max(1);
    let mut users = BTreeMap::new();
    let mut removed_users = Vec::new();

    for (user, days) in table.iter_users() {
        let kept: BTreeMap<_, _> = days
            .iter()
            .filter(|(_, cells)| !config.require_mood || cells.contains_key(MOOD))
            .filter(|(_, cells)| {
                cells.len() as f64 / registry_len as f64 >= config.min_day_coverage
            })
            .map(|(date, cells)| (*date, cells.clone()))
            .collect();
        if kept.is_empty() {
            removed_users.push(user.to_string());
        } else {
            users.insert(user.to_string(), kept);
        }
    }

    PrunedDays {
        table: UserDayTable::from_parts(table.variables().to_vec(), users),
        removed_users,
    }
}

/// Complete the table: per user and variable, in date order, missing cells
/// receive the most recent previous mean; leading gaps receive the first
/// observed value. Imputed cells carry `count == 0`.
pub fn forward_fill(table: &UserDayTable) -> Result<UserDayTable> {
    let variables = table.variables().to_vec();
    let mut users = BTreeMap::new();

    for (user, days) in table.iter_users() {
        let dates: Vec<_> = days.keys().copied().collect();
        let mut filled: BTreeMap<_, _> = days.clone();
        for variable in &variables {
            let first = dates
                .iter()
                .find_map(|d| days.get(d).and_then(|c| c.get(variable)).map(|c| c.mean));
            let Some(first) = first else {
                return Err(Error::UnfillableVariable {
                    user: user.to_string(),
                    variable: variable.clone(),
                });
            };
            let mut carry = first;
            for date in &dates {
                match days.get(date).and_then(|c| c.get(variable)) {
                    Some(cell) => carry = cell.mean,
                    None => {
                        filled.get_mut(date).expect("day exists").insert(
                            variable.clone(),
                            DailyCell {
                                mean: carry,
                                count: 0,
                            },
                        );
                    }
                }
            }
        }
        users.insert(user.to_string(), filled);
    }

    Ok(UserDayTable::from_parts(variables, users))
}

/// Per-variable observed minimum and maximum, fitted on the complete table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    ranges: BTreeMap<String, (f64, f64)>,
}

/// Map `x` onto `[0, 1]` given a variable's observed range. Degenerate
/// (constant) ranges map to 0.5; out-of-range inputs clamp, and the flag
/// reports that a clamp happened.
pub fn scale_value(x: f64, min: f64, max: f64) -> (f64, bool) {
    if max <= min {
        return (0.5, false);
    }
    let scaled = (x - min) / (max - min);
    if scaled < 0.0 {
        (0.0, true)
    } else if scaled > 1.0 {
        (1.0, true)
    } else {
        (scaled, false)
    }
}

/// Inverse of [`scale_value`]; a degenerate range returns the constant.
pub fn unscale_value(y: f64, min: f64, max: f64) -> f64 {
    if max <= min {
        min
    } else {
        min + y * (max - min)
    }
}

impl ScalingParams {
    pub fn range(&self, variable: &str) -> Option<(f64, f64)> {
        self.ranges.get(variable).copied()
    }

    pub fn apply(&self, variable: &str, x: f64) -> Result<f64> {
        let mut ignored = 0;
        self.apply_counted(variable, x, &mut ignored)
    }

    /// Scale and bump `clamps` when the input fell outside the fitted range.
    pub fn apply_counted(&self, variable: &str, x: f64, clamps: &mut u64) -> Result<f64> {
        let (min, max) = self
            .range(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        let (scaled, clamped) = scale_value(x, min, max);
        if clamped {
            *clamps += 1;
        }
        Ok(scaled)
    }

    pub fn invert(&self, variable: &str, y: f64) -> Result<f64> {
        let (min, max) = self
            .range(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        Ok(unscale_value(y, min, max))
    }
}

/// Fit per-variable min/max over all users and days.
pub fn fit_scaling(table: &UserDayTable, variables: &[String]) -> ScalingParams {
    let mut ranges = BTreeMap::new();
    for variable in variables {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (_, days) in table.iter_users() {
            for cells in days.values() {
                if let Some(cell) = cells.get(variable) {
                    min = min.min(cell.mean);
                    max = max.max(cell.mean);
                }
            }
        }
        if min.is_finite() && max.is_finite() {
            ranges.insert(variable.clone(), (min, max));
        }
    }
    ScalingParams { ranges }
}

/// Wide CSV: one row per (user, date), one column per retained variable.
pub fn write_wide_csv<W: Write>(table: &UserDayTable, writer: W) -> Result<()> {
    write_wide(table, writer, |cell| cell.mean.to_string())
}

/// Same shape as the wide CSV, with 1 marking imputed cells.
pub fn write_imputation_flags_csv<W: Write>(table: &UserDayTable, writer: W) -> Result<()> {
    write_wide(table, writer, |cell| {
        if cell.is_imputed() { "1" } else { "0" }.to_string()
    })
}

fn write_wide<W: Write>(
    table: &UserDayTable,
    mut writer: W,
    render: impl Fn(&DailyCell) -> String,
) -> Result<()> {
    write!(writer, "id,date")?;
    for variable in table.variables() {
        write!(writer, ",{variable}")?;
    }
    writeln!(writer)?;
    for (user, days) in table.iter_users() {
        for (date, cells) in days {
            write!(writer, "{user},{date}")?;
            for variable in table.variables() {
                match cells.get(variable) {
                    Some(cell) => write!(writer, ",{}", render(cell))?,
                    None => write!(writer, ",")?,
                }
            }
            writeln!(writer)?;
        }
    }
    Ok(())
}
