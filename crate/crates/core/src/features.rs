//! Supervised example construction and train/test splitting.
//!
//! Classification examples pair day-t daily means (plus the trailing mood
//! mean) with the next retained day's mood class; sequence examples pair a
//! scaled window of consecutive retained days with the scaled next-day mood.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{UserDayTable, MOOD};
use crate::matrix::Matrix;
use crate::preprocess::ScalingParams;

/// Round half away from zero toward positive infinity: 6.5 -> 7.
pub fn round_half_up(x: f64) -> i32 {
    (x + 0.5).floor() as i32
}

/// Mood class used by the SVM targets and the benchmark accuracy.
pub fn mood_class(mood: f64) -> i32 {
    round_half_up(mood)
}

/// Trailing mean with a shrinking window at the head:
/// `out[i] = mean(series[max(0, i-window+1) ..= i])`.
pub fn rolling_mean(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    series
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let start = (i + 1).saturating_sub(window);
            let slice = &series[start..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// One SVM training instance: unscaled day-t features and the next retained
/// day's mood class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationExample {
    pub user_id: String,
    /// Date of the predicted (next) day.
    pub target_date: NaiveDate,
    /// Daily means of all retained variables on day t, then the trailing
    /// mood mean up to day t.
    pub features: Vec<f64>,
    pub target_class: i32,
}

/// One RNN training instance: a scaled window of consecutive retained days
/// and the scaled mood of the following retained day.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceExample {
    pub user_id: String,
    /// Date of the predicted day (the one after the window).
    pub target_date: NaiveDate,
    /// Window of scaled values, one row per day, one column per variable.
    pub inputs: Matrix,
    /// Scaled next-day mood.
    pub target: f64,
    /// True when the window plus target day skip calendar dates; adjacency
    /// is by retained day, not by calendar.
    pub spans_calendar_gap: bool,
}

pub trait SplitExample {
    fn user_id(&self) -> &str;
    fn target_date(&self) -> NaiveDate;
}

impl SplitExample for ClassificationExample {
    fn user_id(&self) -> &str {
        &self.user_id
    }
    fn target_date(&self) -> NaiveDate {
        self.target_date
    }
}

impl SplitExample for SequenceExample {
    fn user_id(&self) -> &str {
        &self.user_id
    }
    fn target_date(&self) -> NaiveDate {
        self.target_date
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Seeded uniform shuffle of the pooled examples.
    GlobalRandom,
    /// Per user, the chronologically last share becomes the test set.
    PerUserChronological,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub mode: SplitMode,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Build classification examples for every pair of consecutive retained days.
/// Users with fewer than two days contribute nothing and are reported.
pub fn build_classification_examples(
    table: &UserDayTable,
    window: usize,
) -> Result<(Vec<ClassificationExample>, Vec<String>)> {
    let variables = table.variables().to_vec();
    let mut examples = Vec::new();
    let mut skipped_users = Vec::new();

    for (user, days) in table.iter_users() {
        if days.len() < 2 {
            skipped_users.push(user.to_string());
            continue;
        }
        let dates: Vec<_> = days.keys().copied().collect();
        let mood: Vec<f64> = dates
            .iter()
            .map(|d| cell_mean(table, user, *d, MOOD))
            .collect::<Result<_>>()?;
        let rolling = rolling_mean(&mood, window);

        for t in 0..dates.len() - 1 {
            let mut features = Vec::with_capacity(variables.len() + 1);
            for variable in &variables {
                features.push(cell_mean(table, user, dates[t], variable)?);
            }
            features.push(rolling[t]);
            examples.push(ClassificationExample {
                user_id: user.to_string(),
                target_date: dates[t + 1],
                features,
                target_class: mood_class(mood[t + 1]),
            });
        }
    }
    Ok((examples, skipped_users))
}

/// Statistics from sequence-example construction.
#[derive(Debug, Default)]
pub struct SequenceBuildStats {
    /// Users with too few days for even one window.
    pub skipped_users: Vec<String>,
    /// Values that fell outside the fitted scaling range and were clamped.
    pub clamped_values: u64,
}

/// Build per-user sliding windows of `seq_len` consecutive retained days,
/// scaled to `[0, 1]`, each targeting the following day's scaled mood.
pub fn build_sequence_examples(
    table: &UserDayTable,
    params: &ScalingParams,
    seq_len: usize,
) -> Result<(BTreeMap<String, Vec<SequenceExample>>, SequenceBuildStats)> {
    if seq_len == 0 {
        return Err(Error::Config("seq_len must be at least 1".into()));
    }
    let variables = table.variables().to_vec();
    let mut by_user = BTreeMap::new();
    let mut stats = SequenceBuildStats::default();

    for (user, days) in table.iter_users() {
        let dates: Vec<_> = days.keys().copied().collect();
        if dates.len() <= seq_len {
            stats.skipped_users.push(user.to_string());
            continue;
        }
        let mut examples = Vec::with_capacity(dates.len() - seq_len);
        for start in 0..dates.len() - seq_len {
            let target_idx = start + seq_len;
            let mut inputs = Matrix::zeros(seq_len, variables.len());
            for (row, date) in dates[start..target_idx].iter().enumerate() {
                for (col, variable) in variables.iter().enumerate() {
                    let raw = cell_mean(table, user, *date, variable)?;
                    let scaled =
                        params.apply_counted(variable, raw, &mut stats.clamped_values)?;
                    inputs.set(row, col, scaled);
                }
            }
            let raw_target = cell_mean(table, user, dates[target_idx], MOOD)?;
            let target = params.apply_counted(MOOD, raw_target, &mut stats.clamped_values)?;
            let spans_calendar_gap = dates[start..=target_idx]
                .windows(2)
                .any(|pair| (pair[1] - pair[0]).num_days() != 1);
            examples.push(SequenceExample {
                user_id: user.to_string(),
                target_date: dates[target_idx],
                inputs,
                target,
                spans_calendar_gap,
            });
        }
        by_user.insert(user.to_string(), examples);
    }
    Ok((by_user, stats))
}

fn cell_mean(table: &UserDayTable, user: &str, date: NaiveDate, variable: &str) -> Result<f64> {
    table
        .cell(user, date, variable)
        .map(|c| c.mean)
        .ok_or_else(|| {
            Error::IncompleteTable(format!(
                "no {variable} cell for {user} on {date}; run forward_fill first"
            ))
        })
}

/// Test-set size under the rounded-to-nearest rule.
pub fn holdout_size(n: usize, test_fraction: f64) -> usize {
    (n as f64 * test_fraction + 0.5).floor() as usize
}

/// Partition examples into (train, test) according to the spec. Errors if any
/// side of the split would be empty, naming the offending user or the pool.
pub fn split_holdout<T: SplitExample>(
    examples: Vec<T>,
    spec: &SplitSpec,
) -> Result<(Vec<T>, Vec<T>)> {
    spec.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("no examples to split"));
    }
    match spec.mode {
        SplitMode::GlobalRandom => {
            let n = examples.len();
            let k = holdout_size(n, spec.test_fraction);
            check_sides(k, n, "the global pool")?;
            let mut shuffled = examples;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
            let train = shuffled.split_off(k);
            Ok((train, shuffled))
        }
        SplitMode::PerUserChronological => {
            let mut by_user: BTreeMap<String, Vec<T>> = BTreeMap::new();
            for example in examples {
                by_user
                    .entry(example.user_id().to_string())
                    .or_default()
                    .push(example);
            }
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (user, mut group) in by_user {
                group.sort_by_key(SplitExample::target_date);
                let n = group.len();
                let k = holdout_size(n, spec.test_fraction);
                check_sides(k, n, &user)?;
                let tail = group.split_off(n - k);
                train.extend(group);
                test.extend(tail);
            }
            Ok((train, test))
        }
    }
}

fn check_sides(test: usize, total: usize, scope: &str) -> Result<()> {
    if test == 0 {
        return Err(Error::EmptySplit {
            side: "test",
            scope: scope.to_string(),
        });
    }
    if test == total {
        return Err(Error::EmptySplit {
            side: "train",
            scope: scope.to_string(),
        });
    }
    Ok(())
}
