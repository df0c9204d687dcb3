//! Behavior and reliability metrics over trajectory records.

mod tables;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::ParseOutcome;
use crate::harness::TrajectoryRecord;
use crate::layout::Viewport;
use crate::state::Route;
use crate::tasks::TaskSpec;

pub use tables::{analyze_dir, emit_tables, TableFiles};

/// Task whose whole point is visiting another page; intent analysis skips it.
pub const NAVIGATION_TASK: &str = "NavigateToPageTask";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalyticsError {
    #[error("intent misunderstanding is not defined for {0}")]
    NavigationTask(String),
    #[error("duplicate sample for {agent}/{task}/{variation} seed {seed}")]
    DuplicateSample { agent: String, task: String, variation: String, seed: u64 },
    #[error("reward {0} outside [0, 1]")]
    RewardRange(f64),
}

/// Number of maximal loops in an action sequence.
///
/// A loop is a contiguous segment equal to some unit `w` repeated at least
/// twice that cannot be extended by another copy of `w` on either side.
/// Overlapping candidates are resolved left to right, shortest unit first.
/// Actions compare by their whitespace-trimmed text.
pub fn count_loops<S: AsRef<str>>(actions: &[S]) -> usize {
    let a: Vec<&str> = actions.iter().map(|s| s.as_ref().trim()).collect();
    let n = a.len();
    let same = |i: usize, j: usize, len: usize| a[i..i + len] == a[j..j + len];
    let mut count = 0;
    let mut free_from = 0;
    for i in 0..n {
        if i < free_from {
            continue;
        }
        for unit in 1..=(n - i) / 2 {
            if !same(i, i + unit, unit) {
                continue;
            }
            if i >= unit && same(i - unit, i, unit) {
                continue;
            }
            let mut k = 2;
            while i + (k + 1) * unit <= n && same(i, i + k * unit, unit) {
                k += 1;
            }
            count += 1;
            free_from = i + k * unit;
            break;
        }
    }
    count
}

/// Steps whose action text failed to parse, whatever the reason.
pub fn count_invalid(record: &TrajectoryRecord) -> usize {
    record.steps.iter().filter(|s| matches!(s.parse, ParseOutcome::Invalid { .. })).count()
}

/// Whether the episode ever left the task's apps for an unrelated page.
pub fn intent_misunderstood(record: &TrajectoryRecord, task: &TaskSpec) -> Result<bool, AnalyticsError> {
    if task.id == NAVIGATION_TASK {
        return Err(AnalyticsError::NavigationTask(task.id.clone()));
    }
    Ok(record.steps.iter().any(|s| match &s.route {
        Route::Home => false,
        Route::External(_) => true,
        r => !task.relevant_apps.contains(r),
    }))
}

/// Divisor used for standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide by n - 1.
    #[default]
    Sample,
    /// Divide by n.
    Population,
}

impl FromStr for StdConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sample" => Ok(StdConvention::Sample),
            "population" => Ok(StdConvention::Population),
            _ => Err(format!("unknown std convention `{s}` (expected sample or population)")),
        }
    }
}

impl fmt::Display for StdConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StdConvention::Sample => "sample",
            StdConvention::Population => "population",
        })
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Standard deviation; absent below two samples.
pub fn std_dev(xs: &[f64], convention: StdConvention) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let div = match convention {
        StdConvention::Sample => xs.len() - 1,
        StdConvention::Population => xs.len(),
    };
    Some((ss / div as f64).sqrt())
}

/// Mean absolute deviation about the mean, divisor n; absent below two samples.
pub fn mad(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    Some(xs.iter().map(|x| (x - m).abs()).sum::<f64>() / xs.len() as f64)
}

/// One episode reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub agent: String,
    pub task: String,
    pub variation: String,
    pub seed: u64,
    pub reward: f64,
}

/// Label for a list of variation ids: `default` when empty, else joined by `+`.
pub fn variation_label(ids: &[String]) -> String {
    if ids.is_empty() {
        "default".into()
    } else {
        ids.join("+")
    }
}

/// Variation label of a record; a non-default viewport is appended as `@WxH`.
pub fn record_variation(record: &TrajectoryRecord) -> String {
    let label = variation_label(&record.spec.variations);
    if record.spec.viewport == Viewport::default() {
        label
    } else {
        format!("{label}@{}", record.spec.viewport)
    }
}

impl RewardSample {
    /// Sample for a finished record. Records that ended in a harness error
    /// carry no reward and yield `None`.
    pub fn from_record(record: &TrajectoryRecord) -> Option<Self> {
        let result = record.result.as_ref()?;
        if record.error.is_some() {
            return None;
        }
        Some(RewardSample {
            agent: record.spec.agent.clone(),
            task: record.spec.task.clone(),
            variation: record_variation(record),
            seed: record.spec.seed,
            reward: result.reward.reward,
        })
    }
}

/// Statistics of one (agent, task, variation) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub variation: String,
    pub n: usize,
    pub pass_at_1: f64,
    pub std: Option<f64>,
    pub mad: Option<f64>,
}

/// Reliability of one agent on one task across variations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReliability {
    pub agent: String,
    pub task: String,
    /// Number of variations.
    pub d: usize,
    /// Seeds per cell; the smallest cell when they differ.
    pub n: usize,
    /// Mean reward over every pooled sample.
    pub pass_at_1: f64,
    pub cells: Vec<CellStats>,
    /// Mean of the within-variation deviations.
    pub fixed_std: Option<f64>,
    pub fixed_mad: Option<f64>,
    /// Deviations of the pooled samples.
    pub overall_std: Option<f64>,
    pub overall_mad: Option<f64>,
    pub ratio_std: Option<f64>,
    pub ratio_mad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityReport {
    pub convention: StdConvention,
    pub rows: Vec<TaskReliability>,
}

fn ratio(fixed: Option<f64>, overall: Option<f64>) -> Option<f64> {
    match (fixed, overall) {
        (Some(f), Some(o)) if o > 0.0 => Some(f / o),
        _ => None,
    }
}

/// Group samples by (agent, task) and variation and compute deviations.
pub fn reliability(samples: &[RewardSample], convention: StdConvention) -> Result<ReliabilityReport, AnalyticsError> {
    type Cells<'a> = BTreeMap<&'a str, BTreeMap<u64, f64>>;
    let mut groups: BTreeMap<(&str, &str), Cells<'_>> = BTreeMap::new();
    for s in samples {
        if !(0.0..=1.0).contains(&s.reward) {
            return Err(AnalyticsError::RewardRange(s.reward));
        }
        let cell = groups.entry((&s.agent, &s.task)).or_default().entry(&s.variation).or_default();
        if cell.insert(s.seed, s.reward).is_some() {
            return Err(AnalyticsError::DuplicateSample {
                agent: s.agent.clone(),
                task: s.task.clone(),
                variation: s.variation.clone(),
                seed: s.seed,
            });
        }
    }
    let rows = groups
        .into_iter()
        .map(|((agent, task), cells)| {
            let mut pooled = Vec::new();
            let stats: Vec<CellStats> = cells
                .into_iter()
                .map(|(variation, seeds)| {
                    let rs: Vec<f64> = seeds.into_values().collect();
                    pooled.extend_from_slice(&rs);
                    CellStats {
                        variation: variation.to_string(),
                        n: rs.len(),
                        pass_at_1: mean(&rs).unwrap_or(0.0),
                        std: std_dev(&rs, convention),
                        mad: mad(&rs),
                    }
                })
                .collect();
            let fixed = |f: fn(&CellStats) -> Option<f64>| {
                let xs: Vec<f64> = stats.iter().filter_map(f).collect();
                mean(&xs)
            };
            let fixed_std = fixed(|c| c.std);
            let fixed_mad = fixed(|c| c.mad);
            let overall_std = std_dev(&pooled, convention);
            let overall_mad = mad(&pooled);
            TaskReliability {
                agent: agent.to_string(),
                task: task.to_string(),
                d: stats.len(),
                n: stats.iter().map(|c| c.n).min().unwrap_or(0),
                pass_at_1: mean(&pooled).unwrap_or(0.0),
                cells: stats,
                fixed_std,
                fixed_mad,
                overall_std,
                overall_mad,
                ratio_std: ratio(fixed_std, overall_std),
                ratio_mad: ratio(fixed_mad, overall_mad),
            }
        })
        .collect();
    Ok(ReliabilityReport { convention, rows })
}

/// Behavior metrics of one (agent, variation) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorRow {
    pub agent: String,
    pub variation: String,
    pub runs: usize,
    pub avg_loops: f64,
    pub avg_invalid: f64,
    /// Share of runs that strayed to an unrelated page, over runs where the
    /// question applies.
    pub intent_rate: Option<f64>,
    /// Mean loop count of successful and of failed runs.
    pub loops_when_success: Option<f64>,
    pub loops_when_failure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorReport {
    pub rows: Vec<BehaviorRow>,
}

/// Behavior metrics over finished records. `lookup` maps a task id to its
/// spec; records of unknown tasks do not count toward the intent rate.
pub fn behavior<'a>(
    records: &[TrajectoryRecord],
    lookup: impl Fn(&str) -> Option<&'a TaskSpec>,
) -> BehaviorReport {
    #[derive(Default)]
    struct Acc {
        runs: usize,
        loops: Vec<f64>,
        invalid: Vec<f64>,
        intent: Vec<f64>,
        ok_loops: Vec<f64>,
        bad_loops: Vec<f64>,
    }
    let mut groups: BTreeMap<(String, String), Acc> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none() && r.result.is_some()) {
        let acc = groups.entry((r.spec.agent.clone(), record_variation(r))).or_default();
        let loops = count_loops(&r.action_texts()) as f64;
        acc.runs += 1;
        acc.loops.push(loops);
        acc.invalid.push(count_invalid(r) as f64);
        if let Some(Ok(m)) = lookup(&r.spec.task).map(|t| intent_misunderstood(r, t)) {
            acc.intent.push(if m { 1.0 } else { 0.0 });
        }
        if r.succeeded() {
            acc.ok_loops.push(loops);
        } else {
            acc.bad_loops.push(loops);
        }
    }
    let rows = groups
        .into_iter()
        .map(|((agent, variation), a)| BehaviorRow {
            agent,
            variation,
            runs: a.runs,
            avg_loops: mean(&a.loops).unwrap_or(0.0),
            avg_invalid: mean(&a.invalid).unwrap_or(0.0),
            intent_rate: mean(&a.intent),
            loops_when_success: mean(&a.ok_loops),
            loops_when_failure: mean(&a.bad_loops),
        })
        .collect();
    BehaviorReport { rows }
}

#[cfg(test)]
mod tests;
