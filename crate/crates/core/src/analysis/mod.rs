//! Analyses over a registry and its measurements: rankings, internal sums,
//! coverage, unit shares, alias merging, mention consistency and the
//! count-versus-mention correlation.
//!
//! The free functions here are the individual operations; [`build_report`]
//! composes them into an [`AnalysisReport`].

mod render;
mod report;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::measure::FetchFailure;
use crate::taxonomy::{MeasureLevel, Mission, Placement, Sublevel, Violation};

pub use render::{render_csv, render_json, render_table, OutputFormat};
pub use report::{
    build_report, merge_aliases, AnalysisReport, Diagnostic, ExternalAliasFold, MergedCounts, PlatformSummary, PublishedFigures,
    RankedRow, ReportOptions, SatelliteCounts, UnitShare, UrlCounts,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("contour count is zero or missing")]
    ZeroContour,
    #[error("need at least 3 complete count/mention pairs, found {n}")]
    InsufficientData { n: usize },
    #[error("one of the series is constant")]
    DegenerateVariance,
    #[error("{} measurements missing", .0.len())]
    MissingMeasurements(Vec<FetchFailure>),
    #[error("registry has {} violations", .0.len())]
    InvalidRegistry(Vec<Violation>),
}

/// A non-negative fraction, rendered as a percentage.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Share(f64);

impl Share {
    pub fn new(fraction: f64) -> Self {
        Share(fraction)
    }

    pub fn fraction(self) -> f64 {
        self.0
    }

    pub fn percent(self) -> f64 {
        self.0 * 100.0
    }

    /// Fixed number of decimals, e.g. `render(2)` gives `"98.05%"`.
    pub fn render(self, decimals: usize) -> String {
        format!("{:.*}%", decimals, self.percent())
    }

    /// One decimal, or two when one decimal would print a misleading `.0`.
    pub fn render_auto(self) -> String {
        let one = self.render(1);
        let rounded: f64 = one.trim_end_matches('%').parse().unwrap_or(f64::NAN);
        if one.ends_with(".0%") && (rounded - self.percent()).abs() > 1e-9 {
            self.render(2)
        } else {
            one
        }
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => f.write_str(&self.render(p)),
            None => f.write_str(&self.render_auto()),
        }
    }
}

impl Serialize for Share {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Share", 2)?;
        s.serialize_field("fraction", &self.0)?;
        s.serialize_field("percent", &self.render_auto())?;
        s.end()
    }
}

/// `unit_count / contour_count`.
pub fn unit_share(unit_count: u64, contour_count: u64) -> Result<Share, AnalysisError> {
    if contour_count == 0 {
        return Err(AnalysisError::ZeroContour);
    }
    Ok(Share(unit_count as f64 / contour_count as f64))
}

/// `internal_sum / contour_count`. Engine estimates are not additive, so the
/// result may exceed 1.
pub fn coverage_ratio(internal_sum: u64, contour_count: u64) -> Result<Share, AnalysisError> {
    unit_share(internal_sum, contour_count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    /// Counts of several valid URLs were added together.
    AliasMerged,
    /// Some but not all of the unit's URLs have a measurement.
    PartialAliases,
    /// The unit redirects outside the contour domain.
    ExternalRedirect,
    /// The row itself is an external-alias unit.
    ExternalAlias,
    /// External-alias counts are part of this row's totals.
    ExternalAliasIncluded,
}

/// One unit with its merged counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitRow {
    pub url: String,
    pub entity_name: String,
    pub placement: Placement,
    pub mission: Mission,
    pub institutional_count: Option<u64>,
    pub external_count: Option<u64>,
    pub flags: BTreeSet<RowFlag>,
    /// Whether the row takes part in internal sums, rankings and correlation.
    pub counted: bool,
    /// Per-URL counts before merging.
    pub urls: Vec<UrlCounts>,
}

impl UnitRow {
    pub fn count(&self, level: MeasureLevel) -> Option<u64> {
        match level {
            MeasureLevel::Institutional => self.institutional_count,
            MeasureLevel::External => self.external_count,
        }
    }
}

/// Top `k` counted internal rows by `level`, descending, ties by URL.
pub fn rank_units(rows: &[UnitRow], level: MeasureLevel, k: usize) -> Vec<RankedRow> {
    let mut ranked: Vec<(&UnitRow, u64)> = rows
        .iter()
        .filter(|r| r.counted && r.placement.sublevel == Sublevel::Internal)
        .filter_map(|r| r.count(level).map(|c| (r, c)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.url.cmp(&b.0.url)));
    ranked
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (row, count))| RankedRow {
            rank: i + 1,
            url: row.url.clone(),
            mission: row.mission,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Consistent,
    /// The units' mentions do not account for the whole institution.
    Limitation,
    /// The units together collect more mentions than the institution.
    Anomaly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MentionConsistency {
    pub contour_mentions: u64,
    pub internal_sum_mentions: u64,
    /// Absolute difference.
    pub gap: u64,
    /// Gap relative to the contour mentions; `None` when those are zero.
    pub relative_gap: Option<f64>,
    pub severity: Severity,
}

pub fn mention_consistency(contour_mentions: u64, internal_sum_mentions: u64) -> MentionConsistency {
    let severity = match internal_sum_mentions.cmp(&contour_mentions) {
        std::cmp::Ordering::Less => Severity::Limitation,
        std::cmp::Ordering::Equal => Severity::Consistent,
        std::cmp::Ordering::Greater => Severity::Anomaly,
    };
    let gap = contour_mentions.abs_diff(internal_sum_mentions);
    MentionConsistency {
        contour_mentions,
        internal_sum_mentions,
        gap,
        relative_gap: (contour_mentions > 0).then(|| gap as f64 / contour_mentions as f64),
        severity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

/// Pearson product-moment coefficient of two equal-length series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    assert_eq!(xs.len(), ys.len(), "pearson needs paired series");
    let n = xs.len();
    if n < 3 {
        return Err(AnalysisError::InsufficientData { n });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between institutional and external counts over counted
/// internal rows that carry both. Incomplete rows are skipped, not zeroed.
pub fn correlation(rows: &[UnitRow]) -> Result<Correlation, AnalysisError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.counted && r.placement.sublevel == Sublevel::Internal)
        .filter_map(|r| Some((r.institutional_count? as f64, r.external_count? as f64)))
        .unzip();
    let n = xs.len();
    pearson(&xs, &ys).map(|r| Correlation { r, n })
}
