use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    correlation, coverage_ratio, mention_consistency, rank_units, unit_share, AnalysisError, MentionConsistency,
    RowFlag, Severity, Share, UnitRow,
};
use crate::measure::{FetchFailure, MeasureError, MeasurementSet};
use crate::querygen::{query_plan, IndicatorKind, QueryStyle};
use crate::taxonomy::{
    mission_distribution, validate_registry, InternalUnit, MeasureLevel, Mission, MissionDistribution, Part,
    Placement, Sublevel, UniversityRegistry, Owner,
};
use crate::webunits::NormalizedUrl;

/// Figures printed elsewhere for the same dataset, checked against what the
/// measurements actually give.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedFigures {
    /// Internal count-page sum over contour count page, as a fraction.
    pub coverage_ratio: Option<f64>,
    pub pearson_r: Option<f64>,
}

impl PublishedFigures {
    pub const COVERAGE_TOLERANCE: f64 = 1e-4;
    pub const PEARSON_TOLERANCE: f64 = 5e-3;

    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    pub top_k: usize,
    pub include_external_aliases: bool,
    pub allow_partial: bool,
    pub style: QueryStyle,
    pub published: PublishedFigures,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            top_k: 25,
            include_external_aliases: false,
            allow_partial: false,
            style: QueryStyle::default(),
            published: PublishedFigures::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlCounts {
    pub url: String,
    pub institutional: Option<u64>,
    pub external: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedRow {
    pub rank: usize,
    pub url: String,
    pub mission: Mission,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitShare {
    pub url: String,
    pub share: Share,
}

/// Counts of a unit that redirects to an external-alias unit, without and
/// with the alias folded in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExternalAliasFold {
    pub unit: String,
    pub alias: String,
    pub excluded: (Option<u64>, Option<u64>),
    pub included: (Option<u64>, Option<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatelliteCounts {
    pub contour: Vec<UrlCounts>,
    pub units: Vec<UnitRow>,
}

/// Output of [`merge_aliases`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergedCounts {
    pub contour: UrlCounts,
    /// One row per core unit, in registry order.
    pub core: Vec<UnitRow>,
    pub satellites: Vec<SatelliteCounts>,
    pub external_alias_folds: Vec<ExternalAliasFold>,
    pub missing: Vec<FetchFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformSummary {
    pub name: String,
    pub platform_domain: String,
    pub contour: Vec<UrlCounts>,
    pub contour_institutional: Option<u64>,
    pub contour_external: Option<u64>,
    pub internal_units: usize,
    pub internal_sum_institutional: u64,
    pub internal_sum_external: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Diagnostic {
    MissingMeasurements {
        count: usize,
        queries: Vec<String>,
    },
    ContourUnmeasured {
        level: MeasureLevel,
    },
    CoverageExceedsContour {
        level: MeasureLevel,
        ratio: Share,
    },
    PublishedFigureMismatch {
        figure: String,
        published: f64,
        computed: f64,
        note: String,
    },
    MentionConsistency(MentionConsistency),
    CorrelationUnavailable {
        reason: String,
    },
    NestedShare {
        unit: String,
        within: String,
        level: MeasureLevel,
        share: Share,
    },
    ExternalRedirect {
        unit: String,
        target: String,
        alias_registered: bool,
    },
    ExternalAliasExcluded {
        unit: String,
        institutional: Option<u64>,
        external: Option<u64>,
    },
    UnassignedMission {
        units: Vec<String>,
    },
    MissionDistributionUnavailable,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::MissingMeasurements { count, .. } => write!(f, "{count} measurements missing; report is partial"),
            Diagnostic::ContourUnmeasured { level } => write!(f, "contour has no {level:?} measurement"),
            Diagnostic::CoverageExceedsContour { level, ratio } => write!(
                f,
                "{level:?} internal sum is {ratio:.2} of the contour; engine estimates are not additive"
            ),
            Diagnostic::PublishedFigureMismatch {
                figure,
                published,
                computed,
                note,
            } => write!(f, "{figure}: published {published}, computed {computed:.6}; {note}"),
            Diagnostic::MentionConsistency(c) => write!(
                f,
                "mention consistency: contour {} vs internal sum {}, gap {} ({:?})",
                c.contour_mentions, c.internal_sum_mentions, c.gap, c.severity
            ),
            Diagnostic::CorrelationUnavailable { reason } => write!(f, "correlation unavailable: {reason}"),
            Diagnostic::NestedShare {
                unit,
                within,
                level,
                share,
            } => write!(f, "{unit} holds {share:.2} of {within} ({level:?})"),
            Diagnostic::ExternalRedirect {
                unit,
                target,
                alias_registered,
            } => write!(
                f,
                "{unit} redirects outside the contour to {target}{}",
                if *alias_registered { " (registered external alias)" } else { "" }
            ),
            Diagnostic::ExternalAliasExcluded {
                unit,
                institutional,
                external,
            } => write!(
                f,
                "external alias {unit} excluded from totals (count page {}, mentions {})",
                opt(*institutional),
                opt(*external)
            ),
            Diagnostic::UnassignedMission { units } => {
                write!(f, "{} units have no mission: {}", units.len(), units.join(", "))
            }
            Diagnostic::MissionDistributionUnavailable => write!(f, "no core internal units for a mission distribution"),
        }
    }
}

pub(crate) fn opt(value: Option<u64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_else(|| "-".to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub university: String,
    pub contour_url: String,
    /// Core internal rows in registry order, then satellite internal rows.
    pub rows: Vec<UnitRow>,
    pub contour_institutional: Option<u64>,
    pub contour_external: Option<u64>,
    pub internal_units_counted: usize,
    pub internal_sum_institutional: u64,
    pub internal_sum_external: u64,
    pub coverage_ratio: Option<Share>,
    pub coverage_ratio_external: Option<Share>,
    pub top_institutional: Vec<RankedRow>,
    pub top_external: Vec<RankedRow>,
    /// Share of the contour count page held by each top institutional unit.
    pub top_shares: Vec<UnitShare>,
    pub external_alias_folds: Vec<ExternalAliasFold>,
    pub mission_distribution: Option<MissionDistribution>,
    pub mention_consistency: Option<MentionConsistency>,
    pub pearson_r: Option<f64>,
    pub pearson_n: usize,
    pub satellites: Vec<PlatformSummary>,
    pub diagnostics: Vec<Diagnostic>,
}

impl AnalysisReport {
    pub fn row(&self, url: &str) -> Option<&UnitRow> {
        self.rows.iter().find(|r| r.url == url)
    }

    pub fn platform(&self, name: &str) -> Option<&PlatformSummary> {
        self.satellites.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn core_rows(&self) -> impl Iterator<Item = &UnitRow> {
        self.rows.iter().filter(|r| r.placement.part == Part::Core)
    }
}

fn add(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
    }
}

type Lookup = HashMap<(NormalizedUrl, IndicatorKind), Option<u64>>;

fn url_counts(lookup: &Lookup, url: &NormalizedUrl) -> UrlCounts {
    let get = |indicator| lookup.get(&(url.clone(), indicator)).copied().flatten();
    UrlCounts {
        url: url.to_string(),
        institutional: get(IndicatorKind::CountPage),
        external: get(IndicatorKind::UrlMention),
    }
}

fn unit_row(lookup: &Lookup, unit: &InternalUnit, placement: Placement) -> UnitRow {
    let urls: Vec<UrlCounts> = unit.urls().map(|u| url_counts(lookup, u)).collect();
    let institutional = urls.iter().fold(None, |acc, u| add(acc, u.institutional));
    let external = urls.iter().fold(None, |acc, u| add(acc, u.external));
    let mut flags = BTreeSet::new();
    if urls.len() > 1 {
        flags.insert(RowFlag::AliasMerged);
        let measured = urls.iter().filter(|u| u.institutional.is_some() || u.external.is_some()).count();
        if measured > 0 && measured < urls.len() {
            flags.insert(RowFlag::PartialAliases);
        }
    }
    UnitRow {
        url: unit.url.to_string(),
        entity_name: unit.entity_name.clone(),
        placement,
        mission: unit.mission,
        institutional_count: institutional,
        external_count: external,
        flags,
        counted: true,
        urls,
    }
}

/// Merge the counts of every unit's URL and aliases.
///
/// Units redirecting outside the contour are flagged. When the redirect
/// target is a registered external-alias unit, its counts are folded into
/// the redirecting unit only if `include_external_aliases` is set; both
/// totals are reported either way. Missing measurements are listed, never
/// read as zero.
pub fn merge_aliases(registry: &UniversityRegistry, measurements: &MeasurementSet, options: &ReportOptions) -> MergedCounts {
    let indicators = BTreeSet::from([IndicatorKind::CountPage, IndicatorKind::UrlMention]);
    let plan = query_plan(registry, &indicators, options.style);
    let mut lookup: Lookup = HashMap::with_capacity(plan.len());
    let mut missing = Vec::new();
    for planned in &plan {
        let count = measurements.count(&planned.query);
        if count.is_none() {
            missing.push(FetchFailure {
                query_id: planned.query.id.clone(),
                rendered_query: planned.query.rendered.clone(),
                error: MeasureError::MissingFixture {
                    query_id: planned.query.id.clone(),
                    rendered_query: planned.query.rendered.clone(),
                },
            });
        }
        lookup.insert((planned.unit_url.clone(), planned.query.indicator), count);
    }

    let contour = &registry.contour_url;
    let mut core: Vec<UnitRow> = registry
        .internal_units
        .iter()
        .enumerate()
        .map(|(i, unit)| {
            let placement = Placement::new(Part::Core, Sublevel::Internal, Owner::CoreUnit(i));
            let mut row = unit_row(&lookup, unit, placement);
            if unit.external_alias {
                row.flags.insert(RowFlag::ExternalAlias);
                row.counted = options.include_external_aliases;
            }
            if unit.redirect_target.as_ref().is_some_and(|t| !t.is_within(contour)) {
                row.flags.insert(RowFlag::ExternalRedirect);
            }
            row
        })
        .collect();

    let mut folds = Vec::new();
    for (i, unit) in registry.internal_units.iter().enumerate() {
        let Some(target) = unit.redirect_target.as_ref().filter(|t| !t.is_within(contour)) else {
            continue;
        };
        let Some(alias) = registry
            .internal_units
            .iter()
            .position(|u| u.external_alias && u.urls().any(|x| x == target))
        else {
            continue;
        };
        if alias == i {
            continue;
        }
        let (inst, ext) = (core[i].institutional_count, core[i].external_count);
        let (alias_inst, alias_ext) = (core[alias].institutional_count, core[alias].external_count);
        let included = (add(inst, alias_inst), add(ext, alias_ext));
        folds.push(ExternalAliasFold {
            unit: core[i].url.clone(),
            alias: core[alias].url.clone(),
            excluded: (inst, ext),
            included,
        });
        if options.include_external_aliases {
            core[i].institutional_count = included.0;
            core[i].external_count = included.1;
            core[i].flags.insert(RowFlag::ExternalAliasIncluded);
            core[alias].flags.insert(RowFlag::ExternalAliasIncluded);
            // folded into the redirecting unit, so not counted twice
            core[alias].counted = false;
        }
    }

    let satellites = registry
        .satellites
        .iter()
        .enumerate()
        .map(|(p, sat)| SatelliteCounts {
            contour: sat.contour_urls().map(|u| url_counts(&lookup, u)).collect(),
            units: sat
                .internal_units
                .iter()
                .enumerate()
                .map(|(u, unit)| {
                    let owner = Owner::SatelliteUnit { platform: p, unit: u };
                    unit_row(&lookup, unit, Placement::new(Part::Satellite, Sublevel::Internal, owner))
                })
                .collect(),
        })
        .collect();

    MergedCounts {
        contour: url_counts(&lookup, contour),
        core,
        satellites,
        external_alias_folds: folds,
        missing,
    }
}

/// Build the full report for a registry and its measurements.
pub fn build_report(
    registry: &UniversityRegistry,
    measurements: &MeasurementSet,
    options: &ReportOptions,
) -> Result<AnalysisReport, AnalysisError> {
    let violations = validate_registry(registry);
    if !violations.is_empty() {
        return Err(AnalysisError::InvalidRegistry(violations));
    }

    let merged = merge_aliases(registry, measurements, options);
    let mut diagnostics = Vec::new();
    if !merged.missing.is_empty() {
        if !options.allow_partial {
            return Err(AnalysisError::MissingMeasurements(merged.missing));
        }
        diagnostics.push(Diagnostic::MissingMeasurements {
            count: merged.missing.len(),
            queries: merged.missing.iter().map(|m| m.rendered_query.clone()).collect(),
        });
    }

    let contour_institutional = merged.contour.institutional;
    let contour_external = merged.contour.external;
    if contour_institutional.is_none() {
        diagnostics.push(Diagnostic::ContourUnmeasured {
            level: MeasureLevel::Institutional,
        });
    }
    if contour_external.is_none() {
        diagnostics.push(Diagnostic::ContourUnmeasured {
            level: MeasureLevel::External,
        });
    }

    let core_rows = &merged.core;
    let counted: Vec<&UnitRow> = core_rows.iter().filter(|r| r.counted).collect();
    let internal_sum_institutional: u64 = counted.iter().filter_map(|r| r.institutional_count).sum();
    let internal_sum_external: u64 = counted.iter().filter_map(|r| r.external_count).sum();

    let ratio = |sum, contour: Option<u64>| contour.and_then(|c| coverage_ratio(sum, c).ok());
    let coverage = ratio(internal_sum_institutional, contour_institutional);
    let coverage_external = ratio(internal_sum_external, contour_external);
    for (level, share) in [
        (MeasureLevel::Institutional, coverage),
        (MeasureLevel::External, coverage_external),
    ] {
        if let Some(share) = share.filter(|s| s.fraction() > 1.0) {
            diagnostics.push(Diagnostic::CoverageExceedsContour { level, ratio: share });
        }
    }
    if let (Some(published), Some(computed)) = (options.published.coverage_ratio, coverage) {
        if (published - computed.fraction()).abs() > PublishedFigures::COVERAGE_TOLERANCE {
            diagnostics.push(Diagnostic::PublishedFigureMismatch {
                figure: "coverage_ratio".to_string(),
                published,
                computed: computed.fraction(),
                note: format!(
                    "published {} is not reproducible from its operands {internal_sum_institutional} / {}",
                    Share::new(published).render(2),
                    contour_institutional.unwrap_or(0)
                ),
            });
        }
    }

    let top_institutional = rank_units(core_rows, MeasureLevel::Institutional, options.top_k);
    let top_external = rank_units(core_rows, MeasureLevel::External, options.top_k);
    let top_shares = match contour_institutional {
        Some(c) if c > 0 => top_institutional
            .iter()
            .map(|r| UnitShare {
                url: r.url.clone(),
                share: unit_share(r.count, c).expect("contour is positive"),
            })
            .collect(),
        _ => Vec::new(),
    };

    diagnostics.extend(nested_shares(registry, core_rows));

    for (unit, row) in registry.internal_units.iter().zip(core_rows) {
        if let Some(target) = unit.redirect_target.as_ref().filter(|t| !t.is_within(&registry.contour_url)) {
            diagnostics.push(Diagnostic::ExternalRedirect {
                unit: row.url.clone(),
                target: target.to_string(),
                alias_registered: merged.external_alias_folds.iter().any(|f| f.unit == row.url),
            });
        }
        if row.flags.contains(&RowFlag::ExternalAlias) && !options.include_external_aliases {
            diagnostics.push(Diagnostic::ExternalAliasExcluded {
                unit: row.url.clone(),
                institutional: row.institutional_count,
                external: row.external_count,
            });
        }
    }

    let consistency = contour_external.map(|c| mention_consistency(c, internal_sum_external));
    if let Some(c) = consistency.filter(|c| c.severity != Severity::Consistent) {
        diagnostics.push(Diagnostic::MentionConsistency(c));
    }

    let (pearson_r, pearson_n) = match correlation(core_rows) {
        Ok(c) => (Some(c.r), c.n),
        Err(err) => {
            diagnostics.push(Diagnostic::CorrelationUnavailable { reason: err.to_string() });
            (None, 0)
        }
    };
    if let (Some(published), Some(computed)) = (options.published.pearson_r, pearson_r) {
        if (published - computed).abs() > PublishedFigures::PEARSON_TOLERANCE {
            diagnostics.push(Diagnostic::PublishedFigureMismatch {
                figure: "pearson_r".to_string(),
                published,
                computed,
                note: format!("published r is not reproduced by these {pearson_n} pairs"),
            });
        }
    }

    let missions = mission_distribution(registry).ok();
    match &missions {
        None => diagnostics.push(Diagnostic::MissionDistributionUnavailable),
        Some(_) => {
            let units: Vec<String> = registry
                .core_units()
                .filter(|u| u.mission == Mission::Unassigned)
                .map(|u| u.url.to_string())
                .collect();
            if !units.is_empty() {
                diagnostics.push(Diagnostic::UnassignedMission { units });
            }
        }
    }

    let satellites = registry
        .satellites
        .iter()
        .zip(&merged.satellites)
        .map(|(sat, counts)| PlatformSummary {
            name: sat.name.clone(),
            platform_domain: sat.platform_domain.to_string(),
            contour_institutional: counts.contour.iter().fold(None, |a, c| add(a, c.institutional)),
            contour_external: counts.contour.iter().fold(None, |a, c| add(a, c.external)),
            contour: counts.contour.clone(),
            internal_units: counts.units.len(),
            internal_sum_institutional: counts.units.iter().filter_map(|r| r.institutional_count).sum(),
            internal_sum_external: counts.units.iter().filter_map(|r| r.external_count).sum(),
        })
        .collect();

    let mut rows = merged.core;
    let internal_units_counted = rows.iter().filter(|r| r.counted).count();
    rows.extend(merged.satellites.into_iter().flat_map(|s| s.units));
    rows.retain(|r| r.institutional_count.is_some() || r.external_count.is_some());

    Ok(AnalysisReport {
        university: registry.name.clone(),
        contour_url: registry.contour_url.to_string(),
        rows,
        contour_institutional,
        contour_external,
        internal_units_counted,
        internal_sum_institutional,
        internal_sum_external,
        coverage_ratio: coverage,
        coverage_ratio_external: coverage_external,
        top_institutional,
        top_external,
        top_shares,
        external_alias_folds: merged.external_alias_folds,
        mission_distribution: missions,
        mention_consistency: consistency,
        pearson_r,
        pearson_n,
        satellites,
        diagnostics,
    })
}

/// Share of each explicitly declared nested unit within its nearest
/// declared ancestor. The child stays in the ancestor's totals.
fn nested_shares(registry: &UniversityRegistry, rows: &[UnitRow]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (c, child) in registry.internal_units.iter().enumerate() {
        let parent = registry
            .internal_units
            .iter()
            .enumerate()
            .filter(|(p, unit)| *p != c && child.url != unit.url && child.url.is_within(&unit.url))
            .max_by_key(|(_, unit)| unit.url.depth());
        let Some((p, _)) = parent else { continue };
        for level in [MeasureLevel::Institutional, MeasureLevel::External] {
            if let (Some(part), Some(whole)) = (rows[c].count(level), rows[p].count(level)) {
                if let Ok(share) = unit_share(part, whole) {
                    out.push(Diagnostic::NestedShare {
                        unit: rows[c].url.clone(),
                        within: rows[p].url.clone(),
                        level,
                        share,
                    });
                }
            }
        }
    }
    out
}
