use std::fmt::Write as _;
use std::str::FromStr;

use super::report::{opt, AnalysisReport};
use super::{RowFlag, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?}; expected table, csv or json")),
        }
    }
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::AliasMerged => "alias_merged",
            RowFlag::PartialAliases => "partial_aliases",
            RowFlag::ExternalRedirect => "external_redirect",
            RowFlag::ExternalAlias => "external_alias",
            RowFlag::ExternalAliasIncluded => "external_alias_included",
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "url",
    "entity_name",
    "part",
    "sublevel",
    "mission",
    "institutional_count",
    "external_count",
    "counted",
    "flags",
];

/// One line per measured unit row; absent counts are empty cells.
pub fn render_csv(report: &AnalysisReport) -> String {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    csv.write_record(CSV_HEADER).expect("writing to memory");
    for row in &report.rows {
        let flags: Vec<&str> = row.flags.iter().map(|f| f.as_str()).collect();
        let count = |c: Option<u64>| c.map(|c| c.to_string()).unwrap_or_default();
        csv.write_record([
            row.url.as_str(),
            &row.entity_name,
            &row.placement.part.to_string(),
            &row.placement.sublevel.to_string(),
            row.mission.as_str(),
            &count(row.institutional_count),
            &count(row.external_count),
            if row.counted { "true" } else { "false" },
            &flags.join(";"),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(csv.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn render_json(report: &AnalysisReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            if i > 0 {
                text.push_str("  ");
            }
            // numbers right-aligned, text left-aligned
            if i > 0 && cell.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                let _ = write!(text, "{cell:>w$}");
            } else {
                let _ = write!(text, "{cell:<w$}");
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(out, &mut header.iter().copied());
    for row in rows {
        line(out, &mut row.iter().map(String::as_str));
    }
}

/// Human-readable summary with aligned columns.
pub fn render_table(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} ({})", report.university, report.contour_url);
    let _ = writeln!(
        out,
        "contour: count page {}, mentions {}",
        opt(report.contour_institutional),
        opt(report.contour_external)
    );
    let _ = writeln!(
        out,
        "internal units counted: {}; sum count page {}, sum mentions {}",
        report.internal_units_counted, report.internal_sum_institutional, report.internal_sum_external
    );
    let share = |s: Option<super::Share>| s.map(|s| s.render(2)).unwrap_or_else(|| "-".to_string());
    let _ = writeln!(
        out,
        "coverage: count page {}, mentions {}",
        share(report.coverage_ratio),
        share(report.coverage_ratio_external)
    );
    if let Some(c) = &report.mention_consistency {
        let severity = match c.severity {
            Severity::Consistent => "consistent",
            Severity::Limitation => "limitation",
            Severity::Anomaly => "anomaly",
        };
        let _ = writeln!(out, "mention gap: {} ({severity})", c.gap);
    }
    match report.pearson_r {
        Some(r) => {
            let _ = writeln!(out, "pearson r (count page vs mentions): {r:.4} over {} units", report.pearson_n);
        }
        None => out.push_str("pearson r: unavailable\n"),
    }

    for (title, ranked) in [
        ("top units by count page", &report.top_institutional),
        ("top units by mentions", &report.top_external),
    ] {
        let _ = writeln!(out, "\n{title}");
        let rows: Vec<Vec<String>> = ranked
            .iter()
            .map(|r| {
                let share = report
                    .top_shares
                    .iter()
                    .find(|s| s.url == r.url && ranked == &report.top_institutional)
                    .map(|s| s.share.render_auto())
                    .unwrap_or_default();
                vec![r.rank.to_string(), r.url.clone(), r.mission.to_string(), r.count.to_string(), share]
            })
            .collect();
        table(&mut out, &["rank", "url", "mission", "count", "share"], &rows);
    }

    if !report.external_alias_folds.is_empty() {
        out.push_str("\nexternal aliases\n");
        let rows: Vec<Vec<String>> = report
            .external_alias_folds
            .iter()
            .map(|f| {
                vec![
                    f.unit.clone(),
                    f.alias.clone(),
                    opt(f.excluded.0),
                    opt(f.included.0),
                    opt(f.excluded.1),
                    opt(f.included.1),
                ]
            })
            .collect();
        table(
            &mut out,
            &["unit", "alias", "count_excl", "count_incl", "mentions_excl", "mentions_incl"],
            &rows,
        );
    }

    if let Some(missions) = &report.mission_distribution {
        let _ = writeln!(out, "\nmissions ({} units)", missions.total);
        let mut rows: Vec<Vec<String>> = missions
            .assigned
            .iter()
            .map(|m| vec![m.mission.to_string(), m.count.to_string(), super::Share::new(m.percent / 100.0).render_auto()])
            .collect();
        if missions.unassigned.count > 0 {
            let u = &missions.unassigned;
            rows.push(vec![
                u.mission.to_string(),
                u.count.to_string(),
                super::Share::new(u.percent / 100.0).render_auto(),
            ]);
        }
        table(&mut out, &["mission", "units", "percent"], &rows);
    }

    if !report.satellites.is_empty() {
        out.push_str("\nsatellites\n");
        let mut rows: Vec<Vec<String>> = Vec::new();
        for p in &report.satellites {
            for c in &p.contour {
                rows.push(vec![p.name.clone(), c.url.clone(), opt(c.institutional), opt(c.external)]);
            }
            rows.push(vec![
                p.name.clone(),
                format!("internal units ({})", p.internal_units),
                p.internal_sum_institutional.to_string(),
                p.internal_sum_external.to_string(),
            ]);
        }
        table(&mut out, &["platform", "url", "count_page", "url_mentions"], &rows);
    }

    if !report.diagnostics.is_empty() {
        out.push_str("\ndiagnostics\n");
        for d in &report.diagnostics {
            let _ = writeln!(out, "- {d}");
        }
    }
    out
}
