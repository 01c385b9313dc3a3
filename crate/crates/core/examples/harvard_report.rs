//! Full analysis of the Harvard bundle: rankings, coverage, mention
//! consistency, correlation, satellites, and the hbs.edu external alias
//! reported both excluded and included.
//!
//! Run with `cargo run --example harvard_report`.

use cybermap::analysis::{build_report, render_table, PublishedFigures, ReportOptions};
use cybermap::measure::load_fixture;
use cybermap::taxonomy::UniversityRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let registry = UniversityRegistry::load(format!("{dir}/harvard.json").as_ref())?;
    let measurements = load_fixture(format!("{dir}/harvard.csv").as_ref())?;
    let published = PublishedFigures::load(format!("{dir}/published.json").as_ref())?;

    let options = ReportOptions {
        published,
        ..ReportOptions::default()
    };
    let report = build_report(&registry, &measurements, &options)?;
    print!("{}", render_table(&report));

    let included = build_report(
        &registry,
        &measurements,
        &ReportOptions {
            include_external_aliases: true,
            ..options
        },
    )?;
    let rank = |r: &cybermap::analysis::AnalysisReport| {
        r.top_institutional
            .iter()
            .find(|row| row.url == "hbs.harvard.edu")
            .map(|row| format!("rank {} with {}", row.rank, row.count))
            .unwrap_or_else(|| "outside the top".to_string())
    };
    println!("\nhbs.harvard.edu by count page: {} excluded, {} included", rank(&report), rank(&included));
    Ok(())
}
