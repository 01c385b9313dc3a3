//! Run a query plan against recorded counts and collect a failure manifest
//! for the queries that have no recording.
//!
//! Run with `cargo run --example fixture_fetch`.

use std::collections::BTreeSet;

use cybermap::measure::{fetch_plan, write_fixture, FixtureProvider, ManualClock, PacingPolicy};
use cybermap::querygen::{query_plan, IndicatorKind, QueryStyle};
use cybermap::taxonomy::UniversityRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let registry = UniversityRegistry::load(format!("{dir}/harvard_printed.json").as_ref())?;
    let provider = FixtureProvider::load(&[format!("{dir}/harvard_printed.csv")])?;

    let indicators = BTreeSet::from([IndicatorKind::CountPage, IndicatorKind::UrlMention]);
    let plan: Vec<_> = query_plan(&registry, &indicators, QueryStyle::default())
        .into_iter()
        .map(|p| p.query)
        .collect();
    let outcome = fetch_plan(&plan, &provider, &PacingPolicy::default(), &ManualClock::new())?;

    println!(
        "{} queries, {} answered, {} missing",
        plan.len(),
        outcome.set.len(),
        outcome.failures.len()
    );
    println!("\nfirst missing queries:");
    for failure in outcome.failures.iter().take(5) {
        println!("  {failure}");
    }

    let mut csv = Vec::new();
    write_fixture(&outcome.set, &mut csv)?;
    println!("\nrecorded fixture (first lines):");
    for line in String::from_utf8(csv)?.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
