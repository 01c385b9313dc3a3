//! Build the search-operator query plan for a registry, in both the current
//! and the older printed renderings.
//!
//! Run with `cargo run --example query_plan`.

use std::collections::BTreeSet;

use cybermap::querygen::{query_plan, IndicatorKind, QueryStyle};
use cybermap::taxonomy::UniversityRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ucm_units.json");
    let registry = UniversityRegistry::load(path.as_ref())?;
    let all: BTreeSet<IndicatorKind> = IndicatorKind::ALL.into_iter().collect();

    let plan = query_plan(&registry, &all, QueryStyle::default());
    println!("{} queries for {} units", plan.len(), registry.internal_units.len());
    for planned in plan.iter().take(12) {
        println!(
            "{}  {:<9} {:<8} {:<22} {}",
            planned.query.id,
            planned.placement.part,
            planned.placement.sublevel,
            planned.query.indicator.as_str(),
            planned.query.rendered
        );
    }

    let legacy = QueryStyle {
        legacy_table6: true,
        legacy_linkdomain: true,
    };
    println!("\nolder renderings for the satellite units:");
    for planned in query_plan(&registry, &all, legacy)
        .iter()
        .filter(|p| p.placement.part == cybermap::taxonomy::Part::Satellite)
    {
        let note = if planned.query.deprecated_operator() { "  (deprecated operator)" } else { "" };
        println!("  {}{note}", planned.query.rendered);
    }
    Ok(())
}
