//! Describe how each internal unit's URL is built below the contour and list
//! the irregular cases.
//!
//! Run with `cargo run --example syntax_audit`.

use cybermap::taxonomy::{syntax_audit, UniversityRegistry};
use cybermap::webunits::SuffixRule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ucm_units.json");
    let registry = UniversityRegistry::load(path.as_ref())?;
    let audit = syntax_audit(&registry, &SuffixRule::embedded());

    println!("{} units under {}", audit.entries.len(), audit.contour);
    for entry in &audit.entries {
        let signature = entry.signature.map(|s| s.to_string()).unwrap_or_else(|| "unresolved".to_string());
        println!("  {:<55} {signature}", entry.url);
    }
    println!("\nmost common signatures:");
    for (signature, n) in audit.signature_frequencies.iter().take(3) {
        println!("  {n:>3} {signature}");
    }
    println!("\nmixed subdomain and directory syntax: {:?}", audit.mixed);
    Ok(())
}
