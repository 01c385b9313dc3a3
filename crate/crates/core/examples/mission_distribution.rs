//! Share of internal units per university mission.
//!
//! Run with `cargo run --example mission_distribution`.

use cybermap::analysis::Share;
use cybermap::taxonomy::{mission_distribution, Mission, UniversityRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/harvard.json");
    let registry = UniversityRegistry::load(path.as_ref())?;
    let distribution = mission_distribution(&registry)?;

    println!("{} core internal units", distribution.total);
    for share in &distribution.assigned {
        println!(
            "  {:<15} {:>3}  {}",
            share.mission,
            share.count,
            Share::new(share.percent / 100.0).render_auto()
        );
    }
    let research = distribution.get(Mission::Research).percent;
    let services = distribution.get(Mission::Services).percent;
    println!("research + services: {:.1}%", research + services);
    Ok(())
}
