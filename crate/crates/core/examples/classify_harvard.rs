//! Place URLs in the core/satellite, contour/internal grid of a registry.
//!
//! Run with `cargo run --example classify_harvard`.

use cybermap::taxonomy::{Owner, UniversityRegistry};
use cybermap::webunits::normalize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/harvard.json");
    let registry = UniversityRegistry::load(path.as_ref())?;

    for raw in [
        "harvard.edu",
        "law.harvard.edu",
        "blogs.law.harvard.edu",
        "alumni.harvard.edu",
        "harvard.edu/about",
        "twitter.com/Harvard",
        "youtube.com/user/harvard",
        "harvard.academia.edu/Departments/Synthetic_Department_007/Documents",
        "twitter.com/someone_else",
        "mit.edu",
    ] {
        let url = normalize(raw)?;
        match registry.classify(&url) {
            Ok(placement) => {
                let owner = match placement.owner {
                    Owner::University => registry.name.clone(),
                    Owner::Platform(p) => registry.satellites[p].name.clone(),
                    other => registry.unit(other).map(|u| u.entity_name.clone()).unwrap_or_default(),
                };
                println!("{raw:<70} {}/{}  owner: {owner}", placement.part, placement.sublevel);
            }
            Err(e) => println!("{raw:<70} {e}"),
        }
    }
    Ok(())
}
