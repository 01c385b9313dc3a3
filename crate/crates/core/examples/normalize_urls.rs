//! Normalise raw URLs and split them into registrable domain, subdomain
//! labels and path segments.
//!
//! Run with `cargo run --example normalize_urls`.

use cybermap::webunits::{normalize, SuffixRule};

fn main() {
    let rule = SuffixRule::embedded();
    let raw = [
        "http://www.harvard.edu/",
        "HTTPS://Blogs.Law.Harvard.edu",
        "ucm.es/centros/webs/euenfer/",
        "http://www.ucm.es/centros/webs/d168",
        "linneo.bio.ucm.es/balaguer/EvoEco/",
        "www.ox.ac.uk/research",
        "https://twitter.com/Harvard",
        "not a url",
    ];

    for input in raw {
        match normalize(input) {
            Ok(url) => {
                let locus = rule.parse_locus(&url);
                match locus {
                    Ok(locus) => println!(
                        "{input:<40} -> {url:<36} registrable={}.{} subdomains={:?} path={:?} level={}",
                        locus.registrable.second_level,
                        locus.registrable.tld,
                        locus.subdomain_labels,
                        locus.path_segments,
                        locus.subdomain_level(),
                    ),
                    Err(e) => println!("{input:<40} -> {url:<36} ({e})"),
                }
            }
            Err(e) => println!("{input:<40} !! {e}"),
        }
    }

    let law = normalize("law.harvard.edu").unwrap();
    let blogs = normalize("blogs.law.harvard.edu").unwrap();
    println!("\nblogs.law within law: {}", blogs.is_within(&law));
    println!("law within blogs.law: {}", law.is_within(&blogs));
}
