//! Per-host pacing and rate-limit backoff, observed on a manual clock, plus
//! the live provider's count extraction against a canned response.
//!
//! Run with `cargo run --example pacing`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use cybermap::measure::{
    fetch_plan, Clock, HttpResponse, HttpTransport, LiveConfig, LiveProvider, ManualClock, MeasureError, PacingPolicy,
    Provenance, Provider,
};
use cybermap::querygen::{count_page_query, url_mention_query, Query};
use cybermap::webunits::normalize;

/// Answers every query with 100 but throttles every third request.
struct Throttled<'a> {
    calls: AtomicUsize,
    clock: &'a ManualClock,
}

impl Provider for Throttled<'_> {
    fn provenance(&self) -> Provenance {
        Provenance::Live
    }

    fn pacing_key(&self, _query: &Query) -> Option<String> {
        Some("search.example.com".to_string())
    }

    fn count(&self, query: &Query) -> Result<u64, MeasureError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        let at = self.clock.now().as_secs();
        if n.is_multiple_of(3) {
            println!("  t={at:>3}s  {:<40} -> rate limited", query.rendered);
            return Err(MeasureError::RateLimited);
        }
        self.clock.advance(Duration::from_secs(1));
        println!("  t={at:>3}s  {:<40} -> 100", query.rendered);
        Ok(100)
    }
}

struct Canned;

impl HttpTransport for Canned {
    fn get(&self, url: &str, _headers: &[(String, String)]) -> Result<HttpResponse, String> {
        println!("  GET {url}");
        Ok(HttpResponse {
            status: 200,
            body: "<div id=result-stats>About 38,470,780 results</div>".to_string(),
        })
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let contour = normalize("harvard.edu")?;
    let plan: Vec<Query> = ["mcz", "law", "fas", "lib"]
        .iter()
        .map(|u| normalize(&format!("{u}.harvard.edu")))
        .collect::<Result<Vec<_>, _>>()?
        .iter()
        .flat_map(|u| [count_page_query(u), url_mention_query(u, &contour)])
        .collect();

    let clock = ManualClock::new();
    let provider = Throttled {
        calls: AtomicUsize::new(0),
        clock: &clock,
    };
    let policy = PacingPolicy {
        min_interval: Duration::from_secs(2),
        ..PacingPolicy::default()
    };
    println!("paced run, 2 s between requests, 1 s per request:");
    let outcome = fetch_plan(&plan, &provider, &policy, &clock)?;
    println!("{} recorded, {} failed, finished at t={}s", outcome.set.len(), outcome.failures.len(), clock.now().as_secs());

    println!("\nlive provider against a canned page:");
    let live = LiveProvider::new(
        LiveConfig {
            endpoint: "https://search.example.com/search?q={query}".to_string(),
            ..LiveConfig::default()
        },
        Canned,
    )?;
    let count = live.count(&url_mention_query(&contour, &contour))?;
    println!("  extracted count: {count}");
    Ok(())
}
