//! Turning queries into result counts.
//!
//! A [`Provider`] answers one query at a time. [`FixtureProvider`] is a pure
//! lookup over a recorded [`MeasurementSet`]; [`LiveProvider`] asks a search
//! results endpoint over HTTP. [`fetch_plan`] drives a whole plan through a
//! provider under a per-host [`PacingPolicy`].
//!
//! Counts are stored exactly as reported. A zero is an observation; a
//! missing record is not.

mod fixture;
mod live;
mod pacing;

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::querygen::{Query, QueryId};

pub use fixture::{load_fixture, read_fixture, write_fixture, FixtureProvider};
#[cfg(feature = "live")]
pub use live::ReqwestTransport;
pub use live::{HttpResponse, HttpTransport, LiveConfig, LiveProvider};
pub use pacing::{Clock, ManualClock, Pacer, PacingPolicy, SystemClock};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(rename_all = "snake_case", tag = "error")]
pub enum MeasureError {
    #[error("no fixture record for {rendered_query} ({query_id})")]
    MissingFixture { query_id: QueryId, rendered_query: String },
    #[error("provider unavailable: {reason}")]
    ProviderUnavailable { reason: String },
    #[error("could not extract a result count: {reason}")]
    Unparseable { reason: String },
    #[error("provider is rate limiting requests")]
    RateLimited,
    #[error("configuration error: {reason}")]
    Config { reason: String },
    #[error("fixture file: {reason}")]
    Fixture { reason: String },
}

impl MeasureError {
    pub(crate) fn config(reason: impl fmt::Display) -> Self {
        MeasureError::Config { reason: reason.to_string() }
    }

    pub(crate) fn fixture(reason: impl fmt::Display) -> Self {
        MeasureError::Fixture { reason: reason.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasurementRecord {
    pub query_id: QueryId,
    pub rendered_query: String,
    pub count: u64,
    pub provenance: Provenance,
    /// UTC seconds since the Unix epoch.
    pub observed_at: u64,
}

/// Records keyed by query id, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MeasurementSet {
    pub source: String,
    records: IndexMap<QueryId, MeasurementRecord>,
}

impl MeasurementSet {
    pub fn new(source: impl Into<String>) -> Self {
        MeasurementSet {
            source: source.into(),
            records: IndexMap::new(),
        }
    }

    /// Add a record; a second record for the same query id is refused.
    pub fn insert(&mut self, record: MeasurementRecord) -> Result<(), MeasureError> {
        if self.records.contains_key(&record.query_id) {
            return Err(MeasureError::fixture(format!(
                "duplicate record for query id {}",
                record.query_id
            )));
        }
        self.records.insert(record.query_id.clone(), record);
        Ok(())
    }

    /// Merge another set into this one. Conflicting duplicates are an error;
    /// identical counts for the same id are accepted once.
    pub fn extend(&mut self, other: MeasurementSet) -> Result<(), MeasureError> {
        for (id, record) in other.records {
            match self.records.get(&id) {
                Some(existing) if existing.count == record.count => {}
                Some(existing) => {
                    return Err(MeasureError::fixture(format!(
                        "conflicting counts for {}: {} vs {}",
                        existing.rendered_query, existing.count, record.count
                    )))
                }
                None => {
                    self.records.insert(id, record);
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &QueryId) -> Option<&MeasurementRecord> {
        self.records.get(id)
    }

    pub fn count(&self, query: &Query) -> Option<u64> {
        self.get(&query.id).map(|r| r.count)
    }

    pub fn records(&self) -> impl Iterator<Item = &MeasurementRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A source of result counts.
pub trait Provider: Send + Sync {
    fn provenance(&self) -> Provenance;

    /// Host that pacing applies to, or `None` when requests cost nothing.
    fn pacing_key(&self, query: &Query) -> Option<String>;

    fn count(&self, query: &Query) -> Result<u64, MeasureError>;
}

/// Resolve a single query.
pub fn fetch(query: &Query, provider: &dyn Provider, clock: &dyn Clock) -> Result<MeasurementRecord, MeasureError> {
    let count = provider.count(query)?;
    Ok(MeasurementRecord {
        query_id: query.id.clone(),
        rendered_query: query.rendered.clone(),
        count,
        provenance: provider.provenance(),
        observed_at: clock.unix_seconds(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchFailure {
    pub query_id: QueryId,
    pub rendered_query: String,
    pub error: MeasureError,
}

impl fmt::Display for FetchFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.query_id, self.rendered_query, self.error)
    }
}

/// Records that were fetched plus a manifest of the queries that failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchOutcome {
    pub set: MeasurementSet,
    pub failures: Vec<FetchFailure>,
}

impl FetchOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Fetch every query in `plan`.
///
/// Queries sharing a pacing host run sequentially, spaced by the policy;
/// different hosts run on separate threads. Output keeps plan order, and a
/// query id repeated in the plan is fetched once. Only configuration errors
/// abort the run; everything else lands in the failure manifest.
pub fn fetch_plan(
    plan: &[Query],
    provider: &dyn Provider,
    policy: &PacingPolicy,
    clock: &dyn Clock,
) -> Result<FetchOutcome, MeasureError> {
    let mut unique: Vec<&Query> = Vec::with_capacity(plan.len());
    let mut seen = std::collections::HashSet::new();
    for query in plan {
        if seen.insert(&query.id) {
            unique.push(query);
        }
    }

    let mut lanes: IndexMap<Option<String>, Vec<usize>> = IndexMap::new();
    for (i, query) in unique.iter().enumerate() {
        lanes.entry(provider.pacing_key(query)).or_default().push(i);
    }

    let pacer = Pacer::new(policy.clone());
    let run_lane = |key: &Option<String>, indices: &[usize]| -> Vec<(usize, Result<MeasurementRecord, MeasureError>)> {
        let mut results = Vec::with_capacity(indices.len());
        for &i in indices {
            let query = unique[i];
            let result = match key {
                Some(host) => pacer.run(host, clock, || fetch(query, provider, clock)),
                None => fetch(query, provider, clock),
            };
            let abort = matches!(result, Err(MeasureError::Config { .. }));
            results.push((i, result));
            if abort {
                break;
            }
        }
        results
    };

    let mut results: HashMap<usize, Result<MeasurementRecord, MeasureError>> = HashMap::new();
    if lanes.len() <= 1 {
        for (key, indices) in &lanes {
            results.extend(run_lane(key, indices));
        }
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = lanes
                .iter()
                .map(|(key, indices)| scope.spawn(|| run_lane(key, indices)))
                .collect();
            for handle in handles {
                results.extend(handle.join().expect("fetch lane panicked"));
            }
        });
    }

    let mut outcome = FetchOutcome {
        set: MeasurementSet::new(format!("{:?} provider", provider.provenance()).to_lowercase()),
        failures: Vec::new(),
    };
    for (i, query) in unique.iter().enumerate() {
        match results.remove(&i) {
            Some(Ok(record)) => outcome.set.insert(record)?,
            Some(Err(err @ MeasureError::Config { .. })) => return Err(err),
            Some(Err(error)) => outcome.failures.push(FetchFailure {
                query_id: query.id.clone(),
                rendered_query: query.rendered.clone(),
                error,
            }),
            // Lane stopped on a configuration error already reported above.
            None => {}
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    use super::*;
    use crate::querygen::count_page_query;
    use crate::webunits::normalize;

    fn q(url: &str) -> Query {
        count_page_query(&normalize(url).unwrap())
    }

    fn record(query: &Query, count: u64) -> MeasurementRecord {
        MeasurementRecord {
            query_id: query.id.clone(),
            rendered_query: query.rendered.clone(),
            count,
            provenance: Provenance::Fixture,
            observed_at: 0,
        }
    }

    fn fixture(entries: &[(&str, u64)]) -> FixtureProvider {
        let mut set = MeasurementSet::new("test");
        for (url, count) in entries {
            set.insert(record(&q(url), *count)).unwrap();
        }
        FixtureProvider::new(set)
    }

    #[test]
    fn fetch_from_fixture() {
        let provider = fixture(&[("harvard.edu", 7_615_804), ("youtube.com/harvard", 0)]);
        let clock = ManualClock::new();
        assert_eq!(fetch(&q("harvard.edu"), &provider, &clock).unwrap().count, 7_615_804);
        let zero = fetch(&q("youtube.com/harvard"), &provider, &clock).unwrap();
        assert_eq!(zero.count, 0);
        assert_eq!(zero.rendered_query, "site:youtube.com/harvard");
        assert!(matches!(
            fetch(&q("yale.edu"), &provider, &clock),
            Err(MeasureError::MissingFixture { .. })
        ));
    }

    #[test]
    fn empty_plan() {
        let outcome = fetch_plan(&[], &fixture(&[]), &PacingPolicy::default(), &ManualClock::new()).unwrap();
        assert!(outcome.set.is_empty());
        assert!(outcome.is_complete());
    }

    #[test]
    fn partial_results_are_kept() {
        let provider = fixture(&[("a.edu", 1), ("c.edu", 3)]);
        let plan = [q("a.edu"), q("b.edu"), q("c.edu")];
        let outcome = fetch_plan(&plan, &provider, &PacingPolicy::default(), &ManualClock::new()).unwrap();
        assert_eq!(outcome.set.len(), 2);
        assert_eq!(outcome.failures.len(), 1);
        assert_eq!(outcome.failures[0].rendered_query, "site:b.edu");
        assert!(matches!(outcome.failures[0].error, MeasureError::MissingFixture { .. }));
    }

    #[test]
    fn repeated_query_fetched_once() {
        let provider = fixture(&[("a.edu", 1)]);
        let plan = [q("a.edu"), q("a.edu")];
        let outcome = fetch_plan(&plan, &provider, &PacingPolicy::default(), &ManualClock::new()).unwrap();
        assert_eq!(outcome.set.len(), 1);
    }

    #[test]
    fn duplicate_insert_refused() {
        let mut set = MeasurementSet::new("x");
        set.insert(record(&q("a.edu"), 1)).unwrap();
        assert!(set.insert(record(&q("a.edu"), 2)).is_err());
    }

    #[test]
    fn extend_accepts_agreeing_duplicates_only() {
        let mut a = MeasurementSet::new("a");
        a.insert(record(&q("a.edu"), 1)).unwrap();
        let mut b = MeasurementSet::new("b");
        b.insert(record(&q("a.edu"), 1)).unwrap();
        b.insert(record(&q("b.edu"), 2)).unwrap();
        a.extend(b).unwrap();
        assert_eq!(a.len(), 2);
        let mut c = MeasurementSet::new("c");
        c.insert(record(&q("b.edu"), 5)).unwrap();
        assert!(a.extend(c).is_err());
    }

    /// Two hosts, throttled once, recording every call time.
    struct Scripted {
        calls: std::sync::Mutex<Vec<(String, Duration)>>,
        throttle_once: AtomicUsize,
        clock: ManualClock,
    }

    impl Provider for Scripted {
        fn provenance(&self) -> Provenance {
            Provenance::Live
        }

        fn pacing_key(&self, query: &Query) -> Option<String> {
            Some(if query.rendered.contains("a.edu") { "engine-a" } else { "engine-b" }.to_string())
        }

        fn count(&self, query: &Query) -> Result<u64, MeasureError> {
            let host = self.pacing_key(query).unwrap();
            self.calls.lock().unwrap().push((host, self.clock.now()));
            if query.rendered == "site:a.edu/2" && self.throttle_once.fetch_add(1, Ordering::SeqCst) == 0 {
                return Err(MeasureError::RateLimited);
            }
            if query.rendered.contains("broken") {
                return Err(MeasureError::config("bad endpoint"));
            }
            Ok(query.rendered.len() as u64)
        }
    }

    #[test]
    fn pacing_and_backoff_per_host() {
        let clock = ManualClock::new();
        let provider = Scripted {
            calls: Default::default(),
            throttle_once: AtomicUsize::new(0),
            clock: clock.clone(),
        };
        let policy = PacingPolicy {
            min_interval: Duration::from_secs(2),
            max_retries: 3,
            backoff_base: Duration::from_secs(4),
            backoff_max: Duration::from_secs(60),
        };
        let plan = [q("a.edu/1"), q("b.edu/1"), q("a.edu/2"), q("b.edu/2"), q("a.edu/3")];
        let outcome = fetch_plan(&plan, &provider, &policy, &clock).unwrap();
        assert!(outcome.is_complete());
        let rendered: Vec<&str> = outcome.set.records().map(|r| r.rendered_query.as_str()).collect();
        assert_eq!(rendered, ["site:a.edu/1", "site:b.edu/1", "site:a.edu/2", "site:b.edu/2", "site:a.edu/3"]);

        let calls = provider.calls.lock().unwrap();
        for host in ["engine-a", "engine-b"] {
            let times: Vec<Duration> = calls.iter().filter(|(h, _)| h == host).map(|(_, t)| *t).collect();
            for pair in times.windows(2) {
                assert!(pair[1] - pair[0] >= policy.min_interval, "{host}: {times:?}");
            }
        }
        let a_times: Vec<Duration> = calls.iter().filter(|(h, _)| h == "engine-a").map(|(_, t)| *t).collect();
        assert_eq!(a_times.len(), 4, "one retry after throttling");
    }

    #[test]
    fn configuration_error_aborts() {
        let clock = ManualClock::new();
        let provider = Scripted {
            calls: Default::default(),
            throttle_once: AtomicUsize::new(0),
            clock: clock.clone(),
        };
        let plan = [q("b.edu/ok"), q("b.edu/broken"), q("b.edu/never")];
        let err = fetch_plan(&plan, &provider, &PacingPolicy::default(), &clock).unwrap_err();
        assert!(matches!(err, MeasureError::Config { .. }));
        assert_eq!(provider.calls.lock().unwrap().len(), 2);
    }
}
