use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::MeasureError;

/// Time source used for pacing and timestamps.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;

    fn sleep(&self, duration: Duration);

    fn unix_seconds(&self) -> u64;
}

#[derive(Debug, Clone)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }

    fn unix_seconds(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }
}

/// A clock that only moves when slept on or advanced. Clones share time.
#[derive(Debug, Clone, Default)]
pub struct ManualClock {
    now: Arc<Mutex<Duration>>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, by: Duration) {
        *self.now.lock().expect("clock lock") += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("clock lock")
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }

    fn unix_seconds(&self) -> u64 {
        self.now().as_secs()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PacingPolicy {
    /// Minimum gap between the end of one request and the start of the next
    /// to the same host.
    #[serde(with = "secs")]
    pub min_interval: Duration,
    /// Retries after a rate-limit response before giving up on a query.
    pub max_retries: u32,
    /// First backoff delay; doubles on every further rate-limit response.
    #[serde(with = "secs")]
    pub backoff_base: Duration,
    #[serde(with = "secs")]
    pub backoff_max: Duration,
}

impl Default for PacingPolicy {
    fn default() -> Self {
        PacingPolicy {
            min_interval: Duration::from_secs(2),
            max_retries: 3,
            backoff_base: Duration::from_secs(2),
            backoff_max: Duration::from_secs(120),
        }
    }
}

impl PacingPolicy {
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.backoff_base.saturating_mul(factor).min(self.backoff_max)
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Serializes requests per host and applies backoff on rate limiting.
#[derive(Debug)]
pub struct Pacer {
    policy: PacingPolicy,
    hosts: Mutex<HashMap<String, Arc<Mutex<Option<Duration>>>>>,
}

impl Pacer {
    pub fn new(policy: PacingPolicy) -> Self {
        Pacer {
            policy,
            hosts: Mutex::new(HashMap::new()),
        }
    }

    fn slot(&self, host: &str) -> Arc<Mutex<Option<Duration>>> {
        let mut hosts = self.hosts.lock().expect("pacer lock");
        hosts.entry(host.to_string()).or_default().clone()
    }

    /// Run `request` against `host`, waiting out the minimum interval and
    /// retrying with exponential backoff while it reports
    /// [`MeasureError::RateLimited`].
    pub fn run<T>(
        &self,
        host: &str,
        clock: &dyn Clock,
        mut request: impl FnMut() -> Result<T, MeasureError>,
    ) -> Result<T, MeasureError> {
        let slot = self.slot(host);
        let mut last_done = slot.lock().expect("host slot");
        let mut attempt = 0;
        loop {
            if let Some(done) = *last_done {
                let ready = done + self.policy.min_interval;
                let now = clock.now();
                if now < ready {
                    clock.sleep(ready - now);
                }
            }
            let result = request();
            *last_done = Some(clock.now());
            match result {
                Err(MeasureError::RateLimited) if attempt < self.policy.max_retries => {
                    clock.sleep(self.policy.backoff(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
