use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{MeasureError, Provenance, Provider};
use crate::querygen::Query;

/// Where and how to ask a search engine for result-count estimates.
///
/// The count is read from the first results page only. Engines change their
/// markup often, so the extraction pattern is configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    /// URL with a `{query}` placeholder; the query is form-encoded into it.
    pub endpoint: String,
    /// Regex whose first capture group (or group named `count`) holds the
    /// estimated number of results. Digit separators are ignored.
    pub count_pattern: String,
    pub user_agent: String,
    /// Extra request headers, e.g. an API key.
    pub headers: Vec<(String, String)>,
    pub timeout_secs: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: String::new(),
            count_pattern: r"(?i)about\s+([\d,.\u{a0} ]+)\s+results".to_string(),
            user_agent: concat!("cybermap/", env!("CARGO_PKG_VERSION")).to_string(),
            headers: Vec::new(),
            timeout_secs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking GET used by [`LiveProvider`]; swapped out in tests.
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, String>;
}

pub struct LiveProvider<T> {
    config: LiveConfig,
    pattern: Regex,
    host: String,
    transport: T,
}

impl<T: HttpTransport> LiveProvider<T> {
    pub fn new(config: LiveConfig, transport: T) -> Result<Self, MeasureError> {
        if !config.endpoint.contains("{query}") {
            return Err(MeasureError::config("live endpoint must contain a {query} placeholder"));
        }
        let parsed = url::Url::parse(&config.endpoint.replace("{query}", "q"))
            .map_err(|e| MeasureError::config(format!("live endpoint: {e}")))?;
        let host = parsed
            .host_str()
            .ok_or_else(|| MeasureError::config("live endpoint has no host"))?
            .to_string();
        let pattern = Regex::new(&config.count_pattern).map_err(|e| MeasureError::config(format!("count pattern: {e}")))?;
        if pattern.captures_len() < 2 {
            return Err(MeasureError::config("count pattern needs a capture group"));
        }
        Ok(LiveProvider {
            config,
            pattern,
            host,
            transport,
        })
    }

    pub fn request_url(&self, query: &Query) -> String {
        let encoded: String = url::form_urlencoded::byte_serialize(query.rendered.as_bytes()).collect();
        self.config.endpoint.replace("{query}", &encoded)
    }

    pub fn extract_count(&self, body: &str) -> Result<u64, MeasureError> {
        let caps = self.pattern.captures(body).ok_or_else(|| MeasureError::Unparseable {
            reason: "count pattern did not match the response".to_string(),
        })?;
        let raw = caps.name("count").or_else(|| caps.get(1)).map(|m| m.as_str()).unwrap_or("");
        let digits: String = raw.chars().filter(char::is_ascii_digit).collect();
        digits.parse().map_err(|_| MeasureError::Unparseable {
            reason: format!("no digits in {raw:?}"),
        })
    }
}

impl<T: HttpTransport> Provider for LiveProvider<T> {
    fn provenance(&self) -> Provenance {
        Provenance::Live
    }

    fn pacing_key(&self, _query: &Query) -> Option<String> {
        Some(self.host.clone())
    }

    fn count(&self, query: &Query) -> Result<u64, MeasureError> {
        let mut headers = vec![("User-Agent".to_string(), self.config.user_agent.clone())];
        headers.extend(self.config.headers.iter().cloned());
        let response = self
            .transport
            .get(&self.request_url(query), &headers)
            .map_err(|reason| MeasureError::ProviderUnavailable { reason })?;
        match response.status {
            200..=299 => self.extract_count(&response.body),
            429 | 503 => Err(MeasureError::RateLimited),
            status => Err(MeasureError::ProviderUnavailable {
                reason: format!("HTTP status {status}"),
            }),
        }
    }
}

#[cfg(feature = "live")]
pub use reqwest_transport::ReqwestTransport;

#[cfg(feature = "live")]
mod reqwest_transport {
    use std::time::Duration;

    use super::{HttpResponse, HttpTransport};

    pub struct ReqwestTransport {
        client: reqwest::blocking::Client,
    }

    impl ReqwestTransport {
        pub fn new(timeout_secs: u64) -> Result<Self, String> {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(timeout_secs))
                .build()
                .map_err(|e| e.to_string())?;
            Ok(ReqwestTransport { client })
        }
    }

    impl HttpTransport for ReqwestTransport {
        fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, String> {
            let mut request = self.client.get(url);
            for (name, value) in headers {
                request = request.header(name, value);
            }
            let response = request.send().map_err(|e| e.to_string())?;
            let status = response.status().as_u16();
            let body = response.text().map_err(|e| e.to_string())?;
            Ok(HttpResponse { status, body })
        }
    }
}
