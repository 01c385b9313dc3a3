//! Canonical URLs and their position in the domain / subdomain / directory
//! hierarchy.
//!
//! A [`NormalizedUrl`] is a host plus a list of path segments, with scheme,
//! port, credentials, query, fragment and a leading `www.` removed. Hosts are
//! lowercased; path segments keep their case and bytes.
//!
//! ```
//! use cybermap::webunits::{normalize, SuffixRule};
//!
//! let url = normalize("http://www.ucm.es/centros/webs/d168/").unwrap();
//! assert_eq!(url.to_string(), "ucm.es/centros/webs/d168");
//!
//! let locus = SuffixRule::embedded().parse_locus(&normalize("mat.ucm.es").unwrap()).unwrap();
//! assert_eq!(locus.registrable.to_string(), "ucm.es");
//! assert_eq!(locus.subdomain_level(), 3);
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("malformed url {input:?}: {reason}")]
    MalformedUrl { input: String, reason: &'static str },
    #[error("host {host:?} is a bare public suffix")]
    UnresolvableSuffix { host: String },
}

/// A URL reduced to host and path segments.
///
/// Equality and ordering ignore `original`.
#[derive(Debug, Clone)]
pub struct NormalizedUrl {
    host: String,
    path: Vec<String>,
    original: String,
}

impl NormalizedUrl {
    pub fn host(&self) -> &str {
        &self.host
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    /// The raw string this value was normalized from.
    pub fn original(&self) -> &str {
        &self.original
    }

    pub fn host_labels(&self) -> impl DoubleEndedIterator<Item = &str> {
        self.host.split('.')
    }

    /// Number of host labels plus number of path segments.
    pub fn depth(&self) -> usize {
        self.host_labels().count() + self.path.len()
    }

    /// True when `self` lies inside `scope`: the host is the scope host or a
    /// subdomain of it, and the scope path is a prefix of this path.
    pub fn is_within(&self, scope: &NormalizedUrl) -> bool {
        host_within(&self.host, &scope.host) && self.path.starts_with(&scope.path)
    }
}

fn host_within(host: &str, scope: &str) -> bool {
    host == scope
        || (host.len() > scope.len()
            && host.ends_with(scope)
            && host.as_bytes()[host.len() - scope.len() - 1] == b'.')
}

/// Free-function form of [`NormalizedUrl::is_within`].
pub fn is_within(url: &NormalizedUrl, scope: &NormalizedUrl) -> bool {
    url.is_within(scope)
}

impl PartialEq for NormalizedUrl {
    fn eq(&self, other: &Self) -> bool {
        self.host == other.host && self.path == other.path
    }
}

impl Eq for NormalizedUrl {}

impl std::hash::Hash for NormalizedUrl {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.host.hash(state);
        self.path.hash(state);
    }
}

impl PartialOrd for NormalizedUrl {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NormalizedUrl {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.host, &self.path).cmp(&(&other.host, &other.path))
    }
}

impl fmt::Display for NormalizedUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            return f.pad(&self.host);
        }
        let mut text = self.host.clone();
        for segment in &self.path {
            text.push('/');
            text.push_str(segment);
        }
        f.pad(&text)
    }
}

impl FromStr for NormalizedUrl {
    type Err = UrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize(s)
    }
}

impl Serialize for NormalizedUrl {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NormalizedUrl {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize(&raw).map_err(serde::de::Error::custom)
    }
}

/// Normalize a raw URL string.
///
/// Strips scheme, credentials, port, query, fragment and leading `www.`
/// labels; lowercases the host; drops empty and `.` path segments.
pub fn normalize(raw: &str) -> Result<NormalizedUrl, UrlError> {
    let malformed = |reason| UrlError::MalformedUrl {
        input: raw.to_string(),
        reason,
    };

    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(malformed("empty input"));
    }

    let rest = strip_scheme(trimmed);
    let cut = rest.find(['?', '#']).unwrap_or(rest.len());
    let rest = &rest[..cut];

    let (authority, path) = match rest.find(['/', '\\']) {
        Some(i) => (&rest[..i], &rest[i..]),
        None => (rest, ""),
    };

    let authority = match authority.rfind('@') {
        Some(i) => &authority[i + 1..],
        None => authority,
    };
    if authority.starts_with('[') {
        return Err(malformed("ip-literal hosts are not supported"));
    }
    let host = match authority.rfind(':') {
        Some(i) if authority[i + 1..].chars().all(|c| c.is_ascii_digit()) => &authority[..i],
        Some(_) => return Err(malformed("invalid port")),
        None => authority,
    };

    let mut host = host.trim_end_matches('.').to_lowercase();
    while let Some(bare) = host.strip_prefix("www.").filter(|bare| bare.contains('.')) {
        host = bare.to_string();
    }
    if host.is_empty() {
        return Err(malformed("no host"));
    }
    if host
        .split('.')
        .any(|label| label.is_empty() || label.chars().any(|c| c.is_whitespace() || c == '%'))
    {
        return Err(malformed("invalid host label"));
    }

    let path = path
        .split(['/', '\\'])
        .filter(|segment| !segment.is_empty() && *segment != ".")
        .map(str::to_string)
        .collect();

    Ok(NormalizedUrl {
        host,
        path,
        original: raw.to_string(),
    })
}

fn strip_scheme(input: &str) -> &str {
    if let Some(i) = input.find("://") {
        let scheme = &input[..i];
        let valid = scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && scheme
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
        if valid {
            return &input[i + 3..];
        }
    }
    input.strip_prefix("//").unwrap_or(input)
}

/// Top-level suffix and second-level identifier, e.g. `harvard` + `edu` or
/// `ox` + `ac.uk`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct OnlineDomain {
    pub tld: String,
    pub second_level: String,
}

impl fmt::Display for OnlineDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.second_level, self.tld)
    }
}

/// Position of a URL in the domain hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlLocus {
    pub registrable: OnlineDomain,
    /// Nearest-to-registrable first: `a.b.harvard.edu` gives `["b", "a"]`.
    pub subdomain_labels: Vec<String>,
    pub path_segments: Vec<String>,
}

impl UrlLocus {
    /// 2 for a bare registrable domain, 3 for `x.harvard.edu`, and so on.
    pub fn subdomain_level(&self) -> usize {
        2 + self.subdomain_labels.len()
    }

    pub fn host(&self) -> String {
        let mut labels: Vec<&str> = self.subdomain_labels.iter().rev().map(String::as_str).collect();
        let registrable = self.registrable.to_string();
        labels.push(&registrable);
        labels.join(".")
    }

    /// Reassemble the locus into the normalized URL it came from.
    pub fn to_url(&self) -> NormalizedUrl {
        let mut rendered = self.host();
        for segment in &self.path_segments {
            rendered.push('/');
            rendered.push_str(segment);
        }
        NormalizedUrl {
            host: self.host(),
            path: self.path_segments.clone(),
            original: rendered,
        }
    }
}

impl fmt::Display for UrlLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_url().fmt(f)
    }
}

/// Multi-label public suffixes consulted when splitting a host into
/// registrable domain and subdomains. Any single trailing label is always a
/// valid suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    suffixes: BTreeSet<String>,
}

const EMBEDDED_SUFFIXES: &str = include_str!("../data/suffixes.txt");

impl SuffixRule {
    /// The suffix list shipped with the crate.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_SUFFIXES)
    }

    pub fn empty() -> Self {
        SuffixRule {
            suffixes: BTreeSet::new(),
        }
    }

    /// Parse a suffix file: one suffix per line, `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let mut rule = Self::empty();
        rule.extend_from_str(text);
        rule
    }

    pub fn extend_from_str(&mut self, text: &str) {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let suffix = line.trim_matches('.').to_lowercase();
            if !suffix.is_empty() {
                self.suffixes.insert(suffix);
            }
        }
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        let mut rule = Self::embedded();
        rule.extend_from_str(&std::fs::read_to_string(path)?);
        Ok(rule)
    }

    pub fn suffixes(&self) -> impl Iterator<Item = &str> {
        self.suffixes.iter().map(String::as_str)
    }

    /// Number of trailing labels of `host` that form its public suffix.
    fn suffix_label_count(&self, labels: &[&str]) -> usize {
        // Walk from the longest candidate down so the longest listed suffix wins.
        for take in (2..=labels.len()).rev() {
            let candidate = labels[labels.len() - take..].join(".");
            if self.suffixes.contains(&candidate) {
                return take;
            }
        }
        1
    }

    /// Split a normalized URL into registrable domain, subdomains and path.
    pub fn parse_locus(&self, url: &NormalizedUrl) -> Result<UrlLocus, UrlError> {
        let labels: Vec<&str> = url.host_labels().collect();
        let unresolvable = || UrlError::UnresolvableSuffix {
            host: url.host.clone(),
        };
        let tld_label = labels.last().ok_or_else(unresolvable)?;
        if tld_label.chars().all(|c| c.is_ascii_digit()) {
            return Err(unresolvable());
        }

        let suffix_len = self.suffix_label_count(&labels);
        if labels.len() <= suffix_len {
            return Err(unresolvable());
        }
        let split = labels.len() - suffix_len;
        let registrable = OnlineDomain {
            tld: labels[split..].join("."),
            second_level: labels[split - 1].to_string(),
        };
        let subdomain_labels = labels[..split - 1].iter().rev().map(|l| l.to_string()).collect();

        Ok(UrlLocus {
            registrable,
            subdomain_labels,
            path_segments: url.path.clone(),
        })
    }
}

impl Default for SuffixRule {
    fn default() -> Self {
        Self::embedded()
    }
}

/// [`SuffixRule::parse_locus`] as a free function.
pub fn parse_locus(url: &NormalizedUrl, suffix_rule: &SuffixRule) -> Result<UrlLocus, UrlError> {
    suffix_rule.parse_locus(url)
}
