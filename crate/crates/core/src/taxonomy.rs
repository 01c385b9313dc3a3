//! University registry and its placement grid.
//!
//! Every URL a registry declares sits in one cell of
//! (core | satellite) x (contour | internal). Anything else belongs to the
//! external web, which is where mentions come from but is never a unit.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::webunits::{NormalizedUrl, SuffixRule, UrlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Core,
    Satellite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sublevel {
    Contour,
    Internal,
}

/// Which side of a unit a measurement looks at: content the unit publishes,
/// or pages elsewhere that mention it. Attaches to measurements, not units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureLevel {
    Institutional,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Institution,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mission {
    Teaching,
    Research,
    Transfer,
    Administration,
    Services,
    Unassigned,
}

impl Mission {
    pub const ASSIGNED: [Mission; 5] = [
        Mission::Teaching,
        Mission::Research,
        Mission::Transfer,
        Mission::Administration,
        Mission::Services,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mission::Teaching => "teaching",
            Mission::Research => "research",
            Mission::Transfer => "transfer",
            Mission::Administration => "administration",
            Mission::Services => "services",
            Mission::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Part::Core => "core",
            Part::Satellite => "satellite",
        })
    }
}

impl fmt::Display for Sublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Sublevel::Contour => "contour",
            Sublevel::Internal => "internal",
        })
    }
}

impl fmt::Display for Mission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InternalUnit {
    pub url: NormalizedUrl,
    pub entity_name: String,
    pub kind: UnitKind,
    pub mission: Mission,
    /// Further valid URLs of the same entity.
    pub aliases: Vec<NormalizedUrl>,
    pub redirect_target: Option<NormalizedUrl>,
    /// Marks a core unit whose URL lives outside the contour domain
    /// (a school that moved to its own registrable domain).
    pub external_alias: bool,
}

impl InternalUnit {
    pub fn new(url: NormalizedUrl, entity_name: impl Into<String>, kind: UnitKind, mission: Mission) -> Self {
        InternalUnit {
            url,
            entity_name: entity_name.into(),
            kind,
            mission,
            aliases: Vec::new(),
            redirect_target: None,
            external_alias: false,
        }
    }

    /// The primary URL followed by its aliases.
    pub fn urls(&self) -> impl Iterator<Item = &NormalizedUrl> {
        std::iter::once(&self.url).chain(&self.aliases)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SatellitePlatform {
    pub name: String,
    pub platform_domain: NormalizedUrl,
    pub contour_url: NormalizedUrl,
    /// Extra URL forms of the contour channel (`youtube.com/user/harvard`
    /// beside `youtube.com/harvard`).
    pub contour_aliases: Vec<NormalizedUrl>,
    pub internal_units: Vec<InternalUnit>,
}

impl SatellitePlatform {
    pub fn contour_urls(&self) -> impl Iterator<Item = &NormalizedUrl> {
        std::iter::once(&self.contour_url).chain(&self.contour_aliases)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniversityRegistry {
    pub name: String,
    pub contour_url: NormalizedUrl,
    pub internal_units: Vec<InternalUnit>,
    pub satellites: Vec<SatellitePlatform>,
    /// Keys present in the source document that are not part of the schema.
    #[serde(skip)]
    pub unknown_keys: Vec<String>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("reading registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing registry: {0}")]
    Json(#[from] serde_json::Error),
    #[error("registry field {field}: {source}")]
    Url {
        field: String,
        #[source]
        source: UrlError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("{url} is outside the university's own web spaces")]
    OutsideModel { url: String },
    #[error("registry has no core internal units")]
    EmptyRegistry,
}

/// Raw document shapes; unknown keys are collected instead of rejected so
/// that validation can report them alongside the other violations.
mod doc {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Serialize};

    use super::{Mission, UnitKind};

    type Extra = BTreeMap<String, serde_json::Value>;

    #[derive(Debug, Deserialize, Serialize)]
    pub struct Registry {
        pub name: String,
        pub contour_url: String,
        #[serde(default)]
        pub internal_units: Vec<Unit>,
        #[serde(default)]
        pub satellites: Vec<Satellite>,
        #[serde(flatten, skip_serializing)]
        pub extra: Extra,
    }

    #[derive(Debug, Deserialize, Serialize)]
    pub struct Unit {
        pub url: String,
        pub entity_name: String,
        pub kind: UnitKind,
        #[serde(default = "unassigned")]
        pub mission: Mission,
        #[serde(default)]
        pub aliases: Vec<String>,
        #[serde(default)]
        pub redirect_target: Option<String>,
        #[serde(default)]
        pub external_alias: bool,
        #[serde(flatten, skip_serializing)]
        pub extra: Extra,
    }

    #[derive(Debug, Deserialize, Serialize)]
    pub struct Satellite {
        pub name: String,
        pub platform_domain: String,
        pub contour_url: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        pub contour_aliases: Vec<String>,
        #[serde(default)]
        pub internal_units: Vec<Unit>,
        #[serde(flatten, skip_serializing)]
        pub extra: Extra,
    }

    fn unassigned() -> Mission {
        Mission::Unassigned
    }
}

fn url_field(raw: &str, field: impl FnOnce() -> String) -> Result<NormalizedUrl, RegistryError> {
    crate::webunits::normalize(raw).map_err(|source| RegistryError::Url { field: field(), source })
}

fn note_unknown(extra: &BTreeMap<String, serde_json::Value>, prefix: &str, out: &mut Vec<String>) {
    out.extend(extra.keys().map(|k| format!("{prefix}{k}")));
}

fn unit_from_doc(unit: doc::Unit, at: &str, unknown: &mut Vec<String>) -> Result<InternalUnit, RegistryError> {
    note_unknown(&unit.extra, &format!("{at}."), unknown);
    let aliases = unit
        .aliases
        .iter()
        .enumerate()
        .map(|(i, a)| url_field(a, || format!("{at}.aliases[{i}]")))
        .collect::<Result<_, _>>()?;
    let redirect_target = unit
        .redirect_target
        .as_deref()
        .map(|r| url_field(r, || format!("{at}.redirect_target")))
        .transpose()?;
    Ok(InternalUnit {
        url: url_field(&unit.url, || format!("{at}.url"))?,
        entity_name: unit.entity_name,
        kind: unit.kind,
        mission: unit.mission,
        aliases,
        redirect_target,
        external_alias: unit.external_alias,
    })
}

fn unit_to_doc(unit: &InternalUnit) -> doc::Unit {
    doc::Unit {
        url: unit.url.to_string(),
        entity_name: unit.entity_name.clone(),
        kind: unit.kind,
        mission: unit.mission,
        aliases: unit.aliases.iter().map(ToString::to_string).collect(),
        redirect_target: unit.redirect_target.as_ref().map(ToString::to_string),
        external_alias: unit.external_alias,
        extra: BTreeMap::new(),
    }
}

impl UniversityRegistry {
    pub fn new(name: impl Into<String>, contour_url: NormalizedUrl) -> Self {
        UniversityRegistry {
            name: name.into(),
            contour_url,
            internal_units: Vec::new(),
            satellites: Vec::new(),
            unknown_keys: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let raw: doc::Registry = serde_json::from_str(text)?;
        let mut unknown = Vec::new();
        note_unknown(&raw.extra, "", &mut unknown);

        let internal_units = raw
            .internal_units
            .into_iter()
            .enumerate()
            .map(|(i, u)| unit_from_doc(u, &format!("internal_units[{i}]"), &mut unknown))
            .collect::<Result<_, _>>()?;

        let mut satellites = Vec::with_capacity(raw.satellites.len());
        for (s, sat) in raw.satellites.into_iter().enumerate() {
            let at = format!("satellites[{s}]");
            note_unknown(&sat.extra, &format!("{at}."), &mut unknown);
            let contour_aliases = sat
                .contour_aliases
                .iter()
                .enumerate()
                .map(|(i, a)| url_field(a, || format!("{at}.contour_aliases[{i}]")))
                .collect::<Result<_, _>>()?;
            let internal_units = sat
                .internal_units
                .into_iter()
                .enumerate()
                .map(|(i, u)| unit_from_doc(u, &format!("{at}.internal_units[{i}]"), &mut unknown))
                .collect::<Result<_, _>>()?;
            satellites.push(SatellitePlatform {
                name: sat.name,
                platform_domain: url_field(&sat.platform_domain, || format!("{at}.platform_domain"))?,
                contour_url: url_field(&sat.contour_url, || format!("{at}.contour_url"))?,
                contour_aliases,
                internal_units,
            });
        }

        Ok(UniversityRegistry {
            name: raw.name,
            contour_url: url_field(&raw.contour_url, || "contour_url".to_string())?,
            internal_units,
            satellites,
            unknown_keys: unknown,
        })
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let raw = doc::Registry {
            name: self.name.clone(),
            contour_url: self.contour_url.to_string(),
            internal_units: self.internal_units.iter().map(unit_to_doc).collect(),
            satellites: self
                .satellites
                .iter()
                .map(|s| doc::Satellite {
                    name: s.name.clone(),
                    platform_domain: s.platform_domain.to_string(),
                    contour_url: s.contour_url.to_string(),
                    contour_aliases: s.contour_aliases.iter().map(ToString::to_string).collect(),
                    internal_units: s.internal_units.iter().map(unit_to_doc).collect(),
                    extra: BTreeMap::new(),
                })
                .collect(),
            extra: BTreeMap::new(),
        };
        serde_json::to_string_pretty(&raw).expect("registry serializes")
    }

    /// Core units that count toward the institution's own domain, i.e. all
    /// core units except external aliases.
    pub fn core_units(&self) -> impl Iterator<Item = &InternalUnit> {
        self.internal_units.iter().filter(|u| !u.external_alias)
    }

    pub fn unit(&self, owner: Owner) -> Option<&InternalUnit> {
        match owner {
            Owner::CoreUnit(i) => self.internal_units.get(i),
            Owner::SatelliteUnit { platform, unit } => self.satellites.get(platform)?.internal_units.get(unit),
            Owner::University | Owner::Platform(_) => None,
        }
    }

    /// Every URL the registry declares, paired with its owner, in registry
    /// order: contour, core units (url then aliases), then each satellite.
    pub fn declared_urls(&self) -> Vec<(&NormalizedUrl, Placement)> {
        let mut out = vec![(&self.contour_url, Placement::new(Part::Core, Sublevel::Contour, Owner::University))];
        for (i, unit) in self.internal_units.iter().enumerate() {
            for url in unit.urls() {
                out.push((url, Placement::new(Part::Core, Sublevel::Internal, Owner::CoreUnit(i))));
            }
        }
        for (p, sat) in self.satellites.iter().enumerate() {
            for url in sat.contour_urls() {
                out.push((url, Placement::new(Part::Satellite, Sublevel::Contour, Owner::Platform(p))));
            }
            for (u, unit) in sat.internal_units.iter().enumerate() {
                let owner = Owner::SatelliteUnit { platform: p, unit: u };
                for url in unit.urls() {
                    out.push((url, Placement::new(Part::Satellite, Sublevel::Internal, owner)));
                }
            }
        }
        out
    }

    /// Place a URL in the grid.
    ///
    /// Contours match by equality. Inside the university's spaces the
    /// deepest declared unit containing the URL owns it; a URL under the
    /// core contour or a satellite contour without a declaring unit is owned
    /// by the university or platform itself.
    pub fn classify(&self, url: &NormalizedUrl) -> Result<Placement, TaxonomyError> {
        if *url == self.contour_url {
            return Ok(Placement::new(Part::Core, Sublevel::Contour, Owner::University));
        }
        for (p, sat) in self.satellites.iter().enumerate() {
            if sat.contour_urls().any(|c| c == url) {
                return Ok(Placement::new(Part::Satellite, Sublevel::Contour, Owner::Platform(p)));
            }
        }

        let units = self
            .internal_units
            .iter()
            .enumerate()
            .map(|(i, u)| (u, Placement::new(Part::Core, Sublevel::Internal, Owner::CoreUnit(i))))
            .chain(self.satellites.iter().enumerate().flat_map(|(p, sat)| {
                sat.internal_units.iter().enumerate().map(move |(u, unit)| {
                    let owner = Owner::SatelliteUnit { platform: p, unit: u };
                    (unit, Placement::new(Part::Satellite, Sublevel::Internal, owner))
                })
            }));
        let mut best: Option<(usize, Placement)> = None;
        for (unit, placement) in units {
            for scope in unit.urls() {
                if url.is_within(scope) && best.is_none_or(|(depth, _)| scope.depth() > depth) {
                    best = Some((scope.depth(), placement));
                }
            }
        }
        if let Some((_, placement)) = best {
            return Ok(placement);
        }

        if url.is_within(&self.contour_url) {
            return Ok(Placement::new(Part::Core, Sublevel::Internal, Owner::University));
        }
        let mut best: Option<(usize, usize)> = None;
        for (p, sat) in self.satellites.iter().enumerate() {
            for scope in sat.contour_urls() {
                if url.is_within(scope) && best.is_none_or(|(depth, _)| scope.depth() > depth) {
                    best = Some((scope.depth(), p));
                }
            }
        }
        if let Some((_, p)) = best {
            return Ok(Placement::new(Part::Satellite, Sublevel::Internal, Owner::Platform(p)));
        }

        Err(TaxonomyError::OutsideModel { url: url.to_string() })
    }
}

/// What a placed URL belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    University,
    Platform(usize),
    CoreUnit(usize),
    SatelliteUnit { platform: usize, unit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Placement {
    pub part: Part,
    pub sublevel: Sublevel,
    pub owner: Owner,
}

impl Placement {
    pub fn new(part: Part, sublevel: Sublevel, owner: Owner) -> Self {
        Placement { part, sublevel, owner }
    }

    pub fn cell(&self) -> (Part, Sublevel) {
        (self.part, self.sublevel)
    }
}

pub fn classify(url: &NormalizedUrl, registry: &UniversityRegistry) -> Result<Placement, TaxonomyError> {
    registry.classify(url)
}

/// A broken registry invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "violation")]
pub enum Violation {
    UnknownKey { key: String },
    DuplicateUrl { url: String, first: String, second: String },
    OutsideContour { unit: String, contour: String },
    AliasOutsideContour { unit: String, alias: String },
    ExternalAliasInsideContour { unit: String },
    DanglingRedirect { unit: String, target: String },
    SatelliteContourOutsidePlatform { platform: String, url: String },
    SatelliteUnitOutsidePlatform { platform: String, unit: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownKey { key } => write!(f, "unknown-key: {key}"),
            Violation::DuplicateUrl { url, first, second } => {
                write!(f, "duplicate-url: {url} is declared by both {first} and {second}")
            }
            Violation::OutsideContour { unit, contour } => write!(
                f,
                "outside-contour: unit {unit} is not within {contour} and carries no external_alias marker"
            ),
            Violation::AliasOutsideContour { unit, alias } => {
                write!(f, "alias-outside-contour: alias {alias} of unit {unit} is not within the contour")
            }
            Violation::ExternalAliasInsideContour { unit } => {
                write!(f, "external-alias-inside-contour: unit {unit} is marked external_alias but lies within the contour")
            }
            Violation::DanglingRedirect { unit, target } => write!(
                f,
                "dangling-redirect: unit {unit} redirects to {target}, which no unit declares"
            ),
            Violation::SatelliteContourOutsidePlatform { platform, url } => {
                write!(f, "satellite-contour-outside-platform: {platform} contour {url} is not within its platform domain")
            }
            Violation::SatelliteUnitOutsidePlatform { platform, unit } => write!(
                f,
                "satellite-unit-outside-platform: {platform} unit {unit} is within neither the platform domain nor its contour"
            ),
        }
    }
}

/// Check every registry invariant. An empty list means the registry is valid.
pub fn validate_registry(registry: &UniversityRegistry) -> Vec<Violation> {
    let mut violations: Vec<Violation> = registry
        .unknown_keys
        .iter()
        .map(|key| Violation::UnknownKey { key: key.clone() })
        .collect();

    let describe = |placement: &Placement| -> String {
        match placement.owner {
            Owner::University => "the contour".to_string(),
            Owner::Platform(p) => format!("satellite {} contour", registry.satellites[p].name),
            owner => format!("unit {}", registry.unit(owner).map(|u| u.url.to_string()).unwrap_or_default()),
        }
    };
    let mut seen: HashMap<&NormalizedUrl, Placement> = HashMap::new();
    for (url, placement) in registry.declared_urls() {
        match seen.get(url) {
            Some(first) => violations.push(Violation::DuplicateUrl {
                url: url.to_string(),
                first: describe(first),
                second: describe(&placement),
            }),
            None => {
                seen.insert(url, placement);
            }
        }
    }

    let contour = &registry.contour_url;
    for unit in &registry.internal_units {
        let inside = unit.url.is_within(contour);
        if !inside && !unit.external_alias {
            violations.push(Violation::OutsideContour {
                unit: unit.url.to_string(),
                contour: contour.to_string(),
            });
        }
        if inside && unit.external_alias {
            violations.push(Violation::ExternalAliasInsideContour { unit: unit.url.to_string() });
        }
        if !unit.external_alias {
            for alias in unit.aliases.iter().filter(|a| !a.is_within(contour)) {
                violations.push(Violation::AliasOutsideContour {
                    unit: unit.url.to_string(),
                    alias: alias.to_string(),
                });
            }
        }
        if let Some(target) = &unit.redirect_target {
            let declared = registry.internal_units.iter().any(|u| u.urls().any(|x| x == target));
            if target.is_within(contour) && !declared {
                violations.push(Violation::DanglingRedirect {
                    unit: unit.url.to_string(),
                    target: target.to_string(),
                });
            }
        }
    }

    for sat in &registry.satellites {
        for url in sat.contour_urls().filter(|c| !c.is_within(&sat.platform_domain)) {
            violations.push(Violation::SatelliteContourOutsidePlatform {
                platform: sat.name.clone(),
                url: url.to_string(),
            });
        }
        for unit in &sat.internal_units {
            for url in unit.urls() {
                if !url.is_within(&sat.contour_url) && !url.is_within(&sat.platform_domain) {
                    violations.push(Violation::SatelliteUnitOutsidePlatform {
                        platform: sat.name.clone(),
                        unit: url.to_string(),
                    });
                }
            }
        }
    }

    violations
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MissionShare {
    pub mission: Mission,
    pub count: usize,
    /// Percent of all counted units, 0..=100.
    pub percent: f64,
}

/// Core internal units split by mission. External-alias units are not
/// counted; they are outside the institution's domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionDistribution {
    pub total: usize,
    pub assigned: Vec<MissionShare>,
    pub unassigned: MissionShare,
}

impl MissionDistribution {
    pub fn get(&self, mission: Mission) -> MissionShare {
        if mission == Mission::Unassigned {
            return self.unassigned;
        }
        *self
            .assigned
            .iter()
            .find(|s| s.mission == mission)
            .expect("every assigned mission is listed")
    }
}

pub fn mission_distribution(registry: &UniversityRegistry) -> Result<MissionDistribution, TaxonomyError> {
    let mut counts: BTreeMap<Mission, usize> = BTreeMap::new();
    for unit in registry.core_units() {
        *counts.entry(unit.mission).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(TaxonomyError::EmptyRegistry);
    }
    let share = |mission| {
        let count = counts.get(&mission).copied().unwrap_or(0);
        MissionShare {
            mission,
            count,
            percent: 100.0 * count as f64 / total as f64,
        }
    };
    Ok(MissionDistribution {
        total,
        assigned: Mission::ASSIGNED.iter().map(|&m| share(m)).collect(),
        unassigned: share(Mission::Unassigned),
    })
}

/// How many subdomain labels and directory levels a unit adds below the
/// contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Signature {
    pub subdomains: usize,
    pub directories: usize,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} subdomains, {} directories)", self.subdomains, self.directories)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditFlag {
    /// Two or more subdomain levels combined with at least one directory.
    Mixed,
    /// The unit's URL is outside the contour domain.
    OutsideContour,
    /// The unit redirects outside the contour domain.
    ExternalRedirect,
    HasAliases,
    UnassignedMission,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub url: String,
    pub entity_name: String,
    pub mission: Mission,
    pub signature: Option<Signature>,
    pub flags: Vec<AuditFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntaxAudit {
    pub contour: String,
    pub entries: Vec<AuditEntry>,
    /// Signature frequencies, most frequent first.
    pub signature_frequencies: Vec<(Signature, usize)>,
    pub mixed: Vec<String>,
    pub external_redirects: Vec<(String, String)>,
    pub alias_groups: Vec<Vec<String>>,
    pub unassigned: Vec<String>,
    /// Units whose host could not be split into a registrable domain.
    pub unresolved: Vec<String>,
}

/// Describe the URL syntax of every core internal unit relative to the
/// contour, and flag the irregular ones.
pub fn syntax_audit(registry: &UniversityRegistry, suffix_rule: &SuffixRule) -> SyntaxAudit {
    let contour_locus = suffix_rule.parse_locus(&registry.contour_url).ok();
    let contour = &registry.contour_url;
    let mut audit = SyntaxAudit {
        contour: contour.to_string(),
        entries: Vec::new(),
        signature_frequencies: Vec::new(),
        mixed: Vec::new(),
        external_redirects: Vec::new(),
        alias_groups: Vec::new(),
        unassigned: Vec::new(),
        unresolved: Vec::new(),
    };
    let mut frequencies: BTreeMap<Signature, usize> = BTreeMap::new();

    for unit in &registry.internal_units {
        let mut flags = Vec::new();
        let inside = unit.url.is_within(contour);
        let locus = suffix_rule.parse_locus(&unit.url).ok();
        let signature = match (&locus, &contour_locus) {
            (Some(unit_locus), Some(base)) if inside => Some(Signature {
                subdomains: unit_locus.subdomain_labels.len() - base.subdomain_labels.len(),
                directories: unit_locus.path_segments.len() - base.path_segments.len(),
            }),
            (Some(unit_locus), _) => Some(Signature {
                subdomains: unit_locus.subdomain_labels.len(),
                directories: unit_locus.path_segments.len(),
            }),
            (None, _) => None,
        };
        let url = unit.url.to_string();
        if locus.is_none() {
            audit.unresolved.push(url.clone());
        }

        if !inside {
            flags.push(AuditFlag::OutsideContour);
        }
        if let Some(sig) = signature {
            *frequencies.entry(sig).or_default() += 1;
            if sig.subdomains >= 2 && sig.directories >= 1 {
                flags.push(AuditFlag::Mixed);
                audit.mixed.push(url.clone());
            }
        }
        if let Some(target) = unit.redirect_target.as_ref().filter(|t| !t.is_within(contour)) {
            flags.push(AuditFlag::ExternalRedirect);
            audit.external_redirects.push((url.clone(), target.to_string()));
        }
        if !unit.aliases.is_empty() {
            flags.push(AuditFlag::HasAliases);
            audit.alias_groups.push(unit.urls().map(ToString::to_string).collect());
        }
        if unit.mission == Mission::Unassigned {
            flags.push(AuditFlag::UnassignedMission);
            audit.unassigned.push(url.clone());
        }

        audit.entries.push(AuditEntry {
            url,
            entity_name: unit.entity_name.clone(),
            mission: unit.mission,
            signature,
            flags,
        });
    }

    let mut frequencies: Vec<(Signature, usize)> = frequencies.into_iter().collect();
    frequencies.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    audit.signature_frequencies = frequencies;
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::webunits::normalize;

    fn n(raw: &str) -> NormalizedUrl {
        normalize(raw).unwrap()
    }

    fn unit(url: &str, mission: Mission) -> InternalUnit {
        InternalUnit::new(n(url), url, UnitKind::Institution, mission)
    }

    fn harvard() -> UniversityRegistry {
        let mut reg = UniversityRegistry::new("Harvard University", n("harvard.edu"));
        reg.internal_units.push(unit("mcz.harvard.edu", Mission::Services));
        reg.internal_units.push(unit("law.harvard.edu", Mission::Administration));
        reg.internal_units.push(unit("blogs.law.harvard.edu", Mission::Unassigned));
        let mut hbs = unit("hbs.harvard.edu", Mission::Administration);
        hbs.redirect_target = Some(n("hbs.edu"));
        reg.internal_units.push(hbs);
        let mut hbs_edu = unit("hbs.edu", Mission::Administration);
        hbs_edu.external_alias = true;
        reg.internal_units.push(hbs_edu);
        reg.satellites.push(SatellitePlatform {
            name: "Academia".into(),
            platform_domain: n("academia.edu"),
            contour_url: n("harvard.academia.edu"),
            contour_aliases: vec![],
            internal_units: vec![unit("harvard.academia.edu/Departments/Chemistry", Mission::Unassigned)],
        });
        reg.satellites.push(SatellitePlatform {
            name: "Twitter".into(),
            platform_domain: n("twitter.com"),
            contour_url: n("twitter.com/Harvard"),
            contour_aliases: vec![],
            internal_units: vec![unit("twitter.com/HarvardLaw", Mission::Unassigned)],
        });
        reg
    }

    #[test]
    fn classify_examples() {
        let reg = harvard();
        let cell = |url: &str| reg.classify(&n(url)).map(|p| p.cell());
        assert_eq!(cell("harvard.edu"), Ok((Part::Core, Sublevel::Contour)));
        assert_eq!(cell("mcz.harvard.edu"), Ok((Part::Core, Sublevel::Internal)));
        assert_eq!(cell("harvard.academia.edu"), Ok((Part::Satellite, Sublevel::Contour)));
        assert_eq!(cell("twitter.com/HarvardLaw"), Ok((Part::Satellite, Sublevel::Internal)));
        assert_eq!(cell("hbs.edu"), Ok((Part::Core, Sublevel::Internal)));
        assert!(matches!(cell("twitter.com/Yale"), Err(TaxonomyError::OutsideModel { .. })));
        assert!(matches!(cell("masseyeandear.org"), Err(TaxonomyError::OutsideModel { .. })));
    }

    #[test]
    fn deepest_unit_owns_nested_urls() {
        let reg = harvard();
        let owner = |url: &str| reg.classify(&n(url)).unwrap().owner;
        assert_eq!(owner("blogs.law.harvard.edu/x"), Owner::CoreUnit(2));
        assert_eq!(owner("law.harvard.edu/faculty"), Owner::CoreUnit(1));
        assert_eq!(owner("harvard.edu/about"), Owner::University);
        assert_eq!(owner("harvard.academia.edu/People"), Owner::Platform(0));
    }

    #[test]
    fn valid_registry_has_no_violations() {
        assert_eq!(validate_registry(&harvard()), vec![]);
        let empty = UniversityRegistry::new("Empty", n("example.edu"));
        assert!(validate_registry(&empty).is_empty());
    }

    #[test]
    fn duplicate_url_is_a_violation() {
        let mut reg = harvard();
        reg.internal_units.push(unit("iq.harvard.edu", Mission::Research));
        reg.internal_units.push(unit("iq.harvard.edu", Mission::Research));
        let violations = validate_registry(&reg);
        assert_eq!(violations.len(), 1);
        assert!(matches!(&violations[0], Violation::DuplicateUrl { url, .. } if url == "iq.harvard.edu"));
    }

    #[test]
    fn alias_encoding_is_valid() {
        let mut reg = harvard();
        let mut iq = unit("iq.harvard.edu", Mission::Research);
        iq.aliases.push(n("cbrss.harvard.edu"));
        reg.internal_units.push(iq);
        assert!(validate_registry(&reg).is_empty());
    }

    #[test]
    fn external_unit_without_marker() {
        let mut reg = harvard();
        reg.internal_units[4].external_alias = false;
        assert!(!n("hbs.edu").is_within(&reg.contour_url));
        assert_eq!(
            validate_registry(&reg),
            vec![Violation::OutsideContour {
                unit: "hbs.edu".into(),
                contour: "harvard.edu".into()
            }]
        );
    }

    #[test]
    fn redirect_inside_contour_must_be_declared() {
        let mut reg = harvard();
        let mut post = unit("post.harvard.edu", Mission::Services);
        post.redirect_target = Some(n("alumni.harvard.edu"));
        reg.internal_units.push(post.clone());
        assert!(matches!(&validate_registry(&reg)[..], [Violation::DanglingRedirect { .. }]));
        post.aliases.push(n("alumni.harvard.edu"));
        *reg.internal_units.last_mut().unwrap() = post;
        assert!(validate_registry(&reg).is_empty());
    }

    #[test]
    fn satellite_scope_violations() {
        let mut reg = harvard();
        reg.satellites[1].internal_units.push(unit("facebook.com/HarvardLaw", Mission::Unassigned));
        reg.satellites[1].contour_aliases.push(n("x.com/Harvard"));
        let violations = validate_registry(&reg);
        assert_eq!(violations.len(), 2);
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let reg = harvard();
        let back = UniversityRegistry::from_json(&reg.to_json()).unwrap();
        assert_eq!(back, reg);

        let text = r#"{"name":"U","contour_url":"u.edu","colour":"red",
            "internal_units":[{"url":"a.u.edu","entity_name":"A","kind":"product","rank":3}]}"#;
        let reg = UniversityRegistry::from_json(text).unwrap();
        assert_eq!(reg.internal_units[0].mission, Mission::Unassigned);
        let keys: Vec<String> = validate_registry(&reg).iter().map(ToString::to_string).collect();
        assert_eq!(keys, ["unknown-key: colour", "unknown-key: internal_units[0].rank"]);
    }

    #[test]
    fn bad_url_in_document_names_the_field() {
        let text = r#"{"name":"U","contour_url":"u.edu","internal_units":[{"url":"http://","entity_name":"A","kind":"product"}]}"#;
        let err = UniversityRegistry::from_json(text).unwrap_err();
        assert!(err.to_string().contains("internal_units[0].url"), "{err}");
    }

    #[test]
    fn mission_distribution_single_unit() {
        let mut reg = UniversityRegistry::new("U", n("u.edu"));
        reg.internal_units.push(unit("a.u.edu", Mission::Teaching));
        let dist = mission_distribution(&reg).unwrap();
        assert_eq!(dist.total, 1);
        assert_eq!(dist.get(Mission::Teaching).count, 1);
        assert_eq!(dist.get(Mission::Teaching).percent, 100.0);
        assert_eq!(dist.get(Mission::Research).count, 0);
    }

    #[test]
    fn mission_distribution_empty() {
        let reg = UniversityRegistry::new("U", n("u.edu"));
        assert_eq!(mission_distribution(&reg), Err(TaxonomyError::EmptyRegistry));
    }

    #[test]
    fn mission_distribution_skips_external_aliases() {
        let dist = mission_distribution(&harvard()).unwrap();
        assert_eq!(dist.total, 4);
        assert_eq!(dist.unassigned.count, 1);
        assert_eq!(dist.get(Mission::Administration).count, 2);
    }

    #[test]
    fn audit_signatures() {
        let mut ucm = UniversityRegistry::new("UCM", n("ucm.es"));
        ucm.internal_units.push(unit("ucm.es/centros/webs/euenfer/", Mission::Teaching));
        ucm.internal_units.push(unit("maude.sip.ucm.es/fadoss/", Mission::Research));
        ucm.internal_units.push(unit("mat.ucm.es", Mission::Teaching));
        ucm.internal_units.push(unit("ucm.es", Mission::Unassigned));
        let audit = syntax_audit(&ucm, &SuffixRule::embedded());
        let sig = |i: usize| audit.entries[i].signature.unwrap();
        assert_eq!(sig(0), Signature { subdomains: 0, directories: 3 });
        assert_eq!(sig(1), Signature { subdomains: 2, directories: 1 });
        assert_eq!(sig(2), Signature { subdomains: 1, directories: 0 });
        assert_eq!(sig(3), Signature { subdomains: 0, directories: 0 });
        assert_eq!(audit.mixed, ["maude.sip.ucm.es/fadoss"]);
        assert!(audit.entries[1].flags.contains(&AuditFlag::Mixed));
        assert_eq!(audit.unassigned, ["ucm.es"]);
        assert_eq!(audit.signature_frequencies.len(), 4);
    }

    #[test]
    fn audit_flags_redirects_and_aliases() {
        let mut reg = harvard();
        let mut iq = unit("iq.harvard.edu", Mission::Research);
        iq.aliases.push(n("cbrss.harvard.edu"));
        reg.internal_units.push(iq);
        let audit = syntax_audit(&reg, &SuffixRule::embedded());
        assert_eq!(audit.external_redirects, [("hbs.harvard.edu".to_string(), "hbs.edu".to_string())]);
        assert_eq!(audit.alias_groups, [vec!["iq.harvard.edu".to_string(), "cbrss.harvard.edu".to_string()]]);
        let hbs_edu = audit.entries.iter().find(|e| e.url == "hbs.edu").unwrap();
        assert!(hbs_edu.flags.contains(&AuditFlag::OutsideContour));
        assert_eq!(hbs_edu.signature, Some(Signature { subdomains: 0, directories: 0 }));
        assert_eq!(audit.signature_frequencies[0], (Signature { subdomains: 1, directories: 0 }, 4));
    }
}
