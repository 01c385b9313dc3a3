//! Search-operator query strings for the four indicators.
//!
//! | indicator             | rendered form                         |
//! |-----------------------|---------------------------------------|
//! | count page            | `site:TARGET`                         |
//! | URL mention           | `"TARGET" -site:EXCLUSION`            |
//! | hypertextual citation | `linkdomain:TARGET -site:EXCLUSION`   |
//! | textual citation      | `"Entity name" -site:EXCLUSION`       |
//!
//! The exclusion operator is always an ASCII hyphen-minus. Non-ASCII
//! characters are emitted as UTF-8 without escaping.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::taxonomy::{Owner, Part, Placement, Sublevel, UniversityRegistry};
use crate::webunits::NormalizedUrl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    CountPage,
    UrlMention,
    HypertextualCitation,
    TextualCitation,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 4] = [
        IndicatorKind::CountPage,
        IndicatorKind::UrlMention,
        IndicatorKind::HypertextualCitation,
        IndicatorKind::TextualCitation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorKind::CountPage => "count_page",
            IndicatorKind::UrlMention => "url_mention",
            IndicatorKind::HypertextualCitation => "hypertextual_citation",
            IndicatorKind::TextualCitation => "textual_citation",
        }
    }

    /// `linkdomain:` is no longer honoured by the major engines.
    pub fn deprecated_operator(self) -> bool {
        self == IndicatorKind::HypertextualCitation
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "count_page" | "site" => Ok(IndicatorKind::CountPage),
            "url_mention" | "mention" => Ok(IndicatorKind::UrlMention),
            "hypertextual_citation" | "linkdomain" => Ok(IndicatorKind::HypertextualCitation),
            "textual_citation" | "name" => Ok(IndicatorKind::TextualCitation),
            other => Err(format!("unknown indicator {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryTarget {
    Url(NormalizedUrl),
    Name(String),
}

impl fmt::Display for QueryTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryTarget::Url(url) => url.fmt(f),
            QueryTarget::Name(name) => f.write_str(name),
        }
    }
}

/// Stable identifier of an (indicator, target, exclusion) triple: the first
/// 16 hex digits of a SHA-256 over the three fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryId(String);

impl QueryId {
    pub fn compute(indicator: IndicatorKind, target: &QueryTarget, exclusion: Option<&NormalizedUrl>) -> Self {
        let target_key = match target {
            QueryTarget::Url(url) => format!("url:{url}"),
            QueryTarget::Name(name) => format!("name:{name}"),
        };
        let exclusion = exclusion.map(ToString::to_string).unwrap_or_default();
        let digest = Sha256::digest(format!("{}\u{1f}{target_key}\u{1f}{exclusion}", indicator.as_str()).as_bytes());
        QueryId(hex::encode(&digest[..8]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for QueryId {
    fn from(s: String) -> Self {
        QueryId(s)
    }
}

impl From<&str> for QueryId {
    fn from(s: &str) -> Self {
        QueryId(s.to_string())
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub id: QueryId,
    pub indicator: IndicatorKind,
    pub target: QueryTarget,
    pub exclusion: Option<NormalizedUrl>,
    pub rendered: String,
}

impl Query {
    fn build(indicator: IndicatorKind, target: QueryTarget, exclusion: Option<NormalizedUrl>, rendered: String) -> Self {
        Query {
            id: QueryId::compute(indicator, &target, exclusion.as_ref()),
            indicator,
            target,
            exclusion,
            rendered,
        }
    }

    pub fn deprecated_operator(&self) -> bool {
        self.indicator.deprecated_operator()
    }
}

/// Rendering switches that reproduce older printed query forms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStyle {
    /// Satellite internal count-page queries as `site:http://T -site:PLATFORM`.
    pub legacy_table6: bool,
    /// `linkdomain:` targets with a path get an `http://` (and `www.` on the
    /// exclusion host) prefix.
    pub legacy_linkdomain: bool,
}

/// `site:TARGET`
pub fn count_page_query(target: &NormalizedUrl) -> Query {
    Query::build(
        IndicatorKind::CountPage,
        QueryTarget::Url(target.clone()),
        None,
        format!("site:{target}"),
    )
}

/// The self-excluding size form `site:http://TARGET -site:PLATFORM`.
pub fn legacy_count_page_query(target: &NormalizedUrl, exclusion: &NormalizedUrl) -> Query {
    Query::build(
        IndicatorKind::CountPage,
        QueryTarget::Url(target.clone()),
        Some(exclusion.clone()),
        format!("site:http://{target} -site:{exclusion}"),
    )
}

/// `"TARGET" -site:EXCLUSION`
pub fn url_mention_query(target: &NormalizedUrl, exclusion: &NormalizedUrl) -> Query {
    Query::build(
        IndicatorKind::UrlMention,
        QueryTarget::Url(target.clone()),
        Some(exclusion.clone()),
        format!("\"{target}\" -site:{exclusion}"),
    )
}

/// `linkdomain:TARGET -site:EXCLUSION`
pub fn hypertextual_citation_query(target: &NormalizedUrl, exclusion: &NormalizedUrl, legacy: bool) -> Query {
    let rendered = if legacy && !target.path().is_empty() {
        let www = if target.host() == exclusion.host() { "www." } else { "" };
        format!("linkdomain:http://{www}{target} -site:{exclusion}")
    } else {
        format!("linkdomain:{target} -site:{exclusion}")
    };
    Query::build(
        IndicatorKind::HypertextualCitation,
        QueryTarget::Url(target.clone()),
        Some(exclusion.clone()),
        rendered,
    )
}

/// `"NAME" -site:EXCLUSION`
pub fn textual_citation_query(name: &str, exclusion: &NormalizedUrl) -> Query {
    debug_assert!(!name.trim().is_empty(), "textual citation needs a name");
    Query::build(
        IndicatorKind::TextualCitation,
        QueryTarget::Name(name.to_string()),
        Some(exclusion.clone()),
        format!("\"{name}\" -site:{exclusion}"),
    )
}

/// One row of a query plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlannedQuery {
    pub placement: Placement,
    pub unit_url: NormalizedUrl,
    pub query: Query,
}

/// Render every query needed to measure a registry.
///
/// Order: contour, core units in registry order (primary URL then aliases),
/// then each satellite (contour, contour aliases, units). For each URL the
/// indicators follow [`IndicatorKind`] order. Textual citations are issued
/// once per entity, on its primary URL.
pub fn query_plan(registry: &UniversityRegistry, indicators: &BTreeSet<IndicatorKind>, style: QueryStyle) -> Vec<PlannedQuery> {
    let mut plan = Vec::new();
    if indicators.is_empty() {
        return plan;
    }

    let mut push = |placement: Placement, url: &NormalizedUrl, name: Option<&str>, exclusion: &NormalizedUrl| {
        for &indicator in indicators {
            let query = match indicator {
                IndicatorKind::CountPage => {
                    if style.legacy_table6 && placement.cell() == (Part::Satellite, Sublevel::Internal) {
                        legacy_count_page_query(url, exclusion)
                    } else {
                        count_page_query(url)
                    }
                }
                IndicatorKind::UrlMention => url_mention_query(url, exclusion),
                IndicatorKind::HypertextualCitation => hypertextual_citation_query(url, exclusion, style.legacy_linkdomain),
                IndicatorKind::TextualCitation => match name {
                    Some(name) if !name.trim().is_empty() => textual_citation_query(name, exclusion),
                    _ => continue,
                },
            };
            plan.push(PlannedQuery {
                placement,
                unit_url: url.clone(),
                query,
            });
        }
    };

    let contour = &registry.contour_url;
    push(
        Placement::new(Part::Core, Sublevel::Contour, Owner::University),
        contour,
        Some(&registry.name),
        contour,
    );
    for (i, unit) in registry.internal_units.iter().enumerate() {
        let placement = Placement::new(Part::Core, Sublevel::Internal, Owner::CoreUnit(i));
        push(placement, &unit.url, Some(&unit.entity_name), contour);
        for alias in &unit.aliases {
            push(placement, alias, None, contour);
        }
    }
    for (p, sat) in registry.satellites.iter().enumerate() {
        let domain = &sat.platform_domain;
        let placement = Placement::new(Part::Satellite, Sublevel::Contour, Owner::Platform(p));
        push(placement, &sat.contour_url, Some(&registry.name), domain);
        for alias in &sat.contour_aliases {
            push(placement, alias, None, domain);
        }
        for (u, unit) in sat.internal_units.iter().enumerate() {
            let owner = Owner::SatelliteUnit { platform: p, unit: u };
            let placement = Placement::new(Part::Satellite, Sublevel::Internal, owner);
            push(placement, &unit.url, Some(&unit.entity_name), domain);
            for alias in &unit.aliases {
                push(placement, alias, None, domain);
            }
        }
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{InternalUnit, Mission, SatellitePlatform, UnitKind};
    use crate::webunits::normalize;

    fn n(raw: &str) -> NormalizedUrl {
        normalize(raw).unwrap()
    }

    #[test]
    fn count_page_examples() {
        assert_eq!(count_page_query(&n("harvard.edu")).rendered, "site:harvard.edu");
        assert_eq!(count_page_query(&n("mcz.harvard.edu")).rendered, "site:mcz.harvard.edu");
        assert_eq!(
            count_page_query(&n("ucm.academia.edu/Departments/Biblioteconomía_y_Documentación")).rendered,
            "site:ucm.academia.edu/Departments/Biblioteconomía_y_Documentación"
        );
    }

    #[test]
    fn url_mention_examples() {
        assert_eq!(
            url_mention_query(&n("harvard.edu"), &n("harvard.edu")).rendered,
            "\"harvard.edu\" -site:harvard.edu"
        );
        assert_eq!(
            url_mention_query(&n("twitter.com/Harvard"), &n("twitter.com")).rendered,
            "\"twitter.com/Harvard\" -site:twitter.com"
        );
        assert_eq!(url_mention_query(&n("x.y"), &n("z.w")).rendered, "\"x.y\" -site:z.w");
    }

    #[test]
    fn hypertextual_citation_examples() {
        assert_eq!(
            hypertextual_citation_query(&n("ucm.es"), &n("ucm.es"), false).rendered,
            "linkdomain:ucm.es -site:ucm.es"
        );
        let d168 = n("ucm.es/centros/webs/d168");
        assert_eq!(
            hypertextual_citation_query(&d168, &n("ucm.es"), true).rendered,
            "linkdomain:http://www.ucm.es/centros/webs/d168 -site:ucm.es"
        );
        assert_eq!(
            hypertextual_citation_query(&d168, &n("ucm.es"), false).rendered,
            "linkdomain:ucm.es/centros/webs/d168 -site:ucm.es"
        );
        assert_eq!(
            hypertextual_citation_query(&n("ucm.academia.edu"), &n("academia.edu"), false).rendered,
            "linkdomain:ucm.academia.edu -site:academia.edu"
        );
        // legacy prefix only applies to directory targets
        assert_eq!(
            hypertextual_citation_query(&n("ucm.academia.edu"), &n("academia.edu"), true).rendered,
            "linkdomain:ucm.academia.edu -site:academia.edu"
        );
    }

    #[test]
    fn textual_citation_examples() {
        assert_eq!(
            textual_citation_query("universidad complutense de Madrid", &n("ucm.es")).rendered,
            "\"universidad complutense de Madrid\" -site:ucm.es"
        );
        assert_eq!(textual_citation_query("X", &n("y.z")).rendered, "\"X\" -site:y.z");
        let long = "Departamento de Biblioteconomía y Documentación de la Universidad Complutense de Madrid";
        assert_eq!(
            textual_citation_query(long, &n("ucm.es")).rendered,
            format!("\"{long}\" -site:ucm.es")
        );
    }

    #[test]
    fn legacy_size_form() {
        let q = legacy_count_page_query(&n("ucm.academia.edu/Departments/Biblioteconomía_y_Documentación"), &n("academia.edu"));
        assert_eq!(
            q.rendered,
            "site:http://ucm.academia.edu/Departments/Biblioteconomía_y_Documentación -site:academia.edu"
        );
        assert_ne!(q.id, count_page_query(&n("ucm.academia.edu/Departments/Biblioteconomía_y_Documentación")).id);
    }

    #[test]
    fn ids_depend_on_every_component() {
        let a = url_mention_query(&n("a.edu"), &n("a.edu")).id;
        assert_eq!(a, url_mention_query(&n("a.edu"), &n("a.edu")).id);
        assert_eq!(a.as_str().len(), 16);
        assert_ne!(a, url_mention_query(&n("a.edu"), &n("b.edu")).id);
        assert_ne!(a, hypertextual_citation_query(&n("a.edu"), &n("a.edu"), false).id);
        assert_ne!(
            textual_citation_query("a.edu", &n("a.edu")).id,
            url_mention_query(&n("a.edu"), &n("a.edu")).id
        );
    }

    #[test]
    fn indicator_names_parse() {
        for kind in IndicatorKind::ALL {
            assert_eq!(kind.as_str().parse::<IndicatorKind>(), Ok(kind));
        }
        assert!("pagerank".parse::<IndicatorKind>().is_err());
    }

    fn two_unit_registry() -> UniversityRegistry {
        let mut reg = UniversityRegistry::new("Example University", n("example.edu"));
        reg.internal_units.push(InternalUnit::new(n("lib.example.edu"), "Library", UnitKind::Product, Mission::Services));
        reg.satellites.push(SatellitePlatform {
            name: "Academia".into(),
            platform_domain: n("academia.edu"),
            contour_url: n("example.academia.edu"),
            contour_aliases: vec![],
            internal_units: vec![InternalUnit::new(
                n("example.academia.edu/Departments/History"),
                "History",
                UnitKind::Institution,
                Mission::Teaching,
            )],
        });
        reg
    }

    #[test]
    fn plan_for_two_units_by_hand() {
        let plan = query_plan(&two_unit_registry(), &BTreeSet::from([IndicatorKind::UrlMention]), QueryStyle::default());
        let rendered: Vec<&str> = plan.iter().map(|p| p.query.rendered.as_str()).collect();
        assert_eq!(
            rendered,
            [
                "\"example.edu\" -site:example.edu",
                "\"lib.example.edu\" -site:example.edu",
                "\"example.academia.edu\" -site:academia.edu",
                "\"example.academia.edu/Departments/History\" -site:academia.edu",
            ]
        );
        assert_eq!(plan[3].placement.owner, Owner::SatelliteUnit { platform: 0, unit: 0 });
        assert_eq!(plan.last().unwrap().query.exclusion.as_ref().unwrap().to_string(), "academia.edu");
    }

    #[test]
    fn empty_indicator_set_gives_empty_plan() {
        assert!(query_plan(&two_unit_registry(), &BTreeSet::new(), QueryStyle::default()).is_empty());
    }

    #[test]
    fn plan_with_all_indicators_and_aliases() {
        let mut reg = two_unit_registry();
        reg.internal_units[0].aliases.push(n("library.example.edu"));
        let plan = query_plan(&reg, &IndicatorKind::ALL.into_iter().collect(), QueryStyle::default());
        // contour 4, lib 4, alias 3 (no textual), sat contour 4, sat unit 4
        assert_eq!(plan.len(), 19);
        assert_eq!(plan[0].query.rendered, "site:example.edu");
        assert_eq!(plan[3].query.rendered, "\"Example University\" -site:example.edu");
        assert_eq!(plan[8].unit_url.to_string(), "library.example.edu");
        assert_eq!(plan[8].placement.owner, Owner::CoreUnit(0));
        assert!(plan.iter().any(|p| p.query.deprecated_operator()));
    }

    #[test]
    fn legacy_table6_only_touches_satellite_internal_count_pages() {
        let style = QueryStyle {
            legacy_table6: true,
            legacy_linkdomain: false,
        };
        let plan = query_plan(&two_unit_registry(), &BTreeSet::from([IndicatorKind::CountPage]), style);
        let rendered: Vec<&str> = plan.iter().map(|p| p.query.rendered.as_str()).collect();
        assert_eq!(
            rendered,
            [
                "site:example.edu",
                "site:lib.example.edu",
                "site:example.academia.edu",
                "site:http://example.academia.edu/Departments/History -site:academia.edu",
            ]
        );
    }
}
