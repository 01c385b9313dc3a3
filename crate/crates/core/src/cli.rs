//! Command-line front end: `validate`, `querygen`, `fetch`, `analyze` and
//! `audit`.
//!
//! Exit codes: 0 success, 1 domain-level findings (registry violations,
//! partial measurements), 2 usage, configuration or I/O errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{build_report, render_csv, render_json, render_table, AnalysisError, OutputFormat, PublishedFigures, ReportOptions};
use crate::measure::{
    fetch_plan, write_fixture, FetchOutcome, FixtureProvider, LiveConfig, MeasurementSet, PacingPolicy,
    Provider, SystemClock,
};
use crate::querygen::{query_plan, IndicatorKind, QueryStyle};
use crate::taxonomy::{syntax_audit, validate_registry, SyntaxAudit, UniversityRegistry};
use crate::webunits::SuffixRule;

pub const CONFIG_ENV: &str = "CYBERMAP_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "cybermap", version, about = "Map a university's web space and analyse search-engine counts")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a registry against the model's structural rules.
    Validate,
    /// Write the query plan as CSV.
    Querygen,
    /// Run the query plan against a provider and write a fixture CSV.
    Fetch,
    /// Build the analysis report from a registry and its measurements.
    Analyze,
    /// Describe the URL syntax of every internal unit.
    Audit {
        /// Extra public suffixes, one per line, added to the embedded list.
        #[arg(long)]
        suffixes: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Fixture,
    Live,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// University registry (JSON).
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    /// Fixture CSV with recorded counts; may be repeated.
    #[arg(long, global = true)]
    pub measurements: Vec<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderKind>,
    /// Output format: table, csv or json.
    #[arg(long, global = true)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Report with missing measurements instead of failing.
    #[arg(long, global = true)]
    pub allow_partial: bool,
    /// Fold registered external-alias units into their redirecting unit.
    #[arg(long, global = true)]
    pub include_external_aliases: bool,
    /// Satellite internal count pages as `site:http://T -site:PLATFORM`.
    #[arg(long, global = true)]
    pub legacy_table6: bool,
    /// `linkdomain:` targets with a path get the older `http://` form.
    #[arg(long, global = true)]
    pub legacy_linkdomain: bool,
    /// Comma-separated indicators (count_page, url_mention,
    /// hypertextual_citation, textual_citation); default all.
    #[arg(long, global = true, value_delimiter = ',')]
    pub indicators: Vec<IndicatorKind>,
    /// JSON file with published figures to check against.
    #[arg(long, global = true)]
    pub published: Option<PathBuf>,
    /// Live search endpoint with a `{query}` placeholder.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Regex capturing the result-count estimate in the response body.
    #[arg(long, global = true)]
    pub count_pattern: Option<String>,
    /// Minimum seconds between requests to the same host.
    #[arg(long, global = true)]
    pub min_interval: Option<u64>,
}

/// Contents of the optional TOML config file. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub registry: Option<PathBuf>,
    pub measurements: Vec<PathBuf>,
    pub provider: Option<ProviderKind>,
    pub format: Option<String>,
    pub top_k: Option<usize>,
    pub allow_partial: bool,
    pub include_external_aliases: bool,
    pub legacy_table6: bool,
    pub legacy_linkdomain: bool,
    pub indicators: Vec<String>,
    pub published: Option<PathBuf>,
    pub live: Option<LiveConfig>,
    pub pacing: Option<PacingPolicy>,
}

/// Effective settings after merging the config file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub registry: Option<PathBuf>,
    pub measurements: Vec<PathBuf>,
    pub provider: ProviderKind,
    pub indicators: BTreeSet<IndicatorKind>,
    pub format: OutputFormat,
    pub options: ReportOptions,
    pub published: Option<PathBuf>,
    pub live: LiveConfig,
    pub pacing: PacingPolicy,
}

/// Error that ends a command with a given exit code.
#[derive(Debug)]
struct Exit {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Exit {
    Exit {
        code: 2,
        message: message.into(),
    }
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<RunConfig, String> {
        let file = match args.config.as_ref().filter(|p| !p.as_os_str().is_empty()) {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let mut file: FileConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                let base = path.parent().unwrap_or(Path::new(""));
                let rebase = |p: &mut PathBuf| {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                };
                file.registry.iter_mut().for_each(rebase);
                file.measurements.iter_mut().for_each(rebase);
                file.published.iter_mut().for_each(rebase);
                file
            }
            None => FileConfig::default(),
        };

        let format = match (&args.format, &file.format) {
            (Some(f), _) => *f,
            (None, Some(f)) => f.parse()?,
            (None, None) => OutputFormat::Table,
        };
        let indicators: BTreeSet<IndicatorKind> = if !args.indicators.is_empty() {
            args.indicators.iter().copied().collect()
        } else if !file.indicators.is_empty() {
            file.indicators
                .iter()
                .map(|s| s.parse::<IndicatorKind>().map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?
        } else {
            IndicatorKind::ALL.into_iter().collect()
        };

        let mut live = file.live.unwrap_or_default();
        if let Some(endpoint) = &args.endpoint {
            live.endpoint = endpoint.clone();
        }
        if let Some(pattern) = &args.count_pattern {
            live.count_pattern = pattern.clone();
        }
        let mut pacing = file.pacing.unwrap_or_default();
        if let Some(secs) = args.min_interval {
            pacing.min_interval = std::time::Duration::from_secs(secs);
        }

        Ok(RunConfig {
            registry: args.registry.clone().or(file.registry),
            measurements: if args.measurements.is_empty() {
                file.measurements
            } else {
                args.measurements.clone()
            },
            provider: args.provider.or(file.provider).unwrap_or(ProviderKind::Fixture),
            indicators,
            format,
            options: ReportOptions {
                top_k: args.top_k.or(file.top_k).unwrap_or(25),
                include_external_aliases: args.include_external_aliases || file.include_external_aliases,
                allow_partial: args.allow_partial || file.allow_partial,
                style: QueryStyle {
                    legacy_table6: args.legacy_table6 || file.legacy_table6,
                    legacy_linkdomain: args.legacy_linkdomain || file.legacy_linkdomain,
                },
                published: PublishedFigures::default(),
            },
            published: args.published.clone().or(file.published),
            live,
            pacing,
        })
    }

    fn registry(&self) -> Result<UniversityRegistry, Exit> {
        let path = self.registry.as_ref().ok_or_else(|| usage("--registry is required"))?;
        UniversityRegistry::load(path).map_err(|e| usage(e.to_string()))
    }

    fn valid_registry(&self, err: &mut dyn Write) -> Result<UniversityRegistry, Exit> {
        let registry = self.registry()?;
        let violations = validate_registry(&registry);
        if violations.is_empty() {
            return Ok(registry);
        }
        for v in &violations {
            let _ = writeln!(err, "{v}");
        }
        Err(Exit {
            code: 1,
            message: format!("registry has {} violations", violations.len()),
        })
    }

    fn provider(&self) -> Result<Box<dyn Provider>, Exit> {
        match self.provider {
            ProviderKind::Fixture => {
                if self.measurements.is_empty() {
                    return Err(usage("provider fixture requires --measurements"));
                }
                let provider = FixtureProvider::load(&self.measurements).map_err(|e| usage(e.to_string()))?;
                Ok(Box::new(provider))
            }
            ProviderKind::Live => live_provider(&self.live),
        }
    }
}

#[cfg(feature = "live")]
fn live_provider(config: &LiveConfig) -> Result<Box<dyn Provider>, Exit> {
    let transport = crate::measure::ReqwestTransport::new(config.timeout_secs).map_err(usage)?;
    let provider = crate::measure::LiveProvider::new(config.clone(), transport).map_err(|e| usage(e.to_string()))?;
    Ok(Box::new(provider))
}

#[cfg(not(feature = "live"))]
fn live_provider(_config: &LiveConfig) -> Result<Box<dyn Provider>, Exit> {
    Err(usage("this build has no live provider; rebuild with the `live` feature"))
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(exit) => {
            if !exit.message.is_empty() {
                let _ = writeln!(err, "error: {}", exit.message);
            }
            exit.code
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let config = RunConfig::resolve(&cli.global).map_err(usage)?;
    match &cli.command {
        Command::Validate => cmd_validate(&config, out),
        Command::Querygen => cmd_querygen(&config, out, err),
        Command::Fetch => cmd_fetch(&config, out, err),
        Command::Analyze => cmd_analyze(&config, out, err),
        Command::Audit { suffixes } => cmd_audit(&config, suffixes.as_deref(), out),
    }
}

/// A reader that closes stdout early (`| head`) ends the run quietly.
fn io<E: std::error::Error + 'static>(e: E) -> Exit {
    let mut cause: Option<&(dyn std::error::Error + 'static)> = Some(&e);
    while let Some(c) = cause {
        let io_error = c.downcast_ref::<std::io::Error>().or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
            csv::ErrorKind::Io(e) => Some(e),
            _ => None,
        });
        if io_error.is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) {
            return Exit { code: 0, message: String::new() };
        }
        cause = c.source();
    }
    usage(format!("write failed: {e}"))
}

fn cmd_validate(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Exit> {
    let registry = config.registry()?;
    let violations = validate_registry(&registry);
    for v in &violations {
        writeln!(out, "{v}").map_err(io)?;
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

fn warn_deprecated(indicators: &BTreeSet<IndicatorKind>, err: &mut dyn Write) {
    for kind in indicators.iter().filter(|k| k.deprecated_operator()) {
        let _ = writeln!(
            err,
            "warning: {} uses the linkdomain: operator, which current engines no longer support",
            kind.as_str()
        );
    }
}

fn cmd_querygen(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let registry = config.valid_registry(err)?;
    warn_deprecated(&config.indicators, err);
    let plan = query_plan(&registry, &config.indicators, config.options.style);
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    csv.write_record(["query_id", "part", "sublevel", "indicator", "unit_url", "rendered_query"])
        .map_err(io)?;
    for planned in &plan {
        csv.write_record([
            planned.query.id.as_str(),
            &planned.placement.part.to_string(),
            &planned.placement.sublevel.to_string(),
            planned.query.indicator.as_str(),
            &planned.unit_url.to_string(),
            &planned.query.rendered,
        ])
        .map_err(io)?;
    }
    csv.flush().map_err(io)?;
    Ok(0)
}

fn write_manifest(outcome: &FetchOutcome, err: &mut dyn Write) {
    if !outcome.failures.is_empty() {
        let _ = writeln!(err, "{} queries failed:", outcome.failures.len());
        for failure in &outcome.failures {
            let _ = writeln!(err, "{failure}");
        }
    }
}

fn run_plan(
    config: &RunConfig,
    registry: &UniversityRegistry,
    indicators: &BTreeSet<IndicatorKind>,
) -> Result<FetchOutcome, Exit> {
    let provider = config.provider()?;
    let plan: Vec<_> = query_plan(registry, indicators, config.options.style)
        .into_iter()
        .map(|p| p.query)
        .collect();
    fetch_plan(&plan, provider.as_ref(), &config.pacing, &SystemClock::new()).map_err(|e| usage(e.to_string()))
}

fn cmd_fetch(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let registry = config.valid_registry(err)?;
    warn_deprecated(&config.indicators, err);
    let outcome = run_plan(config, &registry, &config.indicators)?;
    let mut buf = Vec::new();
    write_fixture(&outcome.set, &mut buf).map_err(|e| usage(e.to_string()))?;
    out.write_all(&buf).map_err(io)?;
    write_manifest(&outcome, err);
    Ok(if outcome.is_complete() { 0 } else { 1 })
}

fn measurements(config: &RunConfig, registry: &UniversityRegistry, err: &mut dyn Write) -> Result<MeasurementSet, Exit> {
    match config.provider {
        ProviderKind::Fixture => {
            if config.measurements.is_empty() {
                return Err(usage("provider fixture requires --measurements"));
            }
            let provider = FixtureProvider::load(&config.measurements).map_err(|e| usage(e.to_string()))?;
            Ok(provider.set().clone())
        }
        ProviderKind::Live => {
            let indicators = BTreeSet::from([IndicatorKind::CountPage, IndicatorKind::UrlMention]);
            let outcome = run_plan(config, registry, &indicators)?;
            write_manifest(&outcome, err);
            Ok(outcome.set)
        }
    }
}

fn cmd_analyze(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let registry = config.valid_registry(err)?;
    let set = measurements(config, &registry, err)?;
    let mut options = config.options.clone();
    if let Some(path) = &config.published {
        options.published = PublishedFigures::load(path).map_err(usage)?;
    }
    let report = match build_report(&registry, &set, &options) {
        Ok(report) => report,
        Err(AnalysisError::MissingMeasurements(missing)) => {
            let manifest = FetchOutcome {
                set: MeasurementSet::new(""),
                failures: missing,
            };
            write_manifest(&manifest, err);
            return Err(usage("measurements missing; pass --allow-partial to report anyway"));
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let text = match config.format {
        OutputFormat::Table => render_table(&report),
        OutputFormat::Csv => render_csv(&report),
        OutputFormat::Json => render_json(&report),
    };
    out.write_all(text.as_bytes()).map_err(io)?;
    let partial = report
        .diagnostics
        .iter()
        .any(|d| matches!(d, crate::analysis::Diagnostic::MissingMeasurements { .. }));
    Ok(if partial { 1 } else { 0 })
}

fn render_audit(audit: &SyntaxAudit, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(audit).expect("audit serializes");
            text.push('\n');
            text
        }
        OutputFormat::Csv => {
            let mut csv = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            csv.write_record(["url", "entity_name", "mission", "subdomains", "directories", "flags"])
                .expect("writing to memory");
            for e in &audit.entries {
                let (sub, dir) = e
                    .signature
                    .map(|s| (s.subdomains.to_string(), s.directories.to_string()))
                    .unwrap_or_default();
                let flags: Vec<String> = e
                    .flags
                    .iter()
                    .map(|f| serde_json::to_value(f).expect("flag serializes").as_str().unwrap_or("").to_string())
                    .collect();
                csv.write_record([e.url.as_str(), &e.entity_name, e.mission.as_str(), &sub, &dir, &flags.join(";")])
                    .expect("writing to memory");
            }
            String::from_utf8(csv.into_inner().expect("writing to memory")).expect("utf-8")
        }
        OutputFormat::Table => {
            let mut text = format!("syntax of {} internal units under {}\n", audit.entries.len(), audit.contour);
            text.push_str("\nsignatures\n");
            for (sig, n) in &audit.signature_frequencies {
                text.push_str(&format!("{n:>6}  {sig}\n"));
            }
            let lists: [(&str, Vec<String>); 5] = [
                ("mixed subdomain/directory syntax", audit.mixed.clone()),
                (
                    "external redirects",
                    audit.external_redirects.iter().map(|(u, t)| format!("{u} -> {t}")).collect(),
                ),
                ("alias groups", audit.alias_groups.iter().map(|g| g.join(" = ")).collect()),
                ("unassigned mission", audit.unassigned.clone()),
                ("unresolved suffix", audit.unresolved.clone()),
            ];
            for (title, items) in lists {
                if !items.is_empty() {
                    text.push_str(&format!("\n{title}\n"));
                    for item in items {
                        text.push_str(&format!("- {item}\n"));
                    }
                }
            }
            text
        }
    }
}

fn cmd_audit(config: &RunConfig, suffixes: Option<&Path>, out: &mut dyn Write) -> Result<i32, Exit> {
    let registry = config.registry()?;
    let rule = match suffixes {
        Some(path) => SuffixRule::load(path).map_err(|e| usage(e.to_string()))?,
        None => SuffixRule::embedded(),
    };
    let audit = syntax_audit(&registry, &rule);
    out.write_all(render_audit(&audit, config.format).as_bytes()).map_err(io)?;
    Ok(0)
}
