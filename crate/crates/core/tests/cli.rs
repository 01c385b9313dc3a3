//! End-to-end checks of the `cybermap` binary: exit codes, output formats
//! and configuration precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn cybermap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cybermap"))
        .args(args)
        .env_remove("CYBERMAP_CONFIG")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = cybermap(&["validate", "--registry", &fixture("harvard.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(ok.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let duplicate = write(
        dir.path(),
        "dup.json",
        r#"{"name": "Harvard University", "contour_url": "harvard.edu", "internal_units": [
            {"url": "iq.harvard.edu", "entity_name": "Institute for Quantitative Social Science", "kind": "institution", "mission": "research", "aliases": ["cbrss.harvard.edu"]},
            {"url": "iq.harvard.edu", "entity_name": "IQSS again", "kind": "institution", "mission": "research"}
        ]}"#,
    );
    let dup = cybermap(&["validate", "--registry", &duplicate]);
    assert_eq!(dup.status.code(), Some(1));
    let lines: Vec<String> = text(&dup.stdout).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(lines[0].contains("iq.harvard.edu"));

    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"name": "U", "contour_url": "u.edu", "colour": "crimson", "internal_units": []}"#,
    );
    let out = cybermap(&["validate", "--registry", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(text(&out.stdout), "unknown-key: colour\n");

    let malformed = write(dir.path(), "bad.json", "{\"name\": ");
    assert_eq!(cybermap(&["validate", "--registry", &malformed]).status.code(), Some(2));
    assert_eq!(cybermap(&["validate"]).status.code(), Some(2));
}

#[test]
fn querygen_csv() {
    let out = cybermap(&["querygen", "--registry", &fixture("harvard.json"), "--indicators", "count_page"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("query_id,part,sublevel,indicator,unit_url,rendered_query"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1..], ["core", "contour", "count_page", "harvard.edu", "site:harvard.edu"]);
    assert_eq!(first[0].len(), 16);
    assert!(out.stderr.is_empty());

    // no satellites: only core rows
    let core_only = cybermap(&["querygen", "--registry", &fixture("harvard_printed.json")]);
    assert!(text(&core_only.stdout).lines().skip(1).all(|l| l.contains(",core,")));
    // the hypertextual indicator warns about its operator
    assert!(text(&core_only.stderr).contains("linkdomain"));
}

#[test]
fn querygen_legacy_flags() {
    let out = cybermap(&[
        "querygen",
        "--registry",
        &fixture("ucm_units.json"),
        "--indicators",
        "count_page,hypertextual_citation",
        "--legacy-table6",
        "--legacy-linkdomain",
    ]);
    let stdout = text(&out.stdout);
    assert!(stdout.contains(
        "site:http://ucm.academia.edu/Departments/Biblioteconomía_y_Documentación -site:academia.edu"
    ));
    assert!(stdout.contains("linkdomain:http://www.ucm.es/centros/webs/euenfer -site:ucm.es"));
    assert!(stdout.contains(",linkdomain:ucm.es -site:ucm.es\n"));
}

#[test]
fn analyze_formats() {
    let base = ["analyze", "--registry", &fixture("harvard.json"), "--measurements", &fixture("harvard.csv")];

    let csv = cybermap(&[&base[..], &["--format", "csv"]].concat());
    assert_eq!(csv.status.code(), Some(0));
    let csv = text(&csv.stdout);
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "url,entity_name,part,sublevel,mission,institutional_count,external_count,counted,flags"
    );
    assert!(csv.contains("\npost.harvard.edu,Alumni Association,core,internal,services,"));
    assert!(csv.contains("alias_merged"));
    assert!(csv.contains("\nhbs.edu,Harvard Business School,core,internal,administration,75800,468000,false,external_alias\n"));
    // 187 core + 1 external alias + 577 satellite channels
    assert_eq!(csv.lines().count(), 1 + 188 + 577);

    let json = cybermap(&[&base[..], &["--format", "json", "--published", &fixture("published.json")]].concat());
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["internal_sum_institutional"], 7_467_107);
    assert_eq!(value["coverage_ratio"]["percent"], "98.05%");
    assert!(value["pearson_r"].is_number());
    assert!(value["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .any(|d| d["kind"] == "published_figure_mismatch"));

    let table = text(&cybermap(&base).stdout);
    assert!(table.contains("mention gap: 2287000 (limitation)"));
    assert!(table.contains("youtube.com/harvard"));
}

#[test]
fn analyze_missing_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let full = std::fs::read_to_string(fixture("harvard.csv")).unwrap();
    let mut lines = full.lines();
    let mut half = format!("{}\n", lines.next().unwrap());
    for (i, line) in lines.enumerate() {
        if i % 2 == 0 {
            half.push_str(line);
            half.push('\n');
        }
    }
    let half = write(dir.path(), "half.csv", &half);
    let registry = fixture("harvard.json");
    let args = ["analyze", "--registry", &registry, "--measurements", &half];

    let strict = cybermap(&args);
    assert_eq!(strict.status.code(), Some(2));
    assert!(strict.stdout.is_empty());
    let stderr = text(&strict.stderr);
    assert!(stderr.contains("queries failed"), "{stderr}");
    assert!(stderr.contains("no fixture record"));

    let partial = cybermap(&[&args[..], &["--allow-partial"]].concat());
    assert_eq!(partial.status.code(), Some(1));
    assert!(text(&partial.stdout).contains("measurements missing; report is partial"));
}

#[test]
fn fetch_writes_a_fixture() {
    let registry = fixture("harvard_printed.json");
    let measurements = fixture("harvard_printed.csv");
    let out = cybermap(&[
        "fetch",
        "--registry",
        &registry,
        "--measurements",
        &measurements,
        "--indicators",
        "count_page,url_mention",
    ]);
    // the transcription has one column per printed unit, so some are missing
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("query_id,rendered_query,count\n"));
    assert_eq!(stdout.lines().count(), std::fs::read_to_string(&measurements).unwrap().lines().count());
    assert!(text(&out.stderr).contains("queries failed"));

    let dir = tempfile::tempdir().unwrap();
    let copy = write(dir.path(), "fetched.csv", &stdout);
    let again = cybermap(&[
        "fetch",
        "--registry",
        &registry,
        "--measurements",
        &copy,
        "--indicators",
        "count_page,url_mention",
    ]);
    assert_eq!(text(&again.stdout), stdout);
}

#[test]
fn live_provider_without_endpoint_is_a_usage_error() {
    let out = cybermap(&["fetch", "--registry", &fixture("ucm_units.json"), "--provider", "live"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("harvard.json"), dir.path().join("harvard.json")).unwrap();
    std::fs::copy(fixture("harvard.csv"), dir.path().join("harvard.csv")).unwrap();
    let config = write(
        dir.path(),
        "cybermap.toml",
        "registry = \"harvard.json\"\nmeasurements = [\"harvard.csv\"]\nformat = \"json\"\ntop_k = 3\n",
    );
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_cybermap"))
            .arg("analyze")
            .args(extra)
            .env("CYBERMAP_CONFIG", &config)
            .output()
            .unwrap()
    };
    let json: serde_json::Value = serde_json::from_slice(&run(&[]).stdout).unwrap();
    assert_eq!(json["top_institutional"].as_array().unwrap().len(), 3);

    let csv = text(&run(&["--format", "csv", "--top-k", "5"]).stdout);
    assert!(csv.starts_with("url,entity_name,"));
}

#[test]
fn audit_reports_mixed_syntax() {
    let out = cybermap(&["audit", "--registry", &fixture("ucm_units.json")]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("mixed subdomain/directory syntax"));
    assert!(stdout.contains("- maude.sip.ucm.es/fadoss"));

    let json = cybermap(&["audit", "--registry", &fixture("ucm_units.json"), "--format", "json"]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["entries"].as_array().unwrap().len(), 33);
}
