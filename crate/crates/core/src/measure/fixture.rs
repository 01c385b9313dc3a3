use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MeasureError, MeasurementRecord, MeasurementSet, Provenance, Provider};
use crate::querygen::{Query, QueryId};

const HEADER: [&str; 3] = ["query_id", "rendered_query", "count"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    query_id: String,
    rendered_query: String,
    count: String,
}

/// Read a `query_id,rendered_query,count` CSV file into a measurement set.
pub fn read_fixture<R: Read>(reader: R, source: &str) -> Result<MeasurementSet, MeasureError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers().map_err(MeasureError::fixture)?;
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(MeasureError::fixture(format!(
            "{source}: expected header {}, found {}",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut set = MeasurementSet::new(source);
    for (line, row) in csv.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| MeasureError::fixture(format!("{source}: {e}")))?;
        let count = row.count.trim().parse::<u64>().map_err(|_| {
            MeasureError::fixture(format!(
                "{source} row {}: count {:?} is not a non-negative integer",
                line + 2,
                row.count
            ))
        })?;
        set.insert(MeasurementRecord {
            query_id: QueryId::from(row.query_id),
            rendered_query: row.rendered_query,
            count,
            provenance: Provenance::Fixture,
            observed_at: 0,
        })
        .map_err(|e| MeasureError::fixture(format!("{source} row {}: {e}", line + 2)))?;
    }
    Ok(set)
}

pub fn load_fixture(path: &Path) -> Result<MeasurementSet, MeasureError> {
    let file = std::fs::File::open(path).map_err(|e| MeasureError::fixture(format!("{}: {e}", path.display())))?;
    read_fixture(file, &path.display().to_string())
}

/// Write a measurement set in fixture form, in set order, LF line endings.
pub fn write_fixture<W: Write>(set: &MeasurementSet, writer: W) -> Result<(), MeasureError> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    csv.write_record(HEADER).map_err(MeasureError::fixture)?;
    for record in set.records() {
        csv.write_record([record.query_id.as_str(), &record.rendered_query, &record.count.to_string()])
            .map_err(MeasureError::fixture)?;
    }
    csv.flush().map_err(MeasureError::fixture)
}

/// Answers queries from a recorded measurement set.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    set: MeasurementSet,
}

impl FixtureProvider {
    pub fn new(set: MeasurementSet) -> Self {
        FixtureProvider { set }
    }

    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Self, MeasureError> {
        let mut set = MeasurementSet::new(
            paths
                .iter()
                .map(|p| p.as_ref().display().to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        for path in paths {
            set.extend(load_fixture(path.as_ref())?)?;
        }
        Ok(FixtureProvider { set })
    }

    pub fn set(&self) -> &MeasurementSet {
        &self.set
    }
}

impl Provider for FixtureProvider {
    fn provenance(&self) -> Provenance {
        Provenance::Fixture
    }

    fn pacing_key(&self, _query: &Query) -> Option<String> {
        None
    }

    fn count(&self, query: &Query) -> Result<u64, MeasureError> {
        self.set.count(query).ok_or_else(|| MeasureError::MissingFixture {
            query_id: query.id.clone(),
            rendered_query: query.rendered.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_crlf_and_quoted_queries() {
        let text = "query_id,rendered_query,count\r\nabc,\"\"\"harvard.edu\"\" -site:harvard.edu\",38470780\r\ndef,site:youtube.com/harvard,0\r\n";
        let set = read_fixture(text.as_bytes(), "t").unwrap();
        let records: Vec<_> = set.records().collect();
        assert_eq!(records[0].rendered_query, "\"harvard.edu\" -site:harvard.edu");
        assert_eq!(records[0].count, 38_470_780);
        assert_eq!(records[1].count, 0);
    }

    #[test]
    fn rejects_bad_header_negative_and_duplicate() {
        assert!(read_fixture("id,query,count\n".as_bytes(), "t").is_err());
        assert!(read_fixture("query_id,rendered_query,count\na,site:x.y,-1\n".as_bytes(), "t").is_err());
        assert!(read_fixture("query_id,rendered_query,count\na,site:x.y,1.5\n".as_bytes(), "t").is_err());
        let dup = "query_id,rendered_query,count\na,site:x.y,1\na,site:x.y,2\n";
        assert!(read_fixture(dup.as_bytes(), "t").is_err());
    }

    #[test]
    fn writes_lf_and_quotes() {
        let set = read_fixture(
            "query_id,rendered_query,count\nabc,\"\"\"a.edu\"\" -site:a.edu\",5\n".as_bytes(),
            "t",
        )
        .unwrap();
        let mut out = Vec::new();
        write_fixture(&set, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "query_id,rendered_query,count\nabc,\"\"\"a.edu\"\" -site:a.edu\",5\n"
        );
    }
}
