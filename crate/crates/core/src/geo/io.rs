//! Tab-separated POI and track files.
//!
//! POI line: `id name lat lon h g ns c visit_min category description`,
//! eleven fields separated by single tabs. Track line: `timestamp lat lon`.
//! Blank lines and lines starting with `#` are ignored in both.

use std::fmt::Write as _;

use super::{GeoPoint, Poi, PoiStore, Track, TrackPoint};
use crate::learning::AxisMembership;
use crate::text::{content_lines, format_instant, parse_f64, parse_instant};

pub const POI_HEADER: &str = "# id\tname\tlat\tlon\th\tg\tns\tc\tvisit_min\tcategory\tdescription";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// Result of reading a POI file: the valid records plus the rejected lines.
#[derive(Debug, Clone, Default)]
pub struct PoiIngest {
    pub store: PoiStore,
    pub rejected: Vec<RejectedLine>,
}

/// Parses one POI record (without the trailing newline).
pub fn parse_poi_line(line: &str) -> Result<Poi, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 11 {
        return Err(format!("expected 11 tab-separated fields, found {}", fields.len()));
    }
    let num = |i: usize, name: &str| parse_f64(fields[i]).map_err(|e| format!("{name}: {e}"));
    let position = GeoPoint::new(num(2, "lat")?, num(3, "lon")?).map_err(|e| e.to_string())?;
    let membership = AxisMembership::new([num(4, "h")?, num(5, "g")?, num(6, "ns")?, num(7, "c")?])
        .map_err(|e| e.to_string())?;
    let visit: u32 = fields[8]
        .trim()
        .parse()
        .map_err(|_| format!("visit_min: not a positive integer: {:?}", fields[8]))?;
    Poi::new(
        fields[0].trim(),
        fields[1],
        position,
        membership,
        visit,
        fields[9].trim(),
        fields[10],
    )
    .map_err(|e| e.to_string())
}

/// Reads a POI file. Malformed lines and duplicate ids are rejected one by
/// one; they never fail the whole file.
pub fn parse_pois(text: &str) -> PoiIngest {
    let mut ingest = PoiIngest::default();
    for (line, content) in content_lines(text) {
        let outcome = parse_poi_line(content)
            .and_then(|poi| ingest.store.insert(poi).map_err(|e| e.to_string()));
        if let Err(reason) = outcome {
            ingest.rejected.push(RejectedLine { line, reason });
        }
    }
    ingest
}

/// Canonical POI file for a store; [`parse_pois`] reads it back unchanged.
pub fn format_pois(store: &PoiStore) -> String {
    let mut out = String::from(POI_HEADER);
    out.push('\n');
    for p in store.pois() {
        let m = p.membership().values();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.id(),
            p.name(),
            p.position().lat(),
            p.position().lon(),
            m[0],
            m[1],
            m[2],
            m[3],
            p.visit_min(),
            p.category(),
            p.description()
        );
    }
    out
}

pub fn parse_track(text: &str) -> Result<Track, RejectedLine> {
    let mut points = Vec::new();
    let mut last_line = 0;
    for (line, content) in content_lines(text) {
        last_line = line;
        let reject = |reason: String| RejectedLine { line, reason };
        let fields: Vec<&str> = content.split('\t').collect();
        if fields.len() != 3 {
            return Err(reject(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let time = parse_instant(fields[0]).map_err(reject)?;
        let lat = parse_f64(fields[1]).map_err(|e| reject(format!("lat: {e}")))?;
        let lon = parse_f64(fields[2]).map_err(|e| reject(format!("lon: {e}")))?;
        let position = GeoPoint::new(lat, lon).map_err(|e| reject(e.to_string()))?;
        points.push(TrackPoint { time, position });
    }
    Track::new(points).map_err(|e| RejectedLine {
        line: last_line,
        reason: e.to_string(),
    })
}

pub fn format_track(track: &Track) -> String {
    let mut out = String::new();
    for p in track.points() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            format_instant(&p.time),
            p.position.lat(),
            p.position.lon()
        );
    }
    out
}
