use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Element;

/// One row of a by-year file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawObservation {
    pub station_id: String,
    pub date: NaiveDate,
    pub element: Element,
    /// Tenths of °C for temperatures, tenths of mm for PRCP.
    pub value: i32,
    pub m_flag: Option<char>,
    pub q_flag: Option<char>,
    pub s_flag: Option<char>,
    /// `HHMM`.
    pub obs_time: Option<String>,
}

impl RawObservation {
    /// Render back to the by-year CSV layout.
    pub fn to_csv_line(&self) -> String {
        let flag = |f: Option<char>| f.map(String::from).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.station_id,
            self.date.format("%Y%m%d"),
            self.element,
            self.value,
            flag(self.m_flag),
            flag(self.q_flag),
            flag(self.s_flag),
            self.obs_time.as_deref().unwrap_or("")
        )
    }
}

fn flag(field: &str) -> Result<Option<char>> {
    let mut chars = field.chars();
    match (chars.next(), chars.next()) {
        (None, _) => Ok(None),
        (Some(' '), None) => Ok(None),
        (Some(c), None) => Ok(Some(c)),
        _ => Err(Error::malformed(format!("flag {field:?} longer than one character"))),
    }
}

pub(crate) fn parse_yyyymmdd(s: &str) -> Result<NaiveDate> {
    if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::malformed(format!("date {s:?} is not YYYYMMDD")));
    }
    let year: i32 = s[0..4].parse().unwrap();
    let month: u32 = s[4..6].parse().unwrap();
    let day: u32 = s[6..8].parse().unwrap();
    NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| Error::malformed(format!("date {s:?} is not a calendar date")))
}

/// Parse one comma-separated by-year record.
pub fn parse_daily_record(line: &str) -> Result<RawObservation> {
    let line = line.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8 {
        return Err(Error::malformed(format!(
            "expected 8 fields, found {} in {line:?}",
            fields.len()
        )));
    }
    let station_id = fields[0];
    if station_id.len() != 11 || !station_id.is_ascii() {
        return Err(Error::malformed(format!("station id {station_id:?} is not 11 characters")));
    }
    let date = parse_yyyymmdd(fields[1])?;
    let element = Element::parse(fields[2])?;
    let value: i32 = fields[3]
        .trim()
        .parse()
        .map_err(|_| Error::malformed(format!("value {:?} is not an integer", fields[3])))?;
    let obs_time = match fields[7].trim() {
        "" => None,
        t if t.len() == 4 && t.bytes().all(|b| b.is_ascii_digit()) => Some(t.to_string()),
        t => return Err(Error::malformed(format!("observation time {t:?} is not HHMM"))),
    };
    Ok(RawObservation {
        station_id: station_id.to_string(),
        date,
        element,
        value,
        m_flag: flag(fields[4])?,
        q_flag: flag(fields[5])?,
        s_flag: flag(fields[6])?,
        obs_time,
    })
}

/// Ingest filters applied while streaming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestPolicy {
    /// Drop rows whose quality flag is set.
    pub discard_quality_flagged: bool,
}

impl Default for IngestPolicy {
    fn default() -> Self {
        IngestPolicy {
            discard_quality_flagged: true,
        }
    }
}

/// Line accounting for one streamed file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: u64,
    pub bytes: u64,
    pub retained: u64,
    pub malformed: u64,
    pub quality_flagged: u64,
    pub other_elements: u64,
}

/// Streaming reader over a by-year CSV that yields only retained TMIN/TMAX/PRCP
/// rows. Malformed lines are counted and skipped; only I/O errors surface.
pub struct DailyReader<R> {
    inner: R,
    policy: IngestPolicy,
    stats: IngestStats,
    line: String,
}

impl<R: BufRead> DailyReader<R> {
    pub fn new(inner: R, policy: IngestPolicy) -> Self {
        DailyReader {
            inner,
            policy,
            stats: IngestStats::default(),
            line: String::with_capacity(64),
        }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for DailyReader<R> {
    type Item = std::io::Result<RawObservation>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            let n = match self.inner.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(n) => n,
                Err(e) => return Some(Err(e)),
            };
            self.stats.bytes += n as u64;
            if self.line.trim().is_empty() {
                continue;
            }
            self.stats.lines += 1;
            let obs = match parse_daily_record(&self.line) {
                Ok(obs) => obs,
                Err(e) => {
                    self.stats.malformed += 1;
                    if self.stats.malformed <= 10 {
                        log::warn!("skipping line {}: {e}", self.stats.lines);
                    }
                    continue;
                }
            };
            if obs.element.variable().is_none() {
                self.stats.other_elements += 1;
                continue;
            }
            if self.policy.discard_quality_flagged && obs.q_flag.is_some() {
                self.stats.quality_flagged += 1;
                continue;
            }
            self.stats.retained += 1;
            return Some(Ok(obs));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_full_record() {
        let obs = parse_daily_record("CA007020860,20170101,TMIN,-250,,,C,0700").unwrap();
        assert_eq!(obs.station_id, "CA007020860");
        assert_eq!(obs.date, NaiveDate::from_ymd_opt(2017, 1, 1).unwrap());
        assert_eq!(obs.element, Element::Tmin);
        assert_eq!(obs.value, -250);
        assert_eq!((obs.m_flag, obs.q_flag, obs.s_flag), (None, None, Some('C')));
        assert_eq!(obs.obs_time.as_deref(), Some("0700"));
    }

    #[test]
    fn empty_trailing_fields_are_absent() {
        let obs = parse_daily_record("JOM00040250,20180615,PRCP,0,,,S,").unwrap();
        assert_eq!(obs.value, 0);
        assert_eq!(obs.obs_time, None);
        assert_eq!(obs.s_flag, Some('S'));
    }

    #[test]
    fn rejects_bad_rows() {
        for line in [
            "X,20170101,TMIN",
            "CA007020860,20170230,TMIN,1,,,C,",
            "CA007020860,2017011,TMIN,1,,,C,",
            "CA007020860,20170101,TMIN,1.5,,,C,",
            "CA00702086,20170101,TMIN,1,,,C,",
            "CA007020860,20170101,TMIN,1,,,C,7",
        ] {
            assert_eq!(parse_daily_record(line).unwrap_err().code(), "E_MALFORMED", "{line}");
        }
    }

    #[test]
    fn reader_filters_and_counts() {
        let data = "\
CA007020860,20170101,TMIN,-250,,,C,0700
CA007020860,20170101,SNOW,10,,,C,0700
CA007020860,20170101,TMAX,-20,,X,C,0700
garbage line
CA007020860,20170102,PRCP,33,,,C,
";
        let mut reader = DailyReader::new(data.as_bytes(), IngestPolicy::default());
        let kept: Vec<_> = reader.by_ref().map(|r| r.unwrap()).collect();
        assert_eq!(kept.len(), 2);
        let stats = reader.stats();
        assert_eq!(stats.lines, 5);
        assert_eq!(stats.malformed, 1);
        assert_eq!(stats.other_elements, 1);
        assert_eq!(stats.quality_flagged, 1);
        assert_eq!(stats.retained, 2);

        let lenient = IngestPolicy {
            discard_quality_flagged: false,
        };
        assert_eq!(DailyReader::new(data.as_bytes(), lenient).count(), 3);
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            id in "[A-Z]{2}[A-Z0-9]{9}",
            days in 0i64..100_000,
            element in prop::sample::select(vec!["TMIN", "TMAX", "PRCP", "SNOW", "TAVG"]),
            value in -9999i32..99999,
            m in prop::option::of(prop::sample::select(vec!['B', 'D', 'T'])),
            q in prop::option::of(prop::sample::select(vec!['I', 'G', 'X'])),
            s in prop::option::of(prop::sample::select(vec!['C', 'S', '0', 'E'])),
            t in prop::option::of(0u32..2400),
        ) {
            let date = NaiveDate::from_ymd_opt(1800, 1, 1).unwrap() + chrono::Duration::days(days);
            let obs = RawObservation {
                station_id: id,
                date,
                element: Element::parse(element).unwrap(),
                value,
                m_flag: m,
                q_flag: q,
                s_flag: s,
                obs_time: t.map(|t| format!("{t:04}")),
            };
            let back = parse_daily_record(&obs.to_csv_line()).unwrap();
            prop_assert_eq!(back, obs);
        }

        #[test]
        fn parser_never_panics(line in ".{0,80}") {
            let _ = parse_daily_record(&line);
        }
    }
}
