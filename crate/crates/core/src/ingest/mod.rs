//! GHCN daily acquisition: by-year URLs, downloads, gzip decompression and the
//! streaming record parser.

mod fetch;
mod gz;
mod record;
mod station;

pub use fetch::{
    build_year_url, build_year_url_with_base, current_year, download_stations_from, download_year,
    download_year_from, stations_url, YearFile, DEFAULT_BASE_URL, FIRST_YEAR, STATIONS_FILE,
};
pub use gz::decompress_gz;
pub(crate) use record::parse_yyyymmdd;
pub use record::{parse_daily_record, DailyReader, IngestPolicy, IngestStats, RawObservation};
pub use station::{format_station_line, parse_station_line, StationRecord};
