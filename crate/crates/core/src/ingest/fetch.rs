use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

pub const DEFAULT_BASE_URL: &str = "https://www1.ncdc.noaa.gov/pub/data/ghcn/daily/by_year";

/// Earliest year in the by-year archive.
pub const FIRST_YEAR: i32 = 1763;

pub fn current_year() -> i32 {
    chrono::Utc::now().year()
}

/// URL of the compressed by-year file on the public archive.
pub fn build_year_url(year: i32) -> Result<String> {
    build_year_url_with_base(DEFAULT_BASE_URL, year)
}

pub fn build_year_url_with_base(base: &str, year: i32) -> Result<String> {
    let max = current_year();
    if !(FIRST_YEAR..=max).contains(&year) {
        return Err(Error::YearRange {
            year,
            min: FIRST_YEAR,
            max,
        });
    }
    Ok(format!("{}/{year}.csv.gz", base.trim_end_matches('/')))
}

/// A by-year file on local disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearFile {
    pub year: i32,
    pub compressed_path: PathBuf,
    pub compressed_bytes: u64,
    pub csv_path: Option<PathBuf>,
    pub csv_bytes: Option<u64>,
    pub record_count: Option<u64>,
}

pub fn download_year(year: i32, dest_dir: &Path, progress: &mut dyn FnMut(u8)) -> Result<YearFile> {
    download_year_from(DEFAULT_BASE_URL, year, dest_dir, progress)
}

/// Download `<base>/<year>.csv.gz` into `dest_dir`.
///
/// The body is streamed into a `.part` file that is renamed into place once
/// complete, so a failed transfer never leaves a file behind. `progress`
/// receives non-decreasing percentages, starting at 0 and ending at 100.
pub fn download_year_from(
    base: &str,
    year: i32,
    dest_dir: &Path,
    progress: &mut dyn FnMut(u8),
) -> Result<YearFile> {
    let url = build_year_url_with_base(base, year)?;
    fs::create_dir_all(dest_dir).at(dest_dir)?;
    let dest = dest_dir.join(format!("{year}.csv.gz"));
    let part = dest_dir.join(format!("{year}.csv.gz.part"));

    let mut reported = 0u8;
    progress(0);
    let result = fetch_into(&url, &part, &mut |pct| {
        if pct > reported {
            reported = pct;
            progress(pct);
        }
    });
    let bytes = match result {
        Ok(bytes) => bytes,
        Err(e) => {
            let _ = fs::remove_file(&part);
            return Err(e);
        }
    };
    if let Err(e) = fs::rename(&part, &dest) {
        let _ = fs::remove_file(&part);
        return Err(Error::disk(&dest, e));
    }
    if reported < 100 {
        progress(100);
    }
    Ok(YearFile {
        year,
        compressed_path: dest,
        compressed_bytes: bytes,
        csv_path: None,
        csv_bytes: None,
        record_count: None,
    })
}

fn fetch_into(url: &str, part: &Path, progress: &mut dyn FnMut(u8)) -> Result<u64> {
    let response = ureq::get(url)
        .call()
        .map_err(|e| Error::Network(format!("{url}: {e}")))?;
    let total: Option<u64> = response
        .headers()
        .get("content-length")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok());
    let mut body = response.into_body();
    let mut reader = body.as_reader();

    let mut out = File::create(part).at(part)?;
    let mut buf = vec![0u8; 1 << 16];
    let mut written = 0u64;
    loop {
        let n = reader
            .read(&mut buf)
            .map_err(|e| Error::Network(format!("{url}: {e}")))?;
        if n == 0 {
            break;
        }
        out.write_all(&buf[..n]).at(part)?;
        written += n as u64;
        if let Some(total) = total.filter(|t| *t > 0) {
            // 100 is reserved for the final rename.
            progress(((written * 99) / total).min(99) as u8);
        }
    }
    if let Some(total) = total {
        if written != total {
            return Err(Error::Network(format!(
                "{url}: body ended after {written} of {total} bytes"
            )));
        }
    }
    out.sync_all().at(part)?;
    Ok(written)
}

/// Name of the fixed-width station list on the archive.
pub const STATIONS_FILE: &str = "ghcnd-stations.txt";

/// The station list sits one level above the by-year directory.
pub fn stations_url(base: &str) -> String {
    let base = base.trim_end_matches('/');
    let root = base.strip_suffix("/by_year").unwrap_or(base);
    format!("{root}/{STATIONS_FILE}")
}

/// Download the station list into `dest_dir`, atomically.
pub fn download_stations_from(base: &str, dest_dir: &Path) -> Result<PathBuf> {
    let url = stations_url(base);
    fs::create_dir_all(dest_dir).at(dest_dir)?;
    let dest = dest_dir.join(STATIONS_FILE);
    let part = dest_dir.join(format!("{STATIONS_FILE}.part"));
    if let Err(e) = fetch_into(&url, &part, &mut |_| {}) {
        let _ = fs::remove_file(&part);
        return Err(e);
    }
    fs::rename(&part, &dest).at(&dest)?;
    Ok(dest)
}
