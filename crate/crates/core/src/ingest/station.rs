use crate::error::{Error, Result};

/// Fields taken from one line of `ghcnd-stations.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationRecord {
    pub station_id: String,
    pub latitude: f64,
    pub longitude: f64,
    /// Metres; absent when the file carries -999.9.
    pub elevation: Option<f64>,
    pub name: String,
}

/// 1-based inclusive column range, clipped to the line.
fn cols(line: &str, from: usize, to: usize) -> &str {
    let end = to.min(line.len());
    if from - 1 >= end {
        ""
    } else {
        &line[from - 1..end]
    }
}

fn number(line: &str, from: usize, to: usize, what: &str) -> Result<f64> {
    let field = cols(line, from, to).trim();
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::malformed(format!("{what} {field:?} in columns {from}-{to}")))
}

/// Parse a fixed-width station line: ID 1-11, latitude 13-20, longitude 22-30,
/// elevation 32-37, name 42-71.
pub fn parse_station_line(line: &str) -> Result<StationRecord> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.len() < 37 || !line.is_ascii() {
        return Err(Error::malformed(format!(
            "station line shorter than 37 columns: {line:?}"
        )));
    }
    let station_id = cols(line, 1, 11);
    if station_id.trim().len() != 11 {
        return Err(Error::malformed(format!("station id {station_id:?}")));
    }
    let latitude = number(line, 13, 20, "latitude")?;
    let longitude = number(line, 22, 30, "longitude")?;
    if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
        return Err(Error::malformed(format!(
            "coordinates ({latitude}, {longitude}) out of range for {station_id}"
        )));
    }
    let elevation = number(line, 32, 37, "elevation")?;
    let elevation = (elevation > -999.0).then_some(elevation);
    Ok(StationRecord {
        station_id: station_id.to_string(),
        latitude,
        longitude,
        elevation,
        name: cols(line, 42, 71).trim().to_string(),
    })
}

/// Render a station line in the same fixed-width layout.
pub fn format_station_line(rec: &StationRecord) -> String {
    format!(
        "{:<11} {:>8.4} {:>9.4} {:>6.1}    {:<30}",
        rec.station_id,
        rec.latitude,
        rec.longitude,
        rec.elevation.unwrap_or(-999.9),
        rec.name
    )
    .trim_end()
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jordan_station() {
        let line = "JOM00040250  32.5390   38.1950  686.0    H-4 IRWAISHED                  GSN     40250";
        let rec = parse_station_line(line).unwrap();
        assert_eq!(rec.station_id, "JOM00040250");
        assert_eq!(rec.latitude, 32.539);
        assert_eq!(rec.longitude, 38.195);
        assert_eq!(rec.elevation, Some(686.0));
        assert_eq!(rec.name, "H-4 IRWAISHED");
    }

    #[test]
    fn missing_elevation_is_absent() {
        let line = "ACW00011604  17.1167  -61.7833 -999.9    ST JOHNS COOLIDGE FLD";
        assert_eq!(parse_station_line(line).unwrap().elevation, None);
    }

    #[test]
    fn short_line_is_malformed() {
        assert_eq!(parse_station_line("JOM0004025").unwrap_err().code(), "E_MALFORMED");
    }

    #[test]
    fn out_of_range_latitude_is_malformed() {
        let line = "JOM00040250  95.5390   38.1950  686.0    X";
        assert_eq!(parse_station_line(line).unwrap_err().code(), "E_MALFORMED");
    }

    #[test]
    fn format_round_trips() {
        let rec = StationRecord {
            station_id: "SPE00120089".into(),
            latitude: 37.8444,
            longitude: -4.8464,
            elevation: Some(90.0),
            name: "CORDOBA AEROPUERTO".into(),
        };
        assert_eq!(parse_station_line(&format_station_line(&rec)).unwrap(), rec);
    }
}
