//! Epoch handling: ISO-8601 parsing, Julian dates, Greenwich mean sidereal
//! time and decimal years. UTC is treated as a uniform timescale; leap
//! seconds are irrelevant at the accuracy level of this simulation.

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const JD_UNIX: f64 = 2440587.5;
const JD_J2000: f64 = 2451545.0;

/// A UTC epoch; simulation time is seconds past this instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Epoch {
    datetime: DateTime<Utc>,
}

impl Epoch {
    /// Parse an ISO-8601 timestamp such as `2020-03-20T00:00:00Z`.
    pub fn parse(s: &str) -> Result<Epoch> {
        let datetime = DateTime::parse_from_rfc3339(s)
            .map_err(|e| Error::Config(format!("bad epoch {s:?}: {e}")))?
            .with_timezone(&Utc);
        Ok(Epoch { datetime })
    }

    pub fn year(&self) -> i32 {
        self.datetime.year()
    }

    /// Julian date at `t` seconds past the epoch.
    pub fn julian_date(&self, t: f64) -> f64 {
        let unix = self.datetime.timestamp() as f64
            + self.datetime.timestamp_subsec_nanos() as f64 * 1e-9;
        JD_UNIX + (unix + t) / 86400.0
    }

    /// Julian centuries of 36525 days past J2000.0.
    pub fn centuries_j2000(&self, t: f64) -> f64 {
        (self.julian_date(t) - JD_J2000) / 36525.0
    }

    /// Greenwich mean sidereal time in radians, in [0, 2π).
    pub fn gmst(&self, t: f64) -> f64 {
        let d = self.julian_date(t) - JD_J2000;
        let tc = d / 36525.0;
        let deg = 280.46061837 + 360.98564736629 * d + 0.000387933 * tc * tc
            - tc * tc * tc / 38_710_000.0;
        deg.rem_euclid(360.0).to_radians()
    }

    /// Decimal year at `t` seconds past the epoch (IGRF time argument).
    pub fn decimal_year(&self, t: f64) -> f64 {
        let dt = self.datetime + chrono::Duration::milliseconds((t * 1e3) as i64);
        let year = dt.year();
        let start = year_start_jd(year);
        let end = year_start_jd(year + 1);
        let jd = self.julian_date(t);
        year as f64 + (jd - start) / (end - start)
    }

    pub fn to_rfc3339(&self) -> String {
        self.datetime.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

fn year_start_jd(year: i32) -> f64 {
    use chrono::TimeZone;
    let dt = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
    JD_UNIX + dt.timestamp() as f64 / 86400.0
}

impl TryFrom<String> for Epoch {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Epoch::parse(&s)
    }
}

impl From<Epoch> for String {
    fn from(e: Epoch) -> String {
        e.to_rfc3339()
    }
}
