use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};

use crate::error::IngestError;

/// A UTC instant at hourly resolution, stored as whole hours since the Unix epoch.
///
/// Minute and second components are zero by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_epoch_hours(hours: i64) -> Self {
        Timestamp(hours)
    }

    pub const fn epoch_hours(self) -> i64 {
        self.0
    }

    /// Builds a timestamp from calendar fields. Returns `None` for invalid dates or hours.
    pub fn from_ymdh(year: i32, month: u32, day: u32, hour: u32) -> Option<Self> {
        let dt = NaiveDate::from_ymd_opt(year, month, day)?.and_hms_opt(hour, 0, 0)?;
        Some(Self::from_naive(dt))
    }

    /// Midnight-aligned date plus an hour of day.
    pub fn from_date_hour(date: NaiveDate, hour: u32) -> Option<Self> {
        Some(Self::from_naive(date.and_hms_opt(hour, 0, 0)?))
    }

    fn from_naive(dt: NaiveDateTime) -> Self {
        Timestamp(dt.and_utc().timestamp().div_euclid(3600))
    }

    pub fn to_naive(self) -> NaiveDateTime {
        DateTime::from_timestamp(self.0 * 3600, 0)
            .expect("hour count within chrono range")
            .naive_utc()
    }

    pub fn date(self) -> NaiveDate {
        self.to_naive().date()
    }

    pub fn year(self) -> i32 {
        self.to_naive().year()
    }

    pub fn hour(self) -> u32 {
        self.to_naive().hour()
    }

    /// 1-based ordinal day within the calendar year (1..=366).
    pub fn day_of_year(self) -> u32 {
        self.to_naive().ordinal()
    }

    /// The instant `lead_h` hours after `self`.
    pub fn add_hours(self, lead_h: u32) -> Self {
        Timestamp(self.0 + i64::from(lead_h))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_naive().format("%Y-%m-%dT%H:00:00Z"))
    }
}

impl FromStr for Timestamp {
    type Err = IngestError;

    /// Parses `YYYY-MM-DDTHH:00:00Z`. Non-zero minutes or seconds are rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::BadTimestamp(s.to_string());
        let body = s.strip_suffix('Z').ok_or_else(bad)?;
        let dt = NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M:%S").map_err(|_| bad())?;
        if dt.minute() != 0 || dt.second() != 0 {
            return Err(bad());
        }
        Ok(Self::from_naive(dt))
    }
}

/// Ordinal day of the year of `t`, in `1..=366`.
pub fn day_of_year(t: Timestamp) -> u32 {
    t.day_of_year()
}

/// `init` shifted forward by `lead_h` hours.
pub fn valid_time(init: Timestamp, lead_h: u32) -> Timestamp {
    init.add_hours(lead_h)
}
