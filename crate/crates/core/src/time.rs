//! UTC instants, calendar months and observation windows.
//!
//! Instants are whole seconds since the Unix epoch. All calendar arithmetic
//! is UTC.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use chrono::{DateTime, Datelike, Months, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::TimeError;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// A UTC instant with second precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix(seconds: i64) -> Self {
        Timestamp(seconds)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    /// Midnight UTC of the given calendar date.
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Self, TimeError> {
        let date = NaiveDate::from_ymd_opt(year, month, day).ok_or(TimeError::InvalidDate)?;
        Ok(Timestamp(date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()))
    }

    /// Parses an RFC 3339 / ISO-8601 instant such as `2024-01-01T00:00:00Z`.
    /// Offsets are normalized to UTC; sub-second digits are truncated.
    pub fn parse(text: &str) -> Result<Self, TimeError> {
        let parsed = DateTime::parse_from_rfc3339(text.trim())
            .map_err(|_| TimeError::Unparseable(String::from(text)))?;
        Ok(Timestamp(parsed.timestamp()))
    }

    fn datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).expect("timestamp within chrono range")
    }

    pub fn month(self) -> MonthKey {
        let dt = self.datetime();
        MonthKey {
            year: dt.year(),
            month: dt.month() as u8,
        }
    }

    /// Days since the epoch of the UTC calendar date containing this instant.
    pub fn day_index(self) -> i64 {
        self.0.div_euclid(SECONDS_PER_DAY)
    }

    pub fn plus_days(self, days: i64) -> Self {
        Timestamp(self.0 + days * SECONDS_PER_DAY)
    }

    pub fn plus_seconds(self, seconds: i64) -> Self {
        Timestamp(self.0 + seconds)
    }

    /// Adds calendar months, clamping the day of month where needed.
    pub fn plus_months(self, months: u32) -> Self {
        let dt = self.datetime() + Months::new(months);
        Timestamp(dt.timestamp())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.datetime().format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

impl TryFrom<String> for Timestamp {
    type Error = TimeError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Timestamp::parse(&value)
    }
}

impl From<Timestamp> for String {
    fn from(value: Timestamp) -> Self {
        alloc::format!("{value}")
    }
}

/// A UTC calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthKey {
    pub year: i32,
    pub month: u8,
}

impl MonthKey {
    pub fn new(year: i32, month: u8) -> Result<Self, TimeError> {
        if !(1..=12).contains(&month) {
            return Err(TimeError::InvalidDate);
        }
        Ok(MonthKey { year, month })
    }

    pub fn start(self) -> Timestamp {
        Timestamp::from_ymd(self.year, self.month as u32, 1).expect("valid month key")
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            MonthKey { year: self.year + 1, month: 1 }
        } else {
            MonthKey { year: self.year, month: self.month + 1 }
        }
    }

    pub fn pred(self) -> Self {
        if self.month == 1 {
            MonthKey { year: self.year - 1, month: 12 }
        } else {
            MonthKey { year: self.year, month: self.month - 1 }
        }
    }

    /// Whole months from `earlier` to `self` (negative when `earlier` is later).
    pub fn months_since(self, earlier: MonthKey) -> i64 {
        (self.year as i64 - earlier.year as i64) * 12 + (self.month as i64 - earlier.month as i64)
    }

    pub fn parse(text: &str) -> Result<Self, TimeError> {
        let bad = || TimeError::Unparseable(String::from(text));
        let (y, m) = text.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse::<i32>().map_err(|_| bad())?;
        let month = m.parse::<u8>().map_err(|_| bad())?;
        MonthKey::new(year, month)
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl TryFrom<String> for MonthKey {
    type Error = TimeError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        MonthKey::parse(&value)
    }
}

impl From<MonthKey> for String {
    fn from(value: MonthKey) -> Self {
        alloc::format!("{value}")
    }
}

/// Half-open observation interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, TimeError> {
        if end < start {
            return Err(TimeError::EmptyWindow);
        }
        Ok(TimeWindow { start, end })
    }

    /// The whole calendar months `first ..= last`.
    pub fn months(first: MonthKey, last: MonthKey) -> Result<Self, TimeError> {
        TimeWindow::new(first.start(), last.succ().start())
    }

    /// A window wide enough to hold any representable instant.
    pub fn unbounded() -> Self {
        TimeWindow {
            start: Timestamp::from_unix(i64::MIN / 4),
            end: Timestamp::from_unix(i64::MAX / 4),
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn duration_seconds(&self) -> i64 {
        self.end.unix() - self.start.unix()
    }

    /// Calendar months that intersect the window, in order.
    pub fn month_keys(&self) -> Vec<MonthKey> {
        let mut out = Vec::new();
        if self.end <= self.start {
            return out;
        }
        let last = Timestamp::from_unix(self.end.unix() - 1).month();
        let mut m = self.start.month();
        while m <= last {
            out.push(m);
            m = m.succ();
        }
        out
    }
}
