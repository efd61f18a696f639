//! Second-resolution UTC instants on the SCADA 10-minute grid.

use alloc::string::String;
use core::fmt;
use core::ops::{Add, Sub};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// SCADA sampling interval in seconds.
pub const GRID_SECONDS: i64 = 600;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn from_unix(secs: i64) -> Self {
        Self(secs)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    pub fn parse_rfc3339(s: &str) -> Option<Self> {
        let dt = DateTime::parse_from_rfc3339(s.trim()).ok()?;
        if dt.timestamp_subsec_nanos() != 0 {
            return None;
        }
        Some(Self(dt.timestamp()))
    }

    /// `YYYY-MM-DDTHH:MM:SSZ`.
    pub fn to_rfc3339(self) -> String {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
            None => alloc::format!("{}", self.0),
        }
    }

    /// Rounds to the nearest grid point; ties go to the later point.
    pub fn snap_to_grid(self) -> Self {
        let r = self.0.rem_euclid(GRID_SECONDS);
        if r * 2 >= GRID_SECONDS {
            Self(self.0 - r + GRID_SECONDS)
        } else {
            Self(self.0 - r)
        }
    }
}

impl Add<i64> for Timestamp {
    type Output = Timestamp;
    fn add(self, rhs: i64) -> Timestamp {
        Timestamp(self.0 + rhs)
    }
}

impl Sub<i64> for Timestamp {
    type Output = Timestamp;
    fn sub(self, rhs: i64) -> Timestamp {
        Timestamp(self.0 - rhs)
    }
}

impl Sub for Timestamp {
    type Output = i64;
    fn sub(self, rhs: Timestamp) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse_rfc3339(&s)
            .ok_or_else(|| serde::de::Error::custom(alloc::format!("invalid RFC 3339 timestamp `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc3339_round_trip() {
        let t = Timestamp::parse_rfc3339("2016-01-03T00:00:00Z").unwrap();
        assert_eq!(t.unix(), 1_451_779_200);
        assert_eq!(t.to_rfc3339(), "2016-01-03T00:00:00Z");
        let off = Timestamp::parse_rfc3339("2016-01-03T01:00:00+01:00").unwrap();
        assert_eq!(off, t);
    }

    #[test]
    fn rejects_fractional_seconds() {
        assert!(Timestamp::parse_rfc3339("2016-01-03T00:00:00.5Z").is_none());
        assert!(Timestamp::parse_rfc3339("yesterday").is_none());
    }

    #[test]
    fn grid_snapping() {
        assert_eq!(Timestamp(0).snap_to_grid(), Timestamp(0));
        assert_eq!(Timestamp(299).snap_to_grid(), Timestamp(0));
        assert_eq!(Timestamp(300).snap_to_grid(), Timestamp(600));
        assert_eq!(Timestamp(-1).snap_to_grid(), Timestamp(0));
    }
}
