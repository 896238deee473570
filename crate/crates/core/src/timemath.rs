//! Time units, time zones and calendar arithmetic.
//!
//! Timestamps are POSIX epoch seconds (`f64`, sub-second precision through
//! decimals). Physical units (`s`, `m`, `h`) have a fixed length; calendar
//! units (`D`, `W`, `M`, `Y`) are resolved against the wall clock of a time
//! zone, so a `1D` unit lasts 23, 24 or 25 hours depending on DST.

use std::fmt;
use std::str::FromStr;

use chrono::{
    DateTime, Datelike, Days, LocalResult, Months, NaiveDate, NaiveDateTime, Offset, TimeZone as _,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version of the bundled IANA time zone database.
pub const TZDB_VERSION: &str = chrono_tz::IANA_TZDB_VERSION;

/// A point in time, in seconds since 1970-01-01T00:00:00 UTC.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub f64);

impl Timestamp {
    pub fn as_secs(self) -> f64 {
        self.0
    }

    /// Seconds elapsed from `earlier` to `self`.
    pub fn since(self, earlier: Timestamp) -> f64 {
        self.0 - earlier.0
    }

    pub fn offset(self, seconds: f64) -> Timestamp {
        Timestamp(self.0 + seconds)
    }
}

impl From<f64> for Timestamp {
    fn from(value: f64) -> Self {
        Timestamp(value)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `{:?}` keeps a trailing ".0" on integral values, like the log lines do.
        write!(f, "{:?}", self.0)
    }
}

/// An IANA time zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeZone(chrono_tz::Tz);

impl TimeZone {
    pub const UTC: TimeZone = TimeZone(chrono_tz::UTC);

    pub fn name(&self) -> &'static str {
        self.0.name()
    }

    /// Local wall clock of `t` in this zone.
    pub fn local(&self, t: Timestamp) -> NaiveDateTime {
        self.datetime(t).naive_local()
    }

    pub(crate) fn datetime(&self, t: Timestamp) -> DateTime<chrono_tz::Tz> {
        let secs = t.0.floor();
        let nanos = ((t.0 - secs) * 1e9).round().min(999_999_999.0) as u32;
        self.0
            .timestamp_opt(secs as i64, nanos)
            .single()
            .expect("epoch timestamps always map to a single instant")
    }

    /// UTC offset in seconds in effect at `t`.
    pub fn offset_at(&self, t: Timestamp) -> i32 {
        self.datetime(t).offset().fix().local_minus_utc()
    }

    /// Resolves a local wall-clock time to an instant.
    ///
    /// Ambiguous times (fall-back) take the earlier instant. Times inside a
    /// spring-forward gap are pushed forward by the gap width.
    pub fn resolve_local(&self, local: NaiveDateTime) -> Timestamp {
        match self.0.from_local_datetime(&local) {
            LocalResult::Single(dt) => to_timestamp(&dt),
            LocalResult::Ambiguous(a, b) => {
                let (a, b) = (to_timestamp(&a), to_timestamp(&b));
                if a.0 <= b.0 {
                    a
                } else {
                    b
                }
            }
            LocalResult::None => {
                // Offset in effect before the gap, applied to the missing wall time.
                let before = local - chrono::Duration::hours(24);
                let offset = self.0.offset_from_utc_datetime(&before).fix().local_minus_utc();
                let naive_secs = local.and_utc().timestamp() as f64
                    + f64::from(local.and_utc().timestamp_subsec_nanos()) / 1e9;
                Timestamp(naive_secs - f64::from(offset))
            }
        }
    }

    /// Formats `t` as `YYYY-MM-DD HH:MM:SS +HH:MM` in this zone.
    pub fn format(&self, t: Timestamp) -> String {
        self.datetime(t).format("%Y-%m-%d %H:%M:%S %:z").to_string()
    }
}

fn to_timestamp<Tz: chrono::TimeZone>(dt: &DateTime<Tz>) -> Timestamp {
    Timestamp(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) / 1e9)
}

impl Default for TimeZone {
    fn default() -> Self {
        TimeZone::UTC
    }
}

impl FromStr for TimeZone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<chrono_tz::Tz>()
            .map(TimeZone)
            .map_err(|_| Error::UnknownTimeZone(s.to_string()))
    }
}

impl fmt::Display for TimeZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for TimeZone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TimeZone {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitKind {
    Seconds,
    Minutes,
    Hours,
    Days,
    Weeks,
    Months,
    Years,
}

impl UnitKind {
    fn suffix(self) -> char {
        match self {
            UnitKind::Seconds => 's',
            UnitKind::Minutes => 'm',
            UnitKind::Hours => 'h',
            UnitKind::Days => 'D',
            UnitKind::Weeks => 'W',
            UnitKind::Months => 'M',
            UnitKind::Years => 'Y',
        }
    }

    fn from_suffix(c: &str) -> Option<Self> {
        Some(match c {
            "s" => UnitKind::Seconds,
            "m" => UnitKind::Minutes,
            "h" => UnitKind::Hours,
            "D" => UnitKind::Days,
            "W" => UnitKind::Weeks,
            "M" => UnitKind::Months,
            "Y" => UnitKind::Years,
            _ => return None,
        })
    }

    /// Length in seconds for physical kinds.
    fn fixed_seconds(self) -> Option<f64> {
        match self {
            UnitKind::Seconds => Some(1.0),
            UnitKind::Minutes => Some(60.0),
            UnitKind::Hours => Some(3600.0),
            _ => None,
        }
    }
}

/// A span of time such as `60s`, `1h`, `1D` or `3M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeUnit {
    count: u32,
    kind: UnitKind,
}

impl TimeUnit {
    pub fn new(count: u32, kind: UnitKind) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidUnit {
                token: format!("0{}", kind.suffix()),
                reason: "count must be positive".into(),
            });
        }
        Ok(TimeUnit { count, kind })
    }

    pub fn seconds(count: u32) -> Result<Self> {
        Self::new(count, UnitKind::Seconds)
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn kind(&self) -> UnitKind {
        self.kind
    }

    pub fn is_physical(&self) -> bool {
        self.kind.fixed_seconds().is_some()
    }

    pub fn is_calendar(&self) -> bool {
        !self.is_physical()
    }

    /// Fixed length in seconds, `None` for calendar units.
    pub fn physical_seconds(&self) -> Option<f64> {
        self.kind.fixed_seconds().map(|s| s * f64::from(self.count))
    }

    /// Unit spelling for a constant sampling delta: whole hours as `h`,
    /// anything else in seconds. Fractional deltas have no unit.
    pub fn from_seconds(seconds: f64) -> Option<Self> {
        if !(seconds.is_finite() && seconds >= 1.0 && seconds.fract() == 0.0) || seconds > u32::MAX as f64 {
            return None;
        }
        let secs = seconds as u32;
        if secs.is_multiple_of(3600) {
            Some(TimeUnit { count: secs / 3600, kind: UnitKind::Hours })
        } else {
            Some(TimeUnit { count: secs, kind: UnitKind::Seconds })
        }
    }

    /// Physical length of the span starting at `anchor`.
    pub fn duration_at(&self, anchor: Timestamp, tz: TimeZone) -> f64 {
        match self.physical_seconds() {
            Some(s) => s,
            None => shift(anchor, *self, 1, tz).since(anchor),
        }
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidUnit { token: text.to_string(), reason: reason.into() };
        let split = text
            .char_indices()
            .find(|(_, c)| !c.is_ascii_digit())
            .map(|(i, _)| i)
            .ok_or_else(|| bad("missing unit suffix (one of s, m, h, D, W, M, Y)"))?;
        let (digits, suffix) = text.split_at(split);
        if digits.is_empty() {
            return Err(bad("missing leading count"));
        }
        let kind = UnitKind::from_suffix(suffix)
            .ok_or_else(|| bad(&format!("unknown suffix {suffix:?} (expected one of s, m, h, D, W, M, Y)")))?;
        let count: u32 = digits.parse().map_err(|_| bad("count out of range"))?;
        if count == 0 {
            return Err(bad("count must be positive"));
        }
        Ok(TimeUnit { count, kind })
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.count, self.kind.suffix())
    }
}

impl Serialize for TimeUnit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeUnit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a unit string such as `"1h"` or `"1D"`.
pub fn parse_unit(text: &str) -> Result<TimeUnit> {
    text.parse()
}

/// Physical length in seconds of `unit` starting at `anchor`.
pub fn duration_at(unit: TimeUnit, anchor: Timestamp, tz: TimeZone) -> f64 {
    unit.duration_at(anchor, tz)
}

fn add_calendar(local: NaiveDateTime, unit: TimeUnit, n: i64) -> NaiveDateTime {
    let count = i64::from(unit.count) * n;
    match unit.kind {
        UnitKind::Days => add_days(local, count),
        UnitKind::Weeks => add_days(local, count * 7),
        UnitKind::Months => add_months(local, count),
        UnitKind::Years => add_months(local, count * 12),
        _ => unreachable!("physical units never go through calendar arithmetic"),
    }
}

fn add_days(local: NaiveDateTime, days: i64) -> NaiveDateTime {
    if days >= 0 {
        local.checked_add_days(Days::new(days as u64))
    } else {
        local.checked_sub_days(Days::new(days.unsigned_abs()))
    }
    .expect("date out of supported range")
}

fn add_months(local: NaiveDateTime, months: i64) -> NaiveDateTime {
    let m = u32::try_from(months.unsigned_abs()).expect("month shift out of range");
    if months >= 0 {
        local.checked_add_months(Months::new(m))
    } else {
        local.checked_sub_months(Months::new(m))
    }
    .expect("date out of supported range")
}

/// Moves `anchor` by `n` units. Calendar units shift wall-clock fields and
/// re-resolve in `tz`, so `1D` keeps the local time of day across DST.
pub fn shift(anchor: Timestamp, unit: TimeUnit, n: i64, tz: TimeZone) -> Timestamp {
    match unit.physical_seconds() {
        Some(s) => Timestamp(anchor.0 + s * n as f64),
        None => tz.resolve_local(add_calendar(tz.local(anchor), unit, n)),
    }
}

const EPOCH_MONDAY: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 5) {
    Some(d) => d,
    None => panic!("valid date"),
};

fn epoch_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

/// Largest unit boundary not after `anchor`.
///
/// Physical units align to epoch multiples (UTC); days, weeks, months and
/// years align to local midnight, Monday, the first of the month and
/// January 1st in `tz`. Multi-count calendar units align to multiples
/// counted from 1970.
pub fn floor(anchor: Timestamp, unit: TimeUnit, tz: TimeZone) -> Timestamp {
    if let Some(s) = unit.physical_seconds() {
        return Timestamp((anchor.0 / s).floor() * s);
    }
    let local = tz.local(anchor);
    let date = local.date();
    let count = i64::from(unit.count);
    let start: NaiveDate = match unit.kind {
        UnitKind::Days => {
            let days = (date - epoch_date()).num_days();
            epoch_date() + chrono::Duration::days(days.div_euclid(count) * count)
        }
        UnitKind::Weeks => {
            let weeks = (date - EPOCH_MONDAY).num_days().div_euclid(7);
            EPOCH_MONDAY + chrono::Duration::weeks(weeks.div_euclid(count) * count)
        }
        UnitKind::Months => {
            let index = i64::from(date.year()) * 12 + i64::from(date.month0());
            let index = index.div_euclid(count) * count;
            NaiveDate::from_ymd_opt(index.div_euclid(12) as i32, index.rem_euclid(12) as u32 + 1, 1)
                .expect("valid month start")
        }
        UnitKind::Years => {
            let year = i64::from(date.year()).div_euclid(count) * count;
            NaiveDate::from_ymd_opt(year as i32, 1, 1).expect("valid year start")
        }
        _ => unreachable!(),
    };
    let mut boundary = tz.resolve_local(start.and_hms_opt(0, 0, 0).expect("midnight"));
    // A gap-shifted midnight can land after the anchor; step back one unit.
    if boundary.0 > anchor.0 {
        boundary = shift(boundary, unit, -1, tz);
    }
    boundary
}

/// Smallest unit boundary not before `anchor`.
pub fn ceil(anchor: Timestamp, unit: TimeUnit, tz: TimeZone) -> Timestamp {
    let f = floor(anchor, unit, tz);
    if f.0 == anchor.0 {
        f
    } else {
        next_boundary(f, unit, tz)
    }
}

/// The boundary after `boundary`, which must itself be aligned.
pub(crate) fn next_boundary(boundary: Timestamp, unit: TimeUnit, tz: TimeZone) -> Timestamp {
    if unit.is_physical() {
        return shift(boundary, unit, 1, tz);
    }
    // Re-floor from the shifted instant so gap-resolved midnights do not drift.
    let next = shift(boundary, unit, 1, tz);
    let aligned = floor(next, unit, tz);
    if aligned.0 > boundary.0 {
        aligned
    } else {
        next
    }
}

/// Signed number of whole units from `origin` to `t`: rounded for physical
/// units, counted on the local calendar for calendar units.
pub fn units_between(origin: Timestamp, t: Timestamp, unit: TimeUnit, tz: TimeZone) -> i64 {
    if let Some(s) = unit.physical_seconds() {
        return ((t.0 - origin.0) / s).round() as i64;
    }
    let (a, b) = (tz.local(origin), tz.local(t));
    let count = i64::from(unit.count);
    let raw = match unit.kind {
        UnitKind::Days => (b.date() - a.date()).num_days(),
        UnitKind::Weeks => (b.date() - a.date()).num_days().div_euclid(7),
        UnitKind::Months => month_index(b) - month_index(a),
        UnitKind::Years => i64::from(b.year() - a.year()),
        _ => unreachable!(),
    };
    raw.div_euclid(count)
}

fn month_index(local: NaiveDateTime) -> i64 {
    i64::from(local.year()) * 12 + i64::from(local.month0())
}
