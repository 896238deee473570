//! CSV ingestion with format detection, CSV export, and the native format.

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use log::warn;

use crate::error::{Error, Result};
use crate::series::{
    AnySeries, DataIndexes, DataTimePoint, DataTimeSlot, Element, ElementKind, PointSeries, Resolution, SlotSeries,
    TimeSeries,
};
use crate::timemath::{TimeUnit, TimeZone, Timestamp};

pub const NATIVE_MAGIC: &str = "# chronoseries v1";
const NATIVE_PREFIX: &str = "# chronoseries ";

/// How timestamps are written in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimestampFormat {
    /// Seconds since the epoch, possibly fractional.
    Epoch,
    /// ISO 8601 date-time, with or without offset.
    Iso8601,
    /// `YYYY-MM-DD HH:MM:SS`.
    Plain,
    /// Separate `YYYY-MM-DD` and `HH:MM:SS` columns.
    DateTimePair,
    /// A chrono `strftime` pattern for naive local date-times.
    Custom(String),
}

/// A column addressed by zero-based position or header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Overrides for CSV detection. `None` means "detect".
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub separator: Option<u8>,
    pub header: Option<bool>,
    pub time_column: Option<ColumnRef>,
    pub value_columns: Option<Vec<ColumnRef>>,
    pub timestamp_format: Option<TimestampFormat>,
    /// Zone for naive timestamps; also becomes the series zone.
    pub tz: Option<TimeZone>,
}

/// Decodes raw file bytes: BOM first, then UTF-8, then Latin-1.
pub fn decode(bytes: &[u8]) -> Result<String> {
    let text = if let Some(rest) = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
        std::str::from_utf8(rest).map_err(|e| Error::Encoding(format!("invalid UTF-8 after BOM: {e}")))?.to_string()
    } else if let Some(rest) = bytes.strip_prefix(&[0xFF, 0xFE]) {
        decode_utf16(rest, u16::from_le_bytes)?
    } else if let Some(rest) = bytes.strip_prefix(&[0xFE, 0xFF]) {
        decode_utf16(rest, u16::from_be_bytes)?
    } else if let Ok(s) = std::str::from_utf8(bytes) {
        s.to_string()
    } else {
        if let Some(pos) = bytes.iter().position(|b| (0x80..0xA0).contains(b)) {
            return Err(Error::Encoding(format!("byte 0x{:02X} at offset {pos} is not valid text", bytes[pos])));
        }
        bytes.iter().map(|&b| b as char).collect()
    };
    if let Some(pos) = text.find(|c: char| c.is_control() && !matches!(c, '\n' | '\r' | '\t')) {
        return Err(Error::Encoding(format!("control character at offset {pos}")));
    }
    Ok(text)
}

fn decode_utf16(bytes: &[u8], unit: fn([u8; 2]) -> u16) -> Result<String> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Encoding("odd byte count in UTF-16 data".into()));
    }
    let units = bytes.chunks_exact(2).map(|c| unit([c[0], c[1]]));
    char::decode_utf16(units)
        .collect::<std::result::Result<String, _>>()
        .map_err(|e| Error::Encoding(format!("invalid UTF-16: {e}")))
}

/// Picks the separator whose column count is most consistent across the
/// first lines, preferring more columns on ties.
pub fn detect_separator(text: &str) -> Option<u8> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).take(50).collect();
    let mut best: Option<(usize, usize, u8)> = None;
    for sep in *b",;\t" {
        let counts: Vec<usize> = lines.iter().map(|l| l.split(sep as char).count()).collect();
        let Some(&first) = counts.first() else { continue };
        let modal = counts.iter().copied().max_by_key(|c| counts.iter().filter(|x| *x == c).count()).unwrap_or(first);
        if modal < 2 {
            continue;
        }
        let agree = counts.iter().filter(|c| **c == modal).count();
        if best.is_none_or(|(a, m, _)| (agree, modal) > (a, m)) {
            best = Some((agree, modal, sep));
        }
    }
    best.map(|(_, _, sep)| sep)
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn is_missing(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("null") || s.eq_ignore_ascii_case("na")
}

fn parse_iso(s: &str, tz: TimeZone) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) / 1e9));
    }
    for f in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%dT%H:%M%z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, f) {
            return Some(Timestamp(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) / 1e9));
        }
    }
    for f in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(local) = NaiveDateTime::parse_from_str(s, f) {
            return Some(tz.resolve_local(local));
        }
    }
    None
}

fn parse_plain(s: &str, tz: TimeZone) -> Option<Timestamp> {
    NaiveDateTime::parse_from_str(s.trim(), "%Y-%m-%d %H:%M:%S%.f").ok().map(|l| tz.resolve_local(l))
}

fn parse_pair(date: &str, time: &str, tz: TimeZone) -> Option<Timestamp> {
    let d = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").ok()?;
    let t = NaiveTime::parse_from_str(time.trim(), "%H:%M:%S%.f").ok()?;
    Some(tz.resolve_local(d.and_time(t)))
}

impl TimestampFormat {
    /// Number of columns the timestamp occupies.
    fn width(&self) -> usize {
        if *self == TimestampFormat::DateTimePair {
            2
        } else {
            1
        }
    }

    fn parse(&self, fields: &[&str], tz: TimeZone) -> Option<Timestamp> {
        match self {
            TimestampFormat::Epoch => parse_number(fields[0]).map(Timestamp),
            TimestampFormat::Iso8601 => parse_iso(fields[0], tz),
            TimestampFormat::Plain => parse_plain(fields[0], tz),
            TimestampFormat::DateTimePair => parse_pair(fields[0], fields.get(1)?, tz),
            TimestampFormat::Custom(f) => {
                NaiveDateTime::parse_from_str(fields[0].trim(), f).ok().map(|l| tz.resolve_local(l))
            }
        }
    }

    /// Tries each format in priority order against a sample row.
    fn detect(fields: &[&str], tz: TimeZone) -> Option<Self> {
        [TimestampFormat::Epoch, TimestampFormat::Iso8601, TimestampFormat::Plain, TimestampFormat::DateTimePair]
            .into_iter()
            .find(|f| fields.len() >= f.width() && f.parse(fields, tz).is_some())
    }
}

fn resolve_column(col: &ColumnRef, header: Option<&[String]>, width: usize) -> Result<usize> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Format(format!("no column named {name:?}")))?,
    };
    if idx >= width {
        return Err(Error::Format(format!("column {idx} does not exist; rows have {width} fields")));
    }
    Ok(idx)
}

/// Reads a point series from a CSV file.
pub fn from_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<PointSeries> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_csv_bytes(&bytes, options)
}

/// Reads a point series from CSV bytes.
pub fn from_csv_bytes(bytes: &[u8], options: &CsvOptions) -> Result<PointSeries> {
    let text = decode(bytes)?;
    if text.trim().is_empty() {
        return Err(Error::NotEnoughData("the file is empty".into()));
    }
    let sep = match options.separator {
        Some(s) => s,
        None => detect_separator(&text).ok_or_else(|| Error::Format("cannot detect a field separator".into()))?,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sep)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    let Some((_, first)) = rows.first() else {
        return Err(Error::NotEnoughData("the file has no rows".into()));
    };
    let width = first.len();
    let tz = options.tz.unwrap_or_default();

    let has_header = options.header.unwrap_or_else(|| {
        let fields: Vec<&str> = first.iter().map(String::as_str).collect();
        match &options.timestamp_format {
            Some(f) => f.parse(&fields, tz).is_none(),
            None => TimestampFormat::detect(&fields, tz).is_none(),
        }
    });
    let header: Option<Vec<String>> = has_header.then(|| first.clone());
    let data_rows = if has_header { &rows[1..] } else { &rows[..] };
    let Some((_, sample)) = data_rows.first() else {
        return Err(Error::NotEnoughData("the file has no data rows".into()));
    };
    let time_col = match &options.time_column {
        Some(c) => resolve_column(c, header.as_deref(), width)?,
        None => 0,
    };
    let sample_fields: Vec<&str> = sample[time_col..].iter().map(String::as_str).collect();
    let format = match &options.timestamp_format {
        Some(f) => f.clone(),
        None => TimestampFormat::detect(&sample_fields, tz).ok_or_else(|| Error::Parse {
            line: data_rows[0].0,
            message: format!("unrecognized timestamp {:?}", sample[time_col]),
        })?,
    };
    let time_cols: Vec<usize> = (time_col..time_col + format.width()).collect();
    let value_cols: Vec<usize> = match &options.value_columns {
        Some(cols) => cols.iter().map(|c| resolve_column(c, header.as_deref(), width)).collect::<Result<_>>()?,
        None => (0..width).filter(|c| !time_cols.contains(c)).collect(),
    };
    if value_cols.is_empty() {
        return Err(Error::Format("no value columns".into()));
    }
    let labels: Vec<String> = match &header {
        Some(h) => value_cols.iter().map(|&c| h[c].clone()).collect(),
        None => (0..value_cols.len()).map(|i| format!("value_{i}")).collect(),
    };

    let mut parsed: Vec<(Timestamp, Vec<f64>, usize)> = Vec::with_capacity(data_rows.len());
    'rows: for (line, row) in data_rows {
        if row.len() != width {
            return Err(Error::Parse { line: *line, message: format!("expected {width} fields, found {}", row.len()) });
        }
        let fields: Vec<&str> = row[time_col..].iter().map(String::as_str).collect();
        let t = format.parse(&fields, tz).ok_or_else(|| Error::Parse {
            line: *line,
            message: format!("unparsable timestamp {:?}", row[time_col]),
        })?;
        let mut values = Vec::with_capacity(value_cols.len());
        for &c in &value_cols {
            if is_missing(&row[c]) {
                warn!("Skipping line {line}: missing value in column {c}");
                continue 'rows;
            }
            let v = parse_number(&row[c]).ok_or_else(|| Error::Parse {
                line: *line,
                message: format!("not a finite number: {:?}", row[c]),
            })?;
            values.push(v);
        }
        parsed.push((t, values, *line));
    }
    parsed.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.2.cmp(&b.2)));
    for w in parsed.windows(2) {
        if w[0].0 .0 == w[1].0 .0 {
            return Err(Error::DuplicateTimestamp { t: w[0].0 .0, first: w[0].2, second: w[1].2 });
        }
    }
    TimeSeries::from_elements(labels, parsed.into_iter().map(|(t, v, _)| DataTimePoint::new(t, v)), tz)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn time_fields<E: Element>(e: &E) -> Vec<String> {
    let mut out = vec![fmt_num(e.t().0)];
    if let Some(end) = e.end() {
        out.push(fmt_num(end.0));
    }
    out
}

fn time_header(kind: ElementKind) -> &'static [&'static str] {
    match kind {
        ElementKind::Point => &["epoch"],
        ElementKind::Slot => &["start_epoch", "end_epoch"],
    }
}

/// Writes a series as plain CSV. Data indexes are not included.
pub fn to_csv_writer<E: Element, W: Write>(series: &TimeSeries<E>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> =
        time_header(E::KIND).iter().copied().chain(series.labels().iter().map(String::as_str)).collect();
    w.write_record(&header).map_err(csv_error)?;
    for e in series {
        let row = time_fields(e).into_iter().chain(e.data().iter().map(|v| fmt_num(*v)));
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn to_csv<E: Element>(series: &TimeSeries<E>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    to_csv_writer(series, std::io::BufWriter::new(file))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn csv_line(fields: &[String]) -> Result<String> {
    if fields.is_empty() {
        return Ok(String::new());
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).map_err(csv_error)?;
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 in, utf-8 out").trim_end_matches('\n').to_string())
}

fn parse_csv_line(text: &str) -> Result<Vec<String>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    match r.records().next() {
        Some(rec) => Ok(rec.map_err(csv_error)?.iter().map(str::to_string).collect()),
        None => Ok(Vec::new()),
    }
}

/// Writes a series in the native format, indexes included.
pub fn save_writer<E: Element, W: Write>(series: &TimeSeries<E>, mut out: W) -> Result<()> {
    let indexes = series.index_names();
    for name in series.labels().iter().chain(&indexes) {
        if name.contains(['\n', '\r']) {
            return Err(Error::Format(format!("name {name:?} contains a line break")));
        }
    }
    let resolution = match series.resolution() {
        Resolution::Unit(u) => u.to_string(),
        Resolution::Variable => "variable".to_string(),
    };
    let kind = match E::KIND {
        ElementKind::Point => "points",
        ElementKind::Slot => "slots",
    };
    let mut text = String::new();
    text.push_str(NATIVE_MAGIC);
    text.push('\n');
    text.push_str(&format!("# kind: {kind}\n# tz: {}\n# resolution: {resolution}\n", series.tz()));
    text.push_str(&format!("# labels: {}\n", csv_line(series.labels())?));
    text.push_str(&format!("# indexes: {}\n", csv_line(&indexes)?));
    for e in series {
        let mut fields = time_fields(e);
        fields.extend(e.data().iter().map(|v| fmt_num(*v)));
        fields.extend(indexes.iter().map(|n| e.indexes().get(n).map(fmt_num).unwrap_or_default()));
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<output>", e))?;
    out.flush().map_err(|e| Error::io("<output>", e))
}

pub fn save<E: Element>(series: &TimeSeries<E>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    save_writer(series, std::io::BufWriter::new(file))
}

/// True when `text` starts like a native-format document.
pub fn is_native(text: &str) -> bool {
    text.starts_with(NATIVE_PREFIX)
}

pub fn load(path: impl AsRef<Path>) -> Result<AnySeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_str(&text)
}

fn header_field<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<&'a str> {
    let prefix = format!("# {key}:");
    match lines.next() {
        Some((_, line)) if line.starts_with(&prefix) => Ok(line[prefix.len()..].trim_start()),
        Some((n, line)) => Err(Error::Parse { line: n, message: format!("expected `{prefix}`, found {line:?}") }),
        None => Err(Error::Format(format!("truncated header: missing `{prefix}`"))),
    }
}

fn number(field: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("not a number: {field:?}") })
}

/// Parses a native-format document.
pub fn load_str(text: &str) -> Result<AnySeries> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == NATIVE_MAGIC => {}
        Some((_, l)) if l.starts_with(NATIVE_PREFIX) => {
            return Err(Error::VersionMismatch {
                expected: "v1".into(),
                found: l[NATIVE_PREFIX.len()..].trim().to_string(),
            })
        }
        _ => return Err(Error::Format("not a chronoseries document".into())),
    }
    let kind = header_field(&mut lines, "kind")?;
    let tz: TimeZone = header_field(&mut lines, "tz")?.parse()?;
    let resolution = header_field(&mut lines, "resolution")?;
    let unit: Option<TimeUnit> = match resolution {
        "variable" => None,
        u => Some(u.parse()?),
    };
    let labels = parse_csv_line(header_field(&mut lines, "labels")?)?;
    let indexes = parse_csv_line(header_field(&mut lines, "indexes")?)?;
    let time_width = match kind {
        "points" => 1,
        "slots" => 2,
        other => return Err(Error::Format(format!("unknown kind {other:?}"))),
    };
    let expected = time_width + labels.len() + indexes.len();

    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(Error::Format(format!("line {n} has {} fields, expected {expected}", fields.len())));
        }
        let times = fields[..time_width].iter().map(|f| number(f, n)).collect::<Result<Vec<_>>>()?;
        let data = fields[time_width..time_width + labels.len()]
            .iter()
            .map(|f| number(f, n))
            .collect::<Result<Vec<_>>>()?;
        let mut ix = DataIndexes::new();
        for (name, f) in indexes.iter().zip(&fields[time_width + labels.len()..]) {
            if !f.is_empty() {
                ix.set(name.clone(), number(f, n)?)?;
            }
        }
        rows.push((n, times, data, ix));
    }

    if time_width == 1 {
        let mut s = PointSeries::new(labels).change_tz(tz);
        for (_, times, data, ix) in rows {
            s.push(DataTimePoint::new(times[0], data).with_indexes(ix))?;
        }
        if let Some(u) = unit {
            s = s.with_resolution(u)?;
        }
        Ok(AnySeries::Points(s))
    } else {
        let unit = unit.ok_or_else(|| Error::Format("slot series need a resolution unit".into()))?;
        let mut s = SlotSeries::new_slots(labels, unit, tz);
        for (_, times, data, ix) in rows {
            let slot = DataTimeSlot {
                start: Timestamp(times[0]),
                end: Timestamp(times[1]),
                unit,
                data,
                indexes: ix,
            };
            s.push(slot)?;
        }
        Ok(AnySeries::Slots(s))
    }
}
