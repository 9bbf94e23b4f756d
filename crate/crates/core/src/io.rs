//! File formats: a compact binary time-tag format with a streaming
//! reader, `#`-headed text tables for histograms, spectra, scan maps and
//! alignment records, and TOML simulation configs.
//!
//! All writers go through a write-temp-then-rename step, so readers never
//! observe a half-written file. Numeric text fields use the shortest
//! round-tripping decimal form, which makes repeated writes of equal data
//! byte-identical.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::simkit::{SimConfig, SimError};
use crate::types::{
    AlignmentRecord, ClMap, ClMapData, CorrelationHistogram, Normalization, Spectrum, TimeTag,
    TimeTagStream, ValidationError,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: at byte {offset}: {message}")]
    BinaryParse {
        path: String,
        offset: u64,
        message: String,
    },
    #[error("{path}: found {found}, this reader expects {expected}")]
    VersionMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Config(#[from] SimError),
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

// -------------------------------------------------------------------
// atomic writes

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_sibling(path: &Path) -> PathBuf {
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let name = path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default();
    path.with_file_name(format!(
        ".{name}.tmp-{}-{n}",
        std::process::id()
    ))
}

/// Writes `bytes` to `path` via a temporary sibling file and an atomic
/// rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let tmp = temp_sibling(path);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        IoError::Io(e)
    })
}

// -------------------------------------------------------------------
// binary time tags

const TTG_MAGIC: &[u8; 4] = b"TTG1";
const TTG_VERSION: u16 = 1;
const TTG_UNITS: &str = "ps";
const TAG_RECORD_BYTES: u64 = 9;

/// Writes a time-tag stream as the binary tag format: a fixed header
/// (magic, version, units, channel table, duration, record count)
/// followed by 9-byte records of channel byte plus little-endian
/// timestamp.
pub fn write_time_tags(path: &Path, stream: &TimeTagStream) -> Result<(), IoError> {
    let tags = stream.iter();
    write_time_tags_streamed(
        path,
        stream.duration_ps(),
        stream.channel_ids().to_vec(),
        tags,
    )
}

/// Streaming variant of [`write_time_tags`]: tags come from an iterator
/// and are validated (declared channel, inside the duration,
/// non-decreasing) as they are written. The record count is patched into
/// the header at the end, and the file appears atomically.
pub fn write_time_tags_streamed(
    path: &Path,
    duration_ps: i64,
    channel_ids: Vec<u8>,
    tags: impl Iterator<Item = TimeTag>,
) -> Result<(), IoError> {
    if duration_ps < 0 {
        return Err(ValidationError::new("TimeTagStream", "duration_ps", ">= 0", duration_ps).into());
    }
    if channel_ids.is_empty() || channel_ids.len() > 255 {
        return Err(
            ValidationError::new("TimeTagStream", "channel_ids", "1..=255 channels", channel_ids.len())
                .into(),
        );
    }

    let tmp = temp_sibling(path);
    let result = (|| -> Result<(), IoError> {
        let file = fs::File::create(&tmp)?;
        let mut out = BufWriter::new(file);
        out.write_all(TTG_MAGIC)?;
        out.write_all(&TTG_VERSION.to_le_bytes())?;
        out.write_all(&[TTG_UNITS.len() as u8])?;
        out.write_all(TTG_UNITS.as_bytes())?;
        out.write_all(&[channel_ids.len() as u8])?;
        out.write_all(&channel_ids)?;
        out.write_all(&duration_ps.to_le_bytes())?;
        let count_offset = 4 + 2 + 1 + TTG_UNITS.len() as u64 + 1 + channel_ids.len() as u64 + 8;
        out.write_all(&0u64.to_le_bytes())?; // patched below

        let mut n: u64 = 0;
        let mut previous = i64::MIN;
        for tag in tags {
            if !channel_ids.contains(&tag.channel) {
                return Err(ValidationError::new(
                    "TimeTagStream",
                    "channels",
                    "declared channel id",
                    tag.channel,
                )
                .into());
            }
            if tag.timestamp_ps < 0 || tag.timestamp_ps > duration_ps {
                return Err(ValidationError::new(
                    "TimeTagStream",
                    "timestamps_ps",
                    "0..=duration_ps",
                    tag.timestamp_ps,
                )
                .into());
            }
            if tag.timestamp_ps < previous {
                return Err(ValidationError::new(
                    "TimeTagStream",
                    "timestamps_ps",
                    "non-decreasing",
                    format!("{} after {}", tag.timestamp_ps, previous),
                )
                .into());
            }
            previous = tag.timestamp_ps;
            out.write_all(&[tag.channel])?;
            out.write_all(&tag.timestamp_ps.to_le_bytes())?;
            n += 1;
        }
        let mut file = out.into_inner().map_err(|e| IoError::Io(e.into_error()))?;
        file.seek(SeekFrom::Start(count_offset))?;
        file.write_all(&n.to_le_bytes())?;
        file.sync_all()?;
        Ok(())
    })();

    match result {
        Ok(()) => fs::rename(&tmp, path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            IoError::Io(e)
        }),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Incremental reader for the binary tag format. Iterating yields tags
/// one record at a time without materializing the file's contents.
pub struct TagFileReader {
    path: String,
    reader: BufReader<fs::File>,
    duration_ps: i64,
    channel_ids: Vec<u8>,
    n_records: u64,
    read_so_far: u64,
    offset: u64,
    previous_ps: i64,
}

impl TagFileReader {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        let file = fs::File::open(path)?;
        let mut reader = BufReader::new(file);
        let name = display(path);
        let mut offset = 0u64;

        let fail = |offset: u64, message: String| IoError::BinaryParse {
            path: display(path),
            offset,
            message,
        };
        let mut take = |buf: &mut [u8], offset: &mut u64, what: &str| -> Result<(), IoError> {
            reader
                .read_exact(buf)
                .map_err(|_| fail(*offset, format!("file truncated while reading {what}")))?;
            *offset += buf.len() as u64;
            Ok(())
        };

        let mut magic = [0u8; 4];
        take(&mut magic, &mut offset, "magic")?;
        if &magic != TTG_MAGIC {
            return Err(fail(0, format!("bad magic {magic:?}; not a tag file")));
        }
        let mut version = [0u8; 2];
        take(&mut version, &mut offset, "version")?;
        let version = u16::from_le_bytes(version);
        if version != TTG_VERSION {
            return Err(IoError::VersionMismatch {
                path: name,
                found: format!("tag format v{version}"),
                expected: format!("tag format v{TTG_VERSION}"),
            });
        }
        let mut unit_len = [0u8; 1];
        take(&mut unit_len, &mut offset, "unit tag")?;
        let mut unit = vec![0u8; unit_len[0] as usize];
        take(&mut unit, &mut offset, "unit tag")?;
        if unit != TTG_UNITS.as_bytes() {
            return Err(fail(
                offset - unit.len() as u64,
                format!("units {:?}, this reader expects {TTG_UNITS:?}", String::from_utf8_lossy(&unit)),
            ));
        }
        let mut n_channels = [0u8; 1];
        take(&mut n_channels, &mut offset, "channel table")?;
        if n_channels[0] == 0 {
            return Err(fail(offset - 1, "empty channel table".into()));
        }
        let mut channel_ids = vec![0u8; n_channels[0] as usize];
        take(&mut channel_ids, &mut offset, "channel table")?;
        let mut duration = [0u8; 8];
        take(&mut duration, &mut offset, "duration")?;
        let duration_ps = i64::from_le_bytes(duration);
        let mut n_records = [0u8; 8];
        take(&mut n_records, &mut offset, "record count")?;
        let n_records = u64::from_le_bytes(n_records);

        Ok(TagFileReader {
            path: name,
            reader,
            duration_ps,
            channel_ids,
            n_records,
            read_so_far: 0,
            offset,
            previous_ps: i64::MIN,
        })
    }

    pub fn duration_ps(&self) -> i64 {
        self.duration_ps
    }

    pub fn channel_ids(&self) -> &[u8] {
        &self.channel_ids
    }

    pub fn n_records(&self) -> u64 {
        self.n_records
    }

    fn fail(&self, message: String) -> IoError {
        IoError::BinaryParse {
            path: self.path.clone(),
            offset: self.offset,
            message,
        }
    }
}

impl Iterator for TagFileReader {
    type Item = Result<TimeTag, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.read_so_far == self.n_records {
            return None;
        }
        let mut record = [0u8; TAG_RECORD_BYTES as usize];
        if let Err(e) = self.reader.read_exact(&mut record) {
            self.read_so_far = self.n_records; // stop iterating after an error
            return Some(Err(match e.kind() {
                std::io::ErrorKind::UnexpectedEof => self.fail(format!(
                    "file truncated at record {} of {}",
                    self.read_so_far + 1,
                    self.n_records
                )),
                _ => IoError::Io(e),
            }));
        }
        let channel = record[0];
        let timestamp_ps = i64::from_le_bytes(record[1..9].try_into().expect("8 bytes"));
        self.offset += TAG_RECORD_BYTES;
        self.read_so_far += 1;

        let check = (|| {
            if !self.channel_ids.contains(&channel) {
                return Err(self.fail(format!("undeclared channel {channel}")));
            }
            if timestamp_ps < 0 || timestamp_ps > self.duration_ps {
                return Err(self.fail(format!(
                    "timestamp {timestamp_ps} ps outside 0..={} ps",
                    self.duration_ps
                )));
            }
            if timestamp_ps < self.previous_ps {
                return Err(self.fail(format!(
                    "timestamp {timestamp_ps} ps decreases after {} ps",
                    self.previous_ps
                )));
            }
            Ok(())
        })();
        if let Err(e) = check {
            self.read_so_far = self.n_records;
            return Some(Err(e));
        }
        self.previous_ps = timestamp_ps;
        Some(Ok(TimeTag { channel, timestamp_ps }))
    }
}

/// Reads a binary tag file into memory as a [`TimeTagStream`].
pub fn read_time_tags(path: &Path) -> Result<TimeTagStream, IoError> {
    let reader = TagFileReader::open(path)?;
    let duration = reader.duration_ps();
    let channel_ids = reader.channel_ids().to_vec();
    let n = reader.n_records() as usize;
    let mut timestamps = Vec::with_capacity(n);
    let mut channels = Vec::with_capacity(n);
    for tag in reader {
        let tag = tag?;
        timestamps.push(tag.timestamp_ps);
        channels.push(tag.channel);
    }
    Ok(TimeTagStream::new(duration, channel_ids, timestamps, channels)?)
}

/// Debug text variant of the tag format: `#` headers plus one
/// `channel,timestamp_ps` line per tag. Meant for small fixtures, not
/// for real acquisitions.
pub fn write_time_tags_csv(path: &Path, stream: &TimeTagStream) -> Result<(), IoError> {
    let mut text = String::new();
    text.push_str("# format: tags-csv v1\n");
    text.push_str("# units: ps\n");
    text.push_str(&format!("# duration_ps: {}\n", stream.duration_ps()));
    let ids: Vec<String> = stream.channel_ids().iter().map(|c| c.to_string()).collect();
    text.push_str(&format!("# channels: {}\n", ids.join(" ")));
    text.push_str(&format!("# n_records: {}\n", stream.len()));
    text.push_str("# columns: channel,timestamp_ps\n");
    for tag in stream.iter() {
        text.push_str(&format!("{},{}\n", tag.channel, tag.timestamp_ps));
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_time_tags_csv(path: &Path) -> Result<TimeTagStream, IoError> {
    let doc = parse_text_doc(path, "tags-csv")?;
    doc.expect_units("ps")?;
    let duration_ps: i64 = doc.required_parsed("duration_ps")?;
    let n: usize = doc.required_parsed("n_records")?;
    let channels_raw = doc.required("channels")?.to_string();
    let mut channel_ids = Vec::new();
    for f in channels_raw.split_whitespace() {
        channel_ids.push(parse_field::<u8>(&doc, 0, f, "channel id")?);
    }
    if doc.rows.len() != n {
        return Err(doc.parse_error(
            doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
            format!("{} data rows but header declares {}", doc.rows.len(), n),
        ));
    }
    let mut timestamps = Vec::with_capacity(n);
    let mut channels = Vec::with_capacity(n);
    for (line, row) in &doc.rows {
        let Some((ch, ts)) = row.split_once(',') else {
            return Err(doc.parse_error(*line, "expected channel,timestamp_ps"));
        };
        channels.push(parse_field::<u8>(&doc, *line, ch.trim(), "channel")?);
        timestamps.push(parse_field::<i64>(&doc, *line, ts.trim(), "timestamp")?);
    }
    Ok(TimeTagStream::new(duration_ps, channel_ids, timestamps, channels)?)
}

/// Reads a tag file in either representation, telling them apart by the
/// leading bytes.
pub fn read_time_tags_auto(path: &Path) -> Result<TimeTagStream, IoError> {
    let mut head = [0u8; 4];
    let n = fs::File::open(path)?.read(&mut head)?;
    if n == 4 && &head == TTG_MAGIC {
        read_time_tags(path)
    } else {
        read_time_tags_csv(path)
    }
}

// -------------------------------------------------------------------
// text headers shared by the table formats

struct TextDoc {
    path: String,
    headers: Vec<(String, String, usize)>, // key, value, line number
    rows: Vec<(usize, String)>,            // line number, content
}

fn parse_text_doc(path: &Path, format_name: &str) -> Result<TextDoc, IoError> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let name = display(path);
    let mut headers = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once(':') {
                headers.push((key.trim().to_string(), value.trim().to_string(), line_no));
            }
            continue;
        }
        rows.push((line_no, trimmed.to_string()));
    }
    let doc = TextDoc { path: name, headers, rows };
    let found = doc.header("format").unwrap_or_default().to_string();
    let expected = format!("{format_name} v1");
    if found != expected {
        return Err(IoError::VersionMismatch {
            path: doc.path,
            found: if found.is_empty() { "no format header".into() } else { found },
            expected,
        });
    }
    Ok(doc)
}

impl TextDoc {
    fn header(&self, key: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    fn parse_error(&self, line: usize, message: impl Into<String>) -> IoError {
        IoError::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn required(&self, key: &str) -> Result<&str, IoError> {
        self.header(key)
            .ok_or_else(|| self.parse_error(0, format!("missing header '# {key}:'")))
    }

    fn required_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, IoError> {
        let raw = self.required(key)?;
        raw.parse().map_err(|_| {
            let line = self
                .headers
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, _, l)| *l)
                .unwrap_or(0);
            self.parse_error(line, format!("header '{key}' has unparsable value '{raw}'"))
        })
    }

    fn expect_units(&self, units: &str) -> Result<(), IoError> {
        let found = self.required("units")?;
        if found != units {
            return Err(self.parse_error(
                0,
                format!("units are '{found}', this reader expects '{units}'"),
            ));
        }
        Ok(())
    }
}

fn parse_field<T: std::str::FromStr>(
    doc: &TextDoc,
    line: usize,
    field: &str,
    what: &str,
) -> Result<T, IoError> {
    field
        .parse()
        .map_err(|_| doc.parse_error(line, format!("unparsable {what} '{field}'")))
}

// -------------------------------------------------------------------
// histogram text format

/// Writes a correlation histogram (or decay trace) as a `#`-headed text
/// table: one row per bin with the center delay, the raw count and, when
/// present, the normalized value.
pub fn write_histogram(path: &Path, hist: &CorrelationHistogram) -> Result<(), IoError> {
    write_histogram_annotated(path, hist, &[])
}

/// Like [`write_histogram`] but with caller-supplied extra header lines
/// (provenance and the like); readers skip keys they do not know.
pub fn write_histogram_annotated(
    path: &Path,
    hist: &CorrelationHistogram,
    extra_headers: &[(String, String)],
) -> Result<(), IoError> {
    let mut text = String::new();
    text.push_str("# format: histogram v1\n");
    text.push_str("# units: ps\n");
    text.push_str(&format!("# first_center_ps: {}\n", hist.first_center_ps()));
    text.push_str(&format!("# bin_width_ps: {}\n", hist.bin_width_ps()));
    text.push_str(&format!("# n_bins: {}\n", hist.n_bins()));
    text.push_str(&format!("# normalization: {}\n", hist.normalization().as_str()));
    for (key, value) in extra_headers {
        text.push_str(&format!("# {key}: {value}\n"));
    }
    match hist.normalized() {
        Some(values) => {
            text.push_str("# columns: center_ps count normalized\n");
            for (k, c) in hist.centers_ps().enumerate() {
                text.push_str(&format!("{c}\t{}\t{}\n", hist.counts()[k], values[k]));
            }
        }
        None => {
            text.push_str("# columns: center_ps count\n");
            for (k, c) in hist.centers_ps().enumerate() {
                text.push_str(&format!("{c}\t{}\n", hist.counts()[k]));
            }
        }
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_histogram(path: &Path) -> Result<CorrelationHistogram, IoError> {
    let doc = parse_text_doc(path, "histogram")?;
    doc.expect_units("ps")?;
    let first_center: i64 = doc.required_parsed("first_center_ps")?;
    let bin_width: i64 = doc.required_parsed("bin_width_ps")?;
    let n_bins: usize = doc.required_parsed("n_bins")?;
    let normalization = doc.required("normalization")?;
    let normalization = Normalization::parse(normalization).ok_or_else(|| {
        doc.parse_error(0, format!("unknown normalization '{normalization}'"))
    })?;

    if doc.rows.len() != n_bins {
        return Err(doc.parse_error(
            doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
            format!("{} data rows but header declares {} bins", doc.rows.len(), n_bins),
        ));
    }
    let mut counts = Vec::with_capacity(n_bins);
    let mut normalized = Vec::new();
    for (k, (line, row)) in doc.rows.iter().enumerate() {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(doc.parse_error(*line, "expected at least 2 columns"));
        }
        let center: i64 = parse_field(&doc, *line, fields[0], "bin center")?;
        let expected_center = first_center + k as i64 * bin_width;
        if center != expected_center {
            return Err(doc.parse_error(
                *line,
                format!("bin center {center} ps, expected {expected_center} ps"),
            ));
        }
        counts.push(parse_field::<u64>(&doc, *line, fields[1], "count")?);
        if normalization != Normalization::Raw {
            if fields.len() < 3 {
                return Err(doc.parse_error(*line, "normalized histogram rows need 3 columns"));
            }
            normalized.push(parse_field::<f64>(&doc, *line, fields[2], "normalized value")?);
        }
    }

    let hist = CorrelationHistogram::new(first_center, bin_width, counts)?;
    Ok(match normalization {
        Normalization::Raw => hist,
        tag => hist.with_normalized(normalized, tag)?,
    })
}

// -------------------------------------------------------------------
// spectrum text format

pub fn write_spectrum(path: &Path, spectrum: &Spectrum) -> Result<(), IoError> {
    let mut text = String::new();
    text.push_str("# format: spectrum v1\n");
    text.push_str("# units: nm\n");
    text.push_str(&format!("# n_samples: {}\n", spectrum.len()));
    text.push_str("# columns: wavelength_nm intensity\n");
    for (w, i) in spectrum.wavelength_nm().iter().zip(spectrum.intensity()) {
        text.push_str(&format!("{w}\t{i}\n"));
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum, IoError> {
    let doc = parse_text_doc(path, "spectrum")?;
    doc.expect_units("nm")?;
    let n: usize = doc.required_parsed("n_samples")?;
    if doc.rows.len() != n {
        return Err(doc.parse_error(
            doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
            format!("{} data rows but header declares {}", doc.rows.len(), n),
        ));
    }
    let mut wavelength = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for (line, row) in &doc.rows {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(doc.parse_error(*line, "expected 2 columns"));
        }
        wavelength.push(parse_field::<f64>(&doc, *line, fields[0], "wavelength")?);
        intensity.push(parse_field::<f64>(&doc, *line, fields[1], "intensity")?);
    }
    Ok(Spectrum::new(wavelength, intensity)?)
}

// -------------------------------------------------------------------
// generic two-column tables (polarization scans, power series)

/// A two-column numeric table with declared axis units. Consumers check
/// the units they care about; a polarization-scan reader, say, rejects
/// anything whose x unit is not `deg`.
#[derive(Debug, Clone, PartialEq)]
pub struct XyData {
    pub x_unit: String,
    pub y_unit: String,
    pub points: Vec<(f64, f64)>,
}

pub fn write_xy(path: &Path, data: &XyData) -> Result<(), IoError> {
    for unit in [&data.x_unit, &data.y_unit] {
        if unit.is_empty() || unit.contains(char::is_whitespace) {
            return Err(ValidationError::new(
                "XyData",
                "units",
                "non-empty, no whitespace",
                unit,
            )
            .into());
        }
    }
    let mut text = String::new();
    text.push_str("# format: xy v1\n");
    text.push_str(&format!("# x_unit: {}\n", data.x_unit));
    text.push_str(&format!("# y_unit: {}\n", data.y_unit));
    text.push_str(&format!("# n_rows: {}\n", data.points.len()));
    text.push_str("# columns: x y\n");
    for (x, y) in &data.points {
        text.push_str(&format!("{x}\t{y}\n"));
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_xy(path: &Path) -> Result<XyData, IoError> {
    let doc = parse_text_doc(path, "xy")?;
    let x_unit = doc.required("x_unit")?.to_string();
    let y_unit = doc.required("y_unit")?.to_string();
    let n: usize = doc.required_parsed("n_rows")?;
    if doc.rows.len() != n {
        return Err(doc.parse_error(
            doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
            format!("{} data rows but header declares {}", doc.rows.len(), n),
        ));
    }
    let mut points = Vec::with_capacity(n);
    for (line, row) in &doc.rows {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(doc.parse_error(*line, "expected 2 columns"));
        }
        points.push((
            parse_field::<f64>(&doc, *line, fields[0], "x value")?,
            parse_field::<f64>(&doc, *line, fields[1], "y value")?,
        ));
    }
    Ok(XyData { x_unit, y_unit, points })
}

// -------------------------------------------------------------------
// alignment-record text format

pub fn write_alignment_records(path: &Path, records: &[AlignmentRecord]) -> Result<(), IoError> {
    for r in records {
        if r.id.contains(char::is_whitespace) || r.id.is_empty() {
            return Err(ValidationError::new(
                "AlignmentRecord",
                "id",
                "non-empty, no whitespace",
                &r.id,
            )
            .into());
        }
    }
    let mut text = String::new();
    text.push_str("# format: alignment v1\n");
    text.push_str("# units: nm\n");
    text.push_str(&format!("# n_records: {}\n", records.len()));
    text.push_str("# columns: id target_x_nm target_y_nm measured_x_nm measured_y_nm\n");
    for r in records {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.id, r.target_nm.0, r.target_nm.1, r.measured_nm.0, r.measured_nm.1
        ));
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_alignment_records(path: &Path) -> Result<Vec<AlignmentRecord>, IoError> {
    let doc = parse_text_doc(path, "alignment")?;
    doc.expect_units("nm")?;
    let n: usize = doc.required_parsed("n_records")?;
    if doc.rows.len() != n {
        return Err(doc.parse_error(
            doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
            format!("{} data rows but header declares {}", doc.rows.len(), n),
        ));
    }
    let mut records = Vec::with_capacity(n);
    for (line, row) in &doc.rows {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(doc.parse_error(*line, "expected 5 columns"));
        }
        let tx: f64 = parse_field(&doc, *line, fields[1], "target x")?;
        let ty: f64 = parse_field(&doc, *line, fields[2], "target y")?;
        let mx: f64 = parse_field(&doc, *line, fields[3], "measured x")?;
        let my: f64 = parse_field(&doc, *line, fields[4], "measured y")?;
        records.push(AlignmentRecord::new(fields[0], (tx, ty), (mx, my))?);
    }
    Ok(records)
}

// -------------------------------------------------------------------
// scan-map formats (text for fixtures, binary for large maps)

/// Text scan map: headers describe the grid; scalar maps hold one image
/// row per line, hyperspectral maps one pixel spectrum per line in
/// row-major pixel order.
pub fn write_clmap_text(path: &Path, map: &ClMap) -> Result<(), IoError> {
    let mut text = String::new();
    text.push_str("# format: clmap v1\n");
    text.push_str("# units: nm\n");
    text.push_str(&format!("# width: {}\n", map.width()));
    text.push_str(&format!("# height: {}\n", map.height()));
    text.push_str(&format!("# pitch_nm: {}\n", map.pixel_pitch_nm()));
    text.push_str(&format!(
        "# origin_nm: {} {}\n",
        map.origin_nm().0,
        map.origin_nm().1
    ));
    match map.data() {
        ClMapData::Scalar(values) => {
            text.push_str("# kind: scalar\n");
            for iy in 0..map.height() {
                let row: Vec<String> = (0..map.width())
                    .map(|ix| values[iy * map.width() + ix].to_string())
                    .collect();
                text.push_str(&row.join("\t"));
                text.push('\n');
            }
        }
        ClMapData::Hyperspectral { wavelength_nm, values } => {
            text.push_str("# kind: hyperspectral\n");
            let axis: Vec<String> = wavelength_nm.iter().map(|w| w.to_string()).collect();
            text.push_str(&format!("# wavelength_nm: {}\n", axis.join(" ")));
            let n_wl = wavelength_nm.len();
            for pixel in 0..map.width() * map.height() {
                let row: Vec<String> = values[pixel * n_wl..(pixel + 1) * n_wl]
                    .iter()
                    .map(|v| v.to_string())
                    .collect();
                text.push_str(&row.join("\t"));
                text.push('\n');
            }
        }
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_clmap_text(path: &Path) -> Result<ClMap, IoError> {
    let doc = parse_text_doc(path, "clmap")?;
    doc.expect_units("nm")?;
    let width: usize = doc.required_parsed("width")?;
    let height: usize = doc.required_parsed("height")?;
    let pitch: f64 = doc.required_parsed("pitch_nm")?;
    let origin_raw = doc.required("origin_nm")?.to_string();
    let origin_fields: Vec<&str> = origin_raw.split_whitespace().collect();
    if origin_fields.len() != 2 {
        return Err(doc.parse_error(0, "origin_nm header needs two values"));
    }
    let origin = (
        parse_field::<f64>(&doc, 0, origin_fields[0], "origin x")?,
        parse_field::<f64>(&doc, 0, origin_fields[1], "origin y")?,
    );
    let kind = doc.required("kind")?.to_string();

    let parse_row = |line: usize, row: &str, expect: usize, out: &mut Vec<f64>| -> Result<(), IoError> {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != expect {
            return Err(doc.parse_error(
                line,
                format!("expected {expect} values, found {}", fields.len()),
            ));
        }
        for f in fields {
            out.push(parse_field::<f64>(&doc, line, f, "intensity")?);
        }
        Ok(())
    };

    let data = match kind.as_str() {
        "scalar" => {
            if doc.rows.len() != height {
                return Err(doc.parse_error(
                    doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
                    format!("{} data rows but height is {}", doc.rows.len(), height),
                ));
            }
            let mut values = Vec::with_capacity(width * height);
            for (line, row) in &doc.rows {
                parse_row(*line, row, width, &mut values)?;
            }
            ClMapData::Scalar(values)
        }
        "hyperspectral" => {
            let axis_raw = doc.required("wavelength_nm")?.to_string();
            let mut wavelength_nm = Vec::new();
            for f in axis_raw.split_whitespace() {
                wavelength_nm.push(parse_field::<f64>(&doc, 0, f, "wavelength")?);
            }
            if doc.rows.len() != width * height {
                return Err(doc.parse_error(
                    doc.rows.last().map(|(l, _)| *l).unwrap_or(0),
                    format!(
                        "{} pixel rows but the grid has {} pixels",
                        doc.rows.len(),
                        width * height
                    ),
                ));
            }
            let mut values = Vec::with_capacity(width * height * wavelength_nm.len());
            for (line, row) in &doc.rows {
                parse_row(*line, row, wavelength_nm.len(), &mut values)?;
            }
            ClMapData::Hyperspectral { wavelength_nm, values }
        }
        other => return Err(doc.parse_error(0, format!("unknown map kind '{other}'"))),
    };
    Ok(ClMap::new(width, height, pitch, origin, data)?)
}

const CLM_MAGIC: &[u8; 4] = b"CLM1";
const CLM_VERSION: u16 = 1;

/// Binary scan map for large acquisitions: fixed header followed by
/// little-endian f64 values in the same layout as the in-memory map.
pub fn write_clmap_binary(path: &Path, map: &ClMap) -> Result<(), IoError> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CLM_MAGIC);
    bytes.extend_from_slice(&CLM_VERSION.to_le_bytes());
    let (kind, axis, values): (u8, &[f64], &[f64]) = match map.data() {
        ClMapData::Scalar(values) => (0, &[], values),
        ClMapData::Hyperspectral { wavelength_nm, values } => (1, wavelength_nm, values),
    };
    bytes.push(kind);
    bytes.extend_from_slice(&(map.width() as u32).to_le_bytes());
    bytes.extend_from_slice(&(map.height() as u32).to_le_bytes());
    bytes.extend_from_slice(&map.pixel_pitch_nm().to_le_bytes());
    bytes.extend_from_slice(&map.origin_nm().0.to_le_bytes());
    bytes.extend_from_slice(&map.origin_nm().1.to_le_bytes());
    bytes.extend_from_slice(&(axis.len() as u32).to_le_bytes());
    for w in axis {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes)
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
}

impl<'a> ByteCursor<'a> {
    fn fail(&self, offset: usize, message: String) -> IoError {
        IoError::BinaryParse {
            path: display(self.path),
            offset: offset as u64,
            message,
        }
    }

    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], IoError> {
        if self.offset + N > self.bytes.len() {
            return Err(self.fail(self.offset, format!("file truncated while reading {what}")));
        }
        let out = self.bytes[self.offset..self.offset + N].try_into().unwrap();
        self.offset += N;
        Ok(out)
    }

    fn take_f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, IoError> {
        if self.offset + n * 8 > self.bytes.len() {
            return Err(self.fail(self.offset, format!("file truncated while reading {what}")));
        }
        let out = self.bytes[self.offset..self.offset + n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.offset += n * 8;
        Ok(out)
    }
}

pub fn read_clmap_binary(path: &Path) -> Result<ClMap, IoError> {
    let bytes = fs::read(path)?;
    let mut cur = ByteCursor { bytes: &bytes, offset: 0, path };

    if cur.take::<4>("magic")? != *CLM_MAGIC {
        return Err(cur.fail(0, "bad magic; not a binary scan map".into()));
    }
    let version = u16::from_le_bytes(cur.take::<2>("version")?);
    if version != CLM_VERSION {
        return Err(IoError::VersionMismatch {
            path: display(path),
            found: format!("scan map v{version}"),
            expected: format!("scan map v{CLM_VERSION}"),
        });
    }
    let kind = cur.take::<1>("kind")?[0];
    let width = u32::from_le_bytes(cur.take::<4>("width")?) as usize;
    let height = u32::from_le_bytes(cur.take::<4>("height")?) as usize;
    let pitch = f64::from_le_bytes(cur.take::<8>("pitch")?);
    let ox = f64::from_le_bytes(cur.take::<8>("origin")?);
    let oy = f64::from_le_bytes(cur.take::<8>("origin")?);
    let n_wl = u32::from_le_bytes(cur.take::<4>("axis length")?) as usize;

    let data = match kind {
        0 => {
            if n_wl != 0 {
                return Err(cur.fail(cur.offset, "scalar map carries a wavelength axis".into()));
            }
            ClMapData::Scalar(cur.take_f64s(width * height, "values")?)
        }
        1 => {
            let wavelength_nm = cur.take_f64s(n_wl, "wavelength axis")?;
            let values = cur.take_f64s(width * height * n_wl, "values")?;
            ClMapData::Hyperspectral { wavelength_nm, values }
        }
        other => return Err(cur.fail(6, format!("unknown map kind {other}"))),
    };
    if cur.offset != bytes.len() {
        return Err(cur.fail(cur.offset, format!("{} trailing bytes", bytes.len() - cur.offset)));
    }
    Ok(ClMap::new(width, height, pitch, (ox, oy), data)?)
}

/// Reads a scan map in either representation, telling them apart by the
/// leading bytes.
pub fn read_clmap_auto(path: &Path) -> Result<ClMap, IoError> {
    let mut head = [0u8; 4];
    let n = fs::File::open(path)?.read(&mut head)?;
    if n == 4 && &head == CLM_MAGIC {
        read_clmap_binary(path)
    } else {
        read_clmap_text(path)
    }
}

// -------------------------------------------------------------------
// simulation configs

/// Reads and validates a TOML simulation config.
pub fn read_sim_config(path: &Path) -> Result<SimConfig, IoError> {
    let text = fs::read_to_string(path)?;
    let config: SimConfig = toml::from_str(&text).map_err(|e| IoError::Parse {
        path: display(path),
        line: e.span().map(|s| text[..s.start].lines().count()).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn write_sim_config(path: &Path, config: &SimConfig) -> Result<(), IoError> {
    config.validate()?;
    let text = toml::to_string_pretty(config).map_err(|e| IoError::Parse {
        path: display(path),
        line: 0,
        message: e.to_string(),
    })?;
    write_atomic(path, text.as_bytes())
}
