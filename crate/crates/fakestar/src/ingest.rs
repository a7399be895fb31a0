//! Newline-delimited event archives (GHArchive field subset), plain or gzip.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fakestar_core::events::{EventStore, RawEvent};
use fakestar_core::time::{Timestamp, TimeWindow};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, AppError, AppResult};

/// Share of malformed lines above which the input is rejected outright.
pub const MAX_MALFORMED_FRACTION: f64 = 0.5;

#[derive(Deserialize)]
struct Login {
    login: String,
}

#[derive(Deserialize)]
struct Name {
    name: String,
}

#[derive(Deserialize)]
struct Record {
    #[serde(rename = "type")]
    kind: String,
    actor: Login,
    repo: Name,
    created_at: String,
}

#[derive(Serialize)]
struct LoginOut<'a> {
    login: &'a str,
}

#[derive(Serialize)]
struct NameOut<'a> {
    name: &'a str,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    #[serde(rename = "type")]
    kind: &'a str,
    actor: LoginOut<'a>,
    repo: NameOut<'a>,
    created_at: Timestamp,
}

/// Parses one archive line; `None` if it lacks a usable event.
pub fn parse_line(line: &str) -> Option<RawEvent> {
    let r: Record = serde_json::from_str(line).ok()?;
    if r.actor.login.is_empty() || r.repo.name.is_empty() || r.kind.is_empty() {
        return None;
    }
    let t = Timestamp::parse(&r.created_at).ok()?;
    Some(RawEvent::new(r.actor.login, r.repo.name, r.kind, t))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub lines: usize,
    pub malformed: usize,
}

/// Reads events from `reader`, skipping blank lines and counting malformed
/// ones. Events outside `window` are dropped by the store.
pub fn read_events<R: BufRead>(reader: R, stats: &mut ParseStats, origin: &Path) -> AppResult<Vec<RawEvent>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err(origin))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        match parse_line(&line) {
            Some(e) => out.push(e),
            None => stats.malformed += 1,
        }
    }
    Ok(out)
}

fn check_stats(stats: ParseStats) -> AppResult<()> {
    if stats.lines > 0 && stats.malformed as f64 > MAX_MALFORMED_FRACTION * stats.lines as f64 {
        return Err(AppError::CorruptInput {
            malformed: stats.malformed,
            lines: stats.lines,
        });
    }
    Ok(())
}

/// Parses a byte stream into a store.
pub fn parse_event_stream<R: Read>(source: R, window: TimeWindow) -> AppResult<EventStore> {
    let mut stats = ParseStats::default();
    let events = read_events(BufReader::new(source), &mut stats, Path::new("<stream>"))?;
    check_stats(stats)?;
    Ok(EventStore::new(window, events).with_malformed(stats.malformed))
}

fn open_maybe_gz(path: &Path) -> AppResult<Box<dyn BufRead>> {
    let mut file = BufReader::new(File::open(path).map_err(io_err(path))?);
    let head = file.fill_buf().map_err(io_err(path))?;
    if head.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Loads and merges several archive files. The malformed-line check applies
/// to the combined input.
pub fn load_files<P: AsRef<Path>>(paths: &[P], window: TimeWindow) -> AppResult<EventStore> {
    let mut stats = ParseStats::default();
    let mut events = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let before = stats;
        events.extend(read_events(open_maybe_gz(p)?, &mut stats, p)?);
        log::info!(
            "{}: {} lines, {} malformed",
            p.display(),
            stats.lines - before.lines,
            stats.malformed - before.malformed
        );
    }
    check_stats(stats)?;
    Ok(EventStore::new(window, events).with_malformed(stats.malformed))
}

/// Writes events as archive lines, in the given order.
pub fn write_events<'a, W: Write>(mut out: W, events: impl IntoIterator<Item = &'a RawEvent>) -> std::io::Result<()> {
    for e in events {
        let rec = RecordOut {
            kind: &e.kind,
            actor: LoginOut { login: &e.actor },
            repo: NameOut { name: &e.repo },
            created_at: e.timestamp,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes an archive file, gzip-compressed when the name ends in `.gz`.
pub fn save_events<'a>(path: &Path, events: impl IntoIterator<Item = &'a RawEvent>) -> AppResult<()> {
    let file = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let res = if path.extension().is_some_and(|e| e == "gz") {
        let mut gz = GzEncoder::new(file, Compression::default());
        write_events(&mut gz, events).and_then(|_| gz.finish().map(|_| ()))
    } else {
        write_events(file, events)
    };
    res.map_err(io_err(path))
}
