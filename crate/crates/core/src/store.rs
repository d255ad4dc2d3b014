//! On-disk register: JSON document written atomically, a line-delimited event
//! log next to it, and an advisory lock file serializing writers.
//!
//! For a register at `risks.json` the log is `risks.events.jsonl` and the
//! lock is `risks.lock`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::dynamics::{TransitionEvent, TransitionKind};
use crate::error::{Error, Result};
use crate::model::{DriverKind, NewRisk, Observation, Snapshot};
use crate::register::{Horizon, MetadataPatch, Register, SCHEMA_VERSION};

pub fn events_path(register: &Path) -> PathBuf {
    register.with_extension("events.jsonl")
}

pub fn lock_path(register: &Path) -> PathBuf {
    register.with_extension("lock")
}

fn temp_path(register: &Path) -> PathBuf {
    let mut name = register.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    register.with_file_name(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    RegisterCreated,
    RiskAdded,
    RiskUpdated,
    RiskRetired,
    ObservationRecorded,
    BandEscalation,
    ProbableToExisting,
    ExistingToCatastrophic,
    DeEscalationToProbable,
    BecameInsignificant,
}

impl From<TransitionKind> for LogKind {
    fn from(k: TransitionKind) -> Self {
        match k {
            TransitionKind::BandEscalation => LogKind::BandEscalation,
            TransitionKind::ProbableToExisting => LogKind::ProbableToExisting,
            TransitionKind::ExistingToCatastrophic => LogKind::ExistingToCatastrophic,
            TransitionKind::DeEscalationToProbable => LogKind::DeEscalationToProbable,
            TransitionKind::BecameInsignificant => LogKind::BecameInsignificant,
        }
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Period index the entry belongs to.
    pub t: f64,
    pub wall_time: DateTime<Utc>,
    pub risk_id: Option<String>,
    pub kind: LogKind,
    pub before: Option<Snapshot>,
    pub after: Option<Snapshot>,
}

impl LogEntry {
    fn now(t: f64, risk_id: Option<&str>, kind: LogKind) -> Self {
        LogEntry {
            t,
            wall_time: Utc::now(),
            risk_id: risk_id.map(str::to_string),
            kind,
            before: None,
            after: None,
        }
    }

    fn snapshots(mut self, before: Option<Snapshot>, after: Option<Snapshot>) -> Self {
        self.before = before;
        self.after = after;
        self
    }

    pub fn from_transition(e: &TransitionEvent) -> Self {
        LogEntry::now(e.t, Some(&e.risk_id), e.kind.into()).snapshots(Some(e.before), Some(e.after))
    }
}

/// Writes the register to a sibling temp file, syncs it and renames it over
/// `path`.
pub fn save_register(register: &Register, path: &Path) -> Result<()> {
    save_register_with_hook(register, path, |_| Ok(()))
}

/// [`save_register`] with a hook run after the temp file is durable and
/// before the rename. A hook error aborts the save and leaves `path` as it
/// was, which is how tests inject a crash.
pub fn save_register_with_hook(
    register: &Register,
    path: &Path,
    hook: impl FnOnce(&Path) -> io::Result<()>,
) -> Result<()> {
    register.validate()?;
    let tmp = temp_path(path);
    let body = serde_json::to_vec_pretty(register).map_err(|e| Error::Parse {
        location: "register".into(),
        message: e.to_string(),
    })?;
    let mut file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&body)
        .and_then(|_| file.write_all(b"\n"))
        .and_then(|_| file.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    hook(&tmp).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_register(path: &Path) -> Result<Register> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_register(&text)
}

pub fn parse_register(text: &str) -> Result<Register> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let version = value
        .get("version")
        .ok_or_else(|| Error::Parse {
            location: "field `version`".into(),
            message: "missing schema version".into(),
        })?
        .as_u64()
        .ok_or_else(|| Error::Parse {
            location: "field `version`".into(),
            message: "schema version must be a non-negative integer".into(),
        })?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    let register: Register = serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        location: format!("field `{}`", e.path()),
        message: e.inner().to_string(),
    })?;
    register.validate()?;
    Ok(register)
}

pub fn append_events(path: &Path, entries: &[LogEntry]) -> Result<()> {
    if entries.is_empty() {
        return Ok(());
    }
    let log = events_path(path);
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e).expect("log entries serialize");
        buf.push(b'\n');
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log)
        .map_err(|e| Error::io(&log, e))?;
    file.write_all(&buf)
        .and_then(|_| file.sync_data())
        .map_err(|e| Error::io(&log, e))
}

/// Log entries with `t >= since`, in file order.
pub fn read_events(path: &Path, since: Option<f64>) -> Result<Vec<LogEntry>> {
    let log = events_path(path);
    let file = match File::open(&log) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(&log, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&log, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            location: format!("{} line {}", log.display(), i + 1),
            message: e.to_string(),
        })?;
        if since.is_none_or(|s| entry.t >= s) {
            out.push(entry);
        }
    }
    Ok(out)
}

pub fn create_register(
    path: &Path,
    horizon: Horizon,
    taxonomy: Vec<String>,
    period_epoch: NaiveDate,
) -> Result<Register> {
    if path.exists() {
        return Err(Error::PathExists(path.to_path_buf()));
    }
    let register = Register::new(horizon, taxonomy, period_epoch)?;
    save_register(&register, path)?;
    let log = events_path(path);
    File::create(&log).map_err(|e| Error::io(&log, e))?;
    append_events(path, &[LogEntry::now(0.0, None, LogKind::RegisterCreated)])?;
    Ok(register)
}

/// Parses a period index: a number, or an ISO-8601 date converted through
/// the register's epoch and period length.
pub fn parse_period(register: &Register, raw: &str) -> std::result::Result<f64, String> {
    let raw = raw.trim();
    if let Ok(t) = raw.parse::<f64>() {
        return if t.is_finite() {
            Ok(t)
        } else {
            Err(format!("period index '{raw}' is not finite"))
        };
    }
    let date = raw
        .parse::<NaiveDate>()
        .or_else(|_| raw.parse::<DateTime<Utc>>().map(|d| d.date_naive()))
        .map_err(|_| format!("'{raw}' is neither a period index nor an ISO-8601 date"))?;
    Ok(register.period_index(date))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based data row number, header excluded.
    pub row: usize,
    pub risk_id: String,
    pub code: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportSummary {
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
    pub events: Vec<TransitionEvent>,
}

const IMPORT_COLUMNS: [&str; 4] = ["risk_id", "t", "kind", "value"];

struct ParsedRow {
    row: usize,
    risk_id: String,
    obs: Observation,
}

/// Applies a CSV table of observations to `register` in (risk_id, t) order.
/// Returns the log entries for the accepted rows alongside the summary.
pub fn import_observations(
    register: &mut Register,
    table: impl Read,
) -> Result<(ImportSummary, Vec<LogEntry>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(table);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedTable(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(IMPORT_COLUMNS) {
        *slot = col(name).ok_or_else(|| {
            Error::MalformedTable(format!("header row lacks required column '{name}'"))
        })?;
    }
    let note_idx = col("note");

    let mut rejected = Vec::new();
    let mut parsed = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::MalformedTable(format!("row {row}: {e}")))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let risk_id = field(idx[0]).to_string();
        let mut reject = |code: &str, reason: String| {
            rejected.push(RejectedRow {
                row,
                risk_id: risk_id.clone(),
                code: code.into(),
                reason,
            })
        };
        let t = match parse_period(register, field(idx[1])) {
            Ok(t) => t,
            Err(msg) => {
                reject("parse_error", msg);
                continue;
            }
        };
        let kind = match field(idx[2]).parse::<DriverKind>() {
            Ok(k) => k,
            Err(msg) => {
                reject("parse_error", msg);
                continue;
            }
        };
        let value = match field(idx[3]).parse::<f64>() {
            Ok(v) => v,
            Err(_) => {
                reject("parse_error", format!("value '{}' is not a number", field(idx[3])));
                continue;
            }
        };
        let note = note_idx
            .map(field)
            .filter(|n| !n.is_empty())
            .map(str::to_string);
        parsed.push(ParsedRow {
            row,
            risk_id: risk_id.clone(),
            obs: Observation {
                t,
                kind,
                value,
                note,
                declare: None,
            },
        });
    }

    parsed.sort_by(|a, b| a.risk_id.cmp(&b.risk_id).then(a.obs.t.total_cmp(&b.obs.t)));
    let mut accepted = 0;
    let mut events = Vec::new();
    let mut log = Vec::new();
    for p in parsed {
        let before = register.get(&p.risk_id).ok().map(|r| r.snapshot());
        match register.record_observation(&p.risk_id, &p.obs) {
            Ok(ev) => {
                accepted += 1;
                let after = register.get(&p.risk_id).ok().map(|r| r.snapshot());
                log.push(
                    LogEntry::now(p.obs.t, Some(&p.risk_id), LogKind::ObservationRecorded)
                        .snapshots(before, after),
                );
                log.extend(ev.iter().map(LogEntry::from_transition));
                events.extend(ev);
            }
            Err(e) => rejected.push(RejectedRow {
                row: p.row,
                risk_id: p.risk_id,
                code: e.code().into(),
                reason: e.to_string(),
            }),
        }
    }
    rejected.sort_by_key(|r| r.row);
    Ok((
        ImportSummary {
            accepted,
            rejected,
            events,
        },
        log,
    ))
}

/// Exclusive writer over one register file. Holds the advisory lock for its
/// lifetime; every mutation is persisted atomically and logged before it
/// becomes visible through [`RegisterStore::register`].
#[derive(Debug)]
pub struct RegisterStore {
    path: PathBuf,
    register: Register,
    _lock: File,
}

impl RegisterStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let lock_file = lock_path(&path);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_file)
            .map_err(|e| Error::io(&lock_file, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(Error::Locked(path)),
            Err(fs::TryLockError::Error(e)) => return Err(Error::io(&lock_file, e)),
        }
        let register = load_register(&path)?;
        Ok(RegisterStore {
            path,
            register,
            _lock: lock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    fn commit(&mut self, next: Register, log: &[LogEntry]) -> Result<()> {
        save_register(&next, &self.path)?;
        append_events(&self.path, log)?;
        self.register = next;
        Ok(())
    }

    pub fn add_risk(&mut self, new: NewRisk) -> Result<Snapshot> {
        let mut next = self.register.clone();
        let snap = next.add_risk(new)?.snapshot();
        let id = next.risks.last().map(|r| r.id.clone());
        let t = next.current_period();
        let entry = LogEntry::now(t, id.as_deref(), LogKind::RiskAdded).snapshots(None, Some(snap));
        self.commit(next, &[entry])?;
        Ok(snap)
    }

    pub fn update_risk_metadata(&mut self, id: &str, patch: MetadataPatch) -> Result<()> {
        let mut next = self.register.clone();
        let snap = next.update_risk_metadata(id, patch)?.snapshot();
        let t = next.current_period();
        let entry =
            LogEntry::now(t, Some(id), LogKind::RiskUpdated).snapshots(Some(snap), Some(snap));
        self.commit(next, &[entry])
    }

    pub fn retire_risk(&mut self, id: &str) -> Result<()> {
        let mut next = self.register.clone();
        let before = next.get(id)?.snapshot();
        let after = next.retire_risk(id)?.snapshot();
        let t = next.current_period();
        let entry =
            LogEntry::now(t, Some(id), LogKind::RiskRetired).snapshots(Some(before), Some(after));
        self.commit(next, &[entry])
    }

    pub fn record_observation(&mut self, id: &str, obs: &Observation) -> Result<Vec<TransitionEvent>> {
        let mut next = self.register.clone();
        let before = next.get(id)?.snapshot();
        let events = next.record_observation(id, obs)?;
        let after = next.get(id)?.snapshot();
        let mut log = vec![
            LogEntry::now(obs.t, Some(id), LogKind::ObservationRecorded)
                .snapshots(Some(before), Some(after)),
        ];
        log.extend(events.iter().map(LogEntry::from_transition));
        self.commit(next, &log)?;
        Ok(events)
    }

    pub fn import_observations(&mut self, table: impl Read) -> Result<ImportSummary> {
        let mut next = self.register.clone();
        let (summary, log) = import_observations(&mut next, table)?;
        if summary.accepted > 0 {
            self.commit(next, &log)?;
        }
        Ok(summary)
    }
}
