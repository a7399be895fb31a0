//! CSV and JSONL artifact formats.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use fakestar_core::campaigns::{CampaignReport, FakeStarLedger, LedgerEntry, Signature};
use fakestar_core::econo::PanelRow;
use fakestar_core::enrich::{Existence, PackageRow, TrendingRow};
use fakestar_core::lockstep::FakeStar;
use fakestar_core::lowactivity::LowActivityFlag;
use fakestar_core::measure::PrevalenceRow;
use fakestar_core::synth::GroundTruth;
use fakestar_core::time::{MonthKey, Timestamp};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{format_err, io_err, AppResult};

/// A CSV record type with a fixed header, written even for empty tables.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

impl<T: CsvRow> CsvRow for &T {
    const HEADER: &'static [&'static str] = T::HEADER;
}

impl CsvRow for PrevalenceRow {
    const HEADER: &'static [&'static str] = &[
        "month",
        "fake_stars",
        "total_stars",
        "pct_fake_stars",
        "campaign_accounts_active",
        "active_accounts",
        "pct_campaign_accounts_of_active",
        "campaign_repos_popular",
        "popular_repos",
        "pct_campaign_repos_of_popular",
    ];
}

pub fn write_csv<T: CsvRow>(path: &Path, rows: impl IntoIterator<Item = T>) -> AppResult<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(T::HEADER).map_err(|e| format_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| format_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes a CSV with explicit headers, so empty tables still carry them.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> AppResult<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| format_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| format_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| format_err(path, format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> AppResult<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, &row).map_err(|e| format_err(path, e))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format_err(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowActivityRow {
    pub actor_id: String,
    pub repo_id: String,
    pub star_time: Timestamp,
    pub extra_event_kind: Option<String>,
}

impl CsvRow for LowActivityRow {
    const HEADER: &'static [&'static str] = &["actor_id", "repo_id", "star_time", "extra_event_kind"];
}

impl From<&LowActivityFlag> for LowActivityRow {
    fn from(f: &LowActivityFlag) -> Self {
        LowActivityRow {
            actor_id: f.actor.clone(),
            repo_id: f.repo.clone(),
            star_time: f.star_time,
            extra_event_kind: f.extra_event_kind.clone(),
        }
    }
}

impl From<LowActivityRow> for LowActivityFlag {
    fn from(r: LowActivityRow) -> Self {
        LowActivityFlag {
            repo: r.repo_id,
            actor: r.actor_id,
            star_time: r.star_time,
            extra_event_kind: r.extra_event_kind.filter(|k| !k.is_empty()),
        }
    }
}

/// A flagged star. `signature` lists every signature that caught it,
/// separated by `;`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FakeStarRow {
    pub actor_id: String,
    pub repo_id: String,
    pub timestamp: Timestamp,
    pub signature: String,
}

impl CsvRow for FakeStarRow {
    const HEADER: &'static [&'static str] = &["actor_id", "repo_id", "timestamp", "signature"];
}

pub fn lockstep_star_rows(stars: &BTreeSet<FakeStar>) -> impl Iterator<Item = FakeStarRow> + '_ {
    stars.iter().map(|s| FakeStarRow {
        actor_id: s.actor.clone(),
        repo_id: s.repo.clone(),
        timestamp: s.timestamp,
        signature: Signature::Lockstep.as_str().to_string(),
    })
}

pub fn ledger_rows(ledger: &FakeStarLedger) -> impl Iterator<Item = FakeStarRow> + '_ {
    ledger.iter().map(|e: &LedgerEntry| FakeStarRow {
        actor_id: e.actor.clone(),
        repo_id: e.repo.clone(),
        timestamp: e.timestamp,
        signature: e.signatures.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(";"),
    })
}

pub fn ledger_from_rows(path: &Path, rows: Vec<FakeStarRow>) -> AppResult<FakeStarLedger> {
    let mut ledger = FakeStarLedger::new();
    for row in rows {
        for sig in row.signature.split(';') {
            let sig = Signature::parse(sig.trim())
                .ok_or_else(|| format_err(path, format!("unknown signature {sig:?}")))?;
            ledger.insert(&row.actor_id, &row.repo_id, row.timestamp, sig);
        }
    }
    Ok(ledger)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummaryRow {
    pub repo: String,
    pub first_spike_month: MonthKey,
    pub n_spike_months: usize,
    pub fake_total: u64,
    /// Percent, 0 to 100.
    pub all_time_fake_pct: f64,
}

impl CsvRow for CampaignSummaryRow {
    const HEADER: &'static [&'static str] = &["repo", "first_spike_month", "n_spike_months", "fake_total", "all_time_fake_pct"];
}

impl From<&CampaignReport> for CampaignSummaryRow {
    fn from(r: &CampaignReport) -> Self {
        CampaignSummaryRow {
            repo: r.repo.clone(),
            first_spike_month: r.spike_months[0],
            n_spike_months: r.spike_months.len(),
            fake_total: r.fake_total,
            all_time_fake_pct: 100.0 * r.all_time_fake_pct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountRow {
    pub actor_id: String,
}

impl CsvRow for AccountRow {
    const HEADER: &'static [&'static str] = &["actor_id"];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub actor_id: String,
    pub repo_id: String,
    pub timestamp: Timestamp,
}

impl CsvRow for TruthRow {
    const HEADER: &'static [&'static str] = &["actor_id", "repo_id", "timestamp"];
}

pub fn truth_rows(truth: &GroundTruth) -> impl Iterator<Item = TruthRow> + '_ {
    truth.stars.iter().map(|s| TruthRow {
        actor_id: s.actor.clone(),
        repo_id: s.repo.clone(),
        timestamp: s.timestamp,
    })
}

/// Rebuilds ground truth from its star triplets.
pub fn truth_from_rows(rows: Vec<TruthRow>) -> GroundTruth {
    let mut truth = GroundTruth::default();
    for r in rows {
        truth.accounts.insert(r.actor_id.clone());
        truth.repos.insert(r.repo_id.clone());
        truth.stars.insert(FakeStar {
            actor: r.actor_id,
            repo: r.repo_id,
            timestamp: r.timestamp,
        });
    }
    truth
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelCsvRow {
    pub repo: String,
    pub month: MonthKey,
    pub real: u64,
    pub all_real: u64,
    pub fake: u64,
    pub all_fake: u64,
    pub age: u32,
    pub release: u8,
    pub activity: u64,
}

impl CsvRow for PanelCsvRow {
    const HEADER: &'static [&'static str] = &["repo", "month", "real", "all_real", "fake", "all_fake", "age", "release", "activity"];
}

impl From<&PanelRow> for PanelCsvRow {
    fn from(r: &PanelRow) -> Self {
        PanelCsvRow {
            repo: r.repo.clone(),
            month: r.month,
            real: r.real,
            all_real: r.all_real,
            fake: r.fake,
            all_fake: r.all_fake,
            age: r.age,
            release: r.release as u8,
            activity: r.activity,
        }
    }
}

impl From<PanelCsvRow> for PanelRow {
    fn from(r: PanelCsvRow) -> Self {
        PanelRow {
            repo: r.repo,
            month: r.month,
            fake: r.fake,
            all_fake: r.all_fake,
            real: r.real,
            all_real: r.all_real,
            age: r.age,
            release: r.release != 0,
            activity: r.activity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistenceRow {
    pub entity_id: String,
    pub status: String,
}

impl CsvRow for ExistenceRow {
    const HEADER: &'static [&'static str] = &["entity_id", "status"];
}

pub fn read_existence(path: &Path) -> AppResult<Vec<(String, Existence)>> {
    read_csv::<ExistenceRow>(path)?
        .into_iter()
        .map(|r| {
            let status = Existence::parse(&r.status)
                .ok_or_else(|| format_err(path, format!("{}: unknown status {:?}", r.entity_id, r.status)))?;
            Ok((r.entity_id, status))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRow {
    pub entity_id: String,
}

impl CsvRow for EntityRow {
    const HEADER: &'static [&'static str] = &["entity_id"];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendingCsvRow {
    pub repo_id: String,
    pub month: MonthKey,
}

impl CsvRow for TrendingCsvRow {
    const HEADER: &'static [&'static str] = &["repo_id", "month"];
}

pub fn read_trending(path: &Path) -> AppResult<Vec<TrendingRow>> {
    Ok(read_csv::<TrendingCsvRow>(path)?
        .into_iter()
        .map(|r| TrendingRow { repo: r.repo_id, month: r.month })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageCsvRow {
    pub package: String,
    pub registry: String,
    pub repo_id: String,
}

impl CsvRow for PackageCsvRow {
    const HEADER: &'static [&'static str] = &["package", "registry", "repo_id"];
}

pub fn read_packages(path: &Path) -> AppResult<Vec<PackageRow>> {
    Ok(read_csv::<PackageCsvRow>(path)?
        .into_iter()
        .map(|r| PackageRow {
            package: r.package,
            registry: r.registry,
            repo: r.repo_id,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfRow {
    pub population: String,
    pub days: f64,
    pub survival: f64,
}

impl CsvRow for CcdfRow {
    const HEADER: &'static [&'static str] = &["population", "days", "survival"];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRow {
    pub rank: usize,
    pub token: String,
    pub count: usize,
}

impl CsvRow for TokenRow {
    const HEADER: &'static [&'static str] = &["rank", "token", "count"];
}
