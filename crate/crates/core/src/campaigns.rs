//! Merging of signature detections into a ledger of suspected fake stars, and
//! the monthly-spike postprocessing that identifies repositories running
//! fake-star campaigns.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::events::EventStore;
use crate::lockstep::FakeStar;
use crate::lowactivity::LowActivityFlag;
use crate::time::{MonthKey, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    LowActivity,
    Lockstep,
}

impl Signature {
    pub fn as_str(self) -> &'static str {
        match self {
            Signature::LowActivity => "low_activity",
            Signature::Lockstep => "lockstep",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "low_activity" => Some(Signature::LowActivity),
            "lockstep" => Some(Signature::Lockstep),
            _ => None,
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub actor: String,
    pub repo: String,
    pub timestamp: Timestamp,
    pub signatures: BTreeSet<Signature>,
}

/// Suspected fake stars keyed by `(repo, actor)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FakeStarLedger {
    entries: BTreeMap<(String, String), LedgerEntry>,
}

impl FakeStarLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a flagged star. A pair already present gains the signature tag
    /// and keeps the earlier timestamp.
    pub fn insert(&mut self, actor: &str, repo: &str, timestamp: Timestamp, signature: Signature) {
        let key = (String::from(repo), String::from(actor));
        let entry = self.entries.entry(key).or_insert_with(|| LedgerEntry {
            actor: String::from(actor),
            repo: String::from(repo),
            timestamp,
            signatures: BTreeSet::new(),
        });
        entry.timestamp = entry.timestamp.min(timestamp);
        entry.signatures.insert(signature);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by repository, then actor.
    pub fn iter(&self) -> impl Iterator<Item = &LedgerEntry> + '_ {
        self.entries.values()
    }

    pub fn repo_entries<'a>(&'a self, repo: &'a str) -> impl Iterator<Item = &'a LedgerEntry> + 'a {
        let lo = (String::from(repo), String::new());
        self.entries
            .range(lo..)
            .map(|(_, e)| e)
            .take_while(move |e| e.repo == repo)
    }

    pub fn repos(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(r, _)| r.as_str()).collect()
    }

    pub fn actors(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(_, a)| a.as_str()).collect()
    }

    pub fn count_with(&self, signature: Signature) -> usize {
        self.iter().filter(|e| e.signatures.contains(&signature)).count()
    }
}

impl FromIterator<LedgerEntry> for FakeStarLedger {
    fn from_iter<T: IntoIterator<Item = LedgerEntry>>(iter: T) -> Self {
        let mut ledger = FakeStarLedger::new();
        for e in iter {
            for &s in &e.signatures {
                ledger.insert(&e.actor, &e.repo, e.timestamp, s);
            }
        }
        ledger
    }
}

pub fn merge_detections<'a>(
    low: impl IntoIterator<Item = &'a LowActivityFlag>,
    lock: impl IntoIterator<Item = &'a FakeStar>,
) -> FakeStarLedger {
    let mut ledger = FakeStarLedger::new();
    for f in low {
        ledger.insert(&f.actor, &f.repo, f.star_time, Signature::LowActivity);
    }
    for s in lock {
        ledger.insert(&s.actor, &s.repo, s.timestamp, Signature::Lockstep);
    }
    ledger
}

/// Which stargazers of a spike month count as campaign accounts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountScope {
    /// Only stargazers whose star is in the ledger.
    #[default]
    Flagged,
    /// Everyone who starred during a spike month.
    AllStargazers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignThresholds {
    /// A spike month needs strictly more fake stars than this.
    pub spike_min_fake: u64,
    /// ... and a fake share strictly above this.
    pub spike_min_fraction: f64,
    /// The repository's all-time fake share must be strictly above this.
    pub all_time_min_fraction: f64,
    pub account_scope: AccountScope,
}

impl Default for CampaignThresholds {
    fn default() -> Self {
        CampaignThresholds {
            spike_min_fake: 50,
            spike_min_fraction: 0.5,
            all_time_min_fraction: 0.10,
            account_scope: AccountScope::Flagged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthCounts {
    pub month: MonthKey,
    pub fake: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub repo: String,
    pub spike_months: Vec<MonthKey>,
    pub months: Vec<MonthCounts>,
    pub fake_total: u64,
    pub star_total: u64,
    /// Fraction in `[0, 1]`.
    pub all_time_fake_pct: f64,
    pub campaign_accounts: BTreeSet<String>,
}

fn share(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        return 0.0;
    }
    part as f64 / whole as f64
}

/// Evaluates the campaign rule for one repository.
pub fn evaluate_repo(
    repo: &str,
    ledger: &FakeStarLedger,
    store: &EventStore,
    thresholds: &CampaignThresholds,
) -> Option<CampaignReport> {
    let totals = store.monthly_star_counts(repo);
    let mut fake: BTreeMap<MonthKey, u64> = BTreeMap::new();
    for e in ledger.repo_entries(repo) {
        *fake.entry(e.timestamp.month()).or_insert(0) += 1;
    }
    let fake_total: u64 = fake.values().sum();
    let star_total: u64 = totals.values().sum();

    let months_seen: BTreeSet<MonthKey> = totals.keys().chain(fake.keys()).copied().collect();
    let months: Vec<MonthCounts> = months_seen
        .into_iter()
        .map(|m| MonthCounts {
            month: m,
            fake: fake.get(&m).copied().unwrap_or(0),
            total: totals.get(&m).copied().unwrap_or(0),
        })
        .collect();
    let spike_months: Vec<MonthKey> = months
        .iter()
        .filter(|c| c.fake > thresholds.spike_min_fake && share(c.fake, c.total) > thresholds.spike_min_fraction)
        .map(|c| c.month)
        .collect();
    let all_time = share(fake_total, star_total);
    if spike_months.is_empty() || all_time <= thresholds.all_time_min_fraction {
        return None;
    }

    let spikes: BTreeSet<MonthKey> = spike_months.iter().copied().collect();
    let campaign_accounts: BTreeSet<String> = match thresholds.account_scope {
        AccountScope::Flagged => ledger
            .repo_entries(repo)
            .filter(|e| spikes.contains(&e.timestamp.month()))
            .map(|e| e.actor.clone())
            .collect(),
        AccountScope::AllStargazers => store
            .repo_stars(repo)
            .filter(|s| spikes.contains(&s.timestamp.month()))
            .map(|s| s.actor.clone())
            .collect(),
    };
    Some(CampaignReport {
        repo: String::from(repo),
        spike_months,
        months,
        fake_total,
        star_total,
        all_time_fake_pct: all_time,
        campaign_accounts,
    })
}

/// Repositories with a fake-star campaign, ordered by repository id.
pub fn detect_campaigns(ledger: &FakeStarLedger, store: &EventStore, thresholds: &CampaignThresholds) -> Vec<CampaignReport> {
    ledger
        .repos()
        .into_iter()
        .filter_map(|repo| evaluate_repo(repo, ledger, store, thresholds))
        .collect()
}

/// Union of the campaign accounts of all reports.
pub fn campaign_accounts(reports: &[CampaignReport]) -> BTreeSet<&str> {
    reports
        .iter()
        .flat_map(|r| r.campaign_accounts.iter().map(String::as_str))
        .collect()
}
