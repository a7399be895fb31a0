//! Descriptive analyses over detection results: monthly prevalence, activity
//! duration distributions, activity-type profiles and repository-name tokens.

mod kmeans;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, kmeans_best_of, select_k, silhouette, ClusterResult, KMeansConfig};

use crate::campaigns::{CampaignReport, FakeStarLedger};
use crate::error::{Error, Result};
use crate::events::{EventClass, EventStore, Subject};
use crate::time::MonthKey;

/// Minimum monthly stars for a repository to count as popular that month.
pub const POPULAR_MIN_STARS: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub month: MonthKey,
    pub fake_stars: u64,
    pub total_stars: u64,
    pub pct_fake_stars: Option<f64>,
    pub campaign_accounts_active: u64,
    pub active_accounts: u64,
    pub pct_campaign_accounts_of_active: Option<f64>,
    pub campaign_repos_popular: u64,
    pub popular_repos: u64,
    pub pct_campaign_repos_of_popular: Option<f64>,
}

pub fn percent(part: u64, whole: u64) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

/// One row per calendar month of the store's window.
///
/// Fake stars are ledger entries on campaign repositories; campaign accounts
/// count when they have any event that month; campaign repositories count
/// among repositories with at least 50 stars that month.
pub fn prevalence_series(store: &EventStore, ledger: &FakeStarLedger, campaigns: &[CampaignReport]) -> Vec<PrevalenceRow> {
    let campaign_repos: BTreeSet<&str> = campaigns.iter().map(|c| c.repo.as_str()).collect();
    let campaign_accounts = crate::campaigns::campaign_accounts(campaigns);

    let mut total: BTreeMap<MonthKey, u64> = BTreeMap::new();
    let mut per_repo: BTreeMap<(MonthKey, &str), u64> = BTreeMap::new();
    for s in store.stars() {
        let m = s.timestamp.month();
        *total.entry(m).or_insert(0) += 1;
        *per_repo.entry((m, s.repo.as_str())).or_insert(0) += 1;
    }
    let mut fake: BTreeMap<MonthKey, u64> = BTreeMap::new();
    for e in ledger.iter().filter(|e| campaign_repos.contains(e.repo.as_str())) {
        *fake.entry(e.timestamp.month()).or_insert(0) += 1;
    }
    let mut active: BTreeMap<MonthKey, BTreeSet<&str>> = BTreeMap::new();
    for e in store.events() {
        active.entry(e.timestamp.month()).or_default().insert(e.actor.as_str());
    }
    let mut popular: BTreeMap<MonthKey, (u64, u64)> = BTreeMap::new();
    for (&(m, repo), &n) in &per_repo {
        if n >= POPULAR_MIN_STARS {
            let slot = popular.entry(m).or_insert((0, 0));
            slot.1 += 1;
            if campaign_repos.contains(repo) {
                slot.0 += 1;
            }
        }
    }

    store
        .window()
        .month_keys()
        .into_iter()
        .map(|m| {
            let fake_stars = fake.get(&m).copied().unwrap_or(0);
            let total_stars = total.get(&m).copied().unwrap_or(0);
            let (active_accounts, campaign_active) = active.get(&m).map_or((0, 0), |set| {
                (set.len() as u64, set.iter().filter(|a| campaign_accounts.contains(*a)).count() as u64)
            });
            let (campaign_popular, popular_repos) = popular.get(&m).copied().unwrap_or((0, 0));
            PrevalenceRow {
                month: m,
                fake_stars,
                total_stars,
                pct_fake_stars: percent(fake_stars, total_stars),
                campaign_accounts_active: campaign_active,
                active_accounts,
                pct_campaign_accounts_of_active: percent(campaign_active, active_accounts),
                campaign_repos_popular: campaign_popular,
                popular_repos,
                pct_campaign_repos_of_popular: percent(campaign_popular, popular_repos),
            }
        })
        .collect()
}

/// Empirical complementary CDF: `survival(x)` is the fraction of values
/// strictly greater than `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccdf {
    sorted: Vec<f64>,
}

impl Ccdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ccdf { sorted })
    }

    pub fn survival(&self, x: f64) -> f64 {
        let at_most = self.sorted.partition_point(|&v| v <= x);
        (self.sorted.len() - at_most) as f64 / self.sorted.len() as f64
    }

    /// Distinct values with the survival fraction at each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &v in &self.sorted {
            if out.last().map_or(true, |&(last, _)| last != v) {
                out.push((v, self.survival(v)));
            }
        }
        out
    }
}

pub fn ccdf(values: &[f64]) -> Result<Ccdf> {
    Ccdf::new(values)
}

/// Activity-profile layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityDims {
    /// All eight event classes.
    #[default]
    Eight,
    /// Star, Push, Fork, Create, Other (Issue, PR and Comment fold into Other).
    Five,
}

impl ActivityDims {
    pub fn len(self) -> usize {
        match self {
            ActivityDims::Eight => 8,
            ActivityDims::Five => 5,
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            ActivityDims::Eight => &["Star", "Push", "Fork", "Create", "Issue", "PR", "Comment", "Other"],
            ActivityDims::Five => &["Star", "Push", "Fork", "Create", "Other"],
        }
    }

    pub fn slot(self, class: EventClass) -> usize {
        match self {
            ActivityDims::Eight => class.index(),
            ActivityDims::Five => match class {
                EventClass::Star => 0,
                EventClass::Push => 1,
                EventClass::Fork => 2,
                EventClass::Create => 3,
                _ => 4,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityVector {
    pub subject: String,
    pub fractions: Vec<f64>,
}

/// L1-normalized event-class profiles; subjects without events are skipped.
pub fn activity_vectors<'a>(
    store: &EventStore,
    subjects: impl IntoIterator<Item = Subject<'a>>,
    dims: ActivityDims,
) -> Vec<ActivityVector> {
    let mut out = Vec::new();
    for subject in subjects {
        let mut counts = alloc::vec![0u64; dims.len()];
        for e in store.subject_events(subject) {
            counts[dims.slot(e.class())] += 1;
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            continue;
        }
        let name = match subject {
            Subject::Actor(a) => a,
            Subject::Repo(r) => r,
        };
        out.push(ActivityVector {
            subject: String::from(name),
            fractions: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        });
    }
    out
}

/// Lowercased alphanumeric tokens of at least two characters, counted.
pub fn name_token_frequency<S: AsRef<str>>(names: &[S]) -> BTreeMap<String, usize> {
    let mut freq = BTreeMap::new();
    for name in names {
        for token in name.as_ref().split(|c: char| !c.is_alphanumeric()) {
            if token.chars().count() < 2 {
                continue;
            }
            *freq.entry(token.to_lowercase()).or_insert(0) += 1;
        }
    }
    freq
}

/// Tokens by descending count, ties alphabetical.
pub fn top_tokens(freq: &BTreeMap<String, usize>, limit: usize) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = freq.iter().map(|(k, &c)| (k.clone(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(limit);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaigns::{Signature, MonthCounts};
    use crate::events::{RawEvent, STAR_EVENT_KIND};
    use crate::time::{Timestamp, TimeWindow};
    use alloc::format;
    use alloc::vec;

    #[test]
    fn ccdf_examples() {
        let c = ccdf(&[1.0, 1.0, 10.0]).unwrap();
        assert!((c.survival(5.0) - 1.0 / 3.0).abs() < 1e-15);
        let c = ccdf(&[4.0, 4.0]).unwrap();
        assert_eq!(c.survival(4.0), 0.0);
        assert_eq!(c.survival(3.9), 1.0);
        assert!(matches!(ccdf(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn tokens() {
        let f = name_token_frequency(&["Adobe-Animate-Crack", "adobe-crack"]);
        assert_eq!(f.len(), 3);
        assert_eq!(f["adobe"], 2);
        assert_eq!(f["crack"], 2);
        assert_eq!(f["animate"], 1);
        assert!(name_token_frequency::<&str>(&[]).is_empty());
        let f = name_token_frequency(&["a-b_cd.EF"]);
        assert_eq!(f.keys().collect::<Vec<_>>(), vec!["cd", "ef"]);
    }

    #[test]
    fn activity_vectors_normalize_and_skip_empty() {
        let t = Timestamp::from_unix(0);
        let store = EventStore::new(
            TimeWindow::unbounded(),
            vec![
                RawEvent::new("a", "o/x", STAR_EVENT_KIND, t),
                RawEvent::new("a", "o/x", "PushEvent", t),
                RawEvent::new("a", "o/x", "IssueCommentEvent", t),
                RawEvent::new("a", "o/x", "GollumEvent", t),
            ],
        );
        let v = activity_vectors(&store, [Subject::Actor("a"), Subject::Actor("ghost")], ActivityDims::Eight);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].fractions, vec![0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25]);
        let v = activity_vectors(&store, [Subject::Actor("a")], ActivityDims::Five);
        assert_eq!(v[0].fractions, vec![0.25, 0.25, 0.0, 0.0, 0.5]);
    }

    fn report(repo: &str, accounts: &[String]) -> CampaignReport {
        CampaignReport {
            repo: repo.into(),
            spike_months: vec![],
            months: Vec::<MonthCounts>::new(),
            fake_total: 0,
            star_total: 0,
            all_time_fake_pct: 0.0,
            campaign_accounts: accounts.iter().cloned().collect(),
        }
    }

    #[test]
    fn prevalence_small_month() {
        // 1000 stars in March 2024, 10 of them flagged on a campaign repo;
        // 8 repositories with >= 50 stars, 2 of them campaigns
        let window = TimeWindow::months(MonthKey::new(2024, 3).unwrap(), MonthKey::new(2024, 3).unwrap()).unwrap();
        let t = Timestamp::from_ymd(2024, 3, 15).unwrap();
        let mut events = Vec::new();
        let mut ledger = FakeStarLedger::new();
        for r in 0..8 {
            for u in 0..125 {
                events.push(RawEvent::new(format!("u{r}-{u}"), format!("o/r{r}"), STAR_EVENT_KIND, t));
            }
        }
        for u in 0..10 {
            ledger.insert(&format!("u0-{u}"), "o/r0", t, Signature::LowActivity);
        }
        let store = EventStore::new(window, events);
        let flagged: Vec<String> = (0..10).map(|u| format!("u0-{u}")).collect();
        let campaigns = vec![report("o/r0", &flagged), report("o/r1", &[])];
        let rows = prevalence_series(&store, &ledger, &campaigns);
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!((row.fake_stars, row.total_stars), (10, 1000));
        assert_eq!(row.pct_fake_stars, Some(1.0));
        assert_eq!((row.campaign_repos_popular, row.popular_repos), (2, 8));
        assert_eq!(row.pct_campaign_repos_of_popular, Some(25.0));
        assert_eq!((row.campaign_accounts_active, row.active_accounts), (10, 1000));
    }

    #[test]
    fn top_tokens_ordering() {
        let mut f = BTreeMap::new();
        f.insert(String::from("b"), 3);
        f.insert(String::from("a"), 3);
        f.insert(String::from("c"), 5);
        let top = top_tokens(&f, 2);
        assert_eq!(top, vec![(String::from("c"), 5), (String::from("a"), 3)]);
    }

    #[test]
    fn popular_repo_share_fixture() {
        // 833 campaign repositories among 5000 with at least 50 stars
        let m = MonthKey::new(2024, 6).unwrap();
        let window = TimeWindow::months(m, m).unwrap();
        let t = Timestamp::from_ymd(2024, 6, 3).unwrap();
        let mut events = Vec::new();
        for r in 0..5000 {
            for u in 0..50 {
                events.push(RawEvent::new(format!("u{u}"), format!("o/r{r}"), STAR_EVENT_KIND, t));
            }
        }
        // a repository below the popularity bar does not count either way
        events.push(RawEvent::new("x", "o/quiet", STAR_EVENT_KIND, t));
        let store = EventStore::new(window, events);
        let mut campaigns: Vec<CampaignReport> = (0..833).map(|r| report(&format!("o/r{r}"), &[])).collect();
        campaigns.push(report("o/quiet", &[]));
        let row = &prevalence_series(&store, &FakeStarLedger::new(), &campaigns)[0];
        assert_eq!((row.campaign_repos_popular, row.popular_repos), (833, 5000));
        assert_eq!(row.pct_campaign_repos_of_popular, Some(16.66));
    }

    #[test]
    fn ccdf_matches_counting_on_exponential_draws() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Exp};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = Exp::new(0.1).unwrap().sample_iter(&mut rng).take(1000).collect();
        let c = ccdf(&draws).unwrap();
        for probe in [0.0, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0, 1e6] {
            let count = draws.iter().filter(|&&v| v > probe).count();
            assert_eq!(c.survival(probe), count as f64 / 1000.0);
        }
    }

    #[test]
    fn category_exemplars_lead_weighted_fixture() {
        let mut names = Vec::new();
        for (word, n) in [("free", 856), ("crack", 721), ("bot", 1071), ("download", 300), ("tool", 250)] {
            for i in 0..n {
                names.push(format!("{word}-x{}", i % 97));
            }
        }
        let top = top_tokens(&name_token_frequency(&names), 3);
        let words: Vec<&str> = top.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, ["bot", "free", "crack"]);
        assert_eq!(top[0].1, 1071);
    }
}
