//! Synthetic star traffic with planted fake-star campaigns, and set-based
//! scoring of detector output against the planted ground truth.
//!
//! Background stars arrive as a Poisson process over the window; each star
//! lands on a repository drawn from a power law over popularity ranks and
//! comes from a uniformly drawn account. Each injection creates fresh
//! accounts that star their target repositories inside short bursts.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventStore, RawEvent, STAR_EVENT_KIND};
use crate::lockstep::FakeStar;
use crate::time::{Timestamp, TimeWindow, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectionSpec {
    pub n_fake_accounts: usize,
    pub n_target_repos: usize,
    /// Length of the whole campaign; every target's burst lies inside it.
    pub campaign_span_days: u32,
    /// Length of each target repository's burst.
    pub burst_span_days: u32,
    pub stars_per_repo: usize,
    /// Campaign start; drawn uniformly over the window when absent.
    pub campaign_start: Option<Timestamp>,
}

impl Default for InjectionSpec {
    fn default() -> Self {
        InjectionSpec {
            n_fake_accounts: 60,
            n_target_repos: 12,
            campaign_span_days: 30,
            burst_span_days: 3,
            stars_per_repo: 60,
            campaign_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_accounts: usize,
    pub n_repos: usize,
    /// Platform-wide background stars per day.
    pub background_rate: f64,
    /// Weight of the repository at popularity rank `i` is `(i + 1)^-exponent`.
    pub popularity_exponent: f64,
    /// Platform-wide non-star background events per day (pushes, issues, ...).
    pub other_event_rate: f64,
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    pub injections: Vec<InjectionSpec>,
    /// Popular repositories each injected account also stars; 0 disables it.
    pub camouflage_repos: usize,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_accounts: 20_000,
            n_repos: 4_000,
            background_rate: 50_000.0 / 366.0,
            popularity_exponent: 1.5,
            other_event_rate: 0.0,
            window_start: Timestamp::from_ymd(2024, 1, 1).unwrap(),
            window_end: Timestamp::from_ymd(2025, 1, 1).unwrap(),
            injections: Vec::new(),
            camouflage_repos: 0,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn window(&self) -> TimeWindow {
        TimeWindow {
            start: self.window_start,
            end: self.window_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleScenario(m));
        if self.window_end <= self.window_start {
            return bad("empty window".into());
        }
        if !(self.background_rate >= 0.0) || !(self.other_event_rate >= 0.0) {
            return bad("rates must be non-negative".into());
        }
        if (self.background_rate > 0.0 || self.other_event_rate > 0.0) && (self.n_accounts == 0 || self.n_repos == 0) {
            return bad("background traffic needs accounts and repositories".into());
        }
        if !(self.popularity_exponent >= 0.0) {
            return bad("popularity exponent must be non-negative".into());
        }
        let span = self.window().duration_seconds();
        let mut targets = 0;
        for (i, inj) in self.injections.iter().enumerate() {
            if inj.stars_per_repo > inj.n_fake_accounts {
                return bad(format!(
                    "injection {i}: stars_per_repo {} exceeds n_fake_accounts {}",
                    inj.stars_per_repo, inj.n_fake_accounts
                ));
            }
            if inj.burst_span_days == 0 || inj.burst_span_days > inj.campaign_span_days {
                return bad(format!("injection {i}: burst span must be positive and within the campaign span"));
            }
            if inj.campaign_span_days as i64 * SECONDS_PER_DAY > span {
                return bad(format!("injection {i}: campaign span does not fit the window"));
            }
            if let Some(s) = inj.campaign_start {
                if !self.window().contains(s) || s.plus_days(inj.campaign_span_days as i64) > self.window_end {
                    return bad(format!("injection {i}: campaign starts outside the window"));
                }
            }
            targets += inj.n_target_repos;
        }
        if targets > self.n_repos - self.head_size() {
            return bad(format!("{targets} target repositories requested, only {} available", self.n_repos - self.head_size()));
        }
        if self.camouflage_repos > self.head_size() {
            return bad("camouflage_repos exceeds the popular head".into());
        }
        Ok(())
    }

    /// Popularity head excluded from targets and used for camouflage.
    fn head_size(&self) -> usize {
        (self.n_repos / 10).min(self.n_repos)
    }

    pub fn injected_star_count(&self) -> usize {
        self.injections.iter().map(|i| i.n_target_repos * i.stars_per_repo).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub accounts: BTreeSet<String>,
    pub repos: BTreeSet<String>,
    pub stars: BTreeSet<FakeStar>,
}

impl GroundTruth {
    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty() && self.repos.is_empty() && self.stars.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// Every generated event, ordered by time.
    pub events: Vec<RawEvent>,
    pub truth: GroundTruth,
    pub window: TimeWindow,
    /// Repositories that never received injected stars.
    pub background_repos: BTreeSet<String>,
}

impl Scenario {
    pub fn store(&self) -> EventStore {
        EventStore::new(self.window, self.events.iter().cloned())
    }
}

pub fn account_name(i: usize) -> String {
    format!("user{i:06}")
}

pub fn repo_name(i: usize) -> String {
    format!("owner{i:05}/project{i:05}")
}

const OTHER_KINDS: [(&str, u32); 7] = [
    ("PushEvent", 50),
    ("CreateEvent", 15),
    ("IssuesEvent", 10),
    ("PullRequestEvent", 10),
    ("IssueCommentEvent", 10),
    ("ForkEvent", 3),
    ("ReleaseEvent", 2),
];

pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let window = config.window();
    let mut events: Vec<RawEvent> = Vec::new();

    let popularity = if config.n_repos > 0 {
        let weights: Vec<f64> = (0..config.n_repos)
            .map(|i| libm::pow(i as f64 + 1.0, -config.popularity_exponent))
            .collect();
        Some(WeightedIndex::new(&weights).expect("positive weights"))
    } else {
        None
    };

    let arrivals = |rate_per_day: f64, rng: &mut ChaCha8Rng| -> Vec<Timestamp> {
        let mut out = Vec::new();
        if rate_per_day <= 0.0 {
            return out;
        }
        let gap = Exp::new(rate_per_day / SECONDS_PER_DAY as f64).expect("positive rate");
        let mut t = window.start.unix() as f64;
        loop {
            t += gap.sample(rng);
            if t >= window.end.unix() as f64 {
                break;
            }
            out.push(Timestamp::from_unix(t as i64));
        }
        out
    };

    if let Some(pop) = &popularity {
        for t in arrivals(config.background_rate, &mut rng) {
            let repo = pop.sample(&mut rng);
            let actor = rng.random_range(0..config.n_accounts);
            events.push(RawEvent::new(account_name(actor), repo_name(repo), STAR_EVENT_KIND, t));
        }
        let kinds = WeightedIndex::new(OTHER_KINDS.iter().map(|k| k.1)).expect("positive weights");
        for t in arrivals(config.other_event_rate, &mut rng) {
            let repo = pop.sample(&mut rng);
            let kind = OTHER_KINDS[kinds.sample(&mut rng)].0;
            let repo_id = repo_name(repo);
            let actor = if rng.random_bool(0.5) {
                String::from(crate::events::repo_owner(&repo_id))
            } else {
                account_name(rng.random_range(0..config.n_accounts))
            };
            events.push(RawEvent::new(actor, repo_id, kind, t));
        }
    }

    let head = config.head_size();
    let mut tail: Vec<usize> = (head..config.n_repos).collect();
    tail.shuffle(&mut rng);
    let mut tail = tail.into_iter();

    let mut truth = GroundTruth::default();
    for (c, inj) in config.injections.iter().enumerate() {
        let accounts: Vec<String> = (0..inj.n_fake_accounts).map(|i| format!("fake{c:02}-{i:04}")).collect();
        truth.accounts.extend(accounts.iter().cloned());
        let campaign = inj.campaign_span_days as i64 * SECONDS_PER_DAY;
        let span = inj.burst_span_days as i64 * SECONDS_PER_DAY;
        let campaign_start = match inj.campaign_start {
            Some(s) => s.unix(),
            None => rng.random_range(window.start.unix()..=window.end.unix() - campaign),
        };
        for _ in 0..inj.n_target_repos {
            let repo = repo_name(tail.next().expect("validated target budget"));
            truth.repos.insert(repo.clone());
            let start = rng.random_range(campaign_start..=campaign_start + campaign - span);
            let mut order: Vec<usize> = (0..accounts.len()).collect();
            order.shuffle(&mut rng);
            for &a in order.iter().take(inj.stars_per_repo) {
                let t = Timestamp::from_unix(rng.random_range(start..start + span));
                truth.stars.insert(FakeStar {
                    actor: accounts[a].clone(),
                    repo: repo.clone(),
                    timestamp: t,
                });
                events.push(RawEvent::new(accounts[a].as_str(), repo.as_str(), STAR_EVENT_KIND, t));
            }
        }
        if config.camouflage_repos > 0 {
            let head_ids: Vec<usize> = (0..head).collect();
            for a in &accounts {
                for &r in head_ids.choose_multiple(&mut rng, config.camouflage_repos) {
                    let t = Timestamp::from_unix(rng.random_range(window.start.unix()..window.end.unix()));
                    events.push(RawEvent::new(a.as_str(), repo_name(r), STAR_EVENT_KIND, t));
                }
            }
        }
    }

    events.sort();
    events.sort_by_key(|e| e.timestamp);
    let background_repos = (0..config.n_repos)
        .map(repo_name)
        .filter(|r| !truth.repos.contains(r))
        .collect();
    Ok(Scenario {
        events,
        truth,
        window,
        background_repos,
    })
}

/// Set precision and recall; ratios with an empty denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn score_sets<T: Ord>(detected: &BTreeSet<T>, truth: &BTreeSet<T>) -> SetScore {
    let tp = detected.intersection(truth).count();
    let fp = detected.len() - tp;
    let fn_ = truth.len() - tp;
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    SetScore {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision: ratio(tp, detected.len()),
        recall: ratio(tp, truth.len()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub repos: SetScore,
    pub accounts: SetScore,
    pub stars: SetScore,
}

pub fn evaluate_detection(
    repos: &BTreeSet<String>,
    accounts: &BTreeSet<String>,
    stars: &BTreeSet<FakeStar>,
    truth: &GroundTruth,
) -> DetectionScores {
    DetectionScores {
        repos: score_sets(repos, &truth.repos),
        accounts: score_sets(accounts, &truth.accounts),
        stars: score_sets(stars, &truth.stars),
    }
}
