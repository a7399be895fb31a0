//! Normalized event records and the immutable in-memory event store.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{MonthKey, Timestamp, TimeWindow, SECONDS_PER_DAY};

pub const STAR_EVENT_KIND: &str = "WatchEvent";
pub const RELEASE_EVENT_KIND: &str = "ReleaseEvent";

/// One platform event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RawEvent {
    pub actor: String,
    pub repo: String,
    pub kind: String,
    pub timestamp: Timestamp,
}

impl RawEvent {
    pub fn new(actor: impl Into<String>, repo: impl Into<String>, kind: impl Into<String>, timestamp: Timestamp) -> Self {
        RawEvent {
            actor: actor.into(),
            repo: repo.into(),
            kind: kind.into(),
            timestamp,
        }
    }

    pub fn is_star(&self) -> bool {
        self.kind == STAR_EVENT_KIND
    }

    pub fn class(&self) -> EventClass {
        classify_event(&self.kind)
    }
}

/// A star: the first `WatchEvent` of an account on a repository.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StarEvent {
    pub actor: String,
    pub repo: String,
    pub timestamp: Timestamp,
}

/// Coarse activity classes used for activity profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventClass {
    Star,
    Push,
    Fork,
    Create,
    Issue,
    PR,
    Comment,
    Other,
}

impl EventClass {
    pub const ALL: [EventClass; 8] = [
        EventClass::Star,
        EventClass::Push,
        EventClass::Fork,
        EventClass::Create,
        EventClass::Issue,
        EventClass::PR,
        EventClass::Comment,
        EventClass::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            EventClass::Star => "Star",
            EventClass::Push => "Push",
            EventClass::Fork => "Fork",
            EventClass::Create => "Create",
            EventClass::Issue => "Issue",
            EventClass::PR => "PR",
            EventClass::Comment => "Comment",
            EventClass::Other => "Other",
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_event(kind: &str) -> EventClass {
    match kind {
        "WatchEvent" => EventClass::Star,
        "PushEvent" => EventClass::Push,
        "ForkEvent" => EventClass::Fork,
        "CreateEvent" => EventClass::Create,
        "IssuesEvent" => EventClass::Issue,
        "PullRequestEvent" => EventClass::PR,
        "IssueCommentEvent" | "CommitCommentEvent" | "PullRequestReviewCommentEvent" => EventClass::Comment,
        _ => EventClass::Other,
    }
}

/// The account part of an `owner/name` repository id.
pub fn repo_owner(repo: &str) -> &str {
    repo.split_once('/').map_or(repo, |(owner, _)| owner)
}

/// Who an activity query is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject<'a> {
    Actor(&'a str),
    Repo(&'a str),
}

/// Immutable, time-ordered collection of events inside an observation window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStore {
    window: TimeWindow,
    events: Vec<RawEvent>,
    by_actor: BTreeMap<String, Vec<u32>>,
    by_repo: BTreeMap<String, Vec<u32>>,
    stars: Vec<StarEvent>,
    stars_by_repo: BTreeMap<String, Vec<u32>>,
    malformed: usize,
}

impl EventStore {
    /// Builds a store from arbitrary events. Events outside `window` or with an
    /// empty actor or repository are dropped; the rest are ordered by time,
    /// keeping input order among equal timestamps.
    pub fn new(window: TimeWindow, events: impl IntoIterator<Item = RawEvent>) -> Self {
        let mut events: Vec<RawEvent> = events
            .into_iter()
            .filter(|e| window.contains(e.timestamp) && !e.actor.is_empty() && !e.repo.is_empty())
            .collect();
        events.sort_by_key(|e| e.timestamp);

        let mut by_actor: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        let mut by_repo: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
        let mut stars = Vec::new();
        for (i, e) in events.iter().enumerate() {
            let i = i as u32;
            match by_actor.get_mut(e.actor.as_str()) {
                Some(v) => v.push(i),
                None => {
                    by_actor.insert(e.actor.clone(), alloc::vec![i]);
                }
            }
            match by_repo.get_mut(e.repo.as_str()) {
                Some(v) => v.push(i),
                None => {
                    by_repo.insert(e.repo.clone(), alloc::vec![i]);
                }
            }
            if e.is_star() && seen.insert((e.actor.as_str(), e.repo.as_str())) {
                stars.push(StarEvent {
                    actor: e.actor.clone(),
                    repo: e.repo.clone(),
                    timestamp: e.timestamp,
                });
            }
        }
        drop(seen);

        let mut stars_by_repo: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (i, s) in stars.iter().enumerate() {
            stars_by_repo.entry(s.repo.clone()).or_default().push(i as u32);
        }

        EventStore {
            window,
            events,
            by_actor,
            by_repo,
            stars,
            stars_by_repo,
            malformed: 0,
        }
    }

    pub fn empty(window: TimeWindow) -> Self {
        EventStore::new(window, Vec::new())
    }

    /// Records how many input records were rejected during ingestion.
    pub fn with_malformed(mut self, malformed: usize) -> Self {
        self.malformed = malformed;
        self
    }

    pub fn malformed_count(&self) -> usize {
        self.malformed
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn events(&self) -> &[RawEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn stars(&self) -> &[StarEvent] {
        &self.stars
    }

    pub fn actors(&self) -> impl Iterator<Item = &str> + '_ {
        self.by_actor.keys().map(String::as_str)
    }

    pub fn repos(&self) -> impl Iterator<Item = &str> + '_ {
        self.by_repo.keys().map(String::as_str)
    }

    pub fn actor_events<'a>(&'a self, actor: &str) -> impl Iterator<Item = &'a RawEvent> + 'a {
        self.indexed(self.by_actor.get(actor))
    }

    pub fn repo_events<'a>(&'a self, repo: &str) -> impl Iterator<Item = &'a RawEvent> + 'a {
        self.indexed(self.by_repo.get(repo))
    }

    pub fn subject_events<'a>(&'a self, subject: Subject<'_>) -> impl Iterator<Item = &'a RawEvent> + 'a {
        match subject {
            Subject::Actor(a) => self.indexed(self.by_actor.get(a)),
            Subject::Repo(r) => self.indexed(self.by_repo.get(r)),
        }
    }

    pub fn repo_stars<'a>(&'a self, repo: &str) -> impl Iterator<Item = &'a StarEvent> + 'a {
        self.stars_by_repo
            .get(repo)
            .into_iter()
            .flatten()
            .map(move |&i| &self.stars[i as usize])
    }

    fn indexed<'a>(&'a self, idx: Option<&'a Vec<u32>>) -> impl Iterator<Item = &'a RawEvent> + 'a {
        idx.into_iter().flatten().map(move |&i| &self.events[i as usize])
    }

    /// Whole days between a subject's first and last event.
    pub fn activity_duration(&self, subject: Subject<'_>) -> Result<i64> {
        let mut it = self.subject_events(subject);
        let first = it.next().ok_or_else(|| match subject {
            Subject::Actor(a) => Error::NotFound { kind: "actor", id: String::from(a) },
            Subject::Repo(r) => Error::NotFound { kind: "repo", id: String::from(r) },
        })?;
        let last = it.last().unwrap_or(first);
        Ok((last.timestamp.unix() - first.timestamp.unix()).div_euclid(SECONDS_PER_DAY))
    }

    /// Stars per UTC calendar month; months without stars are absent.
    pub fn monthly_star_counts(&self, repo: &str) -> BTreeMap<MonthKey, u64> {
        let mut counts = BTreeMap::new();
        for s in self.repo_stars(repo) {
            *counts.entry(s.timestamp.month()).or_insert(0) += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    fn star(actor: &str, repo: &str, t: &str) -> RawEvent {
        RawEvent::new(actor, repo, STAR_EVENT_KIND, ts(t))
    }

    #[test]
    fn classification_matches_table() {
        assert_eq!(classify_event("WatchEvent"), EventClass::Star);
        assert_eq!(classify_event("PushEvent"), EventClass::Push);
        assert_eq!(classify_event("ForkEvent"), EventClass::Fork);
        assert_eq!(classify_event("CreateEvent"), EventClass::Create);
        assert_eq!(classify_event("IssuesEvent"), EventClass::Issue);
        assert_eq!(classify_event("PullRequestEvent"), EventClass::PR);
        assert_eq!(classify_event("IssueCommentEvent"), EventClass::Comment);
        assert_eq!(classify_event("CommitCommentEvent"), EventClass::Comment);
        assert_eq!(classify_event("PullRequestReviewCommentEvent"), EventClass::Comment);
        assert_eq!(classify_event("GollumEvent"), EventClass::Other);
        assert_eq!(classify_event(""), EventClass::Other);
    }

    #[test]
    fn duplicate_stars_keep_earliest() {
        let store = EventStore::new(
            TimeWindow::unbounded(),
            vec![
                star("a", "o/x", "2024-02-01T00:00:00Z"),
                star("a", "o/x", "2024-01-01T00:00:00Z"),
                star("b", "o/x", "2024-01-05T00:00:00Z"),
            ],
        );
        assert_eq!(store.len(), 3);
        assert_eq!(store.stars().len(), 2);
        assert_eq!(store.stars()[0].timestamp, ts("2024-01-01T00:00:00Z"));
    }

    #[test]
    fn events_outside_window_are_dropped() {
        let w = TimeWindow::new(ts("2024-01-01T00:00:00Z"), ts("2024-02-01T00:00:00Z")).unwrap();
        let store = EventStore::new(
            w,
            vec![star("a", "o/x", "2023-12-31T23:59:59Z"), star("b", "o/x", "2024-01-31T23:59:59Z")],
        );
        assert_eq!(store.len(), 1);
        assert!(store.events().iter().all(|e| w.contains(e.timestamp)));
    }

    #[test]
    fn activity_duration_examples() {
        let store = EventStore::new(
            TimeWindow::unbounded(),
            vec![
                star("a", "o/x", "2024-01-01T00:00:00Z"),
                RawEvent::new("a", "o/y", "PushEvent", ts("2024-01-10T00:00:00Z")),
                star("b", "o/x", "2024-01-01T00:00:00Z"),
                RawEvent::new("b", "o/z", "PushEvent", ts("2024-01-31T23:59:00Z")),
                star("c", "o/x", "2024-05-05T05:05:05Z"),
            ],
        );
        assert_eq!(store.activity_duration(Subject::Actor("a")).unwrap(), 9);
        assert_eq!(store.activity_duration(Subject::Actor("b")).unwrap(), 30);
        assert_eq!(store.activity_duration(Subject::Actor("c")).unwrap(), 0);
        assert!(matches!(
            store.activity_duration(Subject::Actor("nobody")),
            Err(Error::NotFound { .. })
        ));
        assert_eq!(store.activity_duration(Subject::Repo("o/x")).unwrap(), 125);
    }

    #[test]
    fn monthly_counts_small_fixture() {
        let mut events = Vec::new();
        for i in 0..3 {
            events.push(star(&alloc::format!("m{i}"), "o/x", "2024-03-10T00:00:00Z"));
        }
        for i in 0..2 {
            events.push(star(&alloc::format!("a{i}"), "o/x", "2024-04-10T00:00:00Z"));
        }
        let store = EventStore::new(TimeWindow::unbounded(), events);
        let counts = store.monthly_star_counts("o/x");
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[&MonthKey::new(2024, 3).unwrap()], 3);
        assert_eq!(counts[&MonthKey::new(2024, 4).unwrap()], 2);
        assert!(store.monthly_star_counts("o/none").is_empty());
    }

    #[test]
    fn monthly_counts_match_brute_force_over_month_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let start = ts("2024-01-15T00:00:00Z").unix();
        let end = ts("2024-02-15T00:00:00Z").unix();
        let times: Vec<i64> = (0..100).map(|_| rng.random_range(start..end)).collect();
        let events: Vec<RawEvent> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| star(&alloc::format!("u{i}"), "o/x", &alloc::format!("{}", Timestamp::from_unix(t))))
            .collect();
        let store = EventStore::new(TimeWindow::unbounded(), events);
        let counts = store.monthly_star_counts("o/x");
        let feb = ts("2024-02-01T00:00:00Z").unix();
        let jan_brute = times.iter().filter(|&&t| t < feb).count() as u64;
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[&MonthKey::new(2024, 1).unwrap()], jan_brute);
        assert_eq!(counts[&MonthKey::new(2024, 2).unwrap()], 100 - jan_brute);
    }

    #[test]
    fn repo_owner_prefix() {
        assert_eq!(repo_owner("octo/cat"), "octo");
        assert_eq!(repo_owner("bare"), "bare");
    }
}
