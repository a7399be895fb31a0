//! Low-activity signature: accounts whose whole history in the window is a
//! single star, optionally accompanied by one more event on the same
//! repository and UTC day.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::events::{EventStore, RawEvent};
use crate::time::Timestamp;

pub const DEFAULT_MIN_FAKE: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LowActivityFlag {
    pub repo: String,
    pub actor: String,
    pub star_time: Timestamp,
    pub extra_event_kind: Option<String>,
}

/// Applies the signature to a single account history (time-ordered).
pub fn classify_history<'a>(events: impl IntoIterator<Item = &'a RawEvent>) -> Option<LowActivityFlag> {
    let mut star: Option<&RawEvent> = None;
    let mut extra: Option<&RawEvent> = None;
    for e in events {
        if e.is_star() {
            if star.is_some() {
                return None;
            }
            star = Some(e);
        } else {
            if extra.is_some() {
                return None;
            }
            extra = Some(e);
        }
    }
    let star = star?;
    if let Some(x) = extra {
        if x.repo != star.repo || x.timestamp.day_index() != star.timestamp.day_index() {
            return None;
        }
    }
    Some(LowActivityFlag {
        repo: star.repo.clone(),
        actor: star.actor.clone(),
        star_time: star.timestamp,
        extra_event_kind: extra.map(|x| x.kind.clone()),
    })
}

pub fn detect_low_activity(store: &EventStore) -> BTreeSet<LowActivityFlag> {
    store
        .actors()
        .filter_map(|actor| classify_history(store.actor_events(actor)))
        .collect()
}

/// Keeps only flags on repositories that collect at least `min_fake` of them.
pub fn filter_by_repo_threshold(flags: &BTreeSet<LowActivityFlag>, min_fake: usize) -> BTreeSet<LowActivityFlag> {
    let mut per_repo: BTreeMap<&str, usize> = BTreeMap::new();
    for f in flags {
        *per_repo.entry(f.repo.as_str()).or_insert(0) += 1;
    }
    flags
        .iter()
        .filter(|f| per_repo[f.repo.as_str()] >= min_fake)
        .cloned()
        .collect()
}

/// Low-activity flags surviving the per-repository threshold, grouped by repo.
pub fn flags_by_repo(flags: &BTreeSet<LowActivityFlag>) -> BTreeMap<&str, Vec<&LowActivityFlag>> {
    let mut out: BTreeMap<&str, Vec<&LowActivityFlag>> = BTreeMap::new();
    for f in flags {
        out.entry(f.repo.as_str()).or_default().push(f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::STAR_EVENT_KIND;
    use crate::time::TimeWindow;
    use alloc::format;
    use alloc::vec;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    fn ev(actor: &str, repo: &str, kind: &str, t: &str) -> RawEvent {
        RawEvent::new(actor, repo, kind, ts(t))
    }

    #[test]
    fn single_star_is_flagged() {
        let store = EventStore::new(
            TimeWindow::unbounded(),
            vec![ev("a", "o/x", STAR_EVENT_KIND, "2024-01-01T10:00:00Z")],
        );
        let flags = detect_low_activity(&store);
        assert_eq!(flags.len(), 1);
        let f = flags.iter().next().unwrap();
        assert_eq!(f.actor, "a");
        assert_eq!(f.extra_event_kind, None);
    }

    #[test]
    fn star_plus_same_day_fork_is_flagged() {
        let store = EventStore::new(
            TimeWindow::unbounded(),
            vec![
                ev("a", "o/x", STAR_EVENT_KIND, "2024-01-01T10:00:00Z"),
                ev("a", "o/x", "ForkEvent", "2024-01-01T23:00:00Z"),
            ],
        );
        let flags = detect_low_activity(&store);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags.iter().next().unwrap().extra_event_kind.as_deref(), Some("ForkEvent"));
    }

    #[test]
    fn rejected_histories() {
        let cases = [
            // two stars on different repos
            vec![
                ev("a", "o/x", STAR_EVENT_KIND, "2024-01-01T10:00:00Z"),
                ev("a", "o/y", STAR_EVENT_KIND, "2024-01-01T11:00:00Z"),
            ],
            // extra event on another day
            vec![
                ev("a", "o/x", STAR_EVENT_KIND, "2024-01-01T10:00:00Z"),
                ev("a", "o/x", "ForkEvent", "2024-01-02T00:00:00Z"),
            ],
            // extra event on another repo
            vec![
                ev("a", "o/x", STAR_EVENT_KIND, "2024-01-01T10:00:00Z"),
                ev("a", "o/y", "ForkEvent", "2024-01-01T10:30:00Z"),
            ],
            // two extra events
            vec![
                ev("a", "o/x", STAR_EVENT_KIND, "2024-01-01T10:00:00Z"),
                ev("a", "o/x", "ForkEvent", "2024-01-01T10:30:00Z"),
                ev("a", "o/x", "IssuesEvent", "2024-01-01T10:40:00Z"),
            ],
            // no star at all
            vec![ev("a", "o/x", "PushEvent", "2024-01-01T10:00:00Z")],
        ];
        for events in cases {
            let store = EventStore::new(TimeWindow::unbounded(), events);
            assert!(detect_low_activity(&store).is_empty());
        }
    }

    fn flags_for(repo: &str, n: usize) -> Vec<LowActivityFlag> {
        (0..n)
            .map(|i| LowActivityFlag {
                repo: repo.into(),
                actor: format!("{repo}-u{i}"),
                star_time: Timestamp::from_unix(0),
                extra_event_kind: None,
            })
            .collect()
    }

    #[test]
    fn repo_threshold_is_inclusive() {
        let flags: BTreeSet<_> = flags_for("o/a", 49).into_iter().chain(flags_for("o/b", 50)).collect();
        let kept = filter_by_repo_threshold(&flags, 50);
        assert_eq!(kept.len(), 50);
        assert!(kept.iter().all(|f| f.repo == "o/b"));
    }

    #[test]
    fn repo_threshold_mixed() {
        let flags: BTreeSet<_> = flags_for("o/a", 60).into_iter().chain(flags_for("o/b", 10)).collect();
        let kept = filter_by_repo_threshold(&flags, 50);
        let per_repo = flags_by_repo(&kept);
        assert_eq!(per_repo.len(), 1);
        assert_eq!(per_repo["o/a"].len(), 60);
    }
}
