#![allow(dead_code)]

use fakestar_core::events::RawEvent;
use fakestar_core::time::{Timestamp, TimeWindow};
use proptest::prelude::*;

pub const HOUR: i64 = 3600;

pub fn base() -> Timestamp {
    Timestamp::from_ymd(2024, 1, 1).unwrap()
}

pub fn year_2024() -> TimeWindow {
    TimeWindow::new(base(), Timestamp::from_ymd(2025, 1, 1).unwrap()).unwrap()
}

pub const KINDS: [&str; 7] = [
    "WatchEvent",
    "WatchEvent",
    "WatchEvent",
    "PushEvent",
    "ForkEvent",
    "IssuesEvent",
    "CreateEvent",
];

/// Events over `actors` accounts and `repos` repositories in the first
/// `hours` hours of 2024.
pub fn events(actors: usize, repos: usize, hours: i64, max_len: usize) -> impl Strategy<Value = Vec<RawEvent>> {
    prop::collection::vec((0..actors, 0..repos, 0..KINDS.len(), 0..hours), 0..max_len).prop_map(|raw| {
        raw.into_iter()
            .map(|(a, r, k, h)| {
                RawEvent::new(format!("u{a}"), format!("o{}/r{r}", r % 3), KINDS[k], base().plus_seconds(h * HOUR))
            })
            .collect()
    })
}
