mod common;

use std::collections::{BTreeMap, BTreeSet};

use fakestar_core::events::{EventStore, RawEvent};
use fakestar_core::lowactivity::{detect_low_activity, filter_by_repo_threshold};
use proptest::prelude::*;

/// The rule read literally over each account's complete history.
fn brute_force(events: &[RawEvent]) -> BTreeSet<(String, String)> {
    let mut by_actor: BTreeMap<&str, Vec<&RawEvent>> = BTreeMap::new();
    for e in events {
        by_actor.entry(e.actor.as_str()).or_default().push(e);
    }
    let mut out = BTreeSet::new();
    for (actor, hist) in by_actor {
        let stars: Vec<_> = hist.iter().filter(|e| e.kind == "WatchEvent").collect();
        let others: Vec<_> = hist.iter().filter(|e| e.kind != "WatchEvent").collect();
        if stars.len() != 1 || others.len() > 1 {
            continue;
        }
        let s = stars[0];
        let same_day = |a: &RawEvent, b: &RawEvent| a.timestamp.unix().div_euclid(86_400) == b.timestamp.unix().div_euclid(86_400);
        if others.iter().all(|o| o.repo == s.repo && same_day(o, s)) {
            out.insert((actor.to_string(), s.repo.clone()));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn equals_per_account_scan(evs in common::events(40, 4, 72, 120)) {
        let store = EventStore::new(common::year_2024(), evs.clone());
        let got: BTreeSet<_> = detect_low_activity(&store).into_iter().map(|f| (f.actor, f.repo)).collect();
        prop_assert_eq!(got, brute_force(&evs));
    }

    #[test]
    fn threshold_idempotent_and_monotone(evs in common::events(60, 3, 48, 150), a in 0usize..8, b in 0usize..8) {
        let flags = detect_low_activity(&EventStore::new(common::year_2024(), evs));
        let fa = filter_by_repo_threshold(&flags, a);
        prop_assert_eq!(&filter_by_repo_threshold(&fa, a), &fa);
        let (lo, hi) = (a.min(b), a.max(b));
        let f_hi = filter_by_repo_threshold(&flags, hi);
        prop_assert!(f_hi.is_subset(&filter_by_repo_threshold(&flags, lo)));
    }
}
