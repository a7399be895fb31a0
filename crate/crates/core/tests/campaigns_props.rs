use std::collections::{BTreeMap, BTreeSet};

use fakestar_core::campaigns::{detect_campaigns, CampaignThresholds, FakeStarLedger, Signature};
use fakestar_core::events::{EventStore, RawEvent};
use fakestar_core::time::{MonthKey, Timestamp, TimeWindow};
use proptest::prelude::*;

/// Per repo, per month: (fake stars, real stars). Fake stars are given by
/// distinct accounts so ledger and store agree.
fn fixture() -> impl Strategy<Value = Vec<Vec<(u32, u32)>>> {
    prop::collection::vec(prop::collection::vec((0u32..120, 0u32..120), 1..4), 1..5)
}

fn build(spec: &[Vec<(u32, u32)>]) -> (EventStore, FakeStarLedger) {
    let mut events = Vec::new();
    let mut ledger = FakeStarLedger::new();
    for (r, months) in spec.iter().enumerate() {
        let repo = format!("own{r}/repo");
        for (m, &(fake, real)) in months.iter().enumerate() {
            let t = Timestamp::from_ymd(2024, m as u32 + 1, 10).unwrap();
            for i in 0..fake {
                let a = format!("f{r}-{m}-{i}");
                events.push(RawEvent::new(a.as_str(), repo.as_str(), "WatchEvent", t));
                ledger.insert(&a, &repo, t, Signature::LowActivity);
            }
            for i in 0..real {
                events.push(RawEvent::new(format!("x{r}-{m}-{i}"), repo.as_str(), "WatchEvent", t));
            }
        }
    }
    let w = TimeWindow::months(MonthKey::new(2024, 1).unwrap(), MonthKey::new(2024, 12).unwrap()).unwrap();
    (EventStore::new(w, events), ledger)
}

/// Integer-only restatement: month has fake > 50 and 2*fake > total; all-time
/// 10*fake > total.
fn oracle(spec: &[Vec<(u32, u32)>]) -> BTreeMap<String, Vec<usize>> {
    let mut out = BTreeMap::new();
    for (r, months) in spec.iter().enumerate() {
        let spikes: Vec<usize> = months
            .iter()
            .enumerate()
            .filter(|(_, &(f, x))| f > 50 && 2 * f > f + x)
            .map(|(m, _)| m)
            .collect();
        let fake: u32 = months.iter().map(|m| m.0).sum();
        let total: u32 = months.iter().map(|m| m.0 + m.1).sum();
        if !spikes.is_empty() && 10 * fake > total {
            out.insert(format!("own{r}/repo"), spikes);
        }
    }
    out
}

proptest! {
    #[test]
    fn matches_integer_restatement(spec in fixture()) {
        let (store, ledger) = build(&spec);
        let got: BTreeMap<String, Vec<usize>> = detect_campaigns(&ledger, &store, &CampaignThresholds::default())
            .into_iter()
            .map(|c| (c.repo, c.spike_months.iter().map(|m| m.month as usize - 1).collect()))
            .collect();
        prop_assert_eq!(got, oracle(&spec));
    }

    #[test]
    fn accounts_come_from_the_ledger(spec in fixture()) {
        let (store, ledger) = build(&spec);
        for c in detect_campaigns(&ledger, &store, &CampaignThresholds::default()) {
            let flagged: BTreeSet<String> = ledger.repo_entries(&c.repo).map(|e| e.actor.clone()).collect();
            prop_assert!(c.campaign_accounts.is_subset(&flagged));
            prop_assert!(!c.campaign_accounts.is_empty());
        }
    }

    #[test]
    fn non_spike_entries_do_not_move_spikes(spec in fixture(), pick in any::<prop::sample::Index>()) {
        let (store, ledger) = build(&spec);
        let th = CampaignThresholds::default();
        let before = detect_campaigns(&ledger, &store, &th);
        let spikes: BTreeMap<String, Vec<MonthKey>> = before.iter().map(|c| (c.repo.clone(), c.spike_months.clone())).collect();
        let removable: Vec<_> = ledger
            .iter()
            .filter(|e| spikes.get(&e.repo).is_some_and(|s| !s.contains(&e.timestamp.month())))
            .cloned()
            .collect();
        prop_assume!(!removable.is_empty());
        let drop = pick.get(&removable);
        let reduced: FakeStarLedger = ledger
            .iter()
            .filter(|e| !(e.actor == drop.actor && e.repo == drop.repo))
            .cloned()
            .collect();
        let after = detect_campaigns(&reduced, &store, &th);
        let repo_after = after.iter().find(|c| c.repo == drop.repo);
        // the repo may lose the all-time share, but its spike months never change
        if let Some(c) = repo_after {
            prop_assert_eq!(&c.spike_months, &spikes[&drop.repo]);
        }
        let mut spikes_after: BTreeMap<String, Vec<MonthKey>> = after.iter().map(|c| (c.repo.clone(), c.spike_months.clone())).collect();
        let mut spikes_before = spikes.clone();
        spikes_after.remove(&drop.repo);
        spikes_before.remove(&drop.repo);
        prop_assert_eq!(spikes_after, spikes_before);
    }
}
