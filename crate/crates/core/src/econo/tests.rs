use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::campaigns::{detect_campaigns, CampaignThresholds, Signature};
use crate::events::{RawEvent, STAR_EVENT_KIND};
use crate::time::{Timestamp, TimeWindow};

fn jan(day: u32) -> Timestamp {
    Timestamp::from_ymd(2024, 1, day).unwrap()
}

fn year_2024() -> TimeWindow {
    TimeWindow::months(MonthKey::new(2024, 1).unwrap(), MonthKey::new(2024, 12).unwrap()).unwrap()
}

fn campaign_fixture(extra: Vec<RawEvent>) -> (EventStore, FakeStarLedger) {
    let mut events = extra;
    let mut ledger = FakeStarLedger::new();
    for i in 0..60 {
        let a = format!("fake{i}");
        events.push(RawEvent::new(a.as_str(), "own/proj", STAR_EVENT_KIND, jan(3)));
        ledger.insert(&a, "own/proj", jan(3), Signature::Lockstep);
    }
    for i in 0..40 {
        events.push(RawEvent::new(format!("real{i}"), "own/proj", STAR_EVENT_KIND, jan(10)));
    }
    events.push(RawEvent::new("someone", "other/repo", "PushEvent", Timestamp::from_ymd(2024, 3, 5).unwrap()));
    (EventStore::new(year_2024(), events), ledger)
}

fn panel_of(store: &EventStore, ledger: &FakeStarLedger) -> Vec<PanelRow> {
    let campaigns = detect_campaigns(ledger, store, &CampaignThresholds::default());
    assert_eq!(campaigns.len(), 1);
    build_panel(store, ledger, &campaigns)
}

#[test]
fn fake_and_real_counts() {
    let (store, ledger) = campaign_fixture(Vec::new());
    let rows = panel_of(&store, &ledger);
    assert_eq!(rows.len(), 3);
    assert_eq!((rows[0].fake, rows[0].real, rows[0].all_fake, rows[0].all_real), (60, 40, 60, 40));
    assert_eq!((rows[2].fake, rows[2].real, rows[2].all_fake, rows[2].all_real), (0, 0, 60, 40));
    assert_eq!(rows.iter().map(|r| r.age).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(rows.iter().all(|r| !r.release));
}

#[test]
fn release_switches_on_and_stays() {
    let rel = RawEvent::new("own", "own/proj", RELEASE_EVENT_KIND, Timestamp::from_ymd(2024, 2, 14).unwrap());
    let (store, ledger) = campaign_fixture(vec![rel]);
    let rows = panel_of(&store, &ledger);
    assert_eq!(rows.iter().map(|r| r.release).collect::<Vec<_>>(), vec![false, true, true]);
}

#[test]
fn activity_matches_per_event_filter() {
    let kinds = ["PushEvent", "IssuesEvent", "ForkEvent", "WatchEvent", "PullRequestEvent"];
    let actors = ["own", "fake3", "fake17", "alice", "bob", "real2"];
    let mut extra = Vec::new();
    for i in 0..90u32 {
        let t = Timestamp::from_ymd(2024, 1 + (i % 3), 1 + (i % 27)).unwrap();
        extra.push(RawEvent::new(actors[(i as usize * 7) % actors.len()], "own/proj", kinds[i as usize % kinds.len()], t));
    }
    let (store, ledger) = campaign_fixture(extra);
    let rows = panel_of(&store, &ledger);
    for row in &rows {
        let expect = store
            .events()
            .iter()
            .filter(|e| e.repo == "own/proj" && e.timestamp.month() == row.month)
            .filter(|e| e.actor != "own" && !e.actor.starts_with("fake"))
            .count() as u64;
        assert_eq!(row.activity, expect, "{}", row.month);
    }
}

#[test]
fn regressor_names_follow_the_model() {
    let names = RegressionSpec::new(2).regressor_names();
    assert_eq!(
        names,
        ["real_{i,t-1}", "real_{i,t-2}", "all_real_{i,t-3}", "fake_{i,t-1}", "fake_{i,t-2}", "all_fake_{i,t-3}"]
            .map(String::from)
    );
    assert!(RegressionSpec::new(0).validate().is_err());
    assert!(RegressionSpec::new(7).validate().is_err());
}

#[test]
fn gaps_drop_rows_missing_lags() {
    let mut panel = simulate_panel(&ArProcess { n_units: 3, n_periods: 8, ..ArProcess::default() }).unwrap();
    panel.retain(|o| !(o.unit == 0 && o.period == 5));
    let d = build_design(&panel, &RegressionSpec::new(2)).unwrap();
    // unit 0 keeps periods 3, 4; units 1 and 2 keep 3..8
    assert_eq!(d.n_rows(), 2 + 5 + 5);
}

#[test]
fn within_transform_zeroes_both_margins() {
    let units = [0, 0, 0, 1, 1, 2, 2, 2, 2];
    let periods = [0, 1, 2, 0, 2, 0, 1, 2, 3];
    let mut v = [3.0, -1.0, 4.0, 1.0, 5.0, 9.0, -2.0, 6.0, 5.0];
    within_transform(&mut v, &units, &periods, 1e-12);
    for g in 0..3 {
        let s: f64 = v.iter().zip(&units).filter(|(_, &u)| u == g).map(|(x, _)| x).sum();
        assert!(s.abs() < 1e-9);
    }
    for g in 0..4 {
        let s: f64 = v.iter().zip(&periods).filter(|(_, &t)| t == g).map(|(x, _)| x).sum();
        assert!(s.abs() < 1e-9);
    }
}

#[test]
fn reference_coefficients_are_recovered() {
    let process = ArProcess { seed: 7, ..ArProcess::fixed_effects_reference() };
    let fit = fit_fixed_effects_ar(&simulate_panel(&process).unwrap(), &RegressionSpec::new(2)).unwrap();
    assert!(fit.dropped.is_empty());
    for (est, truth) in fit.estimates().iter().zip(process.truth()) {
        assert!((est - truth).abs() <= 0.02, "{est} vs {truth}");
    }
    assert_eq!(fit.n_observations, 500 * 21);
}

#[test]
fn zero_fake_columns_are_dropped() {
    let process = ArProcess { fake_prob: 0.0, all_fake: 0.0, fake_lags: vec![0.0, 0.0], seed: 3, ..ArProcess::default() };
    let panel = simulate_panel(&process).unwrap();
    let fit = fit_fixed_effects_ar(&panel, &RegressionSpec::new(2)).unwrap();
    assert_eq!(fit.dropped, ["fake_{i,t-1}", "fake_{i,t-2}", "all_fake_{i,t-3}"].map(String::from));

    // same data with the fake regressors never built
    let mut design = build_design(&panel, &RegressionSpec::new(2)).unwrap();
    design.columns.truncate(3);
    design.names.truncate(3);
    let reference = fit_design(&design, 2).unwrap();
    for (a, b) in fit.estimates().iter().zip(reference.estimates()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn pure_ar1_long_panel() {
    let process = ArProcess { n_units: 200, n_periods: 120, seed: 11, ..ArProcess::pure_ar1(0.5) };
    let fit = fit_fixed_effects_ar(&simulate_panel(&process).unwrap(), &RegressionSpec::new(1)).unwrap();
    let b = fit.coefficient("real_{i,t-1}").unwrap().estimate;
    assert!((b - 0.5).abs() <= 0.02, "{b}");
}

#[test]
fn too_few_units() {
    let panel = simulate_panel(&ArProcess { n_units: 2, n_periods: 10, ..ArProcess::default() }).unwrap();
    let one: Vec<PanelObs> = panel.into_iter().filter(|o| o.unit == 0).collect();
    assert!(matches!(fit_fixed_effects_ar(&one, &RegressionSpec::new(1)), Err(Error::InsufficientData(_))));
}

#[test]
fn table_renders() {
    let fit = fit_fixed_effects_ar(&simulate_panel(&ArProcess::default()).unwrap(), &RegressionSpec::new(2)).unwrap();
    let text = format!("{fit}");
    assert!(text.contains("all_fake_{i,t-3}"));
    assert!(text.contains("Observations"));
}
