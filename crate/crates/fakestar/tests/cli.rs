use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fakestar::commands::{DatasetInfo, RunSummary};
use fakestar::core::events::RawEvent;
use fakestar::core::lockstep::LockstepGroup;
use fakestar::core::time::Timestamp;
use fakestar::formats::{read_csv, read_json, read_jsonl, FakeStarRow};
use fakestar::ingest::save_events;
use fakestar::PipelineConfig;

const PIPELINE: [&str; 8] = ["synth", "detect", "campaigns", "evaluate", "measure", "regress", "enrich", "report"];

fn fakestar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fakestar"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = fakestar(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demo/demo.toml")
}

fn run_demo(out: &Path, threads: usize) {
    let (cfg, out, threads) = (demo_config(), out.to_str().unwrap().to_string(), threads.to_string());
    for cmd in PIPELINE {
        ok(&["--config", cfg.to_str().unwrap(), "--out", &out, "--threads", &threads, "--plot-data", cmd]);
    }
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn t(day: i64, secs: i64) -> Timestamp {
    Timestamp::from_ymd(2024, 1, 1).unwrap().plus_days(day).plus_seconds(secs)
}

/// Background traffic: 300 accounts starring 5 of 40 repositories each,
/// spread over the year.
fn background() -> Vec<RawEvent> {
    let mut ev = Vec::new();
    for a in 0..300i64 {
        for j in 0..5i64 {
            let repo = (a * 7 + j * 13) % 40;
            let day = (a * 37 + j * 71) % 360;
            ev.push(RawEvent::new(format!("bg{a:03}"), format!("site/lib{repo:02}"), "WatchEvent", t(day, a * 11)));
        }
        ev.push(RawEvent::new(format!("bg{a:03}"), format!("bg{a:03}/dotfiles"), "PushEvent", t(a % 360, 0)));
    }
    ev
}

fn write_config(dir: &Path, archive: &Path) -> PathBuf {
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[run]\nout_dir = \"{}\"\n[input]\npaths = [\"{}\"]\n[window]\nstart = \"2024-01-01T00:00:00Z\"\nend = \"2025-01-01T00:00:00Z\"\n",
            dir.join("out").display(),
            archive.display()
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn demo_outputs_are_byte_identical_across_runs_and_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_demo(a.path(), 1);
    run_demo(b.path(), 3);
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.contains_key(Path::new("plot_data/fig3_prevalence.csv")));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{} differs", k.display());
    }
}

#[test]
fn demo_report_matches_planted_counts() {
    let dir = tempfile::tempdir().unwrap();
    run_demo(dir.path(), 2);
    let cfg = PipelineConfig::load(&demo_config()).unwrap();
    let inj = &cfg.scenario.injections;
    let planted_stars: usize = inj.iter().map(|i| i.n_target_repos * i.stars_per_repo).sum();
    let s: RunSummary = read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(s.lockstep_stars, planted_stars);
    assert_eq!(s.low_activity_stars, 0);
    assert_eq!(s.fake_stars, planted_stars);
    assert_eq!(s.campaign_repos, inj.iter().map(|i| i.n_target_repos).sum::<usize>());
    assert_eq!(s.campaign_accounts, inj.iter().map(|i| i.n_fake_accounts).sum::<usize>());
    assert_eq!(s.campaign_fake_stars as usize, planted_stars);
    assert_eq!(s.lockstep_groups, inj.len());
    let e = s.evaluation.unwrap();
    assert_eq!((e.scores.repos.recall, e.scores.accounts.recall, e.scores.stars.recall), (Some(1.0), Some(1.0), Some(1.0)));
    assert_eq!(e.background_false_flags, 0);
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains(&format!("campaign repositories              {}", s.campaign_repos)), "{text}");
}

#[test]
fn printed_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo_config();
    let dumped = ok(&["--config", cfg.to_str().unwrap(), "--print-config"]).stdout;
    let path = dir.path().join("dumped.toml");
    std::fs::write(&path, &dumped).unwrap();
    assert_eq!(PipelineConfig::load(&path).unwrap(), PipelineConfig::load(&cfg).unwrap());

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "synth"]);
    ok(&["--config", path.to_str().unwrap(), "--out", b.to_str().unwrap(), "synth"]);
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn detect_recovers_a_planted_block() {
    let dir = tempfile::tempdir().unwrap();
    let mut events = background();
    let mut planted = BTreeSet::new();
    for u in 0..60i64 {
        for r in 0..12i64 {
            let (actor, repo) = (format!("buyer{u:02}"), format!("shop{r:02}/tool"));
            events.push(RawEvent::new(&actor, &repo, "WatchEvent", t(130, (u * 12 + r) * 240)));
            planted.insert((actor, repo));
        }
    }
    // an outsider stars a few planted repositories during the burst
    for r in 0..3 {
        events.push(RawEvent::new("bg000", format!("shop{r:02}/tool"), "WatchEvent", t(130, 3600)));
    }
    let archive = dir.path().join("events.json.gz");
    save_events(&archive, &events).unwrap();
    let cfg = write_config(dir.path(), &archive);
    ok(&["--config", cfg.to_str().unwrap(), "ingest"]);
    ok(&["--config", cfg.to_str().unwrap(), "detect"]);

    let out = dir.path().join("out");
    let info: DatasetInfo = read_json(&out.join("dataset.json")).unwrap();
    assert_eq!(info.events, events.len());
    let groups: Vec<LockstepGroup> = read_jsonl(&out.join("lockstep_groups.jsonl")).unwrap();
    assert_eq!(groups.len(), 1);
    let users: BTreeSet<String> = planted.iter().map(|p| p.0.clone()).collect();
    let repos: BTreeSet<String> = planted.iter().map(|p| p.1.clone()).collect();
    assert_eq!((&groups[0].users, &groups[0].repos), (&users, &repos));
    let stars: BTreeSet<(String, String)> = read_csv::<FakeStarRow>(&out.join("lockstep_stars.csv"))
        .unwrap()
        .into_iter()
        .map(|r| (r.actor_id, r.repo_id))
        .collect();
    assert_eq!(stars, planted);
    let ledger: Vec<FakeStarRow> = read_csv(&out.join("fake_stars.csv")).unwrap();
    assert!(ledger.iter().all(|r| r.signature == "lockstep"));
    assert_eq!(ledger.len(), planted.len());
}

#[test]
fn campaigns_on_an_empty_ledger_succeed_with_empty_reports() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("events.jsonl");
    save_events(&archive, &background()).unwrap();
    let cfg = write_config(dir.path(), &archive);
    for cmd in ["ingest", "detect", "campaigns", "report"] {
        ok(&["--config", cfg.to_str().unwrap(), cmd]);
    }
    let out = dir.path().join("out");
    assert_eq!(std::fs::read_to_string(out.join("fake_stars.csv")).unwrap(), "actor_id,repo_id,timestamp,signature\n");
    assert_eq!(std::fs::read_to_string(out.join("campaigns.jsonl")).unwrap(), "");
    assert_eq!(
        std::fs::read_to_string(out.join("campaigns_summary.csv")).unwrap(),
        "repo,first_spike_month,n_spike_months,fake_total,all_time_fake_pct\n"
    );
    let s: RunSummary = read_json(&out.join("report.json")).unwrap();
    assert_eq!((s.campaign_repos, s.fake_stars, s.events), (0, 0, 1800));
}

#[test]
fn downstream_command_without_inputs_names_the_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nothing");
    let res = fakestar(&["--out", out.to_str().unwrap(), "campaigns"]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("missing input") && err.contains("dataset.json"), "{err}");
    assert!(!out.exists());
}

#[test]
fn invalid_config_fails_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, format!("[run]\nout_dir = \"{}\"\n[scenario]\nn_acounts = 5\n", dir.path().join("out").display())).unwrap();
    let res = fakestar(&["--config", cfg.to_str().unwrap(), "synth"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("n_acounts"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn wrong_file_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("notes.txt");
    std::fs::write(&archive, "hello\nworld\n{\"type\":\"WatchEvent\"}\n").unwrap();
    let cfg = write_config(dir.path(), &archive);
    let res = fakestar(&["--config", cfg.to_str().unwrap(), "ingest"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("3 of 3 lines are malformed"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn no_subcommand_is_an_error() {
    assert!(!fakestar(&[]).status.success());
}
