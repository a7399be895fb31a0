//! Subcommand implementations. Every command reads its inputs and computes
//! its results before touching the output directory.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fakestar_core::campaigns::{campaign_accounts, detect_campaigns, CampaignReport, FakeStarLedger};
use fakestar_core::econo::{build_panel, fit_fixed_effects_ar, panel_observations, RegressionSpec};
use fakestar_core::enrich::{
    cross_reference, deletion_ratio, CrossRefResult, CrossRefTable, ExistenceProvider, FixtureProvider, Memoized,
};
use fakestar_core::events::{EventStore, Subject};
use fakestar_core::lockstep::{FakeStar, LockstepGroup};
use fakestar_core::measure::{activity_vectors, ccdf, name_token_frequency, prevalence_series, select_k, top_tokens};
use fakestar_core::synth::{evaluate_detection, generate, DetectionScores};
use serde::{Deserialize, Serialize};

use crate::cli::Command;
use crate::config::{PipelineConfig, WindowConfig};
use crate::error::{io_err, AppError, AppResult};
use crate::formats::*;
use crate::ingest::{load_files, save_events};
use crate::parallel::RayonRunner;

pub mod artifacts {
    pub const EVENTS: &str = "events.jsonl";
    pub const DATASET: &str = "dataset.json";
    pub const GROUND_TRUTH: &str = "ground_truth.csv";
    pub const LOW_ACTIVITY: &str = "low_activity.csv";
    pub const LOCKSTEP_GROUPS: &str = "lockstep_groups.jsonl";
    pub const LOCKSTEP_STARS: &str = "lockstep_stars.csv";
    pub const FAKE_STARS: &str = "fake_stars.csv";
    pub const CAMPAIGNS: &str = "campaigns.jsonl";
    pub const CAMPAIGN_SUMMARY: &str = "campaigns_summary.csv";
    pub const CAMPAIGN_ACCOUNTS: &str = "campaign_accounts.csv";
    pub const EVALUATION: &str = "evaluation.json";
    pub const PREVALENCE: &str = "prevalence.csv";
    pub const CLUSTERS: &str = "cluster_summary.csv";
    pub const TOKENS: &str = "name_tokens.csv";
    pub const PANEL: &str = "panel.csv";
    pub const DELETION: &str = "enrich_deletion.csv";
    pub const CROSSREF: &str = "enrich_crossref.json";
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_TXT: &str = "report.txt";
    pub const PLOT_DIR: &str = "plot_data";
    pub const PLOT_PREVALENCE: &str = "fig3_prevalence.csv";
    pub const PLOT_DURATIONS: &str = "fig5_duration_ccdf.csv";

    pub fn regression(k: usize) -> String {
        format!("regression_k{k}.txt")
    }
}

use artifacts as a;

/// Shape of the ingested event set, written next to `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    /// `archive` or `synthetic`.
    pub source: String,
    pub window: Option<WindowConfig>,
    pub input_lines: usize,
    pub malformed_lines: usize,
    pub events: usize,
    pub stars: usize,
    pub accounts: usize,
    pub repos: usize,
}

impl DatasetInfo {
    fn describe(source: &str, window: Option<WindowConfig>, lines: usize, store: &EventStore) -> Self {
        DatasetInfo {
            source: source.into(),
            window,
            input_lines: lines,
            malformed_lines: store.malformed_count(),
            events: store.len(),
            stars: store.stars().len(),
            accounts: store.actors().count(),
            repos: store.repos().count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub scores: DetectionScores,
    /// Active repositories without injected stars.
    pub background_repos: usize,
    pub background_false_flags: usize,
    pub background_false_flag_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub source: String,
    pub events: usize,
    pub stars: usize,
    pub accounts: usize,
    pub repos: usize,
    pub low_activity_stars: usize,
    pub lockstep_groups: usize,
    pub lockstep_stars: usize,
    /// Ledger entries before campaign postprocessing.
    pub fake_stars: usize,
    pub repos_with_fake_stars: usize,
    pub accounts_with_fake_stars: usize,
    pub campaign_repos: usize,
    pub campaign_accounts: usize,
    /// Ledger entries on campaign repositories.
    pub campaign_fake_stars: u64,
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRefSummary {
    #[serde(flatten)]
    pub result: CrossRefResult,
    pub trending_pct: Option<f64>,
    pub matched_packages: usize,
}

pub struct Context {
    pub config: PipelineConfig,
    pub plot_data: bool,
}

impl Context {
    pub fn new(config: PipelineConfig, plot_data: bool) -> Self {
        Context { config, plot_data }
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.run.out_dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn require(&self, name: &str, producer: &str) -> AppResult<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(AppError::MissingInput {
                path: p,
                hint: format!("run `fakestar {producer}` first with the same --out"),
            })
        }
    }

    fn prepare_out(&self) -> AppResult<()> {
        std::fs::create_dir_all(self.out_dir()).map_err(io_err(self.out_dir()))
    }

    fn plot_dir(&self) -> AppResult<PathBuf> {
        let dir = self.path(a::PLOT_DIR);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(dir)
    }

    pub fn load_dataset(&self) -> AppResult<DatasetInfo> {
        read_json(&self.require(a::DATASET, "ingest` or `fakestar synth")?)
    }

    pub fn load_store(&self) -> AppResult<EventStore> {
        let info = self.load_dataset()?;
        let events = self.require(a::EVENTS, "ingest` or `fakestar synth")?;
        let window = info.window.map_or(Ok(fakestar_core::time::TimeWindow::unbounded()), WindowConfig::to_window)?;
        load_files(&[events], window)
    }

    pub fn load_ledger(&self) -> AppResult<FakeStarLedger> {
        let p = self.require(a::FAKE_STARS, "detect")?;
        ledger_from_rows(&p, read_csv(&p)?)
    }

    pub fn load_campaigns(&self) -> AppResult<Vec<CampaignReport>> {
        read_jsonl(&self.require(a::CAMPAIGNS, "campaigns")?)
    }
}

pub fn dispatch(ctx: &Context, command: Command) -> AppResult<()> {
    let started = Instant::now();
    match command {
        Command::Ingest => ingest(ctx),
        Command::Detect => detect(ctx),
        Command::Campaigns => campaigns(ctx),
        Command::Synth => synth(ctx),
        Command::Evaluate => evaluate(ctx).map(|_| ()),
        Command::Measure => measure(ctx),
        Command::Regress => regress(ctx),
        Command::Enrich => enrich(ctx),
        Command::Report => report(ctx).map(|_| ()),
    }?;
    log::info!("{command:?} finished in {:.2?}", started.elapsed());
    Ok(())
}

pub fn ingest(ctx: &Context) -> AppResult<()> {
    let paths = &ctx.config.input.paths;
    if paths.is_empty() {
        return Err(AppError::Config("input.paths is empty; list event archives or use `synth`".into()));
    }
    for p in paths {
        if !p.is_file() {
            return Err(AppError::MissingInput {
                path: p.clone(),
                hint: "listed in input.paths".into(),
            });
        }
    }
    let store = load_files(paths, ctx.config.window()?)?;
    let lines = store.len() + store.malformed_count();
    let info = DatasetInfo::describe("archive", ctx.config.window, lines, &store);
    log::info!("ingested {} events ({} stars), {} malformed lines", info.events, info.stars, info.malformed_lines);
    ctx.prepare_out()?;
    save_events(&ctx.path(a::EVENTS), store.events())?;
    write_json(&ctx.path(a::DATASET), &info)
}

pub fn synth(ctx: &Context) -> AppResult<()> {
    let scenario = generate(&ctx.config.scenario)?;
    let window = scenario.window;
    let store = EventStore::new(window, scenario.events);
    let info = DatasetInfo::describe(
        "synthetic",
        Some(WindowConfig { start: window.start, end: window.end }),
        store.len(),
        &store,
    );
    log::info!(
        "generated {} events, {} injected stars on {} repositories",
        info.events,
        scenario.truth.stars.len(),
        scenario.truth.repos.len()
    );
    ctx.prepare_out()?;
    save_events(&ctx.path(a::EVENTS), store.events())?;
    write_json(&ctx.path(a::DATASET), &info)?;
    write_csv(&ctx.path(a::GROUND_TRUTH), truth_rows(&scenario.truth))
}

pub fn detect(ctx: &Context) -> AppResult<()> {
    let store = ctx.load_store()?;
    let runner = RayonRunner::new(ctx.config.run.threads)?;
    log::info!("lockstep search on {} threads", runner.threads());
    let d = fakestar_core::pipeline::detect_with(&store, &ctx.config.detection, &runner)?;
    log::info!(
        "{} low-activity stars, {} lockstep groups with {} stars, {} ledger entries",
        d.low_activity.len(),
        d.lockstep.groups.len(),
        d.lockstep.fake_stars.len(),
        d.ledger.len()
    );
    ctx.prepare_out()?;
    write_csv(&ctx.path(a::LOW_ACTIVITY), d.low_activity.iter().map(LowActivityRow::from))?;
    write_jsonl(&ctx.path(a::LOCKSTEP_GROUPS), &d.lockstep.groups)?;
    write_csv(&ctx.path(a::LOCKSTEP_STARS), lockstep_star_rows(&d.lockstep.fake_stars))?;
    write_csv(&ctx.path(a::FAKE_STARS), ledger_rows(&d.ledger))
}

pub fn campaigns(ctx: &Context) -> AppResult<()> {
    let store = ctx.load_store()?;
    let ledger = ctx.load_ledger()?;
    let reports = detect_campaigns(&ledger, &store, &ctx.config.detection.campaigns);
    let accounts = campaign_accounts(&reports);
    log::info!("{} campaign repositories, {} campaign accounts", reports.len(), accounts.len());
    ctx.prepare_out()?;
    write_jsonl(&ctx.path(a::CAMPAIGNS), &reports)?;
    write_csv(&ctx.path(a::CAMPAIGN_SUMMARY), reports.iter().map(CampaignSummaryRow::from))?;
    write_csv(
        &ctx.path(a::CAMPAIGN_ACCOUNTS),
        accounts.iter().map(|s| AccountRow { actor_id: s.to_string() }),
    )
}

/// Ledger stars on campaign repositories.
fn campaign_stars(ledger: &FakeStarLedger, campaigns: &[CampaignReport]) -> BTreeSet<FakeStar> {
    campaigns
        .iter()
        .flat_map(|c| ledger.repo_entries(&c.repo))
        .map(|e| FakeStar {
            actor: e.actor.clone(),
            repo: e.repo.clone(),
            timestamp: e.timestamp,
        })
        .collect()
}

fn compute_evaluation(ctx: &Context) -> AppResult<Evaluation> {
    let truth_path = ctx.require(a::GROUND_TRUTH, "synth")?;
    let truth = truth_from_rows(read_csv(&truth_path)?);
    let store = ctx.load_store()?;
    let ledger = ctx.load_ledger()?;
    let campaigns = ctx.load_campaigns()?;
    let repos: BTreeSet<String> = campaigns.iter().map(|c| c.repo.clone()).collect();
    let accounts: BTreeSet<String> = campaign_accounts(&campaigns).into_iter().map(String::from).collect();
    let scores = evaluate_detection(&repos, &accounts, &campaign_stars(&ledger, &campaigns), &truth);
    let background = store.repos().filter(|r| !truth.repos.contains(*r)).count();
    Ok(Evaluation {
        scores,
        background_repos: background,
        background_false_flags: scores.repos.false_positives,
        background_false_flag_rate: (background > 0).then(|| scores.repos.false_positives as f64 / background as f64),
    })
}

pub fn evaluate(ctx: &Context) -> AppResult<Evaluation> {
    let eval = compute_evaluation(ctx)?;
    log::info!(
        "repo recall {:?}, account recall {:?}, {} background false flags",
        eval.scores.repos.recall,
        eval.scores.accounts.recall,
        eval.background_false_flags
    );
    ctx.prepare_out()?;
    write_json(&ctx.path(a::EVALUATION), &eval)?;
    Ok(eval)
}

fn write_plot_data(ctx: &Context, store: &EventStore, ledger: &FakeStarLedger, campaigns: &[CampaignReport]) -> AppResult<()> {
    let prevalence = prevalence_series(store, ledger, campaigns);
    let accounts = campaign_accounts(campaigns);
    let mut rows = Vec::new();
    let populations: [(&str, Vec<Subject>); 2] = [
        ("campaign_account", accounts.iter().map(|s| Subject::Actor(s)).collect()),
        ("campaign_repo", campaigns.iter().map(|c| Subject::Repo(&c.repo)).collect()),
    ];
    for (name, subjects) in populations {
        let days: Vec<f64> = subjects
            .into_iter()
            .filter_map(|s| store.activity_duration(s).ok())
            .map(|d| d as f64)
            .collect();
        if let Ok(c) = ccdf(&days) {
            rows.extend(c.steps().into_iter().map(|(x, s)| CcdfRow {
                population: name.into(),
                days: x,
                survival: s,
            }));
        }
    }
    let dir = ctx.plot_dir()?;
    write_csv(&dir.join(a::PLOT_PREVALENCE), &prevalence)?;
    write_csv(&dir.join(a::PLOT_DURATIONS), rows)
}

pub fn measure(ctx: &Context) -> AppResult<()> {
    let cfg = &ctx.config.measure;
    let store = ctx.load_store()?;
    let ledger = ctx.load_ledger()?;
    let campaigns = ctx.load_campaigns()?;
    let prevalence = prevalence_series(&store, &ledger, &campaigns);

    let accounts = campaign_accounts(&campaigns);
    let vectors = activity_vectors(&store, accounts.iter().map(|s| Subject::Actor(s)), cfg.activity_dims);
    let points: Vec<Vec<f64>> = vectors.iter().map(|v| v.fractions.clone()).collect();
    let clusters = if points.len() >= cfg.kmeans.k_min {
        Some(select_k(&points, &cfg.kmeans)?)
    } else {
        log::warn!("{} campaign accounts with activity; too few to cluster", points.len());
        None
    };
    let labels = cfg.activity_dims.labels();
    let mut header = vec!["cluster", "size", "share_pct"];
    header.extend_from_slice(labels);
    let cluster_rows: Vec<Vec<String>> = clusters
        .iter()
        .flat_map(|c| {
            let sizes = c.cluster_sizes();
            let n = c.assignments.len() as f64;
            (0..c.k).map(move |j| {
                let mut row = vec![j.to_string(), sizes[j].to_string(), format!("{:.2}", 100.0 * sizes[j] as f64 / n)];
                row.extend(c.centers[j].iter().map(|x| format!("{:.2}", 100.0 * x)));
                row
            })
        })
        .collect();
    if let Some(c) = &clusters {
        log::info!("k = {}, silhouette {:?}", c.k, c.silhouette);
    }

    let names: Vec<&str> = campaigns
        .iter()
        .map(|c| c.repo.rsplit_once('/').map_or(c.repo.as_str(), |(_, n)| n))
        .collect();
    let tokens = top_tokens(&name_token_frequency(&names), cfg.top_tokens);

    ctx.prepare_out()?;
    write_csv(&ctx.path(a::PREVALENCE), &prevalence)?;
    write_table(&ctx.path(a::CLUSTERS), &header, cluster_rows)?;
    write_csv(
        &ctx.path(a::TOKENS),
        tokens.into_iter().enumerate().map(|(i, (token, count))| TokenRow { rank: i + 1, token, count }),
    )?;
    if ctx.plot_data {
        write_plot_data(ctx, &store, &ledger, &campaigns)?;
    }
    Ok(())
}

pub fn regress(ctx: &Context) -> AppResult<()> {
    let cfg = &ctx.config.regression;
    let store = ctx.load_store()?;
    let ledger = ctx.load_ledger()?;
    let campaigns = ctx.load_campaigns()?;
    let panel = build_panel(&store, &ledger, &campaigns);
    let obs = panel_observations(&panel);
    let mut fits = Vec::new();
    for &k in &cfg.orders {
        let spec = RegressionSpec {
            k,
            log_transform: cfg.log_transform,
        };
        let fit = fit_fixed_effects_ar(&obs, &spec)?;
        if !fit.dropped.is_empty() {
            log::warn!("k = {k}: dropped collinear regressors {:?}", fit.dropped);
        }
        fits.push((k, fit));
    }
    ctx.prepare_out()?;
    write_csv(&ctx.path(a::PANEL), panel.iter().map(PanelCsvRow::from))?;
    for (k, fit) in fits {
        std::fs::write(ctx.path(&a::regression(k)), fit.to_string()).map_err(io_err(ctx.path(&a::regression(k))))?;
    }
    Ok(())
}

fn read_entities(path: &Option<PathBuf>) -> AppResult<Vec<String>> {
    match path {
        Some(p) => Ok(read_csv::<EntityRow>(p)?.into_iter().map(|r| r.entity_id).collect()),
        None => Ok(Vec::new()),
    }
}

fn existence_provider(ctx: &Context) -> AppResult<Option<Box<dyn ExistenceProvider>>> {
    let e = &ctx.config.enrich;
    if e.live {
        #[cfg(feature = "live")]
        return Ok(Some(Box::new(Memoized::new(crate::live::GithubProvider::from_env()))));
        #[cfg(not(feature = "live"))]
        return Err(AppError::Config("enrich.live needs a build with the `live` feature".into()));
    }
    match &e.existence {
        Some(p) => Ok(Some(Box::new(Memoized::new(read_existence(p)?.into_iter().collect::<FixtureProvider>())))),
        None => Ok(None),
    }
}

pub fn enrich(ctx: &Context) -> AppResult<()> {
    let e = &ctx.config.enrich;
    let mut provider = existence_provider(ctx)?;
    if provider.is_none() && e.trending.is_none() && e.packages.is_none() {
        return Err(AppError::Config(
            "nothing to enrich: set enrich.existence, enrich.live, enrich.trending or enrich.packages".into(),
        ));
    }
    let campaigns = ctx.load_campaigns()?;
    let repos: Vec<&str> = campaigns.iter().map(|c| c.repo.as_str()).collect();
    let accounts = campaign_accounts(&campaigns);

    let mut deletion_rows = Vec::new();
    if let Some(p) = provider.as_deref_mut() {
        let base_repos = read_entities(&e.baseline_repos)?;
        let base_accounts = read_entities(&e.baseline_accounts)?;
        let pops = [
            ("repos", deletion_ratio(repos.iter().copied(), p, base_repos.iter().map(String::as_str))),
            ("accounts", deletion_ratio(accounts.iter().copied(), p, base_accounts.iter().map(String::as_str))),
        ];
        for (name, ratio) in pops {
            for (group, c) in [("detected", ratio.detected), ("baseline", ratio.baseline)] {
                deletion_rows.push(vec![
                    name.to_string(),
                    group.to_string(),
                    c.exists.to_string(),
                    c.deleted.to_string(),
                    c.unknown.to_string(),
                    c.pct_deleted().map_or(String::new(), |x| format!("{x:.2}")),
                ]);
            }
        }
    }

    let crossref = if e.trending.is_some() || e.packages.is_some() {
        let trending = e.trending.as_deref().map(read_trending).transpose()?.unwrap_or_default();
        let packages = e.packages.as_deref().map(read_packages).transpose()?.unwrap_or_default();
        let result = cross_reference(repos.iter().copied(), &CrossRefTable::new(trending, packages));
        Some(CrossRefSummary {
            trending_pct: result.trending_pct(),
            matched_packages: result.matched_packages(),
            result,
        })
    } else {
        None
    };

    ctx.prepare_out()?;
    if provider.is_some() {
        write_table(
            &ctx.path(a::DELETION),
            &["population", "group", "exists", "deleted", "unknown", "pct_deleted"],
            deletion_rows,
        )?;
    }
    if let Some(c) = crossref {
        write_json(&ctx.path(a::CROSSREF), &c)?;
    }
    Ok(())
}

pub fn summarize(ctx: &Context) -> AppResult<RunSummary> {
    let info = ctx.load_dataset()?;
    let low: Vec<LowActivityRow> = read_csv(&ctx.require(a::LOW_ACTIVITY, "detect")?)?;
    let groups: Vec<LockstepGroup> = read_jsonl(&ctx.require(a::LOCKSTEP_GROUPS, "detect")?)?;
    let lockstep: Vec<FakeStarRow> = read_csv(&ctx.require(a::LOCKSTEP_STARS, "detect")?)?;
    let ledger = ctx.load_ledger()?;
    let campaigns = ctx.load_campaigns()?;
    let evaluation = match ctx.path(a::EVALUATION) {
        p if p.is_file() => Some(read_json(&p)?),
        _ => None,
    };
    Ok(RunSummary {
        source: info.source,
        events: info.events,
        stars: info.stars,
        accounts: info.accounts,
        repos: info.repos,
        low_activity_stars: low.len(),
        lockstep_groups: groups.len(),
        lockstep_stars: lockstep.len(),
        fake_stars: ledger.len(),
        repos_with_fake_stars: ledger.repos().len(),
        accounts_with_fake_stars: ledger.actors().len(),
        campaign_repos: campaigns.len(),
        campaign_accounts: campaign_accounts(&campaigns).len(),
        campaign_fake_stars: campaigns.iter().map(|c| c.fake_total).sum(),
        evaluation,
    })
}

fn render_summary(s: &RunSummary) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<34} {v}");
    };
    line("source", s.source.clone());
    line("events", s.events.to_string());
    line("stars", s.stars.to_string());
    line("accounts", s.accounts.to_string());
    line("repositories", s.repos.to_string());
    line("low-activity stars", s.low_activity_stars.to_string());
    line("lockstep groups", s.lockstep_groups.to_string());
    line("lockstep stars", s.lockstep_stars.to_string());
    line("suspected fake stars", s.fake_stars.to_string());
    line("repositories with fake stars", s.repos_with_fake_stars.to_string());
    line("accounts with fake stars", s.accounts_with_fake_stars.to_string());
    line("campaign repositories", s.campaign_repos.to_string());
    line("campaign accounts", s.campaign_accounts.to_string());
    line("fake stars in campaigns", s.campaign_fake_stars.to_string());
    if let Some(e) = &s.evaluation {
        let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:.2}%", 100.0 * v));
        line("repository recall", pct(e.scores.repos.recall));
        line("repository precision", pct(e.scores.repos.precision));
        line("account recall", pct(e.scores.accounts.recall));
        line("account precision", pct(e.scores.accounts.precision));
        line("star recall", pct(e.scores.stars.recall));
        line("background false-flag rate", pct(e.background_false_flag_rate));
    }
    out
}

pub fn report(ctx: &Context) -> AppResult<RunSummary> {
    let summary = summarize(ctx)?;
    let plot_inputs = if ctx.plot_data {
        Some((ctx.load_store()?, ctx.load_ledger()?, ctx.load_campaigns()?))
    } else {
        None
    };
    let text = render_summary(&summary);
    ctx.prepare_out()?;
    write_json(&ctx.path(a::REPORT_JSON), &summary)?;
    std::fs::write(ctx.path(a::REPORT_TXT), &text).map_err(io_err(ctx.path(a::REPORT_TXT)))?;
    if let Some((store, ledger, campaigns)) = plot_inputs {
        write_plot_data(ctx, &store, &ledger, &campaigns)?;
    }
    print!("{text}");
    Ok(summary)
}
