//! Pipeline configuration file (TOML).

use std::path::{Path, PathBuf};

use fakestar_core::measure::{ActivityDims, KMeansConfig};
use fakestar_core::pipeline::DetectionConfig;
use fakestar_core::synth::ScenarioConfig;
use fakestar_core::time::{Timestamp, TimeWindow};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub run: RunConfig,
    pub input: InputConfig,
    /// Events outside this window are dropped at ingestion.
    pub window: Option<WindowConfig>,
    pub detection: DetectionConfig,
    pub scenario: ScenarioConfig,
    pub measure: MeasureConfig,
    pub regression: RegressionConfig,
    pub enrich: EnrichConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            run: RunConfig::default(),
            input: InputConfig::default(),
            window: None,
            detection: DetectionConfig::default(),
            scenario: ScenarioConfig::default(),
            measure: MeasureConfig::default(),
            regression: RegressionConfig::default(),
            enrich: EnrichConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Worker cap; 0 lets the pool pick.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Event archives, plain or gzip JSONL.
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl WindowConfig {
    pub fn to_window(self) -> AppResult<TimeWindow> {
        if self.end <= self.start {
            return Err(AppError::Config("window.end must be after window.start".into()));
        }
        Ok(TimeWindow {
            start: self.start,
            end: self.end,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub kmeans: KMeansConfig,
    pub activity_dims: ActivityDims,
    pub top_tokens: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            kmeans: KMeansConfig::default(),
            activity_dims: ActivityDims::default(),
            top_tokens: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    /// Autoregressive orders to fit.
    pub orders: Vec<usize>,
    pub log_transform: bool,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            orders: vec![1, 2, 3],
            log_transform: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnrichConfig {
    /// CSV `entity_id,status` snapshot.
    pub existence: Option<PathBuf>,
    /// CSV of baseline repository ids to compare against.
    pub baseline_repos: Option<PathBuf>,
    /// CSV of baseline account ids.
    pub baseline_accounts: Option<PathBuf>,
    /// CSV `repo_id,month`.
    pub trending: Option<PathBuf>,
    /// CSV `package,registry,repo_id`.
    pub packages: Option<PathBuf>,
    /// Query the live platform instead of the existence fixture.
    pub live: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file. Relative input paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.input.paths.iter_mut().for_each(fix);
        let e = &mut self.enrich;
        for p in [&mut e.existence, &mut e.baseline_repos, &mut e.baseline_accounts, &mut e.trending, &mut e.packages]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> AppResult<()> {
        self.detection.lockstep.validate()?;
        if let Some(w) = self.window {
            w.to_window()?;
        }
        self.scenario.validate()?;
        for &k in &self.regression.orders {
            fakestar_core::econo::RegressionSpec::new(k).validate()?;
        }
        let km = &self.measure.kmeans;
        if km.k_min == 0 || km.k_max < km.k_min || km.seeds.is_empty() {
            return Err(AppError::Config("measure.kmeans needs 1 <= k_min <= k_max and at least one seed".into()));
        }
        Ok(())
    }

    pub fn window(&self) -> AppResult<TimeWindow> {
        self.window.map_or(Ok(TimeWindow::unbounded()), WindowConfig::to_window)
    }
}
