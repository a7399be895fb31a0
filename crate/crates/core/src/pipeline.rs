//! End-to-end detection: both signatures, the merged ledger and campaign
//! postprocessing.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::campaigns::{detect_campaigns, merge_detections, CampaignReport, CampaignThresholds, FakeStarLedger};
use crate::events::EventStore;
use crate::lockstep::{
    run_chunked_detection_with, run_lockstep_detection_with, LockstepOutcome, LockstepParams, SeedRunner, SeedSelector,
    Sequential, StarGraph,
};
use crate::lowactivity::{detect_low_activity, filter_by_repo_threshold, LowActivityFlag, DEFAULT_MIN_FAKE};
use crate::time::TimeWindow;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub lockstep: LockstepParams,
    /// Minimum low-activity flags for a repository's flags to be kept.
    pub min_fake: usize,
    pub campaigns: CampaignThresholds,
    /// Split the lockstep search into overlapping six-month chunks.
    pub chunked: bool,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            lockstep: LockstepParams::default(),
            min_fake: DEFAULT_MIN_FAKE,
            campaigns: CampaignThresholds::default(),
            chunked: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Low-activity flags surviving the repository threshold.
    pub low_activity: BTreeSet<LowActivityFlag>,
    pub lockstep: LockstepOutcome,
    pub ledger: FakeStarLedger,
    pub campaigns: Vec<CampaignReport>,
}

/// The store window narrowed to whole months holding events, so unbounded
/// windows can still be chunked.
pub fn effective_window(store: &EventStore) -> Option<TimeWindow> {
    let first = store.events().first()?.timestamp.month();
    let last = store.events().last()?.timestamp.month();
    let span = TimeWindow::months(first, last).ok()?;
    let w = store.window();
    Some(TimeWindow {
        start: span.start.max(w.start),
        end: span.end.min(w.end),
    })
}

pub fn detect(store: &EventStore, config: &DetectionConfig) -> Result<Detection> {
    detect_with(store, config, &Sequential)
}

pub fn detect_with<R: SeedRunner + ?Sized>(store: &EventStore, config: &DetectionConfig, runner: &R) -> Result<Detection> {
    config.lockstep.validate()?;
    let low_activity = filter_by_repo_threshold(&detect_low_activity(store), config.min_fake);
    let graph = StarGraph::from_store(store);
    let lockstep = match effective_window(store) {
        None => LockstepOutcome::default(),
        Some(w) if config.chunked => run_chunked_detection_with(&graph, w, &config.lockstep, runner),
        Some(_) => run_lockstep_detection_with(&graph, &config.lockstep, &SeedSelector::Bursty, runner),
    };
    let ledger = merge_detections(&low_activity, &lockstep.fake_stars);
    let campaigns = detect_campaigns(&ledger, store, &config.campaigns);
    Ok(Detection {
        low_activity,
        lockstep,
        ledger,
        campaigns,
    })
}
