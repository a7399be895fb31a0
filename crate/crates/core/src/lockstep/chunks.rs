//! Overlapping six-month chunks so bursts near a boundary are seen whole by
//! at least one chunk.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    merge_groups, run_lockstep_detection_with, LockstepOutcome, LockstepParams, SeedRunner, SeedSelector, Sequential, StarGraph,
};
use crate::time::TimeWindow;

pub const CHUNK_MONTHS: u32 = 6;
pub const CHUNK_STEP_MONTHS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunks: Vec<TimeWindow>,
}

pub fn plan_chunks(window: TimeWindow) -> ChunkPlan {
    let mut chunks = Vec::new();
    let mut start = window.start;
    loop {
        let end = start.plus_months(CHUNK_MONTHS);
        chunks.push(TimeWindow {
            start,
            end: end.min(window.end),
        });
        if end >= window.end {
            break;
        }
        start = start.plus_months(CHUNK_STEP_MONTHS);
    }
    ChunkPlan { chunks }
}

/// Unions per-chunk results; groups go through the usual Jaccard merge.
pub fn merge_chunk_results(outcomes: impl IntoIterator<Item = LockstepOutcome>) -> LockstepOutcome {
    let mut groups = Vec::new();
    let mut fake_stars = alloc::collections::BTreeSet::new();
    for o in outcomes {
        groups.extend(o.groups);
        fake_stars.extend(o.fake_stars);
    }
    LockstepOutcome {
        groups: merge_groups(groups),
        fake_stars,
    }
}

pub fn run_chunked_detection(graph: &StarGraph, window: TimeWindow, params: &LockstepParams) -> LockstepOutcome {
    run_chunked_detection_with(graph, window, params, &Sequential)
}

pub fn run_chunked_detection_with<R: SeedRunner + ?Sized>(
    graph: &StarGraph,
    window: TimeWindow,
    params: &LockstepParams,
    runner: &R,
) -> LockstepOutcome {
    let per_chunk: Vec<LockstepOutcome> = plan_chunks(window)
        .chunks
        .into_iter()
        .map(|chunk| run_lockstep_detection_with(&graph.restrict(chunk), params, &SeedSelector::Bursty, runner))
        .collect();
    merge_chunk_results(per_chunk)
}
