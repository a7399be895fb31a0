//! Window calibration and the lockstep predicate.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::graph::{AccountId, RepoId, StarGraph};
use super::{LockstepParams, RepoCover};
use crate::time::Timestamp;

/// Best `[t, t + delta]` window on one repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCover {
    /// `None` when no candidate starred the repository.
    pub start: Option<Timestamp>,
    pub covered: Vec<AccountId>,
}

/// The window anchored at a candidate star that covers the most candidates;
/// ties go to the earliest anchor.
pub fn best_window(graph: &StarGraph, repo: RepoId, candidates: &BTreeSet<AccountId>, delta_seconds: i64) -> WindowCover {
    best_window_by(graph, repo, |u| candidates.contains(&u), delta_seconds)
}

pub(crate) fn best_window_by(
    graph: &StarGraph,
    repo: RepoId,
    is_candidate: impl Fn(AccountId) -> bool,
    delta_seconds: i64,
) -> WindowCover {
    let stars: Vec<(Timestamp, AccountId)> = graph
        .stars_of_repo(repo)
        .iter()
        .copied()
        .filter(|&(_, u)| is_candidate(u))
        .collect();
    if stars.is_empty() {
        return WindowCover { start: None, covered: Vec::new() };
    }
    let mut best = (0usize, 0usize);
    let mut hi = 0usize;
    for lo in 0..stars.len() {
        let limit = stars[lo].0.plus_seconds(delta_seconds);
        if hi < lo {
            hi = lo;
        }
        while hi < stars.len() && stars[hi].0 <= limit {
            hi += 1;
        }
        if hi - lo > best.1 - best.0 {
            best = (lo, hi);
        }
    }
    let mut covered: Vec<AccountId> = stars[best.0..best.1].iter().map(|&(_, u)| u).collect();
    covered.sort_unstable();
    WindowCover {
        start: Some(stars[best.0].0),
        covered,
    }
}

/// Decides the lockstep predicate for `(users, repos)`. On success returns the
/// per-repository witness: the earliest maximizing window and its cover.
pub fn is_lockstep_group(
    graph: &StarGraph,
    users: &BTreeSet<AccountId>,
    repos: &BTreeSet<RepoId>,
    params: &LockstepParams,
) -> Option<Vec<RepoCover>> {
    if users.len() < params.min_users || repos.len() < params.min_repos {
        return None;
    }
    let need = params.min_cover();
    let delta = params.delta_seconds();
    let mut witness = Vec::with_capacity(repos.len());
    for &r in repos {
        let wc = best_window(graph, r, users, delta);
        if wc.covered.len() < need {
            return None;
        }
        witness.push(RepoCover {
            repo: r,
            window_start: wc.start.expect("non-empty cover has a start"),
            covering: wc.covered,
        });
    }
    Some(witness)
}
