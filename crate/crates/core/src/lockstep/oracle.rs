//! Exhaustive reference search for small graphs. Exponential in the number of
//! accounts; used to check the greedy search and the predicate.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::graph::{AccountId, RepoId, StarGraph};
use super::LockstepParams;
use crate::error::{Error, Result};

pub const ORACLE_MAX_USERS: usize = 15;
pub const ORACLE_MAX_REPOS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleGroup {
    pub users: BTreeSet<AccountId>,
    pub repos: BTreeSet<RepoId>,
}

/// Largest number of `users` stars on `repo` that fit in one closed window of
/// length `delta`, found by checking every pair of stars as window ends.
fn max_cover(graph: &StarGraph, repo: RepoId, users: &BTreeSet<AccountId>, delta: i64) -> usize {
    let times: Vec<i64> = graph
        .stars_of_repo(repo)
        .iter()
        .filter(|(_, u)| users.contains(u))
        .map(|(t, _)| t.unix())
        .collect();
    let mut best = 0;
    for &lo in &times {
        for &hi in &times {
            if hi < lo || hi - lo > delta {
                continue;
            }
            let inside = times.iter().filter(|&&t| lo <= t && t <= hi).count();
            best = best.max(inside);
        }
    }
    best
}

/// The lockstep predicate evaluated without the sliding-window shortcut.
pub fn exhaustive_predicate(
    graph: &StarGraph,
    users: &BTreeSet<AccountId>,
    repos: &BTreeSet<RepoId>,
    params: &LockstepParams,
) -> bool {
    let need = params.rho * params.min_users as f64;
    users.len() >= params.min_users
        && repos.len() >= params.min_repos
        && repos
            .iter()
            .all(|&r| max_cover(graph, r, users, params.delta_seconds()) as f64 >= need - 1e-9)
}

/// All inclusion-maximal `(users, repos)` pairs accepted by the predicate.
/// For each user subset the satisfying repository set is taken whole, since
/// the per-repository condition depends only on the user set.
pub fn brute_force_lockstep(graph: &StarGraph, params: &LockstepParams) -> Result<Vec<OracleGroup>> {
    let n_users = graph.num_accounts();
    let n_repos = graph.num_repos();
    if n_users > ORACLE_MAX_USERS || n_repos > ORACLE_MAX_REPOS {
        return Err(Error::InstanceTooLarge { users: n_users, repos: n_repos });
    }
    let need = params.rho * params.min_users as f64;
    let mut candidates: Vec<OracleGroup> = Vec::new();
    for mask in 0u32..(1u32 << n_users) {
        if (mask.count_ones() as usize) < params.min_users {
            continue;
        }
        let users: BTreeSet<AccountId> = (0..n_users as u32).filter(|i| mask >> i & 1 == 1).map(AccountId).collect();
        let repos: BTreeSet<RepoId> = graph
            .repo_ids()
            .filter(|&r| max_cover(graph, r, &users, params.delta_seconds()) as f64 >= need - 1e-9)
            .collect();
        if repos.len() >= params.min_repos {
            candidates.push(OracleGroup { users, repos });
        }
    }
    candidates.sort_by(|a, b| b.users.len().cmp(&a.users.len()).then_with(|| a.cmp(b)));
    let mut maximal: Vec<OracleGroup> = Vec::new();
    for c in candidates {
        let dominated = maximal
            .iter()
            .any(|m| c.users.is_subset(&m.users) && c.repos.is_subset(&m.repos));
        if !dominated {
            maximal.push(c);
        }
    }
    maximal.sort();
    Ok(maximal)
}
