//! Alternating greedy search for a lockstep group around one seed repository.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::graph::{AccountId, RepoId, StarGraph};
use super::window::{best_window_by, is_lockstep_group};
use super::{LockstepGroup, LockstepParams, RepoCover};
use crate::time::Timestamp;

/// Raw search result in graph ids, already accepted by the predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedGroup {
    pub users: BTreeSet<AccountId>,
    pub repos: BTreeSet<RepoId>,
    pub witness: Vec<RepoCover>,
    pub iterations: usize,
}

/// Grows a group from `seed`:
///
/// 1. users := cover of the seed's best window over all accounts;
/// 2. repos := repositories whose best window inside `users` reaches `rho*n`;
///    users := accounts starring at least `ceil(phi * |repos|)` of those
///    repositories inside their windows;
/// 3. repeat 2 until stable or `max_iters`.
///
/// The result is returned only if the lockstep predicate accepts it.
pub fn search_from_seed(graph: &StarGraph, seed: RepoId, params: &LockstepParams) -> Option<SeedGroup> {
    let need = params.min_cover();
    let delta = params.delta_seconds();

    let start = best_window_by(graph, seed, |_| true, delta);
    if start.covered.len() < need {
        return None;
    }
    let mut member = alloc::vec![false; graph.num_accounts()];
    let mut users: BTreeSet<AccountId> = start.covered.into_iter().collect();
    let mut repos: BTreeSet<RepoId> = BTreeSet::new();
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        for &u in &users {
            member[u.0 as usize] = true;
        }

        let candidate_repos: BTreeSet<RepoId> = users
            .iter()
            .flat_map(|&u| graph.stars_of_account(u).iter().map(|&(r, _)| r))
            .collect();
        let mut windows: Vec<(RepoId, Timestamp)> = Vec::new();
        for r in candidate_repos {
            let wc = best_window_by(graph, r, |u| member[u.0 as usize], delta);
            if wc.covered.len() >= need {
                windows.push((r, wc.start.expect("non-empty cover")));
            }
        }
        for &u in &users {
            member[u.0 as usize] = false;
        }
        if windows.is_empty() {
            return None;
        }

        let threshold = (libm::ceil(params.phi * windows.len() as f64 - 1e-9) as usize).max(1);
        let mut hits: BTreeMap<AccountId, usize> = BTreeMap::new();
        for &(r, t) in &windows {
            for &(_, u) in graph.stars_between(r, t, t.plus_seconds(delta)) {
                *hits.entry(u).or_insert(0) += 1;
            }
        }
        let next_users: BTreeSet<AccountId> = hits
            .into_iter()
            .filter(|&(_, c)| c >= threshold)
            .map(|(u, _)| u)
            .collect();
        let next_repos: BTreeSet<RepoId> = windows.iter().map(|&(r, _)| r).collect();

        let stable = next_users == users && next_repos == repos;
        users = next_users;
        repos = next_repos;
        if stable {
            break;
        }
    }

    let witness = is_lockstep_group(graph, &users, &repos, params)?;
    Some(SeedGroup {
        users,
        repos,
        witness,
        iterations,
    })
}

pub fn copycatch_from_seed(graph: &StarGraph, seed: RepoId, params: &LockstepParams) -> Option<LockstepGroup> {
    search_from_seed(graph, seed, params).map(|g| LockstepGroup::from_ids(graph, &g.users, &g.witness))
}
