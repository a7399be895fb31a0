//! Lockstep signature: groups of at least `n` accounts and `m` repositories
//! where every repository receives stars from at least `rho * n` group
//! accounts inside one `delta_t` window.

mod chunks;
mod copycatch;
mod graph;
mod oracle;
mod window;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use chunks::{merge_chunk_results, plan_chunks, run_chunked_detection, run_chunked_detection_with, ChunkPlan};
pub use copycatch::{copycatch_from_seed, search_from_seed, SeedGroup};
pub use graph::{AccountId, RepoId, StarGraph};
pub use oracle::{brute_force_lockstep, exhaustive_predicate, OracleGroup, ORACLE_MAX_REPOS, ORACLE_MAX_USERS};
pub use window::{best_window, is_lockstep_group, WindowCover};

use crate::error::{Error, Result};
use crate::time::{Timestamp, SECONDS_PER_DAY};

/// Merge threshold on user-set Jaccard similarity.
pub const MERGE_JACCARD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockstepParams {
    /// `n`: minimum number of accounts in a group.
    pub min_users: usize,
    /// `m`: minimum number of repositories in a group.
    pub min_repos: usize,
    /// `Δt` in days.
    pub delta_t_days: u32,
    /// `ρ`: each repository needs `ρ·n` covering accounts.
    pub rho: f64,
    /// Fraction of the group's repositories a user must star in-window to stay
    /// in the group during the search.
    pub phi: f64,
    pub max_iters: usize,
}

impl Default for LockstepParams {
    fn default() -> Self {
        LockstepParams {
            min_users: 50,
            min_repos: 10,
            delta_t_days: 30,
            rho: 0.5,
            phi: 0.5,
            max_iters: 20,
        }
    }
}

impl LockstepParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.min_users < 1 {
            return bad("n must be at least 1");
        }
        if self.min_repos < 1 {
            return bad("m must be at least 1");
        }
        if self.delta_t_days == 0 {
            return bad("delta_t must be positive");
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad("rho must lie in (0, 1]");
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return bad("phi must lie in (0, 1]");
        }
        Ok(())
    }

    /// Smallest integer cover satisfying `|U_r| >= rho * n`.
    pub fn min_cover(&self) -> usize {
        let need = libm::ceil(self.rho * self.min_users as f64 - 1e-9);
        (need as usize).max(1)
    }

    pub fn delta_seconds(&self) -> i64 {
        self.delta_t_days as i64 * SECONDS_PER_DAY
    }
}

/// Witness for one repository of a group, in graph ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoCover {
    pub repo: RepoId,
    pub window_start: Timestamp,
    pub covering: Vec<AccountId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RepoWindow {
    pub repo: String,
    pub window_start: Timestamp,
    pub covering_users: BTreeSet<String>,
}

/// A detected lockstep group with its per-repository witness windows.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LockstepGroup {
    pub users: BTreeSet<String>,
    pub repos: BTreeSet<String>,
    pub windows: Vec<RepoWindow>,
}

impl LockstepGroup {
    pub(crate) fn from_ids(graph: &StarGraph, users: &BTreeSet<AccountId>, witness: &[RepoCover]) -> Self {
        let windows: Vec<RepoWindow> = witness
            .iter()
            .map(|c| RepoWindow {
                repo: graph.repo_name(c.repo).to_string(),
                window_start: c.window_start,
                covering_users: c.covering.iter().map(|&u| graph.account_name(u).to_string()).collect(),
            })
            .collect();
        LockstepGroup {
            users: users.iter().map(|&u| graph.account_name(u).to_string()).collect(),
            repos: windows.iter().map(|w| w.repo.clone()).collect(),
            windows,
        }
    }

    /// The group's sets as ids of `graph`, or `None` when a member is absent.
    pub fn to_ids(&self, graph: &StarGraph) -> Option<(BTreeSet<AccountId>, BTreeSet<RepoId>)> {
        let users = self.users.iter().map(|u| graph.account(u)).collect::<Option<_>>()?;
        let repos = self.repos.iter().map(|r| graph.repo(r)).collect::<Option<_>>()?;
        Some((users, repos))
    }

    /// Edges `(u, r)` with `u` covering `r` inside `r`'s window.
    pub fn flagged_stars(&self, graph: &StarGraph, params: &LockstepParams) -> BTreeSet<FakeStar> {
        let mut out = BTreeSet::new();
        for w in &self.windows {
            let Some(repo) = graph.repo(&w.repo) else { continue };
            let end = w.window_start.plus_seconds(params.delta_seconds());
            for &(t, u) in graph.stars_between(repo, w.window_start, end) {
                let name = graph.account_name(u);
                if w.covering_users.contains(name) {
                    out.insert(FakeStar {
                        actor: name.to_string(),
                        repo: w.repo.clone(),
                        timestamp: t,
                    });
                }
            }
        }
        out
    }
}

/// A star attributed to a lockstep group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FakeStar {
    pub actor: String,
    pub repo: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LockstepOutcome {
    pub groups: Vec<LockstepGroup>,
    pub fake_stars: BTreeSet<FakeStar>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SeedSelector {
    /// Every repository with a `ceil(rho * n)`-star window.
    #[default]
    Bursty,
    Explicit(Vec<RepoId>),
}

impl SeedSelector {
    pub fn select(&self, graph: &StarGraph, params: &LockstepParams) -> Vec<RepoId> {
        match self {
            SeedSelector::Bursty => default_seeds(graph, params),
            SeedSelector::Explicit(seeds) => seeds.clone(),
        }
    }
}

pub fn default_seeds(graph: &StarGraph, params: &LockstepParams) -> Vec<RepoId> {
    let need = params.min_cover();
    let delta = params.delta_seconds();
    graph
        .repo_ids()
        .filter(|&r| graph.stars_of_repo(r).len() >= need)
        .filter(|&r| window::best_window_by(graph, r, |_| true, delta).covered.len() >= need)
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 1.0;
    }
    inter as f64 / union as f64
}

/// Merges groups whose user sets overlap with Jaccard >= 0.5, repeatedly,
/// preserving first-seen order. Unions users and repositories; a repository
/// present in both keeps the window with the larger cover (earlier on ties).
pub fn merge_groups(groups: impl IntoIterator<Item = LockstepGroup>) -> Vec<LockstepGroup> {
    let mut merged: Vec<LockstepGroup> = Vec::new();
    for g in groups {
        merged.push(g);
        'cascade: loop {
            for i in 0..merged.len() {
                for j in (i + 1)..merged.len() {
                    if jaccard(&merged[i].users, &merged[j].users) >= MERGE_JACCARD {
                        let other = merged.remove(j);
                        union_into(&mut merged[i], other);
                        continue 'cascade;
                    }
                }
            }
            break;
        }
    }
    merged
}

fn union_into(into: &mut LockstepGroup, other: LockstepGroup) {
    into.users.extend(other.users);
    into.repos.extend(other.repos);
    let mut windows: BTreeMap<String, RepoWindow> =
        core::mem::take(&mut into.windows).into_iter().map(|w| (w.repo.clone(), w)).collect();
    for w in other.windows {
        match windows.get(&w.repo) {
            Some(cur)
                if cur.covering_users.len() > w.covering_users.len()
                    || (cur.covering_users.len() == w.covering_users.len() && cur.window_start <= w.window_start) => {}
            _ => {
                windows.insert(w.repo.clone(), w);
            }
        }
    }
    into.windows = windows.into_values().collect();
}

/// Merges groups emitted from individual seeds, re-derives their witnesses on
/// `graph` and collects the flagged stars.
pub fn finalize_groups(
    graph: &StarGraph,
    params: &LockstepParams,
    emitted: impl IntoIterator<Item = LockstepGroup>,
) -> LockstepOutcome {
    let mut outcome = LockstepOutcome::default();
    for g in merge_groups(emitted) {
        let Some((users, repos)) = g.to_ids(graph) else { continue };
        // unions of accepted groups stay accepted, so this only refreshes the witness
        let Some(witness) = is_lockstep_group(graph, &users, &repos, params) else { continue };
        let g = LockstepGroup::from_ids(graph, &users, &witness);
        outcome.fake_stars.extend(g.flagged_stars(graph, params));
        outcome.groups.push(g);
    }
    outcome
}

/// Runs the per-seed search over a list of seeds. Implementations may work in
/// parallel but must return results in seed order.
pub trait SeedRunner {
    fn run(&self, graph: &StarGraph, seeds: &[RepoId], params: &LockstepParams) -> Vec<Option<LockstepGroup>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl SeedRunner for Sequential {
    fn run(&self, graph: &StarGraph, seeds: &[RepoId], params: &LockstepParams) -> Vec<Option<LockstepGroup>> {
        seeds.iter().map(|&s| copycatch_from_seed(graph, s, params)).collect()
    }
}

pub fn run_lockstep_detection(graph: &StarGraph, params: &LockstepParams, seeds: &SeedSelector) -> LockstepOutcome {
    run_lockstep_detection_with(graph, params, seeds, &Sequential)
}

pub fn run_lockstep_detection_with<R: SeedRunner + ?Sized>(
    graph: &StarGraph,
    params: &LockstepParams,
    seeds: &SeedSelector,
    runner: &R,
) -> LockstepOutcome {
    let emitted = runner.run(graph, &seeds.select(graph, params), params);
    finalize_groups(graph, params, emitted.into_iter().flatten())
}
