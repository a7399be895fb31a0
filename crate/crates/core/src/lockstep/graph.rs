use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::events::EventStore;
use crate::time::{Timestamp, TimeWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AccountId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RepoId(pub u32);

/// Bipartite account → repository star graph with timed edges.
///
/// Ids are dense and assigned in lexicographic order of the names, so two
/// graphs over the same edge set are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarGraph {
    accounts: Vec<String>,
    repos: Vec<String>,
    account_index: BTreeMap<String, AccountId>,
    repo_index: BTreeMap<String, RepoId>,
    // per repo, sorted by (time, account)
    repo_stars: Vec<Vec<(Timestamp, AccountId)>>,
    // per account, sorted by repo
    account_stars: Vec<Vec<(RepoId, Timestamp)>>,
    edge_count: usize,
}

impl StarGraph {
    /// Builds the graph from `(account, repo, time)` triples. Repeated pairs
    /// keep their earliest time.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str, Timestamp)>) -> Self {
        let mut first: BTreeMap<(&'a str, &'a str), Timestamp> = BTreeMap::new();
        for (a, r, t) in edges {
            first
                .entry((a, r))
                .and_modify(|old| {
                    if t < *old {
                        *old = t
                    }
                })
                .or_insert(t);
        }
        let account_names: BTreeSet<&str> = first.keys().map(|(a, _)| *a).collect();
        let repo_names: BTreeSet<&str> = first.keys().map(|(_, r)| *r).collect();
        let accounts: Vec<String> = account_names.iter().map(|s| String::from(*s)).collect();
        let repos: Vec<String> = repo_names.iter().map(|s| String::from(*s)).collect();
        let account_index: BTreeMap<String, AccountId> = accounts
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), AccountId(i as u32)))
            .collect();
        let repo_index: BTreeMap<String, RepoId> = repos
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), RepoId(i as u32)))
            .collect();

        let mut repo_stars = alloc::vec![Vec::new(); repos.len()];
        let mut account_stars = alloc::vec![Vec::new(); accounts.len()];
        for (&(a, r), &t) in &first {
            let u = account_index[a];
            let p = repo_index[r];
            repo_stars[p.0 as usize].push((t, u));
            account_stars[u.0 as usize].push((p, t));
        }
        for v in &mut repo_stars {
            v.sort_unstable();
        }
        for v in &mut account_stars {
            v.sort_unstable();
        }
        StarGraph {
            accounts,
            repos,
            account_index,
            repo_index,
            repo_stars,
            account_stars,
            edge_count: first.len(),
        }
    }

    pub fn from_store(store: &EventStore) -> Self {
        StarGraph::from_edges(store.stars().iter().map(|s| (s.actor.as_str(), s.repo.as_str(), s.timestamp)))
    }

    /// The subgraph of edges whose time lies in `window`.
    pub fn restrict(&self, window: TimeWindow) -> Self {
        StarGraph::from_edges(self.edges().filter(|&(_, _, t)| window.contains(t)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, Timestamp)> + '_ {
        self.repo_stars.iter().enumerate().flat_map(move |(r, stars)| {
            stars
                .iter()
                .map(move |&(t, u)| (self.accounts[u.0 as usize].as_str(), self.repos[r].as_str(), t))
        })
    }

    pub fn num_accounts(&self) -> usize {
        self.accounts.len()
    }

    pub fn num_repos(&self) -> usize {
        self.repos.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_count
    }

    pub fn account_ids(&self) -> impl Iterator<Item = AccountId> {
        (0..self.accounts.len() as u32).map(AccountId)
    }

    pub fn repo_ids(&self) -> impl Iterator<Item = RepoId> {
        (0..self.repos.len() as u32).map(RepoId)
    }

    pub fn account(&self, name: &str) -> Option<AccountId> {
        self.account_index.get(name).copied()
    }

    pub fn repo(&self, name: &str) -> Option<RepoId> {
        self.repo_index.get(name).copied()
    }

    pub fn account_name(&self, id: AccountId) -> &str {
        &self.accounts[id.0 as usize]
    }

    pub fn repo_name(&self, id: RepoId) -> &str {
        &self.repos[id.0 as usize]
    }

    /// Stars on a repository, ascending by time.
    pub fn stars_of_repo(&self, repo: RepoId) -> &[(Timestamp, AccountId)] {
        &self.repo_stars[repo.0 as usize]
    }

    /// Stars given by an account, ascending by repository id.
    pub fn stars_of_account(&self, account: AccountId) -> &[(RepoId, Timestamp)] {
        &self.account_stars[account.0 as usize]
    }

    pub fn edge_time(&self, account: AccountId, repo: RepoId) -> Option<Timestamp> {
        let stars = self.stars_of_account(account);
        stars
            .binary_search_by_key(&repo, |&(r, _)| r)
            .ok()
            .map(|i| stars[i].1)
    }

    /// Stars on `repo` with time in the closed interval `[from, to]`.
    pub fn stars_between(&self, repo: RepoId, from: Timestamp, to: Timestamp) -> &[(Timestamp, AccountId)] {
        let stars = self.stars_of_repo(repo);
        let lo = stars.partition_point(|&(t, _)| t < from);
        let hi = stars.partition_point(|&(t, _)| t <= to);
        &stars[lo..hi.max(lo)]
    }
}
