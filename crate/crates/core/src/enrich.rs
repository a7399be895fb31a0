//! External lookups: entity existence for the deletion-ratio check, and joins
//! against trending and package-registry tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::time::MonthKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Existence {
    Exists,
    Deleted,
    Unknown,
}

impl Existence {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "exists" => Some(Existence::Exists),
            "deleted" => Some(Existence::Deleted),
            "unknown" => Some(Existence::Unknown),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Existence::Exists => "exists",
            Existence::Deleted => "deleted",
            Existence::Unknown => "unknown",
        }
    }
}

/// Answers whether a repository or account is still reachable. Failures are
/// reported as `Unknown`.
pub trait ExistenceProvider {
    fn lookup(&mut self, entity: &str) -> Existence;
}

/// Lowercases and strips URL decoration so `https://github.com/Owner/Name.git`
/// and `owner/name` compare equal.
pub fn normalize_id(raw: &str) -> String {
    let mut s = raw.trim();
    for prefix in ["https://", "http://", "git+https://", "git://"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest;
        }
    }
    for prefix in ["www.github.com/", "github.com/"] {
        if s.len() >= prefix.len() && s[..prefix.len()].eq_ignore_ascii_case(prefix) {
            s = &s[prefix.len()..];
        }
    }
    let s = s.trim_end_matches('/');
    let s = s.strip_suffix(".git").unwrap_or(s);
    s.to_ascii_lowercase()
}

/// Provider backed by a fixed snapshot; ids absent from it are `Unknown`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureProvider {
    statuses: BTreeMap<String, Existence>,
}

impl FixtureProvider {
    pub fn new() -> Self {
        FixtureProvider::default()
    }

    pub fn insert(&mut self, entity: &str, status: Existence) {
        self.statuses.insert(normalize_id(entity), status);
    }

    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statuses.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<(S, Existence)> for FixtureProvider {
    fn from_iter<I: IntoIterator<Item = (S, Existence)>>(iter: I) -> Self {
        let mut p = FixtureProvider::new();
        for (id, st) in iter {
            p.insert(id.as_ref(), st);
        }
        p
    }
}

impl ExistenceProvider for FixtureProvider {
    fn lookup(&mut self, entity: &str) -> Existence {
        self.statuses.get(&normalize_id(entity)).copied().unwrap_or(Existence::Unknown)
    }
}

/// Caches answers of an inner provider for the lifetime of a run.
#[derive(Debug)]
pub struct Memoized<P> {
    inner: P,
    cache: BTreeMap<String, Existence>,
    misses: usize,
}

impl<P: ExistenceProvider> Memoized<P> {
    pub fn new(inner: P) -> Self {
        Memoized { inner, cache: BTreeMap::new(), misses: 0 }
    }

    /// Lookups forwarded to the inner provider.
    pub fn misses(&self) -> usize {
        self.misses
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: ExistenceProvider> ExistenceProvider for Memoized<P> {
    fn lookup(&mut self, entity: &str) -> Existence {
        let key = normalize_id(entity);
        if let Some(&hit) = self.cache.get(&key) {
            return hit;
        }
        self.misses += 1;
        let answer = self.inner.lookup(entity);
        self.cache.insert(key, answer);
        answer
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistenceCounts {
    pub exists: usize,
    pub deleted: usize,
    pub unknown: usize,
}

impl ExistenceCounts {
    pub fn resolved(&self) -> usize {
        self.exists + self.deleted
    }

    /// Percentage deleted among resolved entities.
    pub fn pct_deleted(&self) -> Option<f64> {
        let resolved = self.resolved();
        (resolved > 0).then(|| 100.0 * self.deleted as f64 / resolved as f64)
    }

    fn add(&mut self, e: Existence) {
        match e {
            Existence::Exists => self.exists += 1,
            Existence::Deleted => self.deleted += 1,
            Existence::Unknown => self.unknown += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionRatio {
    pub detected: ExistenceCounts,
    pub baseline: ExistenceCounts,
}

impl DeletionRatio {
    pub fn pct_deleted_detected(&self) -> Option<f64> {
        self.detected.pct_deleted()
    }

    pub fn pct_deleted_baseline(&self) -> Option<f64> {
        self.baseline.pct_deleted()
    }
}

pub fn count_existence<'a, P: ExistenceProvider + ?Sized>(
    entities: impl IntoIterator<Item = &'a str>,
    provider: &mut P,
) -> ExistenceCounts {
    let mut counts = ExistenceCounts::default();
    for e in entities {
        counts.add(provider.lookup(e));
    }
    counts
}

/// Deleted shares of detected entities and of a baseline sample.
pub fn deletion_ratio<'a, 'b, P: ExistenceProvider + ?Sized>(
    detected: impl IntoIterator<Item = &'a str>,
    provider: &mut P,
    baseline: impl IntoIterator<Item = &'b str>,
) -> DeletionRatio {
    DeletionRatio {
        detected: count_existence(detected, provider),
        baseline: count_existence(baseline, provider),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrendingRow {
    pub repo: String,
    pub month: MonthKey,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PackageRow {
    pub package: String,
    pub registry: String,
    pub repo: String,
}

/// External rows keyed by normalized repository id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossRefTable {
    pub trending: Vec<TrendingRow>,
    pub packages: Vec<PackageRow>,
}

impl CrossRefTable {
    pub fn new(trending: impl IntoIterator<Item = TrendingRow>, packages: impl IntoIterator<Item = PackageRow>) -> Self {
        CrossRefTable {
            trending: trending
                .into_iter()
                .map(|r| TrendingRow { repo: normalize_id(&r.repo), ..r })
                .collect(),
            packages: packages
                .into_iter()
                .map(|r| PackageRow { repo: normalize_id(&r.repo), ..r })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossRefResult {
    pub n_campaigns: usize,
    /// Campaign repositories that appear in the trending table.
    pub trending_repos: BTreeSet<String>,
    /// Distinct matched repositories trending in each month.
    pub trending_by_month: BTreeMap<MonthKey, usize>,
    /// Campaign repositories referenced by at least one package.
    pub package_repos: BTreeSet<String>,
    /// Matched packages per registry.
    pub packages_by_registry: BTreeMap<String, usize>,
}

impl CrossRefResult {
    pub fn trending_pct(&self) -> Option<f64> {
        (self.n_campaigns > 0).then(|| 100.0 * self.trending_repos.len() as f64 / self.n_campaigns as f64)
    }

    pub fn matched_packages(&self) -> usize {
        self.packages_by_registry.values().sum()
    }
}

/// Inner join of campaign repositories with the table.
pub fn cross_reference<'a>(campaigns: impl IntoIterator<Item = &'a str>, table: &CrossRefTable) -> CrossRefResult {
    let ids: BTreeSet<String> = campaigns.into_iter().map(normalize_id).collect();
    let mut out = CrossRefResult { n_campaigns: ids.len(), ..CrossRefResult::default() };
    let mut per_month: BTreeMap<MonthKey, BTreeSet<&str>> = BTreeMap::new();
    for row in &table.trending {
        let key = normalize_id(&row.repo);
        if let Some(id) = ids.get(&key) {
            per_month.entry(row.month).or_default().insert(id.as_str());
            out.trending_repos.insert(key);
        }
    }
    out.trending_by_month = per_month.into_iter().map(|(m, s)| (m, s.len())).collect();
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    for row in &table.packages {
        let key = normalize_id(&row.repo);
        if ids.contains(&key) {
            if seen.insert((row.registry.as_str(), row.package.as_str())) {
                *out.packages_by_registry.entry(row.registry.clone()).or_insert(0) += 1;
            }
            out.package_repos.insert(key);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn fixture(prefix: &str, n: usize, deleted: usize) -> (Vec<String>, FixtureProvider) {
        let ids: Vec<String> = (0..n).map(|i| format!("{prefix}{i}/r")).collect();
        let p = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), if i < deleted { Existence::Deleted } else { Existence::Exists }))
            .collect();
        (ids, p)
    }

    #[test]
    fn repository_deletion_rates() {
        let (det, mut p) = fixture("d", 10_000, 9042);
        let (base, p2) = fixture("b", 10_000, 503);
        p.statuses.extend(p2.statuses);
        let r = deletion_ratio(det.iter().map(String::as_str), &mut p, base.iter().map(String::as_str));
        assert_eq!(r.pct_deleted_detected(), Some(90.42));
        assert_eq!(r.pct_deleted_baseline(), Some(5.03));
    }

    #[test]
    fn all_unknown() {
        let mut p = FixtureProvider::new();
        let r = deletion_ratio(["a/b", "c/d"], &mut p, ["e/f"]);
        assert_eq!(r.pct_deleted_detected(), None);
        assert_eq!(r.pct_deleted_baseline(), None);
        assert_eq!((r.detected.unknown, r.baseline.unknown), (2, 1));
    }

    #[test]
    fn unknown_excluded_from_denominator() {
        let mut p: FixtureProvider = [("a/b", Existence::Deleted), ("c/d", Existence::Exists)].into_iter().collect();
        let r = deletion_ratio(["a/b", "c/d", "x/y"], &mut p, []);
        assert_eq!(r.detected, ExistenceCounts { exists: 1, deleted: 1, unknown: 1 });
        assert_eq!(r.pct_deleted_detected(), Some(50.0));
    }

    #[test]
    fn memoization_forwards_each_id_once() {
        let p: FixtureProvider = [("Owner/Name", Existence::Deleted)].into_iter().collect();
        let mut m = Memoized::new(p);
        for id in ["owner/name", "OWNER/name", "x/y", "x/y"] {
            m.lookup(id);
        }
        assert_eq!(m.misses(), 2);
        assert_eq!(m.lookup("owner/NAME"), Existence::Deleted);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_id("  Owner/Name "), "owner/name");
        assert_eq!(normalize_id("https://github.com/Owner/Name.git"), "owner/name");
        assert_eq!(normalize_id("git+https://github.com/a/b/"), "a/b");
    }

    #[test]
    fn join_counts() {
        let m1 = MonthKey::new(2024, 3).unwrap();
        let m2 = MonthKey::new(2024, 4).unwrap();
        let table = CrossRefTable::new(
            vec![
                TrendingRow { repo: "Owner/Name".into(), month: m1 },
                TrendingRow { repo: "owner/name".into(), month: m2 },
                TrendingRow { repo: "else/where".into(), month: m1 },
            ],
            vec![
                PackageRow { package: "p1".into(), registry: "npm".into(), repo: "https://github.com/owner/name".into() },
                PackageRow { package: "p2".into(), registry: "pypi".into(), repo: "owner/name".into() },
                PackageRow { package: "p3".into(), registry: "npm".into(), repo: "a/b".into() },
            ],
        );
        let r = cross_reference(["owner/name", "a/b", "c/d"], &table);
        assert_eq!(r.trending_repos.len(), 1);
        assert_eq!(r.trending_by_month[&m1], 1);
        assert_eq!(r.trending_by_month[&m2], 1);
        assert_eq!(r.package_repos.len(), 2);
        assert_eq!(r.packages_by_registry["npm"], 2);
        assert_eq!(r.matched_packages(), 3);
    }

    #[test]
    fn trending_rate_fixture() {
        let campaigns: Vec<String> = (0..18_617).map(|i| format!("o{i}/r")).collect();
        let m = MonthKey::new(2023, 5).unwrap();
        let table = CrossRefTable::new((0..78).map(|i| TrendingRow { repo: format!("O{i}/R"), month: m }), []);
        let r = cross_reference(campaigns.iter().map(String::as_str), &table);
        assert_eq!(r.trending_repos.len(), 78);
        let pct = r.trending_pct().unwrap();
        assert!((pct - 0.42).abs() < 0.005, "{pct}");
    }
}
