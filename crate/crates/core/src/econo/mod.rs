//! Repository-month panel and the two-way fixed-effects autoregression of
//! real-star growth on lagged real and fake stars.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::campaigns::{CampaignReport, FakeStarLedger};
use crate::error::{Error, Result};
use crate::events::{repo_owner, EventStore, RELEASE_EVENT_KIND};
use crate::time::MonthKey;

mod sim;

pub use sim::{simulate_panel, ArProcess};

/// One repository in one calendar month.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelRow {
    pub repo: String,
    pub month: MonthKey,
    pub fake: u64,
    pub all_fake: u64,
    pub real: u64,
    pub all_real: u64,
    /// Months since the repository's first observed event.
    pub age: u32,
    pub release: bool,
    pub activity: u64,
}

/// Builds monthly rows for every campaign repository. Rows run from the
/// repository's first observed month to the last month of the store, clipped
/// to the observation window.
pub fn build_panel(store: &EventStore, ledger: &FakeStarLedger, campaigns: &[CampaignReport]) -> Vec<PanelRow> {
    let Some(last_event) = store.events().last() else {
        return Vec::new();
    };
    let last_month = last_event.timestamp.month();
    let fake_accounts: BTreeSet<&str> = ledger.actors();
    let mut rows = Vec::new();
    for report in campaigns {
        let repo = report.repo.as_str();
        let Some(first) = store.repo_events(repo).next() else {
            continue;
        };
        let created = first.timestamp.month();
        let owner = repo_owner(repo);

        let mut fake: BTreeMap<MonthKey, u64> = BTreeMap::new();
        for e in ledger.repo_entries(repo) {
            *fake.entry(e.timestamp.month()).or_insert(0) += 1;
        }
        let totals = store.monthly_star_counts(repo);
        let mut activity: BTreeMap<MonthKey, u64> = BTreeMap::new();
        let mut first_release: Option<MonthKey> = None;
        for e in store.repo_events(repo) {
            let m = e.timestamp.month();
            if e.kind == RELEASE_EVENT_KIND && first_release.is_none() {
                first_release = Some(m);
            }
            if e.actor != owner && !fake_accounts.contains(e.actor.as_str()) {
                *activity.entry(m).or_insert(0) += 1;
            }
        }

        let (mut all_fake, mut all_real) = (0u64, 0u64);
        let mut m = created.max(store.window().start.month());
        while m <= last_month {
            let f = fake.get(&m).copied().unwrap_or(0);
            let r = totals.get(&m).copied().unwrap_or(0).saturating_sub(f);
            all_fake += f;
            all_real += r;
            rows.push(PanelRow {
                repo: String::from(repo),
                month: m,
                fake: f,
                all_fake,
                real: r,
                all_real,
                age: m.months_since(created) as u32,
                release: first_release.is_some_and(|fr| fr <= m),
                activity: activity.get(&m).copied().unwrap_or(0),
            });
            m = m.succ();
        }
    }
    rows
}

/// Numeric panel observation fed to the estimator: counts before any
/// transform, indexed by an integer period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelObs {
    pub unit: u32,
    pub period: i64,
    pub real: f64,
    pub all_real: f64,
    pub fake: f64,
    pub all_fake: f64,
}

/// Converts rows into estimator observations; units are numbered in order of
/// first appearance of each repository name.
pub fn panel_observations(rows: &[PanelRow]) -> Vec<PanelObs> {
    let epoch = MonthKey { year: 1970, month: 1 };
    let mut units: BTreeMap<&str, u32> = BTreeMap::new();
    rows.iter()
        .map(|r| {
            let next = units.len() as u32;
            let unit = *units.entry(r.repo.as_str()).or_insert(next);
            PanelObs {
                unit,
                period: r.month.months_since(epoch),
                real: r.real as f64,
                all_real: r.all_real as f64,
                fake: r.fake as f64,
                all_fake: r.all_fake as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSpec {
    /// Autoregressive order, 1 to 6.
    pub k: usize,
    /// Apply `ln(1 + x)` to every count before estimation.
    pub log_transform: bool,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        RegressionSpec { k: 2, log_transform: true }
    }
}

pub const MAX_ORDER: usize = 6;
/// Convergence tolerance of the alternating demeaning.
pub const DEMEAN_TOL: f64 = 1e-10;
const DEMEAN_MAX_SWEEPS: usize = 10_000;
/// A column whose squared norm falls below this share of its norm before
/// projection is treated as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

impl RegressionSpec {
    pub fn new(k: usize) -> Self {
        RegressionSpec { k, ..RegressionSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_ORDER {
            return Err(Error::InvalidParams(format!("autoregressive order {} outside 1..={MAX_ORDER}", self.k)));
        }
        Ok(())
    }

    /// Regressor names in model order.
    pub fn regressor_names(&self) -> Vec<String> {
        let k = self.k;
        let mut names: Vec<String> = (1..=k).map(|j| format!("real_{{i,t-{j}}}")).collect();
        names.push(format!("all_real_{{i,t-{}}}", k + 1));
        names.extend((1..=k).map(|j| format!("fake_{{i,t-{j}}}")));
        names.push(format!("all_fake_{{i,t-{}}}", k + 1));
        names
    }
}

/// Untransformed-by-demeaning design: one entry per usable observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub y: Vec<f64>,
    /// Column-major regressors, `columns[j][row]`.
    pub columns: Vec<Vec<f64>>,
    /// Dense 0-based unit index per row.
    pub units: Vec<usize>,
    /// Dense 0-based period index per row.
    pub periods: Vec<usize>,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_units(&self) -> usize {
        self.units.iter().max().map_or(0, |m| m + 1)
    }

    pub fn n_periods(&self) -> usize {
        self.periods.iter().max().map_or(0, |m| m + 1)
    }
}

/// Lays out the lagged regressors. Observations lacking any of the `k + 1`
/// preceding periods of the same unit are dropped.
pub fn build_design(panel: &[PanelObs], spec: &RegressionSpec) -> Result<Design> {
    spec.validate()?;
    let tf = |x: f64| if spec.log_transform { libm::log1p(x) } else { x };
    let mut by_key: BTreeMap<(u32, i64), &PanelObs> = BTreeMap::new();
    for o in panel {
        by_key.insert((o.unit, o.period), o);
    }
    let k = spec.k;
    let p = 2 * k + 2;
    let mut y = Vec::new();
    let mut columns = alloc::vec![Vec::new(); p];
    let mut raw_units = Vec::new();
    let mut raw_periods = Vec::new();
    'rows: for (&(unit, period), obs) in &by_key {
        let mut lag = Vec::with_capacity(k + 1);
        for j in 1..=(k as i64 + 1) {
            match by_key.get(&(unit, period - j)) {
                Some(o) => lag.push(*o),
                None => continue 'rows,
            }
        }
        y.push(tf(obs.real));
        for j in 0..k {
            columns[j].push(tf(lag[j].real));
            columns[k + 1 + j].push(tf(lag[j].fake));
        }
        columns[k].push(tf(lag[k].all_real));
        columns[2 * k + 1].push(tf(lag[k].all_fake));
        raw_units.push(unit);
        raw_periods.push(period);
    }
    if y.is_empty() {
        return Err(Error::InsufficientData(format!("no observation has {} preceding periods", k + 1)));
    }
    let units = dense_index(&raw_units);
    let periods = dense_index(&raw_periods);
    let design = Design {
        names: spec.regressor_names(),
        y,
        columns,
        units,
        periods,
    };
    if design.n_units() < 2 {
        return Err(Error::InsufficientData("fixed effects need at least two repositories".into()));
    }
    Ok(design)
}

fn dense_index<T: Ord + Copy>(raw: &[T]) -> Vec<usize> {
    let keys: BTreeMap<T, usize> = raw
        .iter()
        .copied()
        .collect::<BTreeSet<T>>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    raw.iter().map(|v| keys[v]).collect()
}

/// Removes unit and period means by alternating projections until no mean
/// exceeds `tol` in absolute value. Returns the number of sweeps.
pub fn within_transform(values: &mut [f64], units: &[usize], periods: &[usize], tol: f64) -> usize {
    let n_u = units.iter().max().map_or(0, |m| m + 1);
    let n_t = periods.iter().max().map_or(0, |m| m + 1);
    let mut sums_u = alloc::vec![0.0; n_u];
    let mut cnt_u = alloc::vec![0usize; n_u];
    let mut sums_t = alloc::vec![0.0; n_t];
    let mut cnt_t = alloc::vec![0usize; n_t];
    for (&u, &t) in units.iter().zip(periods) {
        cnt_u[u] += 1;
        cnt_t[t] += 1;
    }
    for sweep in 1..=DEMEAN_MAX_SWEEPS {
        sums_u.iter_mut().for_each(|s| *s = 0.0);
        for (v, &u) in values.iter().zip(units) {
            sums_u[u] += v;
        }
        for (v, &u) in values.iter_mut().zip(units) {
            *v -= sums_u[u] / cnt_u[u] as f64;
        }
        sums_t.iter_mut().for_each(|s| *s = 0.0);
        for (v, &t) in values.iter().zip(periods) {
            sums_t[t] += v;
        }
        let mut worst = 0.0f64;
        for (i, &t) in sums_t.iter().enumerate() {
            if cnt_t[i] > 0 {
                worst = worst.max((t / cnt_t[i] as f64).abs());
            }
        }
        for (v, &t) in values.iter_mut().zip(periods) {
            *v -= sums_t[t] / cnt_t[t] as f64;
        }
        sums_u.iter_mut().for_each(|s| *s = 0.0);
        for (v, &u) in values.iter().zip(units) {
            sums_u[u] += v;
        }
        for (i, &s) in sums_u.iter().enumerate() {
            if cnt_u[i] > 0 {
                worst = worst.max((s / cnt_u[i] as f64).abs());
            }
        }
        if worst <= tol {
            return sweep;
        }
    }
    DEMEAN_MAX_SWEEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

impl Coefficient {
    pub fn t_value(&self) -> f64 {
        self.estimate / self.std_error
    }

    /// Two-sided p-value under the normal approximation.
    pub fn p_value(&self) -> f64 {
        libm::erfc(self.t_value().abs() / core::f64::consts::SQRT_2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub k: usize,
    pub coefficients: Vec<Coefficient>,
    /// Regressors removed because they were constant or collinear after the
    /// within transformation.
    pub dropped: Vec<String>,
    pub n_observations: usize,
    pub n_units: usize,
    pub n_periods: usize,
    pub df_residual: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }
}

fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>22}", "", "Dependent: real_{i,t}")?;
        writeln!(f, "{:<24} {:>22}", "", "Fixed Effect")?;
        writeln!(f, "{}", "-".repeat(47))?;
        for c in &self.coefficients {
            let est = format!("{:.3}{}", c.estimate, stars(c.p_value()));
            writeln!(f, "{:<24} {:>12} ({:.3})", c.name, est, c.std_error)?;
        }
        for d in &self.dropped {
            writeln!(f, "{:<24} {:>22}", d, "dropped")?;
        }
        writeln!(f, "{}", "-".repeat(47))?;
        writeln!(f, "{:<24} {:>22}", "Observations", self.n_observations)?;
        writeln!(f, "{:<24} {:>22.3}", "R^2", self.r_squared)?;
        writeln!(f, "{:<24} {:>22.3}", "Adjusted R^2", self.adj_r_squared)?;
        writeln!(f, "Note: *p<0.1; **p<0.05; ***p<0.01")
    }
}

/// Within-transforms the design and fits OLS on the retained columns.
pub fn fit_design(design: &Design, k: usize) -> Result<FitResult> {
    let n = design.n_rows();
    let mut y = design.y.clone();
    within_transform(&mut y, &design.units, &design.periods, DEMEAN_TOL);
    let demeaned: Vec<Vec<f64>> = design
        .columns
        .iter()
        .map(|c| {
            let mut c = c.clone();
            within_transform(&mut c, &design.units, &design.periods, DEMEAN_TOL);
            c
        })
        .collect();

    // Gram-Schmidt screen for columns already spanned by earlier ones.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (j, col) in demeaned.iter().enumerate() {
        let norm0: f64 = col.iter().map(|v| v * v).sum();
        let mut r = col.clone();
        for q in &basis {
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm: f64 = r.iter().map(|v| v * v).sum();
        if norm0 <= f64::MIN_POSITIVE || norm <= COLLINEAR_TOL * norm0 {
            dropped.push(design.names[j].clone());
            continue;
        }
        let inv = 1.0 / libm::sqrt(norm);
        r.iter_mut().for_each(|v| *v *= inv);
        basis.push(r);
        kept.push(j);
    }

    let p = kept.len();
    let absorbed = design.n_units() + design.n_periods() - 1;
    let df = n as i64 - p as i64 - absorbed as i64;
    if df <= 0 {
        return Err(Error::InsufficientData(format!("{n} observations leave no residual degrees of freedom")));
    }
    let df = df as usize;

    let x = DMatrix::from_fn(n, p, |i, c| demeaned[kept[c]][i]);
    let yv = DVector::from_column_slice(&y);
    let (beta, xtx_inv) = if p > 0 {
        let xtx = x.transpose() * &x;
        let chol = xtx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InsufficientData("normal equations are singular".into()))?;
        (chol.solve(&(x.transpose() * &yv)), chol.inverse())
    } else {
        (DVector::zeros(0), DMatrix::zeros(0, 0))
    };
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let tss = yv.norm_squared();
    let sigma2 = rss / df as f64;
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df as f64;

    let coefficients = kept
        .iter()
        .enumerate()
        .map(|(c, &j)| Coefficient {
            name: design.names[j].clone(),
            estimate: beta[c],
            std_error: libm::sqrt(sigma2 * xtx_inv[(c, c)]),
        })
        .collect();
    Ok(FitResult {
        k,
        coefficients,
        dropped,
        n_observations: n,
        n_units: design.n_units(),
        n_periods: design.n_periods(),
        df_residual: df,
        r_squared,
        adj_r_squared,
        residuals: resid.iter().copied().collect(),
    })
}

/// Two-way fixed-effects AR(k) of monthly real stars.
pub fn fit_fixed_effects_ar(panel: &[PanelObs], spec: &RegressionSpec) -> Result<FitResult> {
    let design = build_design(panel, spec)?;
    fit_design(&design, spec.k)
}

#[cfg(test)]
mod tests;
