//! Existence checks against the GitHub REST API.

use std::thread::sleep;
use std::time::Duration;

use fakestar_core::enrich::{normalize_id, Existence, ExistenceProvider};

/// Environment variable holding the API token.
pub const TOKEN_ENV: &str = "GITHUB_TOKEN";

pub struct GithubProvider {
    agent: ureq::Agent,
    token: Option<String>,
    base_url: String,
    max_retries: u32,
    initial_backoff: Duration,
}

impl GithubProvider {
    pub fn from_env() -> Self {
        let config = ureq::Agent::config_builder().http_status_as_error(false).build();
        GithubProvider {
            agent: config.into(),
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            base_url: "https://api.github.com".into(),
            max_retries: 6,
            initial_backoff: Duration::from_secs(2),
        }
    }

    fn url(&self, id: &str) -> String {
        // "owner/name" is a repository, a bare login is an account
        if id.contains('/') {
            format!("{}/repos/{id}", self.base_url)
        } else {
            format!("{}/users/{id}", self.base_url)
        }
    }
}

impl ExistenceProvider for GithubProvider {
    fn lookup(&mut self, entity: &str) -> Existence {
        let url = self.url(&normalize_id(entity));
        let mut backoff = self.initial_backoff;
        for _ in 0..=self.max_retries {
            let mut req = self
                .agent
                .get(&url)
                .header("Accept", "application/vnd.github+json")
                .header("User-Agent", "fakestar");
            if let Some(t) = &self.token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            match req.call() {
                Ok(resp) => match resp.status().as_u16() {
                    200 => return Existence::Exists,
                    404 | 410 | 451 => return Existence::Deleted,
                    403 | 429 | 500..=599 => {
                        log::warn!("{url}: HTTP {}, retrying in {backoff:?}", resp.status());
                    }
                    other => {
                        log::warn!("{url}: unexpected HTTP {other}");
                        return Existence::Unknown;
                    }
                },
                Err(e) => log::warn!("{url}: {e}, retrying in {backoff:?}"),
            }
            sleep(backoff);
            backoff *= 2;
        }
        Existence::Unknown
    }
}
