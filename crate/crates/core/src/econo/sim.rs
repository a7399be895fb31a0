//! Panels drawn from a known autoregressive process in log space, for
//! checking that the estimator recovers its coefficients.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::PanelObs;
use crate::error::{Error, Result};

/// `ln(1 + real_t) = a_i + g_t + Σ b_j ln(1 + real_{t-j}) + c ln(1 + all_real_{t-k-1})
///  + Σ d_j ln(1 + fake_{t-j}) + e ln(1 + all_fake_{t-k-1}) + noise`, floored at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArProcess {
    pub n_units: usize,
    pub n_periods: usize,
    /// Periods simulated and discarded before the returned panel starts.
    pub burn_in: usize,
    pub real_lags: Vec<f64>,
    pub all_real: f64,
    pub fake_lags: Vec<f64>,
    pub all_fake: f64,
    pub noise_sd: f64,
    pub unit_effect_mean: f64,
    pub unit_effect_sd: f64,
    pub period_effect_sd: f64,
    /// Chance that a unit buys fake stars in a given period.
    pub fake_prob: f64,
    /// Size range of a fake-star purchase, half-open.
    pub fake_min: u64,
    pub fake_max: u64,
    pub seed: u64,
}

impl Default for ArProcess {
    fn default() -> Self {
        ArProcess::fixed_effects_reference()
    }
}

impl ArProcess {
    /// The AR(2) fixed-effects estimates reported for real-star growth.
    pub fn fixed_effects_reference() -> Self {
        ArProcess {
            n_units: 500,
            n_periods: 24,
            burn_in: 0,
            real_lags: alloc::vec![0.364, 0.148],
            all_real: 0.097,
            fake_lags: alloc::vec![0.074, 0.029],
            all_fake: -0.045,
            noise_sd: 0.02,
            unit_effect_mean: 2.0,
            unit_effect_sd: 0.5,
            period_effect_sd: 0.2,
            fake_prob: 0.25,
            fake_min: 50,
            fake_max: 400,
            seed: 0,
        }
    }

    /// A pure AR(1) in log real stars.
    pub fn pure_ar1(beta: f64) -> Self {
        ArProcess {
            real_lags: alloc::vec![beta],
            all_real: 0.0,
            fake_lags: alloc::vec![0.0],
            all_fake: 0.0,
            fake_prob: 0.0,
            ..ArProcess::fixed_effects_reference()
        }
    }

    pub fn order(&self) -> usize {
        self.real_lags.len()
    }

    /// Coefficients in the estimator's regressor order.
    pub fn truth(&self) -> Vec<f64> {
        let mut v = self.real_lags.clone();
        v.push(self.all_real);
        v.extend(&self.fake_lags);
        v.push(self.all_fake);
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.real_lags.is_empty() || self.real_lags.len() != self.fake_lags.len() {
            return Err(Error::InvalidParams("lag vectors must be non-empty and equally long".into()));
        }
        if self.n_units < 2 || self.n_periods <= self.order() + 1 {
            return Err(Error::InvalidParams("panel too small for the lag order".into()));
        }
        if !(self.noise_sd >= 0.0) || !(0.0..=1.0).contains(&self.fake_prob) || self.fake_min >= self.fake_max.max(1) {
            return Err(Error::InvalidParams("invalid noise or purchase settings".into()));
        }
        Ok(())
    }
}

/// Draws a balanced panel; the first `order + 1` periods of each unit carry
/// no lag terms.
pub fn simulate_panel(process: &ArProcess) -> Result<Vec<PanelObs>> {
    process.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(process.seed);
    let k = process.order();
    let total = process.burn_in + process.n_periods;
    let unit_fx = Normal::new(process.unit_effect_mean, process.unit_effect_sd).expect("finite sd");
    let period_fx = Normal::new(0.0, process.period_effect_sd).expect("finite sd");
    let noise = Normal::new(0.0, process.noise_sd).expect("finite sd");

    let a: Vec<f64> = (0..process.n_units).map(|_| unit_fx.sample(&mut rng)).collect();
    let g: Vec<f64> = (0..total).map(|_| period_fx.sample(&mut rng)).collect();
    let mut out = Vec::with_capacity(process.n_units * process.n_periods);
    for (i, &ai) in a.iter().enumerate() {
        let mut ly = alloc::vec![0.0; total];
        let mut lf = alloc::vec![0.0; total];
        let mut real = alloc::vec![0.0; total];
        let mut fake = alloc::vec![0.0; total];
        let mut cum_real = alloc::vec![0.0; total];
        let mut cum_fake = alloc::vec![0.0; total];
        for t in 0..total {
            if rng.random::<f64>() < process.fake_prob {
                fake[t] = rng.random_range(process.fake_min..process.fake_max) as f64;
            }
            lf[t] = libm::log1p(fake[t]);
            let mut v = ai + g[t] + noise.sample(&mut rng);
            if t > k {
                for j in 1..=k {
                    v += process.real_lags[j - 1] * ly[t - j] + process.fake_lags[j - 1] * lf[t - j];
                }
                v += process.all_real * libm::log1p(cum_real[t - k - 1]);
                v += process.all_fake * libm::log1p(cum_fake[t - k - 1]);
            }
            ly[t] = v.max(0.0);
            real[t] = libm::expm1(ly[t]);
            let prev = |c: &[f64]| if t == 0 { 0.0 } else { c[t - 1] };
            cum_real[t] = prev(&cum_real) + real[t];
            cum_fake[t] = prev(&cum_fake) + fake[t];
        }
        for t in process.burn_in..total {
            out.push(PanelObs {
                unit: i as u32,
                period: (t - process.burn_in) as i64,
                real: real[t],
                all_real: cum_real[t],
                fake: fake[t],
                all_fake: cum_fake[t],
            });
        }
    }
    Ok(out)
}
