//! Brute-force Monte Carlo oracles for every closed form in the crate.
//!
//! Trials are split into [`BATCHES`] contiguous batches that run in
//! parallel. Trial `t` always draws from `substream(seed, domain, t)`, so
//! results do not depend on the thread count, and standard errors come from
//! the spread of the batch means.

mod quartic;
mod link;
mod moments;

pub use quartic::{quartic_form_check, quartic_form_closed_form, QuarticFormReport};
pub use link::{mc_received_energy, mc_sinr, run_link_monte_carlo, LinkMonteCarlo, LinkScenario};
pub use moments::{channel_moments_closed_form, mc_channel_moments};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Domain, SimRng};

pub const BATCHES: usize = 100;
pub const MIN_TRIALS: usize = 1000;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl MomentEstimate {
    /// `|mean − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / self.std_error
        }
    }

    pub fn relative_gap(&self, target: f64) -> f64 {
        (self.mean - target).abs() / target.abs()
    }
}

/// Per-batch means of a fixed set of per-trial statistics.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub trials: usize,
    pub batch_sizes: Vec<usize>,
    pub batch_means: Vec<Vec<f64>>,
}

impl BatchStats {
    pub fn num_stats(&self) -> usize {
        self.batch_means.first().map_or(0, |b| b.len())
    }

    /// Trial-weighted overall means.
    pub fn means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_stats()];
        for (b, m) in self.batch_means.iter().enumerate() {
            let w = self.batch_sizes[b] as f64 / self.trials as f64;
            for (o, v) in out.iter_mut().zip(m) {
                *o += w * v;
            }
        }
        out
    }

    /// Mean of statistic `i`.
    pub fn estimate(&self, i: usize) -> MomentEstimate {
        self.derived(|m| m[i])
    }

    /// A smooth function of the means, evaluated at the overall means, with
    /// its standard error taken from the per-batch values.
    pub fn derived(&self, f: impl Fn(&[f64]) -> f64) -> MomentEstimate {
        let mean = f(&self.means());
        let vals: Vec<f64> = self.batch_means.iter().map(|m| f(m)).collect();
        let b = vals.len() as f64;
        let avg = vals.iter().sum::<f64>() / b;
        let var = vals.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (b - 1.0);
        MomentEstimate {
            mean,
            std_error: (var / b).sqrt(),
            trials: self.trials,
        }
    }
}

/// Runs `trials` independent trials. `trial` fills `out` (length
/// `num_stats`) with that trial's statistics.
pub fn run_batched<F>(trials: usize, seed: u64, domain: Domain, num_stats: usize, trial: F) -> Result<BatchStats>
where
    F: Fn(&mut SimRng, &mut [f64]) -> Result<()> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::InsufficientTrials {
            got: trials,
            min: MIN_TRIALS,
        });
    }
    let base = trials / BATCHES;
    let extra = trials % BATCHES;
    let bounds: Vec<(usize, usize)> = (0..BATCHES)
        .scan(0usize, |start, b| {
            let len = base + usize::from(b < extra);
            let s = *start;
            *start += len;
            Some((s, len))
        })
        .collect();
    let batch_means = bounds
        .par_iter()
        .map(|&(start, len)| -> Result<Vec<f64>> {
            let mut sums = vec![0.0; num_stats];
            let mut buf = vec![0.0; num_stats];
            for t in start..start + len {
                let mut rng = substream(seed, domain, t as u64);
                buf.iter_mut().for_each(|v| *v = 0.0);
                trial(&mut rng, &mut buf)?;
                for (s, v) in sums.iter_mut().zip(&buf) {
                    *s += v;
                }
            }
            Ok(sums.into_iter().map(|s| s / len as f64).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(BatchStats {
        trials,
        batch_sizes: bounds.iter().map(|b| b.1).collect(),
        batch_means,
    })
}
