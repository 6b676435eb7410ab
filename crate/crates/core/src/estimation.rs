//! Uplink pilot training and LMMSE channel estimates.

use nalgebra::DMatrix;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{sample_cn_matrix, CMat, CVec, LinkTable, C64};
use crate::ris_channel::{delta_table, ChannelSet, CorrelationModel};
use crate::topology::NetworkRealization;

/// `γ = τρ_u·s² / (τρ_u·s + 1)`.
pub fn gamma_coefficient(tau: f64, rho_u: f64, scale: f64) -> Result<f64> {
    for (name, value) in [("tau", tau), ("rho_u", rho_u), ("scale", scale)] {
        if !(value > 0.0) {
            return Err(Error::NonPositive { name, value });
        }
    }
    let snr = tau * rho_u * scale;
    Ok(snr * scale / (snr + 1.0))
}

/// LMMSE coefficient applied to the de-spread pilot observation.
pub fn lmmse_coefficient(tau: f64, rho_u: f64, scale: f64) -> f64 {
    (tau * rho_u).sqrt() * scale / (tau * rho_u * scale + 1.0)
}

/// Large-scale gains the estimator is tuned to: `β^I` for IUs, `δ` for EUs.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleStats {
    pub beta_iu: DMatrix<f64>,
    pub delta_eu: DMatrix<f64>,
}

impl LargeScaleStats {
    pub fn new(net: &NetworkRealization, corr: &CorrelationModel, theta: Option<&CMat>) -> Result<Self> {
        Ok(Self {
            beta_iu: net.beta_iu.clone(),
            delta_eu: delta_table(net, corr, theta)?,
        })
    }

    /// `(γ^I, γ^E)` tables.
    pub fn gammas(&self, tau: f64, rho_u: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let g = |t: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let mut out = t.clone();
            for v in out.iter_mut() {
                *v = gamma_coefficient(tau, rho_u, *v)?;
            }
            Ok(out)
        };
        Ok((g(&self.beta_iu)?, g(&self.delta_eu)?))
    }
}

/// `τ × (K+J)` pilot matrix with orthonormal columns; IUs first.
#[derive(Debug, Clone)]
pub struct PilotBook {
    phi: CMat,
}

impl PilotBook {
    pub fn identity(tau: usize, users: usize) -> Result<Self> {
        if tau < users {
            return Err(Error::Config(format!("tau >= K+J ({tau} < {users})")));
        }
        Ok(Self {
            phi: CMat::identity(tau, users),
        })
    }

    pub fn from_matrix(phi: CMat) -> Result<Self> {
        let (tau, users) = phi.shape();
        if tau < users {
            return Err(Error::Config(format!("tau >= K+J ({tau} < {users})")));
        }
        let gram = phi.adjoint() * &phi;
        if (gram - CMat::identity(users, users)).norm() > 1e-9 {
            return Err(Error::Config("pilot columns are not orthonormal".into()));
        }
        Ok(Self { phi })
    }

    pub fn tau(&self) -> usize {
        self.phi.nrows()
    }

    pub fn users(&self) -> usize {
        self.phi.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.phi
    }
}

#[derive(Debug, Clone)]
pub struct EstimateSet {
    pub ghat_iu: LinkTable<CVec>,
    pub ghat_eu: LinkTable<CVec>,
    pub gamma_iu: DMatrix<f64>,
    pub gamma_eu: DMatrix<f64>,
}

/// Pilot phase with the default identity pilots and unit-variance noise.
pub fn run_pilot_phase<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    stats: &LargeScaleStats,
    rng: &mut R,
) -> Result<EstimateSet> {
    let (k, j) = (stats.beta_iu.ncols(), stats.delta_eu.ncols());
    let pilots = PilotBook::identity(config.tau(), k + j)?;
    run_pilot_phase_with(channels, config.rho_u(), &pilots, stats, 1.0, rng)
}

/// Pilot phase for an arbitrary pilot book. Each AP receives
/// `Y = √(τρ_u)·Σ_u g_u φ_uᴴ + noise_std·W` and forms
/// `ĝ_u = c_u·Y·φ_u`. `noise_std = 0` gives the noiseless observation while
/// the coefficient still assumes unit noise.
pub fn run_pilot_phase_with<R: Rng + ?Sized>(
    channels: &ChannelSet,
    rho_u: f64,
    pilots: &PilotBook,
    stats: &LargeScaleStats,
    noise_std: f64,
    rng: &mut R,
) -> Result<EstimateSet> {
    let m = channels.g_iu.rows();
    let (k, j) = (channels.g_iu.cols(), channels.g_eu.cols());
    if pilots.users() != k + j {
        return Err(Error::DimensionMismatch(format!(
            "{} pilots for {} users",
            pilots.users(),
            k + j
        )));
    }
    if stats.beta_iu.shape() != (m, k) || stats.delta_eu.shape() != (m, j) {
        return Err(Error::DimensionMismatch("large-scale tables do not match the channel set".into()));
    }
    let tau = pilots.tau() as f64;
    let (gamma_iu, gamma_eu) = stats.gammas(tau, rho_u)?;
    let amp = C64::new((tau * rho_u).sqrt(), 0.0);
    let phi = pilots.matrix();

    let mut ghat_iu = Vec::with_capacity(m);
    let mut ghat_eu = Vec::with_capacity(m);
    for a in 0..m {
        let l = channels.ris_ap[a].ncols();
        let mut g = CMat::zeros(l, k + j);
        for u in 0..k {
            g.set_column(u, &channels.g_iu[(a, u)]);
        }
        for u in 0..j {
            g.set_column(k + u, &channels.g_eu[(a, u)]);
        }
        let noise = sample_cn_matrix(rng, l, pilots.tau()) * C64::new(noise_std, 0.0);
        let y = &g * phi.adjoint() * amp + noise;
        let despread = y * phi;
        ghat_iu.push(
            (0..k)
                .map(|u| despread.column(u) * C64::new(lmmse_coefficient(tau, rho_u, stats.beta_iu[(a, u)]), 0.0))
                .collect::<Vec<_>>(),
        );
        ghat_eu.push(
            (0..j)
                .map(|u| {
                    despread.column(k + u) * C64::new(lmmse_coefficient(tau, rho_u, stats.delta_eu[(a, u)]), 0.0)
                })
                .collect::<Vec<_>>(),
        );
    }
    Ok(EstimateSet {
        ghat_iu: LinkTable::from_fn(m, k, |a, u| ghat_iu[a][u].clone()),
        ghat_eu: LinkTable::from_fn(m, j, |a, u| ghat_eu[a][u].clone()),
        gamma_iu,
        gamma_eu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_cn_vector;
    use crate::rng::{substream, Domain};

    fn tiny_channels(beta: f64, l: usize, seed: u64) -> ChannelSet {
        let mut rng = substream(seed, Domain::LinkTrials, 0);
        let g_iu = LinkTable::from_fn(1, 1, |_, _| sample_cn_vector(&mut rng, l, beta));
        let h_eu = LinkTable::from_fn(1, 1, |_, _| sample_cn_vector(&mut rng, l, beta));
        ChannelSet {
            g_eu: h_eu.clone(),
            g_iu,
            h_eu,
            ris_ap: vec![CMat::zeros(1, l)],
            ris_eu: vec![CVec::zeros(1)],
        }
    }

    #[test]
    fn gamma_limits() {
        assert!(gamma_coefficient(8.0, 1.0, 1e-30).unwrap() < 1e-55);
        let g = gamma_coefficient(1.0, 1e6, 1.0).unwrap();
        assert!(g / 1.0 > 0.999999 && g < 1.0);
        assert!(gamma_coefficient(0.0, 1.0, 1.0).is_err());
        assert!(gamma_coefficient(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_scalar_evaluation() {
        // τ = 8, ρ_u = 0.2 W / 10^-12.2 W, β = 1e-9.
        let rho_u = 0.2 / 10f64.powf(-12.2);
        let g = gamma_coefficient(8.0, rho_u, 1e-9).unwrap();
        assert!((g / 9.996058071090122e-10 - 1.0).abs() < 1e-12, "{g}");
    }

    #[test]
    fn noiseless_high_snr_recovers_channel() {
        let ch = tiny_channels(1.0, 4, 1);
        let stats = LargeScaleStats {
            beta_iu: DMatrix::from_element(1, 1, 1.0),
            delta_eu: DMatrix::from_element(1, 1, 1.0),
        };
        let pilots = PilotBook::identity(2, 2).unwrap();
        let est = run_pilot_phase_with(&ch, 1e12, &pilots, &stats, 0.0, &mut substream(1, Domain::LinkTrials, 1)).unwrap();
        assert!((&est.ghat_iu[(0, 0)] - &ch.g_iu[(0, 0)]).norm() < 1e-9);
        assert!((&est.ghat_eu[(0, 0)] - &ch.g_eu[(0, 0)]).norm() < 1e-9);
    }

    #[test]
    fn pilot_shortage_is_rejected() {
        assert!(PilotBook::identity(3, 4).is_err());
        let mut bad = CMat::identity(3, 2);
        bad[(0, 1)] = C64::new(0.5, 0.0);
        assert!(PilotBook::from_matrix(bad).is_err());
    }

    #[test]
    fn estimate_variance_and_orthogonality() {
        let beta = 2.0;
        let rho_u = 0.3;
        let l = 2;
        let pilots = {
            // A non-trivial orthonormal pilot pair, τ = 3.
            let s = 1.0 / 3f64.sqrt();
            let t = 1.0 / 2f64.sqrt();
            let phi = CMat::from_row_slice(
                3,
                2,
                &[C64::new(s, 0.0), C64::new(t, 0.0), C64::new(s, 0.0), C64::new(-t, 0.0), C64::new(s, 0.0), C64::new(0.0, 0.0)],
            );
            PilotBook::from_matrix(phi).unwrap()
        };
        let stats = LargeScaleStats {
            beta_iu: DMatrix::from_element(1, 1, beta),
            delta_eu: DMatrix::from_element(1, 1, beta),
        };
        let gamma = gamma_coefficient(3.0, rho_u, beta).unwrap();
        let trials = 100_000;
        let (mut var, mut cross, mut cross_sq, mut other) = (0.0, C64::new(0.0, 0.0), 0.0, C64::new(0.0, 0.0));
        for t in 0..trials {
            let ch = tiny_channels(beta, l, 1000 + t);
            let est = run_pilot_phase_with(&ch, rho_u, &pilots, &stats, 1.0, &mut substream(7, Domain::LinkTrials, t)).unwrap();
            let gh = &est.ghat_iu[(0, 0)];
            let err = &ch.g_iu[(0, 0)] - gh;
            var += gh[0].norm_sqr();
            let c = gh[0].conj() * err[0];
            cross += c;
            cross_sq += c.norm_sqr();
            other += gh[0].conj() * ch.g_eu[(0, 0)][0];
        }
        let n = trials as f64;
        assert!((var / n / gamma - 1.0).abs() < 0.02);
        let se = (cross_sq / n).sqrt() / n.sqrt();
        assert!((cross / n).norm() < 4.0 * se * 2f64.sqrt());
        assert!((other / n).norm() < 4.0 * (gamma * beta / n).sqrt() * 2f64.sqrt());
    }
}
