//! Closed-form spectral efficiency and harvested energy.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::LargeScaleStats;
use crate::linalg::CMat;
use crate::precoding::{power_control, PowerCoefficients};
use crate::ris_channel::CorrelationModel;
use crate::topology::NetworkRealization;

/// Every large-scale quantity the closed forms need, for one topology and
/// one scattering matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStatistics {
    pub antennas_per_ap: usize,
    pub a: Vec<f64>,
    pub beta_iu: DMatrix<f64>,
    pub delta_eu: DMatrix<f64>,
    pub gamma_iu: DMatrix<f64>,
    pub gamma_eu: DMatrix<f64>,
    pub power: PowerCoefficients,
    pub rho_d: f64,
    pub noise_power_w: f64,
    pub tau: usize,
    pub tau_c: usize,
    pub symbol_duration_s: f64,
    pub eh_xi: f64,
    pub eh_chi: f64,
    pub eh_phi: f64,
}

impl NetworkStatistics {
    pub fn assemble(
        config: &SystemConfig,
        net: &NetworkRealization,
        corr: &CorrelationModel,
        theta: Option<&CMat>,
    ) -> Result<Self> {
        let stats = LargeScaleStats::new(net, corr, theta)?;
        let (gamma_iu, gamma_eu) = stats.gammas(config.tau() as f64, config.rho_u())?;
        let a = net.mode_vector();
        let power = power_control(&gamma_iu, &gamma_eu, &a, config.power_rule)?;
        Ok(Self {
            antennas_per_ap: config.antennas_per_ap,
            a,
            beta_iu: stats.beta_iu,
            delta_eu: stats.delta_eu,
            gamma_iu,
            gamma_eu,
            power,
            rho_d: config.rho_d(),
            noise_power_w: config.noise_power_w,
            tau: config.tau(),
            tau_c: config.coherence_symbols,
            symbol_duration_s: config.symbol_duration_s,
            eh_xi: config.eh_xi,
            eh_chi: config.eh_chi,
            eh_phi: config.eh_phi,
        })
    }

    pub fn num_aps(&self) -> usize {
        self.a.len()
    }

    pub fn num_info_users(&self) -> usize {
        self.beta_iu.ncols()
    }

    pub fn num_energy_users(&self) -> usize {
        self.delta_eu.ncols()
    }

    pub fn large_scale(&self) -> LargeScaleStats {
        LargeScaleStats {
            beta_iu: self.beta_iu.clone(),
            delta_eu: self.delta_eu.clone(),
        }
    }

    fn zf_dof(&self) -> Result<f64> {
        let (l, k) = (self.antennas_per_ap, self.num_info_users());
        if l <= k {
            return Err(Error::Config(format!("L > K required (L = {l}, K = {k})")));
        }
        Ok((l - k) as f64)
    }

    /// Energy prefactor `(τ_c − τ)·σ_n²·T_s`.
    pub fn energy_scale(&self) -> f64 {
        (self.tau_c - self.tau) as f64 * self.noise_power_w * self.symbol_duration_s
    }
}

/// SINR of IU `k` under PZF at the I-APs and PMRT at the E-APs.
pub fn closed_form_sinr(s: &NetworkStatistics, k: usize) -> Result<f64> {
    let dof = s.zf_dof()?;
    let (m_aps, kk, jj) = (s.num_aps(), s.num_info_users(), s.num_energy_users());
    let coherent: f64 = (0..m_aps)
        .map(|m| (s.a[m] * s.power.eta_iu[(m, k)] * s.gamma_iu[(m, k)]).sqrt())
        .sum();
    let mut den = 1.0 / s.rho_d;
    for m in 0..m_aps {
        let err = s.beta_iu[(m, k)] - s.gamma_iu[(m, k)];
        for kp in 0..kk {
            den += s.a[m] * s.power.eta_iu[(m, kp)] * err;
        }
        for j in 0..jj {
            den += (1.0 - s.a[m]) * s.power.eta_eu[(m, j)] * err;
        }
    }
    Ok(dof * coherent * coherent / den)
}

/// `(1 − τ/τ_c)·log2(1 + SINR)`.
pub fn se_from_sinr(sinr: f64, tau: usize, tau_c: usize) -> f64 {
    (1.0 - tau as f64 / tau_c as f64) * (1.0 + sinr).log2()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `Λ(E) = φ / (1 + exp(−ξ(E − χ)))`.
pub fn logistic(e: f64, xi: f64, chi: f64, phi: f64) -> f64 {
    phi * sigmoid(xi * (e - chi))
}

/// `ν = 1/(1 + exp(ξχ))`.
pub fn logistic_offset(xi: f64, chi: f64) -> f64 {
    sigmoid(-xi * chi)
}

/// `Λ(E) − φν`, accurate when `E` is tiny compared with `χ`.
pub fn logistic_excess(e: f64, xi: f64, chi: f64, phi: f64) -> f64 {
    let a = xi * (e - chi);
    let b = -xi * chi;
    if a.abs() > 700.0 || b.abs() > 700.0 {
        return logistic(e, xi, chi, phi) - phi * logistic_offset(xi, chi);
    }
    phi * (0.5 * xi * e).sinh() / (2.0 * (0.5 * a).cosh() * (0.5 * b).cosh())
}

/// `(Λ(Q) − φν)/(1 − ν)`, zero at `Q = 0` and tending to `φ`.
pub fn harvested_energy_bound(q: f64, xi: f64, chi: f64, phi: f64) -> f64 {
    logistic_excess(q, xi, chi, phi) / (1.0 - logistic_offset(xi, chi))
}

/// Expected RF energy received by EU `j` over the downlink part of a block.
pub fn closed_form_q(s: &NetworkStatistics, j: usize) -> Result<f64> {
    let dof = s.zf_dof()?;
    let (m_aps, kk, jj) = (s.num_aps(), s.num_info_users(), s.num_energy_users());
    let mut bracket = 1.0 / s.rho_d;
    for m in 0..m_aps {
        let e = 1.0 - s.a[m];
        bracket += (dof + 1.0) * e * s.power.eta_eu[(m, j)] * s.gamma_eu[(m, j)];
        for jp in (0..jj).filter(|&jp| jp != j) {
            bracket += e * s.power.eta_eu[(m, jp)] * s.delta_eu[(m, j)];
        }
        for k in 0..kk {
            bracket += s.a[m] * s.power.eta_iu[(m, k)] * s.delta_eu[(m, j)];
        }
    }
    Ok(s.energy_scale() * s.rho_d * bracket)
}

/// Closed-form metrics for every user, with optional Monte Carlo columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sinr: Vec<f64>,
    pub se: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub he_bound: Vec<f64>,
    pub sinr_mc: Option<Vec<f64>>,
    pub se_mc: Option<Vec<f64>>,
    pub energy_mc: Option<Vec<f64>>,
    pub lambda_mc: Option<Vec<f64>>,
}

impl MetricsReport {
    pub fn evaluate(s: &NetworkStatistics) -> Result<Self> {
        let sinr = (0..s.num_info_users())
            .map(|k| closed_form_sinr(s, k))
            .collect::<Result<Vec<_>>>()?;
        let se = sinr.iter().map(|&x| se_from_sinr(x, s.tau, s.tau_c)).collect();
        let q = (0..s.num_energy_users())
            .map(|j| closed_form_q(s, j))
            .collect::<Result<Vec<_>>>()?;
        let lambda = q.iter().map(|&e| logistic(e, s.eh_xi, s.eh_chi, s.eh_phi)).collect();
        let he_bound = q
            .iter()
            .map(|&e| harvested_energy_bound(e, s.eh_xi, s.eh_chi, s.eh_phi))
            .collect();
        Ok(Self {
            sinr,
            se,
            q,
            lambda,
            he_bound,
            ..Self::default()
        })
    }

    pub fn mean_se(&self) -> f64 {
        mean(&self.se)
    }

    pub fn mean_he(&self) -> f64 {
        mean(&self.he_bound)
    }

    pub fn sum_he(&self) -> f64 {
        self.he_bound.iter().sum()
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
