use crate::config::SystemConfig;
use crate::error::Result;
use crate::linalg::C64;
use crate::estimation::run_pilot_phase;
use crate::metrics::{logistic_excess, NetworkStatistics};
use crate::precoding::build_precoders;
use crate::ris_channel::{sample_channel_set, CorrelationModel};
use crate::rng::Domain;
use crate::scattering::ScatteringMatrix;
use crate::topology::NetworkRealization;

use super::{run_batched, BatchStats, MomentEstimate};

/// A fixed topology and scattering matrix whose small-scale channels,
/// pilots and precoders are redrawn in every trial.
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub config: SystemConfig,
    pub net: NetworkRealization,
    pub corr: CorrelationModel,
    pub theta: ScatteringMatrix,
    pub stats: NetworkStatistics,
}

impl LinkScenario {
    pub fn new(config: SystemConfig, net: NetworkRealization, theta: ScatteringMatrix) -> Result<Self> {
        let corr = CorrelationModel::from_network(&config, &net)?;
        let stats = NetworkStatistics::assemble(&config, &net, &corr, theta.active())?;
        Ok(Self {
            config,
            net,
            corr,
            theta,
            stats,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    m: usize,
    k: usize,
    j: usize,
}

impl Layout {
    const PER_IU: usize = 6;
    const PER_EU: usize = 2;

    fn iu(&self, k: usize, field: usize) -> usize {
        k * Self::PER_IU + field
    }
    fn eu(&self, j: usize, field: usize) -> usize {
        self.k * Self::PER_IU + j * Self::PER_EU + field
    }
    fn ap(&self, m: usize) -> usize {
        self.k * Self::PER_IU + self.j * Self::PER_EU + m
    }
    fn link(&self, kind: usize, m: usize, j: usize) -> usize {
        self.ap(self.m) + (kind * self.m + m) * self.j + j
    }
    fn len(&self) -> usize {
        self.link(3, 0, 0)
    }
}

/// Per-trial statistics of the full downlink pipeline.
#[derive(Debug, Clone)]
pub struct LinkMonteCarlo {
    layout: Layout,
    a: Vec<f64>,
    pub stats: BatchStats,
}

const DS_RE: usize = 0;
const DS_IM: usize = 1;
const DS_ABS2: usize = 2;
const IUI: usize = 3;
const EUI: usize = 4;
const INST_SE: usize = 5;
const ENERGY: usize = 0;
const EXCESS: usize = 1;
const COHERENT: usize = 0;
const CROSS_EU: usize = 1;
const PZF_LEAK: usize = 2;

impl LinkMonteCarlo {
    pub fn trials(&self) -> usize {
        self.stats.trials
    }

    /// `|E{DS_k}|²`.
    pub fn ds_power(&self, k: usize) -> MomentEstimate {
        let (re, im) = (self.layout.iu(k, DS_RE), self.layout.iu(k, DS_IM));
        self.stats.derived(|m| m[re] * m[re] + m[im] * m[im])
    }

    /// `E{|BU_k|²}`, the variance of the desired-signal gain.
    pub fn bu_power(&self, k: usize) -> MomentEstimate {
        let (re, im, a2) = (self.layout.iu(k, DS_RE), self.layout.iu(k, DS_IM), self.layout.iu(k, DS_ABS2));
        self.stats.derived(|m| m[a2] - m[re] * m[re] - m[im] * m[im])
    }

    /// `Σ_{k'≠k} E{|IUI_kk'|²}`.
    pub fn iui_power(&self, k: usize) -> MomentEstimate {
        self.stats.estimate(self.layout.iu(k, IUI))
    }

    /// `Σ_j E{|EUI_kj|²}`.
    pub fn eui_power(&self, k: usize) -> MomentEstimate {
        self.stats.estimate(self.layout.iu(k, EUI))
    }

    /// Hardening-bound SINR assembled from the component moments.
    pub fn sinr(&self, k: usize) -> MomentEstimate {
        let l = self.layout;
        let (re, im, a2, iui, eui) = (l.iu(k, DS_RE), l.iu(k, DS_IM), l.iu(k, DS_ABS2), l.iu(k, IUI), l.iu(k, EUI));
        self.stats.derived(|m| {
            let ds = m[re] * m[re] + m[im] * m[im];
            ds / (m[a2] - ds + m[iui] + m[eui] + 1.0)
        })
    }

    /// Ergodic SE with per-trial knowledge of the effective channel.
    pub fn ergodic_se(&self, k: usize) -> MomentEstimate {
        self.stats.estimate(self.layout.iu(k, INST_SE))
    }

    /// `E{E_j}` in the units of the closed-form `Q_j`.
    pub fn energy(&self, j: usize) -> MomentEstimate {
        self.stats.estimate(self.layout.eu(j, ENERGY))
    }

    /// `E{Λ(E_j)} − φν`.
    pub fn lambda_excess(&self, j: usize) -> MomentEstimate {
        self.stats.estimate(self.layout.eu(j, EXCESS))
    }

    /// `E{‖x_m‖²}/ρ_d`.
    pub fn power_ratio(&self, m: usize) -> MomentEstimate {
        self.stats.estimate(self.layout.ap(m))
    }

    fn link_ratio(&self, kind: usize, m: usize, j: usize) -> Option<MomentEstimate> {
        let applies = match kind {
            COHERENT => self.a[m] == 0.0,
            CROSS_EU => self.a[m] == 0.0 && self.layout.j > 1,
            _ => self.a[m] == 1.0 && self.layout.k > 0,
        };
        applies.then(|| self.stats.estimate(self.layout.link(kind, m, j)))
    }

    fn pooled(&self, kind: usize) -> Option<MomentEstimate> {
        let idx: Vec<usize> = (0..self.layout.m)
            .flat_map(|m| (0..self.layout.j).map(move |j| (m, j)))
            .filter(|&(m, j)| self.link_ratio(kind, m, j).is_some())
            .map(|(m, j)| self.layout.link(kind, m, j))
            .collect();
        if idx.is_empty() {
            return None;
        }
        Some(self.stats.derived(|v| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64))
    }

    /// `E{|ĝ_mjᴴ w^PMRT_mj|²} / ((L−K+1)γ_mj)` at E-AP `m`.
    pub fn coherent_ratio(&self, m: usize, j: usize) -> Option<MomentEstimate> {
        self.link_ratio(COHERENT, m, j)
    }

    /// `E{|g_mjᴴ w^PMRT_mj'|²} / δ_mj`, averaged over `j' ≠ j`.
    pub fn cross_eu_ratio(&self, m: usize, j: usize) -> Option<MomentEstimate> {
        self.link_ratio(CROSS_EU, m, j)
    }

    /// `E{|g_mjᴴ w^PZF_mk|²} / δ_mj`, averaged over `k`.
    pub fn pzf_leak_ratio(&self, m: usize, j: usize) -> Option<MomentEstimate> {
        self.link_ratio(PZF_LEAK, m, j)
    }

    pub fn pooled_coherent_ratio(&self) -> Option<MomentEstimate> {
        self.pooled(COHERENT)
    }

    pub fn pooled_cross_eu_ratio(&self) -> Option<MomentEstimate> {
        self.pooled(CROSS_EU)
    }

    pub fn pooled_pzf_leak_ratio(&self) -> Option<MomentEstimate> {
        self.pooled(PZF_LEAK)
    }
}

/// Runs the pipeline `trials` times with streams derived from `seed`.
pub fn run_link_monte_carlo(scn: &LinkScenario, trials: usize, seed: u64) -> Result<LinkMonteCarlo> {
    let s = &scn.stats;
    let layout = Layout {
        m: s.num_aps(),
        k: s.num_info_users(),
        j: s.num_energy_users(),
    };
    let large = s.large_scale();
    let dof = (s.antennas_per_ap - layout.k) as f64;
    let rho = s.rho_d;
    let escale = s.energy_scale();
    let se_pre = 1.0 - s.tau as f64 / s.tau_c as f64;
    let theta = scn.theta.active();
    let a = &s.a;
    let eta_i = &s.power.eta_iu;
    let eta_e = &s.power.eta_eu;

    let stats = run_batched(trials, seed, Domain::LinkTrials, layout.len(), |rng, out| {
        let ch = sample_channel_set(&scn.net, &scn.corr, theta, rng)?;
        let est = run_pilot_phase(&ch, &scn.config, &large, rng)?;
        let prec = build_precoders(&est, a, s.power.clone())?;

        for k in 0..layout.k {
            let (mut ds, mut iui, mut eui) = (C64::new(0.0, 0.0), 0.0, 0.0);
            for m in 0..layout.m {
                if a[m] > 0.0 {
                    ds += ch.g_iu[(m, k)].dotc(&prec.w_iu[(m, k)]) * (a[m] * rho * eta_i[(m, k)]).sqrt();
                }
            }
            for kp in (0..layout.k).filter(|&kp| kp != k) {
                let mut t = C64::new(0.0, 0.0);
                for m in 0..layout.m {
                    if a[m] > 0.0 {
                        t += ch.g_iu[(m, k)].dotc(&prec.w_iu[(m, kp)]) * (a[m] * rho * eta_i[(m, kp)]).sqrt();
                    }
                }
                iui += t.norm_sqr();
            }
            for j in 0..layout.j {
                let mut t = C64::new(0.0, 0.0);
                for m in 0..layout.m {
                    if a[m] < 1.0 {
                        t += ch.g_iu[(m, k)].dotc(&prec.w_eu[(m, j)]) * ((1.0 - a[m]) * rho * eta_e[(m, j)]).sqrt();
                    }
                }
                eui += t.norm_sqr();
            }
            out[layout.iu(k, DS_RE)] = ds.re;
            out[layout.iu(k, DS_IM)] = ds.im;
            out[layout.iu(k, DS_ABS2)] = ds.norm_sqr();
            out[layout.iu(k, IUI)] = iui;
            out[layout.iu(k, EUI)] = eui;
            out[layout.iu(k, INST_SE)] = se_pre * (1.0 + ds.norm_sqr() / (iui + eui + 1.0)).log2();
        }

        for j in 0..layout.j {
            let mut acc = 0.0;
            for m in 0..layout.m {
                let g = &ch.g_eu[(m, j)];
                let delta = s.delta_eu[(m, j)];
                if a[m] < 1.0 {
                    let mut cross = 0.0;
                    for jp in 0..layout.j {
                        let p = g.dotc(&prec.w_eu[(m, jp)]).norm_sqr();
                        acc += (1.0 - a[m]) * eta_e[(m, jp)] * p;
                        if jp != j {
                            cross += p;
                        }
                    }
                    let gh = &est.ghat_eu[(m, j)];
                    out[layout.link(COHERENT, m, j)] =
                        gh.dotc(&prec.w_eu[(m, j)]).norm_sqr() / ((dof + 1.0) * est.gamma_eu[(m, j)]);
                    if layout.j > 1 {
                        out[layout.link(CROSS_EU, m, j)] = cross / (layout.j - 1) as f64 / delta;
                    }
                }
                if a[m] > 0.0 {
                    let mut leak = 0.0;
                    for k in 0..layout.k {
                        let p = g.dotc(&prec.w_iu[(m, k)]).norm_sqr();
                        acc += a[m] * eta_i[(m, k)] * p;
                        leak += p;
                    }
                    if layout.k > 0 {
                        out[layout.link(PZF_LEAK, m, j)] = leak / layout.k as f64 / delta;
                    }
                }
            }
            let e = escale * (rho * acc + 1.0);
            out[layout.eu(j, ENERGY)] = e;
            out[layout.eu(j, EXCESS)] = logistic_excess(e, s.eh_xi, s.eh_chi, s.eh_phi);
        }

        for m in 0..layout.m {
            let mut p = 0.0;
            if a[m] > 0.0 {
                p += (0..layout.k).map(|k| a[m] * eta_i[(m, k)] * prec.w_iu[(m, k)].norm_squared()).sum::<f64>();
            }
            if a[m] < 1.0 {
                p += (0..layout.j)
                    .map(|j| (1.0 - a[m]) * eta_e[(m, j)] * prec.w_eu[(m, j)].norm_squared())
                    .sum::<f64>();
            }
            out[layout.ap(m)] = p;
        }
        Ok(())
    })?;
    Ok(LinkMonteCarlo {
        layout,
        a: a.clone(),
        stats,
    })
}

pub fn mc_sinr(scn: &LinkScenario, trials: usize, seed: u64, k: usize) -> Result<MomentEstimate> {
    Ok(run_link_monte_carlo(scn, trials, seed)?.sinr(k))
}

/// `(E{E_j}, E{Λ(E_j)} − φν)`.
pub fn mc_received_energy(
    scn: &LinkScenario,
    trials: usize,
    seed: u64,
    j: usize,
) -> Result<(MomentEstimate, MomentEstimate)> {
    let mc = run_link_monte_carlo(scn, trials, seed)?;
    Ok((mc.energy(j), mc.lambda_excess(j)))
}
