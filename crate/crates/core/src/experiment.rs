//! Parameter sweeps over topologies and scattering designs.
//!
//! A sweep varies one integer parameter. When a total antenna budget is
//! declared, the other factor of `M·L` follows from it. Every sweep point
//! reuses the same topology seeds, so designs and values are compared on
//! common random numbers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::scattering::Design;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::{se_from_sinr, MetricsReport, NetworkStatistics};
use crate::oracles::{run_link_monte_carlo, LinkScenario};
use crate::ris_channel::CorrelationModel;
use crate::rng::{substream, Domain};
use crate::scattering::{heuristic_scattering, random_scattering, ScatteringMatrix};
use crate::topology::generate_topology;

/// Integer parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Antennas per AP (`L`).
    AntennasPerAp,
    /// Number of APs (`M`).
    NumAps,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::AntennasPerAp => "L",
            SweepParam::NumAps => "M",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "antennas_per_ap" => Ok(SweepParam::AntennasPerAp),
            "M" | "num_aps" => Ok(SweepParam::NumAps),
            other => Err(Error::Sweep(format!("unknown sweep parameter `{other}` (expected L or M)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<usize>,
    /// Fixed `M·L` product. `None` leaves the other factor at its configured value.
    pub total_antennas: Option<usize>,
    pub config: SystemConfig,
    pub topologies: usize,
    /// Small-scale trials per topology for the Monte Carlo columns.
    pub mc_trials: Option<usize>,
    pub designs: Vec<Design>,
    pub seed: u64,
}

impl SweepSpec {
    /// Desk-scale defaults: `ML = 96`, a 4×4 RIS, `K = 3`, `J = 5`, 20 topologies.
    pub fn desk(param: SweepParam, values: Vec<usize>, seed: u64) -> Self {
        let config = SystemConfig {
            num_info_users: 3,
            num_energy_users: 5,
            ris_elements_h: 4,
            ris_elements_v: 4,
            ..SystemConfig::default()
        };
        Self {
            param,
            values,
            total_antennas: Some(96),
            config,
            topologies: 20,
            mc_trials: None,
            designs: vec![Design::Heuristic, Design::Random, Design::None],
            seed,
        }
    }

    /// Full-size scenario: `ML = 480` and an 8×5 RIS.
    pub fn full_scale(param: SweepParam, values: Vec<usize>, seed: u64) -> Self {
        let mut spec = Self::desk(param, values, seed);
        spec.total_antennas = Some(480);
        spec.config.ris_elements_h = 8;
        spec.config.ris_elements_v = 5;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Sweep("value list is empty".into()));
        }
        if self.values.contains(&0) {
            return Err(Error::Sweep("sweep values must be positive".into()));
        }
        if self.designs.is_empty() {
            return Err(Error::Sweep("no scattering design selected".into()));
        }
        if self.topologies == 0 {
            return Err(Error::Sweep("topology count must be positive".into()));
        }
        if self.total_antennas == Some(0) {
            return Err(Error::Sweep("antenna budget must be positive".into()));
        }
        Ok(())
    }

    /// The configuration at one sweep value, or the reason it is infeasible.
    pub fn point_config(&self, value: usize) -> std::result::Result<SystemConfig, String> {
        let mut c = self.config.clone();
        let other = match self.total_antennas {
            Some(total) if total % value != 0 => {
                return Err(format!("{value} does not divide the antenna budget {total}"));
            }
            Some(total) => Some(total / value),
            None => None,
        };
        match self.param {
            SweepParam::AntennasPerAp => {
                c.antennas_per_ap = value;
                if let Some(m) = other {
                    c.num_aps = m;
                }
            }
            SweepParam::NumAps => {
                c.num_aps = value;
                if let Some(l) = other {
                    c.antennas_per_ap = l;
                }
            }
        }
        if c.antennas_per_ap <= c.num_info_users {
            return Err(format!("L = {} must exceed K = {}", c.antennas_per_ap, c.num_info_users));
        }
        if c.tau() < c.num_users() {
            return Err(format!("tau = {} is shorter than K + J = {}", c.tau(), c.num_users()));
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

/// Aggregated metrics for one `(design, value)` pair. Metric fields are
/// `None` for infeasible points and, for Monte Carlo columns, when
/// validation was not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub design: Design,
    pub param: SweepParam,
    pub value: usize,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    /// Closed-form SE averaged over IUs and topologies.
    pub se_cf: Option<f64>,
    pub se_mc: Option<f64>,
    /// Standard error of `se_mc`.
    pub se_err: Option<f64>,
    /// Closed-form HE bound averaged over EUs and topologies.
    pub he_bound: Option<f64>,
    /// Closed-form HE bound summed over EUs, averaged over topologies.
    pub he_sum: Option<f64>,
    pub he_mc: Option<f64>,
    pub he_err: Option<f64>,
    /// Standard error of `se_cf` across topologies.
    pub se_cf_spread: Option<f64>,
    /// Standard error of `he_bound` across topologies.
    pub he_bound_spread: Option<f64>,
    pub seed: u64,
    pub topologies: usize,
    pub feasible: bool,
    pub note: Option<String>,
    pub wall_clock_s: f64,
}

impl ResultRow {
    fn infeasible(spec: &SweepSpec, design: Design, value: usize, note: String) -> Self {
        Self {
            design,
            param: spec.param,
            value,
            num_aps: 0,
            antennas_per_ap: 0,
            se_cf: None,
            se_mc: None,
            se_err: None,
            he_bound: None,
            he_sum: None,
            he_mc: None,
            he_err: None,
            se_cf_spread: None,
            he_bound_spread: None,
            seed: spec.seed,
            topologies: spec.topologies,
            feasible: false,
            note: Some(note),
            wall_clock_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct TopologyOutcome {
    se_cf: f64,
    he_bound: f64,
    he_sum: f64,
    mc: Option<McOutcome>,
}

#[derive(Debug, Clone, Copy, Default)]
struct McOutcome {
    se: f64,
    se_var: f64,
    he: f64,
    he_var: f64,
}

fn design_theta(
    design: Design,
    config: &SystemConfig,
    net: &crate::topology::NetworkRealization,
    corr: &CorrelationModel,
    seed: u64,
    topology: u64,
) -> Result<ScatteringMatrix> {
    let n = config.num_elements();
    match design {
        Design::Heuristic => heuristic_scattering(net, corr, config, &mut substream(seed, Domain::HeuristicTheta, topology)),
        Design::Random => Ok(random_scattering(n, &mut substream(seed, Domain::RandomTheta, topology))),
        Design::None => Ok(ScatteringMatrix::none(n)),
    }
}

fn evaluate_topology(spec: &SweepSpec, config: &SystemConfig, point: usize, t: usize) -> Result<Vec<TopologyOutcome>> {
    let tu = t as u64;
    let net = generate_topology(config, &mut substream(spec.seed, Domain::Topology, tu))?;
    let corr = CorrelationModel::from_network(config, &net)?;
    let nu = config.eh_nu();
    let mut out = Vec::with_capacity(spec.designs.len());
    for (d, &design) in spec.designs.iter().enumerate() {
        let theta = design_theta(design, config, &net, &corr, spec.seed, tu)?;
        let stats = NetworkStatistics::assemble(config, &net, &corr, theta.active())?;
        let report = MetricsReport::evaluate(&stats)?;
        let mc = match spec.mc_trials {
            None => None,
            Some(trials) => {
                let index = ((point * spec.topologies + t) * spec.designs.len() + d) as u64;
                let mc_seed = substream(spec.seed, Domain::Instance, index).next_u64();
                let scn = LinkScenario::new(config.clone(), net.clone(), theta)?;
                let run = run_link_monte_carlo(&scn, trials, mc_seed)?;
                let (k, j) = (config.num_info_users, config.num_energy_users);
                let mut o = McOutcome::default();
                for u in 0..k {
                    let s = run.sinr(u);
                    let se = se_from_sinr(s.mean, stats.tau, stats.tau_c);
                    let slope = (1.0 - stats.tau as f64 / stats.tau_c as f64) / ((1.0 + s.mean) * std::f64::consts::LN_2);
                    o.se += se / k as f64;
                    o.se_var += (slope * s.std_error / k as f64).powi(2);
                }
                for u in 0..j {
                    let x = run.lambda_excess(u);
                    o.he += x.mean / (1.0 - nu) / j as f64;
                    o.he_var += (x.std_error / (1.0 - nu) / j as f64).powi(2);
                }
                Some(o)
            }
        };
        out.push(TopologyOutcome {
            se_cf: report.mean_se(),
            he_bound: report.mean_he(),
            he_sum: report.sum_he(),
            mc,
        });
    }
    Ok(out)
}

fn mean_and_spread(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every `(design, value)` pair of `spec`. Rows come out grouped by
/// value, then by design in the order given. Infeasible values yield rows
/// flagged `feasible = false` instead of an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len() * spec.designs.len());
    for (point, &value) in spec.values.iter().enumerate() {
        let config = match spec.point_config(value) {
            Ok(c) => c,
            Err(note) => {
                rows.extend(spec.designs.iter().map(|&d| ResultRow::infeasible(spec, d, value, note.clone())));
                continue;
            }
        };
        let start = Instant::now();
        let per_topology = (0..spec.topologies)
            .into_par_iter()
            .map(|t| evaluate_topology(spec, &config, point, t))
            .collect::<Result<Vec<_>>>()?;
        let elapsed = start.elapsed().as_secs_f64();
        for (d, &design) in spec.designs.iter().enumerate() {
            let col: Vec<&TopologyOutcome> = per_topology.iter().map(|o| &o[d]).collect();
            let (se_cf, se_spread) = mean_and_spread(&col.iter().map(|o| o.se_cf).collect::<Vec<_>>());
            let (he, he_spread) = mean_and_spread(&col.iter().map(|o| o.he_bound).collect::<Vec<_>>());
            let (he_sum, _) = mean_and_spread(&col.iter().map(|o| o.he_sum).collect::<Vec<_>>());
            let mc: Option<Vec<McOutcome>> = col.iter().map(|o| o.mc).collect();
            let t = spec.topologies as f64;
            let mc_cols = mc.map(|m| {
                (
                    m.iter().map(|o| o.se).sum::<f64>() / t,
                    m.iter().map(|o| o.se_var).sum::<f64>().sqrt() / t,
                    m.iter().map(|o| o.he).sum::<f64>() / t,
                    m.iter().map(|o| o.he_var).sum::<f64>().sqrt() / t,
                )
            });
            rows.push(ResultRow {
                design,
                param: spec.param,
                value,
                num_aps: config.num_aps,
                antennas_per_ap: config.antennas_per_ap,
                se_cf: Some(se_cf),
                se_mc: mc_cols.map(|c| c.0),
                se_err: mc_cols.map(|c| c.1),
                he_bound: Some(he),
                he_sum: Some(he_sum),
                he_mc: mc_cols.map(|c| c.2),
                he_err: mc_cols.map(|c| c.3),
                se_cf_spread: Some(se_spread),
                he_bound_spread: Some(he_spread),
                seed: spec.seed,
                topologies: spec.topologies,
                feasible: true,
                note: None,
                wall_clock_s: elapsed,
            });
        }
    }
    Ok(rows)
}
