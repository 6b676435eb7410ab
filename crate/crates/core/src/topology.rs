//! Network geometry, large-scale fading and AP mode assignment.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{RisLinkModel, SystemConfig};
use crate::error::{Error, Result};

pub type Position = [f64; 3];

/// Three-slope path-loss model with a COST-231 Hata fixed term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Fixed term `L` in dB.
    pub fixed_loss_db: f64,
    pub d0_m: f64,
    pub d1_m: f64,
}

impl PathLossModel {
    pub fn hata_cost231(carrier_mhz: f64, ap_height_m: f64, user_height_m: f64, d0_m: f64, d1_m: f64) -> Self {
        let lf = carrier_mhz.log10();
        let fixed_loss_db = 46.3 + 33.9 * lf - 13.82 * ap_height_m.log10()
            - (1.1 * lf - 0.7) * user_height_m
            + (1.56 * lf - 0.8);
        Self {
            fixed_loss_db,
            d0_m,
            d1_m,
        }
    }

    pub fn from_config(config: &SystemConfig) -> Self {
        Self::hata_cost231(
            config.carrier_freq_hz / 1e6,
            config.ap_height_m,
            config.user_height_m,
            config.pathloss_d0_m,
            config.pathloss_d1_m,
        )
    }
}

/// Path loss in dB (non-positive) at `distance_m`.
pub fn three_slope_pathloss(distance_m: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositive {
            name: "distance_m",
            value: distance_m,
        });
    }
    let km = |d: f64| d / 1000.0;
    let (d0, d1) = (km(model.d0_m), km(model.d1_m));
    let d = km(distance_m);
    let l = model.fixed_loss_db;
    Ok(if d > d1 {
        -l - 35.0 * d.log10()
    } else if d > d0 {
        -l - 15.0 * d1.log10() - 20.0 * d.log10()
    } else {
        -l - 15.0 * d1.log10() - 20.0 * d0.log10()
    })
}

/// Per-unit-area intensity gain (1/m²) of a RIS hop of length `distance_m`.
///
/// Multiplying by the element area `d_H·d_V` gives the per-element variance
/// of the hop. Isotropic path gains are converted with the isotropic
/// effective area λ²/(4π).
pub fn ris_link_coefficient(distance_m: f64, config: &SystemConfig) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositive {
            name: "distance_m",
            value: distance_m,
        });
    }
    match config.ris_link_model {
        RisLinkModel::FreeSpace => Ok(1.0 / (4.0 * std::f64::consts::PI * distance_m * distance_m)),
        RisLinkModel::ThreeSlope => {
            let pl = three_slope_pathloss(distance_m, &PathLossModel::from_config(config))?;
            let lambda = config.wavelength();
            Ok(10f64.powf(pl / 10.0) * 4.0 * std::f64::consts::PI / (lambda * lambda))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApMode {
    /// I-AP, `a_m = 1`.
    Information,
    /// E-AP, `a_m = 0`.
    Energy,
}

impl ApMode {
    pub fn indicator(self) -> f64 {
        match self {
            ApMode::Information => 1.0,
            ApMode::Energy => 0.0,
        }
    }
}

/// Random mode vector with exactly `round(M·e_fraction)` E-APs, kept within
/// `[1, M−1]` so that both modes are present.
pub fn assign_ap_modes<R: Rng + ?Sized>(num_aps: usize, e_fraction: f64, rng: &mut R) -> Result<Vec<ApMode>> {
    if num_aps < 2 {
        return Err(Error::Config(format!("mode assignment needs M >= 2 (got {num_aps})")));
    }
    if !(e_fraction > 0.0 && e_fraction < 1.0) {
        return Err(Error::Config(format!("0 < e_fraction < 1 (got {e_fraction})")));
    }
    let energy = ((num_aps as f64 * e_fraction).round() as usize).clamp(1, num_aps - 1);
    let mut modes = vec![ApMode::Information; num_aps];
    for m in index::sample(rng, num_aps, energy) {
        modes[m] = ApMode::Energy;
    }
    Ok(modes)
}

/// One drop of the network: positions, large-scale coefficients and modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRealization {
    pub ap_positions: Vec<Position>,
    pub iu_positions: Vec<Position>,
    pub eu_positions: Vec<Position>,
    pub ris_position: Position,
    pub antennas_per_ap: usize,
    /// β^I, M×K.
    pub beta_iu: DMatrix<f64>,
    /// β^E, M×J.
    pub beta_eu: DMatrix<f64>,
    /// α_m for AP→RIS hops (per unit area).
    pub alpha_ap: Vec<f64>,
    /// α_j for RIS→EU hops (per unit area).
    pub alpha_eu: Vec<f64>,
    pub modes: Vec<ApMode>,
}

impl NetworkRealization {
    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_info_users(&self) -> usize {
        self.iu_positions.len()
    }

    pub fn num_energy_users(&self) -> usize {
        self.eu_positions.len()
    }

    /// The binary vector `a`.
    pub fn mode_vector(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.indicator()).collect()
    }
}

pub fn distance(a: &Position, b: &Position) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Draws a topology. The EU and IU positions are drawn first and depend only
/// on `(J, K)`, so sweeps over `M` or `L` see the same users for a given
/// stream.
pub fn generate_topology<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<NetworkRealization> {
    config.validate()?;
    let side = config.area_side_m;
    let ris_position = [config.ris_x_m, config.ris_y_m, config.ris_height_m];
    let cluster = [config.ris_x_m + config.eu_cluster_offset_m, config.ris_y_m];

    let eu_positions: Vec<Position> = (0..config.num_energy_users)
        .map(|_| {
            let r = config.eu_cluster_radius_m * rng.random::<f64>().sqrt();
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            [cluster[0] + r * t.cos(), cluster[1] + r * t.sin(), config.user_height_m]
        })
        .collect();
    let mut uniform = |h: f64| [side * rng.random::<f64>(), side * rng.random::<f64>(), h];
    let iu_positions: Vec<Position> = (0..config.num_info_users).map(|_| uniform(config.user_height_m)).collect();
    let ap_positions: Vec<Position> = (0..config.num_aps).map(|_| uniform(config.ap_height_m)).collect();

    let model = PathLossModel::from_config(config);
    let mut shadowed = |d: f64| -> Result<f64> {
        let mut db = three_slope_pathloss(d, &model)?;
        if d > model.d1_m {
            let z: f64 = rng.sample(StandardNormal);
            db += config.shadow_sigma_db * z;
        }
        Ok(10f64.powf(db / 10.0))
    };
    let m = config.num_aps;
    let mut beta_iu = DMatrix::zeros(m, config.num_info_users);
    let mut beta_eu = DMatrix::zeros(m, config.num_energy_users);
    for (a, ap) in ap_positions.iter().enumerate() {
        for (k, iu) in iu_positions.iter().enumerate() {
            beta_iu[(a, k)] = shadowed(distance(ap, iu))?;
        }
        for (j, eu) in eu_positions.iter().enumerate() {
            beta_eu[(a, j)] = shadowed(distance(ap, eu))?;
        }
    }
    let alpha_ap = ap_positions
        .iter()
        .map(|ap| ris_link_coefficient(distance(ap, &ris_position), config))
        .collect::<Result<Vec<_>>>()?;
    let alpha_eu = eu_positions
        .iter()
        .map(|eu| ris_link_coefficient(distance(eu, &ris_position), config))
        .collect::<Result<Vec<_>>>()?;
    let modes = assign_ap_modes(m, config.e_fraction, rng)?;

    Ok(NetworkRealization {
        ap_positions,
        iu_positions,
        eu_positions,
        ris_position,
        antennas_per_ap: config.antennas_per_ap,
        beta_iu,
        beta_eu,
        alpha_ap,
        alpha_eu,
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};

    fn model() -> PathLossModel {
        PathLossModel::from_config(&SystemConfig::default())
    }

    #[test]
    fn inner_breakpoint_is_continuous() {
        let m = model();
        let below = three_slope_pathloss(m.d0_m * (1.0 - 1e-12), &m).unwrap();
        let above = three_slope_pathloss(m.d0_m * (1.0 + 1e-12), &m).unwrap();
        assert!((below - above).abs() < 1e-9);
        let below = three_slope_pathloss(m.d1_m * (1.0 - 1e-12), &m).unwrap();
        let above = three_slope_pathloss(m.d1_m * (1.0 + 1e-12), &m).unwrap();
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn far_slope_is_35_db_per_decade() {
        let m = model();
        let diff = three_slope_pathloss(2000.0, &m).unwrap() - three_slope_pathloss(1000.0, &m).unwrap();
        assert!((diff + 35.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn golden_value_at_100_m() {
        // Independent scalar evaluation (f = 1900 MHz, h_AP = 15 m, h_u = 1.65 m).
        assert!((model().fixed_loss_db - 140.71508370390842).abs() < 1e-10);
        let pl = three_slope_pathloss(100.0, &model()).unwrap();
        assert!((pl + 105.71508370390842).abs() < 1e-10, "{pl}");
        let pl = three_slope_pathloss(30.0, &model()).unwrap();
        assert!((pl + 90.74205886334195).abs() < 1e-10, "{pl}");
        let pl = three_slope_pathloss(5.0, &model()).unwrap();
        assert!((pl + 81.1996337689487).abs() < 1e-10, "{pl}");
    }

    #[test]
    fn non_positive_distance_is_an_error() {
        assert!(three_slope_pathloss(0.0, &model()).is_err());
        assert!(three_slope_pathloss(-3.0, &model()).is_err());
    }

    #[test]
    fn same_seed_same_topology() {
        let c = SystemConfig::default();
        let a = generate_topology(&c, &mut substream(11, Domain::Topology, 0)).unwrap();
        let b = generate_topology(&c, &mut substream(11, Domain::Topology, 0)).unwrap();
        assert_eq!(a, b);
        let d = generate_topology(&c, &mut substream(11, Domain::Topology, 1)).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn zero_shadowing_gives_pure_path_loss() {
        let c = SystemConfig {
            shadow_sigma_db: 0.0,
            ..SystemConfig::default()
        };
        let m = PathLossModel::from_config(&c);
        let net = generate_topology(&c, &mut substream(5, Domain::Topology, 0)).unwrap();
        for a in 0..net.num_aps() {
            for k in 0..net.num_info_users() {
                let d = distance(&net.ap_positions[a], &net.iu_positions[k]);
                let expected = 10f64.powf(three_slope_pathloss(d, &m).unwrap() / 10.0);
                assert!((net.beta_iu[(a, k)] / expected - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shadowing_has_zero_mean_in_db() {
        let c = SystemConfig {
            num_aps: 4,
            num_info_users: 2,
            num_energy_users: 1,
            ..SystemConfig::default()
        };
        let m = PathLossModel::from_config(&c);
        let mut samples = Vec::new();
        for t in 0..10_000 {
            let net = generate_topology(&c, &mut substream(3, Domain::Topology, t)).unwrap();
            for a in 0..net.num_aps() {
                for k in 0..net.num_info_users() {
                    let d = distance(&net.ap_positions[a], &net.iu_positions[k]);
                    if d > m.d1_m {
                        let pl = three_slope_pathloss(d, &m).unwrap();
                        samples.push(10.0 * net.beta_iu[(a, k)].log10() - pl);
                    }
                }
            }
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
        assert!((var.sqrt() - 8.0).abs() < 0.1);
    }

    #[test]
    fn geometry_respects_heights_and_area() {
        let c = SystemConfig::default();
        let net = generate_topology(&c, &mut substream(9, Domain::Topology, 2)).unwrap();
        for p in &net.ap_positions {
            assert_eq!(p[2], 15.0);
            assert!((0.0..=1000.0).contains(&p[0]) && (0.0..=1000.0).contains(&p[1]));
        }
        for p in &net.eu_positions {
            assert_eq!(p[2], 1.65);
            let r = ((p[0] - 520.0).powi(2) + (p[1] - 500.0).powi(2)).sqrt();
            assert!(r <= 50.0 + 1e-9);
        }
        assert_eq!(net.ris_position, [500.0, 500.0, 30.0]);
        assert!(net.beta_iu.iter().chain(net.beta_eu.iter()).all(|&b| b > 0.0));
        assert!(net.alpha_ap.iter().chain(&net.alpha_eu).all(|&a| a > 0.0));
    }

    #[test]
    fn mode_counts() {
        let mut rng = substream(1, Domain::Topology, 0);
        let a = assign_ap_modes(8, 0.5, &mut rng).unwrap();
        assert_eq!(a.iter().filter(|m| **m == ApMode::Energy).count(), 4);
        let a = assign_ap_modes(8, 0.125, &mut rng).unwrap();
        assert_eq!(a.iter().filter(|m| **m == ApMode::Energy).count(), 1);
        assert!(assign_ap_modes(1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn each_ap_is_energy_ap_half_the_time() {
        let draws = 10_000;
        let mut counts = [0usize; 8];
        let mut rng = substream(2, Domain::Topology, 0);
        for _ in 0..draws {
            for (m, mode) in assign_ap_modes(8, 0.5, &mut rng).unwrap().iter().enumerate() {
                if *mode == ApMode::Energy {
                    counts[m] += 1;
                }
            }
        }
        let se = (0.25f64 / draws as f64).sqrt();
        for c in counts {
            let f = c as f64 / draws as f64;
            assert!((f - 0.5).abs() < 3.0 * se, "{f}");
        }
    }

    #[test]
    fn path_loss_is_monotone() {
        let m = model();
        let mut last = f64::INFINITY;
        for i in 1..5000 {
            let pl = three_slope_pathloss(i as f64 * 0.5, &m).unwrap();
            assert!(pl <= last + 1e-12);
            last = pl;
        }
    }
}
