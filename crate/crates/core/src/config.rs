//! System configuration.
//!
//! All scalar parameters of a run live in [`SystemConfig`]. Configurations
//! are ingested from JSON objects whose keys are the field names below; the
//! short symbols used in the literature (`M`, `L`, `K`, `J`, `tau_c`, ...) are
//! accepted as aliases. Unknown keys are rejected.
//!
//! Defaults reproduce the reference scenario: 1×1 km area, APs at 15 m, RIS
//! at 30 m, users at 1.65 m, τ_c = 200, τ = K + J, σ² = −92 dBm, 1 W downlink
//! and 0.2 W pilot power, and the logistic rectifier ξ = 150, χ = 0.014,
//! φ = 0.024 W.
//!
//! Path-loss constants follow the three-slope model with a COST-231 Hata
//! fixed term: breakpoints `d0 = 10 m`, `d1 = 50 m`, carrier 1.9 GHz.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Downlink power-control rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerRule {
    /// `η_mk = (Σ_k γ_mk)⁻¹` used verbatim. With unit-average-norm
    /// precoders this does not respect the per-AP power budget.
    InverseGammaSum,
    /// Same per-user allocation as [`PowerRule::InverseGammaSum`], rescaled at
    /// every AP so that `E{‖x_m‖²} = ρ_d` holds with equality.
    BudgetScaled,
}

/// Large-scale model of the AP→RIS and RIS→EU hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisLinkModel {
    /// Line-of-sight free-space hop, per-unit-area gain `1/(4πd²)`.
    FreeSpace,
    /// Three-slope model (no shadowing) converted to a per-unit-area gain.
    ThreeSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// M
    pub num_aps: usize,
    /// L
    pub antennas_per_ap: usize,
    /// K
    pub num_info_users: usize,
    /// J
    pub num_energy_users: usize,
    /// N_H, elements per RIS row.
    pub ris_elements_h: usize,
    /// N_V, elements per RIS column.
    pub ris_elements_v: usize,
    /// τ_c
    pub coherence_symbols: usize,
    /// τ; `None` means K + J.
    pub pilot_symbols: Option<usize>,
    pub pilot_power_w: f64,
    pub downlink_power_w: f64,
    /// σ_n² in Watts.
    pub noise_power_w: f64,
    /// ξ (1/W)
    pub eh_xi: f64,
    /// χ (W)
    pub eh_chi: f64,
    /// φ, maximum DC output (W)
    pub eh_phi: f64,
    pub carrier_freq_hz: f64,
    /// d_H; `None` means λ/4.
    pub element_width_m: Option<f64>,
    /// d_V; `None` means λ/4.
    pub element_height_m: Option<f64>,
    pub area_side_m: f64,
    pub ap_height_m: f64,
    pub ris_height_m: f64,
    pub user_height_m: f64,
    pub shadow_sigma_db: f64,
    pub pathloss_d0_m: f64,
    pub pathloss_d1_m: f64,
    /// Ground projection of the RIS.
    pub ris_x_m: f64,
    pub ris_y_m: f64,
    /// Distance from the RIS ground projection to the centre of the EU disc.
    pub eu_cluster_offset_m: f64,
    pub eu_cluster_radius_m: f64,
    pub ris_link_model: RisLinkModel,
    /// Fraction of APs operating as E-APs.
    pub e_fraction: f64,
    pub power_rule: PowerRule,
    /// Small-scale draws averaged by the heuristic scattering design.
    pub heuristic_realizations: usize,
    /// Converts `Watt × symbol` into Joules.
    pub symbol_duration_s: f64,
    /// Relative eigenvalue clamp for covariance factors.
    pub clamp_tol: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 12,
            antennas_per_ap: 8,
            num_info_users: 3,
            num_energy_users: 5,
            ris_elements_h: 4,
            ris_elements_v: 4,
            coherence_symbols: 200,
            pilot_symbols: None,
            pilot_power_w: 0.2,
            downlink_power_w: 1.0,
            noise_power_w: 10f64.powf(-12.2),
            eh_xi: 150.0,
            eh_chi: 0.014,
            eh_phi: 0.024,
            carrier_freq_hz: 1.9e9,
            element_width_m: None,
            element_height_m: None,
            area_side_m: 1000.0,
            ap_height_m: 15.0,
            ris_height_m: 30.0,
            user_height_m: 1.65,
            shadow_sigma_db: 8.0,
            pathloss_d0_m: 10.0,
            pathloss_d1_m: 50.0,
            ris_x_m: 500.0,
            ris_y_m: 500.0,
            eu_cluster_offset_m: 20.0,
            eu_cluster_radius_m: 50.0,
            ris_link_model: RisLinkModel::FreeSpace,
            e_fraction: 0.5,
            power_rule: PowerRule::BudgetScaled,
            heuristic_realizations: 100,
            symbol_duration_s: 1.0,
            clamp_tol: 1e-12,
        }
    }
}

/// Short symbols accepted in place of field names.
const KEY_ALIASES: &[(&str, &str)] = &[
    ("M", "num_aps"),
    ("L", "antennas_per_ap"),
    ("K", "num_info_users"),
    ("J", "num_energy_users"),
    ("N_H", "ris_elements_h"),
    ("N_V", "ris_elements_v"),
    ("tau_c", "coherence_symbols"),
    ("tau", "pilot_symbols"),
    ("noise_power", "noise_power_w"),
    ("carrier_freq", "carrier_freq_hz"),
    ("d_H", "element_width_m"),
    ("d_V", "element_height_m"),
    ("area_side", "area_side_m"),
];

fn canonical_key(key: &str) -> &str {
    KEY_ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, canon)| *canon)
        .unwrap_or(key)
}

/// Defaults with `overrides` applied, validated.
pub fn build_config(overrides: &Map<String, Value>) -> Result<SystemConfig> {
    apply_overrides(&SystemConfig::default(), overrides)
}

/// `base` with `overrides` applied, validated.
pub fn apply_overrides(base: &SystemConfig, overrides: &Map<String, Value>) -> Result<SystemConfig> {
    let Value::Object(mut merged) = serde_json::to_value(base)? else {
        unreachable!("config serializes to an object");
    };
    for (key, value) in overrides {
        let canon = canonical_key(key);
        if !merged.contains_key(canon) {
            return Err(Error::UnknownKey(key.clone()));
        }
        merged.insert(canon.to_string(), value.clone());
    }
    let config: SystemConfig = serde_json::from_value(Value::Object(merged))?;
    config.validate()?;
    Ok(config)
}

impl SystemConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        match serde_json::from_str::<Value>(text)? {
            Value::Object(map) => build_config(&map),
            _ => Err(Error::Config("configuration document must be a JSON object".into())),
        }
    }

    /// N = N_H·N_V
    pub fn num_elements(&self) -> usize {
        self.ris_elements_h * self.ris_elements_v
    }

    pub fn num_users(&self) -> usize {
        self.num_info_users + self.num_energy_users
    }

    /// τ
    pub fn tau(&self) -> usize {
        self.pilot_symbols.unwrap_or(self.num_users())
    }

    /// τ_c − τ
    pub fn downlink_symbols(&self) -> usize {
        self.coherence_symbols.saturating_sub(self.tau())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn d_h(&self) -> f64 {
        self.element_width_m.unwrap_or(self.wavelength() / 4.0)
    }

    pub fn d_v(&self) -> f64 {
        self.element_height_m.unwrap_or(self.wavelength() / 4.0)
    }

    /// ρ_u, pilot SNR normalized by the noise power.
    pub fn rho_u(&self) -> f64 {
        self.pilot_power_w / self.noise_power_w
    }

    /// ρ_d, downlink SNR normalized by the noise power.
    pub fn rho_d(&self) -> f64 {
        self.downlink_power_w / self.noise_power_w
    }

    /// ν = 1/(1 + exp(ξχ)), the zero-input offset of the logistic rectifier.
    pub fn eh_nu(&self) -> f64 {
        1.0 / (1.0 + (self.eh_xi * self.eh_chi).exp())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let (m, l, k, j) = (
            self.num_aps,
            self.antennas_per_ap,
            self.num_info_users,
            self.num_energy_users,
        );
        if m == 0 || l == 0 {
            return fail(format!("M >= 1 and L >= 1 (got M={m}, L={l})"));
        }
        if m * l <= k + j {
            return fail(format!("M*L > K+J (got {} <= {})", m * l, k + j));
        }
        if self.ris_elements_h == 0 || self.ris_elements_v == 0 {
            return fail("N_H >= 1 and N_V >= 1".into());
        }
        let tau = self.tau();
        if tau < k + j {
            return fail(format!("tau >= K+J (got tau={tau}, K+J={})", k + j));
        }
        if tau >= self.coherence_symbols {
            return fail(format!(
                "tau < tau_c (got tau={tau}, tau_c={})",
                self.coherence_symbols
            ));
        }
        let positive = [
            ("pilot_power_w", self.pilot_power_w),
            ("downlink_power_w", self.downlink_power_w),
            ("noise_power_w", self.noise_power_w),
            ("eh_xi", self.eh_xi),
            ("eh_chi", self.eh_chi),
            ("eh_phi", self.eh_phi),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("element_width_m", self.d_h()),
            ("element_height_m", self.d_v()),
            ("area_side_m", self.area_side_m),
            ("pathloss_d0_m", self.pathloss_d0_m),
            ("symbol_duration_s", self.symbol_duration_s),
            ("clamp_tol", self.clamp_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} > 0 (got {v})"));
            }
        }
        let non_negative = [
            ("ap_height_m", self.ap_height_m),
            ("ris_height_m", self.ris_height_m),
            ("user_height_m", self.user_height_m),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("eu_cluster_offset_m", self.eu_cluster_offset_m),
            ("eu_cluster_radius_m", self.eu_cluster_radius_m),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} >= 0 (got {v})"));
            }
        }
        if self.pathloss_d1_m <= self.pathloss_d0_m {
            return fail("pathloss_d0_m < pathloss_d1_m".into());
        }
        if !(self.e_fraction > 0.0 && self.e_fraction < 1.0) {
            return fail(format!("0 < e_fraction < 1 (got {})", self.e_fraction));
        }
        if self.heuristic_realizations == 0 {
            return fail("heuristic_realizations >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn overrides(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn defaults_match_reference_scenario() {
        let c = build_config(&Map::new()).unwrap();
        assert_eq!(c.coherence_symbols, 200);
        assert_eq!(c.tau(), c.num_users());
        assert!((c.noise_power_w - 10f64.powf(-12.2)).abs() < 1e-25);
        assert!((c.rho_d() - 1.0 / 10f64.powf(-12.2)).abs() / c.rho_d() < 1e-12);
        assert!((c.rho_u() - 0.2 / 10f64.powf(-12.2)).abs() / c.rho_u() < 1e-12);
        assert!((c.d_h() - c.wavelength() / 4.0).abs() < 1e-15);
        assert_eq!(c.num_elements(), 16);
    }

    #[test]
    fn pilot_length_follows_user_count() {
        let c = build_config(&overrides(json!({"K": 3, "J": 5}))).unwrap();
        assert_eq!(c.tau(), 8);
    }

    #[test]
    fn nu_matches_direct_evaluation() {
        let c = SystemConfig::default();
        assert!((c.eh_nu() - 1.0 / (1.0 + 2.1f64.exp())).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = build_config(&overrides(json!({"num_satellites": 3}))).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(ref k) if k == "num_satellites"));
    }

    #[test]
    fn short_pilot_is_rejected() {
        let err = build_config(&overrides(json!({"K": 3, "J": 5, "tau": 6}))).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("tau >= K+J"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn antenna_budget_is_checked() {
        let err = build_config(&overrides(json!({"M": 1, "L": 4, "K": 3, "J": 2}))).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("M*L > K+J")));
    }

    #[test]
    fn json_document_round_trips() {
        let c = build_config(&overrides(json!({"M": 6, "L": 16}))).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SystemConfig::from_json_str(&text).unwrap(), c);
    }
}
