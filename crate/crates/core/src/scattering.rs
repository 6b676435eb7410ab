//! BD-RIS scattering matrices: random, heuristic and the no-RIS baseline.
//!
//! Every non-trivial design is symmetric and unitary.

use std::path::Path;

use nalgebra::{DMatrix, SVD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{ensure_square, to_complex, trace, CMat, C64, RANK_TOL};
use crate::ris_channel::{sample_channel_set, CorrelationModel};
use crate::topology::{ApMode, NetworkRealization};

pub const SYMMETRY_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Heuristic,
    Random,
    None,
}

impl Design {
    pub fn as_str(self) -> &'static str {
        match self {
            Design::Heuristic => "heuristic",
            Design::Random => "random",
            Design::None => "none",
        }
    }
}

impl std::str::FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "heuristic" => Ok(Design::Heuristic),
            "random" => Ok(Design::Random),
            "none" => Ok(Design::None),
            other => Err(Error::Config(format!("unknown design '{other}'"))),
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Residuals of the two BD-RIS constraints, in absolute Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `‖Θ − Θᵀ‖_F`.
    pub symmetry: f64,
    /// `‖ΘᴴΘ − I‖_F`.
    pub unitarity: f64,
    /// `‖Θ‖_F`.
    pub norm: f64,
    pub passed: bool,
}

/// Symmetry is checked relative to `‖Θ‖_F`, unitarity in absolute terms.
pub fn validate_scattering(theta: &CMat, tol_sym: f64, tol_unit: f64) -> Result<ResidualReport> {
    let n = ensure_square(theta)?;
    let symmetry = (theta - theta.transpose()).norm();
    let unitarity = (theta.adjoint() * theta - CMat::identity(n, n)).norm();
    let norm = theta.norm();
    Ok(ResidualReport {
        symmetry,
        unitarity,
        norm,
        passed: symmetry <= tol_sym * norm && unitarity <= tol_unit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub theta: CMat,
    pub design: Design,
    pub symmetry_residual: f64,
    pub unitarity_residual: f64,
}

impl ScatteringMatrix {
    /// Wraps `theta` and records its residuals. Non-`None` designs must pass
    /// the default tolerances.
    pub fn new(theta: CMat, design: Design) -> Result<Self> {
        let rep = validate_scattering(&theta, SYMMETRY_TOL, UNITARITY_TOL)?;
        if design != Design::None && !rep.passed {
            return Err(Error::Config(format!(
                "{design} scattering matrix violates constraints (symmetry {:.3e}, unitarity {:.3e})",
                rep.symmetry, rep.unitarity
            )));
        }
        Ok(Self {
            theta,
            design,
            symmetry_residual: rep.symmetry,
            unitarity_residual: rep.unitarity,
        })
    }

    /// No RIS: an all-zero matrix standing in for the absent surface.
    pub fn none(n: usize) -> Self {
        Self {
            theta: CMat::zeros(n, n),
            design: Design::None,
            symmetry_residual: 0.0,
            unitarity_residual: 0.0,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.theta.nrows()
    }

    /// The matrix to plug into channel aggregation, `None` without a RIS.
    pub fn active(&self) -> Option<&CMat> {
        match self.design {
            Design::None => None,
            _ => Some(&self.theta),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let dump = ThetaDump::from(self);
        std::fs::write(path, serde_json::to_string_pretty(&dump)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let dump: ThetaDump = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        dump.into_matrix()
    }
}

/// Row-major dump with interleaved real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaDump {
    pub n: usize,
    pub design: Design,
    pub data: Vec<f64>,
}

impl From<&ScatteringMatrix> for ThetaDump {
    fn from(s: &ScatteringMatrix) -> Self {
        let n = s.num_elements();
        let mut data = Vec::with_capacity(2 * n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(s.theta[(r, c)].re);
                data.push(s.theta[(r, c)].im);
            }
        }
        Self {
            n,
            design: s.design,
            data,
        }
    }
}

impl ThetaDump {
    pub fn into_matrix(self) -> Result<ScatteringMatrix> {
        if self.data.len() != 2 * self.n * self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{} matrix",
                self.data.len(),
                self.n,
                self.n
            )));
        }
        let theta = CMat::from_fn(self.n, self.n, |r, c| {
            let i = 2 * (r * self.n + c);
            C64::new(self.data[i], self.data[i + 1])
        });
        ScatteringMatrix::new(theta, self.design)
    }
}

/// Unitary DFT matrix, entries `ω^{nn'}/√N`.
pub fn dft(n: usize) -> CMat {
    let s = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |a, b| {
        let k = ((a * b) % n) as f64;
        C64::from_polar(s, -2.0 * std::f64::consts::PI * k / n as f64)
    })
}

/// `D·F·D` for the given diagonal phases.
pub fn dft_with_phases(phases: &[f64]) -> CMat {
    let n = phases.len();
    let f = dft(n);
    CMat::from_fn(n, n, |a, b| C64::from_polar(1.0, phases[a] + phases[b]) * f[(a, b)])
}

/// Uniform phases on `[0, 2π)` followed by [`dft_with_phases`]; returns the
/// phases alongside the matrix.
pub fn random_scattering_with_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (ScatteringMatrix, Vec<f64>) {
    let phases: Vec<f64> = (0..n).map(|_| 2.0 * std::f64::consts::PI * rng.random::<f64>()).collect();
    let theta = dft_with_phases(&phases);
    let s = ScatteringMatrix::new(theta, Design::Random).expect("DFD is symmetric and unitary");
    (s, phases)
}

pub fn random_scattering<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ScatteringMatrix {
    random_scattering_with_phases(n, rng).0
}

/// `Re tr(ΘᴴRΘR)`.
pub fn scattering_objective(theta: &CMat, r: &DMatrix<f64>) -> Result<f64> {
    let n = ensure_square(theta)?;
    if r.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("theta {n}x{n}, R {:?}", r.shape())));
    }
    let rc = to_complex(r);
    Ok(trace(&(theta.adjoint() * &rc * theta * &rc)).re)
}

/// Numerical rank with the crate-wide relative threshold.
pub fn numerical_rank(singular: &[f64]) -> usize {
    let max = singular.iter().cloned().fold(0.0, f64::max);
    singular.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Symmetric-unitary projection of a symmetric synthesis matrix:
/// `Θ = [U^r, conj(V^{N−r})]·Vᴴ`. Returns `(Θ, r)`.
pub fn symmetric_unitary_projection(f: &CMat, ap: usize) -> Result<(CMat, usize)> {
    let n = ensure_square(f)?;
    if f.norm() == 0.0 {
        return Err(Error::DegenerateSynthesis(ap));
    }
    let svd = SVD::new(f.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᴴ");
    let v = v_t.adjoint();
    // nalgebra does not sort singular values.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let rank = numerical_rank(&sorted);
    let mut u_hat = CMat::zeros(n, n);
    let mut v_sorted = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        v_sorted.set_column(c, &v.column(i));
        if c < rank {
            u_hat.set_column(c, &u.column(i));
        } else {
            u_hat.set_column(c, &v.column(i).map(|x| x.conj()));
        }
    }
    Ok((u_hat * v_sorted.adjoint(), rank))
}

/// Intermediate quantities of the heuristic design, indexed by AP.
#[derive(Debug, Clone)]
pub struct HeuristicState {
    /// Symmetrized average synthesis matrix, `None` for I-APs.
    pub sym_f: Vec<Option<CMat>>,
    pub ranks: Vec<Option<usize>>,
    pub candidates: Vec<Option<CMat>>,
    pub objectives: Vec<Option<f64>>,
    pub selected: usize,
}

impl HeuristicState {
    pub fn selected_theta(&self) -> &CMat {
        self.candidates[self.selected].as_ref().expect("selected AP has a candidate")
    }
}

/// Builds candidates from per-AP symmetric synthesis matrices and picks the
/// one with the largest objective, lowest index on ties.
pub fn select_candidate(sym_f: Vec<Option<CMat>>, r: &DMatrix<f64>) -> Result<HeuristicState> {
    let mut ranks = Vec::with_capacity(sym_f.len());
    let mut candidates = Vec::with_capacity(sym_f.len());
    let mut objectives = Vec::with_capacity(sym_f.len());
    let mut best: Option<(usize, f64)> = None;
    for (m, f) in sym_f.iter().enumerate() {
        match f {
            None => {
                ranks.push(None);
                candidates.push(None);
                objectives.push(None);
            }
            Some(f) => {
                let (theta, rank) = symmetric_unitary_projection(f, m)?;
                let obj = scattering_objective(&theta, r)?;
                if best.is_none_or(|(_, b)| obj > b) {
                    best = Some((m, obj));
                }
                ranks.push(Some(rank));
                candidates.push(Some(theta));
                objectives.push(Some(obj));
            }
        }
    }
    let (selected, _) = best.ok_or_else(|| Error::Config("heuristic design needs at least one E-AP".into()))?;
    Ok(HeuristicState {
        sym_f,
        ranks,
        candidates,
        objectives,
        selected,
    })
}

/// Averages `(F_m + F_mᵀ)/2` with `F_m = H_m·H^E_m·Zᴴ` over `n_realizations`
/// small-scale draws for every E-AP, then projects and selects.
pub fn heuristic_state<R: Rng + ?Sized>(
    net: &NetworkRealization,
    corr: &CorrelationModel,
    n_realizations: usize,
    rng: &mut R,
) -> Result<HeuristicState> {
    if n_realizations == 0 {
        return Err(Error::Config("heuristic design needs at least one realization".into()));
    }
    let n = corr.num_elements();
    let energy: Vec<bool> = net.modes.iter().map(|m| *m == ApMode::Energy).collect();
    if !energy.iter().any(|&e| e) {
        return Err(Error::Config("heuristic design needs at least one E-AP".into()));
    }
    let mut acc: Vec<Option<CMat>> = energy.iter().map(|&e| e.then(|| CMat::zeros(n, n))).collect();
    for _ in 0..n_realizations {
        let ch = sample_channel_set(net, corr, None, rng)?;
        let z_h = ch.ris_eu_matrix().adjoint();
        for (m, slot) in acc.iter_mut().enumerate() {
            if let Some(sum) = slot {
                let f = &ch.ris_ap[m] * ch.direct_eu_matrix(m) * &z_h;
                *sum += (&f + f.transpose()) * C64::new(0.5, 0.0);
            }
        }
    }
    let scale = C64::new(1.0 / n_realizations as f64, 0.0);
    let sym_f = acc.into_iter().map(|s| s.map(|s| s * scale)).collect();
    select_candidate(sym_f, corr.r())
}

pub fn heuristic_scattering<R: Rng + ?Sized>(
    net: &NetworkRealization,
    corr: &CorrelationModel,
    config: &SystemConfig,
    rng: &mut R,
) -> Result<ScatteringMatrix> {
    let state = heuristic_state(net, corr, config.heuristic_realizations, rng)?;
    ScatteringMatrix::new(state.selected_theta().clone(), Design::Heuristic)
}
