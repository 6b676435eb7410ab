//! RIS spatial correlation and small-scale channel sampling.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_residual, sample_cn_matrix, sample_cn_vector, to_complex, trace, CMat, CVec, LinkTable, C64};
use crate::topology::NetworkRealization;

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Element locations, horizontal index running fastest.
pub fn element_positions(n_h: usize, n_v: usize, d_h: f64, d_v: f64) -> Vec<[f64; 3]> {
    (0..n_h * n_v)
        .map(|n| [0.0, (n % n_h) as f64 * d_h, (n / n_h) as f64 * d_v])
        .collect()
}

pub fn ris_correlation_matrix(n_h: usize, n_v: usize, d_h: f64, d_v: f64, lambda: f64) -> DMatrix<f64> {
    let u = element_positions(n_h, n_v, d_h, d_v);
    let n = u.len();
    let mut r = DMatrix::identity(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let d = crate::topology::distance(&u[a], &u[b]);
            let v = sinc(2.0 * d / lambda);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    r
}

/// Returns `S` (N×rank) with `S·Sᴴ ≈ Σ`, dropping eigenvalues below
/// `clamp_tol` times the largest one.
pub fn covariance_factor(sigma: &CMat, clamp_tol: f64) -> Result<CMat> {
    crate::linalg::ensure_square(sigma)?;
    let res = hermitian_residual(sigma);
    if res > clamp_tol.max(1e-14) {
        return Err(Error::NotHermitian(res));
    }
    let n = sigma.nrows();
    if n == 0 || sigma.norm() == 0.0 {
        return Ok(CMat::zeros(n, 0));
    }
    let sym = (sigma + sigma.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > clamp_tol * max).collect();
    let mut s = CMat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        s.set_column(c, &(eig.eigenvectors.column(i) * C64::new(scale, 0.0)));
    }
    Ok(s)
}

/// RIS correlation shared by every hop, with per-AP and per-EU scalings.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    r: DMatrix<f64>,
    factor: CMat,
    /// `α_m·d_H·d_V` for each AP.
    pub omega_scale: Vec<f64>,
    /// `α_j·d_H·d_V` for each EU.
    pub psi_scale: Vec<f64>,
}

impl CorrelationModel {
    pub fn new(r: DMatrix<f64>, omega_scale: Vec<f64>, psi_scale: Vec<f64>, clamp_tol: f64) -> Result<Self> {
        let factor = covariance_factor(&to_complex(&r), clamp_tol)?;
        Ok(Self {
            r,
            factor,
            omega_scale,
            psi_scale,
        })
    }

    pub fn from_network(config: &SystemConfig, net: &NetworkRealization) -> Result<Self> {
        let r = ris_correlation_matrix(
            config.ris_elements_h,
            config.ris_elements_v,
            config.d_h(),
            config.d_v(),
            config.wavelength(),
        );
        let area = config.d_h() * config.d_v();
        Self::new(
            r,
            net.alpha_ap.iter().map(|a| a * area).collect(),
            net.alpha_eu.iter().map(|a| a * area).collect(),
            config.clamp_tol,
        )
    }

    pub fn num_elements(&self) -> usize {
        self.r.nrows()
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn r_complex(&self) -> CMat {
        to_complex(&self.r)
    }

    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    pub fn omega(&self, m: usize) -> CMat {
        to_complex(&(&self.r * self.omega_scale[m]))
    }

    pub fn psi(&self, j: usize) -> CMat {
        to_complex(&(&self.r * self.psi_scale[j]))
    }

    /// Draws `√scale·S·X` with `X` i.i.d. CN(0,1) of `cols` columns.
    pub fn sample<R: Rng + ?Sized>(&self, scale: f64, cols: usize, rng: &mut R) -> CMat {
        let w = sample_cn_matrix(rng, self.factor.ncols(), cols);
        &self.factor * w * C64::new(scale.sqrt(), 0.0)
    }
}

/// All small-scale channels of one coherence block.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// `g^I_mk`, M×K.
    pub g_iu: LinkTable<CVec>,
    /// `h^E_mj`, M×J.
    pub h_eu: LinkTable<CVec>,
    /// `H_m`, N×L.
    pub ris_ap: Vec<CMat>,
    /// `z_j`.
    pub ris_eu: Vec<CVec>,
    /// `g^E_mj = h^E_mj + H_mᴴ Θ z_j`.
    pub g_eu: LinkTable<CVec>,
}

impl ChannelSet {
    /// `H^E_m`, with the direct EU channels of AP `m` as columns.
    pub fn direct_eu_matrix(&self, m: usize) -> CMat {
        self.h_eu.row_matrix(m, self.ris_ap[m].ncols())
    }

    /// `Z_m`, with the RIS→EU channels as columns.
    pub fn ris_eu_matrix(&self) -> CMat {
        let n = self.ris_ap.first().map_or(0, |h| h.nrows());
        let mut z = CMat::zeros(n, self.ris_eu.len());
        for (j, v) in self.ris_eu.iter().enumerate() {
            z.set_column(j, v);
        }
        z
    }
}

pub fn aggregate_eu_channel(h: &CVec, ris_ap: &CMat, theta: &CMat, z: &CVec) -> Result<CVec> {
    let (n, l) = ris_ap.shape();
    if h.len() != l || theta.shape() != (n, n) || z.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "h {} / H {n}x{l} / theta {:?} / z {}",
            h.len(),
            theta.shape(),
            z.len()
        )));
    }
    Ok(h + ris_ap.adjoint() * (theta * z))
}

/// Draws one [`ChannelSet`]. Passing `None` for `theta` removes the RIS.
pub fn sample_channel_set<R: Rng + ?Sized>(
    net: &NetworkRealization,
    corr: &CorrelationModel,
    theta: Option<&CMat>,
    rng: &mut R,
) -> Result<ChannelSet> {
    let (m, k, j) = (net.num_aps(), net.num_info_users(), net.num_energy_users());
    let l = net.antennas_per_ap;
    let n = corr.num_elements();
    if corr.omega_scale.len() != m || corr.psi_scale.len() != j {
        return Err(Error::DimensionMismatch(format!(
            "correlation model for {} APs / {} EUs, network has {m} / {j}",
            corr.omega_scale.len(),
            corr.psi_scale.len()
        )));
    }
    if let Some(t) = theta {
        if t.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("theta {:?}, N = {n}", t.shape())));
        }
    }
    let g_iu = LinkTable::from_fn(m, k, |a, u| sample_cn_vector(rng, l, net.beta_iu[(a, u)]));
    let h_eu = LinkTable::from_fn(m, j, |a, u| sample_cn_vector(rng, l, net.beta_eu[(a, u)]));
    let ris_ap: Vec<CMat> = (0..m).map(|a| corr.sample(corr.omega_scale[a], l, rng)).collect();
    let ris_eu: Vec<CVec> = (0..j).map(|u| corr.sample(corr.psi_scale[u], 1, rng).column(0).into_owned()).collect();
    let g_eu = match theta {
        None => h_eu.clone(),
        Some(t) => {
            let tz: Vec<CVec> = ris_eu.iter().map(|z| t * z).collect();
            LinkTable::from_fn(m, j, |a, u| &h_eu[(a, u)] + ris_ap[a].adjoint() * &tz[u])
        }
    };
    Ok(ChannelSet {
        g_iu,
        h_eu,
        ris_ap,
        ris_eu,
        g_eu,
    })
}

/// `δ = β + tr(ΘᴴΩΘΨ)`.
pub fn delta_coefficient(beta: f64, omega: &CMat, psi: &CMat, theta: &CMat) -> Result<f64> {
    let n = theta.nrows();
    if theta.shape() != (n, n) || omega.shape() != (n, n) || psi.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "omega {:?}, psi {:?}, theta {:?}",
            omega.shape(),
            psi.shape(),
            theta.shape()
        )));
    }
    let t = trace(&(theta.adjoint() * omega * theta * psi));
    Ok(beta + t.re.max(0.0))
}

/// `δ_mj` for every AP/EU pair. Since both covariances are scalings of `R`,
/// `tr(Θ̄_mj) = ω_m·ψ_j·tr(ΘᴴRΘR)`.
pub fn delta_table(net: &NetworkRealization, corr: &CorrelationModel, theta: Option<&CMat>) -> Result<DMatrix<f64>> {
    let f = match theta {
        None => 0.0,
        Some(t) => crate::scattering::scattering_objective(t, corr.r())?,
    };
    Ok(DMatrix::from_fn(net.num_aps(), net.num_energy_users(), |m, j| {
        net.beta_eu[(m, j)] + corr.omega_scale[m] * corr.psi_scale[j] * f
    }))
}
