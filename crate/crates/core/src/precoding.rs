//! Partial zero-forcing and protective MRT precoders, power control and
//! per-AP transmit signals.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::PowerRule;
use crate::error::{Error, Result};
use crate::estimation::EstimateSet;
use crate::linalg::{CMat, CVec, ColumnSpace, LinkTable, C64, RANK_TOL};

/// `B = I − Ĝ(ĜᴴĜ)⁻¹Ĝᴴ`.
pub fn orthogonal_projection(ghat_iu: &CMat) -> Result<CMat> {
    Ok(ColumnSpace::new(ghat_iu)?.orthogonal_projector())
}

/// `((α^PZF)², (α^PMRT)²) = ((L−K)γ, 1/((L−K)γ))`.
pub fn analytic_normalizers(l: usize, k: usize, gamma: f64) -> Result<(f64, f64)> {
    if l <= k {
        return Err(Error::Config(format!("L > K required (L = {l}, K = {k})")));
    }
    if !(gamma > 0.0) {
        return Err(Error::NonPositive { name: "gamma", value: gamma });
    }
    let d = (l - k) as f64 * gamma;
    Ok((d, 1.0 / d))
}

fn scaled(v: CVec, s: f64) -> CVec {
    v * C64::new(s, 0.0)
}

/// PZF precoder for column `k` of `Ĝ^I`, scaled by the analytic normalizer.
pub fn pzf_precoder(ghat_iu: &CMat, k: usize, gamma: f64) -> Result<CVec> {
    let cs = ColumnSpace::new(ghat_iu)?;
    pzf_from_space(&cs, ghat_iu.nrows(), k, gamma)
}

fn pzf_from_space(cs: &ColumnSpace, l: usize, k: usize, gamma: f64) -> Result<CVec> {
    let (a2, _) = analytic_normalizers(l, cs.dim(), gamma)?;
    Ok(scaled(cs.zf_direction(k), a2.sqrt()))
}

/// PMRT precoder `α·B·ĝ^E_j` with `K` IUs nulled by `B`.
pub fn pmrt_precoder(b: &CMat, ghat_eu: &CMat, j: usize, num_iu: usize, gamma: f64) -> Result<CVec> {
    let g = ghat_eu.column(j).into_owned();
    pmrt_from_projection(b * &g, &g, b.nrows(), num_iu, gamma, j)
}

fn pmrt_from_projection(v: CVec, g: &CVec, l: usize, k: usize, gamma: f64, j: usize) -> Result<CVec> {
    if v.norm() <= RANK_TOL * g.norm() || v.norm() == 0.0 {
        return Err(Error::DegenerateDirection(format!(
            "estimate of EU {j} lies in the IU estimate subspace"
        )));
    }
    let (_, a2) = analytic_normalizers(l, k, gamma)?;
    Ok(scaled(v, a2.sqrt()))
}

/// Rescales a vector to unit norm, the empirical alternative to the analytic
/// normalizers.
pub fn unit_norm(v: &CVec) -> CVec {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        scaled(v.clone(), 1.0 / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCoefficients {
    /// `η^I`, M×K.
    pub eta_iu: DMatrix<f64>,
    /// `η^E`, M×J.
    pub eta_eu: DMatrix<f64>,
}

impl PowerCoefficients {
    /// `E{‖x_m‖²}/ρ_d` per AP for unit-average-norm precoders.
    pub fn expected_power_ratio(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .enumerate()
            .map(|(m, &am)| am * self.eta_iu.row(m).sum() + (1.0 - am) * self.eta_eu.row(m).sum())
            .collect()
    }
}

fn inverse_row_sums(gamma: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    let mut eta = DMatrix::zeros(gamma.nrows(), gamma.ncols());
    for m in 0..gamma.nrows() {
        let s = gamma.row(m).sum();
        if gamma.ncols() > 0 && !(s > 0.0) {
            return Err(Error::NonPositive { name: which, value: s });
        }
        for c in 0..gamma.ncols() {
            eta[(m, c)] = 1.0 / s;
        }
    }
    Ok(eta)
}

/// Power-control coefficients under `rule`.
///
/// `InverseGammaSum` sets `η_m = (Σ γ_m)⁻¹`. `BudgetScaled` keeps that
/// per-user split and rescales it so each AP's average transmit power equals
/// `ρ_d` exactly.
pub fn power_control(
    gamma_iu: &DMatrix<f64>,
    gamma_eu: &DMatrix<f64>,
    a: &[f64],
    rule: PowerRule,
) -> Result<PowerCoefficients> {
    if gamma_iu.nrows() != a.len() || gamma_eu.nrows() != a.len() {
        return Err(Error::DimensionMismatch("power control tables and mode vector".into()));
    }
    let mut eta_iu = inverse_row_sums(gamma_iu, "sum of gamma_iu")?;
    let mut eta_eu = inverse_row_sums(gamma_eu, "sum of gamma_eu")?;
    if rule == PowerRule::BudgetScaled {
        for eta in [&mut eta_iu, &mut eta_eu] {
            for m in 0..eta.nrows() {
                let s = eta.row(m).sum();
                if s > 0.0 {
                    eta.row_mut(m).scale_mut(1.0 / s);
                }
            }
        }
    }
    Ok(PowerCoefficients { eta_iu, eta_eu })
}

/// Precoders of one coherence block. PZF vectors are built at I-APs and
/// PMRT vectors at E-APs; the unused ones are zero.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub w_iu: LinkTable<CVec>,
    pub w_eu: LinkTable<CVec>,
    pub alpha_pzf: DMatrix<f64>,
    pub alpha_pmrt: DMatrix<f64>,
    pub power: PowerCoefficients,
    /// Mode indicators `a_m`.
    pub a: Vec<f64>,
    spaces: Vec<ColumnSpace>,
}

impl PrecoderSet {
    /// `B_m`, formed on demand.
    pub fn projector(&self, m: usize) -> CMat {
        self.spaces[m].orthogonal_projector()
    }

    pub fn column_space(&self, m: usize) -> &ColumnSpace {
        &self.spaces[m]
    }

    /// `x_m = √(a_m ρ_d) Σ_k √η^I w^PZF x_k + √((1−a_m) ρ_d) Σ_j √η^E w^PMRT x_j`.
    pub fn transmit_vector(&self, m: usize, x_iu: &[C64], x_eu: &[C64], rho_d: f64) -> CVec {
        let l = self.w_iu.row(m).first().or(self.w_eu.row(m).first()).map_or(0, |v| v.len());
        let mut x = CVec::zeros(l);
        let am = self.a[m];
        if am > 0.0 {
            for (k, w) in self.w_iu.row(m).iter().enumerate() {
                x += w * (x_iu[k] * (am * rho_d * self.power.eta_iu[(m, k)]).sqrt());
            }
        }
        if am < 1.0 {
            for (j, w) in self.w_eu.row(m).iter().enumerate() {
                x += w * (x_eu[j] * ((1.0 - am) * rho_d * self.power.eta_eu[(m, j)]).sqrt());
            }
        }
        x
    }
}

pub fn build_precoders(est: &EstimateSet, a: &[f64], power: PowerCoefficients) -> Result<PrecoderSet> {
    let m_aps = est.ghat_iu.rows();
    let (k, j) = (est.ghat_iu.cols(), est.ghat_eu.cols());
    if a.len() != m_aps {
        return Err(Error::DimensionMismatch(format!("{} mode flags for {m_aps} APs", a.len())));
    }
    let mut spaces = Vec::with_capacity(m_aps);
    let mut w_iu = Vec::with_capacity(m_aps);
    let mut w_eu = Vec::with_capacity(m_aps);
    let mut alpha_pzf = DMatrix::zeros(m_aps, k);
    let mut alpha_pmrt = DMatrix::zeros(m_aps, j);
    for m in 0..m_aps {
        let l = est
            .ghat_iu
            .row(m)
            .first()
            .or(est.ghat_eu.row(m).first())
            .map_or(0, |v| v.len());
        let g = est.ghat_iu.row_matrix(m, l);
        let cs = ColumnSpace::new(&g)?;
        let info = a[m] > 0.0;
        let mut row_iu = Vec::with_capacity(k);
        for u in 0..k {
            let (a2, _) = analytic_normalizers(l, k, est.gamma_iu[(m, u)])?;
            alpha_pzf[(m, u)] = a2.sqrt();
            row_iu.push(if info {
                pzf_from_space(&cs, l, u, est.gamma_iu[(m, u)])?
            } else {
                CVec::zeros(l)
            });
        }
        let mut row_eu = Vec::with_capacity(j);
        for u in 0..j {
            let (_, a2) = analytic_normalizers(l, k, est.gamma_eu[(m, u)])?;
            alpha_pmrt[(m, u)] = a2.sqrt();
            row_eu.push(if a[m] < 1.0 {
                let gh = &est.ghat_eu[(m, u)];
                pmrt_from_projection(cs.project_out(gh), gh, l, k, est.gamma_eu[(m, u)], u)?
            } else {
                CVec::zeros(l)
            });
        }
        spaces.push(cs);
        w_iu.push(row_iu);
        w_eu.push(row_eu);
    }
    Ok(PrecoderSet {
        w_iu: LinkTable::from_fn(m_aps, k, |m, u| w_iu[m][u].clone()),
        w_eu: LinkTable::from_fn(m_aps, j, |m, u| w_eu[m][u].clone()),
        alpha_pzf,
        alpha_pmrt,
        power,
        a: a.to_vec(),
        spaces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_cn_matrix, sample_cn_vector};
    use crate::rng::{substream, Domain};

    #[test]
    fn projector_examples() {
        let b = orthogonal_projection(&CMat::zeros(4, 0)).unwrap();
        assert_eq!(b, CMat::identity(4, 4));
        let g = CMat::identity(5, 2);
        let b = orthogonal_projection(&g).unwrap();
        let mut d = CMat::identity(5, 5);
        d[(0, 0)] = C64::new(0.0, 0.0);
        d[(1, 1)] = C64::new(0.0, 0.0);
        assert!((b - d).norm() < 1e-14);
        let mut rng = substream(1, Domain::Instance, 0);
        let g = sample_cn_matrix(&mut rng, 6, 2);
        let b = orthogonal_projection(&g).unwrap();
        let tr: C64 = b.diagonal().iter().sum();
        assert!((tr.re - 4.0).abs() < 1e-9 && tr.im.abs() < 1e-9);
        assert!((&b * &b - &b).norm() < 1e-9);
        assert!((b.adjoint() * &g).norm() < 1e-9 * g.norm());
    }

    #[test]
    fn pzf_single_user_is_matched_direction() {
        let mut rng = substream(2, Domain::Instance, 0);
        let g = sample_cn_matrix(&mut rng, 4, 1);
        let w = pzf_precoder(&g, 0, 0.7).unwrap();
        let cos = (g.column(0).dotc(&w)).norm() / (g.norm() * w.norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pzf_orthogonal_columns_are_parallel() {
        let mut g = CMat::zeros(5, 2);
        g[(0, 0)] = C64::new(2.0, 0.0);
        g[(3, 1)] = C64::new(0.0, 1.5);
        let w = pzf_precoder(&g, 1, 1.0).unwrap();
        assert!(w[3].norm() > 0.0);
        assert!(w.iter().enumerate().all(|(i, v)| i == 3 || v.norm() < 1e-14 * w.norm()));
    }

    #[test]
    fn pzf_nulls_and_pmrt_protects() {
        let mut rng = substream(3, Domain::Instance, 0);
        let gi = sample_cn_matrix(&mut rng, 8, 3);
        for k in 0..3 {
            let w = pzf_precoder(&gi, k, 1.3).unwrap();
            for kp in 0..3 {
                let ip = gi.column(kp).dotc(&w);
                if kp == k {
                    assert!(ip.re > 0.0 && ip.im.abs() < 1e-9 * ip.re);
                } else {
                    assert!(ip.norm() < 1e-9 * gi.column(kp).norm());
                }
            }
        }
        let b = orthogonal_projection(&gi).unwrap();
        let ge = sample_cn_matrix(&mut rng, 8, 2);
        for j in 0..2 {
            let w = pmrt_precoder(&b, &ge, j, 3, 0.4).unwrap();
            for k in 0..3 {
                assert!(gi.column(k).dotc(&w).norm() < 1e-9 * gi.column(k).norm());
            }
        }
        let w = pmrt_precoder(&CMat::identity(8, 8), &ge, 0, 0, 1.0).unwrap();
        assert!((w - ge.column(0) * C64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pmrt_rejects_annihilated_estimate() {
        let mut rng = substream(4, Domain::Instance, 0);
        let gi = sample_cn_matrix(&mut rng, 6, 2);
        let b = orthogonal_projection(&gi).unwrap();
        let mut ge = CMat::zeros(6, 1);
        ge.set_column(0, &(gi.column(0) * C64::new(0.5, 0.2) + gi.column(1)));
        assert!(matches!(pmrt_precoder(&b, &ge, 0, 2, 1.0), Err(Error::DegenerateDirection(_))));
    }

    #[test]
    fn normalizer_examples() {
        assert_eq!(analytic_normalizers(3, 2, 1.0).unwrap(), (1.0, 1.0));
        assert!(analytic_normalizers(2, 2, 1.0).is_err());
    }

    #[test]
    fn power_control_examples() {
        let a = [1.0];
        let p = power_control(&DMatrix::from_element(1, 1, 2.0), &DMatrix::from_element(1, 1, 4.0), &a, PowerRule::InverseGammaSum)
            .unwrap();
        assert_eq!(p.eta_iu[(0, 0)], 0.5);
        assert_eq!(p.eta_eu[(0, 0)], 0.25);
        let g = 0.3;
        let p = power_control(&DMatrix::from_element(2, 4, g), &DMatrix::from_element(2, 3, g), &[1.0, 0.0], PowerRule::InverseGammaSum)
            .unwrap();
        assert!(p.eta_iu.iter().all(|&e| (e - 1.0 / (4.0 * g)).abs() < 1e-12));
        let p = power_control(&DMatrix::from_element(2, 4, g), &DMatrix::from_element(2, 3, g), &[1.0, 0.0], PowerRule::BudgetScaled)
            .unwrap();
        assert!(p.eta_iu.iter().all(|&e| (e - 0.25).abs() < 1e-12));
        assert!(p.expected_power_ratio(&[1.0, 0.0]).iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!(power_control(&DMatrix::zeros(1, 2), &DMatrix::from_element(1, 1, 1.0), &a, PowerRule::BudgetScaled).is_err());
    }

    #[test]
    fn transmit_vector_matches_naive_sum() {
        let mut rng = substream(5, Domain::Instance, 0);
        let (l, k, j) = (6, 2, 2);
        let est = EstimateSet {
            ghat_iu: LinkTable::from_fn(2, k, |_, _| sample_cn_vector(&mut rng, l, 1.0)),
            ghat_eu: LinkTable::from_fn(2, j, |_, _| sample_cn_vector(&mut rng, l, 1.0)),
            gamma_iu: DMatrix::from_element(2, k, 1.0),
            gamma_eu: DMatrix::from_element(2, j, 1.0),
        };
        let a = [1.0, 0.0];
        let power = power_control(&est.gamma_iu, &est.gamma_eu, &a, PowerRule::BudgetScaled).unwrap();
        let p = build_precoders(&est, &a, power).unwrap();
        let xi = [C64::new(0.3, -1.0), C64::new(0.7, 0.1)];
        let xe = [C64::new(-0.2, 0.5), C64::new(1.0, 0.0)];
        let rho = 2.5;
        for m in 0..2 {
            let x = p.transmit_vector(m, &xi, &xe, rho);
            let mut naive = CVec::zeros(l);
            for u in 0..k {
                naive += &p.w_iu[(m, u)] * (xi[u] * (a[m] * rho * p.power.eta_iu[(m, u)]).sqrt());
            }
            for u in 0..j {
                naive += &p.w_eu[(m, u)] * (xe[u] * ((1.0 - a[m]) * rho * p.power.eta_eu[(m, u)]).sqrt());
            }
            assert!((x - naive).norm() < 1e-12);
        }
        let x = p.transmit_vector(0, &xi, &[C64::new(0.0, 0.0); 2], rho);
        let x_with = p.transmit_vector(0, &xi, &xe, rho);
        assert_eq!(x, x_with);
    }

    #[test]
    fn single_user_unit_symbol() {
        let mut rng = substream(6, Domain::Instance, 0);
        let est = EstimateSet {
            ghat_iu: LinkTable::from_fn(1, 1, |_, _| sample_cn_vector(&mut rng, 3, 1.0)),
            ghat_eu: LinkTable::from_fn(1, 0, |_, _| CVec::zeros(3)),
            gamma_iu: DMatrix::from_element(1, 1, 1.0),
            gamma_eu: DMatrix::zeros(1, 0),
        };
        let power = PowerCoefficients {
            eta_iu: DMatrix::from_element(1, 1, 1.0),
            eta_eu: DMatrix::zeros(1, 0),
        };
        let p = build_precoders(&est, &[1.0], power).unwrap();
        let x = p.transmit_vector(0, &[C64::new(1.0, 0.0)], &[], 4.0);
        assert!((x - &p.w_iu[(0, 0)] * C64::new(2.0, 0.0)).norm() < 1e-12);
    }
}
