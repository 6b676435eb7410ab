use crate::error::{Error, Result};
use crate::linalg::{sample_cn_matrix, sample_cn_vector, trace, CMat, C64};
use crate::ris_channel::{covariance_factor, delta_coefficient};
use crate::rng::Domain;

use super::{run_batched, MomentEstimate};

/// `(E‖g‖², E‖g‖⁴)` for `g = h + HᴴΘz` with `h ~ CN(0, βI_L)`, columns of
/// `H` ~ CN(0, Ω) and `z ~ CN(0, Ψ)`:
/// `m2 = Lδ`, `m4 = L(L+1)(δ² + tr(Θ̄²))`, `Θ̄ = ΘᴴΩΘΨ`.
pub fn channel_moments_closed_form(beta: f64, omega: &CMat, psi: &CMat, theta: &CMat, l: usize) -> Result<(f64, f64)> {
    let delta = delta_coefficient(beta, omega, psi, theta)?;
    let bar = theta.adjoint() * omega * theta * psi;
    let t2 = trace(&(&bar * &bar)).re;
    let l = l as f64;
    Ok((l * delta, l * (l + 1.0) * (delta * delta + t2)))
}

/// Monte Carlo `(E‖g‖², E‖g‖⁴)` over `trials` independent draws.
pub fn mc_channel_moments(
    beta: f64,
    omega: &CMat,
    psi: &CMat,
    theta: &CMat,
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<(MomentEstimate, MomentEstimate)> {
    let n = theta.nrows();
    if omega.shape() != (n, n) || psi.shape() != (n, n) || theta.ncols() != n {
        return Err(Error::DimensionMismatch("moment instance matrices".into()));
    }
    if beta < 0.0 {
        return Err(Error::NonPositive { name: "beta", value: beta });
    }
    let s_omega = covariance_factor(omega, 1e-12)?;
    let s_psi = covariance_factor(psi, 1e-12)?;
    // With H = S_Ω·W and z = S_Ψ·v, HᴴΘz = Wᴴ·(S_ΩᴴΘS_Ψ)·v.
    let core = s_omega.adjoint() * theta * &s_psi;
    let sb = C64::new(beta.sqrt(), 0.0);
    let stats = run_batched(trials, seed, Domain::MomentTrials, 2, |rng, out| {
        let h = sample_cn_vector(rng, l, 1.0) * sb;
        let w = sample_cn_matrix(rng, core.nrows(), l);
        let v = sample_cn_vector(rng, core.ncols(), 1.0);
        let g = h + w.adjoint() * (&core * v);
        let p = g.norm_squared();
        out[0] = p;
        out[1] = p * p;
        Ok(())
    })?;
    Ok((stats.estimate(0), stats.estimate(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::scattering::random_scattering;

    #[test]
    fn no_ris_moments_are_chi_square() {
        let z = CMat::zeros(3, 3);
        let th = CMat::identity(3, 3);
        let (m2, m4) = channel_moments_closed_form(0.5, &z, &z, &th, 4).unwrap();
        assert!((m2 - 2.0).abs() < 1e-15 && (m4 - 20.0 * 0.25).abs() < 1e-15);
        let (a, b) = mc_channel_moments(0.5, &z, &z, &th, 4, 40_000, 1).unwrap();
        let ratio = b.mean / (a.mean * a.mean);
        assert!((ratio - 1.25).abs() < 0.03, "{ratio}");
    }

    #[test]
    fn zero_everything_gives_zero() {
        let z = CMat::zeros(2, 2);
        let (a, b) = mc_channel_moments(0.0, &z, &z, &CMat::identity(2, 2), 3, 1000, 1).unwrap();
        assert_eq!((a.mean, b.mean), (0.0, 0.0));
    }

    #[test]
    fn scalar_covariances() {
        let n = 4;
        let th = random_scattering(n, &mut substream(1, Domain::RandomTheta, 0)).theta;
        let om = CMat::identity(n, n) * C64::new(0.3, 0.0);
        let ps = CMat::identity(n, n) * C64::new(0.7, 0.0);
        let (m2, m4) = channel_moments_closed_form(1.0, &om, &ps, &th, 2).unwrap();
        let d = 1.0 + 4.0 * 0.21;
        assert!((m2 - 2.0 * d).abs() < 1e-12);
        assert!((m4 - 6.0 * (d * d + 4.0 * 0.21 * 0.21)).abs() < 1e-12);
    }
}
