use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{sample_cn_matrix, trace, CMat, C64};
use crate::ris_channel::covariance_factor;
use crate::rng::Domain;

use super::run_batched;

/// Outcome of comparing `E{XᴴMXXᴴNX}` against its diagonal closed form.
#[derive(Debug, Clone)]
pub struct QuarticFormReport {
    /// `L·tr(MR̄NR̄) + tr(R̄M)·tr(R̄N)`.
    pub closed_diagonal: C64,
    pub mc: CMat,
    /// Standard error of each complex entry, `√(se_re² + se_im²)`.
    pub std_error: DMatrix<f64>,
    pub max_offdiag: f64,
    /// Largest `|entry|/se` over off-diagonal entries.
    pub max_offdiag_z: f64,
    /// Largest relative error over diagonal entries.
    pub diag_rel_error: f64,
    pub trials: usize,
}

pub fn quartic_form_closed_form(m: &CMat, n: &CMat, rbar: &CMat, l: usize) -> C64 {
    trace(&(m * rbar * n * rbar)) * C64::new(l as f64, 0.0) + trace(&(rbar * m)) * trace(&(rbar * n))
}

/// Monte Carlo check of the identity over `X` (size × L) with i.i.d.
/// CN(0, R̄) columns.
pub fn quartic_form_check(m: &CMat, n: &CMat, rbar: &CMat, l: usize, trials: usize, seed: u64) -> Result<QuarticFormReport> {
    let d = rbar.nrows();
    if m.shape() != (d, d) || n.shape() != (d, d) || rbar.ncols() != d {
        return Err(Error::DimensionMismatch("quartic form matrices must share one square size".into()));
    }
    let s = covariance_factor(rbar, 1e-12)?;
    let stats = run_batched(trials, seed, Domain::QuarticTrials, 2 * l * l, |rng, out| {
        let x = &s * sample_cn_matrix(rng, s.ncols(), l);
        let xh = x.adjoint();
        let p = &xh * m * &x * &xh * n * &x;
        for c in 0..l {
            for r in 0..l {
                let i = 2 * (c * l + r);
                out[i] = p[(r, c)].re;
                out[i + 1] = p[(r, c)].im;
            }
        }
        Ok(())
    })?;
    let closed = quartic_form_closed_form(m, n, rbar, l);
    let mut mc = CMat::zeros(l, l);
    let mut se = DMatrix::zeros(l, l);
    let (mut max_off, mut max_z, mut diag_err) = (0.0f64, 0.0f64, 0.0f64);
    let scale = if closed.norm() > 0.0 { closed.norm() } else { 1.0 };
    for c in 0..l {
        for r in 0..l {
            let i = 2 * (c * l + r);
            let re = stats.estimate(i);
            let im = stats.estimate(i + 1);
            let v = C64::new(re.mean, im.mean);
            mc[(r, c)] = v;
            se[(r, c)] = re.std_error.hypot(im.std_error);
            if r == c {
                diag_err = diag_err.max((v - closed).norm() / scale);
            } else {
                max_off = max_off.max(v.norm());
                if se[(r, c)] > 0.0 {
                    max_z = max_z.max(v.norm() / se[(r, c)]);
                }
            }
        }
    }
    Ok(QuarticFormReport {
        closed_diagonal: closed,
        mc,
        std_error: se,
        max_offdiag: max_off,
        max_offdiag_z: max_z,
        diag_rel_error: diag_err,
        trials,
    })
}
