//! Complex matrix helpers shared by the channel, estimation and precoding
//! modules.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, DVector, QR};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative tolerance used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// One draw of CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Vector with i.i.d. CN(0, variance) entries.
pub fn sample_cn_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVec {
    let s = variance.sqrt();
    CVec::from_fn(len, |_, _| complex_normal(rng) * s)
}

/// Matrix with i.i.d. CN(0, 1) entries, filled column by column.
pub fn sample_cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `‖A − Aᴴ‖_F / ‖A‖_F`, zero for the zero matrix.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

pub fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Column-space factorization of a tall matrix `G = Q·R` with `Q` having
/// orthonormal columns, used in place of an explicit Gram inverse.
#[derive(Debug, Clone)]
pub struct ColumnSpace {
    q: CMat,
    r: CMat,
}

impl ColumnSpace {
    pub fn new(g: &CMat) -> Result<Self> {
        let (rows, cols) = g.shape();
        if cols > rows {
            return Err(Error::RankDeficient(format!(
                "{cols} columns cannot be independent in dimension {rows}"
            )));
        }
        if cols == 0 {
            return Ok(Self {
                q: CMat::zeros(rows, 0),
                r: CMat::zeros(0, 0),
            });
        }
        let qr = QR::new(g.clone());
        let q = qr.q();
        let r = qr.r();
        let diag: Vec<f64> = (0..cols).map(|i| r[(i, i)].norm()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 || diag.iter().any(|&d| d <= RANK_TOL * max) {
            return Err(Error::RankDeficient(format!(
                "column space of a {rows}x{cols} matrix"
            )));
        }
        Ok(Self { q, r })
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    /// `I − G(GᴴG)⁻¹Gᴴ = I − QQᴴ`.
    pub fn orthogonal_projector(&self) -> CMat {
        let n = self.q.nrows();
        CMat::identity(n, n) - &self.q * self.q.adjoint()
    }

    /// `B·v` without forming `B`.
    pub fn project_out(&self, v: &CVec) -> CVec {
        v - &self.q * (self.q.adjoint() * v)
    }

    /// Column `k` of `G(GᴴG)⁻¹ = Q·R⁻ᴴ`.
    pub fn zf_direction(&self, k: usize) -> CVec {
        let mut e = CVec::zeros(self.dim());
        e[k] = C64::new(1.0, 0.0);
        let y = self
            .r
            .adjoint()
            .solve_lower_triangular(&e)
            .expect("triangular factor checked non-singular");
        &self.q * y
    }
}

/// Dense `rows × cols` table indexed by `(ap, user)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> LinkTable<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn try_from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<T>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c)?);
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl LinkTable<CVec> {
    /// Stacks row `r` as the columns of an `L × cols` matrix.
    pub fn row_matrix(&self, r: usize, len: usize) -> CMat {
        let mut m = CMat::zeros(len, self.cols);
        for (c, v) in self.row(r).iter().enumerate() {
            m.set_column(c, v);
        }
        m
    }
}

impl<T> Index<(usize, usize)> for LinkTable<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        assert!(r < self.rows && c < self.cols, "link index out of range");
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for LinkTable<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        assert!(r < self.rows && c < self.cols, "link index out of range");
        &mut self.data[r * self.cols + c]
    }
}
