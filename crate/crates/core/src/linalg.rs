//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on dynamically sized matrices; the problem sizes in
//! this crate are tiny (a handful of antennas) so clarity wins over blocking.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub const LN2: f64 = std::f64::consts::LN_2;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn real(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * real(0.5)
}

/// Squared Frobenius norm.
pub fn frob2(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Real part of the trace.
pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Natural-log determinant of a Hermitian positive-definite matrix via Cholesky.
///
/// Returns `None` when the factorization fails (matrix not numerically PD).
pub fn logdet_hpd(a: &CMat) -> Option<f64> {
    if a.nrows() == 0 {
        return Some(0.0);
    }
    let chol = hermitian_part(a).cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)].re;
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn inverse_hpd(a: &CMat) -> Option<CMat> {
    let chol = hermitian_part(a).cholesky()?;
    Some(hermitian_part(&chol.inverse()))
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_hpd(a: &CMat, b: &CMat) -> Option<CMat> {
    let chol = hermitian_part(a).cholesky()?;
    Some(chol.solve(b))
}

/// General square inverse (LU).
pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Hermitian eigendecomposition, eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub vectors: CMat,
    pub values: Vec<f64>,
}

impl HermEig {
    pub fn new(a: &CMat) -> Self {
        let n = a.nrows();
        let eig = hermitian_part(a).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut vectors = CMat::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
            values.push(eig.eigenvalues[src]);
        }
        Self { vectors, values }
    }

    /// `V f(Λ) Vᴴ` for a scalar map `f` applied to the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = real(f(self.values[j]));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|x| x)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Orthonormal basis of the column space of `a`, truncated at singular values
/// below `rel_cutoff * σ_max`. Returns an `nrows × r` matrix (`r` may be 0).
pub fn column_space_basis(a: &CMat, rel_cutoff: f64) -> CMat {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMat::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_cutoff * smax)
        .collect();
    let mut basis = CMat::zeros(rows, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

/// Right singular vectors of `a` ordered by decreasing singular value, together
/// with the singular values. Only `min(rows, cols)` vectors are returned.
pub fn right_singular(a: &CMat) -> (CMat, Vec<f64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested Vᴴ");
    let n = svd.singular_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut v = CMat::zeros(a.ncols(), n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let row = v_t.row(src).adjoint();
        v.set_column(dst, &row);
        s.push(svd.singular_values[src]);
    }
    (v, s)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().cloned().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// One circularly-symmetric complex Gaussian sample with variance `var`.
pub fn cn_sample<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(s * re, s * im)
}

/// Matrix with i.i.d. CN(0, var) entries, filled row-major.
pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = cn_sample(rng, var);
        }
    }
    m
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CMat {
    cn_matrix(rng, n, 1, var)
}

/// Horizontal concatenation of equally tall blocks.
pub fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row mismatch");
        out.view_mut((0, off), (rows, b.ncols())).copy_from(*b);
        off += b.ncols();
    }
    out
}

/// Vertical concatenation of equally wide blocks.
pub fn vcat(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vcat: column mismatch");
        out.view_mut((off, 0), (b.nrows(), cols)).copy_from(*b);
        off += b.nrows();
    }
    out
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx ≤ budget}`.
pub fn project_capped_simplex(v: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    // Project onto Σx = budget, x ≥ 0 by sorting for the shift.
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - budget) / (i + 1) as f64;
        if s - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
