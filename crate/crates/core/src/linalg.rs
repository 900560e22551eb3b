//! Dense linear algebra: a column-major matrix, restricted least squares by
//! conjugate gradient, spectral norm by power iteration, small symmetric
//! eigenproblems, and the sensing-matrix generators.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        a
    }

    /// Builds from `rows * cols` values laid out row after row.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        let mut a = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                a.set(i, j, values[i * cols + j]);
            }
        }
        Ok(a)
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self { rows, cols: columns.len(), data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        let m = self.rows;
        &mut self.data[j * m..(j + 1) * m]
    }

    /// `A x` for a dense `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), &mut out);
            }
        }
        out
    }

    /// `A_S v` where `v[a]` multiplies column `idx[a]`.
    pub fn matvec_restricted(&self, idx: &[usize], v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(idx.len(), v.len());
        let mut out = vec![0.0; self.rows];
        for (&j, &vj) in idx.iter().zip(v) {
            axpy(vj, self.column(j), &mut out);
        }
        out
    }

    /// `Aᵀ r`.
    pub fn matvec_t(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.rows);
        (0..self.cols).map(|j| dot(self.column(j), r)).collect()
    }

    /// `A_Sᵀ r`.
    pub fn matvec_t_restricted(&self, idx: &[usize], r: &[f64]) -> Vec<f64> {
        idx.iter().map(|&j| dot(self.column(j), r)).collect()
    }

    /// `A_Sᵀ A_S`, row-major `|S| x |S|`.
    pub fn gram(&self, idx: &[usize]) -> Vec<f64> {
        let l = idx.len();
        let mut g = vec![0.0; l * l];
        for a in 0..l {
            for b in a..l {
                let v = dot(self.column(idx[a]), self.column(idx[b]));
                g[a * l + b] = v;
                g[b * l + a] = v;
            }
        }
        g
    }

    /// Raw column-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Original column norms removed by [`normalize_columns`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling(pub Vec<f64>);

/// Scales every column to unit `ℓ2` norm in place.
pub fn normalize_columns(a: &mut DenseMatrix) -> Result<ColumnScaling> {
    let mut norms = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let nrm = norm2(a.column(j));
        if !(nrm >= 1e-300 && nrm.is_finite()) {
            return Err(Error::ZeroColumn(j));
        }
        a.column_mut(j).iter_mut().for_each(|v| *v /= nrm);
        norms.push(nrm);
    }
    Ok(ColumnScaling(norms))
}

/// What "spectral norm" means when the step size is set from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralConvention {
    /// `L = σ_max(A)²`, the Lipschitz constant of `∇ ½‖Ax−y‖²`.
    #[default]
    SigmaMaxSquared,
    /// `L = σ_max(A)`.
    SigmaMax,
}

/// `σ_max(A)²` by power iteration on `AᵀA` from a fixed start vector.
///
/// Stops when `‖AᵀAv − λv‖ ≤ 1e-10 λ`, which places `λ` within that distance
/// of an eigenvalue of `AᵀA`. Returns the last estimate if that never happens.
pub fn spectral_norm_sq(a: &DenseMatrix) -> f64 {
    power_iteration(a, 1e-10, 100_000).0
}

/// [`spectral_norm_sq`] with an explicit relative tolerance and budget.
pub fn spectral_norm_sq_with(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    match power_iteration(a, tol, max_iter) {
        (lambda, None) => Ok(lambda),
        (_, Some(residual)) => Err(Error::NoConvergence { iterations: max_iter, residual }),
    }
}

/// `(λ, None)` on convergence, `(λ, Some(relative residual))` otherwise.
fn power_iteration(a: &DenseMatrix, tol: f64, max_iter: usize) -> (f64, Option<f64>) {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return (0.0, None);
    }
    let mut rng = crate::model::seeded_rng(0x5EA_5EED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    scale_to_unit(&mut v);
    let mut lambda = 0.0;
    let mut rel = f64::INFINITY;
    for _ in 0..max_iter {
        let av = a.matvec(&v);
        let w = a.matvec_t(&av);
        lambda = dot(&av, &av);
        let res: f64 = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let wn = norm2(&w);
        if wn == 0.0 {
            return (0.0, None);
        }
        v = w.into_iter().map(|x| x / wn).collect();
        rel = res / lambda;
        if res <= tol * lambda {
            let av = a.matvec(&v);
            return (dot(&av, &av).max(lambda), None);
        }
    }
    (lambda, Some(rel))
}

pub fn spectral_constant(a: &DenseMatrix, convention: SpectralConvention) -> f64 {
    let s2 = spectral_norm_sq(a);
    match convention {
        SpectralConvention::SigmaMaxSquared => s2,
        SpectralConvention::SigmaMax => s2.sqrt(),
    }
}

/// The default step `1.8 / σ_max(A)²`.
pub fn default_step(a: &DenseMatrix) -> f64 {
    1.8 / spectral_norm_sq(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsOptions {
    /// Relative residual target `‖G x − b‖ ≤ tol ‖b‖`.
    pub tol: f64,
    /// CG budget is `max_iter_factor · |S|`.
    pub max_iter_factor: usize,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter_factor: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True residual `‖G x − b‖` of the returned `x`.
    pub residual: f64,
    pub converged: bool,
}

/// Conjugate gradient on a symmetric positive semidefinite row-major `g`.
///
/// The recurrence residual is replaced by the true one every `l` steps so a
/// drifting recurrence cannot report false convergence.
pub fn conjugate_gradient(g: &[f64], b: &[f64], tol: f64, max_iter: usize) -> CgOutcome {
    let l = b.len();
    debug_assert_eq!(g.len(), l * l);
    let bn = norm2(b);
    let mut x = vec![0.0; l];
    if bn == 0.0 {
        return CgOutcome { x, iterations: 0, residual: 0.0, converged: true };
    }
    let target = tol * bn;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter {
        if rr.sqrt() <= target {
            let true_r = sym_residual(g, &x, b);
            if norm2(&true_r) <= target {
                break;
            }
            r = true_r;
            p.clone_from(&r);
            rr = dot(&r, &r);
        }
        let gp = symv(g, &p);
        let pgp = dot(&p, &gp);
        if pgp <= 0.0 || !pgp.is_finite() {
            break;
        }
        let step = rr / pgp;
        axpy(step, &p, &mut x);
        axpy(-step, &gp, &mut r);
        it += 1;
        if it % l.max(1) == 0 {
            r = sym_residual(g, &x, b);
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    let residual = norm2(&sym_residual(g, &x, b));
    CgOutcome { x, iterations: it, residual, converged: residual <= target }
}

/// Minimizer of `‖A_S v − y‖₂` over `v ∈ R^|S|`, by CG on the normal equations.
///
/// When CG misses `tol` inside its budget (strongly coherent supports), the
/// system is re-solved directly and the better of the two iterates is kept.
pub fn restricted_least_squares(
    a: &DenseMatrix,
    support: &[usize],
    y: &[f64],
    opts: &LsOptions,
) -> Result<Vec<f64>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, matrix has {} rows",
            y.len(),
            a.rows()
        )));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= a.cols()) {
        return Err(Error::InvalidArgument(format!("support index {j} out of range")));
    }
    let g = a.gram(support);
    let b = a.matvec_t_restricted(support, y);
    Ok(solve_normal_equations(&g, &b, opts))
}

/// Solves `G x = b` for a Gram matrix, CG first with a direct fallback.
pub fn solve_normal_equations(g: &[f64], b: &[f64], opts: &LsOptions) -> Vec<f64> {
    let l = b.len();
    let cg = conjugate_gradient(g, b, opts.tol, opts.max_iter_factor * l);
    if cg.converged {
        return cg.x;
    }
    match solve_dense(g, b) {
        Ok(x) => {
            let res = norm2(&sym_residual(g, &x, b));
            if res < cg.residual {
                x
            } else {
                cg.x
            }
        }
        Err(_) => cg.x,
    }
}

/// Gaussian elimination with partial pivoting for a small row-major system.
pub fn solve_dense(mat: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let l = b.len();
    if mat.len() != l * l {
        return Err(Error::DimensionMismatch("square system expected".into()));
    }
    let mut m = mat.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for c in 0..l {
        let piv = (c..l)
            .max_by(|&i, &j| m[i * l + c].abs().total_cmp(&m[j * l + c].abs()))
            .unwrap_or(c);
        if m[piv * l + c].abs() <= f64::EPSILON * scale * l as f64 {
            return Err(Error::Numerical("singular system".into()));
        }
        if piv != c {
            for k in 0..l {
                m.swap(c * l + k, piv * l + k);
            }
            x.swap(c, piv);
        }
        let d = m[c * l + c];
        for r in c + 1..l {
            let f = m[r * l + c] / d;
            if f != 0.0 {
                for k in c..l {
                    m[r * l + k] -= f * m[c * l + k];
                }
                x[r] -= f * x[c];
            }
        }
    }
    for c in (0..l).rev() {
        let mut s = x[c];
        for k in c + 1..l {
            s -= m[c * l + k] * x[k];
        }
        x[c] = s / m[c * l + c];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric row-major matrix by cyclic Jacobi, ascending.
pub fn symmetric_eigenvalues(mat: &[f64], l: usize) -> Vec<f64> {
    let mut a = mat.to_vec();
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 {
        return vec![0.0; l];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..l)
            .flat_map(|i| (0..l).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * l + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..l {
            for q in p + 1..l {
                let apq = a[p * l + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * l + p];
                let aqq = a[q * l + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..l {
                    let akp = a[k * l + p];
                    let akq = a[k * l + q];
                    a[k * l + p] = c * akp - s * akq;
                    a[k * l + q] = s * akp + c * akq;
                }
                for k in 0..l {
                    let apk = a[p * l + k];
                    let aqk = a[q * l + k];
                    a[p * l + k] = c * apk - s * aqk;
                    a[q * l + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..l).map(|i| a[i * l + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// i.i.d. standard normal entries, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix { rows: m, cols: n, data }
}

/// Circulant Gaussian blur on `n` points, columns normalized.
///
/// Column `j` holds `exp(−d²/(2σ²))` at row `i`, with `d` the circular
/// distance between `i` and `j`.
pub fn gaussian_convolution_matrix(n: usize, sigma: f64) -> Result<DenseMatrix> {
    if n < 3 || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "convolution needs n >= 3 and sigma > 0 (n={n}, sigma={sigma})"
        )));
    }
    let mut a = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let d = i.abs_diff(j);
            let d = d.min(n - d) as f64;
            a.set(i, j, (-d * d / (2.0 * sigma * sigma)).exp());
        }
    }
    normalize_columns(&mut a)?;
    Ok(a)
}

/// An `m x n` matrix with orthonormal columns (`m ≥ n`), from a Gaussian draw
/// orthogonalized twice by modified Gram-Schmidt.
pub fn random_orthonormal<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<DenseMatrix> {
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "orthonormal columns need m >= n (m={m}, n={n})"
        )));
    }
    let mut a = gaussian_matrix(m, n, rng);
    for _pass in 0..2 {
        for j in 0..n {
            for i in 0..j {
                let (left, right) = a.data.split_at_mut(j * m);
                let qi = &left[i * m..(i + 1) * m];
                let cj = &mut right[..m];
                let r = dot(qi, cj);
                axpy(-r, qi, cj);
            }
            let nrm = norm2(a.column(j));
            if nrm == 0.0 {
                return Err(Error::ZeroColumn(j));
            }
            a.column_mut(j).iter_mut().for_each(|v| *v /= nrm);
        }
    }
    Ok(a)
}

/// `max_{i≠j} |⟨a_i, a_j⟩|` for a column-normalized matrix.
pub fn coherence(a: &DenseMatrix) -> f64 {
    let n = a.cols();
    let mut mu = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            mu = mu.max(dot(a.column(i), a.column(j)).abs());
        }
    }
    mu
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale_to_unit(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn symv(g: &[f64], x: &[f64]) -> Vec<f64> {
    let l = x.len();
    (0..l).map(|i| dot(&g[i * l..(i + 1) * l], x)).collect()
}

fn sym_residual(g: &[f64], x: &[f64], b: &[f64]) -> Vec<f64> {
    let gx = symv(g, x);
    b.iter().zip(gx).map(|(bi, gi)| bi - gi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seeded_rng;

    #[test]
    fn normalize_scales_columns_and_reports_norms() {
        let mut a = DenseMatrix::from_row_major(2, 2, &[3.0, 0.0, 4.0, 2.0]).unwrap();
        let s = normalize_columns(&mut a).unwrap();
        assert_eq!(s.0, vec![5.0, 2.0]);
        assert!((a.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((a.get(1, 0) - 0.8).abs() < 1e-15);
        assert_eq!(a.get(1, 1), 1.0);
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let mut a = DenseMatrix::from_row_major(2, 2, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(normalize_columns(&mut a), Err(Error::ZeroColumn(1))));
    }

    #[test]
    fn spectral_norm_of_identity_and_diagonal() {
        assert!((spectral_norm_sq(&DenseMatrix::identity(7)) - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_row_major(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        assert!((spectral_norm_sq(&d) - 9.0).abs() < 1e-8);
        assert!((spectral_constant(&d, SpectralConvention::SigmaMax) - 3.0).abs() < 1e-8);
        assert!((spectral_norm_sq_with(&d, 1e-10, 10_000).unwrap() - 9.0).abs() < 1e-8);
        let close = DenseMatrix::from_row_major(2, 2, &[1.0, 0.0, 0.0, 0.999]).unwrap();
        assert!(matches!(spectral_norm_sq_with(&close, 1e-12, 2), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn tiny_columns_count_as_zero() {
        let mut a = DenseMatrix::from_row_major(2, 2, &[1.0, 1e-301, 1.0, 0.0]).unwrap();
        assert!(matches!(normalize_columns(&mut a), Err(Error::ZeroColumn(1))));
        assert!(gaussian_convolution_matrix(2, 3.0).is_err());
    }

    #[test]
    fn restricted_ls_on_orthonormal_columns_is_projection() {
        let mut rng = seeded_rng(3);
        let q = random_orthonormal(10, 6, &mut rng).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let s = [1, 4];
        let x = restricted_least_squares(&q, &s, &y, &LsOptions::default()).unwrap();
        for (a, &j) in s.iter().enumerate() {
            assert!((x[a] - dot(q.column(j), &y)).abs() < 1e-12);
        }
    }

    #[test]
    fn restricted_ls_rejects_empty_support() {
        let a = DenseMatrix::identity(3);
        assert!(matches!(
            restricted_least_squares(&a, &[], &[1.0, 2.0, 3.0], &LsOptions::default()),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let ev = symmetric_eigenvalues(&m, 3);
        for (a, b) in ev.iter().zip([1.0, 3.0, 5.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_solve_recovers_solution() {
        let m = [0.0, 2.0, 1.0, 1.0];
        let x = solve_dense(&m, &[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn convolution_matrix_is_circulant_and_normalized() {
        let a = gaussian_convolution_matrix(16, 2.0).unwrap();
        for j in 0..16 {
            assert!((norm2(a.column(j)) - 1.0).abs() < 1e-14);
            assert!((a.get(j, j) - a.get(0, 0)).abs() < 1e-15);
            assert!((a.get((j + 1) % 16, j) - a.get(1, 0)).abs() < 1e-15);
            assert!((a.get((j + 15) % 16, j) - a.get(1, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn orthonormal_generator_is_orthonormal() {
        let mut rng = seeded_rng(11);
        let q = random_orthonormal(12, 12, &mut rng).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(q.column(i), q.column(j)) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn row_major_roundtrip() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.get(1, 2), 6.0);
        assert_eq!(a.matvec(&[1.0, 0.0, 1.0]), vec![4.0, 10.0]);
        assert_eq!(a.matvec_t(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }
}
