//! Recovery metrics.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::model::{largest_k, SparseVector, Support};

/// Entries at or below this magnitude do not count as support.
pub const SUPPORT_ZERO_TOL: f64 = 1e-12;

/// `(k − |S* ∩ supp(x)|) / k`.
pub fn dist_supp(x: &SparseVector, s_star: &Support, k: usize) -> f64 {
    let common = x.effective_support(SUPPORT_ZERO_TOL).intersection_len(s_star);
    (k as f64 - common as f64) / k as f64
}

/// `(k′ − |S* ∩ supp(x)|) / k′`, for runs given a misspecified sparsity.
pub fn dist_supp_kprime(x: &SparseVector, s_star: &Support, k_prime: usize) -> f64 {
    dist_supp(x, s_star, k_prime)
}

/// Support distance between the `K = min(k, k′)` largest entries of `x` and
/// of `x*`.
pub fn dist_supp_largest(x: &SparseVector, x_star: &SparseVector, k: usize, k_prime: usize) -> f64 {
    let kk = k.min(k_prime);
    let a = largest_k(&x.densify(), kk);
    let b = largest_k(&x_star.densify(), kk);
    (kk as f64 - a.intersection_len(&b) as f64) / kk as f64
}

/// `‖Ax − y‖₂ / ‖y‖₂`.
pub fn rel_l2_loss(a: &DenseMatrix, x: &SparseVector, y: &[f64]) -> Result<f64> {
    let yn = linalg::norm2(y);
    if yn == 0.0 {
        return Err(Error::ZeroObservation);
    }
    let z = a.matvec_restricted(x.support.indices(), &x.values);
    let r: f64 = z.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(r / yn)
}

/// Earth mover's distance between `|x|/‖x‖₁` and `|x*|/‖x*‖₁` on the index
/// line with cost `|i − j|`, i.e. `Σ_i |CDF_x(i) − CDF_x*(i)|`.
pub fn wasserstein1_spikes(x: &SparseVector, x_star: &SparseVector) -> Result<f64> {
    let mx: f64 = x.values.iter().map(|v| v.abs()).sum();
    let ms: f64 = x_star.values.iter().map(|v| v.abs()).sum();
    if mx == 0.0 || ms == 0.0 {
        return Err(Error::ZeroMass);
    }
    let n = x.n.max(x_star.n);
    let mut diff = vec![0.0; n];
    for (i, v) in x.support.iter().zip(&x.values) {
        diff[i] += v.abs() / mx;
    }
    for (i, v) in x_star.support.iter().zip(&x_star.values) {
        diff[i] -= v.abs() / ms;
    }
    let mut cdf = 0.0;
    let mut total = 0.0;
    for d in diff.iter().take(n.saturating_sub(1)) {
        cdf += d;
        total += f64::abs(cdf);
    }
    Ok(total)
}

/// `supp(x) = S*` after dropping entries with `|v| ≤ 1e-12`.
pub fn exact_support_match(x: &SparseVector, s_star: &Support) -> bool {
    x.effective_support(SUPPORT_ZERO_TOL) == *s_star
}
