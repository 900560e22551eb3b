//! Objectives `F(x)` with full gradients and minimization restricted to a
//! support: `½‖Ax − y‖²` and the logistic loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, LsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    #[serde(alias = "ls")]
    LeastSquares,
    Logistic,
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "least_squares" => Ok(LossKind::LeastSquares),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::Config(format!("unknown loss {other:?} (expected ls or logistic)"))),
        }
    }
}

/// Inner solver settings for the logistic restricted problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Stop when `‖∇_S F‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterates are clipped to `‖x_S‖∞ ≤ cap`; hitting it is flagged.
    pub cap: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, cap: 1e3 }
    }
}

/// Result of a restricted minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedFit {
    /// Aligned with the support indices.
    pub values: Vec<f64>,
    /// The fit ran into the `ℓ∞` cap (separable logistic data).
    pub capped: bool,
}

/// A loss bound to a matrix and observation.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub kind: LossKind,
    pub a: &'a DenseMatrix,
    pub y: &'a [f64],
    pub ls: LsOptions,
    pub newton: NewtonOptions,
}

impl<'a> Objective<'a> {
    pub fn new(kind: LossKind, a: &'a DenseMatrix, y: &'a [f64]) -> Result<Self> {
        if y.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "y has length {}, A has {} rows",
                y.len(),
                a.rows()
            )));
        }
        if kind == LossKind::Logistic && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument("logistic labels must be 0 or 1".into()));
        }
        Ok(Self { kind, a, y, ls: LsOptions::default(), newton: NewtonOptions::default() })
    }

    pub fn least_squares(a: &'a DenseMatrix, y: &'a [f64]) -> Self {
        Self { kind: LossKind::LeastSquares, a, y, ls: LsOptions::default(), newton: NewtonOptions::default() }
    }

    pub fn with_ls_options(mut self, ls: LsOptions) -> Self {
        self.ls = ls;
        self
    }

    /// `F` evaluated from the predictions `z = A x`.
    pub fn value_at_predictions(&self, z: &[f64]) -> f64 {
        match self.kind {
            LossKind::LeastSquares => 0.5 * z.iter().zip(self.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            LossKind::Logistic => z.iter().zip(self.y).map(|(&z, &y)| softplus(z) - y * z).sum(),
        }
    }

    /// `∂F/∂z`, i.e. `z − y` or `σ(z) − y`.
    pub fn residual_at_predictions(&self, z: &[f64]) -> Vec<f64> {
        match self.kind {
            LossKind::LeastSquares => z.iter().zip(self.y).map(|(a, b)| a - b).collect(),
            LossKind::Logistic => z.iter().zip(self.y).map(|(&z, &y)| sigmoid(z) - y).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_at_predictions(&self.a.matvec(x))
    }

    pub fn value_sparse(&self, idx: &[usize], vals: &[f64]) -> f64 {
        self.value_at_predictions(&self.a.matvec_restricted(idx, vals))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.a.matvec_t(&self.residual_at_predictions(&self.a.matvec(x)))
    }

    /// Value and full gradient at a vector given by its support and values.
    pub fn value_and_gradient_sparse(&self, idx: &[usize], vals: &[f64]) -> (f64, Vec<f64>) {
        let z = self.a.matvec_restricted(idx, vals);
        let r = self.residual_at_predictions(&z);
        (self.value_at_predictions(&z), self.a.matvec_t(&r))
    }

    /// `argmin_{supp(x) ⊆ S} F(x)`, aligned with `idx`.
    pub fn restricted_minimize(&self, idx: &[usize]) -> Result<RestrictedFit> {
        match self.kind {
            LossKind::LeastSquares => Ok(RestrictedFit {
                values: linalg::restricted_least_squares(self.a, idx, self.y, &self.ls)?,
                capped: false,
            }),
            LossKind::Logistic => self.logistic_newton(idx),
        }
    }

    /// Damped Newton with step halving on the restricted logistic problem.
    fn logistic_newton(&self, idx: &[usize]) -> Result<RestrictedFit> {
        if idx.is_empty() {
            return Err(Error::EmptySupport);
        }
        let l = idx.len();
        let opts = self.newton;
        let mut x = vec![0.0; l];
        let mut z = vec![0.0; self.a.rows()];
        let mut f = self.value_at_predictions(&z);
        let mut capped = false;
        for _ in 0..opts.max_iter {
            let r = self.residual_at_predictions(&z);
            let g = self.a.matvec_t_restricted(idx, &r);
            if linalg::norm_inf(&g) <= opts.tol {
                break;
            }
            let w: Vec<f64> = z.iter().map(|&zi| {
                let s = sigmoid(zi);
                s * (1.0 - s)
            }).collect();
            let mut h = vec![0.0; l * l];
            for a in 0..l {
                let ca = self.a.column(idx[a]);
                for b in a..l {
                    let cb = self.a.column(idx[b]);
                    let v: f64 = ca.iter().zip(cb).zip(&w).map(|((p, q), wi)| p * q * wi).sum();
                    h[a * l + b] = v;
                    h[b * l + a] = v;
                }
            }
            let trace: f64 = (0..l).map(|a| h[a * l + a]).sum();
            for a in 0..l {
                h[a * l + a] += 1e-12 * trace.max(1e-300);
            }
            let d = match linalg::solve_dense(&h, &g) {
                Ok(d) => d,
                Err(_) => g.clone(),
            };
            let slope = linalg::dot(&g, &d);
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-12 {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi - step * di).collect();
                let tz = self.a.matvec_restricted(idx, &trial);
                let tf = self.value_at_predictions(&tz);
                if tf <= f - 1e-4 * step * slope {
                    x = trial;
                    z = tz;
                    f = tf;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if linalg::norm_inf(&x) > opts.cap {
                for v in x.iter_mut() {
                    *v = v.clamp(-opts.cap, opts.cap);
                }
                capped = true;
                break;
            }
            if !accepted {
                break;
            }
        }
        // Every sample on its correct side means the restriction is
        // separable: the loss keeps decreasing along x, so go to the cap.
        let amax = linalg::norm_inf(&x);
        if !capped && amax > 0.0 && z.iter().zip(self.y).all(|(zi, yi)| (2.0 * yi - 1.0) * zi > 0.0) {
            let s = opts.cap / amax;
            x.iter_mut().for_each(|v| *v = (*v * s).clamp(-opts.cap, opts.cap));
            capped = true;
        }
        Ok(RestrictedFit { values: x, capped })
    }
}

/// `log(1 + eᶻ)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `½‖Ax − y‖²`.
pub fn least_squares_value(a: &DenseMatrix, y: &[f64], x: &[f64]) -> f64 {
    Objective::least_squares(a, y).value(x)
}

/// `Aᵀ(Ax − y)`.
pub fn least_squares_gradient(a: &DenseMatrix, y: &[f64], x: &[f64]) -> Vec<f64> {
    Objective::least_squares(a, y).gradient(x)
}

/// `Σ −yᵢ log σ(zᵢ) − (1 − yᵢ) log(1 − σ(zᵢ))` with `z = A x`.
pub fn logistic_value(a: &DenseMatrix, y: &[f64], x: &[f64]) -> f64 {
    Objective { kind: LossKind::Logistic, ..Objective::least_squares(a, y) }.value(x)
}

/// `Aᵀ(σ(Ax) − y)`.
pub fn logistic_gradient(a: &DenseMatrix, y: &[f64], x: &[f64]) -> Vec<f64> {
    Objective { kind: LossKind::Logistic, ..Objective::least_squares(a, y) }.gradient(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seeded_rng;

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(1.0) + sigmoid(-1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_value_matches_naive_formula() {
        let mut rng = seeded_rng(4);
        let a = linalg::gaussian_matrix(8, 3, &mut rng);
        let y = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let x = [0.3, -0.2, 0.5];
        let z = a.matvec(&x);
        let naive: f64 = z
            .iter()
            .zip(&y)
            .map(|(&z, &y)| {
                let s = 1.0 / (1.0 + (-z).exp());
                -y * s.ln() - (1.0 - y) * (1.0 - s).ln()
            })
            .sum();
        assert!((logistic_value(&a, &y, &x) - naive).abs() < 1e-12);
    }

    #[test]
    fn newton_zeroes_restricted_gradient_on_overlapping_classes() {
        let mut rng = seeded_rng(8);
        let a = linalg::gaussian_matrix(40, 6, &mut rng);
        let y: Vec<f64> = (0..40).map(|i| ((i * 7) % 3 == 0) as u8 as f64).collect();
        let obj = Objective::new(LossKind::Logistic, &a, &y).unwrap();
        let idx = [0, 2, 5];
        let fit = obj.restricted_minimize(&idx).unwrap();
        assert!(!fit.capped);
        let (_, g) = obj.value_and_gradient_sparse(&idx, &fit.values);
        for &i in &idx {
            assert!(g[i].abs() <= 1e-8);
        }
    }

    #[test]
    fn newton_flags_separable_data() {
        let a = DenseMatrix::from_row_major(4, 1, &[1.0, 2.0, -1.0, -2.0]).unwrap();
        let y = [1.0, 1.0, 0.0, 0.0];
        let obj = Objective::new(LossKind::Logistic, &a, &y).unwrap();
        let fit = obj.restricted_minimize(&[0]).unwrap();
        assert!(fit.capped);
        assert!(fit.values[0] <= 1e3 && fit.values[0] > 0.0);
    }

    #[test]
    fn logistic_rejects_non_binary_labels() {
        let a = DenseMatrix::identity(2);
        assert!(Objective::new(LossKind::Logistic, &a, &[2.0, 0.0]).is_err());
        assert!(Objective::new(LossKind::Logistic, &a, &[0.5, 0.0]).is_err());
    }

    #[test]
    fn loss_kind_parses() {
        assert_eq!("ls".parse::<LossKind>().unwrap(), LossKind::LeastSquares);
        assert_eq!("logistic".parse::<LossKind>().unwrap(), LossKind::Logistic);
        assert!("hinge".parse::<LossKind>().is_err());
    }
}
