//! Certification of recovery conditions and iteration bounds on concrete
//! instances.
//!
//! Notation follows the solver: `S^t` the support at iteration `t`, `x^t` the
//! fit on it, `X^t` the exploration vector, `S*`/`x*` the truth and `e` the
//! observation noise.
//!
//! # Gradient noise
//!
//! The ideal update is `u^t_i = −η x*_i` on `S* \ S^t` and zero elsewhere.
//! The gradient noise `b^t = u^t − η Aᵀ(Ax^t − y)` measures how far the real
//! step is from it, so that `X^{t+1} = X^t + b^t − u^t`. Summing gives
//!
//! ```text
//! X^t = X⁰ + η c^t ⊙ x* + B^t,   c^t_i = #{t' < t : i ∈ S* \ S^{t'}},   B^t = Σ_{t'<t} b^{t'}.
//! ```
//!
//! On `S^t` both `u^t` and the least-squares gradient vanish, so `b^t` does too.
//!
//! # Constants under restricted isometry
//!
//! With `r = Ax^t − y`, `z = x^t − x*` and `i ∉ S^t`, write
//! `η⁻¹ b^t_i = −x*_i 1[i∈S*] − A_iᵀ(A z − e)`. Let `T = S^t ∪ S* ∪ {i}`
//! (`|T| ≤ 2k+1`) and split `z = z_{S^t} − x*_{S*\S^t}`. The near-orthogonality
//! of disjoint supports under the `(2k+1)`-isometry gives
//!
//! ```text
//! |b^t_i| / η ≤ δ_{2k+1} (‖z_{S^t}‖ + ‖u^t‖/η) + ‖e‖            (1)
//! ```
//!
//! and the normal equations on `S^t` give
//!
//! ```text
//! ‖z_{S^t}‖ ≤ δ_{2k}/(1−δ_k) ‖u^t‖/η + √(1+δ_k)/(1−δ_k) ‖e‖.     (2)
//! ```
//!
//! Substituting (2) into (1) and using `‖u^t‖/η ≤ ‖x*‖`:
//!
//! ```text
//! ‖b^t‖∞ / η ≤ α ‖x*‖ + γ ‖e‖,
//! α = δ_{2k+1} (1 + δ_{2k}/(1−δ_k)),
//! γ = 1 + δ_{2k+1} √(1+δ_k)/(1−δ_k).
//! ```
//!
//! For `δ_k ≤ ½` and `δ_k ≤ δ_{2k} ≤ δ_{2k+1}` this yields
//! `δ_{2k+1} ≤ α ≤ 3 δ_{2k+1}` and `1 + δ_{2k+1} ≤ γ ≤ √6 (1 + δ_{2k+1})`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, LsOptions};
use crate::model::{largest_k, Problem, Support};
use crate::solvers::Trace;

/// Largest number of supports `rip_constant` will enumerate.
pub const RIP_ENUMERATION_CAP: u128 = 2_000_000;

/// A real that serializes `±∞` and NaN as strings.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// `C(n, l)`, saturating.
pub fn binomial(n: usize, l: usize) -> u128 {
    if l > n {
        return 0;
    }
    let l = l.min(n - l);
    let mut c: u128 = 1;
    for i in 0..l {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Exhaustive restricted isometry constant of order `l`.
pub fn rip_constant(a: &DenseMatrix, l: usize) -> Result<f64> {
    rip_constant_capped(a, l, RIP_ENUMERATION_CAP)
}

pub fn rip_constant_capped(a: &DenseMatrix, l: usize, cap: u128) -> Result<f64> {
    let n = a.cols();
    if l == 0 || l > n {
        return Err(Error::InvalidArgument(format!("RIP order must be in 1..={n} (got {l})")));
    }
    let count = binomial(n, l);
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    let mut idx: Vec<usize> = (0..l).collect();
    let mut delta = 0.0f64;
    loop {
        let ev = linalg::symmetric_eigenvalues(&a.gram(&idx), l);
        delta = delta.max(ev[l - 1] - 1.0).max(1.0 - ev[0]);
        // Next combination in lexicographic order.
        let mut p = l;
        while p > 0 && idx[p - 1] == n - l + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        idx[p - 1] += 1;
        for q in p..l {
            idx[q] = idx[q - 1] + 1;
        }
    }
    Ok(delta.max(0.0))
}

/// `(α, γ)` from `δ_k`, `δ_{2k}`, `δ_{2k+1}`; see the module docs.
pub fn alpha_gamma(delta_k: f64, delta_2k: f64, delta_2k1: f64) -> Result<(f64, f64)> {
    if !(delta_k < 1.0) {
        return Err(Error::DegenerateRip(delta_k));
    }
    let alpha = delta_2k1 * (1.0 + delta_2k / (1.0 - delta_k));
    let gamma = 1.0 + delta_2k1 * (1.0 + delta_k).sqrt() / (1.0 - delta_k);
    Ok((alpha, gamma))
}

fn min_abs(x_star: &[f64]) -> f64 {
    x_star.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
}

/// `γ‖e‖ < min|x*_i| / (2k) − α‖x*‖`. `x_star` holds the nonzero values.
pub fn check_hrip(x_star: &[f64], e_norm: f64, alpha: f64, gamma: f64, k: usize) -> bool {
    gamma * e_norm < min_abs(x_star) / (2.0 * k as f64) - alpha * linalg::norm2(x_star)
}

/// `τ = 2kα‖x*‖ / min|x*_i|` and whether `τ < 1`.
pub fn check_hsrip(x_star: &[f64], alpha: f64, k: usize) -> (f64, bool) {
    let tau = 2.0 * k as f64 * alpha * linalg::norm2(x_star) / min_abs(x_star);
    (tau, tau < 1.0)
}

/// `ε_max < η min|x*_i| / (2k)`.
pub fn check_rc(eps_max: f64, eta: f64, x_star: &[f64], k: usize) -> bool {
    eps_max < eta / (2.0 * k as f64) * min_abs(x_star)
}

/// `ε_max < 1 / (2 Σ 1/(η|x*_i|))`.
pub fn check_rc_sharp(eps_max: f64, eta: f64, x_star: &[f64]) -> bool {
    let s: f64 = x_star.iter().map(|v| 1.0 / (eta * v.abs())).sum();
    eps_max < 1.0 / (2.0 * s)
}

/// `min|x*_i| > 2‖e‖ / √(1 − δ_{2k})`.
pub fn check_min_condition(x_star: &[f64], e_norm: f64, delta_2k: f64) -> bool {
    if !(delta_2k < 1.0) {
        return false;
    }
    min_abs(x_star) > 2.0 * e_norm / (1.0 - delta_2k).sqrt()
}

/// Inputs to [`iteration_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub k: usize,
    pub eta: f64,
    /// Starting exploration vector `X⁰`.
    pub x0: Vec<f64>,
    pub x_star_support: Support,
    /// Nonzero values of `x*`, aligned with the support.
    pub x_star: Vec<f64>,
    pub e_norm: f64,
    pub eps_max: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationBounds {
    /// `k (1 + 2‖X⁰‖∞ / (η min|x*|))`.
    pub t_oracle: Real,
    /// `(2k‖X⁰‖∞ + (k+1) η min) / (η min − 2k ε_max)`.
    pub t_max: Real,
    /// Sharper variant weighting each true entry by `1/|x*_i|`.
    pub t_max_sharp: Real,
    /// `(2k‖X⁰‖∞/η + (k+1) min) / (min − 2k(α‖x*‖ + γ‖e‖))`.
    pub t_rip: Real,
    /// `(k+1) / (1 − τ)`.
    pub t_srip: Real,
}

fn ratio(num: f64, den: f64) -> Real {
    if den > 0.0 {
        Real(num / den)
    } else {
        Real(f64::INFINITY)
    }
}

pub fn iteration_bounds(inp: &BoundInputs) -> IterationBounds {
    let k = inp.k as f64;
    let eta = inp.eta;
    let min = min_abs(&inp.x_star);
    let x0_inf = linalg::norm_inf(&inp.x0);
    let t_oracle = Real(k * (1.0 + 2.0 * x0_inf / (eta * min)));
    let t_max = ratio(2.0 * k * x0_inf + (k + 1.0) * eta * min, eta * min - 2.0 * k * inp.eps_max);
    let off_max = inp
        .x0
        .iter()
        .enumerate()
        .filter(|(i, _)| !inp.x_star_support.contains(*i))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let (mut num, mut inv) = (0.0, 0.0);
    for (i, v) in inp.x_star_support.iter().zip(&inp.x_star) {
        let w = 1.0 / (eta * v.abs());
        num += (off_max + inp.x0[i].abs()) * w;
        inv += w;
    }
    let t_max_sharp = ratio(num + k + 1.0, 1.0 - 2.0 * inp.eps_max * inv);
    let (t_rip, t_srip) = match (inp.alpha, inp.gamma) {
        (Some(alpha), Some(gamma)) => {
            let xn = linalg::norm2(&inp.x_star);
            let t_rip = ratio(
                2.0 * k * x0_inf / eta + (k + 1.0) * min,
                min - 2.0 * k * (alpha * xn + gamma * inp.e_norm),
            );
            let (tau, _) = check_hsrip(&inp.x_star, alpha, inp.k);
            (t_rip, ratio(k + 1.0, 1.0 - tau))
        }
        _ => (Real(f64::INFINITY), Real(f64::INFINITY)),
    };
    IterationBounds { t_oracle, t_max, t_max_sharp, t_rip, t_srip }
}

/// Per-run gradient-noise measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientNoiseReport {
    /// `max_t ‖b^t‖∞`.
    pub eps_max: f64,
    /// `‖b^t‖∞` per iteration.
    pub per_t: Vec<f64>,
    /// `max_t max_{i∈S^t} |(Aᵀ(Ax^t − y))_i|`.
    pub annihilation_max: f64,
    /// `α‖x*‖ + γ‖e‖` when constants were supplied.
    pub noise_bound: Option<f64>,
    /// Iterations where `‖b^t‖∞/η` exceeded `noise_bound`.
    pub bound_violations: usize,
}

/// Gradient `Aᵀ(Ax − y)` at iterate `t` of a trace.
fn ls_gradient_at(problem: &Problem, trace: &Trace, t: usize) -> Vec<f64> {
    let s = &trace.support_sequence[t];
    let z = problem.a.matvec_restricted(s.indices(), &trace.iterates[t]);
    let r: Vec<f64> = z.iter().zip(&problem.y).map(|(a, b)| a - b).collect();
    problem.a.matvec_t(&r)
}

/// `b^t = u^t − η Aᵀ(Ax^t − y)` along a trace with iterates.
pub fn gradient_noise(problem: &Problem, trace: &Trace, eta: f64) -> Result<Vec<Vec<f64>>> {
    let truth = problem.truth()?;
    let s_star = &truth.x_star.support;
    let mut out = Vec::with_capacity(trace.len());
    for t in 0..trace.support_sequence.len() {
        let g = ls_gradient_at(problem, trace, t);
        let s = &trace.support_sequence[t];
        let mut b: Vec<f64> = g.iter().map(|v| -eta * v).collect();
        for i in s_star.iter().filter(|&i| !s.contains(i)) {
            b[i] += -eta * truth.x_star.get(i);
        }
        out.push(b);
    }
    Ok(out)
}

/// Measures `ε_max`, checks annihilation on `S^t` and, with `(α, γ)`, the
/// bound `‖b^t‖∞/η ≤ α‖x*‖ + γ‖e‖` at every iteration.
pub fn check_gradient_noise(
    problem: &Problem,
    trace: &Trace,
    eta: f64,
    constants: Option<(f64, f64)>,
) -> Result<GradientNoiseReport> {
    let truth = problem.truth()?;
    let bs = gradient_noise(problem, trace, eta)?;
    let noise_bound = constants.map(|(alpha, gamma)| {
        alpha * linalg::norm2(&truth.x_star.values) + gamma * linalg::norm2(&truth.noise)
    });
    let mut per_t = Vec::with_capacity(bs.len());
    let mut annihilation_max = 0.0f64;
    let mut violations = 0;
    for (t, b) in bs.iter().enumerate() {
        let inf = linalg::norm_inf(b);
        per_t.push(inf);
        for i in trace.support_sequence[t].iter() {
            annihilation_max = annihilation_max.max(b[i].abs() / eta);
        }
        if let Some(bound) = noise_bound {
            if inf / eta > bound * (1.0 + 1e-12) + 1e-12 {
                violations += 1;
            }
        }
    }
    Ok(GradientNoiseReport {
        eps_max: per_t.iter().copied().fold(0.0, f64::max),
        per_t,
        annihilation_max,
        noise_bound,
        bound_violations: violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    /// `max_t ‖X^t − (X⁰ + η c^t ⊙ x* + B^t)‖∞ / (1 + ‖X^t‖∞)`.
    pub max_rel_error: f64,
    /// First `t` with `S* ⊆ S^t`.
    pub t_s: Option<usize>,
    /// `Σ_{i∈S*} c^t_i ≥ t` for all `t ≤ t_s`.
    pub counting_bound_holds: bool,
    /// `c^t` at the last iteration reconstructed.
    pub final_counts: Vec<usize>,
}

/// Rebuilds `X^t` from the counting vector and accumulated gradient noise and
/// compares it with the recorded exploration vectors.
pub fn counting_and_closed_form(problem: &Problem, trace: &Trace, eta: f64) -> Result<ClosedFormReport> {
    let truth = problem.truth()?;
    let n = problem.n();
    if trace.exploration.len() != trace.support_sequence.len() {
        return Err(Error::InvalidArgument("trace lacks exploration vectors".into()));
    }
    let bs = gradient_noise(problem, trace, eta)?;
    let s_star = &truth.x_star.support;
    let x0 = &trace.exploration[0];
    let mut counts = vec![0usize; n];
    let mut acc = vec![0.0; n];
    let mut max_rel = 0.0f64;
    let mut t_s = None;
    let mut counting_ok = true;
    for t in 0..trace.exploration.len() {
        let xt = &trace.exploration[t];
        let scale = 1.0 + linalg::norm_inf(xt);
        for i in 0..n {
            let recon = x0[i] + eta * counts[i] as f64 * truth.x_star.get(i) + acc[i];
            max_rel = max_rel.max((xt[i] - recon).abs() / scale);
        }
        let s = &trace.support_sequence[t];
        if t_s.is_none() {
            let total: usize = s_star.iter().map(|i| counts[i]).sum();
            counting_ok &= total >= t;
            if s_star.iter().all(|i| s.contains(i)) {
                t_s = Some(t);
            }
        }
        for i in s_star.iter().filter(|&i| !s.contains(i)) {
            counts[i] += 1;
        }
        linalg::axpy(1.0, &bs[t], &mut acc);
    }
    Ok(ClosedFormReport { max_rel_error: max_rel, t_s, counting_bound_holds: counting_ok, final_counts: counts })
}

/// Fills in missing fits and exploration vectors of a support-only trace by
/// replaying `x^t = LS(S^t)`, `X^{t+1} = X^t − η Aᵀ(Ax^t − y)` from `x0`.
pub fn complete_trace(problem: &Problem, trace: &Trace, eta: f64, x0: &[f64], ls: &LsOptions) -> Result<Trace> {
    let mut out = trace.clone();
    let len = trace.support_sequence.len();
    if out.iterates.len() != len {
        out.iterates = trace
            .support_sequence
            .iter()
            .map(|s| linalg::restricted_least_squares(&problem.a, s.indices(), &problem.y, ls))
            .collect::<Result<_>>()?;
    }
    if out.exploration.len() != len {
        let mut x = x0.to_vec();
        out.exploration.clear();
        for t in 0..len {
            out.exploration.push(x.clone());
            let g = ls_gradient_at(problem, &out, t);
            linalg::axpy(-eta, &g, &mut x);
        }
    }
    if out.per_iteration_loss.len() != len {
        out.per_iteration_loss = (0..len)
            .map(|t| {
                let s = &out.support_sequence[t];
                let z = problem.a.matvec_restricted(s.indices(), &out.iterates[t]);
                0.5 * z.iter().zip(&problem.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RipValue {
    Computed(f64),
    NotComputed(String),
}

impl RipValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            RipValue::Computed(v) => Some(*v),
            RipValue::NotComputed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TheoryReport {
    pub k: usize,
    pub eta: f64,
    pub delta: BTreeMap<usize, RipValue>,
    pub alpha_k: Option<f64>,
    pub gamma_k: Option<f64>,
    pub hrip_holds: Option<bool>,
    pub hsrip_holds: Option<bool>,
    pub tau: Option<Real>,
    pub hr_holds: bool,
    pub hr_sharp_holds: bool,
    pub min_cond_holds: Option<bool>,
    pub bounds: IterationBounds,
    pub eps_max: f64,
    pub annihilation_max: f64,
    pub noise_bound_violations: Option<usize>,
    pub closed_form_max_rel_error: f64,
    pub counting_bound_holds: bool,
    /// First iteration whose support contains `S*`.
    pub t_s: Option<usize>,
    pub t_best: Option<usize>,
    pub true_support_in_best: Option<bool>,
    pub best_error: Option<f64>,
    /// `2‖e‖ / √(1 − δ_k)`.
    pub best_error_bound: Option<f64>,
}

/// Everything the theory module can say about one run.
pub fn theory_report(problem: &Problem, trace: &Trace, eta: f64, x0: &[f64], cap: u128) -> Result<TheoryReport> {
    let truth = problem.truth()?;
    let k = problem.k;
    let n = problem.n();
    let full = complete_trace(problem, trace, eta, x0, &LsOptions::default())?;
    let mut delta = BTreeMap::new();
    for l in [k, 2 * k, 2 * k + 1] {
        if l == 0 || l > n {
            delta.insert(l, RipValue::NotComputed("order exceeds n".into()));
            continue;
        }
        let v = match rip_constant_capped(&problem.a, l, cap) {
            Ok(d) => RipValue::Computed(d),
            Err(Error::TooLarge { .. }) => RipValue::NotComputed("not computed".into()),
            Err(e) => return Err(e),
        };
        delta.insert(l, v);
    }
    let d = |l: usize| delta.get(&l).and_then(RipValue::value);
    let constants = match (d(k), d(2 * k), d(2 * k + 1)) {
        (Some(a), Some(b), Some(c)) if a < 1.0 => Some(alpha_gamma(a, b, c)?),
        _ => None,
    };
    let xs = &truth.x_star.values;
    let e_norm = linalg::norm2(&truth.noise);
    let noise = check_gradient_noise(problem, &full, eta, constants)?;
    let closed = counting_and_closed_form(problem, &full, eta)?;
    let bounds = iteration_bounds(&BoundInputs {
        k,
        eta,
        x0: x0.to_vec(),
        x_star_support: truth.x_star.support.clone(),
        x_star: xs.clone(),
        e_norm,
        eps_max: noise.eps_max,
        alpha: constants.map(|c| c.0),
        gamma: constants.map(|c| c.1),
    });
    let hsrip = constants.map(|(alpha, _)| check_hsrip(xs, alpha, k));
    let t_best = full
        .per_iteration_loss
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (t, &l)| match best {
            Some((_, bl)) if bl <= l => best,
            _ => Some((t, l)),
        })
        .map(|b| b.0);
    let best = t_best.map(|t| full.iterate(t, n));
    Ok(TheoryReport {
        k,
        eta,
        alpha_k: constants.map(|c| c.0),
        gamma_k: constants.map(|c| c.1),
        hrip_holds: constants.map(|(a, g)| check_hrip(xs, e_norm, a, g, k)),
        hsrip_holds: hsrip.map(|h| h.1),
        tau: hsrip.map(|h| Real(h.0)),
        hr_holds: check_rc(noise.eps_max, eta, xs, k),
        hr_sharp_holds: check_rc_sharp(noise.eps_max, eta, xs),
        min_cond_holds: d(2 * k).map(|d2| check_min_condition(xs, e_norm, d2)),
        bounds,
        eps_max: noise.eps_max,
        annihilation_max: noise.annihilation_max,
        noise_bound_violations: constants.map(|_| noise.bound_violations),
        closed_form_max_rel_error: closed.max_rel_error,
        counting_bound_holds: closed.counting_bound_holds,
        t_s: closed.t_s,
        t_best,
        true_support_in_best: best.as_ref().map(|b| truth.x_star.support.iter().all(|i| b.support.contains(i))),
        best_error: best.as_ref().map(|b| {
            let bd = b.densify();
            let xd = truth.x_star.densify();
            bd.iter().zip(&xd).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
        }),
        best_error_bound: d(k).filter(|&dk| dk < 1.0).map(|dk| 2.0 * e_norm / (1.0 - dk).sqrt()),
        delta,
    })
}

/// Support sequence a trace would have produced from its exploration vectors.
pub fn supports_from_exploration(exploration: &[Vec<f64>], k: usize) -> Vec<Support> {
    exploration.iter().map(|x| largest_k(x, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(500, 20), 266_719_851_283_743_829_654_740_530_950_952_475u128);
    }

    #[test]
    fn identity_is_isometric() {
        let a = DenseMatrix::identity(6);
        for l in 1..=6 {
            assert!(rip_constant(&a, l).unwrap() < 1e-14);
        }
    }

    #[test]
    fn duplicated_columns_have_unit_constant() {
        let a = DenseMatrix::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!((rip_constant(&a, 2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let a = DenseMatrix::identity(40);
        assert!(matches!(rip_constant(&a, 20), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn alpha_gamma_examples() {
        assert_eq!(alpha_gamma(0.0, 0.0, 0.0).unwrap(), (0.0, 1.0));
        let (a, g) = alpha_gamma(0.5, 0.5, 0.5).unwrap();
        assert!((a - 1.0).abs() < 1e-15);
        assert!((g - (1.0 + 0.5 * 1.5f64.sqrt() / 0.5)).abs() < 1e-15);
        assert!(a <= 1.5 && g <= 6f64.sqrt() * 1.5);
        assert!(matches!(alpha_gamma(1.0, 1.0, 1.0), Err(Error::DegenerateRip(_))));
    }

    #[test]
    fn recovery_condition_edges() {
        let x = [1.0, -2.0];
        assert!(check_rc(0.0, 1.0, &x, 2));
        assert!(!check_rc(0.25, 1.0, &x, 2));
        assert!(check_hrip(&x, 0.0, 0.0, 1.0, 2));
        assert!(check_min_condition(&x, 0.0, 0.3));
        assert!(!check_min_condition(&x, 1e-3, 1.0 - 1e-12));
        assert_eq!(check_hsrip(&x, 0.0, 2), (0.0, true));
    }

    #[test]
    fn hrip_threshold_for_constant_amplitudes() {
        let k = 4usize;
        let x = vec![1.5; k];
        let thr = 1.0 / (2.0 * (k as f64).powf(1.5));
        assert!(check_hrip(&x, 0.0, thr * 0.999, 1.0, k));
        assert!(!check_hrip(&x, 0.0, thr * 1.001, 1.0, k));
        let (tau, _) = check_hsrip(&x, 0.01, k);
        assert!((tau - 2.0 * (k as f64).powf(1.5) * 0.01).abs() < 1e-12);
    }

    #[test]
    fn bounds_collapse_at_zero_start() {
        let b = iteration_bounds(&BoundInputs {
            k: 3,
            eta: 0.7,
            x0: vec![0.0; 6],
            x_star_support: Support::new(vec![0, 2, 4]),
            x_star: vec![1.0, 2.0, -1.5],
            e_norm: 0.0,
            eps_max: 0.0,
            alpha: Some(0.0),
            gamma: Some(1.0),
        });
        assert_eq!(b.t_max.0, 4.0);
        assert_eq!(b.t_oracle.0, 3.0);
        assert_eq!(b.t_srip.0, 4.0);
        assert_eq!(b.t_rip.0, 4.0);
        assert_eq!(b.t_max_sharp.0, 4.0);
    }

    #[test]
    fn bounds_are_infinite_past_their_conditions() {
        let b = iteration_bounds(&BoundInputs {
            k: 2,
            eta: 1.0,
            x0: vec![0.0; 4],
            x_star_support: Support::new(vec![0, 1]),
            x_star: vec![1.0, 1.0],
            e_norm: 1.0,
            eps_max: 10.0,
            alpha: Some(0.9),
            gamma: Some(1.0),
        });
        assert!(b.t_max.0.is_infinite() && b.t_rip.0.is_infinite() && b.t_srip.0.is_infinite());
        assert_eq!(serde_json::to_string(&b.t_max).unwrap(), "\"inf\"");
        let back: Real = serde_json::from_str("\"inf\"").unwrap();
        assert!(back.0.is_infinite());
    }
}
