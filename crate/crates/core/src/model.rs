//! Supports, sparse vectors, problem instances and their generators.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ColumnScaling, DenseMatrix};

/// Sorted, duplicate-free set of 0-based column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Support(Vec<usize>);

impl Support {
    pub fn new(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Self(idx)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection_len(&self, other: &Support) -> usize {
        let (mut a, mut b, mut n) = (0, 0, 0);
        while a < self.0.len() && b < other.0.len() {
            match self.0[a].cmp(&other.0[b]) {
                Ordering::Less => a += 1,
                Ordering::Greater => b += 1,
                Ordering::Equal => {
                    n += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        n
    }

    /// Indices of `self` not in `other`.
    pub fn difference(&self, other: &Support) -> Vec<usize> {
        self.iter().filter(|&i| !other.contains(i)).collect()
    }

    /// `;`-joined 1-based indices, the on-disk form.
    pub fn to_one_based_string(&self) -> String {
        self.0.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
    }

    pub fn parse_one_based(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let mut idx = Vec::new();
        for tok in s.split(';') {
            let v: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad support index {tok:?}")))?;
            if v == 0 {
                return Err(Error::Parse("support indices are 1-based".into()));
            }
            idx.push(v - 1);
        }
        Ok(Self::new(idx))
    }
}

/// Indices of the `k` entries of largest magnitude.
///
/// Among equal magnitudes the larger index wins, so `largest_k(0, k)` is the
/// last `k` indices. Comparison uses `f64::total_cmp` on `|v_i|`.
pub fn largest_k(v: &[f64], k: usize) -> Support {
    let n = v.len();
    if k >= n {
        return Support((0..n).collect());
    }
    if k == 0 {
        return Support::empty();
    }
    // Strict total order, so selection is unambiguous.
    let before = |&a: &usize, &b: &usize| -> Ordering {
        v[b].abs().total_cmp(&v[a].abs()).then(b.cmp(&a))
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.select_nth_unstable_by(k - 1, before);
    idx.truncate(k);
    Support::new(idx)
}

/// A length-`n` vector stored as its support and the values on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub n: usize,
    pub support: Support,
    /// `values[a]` sits at index `support.indices()[a]`.
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, support: Support::empty(), values: Vec::new() }
    }

    pub fn new(n: usize, support: Support, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} support indices but {} values",
                support.len(),
                values.len()
            )));
        }
        if support.iter().any(|i| i >= n) {
            return Err(Error::InvalidArgument("support index exceeds dimension".into()));
        }
        Ok(Self { n, support, values })
    }

    /// Restriction of a dense vector to `support`.
    pub fn restrict(x: &[f64], support: &Support) -> Self {
        let values = support.iter().map(|i| x[i]).collect();
        Self { n: x.len(), support: support.clone(), values }
    }

    pub fn densify(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, v) in self.support.iter().zip(&self.values) {
            out[i] = *v;
        }
        out
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.support.indices().binary_search(&i) {
            Ok(a) => self.values[a],
            Err(_) => 0.0,
        }
    }

    /// Number of entries with `|v| > tol`.
    pub fn nnz(&self, tol: f64) -> usize {
        self.values.iter().filter(|v| v.abs() > tol).count()
    }

    /// Support after dropping entries with `|v| ≤ tol`.
    pub fn effective_support(&self, tol: f64) -> Support {
        Support::new(
            self.support
                .iter()
                .zip(&self.values)
                .filter(|(_, v)| v.abs() > tol)
                .map(|(i, _)| i)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixKind {
    Gaussian,
    Convolution { sigma: f64 },
    Orthonormal,
}

/// Where the noise enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `y = A x* + e`, `‖e‖ = fraction · ‖A x*‖`.
    #[default]
    AfterA,
    /// `y = A (x* + e)`, `‖e‖ = fraction · ‖x*‖`.
    BeforeA,
}

impl NoiseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseMode::AfterA => "after_A",
            NoiseMode::BeforeA => "before_A",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub matrix: MatrixKind,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_fraction: f64,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    /// Magnitudes are uniform on `[lo, hi]`, signs are a fair coin.
    pub amplitude_range: (f64, f64),
    /// Draw magnitudes from the integers in `[lo, hi]` instead.
    #[serde(default)]
    pub integer_amplitudes: bool,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn gaussian(m: usize, n: usize, k: usize, seed: u64) -> Self {
        Self {
            matrix: MatrixKind::Gaussian,
            m,
            n,
            k,
            noise_fraction: 0.0,
            noise_mode: NoiseMode::AfterA,
            amplitude_range: (1.0, 2.0),
            integer_amplitudes: false,
            seed,
        }
    }

    pub fn convolution(n: usize, sigma: f64, k: usize, seed: u64) -> Self {
        Self { matrix: MatrixKind::Convolution { sigma }, ..Self::gaussian(n, n, k, seed) }
    }

    pub fn with_noise(mut self, fraction: f64, mode: NoiseMode) -> Self {
        self.noise_fraction = fraction;
        self.noise_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.amplitude_range;
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("m and n must be positive".into()));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::InvalidArgument(format!("k must be in 1..={} (got {})", self.n, self.k)));
        }
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude range ({lo}, {hi}) invalid")));
        }
        if self.integer_amplitudes && lo.ceil() > hi.floor() {
            return Err(Error::InvalidArgument("amplitude range holds no integer".into()));
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite()) {
            return Err(Error::InvalidArgument("noise fraction must be >= 0".into()));
        }
        match self.matrix {
            MatrixKind::Convolution { sigma } => {
                if self.m != self.n {
                    return Err(Error::InvalidArgument("convolution matrices are square".into()));
                }
                if !(sigma > 0.0) {
                    return Err(Error::InvalidArgument("sigma must be positive".into()));
                }
            }
            MatrixKind::Orthonormal => {
                if self.m < self.n {
                    return Err(Error::InvalidArgument("orthonormal columns need m >= n".into()));
                }
            }
            MatrixKind::Gaussian => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub x_star: SparseVector,
    /// Noise as seen in observation space, so `y = A x* + noise`.
    pub noise: Vec<f64>,
}

/// `y ≈ A x` with `A` column-normalized and a sparsity level `k`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: Arc<DenseMatrix>,
    pub y: Vec<f64>,
    pub k: usize,
    pub truth: Option<Truth>,
    pub scaling: Option<ColumnScaling>,
    pub spec: Option<GeneratorSpec>,
}

impl Problem {
    pub fn new(a: Arc<DenseMatrix>, y: Vec<f64>, k: usize) -> Result<Self> {
        if y.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "y has length {}, A has {} rows",
                y.len(),
                a.rows()
            )));
        }
        if k == 0 || k > a.cols() {
            return Err(Error::InvalidArgument(format!("k must be in 1..={} (got {k})", a.cols())));
        }
        Ok(Self { a, y, k, truth: None, scaling: None, spec: None })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn truth(&self) -> Result<&Truth> {
        self.truth.as_ref().ok_or(Error::MissingGroundTruth)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seed for `(base, run, tag)`.
pub fn derive_seed(base: u64, run: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(run ^ splitmix64(tag)))
}

pub const TAG_MATRIX: u64 = 1;
pub const TAG_SIGNAL: u64 = 2;
pub const TAG_NOISE: u64 = 3;
pub const TAG_SOLVER: u64 = 4;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k`-sparse signal with a uniform random support, magnitudes from
/// `amplitude_range` and independent fair-coin signs.
pub fn generate_sparse_signal<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    amplitude_range: (f64, f64),
    integer_amplitudes: bool,
    rng: &mut R,
) -> SparseVector {
    let support = Support::new(sample(rng, n, k).into_vec());
    let (lo, hi) = amplitude_range;
    let values = (0..k)
        .map(|_| {
            let mag = if integer_amplitudes {
                rng.random_range(lo.ceil() as i64..=hi.floor() as i64) as f64
            } else if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    SparseVector { n, support, values }
}

/// Uniform draw from the sphere of radius `radius` in `R^len`.
pub fn sphere_noise<R: Rng + ?Sized>(len: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    if radius == 0.0 || len == 0 {
        return vec![0.0; len];
    }
    loop {
        let g: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = linalg::norm2(&g);
        if nrm > 0.0 {
            return g.into_iter().map(|v| v * radius / nrm).collect();
        }
    }
}

/// The sensing matrix a spec describes, column-normalized.
pub fn generate_matrix(spec: &GeneratorSpec) -> Result<(DenseMatrix, ColumnScaling)> {
    let mut rng = seeded_rng(derive_seed(spec.seed, 0, TAG_MATRIX));
    let mut a = match spec.matrix {
        MatrixKind::Gaussian => linalg::gaussian_matrix(spec.m, spec.n, &mut rng),
        MatrixKind::Convolution { sigma } => linalg::gaussian_convolution_matrix(spec.n, sigma)?,
        MatrixKind::Orthonormal => linalg::random_orthonormal(spec.m, spec.n, &mut rng)?,
    };
    let scaling = linalg::normalize_columns(&mut a)?;
    Ok((a, scaling))
}

/// Builds a full instance from a spec.
pub fn build_problem(spec: &GeneratorSpec) -> Result<Problem> {
    spec.validate()?;
    let (a, scaling) = generate_matrix(spec)?;
    build_problem_with_matrix(spec, Arc::new(a), Some(scaling))
}

/// Draws signal and noise for a spec on a given (already normalized) matrix.
pub fn build_problem_with_matrix(
    spec: &GeneratorSpec,
    a: Arc<DenseMatrix>,
    scaling: Option<ColumnScaling>,
) -> Result<Problem> {
    spec.validate()?;
    if a.rows() != spec.m || a.cols() != spec.n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, spec asks for {}x{}",
            a.rows(),
            a.cols(),
            spec.m,
            spec.n
        )));
    }
    let mut srng = seeded_rng(derive_seed(spec.seed, 0, TAG_SIGNAL));
    let x_star = generate_sparse_signal(
        spec.n,
        spec.k,
        spec.amplitude_range,
        spec.integer_amplitudes,
        &mut srng,
    );
    let mut nrng = seeded_rng(derive_seed(spec.seed, 0, TAG_NOISE));
    let clean = a.matvec_restricted(x_star.support.indices(), &x_star.values);
    let (y, noise) = match spec.noise_mode {
        NoiseMode::AfterA => {
            let e = sphere_noise(spec.m, spec.noise_fraction * linalg::norm2(&clean), &mut nrng);
            let y = clean.iter().zip(&e).map(|(c, e)| c + e).collect();
            (y, e)
        }
        NoiseMode::BeforeA => {
            let radius = spec.noise_fraction * linalg::norm2(&x_star.values);
            let e = sphere_noise(spec.n, radius, &mut nrng);
            let ae = a.matvec(&e);
            let y = clean.iter().zip(&ae).map(|(c, e)| c + e).collect();
            (y, ae)
        }
    };
    let mut p = Problem::new(a, y, spec.k)?;
    p.truth = Some(Truth { x_star, noise });
    p.scaling = scaling;
    p.spec = Some(spec.clone());
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_k_breaks_ties_toward_higher_index() {
        assert_eq!(largest_k(&[0.0; 6], 2).indices(), &[4, 5]);
        assert_eq!(largest_k(&[1.0, -1.0, 1.0, 0.5], 2).indices(), &[1, 2]);
        assert_eq!(largest_k(&[3.0, -1.0, 0.0, -4.0], 2).indices(), &[0, 3]);
        assert_eq!(largest_k(&[1.0, 2.0], 5).indices(), &[0, 1]);
        assert!(largest_k(&[1.0, 2.0], 0).is_empty());
    }

    #[test]
    fn support_round_trips_through_one_based_text() {
        let s = Support::new(vec![4, 0, 2]);
        assert_eq!(s.to_one_based_string(), "1;3;5");
        assert_eq!(Support::parse_one_based("1;3;5").unwrap(), s);
        assert!(Support::parse_one_based("0;1").is_err());
        assert!(Support::parse_one_based("").unwrap().is_empty());
    }

    #[test]
    fn support_set_operations() {
        let a = Support::new(vec![1, 3, 5, 7]);
        let b = Support::new(vec![3, 4, 7]);
        assert_eq!(a.intersection_len(&b), 2);
        assert_eq!(a.difference(&b), vec![1, 5]);
    }

    #[test]
    fn seeds_are_distinct_per_tag_and_run() {
        let s: std::collections::HashSet<u64> = (0..100)
            .flat_map(|r| (1..5).map(move |t| derive_seed(7, r, t)))
            .collect();
        assert_eq!(s.len(), 400);
    }

    #[test]
    fn generated_problem_satisfies_model() {
        let spec = GeneratorSpec::gaussian(20, 30, 4, 9).with_noise(0.1, NoiseMode::AfterA);
        let p = build_problem(&spec).unwrap();
        let t = p.truth().unwrap();
        assert_eq!(t.x_star.support.len(), 4);
        for v in &t.x_star.values {
            assert!((1.0..=2.0).contains(&v.abs()));
        }
        let clean = p.a.matvec(&t.x_star.densify());
        let en = linalg::norm2(&t.noise);
        assert!((en - 0.1 * linalg::norm2(&clean)).abs() < 1e-12);
        for i in 0..20 {
            assert!((p.y[i] - clean[i] - t.noise[i]).abs() < 1e-12);
        }
        let again = build_problem(&spec).unwrap();
        assert_eq!(again.y, p.y);
    }

    #[test]
    fn before_a_noise_is_scaled_by_signal_norm() {
        let spec = GeneratorSpec::gaussian(15, 15, 3, 2).with_noise(0.2, NoiseMode::BeforeA);
        let p = build_problem(&spec).unwrap();
        let t = p.truth().unwrap();
        let xs = t.x_star.densify();
        let clean = p.a.matvec(&xs);
        for i in 0..15 {
            assert!((p.y[i] - clean[i] - t.noise[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_amplitudes_are_integers() {
        let mut rng = seeded_rng(1);
        let x = generate_sparse_signal(50, 20, (1.0, 10.0), true, &mut rng);
        assert!(x.values.iter().all(|v| v.fract() == 0.0 && (1.0..=10.0).contains(&v.abs())));
    }

    #[test]
    fn spec_validation_rejects_bad_inputs() {
        assert!(GeneratorSpec::gaussian(5, 5, 0, 0).validate().is_err());
        assert!(GeneratorSpec::gaussian(5, 5, 6, 0).validate().is_err());
        let mut s = GeneratorSpec::convolution(8, 1.0, 2, 0);
        s.m = 7;
        assert!(s.validate().is_err());
    }
}
