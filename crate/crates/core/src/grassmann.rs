//! Haar sampling on Grassmannians and Monte Carlo mean values over them.
//!
//! A mean value `(1/g_n^k) ∫_{G_n^k} f(H) dH` is estimated as the sample
//! average of `f` over Haar-distributed subspaces. The Grassmannian volume
//! never appears. Sample `i` draws from its own ChaCha stream keyed by
//! `(seed, i)`, so an estimate is bit-identical for every worker count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Residual norm below which a Gaussian draw is treated as rank deficient.
const RANK_THRESHOLD: f64 = 1e-8;
/// Orthonormality tolerance for user-supplied frames.
const FRAME_TOLERANCE: f64 = 1e-10;
/// Redraws allowed for a single sample before giving up on it.
const MAX_REDRAWS_PER_SAMPLE: usize = 64;

/// A `k`-dimensional linear subspace of `R^n`, stored as an orthonormal frame
/// (the columns of an `n × k` matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an already orthonormal frame.
    pub fn from_frame(frame: DMatrix<f64>) -> Result<Self> {
        let gram = frame.transpose() * &frame;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > FRAME_TOLERANCE {
                    return Err(Error::InvalidSubspace(format!("frame is not orthonormal: <f{i}, f{j}> = {}", gram[(i, j)])));
                }
            }
        }
        Ok(Subspace { frame })
    }

    /// Orthonormalises a spanning family. Fails on (numerically) dependent
    /// vectors.
    pub fn span(ambient_dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        let mut columns: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
        for (idx, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::InvalidSubspace(format!("vector {idx} has length {} in R^{ambient_dim}", v.len())));
            }
            let scale = v.norm();
            match orthogonalize(v, &columns) {
                Some(u) if u.norm() > RANK_THRESHOLD * scale.max(1.0) => {
                    let n = u.norm();
                    columns.push(u / n);
                }
                _ => return Err(Error::InvalidSubspace(format!("vector {idx} is linearly dependent on the previous ones"))),
            }
        }
        Ok(Subspace { frame: columns_to_matrix(ambient_dim, &columns) })
    }

    pub fn full(n: usize) -> Self {
        Subspace { frame: DMatrix::identity(n, n) }
    }

    pub fn zero(n: usize) -> Self {
        Subspace { frame: DMatrix::zeros(n, 0) }
    }

    /// `span(e_i : i ∈ axes)`.
    pub fn coordinate(n: usize, axes: &[usize]) -> Self {
        let mut frame = DMatrix::zeros(n, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            frame[(i, j)] = 1.0;
        }
        Subspace { frame }
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn basis_vector(&self, j: usize) -> DVector<f64> {
        self.frame.column(j).into_owned()
    }

    /// Orthonormal basis of the orthogonal complement, as columns.
    pub fn complement(&self) -> DMatrix<f64> {
        let n = self.ambient_dim();
        let mut basis: Vec<DVector<f64>> = (0..self.dim()).map(|j| self.basis_vector(j)).collect();
        let k = basis.len();
        for i in 0..n {
            if basis.len() == n {
                break;
            }
            let e = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
            if let Some(u) = orthogonalize(&e, &basis) {
                let norm = u.norm();
                if norm > 1e-6 {
                    basis.push(u / norm);
                }
            }
        }
        columns_to_matrix(n, &basis[k..])
    }

    /// Coordinates of `v` in the frame (orthogonal projection).
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.frame.transpose() * v
    }

    pub fn distance_to(&self, v: &DVector<f64>) -> f64 {
        (v - &self.frame * self.coordinates(v)).norm()
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.distance_to(v) <= tol * v.norm().max(1.0)
    }

    /// Image under an ambient orthogonal map `q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Subspace {
        Subspace { frame: q * &self.frame }
    }

    /// Same subspace, frame multiplied on the right by a `k × k` orthogonal `r`.
    pub fn regauged(&self, r: &DMatrix<f64>) -> Subspace {
        Subspace { frame: &self.frame * r }
    }
}

/// The affine flat `x0 + H`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFlat {
    pub origin: DVector<f64>,
    pub direction: Subspace,
}

impl AffineFlat {
    pub fn linear(direction: Subspace) -> Self {
        let n = direction.ambient_dim();
        AffineFlat { origin: DVector::zeros(n), direction }
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        self.direction.contains(&(p - &self.origin), tol)
    }

    pub fn is_linear(&self) -> bool {
        self.origin.iter().all(|&c| c == 0.0)
    }
}

/// The affine flat through `x0` with direction `h`.
pub fn shift_subspace(h: &Subspace, x0: &DVector<f64>) -> Result<AffineFlat> {
    if x0.len() != h.ambient_dim() || x0.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(format!("base point must be a finite vector of R^{}", h.ambient_dim())));
    }
    Ok(AffineFlat { origin: x0.clone(), direction: h.clone() })
}

/// Mean value estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Draws rejected as degenerate and redrawn.
    #[serde(default)]
    pub rejected: usize,
}

impl MonteCarloEstimate {
    pub fn exact(value: f64, n_samples: usize, seed: u64) -> Self {
        MonteCarloEstimate { mean: value, stderr: 0.0, n_samples, seed, rejected: 0 }
    }

    /// Sample mean and standard error of the mean. All-equal samples give an
    /// exactly zero standard error.
    pub fn from_samples(samples: &[f64], seed: u64, rejected: usize) -> Self {
        let n = samples.len();
        if n == 0 {
            return MonteCarloEstimate::exact(0.0, 0, seed);
        }
        let first = samples[0];
        if samples.iter().all(|&x| x == first) {
            return MonteCarloEstimate { rejected, ..MonteCarloEstimate::exact(first, n, seed) };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        MonteCarloEstimate { mean, stderr: (var / n as f64).sqrt(), n_samples: n, seed, rejected }
    }

    pub fn scaled(self, factor: f64) -> Self {
        MonteCarloEstimate { mean: self.mean * factor, stderr: self.stderr * factor.abs(), ..self }
    }
}

/// The deterministic random stream for work item `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Uniform direction on the unit sphere of `R^n`.
pub fn sphere_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = gaussian_vector(n, rng);
        let norm = g.norm();
        if norm > RANK_THRESHOLD {
            return g / norm;
        }
    }
}

/// Haar-distributed `k`-plane of `R^n`: Gram-Schmidt on `k` standard normal
/// vectors, redrawn when a residual drops below `1e-8`.
pub fn haar_sample<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Subspace {
    assert!(k <= n, "haar_sample: k = {k} exceeds n = {n}");
    if k == n {
        return Subspace::full(n);
    }
    'draw: loop {
        let mut columns: Vec<DVector<f64>> = Vec::with_capacity(k);
        for _ in 0..k {
            let g = gaussian_vector(n, rng);
            match orthogonalize(&g, &columns) {
                Some(u) if u.norm() >= RANK_THRESHOLD => {
                    let norm = u.norm();
                    columns.push(u / norm);
                }
                _ => continue 'draw,
            }
        }
        return Subspace { frame: columns_to_matrix(n, &columns) };
    }
}

/// Outcome of evaluating an integrand on one sampled subspace.
#[derive(Debug)]
pub enum SampleError {
    /// The subspace hit a measure-zero bad set; redraw.
    Degenerate(String),
    Fatal(Error),
}

impl From<Error> for SampleError {
    fn from(e: Error) -> Self {
        if e.is_degenerate() {
            SampleError::Degenerate(e.to_string())
        } else {
            SampleError::Fatal(e)
        }
    }
}

/// Monte Carlo estimate of the Haar mean of `f` over `G_n^k`.
///
/// Degenerate samples are redrawn from the same stream; more than 1% of
/// rejections overall is an error. `G_n^0` and `G_n^n` are single points and
/// are evaluated once.
pub fn grassmann_mean<F>(n: usize, k: usize, f: F, n_samples: usize, seed: u64) -> Result<MonteCarloEstimate>
where
    F: Fn(&Subspace) -> std::result::Result<f64, SampleError> + Sync + Send,
{
    if k > n {
        return Err(Error::InvalidArgument(format!("G_{n}^{k} is empty")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    if k == 0 || k == n {
        let point = if k == 0 { Subspace::zero(n) } else { Subspace::full(n) };
        return match f(&point) {
            Ok(v) => Ok(MonteCarloEstimate::exact(v, n_samples, seed)),
            Err(SampleError::Degenerate(msg)) => Err(Error::Degenerate(msg)),
            Err(SampleError::Fatal(e)) => Err(e),
        };
    }

    monte_carlo_mean(n_samples, seed, 0, |rng| f(&haar_sample(n, k, rng)))
}

/// Monte Carlo mean of `draw` over `n_samples` independent streams
/// `stream_base + i`. A degenerate draw is redrawn from the same stream;
/// more than 1% of rejections overall is an error.
pub fn monte_carlo_mean<F>(n_samples: usize, seed: u64, stream_base: u64, draw: F) -> Result<MonteCarloEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> std::result::Result<f64, SampleError> + Sync + Send,
{
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let draws = par::map_indexed(n_samples, |i| -> Result<(f64, usize)> {
        let mut rng = stream_rng(seed, stream_base + i as u64);
        let mut rejected = 0;
        loop {
            match draw(&mut rng) {
                Ok(v) => return Ok((v, rejected)),
                Err(SampleError::Degenerate(_)) => {
                    rejected += 1;
                    if rejected > MAX_REDRAWS_PER_SAMPLE {
                        return Err(Error::DegenerateBudget { rejected, samples: 1 });
                    }
                }
                Err(SampleError::Fatal(e)) => return Err(e),
            }
        }
    });

    let mut values = Vec::with_capacity(n_samples);
    let mut rejected = 0;
    for draw in draws {
        let (v, r) = draw?;
        values.push(v);
        rejected += r;
    }
    if rejected as f64 > 0.01 * n_samples as f64 {
        return Err(Error::DegenerateBudget { rejected, samples: n_samples });
    }
    Ok(MonteCarloEstimate::from_samples(&values, seed, rejected))
}

/// Removes the components of `v` along the orthonormal `basis` (two passes).
pub(crate) fn orthogonalize(v: &DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let mut u = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&u);
            u.axpy(-c, b, 1.0);
        }
    }
    if u.iter().all(|c| c.is_finite()) {
        Some(u)
    } else {
        None
    }
}

pub(crate) fn columns_to_matrix(n: usize, columns: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, columns.len());
    for (j, c) in columns.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// A Haar-random orthogonal `n × n` matrix.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    // a full frame from haar_sample(n, n) would be the identity, so build it
    // column by column
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    while columns.len() < n {
        let g = gaussian_vector(n, rng);
        if let Some(u) = orthogonalize(&g, &columns) {
            let norm = u.norm();
            if norm > RANK_THRESHOLD {
                columns.push(u / norm);
            }
        }
    }
    columns_to_matrix(n, &columns)
}
