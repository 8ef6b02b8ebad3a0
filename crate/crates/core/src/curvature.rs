//! Second fundamental forms and Lipschitz-Killing-Weyl densities of smooth
//! submanifolds.
//!
//! For a `d`-dimensional submanifold of `R^n` and a point `x`, the density
//! `K_i(x)` integrates `σ_i(II_{x,v})` over the unit normal sphere `S_x`.
//! In codimension one the normal sphere is `{ν, −ν}` and the integral is an
//! exact two-point sum. In higher codimension it is a Monte Carlo mean over
//! antithetic pairs `(v, −v)`, which cancels odd orders exactly.
//!
//! The form is read in an orthonormalised tangent basis, so its eigenvalues
//! are principal curvatures. With `G = L Lᵀ` the Gram matrix of the chart
//! derivatives and `H_{ab} = ⟨∂_a ∂_b x, v⟩`, the matrix is `L⁻¹ H L⁻ᵀ`.
//! The sign convention is internal: every reported quantity is even in `v`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::ChartPoint;
use crate::error::{Error, Result};
use crate::geomconst::sphere_volume;
use crate::grassmann::{sphere_direction, Subspace};

/// Gram determinants below this make the chart unusable at a point.
pub const GRAM_THRESHOLD: f64 = 1e-12;
/// Tolerance for a direction to count as normal.
const NORMAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm {
    pub at: DVector<f64>,
    pub direction: DVector<f64>,
    /// Symmetric `d × d` matrix in an orthonormal tangent basis.
    pub matrix: DMatrix<f64>,
}

impl SecondFundamentalForm {
    /// Principal curvatures in the direction of the form, ascending.
    pub fn principal_curvatures(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Orthonormalising data of the tangent frame at a chart point.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    /// Inverse of the lower Cholesky factor of the Gram matrix.
    linv: DMatrix<f64>,
    pub gram_det: f64,
    /// Orthonormal basis of the normal space, as columns.
    pub normals: DMatrix<f64>,
}

impl TangentFrame {
    pub fn new(point: &ChartPoint) -> Result<Self> {
        let d = point.d1.len();
        let n = point.x.len();
        let g = DMatrix::from_fn(d, d, |a, b| point.d1[a].dot(&point.d1[b]));
        let det = g.determinant();
        if det.is_nan() || det < GRAM_THRESHOLD {
            return Err(Error::DegenerateChart(det));
        }
        let linv = g.cholesky().and_then(|c| c.l().try_inverse()).ok_or(Error::DegenerateChart(det))?;
        let normals = if n - d == 1 && n == 3 {
            let c = point.d1[0].cross(&point.d1[1]);
            DMatrix::from_column_slice(3, 1, (c.clone() / c.norm()).as_slice())
        } else {
            Subspace::span(n, &point.d1).map_err(|_| Error::DegenerateChart(det))?.complement()
        };
        Ok(TangentFrame { linv, gram_det: det, normals })
    }

    /// `sqrt(det G)`, the area element of the chart.
    pub fn area_element(&self) -> f64 {
        self.gram_det.sqrt()
    }

    pub fn codim(&self) -> usize {
        self.normals.ncols()
    }

    /// The form in direction `v`, assumed normal and unit.
    fn form(&self, point: &ChartPoint, v: &DVector<f64>) -> DMatrix<f64> {
        let d = point.d1.len();
        let h = DMatrix::from_fn(d, d, |a, b| point.d2[a][b].dot(v));
        let m = &self.linv * h * self.linv.transpose();
        // exact symmetrisation keeps σ_i(−M) = (−1)^i σ_i(M) bitwise
        DMatrix::from_fn(d, d, |a, b| if a <= b { m[(a, b)] } else { m[(b, a)] })
    }
}

/// `II_{x,v}` in an orthonormalised tangent basis.
pub fn second_fundamental_form(point: &ChartPoint, v: &DVector<f64>) -> Result<SecondFundamentalForm> {
    let frame = TangentFrame::new(point)?;
    let scale = point.d1.iter().map(|t| t.norm()).fold(0.0f64, f64::max);
    let off = point.d1.iter().map(|t| t.dot(v).abs()).fold(0.0f64, f64::max);
    if off > NORMAL_TOLERANCE * scale.max(1.0) * v.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!("direction is not normal to the tangent space (|<t, v>| = {off:e})")));
    }
    Ok(SecondFundamentalForm { at: point.x.clone(), direction: v.clone(), matrix: frame.form(point, v) })
}

/// `σ_i` of the eigenvalues of the symmetric matrix `m`, from the power sums
/// `tr(m^j)` by Newton's identities.
pub fn sigma(m: &DMatrix<f64>, i: usize) -> f64 {
    sigmas(m)[i]
}

/// `[σ_0, ..., σ_d]` of a symmetric `d × d` matrix.
pub fn sigmas(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut p = Vec::with_capacity(d + 1);
    p.push(d as f64);
    let mut power = DMatrix::identity(d, d);
    for _ in 0..d {
        power = &power * m;
        p.push(power.trace());
    }
    let mut e = vec![1.0; d + 1];
    for k in 1..=d {
        let mut acc = 0.0;
        for j in 1..=k {
            let term = e[k - j] * p[j];
            if j % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e[k] = acc / k as f64;
    }
    e
}

/// `K_i(x)` with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureDensity {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    /// Normal directions in codimension ≥ 2, drawn as antithetic pairs.
    pub normal_samples: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { normal_samples: 512 }
    }
}

/// `K_0(x), ..., K_d(x)` in one pass.
pub fn k_densities<R: Rng + ?Sized>(point: &ChartPoint, opts: &DensityOptions, rng: &mut R) -> Result<Vec<CurvatureDensity>> {
    let frame = TangentFrame::new(point)?;
    Ok(densities_with_frame(point, &frame, opts, rng))
}

pub(crate) fn densities_with_frame<R: Rng + ?Sized>(
    point: &ChartPoint,
    frame: &TangentFrame,
    opts: &DensityOptions,
    rng: &mut R,
) -> Vec<CurvatureDensity> {
    let d = point.d1.len();
    let c = frame.codim();
    let pair_sums = |v: &DVector<f64>| -> Vec<f64> {
        let m = frame.form(point, v);
        let plus = sigmas(&m);
        let minus = sigmas(&(-m));
        plus.iter().zip(&minus).map(|(a, b)| a + b).collect()
    };
    if c == 1 {
        let nu = frame.normals.column(0).into_owned();
        return pair_sums(&nu).into_iter().enumerate().map(|(i, value)| CurvatureDensity { order: i, value, stderr: 0.0 }).collect();
    }
    // mean of σ_i over S^{c−1} times its area; each pair contributes the
    // average of its two members
    let pairs = (opts.normal_samples / 2).max(1);
    let area = sphere_volume(c - 1);
    let mut sum = vec![0.0; d + 1];
    let mut sum_sq = vec![0.0; d + 1];
    let mut first: Option<Vec<f64>> = None;
    let mut all_equal = vec![true; d + 1];
    for _ in 0..pairs {
        let w = sphere_direction(c, rng);
        let v = &frame.normals * w;
        let s: Vec<f64> = pair_sums(&v).into_iter().map(|x| 0.5 * x).collect();
        match &first {
            None => first = Some(s.clone()),
            Some(f) => {
                for i in 0..=d {
                    all_equal[i] &= f[i] == s[i];
                }
            }
        }
        for i in 0..=d {
            sum[i] += s[i];
            sum_sq[i] += s[i] * s[i];
        }
    }
    let np = pairs as f64;
    (0..=d)
        .map(|i| {
            let mean = sum[i] / np;
            let stderr =
                if all_equal[i] || pairs < 2 { 0.0 } else { ((sum_sq[i] / np - mean * mean).max(0.0) * np / (np - 1.0) / np).sqrt() };
            CurvatureDensity { order: i, value: area * mean, stderr: area * stderr }
        })
        .collect()
}

/// `K_i(x)` alone.
pub fn k_density<R: Rng + ?Sized>(point: &ChartPoint, i: usize, opts: &DensityOptions, rng: &mut R) -> Result<CurvatureDensity> {
    let d = point.d1.len();
    if i > d {
        return Err(Error::InvalidArgument(format!("order {i} exceeds the dimension {d}")));
    }
    Ok(k_densities(point, opts, rng)?[i])
}

/// `λ_k(x) = K_{d−k}(x) / s_{n−k−1}`, zero for `k > d`.
pub fn lambda_density<R: Rng + ?Sized>(point: &ChartPoint, k: usize, opts: &DensityOptions, rng: &mut R) -> Result<f64> {
    let d = point.d1.len();
    let n = point.x.len();
    if k > d {
        return Ok(0.0);
    }
    Ok(k_density(point, d - k, opts, rng)?.value / sphere_volume(n - k - 1))
}
