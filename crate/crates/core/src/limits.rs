//! Growth limits `lim_{R→∞} Λ_k(X, X ∩ B_R) / (b_k R^k)` from radius sweeps.
//!
//! Linear sets and cones centred at the origin are exact and radius-free.
//! Shifted cones and smooth sets are evaluated on a doubling schedule and
//! extrapolated: a plateau is taken as is, a geometrically converging tail
//! by Aitken's Δ² on the last three radii, anything else by a least-squares
//! fit of `a + c/R`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::catalog::{SetDescriptor, SetKind};
use crate::cubature::{curvature_integrals, CubatureSpec};
use crate::error::{Error, Result};
use crate::geomconst::ball_volume;
use crate::grassmann::Subspace;
use crate::par;
use crate::spherical::{conic_lk_measure_at, spherical_lk};

/// Relative spread below which a sweep counts as a plateau.
const PLATEAU_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitModel {
    Plateau,
    Aitken,
    InverseRadius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub k: usize,
    pub value: f64,
    pub uncertainty: f64,
    pub radii: Vec<f64>,
    pub normalized_values: Vec<f64>,
    /// Per-radius uncertainty of the normalized values.
    pub normalized_uncertainties: Vec<f64>,
    pub converged: bool,
    pub model: LimitModel,
}

/// Numerical settings shared by all radii of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Direction samples per vertex for conic sets.
    pub n_samples: usize,
    pub seed: u64,
    pub cubature: CubatureSpec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { n_samples: 4000, seed: 42, cubature: CubatureSpec::default() }
    }
}

/// Normalized values `Λ_k(X, X ∩ B_R(c)) / (b_k R^k)` for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSample {
    pub radius: f64,
    /// `(value, uncertainty)`, indexed by `k − 1`.
    pub normalized: Vec<(f64, f64)>,
    /// `Λ_0(X, X ∩ B_R(c))` when it comes from the cubature or flat geometry.
    pub lambda0: Option<(f64, f64)>,
}

/// `Λ_k(X, X ∩ B_R(c)) / (b_k R^k)` for every `k ∈ [1, n]` at one radius.
pub fn normalized_lks(set: &SetDescriptor, radius: f64, center: &DVector<f64>, opts: &SweepOptions) -> Result<RadiusSample> {
    let n = set.ambient_dim;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive and finite, got {radius}")));
    }
    if center.len() != n {
        return Err(Error::InvalidArgument(format!("centre has {} coordinates, expected {n}", center.len())));
    }
    let norm = |k: usize| ball_volume(k) * radius.powi(k as i32);
    let mut lambda0 = None;
    let normalized = match &set.kind {
        SetKind::Linear(v) => {
            lambda0 = Some((0.0, 0.0));
            (1..=n).map(|k| (linear_normalized(v, k, radius, center), 0.0)).collect()
        }
        SetKind::Conic(g) if center.iter().all(|&c| c == 0.0) => {
            // homogeneity: Λ_k(X, B_R) / (b_k R^k) = Λ̃_{k−1} / (k b_k)
            let mut out = Vec::with_capacity(n);
            for k in 1..=n {
                let lk = spherical_lk(g, k - 1, opts.n_samples, opts.seed)?;
                let s = k as f64 * ball_volume(k);
                out.push((lk.value / s, lk.stderr / s));
            }
            out
        }
        SetKind::Conic(g) => {
            let mut out = Vec::with_capacity(n);
            for k in 1..=n {
                let (v, u) = conic_lk_measure_at(g, k, radius, center, opts.n_samples, opts.seed)?;
                out.push((v / norm(k), u / norm(k)));
            }
            out
        }
        SetKind::Smooth(s) => {
            let ints = curvature_integrals(s, n, radius, center, &opts.cubature)?;
            lambda0 = Some(ints.lk(0));
            (1..=n)
                .map(|k| {
                    let (v, b) = ints.lk(k);
                    (v / norm(k), b / norm(k))
                })
                .collect()
        }
    };
    Ok(RadiusSample { radius, normalized, lambda0 })
}

/// `V ∩ B_R(c)` is a flat `d`-ball: only `Λ_d` survives.
fn linear_normalized(v: &Subspace, k: usize, radius: f64, center: &DVector<f64>) -> f64 {
    if k != v.dim() {
        return 0.0;
    }
    let dist2 = v.distance_to(center).powi(2);
    let r2 = (radius * radius - dist2).max(0.0);
    (r2 / (radius * radius)).powf(0.5 * k as f64)
}

pub fn check_schedule(radii: &[f64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::InvalidArgument(format!("a radius schedule needs at least 3 radii, got {}", radii.len())));
    }
    if radii[0] <= 0.0 || !radii.iter().all(|r| r.is_finite()) {
        return Err(Error::InvalidArgument("radii must be positive and finite".into()));
    }
    for w in radii.windows(2) {
        if ((w[1] / w[0]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("radii must double at each step: {} then {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// Evaluates every radius of the schedule (in parallel, merged in order).
pub fn sweep(set: &SetDescriptor, radii: &[f64], center: &DVector<f64>, opts: &SweepOptions) -> Result<Vec<RadiusSample>> {
    check_schedule(radii)?;
    par::map_indexed(radii.len(), |i| normalized_lks(set, radii[i], center, opts)).into_iter().collect()
}

/// Limit estimates for all `k ∈ [1, n]` from one sweep.
pub fn estimate_limits(set: &SetDescriptor, radii: &[f64], center: &DVector<f64>, opts: &SweepOptions) -> Result<Vec<LimitEstimate>> {
    let samples = sweep(set, radii, center, opts)?;
    (1..=set.ambient_dim)
        .map(|k| {
            let (values, bounds): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| s.normalized[k - 1]).unzip();
            fit_limit(k, radii, &values, &bounds)
        })
        .collect()
}

/// The limit of one order, centred at the origin.
pub fn estimate_limit(set: &SetDescriptor, k: usize, radii: &[f64], opts: &SweepOptions) -> Result<LimitEstimate> {
    if k == 0 || k > set.ambient_dim {
        return Err(Error::InvalidArgument(format!("k = {k} outside [1, {}]", set.ambient_dim)));
    }
    let mut all = estimate_limits(set, radii, &DVector::zeros(set.ambient_dim), opts)?;
    Ok(all.swap_remove(k - 1))
}

fn aitken(f: &[f64]) -> Option<f64> {
    let (d1, d2) = (f[1] - f[0], f[2] - f[1]);
    (d1 * d2 > 0.0 && d2.abs() < d1.abs()).then(|| f[2] - d2 * d2 / (d2 - d1))
}

/// Least-squares `a + c/R` through the points; returns `a`.
fn inverse_radius_fit(radii: &[f64], f: &[f64]) -> f64 {
    let m = radii.len() as f64;
    let xs: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let (sx, sy) = (xs.iter().sum::<f64>(), f.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(f).map(|(x, y)| x * y).sum();
    let c = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    (sy - c * sx) / m
}

/// First-order propagation of per-point uncertainties through `g`.
fn propagate(g: impl Fn(&[f64]) -> Option<f64>, f: &[f64], bounds: &[f64], at: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..f.len() {
        if bounds[i] == 0.0 {
            continue;
        }
        let h = bounds[i];
        let mut up = f.to_vec();
        up[i] += h;
        let mut down = f.to_vec();
        down[i] -= h;
        // a perturbation that breaks the model costs the full spread
        let shift = match (g(&up), g(&down)) {
            (Some(a), Some(b)) => (a - at).abs().max((b - at).abs()),
            _ => f.iter().fold(0.0f64, |m, v| m.max((v - at).abs())) + h,
        };
        total += shift * shift;
    }
    total.sqrt()
}

/// Extrapolates a doubling sweep of normalized values to `R → ∞`.
pub fn fit_limit(k: usize, radii: &[f64], values: &[f64], bounds: &[f64]) -> Result<LimitEstimate> {
    check_schedule(radii)?;
    if values.len() != radii.len() || bounds.len() != radii.len() {
        return Err(Error::InvalidArgument("one value and one bound per radius".into()));
    }
    let m = values.len();
    let last = values[m - 1];
    let spread = values.iter().fold(0.0f64, |s, v| s.max((v - last).abs()));
    let tail = &values[m - 3..];
    let tail_bounds = &bounds[m - 3..];

    let (value, model_unc, model, plateau) = if spread <= PLATEAU_TOLERANCE * last.abs().max(1.0) {
        (last, 0.0, LimitModel::Plateau, true)
    } else if let Some(a) = aitken(tail) {
        let unc = match (m >= 4).then(|| aitken(&values[m - 4..m - 1])).flatten() {
            Some(prev) => (a - prev).abs(),
            None => (tail[2] - tail[1]).abs(),
        };
        (a, unc, LimitModel::Aitken, false)
    } else {
        let tail_radii = &radii[m - 3..];
        let a = inverse_radius_fit(tail_radii, tail);
        let c = (tail[2] - a) * tail_radii[2];
        let residual = tail.iter().zip(tail_radii).fold(0.0f64, |r, (f, x)| r.max((f - a - c / x).abs()));
        (a, residual.max((tail[2] - tail[1]).abs()), LimitModel::InverseRadius, false)
    };

    let numeric_unc = match model {
        LimitModel::Plateau => bounds[m - 1],
        LimitModel::Aitken => propagate(aitken, tail, tail_bounds, value),
        LimitModel::InverseRadius => {
            let tail_radii = radii[m - 3..].to_vec();
            propagate(move |f| Some(inverse_radius_fit(&tail_radii, f)), tail, tail_bounds, value)
        }
    };
    let uncertainty = model_unc.max(numeric_unc);
    let converged = plateau || (values[m - 1] - values[m - 2]).abs() < uncertainty;
    Ok(LimitEstimate {
        k,
        value,
        uncertainty,
        radii: radii.to_vec(),
        normalized_values: values.to_vec(),
        normalized_uncertainties: bounds.to_vec(),
        converged,
        model,
    })
}
