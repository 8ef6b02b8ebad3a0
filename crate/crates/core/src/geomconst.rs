//! Volumes of unit balls and unit spheres.
//!
//! `b_k` is the volume of the unit ball in `R^k`, `s_k` the volume of the
//! unit sphere `S^k ⊂ R^{k+1}`. Both are evaluated through `ln Γ`, which
//! keeps them finite well past `k = 50`. The conventions `b_0 = 1` and
//! `s_0 = 2` make `2 / s_0 = 1` in the spherical Gauss-Bonnet sum.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimConstantKind {
    BallVolume,
    SphereVolume,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimConstant {
    pub kind: DimConstantKind,
    pub k: usize,
    pub value: f64,
}

impl DimConstant {
    pub fn ball(k: usize) -> Self {
        DimConstant { kind: DimConstantKind::BallVolume, k, value: ball_volume(k) }
    }

    pub fn sphere(k: usize) -> Self {
        DimConstant { kind: DimConstantKind::SphereVolume, k, value: sphere_volume(k) }
    }
}

/// `b_k = π^{k/2} / Γ(k/2 + 1)`.
pub fn ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => {
            let h = 0.5 * k as f64;
            (h * PI.ln() - libm::lgamma(h + 1.0)).exp()
        }
    }
}

/// `s_k = 2 π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => {
            let h = 0.5 * (k + 1) as f64;
            2.0 * (h * PI.ln() - libm::lgamma(h)).exp()
        }
    }
}
