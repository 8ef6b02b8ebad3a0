//! Spherical curvatures of graphs on `S^{n−1}` and curvature measures of the
//! cones over them.
//!
//! Edges are geodesic arcs, so their curvature vanishes and `Λ̃_0`
//! concentrates on vertices: each vertex contributes the mean of its normal
//! Morse index `α(x, v) = 1 − #{incident tangents u : ⟨u, v⟩ > 0}` over unit
//! tangent directions `v`. `Λ̃_1` is the total arc length. For the cone `X`
//! over the graph, `Λ_k(X, X ∩ B_R) = R^k Λ̃_{k−1} / k`.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::SphericalGraph;
use crate::cubature::gauss_legendre;
use crate::error::{Error, Result};
use crate::grassmann::{monte_carlo_mean, sphere_direction, MonteCarloEstimate, SampleError};
use crate::report::{ReportRow, TheoremId, TheoremReport};

/// `|⟨u, v⟩|` below this makes a direction non-generic.
pub const GENERIC_TOLERANCE: f64 = 1e-10;
/// Gauss-Legendre panels along an arc for shifted-ball sector areas.
const SECTOR_PANELS: usize = 64;
/// Stream offset of the apex draws, clear of the per-vertex streams.
const APEX_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexIndex {
    pub vertex: usize,
    pub direction: DVector<f64>,
    pub alpha: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalLK {
    pub k: usize,
    pub value: f64,
    pub stderr: f64,
}

/// `α(x, v)` at a vertex for a unit direction tangent to the sphere there.
pub fn vertex_alpha(graph: &SphericalGraph, vertex: usize, v: &DVector<f64>) -> Result<VertexIndex> {
    let x = graph.vertices().get(vertex).ok_or_else(|| Error::InvalidArgument(format!("vertex {vertex} out of range")))?;
    if v.len() != x.len() || (v.norm() - 1.0).abs() > 1e-8 || x.dot(v).abs() > 1e-8 {
        return Err(Error::InvalidArgument("direction must be a unit tangent vector at the vertex".into()));
    }
    let mut up = 0;
    for u in graph.incident_tangents(vertex) {
        let c = u.dot(v);
        if c.abs() < GENERIC_TOLERANCE {
            return Err(Error::NonGenericDirection(c.abs()));
        }
        if c > 0.0 {
            up += 1;
        }
    }
    Ok(VertexIndex { vertex, direction: v.clone(), alpha: 1 - up })
}

/// Uniform unit direction tangent to the sphere at `x`.
pub fn tangent_direction<R: Rng + ?Sized>(x: &DVector<f64>, rng: &mut R) -> DVector<f64> {
    loop {
        let g = sphere_direction(x.len(), rng);
        let t = &g - x * x.dot(&g);
        let norm = t.norm();
        if norm > 1e-8 {
            return t / norm;
        }
    }
}

/// `E_v[α(x, v)]` over uniform tangent directions; sample `i` uses stream
/// `(vertex << 32) | i`.
pub fn vertex_mean_alpha(graph: &SphericalGraph, vertex: usize, n_samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    let x = graph.vertices().get(vertex).ok_or_else(|| Error::InvalidArgument(format!("vertex {vertex} out of range")))?.clone();
    monte_carlo_mean(n_samples, seed, (vertex as u64) << 32, |rng| {
        let v = tangent_direction(&x, rng);
        vertex_alpha(graph, vertex, &v).map(|a| a.alpha as f64).map_err(SampleError::from)
    })
}

/// `Λ̃_k(X̃, X̃)` of the graph: the vertex Morse sum for `k = 0`, the total
/// length for `k = 1`, zero above.
pub fn spherical_lk(graph: &SphericalGraph, k: usize, n_samples: usize, seed: u64) -> Result<SphericalLK> {
    let n = graph.ambient_dim();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be below the ambient dimension {n}")));
    }
    match k {
        0 => {
            let (mut value, mut var) = (0.0, 0.0);
            for v in 0..graph.vertices().len() {
                let m = vertex_mean_alpha(graph, v, n_samples, seed)?;
                value += m.mean;
                var += m.stderr * m.stderr;
            }
            Ok(SphericalLK { k, value, stderr: var.sqrt() })
        }
        1 => Ok(SphericalLK { k, value: graph.total_length(), stderr: 0.0 }),
        _ => Ok(SphericalLK { k, value: 0.0, stderr: 0.0 }),
    }
}

/// Compares `χ(graph) = V − E` with `(2/s_0) Λ̃_0 = Λ̃_0`, the only even
/// term for a one-complex.
pub fn spherical_gauss_bonnet_check(name: &str, graph: &SphericalGraph, n_samples: usize, seed: u64) -> Result<TheoremReport> {
    let lk0 = spherical_lk(graph, 0, n_samples, seed)?;
    let row = ReportRow::compare(
        0,
        "euler_characteristic",
        (graph.euler_char() as f64, 0.0),
        (lk0.value, lk0.stderr),
        "graph_v_minus_e",
        "vertex_morse_mean",
    );
    Ok(TheoremReport::new(TheoremId::SphericalGaussBonnet, name, seed, n_samples, &[], vec![row]))
}

/// `Λ_k(X, X ∩ B_R)` for the cone over the graph, `k ≥ 1`.
pub fn conic_lk_measure(graph: &SphericalGraph, k: usize, radius: f64, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidArgument("the conic reduction needs k >= 1; use apex_lambda0 for k = 0".into()));
    }
    if k > graph.ambient_dim() {
        return Ok((0.0, 0.0));
    }
    let lk = spherical_lk(graph, k - 1, n_samples, seed)?;
    let scale = radius.powi(k as i32) / k as f64;
    Ok((scale * lk.value, scale * lk.stderr))
}

/// `{t ≥ 0 : |t a − c| ≤ R}` for a unit vector `a`, as `(t_lo, t_hi)`.
fn ray_segment(a: &DVector<f64>, center: &DVector<f64>, radius: f64) -> Option<(f64, f64)> {
    let p = a.dot(center);
    let disc = p * p - center.norm_squared() + radius * radius;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    let hi = p + r;
    (hi > 0.0).then(|| ((p - r).max(0.0), hi))
}

/// `Λ_k(X, X ∩ B_R(c))` for the cone over the graph and an arbitrary centre:
/// rays weighted by their vertex Morse means for `k = 1`, sector areas for
/// `k = 2`.
pub fn conic_lk_measure_at(
    graph: &SphericalGraph,
    k: usize,
    radius: f64,
    center: &DVector<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if center.len() != graph.ambient_dim() {
        return Err(Error::InvalidArgument(format!("centre has {} coordinates, expected {}", center.len(), graph.ambient_dim())));
    }
    match k {
        0 => Err(Error::InvalidArgument("use apex_lambda0 for k = 0".into())),
        1 => {
            let (mut value, mut var) = (0.0, 0.0);
            for (v, a) in graph.vertices().iter().enumerate() {
                let Some((lo, hi)) = ray_segment(a, center, radius) else { continue };
                let m = vertex_mean_alpha(graph, v, n_samples, seed)?;
                value += m.mean * (hi - lo);
                var += (m.stderr * (hi - lo)).powi(2);
            }
            Ok((value, var.sqrt()))
        }
        2 => {
            let (x, w) = gauss_legendre(8);
            let mut area = 0.0;
            for e in 0..graph.edges().len() {
                let arc = graph.arc(e);
                let h = arc.length / SECTOR_PANELS as f64;
                for p in 0..SECTOR_PANELS {
                    let mid = (p as f64 + 0.5) * h;
                    for (xi, wi) in x.iter().zip(&w) {
                        let s = mid + 0.5 * h * xi;
                        if let Some((lo, hi)) = ray_segment(&arc.point(s), center, radius) {
                            area += 0.5 * h * wi * 0.5 * (hi * hi - lo * lo);
                        }
                    }
                }
            }
            Ok((area, 0.0))
        }
        _ => Ok((0.0, 0.0)),
    }
}

/// `Λ_0` of the cone, carried by the apex: the mean over `v ∈ S^{n−1}` of
/// `1 − χ(X̃ ∩ {⟨x, v⟩ > 0})`, where the open hemisphere meets the graph in
/// `#V+` vertices and `#E++` whole edges (a minor arc cannot leave and
/// re-enter a hemisphere).
pub fn apex_lambda0(graph: &SphericalGraph, n_samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    let n = graph.ambient_dim();
    monte_carlo_mean(n_samples, seed, APEX_STREAM, |rng| {
        let v = sphere_direction(n, rng);
        let mut up = vec![false; graph.vertices().len()];
        for (i, x) in graph.vertices().iter().enumerate() {
            let c = x.dot(&v);
            if c.abs() < GENERIC_TOLERANCE {
                return Err(SampleError::Degenerate(format!("vertex {i} on the equator of the sampled direction")));
            }
            up[i] = c > 0.0;
        }
        let vertices_up = up.iter().filter(|&&b| b).count() as i64;
        let edges_up = graph.edges().iter().filter(|&&(a, b)| up[a] && up[b]).count() as i64;
        Ok((1 - (vertices_up - edges_up)) as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::graphs;
    use crate::grassmann::stream_rng;
    use std::f64::consts::PI;

    const SAMPLES: usize = 10_000;

    #[test]
    fn isolated_and_through_vertices() {
        let pair = graphs::antipodal_pair();
        let mut rng = stream_rng(1, 0);
        let v = tangent_direction(&pair.vertices()[0], &mut rng);
        assert_eq!(vertex_alpha(&pair, 0, &v).unwrap().alpha, 1);

        let g = graphs::circle().subdivided(0).unwrap();
        let m = vertex_mean_alpha(&g, 3, 1000, 5).unwrap();
        assert_eq!((m.mean, m.stderr), (0.0, 0.0));
    }

    #[test]
    fn degree_three_vertex_has_mean_minus_half() {
        let star = graphs::star();
        let m = vertex_mean_alpha(&star, 0, SAMPLES, 42).unwrap();
        assert!((m.mean + 0.5).abs() <= 3.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn non_tangent_directions_are_rejected() {
        let star = graphs::star();
        let x = star.vertices()[0].clone();
        assert!(vertex_alpha(&star, 0, &x).is_err());
    }

    #[test]
    fn non_generic_directions_are_reported() {
        let star = graphs::star();
        let u = star.incident_tangents(0)[0].clone();
        let x = &star.vertices()[0];
        let v = x.cross(&u).normalize();
        assert!(matches!(vertex_alpha(&star, 0, &v), Err(Error::NonGenericDirection(_))));
    }

    #[test]
    fn spherical_curvatures_of_fixtures() {
        let lk = spherical_lk(&graphs::antipodal_pair(), 0, 100, 1).unwrap();
        assert_eq!((lk.value, lk.stderr), (2.0, 0.0));
        assert_eq!(spherical_lk(&graphs::antipodal_pair(), 1, 100, 1).unwrap().value, 0.0);
        let circle = spherical_lk(&graphs::circle(), 1, 100, 1).unwrap();
        assert!((circle.value - 2.0 * PI).abs() < 1e-12);
        let star = spherical_lk(&graphs::star(), 1, 100, 1).unwrap();
        assert!((star.value - 3.0 * graphs::STAR_ARM).abs() < 1e-12);
        assert_eq!(spherical_lk(&graphs::star(), 2, 100, 1).unwrap().value, 0.0);
    }

    #[test]
    fn gauss_bonnet_holds_on_every_fixture() {
        for (name, g) in graphs::all() {
            let report = spherical_gauss_bonnet_check(name, &g, SAMPLES, 42).unwrap();
            assert!(report.overall_pass, "{name}: {:?}", report.rows[0]);
        }
    }

    #[test]
    fn subdividing_an_edge_changes_nothing() {
        let g = graphs::tetrahedron();
        let h = g.subdivided(2).unwrap();
        let a = spherical_lk(&g, 0, SAMPLES, 7).unwrap();
        let b = spherical_lk(&h, 0, SAMPLES, 7).unwrap();
        assert!((a.value - b.value).abs() <= 3.0 * a.stderr.hypot(b.stderr));
        assert!((spherical_lk(&g, 1, 1, 0).unwrap().value - spherical_lk(&h, 1, 1, 0).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn disjoint_unions_add() {
        let a = graphs::star();
        let b = SphericalGraph::from_rows(&[vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]], &[]).unwrap();
        let u = a.disjoint_union(&b).unwrap();
        assert!((spherical_lk(&u, 1, 1, 0).unwrap().value - spherical_lk(&a, 1, 1, 0).unwrap().value).abs() < 1e-12);
        let ua = spherical_lk(&u, 0, SAMPLES, 3).unwrap();
        let aa = spherical_lk(&a, 0, SAMPLES, 3).unwrap();
        assert!((ua.value - aa.value - 2.0).abs() <= 3.0 * ua.stderr.hypot(aa.stderr));
    }

    #[test]
    fn conic_measures_are_homogeneous() {
        let cross = graphs::cross();
        assert_eq!(conic_lk_measure(&cross, 1, 1.0, 100, 0).unwrap(), (4.0, 0.0));
        assert_eq!(conic_lk_measure(&cross, 1, 3.0, 100, 0).unwrap(), (12.0, 0.0));
        assert_eq!(conic_lk_measure(&graphs::antipodal_pair(), 1, 1.0, 100, 0).unwrap(), (2.0, 0.0));
        assert_eq!(conic_lk_measure(&graphs::circle(), 3, 5.0, 100, 0).unwrap(), (0.0, 0.0));
        let star = graphs::star();
        let one = conic_lk_measure(&star, 1, 1.0, 2000, 4).unwrap();
        let r = conic_lk_measure(&star, 1, 7.5, 2000, 4).unwrap();
        assert_eq!(r.0, 7.5 * one.0);
        let (area, _) = conic_lk_measure(&graphs::circle(), 2, 2.0, 100, 0).unwrap();
        assert!((area - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn shifted_balls_match_the_centred_formula_at_the_origin() {
        let star = graphs::star();
        let zero = DVector::zeros(3);
        for k in 1..=3 {
            let a = conic_lk_measure(&star, k, 2.0, 500, 9).unwrap();
            let b = conic_lk_measure_at(&star, k, 2.0, &zero, 500, 9).unwrap();
            assert!((a.0 - b.0).abs() < 1e-12 * (1.0 + a.0.abs()), "k={k} {a:?} {b:?}");
        }
    }

    #[test]
    fn shifted_cross_lengths() {
        // rays ±e_1, ±e_2 inside B_R((1, 2)): lengths ±1 + sqrt(R² − 4) and ±2 + sqrt(R² − 1)
        let c = DVector::from_vec(vec![1.0, 2.0]);
        let (v, s) = conic_lk_measure_at(&graphs::cross(), 1, 5.0, &c, 100, 0).unwrap();
        let expected = 2.0 * (25.0f64 - 4.0).sqrt() + 2.0 * (25.0f64 - 1.0).sqrt();
        assert!((v - expected).abs() < 1e-12);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn shifted_plane_disk_area() {
        // the cone over the equator is the plane z = 0; the ball about
        // (1, 0, 2) of radius 3 cuts a disk of radius sqrt(5)
        let c = DVector::from_vec(vec![1.0, 0.0, 2.0]);
        let (area, _) = conic_lk_measure_at(&graphs::circle(), 2, 3.0, &c, 100, 0).unwrap();
        assert!((area - 5.0 * PI).abs() < 1e-10, "{area}");
    }

    #[test]
    fn apex_curvature() {
        let cross = apex_lambda0(&graphs::cross(), 1000, 1).unwrap();
        assert_eq!((cross.mean, cross.stderr), (-1.0, 0.0));
        // star: 1 − E[#V+] + E[#E++] = 1 − 2 + 3(π − π/4)/(2π) = 1/8
        let star = apex_lambda0(&graphs::star(), 20_000, 2).unwrap();
        assert!((star.mean - 0.125).abs() <= 3.0 * star.stderr, "{star:?}");
        // a plane through the apex is flat there
        let plane = apex_lambda0(&graphs::circle(), 5000, 3).unwrap();
        assert!(plane.mean.abs() <= 3.0 * plane.stderr + 1e-12, "{plane:?}");
    }
}
