use std::f64::consts::PI;

use nalgebra::DVector;

use super::{Chart, ChartMap, SetDescriptor, SmoothSet, SphericalGraph};
use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::poly::Polynomial;

const NAMES: &[&str] = &[
    "cross_r2",
    "line_r3",
    "plane_cone_r3",
    "star_cone_r3",
    "sphere_s2",
    "torus_r3",
    "cylinder_r3",
    "paraboloid_r3",
    "hyperboloid_r3",
    "plane_r2_in_r3",
    "twisted_cubic_r3",
];

pub fn builtin_names() -> &'static [&'static str] {
    NAMES
}

pub fn builtins() -> Vec<SetDescriptor> {
    NAMES.iter().map(|n| builtin(n).expect("built-in sets are valid")).collect()
}

pub fn builtin(name: &str) -> Result<SetDescriptor> {
    let full = (0.0, 2.0 * PI);
    match name {
        "cross_r2" => Ok(SetDescriptor::conic(name, graphs::cross())),
        "line_r3" => SetDescriptor::linear(name, Subspace::coordinate(3, &[0])),
        "plane_cone_r3" => Ok(SetDescriptor::conic(name, graphs::circle())),
        "star_cone_r3" => Ok(SetDescriptor::conic(name, graphs::star())),
        "sphere_s2" => smooth(
            name,
            ChartMap::Sphere { center: [0.0; 3], radius: 1.0 },
            &[full, (0.0, PI)],
            Some(quadric(1.0, 1.0, 1.0, -1.0)),
            2,
            true,
        ),
        "torus_r3" => smooth(name, ChartMap::Torus { major: 2.0, minor: 1.0 }, &[full, full], Some(torus_polynomial(2.0, 1.0)), 0, true),
        "cylinder_r3" => {
            smooth(name, ChartMap::Cylinder { radius: 1.0 }, &[full, (-1024.0, 1024.0)], Some(quadric(1.0, 1.0, 0.0, -1.0)), 0, false)
        }
        "paraboloid_r3" => {
            let f = Polynomial::variable(3, 2).add(&quadric(1.0, 1.0, 0.0, 0.0).scale(-1.0));
            smooth(name, ChartMap::Paraboloid { a: 1.0 }, &[full, (0.0, 256.0)], Some(f), 1, false)
        }
        "hyperboloid_r3" => smooth(
            name,
            ChartMap::Hyperboloid { a: 1.0, c: 1.0 },
            &[full, (-1024.0, 1024.0)],
            Some(quadric(1.0, 1.0, -1.0, -1.0)),
            0,
            false,
        ),
        "plane_r2_in_r3" => smooth(
            name,
            ChartMap::Plane {
                origin: DVector::zeros(3),
                u: DVector::from_vec(vec![1.0, 0.0, 0.0]),
                v: DVector::from_vec(vec![0.0, 1.0, 0.0]),
            },
            &[full, (0.0, 4096.0)],
            Some(Polynomial::variable(3, 2)),
            1,
            false,
        ),
        "twisted_cubic_r3" => {
            let map = ChartMap::PolynomialCurve { coefficients: vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0]] };
            let chart = Chart::new(map, &[(-256.0, 256.0)], 1.0)?;
            SetDescriptor::smooth(name, 3, SmoothSet { dim: 1, charts: vec![chart], implicit: None, declared_chi: Some(1), compact: false })
        }
        _ => Err(Error::InvalidArgument(format!("unknown built-in set `{name}`"))),
    }
}

fn smooth(
    name: &str,
    map: ChartMap,
    domain: &[(f64, f64)],
    implicit: Option<Polynomial>,
    chi: i64,
    compact: bool,
) -> Result<SetDescriptor> {
    let n = map.ambient_dim();
    let chart = Chart::new(map, domain, 1.0)?;
    SetDescriptor::smooth(name, n, SmoothSet { dim: 2, charts: vec![chart], implicit, declared_chi: Some(chi), compact })
}

/// `a x² + b y² + c z² + d`.
fn quadric(a: f64, b: f64, c: f64, d: f64) -> Polynomial {
    Polynomial::from_terms(3, [(vec![2, 0, 0], a), (vec![0, 2, 0], b), (vec![0, 0, 2], c), (vec![0, 0, 0], d)]).expect("three variables")
}

/// `(|x|² + R² − r²)² − 4R²(x² + y²)`.
fn torus_polynomial(major: f64, minor: f64) -> Polynomial {
    let s = quadric(1.0, 1.0, 1.0, major * major - minor * minor);
    s.mul(&s).add(&quadric(1.0, 1.0, 0.0, 0.0).scale(-4.0 * major * major))
}

/// Spherical graphs used as test fixtures and cone bases.
pub mod graphs {
    use super::*;

    fn unit(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x).normalize()
    }

    fn build(vertices: Vec<DVector<f64>>, edges: Vec<(usize, usize)>) -> SphericalGraph {
        SphericalGraph::new(vertices, edges).expect("fixture graphs are valid")
    }

    /// `±e_1, ±e_2` on `S^1`: the trace of the coordinate cross.
    pub fn cross() -> SphericalGraph {
        build(vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), unit(&[-1.0, 0.0]), unit(&[0.0, -1.0])], vec![])
    }

    /// `±e_3` on `S^2`.
    pub fn antipodal_pair() -> SphericalGraph {
        build(vec![unit(&[0.0, 0.0, 1.0]), unit(&[0.0, 0.0, -1.0])], vec![])
    }

    /// The equator of `S^2` cut into three arcs.
    pub fn circle() -> SphericalGraph {
        let v = (0..3)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 3.0;
                unit(&[t.cos(), t.sin(), 0.0])
            })
            .collect();
        build(v, vec![(0, 1), (1, 2), (2, 0)])
    }

    /// Arc length of each ray of [`star`].
    pub const STAR_ARM: f64 = PI / 4.0;

    /// The north pole joined to three points at polar angle `π/4`.
    pub fn star() -> SphericalGraph {
        let mut v = vec![unit(&[0.0, 0.0, 1.0])];
        for i in 0..3 {
            let t = 2.0 * PI * i as f64 / 3.0;
            let (s, c) = STAR_ARM.sin_cos();
            v.push(unit(&[s * t.cos(), s * t.sin(), c]));
        }
        build(v, vec![(0, 1), (0, 2), (0, 3)])
    }

    /// A small spherical triangle around the north pole.
    pub fn triangle() -> SphericalGraph {
        let v = (0..3)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 3.0;
                let (s, c) = (PI / 3.0).sin_cos();
                unit(&[s * t.cos(), s * t.sin(), c])
            })
            .collect();
        build(v, vec![(0, 1), (1, 2), (2, 0)])
    }

    /// Radial projection of the regular tetrahedron's 1-skeleton.
    pub fn tetrahedron() -> SphericalGraph {
        let v = vec![unit(&[1.0, 1.0, 1.0]), unit(&[1.0, -1.0, -1.0]), unit(&[-1.0, 1.0, -1.0]), unit(&[-1.0, -1.0, 1.0])];
        build(v, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    /// Radial projection of the regular octahedron's 1-skeleton.
    pub fn octahedron() -> SphericalGraph {
        let mut v = Vec::new();
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut x = [0.0; 3];
                x[i] = s;
                v.push(unit(&x));
            }
        }
        let mut edges = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                if a / 2 != b / 2 {
                    edges.push((a, b));
                }
            }
        }
        build(v, edges)
    }

    /// Every fixture with its name.
    pub fn all() -> Vec<(&'static str, SphericalGraph)> {
        vec![
            ("cross", cross()),
            ("antipodal_pair", antipodal_pair()),
            ("circle", circle()),
            ("star", star()),
            ("triangle", triangle()),
            ("tetrahedron", tetrahedron()),
            ("octahedron", octahedron()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_loads() {
        for set in builtins() {
            assert!(set.ambient_dim >= 2, "{}", set.name);
        }
    }

    #[test]
    fn fixture_euler_characteristics() {
        let chi: Vec<i64> = graphs::all().iter().map(|(_, g)| g.euler_char()).collect();
        assert_eq!(chi, vec![4, 2, 0, 1, 0, -2, -6]);
    }

    #[test]
    fn torus_polynomial_vanishes_on_the_torus() {
        let f = torus_polynomial(2.0, 1.0);
        for (phi, psi) in [(0.3f64, 1.1f64), (2.0, 4.0), (5.5, 0.0)] {
            let rho = 2.0 + psi.cos();
            let x = [rho * phi.cos(), rho * phi.sin(), psi.sin()];
            assert!(f.eval(&x).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(builtin("klein_bottle").is_err());
    }
}
