//! Closed semi-algebraic sets and their topological oracles.
//!
//! A [`SetDescriptor`] is one of three representations: a linear subspace,
//! the cone over a [`SphericalGraph`], or a smooth submanifold given by a
//! chart atlas with an optional implicit polynomial. Each carries the exact
//! invariants the verification layer needs: dimension, Euler characteristic
//! and the Euler characteristic of links at infinity of its sections.

mod builtin;
mod chart;
mod file;
mod graph;
mod link;

pub use builtin::{builtin, builtin_names, builtins, graphs};
pub use chart::{Axis, AxisKind, Chart, ChartMap, ChartPoint, Edge};
pub use file::{load_set_file, parse_set};
pub use graph::{Arc, SphericalGraph};
pub(crate) use link::bisect as bisect_root;
pub use link::{link_infinity_chi, section, LinkMethod, LinkPolicy, LinkSection};

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grassmann::{stream_rng, Subspace};
use crate::poly::Polynomial;

/// A smooth closed submanifold of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSet {
    pub dim: usize,
    pub charts: Vec<Chart>,
    pub implicit: Option<Polynomial>,
    pub declared_chi: Option<i64>,
    pub compact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Linear(Subspace),
    Conic(SphericalGraph),
    Smooth(SmoothSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetDescriptor {
    pub name: String,
    pub ambient_dim: usize,
    pub kind: SetKind,
}

impl SetDescriptor {
    pub fn linear(name: &str, subspace: Subspace) -> Result<Self> {
        let n = subspace.ambient_dim();
        if subspace.dim() == 0 || subspace.dim() >= n {
            return Err(Error::invalid_set("frame", format!("dimension {} not in [1, {}]", subspace.dim(), n - 1)));
        }
        Ok(SetDescriptor { name: name.into(), ambient_dim: n, kind: SetKind::Linear(subspace) })
    }

    pub fn conic(name: &str, graph: SphericalGraph) -> Self {
        SetDescriptor { name: name.into(), ambient_dim: graph.ambient_dim(), kind: SetKind::Conic(graph) }
    }

    /// Validates a smooth set: chart dimensions, tangent frames, implicit
    /// residuals and the partition of unity, all spot-checked at seeded
    /// random chart points.
    pub fn smooth(name: &str, ambient_dim: usize, set: SmoothSet) -> Result<Self> {
        if set.dim == 0 || set.dim >= ambient_dim {
            return Err(Error::invalid_set("charts", format!("dimension {} not in [1, {}]", set.dim, ambient_dim - 1)));
        }
        if set.charts.is_empty() {
            return Err(Error::invalid_set("charts", "a smooth set needs at least one chart"));
        }
        for chart in &set.charts {
            if chart.dim() != set.dim {
                return Err(Error::invalid_set(
                    "charts",
                    format!("chart `{}` has dimension {}, set has {}", chart.map.name(), chart.dim(), set.dim),
                ));
            }
            if chart.map.ambient_dim() != ambient_dim {
                return Err(Error::invalid_set(
                    "charts",
                    format!("chart `{}` maps into R^{}, set lives in R^{ambient_dim}", chart.map.name(), chart.map.ambient_dim()),
                ));
            }
        }
        if let Some(f) = &set.implicit {
            if f.nvars() != ambient_dim {
                return Err(Error::invalid_set("polynomial", format!("polynomial has {} variables, expected {ambient_dim}", f.nvars())));
            }
            if set.dim != ambient_dim - 1 {
                return Err(Error::invalid_set("polynomial", "an implicit form is only supported for hypersurfaces"));
            }
        }
        let desc = SetDescriptor { name: name.into(), ambient_dim, kind: SetKind::Smooth(set) };
        desc.spot_check(200)?;
        Ok(desc)
    }

    /// Dimension of the set.
    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::Linear(v) => v.dim(),
            SetKind::Conic(g) => g.cone_dim(),
            SetKind::Smooth(s) => s.dim,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(&self.kind, SetKind::Smooth(s) if s.compact)
    }

    /// Listing tag: `linear`, `conic`, `smooth` or `compact`.
    pub fn kind_tag(&self) -> &'static str {
        match &self.kind {
            SetKind::Linear(_) => "linear",
            SetKind::Conic(_) => "conic",
            SetKind::Smooth(s) if s.compact => "compact",
            SetKind::Smooth(_) => "smooth",
        }
    }

    /// The same set as a cone over a spherical graph, when it is conic.
    pub fn as_conic(&self) -> Option<SphericalGraph> {
        match &self.kind {
            SetKind::Conic(g) => Some(g.clone()),
            SetKind::Linear(v) => linear_to_graph(v),
            SetKind::Smooth(_) => None,
        }
    }

    fn spot_check(&self, per_chart: usize) -> Result<()> {
        let SetKind::Smooth(set) = &self.kind else {
            return Ok(());
        };
        for (c, chart) in set.charts.iter().enumerate() {
            let mut rng = stream_rng(0x5eed, c as u64);
            for _ in 0..per_chart {
                let p: Vec<f64> = chart.axes.iter().map(|a| rng.random_range(a.lo..a.hi)).collect();
                let cp = chart.eval(&p);
                let gram = gram_det(&cp.d1);
                if gram <= 1e-12 {
                    return Err(Error::invalid_set(
                        "charts",
                        format!("chart {c} (`{}`) has Gram determinant {gram:e} at {p:?}", chart.map.name()),
                    ));
                }
                if let Some(f) = &set.implicit {
                    let x = cp.x.as_slice();
                    let tol = 1e-8 * (1.0 + cp.x.norm().powi(f.degree() as i32));
                    if f.eval(x).abs() > tol {
                        return Err(Error::invalid_set(
                            "polynomial",
                            format!("chart {c} point {x:?} is off the zero set (residual {:e})", f.eval(x)),
                        ));
                    }
                    if f.gradient(x).iter().all(|g| g.abs() < 1e-12) {
                        return Err(Error::invalid_set("polynomial", format!("gradient vanishes at chart {c} point {x:?}")));
                    }
                }
                let total: f64 = set.charts.iter().filter(|ch| ch.locate(&cp.x).is_some()).map(|ch| ch.weight).sum();
                if (total - 1.0).abs() > 1e-6 {
                    return Err(Error::CoverageGap(format!("chart weights sum to {total} at {:?}", cp.x.as_slice())));
                }
            }
        }
        Ok(())
    }
}

/// `χ(X)`: 1 for linear subspaces and cones, the declared value otherwise.
pub fn euler_char(set: &SetDescriptor) -> Result<i64> {
    match &set.kind {
        SetKind::Linear(_) | SetKind::Conic(_) => Ok(1),
        SetKind::Smooth(s) => s.declared_chi.ok_or_else(|| Error::ChiUnknown(set.name.clone())),
    }
}

pub(crate) fn gram_det(d1: &[DVector<f64>]) -> f64 {
    let d = d1.len();
    let g = nalgebra::DMatrix::from_fn(d, d, |a, b| d1[a].dot(&d1[b]));
    g.determinant()
}

/// A line becomes two antipodal points; a plane becomes a great circle cut
/// into three arcs.
fn linear_to_graph(v: &Subspace) -> Option<SphericalGraph> {
    match v.dim() {
        1 => {
            let e = v.basis_vector(0);
            SphericalGraph::new(vec![e.clone(), -e], vec![]).ok()
        }
        2 => {
            let (a, b) = (v.basis_vector(0), v.basis_vector(1));
            let pts = (0..3)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
                    &a * t.cos() + &b * t.sin()
                })
                .collect();
            SphericalGraph::new(pts, vec![(0, 1), (1, 2), (2, 0)]).ok()
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_characteristics() {
        assert_eq!(euler_char(&builtin("line_r3").unwrap()).unwrap(), 1);
        assert_eq!(euler_char(&builtin("cross_r2").unwrap()).unwrap(), 1);
        assert_eq!(euler_char(&builtin("sphere_s2").unwrap()).unwrap(), 2);
        let mut sphere = builtin("sphere_s2").unwrap();
        if let SetKind::Smooth(s) = &mut sphere.kind {
            s.declared_chi = None;
        }
        assert!(matches!(euler_char(&sphere), Err(Error::ChiUnknown(_))));
    }

    #[test]
    fn line_in_the_plane_has_chi_one() {
        let line = SetDescriptor::linear("x_axis", Subspace::coordinate(2, &[0])).unwrap();
        assert_eq!(euler_char(&line).unwrap(), 1);
    }

    #[test]
    fn linear_sets_convert_to_graphs() {
        let g = builtin("line_r3").unwrap().as_conic().unwrap();
        assert_eq!(g.vertices().len(), 2);
        let plane = SetDescriptor::linear("p", Subspace::coordinate(3, &[0, 1])).unwrap();
        let g = plane.as_conic().unwrap();
        assert_eq!(g.euler_char(), 0);
        assert!((g.total_length() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn overlapping_charts_must_sum_to_one() {
        let SetKind::Smooth(mut s) = builtin("sphere_s2").unwrap().kind else { unreachable!() };
        let extra = s.charts[0].clone();
        s.charts.push(extra);
        assert!(matches!(SetDescriptor::smooth("double", 3, s.clone()), Err(Error::CoverageGap(_))));
        for c in &mut s.charts {
            c.weight = 0.5;
        }
        assert!(SetDescriptor::smooth("halves", 3, s).is_ok());
    }
}
