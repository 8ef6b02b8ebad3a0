use nalgebra::DVector;

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-10;
const ANGLE_TOLERANCE: f64 = 1e-9;

/// Vertices on `S^{n-1}` joined by minor great-circle arcs. The cone over it
/// is a closed conic set of dimension at most 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGraph {
    vertices: Vec<DVector<f64>>,
    edges: Vec<(usize, usize)>,
}

/// A minor arc `s ↦ cos(s)·start + sin(s)·dir` for `s ∈ [0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub start: DVector<f64>,
    pub dir: DVector<f64>,
    pub length: f64,
}

impl Arc {
    pub fn point(&self, s: f64) -> DVector<f64> {
        &self.start * s.cos() + &self.dir * s.sin()
    }

    pub fn tangent(&self, s: f64) -> DVector<f64> {
        &self.dir * s.cos() - &self.start * s.sin()
    }
}

impl SphericalGraph {
    pub fn new(vertices: Vec<DVector<f64>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let n = vertices[0].len();
        if n < 2 {
            return Err(Error::InvalidGraph("vertices must live in R^n with n >= 2".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidGraph(format!("vertices[{i}] has length {}, expected {n}", v.len())));
            }
            if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::InvalidGraph(format!("vertices[{i}] has norm {}, expected 1 within {UNIT_TOLERANCE:e}", v.norm())));
            }
        }
        let vertices: Vec<DVector<f64>> = vertices.into_iter().map(|v| v.normalize()).collect();
        for i in 0..vertices.len() {
            for j in 0..i {
                if angle(&vertices[i], &vertices[j]) < ANGLE_TOLERANCE {
                    return Err(Error::InvalidGraph(format!("vertices[{j}] and vertices[{i}] coincide")));
                }
            }
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= vertices.len() || b >= vertices.len() {
                return Err(Error::InvalidGraph(format!("edges[{e}] = [{a}, {b}] refers to a missing vertex")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("edges[{e}] is a loop")));
            }
            let len = angle(&vertices[a], &vertices[b]);
            if len > std::f64::consts::PI - ANGLE_TOLERANCE {
                return Err(Error::InvalidGraph(format!("edges[{e}] joins antipodal vertices")));
            }
            for (f, &(c, d)) in edges[..e].iter().enumerate() {
                if (a, b) == (c, d) || (a, b) == (d, c) {
                    return Err(Error::InvalidGraph(format!("edges[{f}] and edges[{e}] coincide")));
                }
            }
        }
        let graph = SphericalGraph { vertices, edges };
        graph.check_embedding()?;
        Ok(graph)
    }

    pub fn from_rows(vertices: &[Vec<f64>], edges: &[(usize, usize)]) -> Result<Self> {
        SphericalGraph::new(vertices.iter().map(|v| DVector::from_column_slice(v)).collect(), edges.to_vec())
    }

    /// Rejects vertices inside arcs and arcs meeting away from shared vertices.
    fn check_embedding(&self) -> Result<()> {
        let arcs: Vec<Arc> = (0..self.edges.len()).map(|e| self.arc(e)).collect();
        for (e, arc) in arcs.iter().enumerate() {
            let (a, b) = self.edges[e];
            for (v, p) in self.vertices.iter().enumerate() {
                if v != a && v != b && on_arc_interior(arc, p) {
                    return Err(Error::InvalidGraph(format!("vertices[{v}] lies inside edges[{e}]")));
                }
            }
        }
        for e in 0..arcs.len() {
            for f in 0..e {
                if let Some(p) = arc_intersection(&arcs[e], &arcs[f]) {
                    let shared = [self.edges[e].0, self.edges[e].1]
                        .iter()
                        .any(|&v| [self.edges[f].0, self.edges[f].1].contains(&v) && angle(&self.vertices[v], &p) < 1e-7);
                    if !shared {
                        return Err(Error::InvalidGraph(format!("edges[{f}] and edges[{e}] cross")));
                    }
                }
                if overlapping(&arcs[e], &arcs[f]) {
                    return Err(Error::InvalidGraph(format!("edges[{f}] and edges[{e}] overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `V - E`.
    pub fn euler_char(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64
    }

    /// Dimension of the cone over the graph.
    pub fn cone_dim(&self) -> usize {
        if self.edges.is_empty() {
            1
        } else {
            2
        }
    }

    pub fn arc(&self, e: usize) -> Arc {
        let (a, b) = self.edges[e];
        let start = self.vertices[a].clone();
        let end = &self.vertices[b];
        let perp = end - &start * start.dot(end);
        Arc { length: angle(&start, end), dir: perp.normalize(), start }
    }

    pub fn total_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.arc(e).length).fold(0.0, |a, l| a + l)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Unit initial tangents at `v` of the incident arcs.
    pub fn incident_tangents(&self, v: usize) -> Vec<DVector<f64>> {
        let x = &self.vertices[v];
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                let other = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    return None;
                };
                let y = &self.vertices[other];
                Some((y - x * x.dot(y)).normalize())
            })
            .collect()
    }

    /// Disjoint union; vertex indices of `other` are shifted.
    pub fn disjoint_union(&self, other: &SphericalGraph) -> Result<SphericalGraph> {
        let shift = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().cloned());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + shift, b + shift)));
        SphericalGraph::new(vertices, edges)
    }

    /// Splits edge `e` at its midpoint with a new degree-2 vertex.
    pub fn subdivided(&self, e: usize) -> Result<SphericalGraph> {
        let arc = self.arc(e);
        let mid = arc.point(arc.length / 2.0);
        let mut vertices = self.vertices.clone();
        vertices.push(mid);
        let m = vertices.len() - 1;
        let (a, b) = self.edges[e];
        let mut edges: Vec<(usize, usize)> = self.edges.iter().enumerate().filter(|&(i, _)| i != e).map(|(_, &x)| x).collect();
        edges.push((a, m));
        edges.push((m, b));
        SphericalGraph::new(vertices, edges)
    }
}

pub(crate) fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // atan2 form keeps accuracy near 0 and π
    let cross = (b - a * a.dot(b)).norm();
    cross.atan2(a.dot(b))
}

fn on_arc_interior(arc: &Arc, p: &DVector<f64>) -> bool {
    let a = angle(&arc.start, p);
    let end = arc.point(arc.length);
    let b = angle(p, &end);
    a > ANGLE_TOLERANCE && b > ANGLE_TOLERANCE && (a + b - arc.length).abs() < 1e-9
}

fn on_arc(arc: &Arc, p: &DVector<f64>) -> bool {
    let end = arc.point(arc.length);
    (angle(&arc.start, p) + angle(p, &end) - arc.length).abs() < 1e-9
}

/// A point where two non-coplanar arcs meet, if any.
fn arc_intersection(a: &Arc, b: &Arc) -> Option<DVector<f64>> {
    let n = a.start.len();
    // directions in span(a) ∩ span(b): solve for x ∈ span(a) orthogonal to the
    // complement of span(b) by projecting b's plane out
    let pa = [&a.start, &a.dir];
    let pb = [&b.start, &b.dir];
    // x = α a.start + β a.dir lies in span(b) iff its residual vanishes
    let residual = |v: &DVector<f64>| v - pb[0] * pb[0].dot(v) - pb[1] * pb[1].dot(v);
    let r0 = residual(pa[0]);
    let r1 = residual(pa[1]);
    // find (α, β) unit with α r0 + β r1 = 0
    let g00 = r0.dot(&r0);
    let g01 = r0.dot(&r1);
    let g11 = r1.dot(&r1);
    if g00 + g11 < 1e-20 {
        return None; // coplanar, handled by `overlapping`
    }
    let det = g00 * g11 - g01 * g01;
    if det > 1e-14 * (g00 + g11).powi(2) || n == 2 {
        return None; // planes meet only at 0
    }
    // null vector of the 2x2 Gram matrix
    let (alpha, beta) = if g00 >= g11 { (-g01, g00) } else { (g11, -g01) };
    let x = (pa[0] * alpha + pa[1] * beta).normalize();
    [x.clone(), -x].into_iter().find(|p| on_arc(a, p) && on_arc(b, p))
}

fn overlapping(a: &Arc, b: &Arc) -> bool {
    let residual = |v: &DVector<f64>| (v - &a.start * a.start.dot(v) - &a.dir * a.dir.dot(v)).norm();
    if residual(&b.start) > 1e-9 || residual(&b.dir) > 1e-9 {
        return false;
    }
    // coplanar: overlap iff some interior sample of one lies inside the other
    (1..8).any(|i| {
        let s = b.length * i as f64 / 8.0;
        on_arc_interior(a, &b.point(s))
    }) || (1..8).any(|i| on_arc_interior(b, &a.point(a.length * i as f64 / 8.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn rejects_bad_vertices() {
        assert!(SphericalGraph::new(vec![v(&[1.0, 0.1, 0.0])], vec![]).is_err());
        assert!(SphericalGraph::new(vec![v(&[1.0, 0.0]), v(&[1.0, 0.0])], vec![]).is_err());
    }

    #[test]
    fn rejects_antipodal_and_crossing_edges() {
        let antipodal = SphericalGraph::new(vec![v(&[1.0, 0.0, 0.0]), v(&[-1.0, 0.0, 0.0])], vec![(0, 1)]);
        assert!(antipodal.is_err());
        let s = 0.5f64.sqrt();
        let crossing =
            SphericalGraph::new(vec![v(&[s, s, 0.0]), v(&[s, -s, 0.0]), v(&[s, 0.0, s]), v(&[s, 0.0, -s])], vec![(0, 1), (2, 3)]);
        assert!(crossing.is_err());
        let inner_vertex = SphericalGraph::new(vec![v(&[s, s, 0.0]), v(&[s, -s, 0.0]), v(&[1.0, 0.0, 0.0])], vec![(0, 1)]);
        assert!(inner_vertex.is_err());
    }

    #[test]
    fn triangle_on_equator_is_valid() {
        let g = SphericalGraph::new(
            (0..3)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / 3.0;
                    v(&[t.cos(), t.sin(), 0.0])
                })
                .collect(),
            vec![(0, 1), (1, 2), (2, 0)],
        )
        .unwrap();
        assert_eq!(g.euler_char(), 0);
        assert!((g.total_length() - 2.0 * PI).abs() < 1e-12);
        assert_eq!(g.cone_dim(), 2);
    }

    #[test]
    fn arcs_run_between_endpoints() {
        let g = SphericalGraph::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 0.6, 0.8])], vec![(0, 1)]).unwrap();
        let arc = g.arc(0);
        assert!((arc.length - PI / 2.0).abs() < 1e-12);
        assert!((arc.point(arc.length) - &g.vertices()[1]).norm() < 1e-12);
        let t = g.incident_tangents(0);
        assert!((&t[0] - v(&[0.0, 0.6, 0.8])).norm() < 1e-12);
    }

    #[test]
    fn subdivision_preserves_euler_characteristic() {
        let g = SphericalGraph::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])], vec![(0, 1)]).unwrap();
        let h = g.subdivided(0).unwrap();
        assert_eq!(h.euler_char(), g.euler_char());
        assert_eq!(h.degree(2), 2);
        assert!((h.total_length() - g.total_length()).abs() < 1e-12);
    }
}
