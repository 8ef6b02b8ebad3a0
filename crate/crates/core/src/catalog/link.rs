use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Axis, AxisKind, Edge, SetDescriptor, SetKind, SmoothSet, SphericalGraph};
use crate::error::{Error, Result};
use crate::grassmann::{AffineFlat, Subspace};
use crate::poly::Polynomial;

/// Relative tolerance for a vertex or direction lying in a sampled flat.
const INCIDENCE_TOLERANCE: f64 = 1e-9;
/// Arc samples per sub-interval in the radial count for conic sets.
const ARC_SAMPLES: usize = 2048;
/// Angular samples for the asymptotic-direction count.
const DIRECTION_SAMPLES: usize = 4096;

/// `χ(Lk^∞(X ∩ (x0 + H)))` together with the radius that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSection {
    pub chi: i64,
    /// Radius of the last sphere used; 0 when the route is radius-free.
    pub radius_used: f64,
    /// The count agreed at two consecutive radii (always true for exact routes).
    pub stable: bool,
}

impl LinkSection {
    fn exact(chi: i64) -> Self {
        LinkSection { chi, radius_used: 0.0, stable: true }
    }
}

/// Counting method for one-dimensional sections of hypersurfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMethod {
    /// Count simple asymptotic directions of the section (the real zeros of
    /// its top-degree form on the unit circle); a direction that is not
    /// simple makes the flat degenerate.
    Auto,
    /// Count zeros on circles `S_R(x0)` of growing radius.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPolicy {
    pub method: LinkMethod,
    /// Angular samples per circle for the radial count.
    pub scan_points: usize,
    pub max_doublings: usize,
}

impl Default for LinkPolicy {
    fn default() -> Self {
        LinkPolicy { method: LinkMethod::Auto, scan_points: 8192, max_doublings: 6 }
    }
}

impl LinkPolicy {
    pub fn radial() -> Self {
        LinkPolicy { method: LinkMethod::Radial, ..LinkPolicy::default() }
    }
}

/// `χ(Lk^∞(X ∩ flat))`.
///
/// Errors with `Degenerate` when the flat is tangent or incident to the set
/// in a non-generic way, `Unstable` when the radial count never settles and
/// `Unsupported` for sections whose link is an even-dimensional manifold of
/// unknown topology.
pub fn link_infinity_chi(set: &SetDescriptor, flat: &AffineFlat, policy: &LinkPolicy) -> Result<LinkSection> {
    let n = set.ambient_dim;
    let h = &flat.direction;
    if h.ambient_dim() != n {
        return Err(Error::InvalidSubspace(format!("flat lives in R^{}, set in R^{n}", h.ambient_dim())));
    }
    match &set.kind {
        SetKind::Linear(v) => linear_link(v, h).map(LinkSection::exact),
        SetKind::Conic(g) => conic_link(g, flat, policy),
        SetKind::Smooth(s) => smooth_link(s, n, flat, policy),
    }
}

fn sphere_chi(m: usize) -> i64 {
    // χ(S^{m-1}); the empty link when m = 0
    if m == 0 {
        0
    } else if m % 2 == 1 {
        2
    } else {
        0
    }
}

fn linear_link(v: &Subspace, h: &Subspace) -> Result<i64> {
    let n = v.ambient_dim();
    let (d, k) = (v.dim(), h.dim());
    if k == n {
        return Ok(sphere_chi(d));
    }
    if k == 0 {
        return Ok(0);
    }
    let joint = DMatrix::from_fn(n, d + k, |r, c| if c < d { v.frame()[(r, c)] } else { h.frame()[(r, c - d)] });
    let mut sv: Vec<f64> = joint.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smallest = sv[(d + k).min(n) - 1];
    if smallest < INCIDENCE_TOLERANCE {
        return Err(Error::Degenerate(format!("subspace and flat are not transversal (singular value {smallest:e})")));
    }
    Ok(if d + k > n { sphere_chi(d + k - n) } else { 0 })
}

fn conic_link(g: &SphericalGraph, flat: &AffineFlat, policy: &LinkPolicy) -> Result<LinkSection> {
    let n = g.ambient_dim();
    let h = &flat.direction;
    let k = h.dim();
    if k == n {
        return Ok(LinkSection::exact(g.euler_char()));
    }
    if k == 0 {
        return Ok(LinkSection::exact(0));
    }
    let perp = h.complement();
    for (i, v) in g.vertices().iter().enumerate() {
        let off = (perp.transpose() * v).norm();
        if off < INCIDENCE_TOLERANCE {
            return Err(Error::Degenerate(format!("vertex {i} lies in the sampled flat direction")));
        }
    }
    if k <= n.saturating_sub(2) {
        // the cone meets a flat of codimension >= 2 in finitely many points
        for e in 0..g.edges().len() {
            let arc = g.arc(e);
            let proj = DMatrix::from_columns(&[perp.transpose() * &arc.start, perp.transpose() * &arc.dir]);
            let sv = proj.singular_values();
            if sv.min() < INCIDENCE_TOLERANCE {
                return Err(Error::Degenerate(format!("arc {e} meets the flat direction non-transversally")));
            }
        }
        return Ok(LinkSection::exact(0));
    }
    let nu = perp.column(0).into_owned();
    let c = nu.dot(&flat.origin);
    if c.abs() <= 1e-12 * (1.0 + flat.origin.norm()) {
        return Ok(LinkSection::exact(hyperplane_crossings(g, &nu) as i64));
    }
    radial_conic_link(g, &nu, c, &flat.origin, policy)
}

/// Arcs crossing the hyperplane `ν^⊥`; vertices are known to be off it.
fn hyperplane_crossings(g: &SphericalGraph, nu: &DVector<f64>) -> usize {
    g.edges().iter().filter(|&&(a, b)| (g.vertices()[a].dot(nu) > 0.0) != (g.vertices()[b].dot(nu) > 0.0)).count()
}

/// Link of the cone cut by the affine hyperplane `{⟨x, ν⟩ = c}` on spheres
/// `S_R(x0)`. Each sector `{t γ(s)}` meets the hyperplane along
/// `t(s) = c / ⟨γ(s), ν⟩`, which escapes to infinity where the arc crosses `ν^⊥`.
fn radial_conic_link(g: &SphericalGraph, nu: &DVector<f64>, c: f64, x0: &DVector<f64>, policy: &LinkPolicy) -> Result<LinkSection> {
    let count = |radius: f64| -> i64 {
        let mut total = 0;
        for e in 0..g.edges().len() {
            let arc = g.arc(e);
            let a = arc.start.dot(nu);
            let b = arc.dir.dot(nu);
            // zeros of a cos s + b sin s inside (0, L)
            let phase = a.atan2(b);
            let mut cuts = vec![0.0];
            for j in -1..=2 {
                let s = -phase + j as f64 * PI;
                if s > 0.0 && s < arc.length {
                    cuts.push(s);
                }
            }
            cuts.push(arc.length);
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let mid = 0.5 * (lo + hi);
                let hm = a * mid.cos() + b * mid.sin();
                if hm * c <= 0.0 {
                    continue; // this part of the sector lies on the other side
                }
                let lo_pole = lo > 0.0;
                let hi_pole = hi < arc.length;
                let mut values = Vec::with_capacity(ARC_SAMPLES + 2);
                if lo_pole {
                    values.push(f64::INFINITY);
                }
                for i in 0..=ARC_SAMPLES {
                    let mut s = lo + (hi - lo) * i as f64 / ARC_SAMPLES as f64;
                    if (i == 0 && lo_pole) || (i == ARC_SAMPLES && hi_pole) {
                        continue;
                    }
                    s = s.clamp(lo, hi);
                    let gs = arc.point(s);
                    let t = c / gs.dot(nu);
                    values.push((gs * t - x0).norm_squared() - radius * radius);
                }
                if hi_pole {
                    values.push(f64::INFINITY);
                }
                total += values.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count() as i64;
            }
        }
        total
    };
    // bounded sector pieces reach their farthest point at an arc end, so
    // starting beyond every vertex on the c side leaves only the ends
    let far = g.vertices().iter().filter(|v| v.dot(nu) * c > 0.0).map(|v| c / v.dot(nu)).fold(0.0f64, f64::max);
    let start = 2.0 * (x0.norm() + far).max(1.0);
    stabilise(start, policy.max_doublings, |r| Ok(count(r)))
}

/// Doubles the radius until two consecutive counts agree.
fn stabilise(start: f64, max_doublings: usize, mut count: impl FnMut(f64) -> Result<i64>) -> Result<LinkSection> {
    let mut radius = start;
    let mut counts = vec![count(radius)?];
    for _ in 0..max_doublings {
        radius *= 2.0;
        counts.push(count(radius)?);
        let m = counts.len();
        if counts[m - 1] == counts[m - 2] {
            return Ok(LinkSection { chi: counts[m - 1], radius_used: radius, stable: true });
        }
    }
    Err(Error::Unstable { counts, radius })
}

fn smooth_link(s: &SmoothSet, n: usize, flat: &AffineFlat, policy: &LinkPolicy) -> Result<LinkSection> {
    if s.compact {
        return Ok(LinkSection::exact(0));
    }
    let k = flat.direction.dim();
    let m = s.dim as i64 + k as i64 - n as i64;
    if m <= 0 {
        return Ok(LinkSection::exact(0));
    }
    if m >= 2 {
        if m % 2 == 0 {
            // a generic section is an m-manifold; its link is a closed
            // manifold of odd dimension m - 1
            return Ok(LinkSection::exact(0));
        }
        return Err(Error::Unsupported(format!("link of a {m}-dimensional section has unknown Euler characteristic")));
    }
    if s.dim == 1 && k == n {
        return curve_link(s, &flat.origin, policy);
    }
    if s.dim == n - 1 && k == 2 {
        let f = s.implicit.as_ref().ok_or_else(|| Error::Unsupported("one-dimensional sections need an implicit polynomial".into()))?;
        let u = flat.direction.basis_vector(0);
        let w = flat.direction.basis_vector(1);
        if policy.method == LinkMethod::Auto {
            // a nearly double asymptotic direction puts the section's far
            // turning points beyond any practical radius, so the radial
            // fallback would count them as ends
            return asymptotic_directions(f, &u, &w)
                .map(LinkSection::exact)
                .ok_or_else(|| Error::Degenerate("section has a (nearly) double asymptotic direction".into()));
        }
        return radial_surface_link(f, &flat.origin, &u, &w, policy);
    }
    Err(Error::Unsupported(format!("{m}-dimensional sections of a {}-dimensional set in R^{n}", s.dim)))
}

/// Number of simple real zeros of `θ ↦ f_top(cos θ u + sin θ w)` on the
/// circle, or `None` when some zero is not simple or the form vanishes.
fn asymptotic_directions(f: &Polynomial, u: &DVector<f64>, w: &DVector<f64>) -> Option<i64> {
    let top = f.top_form();
    let coeff_scale = top.terms().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
    let form = BinaryForm::restrict(&top, u, w)?;
    let step = 2.0 * PI / DIRECTION_SAMPLES as f64;
    let values: Vec<f64> = (0..DIRECTION_SAMPLES).map(|i| form.eval(i as f64 * step)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= 1e-12 * coeff_scale {
        return None;
    }
    let mut count = 0;
    for i in 0..DIRECTION_SAMPLES {
        let j = (i + 1) % DIRECTION_SAMPLES;
        let (a, b) = (values[i], values[j]);
        if (a > 0.0) != (b > 0.0) {
            let lo = i as f64 * step;
            let root = bisect(|t| form.eval(t), lo, lo + step, 1e-13);
            if form.slope(root).abs() < 1e-6 * scale {
                return None;
            }
            count += 1;
        } else {
            // a near-zero local minimum of |g| hides a double root
            let prev = values[(i + DIRECTION_SAMPLES - 1) % DIRECTION_SAMPLES];
            if a.abs() <= prev.abs() && a.abs() <= b.abs() && a.abs() < 1e-6 * scale {
                return None;
            }
        }
    }
    Some(count)
}

/// `Σ_j a_j cos^{m−j}θ sin^jθ`: a homogeneous form restricted to a plane.
struct BinaryForm {
    coeffs: Vec<f64>,
}

impl BinaryForm {
    /// Interpolates the restriction from `m + 1` angles spread over `[0, π)`.
    fn restrict(top: &Polynomial, u: &DVector<f64>, w: &DVector<f64>) -> Option<Self> {
        let m = top.degree() as usize;
        let angles: Vec<f64> = (0..=m).map(|i| (i as f64 + 0.5) * PI / (m + 1) as f64).collect();
        let basis = DMatrix::from_fn(m + 1, m + 1, |r, j| {
            let (s, c) = angles[r].sin_cos();
            c.powi((m - j) as i32) * s.powi(j as i32)
        });
        let rhs = DVector::from_iterator(
            m + 1,
            angles.iter().map(|t| {
                let (s, c) = t.sin_cos();
                top.eval((u * c + w * s).as_slice())
            }),
        );
        let coeffs = basis.lu().solve(&rhs)?;
        Some(BinaryForm { coeffs: coeffs.as_slice().to_vec() })
    }

    fn eval(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let m = self.coeffs.len() - 1;
        self.coeffs.iter().enumerate().map(|(j, a)| a * c.powi((m - j) as i32) * s.powi(j as i32)).sum()
    }

    fn slope(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let m = self.coeffs.len() - 1;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let (p, q) = ((m - j) as i32, j as i32);
                let dc = if p > 0 { -(p as f64) * c.powi(p - 1) * s * s.powi(q) } else { 0.0 };
                let ds = if q > 0 { q as f64 * s.powi(q - 1) * c * c.powi(p) } else { 0.0 };
                a * (dc + ds)
            })
            .sum()
    }
}

fn radial_surface_link(f: &Polynomial, x0: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>, policy: &LinkPolicy) -> Result<LinkSection> {
    let start = 8.0 * f.coefficient_scale().max(x0.norm());
    let n_scan = policy.scan_points.max(16);
    stabilise(start, policy.max_doublings, |radius| {
        let at = |theta: f64| -> Vec<f64> {
            let (s, c) = theta.sin_cos();
            (x0 + u * (radius * c) + w * (radius * s)).as_slice().to_vec()
        };
        let g = |theta: f64| f.eval(&at(theta));
        let step = 2.0 * PI / n_scan as f64;
        let values: Vec<f64> = (0..n_scan).map(|i| g(i as f64 * step)).collect();
        let mut count = 0;
        for i in 0..n_scan {
            let (a, b) = (values[i], values[(i + 1) % n_scan]);
            if (a > 0.0) == (b > 0.0) {
                continue;
            }
            let lo = i as f64 * step;
            let root = bisect(g, lo, lo + step, 1e-10);
            let grad = f.gradient(&at(root));
            let gnorm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            let gu: f64 = grad.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            let gw: f64 = grad.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let gh = gu.hypot(gw);
            if gh < 1e-6 * gnorm {
                return Err(Error::Degenerate(format!("flat is tangent to the set near radius {radius}")));
            }
            let (s, c) = root.sin_cos();
            let tangential = (gu * (-radius * s) + gw * (radius * c)).abs();
            if tangential < 1e-6 * radius * gh {
                return Err(Error::Degenerate(format!("section is tangent to the circle of radius {radius}")));
            }
            count += 1;
        }
        Ok(count)
    })
}

fn curve_link(s: &SmoothSet, x0: &DVector<f64>, policy: &LinkPolicy) -> Result<LinkSection> {
    let n_scan = policy.scan_points.max(16);
    stabilise(8.0 * x0.norm().max(1.0), policy.max_doublings, |radius| {
        let mut total = 0.0;
        for chart in &s.charts {
            let axis: Axis = chart.axes[0];
            let f = |t: f64| (chart.map.position(&[t]) - x0).norm_squared() - radius * radius;
            let periodic = axis.is_periodic();
            let samples = if periodic { n_scan } else { n_scan + 1 };
            let values: Vec<f64> = (0..samples).map(|i| f(axis.lo + axis.width() * i as f64 / n_scan as f64)).collect();
            if let AxisKind::Interval { lo, hi } = axis.kind {
                if (lo == Edge::Truncated && values[0] <= 0.0) || (hi == Edge::Truncated && values[samples - 1] <= 0.0) {
                    return Err(Error::CoverageGap(format!("chart `{}` ends inside the sphere of radius {radius}", chart.map.name())));
                }
            }
            let pairs = if periodic { samples } else { samples - 1 };
            let crossings = (0..pairs).filter(|&i| (values[i] > 0.0) != (values[(i + 1) % samples] > 0.0)).count();
            total += chart.weight * crossings as f64;
        }
        Ok(total.round() as i64)
    })
}

/// A linear section, allowed to fill the whole flat.
fn linear_in(name: &str, v: Subspace) -> Result<SetDescriptor> {
    if v.dim() == 0 {
        return Err(Error::Unsupported("the section is the origin alone".into()));
    }
    Ok(SetDescriptor { name: name.into(), ambient_dim: v.ambient_dim(), kind: SetKind::Linear(v) })
}

pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `X ∩ H` in the coordinates of the frame of `H`.
pub fn section(set: &SetDescriptor, h: &Subspace) -> Result<SetDescriptor> {
    let name = format!("{}_section", set.name);
    let k = h.dim();
    if k == 0 {
        return Err(Error::Unsupported("the section by the zero subspace is a point".into()));
    }
    match &set.kind {
        SetKind::Linear(v) => {
            // V ∩ H: null space of [V, -H] mapped to H-coordinates
            let (n, d) = (v.ambient_dim(), v.dim());
            // padded to a square matrix so the SVD returns the full null space
            let rows = n.max(d + k);
            let joint = DMatrix::from_fn(rows, d + k, |r, c| {
                if r >= n {
                    0.0
                } else if c < d {
                    v.frame()[(r, c)]
                } else {
                    -h.frame()[(r, c - d)]
                }
            });
            let svd = joint.svd(true, true);
            let vt = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
            let sv = &svd.singular_values;
            let mut basis = Vec::new();
            for (i, row) in vt.row_iter().enumerate() {
                let sigma = if i < sv.len() { sv[i] } else { 0.0 };
                if sigma < INCIDENCE_TOLERANCE {
                    basis.push(DVector::from_iterator(k, row.iter().skip(d).copied()));
                }
            }
            let inter = Subspace::span(k, &basis)?;
            linear_in(&name, inter)
        }
        SetKind::Conic(g) => {
            let perp = h.complement();
            let to_h = |x: &DVector<f64>| -> DVector<f64> { (h.frame().transpose() * x).normalize() };
            let in_h = |x: &DVector<f64>| (perp.transpose() * x).norm() < INCIDENCE_TOLERANCE;
            let mut vertices = Vec::new();
            let mut index = vec![None; g.vertices().len()];
            for (i, v) in g.vertices().iter().enumerate() {
                if in_h(v) {
                    index[i] = Some(vertices.len());
                    vertices.push(to_h(v));
                }
            }
            let mut edges = Vec::new();
            for (e, &(a, b)) in g.edges().iter().enumerate() {
                match (index[a], index[b]) {
                    (Some(ia), Some(ib)) => edges.push((ia, ib)),
                    (None, None) if perp.ncols() == 1 => {
                        let nu = perp.column(0).into_owned();
                        let arc = g.arc(e);
                        let (p, q) = (arc.start.dot(&nu), arc.dir.dot(&nu));
                        let s = (-p).atan2(q).rem_euclid(PI);
                        if s > 0.0 && s < arc.length {
                            vertices.push(to_h(&arc.point(s)));
                        }
                    }
                    _ => {}
                }
            }
            if vertices.is_empty() {
                return Err(Error::Unsupported("the section is the apex alone".into()));
            }
            if vertices.len() == 2 && edges.is_empty() && (&vertices[0] + &vertices[1]).norm() < 1e-9 {
                return linear_in(&name, Subspace::span(k, &vertices[..1])?);
            }
            if k == 1 {
                return Err(Error::Unsupported("a single ray is not a closed cone over a graph".into()));
            }
            Ok(SetDescriptor::conic(&name, SphericalGraph::new(vertices, edges)?))
        }
        SetKind::Smooth(s) => {
            let n = set.ambient_dim;
            if s.dim + k != n + 1 {
                return Err(Error::Unsupported(format!("{}-dimensional smooth sections", s.dim + k - n)));
            }
            let f = s.implicit.as_ref().ok_or_else(|| Error::Unsupported("smooth sections need an implicit polynomial".into()))?;
            let g = f.compose_affine(&vec![0.0; n], h.frame());
            Ok(SetDescriptor {
                name,
                ambient_dim: k,
                kind: SetKind::Smooth(SmoothSet { dim: 1, charts: vec![], implicit: Some(g), declared_chi: None, compact: false }),
            })
        }
    }
}
