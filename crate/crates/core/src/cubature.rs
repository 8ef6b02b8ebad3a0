//! Curvature integrals `∫_{X ∩ B_R(c)} K_i` over chart atlases.
//!
//! Each chart is integrated as an iterated integral. The outer parameter is
//! sampled by the periodic trapezoid rule (or composite Gauss-Legendre on an
//! interval); along each outer line the ball indicator is resolved exactly by
//! locating the crossings of `|x − c|² = R²` and integrating only over the
//! inside pieces with composite Gauss-Legendre. The integrand is then smooth
//! on every piece, so the rule converges spectrally and the difference to a
//! half-resolution pass is a usable error bound.

use nalgebra::DVector;

use crate::catalog::{Axis, AxisKind, Chart, Edge, SmoothSet};
use crate::curvature::{densities_with_frame, DensityOptions, TangentFrame};
use crate::error::{Error, Result};
use crate::geomconst::sphere_volume;
use crate::grassmann::stream_rng;
use crate::par;

/// Gauss-Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Resolution of the iterated rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureSpec {
    /// Outer-parameter nodes of two-dimensional charts.
    pub outer_nodes: usize,
    /// Gauss-Legendre panels spread over the inside pieces of an inner line.
    pub inner_panels: usize,
    /// Panels over the inside pieces of a curve chart.
    pub curve_panels: usize,
    /// Gauss-Legendre order of each panel.
    pub order: usize,
    /// Points used to bracket the ball crossings along a line.
    pub scan_points: usize,
    pub density: DensityOptions,
    /// Seed of the normal-sphere draws in codimension ≥ 2.
    pub seed: u64,
}

impl Default for CubatureSpec {
    fn default() -> Self {
        CubatureSpec {
            outer_nodes: 128,
            inner_panels: 128,
            curve_panels: 512,
            order: 8,
            scan_points: 256,
            density: DensityOptions::default(),
            seed: 0,
        }
    }
}

impl CubatureSpec {
    /// Half the nodes along every axis; the reference for the error bound.
    pub fn halved(&self) -> Self {
        CubatureSpec {
            outer_nodes: (self.outer_nodes / 2).max(2),
            inner_panels: (self.inner_panels / 2).max(1),
            curve_panels: (self.curve_panels / 2).max(1),
            ..*self
        }
    }
}

/// `∫_{X ∩ B_R(c)} K_i` for `i = 0..=d`, with cubature error bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureIntegrals {
    pub ambient_dim: usize,
    pub dim: usize,
    pub radius: f64,
    pub center: Vec<f64>,
    pub k_integrals: Vec<f64>,
    /// `|full − half|` resolution difference per order.
    pub bounds: Vec<f64>,
}

impl CurvatureIntegrals {
    pub fn k_integral(&self, i: usize) -> (f64, f64) {
        if i > self.dim {
            return (0.0, 0.0);
        }
        (self.k_integrals[i], self.bounds[i])
    }

    /// `vol_d(X ∩ B_R(c)) = ∫K_0 / s_{n−d−1}`.
    pub fn volume(&self) -> (f64, f64) {
        let s = sphere_volume(self.ambient_dim - self.dim - 1);
        (self.k_integrals[0] / s, self.bounds[0] / s)
    }

    /// `Λ_k(X, X ∩ B_R(c)) = ∫ K_{d−k} / s_{n−k−1}`, zero for `k > d`.
    pub fn lk(&self, k: usize) -> (f64, f64) {
        if k > self.dim {
            return (0.0, 0.0);
        }
        let s = sphere_volume(self.ambient_dim - k - 1);
        let (v, b) = self.k_integral(self.dim - k);
        (v / s, b / s)
    }
}

/// All curvature integrals of `set ⊂ R^n` over the ball `B_R(center)`.
pub fn curvature_integrals(
    set: &SmoothSet,
    n: usize,
    radius: f64,
    center: &DVector<f64>,
    spec: &CubatureSpec,
) -> Result<CurvatureIntegrals> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if center.len() != n {
        return Err(Error::InvalidArgument(format!("centre has {} coordinates, expected {n}", center.len())));
    }
    let full = integrate(set, radius, center, spec)?;
    let half = integrate(set, radius, center, &spec.halved())?;
    let bounds = full.iter().zip(&half).map(|(a, b)| (a - b).abs()).collect();
    Ok(CurvatureIntegrals { ambient_dim: n, dim: set.dim, radius, center: center.as_slice().to_vec(), k_integrals: full, bounds })
}

fn integrate(set: &SmoothSet, radius: f64, center: &DVector<f64>, spec: &CubatureSpec) -> Result<Vec<f64>> {
    let mut total = vec![0.0; set.dim + 1];
    for (index, chart) in set.charts.iter().enumerate() {
        let part = match chart.dim() {
            1 => integrate_curve(set, index, radius, center, spec)?,
            2 => integrate_surface(set, index, radius, center, spec)?,
            d => return Err(Error::Unsupported(format!("cubature over {d}-dimensional charts"))),
        };
        for (t, p) in total.iter_mut().zip(part) {
            *t += chart.weight * p;
        }
    }
    Ok(total)
}

/// Composite Gauss-Legendre nodes over `pieces`, `panels` in total,
/// distributed by length.
fn panel_nodes(pieces: &[(f64, f64)], panels: usize, gl: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let mut out = Vec::new();
    if total <= 0.0 {
        return out;
    }
    for &(a, b) in pieces {
        let p = ((panels as f64 * (b - a) / total).ceil() as usize).max(1);
        let h = (b - a) / p as f64;
        for j in 0..p {
            let mid = a + (j as f64 + 0.5) * h;
            for (x, w) in gl.0.iter().zip(&gl.1) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
    }
    out
}

/// Sub-intervals of `[lo, hi]` where `g ≤ 0`, from a uniform scan with
/// bisection at sign changes and a golden-section probe for pieces that
/// dip below zero between two outside scan points.
pub(crate) fn inside_intervals(g: impl Fn(f64) -> f64, lo: f64, hi: f64, scan: usize) -> Vec<(f64, f64)> {
    let m = scan.max(2);
    let w = hi - lo;
    let tol = 1e-14 * w.max(1.0);
    let ts: Vec<f64> = (0..=m).map(|i| if i == m { hi } else { lo + w * i as f64 / m as f64 }).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let mut out = Vec::new();
    let mut start = (vals[0] <= 0.0).then_some(lo);
    for i in 0..m {
        let (a, b) = (vals[i], vals[i + 1]);
        let (ta, tb) = (ts[i], ts[i + 1]);
        match (a <= 0.0, b <= 0.0) {
            (true, true) => {}
            (true, false) => {
                let r = crate::catalog::bisect_root(&g, ta, tb, tol);
                out.push((start.take().unwrap_or(ta), r));
            }
            (false, true) => start = Some(crate::catalog::bisect_root(&g, ta, tb, tol)),
            (false, false) => {
                let (tm, gm) = golden_min(&g, ta, tb);
                if gm <= 0.0 {
                    let r1 = crate::catalog::bisect_root(&g, ta, tm, tol);
                    let r2 = crate::catalog::bisect_root(&g, tm, tb, tol);
                    if r2 > r1 {
                        out.push((r1, r2));
                    }
                }
            }
        }
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    out.retain(|(a, b)| b > a);
    out
}

fn golden_min(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc <= 0.0 {
            return (c, gc);
        }
        if gd <= 0.0 {
            return (d, gd);
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
        if b - a < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Errors when the ball reaches a truncated chart edge that no other chart
/// covers.
fn check_edge(set: &SmoothSet, index: usize, x: &DVector<f64>) -> Result<()> {
    let covered = set.charts.iter().enumerate().any(|(j, c)| j != index && c.locate(x).is_some());
    if covered {
        Ok(())
    } else {
        Err(Error::CoverageGap(format!(
            "the ball reaches the truncated edge of chart {index} (`{}`) at {:?}",
            set.charts[index].map.name(),
            x.as_slice()
        )))
    }
}

fn truncated(axis: &Axis) -> (bool, bool) {
    match axis.kind {
        AxisKind::Periodic => (false, false),
        AxisKind::Interval { lo, hi } => (lo == Edge::Truncated, hi == Edge::Truncated),
    }
}

fn outer_nodes(axis: &Axis, count: usize, gl: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    if axis.is_periodic() {
        let h = axis.width() / count as f64;
        (0..count).map(|j| (axis.lo + (j as f64 + 0.5) * h, h)).collect()
    } else {
        panel_nodes(&[(axis.lo, axis.hi)], (count / gl.0.len()).max(1), gl)
    }
}

/// Accumulates `Σ w · sqrt(det G) · K_i` over the nodes of one line.
fn accumulate(
    chart: &Chart,
    params: impl Iterator<Item = (Vec<f64>, f64)>,
    spec: &CubatureSpec,
    stream: u64,
    acc: &mut [f64],
) -> Result<()> {
    let mut rng = stream_rng(spec.seed, stream);
    for (p, w) in params {
        let cp = chart.eval(&p);
        let frame = TangentFrame::new(&cp)?;
        let scale = w * frame.area_element();
        for k in densities_with_frame(&cp, &frame, &spec.density, &mut rng) {
            acc[k.order] += scale * k.value;
        }
    }
    Ok(())
}

fn integrate_surface(set: &SmoothSet, index: usize, radius: f64, center: &DVector<f64>, spec: &CubatureSpec) -> Result<Vec<f64>> {
    let chart = &set.charts[index];
    let (outer, inner) = (chart.axes[0], chart.axes[1]);
    let gl = gauss_legendre(spec.order);
    let r2 = radius * radius;
    let dist = |u: f64, t: f64| (chart.map.position(&[u, t]) - center).norm_squared() - r2;

    // the ball must not cross a truncated edge of the outer axis
    let (olo, ohi) = truncated(&outer);
    for (edge, flag) in [(outer.lo, olo), (outer.hi, ohi)] {
        if flag {
            for piece in inside_intervals(|t| dist(edge, t), inner.lo, inner.hi, spec.scan_points) {
                check_edge(set, index, &chart.map.position(&[edge, 0.5 * (piece.0 + piece.1)]))?;
            }
        }
    }
    let (ilo, ihi) = truncated(&inner);
    let nodes = outer_nodes(&outer, spec.outer_nodes, &gl);
    let lines = par::map_indexed(nodes.len(), |j| -> Result<Vec<f64>> {
        let (u, wu) = nodes[j];
        let pieces = inside_intervals(|t| dist(u, t), inner.lo, inner.hi, spec.scan_points);
        for &(a, b) in &pieces {
            if (ilo && a <= inner.lo) || (ihi && b >= inner.hi) {
                let t = if ilo && a <= inner.lo { inner.lo } else { inner.hi };
                check_edge(set, index, &chart.map.position(&[u, t]))?;
            }
        }
        let mut acc = vec![0.0; 3];
        let inner_nodes = panel_nodes(&pieces, spec.inner_panels, &gl);
        accumulate(chart, inner_nodes.into_iter().map(|(t, wt)| (vec![u, t], wu * wt)), spec, (j as u64) << 32, &mut acc)?;
        Ok(acc)
    });
    let mut total = vec![0.0; 3];
    for line in lines {
        for (t, v) in total.iter_mut().zip(line?) {
            *t += v;
        }
    }
    Ok(total)
}

fn integrate_curve(set: &SmoothSet, index: usize, radius: f64, center: &DVector<f64>, spec: &CubatureSpec) -> Result<Vec<f64>> {
    let chart = &set.charts[index];
    let axis = chart.axes[0];
    let gl = gauss_legendre(spec.order);
    let r2 = radius * radius;
    let dist = |t: f64| (chart.map.position(&[t]) - center).norm_squared() - r2;
    let pieces = inside_intervals(dist, axis.lo, axis.hi, 4 * spec.scan_points);
    let (tlo, thi) = truncated(&axis);
    for &(a, b) in &pieces {
        if tlo && a <= axis.lo {
            check_edge(set, index, &chart.map.position(&[axis.lo]))?;
        }
        if thi && b >= axis.hi {
            check_edge(set, index, &chart.map.position(&[axis.hi]))?;
        }
    }
    let nodes = panel_nodes(&pieces, spec.curve_panels, &gl);
    // one stream per panel keeps the draws independent of the worker count
    let per = spec.order;
    let chunks = nodes.len().div_ceil(per);
    let parts = par::map_indexed(chunks, |j| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; 2];
        let slice = &nodes[j * per..((j + 1) * per).min(nodes.len())];
        accumulate(chart, slice.iter().map(|&(t, w)| (vec![t], w)), spec, j as u64, &mut acc)?;
        Ok(acc)
    });
    let mut total = vec![0.0; 2];
    for part in parts {
        for (t, v) in total.iter_mut().zip(part?) {
            *t += v;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, SetKind};
    use std::f64::consts::{PI, SQRT_2};

    fn smooth(name: &str) -> (SmoothSet, usize) {
        let set = builtin(name).unwrap();
        let n = set.ambient_dim;
        let SetKind::Smooth(s) = set.kind else { panic!("{name}") };
        (s, n)
    }

    fn origin(n: usize) -> DVector<f64> {
        DVector::zeros(n)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in [1, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..2 * order {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "order {order} degree {deg}");
            }
        }
    }

    #[test]
    fn intervals_find_crossings_and_islands() {
        let pieces = inside_intervals(|t| t * t - 4.0, -10.0, 10.0, 16);
        assert_eq!(pieces.len(), 1);
        assert!((pieces[0].0 + 2.0).abs() < 1e-12 && (pieces[0].1 - 2.0).abs() < 1e-12);
        // a narrow well between two scan points
        let pieces = inside_intervals(|t| (t - 0.3).powi(2) - 1e-4, -10.0, 10.0, 4);
        assert_eq!(pieces.len(), 1);
        assert!((pieces[0].0 - 0.29).abs() < 1e-10 && (pieces[0].1 - 0.31).abs() < 1e-10);
        assert_eq!(inside_intervals(|_| -1.0, 0.0, 1.0, 8), vec![(0.0, 1.0)]);
        assert!(inside_intervals(|_| 1.0, 0.0, 1.0, 8).is_empty());
    }

    #[test]
    fn sphere_area_and_total_curvature() {
        let (s, n) = smooth("sphere_s2");
        let ci = curvature_integrals(&s, n, 2.0, &origin(n), &CubatureSpec::default()).unwrap();
        assert!((ci.lk(2).0 - 4.0 * PI).abs() < 1e-9);
        assert!((ci.lk(0).0 - 2.0).abs() < 1e-9);
        assert!(ci.lk(1).0.abs() < 1e-15);
        assert!(ci.bounds.iter().all(|b| *b < 1e-9));
    }

    #[test]
    fn sphere_cap_area() {
        // the ball of radius 1 about the north pole cuts a cap of height 1/2
        let (s, n) = smooth("sphere_s2");
        let c = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let ci = curvature_integrals(&s, n, 1.0, &c, &CubatureSpec::default()).unwrap();
        assert!((ci.lk(2).0 - PI).abs() < 1e-9, "{}", ci.lk(2).0);
    }

    #[test]
    fn flat_disk() {
        let (s, n) = smooth("plane_r2_in_r3");
        for r in [1.0, 4.0, 64.0] {
            let ci = curvature_integrals(&s, n, r, &origin(n), &CubatureSpec::default()).unwrap();
            assert!((ci.lk(2).0 - PI * r * r).abs() < 1e-9 * r * r);
            assert_eq!(ci.lk(0).0, 0.0);
        }
        // an off-centre ball cuts a disk of radius sqrt(R² − h²)
        let c = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let ci = curvature_integrals(&s, n, 5.0, &c, &CubatureSpec::default()).unwrap();
        assert!((ci.lk(2).0 - PI * 16.0).abs() < 1e-6, "{}", ci.lk(2).0);
    }

    #[test]
    fn torus_total_curvature_vanishes() {
        let (s, n) = smooth("torus_r3");
        let ci = curvature_integrals(&s, n, 8.0, &origin(n), &CubatureSpec::default()).unwrap();
        assert!(ci.lk(0).0.abs() < 1e-9);
        assert!((ci.lk(2).0 - 8.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn hyperboloid_total_curvature_approaches_the_gauss_map_band() {
        let (s, n) = smooth("hyperboloid_r3");
        let ci = curvature_integrals(&s, n, 64.0, &origin(n), &CubatureSpec::default()).unwrap();
        // ∫K_2 = 2 ∫K_Gauss and the tail beyond |u| = u_R is O(1/u_R)
        let gauss = 0.5 * ci.k_integral(2).0;
        assert!((gauss + 2.0 * SQRT_2 * PI).abs() < 0.01 * 2.0 * SQRT_2 * PI, "{gauss}");
        // closed form: ∫_{|u|≤U} K dA = −2√2π · √2 U / sqrt(1 + 2U²)
        let u = ((64.0f64 * 64.0 - 1.0) / 2.0).sqrt();
        let exact = -2.0 * SQRT_2 * PI * SQRT_2 * u / (1.0 + 2.0 * u * u).sqrt();
        assert!((gauss - exact).abs() < 1e-8, "{gauss} {exact}");
    }

    #[test]
    fn truncated_charts_are_detected() {
        let (s, n) = smooth("cylinder_r3");
        let err = curvature_integrals(&s, n, 4096.0, &origin(n), &CubatureSpec::default()).unwrap_err();
        assert!(matches!(err, Error::CoverageGap(_)), "{err}");
    }

    #[test]
    fn curve_length() {
        // length of the twisted cubic between its two crossings of S_R
        let (s, n) = smooth("twisted_cubic_r3");
        let ci = curvature_integrals(&s, n, 10.0, &origin(n), &CubatureSpec::default()).unwrap();
        let f = |t: f64| t * t + t.powi(4) + t.powi(6) - 100.0;
        let hi = crate::catalog::bisect_root(f, 0.0, 10.0, 1e-15);
        let lo = -crate::catalog::bisect_root(f, 0.0, 10.0, 1e-15);
        let (x, w) = gauss_legendre(16);
        let mut length = 0.0;
        let panels = 200;
        for p in 0..panels {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let h = (hi - lo) / panels as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let t = a + 0.5 * h * (xi + 1.0);
                length += 0.5 * h * wi * (1.0 + 4.0 * t * t + 9.0 * t.powi(4)).sqrt();
            }
        }
        assert!((ci.volume().0 - length).abs() < 1e-9 * length, "{} {length}", ci.volume().0);
        assert_eq!(ci.k_integral(0).0, 2.0 * PI * ci.volume().0);
        assert_eq!(ci.k_integral(1).0, 0.0);
    }

    #[test]
    fn results_do_not_depend_on_the_worker_count() {
        let (s, n) = smooth("hyperboloid_r3");
        let c = DVector::from_vec(vec![0.5, 0.0, 3.0]);
        let spec = CubatureSpec { outer_nodes: 32, inner_panels: 32, ..CubatureSpec::default() };
        let a = par::with_workers(1, || curvature_integrals(&s, n, 16.0, &c, &spec).unwrap());
        let b = par::with_workers(4, || curvature_integrals(&s, n, 16.0, &c, &spec).unwrap());
        assert_eq!(a, b);
    }
}
