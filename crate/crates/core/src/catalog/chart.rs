use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// How a parameter axis ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Edge {
    /// The parametrisation itself closes up here (polar origin, sphere pole).
    Natural,
    /// The set continues past this edge; the chart only covers part of it.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisKind {
    Periodic,
    Interval { lo: Edge, hi: Edge },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub kind: AxisKind,
}

impl Axis {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, AxisKind::Periodic)
    }

    /// Whether `t` lies in the axis, after wrapping periodic coordinates.
    pub fn wrap(&self, t: f64) -> Option<f64> {
        match self.kind {
            AxisKind::Periodic => Some(self.lo + (t - self.lo).rem_euclid(self.width())),
            AxisKind::Interval { .. } => (t >= self.lo - 1e-12 && t <= self.hi + 1e-12).then_some(t.clamp(self.lo, self.hi)),
        }
    }
}

/// Position with first and second parameter derivatives.
#[derive(Debug, Clone)]
pub struct ChartPoint {
    pub x: DVector<f64>,
    /// `d1[a] = ∂x/∂u_a`
    pub d1: Vec<DVector<f64>>,
    /// `d2[a][b] = ∂²x/∂u_a∂u_b`
    pub d2: Vec<Vec<DVector<f64>>>,
}

/// Built-in parametrisations.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartMap {
    /// Polar coordinates `(φ, r)` in the plane `origin + span(u, v)`.
    Plane { origin: DVector<f64>, u: DVector<f64>, v: DVector<f64> },
    /// `(φ, θ)` on the sphere of the given centre and radius in `R^3`.
    Sphere { center: [f64; 3], radius: f64 },
    /// `(φ, ψ)` on the torus of revolution about the z-axis.
    Torus { major: f64, minor: f64 },
    /// `(φ, t)` on the cylinder `x² + y² = radius²`.
    Cylinder { radius: f64 },
    /// `(φ, r)` on `z = a r²`.
    Paraboloid { a: f64 },
    /// `(φ, u)` on `(x² + y²)/a² − z²/c² = 1`.
    Hyperboloid { a: f64, c: f64 },
    /// `t ↦ (p_1(t), ..., p_n(t))`, coefficients in increasing degree.
    PolynomialCurve { coefficients: Vec<Vec<f64>> },
}

impl ChartMap {
    pub fn name(&self) -> &'static str {
        match self {
            ChartMap::Plane { .. } => "plane",
            ChartMap::Sphere { .. } => "sphere",
            ChartMap::Torus { .. } => "torus",
            ChartMap::Cylinder { .. } => "cylinder",
            ChartMap::Paraboloid { .. } => "paraboloid",
            ChartMap::Hyperboloid { .. } => "hyperboloid_one_sheet",
            ChartMap::PolynomialCurve { .. } => "polynomial_curve",
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            ChartMap::PolynomialCurve { .. } => 1,
            _ => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ChartMap::Plane { origin, .. } => origin.len(),
            ChartMap::PolynomialCurve { coefficients } => coefficients.len(),
            _ => 3,
        }
    }

    /// The parameter box of the whole parametrised set, used to classify the
    /// edges of a user-supplied domain.
    fn natural_axes(&self) -> Vec<(f64, f64, bool)> {
        // (lo, hi, periodic); infinite bounds mean "no natural edge"
        let inf = f64::INFINITY;
        match self {
            ChartMap::Plane { .. } | ChartMap::Paraboloid { .. } => vec![(0.0, 2.0 * PI, true), (0.0, inf, false)],
            ChartMap::Sphere { .. } => vec![(0.0, 2.0 * PI, true), (0.0, PI, false)],
            ChartMap::Torus { .. } => vec![(0.0, 2.0 * PI, true), (0.0, 2.0 * PI, true)],
            ChartMap::Cylinder { .. } | ChartMap::Hyperboloid { .. } => vec![(0.0, 2.0 * PI, true), (-inf, inf, false)],
            ChartMap::PolynomialCurve { .. } => vec![(-inf, inf, false)],
        }
    }

    pub fn eval(&self, p: &[f64]) -> ChartPoint {
        match self {
            ChartMap::Plane { origin, u, v } => {
                let (phi, r) = (p[0], p[1]);
                let (s, c) = phi.sin_cos();
                let radial = u * c + v * s;
                let angular = v * c - u * s;
                ChartPoint {
                    x: origin + &radial * r,
                    d1: vec![&angular * r, radial.clone()],
                    d2: vec![vec![-&radial * r, angular.clone()], vec![angular, DVector::zeros(origin.len())]],
                }
            }
            ChartMap::Sphere { center, radius } => {
                let (phi, theta) = (p[0], p[1]);
                let (sp, cp) = phi.sin_cos();
                let (st, ct) = theta.sin_cos();
                let r = *radius;
                let v3 = |x: f64, y: f64, z: f64| DVector::from_vec(vec![x, y, z]);
                ChartPoint {
                    x: v3(center[0] + r * st * cp, center[1] + r * st * sp, center[2] + r * ct),
                    d1: vec![v3(-r * st * sp, r * st * cp, 0.0), v3(r * ct * cp, r * ct * sp, -r * st)],
                    d2: vec![
                        vec![v3(-r * st * cp, -r * st * sp, 0.0), v3(-r * ct * sp, r * ct * cp, 0.0)],
                        vec![v3(-r * ct * sp, r * ct * cp, 0.0), v3(-r * st * cp, -r * st * sp, -r * ct)],
                    ],
                }
            }
            ChartMap::Torus { major, minor } => {
                let (phi, psi) = (p[0], p[1]);
                let (sp, cp) = phi.sin_cos();
                let (ss, cs) = psi.sin_cos();
                let rho = major + minor * cs;
                let v3 = |x: f64, y: f64, z: f64| DVector::from_vec(vec![x, y, z]);
                ChartPoint {
                    x: v3(rho * cp, rho * sp, minor * ss),
                    d1: vec![v3(-rho * sp, rho * cp, 0.0), v3(-minor * ss * cp, -minor * ss * sp, minor * cs)],
                    d2: vec![
                        vec![v3(-rho * cp, -rho * sp, 0.0), v3(minor * ss * sp, -minor * ss * cp, 0.0)],
                        vec![v3(minor * ss * sp, -minor * ss * cp, 0.0), v3(-minor * cs * cp, -minor * cs * sp, -minor * ss)],
                    ],
                }
            }
            ChartMap::Cylinder { radius } => {
                let (phi, t) = (p[0], p[1]);
                let (sp, cp) = phi.sin_cos();
                let r = *radius;
                let v3 = |x: f64, y: f64, z: f64| DVector::from_vec(vec![x, y, z]);
                ChartPoint {
                    x: v3(r * cp, r * sp, t),
                    d1: vec![v3(-r * sp, r * cp, 0.0), v3(0.0, 0.0, 1.0)],
                    d2: vec![vec![v3(-r * cp, -r * sp, 0.0), v3(0.0, 0.0, 0.0)], vec![v3(0.0, 0.0, 0.0), v3(0.0, 0.0, 0.0)]],
                }
            }
            ChartMap::Paraboloid { a } => {
                let (phi, r) = (p[0], p[1]);
                let (sp, cp) = phi.sin_cos();
                let v3 = |x: f64, y: f64, z: f64| DVector::from_vec(vec![x, y, z]);
                ChartPoint {
                    x: v3(r * cp, r * sp, a * r * r),
                    d1: vec![v3(-r * sp, r * cp, 0.0), v3(cp, sp, 2.0 * a * r)],
                    d2: vec![vec![v3(-r * cp, -r * sp, 0.0), v3(-sp, cp, 0.0)], vec![v3(-sp, cp, 0.0), v3(0.0, 0.0, 2.0 * a)]],
                }
            }
            ChartMap::Hyperboloid { a, c } => {
                let (phi, u) = (p[0], p[1]);
                let (sp, cp) = phi.sin_cos();
                let w = (1.0 + u * u).sqrt();
                let dw = u / w;
                let ddw = 1.0 / (w * w * w);
                let v3 = |x: f64, y: f64, z: f64| DVector::from_vec(vec![x, y, z]);
                ChartPoint {
                    x: v3(a * w * cp, a * w * sp, c * u),
                    d1: vec![v3(-a * w * sp, a * w * cp, 0.0), v3(a * dw * cp, a * dw * sp, *c)],
                    d2: vec![
                        vec![v3(-a * w * cp, -a * w * sp, 0.0), v3(-a * dw * sp, a * dw * cp, 0.0)],
                        vec![v3(-a * dw * sp, a * dw * cp, 0.0), v3(a * ddw * cp, a * ddw * sp, 0.0)],
                    ],
                }
            }
            ChartMap::PolynomialCurve { coefficients } => {
                let t = p[0];
                let n = coefficients.len();
                let mut x = DVector::zeros(n);
                let mut dx = DVector::zeros(n);
                let mut ddx = DVector::zeros(n);
                for (i, c) in coefficients.iter().enumerate() {
                    // Horner for the value and both derivatives
                    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
                    for &ck in c.iter().rev() {
                        p2 = p2 * t + 2.0 * p1;
                        p1 = p1 * t + p0;
                        p0 = p0 * t + ck;
                    }
                    x[i] = p0;
                    dx[i] = p1;
                    ddx[i] = p2;
                }
                ChartPoint { x, d1: vec![dx], d2: vec![vec![ddx]] }
            }
        }
    }

    pub fn position(&self, p: &[f64]) -> DVector<f64> {
        match self {
            ChartMap::PolynomialCurve { coefficients } => DVector::from_iterator(
                coefficients.len(),
                coefficients.iter().map(|c| c.iter().rev().fold(0.0, |acc, &ck| acc * p[0] + ck)),
            ),
            _ => self.eval(p).x,
        }
    }

    /// Parameters of `x` when `x` lies on the parametrised set (residual
    /// below `1e-6·(1 + |x|)`), before any domain restriction.
    pub fn invert(&self, x: &DVector<f64>) -> Option<Vec<f64>> {
        let tol = 1e-6 * (1.0 + x.norm());
        let params = match self {
            ChartMap::Plane { origin, u, v } => {
                let y = x - origin;
                let (a, b) = (u.dot(&y), v.dot(&y));
                vec![b.atan2(a), a.hypot(b)]
            }
            ChartMap::Sphere { center, radius } => {
                let y: Vec<f64> = (0..3).map(|i| (x[i] - center[i]) / radius).collect();
                vec![y[1].atan2(y[0]), y[2].clamp(-1.0, 1.0).acos()]
            }
            ChartMap::Torus { major, minor } => {
                let rho = x[0].hypot(x[1]) - major;
                vec![x[1].atan2(x[0]), (x[2] / minor).atan2(rho / minor)]
            }
            ChartMap::Cylinder { .. } => vec![x[1].atan2(x[0]), x[2]],
            ChartMap::Paraboloid { .. } => vec![x[1].atan2(x[0]), x[0].hypot(x[1])],
            ChartMap::Hyperboloid { c, .. } => vec![x[1].atan2(x[0]), x[2] / c],
            ChartMap::PolynomialCurve { .. } => vec![self.nearest_curve_parameter(x)],
        };
        ((self.position(&params) - x).norm() <= tol).then_some(params)
    }

    fn nearest_curve_parameter(&self, x: &DVector<f64>) -> f64 {
        // cubic-spaced scan over [-|x|, |x|], then Newton on |c(t) - x|²
        // from the best few nodes
        let scale = x.norm().max(1.0);
        let mut nodes: Vec<(f64, f64)> = (0..=4000)
            .map(|i| {
                let u = i as f64 / 2000.0 - 1.0;
                let t = scale * u.powi(3);
                ((self.position(&[t]) - x).norm_squared(), t)
            })
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes
            .iter()
            .take(4)
            .map(|&(_, t0)| {
                let t = self.curve_newton(x, t0);
                ((self.position(&[t]) - x).norm_squared(), t)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or(0.0, |(_, t)| t)
    }

    fn curve_newton(&self, x: &DVector<f64>, mut t: f64) -> f64 {
        for _ in 0..60 {
            let cp = self.eval(&[t]);
            let r = &cp.x - x;
            let g = r.dot(&cp.d1[0]);
            let h = cp.d1[0].norm_squared() + r.dot(&cp.d2[0][0]);
            if h.abs() < 1e-300 || !h.is_finite() {
                break;
            }
            let step = g / h;
            t -= step;
            if step.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }
}

/// A parametrised piece of a smooth set with a constant partition-of-unity
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub map: ChartMap,
    pub axes: Vec<Axis>,
    pub weight: f64,
}

impl Chart {
    /// Builds a chart over the box `domain`, classifying each edge against
    /// the natural parameter range of `map`.
    pub fn new(map: ChartMap, domain: &[(f64, f64)], weight: f64) -> Result<Self> {
        let natural = map.natural_axes();
        if domain.len() != natural.len() {
            return Err(Error::invalid_set(
                "charts.domain",
                format!("map `{}` takes {} parameters, domain has {}", map.name(), natural.len(), domain.len()),
            ));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::invalid_set("charts.params.weight", format!("weight {weight} outside (0, 1]")));
        }
        let mut axes = Vec::with_capacity(domain.len());
        for (i, (&(lo, hi), &(nlo, nhi, periodic))) in domain.iter().zip(&natural).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid_set("charts.domain", format!("axis {i}: [{lo}, {hi}] is not a finite interval")));
            }
            let full_period = periodic && ((hi - lo) - (nhi - nlo)).abs() < 1e-9;
            let kind = if full_period {
                AxisKind::Periodic
            } else {
                if !periodic && (lo < nlo - 1e-12 || hi > nhi + 1e-12) {
                    return Err(Error::invalid_set(
                        "charts.domain",
                        format!("axis {i}: [{lo}, {hi}] leaves the parameter range of `{}`", map.name()),
                    ));
                }
                if periodic && hi - lo > nhi - nlo {
                    return Err(Error::invalid_set("charts.domain", format!("axis {i}: interval longer than one period")));
                }
                let edge = |e: f64, n: f64| {
                    if !periodic && (e - n).abs() < 1e-12 {
                        Edge::Natural
                    } else {
                        Edge::Truncated
                    }
                };
                AxisKind::Interval { lo: edge(lo, nlo), hi: edge(hi, nhi) }
            };
            axes.push(Axis { lo, hi, kind });
        }
        Ok(Chart { map, axes, weight })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn eval(&self, p: &[f64]) -> ChartPoint {
        self.map.eval(p)
    }

    /// Parameters of `x` inside this chart's domain, if any.
    pub fn locate(&self, x: &DVector<f64>) -> Option<Vec<f64>> {
        let p = self.map.invert(x)?;
        p.iter().zip(&self.axes).map(|(&t, axis)| axis.wrap(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn maps() -> Vec<ChartMap> {
        vec![
            ChartMap::Plane {
                origin: DVector::from_vec(vec![0.5, 0.0, -1.0]),
                u: DVector::from_vec(vec![1.0, 0.0, 0.0]),
                v: DVector::from_vec(vec![0.0, 0.6, 0.8]),
            },
            ChartMap::Sphere { center: [0.0, 1.0, 0.0], radius: 2.0 },
            ChartMap::Torus { major: 2.0, minor: 1.0 },
            ChartMap::Cylinder { radius: 1.5 },
            ChartMap::Paraboloid { a: 1.0 },
            ChartMap::Hyperboloid { a: 1.0, c: 1.0 },
            ChartMap::PolynomialCurve { coefficients: vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0]] },
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn derivatives_match_central_differences(a in 0.1f64..6.0, b in 0.2f64..2.9) {
            for map in maps() {
                let p: Vec<f64> = if map.param_dim() == 1 { vec![b - 1.5] } else { vec![a, b] };
                let cp = map.eval(&p);
                let h = 1e-5;
                for i in 0..p.len() {
                    let mut pp = p.clone(); pp[i] += h;
                    let mut pm = p.clone(); pm[i] -= h;
                    let fp = map.eval(&pp);
                    let fm = map.eval(&pm);
                    let fd1 = (&fp.x - &fm.x) / (2.0 * h);
                    let scale = 1.0 + cp.d1[i].norm();
                    prop_assert!((&fd1 - &cp.d1[i]).norm() < 1e-5 * scale, "{} d1[{}]", map.name(), i);
                    for j in 0..p.len() {
                        let fd2 = (&fp.d1[j] - &fm.d1[j]) / (2.0 * h);
                        let scale = 1.0 + cp.d2[i][j].norm();
                        prop_assert!((&fd2 - &cp.d2[i][j]).norm() < 1e-5 * scale, "{} d2[{}][{}]", map.name(), i, j);
                    }
                }
            }
        }

        #[test]
        fn invert_recovers_parameters(a in 0.1f64..6.0, b in 0.2f64..2.9) {
            for map in maps() {
                let p: Vec<f64> = if map.param_dim() == 1 { vec![b - 1.5] } else { vec![a, b] };
                let x = map.position(&p);
                let q = map.invert(&x).expect("point on the set");
                prop_assert!((map.position(&q) - &x).norm() < 1e-9 * (1.0 + x.norm()), "{}", map.name());
            }
        }
    }

    #[test]
    fn edges_are_classified() {
        let chart = Chart::new(ChartMap::Paraboloid { a: 1.0 }, &[(0.0, 2.0 * PI), (0.0, 100.0)], 1.0).unwrap();
        assert!(chart.axes[0].is_periodic());
        assert_eq!(chart.axes[1].kind, AxisKind::Interval { lo: Edge::Natural, hi: Edge::Truncated });
        assert!(Chart::new(ChartMap::Paraboloid { a: 1.0 }, &[(0.0, 2.0 * PI), (-1.0, 1.0)], 1.0).is_err());
        assert!(Chart::new(ChartMap::Torus { major: 2.0, minor: 1.0 }, &[(0.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn locate_respects_the_domain() {
        let chart = Chart::new(ChartMap::Cylinder { radius: 1.0 }, &[(0.0, 2.0 * PI), (-5.0, 5.0)], 1.0).unwrap();
        assert!(chart.locate(&DVector::from_vec(vec![0.0, -1.0, 2.0])).is_some());
        assert!(chart.locate(&DVector::from_vec(vec![0.0, -1.0, 7.0])).is_none());
        assert!(chart.locate(&DVector::from_vec(vec![0.0, -2.0, 2.0])).is_none());
    }
}
