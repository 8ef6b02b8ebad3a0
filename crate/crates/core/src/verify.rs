//! The theorem harness.
//!
//! A [`Verifier`] holds one set, one base point and one configuration, and
//! caches the expensive shared pieces: the radius sweep and the Grassmannian
//! means of link Euler characteristics. Every row records the route behind
//! each side. `Λ_0` on the assembly side always comes from a route that does
//! not use links at infinity: flat geometry for linear sets, the apex
//! hemisphere count for cones and the curvature cubature for smooth sets.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DVector;

use crate::catalog::{euler_char, link_infinity_chi, LinkPolicy, SetDescriptor, SetKind, SphericalGraph};
use crate::cubature::CubatureSpec;
use crate::error::{Error, Result};
use crate::geomconst::ball_volume;
use crate::grassmann::{grassmann_mean, haar_sample, monte_carlo_mean, shift_subspace, MonteCarloEstimate, SampleError, Subspace};
use crate::limits::{fit_limit, sweep, LimitEstimate, RadiusSample, SweepOptions};
use crate::report::{ReportRow, Term, TheoremId, TheoremReport};
use crate::spherical::{apex_lambda0, conic_lk_measure, spherical_gauss_bonnet_check};

/// Largest base-point norm accepted by the base-point check.
pub const MAX_BASE_POINT_NORM: f64 = 10.0;

/// `(value, uncertainty)`, or the reason the quantity is unavailable.
pub type Side = std::result::Result<(f64, f64), String>;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub radii: Vec<f64>,
    pub cubature: CubatureSpec,
    pub link: LinkPolicy,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_samples: 4000,
            seed: 42,
            radii: vec![8.0, 16.0, 32.0, 64.0],
            cubature: CubatureSpec::default(),
            link: LinkPolicy::default(),
        }
    }
}

impl VerifyConfig {
    fn sweep_options(&self) -> SweepOptions {
        SweepOptions { n_samples: self.n_samples, seed: self.seed, cubature: self.cubature }
    }
}

/// A side of an identity together with the route that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub side: Side,
    pub route: &'static str,
}

pub struct Verifier<'a> {
    set: &'a SetDescriptor,
    cfg: &'a VerifyConfig,
    center: DVector<f64>,
    means: HashMap<usize, Side>,
    samples: Option<Vec<RadiusSample>>,
    limits: Option<Vec<LimitEstimate>>,
    apex: Option<MonteCarloEstimate>,
}

impl<'a> Verifier<'a> {
    pub fn new(set: &'a SetDescriptor, cfg: &'a VerifyConfig) -> Self {
        Self::at(set, cfg, DVector::zeros(set.ambient_dim))
    }

    /// Balls `B_R(x0)` and flats `x0 + H` instead of the origin.
    pub fn at(set: &'a SetDescriptor, cfg: &'a VerifyConfig, x0: DVector<f64>) -> Self {
        Verifier { set, cfg, center: x0, means: HashMap::new(), samples: None, limits: None, apex: None }
    }

    fn n(&self) -> usize {
        self.set.ambient_dim
    }

    /// `E_{H ∈ G_n^k}[χ(Lk^∞(X ∩ (x0 + H)))]`.
    pub fn link_mean(&mut self, k: usize) -> Result<Side> {
        if let Some(side) = self.means.get(&k) {
            return Ok(side.clone());
        }
        let (set, policy, center, n) = (self.set, self.cfg.link, self.center.clone(), self.n());
        let chi = |h: &Subspace| -> std::result::Result<f64, SampleError> {
            let flat = shift_subspace(h, &center).map_err(SampleError::Fatal)?;
            link_infinity_chi(set, &flat, &policy).map(|l| l.chi as f64).map_err(SampleError::from)
        };
        let estimate = if k == 0 || k == n {
            grassmann_mean(n, k, chi, self.cfg.n_samples, self.cfg.seed)
        } else {
            // one stream family per dimension keeps the means independent
            monte_carlo_mean(self.cfg.n_samples, self.cfg.seed, (k as u64 + 1) << 48, |rng| chi(&haar_sample(n, k, rng)))
        };
        let side = match estimate {
            Ok(m) => Ok((m.mean, m.stderr)),
            Err(e @ (Error::Unsupported(_) | Error::ChiUnknown(_))) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        self.means.insert(k, side.clone());
        Ok(side)
    }

    fn radius_samples(&mut self) -> Result<&[RadiusSample]> {
        if self.samples.is_none() {
            self.samples = Some(sweep(self.set, &self.cfg.radii, &self.center, &self.cfg.sweep_options())?);
        }
        Ok(self.samples.as_deref().unwrap_or_default())
    }

    /// `lim Λ_k(X, X ∩ B_R(x0)) / (b_k R^k)` for `k = 1..=n`.
    pub fn limits(&mut self) -> Result<Vec<LimitEstimate>> {
        if let Some(l) = &self.limits {
            return Ok(l.clone());
        }
        let n = self.n();
        let radii = self.cfg.radii.clone();
        let samples = self.radius_samples()?.to_vec();
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let (values, bounds): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| s.normalized[k - 1]).unzip();
            out.push(fit_limit(k, &radii, &values, &bounds)?);
        }
        self.limits = Some(out.clone());
        Ok(out)
    }

    fn limit(&mut self, k: usize) -> Result<(f64, f64)> {
        let l = &self.limits()?[k - 1];
        Ok((l.value, l.uncertainty))
    }

    fn limit_route(&self) -> &'static str {
        match &self.set.kind {
            SetKind::Linear(_) => "flat_volume_exact",
            SetKind::Conic(_) => "conic_homogeneity",
            SetKind::Smooth(_) => "cubature_extrapolated",
        }
    }

    fn apex(&mut self, g: &SphericalGraph) -> Result<MonteCarloEstimate> {
        if self.apex.is_none() {
            self.apex = Some(apex_lambda0(g, self.cfg.n_samples, self.cfg.seed)?);
        }
        Ok(self.apex.unwrap_or_else(|| MonteCarloEstimate::exact(0.0, 0, 0)))
    }

    /// `Λ_0(X, X)` by a route independent of links at infinity.
    pub fn lambda0_direct(&mut self) -> Result<Routed> {
        match &self.set.kind {
            SetKind::Linear(_) => Ok(Routed { side: Ok((0.0, 0.0)), route: "flat_exact" }),
            SetKind::Conic(g) => {
                let m = self.apex(g)?;
                Ok(Routed { side: Ok((m.mean, m.stderr)), route: "apex_hemisphere_count" })
            }
            SetKind::Smooth(_) => {
                let radii = self.cfg.radii.clone();
                let samples = self.radius_samples()?;
                let (values, bounds): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| s.lambda0.unwrap_or((0.0, 0.0))).unzip();
                let l = fit_limit(0, &radii, &values, &bounds)?;
                Ok(Routed { side: Ok((l.value, l.uncertainty)), route: "curvature_cubature" })
            }
        }
    }

    /// `Λ_0(X, X) = χ(X) − ½χ(Lk^∞X) − ½E_{G_n^{n−1}}[χ(Lk^∞(X ∩ H))]`.
    pub fn lambda0_formula(&mut self) -> Result<Side> {
        let n = self.n();
        let chi = match euler_char(self.set) {
            Ok(c) => c as f64,
            Err(e) => return Ok(Err(e.to_string())),
        };
        let whole = self.link_mean(n)?;
        let hyper = self.link_mean(n - 1)?;
        Ok(whole.and_then(|w| hyper.map(|h| (chi - 0.5 * w.0 - 0.5 * h.0, 0.5 * w.1.hypot(h.1)))))
    }

    /// `−½E_{G_n^{n−k−1}} + ½E_{G_n^{n−k+1}}`, the first term dropped when
    /// `n − k − 1 < 1`.
    pub fn growth_rhs(&mut self, k: usize) -> Result<Side> {
        let n = self.n();
        let (mut value, mut var) = (0.0, 0.0);
        if k + 2 <= n {
            match self.link_mean(n - k - 1)? {
                Ok((m, s)) => {
                    value -= 0.5 * m;
                    var += 0.25 * s * s;
                }
                Err(r) => return Ok(Err(r)),
            }
        }
        match self.link_mean(n - k + 1)? {
            Ok((m, s)) => {
                value += 0.5 * m;
                var += 0.25 * s * s;
            }
            Err(r) => return Ok(Err(r)),
        }
        Ok(Ok((value, var.sqrt())))
    }

    fn chi(&self) -> Side {
        euler_char(self.set).map(|c| (c as f64, 0.0)).map_err(|e| e.to_string())
    }

    /// Sum of `Λ_0` and the selected growth limits, with its terms.
    fn assembly(&mut self, orders: &[usize], with_lambda0: bool) -> Result<(Side, Vec<Term>)> {
        let mut terms = Vec::new();
        if with_lambda0 {
            let l0 = self.lambda0_direct()?;
            match l0.side {
                Ok((v, u)) => terms.push(Term { name: "lambda0".into(), value: v, uncertainty: u, route: l0.route.into() }),
                Err(r) => return Ok((Err(r), terms)),
            }
        }
        for &k in orders {
            let (v, u) = self.limit(k)?;
            terms.push(Term { name: format!("limit_{k}"), value: v, uncertainty: u, route: self.limit_route().into() });
        }
        let value = terms.iter().fold(0.0, |a, t| a + t.value);
        let unc = terms.iter().map(|t| t.uncertainty * t.uncertainty).sum::<f64>().sqrt();
        Ok((Ok((value, unc)), terms))
    }

    fn euler_row(&mut self, k: i64, label: &str, orders: &[usize], with_lambda0: bool) -> Result<ReportRow> {
        let (rhs, terms) = self.assembly(orders, with_lambda0)?;
        Ok(row(k, label, self.chi(), rhs, "euler_char", "assembly").with_terms(terms))
    }

    fn report(&self, theorem: TheoremId, rows: Vec<ReportRow>) -> TheoremReport {
        TheoremReport::new(theorem, &self.set.name, self.cfg.seed, self.cfg.n_samples, &self.cfg.radii, rows)
    }

    /// Conic measures at `R = 1` against Grassmannian means of sections.
    pub fn conic_measures(&mut self) -> Result<TheoremReport> {
        let Some(g) = self.set.as_conic() else {
            return Ok(self.report(TheoremId::ConicMeasures, vec![ReportRow::skipped(0, "conic", "the set is not a cone")]));
        };
        let mut rows = Vec::new();
        for k in 1..=self.n() {
            let (v, u) = conic_lk_measure(&g, k, 1.0, self.cfg.n_samples, self.cfg.seed)?;
            let b = ball_volume(k);
            let rhs = self.growth_rhs(k)?;
            rows.push(row(k as i64, &format!("k={k}"), Ok((v / b, u / b)), rhs, "conic_measure", "grassmann_link_mean"));
        }
        Ok(self.report(TheoremId::ConicMeasures, rows))
    }

    /// Growth limits against Grassmannian means, for `k = 1..=n`.
    pub fn growth_limits(&mut self, theorem: TheoremId) -> Result<TheoremReport> {
        let mut rows = Vec::new();
        for k in 1..=self.n() {
            let lhs = self.limit(k)?;
            let rhs = self.growth_rhs(k)?;
            let mut r = row(k as i64, &format!("k={k}"), Ok(lhs), rhs, self.limit_route(), "grassmann_link_mean");
            let est = &self.limits()?[k - 1];
            if !est.converged && !r.skipped {
                r.reason = Some(format!("radius sweep not converged ({:?} model)", est.model));
            }
            rows.push(r);
        }
        Ok(self.report(theorem, rows))
    }

    pub fn total_curvature(&mut self) -> Result<TheoremReport> {
        let formula = self.lambda0_formula()?;
        let direct = self.lambda0_direct()?;
        let r = row(0, "lambda0", formula, direct.side, "link_formula", direct.route);
        Ok(self.report(TheoremId::TotalCurvature, vec![r]))
    }

    pub fn euler_assembly(&mut self) -> Result<TheoremReport> {
        let orders: Vec<usize> = (1..=self.n()).collect();
        let r = self.euler_row(0, "chi", &orders, true)?;
        Ok(self.report(TheoremId::EulerAssembly, vec![r]))
    }

    fn smooth_dim(&self) -> Option<usize> {
        match &self.set.kind {
            SetKind::Linear(v) => Some(v.dim()),
            SetKind::Smooth(s) => Some(s.dim),
            SetKind::Conic(_) => None,
        }
    }

    /// Submanifold forms: curvature-integral limits, section means and the
    /// Gauss-Bonnet assemblies.
    pub fn smooth_theorem(&mut self, theorem: TheoremId) -> Result<TheoremReport> {
        let Some(d) = self.smooth_dim() else {
            return Ok(self.report(theorem, vec![ReportRow::skipped(0, "smooth", "the set is not given as a smooth submanifold")]));
        };
        let n = self.n();
        let route = self.limit_route();
        let mut rows = Vec::new();
        match theorem {
            TheoremId::SmoothGrowth | TheoremId::SmoothSectionGrowth => {
                let section_form = theorem == TheoremId::SmoothSectionGrowth;
                let rhs_route = if section_form { "section_chi_from_links" } else { "grassmann_link_mean" };
                let vol = self.limit(d)?;
                let rhs = self.link_mean(n - d + 1)?.map(|(m, s)| (0.5 * m, 0.5 * s));
                rows.push(row(0, "volume", Ok(vol), rhs, route, rhs_route));
                for i in 1..d {
                    if section_form && i % 2 == 1 {
                        continue;
                    }
                    let lhs = self.limit(d - i)?;
                    let rhs = self.growth_rhs(d - i)?;
                    rows.push(row(i as i64, &format!("K_{i}"), Ok(lhs), rhs, route, rhs_route));
                }
            }
            TheoremId::SmoothAssembly => {
                // K_{2i} terms, i.e. Λ_k with k = d − 2i ≥ 1
                let orders: Vec<usize> = (0..=d / 2).map(|i| d - 2 * i).filter(|&k| k >= 1).collect();
                rows.push(self.euler_row(0, "chi", &orders, d % 2 == 0)?);
            }
            TheoremId::OddDimension => {
                if d % 2 == 0 {
                    rows.push(ReportRow::skipped(0, "chi", format!("the identity needs odd dimension, set has d = {d}")));
                } else {
                    let lim = self.limit(1)?;
                    let section = self.link_mean(n - 2)?.map(|(m, s)| (0.5 * m, 0.5 * s));
                    let rhs = section.clone().map(|s| (lim.0 + s.0, lim.1.hypot(s.1)));
                    let mut r = row(0, "chi", self.chi(), rhs, "euler_char", "assembly");
                    if let Ok((v, u)) = section {
                        r = r.with_terms(vec![
                            Term { name: "limit_1".into(), value: lim.0, uncertainty: lim.1, route: route.into() },
                            Term { name: "section_chi_mean".into(), value: v, uncertainty: u, route: "section_chi_from_links".into() },
                        ]);
                    }
                    rows.push(r);
                }
            }
            other => return Err(Error::InvalidArgument(format!("`{other}` is not a submanifold identity"))),
        }
        Ok(self.report(theorem, rows))
    }
}

fn row(k: i64, label: &str, lhs: Side, rhs: Side, route_lhs: &str, route_rhs: &str) -> ReportRow {
    match (lhs, rhs) {
        (Ok(l), Ok(r)) => ReportRow::compare(k, label, l, r, route_lhs, route_rhs),
        (Err(reason), _) | (_, Err(reason)) => ReportRow::skipped(k, label, reason),
    }
}

/// The Euler assembly about `x0`, compared term by term with the one about
/// the origin.
pub fn verify_base_point(set: &SetDescriptor, x0: &DVector<f64>, cfg: &VerifyConfig) -> Result<TheoremReport> {
    let n = set.ambient_dim;
    if x0.len() != n || x0.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(format!("base point must be a finite vector of R^{n}")));
    }
    if x0.norm() > MAX_BASE_POINT_NORM {
        return Err(Error::InvalidArgument(format!("base point norm {} exceeds {MAX_BASE_POINT_NORM}", x0.norm())));
    }
    let mut origin = Verifier::new(set, cfg);
    let mut shifted = Verifier::at(set, cfg, x0.clone());
    let orders: Vec<usize> = (1..=n).collect();
    let mut rows = vec![shifted.euler_row(-1, "chi_at_base_point", &orders, true)?];
    let (a, b) = (shifted.lambda0_direct()?, origin.lambda0_direct()?);
    rows.push(row(0, "lambda0", a.side, b.side, a.route, b.route));
    let route = shifted.limit_route();
    for k in 1..=n {
        rows.push(row(k as i64, &format!("k={k}"), Ok(shifted.limit(k)?), Ok(origin.limit(k)?), route, route));
    }
    let mut report = TheoremReport::new(TheoremId::BasePoint, &set.name, cfg.seed, cfg.n_samples, &cfg.radii, rows);
    report.base_point = Some(x0.as_slice().to_vec());
    Ok(report)
}

fn graph_of(set: &SetDescriptor) -> Option<SphericalGraph> {
    set.as_conic()
}

/// Runs one identity on one set, optionally about a base point.
pub fn verify(set: &SetDescriptor, theorem: TheoremId, cfg: &VerifyConfig, base_point: Option<&DVector<f64>>) -> Result<TheoremReport> {
    let start = Instant::now();
    let mut report = match (theorem, base_point) {
        (TheoremId::BasePoint, Some(x0)) => verify_base_point(set, x0, cfg)?,
        (TheoremId::BasePoint, None) => return Err(Error::InvalidArgument("base_point needs a base point".into())),
        (TheoremId::SphericalGaussBonnet, _) => match graph_of(set) {
            Some(g) => spherical_gauss_bonnet_check(&set.name, &g, cfg.n_samples, cfg.seed)?,
            None => TheoremReport::new(
                theorem,
                &set.name,
                cfg.seed,
                cfg.n_samples,
                &[],
                vec![ReportRow::skipped(0, "chi", "the set is not a cone")],
            ),
        },
        _ => {
            let x0 = base_point.cloned().unwrap_or_else(|| DVector::zeros(set.ambient_dim));
            let mut v = Verifier::at(set, cfg, x0);
            let mut report = match theorem {
                TheoremId::ConicMeasures => v.conic_measures()?,
                TheoremId::GrowthLimits | TheoremId::GrowthLimitsClosed => v.growth_limits(theorem)?,
                TheoremId::TotalCurvature => v.total_curvature()?,
                TheoremId::EulerAssembly => v.euler_assembly()?,
                _ => v.smooth_theorem(theorem)?,
            };
            report.base_point = base_point.map(|x| x.as_slice().to_vec());
            report
        }
    };
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
