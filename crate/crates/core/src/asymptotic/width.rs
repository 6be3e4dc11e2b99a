//! Widths of asymptotic directions, strips of bounding geodesics, the gauge
//! `t - u(c(t))` along rays, and the crossing and periodic-approach runs.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::deviation::BoundingGeodesics;
use super::horofunction::HorofunctionField;
use crate::engine::{
    detect_crossings, dist_f, distance_to_path, forward_ray, minimize_in_frame, point_at_f_length,
    EngineOptions, FermiTrace, PeriodicMinimizer, PolylinePath, RayApproximation,
};
use crate::group::{GeneratorSet, GroupWord};
use crate::hyperbolic::{dist_g, BoundaryPoint, DiscPoint, FermiFrame};
use crate::metric::FinslerMetric;
use crate::{par, Error, Result};

/// Word length and tolerance of the fixed-direction screen.
pub const FIXED_SCREEN_LEN: usize = 6;
pub const FIXED_SCREEN_TOL: f64 = 1e-4;

/// Arclength window `[start R, end R]` read off rays truncated at
/// `R + margin`. The far end of a truncated ray is pinned to the g-ray; the
/// margin keeps that boundary layer out of the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailWindow {
    pub start: f64,
    pub end: f64,
    pub margin: f64,
}

impl Default for TailWindow {
    fn default() -> Self {
        Self {
            start: 0.5,
            end: 1.0,
            margin: 8.0,
        }
    }
}

impl TailWindow {
    /// Window bounds in F-arclength at radius `radius`.
    pub fn bounds(&self, radius: f64) -> (f64, f64) {
        (self.start * radius, self.end * radius)
    }

    /// Truncation radius of the rays read at radius `radius`.
    pub fn ray_radius(&self, radius: f64) -> f64 {
        radius + self.margin
    }

    fn check(&self) -> Result<()> {
        if !(0.0 <= self.start && self.start < self.end && self.end <= 1.0 && self.margin >= 0.0) {
            return Err(Error::InvalidParameter(
                "window must be a subinterval of [0, 1] with a nonnegative margin",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthReport {
    pub xi: BoundaryPoint,
    pub radius: f64,
    pub window: TailWindow,
    /// `(i, j, min_t d_g(c_i, c_j(t)))` for ordered basepoint pairs.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Largest pair separation: the finite-radius estimate of `w_+`.
    pub wplus_lower: f64,
    /// Gap of bounding geodesics, when computed.
    pub w0_estimate: Option<f64>,
    /// Witness when `xi` is a fixed direction of a short word.
    pub fixed_direction: Option<GroupWord>,
    /// Rays whose nested-radius check failed.
    pub unstable_rays: usize,
}

/// `samples + 1` points of `c` evenly spaced in F-arclength over `span`.
fn sample_span(
    metric: &FinslerMetric,
    c: &PolylinePath,
    span: (f64, f64),
    samples: usize,
) -> Result<Vec<DiscPoint>> {
    (0..=samples)
        .map(|k| {
            point_at_f_length(
                metric,
                c,
                span.0 + (span.1 - span.0) * k as f64 / samples.max(1) as f64,
            )
        })
        .collect()
}

/// Moves a point sampled on a chord of `trace`'s path onto the cubic through
/// its vertices, at the same Fermi abscissa.
fn onto_trace(trace: &FermiTrace, p: &DiscPoint) -> Result<DiscPoint> {
    let (s, _) = trace.frame().coords(p);
    match trace.y_cubic(s) {
        Some((y, _)) => trace.frame().disc_point(s, y),
        None => Ok(*p),
    }
}

/// g-distance from `p` to the cubic through the vertices of `trace`, to
/// second order in the offset: with `D` the Fermi offset from the curve and
/// `y'` its slope, `d = |D| cosh y / sqrt(cosh^2 y + y'^2)`.
fn trace_distance(trace: &FermiTrace, p: &DiscPoint) -> Option<f64> {
    let (s, y) = trace.frame().coords(p);
    let (yc, slope) = trace.y_cubic(s)?;
    let c = yc.cosh();
    Some((y - yc).abs() * c / (c * c + slope * slope).sqrt())
}

/// Minimum over F-arclengths `t` in `span` of the g-distance from `c(t)` to
/// the trace of `other`.
///
/// Engine paths are graphs over a Fermi frame, and both sides are read off
/// the cubic through their vertices. The chords of the polylines sag by
/// `|y''| h^2 / 8`, which would otherwise floor the estimate once rays
/// converge.
pub fn window_separation(
    metric: &FinslerMetric,
    c: &PolylinePath,
    other: &PolylinePath,
    span: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let mut points = sample_span(metric, c, span, samples)?;
    if let Some(trace) = c.trace() {
        points = points
            .iter()
            .map(|p| onto_trace(trace, p))
            .collect::<Result<_>>()?;
    }
    let chords = distance_to_path(other, &points)?;
    Ok(points
        .iter()
        .zip(chords)
        .map(|(p, chord)| {
            other
                .trace()
                .and_then(|t| trace_distance(t, p))
                .unwrap_or(chord)
        })
        .fold(f64::INFINITY, f64::min))
}

/// Finite-radius estimate of `w_+(xi)`: forward rays from every basepoint,
/// and for each ordered pair the smallest separation over the window.
pub fn width_wplus(
    metric: &FinslerMetric,
    gens: &GeneratorSet,
    xi: &BoundaryPoint,
    basepoints: &[DiscPoint],
    radius: f64,
    window: TailWindow,
    opts: &EngineOptions,
) -> Result<WidthReport> {
    if basepoints.len() < 2 {
        return Err(Error::InvalidParameter(
            "width estimates need two basepoints",
        ));
    }
    window.check()?;
    let fixed_direction = gens.is_fixed_direction(xi, FIXED_SCREEN_LEN, FIXED_SCREEN_TOL)?;
    let rays = par::map(basepoints, |b| {
        forward_ray(metric, b, xi, window.ray_radius(radius), opts)
    })
    .into_iter()
    .collect::<Result<Vec<RayApproximation>>>()?;
    let unstable_rays = rays
        .iter()
        .filter(|r| r.nested.is_some_and(|n| !n.stable))
        .count();
    let span = window.bounds(radius);
    let mut pairs = Vec::new();
    for i in 0..rays.len() {
        for j in 0..rays.len() {
            if i != j {
                let sep = window_separation(metric, &rays[j].path, &rays[i].path, span, 64)?;
                pairs.push((i, j, sep));
            }
        }
    }
    let wplus_lower = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(WidthReport {
        xi: *xi,
        radius,
        window,
        pairs,
        wplus_lower,
        w0_estimate: None,
        fixed_direction,
        unstable_rays,
    })
}

/// Index of the candidate whose strip contains `x`.
pub fn strip_classify(x: &DiscPoint, strips: &[BoundingGeodesics], tol: f64) -> Result<usize> {
    let hits: Vec<usize> = (0..strips.len())
        .filter(|&i| strips[i].contains(x, tol))
        .collect();
    match hits.as_slice() {
        [] => Err(Error::NotFound),
        [i] => Ok(*i),
        [a, b, ..] => Err(Error::StripOverlap {
            first: *a,
            second: *b,
        }),
    }
}

/// Largest depth by which a boundary point of one strip lies inside another,
/// over the middle halves of the strips. Non-positive means disjoint.
pub fn strip_overlap(strips: &[BoundingGeodesics], samples: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (i, a) in strips.iter().enumerate() {
        for (j, b) in strips.iter().enumerate() {
            if i == j {
                continue;
            }
            for path in [&a.c0, &a.c1] {
                let Some(trace) = path.trace() else { continue };
                for k in 0..=samples {
                    let s = -0.5 * a.radius + a.radius * k as f64 / samples.max(1) as f64;
                    let Ok(p) = trace.frame().disc_point(s, trace.y_at(s)) else {
                        continue;
                    };
                    let (sb, y) = b.geodesic.frame().coords(&p);
                    if sb.abs() > 0.5 * b.radius {
                        continue;
                    }
                    let (y0, y1) = b.offsets_at(sb);
                    worst = worst.max((y - y0).min(y1 - y));
                }
            }
        }
    }
    worst
}

/// `h(t) = t - u(c(t))` along a ray, with the bound implied by a calibrated
/// reference ray of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReport {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    /// Largest decrease `h(t_k) - h(t_{k+1})`; non-positive when monotone.
    pub max_decrease: f64,
    /// `d_F(c(0), c0(0)) + 2 c_F B - u(c0(0))`, with `B` the largest
    /// g-distance of the sampled ray points to the reference ray.
    pub bound: f64,
    pub h_max: f64,
}

/// Gauge of `ray` against the Busemann-type field `u` whose calibrated ray
/// is `reference`, at `samples + 1` arclengths up to `t_max`.
#[allow(clippy::too_many_arguments)]
pub fn gauge_report(
    metric: &FinslerMetric,
    u: &HorofunctionField,
    reference: &RayApproximation,
    ray: &RayApproximation,
    c_f: f64,
    t_max: f64,
    samples: usize,
    opts: &EngineOptions,
) -> Result<GaugeReport> {
    let t: Vec<f64> = (0..=samples)
        .map(|k| t_max * k as f64 / samples.max(1) as f64)
        .collect();
    let points = t
        .iter()
        .map(|&tk| point_at_f_length(metric, &ray.path, tk))
        .collect::<Result<Vec<_>>>()?;
    let values = par::map(&points, |p| u.u_at(metric, p, opts))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let h: Vec<f64> = t.iter().zip(&values).map(|(tk, uk)| tk - uk).collect();
    let max_decrease = h
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let b = distance_to_path(&reference.path, &points)?
        .into_iter()
        .fold(0.0, f64::max);
    let start_gap = dist_f(metric, ray.path.first(), reference.path.first(), opts)?;
    let u_ref0 = u.u_at(metric, reference.path.first(), opts)?;
    Ok(GaugeReport {
        h_max: h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        t,
        h,
        max_decrease,
        bound: start_gap + 2.0 * c_f * b - u_ref0,
    })
}

/// Outcome of pairing the minimal ray with a locally minimal competitor that
/// leaves the basepoint at a different angle.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossingTrial {
    /// The competitor is longer than the ray: it is not a ray.
    Rejected { excess: f64 },
    /// The competitor converged onto the ray's trace.
    Collapsed,
    /// Both are minimal and distinct; crossings beyond `delta` listed.
    Distinct {
        crossings: usize,
        min_separation: f64,
    },
}

impl CrossingTrial {
    pub fn passes(&self) -> bool {
        !matches!(self, Self::Distinct { crossings, .. } if *crossings > 0)
    }
}

/// Ray from `x` to `xi` against a competitor started from the bump
/// `offset sin(pi s / R)` off the g-ray. The competitor counts as minimal
/// when its length is within `length_tol` of the ray's.
#[allow(clippy::too_many_arguments)]
pub fn crossing_trial(
    metric: &FinslerMetric,
    x: &DiscPoint,
    xi: &BoundaryPoint,
    radius: f64,
    offset: f64,
    delta: f64,
    length_tol: f64,
    opts: &EngineOptions,
) -> Result<CrossingTrial> {
    let mut inner = opts.clone();
    inner.nested_check = false;
    let ray = forward_ray(metric, x, xi, radius, &inner)?;
    let frame = FermiFrame::ray(x, xi);
    let bump = |s: f64| offset * (core::f64::consts::PI * s / radius).sin();
    let mut single = inner.clone();
    single.multistart = false;
    let other = minimize_in_frame(metric, &frame, 0.0, radius, &bump, &single)?;
    let (l0, l1) = (
        ray.path.flags().extrapolated_length,
        other.flags().extrapolated_length,
    );
    if l1 - l0 > length_tol {
        return Ok(CrossingTrial::Rejected { excess: l1 - l0 });
    }
    let report = detect_crossings(&ray.path, &other, delta)?;
    if report.overlap || report.min_separation.is_nan() {
        return Ok(CrossingTrial::Collapsed);
    }
    Ok(CrossingTrial::Distinct {
        crossings: report.crossings.len(),
        min_separation: report.min_separation,
    })
}

/// Largest g-distance over the F-arclength `span` of a ray from the lifts
/// `tau^k` of a periodic minimizer's fundamental path.
pub fn periodic_approach(
    metric: &FinslerMetric,
    ray: &RayApproximation,
    periodic: &PeriodicMinimizer,
    span: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let reach = span.1 + dist_g(&DiscPoint::origin(), &ray.base) + 1.0;
    let orbit = orbit_path(metric, periodic, reach)?;
    let points = sample_span(metric, &ray.path, span, samples)?;
    Ok(distance_to_path(&orbit, &points)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Lifts `tau^k` of the fundamental path joined into one polyline, covering
/// the axis out to g-distance about `reach` on both sides of `x*`.
pub fn orbit_path(
    metric: &FinslerMetric,
    periodic: &PeriodicMinimizer,
    reach: f64,
) -> Result<PolylinePath> {
    let ell = periodic.translation_length();
    let k = ((reach + 2.0) / ell).ceil() as i32;
    let inv = periodic.map.inverse();
    let mut start = periodic.map;
    start = inv * start;
    for _ in 0..k {
        start = inv * start;
    }
    // `start` is tau^-k.
    let mut vertices = Vec::new();
    let mut m = start;
    for _ in -k..=k {
        let lift = periodic
            .path
            .vertices()
            .iter()
            .map(|v| m.apply(v))
            .collect::<Result<Vec<_>>>()?;
        let skip = usize::from(!vertices.is_empty());
        vertices.extend(lift.into_iter().skip(skip));
        m = periodic.map * m;
    }
    PolylinePath::from_vertices(metric, vertices)
}
