//! Variational computation of F-minimal segments, rays, minimal geodesics
//! and periodic minimizers.
//!
//! A path is represented as a graph `y(s)` over a reference g-geodesic in
//! Fermi coordinates, sampled at uniform `s` and joined by g-geodesic edges.
//! Its discrete length (trapezoidal in the conformal factor, exact for the
//! Randers one-form) is minimized by Newton's method on the tridiagonal
//! Hessian, and the sampling is doubled until the Richardson-extrapolated
//! length settles.

mod crossings;
mod solver;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::group::{AxisData, GeneratorSet, GroupWord};
use crate::hyperbolic::{
    dist_g, BoundaryPoint, DiscPoint, FermiFrame, HyperbolicGeodesic, MobiusMap, R_MAX,
};
use crate::metric::{FinslerMetric, MetricKind};
use crate::{Error, Result};

pub use crossings::{detect_crossings, distance_to_path, Crossing, CrossingReport};

/// Numerical controls shared by all minimizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    /// Edges of the first discretization (a power of two).
    pub n_initial: usize,
    /// Refinement stops with a convergence error beyond this many edges.
    pub n_max: usize,
    /// Refinement stops once the extrapolated length changes by less than
    /// `rel_tol` times the length.
    pub rel_tol: f64,
    /// Sup-norm of the discrete gradient accepted as stationary.
    pub grad_tol: f64,
    pub max_newton: usize,
    /// Amplitude of the displaced initial guesses.
    pub offset: f64,
    pub multistart: bool,
    /// Sup-distance in `y` above which two local minimizers count as distinct.
    pub distinct_tol: f64,
    /// Allowed disagreement of nested truncations on their shared part.
    pub stability_tol: f64,
    /// Run the half-length companion minimization for rays and geodesics.
    pub nested_check: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            n_initial: 32,
            n_max: 16384,
            rel_tol: 1e-7,
            grad_tol: 1e-8,
            max_newton: 100,
            offset: 1.0,
            multistart: true,
            distinct_tol: 1e-3,
            stability_tol: 1e-3,
            nested_check: true,
        }
    }
}

impl EngineOptions {
    fn validate(&self) -> Result<()> {
        if !self.n_initial.is_power_of_two() || self.n_initial < 4 {
            return Err(Error::InvalidParameter(
                "n_initial must be a power of two, at least 4",
            ));
        }
        if self.n_max < self.n_initial {
            return Err(Error::InvalidParameter("n_max must be at least n_initial"));
        }
        let positive = [
            self.rel_tol,
            self.grad_tol,
            self.distinct_tol,
            self.stability_tol,
        ];
        if positive.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Outcome of the minimization that produced a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFlags {
    /// Number of edges of the final discretization.
    pub refined_to: usize,
    pub converged: bool,
    /// Sup-norm of the discrete gradient at the returned vertices.
    pub residual: f64,
    /// Distinct local minimizers were found by the multistart.
    pub distinct_minimizers: bool,
    /// Richardson estimate of the continuum length from the last two levels.
    pub extrapolated_length: f64,
    /// Change of the extrapolated length at the last refinement.
    pub last_change: f64,
}

/// Fermi-graph description of an engine path.
#[derive(Debug, Clone, PartialEq)]
pub struct FermiTrace {
    frame: FermiFrame,
    s: Vec<f64>,
    y: Vec<f64>,
}

impl FermiTrace {
    pub fn frame(&self) -> &FermiFrame {
        &self.frame
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Offset at `s` by linear interpolation, clamped to the sampled range.
    pub fn y_at(&self, s: f64) -> f64 {
        solver::sample(&self.s, &self.y, s)
    }

    /// Offset and slope at `s` from the cubic through the four nearest
    /// samples; `None` outside the sampled range or with fewer than four.
    /// The samples are uniform in `s`.
    pub fn y_cubic(&self, s: f64) -> Option<(f64, f64)> {
        let n = self.s.len();
        if n < 4 || !(s >= self.s[0] && s <= self.s[n - 1]) {
            return None;
        }
        let h = (self.s[n - 1] - self.s[0]) / (n - 1) as f64;
        let x = (s - self.s[0]) / h;
        let first = ((x.floor() as usize).saturating_sub(1)).min(n - 4);
        let t = x - first as f64;
        let y = &self.y[first..first + 4];
        // Lagrange basis on the nodes 0, 1, 2, 3 and its derivative.
        let w = [
            -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
            t * (t - 2.0) * (t - 3.0) / 2.0,
            -t * (t - 1.0) * (t - 3.0) / 2.0,
            t * (t - 1.0) * (t - 2.0) / 6.0,
        ];
        let dw = [
            -((t - 2.0) * (t - 3.0) + (t - 1.0) * (t - 3.0) + (t - 1.0) * (t - 2.0)) / 6.0,
            ((t - 2.0) * (t - 3.0) + t * (t - 3.0) + t * (t - 2.0)) / 2.0,
            -((t - 1.0) * (t - 3.0) + t * (t - 3.0) + t * (t - 1.0)) / 2.0,
            ((t - 1.0) * (t - 2.0) + t * (t - 2.0) + t * (t - 1.0)) / 6.0,
        ];
        let value = (0..4).map(|i| w[i] * y[i]).sum();
        let slope = (0..4).map(|i| dw[i] * y[i]).sum::<f64>() / h;
        Some((value, slope))
    }
}

/// A polyline with g-geodesic edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylinePath {
    vertices: Vec<DiscPoint>,
    f_length: f64,
    metric_id: String,
    flags: PathFlags,
    trace: Option<FermiTrace>,
}

impl PolylinePath {
    /// Wraps arbitrary vertices, measuring their F-length.
    pub fn from_vertices(metric: &FinslerMetric, vertices: Vec<DiscPoint>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one vertex"));
        }
        let f_length = length_of(metric, &vertices)?;
        Ok(Self {
            flags: PathFlags {
                refined_to: vertices.len() - 1,
                converged: false,
                residual: f64::NAN,
                distinct_minimizers: false,
                extrapolated_length: f_length,
                last_change: f64::NAN,
            },
            vertices,
            f_length,
            metric_id: metric.id(),
            trace: None,
        })
    }

    pub fn vertices(&self) -> &[DiscPoint] {
        &self.vertices
    }

    pub fn first(&self) -> &DiscPoint {
        &self.vertices[0]
    }

    pub fn last(&self) -> &DiscPoint {
        &self.vertices[self.vertices.len() - 1]
    }

    pub fn f_length(&self) -> f64 {
        self.f_length
    }

    pub fn metric_id(&self) -> &str {
        &self.metric_id
    }

    pub fn flags(&self) -> &PathFlags {
        &self.flags
    }

    pub fn trace(&self) -> Option<&FermiTrace> {
        self.trace.as_ref()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| dist_g(&w[0], &w[1]))
            .collect()
    }

    pub fn g_length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Cumulative g-length at each vertex.
    pub fn cumulative_g_length(&self) -> Vec<f64> {
        cumulative(&self.edge_lengths())
    }

    /// The point at cumulative g-length `t` (clamped to the path).
    pub fn point_at_g_length(&self, t: f64) -> Result<DiscPoint> {
        point_along(&self.vertices, &self.cumulative_g_length(), t)
    }

    /// The same vertices traversed backwards, measured in `metric`.
    pub fn reversed(&self, metric: &FinslerMetric) -> Result<Self> {
        let mut v = self.vertices.clone();
        v.reverse();
        Self::from_vertices(metric, v)
    }
}

fn cumulative(lengths: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(lengths.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for l in lengths {
        acc += l;
        out.push(acc);
    }
    out
}

/// Point at parameter `t` of a polyline whose vertices sit at parameters
/// `knots`, moving along g-geodesic edges in proportion to the parameter.
fn point_along(vertices: &[DiscPoint], knots: &[f64], t: f64) -> Result<DiscPoint> {
    let n = vertices.len();
    if n == 1 || t <= knots[0] {
        return Ok(vertices[0]);
    }
    if t >= knots[n - 1] {
        return Ok(vertices[n - 1]);
    }
    let k = knots.partition_point(|&v| v <= t).clamp(1, n - 1);
    let (a, b) = (&vertices[k - 1], &vertices[k]);
    let span = knots[k] - knots[k - 1];
    if span <= 0.0 || a == b {
        return Ok(*a);
    }
    let (frame, len) = FermiFrame::segment(a, b)?;
    frame.disc_point(len * (t - knots[k - 1]) / span, 0.0)
}

/// Discrete F-length: trapezoidal weights for the conformal factor, the
/// exact integral `f(end) - f(start)` for the Randers one-form.
fn length_of(metric: &FinslerMetric, vertices: &[DiscPoint]) -> Result<f64> {
    let d: Vec<f64> = vertices.windows(2).map(|w| dist_g(&w[0], &w[1])).collect();
    match metric.kind() {
        MetricKind::Hyperbolic => Ok(d.iter().sum()),
        MetricKind::Conformal(field) => {
            let f = vertices
                .iter()
                .map(|p| field.value(p))
                .collect::<Result<Vec<_>>>()?;
            Ok(d.iter()
                .enumerate()
                .map(|(i, di)| 0.5 * (f[i] + f[i + 1]) * di)
                .sum())
        }
        MetricKind::RandersExact { field, epsilon } => {
            let g: f64 = d.iter().sum();
            if vertices.len() < 2 {
                return Ok(0.0);
            }
            let f0 = field.value(&vertices[0])?;
            let f1 = field.value(&vertices[vertices.len() - 1])?;
            Ok(g + epsilon * (f1 - f0))
        }
    }
}

/// F-length of a path by trapezoidal quadrature along its edges.
pub fn path_length_f(metric: &FinslerMetric, path: &PolylinePath) -> Result<f64> {
    length_of(metric, path.vertices())
}

/// F-length accumulated up to each vertex.
pub fn cumulative_f_length(metric: &FinslerMetric, path: &PolylinePath) -> Result<Vec<f64>> {
    let v = path.vertices();
    let d = path.edge_lengths();
    match metric.kind() {
        MetricKind::Hyperbolic => Ok(cumulative(&d)),
        MetricKind::Conformal(field) => {
            let f = v
                .iter()
                .map(|p| field.value(p))
                .collect::<Result<Vec<_>>>()?;
            let w: Vec<f64> = d
                .iter()
                .enumerate()
                .map(|(i, di)| 0.5 * (f[i] + f[i + 1]) * di)
                .collect();
            Ok(cumulative(&w))
        }
        MetricKind::RandersExact { field, epsilon } => {
            let f0 = field.value(&v[0])?;
            let mut out = cumulative(&d);
            for (c, p) in out.iter_mut().zip(v) {
                *c += epsilon * (field.value(p)? - f0);
            }
            Ok(out)
        }
    }
}

/// Unit g-tangent in the chart at `m(0)` of the geodesic `t -> m(T(t)(0))`.
fn chart_tangent(m: &MobiusMap) -> Complex64 {
    let a = m.a().conj();
    Complex64::new(0.5, 0.0) / (a * a)
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// F-length by five-point Gauss-Legendre quadrature of `F(c, c')` on each
/// geodesic edge, using only pointwise evaluation of the metric.
pub fn path_length_gauss(metric: &FinslerMetric, path: &PolylinePath) -> Result<f64> {
    let mut total = 0.0;
    for w in path.vertices().windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (frame, len) = FermiFrame::segment(&w[0], &w[1])?;
        for (x, wt) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            let t = 0.5 * len * (1.0 + x);
            let m = *frame.map() * MobiusMap::translation(t);
            let p = m.apply(&DiscPoint::origin())?;
            total += 0.5 * len * wt * metric.eval(&p, chart_tangent(&m))?;
        }
    }
    Ok(total)
}

/// F-length along one geodesic edge, measured exactly for the hyperbolic
/// and Randers metrics and by Gauss-Legendre quadrature for the conformal one.
struct EdgeMeasure<'a> {
    metric: &'a FinslerMetric,
    frame: FermiFrame,
    len: f64,
    f_start: f64,
}

impl<'a> EdgeMeasure<'a> {
    fn new(metric: &'a FinslerMetric, a: &DiscPoint, b: &DiscPoint) -> Result<Option<Self>> {
        if a == b || dist_g(a, b) == 0.0 {
            return Ok(None);
        }
        let (frame, len) = FermiFrame::segment(a, b)?;
        let f_start = match metric.kind() {
            MetricKind::RandersExact { field, .. } => field.value(a)?,
            _ => 0.0,
        };
        Ok(Some(Self {
            metric,
            frame,
            len,
            f_start,
        }))
    }

    fn map_at(&self, u: f64) -> MobiusMap {
        *self.frame.map() * MobiusMap::translation(u)
    }

    /// `F(c(u), c'(u))` for the unit-speed edge `c`.
    fn speed(&self, u: f64) -> Result<f64> {
        let m = self.map_at(u);
        self.metric
            .eval(&m.apply(&DiscPoint::origin())?, chart_tangent(&m))
    }

    /// F-length of the edge from its start to `u`.
    fn length_to(&self, u: f64) -> Result<f64> {
        match self.metric.kind() {
            MetricKind::Hyperbolic => Ok(u),
            MetricKind::RandersExact { field, epsilon } => {
                let p = self.map_at(u).apply(&DiscPoint::origin())?;
                Ok(u + epsilon * (field.value(&p)? - self.f_start))
            }
            MetricKind::Conformal(_) => {
                let mut total = 0.0;
                for (x, w) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
                    total += 0.5 * u * w * self.speed(0.5 * u * (1.0 + x))?;
                }
                Ok(total)
            }
        }
    }

    /// Solves `length_to(u) = target` by safeguarded Newton iteration.
    fn invert(&self, target: f64, total: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, self.len);
        let mut u = self.len * (target / total).clamp(0.0, 1.0);
        for _ in 0..60 {
            let r = self.length_to(u)? - target;
            if r.abs() <= 1e-14 * (1.0 + total.abs()) {
                break;
            }
            if r > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let next = u - r / self.speed(u)?;
            u = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * self.len {
                break;
            }
        }
        Ok(u)
    }
}

/// Cumulative F-length at the vertices with each edge measured exactly
/// (conformal edges to quadrature accuracy).
fn exact_knots<'a>(
    metric: &'a FinslerMetric,
    path: &PolylinePath,
) -> Result<(Vec<f64>, Vec<Option<EdgeMeasure<'a>>>)> {
    let mut knots = Vec::with_capacity(path.vertices().len());
    let mut edges = Vec::with_capacity(path.vertices().len());
    let mut acc = 0.0;
    knots.push(0.0);
    for w in path.vertices().windows(2) {
        let e = EdgeMeasure::new(metric, &w[0], &w[1])?;
        if let Some(e) = &e {
            acc += e.length_to(e.len)?;
        }
        knots.push(acc);
        edges.push(e);
    }
    Ok((knots, edges))
}

fn locate_f_length(
    path: &PolylinePath,
    knots: &[f64],
    edges: &[Option<EdgeMeasure<'_>>],
    t: f64,
) -> Result<DiscPoint> {
    let v = path.vertices();
    let n = v.len();
    if n == 1 || t <= 0.0 {
        return Ok(v[0]);
    }
    if t >= knots[n - 1] {
        return Ok(v[n - 1]);
    }
    let k = knots.partition_point(|&x| x <= t).clamp(1, n - 1);
    match &edges[k - 1] {
        None => Ok(v[k - 1]),
        Some(e) => {
            let u = e.invert(t - knots[k - 1], knots[k] - knots[k - 1])?;
            e.map_at(u).apply(&DiscPoint::origin())
        }
    }
}

/// Point at F-length `t` along the path.
pub fn point_at_f_length(metric: &FinslerMetric, path: &PolylinePath, t: f64) -> Result<DiscPoint> {
    let (knots, edges) = exact_knots(metric, path)?;
    locate_f_length(path, &knots, &edges, t)
}

/// Resamples the path at `count + 1` points equally spaced in F-length, so
/// that the resampled curve has unit F-speed.
pub fn reparameterize_by_f_length(
    metric: &FinslerMetric,
    path: &PolylinePath,
    count: usize,
) -> Result<Vec<(f64, DiscPoint)>> {
    let (knots, edges) = exact_knots(metric, path)?;
    let total = knots[knots.len() - 1];
    (0..=count)
        .map(|k| {
            let t = total * k as f64 / count.max(1) as f64;
            Ok((t, locate_f_length(path, &knots, &edges, t)?))
        })
        .collect()
}

/// A converged discrete minimizer over one frame.
struct Run {
    s: Vec<f64>,
    y: Vec<f64>,
    length: f64,
    extrapolated: f64,
    change: f64,
    residual: f64,
    converged: bool,
}

fn grid(s0: f64, ell: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| s0 + ell * i as f64 / n as f64).collect()
}

/// Exact contribution of the Randers one-form between the path ends.
fn exact_term(
    metric: &FinslerMetric,
    frame: &FermiFrame,
    s: &[f64],
    y: &[f64],
    periodic: bool,
) -> Result<f64> {
    match metric.kind() {
        MetricKind::RandersExact { field, epsilon } if !periodic => {
            let n = s.len() - 1;
            let a = field.value(&frame.disc_point(s[0], y[0])?)?;
            let b = field.value(&frame.disc_point(s[n], y[n])?)?;
            Ok(epsilon * (b - a))
        }
        _ => Ok(0.0),
    }
}

/// Newton at a fixed resolution.
fn solve_level(
    metric: &FinslerMetric,
    frame: &FermiFrame,
    s: Vec<f64>,
    y: Vec<f64>,
    periodic: bool,
    opts: &EngineOptions,
) -> Result<(Vec<f64>, solver::NewtonResult)> {
    let problem = solver::GraphProblem::new(metric, *frame, s, periodic);
    let res = solver::newton(&problem, y, opts.grad_tol, opts.max_newton)?;
    Ok((problem.s, res))
}

/// Refines a coarse stationary point until the extrapolated length settles.
fn refine_run(
    metric: &FinslerMetric,
    frame: &FermiFrame,
    s: Vec<f64>,
    first: solver::NewtonResult,
    periodic: bool,
    opts: &EngineOptions,
) -> Result<Run> {
    let extra = exact_term(metric, frame, &s, &first.y, periodic)?;
    let mut s = s;
    let mut res = first;
    let mut lengths = vec![res.energy + extra];
    let mut estimates: Vec<f64> = Vec::new();
    loop {
        let n = s.len() - 1;
        let len = lengths[lengths.len() - 1];
        let (change, estimate) = if lengths.len() >= 2 {
            let prev = lengths[lengths.len() - 2];
            let est = (4.0 * len - prev) / 3.0;
            let raw = (len - prev).abs();
            let ext = estimates.last().map_or(f64::INFINITY, |e| (est - e).abs());
            estimates.push(est);
            (raw.min(ext), est)
        } else {
            (f64::INFINITY, len)
        };
        if (res.converged || res.stalled) && change <= opts.rel_tol * estimate.abs().max(1e-300) {
            return Ok(Run {
                s,
                y: res.y,
                length: len,
                extrapolated: estimate,
                change,
                residual: res.grad_norm,
                converged: true,
            });
        }
        if 2 * n > opts.n_max {
            return Err(Error::Convergence {
                n,
                change,
                gradient: res.grad_norm,
            });
        }
        let y = solver::refine(&res.y, periodic);
        let fine = grid(s[0], s[n] - s[0], 2 * n);
        let (fine, next) = solve_level(metric, frame, fine, y, periodic, opts)?;
        s = fine;
        res = next;
        lengths.push(res.energy + extra);
    }
}

/// Minimizes over graphs on `frame` with `s` in `[s0, s0 + ell]`, from the
/// given initial shapes. Returns the selected run and whether distinct local
/// minimizers appeared.
fn minimize_graph(
    metric: &FinslerMetric,
    frame: &FermiFrame,
    s0: f64,
    ell: f64,
    periodic: bool,
    starts: &[&dyn Fn(f64) -> f64],
    opts: &EngineOptions,
) -> Result<(Run, bool)> {
    opts.validate()?;
    let n = opts.n_initial;
    let s = grid(s0, ell, n);
    // Coarse stationary points from every start.
    let mut coarse: Vec<solver::NewtonResult> = Vec::new();
    for start in starts {
        let mut y: Vec<f64> = s.iter().map(|&si| start(si)).collect();
        if periodic {
            y[n] = y[0];
        } else {
            y[0] = 0.0;
            y[n] = 0.0;
        }
        let (_, res) = solve_level(metric, frame, s.clone(), y, periodic, opts)?;
        let seen = coarse
            .iter()
            .any(|c| sup_diff(&c.y, &res.y) <= opts.distinct_tol);
        if !seen {
            coarse.push(res);
        }
    }
    let distinct = coarse.len() > 1;
    let mut runs = Vec::with_capacity(coarse.len());
    for c in coarse {
        runs.push(refine_run(metric, frame, s.clone(), c, periodic, opts)?);
    }
    // Shortest, ties broken towards the leftmost midpoint.
    let mut best = 0;
    for k in 1..runs.len() {
        let (a, b) = (&runs[best], &runs[k]);
        let tie =
            (a.extrapolated - b.extrapolated).abs() <= 10.0 * opts.rel_tol * a.extrapolated.abs();
        let mid = |r: &Run| r.y[r.y.len() / 2];
        if (tie && mid(b) > mid(a)) || (!tie && b.extrapolated < a.extrapolated) {
            best = k;
        }
    }
    let run = runs.swap_remove(best);
    Ok((run, distinct))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn build_path(
    metric: &FinslerMetric,
    frame: FermiFrame,
    run: Run,
    distinct: bool,
) -> Result<PolylinePath> {
    let vertices = run
        .s
        .iter()
        .zip(&run.y)
        .map(|(&s, &y)| frame.disc_point(s, y))
        .collect::<Result<Vec<_>>>()?;
    let f_length = length_of(metric, &vertices)?;
    Ok(PolylinePath {
        vertices,
        f_length,
        metric_id: metric.id(),
        flags: PathFlags {
            refined_to: run.s.len() - 1,
            converged: run.converged,
            residual: run.residual,
            distinct_minimizers: distinct,
            // The stored discrete length and the recomputed one agree to
            // rounding; shift the estimate consistently.
            extrapolated_length: run.extrapolated + (f_length - run.length),
            last_change: run.change,
        },
        trace: Some(FermiTrace {
            frame,
            s: run.s,
            y: run.y,
        }),
    })
}

/// Minimizes over graphs on `frame` between `s0` and `s1` with `y = 0` at
/// both ends.
fn segment_in_frame(
    metric: &FinslerMetric,
    frame: FermiFrame,
    s0: f64,
    s1: f64,
    opts: &EngineOptions,
) -> Result<PolylinePath> {
    let ell = s1 - s0;
    let h = opts.offset;
    let bump = move |s: f64| (PI * (s - s0) / ell).sin();
    let zero = |_: f64| 0.0;
    let up = move |s: f64| h * bump(s);
    let down = move |s: f64| -h * bump(s);
    let starts: Vec<&dyn Fn(f64) -> f64> = if opts.multistart {
        vec![&zero, &up, &down]
    } else {
        vec![&zero]
    };
    let (run, distinct) = minimize_graph(metric, &frame, s0, ell, false, &starts, opts)?;
    build_path(metric, frame, run, distinct)
}

/// Minimizes over graphs on `frame` between `s0` and `s1`, with `y = 0` at
/// both ends, from the single initial shape `guess`. Used for continuation
/// from a nearby solution.
pub fn minimize_in_frame(
    metric: &FinslerMetric,
    frame: &FermiFrame,
    s0: f64,
    s1: f64,
    guess: &dyn Fn(f64) -> f64,
    opts: &EngineOptions,
) -> Result<PolylinePath> {
    if !(s1 > s0) {
        return Err(Error::InvalidParameter("empty Fermi window"));
    }
    let (run, _) = minimize_graph(metric, frame, s0, s1 - s0, false, &[guess], opts)?;
    build_path(metric, *frame, run, false)
}

/// F-minimal polyline from `x` to `y`.
pub fn minimize_segment(
    metric: &FinslerMetric,
    x: &DiscPoint,
    y: &DiscPoint,
    opts: &EngineOptions,
) -> Result<PolylinePath> {
    let d = dist_g(x, y);
    if d > 2.0 * R_MAX {
        return Err(Error::InvalidParameter(
            "endpoints farther apart than 2 R_MAX",
        ));
    }
    if d == 0.0 {
        let mut path = PolylinePath::from_vertices(metric, vec![*x])?;
        path.flags.converged = true;
        path.flags.residual = 0.0;
        path.flags.last_change = 0.0;
        return Ok(path);
    }
    let (frame, ell) = FermiFrame::segment(x, y)?;
    segment_in_frame(metric, frame, 0.0, ell, opts)
}

/// `d_F(x, y)`: the extrapolated length of the minimal polyline.
pub fn dist_f(
    metric: &FinslerMetric,
    x: &DiscPoint,
    y: &DiscPoint,
    opts: &EngineOptions,
) -> Result<f64> {
    Ok(minimize_segment(metric, x, y, opts)?
        .flags
        .extrapolated_length)
}

/// Agreement of a truncation with its half-length companion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedCheck {
    /// Sup of `|y_R - y_{R/2}|` over the shared window.
    pub difference: f64,
    pub stable: bool,
}

/// A truncated F-ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayApproximation {
    pub base: DiscPoint,
    pub target_xi: BoundaryPoint,
    pub radius: f64,
    /// Backward rays run from the far point to `base`.
    pub backward: bool,
    pub path: PolylinePath,
    pub nested: Option<NestedCheck>,
}

fn nested_difference(a: &FermiTrace, b: &FermiTrace, lo: f64, hi: f64) -> f64 {
    let samples = 256;
    (0..=samples)
        .map(|k| {
            let s = lo + (hi - lo) * k as f64 / samples as f64;
            (a.y_at(s) - b.y_at(s)).abs()
        })
        .fold(0.0, f64::max)
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || radius > R_MAX - 2.0 {
        return Err(Error::InvalidParameter(
            "truncation radius must lie in (0, R_MAX - 2]",
        ));
    }
    Ok(())
}

fn ray_impl(
    metric: &FinslerMetric,
    x: &DiscPoint,
    xi: &BoundaryPoint,
    radius: f64,
    backward: bool,
    opts: &EngineOptions,
) -> Result<RayApproximation> {
    check_radius(radius)?;
    let forward = FermiFrame::ray(x, xi);
    // A backward ray is traversed towards x: the frame is turned around so
    // that s runs from -R at the far end to 0 at x.
    let (frame, window) = if backward {
        let f = FermiFrame::from_map(*forward.map() * MobiusMap::rotation(PI));
        (f, (-radius, 0.0))
    } else {
        (forward, (0.0, radius))
    };
    let path = segment_in_frame(metric, frame, window.0, window.1, opts)?;
    let nested = if opts.nested_check {
        let half = if backward {
            segment_in_frame(metric, frame, -0.5 * radius, 0.0, opts)?
        } else {
            segment_in_frame(metric, frame, 0.0, 0.5 * radius, opts)?
        };
        let (lo, hi) = if backward {
            (-0.25 * radius, 0.0)
        } else {
            (0.0, 0.25 * radius)
        };
        let difference = nested_difference(path.trace().unwrap(), half.trace().unwrap(), lo, hi);
        Some(NestedCheck {
            difference,
            stable: difference <= opts.stability_tol,
        })
    } else {
        None
    };
    Ok(RayApproximation {
        base: *x,
        target_xi: *xi,
        radius,
        backward,
        path,
        nested,
    })
}

/// Truncated forward ray from `x` towards `xi`: the minimal segment from `x`
/// to the point at g-distance `radius` along the g-ray to `xi`.
pub fn forward_ray(
    metric: &FinslerMetric,
    x: &DiscPoint,
    xi: &BoundaryPoint,
    radius: f64,
    opts: &EngineOptions,
) -> Result<RayApproximation> {
    ray_impl(metric, x, xi, radius, false, opts)
}

/// Truncated backward ray: the minimal segment into `x` from the point at
/// g-distance `radius` along the g-ray to `xi`.
pub fn backward_ray(
    metric: &FinslerMetric,
    x: &DiscPoint,
    xi: &BoundaryPoint,
    radius: f64,
    opts: &EngineOptions,
) -> Result<RayApproximation> {
    ray_impl(metric, x, xi, radius, true, opts)
}

/// Truncated minimal geodesic with the endpoints of a g-geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalGeodesic {
    pub geodesic: HyperbolicGeodesic,
    pub radius: f64,
    pub path: PolylinePath,
    pub nested: Option<NestedCheck>,
}

/// Minimal segment between `geo(-radius)` and `geo(radius)`.
pub fn minimal_geodesic(
    metric: &FinslerMetric,
    geo: &HyperbolicGeodesic,
    radius: f64,
    opts: &EngineOptions,
) -> Result<MinimalGeodesic> {
    check_radius(radius)?;
    let frame = *geo.frame();
    let path = segment_in_frame(metric, frame, -radius, radius, opts)?;
    let nested = if opts.nested_check {
        let half = segment_in_frame(metric, frame, -0.5 * radius, 0.5 * radius, opts)?;
        let difference = nested_difference(
            path.trace().unwrap(),
            half.trace().unwrap(),
            -0.25 * radius,
            0.25 * radius,
        );
        Some(NestedCheck {
            difference,
            stable: difference <= opts.stability_tol,
        })
    } else {
        None
    };
    Ok(MinimalGeodesic {
        geodesic: *geo,
        radius,
        path,
        nested,
    })
}

/// A shortest closed geodesic in the free homotopy class of a group element,
/// lifted to a fundamental path from `x*` to `tau x*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMinimizer {
    pub word: GroupWord,
    pub map: MobiusMap,
    pub axis: AxisData,
    pub path: PolylinePath,
    /// `l_F(tau)`, extrapolated in the resolution.
    pub period: f64,
    /// `d_g(last vertex, tau(first vertex))`.
    pub endpoint_residual: f64,
}

impl PeriodicMinimizer {
    pub fn translation_length(&self) -> f64 {
        self.axis.translation_length
    }

    /// The discrete period minus the smallest discrete length among `count`
    /// random closed competitors at the same resolution: smooth random
    /// deformations of the minimizer with a randomly shifted basepoint.
    /// Nonnegative values certify the sampled competitors.
    pub fn competitor_gap(&self, metric: &FinslerMetric, count: usize, seed: u64) -> Result<f64> {
        let trace = self
            .path
            .trace()
            .ok_or(Error::InvalidParameter("periodic path without trace"))?;
        let n = trace.s.len() - 1;
        let ell = trace.s[n] - trace.s[0];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let own = solver::GraphProblem::new(metric, trace.frame, trace.s.clone(), true)
            .energy(&trace.y)?;
        let mut best = f64::INFINITY;
        for _ in 0..count {
            let shift = rng.random_range(0.0..ell);
            let lift = rng.random_range(-0.5..0.5);
            let modes: Vec<(f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.random_range(-0.3..0.3),
                        rng.random_range(0.0..core::f64::consts::TAU),
                    )
                })
                .collect();
            let s = grid(trace.s[0] + shift, ell, n);
            let y: Vec<f64> = s
                .iter()
                .map(|&si| {
                    let base = trace.y_at_periodic(si, ell);
                    let phase = core::f64::consts::TAU * (si - trace.s[0]) / ell;
                    base + lift
                        + modes
                            .iter()
                            .enumerate()
                            .map(|(k, (amp, ph))| amp * ((k + 1) as f64 * phase + ph).sin())
                            .sum::<f64>()
                })
                .collect();
            let problem = solver::GraphProblem::new(metric, trace.frame, s, true);
            best = best.min(problem.energy(&y)?);
        }
        Ok(best - own)
    }
}

impl FermiTrace {
    fn y_at_periodic(&self, s: f64, ell: f64) -> f64 {
        let s0 = self.s[0];
        let mut t = (s - s0) % ell;
        if t < 0.0 {
            t += ell;
        }
        self.y_at(s0 + t)
    }
}

/// Minimizes the discrete F-length of closed curves freely homotopic to the
/// closed g-geodesic of `word`: graphs over the axis with `y(s + l) = y(s)`.
pub fn shortest_closed_geodesic(
    metric: &FinslerMetric,
    gens: &GeneratorSet,
    word: &GroupWord,
    opts: &EngineOptions,
) -> Result<PeriodicMinimizer> {
    let axis = gens.axis_of_word(word)?;
    let map = gens.evaluate_word(word);
    let frame = *axis.axis.frame();
    let ell = axis.translation_length;
    let h = opts.offset;
    let zero = |_: f64| 0.0;
    let up = move |_: f64| h;
    let down = move |_: f64| -h;
    let starts: Vec<&dyn Fn(f64) -> f64> = if opts.multistart {
        vec![&zero, &up, &down]
    } else {
        vec![&zero]
    };
    let (run, distinct) = minimize_graph(metric, &frame, 0.0, ell, true, &starts, opts)?;
    let period = run.extrapolated;
    let path = build_path(metric, frame, run, distinct)?;
    let image = map.apply(path.first())?;
    let endpoint_residual = dist_g(path.last(), &image);
    Ok(PeriodicMinimizer {
        word: word.clone(),
        map,
        axis,
        path,
        period,
        endpoint_residual,
    })
}
