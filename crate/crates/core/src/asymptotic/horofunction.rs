//! Horofunctions sampled on polar grids around the origin.
//!
//! A horofunction of direction `xi` is approximated by
//! `u_n(x) = d_F(o, x_n) - d_F(x, x_n)` for a sequence `x_n -> xi`, with the
//! origin as `o`. Fields live on [`PolarGrid`]s, which also provide the cubic
//! interpolation needed to push fields forward by isometries.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::engine::{dist_f, point_at_f_length, EngineOptions, RayApproximation};
use crate::hyperbolic::{dist_g, BoundaryPoint, DiscPoint, FermiFrame, MobiusMap};
use crate::metric::FinslerMetric;
use crate::{par, Error, Result};

/// Disc of hyperbolic radius `radius` about the origin, sampled on rings
/// `spacing` apart with roughly `spacing` between neighbors on each ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub radius: f64,
    pub spacing: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radius: 4.0,
            spacing: 0.25,
        }
    }
}

pub const MAX_GRID_RADIUS: f64 = 8.0;

/// Inner rings get at least this many points, for angular interpolation.
const MIN_RING_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    spec: GridSpec,
    /// Point count of each ring; ring 0 is the origin.
    counts: Vec<usize>,
    /// Index of the first point of each ring.
    offsets: Vec<usize>,
    points: Vec<DiscPoint>,
}

impl PolarGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if !(spec.radius > 0.0 && spec.radius <= MAX_GRID_RADIUS) {
            return Err(Error::InvalidParameter("grid radius must lie in (0, 8]"));
        }
        if !(spec.spacing > 0.0) || spec.spacing > spec.radius {
            return Err(Error::InvalidParameter(
                "grid spacing must lie in (0, radius]",
            ));
        }
        let rings = (spec.radius / spec.spacing).round().max(1.0) as usize;
        let h = spec.radius / rings as f64;
        let spec = GridSpec {
            radius: spec.radius,
            spacing: h,
        };
        let mut counts = vec![1];
        let mut offsets = vec![0];
        let mut points = vec![DiscPoint::origin()];
        for k in 1..=rings {
            let rho = k as f64 * h;
            let m = ((TAU * rho.sinh() / h).round() as usize).max(MIN_RING_POINTS);
            offsets.push(points.len());
            counts.push(m);
            for j in 0..m {
                points.push(DiscPoint::new(TAU * j as f64 / m as f64, rho)?);
            }
        }
        Ok(Self {
            spec,
            counts,
            offsets,
            points,
        })
    }

    /// Spec with the spacing adjusted to divide the radius.
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn points(&self) -> &[DiscPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rings(&self) -> usize {
        self.counts.len() - 1
    }

    /// Index of the `j`-th point of ring `k`.
    pub fn index(&self, k: usize, j: usize) -> usize {
        self.offsets[k] + j % self.counts[k]
    }

    /// Pairs of neighboring grid points: consecutive points on each ring and
    /// each point with the nearest point of the next ring.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 1..self.counts.len() {
            let m = self.counts[k];
            for j in 0..m {
                out.push((self.index(k, j), self.index(k, j + 1)));
                let inner = if k == 1 {
                    0
                } else {
                    let mi = self.counts[k - 1];
                    self.index(
                        k - 1,
                        ((j as f64 * mi as f64 / m as f64).round() as usize) % mi,
                    )
                };
                out.push((inner, self.index(k, j)));
            }
        }
        out
    }

    /// Value on ring `k` (negative rings are reflected through the origin)
    /// at angle `theta`, by periodic Lagrange interpolation.
    fn ring_value(&self, values: &[f64], k: isize, theta: f64) -> f64 {
        if k == 0 {
            return values[0];
        }
        let (k, theta) = if k < 0 {
            ((-k) as usize, theta + PI)
        } else {
            (k as usize, theta)
        };
        let m = self.counts[k] as isize;
        let x = (theta / TAU).rem_turn() * m as f64;
        let j = x.floor() as isize;
        let first = j + 1 - STENCIL as isize / 2;
        let f: [f64; STENCIL] = core::array::from_fn(|i| {
            values[self.offsets[k] + (first + i as isize).rem_euclid(m) as usize]
        });
        lagrange(&f, x - first as f64)
    }

    /// Interpolated value at `p` (Lagrange in both polar directions), with
    /// the difference from linear interpolation as an error indicator.
    pub fn interpolate(&self, values: &[f64], p: &DiscPoint) -> Result<(f64, f64)> {
        if values.len() != self.points.len() {
            return Err(Error::GridMismatch);
        }
        let rho = p.rho();
        if rho > self.spec.radius * (1.0 + 1e-12) {
            return Err(Error::GridCoverage {
                rho,
                radius: self.spec.radius,
            });
        }
        let rings = self.rings() as isize;
        let x = rho / self.spec.spacing;
        let k0 = (x.floor() as isize).min(rings - 1);
        // Rings -rings..=rings are available; the stencil is centered on the
        // bracket [k0, k0 + 1] and shifted inwards at the outer edge.
        let n = STENCIL.min(2 * rings as usize + 1);
        let first = (k0 + 1 - n as isize / 2)
            .min(rings + 1 - n as isize)
            .max(-rings);
        let theta = p.theta();
        let mut f = [0.0; STENCIL];
        for (i, fi) in f.iter_mut().take(n).enumerate() {
            *fi = self.ring_value(values, first + i as isize, theta);
        }
        let value = lagrange(&f[..n], x - first as f64);
        let (a, b) = (f[(k0 - first) as usize], f[(k0 - first + 1) as usize]);
        let linear = a + (x - k0 as f64) * (b - a);
        Ok((value, (value - linear).abs()))
    }
}

/// Interpolation stencil width in each direction.
const STENCIL: usize = 6;

trait RemTurn {
    fn rem_turn(self) -> f64;
}

impl RemTurn for f64 {
    /// Fractional part in [0, 1).
    fn rem_turn(self) -> f64 {
        let r = self - self.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }
}

/// Lagrange polynomial through `(i, f[i])`, evaluated at `t`.
fn lagrange(f: &[f64], t: f64) -> f64 {
    let n = f.len();
    (0..n)
        .map(|i| {
            let w: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (t - j as f64) / (i as f64 - j as f64))
                .product();
            w * f[i]
        })
        .sum()
}

/// How the points `x_n -> xi` are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ApproachSpec {
    /// Points at the given g-distances along the g-ray from `base` to `xi`.
    RayFrom { base: DiscPoint, radii: Vec<f64> },
    /// Points along the g-ray from `base` to `xi` rotated by
    /// `sign * offset / r`, approaching `xi` from one side.
    OneSided {
        base: DiscPoint,
        radii: Vec<f64>,
        sign: f64,
        offset: f64,
    },
    /// Explicit points.
    Points(Vec<DiscPoint>),
}

impl ApproachSpec {
    /// Radii 4, 6, ..., 16 along the g-ray from the origin.
    pub fn default_ray() -> Self {
        Self::RayFrom {
            base: DiscPoint::origin(),
            radii: (2..=8).map(|k| 2.0 * k as f64).collect(),
        }
    }

    pub fn points(&self, xi: &BoundaryPoint) -> Result<Vec<DiscPoint>> {
        match self {
            Self::RayFrom { base, radii } => {
                let frame = FermiFrame::ray(base, xi);
                radii.iter().map(|&r| frame.disc_point(r, 0.0)).collect()
            }
            Self::OneSided {
                base,
                radii,
                sign,
                offset,
            } => radii
                .iter()
                .map(|&r| FermiFrame::ray(base, &xi.rotated(sign * offset / r)).disc_point(r, 0.0))
                .collect(),
            Self::Points(p) => Ok(p.clone()),
        }
    }
}

/// Sampled horofunction with normalization `u(o) = 0` at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct HorofunctionField {
    pub xi: BoundaryPoint,
    pub grid: PolarGrid,
    pub values: Vec<f64>,
    pub approach: ApproachSpec,
    /// `sup_K |u_{n+1} - u_n|` between successive approach points.
    pub series: Vec<f64>,
    /// Whether the series decreases, up to a floor of engine accuracy.
    pub converged: bool,
    /// The last approach point and `d_F(o, x_n)` for it.
    pub target: Option<DiscPoint>,
    pub origin_distance: f64,
    /// Largest interpolation error indicator of a resampled field.
    pub interpolation_error: f64,
}

/// Changes below this are at engine accuracy and count as converged.
const SERIES_FLOOR: f64 = 1e-6;

fn decreasing(series: &[f64]) -> bool {
    series
        .windows(2)
        .all(|w| w[1] <= w[0] || w[1] <= SERIES_FLOOR)
}

impl HorofunctionField {
    /// Field with values from a closed form; the value at the origin is
    /// subtracted.
    pub fn from_fn(xi: BoundaryPoint, grid: PolarGrid, f: impl Fn(&DiscPoint) -> f64) -> Self {
        let raw: Vec<f64> = grid.points().iter().map(&f).collect();
        let values = raw.iter().map(|v| v - raw[0]).collect();
        Self {
            xi,
            grid,
            values,
            approach: ApproachSpec::Points(Vec::new()),
            series: Vec::new(),
            converged: true,
            target: None,
            origin_distance: f64::NAN,
            interpolation_error: 0.0,
        }
    }

    pub fn value_at_origin(&self) -> f64 {
        self.values[0]
    }

    /// Interpolated value at an off-grid point.
    pub fn interpolate(&self, p: &DiscPoint) -> Result<f64> {
        Ok(self.grid.interpolate(&self.values, p)?.0)
    }

    /// Direct evaluation `d_F(o, x_n) - d_F(p, x_n)` with the last approach
    /// point.
    pub fn u_at(&self, metric: &FinslerMetric, p: &DiscPoint, opts: &EngineOptions) -> Result<f64> {
        let target = self
            .target
            .ok_or(Error::InvalidParameter("field has no approach point"))?;
        Ok(self.origin_distance - dist_f(metric, p, &target, opts)?)
    }
}

/// `u(x) = log((1 - |z|^2) / |xi - z|^2)`: the horofunction of the
/// hyperbolic metric, zero at the origin.
pub fn hyperbolic_horofunction(xi: &BoundaryPoint, p: &DiscPoint) -> f64 {
    let z = p.to_complex();
    ((1.0 - z.norm_sqr()) / (xi.to_complex() - z).norm_sqr()).ln()
}

/// Horofunction of direction `xi` on the grid `spec`, as the limit of
/// `d_F(o, x_n) - d_F(x, x_n)` over the approach points.
pub fn horofunction(
    metric: &FinslerMetric,
    xi: &BoundaryPoint,
    approach: &ApproachSpec,
    spec: GridSpec,
    opts: &EngineOptions,
) -> Result<HorofunctionField> {
    let grid = PolarGrid::new(spec)?;
    let targets = approach.points(xi)?;
    if targets.is_empty() {
        return Err(Error::InvalidParameter("empty approach sequence"));
    }
    let o = DiscPoint::origin();
    let mut series = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut origin_distance = 0.0;
    for x_n in &targets {
        origin_distance = dist_f(metric, &o, x_n, opts)?;
        let d = par::map(grid.points(), |p| dist_f(metric, p, x_n, opts))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        // The first grid point is the origin, so u(o) = 0 exactly.
        let values: Vec<f64> = d.iter().map(|v| d[0] - v).collect();
        if let Some(prev) = &previous {
            series.push(
                values
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        previous = Some(values);
    }
    Ok(HorofunctionField {
        xi: *xi,
        grid,
        values: previous.unwrap(),
        approach: approach.clone(),
        converged: decreasing(&series),
        series,
        target: targets.last().copied(),
        origin_distance,
        interpolation_error: 0.0,
    })
}

/// Busemann function of a truncated ray: the horofunction approached along
/// the ray's own points at F-arclengths `lengths`.
pub fn busemann_of_ray(
    metric: &FinslerMetric,
    ray: &RayApproximation,
    lengths: &[f64],
    spec: GridSpec,
    opts: &EngineOptions,
) -> Result<HorofunctionField> {
    if ray.backward {
        return Err(Error::InvalidParameter(
            "Busemann functions need forward rays",
        ));
    }
    let points = lengths
        .iter()
        .map(|&t| point_at_f_length(metric, &ray.path, t))
        .collect::<Result<Vec<_>>>()?;
    horofunction(
        metric,
        &ray.target_xi,
        &ApproachSpec::Points(points),
        spec,
        opts,
    )
}

/// `max_t |u(c(t)) - u(c(0)) - t|` at `samples + 1` points of the ray with
/// F-arclength up to `t_max`, evaluating `u` directly.
pub fn calibration_residual(
    metric: &FinslerMetric,
    u: &HorofunctionField,
    ray: &RayApproximation,
    t_max: f64,
    samples: usize,
    opts: &EngineOptions,
) -> Result<f64> {
    let c0 = ray.path.first();
    let u0 = u.u_at(metric, c0, opts)?;
    let ts: Vec<f64> = (0..=samples)
        .map(|k| t_max * k as f64 / samples.max(1) as f64)
        .collect();
    let res = par::map(&ts, |&t| -> Result<f64> {
        let p = point_at_f_length(metric, &ray.path, t)?;
        Ok((u.u_at(metric, &p, opts)? - u0 - t).abs())
    });
    res.into_iter().try_fold(0.0, |m, r| r.map(|v| m.max(v)))
}

/// `(tau u)(x) = u(tau^-1 x) - u(tau^-1 o)` on a new grid.
pub fn pushforward_horofunction(
    tau: &MobiusMap,
    u: &HorofunctionField,
    target: GridSpec,
) -> Result<HorofunctionField> {
    let grid = PolarGrid::new(target)?;
    let inv = tau.inverse();
    let (base, base_err) = u
        .grid
        .interpolate(&u.values, &inv.apply(&DiscPoint::origin())?)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut err = base_err;
    for p in grid.points() {
        let (v, e) = u.grid.interpolate(&u.values, &inv.apply(p)?)?;
        values.push(v - base);
        err = err.max(e);
    }
    values[0] = 0.0;
    Ok(HorofunctionField {
        xi: tau.apply_boundary(&u.xi),
        grid,
        values,
        approach: u.approach.clone(),
        series: u.series.clone(),
        converged: u.converged,
        target: match u.target {
            Some(t) => Some(tau.apply(&t)?),
            None => None,
        },
        origin_distance: f64::NAN,
        interpolation_error: err.max(u.interpolation_error),
    })
}

/// `sup_K |u1 - u2|` after matching the values at the origin.
pub fn compare_horofunctions(u1: &HorofunctionField, u2: &HorofunctionField) -> Result<f64> {
    if u1.grid != u2.grid {
        return Err(Error::GridMismatch);
    }
    let (a0, b0) = (u1.values[0], u2.values[0]);
    Ok(u1
        .values
        .iter()
        .zip(&u2.values)
        .map(|(a, b)| ((a - a0) - (b - b0)).abs())
        .fold(0.0, f64::max))
}

/// Lipschitz audit over grid edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub edges: usize,
    /// Ordered pairs with `u(y) - u(x) > d_F(x, y) + tolerance`.
    pub violations: usize,
    /// Largest `u(y) - u(x) - d_F(x, y)`.
    pub max_excess: f64,
    /// Largest `|u(x) - u(y)| / d_g(x, y)`.
    pub max_g_ratio: f64,
    /// Ordered pairs with `|u(x) - u(y)| > c_F d_g(x, y) + tolerance`.
    pub g_violations: usize,
}

/// Checks `u(y) - u(x) <= d_F(x, y)` in both directions of every grid edge
/// and `|u(x) - u(y)| <= c_f d_g(x, y)`.
pub fn lipschitz_audit(
    metric: &FinslerMetric,
    u: &HorofunctionField,
    c_f: f64,
    tolerance: f64,
    opts: &EngineOptions,
) -> Result<LipschitzReport> {
    let pts = u.grid.points();
    let edges = u.grid.edges();
    let pairs: Vec<(usize, usize)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    let excess = par::map(&pairs, |&(x, y)| -> Result<f64> {
        Ok(u.values[y] - u.values[x] - dist_f(metric, &pts[x], &pts[y], opts)?)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut report = LipschitzReport {
        edges: edges.len(),
        violations: excess.iter().filter(|&&e| e > tolerance).count(),
        max_excess: excess.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_g_ratio: 0.0,
        g_violations: 0,
    };
    for &(x, y) in &edges {
        let dg = dist_g(&pts[x], &pts[y]);
        let du = (u.values[x] - u.values[y]).abs();
        report.max_g_ratio = report.max_g_ratio.max(du / dg);
        if du > c_f * dg + tolerance {
            report.g_violations += 2;
        }
    }
    Ok(report)
}
