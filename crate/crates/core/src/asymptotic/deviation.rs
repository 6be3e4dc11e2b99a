//! Morse deviations, asymptotic directions and bounding geodesics.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::engine::{
    minimal_geodesic, minimize_in_frame, EngineOptions, PolylinePath, RayApproximation,
};
use crate::hyperbolic::{
    project_to_geodesic, BoundaryPoint, DiscPoint, FermiFrame, HyperbolicGeodesic, MobiusMap,
};
use crate::metric::FinslerMetric;
use crate::{Error, Result};

/// Largest g-distance of a path from the g-geodesic through its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub reference: HyperbolicGeodesic,
    pub max_deviation: f64,
    /// Vertex index and cumulative g-length where the maximum is attained.
    pub argmax: usize,
    pub argmax_length: f64,
}

pub fn morse_deviation(path: &PolylinePath) -> Result<DeviationReport> {
    let (reference, _, _) = HyperbolicGeodesic::through_points(path.first(), path.last())?;
    let knots = path.cumulative_g_length();
    let (argmax, max_deviation) = path
        .vertices()
        .iter()
        .map(|v| project_to_geodesic(v, &reference).1)
        .enumerate()
        .fold(
            (0, 0.0),
            |best, (i, d)| if d > best.1 { (i, d) } else { best },
        );
    Ok(DeviationReport {
        reference,
        max_deviation,
        argmax,
        argmax_length: knots[argmax],
    })
}

/// `D(R)`: the deviation of the truncated minimal geodesic at each radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauSeries {
    pub radii: Vec<f64>,
    pub deviations: Vec<f64>,
}

impl PlateauSeries {
    /// Relative growth from the second-to-last to the last radius.
    pub fn last_growth(&self) -> f64 {
        let n = self.deviations.len();
        if n < 2 {
            return 0.0;
        }
        let (a, b) = (self.deviations[n - 2], self.deviations[n - 1]);
        if a == 0.0 {
            return if b == 0.0 { 0.0 } else { f64::INFINITY };
        }
        b / a - 1.0
    }
}

pub fn deviation_series(
    metric: &FinslerMetric,
    geo: &HyperbolicGeodesic,
    radii: &[f64],
    opts: &EngineOptions,
) -> Result<PlateauSeries> {
    let deviations = radii
        .iter()
        .map(|&r| Ok(morse_deviation(&minimal_geodesic(metric, geo, r, opts)?.path)?.max_deviation))
        .collect::<Result<Vec<_>>>()?;
    Ok(PlateauSeries {
        radii: radii.to_vec(),
        deviations,
    })
}

/// Direction of the g-ray from `base` through `p`.
fn direction_through(base: &DiscPoint, p: &DiscPoint) -> Result<BoundaryPoint> {
    let (frame, _) = FermiFrame::segment(base, p)?;
    Ok(frame.map().apply_boundary(&BoundaryPoint::new(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionDiagnostics {
    /// Direction through the path point at half the truncation radius.
    pub half_estimate: BoundaryPoint,
    /// Angle between the half-radius and full-radius estimates.
    pub drift: f64,
}

/// Endpoint estimate of a truncated ray: the direction of the g-ray from its
/// base through its far vertex.
pub fn asymptotic_direction(
    ray: &RayApproximation,
) -> Result<(BoundaryPoint, DirectionDiagnostics)> {
    let far = if ray.backward {
        ray.path.first()
    } else {
        ray.path.last()
    };
    let xi_hat = direction_through(&ray.base, far)?;
    let trace = ray
        .path
        .trace()
        .ok_or(Error::InvalidParameter("ray without Fermi trace"))?;
    let s_half = if ray.backward {
        -0.5 * ray.radius
    } else {
        0.5 * ray.radius
    };
    let mid = trace.frame().disc_point(s_half, trace.y_at(s_half))?;
    let half_estimate = direction_through(&ray.base, &mid)?;
    Ok((
        xi_hat,
        DirectionDiagnostics {
            half_estimate,
            drift: half_estimate.distance(&xi_hat),
        },
    ))
}

/// Unit chart tangent of the first edge of a path, as an angle.
pub fn initial_tangent_angle(path: &PolylinePath) -> Result<f64> {
    let v = path.vertices();
    if v.len() < 2 {
        return Err(Error::InvalidParameter("path has no edge"));
    }
    let (frame, _) = FermiFrame::segment(&v[0], &v[1])?;
    let a = frame.map().a().conj();
    Ok((num_complex::Complex64::new(1.0, 0.0) / (a * a)).arg())
}

/// The extreme minimal geodesics of a g-geodesic and their separation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingGeodesics {
    pub geodesic: HyperbolicGeodesic,
    pub radius: f64,
    /// Limit from the right.
    pub c0: PolylinePath,
    /// Limit from the left.
    pub c1: PolylinePath,
    /// Smallest g-distance from `c1` to `c0` over the middle window.
    pub gap: f64,
    /// Approximation index at which the one-sided limits stabilized.
    pub n_used: usize,
    pub stable: bool,
    /// Largest amount by which `c1` lies right of `c0` (ordering defect).
    pub order_defect: f64,
}

impl BoundingGeodesics {
    /// Offsets of both paths in the geodesic's Fermi frame at `s`.
    pub fn offsets_at(&self, s: f64) -> (f64, f64) {
        let y0 = self.c0.trace().map_or(f64::NAN, |t| t.y_at(s));
        let y1 = self.c1.trace().map_or(f64::NAN, |t| t.y_at(s));
        (y0, y1)
    }

    /// Whether `p` lies in the closed strip between `c0` and `c1` within
    /// `tol`, judged inside the truncation window.
    pub fn contains(&self, p: &DiscPoint, tol: f64) -> bool {
        let (s, y) = self.geodesic.frame().coords(p);
        if s.abs() > self.radius {
            return false;
        }
        let (y0, y1) = self.offsets_at(s);
        y >= y0 - tol && y <= y1 + tol
    }
}

/// Fermi offsets of a path resampled on the given `s` values of `frame`.
fn resample_in_frame(path: &PolylinePath, frame: &FermiFrame, s: &[f64]) -> Vec<f64> {
    let coords: Vec<(f64, f64)> = path.vertices().iter().map(|v| frame.coords(v)).collect();
    let (cs, cy): (Vec<f64>, Vec<f64>) = coords.into_iter().unzip();
    s.iter()
        .map(|&si| {
            let k = cs.partition_point(|&v| v <= si);
            if k == 0 {
                cy[0]
            } else if k >= cs.len() {
                cy[cs.len() - 1]
            } else {
                let t = (si - cs[k - 1]) / (cs[k] - cs[k - 1]);
                cy[k - 1] + t * (cy[k] - cy[k - 1])
            }
        })
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// One-sided limit of minimal geodesics of approximating geodesics: the
/// minimal geodesic of `geo_n` is computed for `n = 1, 2, 4, ...`, and
/// continued to the endpoints of `geo` from its own shape.
fn one_sided(
    metric: &FinslerMetric,
    geo: &HyperbolicGeodesic,
    radius: f64,
    delta: f64,
    left: bool,
    opts: &EngineOptions,
    max_level: usize,
) -> Result<(PolylinePath, usize, bool)> {
    let frame = *geo.frame();
    let samples: Vec<f64> = (0..=128)
        .map(|k| -0.5 * radius + radius * k as f64 / 128.0)
        .collect();
    let sign = if left { 1.0 } else { -1.0 };
    let mut inner = opts.clone();
    inner.nested_check = false;
    let mut previous: Option<Vec<f64>> = None;
    let mut last = None;
    for level in 0..max_level {
        let n = 1usize << level;
        let rot = sign * delta / n as f64;
        // Left of an oriented geodesic lies the arc from its end
        // counterclockwise to its start.
        let approx =
            HyperbolicGeodesic::new(geo.xi_minus().rotated(-rot), geo.xi_plus().rotated(rot))?;
        let cn = minimal_geodesic(metric, &approx, radius, &inner)?.path;
        // Shape of c_n in the frame of geo, with the linear trend between
        // its end offsets removed so that the ends sit on geo.
        let grid = samples_full(radius);
        let mut guess_y = resample_in_frame(&cn, &frame, &grid);
        let (a, b) = (guess_y[0], guess_y[guess_y.len() - 1]);
        let m = guess_y.len() - 1;
        for (k, y) in guess_y.iter_mut().enumerate() {
            *y -= a + (b - a) * k as f64 / m as f64;
        }
        let guess = |s: f64| interpolate(&grid, &guess_y, s);
        let limit = minimize_in_frame(metric, &frame, -radius, radius, &guess, &inner)?;
        let y = resample_in_frame(&limit, &frame, &samples);
        let stable = previous
            .as_ref()
            .is_some_and(|p| sup_diff(p, &y) <= opts.stability_tol);
        previous = Some(y);
        last = Some(limit);
        if stable {
            return Ok((last.unwrap(), n, true));
        }
    }
    Ok((last.unwrap(), 1 << (max_level - 1), false))
}

fn samples_full(radius: f64) -> Vec<f64> {
    (0..=256)
        .map(|k| -radius + 2.0 * radius * k as f64 / 256.0)
        .collect()
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Bounding geodesics of `geo` at truncation radius `radius`: limits from
/// the left and right of minimal geodesics of geodesics whose endpoints are
/// rotated off `geo`'s by `delta / n`.
pub fn bounding_geodesics(
    metric: &FinslerMetric,
    geo: &HyperbolicGeodesic,
    radius: f64,
    delta: f64,
    opts: &EngineOptions,
) -> Result<BoundingGeodesics> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter("delta must lie in (0, 0.5]"));
    }
    let max_level = 6;
    let (c1, n1, s1) = one_sided(metric, geo, radius, delta, true, opts, max_level)?;
    let (c0, n0, s0) = one_sided(metric, geo, radius, delta, false, opts, max_level)?;
    let frame = *geo.frame();
    let window: Vec<f64> = (0..=256)
        .map(|k| -0.5 * radius + radius * k as f64 / 256.0)
        .collect();
    let y0 = resample_in_frame(&c0, &frame, &window);
    let y1 = resample_in_frame(&c1, &frame, &window);
    let order_defect = y0
        .iter()
        .zip(&y1)
        .map(|(a, b)| (a - b).max(0.0))
        .fold(0.0, f64::max);
    // Distance from points of c1 in the middle window to the trace of c0.
    let points: Vec<DiscPoint> = window
        .iter()
        .zip(&y1)
        .map(|(&s, &y)| frame.disc_point(s, y))
        .collect::<Result<_>>()?;
    let gap = crate::engine::distance_to_path(&c0, &points)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(BoundingGeodesics {
        geodesic: *geo,
        radius,
        c0,
        c1,
        gap,
        n_used: n0.max(n1),
        stable: s0 && s1,
        order_defect,
    })
}

/// Rotation taking `geo` to the geodesic with endpoints moved by `phi`.
pub fn rotated_geodesic(geo: &HyperbolicGeodesic, phi: f64) -> Result<HyperbolicGeodesic> {
    geo.transformed(&MobiusMap::rotation(phi))
}
