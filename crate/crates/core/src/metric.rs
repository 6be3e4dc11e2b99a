//! Γ-invariant Finsler metrics built from a Gaussian bump field on the orbit
//! of the origin.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::group::{GeneratorSet, MAX_BALL_LENGTH};
use crate::hyperbolic::{dist_g, DiscPoint, FermiFrame, Minkowski, MobiusMap};
use crate::{Error, Result};

/// Terms `exp(-s d^2)` below this are dropped from the orbit sum.
const TERM_FLOOR: f64 = 1e-16;
/// Deepest ball enumerated for the truncation bound.
const MAX_TAIL_LEVEL: usize = 7;
const CELL_BANDS: usize = 12;
/// Target arc width of a cell.
const CELL_ARC: f64 = 0.1;

/// Count and closest origin image of the elements of one word length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStat {
    pub length: usize,
    pub count: usize,
    pub min_dist: f64,
}

/// Value and covector of the field at a point. The covector acts on chart
/// vectors by `df(v) = Re(conj(gradient) * v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub gradient: Complex64,
    /// `|df|_g`.
    pub grad_norm: f64,
}

/// Value and first two derivatives of the field along a unit-speed geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `f(z) = 1 + A * sum exp(-s d_g(z0, tau o)^2)` over the elements `tau` of
/// word length at most `L`, evaluated at the representative `z0` of `z` in
/// the octagon.
#[derive(Debug, Clone)]
pub struct InvariantField {
    gens: GeneratorSet,
    amplitude: f64,
    shape: f64,
    max_len: usize,
    /// Origin images within reach of the fundamental domain.
    orbit: Vec<Minkowski>,
    orbit_count: usize,
    cells: Vec<Vec<u32>>,
    band_start: Vec<usize>,
    band_sectors: Vec<usize>,
    band_width: f64,
    cutoff_cosh: f64,
    tail: f64,
    levels: Vec<LevelStat>,
    grad_sup: f64,
    c_orbit: f64,
    value_range: (f64, f64),
}

struct Sum {
    t: f64,
    grad: Minkowski,
    d1: f64,
    d2: f64,
}

impl InvariantField {
    pub fn new(gens: &GeneratorSet, amplitude: f64, shape: f64, max_len: usize) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(
                "field amplitude must be nonnegative",
            ));
        }
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::InvalidParameter("field shape must be positive"));
        }
        if max_len > MAX_BALL_LENGTH {
            return Err(Error::Resource {
                requested: max_len,
                max: MAX_BALL_LENGTH,
            });
        }
        let cutoff = (-TERM_FLOOR.ln() / shape).sqrt();
        let tail_level = (max_len + 2).min(MAX_TAIL_LEVEL).max(max_len);
        let ball = gens.enumerate_ball(tail_level)?;
        let o = DiscPoint::origin();

        let mut levels: Vec<LevelStat> = (0..=tail_level)
            .map(|length| LevelStat {
                length,
                count: 0,
                min_dist: f64::INFINITY,
            })
            .collect();
        let mut orbit = Vec::new();
        let edges: Vec<(FermiFrame, f64)> = (0..8)
            .map(|k| FermiFrame::segment(&gens.vertices()[k], &gens.vertices()[(k + 1) % 8]))
            .collect::<Result<_>>()?;
        let mut tail = 0.0;
        for (word, map) in &ball {
            let q = map.apply(&o)?;
            let stat = &mut levels[word.len()];
            stat.count += 1;
            stat.min_dist = stat.min_dist.min(q.rho());
            // The exact polygon distance only matters while the term is
            // not negligible at its lower bound.
            let lower = (q.rho() - gens.r_oct()).max(0.0);
            let d = if shape * lower * lower > 80.0 {
                lower
            } else {
                distance_to_polygon(&edges, &q)
            };
            if word.len() <= max_len {
                orbit.push(q.hyperboloid());
                // Pruned at the cutoff radius.
                let d = d.max(cutoff);
                tail += (-shape * d * d).exp();
            } else {
                tail += (-shape * d * d).exp();
            }
        }

        // Beyond the enumerated levels: at most 8 * 7^(l-1) elements of
        // length l, with origin images extrapolated from the observed growth.
        let r_oct = gens.r_oct();
        let lambda = levels
            .iter()
            .skip(1)
            .map(|s| (s.min_dist + r_oct) / s.length as f64)
            .fold(f64::INFINITY, f64::min);
        let mut count = 8.0 * 7f64.powi(tail_level as i32);
        for l in tail_level + 1..400 {
            let d = (l as f64 * lambda - 2.0 * r_oct).max(0.0);
            let term = count * (-shape * d * d).exp();
            tail += term;
            if term < 1e-30 && d > cutoff {
                break;
            }
            count *= 7.0;
        }
        tail *= amplitude;

        // Images farther than the cutoff from every point of the octagon
        // never contribute.
        let orbit_count = orbit.len();
        let reach = (cutoff + r_oct + 0.5).cosh();
        orbit.retain(|q| q.t <= reach);

        let band_width = (r_oct + 1e-6) / CELL_BANDS as f64;
        let mut cells = Vec::new();
        let mut band_start = Vec::with_capacity(CELL_BANDS + 1);
        let mut band_sectors = Vec::with_capacity(CELL_BANDS);
        for band in 0..CELL_BANDS {
            let (r0, r1) = (band as f64 * band_width, (band + 1) as f64 * band_width);
            let sectors = ((TAU * r1.sinh() / CELL_ARC).ceil() as usize).max(8);
            let sector = TAU / sectors as f64;
            band_start.push(cells.len());
            band_sectors.push(sectors);
            // Radial leg to the target radius, then an arc no longer than the
            // outer one.
            let radius = 0.5 * (r1 - r0) + r1.sinh() * 0.5 * sector;
            for sec in 0..sectors {
                let center =
                    DiscPoint::new((sec as f64 + 0.5) * sector, 0.5 * (r0 + r1))?.hyperboloid();
                let list = orbit
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| center.dist(**q) <= cutoff + radius)
                    .map(|(i, _)| i as u32)
                    .collect();
                cells.push(list);
            }
        }

        let mut field = Self {
            gens: gens.clone(),
            amplitude,
            shape,
            max_len,
            orbit,
            orbit_count,
            cells,
            band_start,
            band_sectors,
            band_width,
            cutoff_cosh: cutoff.cosh(),
            tail,
            levels,
            grad_sup: 0.0,
            c_orbit: 0.0,
            value_range: (1.0, 1.0),
        };
        field.survey()?;
        Ok(field)
    }

    /// Samples `|df|_g`, the field range and the orbit constant on a polar
    /// grid covering the octagon.
    fn survey(&mut self) -> Result<()> {
        let (bands, sectors) = (24, 96);
        let mut grad_sup: f64 = 0.0;
        let mut c_orbit: f64 = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=bands {
            let rho = self.gens.r_oct() * i as f64 / bands as f64;
            for j in 0..sectors {
                let p = DiscPoint::new(TAU * j as f64 / sectors as f64, rho)?;
                let s = self.eval(&p)?;
                grad_sup = grad_sup.max(s.grad_norm);
                lo = lo.min(s.value);
                hi = hi.max(s.value);
                let (_, p0) = self.gens.reduce_with_map(&p)?;
                let p0h = p0.hyperboloid();
                let c: f64 = self
                    .orbit
                    .iter()
                    .map(|q| {
                        let d = p0h.dist(*q);
                        2.0 * d * (-self.shape * d * d).exp()
                    })
                    .sum();
                c_orbit = c_orbit.max(c);
            }
        }
        self.grad_sup = grad_sup;
        self.c_orbit = c_orbit;
        self.value_range = (lo, hi);
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    /// Number of orbit points in the sum.
    pub fn orbit_len(&self) -> usize {
        self.orbit_count
    }

    /// `TAIL(L)`: bound on the omitted orbit terms at any point.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn levels(&self) -> &[LevelStat] {
        &self.levels
    }

    /// Sampled supremum of `|df|_g`.
    pub fn grad_sup(&self) -> f64 {
        self.grad_sup
    }

    /// Sampled supremum of `sum 2 d exp(-s d^2)`; `|df|_g <= A s C_orbit`.
    pub fn c_orbit(&self) -> f64 {
        self.c_orbit
    }

    /// Sampled minimum and maximum of `f`.
    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn require_tail(&self, tolerance: f64) -> Result<()> {
        if self.tail > tolerance {
            return Err(Error::FieldTruncation {
                tail: self.tail,
                tolerance,
            });
        }
        Ok(())
    }

    fn cell(&self, p0: &DiscPoint) -> usize {
        let band = ((p0.rho() / self.band_width) as usize).min(CELL_BANDS - 1);
        let sectors = self.band_sectors[band];
        let sector = ((p0.theta() / (TAU / sectors as f64)) as usize) % sectors;
        self.band_start[band] + sector
    }

    fn accumulate(&self, p0: &DiscPoint, pt: Minkowski, dir: Option<Minkowski>) -> Sum {
        let s = self.shape;
        let mut acc = Sum {
            t: 0.0,
            grad: Minkowski::new(0.0, 0.0, 0.0),
            d1: 0.0,
            d2: 0.0,
        };
        if self.amplitude == 0.0 {
            return acc;
        }
        for &i in &self.cells[self.cell(p0)] {
            let q = self.orbit[i as usize];
            let phi = -pt.dot(q);
            if phi > self.cutoff_cosh {
                continue;
            }
            // cosh d - 1 without cancellation for nearby points.
            let phim1 = if phi < 1.5 {
                let diff = pt - q;
                0.5 * diff.dot(diff).max(0.0)
            } else {
                phi - 1.0
            };
            let sinh2 = phim1 * (phi + 1.0);
            let d = 2.0 * (0.5 * phim1).sqrt().asinh();
            let t = (-s * d * d).exp();
            let r = if d < 1e-8 { 1.0 } else { d / sinh2.sqrt() };
            acc.t += t;
            acc.grad = acc.grad + q * (2.0 * s * t * r);
            if let Some(v) = dir {
                let dphi = -v.dot(q);
                let dd2 = if sinh2 > 0.0 {
                    (dphi * dphi / sinh2).min(1.0)
                } else {
                    1.0
                };
                acc.d1 += -2.0 * s * t * r * dphi;
                let rp = r * dphi;
                acc.d2 += t * (4.0 * s * s * rp * rp - 2.0 * s * (dd2 + r * phi * (1.0 - dd2)));
            }
        }
        acc
    }

    pub fn value(&self, p: &DiscPoint) -> Result<f64> {
        let (_, p0) = self.gens.reduce_with_map(p)?;
        Ok(1.0 + self.amplitude * self.accumulate(&p0, p0.hyperboloid(), None).t)
    }

    /// Value and analytic covector at `p`.
    pub fn eval(&self, p: &DiscPoint) -> Result<FieldSample> {
        let to_p = MobiusMap::to_point(p);
        let (w, _) = self.gens.reduce_with_map(p)?;
        // A frame at the reduced point whose origin pullback is accurate.
        let n0 = w * to_p;
        let p0 = n0.apply(&DiscPoint::origin())?;
        let pt = p0.hyperboloid();
        let acc = self.accumulate(&p0, pt, None);
        let value = 1.0 + self.amplitude * acc.t;
        let g = acc.grad * self.amplitude;
        let g_tan = g + pt * g.dot(pt);
        // Pull the gradient back to the origin, where the chart vector of a
        // tangent vector (0, x, y) is (x + iy) / 2.
        let g_o = n0.inverse().lorentz().apply(g_tan);
        let v0 = Complex64::new(0.5 * g_o.x, 0.5 * g_o.y);
        let ca = to_p.a().conj();
        let grad_vec = v0 / (ca * ca);
        let lambda = p.conformal_factor();
        let grad_norm = g_tan.dot(g_tan).max(0.0).sqrt();
        Ok(FieldSample {
            value,
            gradient: grad_vec * (lambda * lambda),
            grad_norm,
        })
    }

    /// Value and derivatives along the unit-speed geodesic
    /// `t -> n(translation(t)(0))`.
    pub fn jet(&self, n: &MobiusMap) -> Result<FieldJet> {
        let p = n.apply(&DiscPoint::origin())?;
        let (w, _) = self.gens.reduce_with_map(&p)?;
        let n0 = w * *n;
        let lz = n0.lorentz();
        let pt = Minkowski::new(lz.0[0][0], lz.0[1][0], lz.0[2][0]);
        let dir = Minkowski::new(lz.0[0][1], lz.0[1][1], lz.0[2][1]);
        let p0 = DiscPoint::from_hyperboloid(pt)?;
        let acc = self.accumulate(&p0, pt, Some(dir));
        Ok(FieldJet {
            value: 1.0 + self.amplitude * acc.t,
            d1: self.amplitude * acc.d1,
            d2: self.amplitude * acc.d2,
        })
    }

    /// Derivatives along the `y` line of a Fermi chart at `(s, y)`.
    pub fn fermi_normal_jet(&self, frame: &FermiFrame, s: f64, y: f64) -> Result<FieldJet> {
        let n = *frame.map()
            * MobiusMap::translation(s)
            * MobiusMap::translation_imag(y)
            * MobiusMap::rotation(FRAC_PI_2);
        self.jet(&n)
    }

    /// Central finite-difference covector with step `h` along two
    /// g-orthonormal directions.
    pub fn fd_gradient(&self, p: &DiscPoint, h: f64) -> Result<Complex64> {
        let to_p = MobiusMap::to_point(p);
        let mut comps = [0.0; 2];
        for (k, phi) in [0.0, FRAC_PI_2].into_iter().enumerate() {
            let dir = to_p * MobiusMap::rotation(phi);
            let fp = self.value(&(dir * MobiusMap::translation(h)).apply(&DiscPoint::origin())?)?;
            let fm =
                self.value(&(dir * MobiusMap::translation(-h)).apply(&DiscPoint::origin())?)?;
            comps[k] = (fp - fm) / (2.0 * h);
        }
        // g-unit chart vectors at p: the real and imaginary unit vectors at
        // the origin, 1/2 and i/2, pushed forward by to_p.
        let ca = to_p.a().conj();
        let e0 = Complex64::new(0.5, 0.0) / (ca * ca);
        let e1 = Complex64::new(0.0, 0.5) / (ca * ca);
        // Solve Re(conj(k) e0) = c0, Re(conj(k) e1) = c1 for k.
        let det = e0.re * e1.im - e0.im * e1.re;
        let kx = (comps[0] * e1.im - comps[1] * e0.im) / det;
        let ky = (e0.re * comps[1] - e1.re * comps[0]) / det;
        Ok(Complex64::new(kx, ky))
    }
}

fn distance_to_polygon(edges: &[(FermiFrame, f64)], q: &DiscPoint) -> f64 {
    edges
        .iter()
        .map(|(frame, len)| {
            let (s, y) = frame.coords(q);
            if s < 0.0 {
                dist_g(&frame.disc_point(0.0, 0.0).expect("vertex"), q)
            } else if s > *len {
                dist_g(&frame.disc_point(*len, 0.0).expect("vertex"), q)
            } else {
                y.abs()
            }
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn eval_field(field: &InvariantField, p: &DiscPoint, tolerance: f64) -> Result<FieldSample> {
    field.require_tail(tolerance)?;
    field.eval(p)
}

/// Family of a [`FinslerMetric`].
#[derive(Debug, Clone)]
pub enum MetricKind {
    /// `F = |v|_g`.
    Hyperbolic,
    /// `F = f(x) |v|_g`.
    Conformal(Arc<InvariantField>),
    /// `F = |v|_g + epsilon df_x(v)`.
    RandersExact {
        field: Arc<InvariantField>,
        epsilon: f64,
    },
}

#[derive(Debug, Clone)]
pub struct FinslerMetric {
    kind: MetricKind,
}

/// `(1 / c_F) F <= |.|_g <= c_F F` on the sampled unit bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceConstant {
    pub c_f: f64,
    /// Radial bands, with `8 *` as many sectors and angular samples.
    pub resolution: usize,
}

impl FinslerMetric {
    pub fn hyperbolic() -> Self {
        Self {
            kind: MetricKind::Hyperbolic,
        }
    }

    pub fn conformal(field: Arc<InvariantField>) -> Self {
        Self {
            kind: MetricKind::Conformal(field),
        }
    }

    /// Fails unless `epsilon * sup |df|_g < 1` on the field survey grid.
    pub fn randers_exact(field: Arc<InvariantField>, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be finite"));
        }
        let value = epsilon.abs() * field.grad_sup();
        if value >= 1.0 {
            return Err(Error::Positivity { value });
        }
        Ok(Self {
            kind: MetricKind::RandersExact { field, epsilon },
        })
    }

    /// Skips the positivity check; for exercising failure paths.
    pub fn randers_unchecked(field: Arc<InvariantField>, epsilon: f64) -> Self {
        Self {
            kind: MetricKind::RandersExact { field, epsilon },
        }
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn field(&self) -> Option<&InvariantField> {
        match &self.kind {
            MetricKind::Hyperbolic => None,
            MetricKind::Conformal(f) | MetricKind::RandersExact { field: f, .. } => Some(f),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self.kind {
            MetricKind::RandersExact { epsilon, .. } => epsilon,
            _ => 0.0,
        }
    }

    /// `epsilon * sup |df|_g` from the field survey; must stay below one.
    pub fn positivity_margin(&self) -> f64 {
        match &self.kind {
            MetricKind::RandersExact { field, epsilon } => epsilon.abs() * field.grad_sup(),
            _ => 0.0,
        }
    }

    /// Short stable identifier with all parameters.
    pub fn id(&self) -> String {
        match &self.kind {
            MetricKind::Hyperbolic => String::from("hyperbolic"),
            MetricKind::Conformal(f) => {
                format!("conformal(A={},s={},L={})", f.amplitude, f.shape, f.max_len)
            }
            MetricKind::RandersExact { field: f, epsilon } => format!(
                "randers_exact(A={},s={},L={},eps={})",
                f.amplitude, f.shape, f.max_len, epsilon
            ),
        }
    }

    /// `F(p, v)` for a chart vector `v` at `p`.
    pub fn eval(&self, p: &DiscPoint, v: Complex64) -> Result<f64> {
        let g = p.norm_g(v);
        match &self.kind {
            MetricKind::Hyperbolic => Ok(g),
            MetricKind::Conformal(f) => Ok(f.value(p)? * g),
            MetricKind::RandersExact { field, epsilon } => {
                let s = field.eval(p)?;
                let value = epsilon.abs() * s.grad_norm;
                if value >= 1.0 {
                    return Err(Error::Positivity { value });
                }
                Ok(g + epsilon * (s.gradient.conj() * v).re)
            }
        }
    }

    /// Evaluates `F(p, .)` on the g-unit vectors at angles `2 pi k / n`.
    fn fiber(&self, p: &DiscPoint, n: usize) -> Result<Vec<(Complex64, f64)>> {
        let (value, grad, eps) = match &self.kind {
            MetricKind::Hyperbolic => (1.0, Complex64::new(0.0, 0.0), 0.0),
            MetricKind::Conformal(f) => (f.value(p)?, Complex64::new(0.0, 0.0), 0.0),
            MetricKind::RandersExact { field, epsilon } => {
                let s = field.eval(p)?;
                (1.0, s.gradient, *epsilon)
            }
        };
        Ok((0..n)
            .map(|k| {
                let v = p.unit_tangent(TAU * k as f64 / n as f64);
                (v, value + eps * (grad.conj() * v).re)
            })
            .collect())
    }

    pub fn estimate_c_f(&self, resolution: usize) -> Result<EquivalenceConstant> {
        let resolution = resolution.max(1);
        let r_oct = match self.field() {
            Some(f) => f.gens.r_oct(),
            None => {
                return Ok(EquivalenceConstant {
                    c_f: 1.0,
                    resolution,
                })
            }
        };
        let sectors = 8 * resolution;
        let mut c: f64 = 1.0;
        for i in 0..=resolution {
            let rho = r_oct * i as f64 / resolution as f64;
            for j in 0..sectors {
                let p = DiscPoint::new(TAU * j as f64 / sectors as f64, rho)?;
                for (_, f) in self.fiber(&p, sectors)? {
                    c = c.max(f).max(1.0 / f);
                }
            }
        }
        Ok(EquivalenceConstant { c_f: c, resolution })
    }

    /// The F-unit vector `v` maximizing `du(v)` for a chart covector `du`.
    pub fn legendre_grad(&self, p: &DiscPoint, du: Complex64) -> Result<Complex64> {
        if du.norm() == 0.0 {
            return Err(Error::InvalidParameter("zero covector"));
        }
        let lambda = p.conformal_factor();
        let unit = |phi: f64| -> Result<Complex64> {
            let v = Complex64::from_polar(1.0 / lambda, phi);
            Ok(v / self.eval(p, v)?)
        };
        let objective = |phi: f64| -> Result<f64> { Ok((du.conj() * unit(phi)?).re) };
        const SCAN: usize = 360;
        let values = (0..SCAN)
            .map(|k| objective(TAU * k as f64 / SCAN as f64))
            .collect::<Result<Vec<_>>>()?;
        let best = (0..SCAN)
            .max_by(|&i, &j| values[i].total_cmp(&values[j]))
            .expect("nonempty scan");
        // A competing local maximum of (nearly) equal height away from the
        // best one means the unit ball is not strictly convex.
        for k in 0..SCAN {
            let sep = (k as isize - best as isize)
                .rem_euclid(SCAN as isize)
                .min((best as isize - k as isize).rem_euclid(SCAN as isize));
            let is_local_max =
                values[k] >= values[(k + 1) % SCAN] && values[k] >= values[(k + SCAN - 1) % SCAN];
            if sep > 3 && is_local_max && values[k] >= values[best] - 1e-9 * values[best].abs() {
                return Err(Error::Convexity {
                    first: TAU * best as f64 / SCAN as f64,
                    second: TAU * k as f64 / SCAN as f64,
                });
            }
        }
        let step = TAU / SCAN as f64;
        let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (objective(x1)?, objective(x2)?);
        while hi - lo > 1e-12 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = objective(x2)?;
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = objective(x1)?;
            }
        }
        unit(0.5 * (lo + hi))
    }

    /// Most negative normalized turning of the sampled unit-ball boundary at
    /// `p`; nonnegative for a convex fiber.
    pub fn fiber_convexity_defect(&self, p: &DiscPoint, n: usize) -> Result<f64> {
        let lambda = p.conformal_factor();
        // Boundary of the unit ball in g-orthonormal coordinates.
        let pts: Vec<Complex64> = self
            .fiber(p, n)?
            .into_iter()
            .map(|(v, f)| v * (lambda / f))
            .collect();
        let mut worst = f64::INFINITY;
        for k in 0..n {
            let a = pts[(k + n - 1) % n];
            let b = pts[k];
            let c = pts[(k + 1) % n];
            let (e1, e2) = (b - a, c - b);
            let cross = e1.re * e2.im - e1.im * e2.re;
            worst = worst.min(cross / (e1.norm() * e2.norm()));
        }
        Ok(worst)
    }
}

pub fn eval_metric(metric: &FinslerMetric, p: &DiscPoint, v: Complex64) -> Result<f64> {
    metric.eval(p, v)
}

pub fn estimate_c_f(metric: &FinslerMetric, resolution: usize) -> Result<EquivalenceConstant> {
    metric.estimate_c_f(resolution)
}

pub fn legendre_grad(metric: &FinslerMetric, p: &DiscPoint, du: Complex64) -> Result<Complex64> {
    metric.legendre_grad(p, du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupWord;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn gens() -> &'static GeneratorSet {
        static G: OnceLock<GeneratorSet> = OnceLock::new();
        G.get_or_init(|| GeneratorSet::build_octagon_group().unwrap())
    }

    fn field() -> &'static Arc<InvariantField> {
        static F: OnceLock<Arc<InvariantField>> = OnceLock::new();
        F.get_or_init(|| Arc::new(InvariantField::new(gens(), 0.5, 1.0, 4).unwrap()))
    }

    fn randers() -> FinslerMetric {
        FinslerMetric::randers_exact(field().clone(), 0.3).unwrap()
    }

    /// Direct orbit sum over the whole ball, without pruning.
    fn oracle_value(p: &DiscPoint, amplitude: f64, shape: f64, max_len: usize) -> f64 {
        let (_, p0) = gens().reduce_to_domain(p).unwrap();
        let sum: f64 = gens()
            .enumerate_ball(max_len)
            .unwrap()
            .iter()
            .map(|(_, m)| {
                let d = dist_g(&p0, &m.apply(&DiscPoint::origin()).unwrap());
                (-shape * d * d).exp()
            })
            .sum();
        1.0 + amplitude * sum
    }

    fn random_point(rng: &mut ChaCha8Rng, max_rho: f64) -> DiscPoint {
        DiscPoint::new(rng.random_range(0.0..TAU), rng.random_range(0.0..max_rho)).unwrap()
    }

    #[test]
    fn zero_amplitude_is_constant() {
        let f = InvariantField::new(gens(), 0.0, 1.0, 2).unwrap();
        let s = f.eval(&DiscPoint::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.gradient, Complex64::new(0.0, 0.0));
        assert_eq!(f.tail(), 0.0);
    }

    #[test]
    fn value_matches_direct_orbit_sum() {
        let f = field();
        assert!(f.value(&DiscPoint::origin()).unwrap() >= 1.5);
        // Frozen from the direct sum.
        assert!((f.value(&DiscPoint::origin()).unwrap() - 1.500349366404665).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let p = random_point(&mut rng, 8.0);
            let v = f.value(&p).unwrap();
            assert!((v - oracle_value(&p, 0.5, 1.0, 4)).abs() < 1e-14, "{p:?}");
        }
    }

    #[test]
    fn truncation_bound() {
        let f = field();
        let counts: Vec<usize> = f.levels().iter().map(|l| l.count).collect();
        assert_eq!(counts, [1, 8, 56, 392, 2736, 19096, 133288]);
        assert!(f.tail() > 0.0 && f.tail() < 1e-7);
        // The bound dominates the actual omitted terms at sampled points.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let p = random_point(&mut rng, 3.0);
            let missing = oracle_value(&p, 0.5, 1.0, 6) - f.value(&p).unwrap();
            assert!(missing >= -1e-15 && missing <= f.tail());
        }
        assert!(f.require_tail(1e-6).is_ok());
        assert!(matches!(
            f.require_tail(1e-9),
            Err(Error::FieldTruncation { .. })
        ));
        assert!(eval_field(f, &DiscPoint::origin(), 1e-9).is_err());
    }

    #[test]
    fn invariance_under_generators() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for word in ["a", "b", "C", "d", "abAB"] {
            let m = gens().evaluate_word(&GroupWord::parse(word).unwrap());
            for _ in 0..20 {
                let p = random_point(&mut rng, 6.0);
                let diff = (f.value(&m.apply(&p).unwrap()).unwrap() - f.value(&p).unwrap()).abs();
                assert!(diff <= f.tail().max(1e-12));
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..30 {
            let p = random_point(&mut rng, 10.0);
            let s = f.eval(&p).unwrap();
            let fd = f.fd_gradient(&p, 1e-5).unwrap();
            let scale = p.conformal_factor();
            assert!(
                (s.gradient - fd).norm() / scale < 1e-7,
                "{p:?} {} {}",
                (s.gradient - fd).norm() / scale,
                s.grad_norm
            );
            assert!((s.gradient.norm() / scale - s.grad_norm).abs() < 1e-9);
            assert!(s.grad_norm <= f.amplitude() * f.shape() * f.c_orbit() * 1.01);
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let h = 1e-4;
        for _ in 0..30 {
            let p = random_point(&mut rng, 8.0);
            let n = MobiusMap::to_point(&p) * MobiusMap::rotation(rng.random_range(0.0..TAU));
            let at = |t: f64| {
                f.value(
                    &(n * MobiusMap::translation(t))
                        .apply(&DiscPoint::origin())
                        .unwrap(),
                )
                .unwrap()
            };
            let jet = f.jet(&n).unwrap();
            let (fm, f0, fp) = (at(-h), at(0.0), at(h));
            assert!((jet.value - f0).abs() < 1e-11);
            assert!(
                (jet.d1 - (fp - fm) / (2.0 * h)).abs() < 1e-7,
                "{p:?} {jet:?} {}",
                (fp - fm) / (2.0 * h)
            );
            assert!((jet.d2 - (fp - 2.0 * f0 + fm) / (h * h)).abs() < 1e-5);
        }
    }

    #[test]
    fn metric_examples() {
        let o = DiscPoint::origin();
        let hyp = FinslerMetric::hyperbolic();
        assert!((eval_metric(&hyp, &o, Complex64::new(1.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
        let m = randers();
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..20 {
            let p = random_point(&mut rng, 6.0);
            let v = p.unit_tangent(rng.random_range(0.0..TAU)) * rng.random_range(0.1..3.0);
            let f1 = m.eval(&p, v).unwrap();
            assert!((m.eval(&p, v * 2.0).unwrap() - 2.0 * f1).abs() < 1e-12 * f1);
            let sym = f1 + m.eval(&p, -v).unwrap();
            assert!((sym - 2.0 * p.norm_g(v)).abs() < 1e-12 * sym);
            assert!(f1 > 0.0);
        }
        let conf = FinslerMetric::conformal(field().clone());
        let v = Complex64::new(0.3, 0.0);
        assert!((conf.eval(&o, v).unwrap() - 0.6 * field().value(&o).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn positivity_is_enforced() {
        let sup = field().grad_sup();
        assert!(matches!(
            FinslerMetric::randers_exact(field().clone(), 1.01 / sup),
            Err(Error::Positivity { .. })
        ));
        let bad = FinslerMetric::randers_unchecked(field().clone(), 5.0 / sup);
        let mut seen = false;
        for k in 0..64 {
            let p = DiscPoint::new(k as f64 * 0.1, 1.2).unwrap();
            if let Err(Error::Positivity { .. }) = bad.eval(&p, Complex64::new(0.1, 0.0)) {
                seen = true;
            }
        }
        assert!(seen);
    }

    #[test]
    fn equivalence_constants() {
        assert_eq!(
            FinslerMetric::hyperbolic().estimate_c_f(4).unwrap().c_f,
            1.0
        );
        let conf = FinslerMetric::conformal(field().clone());
        let c = estimate_c_f(&conf, 8).unwrap();
        // The grid contains the origin, where f peaks at f(o) slightly above 1 + A.
        assert!(
            c.c_f >= 1.5 - 1e-3 && c.c_f <= field().value(&DiscPoint::origin()).unwrap() + 1e-12
        );
        let c = randers().estimate_c_f(8).unwrap();
        let bound = 1.0 / (1.0 - 0.3 * field().grad_sup());
        assert!(c.c_f > 1.0 && c.c_f <= bound + 1e-3);
    }

    #[test]
    fn legendre_transform() {
        let hyp = FinslerMetric::hyperbolic();
        let p = DiscPoint::new(0.4, 2.0).unwrap();
        let e = p.unit_tangent(1.1);
        let lambda = p.conformal_factor();
        let v = legendre_grad(&hyp, &p, e * (lambda * lambda)).unwrap();
        assert!((v - e).norm() * lambda < 1e-7);
        let m = randers();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..10 {
            let p = random_point(&mut rng, 4.0);
            let du = Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..TAU));
            let v = m.legendre_grad(&p, du).unwrap();
            assert!((m.eval(&p, v).unwrap() - 1.0).abs() < 1e-8);
            // No F-unit vector does better on a fine scan.
            let best = (0..3600)
                .map(|k| {
                    let w = p.unit_tangent(TAU * k as f64 / 3600.0);
                    (du.conj() * (w / m.eval(&p, w).unwrap())).re
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((du.conj() * v).re >= best - 1e-9);
        }
        assert!(m.legendre_grad(&p, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn fibers_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let metrics = [
            FinslerMetric::hyperbolic(),
            FinslerMetric::conformal(field().clone()),
            randers(),
        ];
        for m in &metrics {
            for _ in 0..10 {
                let p = random_point(&mut rng, 3.0);
                assert!(m.fiber_convexity_defect(&p, 360).unwrap() > -1e-6);
            }
        }
    }

    #[test]
    fn metric_invariance() {
        let m = randers();
        let conf = FinslerMetric::conformal(field().clone());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for l in crate::group::Letter::all() {
            let tau = gens().map(l);
            for _ in 0..5 {
                let p = random_point(&mut rng, 3.0);
                let v = p.unit_tangent(rng.random_range(0.0..TAU));
                let z = p.to_complex();
                // Chart differential of tau.
                let den = tau.b().conj() * z + tau.a().conj();
                let dv = v / (den * den);
                let tp = tau.apply(&p).unwrap();
                for metric in [&m, &conf] {
                    let diff = (metric.eval(&tp, dv).unwrap() - metric.eval(&p, v).unwrap()).abs();
                    assert!(diff < field().tail().max(1e-8), "{diff}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn field_is_at_least_one(theta in 0.0..TAU, rho in 0.0..20.0f64) {
            let p = DiscPoint::new(theta, rho).unwrap();
            prop_assert!(field().value(&p).unwrap() >= 1.0);
        }

        #[test]
        fn homogeneity(theta in 0.0..TAU, rho in 0.0..8.0f64, phi in 0.0..TAU, k in 0u32..50) {
            let p = DiscPoint::new(theta, rho).unwrap();
            let v = p.unit_tangent(phi);
            let lambda = k as f64 / 7.0;
            for m in [FinslerMetric::hyperbolic(), FinslerMetric::conformal(field().clone()), randers()] {
                let f1 = m.eval(&p, v).unwrap();
                let fl = m.eval(&p, v * lambda).unwrap();
                prop_assert!((fl - lambda * f1).abs() <= 1e-12 * (1.0 + fl));
            }
        }
    }
}
