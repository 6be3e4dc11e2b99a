//! The Poincaré disc of curvature −1.
//!
//! Points are stored as `(theta, rho)`: direction from the origin and
//! hyperbolic distance to it. The euclidean coordinate `z = tanh(rho/2)e^{i theta}`
//! loses all precision near the boundary (`1 - |z| ~ 2e^{-rho}`), so every
//! formula here works from `rho` directly, through the spinor
//! `(sinh(rho/2) e^{i theta}, cosh(rho/2))` or the hyperboloid
//! `(cosh rho, sinh rho cos theta, sinh rho sin theta)`.

use core::f64::consts::{PI, TAU};
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Truncation radius for every point handled by the crate.
pub const R_MAX: f64 = 30.0;
/// Equality tolerance for boundary angles.
pub const TOL_ANGLE: f64 = 1e-9;

/// `x mod 2 pi` in `[0, 2 pi]`.
pub(crate) fn rem_tau(x: f64) -> f64 {
    let r = x % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let t = rem_tau(theta);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed difference `a - b` folded into `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = rem_tau(a - b);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// A vector of Minkowski space `R^{1,2}` with the form `-t t' + x x' + y y'`.
/// Points of the disc sit on the upper sheet `<X, X> = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minkowski {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Minkowski {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        -self.t * other.t + self.x * other.x + self.y * other.y
    }

    /// Hyperbolic distance between two points of the hyperboloid.
    pub fn dist(self, other: Self) -> f64 {
        let cosh_d = -self.dot(other);
        if cosh_d < 2.0 {
            let diff = self - other;
            let half = 0.5 * diff.dot(diff).max(0.0).sqrt();
            2.0 * half.asinh()
        } else {
            (cosh_d + (cosh_d * cosh_d - 1.0).sqrt()).ln()
        }
    }
}

impl Add for Minkowski {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x, self.y + o.y)
    }
}

impl Sub for Minkowski {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Minkowski {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.t * k, self.x * k, self.y * k)
    }
}

impl Neg for Minkowski {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.t, -self.x, -self.y)
    }
}

/// The `SO(2,1)` matrix of a disc isometry acting on the hyperboloid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentz(pub [[f64; 3]; 3]);

impl Lorentz {
    pub fn apply(&self, v: Minkowski) -> Minkowski {
        let m = &self.0;
        Minkowski::new(
            m[0][0] * v.t + m[0][1] * v.x + m[0][2] * v.y,
            m[1][0] * v.t + m[1][1] * v.x + m[1][2] * v.y,
            m[2][0] * v.t + m[2][1] * v.x + m[2][2] * v.y,
        )
    }
}

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint {
    theta: f64,
    rho: f64,
}

impl DiscPoint {
    pub fn new(theta: f64, rho: f64) -> Result<Self> {
        if !theta.is_finite() || !rho.is_finite() {
            return Err(Error::InvalidPoint("non-finite coordinate"));
        }
        if rho < 0.0 {
            return Err(Error::InvalidPoint("negative radius"));
        }
        if rho > R_MAX {
            return Err(Error::Truncation { rho, max: R_MAX });
        }
        Ok(Self {
            theta: wrap_angle(theta),
            rho,
        })
    }

    pub const fn origin() -> Self {
        Self {
            theta: 0.0,
            rho: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Euclidean coordinate in the disc chart.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar((0.5 * self.rho).tanh(), self.theta)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        let r = z.norm();
        if !(r < 1.0) {
            return Err(Error::InvalidPoint("outside the open unit disc"));
        }
        Self::new(z.arg(), 2.0 * r.atanh())
    }

    pub fn hyperboloid(&self) -> Minkowski {
        let (s, c) = self.theta.sin_cos();
        let sh = self.rho.sinh();
        Minkowski::new(self.rho.cosh(), sh * c, sh * s)
    }

    pub fn from_hyperboloid(p: Minkowski) -> Result<Self> {
        let r = p.x.hypot(p.y);
        Self::new(p.y.atan2(p.x), r.asinh())
    }

    /// `(w1, w2)` with `z = w1 / w2` and `|w2|^2 - |w1|^2 = 1`.
    fn spinor(&self) -> (Complex64, Complex64) {
        let h = 0.5 * self.rho;
        (
            Complex64::from_polar(h.sinh(), self.theta),
            Complex64::new(h.cosh(), 0.0),
        )
    }

    fn from_spinor(w1: Complex64, w2: Complex64) -> Result<Self> {
        let rho = 2.0 * w1.norm().asinh();
        let theta = if w1.norm() == 0.0 {
            0.0
        } else {
            (w1 * w2.conj()).arg()
        };
        Self::new(theta, rho)
    }

    /// The factor `2 / (1 - |z|^2)` relating `|v|_g` to the euclidean `|v|`.
    pub fn conformal_factor(&self) -> f64 {
        let c = (0.5 * self.rho).cosh();
        2.0 * c * c
    }

    /// `|v|_g` of a chart vector at this point.
    pub fn norm_g(&self, v: Complex64) -> f64 {
        self.conformal_factor() * v.norm()
    }

    /// The chart vector of `g`-length one pointing in euclidean direction `phi`.
    pub fn unit_tangent(&self, phi: f64) -> Complex64 {
        Complex64::from_polar(1.0 / self.conformal_factor(), phi)
    }

    /// Pushes a chart vector at this point to the tangent space of the
    /// hyperboloid.
    pub fn tangent_to_hyperboloid(&self, v: Complex64) -> Minkowski {
        let z = self.to_complex();
        let c = (0.5 * self.rho).cosh();
        let inv_d = c * c; // 1 / (1 - |z|^2)
        let zv = z.re * v.re + z.im * v.im;
        let dt = 4.0 * zv * inv_d * inv_d;
        let dxy = v * (2.0 * inv_d) + z * (4.0 * zv * inv_d * inv_d);
        Minkowski::new(dt, dxy.re, dxy.im)
    }

    /// The chart vector whose hyperboloid image is the tangent vector `v`.
    pub fn tangent_from_hyperboloid(&self, v: Minkowski) -> Complex64 {
        // Invert the differential of z -> X(z) using the g-orthonormal frame
        // at this point, whose images are orthonormal for the Minkowski form.
        let e1 = self.unit_tangent(0.0);
        let e2 = self.unit_tangent(0.5 * PI);
        let h1 = self.tangent_to_hyperboloid(e1);
        let h2 = self.tangent_to_hyperboloid(e2);
        e1 * v.dot(h1) + e2 * v.dot(h2)
    }
}

/// The hyperbolic distance `d_g`.
pub fn dist_g(p: &DiscPoint, q: &DiscPoint) -> f64 {
    // Fixed argument order keeps the result bitwise symmetric.
    let (p, q) = if (p.rho, p.theta) <= (q.rho, q.theta) {
        (p, q)
    } else {
        (q, p)
    };
    let dr = 0.5 * (p.rho - q.rho);
    let sh = dr.sinh();
    let sa = (0.5 * angle_diff(p.theta, q.theta)).sin();
    let s2 = sh * sh + p.rho.sinh() * q.rho.sinh() * sa * sa;
    2.0 * s2.max(0.0).sqrt().asinh()
}

/// A point of the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    xi: f64,
}

impl BoundaryPoint {
    pub fn new(xi: f64) -> Self {
        Self { xi: wrap_angle(xi) }
    }

    /// Angle given in turns of `2 pi`.
    pub fn from_turns(turns: f64) -> Self {
        Self::new(turns * TAU)
    }

    pub fn angle(&self) -> f64 {
        self.xi
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.xi)
    }

    /// Unsigned angular distance.
    pub fn distance(&self, other: &BoundaryPoint) -> f64 {
        angle_diff(self.xi, other.xi).abs()
    }

    pub fn approx_eq(&self, other: &BoundaryPoint) -> bool {
        self.distance(other) <= TOL_ANGLE
    }

    /// Rotated counterclockwise by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        Self::new(self.xi + phi)
    }
}

fn mul2(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// An orientation-preserving isometry `z -> (a z + b) / (conj(b) z + conj(a))`
/// with `|a|^2 - |b|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    a: Complex64,
    b: Complex64,
}

impl MobiusMap {
    /// Builds the map and rescales it onto `|a|^2 - |b|^2 = 1`.
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvalidParameter(
                "Mobius map does not preserve the disc",
            ));
        }
        Ok(Self { a, b }.normalized())
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// Rotation by `phi` about the origin.
    pub fn rotation(phi: f64) -> Self {
        Self {
            a: Complex64::from_polar(1.0, 0.5 * phi),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// Translation by hyperbolic distance `t` along the real diameter.
    pub fn translation(t: f64) -> Self {
        let h = 0.5 * t;
        Self {
            a: Complex64::new(h.cosh(), 0.0),
            b: Complex64::new(h.sinh(), 0.0),
        }
    }

    /// Translation by `t` along the imaginary diameter (towards `+i` for `t > 0`).
    pub fn translation_imag(t: f64) -> Self {
        let h = 0.5 * t;
        Self {
            a: Complex64::new(h.cosh(), 0.0),
            b: Complex64::new(0.0, h.sinh()),
        }
    }

    /// A map sending the origin to `p` (and the positive real direction at
    /// the origin to the radial direction at `p`).
    pub fn to_point(p: &DiscPoint) -> Self {
        Self::rotation(p.theta) * Self::translation(p.rho)
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// `|a|^2 - |b|^2 - 1`.
    pub fn det_residual(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr() - 1.0
    }

    fn normalized(self) -> Self {
        let (na, nb) = (self.a.norm_sqr(), self.b.norm_sqr());
        let det = na - nb;
        // A deviation at the rounding level of `det` carries no information;
        // rescaling by it would inject error of size `|a|^2 eps`.
        if (det - 1.0).abs() <= 16.0 * f64::EPSILON * (na + nb) {
            return self;
        }
        let k = 1.0 / det.sqrt();
        Self {
            a: self.a * k,
            b: self.b * k,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// `Re a`; its absolute value exceeds one exactly for hyperbolic maps.
    pub fn half_trace(&self) -> f64 {
        self.a.re
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.a.re.abs() > 1.0 + 1e-12
    }

    /// Maximal entry deviation from the identity, up to the sign ambiguity of
    /// the matrix.
    pub fn distance_to_identity(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let plus = (self.a - one).norm().max(self.b.norm());
        let minus = (self.a + one).norm().max(self.b.norm());
        plus.min(minus)
    }

    /// Maximal entry deviation between the two matrices, up to sign.
    pub fn distance_to(&self, other: &MobiusMap) -> f64 {
        let plus = (self.a - other.a).norm().max((self.b - other.b).norm());
        let minus = (self.a + other.a).norm().max((self.b + other.b).norm());
        plus.min(minus)
    }

    fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.a, self.b], [self.b.conj(), self.a.conj()]]
    }

    /// Action on a euclidean chart coordinate.
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    pub fn apply(&self, p: &DiscPoint) -> Result<DiscPoint> {
        let (w1, w2) = p.spinor();
        let v1 = self.a * w1 + self.b * w2;
        let v2 = self.b.conj() * w1 + self.a.conj() * w2;
        DiscPoint::from_spinor(v1, v2)
    }

    /// Polar coordinates `(theta, rho)` of the image, without the
    /// truncation check; for directions towards far points.
    pub(crate) fn apply_polar(&self, p: &DiscPoint) -> (f64, f64) {
        let (w1, w2) = p.spinor();
        let v1 = self.a * w1 + self.b * w2;
        let v2 = self.b.conj() * w1 + self.a.conj() * w2;
        let theta = if v1.norm() == 0.0 {
            0.0
        } else {
            (v1 * v2.conj()).arg()
        };
        (theta, 2.0 * v1.norm().asinh())
    }

    pub fn apply_boundary(&self, xi: &BoundaryPoint) -> BoundaryPoint {
        let z = xi.to_complex();
        let num = self.a * z + self.b;
        let den = self.b.conj() * z + self.a.conj();
        BoundaryPoint::new((num * den.conj()).arg())
    }

    /// The matrix of this map acting on the hyperboloid.
    pub fn lorentz(&self) -> Lorentz {
        // X <-> H = 1/2 [[t, x + iy], [x - iy, t]] transforms as H -> G H G*.
        let g = self.matrix();
        let g_adj = [
            [g[0][0].conj(), g[1][0].conj()],
            [g[0][1].conj(), g[1][1].conj()],
        ];
        let half = Complex64::new(0.5, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let basis = [
            [[half, zero], [zero, half]],
            [[zero, half], [half, zero]],
            [
                [zero, Complex64::new(0.0, 0.5)],
                [Complex64::new(0.0, -0.5), zero],
            ],
        ];
        let mut m = [[0.0; 3]; 3];
        for (col, h) in basis.iter().enumerate() {
            let img = mul2(mul2(g, *h), g_adj);
            m[0][col] = 2.0 * img[0][0].re;
            m[1][col] = 2.0 * img[0][1].re;
            m[2][col] = 2.0 * img[0][1].im;
        }
        Lorentz(m)
    }
}

impl Mul for MobiusMap {
    type Output = MobiusMap;

    /// Composition: `(f * g)(z) = f(g(z))`.
    fn mul(self, rhs: MobiusMap) -> MobiusMap {
        Self {
            a: self.a * rhs.a + self.b * rhs.b.conj(),
            b: self.a * rhs.b + self.b * rhs.a.conj(),
        }
        .normalized()
    }
}

pub fn apply_mobius(m: &MobiusMap, p: &DiscPoint) -> Result<DiscPoint> {
    m.apply(p)
}

pub fn apply_mobius_boundary(m: &MobiusMap, xi: &BoundaryPoint) -> BoundaryPoint {
    m.apply_boundary(xi)
}

/// Fermi coordinates `(s, y)` along a geodesic: `s` is arclength along it and
/// `y` the signed distance, positive on the left. The metric reads
/// `cosh^2(y) ds^2 + dy^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiFrame {
    map: MobiusMap,
    lorentz: Lorentz,
    inverse: Lorentz,
}

impl FermiFrame {
    /// Frame whose `y = 0` line is the image of the real diameter under `map`,
    /// with `s = 0` at `map(0)`.
    pub fn from_map(map: MobiusMap) -> Self {
        Self {
            map,
            lorentz: map.lorentz(),
            inverse: map.inverse().lorentz(),
        }
    }

    /// Frame along the geodesic from `x` through `y`; returns the frame and
    /// `d_g(x, y)`, the `s` coordinate of `y`.
    pub fn segment(x: &DiscPoint, y: &DiscPoint) -> Result<(Self, f64)> {
        let to_x = MobiusMap::to_point(x);
        let (theta, rho) = to_x.inverse().apply_polar(y);
        if rho == 0.0 {
            return Err(Error::DegenerateGeodesic);
        }
        let map = to_x * MobiusMap::rotation(theta);
        Ok((Self::from_map(map), rho))
    }

    /// Frame along the geodesic ray from `x` towards `xi`, with `s = 0` at `x`.
    pub fn ray(x: &DiscPoint, xi: &BoundaryPoint) -> Self {
        let to_x = MobiusMap::to_point(x);
        let local = to_x.inverse().apply_boundary(xi);
        Self::from_map(to_x * MobiusMap::rotation(local.angle()))
    }

    pub fn map(&self) -> &MobiusMap {
        &self.map
    }

    pub fn point(&self, s: f64, y: f64) -> Minkowski {
        let (cs, ss) = (s.cosh(), s.sinh());
        let (cy, sy) = (y.cosh(), y.sinh());
        self.lorentz.apply(Minkowski::new(cs * cy, ss * cy, sy))
    }

    /// Unit vector `d/dy` at `(s, y)`.
    pub fn normal(&self, s: f64, y: f64) -> Minkowski {
        let (cs, ss) = (s.cosh(), s.sinh());
        let (cy, sy) = (y.cosh(), y.sinh());
        self.lorentz.apply(Minkowski::new(cs * sy, ss * sy, cy))
    }

    /// `d/ds` at `(s, y)`, of g-length `cosh y`.
    pub fn tangent(&self, s: f64, y: f64) -> Minkowski {
        let cy = y.cosh();
        self.lorentz
            .apply(Minkowski::new(s.sinh() * cy, s.cosh() * cy, 0.0))
    }

    /// The point `(s, y)` computed through Möbius composition, which stays
    /// accurate far from the origin.
    pub fn disc_point(&self, s: f64, y: f64) -> Result<DiscPoint> {
        (self.map * MobiusMap::translation(s) * MobiusMap::translation_imag(y))
            .apply(&DiscPoint::origin())
    }

    /// Fermi coordinates of a point of the hyperboloid.
    pub fn coords_of(&self, p: Minkowski) -> (f64, f64) {
        let q = self.inverse.apply(p);
        let y = q.y.asinh();
        let cy = (1.0 + q.y * q.y).sqrt();
        (((q.x / cy).asinh()), y)
    }

    /// Fermi coordinates of a disc point, pulled back by the inverse Möbius
    /// map rather than the Lorentz matrix to avoid cancellation far out.
    pub fn coords(&self, p: &DiscPoint) -> (f64, f64) {
        match self.map.inverse().apply(p) {
            Ok(local) => {
                let q = local.hyperboloid();
                let cy = (1.0 + q.y * q.y).sqrt();
                ((q.x / cy).asinh(), q.y.asinh())
            }
            Err(_) => self.coords_of(p.hyperboloid()),
        }
    }
}

/// An oriented geodesic of the disc, parameterized by arclength with
/// parameter zero at the point closest to the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicGeodesic {
    xi_minus: BoundaryPoint,
    xi_plus: BoundaryPoint,
    frame: FermiFrame,
}

impl HyperbolicGeodesic {
    pub fn new(xi_minus: BoundaryPoint, xi_plus: BoundaryPoint) -> Result<Self> {
        let gap = rem_tau(xi_minus.angle() - xi_plus.angle());
        if gap < TOL_ANGLE || TAU - gap < TOL_ANGLE {
            return Err(Error::DegenerateGeodesic);
        }
        // Translating the real diameter by `delta` along the imaginary one
        // moves its endpoints to angles gamma and pi - gamma.
        let gamma = 0.5 * (PI - gap);
        let delta = gamma.tan().asinh();
        let psi = xi_plus.angle() - gamma;
        let map = MobiusMap::rotation(psi) * MobiusMap::translation_imag(delta);
        Ok(Self {
            xi_minus,
            xi_plus,
            frame: FermiFrame::from_map(map),
        })
    }

    /// The geodesic through `p` and then `q`, with the parameters of both.
    pub fn through_points(p: &DiscPoint, q: &DiscPoint) -> Result<(Self, f64, f64)> {
        let to_p = MobiusMap::to_point(p);
        let (alpha, rho) = to_p.inverse().apply_polar(q);
        if rho == 0.0 {
            return Err(Error::DegenerateGeodesic);
        }
        let plus = to_p.apply_boundary(&BoundaryPoint::new(alpha));
        let minus = to_p.apply_boundary(&BoundaryPoint::new(alpha + PI));
        let geo = Self::new(minus, plus)?;
        let (tp, _) = geo.fermi_coords(p);
        let (tq, _) = geo.fermi_coords(q);
        Ok((geo, tp, tq))
    }

    pub fn xi_minus(&self) -> BoundaryPoint {
        self.xi_minus
    }

    pub fn xi_plus(&self) -> BoundaryPoint {
        self.xi_plus
    }

    pub fn frame(&self) -> &FermiFrame {
        &self.frame
    }

    /// Unit-speed point at parameter `t`.
    pub fn point_at(&self, t: f64) -> Result<DiscPoint> {
        self.frame.disc_point(t, 0.0)
    }

    /// `(t, y)`: foot parameter and signed offset (positive on the left).
    pub fn fermi_coords(&self, p: &DiscPoint) -> (f64, f64) {
        self.frame.coords(p)
    }

    /// Image under an isometry, with the parameter origin recomputed.
    pub fn transformed(&self, m: &MobiusMap) -> Result<Self> {
        Self::new(
            m.apply_boundary(&self.xi_minus),
            m.apply_boundary(&self.xi_plus),
        )
    }
}

pub fn geodesic_through(
    xi_minus: BoundaryPoint,
    xi_plus: BoundaryPoint,
) -> Result<HyperbolicGeodesic> {
    HyperbolicGeodesic::new(xi_minus, xi_plus)
}

/// Foot parameter of the nearest point of `geo` and the distance to it.
pub fn project_to_geodesic(p: &DiscPoint, geo: &HyperbolicGeodesic) -> (f64, f64) {
    let (t, y) = geo.fermi_coords(p);
    (t, y.abs())
}
