//! Damped Newton minimization of discrete path length for paths given as
//! graphs `y(s)` over a reference geodesic in Fermi coordinates.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::hyperbolic::{FermiFrame, MobiusMap};
use crate::metric::{FieldJet, FinslerMetric, InvariantField, MetricKind};
use crate::Result;

/// Length of the geodesic between Fermi points `(s, y1)` and `(s + ds, y2)`
/// with its first and second partial derivatives in `y1, y2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

pub(crate) fn edge_length(y1: f64, y2: f64, ds: f64) -> f64 {
    let u = y1 - y2;
    let sh = (0.5 * u).sinh();
    let sd = (0.5 * ds).sinh();
    let q = sh * sh + y1.cosh() * y2.cosh() * sd * sd;
    2.0 * q.sqrt().asinh()
}

pub(crate) fn edge(y1: f64, y2: f64, ds: f64) -> Edge {
    let u = y1 - y2;
    let (sh1, ch1) = (y1.sinh(), y1.cosh());
    let (sh2, ch2) = (y2.sinh(), y2.cosh());
    let sd = (0.5 * ds).sinh();
    let s2 = sd * sd;
    let shu2 = (0.5 * u).sinh();
    let q = shu2 * shu2 + ch1 * ch2 * s2;
    let (shu, chu) = (u.sinh(), u.cosh());
    let q1 = 0.5 * shu + sh1 * ch2 * s2;
    let q2 = -0.5 * shu + ch1 * sh2 * s2;
    let q11 = 0.5 * chu + ch1 * ch2 * s2;
    let q12 = -0.5 * chu + sh1 * sh2 * s2;
    let q22 = q11;
    let qq = q * (1.0 + q);
    let dq = 1.0 / qq.sqrt();
    let dqq = -(1.0 + 2.0 * q) / (2.0 * qq * qq.sqrt());
    Edge {
        d: 2.0 * q.sqrt().asinh(),
        d1: dq * q1,
        d2: dq * q2,
        d11: dqq * q1 * q1 + dq * q11,
        d12: dqq * q1 * q2 + dq * q12,
        d22: dqq * q2 * q2 + dq * q22,
    }
}

/// A graph problem: vertices at fixed `s[i]` with free offsets `y[i]`.
/// Segment problems pin `y[0] = y[N] = 0`; periodic problems identify
/// vertex `N` with vertex `0`.
pub(crate) struct GraphProblem<'a> {
    pub metric: &'a FinslerMetric,
    pub s: Vec<f64>,
    pub periodic: bool,
    /// `frame * translation(s[i])`, reused by every field evaluation.
    normals: Vec<MobiusMap>,
}

pub(crate) struct Evaluation {
    pub energy: f64,
    pub grad: Vec<f64>,
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; for periodic problems the last entry
    /// couples `N - 1` and `0`.
    pub off: Vec<f64>,
}

impl<'a> GraphProblem<'a> {
    pub fn new(metric: &'a FinslerMetric, frame: FermiFrame, s: Vec<f64>, periodic: bool) -> Self {
        let normals = match metric.kind() {
            MetricKind::Conformal(_) => s
                .iter()
                .map(|&si| *frame.map() * MobiusMap::translation(si))
                .collect(),
            _ => Vec::new(),
        };
        Self {
            metric,
            s,
            periodic,
            normals,
        }
    }

    pub fn n(&self) -> usize {
        self.s.len() - 1
    }

    fn conformal_field(&self) -> Option<&InvariantField> {
        match self.metric.kind() {
            MetricKind::Conformal(f) => Some(f),
            _ => None,
        }
    }

    fn jet(&self, field: &InvariantField, i: usize, y: f64) -> Result<FieldJet> {
        let n = self.normals[i] * MobiusMap::translation_imag(y) * MobiusMap::rotation(FRAC_PI_2);
        field.jet(&n)
    }

    /// Conformal weights at the vertices; ones for the other families.
    pub fn weights(&self, y: &[f64]) -> Result<Vec<FieldJet>> {
        let n = self.n();
        match self.conformal_field() {
            None => Ok(vec![
                FieldJet {
                    value: 1.0,
                    d1: 0.0,
                    d2: 0.0,
                };
                n + 1
            ]),
            Some(field) => {
                let count = if self.periodic { n } else { n + 1 };
                let mut jets = (0..count)
                    .map(|i| self.jet(field, i, y[i]))
                    .collect::<Result<Vec<_>>>()?;
                if self.periodic {
                    // Vertex N is the image of vertex 0 under the deck map.
                    jets.push(jets[0]);
                }
                Ok(jets)
            }
        }
    }

    /// Discrete energy `sum (f_i + f_{i+1}) / 2 * d_i` (the constant exact
    /// term of a Randers metric omitted).
    pub fn energy(&self, y: &[f64]) -> Result<f64> {
        let w = self.weights(y)?;
        Ok((0..self.n())
            .map(|i| {
                0.5 * (w[i].value + w[i + 1].value)
                    * edge_length(y[i], y[i + 1], self.s[i + 1] - self.s[i])
            })
            .sum())
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<Evaluation> {
        let n = self.n();
        let w = self.weights(y)?;
        let mut grad = vec![0.0; n + 1];
        let mut diag = vec![0.0; n + 1];
        let mut off = vec![0.0; n];
        let mut energy = 0.0;
        for i in 0..n {
            let e = edge(y[i], y[i + 1], self.s[i + 1] - self.s[i]);
            let (a, b) = (w[i], w[i + 1]);
            let m = 0.5 * (a.value + b.value);
            energy += m * e.d;
            grad[i] += 0.5 * a.d1 * e.d + m * e.d1;
            grad[i + 1] += 0.5 * b.d1 * e.d + m * e.d2;
            diag[i] += 0.5 * a.d2 * e.d + a.d1 * e.d1 + m * e.d11;
            diag[i + 1] += 0.5 * b.d2 * e.d + b.d1 * e.d2 + m * e.d22;
            off[i] += 0.5 * a.d1 * e.d2 + 0.5 * b.d1 * e.d1 + m * e.d12;
        }
        if self.periodic {
            grad[0] += grad[n];
            diag[0] += diag[n];
        }
        grad.truncate(n + usize::from(!self.periodic));
        diag.truncate(n + usize::from(!self.periodic));
        Ok(Evaluation {
            energy,
            grad,
            diag,
            off,
        })
    }
}

/// Solves the symmetric tridiagonal system; `None` unless positive definite.
pub(crate) fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let prev = if i == 0 {
            0.0
        } else {
            l[i - 1] * l[i - 1] * d[i - 1]
        };
        d[i] = diag[i] - prev;
        if !(d[i] > 0.0) {
            return None;
        }
        if i + 1 < n {
            l[i] = off[i] / d[i];
        }
        z[i] = rhs[i] - if i == 0 { 0.0 } else { l[i - 1] * z[i - 1] };
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = z[i] / d[i] - if i + 1 < n { l[i] * x[i + 1] } else { 0.0 };
    }
    Some(x)
}

/// Solves a symmetric cyclic tridiagonal system whose corner entry couples
/// the first and last unknowns, by a rank-one correction.
pub(crate) fn solve_spd_cyclic(
    diag: &[f64],
    off: &[f64],
    corner: f64,
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return None;
    }
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= corner * corner / gamma;
    let x = solve_spd_tridiagonal(&d, &off[..n - 1], rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner;
    let z = solve_spd_tridiagonal(&d, &off[..n - 1], &u)?;
    let denom = 1.0 + z[0] + corner * z[n - 1] / gamma;
    if !(denom.abs() > 1e-300) {
        return None;
    }
    let k = (x[0] + corner * x[n - 1] / gamma) / denom;
    Some(x.iter().zip(&z).map(|(xi, zi)| xi - k * zi).collect())
}

/// Outcome of a Newton solve.
#[derive(Debug, Clone)]
pub(crate) struct NewtonResult {
    pub y: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub converged: bool,
    /// Stopped because no further decrease was representable.
    pub stalled: bool,
}

/// Free unknowns of `y` for the problem's boundary conditions.
fn free_range(problem: &GraphProblem<'_>) -> core::ops::Range<usize> {
    if problem.periodic {
        0..problem.n()
    } else {
        1..problem.n()
    }
}

/// Largest change of any offset in one Newton step.
const MAX_STEP: f64 = 1.0;

pub(crate) fn newton(
    problem: &GraphProblem<'_>,
    mut y: Vec<f64>,
    grad_tol: f64,
    max_iter: usize,
) -> Result<NewtonResult> {
    let n = problem.n();
    let free = free_range(problem);
    let mut mu = 0.0;
    let mut eval = problem.evaluate(&y)?;
    let mut grad_norm = free.clone().map(|i| eval.grad[i].abs()).fold(0.0, f64::max);
    let mut stalls = 0;
    let mut stalled = false;
    for _ in 0..max_iter {
        if grad_norm < grad_tol || free.is_empty() {
            break;
        }
        let scale = free
            .clone()
            .map(|i| eval.diag[i].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let rhs: Vec<f64> = free.clone().map(|i| -eval.grad[i]).collect();
        let mut accepted = None;
        for _ in 0..10 {
            let diag: Vec<f64> = free.clone().map(|i| eval.diag[i] + mu).collect();
            let step = if problem.periodic {
                solve_spd_cyclic(&diag, &eval.off[..n], eval.off[n - 1], &rhs)
            } else {
                solve_spd_tridiagonal(&diag, &eval.off[1..n - 1], &rhs)
            };
            let slope = step.as_ref().map_or(f64::NAN, |st| {
                st.iter().zip(&rhs).map(|(s, r)| -s * r).sum()
            });
            let (Some(mut step), true) = (step, slope < 0.0) else {
                mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
                continue;
            };
            let longest = step.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            let mut slope = slope;
            if longest > MAX_STEP {
                let c = MAX_STEP / longest;
                step.iter_mut().for_each(|v| *v *= c);
                slope *= c;
            }
            // Armijo backtracking; unrepresentable trial points count as
            // infinitely long.
            let mut alpha = 1.0;
            let mut trial = y.clone();
            for _ in 0..12 {
                for (k, i) in free.clone().enumerate() {
                    trial[i] = y[i] + alpha * step[k];
                }
                if problem.periodic {
                    trial[n] = trial[0];
                }
                let e = problem.energy(&trial).unwrap_or(f64::INFINITY);
                if e <= eval.energy + 1e-4 * alpha * slope {
                    accepted = Some((alpha, e, trial));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
        }
        let Some((alpha, e, trial)) = accepted else {
            // No decrease is representable any more.
            stalled = true;
            break;
        };
        if alpha == 1.0 {
            mu *= 0.25;
            if mu < 1e-14 * scale {
                mu = 0.0;
            }
        }
        // Decreases at the rounding level mean the gradient cannot be
        // reduced further (the field is only piecewise smooth at that level).
        if eval.energy - e <= 1e-13 * eval.energy.abs() {
            stalls += 1;
        } else {
            stalls = 0;
        }
        y = trial;
        eval = problem.evaluate(&y)?;
        grad_norm = free.clone().map(|i| eval.grad[i].abs()).fold(0.0, f64::max);
        if stalls >= 3 {
            stalled = true;
            break;
        }
    }
    Ok(NewtonResult {
        y,
        energy: eval.energy,
        converged: grad_norm < grad_tol,
        grad_norm,
        stalled,
    })
}

/// Doubles the resolution of uniformly spaced samples by cubic
/// interpolation at the midpoints.
pub(crate) fn refine(y: &[f64], periodic: bool) -> Vec<f64> {
    let n = y.len() - 1;
    let at = |i: isize| -> f64 {
        if periodic {
            y[i.rem_euclid(n as isize) as usize]
        } else {
            y[i.clamp(0, n as isize) as usize]
        }
    };
    let mut out = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        out.push(y[i]);
        let ii = i as isize;
        let mid = if periodic || (i > 0 && i + 1 < n) {
            (-at(ii - 1) + 9.0 * at(ii) + 9.0 * at(ii + 1) - at(ii + 2)) / 16.0
        } else if i == 0 && n >= 2 {
            (3.0 * y[0] + 6.0 * y[1] - y[2]) / 8.0
        } else if n >= 2 {
            (3.0 * y[n] + 6.0 * y[n - 1] - y[n - 2]) / 8.0
        } else {
            0.5 * (y[0] + y[1])
        };
        out.push(mid);
    }
    out.push(y[n]);
    out
}

/// Linear interpolation of graph samples at `s`.
pub(crate) fn sample(s: &[f64], y: &[f64], at: f64) -> f64 {
    let k = s.partition_point(|&v| v <= at);
    if k == 0 {
        return y[0];
    }
    if k >= s.len() {
        return y[s.len() - 1];
    }
    let t = (at - s[k - 1]) / (s[k] - s[k - 1]);
    y[k - 1] + t * (y[k] - y[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::DiscPoint;

    #[test]
    fn edge_matches_point_distance() {
        let frame = FermiFrame::from_map(MobiusMap::rotation(0.3) * MobiusMap::translation(0.7));
        for &(y1, y2, ds) in &[(0.1, -0.4, 0.3), (1.5, 1.2, 0.01), (-2.0, 0.5, 2.0)] {
            let p = frame.disc_point(1.0, y1).unwrap();
            let q = frame.disc_point(1.0 + ds, y2).unwrap();
            let d = crate::hyperbolic::dist_g(&p, &q);
            assert!((edge_length(y1, y2, ds) - d).abs() < 1e-12);
            assert!((edge(y1, y2, ds).d - d).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &(y1, y2, ds) in &[
            (0.1, -0.4, 0.3),
            (1.5, 1.2, 0.01),
            (-2.0, 0.5, 2.0),
            (0.0, 0.0, 0.05),
        ] {
            let e = edge(y1, y2, ds);
            let f = |a: f64, b: f64| edge_length(a, b, ds);
            assert!((e.d1 - (f(y1 + h, y2) - f(y1 - h, y2)) / (2.0 * h)).abs() < 1e-8);
            assert!((e.d2 - (f(y1, y2 + h) - f(y1, y2 - h)) / (2.0 * h)).abs() < 1e-8);
            let e1p = edge(y1 + h, y2, ds);
            let e1m = edge(y1 - h, y2, ds);
            assert!((e.d11 - (e1p.d1 - e1m.d1) / (2.0 * h)).abs() < 1e-5 * (1.0 + e.d11.abs()));
            assert!((e.d12 - (e1p.d2 - e1m.d2) / (2.0 * h)).abs() < 1e-5 * (1.0 + e.d12.abs()));
            let e2p = edge(y1, y2 + h, ds);
            let e2m = edge(y1, y2 - h, ds);
            assert!((e.d22 - (e2p.d2 - e2m.d2) / (2.0 * h)).abs() < 1e-5 * (1.0 + e.d22.abs()));
        }
        let _ = DiscPoint::origin();
    }

    fn dense(diag: &[f64], off: &[f64], corner: f64) -> Vec<Vec<f64>> {
        let n = diag.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i + 1 < n {
                a[i][i + 1] = off[i];
                a[i + 1][i] = off[i];
            }
        }
        a[0][n - 1] += corner;
        a[n - 1][0] += corner;
        a
    }

    #[test]
    fn tridiagonal_solvers() {
        let diag = [4.0, 5.0, 6.0, 4.5, 5.5];
        let off = [1.0, -1.2, 0.7, 0.3];
        let rhs = [1.0, 2.0, -1.0, 0.5, 3.0];
        let x = solve_spd_tridiagonal(&diag, &off, &rhs).unwrap();
        let a = dense(&diag, &off, 0.0);
        for i in 0..5 {
            let r: f64 = (0..5).map(|j| a[i][j] * x[j]).sum();
            assert!((r - rhs[i]).abs() < 1e-12);
        }
        let x = solve_spd_cyclic(&diag, &off, 0.9, &rhs).unwrap();
        let a = dense(&diag, &off, 0.9);
        for i in 0..5 {
            let r: f64 = (0..5).map(|j| a[i][j] * x[j]).sum();
            assert!((r - rhs[i]).abs() < 1e-12);
        }
        assert!(solve_spd_tridiagonal(&[1.0, -1.0], &[0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn refinement_interpolates_cubics_exactly() {
        let n = 16;
        let f = |t: f64| 0.3 * t * t * t - t * t + 0.5;
        let y: Vec<f64> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        let fine = refine(&y, false);
        for (i, v) in fine.iter().enumerate().skip(3).take(2 * n - 6) {
            assert!((v - f(i as f64 / (2 * n) as f64)).abs() < 1e-14);
        }
        // Periodic data with vertex N equal to vertex 0.
        let y: Vec<f64> = (0..=n)
            .map(|i| (core::f64::consts::TAU * i as f64 / n as f64).sin())
            .collect();
        let fine = refine(&y, true);
        assert_eq!(fine.len(), 2 * n + 1);
        assert!((fine[2 * n] - fine[0]).abs() < 1e-15);
        assert!((fine[1] - (core::f64::consts::TAU / (2 * n) as f64).sin()).abs() < 1e-3);
    }
}
