//! Transversal intersections of two polylines.
//!
//! Each vertex of the second path gets a signed side with respect to the
//! nearest edge of the first; sign changes beyond a small hysteresis band are
//! located by bisection along the second path.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{cumulative, point_along, PolylinePath};
use crate::hyperbolic::{dist_g, DiscPoint, FermiFrame};
use crate::Result;

/// Offsets below this are treated as lying on the first path.
const SIDE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Cumulative g-length along the first path.
    pub t1: f64,
    /// Cumulative g-length along the second path.
    pub t2: f64,
    pub point: DiscPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    /// Every vertex of the second path beyond `delta` lies on the first path.
    pub overlap: bool,
    /// Smallest g-distance from a vertex of the second path beyond `delta`
    /// to the first path.
    pub min_separation: f64,
}

/// Position of a point relative to the nearest edge of a polyline.
#[derive(Debug, Clone, Copy)]
struct Side {
    /// Signed offset, positive on the left; zero when the foot of the point
    /// lies beyond an end of the polyline.
    y: f64,
    dist: f64,
    t: f64,
    edge: usize,
}

struct Edges {
    frames: Vec<Option<(FermiFrame, f64)>>,
    knots: Vec<f64>,
}

impl Edges {
    fn new(path: &PolylinePath) -> Result<Self> {
        let v = path.vertices();
        let frames = v
            .windows(2)
            .map(|w| {
                if dist_g(&w[0], &w[1]) == 0.0 {
                    Ok(None)
                } else {
                    FermiFrame::segment(&w[0], &w[1]).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            frames,
            knots: path.cumulative_g_length(),
        })
    }

    fn relative(&self, i: usize, p: &DiscPoint, last: usize) -> Option<Side> {
        let (frame, len) = self.frames[i]?;
        let (s, y) = frame.coords(p);
        let before = s < 0.0 && i == 0;
        let after = s > len && i == last;
        let inside = (0.0..=len).contains(&s);
        let dist = if inside {
            y.abs()
        } else {
            // Distance to the nearer end of the edge.
            let (s_end, _) = if s < 0.0 { (0.0, 0.0) } else { (len, 0.0) };
            let c = (s - s_end).cosh() * y.cosh();
            c.max(1.0).acosh()
        };
        Some(Side {
            y: if before || after { 0.0 } else { y },
            dist,
            t: self.knots[i] + s.clamp(0.0, len),
            edge: i,
        })
    }

    fn nearest(&self, p: &DiscPoint, hint: Option<usize>) -> Option<Side> {
        let last = self.frames.len().checked_sub(1)?;
        let better = |a: Option<Side>, b: Option<Side>| match (a, b) {
            (Some(x), Some(y)) => Some(if y.dist < x.dist { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        };
        if let Some(h) = hint {
            // Walk downhill from the previous edge.
            let mut i = h.min(last);
            let mut best = self.relative(i, p, last);
            loop {
                let mut moved = false;
                for j in [i.wrapping_sub(1), i + 1] {
                    if j <= last {
                        let cand = self.relative(j, p, last);
                        if let (Some(c), Some(b)) = (cand, best) {
                            if c.dist < b.dist - 1e-15 {
                                best = cand;
                                i = j;
                                moved = true;
                            }
                        }
                    }
                }
                if !moved {
                    break;
                }
            }
            if best.is_some_and(|b| b.dist < 0.5) {
                return best;
            }
        }
        (0..=last).fold(None, |acc, i| better(acc, self.relative(i, p, last)))
    }
}

/// g-distance from each point to the polyline.
pub fn distance_to_path(path: &PolylinePath, points: &[DiscPoint]) -> Result<Vec<f64>> {
    let edges = Edges::new(path)?;
    if edges.frames.is_empty() {
        return Ok(points.iter().map(|p| dist_g(p, path.first())).collect());
    }
    let mut hint = None;
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let side = edges.nearest(p, hint);
        hint = side.map(|s| s.edge);
        out.push(side.map_or_else(|| dist_g(p, path.first()), |s| s.dist));
    }
    Ok(out)
}

fn sign(y: f64) -> i8 {
    if y > SIDE_TOL {
        1
    } else if y < -SIDE_TOL {
        -1
    } else {
        0
    }
}

/// Crossings of `p2` through `p1` at parameters beyond `delta` on both paths.
pub fn detect_crossings(
    p1: &PolylinePath,
    p2: &PolylinePath,
    delta: f64,
) -> Result<CrossingReport> {
    let edges = Edges::new(p1)?;
    let v2 = p2.vertices();
    let knots2 = cumulative(&p2.edge_lengths());
    let mut crossings = Vec::new();
    let mut min_separation = f64::INFINITY;
    let mut considered = 0usize;
    let mut on_path = 0usize;
    let mut last_sign: Option<(i8, usize)> = None;
    let mut hint = None;
    for (j, p) in v2.iter().enumerate() {
        let Some(side) = edges.nearest(p, hint) else {
            break;
        };
        hint = Some(side.edge);
        if knots2[j] > delta {
            considered += 1;
            min_separation = min_separation.min(side.dist);
            if side.dist <= SIDE_TOL {
                on_path += 1;
            }
        }
        let sg = sign(side.y);
        if sg == 0 {
            continue;
        }
        if let Some((prev, k)) = last_sign {
            if prev != sg {
                if let Some(c) = locate(&edges, v2, &knots2, k, j, prev)? {
                    if c.t1 > delta && c.t2 > delta {
                        crossings.push(c);
                    }
                }
            }
        }
        last_sign = Some((sg, j));
    }
    let overlap = considered > 0 && on_path == considered;
    if overlap {
        crossings.clear();
    }
    Ok(CrossingReport {
        crossings,
        overlap,
        min_separation: if considered == 0 {
            f64::NAN
        } else {
            min_separation
        },
    })
}

/// Bisection for the side change of `p2` between vertices `k` and `j`.
fn locate(
    edges: &Edges,
    v2: &[DiscPoint],
    knots2: &[f64],
    k: usize,
    j: usize,
    sign_k: i8,
) -> Result<Option<Crossing>> {
    let (mut lo, mut hi) = (knots2[k], knots2[j]);
    let mut hint = None;
    for _ in 0..80 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p = point_along(v2, knots2, mid)?;
        let Some(side) = edges.nearest(&p, hint) else {
            return Ok(None);
        };
        hint = Some(side.edge);
        if side.y * f64::from(sign_k) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t2 = 0.5 * (lo + hi);
    let point = point_along(v2, knots2, t2)?;
    let Some(side) = edges.nearest(&point, hint) else {
        return Ok(None);
    };
    // A sign change caused by passing around an end of the first path is
    // not a crossing.
    if side.dist > 1e-7 {
        return Ok(None);
    }
    Ok(Some(Crossing {
        t1: side.t,
        t2,
        point,
    }))
}
