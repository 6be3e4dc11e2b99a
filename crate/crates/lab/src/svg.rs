//! Disc-chart SVG figures. F-objects are drawn solid black, g-objects gray.

use std::fmt::Write as _;
use std::path::Path;

use minrays::hyperbolic::FermiFrame;
use minrays::{DiscPoint, GeneratorSet, HyperbolicGeodesic};

use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub stroke: String,
    pub width: f64,
    pub dashed: bool,
}

impl Style {
    pub fn f_object() -> Self {
        Self {
            stroke: "#000000".into(),
            width: 1.4,
            dashed: false,
        }
    }

    pub fn g_object() -> Self {
        Self {
            stroke: "#9a9a9a".into(),
            width: 1.0,
            dashed: false,
        }
    }

    pub fn colored(stroke: &str) -> Self {
        Self {
            stroke: stroke.into(),
            width: 1.2,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone)]
pub enum Element {
    Path {
        points: Vec<DiscPoint>,
        style: Style,
    },
    Geodesic {
        geodesic: HyperbolicGeodesic,
        style: Style,
    },
    Point {
        point: DiscPoint,
        style: Style,
    },
    /// The fundamental octagon, optionally with its 8 neighbors.
    Octagon {
        gens: Box<GeneratorSet>,
        translates: bool,
    },
    /// Grid values drawn as colored dots.
    Heat {
        points: Vec<DiscPoint>,
        values: Vec<f64>,
    },
}

const SIZE: f64 = 600.0;
const MARGIN: f64 = 10.0;

fn chart(p: &DiscPoint) -> (f64, f64) {
    let z = p.to_complex();
    let r = 0.5 * SIZE - MARGIN;
    (0.5 * SIZE + r * z.re, 0.5 * SIZE - r * z.im)
}

fn polyline(out: &mut String, points: &[(f64, f64)], style: &Style) {
    if points.len() < 2 {
        return;
    }
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{x:.3},{y:.3}"))
        .collect();
    let dash = if style.dashed {
        " stroke-dasharray=\"4 3\""
    } else {
        ""
    };
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"{dash}/>",
        coords.join(" "),
        style.stroke,
        style.width
    );
}

/// Chart points along the g-segment from `p` to `q`.
fn segment_points(p: &DiscPoint, q: &DiscPoint, steps: usize) -> Vec<(f64, f64)> {
    let Ok((frame, len)) = FermiFrame::segment(p, q) else {
        return vec![chart(p)];
    };
    (0..=steps)
        .filter_map(|k| frame.disc_point(len * k as f64 / steps as f64, 0.0).ok())
        .map(|v| chart(&v))
        .collect()
}

fn octagon(out: &mut String, vertices: &[DiscPoint], style: &Style) {
    let mut pts = Vec::new();
    for k in 0..vertices.len() {
        pts.extend(segment_points(
            &vertices[k],
            &vertices[(k + 1) % vertices.len()],
            24,
        ));
    }
    pts.push(pts[0]);
    polyline(out, &pts, style);
}

/// Viridis-like ramp on [0, 1].
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let x = t.clamp(0.0, 1.0) * 4.0;
    let i = (x.floor() as usize).min(3);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// SVG 1.1 of the unit disc with its boundary circle and the elements.
pub fn render_disc_svg(elements: &[Element]) -> String {
    let mut out = String::new();
    let c = 0.5 * SIZE;
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        out,
        "<circle cx=\"{c}\" cy=\"{c}\" r=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>",
        c - MARGIN
    );
    for e in elements {
        match e {
            Element::Path { points, style } => {
                let pts: Vec<_> = points.iter().map(chart).collect();
                polyline(&mut out, &pts, style);
            }
            Element::Geodesic { geodesic, style } => {
                let pts: Vec<_> = (-300..=300)
                    .filter_map(|k| geodesic.point_at(k as f64 / 12.0).ok())
                    .map(|p| chart(&p))
                    .collect();
                polyline(&mut out, &pts, style);
            }
            Element::Point { point, style } => {
                let (x, y) = chart(point);
                let _ = writeln!(
                    out,
                    "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2.5\" fill=\"{}\"/>",
                    style.stroke
                );
            }
            Element::Octagon { gens, translates } => {
                let vertices = gens.vertices().to_vec();
                octagon(&mut out, &vertices, &Style::colored("#4a6fa5"));
                if *translates {
                    for m in gens.generators().iter().flat_map(|g| [*g, g.inverse()]) {
                        let image: Vec<DiscPoint> =
                            vertices.iter().filter_map(|v| m.apply(v).ok()).collect();
                        octagon(&mut out, &image, &Style::colored("#a8bcd8"));
                    }
                }
            }
            Element::Heat { points, values } => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = if hi > lo { hi - lo } else { 1.0 };
                for (p, v) in points.iter().zip(values) {
                    let (x, y) = chart(p);
                    let r = (1.0 - p.to_complex().norm_sqr()) * 6.0 + 0.6;
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.2}\" fill=\"{}\"/>",
                        ramp((v - lo) / span)
                    );
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, elements: &[Element]) -> Result<(), LabError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    std::fs::write(path, render_disc_svg(elements)).map_err(|e| LabError::io(path, e))
}
