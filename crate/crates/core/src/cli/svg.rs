//! SVG 1.1 figures of 2D configurations and orthographic views of 3D ones.

use std::fmt::Write;

use crate::error::{Error, Result};

/// Largest distance between a drawn conic and its polyline.
pub const CURVE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Quadric outlines.
    Conic,
    Focal,
    Rectilinear,
    Geodesic,
    Curvature,
    Tangent,
    Marker,
}

impl Style {
    /// Colour, stroke width in pixels and dash pattern.
    fn pen(self) -> (&'static str, f64, Option<&'static str>) {
        match self {
            Style::Conic => ("#444444", 1.0, None),
            Style::Focal => ("#999999", 1.0, Some("4 3")),
            Style::Rectilinear => ("#1f77b4", 1.5, None),
            Style::Geodesic => ("#2ca02c", 1.5, None),
            Style::Curvature => ("#d62728", 2.0, None),
            Style::Tangent => ("#ff7f0e", 1.5, None),
            Style::Marker => ("#000000", 3.0, None),
        }
    }

    fn class(self) -> &'static str {
        match self {
            Style::Conic => "conic",
            Style::Focal => "focal",
            Style::Rectilinear => "rectilinear",
            Style::Geodesic => "geodesic",
            Style::Curvature => "curvature",
            Style::Tangent => "tangent",
            Style::Marker => "marker",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Open or closed polyline in scene coordinates.
    Path { points: Vec<[f64; 2]>, closed: bool, style: Style },
    Dot { at: [f64; 2], style: Style },
}

/// A planar scene; 3D geometry is added through [`Projection`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub title: String,
    pub elements: Vec<Element>,
}

/// Orthographic view from azimuth and elevation (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Default for Projection {
    fn default() -> Self {
        Self { azimuth: 0.6, elevation: 0.45 }
    }
}

impl Projection {
    pub fn project(&self, p: &[f64]) -> [f64; 2] {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        let x = ca * p[0] - sa * p[1];
        let depth = sa * p[0] + ca * p[1];
        [x, ce * p[2] - se * depth]
    }
}

/// Subdivide `curve` on `[t0, t1]` until every midpoint is within `tol` of
/// its chord.
pub fn adaptive_polyline<F: Fn(f64) -> [f64; 2]>(curve: F, t0: f64, t1: f64, tol: f64) -> Vec<[f64; 2]> {
    fn refine<F: Fn(f64) -> [f64; 2]>(c: &F, a: f64, pa: [f64; 2], b: f64, pb: [f64; 2], tol: f64, depth: u32, out: &mut Vec<[f64; 2]>) {
        let m = 0.5 * (a + b);
        let pm = c(m);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        let dist = if len == 0.0 {
            (pm[0] - pa[0]).hypot(pm[1] - pa[1])
        } else {
            ((pm[0] - pa[0]) * dy - (pm[1] - pa[1]) * dx).abs() / len
        };
        if depth < 24 && (dist > tol || depth < 3) {
            refine(c, a, pa, m, pm, tol, depth + 1, out);
            refine(c, m, pm, b, pb, tol, depth + 1, out);
        } else {
            out.push(pb);
        }
    }
    let p0 = curve(t0);
    let mut out = vec![p0];
    refine(&curve, t0, p0, t1, curve(t1), tol, 0, &mut out);
    out
}

impl Scene {
    pub fn new(title: &str) -> Self {
        Self { title: title.to_string(), elements: Vec::new() }
    }

    /// The ellipse `x²/a₁ + y²/a₂ = 1`.
    pub fn ellipse(&mut self, a1: f64, a2: f64, style: Style) {
        let (s1, s2) = (a1.sqrt(), a2.sqrt());
        let mut points = adaptive_polyline(|t| [s1 * t.cos(), s2 * t.sin()], 0.0, std::f64::consts::TAU, CURVE_TOL);
        points.pop();
        self.elements.push(Element::Path { points, closed: true, style });
    }

    /// The three principal sections of the ellipsoid with squared semiaxes `b`.
    pub fn ellipsoid(&mut self, b: [f64; 3], proj: &Projection, style: Style) {
        let s = b.map(f64::sqrt);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let curve = |t: f64| {
                let mut p = [0.0; 3];
                p[i] = s[i] * t.cos();
                p[j] = s[j] * t.sin();
                proj.project(&p)
            };
            let mut points = adaptive_polyline(curve, 0.0, std::f64::consts::TAU, CURVE_TOL);
            points.pop();
            self.elements.push(Element::Path { points, closed: true, style });
        }
    }

    pub fn polyline(&mut self, points: Vec<[f64; 2]>, closed: bool, style: Style) {
        self.elements.push(Element::Path { points, closed, style });
    }

    pub fn polyline3(&mut self, points: &[Vec<f64>], proj: &Projection, style: Style) {
        let pts = points.iter().map(|p| proj.project(p)).collect();
        self.polyline(pts, false, style);
    }

    pub fn dot(&mut self, at: [f64; 2]) {
        self.elements.push(Element::Dot { at, style: Style::Marker });
    }

    fn bounds(&self) -> Option<[f64; 4]> {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        let mut any = false;
        let mut take = |p: &[f64; 2]| {
            any = true;
            b = [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])];
        };
        for e in &self.elements {
            match e {
                Element::Path { points, .. } => points.iter().for_each(&mut take),
                Element::Dot { at, .. } => take(at),
            }
        }
        any.then_some(b)
    }
}

/// SVG document with the y axis pointing down and a viewBox fitted to the
/// scene plus a 5 % margin on every side.
pub fn render_svg(scene: &Scene) -> Result<String> {
    let [x0, y0, x1, y1] = scene.bounds().ok_or(Error::EmptyScene)?;
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let margin = 0.05 * span;
    let (vx, vy) = (x0 - margin, -y1 - margin);
    let (vw, vh) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let scale = 800.0 / vw.max(vh);
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.1}" height="{:.1}" viewBox="{vx:.6} {vy:.6} {vw:.6} {vh:.6}">"#,
        vw * scale,
        vh * scale
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(&scene.title)).unwrap();
    let px = 1.0 / scale;
    writeln!(s, r#"<g fill="none" stroke-linejoin="round">"#).unwrap();
    for e in &scene.elements {
        match e {
            Element::Path { points, closed, style } => {
                let mut d = String::new();
                for (k, p) in points.iter().enumerate() {
                    write!(d, "{}{:.9} {:.9} ", if k == 0 { "M" } else { "L" }, p[0], 0.0 - p[1]).unwrap();
                }
                if *closed {
                    d.push('Z');
                }
                let (colour, width, dash) = style.pen();
                let dash = dash.map(|p| {
                    let scaled: Vec<String> = p.split(' ').map(|v| format!("{:.6}", v.parse::<f64>().unwrap() * px)).collect();
                    format!(r#" stroke-dasharray="{}""#, scaled.join(" "))
                });
                writeln!(
                    s,
                    r#"<path class="{}" stroke="{colour}" stroke-width="{:.6}"{} d="{}"/>"#,
                    style.class(),
                    width * px,
                    dash.unwrap_or_default(),
                    d.trim_end()
                )
                .unwrap();
            }
            Element::Dot { at, style } => {
                let (colour, radius, _) = style.pen();
                writeln!(
                    s,
                    r#"<circle class="{}" fill="{colour}" stroke="none" cx="{:.9}" cy="{:.9}" r="{:.6}"/>"#,
                    style.class(),
                    at[0],
                    0.0 - at[1],
                    radius * px
                )
                .unwrap();
            }
        }
    }
    writeln!(s, "</g>\n</svg>").unwrap();
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
