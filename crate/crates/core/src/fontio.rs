//! Vectorisation of glyph rasters and font output.
//!
//! Contours run through the centres of boundary pixels (Moore-neighbour
//! tracing) and are mapped onto a 1000-unit em square: the raster's longer
//! side spans the em, the top edge sits at the ascent and y points up.
//! Outer contours are clockwise and holes counter-clockwise, as seen on
//! screen.
//!
//! # SFD subset
//!
//! [`export_sfd`] writes, and [`parse_sfd`] reads back, this line-oriented
//! subset of FontForge's native format (LF line ends):
//!
//! ```text
//! SplineFontDB: 3.0                 first line, exactly
//! FontName: <name without spaces>
//! FullName: <family>
//! FamilyName: <family>
//! Ascent: 800
//! Descent: 200
//! Encoding: UnicodeFull
//! BeginChars: 1114112 <glyph count>
//!
//! StartChar: uni0A95                one block per glyph, codepoint order
//! Encoding: 2709 2709 <glyph index>
//! Width: <advance>
//! Fore
//! SplineSet
//! <x> <y> m 1                       contour start
//!  <x> <y> l 1                      line to; the last one repeats the start
//! EndSplineSet
//! EndChar
//!
//! EndChars
//! EndSplineFont
//! ```
//!
//! Other header lines FontForge emits (layers, version, flags) are written
//! for compatibility and skipped by the reader. Numbers are integers or
//! decimals with at most five places, trailing zeros trimmed.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::{connected_components, BinaryRaster, Point};

pub const EM: f64 = 1000.0;
pub const ASCENT: i32 = 800;
pub const DESCENT: i32 = 200;
/// Side bearing added on each side of the ink, em units.
pub const SIDE_BEARING: f64 = 50.0;
/// Codepoints a font may contain.
pub const GUJARATI: std::ops::RangeInclusive<u32> = 0x0A80..=0x0AFF;

pub type EmPoint = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Outer,
    Hole,
}

/// Closed polygon in em units (y up). The closing edge is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<EmPoint>,
}

impl Contour {
    /// Shoelace area with y flipped to screen orientation: positive for
    /// clockwise outer contours.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut s = 0.0;
        for i in 0..n {
            let (x0, y0) = self.points[i];
            let (x1, y1) = self.points[(i + 1) % n];
            s += x0 * -y1 - x1 * -y0;
        }
        s / 2.0
    }

    pub fn orientation(&self) -> Orientation {
        if self.signed_area() >= 0.0 {
            Orientation::Outer
        } else {
            Orientation::Hole
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn translated(&self, dx: f64) -> Contour {
        Contour {
            points: self.points.iter().map(|&(x, y)| (x + dx, y)).collect(),
        }
    }
}

/// Pixel ↔ em mapping for a raster of the given size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmMap {
    /// Em units per pixel.
    pub scale: f64,
}

impl EmMap {
    pub fn for_size(width: usize, height: usize) -> Self {
        Self {
            scale: EM / width.max(height).max(1) as f64,
        }
    }

    pub fn to_em(&self, p: Point) -> EmPoint {
        (
            p.x as f64 * self.scale,
            ASCENT as f64 - p.y as f64 * self.scale,
        )
    }

    pub fn to_pixel(&self, (x, y): EmPoint) -> (f64, f64) {
        (x / self.scale, (ASCENT as f64 - y) / self.scale)
    }
}

/// Clockwise neighbour order on screen, starting west.
const MOORE: [(i32, i32); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_step(img: &BinaryRaster, p: Point, back: Point) -> Option<(Point, Point)> {
    let d = (back.x - p.x, back.y - p.y);
    let start = MOORE
        .iter()
        .position(|&m| m == d)
        .expect("backtrack is a neighbour");
    for i in 1..=8 {
        let (dx, dy) = MOORE[(start + i) % 8];
        let q = Point::new(p.x + dx, p.y + dy);
        if img.at(q) {
            let (bx, by) = MOORE[(start + i - 1) % 8];
            return Some((q, Point::new(p.x + bx, p.y + by)));
        }
    }
    None
}

/// Boundary pixels met walking around the ink from `s`, whose background
/// neighbour `back` fixes the side being followed. Stops when the first
/// move would repeat.
fn moore_trace(img: &BinaryRaster, s: Point, back: Point) -> Vec<Point> {
    let Some((p1, c1)) = moore_step(img, s, back) else {
        return vec![s];
    };
    let mut out = vec![s];
    let (mut p, mut c) = (p1, c1);
    let limit = 4 * img.width() * img.height() + 8;
    while out.len() <= limit {
        let (q, cq) = moore_step(img, p, c).expect("connected to the previous pixel");
        if p == s && q == p1 {
            break;
        }
        out.push(p);
        p = q;
        c = cq;
    }
    out
}

fn shoelace(pts: &[Point]) -> i64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64
        })
        .sum()
}

/// Background regions (4-connected) that do not reach the raster border;
/// each given by its first pixel in row-major order.
fn hole_starts(img: &BinaryRaster) -> Vec<Point> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut seen = vec![false; (w * h) as usize];
    let mut starts = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if img.get(x, y) || seen[(y * w + x) as usize] {
                continue;
            }
            let mut border = false;
            let mut queue = VecDeque::from([Point::new(x, y)]);
            seen[(y * w + x) as usize] = true;
            while let Some(p) = queue.pop_front() {
                border |= p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1;
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let q = Point::new(p.x + dx, p.y + dy);
                    if img.in_bounds(q.x, q.y) && !img.at(q) && !seen[(q.y * w + q.x) as usize] {
                        seen[(q.y * w + q.x) as usize] = true;
                        queue.push_back(q);
                    }
                }
            }
            if !border {
                starts.push(Point::new(x, y));
            }
        }
    }
    starts
}

/// Outer boundary of every 8-connected ink component and the boundary of
/// every hole, in em units. Traces of fewer than three pixels (specks) are
/// dropped.
pub fn trace_contours(img: &BinaryRaster) -> Vec<Contour> {
    let map = EmMap::for_size(img.width(), img.height());
    let mut traces: Vec<(Vec<Point>, Orientation)> = Vec::new();
    for comp in connected_components(img) {
        let s = comp.pixels[0];
        traces.push((
            moore_trace(img, s, Point::new(s.x - 1, s.y)),
            Orientation::Outer,
        ));
    }
    for h in hole_starts(img) {
        let s = Point::new(h.x - 1, h.y);
        traces.push((moore_trace(img, s, h), Orientation::Hole));
    }
    traces
        .into_iter()
        .filter(|(t, _)| t.len() >= 3)
        .map(|(mut t, o)| {
            // screen-space shoelace: positive is clockwise
            let a = shoelace(&t);
            if (o == Orientation::Outer && a < 0) || (o == Orientation::Hole && a > 0) {
                t[1..].reverse();
            }
            Contour {
                points: t.into_iter().map(|p| map.to_em(p)).collect(),
            }
        })
        .collect()
}

fn point_line_dist(p: EmPoint, a: EmPoint, b: EmPoint) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return ((p.0 - a.0).powi(2) + (p.1 - a.1).powi(2)).sqrt();
    }
    ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / len
}

/// Douglas-Peucker on an open polyline; both ends are kept.
pub fn douglas_peucker(pts: &[EmPoint], epsilon: f64) -> Vec<EmPoint> {
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    let mut stack = vec![(0, pts.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        let mut best = (0.0, 0);
        for i in lo + 1..hi {
            let d = point_line_dist(pts[i], pts[lo], pts[hi]);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > epsilon {
            keep[best.1] = true;
            stack.push((lo, best.1));
            stack.push((best.1, hi));
        }
    }
    pts.iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| *p)
        .collect()
}

/// Closed-contour simplification: the contour is split at its first point
/// and the point farthest from it, and each half is simplified. A result
/// with fewer than three points, or with flipped orientation, falls back
/// to the input contour.
pub fn simplify_contour(c: &Contour, epsilon: f64) -> Contour {
    let pts = &c.points;
    if epsilon == 0.0 || pts.len() <= 3 {
        return c.clone();
    }
    let d2 = |p: EmPoint| (p.0 - pts[0].0).powi(2) + (p.1 - pts[0].1).powi(2);
    let far = (1..pts.len()).fold(
        1,
        |best, i| if d2(pts[i]) > d2(pts[best]) { i } else { best },
    );
    let mut first = douglas_peucker(&pts[..=far], epsilon);
    let mut second_half: Vec<EmPoint> = pts[far..].to_vec();
    second_half.push(pts[0]);
    let second = douglas_peucker(&second_half, epsilon);
    first.extend(&second[1..second.len() - 1]);
    let out = Contour { points: first };
    if out.len() < 3 || out.orientation() != c.orientation() || out.signed_area() == 0.0 {
        c.clone()
    } else {
        out
    }
}

pub fn simplify(cs: &[Contour], epsilon: f64) -> Result<Vec<Contour>> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} must be ≥ 0"
        )));
    }
    Ok(cs.iter().map(|c| simplify_contour(c, epsilon)).collect())
}

/// Fill of traced contours at pixel resolution: a pixel is ink when its
/// centre lies on a contour edge or inside an odd number of contours.
pub fn rasterize(contours: &[Contour], width: usize, height: usize) -> Result<BinaryRaster> {
    let map = EmMap::for_size(width, height);
    let mut img = BinaryRaster::new(width, height)?;
    let polys: Vec<Vec<(f64, f64)>> = contours
        .iter()
        .map(|c| c.points.iter().map(|&p| map.to_pixel(p)).collect())
        .collect();
    let edges: Vec<((f64, f64), (f64, f64))> = polys
        .iter()
        .flat_map(|p| (0..p.len()).map(move |i| (p[i], p[(i + 1) % p.len()])))
        .collect();
    for y in 0..height {
        let yc = y as f64;
        let mut xs: Vec<f64> = edges
            .iter()
            .filter(|(a, b)| (a.1 <= yc && yc < b.1) || (b.1 <= yc && yc < a.1))
            .map(|(a, b)| a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1))
            .collect();
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let x0 = (pair[0].floor() as i64 + 1).max(0);
            let x1 = (pair[1].ceil() as i64 - 1).min(width as i64 - 1);
            for x in x0..=x1 {
                img.set(x as usize, y, true);
            }
        }
    }
    // edge pixels: the vertices are pixel centres
    for (a, b) in &edges {
        let (ax, ay) = (a.0.round() as i64, a.1.round() as i64);
        let (bx, by) = (b.0.round() as i64, b.1.round() as i64);
        let steps = (bx - ax).abs().max((by - ay).abs()).max(1);
        for t in 0..=steps {
            let (nx, ny) = (ax * steps + (bx - ax) * t, ay * steps + (by - ay) * t);
            if nx % steps == 0 && ny % steps == 0 {
                img.put(Point::new((nx / steps) as i32, (ny / steps) as i32), true);
            }
        }
    }
    Ok(img)
}

/// Integers print bare; other values with up to five decimals.
pub fn fmt_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let s = format!("{v:.5}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn quantize(v: f64) -> f64 {
    fmt_num(v).parse().expect("formatted number parses")
}

/// Standalone SVG with one even-odd path; y is flipped to screen
/// orientation with the ascent at the top.
pub fn export_svg(codepoint: u32, contours: &[Contour]) -> Result<String> {
    if contours.is_empty() {
        return Err(Error::EmptyGlyph);
    }
    let mut d = String::new();
    for c in contours {
        for (i, &(x, y)) in c.points.iter().enumerate() {
            if !d.is_empty() {
                d.push(' ');
            }
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd} {} {}", fmt_num(x), fmt_num(ASCENT as f64 - y));
        }
        d.push_str(" Z");
    }
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\">\n\
         <!-- U+{codepoint:04X} -->\n\
         <path fill-rule=\"evenodd\" d=\"{d}\"/>\n\
         </svg>\n"
    ))
}

/// One glyph of a font: contours with the ink starting at the left side
/// bearing, and the advance width.
#[derive(Debug, Clone, PartialEq)]
pub struct FontGlyph {
    pub contours: Vec<Contour>,
    pub advance: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FontProject {
    pub family_name: String,
    pub ascent: i32,
    pub descent: i32,
    pub glyphs: BTreeMap<u32, FontGlyph>,
}

impl FontProject {
    pub fn new(family_name: &str) -> Self {
        Self {
            family_name: family_name.to_string(),
            ascent: ASCENT,
            descent: DESCENT,
            glyphs: BTreeMap::new(),
        }
    }

    /// Shifts the contours so the ink starts at the side bearing and sets
    /// the advance to ink width plus both bearings.
    pub fn add_glyph(&mut self, codepoint: u32, contours: Vec<Contour>) -> Result<()> {
        if contours.iter().all(Contour::is_empty) {
            return Err(Error::EmptyGlyph);
        }
        if !GUJARATI.contains(&codepoint) {
            return Err(Error::InvalidParameter(format!(
                "U+{codepoint:04X} is outside U+0A80..U+0AFF"
            )));
        }
        let xs = contours.iter().flat_map(|c| c.points.iter().map(|p| p.0));
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        });
        // stored at the precision the file format carries, so a written
        // font reads back identical whatever the source scale
        let contours = contours
            .iter()
            .map(|c| {
                let mut c = c.translated(SIDE_BEARING - lo);
                for p in &mut c.points {
                    *p = (quantize(p.0), quantize(p.1));
                }
                c
            })
            .collect();
        self.glyphs.insert(
            codepoint,
            FontGlyph {
                contours,
                advance: (hi - lo).round() as i32 + 2 * SIDE_BEARING as i32,
            },
        );
        Ok(())
    }

    fn font_name(&self) -> String {
        self.family_name.split_whitespace().collect()
    }
}

pub fn glyph_name(cp: u32) -> String {
    format!("uni{cp:04X}")
}

pub fn export_sfd(fp: &FontProject) -> Result<String> {
    if fp.glyphs.is_empty() {
        return Err(Error::Empty("font project"));
    }
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "SplineFontDB: 3.0");
    let _ = writeln!(w, "FontName: {}", fp.font_name());
    let _ = writeln!(w, "FullName: {}", fp.family_name);
    let _ = writeln!(w, "FamilyName: {}", fp.family_name);
    let _ = writeln!(w, "Weight: Regular");
    let _ = writeln!(w, "Version: 001.000");
    let _ = writeln!(w, "ItalicAngle: 0");
    let _ = writeln!(w, "Ascent: {}", fp.ascent);
    let _ = writeln!(w, "Descent: {}", fp.descent);
    let _ = writeln!(w, "LayerCount: 2");
    let _ = writeln!(w, "Layer: 0 0 \"Back\" 1");
    let _ = writeln!(w, "Layer: 1 0 \"Fore\" 0");
    let _ = writeln!(w, "Encoding: UnicodeFull");
    let _ = writeln!(w, "BeginChars: 1114112 {}", fp.glyphs.len());
    for (gid, (&cp, g)) in fp.glyphs.iter().enumerate() {
        if g.contours.is_empty() {
            return Err(Error::EmptyGlyph);
        }
        if !GUJARATI.contains(&cp) {
            return Err(Error::InvalidParameter(format!(
                "U+{cp:04X} is outside U+0A80..U+0AFF"
            )));
        }
        let _ = writeln!(w);
        let _ = writeln!(w, "StartChar: {}", glyph_name(cp));
        let _ = writeln!(w, "Encoding: {cp} {cp} {gid}");
        let _ = writeln!(w, "Width: {}", g.advance);
        let _ = writeln!(w, "LayerCount: 2");
        let _ = writeln!(w, "Fore");
        let _ = writeln!(w, "SplineSet");
        for c in &g.contours {
            for (i, &(x, y)) in c.points.iter().enumerate() {
                let (lead, op) = if i == 0 { ("", 'm') } else { (" ", 'l') };
                let _ = writeln!(w, "{lead}{} {} {op} 1", fmt_num(x), fmt_num(y));
            }
            let (x, y) = c.points[0];
            let _ = writeln!(w, " {} {} l 1", fmt_num(x), fmt_num(y));
        }
        let _ = writeln!(w, "EndSplineSet");
        let _ = writeln!(w, "EndChar");
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "EndChars");
    let _ = writeln!(w, "EndSplineFont");
    Ok(out)
}

fn sfd_err(line: usize, message: impl Into<String>) -> Error {
    Error::SfdParse {
        line,
        message: message.into(),
    }
}

/// Reads the subset written by [`export_sfd`].
pub fn parse_sfd(text: &str) -> Result<FontProject> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, "SplineFontDB: 3.0")) => {}
        _ => return Err(sfd_err(1, "expected \"SplineFontDB: 3.0\"")),
    }
    let mut fp = FontProject::new("");
    let mut current: Option<(u32, FontGlyph)> = None;
    let mut in_set = false;
    let mut finished = false;
    let int = |n: usize, v: &str| {
        v.trim()
            .parse::<i32>()
            .map_err(|_| sfd_err(n, format!("bad integer {v:?}")))
    };
    for (n, line) in lines {
        if in_set {
            if line == "EndSplineSet" {
                in_set = false;
                continue;
            }
            let (_, g) = current
                .as_mut()
                .ok_or_else(|| sfd_err(n, "spline outside a glyph"))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [x, y, op, _flags] = parts[..] else {
                return Err(sfd_err(n, "expected \"x y m|l flags\""));
            };
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| sfd_err(n, format!("bad number {v:?}")))
            };
            let p = (num(x)?, num(y)?);
            match op {
                "m" => g.contours.push(Contour { points: vec![p] }),
                "l" => g
                    .contours
                    .last_mut()
                    .ok_or_else(|| sfd_err(n, "line before move"))?
                    .points
                    .push(p),
                _ => return Err(sfd_err(n, format!("unsupported spline op {op:?}"))),
            }
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .map_or((line, ""), |(k, v)| (k, v.trim()));
        match key {
            "FamilyName" => fp.family_name = value.to_string(),
            "Ascent" => fp.ascent = int(n, value)?,
            "Descent" => fp.descent = int(n, value)?,
            "StartChar" => {
                current = Some((
                    u32::MAX,
                    FontGlyph {
                        contours: Vec::new(),
                        advance: 0,
                    },
                ))
            }
            "Encoding" if current.is_some() => {
                let cp = value
                    .split_whitespace()
                    .nth(1)
                    .and_then(|v| v.parse::<u32>().ok())
                    .ok_or_else(|| sfd_err(n, "bad glyph encoding"))?;
                current.as_mut().expect("checked").0 = cp;
            }
            "Width" if current.is_some() => {
                current.as_mut().expect("checked").1.advance = int(n, value)?
            }
            "SplineSet" => in_set = true,
            "EndChar" => {
                let (cp, mut g) = current
                    .take()
                    .ok_or_else(|| sfd_err(n, "EndChar without StartChar"))?;
                if cp == u32::MAX {
                    return Err(sfd_err(n, "glyph without Encoding"));
                }
                for c in &mut g.contours {
                    if c.points.len() > 1 && c.points.first() == c.points.last() {
                        c.points.pop();
                    }
                }
                fp.glyphs.insert(cp, g);
            }
            "EndSplineFont" => finished = true,
            _ => {}
        }
    }
    if !finished {
        return Err(sfd_err(text.lines().count(), "missing EndSplineFont"));
    }
    Ok(fp)
}
