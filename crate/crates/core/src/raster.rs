//! Binary and grayscale rasters plus the 3×3 machinery everything downstream
//! is built on: Otsu binarisation, set morphology, hit-or-miss matching and
//! 8-connected component labelling.
//!
//! Coordinates are `(x, y)` with `y` growing downwards. Every 3×3 operation
//! treats pixels outside the raster as background.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Row-major ordering key.
    pub fn scan_key(self) -> (i32, i32) {
        (self.y, self.x)
    }

    pub fn is_adjacent(self, other: Point) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

/// Inclusive bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl BBox {
    pub fn of_point(p: Point) -> Self {
        Self {
            x0: p.x,
            y0: p.y,
            x1: p.x,
            y1: p.y,
        }
    }

    pub fn include(&mut self, p: Point) {
        self.x0 = self.x0.min(p.x);
        self.y0 = self.y0.min(p.y);
        self.x1 = self.x1.max(p.x);
        self.y1 = self.y1.max(p.y);
    }

    pub fn union(self, other: BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let mut bb = BBox::of_point(it.next()?);
        for p in it {
            bb.include(p);
        }
        Some(bb)
    }

    pub fn width(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0 + 1) as usize
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x0 + self.x1) as f64 / 2.0,
            (self.y0 + self.y1) as f64 / 2.0,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Largest axis-aligned gap between two boxes; 0 when they overlap.
    pub fn gap(&self, other: &BBox) -> i32 {
        let dx = (other.x0 - self.x1).max(self.x0 - other.x1) - 1;
        let dy = (other.y0 - self.y1).max(self.y0 - other.y1) - 1;
        dx.max(dy).max(0)
    }
}

/// 8-neighbour offsets in clockwise ring order starting north:
/// N, NE, E, SE, S, SW, W, NW.
pub const RING: [(i32, i32); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(Error::BufferSize {
                expected: width * height,
                actual: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.values[y * self.width + x] = v;
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut h = [0u64; 256];
        for &v in &self.values {
            h[v as usize] += 1;
        }
        h
    }

    /// Ink (1) renders black, background white.
    pub fn from_binary(img: &BinaryRaster) -> Self {
        let values = img.bits.iter().map(|&b| if b { 0 } else { 255 }).collect();
        Self {
            width: img.width,
            height: img.height,
            values,
        }
    }
}

/// On/off raster, row-major, `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        let mut r = Self::new(width, height)?;
        if bits.len() != width * height {
            return Err(Error::BufferSize {
                expected: width * height,
                actual: bits.len(),
            });
        }
        r.bits = bits;
        Ok(r)
    }

    /// Parses rows of `#`/`1` (ink) and `.`/`0` (background). Blank lines and
    /// surrounding whitespace are ignored.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut r = Self::new(width, height)?;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::BufferSize {
                    expected: width,
                    actual: row.chars().count(),
                });
            }
            for (x, c) in row.chars().enumerate() {
                r.set(x, y, matches!(c, '#' | '1' | 'X'));
            }
        }
        Ok(r)
    }

    pub fn from_points(width: usize, height: usize, points: &[Point]) -> Result<Self> {
        let mut r = Self::new(width, height)?;
        for &p in points {
            if r.in_bounds(p.x, p.y) {
                r.set(p.x as usize, p.y as usize, true);
            }
        }
        Ok(r)
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(if self.get_unchecked(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Out-of-bounds reads are background.
    pub fn get(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && self.bits[y as usize * self.width + x as usize]
    }

    pub fn at(&self, p: Point) -> bool {
        self.get(p.x, p.y)
    }

    fn get_unchecked(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn put(&mut self, p: Point, v: bool) {
        if self.in_bounds(p.x, p.y) {
            self.set(p.x as usize, p.y as usize, v);
        }
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Ink pixels in row-major order.
    pub fn ink_points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get_unchecked(x, y) {
                    out.push(Point::new(x as i32, y as i32));
                }
            }
        }
        out
    }

    pub fn bbox(&self) -> Option<BBox> {
        BBox::from_points(self.ink_points())
    }

    /// 9-bit neighbourhood code: bit `row * 3 + col` of the 3×3 window.
    pub fn window(&self, x: i32, y: i32) -> u16 {
        let mut code = 0u16;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if self.get(x + dx, y + dy) {
                    code |= 1 << ((dy + 1) * 3 + (dx + 1));
                }
            }
        }
        code
    }

    /// Ring bitmask: bit `i` set when neighbour `RING[i]` is ink.
    pub fn ring(&self, x: i32, y: i32) -> u8 {
        let mut m = 0u8;
        for (i, (dx, dy)) in RING.iter().enumerate() {
            if self.get(x + dx, y + dy) {
                m |= 1 << i;
            }
        }
        m
    }

    pub fn neighbor_count(&self, x: i32, y: i32) -> u32 {
        self.ring(x, y).count_ones()
    }

    /// Copies the box (clipped to the raster) into a new raster of the box size.
    pub fn crop(&self, bb: BBox) -> BinaryRaster {
        let w = bb.width();
        let h = bb.height();
        let mut out = BinaryRaster {
            width: w,
            height: h,
            bits: vec![false; w * h],
        };
        for y in 0..h {
            for x in 0..w {
                if self.get(bb.x0 + x as i32, bb.y0 + y as i32) {
                    out.set(x, y, true);
                }
            }
        }
        out
    }

    /// Crop to the tight ink bounding box, `None` when blank.
    pub fn tight(&self) -> Option<BinaryRaster> {
        self.bbox().map(|bb| self.crop(bb))
    }

    /// ORs `other` into `self` with `other`'s origin at `(ox, oy)`; pixels
    /// landing outside are dropped and counted.
    pub fn blit(&mut self, other: &BinaryRaster, ox: i32, oy: i32) -> usize {
        let mut dropped = 0;
        for p in other.ink_points() {
            let (x, y) = (p.x + ox, p.y + oy);
            if self.in_bounds(x, y) {
                self.set(x as usize, y as usize, true);
            } else {
                dropped += 1;
            }
        }
        dropped
    }

    /// Adds a background border of `pad` pixels on every side.
    pub fn pad(&self, pad: usize) -> BinaryRaster {
        let mut out = BinaryRaster {
            width: self.width + 2 * pad,
            height: self.height + 2 * pad,
            bits: vec![false; (self.width + 2 * pad) * (self.height + 2 * pad)],
        };
        out.blit(self, pad as i32, pad as i32);
        out
    }

    pub fn is_subset_of(&self, other: &BinaryRaster) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn flip_horizontal(&self) -> BinaryRaster {
        self.remap(self.width, self.height, |x, y| (self.width - 1 - x, y))
    }

    pub fn flip_vertical(&self) -> BinaryRaster {
        self.remap(self.width, self.height, |x, y| (x, self.height - 1 - y))
    }

    /// Quarter turn clockwise (screen coordinates): `(x, y) -> (h-1-y, x)`.
    pub fn rotate90(&self) -> BinaryRaster {
        let h = self.height;
        let mut out = BinaryRaster {
            width: self.height,
            height: self.width,
            bits: vec![false; self.bits.len()],
        };
        for p in self.ink_points() {
            out.set(h - 1 - p.y as usize, p.x as usize, true);
        }
        out
    }

    /// Output pixel `(x, y)` takes the value of source pixel `src(x, y)`.
    fn remap(&self, w: usize, h: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> Self {
        let mut out = BinaryRaster {
            width: w,
            height: h,
            bits: vec![false; w * h],
        };
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = src(x, y);
                out.set(x, y, self.get_unchecked(sx, sy));
            }
        }
        out
    }

    /// Nearest-neighbour resample to `w × h` using pixel-centre sampling.
    pub fn resize_nearest(&self, w: usize, h: usize) -> Result<BinaryRaster> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidDimensions {
                width: w,
                height: h,
            });
        }
        let (sw, sh) = (self.width, self.height);
        Ok(self.remap(w, h, |x, y| {
            (nearest_index(x, w, sw), nearest_index(y, h, sh))
        }))
    }
}

/// Source index sampled by destination index `i` when mapping `dst_len`
/// pixels onto `src_len` pixels.
pub fn nearest_index(i: usize, dst_len: usize, src_len: usize) -> usize {
    (((2 * i + 1) * src_len) / (2 * dst_len)).min(src_len - 1)
}

/// One cell of a 3×3 template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    On,
    Off,
    Any,
}

/// 3×3 structuring template, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mask3 {
    cells: [Cell; 9],
}

impl Mask3 {
    pub const fn new(cells: [Cell; 9]) -> Self {
        Self { cells }
    }

    /// Fully-on 3×3 kernel.
    pub const fn full() -> Self {
        Self {
            cells: [Cell::On; 9],
        }
    }

    /// Parses three rows of `1` (on), `0` (off) and `x`/`.` (don't care),
    /// separated by `/` or whitespace, e.g. `"x1x/111/x1x"`.
    pub fn parse(pattern: &str) -> Option<Self> {
        let chars: Vec<char> = pattern
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '/')
            .collect();
        if chars.len() != 9 {
            return None;
        }
        let mut cells = [Cell::Any; 9];
        for (cell, c) in cells.iter_mut().zip(chars) {
            *cell = match c {
                '1' | '#' => Cell::On,
                '0' => Cell::Off,
                'x' | '.' | '*' => Cell::Any,
                _ => return None,
            };
        }
        Some(Self { cells })
    }

    /// Exact-pattern mask from a 9-bit window code: set bits on, the rest off.
    pub fn from_code(code: u16) -> Self {
        let mut cells = [Cell::Off; 9];
        for (i, c) in cells.iter_mut().enumerate() {
            if code & (1 << i) != 0 {
                *c = Cell::On;
            }
        }
        Self { cells }
    }

    pub fn cells(&self) -> &[Cell; 9] {
        &self.cells
    }

    pub fn on_code(&self) -> u16 {
        self.bits_where(Cell::On)
    }

    pub fn off_code(&self) -> u16 {
        self.bits_where(Cell::Off)
    }

    fn bits_where(&self, kind: Cell) -> u16 {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == kind)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// Hit-or-miss test against a window code from [`BinaryRaster::window`].
    pub fn matches(&self, window: u16) -> bool {
        let on = self.on_code();
        let off = self.off_code();
        window & on == on && window & off == 0
    }

    /// Offsets `(dx, dy)` of the on cells relative to the centre.
    pub fn on_offsets(&self) -> Vec<(i32, i32)> {
        (0..9)
            .filter(|i| self.cells[*i] == Cell::On)
            .map(|i| ((i % 3) as i32 - 1, (i / 3) as i32 - 1))
            .collect()
    }
}

/// Otsu threshold: the lowest `t` in `1..=255` maximising between-class
/// variance for the split `{v < t}` / `{v >= t}`. `None` for a constant image.
pub fn otsu_threshold(img: &GrayRaster) -> Option<u8> {
    let hist = img.histogram();
    let total = img.values.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let mut best: Option<(u8, f64)> = None;
    let (mut w0, mut sum0) = (0.0f64, 0.0f64);
    for t in 1..=255usize {
        w0 += hist[t - 1] as f64;
        sum0 += (t - 1) as f64 * hist[t - 1] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((t as u8, between));
        }
    }
    best.filter(|(_, v)| *v > 0.0).map(|(t, _)| t)
}

/// Dark pixels (below the Otsu threshold) become ink. A constant image has no
/// ink.
pub fn binarize_otsu(img: &GrayRaster) -> BinaryRaster {
    let mut out = BinaryRaster {
        width: img.width,
        height: img.height,
        bits: vec![false; img.values.len()],
    };
    if let Some(t) = otsu_threshold(img) {
        for (b, &v) in out.bits.iter_mut().zip(&img.values) {
            *b = v < t;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphKind {
    Erode,
    Dilate,
    Close,
}

pub fn morphology(img: &BinaryRaster, kind: MorphKind, kernel: &Mask3) -> Result<BinaryRaster> {
    let offsets = kernel.on_offsets();
    if offsets.is_empty() {
        return Err(Error::EmptyKernel);
    }
    Ok(match kind {
        MorphKind::Erode => erode(img, &offsets),
        MorphKind::Dilate => dilate(img, &offsets),
        MorphKind::Close => erode(&dilate(img, &offsets), &offsets),
    })
}

fn dilate(img: &BinaryRaster, offsets: &[(i32, i32)]) -> BinaryRaster {
    let mut out = BinaryRaster {
        width: img.width,
        height: img.height,
        bits: vec![false; img.bits.len()],
    };
    for y in 0..img.height as i32 {
        for x in 0..img.width as i32 {
            // reflected structuring element
            let hit = offsets.iter().any(|(dx, dy)| img.get(x - dx, y - dy));
            out.set(x as usize, y as usize, hit);
        }
    }
    out
}

fn erode(img: &BinaryRaster, offsets: &[(i32, i32)]) -> BinaryRaster {
    let mut out = BinaryRaster {
        width: img.width,
        height: img.height,
        bits: vec![false; img.bits.len()],
    };
    for y in 0..img.height as i32 {
        for x in 0..img.width as i32 {
            let fit = offsets.iter().all(|(dx, dy)| img.get(x + dx, y + dy));
            out.set(x as usize, y as usize, fit);
        }
    }
    out
}

/// Every pixel whose 3×3 neighbourhood matches `mask`, in row-major order.
pub fn hit_or_miss(img: &BinaryRaster, mask: &Mask3) -> Vec<Point> {
    let mut out = Vec::new();
    for y in 0..img.height as i32 {
        for x in 0..img.width as i32 {
            if mask.matches(img.window(x, y)) {
                out.push(Point::new(x, y));
            }
        }
    }
    out
}

/// A maximal 8-connected set of ink pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Row-major order.
    pub pixels: Vec<Point>,
    pub bbox: BBox,
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (sx, sy) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x as f64, sy + p.y as f64));
        (sx / n, sy / n)
    }

    pub fn to_raster(&self, width: usize, height: usize) -> BinaryRaster {
        let mut r = BinaryRaster {
            width,
            height,
            bits: vec![false; width * height],
        };
        for &p in &self.pixels {
            r.put(p, true);
        }
        r
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let grand = self.parent[self.parent[a as usize] as usize];
            self.parent[a as usize] = grand;
            a = grand;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass union-find labelling with 8-connectivity. Components are ordered
/// by the `(min-y, min-x)` corner of their bounding box, then by first pixel.
pub fn connected_components(img: &BinaryRaster) -> Vec<Component> {
    const NONE: u32 = u32::MAX;
    let (w, h) = (img.width, img.height);
    let mut labels = vec![NONE; w * h];
    let mut sets = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            if !img.get_unchecked(x, y) {
                continue;
            }
            // already-visited neighbours: W, NW, N, NE
            let mut found = NONE;
            let prior = [(-1i32, 0i32), (-1, -1), (0, -1), (1, -1)];
            for (dx, dy) in prior {
                let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                if !img.get(nx, ny) {
                    continue;
                }
                let l = labels[ny as usize * w + nx as usize];
                if found == NONE {
                    found = l;
                } else {
                    sets.union(found, l);
                }
            }
            labels[y * w + x] = if found == NONE { sets.make() } else { found };
        }
    }

    let mut slot_of_root: Vec<u32> = vec![NONE; sets.parent.len()];
    let mut comps: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == NONE {
                continue;
            }
            let root = sets.find(l) as usize;
            let p = Point::new(x as i32, y as i32);
            if slot_of_root[root] == NONE {
                slot_of_root[root] = comps.len() as u32;
                comps.push(Component {
                    pixels: vec![p],
                    bbox: BBox::of_point(p),
                });
            } else {
                let c = &mut comps[slot_of_root[root] as usize];
                c.pixels.push(p);
                c.bbox.include(p);
            }
        }
    }
    comps.sort_by_key(|c| (c.bbox.y0, c.bbox.x0, c.pixels[0].y, c.pixels[0].x));
    comps
}

/// Loads PNG or PNM (P2/P5 and friends) as grayscale. Colour channels are
/// averaged with integer arithmetic; alpha is ignored.
pub fn load_gray(path: &Path) -> Result<GrayRaster> {
    let img = image::open(path)?;
    Ok(gray_from_dynamic(&img))
}

pub fn gray_from_bytes(bytes: &[u8]) -> Result<GrayRaster> {
    let img = image::load_from_memory(bytes)?;
    Ok(gray_from_dynamic(&img))
}

fn gray_from_dynamic(img: &image::DynamicImage) -> GrayRaster {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = if img.color().has_color() {
        img.to_rgb8()
            .pixels()
            .map(|p| ((p[0] as u16 + p[1] as u16 + p[2] as u16) / 3) as u8)
            .collect()
    } else {
        img.to_luma8().into_raw()
    };
    GrayRaster {
        width: w,
        height: h,
        values,
    }
}

/// Encodes ink as black on white, 8-bit grayscale PNG.
pub fn encode_png(img: &BinaryRaster) -> Result<Vec<u8>> {
    encode_gray_png(&GrayRaster::from_binary(img))
}

pub fn encode_gray_png(img: &GrayRaster) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.values.clone())
        .expect("buffer length matches dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn load_binary(path: &Path) -> Result<BinaryRaster> {
    Ok(binarize_otsu(&load_gray(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, v: &[u8]) -> GrayRaster {
        GrayRaster::new(w, h, v.to_vec()).unwrap()
    }

    /// Between-class variance computed directly from the two pixel lists.
    fn brute_otsu(values: &[u8]) -> Option<u8> {
        let mut best: Option<(u8, f64)> = None;
        for t in 0..=255u16 {
            let lo: Vec<f64> = values
                .iter()
                .filter(|&&v| (v as u16) < t)
                .map(|&v| v as f64)
                .collect();
            let hi: Vec<f64> = values
                .iter()
                .filter(|&&v| (v as u16) >= t)
                .map(|&v| v as f64)
                .collect();
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let var = lo.len() as f64 * hi.len() as f64 * (m0 - m1).powi(2);
            if best.is_none_or(|(_, b)| var > b + 1e-9) {
                best = Some((t as u8, var));
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn otsu_bimodal() {
        let b = binarize_otsu(&gray(2, 2, &[0, 0, 255, 255]));
        assert_eq!(b.bits(), &[true, true, false, false]);
    }

    #[test]
    fn otsu_constant_is_blank() {
        let img = gray(4, 1, &[10, 10, 10, 10]);
        assert_eq!(otsu_threshold(&img), None);
        assert!(binarize_otsu(&img).is_blank());
    }

    #[test]
    fn otsu_matches_brute_force() {
        let v = [10, 20, 30, 200, 210, 220];
        let expected = brute_otsu(&v).unwrap();
        assert_eq!(expected, 31);
        let img = gray(6, 1, &v);
        assert_eq!(otsu_threshold(&img), Some(expected));
        assert_eq!(
            binarize_otsu(&img).bits(),
            &[true, true, true, false, false, false]
        );
    }

    #[test]
    fn dilate_center_fills_window() {
        let img = BinaryRaster::from_ascii("...\n.#.\n...").unwrap();
        let d = morphology(&img, MorphKind::Dilate, &Mask3::full()).unwrap();
        assert_eq!(d.ink_count(), 9);
    }

    #[test]
    fn erode_full_keeps_center() {
        let img = BinaryRaster::from_ascii("###\n###\n###").unwrap();
        let e = morphology(&img, MorphKind::Erode, &Mask3::full()).unwrap();
        assert_eq!(e.ink_points(), vec![Point::new(1, 1)]);
    }

    #[test]
    fn close_fills_one_pixel_gap() {
        // dilate: every pixel of the 5x3 raster is ink; erode: only the three
        // interior pixels of the middle row see a fully inked window.
        let img = BinaryRaster::from_ascii(".....\n.#.#.\n.....").unwrap();
        let c = morphology(&img, MorphKind::Close, &Mask3::full()).unwrap();
        assert_eq!(c.to_ascii(), ".....\n.###.\n.....\n");
    }

    #[test]
    fn empty_kernel_rejected() {
        let img = BinaryRaster::new(3, 3).unwrap();
        let k = Mask3::parse("000/000/000").unwrap();
        assert!(matches!(
            morphology(&img, MorphKind::Dilate, &k),
            Err(Error::EmptyKernel)
        ));
    }

    #[test]
    fn hit_or_miss_center_only() {
        let img = BinaryRaster::from_ascii("#....\n..#..\n....#").unwrap();
        let m = Mask3::parse("xxx/x1x/xxx").unwrap();
        assert_eq!(
            hit_or_miss(&img, &m),
            vec![Point::new(0, 0), Point::new(2, 1), Point::new(4, 2)]
        );
    }

    #[test]
    fn hit_or_miss_isolated() {
        let mut img = BinaryRaster::new(5, 5).unwrap();
        img.set(2, 2, true);
        let m = Mask3::parse("000/010/000").unwrap();
        assert_eq!(hit_or_miss(&img, &m), vec![Point::new(2, 2)]);
    }

    #[test]
    fn hit_or_miss_endpoint_mask() {
        let mut img = BinaryRaster::new(7, 5).unwrap();
        for x in 1..=5 {
            img.set(x, 2, true);
        }
        let m = Mask3::parse("000/011/000").unwrap();
        // only the west tip has ink exactly to its east
        let brute: Vec<Point> = img
            .ink_points()
            .into_iter()
            .filter(|p| img.ring(p.x, p.y) == 1 << 2)
            .collect();
        assert_eq!(brute, vec![Point::new(1, 2)]);
        assert_eq!(hit_or_miss(&img, &m), brute);
    }

    #[test]
    fn components_empty_and_diagonal() {
        assert!(connected_components(&BinaryRaster::new(4, 4).unwrap()).is_empty());
        let img = BinaryRaster::from_ascii("#.\n.#").unwrap();
        assert_eq!(connected_components(&img).len(), 1);
    }

    #[test]
    fn components_plus_and_dot() {
        let img = BinaryRaster::from_ascii(
            "
            .#.....
            ###....
            .#.....
            .......
            .....#.
            ",
        )
        .unwrap();
        let cc = connected_components(&img);
        assert_eq!(cc.len(), 2);
        assert_eq!(cc[0].len(), 5);
        assert_eq!(cc[1].pixels, vec![Point::new(5, 4)]);
    }

    #[test]
    fn component_order_by_bbox_corner() {
        // the right blob starts higher, so it comes first
        let img = BinaryRaster::from_ascii("....#\n#...#\n#....").unwrap();
        let cc = connected_components(&img);
        assert_eq!(cc[0].pixels[0], Point::new(4, 0));
        assert_eq!(cc[1].pixels[0], Point::new(0, 1));
    }

    #[test]
    fn rotate_and_flip_shapes() {
        let img = BinaryRaster::from_ascii("##.\n#..").unwrap();
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (2, 3));
        assert_eq!(r.to_ascii(), "##\n.#\n..\n");
        assert_eq!(img.flip_horizontal().flip_horizontal(), img);
        assert_eq!(img.rotate90().rotate90().rotate90().rotate90(), img);
    }

    #[test]
    fn png_roundtrip() {
        let img = BinaryRaster::from_ascii("#..\n.#.\n..#").unwrap();
        let bytes = encode_png(&img).unwrap();
        let back = binarize_otsu(&gray_from_bytes(&bytes).unwrap());
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_ascii_input() {
        let pgm = b"P2\n3 1\n255\n0 128 255\n";
        let g = gray_from_bytes(pgm).unwrap();
        assert_eq!(g.values(), &[0, 128, 255]);
    }
}
