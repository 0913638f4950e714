//! Stroke decomposition: endpoint and junction detection on a skeleton,
//! recursive junction removal, and normalisation of each stroke to the 30×30
//! classifier input.

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    connected_components, hit_or_miss, nearest_index, BBox, BinaryRaster, Mask3, Point, RING,
};
use crate::thinning::{adaptive_thin, zhang_suen};
use crate::topology::{is_opposite, ring_runs};

/// Side of the normalised stroke raster.
pub const NORMALIZED_SIZE: usize = 30;
/// Side of the resampled stroke before padding.
pub const RESAMPLED_SIZE: usize = 28;
/// Pieces smaller than this are dropped as junction-removal debris.
pub const DEBRIS_PIXELS: usize = 3;

/// Stroke class label, 1 through 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct StrokeClass(u8);

impl StrokeClass {
    pub const COUNT: usize = 6;

    pub fn new(v: u8) -> Result<Self> {
        if (1..=6).contains(&v) {
            Ok(Self(v))
        } else {
            Err(Error::InvalidClass(v))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index for tables.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = StrokeClass> {
        (1..=6).map(StrokeClass)
    }
}

impl TryFrom<u8> for StrokeClass {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StrokeClass> for u8 {
    fn from(c: StrokeClass) -> u8 {
        c.0
    }
}

impl fmt::Display for StrokeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JunctionKind {
    T,
    Y,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub at: Point,
    pub kind: JunctionKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionReport {
    pub endpoints: Vec<Point>,
    pub junctions: Vec<Junction>,
}

/// One extracted stroke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stroke {
    /// Full-weight ink of this stroke at source resolution.
    pub crop: BinaryRaster,
    /// Skeleton piece in the same frame as `crop`.
    pub skeleton: BinaryRaster,
    /// Position of the frame's top-left corner in the source raster.
    pub origin: Point,
    /// Endpoints A and B (row-major order) in frame coordinates.
    pub endpoints: [Point; 2],
    /// 30×30 thinned, padded stroke.
    pub normalized: BinaryRaster,
    pub class_label: Option<StrokeClass>,
    pub source_char: Option<u32>,
}

impl Stroke {
    /// Builds a stroke straight from a thin single-path raster.
    pub fn from_skeleton(skeleton: BinaryRaster) -> Result<Stroke> {
        let ends = detect_endpoints(&skeleton);
        if ends.len() != 2 {
            return Err(Error::NotAStroke(ends.len()));
        }
        Ok(Stroke {
            normalized: preprocess_stroke(&skeleton)?,
            crop: skeleton.clone(),
            skeleton,
            origin: Point::new(0, 0),
            endpoints: [ends[0], ends[1]],
            class_label: None,
            source_char: None,
        })
    }

    /// Pixel extent used for size ratios: the longer bounding-box side of
    /// the ink.
    pub fn extent(&self) -> usize {
        self.crop.bbox().map_or(0, |bb| bb.width().max(bb.height()))
    }

    /// Skeleton pixels in source coordinates.
    pub fn skeleton_points(&self) -> Vec<Point> {
        self.skeleton
            .ink_points()
            .into_iter()
            .map(|p| Point::new(p.x + self.origin.x, p.y + self.origin.y))
            .collect()
    }

    pub fn endpoints_abs(&self) -> [Point; 2] {
        self.endpoints
            .map(|p| Point::new(p.x + self.origin.x, p.y + self.origin.y))
    }
}

/// The eight endpoint masks: centre on, exactly one neighbour on.
pub fn endpoint_masks() -> [Mask3; 8] {
    let mut out = [Mask3::full(); 8];
    for (i, (dx, dy)) in RING.iter().enumerate() {
        let code = (1u16 << 4) | (1 << ((dy + 1) * 3 + (dx + 1)));
        out[i] = Mask3::from_code(code);
    }
    out
}

/// Ink pixels with exactly one ink neighbour, found with the endpoint masks.
/// Row-major order.
pub fn detect_endpoints(sk: &BinaryRaster) -> Vec<Point> {
    let mut out: Vec<Point> = endpoint_masks()
        .iter()
        .flat_map(|m| hit_or_miss(sk, m))
        .collect();
    out.sort_by_key(|p| p.scan_key());
    out
}

/// A junction template: exact 3×3 pattern and its kind.
#[derive(Debug, Clone, Copy)]
pub struct JunctionTemplate {
    pub mask: Mask3,
    pub kind: JunctionKind,
}

fn ring_to_window(ring: u8) -> u16 {
    let mut code = 1 << 4;
    for (i, (dx, dy)) in RING.iter().enumerate() {
        if ring & (1 << i) != 0 {
            code |= 1 << ((dy + 1) * 3 + (dx + 1));
        }
    }
    code
}

/// Contiguous runs of ink cells around the ring.
fn ring_branches(ring: u8) -> Vec<Vec<usize>> {
    if ring == 0 || ring == 0xff {
        return Vec::new();
    }
    let start = (0..8).find(|&i| ring & (1 << i) == 0).unwrap();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for k in 1..=8 {
        let i = (start + k) % 8;
        if ring & (1 << i) != 0 {
            current.push(i);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

fn classify_branches(ring: u8) -> Option<JunctionKind> {
    let runs = ring_branches(ring);
    match runs.len() {
        0..=2 => None,
        3 => {
            let collinear = runs.iter().enumerate().any(|(i, a)| {
                runs[i + 1..]
                    .iter()
                    .any(|b| a.iter().any(|&x| b.iter().any(|&y| is_opposite(x, y))))
            });
            Some(if collinear {
                JunctionKind::T
            } else {
                JunctionKind::Y
            })
        }
        _ => Some(JunctionKind::Cross),
    }
}

/// Every neighbourhood with three or four separate branches, classified as
/// T (two branches collinear), Y (none collinear) or cross (four branches).
pub fn junction_bank() -> &'static [JunctionTemplate] {
    static BANK: OnceLock<Vec<JunctionTemplate>> = OnceLock::new();
    BANK.get_or_init(|| {
        (0..=255u8)
            .filter_map(|ring| {
                classify_branches(ring).map(|kind| JunctionTemplate {
                    mask: Mask3::from_code(ring_to_window(ring)),
                    kind,
                })
            })
            .collect()
    })
}

fn junction_lookup() -> &'static [Option<JunctionKind>; 256] {
    static TABLE: OnceLock<[Option<JunctionKind>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [None; 256];
        for (ring, slot) in t.iter_mut().enumerate() {
            let window = ring_to_window(ring as u8);
            *slot = junction_bank()
                .iter()
                .find(|j| j.mask.matches(window))
                .map(|j| j.kind);
        }
        t
    })
}

/// Junction kind of `p` if it is a junction pixel.
pub fn junction_at(sk: &BinaryRaster, p: Point) -> Option<JunctionKind> {
    if !sk.at(p) {
        return None;
    }
    let ring = sk.ring(p.x, p.y);
    if ring.count_ones() < 3 {
        return None;
    }
    junction_lookup()[ring as usize]
}

pub fn detect_junctions(sk: &BinaryRaster) -> JunctionReport {
    let endpoints = detect_endpoints(sk);
    let junctions = sk
        .ink_points()
        .into_iter()
        .filter_map(|p| junction_at(sk, p).map(|kind| Junction { at: p, kind }))
        .collect();
    JunctionReport {
        endpoints,
        junctions,
    }
}

/// Result of [`decompose_with_ink`], including the pixels it gave up.
#[derive(Debug, Clone, Default)]
pub struct Decomposition {
    pub strokes: Vec<Stroke>,
    /// Junction (and cycle-opening) pixels deleted from the skeleton.
    pub removed: Vec<Point>,
    /// Pieces smaller than [`DEBRIS_PIXELS`].
    pub debris: Vec<Point>,
}

/// Splits a skeleton into strokes; the stroke crops are the skeleton pieces.
pub fn decompose(sk: &BinaryRaster) -> Result<Vec<Stroke>> {
    Ok(decompose_with_ink(sk, None)?.strokes)
}

fn piece_raster(points: &[Point], bb: BBox) -> BinaryRaster {
    let mut r = BinaryRaster::new(bb.width() + 2, bb.height() + 2).expect("non-empty piece");
    for p in points {
        r.put(Point::new(p.x - bb.x0 + 1, p.y - bb.y0 + 1), true);
    }
    r
}

/// Recursively removes junction pixels until every piece is a simple path
/// with two endpoints. Ink pixels of `ink` (same size as `sk`) are shared out
/// to the nearest stroke through the ink region, giving each stroke its
/// full-weight crop.
pub fn decompose_with_ink(sk: &BinaryRaster, ink: Option<&BinaryRaster>) -> Result<Decomposition> {
    let mut queue: VecDeque<Vec<Point>> = connected_components(sk)
        .into_iter()
        .map(|c| c.pixels)
        .collect();
    let mut pieces: Vec<Vec<Point>> = Vec::new();
    let mut removed = Vec::new();
    let mut debris = Vec::new();

    while let Some(piece) = queue.pop_front() {
        if piece.len() < DEBRIS_PIXELS {
            debris.extend(piece);
            continue;
        }
        let bb = BBox::from_points(piece.iter().copied()).expect("non-empty");
        let local = piece_raster(&piece, bb);
        let to_abs = |p: Point| Point::new(p.x + bb.x0 - 1, p.y + bb.y0 - 1);

        let junctions: Vec<Point> = local
            .ink_points()
            .into_iter()
            .filter(|&p| junction_at(&local, p).is_some())
            .collect();
        let ends = detect_endpoints(&local);
        if junctions.is_empty() && ends.len() == 2 {
            pieces.push(piece);
            continue;
        }
        let cut: Vec<Point> = if !junctions.is_empty() {
            junction_cut(&local, &junctions)
        } else if let Some(p) = local
            .ink_points()
            .into_iter()
            .find(|p| local.neighbor_count(p.x, p.y) >= 3)
        {
            vec![p]
        } else {
            // closed loop or a lone pixel pair: open it at the first pixel
            vec![local.ink_points()[0]]
        };
        let mut rest = local;
        for &p in &cut {
            rest.put(p, false);
            removed.push(to_abs(p));
        }
        for c in connected_components(&rest) {
            queue.push_back(c.pixels.into_iter().map(to_abs).collect());
        }
    }

    // Final strokes are pairwise non-adjacent, so sorting by component order
    // of their union matches connected_components on the result.
    pieces.sort_by_key(|p| {
        let bb = BBox::from_points(p.iter().copied()).unwrap();
        (bb.y0, bb.x0, p[0].y, p[0].x)
    });

    let owners = ink.map(|ink| attribute_ink(ink, &pieces));
    let mut strokes = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.iter().enumerate() {
        let mut ink_pts: Vec<Point> = match &owners {
            Some((w, labels)) => labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == i as u32)
                .map(|(k, _)| Point::new((k % w) as i32, (k / w) as i32))
                .collect(),
            None => Vec::new(),
        };
        ink_pts.extend(piece.iter().copied());
        let frame = BBox::from_points(ink_pts.iter().copied()).expect("non-empty");
        let to_frame = |p: &Point| Point::new(p.x - frame.x0, p.y - frame.y0);
        let crop = BinaryRaster::from_points(
            frame.width(),
            frame.height(),
            &ink_pts.iter().map(to_frame).collect::<Vec<_>>(),
        )?;
        let skeleton = BinaryRaster::from_points(
            frame.width(),
            frame.height(),
            &piece.iter().map(to_frame).collect::<Vec<_>>(),
        )?;
        let ends = detect_endpoints(&skeleton);
        if ends.len() != 2 {
            return Err(Error::NotAStroke(ends.len()));
        }
        strokes.push(Stroke {
            normalized: preprocess_stroke(&crop)?,
            crop,
            skeleton,
            origin: Point::new(frame.x0, frame.y0),
            endpoints: [ends[0], ends[1]],
            class_label: None,
            source_char: None,
        });
    }
    Ok(Decomposition {
        strokes,
        removed,
        debris,
    })
}

/// Pixels to cut at the junctions of a piece. Cutting a ring-run junction
/// alone can leave two of its arms joined through a neighbour (always so on
/// thick-stroke skeletons, where a branch point is smeared over two or three
/// pixels). Each junction then absorbs, one at a time, the first neighbour
/// whose removal separates more of its arms, until every arm stands apart or
/// no neighbour helps. Neighbours that are branch points after the cut are
/// tried first.
fn junction_cut(sk: &BinaryRaster, junctions: &[Point]) -> Vec<Point> {
    let mut rest = sk.clone();
    for &j in junctions {
        rest.put(j, false);
    }
    let mut cut: Vec<Point> = junctions.to_vec();
    for &j in junctions {
        let arms = branch_count(sk, j) as usize;
        let mut region = vec![j];
        let mut apart = arms_apart(&rest, &region);
        while apart < arms {
            let mut candidates: Vec<Point> = region
                .iter()
                .flat_map(|p| {
                    RING.iter()
                        .map(move |(dx, dy)| Point::new(p.x + dx, p.y + dy))
                })
                .filter(|&q| rest.at(q))
                .collect();
            candidates.sort_by_key(|q| (rest.neighbor_count(q.x, q.y) < 3, q.scan_key()));
            candidates.dedup();
            let found = candidates.into_iter().find_map(|q| {
                let mut trial = rest.clone();
                trial.put(q, false);
                region.push(q);
                let n = arms_apart(&trial, &region);
                region.pop();
                (n > apart).then_some((q, trial, n))
            });
            let Some((q, trial, n)) = found else { break };
            rest = trial;
            region.push(q);
            cut.push(q);
            apart = n;
        }
    }
    cut
}

/// Number of distinct components of `rest` touching `region`.
fn arms_apart(rest: &BinaryRaster, region: &[Point]) -> usize {
    let comps = connected_components(rest);
    comps
        .iter()
        .filter(|c| {
            c.pixels.iter().any(|p| {
                region
                    .iter()
                    .any(|r| (p.x - r.x).abs() <= 1 && (p.y - r.y).abs() <= 1)
            })
        })
        .count()
}

/// Multi-source BFS through the ink mask from every stroke's skeleton
/// pixels. Returns `(width, labels)` with `u32::MAX` for unowned pixels.
fn attribute_ink(ink: &BinaryRaster, pieces: &[Vec<Point>]) -> (usize, Vec<u32>) {
    let w = ink.width();
    let mut labels = vec![u32::MAX; w * ink.height()];
    let mut queue = VecDeque::new();
    for (i, piece) in pieces.iter().enumerate() {
        for &p in piece {
            if ink.in_bounds(p.x, p.y) {
                labels[p.y as usize * w + p.x as usize] = i as u32;
                queue.push_back(p);
            }
        }
    }
    while let Some(p) = queue.pop_front() {
        let l = labels[p.y as usize * w + p.x as usize];
        for (dx, dy) in RING {
            let q = Point::new(p.x + dx, p.y + dy);
            if ink.at(q) {
                let k = q.y as usize * w + q.x as usize;
                if labels[k] == u32::MAX {
                    labels[k] = l;
                    queue.push_back(q);
                }
            }
        }
    }
    (w, labels)
}

/// Destination size of one side when the longer side maps to
/// [`RESAMPLED_SIZE`]; a one-pixel side stays one pixel.
fn target_len(len: usize, longest: usize) -> usize {
    if len == 1 {
        return 1;
    }
    let scaled = (len * RESAMPLED_SIZE + longest / 2) / longest;
    scaled.clamp(1, RESAMPLED_SIZE)
}

/// Source index range `[lo, hi]` covered by destination pixel `i`.
pub fn footprint(i: usize, dst_len: usize, src_len: usize) -> (usize, usize) {
    if dst_len >= src_len {
        let n = nearest_index(i, dst_len, src_len);
        return (n, n);
    }
    let lo = i * src_len / dst_len;
    let hi = ((i + 1) * src_len).div_ceil(dst_len).max(lo + 1) - 1;
    (lo, hi.min(src_len - 1))
}

/// Resamples `src` to `w × h`: a destination pixel is ink when any source
/// pixel under its footprint is ink. Plain nearest-neighbour when enlarging;
/// when shrinking it never drops a one-pixel line.
pub fn resample_any(src: &BinaryRaster, w: usize, h: usize) -> BinaryRaster {
    let mut out = BinaryRaster::new(w, h).expect("positive target size");
    for y in 0..h {
        let (y0, y1) = footprint(y, h, src.height());
        for x in 0..w {
            let (x0, x1) = footprint(x, w, src.width());
            let hit = (y0..=y1).any(|sy| (x0..=x1).any(|sx| src.get(sx as i32, sy as i32)));
            out.set(x, y, hit);
        }
    }
    out
}

/// Normalises a stroke crop: tight bounding box scaled (aspect preserved) so
/// its longer side is 28 px, re-thinned to unit width, centred in a 28×28
/// frame and padded to 30×30.
pub fn preprocess_stroke(crop: &BinaryRaster) -> Result<BinaryRaster> {
    let ink = crop.ink_count();
    if ink < DEBRIS_PIXELS {
        return Err(Error::DegenerateStroke(ink));
    }
    let tight = crop.tight().expect("ink present");
    let (w, h) = (tight.width(), tight.height());
    let longest = w.max(h);
    let (nw, nh) = (target_len(w, longest), target_len(h, longest));
    let scaled = resample_any(&tight, nw, nh);

    let mut frame = BinaryRaster::new(RESAMPLED_SIZE, RESAMPLED_SIZE)?;
    let ox = (RESAMPLED_SIZE - nw).div_ceil(2) as i32;
    let oy = (RESAMPLED_SIZE - nh).div_ceil(2) as i32;
    frame.blit(&scaled, ox, oy);

    let thin = adaptive_thin(&zhang_suen(&frame))?.into_inner();
    let largest = connected_components(&thin)
        .into_iter()
        .enumerate()
        .max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i)))
        .map(|(_, c)| c)
        .expect("thinning keeps ink");
    let only = largest.to_raster(RESAMPLED_SIZE, RESAMPLED_SIZE);
    Ok(only.pad(1))
}

/// Number of separate ink runs around a pixel: the branches meeting there.
pub fn branch_count(sk: &BinaryRaster, p: Point) -> u32 {
    ring_runs(sk.ring(p.x, p.y))
}
