//! Skeletonisation.
//!
//! [`zhang_suen`] is the classic two-subiteration algorithm with a topology
//! guard, [`adaptive_thin`] is the template pass that forces strict unit width
//! on a single stroke, and [`skeletonize`] is the junction-preserving variant
//! used on whole characters before stroke decomposition.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{BinaryRaster, Point, RING};
use crate::topology::{is_simple, ring_runs};

/// Thin binary raster in which every pixel has at most two ink neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton(BinaryRaster);

impl Skeleton {
    pub fn raster(&self) -> &BinaryRaster {
        &self.0
    }

    pub fn into_inner(self) -> BinaryRaster {
        self.0
    }
}

impl TryFrom<BinaryRaster> for Skeleton {
    type Error = BinaryRaster;

    fn try_from(r: BinaryRaster) -> std::result::Result<Self, BinaryRaster> {
        if is_unit_width(&r) {
            Ok(Skeleton(r))
        } else {
            Err(r)
        }
    }
}

impl AsRef<BinaryRaster> for Skeleton {
    fn as_ref(&self) -> &BinaryRaster {
        &self.0
    }
}

// ring bit indices
const N: usize = 0;
const E: usize = 2;
const S: usize = 4;
const W: usize = 6;

fn bit(ring: u8, i: usize) -> bool {
    ring & (1 << i) != 0
}

fn zs_candidate(ring: u8, first: bool) -> bool {
    let b = ring.count_ones();
    if !(2..=6).contains(&b) || ring_runs(ring) != 1 {
        return false;
    }
    let (n, e, s, w) = (bit(ring, N), bit(ring, E), bit(ring, S), bit(ring, W));
    if first {
        !(n && e && s) && !(e && s && w)
    } else {
        !(n && e && w) && !(n && s && w)
    }
}

/// Zhang-Suen thinning until no pixel changes.
///
/// Candidates of each subiteration are collected in parallel as usual, then
/// removed in row-major order only while they are still simple. This never
/// deletes more than the textbook version and keeps the component count
/// intact on the 2-pixel-thick diagonals where the textbook version erases
/// whole components.
pub fn zhang_suen(img: &BinaryRaster) -> BinaryRaster {
    let mut out = img.clone();
    loop {
        let mut changed = false;
        for first in [true, false] {
            let marked: Vec<Point> = out
                .ink_points()
                .into_iter()
                .filter(|p| zs_candidate(out.ring(p.x, p.y), first))
                .collect();
            for p in marked {
                if is_simple(out.ring(p.x, p.y)) {
                    out.put(p, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

/// True iff every 3×3 window centred on an ink pixel holds fewer than four
/// ink pixels.
pub fn is_unit_width(img: &BinaryRaster) -> bool {
    img.ink_points()
        .iter()
        .all(|p| img.neighbor_count(p.x, p.y) < 3)
}

/// One of the twelve replacement patterns of the adaptive pass. Every pattern
/// keeps the centre plus two ring cells forming a path across the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThinTemplate {
    pub id: u8,
    /// Ring bitmask of the two kept neighbours.
    pub ring: u8,
}

impl ThinTemplate {
    pub fn ascii(&self) -> String {
        let mut grid = [['.'; 3]; 3];
        grid[1][1] = '#';
        for (i, (dx, dy)) in RING.iter().enumerate() {
            if bit(self.ring, i) {
                grid[(dy + 1) as usize][(dx + 1) as usize] = '#';
            }
        }
        grid.iter()
            .map(|r| r.iter().collect::<String>())
            .collect::<Vec<_>>()
            .join("/")
    }
}

const fn pair(a: usize, b: usize) -> u8 {
    (1 << a) | (1 << b)
}

/// Straight lines (1-4), orthogonal corners (5-8), diagonal elbows (9-12).
pub const THIN_TEMPLATES: [ThinTemplate; 12] = [
    ThinTemplate {
        id: 1,
        ring: pair(6, 2),
    },
    ThinTemplate {
        id: 2,
        ring: pair(0, 4),
    },
    ThinTemplate {
        id: 3,
        ring: pair(7, 3),
    },
    ThinTemplate {
        id: 4,
        ring: pair(1, 5),
    },
    ThinTemplate {
        id: 5,
        ring: pair(0, 2),
    },
    ThinTemplate {
        id: 6,
        ring: pair(2, 4),
    },
    ThinTemplate {
        id: 7,
        ring: pair(4, 6),
    },
    ThinTemplate {
        id: 8,
        ring: pair(6, 0),
    },
    ThinTemplate {
        id: 9,
        ring: pair(7, 1),
    },
    ThinTemplate {
        id: 10,
        ring: pair(1, 3),
    },
    ThinTemplate {
        id: 11,
        ring: pair(3, 5),
    },
    ThinTemplate {
        id: 12,
        ring: pair(5, 7),
    },
];

/// Pixels of the 8-connected component containing `start`.
fn flood(img: &BinaryRaster, start: Point) -> Vec<Point> {
    if !img.at(start) {
        return Vec::new();
    }
    let mut seen = vec![false; img.width() * img.height()];
    let idx = |p: Point| p.y as usize * img.width() + p.x as usize;
    let mut out = vec![start];
    seen[idx(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for (dx, dy) in RING {
            let q = Point::new(p.x + dx, p.y + dy);
            if img.at(q) && !seen[idx(q)] {
                seen[idx(q)] = true;
                out.push(q);
                queue.push_back(q);
            }
        }
    }
    out
}

fn masked(img: &BinaryRaster, center: Point, keep: u8) -> (BinaryRaster, usize) {
    let mut out = img.clone();
    let mut removed = 0;
    for (i, (dx, dy)) in RING.iter().enumerate() {
        let q = Point::new(center.x + dx, center.y + dy);
        if !bit(keep, i) && out.at(q) {
            out.put(q, false);
            removed += 1;
        }
    }
    (out, removed)
}

fn replace_window(img: &mut BinaryRaster, p: Point) {
    let ring = img.ring(p.x, p.y);
    let before = flood(img, p).len();

    let mut best: Option<(bool, u32, u8, BinaryRaster)> = None;
    for t in &THIN_TEMPLATES {
        let overlap = (ring & t.ring).count_ones() + 1;
        let (candidate, removed) = masked(img, p, t.ring);
        let admissible = flood(&candidate, p).len() == before - removed;
        let better = match &best {
            None => true,
            Some((a, o, _, _)) => (admissible, overlap) > (*a, *o),
        };
        if better {
            best = Some((admissible, overlap, t.id, candidate));
        }
    }
    let (admissible, _, _, mut next) = best.expect("template bank is non-empty");

    if !admissible {
        // The window was a branch point: keep the largest surviving piece of
        // the component so the component count stays fixed.
        let original = flood(img, p);
        let mut pieces: Vec<Vec<Point>> = Vec::new();
        let mut claimed = BinaryRaster::new(img.width(), img.height()).expect("same size");
        for &q in &original {
            if next.at(q) && !claimed.at(q) {
                let piece = flood(&next, q);
                for &r in &piece {
                    claimed.put(r, true);
                }
                pieces.push(piece);
            }
        }
        let keep = pieces
            .iter()
            .enumerate()
            .max_by_key(|(i, piece)| (piece.len(), std::cmp::Reverse(*i)))
            .map(|(i, _)| i);
        for (i, piece) in pieces.iter().enumerate() {
            if Some(i) != keep {
                for &q in piece {
                    next.put(q, false);
                }
            }
        }
    }
    *img = next;
}

/// Template-based pass that forces strict unit width: every window centred
/// on an ink pixel with more than three ink pixels is masked by the best
/// fitting [`ThinTemplate`], re-scanning row-major until nothing changes.
///
/// Best fit prefers templates whose removal leaves the component connected,
/// then the largest overlap with the current ink, then the lowest id. When no
/// template keeps the component connected, the severed pieces other than the
/// largest are discarded so the component count is preserved.
pub fn adaptive_thin(img: &BinaryRaster) -> Result<Skeleton> {
    let mut out = img.clone();
    let max_passes = img.width() * img.height();
    for _ in 0..=max_passes {
        let mut changed = false;
        for y in 0..out.height() as i32 {
            for x in 0..out.width() as i32 {
                if out.get(x, y) && out.neighbor_count(x, y) >= 3 {
                    replace_window(&mut out, Point::new(x, y));
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(Skeleton(out));
        }
    }
    Err(Error::ThinningDivergence(max_passes))
}

/// Removes staircase pixels: simple, non-junction pixels sitting in the
/// corner of two orthogonal ink neighbours. The result keeps junctions
/// intact but no longer reports false branch points along 4-connected steps.
pub fn remove_staircases(img: &BinaryRaster) -> BinaryRaster {
    let mut out = img.clone();
    loop {
        let mut changed = false;
        for p in out.ink_points() {
            let ring = out.ring(p.x, p.y);
            let corner = (0..4).any(|k| bit(ring, 2 * k) && bit(ring, (2 * k + 2) % 8));
            if corner && ring.count_ones() >= 2 && ring_runs(ring) <= 2 && is_simple(ring) {
                out.put(p, false);
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

/// Junction test used for whole-character skeletons: three or more separate
/// branches leave the pixel.
pub fn is_branch_point(img: &BinaryRaster, p: Point) -> bool {
    img.at(p) && ring_runs(img.ring(p.x, p.y)) >= 3
}

/// Deletes end branches shorter than `max_len` pixels that hang off a branch
/// point. Single pass: the spurs are found on the input and removed together.
pub fn prune_spurs(img: &BinaryRaster, max_len: usize) -> BinaryRaster {
    let mut out = img.clone();
    if max_len == 0 {
        return out;
    }
    for end in img.ink_points() {
        if img.neighbor_count(end.x, end.y) != 1 {
            continue;
        }
        let mut path = vec![end];
        let mut prev = end;
        let mut cur = end;
        let reached_junction = loop {
            let next: Vec<Point> = RING
                .iter()
                .map(|(dx, dy)| Point::new(cur.x + dx, cur.y + dy))
                .filter(|q| img.at(*q) && *q != prev && !path.contains(q))
                .collect();
            if next.is_empty() {
                break false;
            }
            if let Some(j) = next.iter().find(|q| is_branch_point(img, **q)) {
                let _ = j;
                break true;
            }
            if next.len() > 1 || path.len() >= max_len {
                break false;
            }
            prev = cur;
            cur = next[0];
            path.push(cur);
        };
        if reached_junction && path.len() < max_len {
            for q in path {
                out.put(q, false);
            }
        }
    }
    out
}

/// Junction-preserving skeleton of a whole character: Zhang-Suen, staircase
/// removal, and pruning of spurs shorter than `spur_len`.
pub fn skeletonize(img: &BinaryRaster, spur_len: usize) -> BinaryRaster {
    let thin = remove_staircases(&zhang_suen(img));
    if spur_len == 0 {
        return thin;
    }
    remove_staircases(&prune_spurs(&thin, spur_len))
}
