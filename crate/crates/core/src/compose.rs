//! Glyph synthesis: transform labelled bank strokes, place them by rule
//! (free position, gap from the previous stroke, or welded at a joining
//! point) and crop the result onto the glyph canvas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::raster::{morphology, BBox, BinaryRaster, Mask3, MorphKind, Point};
use crate::rules::{format_codepoint, Appearance, EndLabel, JoinPoint, RuleSet, StrokePlacement};
use crate::strokes::{Stroke, StrokeClass};

/// Side of the glyph canvas.
pub const CANVAS: usize = 256;
/// Blank border kept around the ink when centring a glyph.
pub const MARGIN: usize = 8;
/// Half-width of the weld window (7×7).
const WELD: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct StrokeBank {
    strokes: BTreeMap<StrokeClass, Vec<Stroke>>,
    /// Estimated pen width in pixels.
    pub pen_width: f64,
}

impl StrokeBank {
    /// Groups labelled strokes by class; unlabelled strokes are rejected.
    pub fn from_strokes(strokes: Vec<Stroke>) -> Result<Self> {
        let mut map: BTreeMap<StrokeClass, Vec<Stroke>> = BTreeMap::new();
        for s in strokes {
            let c = s.class_label.ok_or(Error::MissingLabel)?;
            map.entry(c).or_default().push(s);
        }
        let runs: Vec<usize> = map
            .values()
            .flatten()
            .flat_map(|s| ink_runs(&s.crop))
            .collect();
        Ok(Self {
            strokes: map,
            pen_width: median(runs).unwrap_or(1) as f64,
        })
    }

    pub fn classes(&self) -> Vec<StrokeClass> {
        self.strokes.keys().copied().collect()
    }

    pub fn missing(&self) -> Vec<u8> {
        StrokeClass::all()
            .filter(|c| !self.strokes.contains_key(c))
            .map(StrokeClass::get)
            .collect()
    }

    pub fn get(&self, class: StrokeClass) -> &[Stroke] {
        self.strokes.get(&class).map_or(&[], Vec::as_slice)
    }

    /// Round-robin choice among the strokes of a class.
    pub fn pick(&self, class: StrokeClass, occ: usize) -> Option<&Stroke> {
        let list = self.get(class);
        (!list.is_empty()).then(|| &list[occ % list.len()])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Stroke> {
        self.strokes.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.strokes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Median longer-side extent of the bank strokes: the unit for `size`.
    pub fn base_extent(&self) -> usize {
        median(self.iter().map(Stroke::extent).collect())
            .unwrap_or(1)
            .max(1)
    }
}

fn median(mut v: Vec<usize>) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v[v.len() / 2])
}

/// Lengths of horizontal ink runs.
fn ink_runs(img: &BinaryRaster) -> Vec<usize> {
    let mut out = Vec::new();
    for y in 0..img.height() as i32 {
        let mut run = 0;
        for x in 0..=img.width() as i32 {
            if img.get(x, y) {
                run += 1;
            } else if run > 0 {
                out.push(run);
                run = 0;
            }
        }
    }
    out
}

/// A stroke after appearance change and scaling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transformed {
    pub raster: BinaryRaster,
    pub endpoints: [Point; 2],
}

fn scale_index(v: i32, src: usize, dst: usize) -> i32 {
    let f = (v as f64 + 0.5) * dst as f64 / src as f64 - 0.5;
    (f.round() as i32).clamp(0, dst as i32 - 1)
}

/// Flips/rotates the full-weight crop, then nearest-neighbour scales it.
/// Endpoints follow the same maps.
pub fn transform_stroke(s: &Stroke, ap: Appearance, scale: f64) -> Result<Transformed> {
    if !(scale > 0.0 && scale <= 4.0) {
        return Err(Error::InvalidParameter(format!(
            "scale {scale} outside (0, 4]"
        )));
    }
    let (w, h) = (s.crop.width(), s.crop.height());
    let turned = ap.apply(&s.crop);
    let mut ends = s.endpoints.map(|p| ap.map_point(p, w, h));
    let (tw, th) = (turned.width(), turned.height());
    let nw = ((tw as f64 * scale).round() as usize).max(1);
    let nh = ((th as f64 * scale).round() as usize).max(1);
    if nw > CANVAS || nh > CANVAS {
        return Err(Error::OversizeStroke {
            width: nw,
            height: nh,
        });
    }
    let raster = if (nw, nh) == (tw, th) {
        turned
    } else {
        ends = ends.map(|p| Point::new(scale_index(p.x, tw, nw), scale_index(p.y, th, nh)));
        turned.resize_nearest(nw, nh)?
    };
    Ok(Transformed {
        raster,
        endpoints: ends,
    })
}

/// A stroke already on the working canvas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placed {
    pub class: u8,
    pub bbox: BBox,
    pub endpoints: [Point; 2],
}

impl Placed {
    fn resolve(&self, jp: &JoinPoint) -> Point {
        resolve_point(jp, &self.endpoints, self.bbox)
    }
}

fn resolve_point(jp: &JoinPoint, ends: &[Point; 2], bb: BBox) -> Point {
    match jp {
        JoinPoint::End(EndLabel::A) => ends[0],
        JoinPoint::End(EndLabel::B) => ends[1],
        JoinPoint::Percent { px, py } => Point::new(
            bb.x0 + (px / 100.0 * (bb.width() - 1) as f64).round() as i32,
            bb.y0 + (py / 100.0 * (bb.height() - 1) as f64).round() as i32,
        ),
    }
}

/// Working area: the nominal canvas sits in the middle of a canvas three
/// times its size so strokes may overhang before the final crop.
#[derive(Debug, Clone)]
pub struct Composition {
    pub raster: BinaryRaster,
    pub placed: Vec<Placed>,
}

const WORK: usize = 3 * CANVAS;
const NOMINAL: i32 = CANVAS as i32;

impl Default for Composition {
    fn default() -> Self {
        Self::new()
    }
}

impl Composition {
    pub fn new() -> Self {
        Self {
            raster: BinaryRaster::new(WORK, WORK).expect("fixed size"),
            placed: Vec::new(),
        }
    }

    fn pct(v: f64) -> i32 {
        (v / 100.0 * (CANVAS - 1) as f64).round() as i32
    }

    fn weld(&mut self, at: Point) {
        let r = WELD + 1;
        let bb = BBox {
            x0: at.x - r,
            y0: at.y - r,
            x1: at.x + r,
            y1: at.y + r,
        };
        let window = self.raster.crop(bb);
        let closed = morphology(&window, MorphKind::Close, &Mask3::full()).expect("full kernel");
        for dy in -WELD..=WELD {
            for dx in -WELD..=WELD {
                if closed.get(r + dx, r + dy) {
                    self.raster.put(Point::new(at.x + dx, at.y + dy), true);
                }
            }
        }
    }

    /// Cropped and centred 256×256 glyph of everything placed so far.
    pub fn render(&self, character: &str) -> Result<BinaryRaster> {
        let bb = self.raster.bbox().ok_or(Error::EmptyGlyph)?;
        if bb.width() + 2 * MARGIN > CANVAS || bb.height() + 2 * MARGIN > CANVAS {
            return Err(Error::GlyphOverflow {
                character: character.to_string(),
                canvas: CANVAS,
            });
        }
        let ink = self.raster.crop(bb);
        Ok(center_on_canvas(&ink))
    }
}

/// Centres a raster (no larger than the canvas) on a blank canvas.
pub fn center_on_canvas(ink: &BinaryRaster) -> BinaryRaster {
    let mut out = BinaryRaster::new(CANVAS, CANVAS).expect("fixed size");
    let ox = (CANVAS as i32 - ink.width() as i32) / 2;
    let oy = (CANVAS as i32 - ink.height() as i32) / 2;
    out.blit(ink, ox, oy);
    out
}

/// Places one stroke onto the composition.
///
/// A join translates the stroke so its join point lands on the target's
/// and smooths the weld with a 3×3 closing restricted to a 7×7 window; a
/// `ds` gap is measured from the previous stroke's box as a percentage of
/// the canvas; `pos` puts the box centre at a canvas percentage.
pub fn place_and_join(
    comp: &mut Composition,
    next: &StrokePlacement,
    bank: &StrokeBank,
) -> Result<()> {
    let class = StrokeClass::new(next.class)?;
    let stroke = bank
        .pick(class, next.occ)
        .ok_or_else(|| Error::MissingStrokeClass {
            character: String::new(),
            classes: vec![next.class],
        })?;
    let scale = next.size * bank.base_extent() as f64 / stroke.extent().max(1) as f64;
    let t = transform_stroke(stroke, next.ap, scale.min(4.0))?;
    let (w, h) = (t.raster.width() as i32, t.raster.height() as i32);
    let local = BBox {
        x0: 0,
        y0: 0,
        x1: w - 1,
        y1: h - 1,
    };

    let (ox, oy, weld_at) = if let Some(jp) = &next.jp {
        let target = comp
            .placed
            .get(jp.target)
            .ok_or(Error::PlacementOutOfBounds)?;
        let at = target.resolve(&jp.at);
        let this = resolve_point(&jp.this, &t.endpoints, local);
        (at.x - this.x, at.y - this.y, Some(at))
    } else if let Some((dx, dy)) = next.ds {
        let prev = comp.placed.last().ok_or(Error::PlacementOutOfBounds)?.bbox;
        let axis = |d: f64, lo: i32, hi: i32, len: i32| {
            let gap = Composition::pct(d.abs());
            if d > 0.0 {
                hi + 1 + gap
            } else if d < 0.0 {
                lo - gap - len
            } else {
                (lo + hi + 1 - len) / 2
            }
        };
        (
            axis(dx, prev.x0, prev.x1, w),
            axis(dy, prev.y0, prev.y1, h),
            None,
        )
    } else {
        let (px, py) = next.pos.unwrap_or((50.0, 50.0));
        let cx = NOMINAL + Composition::pct(px);
        let cy = NOMINAL + Composition::pct(py);
        (cx - (w - 1) / 2, cy - (h - 1) / 2, None)
    };

    if let Some(at) = weld_at {
        if !comp.raster.in_bounds(at.x, at.y) {
            return Err(Error::PlacementOutOfBounds);
        }
    }
    if comp.raster.blit(&t.raster, ox, oy) > 0 {
        return Err(Error::PlacementOutOfBounds);
    }
    if let Some(at) = weld_at {
        comp.weld(at);
    }
    comp.placed.push(Placed {
        class: next.class,
        bbox: BBox {
            x0: ox,
            y0: oy,
            x1: ox + w - 1,
            y1: oy + h - 1,
        },
        endpoints: t.endpoints.map(|p| Point::new(p.x + ox, p.y + oy)),
    });
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphRaster {
    pub raster: BinaryRaster,
    pub character: u32,
    pub variant: usize,
    /// Stroke classes in placement order.
    pub classes: Vec<u8>,
}

impl GlyphRaster {
    pub fn file_name(&self) -> String {
        glyph_file_name(self.character, self.variant)
    }
}

pub fn glyph_file_name(cp: u32, variant: usize) -> String {
    format!("u{cp:04X}_v{variant}.png")
}

pub fn generate_character(
    cp: u32,
    bank: &StrokeBank,
    rules: &RuleSet,
    variant: usize,
) -> Result<GlyphRaster> {
    let label = format_codepoint(cp);
    let rule = rules
        .get(cp)
        .ok_or_else(|| Error::UnknownCharacter(label.clone()))?;
    let placements = rule
        .variants
        .get(variant)
        .ok_or_else(|| Error::InvalidParameter(format!("{label} has no variant {variant}")))?;
    let mut missing: Vec<u8> = placements
        .iter()
        .map(|p| p.class)
        .filter(|&c| StrokeClass::new(c).is_ok_and(|c| bank.get(c).is_empty()))
        .collect();
    missing.sort_unstable();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::MissingStrokeClass {
            character: label,
            classes: missing,
        });
    }
    let mut comp = Composition::new();
    for p in placements {
        place_and_join(&mut comp, p, bank)?;
    }
    Ok(GlyphRaster {
        raster: comp.render(&label)?,
        character: cp,
        variant,
        classes: placements.iter().map(|p| p.class).collect(),
    })
}

/// Variant 0 of every rule, in codepoint order.
pub fn generate_all(bank: &StrokeBank, rules: &RuleSet) -> Result<Vec<GlyphRaster>> {
    generate_all_with(bank, rules, Execution::default())
}

pub fn generate_all_with(
    bank: &StrokeBank,
    rules: &RuleSet,
    exec: Execution,
) -> Result<Vec<GlyphRaster>> {
    let cps: Vec<u32> = rules.characters.keys().copied().collect();
    let results = exec.map(&cps, |&cp| generate_character(cp, bank, rules, 0));
    let mut glyphs = Vec::with_capacity(cps.len());
    let mut failures = Vec::new();
    for (cp, r) in cps.iter().zip(results) {
        match r {
            Ok(g) => glyphs.push(g),
            Err(e) => failures.push((format_codepoint(*cp), e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(glyphs)
    } else {
        Err(Error::Generation(failures))
    }
}

/// A seed character crop as a glyph: shrunk to fit if needed, centred.
pub fn seed_glyph(cp: u32, crop: &BinaryRaster) -> Result<GlyphRaster> {
    let ink = crop.tight().ok_or(Error::EmptyGlyph)?;
    let room = CANVAS - 2 * MARGIN;
    let longest = ink.width().max(ink.height());
    let fitted = if longest > room {
        let s = room as f64 / longest as f64;
        ink.resize_nearest(
            ((ink.width() as f64 * s).round() as usize).max(1),
            ((ink.height() as f64 * s).round() as usize).max(1),
        )?
    } else {
        ink
    };
    Ok(GlyphRaster {
        raster: center_on_canvas(&fitted),
        character: cp,
        variant: 0,
        classes: Vec::new(),
    })
}

/// One line of the glyph manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(rename = "char")]
    pub character: String,
    pub codepoint: u32,
    pub variant: usize,
    pub file: String,
    pub classes: Vec<u8>,
    /// True for the writer's own seed characters.
    #[serde(default)]
    pub seed: bool,
}

pub fn manifest_entry(g: &GlyphRaster, seed: bool) -> ManifestEntry {
    ManifestEntry {
        character: format_codepoint(g.character),
        codepoint: g.character,
        variant: g.variant,
        file: g.file_name(),
        classes: g.classes.clone(),
        seed,
    }
}
