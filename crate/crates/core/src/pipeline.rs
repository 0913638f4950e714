//! End-to-end stages: sheet ingestion, stroke extraction and labelling, the
//! on-disk stroke bank, and the round-trip self-evaluation of generated
//! glyphs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{synthesize_dataset, train, Algo, Model, TrainParams};
use crate::compose::{
    generate_all_with, generate_character, manifest_entry, seed_glyph, GlyphRaster, ManifestEntry,
    StrokeBank,
};
use crate::error::{Error, Result};
use crate::features::extract;
use crate::fontio::{export_svg, simplify, trace_contours, FontProject};
use crate::par::Execution;
use crate::raster::{
    binarize_otsu, connected_components, encode_png, load_binary, BBox, BinaryRaster, GrayRaster,
    Point,
};
use crate::rules::{
    derive_rule, format_codepoint, Appearance, CharacterSample, RuleSet, SampleStroke,
};
use crate::strokes::{decompose_with_ink, preprocess_stroke, Stroke, StrokeClass};
use crate::thinning::skeletonize;

/// Spurs up to this many pixels are pruned before decomposition.
pub const SPUR_LEN: usize = 8;

/// Grid of a printed sample sheet, read row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetLayout {
    pub rows: usize,
    pub cols: usize,
    pub expected: Vec<u32>,
}

impl SheetLayout {
    pub fn new(rows: usize, cols: usize, expected: Vec<u32>) -> Result<Self> {
        let l = Self {
            rows,
            cols,
            expected,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Layout(format!("{}x{} grid", self.rows, self.cols)));
        }
        if self.rows * self.cols < self.expected.len() {
            return Err(Error::Layout(format!(
                "{}x{} grid cannot hold {} characters",
                self.rows,
                self.cols,
                self.expected.len()
            )));
        }
        Ok(())
    }

    /// Parses `RxC`, e.g. `1x3`.
    pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Layout(format!("expected RxC, got {s:?}")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Layout(format!("expected RxC, got {s:?}")))
        };
        Ok((num(r)?, num(c)?))
    }
}

/// Result of cutting a sheet into per-character crops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub crops: BTreeMap<u32, BinaryRaster>,
    pub warnings: Vec<String>,
}

/// Binarises a scan and assigns every ink component to the grid cell
/// holding its centroid; components sharing a cell are merged.
pub fn ingest_sheet(scan: &GrayRaster, layout: &SheetLayout) -> Result<Ingested> {
    layout.validate()?;
    let ink = binarize_otsu(scan);
    let (w, h) = (ink.width() as f64, ink.height() as f64);
    let cell_w = w / layout.cols as f64;
    let cell_h = h / layout.rows as f64;
    let mut cells: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for comp in connected_components(&ink) {
        let (cx, cy) = comp.centroid();
        let col = ((cx / cell_w) as usize).min(layout.cols - 1);
        let row = ((cy / cell_h) as usize).min(layout.rows - 1);
        let cell = row * layout.cols + col;
        let bb = comp.bbox;
        let cell_of = |x: i32, y: i32| {
            let c = ((x as f64 / cell_w) as usize).min(layout.cols - 1);
            let r = ((y as f64 / cell_h) as usize).min(layout.rows - 1);
            r * layout.cols + c
        };
        if cell_of(bb.x0, bb.y0) != cell || cell_of(bb.x1, bb.y1) != cell {
            warnings.push(format!(
                "component at ({}, {}) straddles cells; assigned to cell {cell} by centroid",
                bb.x0, bb.y0
            ));
        }
        cells.entry(cell).or_default().extend(comp.pixels);
    }
    let mut crops = BTreeMap::new();
    let mut empty = Vec::new();
    for (i, &cp) in layout.expected.iter().enumerate() {
        match cells.get(&i) {
            Some(pts) => {
                let bb = BBox::from_points(pts.iter().copied()).expect("non-empty cell");
                let local: Vec<Point> = pts
                    .iter()
                    .map(|p| Point::new(p.x - bb.x0, p.y - bb.y0))
                    .collect();
                crops.insert(
                    cp,
                    BinaryRaster::from_points(bb.width(), bb.height(), &local)?,
                );
            }
            None => empty.push(format_codepoint(cp)),
        }
    }
    if !empty.is_empty() {
        return Err(Error::EmptyCells(empty));
    }
    Ok(Ingested { crops, warnings })
}

/// Skeletonises a character image and splits it into strokes with their
/// full-weight ink.
pub fn extract_strokes(img: &BinaryRaster) -> Result<Vec<Stroke>> {
    let sk = skeletonize(img, SPUR_LEN);
    Ok(decompose_with_ink(&sk, Some(img))?.strokes)
}

/// Predicted class of every stroke.
pub fn classify_strokes(
    strokes: &[Stroke],
    model: &Model,
    exec: Execution,
) -> Result<Vec<StrokeClass>> {
    let feats = exec
        .map(strokes, |s| extract(&s.normalized))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(model.predict_all(&feats, exec))
}

/// Extracts and labels the strokes of each seed character.
pub fn label_seed_strokes(
    seeds: &BTreeMap<u32, BinaryRaster>,
    model: &Model,
    exec: Execution,
) -> Result<Vec<Stroke>> {
    let mut out = Vec::new();
    for (&cp, img) in seeds {
        let mut strokes = extract_strokes(img)?;
        let labels = classify_strokes(&strokes, model, exec)?;
        for (s, l) in strokes.iter_mut().zip(labels) {
            s.class_label = Some(l);
            s.source_char = Some(cp);
        }
        out.extend(strokes);
    }
    Ok(out)
}

pub fn build_bank(
    seeds: &BTreeMap<u32, BinaryRaster>,
    model: &Model,
    exec: Execution,
) -> Result<StrokeBank> {
    StrokeBank::from_strokes(label_seed_strokes(seeds, model, exec)?)
}

/// One bank stroke as listed in `bank.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankEntry {
    pub file: String,
    pub class: u8,
    #[serde(rename = "char")]
    pub character: String,
    pub origin: Point,
    pub endpoints: [Point; 2],
    /// Skeleton pixels in crop coordinates.
    pub skeleton: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankIndex {
    pub pen_width: u32,
    pub strokes: Vec<BankEntry>,
}

/// Bank file name: `<charid>_<index>.png`, e.g. `u0AA1_0.png`.
pub fn bank_file_name(cp: Option<u32>, index: usize) -> String {
    match cp {
        Some(cp) => format!("u{cp:04X}_{index}.png"),
        None => format!("stroke_{index}.png"),
    }
}

/// PNG crops plus the JSON index, as `(relative path, bytes)` pairs.
pub fn bank_files(strokes: &[Stroke], pen_width: f64) -> Result<Vec<(String, Vec<u8>)>> {
    let mut per_char: BTreeMap<Option<u32>, usize> = BTreeMap::new();
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for s in strokes {
        let class = s.class_label.ok_or(Error::MissingLabel)?;
        let n = per_char.entry(s.source_char).or_default();
        let file = bank_file_name(s.source_char, *n);
        *n += 1;
        files.push((file.clone(), encode_png(&s.crop)?));
        entries.push(BankEntry {
            file,
            class: class.get(),
            character: s.source_char.map(format_codepoint).unwrap_or_default(),
            origin: s.origin,
            endpoints: s.endpoints,
            skeleton: s.skeleton.ink_points(),
        });
    }
    let index = BankIndex {
        pen_width: pen_width.round() as u32,
        strokes: entries,
    };
    let mut json = serde_json::to_string_pretty(&index)?;
    json.push('\n');
    files.push(("bank.json".to_string(), json.into_bytes()));
    Ok(files)
}

/// Reads a bank directory written from [`bank_files`].
pub fn load_bank(dir: &Path) -> Result<Vec<Stroke>> {
    let index: BankIndex = serde_json::from_str(&std::fs::read_to_string(dir.join("bank.json"))?)?;
    index
        .strokes
        .iter()
        .map(|e| {
            let crop = load_binary(&dir.join(&e.file))?;
            let skeleton = BinaryRaster::from_points(crop.width(), crop.height(), &e.skeleton)?;
            Ok(Stroke {
                normalized: preprocess_stroke(&crop)?,
                crop,
                skeleton,
                origin: e.origin,
                endpoints: e.endpoints,
                class_label: Some(StrokeClass::new(e.class)?),
                source_char: crate::rules::parse_codepoint(&e.character),
            })
        })
        .collect()
}

/// Samples per class in the synthetic training set behind [`default_model`].
pub const DEFAULT_PER_CLASS: usize = 100;

/// k-NN (k = 3) trained on the synthetic reference-stroke dataset.
pub fn default_model(seed: u64) -> Result<Model> {
    let ds = synthesize_dataset(DEFAULT_PER_CLASS, seed)?;
    train(
        &ds,
        Algo::Knn,
        &TrainParams {
            seed,
            ..TrainParams::default()
        },
    )
}

/// Bundled seed characters, binarised.
pub fn bundled_seeds() -> Result<BTreeMap<u32, BinaryRaster>> {
    crate::assets::SEEDS
        .iter()
        .map(|&(cp, _)| Ok((cp, binarize_otsu(&crate::assets::seed_image(cp)?))))
        .collect()
}

/// Labelled strokes of one character as a rule-learning sample; sizes are
/// relative to `base_extent`.
pub fn character_sample(strokes: &[Stroke], base_extent: usize) -> Result<CharacterSample> {
    let strokes = strokes
        .iter()
        .map(|s| {
            Ok(SampleStroke {
                class: s.class_label.ok_or(Error::MissingLabel)?,
                skeleton: s.skeleton_points(),
                endpoints: s.endpoints_abs(),
                size: s.extent() as f64 / base_extent.max(1) as f64,
                ap: Appearance::Identity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CharacterSample {
        strokes,
        unit: base_extent.max(1) as f64,
    })
}

/// Learns one rule per character from its sample images.
pub fn learn_rules(
    samples: &BTreeMap<u32, Vec<BinaryRaster>>,
    model: &Model,
    closeness: f64,
    exec: Execution,
) -> Result<RuleSet> {
    let mut labelled: Vec<(u32, Vec<Stroke>)> = Vec::new();
    for (&cp, images) in samples {
        for img in images {
            let mut strokes = extract_strokes(img)?;
            let labels = classify_strokes(&strokes, model, exec)?;
            for (s, l) in strokes.iter_mut().zip(labels) {
                s.class_label = Some(l);
            }
            labelled.push((cp, strokes));
        }
    }
    let mut extents: Vec<usize> = labelled
        .iter()
        .flat_map(|(_, v)| v.iter().map(Stroke::extent))
        .collect();
    extents.sort_unstable();
    let base = extents.get(extents.len() / 2).copied().unwrap_or(1);
    let mut per_char: BTreeMap<u32, Vec<CharacterSample>> = BTreeMap::new();
    for (cp, strokes) in &labelled {
        per_char
            .entry(*cp)
            .or_default()
            .push(character_sample(strokes, base)?);
    }
    let mut characters = BTreeMap::new();
    for (cp, samples) in per_char {
        characters.insert(cp, derive_rule(&samples, cp, closeness)?);
    }
    let rs = RuleSet {
        version: crate::rules::RULESET_VERSION,
        source: "learned".to_string(),
        characters,
    };
    rs.validate()?;
    Ok(rs)
}

/// Every glyph of a generated set with its manifest line: the seeds as
/// written, then every variant of every rule.
pub fn generate_glyph_set(
    seeds: &BTreeMap<u32, BinaryRaster>,
    bank: &StrokeBank,
    rules: &RuleSet,
    exec: Execution,
) -> Result<Vec<(GlyphRaster, ManifestEntry)>> {
    let mut out = Vec::new();
    for (&cp, img) in seeds {
        let g = seed_glyph(cp, img)?;
        let m = manifest_entry(&g, true);
        out.push((g, m));
    }
    for g in generate_all_with(bank, rules, exec)? {
        let m = manifest_entry(&g, false);
        out.push((g, m));
    }
    for rule in rules.rules() {
        for v in 1..rule.variants.len() {
            let g = generate_character(rule.character, bank, rules, v)?;
            let m = manifest_entry(&g, false);
            out.push((g, m));
        }
    }
    Ok(out)
}

/// Traces, simplifies and collects glyphs into a font, with one SVG per
/// glyph.
pub fn build_font(
    glyphs: &BTreeMap<u32, BinaryRaster>,
    family: &str,
    epsilon: f64,
    exec: Execution,
) -> Result<(FontProject, BTreeMap<u32, String>)> {
    let cps: Vec<u32> = glyphs.keys().copied().collect();
    let traced = exec
        .map(&cps, |cp| simplify(&trace_contours(&glyphs[cp]), epsilon))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut fp = FontProject::new(family);
    let mut svgs = BTreeMap::new();
    for (cp, contours) in cps.into_iter().zip(traced) {
        svgs.insert(cp, export_svg(cp, &contours)?);
        fp.add_glyph(cp, contours)?;
    }
    Ok((fp, svgs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Class multisets are equal.
    Pass,
    /// Some classes in common.
    Partial,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Partial => "partial",
            Verdict::Fail => "fail",
        })
    }
}

impl FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Verdict::Pass),
            "partial" => Ok(Verdict::Partial),
            "fail" => Ok(Verdict::Fail),
            _ => Err(Error::InvalidParameter(format!("verdict {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripRow {
    #[serde(rename = "char")]
    pub character: String,
    pub expected: Vec<u8>,
    pub found: Vec<u8>,
    /// Share of expected classes recovered (multiset intersection).
    pub recall: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub rows: Vec<RoundTripRow>,
    pub passed: usize,
    pub partial: usize,
    pub failed: usize,
    /// Fraction of characters that pass.
    pub overall: f64,
}

fn multiset_overlap(a: &[u8], b: &[u8]) -> usize {
    let mut counts = [0i32; 7];
    for &c in a {
        counts[c as usize % 7] += 1;
    }
    b.iter()
        .filter(|&&c| {
            let k = &mut counts[c as usize % 7];
            *k -= 1;
            *k >= 0
        })
        .count()
}

/// Compares the re-extracted classes of one glyph with its rule.
pub fn judge(
    character: u32,
    expected: &[u8],
    glyph: &BinaryRaster,
    model: &Model,
) -> Result<RoundTripRow> {
    let mut expected = expected.to_vec();
    expected.sort_unstable();
    let strokes = match extract_strokes(glyph) {
        Ok(s) => s,
        // an undecomposable glyph recovers nothing
        Err(Error::NotAStroke(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut found: Vec<u8> = classify_strokes(&strokes, model, Execution::Sequential)?
        .into_iter()
        .map(StrokeClass::get)
        .collect();
    found.sort_unstable();
    let overlap = multiset_overlap(&expected, &found);
    let verdict = if found == expected {
        Verdict::Pass
    } else if overlap > 0 {
        Verdict::Partial
    } else {
        Verdict::Fail
    };
    Ok(RoundTripRow {
        character: format_codepoint(character),
        recall: overlap as f64 / expected.len().max(1) as f64,
        expected,
        found,
        verdict,
    })
}

/// Round-trip evaluation of variant-0 glyphs against the ruleset. Every
/// rule gets a row; a missing glyph fails.
pub fn run_roundtrip_eval(
    glyphs: &BTreeMap<u32, BinaryRaster>,
    rules: &RuleSet,
    model: &Model,
    exec: Execution,
) -> Result<RoundTripReport> {
    let cps: Vec<u32> = rules.characters.keys().copied().collect();
    let rows = exec
        .map(&cps, |&cp| {
            let expected = rules.get(cp).expect("listed").class_multiset(0);
            match glyphs.get(&cp) {
                Some(g) => judge(cp, &expected, g, model),
                None => Ok(RoundTripRow {
                    character: format_codepoint(cp),
                    expected,
                    found: Vec::new(),
                    recall: 0.0,
                    verdict: Verdict::Fail,
                }),
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let passed = count(Verdict::Pass);
    Ok(RoundTripReport {
        passed,
        partial: count(Verdict::Partial),
        failed: count(Verdict::Fail),
        overall: if rows.is_empty() {
            0.0
        } else {
            passed as f64 / rows.len() as f64
        },
        rows,
    })
}

/// Negative control: every placement's class moves to the next class
/// (6 wraps to 1), so no rule keeps its class multiset.
pub fn scramble_ruleset(rules: &RuleSet) -> RuleSet {
    let mut out = rules.clone();
    for rule in out.characters.values_mut() {
        for v in &mut rule.variants {
            for p in v.iter_mut() {
                p.class = p.class % 6 + 1;
            }
        }
    }
    out.source = format!("{} (scrambled)", rules.source);
    out
}

impl RoundTripReport {
    /// Per-character table: character, expected and found classes, verdict.
    pub fn render(&self) -> String {
        let fmt_classes = |v: &[u8]| v.iter().map(u8::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "{:<8} {:<14} {:<14} {:>6} verdict\n",
            "char", "expected", "found", "recall"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<8} {:<14} {:<14} {:>6.2} {}\n",
                r.character,
                fmt_classes(&r.expected),
                fmt_classes(&r.found),
                r.recall,
                r.verdict
            ));
        }
        out.push_str(&format!(
            "pass {} / partial {} / fail {} — overall {:.4}\n",
            self.passed, self.partial, self.failed, self.overall
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(img: &mut GrayRaster, x: usize, y: usize, s: usize) {
        for yy in y..y + s {
            for xx in x..x + s {
                img.set(xx, yy, 0);
            }
        }
    }

    #[test]
    fn sheet_cells_by_centroid() {
        let mut scan = GrayRaster::filled(90, 30, 255).unwrap();
        blob(&mut scan, 5, 5, 10);
        blob(&mut scan, 40, 10, 8);
        blob(&mut scan, 70, 3, 12);
        let layout = SheetLayout::new(1, 3, vec![0x0AA1, 0x0AB3, 0x0A9E]).unwrap();
        let got = ingest_sheet(&scan, &layout).unwrap();
        let sizes: Vec<(u32, usize, usize)> = got
            .crops
            .iter()
            .map(|(&cp, r)| (cp, r.width(), r.ink_count()))
            .collect();
        assert_eq!(
            sizes,
            vec![(0x0A9E, 12, 144), (0x0AA1, 10, 100), (0x0AB3, 8, 64)]
        );
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn stray_mark_merges_into_cell() {
        let mut scan = GrayRaster::filled(60, 30, 255).unwrap();
        blob(&mut scan, 5, 5, 10);
        blob(&mut scan, 20, 20, 2);
        blob(&mut scan, 40, 5, 10);
        let layout = SheetLayout::new(1, 2, vec![0x0A95, 0x0A96]).unwrap();
        let got = ingest_sheet(&scan, &layout).unwrap();
        let first = &got.crops[&0x0A95];
        assert_eq!(
            (first.width(), first.height(), first.ink_count()),
            (17, 17, 104)
        );
    }

    #[test]
    fn blank_sheet_names_every_cell() {
        let scan = GrayRaster::filled(60, 30, 255).unwrap();
        let layout = SheetLayout::new(1, 2, vec![0x0A95, 0x0A96]).unwrap();
        match ingest_sheet(&scan, &layout) {
            Err(Error::EmptyCells(c)) => assert_eq!(c, vec!["U+0A95", "U+0A96"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn layout_checks() {
        assert_eq!(SheetLayout::parse_grid("2x3").unwrap(), (2, 3));
        assert!(SheetLayout::parse_grid("23").is_err());
        assert!(SheetLayout::new(1, 2, vec![1, 2, 3]).is_err());
    }

    #[test]
    fn overlap_counts_multiplicity() {
        assert_eq!(multiset_overlap(&[1, 1, 2], &[1, 2, 2]), 2);
        assert_eq!(multiset_overlap(&[3], &[4, 5]), 0);
    }

    #[test]
    fn scrambling_changes_every_multiset() {
        let rs = crate::rules::default_ruleset();
        let sc = scramble_ruleset(&rs);
        for (a, b) in rs.rules().zip(sc.rules()) {
            assert_ne!(a.class_multiset(0), b.class_multiset(0), "{}", a.label());
        }
    }
}
