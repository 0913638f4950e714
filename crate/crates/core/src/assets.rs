//! Bundled data: the six reference stroke bitmaps that define the stroke
//! classes, the three seed characters (singly and as a 1×3 sheet) and the
//! default ruleset.
//!
//! The bitmaps are drawn from the centre-line paths in [`crate::draw`]; the
//! `make_assets` example regenerates the files and a unit test keeps the two
//! in sync.

use crate::draw::{class_path, place, stroke_polyline};
use crate::error::{Error, Result};
use crate::raster::{gray_from_bytes, BinaryRaster, GrayRaster};
use crate::strokes::StrokeClass;

/// Side of a reference stroke bitmap.
pub const REFERENCE_SIZE: usize = 48;
const REFERENCE_PEN: f64 = 1.5;

/// Seed characters and the stroke classes each contributes, left to right.
pub const SEEDS: [(u32, [u8; 2]); 3] = [(0x0AA1, [3, 6]), (0x0AB3, [4, 5]), (0x0A9E, [1, 2])];
/// Seed character image size.
pub const SEED_WIDTH: usize = 280;
pub const SEED_HEIGHT: usize = 160;
const SEED_PEN: f64 = 4.0;
const SEED_STROKE: f64 = 100.0;

const REFERENCE_PBM: [&[u8]; 6] = [
    include_bytes!("../assets/reference/class1.pbm"),
    include_bytes!("../assets/reference/class2.pbm"),
    include_bytes!("../assets/reference/class3.pbm"),
    include_bytes!("../assets/reference/class4.pbm"),
    include_bytes!("../assets/reference/class5.pbm"),
    include_bytes!("../assets/reference/class6.pbm"),
];

const SEED_PNG: [&[u8]; 3] = [
    include_bytes!("../assets/seeds/u0AA1.png"),
    include_bytes!("../assets/seeds/u0AB3.png"),
    include_bytes!("../assets/seeds/u0A9E.png"),
];

const SHEET_PNG: &[u8] = include_bytes!("../assets/seeds/sheet.png");

/// Draws the reference bitmap for a class from its centre-line path.
pub fn render_reference(class: StrokeClass) -> BinaryRaster {
    let mut img = BinaryRaster::new(REFERENCE_SIZE, REFERENCE_SIZE).expect("fixed size");
    let path = place(&class_path(class.get()), (5.0, 5.0), (38.0, 38.0));
    stroke_polyline(&mut img, &path, REFERENCE_PEN);
    img
}

/// Bundled reference bitmap of a class.
pub fn reference_stroke(class: StrokeClass) -> Result<BinaryRaster> {
    Ok(crate::raster::binarize_otsu(&gray_from_bytes(
        REFERENCE_PBM[class.index()],
    )?))
}

/// Draws a seed character: its two strokes side by side, disconnected.
pub fn render_seed(cp: u32) -> Result<BinaryRaster> {
    let (_, classes) = SEEDS
        .iter()
        .find(|(c, _)| *c == cp)
        .ok_or_else(|| Error::UnknownCharacter(crate::rules::format_codepoint(cp)))?;
    let mut img = BinaryRaster::new(SEED_WIDTH, SEED_HEIGHT)?;
    for (i, &class) in classes.iter().enumerate() {
        let x0 = 25.0 + i as f64 * (SEED_STROKE + 30.0);
        let path = place(&class_path(class), (x0, 30.0), (SEED_STROKE, SEED_STROKE));
        stroke_polyline(&mut img, &path, SEED_PEN);
    }
    Ok(img)
}

/// The three seeds on one 1×3 sheet, one per cell.
pub fn render_sheet() -> Result<BinaryRaster> {
    let mut sheet = BinaryRaster::new(SEED_WIDTH * 3, SEED_HEIGHT)?;
    for (i, (cp, _)) in SEEDS.iter().enumerate() {
        sheet.blit(&render_seed(*cp)?, (i * SEED_WIDTH) as i32, 0);
    }
    Ok(sheet)
}

/// Bundled seed scan (grayscale, dark ink on white).
pub fn seed_image(cp: u32) -> Result<GrayRaster> {
    let i = SEEDS
        .iter()
        .position(|(c, _)| *c == cp)
        .ok_or_else(|| Error::UnknownCharacter(crate::rules::format_codepoint(cp)))?;
    gray_from_bytes(SEED_PNG[i])
}

pub fn seed_png(cp: u32) -> Option<&'static [u8]> {
    SEEDS
        .iter()
        .position(|(c, _)| *c == cp)
        .map(|i| SEED_PNG[i])
}

pub fn sheet_png() -> &'static [u8] {
    SHEET_PNG
}

pub fn seed_codepoints() -> Vec<u32> {
    SEEDS.iter().map(|(c, _)| *c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::binarize_otsu;

    #[test]
    fn bundled_references_match_generator() {
        for c in StrokeClass::all() {
            assert_eq!(
                reference_stroke(c).unwrap(),
                render_reference(c),
                "class {c}"
            );
        }
    }

    #[test]
    fn bundled_seeds_match_generator() {
        for (cp, _) in SEEDS {
            assert_eq!(
                binarize_otsu(&seed_image(cp).unwrap()),
                render_seed(cp).unwrap()
            );
        }
        assert_eq!(
            binarize_otsu(&gray_from_bytes(sheet_png()).unwrap()),
            render_sheet().unwrap()
        );
    }
}
