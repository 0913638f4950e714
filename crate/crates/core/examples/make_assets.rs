//! Regenerates the bundled bitmaps under `crates/core/assets`.
//!
//!     cargo run -p strokefont --example make_assets

use std::fs;
use std::path::Path;

use strokefont::assets::{render_reference, render_seed, render_sheet, SEEDS};
use strokefont::raster::{encode_png, BinaryRaster};
use strokefont::strokes::StrokeClass;

/// Plain (ASCII) PBM: `1` is ink.
fn pbm(img: &BinaryRaster) -> Vec<u8> {
    let mut out = format!("P1\n{} {}\n", img.width(), img.height());
    for y in 0..img.height() {
        let row: String = (0..img.width())
            .map(|x| {
                if img.get(x as i32, y as i32) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        out.push_str(&row);
        out.push('\n');
    }
    out.into_bytes()
}

fn main() -> strokefont::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    for c in StrokeClass::all() {
        fs::write(
            root.join(format!("reference/class{c}.pbm")),
            pbm(&render_reference(c)),
        )?;
    }
    for (cp, _) in SEEDS {
        fs::write(
            root.join(format!("seeds/u{cp:04X}.png")),
            encode_png(&render_seed(cp)?)?,
        )?;
    }
    fs::write(root.join("seeds/sheet.png"), encode_png(&render_sheet()?)?)?;
    println!("assets written to {}", root.display());
    Ok(())
}
