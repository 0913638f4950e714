use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use strokefont::compose::ManifestEntry;
use strokefont::raster::{load_binary, BinaryRaster};
use strokefont::rules::parse_codepoint;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `<stem>.report.json` beside a file output, `report.json` inside a
/// directory output.
pub fn report_path(out: &Path, is_dir: bool) -> std::path::PathBuf {
    if is_dir {
        out.join("report.json")
    } else {
        out.with_extension("report.json")
    }
}

/// Codepoint named by a file stem such as `u0A95`, `u0A95_2` or `U+0A95`.
pub fn stem_codepoint(stem: &str) -> Option<u32> {
    let head = stem.split('_').next()?;
    let hex = head.strip_prefix('u').or_else(|| head.strip_prefix('U'))?;
    parse_codepoint(&format!("U+{}", hex.trim_start_matches('+')))
}

/// Every PNG/PBM/PGM in a directory whose name starts with a codepoint,
/// grouped by codepoint in file-name order.
pub fn read_char_images(dir: &Path) -> Result<BTreeMap<u32, Vec<BinaryRaster>>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png" | "pbm" | "pgm" | "pnm")
            )
        })
        .collect();
    files.sort();
    let mut out: BTreeMap<u32, Vec<BinaryRaster>> = BTreeMap::new();
    for f in files {
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if let Some(cp) = stem_codepoint(stem) {
            out.entry(cp).or_default().push(load_binary(&f)?);
        }
    }
    if out.is_empty() {
        bail!(
            "no character images (named like u0A95.png) in {}",
            dir.display()
        );
    }
    Ok(out)
}

/// First image per character.
pub fn read_seed_dir(dir: &Path) -> Result<BTreeMap<u32, BinaryRaster>> {
    Ok(read_char_images(dir)?
        .into_iter()
        .map(|(cp, mut v)| (cp, v.remove(0)))
        .collect())
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join("manifest.json");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Variant-0 glyphs listed in a glyph directory's manifest.
pub fn read_glyphs(dir: &Path, include_seeds: bool) -> Result<BTreeMap<u32, BinaryRaster>> {
    let mut out = BTreeMap::new();
    for e in read_manifest(dir)? {
        if e.variant == 0 && (include_seeds || !e.seed) {
            out.insert(e.codepoint, load_binary(&dir.join(&e.file))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(stem_codepoint("u0A95"), Some(0x0A95));
        assert_eq!(stem_codepoint("u0AA1_3"), Some(0x0AA1));
        assert_eq!(stem_codepoint("bank"), None);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(report_path(&p, false), dir.path().join("a/b.report.json"));
    }
}
