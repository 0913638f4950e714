//! Per-pixel structural codes over a normalised stroke and the 25-element
//! zoned feature vector built from them.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryRaster, Mask3, Point, RING};
use crate::strokes::{endpoint_masks, Stroke, StrokeClass, NORMALIZED_SIZE};

/// Blocks per side of the zoning grid.
pub const GRID: usize = 5;
/// Side of one zoning block in pixels.
pub const BLOCK: usize = NORMALIZED_SIZE / GRID;
/// Feature vector length.
pub const VECTOR_LEN: usize = GRID * GRID;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum FeatureCode {
    #[default]
    Background = 0,
    Horizontal = 1,
    Vertical = 2,
    /// `/`
    RightSlant = 3,
    /// `\`
    LeftSlant = 4,
    LeftFlat = 5,
    LeftDeep = 6,
    RightFlat = 7,
    RightDeep = 8,
    Endpoint = 10,
}

impl FeatureCode {
    pub const ALL: [FeatureCode; 10] = [
        FeatureCode::Background,
        FeatureCode::Horizontal,
        FeatureCode::Vertical,
        FeatureCode::RightSlant,
        FeatureCode::LeftSlant,
        FeatureCode::LeftFlat,
        FeatureCode::LeftDeep,
        FeatureCode::RightFlat,
        FeatureCode::RightDeep,
        FeatureCode::Endpoint,
    ];

    pub fn value(self) -> u8 {
        self as u8
    }

    /// Dense index 0..10, used by count tables.
    pub fn slot(self) -> usize {
        match self {
            FeatureCode::Endpoint => 9,
            c => c as usize,
        }
    }
}

impl TryFrom<u8> for FeatureCode {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        FeatureCode::ALL
            .into_iter()
            .find(|c| c.value() == v)
            .ok_or(Error::InvalidFeatureCode(v))
    }
}

impl From<FeatureCode> for u8 {
    fn from(c: FeatureCode) -> u8 {
        c.value()
    }
}

impl fmt::Display for FeatureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A structural template: exact 3×3 mask and the code it assigns.
#[derive(Debug, Clone, Copy)]
pub struct FeatureTemplate {
    pub mask: Mask3,
    pub code: FeatureCode,
}

fn two_arm(a: (i32, i32), b: (i32, i32)) -> Mask3 {
    let bit = |(dx, dy): (i32, i32)| 1u16 << ((dy + 1) * 3 + (dx + 1));
    Mask3::from_code(1 << 4 | bit(a) | bit(b))
}

const N: (i32, i32) = (0, -1);
const NE: (i32, i32) = (1, -1);
const E: (i32, i32) = (1, 0);
const SE: (i32, i32) = (1, 1);
const S: (i32, i32) = (0, 1);
const SW: (i32, i32) = (-1, 1);
const W: (i32, i32) = (-1, 0);
const NW: (i32, i32) = (-1, -1);

/// The 16 templates in priority order: 8 endpoint masks, 4 lines, 4 curves.
pub fn feature_templates() -> Vec<FeatureTemplate> {
    let mut bank: Vec<FeatureTemplate> = endpoint_masks()
        .into_iter()
        .map(|mask| FeatureTemplate {
            mask,
            code: FeatureCode::Endpoint,
        })
        .collect();
    let shaped = [
        (W, E, FeatureCode::Horizontal),
        (N, S, FeatureCode::Vertical),
        (SW, NE, FeatureCode::RightSlant),
        (NW, SE, FeatureCode::LeftSlant),
        (N, SE, FeatureCode::LeftFlat),
        (NE, SE, FeatureCode::LeftDeep),
        (N, SW, FeatureCode::RightFlat),
        (NW, SW, FeatureCode::RightDeep),
    ];
    bank.extend(shaped.into_iter().map(|(a, b, code)| FeatureTemplate {
        mask: two_arm(a, b),
        code,
    }));
    bank
}

/// Code of the first template matching `window`, if any.
pub fn template_code(window: u16) -> Option<FeatureCode> {
    use std::sync::OnceLock;
    static BANK: OnceLock<Vec<FeatureTemplate>> = OnceLock::new();
    BANK.get_or_init(feature_templates)
        .iter()
        .find(|t| t.mask.matches(window))
        .map(|t| t.code)
}

/// 30×30 grid of feature codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    cells: Vec<FeatureCode>,
}

impl CodeMatrix {
    pub fn get(&self, x: usize, y: usize) -> FeatureCode {
        self.cells[y * NORMALIZED_SIZE + x]
    }

    pub fn cells(&self) -> &[FeatureCode] {
        &self.cells
    }

    pub fn from_cells(cells: Vec<FeatureCode>) -> Result<Self> {
        if cells.len() != NORMALIZED_SIZE * NORMALIZED_SIZE {
            return Err(Error::BufferSize {
                expected: NORMALIZED_SIZE * NORMALIZED_SIZE,
                actual: cells.len(),
            });
        }
        Ok(Self { cells })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.cells.chunks(NORMALIZED_SIZE) {
            for c in row {
                s.push(match c {
                    FeatureCode::Background => '.',
                    FeatureCode::Endpoint => 'E',
                    c => (b'0' + c.value()) as char,
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Assigns each ink pixel of a normalised stroke its structural code.
/// Pixels no template fits take the code of the nearest line or curve pixel
/// along the ink, the lower code winning ties.
pub fn code_matrix(stroke30: &BinaryRaster) -> Result<CodeMatrix> {
    if stroke30.width() != NORMALIZED_SIZE || stroke30.height() != NORMALIZED_SIZE {
        return Err(Error::InvalidDimensions {
            width: stroke30.width(),
            height: stroke30.height(),
        });
    }
    let n = NORMALIZED_SIZE;
    let mut cells = vec![FeatureCode::Background; n * n];
    let mut coded = vec![false; n * n];
    let mut frontier = Vec::new();
    let mut ends = 0;
    for p in stroke30.ink_points() {
        if let Some(code) = template_code(stroke30.window(p.x, p.y)) {
            let k = p.y as usize * n + p.x as usize;
            cells[k] = code;
            coded[k] = true;
            // endpoint codes never spread
            if code == FeatureCode::Endpoint {
                ends += 1;
            } else {
                frontier.push(p);
            }
        }
    }
    if ends > 2 {
        return Err(Error::NotAStroke(ends));
    }

    // layered BFS so equidistant claims can be resolved by the lower code
    while !frontier.is_empty() {
        let mut next: Vec<Point> = Vec::new();
        for p in &frontier {
            let code = cells[p.y as usize * n + p.x as usize];
            for (dx, dy) in RING {
                let q = Point::new(p.x + dx, p.y + dy);
                if !stroke30.at(q) {
                    continue;
                }
                let k = q.y as usize * n + q.x as usize;
                if coded[k] {
                    continue;
                }
                if cells[k] == FeatureCode::Background {
                    next.push(q);
                    cells[k] = code;
                } else if code < cells[k] {
                    cells[k] = code;
                }
            }
        }
        for q in &next {
            coded[q.y as usize * n + q.x as usize] = true;
        }
        frontier = next;
    }
    Ok(CodeMatrix { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector(pub [FeatureCode; VECTOR_LEN]);

impl FeatureVector {
    pub fn values(&self) -> [u8; VECTOR_LEN] {
        self.0.map(FeatureCode::value)
    }

    pub fn codes(&self) -> &[FeatureCode; VECTOR_LEN] {
        &self.0
    }

    pub fn endpoint_count(&self) -> usize {
        self.0
            .iter()
            .filter(|&&c| c == FeatureCode::Endpoint)
            .count()
    }
}

impl TryFrom<&[u8]> for FeatureVector {
    type Error = Error;

    fn try_from(v: &[u8]) -> Result<Self> {
        if v.len() != VECTOR_LEN {
            return Err(Error::BufferSize {
                expected: VECTOR_LEN,
                actual: v.len(),
            });
        }
        let mut out = [FeatureCode::Background; VECTOR_LEN];
        for (o, &x) in out.iter_mut().zip(v) {
            *o = FeatureCode::try_from(x)?;
        }
        Ok(FeatureVector(out))
    }
}

/// Summarises each 6×6 block: endpoint wins, sparse blocks are zero,
/// otherwise the most common nonzero code (smaller on ties).
pub fn feature_vector(cm: &CodeMatrix) -> FeatureVector {
    let mut out = [FeatureCode::Background; VECTOR_LEN];
    for by in 0..GRID {
        for bx in 0..GRID {
            let mut counts = [0usize; 10];
            for y in by * BLOCK..(by + 1) * BLOCK {
                for x in bx * BLOCK..(bx + 1) * BLOCK {
                    counts[cm.get(x, y).slot()] += 1;
                }
            }
            let nonzero: usize = counts[1..].iter().sum();
            out[by * GRID + bx] = if counts[FeatureCode::Endpoint.slot()] > 0 {
                FeatureCode::Endpoint
            } else if nonzero < 2 {
                FeatureCode::Background
            } else {
                // max_by_key keeps the last maximum; scan high to low
                FeatureCode::ALL[1..9]
                    .iter()
                    .rev()
                    .copied()
                    .max_by_key(|c| counts[c.slot()])
                    .unwrap()
            };
        }
    }
    FeatureVector(out)
}

/// Convenience: normalised stroke straight to its feature vector.
pub fn extract(stroke30: &BinaryRaster) -> Result<FeatureVector> {
    Ok(feature_vector(&code_matrix(stroke30)?))
}

/// 25 feature values followed by the class label.
pub type DatasetRow = [u8; VECTOR_LEN + 1];

pub fn make_row(v: &FeatureVector, label: StrokeClass) -> DatasetRow {
    let mut row = [0u8; VECTOR_LEN + 1];
    row[..VECTOR_LEN].copy_from_slice(&v.values());
    row[VECTOR_LEN] = label.get();
    row
}

pub fn dataset_row(stroke: &Stroke) -> Result<DatasetRow> {
    let label = stroke.class_label.ok_or(Error::MissingLabel)?;
    Ok(make_row(&extract(&stroke.normalized)?, label))
}

/// Splits a row back into its vector and label, validating both.
pub fn parse_row(row: &[u8]) -> Result<(FeatureVector, StrokeClass)> {
    if row.len() != VECTOR_LEN + 1 {
        return Err(Error::BufferSize {
            expected: VECTOR_LEN + 1,
            actual: row.len(),
        });
    }
    Ok((
        FeatureVector::try_from(&row[..VECTOR_LEN])?,
        StrokeClass::new(row[VECTOR_LEN])?,
    ))
}

/// Headerless CSV, 26 integer columns.
pub fn write_rows<W: Write>(rows: &[DatasetRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in rows {
        w.serialize(row.as_slice())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<DatasetRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize::<Vec<u8>>() {
        let rec = rec?;
        parse_row(&rec)?;
        let mut row = [0u8; VECTOR_LEN + 1];
        row.copy_from_slice(&rec);
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hline() -> BinaryRaster {
        let mut r = BinaryRaster::new(30, 30).unwrap();
        for x in 1..=28 {
            r.set(x, 15, true);
        }
        r
    }

    fn codes(v: &FeatureVector) -> Vec<u8> {
        v.values().to_vec()
    }

    #[test]
    fn sixteen_templates() {
        let bank = feature_templates();
        assert_eq!(bank.len(), 16);
        let distinct: std::collections::BTreeSet<u8> =
            bank.iter().map(|t| t.code.value()).collect();
        assert_eq!(distinct.len(), 9);
    }

    #[test]
    fn horizontal_line_codes() {
        let cm = code_matrix(&hline()).unwrap();
        assert_eq!(cm.get(1, 15), FeatureCode::Endpoint);
        assert_eq!(cm.get(28, 15), FeatureCode::Endpoint);
        for x in 2..28 {
            assert_eq!(cm.get(x, 15), FeatureCode::Horizontal);
        }
        let v = feature_vector(&cm);
        let mut expected = vec![0u8; 10];
        expected.extend([10, 1, 1, 1, 10]);
        expected.extend([0u8; 10]);
        assert_eq!(codes(&v), expected);
    }

    #[test]
    fn vertical_line_codes() {
        let r = hline().rotate90();
        let cm = code_matrix(&r).unwrap();
        let ink = r.ink_points();
        for p in &ink[1..ink.len() - 1] {
            assert_eq!(cm.get(p.x as usize, p.y as usize), FeatureCode::Vertical);
        }
        assert_eq!(
            cm.get(ink[0].x as usize, ink[0].y as usize),
            FeatureCode::Endpoint
        );
    }

    #[test]
    fn empty_raster_is_all_zero() {
        let cm = code_matrix(&BinaryRaster::new(30, 30).unwrap()).unwrap();
        assert!(cm.cells().iter().all(|&c| c == FeatureCode::Background));
        assert_eq!(codes(&feature_vector(&cm)), vec![0; 25]);
    }

    #[test]
    fn sparse_block_is_zero() {
        let mut cells = vec![FeatureCode::Background; 900];
        cells[2 * 30 + 2] = FeatureCode::Vertical;
        let v = feature_vector(&CodeMatrix::from_cells(cells).unwrap());
        assert_eq!(v.0[0], FeatureCode::Background);
    }

    #[test]
    fn block_ties_go_to_smaller_code() {
        let mut cells = vec![FeatureCode::Background; 900];
        cells[0] = FeatureCode::LeftSlant;
        cells[1] = FeatureCode::LeftSlant;
        cells[2] = FeatureCode::Vertical;
        cells[3] = FeatureCode::Vertical;
        let v = feature_vector(&CodeMatrix::from_cells(cells).unwrap());
        assert_eq!(v.0[0], FeatureCode::Vertical);
    }

    #[test]
    fn corner_pixel_inherits() {
        // an L: the corner (N,E) window matches no template
        let mut r = BinaryRaster::new(30, 30).unwrap();
        for y in 5..=15 {
            r.set(5, y, true);
        }
        for x in 6..=15 {
            r.set(x, 15, true);
        }
        let cm = code_matrix(&r).unwrap();
        // equidistant from a vertical and a horizontal pixel: lower code wins
        assert_eq!(cm.get(5, 15), FeatureCode::Horizontal);
        assert_eq!(cm.get(5, 10), FeatureCode::Vertical);
    }

    #[test]
    fn three_endpoints_rejected() {
        let mut r = hline();
        for y in 16..=20 {
            r.set(10, y, true);
        }
        // (10,15) now has three neighbours; three line ends exist
        assert!(matches!(code_matrix(&r), Err(Error::NotAStroke(3))));
    }

    #[test]
    fn flip_swaps_slants() {
        let mut r = BinaryRaster::new(30, 30).unwrap();
        for i in 3..20 {
            r.set(i, 24 - i, true);
        }
        let a = code_matrix(&r).unwrap();
        let b = code_matrix(&r.flip_horizontal()).unwrap();
        for p in r.ink_points() {
            let fa = a.get(p.x as usize, p.y as usize);
            let fb = b.get(29 - p.x as usize, p.y as usize);
            let mapped = match fa {
                FeatureCode::RightSlant => FeatureCode::LeftSlant,
                FeatureCode::LeftSlant => FeatureCode::RightSlant,
                c => c,
            };
            assert_eq!(fb, mapped);
        }
    }

    #[test]
    fn csv_round_trip() {
        let v = feature_vector(&code_matrix(&hline()).unwrap());
        let rows = vec![make_row(&v, StrokeClass::new(3).unwrap())];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
        assert_eq!(rows[0][25], 3);
    }

    #[test]
    fn invalid_code_in_csv() {
        let text = "9,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1\n";
        assert!(matches!(
            read_rows(text.as_bytes()),
            Err(Error::InvalidFeatureCode(9))
        ));
    }
}
