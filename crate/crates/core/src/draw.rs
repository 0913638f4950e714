//! Round-pen rasterisation of polylines, plus the parametric stroke shapes
//! behind the bundled reference strokes and seed characters.

use std::f64::consts::PI;

use crate::raster::BinaryRaster;

pub type Pt = (f64, f64);

fn seg_dist2(p: Pt, a: Pt, b: Pt) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    cx * cx + cy * cy
}

/// Inks every pixel whose centre lies within `radius` of the polyline.
pub fn stroke_polyline(img: &mut BinaryRaster, pts: &[Pt], radius: f64) {
    let r2 = radius * radius;
    let segs: Vec<(Pt, Pt)> = if pts.len() == 1 {
        vec![(pts[0], pts[0])]
    } else {
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    };
    for (a, b) in segs {
        let x0 = (a.0.min(b.0) - radius).floor().max(0.0) as usize;
        let y0 = (a.1.min(b.1) - radius).floor().max(0.0) as usize;
        let x1 = ((a.0.max(b.0) + radius).ceil() as usize).min(img.width().saturating_sub(1));
        let y1 = ((a.1.max(b.1) + radius).ceil() as usize).min(img.height().saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                if seg_dist2((x as f64, y as f64), a, b) <= r2 {
                    img.set(x, y, true);
                }
            }
        }
    }
}

/// Points along an arc, angles in radians (y axis pointing down).
pub fn arc(center: Pt, r: f64, from: f64, to: f64, steps: usize) -> Vec<Pt> {
    (0..=steps)
        .map(|i| {
            let t = from + (to - from) * i as f64 / steps as f64;
            (center.0 + r * t.cos(), center.1 + r * t.sin())
        })
        .collect()
}

/// Centre line of each of the six stroke classes, in a unit box
/// (0..1 on both axes, y down).
pub fn class_path(class: u8) -> Vec<Pt> {
    match class {
        // vertical bar
        1 => vec![(0.5, 0.0), (0.5, 1.0)],
        // horizontal bar
        2 => vec![(0.0, 0.5), (1.0, 0.5)],
        // arc open to the right, like a C
        3 => arc((0.5, 0.5), 0.5, PI / 3.0, 5.0 * PI / 3.0, 48),
        // cup open at the top, like a U
        4 => {
            let mut p = vec![(0.0, 0.0)];
            p.extend(arc((0.5, 0.5), 0.5, PI, 0.0, 48));
            p.push((1.0, 0.0));
            p
        }
        // S: upper bowl open to the right, lower bowl open to the left
        5 => {
            let mut p = arc((0.5, 0.25), 0.25, -PI / 4.0, -1.5 * PI, 36);
            p.extend(
                arc((0.5, 0.75), 0.25, -PI / 2.0, 0.75 * PI, 36)
                    .into_iter()
                    .skip(1),
            );
            p
        }
        // hook: vertical stem curling left at the bottom, like a J
        6 => {
            let mut p = vec![(0.75, 0.0)];
            p.extend(arc((0.5, 0.65), 0.25, 0.0, PI, 24));
            p
        }
        _ => Vec::new(),
    }
}

/// Maps a unit-box path into pixel space: `origin` plus `size` scaling.
pub fn place(path: &[Pt], origin: Pt, size: Pt) -> Vec<Pt> {
    path.iter()
        .map(|&(x, y)| (origin.0 + x * size.0, origin.1 + y * size.1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::connected_components;

    #[test]
    fn pen_draws_connected_shapes() {
        for c in 1..=6u8 {
            let mut img = BinaryRaster::new(64, 64).unwrap();
            stroke_polyline(
                &mut img,
                &place(&class_path(c), (8.0, 8.0), (48.0, 48.0)),
                1.5,
            );
            assert_eq!(connected_components(&img).len(), 1, "class {c}");
        }
    }

    #[test]
    fn round_dot() {
        let mut img = BinaryRaster::new(7, 7).unwrap();
        stroke_polyline(&mut img, &[(3.0, 3.0)], 1.0);
        assert_eq!(img.ink_count(), 5);
    }
}
