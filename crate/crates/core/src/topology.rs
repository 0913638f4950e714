//! Local 3×3 topology of a pixel, expressed on the 8-bit ring mask from
//! [`BinaryRaster::ring`](crate::raster::BinaryRaster::ring).

use std::sync::OnceLock;

use crate::raster::RING;

/// Number of 0→1 transitions walking the ring once (number of separate
/// branches leaving the pixel).
pub fn ring_runs(ring: u8) -> u32 {
    (0..8)
        .filter(|&i| ring & (1 << i) == 0 && ring & (1 << ((i + 1) % 8)) != 0)
        .count() as u32
}

/// Index pairs of ring cells that are opposite through the centre.
pub fn is_opposite(a: usize, b: usize) -> bool {
    (a + 4) % 8 == b
}

fn adjacent8(a: usize, b: usize) -> bool {
    let (ax, ay) = RING[a];
    let (bx, by) = RING[b];
    a != b && (ax - bx).abs() <= 1 && (ay - by).abs() <= 1
}

fn adjacent4(a: usize, b: usize) -> bool {
    let (ax, ay) = RING[a];
    let (bx, by) = RING[b];
    (ax - bx).abs() + (ay - by).abs() == 1
}

fn count_groups(cells: &[usize], adj: fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen = [false; 8];
    for &start in cells {
        if seen[start] {
            continue;
        }
        let mut group = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < group.len() {
            let c = group[i];
            for &o in cells {
                if !seen[o] && adj(c, o) {
                    seen[o] = true;
                    group.push(o);
                }
            }
            i += 1;
        }
        groups.push(group);
    }
    groups
}

/// 8-connected groups formed by the ink cells of the ring.
pub fn ink_groups(ring: u8) -> Vec<Vec<usize>> {
    let cells: Vec<usize> = (0..8).filter(|i| ring & (1 << i) != 0).collect();
    count_groups(&cells, adjacent8)
}

fn compute_simple(ring: u8) -> bool {
    let ink: Vec<usize> = (0..8).filter(|i| ring & (1 << i) != 0).collect();
    let bg: Vec<usize> = (0..8).filter(|i| ring & (1 << i) == 0).collect();
    let t8 = count_groups(&ink, adjacent8).len();
    // background groups 4-adjacent to the centre (they hold an N/E/S/W cell)
    let t4 = count_groups(&bg, adjacent4)
        .iter()
        .filter(|g| g.iter().any(|&c| c % 2 == 0))
        .count();
    t8 == 1 && t4 == 1
}

/// A pixel is simple when deleting it changes neither the number of
/// 8-connected ink components nor the number of 4-connected holes.
pub fn is_simple(ring: u8) -> bool {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [false; 256];
        for (m, slot) in t.iter_mut().enumerate() {
            *slot = compute_simple(m as u8);
        }
        t
    })[ring as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u8 = 1;
    const NE: u8 = 2;
    const E: u8 = 4;
    const SE: u8 = 8;
    const S: u8 = 16;
    const W: u8 = 64;
    const NW: u8 = 128;

    #[test]
    fn runs() {
        assert_eq!(ring_runs(0), 0);
        assert_eq!(ring_runs(0xff), 0);
        assert_eq!(ring_runs(N | S), 2);
        assert_eq!(ring_runs(N | E | S | W), 4);
        assert_eq!(ring_runs(N | NE | E), 1);
        assert_eq!(ring_runs(E | S | W), 3);
    }

    #[test]
    fn simple_points() {
        // interior of a straight line is a bridge
        assert!(!is_simple(E | W));
        // line end
        assert!(is_simple(E));
        // isolated pixel must stay
        assert!(!is_simple(0));
        // staircase corner
        assert!(is_simple(N | E));
        // fully surrounded: removing it would punch a hole
        assert!(!is_simple(0xff));
        assert!(is_simple(N | NE | E | SE | S));
        assert!(!is_simple(NW | SE));
    }
}
