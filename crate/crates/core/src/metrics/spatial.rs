//! Collision-free and in-boundary scores over a finished layout.

use crate::geometry::{bounding_circle_radius, OrientedFootprint, Room};

/// Share of unordered pairs whose bounding circles are strictly separated.
/// A pair at exactly `r_i + r_j` counts as colliding. Fewer than two
/// footprints score 1.0.
pub fn collision_free_score(footprints: &[OrientedFootprint]) -> f64 {
    let n = footprints.len();
    if n < 2 {
        return 1.0;
    }
    let radii: Vec<f64> = footprints.iter().map(bounding_circle_radius).collect();
    let mut free = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let d = (footprints[i].center - footprints[j].center).norm();
            if d > radii[i] + radii[j] {
                free += 1;
            }
        }
    }
    free as f64 / (n * (n - 1) / 2) as f64
}

/// Unordered pairs failing the bounding-circle test.
pub fn colliding_pairs(footprints: &[OrientedFootprint]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..footprints.len() {
        for j in i + 1..footprints.len() {
            let d = (footprints[i].center - footprints[j].center).norm();
            if d <= bounding_circle_radius(&footprints[i]) + bounding_circle_radius(&footprints[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn is_inside(f: &OrientedFootprint, room: &Room) -> bool {
    let (lo, hi) = f.aabb();
    lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= room.width && hi.y <= room.depth
}

/// Share of footprints whose corner bounds lie within the room, edges inclusive.
/// An empty layout scores 1.0.
pub fn in_boundary_score(footprints: &[OrientedFootprint], room: &Room) -> f64 {
    if footprints.is_empty() {
        return 1.0;
    }
    footprints.iter().filter(|f| is_inside(f, room)).count() as f64 / footprints.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;

    fn fp(x: f64, y: f64, hw: f64, hd: f64) -> OrientedFootprint {
        OrientedFootprint::axis_aligned(x, y, hw, hd)
    }

    #[test]
    fn circle_test_is_strict() {
        // radius 0.6 each: half extents with hypot 0.6
        let h = 0.6 / 2f64.sqrt();
        assert_eq!(collision_free_score(&[fp(0.0, 0.0, h, h), fp(1.0, 0.0, h, h)]), 0.0);
        let touching = [fp(0.0, 0.0, 0.3, 0.4), fp(1.0, 0.0, 0.3, 0.4)];
        assert_eq!(collision_free_score(&touching), 0.0);
        let apart = [fp(0.0, 0.0, 0.3, 0.4), fp(1.0 + 1e-9, 0.0, 0.3, 0.4)];
        assert_eq!(collision_free_score(&apart), 1.0);
    }

    #[test]
    fn one_pair_of_three() {
        let f = [fp(0.0, 0.0, 0.1, 0.1), fp(0.1, 0.0, 0.1, 0.1), fp(5.0, 5.0, 0.1, 0.1)];
        assert!((collision_free_score(&f) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(colliding_pairs(&f), [(0, 1)]);
        assert_eq!(collision_free_score(&f[..1]), 1.0);
    }

    #[test]
    fn boundary_inclusive() {
        let room = Room::new(4.0, 4.0, 2.5);
        let f = [
            fp(0.5, 0.5, 0.5, 0.5),
            fp(2.0, 2.0, 0.5, 0.5),
            fp(3.0, 1.0, 0.2, 0.2),
            fp(3.9, 2.0, 0.5, 0.5),
        ];
        assert_eq!(in_boundary_score(&f, &room), 0.75);
        assert_eq!(in_boundary_score(&[], &room), 1.0);
        let rotated = OrientedFootprint::new(Vec2::new(0.5, 2.0), 0.5, 0.5, 0.3);
        assert!(!is_inside(&rotated, &room));
    }
}
