//! Planar oriented-box geometry.
//!
//! Every footprint lives in the floor plane with `+X` to the right and `+Y`
//! forward. Yaw is measured counterclockwise from `+X`, and the front of an
//! object is its local `+Y` axis rotated by yaw.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let r = yaw.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Planar placement of an asset. `z_base` is assigned by stacking, never optimized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    #[serde(default)]
    pub z_base: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_yaw(yaw),
            z_base: 0.0,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Unit vector of the object's front face: local `+Y` rotated by `yaw`.
pub fn front_direction(pose: &Pose) -> Vec2 {
    let (s, c) = pose.yaw.sin_cos();
    Vec2::new(-s, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedFootprint {
    pub center: Vec2,
    pub half_width: f64,
    pub half_depth: f64,
    pub yaw: f64,
}

impl OrientedFootprint {
    pub fn new(center: Vec2, half_width: f64, half_depth: f64, yaw: f64) -> Self {
        Self {
            center,
            half_width,
            half_depth,
            yaw,
        }
    }

    pub fn axis_aligned(cx: f64, cy: f64, half_width: f64, half_depth: f64) -> Self {
        Self::new(Vec2::new(cx, cy), half_width, half_depth, 0.0)
    }

    /// Local `+X` and `+Y` axes in world coordinates.
    pub fn axes(&self) -> (Vec2, Vec2) {
        let (s, c) = self.yaw.sin_cos();
        (Vec2::new(c, s), Vec2::new(-s, c))
    }

    /// Corners in counterclockwise order starting at local (−w, −d).
    pub fn corners(&self) -> [Vec2; 4] {
        let (u, v) = self.axes();
        const SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        SIGNS.map(|(sx, sy)| {
            self.center + u.scale(sx * self.half_width) + v.scale(sy * self.half_depth)
        })
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_depth
    }

    /// Axis-aligned bounds `(min, max)` of the corners.
    pub fn aabb(&self) -> (Vec2, Vec2) {
        let cs = self.corners();
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in cs {
            lo.x = lo.x.min(c.x);
            lo.y = lo.y.min(c.y);
            hi.x = hi.x.max(c.x);
            hi.y = hi.y.max(c.y);
        }
        (lo, hi)
    }

    /// Projection radius onto a unit axis whose angle is `axis_angle`.
    fn projected_radius(&self, axis_angle: f64) -> f64 {
        let rel = axis_angle - self.yaw;
        self.half_width * rel.cos().abs() + self.half_depth * rel.sin().abs()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.half_width && d.dot(v).abs() <= self.half_depth
    }
}

pub fn bounding_circle_radius(footprint: &OrientedFootprint) -> f64 {
    footprint.half_width.hypot(footprint.half_depth)
}

/// Overlap along one candidate separating axis, plus its partial derivatives.
///
/// The axis has angle `axis_angle` and belongs to the box with index `owner`
/// (0 for `a`, 1 for `b`); its angle moves with that box's yaw.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisOverlap {
    pub value: f64,
    /// ∂/∂(ax, ay, ayaw, bx, by, byaw)
    pub grad: [f64; 6],
}

pub(crate) fn axis_overlap(
    a: &OrientedFootprint,
    b: &OrientedFootprint,
    owner: usize,
    quarter_turns: u32,
) -> AxisOverlap {
    let owner_yaw = if owner == 0 { a.yaw } else { b.yaw };
    let theta = owner_yaw + quarter_turns as f64 * FRAC_PI_2;
    let (s, c) = theta.sin_cos();
    let n = Vec2::new(c, s);
    let n_perp = Vec2::new(-s, c);
    let delta = b.center - a.center;
    let sep = n.dot(delta);
    let sign = if sep >= 0.0 { 1.0 } else { -1.0 };

    let value = a.projected_radius(theta) + b.projected_radius(theta) - sep.abs();

    // d r_box / d(theta - yaw_box)
    let dr = |f: &OrientedFootprint| {
        let rel = theta - f.yaw;
        let (rs, rc) = rel.sin_cos();
        let sgn_c = if rc >= 0.0 { 1.0 } else { -1.0 };
        let sgn_s = if rs >= 0.0 { 1.0 } else { -1.0 };
        -f.half_width * sgn_c * rs + f.half_depth * sgn_s * rc
    };
    let dra = dr(a);
    let drb = dr(b);
    let d_theta = dra + drb - sign * n_perp.dot(delta);

    let mut grad = [0.0; 6];
    grad[0] = sign * n.x;
    grad[1] = sign * n.y;
    grad[3] = -sign * n.x;
    grad[4] = -sign * n.y;
    grad[2] = -dra;
    grad[5] = -drb;
    if owner == 0 {
        grad[2] += d_theta;
    } else {
        grad[5] += d_theta;
    }
    AxisOverlap { value, grad }
}

/// Minimal-overlap separating axis among the four box axes. `None` when the
/// boxes are separated or touching.
pub(crate) fn penetration_axis(a: &OrientedFootprint, b: &OrientedFootprint) -> Option<AxisOverlap> {
    let mut best: Option<AxisOverlap> = None;
    for owner in 0..2 {
        for q in 0..2 {
            let o = axis_overlap(a, b, owner, q);
            if o.value <= 0.0 {
                return None;
            }
            if best.map_or(true, |b| o.value < b.value) {
                best = Some(o);
            }
        }
    }
    best
}

/// Minimal translation distance separating two footprints; 0 when disjoint or touching.
pub fn penetration_depth(a: &OrientedFootprint, b: &OrientedFootprint) -> f64 {
    penetration_axis(a, b).map_or(0.0, |o| o.value)
}

/// Clips `subject` by the half-plane to the left of the directed edge `p -> q`.
fn clip_half_plane(subject: &[Vec2], p: Vec2, q: Vec2) -> Vec<Vec2> {
    let edge = q - p;
    let side = |v: Vec2| edge.cross(v - p);
    let mut out = Vec::with_capacity(subject.len() + 2);
    for (i, &cur) in subject.iter().enumerate() {
        let prev = subject[(i + subject.len() - 1) % subject.len()];
        let (sc, sp) = (side(cur), side(prev));
        if sc >= 0.0 {
            if sp < 0.0 {
                out.push(prev + (cur - prev).scale(sp / (sp - sc)));
            }
            out.push(cur);
        } else if sp >= 0.0 {
            out.push(prev + (cur - prev).scale(sp / (sp - sc)));
        }
    }
    out
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        twice += poly[i].cross(poly[(i + 1) % poly.len()]);
    }
    0.5 * twice.abs()
}

/// Area of the intersection of two footprints, by convex polygon clipping.
pub fn intersection_area(a: &OrientedFootprint, b: &OrientedFootprint) -> f64 {
    let mut poly = a.corners().to_vec();
    let clip = b.corners();
    for i in 0..4 {
        if poly.is_empty() {
            return 0.0;
        }
        poly = clip_half_plane(&poly, clip[i], clip[(i + 1) % 4]);
    }
    polygon_area(&poly)
}

/// Intersection area over the smaller footprint's area, in `[0, 1]`.
pub fn overlap_ratio(a: &OrientedFootprint, b: &OrientedFootprint) -> f64 {
    let smaller = a.area().min(b.area());
    if smaller <= 0.0 {
        return 0.0;
    }
    (intersection_area(a, b) / smaller).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wall {
    South = 0,
    East = 1,
    North = 2,
    West = 3,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::South, Wall::East, Wall::North, Wall::West];

    pub fn from_index(i: usize) -> Option<Wall> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Yaw at which an object's back faces this wall (front points into the room).
    pub fn as_str(self) -> &'static str {
        ["south", "east", "north", "west"][self.index()]
    }

    pub fn back_yaw(self) -> f64 {
        self.index() as f64 * FRAC_PI_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl Room {
    pub fn new(width: f64, depth: f64, height: f64) -> Self {
        Self {
            width,
            depth,
            height,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0.0 && self.depth > 0.0 && self.height > 0.0
    }

    /// Inward unit normal and the offset such that `signed = n·p - offset`.
    pub fn wall_line(&self, wall: Wall) -> (Vec2, f64) {
        match wall {
            Wall::South => (Vec2::new(0.0, 1.0), 0.0),
            Wall::East => (Vec2::new(-1.0, 0.0), -self.width),
            Wall::North => (Vec2::new(0.0, -1.0), -self.depth),
            Wall::West => (Vec2::new(1.0, 0.0), 0.0),
        }
    }

    /// Endpoints of the wall segment, counterclockwise around the room.
    pub fn wall_segment(&self, wall: Wall) -> (Vec2, Vec2) {
        let (w, d) = (self.width, self.depth);
        match wall {
            Wall::South => (Vec2::new(0.0, 0.0), Vec2::new(w, 0.0)),
            Wall::East => (Vec2::new(w, 0.0), Vec2::new(w, d)),
            Wall::North => (Vec2::new(w, d), Vec2::new(0.0, d)),
            Wall::West => (Vec2::new(0.0, d), Vec2::new(0.0, 0.0)),
        }
    }
}

/// Signed distance from the footprint's nearest corner to a wall line.
/// Negative when that corner is outside the room through the wall.
pub fn wall_distance(footprint: &OrientedFootprint, room: &Room, wall: Wall) -> f64 {
    let (n, off) = room.wall_line(wall);
    footprint
        .corners()
        .iter()
        .map(|c| n.dot(*c) - off)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sq(cx: f64, cy: f64, h: f64) -> OrientedFootprint {
        OrientedFootprint::axis_aligned(cx, cy, h, h)
    }

    #[test]
    fn circle_radius() {
        assert_abs_diff_eq!(bounding_circle_radius(&sq(0.0, 0.0, 0.0)), 0.0);
        let f = OrientedFootprint::axis_aligned(0.0, 0.0, 0.3, 0.4);
        assert_abs_diff_eq!(bounding_circle_radius(&f), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            bounding_circle_radius(&sq(0.0, 0.0, 0.5)),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn penetration_examples() {
        assert_eq!(penetration_depth(&sq(0.0, 0.0, 0.5), &sq(2.0, 0.0, 0.5)), 0.0);
        assert_abs_diff_eq!(penetration_depth(&sq(1.0, 1.0, 0.5), &sq(1.0, 1.0, 0.5)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(penetration_depth(&sq(0.0, 0.0, 0.5), &sq(0.8, 0.0, 0.5)), 0.2, epsilon = 1e-12);
        // touching
        assert_eq!(penetration_depth(&sq(0.0, 0.0, 0.5), &sq(1.0, 0.0, 0.5)), 0.0);
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap_ratio(&sq(0.0, 0.0, 0.5), &sq(3.0, 0.0, 0.5)), 0.0);
        assert_abs_diff_eq!(overlap_ratio(&sq(0.0, 0.0, 0.5), &sq(0.0, 0.0, 0.5)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap_ratio(&sq(0.0, 0.0, 0.5), &sq(0.5, 0.0, 0.5)), 0.5, epsilon = 1e-12);
        assert_eq!(overlap_ratio(&sq(0.0, 0.0, 0.0), &sq(0.0, 0.0, 0.5)), 0.0);
    }

    #[test]
    fn wall_distance_examples() {
        let room = Room::new(5.5, 5.5, 2.5);
        assert_abs_diff_eq!(wall_distance(&sq(0.5, 2.0, 0.5), &room, Wall::West), 0.0);
        assert_abs_diff_eq!(wall_distance(&sq(0.5, 2.0, 0.5), &room, Wall::East), 4.5);
        assert_abs_diff_eq!(wall_distance(&sq(-0.1, 2.0, 0.5), &room, Wall::West), -0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(wall_distance(&sq(2.0, 5.0, 0.5), &room, Wall::North), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wall_distance(&sq(2.0, 0.25, 0.5), &room, Wall::South), -0.25, epsilon = 1e-12);
    }

    #[test]
    fn front_directions() {
        let f = front_direction(&Pose::new(0.0, 0.0, 0.0));
        assert_abs_diff_eq!(f.x, 0.0);
        assert_abs_diff_eq!(f.y, 1.0);
        let f = front_direction(&Pose::new(0.0, 0.0, PI / 2.0));
        assert_abs_diff_eq!(f.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-15);
        let f = front_direction(&Pose::new(0.0, 0.0, PI));
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn yaw_normalization() {
        assert_eq!(normalize_yaw(0.0), 0.0);
        assert_abs_diff_eq!(normalize_yaw(-PI / 2.0), 1.5 * PI, epsilon = 1e-15);
        assert!(normalize_yaw(-1e-20) < TAU);
        assert_abs_diff_eq!(normalize_yaw(7.0 * PI), PI, epsilon = 1e-12);
    }

    #[test]
    fn corners_are_counterclockwise() {
        let f = OrientedFootprint::new(Vec2::new(1.0, 2.0), 0.7, 0.2, 2.3);
        let c = f.corners();
        for i in 0..4 {
            let e0 = c[(i + 1) % 4] - c[i];
            let e1 = c[(i + 2) % 4] - c[(i + 1) % 4];
            assert!(e0.cross(e1) > 0.0);
        }
        assert_abs_diff_eq!(polygon_area(&c), f.area(), epsilon = 1e-12);
    }

    fn footprint() -> impl Strategy<Value = OrientedFootprint> {
        (-2.0..2.0f64, -2.0..2.0f64, 0.05..1.2f64, 0.05..1.2f64, 0.0..TAU)
            .prop_map(|(x, y, w, d, yaw)| OrientedFootprint::new(Vec2::new(x, y), w, d, yaw))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn penetration_symmetric(a in footprint(), b in footprint()) {
            let ab = penetration_depth(&a, &b);
            let ba = penetration_depth(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-12);
        }

        #[test]
        fn translation_invariance(a in footprint(), b in footprint(), tx in -10.0..10.0f64, ty in -10.0..10.0f64) {
            let t = Vec2::new(tx, ty);
            let a2 = OrientedFootprint { center: a.center + t, ..a };
            let b2 = OrientedFootprint { center: b.center + t, ..b };
            prop_assert!((penetration_depth(&a, &b) - penetration_depth(&a2, &b2)).abs() < 1e-9);
            prop_assert!((overlap_ratio(&a, &b) - overlap_ratio(&a2, &b2)).abs() < 1e-9);
        }

        #[test]
        fn corners_periodic_in_yaw(a in footprint()) {
            let b = OrientedFootprint { yaw: a.yaw + TAU, ..a };
            for (p, q) in a.corners().iter().zip(b.corners().iter()) {
                prop_assert!((p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12);
            }
        }

        #[test]
        fn overlap_ratio_in_unit_interval(a in footprint(), b in footprint()) {
            let r = overlap_ratio(&a, &b);
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    /// Positive depth exactly when the clipped intersection has positive area.
    #[test]
    fn penetration_agrees_with_clipping() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let mut f = || {
                OrientedFootprint::new(
                    Vec2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
                    rng.gen_range(0.05..1.0),
                    rng.gen_range(0.05..1.0),
                    rng.gen_range(0.0..TAU),
                )
            };
            let (a, b) = (f(), f());
            let pd = penetration_depth(&a, &b);
            let area = intersection_area(&a, &b);
            // near-touching pairs are ambiguous at machine precision
            if pd.abs() < 1e-9 || area < 1e-12 && pd < 1e-6 {
                continue;
            }
            assert_eq!(pd > 0.0, area > 0.0, "pd={pd} area={area} a={a:?} b={b:?}");
        }
    }
}
