//! Penalty values and analytic gradients for each term kind.
//!
//! Gradients are returned per participant as `[d/dx, d/dy, d/dyaw]`.
//! Non-smooth loci (separating-axis switches, nearest-corner switches,
//! coincident centers) use the one-sided derivative of whichever branch the
//! evaluation picks; these sets have measure zero.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::{bounding_circle_radius, penetration_axis, OrientedFootprint, Room, Vec2, Wall};

pub type PoseGrad = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub value: f64,
    pub grad: [PoseGrad; 2],
}

impl Local {
    fn zero() -> Self {
        Self {
            value: 0.0,
            grad: [[0.0; 3]; 2],
        }
    }
}

pub fn distance(a: Vec2, b: Vec2, d_min: f64, d_max: f64) -> Local {
    let delta = a - b;
    let d = delta.norm();
    let under = (d_min - d).max(0.0);
    let over = (d - d_max).max(0.0);
    let value = under * under + over * over;
    if d == 0.0 || value == 0.0 {
        return Local { value, grad: [[0.0; 3]; 2] };
    }
    let dv_dd = -2.0 * under + 2.0 * over;
    let u = delta.scale(dv_dd / d);
    Local {
        value,
        grad: [[u.x, u.y, 0.0], [-u.x, -u.y, 0.0]],
    }
}

pub fn align_with(yaw_a: f64, yaw_b: f64, theta: f64) -> Local {
    let alpha = yaw_a - yaw_b - theta;
    let s = alpha.sin();
    Local {
        value: 1.0 - alpha.cos(),
        grad: [[0.0, 0.0, s], [0.0, 0.0, -s]],
    }
}

/// Front of `a` (pose `a_pos`, `yaw_a`) toward the center of `b`, offset by `theta`.
pub fn point_towards(a_pos: Vec2, yaw_a: f64, b_pos: Vec2, theta: f64) -> Local {
    let delta = b_pos - a_pos;
    let r2 = delta.dot(delta);
    let phi = delta.y.atan2(delta.x);
    let alpha = yaw_a + FRAC_PI_2 - phi - theta;
    let s = alpha.sin();
    let mut out = Local {
        value: 1.0 - alpha.cos(),
        grad: [[0.0, 0.0, s], [0.0; 3]],
    };
    if r2 > 0.0 {
        let (gx, gy) = (-delta.y / r2, delta.x / r2);
        out.grad[0][0] = s * gx;
        out.grad[0][1] = s * gy;
        out.grad[1][0] = -s * gx;
        out.grad[1][1] = -s * gy;
    }
    out
}

/// Derivative of a corner position with respect to yaw.
fn corner_yaw_derivative(f: &OrientedFootprint, sx: f64, sy: f64) -> Vec2 {
    let (u, v) = f.axes();
    v.scale(sx * f.half_width) - u.scale(sy * f.half_depth)
}

const CORNER_SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

pub fn against_wall(f: &OrientedFootprint, room: &Room, wall: Wall) -> Local {
    let (n, off) = room.wall_line(wall);
    let corners = f.corners();
    let (k, wd) = corners
        .iter()
        .enumerate()
        .map(|(k, c)| (k, n.dot(*c) - off))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four corners");
    let (sx, sy) = CORNER_SIGNS[k];
    let dyaw_corner = n.dot(corner_yaw_derivative(f, sx, sy));
    let rel = f.yaw - wall.back_yaw();
    Local {
        value: wd * wd + (1.0 - rel.cos()),
        grad: [
            [2.0 * wd * n.x, 2.0 * wd * n.y, 2.0 * wd * dyaw_corner + rel.sin()],
            [0.0; 3],
        ],
    }
}

pub fn on_top_of(top: Vec2, support: Vec2) -> Local {
    let delta = top - support;
    Local {
        value: delta.dot(delta),
        grad: [[2.0 * delta.x, 2.0 * delta.y, 0.0], [-2.0 * delta.x, -2.0 * delta.y, 0.0]],
    }
}

pub fn collision(a: &OrientedFootprint, b: &OrientedFootprint) -> Local {
    let Some(axis) = penetration_axis(a, b) else {
        return Local::zero();
    };
    let pd = axis.value;
    let g = axis.grad.map(|x| 2.0 * pd * x);
    Local {
        value: pd * pd,
        grad: [[g[0], g[1], g[2]], [g[3], g[4], g[5]]],
    }
}

/// Squared corner excursions outside the room inset by `inset`.
pub fn boundary(f: &OrientedFootprint, room: &Room, inset: f64) -> Local {
    let mut out = Local::zero();
    for (c, (sx, sy)) in f.corners().into_iter().zip(CORNER_SIGNS) {
        let ex = (inset - c.x).max(0.0);
        let fx = (c.x - (room.width - inset)).max(0.0);
        let ey = (inset - c.y).max(0.0);
        let fy = (c.y - (room.depth - inset)).max(0.0);
        out.value += ex * ex + fx * fx + ey * ey + fy * fy;
        let dc = Vec2::new(-2.0 * ex + 2.0 * fx, -2.0 * ey + 2.0 * fy);
        if dc.x == 0.0 && dc.y == 0.0 {
            continue;
        }
        let dyaw = corner_yaw_derivative(f, sx, sy);
        out.grad[0][0] += dc.x;
        out.grad[0][1] += dc.y;
        out.grad[0][2] += dc.dot(dyaw);
    }
    out
}

/// Margin added to the radius sum so a satisfied pair is strictly separated.
pub const CIRCLE_MARGIN: f64 = 1e-3;

/// `max(0, r_a + r_b + margin - d)²` on the bounding circles.
pub fn circle_clearance(a: &OrientedFootprint, b: &OrientedFootprint) -> Local {
    let delta = a.center - b.center;
    let d = delta.norm();
    let need = bounding_circle_radius(a) + bounding_circle_radius(b) + CIRCLE_MARGIN;
    let gap = (need - d).max(0.0);
    if gap == 0.0 || d == 0.0 {
        return Local {
            value: gap * gap,
            grad: [[0.0; 3]; 2],
        };
    }
    let u = delta.scale(-2.0 * gap / d);
    Local {
        value: gap * gap,
        grad: [[u.x, u.y, 0.0], [-u.x, -u.y, 0.0]],
    }
}
