//! Tube surrogate: a lofted surface from a circular end to a rounded
//! rectangle, with 14 parameters.
//!
//! Rings are sampled at fixed fractions along the tube. Ring `j` blends the
//! circle boundary into the rounded-rectangle boundary (both arc-length
//! parametrized with matching start phase), adds a mid-span bend bulge, and
//! twists the rectangular end's sampling phase. Corner rounding, twist, and
//! the blend make the map nonlinear in its parameters.

use super::{section_budgets, section_count, ParameterVector, PointCloud};
use crate::error::{Error, Result};

pub(super) const PARAM_COUNT: usize = 14;

pub(super) const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "circle_center_x",
    "circle_center_y",
    "circle_center_z",
    "circle_radius",
    "rect_center_x",
    "rect_center_y",
    "rect_z_offset",
    "rect_width",
    "rect_height",
    "corner_radius",
    "length",
    "bend_x",
    "bend_y",
    "twist",
];

pub(super) const RANGES: [(f64, f64); PARAM_COUNT] = [
    (-2.0, 2.0),  // circle_center_x
    (-2.0, 2.0),  // circle_center_y
    (-1.0, 1.0),  // circle_center_z
    (0.5, 2.5),   // circle_radius
    (-2.0, 2.0),  // rect_center_x
    (-2.0, 2.0),  // rect_center_y
    (-1.0, 1.0),  // rect_z_offset
    (1.0, 3.0),   // rect_width
    (1.0, 3.0),   // rect_height
    (0.1, 0.5),   // corner_radius
    (4.0, 8.0),   // length
    (-1.5, 1.5),  // bend_x
    (-1.5, 1.5),  // bend_y
    (0.0, std::f64::consts::FRAC_PI_2), // twist
];

/// Boundary point of the rounded rectangle `w x h` with corner radius `rc`,
/// at arc-length fraction `u` of a counter-clockwise walk starting at
/// `(w/2, 0)`.
///
/// When `rc = w/2 = h/2` the straight edges vanish and the walk reduces
/// exactly to the angle parametrization of a circle of radius `rc`, which is
/// what makes the degenerate loft a true cylinder.
fn rounded_rect_point(w: f64, h: f64, rc: f64, u: f64) -> [f64; 2] {
    use std::f64::consts::FRAC_PI_2;
    let ex = w / 2.0 - rc; // half straight run of top/bottom edges
    let ey = h / 2.0 - rc; // half straight run of left/right edges
    let quarter = FRAC_PI_2 * rc;
    // segment lengths of the walk: half right edge, then alternating
    // corner / edge, closing with the lower half of the right edge
    let segments = [
        ey,
        quarter,
        2.0 * ex,
        quarter,
        2.0 * ey,
        quarter,
        2.0 * ex,
        quarter,
        ey,
    ];
    let perimeter: f64 = segments.iter().sum();
    let mut d = u * perimeter;
    let arc = |cx: f64, cy: f64, start: f64, t: f64| -> [f64; 2] {
        let angle = start + t / rc;
        [cx + rc * angle.cos(), cy + rc * angle.sin()]
    };
    for (i, &len) in segments.iter().enumerate() {
        if d <= len && len > 0.0 || i == segments.len() - 1 {
            return match i {
                0 => [w / 2.0, d],
                1 => arc(ex, ey, 0.0, d),
                2 => [ex - d, h / 2.0],
                3 => arc(-ex, ey, FRAC_PI_2, d),
                4 => [-w / 2.0, ey - d],
                5 => arc(-ex, -ey, 2.0 * FRAC_PI_2, d),
                6 => [-ex + d, -h / 2.0],
                7 => arc(ex, -ey, 3.0 * FRAC_PI_2, d),
                _ => [w / 2.0, -ey + d],
            };
        }
        d -= len;
    }
    unreachable!("walk distance exhausts the segment list");
}

/// Tube surface sampled ring by ring from the circular to the rectangular
/// end.
pub fn generate_tube(params: &ParameterVector, n: usize) -> Result<PointCloud> {
    if params.len() != PARAM_COUNT {
        return Err(Error::Shape(format!(
            "tube takes {PARAM_COUNT} parameters, got {}",
            params.len()
        )));
    }
    let circle_cx = params[0];
    let circle_cy = params[1];
    let circle_cz = params[2];
    let radius = params[3];
    let rect_cx = params[4];
    let rect_cy = params[5];
    let rect_dz = params[6];
    let width = params[7];
    let height = params[8];
    let corner = params[9];
    let length = params[10];
    let bend_x = params[11];
    let bend_y = params[12];
    let twist = params[13];

    for (value, what) in [(radius, "radius"), (width, "width"), (height, "height")] {
        if !(value > 0.0) {
            return Err(Error::Domain(format!("tube {what} must be positive, got {value}")));
        }
    }
    let max_corner = width.min(height) / 2.0;
    if !(corner > 0.0 && corner <= max_corner) {
        return Err(Error::Domain(format!(
            "tube corner radius must lie in (0, {max_corner}], got {corner}"
        )));
    }
    // zero length is the legal coplanar degenerate; negative is not
    if !(length >= 0.0) {
        return Err(Error::Domain(format!("tube length must be non-negative, got {length}")));
    }
    if n == 0 {
        return Err(Error::Domain("tube point count must be positive".into()));
    }

    let rings = section_count(n);
    let budgets = section_budgets(n, rings);
    let mut points = Vec::with_capacity(n);
    for (j, &count) in budgets.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let s = j as f64 / (rings - 1) as f64;
        let bulge = 4.0 * s * (1.0 - s);
        let z = circle_cz + s * (length + rect_dz);
        for t in 0..count {
            let u = t as f64 / count as f64;
            let angle = std::f64::consts::TAU * u;
            let cx = circle_cx + radius * angle.cos();
            let cy = circle_cy + radius * angle.sin();
            let u_rect = (u + s * twist / std::f64::consts::TAU).rem_euclid(1.0);
            let [rx, ry] = rounded_rect_point(width, height, corner, u_rect);
            points.push([
                (1.0 - s) * cx + s * (rect_cx + rx) + bulge * bend_x,
                (1.0 - s) * cy + s * (rect_cy + ry) + bulge * bend_y,
                z,
            ]);
        }
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube_params() -> Vec<f64> {
        vec![
            0.0, 0.0, 0.0, // circle center
            1.0, // radius
            0.0, 0.0, // rect center
            0.0, // rect z offset
            2.0, 2.0, // width, height
            1.0, // corner radius = min/2
            6.0, // length
            0.0, 0.0, // bend
            0.0, // twist
        ]
    }

    #[test]
    fn congruent_sections_loft_to_a_cylinder() {
        let cloud = generate_tube(&ParameterVector::new(tube_params()), 200).unwrap();
        for p in cloud.points() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-12, "off-cylinder point {:?}", p);
        }
    }

    #[test]
    fn zero_length_is_coplanar() {
        let mut params = tube_params();
        params[10] = 0.0;
        let cloud = generate_tube(&ParameterVector::new(params), 200).unwrap();
        for p in cloud.points() {
            assert_eq!(p[2], 0.0);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let mut params = tube_params();
        params[9] = 0.4;
        params[11] = 0.8;
        params[13] = 0.9;
        let pv = ParameterVector::new(params);
        assert_eq!(
            generate_tube(&pv, 200).unwrap(),
            generate_tube(&pv, 200).unwrap()
        );
    }

    #[test]
    fn invalid_sections_rejected() {
        for (idx, value) in [(3usize, 0.0), (7, -1.0), (8, 0.0), (9, 1.5)] {
            let mut params = tube_params();
            params[idx] = value;
            assert!(
                generate_tube(&ParameterVector::new(params), 200).is_err(),
                "expected rejection for parameter {idx}"
            );
        }
    }

    #[test]
    fn rounded_rect_walk_is_closed_and_bounded() {
        for i in 0..64 {
            let u = i as f64 / 64.0;
            let [x, y] = rounded_rect_point(3.0, 2.0, 0.4, u);
            assert!(x.abs() <= 1.5 + 1e-12 && y.abs() <= 1.0 + 1e-12);
        }
        let start = rounded_rect_point(3.0, 2.0, 0.4, 0.0);
        assert!((start[0] - 1.5).abs() < 1e-12 && start[1].abs() < 1e-12);
    }
}
