//! Fan-blade surrogate: an extruded camber-line profile with 12 parameters.
//!
//! Sections are stacked along the span; each section is a closed profile
//! around a parabolic camber line with an elliptic thickness envelope,
//! rotated by the local twist and offset by sweep and lean. Twist and the
//! chord/camber products make the map nonlinear in its parameters.

use super::{section_budgets, section_count, ParameterVector, PointCloud};
use crate::error::{Error, Result};

pub(super) const PARAM_COUNT: usize = 12;

pub(super) const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "root_chord",
    "tip_chord",
    "root_thickness",
    "tip_thickness",
    "root_camber",
    "tip_camber",
    "root_twist",
    "tip_twist",
    "span",
    "sweep_offset",
    "lean_offset",
    "hub_radius",
];

pub(super) const RANGES: [(f64, f64); PARAM_COUNT] = [
    (1.0, 3.0),   // root_chord
    (0.5, 2.0),   // tip_chord
    (0.1, 0.5),   // root_thickness
    (0.05, 0.3),  // tip_thickness
    (0.0, 0.6),   // root_camber
    (0.0, 0.4),   // tip_camber
    (-0.3, 0.3),  // root_twist
    (0.2, 1.2),   // tip_twist
    (3.0, 8.0),   // span
    (-1.0, 1.0),  // sweep_offset
    (-1.0, 1.0),  // lean_offset
    (0.5, 2.0),   // hub_radius
];

/// Blade surface sampled section by section from hub to tip.
///
/// Section `j` of `S` sits at span fraction `s = j / (S - 1)`, with chord,
/// thickness, camber, and twist interpolated linearly between their root and
/// tip values; the whole section is then shifted by `s * (sweep, lean)` and
/// placed at `z = hub_radius + s * span`.
pub fn generate_fan_blade(params: &ParameterVector, n: usize) -> Result<PointCloud> {
    if params.len() != PARAM_COUNT {
        return Err(Error::Shape(format!(
            "fan blade takes {PARAM_COUNT} parameters, got {}",
            params.len()
        )));
    }
    let root_chord = params[0];
    let tip_chord = params[1];
    let root_thickness = params[2];
    let tip_thickness = params[3];
    let root_camber = params[4];
    let tip_camber = params[5];
    let root_twist = params[6];
    let tip_twist = params[7];
    let span = params[8];
    let sweep = params[9];
    let lean = params[10];
    let hub_radius = params[11];

    for (value, what) in [(root_chord, "root chord"), (tip_chord, "tip chord")] {
        if !(value > 0.0) {
            return Err(Error::Domain(format!("blade {what} must be positive, got {value}")));
        }
    }
    // zero span is the legal coplanar degenerate; negative is not
    if !(span >= 0.0) {
        return Err(Error::Domain(format!("blade span must be non-negative, got {span}")));
    }
    for (value, what) in [
        (root_thickness, "root thickness"),
        (tip_thickness, "tip thickness"),
        (hub_radius, "hub radius"),
    ] {
        if !(value >= 0.0) {
            return Err(Error::Domain(format!(
                "blade {what} must be non-negative, got {value}"
            )));
        }
    }
    if n == 0 {
        return Err(Error::Domain("blade point count must be positive".into()));
    }

    let sections = section_count(n);
    let budgets = section_budgets(n, sections);
    let mut points = Vec::with_capacity(n);
    for (j, &count) in budgets.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let s = j as f64 / (sections - 1) as f64;
        let chord = root_chord + s * (tip_chord - root_chord);
        let thickness = root_thickness + s * (tip_thickness - root_thickness);
        let camber = root_camber + s * (tip_camber - root_camber);
        let twist = root_twist + s * (tip_twist - root_twist);
        let (sin_t, cos_t) = twist.sin_cos();
        let z = hub_radius + s * span;
        for t in 0..count {
            let phi = std::f64::consts::TAU * t as f64 / count as f64;
            let (sin_p, cos_p) = phi.sin_cos();
            // chordwise position and thickness envelope around the camber line
            let px = 0.5 * chord * cos_p;
            let py = 0.5 * thickness * sin_p + camber * sin_p * sin_p;
            points.push([
                px * cos_t - py * sin_t + s * sweep,
                px * sin_t + py * cos_t + s * lean,
                z,
            ]);
        }
    }
    PointCloud::new(points)
}
