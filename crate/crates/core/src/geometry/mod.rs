//! Parametric geometry classes realized as point clouds with fixed point
//! correspondence.
//!
//! Each class maps a parameter vector to `n` points placed on a normalized
//! template (equal arc fractions per edge, per face grid, or per curve
//! parameter), so that point `i` of any two instances refers to the same
//! template location. All generators are pure: identical inputs produce
//! bit-identical clouds.

mod blade;
mod tube;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::parallel;

pub use blade::generate_fan_blade;
pub use tube::generate_tube;

/// Number of points per cloud unless a spec overrides it.
pub const DEFAULT_POINTS: usize = 200;

/// The generating design parameters of one geometry instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Static description of a geometry class: parameter count, sampling ranges,
/// point budget, and any fixed constants of the construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryClassSpec {
    name: String,
    param_names: Vec<String>,
    ranges: Vec<(f64, f64)>,
    n_points: usize,
    fixed_constants: Vec<(String, f64)>,
}

impl GeometryClassSpec {
    pub fn new(
        name: impl Into<String>,
        param_names: Vec<String>,
        ranges: Vec<(f64, f64)>,
        n_points: usize,
        fixed_constants: Vec<(String, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        if param_names.is_empty() || param_names.len() != ranges.len() {
            return Err(Error::Domain(format!(
                "class `{name}`: need one sampling range per parameter name"
            )));
        }
        for (pname, &(lo, hi)) in param_names.iter().zip(&ranges) {
            if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                return Err(Error::Domain(format!(
                    "class `{name}`: range [{lo}, {hi}) for `{pname}` is degenerate"
                )));
            }
        }
        if n_points < 4 {
            return Err(Error::Domain(format!(
                "class `{name}`: need at least 4 points per cloud, got {n_points}"
            )));
        }
        Ok(Self {
            name,
            param_names,
            ranges,
            n_points,
            fixed_constants,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Parameter count `k`.
    pub fn k(&self) -> usize {
        self.ranges.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    /// Half-open sampling intervals, one per parameter.
    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn fixed_constants(&self) -> &[(String, f64)] {
        &self.fixed_constants
    }

    pub fn fixed_constant(&self, name: &str) -> Option<f64> {
        self.fixed_constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    /// Checks length and per-coordinate range membership.
    pub fn validate_params(&self, params: &ParameterVector) -> Result<()> {
        if params.len() != self.k() {
            return Err(Error::Shape(format!(
                "class `{}` takes {} parameters, got {}",
                self.name,
                self.k(),
                params.len()
            )));
        }
        for (j, (&v, &(lo, hi))) in params.values().iter().zip(&self.ranges).enumerate() {
            if !(v >= lo && v < hi) {
                return Err(Error::Domain(format!(
                    "class `{}`: parameter `{}` = {v} outside [{lo}, {hi})",
                    self.name, self.param_names[j]
                )));
            }
        }
        Ok(())
    }
}

/// An `n x 3` point cloud with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("point cloud contains non-finite coordinates".into()));
        }
        Ok(Self { points })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }
}

/// A generated cloud together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySample {
    pub cloud: PointCloud,
    pub params: ParameterVector,
}

/// The geometry classes this crate can generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryClass {
    Rectangle,
    Cuboid,
    Helix,
    SimplifiedHelix,
    FanBlade,
    Tube,
}

impl GeometryClass {
    pub const ALL: [GeometryClass; 6] = [
        GeometryClass::Rectangle,
        GeometryClass::Cuboid,
        GeometryClass::SimplifiedHelix,
        GeometryClass::Helix,
        GeometryClass::FanBlade,
        GeometryClass::Tube,
    ];

    /// Classes whose point coordinates are linear in the parameters; their
    /// centered data matrices have rank exactly `k`.
    pub const LINEAR: [GeometryClass; 3] = [
        GeometryClass::Rectangle,
        GeometryClass::Cuboid,
        GeometryClass::SimplifiedHelix,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeometryClass::Rectangle => "rectangle",
            GeometryClass::Cuboid => "cuboid",
            GeometryClass::Helix => "helix",
            GeometryClass::SimplifiedHelix => "simplified-helix",
            GeometryClass::FanBlade => "fan-blade",
            GeometryClass::Tube => "tube",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == name)
            .ok_or_else(|| {
                let known = Self::ALL
                    .iter()
                    .map(|c| c.name())
                    .collect::<Vec<_>>()
                    .join(", ");
                Error::UnknownClass(name.to_string(), known)
            })
    }

    /// The class spec with the default 200-point budget.
    pub fn spec(&self) -> GeometryClassSpec {
        self.spec_with_points(DEFAULT_POINTS)
    }

    /// The class spec with a custom point budget.
    pub fn spec_with_points(&self, n_points: usize) -> GeometryClassSpec {
        type Parts = (Vec<&'static str>, Vec<(f64, f64)>, Vec<(&'static str, f64)>);
        let (names, ranges, constants): Parts = match self {
            GeometryClass::Rectangle => {
                (vec!["a", "b"], vec![(0.0, 10.0), (0.0, 10.0)], vec![])
            }
            GeometryClass::Cuboid => (
                vec!["a", "b", "c"],
                vec![(0.0, 10.0), (0.0, 10.0), (0.0, 10.0)],
                vec![],
            ),
            GeometryClass::Helix => (
                vec!["radius", "height", "turns"],
                vec![(0.0, 10.0), (0.0, 10.0), (0.0, 5.0)],
                vec![],
            ),
            GeometryClass::SimplifiedHelix => (
                vec!["radius", "height"],
                vec![(0.0, 10.0), (0.0, 10.0)],
                vec![("turns", 5.0)],
            ),
            GeometryClass::FanBlade => (
                blade::PARAM_NAMES.to_vec(),
                blade::RANGES.to_vec(),
                vec![],
            ),
            GeometryClass::Tube => (tube::PARAM_NAMES.to_vec(), tube::RANGES.to_vec(), vec![]),
        };
        GeometryClassSpec::new(
            self.name(),
            names.into_iter().map(String::from).collect(),
            ranges,
            n_points,
            constants.into_iter().map(|(n, v)| (n.into(), v)).collect(),
        )
        .expect("built-in class specs are valid")
    }

    /// Generates the cloud for `params` at `n` points.
    pub fn generate(&self, params: &ParameterVector, n: usize) -> Result<PointCloud> {
        let expect_k = |k: usize| -> Result<()> {
            if params.len() != k {
                Err(Error::Shape(format!(
                    "class `{}` takes {k} parameters, got {}",
                    self.name(),
                    params.len()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            GeometryClass::Rectangle => {
                expect_k(2)?;
                generate_rectangle(params[0], params[1], n)
            }
            GeometryClass::Cuboid => {
                expect_k(3)?;
                generate_cuboid(params[0], params[1], params[2], n)
            }
            GeometryClass::Helix => {
                expect_k(3)?;
                generate_helix(params[0], params[1], params[2], n)
            }
            GeometryClass::SimplifiedHelix => {
                expect_k(2)?;
                generate_simplified_helix(params[0], params[1], n)
            }
            GeometryClass::FanBlade => {
                expect_k(blade::PARAM_COUNT)?;
                generate_fan_blade(params, n)
            }
            GeometryClass::Tube => {
                expect_k(tube::PARAM_COUNT)?;
                generate_tube(params, n)
            }
        }
    }
}

/// Draws `count` parameter vectors uniformly from the spec's half-open
/// ranges.
///
/// Draw `i` comes from its own counter-derived RNG stream, so coordinate `j`
/// of draw `i` depends only on `(seed, i, j)` and draws can be produced in
/// parallel without changing the output.
pub fn sample_parameters(
    spec: &GeometryClassSpec,
    seed: u64,
    count: usize,
) -> Result<Vec<ParameterVector>> {
    if count == 0 {
        return Err(Error::Domain("parameter sample count must be at least 1".into()));
    }
    let dists: Vec<Uniform<f64>> = spec
        .ranges()
        .iter()
        .map(|&(lo, hi)| {
            Uniform::new(lo, hi).map_err(|e| {
                Error::Domain(format!("cannot sample range [{lo}, {hi}): {e}"))
            })
        })
        .collect::<Result<_>>()?;

    Ok(parallel::map_indices(count, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        ParameterVector::new(dists.iter().map(|d| d.sample(&mut rng)).collect())
    }))
}

fn require_nonnegative(value: f64, what: &str) -> Result<()> {
    if !(value >= 0.0) {
        return Err(Error::Domain(format!("{what} must be non-negative, got {value}")));
    }
    Ok(())
}

/// Perimeter of the axis-aligned rectangle `[-a/2, a/2] x [-b/2, b/2] x {0}`.
///
/// The template walks the unit square counter-clockwise from the bottom-left
/// corner with `n/4` points per edge; coordinates scale linearly in `a` and
/// `b`.
pub fn generate_rectangle(a: f64, b: f64, n: usize) -> Result<PointCloud> {
    require_nonnegative(a, "rectangle length a")?;
    require_nonnegative(b, "rectangle width b")?;
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::Domain(format!(
            "rectangle point count must be a positive multiple of 4, got {n}"
        )));
    }
    let per_edge = n / 4;
    let mut points = Vec::with_capacity(n);
    for edge in 0..4 {
        for j in 0..per_edge {
            let f = j as f64 / per_edge as f64;
            let (tx, ty) = match edge {
                0 => (f - 0.5, -0.5),
                1 => (0.5, f - 0.5),
                2 => (0.5 - f, 0.5),
                _ => (-0.5, 0.5 - f),
            };
            points.push([a * tx, b * ty, 0.0]);
        }
    }
    PointCloud::new(points)
}

/// Surface of the origin-centered axis-aligned cuboid with extents
/// `(a, b, c)`.
///
/// Points are spread over the six faces of a unit-cube template (near-even
/// face budgets, a centered grid per face) and scaled per axis, so each
/// coordinate is linear in exactly one of `a`, `b`, `c`.
pub fn generate_cuboid(a: f64, b: f64, c: f64, n: usize) -> Result<PointCloud> {
    require_nonnegative(a, "cuboid length a")?;
    require_nonnegative(b, "cuboid width b")?;
    require_nonnegative(c, "cuboid height c")?;
    if n == 0 {
        return Err(Error::Domain("cuboid point count must be positive".into()));
    }
    let base = n / 6;
    let extra = n % 6;
    let mut points = Vec::with_capacity(n);
    for face in 0..6 {
        let n_face = base + usize::from(face < extra);
        if n_face == 0 {
            continue;
        }
        let grid = (n_face as f64).sqrt().ceil() as usize;
        for t in 0..n_face {
            let u = ((t % grid) as f64 + 0.5) / grid as f64 - 0.5;
            let v = ((t / grid) as f64 + 0.5) / grid as f64 - 0.5;
            let (tx, ty, tz) = match face {
                0 => (0.5, u, v),
                1 => (-0.5, u, v),
                2 => (u, 0.5, v),
                3 => (u, -0.5, v),
                4 => (u, v, 0.5),
                _ => (u, v, -0.5),
            };
            points.push([a * tx, b * ty, c * tz]);
        }
    }
    PointCloud::new(points)
}

/// Helix curve `s -> (r cos(2 pi * turns * s), r sin(2 pi * turns * s), h s)`
/// sampled at `s_i = i / (n - 1)`.
pub fn generate_helix(r: f64, h: f64, turns: f64, n: usize) -> Result<PointCloud> {
    require_nonnegative(r, "helix radius")?;
    require_nonnegative(h, "helix height")?;
    require_nonnegative(turns, "helix turn count")?;
    if n < 2 {
        return Err(Error::Domain(format!("helix needs at least 2 points, got {n}")));
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let s = i as f64 / (n - 1) as f64;
        let angle = std::f64::consts::TAU * turns * s;
        points.push([r * angle.cos(), r * angle.sin(), h * s]);
    }
    PointCloud::new(points)
}

/// [`generate_helix`] with the turn count fixed at 5; coordinates are linear
/// in `(r, h)`.
pub fn generate_simplified_helix(r: f64, h: f64, n: usize) -> Result<PointCloud> {
    generate_helix(r, h, 5.0, n)
}

/// Splits `n` points over `sections` groups as evenly as possible, earlier
/// groups taking the remainder. Shared by the lofted surrogate classes.
pub(crate) fn section_budgets(n: usize, sections: usize) -> Vec<usize> {
    let base = n / sections;
    let extra = n % sections;
    (0..sections).map(|j| base + usize::from(j < extra)).collect()
}

/// Section count used by the lofted surrogate templates: one section per 20
/// points, at least 2.
pub(crate) fn section_count(n: usize) -> usize {
    (n / 20).max(2)
}
