use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::PoseRow;
use crate::pose::Pose;

/// Open-top bin. The box frame has its origin at the centre of the inner
/// floor, z pointing out of the opening, x along `length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxGeometry {
    /// Inner size along x, mm.
    pub length: f64,
    /// Inner size along y, mm.
    pub width: f64,
    /// Inner size along z, mm.
    pub depth: f64,
    pub wall_thickness: f64,
    /// Box frame in the arm base frame.
    pub pose: PoseRow,
}

impl Default for BoxGeometry {
    fn default() -> Self {
        Self {
            length: 600.0,
            width: 400.0,
            depth: 320.0,
            wall_thickness: 10.0,
            pose: PoseRow {
                xyz: [550.0, 0.0, -420.0],
                rpy: [0.0, 0.0, 0.0],
            },
        }
    }
}

impl BoxGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("depth", self.depth),
            ("wall_thickness", self.wall_thickness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "box {name} must be positive, got {v}"
                )));
            }
        }
        if !self
            .pose
            .xyz
            .iter()
            .chain(&self.pose.rpy)
            .all(|v| v.is_finite())
        {
            return Err(Error::Validation("box pose must be finite".into()));
        }
        Ok(())
    }

    pub fn frame(&self) -> Pose {
        self.pose.to_pose()
    }

    /// Whether a point given in the box frame lies strictly inside the inner volume.
    pub fn contains_local(&self, p: &Vector3<f64>) -> bool {
        p.x.abs() < 0.5 * self.length
            && p.y.abs() < 0.5 * self.width
            && p.z > 0.0
            && p.z < self.depth
    }

    pub fn contains(&self, p_base: &Vector3<f64>) -> bool {
        self.contains_local(&self.frame().inverse().transform_point(p_base))
    }

    /// Solid parts of the bin as axis-aligned boxes in the box frame: four
    /// walls and the floor.
    pub fn obstacles(&self) -> [Aabb; 5] {
        let (hx, hy, d, t) = (
            0.5 * self.length,
            0.5 * self.width,
            self.depth,
            self.wall_thickness,
        );
        [
            Aabb::new([hx, -hy - t, -t], [hx + t, hy + t, d]),
            Aabb::new([-hx - t, -hy - t, -t], [-hx, hy + t, d]),
            Aabb::new([-hx - t, hy, -t], [hx + t, hy + t, d]),
            Aabb::new([-hx - t, -hy - t, -t], [hx + t, -hy, d]),
            Aabb::new([-hx - t, -hy - t, -t], [hx + t, hy + t, 0.0]),
        ]
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self {
            min: Vector3::from(min),
            max: Vector3::from(max),
        }
    }

    pub fn distance_to_point(&self, p: &Vector3<f64>) -> f64 {
        let clamped = p.zip_zip_map(&self.min, &self.max, |v, lo, hi| v.clamp(lo, hi));
        (p - clamped).norm()
    }

    /// Distance from a segment. The point-to-box distance is convex along
    /// the segment, so a golden-section search finds the minimum.
    pub fn distance_to_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let f = |t: f64| self.distance_to_point(&(a + (b - a) * t));
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = f(x2);
            }
        }
        f1.min(f2).min(f(0.0)).min(f(1.0))
    }
}

/// Pre-grasp position lattice inside the bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Distance kept from the side walls, mm.
    pub margin: f64,
    /// Lowest usable height above the floor, mm.
    pub floor_margin: f64,
    /// Distance kept below the rim, mm.
    pub rim_margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 16,
            ny: 12,
            nz: 6,
            margin: 20.0,
            floor_margin: 40.0,
            rim_margin: 40.0,
        }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid indices of the `k`-th position (x fastest).
    pub fn indices(&self, k: usize) -> [usize; 3] {
        [
            k % self.nx,
            (k / self.nx) % self.ny,
            k / (self.nx * self.ny),
        ]
    }
}

/// Positions on a regular cell-centred lattice, in the arm base frame,
/// ordered x fastest, then y, then z.
pub fn generate_grid(bin: &BoxGeometry, spec: &GridSpec) -> Result<Vec<Vector3<f64>>> {
    bin.validate()?;
    if spec.is_empty() {
        return Err(Error::Validation(
            "grid needs at least one cell per axis".into(),
        ));
    }
    let margins = [spec.margin, spec.floor_margin, spec.rim_margin];
    if margins.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::Validation(format!(
            "grid margins must be >= 0, got {margins:?}"
        )));
    }
    if 2.0 * spec.margin >= bin.length.min(bin.width) {
        return Err(Error::Validation(format!(
            "margin {} leaves no room inside a {}x{} box",
            spec.margin, bin.length, bin.width
        )));
    }
    if spec.floor_margin + spec.rim_margin >= bin.depth {
        return Err(Error::Validation(format!(
            "floor and rim margins {} + {} exceed the box depth {}",
            spec.floor_margin, spec.rim_margin, bin.depth
        )));
    }

    let axis = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
            .collect()
    };
    let xs = axis(
        spec.nx,
        -0.5 * bin.length + spec.margin,
        0.5 * bin.length - spec.margin,
    );
    let ys = axis(
        spec.ny,
        -0.5 * bin.width + spec.margin,
        0.5 * bin.width - spec.margin,
    );
    let zs = axis(spec.nz, spec.floor_margin, bin.depth - spec.rim_margin);
    let frame = bin.frame();
    let mut out = Vec::with_capacity(spec.len());
    for z in &zs {
        for y in &ys {
            for x in &xs {
                out.push(frame.transform_point(&Vector3::new(*x, *y, *z)));
            }
        }
    }
    Ok(out)
}

/// Direction, in the arm base frame, along which the hand approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproachAxis {
    /// Top grasp: approach along -z.
    #[serde(rename = "down")]
    Down,
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl ApproachAxis {
    /// Rotation taking the tool z axis onto the approach direction.
    pub fn alignment(&self) -> UnitQuaternion<f64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let (axis, angle) = match self {
            ApproachAxis::Down => (Vector3::x_axis(), PI),
            ApproachAxis::PlusX => (Vector3::y_axis(), FRAC_PI_2),
            ApproachAxis::MinusX => (Vector3::y_axis(), -FRAC_PI_2),
            ApproachAxis::PlusY => (Vector3::x_axis(), -FRAC_PI_2),
            ApproachAxis::MinusY => (Vector3::x_axis(), FRAC_PI_2),
        };
        UnitQuaternion::from_axis_angle(&axis, angle)
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.alignment() * Vector3::z()
    }
}

impl FromStr for ApproachAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "down" => Ok(Self::Down),
            "+x" => Ok(Self::PlusX),
            "-x" => Ok(Self::MinusX),
            "+y" => Ok(Self::PlusY),
            "-y" => Ok(Self::MinusY),
            other => Err(Error::Validation(format!(
                "unknown approach axis {other:?}"
            ))),
        }
    }
}

/// Hand rotations sampled at every grid position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrientationSpec {
    /// Rotation step about the approach axis, degrees.
    pub step: f64,
    pub axis: ApproachAxis,
    /// Distance the target is backed off against the approach direction, mm.
    pub approach_offset: f64,
}

impl Default for OrientationSpec {
    fn default() -> Self {
        Self {
            step: 10.0,
            axis: ApproachAxis::Down,
            approach_offset: 0.0,
        }
    }
}

impl OrientationSpec {
    pub fn count(&self) -> Result<usize> {
        let n = 360.0 / self.step;
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= 360.0)
            || (n - n.round()).abs() > 1e-9
        {
            return Err(Error::Validation(format!(
                "orientation step {} must divide 360",
                self.step
            )));
        }
        if !self.approach_offset.is_finite() {
            return Err(Error::Validation("approach_offset must be finite".into()));
        }
        Ok(n.round() as usize)
    }
}

/// Hand orientations: `360 / step` turns about the approach axis, each
/// composed with the alignment of the tool z axis to the approach.
pub fn orientation_samples(spec: &OrientationSpec) -> Result<Vec<UnitQuaternion<f64>>> {
    let n = spec.count()?;
    let align = spec.axis.alignment();
    Ok((0..n)
        .map(|k| {
            let yaw = (k as f64 * spec.step).to_radians();
            align * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
        })
        .collect())
}

/// Side wall of the bin, named by its outward normal in the box frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wall {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::PlusX, Wall::MinusX, Wall::PlusY, Wall::MinusY];

    /// Outward normal in the box frame.
    pub fn normal(&self) -> Vector3<f64> {
        match self {
            Wall::PlusX => Vector3::x(),
            Wall::MinusX => -Vector3::x(),
            Wall::PlusY => Vector3::y(),
            Wall::MinusY => -Vector3::y(),
        }
    }

    /// Horizontal direction along the wall surface in the box frame.
    fn along(&self) -> Vector3<f64> {
        Vector3::z().cross(&self.normal())
    }
}

impl fmt::Display for Wall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wall::PlusX => "+x",
            Wall::MinusX => "-x",
            Wall::PlusY => "+y",
            Wall::MinusY => "-y",
        })
    }
}

impl FromStr for Wall {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+x" => Ok(Wall::PlusX),
            "-x" => Ok(Wall::MinusX),
            "+y" => Ok(Wall::PlusY),
            "-y" => Ok(Wall::MinusY),
            other => Err(Error::Validation(format!("unknown wall {other:?}"))),
        }
    }
}

/// Hand pose for a grasp against a side wall.
///
/// `point_on_wall` is `[u, v]`: `u` runs horizontally along the wall from
/// its centre (direction `z x n`), `v` is the height above the floor. The
/// tool z axis points along the inward wall normal so the palm is parallel
/// to the wall, tool x points down the wall, and the position is backed
/// off the wall by `standoff` into the box.
pub fn wall_grasp_target(
    bin: &BoxGeometry,
    wall: Wall,
    point_on_wall: [f64; 2],
    standoff: f64,
) -> Result<Pose> {
    bin.validate()?;
    let n = wall.normal();
    let half_span = match wall {
        Wall::PlusX | Wall::MinusX => 0.5 * bin.width,
        Wall::PlusY | Wall::MinusY => 0.5 * bin.length,
    };
    let half_gap = match wall {
        Wall::PlusX | Wall::MinusX => 0.5 * bin.length,
        Wall::PlusY | Wall::MinusY => 0.5 * bin.width,
    };
    let [u, v] = point_on_wall;
    if !(u.abs() <= half_span && (0.0..=bin.depth).contains(&v)) {
        return Err(Error::Validation(format!(
            "point ({u}, {v}) is outside wall {wall} (|u| <= {half_span}, 0 <= v <= {})",
            bin.depth
        )));
    }
    if !standoff.is_finite() {
        return Err(Error::Validation("standoff must be finite".into()));
    }
    let on_wall = n * half_gap + wall.along() * u + Vector3::z() * v;
    let inward = -n;
    let position = on_wall + inward * standoff;
    let x = -Vector3::z();
    let y = inward.cross(&x);
    let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, inward]));
    let local = Pose::new(position, UnitQuaternion::from_rotation_matrix(&rot));
    Ok(bin.frame().compose(&local))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bin_at_origin() -> BoxGeometry {
        BoxGeometry {
            pose: PoseRow::default(),
            ..BoxGeometry::default()
        }
    }

    #[test]
    fn default_grid_has_1152_positions() {
        let g = generate_grid(&BoxGeometry::default(), &GridSpec::default()).unwrap();
        assert_eq!(g.len(), 1152);
    }

    #[test]
    fn single_cell_is_the_box_centre() {
        let spec = GridSpec {
            nx: 1,
            ny: 1,
            nz: 1,
            margin: 20.0,
            floor_margin: 30.0,
            rim_margin: 30.0,
        };
        let b = BoxGeometry::default();
        let g = generate_grid(&b, &spec).unwrap();
        let centre = b
            .frame()
            .transform_point(&Vector3::new(0.0, 0.0, 0.5 * b.depth));
        assert_eq!(g.len(), 1);
        assert_relative_eq!(g[0], centre, epsilon = 1e-12);
    }

    #[test]
    fn grid_is_x_fastest() {
        let spec = GridSpec {
            nx: 3,
            ny: 2,
            nz: 2,
            ..GridSpec::default()
        };
        let g = generate_grid(&bin_at_origin(), &spec).unwrap();
        assert!(g[1].x > g[0].x && g[1].y == g[0].y);
        assert!(g[3].y > g[0].y && g[3].x == g[0].x);
        assert!(g[6].z > g[0].z);
        assert_eq!(spec.indices(7), [1, 0, 1]);
    }

    #[test]
    fn default_grid_lies_inside_the_box() {
        let b = BoxGeometry::default();
        for p in generate_grid(&b, &GridSpec::default()).unwrap() {
            assert!(b.contains(&p), "{p:?}");
        }
    }

    #[test]
    fn oversized_margin_is_rejected() {
        let spec = GridSpec {
            margin: 200.0,
            ..GridSpec::default()
        };
        assert!(matches!(
            generate_grid(&BoxGeometry::default(), &spec),
            Err(Error::Validation(_))
        ));
        let spec = GridSpec {
            floor_margin: 200.0,
            rim_margin: 120.0,
            ..GridSpec::default()
        };
        assert!(generate_grid(&BoxGeometry::default(), &spec).is_err());
    }

    #[test]
    fn orientation_counts() {
        let s = |step| OrientationSpec {
            step,
            ..OrientationSpec::default()
        };
        assert_eq!(orientation_samples(&s(10.0)).unwrap().len(), 36);
        assert_eq!(orientation_samples(&s(90.0)).unwrap().len(), 4);
        assert!(orientation_samples(&s(7.0)).is_err());
        assert!(orientation_samples(&s(0.0)).is_err());
    }

    #[test]
    fn quarter_steps_are_orthogonal_and_close_under_composition() {
        let spec = OrientationSpec {
            step: 90.0,
            ..OrientationSpec::default()
        };
        let r = orientation_samples(&spec).unwrap();
        let down = -Vector3::z();
        for q in &r {
            assert_relative_eq!(q * Vector3::z(), down, epsilon = 1e-12);
        }
        for i in 0..4 {
            let xi = r[i] * Vector3::x();
            let xj = r[(i + 1) % 4] * Vector3::x();
            assert!(xi.dot(&xj).abs() < 1e-12);
        }
        // relative turns form the cyclic group of order 4
        let align = spec.axis.alignment();
        for a in &r {
            for b in &r {
                let composed = align * (align.inverse() * a) * (align.inverse() * b);
                assert!(r.iter().any(|c| c.angle_to(&composed) < 1e-9));
            }
        }
    }

    #[test]
    fn wall_target_faces_inward() {
        let b = bin_at_origin();
        let t = wall_grasp_target(&b, Wall::PlusX, [0.0, 0.0], 0.0).unwrap();
        assert_relative_eq!(t.position, Vector3::new(300.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(t.z_axis(), -Vector3::x(), epsilon = 1e-12);
        for wall in Wall::ALL {
            let t = wall_grasp_target(&b, wall, [10.0, 100.0], 0.0).unwrap();
            assert_relative_eq!(t.z_axis().dot(&wall.normal()), -1.0, epsilon = 1e-12);
            assert!(t.is_normalized());
        }
    }

    #[test]
    fn wall_target_outside_wall_is_rejected() {
        let b = bin_at_origin();
        assert!(wall_grasp_target(&b, Wall::PlusX, [250.0, 10.0], 5.0).is_err());
        assert!(wall_grasp_target(&b, Wall::PlusY, [250.0, 10.0], 5.0).is_ok());
        assert!(wall_grasp_target(&b, Wall::MinusY, [0.0, 400.0], 5.0).is_err());
    }

    #[test]
    fn segment_distance_matches_corner_geometry() {
        let b = Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let d = b.distance_to_segment(&Vector3::new(2.0, 2.0, -5.0), &Vector3::new(2.0, 2.0, 5.0));
        assert_relative_eq!(d, 2f64.sqrt(), epsilon = 1e-9);
        let d = b.distance_to_segment(&Vector3::new(-1.0, 0.5, 0.5), &Vector3::new(3.0, 0.5, 0.5));
        assert_eq!(d, 0.0);
    }
}
