//! World model and specular-path geometry.
//!
//! Reflection paths are built with the image method: the receiver is mirrored
//! across the reflector plane and the straight segment from the transmitter to
//! that image crosses the plane at the specular point. The path exists when
//! the crossing lies on the finite rectangle and neither leg is occluded.

mod file;
mod vec3;

pub use file::{GridSpec, OccluderSpec, ReflectorSpec, SceneFile, DEFAULT_SCENE_TOML};
pub use vec3::Vec3;

use crate::error::{Error, Result};
use crate::materials::{Material, MaterialDb};

/// Points closer than this to a reflector plane count as lying on it.
pub const PLANE_TOLERANCE: f64 = 1e-9;

const UNIT_TOLERANCE: f64 = 1e-9;

/// Flat rectangular reflector.
#[derive(Debug, Clone, PartialEq)]
pub struct RectReflector {
    pub center: Vec3,
    pub unit_normal: Vec3,
    /// In-plane unit axis along which `width` is measured.
    pub u_axis: Vec3,
    pub width: f64,
    /// Extent along `u_axis x unit_normal`.
    pub height: f64,
    pub material: Material,
}

impl RectReflector {
    pub fn new(
        center: Vec3,
        unit_normal: Vec3,
        u_axis: Vec3,
        width: f64,
        height: f64,
        material: Material,
    ) -> Result<Self> {
        if !center.is_finite() || !unit_normal.is_finite() || !u_axis.is_finite() {
            return Err(Error::Geometry("reflector vectors must be finite".into()));
        }
        if (unit_normal.norm() - 1.0).abs() > UNIT_TOLERANCE || (u_axis.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Geometry("reflector normal and u-axis must be unit vectors".into()));
        }
        if unit_normal.dot(u_axis).abs() > UNIT_TOLERANCE {
            return Err(Error::Geometry("reflector u-axis must be perpendicular to the normal".into()));
        }
        if !(width > 0.0) || !(height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::Geometry("reflector width and height must be > 0".into()));
        }
        material.validate()?;
        Ok(Self { center, unit_normal, u_axis, width, height, material })
    }

    pub fn v_axis(&self) -> Vec3 {
        self.u_axis.cross(self.unit_normal)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Signed distance of `p` from the reflector plane, positive on the normal side.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.center).dot(self.unit_normal)
    }

    /// In-plane coordinates of `p` relative to the center, along (u, v).
    pub fn local_coords(&self, p: Vec3) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(self.u_axis), d.dot(self.v_axis()))
    }

    /// Whether the projection of `p` onto the plane falls inside the rectangle.
    pub fn contains_projection(&self, p: Vec3) -> bool {
        let (a, b) = self.local_coords(p);
        let slack = 1e-12;
        a.abs() <= self.width / 2.0 + slack && b.abs() <= self.height / 2.0 + slack
    }

    /// Point on the rectangle at in-plane coordinates `(a, b)`.
    pub fn point_at(&self, a: f64, b: f64) -> Vec3 {
        self.center + self.u_axis * a + self.v_axis() * b
    }
}

/// Axis-aligned box; blocks segments that pass through its open interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxOccluder {
    pub min_corner: Vec3,
    pub max_corner: Vec3,
}

impl BoxOccluder {
    pub fn new(min_corner: Vec3, max_corner: Vec3) -> Result<Self> {
        if !min_corner.is_finite() || !max_corner.is_finite() {
            return Err(Error::Geometry("occluder corners must be finite".into()));
        }
        if !(min_corner.x < max_corner.x && min_corner.y < max_corner.y && min_corner.z < max_corner.z) {
            return Err(Error::Geometry(format!(
                "occluder min corner {min_corner:?} must be below max corner {max_corner:?}"
            )));
        }
        Ok(Self { min_corner, max_corner })
    }

    /// Strict interior test.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| self.min_corner.component(a) < p.component(a) && p.component(a) < self.max_corner.component(a))
    }

    /// Slab test of the open segment `p..q` against the open box.
    pub fn intersects_segment(&self, p: Vec3, q: Vec3) -> bool {
        let d = q - p;
        let mut t_enter = 0.0_f64;
        let mut t_exit = 1.0_f64;
        for axis in 0..3 {
            let origin = p.component(axis);
            let dir = d.component(axis);
            let lo = self.min_corner.component(axis);
            let hi = self.max_corner.component(axis);
            if dir == 0.0 {
                // Parallel to the slab: must sit strictly between the faces.
                if origin <= lo || origin >= hi {
                    return false;
                }
            } else {
                let t0 = (lo - origin) / dir;
                let t1 = (hi - origin) / dir;
                let (near, far) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
                t_enter = t_enter.max(near);
                t_exit = t_exit.min(far);
                if t_enter >= t_exit {
                    return false;
                }
            }
        }
        t_enter < t_exit
    }
}

/// True iff the open segment `p..q` crosses the interior of any occluder.
pub fn segment_blocked(p: Vec3, q: Vec3, occluders: &[BoxOccluder]) -> bool {
    occluders.iter().any(|b| b.intersects_segment(p, q))
}

/// Mirror image of `p` across the reflector's infinite plane.
pub fn image_point(p: Vec3, r: &RectReflector) -> Vec3 {
    p - r.unit_normal * (2.0 * r.signed_distance(p))
}

/// Angle at `point` between the directions to `tx` and `rx`, in `[0, pi]`.
pub fn bistatic_angle(tx: Vec3, rx: Vec3, point: Vec3) -> f64 {
    (tx - point).angle_to(rx - point)
}

/// Azimuth of `direction` relative to `boresight` in the horizontal plane.
///
/// Positive angles turn counter-clockwise seen from above (towards
/// `Z x boresight`).
pub fn azimuth(boresight: Vec3, direction: Vec3) -> f64 {
    let forward = Vec3::new(boresight.x, boresight.y, 0.0);
    let left = Vec3::Z.cross(forward);
    direction.dot(left).atan2(direction.dot(forward))
}

/// A transmitter -> reflector -> receiver specular path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPath {
    pub tx: Vec3,
    pub rx: Vec3,
    pub reflection_point: Vec3,
    /// Transmitter to reflection point, meters.
    pub d1: f64,
    /// Reflection point to receiver, meters.
    pub d2: f64,
    /// Incidence angle from the reflector normal.
    pub theta_i: f64,
    /// Bistatic angle at the reflection point.
    pub beta: f64,
}

impl ReflectionPath {
    pub fn length(&self) -> f64 {
        self.d1 + self.d2
    }
}

/// Specular path from `tx` to `rx` via `r`, if one exists.
///
/// Returns `Ok(None)` when the image-method crossing misses the rectangle or a
/// leg is occluded, and [`Error::OppositeSides`] when the endpoints are not
/// strictly on the same side of the plane.
pub fn specular_path(tx: Vec3, rx: Vec3, r: &RectReflector, occluders: &[BoxOccluder]) -> Result<Option<ReflectionPath>> {
    let s_tx = r.signed_distance(tx);
    let s_rx = r.signed_distance(rx);
    if s_tx.abs() <= PLANE_TOLERANCE || s_rx.abs() <= PLANE_TOLERANCE || s_tx.signum() != s_rx.signum() {
        return Err(Error::OppositeSides);
    }

    let image = image_point(rx, r);
    // Image sits at signed distance -s_rx, so the crossing parameter is:
    let t = s_tx / (s_tx + s_rx);
    let mut point = tx + (image - tx) * t;
    // Snap onto the plane to remove rounding drift.
    point = point - r.unit_normal * r.signed_distance(point);

    if !r.contains_projection(point) {
        return Ok(None);
    }
    if segment_blocked(tx, point, occluders) || segment_blocked(point, rx, occluders) {
        return Ok(None);
    }

    let d1 = tx.distance(point);
    let d2 = point.distance(rx);
    let side_normal = r.unit_normal * s_tx.signum();
    let theta_i = (tx - point).angle_to(side_normal);
    let beta = bistatic_angle(tx, rx, point);
    Ok(Some(ReflectionPath { tx, rx, reflection_point: point, d1, d2, theta_i, beta }))
}

/// The simulated world.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub reflectors: Vec<RectReflector>,
    pub occluders: Vec<BoxOccluder>,
    pub tx_position: Vec3,
    pub lidar_position: Vec3,
    pub rx_grid: Vec<Vec3>,
}

impl Scene {
    pub fn new(
        reflectors: Vec<RectReflector>,
        occluders: Vec<BoxOccluder>,
        tx_position: Vec3,
        lidar_position: Vec3,
        rx_grid: Vec<Vec3>,
    ) -> Result<Self> {
        let inside = |p: Vec3| occluders.iter().any(|o| o.contains(p));
        if !tx_position.is_finite() || inside(tx_position) {
            return Err(Error::Geometry("transmitter lies inside an occluder".into()));
        }
        if !lidar_position.is_finite() || inside(lidar_position) {
            return Err(Error::Geometry("LiDAR lies inside an occluder".into()));
        }
        if let Some((i, _)) = rx_grid.iter().enumerate().find(|(_, p)| !p.is_finite() || inside(**p)) {
            return Err(Error::Geometry(format!("grid point {i} lies inside an occluder")));
        }
        if reflectors.is_empty() {
            return Err(Error::Geometry("scene needs at least one reflector".into()));
        }
        Ok(Self { reflectors, occluders, tx_position, lidar_position, rx_grid })
    }

    pub fn reflector(&self, index: usize) -> Result<&RectReflector> {
        self.reflectors
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("no reflector with index {index}")))
    }

    /// Copy of the scene with every reflector made of `material`.
    pub fn with_material(&self, material: &Material) -> Self {
        let mut scene = self.clone();
        for r in &mut scene.reflectors {
            r.material = material.clone();
        }
        scene
    }

    /// Specular path from the transmitter to `rx` via reflector `index`.
    ///
    /// Receivers behind the reflector plane simply have no path.
    pub fn tx_path(&self, index: usize, rx: Vec3) -> Result<Option<ReflectionPath>> {
        match specular_path(self.tx_position, rx, self.reflector(index)?, &self.occluders) {
            Err(Error::OppositeSides) => Ok(None),
            other => other,
        }
    }
}

/// The built-in L-shaped corridor with a mirror reflector at the corner.
///
/// Two 2.5 m wide legs meet at the origin corner square `[0, 2.5]^2`: the
/// transmitter leg runs along -x, the NLoS leg along +y, and one box fills the
/// inner corner (`x < 0, y > 2.5`). A 0.9 x 0.3 m panel faces the inner corner
/// at 45 degrees, long side horizontal, centered at 1.5 m height. Transmitter
/// and LiDAR share a position 3.8 m in front of it. The 102 receivers form a
/// 6 x 17 grid (0.25 m across, 0.5 m along) starting 2.5 m past the corner.
pub fn build_default_scene() -> Scene {
    build_default_scene_with(&MaterialDb::builtin(), "mirror").expect("default scene is valid")
}

/// The built-in corridor with the reflector made of `material` from `db`.
pub fn build_default_scene_with(db: &MaterialDb, material: &str) -> Result<Scene> {
    Ok(SceneFile::default_l_corridor().build(db, Some(material))?.0)
}
