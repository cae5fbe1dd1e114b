//! Scene description files (TOML).

use serde::{Deserialize, Serialize};

use super::{BoxOccluder, RectReflector, Scene, Vec3};
use crate::error::{Error, Result};
use crate::linkbudget::RadioParams;
use crate::materials::MaterialDb;

/// Source of the built-in corridor description.
pub const DEFAULT_SCENE_TOML: &str = include_str!("../../data/l_corridor.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectorSpec {
    pub center: Vec3,
    /// Normalized on load.
    pub normal: Vec3,
    /// Normalized on load.
    pub u_axis: Vec3,
    pub width: f64,
    pub height: f64,
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccluderSpec {
    pub min: Vec3,
    pub max: Vec3,
}

/// Regular receiver grid: `origin + i * cross_step + j * along_step`.
///
/// Points are listed along-major: all `cross_count` points of row 0, then row 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Vec3,
    pub cross_step: Vec3,
    pub along_step: Vec3,
    pub cross_count: usize,
    pub along_count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<Vec3> {
        (0..self.along_count)
            .flat_map(|j| {
                (0..self.cross_count)
                    .map(move |i| self.origin + self.cross_step * i as f64 + self.along_step * j as f64)
            })
            .collect()
    }
}

/// Everything needed to rebuild a [`Scene`] and its [`RadioParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub tx_position: Vec3,
    /// Defaults to the transmitter position.
    #[serde(default)]
    pub lidar_position: Option<Vec3>,
    pub reflectors: Vec<ReflectorSpec>,
    #[serde(default)]
    pub occluders: Vec<OccluderSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub radio: RadioParams,
}

impl SceneFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn default_l_corridor() -> Self {
        Self::from_toml_str(DEFAULT_SCENE_TOML).expect("bundled scene file is valid")
    }

    /// Resolves material names against `db` and validates the geometry.
    ///
    /// `material_override` replaces the material of every reflector.
    pub fn build(&self, db: &MaterialDb, material_override: Option<&str>) -> Result<(Scene, RadioParams)> {
        let unit = |v: Vec3, what: &str| {
            v.normalized()
                .ok_or_else(|| Error::Geometry(format!("reflector {what} must be non-zero")))
        };
        let reflectors = self
            .reflectors
            .iter()
            .map(|spec| {
                let material = db.get(material_override.unwrap_or(&spec.material))?.clone();
                RectReflector::new(
                    spec.center,
                    unit(spec.normal, "normal")?,
                    unit(spec.u_axis, "u_axis")?,
                    spec.width,
                    spec.height,
                    material,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let occluders = self
            .occluders
            .iter()
            .map(|o| BoxOccluder::new(o.min, o.max))
            .collect::<Result<Vec<_>>>()?;
        if self.grid.cross_count == 0 || self.grid.along_count == 0 {
            return Err(Error::Geometry("grid must contain at least one point".into()));
        }
        self.radio.validate()?;
        let scene = Scene::new(
            reflectors,
            occluders,
            self.tx_position,
            self.lidar_position.unwrap_or(self.tx_position),
            self.grid.points(),
        )?;
        Ok((scene, self.radio.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_file_builds() {
        let file = SceneFile::default_l_corridor();
        let (scene, radio) = file.build(&MaterialDb::builtin(), None).unwrap();
        assert_eq!(scene.rx_grid.len(), 102);
        assert_eq!(scene.rx_grid[0], Vec3::new(0.625, 5.0, 1.5));
        assert_eq!(scene.rx_grid[6], Vec3::new(0.625, 5.5, 1.5));
        assert_eq!(radio, RadioParams::default());
        assert_eq!(scene.reflectors[0].material.name, "mirror");
        assert!((scene.reflectors[0].v_axis().z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn material_override_and_unknown_material() {
        let file = SceneFile::default_l_corridor();
        let db = MaterialDb::builtin();
        let (scene, _) = file.build(&db, Some("copper")).unwrap();
        assert_eq!(scene.reflectors[0].material.name, "copper");
        assert!(matches!(file.build(&db, Some("nope")), Err(Error::UnknownMaterial { .. })));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(SceneFile::from_toml_str("tx_position = [0, 0]").is_err());
        let mut file = SceneFile::default_l_corridor();
        file.tx_position = Vec3::new(-1.0, 3.0, 1.0);
        assert!(matches!(file.build(&MaterialDb::builtin(), None), Err(Error::Geometry(_))));
        let mut file = SceneFile::default_l_corridor();
        file.grid.cross_count = 0;
        assert!(file.build(&MaterialDb::builtin(), None).is_err());
    }

    #[test]
    fn radio_block_is_optional() {
        let text = DEFAULT_SCENE_TOML.split("[radio]").next().unwrap();
        let file = SceneFile::from_toml_str(text).unwrap();
        assert_eq!(file.radio, RadioParams::default());
    }
}
