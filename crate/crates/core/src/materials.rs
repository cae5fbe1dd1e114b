//! Electromagnetic surface models.
//!
//! A material is described by its relative permittivity and loss tangent,
//! combined into a complex relative permittivity
//! `eps_r = eps_r' * (1 - j tan(delta))` (time convention `exp(+j w t)`).
//! Reflection at a planar air/material interface follows the Fresnel
//! equations written with intrinsic impedances `eta = eta0 / sqrt(eps_r)`:
//!
//! ```text
//! G_perp = (eta2 cos(ti) - eta1 cos(tt)) / (eta2 cos(ti) + eta1 cos(tt))
//! G_par  = (-eta1 cos(ti) + eta2 cos(tt)) / (eta1 cos(ti) + eta2 cos(tt))
//! ```
//!
//! Surface roughness scales both coefficients by the scattering loss factor
//! `rho_s = exp(-8 (pi h_rms cos(ti) / lambda)^2)`. The factor is derived for
//! large grazing angles and is applied here at every angle.
//!
//! Metals are treated as perfect electric conductors (`|G| = 1`).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex dimensionless quantity (permittivities, Fresnel coefficients).
pub type ComplexScalar = Complex64;

const BUILTIN_DB: &str = include_str!("../data/materials.toml");

/// Field polarization relative to the plane of incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// TE, electric field normal to the plane of incidence.
    Perpendicular,
    /// TM, electric field in the plane of incidence.
    Parallel,
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perp" | "perpendicular" | "te" | "s" => Ok(Self::Perpendicular),
            "par" | "parallel" | "tm" | "p" => Ok(Self::Parallel),
            other => Err(Error::Parse(format!(
                "unknown polarization `{other}` (expected perp or par)"
            ))),
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Perpendicular => f.write_str("perp"),
            Self::Parallel => f.write_str("par"),
        }
    }
}

/// Electromagnetic and optical description of one surface type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Relative permittivity, real part.
    pub eps_r_real: f64,
    pub loss_tangent: f64,
    /// Perfect-conductor flag; permittivity fields are then nominal.
    pub is_conductor: bool,
    /// RMS surface height in meters.
    #[serde(rename = "h_rms_m")]
    pub h_rms: f64,
    pub optical_specularity: f64,
    /// Longest LiDAR -> surface -> target path still detected, meters.
    #[serde(rename = "lidar_max_range_m")]
    pub lidar_max_range: f64,
}

impl Material {
    /// Lossy dielectric with a smooth surface and neutral optical parameters.
    pub fn dielectric(name: impl Into<String>, eps_r_real: f64, loss_tangent: f64) -> Self {
        Self {
            name: name.into(),
            eps_r_real,
            loss_tangent,
            is_conductor: false,
            h_rms: 0.0,
            optical_specularity: 0.5,
            lidar_max_range: 10.0,
        }
    }

    /// Smooth perfect conductor.
    pub fn pec(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            eps_r_real: 1.0,
            loss_tangent: 0.0,
            is_conductor: true,
            h_rms: 0.0,
            optical_specularity: 1.0,
            lidar_max_range: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidMaterial {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        let fields = [
            self.eps_r_real,
            self.loss_tangent,
            self.h_rms,
            self.optical_specularity,
            self.lidar_max_range,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return bad("non-finite field");
        }
        if self.name.trim().is_empty() {
            return bad("empty name");
        }
        if !self.is_conductor && self.eps_r_real < 1.0 {
            return bad("eps_r_real must be >= 1 for dielectrics");
        }
        if self.loss_tangent < 0.0 {
            return bad("loss_tangent must be >= 0");
        }
        if self.h_rms < 0.0 {
            return bad("h_rms must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.optical_specularity) {
            return bad("optical_specularity must lie in [0, 1]");
        }
        if self.lidar_max_range <= 0.0 {
            return bad("lidar_max_range must be > 0");
        }
        Ok(())
    }
}

/// Outcome of a Fresnel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelResult {
    pub gamma_perp: ComplexScalar,
    pub gamma_par: ComplexScalar,
    /// Transmission angle; complex for lossy media.
    pub theta_t: ComplexScalar,
    pub power_reflectance_perp: f64,
    pub power_reflectance_par: f64,
}

impl FresnelResult {
    fn from_gammas(gamma_perp: ComplexScalar, gamma_par: ComplexScalar, theta_t: ComplexScalar) -> Self {
        Self {
            gamma_perp,
            gamma_par,
            theta_t,
            power_reflectance_perp: gamma_perp.norm_sqr(),
            power_reflectance_par: gamma_par.norm_sqr(),
        }
    }

    pub fn gamma(&self, pol: Polarization) -> ComplexScalar {
        match pol {
            Polarization::Perpendicular => self.gamma_perp,
            Polarization::Parallel => self.gamma_par,
        }
    }

    pub fn power_reflectance(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::Perpendicular => self.power_reflectance_perp,
            Polarization::Parallel => self.power_reflectance_par,
        }
    }

    /// Both amplitude coefficients multiplied by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_gammas(self.gamma_perp * factor, self.gamma_par * factor, self.theta_t)
    }
}

fn check_incidence(theta_i: f64) -> Result<()> {
    if theta_i.is_finite() && (0.0..FRAC_PI_2).contains(&theta_i) {
        Ok(())
    } else {
        Err(Error::IncidenceAngle(theta_i))
    }
}

/// `eps_r' * (1 - j tan(delta))`.
///
/// For conductors this is the nominal value from the record; the PEC branch
/// of [`material_reflectance`] never reads it.
pub fn complex_permittivity(m: &Material) -> ComplexScalar {
    ComplexScalar::new(m.eps_r_real, -m.eps_r_real * m.loss_tangent)
}

/// Fresnel reflection of a plane wave going from medium 1 into medium 2.
///
/// Both media are non-magnetic. The refractive index is `n = sqrt(eps_r)`
/// (principal branch) and `cos(theta_t) = sqrt(1 - (n1/n2)^2 sin^2(theta_i))`
/// with the branch picked so that `Im(n2 cos(theta_t)) <= 0`, i.e. the
/// transmitted wave decays away from the interface.
pub fn fresnel(theta_i: f64, eps_r1: ComplexScalar, eps_r2: ComplexScalar) -> Result<FresnelResult> {
    check_incidence(theta_i)?;
    for (label, eps) in [("eps_r1", eps_r1), ("eps_r2", eps_r2)] {
        if !eps.re.is_finite() || !eps.im.is_finite() || eps.re <= 0.0 {
            return Err(Error::Permittivity(format!(
                "{label} = {eps} must be finite with a positive real part"
            )));
        }
    }

    let n1 = eps_r1.sqrt();
    let n2 = eps_r2.sqrt();
    let (sin_i, cos_i) = theta_i.sin_cos();
    let ratio = n1 / n2;
    let mut cos_t = (ComplexScalar::new(1.0, 0.0) - ratio * ratio * sin_i * sin_i).sqrt();
    if (n2 * cos_t).im > 0.0 {
        cos_t = -cos_t;
    }
    let theta_t = cos_t.acos();

    // eta0 cancels in every ratio below.
    let eta1 = n1.inv();
    let eta2 = n2.inv();
    let gamma_perp = (eta2 * cos_i - eta1 * cos_t) / (eta2 * cos_i + eta1 * cos_t);
    let gamma_par = (-eta1 * cos_i + eta2 * cos_t) / (eta1 * cos_i + eta2 * cos_t);
    Ok(FresnelResult::from_gammas(gamma_perp, gamma_par, theta_t))
}

/// Perfect electric conductor: `G_perp = G_par = -1` at every angle.
pub fn fresnel_pec(theta_i: f64) -> Result<FresnelResult> {
    check_incidence(theta_i)?;
    let minus_one = ComplexScalar::new(-1.0, 0.0);
    Ok(FresnelResult::from_gammas(minus_one, minus_one, ComplexScalar::new(0.0, 0.0)))
}

/// Rayleigh criterion: surfaces with `h_rms` above `lambda / (8 cos(theta_i))`
/// are rough at that wavelength.
pub fn rayleigh_critical_height(lambda: f64, theta_i: f64) -> Result<f64> {
    check_incidence(theta_i)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("wavelength {lambda} must be > 0")));
    }
    Ok(lambda / (8.0 * theta_i.cos()))
}

/// Specular scattering loss factor `exp(-8 (pi h_rms cos(theta_i) / lambda)^2)`.
pub fn roughness_factor(h_rms: f64, lambda: f64, theta_i: f64) -> f64 {
    let x = PI * h_rms * theta_i.cos() / lambda;
    (-8.0 * x * x).exp()
}

/// Fresnel coefficients of a rough dielectric interface.
pub fn rough_fresnel(
    theta_i: f64,
    eps_r1: ComplexScalar,
    eps_r2: ComplexScalar,
    h_rms: f64,
    lambda: f64,
) -> Result<FresnelResult> {
    let smooth = fresnel(theta_i, eps_r1, eps_r2)?;
    check_roughness(h_rms, lambda)?;
    Ok(smooth.scaled(roughness_factor(h_rms, lambda, theta_i)))
}

fn check_roughness(h_rms: f64, lambda: f64) -> Result<()> {
    if !(h_rms >= 0.0) || !h_rms.is_finite() {
        return Err(Error::InvalidParameter(format!("h_rms {h_rms} must be >= 0")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("wavelength {lambda} must be > 0")));
    }
    Ok(())
}

/// Coefficients for a wave arriving from air onto `m`, roughness included.
pub fn material_fresnel(m: &Material, theta_i: f64, lambda: f64) -> Result<FresnelResult> {
    let smooth = if m.is_conductor {
        fresnel_pec(theta_i)?
    } else {
        fresnel(theta_i, ComplexScalar::new(1.0, 0.0), complex_permittivity(m))?
    };
    check_roughness(m.h_rms, lambda)?;
    Ok(smooth.scaled(roughness_factor(m.h_rms, lambda, theta_i)))
}

/// Power reflectance `R_p = |rho_s G|^2` of `m` for a wave arriving from air.
pub fn material_reflectance(m: &Material, theta_i: f64, lambda: f64, pol: Polarization) -> Result<f64> {
    Ok(material_fresnel(m, theta_i, lambda)?.power_reflectance(pol))
}

#[derive(Deserialize)]
struct DbFile {
    #[serde(default)]
    material: Vec<Material>,
}

/// Ordered collection of materials, looked up by name.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialDb {
    materials: Vec<Material>,
}

impl MaterialDb {
    /// The database shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_DB).expect("bundled material database is valid")
    }

    /// Source text of the bundled database.
    pub fn builtin_source() -> &'static str {
        BUILTIN_DB
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: DbFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(file.material)
    }

    pub fn new(materials: Vec<Material>) -> Result<Self> {
        for (i, m) in materials.iter().enumerate() {
            m.validate()?;
            if materials[..i].iter().any(|other| other.name == m.name) {
                return Err(Error::InvalidMaterial {
                    name: m.name.clone(),
                    reason: "duplicate name".into(),
                });
            }
        }
        Ok(Self { materials })
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMaterial {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.materials.iter().map(|m| m.name.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }
}
