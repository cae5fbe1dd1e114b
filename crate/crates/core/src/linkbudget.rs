//! Received power over a reflector.
//!
//! The reflector is treated as a bistatic scatterer with radar cross section
//!
//! ```text
//! sigma(beta) = R_p(theta_i) * 4 pi A^2 / lambda^2 * cos(beta / 2)
//! ```
//!
//! and the received power follows the bistatic radar equation
//!
//! ```text
//! P_rx = P_tx G_tx G_rx lambda^2 sigma / ((4 pi)^3 d1^2 d2^2)
//! ```
//!
//! The transmit gain comes from an `N`-element uniform linear array steered in
//! azimuth; the receive gain is a constant since the receive beam stays on the
//! reflector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{material_reflectance, Polarization};
use crate::scene::{azimuth, RectReflector, ReflectionPath, Vec3};
use crate::wavelength;

fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Radio configuration of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
    #[serde(rename = "n_elements")]
    pub tx_array_elements: usize,
    /// Element spacing in wavelengths.
    #[serde(rename = "spacing_wl")]
    pub tx_element_spacing: f64,
    /// Fixed receive gain.
    pub rx_gain_dbi: f64,
    pub noise_floor_dbm: f64,
    pub tx_boresight: Vec3,
    pub rx_boresight: Vec3,
    /// Polarization used for the reflector's Fresnel reflectance.
    pub polarization: Polarization,
    /// Beams may be steered within `[-max_steer_deg, +max_steer_deg]`.
    pub max_steer_deg: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 10.0,
            frequency_hz: 60.0e9,
            tx_array_elements: 8,
            tx_element_spacing: 0.5,
            rx_gain_dbi: 9.03,
            noise_floor_dbm: -90.0,
            tx_boresight: Vec3::X,
            rx_boresight: -Vec3::Y,
            polarization: Polarization::Perpendicular,
            max_steer_deg: 15.0,
        }
    }
}

impl RadioParams {
    pub fn wavelength(&self) -> f64 {
        wavelength(self.frequency_hz)
    }

    pub fn max_steer(&self) -> f64 {
        self.max_steer_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.frequency_hz > 0.0) || !self.frequency_hz.is_finite() {
            return bad("frequency must be > 0");
        }
        if self.tx_array_elements == 0 {
            return bad("array needs at least one element");
        }
        if !(self.tx_element_spacing > 0.0) {
            return bad("element spacing must be > 0");
        }
        if !(self.max_steer_deg >= 0.0 && self.max_steer_deg < 90.0) {
            return bad("max_steer_deg must lie in [0, 90)");
        }
        let finite = [self.tx_power_dbm, self.rx_gain_dbi, self.noise_floor_dbm];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("power and gain figures must be finite");
        }
        for b in [self.tx_boresight, self.rx_boresight] {
            if b.normalized().is_none() {
                return bad("boresight vectors must be non-zero");
            }
        }
        if Vec3::new(self.tx_boresight.x, self.tx_boresight.y, 0.0).normalized().is_none() {
            return bad("transmit boresight needs a horizontal component");
        }
        Ok(())
    }
}

/// Material-scaled bistatic radar cross section in m^2.
pub fn rcs(area: f64, beta: f64, r_p: f64, lambda: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidParameter(format!("area {area} must be > 0")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("wavelength {lambda} must be > 0")));
    }
    if !(0.0..=1.0).contains(&r_p) {
        return Err(Error::InvalidParameter(format!("reflectance {r_p} must lie in [0, 1]")));
    }
    if !(0.0..PI).contains(&beta) {
        return Err(Error::BistaticAngle(beta));
    }
    let cos_half = (beta / 2.0).cos().max(0.0);
    Ok(r_p * 4.0 * PI * area * area / (lambda * lambda) * cos_half)
}

/// Linear power gain of a uniform linear array steered to `steer`, seen from
/// direction `target` (both measured from array broadside).
///
/// `G = N * |sin(N psi / 2) / (N sin(psi / 2))|^2` with
/// `psi = 2 pi d (sin(target) - sin(steer))`; the peak value is `N`.
pub fn array_gain(steer: f64, target: f64, n_elements: usize, spacing_wl: f64) -> f64 {
    let n = n_elements as f64;
    let psi = 2.0 * PI * spacing_wl * (target.sin() - steer.sin());
    let den = n * (psi / 2.0).sin();
    if den.abs() < 1e-12 {
        // Main lobe (or grating lobe) peak.
        return n;
    }
    let af = (n * psi / 2.0).sin() / den;
    n * af * af
}

/// Bistatic radar equation evaluated with linear quantities, returned in dBm.
pub fn bistatic_power_dbm(tx_power_dbm: f64, g_tx: f64, g_rx: f64, lambda: f64, sigma: f64, d1: f64, d2: f64) -> f64 {
    let p_tx_mw = from_db(tx_power_dbm);
    let p_rx_mw = p_tx_mw * g_tx * g_rx * lambda * lambda * sigma / ((4.0 * PI).powi(3) * d1 * d1 * d2 * d2);
    to_db(p_rx_mw)
}

/// Free-space Friis received power in dBm for a direct link.
pub fn friis_power_dbm(tx_power_dbm: f64, g_tx: f64, g_rx: f64, lambda: f64, d: f64) -> f64 {
    tx_power_dbm + to_db(g_tx) + to_db(g_rx) + 2.0 * to_db(lambda / (4.0 * PI * d))
}

/// Itemized link budget; every term in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    /// `10 log10(lambda^2)`.
    pub wavelength_db: f64,
    /// `10 log10(sigma)`.
    pub rcs_dbsm: f64,
    /// `-10 log10((4 pi)^3 d1^2 d2^2)`.
    pub spreading_db: f64,
    /// Reflectance used to scale the cross section (linear).
    pub r_p: f64,
    pub tx_target_angle: f64,
}

impl LinkBudget {
    /// Received power from summing the dB terms (unfloored).
    pub fn total_dbm(&self) -> f64 {
        self.tx_power_dbm + self.tx_gain_db + self.rx_gain_db + self.wavelength_db + self.rcs_dbsm + self.spreading_db
    }
}

/// Itemizes the reflected link for transmit beam `steer_aod`.
pub fn link_budget(params: &RadioParams, path: &ReflectionPath, r: &RectReflector, steer_aod: f64) -> Result<LinkBudget> {
    params.validate()?;
    if !steer_aod.is_finite() || steer_aod.abs() > params.max_steer() + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "steering angle {:.3} deg outside +/-{} deg",
            steer_aod.to_degrees(),
            params.max_steer_deg
        )));
    }
    let lambda = params.wavelength();
    let r_p = material_reflectance(&r.material, path.theta_i, lambda, params.polarization)?;
    let sigma = rcs(r.area(), path.beta, r_p, lambda)?;
    let target = azimuth(params.tx_boresight, path.reflection_point - path.tx);
    let g_tx = array_gain(steer_aod, target, params.tx_array_elements, params.tx_element_spacing);
    Ok(LinkBudget {
        tx_power_dbm: params.tx_power_dbm,
        tx_gain_db: to_db(g_tx),
        rx_gain_db: params.rx_gain_dbi,
        wavelength_db: 2.0 * to_db(lambda),
        rcs_dbsm: to_db(sigma),
        spreading_db: -(3.0 * to_db(4.0 * PI) + 2.0 * to_db(path.d1) + 2.0 * to_db(path.d2)),
        r_p,
        tx_target_angle: target,
    })
}

/// Received power in dBm over `path`, floored at the noise floor.
pub fn received_power(params: &RadioParams, path: &ReflectionPath, r: &RectReflector, steer_aod: f64) -> Result<f64> {
    let budget = link_budget(params, path, r, steer_aod)?;
    let sigma = from_db(budget.rcs_dbsm);
    let p = bistatic_power_dbm(
        params.tx_power_dbm,
        from_db(budget.tx_gain_db),
        from_db(params.rx_gain_dbi),
        params.wavelength(),
        sigma,
        path.d1,
        path.d2,
    );
    // NaN-safe: -inf (absorbing surface or array null) lands on the floor.
    Ok(if p > params.noise_floor_dbm { p } else { params.noise_floor_dbm })
}
