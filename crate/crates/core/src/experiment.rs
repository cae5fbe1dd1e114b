//! Beam-selection strategies evaluated over the receiver grid.
//!
//! For every grid point the user (and receiver) stands at that point and the
//! transmitter picks a beam:
//!
//! - [`Strategy::Fixed`] always uses one angle of departure.
//! - [`Strategy::Exhaustive`] tries every angle of the codebook and keeps the
//!   strongest.
//! - [`Strategy::LidarGuided`] looks for the user with the virtual LiDAR and
//!   quantizes the derived angle onto the codebook, or falls back to a default
//!   angle when the user is not seen.
//!
//! RSS is reported in dB above the noise floor; points without a specular
//! path sit at 0 dB.

use std::fmt;

use crate::error::{Error, Result};
use crate::lidar::{detect_user, estimate_steering, quantize_aod, Detection};
use crate::linkbudget::{received_power, RadioParams};
use crate::scene::{ReflectionPath, Scene, Vec3};

/// Steering range of the transmit array, degrees.
pub const STEERING_LIMIT_DEG: f64 = 15.0;

/// Default codebook in degrees.
pub const DEFAULT_AOD_SET_DEG: [f64; 11] = [0.0, 1.5, -1.5, 3.0, -3.0, 5.0, -5.0, 10.0, -10.0, 15.0, -15.0];

/// Default fixed beam, degrees.
pub const DEFAULT_FIXED_AOD_DEG: f64 = -5.0;

pub fn default_aod_set() -> Vec<f64> {
    DEFAULT_AOD_SET_DEG.iter().map(|d| d.to_radians()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Fixed { aod: f64 },
    Exhaustive { aod_set: Vec<f64> },
    LidarGuided { aod_set: Vec<f64>, fallback_aod: f64 },
}

impl Strategy {
    pub fn fixed_deg(deg: f64) -> Self {
        Strategy::Fixed { aod: deg.to_radians() }
    }

    pub fn exhaustive() -> Self {
        Strategy::Exhaustive { aod_set: default_aod_set() }
    }

    /// LiDAR guidance over the default codebook with a 0 degree fallback.
    pub fn lidar() -> Self {
        Strategy::LidarGuided { aod_set: default_aod_set(), fallback_aod: 0.0 }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Fixed { .. } => StrategyKind::Fixed,
            Strategy::Exhaustive { .. } => StrategyKind::Exhaustive,
            Strategy::LidarGuided { .. } => StrategyKind::LidarGuided,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let limit = STEERING_LIMIT_DEG.to_radians() + 1e-12;
        let check = |a: f64| {
            if a.is_finite() && a.abs() <= limit {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "AoD {:.3} deg outside +/-{STEERING_LIMIT_DEG} deg",
                    a.to_degrees()
                )))
            }
        };
        match self {
            Strategy::Fixed { aod } => check(*aod),
            Strategy::Exhaustive { aod_set } | Strategy::LidarGuided { aod_set, .. } => {
                if aod_set.is_empty() {
                    return Err(Error::InvalidParameter("AoD set is empty".into()));
                }
                aod_set.iter().try_for_each(|a| check(*a))?;
                if let Strategy::LidarGuided { fallback_aod, .. } = self {
                    check(*fallback_aod)?;
                }
                Ok(())
            }
        }
    }
}

/// `fixed:<deg>`, `exhaustive` or `lidar`.
impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let strategy = match s {
            "exhaustive" => Strategy::exhaustive(),
            "lidar" => Strategy::lidar(),
            _ => match s.strip_prefix("fixed:") {
                Some(deg) => Strategy::fixed_deg(
                    deg.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad fixed angle `{deg}`: {e}")))?,
                ),
                None => {
                    return Err(Error::Parse(format!(
                        "unknown strategy `{s}` (expected fixed:<deg>, exhaustive or lidar)"
                    )))
                }
            },
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Fixed { aod } => write!(f, "fixed:{}", aod.to_degrees()),
            Strategy::Exhaustive { .. } => f.write_str("exhaustive"),
            Strategy::LidarGuided { .. } => f.write_str("lidar"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Fixed,
    Exhaustive,
    LidarGuided,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Fixed => "fixed",
            StrategyKind::Exhaustive => "exhaustive",
            StrategyKind::LidarGuided => "lidar",
        })
    }
}

/// Outcome at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssRecord {
    pub idx: usize,
    pub position: Vec3,
    /// Beam used, radians.
    pub chosen_aod: f64,
    /// dB above the noise floor, >= 0.
    pub rss_db: f64,
    /// LiDAR saw the user (always false for non-LiDAR strategies).
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RssField {
    pub strategy: StrategyKind,
    pub records: Vec<RssRecord>,
}

impl RssField {
    pub fn rss(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.rss_db)
    }

    pub fn min_rss(&self) -> Option<f64> {
        self.rss().reduce(f64::min)
    }

    pub fn max_rss(&self) -> Option<f64> {
        self.rss().reduce(f64::max)
    }

    pub fn mean_rss(&self) -> Option<f64> {
        (!self.records.is_empty()).then(|| self.rss().sum::<f64>() / self.records.len() as f64)
    }
}

/// Splitmix64 finalizer; decorrelates per-point seeds.
fn point_seed(seed: u64, idx: usize) -> u64 {
    let mut z = seed ^ (idx as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn relative_rss(radio: &RadioParams, scene: &Scene, reflector: usize, path: Option<&ReflectionPath>, aod: f64) -> Result<f64> {
    match path {
        Some(p) => {
            let dbm = received_power(radio, p, scene.reflector(reflector)?, aod)?;
            Ok((dbm - radio.noise_floor_dbm).max(0.0))
        }
        None => Ok(0.0),
    }
}

/// Best beam of `aod_set`; ties go to the angle nearest 0, then the negative one.
fn best_beam(
    radio: &RadioParams,
    scene: &Scene,
    reflector: usize,
    path: Option<&ReflectionPath>,
    aod_set: &[f64],
) -> Result<(f64, f64)> {
    let mut order: Vec<f64> = aod_set.to_vec();
    order.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mut best: Option<(f64, f64)> = None;
    for aod in order {
        let rss = relative_rss(radio, scene, reflector, path, aod)?;
        if best.is_none_or(|(_, b)| rss > b) {
            best = Some((aod, rss));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("AoD set is empty".into()))
}

/// LiDAR looks at the user standing at each grid point, with the same per-point
/// seeds [`run_strategy`] uses for [`Strategy::LidarGuided`].
pub fn lidar_sightings(scene: &Scene, reflector: usize, noise_sigma: f64, seed: u64) -> Result<Vec<Detection>> {
    scene
        .rx_grid
        .iter()
        .enumerate()
        .map(|(idx, &p)| detect_user(scene, p, reflector, noise_sigma, point_seed(seed, idx)))
        .collect()
}

/// Evaluates `strategy` with the user at every grid point of `scene`.
///
/// `noise_sigma` and `seed` only matter for [`Strategy::LidarGuided`]. Each
/// grid point draws its LiDAR noise from its own seed derived from `seed` and
/// the point index, so the field is reproducible.
pub fn run_strategy(
    scene: &Scene,
    radio: &RadioParams,
    reflector: usize,
    strategy: &Strategy,
    noise_sigma: f64,
    seed: u64,
) -> Result<RssField> {
    strategy.validate()?;
    radio.validate()?;
    let panel = scene.reflector(reflector)?;
    let mut records = Vec::with_capacity(scene.rx_grid.len());
    for (idx, &position) in scene.rx_grid.iter().enumerate() {
        let path = scene.tx_path(reflector, position)?;
        let path = path.as_ref();
        let (chosen_aod, rss_db, detected) = match strategy {
            Strategy::Fixed { aod } => (*aod, relative_rss(radio, scene, reflector, path, *aod)?, false),
            Strategy::Exhaustive { aod_set } => {
                let (aod, rss) = best_beam(radio, scene, reflector, path, aod_set)?;
                (aod, rss, false)
            }
            Strategy::LidarGuided { aod_set, fallback_aod } => {
                let sighting = detect_user(scene, position, reflector, noise_sigma, point_seed(seed, idx))?;
                let aod = sighting
                    .detection()
                    .and_then(|d| estimate_steering(scene.tx_position, radio.tx_boresight, d, panel))
                    .map_or(*fallback_aod, |est| quantize_aod(est.aod, aod_set));
                (aod, relative_rss(radio, scene, reflector, path, aod)?, sighting.is_detected())
            }
        };
        records.push(RssRecord { idx, position, chosen_aod, rss_db, detected });
    }
    Ok(RssField { strategy: strategy.kind(), records })
}

/// Complementary CDF `P(RSS >= threshold)` sampled at given thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
}

pub fn ccdf(field: &RssField, thresholds: &[f64]) -> Result<CcdfCurve> {
    if field.records.is_empty() {
        return Err(Error::EmptyField);
    }
    let n = field.records.len() as f64;
    let probabilities = thresholds
        .iter()
        .map(|&t| field.rss().filter(|&r| r >= t).count() as f64 / n)
        .collect();
    Ok(CcdfCurve { thresholds: thresholds.to_vec(), probabilities })
}

/// Thresholds from 0 dB up to the strongest RSS of `fields` in `step_db` steps.
pub fn ccdf_thresholds(fields: &[&RssField], step_db: f64) -> Vec<f64> {
    let top = fields.iter().filter_map(|f| f.max_rss()).fold(0.0, f64::max);
    let steps = (top / step_db).ceil() as usize + 1;
    (0..=steps).map(|k| k as f64 * step_db).collect()
}

/// RSS change from field `a` to field `b` on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementStats {
    /// `min(b) - min(a)`: gain of the weakest point.
    pub min_gain_db: f64,
    /// Smallest pointwise gain.
    pub pointwise_min_gain_db: f64,
    pub mean_gain_db: f64,
    pub per_point_gains: Vec<f64>,
}

fn check_same_grid(a: &RssField, b: &RssField) -> Result<()> {
    if a.records.len() != b.records.len() {
        return Err(Error::GridMismatch(format!("{} vs {} points", a.records.len(), b.records.len())));
    }
    if let Some(ra) = a
        .records
        .iter()
        .zip(&b.records)
        .find(|(ra, rb)| ra.position.distance(rb.position) > 1e-9)
        .map(|(ra, _)| ra)
    {
        return Err(Error::GridMismatch(format!("point {} differs", ra.idx)));
    }
    Ok(())
}

pub fn improvement_stats(a: &RssField, b: &RssField) -> Result<ImprovementStats> {
    check_same_grid(a, b)?;
    if a.records.is_empty() {
        return Err(Error::EmptyField);
    }
    let per_point_gains: Vec<f64> = a.records.iter().zip(&b.records).map(|(ra, rb)| rb.rss_db - ra.rss_db).collect();
    let min_gain_db = b.min_rss().unwrap_or(0.0) - a.min_rss().unwrap_or(0.0);
    let pointwise_min_gain_db = per_point_gains.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_gain_db = per_point_gains.iter().sum::<f64>() / per_point_gains.len() as f64;
    Ok(ImprovementStats { min_gain_db, pointwise_min_gain_db, mean_gain_db, per_point_gains })
}

/// Fraction of grid points where the LiDAR saw the user.
pub fn detection_coverage(field: &RssField) -> Result<f64> {
    if field.strategy != StrategyKind::LidarGuided {
        return Err(Error::NotLidarField(field.strategy.to_string()));
    }
    if field.records.is_empty() {
        return Err(Error::EmptyField);
    }
    Ok(field.records.iter().filter(|r| r.detected).count() as f64 / field.records.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use crate::materials::MaterialDb;
    use crate::scene::{build_default_scene, build_default_scene_with};
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn field_of(rss: &[f64], strategy: StrategyKind) -> RssField {
        RssField {
            strategy,
            records: rss
                .iter()
                .enumerate()
                .map(|(idx, &rss_db)| RssRecord {
                    idx,
                    position: Vec3::new(idx as f64, 0.0, 0.0),
                    chosen_aod: 0.0,
                    rss_db,
                    detected: rss_db > 15.0,
                })
                .collect(),
        }
    }

    #[test]
    fn ccdf_examples() {
        let flat = field_of(&[10.0; 5], StrategyKind::Fixed);
        assert_eq!(ccdf(&flat, &[5.0]).unwrap().probabilities, vec![1.0]);
        assert_eq!(ccdf(&flat, &[15.0]).unwrap().probabilities, vec![0.0]);
        let spread = field_of(&[0.0, 10.0, 20.0, 30.0], StrategyKind::Fixed);
        assert_eq!(ccdf(&spread, &[10.0]).unwrap().probabilities, vec![0.75]);
        assert_eq!(ccdf(&field_of(&[], StrategyKind::Fixed), &[1.0]), Err(Error::EmptyField));
    }

    #[test]
    fn improvement_examples() {
        let a = field_of(&[1.0, 5.0, 9.0], StrategyKind::Fixed);
        let same = improvement_stats(&a, &a).unwrap();
        assert!(same.per_point_gains.iter().all(|g| *g == 0.0));
        assert_eq!(same.min_gain_db, 0.0);

        let b = field_of(&[7.0, 11.0, 15.0], StrategyKind::Exhaustive);
        let s = improvement_stats(&a, &b).unwrap();
        assert_eq!(s.min_gain_db, 6.0);
        assert_eq!(s.mean_gain_db, 6.0);
        assert_eq!(s.pointwise_min_gain_db, 6.0);

        let short = field_of(&[1.0], StrategyKind::Fixed);
        assert!(matches!(improvement_stats(&a, &short), Err(Error::GridMismatch(_))));
        let mut moved = b.clone();
        moved.records[1].position.y = 3.0;
        assert!(matches!(improvement_stats(&a, &moved), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn coverage_examples() {
        let all = field_of(&[20.0; 4], StrategyKind::LidarGuided);
        assert_eq!(detection_coverage(&all).unwrap(), 1.0);
        let none = field_of(&[1.0; 4], StrategyKind::LidarGuided);
        assert_eq!(detection_coverage(&none).unwrap(), 0.0);
        assert!(matches!(detection_coverage(&field_of(&[1.0], StrategyKind::Exhaustive)), Err(Error::NotLidarField(_))));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("fixed:-5".parse::<Strategy>().unwrap(), Strategy::fixed_deg(-5.0));
        assert_eq!("exhaustive".parse::<Strategy>().unwrap(), Strategy::exhaustive());
        assert_eq!("lidar".parse::<Strategy>().unwrap(), Strategy::lidar());
        assert!("fixed:20".parse::<Strategy>().is_err());
        assert!("fixed:abc".parse::<Strategy>().is_err());
        assert!("random".parse::<Strategy>().is_err());
        assert_eq!(Strategy::fixed_deg(-5.0).to_string(), "fixed:-5");
    }

    #[test]
    fn exhaustive_dominates_fixed() {
        let scene = build_default_scene();
        let radio = RadioParams::default();
        let ex = run_strategy(&scene, &radio, 0, &Strategy::exhaustive(), 0.0, 0).unwrap();
        for deg in DEFAULT_AOD_SET_DEG {
            let fixed = run_strategy(&scene, &radio, 0, &Strategy::fixed_deg(deg), 0.0, 0).unwrap();
            for (e, f) in ex.records.iter().zip(&fixed.records) {
                assert!(e.rss_db >= f.rss_db);
            }
        }
    }

    #[test]
    fn noiseless_lidar_matches_exhaustive_choice() {
        let scene = build_default_scene();
        let radio = RadioParams::default();
        let ex = run_strategy(&scene, &radio, 0, &Strategy::exhaustive(), 0.0, 0).unwrap();
        let li = run_strategy(&scene, &radio, 0, &Strategy::lidar(), 0.0, 0).unwrap();
        let mismatches = ex
            .records
            .iter()
            .zip(&li.records)
            .filter(|(e, l)| l.detected && e.chosen_aod != l.chosen_aod)
            .count();
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn copper_mostly_falls_back() {
        let scene = build_default_scene_with(&MaterialDb::builtin(), "copper").unwrap();
        let li = run_strategy(&scene, &RadioParams::default(), 0, &Strategy::lidar(), 0.02, 3).unwrap();
        let fallback = li.records.iter().filter(|r| !r.detected).count();
        assert!(fallback as f64 / 102.0 >= 0.95);
        assert!(li.records.iter().filter(|r| !r.detected).all(|r| r.chosen_aod == 0.0));
    }

    #[test]
    fn no_path_points_sit_on_the_floor() {
        let scene = build_default_scene();
        let ex = run_strategy(&scene, &RadioParams::default(), 0, &Strategy::exhaustive(), 0.0, 0).unwrap();
        for r in &ex.records {
            if scene.tx_path(0, r.position).unwrap().is_none() {
                assert_eq!(r.rss_db, 0.0);
                assert_eq!(r.chosen_aod, 0.0);
            } else {
                assert!(r.rss_db > 0.0);
            }
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let scene = build_default_scene();
        let radio = RadioParams::default();
        let a = run_strategy(&scene, &radio, 0, &Strategy::lidar(), 0.02, 11).unwrap();
        let b = run_strategy(&scene, &radio, 0, &Strategy::lidar(), 0.02, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(1, 0), point_seed(1, 1));
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
    }

    proptest! {
        #[test]
        fn ccdf_shape(rss in proptest::collection::vec(0.0f64..60.0, 1..50)) {
            let field = field_of(&rss, StrategyKind::Fixed);
            let thresholds: Vec<f64> = (0..=62).map(|k| k as f64).collect();
            let curve = ccdf(&field, &thresholds).unwrap();
            prop_assert_eq!(curve.probabilities[0], 1.0);
            prop_assert!(curve.probabilities.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(curve.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
