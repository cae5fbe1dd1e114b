//! Command implementations behind the `speclink` binary.
//!
//! Each command takes plain arguments and writes its artifacts, so the
//! binary, the integration tests and the acceptance suite share one code path.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use specular_link::experiment::{
    ccdf, ccdf_thresholds, detection_coverage, improvement_stats, lidar_sightings, run_strategy, RssField, Strategy,
    StrategyKind,
};
use specular_link::lidar::write_xyz;
use specular_link::linkbudget::RadioParams;
use specular_link::materials::{material_reflectance, MaterialDb, Polarization};
use specular_link::scene::{Scene, SceneFile, DEFAULT_SCENE_TOML};

pub const DEFAULT_NOISE_SIGMA: f64 = 0.02;
pub const CCDF_STEP_DB: f64 = 0.5;

/// A material database together with the text it was parsed from.
#[derive(Debug, Clone)]
pub struct Database {
    pub db: MaterialDb,
    pub source: String,
    /// File the database came from, `None` for the bundled one.
    pub path: Option<PathBuf>,
}

impl Database {
    pub fn builtin() -> Self {
        Database { db: MaterialDb::builtin(), source: MaterialDb::builtin_source().to_owned(), path: None }
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::builtin()) };
        let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let db = MaterialDb::from_toml_str(&source).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Database { db, source, path: Some(path.to_owned()) })
    }
}

/// Settings shared by `simulate` and `compare`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scene_file: Option<PathBuf>,
    pub material_name: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub noise_sigma: f64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(material_name: impl Into<String>, strategy: Strategy, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            scene_file: None,
            material_name: material_name.into(),
            strategy,
            seed: 0,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            output_dir: output_dir.into(),
        }
    }
}

/// Scene file text: the named file, or the bundled L-corridor.
pub fn scene_source(scene_file: Option<&Path>) -> Result<String> {
    match scene_file {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(DEFAULT_SCENE_TOML.to_owned()),
    }
}

pub fn load_scene(scene_file: Option<&Path>, db: &MaterialDb, material: &str) -> Result<(Scene, RadioParams)> {
    let text = scene_source(scene_file)?;
    let file = SceneFile::from_toml_str(&text).context("parsing scene file")?;
    Ok(file.build(db, Some(material))?)
}

/// `P(angle)` for each material, one row per angle in `[0, 90)` degrees.
pub fn cmd_reflectance_sweep<W: Write>(
    db: &MaterialDb,
    materials: &[String],
    frequency_hz: f64,
    pol: Polarization,
    step_deg: f64,
    mut out: W,
) -> Result<()> {
    if !(step_deg > 0.0 && step_deg.is_finite()) {
        bail!("angle step must be positive, got {step_deg}");
    }
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        bail!("frequency must be positive, got {frequency_hz}");
    }
    let picked = if materials.is_empty() {
        db.iter().collect::<Vec<_>>()
    } else {
        materials.iter().map(|n| db.get(n)).collect::<specular_link::Result<Vec<_>>>()?
    };
    let lambda = specular_link::wavelength(frequency_hz);
    write!(out, "angle_deg")?;
    for m in &picked {
        write!(out, ",{}", m.name)?;
    }
    writeln!(out)?;
    let n = (90.0 / step_deg).ceil() as usize;
    for k in 0..n {
        let deg = k as f64 * step_deg;
        if deg >= 90.0 {
            break;
        }
        write!(out, "{deg}")?;
        for m in &picked {
            write!(out, ",{}", material_reflectance(m, deg.to_radians(), lambda, pol)?)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn cmd_materials<W: Write>(db: &MaterialDb, mut out: W) -> Result<()> {
    writeln!(out, "{:<26} {:>8} {:>8} {:>9} {:>10} {:>10}", "name", "eps_r", "tan_d", "conductor", "h_rms_m", "lidar_m")?;
    for m in db.iter() {
        let (eps, tan) = if m.is_conductor {
            ("-".to_owned(), "-".to_owned())
        } else {
            (format!("{}", m.eps_r_real), format!("{}", m.loss_tangent))
        };
        writeln!(
            out,
            "{:<26} {:>8} {:>8} {:>9} {:>10} {:>10}",
            m.name, eps, tan, m.is_conductor, m.h_rms, m.lidar_max_range
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AodCount {
    pub aod_deg: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub seed: u64,
    pub material: String,
    pub strategy: String,
    pub noise_sigma: f64,
    pub scene: String,
    pub materials_db: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub metadata: Metadata,
    pub n_points: usize,
    pub detection_coverage: Option<f64>,
    pub min_rss_db: f64,
    pub mean_rss_db: f64,
    pub max_rss_db: f64,
    pub aod_histogram: Vec<AodCount>,
}

/// Hex SHA-256 over everything that determines a simulation's output.
pub fn config_hash(scene_text: &str, db_source: &str, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    for (key, value) in [
        ("scene", scene_text.to_owned()),
        ("materials", db_source.to_owned()),
        ("material", cfg.material_name.clone()),
        ("strategy", cfg.strategy.to_string()),
        ("seed", cfg.seed.to_string()),
        ("noise_sigma", format!("{:016x}", cfg.noise_sigma.to_bits())),
    ] {
        h.update(key.as_bytes());
        h.update((value.len() as u64).to_le_bytes());
        h.update(value.as_bytes());
    }
    hex::encode(h.finalize())
}

fn simulate_field(cfg: &RunConfig, db: &MaterialDb) -> Result<(Scene, RssField)> {
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        bail!("noise sigma must be finite and non-negative, got {}", cfg.noise_sigma);
    }
    let (scene, radio) = load_scene(cfg.scene_file.as_deref(), db, &cfg.material_name)?;
    let field = run_strategy(&scene, &radio, 0, &cfg.strategy, cfg.noise_sigma, cfg.seed)?;
    Ok((scene, field))
}

/// Radians to degrees, rounded to 1e-9 deg to drop conversion noise.
fn degrees(rad: f64) -> f64 {
    (rad.to_degrees() * 1e9).round() / 1e9
}

fn aod_histogram(field: &RssField) -> Vec<AodCount> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for r in &field.records {
        *counts.entry((r.chosen_aod.to_degrees() * 1e9).round() as i64).or_default() += 1;
    }
    counts.into_iter().map(|(k, count)| AodCount { aod_deg: k as f64 / 1e9, count }).collect()
}

fn write_field_csv(path: &Path, field: &RssField) -> Result<()> {
    let mut s = String::from("idx,x,y,z,chosen_aod_deg,rss_db,detected\n");
    for r in &field.records {
        s += &format!(
            "{},{},{},{},{},{},{}\n",
            r.idx,
            r.position.x,
            r.position.y,
            r.position.z,
            degrees(r.chosen_aod),
            r.rss_db,
            r.detected
        );
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn write_ccdf_csv(path: &Path, labels: &[String], fields: &[&RssField]) -> Result<()> {
    let thresholds = ccdf_thresholds(fields, CCDF_STEP_DB);
    let curves = fields.iter().map(|f| ccdf(f, &thresholds)).collect::<specular_link::Result<Vec<_>>>()?;
    let mut s = String::from("threshold_db");
    for l in labels {
        s += ",";
        s += l;
    }
    s += "\n";
    for (k, t) in thresholds.iter().enumerate() {
        s += &t.to_string();
        for c in &curves {
            s += &format!(",{}", c.probabilities[k]);
        }
        s += "\n";
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Runs one strategy over the scene grid and writes `rss_field.csv`,
/// `ccdf.csv` and `summary.json` into `cfg.output_dir`. With `xyz`, the
/// LiDAR returns of every sighted user are also written to `lidar_points.xyz`.
pub fn cmd_simulate(cfg: &RunConfig, db: &Database, xyz: bool) -> Result<Summary> {
    let scene_text = scene_source(cfg.scene_file.as_deref())?;
    let (scene, field) = simulate_field(cfg, &db.db)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;

    write_field_csv(&cfg.output_dir.join("rss_field.csv"), &field)?;
    write_ccdf_csv(&cfg.output_dir.join("ccdf.csv"), &["probability".to_owned()], &[&field])?;

    if xyz {
        let points: Vec<_> = lidar_sightings(&scene, 0, cfg.noise_sigma, cfg.seed)?
            .iter()
            .filter_map(|d| d.detection())
            .flat_map(|d| d.points.iter().copied())
            .collect();
        let path = cfg.output_dir.join("lidar_points.xyz");
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_xyz(&points, std::io::BufWriter::new(file))?;
    }

    let coverage = match field.strategy {
        StrategyKind::LidarGuided => Some(detection_coverage(&field)?),
        _ => None,
    };
    let summary = Summary {
        metadata: Metadata {
            seed: cfg.seed,
            material: cfg.material_name.clone(),
            strategy: cfg.strategy.to_string(),
            noise_sigma: cfg.noise_sigma,
            scene: cfg.scene_file.as_ref().map_or_else(|| "builtin".to_owned(), |p| p.display().to_string()),
            materials_db: db.path.as_ref().map_or_else(|| "builtin".to_owned(), |p| p.display().to_string()),
            config_hash: config_hash(&scene_text, &db.source, cfg),
        },
        n_points: field.records.len(),
        detection_coverage: coverage,
        min_rss_db: field.min_rss().unwrap_or(0.0),
        mean_rss_db: field.mean_rss().unwrap_or(0.0),
        max_rss_db: field.max_rss().unwrap_or(0.0),
        aod_histogram: aod_histogram(&field),
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    let path = cfg.output_dir.join("summary.json");
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(summary)
}

/// One `material/strategy` pair of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub material: String,
    pub strategy: Strategy,
}

impl RunSpec {
    pub fn label(&self) -> String {
        format!("{}/{}", self.material, self.strategy)
    }
}

impl std::str::FromStr for RunSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (material, strategy) =
            s.split_once('/').with_context(|| format!("expected <material>/<strategy>, got {s:?}"))?;
        if material.is_empty() {
            bail!("empty material in {s:?}");
        }
        Ok(RunSpec { material: material.to_owned(), strategy: strategy.parse()? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub min_rss_db: f64,
    pub mean_rss_db: f64,
    /// Against the first run; `None` for the first run itself.
    pub min_gain_db: Option<f64>,
    pub mean_gain_db: Option<f64>,
}

/// Runs every pair on the same grid and writes `gains.csv` (per-point RSS of
/// each run and its gain over the first) and a combined `ccdf.csv`.
/// `base.material_name` and `base.strategy` are ignored.
pub fn cmd_compare(base: &RunConfig, db: &Database, runs: &[RunSpec]) -> Result<Vec<CompareRow>> {
    if runs.len() < 2 {
        bail!("compare needs at least two runs, got {}", runs.len());
    }
    let mut fields = Vec::with_capacity(runs.len());
    for spec in runs {
        let cfg = RunConfig { material_name: spec.material.clone(), strategy: spec.strategy.clone(), ..base.clone() };
        let (_, field) = simulate_field(&cfg, &db.db).with_context(|| format!("run {}", spec.label()))?;
        fields.push(field);
    }
    let stats = fields[1..].iter().map(|f| improvement_stats(&fields[0], f)).collect::<specular_link::Result<Vec<_>>>()?;
    let labels: Vec<String> = runs.iter().map(RunSpec::label).collect();

    fs::create_dir_all(&base.output_dir).with_context(|| format!("creating {}", base.output_dir.display()))?;
    let mut s = String::from("idx,x,y,z");
    for l in &labels {
        s += &format!(",rss_db:{l}");
    }
    for l in &labels[1..] {
        s += &format!(",gain_db:{l}");
    }
    s += "\n";
    for (k, r) in fields[0].records.iter().enumerate() {
        s += &format!("{},{},{},{}", r.idx, r.position.x, r.position.y, r.position.z);
        for f in &fields {
            s += &format!(",{}", f.records[k].rss_db);
        }
        for st in &stats {
            s += &format!(",{}", st.per_point_gains[k]);
        }
        s += "\n";
    }
    let path = base.output_dir.join("gains.csv");
    fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
    let refs: Vec<&RssField> = fields.iter().collect();
    write_ccdf_csv(&base.output_dir.join("ccdf.csv"), &labels, &refs)?;

    Ok(fields
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(k, (f, label))| CompareRow {
            label: label.clone(),
            min_rss_db: f.min_rss().unwrap_or(0.0),
            mean_rss_db: f.mean_rss().unwrap_or(0.0),
            min_gain_db: (k > 0).then(|| stats[k - 1].min_gain_db),
            mean_gain_db: (k > 0).then(|| stats[k - 1].mean_gain_db),
        })
        .collect())
}
