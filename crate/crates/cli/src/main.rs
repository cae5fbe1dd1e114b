use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use specular_link::experiment::Strategy;
use specular_link::materials::Polarization;
use specular_link_cli::{
    cmd_compare, cmd_materials, cmd_reflectance_sweep, cmd_simulate, Database, RunConfig, RunSpec,
    DEFAULT_NOISE_SIGMA,
};

/// Passive specular reflectors for indoor NLoS mmWave links.
#[derive(Parser)]
#[command(name = "speclink", version)]
struct Cli {
    /// Material database (TOML); defaults to the bundled one.
    #[arg(long, global = true)]
    materials_db: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Power reflectance versus incidence angle, as CSV on stdout.
    ReflectanceSweep {
        /// Materials to sweep; all of them when omitted.
        #[arg(long = "material")]
        materials: Vec<String>,
        #[arg(long, default_value_t = 60e9)]
        frequency: f64,
        #[arg(long, default_value = "perp")]
        polarization: Polarization,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
    /// Run one beam-selection strategy over the receiver grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mirror")]
        material: String,
        /// fixed:<deg>, exhaustive or lidar.
        #[arg(long, default_value = "lidar")]
        strategy: Strategy,
        /// Also write the LiDAR point cloud as lidar_points.xyz.
        #[arg(long)]
        xyz: bool,
    },
    /// Run several material/strategy pairs on the same grid and compare them.
    Compare {
        #[command(flatten)]
        common: Common,
        /// <material>/<strategy>, repeated; gains are against the first.
        #[arg(long = "run", required = true)]
        runs: Vec<RunSpec>,
    },
    /// List the material database.
    Materials,
}

#[derive(Args)]
struct Common {
    /// Scene file (TOML); defaults to the bundled L-corridor.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// LiDAR range noise, meters.
    #[arg(long, default_value_t = DEFAULT_NOISE_SIGMA)]
    noise_sigma: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn config(self, material: String, strategy: Strategy) -> RunConfig {
        RunConfig {
            scene_file: self.scene,
            material_name: material,
            strategy,
            seed: self.seed,
            noise_sigma: self.noise_sigma,
            output_dir: self.out,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let db = Database::load(cli.materials_db.as_deref())?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::ReflectanceSweep { materials, frequency, polarization, step } => {
            cmd_reflectance_sweep(&db.db, &materials, frequency, polarization, step, &mut out)?;
        }
        Command::Simulate { common, material, strategy, xyz } => {
            let cfg = common.config(material, strategy);
            let s = cmd_simulate(&cfg, &db, xyz)?;
            writeln!(out, "wrote {}", cfg.output_dir.display())?;
            writeln!(out, "min/mean/max RSS: {:.2} / {:.2} / {:.2} dB", s.min_rss_db, s.mean_rss_db, s.max_rss_db)?;
            if let Some(c) = s.detection_coverage {
                writeln!(out, "detection coverage: {:.1}%", 100.0 * c)?;
            }
        }
        Command::Compare { common, runs } => {
            let cfg = common.config(String::new(), Strategy::exhaustive());
            let rows = cmd_compare(&cfg, &db, &runs)?;
            writeln!(out, "{:<32} {:>9} {:>9} {:>9} {:>9}", "run", "min_dB", "mean_dB", "d_min", "d_mean")?;
            for r in rows {
                let fmt = |g: Option<f64>| g.map_or("-".to_owned(), |g| format!("{g:+.2}"));
                writeln!(
                    out,
                    "{:<32} {:>9.2} {:>9.2} {:>9} {:>9}",
                    r.label,
                    r.min_rss_db,
                    r.mean_rss_db,
                    fmt(r.min_gain_db),
                    fmt(r.mean_gain_db)
                )?;
            }
        }
        Command::Materials => cmd_materials(&db.db, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
