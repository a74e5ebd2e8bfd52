//! Run configuration read from a TOML file.
//!
//! ```toml
//! [geometry]
//! preset = "torus"          # straight | torus (alias arc) | helix | table
//! radius = 1.0              # torus: bend radius
//!
//! [radius]
//! kind = "constant"         # constant | harmonic | axial-wave | table
//! r0 = 1.0
//!
//! [discretization]
//! n_s = 16                 # s-intervals (n_s + 1 stations)
//! n_theta = 32
//! n_rho = 32
//!
//! [physics]
//! h = 0.05
//! flux = 1.0
//! p_per = 0.0
//!
//! [toggles]
//! transverse = true
//! cutoff = true
//!
//! [output]
//! format = "both"           # csv | vtk | both
//! directory = "out"
//!
//! [study]
//! h_values = [0.1, 0.05, 0.025]
//! meshes = [16, 32, 64]
//! ```
//!
//! A `table` centerline reads a CSV file with header `x,y,z`. A `table` radius reads
//! a CSV file with header `s,r0,r1,...`, where column `rj` holds R at θ = 2πj/M.
//! Relative table paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PipeError, Result};
use crate::geometry::{CurveSpec, RadiusSpec};
use crate::vec3::Vec3;

pub const MIN_COUNT: usize = 4;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeometryConfig {
    Straight,
    #[serde(alias = "arc")]
    Torus {
        #[serde(default = "one")]
        radius: f64,
    },
    Helix {
        curvature: f64,
        torsion: f64,
    },
    Table {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadiusConfig {
    Constant {
        #[serde(default = "one")]
        r0: f64,
    },
    Harmonic {
        #[serde(default = "one")]
        r0: f64,
        amplitude: f64,
        mode: u32,
        #[serde(default)]
        taper: f64,
    },
    AxialWave {
        #[serde(default = "one")]
        r0: f64,
        amplitude: f64,
        frequency: f64,
    },
    Table {
        path: PathBuf,
    },
}

impl Default for RadiusConfig {
    fn default() -> Self {
        RadiusConfig::Constant { r0: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    /// s-intervals; there are n_s + 1 stations
    pub n_s: usize,
    pub n_theta: usize,
    pub n_rho: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            n_s: 16,
            n_theta: 32,
            n_rho: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub h: f64,
    #[serde(default = "one")]
    pub flux: f64,
    #[serde(default)]
    pub p_per: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    pub transverse: bool,
    pub cutoff: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            transverse: true,
            cutoff: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Vtk,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn vtk(self) -> bool {
        matches!(self, OutputFormat::Vtk | OutputFormat::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
}

fn default_directory() -> PathBuf {
    PathBuf::from("output")
}

impl Default for Output {
    fn default() -> Self {
        Output {
            format: OutputFormat::Csv,
            directory: default_directory(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    #[serde(default = "default_h_values")]
    pub h_values: Vec<f64>,
    #[serde(default = "default_meshes")]
    pub meshes: Vec<usize>,
}

fn default_h_values() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

fn default_meshes() -> Vec<usize> {
    vec![16, 32, 64]
}

impl Default for Study {
    fn default() -> Self {
        Study {
            h_values: default_h_values(),
            meshes: default_meshes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub radius: RadiusConfig,
    #[serde(default)]
    pub discretization: Discretization,
    pub physics: Physics,
    #[serde(default)]
    pub toggles: Toggles,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub study: Study,
    /// directory that relative table paths are resolved against
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(PipeError::Config("configuration is empty".into()));
        }
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PipeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipeError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.discretization;
        for (name, v) in [("n_s", d.n_s), ("n_theta", d.n_theta), ("n_rho", d.n_rho)] {
            if v < MIN_COUNT {
                return Err(PipeError::Config(format!(
                    "discretization.{name} = {v}, must be at least {MIN_COUNT}"
                )));
            }
        }
        let p = &self.physics;
        if !(p.h > 0.0 && p.h.is_finite()) {
            return Err(PipeError::Config(format!(
                "physics.h = {}, must be positive",
                p.h
            )));
        }
        if !p.flux.is_finite() || !p.p_per.is_finite() {
            return Err(PipeError::Config(
                "physics.flux and physics.p_per must be finite".into(),
            ));
        }
        if let Some(h) = self
            .study
            .h_values
            .iter()
            .find(|h| !(**h > 0.0 && h.is_finite()))
        {
            return Err(PipeError::Config(format!(
                "study.h_values contains {h}, must be positive"
            )));
        }
        if let Some(m) = self.study.meshes.iter().find(|m| **m < MIN_COUNT) {
            return Err(PipeError::Config(format!(
                "study.meshes contains {m}, must be at least {MIN_COUNT}"
            )));
        }
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn curve_spec(&self) -> Result<CurveSpec> {
        Ok(match &self.geometry {
            GeometryConfig::Straight => CurveSpec::Straight,
            GeometryConfig::Torus { radius } => CurveSpec::Arc { radius: *radius },
            GeometryConfig::Helix { curvature, torsion } => CurveSpec::Helix {
                curvature: *curvature,
                torsion: *torsion,
            },
            GeometryConfig::Table { path } => CurveSpec::Tabulated {
                points: read_table(&self.resolve(path), Some(&["x", "y", "z"]))?
                    .1
                    .into_iter()
                    .map(|r| Vec3::new(r[0], r[1], r[2]))
                    .collect(),
            },
        })
    }

    pub fn radius_spec(&self) -> Result<RadiusSpec> {
        Ok(match &self.radius {
            RadiusConfig::Constant { r0 } => RadiusSpec::Constant { r0: *r0 },
            RadiusConfig::Harmonic {
                r0,
                amplitude,
                mode,
                taper,
            } => RadiusSpec::Harmonic {
                r0: *r0,
                amplitude: *amplitude,
                mode: *mode,
                taper: *taper,
            },
            RadiusConfig::AxialWave {
                r0,
                amplitude,
                frequency,
            } => RadiusSpec::AxialWave {
                r0: *r0,
                amplitude: *amplitude,
                frequency: *frequency,
            },
            RadiusConfig::Table { path } => {
                let (header, rows) = read_table(&self.resolve(path), None)?;
                if header.first().map(String::as_str) != Some("s") || header.len() < 2 {
                    return Err(PipeError::Config(format!(
                        "radius table {} must have header s,r0,r1,...",
                        path.display()
                    )));
                }
                RadiusSpec::Table {
                    s: rows.iter().map(|r| r[0]).collect(),
                    values: rows.iter().map(|r| r[1..].to_vec()).collect(),
                }
            }
        })
    }
}

/// Reads a numeric CSV table; checks the header when `expected` is given.
fn read_table(path: &Path, expected: Option<&[&str]>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let err = |m: String| PipeError::Config(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if let Some(exp) = expected {
        if header != exp {
            return Err(err(format!(
                "expected header {}, found {}",
                exp.join(","),
                header.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad number {f:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(err(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TORUS: &str = r#"
[geometry]
preset = "torus"
radius = 2.0

[discretization]
n_s = 9
n_theta = 16
n_rho = 16

[physics]
h = 0.05
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_toml(TORUS).unwrap();
        assert_eq!(c.geometry, GeometryConfig::Torus { radius: 2.0 });
        assert_eq!(c.radius, RadiusConfig::Constant { r0: 1.0 });
        assert_eq!(c.physics.flux, 1.0);
        assert!(c.toggles.transverse && c.toggles.cutoff);
        assert_eq!(c.output.format, OutputFormat::Csv);
        assert_eq!(c.curve_spec().unwrap(), CurveSpec::Arc { radius: 2.0 });
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::from_toml(TORUS).unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_toml("").is_err());
        assert!(RunConfig::from_toml(&TORUS.replace("n_rho = 16", "n_rho = 3")).is_err());
        assert!(RunConfig::from_toml(&TORUS.replace("h = 0.05", "h = 0.0")).is_err());
        assert!(RunConfig::from_toml(&TORUS.replace("h = 0.05", "h = -1.0")).is_err());
        assert!(RunConfig::from_toml(&TORUS.replace("torus", "spiral")).is_err());
        assert!(RunConfig::from_toml(&format!("{TORUS}\nunknown = 1\n")).is_err());
        let err = RunConfig::from_toml("[physics]\nh = 0.1\n").unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn reads_tables_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("c.csv"),
            "x,y,z\n0,0,0\n0,0,0.5\n0,0,1\n0,0,1.5\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("r.csv"),
            "s,r0,r1,r2,r3\n0,1,1,1,1\n0.5,1.1,1.1,1.1,1.1\n1,1,1,1,1\n",
        )
        .unwrap();
        let text = "[geometry]\npreset = \"table\"\npath = \"c.csv\"\n[radius]\nkind = \"table\"\npath = \"r.csv\"\n[physics]\nh = 0.1\n";
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let c = RunConfig::from_file(&path).unwrap();
        match c.curve_spec().unwrap() {
            CurveSpec::Tabulated { points } => assert_eq!(points.len(), 4),
            other => panic!("{other:?}"),
        }
        match c.radius_spec().unwrap() {
            RadiusSpec::Table { s, values } => {
                assert_eq!(s, vec![0.0, 0.5, 1.0]);
                assert_eq!(values[1], vec![1.1; 4]);
            }
            other => panic!("{other:?}"),
        }
    }
}
