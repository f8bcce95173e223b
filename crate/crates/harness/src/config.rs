//! Experiment configuration: a TOML file, overridden by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use phlab::maps::MapSpec;
use phlab::{Direction, MapFamily};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

/// Numeric knobs shared by all experiments; each experiment reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knobs {
    /// Volume-random points per experiment.
    pub points: usize,
    /// Orbit length for Lyapunov and rotation averages.
    pub iterations: usize,
    /// Pushforward depths; the largest is the headline depth.
    pub depths: Vec<usize>,
    pub samples: usize,
    pub delta: f64,
    pub mass_floor: f64,
    /// Backward-orbit steps between traced leaves.
    pub stride: usize,
    pub step: f64,
    pub depth: usize,
    pub resolution: usize,
    pub budget: u64,
    pub eps: f64,
    pub n_max: usize,
    /// Period used by fixed-point, rotation and Morse-Smale experiments.
    pub period: u32,
    /// Explicit base point; random points are used when absent.
    pub point: Option<[f64; 3]>,
    /// Stable-direction offset between the two leaves of a holonomy run.
    pub separation: f64,
    /// Fraction of points that must succeed for a statistical check.
    pub min_fraction: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            points: 10,
            iterations: 100_000,
            depths: vec![40],
            samples: 4096,
            delta: 0.01,
            mass_floor: 0.02,
            stride: 10,
            step: 2e-3,
            depth: 40,
            resolution: 32,
            budget: 10_000_000,
            eps: 0.01,
            n_max: 60,
            period: 1,
            point: None,
            separation: 0.02,
            min_fraction: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Experiment run at every grid point.
    pub experiment: String,
    pub max_points: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid { a: Vec::new(), b: Vec::new(), experiment: "disintegrate".into(), max_points: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub map: MapSpec,
    pub knobs: Knobs,
    pub sweep: SweepGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            id: "default".into(),
            seed: 7,
            threads: 0,
            map: MapFamily::shub_wilkinson(0.05, 0.05).spec(),
            knobs: Knobs::default(),
            sweep: SweepGrid::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: name.clone(), source })?;
        Self::from_toml(&text, &name)
    }

    /// Fails only for values TOML cannot hold, such as seeds of 2^63 and above.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Invalid(format!("cannot write config: {e}")))
    }

    pub fn map_family(&self) -> Result<MapFamily, ConfigError> {
        MapFamily::try_from(self.map.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form. The thread count does not change
    /// results and is left out.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&ExperimentConfig { threads: 0, ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.map_family()?;
        let k = &self.knobs;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed {} does not fit a TOML integer (max {})", self.seed, i64::MAX));
        }
        if k.depths.is_empty() {
            return bad("knobs.depths is empty".into());
        }
        if !(k.delta > 0.0 && k.delta < 0.25) {
            return bad(format!("knobs.delta must be in (0, 0.25), got {}", k.delta));
        }
        if !(k.step > 0.0 && k.step <= 1e-2) {
            return bad(format!("knobs.step must be in (0, 0.01], got {}", k.step));
        }
        if !(k.eps > 0.0 && k.eps < 0.5) {
            return bad(format!("knobs.eps must be in (0, 0.5), got {}", k.eps));
        }
        if k.point.is_some_and(|p| p.iter().any(|v| !v.is_finite())) {
            return bad("knobs.point must have finite coordinates".into());
        }
        if k.stride == 0 || k.period == 0 {
            return bad("knobs.stride and knobs.period must be positive".into());
        }
        if !(0.0..=1.0).contains(&k.min_fraction) {
            return bad(format!("knobs.min_fraction must be in [0, 1], got {}", k.min_fraction));
        }
        let grid = self.sweep.a.len() * self.sweep.b.len();
        if grid > self.sweep.max_points {
            return bad(format!("sweep grid has {grid} points, more than sweep.max_points = {}", self.sweep.max_points));
        }
        Ok(())
    }

    /// Same configuration at another `(a, b)`.
    pub fn at(&self, a: f64, b: f64) -> Self {
        let mut c = self.clone();
        c.map.a = a;
        c.map.b = b;
        c.id = format!("{}/a={a},b={b}", self.id);
        c
    }
}

/// Command-line overrides; `None` leaves the file (or default) value in place.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Map family: shub-wilkinson, zq-variant, bonatti-wilkinson, linear-skew.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub q: Option<u32>,
    /// Use the inverse of the family map.
    #[arg(long)]
    pub inverse: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Comma-separated pushforward depths.
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub period: Option<u32>,
    /// Base point as x,y,z.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub point: Option<Vec<f64>>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub min_fraction: Option<f64>,
    /// Sweep values of a, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub grid_a: Option<Vec<f64>>,
    /// Sweep values of b, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub grid_b: Option<Vec<f64>>,
    /// Experiment run at each sweep point.
    #[arg(long)]
    pub sweep_experiment: Option<String>,
}

impl Overrides {
    pub fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(m) = &self.map {
            c.map.family = match m.as_str() {
                "sw" => "shub-wilkinson".into(),
                "zq" => "zq-variant".into(),
                "bw" => "bonatti-wilkinson".into(),
                "linear" => "linear-skew".into(),
                other => other.into(),
            };
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = &self.$field { $target = v.clone(); })*
            };
        }
        set! {
            a => c.map.a, b => c.map.b, seed => c.seed, threads => c.threads, id => c.id,
            points => c.knobs.points, iterations => c.knobs.iterations, depths => c.knobs.depths,
            samples => c.knobs.samples, delta => c.knobs.delta, stride => c.knobs.stride,
            step => c.knobs.step, depth => c.knobs.depth, resolution => c.knobs.resolution,
            budget => c.knobs.budget, eps => c.knobs.eps, n_max => c.knobs.n_max, period => c.knobs.period,
            separation => c.knobs.separation, min_fraction => c.knobs.min_fraction,
            grid_a => c.sweep.a, grid_b => c.sweep.b, sweep_experiment => c.sweep.experiment,
        }
        if let Some(q) = self.q {
            c.map.q = Some(q);
        }
        if self.inverse {
            c.map.direction = Direction::Inverse;
        }
        if let Some(p) = &self.point {
            c.knobs.point = Some([p[0], p[1], p[2]]);
        }
    }
}
