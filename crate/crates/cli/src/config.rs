use std::fs;
use std::path::{Path, PathBuf};

use root_barrier::{ExampleMeasure, Measure, SolverGrid};
use serde::Deserialize;

use crate::CliError;

/// Run configuration as read from the TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub measure: MeasureSpec,
    pub grid: GridSpec,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Contact tolerance override.
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
    /// Directory holding `barrier_<lambda>.csv` files to use instead of
    /// solving.
    pub barrier_dir: Option<PathBuf>,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub volterra: VolterraSpec,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub name: Option<String>,
    pub file: Option<PathBuf>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub p: Option<f64>,
    pub sigma: Option<f64>,
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    pub nx: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_paths: Option<usize>,
    /// Defaults to a quarter of the smallest barrier time step.
    pub dt_sim: Option<f64>,
    /// Defaults to the largest barrier horizon.
    pub t_cap: Option<f64>,
    pub seed: Option<u64>,
    pub bins: Option<usize>,
    pub ks_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolterraSpec {
    pub nodes_per_half: Option<usize>,
    /// Defaults to the grid horizon.
    pub t_max: Option<f64>,
}

pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_KS_MAX: f64 = 0.02;
pub const DEFAULT_VOLTERRA_NODES: usize = 200;

impl RunConfig {
    /// Reads and validates the file; relative paths inside it are resolved
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut cfg.measure.file);
        resolve(&mut cfg.barrier_dir);
        resolve(&mut cfg.out);
        if cfg.out.is_none() {
            cfg.out = Some(base.join("out"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the command-line overrides and re-validates.
    pub fn override_with(
        &mut self,
        lambdas: Option<Vec<f64>>,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<(), CliError> {
        if let Some(l) = lambdas {
            self.lambdas = l;
        }
        if let Some(s) = seed {
            self.mc.seed = Some(s);
        }
        if let Some(o) = out {
            self.out = Some(o);
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.lambdas.is_empty() {
            return Err(CliError::Config("lambda list is empty".into()));
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliError::Config(format!(
                "lambdas must be positive: {:?}",
                self.lambdas
            )));
        }
        if self.lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(format!(
                "lambdas must be strictly increasing: {:?}",
                self.lambdas
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(CliError::Config(format!(
                    "epsilon must be non-negative, got {e}"
                )));
            }
        }
        for p in [&self.measure.file, &self.barrier_dir]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(CliError::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.measure.name.is_some() == self.measure.file.is_some() {
            return Err(CliError::Config(
                "[measure] needs exactly one of `name` and `file`".into(),
            ));
        }
        let grid = self.grid()?;
        grid.cfl_check().map_err(|e| CliError::Cfl(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> Result<SolverGrid, CliError> {
        let g = self.grid;
        SolverGrid::new(g.a, g.b, g.horizon, g.nx, g.nt)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// `out` from the command line or the file, else `out/` next to the
    /// config file.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn measure(&self) -> Result<Measure, CliError> {
        let spec = &self.measure;
        if let Some(file) = &spec.file {
            let text = fs::read_to_string(file)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
            return Measure::from_document(&text).map_err(|e| CliError::Config(e.to_string()));
        }
        let name = spec.name.as_deref().unwrap_or_default();
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| CliError::Config(format!("measure `{name}` needs parameter `{what}`")))
        };
        let example = match name {
            "uniform" => ExampleMeasure::Uniform,
            "sqrt_abs" => ExampleMeasure::SqrtAbs,
            "abs" => ExampleMeasure::Abs,
            "two_point" => ExampleMeasure::TwoPoint {
                a: need(spec.a, "a")?,
                b: need(spec.b, "b")?,
            },
            "three_point" => ExampleMeasure::ThreePoint {
                a: need(spec.a, "a")?,
                p: need(spec.p, "p")?,
            },
            "gaussian_truncated" => ExampleMeasure::GaussianTruncated {
                sigma: need(spec.sigma, "sigma")?,
                cutoff: spec
                    .cutoff
                    .unwrap_or(root_barrier::measure::DEFAULT_GAUSSIAN_CUTOFF),
            },
            other => return Err(CliError::Config(format!("unknown measure `{other}`"))),
        };
        example.build().map_err(|e| CliError::Config(e.to_string()))
    }
}

/// File name used for the barrier of a given scale parameter.
pub fn barrier_file_name(lambda: f64) -> String {
    format!("barrier_{lambda}.csv")
}
