//! Scenario files: the JSON documents driving every subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use lattice_diffraction::geometry::{parse_obstacle, Obstacle};
use lattice_diffraction::lattice::{Direction, Wavenumber};
use lattice_diffraction::Complex;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavenumberSpec {
    pub re: f64,
    pub im: f64,
}

/// Observation grid: either explicit incidence parameters or an angle
/// grid. Angles are measured from the vertical axis in radians, so a
/// grid over (0, pi) sweeps the full upper observation half-plane with
/// `beta = cot(theta)` per point.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub angles: Option<AngleGrid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleGrid {
    pub count: usize,
    /// Optional [min, max] in radians; defaults to (0, pi) sampled at
    /// midpoints.
    #[serde(default)]
    pub range: Option<[f64; 2]>,
}

/// Inputs of the canonical-formula subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalSpec {
    /// One of: constants, kernel, halfplane, strip, wedge, edge.
    pub formula: String,
    #[serde(default)]
    pub beta1: Option<f64>,
    /// CSV table `beta,re,im` of auxiliary directivities.
    #[serde(default)]
    pub aux_path: Option<PathBuf>,
    /// Second table for the strip/wedge combinations; omitted tables fall
    /// back to the symmetry substitution.
    #[serde(default)]
    pub aux2_path: Option<PathBuf>,
    /// Unit-circle sample count for the kernel dump.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Edge value C1 for the kernel dump.
    #[serde(default)]
    pub c1: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub wavenumber: WavenumberSpec,
    #[serde(default)]
    pub obstacle_path: Option<PathBuf>,
    /// One incidence parameter or a list.
    #[serde(default)]
    pub incidence: Option<serde_json::Value>,
    #[serde(default)]
    pub observations: Option<ObservationSpec>,
    /// Auxiliary incidence parameters for the embedding basis.
    #[serde(default)]
    pub basis: Option<Vec<f64>>,
    /// Output directory; the --out flag overrides it.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Seed for randomised selections in the validation suite.
    #[serde(default)]
    pub seed: u64,
    /// Extent of the Green-table dump: all 0 <= m <= n <= extent.
    #[serde(default)]
    pub green_extent: Option<i64>,
    /// Window for field maps; defaults to the obstacle box inflated by 10.
    #[serde(default)]
    pub field_window: Option<[i64; 4]>,
    /// Largest probe size for the rank command.
    #[serde(default)]
    pub max_probe: Option<usize>,
    /// Singular-value threshold for the rank command.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub canonical: Option<CanonicalSpec>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario {}", path.display()))?;
        let scenario: Scenario = serde_json::from_str(&text)
            .with_context(|| format!("malformed scenario {}", path.display()))?;
        scenario.validate(path)?;
        Ok(scenario)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        if self.wavenumber.im <= 0.0 {
            bail!(
                "{}: wavenumber.im must be positive (limiting absorption)",
                path.display()
            );
        }
        if let Some(obs) = &self.observations {
            let n = match (&obs.betas, &obs.angles) {
                (Some(betas), None) => betas.len(),
                (None, Some(grid)) => grid.count,
                _ => bail!(
                    "{}: observations must set exactly one of betas / angles",
                    path.display()
                ),
            };
            if n == 0 {
                bail!("{}: observation count must be at least 1", path.display());
            }
        }
        if let Some(op) = &self.obstacle_path {
            let resolved = self.resolve(path, op);
            if !resolved.exists() {
                bail!("{}: obstacle file {} does not exist", path.display(), resolved.display());
            }
        }
        Ok(())
    }

    /// Paths inside a scenario are relative to the scenario file.
    fn resolve(&self, scenario_path: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            scenario_path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn wavenumber(&self) -> Result<Wavenumber> {
        Wavenumber::from_parts(self.wavenumber.re, self.wavenumber.im)
            .map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn obstacle(&self, scenario_path: &Path) -> Result<Obstacle> {
        let rel = self
            .obstacle_path
            .as_ref()
            .context("scenario needs an obstacle_path")?;
        let path = self.resolve(scenario_path, rel);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read obstacle {}", path.display()))?;
        parse_obstacle(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn incidences(&self) -> Result<Vec<f64>> {
        let value = self
            .incidence
            .as_ref()
            .context("scenario needs an incidence")?;
        let betas: Vec<f64> = match value {
            serde_json::Value::Number(x) => {
                vec![x.as_f64().context("incidence is not a number")?]
            }
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| v.as_f64().context("incidence entries must be numbers"))
                .collect::<Result<Vec<_>>>()?,
            _ => bail!("incidence must be a number or an array of numbers"),
        };
        if betas.is_empty() {
            bail!("incidence list is empty");
        }
        Ok(betas)
    }

    pub fn observation_directions(&self) -> Result<Vec<Direction>> {
        let obs = self
            .observations
            .as_ref()
            .context("scenario needs observations")?;
        let betas: Vec<f64> = if let Some(betas) = &obs.betas {
            betas.clone()
        } else {
            let grid = obs.angles.as_ref().expect("validated");
            let (lo, hi) = match grid.range {
                Some([lo, hi]) => (lo, hi),
                None => (0.0, std::f64::consts::PI),
            };
            (0..grid.count)
                .map(|i| {
                    let theta = lo + (hi - lo) * (i as f64 + 0.5) / grid.count as f64;
                    1.0 / theta.tan()
                })
                .collect()
        };
        let mut dirs: Vec<Direction> = betas
            .iter()
            .map(|&b| Direction::from_beta(b).map_err(|e| anyhow::anyhow!("{e}")))
            .collect::<Result<Vec<_>>>()?;
        dirs.dedup();
        Ok(dirs)
    }

    pub fn canonical_aux(
        &self,
        scenario_path: &Path,
        which: &Path,
    ) -> Result<impl Fn(f64) -> lattice_diffraction::Result<Complex> + Copy> {
        let path = self.resolve(scenario_path, which);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read auxiliary table {}", path.display()))?;
        let mut entries: Vec<(i64, Complex)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("beta") {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                bail!("{}:{}: expected beta,re,im", path.display(), lineno + 1);
            }
            let beta: f64 = parts[0].parse()?;
            let re: f64 = parts[1].parse()?;
            let im: f64 = parts[2].parse()?;
            entries.push((quantize(beta), Complex::new(re, im)));
        }
        entries.sort_by_key(|&(q, _)| q);
        let table: &'static [(i64, Complex)] = Vec::leak(entries);
        Ok(move |beta: f64| {
            let q = quantize(beta);
            table
                .binary_search_by_key(&q, |&(k, _)| k)
                .map(|i| table[i].1)
                .map_err(|_| {
                    lattice_diffraction::Error::Input(format!(
                        "auxiliary table has no entry for beta = {beta}"
                    ))
                })
        })
    }
}

/// Tables are keyed by beta rounded to 1e-9, tolerating text round-trips.
fn quantize(beta: f64) -> i64 {
    (beta * 1e9).round() as i64
}
