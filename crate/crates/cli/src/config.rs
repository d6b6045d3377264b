//! Flat key=value experiment configuration. One key per line, `#` comments,
//! keys match the config struct fields exactly; unknown keys are rejected so
//! manifests stay diffable against the files that produced them.

use anyhow::{bail, Context, Result};
use std::path::PathBuf;

pub const EXPERIMENTS: [&str; 8] = [
    "ce_static",
    "warped_square",
    "ce_linear",
    "vorticial",
    "oscillating",
    "pme",
    "pme_weak",
    "custom",
];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub k: usize,
    pub theta: f64,
    /// Final time for convection-diffusion; simulated duration past t0 for
    /// the porous medium runs.
    pub t_final: f64,
    /// Coarsest-level time step; defaults to the preset's value.
    pub dt0: Option<f64>,
    /// Number of generated mesh levels; defaults to the preset's value.
    pub mesh_levels: Option<usize>,
    /// Explicit mesh files; overrides generated levels when non-empty.
    pub mesh_files: Vec<PathBuf>,
    pub rng_seed: u64,
    pub output_dir: PathBuf,
    pub export_snapshots: bool,
    pub snapshot_times: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            k: 1,
            theta: 0.5,
            t_final: 0.01,
            dt0: None,
            mesh_levels: None,
            mesh_files: Vec::new(),
            rng_seed: 0,
            output_dir: PathBuf::from("out"),
            export_snapshots: false,
            snapshot_times: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut saw_experiment = false;
        let mut saw_k = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let ctx = || format!("line {}: bad value for {key}", lineno + 1);
            match key {
                "experiment" => {
                    cfg.experiment = value.to_string();
                    saw_experiment = true;
                }
                "k" => {
                    cfg.k = value.parse().with_context(ctx)?;
                    saw_k = true;
                }
                "theta" => cfg.theta = value.parse().with_context(ctx)?,
                "T" => cfg.t_final = value.parse().with_context(ctx)?,
                "dt0" => cfg.dt0 = Some(value.parse().with_context(ctx)?),
                "mesh_levels" => cfg.mesh_levels = Some(value.parse().with_context(ctx)?),
                "mesh_files" => {
                    cfg.mesh_files = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(PathBuf::from)
                        .collect();
                }
                "rng_seed" => cfg.rng_seed = value.parse().with_context(ctx)?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "export_snapshots" => cfg.export_snapshots = value.parse().with_context(ctx)?,
                "snapshot_times" => {
                    cfg.snapshot_times = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .with_context(ctx)?;
                }
                other => bail!("line {}: unknown key `{other}`", lineno + 1),
            }
        }
        if !saw_experiment {
            bail!("missing required key `experiment`");
        }
        if !saw_k {
            bail!("missing required key `k`");
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            bail!(
                "unknown experiment `{}` (expected one of {})",
                self.experiment,
                EXPERIMENTS.join(", ")
            );
        }
        if !(1..=3).contains(&self.k) {
            bail!("k = {} outside the supported range 1..=3", self.k);
        }
        if !(0.0..=1.0).contains(&self.theta) {
            bail!("theta = {} outside [0, 1]", self.theta);
        }
        if !(self.t_final > 0.0) {
            bail!("T = {} must be positive", self.t_final);
        }
        if let Some(l) = self.mesh_levels {
            if l < 1 {
                bail!("mesh_levels must be at least 1");
            }
        }
        if let Some(dt) = self.dt0 {
            if !(dt > 0.0) {
                bail!("dt0 = {dt} must be positive");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# convection-diffusion on the warped square
experiment = warped_square
k = 2
theta = 0.5
T = 0.01
dt0 = 1e-3
mesh_levels = 4
rng_seed = 7
output_dir = results/ws
export_snapshots = true
snapshot_times = 0.0, 0.005, 0.01
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.experiment, "warped_square");
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.mesh_levels, Some(4));
        assert_eq!(cfg.rng_seed, 7);
        assert_eq!(cfg.snapshot_times, vec![0.0, 0.005, 0.01]);
        assert!(cfg.export_snapshots);
        assert_eq!(cfg.output_dir, PathBuf::from("results/ws"));
    }

    #[test]
    fn defaults_and_mesh_files() {
        let cfg =
            ExperimentConfig::parse("experiment = pme\nk = 1\nmesh_files = a.txt, b.txt\n").unwrap();
        assert_eq!(cfg.theta, 0.5);
        assert_eq!(cfg.t_final, 0.01);
        assert_eq!(cfg.dt0, None);
        assert_eq!(cfg.mesh_files.len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("k = 1\n").is_err());
        assert!(ExperimentConfig::parse("experiment = nope\nk = 1\n").is_err());
        assert!(ExperimentConfig::parse("experiment = pme\nk = 4\n").is_err());
        assert!(ExperimentConfig::parse("experiment = pme\nk = 1\ntheta = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("experiment = pme\nk = 1\nbogus = 3\n").is_err());
        assert!(ExperimentConfig::parse("experiment = pme\nk = 1\nmesh_levels = 0\n").is_err());
    }
}
