//! Run configuration: TOML file, then `VPID_*` environment, then flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use vpid::constitutive::{HardeningParams, MaterialParams};
use vpid::identification::WeightingKind;
use vpid::lm::LmOptions;
use vpid::loading::StrainProgram;
use vpid::metric::DEFAULT_HISTORY_STEPS;
use vpid::noise::NoiseModel;
use vpid::sensitivity::DEFAULT_INSTANCES;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub k: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub m: Option<f64>,
    pub yield_stress: Option<f64>,
    pub k0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardeningSection {
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
}

impl HardeningSection {
    fn over(&self, base: HardeningParams) -> HardeningParams {
        HardeningParams {
            gamma: self.gamma.unwrap_or(base.gamma),
            beta: self.beta.unwrap_or(base.beta),
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2.unwrap_or(base.c2),
            kappa1: self.kappa1.unwrap_or(base.kappa1),
            kappa2: self.kappa2.unwrap_or(base.kappa2),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramSection {
    pub max_shear: Option<f64>,
    pub reversals: Option<Vec<f64>>,
    pub points: Option<usize>,
    pub duration: Option<f64>,
}

/// On-disk layout. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub instances: Option<usize>,
    pub weighting: Option<String>,
    pub histories: Option<Vec<u8>>,
    pub history_steps: Option<usize>,
    pub output_dir: Option<PathBuf>,
    /// Levenberg–Marquardt iteration cap.
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub truth: HardeningSection,
    /// LM start for `identify`.
    #[serde(default)]
    pub start: HardeningSection,
    #[serde(default)]
    pub program: ProgramSection,
    pub noise: Option<NoiseModel>,
}

/// Values that can come from the environment or the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub instances: Option<usize>,
    pub weighting: Option<String>,
    pub history: Option<u8>,
    pub output_dir: Option<PathBuf>,
}

/// Validated settings for one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub material: MaterialParams,
    pub truth: HardeningParams,
    pub start: HardeningParams,
    pub program: StrainProgram,
    pub noise: NoiseModel,
    /// `None` means "not chosen": identify uses the full inverse covariance,
    /// montecarlo runs all three.
    pub weighting: Option<WeightingKind>,
    pub n_instances: usize,
    pub master_seed: u64,
    pub histories: Vec<u8>,
    pub history_steps: usize,
    pub output_dir: PathBuf,
    pub max_iterations: usize,
}

fn field(path: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {err}"))
}

pub fn parse_weighting(s: &str) -> Result<WeightingKind, CliError> {
    match WeightingKind::parse(s) {
        Some(WeightingKind::Custom) | None => {
            Err(field("weighting", format!("unknown value {s:?} (identity, diag_inv_cov, full_inv_cov)")))
        }
        Some(k) => Ok(k),
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {}", p.display(), e.message())))?
            }
            None => ConfigFile::default(),
        };
        Self::resolve(file, overrides)
    }

    pub fn resolve(file: ConfigFile, o: &Overrides) -> Result<Self, CliError> {
        let base = MaterialParams::steel(HardeningParams::steel_full_inverse_cov());
        let m = &file.material;
        let material = MaterialParams {
            k: m.k.unwrap_or(base.k),
            mu: m.mu.unwrap_or(base.mu),
            eta: m.eta.unwrap_or(base.eta),
            m: m.m.unwrap_or(base.m),
            yield_stress: m.yield_stress.unwrap_or(base.yield_stress),
            k0: m.k0.unwrap_or(base.k0),
            hardening: base.hardening,
        };
        material.validate().map_err(|e| field("material", e))?;

        let truth = file.truth.over(HardeningParams::steel_full_inverse_cov());
        truth.validate().map_err(|e| field("truth", e))?;
        let start = file.start.over(HardeningParams::steel_identity());
        start.validate().map_err(|e| field("start", e))?;

        let d = StrainProgram::default_torsion();
        let p = &file.program;
        let reversals = p.reversals.clone().unwrap_or_else(|| d.waypoints()[1..].to_vec());
        let program = StrainProgram::new(
            p.max_shear.unwrap_or(d.max_shear()),
            &reversals,
            p.points.unwrap_or(d.len()),
            p.duration.unwrap_or(d.duration()),
        )
        .map_err(|e| field("program", e))?;

        let noise = file.noise.unwrap_or_default();
        noise.validate().map_err(|e| field("noise", e))?;

        let weighting = match o.weighting.as_deref().or(file.weighting.as_deref()) {
            None | Some("all") => None,
            Some(s) => Some(parse_weighting(s)?),
        };

        let n_instances = o.instances.or(file.instances).unwrap_or(DEFAULT_INSTANCES);
        if n_instances == 0 {
            return Err(field("instances", "must be at least 1"));
        }
        let histories = match o.history {
            Some(h) => vec![h],
            None => file.histories.unwrap_or_else(|| vec![1, 2]),
        };
        if histories.is_empty() {
            return Err(field("histories", "at least one history id is required"));
        }
        if let Some(h) = histories.iter().find(|h| !matches!(h, 1 | 2)) {
            return Err(field("histories", format!("unknown history id {h} (available: 1, 2)")));
        }
        let history_steps = file.history_steps.unwrap_or(DEFAULT_HISTORY_STEPS);
        if history_steps == 0 {
            return Err(field("history_steps", "must be at least 1"));
        }

        let max_iterations = file.max_iterations.unwrap_or(LmOptions::default().max_iterations);
        if max_iterations == 0 {
            return Err(field("max_iterations", "must be at least 1"));
        }

        Ok(RunConfig {
            material,
            truth,
            start,
            program,
            noise,
            weighting,
            n_instances,
            master_seed: o.seed.or(file.seed).unwrap_or(0),
            histories,
            history_steps,
            output_dir: o.output_dir.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("out")),
            max_iterations,
        })
    }

    /// Material with the truth hardening parameters.
    pub fn truth_material(&self) -> MaterialParams {
        self.material.with_hardening(self.truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        RunConfig::resolve(file, &Overrides::default())
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.truth, HardeningParams::steel_full_inverse_cov());
        assert_eq!(c.program, StrainProgram::default_torsion());
        assert_eq!(c.n_instances, DEFAULT_INSTANCES);
        assert_eq!(c.histories, vec![1, 2]);
        assert_eq!(c.noise, NoiseModel::default());
        assert_eq!(c.weighting, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("sede = 3").is_err());
        assert!(parse("[material]\nmuu = 1.0").is_err());
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = parse("[truth]\nc1 = -1.0").unwrap_err().to_string();
        assert!(err.starts_with("truth:"), "{err}");
        let err = parse("histories = [3]").unwrap_err().to_string();
        assert!(err.starts_with("histories:"), "{err}");
        let err = parse("[noise]\nkind = \"ar\"\nalpha = 1.5\nsigma = 1.0").unwrap_err().to_string();
        assert!(err.starts_with("noise:"), "{err}");
    }

    #[test]
    fn overrides_beat_the_file() {
        let file: ConfigFile = toml::from_str("seed = 3\ninstances = 50\nweighting = \"identity\"").unwrap();
        let o = Overrides { seed: Some(9), weighting: Some("diag_inv_cov".into()), history: Some(2), ..Default::default() };
        let c = RunConfig::resolve(file, &o).unwrap();
        assert_eq!(c.master_seed, 9);
        assert_eq!(c.n_instances, 50);
        assert_eq!(c.weighting, Some(WeightingKind::DiagInverseCov));
        assert_eq!(c.histories, vec![2]);
    }
}
