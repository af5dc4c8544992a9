//! The four subcommands. Each returns the lines it wants printed; files are
//! written here, after all computation for that file is done.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use vpid::identification::{
    levenberg_marquardt, DataSource, ExperimentData, FitOptions, FitResult, ForwardModel, WeightingKind,
    WeightingScheme,
};
use vpid::loading::benchmark_history;
use vpid::metric::{check_metric_axioms, dist_euclidean, dist_euclidean_nondim, MechanicsMetric, MetricSpec};
use vpid::noise::{covariance, sample_noise};
use vpid::sensitivity::{linearize, monte_carlo_cloud, CloudReport, CloudSettings, Execution, SizeHistory};
use vpid::HardeningParams;

use crate::config::RunConfig;
use crate::error::{output_error, CliError};
use crate::files::{read_data, read_params, write_data, write_pairs, write_params};

fn prepare_output(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    Ok(dir)
}

fn model(cfg: &RunConfig) -> ForwardModel {
    ForwardModel::new(cfg.truth_material(), cfg.program.clone())
}

/// Loads a data file and checks it against the configured program.
fn load_data(cfg: &RunConfig, path: &Path) -> Result<ExperimentData, CliError> {
    let (strains, stresses) = read_data(path)?;
    let data = ExperimentData::new(strains, stresses, DataSource::File(path.display().to_string()))?;
    data.ensure_identifiable()?;
    let expected = cfg.program.shear_values();
    if data.len() != expected.len() {
        return Err(CliError::Data(format!(
            "{}: {} rows but the configured program has {} points",
            path.display(),
            data.len(),
            expected.len()
        )));
    }
    let tol = 1e-9 * cfg.program.max_shear();
    if let Some(i) = data.strains().iter().zip(expected).position(|(a, b)| (a - b).abs() > tol) {
        return Err(CliError::Data(format!(
            "{}: strain on line {} is {} but the program prescribes {}",
            path.display(),
            i + 2,
            data.strains()[i],
            expected[i]
        )));
    }
    Ok(data)
}

fn scheme_for(cfg: &RunConfig, kind: WeightingKind, exp: &[f64]) -> Result<WeightingScheme, CliError> {
    if kind == WeightingKind::Identity {
        return Ok(WeightingScheme::identity(exp.len()));
    }
    if cfg.noise.is_silent() {
        return Err(CliError::Config(format!(
            "weighting: {} needs a noise model with non-zero variance",
            kind.label()
        )));
    }
    let cov = covariance(&cfg.noise, exp).map_err(|e| CliError::Config(format!("noise: {e}")))?;
    Ok(WeightingScheme::from_covariance(kind, &cov)?)
}

pub fn simulate(cfg: &RunConfig, with_noise: bool) -> Result<Vec<String>, CliError> {
    let dir = prepare_output(cfg)?;
    let data = model(cfg).synthesize(&cfg.truth)?;
    let mut stress = data.observations().to_vec();
    if with_noise {
        let noise = sample_noise(&cfg.noise, &stress, cfg.master_seed)?;
        stress.iter_mut().zip(noise).for_each(|(s, n)| *s += n);
    }
    let path = dir.join("simulated.csv");
    write_data(&path, data.strains(), &stress)?;
    Ok(vec![format!("wrote {} ({} rows{})", path.display(), stress.len(), if with_noise { ", noisy" } else { "" })])
}

fn fit(cfg: &RunConfig, data: &ExperimentData, scheme: &WeightingScheme, start: &HardeningParams) -> Result<FitResult, CliError> {
    let mut opts = FitOptions::default();
    opts.lm.max_iterations = cfg.max_iterations;
    Ok(levenberg_marquardt(start, data, scheme, &model(cfg), &opts)?)
}

pub fn identify(cfg: &RunConfig, data_path: &Path) -> Result<Vec<String>, CliError> {
    let data = load_data(cfg, data_path)?;
    let kind = cfg.weighting.unwrap_or(WeightingKind::FullInverseCov);
    let scheme = scheme_for(cfg, kind, data.observations())?;
    let dir = prepare_output(cfg)?;
    let result = fit(cfg, &data, &scheme, &cfg.start)?;

    write_params(&dir.join("fit.csv"), &result.params)?;
    write_pairs(
        &dir.join("fit_summary.csv"),
        &[
            ("weighting".into(), kind.label().into()),
            ("phi".into(), format!("{:e}", result.phi)),
            ("iterations".into(), result.iterations.to_string()),
            ("converged".into(), result.converged.to_string()),
            ("termination".into(), format!("{:?}", result.termination)),
        ],
    )?;
    let log: Vec<(String, String)> =
        result.phi_history.iter().enumerate().map(|(i, p)| (i.to_string(), format!("{p:e}"))).collect();
    write_pairs(&dir.join("fit_log.csv"), &log)?;

    let mut lines: Vec<String> = HardeningParams::NAMES
        .iter()
        .zip(result.params.to_array())
        .map(|(n, v)| format!("{n} = {v:e}"))
        .collect();
    lines.push(format!("phi = {:e}", result.phi));
    lines.push(format!("iterations = {}", result.iterations));
    if !result.converged {
        return Err(CliError::NonConvergence(format!(
            "no convergence after {} iterations ({:?}); partial results in {}",
            result.iterations,
            result.termination,
            dir.display()
        )));
    }
    Ok(lines)
}

fn size_histories(cfg: &RunConfig) -> Result<Vec<SizeHistory>, CliError> {
    cfg.histories
        .iter()
        .map(|&h| {
            let metric = MechanicsMetric::new(benchmark_history(h)?, cfg.truth_material(), cfg.history_steps)?;
            Ok(SizeHistory { id: h as u32, metric })
        })
        .collect()
}

fn write_report(dir: &Path, report: &CloudReport) -> Result<(PathBuf, PathBuf), CliError> {
    let label = report.scheme.label();
    let cloud = dir.join(format!("cloud_{label}.csv"));
    let summary = dir.join(format!("summary_{label}.csv"));
    let f = File::create(&cloud).map_err(|e| output_error(&cloud, e))?;
    report.write_cloud_csv(BufWriter::new(f)).map_err(|e| output_error(&cloud, e))?;
    let f = File::create(&summary).map_err(|e| output_error(&summary, e))?;
    report.write_summary_csv(BufWriter::new(f)).map_err(|e| output_error(&summary, e))?;
    Ok((cloud, summary))
}

pub fn montecarlo(cfg: &RunConfig, data_path: Option<&Path>) -> Result<Vec<String>, CliError> {
    let data = match data_path {
        Some(p) => load_data(cfg, p)?,
        None => model(cfg).synthesize(&cfg.truth)?,
    };
    let exp = data.observations();
    let kinds: Vec<WeightingKind> = match cfg.weighting {
        Some(k) => vec![k],
        None => WeightingKind::STRATEGIES.to_vec(),
    };
    // Without noise every scheme returns p*; the weights are irrelevant and
    // the inverse covariance does not exist.
    let silent = cfg.noise.is_silent();
    let schemes = kinds
        .iter()
        .map(|&k| if silent { Ok(WeightingScheme::identity(exp.len())) } else { scheme_for(cfg, k, exp) })
        .collect::<Result<Vec<_>, _>>()?;
    let histories = size_histories(cfg)?;
    let dir = prepare_output(cfg)?;
    let start = if data_path.is_some() { cfg.start } else { cfg.truth };
    let settings =
        CloudSettings { n_instances: cfg.n_instances, master_seed: cfg.master_seed, execution: Execution::Parallel };

    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for (kind, scheme) in kinds.iter().zip(&schemes) {
        let base = fit(cfg, &data, scheme, &start)?;
        if !base.converged {
            return Err(CliError::NonConvergence(format!(
                "base fit for {} did not converge ({:?})",
                kind.label(),
                base.termination
            )));
        }
        let lin = linearize(&base, &model(cfg))?;
        let mut report = monte_carlo_cloud(&lin, scheme, &cfg.noise, exp, &settings, &histories)?;
        report.scheme = *kind;
        let (cloud, summary) = write_report(dir, &report)?;
        lines.push(format!("wrote {} and {}", cloud.display(), summary.display()));
        rows.push(report);
    }

    let table = dir.join("comparison.csv");
    let mut w = csv::Writer::from_path(&table).map_err(|e| output_error(&table, e))?;
    let mut header = vec!["scheme".to_string()];
    header.extend(cfg.histories.iter().map(|h| format!("size_history_{h}")));
    header.extend(HardeningParams::NAMES.iter().map(|n| format!("var_{n}")));
    w.write_record(&header).map_err(|e| output_error(&table, e))?;
    for r in &rows {
        let mut rec = vec![r.scheme.label().to_string()];
        rec.extend(r.size_per_history.values().map(|s| format!("{s:e}")));
        rec.extend(r.variances.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec).map_err(|e| output_error(&table, e))?;
        let sizes: Vec<String> = r.size_per_history.iter().map(|(h, s)| format!("history {h}: {s:.4} MPa")).collect();
        lines.push(format!("size {:<13} {}", r.scheme.label(), sizes.join(", ")));
    }
    w.flush().map_err(|e| output_error(&table, e))?;
    lines.push(format!("wrote {}", table.display()));
    Ok(lines)
}

pub fn distance(cfg: &RunConfig, p1_path: &Path, p2_path: &Path) -> Result<Vec<String>, CliError> {
    let p1 = read_params(p1_path)?;
    let p2 = read_params(p2_path)?;
    let mut lines = vec![
        format!("euclidean = {:e}", dist_euclidean(&p1, &p2)),
        format!("euclidean_nondim = {:e}", dist_euclidean_nondim(&p1, &p2, &cfg.truth)?),
    ];
    let samples = [p1, p2, cfg.truth];
    let mut reports = Vec::new();
    for &h in &cfg.histories {
        let metric = MechanicsMetric::new(benchmark_history(h)?, cfg.truth_material(), cfg.history_steps)?;
        lines.push(format!("mechanics_history_{h} = {:e}", metric.distance(&p1, &p2)?));
        reports.push((h, check_metric_axioms(&MetricSpec::Mechanics(metric), &samples)?));
    }
    for (h, rep) in reports {
        lines.push(format!("[axioms history {h}] samples: p1, p2, truth"));
        lines.extend(rep.to_string().lines().map(str::to_string));
    }
    Ok(lines)
}
