//! Linearized re-identification under noisy data and the Monte Carlo
//! parameter cloud.
//!
//! Near the optimum `p*` the response is replaced by
//! `Mod(p*) + J (p − p*)`, which turns every noisy re-identification into a
//! weighted linear least-squares problem with a closed-form solution. The
//! gain `(JᵀWJ)⁻¹JᵀW` is computed once and reused across instances.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::constitutive::HardeningParams;
use crate::error::{Error, Result};
use crate::identification::{
    levenberg_marquardt, DataSource, ExperimentData, FitOptions, FitResult, ForwardModel, WeightingKind,
    WeightingScheme,
};
use crate::metric::{MechanicsMetric, StressHistory};
use crate::noise::{rng_for, sample_noise_with, NoiseModel};

/// Condition number of the equilibrated normal matrix above which the
/// parameters count as unidentifiable.
pub const MAX_CONDITION: f64 = 1e12;

/// Default number of Monte Carlo instances.
pub const DEFAULT_INSTANCES: usize = 10_000;

/// Affine model `Mod(p*) + J (p − p*)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedModel {
    pub p_star: HardeningParams,
    pub mod_star: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

impl LinearizedModel {
    pub fn new(p_star: HardeningParams, mod_star: DVector<f64>, jacobian: DMatrix<f64>) -> Result<Self> {
        if jacobian.ncols() != HardeningParams::COUNT {
            return Err(Error::DimensionMismatch { expected: HardeningParams::COUNT, found: jacobian.ncols() });
        }
        if jacobian.nrows() != mod_star.len() {
            return Err(Error::DimensionMismatch { expected: mod_star.len(), found: jacobian.nrows() });
        }
        if jacobian.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteJacobian);
        }
        if mod_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResidual);
        }
        Ok(LinearizedModel { p_star, mod_star, jacobian })
    }

    /// Linearization about `p_star` with a fresh finite-difference Jacobian.
    pub fn at(p_star: &HardeningParams, model: &ForwardModel, rel_step: f64) -> Result<Self> {
        let mod_star = model.response(p_star)?;
        let jacobian = model.jacobian_fd(p_star, rel_step)?;
        Self::new(*p_star, mod_star, jacobian)
    }

    pub fn observations(&self) -> usize {
        self.mod_star.len()
    }

    pub fn response(&self, p: &HardeningParams) -> DVector<f64> {
        let d = DVector::from_iterator(
            HardeningParams::COUNT,
            p.to_array().iter().zip(self.p_star.to_array()).map(|(a, b)| a - b),
        );
        &self.mod_star + &self.jacobian * d
    }
}

/// Packages a converged fit for closed-form re-identification.
pub fn linearize(fit: &FitResult, model: &ForwardModel) -> Result<LinearizedModel> {
    if !fit.converged {
        return Err(Error::InvalidParameter(format!(
            "cannot linearize about an unconverged fit ({:?})",
            fit.termination
        )));
    }
    let mod_star = model.response(&fit.params)?;
    LinearizedModel::new(fit.params, mod_star, fit.jacobian.clone())
}

/// Precomputed gain `G = (JᵀWJ)⁻¹JᵀW` of a weighted linear least-squares
/// problem in any number of unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormSolver {
    gain: DMatrix<f64>,
    condition: f64,
}

impl ClosedFormSolver {
    pub fn new(jacobian: &DMatrix<f64>, scheme: &WeightingScheme) -> Result<Self> {
        let n = jacobian.ncols();
        let wj = scheme.apply_matrix(jacobian)?;
        let normal = jacobian.tr_mul(&wj);
        let diag = normal.diagonal();
        if diag.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::SingularNormalMatrix(f64::INFINITY));
        }
        // Jacobi equilibration, so the condition estimate ignores parameter units.
        let d = diag.map(|v| 1.0 / v.sqrt());
        let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * normal[(i, j)] * d[j]);
        let eig = SymmetricEigen::new(scaled.clone()).eigenvalues;
        let hi = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lo = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularNormalMatrix(condition));
        }
        let mut rhs = wj.transpose();
        for (i, mut row) in rhs.row_iter_mut().enumerate() {
            row *= d[i];
        }
        let x = scaled
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularNormalMatrix(condition))?;
        let mut gain = x;
        for (i, mut row) in gain.row_iter_mut().enumerate() {
            row *= d[i];
        }
        Ok(ClosedFormSolver { gain, condition })
    }

    /// Condition number of the equilibrated normal matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// `p* + G r`, which equals `G (r + J p*)` because `G J = I`.
    pub fn solve(&self, p_star: &DVector<f64>, offset: &DVector<f64>) -> Result<DVector<f64>> {
        if offset.len() != self.gain.ncols() {
            return Err(Error::DimensionMismatch { expected: self.gain.ncols(), found: offset.len() });
        }
        Ok(p_star + &self.gain * offset)
    }
}

/// Closed-form re-identification for many noise realizations of one setup.
#[derive(Clone, Debug)]
pub struct Reidentifier {
    solver: ClosedFormSolver,
    p_star: DVector<f64>,
    base: DVector<f64>,
}

impl Reidentifier {
    pub fn new(lin: &LinearizedModel, scheme: &WeightingScheme, exp: &[f64]) -> Result<Self> {
        if exp.len() != lin.observations() {
            return Err(Error::DimensionMismatch { expected: lin.observations(), found: exp.len() });
        }
        let solver = ClosedFormSolver::new(&lin.jacobian, scheme)?;
        let base = DVector::from_column_slice(exp) - &lin.mod_star;
        Ok(Reidentifier { solver, p_star: DVector::from_column_slice(&lin.p_star.to_array()), base })
    }

    pub fn solver(&self) -> &ClosedFormSolver {
        &self.solver
    }

    /// Minimizer of the linearized `Φ` for data `Exp + noise`. The result is
    /// not projected onto non-negative values.
    pub fn solve(&self, noise: &[f64]) -> Result<HardeningParams> {
        if noise.len() != self.base.len() {
            return Err(Error::DimensionMismatch { expected: self.base.len(), found: noise.len() });
        }
        let offset = &self.base + DVector::from_column_slice(noise);
        let p = self.solver.solve(&self.p_star, &offset)?;
        Ok(HardeningParams::from_slice_unchecked(p.as_slice()))
    }
}

/// `(JᵀWJ)⁻¹JᵀW (Exp + Noise − Mod(p*) + J p*)`
pub fn reidentify_linear(
    lin: &LinearizedModel,
    scheme: &WeightingScheme,
    exp: &[f64],
    noise: &[f64],
) -> Result<HardeningParams> {
    Reidentifier::new(lin, scheme, exp)?.solve(noise)
}

/// Full nonlinear re-identification of noisy data by Levenberg–Marquardt.
/// Much slower than [`reidentify_linear`]; meant for noise levels where the
/// linearization is no longer trustworthy.
pub fn reidentify_nonlinear(
    model: &ForwardModel,
    scheme: &WeightingScheme,
    exp: &[f64],
    noise: &[f64],
    start: &HardeningParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    if noise.len() != exp.len() {
        return Err(Error::DimensionMismatch { expected: exp.len(), found: noise.len() });
    }
    let noisy = exp.iter().zip(noise).map(|(e, n)| e + n).collect();
    let data = ExperimentData::new(model.program.shear_values().to_vec(), noisy, DataSource::Synthetic)?;
    levenberg_marquardt(start, &data, scheme, model, opts)
}

/// Variance of `p_i / p*_i` over the cloud, divisor `n`.
pub fn normalized_variances(cloud: &[HardeningParams], p_star: &HardeningParams) -> Result<[f64; 6]> {
    let reference = p_star.to_array();
    if let Some(index) = reference.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroReferenceParameter { index });
    }
    if cloud.is_empty() {
        return Err(Error::InsufficientData { found: 0, required: 1 });
    }
    let n = cloud.len() as f64;
    let mut mean = [0.0; 6];
    for p in cloud {
        for (m, (v, r)) in mean.iter_mut().zip(p.to_array().iter().zip(reference)) {
            *m += v / r;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 6];
    for p in cloud {
        for i in 0..6 {
            let x = p.to_array()[i] / reference[i] - mean[i];
            var[i] += x * x;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    Ok(var)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudSettings {
    pub n_instances: usize,
    pub master_seed: u64,
    pub execution: Execution,
}

impl Default for CloudSettings {
    fn default() -> Self {
        CloudSettings { n_instances: DEFAULT_INSTANCES, master_seed: 0, execution: Execution::Parallel }
    }
}

/// A deformation history that the cloud size is measured on.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeHistory {
    pub id: u32,
    pub metric: MechanicsMetric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CloudReport {
    pub p_star: HardeningParams,
    pub cloud: Vec<HardeningParams>,
    /// Whether each member has all components non-negative.
    pub admissible: Vec<bool>,
    /// Mechanics distance of each member from `p*`, per history.
    pub distances: BTreeMap<u32, Vec<f64>>,
    /// Mean distance from `p*`, MPa.
    pub size_per_history: BTreeMap<u32, f64>,
    pub variances: [f64; 6],
    pub scheme: WeightingKind,
    pub seed: u64,
}

impl CloudReport {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn size(&self, history: u32) -> Option<f64> {
        self.size_per_history.get(&history).copied()
    }

    /// One row per member: index, the six parameters, the admissibility flag
    /// and the distance for every history.
    pub fn write_cloud_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "instance")?;
        for name in HardeningParams::NAMES {
            write!(w, ",{name}")?;
        }
        write!(w, ",admissible")?;
        for id in self.distances.keys() {
            write!(w, ",dist_history_{id}")?;
        }
        writeln!(w)?;
        for (j, p) in self.cloud.iter().enumerate() {
            write!(w, "{j}")?;
            for v in p.to_array() {
                write!(w, ",{v:e}")?;
            }
            write!(w, ",{}", self.admissible[j])?;
            for d in self.distances.values() {
                write!(w, ",{:e}", d[j])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// `key,value` rows: scheme, seed, instances, sizes and variances.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "key,value")?;
        writeln!(w, "scheme,{}", self.scheme.label())?;
        writeln!(w, "seed,{}", self.seed)?;
        writeln!(w, "instances,{}", self.cloud.len())?;
        writeln!(w, "inadmissible,{}", self.admissible.iter().filter(|a| !**a).count())?;
        for (id, s) in &self.size_per_history {
            writeln!(w, "size_history_{id},{s:e}")?;
        }
        for (name, v) in HardeningParams::NAMES.iter().zip(self.variances) {
            writeln!(w, "var_{name},{v:e}")?;
        }
        Ok(())
    }
}

fn map_indexed<T, F>(n: usize, execution: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match execution {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Draws `n_instances` noise realizations (instance `j` uses stream `j` of
/// the master seed), re-identifies each in closed form and measures the
/// cloud on every history. Parallel and sequential runs agree bit for bit.
pub fn monte_carlo_cloud(
    lin: &LinearizedModel,
    scheme: &WeightingScheme,
    noise_model: &NoiseModel,
    exp: &[f64],
    settings: &CloudSettings,
    histories: &[SizeHistory],
) -> Result<CloudReport> {
    if settings.n_instances == 0 {
        return Err(Error::InvalidParameter("at least one Monte Carlo instance is required".into()));
    }
    noise_model.validate()?;
    let solver = Reidentifier::new(lin, scheme, exp)?;
    let n = settings.n_instances;
    let seed = settings.master_seed;

    let cloud = map_indexed(n, settings.execution, |j| {
        let noise = sample_noise_with(noise_model, exp, &mut rng_for(seed, j as u64))?;
        solver.solve(&noise)
    })?;
    let admissible = cloud.iter().map(HardeningParams::is_admissible).collect();

    let mut distances = BTreeMap::new();
    let mut size_per_history = BTreeMap::new();
    for h in histories {
        let reference: StressHistory = h.metric.response(&lin.p_star)?;
        let d = map_indexed(n, settings.execution, |j| {
            if cloud[j] == lin.p_star {
                return Ok(0.0);
            }
            Ok(h.metric.response(&cloud[j])?.max_distance(&reference))
        })?;
        let size = d.iter().sum::<f64>() / n as f64;
        size_per_history.insert(h.id, size);
        distances.insert(h.id, d);
    }

    Ok(CloudReport {
        p_star: lin.p_star,
        variances: normalized_variances(&cloud, &lin.p_star)?,
        cloud,
        admissible,
        distances,
        size_per_history,
        scheme: scheme.kind(),
        seed,
    })
}
