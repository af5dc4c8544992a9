//! Weighted least-squares identification of the hardening parameters.
//!
//! `Φ(p) = Residᵀ W Resid` with `Resid = Exp − Mod(p)`. The minimizer works
//! on the whitened residual `M Resid`, where `M` is any factor with
//! `MᵀM = W`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::{simulate, HardeningParams, MaterialParams};
use crate::error::{Error, Result};
use crate::lm::{self, LeastSquaresProblem, LmOptions, Termination};
use crate::loading::StrainProgram;

/// Default relative finite-difference step.
pub const FD_REL_STEP: f64 = 1e-6;
/// Absolute lower bound on the finite-difference step.
pub const FD_FLOOR: f64 = 1e-8;
/// Integration steps between consecutive observation times.
pub const DEFAULT_SUBSTEPS: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    File(String),
}

/// Observed shear stresses `Exp_1 … Exp_N` with their shear strains.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentData {
    strains: Vec<f64>,
    observations: Vec<f64>,
    source: DataSource,
}

impl ExperimentData {
    pub fn new(strains: Vec<f64>, observations: Vec<f64>, source: DataSource) -> Result<Self> {
        if strains.len() != observations.len() {
            return Err(Error::DimensionMismatch { expected: strains.len(), found: observations.len() });
        }
        if observations.len() < 2 {
            return Err(Error::InsufficientData { found: observations.len(), required: 1 });
        }
        if strains.iter().chain(&observations).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData("non-finite entry".into()));
        }
        Ok(ExperimentData { strains, observations, source })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn strains(&self) -> &[f64] {
        &self.strains
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn source(&self) -> &DataSource {
        &self.source
    }

    /// Identification needs more observations than parameters.
    pub fn ensure_identifiable(&self) -> Result<()> {
        if self.len() <= HardeningParams::COUNT {
            return Err(Error::InsufficientData { found: self.len(), required: HardeningParams::COUNT });
        }
        Ok(())
    }
}

/// The fixed part of the forward problem: elastic/viscous constants, the
/// torsion program and the integration resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardModel {
    pub fixed: MaterialParams,
    pub program: StrainProgram,
    pub substeps: usize,
}

impl ForwardModel {
    pub fn new(fixed: MaterialParams, program: StrainProgram) -> Self {
        ForwardModel { fixed, program, substeps: DEFAULT_SUBSTEPS }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    pub fn observations(&self) -> usize {
        self.program.len()
    }

    /// Cauchy shear stress `T₁₂` at every program sample point.
    pub fn response(&self, p: &HardeningParams) -> Result<DVector<f64>> {
        let params = self.fixed.with_hardening(*p);
        let (grid, samples) = self.program.integration_grid(self.substeps);
        let points = simulate(&params, &grid, |t| self.program.deformation_at(t))?;
        let mut out = DVector::zeros(samples.len());
        for (k, &i) in samples.iter().enumerate() {
            out[k] = points[i].cauchy(&params)?[(0, 1)];
        }
        Ok(out)
    }

    /// Noise-free synthetic experiment at `truth`.
    pub fn synthesize(&self, truth: &HardeningParams) -> Result<ExperimentData> {
        let stress = self.response(truth)?;
        ExperimentData::new(self.program.shear_values().to_vec(), stress.iter().copied().collect(), DataSource::Synthetic)
    }

    /// Central-difference Jacobian `∂Mod/∂p` (N×6), step
    /// `max(rel_step·|p_i|, FD_FLOOR)` per column.
    pub fn jacobian_fd(&self, p: &HardeningParams, rel_step: f64) -> Result<DMatrix<f64>> {
        if !(rel_step > 0.0) {
            return Err(Error::InvalidParameter(format!("rel_step must be positive, got {rel_step}")));
        }
        let base = p.to_array();
        let columns: Vec<Result<DVector<f64>>> = (0..HardeningParams::COUNT)
            .into_par_iter()
            .map(|i| {
                let h = fd_step(base[i], rel_step);
                let mut plus = base;
                let mut minus = base;
                plus[i] += h;
                minus[i] -= h;
                let up = self.response(&HardeningParams::from_array_unchecked(plus))?;
                let down = self.response(&HardeningParams::from_array_unchecked(minus))?;
                Ok((up - down) / (2.0 * h))
            })
            .collect();
        let mut jac = DMatrix::zeros(self.observations(), HardeningParams::COUNT);
        for (i, col) in columns.into_iter().enumerate() {
            jac.set_column(i, &col?);
        }
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteJacobian);
        }
        Ok(jac)
    }
}

pub fn fd_step(value: f64, rel_step: f64) -> f64 {
    (rel_step * value.abs()).max(FD_FLOOR)
}

/// `Mod(p)` for the given fixed parameters and program.
pub fn model_response(p: &HardeningParams, fixed: &MaterialParams, program: &StrainProgram) -> Result<DVector<f64>> {
    ForwardModel::new(*fixed, program.clone()).response(p)
}

pub fn jacobian_fd(
    p: &HardeningParams,
    fixed: &MaterialParams,
    program: &StrainProgram,
    rel_step: f64,
) -> Result<DMatrix<f64>> {
    ForwardModel::new(*fixed, program.clone()).jacobian_fd(p, rel_step)
}

/// How `W` was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingKind {
    /// `W = 1`
    Identity,
    /// `W_ij = δ_ij / Cov_ii`
    #[serde(alias = "diag_inv_cov")]
    DiagInverseCov,
    /// `W = Cov⁻¹`
    #[serde(alias = "full_inv_cov")]
    FullInverseCov,
    Custom,
}

impl WeightingKind {
    pub const STRATEGIES: [WeightingKind; 3] =
        [WeightingKind::FullInverseCov, WeightingKind::Identity, WeightingKind::DiagInverseCov];

    pub fn label(self) -> &'static str {
        match self {
            WeightingKind::Identity => "identity",
            WeightingKind::DiagInverseCov => "diag_inv_cov",
            WeightingKind::FullInverseCov => "full_inv_cov",
            WeightingKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(WeightingKind::Identity),
            "diag_inv_cov" | "diag_inverse_cov" => Some(WeightingKind::DiagInverseCov),
            "full_inv_cov" | "full_inverse_cov" => Some(WeightingKind::FullInverseCov),
            "custom" => Some(WeightingKind::Custom),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Weights {
    Identity(usize),
    Diagonal(DVector<f64>),
    Full(DMatrix<f64>),
}

/// Which factor `M` with `MᵀM = W` realizes `W^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Factorization {
    /// `Q Λ^{1/2} Qᵀ` from the symmetric eigendecomposition.
    #[default]
    SymmetricRoot,
    /// `Lᵀ` from `W = L Lᵀ`.
    Cholesky,
}

/// Symmetric positive definite weighting matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightingScheme {
    kind: WeightingKind,
    weights: Weights,
}

impl WeightingScheme {
    pub fn identity(n: usize) -> Self {
        WeightingScheme { kind: WeightingKind::Identity, weights: Weights::Identity(n) }
    }

    /// `W = diag(1/Cov_ii)`
    pub fn diag_inverse_cov(cov: &DMatrix<f64>) -> Result<Self> {
        let d = cov.diagonal();
        if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::FactorizationFailure("covariance diagonal must be positive".into()));
        }
        Ok(WeightingScheme { kind: WeightingKind::DiagInverseCov, weights: Weights::Diagonal(d.map(|v| 1.0 / v)) })
    }

    /// `W = Cov⁻¹`
    pub fn full_inverse_cov(cov: &DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::FactorizationFailure("covariance is not positive definite".into()))?;
        let inv = chol.inverse();
        let w = (&inv + inv.transpose()) * 0.5;
        Ok(WeightingScheme { kind: WeightingKind::FullInverseCov, weights: Weights::Full(w) })
    }

    /// Any symmetric positive definite matrix.
    pub fn custom(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::DimensionMismatch { expected: w.nrows(), found: w.ncols() });
        }
        let scale = w.amax().max(f64::MIN_POSITIVE);
        if (&w - w.transpose()).amax() > 1e-12 * scale {
            return Err(Error::FactorizationFailure("weighting matrix is not symmetric".into()));
        }
        if w.clone().cholesky().is_none() {
            return Err(Error::FactorizationFailure("weighting matrix is not positive definite".into()));
        }
        Ok(WeightingScheme { kind: WeightingKind::Custom, weights: Weights::Full(w) })
    }

    /// Builds one of the covariance-based strategies.
    pub fn from_covariance(kind: WeightingKind, cov: &DMatrix<f64>) -> Result<Self> {
        match kind {
            WeightingKind::Identity => Ok(Self::identity(cov.nrows())),
            WeightingKind::DiagInverseCov => Self::diag_inverse_cov(cov),
            WeightingKind::FullInverseCov => Self::full_inverse_cov(cov),
            WeightingKind::Custom => Self::custom(cov.clone()),
        }
    }

    pub fn kind(&self) -> WeightingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.weights {
            Weights::Identity(n) => *n,
            Weights::Diagonal(d) => d.len(),
            Weights::Full(w) => w.nrows(),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.weights {
            Weights::Identity(n) => DMatrix::identity(*n, *n),
            Weights::Diagonal(d) => DMatrix::from_diagonal(d),
            Weights::Full(w) => w.clone(),
        }
    }

    /// `W v`
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v.len())?;
        Ok(match &self.weights {
            Weights::Identity(_) => v.clone(),
            Weights::Diagonal(d) => v.component_mul(d),
            Weights::Full(w) => w * v,
        })
    }

    /// `W A` for a matrix with `dim` rows.
    pub fn apply_matrix(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(a.nrows())?;
        Ok(match &self.weights {
            Weights::Identity(_) => a.clone(),
            Weights::Diagonal(d) => {
                let mut out = a.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                out
            }
            Weights::Full(w) => w * a,
        })
    }

    /// A factor `M` with `MᵀM = W`.
    pub fn factor(&self, how: Factorization) -> Result<DMatrix<f64>> {
        match &self.weights {
            Weights::Identity(n) => Ok(DMatrix::identity(*n, *n)),
            Weights::Diagonal(d) => Ok(DMatrix::from_diagonal(&d.map(f64::sqrt))),
            Weights::Full(w) => match how {
                Factorization::SymmetricRoot => {
                    let eig = SymmetricEigen::new(w.clone());
                    if eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
                        return Err(Error::FactorizationFailure("weighting matrix has a non-positive eigenvalue".into()));
                    }
                    let root = eig.eigenvalues.map(f64::sqrt);
                    let q = &eig.eigenvectors;
                    Ok(q * DMatrix::from_diagonal(&root) * q.transpose())
                }
                Factorization::Cholesky => w
                    .clone()
                    .cholesky()
                    .map(|c| c.l().transpose())
                    .ok_or_else(|| Error::FactorizationFailure("weighting matrix is not positive definite".into())),
            },
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: n });
        }
        Ok(())
    }
}

/// `Φ = rᵀ W r`
pub fn error_functional(resid: &DVector<f64>, scheme: &WeightingScheme) -> Result<f64> {
    Ok(resid.dot(&scheme.apply(resid)?))
}

/// `W^{1/2} r` with the default factor.
pub fn whiten(resid: &DVector<f64>, scheme: &WeightingScheme) -> Result<DVector<f64>> {
    whiten_with(resid, scheme, Factorization::default())
}

pub fn whiten_with(resid: &DVector<f64>, scheme: &WeightingScheme, how: Factorization) -> Result<DVector<f64>> {
    scheme.check_dim(resid.len())?;
    Ok(scheme.factor(how)? * resid)
}

/// Options for the hardening fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    pub rel_step: f64,
    pub factorization: Factorization,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { lm: LmOptions::default(), rel_step: FD_REL_STEP, factorization: Factorization::default() }
    }
}

/// Outcome of an identification run.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: HardeningParams,
    pub phi: f64,
    pub iterations: usize,
    /// `∂Mod/∂p` at the optimum, N×6.
    pub jacobian: DMatrix<f64>,
    pub converged: bool,
    pub termination: Termination,
    /// `Φ` after each accepted step.
    pub phi_history: Vec<f64>,
}

struct WhitenedFit<'a> {
    model: &'a ForwardModel,
    exp: DVector<f64>,
    factor: DMatrix<f64>,
    rel_step: f64,
}

impl LeastSquaresProblem for WhitenedFit<'_> {
    fn residuals(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.model.response(&HardeningParams::from_slice_unchecked(x.as_slice()))?;
        Ok(&self.factor * (&self.exp - m))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let j = self.model.jacobian_fd(&HardeningParams::from_slice_unchecked(x.as_slice()), self.rel_step)?;
        Ok(-(&self.factor * j))
    }

    fn project(&self, x: &mut DVector<f64>) {
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
    }
}

/// Levenberg–Marquardt fit of the hardening parameters to `data`.
pub fn levenberg_marquardt(
    start: &HardeningParams,
    data: &ExperimentData,
    scheme: &WeightingScheme,
    model: &ForwardModel,
    opts: &FitOptions,
) -> Result<FitResult> {
    start.validate()?;
    data.ensure_identifiable()?;
    if data.len() != model.observations() {
        return Err(Error::DimensionMismatch { expected: model.observations(), found: data.len() });
    }
    if scheme.dim() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), found: scheme.dim() });
    }
    let problem = WhitenedFit {
        model,
        exp: DVector::from_column_slice(data.observations()),
        factor: scheme.factor(opts.factorization)?,
        rel_step: opts.rel_step,
    };
    let report = lm::minimize(&problem, DVector::from_column_slice(&start.to_array()), &opts.lm)?;
    let params = HardeningParams::from_slice_unchecked(report.x.as_slice());
    let jacobian = model.jacobian_fd(&params, opts.rel_step)?;
    Ok(FitResult {
        params,
        phi: report.phi,
        iterations: report.iterations,
        jacobian,
        converged: report.converged(),
        termination: report.termination,
        phi_history: report.log.iter().map(|it| it.phi).collect(),
    })
}
