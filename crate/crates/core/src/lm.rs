//! Levenberg–Marquardt for small dense least-squares problems.
//!
//! Minimizes `Φ(x) = ‖r(x)‖²`. Each trial step solves the damped problem
//! `min ‖J δ + r‖² + λ ‖D δ‖²` by QR of the stacked matrix `[J; √λ D]`, with
//! Marquardt scaling `D = diag(‖J_j‖)` kept as a running maximum. The damping
//! is divided by `factor` after an accepted step and multiplied by it after a
//! rejected one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A residual function and its Jacobian.
pub trait LeastSquaresProblem {
    fn residuals(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Maps a trial point back into the admissible set.
    fn project(&self, _x: &mut DVector<f64>) {}
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub initial_lambda: f64,
    pub lambda_factor: f64,
    /// Bound on `‖Jᵀ r‖∞`.
    pub tol_gradient: f64,
    /// Bound on the relative decrease of `Φ` over one accepted step.
    pub tol_relative_decrease: f64,
    pub max_iterations: usize,
    /// Damping above which no descent step is considered achievable.
    pub max_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            initial_lambda: 1e-3,
            lambda_factor: 10.0,
            tol_gradient: 1e-8,
            tol_relative_decrease: 1e-12,
            max_iterations: 200,
            max_lambda: 1e16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// `‖Jᵀ r‖∞ < tol_gradient`, or the residual vanished.
    Gradient,
    /// Relative decrease of an accepted step below tolerance.
    RelativeDecrease,
    /// Every trial step was rejected up to `max_lambda`: no decrease is
    /// achievable at working precision.
    NoFurtherDecrease,
    MaxIterations,
}

impl Termination {
    pub fn converged(self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Iterate {
    pub iteration: usize,
    pub phi: f64,
    pub lambda: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct LmReport {
    pub x: DVector<f64>,
    pub residuals: DVector<f64>,
    pub phi: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// `Φ` after every accepted step, starting with the initial point.
    pub log: Vec<Iterate>,
}

impl LmReport {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }
}

fn sum_sq(r: &DVector<f64>) -> f64 {
    r.dot(r)
}

pub fn minimize<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    start: DVector<f64>,
    opts: &LmOptions,
) -> Result<LmReport> {
    let n = start.len();
    let mut x = start;
    problem.project(&mut x);
    let mut r = problem.residuals(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResidual);
    }
    let mut phi = sum_sq(&r);
    let mut lambda = opts.initial_lambda;
    let mut scale = DVector::<f64>::zeros(n);
    let mut log = Vec::new();

    for iteration in 0..opts.max_iterations {
        let jac = problem.jacobian(&x)?;
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteJacobian);
        }
        let gradient = jac.tr_mul(&r);
        let gradient_norm = gradient.amax();
        log.push(Iterate { iteration, phi, lambda, gradient_norm });
        if phi == 0.0 || gradient_norm < opts.tol_gradient {
            return Ok(report(x, r, phi, iteration, Termination::Gradient, log));
        }
        for j in 0..n {
            let col = jac.column(j).norm();
            scale[j] = scale[j].max(col).max(f64::MIN_POSITIVE.sqrt());
        }

        loop {
            let delta = damped_step(&jac, &r, &scale, lambda);
            let mut trial = &x + &delta;
            problem.project(&mut trial);
            let accepted = match problem.residuals(&trial) {
                Ok(rt) if rt.iter().all(|v| v.is_finite()) => {
                    let phi_t = sum_sq(&rt);
                    (phi_t < phi).then_some((rt, phi_t))
                }
                _ => None,
            };
            match accepted {
                Some((rt, phi_t)) => {
                    let rel = (phi - phi_t) / phi;
                    x = trial;
                    r = rt;
                    phi = phi_t;
                    lambda = (lambda / opts.lambda_factor).max(1e-300);
                    if rel < opts.tol_relative_decrease {
                        log.push(Iterate { iteration: iteration + 1, phi, lambda, gradient_norm: f64::NAN });
                        return Ok(report(x, r, phi, iteration + 1, Termination::RelativeDecrease, log));
                    }
                    break;
                }
                None => {
                    lambda *= opts.lambda_factor;
                    if lambda > opts.max_lambda {
                        return Ok(report(x, r, phi, iteration, Termination::NoFurtherDecrease, log));
                    }
                }
            }
        }
    }
    let iterations = opts.max_iterations;
    Ok(report(x, r, phi, iterations, Termination::MaxIterations, log))
}

fn report(
    x: DVector<f64>,
    residuals: DVector<f64>,
    phi: f64,
    iterations: usize,
    termination: Termination,
    log: Vec<Iterate>,
) -> LmReport {
    LmReport { x, residuals, phi, iterations, termination, log }
}

/// Solves `min ‖J δ + r‖² + λ ‖D δ‖²` through QR of the stacked system.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, scale: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let (m, n) = jac.shape();
    let mut a = DMatrix::<f64>::zeros(m + n, n);
    a.view_mut((0, 0), (m, n)).copy_from(jac);
    let sl = lambda.sqrt();
    for j in 0..n {
        a[(m + j, j)] = sl * scale[j];
    }
    let mut b = DVector::<f64>::zeros(m + n);
    b.rows_mut(0, m).copy_from(&(-r));
    let qr = a.qr();
    let qtb = qr.q().tr_mul(&b);
    let rmat = qr.r();
    rmat.solve_upper_triangular(&qtb)
        .unwrap_or_else(|| DVector::zeros(n))
}
