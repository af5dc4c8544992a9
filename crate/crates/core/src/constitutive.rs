//! Finite-strain viscoplasticity with a nested multiplicative split.
//!
//! Hyperelastic stress response, two Armstrong–Frederick-type backstresses,
//! isotropic hardening with saturation and a Perzyna flow rule. All energies
//! are stored per unit reference volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor2;

const SQRT_2_3: f64 = 0.816_496_580_927_726;

/// Allowed departure of `det Ci`, `det C1i`, `det C2i` from one.
pub const UNIMODULAR_TOL: f64 = 1e-10;

/// Hardening parameters in the fixed order `(γ, β, c₁, c₂, ϰ₁, ϰ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardeningParams {
    /// Isotropic hardening modulus, MPa.
    pub gamma: f64,
    /// Saturation of isotropic hardening.
    pub beta: f64,
    /// First kinematic hardening modulus, MPa.
    pub c1: f64,
    /// Second kinematic hardening modulus, MPa.
    pub c2: f64,
    /// Saturation of the first backstress, 1/MPa.
    pub kappa1: f64,
    /// Saturation of the second backstress, 1/MPa.
    pub kappa2: f64,
}

impl HardeningParams {
    pub const COUNT: usize = 6;
    pub const NAMES: [&'static str; 6] = ["gamma", "beta", "c1", "c2", "kappa1", "kappa2"];

    pub fn new(gamma: f64, beta: f64, c1: f64, c2: f64, kappa1: f64, kappa2: f64) -> Result<Self> {
        Self::from_array([gamma, beta, c1, c2, kappa1, kappa2])
    }

    /// Checked construction: every component must be finite and non-negative.
    pub fn from_array(values: [f64; 6]) -> Result<Self> {
        let p = Self::from_array_unchecked(values);
        p.validate()?;
        Ok(p)
    }

    /// Raw construction, used for linearized re-identifications that may
    /// leave the admissible cone.
    pub const fn from_array_unchecked(v: [f64; 6]) -> Self {
        HardeningParams {
            gamma: v[0],
            beta: v[1],
            c1: v[2],
            c2: v[3],
            kappa1: v[4],
            kappa2: v[5],
        }
    }

    pub fn from_slice_unchecked(v: &[f64]) -> Self {
        let mut a = [0.0; 6];
        a.copy_from_slice(&v[..6]);
        Self::from_array_unchecked(a)
    }

    pub const fn to_array(&self) -> [f64; 6] {
        [self.gamma, self.beta, self.c1, self.c2, self.kappa1, self.kappa2]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "hardening parameter {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self) -> bool {
        self.validate().is_ok()
    }

    /// Componentwise scaling.
    pub fn scaled(&self, factors: [f64; 6]) -> Self {
        let mut a = self.to_array();
        for (v, f) in a.iter_mut().zip(factors) {
            *v *= f;
        }
        Self::from_array_unchecked(a)
    }

    /// Values identified for 42CrMo4 with `W = Cov⁻¹`.
    pub const fn steel_full_inverse_cov() -> Self {
        Self::from_array_unchecked([435.22, 2.625, 1661.7, 24672.0, 0.003810, 0.004282])
    }

    /// Values identified for 42CrMo4 with `W = 1`.
    pub const fn steel_identity() -> Self {
        Self::from_array_unchecked([321.92, 2.003, 1488.4, 20512.0, 0.004087, 0.004526])
    }

    /// Values identified for 42CrMo4 with `W = diag(1/Cov_ii)`.
    pub const fn steel_diag_inverse_cov() -> Self {
        Self::from_array_unchecked([312.60, 1.913, 1505.5, 20687.0, 0.004089, 0.004516])
    }
}

/// Full material parameter record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Bulk modulus, MPa.
    pub k: f64,
    /// Shear modulus, MPa.
    pub mu: f64,
    /// Viscosity, s.
    pub eta: f64,
    /// Perzyna exponent.
    pub m: f64,
    /// Initial quasi-static yield stress, MPa.
    pub yield_stress: f64,
    /// Overstress normalizer, MPa.
    #[serde(default = "default_k0")]
    pub k0: f64,
    pub hardening: HardeningParams,
}

fn default_k0() -> f64 {
    1.0
}

impl MaterialParams {
    /// Pre-identified elastic and viscous constants of 42CrMo4 with the given
    /// hardening.
    pub const fn steel(hardening: HardeningParams) -> Self {
        MaterialParams {
            k: 135_600.0,
            mu: 52_000.0,
            eta: 5.0e5,
            m: 2.26,
            yield_stress: 335.0,
            k0: 1.0,
            hardening,
        }
    }

    pub fn with_hardening(&self, hardening: HardeningParams) -> Self {
        MaterialParams { hardening, ..*self }
    }

    /// Checks the elastic/viscous constants. Hardening admissibility is
    /// checked separately since raw cloud members are simulated too.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("mu", self.mu),
            ("eta", self.eta),
            ("yield_stress", self.yield_stress),
            ("k0", self.k0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.m.is_finite() && self.m >= 1.0) {
            return Err(Error::InvalidParameter(format!("m must be >= 1, got {}", self.m)));
        }
        Ok(())
    }
}

/// Internal variables advanced in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InternalState {
    pub ci: Tensor2,
    pub c1i: Tensor2,
    pub c2i: Tensor2,
    /// Accumulated inelastic arc length.
    pub s: f64,
    /// Dissipative part of `s`.
    pub sd: f64,
}

impl InternalState {
    /// Isotropic, undeformed and stress-free.
    pub const fn virgin() -> Self {
        InternalState {
            ci: Tensor2::identity(),
            c1i: Tensor2::identity(),
            c2i: Tensor2::identity(),
            s: 0.0,
            sd: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        for t in [&self.ci, &self.c1i, &self.c2i] {
            if !t.is_finite() || !t.is_positive_definite() {
                return Err(Error::NonPositiveDefinite);
            }
            if (t.det() - 1.0).abs() > UNIMODULAR_TOL {
                return Err(Error::NonPositiveDeterminant(t.det()));
            }
        }
        if !(self.s >= 0.0) {
            return Err(Error::InvalidParameter(format!("s must be >= 0, got {}", self.s)));
        }
        Ok(())
    }

    /// Largest `|det − 1|` over the three inelastic tensors.
    pub fn unimodularity_defect(&self) -> f64 {
        [&self.ci, &self.c1i, &self.c2i]
            .iter()
            .map(|t| (t.det() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for InternalState {
    fn default() -> Self {
        Self::virgin()
    }
}

/// Stress quantities at a material point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressOutput {
    pub second_pk: Tensor2,
    pub cauchy: Tensor2,
    pub backstress_total: Tensor2,
    pub r: f64,
    pub overstress_f: f64,
    pub driving_force: f64,
    pub lambda_i: f64,
}

fn ensure_spd(a: &Tensor2) -> Result<()> {
    let scale = a.frobenius_norm();
    if !a.is_finite() || a.asymmetry() > 1e-10 * scale || !a.is_positive_definite() {
        return Err(Error::NonPositiveDefinite);
    }
    Ok(())
}

/// `ρ_R ψ_el(A) = (k/2)(ln √det A)² + (μ/2)(tr Ā − 3)`
pub fn elastic_energy(a: &Tensor2, params: &MaterialParams) -> Result<f64> {
    ensure_spd(a)?;
    let det = a.det();
    let ln_j = 0.5 * det.ln();
    Ok(0.5 * params.k * ln_j * ln_j + 0.5 * params.mu * (a.trace() / det.cbrt() - 3.0))
}

/// `ρ_R ψ_kin(A) = (c/4)(tr Ā − 3)`
pub fn kinematic_energy(a: &Tensor2, c: f64) -> Result<f64> {
    ensure_spd(a)?;
    Ok(0.25 * c * (a.trace() / a.det().cbrt() - 3.0))
}

/// `2 ∂/∂X [ (tr(X Y⁻¹)) (det(X Y⁻¹))^(-1/3) ] / 2`, i.e. the derivative of
/// `tr(overline(X Y⁻¹))` with respect to `X`:
/// `(det Y / det X)^(1/3) [Y⁻¹ − tr(X Y⁻¹)/3 · X⁻¹]`.
fn d_trace_unimodular(x_inv: &Tensor2, det_x: f64, y_inv: &Tensor2, det_y: f64, tr_xy: f64) -> Tensor2 {
    (*y_inv - *x_inv * (tr_xy / 3.0)) * (det_y / det_x).cbrt()
}

/// `T̃ = 2 ∂ψ_el(C Ci⁻¹)/∂C` at fixed `Ci`.
pub fn second_pk_stress(c: &Tensor2, state: &InternalState, params: &MaterialParams) -> Result<Tensor2> {
    let c_inv = c.inverse()?;
    let ci_inv = state.ci.inverse()?;
    Ok(second_pk_with_inverses(c, &c_inv, &state.ci, &ci_inv, params))
}

fn second_pk_with_inverses(
    c: &Tensor2,
    c_inv: &Tensor2,
    ci: &Tensor2,
    ci_inv: &Tensor2,
    params: &MaterialParams,
) -> Tensor2 {
    let det_c = c.det();
    let det_ci = ci.det();
    let ln_j = 0.5 * (det_c / det_ci).ln();
    let tr = c.trace_of_product(ci_inv);
    let iso = d_trace_unimodular(c_inv, det_c, ci_inv, det_ci, tr) * params.mu;
    (*c_inv * (params.k * ln_j) + iso).symmetric_part()
}

/// `X̃_a = 2 ∂ψ_kin_a(Ci C_ai⁻¹)/∂Ci` for one backstress with modulus `c`.
fn backstress_with_inverses(
    ci_inv: &Tensor2,
    det_ci: f64,
    ci: &Tensor2,
    cai: &Tensor2,
    c: f64,
) -> Result<Tensor2> {
    if c == 0.0 {
        return Ok(Tensor2::zero());
    }
    let cai_inv = cai.inverse()?;
    let tr = ci.trace_of_product(&cai_inv);
    Ok((d_trace_unimodular(ci_inv, det_ci, &cai_inv, cai.det(), tr) * (0.5 * c)).symmetric_part())
}

/// Returns `(X̃₁, X̃₂, X̃₁ + X̃₂)`.
pub fn backstresses(state: &InternalState, params: &MaterialParams) -> Result<(Tensor2, Tensor2, Tensor2)> {
    let ci_inv = state.ci.inverse()?;
    let det_ci = state.ci.det();
    let h = &params.hardening;
    let x1 = backstress_with_inverses(&ci_inv, det_ci, &state.ci, &state.c1i, h.c1)?;
    let x2 = backstress_with_inverses(&ci_inv, det_ci, &state.ci, &state.c2i, h.c2)?;
    Ok((x1, x2, x1 + x2))
}

/// `R = γ (s − s_d)`
pub fn isotropic_hardening(state: &InternalState, params: &MaterialParams) -> f64 {
    params.hardening.gamma * (state.s - state.sd)
}

/// Perzyna law `λ_i = (1/η) ⟨f/k₀⟩^m`.
pub fn perzyna_multiplier(f: f64, params: &MaterialParams) -> f64 {
    if f <= 0.0 {
        0.0
    } else {
        (f / params.k0).powf(params.m) / params.eta
    }
}

/// Deviatoric part of `C T̃ − Ci X̃`.
fn driving_tensor(c: &Tensor2, c_inv: &Tensor2, state: &InternalState, params: &MaterialParams) -> Result<Tensor2> {
    let ci_inv = state.ci.inverse()?;
    let det_ci = state.ci.det();
    let t = second_pk_with_inverses(c, c_inv, &state.ci, &ci_inv, params);
    let h = &params.hardening;
    let x = backstress_with_inverses(&ci_inv, det_ci, &state.ci, &state.c1i, h.c1)?
        + backstress_with_inverses(&ci_inv, det_ci, &state.ci, &state.c2i, h.c2)?;
    Ok((*c * t - state.ci * x).deviator())
}

fn yield_radius(state: &InternalState, params: &MaterialParams) -> f64 {
    SQRT_2_3 * (params.yield_stress + isotropic_hardening(state, params))
}

/// Returns `(f, 𝔉, λ_i)`.
pub fn overstress_and_multiplier(
    c: &Tensor2,
    state: &InternalState,
    params: &MaterialParams,
) -> Result<(f64, f64, f64)> {
    let c_inv = c.inverse()?;
    let driving = driving_tensor(c, &c_inv, state, params)?.frobenius_norm();
    let f = driving - yield_radius(state, params);
    Ok((f, driving, perzyna_multiplier(f, params)))
}

/// Push-forward `T = (det F)⁻¹ F T̃ Fᵀ`.
pub fn cauchy_stress(f: &Tensor2, state: &InternalState, params: &MaterialParams) -> Result<Tensor2> {
    let j = f.det();
    if !(j > 0.0) {
        return Err(Error::NonPositiveDeterminant(j));
    }
    let c = f.transpose() * *f;
    let t = second_pk_stress(&c, state, params)?;
    Ok((*f * t * f.transpose() * j.recip()).symmetric_part())
}

/// Every stress quantity at the given deformation gradient and state.
pub fn stress_output(f: &Tensor2, state: &InternalState, params: &MaterialParams) -> Result<StressOutput> {
    let j = f.det();
    if !(j > 0.0) {
        return Err(Error::NonPositiveDeterminant(j));
    }
    let c = f.transpose() * *f;
    let second_pk = second_pk_stress(&c, state, params)?;
    let cauchy = (*f * second_pk * f.transpose() * j.recip()).symmetric_part();
    let (_, _, backstress_total) = backstresses(state, params)?;
    let (overstress_f, driving_force, lambda_i) = overstress_and_multiplier(&c, state, params)?;
    Ok(StressOutput {
        second_pk,
        cauchy,
        backstress_total,
        r: isotropic_hardening(state, params),
        overstress_f,
        driving_force,
        lambda_i,
    })
}

/// One time step from `state` to the right Cauchy–Green tensor `c_new`.
///
/// The flow direction is frozen at the elastic trial state; the inelastic
/// increment `ξ = Δt λ_i` is found implicitly from the Perzyna law evaluated
/// at the updated state. Backstress tensors follow the implicit update
/// `C_ai ← overline(C_ai + ξ ϰ_a c_a Ci)`, and every inelastic tensor is
/// projected back onto `det = 1`.
pub fn step(state: &InternalState, c_new: &Tensor2, dt: f64, params: &MaterialParams) -> Result<InternalState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeGrid(format!("time step must be positive, got {dt}")));
    }
    let c_inv = c_new.inverse()?;
    let trial_dev = driving_tensor(c_new, &c_inv, state, params)?;
    let trial_norm = trial_dev.frobenius_norm();
    let f_trial = trial_norm - yield_radius(state, params);
    if !(f_trial > 0.0) {
        return Ok(*state);
    }
    let direction = (trial_dev * state.ci).symmetric_part() * (2.0 / trial_norm);
    solve_increment(state, c_new, &c_inv, dt, params, &direction, f_trial)
}

/// Solves the Perzyna consistency condition for the increment `ξ` along a
/// fixed flow direction.
fn solve_increment(
    state: &InternalState,
    c_new: &Tensor2,
    c_inv: &Tensor2,
    dt: f64,
    params: &MaterialParams,
    direction: &Tensor2,
    f_trial: f64,
) -> Result<InternalState> {
    let h = params.hardening;
    let direction = *direction;
    let update = |xi: f64| -> Option<InternalState> {
        let ci = (state.ci + direction * xi).unimodular().ok()?;
        let c1i = (state.c1i + ci * (xi * h.kappa1 * h.c1)).unimodular().ok()?;
        let c2i = (state.c2i + ci * (xi * h.kappa2 * h.c2)).unimodular().ok()?;
        let ds = SQRT_2_3 * xi;
        let s = state.s + ds;
        let sd = (state.sd + h.beta * ds * s) / (1.0 + h.beta * ds);
        Some(InternalState { ci, c1i, c2i, s, sd })
    };
    // h(ξ) = f(ξ) − k₀ (η ξ / Δt)^(1/m); decreasing in ξ, positive at 0.
    let residual = |xi: f64| -> Option<(f64, InternalState)> {
        let next = update(xi)?;
        let dev = driving_tensor(c_new, c_inv, &next, params).ok()?;
        let f = dev.frobenius_norm() - yield_radius(&next, params);
        let rate_term = params.k0 * (params.eta * xi / dt).powf(1.0 / params.m);
        let r = f - rate_term;
        r.is_finite().then_some((r, next))
    };

    let fail = |reason: &str| Error::StepFailure { time: f64::NAN, reason: reason.to_string() };

    // The residual may turn positive again for large ξ (the frozen direction
    // overshoots), so look below the explicit increment, halving. If nothing
    // there is negative the step is too large for a frozen direction and the
    // caller splits it.
    let explicit = dt / params.eta * (f_trial / params.k0).powf(params.m);
    let mut lo = 0.0;
    let mut r_lo = f_trial;
    let mut hi = explicit;
    let mut bracket = None;
    for _ in 0..200 {
        match residual(hi) {
            Some((r, s)) if r <= 0.0 => {
                bracket = Some((r, s));
                break;
            }
            _ => hi *= 0.5,
        }
    }
    let (mut r_hi, s_hi) = bracket.ok_or_else(|| fail("could not bracket the inelastic increment"))?;
    if r_hi == 0.0 {
        return finish(s_hi);
    }
    // Illinois variant of regula falsi.
    let mut side = 0i8;
    let tol_r = 1e-13 * f_trial.max(1.0);
    for _ in 0..300 {
        let mut xi = (lo * r_hi - hi * r_lo) / (r_hi - r_lo);
        if !(xi > lo && xi < hi) {
            xi = 0.5 * (lo + hi);
        }
        let (r, s) = residual(xi).ok_or_else(|| fail("state update failed inside bracket"))?;
        if r.abs() <= tol_r || (hi - lo) <= 4.0 * f64::EPSILON * hi {
            return finish(s);
        }
        if r > 0.0 {
            lo = xi;
            r_lo = r;
            if side == 1 {
                r_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = xi;
            r_hi = r;
            if side == -1 {
                r_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(fail("inelastic increment did not converge"))
}

fn finish(next: InternalState) -> Result<InternalState> {
    if next.unimodularity_defect() > UNIMODULAR_TOL {
        return Err(Error::StepFailure {
            time: f64::NAN,
            reason: format!("unimodular projection defect {:e}", next.unimodularity_defect()),
        });
    }
    Ok(next)
}

/// Evolves the internal state along a right Cauchy–Green path from `t0` to
/// `t1` with step `dt` (the last step is shortened to land on `t1`).
/// Returns the state at every grid time, starting with `state0` at `t0`.
pub fn evolve_state<P>(
    c_of_t: P,
    state0: &InternalState,
    params: &MaterialParams,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<(f64, InternalState)>>
where
    P: Fn(f64) -> Tensor2,
{
    if !(t1 > t0) {
        return Err(Error::InvalidTimeGrid(format!("t1 = {t1} must exceed t0 = {t0}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeGrid(format!("dt must be positive, got {dt}")));
    }
    let grid = uniform_grid(t0, t1, dt);
    let mut out = Vec::with_capacity(grid.len());
    let mut state = *state0;
    out.push((t0, state));
    for w in grid.windows(2) {
        let c_at = |t: f64| Ok(c_of_t(t));
        state = advance(&state, w[0], w[1], &c_of_t(w[1]), params, &c_at, 0)?;
        out.push((w[1], state));
    }
    Ok(out)
}

/// `t0, t0 + dt, …, t1`; the final interval may be shorter than `dt`.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();
    grid.push(t1);
    grid
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::StepFailure { reason, .. } => Error::StepFailure { time: t, reason },
        other => other,
    }
}

/// State and deformation at one grid time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialPoint {
    pub time: f64,
    pub deformation: Tensor2,
    pub state: InternalState,
}

impl MaterialPoint {
    pub fn cauchy(&self, params: &MaterialParams) -> Result<Tensor2> {
        cauchy_stress(&self.deformation, &self.state, params)
    }
}

/// Drives a virgin material point through a deformation-gradient history
/// sampled on `grid` (strictly increasing times).
pub fn simulate<D>(params: &MaterialParams, grid: &[f64], deformation: D) -> Result<Vec<MaterialPoint>>
where
    D: Fn(f64) -> Result<Tensor2>,
{
    if grid.is_empty() {
        return Err(Error::InvalidTimeGrid("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidTimeGrid("times must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut state = InternalState::virgin();
    out.push(MaterialPoint { time: grid[0], deformation: deformation(grid[0])?, state });
    for w in grid.windows(2) {
        let f = deformation(w[1])?;
        let c_at = |t: f64| deformation(t).map(|f| f.transpose() * f);
        state = advance(&state, w[0], w[1], &(f.transpose() * f), params, &c_at, 0)?;
        out.push(MaterialPoint { time: w[1], deformation: f, state });
    }
    Ok(out)
}

/// Halvings of a grid interval allowed when a step fails.
pub const MAX_STEP_SPLITS: u32 = 12;

/// One grid interval; on failure it is split in two through the midpoint
/// deformation, recursively. Intervals that succeed directly are untouched.
fn advance<C>(
    state: &InternalState,
    t0: f64,
    t1: f64,
    c1: &Tensor2,
    params: &MaterialParams,
    c_at: &C,
    depth: u32,
) -> Result<InternalState>
where
    C: Fn(f64) -> Result<Tensor2>,
{
    match step(state, c1, t1 - t0, params) {
        Err(Error::StepFailure { .. }) if depth < MAX_STEP_SPLITS => {
            let tm = 0.5 * (t0 + t1);
            let mid = advance(state, t0, tm, &c_at(tm)?, params, c_at, depth + 1)?;
            advance(&mid, tm, t1, c1, params, c_at, depth + 1)
        }
        other => other.map_err(|e| at_time(e, t1)),
    }
}
