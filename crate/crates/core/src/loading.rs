//! Strain-controlled loading programs.
//!
//! Two kinds: closed deformation-gradient cycles through four key-points
//! (used by the mechanics-based metric), and piecewise-linear simple shear
//! (thin-walled tube torsion, used for identification).

use crate::error::{Error, Result};
use crate::tensor::Tensor2;

/// Key-point stretch used by the benchmark cycles.
pub const BENCHMARK_STRETCH: f64 = 1.2;
/// Shear of the third key-point of the second benchmark cycle.
pub const BENCHMARK_SHEAR: f64 = 0.2;
/// Default physical duration of a benchmark cycle, s.
pub const DEFAULT_HISTORY_DURATION: f64 = 400.0;

/// `F = 1 + γ e₁⊗e₂`
pub fn simple_shear(gamma: f64) -> Tensor2 {
    let mut f = Tensor2::identity();
    f[(0, 1)] = gamma;
    f
}

/// Volume-preserving uniaxial stretch `λ` along `e_axis`.
pub fn isochoric_stretch(axis: usize, stretch: f64) -> Tensor2 {
    let lateral = stretch.sqrt().recip();
    let mut f = Tensor2::diag(lateral, lateral, lateral);
    f[(axis, axis)] = stretch;
    f
}

/// Piecewise-linear deformation-gradient program.
///
/// Key-point times are in units of a loading parameter; `time_scale`
/// converts them to seconds for the rate-dependent model.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationHistory {
    keypoints: Vec<(f64, Tensor2)>,
    project: bool,
    time_scale: f64,
}

impl DeformationHistory {
    pub fn new(keypoints: Vec<(f64, Tensor2)>, project: bool) -> Result<Self> {
        if keypoints.len() < 2 {
            return Err(Error::InvalidProgram("need at least two key-points".into()));
        }
        if keypoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidProgram("key-point times must increase strictly".into()));
        }
        if let Some((t, f)) = keypoints.iter().find(|(_, f)| !(f.det() > 0.0)) {
            return Err(Error::InvalidProgram(format!(
                "key-point at t = {t} has det F = {}",
                f.det()
            )));
        }
        Ok(DeformationHistory { keypoints, project, time_scale: 1.0 })
    }

    /// Sets the physical duration of the whole program, in seconds.
    pub fn with_duration(mut self, seconds: f64) -> Result<Self> {
        if !(seconds > 0.0 && seconds.is_finite()) {
            return Err(Error::InvalidProgram(format!("duration must be positive, got {seconds}")));
        }
        self.time_scale = seconds / (self.end() - self.start());
        Ok(self)
    }

    pub fn keypoints(&self) -> &[(f64, Tensor2)] {
        &self.keypoints
    }

    pub fn projects(&self) -> bool {
        self.project
    }

    pub fn start(&self) -> f64 {
        self.keypoints[0].0
    }

    pub fn end(&self) -> f64 {
        self.keypoints[self.keypoints.len() - 1].0
    }

    /// Seconds per unit of loading parameter.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn duration(&self) -> f64 {
        (self.end() - self.start()) * self.time_scale
    }

    /// `F(t)`: linear interpolation between bracketing key-points, then the
    /// unimodular part if projection is on.
    pub fn sample(&self, t: f64) -> Result<Tensor2> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let idx = self.keypoints.partition_point(|(tk, _)| *tk < t);
        let f = if idx == 0 {
            self.keypoints[0].1
        } else {
            let (ta, fa) = self.keypoints[idx - 1];
            let (tb, fb) = self.keypoints[idx];
            if t == tb {
                fb
            } else {
                let w = (t - ta) / (tb - ta);
                fa * (1.0 - w) + fb * w
            }
        };
        if self.project {
            f.unimodular()
        } else {
            Ok(f)
        }
    }

    /// `F` at physical time `seconds` measured from the program start.
    pub fn sample_physical(&self, seconds: f64) -> Result<Tensor2> {
        let t = (self.start() + seconds / self.time_scale).min(self.end());
        self.sample(t)
    }

    /// Uniform grid of `n_steps` intervals in physical time.
    pub fn physical_grid(&self, n_steps: usize) -> Vec<f64> {
        let total = self.duration();
        (0..=n_steps).map(|i| total * i as f64 / n_steps as f64).collect()
    }
}

/// Four-segment cycle `F₁ → F₂ → F₃ → F₄ → F₁` over `t ∈ [0, 4]` with
/// `F₁ = 1`, uniaxial stretch `λ` along `e₁` at `F₂` and along `e₂` at `F₄`.
/// The third key-point is `1` (history 1) or `1 + g e₁⊗e₂` (history 2).
pub fn cycle_history(which: u8, stretch: f64, shear: f64) -> Result<DeformationHistory> {
    let f3 = match which {
        1 => Tensor2::identity(),
        2 => simple_shear(shear),
        other => return Err(Error::InvalidProgram(format!("unknown benchmark history {other}"))),
    };
    let keypoints = vec![
        (0.0, Tensor2::identity()),
        (1.0, isochoric_stretch(0, stretch)),
        (2.0, f3),
        (3.0, isochoric_stretch(1, stretch)),
        (4.0, Tensor2::identity()),
    ];
    DeformationHistory::new(keypoints, true)?.with_duration(DEFAULT_HISTORY_DURATION)
}

/// One of the two benchmark cycles (`which ∈ {1, 2}`).
pub fn benchmark_history(which: u8) -> Result<DeformationHistory> {
    cycle_history(which, BENCHMARK_STRETCH, BENCHMARK_SHEAR)
}

/// Piecewise-linear simple-shear program sampled at evenly spaced points
/// along the shear path, traversed at constant shear rate.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainProgram {
    waypoints: Vec<f64>,
    max_shear: f64,
    duration: f64,
    shear_values: Vec<f64>,
    sample_times: Vec<f64>,
}

impl StrainProgram {
    pub fn new(max_shear: f64, reversals: &[f64], n_points: usize, duration: f64) -> Result<Self> {
        if reversals.is_empty() {
            return Err(Error::InvalidProgram("empty reversal list".into()));
        }
        if n_points < 2 {
            return Err(Error::InvalidProgram(format!("need at least 2 points, got {n_points}")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidProgram(format!("duration must be positive, got {duration}")));
        }
        if !(max_shear > 0.0) {
            return Err(Error::InvalidProgram(format!("max_shear must be positive, got {max_shear}")));
        }
        if let Some(g) = reversals.iter().find(|g| !(g.abs() <= max_shear)) {
            return Err(Error::InvalidProgram(format!("target {g} exceeds max shear {max_shear}")));
        }
        let mut waypoints = Vec::with_capacity(reversals.len() + 1);
        waypoints.push(0.0);
        for &g in reversals {
            if g != *waypoints.last().unwrap() {
                waypoints.push(g);
            }
        }
        if waypoints.len() < 2 {
            return Err(Error::InvalidProgram("program never leaves zero shear".into()));
        }
        let mut program = StrainProgram {
            waypoints,
            max_shear,
            duration,
            shear_values: Vec::new(),
            sample_times: Vec::new(),
        };
        let total = program.path_length();
        for i in 0..n_points {
            let t = duration * i as f64 / (n_points - 1) as f64;
            program.sample_times.push(t);
            program.shear_values.push(program.shear_at_arc(total * i as f64 / (n_points - 1) as f64));
        }
        Ok(program)
    }

    /// `0 → 0.2 → −0.1 → 0.25`, 100 points, 850 s (shear rate 1e-3 /s).
    pub fn default_torsion() -> Self {
        Self::new(0.3, &[0.2, -0.1, 0.25], 100, 850.0).expect("valid default program")
    }

    /// `0 → 0.3 → −0.3 → 0.3`, 1000 points, 1500 s (shear rate 1e-3 /s).
    /// Fully reversed cycles with dense sampling, closer to a recorded
    /// torsion curve than the default.
    pub fn symmetric_torsion() -> Self {
        Self::new(0.3, &[0.3, -0.3, 0.3], 1000, 1500.0).expect("valid symmetric program")
    }

    pub fn waypoints(&self) -> &[f64] {
        &self.waypoints
    }

    pub fn max_shear(&self) -> f64 {
        self.max_shear
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.shear_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shear_values.is_empty()
    }

    pub fn shear_values(&self) -> &[f64] {
        &self.shear_values
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    /// Sum of segment lengths.
    pub fn path_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    fn shear_at_arc(&self, arc: f64) -> f64 {
        let mut remaining = arc;
        for w in self.waypoints.windows(2) {
            let len = (w[1] - w[0]).abs();
            if remaining <= len {
                return w[0] + (w[1] - w[0]).signum() * remaining;
            }
            remaining -= len;
        }
        *self.waypoints.last().unwrap()
    }

    /// Shear at time `t ∈ [0, duration]`.
    pub fn shear_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.duration) {
            return Err(Error::OutOfRange { t, start: 0.0, end: self.duration });
        }
        Ok(self.shear_at_arc(self.path_length() * t / self.duration))
    }

    pub fn deformation_at(&self, t: f64) -> Result<Tensor2> {
        self.shear_at(t).map(simple_shear)
    }

    /// Times at which the path reverses direction.
    pub fn corner_times(&self) -> Vec<f64> {
        let total = self.path_length();
        let mut arc = 0.0;
        let mut out = Vec::new();
        for w in self.waypoints.windows(2).take(self.waypoints.len() - 2) {
            arc += (w[1] - w[0]).abs();
            out.push(self.duration * arc / total);
        }
        out
    }

    /// Integration grid: sample times and corners, each interval split into
    /// `substeps` equal steps. Also returns the grid index of every sample.
    pub fn integration_grid(&self, substeps: usize) -> (Vec<f64>, Vec<usize>) {
        let substeps = substeps.max(1);
        let mut knots: Vec<f64> = self.sample_times.clone();
        for c in self.corner_times() {
            let scale = self.duration * 1e-12;
            if !knots.iter().any(|k| (k - c).abs() <= scale) {
                knots.push(c);
            }
        }
        knots.sort_by(|a, b| a.total_cmp(b));
        let mut grid = vec![knots[0]];
        for w in knots.windows(2) {
            for j in 1..=substeps {
                grid.push(if j == substeps {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * j as f64 / substeps as f64
                });
            }
        }
        let indices = self
            .sample_times
            .iter()
            .map(|t| grid.iter().position(|g| g == t).expect("sample time on grid"))
            .collect();
        (grid, indices)
    }
}

/// Builds the program and the simple-shear deformation gradient at each
/// sample point.
pub fn torsion_program(
    max_shear: f64,
    reversals: &[f64],
    n_points: usize,
    duration: f64,
) -> Result<(StrainProgram, Vec<Tensor2>)> {
    let program = StrainProgram::new(max_shear, reversals, n_points, duration)?;
    let gradients = program.shear_values().iter().map(|&g| simple_shear(g)).collect();
    Ok((program, gradients))
}
