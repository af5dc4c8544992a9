//! Distances between hardening parameter sets.
//!
//! Besides the plain and normalized Euclidean distances, the mechanics-based
//! distance drives the material through a prescribed deformation history with
//! both parameter sets and takes the largest Frobenius norm of the Cauchy
//! stress difference over the time grid.

use std::fmt;

use crate::constitutive::{simulate, HardeningParams, MaterialParams};
use crate::error::{Error, Result};
use crate::loading::DeformationHistory;
use crate::tensor::Tensor2;

/// Default number of time-grid intervals over a benchmark cycle. The largest
/// stress difference often sits in a narrow peak right after a corner of the
/// history, so the grid has to be fine for the maximum to settle.
pub const DEFAULT_HISTORY_STEPS: usize = 1600;
/// Default integration steps per time-grid interval.
pub const DEFAULT_METRIC_SUBSTEPS: usize = 1;

/// Slack used for the axiom checks.
pub const AXIOM_SLACK: f64 = 1e-9;

pub fn dist_euclidean(p1: &HardeningParams, p2: &HardeningParams) -> f64 {
    p1.to_array()
        .iter()
        .zip(p2.to_array())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance after dividing each component by a characteristic value.
pub fn dist_euclidean_nondim(p1: &HardeningParams, p2: &HardeningParams, reference: &HardeningParams) -> Result<f64> {
    let r = reference.to_array();
    if let Some(index) = r.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroReferenceParameter { index });
    }
    Ok(p1
        .to_array()
        .iter()
        .zip(p2.to_array())
        .zip(r)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Cauchy stress on the metric's time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StressHistory(pub Vec<Tensor2>);

impl StressHistory {
    /// `max_t ‖T_a(t) − T_b(t)‖`
    pub fn max_distance(&self, other: &StressHistory) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (*a - *b).frobenius_norm())
            .fold(0.0, f64::max)
    }
}

/// Mechanics-based metric for one deformation history.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanicsMetric {
    pub history: DeformationHistory,
    pub fixed: MaterialParams,
    /// Intervals of the grid the maximum is taken over.
    pub steps: usize,
    /// Integration steps per grid interval.
    pub substeps: usize,
}

impl MechanicsMetric {
    pub fn new(history: DeformationHistory, fixed: MaterialParams, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidTimeGrid("metric needs at least one step".into()));
        }
        fixed.validate()?;
        Ok(MechanicsMetric { history, fixed, steps, substeps: DEFAULT_METRIC_SUBSTEPS })
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    /// Cauchy stress at the grid times.
    pub fn response(&self, p: &HardeningParams) -> Result<StressHistory> {
        let params = self.fixed.with_hardening(*p);
        let grid = self.history.physical_grid(self.steps * self.substeps);
        let points = simulate(&params, &grid, |t| self.history.sample_physical(t))?;
        points
            .iter()
            .step_by(self.substeps)
            .map(|pt| pt.cauchy(&params))
            .collect::<Result<Vec<_>>>()
            .map(StressHistory)
    }

    pub fn distance(&self, p1: &HardeningParams, p2: &HardeningParams) -> Result<f64> {
        Ok(self.response(p1)?.max_distance(&self.response(p2)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    EuclideanNondim(HardeningParams),
    Mechanics(MechanicsMetric),
}

impl MetricSpec {
    pub fn distance(&self, p1: &HardeningParams, p2: &HardeningParams) -> Result<f64> {
        match self {
            MetricSpec::Euclidean => Ok(dist_euclidean(p1, p2)),
            MetricSpec::EuclideanNondim(r) => dist_euclidean_nondim(p1, p2, r),
            MetricSpec::Mechanics(m) => m.distance(p1, p2),
        }
    }
}

/// `dist^F(p1, p2)`; requires `MetricSpec::Mechanics`.
pub fn dist_mechanics(p1: &HardeningParams, p2: &HardeningParams, spec: &MetricSpec) -> Result<f64> {
    match spec {
        MetricSpec::Mechanics(m) => m.distance(p1, p2),
        _ => Err(Error::InvalidParameter("mechanics distance needs MetricSpec::Mechanics".into())),
    }
}

/// Findings of an axiom check over a sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    pub pairs: usize,
    pub triples: usize,
    /// `d(i, j)` for every ordered pair.
    pub distances: Vec<Vec<f64>>,
    pub negative: Vec<(usize, usize)>,
    pub asymmetric: Vec<(usize, usize)>,
    pub triangle: Vec<(usize, usize, usize)>,
    /// Distinct parameter sets at zero distance.
    pub separation: Vec<(usize, usize)>,
    /// Equal parameter sets at nonzero distance.
    pub identity: Vec<(usize, usize)>,
}

impl AxiomReport {
    /// Non-negativity, symmetry and the triangle inequality.
    pub fn metric_axioms_hold(&self) -> bool {
        self.negative.is_empty() && self.asymmetric.is_empty() && self.triangle.is_empty() && self.identity.is_empty()
    }

    pub fn separation_holds(&self) -> bool {
        self.separation.is_empty()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(f, "samples = {}", self.samples)?;
        writeln!(f, "pairs = {}", self.pairs)?;
        writeln!(f, "triples = {}", self.triples)?;
        writeln!(f, "non_negativity = {} ({} violations)", status(self.negative.is_empty()), self.negative.len())?;
        writeln!(
            f,
            "separation = {} ({} violations)",
            status(self.separation.is_empty() && self.identity.is_empty()),
            self.separation.len() + self.identity.len()
        )?;
        writeln!(f, "symmetry = {} ({} violations)", status(self.asymmetric.is_empty()), self.asymmetric.len())?;
        write!(f, "triangle = {} ({} violations)", status(self.triangle.is_empty()), self.triangle.len())?;
        for (i, j) in &self.separation {
            write!(f, "\nseparation_violation = {i},{j}")?;
        }
        Ok(())
    }
}

/// Checks non-negativity, separation, symmetry and the triangle inequality
/// on every pair and triple of `samples`. Separation is reported, not raised.
pub fn check_metric_axioms(spec: &MetricSpec, samples: &[HardeningParams]) -> Result<AxiomReport> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("axiom check needs at least 3 samples, got {n}")));
    }
    let mut d = vec![vec![0.0; n]; n];
    match spec {
        MetricSpec::Mechanics(m) => {
            let responses = samples.iter().map(|p| m.response(p)).collect::<Result<Vec<_>>>()?;
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = responses[i].max_distance(&responses[j]);
                }
            }
        }
        other => {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = other.distance(&samples[i], &samples[j])?;
                }
            }
        }
    }

    let mut report = AxiomReport {
        samples: n,
        pairs: n * (n - 1) / 2,
        triples: n * n * n,
        distances: d.clone(),
        negative: Vec::new(),
        asymmetric: Vec::new(),
        triangle: Vec::new(),
        separation: Vec::new(),
        identity: Vec::new(),
    };
    for i in 0..n {
        for j in 0..n {
            if d[i][j] < 0.0 {
                report.negative.push((i, j));
            }
            if i < j {
                let scale = d[i][j].abs().max(d[j][i].abs()).max(1.0);
                if (d[i][j] - d[j][i]).abs() > AXIOM_SLACK * scale {
                    report.asymmetric.push((i, j));
                }
                let same = samples[i] == samples[j];
                if !same && d[i][j] <= 0.0 {
                    report.separation.push((i, j));
                }
                if same && d[i][j] != 0.0 {
                    report.identity.push((i, j));
                }
            }
            for k in 0..n {
                if d[i][k] > d[i][j] + d[j][k] + AXIOM_SLACK {
                    report.triangle.push((i, j, k));
                }
            }
        }
    }
    Ok(report)
}
