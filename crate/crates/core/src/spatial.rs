//! Finite-difference discretization of the stationary Allen-Cahn operator
//! on an interval with homogeneous Dirichlet boundary conditions.
//!
//! Unknowns are the interior values only; the boundary rows are eliminated
//! so that all operators stay symmetric tridiagonal. Second-order central
//! differences are fixed for reproducibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;

/// Uniform 1D grid on `[a, b]` with `m` interior points.
///
/// Boundary values u(a) = u(b) = 0 are implicit; state vectors have length `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!(
                "interval [{a}, {b}] must be finite with a < b"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidGrid("need at least one interior point".into()));
        }
        let h = (b - a) / (m as f64 + 1.0);
        let nodes = (1..=m).map(|j| a + j as f64 * h).collect();
        Ok(Self { a, b, m, h, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of interior points (the state dimension).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index of the grid node closest to `x`, together with a flag telling
    /// whether `x` coincided with that node (up to 1e-12).
    pub fn nearest_node(&self, x: f64) -> (usize, bool) {
        let mut best = 0;
        let mut dist = (self.nodes[0] - x).abs();
        for (j, &xj) in self.nodes.iter().enumerate().skip(1) {
            let d = (xj - x).abs();
            if d < dist {
                dist = d;
                best = j;
            }
        }
        (best, dist <= 1e-12)
    }

    /// Discrete L2(D) norm of an interior state vector: sqrt(h * sum u_j^2).
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.m, "state length must match grid");
        (self.h * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Standard central finite-difference Laplacian with eliminated Dirichlet rows:
/// diagonal entries -2/h^2, off-diagonal entries 1/h^2.
pub fn assemble_laplacian(grid: &SpatialGrid) -> SymTridiag {
    let m = grid.m();
    let h2 = grid.h() * grid.h();
    SymTridiag::new(vec![-2.0 / h2; m], vec![1.0 / h2; m.saturating_sub(1)])
}

/// One-dimensional input distribution with bounded support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Gaussian with the given location and scale, truncated to `[lo, hi]`.
    TruncatedGaussian {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
}

fn std_normal_pdf(x: f64) -> f64 {
    (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidField(format!(
                "marginal support [{lo}, {hi}] must be a finite interval"
            )));
        }
        if let Marginal::TruncatedGaussian { sd, .. } = self {
            if *sd <= 0.0 {
                return Err(Error::InvalidField("Gaussian scale must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::TruncatedGaussian { lo, hi, .. } => (lo, hi),
        }
    }

    /// Normalizing mass of the underlying Gaussian inside the truncation
    /// window; 1.0 for the uniform case.
    fn truncation_mass(&self) -> f64 {
        match *self {
            Marginal::Uniform { .. } => 1.0,
            Marginal::TruncatedGaussian { mean, sd, lo, hi } => {
                std_normal_cdf((hi - mean) / sd) - std_normal_cdf((lo - mean) / sd)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            Marginal::Uniform { lo, hi } => 1.0 / (hi - lo),
            Marginal::TruncatedGaussian { mean, sd, .. } => {
                std_normal_pdf((x - mean) / sd) / (sd * self.truncation_mass())
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match *self {
            Marginal::Uniform { lo, hi } => (x - lo) / (hi - lo),
            Marginal::TruncatedGaussian { mean, sd, lo, .. } => {
                (std_normal_cdf((x - mean) / sd) - std_normal_cdf((lo - mean) / sd))
                    / self.truncation_mass()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::TruncatedGaussian { mean, sd, lo, hi } => {
                let alpha = (lo - mean) / sd;
                let beta = (hi - mean) / sd;
                mean + sd * (std_normal_pdf(alpha) - std_normal_pdf(beta)) / self.truncation_mass()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Marginal::TruncatedGaussian { mean, sd, lo, hi } => {
                let alpha = (lo - mean) / sd;
                let beta = (hi - mean) / sd;
                let z = self.truncation_mass();
                let da = std_normal_pdf(alpha);
                let db = std_normal_pdf(beta);
                let skew = (da - db) / z;
                sd * sd * (1.0 + (alpha * da - beta * db) / z - skew * skew)
            }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x >= lo && x <= hi
    }

    /// Draw one sample. The truncated Gaussian uses rejection from the
    /// untruncated normal, which is exact and deterministic for a fixed rng.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Marginal::TruncatedGaussian { mean, sd, lo, hi } => {
                use rand_distr::Distribution;
                let normal = rand_distr::Normal::new(mean, sd)
                    .expect("validated scale is positive");
                loop {
                    let x = normal.sample(rng);
                    if x >= lo && x <= hi {
                        return x;
                    }
                }
            }
        }
    }
}

/// Which spatial structure the random coefficient has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// g(x, y) = y1: a single random constant in space.
    Homogeneous,
    /// g(x, y) = y1 * cos(y2 * x): random amplitude and frequency.
    CosineHeterogeneous,
}

impl FieldKind {
    pub fn stochastic_dim(&self) -> usize {
        match self {
            FieldKind::Homogeneous => 1,
            FieldKind::CosineHeterogeneous => 2,
        }
    }
}

/// The zero-mean random coefficient g(x, .) added to the bifurcation
/// parameter, together with the distributions of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldModel {
    kind: FieldKind,
    marginals: Vec<Marginal>,
}

impl RandomFieldModel {
    pub fn new(kind: FieldKind, marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.len() != kind.stochastic_dim() {
            return Err(Error::InvalidField(format!(
                "{:?} needs {} marginal(s), got {}",
                kind,
                kind.stochastic_dim(),
                marginals.len()
            )));
        }
        for marginal in &marginals {
            marginal.validate()?;
        }
        // Zero mean of g(x, .) reduces to a centered amplitude for both
        // built-in kinds.
        let amplitude_mean = marginals[0].mean();
        if amplitude_mean.abs() > 1e-12 {
            return Err(Error::InvalidField(format!(
                "amplitude marginal must have zero mean, got {amplitude_mean:e}"
            )));
        }
        Ok(Self { kind, marginals })
    }

    pub fn homogeneous(marginal: Marginal) -> Result<Self> {
        Self::new(FieldKind::Homogeneous, vec![marginal])
    }

    pub fn cosine_heterogeneous(amplitude: Marginal, frequency: Marginal) -> Result<Self> {
        Self::new(FieldKind::CosineHeterogeneous, vec![amplitude, frequency])
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn stochastic_dim(&self) -> usize {
        self.kind.stochastic_dim()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn check_support(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.stochastic_dim() {
            return Err(Error::InvalidField(format!(
                "realization has dimension {}, expected {}",
                y.len(),
                self.stochastic_dim()
            )));
        }
        for (index, (&value, marginal)) in y.iter().zip(&self.marginals).enumerate() {
            if !marginal.contains(value) {
                let (lo, hi) = marginal.support();
                return Err(Error::OutOfSupport {
                    index,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: f64, y: &[f64]) -> f64 {
        match self.kind {
            FieldKind::Homogeneous => y[0],
            FieldKind::CosineHeterogeneous => y[0] * (y[1] * x).cos(),
        }
    }

    /// Evaluate g(x_j, y) at every interior node.
    pub fn evaluate_on_grid(&self, grid: &SpatialGrid, y: &[f64]) -> Result<Vec<f64>> {
        self.check_support(y)?;
        Ok(grid.nodes().iter().map(|&x| self.evaluate(x, y)).collect())
    }
}

/// A fixed realization of the discretized problem
/// K u + p u + G(y) u - u^3 = 0.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    grid: SpatialGrid,
    field: RandomFieldModel,
    y: Vec<f64>,
    laplacian: SymTridiag,
    field_values: Vec<f64>,
}

impl DiscreteSystem {
    pub fn new(grid: SpatialGrid, field: RandomFieldModel, y: Vec<f64>) -> Result<Self> {
        let field_values = field.evaluate_on_grid(&grid, &y)?;
        let laplacian = assemble_laplacian(&grid);
        Ok(Self {
            grid,
            field,
            y,
            laplacian,
            field_values,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn field(&self) -> &RandomFieldModel {
        &self.field
    }

    pub fn realization(&self) -> &[f64] {
        &self.y
    }

    pub fn laplacian(&self) -> &SymTridiag {
        &self.laplacian
    }

    /// Values g(x_j, y) on the interior nodes.
    pub fn field_values(&self) -> &[f64] {
        &self.field_values
    }

    pub fn dim(&self) -> usize {
        self.grid.m()
    }

    /// K u + p u + G(y) u - u^3, cube taken componentwise.
    pub fn residual(&self, p: f64, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim(), "state length must match grid");
        let mut r = self.laplacian.matvec(u);
        for j in 0..u.len() {
            r[j] += (p + self.field_values[j]) * u[j] - u[j] * u[j] * u[j];
        }
        r
    }

    /// K + p I + G(y) - 3 diag(u^2); symmetric tridiagonal for every input.
    pub fn jacobian(&self, p: f64, u: &[f64]) -> SymTridiag {
        assert_eq!(u.len(), self.dim(), "state length must match grid");
        let mut diag = self.laplacian.diag.clone();
        for j in 0..u.len() {
            diag[j] += p + self.field_values[j] - 3.0 * u[j] * u[j];
        }
        SymTridiag::new(diag, self.laplacian.off.clone())
    }

    /// Derivative of the residual with respect to p (equals the state).
    pub fn residual_dp(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
}
