//! Forward UQ studies built on the other modules: analytic laws for
//! spatially homogeneous coefficients, sparse-grid gPC surrogates for
//! heterogeneous ones, density estimation, observables, and the
//! convergence study against a reference expansion.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::continuation::{trace_branch, Branch, ContinuationSettings};
use crate::eigen::bifurcation_points;
use crate::error::{Error, Result};
use crate::gpc::{lagrange_to_gpc, sample_inputs, GpcExpansion};
use crate::sparse_grid::{build_sparse_grid, SparseGrid};
use crate::spatial::{DiscreteSystem, FieldKind, Marginal, RandomFieldModel, SpatialGrid};

/// Analytic distribution of a bifurcation point p* = -lambda - g(Y) for a
/// spatially homogeneous coefficient: the input marginal reflected and
/// shifted by the deterministic eigenvalue.
#[derive(Debug, Clone)]
pub struct BifurcationPointDistribution {
    marginal: Marginal,
    offset: f64,
}

impl BifurcationPointDistribution {
    pub fn pdf(&self, t: f64) -> f64 {
        self.marginal.pdf(self.offset - t)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.marginal.cdf(self.offset - t)
    }

    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.marginal.support();
        (self.offset - hi, self.offset - lo)
    }

    pub fn mean(&self) -> f64 {
        self.offset - self.marginal.mean()
    }

    pub fn variance(&self) -> f64 {
        self.marginal.variance()
    }

    /// Deterministic draws of the bifurcation point.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        sample_inputs(std::slice::from_ref(&self.marginal), count, seed)
            .iter()
            .map(|y| self.offset - y[0])
            .collect()
    }
}

/// Closed-form pdf of a random bifurcation point for the homogeneous model:
/// the input density reflected and shifted, `rho(t) = rho_g(-lambda_i - t)`.
pub fn homogeneous_bifpoint_pdf(
    field: &RandomFieldModel,
    lambda_i: f64,
) -> Result<BifurcationPointDistribution> {
    if field.kind() != FieldKind::Homogeneous {
        return Err(Error::RequiresHomogeneous);
    }
    Ok(BifurcationPointDistribution {
        marginal: field.marginals()[0].clone(),
        offset: -lambda_i,
    })
}

/// Probability that the first bifurcation happens at values p <= p_bar,
/// from the analytic distribution.
pub fn probability_of_bifurcating_analytic(
    dist: &BifurcationPointDistribution,
    p_bar: f64,
) -> f64 {
    dist.cdf(p_bar)
}

/// Empirical counterpart from surrogate samples.
pub fn probability_of_bifurcating_empirical(samples: &[f64], p_bar: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&s| s <= p_bar).count() as f64 / samples.len() as f64
}

/// Shift the reference branch (traced at y = 0) to each realization:
/// p-values move by -g(y), states stay bitwise identical. The whole
/// ensemble costs one continuation.
pub fn homogeneous_branch_ensemble(
    reference: &Branch,
    field: &RandomFieldModel,
    y_samples: &[Vec<f64>],
) -> Result<Vec<Branch>> {
    if field.kind() != FieldKind::Homogeneous {
        return Err(Error::RequiresHomogeneous);
    }
    if reference.y.iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidStudy(
            "shift ensemble needs the reference branch traced at y = 0".into(),
        ));
    }
    y_samples
        .iter()
        .map(|y| {
            field.check_support(y)?;
            let shift = -y[0];
            Ok(Branch {
                s_values: reference.s_values.clone(),
                p_values: reference.p_values.iter().map(|p| p + shift).collect(),
                states: reference.states.clone(),
                y: y.clone(),
                branch_index: reference.branch_index,
            })
        })
        .collect()
}

/// The reference realization y = 0.
pub fn zero_realization(field: &RandomFieldModel) -> Vec<f64> {
    vec![0.0; field.stochastic_dim()]
}

/// Trace branch `branch_index` at the reference realization y = 0.
pub fn reference_branch(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    branch_index: usize,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    let y = zero_realization(field);
    let points = bifurcation_points(grid, field, &y, branch_index)?;
    let system = DiscreteSystem::new(grid.clone(), field.clone(), y)?;
    trace_branch(&system, &points[branch_index - 1], settings)
}

/// gPC surrogate of one bifurcation point over the input domain.
#[derive(Debug, Clone)]
pub struct BifPointSurrogate {
    pub branch_index: usize,
    pub sparse_grid: SparseGrid,
    /// Directly computed p* at every collocation point (grid order).
    pub collocation_values: Vec<f64>,
    pub expansion: GpcExpansion<f64>,
}

impl BifPointSurrogate {
    pub fn num_collocation_points(&self) -> usize {
        self.sparse_grid.num_points()
    }
}

/// Fit the gPC surrogate of p*_i by solving one eigenvalue problem per
/// sparse-grid collocation point.
pub fn fit_bifpoint_surrogate(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    w: usize,
    branch_index: usize,
) -> Result<BifPointSurrogate> {
    fit_bifpoint_surrogates(grid, field, w, &[branch_index]).map(|mut s| s.remove(0))
}

/// Surrogates for several bifurcation points at once. All of them share the
/// degree set, and one eigenvalue solve per collocation point serves every
/// requested index.
pub fn fit_bifpoint_surrogates(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    w: usize,
    branch_indices: &[usize],
) -> Result<Vec<BifPointSurrogate>> {
    if branch_indices.is_empty() {
        return Err(Error::InvalidStudy("no branch indices requested".into()));
    }
    let max_index = *branch_indices.iter().max().unwrap();
    let sg = build_sparse_grid(field.stochastic_dim(), w, field.marginals())?;
    let per_point: Vec<Vec<f64>> = sg
        .points()
        .par_iter()
        .map(|y| {
            bifurcation_points(grid, field, y, max_index)
                .map(|points| points.iter().map(|p| p.p_star).collect())
                .map_err(|source| Error::CollocationFailed {
                    point: y.clone(),
                    source: Box::new(source),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    branch_indices
        .iter()
        .map(|&index| {
            let values: Vec<f64> = per_point.iter().map(|p| p[index - 1]).collect();
            let expansion = lagrange_to_gpc(&sg, &values)?;
            Ok(BifPointSurrogate {
                branch_index: index,
                sparse_grid: sg.clone(),
                collocation_values: values,
                expansion,
            })
        })
        .collect()
}

/// Per-arclength gPC surrogates of the branch components r(s, .) and
/// u(s, .), all sharing one degree set and the common s-grid.
#[derive(Debug, Clone)]
pub struct BranchSurrogate {
    pub branch_index: usize,
    pub sparse_grid: SparseGrid,
    pub s_values: Vec<f64>,
    pub r_expansions: Vec<GpcExpansion<f64>>,
    pub u_expansions: Vec<GpcExpansion<Vec<f64>>>,
}

impl BranchSurrogate {
    pub fn num_collocation_points(&self) -> usize {
        self.sparse_grid.num_points()
    }

    /// Mean bifurcation curve: zero-index coefficients of both components.
    pub fn mean_curve(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        (
            self.r_expansions.iter().map(|e| e.mean()).collect(),
            self.u_expansions.iter().map(|e| e.mean()).collect(),
        )
    }
}

/// Trace one branch per collocation point (identical continuation settings,
/// hence a shared arclength parametrization) and fit per-s expansions.
/// Any continuation failure aborts the fit: a partial surrogate would not
/// interpolate anything meaningful.
pub fn fit_branch_surrogate(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    w: usize,
    branch_index: usize,
    settings: &ContinuationSettings,
) -> Result<BranchSurrogate> {
    let sg = build_sparse_grid(field.stochastic_dim(), w, field.marginals())?;
    let branches: Vec<Branch> = sg
        .points()
        .par_iter()
        .map(|y| {
            trace_collocation_branch(grid, field, y, branch_index, settings).map_err(|source| {
                Error::CollocationFailed {
                    point: y.clone(),
                    source: Box::new(source),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let s_values = branches[0].s_values.clone();
    let mut r_expansions = Vec::with_capacity(s_values.len());
    let mut u_expansions = Vec::with_capacity(s_values.len());
    for l in 0..s_values.len() {
        let r_values: Vec<f64> = branches.iter().map(|b| b.p_values[l]).collect();
        let u_values: Vec<Vec<f64>> = branches.iter().map(|b| b.states[l].clone()).collect();
        r_expansions.push(lagrange_to_gpc(&sg, &r_values)?);
        u_expansions.push(lagrange_to_gpc(&sg, &u_values)?);
    }

    Ok(BranchSurrogate {
        branch_index,
        sparse_grid: sg,
        s_values,
        r_expansions,
        u_expansions,
    })
}

fn trace_collocation_branch(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    y: &[f64],
    branch_index: usize,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    let points = bifurcation_points(grid, field, y, branch_index)?;
    let system = DiscreteSystem::new(grid.clone(), field.clone(), y.to_vec())?;
    trace_branch(&system, &points[branch_index - 1], settings)
}

// ---------------------------------------------------------------------------
// density estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Histogram,
    GaussianKde,
}

#[derive(Debug, Clone, Copy)]
pub struct DensitySettings {
    /// Number of evaluation points of the estimate.
    pub grid_size: usize,
    /// KDE support padding in bandwidths beyond the sample range.
    pub pad_bandwidths: f64,
}

impl Default for DensitySettings {
    fn default() -> Self {
        Self {
            grid_size: 512,
            pad_bandwidths: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub kind: DensityKind,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub sample_count: usize,
    /// Silverman bandwidth; `None` for histograms.
    pub bandwidth: Option<f64>,
}

impl DensityEstimate {
    /// Trapezoidal mass on the estimate's grid; normalized to 1 on build.
    pub fn trapezoid_integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.grid.len() < 2 || x < self.grid[0] || x > *self.grid.last().unwrap() {
            return 0.0;
        }
        let idx = match self
            .grid
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.density[i],
            Err(i) => i,
        };
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        let (d0, d1) = (self.density[idx - 1], self.density[idx]);
        d0 + (d1 - d0) * (x - x0) / (x1 - x0)
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
        .sum()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = q * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Silverman's rule of thumb with the interquartile refinement.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Histogram (Freedman-Diaconis bins) or Gaussian KDE (Silverman bandwidth)
/// density estimate, renormalized so its trapezoidal mass is one.
pub fn estimate_density(
    samples: &[f64],
    kind: DensityKind,
    settings: &DensitySettings,
) -> Result<DensityEstimate> {
    if samples.len() < 2 {
        return Err(Error::InvalidStudy(format!(
            "density estimation needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let first = samples[0];
    if samples.iter().all(|&s| s == first) {
        return Err(Error::DegenerateSamples(samples.len()));
    }
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (min, max) = (sorted[0], sorted[n - 1]);

    let (grid, mut density, bandwidth) = match kind {
        DensityKind::GaussianKde => {
            let bw = silverman_bandwidth(samples);
            let lo = min - settings.pad_bandwidths * bw;
            let hi = max + settings.pad_bandwidths * bw;
            let grid = linspace(lo, hi, settings.grid_size);
            let norm = 1.0 / (n as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
            let density: Vec<f64> = grid
                .iter()
                .map(|&x| {
                    norm * samples
                        .iter()
                        .map(|&s| (-0.5 * ((x - s) / bw).powi(2)).exp())
                        .sum::<f64>()
                })
                .collect();
            (grid, density, Some(bw))
        }
        DensityKind::Histogram => {
            let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
            let fd_width = 2.0 * iqr / (n as f64).cbrt();
            let width = if fd_width > 0.0 {
                fd_width
            } else {
                (max - min) / (n as f64).sqrt().ceil()
            };
            let bins = (((max - min) / width).ceil() as usize).max(1);
            let width = (max - min) / bins as f64;
            let mut counts = vec![0usize; bins];
            for &s in samples {
                let bin = (((s - min) / width) as usize).min(bins - 1);
                counts[bin] += 1;
            }
            let grid: Vec<f64> = (0..bins).map(|b| min + (b as f64 + 0.5) * width).collect();
            let density: Vec<f64> = counts
                .iter()
                .map(|&c| c as f64 / (n as f64 * width))
                .collect();
            (grid, density, None)
        }
    };

    // force unit trapezoidal mass on the estimate's own grid
    if grid.len() >= 2 {
        let mass = trapezoid(&grid, &density);
        if mass > 0.0 {
            for d in density.iter_mut() {
                *d /= mass;
            }
        }
    }

    Ok(DensityEstimate {
        kind,
        grid,
        density,
        sample_count: n,
        bandwidth,
    })
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let step = (hi - lo) / (count as f64 - 1.0);
    let mut grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    grid[count - 1] = hi;
    grid
}

// ---------------------------------------------------------------------------
// observables
// ---------------------------------------------------------------------------

/// Scalar observables of a branch state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// Discrete L2(D) norm sqrt(h * sum u_j^2).
    L2Norm,
    /// Value of the solution at the grid node closest to the given abscissa.
    PointEval(f64),
}

#[derive(Debug, Clone)]
pub struct ObservableCurve {
    pub values: Vec<f64>,
    /// Node used by point evaluation.
    pub node_index: Option<usize>,
    /// Set when the requested abscissa was not a grid node and the nearest
    /// node was used instead.
    pub snapped: bool,
}

pub fn branch_observable(
    grid: &SpatialGrid,
    states: &[Vec<f64>],
    observable: Observable,
) -> ObservableCurve {
    match observable {
        Observable::L2Norm => ObservableCurve {
            values: states.iter().map(|u| grid.l2_norm(u)).collect(),
            node_index: None,
            snapped: false,
        },
        Observable::PointEval(x) => {
            let (node, exact) = grid.nearest_node(x);
            ObservableCurve {
                values: states.iter().map(|u| u[node]).collect(),
                node_index: Some(node),
                snapped: !exact,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// empirical cdf and Kolmogorov-Smirnov distances
// ---------------------------------------------------------------------------

/// Empirical cdf of the samples at `x`.
pub fn empirical_cdf(samples: &[f64], x: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&s| s <= x).count() as f64 / samples.len() as f64
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic cdf.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut worst = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max(((i + 1) as f64 / n - f).abs());
        worst = worst.max((i as f64 / n - f).abs());
    }
    worst
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0.0_f64;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        let fa = i as f64 / sa.len() as f64;
        let fb = j as f64 / sb.len() as f64;
        worst = worst.max((fa - fb).abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// convergence study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub w: usize,
    pub lambda_cardinality: usize,
    pub rms_p_star: f64,
    pub rms_r_at_s: f64,
    pub rms_u_at_s: f64,
}

/// Root-mean-square errors of the surrogates at budgets `w_list` against a
/// reference expansion at `w_ref`, estimated with `n_mc` common random
/// samples; the branch components are probed at arclength `s_probe`.
/// The returned table ends with the reference row itself (zero errors).
///
/// Collocation solves are shared across budgets: nested Leja grids make
/// every coarse point a reference point.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    branch_index: usize,
    w_list: &[usize],
    w_ref: usize,
    s_probe: f64,
    n_mc: usize,
    seed: u64,
    settings: &ContinuationSettings,
) -> Result<Vec<ConvergenceRow>> {
    if w_list.is_empty() {
        return Err(Error::InvalidStudy("empty w_list".into()));
    }
    let max_w = *w_list.iter().max().unwrap();
    if w_ref <= max_w {
        return Err(Error::InvalidStudy(format!(
            "reference budget w_ref = {w_ref} must exceed max(w_list) = {max_w}"
        )));
    }
    if n_mc < 1000 {
        return Err(Error::InvalidStudy(format!(
            "need at least 1000 Monte Carlo samples, got {n_mc}"
        )));
    }
    let probe_steps = (s_probe / settings.ds).round() as usize;
    if probe_steps > settings.n_steps
        || (probe_steps as f64 * settings.ds - s_probe).abs() > 1e-9
    {
        return Err(Error::InvalidStudy(format!(
            "probe arclength {s_probe} does not lie on the s-grid with ds = {} and S = {}",
            settings.ds,
            settings.arclength_end()
        )));
    }

    // one trace per distinct collocation point across all budgets
    let mut budgets: Vec<usize> = w_list.to_vec();
    budgets.push(w_ref);
    let grids: Vec<SparseGrid> = budgets
        .iter()
        .map(|&w| build_sparse_grid(field.stochastic_dim(), w, field.marginals()))
        .collect::<Result<Vec<_>>>()?;

    let mut cache: BTreeMap<Vec<u64>, (f64, f64, Vec<f64>)> = BTreeMap::new();
    for sg in &grids {
        let missing: Vec<Vec<f64>> = sg
            .points()
            .iter()
            .filter(|p| !cache.contains_key(&point_key(p)))
            .cloned()
            .collect();
        let solved: Vec<(f64, f64, Vec<f64>)> = missing
            .par_iter()
            .map(|y| {
                let points = bifurcation_points(grid, field, y, branch_index).map_err(
                    |source| Error::CollocationFailed {
                        point: y.clone(),
                        source: Box::new(source),
                    },
                )?;
                let system = DiscreteSystem::new(grid.clone(), field.clone(), y.clone())?;
                let branch =
                    trace_branch(&system, &points[branch_index - 1], settings).map_err(
                        |source| Error::CollocationFailed {
                            point: y.clone(),
                            source: Box::new(source),
                        },
                    )?;
                Ok((
                    points[branch_index - 1].p_star,
                    branch.p_values[probe_steps],
                    branch.states[probe_steps].clone(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        for (point, data) in missing.into_iter().zip(solved) {
            cache.insert(point_key(&point), data);
        }
    }

    let fit = |sg: &SparseGrid| -> Result<(
        GpcExpansion<f64>,
        GpcExpansion<f64>,
        GpcExpansion<Vec<f64>>,
    )> {
        let mut p_star = Vec::with_capacity(sg.num_points());
        let mut r_probe = Vec::with_capacity(sg.num_points());
        let mut u_probe = Vec::with_capacity(sg.num_points());
        for point in sg.points() {
            let (p, r, u) = cache.get(&point_key(point)).expect("cache covers all grids");
            p_star.push(*p);
            r_probe.push(*r);
            u_probe.push(u.clone());
        }
        Ok((
            lagrange_to_gpc(sg, &p_star)?,
            lagrange_to_gpc(sg, &r_probe)?,
            lagrange_to_gpc(sg, &u_probe)?,
        ))
    };

    let reference = fit(grids.last().unwrap())?;
    let samples = sample_inputs(field.marginals(), n_mc, seed);
    let ref_evals: Vec<(f64, f64, Vec<f64>)> = samples
        .par_iter()
        .map(|y| {
            (
                reference.0.eval(y).expect("sample in support"),
                reference.1.eval(y).expect("sample in support"),
                reference.2.eval(y).expect("sample in support"),
            )
        })
        .collect();

    let mut rows = Vec::with_capacity(budgets.len());
    for (sg, &w) in grids.iter().zip(&budgets) {
        let (p_exp, r_exp, u_exp) = fit(sg)?;
        // collect per-sample terms in index order and sum sequentially so
        // the result does not depend on the thread count
        let terms: Vec<(f64, f64, f64)> = samples
            .par_iter()
            .zip(&ref_evals)
            .map(|(y, (p_ref, r_ref, u_ref))| {
                let dp = p_exp.eval(y).expect("sample in support") - p_ref;
                let dr = r_exp.eval(y).expect("sample in support") - r_ref;
                let du = u_exp.eval(y).expect("sample in support");
                let diff: Vec<f64> = du.iter().zip(u_ref).map(|(a, b)| a - b).collect();
                let l2 = grid.l2_norm(&diff);
                (dp * dp, dr * dr, l2 * l2)
            })
            .collect();
        let sums = terms
            .iter()
            .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        rows.push(ConvergenceRow {
            w,
            lambda_cardinality: p_exp.lambda().len(),
            rms_p_star: (sums.0 / n_mc as f64).sqrt(),
            rms_r_at_s: (sums.1 / n_mc as f64).sqrt(),
            rms_u_at_s: (sums.2 / n_mc as f64).sqrt(),
        });
    }
    Ok(rows)
}

fn point_key(point: &[f64]) -> Vec<u64> {
    point.iter().map(|v| v.to_bits()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::fd_laplacian_eigenvalue;

    fn pi_grid(m: usize) -> SpatialGrid {
        SpatialGrid::new(0.0, std::f64::consts::PI, m).unwrap()
    }

    fn uniform_hom_field() -> RandomFieldModel {
        RandomFieldModel::homogeneous(Marginal::Uniform { lo: -1.0, hi: 1.0 }).unwrap()
    }

    fn paper_het_field() -> RandomFieldModel {
        RandomFieldModel::cosine_heterogeneous(
            Marginal::Uniform { lo: -1.0, hi: 1.0 },
            Marginal::Uniform {
                lo: -std::f64::consts::FRAC_PI_2,
                hi: std::f64::consts::FRAC_PI_2,
            },
        )
        .unwrap()
    }

    #[test]
    fn homogeneous_pdf_is_shifted_uniform() {
        // continuum first eigenvalue of the Laplacian on [0, pi]
        let dist = homogeneous_bifpoint_pdf(&uniform_hom_field(), -1.0).unwrap();
        assert_eq!(dist.support(), (0.0, 2.0));
        assert!((dist.pdf(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(dist.pdf(-0.1), 0.0);
        assert_eq!(dist.pdf(2.1), 0.0);
        assert!((dist.mean() - 1.0).abs() < 1e-15);
        assert!((dist.variance() - 1.0 / 3.0).abs() < 1e-15);
        // probability of bifurcating by the midpoint
        assert!((probability_of_bifurcating_analytic(&dist, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(probability_of_bifurcating_analytic(&dist, -0.5), 0.0);
        assert_eq!(probability_of_bifurcating_analytic(&dist, 2.5), 1.0);
    }

    #[test]
    fn truncated_gaussian_pdf_is_centered_at_minus_lambda() {
        let field = RandomFieldModel::homogeneous(Marginal::TruncatedGaussian {
            mean: 0.0,
            sd: 1.0,
            lo: -2.0,
            hi: 2.0,
        })
        .unwrap();
        let dist = homogeneous_bifpoint_pdf(&field, -4.0).unwrap();
        assert_eq!(dist.support(), (2.0, 6.0));
        // symmetric around 4 with the mode there
        assert!((dist.pdf(3.5) - dist.pdf(4.5)).abs() < 1e-14);
        assert!(dist.pdf(4.0) > dist.pdf(3.0));
        assert!((dist.mean() - 4.0).abs() < 1e-13);
        // mass integrates to one
        let grid = linspace(2.0, 6.0, 20_001);
        let values: Vec<f64> = grid.iter().map(|&t| dist.pdf(t)).collect();
        assert!((trapezoid(&grid, &values) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_input_collapses_to_a_point_mass() {
        // the analytic limit: cdf is the unit step at -lambda, variance zero
        let dist = BifurcationPointDistribution {
            marginal: Marginal::Uniform { lo: 0.0, hi: 0.0 },
            offset: 4.0,
        };
        assert_eq!(dist.support(), (4.0, 4.0));
        assert_eq!(dist.mean(), 4.0);
        assert_eq!(dist.variance(), 0.0);
        assert_eq!(dist.cdf(3.999), 0.0);
        assert_eq!(dist.cdf(4.0), 1.0);
        assert_eq!(dist.cdf(4.001), 1.0);
    }

    #[test]
    fn heterogeneous_field_has_no_analytic_pdf() {
        let err = homogeneous_bifpoint_pdf(&paper_het_field(), -1.0).unwrap_err();
        assert!(matches!(err, Error::RequiresHomogeneous));
    }

    #[test]
    fn branch_ensemble_shifts_only_the_parameter() {
        let grid = pi_grid(30);
        let field = uniform_hom_field();
        let settings = ContinuationSettings {
            n_steps: 20,
            ..Default::default()
        };
        let reference = reference_branch(&grid, &field, 1, &settings).unwrap();
        let ensemble = homogeneous_branch_ensemble(
            &reference,
            &field,
            &[vec![0.0], vec![0.5], vec![-0.8]],
        )
        .unwrap();
        assert_eq!(ensemble[0].p_values, reference.p_values);
        for branch in &ensemble {
            assert_eq!(branch.states, reference.states);
            assert_eq!(branch.s_values, reference.s_values);
        }
        for (l, &p) in ensemble[1].p_values.iter().enumerate() {
            assert!((p - (reference.p_values[l] - 0.5)).abs() < 1e-15);
        }
        // cross-check against a direct trace at the shifted realization
        let direct = {
            let points = bifurcation_points(&grid, &field, &[0.5], 1).unwrap();
            let system =
                DiscreteSystem::new(grid.clone(), field.clone(), vec![0.5]).unwrap();
            trace_branch(&system, &points[0], &settings).unwrap()
        };
        for l in 0..direct.len() {
            assert!((direct.p_values[l] - ensemble[1].p_values[l]).abs() < 1e-9);
            for (a, b) in direct.states[l].iter().zip(&ensemble[1].states[l]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bifpoint_surrogate_interpolates_and_counts_points() {
        let grid = pi_grid(30);
        let field = paper_het_field();
        let surrogate = fit_bifpoint_surrogate(&grid, &field, 3, 1).unwrap();
        assert_eq!(surrogate.num_collocation_points(), 25);
        assert_eq!(surrogate.expansion.lambda().len(), 25);
        for (point, &direct) in surrogate
            .sparse_grid
            .points()
            .iter()
            .zip(&surrogate.collocation_values)
        {
            let via_surrogate = surrogate.expansion.eval(point).unwrap();
            assert!(
                (via_surrogate - direct).abs() <= 1e-10,
                "at {point:?}: {via_surrogate} vs {direct}"
            );
        }
    }

    #[test]
    fn shared_solves_match_individual_fits() {
        let grid = pi_grid(25);
        let field = paper_het_field();
        let shared = fit_bifpoint_surrogates(&grid, &field, 2, &[1, 3]).unwrap();
        let single_1 = fit_bifpoint_surrogate(&grid, &field, 2, 1).unwrap();
        let single_3 = fit_bifpoint_surrogate(&grid, &field, 2, 3).unwrap();
        assert_eq!(shared[0].collocation_values, single_1.collocation_values);
        assert_eq!(shared[1].collocation_values, single_3.collocation_values);
        assert_eq!(shared[0].expansion.coeffs(), single_1.expansion.coeffs());
        assert_eq!(shared[1].branch_index, 3);
    }

    #[test]
    fn degenerate_amplitude_gives_constant_surrogate() {
        let grid = pi_grid(20);
        let field = RandomFieldModel::cosine_heterogeneous(
            Marginal::Uniform { lo: 0.0, hi: 0.0 },
            Marginal::Uniform { lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let surrogate = fit_bifpoint_surrogate(&grid, &field, 2, 1).unwrap();
        let deterministic =
            bifurcation_points(&grid, &field, &[0.0, 0.0], 1).unwrap()[0].p_star;
        assert!((surrogate.expansion.mean() - deterministic).abs() < 1e-12);
        assert!(surrogate.expansion.variance().abs() < 1e-20);
    }

    #[test]
    fn homogeneous_field_through_surrogate_pipeline_reduces_to_shift_law() {
        let grid = pi_grid(20);
        let field = uniform_hom_field();
        let settings = ContinuationSettings {
            n_steps: 10,
            ..Default::default()
        };
        let surrogate = fit_branch_surrogate(&grid, &field, 1, 1, &settings).unwrap();
        let input_variance = field.marginals()[0].variance();
        for l in 0..surrogate.s_values.len() {
            // u is deterministic: its variance vanishes at every s
            let u_var = surrogate.u_expansions[l].variance();
            assert!(u_var.iter().all(|&v| v.abs() < 1e-16), "s index {l}");
            // r is a pure shift: its variance is the input variance
            let r_var = surrogate.r_expansions[l].variance();
            assert!(
                (r_var - input_variance).abs() < 1e-10,
                "s index {l}: {r_var}"
            );
        }
        // mean curve coincides with the reference branch
        let reference = reference_branch(&grid, &field, 1, &settings).unwrap();
        let (r_mean, u_mean) = surrogate.mean_curve();
        for l in 0..reference.len() {
            assert!((r_mean[l] - reference.p_values[l]).abs() < 1e-9);
            for (a, b) in u_mean[l].iter().zip(&reference.states[l]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn branch_surrogate_starts_at_the_bifurcation_point_surrogate() {
        let grid = pi_grid(25);
        let field = paper_het_field();
        let settings = ContinuationSettings {
            n_steps: 5,
            ..Default::default()
        };
        let branch_surrogate = fit_branch_surrogate(&grid, &field, 2, 1, &settings).unwrap();
        let point_surrogate = fit_bifpoint_surrogate(&grid, &field, 2, 1).unwrap();
        for (a, b) in branch_surrogate.r_expansions[0]
            .coeffs()
            .iter()
            .zip(point_surrogate.expansion.coeffs())
        {
            assert!((a - b).abs() <= 1e-10);
        }
        let u0 = &branch_surrogate.u_expansions[0];
        for coeff in u0.coeffs() {
            assert!(coeff.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn kde_recovers_a_uniform_density() {
        let dist = BifurcationPointDistribution {
            marginal: Marginal::Uniform { lo: -1.0, hi: 1.0 },
            offset: 1.0,
        };
        let samples = dist.sample(10_000, 424_242);
        let estimate =
            estimate_density(&samples, DensityKind::GaussianKde, &DensitySettings::default())
                .unwrap();
        assert!((estimate.trapezoid_integral() - 1.0).abs() < 1e-3);
        assert!(estimate.density.iter().all(|&d| d >= 0.0));
        // sup distance to the true density away from the support endpoints
        let mut worst = 0.0_f64;
        for &x in &linspace(0.3, 1.7, 200) {
            worst = worst.max((estimate.eval(x) - 0.5).abs());
        }
        assert!(worst < 0.05, "sup distance {worst}");
        // KS statistic of the underlying samples against the analytic cdf
        let ks = ks_statistic(&samples, |t| dist.cdf(t));
        assert!(ks < 0.02, "KS = {ks}");
    }

    #[test]
    fn histogram_smallest_case_and_degenerate_samples() {
        let est = estimate_density(
            &[0.0, 1.0],
            DensityKind::Histogram,
            &DensitySettings::default(),
        )
        .unwrap();
        assert!(!est.grid.is_empty());
        assert!(est.density.iter().all(|&d| d >= 0.0));

        let err = estimate_density(
            &[2.0, 2.0, 2.0],
            DensityKind::Histogram,
            &DensitySettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSamples(3)));

        let err = estimate_density(
            &[1.0],
            DensityKind::Histogram,
            &DensitySettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidStudy(_)));
    }

    #[test]
    fn histogram_mass_is_normalized() {
        let dist = BifurcationPointDistribution {
            marginal: Marginal::Uniform { lo: -1.0, hi: 1.0 },
            offset: 0.0,
        };
        let samples = dist.sample(5_000, 7);
        let est = estimate_density(
            &samples,
            DensityKind::Histogram,
            &DensitySettings::default(),
        )
        .unwrap();
        assert!((est.trapezoid_integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn observables_respect_the_state_symmetry() {
        let grid = pi_grid(21);
        let zero = vec![vec![0.0; 21]];
        let l2_zero = branch_observable(&grid, &zero, Observable::L2Norm);
        assert_eq!(l2_zero.values[0], 0.0);
        let mid = branch_observable(
            &grid,
            &zero,
            Observable::PointEval(std::f64::consts::FRAC_PI_2),
        );
        assert_eq!(mid.values[0], 0.0);

        let state: Vec<f64> = grid.nodes().iter().map(|&x| x.sin()).collect();
        let minus: Vec<f64> = state.iter().map(|v| -v).collect();
        let states = vec![state, minus];
        let l2 = branch_observable(&grid, &states, Observable::L2Norm);
        assert_eq!(l2.values[0], l2.values[1]);
        let point = branch_observable(
            &grid,
            &states,
            Observable::PointEval(std::f64::consts::FRAC_PI_2),
        );
        assert_eq!(point.values[0], -point.values[1]);
        // pi/2 is the middle node for odd m on [0, pi]
        assert!(!point.snapped);
        assert_eq!(point.node_index, Some(10));

        let off_node = branch_observable(&grid, &states, Observable::PointEval(1.0));
        assert!(off_node.snapped);
    }

    #[test]
    fn transported_pdf_along_the_homogeneous_branch() {
        let grid = pi_grid(20);
        let field = uniform_hom_field();
        let settings = ContinuationSettings {
            n_steps: 30,
            ..Default::default()
        };
        let reference = reference_branch(&grid, &field, 1, &settings).unwrap();
        let lambda1 = fd_laplacian_eigenvalue(&grid, 1);
        let dist = homogeneous_bifpoint_pdf(&field, lambda1).unwrap();

        let y_samples = sample_inputs(field.marginals(), 4000, 11);
        let ensemble = homogeneous_branch_ensemble(&reference, &field, &y_samples).unwrap();
        for &l in &[10usize, 30] {
            let r_samples: Vec<f64> = ensemble.iter().map(|b| b.p_values[l]).collect();
            // bifurcation-point samples shifted by the deterministic advance
            let advance = reference.p_values[l] - reference.p_values[0];
            let transported: Vec<f64> = dist
                .sample(4000, 12)
                .iter()
                .map(|p| p + advance)
                .collect();
            let ks = ks_two_sample(&r_samples, &transported);
            assert!(ks < 0.05, "s index {l}: KS = {ks}");
        }
    }

    #[test]
    fn variance_curves_are_nonnegative_and_continuous() {
        let grid = pi_grid(25);
        let field = paper_het_field();
        let settings = ContinuationSettings {
            n_steps: 30,
            ..Default::default()
        };
        let surrogate = fit_branch_surrogate(&grid, &field, 2, 1, &settings).unwrap();
        let r_var: Vec<f64> = surrogate.r_expansions.iter().map(|e| e.variance()).collect();
        assert!(r_var.iter().all(|&v| v >= 0.0));
        let max_var = r_var.iter().cloned().fold(0.0_f64, f64::max);
        let floor = 1e-10 * max_var.max(1e-30);
        for l in 1..r_var.len() - 1 {
            let prev_inc = (r_var[l] - r_var[l - 1]).abs();
            let next_inc = (r_var[l + 1] - r_var[l]).abs();
            assert!(
                next_inc <= 10.0 * prev_inc + floor,
                "variance jump at s index {l}: {prev_inc} -> {next_inc}"
            );
        }
    }

    #[test]
    fn convergence_study_validates_and_is_exact_for_linear_laws() {
        let grid = pi_grid(20);
        let hom = uniform_hom_field();
        let settings = ContinuationSettings {
            n_steps: 20,
            ..Default::default()
        };
        // p*(y) = -lambda_1 - y is degree one: already exact at w = 1
        let rows =
            convergence_study(&grid, &hom, 1, &[1], 2, 1.0, 1000, 5, &settings).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].rms_p_star <= 1e-10, "rms {}", rows[0].rms_p_star);
        assert!(rows[0].rms_r_at_s <= 1e-9);
        assert!(rows[0].rms_u_at_s <= 1e-9);
        // the reference row compares the reference with itself
        assert_eq!(rows[1].w, 2);
        assert_eq!(rows[1].rms_p_star, 0.0);
        assert_eq!(rows[1].rms_r_at_s, 0.0);
        assert_eq!(rows[1].rms_u_at_s, 0.0);

        let err =
            convergence_study(&grid, &hom, 1, &[2], 2, 1.0, 1000, 5, &settings).unwrap_err();
        assert!(matches!(err, Error::InvalidStudy(_)));
        let err = convergence_study(&grid, &hom, 1, &[1], 2, 1.0, 10, 5, &settings)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidStudy(_)));
        let err = convergence_study(&grid, &hom, 1, &[1], 2, 0.33, 1000, 5, &settings)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidStudy(_)));
    }

    #[test]
    fn empirical_cdf_and_ks_utilities() {
        let samples = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_cdf(&samples, 0.5), 0.0);
        assert_eq!(empirical_cdf(&samples, 2.0), 0.5);
        assert_eq!(empirical_cdf(&samples, 9.0), 1.0);
        assert_eq!(probability_of_bifurcating_empirical(&samples, 2.5), 0.5);

        // identical sample sets have zero KS distance
        assert_eq!(ks_two_sample(&samples, &samples), 0.0);
        // uniform samples against the uniform cdf
        let dist = BifurcationPointDistribution {
            marginal: Marginal::Uniform { lo: 0.0, hi: 1.0 },
            offset: 1.0,
        };
        let draws = dist.sample(10_000, 3);
        assert!(ks_statistic(&draws, |t| dist.cdf(t)) < 0.02);
    }
}
