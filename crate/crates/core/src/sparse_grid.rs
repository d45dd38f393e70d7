//! Sparse-grid collocation: symmetric Leja sequences, downward-closed
//! multi-index sets, combination-technique coefficients, and tensor
//! Lagrange interpolation on deduplicated point sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LinearValue;
use crate::spatial::Marginal;

/// Whether a multi-index set holds collocation levels (entries >= 1) or
/// polynomial degrees (entries >= 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexKind {
    Levels,
    Degrees,
}

/// An ordered, duplicate-free set of multi-indices in canonical
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    kind: IndexKind,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn new(dim: usize, kind: IndexKind, mut indices: Vec<Vec<usize>>) -> Result<Self> {
        for index in &indices {
            if index.len() != dim {
                return Err(Error::InvalidSparseGrid(format!(
                    "multi-index {index:?} does not have dimension {dim}"
                )));
            }
            if kind == IndexKind::Levels && index.contains(&0) {
                return Err(Error::InvalidSparseGrid(format!(
                    "collocation levels must be positive, got {index:?}"
                )));
            }
        }
        indices.sort();
        indices.dedup();
        Ok(Self { dim, kind, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.indices.iter()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn contains(&self, index: &[usize]) -> bool {
        self.position(index).is_some()
    }

    pub fn position(&self, index: &[usize]) -> Option<usize> {
        self.indices
            .binary_search_by(|probe| probe.as_slice().cmp(index))
            .ok()
    }

    /// Every componentwise-smaller admissible index must be present.
    pub fn check_downward_closed(&self) -> Result<()> {
        let floor = match self.kind {
            IndexKind::Levels => 1,
            IndexKind::Degrees => 0,
        };
        for index in &self.indices {
            for n in 0..self.dim {
                if index[n] > floor {
                    let mut smaller = index.clone();
                    smaller[n] -= 1;
                    if !self.contains(&smaller) {
                        return Err(Error::NotDownwardClosed(index.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_downward_closed(&self) -> bool {
        self.check_downward_closed().is_ok()
    }
}

/// Number of symmetric Leja knots on level `i`: m(i) = 2i - 1.
pub fn level_to_knots(level: usize) -> usize {
    assert!(level >= 1, "collocation levels start at 1");
    2 * level - 1
}

const LEJA_HALF_CANDIDATES: usize = 50_000;

/// Deterministic symmetric Leja sequence on [-1, 1].
///
/// Starts 0, 1, -1; afterwards points come in mirror pairs whose positive
/// member maximizes the product of distances to all previous points over
/// 10^5 + 1 equispaced candidates. The objective is evaluated in log form;
/// exact ties go to the candidate with smaller magnitude. The sequence is
/// nested by construction: any prefix is itself the sequence.
pub fn symmetric_leja(count: usize) -> Vec<f64> {
    assert!(count >= 1, "need at least one point");
    let mut points = vec![0.0, 1.0, -1.0];
    while points.len() < count {
        let mut best_value = f64::NEG_INFINITY;
        let mut best_t = f64::NAN;
        for idx in 0..=LEJA_HALF_CANDIDATES {
            let t = idx as f64 / LEJA_HALF_CANDIDATES as f64;
            let mut value = 0.0;
            for &p in &points {
                value += (t - p).abs().ln();
            }
            if value > best_value {
                best_value = value;
                best_t = t;
            }
        }
        points.push(best_t);
        points.push(-best_t);
    }
    points.truncate(count);
    points
}

/// All levels with total offset `sum(i_n - 1) <= w`, in lexicographic order.
pub fn total_degree_levels(dim: usize, w: usize) -> MultiIndexSet {
    assert!(dim >= 1);
    let mut indices = Vec::new();
    let mut current = vec![1usize; dim];
    fill_levels(dim, w, 0, 0, &mut current, &mut indices);
    MultiIndexSet::new(dim, IndexKind::Levels, indices).expect("construction is valid")
}

fn fill_levels(
    dim: usize,
    w: usize,
    position: usize,
    used: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if position == dim {
        out.push(current.clone());
        return;
    }
    for level in 1..=(w - used + 1) {
        current[position] = level;
        fill_levels(dim, w, position + 1, used + level - 1, current, out);
    }
}

/// Combination-technique coefficients
/// `c_i = sum over j in {0,1}^N with i + j in I of (-1)^|j|`.
///
/// For a nonempty downward-closed set the coefficients always sum to one.
pub fn combination_coefficients(levels: &MultiIndexSet) -> Result<Vec<i64>> {
    if levels.kind() != IndexKind::Levels {
        return Err(Error::InvalidSparseGrid(
            "combination coefficients need a level set".into(),
        ));
    }
    levels.check_downward_closed()?;
    let dim = levels.dim();
    let mut coefficients = Vec::with_capacity(levels.len());
    for index in levels.iter() {
        let mut c = 0i64;
        for mask in 0..(1usize << dim) {
            let mut shifted = index.clone();
            for n in 0..dim {
                if mask & (1 << n) != 0 {
                    shifted[n] += 1;
                }
            }
            if levels.contains(&shifted) {
                c += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            }
        }
        coefficients.push(c);
    }
    Ok(coefficients)
}

/// One anisotropic tensor grid of the combination.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub levels: Vec<usize>,
    /// Per-dimension reference nodes in [-1, 1] (duplicates collapsed for
    /// degenerate supports).
    pub ref_axes: Vec<Vec<f64>>,
    /// Per-dimension nodes mapped to the marginal supports.
    pub axes: Vec<Vec<f64>>,
    /// Row-major (last dimension fastest) local index -> global point index.
    pub point_map: Vec<usize>,
}

impl TensorGrid {
    pub fn local_size(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }
}

/// Sparse-grid collocation operator over the product of the marginals'
/// supports.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    levels: MultiIndexSet,
    coefficients: Vec<i64>,
    tensor_grids: Vec<TensorGrid>,
    points: Vec<Vec<f64>>,
    marginals: Vec<Marginal>,
}

const DEDUP_TOL: f64 = 1e-12;

fn affine_to_support(t: f64, lo: f64, hi: f64) -> f64 {
    (lo + 0.5 * (t + 1.0) * (hi - lo)).clamp(lo, hi)
}

/// Build the sparse grid for the total-degree level set of budget `w`.
///
/// Collocation points are symmetric Leja nodes mapped affinely from [-1, 1]
/// to each marginal's support; nested sequences make the deduplication an
/// exact match (the 1e-12 tolerance is a fallback only).
pub fn build_sparse_grid(dim: usize, w: usize, marginals: &[Marginal]) -> Result<SparseGrid> {
    if marginals.len() != dim {
        return Err(Error::InvalidSparseGrid(format!(
            "got {} marginals for dimension {dim}",
            marginals.len()
        )));
    }
    for marginal in marginals {
        marginal.validate()?;
        if !matches!(marginal, Marginal::Uniform { .. }) {
            return Err(Error::InvalidSparseGrid(
                "collocation supports uniform marginals only".into(),
            ));
        }
    }

    let levels = total_degree_levels(dim, w);
    let coefficients = combination_coefficients(&levels)?;

    let max_level = levels.iter().flat_map(|i| i.iter().copied()).max().unwrap_or(1);
    let leja = symmetric_leja(level_to_knots(max_level));

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut tensor_grids = Vec::with_capacity(levels.len());

    for index in levels.iter() {
        let mut ref_axes = Vec::with_capacity(dim);
        let mut axes = Vec::with_capacity(dim);
        for n in 0..dim {
            let (lo, hi) = marginals[n].support();
            let knots = level_to_knots(index[n]);
            let mut ref_axis = Vec::with_capacity(knots);
            let mut axis: Vec<f64> = Vec::with_capacity(knots);
            for &t in &leja[..knots] {
                let mapped = affine_to_support(t, lo, hi);
                // degenerate supports collapse every node onto one point
                if !axis.contains(&mapped) {
                    ref_axis.push(t);
                    axis.push(mapped);
                }
            }
            ref_axes.push(ref_axis);
            axes.push(axis);
        }

        let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = sizes.iter().product();
        let mut point_map = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut coords = vec![0.0; dim];
            for n in (0..dim).rev() {
                coords[n] = axes[n][rem % sizes[n]];
                rem /= sizes[n];
            }
            let global = points
                .iter()
                .position(|p| {
                    p.iter()
                        .zip(&coords)
                        .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
                })
                .unwrap_or_else(|| {
                    points.push(coords.clone());
                    points.len() - 1
                });
            point_map.push(global);
        }

        tensor_grids.push(TensorGrid {
            levels: index.clone(),
            ref_axes,
            axes,
            point_map,
        });
    }

    Ok(SparseGrid {
        levels,
        coefficients,
        tensor_grids,
        points,
        marginals: marginals.to_vec(),
    })
}

impl SparseGrid {
    pub fn dim(&self) -> usize {
        self.levels.dim()
    }

    pub fn levels(&self) -> &MultiIndexSet {
        &self.levels
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn tensor_grids(&self) -> &[TensorGrid] {
        &self.tensor_grids
    }

    /// Deduplicated global collocation points.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Combination-weighted tensor Lagrange interpolation of per-point
    /// `values` at `y`. Linear in the values; reproduces stored values at
    /// collocation points.
    pub fn interpolate<T: LinearValue>(&self, values: &[T], y: &[f64]) -> T {
        assert_eq!(
            values.len(),
            self.points.len(),
            "one value per collocation point required"
        );
        assert_eq!(y.len(), self.dim(), "evaluation point dimension mismatch");
        let mut acc = values[0].zeros_like();
        for (grid, &c) in self.tensor_grids.iter().zip(&self.coefficients) {
            if c == 0 {
                continue;
            }
            let basis: Vec<Vec<f64>> = grid
                .axes
                .iter()
                .zip(y)
                .map(|(axis, &yn)| lagrange_basis(axis, yn))
                .collect();
            let sizes: Vec<usize> = grid.axes.iter().map(|a| a.len()).collect();
            for (flat, &global) in grid.point_map.iter().enumerate() {
                let mut rem = flat;
                let mut weight = 1.0;
                for n in (0..sizes.len()).rev() {
                    weight *= basis[n][rem % sizes[n]];
                    rem /= sizes[n];
                }
                acc.axpy(c as f64 * weight, &values[global]);
            }
        }
        acc
    }
}

/// Values of the 1D Lagrange cardinal functions for `nodes` at `x`.
fn lagrange_basis(nodes: &[f64], x: f64) -> Vec<f64> {
    let k = nodes.len();
    let mut basis = vec![1.0; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                basis[i] *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
    }
    basis
}
