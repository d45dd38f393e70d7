//! Orthonormal product-Legendre expansions: conversion of sparse-grid
//! interpolants to gPC form, moment extraction, evaluation, and sampling.
//!
//! Coefficients are obtained non-intrusively: each tensor interpolant of the
//! combination is re-expressed in the orthonormal basis by solving small
//! generalized Vandermonde systems along every axis, and the results are
//! accumulated into the induced degree set with the combination weights.

use rand::SeedableRng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix, LinearValue};
use crate::sparse_grid::{IndexKind, MultiIndexSet, SparseGrid};
use crate::spatial::Marginal;

/// Legendre polynomial of degree `degree`, normalized so that
/// `int_{-1}^{1} psi_a(t) psi_b(t) dt / 2 = delta_ab`.
pub fn legendre_orthonormal(degree: usize, t: f64) -> f64 {
    legendre_orthonormal_table(degree, t)[degree]
}

/// Values of all orthonormal Legendre polynomials up to `max_degree` at `t`,
/// from the three-term recurrence.
pub fn legendre_orthonormal_table(max_degree: usize, t: f64) -> Vec<f64> {
    let mut table = Vec::with_capacity(max_degree + 1);
    let mut prev = 1.0; // P_0
    table.push(1.0);
    if max_degree == 0 {
        return table;
    }
    let mut current = t; // P_1
    table.push(3.0_f64.sqrt() * current);
    for k in 1..max_degree {
        let next = ((2 * k + 1) as f64 * t * current - k as f64 * prev) / (k + 1) as f64;
        prev = current;
        current = next;
        table.push(((2 * (k + 1) + 1) as f64).sqrt() * current);
    }
    table
}

/// Degree set induced by a level set and a level-to-knots function:
/// the union of the boxes `{alpha : alpha_n <= m(i_n) - 1}` over the levels.
pub fn induced_lambda(
    levels: &MultiIndexSet,
    level_to_knots: impl Fn(usize) -> usize,
) -> MultiIndexSet {
    assert_eq!(levels.kind(), IndexKind::Levels, "need a level set");
    let dim = levels.dim();
    let mut degrees = std::collections::BTreeSet::new();
    for index in levels.iter() {
        let caps: Vec<usize> = index.iter().map(|&i| level_to_knots(i) - 1).collect();
        let mut alpha = vec![0usize; dim];
        loop {
            degrees.insert(alpha.clone());
            // advance the odometer
            let mut n = dim;
            loop {
                if n == 0 {
                    break;
                }
                n -= 1;
                if alpha[n] < caps[n] {
                    alpha[n] += 1;
                    for entry in alpha.iter_mut().skip(n + 1) {
                        *entry = 0;
                    }
                    break;
                }
                if n == 0 {
                    alpha.clear();
                    break;
                }
            }
            if alpha.is_empty() {
                break;
            }
        }
    }
    MultiIndexSet::new(dim, IndexKind::Degrees, degrees.into_iter().collect())
        .expect("valid degree set")
}

/// Truncated gPC expansion over an orthonormal product-Legendre basis.
///
/// Coefficients may be scalars or whole state vectors; they are aligned with
/// the canonical (lexicographic) order of the degree set.
#[derive(Debug, Clone, PartialEq)]
pub struct GpcExpansion<T> {
    dim: usize,
    marginals: Vec<Marginal>,
    lambda: MultiIndexSet,
    coeffs: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct GpcExpansionRepr<T> {
    #[serde(rename = "N")]
    n: usize,
    marginals: Vec<Marginal>,
    lambda: Vec<Vec<usize>>,
    coeffs: Vec<T>,
}

impl<T: LinearValue> GpcExpansion<T> {
    pub fn new(marginals: Vec<Marginal>, lambda: MultiIndexSet, coeffs: Vec<T>) -> Result<Self> {
        if lambda.kind() != IndexKind::Degrees {
            return Err(Error::InvalidExpansion("need a degree set".into()));
        }
        if marginals.len() != lambda.dim() {
            return Err(Error::InvalidExpansion(format!(
                "{} marginals for dimension {}",
                marginals.len(),
                lambda.dim()
            )));
        }
        if coeffs.len() != lambda.len() {
            return Err(Error::InvalidExpansion(format!(
                "{} coefficients for {} degree indices",
                coeffs.len(),
                lambda.len()
            )));
        }
        lambda.check_downward_closed()?;
        Ok(Self {
            dim: lambda.dim(),
            marginals,
            lambda,
            coeffs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn lambda(&self) -> &MultiIndexSet {
        &self.lambda
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, degrees: &[usize]) -> Option<&T> {
        self.lambda.position(degrees).map(|pos| &self.coeffs[pos])
    }

    fn reference_coords(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::EvalOutOfSupport(y.to_vec()));
        }
        let mut t = Vec::with_capacity(self.dim);
        for (marginal, &yn) in self.marginals.iter().zip(y) {
            if !marginal.contains(yn) {
                return Err(Error::EvalOutOfSupport(y.to_vec()));
            }
            let (lo, hi) = marginal.support();
            if hi > lo {
                t.push((2.0 * (yn - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0));
            } else {
                // degenerate support: only degree zero can contribute
                t.push(0.0);
            }
        }
        Ok(t)
    }

    /// Evaluate the expansion at a point of the support. Terms are summed
    /// in canonical degree order, so the result is deterministic.
    pub fn eval(&self, y: &[f64]) -> Result<T> {
        let t = self.reference_coords(y)?;
        let max_degree: Vec<usize> = (0..self.dim)
            .map(|n| self.lambda.iter().map(|alpha| alpha[n]).max().unwrap_or(0))
            .collect();
        let tables: Vec<Vec<f64>> = (0..self.dim)
            .map(|n| legendre_orthonormal_table(max_degree[n], t[n]))
            .collect();
        let mut acc = self.coeffs[0].zeros_like();
        for (alpha, coeff) in self.lambda.iter().zip(&self.coeffs) {
            let mut weight = 1.0;
            for n in 0..self.dim {
                weight *= tables[n][alpha[n]];
            }
            acc.axpy(weight, coeff);
        }
        Ok(acc)
    }

    /// Expected value: the coefficient of the zero multi-index.
    pub fn mean(&self) -> T {
        let zero = vec![0usize; self.dim];
        let pos = self
            .lambda
            .position(&zero)
            .expect("downward-closed set contains the zero index");
        self.coeffs[pos].clone()
    }

    /// Variance from orthonormality: sum of squared coefficients over the
    /// nonzero indices (componentwise for vector values).
    pub fn variance(&self) -> T {
        let zero = vec![0usize; self.dim];
        let mut acc = self.coeffs[0].zeros_like();
        for (alpha, coeff) in self.lambda.iter().zip(&self.coeffs) {
            if alpha == &zero {
                continue;
            }
            coeff.accumulate_square(&mut acc);
        }
        acc
    }

    /// Evaluate the expansion at `count` draws from the product marginals.
    /// Reproducible for a fixed seed.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<T> {
        sample_inputs(&self.marginals, count, seed)
            .iter()
            .map(|y| self.eval(y).expect("draws lie inside the support"))
            .collect()
    }
}

impl<T: LinearValue + Serialize> GpcExpansion<T> {
    pub fn to_json(&self) -> Result<String> {
        let repr = GpcExpansionRepr {
            n: self.dim,
            marginals: self.marginals.clone(),
            lambda: self.lambda.indices().to_vec(),
            coeffs: self.coeffs.clone(),
        };
        Ok(serde_json::to_string(&repr)?)
    }
}

impl<T: LinearValue + DeserializeOwned> GpcExpansion<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: GpcExpansionRepr<T> = serde_json::from_str(text)?;
        let lambda = MultiIndexSet::new(repr.n, IndexKind::Degrees, repr.lambda)?;
        Self::new(repr.marginals, lambda, repr.coeffs)
    }
}

/// Deterministic draws from the product of the marginals.
pub fn sample_inputs(marginals: &[Marginal], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| marginals.iter().map(|m| m.sample(&mut rng)).collect())
        .collect()
}

/// Convert a sparse-grid interpolant into its equivalent gPC expansion.
///
/// The result evaluates to the same function as `sg.interpolate(values, .)`.
pub fn lagrange_to_gpc<T: LinearValue>(sg: &SparseGrid, values: &[T]) -> Result<GpcExpansion<T>> {
    assert_eq!(
        values.len(),
        sg.num_points(),
        "one value per collocation point required"
    );
    let dim = sg.dim();
    let lambda = induced_lambda(sg.levels(), crate::sparse_grid::level_to_knots);
    let zero = values[0].zeros_like();
    let mut coeffs = vec![zero; lambda.len()];

    for (grid, &c) in sg.tensor_grids().iter().zip(sg.coefficients()) {
        if c == 0 {
            continue;
        }
        let sizes: Vec<usize> = grid.ref_axes.iter().map(|a| a.len()).collect();
        let total: usize = sizes.iter().product();
        let mut data: Vec<T> = grid
            .point_map
            .iter()
            .map(|&global| values[global].clone())
            .collect();

        // spectral transform along every axis
        for n in 0..dim {
            let k = sizes[n];
            if k == 1 {
                continue; // the 1x1 Vandermonde is the identity
            }
            let mut vandermonde = DenseMatrix::zeros(k);
            for (row, &t) in grid.ref_axes[n].iter().enumerate() {
                let table = legendre_orthonormal_table(k - 1, t);
                for (col, &value) in table.iter().enumerate() {
                    vandermonde.set(row, col, value);
                }
            }
            let lu = lu_factor(vandermonde).ok_or(Error::SingularVandermonde {
                level: grid.levels[n],
            })?;
            let stride: usize = sizes[n + 1..].iter().product();
            let block = k * stride;
            for prefix in 0..(total / block) {
                for suffix in 0..stride {
                    let base = prefix * block + suffix;
                    let line: Vec<T> =
                        (0..k).map(|r| data[base + r * stride].clone()).collect();
                    for (r, value) in lu.solve_values(&line).into_iter().enumerate() {
                        data[base + r * stride] = value;
                    }
                }
            }
        }

        // accumulate local spectral coefficients into the global degree set
        for (flat, local) in data.iter().enumerate() {
            let mut rem = flat;
            let mut degrees = vec![0usize; dim];
            for n in (0..dim).rev() {
                degrees[n] = rem % sizes[n];
                rem /= sizes[n];
            }
            let slot = lambda
                .position(&degrees)
                .expect("induced degree set covers every local box");
            coeffs[slot].axpy(c as f64, local);
        }
    }

    GpcExpansion::new(sg.marginals().to_vec(), lambda, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse_grid::{build_sparse_grid, total_degree_levels, level_to_knots};
    use rand::Rng;

    // ---- Gauss-Legendre quadrature oracle (test-only) ----

    fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
        let mut prev = 1.0;
        let mut current = x;
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 1..n {
            let next = ((2 * k + 1) as f64 * x * current - k as f64 * prev) / (k + 1) as f64;
            prev = current;
            current = next;
        }
        let derivative = n as f64 * (x * current - prev) / (x * x - 1.0);
        (current, derivative)
    }

    fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            let mut x =
                (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            nodes[k] = x;
            weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    }

    #[test]
    fn low_degree_values() {
        for &t in &[-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert_eq!(legendre_orthonormal(0, t), 1.0);
            assert!((legendre_orthonormal(1, t) - 3.0_f64.sqrt() * t).abs() < 1e-15);
        }
        assert!((legendre_orthonormal(1, 1.0) - 3.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn first_degree_matches_gram_schmidt_oracle() {
        // Orthonormalize {1, t} against the uniform weight by quadrature:
        // psi_1 = (t - <t, 1>) / ||t - <t, 1>||, which is sqrt(3) t.
        let (nodes, weights) = gauss_legendre(16);
        let inner = |f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64| -> f64 {
            nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| 0.5 * w * f(x) * g(x))
                .sum()
        };
        let proj = inner(&|t| t, &|_| 1.0);
        let norm = inner(&|t| t - proj, &|t| t - proj).sqrt();
        for &t in &[-0.7, 0.1, 0.9] {
            let oracle = (t - proj) / norm;
            assert!((legendre_orthonormal(1, t) - oracle).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_is_orthonormal_under_quadrature() {
        let (nodes, weights) = gauss_legendre(64);
        for a in 0..=10usize {
            for b in 0..=10usize {
                let integral: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&x, &w)| {
                        0.5 * w * legendre_orthonormal(a, x) * legendre_orthonormal(b, x)
                    })
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((integral - want).abs() < 1e-13, "({a},{b}): {integral}");
            }
        }
    }

    #[test]
    fn induced_lambda_cardinalities() {
        let single = MultiIndexSet::new(2, IndexKind::Levels, vec![vec![1, 1]]).unwrap();
        let lambda = induced_lambda(&single, level_to_knots);
        assert_eq!(lambda.indices(), &[vec![0, 0]]);

        let w3 = induced_lambda(&total_degree_levels(2, 3), level_to_knots);
        assert_eq!(w3.len(), 25);

        let w12 = induced_lambda(&total_degree_levels(2, 12), level_to_knots);
        assert_eq!(w12.len(), 313);
        let max_total = w12.iter().map(|a| a[0] + a[1]).max().unwrap();
        assert_eq!(max_total, 24);

        // oracle: alpha belongs iff sum_n ceil(alpha_n / 2) <= w
        for &(w, set) in &[(3usize, &w3), (12usize, &w12)] {
            let mut count = 0;
            for a0 in 0..=(2 * w) {
                for a1 in 0..=(2 * w) {
                    if a0.div_ceil(2) + a1.div_ceil(2) <= w {
                        count += 1;
                        assert!(set.contains(&[a0, a1]), "w={w} missing ({a0},{a1})");
                    }
                }
            }
            assert_eq!(count, set.len(), "w={w}");
        }
    }

    fn unit_square() -> Vec<Marginal> {
        vec![
            Marginal::Uniform { lo: -1.0, hi: 1.0 },
            Marginal::Uniform { lo: -1.0, hi: 1.0 },
        ]
    }

    #[test]
    fn constant_values_give_constant_expansion() {
        let grid = build_sparse_grid(2, 3, &unit_square()).unwrap();
        let values = vec![4.25; grid.num_points()];
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        assert!((expansion.mean() - 4.25).abs() < 1e-12);
        for (alpha, coeff) in expansion.lambda().iter().zip(expansion.coeffs()) {
            if alpha != &vec![0, 0] {
                assert!(coeff.abs() < 1e-12, "{alpha:?}: {coeff}");
            }
        }
    }

    #[test]
    fn linear_coordinate_has_single_coefficient() {
        let grid = build_sparse_grid(2, 3, &unit_square()).unwrap();
        let values: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        // t = (1/sqrt(3)) psi_1(t)
        let want = 1.0 / 3.0_f64.sqrt();
        assert!((expansion.coeff(&[1, 0]).unwrap() - want).abs() < 1e-13);
        for (alpha, coeff) in expansion.lambda().iter().zip(expansion.coeffs()) {
            if alpha != &vec![1, 0] {
                assert!(coeff.abs() < 1e-12, "{alpha:?}: {coeff}");
            }
        }
        assert!((expansion.mean() - 0.0).abs() < 1e-13);
        assert!((expansion.variance() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn expansion_reproduces_the_interpolant() {
        let grid = build_sparse_grid(2, 3, &unit_square()).unwrap();
        let f = |y: &[f64]| y[0].exp() * y[1].cos();
        let values: Vec<f64> = grid.points().iter().map(|p| f(p)).collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let y = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
            let direct = grid.interpolate(&values, &y);
            let spectral = expansion.eval(&y).unwrap();
            worst = worst.max((direct - spectral).abs());
        }
        assert!(worst <= 1e-10, "max |interp - gpc| = {worst:e}");
        for point in grid.points() {
            let spectral = expansion.eval(point).unwrap();
            let stored = grid.interpolate(&values, point);
            assert!((spectral - stored).abs() <= 1e-10);
        }
    }

    #[test]
    fn polynomials_inside_lambda_are_exact() {
        let grid = build_sparse_grid(2, 3, &unit_square()).unwrap();
        let f = |y: &[f64]| y[0].powi(3) * y[1].powi(2) - 0.5 * y[1].powi(4) + 2.0;
        let values: Vec<f64> = grid.points().iter().map(|p| f(p)).collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let y = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
            let got = expansion.eval(&y).unwrap();
            assert!((got - f(&y)).abs() < 1e-12, "at {y:?}");
        }
    }

    #[test]
    fn eval_rejects_points_outside_support() {
        let grid = build_sparse_grid(2, 1, &unit_square()).unwrap();
        let values = vec![1.0; grid.num_points()];
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        assert!(matches!(
            expansion.eval(&[1.5, 0.0]),
            Err(Error::EvalOutOfSupport(_))
        ));
    }

    #[test]
    fn moments_match_monte_carlo() {
        let grid = build_sparse_grid(2, 3, &unit_square()).unwrap();
        let f = |y: &[f64]| y[0].exp() * y[1].cos();
        let values: Vec<f64> = grid.points().iter().map(|p| f(p)).collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();

        let n = 1_000_000usize;
        let samples = expansion.sample(n, 99);
        let mc_mean = samples.iter().sum::<f64>() / n as f64;
        let mc_var = samples.iter().map(|s| (s - mc_mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let mean_se = (mc_var / n as f64).sqrt();
        assert!(
            (expansion.mean() - mc_mean).abs() < 3.0 * mean_se,
            "mean {} vs MC {} (se {})",
            expansion.mean(),
            mc_mean,
            mean_se
        );
        // standard error of the sample variance from the fourth moment
        let m4 = samples.iter().map(|s| (s - mc_mean).powi(4)).sum::<f64>() / n as f64;
        let var_se = ((m4 - mc_var * mc_var) / n as f64).sqrt();
        assert!(
            (expansion.variance() - mc_var).abs() < 3.0 * var_se,
            "variance {} vs MC {} (se {})",
            expansion.variance(),
            mc_var,
            var_se
        );
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let grid = build_sparse_grid(2, 2, &unit_square()).unwrap();
        let values: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        let a = expansion.sample(500, 1234);
        let b = expansion.sample(500, 1234);
        assert_eq!(a, b);

        let n = 10_000usize;
        let draws = expansion.sample(n, 7);
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sigma = (1.0_f64 / 3.0).sqrt();
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");

        let constant = GpcExpansion::new(
            unit_square(),
            MultiIndexSet::new(2, IndexKind::Degrees, vec![vec![0, 0]]).unwrap(),
            vec![2.5],
        )
        .unwrap();
        assert!(constant.sample(10, 3).iter().all(|&v| v == 2.5));
        assert_eq!(constant.variance(), 0.0);
    }

    #[test]
    fn zero_expansion_evaluates_to_zero() {
        let zero = GpcExpansion::new(
            unit_square(),
            MultiIndexSet::new(2, IndexKind::Degrees, vec![vec![0, 0]]).unwrap(),
            vec![0.0],
        )
        .unwrap();
        assert_eq!(zero.eval(&[0.2, -0.3]).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let grid = build_sparse_grid(2, 2, &unit_square()).unwrap();
        let values: Vec<f64> = grid.points().iter().map(|p| p[0].exp() + p[1]).collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        let text = expansion.to_json().unwrap();
        let back: GpcExpansion<f64> = GpcExpansion::from_json(&text).unwrap();
        assert_eq!(expansion, back);
        assert_eq!(text, back.to_json().unwrap());
        // the document has the agreed shape
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(doc.get("N").is_some());
        assert!(doc.get("marginals").is_some());
        assert!(doc.get("lambda").is_some());
        assert!(doc.get("coeffs").is_some());
    }

    #[test]
    fn vector_valued_expansions_serialize_too() {
        let grid = build_sparse_grid(2, 1, &unit_square()).unwrap();
        let values: Vec<Vec<f64>> = grid
            .points()
            .iter()
            .map(|p| vec![p[0] + 1.0, p[1] * 2.0])
            .collect();
        let expansion = lagrange_to_gpc(&grid, &values).unwrap();
        let text = expansion.to_json().unwrap();
        let back: GpcExpansion<Vec<f64>> = GpcExpansion::from_json(&text).unwrap();
        assert_eq!(expansion, back);
    }

    #[test]
    fn vector_valued_coefficients_match_componentwise_fits() {
        let grid = build_sparse_grid(2, 2, &unit_square()).unwrap();
        let vector_values: Vec<Vec<f64>> = grid
            .points()
            .iter()
            .map(|p| vec![p[0], p[0] * p[1], 1.0])
            .collect();
        let vector_expansion = lagrange_to_gpc(&grid, &vector_values).unwrap();
        for component in 0..3 {
            let scalar_values: Vec<f64> =
                vector_values.iter().map(|v| v[component]).collect();
            let scalar_expansion = lagrange_to_gpc(&grid, &scalar_values).unwrap();
            for (vc, sc) in vector_expansion.coeffs().iter().zip(scalar_expansion.coeffs()) {
                assert!((vc[component] - sc).abs() < 1e-13);
            }
            let y = [0.4, -0.7];
            let vec_eval = vector_expansion.eval(&y).unwrap();
            let scalar_eval = scalar_expansion.eval(&y).unwrap();
            assert!((vec_eval[component] - scalar_eval).abs() < 1e-13);
        }
    }
}
