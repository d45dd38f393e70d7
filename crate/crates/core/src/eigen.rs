//! Symmetric tridiagonal eigensolver and random bifurcation points.
//!
//! The bifurcation points of the trivial equilibrium are the negated
//! eigenvalues of K + G(y), so everything here reduces to a full spectral
//! decomposition of a symmetric tridiagonal matrix. We use the classic
//! implicit-shift QL iteration with accumulated rotations; for the problem
//! sizes at hand (m up to a few hundred) the O(m^2) cost per sweep is ample.

use crate::error::{Error, Result};
use crate::linalg::{norm2, SymTridiag};
use crate::spatial::{DiscreteSystem, RandomFieldModel, SpatialGrid};

/// Full spectrum of a symmetric tridiagonal matrix.
///
/// Eigenvalues are sorted descending (rightmost first); `eigenvectors[j]`
/// is the unit eigenvector for `eigenvalues[j]`, with its
/// largest-magnitude entry made positive.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

const MAX_QL_SWEEPS: usize = 50;

/// Implicit-shift QL iteration with eigenvector accumulation.
pub fn eig_sym_tridiag(t: &SymTridiag) -> Result<Spectrum> {
    let n = t.dim();
    let mut d = t.diag.clone();
    // padded off-diagonal, e[n-1] is scratch
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&t.off);

    // columns of the rotation product, initialized to the identity
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut col = vec![0.0; n];
            col[j] = 1.0;
            col
        })
        .collect();

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            // look for a negligible off-diagonal element to split at
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence {
                    index: l,
                    max_iter: MAX_QL_SWEEPS,
                });
            }

            // Wilkinson-style shift from the leading 2x2 block
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;

            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // rotation annihilated prematurely; recover and restart
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                let (left, right) = z.split_at_mut(i + 1);
                let col_i = &mut left[i];
                let col_next = &mut right[0];
                for k in 0..n {
                    f = col_next[k];
                    col_next[k] = s * col_i[k] + c * f;
                    col_i[k] = c * col_i[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort descending; stable in the original index on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));

    let eigenvalues: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| {
            let mut v = z[j].clone();
            fix_sign(&mut v);
            v
        })
        .collect();

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Make the largest-magnitude entry positive; on an exact tie the lowest
/// index wins.
fn fix_sign(v: &mut [f64]) {
    let mut arg = 0;
    let mut best = v[0].abs();
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x.abs() > best {
            best = x.abs();
            arg = k;
        }
    }
    if v[arg] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// A bifurcation point on the trivial equilibrium branch together with the
/// kernel direction the nontrivial branch departs along.
#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    /// 1-based branch index; index 1 is the rightmost eigenvalue.
    pub index: usize,
    /// Bifurcation value p* = -lambda_i of K + G(y).
    pub p_star: f64,
    /// Unit kernel eigenvector, sign-fixed.
    pub direction: Vec<f64>,
    /// The realization this point belongs to.
    pub y: Vec<f64>,
}

impl BifurcationPoint {
    /// The same point with negated kernel direction; seeds the mirror branch.
    pub fn mirrored(&self) -> Self {
        Self {
            index: self.index,
            p_star: self.p_star,
            direction: self.direction.iter().map(|v| -v).collect(),
            y: self.y.clone(),
        }
    }
}

/// First `k` bifurcation points of the trivial branch for the realization `y`.
pub fn bifurcation_points(
    grid: &SpatialGrid,
    field: &RandomFieldModel,
    y: &[f64],
    k: usize,
) -> Result<Vec<BifurcationPoint>> {
    assert!(
        k <= grid.m(),
        "requested {k} bifurcation points but the discrete operator has only {} eigenvalues",
        grid.m()
    );
    let system = DiscreteSystem::new(grid.clone(), field.clone(), y.to_vec())?;
    let operator = system.jacobian(0.0, &vec![0.0; grid.m()]);
    let spectrum = eig_sym_tridiag(&operator)?;
    Ok((0..k)
        .map(|j| {
            let mut direction = spectrum.eigenvectors[j].clone();
            let norm = norm2(&direction);
            for v in direction.iter_mut() {
                *v /= norm;
            }
            BifurcationPoint {
                index: j + 1,
                p_star: -spectrum.eigenvalues[j],
                direction,
                y: y.to_vec(),
            }
        })
        .collect())
}

/// Closed-form spectrum of the finite-difference Laplacian on [a, b]:
/// lambda_j = -(4/h^2) sin^2(j pi / (2(m+1))).
pub fn fd_laplacian_eigenvalue(grid: &SpatialGrid, j: usize) -> f64 {
    let h = grid.h();
    let m = grid.m();
    let arg = j as f64 * std::f64::consts::PI / (2.0 * (m as f64 + 1.0));
    -(4.0 / (h * h)) * arg.sin().powi(2)
}
