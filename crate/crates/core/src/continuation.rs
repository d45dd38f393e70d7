//! Pseudo-arclength predictor-corrector continuation.
//!
//! Branches are parametrized by a fixed arclength step shared across all
//! realizations, so that curves traced at different collocation points can
//! be recombined sample-by-sample. The arclength metric weights parameter
//! and state with `1-xi` and `xi`; the corrector solves the equilibrium
//! equations together with the hyperplane constraint through a dense
//! bordered LU of size m+1.

use crate::error::{Error, Result};
use crate::linalg::{dot, lu_factor, norm2, DenseMatrix, SymTridiag};
use crate::spatial::DiscreteSystem;

use crate::eigen::BifurcationPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    /// Weight of the state block in the arclength inner product, in (0, 1).
    pub xi: f64,
    /// Arclength step.
    pub ds: f64,
    /// Number of steps; the branch ends at S = n_steps * ds.
    pub n_steps: usize,
    /// Euclidean residual norm required of every accepted point.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Retries with halved sub-steps inside one grid interval. Zero by
    /// default: halving sub-steps keeps the shared s-grid intact but a
    /// failing realization usually means the whole study should be re-run
    /// with a finer step (see [`ContinuationSettings::refined`]).
    pub max_step_halvings: usize,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            xi: 0.5,
            ds: 0.05,
            n_steps: 100,
            newton_tol: 1e-10,
            newton_max_iter: 10,
            max_step_halvings: 0,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidStudy(format!(
                "arclength weight xi = {} must lie in (0, 1)",
                self.xi
            )));
        }
        if !self.ds.is_finite() || self.ds <= 0.0 {
            return Err(Error::InvalidStudy(format!(
                "arclength step ds = {} must be positive",
                self.ds
            )));
        }
        if !self.newton_tol.is_finite() || self.newton_tol <= 0.0 {
            return Err(Error::InvalidStudy("newton_tol must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidStudy("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Arclength endpoint S = n_steps * ds.
    pub fn arclength_end(&self) -> f64 {
        self.n_steps as f64 * self.ds
    }

    /// The same study with a uniformly finer step (all realizations must be
    /// re-traced with it to keep the shared parametrization).
    pub fn refined(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        Self {
            ds: self.ds / factor as f64,
            n_steps: self.n_steps * factor,
            ..*self
        }
    }
}

/// Tangent (dp, du) of a branch in the xi-weighted metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub dp: f64,
    pub du: Vec<f64>,
}

impl Tangent {
    pub fn xi_dot(&self, other: &Tangent, xi: f64) -> f64 {
        (1.0 - xi) * self.dp * other.dp + xi * dot(&self.du, &other.du)
    }

    pub fn xi_norm(&self, xi: f64) -> f64 {
        self.xi_dot(self, xi).sqrt()
    }

    fn normalized(mut self, xi: f64) -> Self {
        let n = self.xi_norm(xi);
        self.dp /= n;
        for v in self.du.iter_mut() {
            *v /= n;
        }
        self
    }
}

/// An equilibrium curve sampled at the shared arclength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub s_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub branch_index: usize,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }
}

/// Assemble the bordered matrix
/// `[ J, dF/dp ; xi * t.du, (1 - xi) * t.dp ]`
/// with unknowns ordered (u, p).
fn bordered_matrix(jac: &SymTridiag, dp_col: &[f64], border: &Tangent, xi: f64) -> DenseMatrix {
    let m = jac.dim();
    let mut a = DenseMatrix::zeros(m + 1);
    for i in 0..m {
        a.set(i, i, jac.diag[i]);
        if i + 1 < m {
            a.set(i, i + 1, jac.off[i]);
            a.set(i + 1, i, jac.off[i]);
        }
        a.set(i, m, dp_col[i]);
        a.set(m, i, xi * border.du[i]);
    }
    a.set(m, m, (1.0 - xi) * border.dp);
    a
}

/// Unit tangent at a branch point, oriented along `prev`.
///
/// Solves the bordered system whose last row enforces
/// `<t, prev>_xi = 1`, then normalizes in the xi-metric. At a bifurcation
/// point on the trivial branch (u = 0, prev.dp = 0) the bordered matrix is
/// structurally singular and the tangent is the kernel direction itself,
/// which is exactly what `prev` supplies there.
pub fn tangent(system: &DiscreteSystem, p: f64, u: &[f64], prev: &Tangent, xi: f64) -> Result<Tangent> {
    assert_eq!(u.len(), system.dim());
    assert_eq!(prev.du.len(), system.dim());
    if u.iter().all(|&v| v == 0.0) && prev.dp == 0.0 {
        return Ok(Tangent {
            dp: 0.0,
            du: prev.du.clone(),
        }
        .normalized(xi));
    }
    let jac = system.jacobian(p, u);
    let dp_col = system.residual_dp(u);
    let a = bordered_matrix(&jac, &dp_col, prev, xi);
    let lu = lu_factor(a).ok_or(Error::SingularBordered)?;
    let mut rhs = vec![0.0; system.dim() + 1];
    rhs[system.dim()] = 1.0;
    let x = lu.solve(&rhs);
    let t = Tangent {
        dp: x[system.dim()],
        du: x[..system.dim()].to_vec(),
    }
    .normalized(xi);
    // the constraint already forces positive orientation; guard anyway
    if t.xi_dot(prev, xi) < 0.0 {
        Ok(Tangent {
            dp: -t.dp,
            du: t.du.iter().map(|v| -v).collect(),
        })
    } else {
        Ok(t)
    }
}

/// Corrected point together with the Newton iteration history.
#[derive(Debug, Clone)]
pub struct CorrectedPoint {
    pub p: f64,
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Norm of the augmented residual (equations plus constraint) at each
    /// visited iterate, including the accepted one.
    pub residual_norms: Vec<f64>,
}

/// Newton correction onto the branch within the hyperplane
/// `(1-xi) dp0 (p - p0) + xi <du0, u - u0> = s_offset`.
#[allow(clippy::too_many_arguments)]
pub fn newton_correct(
    system: &DiscreteSystem,
    guess: (f64, &[f64]),
    anchor: (f64, &[f64]),
    anchor_tangent: &Tangent,
    s_offset: f64,
    settings: &ContinuationSettings,
) -> Result<CorrectedPoint> {
    let m = system.dim();
    let xi = settings.xi;
    let (mut p, mut u) = (guess.0, guess.1.to_vec());
    let (p0, u0) = anchor;
    let mut history = Vec::new();

    for iteration in 0..=settings.newton_max_iter {
        let r = system.residual(p, &u);
        let du_gap: Vec<f64> = u.iter().zip(u0).map(|(a, b)| a - b).collect();
        let mu = (1.0 - xi) * anchor_tangent.dp * (p - p0) + xi * dot(&anchor_tangent.du, &du_gap)
            - s_offset;
        let res_norm = (dot(&r, &r) + mu * mu).sqrt();
        history.push(res_norm);
        if norm2(&r) <= settings.newton_tol && mu.abs() <= settings.newton_tol {
            return Ok(CorrectedPoint {
                p,
                u,
                iterations: iteration,
                residual_norms: history,
            });
        }
        if iteration == settings.newton_max_iter {
            break;
        }
        let jac = system.jacobian(p, &u);
        let dp_col = system.residual_dp(&u);
        let a = bordered_matrix(&jac, &dp_col, anchor_tangent, xi);
        let lu = lu_factor(a).ok_or(Error::SingularBordered)?;
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        rhs.push(-mu);
        let delta = lu.solve(&rhs);
        for j in 0..m {
            u[j] += delta[j];
        }
        p += delta[m];
    }

    Err(Error::CorrectorFailed {
        residual: *history.last().expect("at least one iterate"),
        iterations: settings.newton_max_iter,
    })
}

/// Trace the nontrivial branch emerging at `bif` over the fixed arclength
/// grid `0, ds, ..., n_steps * ds`.
///
/// The first predictor leaves the trivial branch along the kernel direction;
/// no correction happens at s = 0 where the bordered system is singular.
/// On a failed step the interval is retried with halved sub-steps (keeping
/// the recorded samples on the shared grid) up to `max_step_halvings` times,
/// after which the error carries the partial branch.
pub fn trace_branch(
    system: &DiscreteSystem,
    bif: &BifurcationPoint,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    settings.validate()?;
    let m = system.dim();
    assert_eq!(bif.direction.len(), m, "kernel direction does not match grid");
    assert_eq!(
        bif.y,
        system.realization(),
        "bifurcation point belongs to a different realization"
    );

    let s_values: Vec<f64> = (0..=settings.n_steps).map(|l| l as f64 * settings.ds).collect();
    let mut p_values = vec![bif.p_star];
    let mut states = vec![vec![0.0; m]];

    let seed = Tangent {
        dp: 0.0,
        du: bif.direction.clone(),
    };
    let mut current_tangent = tangent(system, bif.p_star, &states[0], &seed, settings.xi)?;

    for step in 1..=settings.n_steps {
        let mut accepted: Option<(f64, Vec<f64>, Tangent)> = None;
        let mut last_error = None;

        'halving: for halving in 0..=settings.max_step_halvings {
            let substeps = 1usize << halving;
            let sub_ds = settings.ds / substeps as f64;
            let mut p = p_values[step - 1];
            let mut u = states[step - 1].clone();
            let mut t = current_tangent.clone();

            for _ in 0..substeps {
                let guess_u: Vec<f64> =
                    u.iter().zip(&t.du).map(|(a, b)| a + sub_ds * b).collect();
                let guess_p = p + sub_ds * t.dp;
                match newton_correct(system, (guess_p, &guess_u), (p, &u), &t, sub_ds, settings)
                    .and_then(|point| {
                        let next_t = tangent(system, point.p, &point.u, &t, settings.xi)?;
                        Ok((point, next_t))
                    }) {
                    Ok((point, next_t)) => {
                        p = point.p;
                        u = point.u;
                        t = next_t;
                    }
                    Err(err) => {
                        last_error = Some(err);
                        continue 'halving;
                    }
                }
            }
            accepted = Some((p, u, t));
            break;
        }

        match accepted {
            Some((p, u, t)) => {
                p_values.push(p);
                states.push(u);
                current_tangent = t;
            }
            None => {
                let partial = Branch {
                    s_values: s_values[..step].to_vec(),
                    p_values,
                    states,
                    y: bif.y.clone(),
                    branch_index: bif.index,
                };
                let _ = last_error;
                return Err(Error::StepFailed {
                    failed_step: step,
                    halvings: settings.max_step_halvings,
                    partial: Box::new(partial),
                });
            }
        }
    }

    Ok(Branch {
        s_values,
        p_values,
        states,
        y: bif.y.clone(),
        branch_index: bif.index,
    })
}
