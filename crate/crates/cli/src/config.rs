//! JSON run configuration: one document drives every subcommand. Unknown
//! keys are rejected and all module preconditions are checked before any
//! compute starts.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use acuq::continuation::ContinuationSettings;
use acuq::spatial::{FieldKind, Marginal, RandomFieldModel, SpatialGrid};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub field: FieldConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    /// Sparse-grid level budget for the surrogate pipeline.
    #[serde(default = "default_w")]
    pub w: usize,
    /// 1-based bifurcation branch indices to study.
    pub branches: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Abscissa for the point-evaluation observable; defaults to the
    /// domain midpoint.
    #[serde(default)]
    pub observable_point: Option<f64>,
    /// Append the full mean state to the per-branch mean files.
    #[serde(default)]
    pub write_states: bool,
    /// Settings of the `converge` subcommand.
    #[serde(default)]
    pub converge: Option<ConvergeConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    pub marginals: Vec<Marginal>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_ds")]
    pub ds: f64,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default)]
    pub max_step_halvings: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            xi: default_xi(),
            ds: default_ds(),
            s_max: default_s_max(),
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            max_step_halvings: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub w_list: Vec<usize>,
    pub w_ref: usize,
    #[serde(default = "default_s_probe")]
    pub s_probe: f64,
    /// Monte Carlo samples for the RMS errors; falls back to `samples`.
    #[serde(default)]
    pub n_mc: Option<usize>,
}

fn default_w() -> usize {
    3
}
fn default_samples() -> usize {
    10_000
}
fn default_seed() -> u64 {
    42
}
fn default_xi() -> f64 {
    0.5
}
fn default_ds() -> f64 {
    0.05
}
fn default_s_max() -> f64 {
    5.0
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max_iter() -> usize {
    10
}
fn default_s_probe() -> f64 {
    5.0
}

/// Everything the commands need, validated and converted to core types.
pub struct Study {
    pub grid: SpatialGrid,
    pub field: RandomFieldModel,
    pub settings: ContinuationSettings,
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Validate against the module preconditions and build the core objects.
    pub fn into_study(self, out_override: Option<PathBuf>, seed_override: Option<u64>) -> Result<Study, String> {
        let mut config = self;
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        let grid = SpatialGrid::new(config.domain.a, config.domain.b, config.domain.m)
            .map_err(|e| e.to_string())?;
        let field = RandomFieldModel::new(config.field.kind, config.field.marginals.clone())
            .map_err(|e| e.to_string())?;

        let c = &config.continuation;
        let n_steps_f = c.s_max / c.ds;
        let n_steps = n_steps_f.round() as usize;
        if c.s_max < 0.0 || (n_steps as f64 * c.ds - c.s_max).abs() > 1e-9 {
            return Err(format!(
                "s_max = {} is not a multiple of ds = {}",
                c.s_max, c.ds
            ));
        }
        let settings = ContinuationSettings {
            xi: c.xi,
            ds: c.ds,
            n_steps,
            newton_tol: c.newton_tol,
            newton_max_iter: c.newton_max_iter,
            max_step_halvings: c.max_step_halvings,
        };
        settings.validate().map_err(|e| e.to_string())?;

        if field.kind() == FieldKind::CosineHeterogeneous
            && field
                .marginals()
                .iter()
                .any(|m| !matches!(m, Marginal::Uniform { .. }))
        {
            return Err(
                "the surrogate pipeline needs uniform marginals; truncated Gaussians \
                 are supported in the homogeneous analytic path only"
                    .into(),
            );
        }
        if config.branches.is_empty() {
            return Err("branches must list at least one branch index".into());
        }
        for &i in &config.branches {
            if i == 0 || i > grid.m() {
                return Err(format!(
                    "branch index {i} out of range 1..={}",
                    grid.m()
                ));
            }
        }
        if config.samples < 2 {
            return Err("samples must be at least 2".into());
        }
        if let Some(point) = config.observable_point {
            if point < grid.a() || point > grid.b() {
                return Err(format!(
                    "observable_point {point} outside the domain [{}, {}]",
                    grid.a(),
                    grid.b()
                ));
            }
        }
        if let Some(conv) = &config.converge {
            if conv.w_list.is_empty() {
                return Err("converge.w_list must not be empty".into());
            }
            if conv.w_ref <= *conv.w_list.iter().max().unwrap() {
                return Err("converge.w_ref must exceed every entry of w_list".into());
            }
        }

        let out_dir = out_override
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Study {
            grid,
            field,
            settings,
            config,
            out_dir,
        })
    }
}

impl Study {
    pub fn observable_point(&self) -> f64 {
        self.config
            .observable_point
            .unwrap_or_else(|| 0.5 * (self.grid.a() + self.grid.b()))
    }
}
