//! The three subcommands: bifurcation-point studies, branch studies, and
//! the surrogate convergence table. Homogeneous configurations take the
//! analytic path; heterogeneous ones go through the sparse-grid surrogates.

use acuq::continuation::Branch;
use acuq::eigen::bifurcation_points;
use acuq::gpc::{sample_inputs, GpcExpansion};
use acuq::spatial::{FieldKind, SpatialGrid};
use acuq::uq::{
    branch_observable, convergence_study, estimate_density, fit_bifpoint_surrogates,
    fit_branch_surrogate, homogeneous_bifpoint_pdf, homogeneous_branch_ensemble, linspace,
    reference_branch, BifurcationPointDistribution, DensityKind, DensitySettings, Observable,
};

use crate::config::Study;
use crate::output::{fmt_f64, CsvFile};
use crate::AppError;

/// Cap on the number of realization curves written to the per-branch
/// samples files; pdf and cdf estimates always use the full sample count.
const MAX_CURVE_SAMPLES: usize = 64;

const PDF_GRID: usize = 401;
const BRANCH_PDF_GRID: usize = 201;

/// At most this many arclength stations appear in branch_solutions.csv.
const SOLUTION_PROFILES: usize = 11;

pub fn cmd_bifpoints(study: &Study) -> Result<(), AppError> {
    std::fs::create_dir_all(&study.out_dir)?;
    let branches = &study.config.branches;
    let n = study.config.samples;

    let mut summary = CsvFile::new(&study.out_dir, "bifpoints.csv", &["i", "mean", "variance"]);
    let mut sample_header: Vec<String> = vec!["sample".into()];
    sample_header.extend(branches.iter().map(|i| format!("p_star_{i}")));
    let header_refs: Vec<&str> = sample_header.iter().map(|s| s.as_str()).collect();
    let mut samples_csv = CsvFile::new(&study.out_dir, "bifpoints_samples.csv", &header_refs);
    let mut pdf_csv = CsvFile::new(&study.out_dir, "bifpoints_pdf.csv", &["i", "value", "density"]);
    let mut cdf_csv = CsvFile::new(&study.out_dir, "bifpoints_cdf.csv", &["i", "value", "cdf"]);

    match study.field.kind() {
        FieldKind::Homogeneous => {
            let max_index = *branches.iter().max().unwrap();
            let points =
                bifurcation_points(&study.grid, &study.field, &[0.0], max_index)?;
            eprintln!("bifpoints: homogeneous analytic path, 1 eigenvalue solve");
            let dists: Vec<BifurcationPointDistribution> = branches
                .iter()
                .map(|&i| homogeneous_bifpoint_pdf(&study.field, -points[i - 1].p_star))
                .collect::<acuq::Result<_>>()?;

            for (&i, dist) in branches.iter().zip(&dists) {
                summary.row(&[i.to_string(), fmt_f64(dist.mean()), fmt_f64(dist.variance())]);
            }
            let draws = sample_inputs(study.field.marginals(), n, study.config.seed);
            for (k, y) in draws.iter().enumerate() {
                let mut fields = vec![k.to_string()];
                for &i in branches {
                    fields.push(fmt_f64(points[i - 1].p_star - y[0]));
                }
                samples_csv.row(&fields);
            }
            for (&i, dist) in branches.iter().zip(&dists) {
                let (lo, hi) = dist.support();
                for &value in &linspace(lo, hi, PDF_GRID) {
                    pdf_csv.row(&[i.to_string(), fmt_f64(value), fmt_f64(dist.pdf(value))]);
                    cdf_csv.row(&[i.to_string(), fmt_f64(value), fmt_f64(dist.cdf(value))]);
                }
            }
        }
        FieldKind::CosineHeterogeneous => {
            let surrogates =
                fit_bifpoint_surrogates(&study.grid, &study.field, study.config.w, branches)?;
            eprintln!(
                "bifpoints: {} collocation solves (w = {})",
                surrogates[0].num_collocation_points(),
                study.config.w
            );
            for surrogate in &surrogates {
                summary.row(&[
                    surrogate.branch_index.to_string(),
                    fmt_f64(surrogate.expansion.mean()),
                    fmt_f64(surrogate.expansion.variance()),
                ]);
            }
            let draws = sample_inputs(study.field.marginals(), n, study.config.seed);
            let per_branch: Vec<Vec<f64>> = surrogates
                .iter()
                .map(|s| {
                    draws
                        .iter()
                        .map(|y| s.expansion.eval(y).expect("draw in support"))
                        .collect()
                })
                .collect();
            for k in 0..n {
                let mut fields = vec![k.to_string()];
                for values in &per_branch {
                    fields.push(fmt_f64(values[k]));
                }
                samples_csv.row(&fields);
            }
            for (surrogate, values) in surrogates.iter().zip(&per_branch) {
                let i = surrogate.branch_index;
                let kde =
                    estimate_density(values, DensityKind::GaussianKde, &DensitySettings::default())?;
                for (&value, &density) in kde.grid.iter().zip(&kde.density) {
                    pdf_csv.row(&[i.to_string(), fmt_f64(value), fmt_f64(density)]);
                }
                let mut sorted = values.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for &value in &linspace(sorted[0], sorted[n - 1], PDF_GRID) {
                    let rank = sorted.partition_point(|&s| s <= value);
                    cdf_csv.row(&[
                        i.to_string(),
                        fmt_f64(value),
                        fmt_f64(rank as f64 / n as f64),
                    ]);
                }
            }
        }
    }

    summary.finish()?;
    samples_csv.finish()?;
    pdf_csv.finish()?;
    cdf_csv.finish()?;
    Ok(())
}

fn mean_file_header(m: usize, write_states: bool) -> Vec<String> {
    let mut header: Vec<String> = ["s", "p", "u_l2", "u_point"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if write_states {
        header.extend((1..=m).map(|j| format!("u_{j}")));
    }
    header
}

fn write_mean_file(
    study: &Study,
    branch_index: usize,
    s_values: &[f64],
    p_values: &[f64],
    states: &[Vec<f64>],
) -> Result<(), AppError> {
    let header = mean_file_header(study.grid.m(), study.config.write_states);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvFile::new(
        &study.out_dir,
        &format!("branch_{branch_index}_mean.csv"),
        &header_refs,
    );
    let l2 = branch_observable(&study.grid, states, Observable::L2Norm);
    let point = branch_observable(
        &study.grid,
        states,
        Observable::PointEval(study.observable_point()),
    );
    warn_if_snapped(study, &point);
    for l in 0..s_values.len() {
        let mut fields = vec![
            fmt_f64(s_values[l]),
            fmt_f64(p_values[l]),
            fmt_f64(l2.values[l]),
            fmt_f64(point.values[l]),
        ];
        if study.config.write_states {
            fields.extend(states[l].iter().map(|&v| fmt_f64(v)));
        }
        csv.row(&fields);
    }
    csv.finish()?;
    Ok(())
}

fn warn_if_snapped(study: &Study, curve: &acuq::uq::ObservableCurve) {
    if curve.snapped {
        if let Some(node) = curve.node_index {
            eprintln!(
                "branch: observable_point {} is not a grid node; using nearest node x = {}",
                study.observable_point(),
                study.grid.nodes()[node]
            );
        }
    }
}

fn solution_station_indices(len: usize) -> Vec<usize> {
    if len <= SOLUTION_PROFILES {
        return (0..len).collect();
    }
    let mut stations: Vec<usize> = (0..SOLUTION_PROFILES)
        .map(|k| k * (len - 1) / (SOLUTION_PROFILES - 1))
        .collect();
    stations.dedup();
    stations
}

pub fn cmd_branch(study: &Study) -> Result<(), AppError> {
    std::fs::create_dir_all(&study.out_dir)?;
    let n = study.config.samples;
    let n_curves = n.min(MAX_CURVE_SAMPLES);
    let x0 = study.observable_point();

    let mut solutions = CsvFile::new(
        &study.out_dir,
        "branch_solutions.csv",
        &["i", "s", "p", "x", "u"],
    );

    for &i in &study.config.branches {
        match study.field.kind() {
            FieldKind::Homogeneous => {
                let reference = reference_branch(&study.grid, &study.field, i, &study.settings)?;
                eprintln!("branch {i}: 1 continuation");
                write_mean_file(study, i, &reference.s_values, &reference.p_values, &reference.states)?;

                // realizations are exact shifts of the reference curve
                let draws = sample_inputs(study.field.marginals(), n_curves, study.config.seed);
                let ensemble = homogeneous_branch_ensemble(&reference, &study.field, &draws)?;
                write_samples_file(study, i, &ensemble)?;

                // pdf along the branch: the bifurcation-point density is
                // transported by the deterministic advance of the reference
                // curve; the state component is deterministic, so only the
                // parameter coordinate carries a density.
                let dist = homogeneous_bifpoint_pdf(&study.field, -reference.p_values[0])?;
                let mut pdf_csv = CsvFile::new(
                    &study.out_dir,
                    &format!("branch_{i}_pdf_s.csv"),
                    &["s", "quantity", "value", "density"],
                );
                let (lo, hi) = dist.support();
                for l in 0..reference.s_values.len() {
                    let advance = reference.p_values[l] - reference.p_values[0];
                    for &value in &linspace(lo + advance, hi + advance, BRANCH_PDF_GRID) {
                        pdf_csv.row(&[
                            fmt_f64(reference.s_values[l]),
                            "r".into(),
                            fmt_f64(value),
                            fmt_f64(dist.pdf(value - advance)),
                        ]);
                    }
                }
                pdf_csv.finish()?;

                write_solution_profiles(&mut solutions, &study.grid, i, &reference.s_values, &reference.p_values, &reference.states);
            }
            FieldKind::CosineHeterogeneous => {
                let surrogate =
                    fit_branch_surrogate(&study.grid, &study.field, study.config.w, i, &study.settings)?;
                eprintln!(
                    "branch {i}: {} continuations (w = {})",
                    surrogate.num_collocation_points(),
                    study.config.w
                );
                let (r_mean, u_mean) = surrogate.mean_curve();
                write_mean_file(study, i, &surrogate.s_values, &r_mean, &u_mean)?;

                // sampled realization curves through the surrogate
                let draws = sample_inputs(study.field.marginals(), n_curves, study.config.seed);
                let curves: Vec<Branch> = draws
                    .iter()
                    .map(|y| {
                        let p_values: Vec<f64> = surrogate
                            .r_expansions
                            .iter()
                            .map(|e| e.eval(y).expect("draw in support"))
                            .collect();
                        let states: Vec<Vec<f64>> = surrogate
                            .u_expansions
                            .iter()
                            .map(|e| e.eval(y).expect("draw in support"))
                            .collect();
                        Branch {
                            s_values: surrogate.s_values.clone(),
                            p_values,
                            states,
                            y: y.clone(),
                            branch_index: i,
                        }
                    })
                    .collect();
                write_samples_file(study, i, &curves)?;

                // densities of the parameter coordinate and of the point
                // observable along the branch, estimated from the surrogate
                let full_draws = sample_inputs(study.field.marginals(), n, study.config.seed);
                let (node, _) = study.grid.nearest_node(x0);
                let mut pdf_csv = CsvFile::new(
                    &study.out_dir,
                    &format!("branch_{i}_pdf_s.csv"),
                    &["s", "quantity", "value", "density"],
                );
                for l in 0..surrogate.s_values.len() {
                    let r_samples: Vec<f64> = full_draws
                        .iter()
                        .map(|y| surrogate.r_expansions[l].eval(y).expect("draw in support"))
                        .collect();
                    write_density_rows(&mut pdf_csv, surrogate.s_values[l], "r", &r_samples);

                    let point_expansion = component_expansion(&surrogate.u_expansions[l], node)?;
                    let u_samples: Vec<f64> = full_draws
                        .iter()
                        .map(|y| point_expansion.eval(y).expect("draw in support"))
                        .collect();
                    write_density_rows(&mut pdf_csv, surrogate.s_values[l], "u_point", &u_samples);
                }
                pdf_csv.finish()?;

                write_solution_profiles(&mut solutions, &study.grid, i, &surrogate.s_values, &r_mean, &u_mean);
            }
        }
    }
    solutions.finish()?;
    Ok(())
}

/// Scalar expansion of one state component of a vector-valued expansion.
fn component_expansion(
    expansion: &GpcExpansion<Vec<f64>>,
    component: usize,
) -> acuq::Result<GpcExpansion<f64>> {
    let coeffs: Vec<f64> = expansion.coeffs().iter().map(|c| c[component]).collect();
    GpcExpansion::new(
        expansion.marginals().to_vec(),
        expansion.lambda().clone(),
        coeffs,
    )
}

fn write_density_rows(csv: &mut CsvFile, s: f64, quantity: &str, samples: &[f64]) {
    let settings = DensitySettings {
        grid_size: BRANCH_PDF_GRID,
        ..Default::default()
    };
    // degenerate sections (the state vanishes identically at s = 0) carry
    // no density and are skipped
    if let Ok(estimate) = estimate_density(samples, DensityKind::GaussianKde, &settings) {
        for (&value, &density) in estimate.grid.iter().zip(&estimate.density) {
            csv.row(&[fmt_f64(s), quantity.into(), fmt_f64(value), fmt_f64(density)]);
        }
    }
}

fn write_samples_file(study: &Study, branch_index: usize, curves: &[Branch]) -> Result<(), AppError> {
    let mut csv = CsvFile::new(
        &study.out_dir,
        &format!("branch_{branch_index}_samples.csv"),
        &["sample", "s", "p", "u_l2", "u_point"],
    );
    for (k, curve) in curves.iter().enumerate() {
        let l2 = branch_observable(&study.grid, &curve.states, Observable::L2Norm);
        let point = branch_observable(
            &study.grid,
            &curve.states,
            Observable::PointEval(study.observable_point()),
        );
        for l in 0..curve.s_values.len() {
            csv.row(&[
                k.to_string(),
                fmt_f64(curve.s_values[l]),
                fmt_f64(curve.p_values[l]),
                fmt_f64(l2.values[l]),
                fmt_f64(point.values[l]),
            ]);
        }
    }
    csv.finish()?;
    Ok(())
}

fn write_solution_profiles(
    csv: &mut CsvFile,
    grid: &SpatialGrid,
    branch_index: usize,
    s_values: &[f64],
    p_values: &[f64],
    states: &[Vec<f64>],
) {
    for &l in &solution_station_indices(s_values.len()) {
        for (j, &x) in grid.nodes().iter().enumerate() {
            csv.row(&[
                branch_index.to_string(),
                fmt_f64(s_values[l]),
                fmt_f64(p_values[l]),
                fmt_f64(x),
                fmt_f64(states[l][j]),
            ]);
        }
    }
}

pub fn cmd_converge(study: &Study) -> Result<(), AppError> {
    let conv = study
        .config
        .converge
        .as_ref()
        .ok_or_else(|| AppError::Config("converge section missing from the config".into()))?;
    if study
        .field
        .marginals()
        .iter()
        .any(|m| !matches!(m, acuq::spatial::Marginal::Uniform { .. }))
    {
        return Err(AppError::Config(
            "the convergence study collocates on uniform marginals only".into(),
        ));
    }
    let n_mc = conv.n_mc.unwrap_or(study.config.samples);
    if n_mc < 1000 {
        return Err(AppError::Config(format!(
            "convergence study needs at least 1000 samples, got {n_mc}"
        )));
    }
    std::fs::create_dir_all(&study.out_dir)?;
    let branch_index = study.config.branches[0];
    let rows = convergence_study(
        &study.grid,
        &study.field,
        branch_index,
        &conv.w_list,
        conv.w_ref,
        conv.s_probe,
        n_mc,
        study.config.seed,
        &study.settings,
    )?;
    eprintln!(
        "converge: branch {branch_index}, {} budgets + reference w = {}",
        conv.w_list.len(),
        conv.w_ref
    );
    let mut csv = CsvFile::new(
        &study.out_dir,
        "converge.csv",
        &["w", "lambda_cardinality", "rms_p_star", "rms_r_at_s", "rms_u_at_s"],
    );
    for row in &rows {
        csv.row(&[
            row.w.to_string(),
            row.lambda_cardinality.to_string(),
            fmt_f64(row.rms_p_star),
            fmt_f64(row.rms_r_at_s),
            fmt_f64(row.rms_u_at_s),
        ]);
    }
    csv.finish()?;
    Ok(())
}
