//! The experiment pipeline: diagnose, scale, classify the boundary type,
//! track the projective limit, and assemble the report.
//!
//! Recoverable analysis failures (an undecided trend, a fit whose ratios do
//! not settle, a type solve off its trust region) are recorded in the report
//! and the run continues; only the core diagnostics aborting makes the run
//! fail.

use crate::boundary::{
    dangelo_type, limit_boundary_fit, normal_form, type_i_classifier, DiscSearch, NormalForm,
    TypeReport,
};
use crate::dsl::eval::{eval, Bindings};
use crate::dsl::{ExperimentConfig, ScalingMode};
use crate::error::{Error, Result};
use crate::grid::PolydiscGrid;
use crate::holo_diff::{
    classify_series, cr_residual, det_ratio_bounds, eigen_field, eigen_series, CaseVerdict,
};
use crate::projective::{
    sample_spec, track_limit, CloudCP2, DomainSample, LimitVerdict, SampleRegion,
};
use crate::report::{
    CxField, DetRatioOut, PerJRecord, Report, ThetaSample, Timings, TypeReportOut, Verdicts,
};
use crate::scaling::{frankel_scale, norm_sup, normality_diagnostic, variety_scale, ScalingStep};
use num_complex::Complex64;
use std::time::Instant;

type F = f64;
type C = Complex64;

pub struct RunOutput {
    pub report: Report,
    pub series_csv: String,
    pub final_cloud: Option<String>,
    pub target_cloud: Option<String>,
}

struct ErrorLog(Vec<String>);

impl ErrorLog {
    fn push(&mut self, op: &str, e: &Error) {
        self.0.push(format!("{op}: {e}"));
    }
}

/// Execute the full pipeline for a validated configuration.
pub fn run(config: &ExperimentConfig<F>) -> Result<RunOutput> {
    let t_start = Instant::now();
    let tol = &config.tol;
    let fam = &config.family;
    let (j_min, j_max) = (config.j_min, config.j_max);
    let mut errors = ErrorLog(Vec::new());
    let mut timings = Timings::default();

    // --- diagnostics at the base point -----------------------------------
    let t0 = Instant::now();
    spot_check_self_map(config, &mut errors);
    let series = eigen_series(fam, config.q, j_min, j_max, tol)?;
    let case = match classify_series(&series, tol) {
        Ok(c) => Some(c),
        Err(e) => {
            errors.push("classify_case", &e);
            None
        }
    };

    let grid = PolydiscGrid::new(config.q, config.grid.radius, config.grid.n, Some(&config.domain))
        .with_jitter(config.grid.n, config.grid.jitter_per_cell, config.seed, Some(&config.domain));

    let mut m_sups: Vec<(u32, F)> = Vec::new();
    if grid.is_empty() {
        errors.push("norm_sup", &Error::InsufficientGrid("no grid point inside the domain".into()));
    } else {
        for j in j_min..=j_max {
            match norm_sup(fam, config.q, j, &grid, tol) {
                Ok(m) => m_sups.push((j, m)),
                Err(e) => {
                    errors.push("norm_sup", &e);
                    break;
                }
            }
        }
    }
    let normality = if m_sups.len() >= 6 {
        let ms: Vec<F> = m_sups.iter().map(|(_, m)| *m).collect();
        match normality_diagnostic(&ms, tol) {
            Ok(n) => n.name().to_string(),
            Err(e) => {
                errors.push("normality_diagnostic", &e);
                "inconclusive".into()
            }
        }
    } else {
        "inconclusive".into()
    };

    let det_ratio = if grid.is_empty() {
        None
    } else {
        match det_ratio_bounds(fam, config.q, &grid, j_min, j_max, tol) {
            Ok(b) => Some(b),
            Err(e) => {
                errors.push("det_ratio_bounds", &e);
                None
            }
        }
    };

    let cr_residual_jmax = if grid.is_empty() {
        None
    } else {
        eigen_field(fam, j_max, &grid, tol)
            .and_then(|field| cr_residual(fam, j_max, &field, config.grid.cr_step))
            .map_err(|e| errors.push("cr_residual", &e))
            .ok()
    };
    timings.diagnostics_s = t0.elapsed().as_secs_f64();

    // --- scaling ----------------------------------------------------------
    let t0 = Instant::now();
    let mode = match config.mode {
        ScalingMode::Auto => match case {
            Some(CaseVerdict::AccumulationVariety) => ScalingMode::Variety,
            _ => ScalingMode::Frankel,
        },
        m => m,
    };
    let mut steps: Vec<ScalingStep<F>> = Vec::new();
    for j in j_min..=j_max {
        let step = match mode {
            ScalingMode::Variety => variety_scale(fam, config.q, j, tol),
            _ => frankel_scale(fam, config.q, j, tol),
        };
        match step {
            Ok(s) => steps.push(s),
            Err(e) => {
                errors.push("scaling", &e);
                steps.clear();
                break;
            }
        }
    }
    timings.scaling_s = t0.elapsed().as_secs_f64();

    // --- boundary accumulation point and type ----------------------------
    let t0 = Instant::now();
    let mut accumulation_point: Option<(C, C)> = None;
    let mut nf_opt: Option<NormalForm<F>> = None;
    let mut type_out: Option<TypeReport<F>> = None;
    let mut type_kind = "inconclusive".to_string();
    let mut type_note_extra = String::new();

    let accumulating = matches!(
        case,
        Some(CaseVerdict::AccumulationPoint) | Some(CaseVerdict::AccumulationVariety)
    );
    if accumulating {
        match estimate_accumulation_point(config) {
            Ok(p) => {
                accumulation_point = Some(p);
                let trust = (config.domain.trust_radius() * 0.4).min(0.8);
                match normal_form(&config.domain, p, trust) {
                    Ok(nf) => {
                        let search = pipeline_search(&nf);
                        match dangelo_type(&nf, &search) {
                            Ok(mut tr) => {
                                if tr.not_finite {
                                    let log_rho = |z: C| nf.log_rho0(z);
                                    match type_i_classifier(&log_rho, &tr, tol) {
                                        Ok((kind, samples)) => {
                                            tr.kind = kind;
                                            tr.m_z_samples = samples;
                                        }
                                        Err(e) => {
                                            errors.push("type_i_classifier", &e);
                                            type_note_extra =
                                                format!("type-I classifier unavailable: {e}");
                                        }
                                    }
                                }
                                type_kind = tr.kind.name();
                                type_out = Some(tr);
                            }
                            Err(e) => errors.push("dangelo_type", &e),
                        }
                        nf_opt = Some(nf);
                    }
                    Err(e) => errors.push("normal_form", &e),
                }
            }
            Err(e) => errors.push("accumulation_point", &e),
        }
    } else {
        type_note_extra = "no boundary accumulation; type analysis skipped".into();
    }

    // --- limit-boundary fit (Frankel + point case + finite type) ---------
    let mut fit_report = None;
    let mut fit_error = None;
    if mode == ScalingMode::Frankel && matches!(case, Some(CaseVerdict::AccumulationPoint)) {
        if let (Some(nf), Some(tr)) = (&nf_opt, &type_out) {
            if let Some(k) = tr.t_estimate {
                match limit_boundary_fit(fam, config.q, nf, k, j_min, j_max, tol) {
                    Ok(fit) => {
                        fit_report = Some(crate::report::FitReport {
                            h: fit.h.into(),
                            c: fit.c.into(),
                            d: fit.d.into(),
                            residual: fit.residual,
                            k,
                        });
                    }
                    Err(e) => {
                        errors.push("limit_boundary_fit", &e);
                        fit_error = Some(e.to_string());
                    }
                }
            } else {
                fit_error = Some("no finite type estimate; fit skipped".into());
            }
        }
    }
    timings.type_s = t0.elapsed().as_secs_f64();

    // --- projective limit tracking ----------------------------------------
    let t0 = Instant::now();
    let region = SampleRegion { center: config.q, radius: config.cloud.radius };
    let mut limit_name = "inconclusive".to_string();
    let mut step_series: Vec<(u32, F)> = Vec::new();
    let mut target_series: Vec<(u32, F)> = Vec::new();
    let mut final_cloud_txt = None;
    let mut target_cloud_txt = None;
    let mut theta_samples = Vec::new();
    if !steps.is_empty() {
        match sample_spec(&config.domain, region, config.cloud.n_interior, config.cloud.n_boundary, config.seed) {
            Ok(sample) => {
                let target_cloud = match &config.target {
                    Some((tf, tg)) => match push_through_map(&sample, tf, tg) {
                        Ok(c) => Some(c),
                        Err(e) => {
                            errors.push("target_cloud", &e);
                            None
                        }
                    },
                    None => None,
                };
                match track_limit(&steps, &sample, target_cloud.as_ref(), tol) {
                    Ok(est) => {
                        limit_name = est.verdict.name().to_string();
                        step_series = est.distance_series.clone();
                        if let Some(ts) = est.target_series {
                            target_series = ts;
                        }
                        if est.verdict == LimitVerdict::Divergent {
                            // keep the cloud anyway; downstream plots want it
                        }
                    }
                    Err(e) => errors.push("track_limit", &e),
                }
                if let Some(last) = steps.last() {
                    match sample.map_through(last).and_then(|s| s.embed()) {
                        Ok(cloud) => {
                            if mode == ScalingMode::Variety {
                                theta_samples = fiber_theta_samples(&sample, last);
                            }
                            final_cloud_txt = Some(crate::report::cloud_to_text(&cloud));
                        }
                        Err(e) => errors.push("final_cloud", &e),
                    }
                }
                if let Some(t) = &target_cloud {
                    target_cloud_txt = Some(crate::report::cloud_to_text(t));
                }
            }
            Err(e) => errors.push("sample_domain", &e),
        }
    }
    timings.tracking_s = t0.elapsed().as_secs_f64();

    // --- assemble ----------------------------------------------------------
    let mut per_j = Vec::new();
    for (idx, (j, eig)) in series.iter().enumerate() {
        let fiber_slope = if mode == ScalingMode::Variety {
            steps.get(idx).map(|s| fiber_slope_of(s, eig.lambda2))
        } else {
            None
        };
        per_j.push(PerJRecord {
            j: *j,
            alpha: fam.alpha(*j)?.into(),
            lambda1: eig.lambda1.into(),
            lambda2: eig.lambda2.into(),
            m_sup: m_sups.iter().find(|(jj, _)| jj == j).map(|(_, m)| *m),
            det_ratio_min: det_ratio
                .as_ref()
                .and_then(|b| b.per_j.iter().find(|(jj, _, _)| jj == j).map(|(_, mn, _)| *mn)),
            det_ratio_max: det_ratio
                .as_ref()
                .and_then(|b| b.per_j.iter().find(|(jj, _, _)| jj == j).map(|(_, _, mx)| *mx)),
            hausdorff_step: step_series.iter().find(|(jj, _)| jj == j).map(|(_, d)| *d),
            hausdorff_to_target: target_series.iter().find(|(jj, _)| jj == j).map(|(_, d)| *d),
            fiber_slope: fiber_slope.flatten().map(|c| c.into()),
        });
    }

    let case_name = match case {
        Some(c) => c.name().to_string(),
        None => "inconclusive".into(),
    };
    let type_report_out = type_out.map(|tr| TypeReportOut {
        kind: tr.kind.name(),
        t_estimate: tr.t_estimate,
        not_finite: tr.not_finite,
        witness_a: tr
            .witness
            .as_ref()
            .map(|d| d.a.iter().map(|&(re, im)| CxField { re, im }).collect())
            .unwrap_or_default(),
        witness_b: tr
            .witness
            .as_ref()
            .map(|d| d.b.iter().map(|&(re, im)| CxField { re, im }).collect())
            .unwrap_or_default(),
        m_z_samples: tr.m_z_samples.clone(),
        search_exhausted: tr.search_exhausted,
        note: if type_note_extra.is_empty() {
            tr.note.clone()
        } else {
            format!("{}; {}", tr.note, type_note_extra)
        },
    });

    timings.total_s = t_start.elapsed().as_secs_f64();
    let report = Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_name: config.name.clone(),
        seed: config.seed,
        mode: mode.name().to_string(),
        j_min,
        j_max,
        accumulation_point: accumulation_point.map(|(z, w)| (z.into(), w.into())),
        verdicts: Verdicts {
            case: case_name,
            normality,
            type_kind,
            limit: limit_name,
            fit: fit_report,
            fit_error,
        },
        type_report: type_report_out,
        det_ratio: det_ratio.map(|b| DetRatioOut {
            min: b.min,
            max: b.max,
            violation_suspected: b.violation_suspected,
        }),
        cr_residual_jmax,
        per_j: per_j.clone(),
        theta_samples,
        errors: errors.0,
        config_echo: config.to_string(),
        timings,
    };

    Ok(RunOutput {
        series_csv: crate::report::series_csv(&per_j),
        report,
        final_cloud: final_cloud_txt,
        target_cloud: target_cloud_txt,
    })
}

/// Families are trusted to be self-maps; a sampled membership check of their
/// images records a warning when that trust looks misplaced.
fn spot_check_self_map(config: &ExperimentConfig<F>, errors: &mut ErrorLog) {
    let r = config.cloud.radius;
    let mut probes = Vec::new();
    let mut k = 1u64;
    while probes.len() < 48 && k < 4000 {
        let h = crate::sampling::centered(crate::sampling::halton4(k), r);
        let p = (config.q.0 + C::new(h[0], h[1]), config.q.1 + C::new(h[2], h[3]));
        if config.domain.is_member(p) {
            probes.push(p);
        }
        k += 1;
    }
    for j in [config.j_min, config.j_max] {
        for &p in &probes {
            let escaped = match config.family.apply(j, p) {
                Ok(img) => matches!(config.domain.signed_value(img), Ok(v) if v > 1e-9),
                Err(_) => true,
            };
            if escaped {
                errors.push(
                    "self_map_spot_check",
                    &Error::Precondition(format!(
                        "image of a sampled member left the domain at j = {j}"
                    )),
                );
                return;
            }
        }
    }
}

/// Walk from q through phi_{j_max}(q) to the boundary.
fn estimate_accumulation_point(config: &ExperimentConfig<F>) -> Result<(C, C)> {
    let towards = config.family.apply(config.j_max, config.q)?;
    config.domain.project_to_boundary(config.q, towards, 96)
}

/// Reduced disc search when rho needs a solve per sample; the closed-form
/// graph shortcut affords the full default breadth.
fn pipeline_search(nf: &NormalForm<F>) -> DiscSearch<F> {
    if nf.has_graph_shortcut() {
        DiscSearch::default()
    } else {
        DiscSearch {
            max_degree: 2,
            lattice_step: 0.5,
            lattice_radius: 1.0,
            pair_step: 1.0,
            pair_radius: 1.0,
            max_order: 12,
            ladder_t0: 0.08,
            ladder_len: 11,
            phases: 4,
        }
    }
}

/// The fiber-line slope -b21/(b22 lambda) with b = (eigenvector rows)^{-1}.
fn fiber_slope_of(step: &ScalingStep<F>, lambda2: C) -> Option<C> {
    // normalizer = diag(1, 1/lambda2) * rows, so rows = diag(1, lambda2) * normalizer
    let n = &step.normalizer;
    let rows = crate::holo_diff::Jacobian2::new(n.a11, n.a12, n.a21 * lambda2, n.a22 * lambda2, n.at);
    let b = rows.inv(f64::MIN_POSITIVE).ok()?;
    if b.a22.norm() < 1e-300 || lambda2.norm() < 1e-300 {
        return None;
    }
    Some(-b.a21 / (b.a22 * lambda2))
}

/// Push the base sample through a closed-form map given as two expressions.
fn push_through_map(
    sample: &DomainSample<F>,
    f: &crate::dsl::Expr,
    g: &crate::dsl::Expr,
) -> Result<CloudCP2<F>> {
    let mut points = Vec::with_capacity(sample.points.len());
    for &p in &sample.points {
        let env = Bindings::at_point(p);
        let fz = eval(f, &env).map_err(Error::Eval)?;
        let gz = eval(g, &env).map_err(Error::Eval)?;
        points.push(crate::projective::embed((fz, gz))?);
    }
    Ok(CloudCP2 { points, labels: sample.labels.clone(), seed: sample.seed })
}

/// Rotation angle estimates of the half-plane fibers of the final scaled
/// cloud: per z-bin, the direction maximizing the worst fiber margin.
fn fiber_theta_samples(sample: &DomainSample<F>, step: &ScalingStep<F>) -> Vec<ThetaSample> {
    let mut images = Vec::new();
    for &p in &sample.points {
        if let Ok(im) = step.apply(p) {
            images.push(im);
        }
    }
    if images.len() < 30 {
        return Vec::new();
    }
    let mut re_bounds = (f64::INFINITY, f64::NEG_INFINITY);
    for (z, _) in &images {
        re_bounds.0 = re_bounds.0.min(z.re);
        re_bounds.1 = re_bounds.1.max(z.re);
    }
    let mut out = Vec::new();
    let bins = 3usize;
    let width = (re_bounds.1 - re_bounds.0) / bins as f64;
    if width <= 0.0 {
        return Vec::new();
    }
    for b in 0..bins {
        let lo = re_bounds.0 + b as f64 * width;
        let hi = lo + width;
        let fiber: Vec<C> = images
            .iter()
            .filter(|(z, _)| z.re >= lo && z.re < hi)
            .map(|(_, w)| *w)
            .collect();
        if fiber.len() < 10 {
            continue;
        }
        let mut best = (0.0f64, f64::NEG_INFINITY);
        for k in 0..64 {
            let theta = -std::f64::consts::PI + k as f64 * std::f64::consts::TAU / 64.0;
            let rot = C::new(0.0, -theta).exp();
            let mut margin = f64::INFINITY;
            for w in &fiber {
                margin = margin.min((rot * w).im);
                if margin < best.1 {
                    break;
                }
            }
            if margin > best.1 {
                best = (theta, margin);
            }
        }
        let z_center = C::new((lo + hi) / 2.0, 0.0);
        out.push(ThetaSample { z_center: z_center.into(), theta: best.0, margin: best.1 });
    }
    out
}

