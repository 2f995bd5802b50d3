//! Scenario execution: mesh → coefficients → assembly → admissibility gate →
//! requested checks → report files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use robinlab_core::assembly::{boundary_inclusion_slack, check_accretivity, check_continuity};
use robinlab_core::semigroup::geometric_grid;
use robinlab_core::verify::contractivity::{check_ouhabaz_contractivity_criterion, check_positivity};
use robinlab_core::verify::report::fmt_f64;
use robinlab_core::verify::{
    check_domination, check_eventual_positivity, check_lemma_decay, check_nash, check_ode_mechanism,
    domination_violation, fit_curve, fit_ultracontractivity, Report, TimeSeries, VerifyError, M_MATRIX_TOL,
};
use robinlab_core::{
    assemble_system, build_boundary_operator, build_box_mesh, build_evaluator, build_lshape_mesh, AssembledSystem,
    AssemblyError, BoundaryOperatorSpec, BoundaryRepr, CoefficientError, CoefficientField, KernelShape, Mesh,
    MeshError, SemigroupError, SemigroupEvaluator, Status,
};
use thiserror::Error;

use crate::scenario::{read_matrix, Boundary, Check, Coefficient, Domain, KernelChoice, Scale, Scenario, ScenarioError};

/// Distance of the fitted slope from `−d/4` still counted as agreement.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Relative slack on `‖e^{-tL(B)}‖_{∞→∞} ≤ e^{tα}`.
pub const LINF_SLACK: f64 = 1e-8;
/// Agreement of the primal and adjoint decay fits.
pub const FIT_DUALITY_TOL: f64 = 1e-9;
pub const LAW_TOL: f64 = 1e-10;
pub const CONTRACTION_TOL: f64 = 1e-10;
pub const INCLUSION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("coefficients: {0}")]
    Coefficient(#[from] CoefficientError),
    #[error("assembly: {0}")]
    Assembly(#[from] AssemblyError),
    #[error("semigroup: {0}")]
    Semigroup(#[from] SemigroupError),
    #[error("verify: {0}")]
    Verify(#[from] VerifyError),
    #[error("writing {path}: {msg}")]
    Write { path: String, msg: String },
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: Check,
    pub status: Status,
    /// Why the check was gated or failed.
    pub reason: Option<String>,
    /// Scalars copied into the manifest.
    pub fields: Report,
    /// Arrays and diagnostics for the summary only.
    pub detail: Report,
    pub csv: Option<String>,
}

impl CheckOutcome {
    fn new(check: Check) -> Self {
        CheckOutcome {
            check,
            status: Status::Pass,
            reason: None,
            fields: Report::new(),
            detail: Report::new(),
            csv: None,
        }
    }

    fn gated(check: Check, reason: impl Into<String>) -> Self {
        let mut o = Self::new(check);
        o.status = Status::HypothesisUnmet;
        o.reason = Some(reason.into());
        o
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub system: Report,
    pub checks: Vec<CheckOutcome>,
    pub timeseries: Option<String>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    /// Every check passed or was labelled rather than failed.
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.status.is_ok())
    }

    pub fn manifest(&self) -> Report {
        let mut r = self.system.clone();
        for c in &self.checks {
            let name = c.check.name();
            r.text(format!("{name}.status"), c.status.as_str());
            r.extend_prefixed(name, &c.fields);
        }
        r
    }

    pub fn summary(&self) -> Report {
        let mut r = self.system.clone();
        for (k, w) in self.warnings.iter().enumerate() {
            r.text(format!("warning.{k}"), w.clone());
        }
        for c in &self.checks {
            let name = c.check.name();
            r.text(format!("{name}.status"), c.status.as_str());
            if let Some(reason) = &c.reason {
                r.text(format!("{name}.reason"), reason.clone());
            }
            r.extend_prefixed(name, &c.fields);
            r.extend_prefixed(name, &c.detail);
        }
        r
    }

    /// Writes `summary.txt`, `manifest.txt`, `timeseries.csv` and one CSV
    /// per check that produces a table.
    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        let werr = |p: &Path, e: std::io::Error| RunError::Write { path: p.display().to_string(), msg: e.to_string() };
        fs::create_dir_all(dir).map_err(|e| werr(dir, e))?;
        let mut files = vec![
            ("summary.txt".to_string(), self.summary().render()),
            ("manifest.txt".to_string(), self.manifest().render()),
        ];
        if let Some(ts) = &self.timeseries {
            files.push(("timeseries.csv".into(), ts.clone()));
        }
        for c in &self.checks {
            if let Some(csv) = &c.csv {
                files.push((format!("{}.csv", c.check.name()), csv.clone()));
            }
        }
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| werr(&path, e))?;
        }
        Ok(())
    }
}

pub fn build_mesh(domain: &Domain) -> Result<Mesh, RunError> {
    Ok(match domain {
        Domain::Box { extents, divisions } => build_box_mesh(extents, divisions)?,
        Domain::LShape { dim, divisions } => build_lshape_mesh(*dim, *divisions)?,
    })
}

pub fn build_field(coef: &Coefficient, mesh: &Mesh) -> Result<CoefficientField, RunError> {
    let d = mesh.dim();
    Ok(match coef {
        Coefficient::Isotropic(a) => CoefficientField::isotropic(mesh, *a)?,
        Coefficient::Diagonal(v) => CoefficientField::diagonal(mesh, v)?,
        Coefficient::Matrix { entries, split: None } => {
            CoefficientField::uniform(mesh, DMatrix::from_row_slice(d, d, entries))?
        }
        Coefficient::Matrix { entries, split: Some(sp) } => {
            let lower = DMatrix::from_row_slice(d, d, entries);
            let upper = DMatrix::from_row_slice(d, d, &sp.upper);
            CoefficientField::from_centroids(mesh, |x| if x[sp.axis.min(d - 1)] < sp.at { lower.clone() } else { upper.clone() })?
        }
    })
}

fn kernel_shape(k: &KernelChoice) -> KernelShape {
    match k {
        KernelChoice::Constant => KernelShape::Constant,
        KernelChoice::Gaussian { width } => KernelShape::Gaussian { width: *width },
        KernelChoice::Cosine => KernelShape::Cosine,
        KernelChoice::Antisymmetric => KernelShape::AntisymmetricCosine,
    }
}

/// `neutral` is the system assembled with `B = 0`, which carries `α` and the
/// trace constant needed by fill-scaled kernels.
pub fn build_spec(boundary: &Boundary, mesh: &Mesh, neutral: &AssembledSystem) -> Result<BoundaryOperatorSpec, RunError> {
    let nb = mesh.boundary_vertices().len();
    let repr = match boundary {
        Boundary::Zero => BoundaryRepr::Zero,
        Boundary::Multiplication(beta) => BoundaryRepr::Multiplication(DVector::from_element(nb, *beta)),
        Boundary::Kernel { shape, scale } => {
            let shape = kernel_shape(shape);
            let s = match scale {
                Scale::Absolute(s) => *s,
                Scale::Fill(fill) => {
                    let unit = build_boundary_operator(BoundaryRepr::Kernel(shape.sample(mesh, 1.0)), mesh)?;
                    let per_unit = (unit.norm_inf_bar + unit.norm2_bar) * neutral.trace_norm_sq;
                    if per_unit > 0.0 { fill * (neutral.alpha - 1.0) / per_unit } else { 0.0 }
                }
            };
            BoundaryRepr::Kernel(shape.sample(mesh, s))
        }
        Boundary::Dense(path) => {
            let rows = read_matrix(path)?;
            let n = rows.len();
            BoundaryRepr::Dense(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        }
    };
    Ok(build_boundary_operator(repr, mesh)?)
}

/// Mesh, field, operator and assembled system for a scenario.
pub struct Setup {
    pub mesh: Mesh,
    pub field: CoefficientField,
    pub spec: BoundaryOperatorSpec,
    pub sys: AssembledSystem,
    pub warnings: Vec<String>,
}

pub fn setup(scn: &Scenario) -> Result<Setup, RunError> {
    let mesh = build_mesh(&scn.domain)?;
    let field = build_field(&scn.coefficient, &mesh)?;
    let mut warnings = Vec::new();
    let alpha = field.alpha();
    if let Some(requested) = scn.alpha {
        if (requested - alpha).abs() > 1e-12 * alpha.abs().max(1.0) {
            warnings.push(format!(
                "requested alpha {requested} differs from the certified ellipticity constant {alpha}; using {alpha}"
            ));
        }
    }
    let zero = build_boundary_operator(BoundaryRepr::Zero, &mesh)?;
    let neutral = assemble_system(&mesh, &field, &zero, alpha)?;
    let spec = build_spec(&scn.boundary, &mesh, &neutral)?;
    let sys = neutral.with_boundary(&mesh, &spec)?;
    Ok(Setup { mesh, field, spec, sys, warnings })
}

fn admissibility_reason(setup: &Setup) -> String {
    let s = &setup.spec;
    let lhs = 1.0 + (s.norm_inf_bar + s.norm2_bar) * setup.sys.trace_norm_sq;
    format!(
        "admissibility 1 + (|Bbar|_inf + |Bbar|_2) * trace_norm_sq <= alpha fails: {} > {}",
        fmt_f64(lhs),
        fmt_f64(setup.sys.alpha)
    )
}

fn csv(header: &str, columns: &[&[f64]]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for k in 0..rows {
        let cells: Vec<String> = columns.iter().map(|c| fmt_f64(c[k])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

struct Evaluators {
    primal: SemigroupEvaluator,
    adjoint: SemigroupEvaluator,
}

fn needs_semigroup(c: Check) -> bool {
    !matches!(c, Check::Continuity)
}

/// Runs every requested check.
pub fn run(scn: &Scenario) -> Result<RunOutcome, RunError> {
    let setup = setup(scn)?;
    let mut warnings = setup.warnings.clone();
    let times = geometric_grid(scn.time_grid.t_max, scn.time_grid.ratio, scn.time_grid.count);
    let h = setup.mesh.mesh_size();
    if scn.checks.contains(&Check::Ultracontractivity) && times.first().is_some_and(|&t| t < h * h) {
        warnings.push(format!(
            "smallest grid time {} is below h^2 = {}; those times are excluded from the decay fit",
            fmt_f64(times[0]),
            fmt_f64(h * h)
        ));
    }

    let sys = &setup.sys;
    let mut system = Report::new();
    system
        .text("scenario.name", scn.name.clone())
        .int("scenario.seed", scn.seed as i64)
        .text("scenario.checks", scn.checks.iter().map(|c| c.name()).collect::<Vec<_>>().join(","))
        .int("mesh.dim", setup.mesh.dim() as i64)
        .int("mesh.vertices", setup.mesh.num_vertices() as i64)
        .int("mesh.cells", setup.mesh.num_cells() as i64)
        .num("mesh.h", h)
        .text("boundary.kind", setup.spec.repr().kind_name())
        .num("system.alpha", sys.alpha)
        .num("system.trace_norm_sq", sys.trace_norm_sq)
        .num("system.norm2", setup.spec.norm2)
        .num("system.norm_inf", setup.spec.norm_inf)
        .num("system.norm2_bar", setup.spec.norm2_bar)
        .num("system.norm_inf_bar", setup.spec.norm_inf_bar)
        .flag("system.admissible", sys.admissibility.admissible)
        .num("system.admissibility_margin", sys.admissibility.margin)
        .num("system.stiffness_offdiag_max", sys.stiffness_offdiag_max());

    let evals = if scn.checks.iter().any(|&c| needs_semigroup(c)) {
        let primal = build_evaluator(sys, false)?;
        let adjoint = build_evaluator(sys, true)?;
        primal.precompute(&times)?;
        adjoint.precompute(&times)?;
        Some(Evaluators { primal, adjoint })
    } else {
        None
    };
    let timeseries = match &evals {
        Some(e) => Some(TimeSeries::compute(&e.primal, &e.adjoint, &times)?.to_csv()),
        None => None,
    };

    let mut checks = Vec::new();
    for &check in &scn.checks {
        let outcome = match (check, &evals) {
            (Check::Continuity, _) => continuity(&setup, scn),
            (c, Some(e)) => match c {
                Check::Accretivity => accretivity(&setup, e, &times)?,
                Check::Nash => nash(&setup, scn, e, &times)?,
                Check::Contractivity => contractivity(&setup, scn, e, &times)?,
                Check::Positivity => positivity(&setup, &times)?,
                Check::Domination => domination(&setup, scn, e, &times)?,
                Check::Ultracontractivity => ultracontractivity(&setup, e, &times)?,
                Check::EventualPositivity => eventual_positivity(&setup, scn, e, &times)?,
                Check::Continuity => unreachable!(),
            },
            (_, None) => unreachable!("evaluators are built whenever a semigroup check is requested"),
        };
        checks.push(outcome);
    }
    Ok(RunOutcome { system, checks, timeseries, warnings })
}

fn accretivity(setup: &Setup, e: &Evaluators, times: &[f64]) -> Result<CheckOutcome, RunError> {
    let mut o = CheckOutcome::new(Check::Accretivity);
    let rep = check_accretivity(&setup.sys);
    o.fields.num("lambda_min", rep.lambda_min).num("form_norm", rep.form_norm).num("threshold", rep.threshold);
    if rep.status == Status::HypothesisUnmet {
        o.status = rep.status;
        o.reason = Some(admissibility_reason(setup));
        return Ok(o);
    }
    let mut law = 0.0f64;
    for k in (0..times.len()).step_by(3) {
        for j in (0..times.len()).step_by(5) {
            law = law.max(e.primal.semigroup_law_defect(times[k], times[j])?);
        }
    }
    let contraction = times.iter().map(|&t| e.primal.norm_2_to_2(t, false)).collect::<Result<Vec<_>, _>>()?;
    let max_contraction = contraction.iter().copied().fold(0.0, f64::max);
    o.fields.num("semigroup_law_defect", law).num("l2_contraction_max", max_contraction);
    o.csv = Some(csv("t,norm_2_to_2", &[times, &contraction]));
    o.status = rep.status;
    if o.status == Status::Pass && (law > LAW_TOL || max_contraction > 1.0 + CONTRACTION_TOL) {
        o.status = Status::Fail;
        o.reason = Some("semigroup law or L2 contraction violated".into());
    } else if o.status == Status::Fail {
        o.reason = Some("shifted form minus H1 Gram matrix is not positive semidefinite".into());
    }
    Ok(o)
}

fn continuity(setup: &Setup, scn: &Scenario) -> CheckOutcome {
    let mut o = CheckOutcome::new(Check::Continuity);
    let rep = check_continuity(&setup.sys, &setup.field, &setup.spec, 200, scn.seed);
    let slack = boundary_inclusion_slack(&setup.sys, &setup.spec, 100, scn.seed);
    o.fields.num("max_ratio", rep.max_ratio).int("samples", rep.samples as i64).num("inclusion_slack_min", slack);
    let ok = rep.status == Status::Pass && slack >= -INCLUSION_TOL;
    o.status = Status::from_bool(ok);
    if !ok {
        o.reason = Some("sampled form bound or boundary inclusion violated".into());
    }
    o
}

fn nash(setup: &Setup, scn: &Scenario, e: &Evaluators, times: &[f64]) -> Result<CheckOutcome, RunError> {
    let d = setup.mesh.dim();
    let rep = match check_nash(&setup.mesh, &setup.sys, scn.samples.max(11), scn.seed, scn.allow_low_dim) {
        Ok(r) => r,
        Err(VerifyError::OutOfHypothesis(d)) => {
            return Ok(CheckOutcome::gated(
                Check::Nash,
                format!("dimension {d} is outside d > 2; set allow_low_dim = true in [run] to evaluate anyway"),
            ))
        }
        Err(err) => return Err(err.into()),
    };
    let mut o = CheckOutcome::new(Check::Nash);
    o.fields
        .int("samples", rep.samples as i64)
        .num("implied_constant", rep.implied_constant)
        .flag("gradient_only_violation", rep.gradient_only_violation)
        .flag("in_hypothesis", rep.in_hypothesis);
    let index: Vec<f64> = (0..rep.ratios.len()).map(|k| k as f64).collect();
    o.csv = Some(csv("sample,ratio", &[&index, &rep.ratios]));
    if !setup.sys.admissibility.admissible {
        o.status = Status::HypothesisUnmet;
        o.reason = Some(format!("decay lemma not evaluated: {}", admissibility_reason(setup)));
        return Ok(o);
    }
    let h = setup.mesh.mesh_size();
    let mut window: Vec<f64> = times.iter().copied().filter(|&t| t >= h * h).collect();
    if window.is_empty() {
        window = times.to_vec();
    }
    let lemma = check_lemma_decay(&setup.sys, &e.adjoint, rep.implied_constant, &window, scn.samples, scn.seed)?;
    let ode_times: Vec<f64> = window.iter().step_by((window.len() / 5).max(1)).take(5).copied().collect();
    let ode = check_ode_mechanism(&setup.sys, &e.adjoint, &ode_times, 20, scn.seed)?;
    o.fields
        .num("lemma_max_ratio", lemma.max_ratio)
        .num("lemma_operator_ratio", lemma.operator_ratio)
        .num("ode_max_excess", ode.max_excess);
    let ok = lemma.status == Status::Pass && ode.status == Status::Pass && rep.in_hypothesis;
    o.status = if !rep.in_hypothesis { Status::HypothesisUnmet } else { Status::from_bool(ok) };
    if !rep.in_hypothesis {
        o.reason = Some(format!("dimension {d} evaluated under override; outside d > 2"));
    } else if !ok {
        o.reason = Some("L1 to L2 decay bound or energy inequality violated".into());
    }
    Ok(o)
}

fn contractivity(setup: &Setup, scn: &Scenario, e: &Evaluators, times: &[f64]) -> Result<CheckOutcome, RunError> {
    if !setup.sys.admissibility.admissible {
        return Ok(CheckOutcome::gated(Check::Contractivity, admissibility_reason(setup)));
    }
    let mut o = CheckOutcome::new(Check::Contractivity);
    let rep = check_ouhabaz_contractivity_criterion(&setup.mesh, &setup.sys, &setup.spec, scn.samples, scn.seed)?;
    let alpha = setup.sys.alpha;
    let mut inf_ratio = Vec::with_capacity(times.len());
    let mut l1_ratio = Vec::with_capacity(times.len());
    for &t in times {
        let bound = (t * alpha).exp();
        inf_ratio.push(e.primal.norm_inf_to_inf(t, true)? / bound);
        l1_ratio.push(e.adjoint.norm_1_to_1(t, true)? / bound);
    }
    let worst_inf = inf_ratio.iter().copied().fold(0.0, f64::max);
    let worst_l1 = l1_ratio.iter().copied().fold(0.0, f64::max);
    o.fields
        .num("criterion_min_plus", rep.min_plus)
        .num("criterion_min_minus", rep.min_minus)
        .num("linf_ratio_max", worst_inf)
        .num("adjoint_l1_ratio_max", worst_l1);
    o.csv = Some(csv("t,linf_over_exp,adjoint_l1_over_exp", &[times, &inf_ratio, &l1_ratio]));
    let bound_ok = worst_inf <= 1.0 + LINF_SLACK && worst_l1 <= 1.0 + LINF_SLACK;
    o.status = match rep.status {
        Status::Pass if !bound_ok => {
            if setup.sys.stiffness_offdiag_max() > M_MATRIX_TOL {
                Status::DiscretizationLimited
            } else {
                Status::Fail
            }
        }
        s => s,
    };
    if o.status != Status::Pass {
        o.reason = Some(if bound_ok {
            "truncation criterion negative".into()
        } else {
            "infinity-norm bound e^(t alpha) exceeded".into()
        });
    }
    Ok(o)
}

fn positivity(setup: &Setup, times: &[f64]) -> Result<CheckOutcome, RunError> {
    if !setup.sys.admissibility.admissible {
        return Ok(CheckOutcome::gated(Check::Positivity, admissibility_reason(setup)));
    }
    let mut o = CheckOutcome::new(Check::Positivity);
    let bar_sys = setup.sys.with_boundary(&setup.mesh, &setup.spec.shifted_bar(-1.0))?;
    let bar = build_evaluator(&bar_sys, false)?;
    let rep = check_positivity(&setup.sys, &bar, times)?;
    o.fields.num("min_entry", rep.min_entries.iter().copied().fold(f64::INFINITY, f64::min));
    o.csv = Some(csv("t,min_entry", &[times, &rep.min_entries]));
    o.status = rep.status;
    if rep.status == Status::DiscretizationLimited {
        o.reason = Some("stiffness matrix is not an M-matrix; negative entries are a discretization artefact".into());
    } else if rep.status == Status::Fail {
        o.reason = Some("dominating semigroup has negative entries".into());
    }
    Ok(o)
}

fn domination(setup: &Setup, scn: &Scenario, e: &Evaluators, times: &[f64]) -> Result<CheckOutcome, RunError> {
    if !setup.sys.admissibility.admissible {
        return Ok(CheckOutcome::gated(Check::Domination, admissibility_reason(setup)));
    }
    let mut o = CheckOutcome::new(Check::Domination);
    let bar_sys = setup.sys.with_boundary(&setup.mesh, &setup.spec.shifted_bar(-1.0))?;
    let bar = build_evaluator(&bar_sys, false)?;
    let rep = check_domination(&setup.sys, &setup.spec, &e.primal, &bar, times, scn.samples, scn.seed)?;
    let ones = [DVector::from_element(setup.sys.num_vertices(), 1.0)];
    let mut constant = 0.0f64;
    for &t in times {
        constant = constant.max(domination_violation(&*e.primal.exponential(t)?, &*bar.exponential(t)?, &ones));
    }
    o.fields
        .int("samples", rep.samples as i64)
        .num("max_violation", rep.max_violation)
        .num("form_min", rep.form_min)
        .num("constant_violation", constant);
    o.csv = Some(csv("t,violation", &[times, &rep.violations]));
    o.status = rep.status;
    if o.status != Status::Pass {
        o.reason = Some("sampled domination or form comparison violated".into());
    }
    Ok(o)
}

fn ultracontractivity(setup: &Setup, e: &Evaluators, times: &[f64]) -> Result<CheckOutcome, RunError> {
    if !setup.sys.admissibility.admissible {
        return Ok(CheckOutcome::gated(Check::Ultracontractivity, admissibility_reason(setup)));
    }
    let mut o = CheckOutcome::new(Check::Ultracontractivity);
    let h = setup.mesh.mesh_size();
    let fit = match fit_ultracontractivity(&e.primal, times, h) {
        Ok(f) => f,
        Err(VerifyError::TooFewPoints { got }) => {
            o.status = Status::Fail;
            o.reason = Some(format!("only {got} grid times lie between h^2 and the plateau; at least 4 are needed"));
            o.fields.int("window_points", got as i64);
            return Ok(o);
        }
        Err(err) => return Err(err.into()),
    };
    let adjoint_raw = times.iter().map(|&t| e.adjoint.norm_1_to_2(t, true)).collect::<Result<Vec<_>, _>>()?;
    let dual = fit_curve(times, &adjoint_raw, setup.sys.alpha, h * h)?;
    let expected = -(setup.mesh.dim() as f64) / 4.0;
    o.fields
        .num("fitted_slope", fit.fitted_slope)
        .num("fitted_c", fit.fitted_c)
        .num("mu", fit.mu)
        .num("bound_ratio", fit.bound_ratio)
        .int("window_points", fit.window.len() as i64)
        .num("t_floor", fit.t_floor)
        .num("adjoint_slope_defect", (fit.fitted_slope - dual.fitted_slope).abs());
    let in_window: Vec<f64> = (0..times.len()).map(|k| if fit.window.contains(&k) { 1.0 } else { 0.0 }).collect();
    o.csv = Some(csv("t,raw,g,local_slope,in_window", &[times, &fit.raw, &fit.norms, &fit.local_slopes, &in_window]));
    let slope_ok = (fit.fitted_slope - expected).abs() <= SLOPE_TOLERANCE;
    let dual_ok = (fit.fitted_slope - dual.fitted_slope).abs() <= FIT_DUALITY_TOL;
    o.status = Status::from_bool(slope_ok && fit.bound_holds() && dual_ok);
    if !slope_ok {
        o.reason = Some(format!("fitted slope is more than {SLOPE_TOLERANCE} away from -d/4 = {expected}"));
    } else if !fit.bound_holds() {
        o.reason = Some("decay curve exceeds the fitted bound by more than 5%".into());
    } else if !dual_ok {
        o.reason = Some("primal and adjoint fits disagree".into());
    }
    Ok(o)
}

fn eventual_positivity(setup: &Setup, scn: &Scenario, e: &Evaluators, times: &[f64]) -> Result<CheckOutcome, RunError> {
    if !setup.sys.admissibility.admissible {
        return Ok(CheckOutcome::gated(Check::EventualPositivity, admissibility_reason(setup)));
    }
    let rep = check_eventual_positivity(&setup.sys, &setup.spec, &e.primal, times, scn.samples, scn.seed)?;
    let mut o = CheckOutcome::new(Check::EventualPositivity);
    o.fields
        .flag("hypothesis_ok", rep.hypothesis_ok)
        .num("sym_min_eigenvalue", rep.sym_min_eigenvalue)
        .num("constant_defect", rep.constant_defect);
    o.status = rep.status;
    if !rep.hypothesis_ok {
        let mut why = String::new();
        let _ = write!(
            why,
            "needs B + B* >= 0 and B 1 = 0; got min eigenvalue {} and |B 1| {}",
            fmt_f64(rep.sym_min_eigenvalue),
            fmt_f64(rep.constant_defect)
        );
        o.reason = Some(why);
        return Ok(o);
    }
    if let (Some(t0), Some(delta)) = (rep.t0, rep.delta) {
        o.fields.num("t0", t0).num("delta", delta);
    } else {
        o.reason = Some("no grid time after which every sample stays positive".into());
    }
    o.csv = Some(csv("t,ratio", &[times, &rep.ratios]));
    Ok(o)
}
