//! Acceptance suite. Each test prints one `ACCEPT <name>: PASS|FAIL` line to
//! stderr (unaffected by output capture) and then asserts.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{antisymmetric_case, case, robin, unit_cube, Case};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robinlab_core::assembly::check_accretivity;
use robinlab_core::semigroup::{default_grid, SemigroupEvaluator, DEFAULT_DENSE_CAP};
use robinlab_core::verify::domination::domination_violation;
use robinlab_core::verify::eventual::{nonnegative_samples, positivity_ratio};
use robinlab_core::verify::{
    check_domination, check_eventual_positivity, check_lemma_decay, check_nash, check_ouhabaz_contractivity_criterion,
    fit_ultracontractivity, random_signed, TimeSeries,
};
use robinlab_core::{
    assemble_system, build_boundary_operator, build_box_mesh, build_evaluator, BoundaryRepr, CoefficientField, Status,
};

const SLOPE_LO: f64 = -0.90;
const SLOPE_HI: f64 = -0.60;
const RUNTIME_LIMIT: Duration = Duration::from_secs(60);
const DUALITY_TOL: f64 = 1e-10;
const DOMINATION_TOL: f64 = 1e-8;
const LINF_SLACK: f64 = 1e-8;
const ACCRETIVITY_TOL: f64 = 1e-10;
const LAW_TOL: f64 = 1e-10;
const CONTRACTION_TOL: f64 = 1e-10;
const NASH_STABILITY: f64 = 0.20;
const OUHABAZ_TOL: f64 = 1e-9;
const MEAN_LIMIT_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-12;
const EXPM_TOL: f64 = 1e-13;

fn verdict(name: &str, pass: bool, detail: &str) {
    let line = format!("ACCEPT {name}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

struct Prepared {
    case: Case,
    primal: SemigroupEvaluator,
    adjoint: SemigroupEvaluator,
    series: TimeSeries,
    elapsed: Duration,
}

fn prepare(make: impl FnOnce() -> Case) -> Prepared {
    let start = Instant::now();
    let case = make();
    let primal = build_evaluator(&case.sys, false).unwrap();
    let adjoint = build_evaluator(&case.sys, true).unwrap();
    let series = TimeSeries::compute(&primal, &adjoint, &default_grid()).unwrap();
    Prepared { case, primal, adjoint, series, elapsed: start.elapsed() }
}

fn neumann() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| prepare(|| case("neumann", unit_cube(6), 1.0, BoundaryRepr::Zero)))
}

fn robin_weak() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| {
        prepare(|| {
            let m = unit_cube(6);
            let r = robin(&m, -0.05);
            case("robin_beta_-0.05", m, 2.0, r)
        })
    })
}

fn robin_strong() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| {
        prepare(|| {
            let m = unit_cube(6);
            let r = robin(&m, -0.1);
            case("robin_beta_-0.1", m, 2.5, r)
        })
    })
}

fn antisymmetric() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| prepare(|| antisymmetric_case("antisymmetric_kernel", unit_cube(6), 2.0, 0.9)))
}

fn all() -> [&'static Prepared; 4] {
    [neumann(), robin_weak(), robin_strong(), antisymmetric()]
}

#[test]
fn ultracontractivity_rate() {
    let mut pass = true;
    let mut detail = String::new();
    for p in [neumann(), robin_weak()] {
        assert!(p.case.sys.admissibility.admissible, "{} must be admissible", p.case.name);
        let start = Instant::now();
        let fit = match fit_ultracontractivity(&p.primal, &default_grid(), p.case.mesh.mesh_size()) {
            Ok(fit) => fit,
            Err(e) => {
                pass = false;
                detail += &format!("[{} fit error: {e}] ", p.case.name);
                continue;
            }
        };
        let runtime = p.elapsed + start.elapsed();
        let ok = fit.slope_in(SLOPE_LO, SLOPE_HI) && fit.bound_holds() && runtime < RUNTIME_LIMIT;
        pass &= ok;
        detail += &format!(
            "[{} slope={:.4} C={:.4} bound_ratio={:.4} window={} runtime={:.1}s] ",
            p.case.name,
            fit.fitted_slope,
            fit.fitted_c,
            fit.bound_ratio,
            fit.window.len(),
            runtime.as_secs_f64()
        );
    }
    verdict("ultracontractivity_rate", pass, &detail);
}

#[test]
fn duality() {
    let mut worst = 0.0f64;
    for p in all() {
        worst = worst.max(p.series.duality_defect());
    }
    verdict("duality", worst <= DUALITY_TOL, &format!("max_relative_defect={worst:.3e}"));
}

#[test]
fn domination() {
    let p = robin_strong();
    let times = default_grid();
    let bar_sys = p.case.sys.with_boundary(&p.case.mesh, &p.case.spec.shifted_bar(-1.0)).unwrap();
    let bar = build_evaluator(&bar_sys, false).unwrap();
    let rep = check_domination(&p.case.sys, &p.case.spec, &p.primal, &bar, &times, 50, 7).unwrap();

    // Diagnostic: the same samples against the semigroup with boundary
    // operator −B̄, whose form is below Re ã(B)(|u|, |u|).
    let neg_sys = p.case.sys.with_boundary(&p.case.mesh, &p.case.spec.negated_bar()).unwrap();
    let neg = build_evaluator(&neg_sys, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let us: Vec<DVector<f64>> = (0..50).map(|_| random_signed(p.case.sys.num_vertices(), &mut rng)).collect();
    let mut neg_violation = 0.0f64;
    for &t in &times {
        neg_violation =
            neg_violation.max(domination_violation(&p.primal.exponential(t).unwrap(), &neg.exponential(t).unwrap(), &us));
    }
    // Diagnostic: u ≡ 1 lies outside the random sample set.
    let ones = vec![DVector::from_element(p.case.sys.num_vertices(), 1.0)];
    let mut const_violation = 0.0f64;
    for &t in &times {
        const_violation =
            const_violation.max(domination_violation(&p.primal.exponential(t).unwrap(), &bar.exponential(t).unwrap(), &ones));
    }
    let pass = rep.max_violation <= DOMINATION_TOL;
    verdict(
        "domination",
        pass,
        &format!(
            "max_violation={:.3e} form_min={:.3e} (diagnostics: u=1 violation {:.3e}, violation against -Bbar semigroup {:.3e})",
            rep.max_violation, rep.form_min, const_violation, neg_violation
        ),
    );
}

#[test]
fn linf_bound_chain() {
    let mut pass = true;
    let mut detail = String::new();
    for p in all() {
        if !p.case.sys.admissibility.admissible {
            continue;
        }
        let alpha = p.case.sys.alpha;
        let mut worst_inf = 0.0f64;
        let mut worst_l1 = 0.0f64;
        for &t in &default_grid() {
            let bound = (t * alpha).exp();
            worst_inf = worst_inf.max(p.primal.norm_inf_to_inf(t, true).unwrap() / bound);
            worst_l1 = worst_l1.max(p.adjoint.norm_1_to_1(t, true).unwrap() / bound);
        }
        let ok = worst_inf <= 1.0 + LINF_SLACK && worst_l1 <= 1.0 + LINF_SLACK;
        pass &= ok;
        detail += &format!("[{} inf/e^(ta)={:.6} l1_adj/e^(ta)={:.6}] ", p.case.name, worst_inf, worst_l1);
    }
    verdict("linf_bound_chain", pass, &detail);
}

#[test]
fn accretivity() {
    let mut pass = true;
    let mut detail = String::new();
    let grid = default_grid();
    for p in all() {
        if !p.case.sys.admissibility.admissible {
            continue;
        }
        let acc = check_accretivity(&p.case.sys);
        let mut law = 0.0f64;
        for k in (0..grid.len()).step_by(3) {
            for j in (0..grid.len()).step_by(5) {
                law = law.max(p.primal.semigroup_law_defect(grid[k], grid[j]).unwrap());
            }
        }
        let mut contraction = 0.0f64;
        for &t in &grid {
            contraction = contraction.max(p.primal.norm_2_to_2(t, false).unwrap());
        }
        let ok = acc.lambda_min >= -ACCRETIVITY_TOL * acc.form_norm
            && acc.status == Status::Pass
            && law <= LAW_TOL
            && contraction <= 1.0 + CONTRACTION_TOL;
        pass &= ok;
        detail += &format!(
            "[{} lambda_min={:.3e} law={:.2e} l2={:.12}] ",
            p.case.name, acc.lambda_min, law, contraction
        );
    }
    verdict("accretivity", pass, &detail);
}

#[test]
fn nash() {
    let coarse = case("nash_4", unit_cube(4), 1.0, BoundaryRepr::Zero);
    let fine = case("nash_8", unit_cube(8), 1.0, BoundaryRepr::Zero);
    let rc = check_nash(&coarse.mesh, &coarse.sys, 200, 11, false).unwrap();
    let rf = check_nash(&fine.mesh, &fine.sys, 200, 11, false).unwrap();
    let holds = |r: &robinlab_core::verify::NashReport| {
        r.samples == 200 && r.ratios.iter().all(|&x| x.is_finite() && x > 0.0 && x <= r.implied_constant)
    };
    let stable = (rc.implied_constant - rf.implied_constant).abs() <= NASH_STABILITY * rc.implied_constant;

    let p = neumann();
    let own = check_nash(&p.case.mesh, &p.case.sys, 200, 11, false).unwrap();
    let fit = fit_ultracontractivity(&p.primal, &default_grid(), p.case.mesh.mesh_size()).unwrap();
    let window: Vec<f64> = fit.window.iter().map(|&k| fit.times[k]).collect();
    let lemma = check_lemma_decay(&p.case.sys, &p.adjoint, own.implied_constant, &window, 50, 13).unwrap();

    let pass = holds(&rc) && holds(&rf) && stable && rc.gradient_only_violation && rf.gradient_only_violation
        && lemma.status == Status::Pass;
    verdict(
        "nash",
        pass,
        &format!(
            "C(4)={:.6} C(8)={:.6} gradient_only_violated={} lemma_max_ratio={:.4} lemma_operator_ratio={:.4}",
            rc.implied_constant, rf.implied_constant, rc.gradient_only_violation && rf.gradient_only_violation,
            lemma.max_ratio, lemma.operator_ratio
        ),
    );
}

#[test]
fn ouhabaz_criterion() {
    let mut pass = true;
    let mut detail = String::new();
    for p in all() {
        if !p.case.sys.admissibility.admissible {
            continue;
        }
        let r = check_ouhabaz_contractivity_criterion(&p.case.mesh, &p.case.sys, &p.case.spec, 100, 5).unwrap();
        pass &= r.min_plus >= -OUHABAZ_TOL && r.min_minus >= -OUHABAZ_TOL;
        detail += &format!("[{} plus={:.3e} minus={:.3e}] ", p.case.name, r.min_plus, r.min_minus);
    }
    verdict("ouhabaz_criterion", pass, &detail);
}

#[test]
fn eventual_positivity() {
    let p = antisymmetric();
    let sys = &p.case.sys;
    assert!(sys.admissibility.admissible);
    let mut times = default_grid();
    times.extend([2.0, 4.0, 8.0, 16.0]);
    let rep = check_eventual_positivity(sys, &p.case.spec, &p.primal, &times, 20, 17).unwrap();
    let bw_sym = (&sys.bw + sys.bw.transpose()).amax();
    let hyp = rep.hypothesis_ok && bw_sym <= 1e-10 && rep.constant_defect <= 1e-10;
    let anti_ok = hyp && rep.t0.is_some() && rep.delta.is_some_and(|d| d > 0.0 && d.is_finite());

    let n = neumann();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let us = nonnegative_samples(n.case.sys.num_vertices(), 20, &mut rng);
    let limit = positivity_ratio(&n.case.sys, &n.primal, 50.0, &us).unwrap();
    let target = 1.0 / n.case.sys.volume();
    let mean_ok = (limit - target).abs() <= MEAN_LIMIT_TOL;
    verdict(
        "eventual_positivity",
        anti_ok && mean_ok,
        &format!(
            "t0={:?} delta={:?} |B+B*|={:.1e} |B1|={:.1e} neumann_limit={:.9} target={:.9}",
            rep.t0, rep.delta, bw_sym, rep.constant_defect, limit, target
        ),
    );
}

/// Hat-function oracle on `[0, len]` with `cells` equal cells.
struct Hats {
    len: f64,
    cells: usize,
}

impl Hats {
    fn h(&self) -> f64 {
        self.len / self.cells as f64
    }
    fn phi(&self, k: usize, x: f64) -> f64 {
        (1.0 - (x - k as f64 * self.h()).abs() / self.h()).max(0.0)
    }
    fn dphi(&self, k: usize, x: f64) -> f64 {
        let xk = k as f64 * self.h();
        if (x - xk).abs() >= self.h() {
            0.0
        } else if x < xk {
            1.0 / self.h()
        } else {
            -1.0 / self.h()
        }
    }
    /// Composite Simpson over each cell with `sub` panels.
    fn integrate(&self, f: impl Fn(f64) -> f64, sub: usize) -> f64 {
        let mut total = 0.0;
        for c in 0..self.cells {
            let a = c as f64 * self.h();
            let w = self.h() / sub as f64;
            for s in 0..sub {
                let x0 = a + s as f64 * w;
                total += w / 6.0 * (f(x0 + 1e-15) + 4.0 * f(x0 + w / 2.0) + f(x0 + w - 1e-15));
            }
        }
        total
    }
}

#[test]
fn oracle_equivalence() {
    let hats = Hats { len: 1.5, cells: 4 };
    let n = 5;
    let mesh = build_box_mesh(&[hats.len], &[hats.cells]).unwrap();
    let coef = |x: f64| 1.0 + 2.0 * x;
    let field = CoefficientField::from_centroids(&mesh, |c| DMatrix::from_element(1, 1, coef(c[0]))).unwrap();
    let cell_coef = |x: f64| coef(((x / hats.h()).floor().min(3.0) + 0.5) * hats.h());
    let dense = DMatrix::from_row_slice(2, 2, &[0.2, -0.5, 0.4, 0.1]);
    let spec = build_boundary_operator(BoundaryRepr::Dense(dense.clone()), &mesh).unwrap();
    let alpha = field.alpha();
    let sys = assemble_system(&mesh, &field, &spec, alpha).unwrap();

    let k = DMatrix::from_fn(n, n, |i, j| hats.integrate(|x| cell_coef(x) * hats.dphi(i, x) * hats.dphi(j, x), 16));
    let k_id = DMatrix::from_fn(n, n, |i, j| hats.integrate(|x| hats.dphi(i, x) * hats.dphi(j, x), 16));
    let mc = DMatrix::from_fn(n, n, |i, j| hats.integrate(|x| hats.phi(i, x) * hats.phi(j, x), 16));
    let m = DVector::from_fn(n, |i, _| hats.integrate(|x| hats.phi(i, x), 16));
    let mut gamma = DMatrix::zeros(2, n);
    gamma[(0, 0)] = 1.0;
    gamma[(1, n - 1)] = 1.0;
    // Counting measure at the endpoints: Mb = I, so Bw is the matrix itself.
    let bw = dense.clone();
    let form_a = &k + gamma.transpose() * &bw * &gamma;
    let form_a_tilde = &form_a + DMatrix::from_diagonal(&m) * alpha;
    let form_a_adj = k.transpose() + gamma.transpose() * bw.transpose() * &gamma;
    let h1 = &k_id + DMatrix::from_diagonal(&m);

    let checks: [(&str, &DMatrix<f64>, DMatrix<f64>); 10] = [
        ("K", &sys.k, k.clone()),
        ("K_id", &sys.k_id, k_id),
        ("M", &DMatrix::from_diagonal(&sys.m), DMatrix::from_diagonal(&m)),
        ("M_consistent", &sys.m_consistent, mc),
        ("Mb", &DMatrix::from_diagonal(&sys.mb), DMatrix::identity(2, 2)),
        ("Gamma", &sys.gamma, gamma),
        ("Bw", &sys.bw, bw),
        ("FormA", &sys.form_a, form_a),
        ("FormAtilde", &sys.form_a_tilde, form_a_tilde.clone()),
        ("FormA_adj", &sys.form_a_adj, form_a_adj.clone()),
    ];
    let mut worst = 0.0f64;
    let mut worst_name = "";
    for (name, got, want) in checks.iter() {
        let e = (*got - want).amax();
        if e > worst {
            worst = e;
            worst_name = name;
        }
    }
    let adj_tilde = (&sys.form_a_tilde_adj - (&form_a_adj + DMatrix::from_diagonal(&m) * alpha)).amax();
    let h1_err = (&sys.h1 - h1).amax();
    worst = worst.max(adj_tilde).max(h1_err);

    // Exponential oracles: P = diag(1, 2) and a pure-mass form.
    let two = SemigroupEvaluator::from_form(
        DVector::from_element(2, 1.0),
        &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
        0.0,
        DEFAULT_DENSE_CAP,
    )
    .unwrap();
    let s = two.exponential(1.0).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[(-1.0f64).exp(), 0.0, 0.0, (-2.0f64).exp()]);
    let mut expm_err = (s.as_ref() - want).amax();
    let mass = DVector::from_vec(vec![0.125, 0.25, 0.5, 0.125]);
    let pure = SemigroupEvaluator::from_form(mass.clone(), &DMatrix::from_diagonal(&mass), 0.0, DEFAULT_DENSE_CAP).unwrap();
    for t in [0.0, 0.3, 1.0, 7.5] {
        let s = pure.exponential(t).unwrap();
        expm_err = expm_err.max((s.as_ref() - DMatrix::identity(4, 4) * (-t).exp()).amax());
    }

    verdict(
        "oracle_equivalence",
        worst <= ORACLE_TOL && expm_err <= EXPM_TOL,
        &format!("max_matrix_error={worst:.2e} (worst {worst_name}) max_exponential_error={expm_err:.2e}"),
    );
}
