//! Interior-point backend (Clarabel) behind the [`ConicProgram`] contract.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::check::max_violation;
use super::{ConicProgram, Constraint, LinExpr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub max_iterations: u32,
    /// Wall-clock limit per solve; `None` for no limit.
    pub time_limit_s: Option<f64>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            time_limit_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// `ε_feas`: largest scaled constraint violation accepted as optimal.
    pub eps_feas: f64,
    /// `ε_obj`: duality-gap tolerance passed to the backend.
    pub eps_obj: f64,
    pub limits: SolveLimits,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps_feas: 1e-7,
            eps_obj: 1e-7,
            limits: SolveLimits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Primal values in the program's real coordinates; `None` unless optimal.
    pub primal: Option<Vec<f64>>,
    /// Objective value including its constant; NaN without a solution.
    pub objective: f64,
    /// `|primal − dual|` objective as reported by the backend.
    pub duality_gap: f64,
    /// Largest scaled constraint violation of the returned primal.
    pub max_violation: f64,
    pub solve_time_s: f64,
    pub iterations: u32,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn real_block(&self, program: &ConicProgram, name: &str) -> Option<Vec<f64>> {
        program.real_values(name, self.primal.as_deref()?)
    }

    pub fn complex_block(&self, program: &ConicProgram, name: &str) -> Option<Vec<Complex64>> {
        program.complex_values(name, self.primal.as_deref()?)
    }

    fn failed(status: SolveStatus, started: Instant, iterations: u32) -> Self {
        Self {
            status,
            primal: None,
            objective: f64::NAN,
            duality_gap: f64::NAN,
            max_violation: f64::NAN,
            solve_time_s: started.elapsed().as_secs_f64(),
            iterations,
        }
    }
}

/// Rows of `A x + s = b` with `s` in one cone.
#[derive(Default)]
struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    /// Appends a row whose slack equals `e(x)`.
    fn push(&mut self, e: &LinExpr) {
        let row = self.b.len();
        for (j, a) in &e.terms {
            self.i.push(row);
            self.j.push(*j);
            self.v.push(-a);
        }
        self.b.push(e.constant);
    }

    fn len(&self) -> usize {
        self.b.len()
    }

    fn append(&mut self, other: Rows) {
        let off = self.b.len();
        self.i.extend(other.i.into_iter().map(|r| r + off));
        self.j.extend(other.j);
        self.v.extend(other.v);
        self.b.extend(other.b);
    }
}

fn assemble(program: &ConicProgram) -> (Rows, Vec<SupportedConeT<f64>>) {
    let mut zero = Rows::default();
    let mut nonneg = Rows::default();
    let mut rest = Rows::default();
    let mut rest_cones = Vec::new();
    let ln2 = std::f64::consts::LN_2;
    for (_, c) in program.constraints() {
        match c {
            Constraint::Eq(e) => zero.push(e),
            Constraint::Le(e) => nonneg.push(&e.scaled(-1.0)),
            Constraint::Quadratic { squares, affine } => {
                // Σ|s|² ≤ t with t = −affine  ⇔  (t+1, t−1, 2s) ∈ SOC
                let t = affine.scaled(-1.0);
                rest.push(&t.clone().with_constant(1.0));
                rest.push(&t.with_constant(-1.0));
                for s in squares {
                    rest.push(&s.re.scaled(2.0));
                    rest.push(&s.im.scaled(2.0));
                }
                rest_cones.push(SupportedConeT::SecondOrderConeT(2 + 2 * squares.len()));
            }
            Constraint::LogRate { rate, sinr, scale } => {
                // rate·ln2/scale ≤ ln(1 + sinr)  ⇔  (rate·ln2/scale, 1, 1 + sinr) ∈ K_exp
                rest.push(&rate.scaled(ln2 / scale));
                rest.push(&LinExpr::constant(1.0));
                rest.push(&sinr.clone().with_constant(1.0));
                rest_cones.push(SupportedConeT::ExponentialConeT());
            }
            Constraint::NormBall { entry, radius } => {
                rest.push(&LinExpr::constant(*radius));
                rest.push(&entry.re);
                rest.push(&entry.im);
                rest_cones.push(SupportedConeT::SecondOrderConeT(3));
            }
        }
    }
    let mut cones = Vec::new();
    if zero.len() > 0 {
        cones.push(SupportedConeT::ZeroConeT(zero.len()));
    }
    if nonneg.len() > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg.len()));
    }
    cones.extend(rest_cones);
    let mut rows = zero;
    rows.append(nonneg);
    rows.append(rest);
    (rows, cones)
}

/// Backend configurations tried in order while the previous one ends in a
/// numerical failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Attempt {
    Default,
    NoEquilibration,
    ShortSteps,
}

const ATTEMPTS: [Attempt; 3] = [Attempt::Default, Attempt::NoEquilibration, Attempt::ShortSteps];

fn settings_for(options: &SolveOptions, attempt: Attempt) -> DefaultSettings<f64> {
    let mut settings = DefaultSettings {
        verbose: false,
        max_iter: options.limits.max_iterations,
        time_limit: options.limits.time_limit_s.unwrap_or(f64::INFINITY),
        tol_gap_abs: options.eps_obj.min(1e-8),
        tol_gap_rel: options.eps_obj.min(1e-8),
        tol_feas: (options.eps_feas * 0.1).min(1e-8),
        ..DefaultSettings::default()
    };
    match attempt {
        Attempt::Default => {}
        Attempt::NoEquilibration => settings.equilibrate_enable = false,
        Attempt::ShortSteps => settings.max_step_fraction = 0.9,
    }
    settings
}

/// Solves `program`. Never panics: backend failures surface as
/// [`SolveStatus::NumericalFailure`].
///
/// A numerical failure of the backend (stalled progress, numerical error or
/// a returned point the independent checker rejects) is retried without
/// equilibration and then with shortened steps. `iterations` and
/// `solve_time_s` cover all attempts.
pub fn solve(program: &ConicProgram, options: &SolveOptions) -> SolveReport {
    let started = Instant::now();
    if program.validate().is_err() {
        return SolveReport::failed(SolveStatus::NumericalFailure, started, 0);
    }
    let n = program.n_vars();
    let (rows, cones) = assemble(program);
    let m = rows.len();
    let a = CscMatrix::new_from_triplets(m, n, rows.i, rows.j, rows.v);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for (j, c) in &program.objective().terms {
        q[*j] += c;
    }
    let b = rows.b;
    let mut iterations = 0;
    let mut last = SolveReport::failed(SolveStatus::NumericalFailure, started, 0);
    for attempt in ATTEMPTS {
        let settings = settings_for(options, attempt);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).ok()?;
            solver.solve();
            Some(solver.solution)
        }));
        let Ok(Some(sol)) = outcome else {
            log::debug!("backend setup failed ({attempt:?})");
            continue;
        };
        log::debug!("backend status {:?} after {} iterations ({attempt:?})", sol.status, sol.iterations);
        iterations += sol.iterations;
        last = finish(program, options, sol, started, iterations);
        if last.status != SolveStatus::NumericalFailure {
            return last;
        }
    }
    last
}

fn finish(
    program: &ConicProgram,
    options: &SolveOptions,
    sol: clarabel::solver::DefaultSolution<f64>,
    started: Instant,
    iterations: u32,
) -> SolveReport {
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => None,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            Some(SolveStatus::Infeasible)
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => Some(SolveStatus::IterationLimit),
        _ => Some(SolveStatus::NumericalFailure),
    };
    if let Some(s) = status {
        return SolveReport::failed(s, started, iterations);
    }
    let x = sol.x;
    let (viol, _) = max_violation(program, &x);
    if !(viol <= options.eps_feas) || x.iter().any(|v| !v.is_finite()) {
        let mut r = SolveReport::failed(SolveStatus::NumericalFailure, started, iterations);
        r.max_violation = viol;
        return r;
    }
    SolveReport {
        status: SolveStatus::Optimal,
        objective: program.objective().eval(&x),
        duality_gap: (sol.obj_val - sol.obj_val_dual).abs(),
        max_violation: viol,
        primal: Some(x),
        solve_time_s: started.elapsed().as_secs_f64(),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{CplxExpr, LinExpr};

    #[test]
    fn minimize_x_above_one() {
        let mut p = ConicProgram::new();
        let b = p.add_real_block("x", 1);
        let x = p.real_var(b, 0);
        p.set_objective(LinExpr::var(x));
        p.add_constraint("lb", Constraint::Le(LinExpr::term(x, -1.0).with_constant(1.0)));
        let r = solve(&p, &SolveOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.real_block(&p, "x").unwrap()[0] - 1.0).abs() < 1e-7);
        assert!((r.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn log_rate_is_monotone_in_sinr() {
        // min −r  s.t.  r ≤ log2(1 + q),  q ≤ 3
        let mut p = ConicProgram::new();
        let b = p.add_real_block("v", 2);
        let (r, q) = (p.real_var(b, 0), p.real_var(b, 1));
        p.set_objective(LinExpr::term(r, -1.0));
        p.add_constraint(
            "rate",
            Constraint::LogRate {
                rate: LinExpr::var(r),
                sinr: LinExpr::var(q),
                scale: 1.0,
            },
        );
        p.add_constraint("cap", Constraint::Le(LinExpr::var(q).with_constant(-3.0)));
        let rep = solve(&p, &SolveOptions::default());
        assert!(rep.is_optimal());
        let v = rep.real_block(&p, "v").unwrap();
        assert!((v[0] - 2.0).abs() < 1e-6, "{v:?}");
        assert!((v[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_is_flagged_without_primal() {
        let mut p = ConicProgram::new();
        let b = p.add_real_block("x", 1);
        let x = p.real_var(b, 0);
        p.set_objective(LinExpr::var(x));
        p.add_constraint("a", Constraint::Le(LinExpr::var(x).with_constant(1.0))); // x ≤ −1
        p.add_constraint("b", Constraint::Le(LinExpr::term(x, -1.0))); // x ≥ 0
        let r = solve(&p, &SolveOptions::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.primal.is_none());
    }

    #[test]
    fn pinned_quadratic_objective_value() {
        // min t  s.t. |a1^H w|² + |a2^H w|² ≤ t,  w pinned to w0
        let a = [
            [Complex64::new(0.3, -0.4), Complex64::new(1.2, 0.1)],
            [Complex64::new(-0.5, 0.2), Complex64::new(0.7, 0.9)],
        ];
        let w0 = [Complex64::new(0.8, 0.6), Complex64::new(-0.1, 0.3)];
        let mut p = ConicProgram::new();
        let wb = p.add_complex_block("w", 2);
        let tb = p.add_real_block("t", 1);
        let t = p.real_var(tb, 0);
        p.set_objective(LinExpr::var(t));
        let mut squares = Vec::new();
        for ai in &a {
            let mut e = CplxExpr::default();
            for j in 0..2 {
                e.add_product(ai[j].conj(), p.complex_var(wb, j));
            }
            squares.push(e);
        }
        p.add_constraint(
            "epi",
            Constraint::Quadratic {
                squares,
                affine: LinExpr::term(t, -1.0),
            },
        );
        for j in 0..2 {
            let z = p.complex_var(wb, j);
            p.add_constraint("pin", Constraint::Eq(LinExpr::var(z.re).with_constant(-w0[j].re)));
            p.add_constraint("pin", Constraint::Eq(LinExpr::var(z.im).with_constant(-w0[j].im)));
        }
        let expected: f64 = a
            .iter()
            .map(|ai| (ai[0].conj() * w0[0] + ai[1].conj() * w0[1]).norm_sqr())
            .sum();
        let r = solve(&p, &SolveOptions::default());
        assert!(r.is_optimal());
        assert!((r.objective - expected).abs() < 1e-8, "{} vs {expected}", r.objective);
    }

    #[test]
    fn malformed_program_is_numerical_failure() {
        let mut p = ConicProgram::new();
        p.add_real_block("x", 1);
        p.set_objective(LinExpr::var(5));
        let r = solve(&p, &SolveOptions::default());
        assert_eq!(r.status, SolveStatus::NumericalFailure);
    }
}
