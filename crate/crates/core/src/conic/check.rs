//! Feasibility checking, independent of any solver.

use super::{ConicProgram, Constraint};

/// Scaled violation of one constraint at `x`; zero when satisfied.
///
/// Violations are divided by `1 +` the magnitude of the terms involved so the
/// same tolerance applies to constraints of very different scales.
pub fn constraint_violation(c: &Constraint, x: &[f64]) -> f64 {
    match c {
        Constraint::Eq(e) => e.eval(x).abs() / (1.0 + e.magnitude(x)),
        Constraint::Le(e) => e.eval(x).max(0.0) / (1.0 + e.magnitude(x)),
        Constraint::Quadratic { squares, affine } => {
            let sq: f64 = squares.iter().map(|s| s.eval(x).norm_sqr()).sum();
            (sq + affine.eval(x)).max(0.0) / (1.0 + sq + affine.magnitude(x))
        }
        Constraint::LogRate { rate, sinr, scale } => {
            let r = rate.eval(x);
            let q = sinr.eval(x);
            if q <= -1.0 {
                return 1.0 + r.abs() + q.abs();
            }
            let cap = scale * q.ln_1p() / std::f64::consts::LN_2;
            (r - cap).max(0.0) / (1.0 + r.abs())
        }
        Constraint::NormBall { entry, radius } => {
            (entry.eval(x).norm() - radius).max(0.0) / (1.0 + radius)
        }
    }
}

/// Largest scaled violation over all constraints, with the offending label.
pub fn max_violation(program: &ConicProgram, x: &[f64]) -> (f64, Option<String>) {
    let mut worst = (0.0, None);
    for (label, c) in program.constraints() {
        let v = constraint_violation(c, x);
        if v > worst.0 || v.is_nan() {
            worst = (v, Some(label.clone()));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{CplxExpr, LinExpr};
    use num_complex::Complex64;

    #[test]
    fn scaled_violations() {
        let x = [2.0, 3.0];
        assert_eq!(constraint_violation(&Constraint::Le(LinExpr::var(0).with_constant(-2.0)), &x), 0.0);
        let v = constraint_violation(&Constraint::Le(LinExpr::var(0).with_constant(-1.0)), &x);
        assert!((v - 1.0 / 4.0).abs() < 1e-15);
        let c = Constraint::LogRate {
            rate: LinExpr::var(0),
            sinr: LinExpr::var(1),
            scale: 1.0,
        };
        // 2 <= log2(1 + 3)
        assert_eq!(constraint_violation(&c, &x), 0.0);
        let mut e = CplxExpr::default();
        e.add_product(Complex64::new(1.0, 0.0), crate::conic::ComplexVar { re: 0, im: 1 });
        let ball = Constraint::NormBall { entry: e.clone(), radius: 1.0 };
        assert!(constraint_violation(&ball, &x) > 0.0);
        let quad = Constraint::Quadratic {
            squares: vec![e],
            affine: LinExpr::constant(-13.0),
        };
        assert_eq!(constraint_violation(&quad, &x), 0.0);
    }
}
