//! Solver-agnostic convex programs.
//!
//! A [`ConicProgram`] is a linear objective over named variable blocks and a
//! list of convex constraints. Complex blocks are stored as interleaved real
//! coordinates: entry `i` of a complex block at offset `o` occupies
//! `(o + 2i, o + 2i + 1)` as `(re, im)`. This convention is fixed; program
//! dumps and solution vectors rely on it.

mod check;
mod solve;

use std::fmt;

use num_complex::Complex64;

pub use check::{constraint_violation, max_violation};
pub use solve::{solve, SolveLimits, SolveOptions, SolveReport, SolveStatus};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: String,
    pub kind: BlockKind,
    pub len: usize,
    pub offset: usize,
}

impl VarBlock {
    pub fn real_width(&self) -> usize {
        match self.kind {
            BlockKind::Real => self.len,
            BlockKind::Complex => 2 * self.len,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(usize);

/// Real and imaginary coordinates of one complex scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexVar {
    pub re: usize,
    pub im: usize,
}

/// Real affine form `Σ a_i x_i + c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, coef: f64) -> Self {
        Self {
            terms: vec![(i, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, i: usize, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((i, coef));
        }
        self
    }

    pub fn with_term(mut self, i: usize, coef: f64) -> Self {
        self.add_term(i, coef);
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add(&mut self, other: &LinExpr) -> &mut Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(i, a)| (*i, a * s)).collect(),
            constant: self.constant * s,
        }
    }

    /// Adds `Re{c · z}`.
    pub fn add_re_product(&mut self, c: Complex64, z: ComplexVar) -> &mut Self {
        self.add_term(z.re, c.re);
        self.add_term(z.im, -c.im)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(i, a)| a * x[*i]).sum::<f64>()
    }

    /// `|c| + Σ |a_i x_i|`, the magnitude scale used by the feasibility checker.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.constant.abs() + self.terms.iter().map(|(i, a)| (a * x[*i]).abs()).sum::<f64>()
    }
}

/// Complex affine form, kept as its real and imaginary parts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CplxExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CplxExpr {
    pub fn constant(c: Complex64) -> Self {
        Self {
            re: LinExpr::constant(c.re),
            im: LinExpr::constant(c.im),
        }
    }

    /// Adds `c · z`.
    pub fn add_product(&mut self, c: Complex64, z: ComplexVar) -> &mut Self {
        self.re.add_term(z.re, c.re);
        self.re.add_term(z.im, -c.im);
        self.im.add_term(z.im, c.re);
        self.im.add_term(z.re, c.im);
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            re: self.re.scaled(s),
            im: self.im.scaled(s),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `e(x) = 0`.
    Eq(LinExpr),
    /// `e(x) ≤ 0`.
    Le(LinExpr),
    /// `Σ_j |s_j(x)|² + a(x) ≤ 0`.
    Quadratic {
        squares: Vec<CplxExpr>,
        affine: LinExpr,
    },
    /// `rate(x) ≤ scale · log2(1 + sinr(x))`.
    LogRate {
        rate: LinExpr,
        sinr: LinExpr,
        scale: f64,
    },
    /// `|entry(x)| ≤ radius`.
    NormBall { entry: CplxExpr, radius: f64 },
}

impl Constraint {
    fn exprs(&self) -> Vec<&LinExpr> {
        match self {
            Constraint::Eq(e) | Constraint::Le(e) => vec![e],
            Constraint::Quadratic { squares, affine } => {
                let mut v: Vec<&LinExpr> = squares.iter().flat_map(|s| [&s.re, &s.im]).collect();
                v.push(affine);
                v
            }
            Constraint::LogRate { rate, sinr, .. } => vec![rate, sinr],
            Constraint::NormBall { entry, .. } => vec![&entry.re, &entry.im],
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Constraint::Eq(_) => "eq",
            Constraint::Le(_) => "le",
            Constraint::Quadratic { .. } => "quad",
            Constraint::LogRate { .. } => "lograte",
            Constraint::NormBall { .. } => "ball",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    blocks: Vec<VarBlock>,
    n_vars: usize,
    objective: LinExpr,
    constraints: Vec<(String, Constraint)>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_block(&mut self, name: &str, kind: BlockKind, len: usize) -> BlockId {
        let block = VarBlock {
            name: name.to_string(),
            kind,
            len,
            offset: self.n_vars,
        };
        self.n_vars += block.real_width();
        self.blocks.push(block);
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_real_block(&mut self, name: &str, len: usize) -> BlockId {
        self.add_block(name, BlockKind::Real, len)
    }

    pub fn add_complex_block(&mut self, name: &str, len: usize) -> BlockId {
        self.add_block(name, BlockKind::Complex, len)
    }

    pub fn real_var(&self, block: BlockId, i: usize) -> usize {
        let b = &self.blocks[block.0];
        debug_assert!(b.kind == BlockKind::Real && i < b.len);
        b.offset + i
    }

    pub fn complex_var(&self, block: BlockId, i: usize) -> ComplexVar {
        let b = &self.blocks[block.0];
        debug_assert!(b.kind == BlockKind::Complex && i < b.len);
        ComplexVar {
            re: b.offset + 2 * i,
            im: b.offset + 2 * i + 1,
        }
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn add_constraint(&mut self, label: impl Into<String>, c: Constraint) {
        self.constraints.push((label.into(), c));
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn blocks(&self) -> &[VarBlock] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[(String, Constraint)] {
        &self.constraints
    }

    /// Mutable access for reordering or pruning constraints.
    pub fn constraints_mut(&mut self) -> &mut Vec<(String, Constraint)> {
        &mut self.constraints
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        let check = |e: &LinExpr, what: &str| -> Result<()> {
            for (i, a) in &e.terms {
                if *i >= n {
                    return Err(Error::MalformedProgram(format!(
                        "{what} references variable {i}, only {n} declared"
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::MalformedProgram(format!("{what} has a non-finite coefficient")));
                }
            }
            if !e.constant.is_finite() {
                return Err(Error::MalformedProgram(format!("{what} has a non-finite constant")));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (label, c) in &self.constraints {
            for e in c.exprs() {
                check(e, label)?;
            }
            match c {
                Constraint::LogRate { scale, .. } if !(*scale > 0.0 && scale.is_finite()) => {
                    return Err(Error::MalformedProgram(format!("{label}: scale must be > 0")))
                }
                Constraint::NormBall { radius, .. } if !(*radius >= 0.0) => {
                    return Err(Error::MalformedProgram(format!("{label}: radius must be >= 0")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Values of a real block from a primal vector.
    pub fn real_values(&self, name: &str, x: &[f64]) -> Option<Vec<f64>> {
        let b = self.block(name).filter(|b| b.kind == BlockKind::Real)?;
        Some(x[b.offset..b.offset + b.len].to_vec())
    }

    /// Values of a complex block from a primal vector.
    pub fn complex_values(&self, name: &str, x: &[f64]) -> Option<Vec<Complex64>> {
        let b = self.block(name).filter(|b| b.kind == BlockKind::Complex)?;
        Some(
            (0..b.len)
                .map(|i| Complex64::new(x[b.offset + 2 * i], x[b.offset + 2 * i + 1]))
                .collect(),
        )
    }

    fn var_name(&self, i: usize) -> String {
        for b in &self.blocks {
            if i >= b.offset && i < b.offset + b.real_width() {
                let j = i - b.offset;
                return match b.kind {
                    BlockKind::Real => format!("{}[{j}]", b.name),
                    BlockKind::Complex => {
                        format!("{}[{}].{}", b.name, j / 2, if j % 2 == 0 { "re" } else { "im" })
                    }
                };
            }
        }
        format!("x{i}")
    }

    fn fmt_expr(&self, e: &LinExpr) -> String {
        let mut s = String::new();
        for (i, a) in &e.terms {
            s.push_str(&format!("{a:+.6e}*{} ", self.var_name(*i)));
        }
        s.push_str(&format!("{:+.6e}", e.constant));
        s
    }
}

/// Human-readable dump for debugging. Not a stable format.
impl fmt::Display for ConicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variables ({} real coordinates):", self.n_vars)?;
        for b in &self.blocks {
            writeln!(
                f,
                "  {} {:?}[{}] @ {}",
                b.name, b.kind, b.len, b.offset
            )?;
        }
        writeln!(f, "minimize {}", self.fmt_expr(&self.objective))?;
        writeln!(f, "subject to ({} constraints):", self.constraints.len())?;
        for (label, c) in &self.constraints {
            match c {
                Constraint::Eq(e) => writeln!(f, "  [{label}] eq: {} = 0", self.fmt_expr(e))?,
                Constraint::Le(e) => writeln!(f, "  [{label}] le: {} <= 0", self.fmt_expr(e))?,
                Constraint::Quadratic { squares, affine } => {
                    writeln!(f, "  [{label}] quad: sum of {} squares + ({}) <= 0", squares.len(), self.fmt_expr(affine))?;
                    for s in squares {
                        writeln!(f, "      |({}) + j({})|^2", self.fmt_expr(&s.re), self.fmt_expr(&s.im))?;
                    }
                }
                Constraint::LogRate { rate, sinr, scale } => writeln!(
                    f,
                    "  [{label}] {}: {} <= {scale:.6e}*log2(1 + {})",
                    c.kind(),
                    self.fmt_expr(rate),
                    self.fmt_expr(sinr)
                )?,
                Constraint::NormBall { entry, radius } => writeln!(
                    f,
                    "  [{label}] ball: |({}) + j({})| <= {radius}",
                    self.fmt_expr(&entry.re),
                    self.fmt_expr(&entry.im)
                )?,
            }
        }
        Ok(())
    }
}
