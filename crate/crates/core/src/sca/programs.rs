//! Convex approximations of the beamforming and phase sub-problems.
//!
//! Both programs share the rate block: per user a normalized rate
//! `ρ_k = r_k / r_k^des`, an epigraph variable `e_k ≥ |ρ_k − 1|` and a
//! normalized slack `u_k = q_k / q̂_k` with `q̂_k = max(q̃_k, 1)`. Beamformers
//! are scaled by the largest AP budget and channels by the noise amplitude so
//! that all coefficients are of moderate size; each linearized SINR row is
//! further multiplied by `min(q̃_k, 1) / (Ĩ_k + 1)`, where `Ĩ_k + 1` is the
//! normalized interference-plus-noise at the linearization point. The second
//! factor keeps rows of weak users (tiny `q̃_k`) well scaled.

use num_complex::Complex64;

use crate::conic::{BlockId, ComplexVar, ConicProgram, Constraint, CplxExpr, LinExpr};
use crate::error::{Error, Result};
use crate::metrics::{inner, sinr_all, DesignPoint};
use crate::sca::settings::Subproblem;
use crate::system::{CVector, ChannelState, SystemConfig};

/// Users whose SINR at the linearization point is below this value are pinned
/// to zero rate: their linearized SINR constraint would be infeasible.
pub const STARVED_SINR: f64 = 1e-9;

struct RateBlock {
    rho: BlockId,
    e: BlockId,
    u: BlockId,
}

/// A built sub-problem together with what is needed to map between design
/// points and program variables.
#[derive(Debug, Clone)]
pub struct ScaProgram {
    pub program: ConicProgram,
    pub kind: Subproblem,
    /// Users held at zero rate in this program.
    pub pinned: Vec<bool>,
    /// Phase penalty weight (zero for beamforming programs).
    pub penalty: f64,
    linearization: DesignPoint,
    qos: Vec<f64>,
    power_ref: f64,
    noise: f64,
    q_scale: Vec<f64>,
    sinr_rows: Vec<Option<usize>>,
    row_scale: Vec<f64>,
}

fn check_inputs(channels: &ChannelState, point: &DesignPoint, config: &SystemConfig) -> Result<()> {
    point.check_dimensions(channels)?;
    if config.n_aps != channels.n_aps()
        || config.antennas_per_ap != channels.antennas_per_ap()
        || config.n_users != channels.n_users()
        || config.qos_rate_bps.len() != channels.n_users()
        || config.max_power_w_per_ap.len() != channels.n_aps()
    {
        return Err(Error::Dimension("configuration does not match channel dimensions".into()));
    }
    Ok(())
}

/// Pinned flags and `q̃`, validating `q̃ > 0` for every referenced user.
fn linearization_slacks(
    channels: &ChannelState,
    point: &DesignPoint,
    noise: f64,
) -> Result<Vec<bool>> {
    let gamma = sinr_all(channels, point, noise);
    let mut pinned = Vec::with_capacity(gamma.len());
    for (k, g) in gamma.iter().enumerate() {
        let starved = !(*g >= STARVED_SINR);
        let q = point.slacks[k];
        if !starved && !(q > 0.0 && q.is_finite()) {
            return Err(Error::Linearization(format!(
                "user {k}: linearization slack must be > 0, got {q}"
            )));
        }
        pinned.push(starved);
    }
    Ok(pinned)
}

fn add_rate_block(
    p: &mut ConicProgram,
    config: &SystemConfig,
    q_scale: &[f64],
    pinned: &[bool],
) -> (RateBlock, LinExpr) {
    let k = q_scale.len();
    let rb = RateBlock {
        rho: p.add_real_block("rho", k),
        e: p.add_real_block("e", k),
        u: p.add_real_block("u", k),
    };
    let mut objective = LinExpr::default();
    for user in 0..k {
        let rho = p.real_var(rb.rho, user);
        let e = p.real_var(rb.e, user);
        let u = p.real_var(rb.u, user);
        objective.add_term(e, 1.0);
        p.add_constraint(
            format!("gap_hi[{user}]"),
            Constraint::Le(LinExpr::var(rho).with_term(e, -1.0).with_constant(-1.0)),
        );
        p.add_constraint(
            format!("gap_lo[{user}]"),
            Constraint::Le(LinExpr::term(rho, -1.0).with_term(e, -1.0).with_constant(1.0)),
        );
        if pinned[user] {
            p.add_constraint(format!("pin_rate[{user}]"), Constraint::Eq(LinExpr::var(rho)));
            p.add_constraint(format!("pin_sinr[{user}]"), Constraint::Eq(LinExpr::var(u)));
            continue;
        }
        p.add_constraint(format!("rate_nonneg[{user}]"), Constraint::Le(LinExpr::term(rho, -1.0)));
        p.add_constraint(format!("sinr_nonneg[{user}]"), Constraint::Le(LinExpr::term(u, -1.0)));
        p.add_constraint(
            format!("rate[{user}]"),
            Constraint::LogRate {
                rate: LinExpr::var(rho),
                sinr: LinExpr::term(u, q_scale[user]),
                scale: config.bandwidth_hz / config.qos_rate_bps[user],
            },
        );
    }
    (rb, objective)
}

/// Adds the linearized SINR row of `user` given the affine forms `x_i` of
/// `a_k^H w_i / σ` and their values `x̃_i` at the linearization point.
/// Returns the constraint index and the natural-units row scale.
fn add_sinr_row(
    p: &mut ConicProgram,
    user: usize,
    xs: Vec<CplxExpr>,
    x_ref: &[Complex64],
    q_ref: f64,
    u: usize,
    noise: f64,
) -> (usize, f64) {
    let interference: f64 = x_ref
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != user)
        .map(|(_, x)| x.norm_sqr())
        .sum();
    let s = interference + 1.0;
    // row multiplier t / s with t = min(q̃, 1); q = q̂ u with q̂ = max(q̃, 1)
    let t = q_ref.min(1.0);
    let root = (t / s).sqrt();
    let xk = x_ref[user];
    let mut squares = Vec::with_capacity(xs.len().saturating_sub(1));
    let mut desired = None;
    for (i, x) in xs.into_iter().enumerate() {
        if i == user {
            desired = Some(x);
        } else {
            squares.push(x.scaled(root));
        }
    }
    let desired = desired.expect("user index within range");
    // t/s · (|x̃|² q / q̃² − 2 Re{x̃^* x} / q̃), with t q̂ = q̃
    let c = -2.0 * t / (q_ref * s);
    let mut affine = LinExpr::constant(t / s);
    affine.add_term(u, xk.norm_sqr() / (q_ref * s));
    affine.add(&desired.re.scaled(c * xk.re));
    affine.add(&desired.im.scaled(c * xk.im));
    p.add_constraint(format!("sinr[{user}]"), Constraint::Quadratic { squares, affine });
    (p.constraints().len() - 1, noise * s / t)
}

fn slack_scales(q_ref: &[f64]) -> Vec<f64> {
    q_ref.iter().map(|q| q.max(1.0)).collect()
}

/// Beamforming sub-problem around `point` with the phases held fixed.
///
/// `point.slacks` supplies `q̃`; it must be positive for every user whose SINR
/// at `point` is at least [`STARVED_SINR`].
pub fn build_beamforming_program(
    channels: &ChannelState,
    point: &DesignPoint,
    config: &SystemConfig,
) -> Result<ScaProgram> {
    check_inputs(channels, point, config)?;
    let noise = config.noise_power_w;
    let pinned = linearization_slacks(channels, point, noise)?;
    let k = channels.n_users();
    let nl = channels.total_antennas();
    let l = channels.antennas_per_ap();
    let power_ref = config.max_power_w_per_ap.iter().cloned().fold(0.0, f64::max);
    let sigma = noise.sqrt();

    let mut p = ConicProgram::new();
    let wb = p.add_complex_block("w", k * nl);
    let q_ref = point.slacks.clone();
    let q_scale = slack_scales(&q_ref);
    let (rb, objective) = add_rate_block(&mut p, config, &q_scale, &pinned);
    p.set_objective(objective);
    let wvar = |p: &ConicProgram, user: usize, j: usize| p.complex_var(wb, user * nl + j);

    for n in 0..channels.n_aps() {
        let mut squares = Vec::with_capacity(k * l);
        for user in 0..k {
            for j in n * l..(n + 1) * l {
                let mut e = CplxExpr::default();
                e.add_product(Complex64::new(1.0, 0.0), wvar(&p, user, j));
                squares.push(e);
            }
        }
        p.add_constraint(
            format!("power[{n}]"),
            Constraint::Quadratic {
                squares,
                affine: LinExpr::constant(-config.max_power_w_per_ap[n] / power_ref),
            },
        );
    }

    let amp = power_ref.sqrt() / sigma;
    let channels_eff = channels.effective_channels(&point.phases);
    let mut sinr_rows = vec![None; k];
    let mut row_scale = vec![1.0; k];
    for user in 0..k {
        if pinned[user] {
            continue;
        }
        let a = &channels_eff[user];
        let xs: Vec<CplxExpr> = (0..k)
            .map(|i| {
                let mut e = CplxExpr::default();
                for j in 0..nl {
                    if a[j] != Complex64::new(0.0, 0.0) {
                        e.add_product(a[j].conj() * amp, wvar(&p, i, j));
                    }
                }
                e
            })
            .collect();
        let x_ref: Vec<Complex64> = point
            .beamformers
            .iter()
            .map(|w| inner(a, w) / sigma)
            .collect();
        let u = p.real_var(rb.u, user);
        let (row, scale) = add_sinr_row(&mut p, user, xs, &x_ref, q_ref[user], u, noise);
        sinr_rows[user] = Some(row);
        row_scale[user] = scale;
    }

    Ok(ScaProgram {
        program: p,
        kind: Subproblem::Beamforming,
        pinned,
        penalty: 0.0,
        linearization: point.clone(),
        qos: config.qos_rate_bps.clone(),
        power_ref,
        noise,
        q_scale,
        sinr_rows,
        row_scale,
    })
}

/// Scalarized channels `c_{k,i} = w_i^H h_k` and `d_{k,i} = w_i^H G_k`, so
/// that `|a_k^H w_i| = |c_{k,i} + d_{k,i} v|`.
pub fn scalarized_channels(
    channels: &ChannelState,
    beamformers: &[CVector],
    user: usize,
) -> Vec<(Complex64, CVector)> {
    let h = channels.aggregate_direct(user);
    let g = channels.cascaded(user);
    beamformers
        .iter()
        .map(|w| {
            let c = inner(w, &h);
            let d = g.ad_mul(w).map(|x| x.conj());
            (c, d)
        })
        .collect()
}

/// Phase sub-problem around `point` with the beamformers held fixed, using
/// penalty weight `penalty` for the unit-modulus term `C Σ (1 − |v_m|²)`.
///
/// The program is expressed in the step `δ = v − ṽ`; the block is named
/// `"dv"`.
pub fn build_phase_program(
    channels: &ChannelState,
    point: &DesignPoint,
    config: &SystemConfig,
    penalty: f64,
) -> Result<ScaProgram> {
    check_inputs(channels, point, config)?;
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::InvalidConfig(format!("penalty weight must be >= 0, got {penalty}")));
    }
    let noise = config.noise_power_w;
    let pinned = linearization_slacks(channels, point, noise)?;
    let k = channels.n_users();
    let m = channels.n_elements();
    let sigma = noise.sqrt();
    let v_ref = &point.phases;

    let mut p = ConicProgram::new();
    let vb = p.add_complex_block("dv", m);
    let q_ref = point.slacks.clone();
    let q_scale = slack_scales(&q_ref);
    let (rb, mut objective) = add_rate_block(&mut p, config, &q_scale, &pinned);
    // C Σ (1 + |ṽ|² − 2 Re{ṽ^* v}) with v = ṽ + δ
    for mm in 0..m {
        let vt = v_ref[mm];
        objective.constant += penalty * (1.0 - vt.norm_sqr());
        objective.add_re_product(vt.conj() * (-2.0 * penalty), p.complex_var(vb, mm));
        let mut entry = CplxExpr::constant(vt);
        entry.add_product(Complex64::new(1.0, 0.0), p.complex_var(vb, mm));
        p.add_constraint(format!("modulus[{mm}]"), Constraint::NormBall { entry, radius: 1.0 });
    }
    p.set_objective(objective);

    let mut sinr_rows = vec![None; k];
    let mut row_scale = vec![1.0; k];
    for user in 0..k {
        if pinned[user] {
            continue;
        }
        let scal = scalarized_channels(channels, &point.beamformers, user);
        let mut xs = Vec::with_capacity(k);
        let mut x_ref = Vec::with_capacity(k);
        for (c, d) in &scal {
            let xt = (c + d.iter().zip(v_ref.iter()).map(|(d, v)| d * v).sum::<Complex64>()) / sigma;
            let mut e = CplxExpr::constant(xt);
            for mm in 0..m {
                if d[mm] != Complex64::new(0.0, 0.0) {
                    e.add_product(d[mm] / sigma, p.complex_var(vb, mm));
                }
            }
            xs.push(e);
            x_ref.push(xt);
        }
        let u = p.real_var(rb.u, user);
        let (row, scale) = add_sinr_row(&mut p, user, xs, &x_ref, q_ref[user], u, noise);
        sinr_rows[user] = Some(row);
        row_scale[user] = scale;
    }

    Ok(ScaProgram {
        program: p,
        kind: Subproblem::Phase,
        pinned,
        penalty,
        linearization: point.clone(),
        qos: config.qos_rate_bps.clone(),
        power_ref: config.max_power_w_per_ap.iter().cloned().fold(0.0, f64::max),
        noise,
        q_scale,
        sinr_rows,
        row_scale,
    })
}

/// Exact unit-modulus penalty `C Σ (1 − |v_m|²)`.
pub fn penalty_value(phases: &CVector, penalty: f64) -> f64 {
    penalty * phases.iter().map(|v| 1.0 - v.norm_sqr()).sum::<f64>()
}

impl ScaProgram {
    pub fn linearization_point(&self) -> &DesignPoint {
        &self.linearization
    }

    /// Program variables representing `point`. Only the variables of this
    /// program's sub-problem are read; the fixed block comes from the
    /// linearization point.
    pub fn encode(&self, point: &DesignPoint) -> Vec<f64> {
        let p = &self.program;
        let mut x = vec![0.0; p.n_vars()];
        let mut put = |name: &str, values: &[f64]| {
            let b = p.block(name).expect("block exists");
            x[b.offset..b.offset + values.len()].copy_from_slice(values);
        };
        let k = self.qos.len();
        let rho: Vec<f64> = (0..k).map(|i| point.rates[i] / self.qos[i]).collect();
        let e: Vec<f64> = rho.iter().map(|r| (r - 1.0).abs()).collect();
        let u: Vec<f64> = (0..k)
            .map(|i| {
                if self.pinned[i] {
                    0.0
                } else {
                    point.slacks[i] / self.q_scale[i]
                }
            })
            .collect();
        put("rho", &rho);
        put("e", &e);
        put("u", &u);
        let interleave = |z: &mut dyn Iterator<Item = Complex64>| -> Vec<f64> {
            z.flat_map(|c| [c.re, c.im]).collect()
        };
        match self.kind {
            Subproblem::Beamforming => {
                let s = self.power_ref.sqrt();
                let w = interleave(&mut point.beamformers.iter().flat_map(|w| w.iter().map(move |c| c / s)));
                put("w", &w);
            }
            Subproblem::Phase => {
                let dv = interleave(
                    &mut point
                        .phases
                        .iter()
                        .zip(self.linearization.phases.iter())
                        .map(|(v, t)| v - t),
                );
                put("dv", &dv);
            }
        }
        x
    }

    /// Design point represented by the primal `x`, before certification.
    pub fn decode(&self, x: &[f64]) -> DesignPoint {
        let p = &self.program;
        let mut out = self.linearization.clone();
        let rho = p.real_values("rho", x).expect("rho block");
        let u = p.real_values("u", x).expect("u block");
        for k in 0..self.qos.len() {
            out.rates[k] = (rho[k] * self.qos[k]).max(0.0);
            out.slacks[k] = if self.pinned[k] {
                0.0
            } else {
                (u[k] * self.q_scale[k]).max(0.0)
            };
        }
        match self.kind {
            Subproblem::Beamforming => {
                let w = p.complex_values("w", x).expect("w block");
                let nl = out.beamformers.first().map_or(0, |w| w.len());
                let s = self.power_ref.sqrt();
                for (k, wk) in out.beamformers.iter_mut().enumerate() {
                    for j in 0..nl {
                        wk[j] = w[k * nl + j] * s;
                    }
                }
            }
            Subproblem::Phase => {
                let dv = p.complex_values("dv", x).expect("dv block");
                for (v, d) in out.phases.iter_mut().zip(dv) {
                    *v += d;
                }
            }
        }
        out.unit_modulus_enforced = false;
        out
    }

    /// Left side of user `k`'s linearized SINR constraint at `point`, in
    /// natural units (W). `None` for pinned users.
    pub fn sinr_constraint_value(&self, user: usize, point: &DesignPoint) -> Option<f64> {
        let row = self.sinr_rows[user]?;
        let x = self.encode(point);
        match &self.program.constraints()[row].1 {
            Constraint::Quadratic { squares, affine } => {
                let sq: f64 = squares.iter().map(|s| s.eval(&x).norm_sqr()).sum();
                Some((sq + affine.eval(&x)) * self.row_scale[user])
            }
            _ => None,
        }
    }

    /// Linearized penalty `C Σ (1 − 2 Re{ṽ^* v} + |ṽ|²)` at `phases`.
    pub fn linearized_penalty(&self, phases: &CVector) -> f64 {
        self.penalty
            * phases
                .iter()
                .zip(self.linearization.phases.iter())
                .map(|(v, t)| 1.0 - 2.0 * (t.conj() * v).re + t.norm_sqr())
                .sum::<f64>()
    }

    /// Noise power the rows were normalized by.
    pub fn noise(&self) -> f64 {
        self.noise
    }
}

/// Variable handle for the `(user, antenna)` beamformer entry, exposed for
/// tests that pin beamformers.
pub fn beamformer_var(program: &ScaProgram, user: usize, antenna: usize) -> Option<ComplexVar> {
    let b = program.program.block("w")?;
    let nl = program.linearization.beamformers.first()?.len();
    let idx = b.offset + 2 * (user * nl + antenna);
    Some(ComplexVar { re: idx, im: idx + 1 })
}
