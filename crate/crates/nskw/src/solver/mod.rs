//! Semi-discrete right-hand side of the Lagrangian system and its
//! positivity-guarded explicit RK4 time integration.
//!
//! The momentum equation is kept in conservation form: one outer first
//! difference of the total flux `-p + u_x / v^(alpha+1) + J`, where `J` is
//! the Korteweg bracket. Tendencies at the two boundary nodes are zeroed,
//! pinning the state to the far field `(1, 0, 1)`.

pub mod mms;

use thiserror::Error;

use crate::diagnostics::{DiagError, DiagnosticsRecord, TrajectoryRecorder};
use crate::grid::{d1, d2, FieldState, Grid, GridError};
use crate::model::ParamSet;
use crate::power::PowExp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error("{field} is not positive at node {node} (t = {t}): {value}")]
    Positivity {
        field: &'static str,
        node: usize,
        value: f64,
        t: f64,
    },
    #[error("non-finite {field} at node {node} (t = {t})")]
    NonFinite {
        field: &'static str,
        node: usize,
        t: f64,
    },
    #[error("t_end must be positive, got {0}")]
    BadTimeSpan(f64),
    #[error("record cadence must be positive, got {0}")]
    BadCadence(f64),
}

/// Time-step controller for the adaptive explicit stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// States with `min(v)` or `min(theta)` at or below this floor are
    /// treated as vacuum-adjacent and the step is rejected.
    pub eps_pos: f64,
    /// Consecutive halvings allowed before the run aborts.
    pub max_rejects: u32,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.8,
            dt_max: 1e-2,
            dt_min: 1e-12,
            eps_pos: 1e-8,
            max_rejects: 25,
        }
    }
}

/// Assembled tendencies plus the flux arrays kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBundle {
    pub dv_dt: Vec<f64>,
    pub du_dt: Vec<f64>,
    pub dtheta_dt: Vec<f64>,
    /// Total momentum flux `-p + u_x / v^(alpha+1) + J`.
    pub momentum_flux: Vec<f64>,
    /// Conductive flux `theta^lambda theta_x / v`.
    pub heat_flux: Vec<f64>,
}

/// External forcing sampled on the grid nodes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingFields {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Time-dependent forcing (manufactured-solution source terms).
pub trait ForcingSource {
    fn eval(&self, t: f64) -> ForcingFields;
}

/// The inner Korteweg bracket
/// `J = -v_xx / v^(beta+5) + (beta+5)/2 * v_x^2 / v^(beta+6)`;
/// the outer spatial derivative is applied by [`rhs`].
pub fn korteweg_flux(v: &[f64], g: &Grid, beta: f64) -> Result<Vec<f64>, SolverError> {
    for (i, &x) in v.iter().enumerate() {
        if !(x > 0.0) {
            return Err(SolverError::Positivity {
                field: "v",
                node: i,
                value: x,
                t: f64::NAN,
            });
        }
    }
    let vx = d1(v, g)?;
    let vxx = d2(v, g)?;
    let pow_b5 = PowExp::new(beta + 5.0);
    let pow_b6 = PowExp::new(beta + 6.0);
    let half_b5 = 0.5 * (beta + 5.0);
    Ok((0..v.len())
        .map(|i| -vxx[i] / pow_b5.apply(v[i]) + half_b5 * vx[i] * vx[i] / pow_b6.apply(v[i]))
        .collect())
}

fn validate_state(s: &FieldState, g: &Grid) -> Result<(), SolverError> {
    if s.v.len() != g.len() || s.u.len() != g.len() || s.theta.len() != g.len() {
        return Err(SolverError::Grid(GridError::LengthMismatch {
            expected: g.len(),
            got: s.v.len(),
        }));
    }
    for (field, data, positive) in [
        ("v", &s.v, true),
        ("theta", &s.theta, true),
        ("u", &s.u, false),
    ] {
        for (i, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(SolverError::NonFinite {
                    field,
                    node: i,
                    t: s.t,
                });
            }
            if positive && x <= 0.0 {
                return Err(SolverError::Positivity {
                    field,
                    node: i,
                    value: x,
                    t: s.t,
                });
            }
        }
    }
    Ok(())
}

/// Semi-discrete right-hand side of the system. Boundary tendencies are
/// zeroed (far-field pinning) before any forcing is added verbatim.
pub fn rhs(
    s: &FieldState,
    g: &Grid,
    p: &ParamSet,
    forcing: Option<&ForcingFields>,
) -> Result<RhsBundle, SolverError> {
    validate_state(s, g)?;
    let n = s.len();

    let ux = d1(&s.u, g)?;
    let thx = d1(&s.theta, g)?;
    let j = korteweg_flux(&s.v, g, p.beta())?;

    let pow_a1 = PowExp::new(p.alpha() + 1.0);
    let pow_l = PowExp::new(p.lambda());
    let r = p.r();

    let mut momentum_flux = vec![0.0; n];
    let mut heat_flux = vec![0.0; n];
    let mut press = vec![0.0; n];
    for i in 0..n {
        press[i] = r * s.theta[i] / s.v[i];
        momentum_flux[i] = -press[i] + ux[i] / pow_a1.apply(s.v[i]) + j[i];
        heat_flux[i] = pow_l.apply(s.theta[i]) * thx[i] / s.v[i];
    }

    let du_dt_raw = d1(&momentum_flux, g)?;
    let heat_div = d1(&heat_flux, g)?;

    let inv_cv = 1.0 / p.c_v();
    let mut dv_dt = ux;
    let mut du_dt = du_dt_raw;
    let mut dtheta_dt = vec![0.0; n];
    for i in 0..n {
        let heating = dv_dt[i] * dv_dt[i] / pow_a1.apply(s.v[i]);
        dtheta_dt[i] = (-press[i] * dv_dt[i] + heat_div[i] + heating) * inv_cv;
    }

    // Far-field pinning.
    for arr in [&mut dv_dt, &mut du_dt, &mut dtheta_dt] {
        arr[0] = 0.0;
        arr[n - 1] = 0.0;
    }

    if let Some(f) = forcing {
        for i in 0..n {
            dv_dt[i] += f.v[i];
            du_dt[i] += f.u[i];
            dtheta_dt[i] += f.theta[i];
        }
    }

    for (field, data) in [("dv_dt", &dv_dt), ("du_dt", &du_dt), ("dtheta_dt", &dtheta_dt)] {
        if let Some(node) = data.iter().position(|x| !x.is_finite()) {
            return Err(SolverError::NonFinite {
                field,
                node,
                t: s.t,
            });
        }
    }

    Ok(RhsBundle {
        dv_dt,
        du_dt,
        dtheta_dt,
        momentum_flux,
        heat_flux,
    })
}

/// Largest stable explicit step: `cfl` times the node-wise minimum of the
/// viscous, heat-diffusion, capillary-dispersive, and acoustic limits,
/// clamped to `[dt_min, dt_max]`.
pub fn stable_dt(s: &FieldState, g: &Grid, p: &ParamSet, c: &StepControl) -> f64 {
    let dx = g.dx();
    let dx2 = dx * dx;
    let pow_a1 = PowExp::new(p.alpha() + 1.0);
    let pow_l = PowExp::new(p.lambda());
    let pow_caph = PowExp::new((p.beta() + 5.0) / 2.0);
    const KAPPA_SCALE: f64 = 0.25;

    let mut dt = f64::INFINITY;
    for i in 0..s.len() {
        let v = s.v[i];
        let th = s.theta[i];
        let viscous = dx2 * pow_a1.apply(v) / 4.0;
        let heat = dx2 * p.c_v() * v / (4.0 * pow_l.apply(th));
        let capillary = dx2 * pow_caph.apply(v) * KAPPA_SCALE;
        let sound = (p.gamma() * p.r() * th / v).sqrt();
        let acoustic = dx / (s.u[i].abs() + sound);
        dt = dt.min(viscous).min(heat).min(capillary).min(acoustic);
    }
    (c.cfl * dt).clamp(c.dt_min, c.dt_max)
}

/// Why a step was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    Accepted(FieldState),
    Rejected(Rejection),
}

fn guard(s: &FieldState, eps: f64, stage: &str) -> Result<(), Rejection> {
    if !s.all_finite() {
        return Err(Rejection {
            reason: format!("non-finite value in {stage}"),
        });
    }
    let mv = s.min_v();
    if mv <= eps {
        return Err(Rejection {
            reason: format!("min(v) = {mv:e} at or below eps_pos in {stage}"),
        });
    }
    let mt = s.min_theta();
    if mt <= eps {
        return Err(Rejection {
            reason: format!("min(theta) = {mt:e} at or below eps_pos in {stage}"),
        });
    }
    Ok(())
}

fn advanced(base: &FieldState, k: &RhsBundle, dt: f64) -> FieldState {
    let n = base.len();
    let mut out = base.clone();
    for i in 0..n {
        out.v[i] = base.v[i] + dt * k.dv_dt[i];
        out.u[i] = base.u[i] + dt * k.du_dt[i];
        out.theta[i] = base.theta[i] + dt * k.dtheta_dt[i];
    }
    out
}

/// One classical RK4 step. Every stage state and the final state must stay
/// positive and finite, otherwise the step is rejected and the caller is
/// expected to halve `dt`.
pub fn step_rk4(
    s: &FieldState,
    dt: f64,
    g: &Grid,
    p: &ParamSet,
    c: &StepControl,
    forcing: Option<&dyn ForcingSource>,
) -> StepResult {
    debug_assert!(dt > 0.0);
    let eval = |state: &FieldState, t: f64, f: Option<&ForcingFields>| -> Result<RhsBundle, Rejection> {
        let mut st = state.clone();
        st.t = t;
        rhs(&st, g, p, f).map_err(|e| Rejection {
            reason: format!("rhs failed: {e}"),
        })
    };

    let f0 = forcing.map(|f| f.eval(s.t));
    let fh = forcing.map(|f| f.eval(s.t + 0.5 * dt));
    let f1 = forcing.map(|f| f.eval(s.t + dt));

    let run = || -> Result<FieldState, Rejection> {
        guard(s, c.eps_pos, "the initial state")?;
        let k1 = eval(s, s.t, f0.as_ref())?;

        let s2 = advanced(s, &k1, 0.5 * dt);
        guard(&s2, c.eps_pos, "stage 2")?;
        let k2 = eval(&s2, s.t + 0.5 * dt, fh.as_ref())?;

        let s3 = advanced(s, &k2, 0.5 * dt);
        guard(&s3, c.eps_pos, "stage 3")?;
        let k3 = eval(&s3, s.t + 0.5 * dt, fh.as_ref())?;

        let s4 = advanced(s, &k3, dt);
        guard(&s4, c.eps_pos, "stage 4")?;
        let k4 = eval(&s4, s.t + dt, f1.as_ref())?;

        let n = s.len();
        let sixth = dt / 6.0;
        let mut out = s.clone();
        for i in 0..n {
            out.v[i] =
                s.v[i] + sixth * (k1.dv_dt[i] + 2.0 * k2.dv_dt[i] + 2.0 * k3.dv_dt[i] + k4.dv_dt[i]);
            out.u[i] =
                s.u[i] + sixth * (k1.du_dt[i] + 2.0 * k2.du_dt[i] + 2.0 * k3.du_dt[i] + k4.du_dt[i]);
            out.theta[i] = s.theta[i]
                + sixth
                    * (k1.dtheta_dt[i]
                        + 2.0 * k2.dtheta_dt[i]
                        + 2.0 * k3.dtheta_dt[i]
                        + k4.dtheta_dt[i]);
        }
        out.t = s.t + dt;
        guard(&out, c.eps_pos, "the updated state")?;
        Ok(out)
    };

    match run() {
        Ok(out) => StepResult::Accepted(out),
        Err(rej) => StepResult::Rejected(rej),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Aborted { t: f64, reason: String },
}

/// Outcome of a full run: the final (or last good) state, every recorded
/// diagnostics row, and step/reject counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: FieldState,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: u64,
    pub rejects: u64,
    pub status: RunStatus,
}

impl RunResult {
    pub fn completed(&self) -> bool {
        matches!(self.status, RunStatus::Completed)
    }
}

/// Advance from `s0` to `t >= t_end` with `stable_dt` + `step_rk4`,
/// invoking the recorder at the requested cadence. Diagnostics are
/// read-only: the cadence never influences the trajectory.
///
/// A rejection cascade that exhausts `max_rejects` (or undercuts `dt_min`)
/// aborts the run; the last accepted state and time are preserved in the
/// result.
#[allow(clippy::too_many_arguments)]
pub fn run(
    s0: FieldState,
    t_end: f64,
    g: &Grid,
    p: &ParamSet,
    c: &StepControl,
    recorder: &mut TrajectoryRecorder,
    record_every: f64,
    forcing: Option<&dyn ForcingSource>,
) -> Result<RunResult, SolverError> {
    if !(t_end > 0.0) {
        return Err(SolverError::BadTimeSpan(t_end));
    }
    if !(record_every > 0.0) {
        return Err(SolverError::BadCadence(record_every));
    }
    validate_state(&s0, g)?;

    let mut state = s0;
    let mut records = Vec::new();
    records.push(recorder.record(&state)?);
    let mut next_record = state.t + record_every;

    let mut steps: u64 = 0;
    let mut rejects: u64 = 0;
    let eps_t = 1e-12 * (1.0 + t_end.abs());

    while state.t < t_end - eps_t {
        let mut dt = stable_dt(&state, g, p, c).min(t_end - state.t);
        let mut attempts: u32 = 0;
        loop {
            match step_rk4(&state, dt, g, p, c, forcing) {
                StepResult::Accepted(next) => {
                    state = next;
                    steps += 1;
                    break;
                }
                StepResult::Rejected(rej) => {
                    rejects += 1;
                    attempts += 1;
                    dt *= 0.5;
                    if attempts > c.max_rejects || dt < c.dt_min {
                        records.push(recorder.record(&state)?);
                        return Ok(RunResult {
                            status: RunStatus::Aborted {
                                t: state.t,
                                reason: rej.reason,
                            },
                            final_state: state,
                            records,
                            steps,
                            rejects,
                        });
                    }
                }
            }
        }
        if state.t + eps_t >= next_record {
            records.push(recorder.record(&state)?);
            while next_record <= state.t + eps_t {
                next_record += record_every;
            }
        }
    }

    // Final record unless the loop just produced one at this time.
    if records
        .last()
        .map(|r| (r.t - state.t).abs() > eps_t)
        .unwrap_or(true)
    {
        records.push(recorder.record(&state)?);
    }

    Ok(RunResult {
        final_state: state,
        records,
        steps,
        rejects,
        status: RunStatus::Completed,
    })
}
