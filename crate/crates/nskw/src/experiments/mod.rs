//! Runnable scenarios with pass/fail verdicts and persisted artifacts.
//!
//! A scenario JSON document fully determines a run given its seed:
//!
//! ```json
//! {
//!   "name": "...",
//!   "params": {"alpha": 0.0, "beta": -2.0, "lambda": 1.0,
//!              "gamma": 1.4, "R": 1.0, "A": 1.0},
//!   "grid": {"L": 20.0, "N": 512},
//!   "initial": {"kind": "gaussian",
//!               "amplitudes": {"v": 0.3, "u": 0.0, "theta": 0.3, "width": 1.5},
//!               "seed": 7,
//!               "bounds": {"v_lo": 0.5, "v_hi": 2.0,
//!                          "theta_lo": 0.5, "theta_hi": 2.0}},
//!   "time": {"t_end": 5.0, "cfl": 0.8, "dt_max": 0.01, "dt_min": 1e-10,
//!            "record_every": 0.02},
//!   "checks": {"balance_residual": 1e-2, "theta_floor": 1e-3,
//!              "kanel": 1e-6, "positivity": true, "mass_drift": 1e-6}
//! }
//! ```
//!
//! Unknown fields are rejected everywhere in the schema.

mod refine;
mod sweep;

pub use refine::{refinement_study, MmsKind, RefinementReport};
pub use sweep::{sweep, write_sweep_csv, SweepMode, SweepRow};

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::diagnostics::{
    write_diagnostics_csv, DiagError, DiagnosticsRecord, TrajectoryRecorder,
};
use crate::grid::{d1, integrate, make_initial, GridError, InitialSpec};
use crate::model::{self, CaseLabel, ModelError, ParamSet};
use crate::solver::{run, RunResult, RunStatus, SolverError, StepControl};
use crate::{FieldState, Grid};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error("scenario is not in a covered Theorem-1.2 regime: {0}")]
    RegimeMismatch(String),
    #[error("sweep size {got} exceeds the cap of {cap}")]
    SweepTooLarge { got: usize, cap: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub record_every: f64,
}

/// Enabled verdicts and their tolerances; absent keys disable the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    /// Max relative violation of the energy identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance_residual: Option<f64>,
    /// Absolute slack for `theta_min(t) >= theta_floor(t)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_floor: Option<f64>,
    /// Absolute slack for `psi_max <= psi_rhs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kanel: Option<f64>,
    /// Require a completed run with positive `v` and `theta` throughout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity: Option<bool>,
    /// Relative mass-drift budget: drift <= tol * (1 + |initial mass|).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCheck {
    /// Required shrink factor of the decay-metric envelope by `t_end`.
    pub factor: f64,
    /// Largest admissible `gamma - 1`.
    #[serde(default = "default_smallness")]
    pub gamma_smallness: f64,
}

fn default_smallness() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub params: ParamSet,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub time: TimeSpec,
    pub checks: Checks,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let t = &self.time;
        if !(t.t_end > 0.0) {
            return Err(ExperimentError::Invalid(format!(
                "time.t_end must be positive, got {}",
                t.t_end
            )));
        }
        if !(t.cfl > 0.0 && t.cfl <= 1.0) {
            return Err(ExperimentError::Invalid(format!(
                "time.cfl must lie in (0, 1], got {}",
                t.cfl
            )));
        }
        if !(t.dt_min > 0.0 && t.dt_min <= t.dt_max) {
            return Err(ExperimentError::Invalid(format!(
                "need 0 < dt_min <= dt_max, got {} and {}",
                t.dt_min, t.dt_max
            )));
        }
        if !(t.record_every > 0.0) {
            return Err(ExperimentError::Invalid(format!(
                "time.record_every must be positive, got {}",
                t.record_every
            )));
        }
        let b = &self.initial.bounds;
        if !(b.v_lo > 0.0 && b.v_lo <= b.v_hi && b.theta_lo > 0.0 && b.theta_lo <= b.theta_hi) {
            return Err(ExperimentError::Invalid(
                "initial.bounds must be positive with lo <= hi".into(),
            ));
        }
        for (name, tol) in [
            ("balance_residual", self.checks.balance_residual),
            ("theta_floor", self.checks.theta_floor),
            ("kanel", self.checks.kanel),
            ("mass_drift", self.checks.mass_drift),
        ] {
            if let Some(tol) = tol {
                if !(tol > 0.0) {
                    return Err(ExperimentError::Invalid(format!(
                        "checks.{name} tolerance must be positive, got {tol}"
                    )));
                }
            }
        }
        if let Some(d) = self.checks.decay {
            if !(d.factor > 1.0) || !(d.gamma_smallness > 0.0) {
                return Err(ExperimentError::Invalid(
                    "checks.decay needs factor > 1 and gamma_smallness > 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            cfl: self.time.cfl,
            dt_max: self.time.dt_max,
            dt_min: self.time.dt_min,
            ..StepControl::default()
        }
    }
}

/// Parse a scenario from a JSON value, type-checking the whole schema.
/// Schema errors name the offending field path.
pub fn scenario_from_value(value: Value) -> Result<Scenario, ExperimentError> {
    let sc: Scenario = serde_path_to_error::deserialize(value)
        .map_err(|e| ExperimentError::Schema(format!("{}: {}", e.path(), e.inner())))?;
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ExperimentError> {
    let text = fs::read_to_string(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| ExperimentError::Schema(e.to_string()))?;
    scenario_from_value(value)
}

/// Apply `dotted.key=value` overrides to a raw scenario document. Every
/// path segment must already exist; values are parsed as JSON scalars.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), ExperimentError> {
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| {
            ExperimentError::Schema(format!("override '{item}' is not of the form key=value"))
        })?;
        let parsed: Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| Value::String(raw.to_string()));
        let segments: Vec<&str> = key.split('.').collect();
        let (last, parents) = segments.split_last().expect("split produced a segment");
        let pointer: String = parents.iter().map(|s| format!("/{s}")).collect();
        let parent = doc.pointer_mut(&pointer).ok_or_else(|| {
            ExperimentError::Schema(format!("override '{key}': unknown path"))
        })?;
        let map = parent.as_object_mut().ok_or_else(|| {
            ExperimentError::Schema(format!("override '{key}': parent is not an object"))
        })?;
        if !map.contains_key(*last) {
            return Err(ExperimentError::Schema(format!(
                "override '{key}': unknown field '{last}'"
            )));
        }
        map.insert((*last).to_string(), parsed);
    }
    Ok(())
}

/// One named check outcome. `pass` holds exactly when the measured value is
/// within tolerance (and, where applicable, the run completed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    /// Time of the worst violation, or other context.
    pub context: String,
}

/// Initial H-norm surrogates reported in the manifest, including the
/// entropy-based one used by the second theorem's hypotheses.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InitialNorms {
    pub h1_v: f64,
    pub h1_u: f64,
    pub h1_theta: f64,
    pub h2_v: f64,
    pub h1_s: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    scenario: &'a Scenario,
    steps: u64,
    rejects: u64,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    abort: Option<AbortInfo>,
    initial_norms: InitialNorms,
    verdicts: &'a [Verdict],
}

#[derive(Debug, Clone, Serialize)]
struct AbortInfo {
    t: f64,
    reason: String,
}

fn initial_norms(
    s0: &FieldState,
    g: &Grid,
    p: &ParamSet,
) -> Result<InitialNorms, ExperimentError> {
    let (h1_v, h1_u, h1_theta, h2_v) = crate::diagnostics::sobolev_norms(s0, g)?;
    let s_far = p.s_far();
    let mut s_dev = Vec::with_capacity(s0.len());
    for i in 0..s0.len() {
        s_dev.push(model::entropy_s(s0.v[i], s0.theta[i], p)? - s_far);
    }
    let l2 = |f: &[f64]| -> Result<f64, ExperimentError> {
        let sq: Vec<f64> = f.iter().map(|&x| x * x).collect();
        Ok(integrate(&sq, g)?.max(0.0))
    };
    let h1_s = (l2(&s_dev)? + l2(&d1(&s_dev, g)?)?).sqrt();
    Ok(InitialNorms {
        h1_v,
        h1_u,
        h1_theta,
        h2_v,
        h1_s,
    })
}

/// Execute a scenario: build the grid and initial data, run the solver,
/// apply the enabled checks, and persist the manifest, snapshots, and the
/// diagnostics CSV under `out_dir`. A run abort becomes a failed positivity
/// verdict, not an error.
pub fn run_scenario(
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(RunResult, Vec<Verdict>), ExperimentError> {
    sc.validate()?;
    let g = Grid::new(sc.grid.l, sc.grid.n)?;
    let s0 = make_initial(&sc.initial, &g, &sc.params)?;
    let norms = initial_norms(&s0, &g, &sc.params)?;

    fs::create_dir_all(out_dir)?;
    let mut initial_csv = Vec::new();
    s0.write_csv(&g, &mut initial_csv)?;
    fs::write(out_dir.join("snapshot_initial.csv"), initial_csv)?;

    let mut recorder = TrajectoryRecorder::new(g.clone(), sc.params);
    let result = run(
        s0,
        sc.time.t_end,
        &g,
        &sc.params,
        &sc.step_control(),
        &mut recorder,
        sc.time.record_every,
        None,
    )?;

    let verdicts = evaluate_checks(sc, &result);

    let mut final_csv = Vec::new();
    result.final_state.write_csv(&g, &mut final_csv)?;
    fs::write(out_dir.join("snapshot_final.csv"), final_csv)?;

    let mut diag = Vec::new();
    write_diagnostics_csv(&result.records, &mut diag)?;
    fs::write(out_dir.join("diagnostics.csv"), diag)?;

    let (status, abort) = match &result.status {
        RunStatus::Completed => ("completed".to_string(), None),
        RunStatus::Aborted { t, reason } => (
            "aborted".to_string(),
            Some(AbortInfo {
                t: *t,
                reason: reason.clone(),
            }),
        ),
    };
    let manifest = Manifest {
        scenario: sc,
        steps: result.steps,
        rejects: result.rejects,
        status,
        abort,
        initial_norms: norms,
        verdicts: &verdicts,
    };
    let mut f = fs::File::create(out_dir.join("manifest.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&manifest).unwrap())?;

    Ok((result, verdicts))
}

fn evaluate_checks(sc: &Scenario, result: &RunResult) -> Vec<Verdict> {
    let records = &result.records;
    let completed = result.completed();
    let mut verdicts = Vec::new();

    let worst = |f: &dyn Fn(&DiagnosticsRecord) -> f64| -> (f64, f64) {
        records
            .iter()
            .map(|r| (f(r), r.t))
            .fold((f64::NEG_INFINITY, 0.0), |acc, x| {
                if x.0 > acc.0 {
                    x
                } else {
                    acc
                }
            })
    };

    if sc.checks.positivity.unwrap_or(false) {
        let min_pos = records
            .iter()
            .map(|r| r.v_min.min(r.theta_min))
            .fold(f64::INFINITY, f64::min);
        let context = match &result.status {
            RunStatus::Completed => "run completed".to_string(),
            RunStatus::Aborted { t, reason } => format!("aborted at t = {t}: {reason}"),
        };
        verdicts.push(Verdict {
            check: "positivity".into(),
            pass: completed && min_pos > 0.0,
            measured: min_pos,
            tolerance: 0.0,
            context,
        });
    }

    if let Some(tol) = sc.checks.balance_residual {
        let (measured, t) = worst(&|r| r.balance_residual);
        verdicts.push(Verdict {
            check: "balance_residual".into(),
            pass: measured <= tol,
            measured,
            tolerance: tol,
            context: format!("worst at t = {t}"),
        });
    }

    if let Some(tol) = sc.checks.theta_floor {
        let (measured, t) = worst(&|r| r.theta_floor - r.theta_min);
        verdicts.push(Verdict {
            check: "theta_floor".into(),
            pass: measured <= tol,
            measured,
            tolerance: tol,
            context: format!("worst floor violation at t = {t}"),
        });
    }

    if let Some(tol) = sc.checks.kanel {
        let (measured, t) = worst(&|r| r.psi_max - r.psi_rhs);
        verdicts.push(Verdict {
            check: "kanel".into(),
            pass: measured <= tol,
            measured,
            tolerance: tol,
            context: format!("worst at t = {t}"),
        });
    }

    if let Some(tol) = sc.checks.mass_drift {
        let (measured, t) = worst(&|r| r.mass_drift);
        // Records carry the absolute drift; the budget scales with the
        // initial mass, so rescale the tolerance here.
        let budget = tol * (1.0 + initial_mass_magnitude(sc));
        verdicts.push(Verdict {
            check: "mass_drift".into(),
            pass: measured <= budget,
            measured,
            tolerance: budget,
            context: format!("worst at t = {t}"),
        });
    }

    if let Some(decay) = sc.checks.decay {
        verdicts.push(decay_verdict(sc, result, decay));
    }

    verdicts
}

fn initial_mass_magnitude(sc: &Scenario) -> f64 {
    // |int (v0 - 1) dx| recomputed from the scenario; generation is
    // deterministic, so this matches the recorder's anchor.
    let g = match Grid::new(sc.grid.l, sc.grid.n) {
        Ok(g) => g,
        Err(_) => return 0.0,
    };
    match make_initial(&sc.initial, &g, &sc.params) {
        Ok(s0) => {
            let dev: Vec<f64> = s0.v.iter().map(|&v| v - 1.0).collect();
            integrate(&dev, &g).map(|m| m.abs()).unwrap_or(0.0)
        }
        Err(_) => 0.0,
    }
}

/// Fraction of the trailing time span whose decay-metric maximum defines
/// the "final envelope".
const ENVELOPE_TAIL: f64 = 0.1;

fn decay_verdict(sc: &Scenario, result: &RunResult, decay: DecayCheck) -> Verdict {
    let records = &result.records;
    let initial = records.first().map(|r| r.decay_sup).unwrap_or(0.0);
    let t0 = records.first().map(|r| r.t).unwrap_or(0.0);
    let t1 = records.last().map(|r| r.t).unwrap_or(0.0);
    let tail_start = t1 - ENVELOPE_TAIL * (t1 - t0);
    let envelope = records
        .iter()
        .filter(|r| r.t >= tail_start)
        .map(|r| r.decay_sup)
        .fold(0.0f64, f64::max);

    let env_ok = envelope <= initial / decay.factor;
    let measured = if initial > 0.0 {
        envelope / initial
    } else {
        0.0
    };

    // Temperature window from the a-priori assumption, built on the
    // declared initial box.
    let w_lo = 0.5 * sc.initial.bounds.theta_lo;
    let w_hi = 2.0 * sc.initial.bounds.theta_hi;
    let mut window_ok = true;
    let mut worst_t = t1;
    for r in records {
        if r.theta_min < w_lo || r.theta_max > w_hi {
            window_ok = false;
            worst_t = r.t;
            break;
        }
    }

    let pass = env_ok && window_ok && result.completed();
    let context = if !window_ok {
        format!("theta left [{w_lo}, {w_hi}] at t = {worst_t}")
    } else if !result.completed() {
        "run aborted".to_string()
    } else {
        format!("tail envelope {envelope:e} vs initial {initial:e}")
    };
    Verdict {
        check: "decay".into(),
        pass,
        measured,
        tolerance: 1.0 / decay.factor,
        context,
    }
}

/// Run a Theorem-1.2 scenario and return its decay verdict. Rejects
/// parameter tuples outside cases (a)/(b) or with `gamma - 1` above the
/// configured smallness before anything runs.
pub fn decay_experiment(
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(RunResult, Verdict), ExperimentError> {
    let decay = sc.checks.decay.ok_or_else(|| {
        ExperimentError::Invalid("scenario has no checks.decay block".into())
    })?;
    let verdict = model::classify_thm12(sc.params.alpha(), sc.params.beta());
    if verdict.case_label == CaseLabel::None {
        return Err(ExperimentError::RegimeMismatch(format!(
            "(alpha, beta) = ({}, {})",
            sc.params.alpha(),
            sc.params.beta()
        )));
    }
    let eps = sc.params.gamma() - 1.0;
    if eps > decay.gamma_smallness {
        return Err(ExperimentError::RegimeMismatch(format!(
            "gamma - 1 = {eps} exceeds the smallness bound {}",
            decay.gamma_smallness
        )));
    }
    let (result, verdicts) = run_scenario(sc, out_dir)?;
    let decay_v = verdicts
        .into_iter()
        .find(|v| v.check == "decay")
        .expect("decay check was enabled");
    Ok((result, decay_v))
}
