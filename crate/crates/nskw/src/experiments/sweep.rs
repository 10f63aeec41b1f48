//! Parameter sweeps: share-nothing per point, deterministic merge.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::Value;

use crate::grid::fmt_f64;
use crate::model::{self, CaseLabel};

use super::{
    apply_overrides, run_scenario, scenario_from_value, ExperimentError, Scenario,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Cartesian product of all axes (axes ordered lexicographically by key).
    Cross,
    /// Zip equal-length axes into matched tuples, one point per position.
    Zip,
}

/// One row of the sweep summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub regime: String,
    pub completed: bool,
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub final_decay_sup: f64,
}

/// Joint regime label, e.g. `"iv"`, `"iv+b"`, `"a"` or `"none"`.
pub fn regime_label(alpha: f64, beta: f64, lambda: f64) -> String {
    let t11 = model::classify_thm11(alpha, beta, lambda);
    let t12 = model::classify_thm12(alpha, beta);
    match (t11.case_label, t12.case_label) {
        (CaseLabel::None, CaseLabel::None) => "none".to_string(),
        (c, CaseLabel::None) => c.to_string(),
        (CaseLabel::None, c) => c.to_string(),
        (c1, c2) => format!("{c1}+{c2}"),
    }
}

/// Run every point of a sweep independently and merge the rows in a
/// deterministic order (the enumeration order of the points), regardless of
/// how the work was scheduled. Individual failures become rows with
/// `completed = false`; they never abort the sweep.
pub fn sweep(
    base: &Scenario,
    axes: &BTreeMap<String, Vec<Value>>,
    mode: SweepMode,
    cap: usize,
    out_dir: &Path,
    threads: usize,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let points = enumerate_points(axes, mode, cap)?;
    let base_doc = serde_json::to_value(base)
        .map_err(|e| ExperimentError::Schema(e.to_string()))?;

    std::fs::create_dir_all(out_dir)?;

    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; points.len()]);
    let cursor = AtomicUsize::new(0);
    let workers = threads.clamp(1, points.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::Relaxed);
                if idx >= points.len() {
                    break;
                }
                let row = run_point(&base_doc, &points[idx], out_dir, idx);
                slots.lock().unwrap()[idx] = Some(row);
            });
        }
    });

    Ok(slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every sweep point produces a row"))
        .collect())
}

fn enumerate_points(
    axes: &BTreeMap<String, Vec<Value>>,
    mode: SweepMode,
    cap: usize,
) -> Result<Vec<Vec<(String, Value)>>, ExperimentError> {
    if axes.is_empty() {
        return Err(ExperimentError::Invalid("sweep needs at least one axis".into()));
    }
    for (key, values) in axes {
        if values.is_empty() {
            return Err(ExperimentError::Invalid(format!("axis '{key}' is empty")));
        }
    }
    let keys: Vec<&String> = axes.keys().collect();
    match mode {
        SweepMode::Zip => {
            let len = axes[keys[0]].len();
            if axes.values().any(|v| v.len() != len) {
                return Err(ExperimentError::Invalid(
                    "zip sweep requires equal-length axes".into(),
                ));
            }
            if len > cap {
                return Err(ExperimentError::SweepTooLarge { got: len, cap });
            }
            Ok((0..len)
                .map(|i| {
                    keys.iter()
                        .map(|k| ((*k).clone(), axes[*k][i].clone()))
                        .collect()
                })
                .collect())
        }
        SweepMode::Cross => {
            let total: usize = axes.values().map(|v| v.len()).product();
            if total > cap {
                return Err(ExperimentError::SweepTooLarge { got: total, cap });
            }
            let mut points = Vec::with_capacity(total);
            let mut indices = vec![0usize; keys.len()];
            loop {
                points.push(
                    keys.iter()
                        .enumerate()
                        .map(|(d, k)| ((*k).clone(), axes[*k][indices[d]].clone()))
                        .collect(),
                );
                // Odometer increment, last axis fastest.
                let mut d = keys.len();
                loop {
                    if d == 0 {
                        return Ok(points);
                    }
                    d -= 1;
                    indices[d] += 1;
                    if indices[d] < axes[keys[d]].len() {
                        break;
                    }
                    indices[d] = 0;
                }
            }
        }
    }
}

fn run_point(
    base_doc: &Value,
    assignments: &[(String, Value)],
    out_dir: &Path,
    idx: usize,
) -> SweepRow {
    let mut doc = base_doc.clone();
    let overrides: Vec<String> = assignments
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();

    let scenario: Result<Scenario, ExperimentError> =
        apply_overrides(&mut doc, &overrides).and_then(|_| scenario_from_value(doc.clone()));

    // Best-effort parameter readout for failed rows.
    let read = |ptr: &str| doc.pointer(ptr).and_then(Value::as_f64).unwrap_or(f64::NAN);
    let (mut alpha, mut beta, mut lambda, mut gamma) = (
        read("/params/alpha"),
        read("/params/beta"),
        read("/params/lambda"),
        read("/params/gamma"),
    );

    let mut row = SweepRow {
        alpha,
        beta,
        lambda,
        gamma,
        regime: regime_label(alpha, beta, lambda),
        completed: false,
        v_min: f64::NAN,
        v_max: f64::NAN,
        theta_min: f64::NAN,
        theta_max: f64::NAN,
        final_decay_sup: f64::NAN,
    };

    let scenario = match scenario {
        Ok(sc) => sc,
        Err(_) => return row,
    };
    alpha = scenario.params.alpha();
    beta = scenario.params.beta();
    lambda = scenario.params.lambda();
    gamma = scenario.params.gamma();
    row.alpha = alpha;
    row.beta = beta;
    row.lambda = lambda;
    row.gamma = gamma;
    row.regime = regime_label(alpha, beta, lambda);

    let point_dir = out_dir.join(format!("point_{idx:04}"));
    if let Ok((result, _verdicts)) = run_scenario(&scenario, &point_dir) {
        row.completed = result.completed();
        let fold = |f: &dyn Fn(&crate::diagnostics::DiagnosticsRecord) -> f64,
                    min: bool|
         -> f64 {
            let it = result.records.iter().map(f);
            if min {
                it.fold(f64::INFINITY, f64::min)
            } else {
                it.fold(f64::NEG_INFINITY, f64::max)
            }
        };
        row.v_min = fold(&|r| r.v_min, true);
        row.v_max = fold(&|r| r.v_max, false);
        row.theta_min = fold(&|r| r.theta_min, true);
        row.theta_max = fold(&|r| r.theta_max, false);
        row.final_decay_sup = result.records.last().map(|r| r.decay_sup).unwrap_or(f64::NAN);
    }
    row
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "alpha,beta,lambda,gamma,regime,completed,v_min,v_max,theta_min,theta_max,final_decay_sup"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.alpha),
            fmt_f64(r.beta),
            fmt_f64(r.lambda),
            fmt_f64(r.gamma),
            r.regime,
            r.completed,
            fmt_f64(r.v_min),
            fmt_f64(r.v_max),
            fmt_f64(r.theta_min),
            fmt_f64(r.theta_max),
            fmt_f64(r.final_decay_sup)
        )?;
    }
    Ok(())
}
