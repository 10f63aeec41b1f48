//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria 5-7 share one pair of runs of the `thm11_i` preset (N = 512
//! and N = 1024), cached behind a `OnceLock`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nskw::diagnostics::balance_residual;
use nskw::experiments::{
    self, refinement_study, sweep, write_sweep_csv, MmsKind, Scenario, SweepMode, Verdict,
};
use nskw::model;
use nskw::solver::{self, RunResult, StepControl};
use nskw::{FieldState, Grid, ParamSet};

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(name)
}

fn load(name: &str) -> Scenario {
    experiments::load_scenario(&preset(name)).expect("preset parses")
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

struct SharedRuns {
    run_512: (RunResult, Vec<Verdict>),
    run_1024: (RunResult, Vec<Verdict>),
}

fn case_i_runs() -> &'static SharedRuns {
    static RUNS: OnceLock<SharedRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let sc = load("thm11_i.json");
        let dir = tempfile::tempdir().unwrap();
        let run_512 = experiments::run_scenario(&sc, &dir.path().join("n512")).unwrap();

        let mut fine = sc;
        fine.grid.n = 1024;
        let run_1024 = experiments::run_scenario(&fine, &dir.path().join("n1024")).unwrap();
        SharedRuns { run_512, run_1024 }
    })
}

#[test]
fn criterion_1_exact_algebra() {
    let g0 = model::g_func(0.0, -2.0);
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let beta = rng.gen_range(-5.0..=-2.0);
        let alpha = model::f_func(beta).unwrap();
        worst = worst.max(model::g_func(alpha, beta).abs());
    }
    let pass = g0 == 0.0 && worst <= 1e-10;
    report(
        "criterion 1 (exact algebra)",
        pass,
        &format!("g(0,-2) = {g0:e}; max |g(f(beta), beta)| = {worst:e} over 100 samples"),
    );
}

#[test]
fn criterion_2_classifier_fidelity() {
    let v11 = model::classify_thm11(0.0, -2.0, 1.0);
    let v12 = model::classify_thm12(0.0, -2.0);
    let origin_ok = v11.case_label == model::CaseLabel::I
        && v11.lambda_ok
        && v12.case_label == model::CaseLabel::A;

    let mut overlaps = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100_000 {
        let alpha: f64 = rng.gen_range(-20.0..20.0);
        let beta: f64 = rng.gen_range(-20.0..20.0);
        let matches = [
            alpha == 0.0 && beta == -2.0,
            alpha < -2.0 * beta - 4.0 && beta >= -1.5,
            alpha < -beta - 2.5 && (-2.0..-1.5).contains(&beta),
            (-3.0..-2.0).contains(&beta),
            alpha > -2.0 * beta - 5.0 && beta < -3.0,
        ]
        .iter()
        .filter(|&&c| c)
        .count();
        if matches > 1 {
            overlaps += 1;
        }
        // The classifier itself must agree with the predicate evaluation.
        let label = model::classify_thm11(alpha, beta, 1.0).case_label;
        let any = matches > 0;
        assert_eq!(any, label != model::CaseLabel::None);
    }
    let pass = origin_ok && overlaps == 0;
    report(
        "criterion 2 (classifier fidelity)",
        pass,
        &format!("origin case (i)/(a): {origin_ok}; overlaps in 1e5 samples: {overlaps}"),
    );
}

#[test]
fn criterion_3_fixed_point() {
    let g = Grid::new(20.0, 256).unwrap();
    let p = ParamSet::new(0.0, -2.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let s = FieldState::constant(&g);
    let b = solver::rhs(&s, &g, &p, None).unwrap();
    let sup = b
        .dv_dt
        .iter()
        .chain(&b.du_dt)
        .chain(&b.dtheta_dt)
        .fold(0.0f64, |m, &x| m.max(x.abs()));

    let mut rec = nskw::diagnostics::TrajectoryRecorder::new(g.clone(), p);
    let res = solver::run(
        s.clone(),
        1.0,
        &g,
        &p,
        &StepControl::default(),
        &mut rec,
        0.25,
        None,
    )
    .unwrap();
    let mut drift = 0.0f64;
    for i in 0..s.len() {
        drift = drift
            .max((res.final_state.v[i] - 1.0).abs())
            .max(res.final_state.u[i].abs())
            .max((res.final_state.theta[i] - 1.0).abs());
    }
    let pass = sup == 0.0 && res.completed() && res.rejects == 0 && drift <= 1e-12;
    report(
        "criterion 3 (fixed point)",
        pass,
        &format!("||rhs||_inf = {sup:e}; drift after t_end = 1 run: {drift:e}"),
    );
}

#[test]
fn criterion_4_mms_convergence() {
    let sc = load("mms_verify.json");
    let report_mms = refinement_study(&sc, &[128, 256, 512], MmsKind::Standard).unwrap();
    let orders = [
        ("v", report_mms.order_v),
        ("u", report_mms.order_u),
        ("theta", report_mms.order_theta),
    ];
    let pass = orders.iter().all(|(_, o)| (1.8..=2.2).contains(o));
    report(
        "criterion 4 (MMS convergence)",
        pass,
        &format!(
            "orders: v {:.3}, u {:.3}, theta {:.3} (required 2.0 +- 0.2)",
            orders[0].1, orders[1].1, orders[2].1
        ),
    );
}

#[test]
fn criterion_5_energy_identity() {
    let shared = case_i_runs();
    let coarse = balance_residual(&shared.run_512.0.records).unwrap();
    let fine = balance_residual(&shared.run_1024.0.records).unwrap();
    let shrink = coarse / fine;
    let pass = coarse <= 1e-2 && shrink >= 3.0;
    report(
        "criterion 5 (energy identity)",
        pass,
        &format!("residual {coarse:.3e} at N=512 (<= 1e-2), shrink x{shrink:.2} at N=1024 (>= 3)"),
    );
}

#[test]
fn criterion_6_boundedness_and_theta_floor() {
    let shared = case_i_runs();
    let mut pass = true;
    let mut detail = String::new();
    for (name, (result, _)) in [("N=512", &shared.run_512), ("N=1024", &shared.run_1024)] {
        let completed = result.completed() && result.rejects == 0;
        let v_min = result
            .records
            .iter()
            .map(|r| r.v_min)
            .fold(f64::INFINITY, f64::min);
        let th_min = result
            .records
            .iter()
            .map(|r| r.theta_min)
            .fold(f64::INFINITY, f64::min);
        let floor_violation = result
            .records
            .iter()
            .map(|r| r.theta_floor - r.theta_min)
            .fold(f64::NEG_INFINITY, f64::max);
        pass &= completed && v_min > 0.0 && th_min > 0.0 && floor_violation <= 1e-3;
        detail.push_str(&format!(
            "[{name}: completed={completed}, v_min={v_min:.3}, theta_min={th_min:.3}, \
             worst floor violation {floor_violation:.1e}] "
        ));
    }
    report("criterion 6 (boundedness + maximum principle)", pass, &detail);
}

#[test]
fn criterion_7_kanel_inequality() {
    let shared = case_i_runs();
    let mut worst = f64::NEG_INFINITY;
    for (result, _) in [&shared.run_512, &shared.run_1024] {
        for r in &result.records {
            worst = worst.max(r.psi_max - r.psi_rhs);
        }
    }
    let pass = worst <= 1e-6;
    report(
        "criterion 7 (Kanel inequality)",
        pass,
        &format!("max (psi_max - psi_rhs) over every record: {worst:.3e} (<= 1e-6)"),
    );
}

#[test]
fn criterion_8_decay() {
    let mut pass = true;
    let mut detail = String::new();
    for name in ["thm12_a.json", "thm12_b.json"] {
        let sc = load(name);
        assert_eq!(sc.time.t_end, 200.0);
        assert_eq!(sc.grid.n, 512);
        assert!((sc.params.gamma() - 1.02).abs() < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let (result, verdict) = experiments::decay_experiment(&sc, dir.path()).unwrap();

        // Checker honesty: the window bound really is enforced against the
        // recorded extrema.
        let w_hi = 2.0 * sc.initial.bounds.theta_hi;
        let theta_max = result
            .records
            .iter()
            .map(|r| r.theta_max)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(theta_max <= w_hi, "window check would have been vacuous");

        pass &= verdict.pass;
        detail.push_str(&format!(
            "[{}: envelope ratio {:.3e} (<= 0.1), {}] ",
            sc.name, verdict.measured, verdict.context
        ));
    }
    report("criterion 8 (decay, cases a and b)", pass, &detail);
}

#[test]
fn criterion_9_determinism() {
    // Byte-identical diagnostics across two executions of a preset.
    let sc = load("thm11_i.json");
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    experiments::run_scenario(&sc, d1.path()).unwrap();
    experiments::run_scenario(&sc, d2.path()).unwrap();
    let a = std::fs::read(d1.path().join("diagnostics.csv")).unwrap();
    let b = std::fs::read(d2.path().join("diagnostics.csv")).unwrap();
    let runs_identical = a == b;

    // Sweep table independent of the parallelism degree.
    let mut base = sc;
    base.grid.n = 64;
    base.time.t_end = 0.2;
    base.time.record_every = 0.05;
    base.checks = Default::default();
    let mut axes = BTreeMap::new();
    axes.insert(
        "params.beta".to_string(),
        vec![-2.2, -2.5, -2.8]
            .into_iter()
            .map(serde_json::Value::from)
            .collect(),
    );
    let s1 = tempfile::tempdir().unwrap();
    let rows1 = sweep(&base, &axes, SweepMode::Cross, 256, s1.path(), 1).unwrap();
    let s4 = tempfile::tempdir().unwrap();
    let rows4 = sweep(&base, &axes, SweepMode::Cross, 256, s4.path(), 4).unwrap();
    let mut t1 = Vec::new();
    write_sweep_csv(&rows1, &mut t1).unwrap();
    let mut t4 = Vec::new();
    write_sweep_csv(&rows4, &mut t4).unwrap();
    let sweeps_identical = t1 == t4;

    let pass = runs_identical && sweeps_identical;
    report(
        "criterion 9 (determinism)",
        pass,
        &format!(
            "diagnostics byte-identical: {runs_identical}; sweep thread-independent: {sweeps_identical}"
        ),
    );
}
