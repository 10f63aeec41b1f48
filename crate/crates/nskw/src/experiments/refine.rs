//! Manufactured-solution refinement studies and convergence-order fits.

use crate::diagnostics::TrajectoryRecorder;
use crate::solver::mms::{mms_forcing, Manufactured};
use crate::solver::run;
use crate::Grid;

use super::{ExperimentError, Scenario};

/// Which manufactured family a verification run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsKind {
    /// Smooth decaying mode perturbing all three fields.
    Standard,
    /// Heat-only pulse with frozen `v` and `u`.
    HeatOnly,
    /// The rest state; errors must sit at rounding level.
    Constant,
}

impl MmsKind {
    fn build(&self, l: f64) -> Manufactured {
        match self {
            MmsKind::Standard => Manufactured::standard(l),
            MmsKind::HeatOnly => Manufactured::HeatPulse { ath: 0.1, l },
            MmsKind::Constant => Manufactured::Constant,
        }
    }
}

/// Per-field max-norm errors at each resolution plus least-squares
/// convergence orders (slope of log error against log dx).
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub resolutions: Vec<usize>,
    pub errors_v: Vec<f64>,
    pub errors_u: Vec<f64>,
    pub errors_theta: Vec<f64>,
    pub order_v: f64,
    pub order_u: f64,
    pub order_theta: f64,
}

impl RefinementReport {
    pub fn min_order(&self) -> f64 {
        self.order_v.min(self.order_u).min(self.order_theta)
    }
}

/// Run the manufactured-solution study of `base` at every resolution.
/// Resolutions must be at least three and successively doubling.
pub fn refinement_study(
    base: &Scenario,
    resolutions: &[usize],
    kind: MmsKind,
) -> Result<RefinementReport, ExperimentError> {
    if resolutions.len() < 3 {
        return Err(ExperimentError::Invalid(
            "refinement study needs at least 3 resolutions".into(),
        ));
    }
    for pair in resolutions.windows(2) {
        if pair[1] != 2 * pair[0] {
            return Err(ExperimentError::Invalid(format!(
                "resolutions must double: {} does not follow {}",
                pair[1], pair[0]
            )));
        }
    }
    base.validate()?;

    let l = base.grid.l;
    let manufactured = kind.build(l);
    let mut errors_v = Vec::new();
    let mut errors_u = Vec::new();
    let mut errors_theta = Vec::new();

    for &n in resolutions {
        let g = Grid::new(l, n)?;
        let forcing = mms_forcing(&manufactured, &g, &base.params)?;
        let s0 = manufactured.exact_state(0.0, &g);
        let mut recorder = TrajectoryRecorder::new(g.clone(), base.params);
        let result = run(
            s0,
            base.time.t_end,
            &g,
            &base.params,
            &base.step_control(),
            &mut recorder,
            base.time.t_end,
            Some(&forcing),
        )?;
        if !result.completed() {
            return Err(ExperimentError::Invalid(format!(
                "verification run at N = {n} did not complete"
            )));
        }
        let exact = manufactured.exact_state(result.final_state.t, &g);
        let mut ev = 0.0f64;
        let mut eu = 0.0f64;
        let mut eth = 0.0f64;
        for i in 0..g.len() {
            ev = ev.max((result.final_state.v[i] - exact.v[i]).abs());
            eu = eu.max((result.final_state.u[i] - exact.u[i]).abs());
            eth = eth.max((result.final_state.theta[i] - exact.theta[i]).abs());
        }
        errors_v.push(ev);
        errors_u.push(eu);
        errors_theta.push(eth);
    }

    let order = |errs: &[f64]| fit_order(resolutions, errs);
    Ok(RefinementReport {
        order_v: order(&errors_v),
        order_u: order(&errors_u),
        order_theta: order(&errors_theta),
        resolutions: resolutions.to_vec(),
        errors_v,
        errors_u,
        errors_theta,
    })
}

/// Least-squares slope of `ln(err)` against `ln(dx)`. Errors at rounding
/// level make the fit meaningless; report infinity there so callers can
/// treat "exact" as passing.
fn fit_order(resolutions: &[usize], errors: &[f64]) -> f64 {
    if errors.iter().any(|&e| e < 1e-13) {
        return f64::INFINITY;
    }
    let xs: Vec<f64> = resolutions.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..xs.len() {
        num += (xs[i] - mean_x) * (ys[i] - mean_y);
        den += (xs[i] - mean_x) * (xs[i] - mean_x);
    }
    num / den
}
