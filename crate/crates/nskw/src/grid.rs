//! Uniform grid on the truncated domain `[-L, L]`, field storage,
//! second-order difference operators, trapezoid quadrature, and initial-data
//! generators with the far-field state `(1, 0, 1)`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ParamSet;

/// Generated initial data must stay above this floor in `v` and `theta`.
pub const INITIAL_FLOOR: f64 = 1e-3;
/// Maximum allowed deviation from `(1, 0, 1)` at the two domain endpoints.
pub const FAR_FIELD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("array length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid needs at least 16 cells, got {0}")]
    TooFewCells(usize),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("initial {field} drops to {min:e}, below the {floor:e} floor")]
    BelowFloor { field: &'static str, min: f64, floor: f64 },
    #[error("initial {field} deviates by {deviation:e} from the far field at x = +-L")]
    FarFieldViolation { field: &'static str, deviation: f64 },
}

/// Uniform grid of `N` cells (`N + 1` nodes) on `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_length: f64,
    n_cells: usize,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(half_length: f64, n_cells: usize) -> Result<Self, GridError> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(GridError::NonPositive {
                name: "L",
                value: half_length,
            });
        }
        if n_cells < 16 {
            return Err(GridError::TooFewCells(n_cells));
        }
        // x_i = L (2i - N) / N pins the endpoints to exactly -L and +L.
        let nodes = (0..=n_cells)
            .map(|i| half_length * (2.0 * i as f64 - n_cells as f64) / n_cells as f64)
            .collect();
        Ok(Grid {
            half_length,
            n_cells,
            dx: 2.0 * half_length / n_cells as f64,
            nodes,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.n_cells + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn check_len(&self, f: &[f64]) -> Result<(), GridError> {
        if f.len() != self.len() {
            return Err(GridError::LengthMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// The unknowns `(v, u, theta)` sampled on the grid nodes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
}

impl FieldState {
    /// The far-field rest state `(1, 0, 1)` everywhere.
    pub fn constant(g: &Grid) -> Self {
        let n = g.len();
        FieldState {
            t: 0.0,
            v: vec![1.0; n],
            u: vec![0.0; n],
            theta: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_theta(&self) -> f64 {
        self.theta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.v.iter().all(|x| x.is_finite())
            && self.u.iter().all(|x| x.is_finite())
            && self.theta.iter().all(|x| x.is_finite())
    }

    /// Snapshot CSV: header `x,v,u,theta`, one row per node, floats with
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, g: &Grid, mut w: W) -> io::Result<()> {
        writeln!(w, "x,v,u,theta")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(g.nodes[i]),
                fmt_f64(self.v[i]),
                fmt_f64(self.u[i]),
                fmt_f64(self.theta[i])
            )?;
        }
        Ok(())
    }
}

/// Serialize a float with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// First derivative: second-order central differences in the interior,
/// one-sided second-order stencils at the two boundary nodes.
pub fn d1(f: &[f64], g: &Grid) -> Result<Vec<f64>, GridError> {
    g.check_len(f)?;
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv2dx = 1.0 / (2.0 * g.dx);
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2dx;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2dx;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2dx;
    Ok(out)
}

/// Second derivative: 3-point second difference in the interior, one-sided
/// second-order (4-point) stencils at the boundaries. Exact on quadratics.
pub fn d2(f: &[f64], g: &Grid) -> Result<Vec<f64>, GridError> {
    g.check_len(f)?;
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv_dx2;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_dx2;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv_dx2;
    Ok(out)
}

/// Composite trapezoid rule over `[-L, L]`.
pub fn integrate(f: &[f64], g: &Grid) -> Result<f64, GridError> {
    g.check_len(f)?;
    let n = f.len();
    let mut acc = 0.5 * (f[0] + f[n - 1]);
    for &x in &f[1..n - 1] {
        acc += x;
    }
    Ok(acc * g.dx)
}

/// Shape of the generated initial perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Gaussian,
    TanhFront,
    FourierMix,
}

/// Perturbation amplitudes per field plus a common length scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitudes {
    pub v: f64,
    pub u: f64,
    pub theta: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    1.0
}

/// User-declared box bounds for the initial data, kept with the scenario
/// for later bound comparisons (the temperature-window check uses them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBounds {
    pub v_lo: f64,
    pub v_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub amplitudes: Amplitudes,
    pub seed: u64,
    pub bounds: BoxBounds,
}

/// Generate initial data at `t = 0` with far field `(1, 0, 1)`.
///
/// Rejects data that drops below the positivity floor or fails to settle to
/// the far field at `x = +-L`. The declared bounds are not re-checked here;
/// they travel with the scenario for the downstream window checks.
pub fn make_initial(
    spec: &InitialSpec,
    g: &Grid,
    _p: &ParamSet,
) -> Result<FieldState, GridError> {
    let n = g.len();
    let w = spec.amplitudes.width;
    if !(w > 0.0) || !w.is_finite() {
        return Err(GridError::NonPositive {
            name: "width",
            value: w,
        });
    }

    let (dv, du, dth) = match spec.kind {
        InitialKind::Gaussian => {
            let bump = |a: f64| -> Vec<f64> {
                g.nodes
                    .iter()
                    .map(|&x| a * (-(x / w) * (x / w)).exp())
                    .collect()
            };
            (
                bump(spec.amplitudes.v),
                bump(spec.amplitudes.u),
                bump(spec.amplitudes.theta),
            )
        }
        InitialKind::TanhFront => {
            // Smoothed plateau of half-width L/4 returning to the far field
            // on both sides.
            let x0 = g.half_length / 4.0;
            let pulse = |a: f64| -> Vec<f64> {
                g.nodes
                    .iter()
                    .map(|&x| a * 0.5 * (((x + x0) / w).tanh() - ((x - x0) / w).tanh()))
                    .collect()
            };
            (
                pulse(spec.amplitudes.v),
                pulse(spec.amplitudes.u),
                pulse(spec.amplitudes.theta),
            )
        }
        InitialKind::FourierMix => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut field = |a: f64| -> Vec<f64> {
                // Draw unconditionally so the stream position stays aligned
                // across fields regardless of amplitudes.
                let modes: Vec<(f64, f64, f64)> = (0..4)
                    .map(|_| {
                        (
                            rng.gen_range(1..=6) as f64,
                            rng.gen_range(0.5..1.0),
                            rng.gen_range(0.0..std::f64::consts::TAU),
                        )
                    })
                    .collect();
                let l = g.half_length;
                let raw: Vec<f64> = g
                    .nodes
                    .iter()
                    .map(|&x| {
                        let window = (-(3.0 * x / l).powi(4)).exp();
                        let s: f64 = modes
                            .iter()
                            .map(|&(m, c, ph)| {
                                c * (std::f64::consts::PI * m * x / l + ph).sin()
                            })
                            .sum();
                        window * s
                    })
                    .collect();
                let peak = raw.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
                if peak == 0.0 || a == 0.0 {
                    vec![0.0; n]
                } else {
                    raw.iter().map(|&x| a * x / peak).collect()
                }
            };
            (
                field(spec.amplitudes.v),
                field(spec.amplitudes.u),
                field(spec.amplitudes.theta),
            )
        }
    };

    let v: Vec<f64> = dv.iter().map(|d| 1.0 + d).collect();
    let u = du;
    let theta: Vec<f64> = dth.iter().map(|d| 1.0 + d).collect();

    for (field, data, far) in [("v", &v, 1.0), ("u", &u, 0.0), ("theta", &theta, 1.0)] {
        let dev = (data[0] - far).abs().max((data[n - 1] - far).abs());
        if dev >= FAR_FIELD_TOL {
            return Err(GridError::FarFieldViolation {
                field,
                deviation: dev,
            });
        }
    }
    for (field, data) in [("v", &v), ("theta", &theta)] {
        let min = data.iter().copied().fold(f64::INFINITY, f64::min);
        if min < INITIAL_FLOOR {
            return Err(GridError::BelowFloor {
                field,
                min,
                floor: INITIAL_FLOOR,
            });
        }
    }

    Ok(FieldState {
        t: 0.0,
        v,
        u,
        theta,
    })
}
