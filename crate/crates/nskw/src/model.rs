//! Constitutive laws, scalar functionals, and the parameter-regime
//! classifier. Everything here is a pure function of scalars; nothing
//! depends on the grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::adaptive_simpson;

/// Target absolute error for the Kanel-functional quadratures.
pub const KANEL_QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("beta = {0} lies outside [-5, -2]")]
    BetaOutOfRange(f64),
    #[error("{name} = {value} violates {constraint}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
}

/// Physical and constitutive constants.
///
/// `alpha`, `beta`, `lambda` are the exponents of the viscosity `rho^alpha`,
/// capillarity `rho^beta`, and heat-conductivity `theta^lambda` laws;
/// `gamma > 1` is the adiabatic exponent, `r` the gas constant and `a` the
/// entropy-law constant in `p = R theta / v = A v^-gamma exp((gamma-1) s / R)`.
/// The specific heat `c_v = R / (gamma - 1)` is derived once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ParamSet {
    alpha: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    r: f64,
    a: f64,
    c_v: f64,
}

/// Wire format of [`ParamSet`]; `R` and `A` keep their conventional
/// upper-case names in config files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "A")]
    a: f64,
}

impl TryFrom<RawParams> for ParamSet {
    type Error = ModelError;

    fn try_from(raw: RawParams) -> Result<Self, ModelError> {
        ParamSet::new(raw.alpha, raw.beta, raw.lambda, raw.gamma, raw.r, raw.a)
    }
}

impl From<ParamSet> for RawParams {
    fn from(p: ParamSet) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
            lambda: p.lambda,
            gamma: p.gamma,
            r: p.r,
            a: p.a,
        }
    }
}

impl ParamSet {
    pub fn new(
        alpha: f64,
        beta: f64,
        lambda: f64,
        gamma: f64,
        r: f64,
        a: f64,
    ) -> Result<Self, ModelError> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(ModelError::InvalidParam {
                name: "gamma",
                value: gamma,
                constraint: "gamma > 1",
            });
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(ModelError::NonPositive {
                name: "R",
                value: r,
            });
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(ModelError::NonPositive {
                name: "A",
                value: a,
            });
        }
        if !alpha.is_finite() || !beta.is_finite() || !lambda.is_finite() {
            return Err(ModelError::InvalidParam {
                name: "alpha/beta/lambda",
                value: f64::NAN,
                constraint: "finite",
            });
        }
        Ok(ParamSet {
            alpha,
            beta,
            lambda,
            gamma,
            r,
            a,
            c_v: r / (gamma - 1.0),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn c_v(&self) -> f64 {
        self.c_v
    }

    /// Far-field entropy `s_bar = R/(gamma-1) ln(R/A)`.
    pub fn s_far(&self) -> f64 {
        self.r / (self.gamma - 1.0) * (self.r / self.a).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    Thm11,
    Thm12,
    None,
}

/// Case labels of the two global-existence theorems: `I..V` belong to the
/// first (lambda >= 1) theorem, `A`/`B` to the Nishida-Smoller-type second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    I,
    II,
    III,
    IV,
    V,
    A,
    B,
    None,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseLabel::I => "i",
            CaseLabel::II => "ii",
            CaseLabel::III => "iii",
            CaseLabel::IV => "iv",
            CaseLabel::V => "v",
            CaseLabel::A => "a",
            CaseLabel::B => "b",
            CaseLabel::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub theorem: Theorem,
    pub case_label: CaseLabel,
    /// `lambda >= 1` requirement of the first theorem; always true for the
    /// second, which admits any real lambda.
    pub lambda_ok: bool,
}

impl RegimeVerdict {
    pub fn is_some(&self) -> bool {
        self.case_label != CaseLabel::None
    }
}

/// Ideal-gas pressure `p = R theta / v`.
pub fn pressure(v: f64, theta: f64, p: &ParamSet) -> Result<f64, ModelError> {
    check_positive("v", v)?;
    check_positive("theta", theta)?;
    Ok(p.r * theta / v)
}

/// The convex weight `phi(x) = x - ln x - 1 >= 0`, zero only at `x = 1`.
pub fn phi(x: f64) -> Result<f64, ModelError> {
    check_positive("x", x)?;
    Ok(x - x.ln() - 1.0)
}

/// Entropy density `eta = R phi(v) + u^2/2 + C_v phi(theta)`; nonnegative,
/// and zero exactly at the far-field state `(1, 0, 1)`.
pub fn entropy_density(v: f64, u: f64, theta: f64, p: &ParamSet) -> Result<f64, ModelError> {
    Ok(p.r * phi(v)? + 0.5 * u * u + p.c_v * phi(theta)?)
}

/// Thermodynamic entropy `s` solving `R theta / v = A v^-gamma exp((gamma-1) s / R)`,
/// i.e. `s = R/(gamma-1) ln(R theta v^(gamma-1) / A)`.
pub fn entropy_s(v: f64, theta: f64, p: &ParamSet) -> Result<f64, ModelError> {
    check_positive("v", v)?;
    check_positive("theta", theta)?;
    Ok(p.r / (p.gamma - 1.0) * (p.r * theta * v.powf(p.gamma - 1.0) / p.a).ln())
}

/// The quartic-term coefficient
/// `g(alpha, beta) = ((alpha+1)^2 + (beta+5)^2)/4 - (beta+5)(alpha+beta+7)/6`.
pub fn g_func(alpha: f64, beta: f64) -> f64 {
    let a1 = alpha + 1.0;
    let b5 = beta + 5.0;
    (a1 * a1 + b5 * b5) / 4.0 - b5 * (alpha + beta + 7.0) / 6.0
}

/// The positive root `f(beta) = (beta+2)/3 + sqrt(-2 beta^2 - 14 beta - 20)/3`
/// of `g(., beta) = 0`, defined for `beta` in `[-5, -2]`.
pub fn f_func(beta: f64) -> Result<f64, ModelError> {
    if !(-5.0..=-2.0).contains(&beta) {
        return Err(ModelError::BetaOutOfRange(beta));
    }
    // The radicand -2(beta+2)(beta+5) is >= 0 on the domain; clamp the
    // rounding residue at the endpoints.
    let radicand = (-2.0 * beta * beta - 14.0 * beta - 20.0).max(0.0);
    Ok((beta + 2.0) / 3.0 + radicand.sqrt() / 3.0)
}

/// Tolerance for the `beta = 2 alpha - 3` line test; config files carry
/// decimal inputs, so exact float equality would be too brittle there.
const LINE_TOL: f64 = 1e-12;

/// Classify `(alpha, beta)` against the five condition sets of the first
/// global-existence theorem. The sets are pairwise disjoint; this is
/// asserted in debug builds rather than relied on through evaluation order.
pub fn classify_thm11(alpha: f64, beta: f64, lambda: f64) -> RegimeVerdict {
    let case_i = alpha == 0.0 && beta == -2.0;
    let case_ii = alpha < -2.0 * beta - 4.0 && beta >= -1.5;
    let case_iii = alpha < -beta - 2.5 && (-2.0..-1.5).contains(&beta);
    let case_iv = (-3.0..-2.0).contains(&beta);
    let case_v = alpha > -2.0 * beta - 5.0 && beta < -3.0;

    debug_assert!(
        [case_i, case_ii, case_iii, case_iv, case_v]
            .iter()
            .filter(|&&c| c)
            .count()
            <= 1,
        "theorem-1.1 condition sets overlap at alpha={alpha}, beta={beta}"
    );

    let case_label = if case_i {
        CaseLabel::I
    } else if case_ii {
        CaseLabel::II
    } else if case_iii {
        CaseLabel::III
    } else if case_iv {
        CaseLabel::IV
    } else if case_v {
        CaseLabel::V
    } else {
        CaseLabel::None
    };

    RegimeVerdict {
        theorem: if case_label == CaseLabel::None {
            Theorem::None
        } else {
            Theorem::Thm11
        },
        case_label,
        lambda_ok: lambda >= 1.0,
    }
}

/// Classify `(alpha, beta)` against the two condition sets of the second
/// (large-time-behavior) theorem, which has no lambda restriction.
pub fn classify_thm12(alpha: f64, beta: f64) -> RegimeVerdict {
    let case_a = alpha == 0.0 && beta == -2.0;
    let case_b =
        (beta - (2.0 * alpha - 3.0)).abs() <= LINE_TOL && (-3.0..-2.0).contains(&beta);

    let case_label = if case_a {
        CaseLabel::A
    } else if case_b {
        CaseLabel::B
    } else {
        CaseLabel::None
    };

    RegimeVerdict {
        theorem: if case_label == CaseLabel::None {
            Theorem::None
        } else {
            Theorem::Thm12
        },
        case_label,
        lambda_ok: true,
    }
}

/// Kanel functional `Psi(v) = int_1^v sqrt(phi(z)) / z^((beta+5)/2) dz`.
///
/// Signed: negative for `v < 1`, positive for `v > 1`. Diverges to -inf as
/// `v -> 0` when `beta >= -3` and to +inf as `v -> +inf` when `beta < -2`,
/// which is what turns L2 control into pointwise bounds on `v`.
pub fn kanel_psi(v: f64, beta: f64) -> Result<f64, ModelError> {
    check_positive("v", v)?;
    Ok(kanel_weighted(v, (beta + 5.0) / 2.0))
}

/// Kanel functional `Phi(v) = int_1^v sqrt(phi(z)) / z^(alpha+1) dz`,
/// growing like `v^(1/2 - alpha)` as `v -> +inf` for `alpha < 1/2`.
pub fn kanel_phi_cap(v: f64, alpha: f64) -> Result<f64, ModelError> {
    check_positive("v", v)?;
    Ok(kanel_weighted(v, alpha + 1.0))
}

fn kanel_weighted(v: f64, expo: f64) -> f64 {
    let integrand = |z: f64| (z - z.ln() - 1.0).max(0.0).sqrt() / z.powf(expo);
    if v >= 1.0 {
        adaptive_simpson(&integrand, 1.0, v, KANEL_QUAD_TOL)
    } else {
        -adaptive_simpson(&integrand, v, 1.0, KANEL_QUAD_TOL)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}
