//! Adaptive Simpson quadrature used by the Kanel functionals.
//!
//! The integrands have a |z-1|-type kink at z = 1 (one-sidedly smooth on
//! each side), so the integration always starts or ends there and adaptive
//! refinement resolves the endpoint without special-casing.

/// Integrate `f` over `[a, b]` (a <= b) to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 52)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    let half_tol = 0.5 * tol;
    recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // Simpson is exact on cubics: int_0^2 (x^3 - 2x + 1) dx = 2.
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let got = adaptive_simpson(&f, 0.0, 2.0, 1e-12);
        assert!((got - 2.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn endpoint_kink() {
        // |x| kink at the left endpoint, exact value 0.5.
        let f = |x: f64| x.abs();
        let got = adaptive_simpson(&f, 0.0, 1.0, 1e-12);
        assert!((got - 0.5).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        let f = |x: f64| (10.0 * x).sin();
        let exact = (1.0 - (10.0f64).cos()) / 10.0;
        let got = adaptive_simpson(&f, 0.0, 1.0, 1e-11);
        assert!((got - exact).abs() < 1e-10);
    }
}
