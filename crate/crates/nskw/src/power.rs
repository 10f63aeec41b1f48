//! Fast evaluation of `x^e` for positive `x` when `e` is an integer,
//! half-integer, or quarter-integer.
//!
//! The right-hand side evaluates `v^(alpha+1)`, `v^(beta+5)`, `v^(beta+6)`
//! and `theta^lambda` at every node of every stage; the regime presets all
//! use exponents on the quarter-integer lattice, where `powi` plus square
//! roots is several times cheaper than `powf`.

#[derive(Debug, Clone, Copy)]
pub(crate) struct PowExp {
    kind: Kind,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Int(i32),
    // x^(k + q/4), q in 1..=3
    Quarter(i32, u8),
    General(f64),
}

impl PowExp {
    pub(crate) fn new(e: f64) -> Self {
        let scaled = e * 4.0;
        if scaled == scaled.round() && e.abs() <= 64.0 {
            let q4 = scaled.round() as i64;
            let k = q4.div_euclid(4) as i32;
            let q = q4.rem_euclid(4) as u8;
            if q == 0 {
                return PowExp { kind: Kind::Int(k) };
            }
            return PowExp {
                kind: Kind::Quarter(k, q),
            };
        }
        PowExp {
            kind: Kind::General(e),
        }
    }

    #[inline]
    pub(crate) fn apply(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Int(k) => x.powi(k),
            Kind::Quarter(k, q) => {
                let root = match q {
                    1 => x.sqrt().sqrt(),
                    2 => x.sqrt(),
                    _ => x.sqrt() * x.sqrt().sqrt(),
                };
                x.powi(k) * root
            }
            Kind::General(e) => x.powf(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_powf_on_lattice() {
        let xs: [f64; 5] = [0.3, 0.9, 1.0, 1.7, 42.0];
        for quarter in -22..=22 {
            let e = quarter as f64 / 4.0;
            let p = PowExp::new(e);
            for &x in &xs {
                let want = x.powf(e);
                let got = p.apply(x);
                assert!(
                    (got - want).abs() <= 4.0 * f64::EPSILON * want.abs().max(1.0),
                    "x={x} e={e} got={got} want={want}"
                );
            }
        }
    }

    #[test]
    fn general_exponent_falls_back() {
        let p = PowExp::new(0.3333);
        assert_eq!(p.apply(2.0), 2.0f64.powf(0.3333));
    }
}
