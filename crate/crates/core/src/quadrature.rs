//! Gauss–Legendre rules and a bisecting adaptive driver.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of the base rule used by [`adaptive`].
pub const BASE_ORDER: usize = 10;
const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub fn zero() -> Self {
        QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        }
    }

    pub fn combine(self, other: QuadratureResult) -> Self {
        QuadratureResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    pub fn negate(self) -> Self {
        QuadratureResult {
            value: -self.value,
            ..self
        }
    }
}

/// Nodes and weights of the `n`-point rule on `[−1, 1]`, by Newton iteration
/// on the Legendre polynomial from the Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

fn base_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(BASE_ORDER))
}

/// Fixed-order rule on `[a, b]`.
pub fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = base_rule();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(c + r * xi);
    }
    s * r
}

/// Adaptive integration of a smooth integrand on `[a, b]`: the base rule on
/// the whole interval is compared with the two halves and accepted when the
/// difference is within `tol`; otherwise each half is refined with `tol/2`.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::usage(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    if a == b {
        return Ok(QuadratureResult::zero());
    }
    let whole = fixed(f, a, b);
    refine(f, a, b, whole, tol, 0)
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Result<QuadratureResult> {
    let m = 0.5 * (a + b);
    let left = fixed(f, a, m);
    let right = fixed(f, m, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    let evals = 3 * BASE_ORDER;
    // Below a few ulps the difference is rounding noise, not truncation error.
    let floor = 8.0 * f64::EPSILON * refined.abs().max(whole.abs());
    if err <= tol || err <= floor {
        return Ok(QuadratureResult {
            value: refined,
            error_estimate: err,
            evaluations: evals,
        });
    }
    if depth >= MAX_DEPTH {
        return Err(Error::numerical(
            "adaptive quadrature",
            format!("no convergence on [{a}, {b}] after {MAX_DEPTH} bisections"),
            err,
        ));
    }
    let l = refine(f, a, m, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, m, b, right, 0.5 * tol, depth + 1)?;
    Ok(QuadratureResult {
        evaluations: l.evaluations + r.evaluations + evals,
        ..l.combine(r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(BASE_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 2n−1 = 19 is exact
        for deg in [2, 8, 18] {
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let r = adaptive(&f, -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-8, "{} vs {}", r.value, exact);
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        assert!(matches!(adaptive(&|x| x, 0.0, 1.0, 0.0), Err(Error::Usage(_))));
    }
}
