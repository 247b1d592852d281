//! The bounded non-almost-periodic solution of `u'' + b(x)u' = 0`.
//!
//! The solution space is spanned by `u₁ ≡ 1` and
//! `u₂(x) = ∫₀ˣ exp(−B(y)) dy` with `B = ∫₀b`. `B` is known in closed form
//! from the exact cell table, so `u₂` only needs a one-dimensional quadrature
//! of a piecewise smooth integrand whose kinks sit on the half-integers.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactfn::{self, from_f64, int, pow3, rat, sigma_norm_bracket, tail_bracket, SigmaTable};
use crate::par;
use crate::quadrature::{self, QuadratureResult};
use crate::report::InequalityReport;

/// Floating-point view of `σ`, `b` and `B` on a window, converted once from
/// the exact table.
#[derive(Debug, Clone)]
pub struct DriftProfile {
    half: i64,
    sigma: Vec<f64>,
    b_integral: Vec<f64>,
}

impl DriftProfile {
    pub fn new(window_exponent: u32) -> Self {
        Self::from_table(&SigmaTable::new(window_exponent))
    }

    pub fn from_table(table: &SigmaTable) -> Self {
        let half = table.half_width();
        let sigma = table.cells().map(|(_, v)| v.to_f64().unwrap()).collect();
        let b_integral = (-half..=half)
            .map(|j| table.b_integral_integer(j).unwrap().to_f64().unwrap())
            .collect();
        DriftProfile {
            half,
            sigma,
            b_integral,
        }
    }

    /// Smallest profile whose window contains `[−reach, reach]`.
    pub fn covering(reach: f64) -> Self {
        let mut n = 1;
        while (pow3(n) as f64) < reach.abs() + 1.0 {
            n += 1;
        }
        Self::new(n)
    }

    pub fn half_width(&self) -> i64 {
        self.half
    }

    pub fn covers(&self, x: f64) -> bool {
        x.is_finite() && x > -(self.half as f64) && x < self.half as f64
    }

    fn cell_index(&self, x: f64) -> (i64, f64) {
        assert!(
            self.covers(x) || x == self.half as f64,
            "{x} outside profile window ±{}",
            self.half
        );
        let m = x.floor();
        (m as i64, x - m)
    }

    pub fn sigma(&self, x: f64) -> f64 {
        let m = x.ceil() as i64 - 1;
        assert!(
            m >= -self.half && m < self.half,
            "{x} outside profile window ±{}",
            self.half
        );
        self.sigma[(m + self.half) as usize]
    }

    pub fn b(&self, x: f64) -> f64 {
        let (m, r) = self.cell_index(x);
        if r == 0.0 {
            return 0.0;
        }
        self.sigma[(m + self.half) as usize] * 2.0 * r.min(1.0 - r)
    }

    /// `B(x) = ∫₀ˣ b`.
    pub fn big_b(&self, x: f64) -> f64 {
        let (m, r) = self.cell_index(x);
        let base = self.b_integral[(m + self.half) as usize];
        if r == 0.0 {
            return base;
        }
        let zp = if r <= 0.5 { r * r } else { 0.5 - (1.0 - r) * (1.0 - r) };
        base + self.sigma[(m + self.half) as usize] * zp
    }

    /// Integrand of `u₂`.
    pub fn u2_integrand(&self, y: f64) -> f64 {
        (-self.big_b(y)).exp()
    }
}

/// Splits `[a, b]` at every multiple of 1/2 strictly inside it.
fn half_integer_pieces(a: f64, b: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut cuts = vec![lo];
    let mut k = (2.0 * lo).floor() + 1.0;
    while k / 2.0 < hi {
        cuts.push(k / 2.0);
        k += 1.0;
    }
    cuts.push(hi);
    cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// `u₂` evaluator bound to a drift profile.
#[derive(Debug, Clone)]
pub struct U2 {
    profile: DriftProfile,
}

impl U2 {
    pub fn new(profile: DriftProfile) -> Self {
        U2 { profile }
    }

    /// Profile wide enough for arguments in `[−reach, reach]`.
    pub fn covering(reach: f64) -> Self {
        U2::new(DriftProfile::covering(reach))
    }

    pub fn profile(&self) -> &DriftProfile {
        &self.profile
    }

    /// `∫ₐᵇ exp(−B)`, signed, split at the kinks; the tolerance is shared in
    /// proportion to piece length.
    pub fn integrate(&self, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
        if !(tol > 0.0) {
            return Err(Error::usage(format!("tolerance must be positive, got {tol}")));
        }
        if a == b {
            return Ok(QuadratureResult::zero());
        }
        if !self.profile.covers(a) && a.abs() != self.profile.half as f64
            || !self.profile.covers(b) && b.abs() != self.profile.half as f64
        {
            return Err(Error::usage(format!(
                "interval [{a}, {b}] exceeds the drift window ±{}",
                self.profile.half
            )));
        }
        let pieces = half_integer_pieces(a, b);
        let total = (b - a).abs();
        let f = |y: f64| self.profile.u2_integrand(y);
        let parts = par::try_map_slice(&pieces, |&(lo, hi)| {
            quadrature::adaptive(&f, lo, hi, tol * (hi - lo) / total)
        })?;
        let sum = parts
            .into_iter()
            .fold(QuadratureResult::zero(), QuadratureResult::combine);
        Ok(if a <= b { sum } else { sum.negate() })
    }

    /// `u₂(x)`; negative arguments use oddness of `u₂`.
    pub fn at(&self, x: f64, tol: f64) -> Result<QuadratureResult> {
        if x < 0.0 {
            return Ok(self.at(-x, tol)?.negate());
        }
        self.integrate(0.0, x, tol)
    }

    /// `u₂(x)` by direct quadrature on the signed interval, without using
    /// oddness. Used to cross-check the symmetric evaluation.
    pub fn at_direct(&self, x: f64, tol: f64) -> Result<QuadratureResult> {
        self.integrate(0.0, x, tol)
    }
}

/// `u₂(x)` within absolute error `tol`.
pub fn u2_at(x: f64, tol: f64) -> Result<QuadratureResult> {
    U2::covering(x.abs()).at(x, tol)
}

// ---------------------------------------------------------------------------
// Tabulated u₂ for repeated evaluation (almost-period scans)
// ---------------------------------------------------------------------------

/// `u₂` tabulated at the half-integers of `[−reach, reach]`; a query adds a
/// single fixed-order rule on the remaining smooth piece.
#[derive(Debug, Clone)]
pub struct U2Table {
    u2: U2,
    reach: i64,
    /// `nodes[j]` is `u₂((j − 2·reach)/2)`.
    nodes: Vec<f64>,
}

impl U2Table {
    pub fn new(reach: f64, tol: f64) -> Result<Self> {
        let reach = reach.ceil() as i64;
        let u2 = U2::covering(reach as f64 + 1.0);
        let count = (4 * reach) as usize;
        let per_piece = tol / (2 * reach).max(1) as f64;
        let f = |y: f64| u2.profile.u2_integrand(y);
        let pieces = par::try_map_range_result(count, |i| {
            let a = (i as f64 - 2.0 * reach as f64) / 2.0;
            quadrature::adaptive(&f, a, a + 0.5, per_piece).map(|q| q.value)
        })?;
        let mut nodes = Vec::with_capacity(count + 1);
        // accumulate outward from the origin in both directions
        let zero = (2 * reach) as usize;
        nodes.resize(count + 1, 0.0);
        for j in zero..count {
            nodes[j + 1] = nodes[j] + pieces[j];
        }
        for j in (0..zero).rev() {
            nodes[j] = nodes[j + 1] - pieces[j];
        }
        Ok(U2Table { u2, reach, nodes })
    }

    pub fn reach(&self) -> f64 {
        self.reach as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = self.reach as f64;
        let x = x.clamp(-r, r);
        let j = ((2.0 * x).floor() as i64 + 2 * self.reach).clamp(0, 4 * self.reach) as usize;
        let a = (j as f64 - 2.0 * r) / 2.0;
        if x == a {
            return self.nodes[j];
        }
        let f = |y: f64| self.u2.profile.u2_integrand(y);
        self.nodes[j] + quadrature::fixed(&f, a, x)
    }
}

// ---------------------------------------------------------------------------
// Inequality checks
// ---------------------------------------------------------------------------

/// Lower bound on `log₃ m` for integers `m ≥ 1`, exact at powers of three.
fn log3_lower(m: u64) -> BigRational {
    let mut p = 1u64;
    let mut k = 0i64;
    while p < m {
        p *= 3;
        k += 1;
    }
    if p == m {
        return int(k);
    }
    log3_lower_f64(m as f64)
}

/// Outward-rounded lower bound on `log₃ x` for real `x > 0`.
fn log3_lower_f64(x: f64) -> BigRational {
    let l = x.ln() / 3f64.ln();
    // libm logs are accurate to about 1 ulp; 1e-14 relative covers the
    // division and both logarithms with ample room.
    let lo = l - l.abs() * 1e-14 - 1e-300;
    from_f64(lo)
}

fn log3_lower_real(x: &BigRational) -> BigRational {
    if x.is_integer() {
        if let Some(m) = x.to_integer().to_u64() {
            return log3_lower(m);
        }
    }
    log3_lower_f64(exactfn::to_f64_down(x))
}

/// Checks `F(m) ≥ m / (2(log₃m + 1)²)` at every integer `m ∈ [1, x_max]`.
pub fn verify_intf(x_max: u64) -> Result<InequalityReport> {
    if x_max < 1 {
        return Err(Error::usage("x_max must be at least 1"));
    }
    let mut n = 1;
    while (pow3(n) as u64) < x_max {
        n += 1;
    }
    let table = SigmaTable::new(n);
    let rows = par::map_range(x_max as usize, |i| {
        let m = i as u64 + 1;
        let f = table.f_integer(m as i64).unwrap().clone();
        let l = log3_lower(m) + BigRational::one();
        let rhs = int(m as i64) / (int(2) * &l * &l);
        (m, f, rhs)
    });
    let mut report = InequalityReport::new("integral-lower-bound");
    for (m, f, rhs) in rows {
        report.record_exact_ge(m as f64, &f, &rhs);
    }
    report.metric("x_max", x_max as f64);
    Ok(report.finalize())
}

/// Checks `F(y) ≥ y/(2n²)` on `[0, 3ⁿ]` at every integer and at
/// `samples_per_cell` equally spaced interior points of each cell. `F` is
/// piecewise linear with integer breakpoints, so the endpoint checks alone
/// decide the claim.
pub fn verify_intn(n: u32, samples_per_cell: u32) -> Result<InequalityReport> {
    if n < 1 {
        return Err(Error::usage("n must be at least 1"));
    }
    let table = SigmaTable::new(n);
    let top = pow3(n);
    let denom = int(2 * i64::from(n) * i64::from(n));
    let s = i64::from(samples_per_cell);
    let rows = par::map_range((top + 1) as usize, |j| {
        let j = j as i64;
        let mut out = Vec::new();
        let pts = if j < top { s + 1 } else { 1 };
        for i in 0..pts {
            let y = int(j) + rat(i, s + 1);
            let f = table.f_at(&y);
            let rhs = &y / &denom;
            out.push((y, f, rhs));
        }
        out
    });
    let mut report = InequalityReport::new(format!("intn/n={n}"));
    for (y, f, rhs) in rows.into_iter().flatten() {
        report.record_exact_ge(y.to_f64().unwrap(), &f, &rhs);
    }
    Ok(report.finalize())
}

/// Compares the exact `sup |σ − φₙ|` over `(−3ᵂ, 3ᵂ]` with the rational
/// bracket of `Σ_{k>n} 1/k²`, and checks `sup |b − ψₙ| ≤ sup |σ − φₙ|` on
/// the same window using independent point evaluations.
pub fn verify_approximation(n: u32, window_exponent: u32) -> Result<InequalityReport> {
    if n < 1 || window_exponent < n {
        return Err(Error::usage("need n ≥ 1 and window_exponent ≥ n"));
    }
    let table = SigmaTable::new(window_exponent);
    let sup = table.sup_diff_sigma_phi(n, window_exponent);
    let tail = tail_bracket(n);
    let half = pow3(window_exponent);
    // |b − ψₙ| is linear between half-integers and vanishes on ℤ, so its sup
    // over the window is attained at half-integers.
    let b_psi = par::map_range((2 * half) as usize, |i| {
        let x = int(-half + i as i64) + rat(1, 2);
        let d = exactfn::b_at(&x) - exactfn::psi_n_at(n, &x);
        if d < BigRational::zero() {
            -d
        } else {
            d
        }
    });
    let sup_b_psi = b_psi
        .into_iter()
        .fold(BigRational::zero(), |a, d| if d > a { d } else { a });

    let mut report = InequalityReport::new(format!("sigma-approx/n={n}/window={window_exponent}"));
    // certified when the exact sup sits below the lower end of the bracket
    report.record_exact_ge(f64::from(n), &tail.lo, &sup);
    report.record_exact_ge(f64::from(n), &sup, &sup_b_psi);
    report.metric("sup_sigma_minus_phi", exactfn::to_f64_up(&sup));
    report.metric("sup_b_minus_psi", exactfn::to_f64_up(&sup_b_psi));
    report.metric("tail_lo", tail.lo_f64());
    report.metric("tail_hi", tail.hi_f64());
    Ok(report.finalize())
}

/// Checks `B(x) ≥ (x−1)/(4(log₃x+1)²) − ‖b‖` at each `x ≥ 1`.
///
/// The claim is judged with the lower end of the `‖b‖` bracket (the stricter
/// choice). The margin obtained with the window supremum of `|σ|` over
/// `[0, x]` is recorded as `worst_margin_window_norm`.
pub fn verify_b_integral_lower_bound(xs: &[f64]) -> Result<InequalityReport> {
    if let Some(bad) = xs.iter().find(|&&x| !(x >= 1.0) || !x.is_finite()) {
        return Err(Error::usage(format!("every x must be a finite number ≥ 1, got {bad}")));
    }
    let reach = xs.iter().fold(1.0f64, |m, &x| m.max(x));
    let mut n = 1;
    while (pow3(n) as f64) < reach + 1.0 {
        n += 1;
    }
    let table = SigmaTable::new(n);
    let norm = sigma_norm_bracket().lo;
    let rows = par::map_slice(xs, |&x| {
        let xr = from_f64(x);
        let lhs = table.b_integral_at(&xr);
        let l = log3_lower_real(&xr) + BigRational::one();
        let main = (&xr - BigRational::one()) / (int(4) * &l * &l);
        let window = table.sup_abs_sigma_on(0, x.ceil() as i64);
        (x, lhs, &main - &norm, main - window)
    });
    let mut report = InequalityReport::new("b-integral-lower-bound");
    let mut window_margin = f64::INFINITY;
    for (x, lhs, rhs, rhs_window) in rows {
        report.record_exact_ge(x, &lhs, &rhs);
        window_margin = window_margin.min(crate::report::signed_f64(&(lhs - rhs_window)));
    }
    report.metric("norm_lo", exactfn::to_f64_down(&norm));
    if window_margin.is_finite() {
        report.metric("worst_margin_window_norm", window_margin);
    }
    Ok(report.finalize())
}

// ---------------------------------------------------------------------------
// Explicit upper bound on u₂
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U2Bound {
    /// Certified upper bound `B*` on `sup u₂`.
    pub value: f64,
    /// Norm of `b` used in the prefactor `e^{‖b‖}`.
    pub norm: f64,
    /// `∫₁^Y exp(−(y−1)/(4(log₃y+1)²)) dy` by quadrature.
    pub integral: f64,
    pub quadrature_error: f64,
    /// Truncation point `Y` of the improper integral.
    pub truncation_point: f64,
    /// Certified bound on the discarded tail `∫_Y^∞`.
    pub remainder_bound: f64,
}

/// `exp(−(y−1)/(4(log₃y+1)²))` for `y ≥ 1`.
pub fn bound_integrand(y: f64) -> f64 {
    (-bound_exponent(y)).exp()
}

fn bound_exponent(y: f64) -> f64 {
    let l = y.ln() / 3f64.ln() + 1.0;
    (y - 1.0) / (4.0 * l * l)
}

/// Certified bound on `∫_Y^∞` of the bound integrand, or `None` when the
/// doubling argument does not yet apply at `Y`.
///
/// Beyond `y = 3` the exponent `h` is increasing, and
/// `h(2y) ≥ ρ·h(y)` with `ρ = 2((L+1)/(L+1+log₃2))²`, `L = log₃Y`, so
/// `∫_Y^∞ e^{−h} ≤ Y e^{−h(Y)} / (1 − 2e^{−(ρ−1)h(Y)})`.
fn tail_remainder(y: f64) -> Option<f64> {
    if y < 3.0 {
        return None;
    }
    let l = y.ln() / 3f64.ln();
    let c = 2f64.ln() / 3f64.ln();
    let rho = 2.0 * ((l + 1.0) / (l + 1.0 + c)).powi(2);
    if rho <= 1.0 {
        return None;
    }
    let h = bound_exponent(y);
    let ratio = 2.0 * (-(rho - 1.0) * h).exp();
    if ratio >= 1.0 {
        return None;
    }
    Some(y * (-h).exp() / (1.0 - ratio) * (1.0 + 1e-12))
}

/// `B* = 1 + e^{‖b‖} ∫₁^∞ exp(−(y−1)/(4(log₃y+1)²)) dy`, with `‖b‖` replaced
/// by the upper end of its rational bracket.
///
/// On `[0, 1]` the integrand `e^{−B}` is at most 1 because `B ≥ 0` there;
/// beyond 1 the lower bound on `B` applies.
pub fn u2_upper_bound(tol: f64) -> Result<U2Bound> {
    u2_upper_bound_with_norm(sigma_norm_bracket().hi_f64(), tol)
}

pub fn u2_upper_bound_with_norm(norm: f64, tol: f64) -> Result<U2Bound> {
    if !(tol > 0.0) {
        return Err(Error::usage(format!("tolerance must be positive, got {tol}")));
    }
    let mut y_cut = 27.0;
    let remainder = loop {
        match tail_remainder(y_cut) {
            Some(r) if r <= 0.5 * tol => break r,
            _ => {}
        }
        y_cut *= 2.0;
        if y_cut > 1e12 {
            return Err(Error::numerical(
                "u2 upper bound",
                "tail remainder could not be certified below the tolerance",
                tail_remainder(y_cut).unwrap_or(f64::INFINITY),
            ));
        }
    };
    let pieces = y_cut as usize - 1;
    let per_piece = 0.5 * tol / pieces as f64;
    let parts = par::try_map_range_result(pieces, |i| {
        let a = 1.0 + i as f64;
        quadrature::adaptive(&bound_integrand, a, a + 1.0, per_piece)
    })?;
    let q = parts
        .into_iter()
        .fold(QuadratureResult::zero(), QuadratureResult::combine);
    let prefactor = norm.exp() * (1.0 + 1e-12);
    let value = (1.0 + prefactor * (q.value + q.error_estimate + remainder)) * (1.0 + 1e-12);
    Ok(U2Bound {
        value,
        norm,
        integral: q.value,
        quadrature_error: q.error_estimate,
        truncation_point: y_cut,
        remainder_bound: remainder,
    })
}

// ---------------------------------------------------------------------------
// Boundedness sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub x: f64,
    pub u2: f64,
    /// `∫` over the preceding segment; strictly positive by construction of
    /// the integrand.
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub samples: Vec<SweepSample>,
    pub bound: U2Bound,
    pub monotone: InequalityReport,
    pub oddness: InequalityReport,
    pub bounded: InequalityReport,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.monotone.passed() && self.oddness.passed() && self.bounded.passed()
    }

    pub fn max_u2(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.u2))
    }
}

/// Number of mirrored pairs tested for oddness in a sweep.
pub const ODDNESS_PAIRS: usize = 100;

/// Tabulates `u₂` on `0, step, 2·step, …, x_max` and checks strict increase,
/// oddness at [`ODDNESS_PAIRS`] mirrored pairs (by independent quadrature on
/// the negative side) and `max u₂ ≤ B*` with `B*` from
/// `u2_upper_bound(bound_tol)`.
pub fn u2_boundedness_sweep(x_max: f64, step: f64, tol: f64, bound_tol: f64) -> Result<SweepReport> {
    if !(x_max >= 1.0) || !(step > 0.0) || !(tol > 0.0) {
        return Err(Error::usage("need x_max ≥ 1, step > 0, tol > 0"));
    }
    let count = (x_max / step + 1e-9).floor() as usize;
    let u2 = U2::covering(x_max + 1.0);
    let seg_tol = tol * step / x_max;
    let segments = par::try_map_range_result(count, |k| u2.integrate(k as f64 * step, (k + 1) as f64 * step, seg_tol))?;

    let mut samples = Vec::with_capacity(count + 1);
    samples.push(SweepSample {
        x: 0.0,
        u2: 0.0,
        increment: 0.0,
    });
    let mut monotone = InequalityReport::new("u2-strictly-increasing");
    let mut acc = 0.0;
    for (k, seg) in segments.iter().enumerate() {
        let prev = acc;
        acc += seg.value;
        let x = (k + 1) as f64 * step;
        let margin = if seg.value > 0.0 { seg.value } else { -1.0 };
        monotone.record(x, acc, prev, margin);
        samples.push(SweepSample {
            x,
            u2: acc,
            increment: seg.value,
        });
    }

    let pairs: Vec<f64> = (1..=ODDNESS_PAIRS)
        .map(|i| x_max * i as f64 / ODDNESS_PAIRS as f64)
        .collect();
    let odd = par::try_map_slice(&pairs, |&x| {
        let pos = u2.at(x, tol)?;
        let neg = u2.at_direct(-x, tol)?;
        Ok::<_, Error>((x, pos.value, neg.value))
    })?;
    let mut oddness = InequalityReport::new("u2-odd");
    for (x, pos, neg) in odd {
        let residual = (pos + neg).abs();
        oddness.record(x, residual, 2.0 * tol, 2.0 * tol - residual);
    }

    let bound = u2_upper_bound(bound_tol)?;
    let mut bounded = InequalityReport::new("u2-bounded");
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.u2));
    bounded.record(x_max, max, bound.value, bound.value - max);
    bounded.metric("max_u2", max);
    bounded.metric("upper_bound", bound.value);

    Ok(SweepReport {
        samples,
        bound,
        monotone: monotone.finalize(),
        oddness: oddness.finalize(),
        bounded: bounded.finalize(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_matches_exact_values() {
        let p = DriftProfile::new(4);
        let t = SigmaTable::new(4);
        for k in -300..300 {
            let x = k as f64 / 4.0 + 0.0625;
            let xr = from_f64(x);
            assert!((p.b(x) - exactfn::b_at(&xr).to_f64().unwrap()).abs() < 1e-15, "b({x})");
            assert!(
                (p.big_b(x) - t.b_integral_at(&xr).to_f64().unwrap()).abs() < 1e-13,
                "B({x})"
            );
            assert_eq!(p.sigma(x), exactfn::sigma_at(&xr).to_f64().unwrap());
        }
    }

    #[test]
    fn u2_examples() {
        assert_eq!(u2_at(0.0, 1e-10).unwrap().value, 0.0);
        let one = u2_at(1.0, 1e-10).unwrap().value;
        assert!(one >= (-0.5f64).exp() && one <= 1.0);
        let half = u2_at(0.5, 1e-10).unwrap().value;
        assert!(half >= 0.5 * (-0.25f64).exp() && half <= 0.5);
        // closed form on [0, 1/2]: ∫₀^{1/2} e^{−y²} = (√π/2)·erf(1/2)
        let erf_half = 0.520_499_877_813_046_5;
        let exact = std::f64::consts::PI.sqrt() / 2.0 * erf_half;
        assert!((half - exact).abs() < 1e-12, "{half} vs {exact}");
    }

    #[test]
    fn u2_negative_argument_via_oddness_matches_direct() {
        let u = U2::covering(50.0);
        for x in [0.3, 2.75, 17.0, 40.5] {
            let odd = u.at(-x, 1e-11).unwrap().value;
            let direct = u.at_direct(-x, 1e-11).unwrap().value;
            assert!((odd - direct).abs() < 2e-11, "x = {x}");
        }
    }

    #[test]
    fn table_agrees_with_direct_quadrature() {
        let t = U2Table::new(30.0, 1e-11).unwrap();
        let u = U2::covering(31.0);
        for x in [-29.3, -3.0, -0.1, 0.0, 0.7, 5.25, 29.9] {
            let d = u.at_direct(x, 1e-12).unwrap().value;
            assert!((t.eval(x) - d).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn intf_small_cases() {
        let r = verify_intf(3).unwrap();
        assert!(r.passed());
        assert_eq!(r.points_checked, 3);
        let r1 = verify_intf(1).unwrap();
        // F(1) = 1 against 1/2
        assert!((r1.worst_margin - 0.5).abs() < 1e-15);
        assert!(matches!(verify_intf(0), Err(Error::Usage(_))));
    }

    #[test]
    fn intn_cases() {
        assert!(verify_intn(1, 3).unwrap().passed());
        let r2 = verify_intn(2, 0).unwrap();
        assert!(r2.passed());
        assert_eq!(r2.points_checked, 10);
        // F(3) = 3 against 3/2 is among the n = 1 checks
        let r = verify_intn(1, 0).unwrap();
        assert_eq!(r.points_checked, 4);
    }

    #[test]
    fn approximation_cases() {
        let r = verify_approximation(1, 3).unwrap();
        assert!(r.passed(), "{r:?}");
        let r3 = verify_approximation(3, 5).unwrap();
        assert!(r3.passed());
        assert!(r3.metrics["sup_sigma_minus_phi"] < r.metrics["sup_sigma_minus_phi"]);
        let base = verify_approximation(2, 2).unwrap();
        assert_eq!(base.metrics["sup_sigma_minus_phi"], 0.0);
        assert!(verify_approximation(3, 2).is_err());
    }

    #[test]
    fn b_integral_lower_bound_cases() {
        let r = verify_b_integral_lower_bound(&[1.0, 2.0, 3.0, 9.0, 27.0, 81.0, 243.0, 729.0, 2187.0, 6561.0]).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(verify_b_integral_lower_bound(&[0.5]).is_err());
    }

    #[test]
    fn bound_integrand_at_one() {
        assert_eq!(bound_integrand(1.0), 1.0);
    }

    #[test]
    fn upper_bound_is_self_consistent() {
        let a = u2_upper_bound(1e-6).unwrap();
        let b = u2_upper_bound(1e-8).unwrap();
        assert!(a.value.is_finite() && a.value > 1.0);
        assert!((a.value - b.value).abs() < 1e-5, "{} vs {}", a.value, b.value);
        assert!(b.remainder_bound <= 0.5e-8);
    }

    #[test]
    fn tail_remainder_dominates_quadrature_of_the_tail() {
        let y = 3000.0;
        let r = tail_remainder(y).unwrap();
        let q = quadrature::adaptive(&bound_integrand, y, 40.0 * y, 1e-30).unwrap();
        assert!(q.value <= r, "{} > {r}", q.value);
    }

    #[test]
    fn small_sweep_passes() {
        let s = u2_boundedness_sweep(27.0, 0.125, 1e-9, 1e-6).unwrap();
        assert!(s.passed());
        assert_eq!(s.samples.len(), 27 * 8 + 1);
    }
}
