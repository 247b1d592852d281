//! ε-almost-period scanning (Bohr) and precompactness probing of translates
//! (Bochner) for functions of one real variable.
//!
//! A sampled supremum is only a lower bound on the true supremum. For
//! piecewise linear inputs with known kinks (`b`, `ψₙ`, `z`) the grid
//! contains every breakpoint of `x ↦ f(x+τ) − f(x)`, which makes the
//! supremum over the window exact.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::counterexample::{DriftProfile, U2Table, U2};
use crate::error::{Error, Result};
use crate::exactfn::{pow3, tail_bracket};
use crate::par;
use crate::report::InequalityReport;

pub type Sampler = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    /// `lo + i·step`.
    Uniform,
    /// Multiples of `step` (the kink spacing) plus the window ends.
    Kinks,
}

/// A real function observed on a window through a sampling grid.
#[derive(Clone)]
pub struct SampledFunction {
    sampler: Sampler,
    pub window: (f64, f64),
    pub step: f64,
    pub grid: GridKind,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("window", &self.window)
            .field("step", &self.step)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SampledFunction {
    pub fn new(sampler: Sampler, window: (f64, f64), step: f64) -> Result<Self> {
        Self::with_grid(sampler, window, step, GridKind::Uniform)
    }

    /// Piecewise linear function whose kinks lie on multiples of `spacing`.
    pub fn piecewise_linear(sampler: Sampler, window: (f64, f64), spacing: f64) -> Result<Self> {
        Self::with_grid(sampler, window, spacing, GridKind::Kinks)
    }

    fn with_grid(sampler: Sampler, window: (f64, f64), step: f64, grid: GridKind) -> Result<Self> {
        if !(window.1 > window.0) || !(step > 0.0) {
            return Err(Error::usage(format!(
                "need a non-empty window and a positive step, got {window:?} and {step}"
            )));
        }
        Ok(SampledFunction {
            sampler,
            window,
            step,
            grid,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.sampler)(x)
    }

    pub fn len(&self) -> f64 {
        self.window.1 - self.window.0
    }

    fn base_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.window;
        match self.grid {
            GridKind::Uniform => {
                let n = ((hi - lo) / self.step + 1e-9).floor() as usize;
                let mut g: Vec<f64> = (0..=n).map(|i| lo + i as f64 * self.step).collect();
                if *g.last().unwrap() < hi {
                    g.push(hi);
                }
                g
            }
            GridKind::Kinks => {
                let first = (lo / self.step).ceil() as i64;
                let last = (hi / self.step).floor() as i64;
                let mut g = vec![lo];
                g.extend(
                    (first..=last)
                        .map(|k| k as f64 * self.step)
                        .filter(|&x| x > lo && x < hi),
                );
                g.push(hi);
                g
            }
        }
    }

    /// The drift `b` on `[−half, half]` with its half-integer kinks.
    pub fn drift_b(half: f64) -> Result<Self> {
        let profile = Arc::new(DriftProfile::covering(half + 1.0));
        let sampler: Sampler = Arc::new(move |x| profile.b(x));
        Self::piecewise_linear(sampler, (-half, half), 0.5)
    }

    /// `ψₙ = φₙ·z` on `[−half, half]`.
    pub fn approximant_psi(n: u32, half: f64) -> Result<Self> {
        let profile = Arc::new(DriftProfile::new(n.max(1)));
        let h = pow3(n) as f64;
        let sampler: Sampler = Arc::new(move |x| {
            let y = x - 2.0 * h * ((x - h) / (2.0 * h)).ceil();
            let r = x - x.floor();
            profile.sigma(y) * 2.0 * r.min(1.0 - r)
        });
        Self::piecewise_linear(sampler, (-half, half), 0.5)
    }

    /// The triangle wave `z`.
    pub fn triangle(half: f64) -> Result<Self> {
        let sampler: Sampler = Arc::new(|x: f64| {
            let r = x - x.floor();
            2.0 * r.min(1.0 - r)
        });
        Self::piecewise_linear(sampler, (-half, half), 0.5)
    }

    /// `u₂` on `[−half, half]`, tabulated to `tol`, sampled on a uniform grid.
    pub fn u2(half: f64, step: f64, tol: f64) -> Result<Self> {
        Self::u2_with_reach(half, half + 1.0, step, tol)
    }

    /// As [`SampledFunction::u2`], tabulating on `[−reach, reach]` so that
    /// translates by up to `reach − half` stay accurate.
    pub fn u2_with_reach(half: f64, reach: f64, step: f64, tol: f64) -> Result<Self> {
        let table = Arc::new(U2Table::new(reach.max(half + 1.0), tol)?);
        let sampler: Sampler = Arc::new(move |x| table.eval(x));
        Self::new(sampler, (-half, half), step)
    }
}

/// `max |f(x+τ) − f(x)|` over grid pairs with both ends inside the window.
///
/// The point set is `G ∪ (G − τ)` for the base grid `G`, so the pairs for
/// `τ` and `−τ` coincide and the result is symmetric in `τ`. Exact for
/// [`GridKind::Kinks`] on piecewise linear functions; a lower bound on the
/// true supremum otherwise.
pub fn sup_translate_diff(f: &SampledFunction, tau: f64) -> Result<f64> {
    if !tau.is_finite() || 2.0 * tau.abs() > f.len() * (1.0 + 1e-12) {
        return Err(Error::usage(format!(
            "shift {tau} too large for window {:?} (need |τ| ≤ half its length)",
            f.window
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = f.window;
    let inside = |x: f64| x >= lo && x <= hi;
    let mut best = 0.0f64;
    for g in f.base_grid() {
        if inside(g + tau) {
            best = best.max((f.eval(g + tau) - f.eval(g)).abs());
        }
        if inside(g - tau) {
            best = best.max((f.eval(g) - f.eval(g - tau)).abs());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriodReport {
    pub epsilon: f64,
    pub taus_found: Vec<f64>,
    /// Largest gap between consecutive found translations, counting the
    /// ends of the scan range; the whole range length when none is found.
    pub max_gap: f64,
    pub scan_range: (f64, f64),
    pub scanned: usize,
    /// Largest sup-difference among the accepted translations.
    pub worst_accepted: f64,
}

impl AlmostPeriodReport {
    pub fn contains(&self, tau: f64, tol: f64) -> bool {
        self.taus_found.iter().any(|t| (t - tau).abs() <= tol)
    }
}

/// Scans `τ = τ_lo + j·τ_step` over the range and keeps the translations
/// with `sup |f(·+τ) − f| ≤ eps`.
pub fn scan_almost_periods(
    f: &SampledFunction,
    eps: f64,
    tau_range: (f64, f64),
    tau_step: f64,
) -> Result<AlmostPeriodReport> {
    if !(eps > 0.0) || !(tau_step > 0.0) || !(tau_range.1 >= tau_range.0) {
        return Err(Error::usage("need eps > 0, tau_step > 0 and an ordered range"));
    }
    let count = ((tau_range.1 - tau_range.0) / tau_step + 1e-9).floor() as usize + 1;
    let taus: Vec<f64> = (0..count).map(|j| tau_range.0 + j as f64 * tau_step).collect();
    let diffs = par::try_map_slice(&taus, |&t| sup_translate_diff(f, t))?;
    let mut found = Vec::new();
    let mut worst = 0.0f64;
    for (t, d) in taus.iter().zip(&diffs) {
        if *d <= eps {
            found.push(*t);
            worst = worst.max(*d);
        }
    }
    let max_gap = max_gap(&found, tau_range);
    Ok(AlmostPeriodReport {
        epsilon: eps,
        taus_found: found,
        max_gap,
        scan_range: tau_range,
        scanned: count,
        worst_accepted: worst,
    })
}

fn max_gap(found: &[f64], range: (f64, f64)) -> f64 {
    if found.is_empty() {
        return range.1 - range.0;
    }
    let mut gap = found[0] - range.0;
    for w in found.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap.max(range.1 - found[found.len() - 1])
}

/// `ε = 2·Σ_{k>n} 1/k²` (upper end of the bracket): every multiple of
/// `2·3ⁿ` is an ε-almost period of `b`, since `ψₙ` has that period and
/// `|b − ψₙ| ≤ Σ_{k>n} 1/k²`.
pub fn drift_epsilon(n: u32) -> f64 {
    2.0 * tail_bracket(n).hi_f64()
}

/// Witness that `u₂` is not almost periodic.
///
/// For `τ ≥ 1`, taking `x = −τ/2` and using oddness,
/// `u₂(x+τ) − u₂(x) = 2u₂(τ/2) ≥ 2u₂(1/2) =: ε₀` by monotonicity, so no
/// `|τ| ≥ 1` is an ε-almost period for `ε < ε₀` and the set of such almost
/// periods is not relatively dense.
pub fn non_ap_witness_u2(tau_list: &[f64], tol: f64) -> Result<InequalityReport> {
    if let Some(t) = tau_list.iter().find(|&&t| !(t >= 1.0) || !t.is_finite()) {
        return Err(Error::usage(format!("every τ must be a finite number ≥ 1, got {t}")));
    }
    let reach = tau_list.iter().fold(1.0f64, |m, &t| m.max(t / 2.0));
    let u = U2::covering(reach + 1.0);
    let eps0 = 2.0 * u.at(0.5, tol)?.value;
    let values = par::try_map_slice(tau_list, |&t| u.at(t / 2.0, tol).map(|q| 2.0 * q.value))?;
    let mut report = InequalityReport::new("u2-not-almost-periodic");
    let threshold = eps0 - 2.0 * tol;
    for (&t, w) in tau_list.iter().zip(values) {
        report.record(t, w, threshold, w - threshold);
    }
    report.metric("epsilon0", eps0);
    Ok(report.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerDiagnostic {
    pub shifts: Vec<f64>,
    pub compact_window: (f64, f64),
    /// `compact[i][j] = sup_{x∈K} |f(x+sᵢ) − f(x+sⱼ)|`.
    pub compact: Vec<Vec<f64>>,
    /// Same over the full window of the sampled function.
    pub full: Vec<Vec<f64>>,
    /// Compact distances of consecutive shifts are nonincreasing and shrink.
    pub compact_converging: bool,
    /// Smallest off-diagonal full-window distance.
    pub min_full_separation: f64,
    /// Compact convergence together with full-window separation of at least
    /// the requested amount: translates converge locally but no subsequence
    /// converges uniformly.
    pub failure_mode: bool,
}

/// Pairwise distances between translates `f(·+sᵢ)` on a compact window and
/// on the full window of `f`.
pub fn bochner_probe(
    f: &SampledFunction,
    shifts: &[f64],
    compact_window: (f64, f64),
    separation: f64,
) -> Result<BochnerDiagnostic> {
    if shifts.len() < 2 {
        return Err(Error::usage("need at least two shifts"));
    }
    if !(compact_window.1 >= compact_window.0) {
        return Err(Error::usage("compact window must be ordered"));
    }
    let grid_on = |lo: f64, hi: f64| {
        let n = ((hi - lo) / f.step + 1e-9).floor() as usize;
        let mut g: Vec<f64> = (0..=n).map(|i| lo + i as f64 * f.step).collect();
        if *g.last().unwrap() < hi {
            g.push(hi);
        }
        g
    };
    let compact_grid = grid_on(compact_window.0, compact_window.1);
    let full_grid = grid_on(f.window.0, f.window.1);
    let translate = |grid: &[f64], s: f64| grid.iter().map(|&x| f.eval(x + s)).collect::<Vec<f64>>();
    let compact_vals = par::map_slice(shifts, |&s| translate(&compact_grid, s));
    let full_vals = par::map_slice(shifts, |&s| translate(&full_grid, s));
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let k = shifts.len();
    let matrix = |vals: &[Vec<f64>]| {
        (0..k)
            .map(|i| (0..k).map(|j| dist(&vals[i], &vals[j])).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let compact = matrix(&compact_vals);
    let full = matrix(&full_vals);
    let consecutive: Vec<f64> = (0..k - 1).map(|i| compact[i][i + 1]).collect();
    let compact_converging = consecutive.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15)
        && consecutive.last() < consecutive.first().map(|v| v * 0.5).as_ref();
    let min_full_separation = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(f64::INFINITY, |m, (i, j)| m.min(full[i][j]));
    Ok(BochnerDiagnostic {
        shifts: shifts.to_vec(),
        compact_window,
        compact,
        full,
        compact_converging,
        min_full_separation,
        failure_mode: compact_converging && min_full_separation >= separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(p: f64, half: f64, step: f64) -> SampledFunction {
        let s: Sampler = Arc::new(move |x: f64| (2.0 * std::f64::consts::PI * x / p).sin() + 0.3);
        SampledFunction::new(s, (-half, half), step).unwrap()
    }

    #[test]
    fn zero_shift_is_zero() {
        let b = SampledFunction::drift_b(81.0).unwrap();
        assert_eq!(sup_translate_diff(&b, 0.0).unwrap(), 0.0);
        let u = SampledFunction::u2(20.0, 0.25, 1e-10).unwrap();
        assert_eq!(sup_translate_diff(&u, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn triangle_has_period_one() {
        let z = SampledFunction::triangle(20.0).unwrap();
        assert_eq!(sup_translate_diff(&z, 1.0).unwrap(), 0.0);
        assert_eq!(sup_translate_diff(&z, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn drift_translate_by_approximant_period() {
        // n = 2: period 18, bound 2·Σ_{k≥3} 1/k²
        let b = SampledFunction::drift_b(81.0).unwrap();
        let d = sup_translate_diff(&b, 18.0).unwrap();
        assert!(d <= drift_epsilon(2), "{d}");
        assert!(d > 0.0);
    }

    #[test]
    fn kink_grid_is_exact_for_drift() {
        // A fine uniform grid can only find less than the kink-aware sup.
        let b = SampledFunction::drift_b(27.0).unwrap();
        let s: Sampler = {
            let p = Arc::new(DriftProfile::covering(28.0));
            Arc::new(move |x| p.b(x))
        };
        let fine = SampledFunction::new(s, (-27.0, 27.0), 1.0 / 64.0).unwrap();
        for tau in [1.0, 6.0, 7.25, 13.5] {
            let exact = sup_translate_diff(&b, tau).unwrap();
            let sampled = sup_translate_diff(&fine, tau).unwrap();
            assert!(sampled <= exact + 1e-15, "τ = {tau}");
            assert!(exact - sampled < 0.05, "τ = {tau}");
        }
    }

    #[test]
    fn symmetric_in_tau() {
        let b = SampledFunction::drift_b(40.0).unwrap();
        let u = SampledFunction::u2(30.0, 0.125, 1e-10).unwrap();
        for tau in [0.5, 3.0, 7.75, 18.0] {
            assert_eq!(
                sup_translate_diff(&b, tau).unwrap(),
                sup_translate_diff(&b, -tau).unwrap()
            );
            assert_eq!(
                sup_translate_diff(&u, tau).unwrap(),
                sup_translate_diff(&u, -tau).unwrap()
            );
        }
    }

    #[test]
    fn oversized_shift_is_rejected() {
        let z = SampledFunction::triangle(5.0).unwrap();
        assert!(matches!(sup_translate_diff(&z, 6.0), Err(Error::Usage(_))));
    }

    #[test]
    fn periodic_scan_finds_every_period() {
        let f = periodic(2.0, 40.0, 0.25);
        let r = scan_almost_periods(&f, 1e-9, (0.0, 20.0), 0.5).unwrap();
        let expect: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64).collect();
        assert_eq!(r.taus_found, expect);
        assert_eq!(r.max_gap, 2.0);
    }

    #[test]
    fn drift_scan_finds_multiples_of_18() {
        let b = SampledFunction::drift_b(729.0).unwrap();
        let r = scan_almost_periods(&b, drift_epsilon(2), (18.0, 360.0), 18.0).unwrap();
        assert_eq!(r.taus_found.len(), 20);
        assert!(r.worst_accepted <= drift_epsilon(2));
    }

    #[test]
    fn u2_scan_finds_nothing() {
        let tol = 1e-10;
        let u = SampledFunction::u2(500.0, 0.125, tol).unwrap();
        let eps = non_ap_witness_u2(&[1.0], tol).unwrap().metrics["epsilon0"] - 10.0 * tol;
        let r = scan_almost_periods(&u, eps, (1.0, 500.0), 0.25).unwrap();
        assert!(r.taus_found.is_empty(), "{:?}", r.taus_found);
        assert_eq!(r.max_gap, 499.0);
    }

    #[test]
    fn witness_margins_are_nondecreasing() {
        let taus = [1.0, 2.0, 3.0, 9.0, 27.0, 81.0];
        let r = non_ap_witness_u2(&taus, 1e-10).unwrap();
        assert!(r.passed());
        assert_eq!(r.points_checked, taus.len());
        // τ = 1 is the equality point
        assert!(r.worst_margin >= 0.0 && r.worst_margin <= 1e-9);
    }

    #[test]
    fn bochner_constant_function() {
        let s: Sampler = Arc::new(|_| 4.0);
        let f = SampledFunction::new(s, (-10.0, 10.0), 0.5).unwrap();
        let d = bochner_probe(&f, &[0.0, 1.0, 5.0], (-1.0, 1.0), 0.1).unwrap();
        assert!(d.full.iter().flatten().all(|&v| v == 0.0));
        assert!(!d.failure_mode);
    }

    #[test]
    fn bochner_drift_translates_stay_close() {
        let b = SampledFunction::drift_b(300.0).unwrap();
        let shifts: Vec<f64> = (0..5).map(|k| 18.0 * k as f64).collect();
        let d = bochner_probe(&b, &shifts, (-1.0, 1.0), 0.1).unwrap();
        let bound = drift_epsilon(2);
        assert!(d.full.iter().flatten().all(|&v| v <= bound));
        assert!(!d.failure_mode);
    }

    #[test]
    fn bochner_u2_failure_mode() {
        let tol = 1e-10;
        // increments u₂(3ᵏ⁺¹) − u₂(3ᵏ) only start shrinking at k = 4
        let u = SampledFunction::u2_with_reach(6600.0, 13200.0, 0.5, tol).unwrap();
        let shifts: Vec<f64> = (4..=8).map(|k| -(3f64.powi(k))).collect();
        let eps0 = non_ap_witness_u2(&[1.0], tol).unwrap().metrics["epsilon0"];
        let d = bochner_probe(&u, &shifts, (-1.0, 1.0), eps0 - tol).unwrap();
        assert!(d.compact_converging, "{:?}", d.compact);
        assert!(d.min_full_separation >= eps0 - tol);
        assert!(d.failure_mode);
    }
}
