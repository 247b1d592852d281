//! Finite differences for periodic operators `L = a∆ + b·∇ + c` on a 1D or
//! 2D torus, and the periodic principal eigenpair of `−L`.
//!
//! Coefficients are truncated Fourier series so that experiments are fully
//! described by a handful of numbers. The eigenpair is obtained by inverse
//! power iteration on a shifted M-matrix, whose inverse is entrywise
//! positive; the iterates therefore stay positive and converge to the
//! Perron vector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sup_norm, CsrMatrix, Factorization};
use crate::par;
use crate::report::InequalityReport;

/// Periods `(l₁, …)` of the space variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodCell {
    pub periods: Vec<f64>,
}

impl PeriodCell {
    pub fn new(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() || periods.len() > 2 {
            return Err(Error::usage("only 1 or 2 space dimensions are supported"));
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::usage(format!("periods must be positive, got {periods:?}")));
        }
        Ok(PeriodCell { periods })
    }

    pub fn unit(dim: usize) -> Self {
        PeriodCell {
            periods: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }
}

/// `cos·cos θ + sin·sin θ` with `θ = 2π Σ k_d x_d / l_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub modes: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FourierSeries {
    pub constant: f64,
    pub terms: Vec<FourierTerm>,
}

impl FourierSeries {
    pub fn constant(c: f64) -> Self {
        FourierSeries {
            constant: c,
            terms: Vec::new(),
        }
    }

    /// `constant + cos·cos(2πkx/l) + sin·sin(2πkx/l)` in one dimension.
    pub fn mode_1d(constant: f64, k: i32, cos: f64, sin: f64) -> Self {
        FourierSeries {
            constant,
            terms: vec![FourierTerm {
                modes: vec![k],
                cos,
                sin,
            }],
        }
    }

    pub fn with_term(mut self, modes: Vec<i32>, cos: f64, sin: f64) -> Self {
        self.terms.push(FourierTerm { modes, cos, sin });
        self
    }

    fn phase(modes: &[i32], x: &[f64], periods: &[f64]) -> f64 {
        modes
            .iter()
            .zip(x)
            .zip(periods)
            .map(|((k, xd), l)| 2.0 * PI * *k as f64 * xd / l)
            .sum()
    }

    pub fn eval(&self, x: &[f64], periods: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, t| {
            let th = Self::phase(&t.modes, x, periods);
            acc + t.cos * th.cos() + t.sin * th.sin()
        })
    }

    /// The series of `x ↦ f(x + offset)`.
    pub fn translated(&self, offset: &[f64], periods: &[f64]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let d = Self::phase(&t.modes, offset, periods);
                let (s, c) = d.sin_cos();
                FourierTerm {
                    modes: t.modes.clone(),
                    cos: t.cos * c + t.sin * s,
                    sin: t.sin * c - t.cos * s,
                }
            })
            .collect();
        FourierSeries {
            constant: self.constant,
            terms,
        }
    }

    pub fn max_mode(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.modes.iter())
            .map(|k| k.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    fn check_dim(&self, dim: usize, name: &str) -> Result<()> {
        match self.terms.iter().find(|t| t.modes.len() != dim) {
            Some(t) => Err(Error::usage(format!(
                "{name}: mode {:?} has the wrong number of components for dimension {dim}",
                t.modes
            ))),
            None => Ok(()),
        }
    }
}

/// Coefficients of `L u = a ∆u + Σ b_d ∂_d u + c u`, periodic on the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub cell: PeriodCell,
    pub a: FourierSeries,
    pub b: Vec<FourierSeries>,
    pub c: FourierSeries,
}

impl CoefficientField {
    pub fn new(cell: PeriodCell, a: FourierSeries, b: Vec<FourierSeries>, c: FourierSeries) -> Result<Self> {
        let dim = cell.dim();
        if b.len() != dim {
            return Err(Error::usage(format!("need {dim} drift components, got {}", b.len())));
        }
        a.check_dim(dim, "a")?;
        c.check_dim(dim, "c")?;
        for (d, bd) in b.iter().enumerate() {
            bd.check_dim(dim, &format!("b{}", d + 1))?;
        }
        Ok(CoefficientField { cell, a, b, c })
    }

    /// `a ≡ 1`, `b ≡ 0`, `c ≡ 0` on the unit cell.
    pub fn laplacian(dim: usize) -> Self {
        CoefficientField {
            cell: PeriodCell::unit(dim),
            a: FourierSeries::constant(1.0),
            b: vec![FourierSeries::default(); dim],
            c: FourierSeries::default(),
        }
    }

    pub fn with_c(mut self, c: FourierSeries) -> Self {
        self.c = c;
        self
    }

    pub fn with_drift(mut self, b: Vec<FourierSeries>) -> Self {
        self.b = b;
        self
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn max_mode(&self) -> u32 {
        self.b
            .iter()
            .chain([&self.a, &self.c])
            .map(FourierSeries::max_mode)
            .max()
            .unwrap_or(0)
    }

    pub fn a_at(&self, x: &[f64]) -> f64 {
        self.a.eval(x, &self.cell.periods)
    }

    pub fn b_at(&self, d: usize, x: &[f64]) -> f64 {
        self.b[d].eval(x, &self.cell.periods)
    }

    pub fn c_at(&self, x: &[f64]) -> f64 {
        self.c.eval(x, &self.cell.periods)
    }

    /// All coefficients of `x ↦ L(x + offset)`.
    pub fn translated(&self, offset: &[f64]) -> Self {
        let p = &self.cell.periods;
        CoefficientField {
            cell: self.cell.clone(),
            a: self.a.translated(offset, p),
            b: self.b.iter().map(|s| s.translated(offset, p)).collect(),
            c: self.c.translated(offset, p),
        }
    }

    /// `c + γ`.
    pub fn shifted(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        out.c.constant += gamma;
        out
    }

    /// Sampled ellipticity bounds `(min a, max a)` over the grid nodes.
    pub fn ellipticity(&self, grid: &TorusGrid) -> (f64, f64) {
        (0..grid.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let a = self.a_at(&grid.coords(i));
            (lo.min(a), hi.max(a))
        })
    }
}

/// Uniform tensor grid on the torus; node `(i, j)` has index `i + n₁ j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub periods: Vec<f64>,
    pub n: Vec<usize>,
}

impl TorusGrid {
    pub fn new(cell: &PeriodCell, n: Vec<usize>) -> Result<Self> {
        if n.len() != cell.dim() {
            return Err(Error::usage(format!(
                "grid has {} sizes for a {}-dimensional cell",
                n.len(),
                cell.dim()
            )));
        }
        if n.iter().any(|&k| k < 4) {
            return Err(Error::usage(format!("need at least 4 points per dimension, got {n:?}")));
        }
        Ok(TorusGrid {
            periods: cell.periods.clone(),
            n,
        })
    }

    /// `n` points in every dimension of `cell`.
    pub fn uniform(cell: &PeriodCell, n: usize) -> Result<Self> {
        Self::new(cell, vec![n; cell.dim()])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.periods[d] / self.n[d] as f64
    }

    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        let mut rest = i;
        self.n
            .iter()
            .map(|&k| {
                let m = rest % k;
                rest /= k;
                m
            })
            .collect()
    }

    pub fn index(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.n).rev().fold(0, |acc, (mi, ni)| acc * ni + mi)
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .enumerate()
            .map(|(d, &m)| m as f64 * self.spacing(d))
            .collect()
    }

    /// Index of the neighbour one step along dimension `d` (`forward` or not),
    /// wrapping around.
    pub fn neighbour(&self, i: usize, d: usize, forward: bool) -> usize {
        let mut m = self.multi_index(i);
        let k = self.n[d];
        m[d] = if forward { (m[d] + 1) % k } else { (m[d] + k - 1) % k };
        self.index(&m)
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        par::map_range(self.len(), |i| f(&self.coords(i)))
    }
}

/// Nodal values on a torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::usage(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("grid function values must be finite"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn sample(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        GridFunction {
            values: grid.sample(f),
            grid: grid.clone(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DriftScheme {
    /// First order, one-sided in the direction the drift comes from.
    #[default]
    Upwind,
    /// Second order, central differences.
    Centered,
}

/// Weights `(backward, centre, forward)` of the 3-point stencil for
/// `a ∂² + b ∂` at spacing `h`.
pub fn stencil_1d(a: f64, b: f64, h: f64, scheme: DriftScheme) -> (f64, f64, f64) {
    let diff = a / (h * h);
    match scheme {
        DriftScheme::Upwind => {
            let (bp, bm) = (b.max(0.0), (-b).max(0.0));
            (diff + bm / h, -2.0 * diff - (bp + bm) / h, diff + bp / h)
        }
        DriftScheme::Centered => (diff - b / (2.0 * h), -2.0 * diff, diff + b / (2.0 * h)),
    }
}

/// Finite-difference matrix `A ≈ L` on a torus grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: TorusGrid,
    pub scheme: DriftScheme,
    pub matrix: CsrMatrix,
    /// Largest cell Péclet number `|b| h / a` over nodes and dimensions.
    pub max_peclet: f64,
    /// Centered drift with `|b| h / a ≥ 2` somewhere: off-diagonal entries
    /// may be negative and positivity is not guaranteed.
    pub peclet_warning: bool,
    /// Sampled `c` at the nodes.
    pub c: Vec<f64>,
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.matrix.n
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.n == 0
    }

    /// Smallest off-diagonal entry (0 for a diagonal matrix).
    pub fn min_off_diagonal(&self) -> f64 {
        (0..self.matrix.n)
            .flat_map(|i| self.matrix.row(i).filter(move |e| e.0 != i).map(|e| e.1))
            .fold(0.0, f64::min)
    }
}

/// Assembles `A ≈ L` row by row.
pub fn discretize(coeffs: &CoefficientField, grid: &TorusGrid, scheme: DriftScheme) -> Result<DiscreteOperator> {
    if coeffs.dim() != grid.dim() || coeffs.cell.periods != grid.periods {
        return Err(Error::usage("coefficient cell and grid do not match"));
    }
    let need = 4 * coeffs.max_mode() as usize;
    if let Some(&n) = grid.n.iter().find(|&&n| n < need) {
        return Err(Error::usage(format!(
            "grid with {n} points does not resolve Fourier mode {} (need ≥ {need})",
            coeffs.max_mode()
        )));
    }
    let (a_lo, _) = coeffs.ellipticity(grid);
    if !(a_lo > 0.0) {
        return Err(Error::usage(format!("diffusion must be positive, min a = {a_lo}")));
    }
    let dim = grid.dim();
    let rows = par::map_range(grid.len(), |i| {
        let x = grid.coords(i);
        let a = coeffs.a_at(&x);
        let c = coeffs.c_at(&x);
        let mut row = vec![(i, c)];
        let mut peclet = 0.0f64;
        for d in 0..dim {
            let h = grid.spacing(d);
            let b = coeffs.b_at(d, &x);
            peclet = peclet.max(b.abs() * h / a);
            let (w, ctr, e) = stencil_1d(a, b, h, scheme);
            row.push((grid.neighbour(i, d, false), w));
            row.push((i, ctr));
            row.push((grid.neighbour(i, d, true), e));
        }
        (row, peclet, c)
    });
    let max_peclet = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    let c = rows.iter().map(|r| r.2).collect();
    let matrix = CsrMatrix::from_rows(rows.into_iter().map(|r| r.0).collect());
    Ok(DiscreteOperator {
        grid: grid.clone(),
        scheme,
        matrix,
        max_peclet,
        peclet_warning: scheme == DriftScheme::Centered && max_peclet >= 2.0,
        c,
    })
}

/// Periodic principal eigenpair of `−A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda_p: f64,
    /// Positive, `max = 1`.
    pub phi_p: Vec<f64>,
    /// `‖(−A)φ − λφ‖_∞`.
    pub residual: f64,
    pub iterations: usize,
    /// Collatz–Wielandt bounds `min (−Aφ)ᵢ/φᵢ ≤ λ_p ≤ max (−Aφ)ᵢ/φᵢ`.
    pub bracket: (f64, f64),
    pub shift: f64,
}

impl EigenPair {
    pub fn min_phi(&self) -> f64 {
        self.phi_p.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Inverse power iteration on `sI − A` with `s = max c + 1`.
///
/// `sI − A` has nonpositive off-diagonals and is strictly diagonally
/// dominant by at least 1 in every row, hence a nonsingular M-matrix with a
/// positive inverse. Its dominant eigenvalue `1/(s + λ_p)` belongs to the
/// positive eigenvector.
pub fn principal_eigenpair(op: &DiscreteOperator, tol: f64, max_iter: usize) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::usage("tol must be positive"));
    }
    let n = op.len();
    let shift = op.c.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let shifted = op.matrix.scaled_plus_identity(-1.0, shift);
    let lu = Factorization::new(&shifted)?;
    let minus_a = |x: &[f64]| op.matrix.matvec(x).into_iter().map(|v| -v).collect::<Vec<f64>>();

    let mut x = vec![1.0; n];
    let mut lambda_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        lu.solve_in_place(&mut x);
        let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::numerical(
                "principal_eigenpair",
                "iterate lost positivity",
                residual,
            ));
        }
        x.iter_mut().for_each(|v| *v /= top);
        let ax = minus_a(&x);
        let lambda = dot(&x, &ax) / dot(&x, &x);
        residual = ax
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (y, v)| m.max((y - lambda * v).abs()));
        if (lambda - lambda_prev).abs() <= tol && residual <= 10.0 * tol {
            if x.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::numerical(
                    "principal_eigenpair",
                    "eigenvector not positive",
                    residual,
                ));
            }
            let bracket = ax
                .iter()
                .zip(&x)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (y, v)| {
                    (lo.min(y / v), hi.max(y / v))
                });
            return Ok(EigenPair {
                lambda_p: lambda,
                phi_p: x,
                residual,
                iterations: it,
                bracket,
                shift,
            });
        }
        lambda_prev = lambda;
    }
    Err(Error::numerical(
        "principal_eigenpair",
        format!("no convergence in {max_iter} iterations"),
        residual,
    ))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub const DEFAULT_MAX_ITER: usize = 10_000;

/// `λ_p(−(L+γ)) = λ_p(−L) − γ`, and `λ_p > 0` whenever the sampled `c` is
/// `≤ 0` and not identically zero.
pub fn shift_invariance_check(
    coeffs: &CoefficientField,
    gamma: f64,
    grid: &TorusGrid,
    scheme: DriftScheme,
    tol: f64,
) -> Result<InequalityReport> {
    let base = principal_eigenpair(&discretize(coeffs, grid, scheme)?, tol, DEFAULT_MAX_ITER)?;
    let moved = principal_eigenpair(
        &discretize(&coeffs.shifted(gamma), grid, scheme)?,
        tol,
        DEFAULT_MAX_ITER,
    )?;
    let mut report = InequalityReport::new("shift-invariance");
    let expected = base.lambda_p - gamma;
    report.record(gamma, moved.lambda_p, expected, tol - (moved.lambda_p - expected).abs());
    report.metric("lambda_p", base.lambda_p);
    report.metric("lambda_p_shifted", moved.lambda_p);
    report.metric("gamma", gamma);
    for (eig, field) in [(&base, coeffs.clone()), (&moved, coeffs.shifted(gamma))] {
        let c = grid.sample(|x| field.c_at(x));
        if c.iter().all(|&v| v <= 0.0) && c.iter().any(|&v| v < 0.0) {
            // λ_p > 0; the Collatz–Wielandt lower bound makes it rigorous
            report.record(field.c.constant, eig.bracket.0, 0.0, eig.bracket.0);
        }
    }
    Ok(report.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub n: usize,
    pub lambda_p: f64,
    pub iterations: usize,
    /// `log(|λ_{k−1} − λ_{k−2}| / |λ_k − λ_{k−1}|) / log(n_k / n_{k−1})`,
    /// from the third grid on; `None` while differences are at solver level.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub scheme: DriftScheme,
    pub rows: Vec<RefinementRow>,
}

impl RefinementTable {
    pub fn min_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.order).reduce(f64::min)
    }

    /// Spread of `λ_p` over all sizes.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.lambda_p), hi.max(r.lambda_p))
            });
        hi - lo
    }
}

/// `λ_p` on successively finer grids with Richardson order estimates.
pub fn refinement_study(
    coeffs: &CoefficientField,
    sizes: &[usize],
    scheme: DriftScheme,
    tol: f64,
) -> Result<RefinementTable> {
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("grid sizes must be increasing, at least two"));
    }
    let eigs = par::try_map_slice(sizes, |&n| {
        let grid = TorusGrid::uniform(&coeffs.cell, n)?;
        principal_eigenpair(&discretize(coeffs, &grid, scheme)?, tol, DEFAULT_MAX_ITER)
    })?;
    let floor = 100.0 * tol;
    let rows = (0..sizes.len())
        .map(|k| {
            let order = (k >= 2).then(|| {
                let d1 = (eigs[k - 1].lambda_p - eigs[k - 2].lambda_p).abs();
                let d2 = (eigs[k].lambda_p - eigs[k - 1].lambda_p).abs();
                (d1 > floor && d2 > floor).then(|| (d1 / d2).ln() / (sizes[k] as f64 / sizes[k - 1] as f64).ln())
            });
            RefinementRow {
                n: sizes[k],
                lambda_p: eigs[k].lambda_p,
                iterations: eigs[k].iterations,
                order: order.flatten(),
            }
        })
        .collect();
    Ok(RefinementTable { scheme, rows })
}

/// `c(x) = −scale·(1 + cos 2πx)` in one dimension on the unit cell.
pub fn cosine_well(scale: f64) -> FourierSeries {
    FourierSeries::mode_1d(-scale, 1, -scale, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid(n: usize) -> TorusGrid {
        TorusGrid::uniform(&PeriodCell::unit(1), n).unwrap()
    }

    #[test]
    fn laplacian_stencil() {
        let op = discretize(&CoefficientField::laplacian(1), &unit_grid(8), DriftScheme::Upwind).unwrap();
        let h2 = 64.0;
        for i in 0..8 {
            assert_eq!(op.matrix.get(i, i), -2.0 * h2);
            assert_eq!(op.matrix.get(i, (i + 1) % 8), h2);
            assert_eq!(op.matrix.get(i, (i + 7) % 8), h2);
        }
        assert_eq!(op.matrix.row_sums(), vec![0.0; 8]);
    }

    #[test]
    fn upwind_is_one_sided() {
        let grid = unit_grid(8);
        for b0 in [3.0, -3.0] {
            let f = CoefficientField::laplacian(1).with_drift(vec![FourierSeries::constant(b0)]);
            let op = discretize(&f, &grid, DriftScheme::Upwind).unwrap();
            let (fwd, back) = (op.matrix.get(0, 1), op.matrix.get(0, 7));
            if b0 > 0.0 {
                assert_eq!((fwd, back), (64.0 + 24.0, 64.0));
            } else {
                assert_eq!((fwd, back), (64.0, 64.0 + 24.0));
            }
            assert!(op.min_off_diagonal() >= 0.0);
        }
    }

    #[test]
    fn diagonal_carries_c() {
        let grid = unit_grid(16);
        let c = FourierSeries::mode_1d(0.0, 1, 0.7, 0.0);
        let base = discretize(&CoefficientField::laplacian(1), &grid, DriftScheme::Upwind).unwrap();
        let op = discretize(
            &CoefficientField::laplacian(1).with_c(c.clone()),
            &grid,
            DriftScheme::Upwind,
        )
        .unwrap();
        for i in 0..16 {
            let x = grid.coords(i);
            let d = op.matrix.get(i, i) - base.matrix.get(i, i);
            assert!((d - c.eval(&x, &[1.0])).abs() <= 1e-13 * 512.0);
        }
    }

    #[test]
    fn peclet_warning_only_for_centered() {
        let f = CoefficientField::laplacian(1).with_drift(vec![FourierSeries::constant(40.0)]);
        let grid = unit_grid(16);
        let up = discretize(&f, &grid, DriftScheme::Upwind).unwrap();
        let ce = discretize(&f, &grid, DriftScheme::Centered).unwrap();
        assert!(!up.peclet_warning);
        assert!(ce.peclet_warning);
        assert!(ce.min_off_diagonal() < 0.0);
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let f = CoefficientField::laplacian(1).with_c(FourierSeries::mode_1d(0.0, 3, 1.0, 0.0));
        assert!(matches!(
            discretize(&f, &unit_grid(8), DriftScheme::Upwind),
            Err(Error::Usage(_))
        ));
        assert!(discretize(&f, &unit_grid(12), DriftScheme::Upwind).is_ok());
    }

    #[test]
    fn laplacian_eigenpair() {
        let op = discretize(&CoefficientField::laplacian(1), &unit_grid(64), DriftScheme::Upwind).unwrap();
        let e = principal_eigenpair(&op, 1e-12, 100).unwrap();
        assert!(e.lambda_p.abs() <= 1e-10);
        assert!(e.phi_p.iter().all(|v| (v - 1.0).abs() <= 1e-9));
    }

    #[test]
    fn constant_c_shifts_eigenvalue() {
        let f = CoefficientField::laplacian(1).with_c(FourierSeries::constant(-2.5));
        let op = discretize(&f, &unit_grid(32), DriftScheme::Upwind).unwrap();
        let e = principal_eigenpair(&op, 1e-12, 100).unwrap();
        assert!((e.lambda_p - 2.5).abs() <= 1e-10, "{}", e.lambda_p);
    }

    fn drift_field() -> CoefficientField {
        CoefficientField::laplacian(1)
            .with_drift(vec![FourierSeries::mode_1d(0.3, 1, 0.0, 0.8)])
            .with_c(cosine_well(0.5))
    }

    /// Dense oracle: real eigenvalue of `−A` with smallest real part from
    /// the Schur form, with its null vector from the SVD.
    fn dense_principal(op: &DiscreteOperator) -> (f64, Vec<f64>) {
        let n = op.len();
        let d = op.matrix.to_dense();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| -d[i][j]);
        let eig = m.clone().complex_eigenvalues();
        let lambda = eig
            .iter()
            .filter(|z| z.im.abs() < 1e-8)
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        let shifted = m - nalgebra::DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.unwrap();
        let (k, _) =
            svd.singular_values.iter().enumerate().fold(
                (0, f64::INFINITY),
                |best, (i, &s)| {
                    if s < best.1 {
                        (i, s)
                    } else {
                        best
                    }
                },
            );
        let v: Vec<f64> = vt.row(k).iter().copied().collect();
        let sign = v[0].signum();
        let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (lambda, v.iter().map(|x| sign * x / top).collect())
    }

    #[test]
    fn dense_oracle_nonsymmetric() {
        let op = discretize(&drift_field(), &unit_grid(64), DriftScheme::Upwind).unwrap();
        let e = principal_eigenpair(&op, 1e-12, 1000).unwrap();
        let (lambda, v) = dense_principal(&op);
        assert!((e.lambda_p - lambda).abs() <= 1e-10, "{} vs {lambda}", e.lambda_p);
        assert!(v.iter().all(|&x| x > 0.0));
        assert!(crate::linalg::sup_dist(&v, &e.phi_p) <= 1e-8);
        assert!(e.bracket.0 <= e.lambda_p + 1e-9 && e.lambda_p <= e.bracket.1 + 1e-9);
    }

    #[test]
    fn shift_identity() {
        let grid = unit_grid(64);
        for gamma in [0.0, -1.0, 0.75, 3.0] {
            let r = shift_invariance_check(&drift_field(), gamma, &grid, DriftScheme::Upwind, 1e-12).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let r =
            shift_invariance_check(&CoefficientField::laplacian(1), -1.0, &grid, DriftScheme::Upwind, 1e-12).unwrap();
        assert!((r.metrics["lambda_p_shifted"] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn nonpositive_c_gives_positive_eigenvalue() {
        let f = CoefficientField::laplacian(1).with_c(cosine_well(0.5));
        let r = shift_invariance_check(&f, 0.0, &unit_grid(32), DriftScheme::Upwind, 1e-11).unwrap();
        assert!(r.passed());
        assert!(r.metrics["lambda_p"] > 0.0);
        assert_eq!(r.points_checked, 3);
    }

    #[test]
    fn translation_by_grid_multiple_is_exact() {
        let grid = unit_grid(64);
        let f = drift_field();
        let base = principal_eigenpair(&discretize(&f, &grid, DriftScheme::Upwind).unwrap(), 1e-12, 1000).unwrap();
        for k in [1, 5, 17] {
            let g = f.translated(&[k as f64 / 64.0]);
            let e = principal_eigenpair(&discretize(&g, &grid, DriftScheme::Upwind).unwrap(), 1e-12, 1000).unwrap();
            assert!((e.lambda_p - base.lambda_p).abs() <= 1e-10);
        }
    }

    #[test]
    fn refinement_orders() {
        let sizes = [32, 64, 128, 256];
        // at n = 256 the residual floor ε‖A‖ is about 4e−11
        let centered = refinement_study(&drift_field(), &sizes, DriftScheme::Centered, 1e-10).unwrap();
        assert!(centered.min_order().unwrap() >= 1.9, "{centered:?}");
        let upwind = refinement_study(&drift_field(), &sizes, DriftScheme::Upwind, 1e-10).unwrap();
        assert!(upwind.min_order().unwrap() >= 0.9, "{upwind:?}");
        let constant = CoefficientField::laplacian(1)
            .with_drift(vec![FourierSeries::constant(0.4)])
            .with_c(FourierSeries::constant(-1.5));
        let flat = refinement_study(&constant, &sizes, DriftScheme::Upwind, 1e-10).unwrap();
        assert!(flat.spread() <= 1e-10);
    }

    #[test]
    fn two_dimensional_torus() {
        let cell = PeriodCell::new(vec![1.0, 2.0]).unwrap();
        let f = CoefficientField::new(
            cell.clone(),
            FourierSeries::constant(1.0).with_term(vec![1, 0], 0.2, 0.0),
            vec![
                FourierSeries::constant(0.0).with_term(vec![0, 1], 0.5, 0.0),
                FourierSeries::constant(0.3),
            ],
            FourierSeries::constant(-0.5).with_term(vec![1, 1], 0.5, 0.0),
        )
        .unwrap();
        let grid = TorusGrid::new(&cell, vec![12, 16]).unwrap();
        let op = discretize(&f, &grid, DriftScheme::Upwind).unwrap();
        assert!(op.min_off_diagonal() >= 0.0);
        let e = principal_eigenpair(&op, 1e-11, 1000).unwrap();
        assert!(e.phi_p.iter().all(|&v| v > 0.0));
        assert!(e.lambda_p > 0.0);
        let (lambda, _) = dense_principal(&op);
        assert!((e.lambda_p - lambda).abs() <= 1e-9);
    }

    #[test]
    fn grid_indexing_round_trips() {
        let grid = TorusGrid::new(&PeriodCell::new(vec![1.0, 3.0]).unwrap(), vec![5, 7]).unwrap();
        for i in 0..grid.len() {
            assert_eq!(grid.index(&grid.multi_index(i)), i);
            for d in 0..2 {
                assert_eq!(grid.neighbour(grid.neighbour(i, d, true), d, false), i);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn eigenvector_positive_and_bracketed(
            b0 in -3.0f64..3.0, b1 in -3.0f64..3.0, c0 in -2.0f64..1.0, c1 in -1.0f64..1.0, a1 in -0.5f64..0.5,
        ) {
            let f = CoefficientField::new(
                PeriodCell::unit(1),
                FourierSeries::mode_1d(1.0, 1, a1, 0.0),
                vec![FourierSeries::mode_1d(b0, 1, 0.0, b1)],
                FourierSeries::mode_1d(c0, 2, c1, 0.0),
            ).unwrap();
            let op = discretize(&f, &unit_grid(32), DriftScheme::Upwind).unwrap();
            prop_assert!(op.min_off_diagonal() >= 0.0);
            let e = principal_eigenpair(&op, 1e-11, 5000).unwrap();
            prop_assert!(e.phi_p.iter().all(|&v| v > 0.0));
            prop_assert!(e.residual <= 1e-10);
            prop_assert!(e.bracket.0 <= e.lambda_p + 1e-9 && e.lambda_p <= e.bracket.1 + 1e-9);
        }

        #[test]
        fn upwind_rows_sum_to_c_for_constant_a(a in 0.1f64..4.0, b0 in -5.0f64..5.0, b1 in -5.0f64..5.0, c1 in -2.0f64..2.0) {
            let f = CoefficientField::new(
                PeriodCell::unit(1),
                FourierSeries::constant(a),
                vec![FourierSeries::mode_1d(b0, 1, b1, 0.0)],
                FourierSeries::mode_1d(0.0, 1, 0.0, c1),
            ).unwrap();
            let op = discretize(&f, &unit_grid(16), DriftScheme::Upwind).unwrap();
            for (s, c) in op.matrix.row_sums().iter().zip(&op.c) {
                prop_assert!((s - c).abs() <= 1e-9 * (1.0 + a * 256.0));
            }
        }

        #[test]
        fn translated_series_is_shifted_function(c in -2.0f64..2.0, s in -2.0f64..2.0, k in -3i32..4, off in -1.0f64..1.0, x in -2.0f64..2.0) {
            let f = FourierSeries::mode_1d(0.5, k, c, s);
            let g = f.translated(&[off], &[2.0]);
            prop_assert!((g.eval(&[x], &[2.0]) - f.eval(&[x + off], &[2.0])).abs() <= 1e-12);
        }
    }
}
