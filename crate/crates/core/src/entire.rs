//! Time stepping of `∂ₜu = Au + f` for a discretized periodic operator `A`,
//! and the experiments built on it: relaxation to stationary or
//! time-periodic attractors, Dirichlet truncations on growing intervals,
//! decay rates, mean growth and almost periodic forcing.
//!
//! Entire solutions are reached forward in time: when `λ_p(−L) > 0` the
//! bounded entire solution is the unique attractor, so any bounded start
//! converges to it.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::almostperiod::{scan_almost_periods, AlmostPeriodReport, SampledFunction, Sampler};
use crate::error::{Error, Result};
use crate::linalg::{sup_dist, sup_norm, CsrMatrix, Factorization};
use crate::par;
use crate::report::InequalityReport;
use crate::spectra::{
    discretize, principal_eigenpair, stencil_1d, CoefficientField, DiscreteOperator, DriftScheme, FourierSeries,
    TorusGrid, DEFAULT_MAX_ITER,
};

pub use crate::spectra::GridFunction;

/// `amplitude · sin(omega·t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

/// `f(x, t) = offset + g(x)·h(t)`, with `h` a finite sum of sinusoids, or
/// `h ≡ 1` when there are none.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForcingField {
    pub space: FourierSeries,
    pub time: Vec<Sinusoid>,
    pub offset: f64,
}

impl ForcingField {
    pub fn zero() -> Self {
        ForcingField::default()
    }

    pub fn constant(c: f64) -> Self {
        ForcingField {
            offset: c,
            ..ForcingField::default()
        }
    }

    /// Time-independent `g(x)`.
    pub fn stationary(space: FourierSeries) -> Self {
        ForcingField {
            space,
            ..ForcingField::default()
        }
    }

    pub fn with_sinusoid(mut self, amplitude: f64, omega: f64, phase: f64) -> Self {
        self.time.push(Sinusoid {
            amplitude,
            omega,
            phase,
        });
        self
    }

    pub fn is_time_independent(&self) -> bool {
        self.time.is_empty() || self.space.constant == 0.0 && self.space.terms.is_empty()
    }

    pub fn time_part(&self, t: f64) -> f64 {
        if self.time.is_empty() {
            1.0
        } else {
            self.time
                .iter()
                .map(|s| s.amplitude * (s.omega * t + s.phase).sin())
                .sum()
        }
    }

    pub fn eval(&self, x: &[f64], t: f64, periods: &[f64]) -> f64 {
        self.offset + self.space.eval(x, periods) * self.time_part(t)
    }

    /// An upper bound on `‖f‖_∞` over space and time.
    pub fn sup_bound(&self) -> f64 {
        let g = self.space.constant.abs() + self.space.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum::<f64>();
        let h = if self.time.is_empty() {
            1.0
        } else {
            self.time.iter().map(|s| s.amplitude.abs()).sum()
        };
        self.offset.abs() + g * h
    }

    /// Whether every sinusoid completes a whole number of cycles in `period`.
    pub fn has_period(&self, period: f64) -> bool {
        self.time.iter().all(|s| {
            let cycles = s.omega * period / (2.0 * PI);
            (cycles - cycles.round()).abs() <= 1e-9 * cycles.abs().max(1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimeScheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState {
    pub t: f64,
    pub u: Vec<f64>,
    pub dt: f64,
    pub scheme: TimeScheme,
}

impl EvolutionState {
    pub fn new(t: f64, u: Vec<f64>, dt: f64, scheme: TimeScheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::usage(format!("dt must be positive, got {dt}")));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("initial data must be finite"));
        }
        Ok(EvolutionState { t, u, dt, scheme })
    }
}

/// One-step map of `∂ₜu = Au + f` with the implicit matrix factorized once.
///
/// Implicit Euler solves `(I − dt A)u⁺ = u + dt f(t⁺)`; Crank–Nicolson
/// solves `(I − dt/2 A)u⁺ = (I + dt/2 A)u + dt/2 (f(t) + f(t⁺))`.
#[derive(Debug, Clone)]
pub struct Integrator {
    matrix: CsrMatrix,
    lhs: Factorization,
    dt: f64,
    scheme: TimeScheme,
    /// `g` at the nodes.
    space: Vec<f64>,
    forcing: ForcingField,
}

impl Integrator {
    pub fn new(
        matrix: &CsrMatrix,
        nodes: &[Vec<f64>],
        periods: &[f64],
        forcing: &ForcingField,
        dt: f64,
        scheme: TimeScheme,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::usage(format!("dt must be positive, got {dt}")));
        }
        if nodes.len() != matrix.n {
            return Err(Error::usage("node list and matrix disagree in size"));
        }
        let theta = match scheme {
            TimeScheme::ImplicitEuler => 1.0,
            TimeScheme::CrankNicolson => 0.5,
        };
        let lhs = Factorization::new(&matrix.scaled_plus_identity(-theta * dt, 1.0))?;
        let space = nodes.iter().map(|x| forcing.space.eval(x, periods)).collect();
        Ok(Integrator {
            matrix: matrix.clone(),
            lhs,
            dt,
            scheme,
            space,
            forcing: forcing.clone(),
        })
    }

    pub fn for_operator(op: &DiscreteOperator, forcing: &ForcingField, dt: f64, scheme: TimeScheme) -> Result<Self> {
        let nodes: Vec<Vec<f64>> = (0..op.grid.len()).map(|i| op.grid.coords(i)).collect();
        Self::new(&op.matrix, &nodes, &op.grid.periods, forcing, dt, scheme)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn forcing_at(&self, t: f64) -> Vec<f64> {
        let h = self.forcing.time_part(t);
        self.space.iter().map(|g| self.forcing.offset + g * h).collect()
    }

    pub fn step(&self, state: &mut EvolutionState) -> Result<()> {
        if state.u.len() != self.matrix.n {
            return Err(Error::usage("state and operator live on different grids"));
        }
        if state.dt != self.dt || state.scheme != self.scheme {
            return Err(Error::usage("state step size or scheme differs from the integrator's"));
        }
        let t1 = state.t + self.dt;
        let mut rhs = match self.scheme {
            TimeScheme::ImplicitEuler => {
                let f = self.forcing_at(t1);
                state
                    .u
                    .iter()
                    .zip(&f)
                    .map(|(u, f)| u + self.dt * f)
                    .collect::<Vec<f64>>()
            }
            TimeScheme::CrankNicolson => {
                let (f0, f1) = (self.forcing_at(state.t), self.forcing_at(t1));
                let au = self.matrix.matvec(&state.u);
                (0..state.u.len())
                    .map(|i| state.u[i] + 0.5 * self.dt * (au[i] + f0[i] + f1[i]))
                    .collect()
            }
        };
        self.lhs.solve_in_place(&mut rhs);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("step", "non-finite values after solve", f64::INFINITY));
        }
        state.u = rhs;
        state.t = t1;
        Ok(())
    }

    pub fn advance(&self, state: &mut EvolutionState, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step(state)?;
        }
        Ok(())
    }
}

/// One step of `∂ₜu = Au + f`.
pub fn step(state: &EvolutionState, op: &DiscreteOperator, f: &ForcingField) -> Result<EvolutionState> {
    let mut next = state.clone();
    Integrator::for_operator(op, f, state.dt, state.scheme)?.step(&mut next)?;
    Ok(next)
}

/// Default time step: the smallest grid spacing.
pub fn default_dt(grid: &TorusGrid) -> f64 {
    (0..grid.dim()).map(|d| grid.spacing(d)).fold(f64::INFINITY, f64::min)
}

fn steps_for(duration: f64, dt: f64) -> Result<(usize, f64)> {
    if !(duration > 0.0 && dt > 0.0) {
        return Err(Error::usage("duration and dt must be positive"));
    }
    let k = (duration / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((k, duration / k as f64))
}

/// `λ_p` when it is needed to justify a relaxation, `None` when `c ≤ 0`
/// on the grid already does.
fn attracting(op: &DiscreteOperator) -> Result<Option<f64>> {
    if op.c.iter().all(|&c| c <= 0.0) {
        return Ok(None);
    }
    let e = principal_eigenpair(op, 1e-10, DEFAULT_MAX_ITER)?;
    if e.lambda_p > 0.0 {
        Ok(Some(e.lambda_p))
    } else {
        Err(Error::usage(format!(
            "relaxation needs c ≤ 0 or λ_p > 0, found λ_p = {}",
            e.lambda_p
        )))
    }
}

/// Stops a contracting iteration once the latest increment `d` is below
/// `tol` and the geometric remainder `d·q/(1−q)` is below `tol/2`.
fn contracted(d: f64, prev: f64, tol: f64) -> bool {
    if d > tol {
        return false;
    }
    if d == 0.0 {
        return true;
    }
    let q = d / prev;
    q < 1.0 && d * q / (1.0 - q) <= 0.5 * tol
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryResult {
    pub u: GridFunction,
    pub t: f64,
    pub steps: usize,
    /// `‖Au + f‖_∞`.
    pub residual: f64,
    /// `‖u(t) − u(t−1)‖_∞` at the stop.
    pub last_change: f64,
}

/// Evolves with a time-independent forcing until `‖u(t+1) − u(t)‖_∞ ≤ tol`.
pub fn relax_to_stationary(
    op: &DiscreteOperator,
    f: &ForcingField,
    u0: &GridFunction,
    tol: f64,
    t_max: f64,
    dt: f64,
    scheme: TimeScheme,
) -> Result<StationaryResult> {
    if !f.is_time_independent() {
        return Err(Error::usage("relax_to_stationary needs a time-independent forcing"));
    }
    if u0.grid != op.grid {
        return Err(Error::usage("initial data and operator live on different grids"));
    }
    attracting(op)?;
    let (per_unit, dt) = steps_for(1.0, dt)?;
    let integ = Integrator::for_operator(op, f, dt, scheme)?;
    let mut state = EvolutionState::new(0.0, u0.values.clone(), dt, scheme)?;
    let mut prev = f64::INFINITY;
    let mut steps = 0;
    while state.t < t_max {
        let before = state.u.clone();
        integ.advance(&mut state, per_unit)?;
        steps += per_unit;
        let d = sup_dist(&before, &state.u);
        if contracted(d, prev, tol) {
            let fv = integ.forcing_at(state.t);
            let au = op.matrix.matvec(&state.u);
            let residual = au.iter().zip(&fv).fold(0.0f64, |m, (a, f)| m.max((a + f).abs()));
            return Ok(StationaryResult {
                u: GridFunction::new(op.grid.clone(), state.u)?,
                t: state.t,
                steps,
                residual,
                last_change: d,
            });
        }
        prev = d;
    }
    Err(Error::numerical(
        "relax_to_stationary",
        format!("no stationary state by t = {t_max}"),
        prev,
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub period: f64,
    /// `t₀ + k·dt` for `k = 0..steps_per_period`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub cycles: usize,
    /// `‖u(t₀ + (k+1)T) − u(t₀ + kT)‖_∞` per cycle.
    pub cycle_changes: Vec<f64>,
    pub lambda_p: Option<f64>,
}

impl PeriodicOrbit {
    /// `‖u(t₀ + T) − u(t₀)‖_∞` over the returned period.
    pub fn closure_gap(&self) -> f64 {
        *self.cycle_changes.last().unwrap_or(&f64::INFINITY)
    }

    /// Successive ratios of cycle changes among those below `threshold`.
    pub fn contraction_ratios(&self, threshold: f64) -> Vec<f64> {
        self.cycle_changes
            .windows(2)
            .filter(|w| w[0] <= threshold && w[1] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Iterates the period map until `‖u(t+T) − u(t)‖_∞ ≤ tol`.
#[allow(clippy::too_many_arguments)]
pub fn relax_to_time_periodic(
    op: &DiscreteOperator,
    f: &ForcingField,
    period: f64,
    u0: &GridFunction,
    tol: f64,
    cycles_max: usize,
    dt: f64,
    scheme: TimeScheme,
) -> Result<PeriodicOrbit> {
    if !f.has_period(period) {
        return Err(Error::usage(format!("forcing is not {period}-periodic")));
    }
    if u0.grid != op.grid {
        return Err(Error::usage("initial data and operator live on different grids"));
    }
    let lambda_p = attracting(op)?;
    let (k, dt) = steps_for(period, dt)?;
    let integ = Integrator::for_operator(op, f, dt, scheme)?;
    let mut state = EvolutionState::new(0.0, u0.values.clone(), dt, scheme)?;
    let mut changes = Vec::new();
    let mut prev = f64::INFINITY;
    for cycle in 1..=cycles_max {
        let start = state.clone();
        let mut times = vec![start.t];
        let mut states = vec![start.u.clone()];
        for j in 1..=k {
            integ.step(&mut state)?;
            // pin the clock to the cycle grid so t₀ + kT is exact
            state.t = start.t + period * j as f64 / k as f64;
            if j < k {
                times.push(state.t);
                states.push(state.u.clone());
            }
        }
        let d = sup_dist(&start.u, &state.u);
        changes.push(d);
        if contracted(d, prev, tol) {
            return Ok(PeriodicOrbit {
                period,
                times,
                states,
                cycles: cycle,
                cycle_changes: changes,
                lambda_p,
            });
        }
        prev = d;
    }
    Err(Error::numerical(
        "relax_to_time_periodic",
        format!("no periodic orbit within {cycles_max} cycles"),
        prev,
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationRun {
    pub r: f64,
    pub nodes: usize,
    pub steps: usize,
    /// `u_r(·, 0)` on the core nodes.
    pub core_values: Vec<f64>,
    pub sup: f64,
    /// `min_{x,t} (v(x) − |u_r(x,t)|)` over all nodes and steps.
    pub domination_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationReport {
    pub core_half_width: f64,
    pub core_x: Vec<f64>,
    pub runs: Vec<TruncationRun>,
    /// `‖u_{r_{k+1}} − u_{r_k}‖_∞` on the core.
    pub differences: Vec<f64>,
    pub lambda_p: f64,
    /// Collatz–Wielandt lower bound used in the supersolution.
    pub lambda_lower: f64,
    pub min_phi: f64,
    pub forcing_bound: f64,
    /// `‖f‖/(λ min φ)`.
    pub supersolution_scale: f64,
}

impl TruncationReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }

    pub fn dominated(&self) -> bool {
        self.runs.iter().all(|r| r.domination_margin >= 0.0)
    }

    pub fn to_report(&self, final_tol: f64) -> InequalityReport {
        let mut rep = InequalityReport::new("dirichlet-truncation");
        for w in self.differences.windows(2).enumerate() {
            let (k, w) = w;
            rep.record(self.runs[k + 2].r, w[1], w[0], w[0] - w[1]);
        }
        if let Some(last) = self.differences.last() {
            rep.record(self.runs.last().unwrap().r, *last, final_tol, final_tol - last);
        }
        for run in &self.runs {
            rep.record(run.r, run.domination_margin, 0.0, run.domination_margin);
        }
        rep.metric("lambda_p", self.lambda_p);
        rep.metric("lambda_lower", self.lambda_lower);
        rep.metric("min_phi", self.min_phi);
        rep.metric("supersolution_scale", self.supersolution_scale);
        rep.finalize()
    }
}

/// Zero-data Dirichlet problems on `[−r, r] × (−r, 0]` for each `r`,
/// compared at `t = 0` on `[−core, core]`.
///
/// Every nodal value at every step is checked against the supersolution
/// `v = ‖f‖/(λ min φ)·φ` built from the periodic eigenpair at the same
/// spacing. Only 1D coefficients are supported; the spacing is
/// `period/points_per_period` and every `r` must be a whole number of
/// spacings.
pub fn dirichlet_truncation(
    coeffs: &CoefficientField,
    f: &ForcingField,
    r_list: &[f64],
    points_per_period: usize,
    core: Option<f64>,
    tol: f64,
) -> Result<TruncationReport> {
    if coeffs.dim() != 1 {
        return Err(Error::usage(
            "Dirichlet truncation is implemented in one space dimension",
        ));
    }
    if r_list.is_empty() || r_list.windows(2).any(|w| w[1] <= w[0]) || r_list[0] <= 0.0 {
        return Err(Error::usage("r_list must be positive and increasing"));
    }
    let grid = TorusGrid::uniform(&coeffs.cell, points_per_period)?;
    let h = grid.spacing(0);
    let per_h = |r: f64| {
        let m = (r / h).round();
        if (m * h - r).abs() > 1e-9 * r.max(1.0) {
            Err(Error::usage(format!("r = {r} is not a multiple of the spacing {h}")))
        } else {
            Ok(m as usize)
        }
    };
    let core = core.unwrap_or(r_list[0]);
    if core > r_list[0] {
        return Err(Error::usage("core must lie inside the smallest interval"));
    }
    let core_m = per_h(core)?;
    for &r in r_list {
        per_h(r)?;
    }
    let op = discretize(coeffs, &grid, DriftScheme::Upwind)?;
    let eig = principal_eigenpair(&op, tol, DEFAULT_MAX_ITER)?;
    let lambda_lower = eig.bracket.0;
    if !(lambda_lower > 0.0) {
        return Err(Error::usage(format!(
            "truncation needs λ_p > 0, found {}",
            eig.lambda_p
        )));
    }
    let min_phi = eig.min_phi();
    let forcing_bound = f.sup_bound();
    let scale = forcing_bound / (lambda_lower * min_phi);
    let n_per = points_per_period as i64;
    let v_at = |m: i64| scale * eig.phi_p[m.rem_euclid(n_per) as usize];

    let runs = par::try_map_slice(r_list, |&r| {
        let half = per_h(r)? as i64;
        // interior nodes x_j = j h, j = −half+1 ..= half−1
        let js: Vec<i64> = (-half + 1..half).collect();
        let nodes: Vec<Vec<f64>> = js.iter().map(|&j| vec![j as f64 * h]).collect();
        let rows = nodes
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let (w, c, e) = stencil_1d(coeffs.a_at(x), coeffs.b_at(0, x), h, DriftScheme::Upwind);
                let mut row = vec![(k, c + coeffs.c_at(x))];
                if k > 0 {
                    row.push((k - 1, w));
                }
                if k + 1 < nodes.len() {
                    row.push((k + 1, e));
                }
                row
            })
            .collect();
        let matrix = CsrMatrix::from_rows(rows);
        let steps = half as usize;
        let integ = Integrator::new(&matrix, &nodes, &coeffs.cell.periods, f, h, TimeScheme::ImplicitEuler)?;
        let v: Vec<f64> = js.iter().map(|&j| v_at(j)).collect();
        let mut state = EvolutionState::new(-r, vec![0.0; nodes.len()], h, TimeScheme::ImplicitEuler)?;
        let mut margin = f64::INFINITY;
        for s in 1..=steps {
            integ.step(&mut state)?;
            state.t = -r + s as f64 * h;
            margin = state.u.iter().zip(&v).fold(margin, |m, (u, v)| m.min(v - u.abs()));
        }
        // with the zero boundary values, index k holds x = (k − half) h
        let mut full = Vec::with_capacity(state.u.len() + 2);
        full.push(0.0);
        full.extend_from_slice(&state.u);
        full.push(0.0);
        let offset = (half - core_m as i64) as usize;
        let core_values = full[offset..offset + 2 * core_m + 1].to_vec();
        Ok::<_, Error>(TruncationRun {
            r,
            nodes: nodes.len(),
            steps,
            core_values,
            sup: sup_norm(&state.u),
            domination_margin: margin,
        })
    })?;
    let differences = runs
        .windows(2)
        .map(|w| sup_dist(&w[0].core_values, &w[1].core_values))
        .collect();
    let core_x = (-(core_m as i64)..=core_m as i64).map(|j| j as f64 * h).collect();
    Ok(TruncationReport {
        core_half_width: core,
        core_x,
        runs,
        differences,
        lambda_p: eig.lambda_p,
        lambda_lower,
        min_phi,
        forcing_bound,
        supersolution_scale: scale,
    })
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRun {
    /// `−d log‖u‖_∞ / dt` fitted over the second half of the run.
    pub rate: f64,
    pub terminal_sup: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Steps at which `‖u‖_∞` increased (discrete maximum principle).
    pub max_principle_violations: usize,
    /// `(t, ‖u(t)‖_∞)` once per unit time.
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub lambda_p: f64,
    pub runs: Vec<DecayRun>,
}

impl DecayReport {
    pub fn max_relative_error(&self) -> f64 {
        self.runs
            .iter()
            .map(|r| (r.rate - self.lambda_p).abs() / self.lambda_p.abs())
            .fold(0.0, f64::max)
    }

    pub fn to_report(&self, rel_tol: f64, terminal: f64) -> InequalityReport {
        let mut rep = InequalityReport::new("liouville-decay");
        for (k, run) in self.runs.iter().enumerate() {
            let err = (run.rate - self.lambda_p).abs() / self.lambda_p.abs();
            rep.record(k as f64, err, rel_tol, rel_tol - err);
            rep.record(k as f64, run.terminal_sup, terminal, terminal - run.terminal_sup);
            rep.record(
                k as f64,
                run.max_principle_violations as f64,
                0.0,
                -(run.max_principle_violations as f64),
            );
        }
        rep.metric("lambda_p", self.lambda_p);
        rep.metric("max_relative_error", self.max_relative_error());
        rep.finalize()
    }
}

/// Homogeneous evolution from each initial datum until `‖u‖_∞ ≤ terminal`;
/// the decay rate is compared with `λ_p` of the same operator.
pub fn liouville_decay(
    op: &DiscreteOperator,
    initial: &[GridFunction],
    terminal: f64,
    t_max: f64,
    dt: f64,
) -> Result<DecayReport> {
    if op.c.iter().any(|&c| c > 0.0) || op.c.iter().all(|&c| c == 0.0) {
        return Err(Error::usage("decay needs c ≤ 0 and c ≢ 0 on the grid"));
    }
    let eig = principal_eigenpair(op, 1e-12, DEFAULT_MAX_ITER)?;
    let integ = Integrator::for_operator(op, &ForcingField::zero(), dt, TimeScheme::ImplicitEuler)?;
    let runs = par::try_map_slice(initial, |u0| {
        if u0.grid != op.grid {
            return Err(Error::usage("initial data and operator live on different grids"));
        }
        let mut state = EvolutionState::new(0.0, u0.values.clone(), dt, TimeScheme::ImplicitEuler)?;
        let mut sup = sup_norm(&state.u);
        if sup == 0.0 {
            return Err(Error::usage("initial datum is identically zero"));
        }
        let mut ts = vec![0.0];
        let mut logs = vec![sup.ln()];
        let mut trace = vec![(0.0, sup)];
        let mut violations = 0;
        let mut steps = 0;
        let per_unit = (1.0 / dt).round().max(1.0) as usize;
        while sup > terminal {
            if state.t >= t_max {
                return Err(Error::numerical(
                    "liouville_decay",
                    format!("‖u‖ still {sup:e} at t = {t_max}"),
                    sup,
                ));
            }
            integ.step(&mut state)?;
            steps += 1;
            let next = sup_norm(&state.u);
            if next > sup * (1.0 + 1e-14) {
                violations += 1;
            }
            sup = next;
            ts.push(state.t);
            logs.push(sup.ln());
            if steps % per_unit == 0 {
                trace.push((state.t, sup));
            }
        }
        let tail = ts.iter().position(|&t| t >= 0.5 * state.t).unwrap_or(0);
        let (slope, _) = linear_fit(&ts[tail..], &logs[tail..]);
        Ok(DecayRun {
            rate: -slope,
            terminal_sup: sup,
            t_end: state.t,
            steps,
            max_principle_violations: violations,
            trace,
        })
    })?;
    Ok(DecayReport {
        lambda_p: eig.lambda_p,
        runs,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanGrowth {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// `(t, spatial mean)` once per unit time.
    pub samples: Vec<(f64, f64)>,
}

/// Spatial mean of the solution over time, with its least-squares slope on
/// `window`. Growth certifies that no bounded entire solution is being
/// approached.
pub fn mean_growth(
    op: &DiscreteOperator,
    f: &ForcingField,
    u0: &GridFunction,
    window: (f64, f64),
    dt: f64,
) -> Result<MeanGrowth> {
    if !(window.1 > window.0 && window.0 >= 0.0) {
        return Err(Error::usage("window must be ordered and start at t ≥ 0"));
    }
    let (per_unit, dt) = steps_for(1.0, dt)?;
    let integ = Integrator::for_operator(op, f, dt, TimeScheme::ImplicitEuler)?;
    let mut state = EvolutionState::new(0.0, u0.values.clone(), dt, TimeScheme::ImplicitEuler)?;
    let mean = |u: &[f64]| u.iter().sum::<f64>() / u.len() as f64;
    let (mut ts, mut ms) = (Vec::new(), Vec::new());
    let mut samples = vec![(0.0, mean(&state.u))];
    let total = (window.1 * per_unit as f64).round() as usize;
    for s in 1..=total {
        integ.step(&mut state)?;
        state.t = s as f64 * dt;
        let m = mean(&state.u);
        if state.t >= window.0 - 1e-12 {
            ts.push(state.t);
            ms.push(m);
        }
        if s % per_unit == 0 {
            samples.push((state.t, m));
        }
    }
    let (slope, intercept) = linear_fit(&ts, &ms);
    Ok(MeanGrowth {
        slope,
        intercept,
        window,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApForcingParams {
    /// Node whose time trace is scanned.
    pub probe: usize,
    /// Lower bound on the discarded transient; raised to `10/λ_p`.
    pub transient: f64,
    /// Length of the recorded trace.
    pub trace_length: f64,
    pub sample_dt: f64,
    pub epsilon: f64,
    pub tau_range: (f64, f64),
    pub tau_step: f64,
    pub dt: f64,
    /// Below this sup the response counts as decayed and the scan is skipped.
    pub decay_tol: f64,
}

impl ApForcingParams {
    pub fn standard(dt: f64) -> Self {
        ApForcingParams {
            probe: 0,
            transient: 0.0,
            trace_length: 1000.0,
            sample_dt: 0.125,
            epsilon: 0.05,
            tau_range: (0.0, 500.0),
            tau_step: 0.125,
            dt,
            decay_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApForcingReport {
    pub lambda_p: f64,
    pub transient: f64,
    pub response_sup: f64,
    pub decayed: bool,
    pub scan: Option<AlmostPeriodReport>,
    /// `τ` in the scan range at which every forcing phase `ωτ` lies within
    /// 0.2 of `2πℤ`.
    pub quasi_period_candidates: Vec<f64>,
    /// Candidates with an accepted translation within one `τ` step.
    pub candidates_hit: usize,
    /// `(t, u(probe, t))`, relative to the end of the transient.
    pub trace: Vec<(f64, f64)>,
}

/// Drives the system with `f`, discards the transient, and scans the time
/// trace at one node for ε-almost periods.
pub fn ap_forcing_experiment(
    op: &DiscreteOperator,
    f: &ForcingField,
    u0: &GridFunction,
    params: &ApForcingParams,
) -> Result<ApForcingReport> {
    let p = params;
    if p.probe >= op.len() {
        return Err(Error::usage(format!(
            "probe {} outside a grid of {} nodes",
            p.probe,
            op.len()
        )));
    }
    if 2.0 * p.tau_range.1.abs().max(p.tau_range.0.abs()) > p.trace_length {
        return Err(Error::usage("trace must be at least twice the largest scanned shift"));
    }
    let eig = principal_eigenpair(op, 1e-11, DEFAULT_MAX_ITER)?;
    if !(eig.lambda_p > 0.0) {
        return Err(Error::usage(format!(
            "a.p. forcing needs λ_p > 0, found {}",
            eig.lambda_p
        )));
    }
    let (per_sample, dt) = steps_for(p.sample_dt, p.dt)?;
    let transient = p.transient.max(10.0 / eig.lambda_p);
    let transient_samples = (transient / p.sample_dt).ceil() as usize;
    let transient = transient_samples as f64 * p.sample_dt;
    let integ = Integrator::for_operator(op, f, dt, TimeScheme::ImplicitEuler)?;
    let mut state = EvolutionState::new(0.0, u0.values.clone(), dt, TimeScheme::ImplicitEuler)?;
    integ.advance(&mut state, transient_samples * per_sample)?;
    let n_samples = (p.trace_length / p.sample_dt).round() as usize;
    let mut values = Vec::with_capacity(n_samples + 1);
    values.push(state.u[p.probe]);
    let mut response_sup = sup_norm(&state.u);
    for k in 1..=n_samples {
        integ.advance(&mut state, per_sample)?;
        state.t = transient + k as f64 * p.sample_dt;
        values.push(state.u[p.probe]);
        response_sup = response_sup.max(sup_norm(&state.u));
    }
    let trace: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .map(|(k, v)| (k as f64 * p.sample_dt, *v))
        .collect();

    let mut candidates = Vec::new();
    if let Some(first) = f.time.first().filter(|s| s.omega != 0.0) {
        let base = 2.0 * PI / first.omega.abs();
        let mut m = (p.tau_range.0 / base).ceil().max(1.0);
        while m * base <= p.tau_range.1 {
            let tau = m * base;
            let near = f.time.iter().all(|s| {
                let ph = s.omega * tau / (2.0 * PI);
                (ph - ph.round()).abs() * 2.0 * PI <= 0.2
            });
            if near {
                candidates.push(tau);
            }
            m += 1.0;
        }
    }

    let decayed = response_sup <= p.decay_tol;
    let scan = if decayed {
        None
    } else {
        let samples = Arc::new(values);
        let h = p.sample_dt;
        let sampler: Sampler = Arc::new(move |t: f64| {
            let s = (t / h).clamp(0.0, (samples.len() - 1) as f64);
            let k = (s.floor() as usize).min(samples.len() - 2);
            let w = s - k as f64;
            samples[k] * (1.0 - w) + samples[k + 1] * w
        });
        let func = SampledFunction::new(sampler, (0.0, p.trace_length), h)?;
        Some(scan_almost_periods(&func, p.epsilon, p.tau_range, p.tau_step)?)
    };
    let candidates_hit = match &scan {
        Some(s) => candidates.iter().filter(|&&c| s.contains(c, p.tau_step)).count(),
        None => 0,
    };
    Ok(ApForcingReport {
        lambda_p: eig.lambda_p,
        transient,
        response_sup,
        decayed,
        scan,
        quasi_period_candidates: candidates,
        candidates_hit,
        trace,
    })
}
