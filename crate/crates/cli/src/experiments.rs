//! Every experiment the command line exposes, with its parameters, help
//! text and runner.

use std::f64::consts::PI;

use liouville_core::almostperiod::{
    bochner_probe, drift_epsilon, non_ap_witness_u2, scan_almost_periods, SampledFunction,
};
use liouville_core::counterexample::{
    u2_at, u2_boundedness_sweep, u2_upper_bound, verify_approximation, verify_b_integral_lower_bound, verify_intf,
    verify_intn,
};
use liouville_core::entire::{
    ap_forcing_experiment, default_dt, dirichlet_truncation, liouville_decay, mean_growth, relax_to_stationary,
    relax_to_time_periodic, ApForcingParams, ForcingField, GridFunction, Sinusoid, TimeScheme,
};
use liouville_core::linalg::sup_dist;
use liouville_core::presets::Preset;
use liouville_core::spectra::{
    discretize, principal_eigenpair, refinement_study, shift_invariance_check, CoefficientField, DiscreteOperator,
    DriftScheme, FourierSeries, FourierTerm, TorusGrid,
};
use liouville_core::InequalityReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::output::{float, Cell, RunOutput, Table};
use crate::params::{list, optional, scalar, Experiment, ParamSpec, Params};

type Res = Result<RunOutput, CliError>;

const COEFFS: [ParamSpec; 9] = [
    optional("a0", "constant part of the diffusion a"),
    list("a-mode", None, "Fourier term of a as K:COS:SIN (repeatable)"),
    optional("b0", "constant part of the drift b"),
    list("b-mode", None, "Fourier term of b as K:COS:SIN (repeatable)"),
    optional("c0", "constant part of the zero-order coefficient c"),
    list("c-mode", None, "Fourier term of c as K:COS:SIN (repeatable)"),
    optional("period", "space period of the coefficients (default 1)"),
    scalar("grid", "64", "grid points per period"),
    scalar("scheme", "upwind", "drift discretization: upwind or centered"),
];

const FORCING: [ParamSpec; 4] = [
    optional("f0", "constant offset of the forcing"),
    optional("g0", "constant part of the space factor g"),
    list("g-mode", None, "Fourier term of g as K:COS:SIN (repeatable)"),
    list(
        "f-sin",
        None,
        "time factor term AMP:OMEGA:PHASE, i.e. AMP sin(OMEGA t + PHASE) (repeatable)",
    ),
];

fn with(base: &[ParamSpec], extra: &[ParamSpec]) -> Vec<ParamSpec> {
    base.iter().chain(extra).copied().collect()
}

fn preset_param(default: &'static str) -> ParamSpec {
    scalar(
        "preset",
        default,
        "named operator: laplacian, cosine-well, drift, truncation or damped",
    )
}

pub fn registry() -> Vec<Experiment> {
    vec![
        Experiment {
            group: "verify",
            name: "sigma-approx",
            about: "Uniform approximation of σ by its periodic truncations φₙ",
            long_about: "Computes the exact supremum of |σ − φₙ| over (−3^W, 3^W] in rational arithmetic and \
                checks it against a rigorous bracket of the tail sum Σ_{k>n} 1/k². The same bound is checked \
                for b − ψₙ. This is the estimate showing that the drift b is a uniform limit of periodic \
                functions.",
            params: vec![
                scalar("n", "2", "truncation level n ≥ 1"),
                scalar("window", "4", "window exponent W ≥ n"),
            ],
            run: verify_sigma_approx,
        },
        Experiment {
            group: "verify",
            name: "integral-lower-bound",
            about: "Growth of the primitive F of σ at integers",
            long_about: "Checks F(m) ≥ m / (2(log₃ m + 1)²) at every integer m in [1, xmax] with exact \
                rational F and a rational lower bound on the logarithm.",
            params: vec![scalar("xmax", "6561", "largest integer checked")],
            run: verify_integral_lower_bound,
        },
        Experiment {
            group: "verify",
            name: "intn",
            about: "Linear lower bound on F over one level",
            long_about: "Checks F(y) ≥ y/(2n²) on [0, 3ⁿ] at every integer and at interior sample points of \
                each cell, in exact arithmetic.",
            params: vec![
                scalar("n", "4", "level n ≥ 1"),
                scalar("samples", "3", "interior samples per unit cell"),
            ],
            run: verify_intn_cmd,
        },
        Experiment {
            group: "verify",
            name: "b-lower-bound",
            about: "Growth of the primitive B of the drift b",
            long_about: "Checks B(x) ≥ (x − 1)/(4(log₃ x + 1)²) − ‖b‖∞ at x = 1, 1 + step, …, xmax. The norm \
                enters through the lower end of its bracket around 1 + π²/6.",
            params: vec![
                scalar("xmax", "729", "right end of the sample range"),
                scalar("step", "0.25", "sample spacing"),
            ],
            run: verify_b_lower_bound,
        },
        Experiment {
            group: "counterexample",
            name: "u2-sweep",
            about: "Boundedness, monotonicity and oddness of u₂",
            long_about: "Tabulates u₂(x) = ∫₀ˣ exp(−B) on [0, xmax] by adaptive Gauss–Legendre quadrature. \
                Checks that it is strictly increasing, odd at mirrored pairs, and below the explicit bound B*. \
                Together these exhibit a bounded non-constant solution of u'' + b u' = 0 with a limit \
                periodic drift, so the Liouville property fails.",
            params: vec![
                scalar("xmax", "729", "right end of the sweep"),
                scalar("step", "0.125", "sweep spacing"),
                scalar("tol", "1e-9", "quadrature tolerance for the sweep"),
                scalar("bound-tol", "1e-8", "quadrature tolerance for B*"),
            ],
            run: u2_sweep,
        },
        Experiment {
            group: "counterexample",
            name: "u2-bound",
            about: "Explicit upper bound B* on u₂",
            long_about: "Evaluates B* = 1 + e^{‖b‖} ∫₁^∞ exp(−(y−1)/(4(log₃y+1)²)) dy with a certified tail \
                remainder, and checks that it dominates u₂ at a far point.",
            params: vec![
                scalar("tol", "1e-8", "quadrature tolerance"),
                scalar("xcheck", "6561", "point at which u₂ is compared with B*"),
            ],
            run: u2_bound,
        },
        Experiment {
            group: "ap",
            name: "scan",
            about: "Scan for ε-almost periods",
            long_about: "Scans τ over a range and keeps the translations with sup |f(·+τ) − f| ≤ ε on a \
                window. For b and ψₙ the grid contains every kink, so the supremum is exact. For b, every \
                multiple of 2·3ⁿ is expected to be an ε-almost period with ε = 2 Σ_{k>n} 1/k². For u₂ no \
                τ ≥ 1 qualifies below ε₀ = 2u₂(1/2).",
            params: vec![
                scalar("function", "b", "b, psi, z or u2"),
                scalar("n", "2", "level for psi and for the default ε"),
                scalar("half", "729", "half-width of the window"),
                scalar(
                    "eps",
                    "auto",
                    "ε (auto: 2 Σ_{k>n} 1/k² for b and psi, ε₀ − 10 tol for u2)",
                ),
                scalar("tau-min", "0", "first τ"),
                scalar("tau-max", "360", "last τ"),
                scalar("tau-step", "18", "τ spacing"),
                scalar("step", "0.125", "sampling step for u2"),
                scalar("tol", "1e-10", "quadrature tolerance for u2"),
            ],
            run: ap_scan,
        },
        Experiment {
            group: "ap",
            name: "witness",
            about: "Witness that u₂ is not almost periodic",
            long_about: "For each τ ≥ 1 evaluates the translation difference 2u₂(τ/2) at x = −τ/2 and checks \
                it stays above ε₀ = 2u₂(1/2). No |τ| ≥ 1 is an ε-almost period for ε < ε₀, so the almost \
                periods are not relatively dense.",
            params: vec![
                list("taus", Some("1,3,9,27,81,243"), "translations τ ≥ 1"),
                scalar("tol", "1e-10", "quadrature tolerance"),
            ],
            run: ap_witness,
        },
        Experiment {
            group: "ap",
            name: "bochner",
            about: "Precompactness of translates",
            long_about: "Compares translates f(·+s) for a sequence of shifts on a compact window and on the \
                full window. For u₂ the translates by −3^k converge locally while staying ε₀ apart uniformly, \
                so no subsequence converges uniformly.",
            params: vec![
                scalar("function", "u2", "u2 or b"),
                list("shifts", Some("-81,-243,-729,-2187,-6561"), "shifts s"),
                scalar("half", "6600", "half-width of the full window"),
                scalar("step", "0.5", "sampling step"),
                scalar("compact-lo", "-1", "left end of the compact window"),
                scalar("compact-hi", "1", "right end of the compact window"),
                scalar("tol", "1e-10", "quadrature tolerance for u2"),
            ],
            run: ap_bochner,
        },
        Experiment {
            group: "eigen",
            name: "solve",
            about: "Periodic principal eigenpair of −L",
            long_about: "Discretizes L = a∂² + b∂ + c on the torus and finds the eigenvalue of −L with a \
                positive eigenfunction by inverse power iteration on a shifted M-matrix. For c ≡ 0 the \
                eigenvalue is 0 with a constant eigenfunction.",
            params: with(
                &[preset_param("laplacian")],
                &with(
                    &COEFFS,
                    &[
                        scalar("tol", "1e-10", "eigenvalue tolerance"),
                        scalar("max-iter", "10000", "iteration cap"),
                    ],
                ),
            ),
            run: eigen_solve,
        },
        Experiment {
            group: "eigen",
            name: "shift-check",
            about: "Diagonal shift identity and sign of λ_p",
            long_about: "Checks λ_p(−(L + γ)) = λ_p(−L) − γ, and λ_p > 0 whenever c ≤ 0 and c ≢ 0 on the grid, \
                certified by the Collatz–Wielandt lower bound.",
            params: with(
                &[preset_param("drift")],
                &with(
                    &COEFFS,
                    &[scalar("gamma", "-1", "shift γ"), scalar("tol", "1e-12", "tolerance")],
                ),
            ),
            run: eigen_shift,
        },
        Experiment {
            group: "eigen",
            name: "refine",
            about: "Grid refinement study of λ_p",
            long_about: "Computes λ_p on successively finer grids and estimates the order of convergence from \
                successive differences. The discrete eigenvalue approximates the continuum one; the gap is \
                reported, not asserted to vanish.",
            params: with(
                &[preset_param("drift")],
                &with(
                    &COEFFS,
                    &[
                        list("sizes", Some("32,64,128,256"), "increasing grid sizes"),
                        scalar("tol", "1e-10", "eigenvalue tolerance"),
                        scalar("min-order", "auto", "required order (auto: 1.9 centered, 0.9 upwind)"),
                    ],
                ),
            ),
            run: eigen_refine,
        },
        Experiment {
            group: "entire",
            name: "relax",
            about: "Relaxation to the bounded stationary solution",
            long_about: "Evolves ∂ₜu = Lu + f from several random initial data with a time-independent f. \
                With c ≤ 0 (or λ_p > 0) every bounded solution is stationary and unique, so the runs converge \
                to the same profile. With c ≡ 0 and f ≡ 1 no bounded solution exists: the run fails to \
                settle and the spatial mean grows linearly.",
            params: with(
                &[preset_param("damped")],
                &with(
                    &COEFFS,
                    &with(
                        &FORCING,
                        &[
                            scalar("tol", "1e-9", "stop when ‖u(t+1) − u(t)‖ is this small"),
                            scalar("t-max", "200", "time limit"),
                            scalar("dt", "auto", "time step (auto: grid spacing)"),
                            scalar("seed", "1", "seed for the random initial data"),
                            scalar("starts", "3", "number of random initial data"),
                        ],
                    ),
                ),
            ),
            run: entire_relax,
        },
        Experiment {
            group: "entire",
            name: "periodic",
            about: "Relaxation to the time-periodic solution",
            long_about: "Iterates the period map for a T-periodic forcing. When λ_p > 0 the bounded solution is \
                periodic and unique: the orbit closes, runs from different data agree, and the period map \
                contracts at rate about e^{−λ_p T}.",
            params: with(
                &[preset_param("damped")],
                &with(
                    &COEFFS,
                    &with(
                        &FORCING,
                        &[
                            scalar("t-period", "1", "time period T of the forcing"),
                            scalar("tol", "1e-9", "closure tolerance"),
                            scalar("cycles-max", "500", "cycle limit"),
                            scalar("dt", "auto", "time step (auto: grid spacing)"),
                            scalar("seed", "1", "seed for the random initial data"),
                        ],
                    ),
                ),
            ),
            run: entire_periodic,
        },
        Experiment {
            group: "entire",
            name: "truncate",
            about: "Dirichlet truncations and the supersolution bound",
            long_about: "Solves the zero-data Dirichlet problems on [−r, r] × (−r, 0] for growing r and compares \
                them at t = 0 on a common core. The differences decrease as r grows, and every value obeys \
                |u_r| ≤ ‖f‖∞/(λ_p min φ_p)·φ_p, which bounds the limiting entire solution.",
            params: with(
                &[preset_param("truncation")],
                &with(
                    &COEFFS,
                    &with(
                        &FORCING,
                        &[
                            list("r", Some("8,16,32,64"), "increasing half-widths r"),
                            scalar("core", "auto", "core half-width (auto: smallest r)"),
                            scalar("tol", "1e-12", "eigenpair tolerance"),
                            scalar("final-tol", "1e-6", "bound on the last core difference"),
                        ],
                    ),
                ),
            ),
            run: entire_truncate,
        },
        Experiment {
            group: "entire",
            name: "decay",
            about: "Decay of bounded solutions when c ≤ 0, c ≢ 0",
            long_about: "Evolves the homogeneous equation from random initial data. With c ≤ 0 and c ≢ 0 the \
                only bounded entire solution is zero, and solutions decay at the rate λ_p.",
            params: with(
                &[preset_param("cosine-well")],
                &with(
                    &COEFFS,
                    &[
                        scalar("starts", "3", "number of random initial data"),
                        scalar("seed", "1", "seed for the random initial data"),
                        scalar("terminal", "1e-8", "run until ‖u‖∞ is below this"),
                        scalar("t-max", "1000", "time limit"),
                        scalar("dt", "auto", "time step (auto: grid spacing)"),
                        scalar("rel-tol", "0.05", "allowed relative error of the rate"),
                    ],
                ),
            ),
            run: entire_decay,
        },
        Experiment {
            group: "entire",
            name: "ap-forcing",
            about: "Response to an almost periodic forcing",
            long_about: "Drives the system with a forcing whose time part mixes rationally independent \
                frequencies, discards the transient and scans the response at one node for ε-almost periods. \
                When λ_p > 0 the bounded response is almost periodic, so the almost periods have bounded gaps.",
            params: with(
                &[preset_param("damped")],
                &with(
                    &COEFFS,
                    &with(
                        &FORCING,
                        &[
                            scalar("probe", "0", "node whose trace is scanned"),
                            scalar("eps", "0.05", "ε"),
                            scalar("tau-max", "500", "last τ"),
                            scalar("tau-step", "0.125", "τ spacing"),
                            scalar("sample-dt", "0.125", "trace sampling step"),
                            scalar("trace-length", "1000", "trace length"),
                            scalar("transient", "0", "minimum transient (raised to 10/λ_p)"),
                            scalar("dt", "auto", "time step (auto: grid spacing)"),
                            scalar("max-gap", "50", "allowed gap between almost periods"),
                        ],
                    ),
                ),
            ),
            run: entire_ap_forcing,
        },
    ]
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn report_checks(out: &mut RunOutput, r: &InequalityReport) {
    out.check(
        r.claim_id.clone(),
        r.passed(),
        format!(
            "{} points, {} violations, worst margin {:e}",
            r.points_checked,
            r.violations.len(),
            r.worst_margin
        ),
    );
    for (k, v) in &r.metrics {
        out.set_f64(k, *v);
    }
    out.set("points_checked", r.points_checked);
    out.set_f64("worst_margin", r.worst_margin);
}

fn parse_term(s: &str) -> Result<FourierTerm, CliError> {
    let bad = || CliError::Usage(format!("Fourier term {s:?} is not K:COS:SIN"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(FourierTerm {
        modes: vec![parts[0].parse().map_err(|_| bad())?],
        cos: parts[1].parse().map_err(|_| bad())?,
        sin: parts[2].parse().map_err(|_| bad())?,
    })
}

fn override_series(p: &Params, c: &str, m: &str, base: &mut FourierSeries) -> Result<(), CliError> {
    if let Some(v) = p.opt(c)? {
        base.constant = v;
    }
    if p.has(m) {
        base.terms = p.strings(m).iter().map(|s| parse_term(s)).collect::<Result<_, _>>()?;
    }
    Ok(())
}

fn coefficients(p: &Params) -> Result<CoefficientField, CliError> {
    let preset: Preset = p
        .get("preset")
        .map_err(|_| CliError::Usage(format!("unknown preset {:?}", p.str("preset").unwrap_or_default())))?;
    let mut f = preset.coefficients();
    override_series(p, "a0", "a-mode", &mut f.a)?;
    override_series(p, "b0", "b-mode", &mut f.b[0])?;
    override_series(p, "c0", "c-mode", &mut f.c)?;
    if let Some(l) = p.opt::<f64>("period")? {
        f.cell = liouville_core::spectra::PeriodCell::new(vec![l])?;
    }
    Ok(CoefficientField::new(f.cell, f.a, f.b, f.c)?)
}

fn forcing(p: &Params, default: ForcingField) -> Result<ForcingField, CliError> {
    let mut f = default;
    if let Some(v) = p.opt("f0")? {
        f.offset = v;
    }
    override_series(p, "g0", "g-mode", &mut f.space)?;
    if p.has("f-sin") {
        f.time = p
            .strings("f-sin")
            .iter()
            .map(|s| {
                let bad = || CliError::Usage(format!("time term {s:?} is not AMP:OMEGA:PHASE"));
                let v: Vec<f64> = s
                    .split(':')
                    .map(|x| x.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?;
                match v[..] {
                    [amplitude, omega, phase] => Ok(Sinusoid {
                        amplitude,
                        omega,
                        phase,
                    }),
                    _ => Err(bad()),
                }
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(f)
}

fn scheme(p: &Params) -> Result<DriftScheme, CliError> {
    match p.str("scheme")? {
        "upwind" => Ok(DriftScheme::Upwind),
        "centered" => Ok(DriftScheme::Centered),
        s => Err(CliError::Usage(format!("unknown scheme {s:?} (upwind or centered)"))),
    }
}

fn operator(p: &Params) -> Result<(CoefficientField, DiscreteOperator), CliError> {
    let coeffs = coefficients(p)?;
    let grid = TorusGrid::uniform(&coeffs.cell, p.get("grid")?)?;
    let op = discretize(&coeffs, &grid, scheme(p)?)?;
    Ok((coeffs, op))
}

fn time_step(p: &Params, grid: &TorusGrid) -> Result<f64, CliError> {
    Ok(p.auto("dt")?.unwrap_or_else(|| default_dt(grid)))
}

fn random_data(grid: &TorusGrid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    GridFunction::new(grid.clone(), v).expect("finite random data")
}

fn describe_operator(out: &mut RunOutput, op: &DiscreteOperator) {
    out.set("grid", op.grid.n[0]);
    out.set("scheme", format!("{:?}", op.scheme).to_lowercase());
    out.set_f64("max_peclet", op.max_peclet);
    out.set("peclet_warning", op.peclet_warning);
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn verify_sigma_approx(p: &Params) -> Res {
    let r = verify_approximation(p.get("n")?, p.get("window")?)?;
    let mut out = RunOutput::default();
    report_checks(&mut out, &r);
    out.table = Table::from_metrics(&r.metrics);
    Ok(out)
}

fn verify_integral_lower_bound(p: &Params) -> Res {
    let r = verify_intf(p.get("xmax")?)?;
    let mut out = RunOutput::default();
    report_checks(&mut out, &r);
    out.table = Table::from_metrics(&r.metrics);
    Ok(out)
}

fn verify_intn_cmd(p: &Params) -> Res {
    let r = verify_intn(p.get("n")?, p.get("samples")?)?;
    let mut out = RunOutput::default();
    report_checks(&mut out, &r);
    out.table = Table::from_metrics(&r.metrics);
    Ok(out)
}

fn verify_b_lower_bound(p: &Params) -> Res {
    let (xmax, step): (f64, f64) = (p.get("xmax")?, p.get("step")?);
    if !(step > 0.0 && xmax >= 1.0) {
        return Err(CliError::Usage("need step > 0 and xmax ≥ 1".into()));
    }
    let count = ((xmax - 1.0) / step + 1e-9).floor() as usize;
    let xs: Vec<f64> = (0..=count).map(|k| 1.0 + k as f64 * step).collect();
    let r = verify_b_integral_lower_bound(&xs)?;
    let mut out = RunOutput::default();
    report_checks(&mut out, &r);
    out.table = Table::from_metrics(&r.metrics);
    Ok(out)
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

fn u2_sweep(p: &Params) -> Res {
    let r = u2_boundedness_sweep(p.get("xmax")?, p.get("step")?, p.get("tol")?, p.get("bound-tol")?)?;
    let mut out = RunOutput::default();
    for rep in [&r.monotone, &r.oddness, &r.bounded] {
        out.check(
            rep.claim_id.clone(),
            rep.passed(),
            format!("{} points, worst margin {:e}", rep.points_checked, rep.worst_margin),
        );
    }
    out.set_f64("max_u2", r.max_u2());
    out.set_f64("upper_bound", r.bound.value);
    out.set_f64("oddness_worst_margin", r.oddness.worst_margin);
    out.set("samples", r.samples.len());
    let mut t = Table::new(&["x", "u2", "increment"]);
    for s in &r.samples {
        t.push(vec![s.x.into(), s.u2.into(), s.increment.into()]);
    }
    out.table = t;
    Ok(out)
}

fn u2_bound(p: &Params) -> Res {
    let b = u2_upper_bound(p.get("tol")?)?;
    let x: f64 = p.get("xcheck")?;
    let u = u2_at(x, 1e-10)?;
    let mut out = RunOutput::default();
    out.check(
        "u2-bound-dominates",
        u.value + u.error_estimate <= b.value,
        format!("u2({x}) = {:.10} <= B* = {:.6}", u.value, b.value),
    );
    let fields = [
        ("value", b.value),
        ("norm", b.norm),
        ("integral", b.integral),
        ("quadrature_error", b.quadrature_error),
        ("truncation_point", b.truncation_point),
        ("remainder_bound", b.remainder_bound),
    ];
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in fields {
        out.set_f64(k, v);
        t.push(vec![k.into(), v.into()]);
    }
    out.set_f64("u2_at_xcheck", u.value);
    out.table = t;
    Ok(out)
}

// ---------------------------------------------------------------------------
// ap
// ---------------------------------------------------------------------------

fn ap_scan(p: &Params) -> Res {
    let func: String = p.get("function")?;
    let n: u32 = p.get("n")?;
    let half: f64 = p.get("half")?;
    let tol: f64 = p.get("tol")?;
    let f = match func.as_str() {
        "b" => SampledFunction::drift_b(half)?,
        "psi" => SampledFunction::approximant_psi(n, half)?,
        "z" => SampledFunction::triangle(half)?,
        "u2" => SampledFunction::u2(half, p.get("step")?, tol)?,
        other => return Err(CliError::Usage(format!("unknown function {other:?}"))),
    };
    let eps = match p.auto::<f64>("eps")? {
        Some(e) => e,
        None if func == "u2" => non_ap_witness_u2(&[1.0], tol)?.metrics["epsilon0"] - 10.0 * tol,
        None => drift_epsilon(n),
    };
    let range = (p.get("tau-min")?, p.get("tau-max")?);
    let r = scan_almost_periods(&f, eps, range, p.get("tau-step")?)?;
    let mut out = RunOutput::default();
    out.set_f64("epsilon", eps);
    out.set("found", r.taus_found.len());
    out.set("scanned", r.scanned);
    out.set_f64("max_gap", r.max_gap);
    out.set_f64("worst_accepted", r.worst_accepted);
    match func.as_str() {
        "b" | "psi" | "z" => {
            let period = if func == "z" { 1.0 } else { 2.0 * 3f64.powi(n as i32) };
            let expected: Vec<f64> = (0..)
                .map(|k| k as f64 * period)
                .skip_while(|&t| t < range.0)
                .take_while(|&t| t <= range.1)
                .collect();
            let missing = expected.iter().filter(|&&t| !r.contains(t, 1e-9)).count();
            out.check(
                "multiples-of-period-are-almost-periods",
                missing == 0,
                format!(
                    "{} of {} multiples of {period} accepted",
                    expected.len() - missing,
                    expected.len()
                ),
            );
        }
        _ => {
            let bad = r.taus_found.iter().filter(|t| t.abs() >= 1.0).count();
            out.check(
                "no-almost-period-beyond-one",
                bad == 0,
                format!("{bad} translations |τ| ≥ 1 accepted at ε = {eps:.6}"),
            );
        }
    }
    let mut t = Table::new(&["tau"]);
    for tau in &r.taus_found {
        t.push(vec![(*tau).into()]);
    }
    out.table = t;
    Ok(out)
}

fn ap_witness(p: &Params) -> Res {
    let taus: Vec<f64> = p.list("taus")?;
    let tol: f64 = p.get("tol")?;
    let r = non_ap_witness_u2(&taus, tol)?;
    let mut out = RunOutput::default();
    report_checks(&mut out, &r);
    let mut t = Table::new(&["tau", "witness"]);
    for &tau in &taus {
        t.push(vec![tau.into(), (2.0 * u2_at(tau / 2.0, tol)?.value).into()]);
    }
    out.table = t;
    Ok(out)
}

fn ap_bochner(p: &Params) -> Res {
    let func: String = p.get("function")?;
    let half: f64 = p.get("half")?;
    let shifts: Vec<f64> = p.list("shifts")?;
    let tol: f64 = p.get("tol")?;
    let reach = half + shifts.iter().fold(0.0f64, |m, s| m.max(s.abs())) + 1.0;
    let mut f = match func.as_str() {
        "u2" => SampledFunction::u2_with_reach(half, reach, p.get("step")?, tol)?,
        "b" => SampledFunction::drift_b(reach)?,
        other => return Err(CliError::Usage(format!("unknown function {other:?} (u2 or b)"))),
    };
    f.window = (-half, half);
    let eps0 = non_ap_witness_u2(&[1.0], tol)?.metrics["epsilon0"];
    let d = bochner_probe(&f, &shifts, (p.get("compact-lo")?, p.get("compact-hi")?), eps0 - tol)?;
    let mut out = RunOutput::default();
    out.set("compact_converging", d.compact_converging);
    out.set_f64("min_full_separation", d.min_full_separation);
    out.set("failure_mode", d.failure_mode);
    out.set_f64("epsilon0", eps0);
    let (name, want) = if func == "u2" {
        ("translates-not-precompact", true)
    } else {
        ("no-separated-translates", false)
    };
    out.check(
        name,
        d.failure_mode == want,
        format!(
            "compact converging {}, min full separation {:.6} vs ε₀ {:.6}",
            d.compact_converging, d.min_full_separation, eps0
        ),
    );
    let mut t = Table::new(&["i", "j", "shift_i", "shift_j", "compact", "full"]);
    for i in 0..shifts.len() {
        for j in 0..shifts.len() {
            t.push(vec![
                i.into(),
                j.into(),
                shifts[i].into(),
                shifts[j].into(),
                d.compact[i][j].into(),
                d.full[i][j].into(),
            ]);
        }
    }
    out.table = t;
    Ok(out)
}

// ---------------------------------------------------------------------------
// eigen
// ---------------------------------------------------------------------------

fn eigen_solve(p: &Params) -> Res {
    let (_, op) = operator(p)?;
    let tol: f64 = p.get("tol")?;
    let e = principal_eigenpair(&op, tol, p.get("max-iter")?)?;
    let mut out = RunOutput::default();
    describe_operator(&mut out, &op);
    out.set_f64("lambda_p", e.lambda_p);
    out.set_f64("residual", e.residual);
    out.set("iterations", e.iterations);
    out.set_f64("bracket_lo", e.bracket.0);
    out.set_f64("bracket_hi", e.bracket.1);
    out.set_f64("min_phi", e.min_phi());
    out.set_f64("shift", e.shift);
    out.check(
        "eigenvector-positive",
        e.min_phi() > 0.0,
        format!("min φ_p = {:.6e}", e.min_phi()),
    );
    out.check(
        "residual",
        e.residual <= 10.0 * tol,
        format!("‖(−A)φ − λφ‖∞ = {:.3e} after {} iterations", e.residual, e.iterations),
    );
    let slack = 10.0 * tol;
    out.check(
        "collatz-wielandt-bracket",
        e.bracket.0 - slack <= e.lambda_p && e.lambda_p <= e.bracket.1 + slack,
        format!(
            "{:.12e} ≤ λ_p = {:.12e} ≤ {:.12e}",
            e.bracket.0, e.lambda_p, e.bracket.1
        ),
    );
    let mut t = Table::new(&["node", "x", "phi"]);
    for (i, v) in e.phi_p.iter().enumerate() {
        t.push(vec![i.into(), op.grid.coords(i)[0].into(), (*v).into()]);
    }
    out.table = t;
    Ok(out)
}

fn eigen_shift(p: &Params) -> Res {
    let (coeffs, op) = operator(p)?;
    let r = shift_invariance_check(&coeffs, p.get("gamma")?, &op.grid, op.scheme, p.get("tol")?)?;
    let mut out = RunOutput::default();
    describe_operator(&mut out, &op);
    report_checks(&mut out, &r);
    out.table = Table::from_metrics(&r.metrics);
    Ok(out)
}

fn eigen_refine(p: &Params) -> Res {
    let coeffs = coefficients(p)?;
    let sch = scheme(p)?;
    let sizes: Vec<usize> = p.list("sizes")?;
    let r = refinement_study(&coeffs, &sizes, sch, p.get("tol")?)?;
    let required = p.auto::<f64>("min-order")?.unwrap_or(match sch {
        DriftScheme::Centered => 1.9,
        DriftScheme::Upwind => 0.9,
    });
    let mut out = RunOutput::default();
    out.set_f64("spread", r.spread());
    out.set("min_order", r.min_order().map_or(serde_json::Value::Null, float));
    match r.min_order() {
        Some(o) => out.check(
            "observed-order",
            o >= required,
            format!("min order {o:.4} vs {required}"),
        ),
        None => out.check(
            "observed-order",
            r.spread() <= 100.0 * p.get::<f64>("tol")?,
            format!("λ_p constant across sizes (spread {:.3e})", r.spread()),
        ),
    }
    let mut t = Table::new(&["n", "lambda_p", "iterations", "order"]);
    for row in &r.rows {
        t.push(vec![
            row.n.into(),
            row.lambda_p.into(),
            row.iterations.into(),
            row.order.unwrap_or(f64::NAN).into(),
        ]);
    }
    out.table = t;
    Ok(out)
}

// ---------------------------------------------------------------------------
// entire
// ---------------------------------------------------------------------------

fn entire_relax(p: &Params) -> Res {
    let (_, op) = operator(p)?;
    let f = forcing(p, ForcingField::constant(1.0))?;
    let tol: f64 = p.get("tol")?;
    let t_max: f64 = p.get("t-max")?;
    let dt = time_step(p, &op.grid)?;
    let seed: u64 = p.get("seed")?;
    let starts: u64 = p.get("starts")?;
    let mut out = RunOutput::default();
    describe_operator(&mut out, &op);
    let mut limits = Vec::new();
    for s in 0..starts.max(1) {
        let u0 = random_data(&op.grid, seed + s);
        match relax_to_stationary(&op, &f, &u0, tol, t_max, dt, TimeScheme::ImplicitEuler) {
            Ok(r) => limits.push(r),
            Err(e @ liouville_core::Error::NumericalFailure { .. }) => {
                // report why nothing bounded was approached before failing
                let window = (0.2 * t_max, t_max);
                let g = mean_growth(&op, &f, &u0, window, dt)?;
                eprintln!(
                    "diagnostic: spatial mean slope {:.6} on [{}, {}]",
                    g.slope, window.0, window.1
                );
                return Err(e.into());
            }
            Err(e) => return Err(e.into()),
        }
    }
    let spread = limits
        .iter()
        .map(|l| sup_dist(&l.u.values, &limits[0].u.values))
        .fold(0.0, f64::max);
    let residual = limits.iter().map(|l| l.residual).fold(0.0, f64::max);
    out.set_f64("spread", spread);
    out.set_f64("residual", residual);
    out.set_f64("t_final", limits.iter().map(|l| l.t).fold(0.0, f64::max));
    out.check(
        "unique-stationary-limit",
        spread <= 2.0 * tol,
        format!("{} starts agree within {spread:.3e}", limits.len()),
    );
    out.check(
        "stationary-residual",
        residual <= 1e3 * tol,
        format!("‖Au + f‖∞ = {residual:.3e}"),
    );
    let mut t = Table::new(&["node", "x", "u"]);
    for (i, v) in limits[0].u.values.iter().enumerate() {
        t.push(vec![i.into(), op.grid.coords(i)[0].into(), (*v).into()]);
    }
    out.table = t;
    Ok(out)
}

fn entire_periodic(p: &Params) -> Res {
    let (_, op) = operator(p)?;
    let period: f64 = p.get("t-period")?;
    let default =
        ForcingField::stationary(FourierSeries::mode_1d(0.0, 1, 1.0, 0.0)).with_sinusoid(1.0, 2.0 * PI / period, 0.0);
    let f = forcing(p, default)?;
    let tol: f64 = p.get("tol")?;
    let cycles: usize = p.get("cycles-max")?;
    let dt = time_step(p, &op.grid)?;
    let seed: u64 = p.get("seed")?;
    let orbits = [seed, seed + 1]
        .iter()
        .map(|&s| {
            relax_to_time_periodic(
                &op,
                &f,
                period,
                &random_data(&op.grid, s),
                tol,
                cycles,
                dt,
                TimeScheme::ImplicitEuler,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let gap = orbits[0]
        .states
        .iter()
        .zip(&orbits[1].states)
        .map(|(a, b)| sup_dist(a, b))
        .fold(0.0, f64::max);
    let lambda = match orbits[0].lambda_p {
        Some(l) => l,
        None => principal_eigenpair(&op, 1e-11, 10_000)?.lambda_p,
    };
    let bound = (-lambda * period).exp() + 0.05;
    let ratios = orbits[0].contraction_ratios(10.0 * tol);
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mut out = RunOutput::default();
    describe_operator(&mut out, &op);
    out.set_f64("lambda_p", lambda);
    out.set("cycles", orbits[0].cycles);
    out.set_f64("closure_gap", orbits[0].closure_gap());
    out.set_f64("orbit_gap", gap);
    out.set_f64("worst_contraction_ratio", worst_ratio);
    out.check(
        "orbit-closes",
        orbits[0].closure_gap() <= tol,
        format!(
            "‖u(t+T) − u(t)‖∞ = {:.3e} after {} cycles",
            orbits[0].closure_gap(),
            orbits[0].cycles
        ),
    );
    out.check(
        "orbit-unique",
        gap <= 2.0 * tol,
        format!("two starts agree within {gap:.3e}"),
    );
    out.check(
        "period-map-contraction",
        worst_ratio <= bound,
        format!("worst ratio {worst_ratio:.4} vs e^(−λT) + 0.05 = {bound:.4}"),
    );
    let mut t = Table::new(&["t", "node", "x", "u"]);
    for (time, state) in orbits[0].times.iter().zip(&orbits[0].states) {
        for (i, v) in state.iter().enumerate() {
            t.push(vec![(*time).into(), i.into(), op.grid.coords(i)[0].into(), (*v).into()]);
        }
    }
    out.table = t;
    Ok(out)
}

fn entire_truncate(p: &Params) -> Res {
    let coeffs = coefficients(p)?;
    let preset: Preset = p.get("preset")?;
    let f = forcing(p, preset.forcing())?;
    let rs: Vec<f64> = p.list("r")?;
    let final_tol: f64 = p.get("final-tol")?;
    let r = dirichlet_truncation(&coeffs, &f, &rs, p.get("grid")?, p.auto("core")?, p.get("tol")?)?;
    let mut out = RunOutput::default();
    out.set_f64("lambda_p", r.lambda_p);
    out.set_f64("lambda_lower", r.lambda_lower);
    out.set_f64("min_phi", r.min_phi);
    out.set_f64("forcing_bound", r.forcing_bound);
    out.set_f64("supersolution_scale", r.supersolution_scale);
    out.set(
        "differences",
        r.differences.iter().map(|d| float(*d)).collect::<Vec<_>>(),
    );
    let last = r.differences.last().copied().unwrap_or(0.0);
    out.check(
        "differences-decreasing",
        r.strictly_decreasing(),
        format!(
            "{:?}",
            r.differences.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()
        ),
    );
    out.check(
        "final-difference",
        last <= final_tol,
        format!("{last:.3e} vs {final_tol:e}"),
    );
    let margin = r.runs.iter().map(|x| x.domination_margin).fold(f64::INFINITY, f64::min);
    out.check(
        "supersolution-domination",
        r.dominated(),
        format!("min over nodes and steps of v − |u_r| = {margin:.3e}"),
    );
    let mut t = Table::new(&["r", "x", "u"]);
    for run in &r.runs {
        for (x, u) in r.core_x.iter().zip(&run.core_values) {
            t.push(vec![run.r.into(), (*x).into(), (*u).into()]);
        }
    }
    out.table = t;
    Ok(out)
}

fn entire_decay(p: &Params) -> Res {
    let (_, op) = operator(p)?;
    let seed: u64 = p.get("seed")?;
    let starts: u64 = p.get("starts")?;
    let data: Vec<GridFunction> = (0..starts.max(1)).map(|s| random_data(&op.grid, seed + s)).collect();
    let terminal: f64 = p.get("terminal")?;
    let rel_tol: f64 = p.get("rel-tol")?;
    let r = liouville_decay(&op, &data, terminal, p.get("t-max")?, time_step(p, &op.grid)?)?;
    let mut out = RunOutput::default();
    describe_operator(&mut out, &op);
    out.set_f64("lambda_p", r.lambda_p);
    out.set("rates", r.runs.iter().map(|x| float(x.rate)).collect::<Vec<_>>());
    out.set_f64("max_relative_error", r.max_relative_error());
    for (k, run) in r.runs.iter().enumerate() {
        let err = (run.rate - r.lambda_p).abs() / r.lambda_p;
        out.check(
            format!("decay-rate/{k}"),
            err <= rel_tol && run.terminal_sup <= terminal,
            format!(
                "rate {:.6} vs λ_p {:.6} (rel. error {err:.2e}), final ‖u‖∞ {:.2e}",
                run.rate, r.lambda_p, run.terminal_sup
            ),
        );
        out.check(
            format!("maximum-principle/{k}"),
            run.max_principle_violations == 0,
            format!(
                "{} increases of ‖u‖∞ in {} steps",
                run.max_principle_violations, run.steps
            ),
        );
    }
    let mut t = Table::new(&["run", "t", "sup"]);
    for (k, run) in r.runs.iter().enumerate() {
        for (time, s) in &run.trace {
            t.push(vec![k.into(), (*time).into(), (*s).into()]);
        }
    }
    out.table = t;
    Ok(out)
}

fn entire_ap_forcing(p: &Params) -> Res {
    let (_, op) = operator(p)?;
    let preset: Preset = p.get("preset")?;
    let f = forcing(p, preset.forcing())?;
    let mut ap = ApForcingParams::standard(time_step(p, &op.grid)?);
    ap.probe = p.get("probe")?;
    ap.epsilon = p.get("eps")?;
    ap.tau_range = (0.0, p.get("tau-max")?);
    ap.tau_step = p.get("tau-step")?;
    ap.sample_dt = p.get("sample-dt")?;
    ap.trace_length = p.get("trace-length")?;
    ap.transient = p.get("transient")?;
    let max_gap: f64 = p.get("max-gap")?;
    let u0 = GridFunction::new(op.grid.clone(), vec![0.0; op.len()])?;
    let r = ap_forcing_experiment(&op, &f, &u0, &ap)?;
    let mut out = RunOutput::default();
    describe_operator(&mut out, &op);
    out.set_f64("lambda_p", r.lambda_p);
    out.set_f64("transient", r.transient);
    out.set_f64("response_sup", r.response_sup);
    out.set("decayed", r.decayed);
    out.set("quasi_period_candidates", r.quasi_period_candidates.len());
    out.set("candidates_hit", r.candidates_hit);
    let mut t = Table::new(&["tau"]);
    match &r.scan {
        Some(scan) => {
            out.set("found", scan.taus_found.len());
            out.set_f64("max_gap", scan.max_gap);
            out.check(
                "almost-periods-relatively-dense",
                scan.max_gap <= max_gap,
                format!(
                    "{} almost periods, max gap {:.4} vs {max_gap}",
                    scan.taus_found.len(),
                    scan.max_gap
                ),
            );
            out.check(
                "quasi-periods-hit",
                r.candidates_hit == r.quasi_period_candidates.len(),
                format!(
                    "{}/{} near-common periods accepted",
                    r.candidates_hit,
                    r.quasi_period_candidates.len()
                ),
            );
            for tau in &scan.taus_found {
                t.push(vec![Cell::Float(*tau)]);
            }
        }
        None => out.check(
            "response-decays",
            true,
            format!("response sup {:.3e}; scan skipped", r.response_sup),
        ),
    }
    out.table = t;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_are_unique_and_clap_accepts_them() {
        let reg = registry();
        let mut ids: Vec<String> = reg.iter().map(Experiment::id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), reg.len());
        crate::command(&reg).debug_assert();
    }

    #[test]
    fn terms_parse_and_reject() {
        let t = parse_term("2:-0.5:0.25").unwrap();
        assert_eq!((t.modes, t.cos, t.sin), (vec![2], -0.5, 0.25));
        for bad in ["1:2", "a:1:1", "1:1:1:1", ""] {
            assert!(parse_term(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn given_components_replace_preset_ones() {
        let p = Params::from_pairs(&[("preset", "drift"), ("c0", "-2"), ("b-mode", "3:1:0")]);
        let f = coefficients(&p).unwrap();
        let drift = Preset::Drift.coefficients();
        assert_eq!(f.a, drift.a);
        assert_eq!(f.c.constant, -2.0);
        assert_eq!(f.c.terms, drift.c.terms);
        assert_eq!(f.b[0].constant, 0.3);
        assert_eq!(f.b[0].terms.len(), 1);
        assert_eq!(f.b[0].terms[0].modes, vec![3]);
    }

    #[test]
    fn forcing_overrides() {
        let p = Params::from_pairs(&[("f-sin", "2:3:0.5"), ("f0", "1")]);
        let f = forcing(&p, ForcingField::constant(4.0)).unwrap();
        assert_eq!(f.offset, 1.0);
        assert_eq!(f.time.len(), 1);
        assert_eq!((f.time[0].amplitude, f.time[0].omega, f.time[0].phase), (2.0, 3.0, 0.5));
        assert!(forcing(&Params::from_pairs(&[("f-sin", "1:2")]), ForcingField::zero()).is_err());
    }

    #[test]
    fn random_data_is_seeded_and_in_range() {
        let g = TorusGrid::uniform(&liouville_core::spectra::PeriodCell::unit(1), 50).unwrap();
        let a = random_data(&g, 7);
        assert_eq!(a.values, random_data(&g, 7).values);
        assert_ne!(a.values, random_data(&g, 8).values);
        assert!(a.values.iter().all(|v| (-1.0..1.0).contains(v)));
    }
}
