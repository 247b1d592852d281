//! Acceptance suite: every criterion at its stated tolerance, one
//! PASS/FAIL line each. Runs without the libtest harness so the lines come
//! out in order and unconditionally.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use liouville_core::almostperiod::{drift_epsilon, non_ap_witness_u2, sup_translate_diff, SampledFunction};
use liouville_core::counterexample::{u2_boundedness_sweep, verify_intf};
use liouville_core::entire::{
    ap_forcing_experiment, dirichlet_truncation, liouville_decay, mean_growth, ApForcingParams, ForcingField,
    GridFunction,
};
use liouville_core::exactfn::{inverse_square_bracket, to_f64_down, SigmaTable};
use liouville_core::presets::{quasi_periodic_forcing, truncation_forcing, Preset};
use liouville_core::spectra::{
    discretize, principal_eigenpair, shift_invariance_check, DiscreteOperator, DriftScheme, TorusGrid,
};
use num_rational::BigRational;
use num_traits::FromPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn unit_grid(n: usize) -> TorusGrid {
    TorusGrid::uniform(&Preset::Laplacian.coefficients().cell, n).unwrap()
}

fn operator(p: Preset, n: usize) -> DiscreteOperator {
    discretize(&p.coefficients(), &unit_grid(n), DriftScheme::Upwind).unwrap()
}

fn approximation_bound() -> Outcome {
    let table = SigmaTable::new(6);
    let slack = BigRational::from_f64(1e-6).unwrap();
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for n in 1..=4u32 {
        let sup = table.sup_diff_sigma_phi(n, n + 2);
        let bound = inverse_square_bracket(u64::from(n) + 1, Some(1_000_000)).lo + &slack;
        ok &= sup <= bound;
        worst = worst.min(to_f64_down(&(bound - &sup)));
    }
    outcome(ok, format!("n = 1..4, smallest margin {worst:.3e}"))
}

fn integral_lower_bound() -> Outcome {
    let r = verify_intf(6561).unwrap();
    outcome(
        r.passed() && r.points_checked == 6561,
        format!(
            "{} integers, {} violations, worst margin {:.3e}",
            r.points_checked,
            r.violations.len(),
            r.worst_margin
        ),
    )
}

fn u2_boundedness() -> Outcome {
    let r = u2_boundedness_sweep(729.0, 0.125, 1e-9, 1e-8).unwrap();
    outcome(
        r.passed() && r.oddness.points_checked == 100,
        format!(
            "max u2 {:.6} <= B* {:.4}, monotone {}, oddness worst margin {:.2e}",
            r.max_u2(),
            r.bound.value,
            r.monotone.passed(),
            r.oddness.worst_margin
        ),
    )
}

fn non_almost_periodicity() -> Outcome {
    let taus = [1.0, 3.0, 9.0, 27.0, 81.0, 243.0];
    let w = non_ap_witness_u2(&taus, 1e-10).unwrap();
    let b = SampledFunction::drift_b(2187.0).unwrap();
    let eps = drift_epsilon(2);
    let worst_b = (1..=20)
        .map(|k| sup_translate_diff(&b, 18.0 * k as f64).unwrap())
        .fold(0.0f64, f64::max);
    outcome(
        w.passed() && w.points_checked == taus.len() && worst_b <= eps,
        format!(
            "u2 witness margin {:.3e} (eps0 {:.6}); b at 18k: worst {:.6} <= eps {:.6}",
            w.worst_margin, w.metrics["epsilon0"], worst_b, eps
        ),
    )
}

fn dense_principal(op: &DiscreteOperator) -> (f64, bool) {
    let n = op.len();
    let d = op.matrix.to_dense();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| -d[i][j]);
    let lambda = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-8)
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    let svd = (m - nalgebra::DMatrix::identity(n, n) * lambda).svd(false, true);
    let k = svd.singular_values.imin();
    let v = svd.v_t.unwrap().row(k).into_owned();
    let positive = v.iter().all(|&x| x > 0.0) || v.iter().all(|&x| x < 0.0);
    (lambda, positive)
}

fn eigen_exactness() -> Outcome {
    let lap = principal_eigenpair(&operator(Preset::Laplacian, 64), 1e-12, 100).unwrap();
    let phi_err = lap.phi_p.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    let shift = shift_invariance_check(
        &Preset::Drift.coefficients(),
        0.75,
        &unit_grid(64),
        DriftScheme::Upwind,
        1e-12,
    )
    .unwrap();
    let op = operator(Preset::Drift, 64);
    let e = principal_eigenpair(&op, 1e-12, 1000).unwrap();
    let (dense, positive) = dense_principal(&op);
    let gap = (e.lambda_p - dense).abs();
    outcome(
        lap.lambda_p.abs() <= 1e-10 && phi_err <= 1e-9 && shift.passed() && gap <= 1e-10 && positive,
        format!(
            "laplacian lambda {:.1e}, |phi-1| {:.1e}; shift margin {:.1e}; dense gap {:.1e}",
            lap.lambda_p, phi_err, shift.worst_margin, gap
        ),
    )
}

fn random_data(grid: &TorusGrid, seed: u64, lo: f64, hi: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridFunction::new(
        grid.clone(),
        (0..grid.len()).map(|_| rng.random_range(lo..hi)).collect(),
    )
    .unwrap()
}

fn liouville_decay_rate() -> Outcome {
    let op = operator(Preset::CosineWell, 64);
    let starts = [
        random_data(&op.grid, 1, 0.0, 1.0),
        random_data(&op.grid, 2, -1.0, 1.0),
        random_data(&op.grid, 3, -5.0, 2.0),
    ];
    let r = liouville_decay(&op, &starts, 1e-8, 1000.0, 1.0 / 64.0).unwrap();
    let report = r.to_report(0.05, 1e-8);
    let rates: Vec<String> = r.runs.iter().map(|run| format!("{:.5}", run.rate)).collect();
    outcome(
        report.passed(),
        format!(
            "lambda_p {:.6}, rates [{}], worst relative error {:.2e}",
            r.lambda_p,
            rates.join(", "),
            r.max_relative_error()
        ),
    )
}

fn truncation_convergence() -> Outcome {
    let r = dirichlet_truncation(
        &Preset::Truncation.coefficients(),
        &truncation_forcing(),
        &[8.0, 16.0, 32.0, 64.0],
        32,
        None,
        1e-12,
    )
    .unwrap();
    let last = *r.differences.last().unwrap();
    let margin = r.runs.iter().map(|x| x.domination_margin).fold(f64::INFINITY, f64::min);
    let diffs: Vec<String> = r.differences.iter().map(|d| format!("{d:.2e}")).collect();
    outcome(
        r.strictly_decreasing() && last <= 1e-6 && r.dominated(),
        format!(
            "core differences [{}], domination margin {:.3e}",
            diffs.join(", "),
            margin
        ),
    )
}

fn nonexistence_surrogate() -> Outcome {
    let op = operator(Preset::Laplacian, 32);
    let u0 = random_data(&op.grid, 4, -1.0, 1.0);
    let m = mean_growth(&op, &ForcingField::constant(1.0), &u0, (10.0, 50.0), 1.0 / 32.0).unwrap();
    outcome(
        (m.slope - 1.0).abs() <= 0.05,
        format!("mean slope {:.12} on [10, 50]", m.slope),
    )
}

fn ap_forcing() -> Outcome {
    let op = operator(Preset::Damped, 32);
    let u0 = GridFunction::new(op.grid.clone(), vec![0.0; 32]).unwrap();
    let r = ap_forcing_experiment(
        &op,
        &quasi_periodic_forcing(),
        &u0,
        &ApForcingParams::standard(1.0 / 32.0),
    )
    .unwrap();
    let scan = r.scan.as_ref().unwrap();
    outcome(
        scan.max_gap <= 50.0 && r.response_sup.is_finite() && !scan.taus_found.is_empty(),
        format!(
            "response sup {:.4}, {} almost periods of {} shifts, max gap {:.3}, quasi-period hits {}/{}",
            r.response_sup,
            scan.taus_found.len(),
            scan.scanned,
            scan.max_gap,
            r.candidates_hit,
            r.quasi_period_candidates.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "1 approximation bound for phi_n",
            Duration::from_secs(30),
            approximation_bound,
        ),
        (
            "2 integral lower bound F(m)",
            Duration::from_secs(10),
            integral_lower_bound,
        ),
        ("3 u2 boundedness sweep", Duration::from_secs(120), u2_boundedness),
        (
            "4 u2 not almost periodic, b almost periodic",
            Duration::from_secs(60),
            non_almost_periodicity,
        ),
        ("5 eigensolver exactness", Duration::from_secs(60), eigen_exactness),
        ("6 Liouville decay rate", Duration::from_secs(60), liouville_decay_rate),
        (
            "7 truncation convergence under supersolution",
            Duration::from_secs(120),
            truncation_convergence,
        ),
        (
            "8 mean growth without damping",
            Duration::from_secs(60),
            nonexistence_surrogate,
        ),
        ("9 almost periodic forcing", Duration::from_secs(120), ap_forcing),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let ok = out.passed && elapsed <= limit;
        if !ok {
            failures += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.2}s, limit {}s]",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
