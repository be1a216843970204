//! Acceptance gate: one line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use qmap_enm::algebra::{density_from_bloch, BlochVector};
use qmap_enm::analysis::{
    analyze, blp_scan, build_timeline, classify, cp_screen, divisibility_scan, linear_grid, AnalysisOptions,
    TimelineOptions, Verdict, CP_TOLERANCE,
};
use qmap_enm::bloch::{consistency_check, integrate, positivity_escape, RateFunctions};
use qmap_enm::families::{Family, PauliAxis};
use qmap_enm::rates::{generator_from_trajectory, pauli_rates_from_eigenvalues, pauli_rates_from_weights, RateSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;
const CLOSED_FORM_TOL: f64 = 1e-9;
const GENERATOR_TOL: f64 = 1e-6;
const SMALL_T_TOL: f64 = 1e-6;
const ASYMPTOTE_TOL: f64 = 1e-6;
const RIGHT_LIMIT_TOL: f64 = 1e-8;
const ONSET_STABILITY_TOL: f64 = 1e-8;
const CHOI_TOL: f64 = 1e-10;
const ZERO_RATE_TOL: f64 = 1e-12;
const ESCAPE_TOL: f64 = 2e-3;
const BLP_TOL: f64 = 1e-10;
const HALVING_RATIO: f64 = 8.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(checks: &[(&str, bool)], extra: String) -> Outcome {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = if failed.is_empty() { extra } else { format!("failed: {}; {extra}", failed.join(", ")) };
    Outcome { pass: failed.is_empty(), detail }
}

fn mixture(w: [f64; 3], c: f64) -> Family {
    Family::mixture(w, c).expect("valid mixture")
}

fn convex_weights(rng: &mut ChaCha8Rng, floor: f64) -> [f64; 3] {
    loop {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let w = [lo, hi - lo, 1.0 - hi];
        if w.iter().all(|&x| x >= floor) {
            return w;
        }
    }
}

fn hall_reproduction() -> Outcome {
    let start = Instant::now();
    let hall = mixture([0.5, 0.5, 0.0], 2.0);
    let Family::Mixture { spec, profile } = &hall else { unreachable!() };
    let (mut analytic, mut generator) = (0.0f64, 0.0f64);
    for k in 0..=1000 {
        let t = if k == 0 { 1e-12 / 2.0 } else { 10.0 * k as f64 / 1000.0 };
        let exact = [0.5, 0.5, -t.tanh() / 2.0];
        let by_weights = pauli_rates_from_weights(spec, profile, t).unwrap().gamma;
        let d = hall.derivatives(t).unwrap();
        let by_eigen = pauli_rates_from_eigenvalues(d.lambda, d.lambda_dot).unwrap().gamma;
        let by_gen = generator_from_trajectory(|s| hall.affine_at(s), t, None).unwrap().pauli_rates().gamma;
        for j in 0..3 {
            analytic = analytic.max((by_weights[j] - exact[j]).abs()).max((by_eigen[j] - exact[j]).abs());
            generator = generator.max((by_gen[j] - exact[j]).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        &[("closed-form routes", analytic <= CLOSED_FORM_TOL), ("generator route", generator <= GENERATOR_TOL), ("runtime", elapsed < 1.0)],
        format!("max analytic err {analytic:.2e}, generator err {generator:.2e}, {elapsed:.3}s"),
    )
}

fn small_time_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst, mut enm) = (0.0f64, 0);
    for _ in 0..200 {
        let w = convex_weights(&mut rng, 0.01);
        let c = rng.gen_range(0.5..2.0);
        let fam = mixture(w, c);
        let g = fam.rates_at(1e-8).unwrap();
        for j in 0..3 {
            worst = worst.max((g[j] - c * w[j] / 2.0).abs() / c);
        }
        if analyze(&fam, &AnalysisOptions::default()).unwrap().verdict.is_enm() {
            enm += 1;
        }
    }
    outcome(&[("t->0 limit", worst <= SMALL_T_TOL), ("no ENM verdicts", enm == 0)], format!("max |γ−cx/2|/c {worst:.2e}, ENM verdicts {enm}"))
}

fn two_way_mixing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut sign_ok, mut asym_err, mut origin_err, mut verdicts_ok) = (true, 0.0f64, 0.0f64, true);
    let c = 1.0;
    for _ in 0..100 {
        let a = rng.gen_range(0.05..0.95);
        let zero = rng.gen_range(0..3);
        let mut w = [0.0; 3];
        w[(zero + 1) % 3] = a;
        w[(zero + 2) % 3] = 1.0 - a;
        let tl = build_timeline(&mixture(w, c), &TimelineOptions::default()).unwrap();
        for s in &tl.samples[1..] {
            let r = s.rates.as_ref().unwrap();
            sign_ok &= (0..3).all(|i| (r[i] < 0.0) == (i == zero));
        }
        asym_err = asym_err.max((tl.asymptotes[zero].value().unwrap() + c / 4.0).abs());
        origin_err = origin_err.max(tl.samples[0].rates.as_ref().unwrap()[zero].abs());
        verdicts_ok &= classify(&tl, 1e-4, 1e-9).verdict == Verdict::EnmStrong;
    }
    outcome(
        &[
            ("exactly one negative rate", sign_ok),
            ("asymptote -c/4", asym_err <= ASYMPTOTE_TOL),
            ("zero right-limit", origin_err <= RIGHT_LIMIT_TOL),
            ("ENM_strong", verdicts_ok),
        ],
        format!("asymptote err {asym_err:.2e}, |γ(0+)| max {origin_err:.2e}"),
    )
}

fn example_two() -> Outcome {
    let fam = mixture([0.2, 0.4, 0.4], 1.0);
    let reports: Vec<_> = [400, 800]
        .iter()
        .map(|&n| analyze(&fam, &AnalysisOptions { samples: n, ..Default::default() }).unwrap())
        .collect();
    let t_star: Vec<f64> = reports.iter().map(|r| r.t_star.unwrap_or(f64::NAN)).collect();
    let tl = build_timeline(&fam, &TimelineOptions::default()).unwrap();
    let tail_negative = tl.samples.iter().filter(|s| s.t > t_star[0]).all(|s| s.rates.as_ref().unwrap()[0] < 0.0);
    outcome(
        &[
            ("verdict QENM_strong", reports[0].verdict == Verdict::QenmStrong),
            ("t* stable", (t_star[0] - t_star[1]).abs() <= ONSET_STABILITY_TOL),
            ("γ1 < 0 after t*", tail_negative),
        ],
        format!(
            "verdict {}, t* {:.12} / {:.12}, asymptote {:?}",
            reports[0].verdict, t_star[0], t_star[1], reports[0].asymptote
        ),
    )
}

fn affine_mixture() -> Outcome {
    let fam = mixture([0.6, 0.6, -0.2], 1.0);
    let report = analyze(&fam, &AnalysisOptions::default()).unwrap();
    let g3 = report.rates_at_zero.as_ref().unwrap()[2];
    let grid = linear_grid(10.0, 100).unwrap();
    let screen = cp_screen(|t| fam.affine_at(t), &grid, CP_TOLERANCE);
    let choi_err = screen
        .points
        .iter()
        .map(|p| (p.min_eigenvalue.unwrap() + 0.2 * 0.5 * (-(-p.t).exp_m1())).abs())
        .fold(0.0, f64::max);
    outcome(
        &[("γ3(0+) = -0.1", (g3 + 0.1).abs() <= CLOSED_FORM_TOL), ("Choi = -0.2p", choi_err <= CHOI_TOL), ("NonCP", report.verdict == Verdict::NonCP)],
        format!("γ3(0+) {g3:.12}, Choi err {choi_err:.2e}, verdict {}", report.verdict),
    )
}

fn depolarizing() -> Outcome {
    let fam = Family::depolarizing(1.0).unwrap();
    let report = analyze(&fam, &AnalysisOptions::default()).unwrap();
    let tl = build_timeline(&fam, &TimelineOptions::default()).unwrap();
    let (mut equal_positive, mut route_err) = (true, 0.0f64);
    for s in &tl.samples {
        let r = s.rates.as_ref().unwrap();
        equal_positive &= r[0] > 0.0 && r[0] == r[1] && r[1] == r[2];
        let t = if s.t == 0.0 { tl.right_limit_time } else { s.t };
        let g = generator_from_trajectory(|u| fam.affine_at(u), t, None).unwrap().pauli_rates().gamma;
        for j in 0..3 {
            route_err = route_err.max((g[j] - r[j]).abs());
        }
    }
    outcome(
        &[("Markovian", report.verdict == Verdict::Markovian), ("equal positive rates", equal_positive), ("route agreement", route_err <= GENERATOR_TOL)],
        format!("verdict {}, generator err {route_err:.2e}", report.verdict),
    )
}

fn nonunital_closed_forms() -> Outcome {
    let ad = Family::amplitude_damping(1.0).unwrap();
    let gad = Family::generalized_amplitude_damping(1.0, 0.0).unwrap();
    let (mut ad_g3, mut ad_relax, mut ad_other, mut gad_pm, mut gad_g3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..=200 {
        let t = 10.0 * k as f64 / 200.0;
        let r = ad.rates_at(t).unwrap();
        ad_other = ad_other.max(r[0].abs());
        ad_relax = ad_relax.max((r[1] - 1.0).abs());
        ad_g3 = ad_g3.max(r[2].abs());
        let r = gad.rates_at(t).unwrap();
        gad_pm = gad_pm.max((r[0] - 0.5).abs()).max((r[1] - 0.5).abs());
        gad_g3 = gad_g3.max(r[2].abs());
    }
    outcome(
        &[
            ("AD γ3", ad_g3 <= ZERO_RATE_TOL),
            ("AD relaxation", ad_relax <= CLOSED_FORM_TOL),
            ("AD other", ad_other <= CLOSED_FORM_TOL),
            ("GAD γ±", gad_pm <= CLOSED_FORM_TOL),
            ("GAD γ3", gad_g3 <= ZERO_RATE_TOL),
        ],
        format!("AD errs {ad_g3:.1e}/{ad_relax:.1e}/{ad_other:.1e}, GAD errs {gad_pm:.1e}/{gad_g3:.1e}"),
    )
}

fn positivity_escape_mechanism() -> Outcome {
    let linear = positivity_escape(0.5, &RateFunctions::constant(0.0, 0.5, 0.0), BlochVector::ORIGIN, 1e-3);
    let linear_t = linear.as_ref().map(|r| r.escape_time).unwrap_or(f64::NAN);
    let fast = positivity_escape(0.5, &RateFunctions::constant(0.2, 0.7, 0.0), BlochVector::ORIGIN, 1e-3);
    let fast_t = fast.as_ref().map(|r| r.escape_time).unwrap_or(f64::NAN);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut escapes = 0;
    for _ in 0..500 {
        let a = rng.gen_range(0.0..1.0);
        let b = rng.gen_range(-1.0..1.0);
        let g = rng.gen_range(0.0..0.5);
        let (w1, w2) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
        let alpha = move |t: f64| a * (1.0 + 0.5 * (w1 * t).sin());
        let rates = RateFunctions::from_fns(alpha, move |t| b * alpha(t) * (w2 * t).cos(), move |t| g * (w1 * t).cos().powi(2));
        let r0 = loop {
            let r = BlochVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if r.norm() <= 1.0 {
                break r;
            }
        };
        let traj = integrate(&rates, r0, 100.0, 0.01).unwrap();
        if traj.first_violation.is_some() || !traj.is_complete() {
            escapes += 1;
        }
    }
    outcome(
        &[("linear escape at 1", (linear_t - 1.0).abs() <= ESCAPE_TOL), ("accelerated escape", fast_t < 1.0), ("no escapes for α ≥ |β|", escapes == 0)],
        format!("escape times {linear_t:.6} / {fast_t:.6}, escapes {escapes}/500"),
    )
}

fn route_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = convex_weights(&mut rng, 0.0);
        let c = rng.gen_range(0.5..2.0);
        let fam = mixture(w, c);
        let Family::Mixture { spec, profile } = &fam else { unreachable!() };
        for k in 0..200 {
            let t = if k == 0 { 1e-12 / c } else { 10.0 / c * k as f64 / 199.0 };
            let a = pauli_rates_from_weights(spec, profile, t).unwrap().gamma;
            let d = fam.derivatives(t).unwrap();
            let b = pauli_rates_from_eigenvalues(d.lambda, d.lambda_dot).unwrap().gamma;
            let g = generator_from_trajectory(|s| fam.affine_at(s), t, None).unwrap().pauli_rates().gamma;
            for j in 0..3 {
                worst = worst.max((a[j] - b[j]).abs()).max((a[j] - g[j]).abs()).max((b[j] - g[j]).abs());
            }
        }
    }
    outcome(&[("three routes agree", worst <= GENERATOR_TOL)], format!("max disagreement {worst:.2e}"))
}

fn divisibility_consistency() -> Outcome {
    let hall = mixture([0.5, 0.5, 0.0], 2.0);
    let grid = linear_grid(5.0, 20).unwrap();
    let report = divisibility_scan(|t| hall.affine_at(t), &grid, CP_TOLERANCE).unwrap();
    let tested: Vec<_> = report.pairs.iter().filter(|p| p.t2 > p.t1 && p.t1 >= 0.05).collect();
    let hall_ok = !tested.is_empty() && tested.iter().all(|p| p.min_eigenvalue.is_some_and(|m| m < -CP_TOLERANCE));
    let semigroups_ok = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z].iter().all(|&axis| {
        let fam = Family::semigroup(axis, 1.0).unwrap();
        divisibility_scan(|t| fam.affine_at(t), &grid, CP_TOLERANCE).unwrap().violations().count() == 0
    });
    outcome(
        &[("Hall pairs negative", hall_ok), ("semigroups divisible", semigroups_ok)],
        format!("{} Hall pairs with t2 > t1 >= 0.05", tested.len()),
    )
}

fn blp_witness() -> Outcome {
    let hall = mixture([0.5, 0.5, 0.0], 2.0);
    let grid = linear_grid(10.0, 400).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_rise = 0.0f64;
    let mut state = || loop {
        let r = BlochVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if r.norm() <= 1.0 {
            return density_from_bloch(r);
        }
    };
    let mut all_monotone = true;
    for _ in 0..100 {
        let (a, b) = (state(), state());
        let report = blp_scan(|t| hall.affine_at(t), &a, &b, &grid).unwrap();
        all_monotone &= report.monotone;
        for pair in report.distances.windows(2) {
            worst_rise = worst_rise.max(pair[1] - pair[0]);
        }
    }
    outcome(&[("non-increasing", all_monotone && worst_rise <= BLP_TOL)], format!("largest step rise {worst_rise:.2e}"))
}

fn integrator_order() -> Outcome {
    let cases = [
        ("Hall", mixture([0.5, 0.5, 0.0], 2.0), BlochVector::new(1.0, 0.0, 0.0)),
        ("AD", Family::amplitude_damping(1.0).unwrap(), BlochVector::new(0.0, 0.0, -1.0)),
    ];
    let mut checks = Vec::new();
    let mut detail = Vec::new();
    for (name, fam, r0) in &cases {
        let coarse = consistency_check(fam, *r0, 5.0, 0.05).unwrap().max_deviation;
        let fine = consistency_check(fam, *r0, 5.0, 0.025).unwrap().max_deviation;
        checks.push((*name, coarse / fine >= HALVING_RATIO));
        detail.push(format!("{name} ratio {:.2}", coarse / fine));
    }
    outcome(&checks, detail.join(", "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("AC1 Hall map rates", hall_reproduction),
        ("AC2 three-way small-time limits", small_time_limits),
        ("AC3 two-way eternal negativity", two_way_mixing),
        ("AC4 quasi-eternal example", example_two),
        ("AC5 affine mixture not CP", affine_mixture),
        ("AC6 depolarizing Markovian", depolarizing),
        ("AC7 damping closed forms", nonunital_closed_forms),
        ("AC8 positivity escape", positivity_escape_mechanism),
        ("AC9 route cross-validation", route_cross_validation),
        ("AC10 divisibility consistency", divisibility_consistency),
        ("AC11 BLP witness", blp_witness),
        ("AC12 integrator order", integrator_order),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let o = run();
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
