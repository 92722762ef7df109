//! Acceptance criteria 1-10. Each test prints one PASS/FAIL line and asserts it.

use num_complex::Complex64 as C64;
use qspforge::bivariate::{bivar_forward, frt_counterexample, necessary_condition_check, Verdict, VariableSchedule};
use qspforge::functionals::{bernstein_szego_moments, contour_quadrature, residue_functional};
use qspforge::gqsp::{biorthogonality, find_angles_from_pair, gqsp_forward, unitarity_defect, GqspAngles, Seed};
use qspforge::lcuplan::{hermite_sweep, TestFunction};
use qspforge::opqsp::{
    family, family_functional, find_angles_from_roots, norm_bound_ratios, recurrence_to_angles_stepwise,
    recurrence_to_polys, transfer_products, FamilySpec, OpqspAngles, DEFAULT_OMEGA1,
};
use qspforge::polycore::{circle_points, coeff_error, poly_roots, ComplexPoly, LaurentPoly};
use qspforge::su11::{
    find_angles_from_target, nu_to_angles, rogers_szego_nu, su11_protocol_pair, szego_forward, Su11Angles,
    VerblunskyCoeffs,
};
use qspforge::verify::{verify_gate_level, UnitaryModel, VariantAngles};
use qspforge::{QspError, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

// Spec tolerances, pinned.
const FAMILY_TOL: f64 = 1e-9;
const FAMILY_BUDGET: Duration = Duration::from_secs(5);
const HERMITE_ANGLE_TOL: f64 = 1e-12;
const ROOT_PIPELINE_TOL: f64 = 1e-8;
const ROOT_PIPELINE_BUDGET: Duration = Duration::from_secs(30);
const CIRCLE_SAMPLES: usize = 256;
const GQSP_UNITARITY_TOL: f64 = 1e-11;
const GQSP_REBUILD_TOL: f64 = 1e-8;
const GQSP_BIORTH_TOL: f64 = 1e-8;
const GQSP_BUDGET: Duration = Duration::from_secs(60);
const SU11_NU_TOL: f64 = 1e-7;
const ROGERS_SZEGO_TOL: f64 = 1e-10;
const GATE_TOL: f64 = 1e-10;
const DECAY_MARGIN: f64 = 0.1;
const BIVAR_BUDGET: Duration = Duration::from_secs(60);
const RESIDUE_TOL: f64 = 1e-8;
const NODE_DOUBLING_TOL: f64 = 1e-10;
const TWO_CHEBYSHEV_TOL: f64 = 1e-8;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn report(criterion: u32, pass: bool, detail: String) {
    println!("criterion {criterion:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_family_round_trips() {
    let start = Instant::now();
    let specs = [
        FamilySpec::Hermite { gamma: 1.0 },
        FamilySpec::Hermite { gamma: 2.0 },
        FamilySpec::JacobiShifted { lambda: 0.0 },
        FamilySpec::JacobiShifted { lambda: 0.5 },
        FamilySpec::Chebyshev { gamma: 1.0, kappa: 1.0 },
        FamilySpec::TwoChebyshev { gamma: 1.0, a: 0.3, omega1: PI / 6.0 },
    ];
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for spec in specs {
        match family(&spec, 12, &tol()) {
            Ok(f) => {
                let want = recurrence_to_polys(&f.recurrence, 12);
                let prods = transfer_products(&f.angles);
                for n in 0..=12 {
                    worst = worst.max(coeff_error(prods[n].m[0][0].coeffs(), want[n].coeffs()));
                }
            }
            Err(e) => errors.push(format!("{spec:?}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        errors.is_empty() && worst <= FAMILY_TOL && elapsed < FAMILY_BUDGET,
        format!("max rel coeff err {worst:.2e} (<= {FAMILY_TOL:e}), {elapsed:.2?}, errors {errors:?}"),
    );
}

#[test]
fn criterion_02_hermite_angles() {
    let gamma: f64 = 2.0;
    let f = family(&FamilySpec::Hermite { gamma }, 3, &tol()).unwrap();
    let ang = recurrence_to_angles_stepwise(&f.recurrence, f.omega1, &tol()).unwrap();
    let cot2 = 1.0 / ang.omega[1].tan();
    let cot3 = 1.0 / ang.omega[2].tan();
    let e2 = (cot2 - (PI / 2.0).sqrt() * gamma).abs();
    let e3 = (cot3 - (2.0 / PI).sqrt() * gamma / 2.0).abs();
    report(
        2,
        e2 <= HERMITE_ANGLE_TOL && e3 <= HERMITE_ANGLE_TOL,
        format!("cot w2 = {cot2:.15} (err {e2:.1e}), cot w3 = {cot3:.15} (err {e3:.1e})"),
    );
}

/// Monic targets with distinct real roots in [-2, 2], pairwise gap >= 0.05.
fn root_targets(count: usize, seed: u64) -> Vec<ComplexPoly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=10);
            loop {
                let mut r: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
                r.sort_by(f64::total_cmp);
                if r.windows(2).all(|w| w[1] - w[0] >= 0.05) {
                    let roots: Vec<C64> = r.iter().map(|&x| C64::new(x, 0.0)).collect();
                    break ComplexPoly::from_roots(&roots);
                }
            }
        })
        .collect()
}

struct RootRun {
    angles: Vec<OpqspAngles>,
    rejected: usize,
    wrong: Vec<String>,
    worst: f64,
    elapsed: Duration,
}

fn root_pipeline() -> RootRun {
    let start = Instant::now();
    let mut run = RootRun { angles: vec![], rejected: 0, wrong: vec![], worst: 0.0, elapsed: Duration::ZERO };
    for (k, t) in root_targets(100, 2024).iter().enumerate() {
        match find_angles_from_roots(t, DEFAULT_OMEGA1, &tol()) {
            Ok(s) => {
                let rebuilt = transfer_products(&s.angles).pop().unwrap();
                let err = coeff_error(rebuilt.m[0][0].coeffs(), t.coeffs());
                run.worst = run.worst.max(err);
                if err > ROOT_PIPELINE_TOL {
                    run.wrong.push(format!("#{k}: err {err:.2e}"));
                }
                run.angles.push(s.angles);
            }
            Err(QspError::NotQuasiDefinite { .. }) => run.rejected += 1,
            Err(e) => run.wrong.push(format!("#{k}: {e}")),
        }
    }
    run.elapsed = start.elapsed();
    run
}

#[test]
fn criterion_03_opqsp_root_pipeline() {
    let run = root_pipeline();
    // the singular moment matrix of a double root must be rejected, not synthesized
    let degenerate = find_angles_from_roots(&ComplexPoly::from_real(&[0.25, -1.0, 1.0]), DEFAULT_OMEGA1, &tol());
    let degenerate_ok = matches!(
        degenerate,
        Err(QspError::NotQuasiDefinite { .. }) | Err(QspError::DuplicateRoots { .. }) | Err(QspError::HigherOrderPole { .. })
    );
    report(
        3,
        run.wrong.is_empty() && degenerate_ok && run.elapsed < ROOT_PIPELINE_BUDGET,
        format!(
            "synthesized {}, rejected {}, worst rel err {:.2e} (<= {ROOT_PIPELINE_TOL:e}), {:.2?}, wrong {:?}, double root -> {:?}",
            run.angles.len(),
            run.rejected,
            run.worst,
            run.elapsed,
            run.wrong,
            degenerate.err().map(|e| e.code())
        ),
    );
}

#[test]
fn criterion_04_norm_bound() {
    let run = root_pipeline();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for ang in &run.angles {
        let polys: Vec<ComplexPoly> = transfer_products(ang).iter().map(|m| m.m[0][0].clone()).collect();
        for r in norm_bound_ratios(&polys, ang, CIRCLE_SAMPLES).into_iter().skip(1) {
            worst = worst.max(r);
            if r >= 1.0 {
                violations += 1;
            }
        }
    }
    report(
        4,
        violations == 0 && !run.angles.is_empty(),
        format!("{} sequences, max |P_i|/alpha_i = {worst:.6}, violations {violations}", run.angles.len()),
    );
}

#[test]
fn criterion_05_gqsp_self_consistency() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_u, mut worst_r, mut worst_b): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut errors = Vec::new();
    for k in 0..100 {
        let n = rng.gen_range(1..=8);
        let theta: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.2..=1.2)).collect();
        let phi: Vec<f64> = (0..=n).map(|_| rng.gen_range(-PI..PI)).collect();
        let seq = gqsp_forward(&GqspAngles::new(theta, phi, Seed::Rotation));
        for i in 0..=n {
            worst_u = worst_u.max(unitarity_defect(&seq.p[i], &seq.q[i], CIRCLE_SAMPLES));
        }
        match find_angles_from_pair(&seq.p[n], &seq.q[n], &tol()) {
            Ok(s) => worst_r = worst_r.max(s.rebuild_err),
            Err(e) => errors.push(format!("#{k} synth: {e}")),
        }
        match biorthogonality(&seq, &tol()) {
            Ok(b) => worst_b = worst_b.max(b.max_offdiag_rel),
            Err(e) => errors.push(format!("#{k} biorth: {e}")),
        }
    }
    let elapsed = start.elapsed();
    report(
        5,
        errors.is_empty()
            && worst_u <= GQSP_UNITARITY_TOL
            && worst_r <= GQSP_REBUILD_TOL
            && worst_b <= GQSP_BIORTH_TOL
            && elapsed < GQSP_BUDGET,
        format!("unitarity {worst_u:.1e}, rebuild {worst_r:.1e}, biorth {worst_b:.1e}, {elapsed:.2?}, errors {errors:?}"),
    );
}

fn q_binomial(n: usize, k: usize, q: f64) -> f64 {
    (0..k).map(|j| (1.0 - q.powi((n - j) as i32)) / (1.0 - q.powi(j as i32 + 1))).product()
}

#[test]
fn criterion_06_su11_zeros_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut max_mod, mut worst_nu): (f64, f64) = (0.0, 0.0);
    let mut errors = Vec::new();
    for k in 0..100 {
        let n = rng.gen_range(1..=10);
        let nu: Vec<C64> = (0..n).map(|_| C64::from_polar(rng.gen_range(0.0..=0.9), rng.gen_range(-PI..PI))).collect();
        let nu = VerblunskyCoeffs::new(nu).unwrap();
        let sz = szego_forward(&nu);
        for i in 1..=n {
            match poly_roots(&sz.phat[i], tol().root_tol) {
                Ok(r) => max_mod = r.iter().map(|z| z.norm()).fold(max_mod, f64::max),
                Err(e) => errors.push(format!("#{k} roots: {e}")),
            }
        }
        match find_angles_from_target(&sz.phat[n], &tol()) {
            Ok(s) => {
                worst_nu = s.nu.nu.iter().zip(&nu.nu).map(|(a, b)| (a - b).norm()).fold(worst_nu, f64::max)
            }
            Err(e) => errors.push(format!("#{k} synth: {e}")),
        }
    }
    let q = 0.25;
    let mut worst_rs: f64 = 0.0;
    for n in 1..=6 {
        let want = ComplexPoly::from_real(
            &(0..=n)
                .map(|j| {
                    let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * q_binomial(n, j, q) * q.powf((n - j) as f64 / 2.0)
                })
                .collect::<Vec<_>>(),
        );
        let nu = rogers_szego_nu(C64::new(q, 0.0), n).unwrap();
        worst_rs = worst_rs.max(coeff_error(szego_forward(&nu).phat[n].coeffs(), want.coeffs()));
        let ang = nu_to_angles(&nu);
        let (p, _) = su11_protocol_pair(&ang);
        worst_rs = worst_rs.max(coeff_error(p.scale(ang.alpha[n]).coeffs(), want.coeffs()));
    }
    report(
        6,
        errors.is_empty() && max_mod < 1.0 && worst_nu <= SU11_NU_TOL && worst_rs <= ROGERS_SZEGO_TOL,
        format!("max root modulus {max_mod:.6}, nu err {worst_nu:.1e}, Rogers-Szego err {worst_rs:.1e}, errors {errors:?}"),
    );
}

#[test]
fn criterion_07_gate_level_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_op, mut worst_su): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let u = UnitaryModel::random(4, &mut rng);
        let tau = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
        let omega = (0..3).map(|_| rng.gen_range(0.2..1.3)).collect();
        let r = verify_gate_level(&VariantAngles::Opqsp(OpqspAngles::new(tau, omega)), &u).unwrap();
        worst_op = worst_op.max(r.max_coeff_err);
        let theta = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let phi = (0..3).map(|_| rng.gen_range(-PI..PI)).collect();
        let r = verify_gate_level(&VariantAngles::Su11(Su11Angles::from_theta_phi(theta, phi)), &u).unwrap();
        worst_su = worst_su.max(r.max_coeff_err);
    }
    report(
        7,
        worst_op <= GATE_TOL && worst_su <= GATE_TOL,
        format!("max entry err opqsp {worst_op:.1e}, su11 {worst_su:.1e} (<= {GATE_TOL:e})"),
    );
}

#[test]
fn criterion_08_hermite_function_plan() {
    let gamma = 2.0;
    let ns: Vec<usize> = (4..=20).collect();
    let s = hermite_sweep(&TestFunction::ExpGauss { center: 1.0 }, gamma, &ns, &tol()).unwrap();
    report(
        8,
        s.error_decay_rate >= gamma - DECAY_MARGIN && s.envelope_monotone,
        format!(
            "decay rate {:.3} (needs >= {:.1}), envelope monotone {}, errors n=4: {:.2e}, n=20: {:.2e}",
            s.error_decay_rate,
            gamma - DECAY_MARGIN,
            s.envelope_monotone,
            s.circle_errors[0],
            s.circle_errors[ns.len() - 1]
        ),
    );
}

#[test]
fn criterion_09_bivariate_counterexample() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for corrected in [false, true] {
        let (p, q) = frt_counterexample(corrected);
        let c = necessary_condition_check(&p, &q, None, &tol()).unwrap();
        let degrees: Vec<Option<usize>> = c.systems.iter().map(|s| s.degree).collect();
        pass &= c.verdict == Verdict::Fail;
        if corrected {
            // degree 3 against the bound b_i <= 2
            pass &= c.systems.iter().any(|s| s.degree == Some(3));
            pass &= c.schedules.iter().all(|r| r.violations.iter().any(|v| v.bound <= 2));
        }
        notes.push(format!("{}: {:?} degrees {degrees:?}", if corrected { "corrected" } else { "verbatim" }, c.verdict));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut passed = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let picks: String = (0..n).map(|_| if rng.gen_bool(0.5) { 'Z' } else { 'W' }).collect();
        let sched = VariableSchedule::parse(&picks).unwrap();
        let theta = (0..=n).map(|_| rng.gen_range(0.2..1.2)).collect();
        let phi = (0..=n).map(|_| rng.gen_range(-PI..PI)).collect();
        let seq = bivar_forward(&GqspAngles::new(theta, phi, Seed::Rotation), &sched).unwrap();
        let c = necessary_condition_check(&seq.p[n], &seq.q[n], None, &tol()).unwrap();
        if c.verdict == Verdict::Pass {
            passed += 1;
        }
    }
    let elapsed = start.elapsed();
    pass &= passed == 50 && elapsed < BIVAR_BUDGET;
    report(9, pass, format!("{notes:?}, forward pairs passing {passed}/50, {elapsed:.2?}"));
}

#[test]
fn criterion_10_functional_cross_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_res: f64 = 0.0;
    let mut instances = 0;
    while instances < 50 {
        let np = rng.gen_range(1..=5);
        let pr: Vec<C64> = (0..np).map(|_| C64::from_polar(rng.gen_range(0.05..0.9), rng.gen_range(-PI..PI))).collect();
        // non-degenerate: simple, well-separated poles
        if !pr.iter().enumerate().all(|(i, a)| pr[i + 1..].iter().all(|b| (a - b).norm() > 0.05)) {
            continue;
        }
        let nq = rng.gen_range(0..=3);
        let qr: Vec<C64> = (0..nq).map(|_| C64::from_polar(rng.gen_range(1.3..3.0), rng.gen_range(-PI..PI))).collect();
        let p = ComplexPoly::from_roots(&pr);
        let q = ComplexPoly::from_roots(&qr);
        let qt = LaurentPoly::from_poly(&q, -(q.degree() as i64));
        let f = LaurentPoly::new((0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(), -1);
        let shift = rng.gen_range(-2..4);
        let v = residue_functional(shift, &p, &qt, &f, &tol()).unwrap();
        let g = |z: C64| f.eval(z) * z.powi(shift as i32) / (z * p.eval(z) * qt.eval(z));
        let quad = contour_quadrature(g, C64::new(0.0, 0.0), 1.15, 8192);
        worst_res = worst_res.max((v - quad).norm() / v.norm().max(1.0));
        instances += 1;
    }

    let mut worst_bs: f64 = 0.0;
    let mut bs_converged = true;
    for _ in 0..20 {
        let n = rng.gen_range(1..=6);
        let roots: Vec<C64> = (0..n).map(|_| C64::from_polar(rng.gen_range(0.0..0.8), rng.gen_range(-PI..PI))).collect();
        let b = bernstein_szego_moments(&ComplexPoly::from_roots(&roots), n, &tol()).unwrap();
        bs_converged &= b.converged;
        worst_bs = worst_bs.max(b.last_change);
    }

    let (gamma, a) = (1.0, 0.3);
    let spec = FamilySpec::TwoChebyshev { gamma, a, omega1: PI / 6.0 };
    let fam = family(&spec, 5, &tol()).unwrap();
    let mut worst_orth: f64 = 0.0;
    for n in 0..=5 {
        for m in 0..=5 {
            let v = family_functional(&spec, &(&fam.polys[n] * &fam.polys[m]), &tol()).unwrap();
            let want = match (n == m, n) {
                (false, _) => 0.0,
                // the n = 0 norm is L[1] = 1 / (4 gamma^2 a^2)
                (true, 0) => 1.0 / (4.0 * gamma * gamma * a * a),
                (true, _) => 1.0 / (2.0 * gamma).powi(2 * n as i32),
            };
            worst_orth = worst_orth.max((v - C64::new(want, 0.0)).norm());
        }
    }
    report(
        10,
        worst_res <= RESIDUE_TOL && bs_converged && worst_bs <= NODE_DOUBLING_TOL && worst_orth <= TWO_CHEBYSHEV_TOL,
        format!("residue vs contour {worst_res:.1e}, node doubling {worst_bs:.1e}, two-Chebyshev orthogonality {worst_orth:.1e}"),
    );
}

#[test]
fn circle_points_cover_unit_circle() {
    // sanity for the sampling used by criteria 4 and 5
    let pts = circle_points(CIRCLE_SAMPLES);
    assert_eq!(pts.len(), CIRCLE_SAMPLES);
    assert!(pts.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
}
