//! LCU expansion in QSP-generated bases and the Hermite-series planner.

use crate::dd::CDd;
use crate::error::{QspError, Result};
use crate::functionals::gauss_hermite;
use crate::gqsp::{gqsp_forward, GqspAngles};
use crate::opqsp::{family, family_norm, FamilySpec};
use crate::polycore::{circle_points, coeff_error, ComplexPoly, ONE, ZERO};
use crate::su11::{nu_to_angles, szego_forward, VerblunskyCoeffs};
use crate::tol::Tolerances;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CIRCLE_SAMPLES: usize = 256;
/// Gauss-Hermite node cap for the planner's doubling loop.
pub const MAX_QUAD_NODES: usize = 1024;
pub const QUAD_STABLE: f64 = 1e-10;

/// A basis P_hat_0..P_hat_n with constants alpha_i, so the block-encoded
/// polynomials are P_hat_i / alpha_i.
#[derive(Clone, Debug)]
pub struct Basis {
    pub id: String,
    pub polys: Vec<ComplexPoly>,
    pub alpha: Vec<C64>,
    /// Ancillas the basis circuit needs beyond the LCU index register.
    pub ell: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    Monomial { n: usize },
    Opqsp { family: FamilySpec, n: usize },
    Gqsp { angles: GqspAngles },
    Su11 { nu: Vec<C64> },
}

impl Basis {
    pub fn build(spec: &BasisSpec, tol: &Tolerances) -> Result<Basis> {
        Ok(match spec {
            BasisSpec::Monomial { n } => Basis {
                id: format!("monomial(n={n})"),
                polys: (0..=*n).map(|k| ComplexPoly::monomial(k, ONE)).collect(),
                alpha: vec![ONE; n + 1],
                ell: 0,
            },
            BasisSpec::Opqsp { family: spec, n } => {
                let f = family(spec, *n, tol)?;
                Basis {
                    id: format!("opqsp({spec:?}, n={n})"),
                    alpha: (0..=*n).map(|i| C64::new(f.angles.alpha_at(i), 0.0)).collect(),
                    polys: f.polys,
                    ell: n + 1,
                }
            }
            BasisSpec::Gqsp { angles } => {
                let s = gqsp_forward(angles);
                let alpha = angles.alpha();
                Basis {
                    id: format!("gqsp(n={})", angles.steps()),
                    polys: s.p.iter().zip(&alpha).map(|(p, a)| p.scale(*a)).collect(),
                    alpha,
                    ell: 1,
                }
            }
            BasisSpec::Su11 { nu } => {
                let nu = VerblunskyCoeffs::new(nu.clone())?;
                let n = nu.nu.len();
                Basis {
                    id: format!("su11(n={n})"),
                    polys: szego_forward(&nu).phat,
                    alpha: nu_to_angles(&nu).alpha,
                    ell: n + 1,
                }
            }
        })
    }

    pub fn degree(&self) -> usize {
        self.polys.len() - 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LcuPlan {
    pub basis_id: String,
    pub v: Vec<C64>,
    pub v_norm1: f64,
    /// Truncation error bound carried by the plan (0 for exact expansions).
    pub eps_bound: f64,
    pub ancillas: usize,
    pub controlled_u_count: usize,
    pub reconstruction_err: f64,
    /// max |alpha_i| / min |alpha_i|.
    pub condition_estimate: f64,
}

/// v with target = sum v_i P_hat_i / alpha_i, by back-substitution from the top degree.
pub fn expand_in_basis(target: &ComplexPoly, basis: &Basis, tol: &Tolerances) -> Result<LcuPlan> {
    let n = basis.degree();
    if !target.is_zero() && target.degree() > n {
        return Err(QspError::DegreeExceedsBasis { target: target.degree(), basis: n });
    }
    for (i, p) in basis.polys.iter().enumerate() {
        if p.is_zero() || p.degree() != i {
            return Err(QspError::InvalidInput(format!("basis polynomial {i} has degree {}", p.degree())));
        }
    }
    // remainder and rebuild in double-double; high-degree bases cancel heavily
    let wide = |p: &ComplexPoly| -> Vec<CDd> { (0..=n).map(|k| CDd::from(p.coeff(k))).collect() };
    let polys: Vec<Vec<CDd>> = basis.polys.iter().map(wide).collect();
    let mut rem = wide(target);
    let mut c = vec![ZERO; n + 1];
    for k in (0..=n).rev() {
        c[k] = rem[k].to_c64() / basis.polys[k].lead();
        let ck = CDd::from(c[k]);
        for (r, q) in rem.iter_mut().zip(&polys[k]).take(k + 1) {
            *r = *r - ck * *q;
        }
    }
    let v: Vec<C64> = c.iter().zip(&basis.alpha).map(|(ci, a)| ci * a).collect();
    let mut acc = vec![CDd::from(ZERO); n + 1];
    for (q, ci) in polys.iter().zip(&c) {
        let ci = CDd::from(*ci);
        for (a, qk) in acc.iter_mut().zip(q) {
            *a = *a + ci * *qk;
        }
    }
    let rebuilt = ComplexPoly::new(acc.into_iter().map(CDd::to_c64).collect());
    let reconstruction_err = coeff_error(rebuilt.coeffs(), target.coeffs());
    if reconstruction_err > tol.solve_tol {
        return Err(QspError::ReconstructionMismatch { max_coeff_err: reconstruction_err });
    }
    let mags: Vec<f64> = basis.alpha.iter().map(|a| a.norm()).collect();
    let condition_estimate = mags.iter().fold(0.0f64, |a, &b| a.max(b)) / mags.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(LcuPlan {
        basis_id: basis.id.clone(),
        v_norm1: v.iter().map(|x| x.norm()).sum(),
        v,
        eps_bound: 0.0,
        ancillas: n + basis.ell,
        controlled_u_count: n,
        reconstruction_err,
        condition_estimate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LcuResources {
    pub ancillas: usize,
    pub select_depth_units: usize,
    pub prep_norm: f64,
}

/// Unary-encoded LCU over n + 1 basis circuits that each need `ell` ancillas.
pub fn lcu_resources(plan: &LcuPlan, ell: usize) -> LcuResources {
    let n = plan.v.len().saturating_sub(1);
    LcuResources { ancillas: n + ell, select_depth_units: n, prep_norm: plan.v_norm1 }
}

/// Functions available to the planner, evaluated on the real line and on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TestFunction {
    /// exp(-(x - center)^2)
    ExpGauss { center: f64 },
    Identity,
    /// cos(omega x)
    Cosine { omega: f64 },
    /// sum c_k x^k with real coefficients
    Polynomial { coeffs: Vec<f64> },
    /// exp(x^2); not square integrable against narrow Hermite weights
    ExpSquare,
}

impl TestFunction {
    pub fn eval(&self, x: C64) -> C64 {
        match self {
            TestFunction::ExpGauss { center } => (-(x - center).powi(2)).exp(),
            TestFunction::Identity => x,
            TestFunction::Cosine { omega } => (x * *omega).cos(),
            TestFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c),
            TestFunction::ExpSquare => (x * x).exp(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HermitePlan {
    pub plan: LcuPlan,
    pub gamma: f64,
    /// L[f P_hat_k] / chi_k, the coefficient of P_hat_k.
    pub coeffs: Vec<f64>,
    pub quad_nodes: usize,
    pub quad_converged: bool,
    /// Fitted r in |v_k| ~ C r^{-k} over k >= 1 (None with fewer than two nonzero v_k).
    pub v_decay_rate: Option<f64>,
    /// Geometric tail estimate sum_{k>n} C r^{-k}.
    pub tail_estimate: Option<f64>,
    /// max over circle samples of |f(z) - sum v_k P_hat_k(z) / alpha_k|.
    pub circle_error: f64,
    /// ||v||_1 / n^{1 + 3 gamma^2}.
    pub envelope_ratio: f64,
    pub l_f_squared: f64,
}

/// Hermite recurrence values P_hat_0..P_hat_n at x: P_{k+1} = (x - 1) P_k - (k / gamma^2) P_{k-1}.
fn hermite_values(x: C64, gamma: f64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(ONE);
    if n >= 1 {
        out.push(x - 1.0);
    }
    for k in 1..n {
        let next = (x - 1.0) * out[k] - out[k - 1] * (k as f64 / (gamma * gamma));
        out.push(next);
    }
    out
}

/// L[g] = gamma int g(x) exp(-gamma^2 (x-1)^2 / 2) dx on m Gauss-Hermite nodes,
/// for each of the returned sample columns.
fn hermite_quadrature(f: &TestFunction, gamma: f64, n: usize, m: usize) -> (Vec<f64>, f64) {
    let (t, w) = gauss_hermite(m);
    let sq2 = 2f64.sqrt();
    let parts: Vec<(Vec<f64>, f64)> = t
        .par_iter()
        .zip(w.par_iter())
        .map(|(&t, &w)| {
            let x = 1.0 + sq2 * t / gamma;
            let fx = f.eval(C64::new(x, 0.0)).re;
            let vals = hermite_values(C64::new(x, 0.0), gamma, n);
            (vals.iter().map(|p| w * sq2 * fx * p.re).collect(), w * sq2 * fx * fx)
        })
        .collect();
    let mut l = vec![0.0; n + 1];
    let mut l2 = 0.0;
    for (v, s) in parts {
        for (a, b) in l.iter_mut().zip(v) {
            *a += b;
        }
        l2 += s;
    }
    (l, l2)
}

pub fn hermite_function_plan(f: &TestFunction, gamma: f64, n: usize, tol: &Tolerances) -> Result<HermitePlan> {
    if !(gamma > 1.0) {
        return Err(QspError::ParamOutOfDomain(format!("gamma = {gamma} must exceed 1")));
    }
    let spec = FamilySpec::Hermite { gamma };
    let fam = family(&spec, n.max(1), tol)?;
    let chi: Vec<f64> = (0..=n).map(|k| family_norm(&spec, k)).collect();
    let mut m = 2 * n + 16;
    let (mut l, mut l2) = hermite_quadrature(f, gamma, n, m);
    let mut converged = false;
    while m < MAX_QUAD_NODES {
        let (l_next, l2_next) = hermite_quadrature(f, gamma, n, 2 * m);
        m *= 2;
        let scale: f64 = l.iter().zip(&chi).map(|(a, c)| (a / c).abs()).fold(1.0, f64::max);
        let change = l
            .iter()
            .zip(&l_next)
            .zip(&chi)
            .map(|((a, b), c)| ((a - b) / c).abs())
            .fold(0.0, f64::max);
        let sq_change = (l2 - l2_next).abs() / l2_next.abs().max(f64::MIN_POSITIVE);
        l = l_next;
        l2 = l2_next;
        if !l2.is_finite() {
            break;
        }
        if change <= QUAD_STABLE * scale && sq_change <= 1e-6 {
            converged = true;
            break;
        }
    }
    if !l2.is_finite() || (!converged && l2 > 1e100) {
        return Err(QspError::NotSquareIntegrable);
    }
    if !converged {
        // square integrability is judged by L[f^2] stabilizing under doubling
        let (_, l2_more) = hermite_quadrature(f, gamma, n, 2 * m);
        if (l2_more - l2).abs() > 1e-6 * l2.abs() {
            return Err(QspError::NotSquareIntegrable);
        }
    }
    let coeffs: Vec<f64> = l.iter().zip(&chi).map(|(a, c)| a / c).collect();
    let alpha: Vec<f64> = (0..=n).map(|k| fam.angles.alpha_at(k)).collect();
    let v: Vec<C64> = coeffs.iter().zip(&alpha).map(|(c, a)| C64::new(c * a, 0.0)).collect();
    let v_norm1: f64 = v.iter().map(|x| x.norm()).sum();

    let circle_error = circle_points(CIRCLE_SAMPLES)
        .par_iter()
        .map(|&z| {
            let vals = hermite_values(z, gamma, n);
            let approx: C64 = vals.iter().zip(&coeffs).map(|(p, c)| p * *c).sum();
            (f.eval(z) - approx).norm()
        })
        .reduce(|| 0.0, f64::max);

    let (v_decay_rate, tail_estimate) = match decay_fit(&v) {
        Some((c, r)) if r > 1.0 => (Some(r), Some(c * r.powi(-(n as i32 + 1)) / (1.0 - 1.0 / r))),
        Some((_, r)) => (Some(r), None),
        None => (None, None),
    };
    let envelope_ratio = v_norm1 / (n.max(1) as f64).powf(1.0 + 3.0 * gamma * gamma);
    let mags: Vec<f64> = alpha.iter().map(|a| a.abs()).collect();
    let plan = LcuPlan {
        basis_id: format!("opqsp(hermite gamma={gamma}, n={n})"),
        v,
        v_norm1,
        eps_bound: tail_estimate.unwrap_or(f64::INFINITY),
        ancillas: 2 * n + 1,
        controlled_u_count: n,
        reconstruction_err: 0.0,
        condition_estimate: mags.iter().fold(0.0f64, |a, &b| a.max(b)) / mags.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
    };
    Ok(HermitePlan {
        plan,
        gamma,
        coeffs,
        quad_nodes: m,
        quad_converged: converged,
        v_decay_rate,
        tail_estimate,
        circle_error,
        envelope_ratio,
        l_f_squared: l2,
    })
}

/// Least-squares fit ln|v_k| = ln C - k ln r over k >= 1 with |v_k| above 1e-300.
pub fn decay_fit(v: &[C64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, x)| x.norm() > 1e-300)
        .map(|(k, x)| (k as f64, x.norm().ln()))
        .collect();
    let (slope, icept) = linear_fit(&pts)?;
    Some((icept.exp(), (-slope).exp()))
}

/// (slope, intercept) of the least-squares line; None with fewer than two points.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Clone, Debug, Serialize)]
pub struct HermiteSweep {
    pub ns: Vec<usize>,
    pub circle_errors: Vec<f64>,
    pub v_norm1: Vec<f64>,
    /// r in circle_error(n) ~ C r^{-n}.
    pub error_decay_rate: f64,
    /// ||v||_1(n) / n^{1 + 3 gamma^2} is non-increasing in n.
    pub envelope_monotone: bool,
    pub envelope_constant: f64,
}

pub fn hermite_sweep(f: &TestFunction, gamma: f64, ns: &[usize], tol: &Tolerances) -> Result<HermiteSweep> {
    let plans: Vec<HermitePlan> = ns.iter().map(|&n| hermite_function_plan(f, gamma, n, tol)).collect::<Result<_>>()?;
    let circle_errors: Vec<f64> = plans.iter().map(|p| p.circle_error).collect();
    let v_norm1: Vec<f64> = plans.iter().map(|p| p.plan.v_norm1).collect();
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(&circle_errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(&n, e)| (n as f64, e.ln()))
        .collect();
    let error_decay_rate = linear_fit(&pts).map(|(s, _)| (-s).exp()).unwrap_or(f64::INFINITY);
    let ratios: Vec<f64> = plans.iter().map(|p| p.envelope_ratio).collect();
    let envelope_monotone = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok(HermiteSweep {
        ns: ns.to_vec(),
        circle_errors,
        v_norm1,
        error_decay_rate,
        envelope_monotone,
        envelope_constant: ratios.first().copied().unwrap_or(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gqsp::Seed;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn hermite_basis(gamma: f64, n: usize) -> Basis {
        Basis::build(&BasisSpec::Opqsp { family: FamilySpec::Hermite { gamma }, n }, &tol()).unwrap()
    }

    #[test]
    fn monomial_basis() {
        let b = Basis::build(&BasisSpec::Monomial { n: 2 }, &tol()).unwrap();
        let p = expand_in_basis(&ComplexPoly::monomial(2, ONE), &b, &tol()).unwrap();
        assert_eq!(p.v, vec![ZERO, ZERO, ONE]);
        assert_eq!(p.v_norm1, 1.0);
    }

    #[test]
    fn constant_in_hermite_basis() {
        let p = expand_in_basis(&ComplexPoly::one(), &hermite_basis(1.5, 4), &tol()).unwrap();
        assert!((p.v[0] - ONE).norm() < 1e-15);
        assert!(p.v[1..].iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn hermite_second_polynomial() {
        let b = hermite_basis(1.0, 3);
        assert!(coeff_error(b.polys[2].coeffs(), ComplexPoly::from_real(&[0.0, -2.0, 1.0]).coeffs()) < 1e-15);
        let p = expand_in_basis(&ComplexPoly::from_real(&[0.0, -2.0, 1.0]), &b, &tol()).unwrap();
        assert!((p.v[2] - b.alpha[2]).norm() < 1e-12 * b.alpha[2].norm());
        assert!(p.v[0].norm() < 1e-12 && p.v[1].norm() < 1e-12 && p.v[3].norm() < 1e-12);
    }

    #[test]
    fn degree_exceeds_basis() {
        let b = hermite_basis(1.0, 2);
        assert!(matches!(
            expand_in_basis(&ComplexPoly::monomial(3, ONE), &b, &tol()),
            Err(QspError::DegreeExceedsBasis { target: 3, basis: 2 })
        ));
    }

    #[test]
    fn resources() {
        let ang = GqspAngles::new(vec![0.3; 5], vec![0.1; 5], Seed::Rotation);
        let b = Basis::build(&BasisSpec::Gqsp { angles: ang }, &tol()).unwrap();
        let p = expand_in_basis(&ComplexPoly::from_real(&[1.0, 2.0]), &b, &tol()).unwrap();
        assert_eq!(lcu_resources(&p, b.ell).ancillas, 5);
        let b = hermite_basis(2.0, 4);
        let p = expand_in_basis(&ComplexPoly::one(), &b, &tol()).unwrap();
        assert_eq!(lcu_resources(&p, b.ell).ancillas, 9);
        let b = Basis::build(&BasisSpec::Monomial { n: 0 }, &tol()).unwrap();
        let p = expand_in_basis(&ComplexPoly::one(), &b, &tol()).unwrap();
        assert_eq!(lcu_resources(&p, 3).ancillas, 3);
    }

    #[test]
    fn plan_for_constant_and_identity() {
        let h = hermite_function_plan(&TestFunction::Polynomial { coeffs: vec![1.0] }, 2.0, 5, &tol()).unwrap();
        assert!((h.plan.v[0] - ONE).norm() < 1e-12);
        assert!(h.plan.v[1..].iter().all(|x| x.norm() < 1e-10));
        assert!((h.plan.v_norm1 - 1.0).abs() < 1e-9);
        assert!(h.circle_error < 1e-12);
        let h = hermite_function_plan(&TestFunction::Identity, 2.0, 1, &tol()).unwrap();
        let alpha1 = family(&FamilySpec::Hermite { gamma: 2.0 }, 1, &tol()).unwrap().angles.alpha_at(1);
        assert!((h.plan.v[0] - ONE).norm() < 1e-12);
        assert!((h.plan.v[1].re - alpha1).abs() < 1e-12 * alpha1);
    }

    #[test]
    fn gaussian_coefficients_match_closed_form() {
        // L[f P_hat_k] for f = exp(-(x-1)^2) and the centered Hermite weight has the closed form
        // gamma sqrt(2 pi / (2 + gamma^2)) (-1)^{k/2} (k-1)!! (2/(gamma^2 (2+gamma^2)))^{k/2} for even k
        let g: f64 = 2.0;
        let h = hermite_function_plan(&TestFunction::ExpGauss { center: 1.0 }, g, 8, &tol()).unwrap();
        let s = g * g + 2.0;
        for k in 0..=8usize {
            let chi = family_norm(&FamilySpec::Hermite { gamma: g }, k);
            let want = if k % 2 == 1 {
                0.0
            } else {
                let dfact: f64 = (1..k).step_by(2).map(|j| j as f64).product();
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                g * (2.0 * std::f64::consts::PI / s).sqrt() * sign * dfact * (2.0 / (g * g * s)).powi(k as i32 / 2)
            };
            assert!((h.coeffs[k] * chi - want).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn divergent_function_rejected() {
        assert!(matches!(
            hermite_function_plan(&TestFunction::ExpSquare, 1.1, 4, &tol()),
            Err(QspError::NotSquareIntegrable)
        ));
    }

    #[test]
    fn gamma_must_exceed_one() {
        assert!(hermite_function_plan(&TestFunction::Identity, 1.0, 3, &tol()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn expansion_reconstructs(n in 0usize..=12, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = hermite_basis(rng.gen_range(1.0..2.5), n.max(1));
            let target = ComplexPoly::new((0..=n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
            let p = expand_in_basis(&target, &b, &tol()).unwrap();
            // oracle in double-double so the check sees the coefficients, not f64 cancellation
            let sum = |z: C64| -> C64 {
                let z = CDd::from(z);
                let mut total = CDd::from(ZERO);
                for ((q, v), a) in b.polys.iter().zip(&p.v).zip(&b.alpha) {
                    let qz = q.coeffs().iter().rev().fold(CDd::from(ZERO), |acc, c| acc * z + CDd::from(*c));
                    total = total + qz * CDd::from(v / a);
                }
                total.to_c64()
            };
            let err = circle_points(64).iter().map(|z| (sum(*z) - target.eval(*z)).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9 * target.max_abs().max(1.0));
            prop_assert!((p.v_norm1 - p.v.iter().map(|x| x.norm()).sum::<f64>()).abs() == 0.0);
        }

        #[test]
        fn basis_element_is_unit_vector(k in 0usize..=10, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = hermite_basis(rng.gen_range(1.0..2.5), 10);
            let p = expand_in_basis(&b.polys[k], &b, &tol()).unwrap();
            for (i, v) in p.v.iter().enumerate() {
                if i == k {
                    prop_assert!((v - b.alpha[k]).norm() <= 1e-12 * b.alpha[k].norm());
                } else {
                    prop_assert!(v.norm() == 0.0 || v.norm() <= 1e-12 * b.alpha[k].norm());
                }
            }
        }
    }
}
