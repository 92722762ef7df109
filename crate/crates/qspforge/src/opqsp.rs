//! OP-QSP: three-term recurrences, angle maps, transfer matrices and families.

use crate::error::{QspError, Result};
use crate::functionals::{
    gauss_hermite, gauss_jacobi, hankel_det, hankel_dets, jacobi_recurrence, moments_from_roots,
    moments_from_weighted_roots, HankelDets, MomentTable, ResidueFunctional,
};
use crate::polycore::{coeff_error, poly_roots, ComplexPoly, LaurentPoly, PolyMat2, I, ONE, ZERO};
use crate::tol::Tolerances;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_PI_4, PI};

pub const DEFAULT_OMEGA1: f64 = PI / 6.0;

/// P_{i+1} = (x - b_i) P_i - a_i^2 P_{i-1}; `a_sq[i-1]` holds a_i^2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeTermRecurrence {
    pub b: Vec<f64>,
    pub a_sq: Vec<f64>,
}

impl ThreeTermRecurrence {
    /// a_i^2 for i >= 1.
    pub fn a2(&self, i: usize) -> f64 {
        self.a_sq[i - 1]
    }

    pub fn steps(&self) -> usize {
        self.b.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpqspAngles {
    pub tau: Vec<f64>,
    pub omega: Vec<f64>,
    /// Cumulative constants alpha_1..alpha_n.
    pub alpha: Vec<f64>,
}

impl OpqspAngles {
    pub fn new(tau: Vec<f64>, omega: Vec<f64>) -> Self {
        let mut acc = 1.0;
        let alpha = tau
            .iter()
            .zip(&omega)
            .map(|(&t, &w)| {
                acc *= alpha_step(t, w);
                acc
            })
            .collect();
        OpqspAngles { tau, omega, alpha }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// alpha_i with alpha_0 = 1.
    pub fn alpha_at(&self, i: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            self.alpha[i - 1]
        }
    }
}

pub fn alpha_step(tau: f64, omega: f64) -> f64 {
    let s = omega.sin();
    let s2 = (2.0 * omega).sin();
    (2.0 * (1.0 + s * s) / (s2 * s2)).sqrt() / tau.cos()
}

/// Monic P_0..P_n from the recurrence with P_{-1} = 0, P_0 = 1.
pub fn recurrence_to_polys(rec: &ThreeTermRecurrence, n: usize) -> Vec<ComplexPoly> {
    let mut out = vec![ComplexPoly::one()];
    let mut prev = ComplexPoly::zero();
    for i in 0..n {
        let cur = out[i].clone();
        let mut next = &cur.shift(1) - &cur.scale(C64::new(rec.b[i], 0.0));
        if i >= 1 {
            next = &next - &prev.scale(C64::new(rec.a2(i), 0.0));
        }
        prev = cur;
        out.push(next);
    }
    out
}

fn omega_from_cot(cot: f64, index: usize, tol: &Tolerances) -> Result<f64> {
    if !cot.is_finite() {
        return Err(QspError::AngleDegenerate { index, omega: 0.0 });
    }
    let w = (1.0 / cot).atan();
    check_omega(w, index, tol)?;
    Ok(w)
}

fn check_omega(w: f64, index: usize, tol: &Tolerances) -> Result<()> {
    let a = w.abs();
    if !w.is_finite() || a <= tol.angle_tol || (a - PI / 2.0).abs() <= tol.angle_tol {
        return Err(QspError::AngleDegenerate { index, omega: w });
    }
    Ok(())
}

/// cot(omega_{i+1}) from one step of the inverse recurrence.
fn next_cot(rec: &ThreeTermRecurrence, i: usize, omega_i: f64) -> f64 {
    let (b, bp) = (rec.b[i], rec.b[i - 1]);
    let s = (2.0 * b * b - 2.0 * b + 1.0).sqrt();
    s * ((2.0 * bp - 1.0) * omega_i.tan() + (bp - 1.0) / omega_i.tan()) / rec.a2(i)
}

/// Closed-form cot(omega_i), i = 1..n, available when every b_i = 1/2 or every b_i = 1.
pub fn closed_form_cots(rec: &ThreeTermRecurrence, omega1: f64) -> Option<Vec<f64>> {
    let n = rec.steps();
    let c1 = 1.0 / omega1.tan();
    if n == 0 {
        return Some(vec![]);
    }
    if rec.b.iter().all(|&b| b == 0.5) {
        let mut out = vec![c1];
        let mut prod = 1.0;
        for j in 1..n {
            prod *= -1.0 / (2f64.powf(1.5) * rec.a2(j));
            out.push(c1 * prod);
        }
        return Some(out);
    }
    if rec.b.iter().all(|&b| b == 1.0) {
        let out = (1..=n)
            .map(|i| {
                if i % 2 == 1 {
                    (1..=i / 2).fold(c1, |acc, j| acc * rec.a2(2 * j - 1) / rec.a2(2 * j))
                } else {
                    (1..=(i - 2) / 2)
                        .fold(1.0 / (rec.a2(1) * c1), |acc, j| acc * rec.a2(2 * j) / rec.a2(2 * j + 1))
                }
            })
            .collect();
        return Some(out);
    }
    None
}

/// Angles realizing the recurrence for steps 1..n, n = rec.b.len().
pub fn recurrence_to_angles(rec: &ThreeTermRecurrence, omega1: f64, tol: &Tolerances) -> Result<OpqspAngles> {
    let n = rec.steps();
    if rec.a_sq.len() + 1 < n {
        return Err(QspError::InvalidInput(format!("need {} a^2 values, got {}", n - 1, rec.a_sq.len())));
    }
    if let Some(i) = rec.a_sq.iter().take(n.saturating_sub(1)).position(|&a| a == 0.0) {
        return Err(QspError::NotQuasiDefinite { order: i + 1 });
    }
    let tau: Vec<f64> = rec.b.iter().map(|&b| (2.0 * b - 1.0).atan()).collect();
    if n == 0 {
        return Ok(OpqspAngles::new(vec![], vec![]));
    }
    check_omega(omega1, 1, tol)?;
    let omega = match closed_form_cots(rec, omega1) {
        Some(cots) => {
            let mut w = vec![omega1];
            for (k, &c) in cots.iter().enumerate().skip(1) {
                w.push(omega_from_cot(c, k + 1, tol)?);
            }
            w
        }
        None => {
            let mut w = vec![omega1];
            for i in 1..n {
                w.push(omega_from_cot(next_cot(rec, i, w[i - 1]), i + 1, tol)?);
            }
            w
        }
    };
    Ok(OpqspAngles::new(tau, omega))
}

/// Same as `recurrence_to_angles` but always through the step recurrence.
pub fn recurrence_to_angles_stepwise(
    rec: &ThreeTermRecurrence,
    omega1: f64,
    tol: &Tolerances,
) -> Result<OpqspAngles> {
    let n = rec.steps();
    let tau: Vec<f64> = rec.b.iter().map(|&b| (2.0 * b - 1.0).atan()).collect();
    let mut w = Vec::with_capacity(n);
    if n > 0 {
        check_omega(omega1, 1, tol)?;
        w.push(omega1);
    }
    for i in 1..n {
        w.push(omega_from_cot(next_cot(rec, i, w[i - 1]), i + 1, tol)?);
    }
    Ok(OpqspAngles::new(tau, w))
}

pub fn angles_to_recurrence(ang: &OpqspAngles) -> ThreeTermRecurrence {
    let n = ang.len();
    let b = ang.tau.iter().map(|t| (t.tan() + 1.0) / 2.0).collect();
    let a_sq = (1..n)
        .map(|i| {
            let (ti, wi) = (ang.tau[i - 1], ang.omega[i - 1]);
            let (tn, wn) = (ang.tau[i], ang.omega[i]);
            wn.tan() / (2f64.sqrt() * tn.cos())
                * (ti.tan() * wi.tan() + (ti.tan() - 1.0) / wi.tan() / 2.0)
        })
        .collect();
    ThreeTermRecurrence { b, a_sq }
}

/// T(tau, omega) as a polynomial matrix in U.
pub fn transfer_matrix_op(tau: f64, omega: f64) -> PolyMat2 {
    let (tt, tw) = (tau.tan(), omega.tan());
    let cw = 1.0 / tw;
    let t11 = ComplexPoly::new(vec![C64::new(-(tt + 1.0) / 2.0, 0.0), ONE]);
    let t12 = I * (tw / (2f64.sqrt() * tau.cos()));
    let t21 = I * (tt / 2.0 * (2.0 * tw + cw) - cw / 2.0);
    PolyMat2::from_entries(t11, ComplexPoly::constant(t12), ComplexPoly::constant(t21), ComplexPoly::zero())
}

/// Transfer products T_i ... T_1 for i = 0..n.
pub fn transfer_products(ang: &OpqspAngles) -> Vec<PolyMat2> {
    let mut out = vec![PolyMat2::identity()];
    for (&t, &w) in ang.tau.iter().zip(&ang.omega) {
        let next = transfer_matrix_op(t, w).mul(out.last().unwrap());
        out.push(next);
    }
    out
}

/// Largest |P_i(z)| / alpha_i over m circle samples, for every i (the i = 0 entry is exactly 1).
pub fn norm_bound_ratios(polys: &[ComplexPoly], ang: &OpqspAngles, m: usize) -> Vec<f64> {
    polys
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mx = p.eval_on_circle(m).iter().map(|v| v.norm()).fold(0.0, f64::max);
            mx / ang.alpha_at(i)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilySpec {
    Chebyshev { gamma: f64, kappa: f64 },
    TwoChebyshev { gamma: f64, a: f64, omega1: f64 },
    Hermite { gamma: f64 },
    Jacobi { lambda: f64, beta: f64 },
    JacobiShifted { lambda: f64 },
}

#[derive(Clone, Debug)]
pub struct Family {
    pub spec: FamilySpec,
    pub recurrence: ThreeTermRecurrence,
    pub polys: Vec<ComplexPoly>,
    pub angles: OpqspAngles,
    pub omega1: f64,
}

fn domain(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(QspError::ParamOutOfDomain(msg.into()))
    }
}

/// Fixed-point angle for the constant recurrence b = kappa/gamma, a^2 = 1/(4 gamma^2).
pub fn chebyshev_fixed_omega(gamma: f64, kappa: f64) -> Result<f64> {
    domain(gamma != 0.0, "gamma must be nonzero")?;
    let b = kappa / gamma;
    let a2 = 1.0 / (4.0 * gamma * gamma);
    let s = (2.0 * b * b - 2.0 * b + 1.0).sqrt();
    domain(2.0 * b != 1.0, "2 kappa = gamma has no fixed angle")?;
    let t2 = (a2 / s - (b - 1.0)) / (2.0 * b - 1.0);
    domain(t2 > 0.0 && t2.is_finite(), "no real fixed angle for these kappa, gamma")?;
    Ok(t2.sqrt().atan())
}

/// Closed-form Hermite cot(omega_n) for cot(omega_1) = gamma sqrt(2/pi).
pub fn hermite_cot_omega(gamma: f64, n: usize) -> f64 {
    let lnb = |m: usize, k: usize| ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k) as f64 + 1.0);
    if n % 2 == 1 {
        (2.0 / PI).sqrt() * gamma * (lnb(n - 1, (n - 1) / 2) - (n - 1) as f64 * 2f64.ln()).exp()
    } else {
        (PI / 2.0).sqrt() * gamma * ((n - 2) as f64 * 2f64.ln() - lnb(n - 2, (n - 2) / 2)).exp()
            / (n - 1) as f64
    }
}

/// Closed-form two-Chebyshev cot(omega_i).
pub fn two_chebyshev_cot_omega(gamma: f64, a: f64, omega1: f64, i: usize) -> f64 {
    let c1 = 1.0 / omega1.tan();
    if i == 1 {
        c1
    } else if i % 2 == 0 {
        1.0 / (a * a * c1)
    } else {
        4.0 * gamma * gamma * a * a * c1
    }
}

pub fn family_recurrence(spec: &FamilySpec, n: usize) -> Result<(ThreeTermRecurrence, f64)> {
    let steps = |bf: &dyn Fn(usize) -> f64, af: &dyn Fn(usize) -> f64| ThreeTermRecurrence {
        b: (0..n).map(bf).collect(),
        a_sq: (1..n).map(af).collect(),
    };
    Ok(match *spec {
        FamilySpec::Chebyshev { gamma, kappa } => {
            let w = chebyshev_fixed_omega(gamma, kappa)?;
            (steps(&|_| kappa / gamma, &|_| 1.0 / (4.0 * gamma * gamma)), w)
        }
        FamilySpec::TwoChebyshev { gamma, a, omega1 } => {
            domain(gamma != 0.0 && a != 0.0, "gamma and a must be nonzero")?;
            let a2 = a * a;
            (steps(&|_| 1.0, &|i| if i == 1 { a2 } else { 1.0 / (4.0 * gamma * gamma) }), omega1)
        }
        FamilySpec::Hermite { gamma } => {
            domain(gamma > 0.0, "gamma must be positive")?;
            let w = (1.0 / (gamma * (2.0 / PI).sqrt())).atan();
            (steps(&|_| 1.0, &|i| i as f64 / (gamma * gamma)), w)
        }
        FamilySpec::Jacobi { lambda, beta } => {
            domain(lambda > -1.0 && beta > -1.0, "lambda, beta must exceed -1")?;
            (
                steps(&|i| jacobi_recurrence(i, lambda, beta).0, &|i| jacobi_recurrence(i, lambda, beta).1),
                DEFAULT_OMEGA1,
            )
        }
        FamilySpec::JacobiShifted { lambda } => {
            domain(lambda > -0.5, "lambda must exceed -1/2")?;
            let a2 = |i: usize| {
                let x = i as f64;
                x * (x + 2.0 * lambda) / (4.0 * (x + lambda + 0.5) * (x + lambda - 0.5))
            };
            (steps(&|_| 0.5, &a2), FRAC_PI_4)
        }
    })
}

pub fn family(spec: &FamilySpec, n: usize, tol: &Tolerances) -> Result<Family> {
    let (recurrence, omega1) = family_recurrence(spec, n)?;
    let angles = recurrence_to_angles(&recurrence, omega1, tol)?;
    let polys = recurrence_to_polys(&recurrence, n);
    Ok(Family { spec: *spec, recurrence, polys, angles, omega1 })
}

/// Closed-form tan(omega_{i+1}), i >= 0, for the shifted symmetric Jacobi family.
pub fn jacobi_shifted_tan_omega(lambda: f64, i: usize) -> f64 {
    let prod: f64 = (1..=i)
        .map(|j| {
            let x = j as f64;
            x * (x + 2.0 * lambda) / ((x + lambda + 0.5) * (x + lambda - 0.5))
        })
        .product();
    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
    sign * 2f64.powf(-(i as f64) / 2.0) * prod
}

/// L[f] for the orthogonality functional of a family.
pub fn family_functional(spec: &FamilySpec, f: &ComplexPoly, tol: &Tolerances) -> Result<C64> {
    let m = f.degree() / 2 + 8;
    Ok(match *spec {
        FamilySpec::Hermite { gamma } => {
            let (t, w) = gauss_hermite(m);
            t.iter()
                .zip(&w)
                .map(|(&t, &w)| f.eval(C64::new(1.0 + 2f64.sqrt() * t / gamma, 0.0)) * w * 2f64.sqrt())
                .sum()
        }
        FamilySpec::Jacobi { lambda, beta } => {
            let (x, w) = gauss_jacobi(m, lambda, beta);
            x.iter().zip(&w).map(|(&x, &w)| f.eval(C64::new(x, 0.0)) * w).sum()
        }
        FamilySpec::JacobiShifted { lambda } => {
            let (x, w) = gauss_jacobi(m, lambda, lambda);
            x.iter().zip(&w).map(|(&x, &w)| f.eval(C64::new(x + 0.5, 0.0)) * w).sum()
        }
        FamilySpec::Chebyshev { gamma, kappa } => {
            let (t, w) = gauss_jacobi(m, 0.5, 0.5);
            t.iter()
                .zip(&w)
                .map(|(&t, &w)| f.eval(C64::new((t + kappa) / gamma, 0.0)) * (w / gamma.abs()))
                .sum()
        }
        FamilySpec::TwoChebyshev { gamma, a, .. } => two_chebyshev_functional(gamma, a, f, tol)?,
    })
}

/// -1/(4 pi i) oint f((z + 1/z)/(2 gamma) + 1) (1 - z^2)^2 / (z (z^2 + lam)(1 + lam z^2)) dz.
pub fn two_chebyshev_functional(gamma: f64, a: f64, f: &ComplexPoly, tol: &Tolerances) -> Result<C64> {
    let lam = 1.0 - 4.0 * gamma * gamma * a * a;
    let arg = LaurentPoly::new(vec![C64::new(1.0 / (2.0 * gamma), 0.0), ONE, C64::new(1.0 / (2.0 * gamma), 0.0)], -1);
    let num = LaurentPoly::compose(f, &arg).mul(&LaurentPoly::new(
        vec![ONE, ZERO, C64::new(-2.0, 0.0), ZERO, ONE],
        0,
    ));
    let p = ComplexPoly::from_real(&[lam, 0.0, 1.0]);
    let qt = LaurentPoly::new(vec![ONE, ZERO, C64::new(lam, 0.0)], 0);
    let v = ResidueFunctional::new(&p, &qt, tol)?.eval(0, &num)?;
    Ok(-v / (C64::new(0.0, 4.0 * PI)))
}

/// chi_n = L[P_n^2] in closed form.
pub fn family_norm(spec: &FamilySpec, n: usize) -> f64 {
    let nf = n as f64;
    match *spec {
        FamilySpec::Hermite { gamma } => {
            (2.0 * PI).sqrt() * (ln_gamma(nf + 1.0) - 2.0 * nf * gamma.ln()).exp()
        }
        FamilySpec::Jacobi { lambda, beta } => jacobi_norm(lambda, beta, n),
        FamilySpec::JacobiShifted { lambda } => jacobi_norm(lambda, lambda, n),
        FamilySpec::Chebyshev { gamma, .. } => PI / (2.0 * gamma.abs()).powi(2 * n as i32 + 1),
        FamilySpec::TwoChebyshev { gamma, a, .. } => {
            if n == 0 {
                1.0 / (4.0 * gamma * gamma * a * a)
            } else {
                1.0 / (2.0 * gamma).powi(2 * n as i32)
            }
        }
    }
}

fn jacobi_norm(l: f64, b: f64, n: usize) -> f64 {
    let nf = n as f64;
    let s = l + b;
    if n == 0 {
        return ((s + 1.0) * 2f64.ln() + ln_gamma(l + 1.0) + ln_gamma(b + 1.0) - ln_gamma(s + 2.0)).exp();
    }
    ((2.0 * nf + s + 1.0) * 2f64.ln() + ln_gamma(nf + l + 1.0) + ln_gamma(nf + b + 1.0) + ln_gamma(nf + s + 1.0)
        + ln_gamma(nf + 1.0)
        - ln_gamma(2.0 * nf + s + 2.0)
        - ln_gamma(2.0 * nf + s + 1.0))
    .exp()
}

#[derive(Clone, Debug)]
pub struct OpqspSynthesis {
    pub recurrence: ThreeTermRecurrence,
    pub angles: OpqspAngles,
    pub moments: MomentTable,
    pub dets: Vec<HankelDets>,
    pub rebuild_err: f64,
}

/// Angles for a monic target with distinct real roots via its root-sum functional.
pub fn find_angles_from_roots(target: &ComplexPoly, omega1: f64, tol: &Tolerances) -> Result<OpqspSynthesis> {
    find_angles_from_weighted_roots(target, None, omega1, tol)
}

/// As `find_angles_from_roots` with positive root weights (sorted by ascending root).
///
/// Only the top polynomial is fixed by the target; the intermediate recurrence
/// depends on the weights. Gauss-Christoffel weights of a known family reproduce
/// that family's recurrence.
pub fn find_angles_from_weighted_roots(
    target: &ComplexPoly,
    weights: Option<&[f64]>,
    omega1: f64,
    tol: &Tolerances,
) -> Result<OpqspSynthesis> {
    let n = target.degree();
    if target.is_zero() || n == 0 {
        return Err(QspError::InvalidInput("target must have degree >= 1".into()));
    }
    let (monic, _) = target.monic();
    let roots = poly_roots(&monic, tol.root_tol)?;
    let max_imag = roots.iter().map(|r| r.im.abs() / r.norm().max(1.0)).fold(0.0, f64::max);
    if max_imag > 1e-7 {
        return Err(QspError::ComplexRoots { max_imag });
    }
    let mut xs: Vec<f64> = roots.iter().map(|r| r.re).collect();
    xs.sort_by(f64::total_cmp);
    let moments = match weights {
        Some(w) => {
            if w.iter().any(|&x| !(x > 0.0)) {
                return Err(QspError::InvalidInput("root weights must be positive".into()));
            }
            moments_from_weighted_roots(&xs, w, 2 * n, tol)?
        }
        None => moments_from_roots(&xs, 2 * n, tol)?,
    };
    let dets: Vec<HankelDets> = (0..=n).map(|i| hankel_dets(&moments, i, tol)).collect::<Result<_>>()?;
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let (hi, qd) = hankel_det(&moments, i as i64, tol)?;
        if !qd {
            return Err(QspError::NotQuasiDefinite { order: i });
        }
        h.push(hi.re);
    }
    // monic P_i coefficients from the minors: coeff_k = h_{i,k} / h_{i-1}
    let sub_lead = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else {
            dets[i].hk[i - 1].re / h[i - 1]
        }
    };
    let b = (0..n).map(|i| sub_lead(i) - sub_lead(i + 1)).collect();
    let hm = |i: i64| if i < 0 { 1.0 } else { h[i as usize] };
    let a_sq = (1..n as i64).map(|i| hm(i) * hm(i - 2) / (hm(i - 1) * hm(i - 1))).collect();
    let recurrence = ThreeTermRecurrence { b, a_sq };
    let angles = recurrence_to_angles(&recurrence, omega1, tol)?;
    let rebuilt = recurrence_to_polys(&recurrence, n).pop().unwrap();
    let rebuild_err = coeff_error(rebuilt.coeffs(), monic.coeffs());
    if rebuild_err > tol.rebuild_tol {
        return Err(QspError::ReconstructionMismatch { max_coeff_err: rebuild_err });
    }
    Ok(OpqspSynthesis { recurrence, angles, moments, dets, rebuild_err })
}
