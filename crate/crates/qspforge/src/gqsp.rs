//! Generalized QSP: U(2)-interleaved recurrences, Laurent biorthogonal
//! recurrences and moment-based angle finding.

use crate::error::{QspError, Result};
use crate::functionals::{toeplitz_dets, MomentTable, ResidueFunctional, ToeplitzDets};
use crate::polycore::{coeff_error, poly_roots, ComplexPoly, LaurentPoly, PolyMat2, ONE, ZERO};
use crate::tol::Tolerances;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const CIRCLE_SAMPLES: usize = 256;

/// How the protocol starts.
///
/// `Unit`: P_0 = 1, Q_0 = 0 and every angle is a step (all P_i, Q_i for i >= 1
/// are divisible by z). `Rotation`: index 0 is a bare rotation, giving
/// P_0 = e^{i phi_0} cos theta_0, Q_0 = sin theta_0, and the remaining angles are steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    #[default]
    Unit,
    Rotation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GqspAngles {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    #[serde(default)]
    pub seed: Seed,
}

impl GqspAngles {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>, seed: Seed) -> Self {
        GqspAngles { theta, phi, seed }
    }

    /// Number of controlled-U steps.
    pub fn steps(&self) -> usize {
        match self.seed {
            Seed::Unit => self.theta.len(),
            Seed::Rotation => self.theta.len().saturating_sub(1),
        }
    }

    /// alpha_j = prod e^{-i phi_k} / cos theta_k over the angles used up to step j.
    pub fn alpha(&self) -> Vec<C64> {
        let mut acc = ONE;
        let mut out = Vec::with_capacity(self.steps() + 1);
        let f = |k: usize| C64::from_polar(1.0 / self.theta[k].cos(), -self.phi[k]);
        match self.seed {
            Seed::Unit => {
                out.push(acc);
                for k in 0..self.theta.len() {
                    acc *= f(k);
                    out.push(acc);
                }
            }
            Seed::Rotation => {
                for k in 0..self.theta.len() {
                    acc *= f(k);
                    out.push(acc);
                }
            }
        }
        out
    }
}

/// T(theta, phi) = [[e^{i phi} cos(theta) z, e^{i phi} sin(theta)], [sin(theta) z, -cos(theta)]].
pub fn gqsp_transfer(theta: f64, phi: f64) -> PolyMat2 {
    let e = C64::from_polar(1.0, phi);
    let (c, s) = (theta.cos(), theta.sin());
    PolyMat2::from_entries(
        ComplexPoly::monomial(1, e * c),
        ComplexPoly::constant(e * s),
        ComplexPoly::monomial(1, C64::new(s, 0.0)),
        ComplexPoly::constant(C64::new(-c, 0.0)),
    )
}

#[derive(Clone, Debug)]
pub struct GqspSequence {
    pub p: Vec<ComplexPoly>,
    pub q: Vec<ComplexPoly>,
}

/// P_i, Q_i for i = 0..steps.
pub fn gqsp_forward(ang: &GqspAngles) -> GqspSequence {
    let (mut p, mut q, first) = match ang.seed {
        Seed::Unit => (ComplexPoly::one(), ComplexPoly::zero(), 0),
        Seed::Rotation => (
            ComplexPoly::constant(C64::from_polar(ang.theta[0].cos(), ang.phi[0])),
            ComplexPoly::constant(C64::new(ang.theta[0].sin(), 0.0)),
            1,
        ),
    };
    let mut out = GqspSequence { p: vec![p.clone()], q: vec![q.clone()] };
    for k in first..ang.theta.len() {
        let e = C64::from_polar(1.0, ang.phi[k]);
        let (c, s) = (ang.theta[k].cos(), ang.theta[k].sin());
        let zp = p.shift(1);
        let np = &zp.scale(e * c) + &q.scale(e * s);
        let nq = &zp.scale(C64::new(s, 0.0)) - &q.scale(C64::new(c, 0.0));
        p = np;
        q = nq;
        out.p.push(p.clone());
        out.q.push(q.clone());
    }
    out
}

/// max over m circle samples of ||P|^2 + |Q|^2 - 1|.
pub fn unitarity_defect(p: &ComplexPoly, q: &ComplexPoly, m: usize) -> f64 {
    p.eval_on_circle(m)
        .iter()
        .zip(q.eval_on_circle(m))
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Monic LBP recurrence P_{i+1} = (z - d_i) P_i - z b_i P_{i-1}. `b[0]` is unused.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentRecurrence {
    pub d: Vec<C64>,
    pub b: Vec<C64>,
}

pub fn laurent_to_polys(rec: &LaurentRecurrence) -> Vec<ComplexPoly> {
    let mut out = vec![ComplexPoly::one()];
    for i in 0..rec.d.len() {
        let cur = &out[i];
        let mut next = &cur.shift(1) - &cur.scale(rec.d[i]);
        if i >= 1 {
            next = &next - &out[i - 1].shift(1).scale(rec.b[i]);
        }
        out.push(next);
    }
    out
}

/// Recover (d, b) from a monic sequence with P_i(0) != 0.
pub fn laurent_from_polys(polys: &[ComplexPoly]) -> LaurentRecurrence {
    let n = polys.len() - 1;
    let mut d = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let di = -polys[i + 1].coeff(0) / polys[i].coeff(0);
        let bi = if i == 0 {
            ZERO
        } else {
            polys[i].coeff(i - 1) - di - polys[i + 1].coeff(i)
        };
        d.push(di);
        b.push(bi);
    }
    LaurentRecurrence { d, b }
}

#[derive(Clone, Debug)]
pub struct Realizability {
    pub realizable: bool,
    /// Rotation-seed angles when realizable; the last phase is set to 0 since
    /// monic polynomials do not determine it.
    pub angles: Option<GqspAngles>,
    pub residual: f64,
}

/// Solve the GQSP realizability conditions for a monic LBP recurrence.
///
/// With t_i = tan(theta_i) in rotation-seed indexing the conditions read
/// d_i = e^{-i phi_i} t_{i+1}/t_i and d_i + b_i = -e^{-i phi_i} t_i t_{i+1} for i >= 1,
/// and d_0 = -e^{-i phi_0} t_0 t_1.
pub fn lbp_realizability(rec: &LaurentRecurrence, tol: &Tolerances) -> Realizability {
    let n = rec.d.len();
    let fail = |residual: f64| Realizability { realizable: false, angles: None, residual };
    if n == 0 {
        return Realizability { realizable: true, angles: None, residual: 0.0 };
    }
    if rec.d.iter().any(|d| d.norm() <= tol.realize_tol) {
        return fail(f64::INFINITY);
    }
    let mut t = vec![0.0; n + 1];
    let mut residual: f64 = 0.0;
    for i in 1..n {
        let r = -(rec.d[i] + rec.b[i]) / rec.d[i];
        residual = residual.max(r.im.abs());
        if r.re <= 0.0 {
            return fail(residual.max(-r.re));
        }
        t[i] = r.re.sqrt();
    }
    if n == 1 {
        t[0] = rec.d[0].norm().sqrt();
        t[1] = t[0];
    } else {
        t[n] = rec.d[n - 1].norm() * t[n - 1];
        for i in 1..n - 1 {
            residual = residual.max((rec.d[i].norm() * t[i] / t[i + 1] - 1.0).abs());
        }
        t[0] = rec.d[0].norm() / t[1];
    }
    let mut phi = vec![0.0; n + 1];
    phi[0] = (-rec.d[0]).arg() * -1.0;
    for i in 1..n {
        phi[i] = -rec.d[i].arg();
    }
    let theta: Vec<f64> = t.iter().map(|x| x.atan()).collect();
    let ang = GqspAngles::new(theta, phi, Seed::Rotation);
    let built = gqsp_forward(&ang);
    let target = laurent_to_polys(rec);
    for (p, want) in built.p.iter().zip(&target) {
        residual = residual.max(coeff_error(p.monic().0.coeffs(), want.coeffs()));
    }
    if residual <= tol.realize_tol {
        Realizability { realizable: true, angles: Some(ang), residual }
    } else {
        fail(residual)
    }
}

/// Monic P_n with coefficients a_nk = sum_j C(k,j) C(n-j, n-k-j) e^{-i(n-k)phi} / cos^{2j} theta.
pub fn constant_angle_lbp(theta: f64, phi: f64, n: usize) -> ComplexPoly {
    let binom = |a: usize, b: usize| -> f64 {
        if b > a {
            return 0.0;
        }
        (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
    };
    let sec2 = 1.0 / theta.cos().powi(2);
    let coeffs = (0..=n)
        .map(|k| {
            let s: f64 = (0..=k.min(n - k))
                .map(|j| binom(k, j) * binom(n - j, n - k - j) * sec2.powi(j as i32))
                .sum();
            C64::from_polar(s, -((n - k) as f64) * phi)
        })
        .collect();
    ComplexPoly::new(coeffs)
}

#[derive(Clone, Debug)]
pub struct GqspSynthesis {
    /// Rotation-seed angles (n + 1 entries).
    pub angles: GqspAngles,
    pub moments: MomentTable,
    pub dets: Vec<ToeplitzDets>,
    pub tan2_theta: Vec<C64>,
    pub rebuild_err: f64,
    /// Q is fixed only up to a unimodular factor; error after optimal phase.
    pub q_phase_err: f64,
    pub unitarity_defect: f64,
    /// max |e^{2 i phi_i} - h_i^+ h_{i+1}^- / (h_i^- h_{i+1}^+)| over 1 <= i < n.
    pub printed_phase_ratio_defect: f64,
}

/// Moments c_k = L[z^k], k = -n..n, of L[f] = oint z^{n-1} f / (P Q) dz.
pub fn pair_moments(p: &ComplexPoly, q: &ComplexPoly, tol: &Tolerances) -> Result<MomentTable> {
    let n = p.degree() as i64;
    let qt = LaurentPoly::from_poly(q, -n);
    let rf = ResidueFunctional::new(p, &qt, tol)?;
    let c = (-n..=n).map(|k| rf.eval(k, &LaurentPoly::one())).collect::<Result<Vec<_>>>()?;
    Ok(MomentTable::toeplitz(-n, c))
}

pub fn find_angles_from_pair(p: &ComplexPoly, q: &ComplexPoly, tol: &Tolerances) -> Result<GqspSynthesis> {
    let n = p.degree();
    if p.is_zero() || q.is_zero() || n == 0 || q.degree() != n {
        return Err(QspError::InvalidInput("P and Q must both have degree n >= 1".into()));
    }
    let defect = unitarity_defect(p, q, CIRCLE_SAMPLES);
    if defect > tol.pair_tol {
        return Err(QspError::NotUnimodularPair { defect });
    }
    if q.coeff(0).norm() <= tol.pole_sep_tol * q.max_abs() {
        return Err(QspError::ParamOutOfDomain("Q(0) = 0: some step angle is a multiple of pi".into()));
    }
    let moments = pair_moments(p, q, tol)?;
    let dets: Vec<ToeplitzDets> = (0..=n).map(|i| toeplitz_dets(&moments, i, tol)).collect::<Result<_>>()?;
    if let Some(d) = dets.iter().find(|d| !d.quasi_definite) {
        return Err(QspError::NotQuasiDefinite { order: d.order });
    }
    let tan2: Vec<C64> = (1..=n).map(|i| -dets[i].h_plus * dets[i].h_minus / (dets[i].h * dets[i].h)).collect();
    let mut tt = Vec::with_capacity(n);
    for t2 in &tan2 {
        if t2.re <= 0.0 || t2.im.abs() > 1e-6 * t2.norm() {
            return Err(QspError::BranchSelectionFailed { error: t2.im.abs().max(-t2.re) });
        }
        tt.push(t2.re.sqrt());
    }
    let mut r: Vec<C64> = (1..=n)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            dets[i].h_plus * sign / (dets[i].h * tt[i - 1])
        })
        .collect();
    r.push(q.coeff(0) / p.lead());
    let mut theta = vec![r[0].norm().atan()];
    let mut phi = vec![-r[0].arg()];
    for i in 1..=n {
        theta.push(tt[i - 1].atan());
        if i < n {
            phi.push((-r[i - 1] / r[i]).arg());
        }
    }
    let partial: f64 = phi.iter().sum();
    phi.push(wrap(p.lead().arg() - partial));
    let angles = GqspAngles::new(theta, phi, Seed::Rotation);
    let built = gqsp_forward(&angles);
    let rebuild_err = coeff_error(built.p[n].coeffs(), p.coeffs());
    if rebuild_err > tol.rebuild_tol {
        return Err(QspError::BranchSelectionFailed { error: rebuild_err });
    }
    let qb = &built.q[n];
    let inner: C64 = qb.coeffs().iter().zip(q.coeffs()).map(|(a, b)| a * b.conj()).sum();
    let ph = if inner.norm() > 0.0 { inner / inner.norm() } else { ONE };
    let q_phase_err = coeff_error(qb.coeffs(), q.scale(ph).coeffs());
    let printed_phase_ratio_defect = (1..n)
        .map(|i| {
            let ratio = dets[i].h_plus * dets[i + 1].h_minus / (dets[i].h_minus * dets[i + 1].h_plus);
            (C64::from_polar(1.0, 2.0 * angles.phi[i]) - ratio).norm()
        })
        .fold(0.0, f64::max);
    Ok(GqspSynthesis {
        angles,
        moments,
        dets,
        tan2_theta: tan2,
        rebuild_err,
        q_phase_err,
        unitarity_defect: defect,
        printed_phase_ratio_defect,
    })
}

pub fn wrap(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Off-diagonal and diagonal extremes of L[Qt_i P_j] with L built from (P_n, Q_n).
#[derive(Clone, Debug)]
pub struct BiorthReport {
    pub max_offdiag_rel: f64,
    pub min_diag: f64,
}

pub fn biorthogonality(seq: &GqspSequence, tol: &Tolerances) -> Result<BiorthReport> {
    let n = seq.p.len() - 1;
    let qt_n = LaurentPoly::from_poly(&seq.q[n], -(n as i64));
    let rf = ResidueFunctional::new(&seq.p[n], &qt_n, tol)?;
    let mut g = vec![vec![ZERO; n + 1]; n + 1];
    for (i, row) in g.iter_mut().enumerate() {
        let qt = LaurentPoly::from_poly(&seq.q[i], -(i as i64));
        for (j, v) in row.iter_mut().enumerate() {
            *v = rf.eval(0, &qt.mul(&LaurentPoly::from_poly(&seq.p[j], 0)))?;
        }
    }
    let mut off: f64 = 0.0;
    let mut min_diag = f64::INFINITY;
    for i in 0..=n {
        let d = g[i][i].norm();
        min_diag = min_diag.min(d);
        for j in 0..=n {
            if i != j {
                off = off.max(g[i][j].norm() / d);
            }
        }
    }
    Ok(BiorthReport { max_offdiag_rel: off, min_diag })
}

/// Smallest distance between a root of P and a root of Q.
pub fn common_root_gap(p: &ComplexPoly, q: &ComplexPoly, tol: &Tolerances) -> Result<f64> {
    if p.degree() == 0 || q.degree() == 0 {
        return Ok(f64::INFINITY);
    }
    let (rp, rq) = (poly_roots(p, tol.root_tol)?, poly_roots(q, tol.root_tol)?);
    Ok(rp
        .iter()
        .flat_map(|a| rq.iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min))
}
