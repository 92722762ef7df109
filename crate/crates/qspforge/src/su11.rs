//! SU(1,1)-QSP: Szegő recurrences, Verblunsky coefficients and
//! Bernstein-Szegő angle finding.

use crate::error::{QspError, Result};
use crate::functionals::{bernstein_szego_moments, bernstein_szego_moments_exact, toeplitz_dets, MomentTable};
use crate::polycore::{coeff_error, poly_roots, ComplexPoly, PolyMat2, I, ONE};
use crate::tol::Tolerances;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Roots must satisfy |r| <= 1 - DISK_MARGIN.
pub const DISK_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerblunskyCoeffs {
    pub nu: Vec<C64>,
}

impl VerblunskyCoeffs {
    pub fn new(nu: Vec<C64>) -> Result<Self> {
        for (i, v) in nu.iter().enumerate() {
            if v.norm() >= 1.0 || !v.norm().is_finite() {
                return Err(QspError::VerblunskyOutOfDisk { index: i + 1, modulus: v.norm() });
            }
        }
        Ok(VerblunskyCoeffs { nu })
    }
}

#[derive(Clone, Debug)]
pub struct SzegoSequence {
    pub phat: Vec<ComplexPoly>,
    pub qtilde: Vec<ComplexPoly>,
}

/// P_j = z P_{j-1} - conj(nu_j) Qt_{j-1},  Qt_j = Qt_{j-1} - nu_j z P_{j-1},  P_0 = Qt_0 = 1.
pub fn szego_forward(nu: &VerblunskyCoeffs) -> SzegoSequence {
    let mut out = SzegoSequence { phat: vec![ComplexPoly::one()], qtilde: vec![ComplexPoly::one()] };
    for v in &nu.nu {
        let (p, q) = (out.phat.last().unwrap(), out.qtilde.last().unwrap());
        let zp = p.shift(1);
        let np = &zp - &q.scale(v.conj());
        let nq = q - &zp.scale(*v);
        out.phat.push(np);
        out.qtilde.push(nq);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Su11Angles {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta_tilde: Vec<f64>,
    /// Sign s in tanh(theta) = s tan^2(theta_tilde / 2).
    pub tilde_sign: Vec<i8>,
    /// prod cosh^2 theta_k, for i = 0..n.
    pub chi: Vec<f64>,
    /// Constant with P_i = alpha_i * (first entry of `su11_protocol_pair`).
    pub alpha: Vec<C64>,
}

impl Su11Angles {
    pub fn from_theta_phi(theta: Vec<f64>, phi: Vec<f64>) -> Self {
        let theta_tilde = theta.iter().map(|t| 2.0 * t.abs().tanh().sqrt().atan()).collect();
        let tilde_sign = theta.iter().map(|t| if *t < 0.0 { -1 } else { 1 }).collect();
        let mut chi = vec![1.0];
        let mut alpha = vec![ONE];
        for (t, p) in theta.iter().zip(&phi) {
            chi.push(chi.last().unwrap() * t.cosh().powi(2));
            alpha.push(alpha.last().unwrap() * C64::from_polar(t.abs().exp() / t.cosh(), -p));
        }
        Su11Angles { theta, phi, theta_tilde, tilde_sign, chi, alpha }
    }

    pub fn steps(&self) -> usize {
        self.theta.len()
    }
}

/// prod e^{i phi_k + |theta_k|} cosh theta_k, the constant as displayed in the literature.
pub fn printed_alpha(ang: &Su11Angles) -> Vec<C64> {
    let mut out = vec![ONE];
    for (t, p) in ang.theta.iter().zip(&ang.phi) {
        out.push(out.last().unwrap() * C64::from_polar(t.abs().exp() * t.cosh(), *p));
    }
    out
}

/// prod (1 - |nu_k|^2)^{-2}.
pub fn chi_squared_form(nu: &VerblunskyCoeffs) -> Vec<f64> {
    let mut out = vec![1.0];
    for v in &nu.nu {
        out.push(out.last().unwrap() / (1.0 - v.norm_sqr()).powi(2));
    }
    out
}

/// theta_j = artanh|nu_j| and phi_j = pi + arg(nu_j) - arg(nu_{j-1}) with arg(nu_0) = pi/2.
///
/// A zero nu_j gets phi_j = 0; the running phase absorbs the resulting factor
/// so that later steps still reproduce their nu.
pub fn nu_to_angles(nu: &VerblunskyCoeffs) -> Su11Angles {
    let mut running = FRAC_PI_2;
    let mut theta = Vec::with_capacity(nu.nu.len());
    let mut phi = Vec::with_capacity(nu.nu.len());
    for v in &nu.nu {
        theta.push(v.norm().atanh());
        let p = if v.norm() == 0.0 { 0.0 } else { wrap(PI + v.arg() - running) };
        running += p - PI;
        phi.push(p);
    }
    Su11Angles::from_theta_phi(theta, phi)
}

/// nu_j = i prod_{k<=j} (-e^{i phi_k}) tanh theta_j.
pub fn angles_to_nu(theta: &[f64], phi: &[f64]) -> Vec<C64> {
    let mut acc = I;
    theta
        .iter()
        .zip(phi)
        .map(|(t, p)| {
            acc *= -C64::from_polar(1.0, *p);
            acc * t.tanh()
        })
        .collect()
}

fn wrap(x: f64) -> f64 {
    crate::gqsp::wrap(x)
}

/// One protocol step: phase, then the controlled signal, then the hyperbolic rotation,
/// R(i theta) diag(z, 1) diag(e^{i phi}, 1) =
/// [[e^{i phi} cosh(theta) z, i sinh(theta)], [i e^{i phi} sinh(theta) z, -cosh(theta)]].
///
/// Applying the phase before the signal (rather than after, as in the displayed
/// single-gate block) is what makes nu_j = i prod_{k<=j}(-e^{i phi_k}) tanh theta_j hold.
pub fn su11_transfer(theta: f64, phi: f64) -> PolyMat2 {
    let e = C64::from_polar(1.0, phi);
    let (c, s) = (theta.cosh(), theta.sinh());
    PolyMat2::from_entries(
        ComplexPoly::monomial(1, e * c),
        ComplexPoly::constant(I * s),
        ComplexPoly::monomial(1, I * e * s),
        ComplexPoly::constant(C64::new(-c, 0.0)),
    )
}

/// T(i theta, phi) = [[e^{i phi} cosh(theta) z, i e^{i phi} sinh(theta)], [i sinh(theta) z, -cosh(theta)]],
/// the phase-after form used by the single-gate block identity.
pub fn su11_transfer_phase_after(theta: f64, phi: f64) -> PolyMat2 {
    let e = C64::from_polar(1.0, phi);
    let (c, s) = (theta.cosh(), theta.sinh());
    PolyMat2::from_entries(
        ComplexPoly::monomial(1, e * c),
        ComplexPoly::constant(I * e * s),
        ComplexPoly::monomial(1, I * s),
        ComplexPoly::constant(C64::new(-c, 0.0)),
    )
}

/// Normalized transfer product T_n ... T_1 / prod(|sinh| + cosh).
pub fn su11_block_product(ang: &Su11Angles) -> PolyMat2 {
    let mats: Vec<PolyMat2> = ang
        .theta
        .iter()
        .zip(&ang.phi)
        .map(|(&t, &p)| su11_transfer(t, p).scale(C64::new((-t.abs()).exp(), 0.0)))
        .collect();
    crate::polycore::product_left(&mats)
}

/// The pair generated from the seed (1, -1): first column minus second column of
/// the normalized product. alpha_n times the first entry is the monic Szegő polynomial.
pub fn su11_protocol_pair(ang: &Su11Angles) -> (ComplexPoly, ComplexPoly) {
    let b = su11_block_product(ang);
    (&b.m[0][0] - &b.m[0][1], &b.m[1][0] - &b.m[1][1])
}

/// One step in gate form: entries of U-coefficient (`u`) and constant (`c`) parts.
#[derive(Clone, Debug)]
pub struct Su11Block {
    /// [[a U, b], [c U, d]] stored as [[a, b], [c, d]].
    pub entries: [[C64; 2]; 2],
    pub normalization: f64,
    /// max entry deviation of normalization * block from T(i theta, phi).
    pub identity_defect: f64,
}

pub fn su11_block_structure(theta: f64, phi: f64, sign: i8) -> Su11Block {
    let tt = 2.0 * theta.abs().tanh().sqrt().atan();
    let (c2, s2) = ((tt / 2.0).cos().powi(2), (tt / 2.0).sin().powi(2));
    let e = C64::from_polar(1.0, phi);
    let sg = f64::from(sign.signum());
    let entries = [[e * c2, I * e * (sg * s2)], [I * (sg * s2), C64::new(-c2, 0.0)]];
    let normalization = theta.sinh().abs() + theta.cosh();
    let t = su11_transfer_phase_after(theta, phi);
    let want = [[t.m[0][0].coeff(1), t.m[0][1].coeff(0)], [t.m[1][0].coeff(1), t.m[1][1].coeff(0)]];
    let mut defect: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            defect = defect.max((entries[r][c] * normalization - want[r][c]).norm());
        }
    }
    Su11Block { entries, normalization, identity_defect: defect }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentPath {
    Quadrature,
    Exact,
}

#[derive(Clone, Debug)]
pub struct Su11Synthesis {
    pub nu: VerblunskyCoeffs,
    pub angles: Su11Angles,
    pub moments: MomentTable,
    pub moment_path: MomentPath,
    pub rebuild_err: f64,
    pub max_root_modulus: f64,
}

/// Verblunsky coefficients from the Bernstein-Szegő moments of the target:
/// conj(nu_j) = (-1)^{j+1} h_j^+ / h_j.
pub fn find_angles_from_target(target: &ComplexPoly, tol: &Tolerances) -> Result<Su11Synthesis> {
    if target.is_zero() {
        return Err(QspError::InvalidInput("target is the zero polynomial".into()));
    }
    let (target, _) = target.monic();
    let n = target.degree();
    let max_root_modulus = if n == 0 {
        0.0
    } else {
        poly_roots(&target, tol.root_tol)?.iter().map(|r| r.norm()).fold(0.0, f64::max)
    };
    if max_root_modulus > 1.0 - DISK_MARGIN {
        return Err(QspError::RootOnOrOutsideDisk { modulus: max_root_modulus });
    }
    let bs = bernstein_szego_moments(&target, n, tol)?;
    let (moments, moment_path) = if bs.converged {
        (bs.table, MomentPath::Quadrature)
    } else {
        (bernstein_szego_moments_exact(&target, n, tol)?, MomentPath::Exact)
    };
    let mut nu = Vec::with_capacity(n);
    for j in 1..=n {
        let d = toeplitz_dets(&moments, j, tol)?;
        if !d.quasi_definite {
            return Err(QspError::NotQuasiDefinite { order: j });
        }
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        nu.push((d.h_plus / d.h * sign).conj());
    }
    let nu = VerblunskyCoeffs::new(nu)?;
    let rebuilt = szego_forward(&nu);
    let rebuild_err = coeff_error(rebuilt.phat[n].coeffs(), target.coeffs());
    if rebuild_err > tol.rebuild_tol {
        return Err(QspError::ReconstructionMismatch { max_coeff_err: rebuild_err });
    }
    let angles = nu_to_angles(&nu);
    Ok(Su11Synthesis { nu, angles, moments, moment_path, rebuild_err, max_root_modulus })
}

/// Gaussian binomial [n, k]_q.
pub fn gaussian_binomial(n: usize, k: usize, q: C64) -> C64 {
    if k > n {
        return C64::new(0.0, 0.0);
    }
    (0..k).fold(ONE, |acc, j| acc * (ONE - q.powu((n - j) as u32)) / (ONE - q.powu((j + 1) as u32)))
}

/// Rogers-Szegő Phi_n(z) = sum_j (-1)^{n-j} [n, j]_q q^{(n-j)/2} z^j.
pub fn rogers_szego_poly(q: C64, n: usize) -> ComplexPoly {
    let sq = q.sqrt();
    ComplexPoly::new(
        (0..=n)
            .map(|j| {
                let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
                gaussian_binomial(n, j, q) * sq.powu((n - j) as u32) * sign
            })
            .collect(),
    )
}

/// nu_i = (-1)^{i-1} q^{i/2}.
pub fn rogers_szego_nu(q: C64, n: usize) -> Result<VerblunskyCoeffs> {
    let sq = q.sqrt();
    VerblunskyCoeffs::new(
        (1..=n)
            .map(|i| sq.powu(i as u32) * if i % 2 == 1 { 1.0 } else { -1.0 })
            .collect(),
    )
}

/// Gram matrix G_ij = (1/2pi) int conj(P_i) P_j / |P_n|^2 on m trapezoid nodes.
pub fn opuc_gram(phat: &[ComplexPoly], m: usize) -> Vec<Vec<C64>> {
    let n = phat.len() - 1;
    let w: Vec<f64> = phat[n].eval_on_circle(m).iter().map(|v| 1.0 / v.norm_sqr()).collect();
    let vals: Vec<Vec<C64>> = phat.iter().map(|p| p.eval_on_circle(m)).collect();
    (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    let s: C64 = (0..m).map(|k| vals[i][k].conj() * vals[j][k] * w[k]).sum();
                    s / m as f64
                })
                .collect()
        })
        .collect()
}
