//! Two-path verification: symbolic transfer products against dense gate-level simulation.
//!
//! Register layout for the gate path, most significant first: one ancilla per step
//! (step 1 highest), the shared signal qubit b, then the d-dimensional system.

use crate::error::{QspError, Result};
use crate::gqsp::{biorthogonality, find_angles_from_pair, gqsp_forward, unitarity_defect, GqspAngles, Seed};
use crate::opqsp::{
    angles_to_recurrence, norm_bound_ratios, recurrence_to_angles, recurrence_to_polys, transfer_products,
    OpqspAngles, ThreeTermRecurrence,
};
use crate::polycore::{circle_points, coeff_error, poly_roots, product_left, ComplexPoly, PolyMat2, I, ONE, ZERO};
use crate::su11::{
    angles_to_nu, find_angles_from_target, su11_block_product, su11_protocol_pair, su11_transfer, szego_forward,
    Su11Angles, VerblunskyCoeffs,
};
use crate::tol::Tolerances;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MAX_STATE_DIM: usize = 4096;
pub const MAX_SYSTEM_DIM: usize = 16;
pub const MAX_GATE_STEPS: usize = 8;
pub const CIRCLE_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Opqsp,
    Gqsp,
    Su11,
}

impl std::str::FromStr for Variant {
    type Err = QspError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opqsp" => Ok(Variant::Opqsp),
            "gqsp" => Ok(Variant::Gqsp),
            "su11" => Ok(Variant::Su11),
            _ => Err(QspError::InvalidInput(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum VariantAngles {
    Opqsp(OpqspAngles),
    Gqsp(GqspAngles),
    Su11(Su11Angles),
}

impl VariantAngles {
    pub fn variant(&self) -> Variant {
        match self {
            VariantAngles::Opqsp(_) => Variant::Opqsp,
            VariantAngles::Gqsp(_) => Variant::Gqsp,
            VariantAngles::Su11(_) => Variant::Su11,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            VariantAngles::Opqsp(a) => a.len(),
            VariantAngles::Gqsp(a) => a.steps(),
            VariantAngles::Su11(a) => a.steps(),
        }
    }
}

/// Diagonal unitary diag(e^{i phi_k}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryModel {
    pub eigenphases: Vec<f64>,
}

impl UnitaryModel {
    pub fn new(eigenphases: Vec<f64>) -> Self {
        UnitaryModel { eigenphases }
    }

    pub fn identity(d: usize) -> Self {
        UnitaryModel { eigenphases: vec![0.0; d] }
    }

    pub fn random(d: usize, rng: &mut impl Rng) -> Self {
        UnitaryModel { eigenphases: (0..d).map(|_| rng.gen_range(-PI..PI)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.eigenphases.len()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.eigenphases.iter().map(|p| C64::from_polar(1.0, *p)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub variant: Variant,
    pub steps: usize,
    pub max_coeff_err: f64,
    pub max_circle_err: f64,
    pub alpha_claimed: f64,
    pub alpha_observed: f64,
    pub unitarity_defect: f64,
    /// Phase the gate path carries relative to the transfer product (gate path only).
    pub global_phase: Option<[f64; 2]>,
}

impl BlockReport {
    /// ReconstructionMismatch when the coefficient error exceeds `rebuild_tol`.
    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        if self.max_coeff_err > tol.rebuild_tol || !self.max_coeff_err.is_finite() {
            return Err(QspError::ReconstructionMismatch { max_coeff_err: self.max_coeff_err });
        }
        Ok(())
    }
}

fn spectral_norm2(m: [[C64; 2]; 2]) -> f64 {
    // largest singular value of a 2x2 matrix from the eigenvalues of M^* M
    let f2: f64 = m.iter().flatten().map(|x| x.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm_sqr();
    ((f2 + (f2 * f2 - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt()
}

/// Least-squares scale s minimizing |s got - want| over coefficients.
fn fitted_scale(got: &ComplexPoly, want: &ComplexPoly) -> C64 {
    let n = got.coeffs().len().max(want.coeffs().len());
    let (mut num, mut den) = (ZERO, 0.0);
    for k in 0..n {
        num += got.coeff(k).conj() * want.coeff(k);
        den += got.coeff(k).norm_sqr();
    }
    if den == 0.0 {
        ZERO
    } else {
        num / den
    }
}

/// Block (1,1) polynomial, normalized 2x2 product, and claimed alpha with alpha * block = target.
fn symbolic_block(angles: &VariantAngles) -> (ComplexPoly, PolyMat2, C64) {
    match angles {
        VariantAngles::Opqsp(a) => {
            let prod = transfer_products(a).pop().unwrap();
            let alpha = a.alpha_at(a.len());
            let block = prod.scale(C64::new(1.0 / alpha, 0.0));
            (block.m[0][0].clone(), block, C64::new(alpha, 0.0))
        }
        VariantAngles::Gqsp(a) => {
            let s = gqsp_forward(a);
            let n = s.p.len() - 1;
            let p = s.p[n].clone();
            let q = s.q[n].clone();
            let block = PolyMat2::from_entries(p.clone(), ComplexPoly::zero(), q, ComplexPoly::zero());
            (p, block, *a.alpha().last().unwrap())
        }
        VariantAngles::Su11(a) => {
            let (p, _) = su11_protocol_pair(a);
            (p, su11_block_product(a), *a.alpha.last().unwrap())
        }
    }
}

/// Builds the transfer product symbolically and compares alpha * (1,1) entry with `target`.
///
/// The SU(1,1) (1,1) entry is the first component generated from the seed (1, -1),
/// and the GQSP entry is P_n; both carry the same alpha as their synthesis routines.
pub fn verify_transfer_product(angles: &VariantAngles, target: &ComplexPoly) -> BlockReport {
    let (p, block, alpha) = symbolic_block(angles);
    let rescaled = p.scale(alpha);
    let max_coeff_err = coeff_error(rescaled.coeffs(), target.coeffs());
    let scale = target.max_abs().max(1.0);
    let zs = circle_points(CIRCLE_SAMPLES);
    let max_circle_err = zs
        .iter()
        .map(|&z| (rescaled.eval(z) - target.eval(z)).norm() / scale)
        .fold(0.0, f64::max);
    let alpha_observed = fitted_scale(&p, target).norm();
    let unitarity = match angles {
        VariantAngles::Gqsp(_) => unitarity_defect(&block.m[0][0], &block.m[1][0], CIRCLE_SAMPLES),
        // a block of a unitary is a contraction
        _ => zs.iter().map(|&z| (spectral_norm2(block.eval(z)) - 1.0).max(0.0)).fold(0.0, f64::max),
    };
    BlockReport {
        variant: angles.variant(),
        steps: angles.steps(),
        max_coeff_err,
        max_circle_err,
        alpha_claimed: alpha.norm(),
        alpha_observed,
        unitarity_defect: unitarity,
        global_phase: None,
    }
}

/// Dense state restricted to the columns that start with every step ancilla in |0>.
struct Register {
    steps: usize,
    d: usize,
    state: DMatrix<C64>,
}

type Gate1 = [[C64; 2]; 2];
type Gate2 = [[C64; 4]; 4];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ry(theta: f64) -> Gate1 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co), c(-s)], [c(s), c(co)]]
}

fn rz(theta: f64) -> Gate1 {
    [[C64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, C64::from_polar(1.0, theta / 2.0)]]
}

fn rxy(theta: f64) -> Gate2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let mut g = [[ZERO; 4]; 4];
    g[0][0] = ONE;
    g[3][3] = ONE;
    g[1][1] = c(co);
    g[2][2] = c(co);
    g[1][2] = -I * s;
    g[2][1] = -I * s;
    g
}

const X: Gate1 = [[ZERO, ONE], [ONE, ZERO]];
const Z: Gate1 = [[ONE, ZERO], [ZERO, C64 { re: -1.0, im: 0.0 }]];

fn cnot() -> Gate2 {
    let mut g = [[ZERO; 4]; 4];
    g[0][0] = ONE;
    g[1][1] = ONE;
    g[2][3] = ONE;
    g[3][2] = ONE;
    g
}

#[derive(Clone, Copy)]
enum Wire {
    Anc(usize),
    Signal,
}

impl Register {
    fn new(steps: usize, d: usize) -> Result<Self> {
        let dim = (1usize << steps) * 2 * d;
        if d > MAX_SYSTEM_DIM || steps > MAX_GATE_STEPS || dim > MAX_STATE_DIM {
            return Err(QspError::DimensionTooLarge { dim, cap: MAX_STATE_DIM });
        }
        let mut state = DMatrix::zeros(dim, 2 * d);
        for k in 0..2 * d {
            state[(k, k)] = ONE;
        }
        Ok(Register { steps, d, state })
    }

    fn stride(&self, w: Wire) -> usize {
        match w {
            Wire::Signal => self.d,
            Wire::Anc(j) => 2 * self.d << (self.steps - 1 - j),
        }
    }

    fn bit(&self, row: usize, w: Wire) -> usize {
        (row / self.stride(w)) % 2
    }

    fn apply1(&mut self, w: Wire, g: Gate1) {
        let s = self.stride(w);
        for col in 0..self.state.ncols() {
            for r in 0..self.state.nrows() {
                if (r / s) % 2 == 0 {
                    let (x0, x1) = (self.state[(r, col)], self.state[(r + s, col)]);
                    self.state[(r, col)] = g[0][0] * x0 + g[0][1] * x1;
                    self.state[(r + s, col)] = g[1][0] * x0 + g[1][1] * x1;
                }
            }
        }
    }

    /// Two-qubit gate with `hi` as the first tensor factor.
    fn apply2(&mut self, hi: Wire, lo: Wire, g: Gate2) {
        let (s1, s2) = (self.stride(hi), self.stride(lo));
        for col in 0..self.state.ncols() {
            for r in 0..self.state.nrows() {
                if (r / s1) % 2 == 0 && (r / s2) % 2 == 0 {
                    let idx = [r, r + s2, r + s1, r + s1 + s2];
                    let x: Vec<C64> = idx.iter().map(|&i| self.state[(i, col)]).collect();
                    for (a, &i) in idx.iter().enumerate() {
                        self.state[(i, col)] = (0..4).map(|b| g[a][b] * x[b]).sum();
                    }
                }
            }
        }
    }

    /// Applies the diagonal U on the system wherever every control wire reads 0.
    fn controlled_u(&mut self, controls: &[Wire], u: &[C64]) {
        for col in 0..self.state.ncols() {
            for r in 0..self.state.nrows() {
                if controls.iter().all(|&w| self.bit(r, w) == 0) {
                    self.state[(r, col)] *= u[r % self.d];
                }
            }
        }
    }

    /// Rows with every step ancilla in |0>: the 2d x 2d block over (b, system).
    fn block(&self) -> DMatrix<C64> {
        self.state.rows(0, 2 * self.d).into_owned()
    }

    /// max |S^* S - I| over the tracked columns.
    fn isometry_defect(&self) -> f64 {
        let g = self.state.adjoint() * &self.state;
        let mut worst: f64 = 0.0;
        for r in 0..g.nrows() {
            for c2 in 0..g.ncols() {
                let want = if r == c2 { ONE } else { ZERO };
                worst = worst.max((g[(r, c2)] - want).norm());
            }
        }
        worst
    }
}

fn opqsp_step(reg: &mut Register, j: usize, tau: f64, omega: f64, u: &[C64]) {
    let a = Wire::Anc(j);
    let b = Wire::Signal;
    reg.apply1(a, X);
    reg.apply1(b, Z);
    reg.apply2(a, b, rxy(2.0 * (tau - PI)));
    reg.apply1(a, X);
    reg.apply1(a, ry(2.0 * (1.0 / omega.tan() / 2f64.sqrt()).atan()));
    reg.apply2(a, b, rxy(PI / 2.0));
    reg.controlled_u(&[a, b], u);
    reg.apply1(a, ry(2.0 * omega));
}

fn su11_step(reg: &mut Register, j: usize, theta: f64, phi: f64, theta_tilde: f64, u: &[C64]) {
    let a = Wire::Anc(j);
    let b = Wire::Signal;
    let sign = if theta < 0.0 { -1.0 } else { 1.0 };
    reg.apply1(b, [[C64::from_polar(1.0, phi), ZERO], [ZERO, ONE]]);
    reg.controlled_u(&[b], u);
    reg.apply1(a, ry(-theta_tilde));
    // selects Z on a = 0 and sign * iX on a = 1
    reg.apply1(b, Z);
    reg.apply1(b, rz(-sign * PI / 2.0));
    reg.apply2(a, b, cnot());
    reg.apply1(b, rz(sign * PI / 2.0));
    reg.apply1(a, ry(theta_tilde));
}

/// Composes the literal per-step gate lists on a dense register, projects every step
/// ancilla onto |0>, and compares the block with the transfer product evaluated at U.
///
/// The OP-QSP gate list realizes -T/alpha per step, so the expected global phase is (-1)^n;
/// the comparison removes that phase and reports it.
pub fn verify_gate_level(angles: &VariantAngles, u: &UnitaryModel) -> Result<BlockReport> {
    let n = angles.steps();
    let d = u.dim();
    if d == 0 {
        return Err(QspError::InvalidInput("unitary model needs at least one eigenphase".into()));
    }
    let mut reg = Register::new(n.max(1), d)?;
    let ev = u.eigenvalues();
    let (reference, phase, alpha_claimed): (PolyMat2, C64, f64) = match angles {
        VariantAngles::Opqsp(a) => {
            for j in 0..n {
                opqsp_step(&mut reg, j, a.tau[j], a.omega[j], &ev);
            }
            let alpha = a.alpha_at(n);
            let prod = transfer_products(a).pop().unwrap().scale(c(1.0 / alpha));
            let phase = if n % 2 == 0 { ONE } else { -ONE };
            (prod, phase, alpha)
        }
        VariantAngles::Su11(a) => {
            for j in 0..n {
                su11_step(&mut reg, j, a.theta[j], a.phi[j], a.theta_tilde[j], &ev);
            }
            let norm: f64 = a.theta.iter().map(|t| t.abs().exp()).product();
            (su11_block_product(a), ONE, norm)
        }
        VariantAngles::Gqsp(_) => {
            return Err(QspError::InvalidInput("gate-level verification covers opqsp and su11".into()))
        }
    };
    let got = reg.block();
    let mut max_err: f64 = 0.0;
    let mut diag_err: f64 = 0.0;
    let (mut num, mut den) = (ZERO, 0.0);
    for bi in 0..2 {
        for bj in 0..2 {
            for h in 0..d {
                for h2 in 0..d {
                    let g = got[(bi * d + h, bj * d + h2)] * phase.conj();
                    let want = if h == h2 { reference.m[bi][bj].eval(ev[h]) } else { ZERO };
                    max_err = max_err.max((g - want).norm());
                    if h != h2 {
                        diag_err = diag_err.max(g.norm());
                    }
                    num += g.conj() * want;
                    den += g.norm_sqr();
                }
            }
        }
    }
    // scalar functional calculus: the (0,0) block on eigenvector k is P(e^{i phi_k}) / alpha
    for h in 0..d {
        let g = got[(h, h)] * phase.conj();
        diag_err = diag_err.max((g - reference.m[0][0].eval(ev[h])).norm());
    }
    let observed_phase = if num.norm() > 0.0 { (num / num.norm()).conj() * phase } else { ZERO };
    let fit = if den > 0.0 { num.norm() / den } else { 0.0 };
    Ok(BlockReport {
        variant: angles.variant(),
        steps: n,
        max_coeff_err: max_err,
        max_circle_err: diag_err,
        alpha_claimed,
        alpha_observed: alpha_claimed / fit.max(f64::MIN_POSITIVE),
        unitarity_defect: reg.isometry_defect(),
        global_phase: Some([observed_phase.re, observed_phase.im]),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    /// Largest residual seen (or the smallest margin, for margin checks).
    pub worst: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertySummary {
    pub variant: Variant,
    pub seed: u64,
    pub instances: usize,
    pub n_max: usize,
    pub checks: Vec<CheckSummary>,
}

impl PropertySummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed == c.total)
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Residual per named check; `None` for an instance that could not be evaluated.
type Outcome = Vec<(&'static str, Option<f64>, f64)>;

fn summarize(variant: Variant, seed: u64, n_max: usize, outcomes: Vec<Outcome>) -> PropertySummary {
    let mut checks: Vec<CheckSummary> = Vec::new();
    for out in &outcomes {
        for (name, value, limit) in out {
            let entry = match checks.iter_mut().position(|c| c.name == *name) {
                Some(i) => &mut checks[i],
                None => {
                    checks.push(CheckSummary { name: name.to_string(), passed: 0, total: 0, worst: 0.0 });
                    checks.last_mut().unwrap()
                }
            };
            entry.total += 1;
            match value {
                Some(v) if v <= limit => {
                    entry.passed += 1;
                    entry.worst = entry.worst.max(*v);
                }
                Some(v) => entry.worst = entry.worst.max(*v),
                None => entry.worst = f64::INFINITY,
            }
        }
    }
    PropertySummary { variant, seed, instances: outcomes.len(), n_max, checks }
}

fn opqsp_instance(rec: ThreeTermRecurrence, omega1: f64, tol: &Tolerances) -> Outcome {
    let n = rec.steps();
    let ang = match recurrence_to_angles(&rec, omega1, tol) {
        Ok(a) => a,
        Err(_) => return vec![("round_trip", None, 0.0), ("norm_bound", None, 0.0), ("real_zeros", None, 0.0)],
    };
    let want = recurrence_to_polys(&rec, n);
    let prods = transfer_products(&ang);
    let rebuild = (1..=n).map(|i| coeff_error(prods[i].m[0][0].coeffs(), want[i].coeffs())).fold(0.0, f64::max);
    let back = angles_to_recurrence(&ang);
    let rec_err = rec
        .a_sq
        .iter()
        .zip(&back.a_sq)
        .chain(rec.b.iter().zip(&back.b))
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(rebuild, f64::max);
    let polys: Vec<ComplexPoly> = prods.iter().map(|m| m.m[0][0].clone()).collect();
    let ratio = norm_bound_ratios(&polys, &ang, CIRCLE_SAMPLES).into_iter().skip(1).fold(0.0, f64::max);
    let zeros = poly_roots(&want[n], tol.root_tol)
        .map(|r| r.iter().map(|z| z.im.abs()).fold(0.0, f64::max))
        .ok();
    vec![
        ("round_trip", Some(rec_err), 1e-9),
        // strict bound |P_hat_i| < alpha_i, tracked as the ratio minus one
        ("norm_bound", Some(ratio - 1.0), -f64::EPSILON),
        ("real_zeros", zeros, 1e-8),
    ]
}

fn gqsp_instance(ang: GqspAngles, tol: &Tolerances) -> Outcome {
    let seq = gqsp_forward(&ang);
    let n = seq.p.len() - 1;
    let defect = (0..=n).map(|i| unitarity_defect(&seq.p[i], &seq.q[i], CIRCLE_SAMPLES)).fold(0.0, f64::max);
    let rebuild = find_angles_from_pair(&seq.p[n], &seq.q[n], tol).ok().map(|s| s.rebuild_err);
    let biorth = biorthogonality(&seq, tol).ok().map(|r| r.max_offdiag_rel);
    vec![("unimodularity", Some(defect), 1e-11), ("round_trip", rebuild, 1e-8), ("biorthogonality", biorth, 1e-8)]
}

fn su11_instance(nu: VerblunskyCoeffs, tol: &Tolerances) -> Outcome {
    let n = nu.nu.len();
    let sz = szego_forward(&nu);
    let zeros = (1..=n)
        .map(|i| poly_roots(&sz.phat[i], tol.root_tol).map(|r| r.iter().map(|z| z.norm()).fold(0.0, f64::max)))
        .collect::<Result<Vec<f64>>>()
        .ok()
        .map(|v| v.into_iter().fold(0.0, f64::max) - 1.0);
    let ang = crate::su11::nu_to_angles(&nu);
    let nu_back = angles_to_nu(&ang.theta, &ang.phi);
    let angle_err = nu.nu.iter().zip(&nu_back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let (p, _) = su11_protocol_pair(&ang);
    let protocol = coeff_error(p.scale(ang.alpha[n]).coeffs(), sz.phat[n].coeffs());
    let synth = find_angles_from_target(&sz.phat[n], tol)
        .ok()
        .map(|s| s.nu.nu.iter().zip(&nu.nu).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    vec![
        ("zeros_in_disk", zeros, -f64::EPSILON),
        ("angle_round_trip", Some(angle_err.max(protocol)), 1e-10),
        ("moment_round_trip", synth, 1e-7),
    ]
}

/// Seeded random ensembles running each variant's invariants; deterministic given the seed.
pub fn property_suite(variant: Variant, ensemble_size: usize, n_max: usize, seed: u64, tol: &Tolerances) -> PropertySummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_max = n_max.max(1);
    let outcomes: Vec<Outcome> = match variant {
        Variant::Opqsp => {
            let inst: Vec<(ThreeTermRecurrence, f64)> = (0..ensemble_size)
                .map(|_| {
                    let n = rng.gen_range(1..=n_max);
                    let b = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let a_sq = (1..n).map(|_| rng.gen_range(0.1..1.0)).collect();
                    (ThreeTermRecurrence { b, a_sq }, rng.gen_range(0.2..1.3))
                })
                .collect();
            inst.into_par_iter().map(|(r, w)| opqsp_instance(r, w, tol)).collect()
        }
        Variant::Gqsp => {
            let inst: Vec<GqspAngles> = (0..ensemble_size)
                .map(|_| {
                    let n = rng.gen_range(1..=n_max);
                    let theta = (0..=n).map(|_| rng.gen_range(0.2..1.2)).collect();
                    let phi = (0..=n).map(|_| rng.gen_range(-PI..PI)).collect();
                    GqspAngles::new(theta, phi, Seed::Rotation)
                })
                .collect();
            inst.into_par_iter().map(|a| gqsp_instance(a, tol)).collect()
        }
        Variant::Su11 => {
            let inst: Vec<Vec<C64>> = (0..ensemble_size)
                .map(|_| {
                    let n = rng.gen_range(1..=n_max);
                    (0..n).map(|_| C64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(-PI..PI))).collect()
                })
                .collect();
            inst.into_par_iter()
                .map(|nu| su11_instance(VerblunskyCoeffs::new(nu).expect("|nu| < 1 by construction"), tol))
                .collect()
        }
    };
    summarize(variant, seed, n_max, outcomes)
}

/// Single-step SU(1,1) transfer at U, for spot checks against the gadget.
pub fn su11_step_matrix(theta: f64, phi: f64, z: C64) -> [[C64; 2]; 2] {
    product_left(&[su11_transfer(theta, phi)]).eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opqsp::{family, FamilySpec};
    use crate::su11::{nu_to_angles, rogers_szego_nu, rogers_szego_poly};
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn opqsp_hermite_transfer_product() {
        let f = family(&FamilySpec::Hermite { gamma: 2.0 }, 6, &tol()).unwrap();
        let want = recurrence_to_polys(&f.recurrence, 6).pop().unwrap();
        let r = verify_transfer_product(&VariantAngles::Opqsp(f.angles.clone()), &want);
        assert!(r.max_coeff_err <= 1e-9, "{r:?}");
        assert!((r.alpha_observed - r.alpha_claimed).abs() <= 1e-9 * r.alpha_claimed);
        assert!(r.unitarity_defect <= 1e-12);
        assert!(r.check(&tol()).is_ok());
    }

    #[test]
    fn gqsp_monomial_angles() {
        let n = 5;
        let ang = GqspAngles::new(vec![0.0; n], vec![0.0; n], Seed::Unit);
        let r = verify_transfer_product(&VariantAngles::Gqsp(ang), &ComplexPoly::monomial(n, ONE));
        assert!(r.max_coeff_err <= 1e-14);
        assert!(r.unitarity_defect <= 1e-14);
    }

    #[test]
    fn gqsp_mismatch_is_reported() {
        let ang = GqspAngles::new(vec![0.0; 3], vec![0.0; 3], Seed::Unit);
        let r = verify_transfer_product(&VariantAngles::Gqsp(ang), &ComplexPoly::monomial(2, ONE));
        assert!(matches!(r.check(&tol()), Err(QspError::ReconstructionMismatch { .. })));
    }

    #[test]
    fn su11_rogers_szego() {
        let q = C64::new(0.25, 0.0);
        let nu = rogers_szego_nu(q, 5).unwrap();
        let r = verify_transfer_product(&VariantAngles::Su11(nu_to_angles(&nu)), &rogers_szego_poly(q, 5));
        assert!(r.max_coeff_err <= 1e-10, "{r:?}");
        assert!(r.unitarity_defect <= 1e-12);
    }

    #[test]
    fn opqsp_single_step_gate_block() {
        let ang = OpqspAngles::new(vec![0.0], vec![PI / 4.0]);
        let r = verify_gate_level(&VariantAngles::Opqsp(ang.clone()), &UnitaryModel::identity(1)).unwrap();
        assert!(r.max_coeff_err <= 1e-12, "{r:?}");
        let phase = r.global_phase.unwrap();
        assert!((phase[0] + 1.0).abs() < 1e-12 && phase[1].abs() < 1e-12);
        // block = [[1/2, i/sqrt2], [-i/2, 0]] / sqrt3 up to the gate phase
        let mut reg = Register::new(1, 1).unwrap();
        opqsp_step(&mut reg, 0, 0.0, PI / 4.0, &[ONE]);
        let b = reg.block();
        let s3 = 3f64.sqrt();
        let want = [[c(0.5), I / 2f64.sqrt()], [-I * 0.5, ZERO]];
        for r in 0..2 {
            for k in 0..2 {
                assert!((-b[(r, k)] - want[r][k] / s3).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn su11_gadget_without_rotation() {
        let phi = 0.7;
        let u = UnitaryModel::new(vec![0.3, -1.1]);
        let mut reg = Register::new(1, 2).unwrap();
        su11_step(&mut reg, 0, 0.0, phi, 0.0, &u.eigenvalues());
        let b = reg.block();
        for (h, z) in u.eigenvalues().iter().enumerate() {
            assert!((b[(h, h)] - C64::from_polar(1.0, phi) * z).norm() < 1e-14);
            assert!((b[(2 + h, 2 + h)] + ONE).norm() < 1e-14);
            assert!(b[(h, 2 + h)].norm() < 1e-14 && b[(2 + h, h)].norm() < 1e-14);
        }
    }

    #[test]
    fn su11_gadget_matches_step() {
        for &theta in &[0.4, -0.9] {
            let ang = Su11Angles::from_theta_phi(vec![theta], vec![1.3]);
            let z = C64::from_polar(1.0, 0.8);
            let mut reg = Register::new(1, 1).unwrap();
            su11_step(&mut reg, 0, theta, 1.3, ang.theta_tilde[0], &[z]);
            let want = su11_step_matrix(theta, 1.3, z);
            let norm = theta.abs().exp();
            for r in 0..2 {
                for k in 0..2 {
                    assert!((reg.block()[(r, k)] * norm - want[r][k]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dimension_cap() {
        let ang = OpqspAngles::new(vec![0.1; 9], vec![0.5; 9]);
        assert!(matches!(
            verify_gate_level(&VariantAngles::Opqsp(ang), &UnitaryModel::identity(2)),
            Err(QspError::DimensionTooLarge { .. })
        ));
        let ang = OpqspAngles::new(vec![0.1; 2], vec![0.5; 2]);
        assert!(verify_gate_level(&VariantAngles::Opqsp(ang), &UnitaryModel::identity(17)).is_err());
    }

    #[test]
    fn property_suites_seed_zero() {
        let s = property_suite(Variant::Opqsp, 100, 10, 0, &tol());
        assert_eq!(s.check("norm_bound").map(|c| c.passed), Some(100), "{s:?}");
        let s = property_suite(Variant::Su11, 40, 10, 0, &tol());
        assert_eq!(s.check("zeros_in_disk").map(|c| c.passed), Some(40), "{s:?}");
        let s = property_suite(Variant::Gqsp, 40, 8, 0, &tol());
        assert!(s.check("unimodularity").unwrap().worst <= 1e-11, "{s:?}");
    }

    #[test]
    fn property_suite_is_deterministic() {
        let a = serde_json::to_string(&property_suite(Variant::Su11, 10, 6, 7, &tol())).unwrap();
        let b = serde_json::to_string(&property_suite(Variant::Su11, 10, 6, 7, &tol())).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn two_paths_agree_opqsp(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tau = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let omega = (0..3).map(|_| rng.gen_range(0.2..1.3)).collect();
            let u = UnitaryModel::random(4, &mut rng);
            let r = verify_gate_level(&VariantAngles::Opqsp(OpqspAngles::new(tau, omega)), &u).unwrap();
            prop_assert!(r.max_coeff_err <= 1e-10, "{:?}", r);
            prop_assert!(r.max_circle_err <= 1e-10);
            prop_assert!(r.unitarity_defect <= 1e-10);
        }

        #[test]
        fn two_paths_agree_su11(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let phi = (0..3).map(|_| rng.gen_range(-PI..PI)).collect();
            let u = UnitaryModel::random(4, &mut rng);
            let r = verify_gate_level(&VariantAngles::Su11(Su11Angles::from_theta_phi(theta, phi)), &u).unwrap();
            prop_assert!(r.max_coeff_err <= 1e-10, "{:?}", r);
            prop_assert!(r.max_circle_err <= 1e-10);
            prop_assert!(r.unitarity_defect <= 1e-10);
        }
    }
}
