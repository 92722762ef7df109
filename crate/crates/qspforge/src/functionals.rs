//! Moment tables, Hankel/Toeplitz determinants and contour functionals.

use crate::dd::{self, CDd, Dd};
use crate::error::{QspError, Result};
use crate::polycore::{circle_points, poly_roots, ComplexPoly, LaurentPoly, ONE, ZERO};
use crate::tol::Tolerances;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentKind {
    Hankel,
    Toeplitz,
}

/// Moments c_k for k in min_k..min_k+len, held in double-double.
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub kind: MomentKind,
    min_k: i64,
    c: Vec<CDd>,
}

impl MomentTable {
    pub fn hankel(c: Vec<C64>) -> Self {
        MomentTable { kind: MomentKind::Hankel, min_k: 0, c: c.into_iter().map(CDd::from).collect() }
    }

    pub fn toeplitz(min_k: i64, c: Vec<C64>) -> Self {
        MomentTable { kind: MomentKind::Toeplitz, min_k, c: c.into_iter().map(CDd::from).collect() }
    }

    pub fn from_dd(kind: MomentKind, min_k: i64, c: Vec<CDd>) -> Self {
        MomentTable { kind, min_k, c }
    }

    pub fn min_k(&self) -> i64 {
        self.min_k
    }

    pub fn max_k(&self) -> i64 {
        self.min_k + self.c.len() as i64 - 1
    }

    pub fn get_dd(&self, k: i64) -> Option<CDd> {
        if k < self.min_k {
            return None;
        }
        self.c.get((k - self.min_k) as usize).copied()
    }

    pub fn get(&self, k: i64) -> Option<C64> {
        self.get_dd(k).map(CDd::to_c64)
    }

    pub fn entries(&self) -> Vec<(i64, C64)> {
        (self.min_k..=self.max_k()).map(|k| (k, self.get(k).unwrap())).collect()
    }

    fn need(&self, order: usize, lo: i64, hi: i64) -> Result<()> {
        if lo < self.min_k {
            return Err(QspError::InsufficientMoments { order, needed: lo, have: self.min_k });
        }
        if hi > self.max_k() {
            return Err(QspError::InsufficientMoments { order, needed: hi, have: self.max_k() });
        }
        Ok(())
    }

    fn dd_det(&self, rows: usize, entry: impl Fn(usize, usize) -> i64) -> (CDd, f64) {
        let m: Vec<Vec<CDd>> = (0..rows)
            .map(|r| (0..rows).map(|s| self.get_dd(entry(r, s)).unwrap()).collect())
            .collect();
        dd::det(m)
    }
}

/// Power sums c_i = sum_m x_m^i for i = 0..count-1.
pub fn moments_from_roots(roots: &[f64], count: usize, tol: &Tolerances) -> Result<MomentTable> {
    moments_from_weighted_roots(roots, &vec![1.0; roots.len()], count, tol)
}

/// Weighted power sums c_i = sum_m w_m x_m^i.
pub fn moments_from_weighted_roots(
    roots: &[f64],
    weights: &[f64],
    count: usize,
    tol: &Tolerances,
) -> Result<MomentTable> {
    if weights.len() != roots.len() {
        return Err(QspError::InvalidInput("one weight per root required".into()));
    }
    let mut sorted = roots.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if (w[1] - w[0]).abs() <= tol.pole_sep_tol {
            return Err(QspError::DuplicateRoots { a: w[0], b: w[1] });
        }
    }
    let mut pow: Vec<Dd> = weights.iter().map(|&w| Dd::new(w)).collect();
    let mut c = Vec::with_capacity(count);
    for _ in 0..count {
        let s = pow.iter().fold(Dd::ZERO, |a, &b| a + b);
        c.push(CDd::from(s));
        for (p, &x) in pow.iter_mut().zip(roots) {
            *p = *p * Dd::new(x);
        }
    }
    Ok(MomentTable::from_dd(MomentKind::Hankel, 0, c))
}

#[derive(Clone, Debug)]
pub struct HankelDets {
    pub order: usize,
    /// h_i, present when c_{2i} is in the table.
    pub h: Option<C64>,
    /// h_{i,k} for k = 0..=i; h_{i,i} = h_{i-1}.
    pub hk: Vec<C64>,
    pub quasi_definite: Option<bool>,
}

/// Hankel determinant h_i = det[c_{r+s}]_{r,s<=i}; h_{-1} = h_{-2} = 1.
pub fn hankel_det(m: &MomentTable, i: i64, tol: &Tolerances) -> Result<(C64, bool)> {
    if i < 0 {
        return Ok((ONE, true));
    }
    m.need(i as usize, 0, 2 * i)?;
    let (d, piv) = m.dd_det(i as usize + 1, |r, s| (r + s) as i64);
    Ok((d.to_c64(), piv >= tol.det_singular_tol))
}

pub fn hankel_dets(m: &MomentTable, order: usize, tol: &Tolerances) -> Result<HankelDets> {
    let i = order;
    m.need(i, 0, 2 * i as i64 - 1)?;
    let hk = (0..=i)
        .map(|k| {
            let cols: Vec<usize> = (0..=i).filter(|&c| c != k).collect();
            let (d, _) = m.dd_det(i, |r, s| (r + cols[s]) as i64);
            let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
            d.to_c64() * sign
        })
        .collect();
    let (h, qd) = if m.max_k() >= 2 * i as i64 {
        let (h, qd) = hankel_det(m, i as i64, tol)?;
        (Some(h), Some(qd))
    } else {
        (None, None)
    };
    Ok(HankelDets { order, h, hk, quasi_definite: qd })
}

#[derive(Clone, Debug)]
pub struct ToeplitzDets {
    pub order: usize,
    pub h: C64,
    pub h_plus: C64,
    pub h_minus: C64,
    pub quasi_definite: bool,
}

/// h_i = det[c_{s-r}], h_i^+ = det[c_{1+s-r}], h_i^- = det[c_{-(1+s-r)}], all i x i.
pub fn toeplitz_dets(m: &MomentTable, order: usize, tol: &Tolerances) -> Result<ToeplitzDets> {
    let i = order as i64;
    if order == 0 {
        return Ok(ToeplitzDets { order, h: ONE, h_plus: ONE, h_minus: ONE, quasi_definite: true });
    }
    m.need(order, -i, i)?;
    let (h, piv) = m.dd_det(order, |r, s| s as i64 - r as i64);
    let (hp, _) = m.dd_det(order, |r, s| 1 + s as i64 - r as i64);
    let (hm, _) = m.dd_det(order, |r, s| -(1 + s as i64 - r as i64));
    Ok(ToeplitzDets {
        order,
        h: h.to_c64(),
        h_plus: hp.to_c64(),
        h_minus: hm.to_c64(),
        quasi_definite: piv >= tol.det_singular_tol,
    })
}

/// Monic P_i of the Toeplitz determinantal solution: cofactors of the last row
/// [1, z, ..., z^i] under the rows [c_{s-r}]_{r<i, s<=i}, divided by h_i.
pub fn toeplitz_monic_poly(m: &MomentTable, i: usize) -> Result<ComplexPoly> {
    if i == 0 {
        return Ok(ComplexPoly::one());
    }
    let ii = i as i64;
    m.need(i, -ii, ii)?;
    let (h, _) = m.dd_det(i, |r, s| s as i64 - r as i64);
    let coeffs = (0..=i)
        .map(|k| {
            let cols: Vec<usize> = (0..=i).filter(|&c| c != k).collect();
            let (d, _) = m.dd_det(i, |r, s| cols[s] as i64 - r as i64);
            let sign = if (i + k) % 2 == 0 { CDd::ONE } else { -CDd::ONE };
            (sign * d / h).to_c64()
        })
        .collect();
    Ok(ComplexPoly::new(coeffs))
}

/// Contour functional f -> oint f(z) z^shift / (z P(z) Qt(z)) dz evaluated by residues
/// at 0 and at the (simple) roots of P.
#[derive(Clone, Debug)]
pub struct ResidueFunctional {
    p: ComplexPoly,
    dp: ComplexPoly,
    q: ComplexPoly,
    q_exp: i64,
    roots: Vec<C64>,
    root_near_zero: Option<f64>,
}

impl ResidueFunctional {
    pub fn new(p: &ComplexPoly, qt: &LaurentPoly, tol: &Tolerances) -> Result<Self> {
        let (q_exp, q) = qt.split();
        if q.is_zero() {
            return Err(QspError::InvalidInput("Qt is identically zero".into()));
        }
        let roots = if p.degree() >= 1 { poly_roots(p, tol.root_tol)? } else { vec![] };
        let mut sep = f64::INFINITY;
        for (i, a) in roots.iter().enumerate() {
            for b in &roots[i + 1..] {
                sep = sep.min((a - b).norm());
            }
        }
        if sep <= tol.pole_sep_tol {
            return Err(QspError::HigherOrderPole { separation: sep });
        }
        if q.degree() >= 1 {
            let qr = poly_roots(&q, tol.root_tol)?;
            for a in &roots {
                for b in &qr {
                    let d = (a - b).norm();
                    if d <= tol.pole_sep_tol {
                        return Err(QspError::PoleCollision { distance: d });
                    }
                }
            }
        }
        let root_near_zero = roots
            .iter()
            .map(|r| r.norm())
            .filter(|&d| d <= tol.pole_sep_tol)
            .reduce(f64::min);
        Ok(ResidueFunctional { dp: p.derivative(), p: p.clone(), q, q_exp, roots, root_near_zero })
    }

    pub fn roots(&self) -> &[C64] {
        &self.roots
    }

    pub fn eval(&self, shift: i64, f: &LaurentPoly) -> Result<C64> {
        let (f_exp, fp) = f.split();
        if fp.is_zero() {
            return Ok(ZERO);
        }
        // integrand = F(z) z^e / (P(z) q(z))
        let e = f_exp + shift - 1 - self.q_exp;
        let mut s = ZERO;
        for &r in &self.roots {
            s += fp.eval(r) * r.powi(e as i32) / (self.dp.eval(r) * self.q.eval(r));
        }
        if e < 0 {
            if let Some(d) = self.root_near_zero {
                return Err(QspError::PoleCollision { distance: d });
            }
            let k = (-e) as usize;
            let den = &self.p * &self.q;
            s += series_coeff(&fp, &den, k - 1);
        }
        Ok(C64::new(0.0, 2.0 * PI) * s)
    }
}

/// Coefficient of z^j in the power series of num/den (den(0) != 0).
fn series_coeff(num: &ComplexPoly, den: &ComplexPoly, j: usize) -> C64 {
    let d0 = den.coeff(0);
    let mut s: Vec<C64> = Vec::with_capacity(j + 1);
    for t in 0..=j {
        let mut acc = num.coeff(t);
        for i in 1..=t {
            acc -= den.coeff(i) * s[t - i];
        }
        s.push(acc / d0);
    }
    s[j]
}

pub fn residue_functional(
    shift: i64,
    p: &ComplexPoly,
    qt: &LaurentPoly,
    f: &LaurentPoly,
    tol: &Tolerances,
) -> Result<C64> {
    ResidueFunctional::new(p, qt, tol)?.eval(shift, f)
}

/// Periodic trapezoid rule for oint g(z) dz over |z - center| = radius.
pub fn contour_quadrature(g: impl Fn(C64) -> C64, center: C64, radius: f64, m: usize) -> C64 {
    let h = 2.0 * PI / m as f64;
    circle_points(m)
        .into_iter()
        .map(|u| {
            let z = center + u * radius;
            g(z) * C64::new(0.0, 1.0) * u * radius * h
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct BsMoments {
    pub table: MomentTable,
    pub converged: bool,
    pub nodes: usize,
    /// Largest moment change at the last doubling.
    pub last_change: f64,
}

pub const QUAD_MIN_POINTS: usize = 512;
pub const QUAD_MAX_POINTS: usize = 1 << 16;
pub const QUAD_AGREE: f64 = 1e-10;

fn check_circle_margin(p: &ComplexPoly, tol: &Tolerances) -> Result<()> {
    if p.degree() >= 1 {
        for r in poly_roots(p, tol.root_tol)? {
            if (r.norm() - 1.0).abs() < tol.pole_sep_tol {
                return Err(QspError::RootOnCircle { modulus: r.norm() });
            }
        }
    }
    Ok(())
}

fn trapezoid_moments(p: &ComplexPoly, n: usize, m: usize) -> Vec<C64> {
    let w: Vec<f64> = p.eval_on_circle(m).iter().map(|v| 1.0 / v.norm_sqr()).collect();
    let pts = circle_points(m);
    (0..=n)
        .map(|k| {
            let s: C64 = w.iter().zip(&pts).map(|(wj, z)| z.powi(k as i32) * wj).sum();
            s / m as f64
        })
        .collect()
}

/// c_k = (1/2pi) int e^{ik theta} / |P(e^{i theta})|^2 d theta for k = -n..n, by
/// trapezoid quadrature with node doubling. The weight uses the monic form of P.
pub fn bernstein_szego_moments(p: &ComplexPoly, n: usize, tol: &Tolerances) -> Result<BsMoments> {
    let (p, _) = p.monic();
    check_circle_margin(&p, tol)?;
    let mut m = QUAD_MIN_POINTS;
    let mut cur = trapezoid_moments(&p, n, m);
    let mut change = f64::INFINITY;
    while m < QUAD_MAX_POINTS {
        m *= 2;
        let next = trapezoid_moments(&p, n, m);
        change = cur.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        cur = next;
        if change <= QUAD_AGREE {
            break;
        }
    }
    Ok(BsMoments {
        table: symmetric_table(&cur.into_iter().map(CDd::from).collect::<Vec<_>>()),
        converged: change <= QUAD_AGREE,
        nodes: m,
        last_change: change,
    })
}

fn symmetric_table(pos: &[CDd]) -> MomentTable {
    let n = pos.len() as i64 - 1;
    let mut c: Vec<CDd> = (1..=n).rev().map(|k| pos[k as usize].conj()).collect();
    let mut c0 = pos[0];
    c0.im = Dd::ZERO;
    c.push(c0);
    c.extend_from_slice(&pos[1..]);
    MomentTable::from_dd(MomentKind::Toeplitz, -n, c)
}

/// Exact Bernstein-Szegő moments for k = -n..n without quadrature.
///
/// For monic P of degree d with roots inside the disk, P is orthonormal-monic
/// for its own weight, so sum_j p_j c_{j-m} = delta_{m,d} for m <= d; the
/// d+1 complex equations are solved as a real system in double-double and
/// further moments follow from the same relation at negative m.
pub fn bernstein_szego_moments_exact(p: &ComplexPoly, n: usize, tol: &Tolerances) -> Result<MomentTable> {
    let (p, _) = p.monic();
    check_circle_margin(&p, tol)?;
    let d = p.degree();
    let pc: Vec<CDd> = p.coeffs().iter().map(|&c| CDd::from(c)).collect();
    let mut pos: Vec<CDd> = if d == 0 {
        vec![CDd::ONE]
    } else {
        // unknowns: (Re c_k, Im c_k) for k = 0..d
        let sz = 2 * (d + 1);
        let mut a = vec![vec![Dd::ZERO; sz]; sz];
        let mut b = vec![Dd::ZERO; sz];
        for m in 0..=d {
            for (j, pj) in pc.iter().enumerate() {
                let k = j as i64 - m as i64;
                let idx = 2 * k.unsigned_abs() as usize;
                // p_j * c_k, or p_j * conj(c_{-k}) when k < 0
                let conj = if k < 0 { -Dd::ONE } else { Dd::ONE };
                // real row: Re(p) Re(c) - Im(p) Im(c') ; imag row: Im(p) Re(c) + Re(p) Im(c')
                a[2 * m][idx] = a[2 * m][idx] + pj.re;
                a[2 * m][idx + 1] = a[2 * m][idx + 1] - pj.im * conj;
                a[2 * m + 1][idx] = a[2 * m + 1][idx] + pj.im;
                a[2 * m + 1][idx + 1] = a[2 * m + 1][idx + 1] + pj.re * conj;
            }
        }
        b[2 * d] = Dd::ONE;
        let x = dd::solve_real(a, b).ok_or(QspError::NotQuasiDefinite { order: d })?;
        (0..=d).map(|k| CDd::new(x[2 * k], x[2 * k + 1])).collect()
    };
    while pos.len() <= n {
        // c_k = -sum_{j<d} p_j c_{k-d+j}
        let k = pos.len();
        let mut s = CDd::ZERO;
        for (j, pj) in pc.iter().enumerate().take(d) {
            s = s - *pj * pos[k - d + j];
        }
        pos.push(s);
    }
    pos.truncate(n + 1);
    Ok(symmetric_table(&pos))
}

/// Gauss quadrature from a monic three-term recurrence (Golub-Welsch).
/// `b[k]`, `a_sq[k]` = a_{k+1}^2, `mu0` = total mass of the weight.
pub fn golub_welsch(b: &[f64], a_sq: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let m = b.len();
    let j = DMatrix::<f64>::from_fn(m, m, |r, c| {
        if r == c {
            b[r]
        } else if r == c + 1 {
            a_sq[c].sqrt()
        } else if c == r + 1 {
            a_sq[r].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// Nodes and weights for int g(t) e^{-t^2} dt.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    let b = vec![0.0; m];
    let a_sq: Vec<f64> = (1..m).map(|k| k as f64 / 2.0).collect();
    golub_welsch(&b, &a_sq, PI.sqrt())
}

/// Monic Jacobi recurrence coefficients (b_k, a_k^2) for weight (1-x)^lam (1+x)^beta.
pub fn jacobi_recurrence(k: usize, lam: f64, beta: f64) -> (f64, f64) {
    let s = lam + beta;
    let kf = k as f64;
    let b = if k == 0 {
        (beta - lam) / (s + 2.0)
    } else {
        (beta * beta - lam * lam) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
    };
    let a_sq = if k == 0 {
        0.0
    } else if k == 1 {
        4.0 * (1.0 + lam) * (1.0 + beta) / ((2.0 + s).powi(2) * (3.0 + s))
    } else {
        4.0 * kf * (kf + lam) * (kf + beta) * (kf + s)
            / ((2.0 * kf + s).powi(2) * (2.0 * kf + s + 1.0) * (2.0 * kf + s - 1.0))
    };
    (b, a_sq)
}

/// Nodes and weights for int_{-1}^{1} g(x) (1-x)^lam (1+x)^beta dx.
pub fn gauss_jacobi(m: usize, lam: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    use statrs::function::gamma::ln_gamma;
    let b: Vec<f64> = (0..m).map(|k| jacobi_recurrence(k, lam, beta).0).collect();
    let a_sq: Vec<f64> = (1..m).map(|k| jacobi_recurrence(k, lam, beta).1).collect();
    let mu0 = ((lam + beta + 1.0) * 2f64.ln() + ln_gamma(lam + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(lam + beta + 2.0))
    .exp();
    golub_welsch(&b, &a_sq, mu0)
}
