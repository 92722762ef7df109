//! Complex polynomial containers, root finding and circle evaluation.

use crate::error::{QspError, Result};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// The m-th roots of unity, exp(2 pi i k / m).
pub fn circle_points(m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect()
}

/// Max coefficient difference normalized by max(1, max |target coeff|).
pub fn coeff_error(got: &[C64], target: &[C64]) -> f64 {
    let n = got.len().max(target.len());
    let scale = target.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
    (0..n)
        .map(|k| {
            let a = got.get(k).copied().unwrap_or(ZERO);
            let b = target.get(k).copied().unwrap_or(ZERO);
            (a - b).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

/// Polynomial with ascending coefficients; the leading entry is nonzero
/// unless the polynomial is zero (empty coefficient vector).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ComplexPoly {
    coeffs: Vec<C64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        ComplexPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        ComplexPoly { coeffs: vec![] }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// c z^k
    pub fn monomial(k: usize, c: C64) -> Self {
        let mut v = vec![ZERO; k + 1];
        v[k] = c;
        Self::new(v)
    }

    /// z - r
    pub fn linear(r: C64) -> Self {
        Self::new(vec![-r, ONE])
    }

    pub fn from_roots(roots: &[C64]) -> Self {
        roots
            .iter()
            .fold(Self::one(), |acc, &r| &acc * &Self::linear(r))
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0 and is flagged by `is_zero`.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lead(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn eval_on_circle(&self, m: usize) -> Vec<C64> {
        circle_points(m).into_iter().map(|z| self.eval(z)).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// z^k p(z)
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![ZERO; k];
        v.extend_from_slice(&self.coeffs);
        Self::new(v)
    }

    /// Monic normalization together with the removed leading coefficient.
    pub fn monic(&self) -> (Self, C64) {
        let l = self.lead();
        if l == ZERO {
            return (Self::zero(), ZERO);
        }
        let mut p = self.scale(ONE / l);
        if let Some(last) = p.coeffs.last_mut() {
            *last = ONE;
        }
        (p, l)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// z^n conj(p(1/conj z)) for a nominal degree n >= deg p.
    pub fn conj_reversed(&self, n: usize) -> Self {
        Self::new((0..=n).map(|k| self.coeff(n - k).conj()).collect())
    }

    /// Drop leading coefficients below `tol * max|c|`.
    pub fn trimmed(&self, tol: f64) -> Self {
        let cut = tol * self.max_abs();
        let mut v = self.coeffs.clone();
        while v.last().is_some_and(|c| c.norm() <= cut) {
            v.pop();
        }
        Self::new(v)
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, o: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        ComplexPoly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, o: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        ComplexPoly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Neg for &ComplexPoly {
    type Output = ComplexPoly;
    fn neg(self) -> ComplexPoly {
        self.scale(-ONE)
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, o: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || o.is_zero() {
            return ComplexPoly::zero();
        }
        let mut v = vec![ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        ComplexPoly::new(v)
    }
}

/// Finite Laurent series sum_k coeffs[k] z^(min_exp + k).
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    pub coeffs: Vec<C64>,
    pub min_exp: i64,
}

impl LaurentPoly {
    pub fn new(coeffs: Vec<C64>, min_exp: i64) -> Self {
        LaurentPoly { coeffs, min_exp }
    }

    pub fn from_poly(p: &ComplexPoly, min_exp: i64) -> Self {
        LaurentPoly { coeffs: p.coeffs().to_vec(), min_exp }
    }

    pub fn one() -> Self {
        LaurentPoly { coeffs: vec![ONE], min_exp: 0 }
    }

    pub fn coeff(&self, e: i64) -> C64 {
        let k = e - self.min_exp;
        if k < 0 {
            return ZERO;
        }
        self.coeffs.get(k as usize).copied().unwrap_or(ZERO)
    }

    pub fn max_exp(&self) -> i64 {
        self.min_exp + self.coeffs.len() as i64 - 1
    }

    /// z^k L(z)
    pub fn shift(&self, k: i64) -> Self {
        LaurentPoly { coeffs: self.coeffs.clone(), min_exp: self.min_exp + k }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let body = self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c);
        body * z.powi(self.min_exp as i32)
    }

    pub fn eval_on_circle(&self, m: usize) -> Vec<C64> {
        circle_points(m).into_iter().map(|z| self.eval(z)).collect()
    }

    /// Write L = z^e q(z) with q a polynomial and q(0) != 0.
    pub fn split(&self) -> (i64, ComplexPoly) {
        let lead_zeros = self.coeffs.iter().take_while(|c| **c == ZERO).count();
        let q = ComplexPoly::new(self.coeffs[lead_zeros.min(self.coeffs.len())..].to_vec());
        (self.min_exp + lead_zeros as i64, q)
    }

    pub fn mul(&self, o: &LaurentPoly) -> LaurentPoly {
        let (ea, a) = self.split();
        let (eb, b) = o.split();
        LaurentPoly::from_poly(&(&a * &b), ea + eb)
    }

    pub fn add(&self, o: &LaurentPoly) -> LaurentPoly {
        let lo = self.min_exp.min(o.min_exp);
        let hi = self.max_exp().max(o.max_exp());
        LaurentPoly::new((lo..=hi).map(|e| self.coeff(e) + o.coeff(e)).collect(), lo)
    }

    pub fn scale(&self, s: C64) -> LaurentPoly {
        LaurentPoly::new(self.coeffs.iter().map(|c| c * s).collect(), self.min_exp)
    }

    /// p(L(z)) by Horner.
    pub fn compose(p: &ComplexPoly, l: &LaurentPoly) -> LaurentPoly {
        p.coeffs().iter().rev().fold(LaurentPoly::new(vec![], 0), |acc, &c| {
            acc.mul(l).add(&LaurentPoly::new(vec![c], 0))
        })
    }
}

/// Bivariate polynomial sum c_ij z^i w^j.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BivarPoly {
    terms: BTreeMap<(usize, usize), C64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Specialize {
    FixW(C64),
    FixZ(C64),
    /// w = z^k
    SubstituteW(usize),
}

impl BivarPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((usize, usize), C64)>) -> Self {
        let mut p = Self::new();
        for (k, c) in terms {
            p.add_term(k.0, k.1, c);
        }
        p
    }

    pub fn constant(c: C64) -> Self {
        Self::from_terms([((0, 0), c)])
    }

    pub fn add_term(&mut self, i: usize, j: usize, c: C64) {
        let e = self.terms.entry((i, j)).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        self.terms.get(&(i, j)).copied().unwrap_or(ZERO)
    }

    /// (max z-exponent, max w-exponent) over nonzero terms.
    pub fn multidegree(&self) -> (usize, usize) {
        self.terms
            .keys()
            .fold((0, 0), |(a, b), &(i, j)| (a.max(i), b.max(j)))
    }

    /// Multidegree ignoring coefficients below `tol * max|c|`.
    pub fn multidegree_tol(&self, tol: f64) -> (usize, usize) {
        let cut = tol * self.max_abs();
        self.terms
            .iter()
            .filter(|(_, c)| c.norm() > cut)
            .fold((0, 0), |(a, b), (&(i, j), _)| (a.max(i), b.max(j)))
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64, w: C64) -> C64 {
        self.terms
            .iter()
            .map(|(&(i, j), &c)| c * z.powi(i as i32) * w.powi(j as i32))
            .sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, &c)| (k, c * s)))
    }

    pub fn mul_z(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(&(i, j), &c)| ((i + 1, j), c)))
    }

    pub fn mul_w(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(&(i, j), &c)| ((i, j + 1), c)))
    }

    pub fn add(&self, o: &BivarPoly) -> Self {
        let mut p = self.clone();
        for (&(i, j), &c) in &o.terms {
            p.add_term(i, j, c);
        }
        p
    }

    pub fn specialize(&self, mode: Specialize) -> ComplexPoly {
        let mut v: Vec<C64> = Vec::new();
        let mut put = |k: usize, c: C64| {
            if v.len() <= k {
                v.resize(k + 1, ZERO);
            }
            v[k] += c;
        };
        for (&(i, j), &c) in &self.terms {
            match mode {
                Specialize::FixW(w0) => put(i, c * w0.powi(j as i32)),
                Specialize::FixZ(z0) => put(j, c * z0.powi(i as i32)),
                Specialize::SubstituteW(k) => put(i + j * k, c),
            }
        }
        ComplexPoly::new(v)
    }
}

const MAX_ITERS: usize = 200;

/// All roots of `p` with multiplicity.
///
/// Companion-matrix eigenvalues seed an Aberth-Ehrlich refinement. Each root
/// must satisfy |p(r)| <= root_tol * sum_k |c_k| |r|^k.
pub fn poly_roots(p: &ComplexPoly, root_tol: f64) -> Result<Vec<C64>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(QspError::InvalidInput("roots of a constant polynomial".into()));
    }
    let (m, _) = p.monic();
    // exact zero roots are split off; the companion matrix smears them to |r| ~ eps^(1/k)
    let zeros = m.coeffs().iter().take_while(|c| **c == ZERO).count();
    if zeros > 0 {
        let mut out = vec![ZERO; zeros];
        if m.degree() > zeros {
            out.extend(poly_roots(&ComplexPoly::new(m.coeffs()[zeros..].to_vec()), root_tol)?);
        }
        return Ok(out);
    }
    let n = m.degree();
    if n == 1 {
        return Ok(vec![-m.coeff(0)]);
    }
    let comp = DMatrix::<C64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -m.coeff(i)
        } else if i == j + 1 {
            ONE
        } else {
            ZERO
        }
    });
    let mut z: Vec<C64> = match Schur::try_new(comp, 1e-15, 10_000) {
        Some(s) => s.eigenvalues().map(|e| e.iter().copied().collect()).unwrap_or_default(),
        None => Vec::new(),
    };
    if z.len() != n {
        let r = m.max_abs().max(1.0);
        z = (0..n)
            .map(|k| C64::from_polar(r, 2.0 * PI * (k as f64 + 0.25) / n as f64))
            .collect();
    }
    aberth(&m, &mut z);
    let abs_poly: Vec<f64> = m.coeffs().iter().map(|c| c.norm()).collect();
    for r in &z {
        let scale: f64 = abs_poly
            .iter()
            .enumerate()
            .map(|(k, a)| a * r.norm().powi(k as i32))
            .sum();
        if !(m.eval(*r).norm() <= root_tol * scale) {
            return Err(QspError::NonConvergence { iters: MAX_ITERS });
        }
    }
    Ok(z)
}

fn aberth(p: &ComplexPoly, z: &mut [C64]) {
    let dp = p.derivative();
    let n = z.len();
    for _ in 0..MAX_ITERS {
        let mut moved = 0.0f64;
        for k in 0..n {
            let pv = p.eval(z[k]);
            if pv == ZERO {
                continue;
            }
            let ratio = pv / dp.eval(z[k]);
            let s: C64 = (0..n)
                .filter(|&j| j != k && z[j] != z[k])
                .map(|j| ONE / (z[k] - z[j]))
                .sum();
            let step = ratio / (ONE - ratio * s);
            let cand = z[k] - step;
            if !cand.is_finite() || p.eval(cand).norm() > pv.norm() {
                continue;
            }
            moved = moved.max(step.norm() / z[k].norm().max(1.0));
            z[k] = cand;
        }
        if moved < 1e-15 {
            break;
        }
    }
}

/// Match two root multisets greedily and return the largest pairing distance.
pub fn root_match_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// 2x2 matrix with polynomial entries, used for transfer-matrix products.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMat2 {
    pub m: [[ComplexPoly; 2]; 2],
}

impl PolyMat2 {
    pub fn identity() -> Self {
        PolyMat2 {
            m: [[ComplexPoly::one(), ComplexPoly::zero()], [ComplexPoly::zero(), ComplexPoly::one()]],
        }
    }

    pub fn from_entries(a: ComplexPoly, b: ComplexPoly, c: ComplexPoly, d: ComplexPoly) -> Self {
        PolyMat2 { m: [[a, b], [c, d]] }
    }

    /// self * o
    pub fn mul(&self, o: &PolyMat2) -> PolyMat2 {
        let e = |r: usize, c: usize| &(&self.m[r][0] * &o.m[0][c]) + &(&self.m[r][1] * &o.m[1][c]);
        PolyMat2 { m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]] }
    }

    pub fn scale(&self, s: C64) -> PolyMat2 {
        let f = |p: &ComplexPoly| p.scale(s);
        PolyMat2 { m: [[f(&self.m[0][0]), f(&self.m[0][1])], [f(&self.m[1][0]), f(&self.m[1][1])]] }
    }

    pub fn eval(&self, z: C64) -> [[C64; 2]; 2] {
        [
            [self.m[0][0].eval(z), self.m[0][1].eval(z)],
            [self.m[1][0].eval(z), self.m[1][1].eval(z)],
        ]
    }
}

/// Ordered product M_n ... M_1 of per-step matrices given as [M_1, ..., M_n].
pub fn product_left(steps: &[PolyMat2]) -> PolyMat2 {
    steps.iter().fold(PolyMat2::identity(), |acc, t| t.mul(&acc))
}
