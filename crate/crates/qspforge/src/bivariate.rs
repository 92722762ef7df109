//! Bivariate QSP over a Z/W variable schedule and the nullvector-degree test
//! for realizability.

use crate::error::{QspError, Result};
use crate::functionals::ResidueFunctional;
use crate::gqsp::{GqspAngles, Seed};
use crate::polycore::{BivarPoly, ComplexPoly, LaurentPoly, Specialize, ONE, ZERO};
use crate::tol::Tolerances;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const MAX_SCHEDULES: usize = 256;
/// Extra parameter samples beyond the unknown count.
pub const SAMPLE_GUARD: usize = 4;
/// Offset of the sampling grid on the unit circle, away from the real axis.
const GRID_OFFSET: f64 = 0.3137;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pick {
    Z,
    W,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSchedule {
    pub picks: Vec<Pick>,
}

impl VariableSchedule {
    pub fn new(picks: Vec<Pick>) -> Self {
        VariableSchedule { picks }
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'Z' => Ok(Pick::Z),
                'W' => Ok(Pick::W),
                _ => Err(QspError::InvalidInput(format!("schedule letter {c:?} is not Z or W"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// (a_i, b_i) for i = 0..n.
    pub fn multidegrees(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0)];
        for p in &self.picks {
            let (a, b) = *out.last().unwrap();
            out.push(match p {
                Pick::Z => (a + 1, b),
                Pick::W => (a, b + 1),
            });
        }
        out
    }

    /// Every schedule with `a` Z picks and `b` W picks, in lexicographic order.
    pub fn enumerate(a: usize, b: usize) -> Result<Vec<Self>> {
        let count = binomial(a + b, a);
        if count > MAX_SCHEDULES as f64 {
            return Err(QspError::InvalidInput(format!(
                "{count} schedules exceed the cap of {MAX_SCHEDULES}; pass a schedule explicitly"
            )));
        }
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(a + b);
        fn rec(a: usize, b: usize, cur: &mut Vec<Pick>, out: &mut Vec<VariableSchedule>) {
            if a == 0 && b == 0 {
                out.push(VariableSchedule::new(cur.clone()));
                return;
            }
            if a > 0 {
                cur.push(Pick::Z);
                rec(a - 1, b, cur, out);
                cur.pop();
            }
            if b > 0 {
                cur.push(Pick::W);
                rec(a, b - 1, cur, out);
                cur.pop();
            }
        }
        rec(a, b, &mut cur, &mut out);
        Ok(out)
    }
}

impl std::fmt::Display for VariableSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.picks {
            f.write_str(match p {
                Pick::Z => "Z",
                Pick::W => "W",
            })?;
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug)]
pub struct BivarSequence {
    pub p: Vec<BivarPoly>,
    pub q: Vec<BivarPoly>,
}

/// P_i = e^{i phi} cos(theta) z_i P_{i-1} + e^{i phi} sin(theta) Q_{i-1},
/// Q_i = sin(theta) z_i P_{i-1} - cos(theta) Q_{i-1}, with z_i picked by the schedule.
pub fn bivar_forward(ang: &GqspAngles, sched: &VariableSchedule) -> Result<BivarSequence> {
    if ang.theta.len() != ang.phi.len() || ang.steps() != sched.picks.len() {
        return Err(QspError::InvalidInput(format!(
            "{} steps of angles against a schedule of length {}",
            ang.steps(),
            sched.picks.len()
        )));
    }
    let (mut p, mut q, first) = match ang.seed {
        Seed::Unit => (BivarPoly::constant(ONE), BivarPoly::new(), 0),
        Seed::Rotation => (
            BivarPoly::constant(C64::from_polar(ang.theta[0].cos(), ang.phi[0])),
            BivarPoly::constant(C64::new(ang.theta[0].sin(), 0.0)),
            1,
        ),
    };
    let mut out = BivarSequence { p: vec![p.clone()], q: vec![q.clone()] };
    for (k, pick) in (first..ang.theta.len()).zip(&sched.picks) {
        let e = C64::from_polar(1.0, ang.phi[k]);
        let (c, s) = (ang.theta[k].cos(), ang.theta[k].sin());
        let zp = match pick {
            Pick::Z => p.mul_z(),
            Pick::W => p.mul_w(),
        };
        let np = zp.scale(e * c).add(&q.scale(e * s));
        let nq = zp.scale(C64::new(s, 0.0)).add(&q.scale(C64::new(-c, 0.0)));
        p = np;
        q = nq;
        out.p.push(p.clone());
        out.q.push(q.clone());
    }
    Ok(out)
}

/// max over an m x m grid of T x T of ||P|^2 + |Q|^2 - 1|.
pub fn bivar_unitarity_defect(p: &BivarPoly, q: &BivarPoly, m: usize) -> f64 {
    let pts = crate::polycore::circle_points(m);
    let mut worst: f64 = 0.0;
    for z in &pts {
        for w in &pts {
            worst = worst.max((p.eval(*z, *w).norm_sqr() + q.eval(*z, *w).norm_sqr() - 1.0).abs());
        }
    }
    worst
}

pub fn transpose(p: &BivarPoly) -> BivarPoly {
    BivarPoly::from_terms(p.terms().map(|(&(i, j), &c)| ((j, i), c)))
}

/// `c`: contour in z with w fixed; `d`: contour in w with z fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentFamily {
    C,
    D,
}

/// The univariate functional f -> oint f / (x P Qt) dx at one parameter value, where x is z
/// for family `c` and w for `d`, and Qt = z^{-a_n} w^{-b_n} Q.
fn sliced_functional(
    p: &BivarPoly,
    q: &BivarPoly,
    family: MomentFamily,
    param: C64,
    tol: &Tolerances,
) -> Result<ResidueFunctional> {
    let (p, q) = match family {
        MomentFamily::C => (p.clone(), q.clone()),
        MomentFamily::D => (transpose(p), transpose(q)),
    };
    let (an, bn) = q.multidegree();
    let ps = p.specialize(Specialize::FixW(param));
    let qs = q.specialize(Specialize::FixW(param)).scale(param.powi(-(bn as i32)));
    ResidueFunctional::new(&ps, &LaurentPoly::from_poly(&qs, -(an as i64)), tol)
}

/// c_k(w) (or d_k(z)) for k in kmin..=kmax at one parameter value.
pub fn moments_at(
    p: &BivarPoly,
    q: &BivarPoly,
    family: MomentFamily,
    param: C64,
    kmin: i64,
    kmax: i64,
    tol: &Tolerances,
) -> Result<Vec<C64>> {
    let rf = sliced_functional(p, q, family, param, tol)?;
    (kmin..=kmax).map(|k| rf.eval(k, &LaurentPoly::one())).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentFunction {
    pub family: MomentFamily,
    pub index: i64,
    pub samples: Vec<(C64, C64)>,
    /// Parameter values that were skipped, with the error code.
    pub skipped: Vec<(C64, String)>,
    /// Polynomial coefficients in the parameter when a fit of degree < samples - guard
    /// reproduces every sample within fit_tol.
    pub interpolant: Option<Vec<C64>>,
}

pub fn moment_function(
    p: &BivarPoly,
    q: &BivarPoly,
    family: MomentFamily,
    index: i64,
    params: &[C64],
    tol: &Tolerances,
) -> MomentFunction {
    let results: Vec<(C64, Result<Vec<C64>>)> = params
        .par_iter()
        .map(|&x| (x, moments_at(p, q, family, x, index, index, tol)))
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (x, r) in results {
        match r {
            Ok(v) => samples.push((x, v[0])),
            Err(e) => skipped.push((x, e.code().to_string())),
        }
    }
    let interpolant = fit_polynomial(&samples, tol.fit_tol);
    MomentFunction { family, index, samples, skipped, interpolant }
}

/// Lowest-degree least-squares polynomial fit reproducing all samples within `fit_tol`
/// (relative to the largest sample), leaving at least SAMPLE_GUARD redundant samples.
fn fit_polynomial(samples: &[(C64, C64)], fit_tol: f64) -> Option<Vec<C64>> {
    let scale = samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for d in 0..samples.len().saturating_sub(SAMPLE_GUARD) {
        let a = DMatrix::from_fn(samples.len(), d + 1, |r, c| samples[r].0.powi(c as i32));
        let b = DMatrix::from_fn(samples.len(), 1, |r, _| samples[r].1);
        let x = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
        let res = (&a * &x - &b).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if res <= fit_tol * scale {
            return Some(x.iter().copied().collect());
        }
    }
    None
}

/// Which of the two systems of a step: `u` has entries c_{s-r} (coefficients of P_i),
/// `v` has entries c_{r-s} (coefficients of Q_i, highest power first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    U,
    V,
}

#[derive(Clone, Debug, Serialize)]
pub struct NullDegree {
    pub family: MomentFamily,
    pub kind: SystemKind,
    /// System has `order` rows and `order + 1` columns.
    pub order: usize,
    /// Minimal parameter-degree of a polynomial nullvector; None if above `max_degree`.
    pub degree: Option<usize>,
    pub max_degree: usize,
    /// Smallest normalized singular value for each tested degree.
    pub residuals: Vec<f64>,
    /// Components of the minimal nullvector as coefficient lists in the parameter,
    /// scaled so the largest coefficient is 1.
    pub witness: Vec<Vec<C64>>,
    pub samples_used: usize,
    pub skipped: Vec<(C64, String)>,
}

fn sample_grid(count: usize) -> Vec<C64> {
    (0..count)
        .map(|s| C64::from_polar(1.0, 2.0 * PI * (s as f64 + GRID_OFFSET) / count as f64))
        .collect()
}

/// Unit null vectors of the u and v systems at one parameter value.
fn null_vectors(c: &[C64], order: usize, kmin: i64, tol: &Tolerances) -> std::result::Result<[Vec<C64>; 2], usize> {
    let get = |k: i64| c[(k - kmin) as usize];
    let mut out: [Vec<C64>; 2] = [Vec::new(), Vec::new()];
    for (slot, sign) in [(0usize, 1i64), (1, -1)] {
        // square (order+1) matrix with a zero last row, so the SVD returns a full V
        let m = DMatrix::from_fn(order + 1, order + 1, |r, s| {
            if r == order {
                ZERO
            } else {
                get(sign * (s as i64 - r as i64))
            }
        });
        let svd = m.svd(false, true);
        let sv = &svd.singular_values;
        let mut idx: Vec<usize> = (0..=order).collect();
        idx.sort_by(|&x, &y| sv[y].partial_cmp(&sv[x]).unwrap());
        let top = sv[idx[0]].max(f64::MIN_POSITIVE);
        // rank must be `order`: the second smallest singular value has to be clear of zero
        if order >= 1 && sv[idx[order - 1]] <= tol.solve_tol * top {
            let nullity = idx.iter().filter(|&&i| sv[i] <= tol.solve_tol * top).count();
            return Err(nullity);
        }
        let vt = svd.v_t.unwrap();
        let row = idx[order];
        out[slot] = (0..=order).map(|j| vt[(row, j)].conj()).collect();
    }
    Ok(out)
}

/// Minimal polynomial degree (in the parameter) of the nullvectors of both systems
/// of the given order, for family `c` (order a_i, parameter w) or `d` (order b_i, parameter z).
pub fn nullvector_degrees(
    p: &BivarPoly,
    q: &BivarPoly,
    family: MomentFamily,
    order: usize,
    max_degree: usize,
    step: usize,
    tol: &Tolerances,
) -> Result<[NullDegree; 2]> {
    let unknowns = (max_degree + 1) * (order + 1);
    let count = unknowns + SAMPLE_GUARD;
    let kmin = -(order as i64);
    let per_sample: Vec<(C64, Result<Vec<C64>>)> = sample_grid(count)
        .into_par_iter()
        .map(|x| (x, moments_at(p, q, family, x, kmin, order as i64, tol)))
        .collect();
    let mut xs = Vec::new();
    let mut nulls: [Vec<Vec<C64>>; 2] = [Vec::new(), Vec::new()];
    let mut skipped = Vec::new();
    for (sample, (x, r)) in per_sample.into_iter().enumerate() {
        match r {
            Ok(c) => match null_vectors(&c, order, kmin, tol) {
                Ok([u, v]) => {
                    xs.push(x);
                    nulls[0].push(u);
                    nulls[1].push(v);
                }
                Err(nullity) => return Err(QspError::RankDeficientBeyondNullity { step, sample, nullity }),
            },
            Err(e) => skipped.push((x, e.code().to_string())),
        }
    }
    if xs.len() * order < unknowns {
        return Err(QspError::InvalidInput(format!(
            "only {} usable parameter samples for {unknowns} unknowns",
            xs.len()
        )));
    }
    let kinds = [SystemKind::U, SystemKind::V];
    let out: Vec<NullDegree> = kinds
        .iter()
        .zip(&nulls)
        .map(|(&kind, ns)| {
            let (degree, residuals, witness) = minimal_degree(&xs, ns, order, max_degree, tol.fit_tol);
            NullDegree {
                family,
                kind,
                order,
                degree,
                max_degree,
                residuals,
                witness,
                samples_used: xs.len(),
                skipped: skipped.clone(),
            }
        })
        .collect();
    Ok([out[0].clone(), out[1].clone()])
}

/// Smallest d such that some polynomial vector u(x) of degree d is parallel to the
/// sampled null vector at every sample: (I - n n^*) u(x_s) = 0 stacked over samples.
fn minimal_degree(
    xs: &[C64],
    ns: &[Vec<C64>],
    order: usize,
    max_degree: usize,
    fit_tol: f64,
) -> (Option<usize>, Vec<f64>, Vec<Vec<C64>>) {
    let dim = order + 1;
    let mut residuals = Vec::new();
    for d in 0..=max_degree {
        let cols = dim * (d + 1);
        let rows = xs.len() * dim;
        let mut a = DMatrix::<C64>::zeros(rows, cols);
        for (s, (x, n)) in xs.iter().zip(ns).enumerate() {
            let pw: Vec<C64> = (0..=d).map(|k| x.powi(k as i32)).collect();
            for r in 0..dim {
                for j in 0..dim {
                    let proj = if r == j { ONE } else { ZERO } - n[r] * n[j].conj();
                    for (k, pk) in pw.iter().enumerate() {
                        a[(s * dim + r, j * (d + 1) + k)] = proj * pk;
                    }
                }
            }
        }
        // normal equations keep the SVD square and small
        let g = a.adjoint() * &a;
        let eig = g.clone().symmetric_eigen();
        let (imin, lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
        let res = (lmin.max(0.0) / xs.len() as f64).sqrt();
        residuals.push(res);
        if res <= fit_tol.sqrt() {
            let vec = eig.eigenvectors.column(imin);
            let big = vec.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let piv = *vec.iter().find(|c| c.norm() == big).unwrap();
            let witness = (0..dim)
                .map(|j| {
                    let coeffs: Vec<C64> = (0..=d).map(|k| vec[j * (d + 1) + k] / piv).collect();
                    ComplexPoly::new(coeffs).trimmed(1e-9).coeffs().to_vec()
                })
                .collect();
            return (Some(d), residuals, witness);
        }
    }
    (None, residuals, Vec::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub step: usize,
    pub family: MomentFamily,
    pub kind: SystemKind,
    pub order: usize,
    pub bound: usize,
    /// None when no polynomial nullvector was found up to the tested degree.
    pub degree: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleResult {
    pub schedule: String,
    pub pass: bool,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BivarCheck {
    pub verdict: Verdict,
    pub multidegree: (usize, usize),
    pub unitarity_defect: f64,
    pub schedules: Vec<ScheduleResult>,
    pub systems: Vec<NullDegree>,
}

/// Necessary-condition test: for each Z step with a_i >= 1 the c-systems of order a_i must
/// have polynomial nullvectors of degree <= b_i, and symmetrically for W steps.
/// Passes if some schedule (the given one, or any consistent with the multidegree) has no violation.
pub fn necessary_condition_check(
    p: &BivarPoly,
    q: &BivarPoly,
    sched: Option<&VariableSchedule>,
    tol: &Tolerances,
) -> Result<BivarCheck> {
    let md = p.multidegree_tol(1e-13);
    if md != q.multidegree_tol(1e-13) {
        return Err(QspError::InvalidInput(format!(
            "multidegree of P {:?} differs from Q {:?}",
            md,
            q.multidegree_tol(1e-13)
        )));
    }
    let schedules = match sched {
        Some(s) => {
            if *s.multidegrees().last().unwrap() != md {
                return Err(QspError::InvalidInput(format!("schedule {s} does not reach multidegree {md:?}")));
            }
            vec![s.clone()]
        }
        None => VariableSchedule::enumerate(md.0, md.1)?,
    };
    let max_degree = 2 * (md.0 + md.1) + 2;
    let mut systems: BTreeMap<(MomentFamily, usize), [NullDegree; 2]> = BTreeMap::new();
    let mut results = Vec::new();
    for s in &schedules {
        let degs = s.multidegrees();
        let mut violations = Vec::new();
        for (i, pick) in s.picks.iter().enumerate() {
            let (ai, bi) = degs[i];
            let (family, order, bound) = match pick {
                Pick::Z => (MomentFamily::C, ai, bi),
                Pick::W => (MomentFamily::D, bi, ai),
            };
            if order == 0 {
                continue;
            }
            if !systems.contains_key(&(family, order)) {
                let nd = nullvector_degrees(p, q, family, order, max_degree, i, tol)?;
                systems.insert((family, order), nd);
            }
            for nd in &systems[&(family, order)] {
                if nd.degree.is_none_or(|d| d > bound) {
                    violations.push(Violation { step: i, family, kind: nd.kind, order, bound, degree: nd.degree });
                }
            }
        }
        results.push(ScheduleResult { schedule: s.to_string(), pass: violations.is_empty(), violations });
    }
    let verdict = if results.iter().any(|r| r.pass) { Verdict::Pass } else { Verdict::Fail };
    Ok(BivarCheck {
        verdict,
        multidegree: md,
        unitarity_defect: bivar_unitarity_defect(p, q, 16),
        schedules: results,
        systems: systems.into_values().flatten().collect(),
    })
}

/// The pair from the FRT counterexample, with the coefficients as printed.
///
/// `corrected = false` reads the B-term as B (w^2 - z); that pair is not unimodular.
/// `corrected = true` reads it as B (w^2 z - z), which is.
pub fn frt_counterexample(corrected: bool) -> (BivarPoly, BivarPoly) {
    let c = |re: f64, im: f64| C64::new(re, im);
    let n = 6.0 / 25.0 * (37.0f64 / 493.0).sqrt();
    let a = c(56.0 / 37.0, 114.0 / 37.0);
    let b = c(-122.0 / 37.0, -66.0 / 37.0);
    let cc = c(362.0 / 111.0, -418.0 / 111.0);
    let ap = c(114.0 / 37.0, 56.0 / 37.0);
    let bp = c(122.0 / 37.0, 8.0 / 37.0);
    let cp = c(362.0 / 111.0, -248.0 / 111.0);
    let dp = c(692.0 / 111.0, -719.0 / 222.0);
    let p = BivarPoly::from_terms([
        ((2, 2), ONE),
        ((0, 2), ap),
        ((2, 0), ap),
        ((1, 2), -bp),
        ((1, 0), -bp),
        ((2, 1), cp),
        ((0, 1), cp),
        ((1, 1), dp),
        ((0, 0), ONE),
    ]);
    let b_terms = if corrected { [((1, 2), b), ((1, 0), -b)] } else { [((0, 2), b), ((1, 0), -b)] };
    let q = BivarPoly::from_terms(
        [((2, 2), ONE), ((0, 2), a), ((2, 0), -a), ((2, 1), cc), ((0, 1), -cc), ((0, 0), -ONE)]
            .into_iter()
            .chain(b_terms),
    );
    let s = C64::new(n, 0.0);
    (p.scale(s), q.scale(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiorthMode {
    Global,
    Parametric,
}

#[derive(Clone, Debug, Serialize)]
pub struct BivarBiorthReport {
    pub mode: BiorthMode,
    /// Largest off-diagonal |L[Qt_i P_j]| / |L[Qt_i P_i]| (global), or largest
    /// normalized vanishing integral (parametric).
    pub max_violation: f64,
    pub min_diag: f64,
    pub checks: usize,
}

/// Biorthogonality of a forward sequence.
///
/// Global: w = z^{a_n+1} turns the pair into univariate polynomials and
/// L[f] = oint f / (z P_n Qt_n) dz must be diagonal on (Qt_i, P_j).
/// Parametric: at each sampled w, oint P_i z^{-k} / (z P_n Qt_n) dz and
/// oint Qt_i z^k / (z P_n Qt_n) dz vanish for 1 - a_{i+1} + a_i <= k < a_i.
pub fn biorthogonality_check_biv(
    seq: &BivarSequence,
    sched: &VariableSchedule,
    mode: BiorthMode,
    tol: &Tolerances,
) -> Result<BivarBiorthReport> {
    let n = seq.p.len() - 1;
    let degs = sched.multidegrees();
    let (an, bn) = degs[n];
    match mode {
        BiorthMode::Global => {
            let k = an + 1;
            let sub = |p: &BivarPoly| p.specialize(Specialize::SubstituteW(k));
            let qt = |i: usize| LaurentPoly::from_poly(&sub(&seq.q[i]), -((degs[i].0 + k * degs[i].1) as i64));
            let rf = ResidueFunctional::new(&sub(&seq.p[n]), &qt(n), tol)?;
            let mut g = vec![vec![ZERO; n + 1]; n + 1];
            for (i, row) in g.iter_mut().enumerate() {
                let qi = qt(i);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rf.eval(0, &qi.mul(&LaurentPoly::from_poly(&sub(&seq.p[j]), 0)))?;
                }
            }
            let mut worst: f64 = 0.0;
            let mut min_diag = f64::INFINITY;
            for i in 0..=n {
                min_diag = min_diag.min(g[i][i].norm());
                for j in 0..=n {
                    if i != j {
                        worst = worst.max(g[i][j].norm() / g[i][i].norm());
                    }
                }
            }
            Ok(BivarBiorthReport { mode, max_violation: worst, min_diag, checks: (n + 1) * n })
        }
        BiorthMode::Parametric => {
            let amax = an as i64;
            let params = sample_grid(8);
            let per: Vec<Result<(f64, usize)>> = params
                .par_iter()
                .map(|&w| {
                    let c = moments_at(&seq.p[n], &seq.q[n], MomentFamily::C, w, -2 * amax - 1, 2 * amax + 1, tol)?;
                    let get = |k: i64| c[(k + 2 * amax + 1) as usize];
                    let mut worst: f64 = 0.0;
                    let mut checks = 0;
                    for i in 0..n {
                        let (ai, bi) = degs[i];
                        let lo = 1 + ai as i64 - degs[i + 1].0 as i64;
                        let pz = seq.p[i].specialize(Specialize::FixW(w));
                        let qz = seq.q[i].specialize(Specialize::FixW(w)).scale(w.powi(-(bi as i32)));
                        for k in lo.max(0)..ai as i64 {
                            // P_i z^{-k}: sum_m p_m c_{m-k};  Qt_i z^k: sum_m q_m c_{m-a_i+k}
                            let (mut s1, mut a1, mut s2, mut a2) = (ZERO, 0.0, ZERO, 0.0);
                            for m in 0..=ai {
                                let t1 = pz.coeff(m) * get(m as i64 - k);
                                let t2 = qz.coeff(m) * get(m as i64 - ai as i64 + k);
                                s1 += t1;
                                a1 += t1.norm();
                                s2 += t2;
                                a2 += t2.norm();
                            }
                            if a1 > 0.0 {
                                worst = worst.max(s1.norm() / a1);
                            }
                            if a2 > 0.0 {
                                worst = worst.max(s2.norm() / a2);
                            }
                            checks += 2;
                        }
                    }
                    Ok((worst, checks))
                })
                .collect();
            let mut worst: f64 = 0.0;
            let mut checks = 0;
            for r in per {
                let (w, c) = r?;
                worst = worst.max(w);
                checks += c;
            }
            let _ = bn;
            Ok(BivarBiorthReport { mode, max_violation: worst, min_diag: f64::NAN, checks })
        }
    }
}
