//! Characters at conjugacy classes, heat kernels, and the signed Pieri rule.
//!
//! Characters are evaluated through Jacobi-Trudi type determinants in the
//! complete homogeneous symmetric polynomials of the eigenvalues. These are
//! polynomial in the eigenvalues, so coinciding angles need no special care.
//!
//! | family | determinant |
//! |---|---|
//! | U, SU | `det h_{l_i - i + j}` |
//! | B, D  | `det (h_{l_i - i + j} - h_{l_i - i - j})` in `z^{+-1}` (and 1 for B) |
//! | C     | `det (h_{l_i - i + j} + h_{l_i - i - j + 2}) / 2` in `z^{+-1}` |
//!
//! For D the orthogonal determinant is the sum of the two characters with
//! `lambda_r = +-|lambda_r|`; their difference is
//! `(2i)^r prod sin(theta_k) sp_{lambda - (1,...,1)}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{check_area, shift_orbit, unitary_casimir_parts};
use crate::tails::TailBounder;
use crate::weights::{
    casimir_num_den, for_each_in_stratum, is_dominant, log_dim_fast, DominantWeight, Family, GroupDescriptor,
};

/// Largest rank accepted by pointwise character and heat-kernel evaluation.
pub const RANK_CAP: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyClass {
    /// `n` angles for U and SU, `r` angles for B, C, D.
    pub eigenangles: Vec<f64>,
}

impl ConjugacyClass {
    pub fn new(group: &GroupDescriptor, eigenangles: Vec<f64>) -> Result<Self> {
        let want = angle_count(group);
        if eigenangles.len() != want {
            return Err(Error::arg(format!(
                "{group} classes take {want} angles, got {}",
                eigenangles.len()
            )));
        }
        if eigenangles.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("angles must be finite"));
        }
        if group.family == Family::SpecialUnitary {
            let total: f64 = eigenangles.iter().sum();
            let wrapped = total - 2.0 * PI * (total / (2.0 * PI)).round();
            if wrapped.abs() > 1e-9 {
                return Err(Error::arg("SU angles must sum to a multiple of 2 pi"));
            }
        }
        Ok(ConjugacyClass { eigenangles })
    }

    pub fn identity(group: &GroupDescriptor) -> Self {
        ConjugacyClass {
            eigenangles: vec![0.0; angle_count(group)],
        }
    }

    /// Class of the inverse element.
    pub fn inverse(&self) -> Self {
        ConjugacyClass {
            eigenangles: self.eigenangles.iter().map(|x| -x).collect(),
        }
    }

    /// Class of a group element given in its defining representation.
    pub fn from_matrix(group: &GroupDescriptor, m: &DMatrix<Complex64>) -> Result<Self> {
        let n = group.matrix_size;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::arg(format!("{group} elements are {n} x {n} matrices")));
        }
        let mut angles: Vec<f64> = unitary_eigenvalues(m, 0.6137).iter().map(|z| z.arg()).collect();
        if group.family.is_unitary() {
            angles.sort_by(|a, b| b.partial_cmp(a).unwrap());
            return ConjugacyClass::new(group, angles);
        }
        let mut mags: Vec<f64> = angles.iter().map(|a| a.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if group.family == Family::OddOrthogonal {
            // the fixed eigenvalue 1 has the smallest angle
            mags.remove(0);
        }
        let mut out: Vec<f64> = mags.chunks(2).map(|p| (p[0] + p[1]) / 2.0).collect();
        out.reverse();
        if group.family == Family::EvenOrthogonal {
            // SO(2r) fixes the orientation: prod sin(theta) = Pf((g - g^T)/2)
            let re = m.map(|z| z.re);
            let skew = (&re - re.transpose()) * 0.5;
            let pf = pfaffian(&skew);
            let prod: f64 = out.iter().map(|t| t.sin()).product();
            // each rotation block contributes -sin(theta) to the Pfaffian
            let sign = if out.len().is_multiple_of(2) { 1.0 } else { -1.0 };
            if sign * prod * pf < 0.0 {
                let last = out.len() - 1;
                out[last] = -out[last];
            }
        }
        ConjugacyClass::new(group, out)
    }
}

/// Eigenvalues of a unitary matrix.
///
/// `(e^{-i phi} U + h.c.) / 2` is Hermitian and commutes with `U`, with
/// eigenvalue `cos(theta - phi)` on the `e^{i theta}` eigenspace. Clusters
/// where two angles reflect into each other about `phi` are split again with
/// `phi + pi / 2`.
fn unitary_eigenvalues(m: &DMatrix<Complex64>, phi: f64) -> Vec<Complex64> {
    let n = m.nrows();
    let rot = Complex64::from_polar(1.0, -phi);
    let h = (m * rot + m.adjoint() * rot.conj()) * Complex64::from(0.5);
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = v.adjoint() * m * v;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] < 1e-6 {
            end += 1;
        }
        let idx = &order[start..end];
        let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| d[(idx[i], idx[j])]);
        if idx.len() == 1 || phi > 1.0 {
            out.extend(idx.iter().enumerate().map(|(i, _)| block[(i, i)]));
        } else {
            out.extend(unitary_eigenvalues(&block, phi + PI / 2.0));
        }
        start = end;
    }
    out
}

fn angle_count(group: &GroupDescriptor) -> usize {
    if group.family.is_unitary() {
        group.matrix_size
    } else {
        group.rank
    }
}

/// Pfaffian of a real skew matrix by skew Gaussian elimination with pivoting.
fn pfaffian(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n % 2 == 1 {
        return 0.0;
    }
    let mut m = a.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k < n {
        let (mut piv, mut best) = (k + 1, 0.0);
        for i in k + 1..n {
            if m[(k, i)].abs() > best {
                best = m[(k, i)].abs();
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k + 1 {
            m.swap_rows(k + 1, piv);
            m.swap_columns(k + 1, piv);
            pf = -pf;
        }
        let p = m[(k, k + 1)];
        pf *= p;
        for i in k + 2..n {
            let f = m[(k, i)] / p;
            for j in 0..n {
                let v = m[(k + 1, j)];
                m[(i, j)] -= f * v;
            }
            for j in 0..n {
                let v = m[(j, k + 1)];
                m[(j, i)] -= f * v;
            }
        }
        k += 2;
    }
    pf
}

/// Element of the maximal torus in the defining representation.
pub fn torus_element(group: &GroupDescriptor, cls: &ConjugacyClass) -> DMatrix<Complex64> {
    let n = group.matrix_size;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let th = &cls.eigenangles;
    match group.family {
        Family::UnitaryTilde | Family::SpecialUnitary => {
            for (i, t) in th.iter().enumerate() {
                m[(i, i)] = Complex64::from_polar(1.0, *t);
            }
        }
        Family::Symplectic => {
            let r = group.rank;
            for (i, t) in th.iter().enumerate() {
                m[(i, i)] = Complex64::from_polar(1.0, *t);
                m[(i + r, i + r)] = Complex64::from_polar(1.0, -*t);
            }
        }
        Family::OddOrthogonal | Family::EvenOrthogonal => {
            for (i, t) in th.iter().enumerate() {
                let (s, c) = t.sin_cos();
                m[(2 * i, 2 * i)] = c.into();
                m[(2 * i, 2 * i + 1)] = (-s).into();
                m[(2 * i + 1, 2 * i)] = s.into();
                m[(2 * i + 1, 2 * i + 1)] = c.into();
            }
            if group.family == Family::OddOrthogonal {
                m[(n - 1, n - 1)] = 1.0.into();
            }
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharValue {
    pub value: Complex64,
    /// Bound on the floating-point error of `value`.
    pub error: f64,
}

fn check_rank(group: &GroupDescriptor, what: &'static str) -> Result<()> {
    if group.rank > RANK_CAP {
        return Err(Error::RankCap {
            rank: group.rank,
            cap: RANK_CAP,
            what,
        });
    }
    Ok(())
}

pub fn char_eval(group: &GroupDescriptor, lambda: &DominantWeight, cls: &ConjugacyClass) -> Result<CharValue> {
    check_rank(group, "character evaluation")?;
    if !is_dominant(group, lambda.parts()) {
        return Err(Error::NotDominant {
            group: group.to_string(),
            parts: lambda.parts().to_vec(),
        });
    }
    if cls.eigenangles.len() != angle_count(group) {
        return Err(Error::arg(format!("class has the wrong number of angles for {group}")));
    }
    Ok(character(group, lambda.parts(), &cls.eigenangles))
}

/// Unchecked evaluation shared by the sums.
pub(crate) fn character(group: &GroupDescriptor, parts: &[i64], angles: &[f64]) -> CharValue {
    match group.family {
        Family::UnitaryTilde | Family::SpecialUnitary => unitary_character(group, parts, angles),
        Family::OddOrthogonal => {
            let h = real_complete(angles, true, jt_degree(parts));
            let (v, e) = real_det(parts.len(), |i, j| orth_entry(&h, parts, i, j));
            CharValue {
                value: v.into(),
                error: e,
            }
        }
        Family::Symplectic => {
            let h = real_complete(angles, false, jt_degree(parts));
            let (v, e) = real_det(parts.len(), |i, j| symp_entry(&h, parts, i, j));
            CharValue {
                value: v.into(),
                error: e,
            }
        }
        Family::EvenOrthogonal => even_orthogonal_character(group, parts, angles),
    }
}

fn jt_degree(parts: &[i64]) -> usize {
    (parts.first().map(|x| x.unsigned_abs()).unwrap_or(0) as usize) + parts.len() + 2
}

/// `h_k` for `k < degree` in the variables `e^{+-i theta}` (and 1 if `with_one`).
fn real_complete(angles: &[f64], with_one: bool, degree: usize) -> Vec<f64> {
    let mut h = vec![0.0; degree];
    h[0] = 1.0;
    for t in angles {
        let c = 2.0 * t.cos();
        // multiply by 1 / (1 - c x + x^2)
        for k in 1..degree {
            let prev2 = if k >= 2 { h[k - 2] } else { 0.0 };
            h[k] += c * h[k - 1] - prev2;
        }
    }
    if with_one {
        for k in 1..degree {
            h[k] += h[k - 1];
        }
    }
    h
}

fn at(h: &[f64], k: i64) -> f64 {
    if k < 0 {
        0.0
    } else {
        h[k as usize]
    }
}

fn orth_entry(h: &[f64], l: &[i64], i: usize, j: usize) -> f64 {
    let (i1, j1) = (i as i64 + 1, j as i64 + 1);
    at(h, l[i] - i1 + j1) - at(h, l[i] - i1 - j1)
}

fn symp_entry(h: &[f64], l: &[i64], i: usize, j: usize) -> f64 {
    let (i1, j1) = (i as i64 + 1, j as i64 + 1);
    let v = at(h, l[i] - i1 + j1) + at(h, l[i] - i1 - j1 + 2);
    if j == 0 {
        v / 2.0
    } else {
        v
    }
}

/// Determinant with a Hadamard-style rounding bound.
fn real_det(n: usize, entry: impl Fn(usize, usize) -> f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let m = DMatrix::from_fn(n, n, entry);
    let hadamard: f64 = m.row_iter().map(|r| r.norm()).product();
    (m.determinant(), hadamard * f64::EPSILON * (4 * n * n * n) as f64)
}

fn even_orthogonal_character(group: &GroupDescriptor, parts: &[i64], angles: &[f64]) -> CharValue {
    let r = group.rank;
    let abs: Vec<i64> = parts.iter().map(|x| x.abs()).collect();
    let h = real_complete(angles, false, jt_degree(&abs));
    let (o, eo) = real_det(r, |i, j| orth_entry(&h, &abs, i, j));
    let last = parts[r - 1];
    if last == 0 {
        return CharValue {
            value: o.into(),
            error: eo,
        };
    }
    let shifted: Vec<i64> = abs.iter().map(|x| x - 1).collect();
    let hs = real_complete(angles, false, jt_degree(&shifted));
    let (sp, es) = real_det(r, |i, j| symp_entry(&hs, &shifted, i, j));
    let sines: f64 = angles.iter().map(|t| 2.0 * t.sin()).product();
    let phase = Complex64::i().powu(r as u32);
    let diff = phase * sines * sp;
    let sign = if last > 0 { 1.0 } else { -1.0 };
    CharValue {
        value: (Complex64::from(o) + sign * diff) / 2.0,
        error: (eo + sines.abs() * es) / 2.0,
    }
}

fn unitary_character(group: &GroupDescriptor, parts: &[i64], angles: &[f64]) -> CharValue {
    let n = group.coords();
    let mut amb = parts.to_vec();
    if group.family == Family::SpecialUnitary {
        amb.push(0);
    }
    let low = amb[n - 1];
    let l: Vec<i64> = amb.iter().map(|x| x - low).filter(|&x| x > 0).collect();
    let degree = l.first().copied().unwrap_or(0) as usize + l.len() + 2;
    let mut h = vec![Complex64::new(0.0, 0.0); degree];
    h[0] = 1.0.into();
    for t in angles {
        let z = Complex64::from_polar(1.0, *t);
        for k in 1..degree {
            let prev = h[k - 1];
            h[k] += z * prev;
        }
    }
    let k = l.len();
    let (det, err) = if k == 0 {
        (Complex64::new(1.0, 0.0), 0.0)
    } else {
        let m = DMatrix::from_fn(k, k, |i, j| {
            let idx = l[i] - i as i64 + j as i64;
            if idx < 0 {
                Complex64::new(0.0, 0.0)
            } else {
                h[idx as usize]
            }
        });
        let hadamard: f64 = m.row_iter().map(|r| r.norm()).product();
        (m.determinant(), hadamard * f64::EPSILON * (4 * k * k * k) as f64)
    };
    let total: f64 = angles.iter().sum();
    let phase = Complex64::from_polar(1.0, low as f64 * total);
    CharValue {
        value: det * phase,
        error: err,
    }
}

/// Positive-root values `alpha(theta)` on the torus.
pub(crate) fn root_angles(group: &GroupDescriptor, th: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let c = th.len();
    for i in 0..c {
        for j in i + 1..c {
            out.push(th[i] - th[j]);
            if !group.family.is_unitary() {
                out.push(th[i] + th[j]);
            }
        }
        match group.family {
            Family::OddOrthogonal => out.push(th[i]),
            Family::Symplectic => out.push(2.0 * th[i]),
            _ => {}
        }
    }
    out
}

fn weyl_group_order(group: &GroupDescriptor) -> f64 {
    let r = group.rank;
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    match group.family {
        Family::UnitaryTilde => fact(r),
        Family::SpecialUnitary => fact(r + 1),
        Family::OddOrthogonal | Family::Symplectic => 2f64.powi(r as i32) * fact(r),
        Family::EvenOrthogonal => 2f64.powi(r as i32 - 1) * fact(r),
    }
}

/// Haar integral of a class function by the Weyl integration formula,
/// with the trapezoid rule on `points` nodes per torus direction.
///
/// Exact for trigonometric polynomials of degree below `points` in each angle.
pub fn weyl_integral(
    group: &GroupDescriptor,
    points: usize,
    f: impl Fn(&ConjugacyClass) -> Complex64 + Sync,
) -> Result<Complex64> {
    check_rank(group, "Weyl quadrature")?;
    if points == 0 {
        return Err(Error::arg("quadrature needs at least one node"));
    }
    let free = match group.family {
        Family::SpecialUnitary => group.rank,
        _ => angle_count(group),
    };
    let total = points.checked_pow(free as u32).ok_or_else(|| Error::arg("quadrature grid too large"))?;
    let step = 2.0 * PI / points as f64;
    let sum: Complex64 = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut th = Vec::with_capacity(angle_count(group));
            for _ in 0..free {
                th.push((idx % points) as f64 * step);
                idx /= points;
            }
            if group.family == Family::SpecialUnitary {
                th.push(-th.iter().sum::<f64>());
            }
            let density: f64 = root_angles(group, &th)
                .iter()
                .map(|a| 4.0 * (a / 2.0).sin().powi(2))
                .product();
            f(&ConjugacyClass { eigenangles: th }) * density
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(sum / (total as f64 * weyl_group_order(group)))
}

/// `p_t(g) = sum over lambda of exp(-t c / 2) d chi(g)`.
pub fn heat_kernel_eval(group: &GroupDescriptor, t: f64, cls: &ConjugacyClass, tol: f64) -> Result<crate::SeriesValue> {
    HeatKernel::new(group, t, tol)?.eval(cls)
}

/// The heat kernel at a fixed time with its truncation worked out once, for
/// repeated evaluation.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    group: GroupDescriptor,
    t: f64,
    /// Stored weight, `exp(-t c / 2) d` (quotient Casimir for U), drift.
    terms: Vec<(Vec<i64>, f64, f64)>,
    tail: f64,
}

impl HeatKernel {
    pub fn new(group: &GroupDescriptor, t: f64, tol: f64) -> Result<Self> {
        check_area(t)?;
        check_rank(group, "heat-kernel evaluation")?;
        if !(tol > 0.0) {
            return Err(Error::arg("tolerance must be positive"));
        }
        let bounder = TailBounder::new(group, t, 2.0);
        let m = (0..=MAX_CLASS_SIZE)
            .find(|&m| bounder.tail(m) <= tol / 2.0)
            .ok_or_else(|| Error::Numeric(format!("heat-kernel tail for {group} at t = {t} does not reach {tol:.1e}")))?;
        let rho2 = group.rho_doubled();
        let mut terms = Vec::new();
        for s in 0..=m {
            for_each_in_stratum(group, s, &mut |p| {
                let d = log_dim_fast(group, p, &rho2).exp();
                let (c, delta) = if group.family == Family::UnitaryTilde {
                    unitary_casimir_parts(p, &rho2)
                } else {
                    let (num, den) = casimir_num_den(group, p, &rho2);
                    (num as f64 / den as f64, 0.0)
                };
                terms.push((p.to_vec(), (-t * c / 2.0).exp() * d, delta));
            });
        }
        Ok(HeatKernel {
            group: *group,
            t,
            terms,
            tail: bounder.tail(m),
        })
    }

    pub fn area(&self) -> f64 {
        self.t
    }

    pub fn eval(&self, cls: &ConjugacyClass) -> Result<crate::SeriesValue> {
        if cls.eigenangles.len() != angle_count(&self.group) {
            return Err(Error::arg(format!("class has the wrong number of angles for {}", self.group)));
        }
        let th = &cls.eigenangles;
        let phi: f64 = th.iter().sum();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (p, w, delta) in &self.terms {
            let ch = character(&self.group, p, th);
            if self.group.family == Family::UnitaryTilde {
                let (orbit, oerr) = twisted_orbit(self.t, *delta, phi);
                acc += ch.value * orbit * *w;
                err += w * (ch.error * orbit.norm() + oerr * (ch.value.norm() + ch.error));
            } else {
                acc += ch.value * *w;
                err += w * ch.error;
            }
        }
        Ok(crate::SeriesValue {
            value: acc.re,
            tail_bound: self.tail + err + acc.norm() * f64::EPSILON * (self.terms.len() as f64 + 64.0),
        })
    }
}

/// A complex class-function value with a bound on truncation and rounding error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ClassTerm {
    Character,
    SquaredModulus,
}

/// `sum over lambda of exp(-t c / 2) d^power f(chi_lambda(g))` with a certified
/// tail, where `f` is the identity or `|.|^2`. Terms are bounded using
/// `|chi| <= d`.
pub(crate) fn class_sum(
    group: &GroupDescriptor,
    t: f64,
    cls: &ConjugacyClass,
    tol: f64,
    power: f64,
    term: ClassTerm,
) -> Result<ClassValue> {
    check_area(t)?;
    check_rank(group, "class-function sums")?;
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if cls.eigenangles.len() != angle_count(group) {
        return Err(Error::arg(format!("class has the wrong number of angles for {group}")));
    }
    let growth = match term {
        ClassTerm::Character => power + 1.0,
        ClassTerm::SquaredModulus => power + 2.0,
    };
    let bounder = TailBounder::new(group, t, growth.max(0.0));
    let m = (0..=MAX_CLASS_SIZE)
        .find(|&m| bounder.tail(m) <= tol / 2.0)
        .ok_or_else(|| Error::Numeric(format!("class sum tail for {group} at t = {t} does not reach {tol:.1e}")))?;
    let rho2 = group.rho_doubled();
    let th = &cls.eigenangles;
    let phi: f64 = th.iter().sum();
    let per: Vec<(Complex64, f64)> = (0..=m)
        .into_par_iter()
        .map(|s| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut err = 0.0;
            for_each_in_stratum(group, s, &mut |p| {
                let ch = character(group, p, th);
                let (f, ferr) = match term {
                    ClassTerm::Character => (ch.value, ch.error),
                    ClassTerm::SquaredModulus => {
                        let a = ch.value.norm();
                        (Complex64::from(a * a), ch.error * (2.0 * a + ch.error))
                    }
                };
                let dpow = if power == 0.0 {
                    1.0
                } else {
                    (power * log_dim_fast(group, p, &rho2)).exp()
                };
                if group.family == Family::UnitaryTilde {
                    let (ca, delta) = unitary_casimir_parts(p, &rho2);
                    let w = (-t * ca / 2.0).exp() * dpow;
                    let (orbit, oerr) = match term {
                        // chi_{mu + n} = chi_mu e^{i n phi}
                        ClassTerm::Character => twisted_orbit(t, delta, phi),
                        ClassTerm::SquaredModulus => {
                            let (o, e) = shift_orbit(t, delta);
                            (Complex64::from(o), e)
                        }
                    };
                    acc += f * orbit * w;
                    err += w * (ferr * orbit.norm() + oerr * (f.norm() + ferr));
                } else {
                    let (num, den) = casimir_num_den(group, p, &rho2);
                    let w = (-t * (num as f64 / den as f64) / 2.0).exp() * dpow;
                    acc += f * w;
                    err += w * ferr;
                }
            });
            (acc, err)
        })
        .collect();
    let value: Complex64 = per.iter().map(|x| x.0).sum();
    let err: f64 = per.iter().map(|x| x.1).sum();
    Ok(ClassValue {
        value,
        tail_bound: bounder.tail(m) + err + value.norm() * f64::EPSILON * 64.0,
    })
}

/// Size cutoff for pointwise class sums.
const MAX_CLASS_SIZE: usize = 400;

/// `sum_n exp(-t (n + delta)^2 / 2) e^{i n phi}` with a bound on omitted terms.
fn twisted_orbit(t: f64, delta: f64, phi: f64) -> (Complex64, f64) {
    let reach = (120.0 / t).sqrt();
    let lo = (-delta - reach).ceil() as i64;
    let hi = (-delta + reach).floor() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for n in lo..=hi {
        let x = n as f64 + delta;
        acc += Complex64::from_polar((-t * x * x / 2.0).exp(), n as f64 * phi);
    }
    let (_, err) = shift_orbit(t, delta);
    (acc, err)
}

/// Sparse signed expansion in irreducible characters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CharacterExpansion {
    pub terms: BTreeMap<DominantWeight, i64>,
}

impl CharacterExpansion {
    fn add(&mut self, w: Vec<i64>, c: i64) {
        let e = self.terms.entry(DominantWeight::from_parts_unchecked(w)).or_insert(0);
        *e += c;
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| *c != 0);
        self
    }

    pub fn get(&self, w: &DominantWeight) -> i64 {
        self.terms.get(w).copied().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> i64 {
        self.terms.values().map(|c| c.abs()).sum()
    }
}

/// Expansion of `Tr(g^k) chi_lambda(g)` in irreducible characters.
///
/// For B, C, D this is the signed rule with coefficients in `{-1, 0, 1}`;
/// the trace of `g^k` and `g^{-k}` agree so only `|k|` matters. Unitary
/// families need `allow_unitary`; there `k` keeps its sign.
pub fn pieri(group: &GroupDescriptor, lambda: &DominantWeight, k: i64, allow_unitary: bool) -> Result<CharacterExpansion> {
    if k == 0 {
        return Err(Error::arg("the power k must be non-zero"));
    }
    if !is_dominant(group, lambda.parts()) {
        return Err(Error::NotDominant {
            group: group.to_string(),
            parts: lambda.parts().to_vec(),
        });
    }
    if group.family.is_unitary() && !allow_unitary {
        return Err(Error::arg(
            "the signed Pieri rule is stated for B, C, D; the unitary version is an opt-in extension",
        ));
    }
    Ok(pieri_unchecked(group, lambda.parts(), k))
}

pub(crate) fn pieri_unchecked(group: &GroupDescriptor, parts: &[i64], k: i64) -> CharacterExpansion {
    let rho2 = group.rho_doubled();
    let mut out = CharacterExpansion::default();
    if group.family.is_unitary() {
        let mut amb = parts.to_vec();
        if group.family == Family::SpecialUnitary {
            amb.push(0);
        }
        let l: Vec<i64> = amb.iter().zip(&rho2).map(|(x, p)| 2 * x + p).collect();
        for j in 0..l.len() {
            let mut m = l.clone();
            m[j] += 2 * k;
            if let Some((sign, sorted)) = sort_distinct(m) {
                let mut mu: Vec<i64> = sorted.iter().zip(&rho2).map(|(x, p)| (x - p) / 2).collect();
                if group.family == Family::SpecialUnitary {
                    let last = mu.pop().unwrap();
                    mu.iter_mut().for_each(|x| *x -= last);
                }
                out.add(mu, sign);
            }
        }
        return out.prune();
    }
    let k = k.abs();
    let l: Vec<i64> = parts.iter().zip(&rho2).map(|(x, p)| 2 * x + p).collect();
    for j in 0..l.len() {
        for dir in [1, -1] {
            let mut m = l.clone();
            m[j] += dir * 2 * k;
            let term = if group.family == Family::EvenOrthogonal {
                normalise_even(m)
            } else {
                normalise_reflect(m)
            };
            if let Some((sign, sorted)) = term {
                let mu = sorted.iter().zip(&rho2).map(|(x, p)| (x - p) / 2).collect();
                out.add(mu, sign);
            }
        }
    }
    if group.family == Family::OddOrthogonal {
        out.add(parts.to_vec(), 1);
    }
    out.prune()
}

/// Sort into strictly decreasing order, returning the permutation sign, or
/// `None` when two entries coincide.
fn sort_distinct(mut m: Vec<i64>) -> Option<(i64, Vec<i64>)> {
    let mut sign = 1;
    // insertion sort, counting transpositions
    for i in 1..m.len() {
        let mut j = i;
        while j > 0 && m[j - 1] < m[j] {
            m.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if m.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, m))
}

/// B and C: each coordinate may be reflected at the cost of a sign; a zero
/// coordinate kills the alternant.
fn normalise_reflect(m: Vec<i64>) -> Option<(i64, Vec<i64>)> {
    let mut sign = 1;
    let mut a = Vec::with_capacity(m.len());
    for x in m {
        if x == 0 {
            return None;
        }
        if x < 0 {
            sign = -sign;
        }
        a.push(x.abs());
    }
    sort_distinct(a).map(|(s, v)| (s * sign, v))
}

/// D: only even numbers of reflections are free; an odd number lands on the
/// smallest coordinate unless some coordinate is zero.
fn normalise_even(m: Vec<i64>) -> Option<(i64, Vec<i64>)> {
    let negatives = m.iter().filter(|&&x| x < 0).count();
    let a: Vec<i64> = m.iter().map(|x| x.abs()).collect();
    let has_zero = a.contains(&0);
    let (sign, mut v) = sort_distinct(a)?;
    if negatives % 2 == 1 && !has_zero {
        let last = v.len() - 1;
        v[last] = -v[last];
    }
    Some((sign, v))
}

/// `Tr(g^k)` at a torus element.
pub fn trace_power(group: &GroupDescriptor, cls: &ConjugacyClass, k: i64) -> Complex64 {
    let kf = k as f64;
    match group.family {
        Family::UnitaryTilde | Family::SpecialUnitary => {
            cls.eigenangles.iter().map(|t| Complex64::from_polar(1.0, kf * t)).sum()
        }
        _ => {
            let s: f64 = cls.eigenangles.iter().map(|t| 2.0 * (kf * t).cos()).sum();
            let extra = if group.family == Family::OddOrthogonal { 1.0 } else { 0.0 };
            (s + extra).into()
        }
    }
}

#[cfg(test)]
/// Weyl dimension as a float, for identity checks.
pub(crate) fn dim_f64(group: &GroupDescriptor, parts: &[i64]) -> f64 {
    let w = DominantWeight::from_parts_unchecked(parts.to_vec());
    crate::weights::weyl_dim(group, &w).map(|d| d.to_string().parse::<f64>().unwrap()).unwrap_or(f64::NAN)
}
