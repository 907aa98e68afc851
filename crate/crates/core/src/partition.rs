//! Partition functions of the Yang-Mills measure as truncated character sums.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charcalc::{class_sum, ClassTerm, ClassValue, ConjugacyClass};
use crate::error::{Error, Result};
use crate::qseries::{limit_table, SeriesValue};
use crate::tails::TailBounder;
use crate::weights::{
    casimir_num_den, for_each_in_stratum, for_each_partition, log_dim_fast, make_group, Family, GroupDescriptor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// Certified bound from Casimir lower bounds, valid for every genus `g >= 1`.
    RigorousG1,
    /// As above, sharpened by the smallest non-trivial dimension; needs `g >= 2`.
    RigorousG2Plus,
    /// Stops when a whole stratum falls below `tol` relative to the sum.
    HeuristicSphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_size: u64,
    pub tol: f64,
    pub tail_mode: TailMode,
}

impl TruncationPolicy {
    /// The natural policy for genus `g`: heuristic on the sphere, rigorous otherwise.
    pub fn for_genus(g: u32, tol: f64) -> Self {
        let tail_mode = match g {
            0 => TailMode::HeuristicSphere,
            1 => TailMode::RigorousG1,
            _ => TailMode::RigorousG2Plus,
        };
        TruncationPolicy {
            max_size: 400,
            tol,
            tail_mode,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::arg("tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionValue {
    pub value: f64,
    pub tail_bound: f64,
    /// Dominant weights summed. For U(N) a whole shift orbit counts once.
    pub terms_used: u64,
}

pub(crate) fn check_area(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::arg(format!("area must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `sum over integers n of exp(-t (n + delta)^2 / 2)`, with a bound on the
/// omitted terms.
pub(crate) fn shift_orbit(t: f64, delta: f64) -> (f64, f64) {
    // keep every n with t (n + delta)^2 / 2 <= 60
    let reach = (120.0 / t).sqrt();
    let lo = (-delta - reach).ceil() as i64;
    let hi = (-delta + reach).floor() as i64;
    let mut acc = 0.0;
    for n in lo..=hi {
        let x = n as f64 + delta;
        acc += (-t * x * x / 2.0).exp();
    }
    let edge = (-60.0f64).exp() / (1.0 - (-t * reach).exp());
    (acc, 2.0 * edge)
}

/// Smallest dimension of a non-trivial irreducible representation.
pub(crate) fn min_nontrivial_dim(group: &GroupDescriptor) -> f64 {
    let r = group.rank as f64;
    match group.family {
        Family::UnitaryTilde => 1.0,
        Family::SpecialUnitary => r + 1.0,
        Family::OddOrthogonal => 2.0 * r + 1.0,
        Family::Symplectic => 2.0 * r,
        Family::EvenOrthogonal => match group.rank {
            1 => 1.0,
            2 => 3.0,
            _ => 2.0 * r,
        },
    }
}

/// Quotient Casimir `c_A` of an ambient unitary weight and its drift `delta`.
pub(crate) fn unitary_casimir_parts(amb: &[i64], rho2: &[i64]) -> (f64, f64) {
    let n = amb.len() as i128;
    let mut num: i128 = 0;
    let mut sum: i128 = 0;
    for (x, p) in amb.iter().zip(rho2) {
        num += (*x as i128) * (*x as i128 + *p as i128);
        sum += *x as i128;
    }
    ((n * num - sum * sum) as f64 / (n * n) as f64, sum as f64 / n as f64)
}

/// Summand of the partition function for one stored weight (for U(N) the
/// shift-free representative, summed over its shift orbit).
struct Summand {
    group: GroupDescriptor,
    rho2: Vec<i64>,
    t: f64,
    /// Power of `d`: `2 - 2g`.
    dim_power: f64,
}

impl Summand {
    fn eval(&self, parts: &[i64]) -> (f64, f64) {
        let dim_factor = if self.dim_power == 0.0 {
            1.0
        } else {
            (self.dim_power * log_dim_fast(&self.group, parts, &self.rho2)).exp()
        };
        if self.group.family == Family::UnitaryTilde {
            let (ca, delta) = unitary_casimir_parts(parts, &self.rho2);
            let (orbit, err) = shift_orbit(self.t, delta);
            let w = (-self.t * ca / 2.0).exp() * dim_factor;
            (w * orbit, w * err)
        } else {
            let (num, den) = casimir_num_den(&self.group, parts, &self.rho2);
            ((-self.t * (num as f64 / den as f64) / 2.0).exp() * dim_factor, 0.0)
        }
    }
}

/// `Z = sum over dominant lambda of exp(-T c / 2) d^(2 - 2g)`.
pub fn partition_function(group: &GroupDescriptor, g: u32, t: f64, policy: &TruncationPolicy) -> Result<PartitionValue> {
    check_area(t)?;
    policy.check()?;
    match (policy.tail_mode, g) {
        (TailMode::RigorousG1 | TailMode::RigorousG2Plus, 0) => {
            return Err(Error::arg("the sphere (g = 0) admits only the heuristic tail mode"))
        }
        (TailMode::RigorousG2Plus, 1) => return Err(Error::arg("the g >= 2 tail mode needs g >= 2")),
        _ => {}
    }
    let summand = Summand {
        group: *group,
        rho2: group.rho_doubled(),
        t,
        dim_power: 2.0 - 2.0 * g as f64,
    };
    if policy.tail_mode == TailMode::HeuristicSphere {
        return heuristic_sum(&summand, policy);
    }
    let bounder = TailBounder::new(group, t, 0.0);
    // for g >= 2 every omitted weight is non-trivial, so d^(2-2g) <= d_min^(2-2g)
    let scale = if policy.tail_mode == TailMode::RigorousG2Plus {
        min_nontrivial_dim(group).powf(2.0 - 2.0 * g as f64)
    } else {
        1.0
    };
    let budget = policy.tol / 2.0;
    let m = (0..=policy.max_size as usize)
        .find(|&m| scale * bounder.tail(m) <= budget)
        .ok_or_else(|| {
            Error::Numeric(format!(
                "tail bound {:.3e} at max_size {} exceeds tolerance {:.3e} for {group}",
                scale * bounder.tail(policy.max_size as usize),
                policy.max_size,
                policy.tol
            ))
        })?;
    let tail = scale * bounder.tail(m);
    if g == 1 && group.family.is_unitary() {
        let (value, err, terms, ops) = unitary_torus_sum(group, t, m);
        return Ok(PartitionValue {
            value,
            tail_bound: tail + err + rounding(value, ops),
            terms_used: terms,
        });
    }
    let (strata, terms) = stratified_pair_sum(group, m, |p| summand.eval(p));
    let value: f64 = strata.iter().map(|x| x.0).sum();
    let err: f64 = strata.iter().map(|x| x.1).sum();
    Ok(PartitionValue {
        value,
        tail_bound: tail + err + rounding(value, terms),
        terms_used: terms,
    })
}

fn rounding(value: f64, terms: u64) -> f64 {
    // worst-case bound for recursive summation of non-negative terms
    value.abs() * f64::EPSILON * (terms as f64 + 64.0)
}

fn stratified_pair_sum<F>(group: &GroupDescriptor, m: usize, term: F) -> (Vec<(f64, f64)>, u64)
where
    F: Fn(&[i64]) -> (f64, f64) + Sync,
{
    let per: Vec<((f64, f64), u64)> = (0..=m)
        .into_par_iter()
        .map(|s| {
            let mut acc = (0.0, 0.0);
            let mut count = 0u64;
            for_each_in_stratum(group, s, &mut |p| {
                let (v, e) = term(p);
                acc.0 += v;
                acc.1 += e;
                count += 1;
            });
            (acc, count)
        })
        .collect();
    let count = per.iter().map(|x| x.1).sum();
    (per.into_iter().map(|x| x.0).collect(), count)
}

fn heuristic_sum(summand: &Summand, policy: &TruncationPolicy) -> Result<PartitionValue> {
    let group = summand.group;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut terms = 0u64;
    let mut quiet = 0;
    for s in 0..=policy.max_size as usize {
        let mut acc = (0.0, 0.0);
        for_each_in_stratum(&group, s, &mut |p| {
            let (v, e) = summand.eval(p);
            acc.0 += v;
            acc.1 += e;
            terms += 1;
        });
        value += acc.0;
        err += acc.1;
        // two consecutive negligible strata end the sum
        if acc.0 < policy.tol * value {
            quiet += 1;
            if quiet == 2 {
                return Ok(PartitionValue {
                    value,
                    tail_bound: acc.0 + err,
                    terms_used: terms,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Numeric(format!(
        "sphere sum for {group} still growing at max_size {}",
        policy.max_size
    )))
}

/// Genus-one sum for the unitary families, where `d` drops out and the
/// Casimir splits over the two partitions of the canonical representative:
/// `c_A = |a| + |b| + 2 (cont a + cont b) / N - (|a| - |b|)^2 / N^2`.
///
/// Returns the value, the omitted shift-orbit mass, the number of weights
/// and a count of floating operations along any one summation path.
fn unitary_torus_sum(group: &GroupDescriptor, t: f64, m: usize) -> (f64, f64, u64, u64) {
    let n = group.coords();
    let nf = n as f64;
    let side = |max_len: usize| -> Vec<(f64, u64)> {
        (0..=m)
            .into_par_iter()
            .map(|a| {
                let mut acc = 0.0;
                let mut count = 0u64;
                for_each_partition(a, max_len, &mut |p| {
                    let content: i64 = p
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| x * (x - 1) / 2 - i as i64 * x)
                        .sum();
                    acc += (-t * content as f64 / nf).exp();
                    count += 1;
                });
                (acc, count)
            })
            .collect()
    };
    let fa = side(n / 2);
    let fb = side((n - 1) / 2);
    let mut value = 0.0;
    let mut err = 0.0;
    let mut terms = 0u64;
    for s in 0..=m {
        for a in 0..=s {
            let b = s - a;
            if fa[a].1 == 0 || fb[b].1 == 0 {
                continue;
            }
            let diff = a as f64 - b as f64;
            let mut w = (-t * (s as f64 - diff * diff / (nf * nf)) / 2.0).exp() * fa[a].0 * fb[b].0;
            if group.family == Family::UnitaryTilde {
                let (orbit, e) = shift_orbit(t, diff / nf);
                err += w * e;
                w *= orbit;
            }
            value += w;
            terms += fa[a].1 * fb[b].1;
        }
    }
    let longest = |f: &[(f64, u64)]| f.iter().map(|x| x.1).max().unwrap_or(0);
    let ops = longest(&fa) + longest(&fb) + ((m + 1) * (m + 2) / 2) as u64 + 8;
    (value, err, terms, ops)
}

/// Partition function of a surface of genus `g` with one boundary component
/// whose holonomy lies in `cls`:
/// `sum over lambda of exp(-T c / 2) d^(1 - 2g) chi_lambda(cls)`.
pub fn partition_boundary(
    group: &GroupDescriptor,
    g: u32,
    t: f64,
    cls: &ConjugacyClass,
    tol: f64,
) -> Result<ClassValue> {
    if g == 0 {
        return Err(Error::arg("the boundary partition function is defined for g >= 1"));
    }
    class_sum(group, t, cls, tol, 1.0 - 2.0 * g as f64, ClassTerm::Character)
}

/// `|Z_{g,T}(X_r) - limit|` as a value with its combined error.
pub fn limit_gap(family: Family, g: u32, t: f64, rank: usize, policy: &TruncationPolicy) -> Result<SeriesValue> {
    let group = make_group(family, rank)?;
    let z = partition_function(&group, g, t, policy)?;
    let limit = limit_table(family, g, t, policy.tol)?;
    Ok(SeriesValue {
        value: (z.value - limit).abs(),
        tail_bound: z.tail_bound + policy.tol,
    })
}

/// Weak-phase free energy of the large-N sphere, `T/24 + 3/4 - log(T)/2`.
pub fn dk_free_energy_weak(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= PI * PI) {
        return Err(Error::arg(format!(
            "the weak-phase free energy needs 0 < T <= pi^2, got {t}"
        )));
    }
    Ok(t / 24.0 + 0.75 - 0.5 * t.ln())
}

/// Positive coroots in the basis of simple coroots, as (first, coefficients).
/// Calls `f(coeffs)` with a dense coefficient vector of length `rank`.
fn for_each_positive_coroot(group: &GroupDescriptor, mut f: impl FnMut(&[u32])) {
    let r = group.rank;
    let mut c = vec![0u32; r];
    let mut emit = |c: &mut Vec<u32>, segs: &[(usize, usize, u32)]| {
        c.iter_mut().for_each(|x| *x = 0);
        for &(lo, hi, v) in segs {
            for x in c.iter_mut().take(hi).skip(lo) {
                *x += v;
            }
        }
        f(c);
    };
    match group.family {
        Family::SpecialUnitary => {
            let n = r + 1;
            for i in 0..n {
                for j in i + 1..n {
                    emit(&mut c, &[(i, j, 1)]);
                }
            }
        }
        Family::OddOrthogonal | Family::Symplectic => {
            let b = group.family == Family::OddOrthogonal;
            for i in 0..r {
                for j in i + 1..r {
                    emit(&mut c, &[(i, j, 1)]);
                    emit(&mut c, &[(i, j, 1), (j, r - 1, 2), (r - 1, r, if b { 1 } else { 2 })]);
                }
                if b {
                    emit(&mut c, &[(i, r - 1, 2), (r - 1, r, 1)]);
                } else {
                    emit(&mut c, &[(i, r, 1)]);
                }
            }
        }
        Family::EvenOrthogonal => {
            for i in 0..r {
                for j in i + 1..r {
                    emit(&mut c, &[(i, j, 1)]);
                    if j == r - 1 {
                        emit(&mut c, &[(i, r - 2, 1), (r - 1, r, 1)]);
                    } else {
                        emit(&mut c, &[(i, j, 1), (j, r - 2, 2), (r - 2, r, 1)]);
                    }
                }
            }
        }
        Family::UnitaryTilde => {}
    }
}

/// Exponents `W_k` with `d_lambda >= prod_k (1 + a_k)^{W_k}` in fundamental
/// coordinates `a_k`, from the weighted AM-GM inequality on each root factor.
pub(crate) fn dimension_exponents(group: &GroupDescriptor) -> Vec<f64> {
    let mut w = vec![0.0; group.rank];
    for_each_positive_coroot(group, |c| {
        let ht: u32 = c.iter().sum();
        for (wk, &ck) in w.iter_mut().zip(c) {
            *wk += ck as f64 / ht as f64;
        }
    });
    w
}

/// Fundamental coordinates of a stored weight.
#[cfg(test)]
pub(crate) fn fundamental_coords(group: &GroupDescriptor, parts: &[i64]) -> Vec<i64> {
    let r = group.rank;
    let mut a: Vec<i64> = (0..r).map(|k| parts[k] - parts.get(k + 1).copied().unwrap_or(0)).collect();
    match group.family {
        Family::OddOrthogonal => a[r - 1] = 2 * parts[r - 1],
        Family::EvenOrthogonal if r >= 2 => a[r - 1] = parts[r - 2] + parts[r - 1],
        _ => {}
    }
    a
}

/// Inverse of [`fundamental_coords`], or `None` off the weight lattice.
fn weight_from_fundamental(group: &GroupDescriptor, a: &[i64]) -> Option<Vec<i64>> {
    let r = group.rank;
    let mut l = vec![0i64; r];
    let mut start = r - 1;
    match group.family {
        Family::OddOrthogonal => {
            if a[r - 1] % 2 != 0 {
                return None;
            }
            l[r - 1] = a[r - 1] / 2;
        }
        Family::EvenOrthogonal => {
            if (a[r - 2] + a[r - 1]) % 2 != 0 {
                return None;
            }
            l[r - 2] = (a[r - 2] + a[r - 1]) / 2;
            l[r - 1] = (a[r - 1] - a[r - 2]) / 2;
            start = r - 2;
        }
        _ => l[r - 1] = a[r - 1],
    }
    for k in (0..start).rev() {
        l[k] = l[k + 1] + a[k];
    }
    Some(l)
}

/// Upper bound on `sum_{k >= 1} k^{-x}` for `x > 1`.
fn riemann_zeta_upper(x: f64) -> f64 {
    let m = 64;
    let partial: f64 = (1..=m).map(|k| (k as f64).powf(-x)).sum();
    partial + (m as f64).powf(1.0 - x) / (x - 1.0)
}

const ZETA_ENUMERATION_CAP: u64 = 50_000_000;

/// Witten zeta function `sum over dominant lambda of d_lambda^{-s}`.
///
/// The sum runs over every weight whose dimension lower bound stays below a
/// threshold `D`; the remainder is bounded by Rankin's trick,
/// `D^{-(s - s')} prod_k zeta(s' W_k)`. `policy.max_size` plays no role.
pub fn witten_zeta(group: &GroupDescriptor, s: f64, policy: &TruncationPolicy) -> Result<PartitionValue> {
    policy.check()?;
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::arg(format!("the zeta function needs s > 1, got {s}")));
    }
    if group.family == Family::UnitaryTilde || (group.family == Family::EvenOrthogonal && group.rank == 1) {
        return Err(Error::arg(format!(
            "{group} has infinitely many one-dimensional representations; its zeta function diverges"
        )));
    }
    if group.rank == 1 {
        return Ok(rank_one_zeta(group.family, s, policy.tol));
    }
    let w = dimension_exponents(group);
    let wmin = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo = 1.0 / wmin;
    if s <= lo {
        return Err(Error::Numeric(format!("no Rankin exponent available for {group} at s = {s}")));
    }
    // choose s' to minimise the threshold D needed for the target tolerance
    let target = policy.tol / 2.0;
    let mut best: Option<(f64, f64)> = None;
    for j in 1..40 {
        let sp = lo + (s - lo) * j as f64 / 40.0;
        let prod: f64 = w.iter().map(|wk| riemann_zeta_upper(sp * wk).ln()).sum();
        let log_d = (prod - target.ln()) / (s - sp);
        if best.is_none_or(|b| log_d < b.0) {
            best = Some((log_d, sp));
        }
    }
    let (log_d, sp) = best.unwrap();
    let log_d = log_d.max(0.0);
    let rho2 = group.rho_doubled();
    let mut a = vec![0i64; group.rank];
    let mut value_terms: Vec<f64> = Vec::new();
    let mut visited = 0u64;
    let mut overflow = false;
    zeta_dfs(&w, 0, log_d, &mut a, &mut |a| {
        visited += 1;
        if visited > ZETA_ENUMERATION_CAP {
            overflow = true;
            return false;
        }
        if let Some(l) = weight_from_fundamental(group, a) {
            value_terms.push((-s * log_dim_fast(group, &l, &rho2)).exp());
        }
        true
    });
    if overflow {
        return Err(Error::Numeric(format!(
            "zeta enumeration for {group} exceeds {ZETA_ENUMERATION_CAP} weights at tolerance {}",
            policy.tol
        )));
    }
    // smallest terms first for a stable sum
    value_terms.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let value: f64 = value_terms.iter().sum();
    let prod: f64 = w.iter().map(|wk| riemann_zeta_upper(sp * wk).ln()).sum();
    let tail = (prod - (s - sp) * log_d).exp();
    Ok(PartitionValue {
        value,
        tail_bound: tail + rounding(value, value_terms.len() as u64),
        terms_used: value_terms.len() as u64,
    })
}

fn zeta_dfs(w: &[f64], k: usize, budget: f64, a: &mut Vec<i64>, visit: &mut dyn FnMut(&[i64]) -> bool) -> bool {
    if k == w.len() {
        return visit(a);
    }
    let mut x = 0i64;
    loop {
        let cost = w[k] * ((1 + x) as f64).ln();
        if cost > budget {
            break;
        }
        a[k] = x;
        if !zeta_dfs(w, k + 1, budget - cost, a, visit) {
            return false;
        }
        x += 1;
    }
    a[k] = 0;
    true
}

/// Rank one: `d` runs over all positive integers (A, C) or odd ones (B).
fn rank_one_zeta(family: Family, s: f64, tol: f64) -> PartitionValue {
    let odd = family == Family::OddOrthogonal;
    let step = if odd { 2.0 } else { 1.0 };
    // the tail lies between two integrals; report their midpoint and half-width
    let integral = |x: f64| x.powf(1.0 - s) / (step * (s - 1.0));
    let mut k = 16u64;
    loop {
        let last = if odd { 2 * k - 1 } else { k } as f64;
        let width = (integral(last) - integral(last + step)) / 2.0;
        if width <= tol / 4.0 || k >= 1 << 26 {
            let partial: f64 = (1..=k)
                .rev()
                .map(|j| if odd { (2 * j - 1) as f64 } else { j as f64 })
                .map(|d| d.powf(-s))
                .sum();
            let mid = (integral(last) + integral(last + step)) / 2.0;
            let value = partial + mid;
            return PartitionValue {
                value,
                tail_bound: width + rounding(value, k),
                terms_used: k,
            };
        }
        k *= 2;
    }
}
