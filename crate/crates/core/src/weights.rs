//! Root data for the five classical families and dominant-weight bookkeeping.
//!
//! Weights are stored as integer vectors of length `rank`. For the special
//! unitary family the omitted last coordinate is zero. Half-integral `rho`
//! (odd orthogonal, and unitary groups of even size) is handled by working
//! with `2 * rho`, so every internal quantity is an integer.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// U(r)
    UnitaryTilde,
    /// SU(r+1)
    SpecialUnitary,
    /// SO(2r+1)
    OddOrthogonal,
    /// Sp(r), realised inside U(2r)
    Symplectic,
    /// SO(2r)
    EvenOrthogonal,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::UnitaryTilde,
        Family::SpecialUnitary,
        Family::OddOrthogonal,
        Family::Symplectic,
        Family::EvenOrthogonal,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Family::UnitaryTilde => "A~",
            Family::SpecialUnitary => "A",
            Family::OddOrthogonal => "B",
            Family::Symplectic => "C",
            Family::EvenOrthogonal => "D",
        }
    }

    pub fn is_unitary(self) -> bool {
        matches!(self, Family::UnitaryTilde | Family::SpecialUnitary)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A~" | "At" | "Atilde" | "AT" | "U" | "u" => Ok(Family::UnitaryTilde),
            "A" | "a" | "SU" | "su" => Ok(Family::SpecialUnitary),
            "B" | "b" | "SO-odd" => Ok(Family::OddOrthogonal),
            "C" | "c" | "Sp" | "sp" => Ok(Family::Symplectic),
            "D" | "d" | "SO-even" => Ok(Family::EvenOrthogonal),
            other => Err(Error::arg(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub family: Family,
    pub rank: usize,
    pub matrix_size: usize,
    pub dyson_beta: u8,
}

pub fn make_group(family: Family, rank: usize) -> Result<GroupDescriptor> {
    if rank == 0 {
        return Err(Error::arg("rank must be at least 1"));
    }
    let (matrix_size, dyson_beta) = match family {
        Family::UnitaryTilde => (rank, 2),
        Family::SpecialUnitary => (rank + 1, 2),
        Family::OddOrthogonal => (2 * rank + 1, 1),
        Family::Symplectic => (2 * rank, 4),
        Family::EvenOrthogonal => (2 * rank, 1),
    };
    Ok(GroupDescriptor {
        family,
        rank,
        matrix_size,
        dyson_beta,
    })
}

impl GroupDescriptor {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        make_group(family, rank)
    }

    /// Length of the ambient coordinate vector (rank + 1 for SU).
    pub fn coords(&self) -> usize {
        match self.family {
            Family::SpecialUnitary => self.rank + 1,
            _ => self.rank,
        }
    }

    /// `2 * rho` in ambient coordinates.
    pub fn rho_doubled(&self) -> Vec<i64> {
        let r = self.rank as i64;
        let c = self.coords() as i64;
        (1..=c)
            .map(|i| match self.family {
                Family::UnitaryTilde | Family::SpecialUnitary => c + 1 - 2 * i,
                Family::OddOrthogonal => 2 * r + 1 - 2 * i,
                Family::Symplectic => 2 * r + 2 - 2 * i,
                Family::EvenOrthogonal => 2 * r - 2 * i,
            })
            .collect()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.rho_doubled().iter().map(|&x| x as f64 / 2.0).collect()
    }

    /// Number of positive roots.
    pub fn positive_root_count(&self) -> usize {
        let c = self.coords();
        let pairs = c * (c - 1) / 2;
        match self.family {
            Family::UnitaryTilde | Family::SpecialUnitary => pairs,
            Family::OddOrthogonal | Family::Symplectic => 2 * pairs + c,
            Family::EvenOrthogonal => 2 * pairs,
        }
    }

    /// Dimension of the group manifold.
    pub fn manifold_dim(&self) -> usize {
        let n = self.matrix_size;
        match self.family {
            Family::UnitaryTilde => n * n,
            Family::SpecialUnitary => n * n - 1,
            Family::OddOrthogonal | Family::EvenOrthogonal => n * (n - 1) / 2,
            Family::Symplectic => self.rank * (2 * self.rank + 1),
        }
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family.symbol(), self.rank)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DominantWeight {
    parts: Vec<i64>,
}

impl DominantWeight {
    pub fn new(group: &GroupDescriptor, parts: Vec<i64>) -> Result<Self> {
        if !is_dominant(group, &parts) {
            return Err(Error::NotDominant {
                group: group.to_string(),
                parts,
            });
        }
        Ok(DominantWeight { parts })
    }

    pub fn trivial(group: &GroupDescriptor) -> Self {
        DominantWeight {
            parts: vec![0; group.rank],
        }
    }

    pub(crate) fn from_parts_unchecked(parts: Vec<i64>) -> Self {
        DominantWeight { parts }
    }

    pub fn parts(&self) -> &[i64] {
        &self.parts
    }

    pub fn is_trivial(&self) -> bool {
        self.parts.iter().all(|&x| x == 0)
    }
}

impl fmt::Display for DominantWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

pub fn is_dominant(group: &GroupDescriptor, parts: &[i64]) -> bool {
    let r = group.rank;
    if parts.len() != r {
        return false;
    }
    let non_increasing = parts.windows(2).all(|w| w[0] >= w[1]);
    match group.family {
        Family::UnitaryTilde => non_increasing,
        Family::SpecialUnitary | Family::OddOrthogonal | Family::Symplectic => {
            non_increasing && parts[r - 1] >= 0
        }
        Family::EvenOrthogonal => {
            if r == 1 {
                return true;
            }
            parts[..r - 1].windows(2).all(|w| w[0] >= w[1]) && parts[r - 2] >= parts[r - 1].abs()
        }
    }
}

fn check(group: &GroupDescriptor, w: &DominantWeight) -> Result<()> {
    if is_dominant(group, &w.parts) {
        Ok(())
    } else {
        Err(Error::NotDominant {
            group: group.to_string(),
            parts: w.parts.clone(),
        })
    }
}

/// Weight in ambient coordinates (appends the zero coordinate for SU).
pub(crate) fn ambient(group: &GroupDescriptor, parts: &[i64]) -> Vec<i64> {
    let mut v = parts.to_vec();
    if group.family == Family::SpecialUnitary {
        v.push(0);
    }
    v
}

/// Casimir as an exact fraction `num / den`.
pub(crate) fn casimir_num_den(group: &GroupDescriptor, parts: &[i64], rho2: &[i64]) -> (i128, i128) {
    let n = group.matrix_size as i128;
    let mut num: i128 = 0;
    let mut sum: i128 = 0;
    for (i, &x) in parts.iter().enumerate() {
        let x = x as i128;
        num += x * (x + rho2[i] as i128);
        sum += x;
    }
    // the omitted SU coordinate is zero and contributes nothing
    if group.family == Family::SpecialUnitary {
        (num * n - sum * sum, n * n)
    } else {
        (num, n)
    }
}

/// Floating Casimir without validation, for hot loops.
#[inline]
#[allow(dead_code)]
pub(crate) fn casimir_fast(group: &GroupDescriptor, parts: &[i64], rho2: &[i64]) -> f64 {
    let (num, den) = casimir_num_den(group, parts, rho2);
    num as f64 / den as f64
}

pub fn casimir_exact(group: &GroupDescriptor, w: &DominantWeight) -> Result<Ratio<i128>> {
    check(group, w)?;
    let (num, den) = casimir_num_den(group, &w.parts, &group.rho_doubled());
    Ok(Ratio::new(num, den))
}

pub fn casimir(group: &GroupDescriptor, w: &DominantWeight) -> Result<f64> {
    let c = casimir_exact(group, w)?;
    Ok(*c.numer() as f64 / *c.denom() as f64)
}

/// Calls `f(<L, alpha>, <P, alpha>)` for every positive root, where
/// `L = 2(lambda + rho)` and `P = 2 rho` in ambient coordinates.
#[inline]
pub(crate) fn for_each_root_pair(family: Family, l: &[i64], p: &[i64], mut f: impl FnMut(i64, i64)) {
    let c = l.len();
    let unitary = family.is_unitary();
    for i in 0..c {
        for j in i + 1..c {
            f(l[i] - l[j], p[i] - p[j]);
            if !unitary {
                f(l[i] + l[j], p[i] + p[j]);
            }
        }
        if matches!(family, Family::OddOrthogonal | Family::Symplectic) {
            f(l[i], p[i]);
        }
    }
}

fn shifted_doubled(group: &GroupDescriptor, parts: &[i64], rho2: &[i64]) -> Vec<i64> {
    let amb = ambient(group, parts);
    amb.iter().zip(rho2).map(|(x, p)| 2 * x + p).collect()
}

pub fn weyl_dim(group: &GroupDescriptor, w: &DominantWeight) -> Result<BigInt> {
    check(group, w)?;
    let rho2 = group.rho_doubled();
    let l = shifted_doubled(group, &w.parts, &rho2);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for_each_root_pair(group.family, &l, &rho2, |a, b| {
        num *= a;
        den *= b;
    });
    let (q, rem) = num.div_rem(&den);
    if !rem.is_zero() {
        return Err(Error::Numeric(format!(
            "Weyl dimension of {w} for {group} is not an integer"
        )));
    }
    Ok(q)
}

/// Natural log of the Weyl dimension in floating point, unchecked.
pub(crate) fn log_dim_fast(group: &GroupDescriptor, parts: &[i64], rho2: &[i64]) -> f64 {
    let l = shifted_doubled(group, parts, rho2);
    let mut acc = 0.0;
    for_each_root_pair(group.family, &l, rho2, |a, b| {
        acc += (a as f64 / b as f64).ln();
    });
    acc
}

pub fn log_dim(group: &GroupDescriptor, w: &DominantWeight) -> Result<f64> {
    check(group, w)?;
    Ok(log_dim_fast(group, &w.parts, &group.rho_doubled()))
}

/// Shift `n` such that `lambda - n` splits into a positive and a negative
/// partition with at most `N/2` and fewer than `N/2` parts.
fn canonical_shift(amb: &[i64]) -> i64 {
    amb[amb.len() / 2]
}

/// Size used for stratified enumeration.
///
/// B, C: `sum lambda_i`. D: `sum |lambda_i|`. SU: L1 distance to the nearest
/// multiple of `(1,...,1)`. U: that distance plus `|n|` for the canonical shift.
pub fn weight_size(group: &GroupDescriptor, parts: &[i64]) -> u64 {
    match group.family {
        Family::OddOrthogonal | Family::Symplectic | Family::EvenOrthogonal => {
            parts.iter().map(|x| x.unsigned_abs()).sum()
        }
        Family::SpecialUnitary | Family::UnitaryTilde => {
            let amb = ambient(group, parts);
            let n = canonical_shift(&amb);
            let s: u64 = amb.iter().map(|x| (x - n).unsigned_abs()).sum();
            if group.family == Family::UnitaryTilde {
                s + n.unsigned_abs()
            } else {
                s
            }
        }
    }
}

pub fn weight_length(parts: &[i64]) -> usize {
    parts.iter().filter(|&&x| x != 0).count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightStats {
    pub casimir: f64,
    pub dimension: BigInt,
    pub size: u64,
    pub length: usize,
}

pub fn weight_stats(group: &GroupDescriptor, w: &DominantWeight) -> Result<WeightStats> {
    Ok(WeightStats {
        casimir: casimir(group, w)?,
        dimension: weyl_dim(group, w)?,
        size: weight_size(group, &w.parts),
        length: weight_length(&w.parts),
    })
}

/// All partitions of `s` with at most `max_len` parts, largest parts first.
pub(crate) fn partitions(s: usize, max_len: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut buf = Vec::new();
    partitions_rec(s, s, max_len, &mut buf, &mut |p| out.push(p.to_vec()));
    out
}

pub(crate) fn for_each_partition(s: usize, max_len: usize, f: &mut dyn FnMut(&[i64])) {
    let mut buf = Vec::with_capacity(max_len.min(s));
    partitions_rec(s, s, max_len, &mut buf, f);
}

fn partitions_rec(rem: usize, max_part: usize, max_len: usize, buf: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
    if rem == 0 {
        f(buf);
        return;
    }
    if buf.len() == max_len {
        return;
    }
    // remaining parts cannot exceed max_part, prune impossible branches
    if rem > max_part * (max_len - buf.len()) {
        return;
    }
    for p in (1..=rem.min(max_part)).rev() {
        buf.push(p as i64);
        partitions_rec(rem - p, p, max_len, buf, f);
        buf.pop();
    }
}

/// Visits the weights of one stratum.
///
/// For U the visited weights are the shift-free representatives (canonical
/// shift zero); callers handle the shift orbit themselves.
pub fn for_each_in_stratum(group: &GroupDescriptor, s: usize, f: &mut dyn FnMut(&[i64])) {
    let r = group.rank;
    match group.family {
        Family::OddOrthogonal | Family::Symplectic => {
            let mut v = vec![0i64; r];
            for_each_partition(s, r, &mut |p| {
                v[..p.len()].copy_from_slice(p);
                v[p.len()..].iter_mut().for_each(|x| *x = 0);
                f(&v);
            });
        }
        Family::EvenOrthogonal => {
            let mut v = vec![0i64; r];
            for_each_partition(s, r, &mut |p| {
                v[..p.len()].copy_from_slice(p);
                v[p.len()..].iter_mut().for_each(|x| *x = 0);
                f(&v);
                if p.len() == r {
                    v[r - 1] = -v[r - 1];
                    f(&v);
                }
            });
        }
        Family::SpecialUnitary | Family::UnitaryTilde => {
            let n = group.coords();
            let la = n / 2;
            let lb = (n - 1) / 2;
            let mut amb = vec![0i64; n];
            for a in (0..=s).rev() {
                let b = s - a;
                let betas = partitions(b, lb);
                if betas.is_empty() {
                    continue;
                }
                for_each_partition(a, la, &mut |alpha| {
                    for beta in &betas {
                        amb.iter_mut().for_each(|x| *x = 0);
                        amb[..alpha.len()].copy_from_slice(alpha);
                        for (k, &bk) in beta.iter().enumerate() {
                            amb[n - 1 - k] = -bk;
                        }
                        if group.family == Family::SpecialUnitary {
                            let shift = beta.first().copied().unwrap_or(0);
                            let stored: Vec<i64> = amb[..r].iter().map(|x| x + shift).collect();
                            f(&stored);
                        } else {
                            f(&amb);
                        }
                    }
                });
            }
        }
    }
}

/// Ordered stream of dominant weights with `weight_size <= max_size`, in
/// non-decreasing size. Each stratum is materialised only when reached.
pub struct WeightStream {
    group: GroupDescriptor,
    max_size: u64,
    next_stratum: u64,
    buf: VecDeque<DominantWeight>,
}

impl Iterator for WeightStream {
    type Item = DominantWeight;

    fn next(&mut self) -> Option<DominantWeight> {
        loop {
            if let Some(w) = self.buf.pop_front() {
                return Some(w);
            }
            if self.next_stratum > self.max_size {
                return None;
            }
            let s = self.next_stratum as usize;
            self.next_stratum += 1;
            let buf = &mut self.buf;
            if self.group.family == Family::UnitaryTilde {
                for core in 0..=s {
                    let shift = (s - core) as i64;
                    for_each_in_stratum(&self.group, core, &mut |mu| {
                        buf.push_back(DominantWeight::from_parts_unchecked(
                            mu.iter().map(|x| x + shift).collect(),
                        ));
                        if shift != 0 {
                            buf.push_back(DominantWeight::from_parts_unchecked(
                                mu.iter().map(|x| x - shift).collect(),
                            ));
                        }
                    });
                }
            } else {
                for_each_in_stratum(&self.group, s, &mut |p| {
                    buf.push_back(DominantWeight::from_parts_unchecked(p.to_vec()))
                });
            }
        }
    }
}

pub fn enumerate_dominant(group: &GroupDescriptor, max_size: u64) -> WeightStream {
    WeightStream {
        group: *group,
        max_size,
        next_stratum: 0,
        buf: VecDeque::new(),
    }
}
