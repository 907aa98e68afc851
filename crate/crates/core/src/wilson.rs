//! Wilson-loop moments: large-N master-field values on the plane and the
//! weak-phase sphere, torus moments through the Pieri rule, and densities of
//! loop holonomies on closed surfaces.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charcalc::{class_sum, pieri_unchecked, ClassTerm, ConjugacyClass};
use crate::error::{Error, Result};
use crate::partition::{check_area, partition_boundary, partition_function, shift_orbit, unitary_casimir_parts};
use crate::qseries::{bessel_j1_paper, SeriesValue};
use crate::tails::TailBounder;
use crate::weights::{casimir_num_den, for_each_in_stratum, Family, GroupDescriptor};
use crate::{TailMode, TruncationPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    /// Simple loop in the plane around area `t`; areas `[t]`.
    PlaneSimplePower,
    /// Simple loop on the sphere splitting it into `t` and `T - t`; areas `[t, T]`.
    SphereSimplePower,
    /// Power of a non-separating simple loop on the torus; areas `[T]`.
    TorusNonseparatingPower,
    /// Commutator of the two generators of the one-face torus; areas `[T]`.
    TorusCommutator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub kind: LoopKind,
    pub power: i64,
    pub areas: Vec<f64>,
}

impl LoopSpec {
    pub fn new(kind: LoopKind, power: i64, areas: Vec<f64>) -> Result<Self> {
        if power == 0 {
            return Err(Error::arg("loop power must be non-zero"));
        }
        let want = if kind == LoopKind::SphereSimplePower { 2 } else { 1 };
        if areas.len() != want {
            return Err(Error::arg(format!("{kind:?} takes {want} area(s), got {}", areas.len())));
        }
        if areas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::arg("areas must be finite and non-negative"));
        }
        if kind == LoopKind::SphereSimplePower {
            check_weak_sphere(areas[0], areas[1])?;
        }
        Ok(LoopSpec { kind, power, areas })
    }

    /// Large-N limit of `E[tr(h^power)]` for the planar and spherical kinds.
    pub fn master_field(&self, tol: f64) -> Result<f64> {
        match self.kind {
            LoopKind::PlaneSimplePower => mf_plane_power(self.areas[0], self.power),
            LoopKind::SphereSimplePower => Ok(mf_sphere_power(self.areas[0], self.areas[1], self.power, tol)?.value),
            // simple closed loops on the torus have vanishing or trivial limits
            // depending on their class; neither is a one-parameter formula
            _ => Err(Error::arg("no closed-form master field for torus loops")),
        }
    }
}

fn check_weak_sphere(t: f64, total: f64) -> Result<()> {
    if !(total > 0.0 && total <= PI * PI) {
        return Err(Error::arg(format!(
            "sphere area must lie in (0, pi^2] (weak phase), got {total}"
        )));
    }
    if !(0.0..=total).contains(&t) {
        return Err(Error::arg(format!("need 0 <= t <= T, got t = {t}, T = {total}")));
    }
    Ok(())
}

/// `mu_t(n) = e^{-nt/2} / n * sum_{m<n} (-nt)^m / m! * C(n, m+1)`.
///
/// The alternating sum is evaluated in exact rational arithmetic on the binary
/// value of `t`; negative `n` gives the same (real) value as `|n|`.
pub fn mf_plane_power(t: f64, n: i64) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("the power n must be non-zero"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::arg(format!("area must be finite and non-negative, got {t}")));
    }
    let n = n.unsigned_abs();
    let x = BigRational::from_float(t).unwrap() * BigRational::from_integer(BigInt::from(n));
    let mut sum = BigRational::zero();
    // term_m = (-x)^m / m!, binomial C(n, m+1)
    let mut power = BigRational::one();
    let mut binom = BigInt::from(n);
    for m in 0..n {
        sum += &power * BigRational::from_integer(binom.clone());
        power = -power * &x / BigRational::from_integer(BigInt::from(m + 1));
        binom = binom * BigInt::from(n - m - 1) / BigInt::from(m + 2);
    }
    let s = sum.to_f64().unwrap_or(f64::NAN);
    let value = s * (-(n as f64) * t / 2.0).exp() / n as f64;
    if !value.is_finite() {
        return Err(Error::Numeric(format!("mu_t(n) overflows at t = {t}, n = {n}")));
    }
    Ok(value)
}

/// `mu_{t,T}(n) = J(2 n sigma)` with `sigma^2 = t (T - t) / T`, for `T <= pi^2`.
pub fn mf_sphere_power(t: f64, total: f64, n: i64, tol: f64) -> Result<SeriesValue> {
    if n == 0 {
        return Err(Error::arg("the power n must be non-zero"));
    }
    check_weak_sphere(t, total)?;
    let sigma = (t * (total - t) / total).sqrt();
    bessel_j1_paper(2.0 * n.unsigned_abs() as f64 * sigma, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusMoments {
    /// `E[W]` with `W = tr(h^k) / n` for a non-separating simple loop.
    pub expectation: f64,
    /// `E[|W|^2]`.
    pub second_moment: f64,
    /// Error bound shared by both values.
    pub tail_bound: f64,
    /// The bound `1 / n` both moments must respect.
    pub bound: f64,
}

/// Moments of the Wilson loop of `h^k` for a non-separating simple loop `h`
/// on the torus of area `T`.
///
/// Unitary families have expectation exactly 0 by centre symmetry; their
/// second moment uses the unitary extension of the Pieri rule.
pub fn torus_moments(group: &GroupDescriptor, t: f64, k: i64, policy: &TruncationPolicy) -> Result<TorusMoments> {
    check_area(t)?;
    if k == 0 {
        return Err(Error::arg("the power k must be non-zero"));
    }
    let policy = TruncationPolicy {
        tail_mode: TailMode::RigorousG1,
        ..*policy
    };
    let z = partition_function(group, 1, t, &policy)?;
    let n = group.matrix_size as f64;
    let bounder = TailBounder::new(group, t, 0.0);
    let m = (0..=policy.max_size as usize)
        .find(|&m| n * bounder.tail(m) <= policy.tol / 2.0)
        .ok_or_else(|| Error::Numeric(format!("torus moment tail for {group} does not reach {:.1e}", policy.tol)))?;
    let rho2 = group.rho_doubled();
    let unitary = group.family.is_unitary();
    let per: Vec<(f64, f64, f64)> = (0..=m)
        .into_par_iter()
        .map(|s| {
            let (mut diag, mut squares, mut err) = (0.0, 0.0, 0.0);
            for_each_in_stratum(group, s, &mut |p| {
                let w = if group.family == Family::UnitaryTilde {
                    let (ca, delta) = unitary_casimir_parts(p, &rho2);
                    let (orbit, e) = shift_orbit(t, delta);
                    err += (-t * ca / 2.0).exp() * e;
                    (-t * ca / 2.0).exp() * orbit
                } else {
                    let (num, den) = casimir_num_den(group, p, &rho2);
                    (-t * (num as f64 / den as f64) / 2.0).exp()
                };
                let e = pieri_unchecked(group, p, k);
                if !unitary {
                    diag += w * e.terms.get(&crate::DominantWeight::from_parts_unchecked(p.to_vec())).copied().unwrap_or(0) as f64;
                }
                squares += w * e.terms.values().map(|c| (c * c) as f64).sum::<f64>();
            });
            (diag, squares, err)
        })
        .collect();
    let diag: f64 = per.iter().map(|x| x.0).sum();
    let squares: f64 = per.iter().map(|x| x.1).sum();
    let orbit_err: f64 = per.iter().map(|x| x.2).sum();
    let tail = bounder.tail(m);
    let expectation = diag / (n * z.value);
    let second_moment = squares / (n * n * z.value);
    // numerators carry tails <= tail and n (tail + orbit_err); Z carries z.tail_bound
    let zlow = z.value - z.tail_bound;
    let err_e = (tail + expectation.abs() * n * z.tail_bound) / (n * zlow);
    let err_v = (n * (tail + orbit_err) + second_moment * n * n * z.tail_bound) / (n * n * zlow);
    let tail_bound = err_e.max(err_v) + 64.0 * f64::EPSILON;
    let bound = 1.0 / n;
    if expectation.abs() > bound + tail_bound || second_moment > bound + tail_bound {
        return Err(Error::Numeric(format!(
            "torus moments for {group} violate the 1/n bound: E = {expectation}, E|W|^2 = {second_moment}"
        )));
    }
    Ok(TorusMoments {
        expectation,
        second_moment,
        tail_bound,
        bound,
    })
}

/// Un-normalised density of the holonomy of a non-separating simple loop on a
/// closed surface of genus `g`: `sum d^(2-2g) |chi_lambda(h)|^2 exp(-T c / 2)`.
/// Divide by `Z_{g,T}` for a probability density against Haar measure.
pub fn nonsep_density(group: &GroupDescriptor, g: u32, t: f64, cls: &ConjugacyClass, tol: f64) -> Result<SeriesValue> {
    if g == 0 {
        return Err(Error::arg("a non-separating loop needs g >= 1"));
    }
    let v = class_sum(group, t, cls, tol, 2.0 - 2.0 * g as f64, ClassTerm::SquaredModulus)?;
    Ok(SeriesValue {
        value: v.value.re,
        tail_bound: v.tail_bound,
    })
}

/// Normalised density of the holonomy of a separating simple loop cutting the
/// surface into pieces of genus `g1`, `g2` and areas `t1`, `t2`.
pub fn sep_density(
    group: &GroupDescriptor,
    g1: u32,
    t1: f64,
    g2: u32,
    t2: f64,
    cls: &ConjugacyClass,
    tol: f64,
) -> Result<SeriesValue> {
    let a = partition_boundary(group, g1, t1, cls, tol / 4.0)?;
    let b = partition_boundary(group, g2, t2, &cls.inverse(), tol / 4.0)?;
    let g = g1 + g2;
    let z = partition_function(group, g, t1 + t2, &TruncationPolicy::for_genus(g, tol / 4.0))?;
    let (na, nb) = (a.value.norm(), b.value.norm());
    let num = (a.value * b.value).re;
    let num_err = na * b.tail_bound + nb * a.tail_bound + a.tail_bound * b.tail_bound;
    let zlow = z.value - z.tail_bound;
    Ok(SeriesValue {
        value: num / z.value,
        tail_bound: num_err / zlow + num.abs() * z.tail_bound / (z.value * zlow),
    })
}

/// `Z_{g,u} / Z_{g,T}`: the sup-norm bound on the density of the Yang-Mills
/// measure restricted to a disc of area `T - u`.
pub fn disc_density_ratio(group: &GroupDescriptor, g: u32, t: f64, u: f64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    check_area(t)?;
    if !(u > 0.0 && u < t) {
        return Err(Error::arg(format!("need 0 < u < T, got u = {u}, T = {t}")));
    }
    if g == 0 {
        return Err(Error::arg("the disc density bound is stated for g >= 1"));
    }
    let a = partition_function(group, g, u, policy)?;
    let b = partition_function(group, g, t, policy)?;
    let blow = b.value - b.tail_bound;
    Ok(SeriesValue {
        value: a.value / b.value,
        tail_bound: a.tail_bound / blow + a.value * b.tail_bound / (b.value * blow),
    })
}
