//! Certified upper bounds on tails of heat-kernel character sums.
//!
//! For a group of rank `r` the quantity bounded is
//! `sum over |lambda| > m of exp(-t c_lambda / 2) d_lambda^p`
//! with `p >= 0`. Casimirs are bounded below per (size, length) stratum,
//! strata are counted exactly from partition tables, and `log d` is bounded
//! by a concave envelope of the size. Past the counting table a concave log-envelope with
//! the Hardy-Ramanujan style bound `p(s) <= exp(pi sqrt(2s/3))` takes over.

use std::f64::consts::PI;

use crate::qseries::partition_counts_by_length;
use crate::weights::{Family, GroupDescriptor};

/// Exact counting tables reach this size.
const TABLE: usize = 320;

pub(crate) struct TailBounder {
    /// `suffix[m]` bounds the tail over sizes `> m` for `m < suffix.len()`.
    suffix: Vec<f64>,
}

impl TailBounder {
    pub(crate) fn new(group: &GroupDescriptor, t: f64, p: f64) -> Self {
        let env = DimEnvelope::new(group);
        let growth = |s: f64| if p > 0.0 { p * env.eval(s) } else { 0.0 };
        let strata = if group.family.is_unitary() {
            unitary_strata(group, t, &growth)
        } else {
            orthosymplectic_strata(group, t, &growth)
        };
        let mut suffix = vec![0.0; strata.terms.len()];
        let mut acc = strata.remainder;
        for s in (0..strata.terms.len()).rev() {
            suffix[s] = acc;
            acc += strata.terms[s];
        }
        TailBounder { suffix }
    }

    /// Bound on the tail over weights of size `> m`.
    pub(crate) fn tail(&self, m: usize) -> f64 {
        self.suffix.get(m).copied().unwrap_or_else(|| *self.suffix.last().unwrap())
    }
}

struct Strata {
    /// `terms[s]` bounds the contribution of size exactly `s`.
    terms: Vec<f64>,
    /// Bound on everything past `terms`.
    remainder: f64,
}

/// Upper envelope of `log d_lambda` as a function of the size `s`: the
/// smaller of the linear bound and `sum_alpha log(1 + w_alpha s)` with
/// `w_alpha s` bounding `<lambda, alpha> / <rho, alpha>`.
struct DimEnvelope {
    slope: f64,
    weights: Vec<f64>,
}

impl DimEnvelope {
    fn new(group: &GroupDescriptor) -> Self {
        let rho2 = group.rho_doubled();
        let c = rho2.len();
        let mut weights = Vec::new();
        for i in 0..c {
            for j in i + 1..c {
                weights.push(2.0 / (rho2[i] - rho2[j]) as f64);
                if !group.family.is_unitary() {
                    let w = 2.0 / (rho2[i] + rho2[j]) as f64;
                    if w.is_finite() {
                        weights.push(w);
                    }
                }
            }
            if matches!(group.family, Family::OddOrthogonal | Family::Symplectic) {
                weights.push(2.0 / rho2[i] as f64);
            }
        }
        DimEnvelope {
            slope: log_dim_slope(group),
            weights,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        let poly: f64 = self.weights.iter().map(|w| (w * s).ln_1p()).sum();
        poly.min(self.slope * s)
    }
}

/// `max_i sum over positive roots alpha of |alpha_i| / <rho, alpha>`, so that
/// `log d_lambda <= slope * (sum |lambda_i|)` in the size used for strata.
pub(crate) fn log_dim_slope(group: &GroupDescriptor) -> f64 {
    let rho2 = group.rho_doubled();
    let c = rho2.len();
    let mut per = vec![0.0f64; c];
    for i in 0..c {
        for j in i + 1..c {
            let w = 2.0 / (rho2[i] - rho2[j]) as f64;
            per[i] += w;
            per[j] += w;
            if !group.family.is_unitary() {
                let w = 2.0 / (rho2[i] + rho2[j]) as f64;
                if w.is_finite() {
                    per[i] += w;
                    per[j] += w;
                }
            }
        }
        if matches!(group.family, Family::OddOrthogonal | Family::Symplectic) {
            per[i] += 2.0 / rho2[i] as f64;
        }
    }
    per.into_iter().fold(0.0, f64::max)
}

/// Sum of `exp(h(s))` for `s >= start` where `h` is concave; explicit until
/// the slope drops below `-ln 2`, then a geometric bound.
fn concave_tail(start: usize, h: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut s = start;
    loop {
        let x = s as f64;
        let hs = h(x);
        if h(x + 1.0) - hs <= -std::f64::consts::LN_2 {
            return acc + 2.0 * hs.exp();
        }
        acc += hs.exp();
        s += 1;
        if s > start + 50_000_000 {
            return f64::INFINITY;
        }
    }
}

fn orthosymplectic_strata(group: &GroupDescriptor, t: f64, growth: &dyn Fn(f64) -> f64) -> Strata {
    let r = group.rank;
    let n = group.matrix_size as f64;
    let k = match group.family {
        Family::OddOrthogonal => 2 * r + 1,
        Family::Symplectic => 2 * r + 2,
        _ => 2 * r,
    } as f64;
    let exponent = |s: f64, l: f64| -t * (s * s / l + s * (k - l - 1.0)) / (2.0 * n) + growth(s);
    let counts = partition_counts_by_length(TABLE);
    let mut terms = vec![0.0; TABLE + 1];
    terms[0] = 1.0;
    for s in 1..=TABLE {
        for l in 1..=s.min(r) {
            let mult = if group.family == Family::EvenOrthogonal && l == r { 2.0 } else { 1.0 };
            terms[s] += mult * counts[s][l] * exponent(s as f64, l as f64).exp();
        }
    }
    // past the table every stratum has length <= r and the exponent is
    // decreasing in the length, so length r is the worst case
    let rf = r as f64;
    let remainder = concave_tail(TABLE + 1, |s| {
        (2.0f64).ln() + PI * (2.0 * s / 3.0).sqrt() + exponent(s, rf.min(s))
    });
    Strata { terms, remainder }
}

fn unitary_strata(group: &GroupDescriptor, t: f64, growth: &dyn Fn(f64) -> f64) -> Strata {
    let nn = group.coords();
    let nf = nn as f64;
    let la = nn / 2;
    let lb = (nn - 1) / 2;
    let f = |a: f64, l: f64| a * (1.0 - l / nf) + a * a / (l * nf) - a * a / (nf * nf);
    let counts = partition_counts_by_length(TABLE);
    let side = |max_len: usize| -> Vec<f64> {
        let mut g = vec![0.0; TABLE + 1];
        g[0] = 1.0;
        for a in 1..=TABLE {
            for l in 1..=a.min(max_len) {
                g[a] += counts[a][l] * (-t * f(a as f64, l as f64) / 2.0).exp();
            }
        }
        g
    };
    let ga = side(la);
    let gb = side(lb);
    let mut terms = vec![0.0; TABLE + 1];
    for s in 0..=TABLE {
        for a in 0..=s {
            terms[s] += ga[a] * gb[s - a];
        }
        terms[s] *= growth(s as f64).exp();
    }
    if group.family == Family::UnitaryTilde {
        // the shift orbit contributes at most theta(q) per quotient class
        let theta = shift_orbit_sup(t);
        terms.iter_mut().for_each(|x| *x *= theta);
    }
    // pairs (a, b) with a + b = s: at most (s+1) exp(pi sqrt(4s/3)) of them,
    // with f(a) + f(b) >= s/2 + s^2 / (2 N^2)
    let theta = if group.family == Family::UnitaryTilde { shift_orbit_sup(t) } else { 1.0 };
    let remainder = if la == 0 {
        0.0
    } else {
        concave_tail(TABLE + 1, |s| {
            theta.ln() + (s + 1.0).ln() + PI * (4.0 * s / 3.0).sqrt() - t * (s / 2.0 + s * s / (2.0 * nf * nf)) / 2.0
                + growth(s)
        })
    };
    Strata { terms, remainder }
}

/// `sup over delta of sum_n exp(-t (n + delta)^2 / 2)`, attained at `delta = 0`.
pub(crate) fn shift_orbit_sup(t: f64) -> f64 {
    let q = (-t / 2.0).exp();
    let mut acc = 1.0;
    let mut n = 1.0f64;
    loop {
        let term = q.powf(n * n);
        acc += 2.0 * term;
        if term < 1e-18 * acc {
            // geometric remainder, generous
            return acc * (1.0 + 1e-15) + 4.0 * term;
        }
        n += 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{casimir_fast, enumerate_dominant, log_dim_fast, make_group, weight_size};

    fn quotient_size(g: &GroupDescriptor, parts: &[i64]) -> usize {
        if g.family == Family::UnitaryTilde {
            let n = parts[parts.len() / 2];
            parts.iter().map(|x| (x - n).unsigned_abs() as usize).sum()
        } else {
            weight_size(g, parts) as usize
        }
    }

    /// Brute-force the tail over sizes in `(m, cap]` and compare with the bound.
    fn check(family: Family, rank: usize, t: f64, p: f64, m: usize, cap: u64) {
        let g = make_group(family, rank).unwrap();
        let rho2 = g.rho_doubled();
        let bounder = TailBounder::new(&g, t, p);
        let mut brute = 0.0;
        for w in enumerate_dominant(&g, cap) {
            if quotient_size(&g, w.parts()) > m {
                let c = casimir_fast(&g, w.parts(), &rho2);
                brute += (-t * c / 2.0 + p * log_dim_fast(&g, w.parts(), &rho2)).exp();
            }
        }
        let bound = bounder.tail(m);
        assert!(brute <= bound, "{g} t={t} p={p} m={m}: brute {brute} > bound {bound}");
    }

    #[test]
    fn bounds_dominate_brute_force() {
        for fam in Family::ALL {
            for rank in [1, 2, 3, 5] {
                check(fam, rank, 1.0, 0.0, 3, 12);
                check(fam, rank, 4.0, 0.0, 1, 10);
                check(fam, rank, 2.0, 2.0, 4, 10);
                check(fam, rank, 2.0, 4.0, 2, 10);
            }
        }
    }

    #[test]
    fn slope_controls_dimension() {
        for fam in Family::ALL {
            let g = make_group(fam, 4).unwrap();
            let rho2 = g.rho_doubled();
            let k = log_dim_slope(&g);
            let env = DimEnvelope::new(&g);
            for w in enumerate_dominant(&g, 8) {
                let size = if fam.is_unitary() {
                    weight_size(&g, w.parts()) as f64
                } else {
                    w.parts().iter().map(|x| x.abs() as f64).sum()
                };
                let ld = log_dim_fast(&g, w.parts(), &rho2);
                assert!(ld <= k * size + 1e-9);
                assert!(ld <= env.eval(size) + 1e-9);
            }
        }
    }
}
