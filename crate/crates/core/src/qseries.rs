//! Scalar q-series and special functions with certified truncation errors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::Family;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn q_of_area(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::arg(format!("area must be positive and finite, got {t}")));
    }
    Ok((-t / 2.0).exp())
}

fn check_q(q: f64, tol: f64) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::arg(format!("q must lie in [0, 1), got {q}")));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    Ok(())
}

/// `sum over n in Z of q^(n^2)`.
pub fn jacobi_theta(q: f64, tol: f64) -> Result<SeriesValue> {
    check_q(q, tol)?;
    let mut value = 1.0;
    let mut n: u64 = 0;
    loop {
        // tail after index n: sum_{k>n} 2 q^{k^2} <= 2 q^{(n+1)^2} / (1 - q^{2n+3})
        let next = q.powf(((n + 1) * (n + 1)) as f64);
        let tail = 2.0 * next / (1.0 - q.powf((2 * n + 3) as f64));
        if tail <= tol || next == 0.0 {
            return Ok(SeriesValue {
                value,
                tail_bound: tail,
            });
        }
        n += 1;
        value += 2.0 * next;
    }
}

/// `prod over m >= 1 of (1 - q^m)`.
pub fn euler_phi(q: f64, tol: f64) -> Result<SeriesValue> {
    check_q(q, tol)?;
    let mut value = 1.0;
    let mut qm = 1.0;
    loop {
        // the remaining factors lie in [1 - q^{m+1}/(1-q), 1]
        let eps = qm * q / (1.0 - q);
        if value * eps <= tol {
            return Ok(SeriesValue {
                value,
                tail_bound: value * eps,
            });
        }
        qm *= q;
        value *= 1.0 - qm;
    }
}

/// `sum_{m>=0} (-1)^m / (m! (m+1)!) (x/2)^(2m)`, equal to 1 at the origin.
///
/// This is `2 J_1(x) / x` in the usual normalisation of the Bessel function.
pub fn bessel_j1_paper(x: f64, tol: f64) -> Result<SeriesValue> {
    if !x.is_finite() {
        return Err(Error::arg("argument must be finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let y = x * x / 4.0;
    let mut term: f64 = 1.0;
    let mut value = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut m = 0u64;
    loop {
        value += term;
        max_abs = max_abs.max(term.abs());
        let next = -term * y / (((m + 1) * (m + 2)) as f64);
        // once terms decrease the alternating-series remainder is below |next|
        if next.abs() <= term.abs() && next.abs() <= tol {
            let rounding = max_abs * f64::EPSILON * (m + 1) as f64;
            return Ok(SeriesValue {
                value,
                tail_bound: next.abs() + rounding,
            });
        }
        term = next;
        m += 1;
        if m > 10_000 {
            return Err(Error::Numeric(format!("Bessel series did not converge at x = {x}")));
        }
    }
}

/// Large-rank limit of the genus-`g` partition function at area `t`.
pub fn limit_table(family: Family, g: u32, t: f64, tol: f64) -> Result<f64> {
    if g == 0 {
        return Err(Error::arg("the sphere has no finite large-rank limit"));
    }
    let q = q_of_area(t)?;
    let theta = jacobi_theta(q, tol / 8.0)?.value;
    let phi = euler_phi(q, tol / 8.0)?.value;
    Ok(match (family, g) {
        (Family::UnitaryTilde, 1) => theta / (phi * phi),
        (Family::SpecialUnitary, 1) => 1.0 / (phi * phi),
        (Family::OddOrthogonal | Family::Symplectic, 1) => 1.0 / phi,
        (Family::EvenOrthogonal, 1) => (1.0 + q) / ((1.0 - q) * (1.0 - q) * phi),
        (Family::UnitaryTilde, _) => theta,
        _ => 1.0,
    })
}

/// Upper bounds on the partition numbers `p(0..=max)`.
///
/// Values come from Euler's pentagonal recurrence in floating point, inflated
/// by a relative margin that dominates the accumulated rounding.
pub fn partition_counts(max: usize) -> Vec<f64> {
    let mut p = vec![0.0f64; max + 1];
    p[0] = 1.0;
    for n in 1..=max {
        let mut acc = 0.0;
        let mut k: i64 = 1;
        loop {
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > n {
                break;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * p[n - g1];
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= n {
                acc += sign * p[n - g2];
            }
            k += 1;
        }
        p[n] = acc;
    }
    p.iter().map(|x| x * (1.0 + 1e-9)).collect()
}

/// `table[s][l]` bounds the number of partitions of `s` with exactly `l` parts.
pub fn partition_counts_by_length(max: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0f64; max + 1]; max + 1];
    t[0][0] = 1.0;
    for s in 1..=max {
        for l in 1..=s {
            t[s][l] = t[s - 1][l - 1] + t[s - l][l];
        }
    }
    for row in t.iter_mut() {
        for x in row.iter_mut() {
            *x *= 1.0 + 1e-12;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn theta_and_phi_reference_values() {
        assert_eq!(jacobi_theta(0.0, 1e-15).unwrap().value, 1.0);
        let th = jacobi_theta(0.1, 1e-14).unwrap();
        assert_abs_diff_eq!(th.value, 1.200200002, epsilon = 1e-12);
        assert_eq!(euler_phi(0.0, 1e-15).unwrap().value, 1.0);
        assert_abs_diff_eq!(euler_phi(0.1, 1e-14).unwrap().value, 0.8900100999, epsilon = 1e-10);
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_j1_paper(0.0, 1e-15).unwrap().value, 1.0);
        assert_abs_diff_eq!(bessel_j1_paper(2.0, 1e-14).unwrap().value, 0.576724807756873, epsilon = 1e-12);
    }

    #[test]
    fn limits() {
        assert_eq!(limit_table(Family::Symplectic, 3, 5.0, 1e-12).unwrap(), 1.0);
        assert_abs_diff_eq!(limit_table(Family::UnitaryTilde, 2, 200.0, 1e-12).unwrap(), 1.0, epsilon = 1e-12);
        assert!(limit_table(Family::Symplectic, 0, 1.0, 1e-9).is_err());
        assert!(q_of_area(0.0).is_err());
    }

    #[test]
    fn counts() {
        let p = partition_counts(10);
        assert_abs_diff_eq!(p[10], 42.0, epsilon = 1e-6);
        let t = partition_counts_by_length(10);
        let total: f64 = t[10].iter().sum();
        assert_abs_diff_eq!(total, 42.0, epsilon = 1e-6);
        assert_abs_diff_eq!(t[6][2], 3.0, epsilon = 1e-9);
    }
}
