//! Shared workloads for the criterion benches.

use ym2d::charcalc::ConjugacyClass;
use ym2d::*;

pub fn group(family: Family, rank: usize) -> GroupDescriptor {
    make_group(family, rank).expect("valid group")
}

pub fn partition(g: &GroupDescriptor, genus: u32, t: f64) -> f64 {
    let pol = TruncationPolicy::for_genus(genus, 1e-10);
    partition_function(g, genus, t, &pol).expect("partition sum").value
}

/// Every Pieri expansion by `tr g^k` over the weights of size at most `max`.
pub fn pieri_sweep(g: &GroupDescriptor, max: u64, k: i64) -> usize {
    enumerate_dominant(g, max)
        .map(|w| pieri(g, &w, k, false).expect("pieri").terms.len())
        .sum()
}

/// Heat kernel at a fixed generic class.
pub fn heat_kernel(g: &GroupDescriptor, t: f64) -> f64 {
    let n = ConjugacyClass::identity(g).eigenangles.len();
    let mut angles: Vec<f64> = (0..n).map(|i| 0.3 + 0.7 * i as f64).collect();
    if g.family == Family::SpecialUnitary {
        let s: f64 = angles[..n - 1].iter().sum();
        angles[n - 1] = -s;
    }
    let cls = ConjugacyClass::new(g, angles).expect("class");
    heat_kernel_eval(g, t, &cls, 1e-10).expect("heat kernel").value
}
