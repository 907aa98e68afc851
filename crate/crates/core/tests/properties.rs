use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;
use ym2d::charcalc::ConjugacyClass;
use ym2d::maps::{FaceDocument, MapDocument};
use ym2d::sampler::haar_sample;
use ym2d::weights::{is_dominant, weight_size};
use ym2d::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn orthosymplectic() -> impl Strategy<Value = Family> {
    prop::sample::select(vec![Family::OddOrthogonal, Family::Symplectic, Family::EvenOrthogonal])
}

/// A group of rank in `ranks` and one of its weights of size at most `max`.
fn weight(
    fam: impl Strategy<Value = Family>,
    ranks: std::ops::RangeInclusive<usize>,
    max: u64,
) -> impl Strategy<Value = (GroupDescriptor, DominantWeight)> {
    (fam, ranks, any::<prop::sample::Index>()).prop_map(move |(f, r, idx)| {
        let g = make_group(f, r).unwrap();
        let all: Vec<DominantWeight> = enumerate_dominant(&g, max).collect();
        (g, idx.get(&all).clone())
    })
}

fn random_class(g: &GroupDescriptor, angles: &[f64]) -> ConjugacyClass {
    let n = ConjugacyClass::identity(g).eigenangles.len();
    let mut th: Vec<f64> = angles.iter().cycle().take(n).copied().collect();
    if g.family == Family::SpecialUnitary {
        let s: f64 = th[..n - 1].iter().sum();
        th[n - 1] = -s;
    }
    ConjugacyClass::new(g, th).unwrap()
}

fn angles() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.1f64..3.1, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dimensions_are_positive_and_at_least_rank((g, w) in weight(family(), 1..=12, 6)) {
        let d = weyl_dim(&g, &w).unwrap();
        prop_assert!(d >= BigInt::from(1));
        // powers of the determinant, and every character of SO(2), are one-dimensional
        let abelian = w.parts().windows(2).all(|p| p[0] == p[1]) && g.family == Family::UnitaryTilde
            || g.family == Family::EvenOrthogonal && g.rank == 1;
        if !w.is_trivial() && !abelian {
            prop_assert!(d >= BigInt::from(g.rank));
        }
    }

    #[test]
    fn casimir_positive_and_monotone_in_first_row((g, w) in weight(family(), 1..=6, 6)) {
        let c = casimir(&g, &w).unwrap();
        if w.is_trivial() {
            prop_assert_eq!(c, 0.0);
        } else {
            prop_assert!(c > 0.0);
        }
        let mut up = w.parts().to_vec();
        up[0] += 1;
        // for U(r) and SO(2) a negative first row moves towards the origin
        if w.parts()[0] >= 0 && is_dominant(&g, &up) {
            let c2 = casimir(&g, &DominantWeight::new(&g, up).unwrap()).unwrap();
            prop_assert!(c2 > c);
        }
    }

    #[test]
    fn enumeration_matches_box_filter(f in family(), r in 1usize..=3, m in 0u64..=4) {
        let g = make_group(f, r).unwrap();
        let coords = g.rank;
        let side = 2 * m as i64;
        let mut count = 0usize;
        let mut parts = vec![-side; coords];
        loop {
            if is_dominant(&g, &parts) && weight_size(&g, &parts) <= m {
                count += 1;
            }
            let mut i = 0;
            while i < coords && parts[i] == side {
                parts[i] = -side;
                i += 1;
            }
            if i == coords {
                break;
            }
            parts[i] += 1;
        }
        prop_assert_eq!(enumerate_dominant(&g, m).count(), count);
    }

    #[test]
    fn theta_increasing_phi_decreasing(a in 0.0f64..0.95, b in 0.0f64..0.95) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let th = |q| jacobi_theta(q, 1e-13).unwrap().value;
        let ph = |q| euler_phi(q, 1e-13).unwrap().value;
        prop_assert!(th(hi) > th(lo));
        prop_assert!(ph(hi) < ph(lo));
    }

    #[test]
    fn bessel_matches_term_recurrence(x in -30.0f64..30.0) {
        let v = bessel_j1_paper(x, 1e-12).unwrap();
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 0..200 {
            term *= -x * x / (4.0 * (m + 1) as f64 * (m + 2) as f64);
            sum += term;
        }
        // cancellation in the alternating sum costs up to exp(|x|) ulps
        let slack = v.tail_bound + 1e-15 * x.abs().exp();
        prop_assert!((v.value - sum).abs() <= slack, "{} vs {}", v.value, sum);
    }

    #[test]
    fn pieri_coefficients_bounded((g, w) in weight(orthosymplectic(), 1..=5, 5), k in -5i64..=5) {
        prop_assume!(k != 0);
        let e = pieri(&g, &w, k, false).unwrap();
        prop_assert!(e.terms.values().all(|c| c.abs() <= 1));
        prop_assert!(e.l1_norm() <= g.matrix_size as i64);
        let dim: BigInt = e.terms.iter().map(|(mu, c)| weyl_dim(&g, mu).unwrap() * BigInt::from(*c)).sum();
        prop_assert_eq!(dim, weyl_dim(&g, &w).unwrap() * BigInt::from(g.matrix_size));
    }

    #[test]
    fn character_at_identity_is_dimension((g, w) in weight(family(), 1..=5, 6)) {
        let v = char_eval(&g, &w, &ConjugacyClass::identity(&g)).unwrap();
        let d: f64 = weyl_dim(&g, &w).unwrap().to_string().parse().unwrap();
        prop_assert!((v.value - Complex64::from(d)).norm() <= v.error.max(1e-12 * d));
    }

    #[test]
    fn heat_kernel_peaks_at_identity(f in family(), r in 1usize..=3, t in 0.3f64..3.0, th in angles()) {
        let g = make_group(f, r).unwrap();
        let at = heat_kernel_eval(&g, t, &random_class(&g, &th), 1e-10).unwrap();
        let top = heat_kernel_eval(&g, t, &ConjugacyClass::identity(&g), 1e-10).unwrap();
        prop_assert!(at.value <= top.value + at.tail_bound + top.tail_bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_decreasing_in_area_and_genus(f in family(), r in 1usize..=6, t in 0.3f64..4.0, dt in 0.05f64..1.0) {
        let g = make_group(f, r).unwrap();
        for genus in 1..=3u32 {
            let pol = TruncationPolicy::for_genus(genus, 1e-10);
            let a = partition_function(&g, genus, t, &pol).unwrap();
            let b = partition_function(&g, genus, t + dt, &pol).unwrap();
            prop_assert!(b.value < a.value + a.tail_bound + b.tail_bound);
            if genus > 1 {
                let lower = partition_function(&g, genus - 1, t, &TruncationPolicy::for_genus(genus - 1, 1e-10)).unwrap();
                if f != Family::UnitaryTilde || r > 1 {
                    prop_assert!(a.value < lower.value + a.tail_bound + lower.tail_bound);
                }
            }
        }
    }

    #[test]
    fn higher_genus_between_one_and_zeta(f in prop::sample::select(vec![Family::SpecialUnitary, Family::OddOrthogonal, Family::Symplectic, Family::EvenOrthogonal]), r in 1usize..=10, genus in 2u32..=3, t in 0.2f64..5.0) {
        // small areas at high rank need sizes beyond the enumeration cap
        let t = if r > 4 { t.max(2.0) } else { t };
        // D_1 diverges; for D_2 the size strata hold weights of dimension ~m, so the bound cannot close at s = 2
        prop_assume!(f != Family::EvenOrthogonal || r > 2);
        let g = make_group(f, r).unwrap();
        let z = partition_function(&g, genus, t, &TruncationPolicy::for_genus(genus, 1e-6)).unwrap();
        let zeta = witten_zeta(&g, (2 * genus - 2) as f64, &TruncationPolicy::for_genus(2, 1e-4)).unwrap();
        prop_assert!(z.value + z.tail_bound >= 1.0);
        prop_assert!(z.value - z.tail_bound <= zeta.value + zeta.tail_bound);
    }

    #[test]
    fn boundary_at_identity_is_closed(f in family(), r in 1usize..=3, genus in 1u32..=3, t in 0.3f64..3.0) {
        let g = make_group(f, r).unwrap();
        let zb = partition_boundary(&g, genus, t, &ConjugacyClass::identity(&g), 1e-10).unwrap();
        let z = partition_function(&g, genus, t, &TruncationPolicy::for_genus(genus, 1e-10)).unwrap();
        prop_assert!((zb.value.re - z.value).abs() <= zb.tail_bound + z.tail_bound + 1e-12 * z.value);
    }

    #[test]
    fn circle_group_gives_theta_at_every_genus(genus in 0u32..=4, t in 0.2f64..10.0) {
        let u1 = make_group(Family::UnitaryTilde, 1).unwrap();
        let z = partition_function(&u1, genus, t, &TruncationPolicy::for_genus(genus, 1e-12)).unwrap();
        let th = jacobi_theta(q_of_area(t).unwrap(), 1e-12).unwrap();
        prop_assert!((z.value - th.value).abs() <= z.tail_bound + th.tail_bound + 1e-14 * th.value);
    }

    #[test]
    fn torus_moments_respect_inverse_dimension(f in family(), r in 1usize..=3, t in 0.3f64..4.0, k in 1i64..=3) {
        let g = make_group(f, r).unwrap();
        let m = torus_moments(&g, t, k, &TruncationPolicy::for_genus(1, 1e-10)).unwrap();
        prop_assert!(m.expectation.abs() - m.tail_bound <= m.bound);
        prop_assert!(m.second_moment - m.tail_bound <= m.bound);
        prop_assert!(m.second_moment + m.tail_bound >= m.expectation * m.expectation);
    }

    #[test]
    fn plane_moments_lie_in_unit_interval(t in 0.0f64..12.0, n in 1i64..=30) {
        let v = mf_plane_power(t, n).unwrap();
        prop_assert!((-1.0..=1.0).contains(&v), "mu_{}({}) = {}", t, n, v);
    }

    #[test]
    fn nonseparating_density_at_identity(f in family(), r in 1usize..=3, genus in 1u32..=2, t in 0.5f64..3.0) {
        let g = make_group(f, r).unwrap();
        let phi = nonsep_density(&g, genus, t, &ConjugacyClass::identity(&g), 1e-10).unwrap();
        let z = partition_function(&g, genus - 1, t, &TruncationPolicy::for_genus(genus - 1, 1e-10)).unwrap();
        prop_assert!((phi.value - z.value).abs() <= 1e-8 * z.value.max(1.0));
    }

    #[test]
    fn disc_density_ratio_at_least_one(f in family(), r in 1usize..=4, genus in 1u32..=2, t in 0.5f64..4.0, frac in 0.05f64..0.95) {
        let g = make_group(f, r).unwrap();
        let v = disc_density_ratio(&g, genus, t, frac * t, &TruncationPolicy::for_genus(genus, 1e-10)).unwrap();
        prop_assert!(v.value + v.tail_bound >= 1.0);
    }
}

#[test]
fn phi_matches_partition_counting() {
    // p(n) by the coin-change recurrence, independent of the pentagonal one
    let n_max = 400;
    let mut p = vec![0.0f64; n_max + 1];
    p[0] = 1.0;
    for part in 1..=n_max {
        for s in part..=n_max {
            p[s] += p[s - part];
        }
    }
    for q in [0.1f64, 0.3, 0.5] {
        let direct: f64 = p.iter().enumerate().map(|(n, c)| c * q.powi(n as i32)).sum();
        let phi = euler_phi(q, 1e-13).unwrap();
        let inv = 1.0 / phi.value;
        let bound = phi.tail_bound * inv * inv * 1.01 + 1e-13 * inv;
        assert!((inv - direct).abs() <= bound, "q={q}: {inv} vs {direct}");
    }
}

#[test]
fn cross_limit_improves_with_refinement() {
    let (t, total) = (1.0f64, 4.0);
    let sigma2 = t * (total - t) / total;
    let err = |k: i64| {
        (1..=3)
            .map(|n| {
                let plane = mf_plane_power(sigma2 / (k * k) as f64, n * k).unwrap();
                (plane - mf_sphere_power(t, total, n, 1e-14).unwrap().value).abs()
            })
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [4, 16, 64].iter().map(|&k| err(k)).collect();
    assert!(e[1] < e[0] && e[2] < e[1], "{e:?}");
}

fn example_document() -> MapDocument {
    let face = |w: &[&str], area: f64| FaceDocument {
        word: w.iter().map(|s| s.to_string()).collect(),
        area,
    };
    MapDocument {
        edges: ["a", "b", "c", "d", "e", "f"].iter().map(|s| s.to_string()).collect(),
        vertices: 3,
        faces: vec![
            face(&["b'", "a'", "b", "a", "c", "d", "f", "c'"], 1.0),
            face(&["f'", "e", "d'"], 0.5),
            face(&["e'"], 0.5),
        ],
    }
}

fn rename(label: &str, names: &[String]) -> String {
    let (base, inv) = match label.strip_suffix('\'') {
        Some(b) => (b, "'"),
        None => (label, ""),
    };
    let i = (base.as_bytes()[0] - b'a') as usize;
    format!("{}{inv}", names[i])
}

fn invert(word: &[String]) -> Vec<String> {
    word.iter()
        .rev()
        .map(|l| match l.strip_suffix('\'') {
            Some(b) => b.to_string(),
            None => format!("{l}'"),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn genus_ignores_labels_and_rotation(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(), rot in prop::collection::vec(0usize..8, 3)) {
        let doc = example_document();
        let names: Vec<String> = perm.iter().map(|i| format!("x{i}")).collect();
        let mut edges = names.clone();
        edges.reverse();
        let faces = doc
            .faces
            .iter()
            .zip(&rot)
            .map(|(f, &k)| {
                let mut w: Vec<String> = f.word.iter().map(|l| rename(l, &names)).collect();
                let len = w.len();
                w.rotate_left(k % len);
                FaceDocument { word: w, area: f.area }
            })
            .collect();
        let relabelled = AreaWeightedMap::from_document(&MapDocument { edges, vertices: 3, faces }).unwrap();
        prop_assert_eq!(validate_and_genus(&relabelled).unwrap(), 1);
    }

    #[test]
    fn extraction_keeps_area(a2 in 0.1f64..3.0, a3 in 0.1f64..3.0) {
        let map = ym2d::maps::example_torus_map([1.0, a2, a3]);
        let lp = map.parse_loop(&["d", "e", "f"]).unwrap();
        let disc = extract_disc(&map, &[1, 2], &lp).unwrap();
        prop_assert!((disc.total_area() - (a2 + a3)).abs() < 1e-15);
        let lp = map.parse_loop(&["e"]).unwrap();
        let disc = extract_disc(&map, &[2], &lp).unwrap();
        prop_assert_eq!(disc.total_area(), a3);
    }

    #[test]
    fn ds_weight_ignores_rotation_and_reversal(seed in any::<u64>(), face in 0usize..3, rot in 0usize..8, fam in prop::sample::select(vec![Family::Symplectic, Family::UnitaryTilde])) {
        let g = make_group(fam, 1).unwrap();
        let doc = example_document();
        let map = AreaWeightedMap::from_document(&doc).unwrap();
        let mut rng = RngStream::new(seed, 0).rng();
        let cfg = ym2d::EdgeConfiguration { values: (0..6).map(|_| haar_sample(&g, &mut rng)).collect() };
        let base = ds_weight(&map, &g, &cfg, 1e-12).unwrap();
        let mut changed = doc.clone();
        let w = &mut changed.faces[face].word;
        let len = w.len();
        w.rotate_left(rot % len);
        let rotated = ds_weight(&AreaWeightedMap::from_document(&changed).unwrap(), &g, &cfg, 1e-12).unwrap();
        for f in &mut changed.faces {
            f.word = invert(&f.word);
        }
        let reversed = ds_weight(&AreaWeightedMap::from_document(&changed).unwrap(), &g, &cfg, 1e-12).unwrap();
        let tol = 1e-9 * base.value.abs().max(1.0) + base.tail_bound;
        prop_assert!((rotated.value - base.value).abs() <= tol);
        prop_assert!((reversed.value - base.value).abs() <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn samplers_are_deterministic(seed in any::<u64>(), stream in 0u64..1000) {
        let g = make_group(Family::SpecialUnitary, 2).unwrap();
        let r = LoopRecipe::SimplePower { t: 0.3, n: 2 };
        let s = RngStream::new(seed, stream);
        prop_assert_eq!(plane_wilson_mc(&r, &g, 8, 30, &s).unwrap(), plane_wilson_mc(&r, &g, 8, 30, &s).unwrap());
        let map = ym2d::maps::one_face_torus(1.0);
        let a = map.parse_loop(&["a"]).unwrap();
        let params = McmcParams { n_sweeps: 50, burn_in: 10, proposal_scale: 0.5 };
        let x = mcmc_ym(&map, &g, &params, &s, std::slice::from_ref(&a)).unwrap();
        let y = mcmc_ym(&map, &g, &params, &s, std::slice::from_ref(&a)).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn refinement_leaves_wilson_loops_unchanged() {
    // the one-face torus and the same torus with its face cut in two by `e`
    let c1 = make_group(Family::Symplectic, 1).unwrap();
    let coarse = ym2d::maps::one_face_torus(2.0);
    let fine = AreaWeightedMap::from_document(&MapDocument {
        edges: vec!["a".into(), "b".into(), "e".into()],
        vertices: 1,
        faces: vec![
            FaceDocument {
                word: vec!["b'".into(), "a'".into(), "e".into()],
                area: 0.7,
            },
            FaceDocument {
                word: vec!["e'".into(), "b".into(), "a".into()],
                area: 1.3,
            },
        ],
    })
    .unwrap();
    assert_eq!(validate_and_genus(&fine).unwrap(), 1);
    let params = McmcParams {
        n_sweeps: 20000,
        burn_in: 1000,
        proposal_scale: 1.0,
    };
    let run = |m: &AreaWeightedMap, stream| {
        let loops = [m.parse_loop(&["a", "a"]).unwrap(), m.parse_loop(&["a", "b"]).unwrap()];
        mcmc_ym(m, &c1, &params, &RngStream::new(99, stream), &loops).unwrap().estimates
    };
    let x = run(&coarse, 0);
    let y = run(&fine, 1);
    for (p, q) in x.iter().zip(&y) {
        let se = (p.stderr.powi(2) + q.stderr.powi(2)).sqrt();
        assert!((p.mean - q.mean).norm() <= 4.0 * se, "{p:?} vs {q:?}");
    }
}
