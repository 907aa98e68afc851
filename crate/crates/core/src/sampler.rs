//! Stochastic checks: Brownian motion on the classical groups, Monte Carlo
//! for planar Wilson loops, and Metropolis sampling of the discrete
//! Yang-Mills measure on small-rank groups.
//!
//! The Brownian motion is driven by the invariant metric under which the
//! Casimir numbers of [`crate::weights`] are the Laplacian eigenvalues:
//! `<X, Y> = kappa Tr(X* Y)` on `n x n` matrices with `kappa = N` for U(N)
//! and SU(N), and `kappa = n / 2` for SO(n) and for Sp(r) acting on `C^{2r}`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charcalc::HeatKernel;
use crate::error::{Error, MapError, Result};
use crate::maps::{normalized_trace, validate_and_genus, AreaWeightedMap, EdgeConfiguration, LoopWord};
use crate::partition::check_area;
use crate::weights::{Family, GroupDescriptor};

/// Largest Brownian time step.
pub const MAX_STEP: f64 = 1e-2;

/// Steps between Newton-Schulz re-unitarisations of a Brownian path.
const REUNITARIZE_EVERY: usize = 8;

/// Largest rank accepted by the Metropolis sampler.
pub const MCMC_RANK_CAP: usize = 2;

/// A reproducible random stream: `(seed, stream_id)` fixes every draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }

    /// Generator for the `i`-th replica, disjoint from every other replica.
    pub fn replica(&self, i: u64) -> ChaCha8Rng {
        let mut r = self.rng();
        r.set_word_pos((i as u128) << 40);
        r
    }

    /// A stream for an independent sub-task.
    pub fn child(&self, k: u64) -> RngStream {
        RngStream {
            seed: self.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k + 1),
            stream_id: self.stream_id,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// Mean and `sd / sqrt(n)` of independent samples.
    pub fn from_samples(xs: &[Complex64]) -> Self {
        let n = xs.len();
        let mean: Complex64 = xs.iter().sum::<Complex64>() / n.max(1) as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64
        } else {
            f64::INFINITY
        };
        McEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            n_samples: n,
        }
    }

    /// Whether `target` lies within `k` standard errors plus `budget`.
    pub fn agrees_with(&self, target: f64, k: f64, budget: f64) -> bool {
        (self.mean - target).norm() <= k * self.stderr + budget
    }
}

fn metric_scale(group: &GroupDescriptor) -> f64 {
    let n = group.matrix_size as f64;
    if group.family.is_unitary() {
        n
    } else {
        n / 2.0
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard Gaussian on the Lie algebra for the metric above.
pub fn lie_gaussian(group: &GroupDescriptor, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let n = group.matrix_size;
    let scale = 1.0 / metric_scale(group).sqrt();
    let skew_hermitian = |rng: &mut dyn FnMut() -> f64| {
        let mut x = DMatrix::<Complex64>::zeros(n, n);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..n {
            x[(j, j)] = Complex64::new(0.0, rng());
            for k in j + 1..n {
                let (a, b) = (rng() * s, rng() * s);
                x[(j, k)] = Complex64::new(a, b);
                x[(k, j)] = Complex64::new(-a, b);
            }
        }
        x
    };
    let mut draw = || normal(rng);
    let x = match group.family {
        Family::UnitaryTilde => skew_hermitian(&mut draw),
        Family::SpecialUnitary => {
            let mut x = skew_hermitian(&mut draw);
            let tr = x.trace() / n as f64;
            for j in 0..n {
                x[(j, j)] -= tr;
            }
            x
        }
        Family::OddOrthogonal | Family::EvenOrthogonal => {
            let mut x = DMatrix::<Complex64>::zeros(n, n);
            for j in 0..n {
                for k in j + 1..n {
                    let a = draw() * std::f64::consts::FRAC_1_SQRT_2;
                    x[(j, k)] = a.into();
                    x[(k, j)] = (-a).into();
                }
            }
            x
        }
        Family::Symplectic => {
            // orthogonal projection of u(2r) onto the fixed points of
            // Y -> J conj(Y) J^{-1}
            let y = skew_hermitian(&mut draw);
            let r = n / 2;
            let mut x = y.clone();
            for i in 0..n {
                for j in 0..n {
                    let (pi, si) = if i < r { (i + r, -1.0) } else { (i - r, 1.0) };
                    let (pj, sj) = if j < r { (j + r, -1.0) } else { (j - r, 1.0) };
                    // (J conj(Y) J^{-1})_{ij} = s_i s_j conj(Y_{pi, pj})
                    x[(i, j)] = (y[(i, j)] + y[(pi, pj)].conj() * (si * sj)) / 2.0;
                }
            }
            x
        }
    };
    x * Complex64::from(scale)
}

/// `exp(X)` for skew-Hermitian `X` through the eigenvectors of `-iX`.
fn exp_skew(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = x * Complex64::new(0.0, -1.0);
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut vd = v.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let z = Complex64::from_polar(1.0, *lam);
        for i in 0..vd.nrows() {
            vd[(i, j)] *= z;
        }
    }
    vd * v.adjoint()
}

/// One Newton-Schulz step towards the unitary polar factor.
fn reunitarize(u: &mut DMatrix<Complex64>, real: bool) {
    let n = u.nrows();
    let g = u.adjoint() * &*u;
    let corr = DMatrix::<Complex64>::identity(n, n) * Complex64::from(1.5) - g * Complex64::from(0.5);
    *u = &*u * corr;
    if real {
        u.iter_mut().for_each(|z| z.im = 0.0);
    }
}

/// `||U* U - I||_F`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n)).norm()
}

/// Brownian motion at time `t` started at the identity, by the geodesic
/// scheme `B <- exp(sqrt(dt) X) B` with `X` a Lie-algebra Gaussian.
pub fn brownian_sample(group: &GroupDescriptor, t: f64, n_steps: usize, rng: &mut impl Rng) -> Result<DMatrix<Complex64>> {
    brownian_path(group, t, n_steps, rng, |_, _| {})
}

/// As [`brownian_sample`], calling `observe(step, B)` after every step.
pub fn brownian_path(
    group: &GroupDescriptor,
    t: f64,
    n_steps: usize,
    rng: &mut impl Rng,
    mut observe: impl FnMut(usize, &DMatrix<Complex64>),
) -> Result<DMatrix<Complex64>> {
    check_area(t)?;
    let need = (t / MAX_STEP).ceil() as usize;
    if n_steps < need {
        return Err(Error::arg(format!(
            "{n_steps} steps give a step above {MAX_STEP}; need at least {need}"
        )));
    }
    let n = group.matrix_size;
    let real = matches!(group.family, Family::OddOrthogonal | Family::EvenOrthogonal);
    let dt = Complex64::from((t / n_steps as f64).sqrt());
    let mut b = DMatrix::<Complex64>::identity(n, n);
    for step in 0..n_steps {
        let x = lie_gaussian(group, rng) * dt;
        let mut e = exp_skew(&x);
        if real {
            e.iter_mut().for_each(|z| z.im = 0.0);
        }
        b = e * b;
        if (step + 1) % REUNITARIZE_EVERY == 0 || step + 1 == n_steps {
            reunitarize(&mut b, real);
        }
        observe(step, &b);
    }
    Ok(b)
}

/// A Haar-distributed element, by Gram-Schmidt on Gaussian vectors.
pub fn haar_sample(group: &GroupDescriptor, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let n = group.matrix_size;
    let real = matches!(group.family, Family::OddOrthogonal | Family::EvenOrthogonal);
    let gauss = |rng: &mut dyn FnMut() -> f64| -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                if real {
                    Complex64::from(rng())
                } else {
                    Complex64::new(rng(), rng())
                }
            })
            .collect()
    };
    let mut draw = || normal(rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let orthonormalize = |v: &mut Vec<Complex64>, cols: &[Vec<Complex64>]| {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for c in cols {
                let p: Complex64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(c).for_each(|(x, a)| *x -= p * a);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
    };
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    if group.family == Family::Symplectic {
        let r = n / 2;
        for k in 0..r {
            let mut v = gauss(&mut draw);
            orthonormalize(&mut v, &cols);
            // partner column (-conj(y); conj(x)) for v = (x; y)
            let partner: Vec<Complex64> = (0..n)
                .map(|i| if i < r { -v[i + r].conj() } else { v[i - r].conj() })
                .collect();
            for i in 0..n {
                m[(i, k)] = v[i];
                m[(i, k + r)] = partner[i];
            }
            cols.push(v);
            cols.push(partner);
        }
        return m;
    }
    for k in 0..n {
        let mut v = gauss(&mut draw);
        orthonormalize(&mut v, &cols);
        for i in 0..n {
            m[(i, k)] = v[i];
        }
        cols.push(v);
    }
    match group.family {
        Family::SpecialUnitary => {
            let d = m.determinant();
            let phase = Complex64::from_polar(1.0, -d.arg() / n as f64);
            m *= phase;
        }
        Family::OddOrthogonal | Family::EvenOrthogonal
            if m.determinant().re < 0.0 => {
                m.column_mut(0).neg_mut();
            }
        _ => {}
    }
    m
}

/// Built-in loop functionals sampled from Brownian motions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum LoopRecipe {
    /// `tr(B_t^n)` for a simple loop around area `t`.
    SimplePower { t: f64, n: i64 },
    /// `tr(v B_{a3}^2 v^{-1} C_{a2}^{-1})` with `v` Haar: the loop `def` of
    /// the worked torus example, cut out as a planar disc. Each motion gets
    /// `n_steps` steps.
    DiscExample { a2: f64, a3: f64 },
    /// `tr([x, y])` under the torus measure of area `t`, by reweighting Haar
    /// pairs `(x, y)` with `p_t([x, y])`. Small rank only.
    TorusCommutator { t: f64 },
}

/// Monte Carlo estimate of the recipe's Wilson loop; replicas are
/// independent and the result does not depend on the thread count.
pub fn plane_wilson_mc(
    recipe: &LoopRecipe,
    group: &GroupDescriptor,
    n_samples: usize,
    n_steps: usize,
    stream: &RngStream,
) -> Result<McEstimate> {
    if n_samples < 2 {
        return Err(Error::arg("need at least two samples"));
    }
    match *recipe {
        LoopRecipe::SimplePower { t, n } => {
            if n == 0 {
                return Err(Error::arg("the power n must be non-zero"));
            }
            let xs = (0..n_samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream.replica(i);
                    let b = brownian_sample(group, t, n_steps, &mut rng)?;
                    Ok(normalized_trace(&matrix_power(&b, n)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(McEstimate::from_samples(&xs))
        }
        LoopRecipe::DiscExample { a2, a3 } => {
            let xs = (0..n_samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream.replica(i);
                    let v = haar_sample(group, &mut rng);
                    let b = brownian_sample(group, a3, n_steps, &mut rng)?;
                    let c = brownian_sample(group, a2, n_steps, &mut rng)?;
                    let m = &v * &b * &b * v.adjoint() * c.adjoint();
                    Ok(normalized_trace(&m))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(McEstimate::from_samples(&xs))
        }
        LoopRecipe::TorusCommutator { t } => torus_commutator_mc(group, t, n_samples, stream),
    }
}

fn matrix_power(b: &DMatrix<Complex64>, n: i64) -> DMatrix<Complex64> {
    let base = if n < 0 { b.adjoint() } else { b.clone() };
    let mut out = DMatrix::identity(b.nrows(), b.ncols());
    for _ in 0..n.unsigned_abs() {
        out = &base * out;
    }
    out
}

fn torus_commutator_mc(group: &GroupDescriptor, t: f64, n_samples: usize, stream: &RngStream) -> Result<McEstimate> {
    let map = crate::maps::one_face_torus(t);
    let kernel = HeatKernel::new(group, t, 1e-12)?;
    let pairs = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.replica(i);
            let cfg = EdgeConfiguration {
                values: vec![haar_sample(group, &mut rng), haar_sample(group, &mut rng)],
            };
            let h = cfg.holonomy(&map.faces[0].word);
            let w = kernel.eval(&crate::charcalc::ConjugacyClass::from_matrix(group, &h)?)?.value;
            Ok((w, normalized_trace(&h)))
        })
        .collect::<Result<Vec<_>>>()?;
    // self-normalised importance sampling with a delta-method error
    let n = pairs.len() as f64;
    let wsum: f64 = pairs.iter().map(|p| p.0).sum();
    let mean: Complex64 = pairs.iter().map(|(w, x)| x * *w).sum::<Complex64>() / wsum;
    let wbar = wsum / n;
    let var: f64 = pairs.iter().map(|(w, x)| (w * (x - mean)).norm_sqr()).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt() / wbar,
        n_samples: pairs.len(),
    })
}

/// Exact `E[1 - Re tr(B_s)] = 1 - exp(-s c_1 / 2)` for the defining
/// representation, the reference for small-time contraction checks.
pub fn defining_casimir(group: &GroupDescriptor) -> f64 {
    let n = group.matrix_size as f64;
    match group.family {
        Family::UnitaryTilde => 1.0,
        Family::SpecialUnitary => 1.0 - 1.0 / (n * n),
        Family::Symplectic => (n + 1.0) / n,
        _ => (n - 1.0) / n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcParams {
    pub n_sweeps: usize,
    pub burn_in: usize,
    /// Brownian time of one proposal kick; tuned during burn-in.
    pub proposal_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McmcResult {
    /// One estimate of `E[tr(h_loop)]` per observable, with the standard
    /// error inflated by the integrated autocorrelation time.
    pub estimates: Vec<McEstimate>,
    pub autocorrelation_times: Vec<f64>,
    pub acceptance_rate: f64,
    pub proposal_scale: f64,
    /// `(sweep, observable index, tr(h_loop))` after burn-in.
    pub trace: Vec<(usize, usize, Complex64)>,
}

/// Metropolis sampling of the discrete Yang-Mills measure on `map`: the
/// target density against Haar measure on edge values is the product of
/// face heat kernels. Proposals multiply one edge value by a small Brownian
/// kick, which is symmetric.
pub fn mcmc_ym(
    map: &AreaWeightedMap,
    group: &GroupDescriptor,
    params: &McmcParams,
    stream: &RngStream,
    observables: &[LoopWord],
) -> Result<McmcResult> {
    validate_and_genus(map)?;
    if group.rank > MCMC_RANK_CAP {
        return Err(Error::RankCap {
            rank: group.rank,
            cap: MCMC_RANK_CAP,
            what: "Metropolis sampling",
        });
    }
    if params.n_sweeps == 0 || !(params.proposal_scale > 0.0) {
        return Err(Error::arg("need n_sweeps > 0 and a positive proposal scale"));
    }
    for lp in observables {
        if lp.word.iter().any(|x| x.edge >= map.edges.len()) || !lp.is_closed_in(map) {
            return Err(MapError::LoopNotClosed.into());
        }
    }
    let kernels = map
        .faces
        .iter()
        .map(|f| HeatKernel::new(group, f.area, 1e-12))
        .collect::<Result<Vec<_>>>()?;
    let faces_of_edge: Vec<Vec<usize>> = (0..map.edges.len())
        .map(|e| {
            let mut fs: Vec<usize> = (0..map.faces.len())
                .filter(|&f| map.faces[f].word.iter().any(|x| x.edge == e))
                .collect();
            fs.dedup();
            fs
        })
        .collect();
    let face_weight = |cfg: &EdgeConfiguration, f: usize| -> Result<f64> {
        let h = cfg.holonomy(&map.faces[f].word);
        let cls = crate::charcalc::ConjugacyClass::from_matrix(group, &h)?;
        Ok(kernels[f].eval(&cls)?.value.max(0.0))
    };
    let mut rng = stream.rng();
    let mut cfg = EdgeConfiguration::identity(group, map.edges.len());
    let mut weights = (0..map.faces.len()).map(|f| face_weight(&cfg, f)).collect::<Result<Vec<_>>>()?;
    let mut scale = params.proposal_scale;
    let (mut accepted, mut proposed) = (0usize, 0usize);
    let (mut window_acc, mut window_prop) = (0usize, 0usize);
    let mut trace = Vec::new();
    let mut samples: Vec<Vec<Complex64>> = vec![Vec::new(); observables.len()];
    let real = matches!(group.family, Family::OddOrthogonal | Family::EvenOrthogonal);
    for sweep in 0..params.burn_in + params.n_sweeps {
        for e in 0..map.edges.len() {
            let kick = {
                let x = lie_gaussian(group, &mut rng) * Complex64::from(scale.sqrt());
                let mut k = exp_skew(&x);
                if real {
                    k.iter_mut().for_each(|z| z.im = 0.0);
                }
                k
            };
            let old = cfg.values[e].clone();
            cfg.values[e] = kick * &old;
            let fs = &faces_of_edge[e];
            let new_w = fs.iter().map(|&f| face_weight(&cfg, f)).collect::<Result<Vec<_>>>()?;
            let old_prod: f64 = fs.iter().map(|&f| weights[f]).product();
            let new_prod: f64 = new_w.iter().product();
            let accept = new_prod >= old_prod || rng.random::<f64>() * old_prod < new_prod;
            if accept {
                for (&f, w) in fs.iter().zip(new_w) {
                    weights[f] = w;
                }
                if sweep >= params.burn_in {
                    accepted += 1;
                }
                window_acc += 1;
            } else {
                cfg.values[e] = old;
            }
            if sweep >= params.burn_in {
                proposed += 1;
            }
            window_prop += 1;
        }
        if sweep % 16 == 15 {
            for v in cfg.values.iter_mut() {
                reunitarize(v, real);
            }
        }
        if sweep < params.burn_in && window_prop >= 50 {
            // aim for 30-50% acceptance
            let rate = window_acc as f64 / window_prop as f64;
            if rate < 0.3 {
                scale *= 0.7;
            } else if rate > 0.5 {
                scale = (scale * 1.4).min(50.0);
            }
            window_acc = 0;
            window_prop = 0;
        }
        if sweep >= params.burn_in {
            for (k, lp) in observables.iter().enumerate() {
                let v = normalized_trace(&cfg.holonomy(&lp.word));
                samples[k].push(v);
                trace.push((sweep - params.burn_in, k, v));
            }
        }
    }
    let mut estimates = Vec::new();
    let mut iats = Vec::new();
    for xs in &samples {
        let tau = integrated_autocorrelation(xs);
        let mut est = McEstimate::from_samples(xs);
        est.stderr *= (2.0 * tau).max(1.0).sqrt();
        estimates.push(est);
        iats.push(tau);
    }
    Ok(McmcResult {
        estimates,
        autocorrelation_times: iats,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        proposal_scale: scale,
        trace,
    })
}

/// Integrated autocorrelation time `1/2 + sum_k rho_k` with Sokal's
/// automatic window (smallest `W >= 5 tau(W)`). Independent samples give 1/2.
/// For complex series `rho_k` is the real part of the Hermitian
/// autocorrelation, so each component counts by its variance.
pub fn integrated_autocorrelation<T: Into<Complex64> + Copy>(xs: &[T]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let zs: Vec<Complex64> = xs.iter().map(|&x| x.into()).collect();
    let mean = zs.iter().sum::<Complex64>() / n as f64;
    let d: Vec<Complex64> = zs.iter().map(|z| z - mean).collect();
    let c0 = d.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for k in 1..n / 2 {
        let ck = (0..n - k).map(|i| (d[i].conj() * d[i + k]).re).sum::<f64>() / n as f64;
        tau += ck / c0;
        if k as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Kolmogorov-Smirnov test of angles in `[-pi, pi)` against the uniform law.
/// Returns the statistic and the asymptotic p-value.
pub fn ks_uniform(angles: &[f64]) -> (f64, f64) {
    let mut u: Vec<f64> = angles.iter().map(|a| (a.rem_euclid(2.0 * PI)) / (2.0 * PI)).collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    // Kolmogorov distribution tail
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

/// Write `sweep,observable,re,im` rows.
pub fn write_trace<W: Write>(out: W, names: &[String], trace: &[(usize, usize, Complex64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::arg(format!("trace output failed: {e}"));
    w.write_record(["sweep", "observable", "re", "im"]).map_err(io)?;
    for (s, k, v) in trace {
        w.write_record([s.to_string(), names[*k].clone(), format!("{:.16e}", v.re), format!("{:.16e}", v.im)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::arg(format!("trace output failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::one_face_torus;
    use crate::weights::make_group;

    #[test]
    fn circle_brownian_mean() {
        let u1 = make_group(Family::UnitaryTilde, 1).unwrap();
        let s = RngStream::new(1, 0);
        let xs: Vec<Complex64> = (0..4000)
            .map(|i| normalized_trace(&brownian_sample(&u1, 1.0, 100, &mut s.replica(i)).unwrap()))
            .collect();
        let est = McEstimate::from_samples(&xs);
        assert!(est.agrees_with((-0.5f64).exp(), 3.0, 0.0), "{est:?}");
    }

    #[test]
    fn casimir_normalisation_matches_weights() {
        // E tr(B_t) = exp(-t c / 2) for the defining representation
        let s = RngStream::new(2, 0);
        for (fam, rank) in [
            (Family::SpecialUnitary, 2),
            (Family::OddOrthogonal, 1),
            (Family::Symplectic, 1),
            (Family::Symplectic, 2),
            (Family::EvenOrthogonal, 2),
        ] {
            let g = make_group(fam, rank).unwrap();
            let xs: Vec<Complex64> = (0..1500)
                .map(|i| normalized_trace(&brownian_sample(&g, 0.8, 80, &mut s.replica(i)).unwrap()))
                .collect();
            let est = McEstimate::from_samples(&xs);
            let want = (-0.8 * defining_casimir(&g) / 2.0).exp();
            assert!(est.agrees_with(want, 4.0, 0.005), "{g}: {est:?} vs {want}");
            let w = crate::DominantWeight::new(&g, {
                let mut v = vec![0; rank];
                v[0] = 1;
                v
            })
            .unwrap();
            let c = crate::casimir(&g, &w).unwrap();
            assert!((c - defining_casimir(&g)).abs() < 1e-12);
        }
    }

    #[test]
    fn paths_stay_in_group() {
        let mut rng = RngStream::new(3, 0).rng();
        for fam in Family::ALL {
            let g = make_group(fam, 3).unwrap();
            let mut worst: f64 = 0.0;
            let b = brownian_path(&g, 0.5, 60, &mut rng, |_, b| worst = worst.max(unitarity_defect(b))).unwrap();
            assert!(worst <= 1e-10, "{g}: {worst}");
            if fam == Family::SpecialUnitary {
                assert!((b.determinant() - Complex64::from(1.0)).norm() < 1e-10);
            }
            if fam == Family::Symplectic {
                let r = 3;
                let mut j = DMatrix::<Complex64>::zeros(6, 6);
                for i in 0..r {
                    j[(i, i + r)] = 1.0.into();
                    j[(i + r, i)] = (-1.0).into();
                }
                assert!((b.transpose() * &j * &b - &j).norm() < 1e-10);
            }
            let h = haar_sample(&g, &mut rng);
            assert!(unitarity_defect(&h) < 1e-12, "{g}");
        }
        let u1 = make_group(Family::UnitaryTilde, 1).unwrap();
        assert!(brownian_sample(&u1, 1.0, 50, &mut rng).is_err());
    }

    #[test]
    fn symplectic_gaussian_lies_in_algebra() {
        let mut rng = RngStream::new(8, 0).rng();
        let g = make_group(Family::Symplectic, 1).unwrap();
        let mut j = DMatrix::<Complex64>::zeros(2, 2);
        j[(0, 1)] = 1.0.into();
        j[(1, 0)] = (-1.0).into();
        let mut sq = 0.0;
        for _ in 0..4000 {
            let x = lie_gaussian(&g, &mut rng);
            assert!((x.transpose() * &j + &j * &x).norm() < 1e-12);
            assert!((&x + x.adjoint()).norm() < 1e-12);
            sq += x.norm_squared();
        }
        // E |X|^2 = dim / kappa = 3
        assert!((sq / 4000.0 - 3.0).abs() < 0.15, "{}", sq / 4000.0);
    }

    #[test]
    fn haar_moments() {
        let s = RngStream::new(4, 0);
        for fam in Family::ALL {
            let g = make_group(fam, 2).unwrap();
            let xs: Vec<Complex64> = (0..3000).map(|i| haar_sample(&g, &mut s.replica(i)).trace()).collect();
            let est = McEstimate::from_samples(&xs);
            assert!(est.agrees_with(0.0, 4.0, 0.0), "{g}: {est:?}");
            let sq: f64 = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.len() as f64;
            assert!((sq - 1.0).abs() < 0.15, "{g}: {sq}");
        }
    }

    #[test]
    fn deterministic_replicas() {
        let g = make_group(Family::Symplectic, 1).unwrap();
        let r = LoopRecipe::SimplePower { t: 0.5, n: 1 };
        let a = plane_wilson_mc(&r, &g, 16, 50, &RngStream::new(9, 2)).unwrap();
        let b = plane_wilson_mc(&r, &g, 16, 50, &RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
        let c = plane_wilson_mc(&r, &g, 16, 50, &RngStream::new(9, 3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn small_time_contraction() {
        let g = make_group(Family::SpecialUnitary, 2).unwrap();
        let s = RngStream::new(5, 0);
        let mut prev = 0.0;
        for (k, sv) in [0.02, 0.05, 0.1, 0.2].iter().enumerate() {
            let xs: Vec<Complex64> = (0..800)
                .map(|i| {
                    let b = brownian_sample(&g, *sv, 20, &mut s.child(k as u64).replica(i)).unwrap();
                    Complex64::from(1.0 - normalized_trace(&b).re)
                })
                .collect();
            let m = McEstimate::from_samples(&xs).mean.re;
            assert!(m > prev);
            assert!(m <= defining_casimir(&g) / 2.0 * sv * 1.3);
            prev = m;
        }
    }

    #[test]
    fn circle_torus_mcmc() {
        let u1 = make_group(Family::UnitaryTilde, 1).unwrap();
        let m = one_face_torus(1.0);
        let a = m.parse_loop(&["a"]).unwrap();
        let params = McmcParams {
            n_sweeps: 4000,
            burn_in: 500,
            proposal_scale: 1.0,
        };
        let res = mcmc_ym(&m, &u1, &params, &RngStream::new(6, 0), &[a]).unwrap();
        let est = res.estimates[0];
        assert!(est.agrees_with(0.0, 3.0, 0.0), "{est:?}");
        let tau = res.autocorrelation_times[0];
        let thin = (2.0 * tau).ceil() as usize;
        let angles: Vec<f64> = res.trace.iter().step_by(thin.max(1)).map(|x| x.2.arg()).collect();
        let (_, p) = ks_uniform(&angles);
        assert!(p > 0.01, "p = {p}");
        let mut buf = Vec::new();
        write_trace(&mut buf, &["a".into()], &res.trace[..3]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn torus_commutator_matches_character_sum() {
        // C_1: tr chi_m = (chi_{m+1} + chi_{m-1}) / 2 and the commutator
        // integral of chi_mu is 1 / d_mu
        let g = make_group(Family::Symplectic, 1).unwrap();
        let t = 1.0;
        let (mut num, mut z) = (0.0, 0.0);
        for m in 0..60 {
            let mf = m as f64;
            let w = (-t * mf * (mf + 2.0) / 4.0).exp();
            let down = if m > 0 { 1.0 / mf } else { 0.0 };
            num += w * (mf + 1.0) * 0.5 * (1.0 / (mf + 2.0) + down);
            z += w;
        }
        let exact = num / z;
        let est = plane_wilson_mc(&LoopRecipe::TorusCommutator { t }, &g, 20000, 0, &RngStream::new(10, 0)).unwrap();
        assert!(est.agrees_with(exact, 4.0, 0.0), "{est:?} vs {exact}");
    }

    #[test]
    fn ks_detects_nonuniform() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 / 500.0) * 0.5).collect();
        assert!(ks_uniform(&xs).1 < 1e-6);
        let ys: Vec<f64> = (0..500).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / 500.0).collect();
        assert!(ks_uniform(&ys).1 > 0.99);
    }

    #[test]
    fn iat_of_independent_and_correlated() {
        let mut rng = RngStream::new(7, 0).rng();
        let iid: Vec<f64> = (0..5000).map(|_| normal(&mut rng)).collect();
        assert!((integrated_autocorrelation(&iid) - 0.5).abs() < 0.15);
        let mut x = 0.0;
        let ar: Vec<f64> = (0..20000)
            .map(|_| {
                x = 0.9 * x + normal(&mut rng);
                x
            })
            .collect();
        // tau = (1 + phi) / (2 (1 - phi)) = 9.5
        let tau = integrated_autocorrelation(&ar);
        assert!((tau - 9.5).abs() < 2.5, "{tau}");
    }
}
