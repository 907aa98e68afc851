mod output;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use output::{Format, Table};
use ym2d::charcalc::ConjugacyClass;
use ym2d::sampler::{write_trace, MAX_STEP};
use ym2d::{
    dk_free_energy_weak, extract_disc, limit_table, make_group, mcmc_ym, mf_plane_power, mf_sphere_power, nonsep_density,
    partition_function, plane_wilson_mc, sep_density, torus_moments, validate_and_genus, witten_zeta, AreaWeightedMap,
    Family, GroupDescriptor, LoopRecipe, McmcParams, RngStream, TailMode, TruncationPolicy,
};

/// Character sums, partition functions and Wilson loops of two-dimensional
/// Yang-Mills theory with classical structure groups.
#[derive(Parser, Debug, Serialize)]
#[command(name = "ym2d", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, env = "YM2D_THREADS", default_value_t = 0, global = true)]
    threads: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Partition functions against their large-rank limits.
    Partition(PartitionArgs),
    /// Witten zeta values.
    Zeta(ZetaArgs),
    /// Master-field values on the plane and the weak-phase sphere.
    Masterfield(MasterfieldArgs),
    /// Torus Wilson-loop moments with their 1/n bound.
    WilsonTorus(WilsonTorusArgs),
    /// Holonomy densities of simple loops on an angle grid.
    Density(DensityArgs),
    /// Weak-phase free energy of the large-N sphere.
    Dk(DkArgs),
    /// Validate a map file or extract a disc from it.
    Map(MapArgs),
    /// Metropolis sampling of the discrete Yang-Mills measure.
    Mcmc(McmcArgs),
    /// Brownian-motion Monte Carlo for built-in planar loops.
    Bm(BmArgs),
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: ym2d::Error| e.to_string())
}

#[derive(Args, Debug, Serialize)]
struct Truncation {
    /// Absolute tolerance for truncated sums.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Largest weight size summed explicitly.
    #[arg(long, default_value_t = 400)]
    max_size: u64,
}

impl Truncation {
    fn policy(&self, g: u32) -> TruncationPolicy {
        TruncationPolicy {
            max_size: self.max_size,
            ..TruncationPolicy::for_genus(g, self.tol)
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct PartitionArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, default_value_t = 1)]
    genus: u32,
    /// Total areas.
    #[arg(long, value_delimiter = ',', required = true)]
    area: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    #[command(flatten)]
    trunc: Truncation,
}

#[derive(Args, Debug, Serialize)]
struct ZetaArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    s: Vec<f64>,
    #[command(flatten)]
    trunc: Truncation,
}

#[derive(Args, Debug, Serialize)]
struct MasterfieldArgs {
    /// Planar values `mu_t(n)`.
    #[arg(long, conflicts_with_all = ["sphere", "cross"])]
    plane: bool,
    /// Weak-phase sphere values; needs `--total`.
    #[arg(long, conflicts_with = "cross")]
    sphere: bool,
    /// Planar values at `(sigma^2/k^2, nk)` against the sphere limit.
    #[arg(long)]
    cross: bool,
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    n: Vec<i64>,
    /// Total sphere area.
    #[arg(long)]
    total: Option<f64>,
    /// Refinements for `--cross`.
    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    k: Vec<i64>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct WilsonTorusArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    area: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<i64>,
    #[command(flatten)]
    trunc: Truncation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DensityKind {
    Nonsep,
    Sep,
}

#[derive(Args, Debug, Serialize)]
struct DensityArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    rank: usize,
    #[arg(long, value_enum, default_value = "nonsep")]
    kind: DensityKind,
    #[arg(long, default_value_t = 1)]
    genus: u32,
    #[arg(long)]
    area: f64,
    /// Genus of the second piece for separating loops.
    #[arg(long, default_value_t = 1)]
    genus2: u32,
    /// Area of the second piece for separating loops.
    #[arg(long)]
    area2: Option<f64>,
    /// Grid points on `[0, pi]`; the class is `(theta, 0, ..)`, or
    /// `(theta, -theta, 0, ..)` for SU.
    #[arg(long, default_value_t = 33)]
    points: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct DkArgs {
    /// Areas; defaults to an even grid on (0, pi^2].
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long, default_value_t = 32)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct MapArgs {
    /// Map file to validate.
    #[arg(long, conflicts_with = "extract")]
    validate: Option<PathBuf>,
    /// Map file to cut a disc from; needs `--faces` and `--loop`.
    #[arg(long)]
    extract: Option<PathBuf>,
    /// Zero-based indices of the disc faces.
    #[arg(long, value_delimiter = ',')]
    faces: Vec<usize>,
    /// Loop word as signed labels, e.g. `d,e,f'`.
    #[arg(long = "loop", value_delimiter = ',')]
    loop_word: Vec<String>,
    /// Area of the outer face when writing the closed disc map.
    #[arg(long, default_value_t = 1.0)]
    outer_area: f64,
    /// Write the disc, closed by its outer face, as a map file.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct Sampling {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Args, Debug, Serialize)]
struct McmcArgs {
    /// Map file; the one-face torus when absent.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Area of the built-in one-face torus.
    #[arg(long, default_value_t = 2.0)]
    torus_area: f64,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 10000)]
    sweeps: usize,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    #[arg(long, default_value_t = 0.5)]
    proposal_scale: f64,
    /// Observable loop words, `;`-separated, labels `,`-separated.
    #[arg(long = "loop", value_delimiter = ';', default_value = "a")]
    loops: Vec<String>,
    /// CSV trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    sampling: Sampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Recipe {
    Simple,
    Disc,
    Torus,
}

#[derive(Args, Debug, Serialize)]
struct BmArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    rank: usize,
    #[arg(long, value_enum, default_value = "simple")]
    recipe: Recipe,
    /// Loop area for `simple` and `torus`.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    n: Vec<i64>,
    #[arg(long, default_value_t = 0.5)]
    a2: f64,
    #[arg(long, default_value_t = 0.5)]
    a3: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Steps per Brownian motion; defaults to the coarsest allowed.
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    sampling: Sampling,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<ym2d::Error>() {
        Some(err) if err.is_numeric() => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    let (name, table) = match &cli.command {
        Command::Partition(a) => ("partition", partition(a)?),
        Command::Zeta(a) => ("zeta", zeta(a)?),
        Command::Masterfield(a) => ("masterfield", masterfield(a)?),
        Command::WilsonTorus(a) => ("wilson-torus", wilson_torus(a)?),
        Command::Density(a) => ("density", density(a)?),
        Command::Dk(a) => ("dk", dk(a)?),
        Command::Map(a) => ("map", map(a)?),
        Command::Mcmc(a) => ("mcmc", mcmc(a)?),
        Command::Bm(a) => ("bm", bm(a)?),
    };
    let meta = output::metadata(name, cli, &table);
    let mut out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    output::write(&mut *out, cli.format, &meta, &table)?;
    out.flush()?;
    Ok(())
}

/// Evaluate `f` on every point in parallel, keeping the input order.
fn sweep<P: Sync, R: Send>(points: &[P], f: impl Fn(&P) -> ym2d::Result<R> + Sync + Send) -> Result<Vec<R>> {
    Ok(points.par_iter().map(f).collect::<ym2d::Result<Vec<_>>>()?)
}

fn grid<A: Copy, B: Copy>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect()
}

fn partition(a: &PartitionArgs) -> Result<Table> {
    let policy = a.trunc.policy(a.genus);
    let points = grid(&a.ranks, &a.area);
    let rows = sweep(&points, |&(r, t)| {
        let group = make_group(a.family, r)?;
        let z = partition_function(&group, a.genus, t, &policy)?;
        let limit = if a.genus == 0 {
            f64::NAN
        } else {
            limit_table(a.family, a.genus, t, policy.tol)?
        };
        Ok((r, t, z, limit))
    })?;
    let mut table = Table::new(&["family", "r", "g", "T", "Z", "tail_bound", "limit", "gap"]);
    for (r, t, z, limit) in rows {
        table.push(vec![
            a.family.symbol().into(),
            r.into(),
            a.genus.into(),
            t.into(),
            z.value.into(),
            z.tail_bound.into(),
            limit.into(),
            (z.value - limit).abs().into(),
        ]);
    }
    Ok(table)
}

fn zeta(a: &ZetaArgs) -> Result<Table> {
    let policy = TruncationPolicy {
        tail_mode: TailMode::RigorousG2Plus,
        ..a.trunc.policy(2)
    };
    let points = grid(&a.ranks, &a.s);
    let rows = sweep(&points, |&(r, s)| witten_zeta(&make_group(a.family, r)?, s, &policy))?;
    let mut table = Table::new(&["family", "r", "s", "zeta", "tail_bound", "terms"]);
    for ((r, s), z) in points.iter().zip(rows) {
        table.push(vec![
            a.family.symbol().into(),
            (*r).into(),
            (*s).into(),
            z.value.into(),
            z.tail_bound.into(),
            z.terms_used.into(),
        ]);
    }
    Ok(table)
}

fn sphere_sigma(t: f64, total: f64) -> f64 {
    (t * (total - t) / total).sqrt()
}

fn masterfield(a: &MasterfieldArgs) -> Result<Table> {
    let need_total = || {
        a.total
            .ok_or_else(|| ym2d::Error::InvalidArgument("--sphere and --cross need --total".into()))
    };
    if a.sphere {
        let total = need_total()?;
        let mut table = Table::new(&["t", "T", "n", "value", "tail_bound"]);
        for (t, n) in grid(&a.t, &a.n) {
            let v = mf_sphere_power(t, total, n, a.tol)?;
            table.push(vec![t.into(), total.into(), n.into(), v.value.into(), v.tail_bound.into()]);
        }
        Ok(table)
    } else if a.cross {
        let total = need_total()?;
        let mut table = Table::new(&["t", "T", "n", "k", "plane", "limit", "diff"]);
        let points: Vec<(f64, i64, i64)> = grid(&a.t, &a.n)
            .into_iter()
            .flat_map(|(t, n)| a.k.iter().map(move |k| (t, n, *k)))
            .collect();
        let rows = sweep(&points, |&(t, n, k)| {
            if k <= 0 {
                return Err(ym2d::Error::InvalidArgument("refinements k must be positive".into()));
            }
            let limit = mf_sphere_power(t, total, n, a.tol)?.value;
            let s = sphere_sigma(t, total);
            let plane = mf_plane_power(s * s / (k * k) as f64, n * k)?;
            Ok((plane, limit))
        })?;
        for ((t, n, k), (plane, limit)) in points.into_iter().zip(rows) {
            table.push(vec![
                t.into(),
                total.into(),
                n.into(),
                k.into(),
                plane.into(),
                limit.into(),
                (plane - limit).abs().into(),
            ]);
        }
        Ok(table)
    } else {
        let mut table = Table::new(&["t", "n", "mu"]);
        for (t, n) in grid(&a.t, &a.n) {
            table.push(vec![t.into(), n.into(), mf_plane_power(t, n)?.into()]);
        }
        Ok(table)
    }
}

fn wilson_torus(a: &WilsonTorusArgs) -> Result<Table> {
    let policy = a.trunc.policy(1);
    let points: Vec<(usize, f64, i64)> = grid(&a.ranks, &a.area)
        .into_iter()
        .flat_map(|(r, t)| a.k.iter().map(move |k| (r, t, *k)))
        .collect();
    let rows = sweep(&points, |&(r, t, k)| torus_moments(&make_group(a.family, r)?, t, k, &policy))?;
    let mut table = Table::new(&[
        "family",
        "r",
        "T",
        "k",
        "expectation",
        "second_moment",
        "tail_bound",
        "bound",
    ]);
    for ((r, t, k), m) in points.into_iter().zip(rows) {
        table.push(vec![
            a.family.symbol().into(),
            r.into(),
            t.into(),
            k.into(),
            m.expectation.into(),
            m.second_moment.into(),
            m.tail_bound.into(),
            m.bound.into(),
        ]);
    }
    Ok(table)
}

fn grid_class(group: &GroupDescriptor, theta: f64) -> ym2d::Result<ConjugacyClass> {
    let mut angles = ConjugacyClass::identity(group).eigenangles;
    angles[0] = theta;
    if group.family == Family::SpecialUnitary {
        angles[1] = -theta;
    }
    ConjugacyClass::new(group, angles)
}

fn density(a: &DensityArgs) -> Result<Table> {
    let group = make_group(a.family, a.rank)?;
    if a.points < 2 {
        return Err(ym2d::Error::InvalidArgument("need at least two grid points".into()).into());
    }
    let thetas: Vec<f64> = (0..a.points).map(|i| PI * i as f64 / (a.points - 1) as f64).collect();
    let z = match a.kind {
        DensityKind::Nonsep => Some(partition_function(&group, a.genus, a.area, &TruncationPolicy::for_genus(a.genus, a.tol))?),
        DensityKind::Sep => None,
    };
    let area2 = match a.kind {
        DensityKind::Sep => Some(
            a.area2
                .ok_or_else(|| ym2d::Error::InvalidArgument("separating densities need --area2".into()))?,
        ),
        DensityKind::Nonsep => None,
    };
    let rows = sweep(&thetas, |&theta| {
        let cls = grid_class(&group, theta)?;
        match (z, area2) {
            (Some(z), _) => {
                let v = nonsep_density(&group, a.genus, a.area, &cls, a.tol)?;
                let zl = z.value - z.tail_bound;
                Ok((v.value / z.value, v.tail_bound / zl + v.value.abs() * z.tail_bound / (z.value * zl)))
            }
            (None, Some(t2)) => {
                let v = sep_density(&group, a.genus, a.area, a.genus2, t2, &cls, a.tol)?;
                Ok((v.value, v.tail_bound))
            }
            _ => unreachable!(),
        }
    })?;
    let mut table = Table::new(&["theta", "density", "tail_bound"]);
    for (theta, (v, b)) in thetas.into_iter().zip(rows) {
        table.push(vec![theta.into(), v.into(), b.into()]);
    }
    Ok(table)
}

fn dk(a: &DkArgs) -> Result<Table> {
    let ts: Vec<f64> = if a.t.is_empty() {
        (1..=a.points).map(|i| PI * PI * i as f64 / a.points as f64).collect()
    } else {
        a.t.clone()
    };
    let mut table = Table::new(&["T", "F"]);
    for t in ts {
        table.push(vec![t.into(), dk_free_energy_weak(t)?.into()]);
    }
    Ok(table)
}

fn read_map(path: &PathBuf) -> Result<AreaWeightedMap> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(AreaWeightedMap::from_json(&text)?)
}

fn map(a: &MapArgs) -> Result<Table> {
    if let Some(path) = &a.validate {
        let m = read_map(path)?;
        let genus = validate_and_genus(&m)?;
        let mut table = Table::new(&["edges", "vertices", "faces", "euler", "genus", "area"]);
        let (v, e, f) = (m.vertex_count, m.edges.len(), m.faces.len());
        table.push(vec![
            e.into(),
            v.into(),
            f.into(),
            (v as i64 - e as i64 + f as i64).into(),
            genus.into(),
            m.total_area().into(),
        ]);
        return Ok(table);
    }
    let Some(path) = &a.extract else {
        return Err(ym2d::Error::InvalidArgument("map needs --validate or --extract".into()).into());
    };
    let m = read_map(path)?;
    let lp = m.parse_loop(&a.loop_word)?;
    let disc = extract_disc(&m, &a.faces, &lp)?;
    if let Some(out) = &a.emit {
        std::fs::write(out, disc.closed_map(a.outer_area).to_json())
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    let mut table = Table::new(&["edges", "vertices", "bounded_faces", "outer_length", "area", "loop"]);
    let closed = disc.closed_map(a.outer_area);
    table.push(vec![
        disc.edges.len().into(),
        disc.vertex_count.into(),
        disc.bounded.len().into(),
        disc.outer.as_ref().map_or(0, |o| o.len()).into(),
        disc.total_area().into(),
        closed.format_word(&disc.loop_word.word).join(" ").into(),
    ]);
    Ok(table)
}

fn mcmc(a: &McmcArgs) -> Result<Table> {
    let group = make_group(a.family, a.rank)?;
    let m = match &a.map {
        Some(p) => read_map(p)?,
        None => ym2d::maps::one_face_torus(a.torus_area),
    };
    let loops = a
        .loops
        .iter()
        .map(|s| m.parse_loop(&s.split(',').map(str::trim).collect::<Vec<_>>()))
        .collect::<ym2d::Result<Vec<_>>>()?;
    let params = McmcParams {
        n_sweeps: a.sweeps,
        burn_in: a.burn_in,
        proposal_scale: a.proposal_scale,
    };
    let res = mcmc_ym(&m, &group, &params, &RngStream::new(a.sampling.seed, a.sampling.stream), &loops)?;
    if let Some(p) = &a.trace {
        let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
        write_trace(BufWriter::new(f), &a.loops, &res.trace)?;
    }
    let mut table = Table::new(&[
        "observable",
        "mean_re",
        "mean_im",
        "stderr",
        "iat",
        "acceptance",
        "proposal_scale",
        "n_samples",
    ]);
    for ((name, est), iat) in a.loops.iter().zip(&res.estimates).zip(&res.autocorrelation_times) {
        table.push(vec![
            name.clone().into(),
            est.mean.re.into(),
            est.mean.im.into(),
            est.stderr.into(),
            (*iat).into(),
            res.acceptance_rate.into(),
            res.proposal_scale.into(),
            est.n_samples.into(),
        ]);
    }
    Ok(table)
}

fn bm(a: &BmArgs) -> Result<Table> {
    let group = make_group(a.family, a.rank)?;
    let longest = match a.recipe {
        Recipe::Disc => a.a2.max(a.a3),
        _ => a.t,
    };
    let steps = a.steps.unwrap_or(((longest / MAX_STEP).ceil() as usize).max(1));
    let stream = RngStream::new(a.sampling.seed, a.sampling.stream);
    let recipes: Vec<(i64, LoopRecipe, f64)> = match a.recipe {
        Recipe::Simple => a
            .n
            .iter()
            .map(|&n| Ok((n, LoopRecipe::SimplePower { t: a.t, n }, mf_plane_power(a.t, n)?)))
            .collect::<ym2d::Result<_>>()?,
        Recipe::Disc => vec![(
            1,
            LoopRecipe::DiscExample { a2: a.a2, a3: a.a3 },
            (-a.a2 / 2.0 - a.a3).exp() * (1.0 - a.a3),
        )],
        Recipe::Torus => vec![(1, LoopRecipe::TorusCommutator { t: a.t }, f64::NAN)],
    };
    let mut table = Table::new(&["n", "mean_re", "mean_im", "stderr", "n_samples", "steps", "master_field"]);
    for (k, (n, recipe, target)) in recipes.into_iter().enumerate() {
        let est = plane_wilson_mc(&recipe, &group, a.samples, steps, &stream.child(k as u64))?;
        table.push(vec![
            n.into(),
            est.mean.re.into(),
            est.mean.im.into(),
            est.stderr.into(),
            est.n_samples.into(),
            steps.into(),
            target.into(),
        ]);
    }
    Ok(table)
}
