//! Command-line front-end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stochat::cellprob::{
    anisotropy_sweep, bulk_cell_problem, default_directions, ell_sweep, surface_cell_problem, sweep_domain,
    AnisotropyConfig, CubeSpec, EdgeSpec, JumpDatum, LatticeSpec, SearchBudget, SweepRow,
};
use stochat::energy::{closed_form_v, surface_energy, total_energy, weak_membrane_energy, EnergyParams, Scope};
use stochat::graph::{EdgeSet, MAX_DEGREE};
use stochat::image::{encode_pgm, read_pgm};
use stochat::lattice::{check_admissibility, BoxDomain, LatticeKind, PointSet};
use stochat::numeric::fmt_g17;
use stochat::pipeline::{image_domain, segment_on};
use stochat::rng::stream;
use stochat::solver::AltOptions;
use stochat::table::{write_ell_csv, write_sweep_csv};
use stochat::{Error, Result};

#[derive(Parser)]
#[command(name = "stochat", version, about = "Phase-field energies on stochastic lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set and write it as JSON.
    GenLattice(GenLattice),
    /// Build an edge set for a point set.
    BuildGraph(BuildGraph),
    /// Segment a PGM image.
    Segment(Segment),
    /// Bulk cell problem with affine boundary data.
    CellprobBulk(Bulk),
    /// Surface cell problem with planar jump data.
    CellprobSurface(Surface),
    /// Surface densities over directions and replicas.
    Anisotropy(Anisotropy),
    /// Surface densities over lattice-to-phase-field ratios.
    EllSweep(EllSweep),
    /// Admissibility and energy self-test.
    Check(Check),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Parking,
    Periodic,
    Jittered,
}

impl From<KindArg> for LatticeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Parking => LatticeKind::RandomParking,
            KindArg::Periodic => LatticeKind::Periodic,
            KindArg::Jittered => LatticeKind::Jittered,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgesArg {
    Voronoi,
    Knn,
}

#[derive(Args, Clone)]
struct LatticeArgs {
    #[arg(long, value_enum, default_value = "parking")]
    lattice: KindArg,
    /// Hard-core distance (parking) or spacing (periodic, jittered).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Jitter as a fraction of the spacing.
    #[arg(long, default_value_t = 0.25)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LatticeArgs {
    fn spec(&self, dim: usize) -> LatticeSpec {
        LatticeSpec {
            kind: self.lattice.into(),
            dim,
            scale: self.scale,
            jitter: self.jitter,
        }
    }
}

#[derive(Args, Clone)]
struct EdgeArgs {
    #[arg(long, value_enum, default_value = "voronoi")]
    edges: EdgesArg,
    /// Neighbors per point for k-NN edges.
    #[arg(long, default_value_t = 9)]
    k: usize,
}

impl EdgeArgs {
    fn spec(&self) -> EdgeSpec {
        match self.edges {
            EdgesArg::Voronoi => EdgeSpec::Voronoi,
            EdgesArg::Knn => EdgeSpec::Knn(self.k),
        }
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 20)]
    flips_per_site: usize,
    #[arg(long, default_value_t = 12)]
    exhaustive_limit: usize,
}

impl SearchArgs {
    fn budget(&self, seed: u64) -> SearchBudget {
        SearchBudget {
            flips_per_site: self.flips_per_site,
            exhaustive_limit: self.exhaustive_limit,
            seed,
            ..SearchBudget::default()
        }
    }
}

#[derive(Args)]
struct GenLattice {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Side of the box `[0, size]^dim`.
    #[arg(long, default_value_t = 20.0)]
    size: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildGraph {
    /// Point set JSON.
    #[arg(long)]
    points: PathBuf,
    #[command(flatten)]
    edges: EdgeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Segment {
    /// Input PGM image.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for u.pgm, v.pgm and trace.csv.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    edges: EdgeArgs,
    /// Point set JSON to use instead of generating one.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Lattice units per pixel edge for generated lattices.
    #[arg(long, default_value_t = 2.0)]
    units_per_pixel: f64,
    /// Allow different aspect ratios of image and domain.
    #[arg(long)]
    stretch: bool,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Write P2 instead of P5.
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct CellArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    edges: EdgeArgs,
    /// Cube side.
    #[arg(long, default_value_t = 16.0)]
    t: f64,
    /// Boundary layer width; the edge range M when absent.
    #[arg(long)]
    delta: Option<f64>,
    /// Record wall-clock times (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CellArgs {
    fn build(&self) -> Result<(PointSet, EdgeSet)> {
        let domain = sweep_domain(2, self.t, 1.0)?;
        let ps = self.lattice.spec(2).generate(&domain, self.lattice.seed)?;
        let es = self.edges.spec().build(&ps)?;
        Ok((ps, es))
    }

    fn cube(&self, ps: &PointSet, es: &EdgeSet, nu: Vec<f64>) -> Result<CubeSpec> {
        CubeSpec::new(ps.domain().center(), nu, self.t, self.delta.unwrap_or(es.m))
    }
}

#[derive(Args)]
struct Bulk {
    #[command(flatten)]
    cell: CellArgs,
    /// Slope of the affine datum, comma separated.
    #[arg(long, default_value = "1,0")]
    xi: String,
}

#[derive(Args)]
struct Surface {
    #[command(flatten)]
    cell: CellArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Interface normal, comma separated; normalized.
    #[arg(long, default_value = "1,0")]
    nu: String,
    /// Jump opening.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
}

#[derive(Args)]
struct Anisotropy {
    #[command(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    edges: EdgeArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Cube sides, comma separated.
    #[arg(long, default_value = "24")]
    t: String,
    #[arg(long, default_value_t = 16)]
    nu_count: usize,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EllSweep {
    #[command(flatten)]
    cell: CellArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value = "1,0")]
    nu: String,
    /// Ratios ell, comma separated.
    #[arg(long, default_value = "1,2,4,8")]
    ell: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args)]
struct Check {
    /// Point set JSON; a generated lattice when absent.
    #[arg(long)]
    points: Option<PathBuf>,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    edges: EdgeArgs,
    #[arg(long, default_value_t = 20.0)]
    size: f64,
    /// Random fields per invariant.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

fn list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("{what}: {x:?} is not a number")))
        })
        .collect()
}

fn unit(s: &str) -> Result<Vec<f64>> {
    let v = list(s, "nu")?;
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if v.len() != 2 || n == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "nu must be a nonzero 2-vector, got {s:?}"
        )));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Write to a file, or stdout when no path is given.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn gen_lattice(a: &GenLattice) -> Result<()> {
    let domain = BoxDomain::cube(a.dim, a.size)?;
    let ps = a.lattice.spec(a.dim).generate(&domain, a.lattice.seed)?;
    emit(a.out.as_deref(), (ps.to_json() + "\n").as_bytes())
}

fn load_points(p: &Path) -> Result<PointSet> {
    PointSet::from_json(&fs::read_to_string(p)?)
}

fn build_graph(a: &BuildGraph) -> Result<()> {
    let ps = load_points(&a.points)?;
    let es = a.edges.spec().build(&ps)?;
    emit(a.out.as_deref(), (es.to_json() + "\n").as_bytes())
}

fn segment(a: &Segment) -> Result<()> {
    let img = read_pgm(&a.input)?;
    let params = EnergyParams::new(a.eps, a.beta, a.gamma, a.ell)?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", a.tol)));
    }
    let ps = match &a.points {
        Some(p) => load_points(p)?,
        None => {
            let domain = image_domain(img.width(), img.height(), a.units_per_pixel)?;
            a.lattice.spec(2).generate(&domain, a.lattice.seed)?
        }
    };
    let es = a.edges.spec().build(&ps)?;
    let opts = AltOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        ..AltOptions::default()
    };
    let s = segment_on(&img, ps, es, &params, &opts, a.stretch)?;
    let u = encode_pgm(&s.u_image, !a.ascii)?;
    let v = encode_pgm(&s.v_image, !a.ascii)?;
    let mut trace = String::from("iteration,energy\n");
    for (k, e) in s.trace.energy_per_iter.iter().enumerate() {
        trace += &format!("{k},{}\n", fmt_g17(*e));
    }
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("u.pgm"), u)?;
    fs::write(a.out.join("v.pgm"), v)?;
    fs::write(a.out.join("trace.csv"), trace)?;
    let mean_v = s.v.iter().sum::<f64>() / s.v.len() as f64;
    println!(
        "points={} iterations={} converged={} energy={} mean_v={}",
        s.points.len(),
        s.trace.iterations,
        s.trace.converged,
        fmt_g17(*s.trace.energy_per_iter.last().expect("nonempty")),
        fmt_g17(mean_v)
    );
    Ok(())
}

fn bulk(a: &Bulk) -> Result<()> {
    let xi = list(&a.xi, "xi")?;
    if xi.len() != 2 {
        return Err(Error::InvalidParameter("xi must have 2 components".into()));
    }
    let (ps, es) = a.cell.build()?;
    let cube = a.cell.cube(&ps, &es, vec![1.0, 0.0])?;
    let r = bulk_cell_problem(&ps, &es, &xi, &cube)?;
    let text = format!(
        "lattice_kind,seed,xi_x,xi_y,t,delta,density,raw_energy\n{},{},{},{},{},{},{},{}\n",
        ps.kind.as_str(),
        ps.seed,
        fmt_g17(xi[0]),
        fmt_g17(xi[1]),
        fmt_g17(cube.side),
        fmt_g17(cube.delta),
        fmt_g17(r.density),
        fmt_g17(r.raw_energy)
    );
    emit(a.cell.out.as_deref(), text.as_bytes())
}

fn surface(a: &Surface) -> Result<()> {
    let nu = unit(&a.nu)?;
    let jump = JumpDatum::new(a.a, 0.0)?;
    let p = EnergyParams::new(1.0 / a.ell, a.beta, 0.0, a.ell)?;
    let (ps, es) = a.cell.build()?;
    let cube = a.cell.cube(&ps, &es, nu.clone())?;
    let start = Instant::now();
    let r = surface_cell_problem(&ps, &es, &jump, &cube, &p, &a.search.budget(a.cell.lattice.seed))?;
    let row = SweepRow {
        lattice_kind: ps.kind,
        seed: ps.seed,
        nu,
        t: cube.side,
        ell: a.ell,
        density: r.density,
        raw_energy: r.raw_energy,
        candidate_kind: r.candidate.kind,
        flips_accepted: r.log.flips_accepted,
        wall_ms: if a.cell.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    };
    let mut buf = Vec::new();
    write_sweep_csv(&[row], &mut buf)?;
    emit(a.cell.out.as_deref(), &buf)
}

fn anisotropy(a: &Anisotropy) -> Result<()> {
    let mut cfg = AnisotropyConfig::new(
        a.lattice.spec(2),
        a.edges.spec(),
        default_directions(a.nu_count),
        list(&a.t, "t")?,
        a.replicas,
    );
    cfg.seed = a.lattice.seed;
    cfg.params = EnergyParams::new(1.0, a.beta, 0.0, 1.0)?;
    cfg.budget = a.search.budget(a.lattice.seed);
    cfg.delta = a.delta;
    cfg.timing = a.timing;
    let table = anisotropy_sweep(&cfg)?;
    let mut buf = Vec::new();
    write_sweep_csv(&table.rows, &mut buf)?;
    match &a.out {
        Some(p) => {
            fs::write(p, &buf)?;
            for s in &table.summary {
                println!(
                    "t={} max_min_ratio={} cov={}",
                    fmt_g17(s.t),
                    fmt_g17(s.max_min_ratio),
                    fmt_g17(s.cov)
                );
            }
        }
        None => emit(None, &buf)?,
    }
    Ok(())
}

fn ell(a: &EllSweep) -> Result<()> {
    let nu = unit(&a.nu)?;
    let ells = list(&a.ell, "ell")?;
    let (ps, es) = a.cell.build()?;
    let cube = a.cell.cube(&ps, &es, nu.clone())?;
    let rows = ell_sweep(&ps, &es, &cube, &ells, a.beta, &a.search.budget(a.cell.lattice.seed))?;
    let base = SweepRow {
        lattice_kind: ps.kind,
        seed: ps.seed,
        nu,
        t: cube.side,
        ell: 1.0,
        density: 0.0,
        raw_energy: 0.0,
        candidate_kind: rows[0].candidate_kind,
        flips_accepted: 0,
        wall_ms: 0,
    };
    let mut buf = Vec::new();
    write_ell_csv(&base, &rows, &mut buf)?;
    emit(a.cell.out.as_deref(), &buf)
}

fn check(a: &Check) -> Result<()> {
    use rand::Rng;
    let ps = match &a.points {
        Some(p) => load_points(p)?,
        None => a
            .lattice
            .spec(2)
            .generate(&BoxDomain::cube(2, a.size)?, a.lattice.seed)?,
    };
    let adm = check_admissibility(&ps)?;
    let es = a.edges.spec().build(&ps)?;
    let scope = Scope::new(&ps, &es)?;
    let mut rng = stream(a.lattice.seed);
    let mut worst_sandwich = f64::INFINITY;
    let mut worst_edge_well = f64::INFINITY;
    let mut worst_identity: f64 = 0.0;
    for _ in 0..a.samples {
        let p = EnergyParams::new(rng.gen_range(0.2..2.0), rng.gen_range(0.2..5.0), 0.0, 1.0)?;
        let u: Vec<f64> = (0..ps.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..ps.len()).map(|_| rng.gen::<f64>()).collect();
        let g = weak_membrane_energy(&scope, &u, &p, p.beta)?;
        worst_sandwich = worst_sandwich.min(total_energy(&scope, &u, &v, None, &p)?.total - g);
        let (well, grad) = surface_energy(&scope, &v, &p)?;
        // sum |dv|^2 <= 2 deg sum (v - 1)^2, in the weighted parts
        worst_edge_well = worst_edge_well.min(es.max_degree as f64 * well - grad);
        let vc = closed_form_v(&scope, &u, &p)?;
        let e = total_energy(&scope, &u, &vc, None, &p)?;
        worst_identity = worst_identity.max(((e.bulk + e.well) - g).abs() / g.max(1e-300));
    }
    let ok = adm.pass_hardcore
        && adm.pass_covering
        && es.max_degree <= MAX_DEGREE
        && worst_sandwich >= -1e-10
        && worst_edge_well >= -1e-10
        && worst_identity <= 1e-10;
    println!(
        "points={} r={} R={} min_pair_dist={} max_cover_dist={} hardcore={} covering={}",
        ps.len(),
        fmt_g17(ps.r),
        fmt_g17(ps.big_r),
        fmt_g17(adm.min_pair_dist),
        fmt_g17(adm.max_cover_dist),
        adm.pass_hardcore,
        adm.pass_covering
    );
    println!(
        "M={} max_degree={} sandwich_margin={} edge_well_margin={} weak_membrane_rel_err={}",
        fmt_g17(es.m),
        es.max_degree,
        fmt_g17(worst_sandwich),
        fmt_g17(worst_edge_well),
        fmt_g17(worst_identity)
    );
    if ok {
        println!("check: ok");
        Ok(())
    } else {
        Err(Error::Numerical("self-test failed".into()))
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(s) = std::env::var("STOCHAT_THREADS") {
        let n: usize =
            s.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                Error::InvalidParameter(format!("STOCHAT_THREADS must be a positive integer, got {s:?}"))
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::GenLattice(a) => gen_lattice(a),
        Command::BuildGraph(a) => build_graph(a),
        Command::Segment(a) => segment(a),
        Command::CellprobBulk(a) => bulk(a),
        Command::CellprobSurface(a) => surface(a),
        Command::Anisotropy(a) => anisotropy(a),
        Command::EllSweep(a) => ell(a),
        Command::Check(a) => check(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            // keep usage errors on one line like the others
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or_default();
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
