//! `lbspec`: Laplace–Beltrami spectra of part scans and spectral process monitoring.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 3 when the numerical core fails.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lbspec::chart::{
    read_baseline_csv, run_length_simulation, ChartParams, ChartState, PooledSource,
    RunLengthConfig, SpectrumSource,
};
use lbspec::geom::{parse_off, parse_voxgrid, write_off, write_voxgrid};
use lbspec::partgen::{GeneratedPart, HoleSpec, NoiseModel, ScenarioSpec};
use lbspec::rng::{derive_seed, substream};
use lbspec::spectra::{
    classical_mds, compute_spectrum, monitored_spectrum, read_spectrum_csv, write_mds_csv,
    write_spectrum_csv,
};
use lbspec::{BasisOrder, BoundaryCondition, Error, Part, SpectrumConfig, TriangleMesh, VoxelGrid};

#[derive(Parser, Debug)]
#[command(name = "lbspec", version, about = "Laplace–Beltrami spectra and spectral SPC charts")]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the smallest eigenvalues of a mesh (OFF) or voxel grid (VOXGRID).
    Spectrum(SpectrumArgs),
    /// Generate synthetic parts.
    Generate(GenerateArgs),
    /// Run the distribution-free EWMA chart over a stream of parts.
    Chart(ChartArgs),
    /// Estimate ARL and SDRL of the chart by simulation.
    SimulateRl(SimulateArgs),
    /// Embed spectra with classical multidimensional scaling.
    Mds(MdsArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OrderArg {
    Linear,
    Quadratic,
    Cubic,
}

impl From<OrderArg> for BasisOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Linear => BasisOrder::Linear,
            OrderArg::Quadratic => BasisOrder::Quadratic,
            OrderArg::Cubic => BasisOrder::Cubic,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BcArg {
    Closed,
    Neumann,
    Dirichlet,
}

impl From<BcArg> for BoundaryCondition {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Closed => BoundaryCondition::Closed,
            BcArg::Neumann => BoundaryCondition::Neumann,
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
        }
    }
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Part files; several inputs need --registry.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "linear")]
    order: OrderArg,
    #[arg(long, value_enum, default_value = "closed")]
    bc: BcArg,
    #[arg(long, default_value_t = 15)]
    k: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Eigensolver start-block seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write `index,eigenvalue` CSV for a single input.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one row of k monitored eigenvalues per input (baseline format). For closed and
    /// Neumann parts the zero eigenvalue of the constant mode is skipped.
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum FamilyArg {
    Sphere,
    Ellipsoid,
    Barrel,
    OpenBarrel,
    VoxelHole,
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Barrel defect amplitude.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Voxel hole semi-axis along x (8 is circular).
    #[arg(long, default_value_t = 8.0)]
    rx: f64,
    /// Voxel boundary-flip noise bound; omitted means noise-free.
    #[arg(long)]
    max_noise: Option<u32>,
    /// Target vertex count of sphere and ellipsoid meshes.
    #[arg(long, default_value_t = 2562)]
    vertices: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Ellipsoid semi-axes `a,b,c`.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [2.0, 1.5, 1.0])]
    axes: Vec<f64>,
    /// Remove triangles within this polar angle (degrees) of +z.
    #[arg(long)]
    hole_cap: Option<f64>,
    /// Remove triangles whose centroid lies below this height.
    #[arg(long)]
    hole_bottom: Option<f64>,
    /// Isotropic coordinate noise; defaults to 0.05 for cylinders and 0 for spheres and ellipsoids.
    #[arg(long)]
    sigma: Option<f64>,
    /// Spatially correlated noise `sigma1,sigma2`, replacing --sigma.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    correlated: Option<Vec<f64>>,
    /// Correlation lengths `rx,ry,rz` of the correlated noise.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [10.0, 10.0, 10.0])]
    corr_length: Vec<f64>,
    /// Final vertex count range `min,max` drawn by random vertex deletion.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    size_range: Option<Vec<usize>>,
}

impl ScenarioArgs {
    fn spec(&self) -> lbspec::Result<ScenarioSpec> {
        let mut spec = match self.family {
            FamilyArg::Sphere => ScenarioSpec::sphere(self.radius, self.vertices)
                .with_noise(NoiseModel::None),
            FamilyArg::Ellipsoid => {
                ScenarioSpec::ellipsoid([self.axes[0], self.axes[1], self.axes[2]], self.vertices)
                    .with_noise(NoiseModel::None)
            }
            FamilyArg::Barrel => ScenarioSpec::barrel(self.delta),
            FamilyArg::OpenBarrel => ScenarioSpec::open_barrel(self.delta),
            FamilyArg::VoxelHole => ScenarioSpec::voxel_hole(self.rx, self.max_noise),
        };
        let hole = match (self.hole_cap, self.hole_bottom) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "--hole-cap and --hole-bottom are exclusive".into(),
                ))
            }
            (Some(deg), None) => Some(HoleSpec::SphericalCap { max_polar_deg: deg }),
            (None, Some(z)) => Some(HoleSpec::BottomCap { z_max: z }),
            (None, None) => None,
        };
        if hole.is_some() {
            spec = spec.with_hole(hole);
        }
        if self.family != FamilyArg::VoxelHole {
            if let Some(c) = &self.correlated {
                let r = &self.corr_length;
                spec = spec.with_noise(NoiseModel::Correlated {
                    sigma1: c[0],
                    sigma2: c[1],
                    r: [r[0], r[1], r[2]],
                });
            } else if let Some(sigma) = self.sigma {
                spec = spec.with_noise(if sigma == 0.0 {
                    NoiseModel::None
                } else {
                    NoiseModel::Isotropic { sigma }
                });
            }
        }
        if let Some(r) = &self.size_range {
            spec = spec.with_size_range(Some(r[0]..=r[1]));
        }
        spec.validate()?;
        Ok(spec)
    }

    /// The family's nominal part: no barrel defect, circular voxel hole.
    fn in_control(&self) -> Self {
        Self {
            delta: 0.0,
            rx: 8.0,
            ..self.clone()
        }
    }

    fn default_bc(&self) -> BoundaryCondition {
        let open = self.hole_cap.is_some() || self.hole_bottom.is_some();
        match self.family {
            FamilyArg::OpenBarrel | FamilyArg::VoxelHole => BoundaryCondition::Dirichlet,
            _ if open => BoundaryCondition::Dirichlet,
            _ => BoundaryCondition::Closed,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of variants; variant `i` uses a seed derived from (seed, i).
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output file; batches append `_000`, `_001`, … to the stem. Stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ChartOpts {
    #[arg(long, default_value_t = 0.005)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    w_min: usize,
    #[arg(long, default_value_t = 10)]
    w_max: usize,
    #[arg(long, default_value_t = 2000)]
    permutations: usize,
    /// Window arrangements up to this count are enumerated exactly.
    #[arg(long, default_value_t = 50_000)]
    exact_limit: usize,
    /// Previous no-alarm steps each p-value is conditioned on (0: unconditional).
    #[arg(long, default_value_t = 10)]
    history: usize,
}

impl ChartOpts {
    fn params(&self, m0: usize, p: usize, seed: u64) -> ChartParams {
        ChartParams {
            m0,
            w_min: self.w_min,
            w_max: self.w_max,
            lambda: self.lambda,
            alpha: self.alpha,
            p,
            permutations: self.permutations,
            exact_limit: self.exact_limit,
            history: self.history,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct ChartArgs {
    /// Phase-I registry: one spectrum per row.
    #[arg(long)]
    baseline: PathBuf,
    /// Phase-II inputs in order: spectrum CSVs, registries, or part files.
    #[arg(long, required = true, num_args = 1..)]
    stream: Vec<PathBuf>,
    /// Monitored eigenvalues; defaults to the baseline row length.
    #[arg(long)]
    p: Option<usize>,
    #[command(flatten)]
    chart: ChartOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep charting after the first signal.
    #[arg(long = "continue")]
    keep_going: bool,
    /// Basis order for part files in the stream.
    #[arg(long, value_enum, default_value = "linear")]
    order: OrderArg,
    /// Boundary condition for part files; closed meshes default to closed, others to dirichlet.
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Phase-II parts; the in-control family uses delta 0 and rx 8.
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "linear")]
    order: OrderArg,
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    /// Monitored eigenvalues.
    #[arg(long, default_value_t = 15)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    m0: usize,
    #[command(flatten)]
    chart: ChartOpts,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Phase-II parts after which a replication is censored.
    #[arg(long, default_value_t = 10_000)]
    cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to LBSPEC_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Pre-generate this many parts per side and resample them instead of generating fresh
    /// parts for every draw.
    #[arg(long)]
    pool: Option<usize>,
    /// Scenario label in the report.
    #[arg(long)]
    label: Option<String>,
    /// Report file; appended to if it exists.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MdsArgs {
    /// Spectrum CSVs or registries.
    #[arg(long, required = true, num_args = 1..)]
    spectra: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Use only the leading k values of each spectrum.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Chart(a) => cmd_chart(a),
        Command::SimulateRl(a) => cmd_simulate_rl(a),
        Command::Mds(a) => cmd_mds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

type Result<T> = lbspec::Result<T>;

enum LoadedPart {
    Mesh(TriangleMesh),
    Voxels(VoxelGrid),
}

impl LoadedPart {
    fn as_part(&self) -> Part<'_> {
        match self {
            LoadedPart::Mesh(m) => Part::Mesh(m),
            LoadedPart::Voxels(g) => Part::Voxels(g),
        }
    }
}

fn load_part(path: &Path) -> Result<LoadedPart> {
    let text = fs::read_to_string(path)?;
    let is_off = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("OFF"));
    if is_off {
        Ok(LoadedPart::Mesh(parse_off(&text)?))
    } else {
        Ok(LoadedPart::Voxels(parse_voxgrid(&text)?))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<()> {
    if a.input.len() > 1 && a.registry.is_none() {
        return Err(Error::InvalidArgument(
            "several inputs need --registry".into(),
        ));
    }
    if a.input.len() > 1 && a.out.is_some() {
        return Err(Error::InvalidArgument(
            "--out takes a single input; use --registry".into(),
        ));
    }
    let bc: BoundaryCondition = a.bc.into();
    let skip = usize::from(a.registry.is_some() && bc != BoundaryCondition::Dirichlet);
    let mut cfg = SpectrumConfig::new(a.order.into(), bc, a.k + skip);
    cfg.tol = a.tol;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let mut rows = Vec::with_capacity(a.input.len());
    let stdout = io::stdout();
    let mut so = stdout.lock();
    for path in &a.input {
        let part = load_part(path)?;
        let spec = compute_spectrum(part.as_part(), &cfg)?;
        writeln!(so, "# {} ({} dof)", path.display(), spec.n)?;
        writeln!(so, "index,eigenvalue,residual")?;
        for (i, (v, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
            writeln!(so, "{},{v:.16e},{r:.3e}", i + 1)?;
        }
        let worst = spec.residuals.iter().cloned().fold(0.0, f64::max);
        writeln!(so, "# max residual {worst:.3e}")?;
        if spec.clamped > 0 {
            writeln!(so, "# {} slightly negative eigenvalues clamped to 0", spec.clamped)?;
        }
        rows.push(spec.eigenvalues);
    }
    if let Some(out) = &a.out {
        let mut w = BufWriter::new(File::create(out)?);
        write_spectrum_csv(&rows[0][..a.k], &mut w)?;
        w.flush()?;
    }
    if let Some(reg) = &a.registry {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r[skip..].to_vec()).collect();
        let mut w = BufWriter::new(File::create(reg)?);
        lbspec::chart::write_baseline_csv(&rows, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn write_generated<W: Write>(part: &GeneratedPart, w: W) -> Result<()> {
    match part {
        GeneratedPart::Mesh(m) => write_off(m, w),
        GeneratedPart::Voxels(g) => write_voxgrid(g, w),
    }
}

fn batch_path(out: &Path, i: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("part");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{i:03}.{ext}"),
        None => format!("{stem}_{i:03}"),
    };
    out.with_file_name(name)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let spec = a.scenario.spec()?;
    if a.count == 0 {
        return Err(Error::InvalidArgument("--count must be at least 1".into()));
    }
    if a.count == 1 {
        let part = spec.generate(a.seed)?;
        let mut w = output(a.out.as_deref())?;
        write_generated(&part, &mut w)?;
        w.flush()?;
        return Ok(());
    }
    let Some(out) = &a.out else {
        return Err(Error::InvalidArgument("--count > 1 needs --out".into()));
    };
    for i in 0..a.count {
        let part = spec.generate(derive_seed(a.seed, &[i as u64]))?;
        let path = batch_path(out, i);
        let mut w = BufWriter::new(File::create(&path)?);
        write_generated(&part, &mut w)?;
        w.flush()?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

/// Spectra in a file: a single `index,eigenvalue` spectrum or a registry of rows.
fn read_spectra_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    if first.is_some_and(|l| l.starts_with("index")) {
        Ok(vec![read_spectrum_csv(BufReader::new(text.as_bytes()))?])
    } else {
        read_baseline_csv(BufReader::new(text.as_bytes()))
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn cmd_chart(a: ChartArgs) -> Result<()> {
    let baseline = read_baseline_csv(BufReader::new(File::open(&a.baseline)?))?;
    if baseline.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "baseline {} has no spectra",
            a.baseline.display()
        )));
    }
    let p = a.p.unwrap_or(baseline[0].len());
    let params = a.chart.params(baseline.len(), p, a.seed);
    let mut state = ChartState::new(params, baseline)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "part,T_n,p_value,signal")?;
    let mut part_no = 0usize;
    'files: for path in &a.stream {
        let spectra = if is_csv(path) {
            read_spectra_file(path)?
        } else {
            let part = load_part(path)?;
            let bc = match (a.bc, &part) {
                (Some(b), _) => b.into(),
                (None, LoadedPart::Mesh(m)) if m.is_closed() => BoundaryCondition::Closed,
                (None, _) => BoundaryCondition::Dirichlet,
            };
            let cfg = SpectrumConfig::new(a.order.into(), bc, p);
            vec![monitored_spectrum(part.as_part(), &cfg)?]
        };
        for s in spectra {
            if s.len() < p {
                return Err(Error::DimensionMismatch(format!(
                    "{} has {} values, the chart monitors p = {p}",
                    path.display(),
                    s.len()
                )));
            }
            part_no += 1;
            let r = state.step(s)?;
            writeln!(
                w,
                "{part_no},{:.16e},{:.16e},{}",
                r.statistic,
                r.p_value,
                u8::from(r.signal)
            )?;
            if r.signal && !a.keep_going {
                break 'files;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct GeneratorSource {
    in_control: ScenarioSpec,
    out_of_control: ScenarioSpec,
    cfg: SpectrumConfig,
}

impl GeneratorSource {
    fn draw(&self, spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let part = spec.generate(rng.random())?;
        monitored_spectrum(part.as_part(), &self.cfg)
    }
}

impl SpectrumSource for GeneratorSource {
    fn in_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.draw(&self.in_control, rng)
    }

    fn out_of_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.draw(&self.out_of_control, rng)
    }
}

fn default_label(s: &ScenarioArgs) -> String {
    match s.family {
        FamilyArg::VoxelHole => match s.max_noise {
            Some(m) => format!("voxel-hole-rx{}-noise{m}", s.rx),
            None => format!("voxel-hole-rx{}", s.rx),
        },
        f => format!(
            "{}-delta{}",
            f.to_possible_value().map_or("part".into(), |v| v.get_name().to_string()),
            s.delta
        ),
    }
}

fn cmd_simulate_rl(a: SimulateArgs) -> Result<()> {
    let oc = a.scenario.spec()?;
    let ic = a.scenario.in_control().spec()?;
    let bc = a.bc.map_or_else(|| a.scenario.default_bc(), Into::into);
    let cfg = SpectrumConfig::new(a.order.into(), bc, a.p);
    let source = GeneratorSource {
        in_control: ic,
        out_of_control: oc,
        cfg,
    };
    let params = a.chart.params(a.m0, a.p, a.seed);
    let rl = RunLengthConfig {
        reps: a.reps,
        seed: a.seed,
        cap: a.cap,
        threads: a.threads,
    };
    let report = match a.pool {
        Some(n) => {
            if n == 0 {
                return Err(Error::InvalidArgument("--pool must be at least 1".into()));
            }
            let mut rng = substream(derive_seed(a.seed, &[0x706f_6f6c]), 0);
            let ic: Vec<_> = (0..n)
                .map(|_| source.in_control(&mut rng))
                .collect::<Result<_>>()?;
            let oc: Vec<_> = (0..n)
                .map(|_| source.out_of_control(&mut rng))
                .collect::<Result<_>>()?;
            run_length_simulation(&PooledSource::new(ic, oc)?, &params, &rl)?
        }
        None => run_length_simulation(&source, &params, &rl)?,
    };
    let label = a.label.unwrap_or_else(|| default_label(&a.scenario));
    let mut row = Vec::new();
    report.write_csv_row(&label, &mut row)?;
    let header = lbspec::chart::runlength::REPORT_HEADER;
    print!("{header}\n{}", String::from_utf8_lossy(&row));
    if let Some(out) = &a.out {
        let fresh = !out.exists();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(out)?;
        if fresh {
            writeln!(f, "{header}")?;
        }
        f.write_all(&row)?;
    }
    Ok(())
}

fn cmd_mds(a: MdsArgs) -> Result<()> {
    let mut ids = Vec::new();
    let mut spectra = Vec::new();
    for path in &a.spectra {
        let rows = read_spectra_file(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("part")
            .to_string();
        let many = rows.len() > 1;
        for (i, r) in rows.into_iter().enumerate() {
            ids.push(if many { format!("{stem}#{}", i + 1) } else { stem.clone() });
            spectra.push(r);
        }
    }
    if let Some(k) = a.k {
        for (id, s) in ids.iter().zip(spectra.iter_mut()) {
            if s.len() < k {
                return Err(Error::DimensionMismatch(format!(
                    "{id} has {} values, --k is {k}",
                    s.len()
                )));
            }
            s.truncate(k);
        }
    }
    let coords = classical_mds(&spectra, a.dim)?;
    let mut w = output(a.out.as_deref())?;
    write_mds_csv(&ids, &coords, &mut w)?;
    w.flush()?;
    Ok(())
}
