//! End-to-end spectra: assembly plus eigensolve, closed-form reference spectra, and classical
//! multidimensional scaling of spectrum collections.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use faer::{Mat, Side};

use crate::eigen::{nested_dissection, smallest_eigenpairs, EigenOptions, Spectrum};
use crate::error::{Error, Result};
use crate::fem::{assemble_surface, assemble_voxel, BasisOrder, BoundaryCondition, FemSystem};
use crate::geom::{TriangleMesh, VoxelGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub order: BasisOrder,
    pub bc: BoundaryCondition,
    /// Number of eigenvalues, including the zero eigenvalue of closed and Neumann parts.
    pub k: usize,
    pub tol: f64,
    /// Seed of the eigensolver's starting block.
    pub seed: u64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            order: BasisOrder::Linear,
            bc: BoundaryCondition::Closed,
            k: 15,
            tol: 1e-8,
            seed: EigenOptions::default().seed,
        }
    }
}

impl SpectrumConfig {
    pub fn new(order: BasisOrder, bc: BoundaryCondition, k: usize) -> Self {
        Self {
            order,
            bc,
            k,
            ..Self::default()
        }
    }
}

/// A part to be analysed.
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    Mesh(&'a TriangleMesh),
    Voxels(&'a VoxelGrid),
}

impl<'a> From<&'a TriangleMesh> for Part<'a> {
    fn from(m: &'a TriangleMesh) -> Self {
        Part::Mesh(m)
    }
}

impl<'a> From<&'a VoxelGrid> for Part<'a> {
    fn from(g: &'a VoxelGrid) -> Self {
        Part::Voxels(g)
    }
}

/// Assembles the reduced stiffness/mass pair of a part.
pub fn assemble<'a>(part: impl Into<Part<'a>>, cfg: &SpectrumConfig) -> Result<FemSystem> {
    match part.into() {
        Part::Mesh(mesh) => {
            if cfg.bc == BoundaryCondition::Dirichlet && mesh.is_closed() {
                return Err(Error::BoundaryMismatch(
                    "dirichlet condition requires a mesh with boundary edges".into(),
                ));
            }
            assemble_surface(mesh, cfg.order, cfg.bc)
        }
        Part::Voxels(grid) => assemble_voxel(grid, cfg.order, cfg.bc),
    }
}

/// The `cfg.k` smallest eigenvalues of the Laplace–Beltrami operator on a part.
pub fn compute_spectrum<'a>(part: impl Into<Part<'a>>, cfg: &SpectrumConfig) -> Result<Spectrum> {
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let sys = assemble(part, cfg)?;
    solve_system(&sys, cfg)
}

/// The `cfg.k` eigenvalues fed to the control chart: the leading ones under Dirichlet
/// conditions, otherwise the ones following the constant mode's zero eigenvalue.
pub fn monitored_spectrum<'a>(part: impl Into<Part<'a>>, cfg: &SpectrumConfig) -> Result<Vec<f64>> {
    if cfg.bc == BoundaryCondition::Dirichlet {
        return Ok(compute_spectrum(part, cfg)?.eigenvalues);
    }
    let wider = SpectrumConfig {
        k: cfg.k + 1,
        ..cfg.clone()
    };
    let mut ev = compute_spectrum(part, &wider)?.eigenvalues;
    ev.remove(0);
    Ok(ev)
}

/// Systems at least this large are ordered by nested dissection before factorization.
pub const ND_THRESHOLD: usize = 20_000;

/// Eigenvalues of an already assembled system.
pub fn solve_system(sys: &FemSystem, cfg: &SpectrumConfig) -> Result<Spectrum> {
    if cfg.k > sys.dim() {
        return Err(Error::InvalidArgument(format!(
            "k = {} exceeds the {} degrees of freedom",
            cfg.k,
            sys.dim()
        )));
    }
    // minimum degree fills badly on large 3D meshes
    let fill_ordering = if sys.dim() >= ND_THRESHOLD {
        Some(nested_dissection(&sys.stiffness, &sys.dof_positions())?)
    } else {
        None
    };
    let opts = EigenOptions {
        tol: cfg.tol,
        seed: cfg.seed,
        shift: (sys.bc == BoundaryCondition::Dirichlet).then_some(0.0),
        fill_ordering,
        ..EigenOptions::default()
    };
    log::debug!(
        "solving {} eigenvalues of a {}-dof {} system",
        cfg.k,
        sys.dim(),
        sys.bc
    );
    smallest_eigenpairs(&sys.stiffness, &sys.mass, cfg.k, &opts)
}

/// Euclidean distance between the leading entries of two spectra.
pub fn spectrum_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Shapes with closed-form spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticShape {
    /// Surface of a sphere: `l(l+1)/R²` with multiplicity `2l+1`.
    SphereSurface { radius: f64 },
    /// Solid ball: `(j_{l,n}/R)²` with multiplicity `2l+1`.
    Ball { radius: f64 },
    Cube { side: f64 },
    Cuboid { a: f64, b: f64, c: f64 },
    /// Solid cylinder: `(α_{m,n}/R)² + (pπ/H)²`, doubled for `m ≥ 1`.
    Cylinder { radius: f64, height: f64 },
}

/// The `k` smallest eigenvalues of a shape, multiplicities expanded, ascending.
pub fn analytic_spectrum(
    shape: AnalyticShape,
    bc: BoundaryCondition,
    k: usize,
) -> Result<Vec<f64>> {
    use AnalyticShape::*;
    let dims: Vec<f64> = match shape {
        SphereSurface { radius } | Ball { radius } => vec![radius],
        Cube { side } => vec![side],
        Cuboid { a, b, c } => vec![a, b, c],
        Cylinder { radius, height } => vec![radius, height],
    };
    if dims.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "shape dimensions must be positive: {shape:?}"
        )));
    }
    let unsupported = || {
        Err(Error::Unsupported(format!(
            "no closed form for {shape:?} with {bc} condition"
        )))
    };
    match (shape, bc) {
        (SphereSurface { radius }, BoundaryCondition::Closed) => Ok(sphere_surface(radius, k)),
        (Cube { side }, BoundaryCondition::Dirichlet | BoundaryCondition::Neumann) => {
            Ok(box_spectrum([side; 3], bc == BoundaryCondition::Neumann, k))
        }
        (Cuboid { a, b, c }, BoundaryCondition::Dirichlet | BoundaryCondition::Neumann) => {
            Ok(box_spectrum([a, b, c], bc == BoundaryCondition::Neumann, k))
        }
        (Ball { radius }, BoundaryCondition::Dirichlet) => Ok(ball(radius, k)),
        (Cylinder { radius, height }, BoundaryCondition::Dirichlet) => {
            Ok(cylinder(radius, height, k))
        }
        _ => unsupported(),
    }
}

fn sphere_surface(r: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let mut l = 0u32;
    while out.len() < k {
        let v = f64::from(l * (l + 1)) / (r * r);
        for _ in 0..2 * l + 1 {
            out.push(v);
        }
        l += 1;
    }
    out.truncate(k);
    out
}

fn box_spectrum(d: [f64; 3], neumann: bool, k: usize) -> Vec<f64> {
    let start = usize::from(!neumann);
    // grow the index range until every value below the k-th is enumerated
    let mut m = 2;
    loop {
        let mut vals = Vec::new();
        for i in start..=m {
            for j in start..=m {
                for l in start..=m {
                    let (a, b, c) = (i as f64 / d[0], j as f64 / d[1], l as f64 / d[2]);
                    vals.push(PI * PI * (a * a + b * b + c * c));
                }
            }
        }
        vals.sort_by(f64::total_cmp);
        // anything with an index above m is at least (π(m+1)/max d)²
        let largest_dim = d.iter().cloned().fold(0.0, f64::max);
        let floor = (PI * (m + 1) as f64 / largest_dim).powi(2);
        if vals.len() >= k && vals[k - 1] < floor {
            vals.truncate(k);
            return vals;
        }
        m *= 2;
    }
}

/// Spherical Bessel `j_l(x)` by upward recurrence, accurate for `x ≳ l`.
pub fn spherical_bessel_j(l: u32, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if l == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = s / (x * x) - c / x;
    for n in 1..l {
        let next = f64::from(2 * n + 1) / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Bessel `J_m(x) = (1/2π) ∫₀^{2π} cos(mτ − x sin τ) dτ`; the trapezoid rule on this periodic
/// integrand converges geometrically once the node count exceeds `x + m`.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let n = (2.0 * (x.abs() + f64::from(m)) + 64.0) as usize;
    let h = 2.0 * PI / n as f64;
    let s: f64 = (0..n)
        .map(|i| {
            let t = i as f64 * h;
            (f64::from(m) * t - x * t.sin()).cos()
        })
        .sum();
    s / n as f64
}

/// Positive zeros of `f` on `(lo, hi]`, bracketed on a fine grid and bisected.
fn zeros_below(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let step = 0.05;
    let mut out = Vec::new();
    let mut a = lo.max(1e-6);
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                let fm = f(mid);
                if fm == 0.0 || x1 - x0 < 1e-14 * mid {
                    x0 = mid;
                    x1 = mid;
                    break;
                }
                if f0 * fm < 0.0 {
                    x1 = mid;
                } else {
                    x0 = mid;
                    f0 = fm;
                }
            }
            out.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    out
}

/// Zeros of `j_l` below `hi`.
pub fn spherical_bessel_zeros(l: u32, hi: f64) -> Vec<f64> {
    if l == 0 {
        return (1..).map(|n| n as f64 * PI).take_while(|&z| z <= hi).collect();
    }
    // j_l has no zeros in (0, l]
    zeros_below(|x| spherical_bessel_j(l, x), f64::from(l), hi)
}

/// Zeros of `J_m` below `hi`.
pub fn bessel_zeros(m: u32, hi: f64) -> Vec<f64> {
    zeros_below(|x| bessel_j(m, x), f64::from(m).max(0.5), hi)
}

/// Collects `(value, multiplicity)` pairs below a growing bound until `k` values are certain.
fn expand_until(k: usize, mut gen: impl FnMut(f64) -> Vec<(f64, usize)>, mut bound: f64) -> Vec<f64> {
    loop {
        let mut vals: Vec<f64> = gen(bound)
            .into_iter()
            .flat_map(|(v, mult)| std::iter::repeat_n(v, mult))
            .collect();
        vals.sort_by(f64::total_cmp);
        if vals.len() >= k {
            vals.truncate(k);
            return vals;
        }
        bound *= 1.5;
    }
}

fn ball(r: f64, k: usize) -> Vec<f64> {
    // bound is on x = √λ·R
    expand_until(
        k,
        |hi| {
            let mut out = Vec::new();
            let mut l = 0u32;
            while f64::from(l) < hi {
                for z in spherical_bessel_zeros(l, hi) {
                    out.push(((z / r).powi(2), 2 * l as usize + 1));
                }
                l += 1;
            }
            out
        },
        8.0,
    )
}

fn cylinder(r: f64, h: f64, k: usize) -> Vec<f64> {
    // bound is on √λ
    expand_until(
        k,
        |hi| {
            let mut out = Vec::new();
            let axial: Vec<f64> = (1..)
                .map(|p| (p as f64 * PI / h).powi(2))
                .take_while(|&a| a < hi * hi)
                .collect();
            let mut m = 0u32;
            while f64::from(m) < hi * r {
                for z in bessel_zeros(m, hi * r) {
                    let radial = (z / r).powi(2);
                    for &a in &axial {
                        if radial + a < hi * hi {
                            out.push((radial + a, if m == 0 { 1 } else { 2 }));
                        }
                    }
                }
                m += 1;
            }
            out
        },
        (8.0 / r).max(8.0 / h),
    )
}

/// Classical (Torgerson) multidimensional scaling of spectra into `dim` coordinates.
pub fn classical_mds(spectra: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let n = spectra.len();
    if dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be ≥ 1".into()));
    }
    if n < dim + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} spectra for a {dim}-dimensional embedding, got {n}",
            dim + 1
        )));
    }
    let len = spectra[0].len();
    if let Some(s) = spectra.iter().find(|s| s.len() != len) {
        return Err(Error::DimensionMismatch(format!(
            "spectra have lengths {len} and {}",
            s.len()
        )));
    }
    let d2 = Mat::from_fn(n, n, |i, j| {
        spectra[i]
            .iter()
            .zip(&spectra[j])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    });
    let row_mean: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| d2[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let bmat = Mat::from_fn(n, n, |i, j| {
        -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + grand)
    });
    let evd = bmat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            tol: 0.0,
            achieved: vec![],
        })?;
    let top = evd.S()[n - 1].max(0.0);
    let mut coords = vec![vec![0.0; dim]; n];
    let mut rank = 0;
    for c in 0..dim {
        let idx = n - 1 - c;
        let lam = evd.S()[idx];
        if !(lam > 1e-12 * top) {
            continue;
        }
        rank += 1;
        let s = lam.sqrt();
        for (i, row) in coords.iter_mut().enumerate() {
            row[c] = evd.U()[(i, idx)] * s;
        }
    }
    if rank < dim {
        log::warn!("configuration has rank {rank} < {dim}; trailing coordinates are zero");
    }
    Ok(coords)
}

/// Mean silhouette coefficient of labelled points (Euclidean distance). Points in singleton
/// clusters score 0.
pub fn silhouette_score(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} points but {} labels",
            labels.len()
        )));
    }
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() < 2 {
        return Err(Error::InvalidArgument(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let dist = |a: &[f64], b: &[f64]| spectrum_distance(a, b);
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![(0.0, 0usize); clusters.len()];
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = clusters.binary_search(&labels[j]).unwrap();
            sums[c].0 += dist(&points[i], &points[j]);
            sums[c].1 += 1;
        }
        let own = clusters.binary_search(&labels[i]).unwrap();
        if sums[own].1 == 0 {
            continue;
        }
        let a = sums[own].0 / sums[own].1 as f64;
        let b = sums
            .iter()
            .enumerate()
            .filter(|&(c, s)| c != own && s.1 > 0)
            .map(|(_, s)| s.0 / s.1 as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

/// Writes `index,eigenvalue` rows (1-based) with 17 significant digits.
pub fn write_spectrum_csv<W: Write>(eigenvalues: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "index,eigenvalue")?;
    for (i, v) in eigenvalues.iter().enumerate() {
        writeln!(out, "{},{:.16e}", i + 1, v)?;
    }
    Ok(())
}

/// Reads a spectrum written by [`write_spectrum_csv`].
pub fn read_spectrum_csv<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("index")) {
            continue;
        }
        let v = line
            .split(',')
            .nth(1)
            .ok_or_else(|| Error::parse(n + 1, "expected index,eigenvalue"))?;
        out.push(
            v.trim()
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad eigenvalue {v:?}")))?,
        );
    }
    Ok(out)
}

/// Writes `part_id,x,y[,z]` rows.
pub fn write_mds_csv<W: Write>(ids: &[String], coords: &[Vec<f64>], mut out: W) -> Result<()> {
    let dim = coords.first().map_or(0, Vec::len);
    let axes = ["x", "y", "z"];
    write!(out, "part_id")?;
    for a in axes.iter().take(dim) {
        write!(out, ",{a}")?;
    }
    writeln!(out)?;
    for (id, c) in ids.iter().zip(coords) {
        write!(out, "{id}")?;
        for v in c {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_first_value() {
        let v = analytic_spectrum(AnalyticShape::Cube { side: 1.0 }, BoundaryCondition::Dirichlet, 4)
            .unwrap();
        assert!((v[0] - 3.0 * PI * PI).abs() < 1e-12);
        // (1,1,2) has multiplicity three
        for x in &v[1..4] {
            assert!((x - 6.0 * PI * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_cube_starts_at_zero() {
        let v = analytic_spectrum(AnalyticShape::Cube { side: 1.0 }, BoundaryCondition::Neumann, 4)
            .unwrap();
        assert_eq!(v[0], 0.0);
        for x in &v[1..4] {
            assert!((x - PI * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn cuboid_matches_brute_force() {
        let (a, b, c) = (1.0, 1.0, 2.0);
        let got = analytic_spectrum(AnalyticShape::Cuboid { a, b, c }, BoundaryCondition::Dirichlet, 50)
            .unwrap();
        let mut all = Vec::new();
        for i in 1..30 {
            for j in 1..30 {
                for l in 1..30 {
                    all.push(PI * PI * ((i * i) as f64 / (a * a) + (j * j) as f64 / (b * b) + (l * l) as f64 / (c * c)));
                }
            }
        }
        all.sort_by(f64::total_cmp);
        for i in 0..50 {
            assert!((got[i] - all[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_surface_values() {
        let v = analytic_spectrum(
            AnalyticShape::SphereSurface { radius: 1.0 },
            BoundaryCondition::Closed,
            10,
        )
        .unwrap();
        assert_eq!(v, vec![0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0, 12.0]);
    }

    #[test]
    fn ball_first_value_is_pi_squared() {
        let v = analytic_spectrum(AnalyticShape::Ball { radius: 1.0 }, BoundaryCondition::Dirichlet, 4)
            .unwrap();
        assert!((v[0] - PI * PI).abs() < 1e-10);
        // j_{1,1} ≈ 4.493409457909064, multiplicity 3
        for x in &v[1..4] {
            assert!((x.sqrt() - 4.493_409_457_909_064).abs() < 1e-10);
        }
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 2.5) - 0.497_094_102_464_274_5).abs() < 1e-14);
        let z = bessel_zeros(0, 6.0);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-11);
        assert!((z[1] - 5.520_078_110_286_311).abs() < 1e-11);
        let z = bessel_zeros(1, 4.0);
        assert!((z[0] - 3.831_705_970_207_512).abs() < 1e-11);
        let z = spherical_bessel_zeros(2, 6.0);
        assert!((z[0] - 5.763_459_196_894_55).abs() < 1e-10);
    }

    #[test]
    fn cylinder_first_value() {
        let v = analytic_spectrum(
            AnalyticShape::Cylinder { radius: 1.0, height: 1.0 },
            BoundaryCondition::Dirichlet,
            3,
        )
        .unwrap();
        let a01 = 2.404_825_557_695_773f64;
        let a11 = 3.831_705_970_207_512f64;
        assert!((v[0] - (a01 * a01 + PI * PI)).abs() < 1e-9);
        assert!((v[1] - (a11 * a11 + PI * PI)).abs() < 1e-9);
        assert_eq!(v[1], v[2]);
    }

    #[test]
    fn unsupported_pairs() {
        assert!(analytic_spectrum(AnalyticShape::Ball { radius: 1.0 }, BoundaryCondition::Closed, 3).is_err());
        assert!(analytic_spectrum(AnalyticShape::Cube { side: -1.0 }, BoundaryCondition::Dirichlet, 3).is_err());
    }

    fn pairwise(p: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                out.push(spectrum_distance(&p[i], &p[j]));
            }
        }
        out
    }

    #[test]
    fn mds_equilateral_triangle() {
        let mut s = vec![vec![0.0; 15]; 3];
        s[1][0] = 1.0;
        s[2][0] = 0.5;
        s[2][3] = 3f64.sqrt() / 2.0;
        let c = classical_mds(&s, 2).unwrap();
        for d in pairwise(&c) {
            assert!((d - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mds_duplicates_coincide() {
        let s = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![4.0, -1.0]];
        let c = classical_mds(&s, 2).unwrap();
        assert!(spectrum_distance(&c[0], &c[1]) < 1e-12);
    }

    #[test]
    fn mds_requires_enough_points() {
        assert!(classical_mds(&[vec![1.0], vec![2.0]], 2).is_err());
        assert!(classical_mds(&[vec![1.0], vec![2.0, 1.0], vec![0.0]], 1).is_err());
    }

    #[test]
    fn silhouette_of_separated_clusters() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![10.1, 0.0],
        ];
        let s = silhouette_score(&pts, &[0, 0, 1, 1]).unwrap();
        assert!(s > 0.98);
        let s = silhouette_score(&pts, &[0, 1, 0, 1]).unwrap();
        assert!(s < 0.0);
    }

    #[test]
    fn spectrum_csv_roundtrip() {
        let v = vec![0.0, 2.000_000_000_000_001, 1e-300, 12.5];
        let mut buf = Vec::new();
        write_spectrum_csv(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,eigenvalue\n1,"));
        assert_eq!(read_spectrum_csv(&buf[..]).unwrap(), v);
    }

    #[test]
    fn mds_csv_header() {
        let mut buf = Vec::new();
        write_mds_csv(&["a".into(), "b".into()], &[vec![1.0, 2.0], vec![3.0, 4.0]], &mut buf)
            .unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("part_id,x,y\na,"));
    }

    #[test]
    fn monitored_spectrum_skips_the_constant_mode() {
        let mesh = crate::partgen::icosphere(2);
        let cfg = SpectrumConfig::new(BasisOrder::Linear, BoundaryCondition::Closed, 4);
        let full = compute_spectrum(&mesh, &SpectrumConfig { k: 5, ..cfg.clone() }).unwrap();
        let m = monitored_spectrum(&mesh, &cfg).unwrap();
        assert_eq!(m, full.eigenvalues[1..].to_vec());
        assert!((m[0] - 2.0).abs() < 0.1);
    }
}
