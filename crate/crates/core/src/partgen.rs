//! Seeded synthetic parts: icospheres, barrel-deformed cylinders, open variants and voxel cubes
//! with an elliptical through-hole, plus the coordinate noise models applied to them.
//!
//! Every generator is a pure function of its arguments and seed.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use faer::{Mat, Side};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::geom::{cross, dot, edge_key, norm, sub, Point3, TriangleMesh, VoxelGrid};
use crate::rng::seeded;
use crate::spectra::Part;

/// Nominal cylinder radius.
pub const CYLINDER_RADIUS: f64 = 10.0;
/// Nominal cylinder height.
pub const CYLINDER_HEIGHT: f64 = 50.0;
/// Vertices per side ring of the cylinder.
pub const CYLINDER_RING: usize = 46;
/// Number of side rings, including both rims.
pub const CYLINDER_SIDE_RINGS: usize = 38;
/// Concentric rings inside each cap, excluding the rim and the centre vertex.
pub const CYLINDER_CAP_RINGS: usize = 6;
/// Final vertex counts of closed barrel parts.
pub const BARREL_SIZES: RangeInclusive<usize> = 1995..=2005;
/// Final vertex counts of bottom-removed barrel parts.
pub const OPEN_BARREL_SIZES: RangeInclusive<usize> = 1856..=1866;
/// Default coordinate noise standard deviation.
pub const DEFAULT_SIGMA: f64 = 0.05;

/// Voxel part dimensions (x, y, z) in voxels.
pub const VOXEL_PART_DIMS: [usize; 3] = [20, 20, 10];
/// Semi-axis of the hole along y; `rx = 8` gives the circular nominal.
pub const VOXEL_HOLE_RY: f64 = 8.0;

/// Largest point set accepted by the dense correlated-noise factorization.
pub const CORRELATED_MAX_POINTS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    /// Independent `N(0, σ²)` on every coordinate.
    Isotropic { sigma: f64 },
    /// Per axis `k`, covariance `σ1² exp(−|p_ik − p_jk| / r_k)` between points plus `σ2²` on the
    /// diagonal; axes independent.
    Correlated {
        sigma1: f64,
        sigma2: f64,
        r: [f64; 3],
    },
    /// Deactivate then activate `Uniform{1..max_noise}` random boundary voxels.
    VoxelFlip { max_noise: u32 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Isotropic { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad("noise sigma must be finite and nonnegative")
            }
            NoiseModel::Correlated { sigma1, sigma2, r } => {
                if !(sigma1 >= 0.0 && sigma2 >= 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
                    bad("noise sigmas must be finite and nonnegative")
                } else if sigma1 > 0.0 && r.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    bad("correlation lengths must be positive")
                } else {
                    Ok(())
                }
            }
            NoiseModel::VoxelFlip { max_noise: 0 } => bad("max_noise must be at least 1"),
            _ => Ok(()),
        }
    }

    fn apply_to_mesh(&self, mesh: &TriangleMesh, rng: &mut ChaCha8Rng) -> Result<TriangleMesh> {
        let mut points = mesh.vertices().to_vec();
        match *self {
            NoiseModel::None => return Ok(mesh.clone()),
            NoiseModel::Isotropic { sigma } => apply_isotropic_noise(&mut points, sigma, rng),
            NoiseModel::Correlated { sigma1, sigma2, r } => {
                points = CorrelatedNoise::new(&points, sigma1, sigma2, r)?.apply(&points, rng);
            }
            NoiseModel::VoxelFlip { .. } => {
                return Err(Error::InvalidArgument(
                    "voxel-flip noise applies to voxel parts only".into(),
                ))
            }
        }
        TriangleMesh::new(points, mesh.triangles().to_vec())
    }
}

/// Region whose triangles are removed to create an open variant.
#[derive(Debug, Clone, PartialEq)]
pub enum HoleSpec {
    /// Triangles whose centroid has polar angle (from +z, about the origin) below the bound.
    SphericalCap { max_polar_deg: f64 },
    /// Triangles whose centroid lies below `z_max`.
    BottomCap { z_max: f64 },
}

impl HoleSpec {
    pub fn contains(&self, c: Point3) -> bool {
        match *self {
            HoleSpec::SphericalCap { max_polar_deg } => {
                let r = norm(c);
                r > 0.0 && (c[2] / r).clamp(-1.0, 1.0).acos() < max_polar_deg.to_radians()
            }
            HoleSpec::BottomCap { z_max } => c[2] < z_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Sphere { radius: f64, n_target: usize },
    Ellipsoid { axes: [f64; 3], n_target: usize },
    /// Closed cylinder with barrel defect amplitude `delta`.
    Barrel { delta: f64 },
    /// 20×20×10 voxel cube with an elliptical through-hole of semi-axes `rx` and 8.
    VoxelHole { rx: f64 },
}

/// A reproducible part family: geometry, final mesh size and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub family: Family,
    /// Region removed from mesh families before vertex deletion, giving an open variant.
    pub hole: Option<HoleSpec>,
    /// Final vertex count drawn uniformly from this range by random vertex deletion; `None`
    /// keeps the base mesh. Ignored for voxel parts.
    pub size_range: Option<RangeInclusive<usize>>,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedPart {
    Mesh(TriangleMesh),
    Voxels(VoxelGrid),
}

impl GeneratedPart {
    pub fn as_part(&self) -> Part<'_> {
        match self {
            GeneratedPart::Mesh(m) => Part::Mesh(m),
            GeneratedPart::Voxels(g) => Part::Voxels(g),
        }
    }
}

impl ScenarioSpec {
    /// Closed barrel cylinder with 1995–2005 vertices and `N(0, 0.05²)` noise.
    pub fn barrel(delta: f64) -> Self {
        Self {
            family: Family::Barrel { delta },
            hole: None,
            size_range: Some(BARREL_SIZES),
            noise: NoiseModel::Isotropic {
                sigma: DEFAULT_SIGMA,
            },
        }
    }

    /// Barrel cylinder without its bottom cap, 1856–1866 vertices, `N(0, 0.05²)` noise.
    pub fn open_barrel(delta: f64) -> Self {
        Self {
            family: Family::Barrel { delta },
            hole: Some(HoleSpec::BottomCap { z_max: 0.2 }),
            size_range: Some(OPEN_BARREL_SIZES),
            noise: NoiseModel::Isotropic {
                sigma: DEFAULT_SIGMA,
            },
        }
    }

    pub fn voxel_hole(rx: f64, max_noise: Option<u32>) -> Self {
        Self {
            family: Family::VoxelHole { rx },
            hole: None,
            size_range: None,
            noise: match max_noise {
                Some(m) => NoiseModel::VoxelFlip { max_noise: m },
                None => NoiseModel::None,
            },
        }
    }

    pub fn sphere(radius: f64, n_target: usize) -> Self {
        Self {
            family: Family::Sphere { radius, n_target },
            hole: None,
            size_range: None,
            noise: NoiseModel::Isotropic {
                sigma: DEFAULT_SIGMA,
            },
        }
    }

    pub fn ellipsoid(axes: [f64; 3], n_target: usize) -> Self {
        Self {
            family: Family::Ellipsoid { axes, n_target },
            hole: None,
            size_range: None,
            noise: NoiseModel::Isotropic {
                sigma: DEFAULT_SIGMA,
            },
        }
    }

    pub fn with_size_range(mut self, range: Option<RangeInclusive<usize>>) -> Self {
        self.size_range = range;
        self
    }

    pub fn with_hole(mut self, hole: Option<HoleSpec>) -> Self {
        self.hole = hole;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if let Some(r) = &self.size_range {
            if r.is_empty() {
                return Err(Error::InvalidArgument("mesh-size range is empty".into()));
            }
        }
        if self.hole.is_some() && matches!(self.family, Family::VoxelHole { .. }) {
            return Err(Error::InvalidArgument(
                "hole specs apply to mesh families only".into(),
            ));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        match &self.family {
            Family::Sphere { radius, n_target } if !positive(*radius) || *n_target < 12 => Err(
                Error::InvalidArgument("sphere needs radius > 0 and n_target >= 12".into()),
            ),
            Family::Ellipsoid { axes, n_target }
                if !axes.iter().all(|&a| positive(a)) || *n_target < 12 =>
            {
                Err(Error::InvalidArgument(
                    "ellipsoid needs positive axes and n_target >= 12".into(),
                ))
            }
            Family::Barrel { delta }
                if !(*delta >= 0.0 && delta.is_finite()) =>
            {
                Err(Error::InvalidArgument("delta must be finite and >= 0".into()))
            }
            Family::VoxelHole { .. }
                if !matches!(self.noise, NoiseModel::None | NoiseModel::VoxelFlip { .. }) =>
            {
                Err(Error::InvalidArgument(
                    "voxel parts take voxel-flip noise only".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<GeneratedPart> {
        self.validate()?;
        let mut rng = seeded(seed);
        let base = match &self.family {
            Family::Sphere { radius, n_target } => {
                let r = *radius;
                icosphere(closest_level(*n_target)).map_vertices(|p| p.map(|c| c * r))?
            }
            Family::Ellipsoid { axes, n_target } => {
                let a = *axes;
                icosphere(closest_level(*n_target))
                    .map_vertices(|p| [p[0] * a[0], p[1] * a[1], p[2] * a[2]])?
            }
            Family::Barrel { delta } => cylinder_mesh(*delta)?,
            Family::VoxelHole { rx } => {
                let max_noise = match self.noise {
                    NoiseModel::VoxelFlip { max_noise } => Some(max_noise),
                    _ => None,
                };
                return Ok(GeneratedPart::Voxels(voxel_part_with(*rx, max_noise, &mut rng)?));
            }
        };
        let base = match &self.hole {
            Some(hole) => gen_open_variant(&base, hole)?,
            None => base,
        };
        let mesh = match &self.size_range {
            Some(range) => {
                let target = rng.random_range(range.clone());
                delete_vertices(&base, target, &mut rng)?
            }
            None => base,
        };
        Ok(GeneratedPart::Mesh(self.noise.apply_to_mesh(&mesh, &mut rng)?))
    }
}

/// Four well-separated closed families of similar size, for embedding experiments.
pub fn mds_families() -> Vec<(&'static str, ScenarioSpec)> {
    let sizes = Some(1995..=2005);
    vec![
        ("sphere", ScenarioSpec::sphere(15.0, 2562).with_size_range(sizes.clone())),
        (
            "ellipsoid",
            ScenarioSpec::ellipsoid([22.0, 14.0, 10.0], 2562).with_size_range(sizes.clone()),
        ),
        ("cylinder", ScenarioSpec::barrel(0.0)),
        ("barrel", ScenarioSpec::barrel(100.0)),
    ]
}

// ---------------------------------------------------------------------------------------------
// Icospheres

/// Vertex count of an icosphere after `level` subdivisions.
pub fn icosphere_vertex_count(level: u32) -> usize {
    10 * 4usize.pow(level) + 2
}

fn closest_level(n_target: usize) -> u32 {
    (0..=8u32)
        .min_by_key(|&l| icosphere_vertex_count(l).abs_diff(n_target))
        .unwrap()
}

/// Unit icosphere obtained by `level` midpoint subdivisions of the icosahedron.
pub fn icosphere(level: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for p in vertices.iter_mut() {
        *p = unit(*p);
    }
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * triangles.len());
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriangleMesh::new(vertices, triangles).expect("icosphere is a valid mesh")
}

fn unit(p: Point3) -> Point3 {
    let n = norm(p);
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Unit icosphere with vertex count closest to `n_target`, then noise.
pub fn gen_sphere_mesh(n_target: usize, noise: &NoiseModel, seed: u64) -> Result<TriangleMesh> {
    if n_target < 12 {
        return Err(Error::InvalidArgument("n_target must be at least 12".into()));
    }
    noise.validate()?;
    let mesh = icosphere(closest_level(n_target));
    noise.apply_to_mesh(&mesh, &mut seeded(seed))
}

// ---------------------------------------------------------------------------------------------
// Cylinders

/// Radius of the barrel-deformed cylinder at height `h`.
pub fn barrel_radius(delta: f64, h: f64) -> f64 {
    CYLINDER_RADIUS + 0.05 * delta * (h * PI / CYLINDER_HEIGHT).sin()
}

/// Noise-free closed cylinder (radius 10, height 50) with the barrel deformation applied.
///
/// Layout: 38 side rings of 46 vertices, alternately rotated by half a step; each cap has six
/// inner rings of `round(46 i / 7)` vertices and a centre vertex; 2026 vertices in total.
pub fn cylinder_mesh(delta: f64) -> Result<TriangleMesh> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument("delta must be finite and >= 0".into()));
    }
    let mut vertices: Vec<Point3> = Vec::new();
    let ring = |count: usize, offset: f64, radius: f64, z: f64, vertices: &mut Vec<Point3>| {
        let start = vertices.len();
        for a in 0..count {
            let theta = 2.0 * PI * (a as f64 + offset) / count as f64;
            vertices.push([radius * theta.cos(), radius * theta.sin(), z]);
        }
        (start..start + count).collect::<Vec<usize>>()
    };
    let mut side = Vec::with_capacity(CYLINDER_SIDE_RINGS);
    for s in 0..CYLINDER_SIDE_RINGS {
        let z = CYLINDER_HEIGHT * s as f64 / (CYLINDER_SIDE_RINGS - 1) as f64;
        let offset = 0.5 * (s % 2) as f64;
        side.push(ring(CYLINDER_RING, offset, barrel_radius(delta, z), z, &mut vertices));
    }
    let cap_rings = CYLINDER_CAP_RINGS + 1;
    let mut caps = Vec::new();
    for z in [0.0, CYLINDER_HEIGHT] {
        let mut rings = vec![ring(1, 0.0, 0.0, z, &mut vertices)];
        for i in 1..cap_rings {
            let count = (CYLINDER_RING as f64 * i as f64 / cap_rings as f64).round() as usize;
            let radius = CYLINDER_RADIUS * i as f64 / cap_rings as f64;
            rings.push(ring(count, 0.5 * (i % 2) as f64, radius, z, &mut vertices));
        }
        caps.push(rings);
    }
    let mut triangles = Vec::new();
    for s in 1..CYLINDER_SIDE_RINGS {
        zip_rings(&side[s - 1], &side[s], &vertices, &mut triangles, |c| [c[0], c[1], 0.0]);
    }
    for (rings, rim, dir) in [
        (&caps[0], &side[0], -1.0),
        (&caps[1], &side[CYLINDER_SIDE_RINGS - 1], 1.0),
    ] {
        for i in 1..rings.len() {
            zip_rings(&rings[i - 1], &rings[i], &vertices, &mut triangles, |_| [0.0, 0.0, dir]);
        }
        zip_rings(&rings[rings.len() - 1], rim, &vertices, &mut triangles, |_| [0.0, 0.0, dir]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Triangulates the band between two rings whose vertices are listed by increasing angle
/// about the z axis, orienting each triangle along `outward(centroid)`.
fn zip_rings(
    a: &[usize],
    b: &[usize],
    pos: &[Point3],
    out: &mut Vec<[usize; 3]>,
    outward: impl Fn(Point3) -> Point3,
) {
    let mut push = |t: [usize; 3]| {
        let p = [pos[t[0]], pos[t[1]], pos[t[2]]];
        let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let c = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
            (p[0][2] + p[1][2] + p[2][2]) / 3.0,
        ];
        if dot(n, outward(c)) >= 0.0 {
            out.push(t);
        } else {
            out.push([t[0], t[2], t[1]]);
        }
    };
    let (a, b) = if a.len() == 1 { (b, a) } else { (a, b) };
    let (na, nb) = (a.len(), b.len());
    if nb == 1 {
        for i in 0..na {
            push([a[i], a[(i + 1) % na], b[0]]);
        }
        return;
    }
    let angle = |v: usize| pos[v][1].atan2(pos[v][0]);
    let wrap = |x: f64| x.rem_euclid(2.0 * PI);
    let a0 = angle(a[0]);
    let alpha = |i: usize| {
        if i == na {
            a0 + 2.0 * PI
        } else {
            a0 + wrap(angle(a[i]) - a0)
        }
    };
    let j0 = (0..nb)
        .min_by(|&x, &y| {
            let dx = wrap(angle(b[x]) - a0 + PI) - PI;
            let dy = wrap(angle(b[y]) - a0 + PI) - PI;
            dx.abs().total_cmp(&dy.abs())
        })
        .unwrap();
    let b0 = a0 + wrap(angle(b[j0]) - a0 + PI) - PI;
    let beta = |k: usize| {
        if k == nb {
            b0 + 2.0 * PI
        } else {
            b0 + wrap(angle(b[(j0 + k) % nb]) - b0)
        }
    };
    let (mut i, mut k) = (0, 0);
    while i < na || k < nb {
        if k == nb || (i < na && alpha(i + 1) < beta(k + 1)) {
            push([a[i], a[(i + 1) % na], b[(j0 + k) % nb]]);
            i += 1;
        } else {
            push([a[i % na], b[(j0 + k) % nb], b[(j0 + k + 1) % nb]]);
            k += 1;
        }
    }
}

/// Closed barrel cylinder thinned to a vertex count drawn from `size_range`, then noise.
pub fn gen_barrel_cylinder(
    delta: f64,
    size_range: RangeInclusive<usize>,
    noise: &NoiseModel,
    seed: u64,
) -> Result<TriangleMesh> {
    let spec = ScenarioSpec {
        family: Family::Barrel { delta },
        hole: None,
        size_range: Some(size_range),
        noise: noise.clone(),
    };
    match spec.generate(seed)? {
        GeneratedPart::Mesh(m) => Ok(m),
        GeneratedPart::Voxels(_) => unreachable!(),
    }
}

// ---------------------------------------------------------------------------------------------
// Open variants

/// Removes the triangles whose centroids fall inside `hole`.
pub fn gen_open_variant(mesh: &TriangleMesh, hole: &HoleSpec) -> Result<TriangleMesh> {
    let v = mesh.vertices();
    let remove: Vec<bool> = mesh
        .triangles()
        .iter()
        .map(|t| {
            let c = [0, 1, 2].map(|d| (v[t[0]][d] + v[t[1]][d] + v[t[2]][d]) / 3.0);
            hole.contains(c)
        })
        .collect();
    if !remove.contains(&true) {
        return Err(Error::Generator("hole spec removed no triangles".into()));
    }
    if remove.iter().all(|&r| r) {
        return Err(Error::Generator("hole spec removed every triangle".into()));
    }
    let open = mesh.without_triangles(&remove)?;
    if open.component_count() != 1 {
        return Err(Error::Generator(format!(
            "hole disconnects the mesh into {} components",
            open.component_count()
        )));
    }
    Ok(open)
}

// ---------------------------------------------------------------------------------------------
// Vertex deletion

struct Decimator {
    pos: Vec<Point3>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    incident: Vec<Vec<usize>>,
    edges: HashSet<(usize, usize)>,
}

impl Decimator {
    fn new(mesh: &TriangleMesh) -> Self {
        let mut incident = vec![Vec::new(); mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                incident[v].push(t);
            }
        }
        Self {
            pos: mesh.vertices().to_vec(),
            tris: mesh.triangles().to_vec(),
            alive: vec![true; mesh.num_triangles()],
            incident,
            edges: mesh.edges().into_iter().map(|[a, b]| (a, b)).collect(),
        }
    }

    fn normal(&self, t: [usize; 3]) -> Point3 {
        let p = t.map(|v| self.pos[v]);
        cross(sub(p[1], p[0]), sub(p[2], p[0]))
    }

    /// Mean-ratio quality in (0, 1]; 1 for an equilateral triangle.
    fn quality(&self, t: [usize; 3]) -> f64 {
        let p = t.map(|v| self.pos[v]);
        let e2: f64 = (0..3).map(|i| {
            let d = sub(p[(i + 1) % 3], p[i]);
            dot(d, d)
        }).sum();
        2.0 * 3f64.sqrt() * norm(self.normal(t)) / e2
    }

    /// Removes interior vertex `v` and fans its one-ring from the best admissible apex.
    fn try_remove(&mut self, v: usize) -> bool {
        let star: Vec<usize> = self.incident[v]
            .iter()
            .copied()
            .filter(|&t| self.alive[t])
            .collect();
        let d = star.len();
        if !(4..=16).contains(&d) {
            return false;
        }
        let mut next = std::collections::HashMap::with_capacity(d);
        let mut reference = [0.0; 3];
        for &t in &star {
            let tri = self.tris[t];
            let r = tri.iter().position(|&x| x == v).unwrap();
            next.insert(tri[(r + 1) % 3], tri[(r + 2) % 3]);
            let n = self.normal(tri);
            reference = [reference[0] + n[0], reference[1] + n[1], reference[2] + n[2]];
        }
        let mut ring = Vec::with_capacity(d);
        let mut cur = self.tris[star[0]]
            .iter()
            .copied()
            .find(|&x| x != v)
            .unwrap();
        for _ in 0..d {
            ring.push(cur);
            match next.get(&cur) {
                Some(&n) => cur = n,
                None => return false,
            }
        }
        if cur != ring[0] || ring.iter().collect::<HashSet<_>>().len() != d {
            return false;
        }
        let mut best: Option<(f64, Vec<[usize; 3]>)> = None;
        'apex: for a in 0..d {
            let apex = ring[a];
            for i in 2..d - 1 {
                if self.edges.contains(&edge_key(apex, ring[(a + i) % d])) {
                    continue 'apex;
                }
            }
            let fan: Vec<[usize; 3]> = (1..d - 1)
                .map(|i| [apex, ring[(a + i) % d], ring[(a + i + 1) % d]])
                .collect();
            let mut worst = f64::INFINITY;
            for &t in &fan {
                if dot(self.normal(t), reference) <= 0.0 {
                    continue 'apex;
                }
                worst = worst.min(self.quality(t));
            }
            if worst > 1e-3 && best.as_ref().is_none_or(|b| worst > b.0) {
                best = Some((worst, fan));
            }
        }
        let Some((_, fan)) = best else {
            return false;
        };
        for &t in &star {
            self.alive[t] = false;
        }
        for &r in &ring {
            self.edges.remove(&edge_key(v, r));
        }
        for t in fan {
            let id = self.tris.len();
            self.tris.push(t);
            self.alive.push(true);
            for &x in &t {
                self.incident[x].push(id);
            }
            for i in 0..3 {
                self.edges.insert(edge_key(t[i], t[(i + 1) % 3]));
            }
        }
        self.incident[v].clear();
        true
    }

    fn finish(self) -> Result<TriangleMesh> {
        let mut remap = vec![usize::MAX; self.pos.len()];
        let mut used = vec![false; self.pos.len()];
        for (t, tri) in self.tris.iter().enumerate() {
            if self.alive[t] {
                for &v in tri {
                    used[v] = true;
                }
            }
        }
        let mut vertices = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                remap[v] = vertices.len();
                vertices.push(self.pos[v]);
            }
        }
        let triangles = self
            .tris
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| a)
            .map(|(t, _)| t.map(|v| remap[v]))
            .collect();
        TriangleMesh::new(vertices, triangles)
    }
}

/// Deletes random interior vertices, re-triangulating each one-ring as a fan, until `target`
/// vertices remain. Boundary vertices are never removed and orientation is preserved.
pub fn delete_vertices(
    mesh: &TriangleMesh,
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TriangleMesh> {
    let n = mesh.num_vertices();
    if target >= n {
        return Ok(mesh.clone());
    }
    let boundary = mesh.boundary_vertex_mask();
    let mut candidates: Vec<usize> = (0..n).filter(|&v| !boundary[v]).collect();
    let mut dec = Decimator::new(mesh);
    let mut remaining = n;
    let mut failures = 0usize;
    while remaining > target {
        if candidates.is_empty() || failures > 100 * n {
            return Err(Error::Generator(format!(
                "could not delete vertices down to {target} (stuck at {remaining})"
            )));
        }
        let idx = rng.random_range(0..candidates.len());
        if dec.try_remove(candidates[idx]) {
            candidates.swap_remove(idx);
            remaining -= 1;
        } else {
            failures += 1;
        }
    }
    dec.finish()
}

// ---------------------------------------------------------------------------------------------
// Noise

/// Adds independent `N(0, σ²)` noise to every coordinate.
pub fn apply_isotropic_noise(points: &mut [Point3], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    let dist = Normal::new(0.0, sigma).expect("sigma is finite and nonnegative");
    for p in points.iter_mut() {
        for c in p.iter_mut() {
            *c += dist.sample(rng);
        }
    }
}

/// Factorized per-axis covariances of the spatially correlated noise model.
#[derive(Debug, Clone)]
pub struct CorrelatedNoise {
    n: usize,
    /// Lower Cholesky factors, one per axis; `None` when the covariance is diagonal.
    factors: [Option<Mat<f64>>; 3],
    sigma_diag: f64,
}

impl CorrelatedNoise {
    pub fn new(points: &[Point3], sigma1: f64, sigma2: f64, r: [f64; 3]) -> Result<Self> {
        NoiseModel::Correlated { sigma1, sigma2, r }.validate()?;
        let n = points.len();
        if n > CORRELATED_MAX_POINTS {
            return Err(Error::InvalidArgument(format!(
                "correlated noise supports at most {CORRELATED_MAX_POINTS} points, got {n}"
            )));
        }
        let total = sigma1 * sigma1 + sigma2 * sigma2;
        let mut factors = [None, None, None];
        if sigma1 > 0.0 {
            for (k, slot) in factors.iter_mut().enumerate() {
                let cov = Mat::from_fn(n, n, |i, j| {
                    if i == j {
                        total
                    } else {
                        sigma1 * sigma1 * (-(points[i][k] - points[j][k]).abs() / r[k]).exp()
                    }
                });
                *slot = Some(factorize(cov)?);
            }
        }
        Ok(Self {
            n,
            factors,
            sigma_diag: total.sqrt(),
        })
    }

    /// One noise draw, `n` displacement vectors.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<Point3> {
        let mut out = vec![[0.0; 3]; self.n];
        for k in 0..3 {
            let z: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(rng)).collect();
            match &self.factors[k] {
                Some(l) => {
                    for i in 0..self.n {
                        let mut s = 0.0;
                        for j in 0..=i {
                            s += l[(i, j)] * z[j];
                        }
                        out[i][k] = s;
                    }
                }
                None => {
                    for i in 0..self.n {
                        out[i][k] = self.sigma_diag * z[i];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, points: &[Point3], rng: &mut ChaCha8Rng) -> Vec<Point3> {
        let e = self.sample(rng);
        points
            .iter()
            .zip(e)
            .map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
            .collect()
    }
}

fn factorize(cov: Mat<f64>) -> Result<Mat<f64>> {
    for jitter in [0.0, 1e-14, 1e-12, 1e-10] {
        let mut c = cov.clone();
        for i in 0..c.nrows() {
            c[(i, i)] += jitter;
        }
        if let Ok(llt) = c.llt(Side::Lower) {
            return Ok(llt.L().to_owned());
        }
    }
    Err(Error::NotPositiveDefinite(
        "noise covariance is not factorizable after jitter 1e-10".into(),
    ))
}

/// Displaces `points` by one draw of the spatially correlated noise model.
pub fn apply_correlated_noise(
    points: &[Point3],
    sigma1: f64,
    sigma2: f64,
    r: [f64; 3],
    seed: u64,
) -> Result<Vec<Point3>> {
    Ok(CorrelatedNoise::new(points, sigma1, sigma2, r)?.apply(points, &mut seeded(seed)))
}

// ---------------------------------------------------------------------------------------------
// Voxel parts

/// Eccentricity `√(1 − (min/max)²)` of the hole cross-section with semi-axes `rx` and 8.
pub fn voxel_hole_eccentricity(rx: f64) -> f64 {
    let (lo, hi) = if rx < VOXEL_HOLE_RY {
        (rx, VOXEL_HOLE_RY)
    } else {
        (VOXEL_HOLE_RY, rx)
    };
    (1.0 - (lo / hi).powi(2)).sqrt()
}

/// 20×20×10 cube of unit voxels minus an elliptical through-hole along z, with optional
/// boundary-flip noise.
pub fn gen_voxel_part(rx: f64, max_noise: Option<u32>, seed: u64) -> Result<VoxelGrid> {
    voxel_part_with(rx, max_noise, &mut seeded(seed))
}

fn voxel_part_with(rx: f64, max_noise: Option<u32>, rng: &mut ChaCha8Rng) -> Result<VoxelGrid> {
    if !(rx > 0.0) {
        return Err(Error::InvalidArgument("rx must be positive".into()));
    }
    let half = VOXEL_PART_DIMS[0] as f64 / 2.0;
    if rx >= half {
        return Err(Error::Generator(format!(
            "hole semi-axis {rx} exceeds the cube half-width {half}"
        )));
    }
    if max_noise == Some(0) {
        return Err(Error::InvalidArgument("max_noise must be at least 1".into()));
    }
    let cy = VOXEL_PART_DIMS[1] as f64 / 2.0;
    let mut grid = VoxelGrid::from_fn(VOXEL_PART_DIMS, [1.0; 3], |i, j, _| {
        let x = (i as f64 + 0.5 - half) / rx;
        let y = (j as f64 + 0.5 - cy) / VOXEL_HOLE_RY;
        x * x + y * y >= 1.0
    })?;
    if let Some(m) = max_noise {
        let m1 = rng.random_range(1..=m) as usize;
        let active = boundary_voxels(&grid, true);
        for idx in sample(rng, active.len(), m1.min(active.len())) {
            let [i, j, k] = active[idx];
            grid.set(i, j, k, false);
        }
        let m2 = rng.random_range(1..=m) as usize;
        let inactive = boundary_voxels(&grid, false);
        for idx in sample(rng, inactive.len(), m2.min(inactive.len())) {
            let [i, j, k] = inactive[idx];
            grid.set(i, j, k, true);
        }
    }
    Ok(grid)
}

/// Active voxels with an inactive or outside face neighbour (`active = true`), or inactive
/// voxels with an active face neighbour (`active = false`), in index order.
fn boundary_voxels(grid: &VoxelGrid, active: bool) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = grid.dims();
    let mut out = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if grid.is_active(i, j, k) != active {
                    continue;
                }
                let (si, sj, sk) = (i as isize, j as isize, k as isize);
                let neighbours = [
                    (si - 1, sj, sk),
                    (si + 1, sj, sk),
                    (si, sj - 1, sk),
                    (si, sj + 1, sk),
                    (si, sj, sk - 1),
                    (si, sj, sk + 1),
                ];
                let hit = neighbours
                    .iter()
                    .any(|&(a, b, c)| grid.is_active_signed(a, b, c) != active);
                if hit {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}
