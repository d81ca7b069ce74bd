use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::voxel::{reference_nodes_thirds, VoxelNodeMap};

use super::BoundarySet;

/// Axis-aligned occupancy grid. Cell `(i, j, k)` is stored at `i + nx·(j + ny·k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], occupancy: Vec<bool>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be strictly positive, got {spacing:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        if occupancy.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "occupancy has {} cells, dims {dims:?} require {n}",
                occupancy.len()
            )));
        }
        Ok(Self {
            dims,
            spacing,
            occupancy,
        })
    }

    /// Grid with every cell set to `value`.
    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: bool) -> Result<Self> {
        Self::new(dims, spacing, vec![value; dims[0] * dims[1] * dims[2]])
    }

    /// Grid whose cells are active where `f(i, j, k)` holds.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        f: impl Fn(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut occ = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    occ.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, spacing, occ)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn is_active(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.index(i, j, k)]
    }

    /// Activity of a possibly out-of-range cell; cells outside the grid are inactive.
    pub fn is_active_signed(&self, i: isize, j: isize, k: isize) -> bool {
        if i < 0 || j < 0 || k < 0 {
            return false;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        i < self.dims[0] && j < self.dims[1] && k < self.dims[2] && self.is_active(i, j, k)
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, active: bool) {
        let idx = self.index(i, j, k);
        self.occupancy[idx] = active;
    }

    pub fn active_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    /// Active cells in storage order (x fastest).
    pub fn active_voxels(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(self.active_count());
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    if self.is_active(i, j, k) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    /// Same occupancy with every spacing multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.dims,
            self.spacing.map(|s| s * c),
            self.occupancy.clone(),
        )
    }
}

pub fn load_voxel_grid(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    parse_voxgrid(&fs::read_to_string(path)?)
}

/// Parses VOXGRID v1: `VOXGRID 1`, `dims nx ny nz`, `spacing s1 s2 s3`, then `nx·ny·nz`
/// characters from `{0,1}` in x-fastest order. Whitespace inside the payload is ignored.
pub fn parse_voxgrid(text: &str) -> Result<VoxelGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .find(|(_, l)| !l.is_empty())
            .ok_or_else(|| Error::parse(0, format!("missing {what} line")))
    };

    let (ln, magic) = next("header")?;
    let m: Vec<&str> = magic.split_whitespace().collect();
    if m.len() != 2 || m[0] != "VOXGRID" {
        return Err(Error::parse(ln, "expected \"VOXGRID 1\""));
    }
    if m[1] != "1" {
        return Err(Error::parse(ln, format!("unsupported VOXGRID version {}", m[1])));
    }

    let (ln, dims_line) = next("dims")?;
    let d: Vec<&str> = dims_line.split_whitespace().collect();
    if d.len() != 4 || d[0] != "dims" {
        return Err(Error::parse(ln, "expected \"dims nx ny nz\""));
    }
    let mut dims = [0usize; 3];
    for k in 0..3 {
        dims[k] = d[k + 1]
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad dimension {:?}", d[k + 1])))?;
    }

    let (ln, sp_line) = next("spacing")?;
    let s: Vec<&str> = sp_line.split_whitespace().collect();
    if s.len() != 4 || s[0] != "spacing" {
        return Err(Error::parse(ln, "expected \"spacing s1 s2 s3\""));
    }
    let mut spacing = [0f64; 3];
    for k in 0..3 {
        spacing[k] = s[k + 1]
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad spacing {:?}", s[k + 1])))?;
    }

    let mut occupancy = Vec::with_capacity(dims.iter().product());
    for (ln, l) in lines {
        for ch in l.chars().filter(|c| !c.is_whitespace()) {
            match ch {
                '0' => occupancy.push(false),
                '1' => occupancy.push(true),
                _ => return Err(Error::parse(ln, format!("invalid payload character {ch:?}"))),
            }
        }
    }
    VoxelGrid::new(dims, spacing, occupancy)
}

pub fn write_voxgrid<W: Write>(grid: &VoxelGrid, mut out: W) -> Result<()> {
    let [nx, ny, nz] = grid.dims();
    let [s1, s2, s3] = grid.spacing();
    writeln!(out, "VOXGRID 1")?;
    writeln!(out, "dims {nx} {ny} {nz}")?;
    writeln!(out, "spacing {s1:.16e} {s2:.16e} {s3:.16e}")?;
    // one x-row per line keeps files readable; the parser ignores the newlines
    for row in grid.occupancy().chunks(nx) {
        let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Nodes lying on a face of an active voxel whose neighbour across that face is inactive or
/// outside the grid.
pub fn voxel_boundary_nodes(grid: &VoxelGrid, nodes: &VoxelNodeMap) -> BoundarySet {
    let local = reference_nodes_thirds(nodes.order());
    let npe = local.len();
    let mut mask = vec![false; nodes.num_nodes()];
    for (e, v) in nodes.voxels().iter().enumerate() {
        let elem = &nodes.element_nodes()[e * npe..(e + 1) * npe];
        let [i, j, k] = v.map(|x| x as isize);
        for axis in 0..3 {
            for (side, coord) in [(-1isize, 0u8), (1, 3)] {
                let mut n = [i, j, k];
                n[axis] += side;
                if grid.is_active_signed(n[0], n[1], n[2]) {
                    continue;
                }
                for (l, r) in local.iter().enumerate() {
                    if r[axis] == coord {
                        mask[elem[l]] = true;
                    }
                }
            }
        }
    }
    BoundarySet::from_mask(&mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::voxel::voxel_node_map;
    use crate::fem::BasisOrder;

    #[test]
    fn parse_full_cube() {
        let g = parse_voxgrid("VOXGRID 1\ndims 2 2 2\nspacing 1 1 1\n11111111\n").unwrap();
        assert_eq!(g.active_count(), 8);
    }

    #[test]
    fn parse_pair_x_fastest() {
        let g = parse_voxgrid("VOXGRID 1\ndims 2 1 1\nspacing 0.5 1 1\n10\n").unwrap();
        assert_eq!(g.active_count(), 1);
        assert!(g.is_active(0, 0, 0));
        assert!(!g.is_active(1, 0, 0));
    }

    #[test]
    fn payload_whitespace_is_ignored() {
        let g = parse_voxgrid("VOXGRID 1\ndims 2 2 1\nspacing 1 1 1\n1 0\n0\n1\n").unwrap();
        assert_eq!(g.active_count(), 2);
        assert!(g.is_active(1, 1, 0));
    }

    #[test]
    fn short_payload_is_dimension_mismatch() {
        let err = parse_voxgrid("VOXGRID 1\ndims 2 2 2\nspacing 1 1 1\n1111\n").unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn bad_spacing_is_rejected() {
        assert!(parse_voxgrid("VOXGRID 1\ndims 1 1 1\nspacing 0 1 1\n1\n").is_err());
    }

    #[test]
    fn voxgrid_roundtrip() {
        let g = VoxelGrid::from_fn([3, 2, 2], [0.1, 0.2, 0.3], |i, j, k| (i + j + k) % 2 == 0)
            .unwrap();
        let mut buf = Vec::new();
        write_voxgrid(&g, &mut buf).unwrap();
        assert_eq!(parse_voxgrid(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn single_voxel_all_nodes_boundary() {
        let g = VoxelGrid::filled([1, 1, 1], [1.0; 3], true).unwrap();
        let map = voxel_node_map(&g, BasisOrder::Linear).unwrap();
        assert_eq!(voxel_boundary_nodes(&g, &map).len(), 8);
        let map = voxel_node_map(&g, BasisOrder::Cubic).unwrap();
        assert_eq!(voxel_boundary_nodes(&g, &map).len(), 32);
    }

    #[test]
    fn voxel_pair_has_no_interior_node() {
        let g = VoxelGrid::filled([2, 1, 1], [1.0; 3], true).unwrap();
        let map = voxel_node_map(&g, BasisOrder::Linear).unwrap();
        assert_eq!(map.num_nodes(), 12);
        assert_eq!(voxel_boundary_nodes(&g, &map).len(), 12);
    }

    #[test]
    fn full_cube_boundary_count_brute_force() {
        // enumerate lattice points directly: a node is interior iff all 8 incident cells exist
        for n in 1..=4usize {
            let g = VoxelGrid::filled([n, n, n], [1.0; 3], true).unwrap();
            let map = voxel_node_map(&g, BasisOrder::Linear).unwrap();
            let b = voxel_boundary_nodes(&g, &map);
            let mut interior = 0;
            for x in 0..=n {
                for y in 0..=n {
                    for z in 0..=n {
                        if [x, y, z].iter().all(|&c| c > 0 && c < n) {
                            interior += 1;
                        }
                    }
                }
            }
            assert_eq!(b.len(), (n + 1).pow(3) - interior);
            assert_eq!(b.len(), (n + 1).pow(3) - (n.saturating_sub(1)).pow(3));
        }
    }

    #[test]
    fn hole_faces_count_as_boundary() {
        // 3x3x3 block with the centre voxel removed: every node touches an exposed face
        let g = VoxelGrid::from_fn([3, 3, 3], [1.0; 3], |i, j, k| !(i == 1 && j == 1 && k == 1))
            .unwrap();
        let map = voxel_node_map(&g, BasisOrder::Linear).unwrap();
        assert_eq!(voxel_boundary_nodes(&g, &map).len(), 64);
    }
}
