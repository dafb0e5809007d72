//! Structured meshes of Ω and its interaction layer Γ, refinement and
//! geometric partitioning.
//!
//! Every node sits on an integer lattice (`Mesh::lattice`, spacing
//! `Mesh::unit`). Region tests and DOF classification are done on lattice
//! coordinates, which keeps them exact, and the assembly uses lattice offsets to
//! recognise translated copies of the same element pair.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Axis-aligned box. 2D boxes keep zero third coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BoundingBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo, hi }
    }

    /// Box spanned by a set of points.
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a [f64; 3]>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.include(p);
        }
        b
    }

    /// Inverted box that any `include` overwrites.
    pub fn empty() -> Self {
        Self { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] }
    }

    pub fn include(&mut self, p: &[f64; 3]) {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut b = *self;
        b.include(&other.lo);
        b.include(&other.hi);
        b
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|k| self.lo[k] <= p[k] && p[k] <= self.hi[k])
    }

    pub fn measure(&self, dim: usize) -> f64 {
        (0..dim).map(|k| self.hi[k] - self.lo[k]).product()
    }
}

/// Reference element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Quad,
    Tri,
    Hex,
}

impl ElementKind {
    pub fn n_vertices(self) -> usize {
        match self {
            ElementKind::Quad => 4,
            ElementKind::Tri => 3,
            ElementKind::Hex => 8,
        }
    }

    pub fn ref_dim(self) -> usize {
        match self {
            ElementKind::Hex => 3,
            _ => 2,
        }
    }

    /// Number of children of a midpoint split.
    pub fn n_children(self) -> usize {
        match self {
            ElementKind::Hex => 8,
            _ => 4,
        }
    }
}

/// Cell layout requested from [`build_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Quad,
    Tri,
    Mixed,
    Hex,
}

impl std::str::FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" => Ok(MeshKind::Quad),
            "tri" => Ok(MeshKind::Tri),
            "mixed" => Ok(MeshKind::Mixed),
            "hex" => Ok(MeshKind::Hex),
            _ => Err(Error::Unknown { what: "mesh kind", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Omega,
    Gamma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub kind: ElementKind,
    /// Vertices. Quads and hexes use tensor order (x fastest, then y, then z);
    /// triangles are counter-clockwise.
    pub node_ids: Vec<usize>,
    pub region: Region,
    pub bbox: BoundingBox,
}

/// Vertex coordinates of one element together with its reference map.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub id: usize,
    pub kind: ElementKind,
    pub verts: [[f64; 3]; 8],
}

impl ElementGeometry {
    pub fn new(id: usize, kind: ElementKind, verts: &[[f64; 3]]) -> Self {
        let mut v = [[0.0; 3]; 8];
        v[..verts.len()].copy_from_slice(verts);
        Self { id, kind, verts: v }
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.verts[..self.kind.n_vertices()]
    }

    /// Physical point and signed Jacobian determinant at a reference point.
    pub fn map_with_det(&self, r: &[f64; 3]) -> ([f64; 3], f64) {
        let v = &self.verts;
        match self.kind {
            ElementKind::Tri => {
                let mut x = [0.0; 3];
                for k in 0..3 {
                    x[k] = v[0][k] + (v[1][k] - v[0][k]) * r[0] + (v[2][k] - v[0][k]) * r[1];
                }
                let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
                (x, det)
            }
            ElementKind::Quad => {
                let (a0, a1) = (0.5 * (1.0 - r[0]), 0.5 * (1.0 + r[0]));
                let (b0, b1) = (0.5 * (1.0 - r[1]), 0.5 * (1.0 + r[1]));
                let n = [a0 * b0, a1 * b0, a0 * b1, a1 * b1];
                let dn_dr = [-0.5 * b0, 0.5 * b0, -0.5 * b1, 0.5 * b1];
                let dn_ds = [-0.5 * a0, -0.5 * a1, 0.5 * a0, 0.5 * a1];
                let mut x = [0.0; 3];
                let mut j = [[0.0; 2]; 2];
                for a in 0..4 {
                    for k in 0..3 {
                        x[k] += n[a] * v[a][k];
                    }
                    for k in 0..2 {
                        j[k][0] += dn_dr[a] * v[a][k];
                        j[k][1] += dn_ds[a] * v[a][k];
                    }
                }
                (x, j[0][0] * j[1][1] - j[0][1] * j[1][0])
            }
            ElementKind::Hex => {
                let f = |t: f64| [0.5 * (1.0 - t), 0.5 * (1.0 + t)];
                let (a, b, c) = (f(r[0]), f(r[1]), f(r[2]));
                let mut x = [0.0; 3];
                let mut j = [[0.0; 3]; 3];
                for idx in 0..8 {
                    let (i, jj, k) = (idx & 1, (idx >> 1) & 1, (idx >> 2) & 1);
                    let si = if i == 0 { -0.5 } else { 0.5 };
                    let sj = if jj == 0 { -0.5 } else { 0.5 };
                    let sk = if k == 0 { -0.5 } else { 0.5 };
                    let n = a[i] * b[jj] * c[k];
                    let d = [si * b[jj] * c[k], a[i] * sj * c[k], a[i] * b[jj] * sk];
                    for m in 0..3 {
                        x[m] += n * v[idx][m];
                        for q in 0..3 {
                            j[m][q] += d[q] * v[idx][m];
                        }
                    }
                }
                let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                    - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                    + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
                (x, det)
            }
        }
    }

    pub fn map(&self, r: &[f64; 3]) -> [f64; 3] {
        self.map_with_det(r).0
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::of_points(self.vertices())
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.kind.n_vertices() as f64;
        let mut c = [0.0; 3];
        for v in self.vertices() {
            for k in 0..3 {
                c[k] += v[k] / n;
            }
        }
        c
    }

    /// Area or volume (exact for the parallelogram/affine cells generated here).
    pub fn measure(&self) -> f64 {
        match self.kind {
            ElementKind::Tri => 0.5 * self.map_with_det(&[0.0; 3]).1.abs(),
            ElementKind::Quad => 4.0 * self.map_with_det(&[0.0; 3]).1.abs(),
            ElementKind::Hex => 8.0 * self.map_with_det(&[0.0; 3]).1.abs(),
        }
    }

    pub fn diameter(&self) -> f64 {
        let vs = self.vertices();
        let mut d: f64 = 0.0;
        for a in vs {
            for b in vs {
                d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
            }
        }
        d
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<[f64; 3]>,
    /// Integer node coordinates; `nodes[i] = origin + lattice[i] * unit`.
    pub lattice: Vec<[i64; 3]>,
    pub origin: [f64; 3],
    pub unit: f64,
    pub elements: Vec<Element>,
    /// Cell edge length.
    pub h: f64,
    pub omega_bounds: BoundingBox,
    /// Ω box on the lattice, `(lo, hi)`.
    pub omega_lattice: ([i64; 3], [i64; 3]),
    pub gamma_layers: usize,
}

fn commensurate(side: f64, h: f64) -> Result<i64> {
    let ratio = side / h;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::NonCommensurate { h, side, ratio });
    }
    Ok(n as i64)
}

/// Structured mesh of Ω surrounded by `ceil(layer_width / h)` rings of Γ cells.
pub fn build_mesh(dim: usize, omega_bounds: BoundingBox, h: f64, layer_width: f64, kind: MeshKind) -> Result<Mesh> {
    if !(h > 0.0) || !(layer_width >= 0.0) {
        return Err(Error::InvalidParameter(format!("h = {h}, layer width = {layer_width}")));
    }
    match (dim, kind) {
        (2, MeshKind::Hex) | (3, MeshKind::Quad | MeshKind::Tri | MeshKind::Mixed) => {
            return Err(Error::InvalidParameter(format!("mesh kind {kind:?} in {dim}D")));
        }
        (2 | 3, _) => {}
        _ => return Err(Error::InvalidParameter(format!("dimension {dim}"))),
    }
    let ratio = layer_width / h;
    let rings = if layer_width == 0.0 { 0 } else { (ratio - 1e-9 * ratio.max(1.0)).ceil() as i64 };
    let mut n_omega = [1i64; 3];
    for k in 0..dim {
        n_omega[k] = commensurate(omega_bounds.hi[k] - omega_bounds.lo[k], h)?;
    }
    let mut n_cells = [1i64; 3];
    let mut n_nodes = [1i64; 3];
    let mut origin = [0.0; 3];
    for k in 0..dim {
        n_cells[k] = n_omega[k] + 2 * rings;
        n_nodes[k] = n_cells[k] + 1;
        origin[k] = omega_bounds.lo[k] - rings as f64 * h;
    }
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    for k in 0..n_nodes[2] {
        for j in 0..n_nodes[1] {
            for i in 0..n_nodes[0] {
                let l = [i, j, k];
                let mut x = [0.0; 3];
                for c in 0..dim {
                    x[c] = omega_bounds.lo[c] + (l[c] - rings) as f64 * h;
                }
                nodes.push(x);
                lattice.push(l);
            }
        }
    }
    let node_id = |i: i64, j: i64, k: i64| (i + n_nodes[0] * (j + n_nodes[1] * k)) as usize;
    let mut omega_lo = [0i64; 3];
    let mut omega_hi = [0i64; 3];
    for c in 0..dim {
        omega_lo[c] = rings;
        omega_hi[c] = rings + n_omega[c];
    }
    let mut elements = Vec::new();
    let mut push = |kind: ElementKind, node_ids: Vec<usize>, region: Region| {
        let bbox = BoundingBox::of_points(node_ids.iter().map(|&n| &nodes[n]));
        elements.push(Element { id: elements.len(), kind, node_ids, region, bbox });
    };
    for k in 0..n_cells[2] {
        for j in 0..n_cells[1] {
            for i in 0..n_cells[0] {
                let cell = [i, j, k];
                let inside = (0..dim).all(|c| cell[c] >= rings && cell[c] < rings + n_omega[c]);
                let region = if inside { Region::Omega } else { Region::Gamma };
                let (sw, se, nw, ne) =
                    (node_id(i, j, k), node_id(i + 1, j, k), node_id(i, j + 1, k), node_id(i + 1, j + 1, k));
                let split = match kind {
                    MeshKind::Tri => true,
                    MeshKind::Mixed => (i + j) % 2 == 1,
                    _ => false,
                };
                if kind == MeshKind::Hex {
                    let up = |n: usize| n + (n_nodes[0] * n_nodes[1]) as usize;
                    push(ElementKind::Hex, vec![sw, se, nw, ne, up(sw), up(se), up(nw), up(ne)], region);
                } else if split {
                    push(ElementKind::Tri, vec![sw, se, ne], region);
                    push(ElementKind::Tri, vec![sw, ne, nw], region);
                } else {
                    push(ElementKind::Quad, vec![sw, se, nw, ne], region);
                }
            }
        }
    }
    Ok(Mesh {
        dim,
        nodes,
        lattice,
        origin,
        unit: h,
        elements,
        h,
        omega_bounds,
        omega_lattice: (omega_lo, omega_hi),
        gamma_layers: rings as usize,
    })
}

/// Split every element into 2^dim children through edge midpoints.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut lattice: Vec<[i64; 3]> = mesh.lattice.iter().map(|l| [2 * l[0], 2 * l[1], 2 * l[2]]).collect();
    let mut index: HashMap<[i64; 3], usize> = lattice.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let unit = mesh.unit / 2.0;
    let origin = mesh.origin;
    let dim = mesh.dim;
    // Node at the average of the given parents (lattice-exact midpoints).
    let mut mid = |ids: &[usize]| -> usize {
        let mut l = [0i64; 3];
        for &n in ids {
            for c in 0..3 {
                l[c] += lattice[n][c];
            }
        }
        for c in l.iter_mut() {
            *c /= ids.len() as i64;
        }
        *index.entry(l).or_insert_with(|| {
            let mut x = [0.0; 3];
            for c in 0..dim {
                x[c] = origin[c] + l[c] as f64 * unit;
            }
            nodes.push(x);
            lattice.push(l);
            nodes.len() - 1
        })
    };
    let mut children: Vec<(ElementKind, Vec<usize>, Region)> = Vec::new();
    for e in &mesh.elements {
        let v = &e.node_ids;
        match e.kind {
            ElementKind::Tri => {
                let (m01, m12, m20) = (mid(&[v[0], v[1]]), mid(&[v[1], v[2]]), mid(&[v[2], v[0]]));
                for c in [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m01, m12, m20]] {
                    children.push((ElementKind::Tri, c.to_vec(), e.region));
                }
            }
            ElementKind::Quad | ElementKind::Hex => {
                // Tensor grid of 3^d points over the cell: corner, edge, face
                // and cell midpoints.
                let d = e.kind.ref_dim();
                let n3 = 3usize.pow(d as u32);
                let mut grid = vec![0usize; n3];
                for (g, slot) in grid.iter_mut().enumerate() {
                    let t = [g % 3, (g / 3) % 3, g / 9];
                    let mut parents = Vec::new();
                    for (corner, &node) in v.iter().enumerate() {
                        let bits = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
                        if (0..d).all(|c| t[c] == 1 || t[c] == 2 * bits[c]) {
                            parents.push(node);
                        }
                    }
                    *slot = mid(&parents);
                }
                for child in 0..(1 << d) {
                    let o = [child & 1, (child >> 1) & 1, (child >> 2) & 1];
                    let ids = (0..(1 << d))
                        .map(|corner| {
                            let b = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
                            let t = [o[0] + b[0], o[1] + b[1], o[2] + b[2]];
                            grid[t[0] + 3 * t[1] + 9 * t[2]]
                        })
                        .collect();
                    children.push((e.kind, ids, e.region));
                }
            }
        }
    }
    let elements = children
        .into_iter()
        .enumerate()
        .map(|(id, (kind, node_ids, region))| {
            let bbox = BoundingBox::of_points(node_ids.iter().map(|&n| &nodes[n]));
            Element { id, kind, node_ids, region, bbox }
        })
        .collect();
    let (lo, hi) = mesh.omega_lattice;
    Mesh {
        dim,
        nodes,
        lattice,
        origin,
        unit,
        elements,
        h: mesh.h / 2.0,
        omega_bounds: mesh.omega_bounds,
        omega_lattice: (lo.map(|x| 2 * x), hi.map(|x| 2 * x)),
        gamma_layers: 2 * mesh.gamma_layers,
    }
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn geometry(&self, e: usize) -> ElementGeometry {
        let el = &self.elements[e];
        let mut verts = [[0.0; 3]; 8];
        for (v, &n) in verts.iter_mut().zip(&el.node_ids) {
            *v = self.nodes[n];
        }
        ElementGeometry { id: e, kind: el.kind, verts }
    }

    pub fn count(&self, region: Region) -> usize {
        self.elements.iter().filter(|e| e.region == region).count()
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.geometry(e).diameter()).fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.geometry(e).measure()).sum()
    }

    /// Whether a lattice point scaled by `scale` lies strictly inside Ω.
    pub fn strictly_inside_omega(&self, l: &[i64; 3], scale: i64) -> bool {
        let (lo, hi) = self.omega_lattice;
        (0..self.dim).all(|c| scale * lo[c] < l[c] && l[c] < scale * hi[c])
    }

    /// Γ layer width actually covered by the generated rings.
    pub fn layer_width(&self) -> f64 {
        self.gamma_layers as f64 * self.h
    }
}

/// Element ownership among `n_parts` partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMap {
    pub n_parts: usize,
    pub owner: Vec<usize>,
    /// Box around the elements owned by each partition.
    pub part_bbox: Vec<BoundingBox>,
}

impl PartitionMap {
    pub fn owned(&self, part: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&e| self.owner[e] == part).collect()
    }
}

/// Recursive coordinate bisection on element centroids.
pub fn partition_geometric(mesh: &Mesh, n_parts: usize) -> Result<PartitionMap> {
    let n = mesh.n_elements();
    if n_parts == 0 || n_parts > n {
        return Err(Error::TooManyParts { elements: n, parts: n_parts });
    }
    let centroids: Vec<[f64; 3]> = (0..n).map(|e| mesh.geometry(e).centroid()).collect();
    let mut owner = vec![0; n];
    let mut stack = vec![((0..n).collect::<Vec<usize>>(), 0usize, n_parts)];
    while let Some((mut ids, first, parts)) = stack.pop() {
        if parts == 1 {
            for &e in &ids {
                owner[e] = first;
            }
            continue;
        }
        let bb = BoundingBox::of_points(ids.iter().map(|&e| &centroids[e]));
        let axis = (0..mesh.dim)
            .max_by(|&a, &b| (bb.hi[a] - bb.lo[a]).total_cmp(&(bb.hi[b] - bb.lo[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        ids.sort_by(|&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b)));
        let left_parts = parts / 2;
        let cut = ids.len() * left_parts / parts;
        let right = ids.split_off(cut);
        stack.push((right, first + left_parts, parts - left_parts));
        stack.push((ids, first, left_parts));
    }
    let mut part_bbox = vec![BoundingBox::empty(); n_parts];
    for (e, &p) in owner.iter().enumerate() {
        part_bbox[p] = part_bbox[p].union(&mesh.elements[e].bbox);
    }
    Ok(PartitionMap { n_parts, owner, part_bbox })
}

/// The rectangular Ω used throughout the experiments.
pub fn standard_omega(dim: usize) -> BoundingBox {
    if dim == 3 {
        BoundingBox::new([-0.6, -0.4, -0.4], [0.6, 0.4, 0.4])
    } else {
        BoundingBox::new([-0.6, -0.4, 0.0], [0.6, 0.4, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_mesh_counts() {
        let m = build_mesh(2, standard_omega(2), 0.1, 0.2125, MeshKind::Quad).unwrap();
        assert_eq!(m.count(Region::Omega), 96);
        assert_eq!(m.gamma_layers, 3);
        assert_eq!(m.n_elements(), 252);
        let m0 = build_mesh(2, standard_omega(2), 0.1, 0.0, MeshKind::Quad).unwrap();
        assert_eq!(m0.n_elements(), 96);
        assert_eq!(m0.count(Region::Gamma), 0);
        let t = build_mesh(2, standard_omega(2), 0.1, 0.2125, MeshKind::Tri).unwrap();
        assert_eq!(t.n_elements(), 504);
        let x = build_mesh(2, standard_omega(2), 0.1, 0.2125, MeshKind::Mixed).unwrap();
        assert_eq!(x.n_elements(), 252 + 126);
    }

    #[test]
    fn hex_mesh_counts() {
        let m = build_mesh(3, standard_omega(3), 0.2, 0.2, MeshKind::Hex).unwrap();
        assert_eq!(m.count(Region::Omega), 96);
        assert_eq!(m.gamma_layers, 1);
        assert_eq!(m.n_elements(), 288);
        assert_eq!(refine(&m).n_elements(), 2304);
    }

    #[test]
    fn rejects_non_commensurate_spacing() {
        let r = build_mesh(2, standard_omega(2), 0.07, 0.2, MeshKind::Quad);
        assert!(matches!(r, Err(Error::NonCommensurate { .. })));
        assert!(build_mesh(2, standard_omega(2), 0.1, 0.2, MeshKind::Hex).is_err());
    }

    #[test]
    fn measure_and_refinement() {
        for kind in [MeshKind::Quad, MeshKind::Tri, MeshKind::Mixed] {
            let m = build_mesh(2, standard_omega(2), 0.1, 0.2125, kind).unwrap();
            let total = 1.8 * 1.4;
            assert!((m.total_measure() - total).abs() < 1e-12 * total);
            let r = refine(&m);
            assert_eq!(r.n_elements(), 4 * m.n_elements());
            assert_eq!(r.h, 0.05);
            assert_eq!(r.gamma_layers, 6);
            assert!((r.total_measure() - total).abs() < 1e-12 * total);
            assert_eq!(r.count(Region::Omega), 4 * m.count(Region::Omega));
            assert_eq!(refine(&r).n_elements(), 16 * m.n_elements());
            for e in 0..r.n_elements() {
                assert!(r.geometry(e).map_with_det(&[0.2, 0.2, 0.0]).1 > 0.0);
            }
        }
    }

    #[test]
    fn region_tags_match_point_location() {
        let m = build_mesh(2, standard_omega(2), 0.1, 0.2125, MeshKind::Tri).unwrap();
        let omega = m.omega_bounds;
        for e in 0..m.n_elements() {
            let c = m.geometry(e).centroid();
            let inside = omega.contains(&c);
            assert_eq!(inside, m.elements[e].region == Region::Omega);
            if !inside {
                let b = &m.elements[e].bbox;
                let gap =
                    (0..2).map(|k| (omega.lo[k] - b.hi[k]).max(b.lo[k] - omega.hi[k]).max(0.0)).fold(0.0, f64::max);
                assert!(gap < 0.2125);
            }
        }
    }

    #[test]
    fn refined_triangles_equal_direct_fine_mesh() {
        let coarse = build_mesh(2, standard_omega(2), 0.2, 0.2, MeshKind::Tri).unwrap();
        let fine = build_mesh(2, standard_omega(2), 0.1, 0.2, MeshKind::Tri).unwrap();
        let r = refine(&coarse);
        let key = |m: &Mesh, e: usize| {
            let mut v: Vec<[i64; 3]> = m.elements[e]
                .node_ids
                .iter()
                .map(|&n| {
                    let x = m.nodes[n];
                    [(x[0] * 1e6).round() as i64, (x[1] * 1e6).round() as i64, 0]
                })
                .collect();
            v.sort();
            v
        };
        let mut a: Vec<_> = (0..r.n_elements()).map(|e| key(&r, e)).collect();
        let mut b: Vec<_> = (0..fine.n_elements()).map(|e| key(&fine, e)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_sizes() {
        let m = build_mesh(2, standard_omega(2), 0.1, 0.2125, MeshKind::Quad).unwrap();
        let p1 = partition_geometric(&m, 1).unwrap();
        assert!(p1.owner.iter().all(|&o| o == 0));
        let p2 = partition_geometric(&m, 2).unwrap();
        assert_eq!(p2.owned(0).len(), 126);
        assert_eq!(p2.owned(1).len(), 126);
        let p4 = partition_geometric(&m, 4).unwrap();
        for p in 0..4 {
            assert_eq!(p4.owned(p).len(), 63);
        }
        assert_eq!(p4, partition_geometric(&m, 4).unwrap());
        let p8 = partition_geometric(&m, 8).unwrap();
        let sizes: Vec<usize> = (0..8).map(|p| p8.owned(p).len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(partition_geometric(&m, 253).is_err());
        assert!(partition_geometric(&m, 0).is_err());
    }
}
