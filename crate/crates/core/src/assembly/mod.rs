//! Stiffness assembly A = 2(A²¹ + A²²) with the adaptive outer quadrature, the
//! barycenter baseline, and the right-hand side with lifting.
//!
//! Every (outer element l, inner element m) pair is integrated in a frame
//! anchored at the first vertex of m, with coordinates taken from integer
//! lattice offsets. Translated copies of a pair therefore produce bit-identical
//! local blocks, which lets the assembly reuse blocks across the mesh
//! (`AssemblyConfig::pair_cache`) without changing a single value.

pub mod adaptive;
pub mod distance;
pub mod neighbors;
pub mod reference;
pub mod sparse;

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fe_space::{n_local, FeSpace};
use crate::kernel::KernelParams;
use crate::mesh::{ElementGeometry, ElementKind, Mesh, Region};
use crate::quadrature::{map_to_physical, QuadratureRule, RuleSet, TensorFamily, TriangleFamily};

use adaptive::{a22_block, AdaptiveLimits, InnerData, OuterPoints, PairSink, Subcell};
use neighbors::{neighbor_sets_for, NeighborSets};
pub use sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MollifiedAdaptive,
    Barycenter,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Method::MollifiedAdaptive),
            "barycenter" => Ok(Method::Barycenter),
            _ => Err(Error::Unknown { what: "method", name: s.to_string() }),
        }
    }
}

/// Which matrix rows are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowScope {
    /// Every DOF row.
    All,
    /// Only rows of free DOFs; the only ones the reduced system needs.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyConfig {
    pub method: Method,
    pub l_min: u32,
    pub l_max: u32,
    pub outer_rule: RuleSet,
    pub inner_rule: RuleSet,
    pub rows: RowScope,
    /// Reuse local blocks of translated element pairs.
    pub pair_cache: bool,
    /// Apply A ← (A + Aᵀ)/2 on the assembled square block. Off by default:
    /// averaging with the transpose destroys the zero row sums of A and with
    /// them exact reproduction of linear solutions.
    pub symmetrize: bool,
}

impl AssemblyConfig {
    pub fn adaptive(l_min: u32, l_max: u32) -> Self {
        Self {
            method: Method::MollifiedAdaptive,
            l_min,
            l_max,
            outer_rule: RuleSet::default(),
            inner_rule: RuleSet::default(),
            rows: RowScope::Free,
            pair_cache: true,
            symmetrize: false,
        }
    }

    /// Lobatto outer rule, Gauss-Legendre inner rule, whole elements.
    pub fn barycenter() -> Self {
        Self {
            method: Method::Barycenter,
            l_min: 1,
            l_max: 1,
            outer_rule: RuleSet { tensor: TensorFamily::Lobatto(3), triangle: TriangleFamily::Dunavant7 },
            inner_rule: RuleSet::default(),
            rows: RowScope::Free,
            pair_cache: true,
            symmetrize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_min < 1 || self.l_max < self.l_min {
            return Err(Error::InvalidParameter(format!(
                "need L_max ≥ L_min ≥ 1, got L_min = {}, L_max = {}",
                self.l_min, self.l_max
            )));
        }
        Ok(())
    }
}

/// Work counters of one assembly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    /// (outer, inner) element pairs visited.
    pub pairs: usize,
    /// Local pair blocks actually integrated (the rest came from the cache).
    pub blocks_computed: usize,
    /// Sub-cell integration calls across the computed blocks.
    pub integrations: usize,
}

impl std::ops::AddAssign for AssemblyStats {
    fn add_assign(&mut self, o: Self) {
        self.pairs += o.pairs;
        self.blocks_computed += o.blocks_computed;
        self.integrations += o.integrations;
    }
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: SparseMatrix,
    /// ‖A − Aᵀ‖∞ / ‖A‖∞ on the assembled block before symmetrization.
    pub asymmetry: f64,
    pub stats: AssemblyStats,
}

type PairKey = (u16, u16, [i32; 3]);

struct Shape {
    kind: ElementKind,
    offsets: Vec<[i64; 3]>,
    inner: InnerData,
    centroid: [f64; 3],
}

struct PairBlock {
    /// Row-major `inner basis × outer basis`, already scaled by 2.
    a21: Vec<f64>,
    c22: Vec<f64>,
    integrations: usize,
}

fn kind_slot(kind: ElementKind) -> usize {
    match kind {
        ElementKind::Quad => 0,
        ElementKind::Tri => 1,
        ElementKind::Hex => 2,
    }
}

/// Shared read-only state of one assembly: rule tables, element shapes,
/// candidate sets and the sparsity pattern.
pub(crate) struct Engine<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a FeSpace,
    pub kernel: KernelParams,
    pub cfg: AssemblyConfig,
    pub active_row: Vec<bool>,
    /// Elements carrying at least one active row, ascending.
    pub inner_elems: Vec<usize>,
    pub neighbors: NeighborSets,
    outer_rules: [Option<QuadratureRule>; 3],
    shape_of: Vec<u16>,
    shapes: Vec<Shape>,
}

/// Values and off-partition contributions produced by one worker.
pub(crate) struct WorkerOutput {
    pub values: Vec<f64>,
    pub stash: Vec<(u32, u32, f64)>,
    pub stats: AssemblyStats,
}

/// Rows a worker writes directly: `row_slot[i]` is the local row index or
/// `u32::MAX`; `local_ptr` gives the start of each local row in `values`.
pub(crate) struct RowOwnership<'a> {
    pub row_slot: &'a [u32],
    pub local_ptr: &'a [usize],
}

impl<'a> Engine<'a> {
    pub fn new(mesh: &'a Mesh, space: &'a FeSpace, kernel: &KernelParams, cfg: &AssemblyConfig) -> Result<Self> {
        cfg.validate()?;
        if kernel.dim != mesh.dim {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension {} does not match mesh dimension {}",
                kernel.dim, mesh.dim
            )));
        }
        let kernel = match cfg.method {
            Method::MollifiedAdaptive => *kernel,
            Method::Barycenter => kernel.sharp(),
        };
        let active_row: Vec<bool> = match cfg.rows {
            RowScope::All => vec![true; space.n_dofs],
            RowScope::Free => space.constrained.iter().map(|c| !c).collect(),
        };
        let inner_elems: Vec<usize> =
            (0..mesh.n_elements()).filter(|&e| space.element_dofs(e).iter().any(|&d| active_row[d])).collect();
        let radius = match cfg.method {
            Method::MollifiedAdaptive => kernel.support(),
            // Admit every element whose barycenter can be within δ of a point.
            Method::Barycenter => kernel.delta * (1.0 + 1e-12),
        };
        let neighbors = neighbor_sets_for(mesh, &inner_elems, radius);
        let mut outer_rules: [Option<QuadratureRule>; 3] = [None, None, None];
        let mut inner_rules: [Option<QuadratureRule>; 3] = [None, None, None];
        let mut shape_index: HashMap<(ElementKind, Vec<[i64; 3]>), u16> = HashMap::new();
        let mut shape_of = Vec::with_capacity(mesh.n_elements());
        let mut shapes: Vec<Shape> = Vec::new();
        for el in &mesh.elements {
            let slot = kind_slot(el.kind);
            if outer_rules[slot].is_none() {
                outer_rules[slot] = Some(cfg.outer_rule.rule_for(el.kind)?);
                inner_rules[slot] = Some(cfg.inner_rule.rule_for(el.kind)?);
            }
            let v0 = mesh.lattice[el.node_ids[0]];
            let offsets: Vec<[i64; 3]> = el
                .node_ids
                .iter()
                .map(|&n| {
                    let l = mesh.lattice[n];
                    [l[0] - v0[0], l[1] - v0[1], l[2] - v0[2]]
                })
                .collect();
            let key = (el.kind, offsets);
            let id = match shape_index.get(&key) {
                Some(&id) => id,
                None => {
                    let id = u16::try_from(shapes.len())
                        .map_err(|_| Error::InvalidParameter("too many distinct element shapes".into()))?;
                    let geom = canonical_geometry(el.kind, &key.1, [0; 3], mesh.unit);
                    let inner = InnerData::new(&geom, inner_rules[slot].as_ref().expect("rule set"), space.degree)?;
                    shapes.push(Shape { kind: el.kind, offsets: key.1.clone(), inner, centroid: geom.centroid() });
                    shape_index.insert(key, id);
                    id
                }
            };
            shape_of.push(id);
        }
        Ok(Self { mesh, space, kernel, cfg: *cfg, active_row, inner_elems, neighbors, outer_rules, shape_of, shapes })
    }

    /// Sorted column patterns of every row (empty for inactive rows).
    pub fn pattern(&self) -> SparseMatrix {
        let n = self.space.n_dofs;
        let mut mark = vec![u32::MAX; n];
        let mut colsets: Vec<Vec<u32>> = Vec::with_capacity(self.inner_elems.len());
        for (k, _) in self.inner_elems.iter().enumerate() {
            let mut cols = Vec::new();
            for &l in self.neighbors.of_index(k) {
                for &d in self.space.element_dofs(l as usize) {
                    if mark[d] != k as u32 {
                        mark[d] = k as u32;
                        cols.push(d as u32);
                    }
                }
            }
            cols.sort_unstable();
            colsets.push(cols);
        }
        let mut elems_of_dof: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (k, &m) in self.inner_elems.iter().enumerate() {
            for &d in self.space.element_dofs(m) {
                if self.active_row[d] && elems_of_dof[d].last() != Some(&(k as u32)) {
                    elems_of_dof[d].push(k as u32);
                }
            }
        }
        mark.iter_mut().for_each(|v| *v = u32::MAX);
        let mut rows = Vec::with_capacity(n);
        for (i, ks) in elems_of_dof.iter().enumerate() {
            let mut row: Vec<u32> = Vec::new();
            if ks.len() == 1 {
                row = colsets[ks[0] as usize].clone();
            } else {
                for &k in ks {
                    for &c in &colsets[k as usize] {
                        if mark[c as usize] != i as u32 {
                            mark[c as usize] = i as u32;
                            row.push(c);
                        }
                    }
                }
                row.sort_unstable();
            }
            rows.push(row);
        }
        drop(colsets);
        SparseMatrix::from_pattern(n, &rows)
    }

    fn pair_key(&self, l: usize, m: usize) -> PairKey {
        let a = self.mesh.lattice[self.mesh.elements[l].node_ids[0]];
        let b = self.mesh.lattice[self.mesh.elements[m].node_ids[0]];
        (self.shape_of[l], self.shape_of[m], [(a[0] - b[0]) as i32, (a[1] - b[1]) as i32, (a[2] - b[2]) as i32])
    }

    fn compute_block(&self, key: &PairKey) -> Result<PairBlock> {
        let (sl, sm, off) = *key;
        let outer_shape = &self.shapes[sl as usize];
        let inner = &self.shapes[sm as usize].inner;
        let geom = canonical_geometry(
            outer_shape.kind,
            &outer_shape.offsets,
            [off[0] as i64, off[1] as i64, off[2] as i64],
            self.mesh.unit,
        );
        let rule = self.outer_rules[kind_slot(outer_shape.kind)].as_ref().expect("rule set");
        let degree = self.space.degree;
        let (mut a21, c22, integrations) = match self.cfg.method {
            Method::MollifiedAdaptive => {
                let limits = AdaptiveLimits {
                    l_min: self.cfg.l_min,
                    l_max: self.cfg.l_max,
                    core: self.kernel.core(),
                    support: self.kernel.support(),
                };
                let mut sink = PairSink::new(&geom, rule, degree, &self.kernel, vec![inner]);
                sink.run(&limits)?;
                let c = sink.contributions.pop().expect("one target");
                (c.a21_block(inner), c.c22, c.integrations)
            }
            Method::Barycenter => {
                let pts = OuterPoints::new(&geom, &Subcell::root(geom.kind), rule, degree)?;
                let b = self.shapes[sm as usize].centroid;
                let reach2 = self.kernel.delta * self.kernel.delta * (1.0 + 1e-12);
                let nj = pts.n_basis;
                let mut t = vec![0.0; nj];
                let mut wsum = 0.0;
                for (q2, (x, w2)) in pts.points.iter().zip(&pts.weights).enumerate() {
                    let d2 = (x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2) + (x[2] - b[2]).powi(2);
                    if d2 <= reach2 {
                        wsum += w2;
                        for j in 0..nj {
                            t[j] += w2 * pts.phi[q2 * nj + j];
                        }
                    }
                }
                let mut acc = adaptive::PairContribution::new(inner.len(), nj);
                for (q1, w1) in inner.weights.iter().enumerate() {
                    let f = self.kernel.c_delta * w1;
                    for j in 0..nj {
                        acc.s[q1 * nj + j] = f * t[j];
                    }
                    acc.c22[q1] = f * wsum;
                }
                (acc.a21_block(inner), acc.c22, 1)
            }
        };
        a21.iter_mut().for_each(|v| *v *= 2.0);
        Ok(PairBlock { a21, c22, integrations })
    }

    /// Assemble the rows of the inner elements `elems` (indices into
    /// `inner_elems`). Rows owned through `own` go to `values`; other active
    /// rows are returned in the stash. `outer_allowed`, when given, lists the
    /// elements this worker may integrate over (owned plus ghosts).
    pub fn run_worker(
        &self,
        elems: &[usize],
        pattern: &SparseMatrix,
        own: &RowOwnership<'_>,
        outer_allowed: Option<&[bool]>,
    ) -> Result<WorkerOutput> {
        let n = self.space.n_dofs;
        let n_values = *own.local_ptr.last().unwrap_or(&0);
        let mut values = vec![0.0; n_values];
        let mut stash = Vec::new();
        let mut stats = AssemblyStats::default();
        let mut cache: HashMap<PairKey, PairBlock> = HashMap::new();
        let max_local = self.shapes.iter().map(|s| s.inner.n_basis).max().unwrap_or(0);
        let mut pos = vec![u32::MAX; max_local * n];
        let row_ptr = pattern.row_ptr();
        let cols = pattern.col_indices();
        for &k in elems {
            let m = self.inner_elems[k];
            let dofs_m = self.space.element_dofs(m);
            let ni = dofs_m.len();
            // Local storage position of every column of each owned row.
            let mut owned = [false; 27];
            for (a, &i) in dofs_m.iter().enumerate() {
                if !self.active_row[i] || own.row_slot[i] == u32::MAX {
                    continue;
                }
                owned[a] = true;
                let base = own.local_ptr[own.row_slot[i] as usize];
                for p in row_ptr[i]..row_ptr[i + 1] {
                    pos[a * n + cols[p] as usize] = (base + p - row_ptr[i]) as u32;
                }
            }
            let sm = &self.shapes[self.shape_of[m] as usize];
            let mut c22 = vec![0.0; sm.inner.len()];
            let put =
                |a: usize, i: usize, j: usize, v: f64, values: &mut Vec<f64>, stash: &mut Vec<(u32, u32, f64)>| {
                    if owned[a] {
                        let p = pos[a * n + j];
                        debug_assert!(p != u32::MAX, "column {j} missing from row {i}");
                        values[p as usize] += v;
                    } else {
                        stash.push((i as u32, j as u32, v));
                    }
                };
            for &l in self.neighbors.of_index(k) {
                let l = l as usize;
                if let Some(allowed) = outer_allowed {
                    if !allowed[l] {
                        return Err(Error::InvalidParameter(format!(
                            "element {l} interacts with {m} but is neither owned nor a ghost"
                        )));
                    }
                }
                stats.pairs += 1;
                let key = self.pair_key(l, m);
                let fresh;
                let block = if self.cfg.pair_cache {
                    match cache.entry(key) {
                        Entry::Occupied(slot) => &*slot.into_mut(),
                        Entry::Vacant(slot) => {
                            let b = self.compute_block(slot.key())?;
                            stats.blocks_computed += 1;
                            stats.integrations += b.integrations;
                            &*slot.insert(b)
                        }
                    }
                } else {
                    fresh = self.compute_block(&key)?;
                    stats.blocks_computed += 1;
                    stats.integrations += fresh.integrations;
                    &fresh
                };
                let dofs_l = self.space.element_dofs(l);
                let nj = dofs_l.len();
                for (a, &i) in dofs_m.iter().enumerate() {
                    if !self.active_row[i] {
                        continue;
                    }
                    for (b, &j) in dofs_l.iter().enumerate() {
                        put(a, i, j, block.a21[a * nj + b], &mut values, &mut stash);
                    }
                }
                for (c, v) in c22.iter_mut().zip(&block.c22) {
                    *c += v;
                }
            }
            let a22 = a22_block(&sm.inner, &c22);
            for (a, &i) in dofs_m.iter().enumerate() {
                if !self.active_row[i] {
                    continue;
                }
                for (b, &j) in dofs_m.iter().enumerate() {
                    put(a, i, j, 2.0 * a22[a * ni + b], &mut values, &mut stash);
                }
            }
            for (a, &i) in dofs_m.iter().enumerate() {
                if owned[a] {
                    for p in row_ptr[i]..row_ptr[i + 1] {
                        pos[a * n + cols[p] as usize] = u32::MAX;
                    }
                }
            }
        }
        Ok(WorkerOutput { values, stash, stats })
    }

    /// Relative pre-symmetrization asymmetry, then optional symmetrization.
    pub fn finish(&self, matrix: &mut SparseMatrix) -> f64 {
        let norm = matrix.norm_inf();
        let asym = if norm > 0.0 { matrix.asymmetry_inf(&self.active_row) / norm } else { 0.0 };
        if self.cfg.symmetrize {
            matrix.symmetrize(&self.active_row);
        }
        asym
    }
}

fn canonical_geometry(kind: ElementKind, offsets: &[[i64; 3]], shift: [i64; 3], unit: f64) -> ElementGeometry {
    let verts: Vec<[f64; 3]> = offsets
        .iter()
        .map(|o| [(o[0] + shift[0]) as f64 * unit, (o[1] + shift[1]) as f64 * unit, (o[2] + shift[2]) as f64 * unit])
        .collect();
    ElementGeometry::new(usize::MAX, kind, &verts)
}

/// Stiffness matrix over all DOF columns and the rows selected by
/// `config.rows`, assembled serially.
pub fn assemble(mesh: &Mesh, space: &FeSpace, kernel: &KernelParams, config: &AssemblyConfig) -> Result<Assembled> {
    let engine = Engine::new(mesh, space, kernel, config)?;
    let mut matrix = engine.pattern();
    let row_slot: Vec<u32> = (0..space.n_dofs as u32).collect();
    let local_ptr = matrix.row_ptr().to_vec();
    let all: Vec<usize> = (0..engine.inner_elems.len()).collect();
    let out = engine.run_worker(&all, &matrix, &RowOwnership { row_slot: &row_slot, local_ptr: &local_ptr }, None)?;
    debug_assert!(out.stash.is_empty());
    matrix.values_mut().copy_from_slice(&out.values);
    let asymmetry = engine.finish(&mut matrix);
    Ok(Assembled { matrix, asymmetry, stats: out.stats })
}

/// Barycenter baseline: whole inner elements whose barycenter is within δ of
/// the outer point, sharp kernel C_δ.
pub fn assemble_barycenter(
    mesh: &Mesh,
    space: &FeSpace,
    kernel: &KernelParams,
    config: &AssemblyConfig,
) -> Result<Assembled> {
    let cfg = AssemblyConfig { method: Method::Barycenter, ..*config };
    assemble(mesh, space, kernel, &cfg)
}

/// Load vector ∫_Ω f φᵢ minus the lifting term Σ_{j constrained} A_ij g(x_j),
/// returned over all DOFs with zeros at constrained entries.
pub fn assemble_rhs(
    mesh: &Mesh,
    space: &FeSpace,
    f: impl Fn(&[f64; 3]) -> f64,
    g: impl Fn(&[f64; 3]) -> f64,
    a: &SparseMatrix,
) -> Result<Vec<f64>> {
    let rules = RuleSet::legendre(space.degree + 3);
    let mut rhs = vec![0.0; space.n_dofs];
    let mut phi = [0.0; 27];
    let mut cached: [Option<QuadratureRule>; 3] = [None, None, None];
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.region != Region::Omega {
            continue;
        }
        let slot = kind_slot(el.kind);
        if cached[slot].is_none() {
            cached[slot] = Some(rules.rule_for(el.kind)?);
        }
        let rule = cached[slot].as_ref().expect("rule set");
        let (xs, ws) = map_to_physical(rule, &mesh.geometry(e))?;
        let dofs = space.element_dofs(e);
        let nb = n_local(el.kind, space.degree);
        for ((x, w), r) in xs.iter().zip(&ws).zip(&rule.ref_points) {
            crate::fe_space::eval_all(el.kind, space.degree, r, &mut phi[..nb]);
            let fx = f(x) * w;
            for (&d, v) in dofs.iter().zip(&phi[..nb]) {
                rhs[d] += fx * v;
            }
        }
    }
    let gvals = space.lifting(g);
    for i in 0..space.n_dofs {
        if space.constrained[i] {
            rhs[i] = 0.0;
            continue;
        }
        let (c, v) = a.row(i);
        let lift: f64 =
            c.iter().zip(v).filter(|(&j, _)| space.constrained[j as usize]).map(|(&j, a)| a * gvals[j as usize]).sum();
        rhs[i] -= lift;
    }
    Ok(rhs)
}
