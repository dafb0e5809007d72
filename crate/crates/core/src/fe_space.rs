//! Lagrange finite-element spaces of degree 1 and 2.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{ElementKind, Mesh, Region};
use crate::quadrature::{map_to_physical, QuadratureRule, RuleSet};

/// Nodal values, one per DOF.
pub type CoefficientVector = Vec<f64>;

/// Number of local basis functions.
pub fn n_local(kind: ElementKind, degree: usize) -> usize {
    match kind {
        ElementKind::Tri => (degree + 1) * (degree + 2) / 2,
        _ => (degree + 1).pow(kind.ref_dim() as u32),
    }
}

/// Reference coordinates of the local nodes. Tensor elements list nodes with x
/// fastest; quadratic triangles list vertices then the midpoints of edges
/// 01, 12, 20.
pub fn local_nodes(kind: ElementKind, degree: usize) -> Vec<[f64; 3]> {
    match kind {
        ElementKind::Tri => {
            let mut v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
            if degree == 2 {
                v.extend([[0.5, 0.0, 0.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.0]]);
            }
            v
        }
        _ => {
            let d = kind.ref_dim();
            let n1 = degree + 1;
            (0..n1.pow(d as u32))
                .map(|idx| {
                    let mut r = [0.0; 3];
                    let mut rest = idx;
                    for c in r.iter_mut().take(d) {
                        *c = -1.0 + 2.0 * (rest % n1) as f64 / degree as f64;
                        rest /= n1;
                    }
                    r
                })
                .collect()
        }
    }
}

fn lagrange_1d(degree: usize, t: f64, out: &mut [f64; 3]) {
    if degree == 1 {
        out[0] = 0.5 * (1.0 - t);
        out[1] = 0.5 * (1.0 + t);
    } else {
        out[0] = 0.5 * t * (t - 1.0);
        out[1] = 1.0 - t * t;
        out[2] = 0.5 * t * (t + 1.0);
    }
}

/// Values of all local basis functions at a reference point.
pub fn eval_all(kind: ElementKind, degree: usize, r: &[f64; 3], out: &mut [f64]) {
    match kind {
        ElementKind::Tri => {
            let l = [1.0 - r[0] - r[1], r[0], r[1]];
            if degree == 1 {
                out[..3].copy_from_slice(&l);
            } else {
                for k in 0..3 {
                    out[k] = l[k] * (2.0 * l[k] - 1.0);
                }
                out[3] = 4.0 * l[0] * l[1];
                out[4] = 4.0 * l[1] * l[2];
                out[5] = 4.0 * l[2] * l[0];
            }
        }
        _ => {
            let d = kind.ref_dim();
            let n1 = degree + 1;
            let mut f = [[0.0; 3]; 3];
            for c in 0..d {
                lagrange_1d(degree, r[c], &mut f[c]);
            }
            let n = n1.pow(d as u32);
            for (idx, o) in out.iter_mut().enumerate().take(n) {
                let (i, j, k) = (idx % n1, (idx / n1) % n1, idx / (n1 * n1));
                *o = f[0][i] * f[1][j] * if d == 3 { f[2][k] } else { 1.0 };
            }
        }
    }
}

/// Value of one local basis function at a reference point.
pub fn eval_basis(kind: ElementKind, degree: usize, local_index: usize, r: &[f64; 3]) -> Result<f64> {
    let n = n_local(kind, degree);
    if local_index >= n {
        return Err(Error::BasisIndex { index: local_index, n });
    }
    let mut out = [0.0; 27];
    eval_all(kind, degree, r, &mut out);
    Ok(out[local_index])
}

/// Region over which norms are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormRegion {
    Omega,
    OmegaAndGamma,
}

impl std::str::FromStr for NormRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(NormRegion::Omega),
            "omega-gamma" | "omega_and_gamma" => Ok(NormRegion::OmegaAndGamma),
            _ => Err(Error::Unknown { what: "norm region", name: s.to_string() }),
        }
    }
}

/// Continuous Lagrange space over a mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub degree: usize,
    pub n_dofs: usize,
    pub dof_coords: Vec<[f64; 3]>,
    /// DOF positions on the mesh lattice refined by `degree`.
    pub dof_lattice: Vec<[i64; 3]>,
    /// DOFs whose node lies in the closure of Γ.
    pub constrained: Vec<bool>,
    elem_offsets: Vec<usize>,
    elem_dofs: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        if degree != 1 && degree != 2 {
            return Err(Error::InvalidParameter(format!("FE degree {degree} (expected 1 or 2)")));
        }
        let p = degree as i64;
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut dof_coords = Vec::new();
        let mut dof_lattice = Vec::new();
        let mut elem_offsets = vec![0];
        let mut elem_dofs = Vec::new();
        let mut vshape = [0.0; 27];
        for (e, el) in mesh.elements.iter().enumerate() {
            let geom = mesh.geometry(e);
            for r in local_nodes(el.kind, degree) {
                eval_all(el.kind, 1, &r, &mut vshape);
                let mut key = [0i64; 3];
                for (c, k) in key.iter_mut().enumerate() {
                    let s: f64 =
                        el.node_ids.iter().enumerate().map(|(a, &n)| vshape[a] * (p * mesh.lattice[n][c]) as f64).sum();
                    *k = s.round() as i64;
                }
                let id = *index.entry(key).or_insert_with(|| {
                    dof_coords.push(geom.map(&r));
                    dof_lattice.push(key);
                    dof_coords.len() - 1
                });
                elem_dofs.push(id);
            }
            elem_offsets.push(elem_dofs.len());
        }
        let constrained = dof_lattice.iter().map(|l| !mesh.strictly_inside_omega(l, p)).collect();
        Ok(Self { degree, n_dofs: dof_coords.len(), dof_coords, dof_lattice, constrained, elem_offsets, elem_dofs })
    }

    /// Global DOFs of an element in local order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.elem_dofs[self.elem_offsets[e]..self.elem_offsets[e + 1]]
    }

    pub fn n_free(&self) -> usize {
        self.constrained.iter().filter(|&&c| !c).count()
    }

    /// Nodal interpolant of `u`.
    pub fn interpolate(&self, u: impl Fn(&[f64; 3]) -> f64) -> CoefficientVector {
        self.dof_coords.iter().map(u).collect()
    }

    /// Nodal interpolant of `g` on constrained DOFs, zero on free DOFs.
    pub fn lifting(&self, g: impl Fn(&[f64; 3]) -> f64) -> CoefficientVector {
        self.dof_coords.iter().zip(&self.constrained).map(|(x, &c)| if c { g(x) } else { 0.0 }).collect()
    }

    /// Value of the FE function on element `e` at a reference point.
    pub fn eval_at(&self, mesh: &Mesh, coeffs: &[f64], e: usize, r: &[f64; 3]) -> f64 {
        let kind = mesh.elements[e].kind;
        let mut phi = [0.0; 27];
        eval_all(kind, self.degree, r, &mut phi);
        self.element_dofs(e).iter().zip(&phi).map(|(&d, v)| coeffs[d] * v).sum()
    }

    /// ‖u_h − u‖ in L² over the requested region.
    pub fn l2_error(
        &self,
        mesh: &Mesh,
        coeffs: &[f64],
        u_exact: impl Fn(&[f64; 3]) -> f64,
        region: NormRegion,
    ) -> Result<f64> {
        let rules = RuleSet::legendre(self.degree + 3);
        let mut cache: HashMap<ElementKind, (QuadratureRule, Vec<Vec<f64>>)> = HashMap::new();
        let mut sum = 0.0;
        for (e, el) in mesh.elements.iter().enumerate() {
            if region == NormRegion::Omega && el.region != Region::Omega {
                continue;
            }
            if let Entry::Vacant(slot) = cache.entry(el.kind) {
                let rule = rules.rule_for(el.kind)?;
                let phis = rule
                    .ref_points
                    .iter()
                    .map(|r| {
                        let mut v = vec![0.0; n_local(el.kind, self.degree)];
                        eval_all(el.kind, self.degree, r, &mut v);
                        v
                    })
                    .collect();
                slot.insert((rule, phis));
            }
            let (rule, phis) = &cache[&el.kind];
            let (xs, ws) = map_to_physical(rule, &mesh.geometry(e))?;
            let dofs = self.element_dofs(e);
            for ((x, w), phi) in xs.iter().zip(&ws).zip(phis) {
                let uh: f64 = dofs.iter().zip(phi).map(|(&d, v)| coeffs[d] * v).sum();
                let diff = uh - u_exact(x);
                sum += w * diff * diff;
            }
        }
        Ok(sum.sqrt())
    }
}
