//! Brute-force, non-adaptive assembly of all four double-integral terms on
//! small meshes. Every element is split uniformly a given number of times
//! (separately for the inner and outer point sets) and the rules are applied
//! on each piece; the sums run over all point pairs in physical coordinates.
//! Used to check the adaptive assembly and the discrete term identities.

use crate::assembly::adaptive::{OuterPoints, Subcell};
use crate::error::Result;
use crate::fe_space::FeSpace;
use crate::kernel::KernelParams;
use crate::mesh::Mesh;
use crate::quadrature::RuleSet;

/// Dense row-major n × n matrices of the four terms. With x the outer point
/// and y the inner point:
/// A¹¹ᵢⱼ = Σ γ φᵢ(x)φⱼ(x) w w, A¹²ᵢⱼ = −Σ γ φᵢ(x)φⱼ(y) w w,
/// A²¹ᵢⱼ = −Σ γ φᵢ(y)φⱼ(x) w w, A²²ᵢⱼ = Σ γ φᵢ(y)φⱼ(y) w w.
#[derive(Debug, Clone)]
pub struct ReferenceTerms {
    pub n: usize,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a21: Vec<f64>,
    pub a22: Vec<f64>,
}

impl ReferenceTerms {
    /// 2(A²¹ + A²²).
    pub fn stiffness(&self) -> Vec<f64> {
        self.a21.iter().zip(&self.a22).map(|(a, b)| 2.0 * (a + b)).collect()
    }

    /// A¹¹ + A¹² + A²¹ + A²².
    pub fn four_term_sum(&self) -> Vec<f64> {
        (0..self.n * self.n).map(|k| self.a11[k] + self.a12[k] + self.a21[k] + self.a22[k]).collect()
    }
}

struct PointCloud {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    /// (global DOF, basis value) per point.
    basis: Vec<Vec<(usize, f64)>>,
}

fn point_cloud(mesh: &Mesh, space: &FeSpace, rules: &RuleSet, presplit: u32) -> Result<PointCloud> {
    let mut cloud = PointCloud { points: Vec::new(), weights: Vec::new(), basis: Vec::new() };
    for e in 0..mesh.n_elements() {
        let geom = mesh.geometry(e);
        let rule = rules.rule_for(geom.kind)?;
        let mut cells = vec![Subcell::root(geom.kind)];
        for _ in 0..presplit {
            cells = cells.iter().flat_map(|c| c.children(geom.kind.ref_dim())).collect();
        }
        let dofs = space.element_dofs(e);
        for cell in &cells {
            let pts = OuterPoints::new(&geom, cell, &rule, space.degree)?;
            for q in 0..pts.points.len() {
                cloud.points.push(pts.points[q]);
                cloud.weights.push(pts.weights[q]);
                let phi = &pts.phi[q * pts.n_basis..(q + 1) * pts.n_basis];
                cloud.basis.push(dofs.iter().copied().zip(phi.iter().copied()).collect());
            }
        }
    }
    Ok(cloud)
}

/// Accumulates `diag` (both basis functions at the summation point p) and
/// `cross` (−φᵢ(p) φⱼ(q)) over p ∈ `rows`, q ∈ `cols`.
fn accumulate(
    rows: &PointCloud,
    cols: &PointCloud,
    kernel: &KernelParams,
    n: usize,
    diag: &mut [f64],
    cross: &mut [f64],
) {
    let support2 = kernel.support() * kernel.support();
    let mut t = vec![0.0; n];
    let mut mark = vec![false; n];
    let mut touched = Vec::new();
    for (p, x) in rows.points.iter().enumerate() {
        let mut ksum = 0.0;
        for (q, y) in cols.points.iter().enumerate() {
            let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
            if d2 > support2 {
                continue;
            }
            let g = kernel.gamma_dist(d2.sqrt()) * cols.weights[q];
            if g == 0.0 {
                continue;
            }
            ksum += g;
            for &(j, v) in &cols.basis[q] {
                if !mark[j] {
                    mark[j] = true;
                    touched.push(j);
                }
                t[j] += g * v;
            }
        }
        let wp = rows.weights[p];
        for &(i, vi) in &rows.basis[p] {
            for &(j, vj) in &rows.basis[p] {
                diag[i * n + j] += wp * ksum * vi * vj;
            }
            for &j in &touched {
                cross[i * n + j] -= wp * vi * t[j];
            }
        }
        for &j in &touched {
            t[j] = 0.0;
            mark[j] = false;
        }
        touched.clear();
    }
}

/// All four terms with inner rule `inner` (points y) on elements split
/// `inner_split` times and outer rule `outer` (points x) on elements split
/// `outer_split` times.
pub fn reference_terms(
    mesh: &Mesh,
    space: &FeSpace,
    kernel: &KernelParams,
    (inner, inner_split): (&RuleSet, u32),
    (outer, outer_split): (&RuleSet, u32),
) -> Result<ReferenceTerms> {
    let n = space.n_dofs;
    let ys = point_cloud(mesh, space, inner, inner_split)?;
    let xs = point_cloud(mesh, space, outer, outer_split)?;
    let mut t = ReferenceTerms {
        n,
        a11: vec![0.0; n * n],
        a12: vec![0.0; n * n],
        a21: vec![0.0; n * n],
        a22: vec![0.0; n * n],
    };
    accumulate(&ys, &xs, kernel, n, &mut t.a22, &mut t.a21);
    accumulate(&xs, &ys, kernel, n, &mut t.a11, &mut t.a12);
    Ok(t)
}
