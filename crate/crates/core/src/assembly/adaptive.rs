//! Adaptive outer integration and the per-pair quadrature of the
//! A²¹ and A²² terms.

use crate::assembly::distance::{aprx_max_dist, aprx_min_dist};
use crate::error::{Error, Result};
use crate::fe_space::{eval_all, n_local};
use crate::kernel::KernelParams;
use crate::mesh::{BoundingBox, ElementGeometry, ElementKind};
use crate::quadrature::QuadratureRule;

/// Piece of an outer element in its reference coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Subcell {
    /// Sub-box of [−1, 1]^d.
    Box { lo: [f64; 3], hi: [f64; 3] },
    /// Sub-triangle of the unit triangle.
    Tri { v: [[f64; 2]; 3] },
}

impl Subcell {
    /// The whole reference element.
    pub fn root(kind: ElementKind) -> Self {
        match kind {
            ElementKind::Tri => Subcell::Tri { v: [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] },
            ElementKind::Quad => Subcell::Box { lo: [-1.0, -1.0, 0.0], hi: [1.0, 1.0, 0.0] },
            ElementKind::Hex => Subcell::Box { lo: [-1.0; 3], hi: [1.0; 3] },
        }
    }

    /// Midpoint split: 2^d sub-boxes, or 4 self-similar sub-triangles.
    pub fn children(&self, ref_dim: usize) -> Vec<Subcell> {
        match *self {
            Subcell::Box { lo, hi } => {
                let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
                (0..1usize << ref_dim)
                    .map(|c| {
                        let mut l = lo;
                        let mut h = hi;
                        for k in 0..ref_dim {
                            if c >> k & 1 == 0 {
                                h[k] = mid[k];
                            } else {
                                l[k] = mid[k];
                            }
                        }
                        Subcell::Box { lo: l, hi: h }
                    })
                    .collect()
            }
            Subcell::Tri { v } => {
                let m = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let (m01, m12, m20) = (m(v[0], v[1]), m(v[1], v[2]), m(v[2], v[0]));
                vec![
                    Subcell::Tri { v: [v[0], m01, m20] },
                    Subcell::Tri { v: [m01, v[1], m12] },
                    Subcell::Tri { v: [m20, m12, v[2]] },
                    Subcell::Tri { v: [m01, m12, m20] },
                ]
            }
        }
    }

    /// Parent reference coordinates of a rule point given on the reference
    /// element, and the measure ratio of the sub-cell map.
    pub fn to_parent(&self, r: &[f64; 3], ref_dim: usize) -> ([f64; 3], f64) {
        match *self {
            Subcell::Box { lo, hi } => {
                let mut p = [0.0; 3];
                let mut scale = 1.0;
                for k in 0..ref_dim {
                    let half = 0.5 * (hi[k] - lo[k]);
                    p[k] = 0.5 * (lo[k] + hi[k]) + half * r[k];
                    scale *= half;
                }
                (p, scale)
            }
            Subcell::Tri { v } => {
                let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
                let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1]];
                let p = [v[0][0] + e1[0] * r[0] + e2[0] * r[1], v[0][1] + e1[1] * r[0] + e2[1] * r[1], 0.0];
                (p, (e1[0] * e2[1] - e1[1] * e2[0]).abs())
            }
        }
    }

    /// Physical bounding box of the sub-cell (exact for multilinear maps).
    pub fn bbox(&self, geom: &ElementGeometry) -> BoundingBox {
        let mut b = BoundingBox::empty();
        match *self {
            Subcell::Box { lo, hi } => {
                let d = geom.kind.ref_dim();
                for c in 0..1usize << d {
                    let mut r = [0.0; 3];
                    for k in 0..d {
                        r[k] = if c >> k & 1 == 0 { lo[k] } else { hi[k] };
                    }
                    b.include(&geom.map(&r));
                }
            }
            Subcell::Tri { v } => {
                for p in v {
                    b.include(&geom.map(&[p[0], p[1], 0.0]));
                }
            }
        }
        b
    }
}

/// Quadrature points of an outer sub-cell with basis values of the parent
/// element.
#[derive(Debug, Clone)]
pub struct OuterPoints {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Row-major `points × n_basis`.
    pub phi: Vec<f64>,
    pub n_basis: usize,
    pub bbox: BoundingBox,
}

impl OuterPoints {
    pub fn new(geom: &ElementGeometry, cell: &Subcell, rule: &QuadratureRule, degree: usize) -> Result<Self> {
        let d = geom.kind.ref_dim();
        let nb = n_local(geom.kind, degree);
        let mut points = Vec::with_capacity(rule.len());
        let mut weights = Vec::with_capacity(rule.len());
        let mut phi = vec![0.0; rule.len() * nb];
        for (q, (r, w)) in rule.ref_points.iter().zip(&rule.weights).enumerate() {
            let (p, scale) = cell.to_parent(r, d);
            let (x, det) = geom.map_with_det(&p);
            if !(det > 0.0) {
                return Err(Error::DegenerateElement { element: geom.id, det });
            }
            points.push(x);
            weights.push(w * scale * det);
            eval_all(geom.kind, degree, &p, &mut phi[q * nb..(q + 1) * nb]);
        }
        Ok(Self { points, weights, phi, n_basis: nb, bbox: cell.bbox(geom) })
    }
}

/// Quadrature points of a whole inner element with basis values.
#[derive(Debug, Clone)]
pub struct InnerData {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Row-major `points × n_basis`.
    pub phi: Vec<f64>,
    pub n_basis: usize,
    pub bbox: BoundingBox,
}

impl InnerData {
    pub fn new(geom: &ElementGeometry, rule: &QuadratureRule, degree: usize) -> Result<Self> {
        let o = OuterPoints::new(geom, &Subcell::root(geom.kind), rule, degree)?;
        Ok(Self { points: o.points, weights: o.weights, phi: o.phi, n_basis: o.n_basis, bbox: o.bbox })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Accumulated quadrature sums of one (outer element, inner element) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairContribution {
    /// `s[q1 * nj + j] = Σ γ(x_q2, y_q1) φ_j(x_q2) w_q1 w_q2`.
    pub s: Vec<f64>,
    /// `c22[q1] = Σ γ(x_q2, y_q1) w_q1 w_q2`.
    pub c22: Vec<f64>,
    pub n_outer_basis: usize,
    /// Integration calls made for this pair.
    pub integrations: usize,
    /// Outer measure integrated plus outer measure discarded as out of range.
    pub covered_measure: f64,
}

impl PairContribution {
    pub fn new(n_inner_points: usize, n_outer_basis: usize) -> Self {
        Self {
            s: vec![0.0; n_inner_points * n_outer_basis],
            c22: vec![0.0; n_inner_points],
            n_outer_basis,
            integrations: 0,
            covered_measure: 0.0,
        }
    }

    /// Local A²¹ block, row-major `inner basis × outer basis`.
    pub fn a21_block(&self, inner: &InnerData) -> Vec<f64> {
        let (ni, nj) = (inner.n_basis, self.n_outer_basis);
        let mut out = vec![0.0; ni * nj];
        for q in 0..inner.len() {
            let phi = &inner.phi[q * ni..(q + 1) * ni];
            let s = &self.s[q * nj..(q + 1) * nj];
            for i in 0..ni {
                for j in 0..nj {
                    out[i * nj + j] -= phi[i] * s[j];
                }
            }
        }
        out
    }
}

/// Local A²² block from the accumulated inner weights, row-major
/// `inner basis × inner basis`.
pub fn a22_block(inner: &InnerData, c22: &[f64]) -> Vec<f64> {
    let ni = inner.n_basis;
    let mut out = vec![0.0; ni * ni];
    for (q, c) in c22.iter().enumerate() {
        let phi = &inner.phi[q * ni..(q + 1) * ni];
        for i in 0..ni {
            let a = c * phi[i];
            for j in 0..ni {
                out[i * ni + j] += a * phi[j];
            }
        }
    }
    out
}

/// Adds the quadrature of one outer sub-cell against one inner element.
pub fn integrate_pair(outer: &OuterPoints, inner: &InnerData, kernel: &KernelParams, acc: &mut PairContribution) {
    acc.integrations += 1;
    acc.covered_measure += outer.weights.iter().sum::<f64>();
    let nj = outer.n_basis;
    let c = kernel.c_delta_eps;
    let gap = aprx_min_dist(&outer.bbox, &inner.bbox);
    // The sharp kernel still includes pairs at exactly distance δ.
    if gap > kernel.support() || (kernel.eps > 0.0 && gap >= kernel.support()) {
        return;
    }
    let mut t = vec![0.0; nj];
    if aprx_max_dist(&outer.bbox, &inner.bbox) < kernel.core() {
        // Every point pair sits where the mollifier is one.
        let mut wsum = 0.0;
        for (q2, w2) in outer.weights.iter().enumerate() {
            wsum += w2;
            for j in 0..nj {
                t[j] += w2 * outer.phi[q2 * nj + j];
            }
        }
        for (q1, w1) in inner.weights.iter().enumerate() {
            let f = c * w1;
            for j in 0..nj {
                acc.s[q1 * nj + j] += f * t[j];
            }
            acc.c22[q1] += f * wsum;
        }
        return;
    }
    let core = kernel.core();
    let support = kernel.support();
    let (core2, support2) = (core * core, support * support);
    for (q1, (y, w1)) in inner.points.iter().zip(&inner.weights).enumerate() {
        t.iter_mut().for_each(|v| *v = 0.0);
        let mut ksum = 0.0;
        for (q2, (x, w2)) in outer.points.iter().zip(&outer.weights).enumerate() {
            let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
            let mu = kernel.mollifier_sq(d2, core2, support2);
            if mu == 0.0 {
                continue;
            }
            let k = mu * w2;
            ksum += k;
            for j in 0..nj {
                t[j] += k * outer.phi[q2 * nj + j];
            }
        }
        let f = c * w1;
        for j in 0..nj {
            acc.s[q1 * nj + j] += f * t[j];
        }
        acc.c22[q1] += f * ksum;
    }
}

/// Recursion depth limits and the kernel radii driving Algorithm 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveLimits {
    pub l_min: u32,
    pub l_max: u32,
    /// δ − ε.
    pub core: f64,
    /// δ + ε.
    pub support: f64,
}

/// Receiver of the integration decisions of [`adaptive_element_pair`].
pub trait AdaptiveSink {
    /// Integrate the outer sub-cell against the listed inner elements.
    fn integrate(&mut self, cell: &Subcell, targets: &[usize]) -> Result<()>;
    /// The sub-cell is out of range of `target` and is dropped for it.
    fn discard(&mut self, _cell: &Subcell, _target: usize) -> Result<()> {
        Ok(())
    }
}

/// Algorithm 1: recursive outer-cell refinement against the candidate inner
/// elements `j` (whose boxes `inner_bbox` returns), starting at level
/// `level` (1 for the whole element).
pub fn adaptive_element_pair<S: AdaptiveSink>(
    outer: &ElementGeometry,
    cell: &Subcell,
    j: &[usize],
    level: u32,
    limits: &AdaptiveLimits,
    inner_bbox: &dyn Fn(usize) -> BoundingBox,
    sink: &mut S,
) -> Result<()> {
    let d = outer.kind.ref_dim();
    if level < limits.l_min {
        for child in cell.children(d) {
            adaptive_element_pair(outer, &child, j, level + 1, limits, inner_bbox, sink)?;
        }
        return Ok(());
    }
    if level == limits.l_max {
        return sink.integrate(cell, j);
    }
    let cb = cell.bbox(outer);
    let mut j_int = Vec::new();
    let mut j_ref = Vec::new();
    for &m in j {
        let mb = inner_bbox(m);
        if aprx_max_dist(&cb, &mb) < limits.core {
            j_int.push(m);
        } else if aprx_min_dist(&cb, &mb) < limits.support {
            j_ref.push(m);
        } else {
            sink.discard(cell, m)?;
        }
    }
    if !j_int.is_empty() {
        sink.integrate(cell, &j_int)?;
    }
    if !j_ref.is_empty() {
        for child in cell.children(d) {
            adaptive_element_pair(outer, &child, &j_ref, level + 1, limits, inner_bbox, sink)?;
        }
    }
    Ok(())
}

/// Sink that integrates against a list of inner elements and keeps one
/// [`PairContribution`] per target index.
pub struct PairSink<'a> {
    pub outer: &'a ElementGeometry,
    pub rule: &'a QuadratureRule,
    pub degree: usize,
    pub kernel: &'a KernelParams,
    pub inners: Vec<&'a InnerData>,
    pub contributions: Vec<PairContribution>,
}

impl<'a> PairSink<'a> {
    pub fn new(
        outer: &'a ElementGeometry,
        rule: &'a QuadratureRule,
        degree: usize,
        kernel: &'a KernelParams,
        inners: Vec<&'a InnerData>,
    ) -> Self {
        let nj = n_local(outer.kind, degree);
        let contributions = inners.iter().map(|d| PairContribution::new(d.len(), nj)).collect();
        Self { outer, rule, degree, kernel, inners, contributions }
    }

    /// Run Algorithm 1 over all inner elements of the sink.
    pub fn run(&mut self, limits: &AdaptiveLimits) -> Result<()> {
        let boxes: Vec<BoundingBox> = self.inners.iter().map(|d| d.bbox).collect();
        let targets: Vec<usize> = (0..boxes.len()).collect();
        let outer = self.outer;
        adaptive_element_pair(outer, &Subcell::root(outer.kind), &targets, 1, limits, &|m| boxes[m], self)
    }
}

impl AdaptiveSink for PairSink<'_> {
    fn integrate(&mut self, cell: &Subcell, targets: &[usize]) -> Result<()> {
        let pts = OuterPoints::new(self.outer, cell, self.rule, self.degree)?;
        for &m in targets {
            integrate_pair(&pts, self.inners[m], self.kernel, &mut self.contributions[m]);
        }
        Ok(())
    }

    fn discard(&mut self, cell: &Subcell, target: usize) -> Result<()> {
        let pts = OuterPoints::new(self.outer, cell, self.rule, self.degree)?;
        self.contributions[target].covered_measure += pts.weights.iter().sum::<f64>();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::RuleSet;

    fn square(x0: f64, y0: f64, h: f64) -> ElementGeometry {
        ElementGeometry::new(
            0,
            ElementKind::Quad,
            &[[x0, y0, 0.0], [x0 + h, y0, 0.0], [x0, y0 + h, 0.0], [x0 + h, y0 + h, 0.0]],
        )
    }

    fn limits(k: &KernelParams, l_min: u32, l_max: u32) -> AdaptiveLimits {
        AdaptiveLimits { l_min, l_max, core: k.core(), support: k.support() }
    }

    #[test]
    fn children_tile_the_parent() {
        for kind in [ElementKind::Quad, ElementKind::Tri, ElementKind::Hex] {
            let root = Subcell::root(kind);
            let rule = RuleSet::default().rule_for(kind).unwrap();
            let measure = |c: &Subcell| -> f64 {
                rule.ref_points.iter().zip(&rule.weights).map(|(r, w)| w * c.to_parent(r, kind.ref_dim()).1).sum()
            };
            let total: f64 = root.children(kind.ref_dim()).iter().map(measure).sum();
            assert!((total - measure(&root)).abs() < 1e-14);
            assert_eq!(root.children(kind.ref_dim()).len(), kind.n_children());
        }
    }

    #[test]
    fn single_level_is_one_call_per_target() {
        let k = KernelParams::new(2, 0.2, 0.05, 1.0).unwrap();
        let rule = RuleSet::default().rule_for(ElementKind::Quad).unwrap();
        let outer = square(0.0, 0.0, 0.1);
        let inners: Vec<InnerData> =
            (0..5).map(|i| InnerData::new(&square(0.1 * i as f64, 0.0, 0.1), &rule, 1).unwrap()).collect();
        let mut sink = PairSink::new(&outer, &rule, 1, &k, inners.iter().collect());
        sink.run(&limits(&k, 1, 1)).unwrap();
        assert!(sink.contributions.iter().all(|c| c.integrations == 1));
    }

    #[test]
    fn far_field_is_integrated_without_splitting() {
        let k = KernelParams::new(2, 0.5, 0.05, 1.0).unwrap();
        let rule = RuleSet::default().rule_for(ElementKind::Quad).unwrap();
        let outer = square(0.0, 0.0, 0.1);
        let inner = InnerData::new(&square(0.1, 0.0, 0.1), &rule, 1).unwrap();
        let mut sink = PairSink::new(&outer, &rule, 1, &k, vec![&inner]);
        sink.run(&limits(&k, 1, 5)).unwrap();
        assert_eq!(sink.contributions[0].integrations, 1);
    }

    #[test]
    fn covered_measure_telescopes() {
        let k = KernelParams::new(2, 0.2, 0.03, 1.0).unwrap();
        for kind in [ElementKind::Quad, ElementKind::Tri] {
            let rule = RuleSet::default().rule_for(kind).unwrap();
            let outer = if kind == ElementKind::Quad {
                square(0.0, 0.0, 0.1)
            } else {
                ElementGeometry::new(0, kind, &[[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.1, 0.1, 0.0]])
            };
            let inners: Vec<InnerData> = (0..4)
                .map(|i| {
                    InnerData::new(
                        &square(0.07 * i as f64, 0.1, 0.1),
                        &RuleSet::default().rule_for(ElementKind::Quad).unwrap(),
                        1,
                    )
                    .unwrap()
                })
                .collect();
            let mut sink = PairSink::new(&outer, &rule, 1, &k, inners.iter().collect());
            sink.run(&limits(&k, 1, 5)).unwrap();
            for c in &sink.contributions {
                assert!((c.covered_measure - outer.measure()).abs() < 1e-14, "{kind:?}");
            }
        }
    }

    #[test]
    fn partition_of_unity_sums() {
        // Σ_i A²¹ row contributions = −Σ γ w w φ_j(x_q2); Σ_j of that = −Σ γ w w.
        let k = KernelParams::new(2, 0.15, 0.05, 1.0).unwrap();
        let rule = RuleSet::default().rule_for(ElementKind::Quad).unwrap();
        let outer = OuterPoints::new(&square(0.0, 0.0, 0.1), &Subcell::root(ElementKind::Quad), &rule, 2).unwrap();
        let inner = InnerData::new(&square(0.1, 0.05, 0.1), &rule, 2).unwrap();
        let mut acc = PairContribution::new(inner.len(), outer.n_basis);
        integrate_pair(&outer, &inner, &k, &mut acc);
        let a21 = acc.a21_block(&inner);
        let a22 = a22_block(&inner, &acc.c22);
        let total: f64 = acc.c22.iter().sum();
        let mut brute_jsum = vec![0.0; outer.n_basis];
        for (q2, (x, w2)) in outer.points.iter().zip(&outer.weights).enumerate() {
            for (y, w1) in inner.points.iter().zip(&inner.weights) {
                let g = k.gamma_eps(x, y) * w1 * w2;
                for j in 0..outer.n_basis {
                    brute_jsum[j] += g * outer.phi[q2 * outer.n_basis + j];
                }
            }
        }
        for j in 0..outer.n_basis {
            let col: f64 = (0..inner.n_basis).map(|i| a21[i * outer.n_basis + j]).sum();
            assert!((col + brute_jsum[j]).abs() < 1e-12 * total);
        }
        let s22: f64 = a22.iter().sum();
        assert!((s22 - total).abs() < 1e-12 * total);
        let s21: f64 = a21.iter().sum();
        assert!((s21 + total).abs() < 1e-12 * total);
    }

    #[test]
    fn single_point_pair_by_hand() {
        let k = KernelParams::new(2, 0.3, 0.1, 1.0).unwrap();
        let one = QuadratureRule { ref_points: vec![[0.0; 3]], weights: vec![4.0], exact_degree: 1 };
        let outer = OuterPoints::new(&square(0.0, 0.0, 0.1), &Subcell::root(ElementKind::Quad), &one, 1).unwrap();
        let inner = InnerData::new(&square(0.2, 0.0, 0.1), &one, 1).unwrap();
        let mut acc = PairContribution::new(1, 4);
        integrate_pair(&outer, &inner, &k, &mut acc);
        let g = k.gamma_dist(0.2);
        let w = 0.01;
        let a21 = acc.a21_block(&inner);
        assert!((a21[0] + g * 0.25 * 0.25 * w * w).abs() < 1e-15 * g);
        assert!((acc.c22[0] - g * w * w).abs() < 1e-15 * g);
    }

    #[test]
    fn far_pair_contributes_nothing() {
        let k = KernelParams::new(2, 0.1, 0.02, 1.0).unwrap();
        let rule = RuleSet::default().rule_for(ElementKind::Quad).unwrap();
        let outer = OuterPoints::new(&square(0.0, 0.0, 0.1), &Subcell::root(ElementKind::Quad), &rule, 1).unwrap();
        let inner = InnerData::new(&square(0.5, 0.0, 0.1), &rule, 1).unwrap();
        let mut acc = PairContribution::new(inner.len(), 4);
        integrate_pair(&outer, &inner, &k, &mut acc);
        assert!(acc.s.iter().chain(&acc.c22).all(|&v| v == 0.0));
    }
}
