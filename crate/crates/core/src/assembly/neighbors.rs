//! Candidate interaction sets J_l = {m : aprx_min_dist(E_l, E_m) < r}.

use std::collections::HashMap;

use crate::assembly::distance::aprx_min_dist;
use crate::mesh::{BoundingBox, Mesh};

/// Per-element candidate lists, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    pub radius: f64,
    /// Elements the lists were built for, ascending.
    pub elements: Vec<usize>,
    pub lists: Vec<Vec<u32>>,
}

impl NeighborSets {
    /// List of `elements[k]`.
    pub fn of_index(&self, k: usize) -> &[u32] {
        &self.lists[k]
    }

    /// List of element `e`, if it was built.
    pub fn get(&self, e: usize) -> Option<&[u32]> {
        self.elements.binary_search(&e).ok().map(|k| self.lists[k].as_slice())
    }
}

/// J_l for every element with radius δ+ε.
pub fn neighbor_sets(mesh: &Mesh, radius: f64) -> NeighborSets {
    let all: Vec<usize> = (0..mesh.n_elements()).collect();
    neighbor_sets_for(mesh, &all, radius)
}

/// J_l for the listed elements, using a uniform grid of bins of size
/// `radius` (at least the cell size) over element boxes.
pub fn neighbor_sets_for(mesh: &Mesh, elements: &[usize], radius: f64) -> NeighborSets {
    let boxes: Vec<&BoundingBox> = mesh.elements.iter().map(|e| &e.bbox).collect();
    let mut lists = Vec::with_capacity(elements.len());
    let span = BoundingBox::of_points(boxes.iter().flat_map(|b| [&b.lo, &b.hi]));
    let diag = (0..mesh.dim).map(|k| span.hi[k] - span.lo[k]).fold(0.0, f64::max);
    if !radius.is_finite() || radius >= diag || mesh.n_elements() < 64 {
        for &l in elements {
            let list =
                (0..boxes.len()).filter(|&m| aprx_min_dist(boxes[l], boxes[m]) < radius).map(|m| m as u32).collect();
            lists.push(list);
        }
        return NeighborSets { radius, elements: elements.to_vec(), lists };
    }
    let size = radius.max(mesh.h);
    let bin = |x: &[f64; 3]| -> [i64; 3] {
        let mut b = [0i64; 3];
        for k in 0..mesh.dim {
            b[k] = ((x[k] - span.lo[k]) / size).floor() as i64;
        }
        b
    };
    // Every element is registered in each bin its box overlaps.
    let mut bins: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    for (m, b) in boxes.iter().enumerate() {
        let (lo, hi) = (bin(&b.lo), bin(&b.hi));
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    bins.entry([i, j, k]).or_default().push(m as u32);
                }
            }
        }
    }
    let mut seen = vec![u32::MAX; boxes.len()];
    for (idx, &l) in elements.iter().enumerate() {
        let b = boxes[l];
        let mut lo_pt = b.lo;
        let mut hi_pt = b.hi;
        for k in 0..mesh.dim {
            lo_pt[k] -= radius;
            hi_pt[k] += radius;
        }
        let (lo, hi) = (bin(&lo_pt), bin(&hi_pt));
        let mut list = Vec::new();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    if let Some(cands) = bins.get(&[i, j, k]) {
                        for &m in cands {
                            if seen[m as usize] != idx as u32 {
                                seen[m as usize] = idx as u32;
                                if aprx_min_dist(b, boxes[m as usize]) < radius {
                                    list.push(m);
                                }
                            }
                        }
                    }
                }
            }
        }
        list.sort_unstable();
        lists.push(list);
    }
    NeighborSets { radius, elements: elements.to_vec(), lists }
}
