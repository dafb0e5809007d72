//! Conservative box-to-box distances used by the neighbour search and the
//! adaptive refinement tests.

use crate::mesh::BoundingBox;

/// Lower bound on the distance between any two points of the boxes.
pub fn aprx_min_dist(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let mut d: f64 = 0.0;
    for k in 0..3 {
        let d1 = a.lo[k] - b.hi[k];
        let d2 = b.lo[k] - a.hi[k];
        d = d.max(d1).max(d2);
    }
    d
}

/// Upper bound on the distance between any two points of the boxes: the
/// largest distance between opposite vertices.
pub fn aprx_max_dist(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let mut s = 0.0;
    for k in 0..3 {
        let d1 = a.lo[k] - b.hi[k];
        let d2 = b.lo[k] - a.hi[k];
        s += (d1 * d1).max(d2 * d2);
    }
    s.sqrt()
}
