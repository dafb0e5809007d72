//! Reference-element quadrature rules and their mapping to physical elements.

use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, ElementKind};

/// Points and positive weights on a reference element. Points always carry
/// three coordinates; unused trailing coordinates are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub ref_points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// n-point Gauss-Legendre rule on [−1, 1], exact to degree 2n − 1.
pub fn gauss_legendre_1d(n: usize) -> Result<QuadratureRule> {
    if !(1..=10).contains(&n) {
        return Err(Error::UnsupportedRule { family: "Gauss-Legendre", n });
    }
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        pts[n - 1 - i] = x;
        wts[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    if n % 2 == 1 {
        pts[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        ref_points: pts.iter().map(|&x| [x, 0.0, 0.0]).collect(),
        weights: wts,
        exact_degree: 2 * n - 1,
    })
}

/// n-point Gauss-Lobatto rule on [−1, 1] (endpoints included), exact to
/// degree 2n − 3.
pub fn gauss_lobatto_1d(n: usize) -> Result<QuadratureRule> {
    if !(2..=6).contains(&n) {
        return Err(Error::UnsupportedRule { family: "Gauss-Lobatto", n });
    }
    let order = n - 1;
    let mut pts: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * i as f64 / order as f64).cos()).collect();
    let mut last = vec![0.0; n];
    for _ in 0..100 {
        let mut converged = true;
        for (x, pn) in pts.iter_mut().zip(last.iter_mut()) {
            let (mut p0, mut p1) = (1.0, *x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * *x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            *pn = p1;
            let step = (*x * p1 - p0) / (n as f64 * p1);
            *x -= step;
            converged &= step.abs() < 1e-16;
        }
        if converged {
            break;
        }
    }
    let mut rule: Vec<(f64, f64)> =
        pts.iter().zip(&last).map(|(&x, &p)| (x, 2.0 / (order as f64 * n as f64 * p * p))).collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule[0].0 = -1.0;
    rule[n - 1].0 = 1.0;
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    Ok(QuadratureRule {
        ref_points: rule.iter().map(|&(x, _)| [x, 0.0, 0.0]).collect(),
        weights: rule.iter().map(|&(_, w)| w).collect(),
        exact_degree: 2 * n - 3,
    })
}

/// Tensor product of a 1D rule on [−1, 1]^dim; the first coordinate varies
/// fastest.
pub fn tensor_rule(rule: &QuadratureRule, dim: usize) -> QuadratureRule {
    let n = rule.len();
    let total = n.pow(dim as u32);
    let mut ref_points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for idx in 0..total {
        let mut p = [0.0; 3];
        let mut w = 1.0;
        let mut rest = idx;
        for c in p.iter_mut().take(dim) {
            let k = rest % n;
            rest /= n;
            *c = rule.ref_points[k][0];
            w *= rule.weights[k];
        }
        ref_points.push(p);
        weights.push(w);
    }
    QuadratureRule { ref_points, weights, exact_degree: rule.exact_degree }
}

/// Dunavant's 7-point degree-5 rule on the unit triangle (area 1/2).
pub fn dunavant7() -> QuadratureRule {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    let third = 1.0 / 3.0;
    let ref_points = vec![
        [third, third, 0.0],
        [a1, a1, 0.0],
        [b1, a1, 0.0],
        [a1, b1, 0.0],
        [a2, a2, 0.0],
        [b2, a2, 0.0],
        [a2, b2, 0.0],
    ];
    let weights = [9.0 / 40.0, w1, w1, w1, w2, w2, w2].iter().map(|w| w / 2.0).collect();
    QuadratureRule { ref_points, weights, exact_degree: 5 }
}

/// Collapsed (Duffy) Gauss rule on the unit triangle with n² points, exact to
/// degree 2n − 2.
pub fn collapsed_triangle(n: usize) -> Result<QuadratureRule> {
    let g = gauss_legendre_1d(n)?;
    let mut ref_points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (pa, wa) in g.ref_points.iter().zip(&g.weights) {
        let s = 0.5 * (pa[0] + 1.0);
        for (pb, wb) in g.ref_points.iter().zip(&g.weights) {
            let t = 0.5 * (pb[0] + 1.0);
            ref_points.push([s, t * (1.0 - s), 0.0]);
            weights.push(0.25 * wa * wb * (1.0 - s));
        }
    }
    Ok(QuadratureRule { ref_points, weights, exact_degree: 2 * n - 2 })
}

/// Rule family for quadrilaterals and hexahedra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorFamily {
    Legendre(usize),
    Lobatto(usize),
}

/// Rule family for triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleFamily {
    Dunavant7,
    Collapsed(usize),
}

/// Quadrature selection per element kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleSet {
    pub tensor: TensorFamily,
    pub triangle: TriangleFamily,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self { tensor: TensorFamily::Legendre(3), triangle: TriangleFamily::Dunavant7 }
    }
}

impl RuleSet {
    /// Gauss-Legendre of the given order on every element kind.
    pub fn legendre(n: usize) -> Self {
        Self { tensor: TensorFamily::Legendre(n), triangle: TriangleFamily::Collapsed(n) }
    }

    pub fn rule_for(&self, kind: ElementKind) -> Result<QuadratureRule> {
        match kind {
            ElementKind::Tri => match self.triangle {
                TriangleFamily::Dunavant7 => Ok(dunavant7()),
                TriangleFamily::Collapsed(n) => collapsed_triangle(n),
            },
            ElementKind::Quad | ElementKind::Hex => {
                let base = match self.tensor {
                    TensorFamily::Legendre(n) => gauss_legendre_1d(n)?,
                    TensorFamily::Lobatto(n) => gauss_lobatto_1d(n)?,
                };
                Ok(tensor_rule(&base, kind.ref_dim()))
            }
        }
    }
}

/// Physical points and Jacobian-scaled weights of a rule on an element.
pub fn map_to_physical(rule: &QuadratureRule, geom: &ElementGeometry) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    let mut pts = Vec::with_capacity(rule.len());
    let mut wts = Vec::with_capacity(rule.len());
    for (r, w) in rule.ref_points.iter().zip(&rule.weights) {
        let (x, det) = geom.map_with_det(r);
        if !(det > 0.0) {
            return Err(Error::DegenerateElement { element: geom.id, det });
        }
        pts.push(x);
        wts.push(w * det);
    }
    Ok((pts, wts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_1d(rule: &QuadratureRule, f: impl Fn(f64) -> f64) -> f64 {
        rule.ref_points.iter().zip(&rule.weights).map(|(p, w)| w * f(p[0])).sum()
    }

    #[test]
    fn legendre_examples() {
        let g1 = gauss_legendre_1d(1).unwrap();
        assert_eq!(g1.ref_points[0][0], 0.0);
        assert!((g1.weights[0] - 2.0).abs() < 1e-15);
        let g3 = gauss_legendre_1d(3).unwrap();
        assert!((integrate_1d(&g3, |x| x.powi(4)) - 0.4).abs() < 1e-14);
        assert!((g3.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(gauss_legendre_1d(0).is_err());
        assert!(gauss_legendre_1d(11).is_err());
    }

    #[test]
    fn legendre_exactness_all_orders() {
        for n in 1..=10 {
            let g = gauss_legendre_1d(n).unwrap();
            for k in 0..=(2 * n - 1) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = integrate_1d(&g, |x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn lobatto_examples_and_exactness() {
        let l3 = gauss_lobatto_1d(3).unwrap();
        let xs: Vec<f64> = l3.ref_points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        for (w, e) in l3.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((w - e).abs() < 1e-15);
        }
        let l2 = gauss_lobatto_1d(2).unwrap();
        assert!((l2.weights[0] - 1.0).abs() < 1e-15 && (l2.weights[1] - 1.0).abs() < 1e-15);
        assert!((integrate_1d(&l3, |x| x * x) - 2.0 / 3.0).abs() < 1e-15);
        for n in 2..=6 {
            let l = gauss_lobatto_1d(n).unwrap();
            for k in 0..=(2 * n - 3) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((integrate_1d(&l, |x| x.powi(k as i32)) - exact).abs() < 1e-13);
            }
        }
        assert!(gauss_lobatto_1d(1).is_err());
        assert!(gauss_lobatto_1d(7).is_err());
    }

    fn triangle_monomial(a: u32, b: u32) -> f64 {
        // ∫ x^a y^b over the unit triangle = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_exactness() {
        let d = dunavant7();
        assert!((d.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let eval = |r: &QuadratureRule, a: i32, b: i32| -> f64 {
            r.ref_points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(a) * p[1].powi(b)).sum()
        };
        assert!((eval(&d, 2, 1) - 1.0 / 60.0).abs() < 1e-14);
        assert!((eval(&d, 5, 0) - 1.0 / 42.0).abs() < 1e-14);
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                assert!((eval(&d, a as i32, b as i32) - triangle_monomial(a, b)).abs() < 1e-14);
            }
        }
        for n in 1..=6 {
            let c = collapsed_triangle(n).unwrap();
            for a in 0..=(2 * n as u32 - 2) {
                for b in 0..=(2 * n as u32 - 2 - a) {
                    let got = eval(&c, a as i32, b as i32);
                    assert!((got - triangle_monomial(a, b)).abs() < 1e-14, "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn tensor_exactness() {
        let q = tensor_rule(&gauss_legendre_1d(3).unwrap(), 3);
        assert_eq!(q.len(), 27);
        let got: f64 =
            q.ref_points.iter().zip(&q.weights).map(|(p, w)| w * p[0].powi(4) * p[1].powi(2) * p[2].powi(5)).sum();
        assert!(got.abs() < 1e-15);
        let got: f64 = q.ref_points.iter().zip(&q.weights).map(|(p, w)| w * p[0].powi(4) * p[1].powi(2)).sum();
        assert!((got - 0.4 * (2.0 / 3.0) * 2.0).abs() < 1e-14);
    }

    #[test]
    fn mapped_weights_sum_to_measure() {
        let h = 0.1;
        let quad =
            ElementGeometry::new(0, ElementKind::Quad, &[[0.0, 0.0, 0.0], [h, 0.0, 0.0], [0.0, h, 0.0], [h, h, 0.0]]);
        let rule = RuleSet::default().rule_for(ElementKind::Quad).unwrap();
        let (_, w) = map_to_physical(&rule, &quad).unwrap();
        assert!((w.iter().sum::<f64>() - h * h).abs() < 1e-15);
        let unit = ElementGeometry::new(
            0,
            ElementKind::Quad,
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
        );
        let (_, w) = map_to_physical(&rule, &unit).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let tri = ElementGeometry::new(0, ElementKind::Tri, &[[0.3, -0.1, 0.0], [1.1, 0.2, 0.0], [0.5, 0.9, 0.0]]);
        let area = 0.5 * ((1.1 - 0.3) * (0.9 + 0.1) - (0.5 - 0.3) * (0.2 + 0.1));
        let (_, w) = map_to_physical(&dunavant7(), &tri).unwrap();
        assert!((w.iter().sum::<f64>() - area).abs() < 1e-14 * area);
        let flipped = ElementGeometry::new(3, ElementKind::Tri, &[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(matches!(map_to_physical(&dunavant7(), &flipped), Err(Error::DegenerateElement { element: 3, .. })));
    }
}
