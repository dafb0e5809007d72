//! Constant kernels on Euclidean balls, their mollified versions and the
//! scaling constants that make the nonlocal operator consistent with κΔ.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Connector polynomial of the mollifier, rising from 0 at r = −1 to 1 at
/// r = 1 with four vanishing derivatives at both ends.
pub fn xi(r: f64) -> f64 {
    let r2 = r * r;
    // 128 + 315r − 420r³ + 378r⁵ − 180r⁷ + 35r⁹ in Horner form over r².
    let odd = 315.0 + r2 * (-420.0 + r2 * (378.0 + r2 * (-180.0 + r2 * 35.0)));
    (128.0 + r * odd) / 256.0
}

/// Derivative of [`xi`], (315/256)(1 − r²)⁴.
pub fn xi_prime(r: f64) -> f64 {
    let s = 1.0 - r * r;
    315.0 / 256.0 * s * s * s * s
}

/// C_δ for the constant kernel on a ball of radius δ.
pub fn scaling_c_delta(dim: usize, delta: f64, kappa: f64) -> f64 {
    match dim {
        2 => 4.0 * kappa / (PI * delta.powi(4)),
        _ => 15.0 * kappa / (4.0 * PI * delta.powi(5)),
    }
}

/// Denominator relating C_{δ,ε} to C_δ.
pub fn mollified_denominator(dim: usize, delta: f64, eps: f64) -> f64 {
    let t2 = (eps / delta).powi(2);
    match dim {
        2 => 1.0 + 6.0 / 11.0 * t2 + 3.0 / 143.0 * t2 * t2,
        _ => 1.0 + 10.0 / 11.0 * t2 + 15.0 / 143.0 * t2 * t2,
    }
}

/// C_{δ,ε}, the scaling of the mollified kernel.
pub fn scaling_c_delta_eps(dim: usize, delta: f64, eps: f64, kappa: f64) -> f64 {
    if eps == 0.0 {
        return scaling_c_delta(dim, delta, kappa);
    }
    scaling_c_delta(dim, delta, kappa) / mollified_denominator(dim, delta, eps)
}

/// Horizon, mollifier width and scaling of a constant mollified kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub dim: usize,
    pub delta: f64,
    pub eps: f64,
    pub kappa: f64,
    pub c_delta: f64,
    pub c_delta_eps: f64,
}

impl KernelParams {
    pub fn new(dim: usize, delta: f64, eps: f64, kappa: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!("dimension {dim} (expected 2 or 3)")));
        }
        if !(delta > 0.0) || !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} and kappa = {kappa} must be positive")));
        }
        if !(eps >= 0.0 && eps < delta) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must lie in [0, delta)")));
        }
        Ok(Self {
            dim,
            delta,
            eps,
            kappa,
            c_delta: scaling_c_delta(dim, delta, kappa),
            c_delta_eps: scaling_c_delta_eps(dim, delta, eps, kappa),
        })
    }

    /// Sharp kernel with the same horizon (ε = 0).
    pub fn sharp(&self) -> Self {
        Self { eps: 0.0, c_delta_eps: self.c_delta, ..*self }
    }

    /// Radius beyond which the kernel vanishes.
    pub fn support(&self) -> f64 {
        self.delta + self.eps
    }

    /// Radius below which the mollifier is identically one.
    pub fn core(&self) -> f64 {
        self.delta - self.eps
    }

    /// μ_{δ,ε}(d).
    pub fn mollifier(&self, d: f64) -> f64 {
        if self.eps == 0.0 {
            return if d <= self.delta { 1.0 } else { 0.0 };
        }
        if d < self.delta - self.eps {
            1.0
        } else if d <= self.delta + self.eps {
            xi((self.delta - d) / self.eps)
        } else {
            0.0
        }
    }

    /// γ_ε as a function of the distance.
    pub fn gamma_dist(&self, d: f64) -> f64 {
        self.c_delta_eps * self.mollifier(d)
    }

    /// γ_ε(x, y) for points given by their first `dim` coordinates.
    pub fn gamma_eps(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).take(self.dim).map(|(a, b)| (a - b) * (a - b)).sum();
        self.gamma_dist(d2.sqrt())
    }

    /// Mollifier from a squared distance, avoiding the square root away from
    /// the transition shell.
    #[inline]
    pub(crate) fn mollifier_sq(&self, d2: f64, core2: f64, support2: f64) -> f64 {
        if self.eps == 0.0 {
            return if d2 <= support2 { 1.0 } else { 0.0 };
        }
        if d2 < core2 {
            1.0
        } else if d2 > support2 {
            0.0
        } else {
            self.mollifier(d2.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_endpoints_and_midpoint() {
        assert_eq!(xi(0.0), 0.5);
        assert!((xi(1.0) - 1.0).abs() < 1e-15);
        assert!(xi(-1.0).abs() < 1e-15);
        assert!((xi(0.5) - 0.9510726928710938).abs() < 1e-15);
    }

    #[test]
    fn xi_prime_matches_finite_difference() {
        for k in 0..=20 {
            let r = -1.0 + 0.1 * k as f64;
            let h = 1e-6;
            let fd = (xi(r + h) - xi(r - h)) / (2.0 * h);
            assert!((fd - xi_prime(r)).abs() < 1e-8, "r = {r}");
        }
    }

    #[test]
    fn scaling_constants() {
        let c2 = scaling_c_delta(2, 0.2, 1.0);
        assert!((c2 - 795.7747154594768).abs() < 1e-12 * c2);
        let c3 = scaling_c_delta(3, 0.2, 1.0);
        assert!((c3 - 15.0 / (4.0 * PI * 0.00032)).abs() < 1e-12 * c3);
        assert!((scaling_c_delta(2, 0.4, 1.0) - c2 / 16.0).abs() < 1e-12 * c2);
        assert_eq!(scaling_c_delta_eps(2, 0.2, 0.0, 1.0), c2);
        let d2 = mollified_denominator(2, 0.2, 0.1);
        assert!((d2 - 1.1376748251748252).abs() < 1e-15);
        let d3 = mollified_denominator(3, 0.2, 0.1);
        assert!((d3 - 1.2338286713286713).abs() < 1e-15);
        assert!((scaling_c_delta_eps(3, 0.2, 0.1, 1.0) - c3 / d3).abs() < 1e-12 * c3);
    }

    #[test]
    fn mollifier_branches() {
        let k = KernelParams::new(2, 0.2, 0.05, 1.0).unwrap();
        assert_eq!(k.mollifier(0.0), 1.0);
        assert_eq!(k.mollifier(0.2), 0.5);
        assert!((k.mollifier(0.25)).abs() < 1e-15);
        assert!((k.mollifier(0.15) - 1.0).abs() < 1e-15);
        assert_eq!(k.mollifier(0.4), 0.0);
        let s = KernelParams::new(2, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(s.mollifier(0.2), 1.0);
        assert_eq!(s.mollifier(0.2000001), 0.0);
    }

    #[test]
    fn gamma_examples() {
        let k = KernelParams::new(2, 0.2, 0.05, 1.0).unwrap();
        let x = [0.1, -0.3];
        assert_eq!(k.gamma_eps(&x, &x), k.c_delta_eps);
        assert!((k.gamma_eps(&[0.0, 0.0], &[0.2, 0.0]) - k.c_delta_eps / 2.0).abs() < 1e-12);
        assert_eq!(k.gamma_eps(&[0.0, 0.0], &[0.4, 0.0]), 0.0);
        let y = [0.25, -0.2];
        assert_eq!(k.gamma_eps(&x, &y), k.gamma_eps(&y, &x));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelParams::new(1, 0.2, 0.0, 1.0).is_err());
        assert!(KernelParams::new(2, 0.2, 0.2, 1.0).is_err());
        assert!(KernelParams::new(2, -0.2, 0.0, 1.0).is_err());
        assert!(KernelParams::new(2, 0.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn converges_pointwise_to_sharp_kernel() {
        let d = 0.17;
        let mut prev = f64::INFINITY;
        let mut eps = 0.1;
        for _ in 0..8 {
            let k = KernelParams::new(2, 0.2, eps, 1.0).unwrap();
            let gap = (k.gamma_dist(d) - k.c_delta).abs();
            assert!(gap <= prev);
            prev = gap;
            eps /= 2.0;
        }
        // Inside the core the gap is C_{δ,ε} − C_δ = O(ε).
        assert!(prev < 1e-2 * scaling_c_delta(2, 0.2, 1.0));
    }
}
